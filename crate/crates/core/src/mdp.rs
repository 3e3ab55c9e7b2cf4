//! Finite-horizon tabular MDPs, exact policy evaluation, and the backward
//! process of sampling deterministic MDPs.
//!
//! A `TabularMdp` holds dense per-time-step transition rows over the real
//! states plus a terminal sink (state index `num_states`). All transitions at
//! the final time step lead to the sink; the sink has value zero at every
//! time step. Types are immutable after construction, so shared references
//! may be evaluated concurrently.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::seeding::sample_index;

/// Row sums must match 1 to this tolerance after construction.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;
/// Rows off by at most this much are renormalized; worse rows are rejected.
pub const PROB_RENORM_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    start_state: usize,
    /// Row-major: `[(s * A + a) * H + (t-1)]` rows of `S + 1` probabilities,
    /// sink last.
    transitions: Vec<f64>,
    /// `[(s * A + a) * H + (t-1)]` rewards.
    rewards: Vec<f64>,
}

impl TabularMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        start_state: usize,
        mut transitions: Vec<f64>,
        rewards: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::Config(
                "num_states, num_actions, horizon must be positive".into(),
            ));
        }
        if start_state >= num_states {
            return Err(Error::Config(format!(
                "start state {start_state} out of range for {num_states} states"
            )));
        }
        let rows = num_states * num_actions * horizon;
        let width = num_states + 1;
        if transitions.len() != rows * width {
            return Err(Error::Config(format!(
                "transition table has {} entries, expected {}",
                transitions.len(),
                rows * width
            )));
        }
        if rewards.len() != rows {
            return Err(Error::Config(format!(
                "reward table has {} entries, expected {rows}",
                rewards.len()
            )));
        }
        for row in 0..rows {
            let slice = &mut transitions[row * width..(row + 1) * width];
            let mut sum = 0.0;
            for &p in slice.iter() {
                if !(p >= 0.0) {
                    return Err(Error::Config(format!(
                        "negative or NaN probability in row {row}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > PROB_RENORM_LIMIT {
                return Err(Error::Config(format!(
                    "row {row} sums to {sum}, outside renormalization limit"
                )));
            }
            if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                for p in slice.iter_mut() {
                    *p /= sum;
                }
            }
        }
        // Final time step: all mass on the sink.
        for s in 0..num_states {
            for a in 0..num_actions {
                let row = (s * num_actions + a) * horizon + (horizon - 1);
                let slice = &mut transitions[row * width..(row + 1) * width];
                if (slice[num_states] - 1.0).abs() > PROB_RENORM_LIMIT {
                    return Err(Error::Config(format!(
                        "transition ({s},{a},{horizon}) must point at the terminal sink"
                    )));
                }
                slice.fill(0.0);
                slice[num_states] = 1.0;
            }
        }
        Ok(TabularMdp {
            num_states,
            num_actions,
            horizon,
            start_state,
            transitions,
            rewards,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn start_state(&self) -> usize {
        self.start_state
    }

    /// Index of the terminal sink: one past the last real state.
    pub fn sink(&self) -> usize {
        self.num_states
    }

    #[inline]
    fn row(&self, state: usize, action: usize, t: usize) -> usize {
        debug_assert!(state < self.num_states && action < self.num_actions);
        debug_assert!(t >= 1 && t <= self.horizon);
        (state * self.num_actions + action) * self.horizon + (t - 1)
    }

    /// Distribution over `num_states + 1` successors (sink last) for `t` in
    /// `1..=H`.
    #[inline]
    pub fn transition_row(&self, state: usize, action: usize, t: usize) -> &[f64] {
        let width = self.num_states + 1;
        let row = self.row(state, action, t);
        &self.transitions[row * width..(row + 1) * width]
    }

    #[inline]
    pub fn reward(&self, state: usize, action: usize, t: usize) -> f64 {
        self.rewards[self.row(state, action, t)]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// True when every transition row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        let width = self.num_states + 1;
        self.transitions
            .chunks_exact(width)
            .all(|row| row.iter().any(|&p| p == 1.0))
    }

    /// Successor of a point-mass row; `None` when the row is stochastic.
    pub fn point_successor(&self, state: usize, action: usize, t: usize) -> Option<usize> {
        self.transition_row(state, action, t)
            .iter()
            .position(|&p| p == 1.0)
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.num_states != self.num_states || policy.horizon != self.horizon {
            return Err(Error::Config(format!(
                "policy shaped ({}, {}) does not match mdp ({}, {})",
                policy.num_states, policy.horizon, self.num_states, self.horizon
            )));
        }
        if let Some(&a) = policy.actions.iter().find(|&&a| a >= self.num_actions) {
            return Err(Error::Config(format!(
                "policy uses action {a}, mdp has {}",
                self.num_actions
            )));
        }
        Ok(())
    }
}

/// Deterministic time-dependent policy: one action per (state, time step).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    num_states: usize,
    horizon: usize,
    /// `[s * H + (t-1)]`.
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(num_states: usize, horizon: usize, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != num_states * horizon {
            return Err(Error::Config(format!(
                "policy table has {} entries, expected {}",
                actions.len(),
                num_states * horizon
            )));
        }
        Ok(Policy {
            num_states,
            horizon,
            actions,
        })
    }

    /// Policy taking the same action everywhere.
    pub fn constant(num_states: usize, horizon: usize, action: usize) -> Self {
        Policy {
            num_states,
            horizon,
            actions: vec![action; num_states * horizon],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn action(&self, state: usize, t: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.horizon);
        self.actions[state * self.horizon + (t - 1)]
    }

    pub fn set_action(&mut self, state: usize, t: usize, action: usize) {
        self.actions[state * self.horizon + (t - 1)] = action;
    }

    /// Canonical identity string: actions in time-major order, comma
    /// separated. Used as the policy component of seed keys.
    pub fn canonical_key(&self) -> String {
        let mut out = String::with_capacity(self.actions.len() * 2);
        for t in 1..=self.horizon {
            for s in 0..self.num_states {
                if !out.is_empty() {
                    out.push(',');
                }
                out.push_str(itoa(self.action(s, t)).as_str());
            }
        }
        out
    }
}

fn itoa(v: usize) -> String {
    v.to_string()
}

/// State values for `t` in `1..=H+1`; the last column is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    num_states: usize,
    horizon: usize,
    /// `[s * (H+1) + (t-1)]`.
    values: Vec<f64>,
}

impl ValueTable {
    /// Value of a real state, or 0 for the sink at any time step.
    #[inline]
    pub fn value(&self, state: usize, t: usize) -> f64 {
        debug_assert!(t >= 1 && t <= self.horizon + 1);
        if state >= self.num_states {
            return 0.0;
        }
        self.values[state * (self.horizon + 1) + (t - 1)]
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Exact policy evaluation by backward induction from `t = H`.
pub fn exact_value(mdp: &TabularMdp, policy: &Policy) -> Result<ValueTable> {
    mdp.check_policy(policy)?;
    let (s_count, h) = (mdp.num_states, mdp.horizon);
    let mut values = vec![0.0; s_count * (h + 1)];
    for t in (1..=h).rev() {
        for s in 0..s_count {
            let a = policy.action(s, t);
            let mut v = mdp.reward(s, a, t);
            let row = mdp.transition_row(s, a, t);
            for (next, &p) in row[..s_count].iter().enumerate() {
                if p > 0.0 {
                    v += p * values[next * (h + 1) + t];
                }
            }
            // Sink successors contribute zero.
            values[s * (h + 1) + (t - 1)] = v;
        }
    }
    Ok(ValueTable {
        num_states: s_count,
        horizon: h,
        values,
    })
}

/// Expected undiscounted return of `policy` from the start state.
pub fn utility(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    Ok(exact_value(mdp, policy)?.value(mdp.start_state, 1))
}

/// Return of `policy` on a deterministic MDP, by walking its single
/// trajectory. Cheaper than full backward induction inside sampling loops.
pub fn deterministic_return(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    mdp.check_policy(policy)?;
    let mut state = mdp.start_state;
    let mut total = 0.0;
    for t in 1..=mdp.horizon {
        if state >= mdp.num_states {
            break;
        }
        let a = policy.action(state, t);
        total += mdp.reward(state, a, t);
        state = mdp
            .point_successor(state, a, t)
            .ok_or_else(|| Error::Config("mdp is not deterministic".into()))?;
    }
    Ok(total)
}

/// Backward process: draw one successor for every (state, action, time step),
/// producing a deterministic MDP distributed as `M' ~ M`. Entries are sampled
/// in row-major `(s, a, t)` order, one stream draw each, including entries a
/// particular policy never reaches.
pub fn sample_deterministic(mdp: &TabularMdp, seed_source: &mut SplitMix64) -> TabularMdp {
    let width = mdp.num_states + 1;
    let mut transitions = vec![0.0; mdp.transitions.len()];
    for s in 0..mdp.num_states {
        for a in 0..mdp.num_actions {
            for t in 1..=mdp.horizon {
                let row = mdp.row(s, a, t);
                let src = &mdp.transitions[row * width..(row + 1) * width];
                let next = sample_index(src, seed_source.next_f64())
                    .expect("constructed rows are valid distributions");
                transitions[row * width + next] = 1.0;
            }
        }
    }
    TabularMdp {
        num_states: mdp.num_states,
        num_actions: mdp.num_actions,
        horizon: mdp.horizon,
        start_state: mdp.start_state,
        transitions,
        rewards: mdp.rewards.clone(),
    }
}

/// Composite MDP taking `m2`'s transitions for `t <= d` and `m1`'s for
/// `t > d`. Rewards must be shared.
pub fn splice_mdps(m2: &TabularMdp, m1: &TabularMdp, d: usize) -> Result<TabularMdp> {
    if m1.num_states != m2.num_states
        || m1.num_actions != m2.num_actions
        || m1.horizon != m2.horizon
        || m1.start_state != m2.start_state
    {
        return Err(Error::Config("spliced mdps must share shape".into()));
    }
    if d > m1.horizon {
        return Err(Error::Config(format!(
            "splice depth {d} exceeds horizon {}",
            m1.horizon
        )));
    }
    if m1.rewards != m2.rewards {
        return Err(Error::Config("spliced mdps must share a reward table".into()));
    }
    let width = m1.num_states + 1;
    let mut transitions = m1.transitions.clone();
    for s in 0..m1.num_states {
        for a in 0..m1.num_actions {
            for t in 1..=d {
                let row = m1.row(s, a, t);
                transitions[row * width..(row + 1) * width]
                    .copy_from_slice(&m2.transitions[row * width..(row + 1) * width]);
            }
        }
    }
    Ok(TabularMdp {
        num_states: m1.num_states,
        num_actions: m1.num_actions,
        horizon: m1.horizon,
        start_state: m1.start_state,
        transitions,
        rewards: m1.rewards.clone(),
    })
}

/// True when the policies take identical actions at every state for all
/// `t > d`.
pub fn policies_agree_after(p1: &Policy, p2: &Policy, d: usize) -> bool {
    if p1.num_states != p2.num_states || p1.horizon != p2.horizon {
        return false;
    }
    for t in (d + 1)..=p1.horizon {
        for s in 0..p1.num_states {
            if p1.action(s, t) != p2.action(s, t) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Plain-text serialization. Header line `S A H s1`, then one line per
// (s, a, t) in row-major order with the S+1 successor probabilities, then one
// line per (s, a, t) with the reward. Floats use Rust's shortest
// round-trippable formatting.
// ---------------------------------------------------------------------------

impl TabularMdp {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} {} {}\n",
            self.num_states, self.num_actions, self.horizon, self.start_state
        ));
        let width = self.num_states + 1;
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                for t in 1..=self.horizon {
                    let row = self.row(s, a, t);
                    out.push_str(&format!("{s} {a} {t}"));
                    for &p in &self.transitions[row * width..(row + 1) * width] {
                        out.push(' ');
                        out.push_str(&p.to_string());
                    }
                    out.push('\n');
                }
            }
        }
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                for t in 1..=self.horizon {
                    out.push_str(&format!(
                        "{s} {a} {t} {}\n",
                        self.rewards[self.row(s, a, t)]
                    ));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty mdp text".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad header token {tok:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if dims.len() != 4 {
            return Err(Error::Parse("header must be `S A H s1`".into()));
        }
        let (s_count, a_count, h, start) = (dims[0], dims[1], dims[2], dims[3]);
        let width = s_count + 1;
        let rows = s_count * a_count * h;
        let mut transitions = vec![0.0; rows * width];
        let mut rewards = vec![0.0; rows];

        let parse_prefix = |line: &str, expect: (usize, usize, usize)| -> Result<Vec<f64>> {
            let mut toks = line.split_whitespace();
            let mut next_idx = |name: &str| -> Result<usize> {
                toks.next()
                    .ok_or_else(|| Error::Parse(format!("missing {name}")))?
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad {name}: {e}")))
            };
            let (s, a, t) = (next_idx("state")?, next_idx("action")?, next_idx("time")?);
            if (s, a, t) != expect {
                return Err(Error::Parse(format!(
                    "expected entry {:?}, found {:?}",
                    expect,
                    (s, a, t)
                )));
            }
            toks.map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value {tok:?}: {e}")))
            })
            .collect()
        };

        for s in 0..s_count {
            for a in 0..a_count {
                for t in 1..=h {
                    let line = lines
                        .next()
                        .ok_or_else(|| Error::Parse("truncated transition block".into()))?;
                    let probs = parse_prefix(line, (s, a, t))?;
                    if probs.len() != width {
                        return Err(Error::Parse(format!(
                            "row ({s},{a},{t}) has {} probabilities, expected {width}",
                            probs.len()
                        )));
                    }
                    let row = (s * a_count + a) * h + (t - 1);
                    transitions[row * width..(row + 1) * width].copy_from_slice(&probs);
                }
            }
        }
        for s in 0..s_count {
            for a in 0..a_count {
                for t in 1..=h {
                    let line = lines
                        .next()
                        .ok_or_else(|| Error::Parse("truncated reward block".into()))?;
                    let vals = parse_prefix(line, (s, a, t))?;
                    if vals.len() != 1 {
                        return Err(Error::Parse(format!(
                            "reward line ({s},{a},{t}) must hold one value"
                        )));
                    }
                    rewards[(s * a_count + a) * h + (t - 1)] = vals[0];
                }
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after reward block".into()));
        }
        TabularMdp::new(s_count, a_count, h, start, transitions, rewards)
    }
}

/// Convenience builder for tests and fixtures: rows given as
/// `(state, action, t, successors)` where `successors` is a distribution over
/// `S + 1` states. Unspecified rows default to a point mass on the sink.
pub fn build_mdp(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    start_state: usize,
    rows: &[(usize, usize, usize, Vec<f64>)],
    rewards: &[(usize, usize, usize, f64)],
) -> Result<TabularMdp> {
    let width = num_states + 1;
    let count = num_states * num_actions * horizon;
    let mut transitions = vec![0.0; count * width];
    for chunk in transitions.chunks_exact_mut(width) {
        chunk[num_states] = 1.0;
    }
    for (s, a, t, dist) in rows {
        let row = (s * num_actions + a) * horizon + (t - 1);
        let slice = &mut transitions[row * width..(row + 1) * width];
        slice.fill(0.0);
        slice[..dist.len()].copy_from_slice(dist);
    }
    let mut reward_table = vec![0.0; count];
    for &(s, a, t, r) in rewards {
        reward_table[(s * num_actions + a) * horizon + (t - 1)] = r;
    }
    TabularMdp::new(
        num_states,
        num_actions,
        horizon,
        start_state,
        transitions,
        reward_table,
    )
}
