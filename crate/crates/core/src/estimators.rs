//! Value-difference estimators over pairs of policies.
//!
//! Three estimators of `U(p1, M) - U(p2, M)` differ in how much randomness
//! the two evaluations share: `XI` evaluates each policy on its own sampled
//! MDP, `XD` evaluates both on one sampled MDP, and `XDD` shares samples only
//! from time step `d + 1` onwards, the regime in which it provably never has
//! more variance than `XI` when the policies agree after `d` steps.
//!
//! Each estimator has a backward realization (sample deterministic MDPs,
//! evaluate exactly) and a forward realization (seeded episode simulation);
//! the two are identically distributed. A full-support enumeration oracle
//! computes the exact variances for small MDPs.

use crate::error::{Error, Result};
use crate::mdp::{
    deterministic_return, policies_agree_after, sample_deterministic, splice_mdps, Policy,
    TabularMdp,
};
use crate::rng::SplitMix64;
use crate::seeding::{evaluate, SeedScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// Independent samples for each policy.
    XI,
    /// One shared sample for both policies.
    XD,
    /// Independent for the first `d` steps, shared afterwards.
    XDD(usize),
}

impl EstimatorKind {
    /// The seeding regime realizing this estimator as a forward process.
    pub fn scheme(&self) -> SeedScheme {
        match *self {
            EstimatorKind::XI => SeedScheme::Independent,
            EstimatorKind::XD => SeedScheme::Dependent,
            EstimatorKind::XDD(d) => SeedScheme::DepthDependent(d),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::XI => "XI",
            EstimatorKind::XD => "XD",
            EstimatorKind::XDD(_) => "XDD",
        }
    }
}

/// One draw of a value-difference estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateSample {
    pub value: f64,
    pub kind: EstimatorKind,
    pub simulation_index: u64,
}

/// Unbiased summary statistics of a batch of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n-1 denominator).
    pub variance: f64,
    pub std_error: f64,
}

impl EstimatorStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData {
                need: 2,
                got: values.len(),
            });
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let variance = ss / (n - 1.0);
        Ok(EstimatorStats {
            n: values.len(),
            mean,
            variance,
            std_error: (variance / n).sqrt(),
        })
    }

    /// Standard error of the sample variance itself, from the fourth central
    /// moment: var(s^2) = mu4/n - sigma^4 (n-3) / (n (n-1)).
    pub fn variance_std_error(values: &[f64]) -> Result<f64> {
        let stats = Self::from_values(values)?;
        let n = values.len() as f64;
        let mu4 = values
            .iter()
            .map(|v| {
                let d = v - stats.mean;
                d * d * d * d
            })
            .sum::<f64>()
            / n;
        let var_of_var =
            (mu4 / n - stats.variance * stats.variance * (n - 3.0) / (n * (n - 1.0))).max(0.0);
        Ok(var_of_var.sqrt())
    }
}

pub fn collect_stats(samples: &[EstimateSample]) -> Result<EstimatorStats> {
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    EstimatorStats::from_values(&values)
}

fn warn_on_agreement_violation(p1: &Policy, p2: &Policy, d: usize) {
    if !policies_agree_after(p1, p2, d) {
        log::warn!(
            "XDD depth {d}: policies do not agree after {d} steps; the estimator degrades to XI"
        );
    }
}

/// Backward realization: sample deterministic MDPs from `seed_source` and
/// difference their exact utilities.
pub fn draw_backward(
    mdp: &TabularMdp,
    p1: &Policy,
    p2: &Policy,
    kind: EstimatorKind,
    seed_source: &mut SplitMix64,
) -> Result<EstimateSample> {
    let value = match kind {
        EstimatorKind::XI => {
            let m1 = sample_deterministic(mdp, seed_source);
            let m2 = sample_deterministic(mdp, seed_source);
            deterministic_return(&m1, p1)? - deterministic_return(&m2, p2)?
        }
        EstimatorKind::XD => {
            let m1 = sample_deterministic(mdp, seed_source);
            deterministic_return(&m1, p1)? - deterministic_return(&m1, p2)?
        }
        EstimatorKind::XDD(d) => {
            warn_on_agreement_violation(p1, p2, d);
            let m1 = sample_deterministic(mdp, seed_source);
            let m2 = sample_deterministic(mdp, seed_source);
            let m3 = splice_mdps(&m2, &m1, d)?;
            deterministic_return(&m1, p1)? - deterministic_return(&m3, p2)?
        }
    };
    Ok(EstimateSample {
        value,
        kind,
        simulation_index: 0,
    })
}

/// Forward realization: two seeded episodes under the regime matching
/// `kind`, differenced.
pub fn draw_forward(
    mdp: &TabularMdp,
    p1: &Policy,
    p2: &Policy,
    kind: EstimatorKind,
    simulation_index: u64,
    run_salt: &str,
) -> Result<EstimateSample> {
    if let EstimatorKind::XDD(d) = kind {
        warn_on_agreement_violation(p1, p2, d);
    }
    let scheme = kind.scheme();
    let e1 = evaluate(mdp, p1, scheme, simulation_index, run_salt)?;
    let e2 = evaluate(mdp, p2, scheme, simulation_index, run_salt)?;
    Ok(EstimateSample {
        value: e1.total_return - e2.total_return,
        kind,
        simulation_index,
    })
}

/// The two-step MDP exhibiting negative covariance between policy utilities.
///
/// From the start state both actions move to `s2` or `s3` with probability
/// one half and no reward. At the final step action 0 pays `r0` from `s2` and
/// `r2` from `s3`; action 1 pays `r1` and `r3`. Returns the MDP together
/// with `p1` (action 0 everywhere) and `p2` (action 0 at the start state,
/// action 1 elsewhere).
pub fn counterexample_mdp(r0: f64, r1: f64, r2: f64, r3: f64) -> (TabularMdp, Policy, Policy) {
    let rows = vec![
        (0, 0, 1, vec![0.0, 0.5, 0.5, 0.0]),
        (0, 1, 1, vec![0.0, 0.5, 0.5, 0.0]),
        (1, 0, 1, vec![0.0, 1.0, 0.0, 0.0]),
        (1, 1, 1, vec![0.0, 1.0, 0.0, 0.0]),
        (2, 0, 1, vec![0.0, 0.0, 1.0, 0.0]),
        (2, 1, 1, vec![0.0, 0.0, 1.0, 0.0]),
    ];
    let rewards = vec![
        (1, 0, 2, r0),
        (1, 1, 2, r1),
        (2, 0, 2, r2),
        (2, 1, 2, r3),
    ];
    let mdp = crate::mdp::build_mdp(3, 2, 2, 0, &rows, &rewards)
        .expect("counterexample construction is static");
    let p1 = Policy::constant(3, 2, 0);
    let mut p2 = Policy::constant(3, 2, 1);
    p2.set_action(0, 1, 0);
    (mdp, p1, p2)
}

/// Closed form for `cov(U(p1, M'), U(p2, M'))` on the counterexample:
/// `(r0 - r2) (r1 - r3) / 4`.
pub fn analytic_counterexample_covariance(r0: f64, r1: f64, r2: f64, r3: f64) -> f64 {
    (r0 - r2) * (r1 - r3) / 4.0
}

// ---------------------------------------------------------------------------
// Exact enumeration oracle.
// ---------------------------------------------------------------------------

/// Exact estimator variances from full enumeration of the deterministic-MDP
/// support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactVariances {
    pub mean_difference: f64,
    pub var_xi: f64,
    pub var_xd: f64,
    pub var_xdd: f64,
}

#[derive(Clone)]
struct StochasticEntry {
    options: Vec<(usize, f64)>,
    in_prefix: bool,
}

struct SupportTable {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    start_state: usize,
    /// Point successor per row where the row is deterministic.
    fixed_next: Vec<Option<usize>>,
    /// Map row -> index into the assignment vector, for stochastic rows.
    slot_of_row: Vec<Option<usize>>,
    entries: Vec<StochasticEntry>,
}

impl SupportTable {
    fn build(mdp: &TabularMdp, d: usize) -> Self {
        let (s_count, a_count, h) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
        let rows = s_count * a_count * h;
        let mut fixed_next = vec![None; rows];
        let mut slot_of_row = vec![None; rows];
        let mut entries = Vec::new();
        for s in 0..s_count {
            for a in 0..a_count {
                for t in 1..=h {
                    let row = (s * a_count + a) * h + (t - 1);
                    let dist = mdp.transition_row(s, a, t);
                    let options: Vec<(usize, f64)> = dist
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(i, &p)| (i, p))
                        .collect();
                    if options.len() == 1 {
                        fixed_next[row] = Some(options[0].0);
                    } else {
                        slot_of_row[row] = Some(entries.len());
                        entries.push(StochasticEntry {
                            options,
                            in_prefix: t <= d,
                        });
                    }
                }
            }
        }
        SupportTable {
            num_states: s_count,
            num_actions: a_count,
            horizon: h,
            start_state: mdp.start_state(),
            fixed_next,
            slot_of_row,
            entries,
        }
    }

    /// Return of `policy` given successor choices for every stochastic row.
    fn walk(&self, mdp: &TabularMdp, policy: &Policy, assignment: &[usize]) -> f64 {
        let mut state = self.start_state;
        let mut total = 0.0;
        for t in 1..=self.horizon {
            if state >= self.num_states {
                break;
            }
            let a = policy.action(state, t);
            total += mdp.reward(state, a, t);
            let row = (state * self.num_actions + a) * self.horizon + (t - 1);
            state = match self.fixed_next[row] {
                Some(next) => next,
                None => {
                    let slot = self.slot_of_row[row].expect("row is stochastic");
                    self.entries[slot].options[assignment[slot]].0
                }
            };
        }
        total
    }
}

/// Odometer over the product of per-entry option sets, restricted to the
/// slots listed in `free`; other slots stay untouched.
fn for_each_assignment(
    entries: &[StochasticEntry],
    free: &[usize],
    assignment: &mut [usize],
    mut visit: impl FnMut(&mut [usize], f64),
) {
    fn recurse(
        entries: &[StochasticEntry],
        free: &[usize],
        pos: usize,
        prob: f64,
        assignment: &mut [usize],
        visit: &mut impl FnMut(&mut [usize], f64),
    ) {
        if pos == free.len() {
            visit(assignment, prob);
            return;
        }
        let slot = free[pos];
        for (choice, &(_, p)) in entries[slot].options.iter().enumerate() {
            assignment[slot] = choice;
            recurse(entries, free, pos + 1, prob * p, assignment, visit);
        }
    }
    recurse(entries, free, 0, 1.0, assignment, &mut visit);
}

/// Exact variances of the three estimators via enumeration over the joint
/// support of `(M1, M2)`. Only MDPs with a small support product are
/// feasible; the caller is rejected beyond `max_assignments` combinations.
pub fn exact_estimator_variances(
    mdp: &TabularMdp,
    p1: &Policy,
    p2: &Policy,
    d: usize,
    max_assignments: u64,
) -> Result<ExactVariances> {
    let table = SupportTable::build(mdp, d);
    let suffix_slots: Vec<usize> = (0..table.entries.len())
        .filter(|&i| !table.entries[i].in_prefix)
        .collect();
    let prefix_slots: Vec<usize> = (0..table.entries.len())
        .filter(|&i| table.entries[i].in_prefix)
        .collect();
    let count = |slots: &[usize]| -> u64 {
        slots
            .iter()
            .fold(1u64, |acc, &i| {
                acc.saturating_mul(table.entries[i].options.len() as u64)
            })
    };
    let total = count(&suffix_slots).saturating_mul(count(&prefix_slots));
    if total > max_assignments {
        return Err(Error::Config(format!(
            "support enumeration needs {total} assignments, cap is {max_assignments}"
        )));
    }

    let mut assignment = vec![0usize; table.entries.len()];
    // Moments over M' ~ M (single enumeration: prefix and suffix jointly).
    let (mut e1, mut e1sq, mut e2, mut e2sq, mut e12) = (0.0, 0.0, 0.0, 0.0, 0.0);
    // E over suffix of (E over prefix of U1) * (E over prefix of U2): the
    // cross term of XDD, since M1's prefix and M3's prefix are independent
    // while both share M1's suffix.
    let mut cross_dd = 0.0;
    for_each_assignment(
        &table.entries,
        &suffix_slots,
        &mut assignment,
        |assignment, p_suffix| {
            let mut cond1 = 0.0;
            let mut cond2 = 0.0;
            for_each_assignment(&table.entries, &prefix_slots, assignment, |a, p_prefix| {
                let u1 = table.walk(mdp, p1, a);
                let u2 = table.walk(mdp, p2, a);
                let w = p_suffix * p_prefix;
                e1 += w * u1;
                e1sq += w * u1 * u1;
                e2 += w * u2;
                e2sq += w * u2 * u2;
                e12 += w * u1 * u2;
                cond1 += p_prefix * u1;
                cond2 += p_prefix * u2;
            });
            cross_dd += p_suffix * cond1 * cond2;
        },
    );
    let var1 = e1sq - e1 * e1;
    let var2 = e2sq - e2 * e2;
    let cov_d = e12 - e1 * e2;
    let cov_dd = cross_dd - e1 * e2;
    Ok(ExactVariances {
        mean_difference: e1 - e2,
        var_xi: var1 + var2,
        var_xd: var1 + var2 - 2.0 * cov_d,
        var_xdd: var1 + var2 - 2.0 * cov_dd,
    })
}
