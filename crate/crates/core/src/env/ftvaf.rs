//! Fixed-term variable annuity fund: a pooled retirement product paying
//! variable annuities over a fixed term, exposed to market risk (geometric
//! Brownian motion) and mortality risk (Poisson thinning of age cohorts).
//!
//! Each year the manager pays out a fraction of the corpus (the reward),
//! deceased members' beneficiaries receive their proportional share, and the
//! remainder grows by a lognormal factor. Falling below the solvency
//! threshold before the end of the term draws a large penalty; wealth left
//! over at the end draws a small one.
//!
//! Market and mortality rates never depend on the action taken, so all noise
//! is keyed purely by (year, simulation index) plus the scheme-dependent
//! candidate key: predetermined sequences in the common-random-numbers
//! sense.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::seeding::{ChanceSource, SeedScheme};

/// Bundled mortality table.
pub const DEFAULT_MORTALITY_TABLE: &str = include_str!("../../data/mortality_2003.txt");

/// Annual mortality hazard per integer age; clamps outside the table range.
#[derive(Debug, Clone, PartialEq)]
pub struct MortalityTable {
    base_age: u32,
    rates: Vec<f64>,
}

impl MortalityTable {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<(u32, f64)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let age: u32 = parts
                .next()
                .ok_or_else(|| Error::Parse("missing age".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad age: {e}")))?;
            let rate: f64 = parts
                .next()
                .ok_or_else(|| Error::Parse("missing rate".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad rate: {e}")))?;
            if rate < 0.0 {
                return Err(Error::Parse(format!("negative rate at age {age}")));
            }
            rows.push((age, rate));
        }
        if rows.is_empty() {
            return Err(Error::Parse("mortality table is empty".into()));
        }
        let base_age = rows[0].0;
        for (i, &(age, _)) in rows.iter().enumerate() {
            if age != base_age + i as u32 {
                return Err(Error::Parse(format!(
                    "mortality ages must be contiguous; found {age} at row {i}"
                )));
            }
        }
        Ok(MortalityTable {
            base_age,
            rates: rows.into_iter().map(|(_, r)| r).collect(),
        })
    }

    pub fn bundled() -> Self {
        Self::from_text(DEFAULT_MORTALITY_TABLE).expect("bundled table parses")
    }

    pub fn rate(&self, age: u32) -> f64 {
        let idx = age.saturating_sub(self.base_age) as usize;
        self.rates[idx.min(self.rates.len() - 1)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtvafParams {
    pub drift: f64,
    pub volatility: f64,
    pub horizon: usize,
    /// Insolvency when wealth drops below this fraction of the corpus,
    /// relative to the surviving fraction.
    pub solvency_threshold: f64,
    /// C1, scales the insolvency penalty.
    pub penalty_scale: f64,
    /// C2, scales the leftover-wealth penalty at the end of the term.
    pub terminal_scale: f64,
    /// Number of members backing the Poisson thinning.
    pub population: usize,
    pub min_age: u32,
    pub max_age: u32,
    pub mortality: MortalityTable,
    /// Number of candidate payout fractions, evenly spaced over [0, 1].
    pub payout_grid: usize,
    /// Constant payout fraction of the rollout policy.
    pub rollout_fraction: f64,
}

impl Default for FtvafParams {
    fn default() -> Self {
        FtvafParams {
            drift: 0.15,
            volatility: 0.2,
            horizon: 20,
            solvency_threshold: 0.05,
            penalty_scale: 5.0,
            terminal_scale: 0.03,
            population: 1000,
            min_age: 60,
            max_age: 70,
            mortality: MortalityTable::bundled(),
            payout_grid: 101,
            rollout_fraction: 0.11,
        }
    }
}

impl FtvafParams {
    fn validate(&self) -> Result<()> {
        if self.volatility <= 0.0 {
            return Err(Error::Config("volatility must be positive".into()));
        }
        if self.horizon == 0 || self.population == 0 || self.payout_grid == 0 {
            return Err(Error::Config(
                "horizon, population, payout_grid must be positive".into(),
            ));
        }
        if self.min_age > self.max_age {
            return Err(Error::Config("min_age must not exceed max_age".into()));
        }
        Ok(())
    }
}

/// Fund state: corpus (fraction of the initial amount), elapsed years,
/// surviving fraction, and the age distribution of survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct FtvafState {
    pub wealth: f64,
    pub year: usize,
    pub alive_fraction: f64,
    /// Population proportion per integer age, starting at `base_age`.
    pub base_age: u32,
    pub age_fractions: Vec<f64>,
}

impl FtvafState {
    pub fn alive_from_ages(&self) -> f64 {
        self.age_fractions.iter().sum()
    }
}

/// Keyed access to one step's noise: a standard normal for market growth and
/// Poisson death counts per age cohort. Outcomes depend only on the chance
/// source's (salt, year, simulation index, policy key), never on fund state.
pub struct ScenarioNoise<'a> {
    pub chance: &'a ChanceSource<'a>,
}

impl ScenarioNoise<'_> {
    pub fn gaussian(&self) -> f64 {
        self.chance.stream("seq", "z").next_standard_normal()
    }

    pub fn death_count(&self, age: u32, rate: f64, tag_buf: &mut String) -> u64 {
        tag_buf.clear();
        let _ = write!(tag_buf, "mort:{age}");
        self.chance.stream("seq", tag_buf).next_poisson(rate)
    }
}

/// Whether the fund is insolvent at the start of a year within the term.
pub fn is_insolvent(params: &FtvafParams, state: &FtvafState) -> bool {
    state.year <= params.horizon
        && state.wealth < params.solvency_threshold * state.alive_fraction
}

/// Advances the fund by one year.
///
/// Ordering within the step: an insolvency entry check (penalty
/// `l_h (h - (H+1)) C1`, episode ends), else annuity payout `W_h * a`
/// (the reward), mortality thinning with a one-year age shift, the
/// proportional beneficiary deduction via the survivor ratio, and lognormal
/// growth. Completing year `H` ends the episode with the leftover-wealth
/// penalty `W * C2` subtracted from the reward.
pub fn ftvaf_step(
    params: &FtvafParams,
    state: &FtvafState,
    action_fraction: f64,
    noise: &ScenarioNoise,
) -> Result<(FtvafState, f64, bool)> {
    params.validate()?;
    if !(0.0..=1.0).contains(&action_fraction) {
        return Err(Error::Domain(format!(
            "payout fraction {action_fraction} outside [0, 1]"
        )));
    }
    if state.year > params.horizon {
        return Err(Error::Config("stepping past the end of the term".into()));
    }
    let h = state.year;
    let h_plus = (params.horizon + 1) as f64;

    if is_insolvent(params, state) {
        let penalty = state.alive_fraction * (h as f64 - h_plus) * params.penalty_scale;
        let mut terminal = state.clone();
        terminal.year = params.horizon + 1;
        return Ok((terminal, penalty, true));
    }

    let payout = state.wealth * action_fraction;
    let mut reward = payout;

    // Mortality: survivors of age x move to age x + 1.
    let mut next_ages = vec![0.0; state.age_fractions.len()];
    let scale = params.population as f64;
    let mut tag_buf = String::new();
    for (i, &frac) in state.age_fractions.iter().enumerate() {
        if frac <= 0.0 {
            continue;
        }
        let age = state.base_age + i as u32;
        let group = frac * scale;
        let rate = group * params.mortality.rate(age);
        let deaths = (noise.death_count(age, rate, &mut tag_buf) as f64).min(group);
        let survivors = frac * (1.0 - deaths / group);
        if i + 1 < next_ages.len() {
            next_ages[i + 1] = survivors;
        } else {
            // Top bucket absorbs; only reachable if the vector was sized
            // too small for the horizon.
            next_ages[i] += survivors;
        }
    }
    let alive_next: f64 = next_ages.iter().sum();

    let survivor_ratio = if state.alive_fraction > 0.0 {
        alive_next / state.alive_fraction
    } else {
        0.0
    };
    let z = noise.gaussian();
    let growth =
        ((params.drift - params.volatility * params.volatility / 2.0) + params.volatility * z)
            .exp();
    let wealth_next = state.wealth * (1.0 - action_fraction) * survivor_ratio * growth;

    let next = FtvafState {
        wealth: wealth_next,
        year: h + 1,
        alive_fraction: alive_next,
        base_age: state.base_age,
        age_fractions: next_ages,
    };
    let terminated = next.year > params.horizon;
    if terminated {
        reward -= wealth_next * params.terminal_scale;
    }
    Ok((next, reward, terminated))
}

/// Fresh fund: full corpus, year 1, member ages drawn uniformly from
/// `[min_age, max_age]`.
pub fn init_population(params: &FtvafParams, seed: u64) -> FtvafState {
    let mut rng = SplitMix64::new(seed);
    let span = (params.max_age - params.min_age + 1) as usize;
    // Size the vector so a full term of age shifts stays in range.
    let mut counts = vec![0u64; span + params.horizon + 1];
    for _ in 0..params.population {
        counts[rng.next_below(span)] += 1;
    }
    let age_fractions: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / params.population as f64)
        .collect();
    FtvafState {
        wealth: 1.0,
        year: 1,
        alive_fraction: 1.0,
        base_age: params.min_age,
        age_fractions,
    }
}

/// Simulates one candidate sequence (first action `first_fraction`, then the
/// constant rollout payout) to the end of the episode.
fn simulate_candidate(
    params: &FtvafParams,
    state: &FtvafState,
    first_fraction: f64,
    scheme: SeedScheme,
    root_key: &str,
    simulation_index: u64,
    plan_salt: &str,
) -> Result<f64> {
    let mut total = 0.0;
    let mut current = state.clone();
    let mut depth = 1usize;
    loop {
        let chance = ChanceSource {
            run_salt: plan_salt,
            time: current.year,
            simulation_index,
            policy_key: scheme.includes_policy_key(depth).then_some(root_key),
        };
        let action = if depth == 1 {
            first_fraction
        } else {
            params.rollout_fraction
        };
        let (next, reward, done) =
            ftvaf_step(params, &current, action, &ScenarioNoise { chance: &chance })?;
        total += reward;
        if done {
            return Ok(total);
        }
        current = next;
        depth += 1;
    }
}

/// Single-step lookahead over the payout grid: every candidate fraction is
/// simulated `n` times to the end of the term with the constant-payout
/// rollout after the first step, and the candidate with the best average
/// return wins (lowest index on ties). Under the independent regime each
/// candidate consumes its own noise sequences; under the dependent regime
/// all candidates share them; depth-dependent gives each candidate its own
/// first-year noise only.
pub fn lookahead_policy(
    params: &FtvafParams,
    state: &FtvafState,
    n: usize,
    scheme: SeedScheme,
    plan_salt: &str,
) -> Result<f64> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let grid = params.payout_grid;
    let mut best_idx = 0usize;
    let mut best_mean = f64::NEG_INFINITY;
    let mut root_key = String::new();
    for k in 0..grid {
        let fraction = if grid == 1 {
            0.0
        } else {
            k as f64 / (grid - 1) as f64
        };
        root_key.clear();
        let _ = write!(root_key, "{k}");
        let mut sum = 0.0;
        for j in 1..=n {
            sum += simulate_candidate(
                params,
                state,
                fraction,
                scheme,
                &root_key,
                j as u64,
                plan_salt,
            )?;
        }
        let mean = sum / n as f64;
        if mean > best_mean {
            best_mean = mean;
            best_idx = k;
        }
    }
    Ok(if grid == 1 {
        0.0
    } else {
        best_idx as f64 / (grid - 1) as f64
    })
}

/// Plays one full episode: replan with the lookahead every year, step the
/// real fund under `salt:real` noise (disjoint from all planning draws).
pub fn run_ftvaf_episode(
    params: &FtvafParams,
    scheme: SeedScheme,
    n: usize,
    run_salt: &str,
) -> Result<f64> {
    let init_seed = crate::rng::keyed_stream(&[run_salt, "init"]).next_u64();
    let mut state = init_population(params, init_seed);
    let real_salt = format!("{run_salt}:real");
    let mut total = 0.0;
    loop {
        let action = if is_insolvent(params, &state) {
            0.0 // the step applies the penalty; no real choice exists
        } else {
            let plan_salt = format!("{run_salt}:plan:{}", state.year);
            lookahead_policy(params, &state, n, scheme, &plan_salt)?
        };
        let chance = ChanceSource {
            run_salt: &real_salt,
            time: state.year,
            simulation_index: 0,
            policy_key: None,
        };
        let (next, reward, done) =
            ftvaf_step(params, &state, action, &ScenarioNoise { chance: &chance })?;
        total += reward;
        if done {
            return Ok(total);
        }
        state = next;
    }
}
