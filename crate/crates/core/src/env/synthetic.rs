//! Random synthetic MDPs and agreeing policy sets.
//!
//! Rewards are i.i.d. uniform on [0, 1]; transition rows are uniform draws
//! normalized to sum to 1, with the final time step forced to the terminal
//! sink. Generation is a pure function of the generator seed, using the same
//! splitmix64 core as seed derivation under distinct domain tags.

use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp};
use crate::rng::keyed_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub generator_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_states: 7,
            num_actions: 4,
            horizon: 20,
            generator_seed: 0,
        }
    }
}

/// Generates the MDP for `spec`. Deterministic in the generator seed.
pub fn generate_mdp(spec: &SyntheticSpec) -> TabularMdp {
    let (s_count, a_count, h) = (spec.num_states, spec.num_actions, spec.horizon);
    let seed_str = spec.generator_seed.to_string();
    let mut rng = keyed_stream(&["synthetic-mdp", &seed_str]);
    let width = s_count + 1;
    let mut transitions = vec![0.0; s_count * a_count * h * width];
    let mut rewards = vec![0.0; s_count * a_count * h];
    for s in 0..s_count {
        for a in 0..a_count {
            for t in 1..=h {
                let row = (s * a_count + a) * h + (t - 1);
                rewards[row] = rng.next_f64();
                let slice = &mut transitions[row * width..(row + 1) * width];
                if t == h {
                    slice[s_count] = 1.0;
                    continue;
                }
                let mut sum = 0.0;
                for p in slice[..s_count].iter_mut() {
                    *p = rng.next_f64();
                    sum += *p;
                }
                if sum <= 0.0 {
                    slice[0] = 1.0;
                    continue;
                }
                for p in slice[..s_count].iter_mut() {
                    *p /= sum;
                }
            }
        }
    }
    TabularMdp::new(s_count, a_count, h, 0, transitions, rewards)
        .expect("generated rows are normalized")
}

/// Generates `m` deterministic policies sharing one random suffix: actions
/// for `t > d` are common to the set, actions for `t <= d` are drawn
/// independently per policy. Prefixes are resampled (up to a bounded number
/// of attempts) to keep the set pairwise distinct when the space allows it;
/// otherwise duplicates are kept with a warning.
pub fn generate_agreeing_policies(
    spec: &SyntheticSpec,
    m: usize,
    d: usize,
    generator_seed: u64,
) -> Result<Vec<Policy>> {
    if m == 0 {
        return Err(Error::Config("policy set must be non-empty".into()));
    }
    if d > spec.horizon {
        return Err(Error::Config(format!(
            "agreement depth {d} exceeds horizon {}",
            spec.horizon
        )));
    }
    let (s_count, a_count, h) = (spec.num_states, spec.num_actions, spec.horizon);
    let seed_str = generator_seed.to_string();
    let mut rng = keyed_stream(&["synthetic-policies", &seed_str]);

    let mut suffix = vec![0usize; s_count * h];
    for t in (d + 1)..=h {
        for s in 0..s_count {
            suffix[s * h + (t - 1)] = rng.next_below(a_count);
        }
    }

    // Whether the prefix space is large enough for m distinct policies.
    let prefix_cells = s_count * d;
    let space: f64 = (a_count as f64).powi(prefix_cells as i32);
    let enough_room = space >= m as f64;

    let mut seen = std::collections::HashSet::new();
    let mut policies = Vec::with_capacity(m);
    for _ in 0..m {
        let mut attempts = 0;
        loop {
            let mut actions = suffix.clone();
            let mut prefix = Vec::with_capacity(prefix_cells);
            for t in 1..=d {
                for s in 0..s_count {
                    let a = rng.next_below(a_count);
                    actions[s * h + (t - 1)] = a;
                    prefix.push(a);
                }
            }
            attempts += 1;
            if !enough_room || seen.insert(prefix.clone()) || attempts > 64 {
                if attempts > 64 {
                    log::warn!("agreeing-policy generation kept a duplicate prefix");
                }
                policies.push(Policy::new(s_count, h, actions)?);
                break;
            }
        }
    }
    Ok(policies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::policies_agree_after;

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::default();
        assert_eq!(generate_mdp(&spec), generate_mdp(&spec));
        let a = generate_agreeing_policies(&spec, 10, 2, 5).unwrap();
        let b = generate_agreeing_policies(&spec, 10, 2, 5).unwrap();
        assert_eq!(a, b);
        // A different seed changes the MDP.
        let other = SyntheticSpec {
            generator_seed: 1,
            ..spec
        };
        assert_ne!(generate_mdp(&spec), generate_mdp(&other));
    }

    #[test]
    fn rows_are_normalized() {
        let spec = SyntheticSpec::default();
        let mdp = generate_mdp(&spec);
        for s in 0..spec.num_states {
            for a in 0..spec.num_actions {
                for t in 1..=spec.horizon {
                    let sum: f64 = mdp.transition_row(s, a, t).iter().sum();
                    assert!((sum - 1.0).abs() <= 1e-12);
                }
            }
        }
        // Final step points at the sink.
        for s in 0..spec.num_states {
            assert_eq!(
                mdp.point_successor(s, 0, spec.horizon),
                Some(spec.num_states)
            );
        }
    }

    #[test]
    fn rewards_look_uniform() {
        let spec = SyntheticSpec {
            num_states: 10,
            num_actions: 6,
            horizon: 30,
            generator_seed: 17,
        };
        let mdp = generate_mdp(&spec);
        let n = (spec.num_states * spec.num_actions * spec.horizon) as f64;
        let mean: f64 = mdp.rewards().iter().sum::<f64>() / n;
        // Uniform [0,1]: sd of the mean is 1/sqrt(12 n).
        let sigma = 1.0 / (12.0f64 * n).sqrt();
        assert!((mean - 0.5).abs() <= 5.0 * sigma, "mean {mean}");
    }

    #[test]
    fn policy_sets_agree_by_construction() {
        let spec = SyntheticSpec::default();
        let policies = generate_agreeing_policies(&spec, 100, 2, 9).unwrap();
        assert_eq!(policies.len(), 100);
        for i in 0..policies.len() {
            for j in (i + 1)..policies.len() {
                assert!(policies_agree_after(&policies[i], &policies[j], 2));
            }
        }
        // Generic distinctness: at least one pair disagrees at depth 1.
        let some_disagree = policies
            .iter()
            .skip(1)
            .any(|p| !policies_agree_after(&policies[0], p, 1));
        assert!(some_disagree);
    }

    #[test]
    fn single_policy_set_is_fine() {
        let spec = SyntheticSpec::default();
        let policies = generate_agreeing_policies(&spec, 1, 0, 3).unwrap();
        assert_eq!(policies.len(), 1);
    }
}
