use std::collections::HashMap;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::information::{entropy_of_counts, DiscretePair};
use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationStatistic {
    MutualInformation,
    NormalizedMutualInformation,
}

fn encode<S: Hash + Eq + Clone>(symbols: &[S]) -> (Vec<u32>, usize) {
    let mut dict: HashMap<S, u32> = HashMap::new();
    let codes = symbols
        .iter()
        .map(|s| {
            let next = dict.len() as u32;
            *dict.entry(s.clone()).or_insert(next)
        })
        .collect();
    (codes, dict.len())
}

fn marginal_counts(codes: &[u32], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    for &c in codes {
        counts[c as usize] += 1;
    }
    counts
}

/// Joint entropy of two code columns; `scratch` is reused across trials.
fn joint_entropy<T: Real>(xs: &[u32], ys: &[u32], ky: usize, scratch: &mut Vec<u64>, counts: &mut Vec<usize>) -> T {
    scratch.clear();
    scratch.extend(xs.iter().zip(ys).map(|(&x, &y)| u64::from(x) * ky as u64 + u64::from(y)));
    scratch.sort_unstable();
    counts.clear();
    let mut run = 0usize;
    for (i, &code) in scratch.iter().enumerate() {
        run += 1;
        if i + 1 == scratch.len() || scratch[i + 1] != code {
            counts.push(run);
            run = 0;
        }
    }
    entropy_of_counts(counts)
}

/// Permutation-test p-value for association between the two columns.
///
/// The y column is shuffled `n_perms` times; trial `i` draws from a
/// ChaCha8 stream keyed by `(seed, i)`, so the result does not depend on
/// how trials are scheduled across threads. Uses the add-one estimator
/// `(1 + #{stat ≥ observed}) / (1 + n_perms)`, which is never zero.
pub fn permutation_pvalue<T, X, Y>(
    s: &DiscretePair<X, Y>,
    statistic: PermutationStatistic,
    n_perms: u64,
    seed: u64,
) -> Result<T>
where
    T: Real,
    X: Hash + Eq + Clone + Sync,
    Y: Hash + Eq + Clone + Sync,
{
    if n_perms == 0 {
        return Err(Error::InvalidConfig("at least one permutation is required".into()));
    }
    let (xs, kx) = encode(s.xs());
    let (ys, ky) = encode(s.ys());
    let hx: T = entropy_of_counts(&mut marginal_counts(&xs, kx));
    let hy: T = entropy_of_counts(&mut marginal_counts(&ys, ky));
    let denom = hx + hy;
    if statistic == PermutationStatistic::NormalizedMutualInformation && denom <= T::zero() {
        return Err(Error::UndefinedNmi);
    }
    // Both marginals are fixed under shuffling, so the statistic is a
    // decreasing function of the joint entropy alone; evaluating the same
    // expression keeps ties exact.
    let stat = |hxy: T| -> T {
        let mi = (hx + hy - hxy).max(T::zero());
        match statistic {
            PermutationStatistic::MutualInformation => mi,
            PermutationStatistic::NormalizedMutualInformation => (mi + mi) / denom,
        }
    };
    let observed = stat(joint_entropy(&xs, &ys, ky, &mut Vec::new(), &mut Vec::new()));

    let exceed: u64 = (0..n_perms)
        .into_par_iter()
        .map_init(
            || (ys.clone(), Vec::with_capacity(xs.len()), Vec::with_capacity(xs.len())),
            |(shuffled, scratch, counts), trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial);
                shuffled.copy_from_slice(&ys);
                shuffled.shuffle(&mut rng);
                u64::from(stat(joint_entropy(&xs, shuffled, ky, scratch, counts)) >= observed)
            },
        )
        .sum();

    Ok(T::from_u64(1 + exceed).unwrap() / T::from_u64(1 + n_perms).unwrap())
}
