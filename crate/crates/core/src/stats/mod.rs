//! Cardinal and ordinal association measures.
//!
//! Everything here is generic over the floating scalar. Information
//! measures are plug-in estimates in bits over empirical frequencies.

mod correlation;
mod information;
mod permutation;

pub use correlation::{average_ranks, mean, pearson, sample_variance, spearman, PairedSample};
pub use information::{
    entropy_bits, joint_entropy_bits, mutual_information_bits, normalized_mi, DiscretePair,
};
pub use permutation::{permutation_pvalue, PermutationStatistic};

use std::hash::Hash;

use serde::Serialize;

use crate::error::Result;
use crate::Real;

/// Association of a score with an outcome, cardinal and ordinal views side
/// by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssociationStats<T> {
    pub n: usize,
    pub pearson: T,
    pub spearman: T,
    /// True when either coordinate has tied values, in which case the rank
    /// correlation uses average ranks.
    pub has_ties: bool,
    pub mi_bits: T,
    pub nmi: T,
    pub p_value: T,
    pub permutations: u64,
}

/// Computes every field of [`AssociationStats`]. `numeric` and `discrete`
/// describe the same rows; the permutation test shuffles the outcome
/// column of `discrete` under the mutual-information statistic.
pub fn association_stats<T, X, Y>(
    numeric: &PairedSample<T>,
    discrete: &DiscretePair<X, Y>,
    permutations: u64,
    seed: u64,
) -> Result<AssociationStats<T>>
where
    T: Real,
    X: Hash + Eq + Clone + Sync,
    Y: Hash + Eq + Clone + Sync,
{
    let pearson = pearson(numeric)?;
    let (spearman, has_ties) = spearman(numeric)?;
    let mi_bits = mutual_information_bits(discrete);
    let nmi = normalized_mi(discrete)?;
    let p_value = permutation_pvalue(discrete, PermutationStatistic::MutualInformation, permutations, seed)?;
    Ok(AssociationStats {
        n: numeric.len(),
        pearson,
        spearman,
        has_ties,
        mi_bits,
        nmi,
        p_value,
        permutations,
    })
}
