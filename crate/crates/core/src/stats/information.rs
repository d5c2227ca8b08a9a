use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::Real;

/// Paired discrete observations over arbitrary symbol types.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePair<X, Y> {
    xs: Vec<X>,
    ys: Vec<Y>,
}

impl<X, Y> DiscretePair<X, Y> {
    pub fn new(xs: Vec<X>, ys: Vec<Y>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Empty("discrete pair has no rows"));
        }
        if xs.len() != ys.len() {
            return Err(Error::InvalidConfig(format!(
                "discrete pair columns differ in length ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        Ok(DiscretePair { xs, ys })
    }

    pub fn from_pairs(rows: impl IntoIterator<Item = (X, Y)>) -> Result<Self> {
        let (xs, ys) = rows.into_iter().unzip();
        DiscretePair::new(xs, ys)
    }

    pub fn xs(&self) -> &[X] {
        &self.xs
    }

    pub fn ys(&self) -> &[Y] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn swapped(&self) -> DiscretePair<Y, X>
    where
        X: Clone,
        Y: Clone,
    {
        DiscretePair {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
        }
    }
}

/// Plug-in entropy of a count histogram. Counts are summed in sorted order
/// so equal histograms give bit-identical results whatever the symbol order.
pub(crate) fn entropy_of_counts<T: Real>(counts: &mut [usize]) -> T {
    counts.sort_unstable();
    let n: usize = counts.iter().sum();
    if n == 0 {
        return T::zero();
    }
    let n = T::from_usize(n).unwrap();
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = T::from_usize(c).unwrap() / n;
            -p * p.log2()
        })
        .fold(T::zero(), |acc, v| acc + v);
    h.max(T::zero())
}

fn histogram<S: Hash + Eq>(symbols: impl Iterator<Item = S>) -> Vec<usize> {
    let mut counts: HashMap<S, usize> = HashMap::new();
    for s in symbols {
        *counts.entry(s).or_insert(0) += 1;
    }
    counts.into_values().collect()
}

/// `-Σ p log2 p` over empirical frequencies; 0 for an empty input.
pub fn entropy_bits<T: Real, S: Hash + Eq>(xs: &[S]) -> T {
    entropy_of_counts(&mut histogram(xs.iter()))
}

pub fn joint_entropy_bits<T: Real, X: Hash + Eq, Y: Hash + Eq>(s: &DiscretePair<X, Y>) -> T {
    entropy_of_counts(&mut histogram(s.xs.iter().zip(&s.ys)))
}

/// `H(X) + H(Y) - H(X,Y)`, clamped at zero against rounding.
pub fn mutual_information_bits<T: Real, X: Hash + Eq, Y: Hash + Eq>(s: &DiscretePair<X, Y>) -> T {
    let hx: T = entropy_bits(&s.xs);
    let hy: T = entropy_bits(&s.ys);
    let hxy: T = joint_entropy_bits(s);
    (hx + hy - hxy).max(T::zero())
}

/// `2 MI / (H(X) + H(Y))`, in `[0, 1]`.
pub fn normalized_mi<T: Real, X: Hash + Eq, Y: Hash + Eq>(s: &DiscretePair<X, Y>) -> Result<T> {
    let hx: T = entropy_bits(&s.xs);
    let hy: T = entropy_bits(&s.ys);
    let denom = hx + hy;
    if denom <= T::zero() {
        return Err(Error::UndefinedNmi);
    }
    let mi: T = mutual_information_bits(s);
    let two = T::one() + T::one();
    Ok((two * mi / denom).max(T::zero()).min(T::one()))
}
