use crate::error::{Error, Result};
use crate::Real;

/// Paired real observations, at least two rows, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample<T> {
    xs: Vec<T>,
    ys: Vec<T>,
}

impl<T: Real> PairedSample<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidConfig(format!(
                "paired sample columns differ in length ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::InsufficientSample {
                needed: 2,
                got: xs.len(),
            });
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("paired sample contains a non-finite value".into()));
        }
        Ok(PairedSample { xs, ys })
    }

    pub fn from_pairs(rows: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let (xs, ys) = rows.into_iter().unzip();
        PairedSample::new(xs, ys)
    }

    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn ys(&self) -> &[T] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    let n = T::from_usize(xs.len()).unwrap();
    xs.iter().copied().sum::<T>() / n
}

/// Bessel-corrected variance.
pub fn sample_variance<T: Real>(xs: &[T]) -> Result<T> {
    if xs.len() < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            got: xs.len(),
        });
    }
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Ok(ss / T::from_usize(xs.len() - 1).unwrap())
}

/// Product-moment correlation.
pub fn pearson<T: Real>(s: &PairedSample<T>) -> Result<T> {
    let mx = mean(&s.xs);
    let my = mean(&s.ys);
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in s.xs.iter().zip(&s.ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() {
        return Err(Error::UndefinedCorrelation("x"));
    }
    if syy == T::zero() {
        return Err(Error::UndefinedCorrelation("y"));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// 1-based ranks with ties replaced by the mean of the ranks they span.
/// The flag reports whether any tie occurred.
pub fn average_ranks<T: Real>(xs: &[T]) -> (Vec<T>, bool) {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).expect("finite values"));
    let mut ranks = vec![T::zero(); xs.len()];
    let mut ties = false;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            ties = true;
        }
        // ranks start+1 ..= end, averaged
        let avg = T::from_usize(start + 1 + end).unwrap() / T::from_u8(2).unwrap();
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    (ranks, ties)
}

/// Pearson correlation of average ranks, plus a tie flag.
pub fn spearman<T: Real>(s: &PairedSample<T>) -> Result<(T, bool)> {
    let (rx, tx) = average_ranks(&s.xs);
    let (ry, ty) = average_ranks(&s.ys);
    let ranked = PairedSample { xs: rx, ys: ry };
    Ok((pearson(&ranked)?, tx || ty))
}
