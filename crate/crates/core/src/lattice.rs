//! The 55-triple domain, value scales with ranks and gaps, and the
//! rank-reversal census between two aggregators.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregator::{all_sorted_triples, Aggregator, Score};
use crate::error::Result;
use crate::model::SeverityTriple;
use crate::Rational;

/// Every sorted nonzero triple over grades 0..=5, lexicographically ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleSet {
    triples: Vec<SeverityTriple>,
}

impl TripleSet {
    pub const LEN: usize = 55;

    pub fn as_slice(&self) -> &[SeverityTriple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &SeverityTriple) -> bool {
        self.triples.binary_search(t).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SeverityTriple> {
        self.triples.iter()
    }

    /// Number of unordered pairs of distinct triples.
    pub fn pair_count(&self) -> usize {
        self.len() * (self.len() - 1) / 2
    }
}

impl<'a> IntoIterator for &'a TripleSet {
    type Item = &'a SeverityTriple;
    type IntoIter = std::slice::Iter<'a, SeverityTriple>;
    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

pub fn enumerate_triples() -> TripleSet {
    TripleSet {
        triples: all_sorted_triples().filter(|t| !t.is_zero()).collect(),
    }
}

/// The distinct scores an aggregator reaches on the triple set, ranked
/// from 1 (lowest).
#[derive(Debug, Clone, Serialize)]
pub struct ValueLattice {
    pub aggregator: String,
    values: Vec<Score>,
    triples_of: Vec<Vec<SeverityTriple>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeEntry {
    pub rank: usize,
    pub value: Score,
    pub triples: Vec<SeverityTriple>,
}

impl ValueLattice {
    pub fn values(&self) -> &[Score] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// 1-based rank of a score, if it is achievable.
    pub fn rank_of(&self, score: Score) -> Option<usize> {
        self.values.binary_search(&score).ok().map(|i| i + 1)
    }

    pub fn value_at(&self, rank: usize) -> Option<Score> {
        rank.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn triples_of(&self, score: Score) -> &[SeverityTriple] {
        match self.values.binary_search(&score) {
            Ok(i) => &self.triples_of[i],
            Err(_) => &[],
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = LatticeEntry> + '_ {
        self.values
            .iter()
            .zip(&self.triples_of)
            .enumerate()
            .map(|(i, (&value, triples))| LatticeEntry {
                rank: i + 1,
                value,
                triples: triples.clone(),
            })
    }
}

pub fn build_lattice(agg: &Aggregator) -> Result<ValueLattice> {
    let mut by_value: BTreeMap<Score, Vec<SeverityTriple>> = BTreeMap::new();
    for t in &enumerate_triples() {
        by_value.entry(agg.aggregate(t)?).or_default().push(*t);
    }
    let (values, triples_of) = by_value.into_iter().unzip();
    Ok(ValueLattice {
        aggregator: agg.name(),
        values,
        triples_of,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gap {
    /// Rank of the lower value.
    pub rank: usize,
    pub value: Score,
    pub next: Score,
    pub gap: Score,
}

pub type GapProfile = Vec<Gap>;

/// Differences between consecutive achievable scores.
pub fn gaps(lattice: &ValueLattice) -> GapProfile {
    lattice
        .values
        .windows(2)
        .enumerate()
        .map(|(i, w)| Gap {
            rank: i + 1,
            value: w[0],
            next: w[1],
            gap: w[1] - w[0],
        })
        .collect()
}

/// A pair of triples ordered oppositely by two aggregators; `x < y`
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscordantPair {
    pub x: SeverityTriple,
    pub y: SeverityTriple,
    pub f_x: Score,
    pub f_y: Score,
    pub g_x: Score,
    pub g_y: Score,
}

/// Strict rank reversals between `f` and `g` over all 1485 unordered pairs
/// of distinct nonzero triples. Ties under either rule never count.
///
/// `count` tallies each reversed pair once per orientation, `(x, y)` and
/// `(y, x)`, against the 1485 unordered pairs; this is the convention that
/// yields the customary 84 (5.66%) for squares vs cubes. `unordered_count`
/// is the plain number of reversed pairs, equal to `discordant_pairs.len()`.
#[derive(Debug, Clone, Serialize)]
pub struct DiscordanceReport {
    pub f: String,
    pub g: String,
    pub total_pairs: usize,
    pub count: usize,
    pub unordered_count: usize,
    #[serde(serialize_with = "serialize_ratio")]
    pub fraction: Rational,
    pub percent: f64,
    pub discordant_pairs: Vec<DiscordantPair>,
}

fn serialize_ratio<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

pub fn discordance(f: &Aggregator, g: &Aggregator) -> Result<DiscordanceReport> {
    let triples = enumerate_triples();
    let scored: Vec<(SeverityTriple, Score, Score)> = triples
        .iter()
        .map(|t| Ok((*t, f.aggregate(t)?, g.aggregate(t)?)))
        .collect::<Result<_>>()?;

    let discordant_pairs: Vec<DiscordantPair> = (0..scored.len())
        .into_par_iter()
        .map(|i| {
            let (x, f_x, g_x) = scored[i];
            scored[i + 1..]
                .iter()
                .filter(|&&(_, f_y, g_y)| (f_x > f_y && g_x < g_y) || (f_x < f_y && g_x > g_y))
                .map(|&(y, f_y, g_y)| DiscordantPair {
                    x,
                    y,
                    f_x,
                    f_y,
                    g_x,
                    g_y,
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let total_pairs = triples.pair_count();
    let unordered_count = discordant_pairs.len();
    let count = 2 * unordered_count;
    let fraction = Rational::new(count as i64, total_pairs as i64);
    Ok(DiscordanceReport {
        f: f.name(),
        g: g.name(),
        total_pairs,
        count,
        unordered_count,
        fraction,
        percent: 100.0 * count as f64 / total_pairs as f64,
        discordant_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: u8, b: u8, c: u8) -> SeverityTriple {
        SeverityTriple::new(a, b, c).unwrap()
    }

    #[test]
    fn fifty_five_nonzero_triples() {
        let set = enumerate_triples();
        assert_eq!(set.len(), 55);
        assert_eq!(set.pair_count(), 1485);
        assert!(set.contains(&t(5, 5, 5)));
        assert!(set.contains(&t(1, 0, 0)));
        assert!(!set.contains(&SeverityTriple::ZERO));
        assert!(SeverityTriple::new(3, 4, 0).is_err());
        assert!(set.as_slice().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn iss_lattice_ranks() {
        let lat = build_lattice(&Aggregator::ISS).unwrap();
        assert_eq!(lat.len(), 44);
        assert_eq!(lat.value_at(28), Some(Score::integer(33)));
        assert_eq!(lat.value_at(29), Some(Score::integer(34)));
        assert_eq!(lat.rank_of(Score::integer(34)), Some(29));
        assert_eq!(lat.rank_of(Score::integer(7)), None);
        assert_eq!(lat.triples_of(Score::integer(34)), &[t(4, 3, 3), t(5, 3, 0)]);
        let covered: usize = lat.entries().map(|e| e.triples.len()).sum();
        assert_eq!(covered, 55);
    }

    #[test]
    fn cubes_injective_and_sum_consecutive() {
        assert_eq!(build_lattice(&Aggregator::CUBES).unwrap().len(), 55);
        let sum = build_lattice(&Aggregator::SUM).unwrap();
        let expected: Vec<_> = (1..=15).map(Score::integer).collect();
        assert_eq!(sum.values(), expected.as_slice());
        assert!(gaps(&sum).iter().all(|g| g.gap == Score::integer(1)));
    }

    #[test]
    fn iss_gaps_are_uneven() {
        let lat = build_lattice(&Aggregator::ISS).unwrap();
        let gp = gaps(&lat);
        let r50 = lat.rank_of(Score::integer(50)).unwrap();
        assert_eq!(gp[r50 - 1].next, Score::integer(51));
        assert_eq!(gp[r50 - 1].gap, Score::integer(1));
        assert_eq!(gp[r50].next, Score::integer(54));
        assert_eq!(gp[r50].gap, Score::integer(3));
        assert_eq!((gp[31].rank, gp[31].value, gp[31].next), (32, Score::integer(38), Score::integer(41)));
        assert_eq!(gp[31].gap, Score::integer(3));
        assert_eq!((gp[33].value, gp[33].next, gp[33].gap), (Score::integer(42), Score::integer(43), Score::integer(1)));
        assert!(gp.iter().all(|g| g.gap >= Score::integer(1)));
    }

    #[test]
    fn self_discordance_is_empty() {
        let r = discordance(&Aggregator::ISS, &Aggregator::ISS).unwrap();
        assert_eq!(r.count, 0);
        assert!(r.discordant_pairs.is_empty());
    }

    #[test]
    fn discordance_is_symmetric() {
        let fg = discordance(&Aggregator::ISS, &Aggregator::CUBES).unwrap();
        let gf = discordance(&Aggregator::CUBES, &Aggregator::ISS).unwrap();
        assert_eq!(fg.count, gf.count);
        for (a, b) in fg.discordant_pairs.iter().zip(&gf.discordant_pairs) {
            assert_eq!((a.x, a.y, a.f_x, a.g_x), (b.x, b.y, b.g_x, b.f_x));
        }
    }
}
