//! Scoring rules over severity triples.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SeverityTriple;
use crate::Rational;

/// An exact aggregate score. Power sums are integers; custom tables may
/// carry rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Score(Rational);

impl Score {
    pub fn integer(v: i64) -> Self {
        Score(Ratio::from_integer(v))
    }

    pub fn from_ratio(r: Rational) -> Self {
        Score(r)
    }

    pub fn ratio(&self) -> Rational {
        self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn to_integer(&self) -> Option<i64> {
        self.0.is_integer().then(|| self.0.to_integer())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts into any floating scalar.
    pub fn to_real<T: num_traits::Float>(&self) -> T {
        T::from(self.to_f64()).unwrap_or_else(T::nan)
    }
}

impl std::ops::Sub for Score {
    type Output = Score;
    fn sub(self, rhs: Score) -> Score {
        Score(self.0 - rhs.0)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.to_integer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Score {
    type Err = Error;

    /// Accepts integers, `p/q` fractions and finite decimals (`12.5`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidConfig(format!("`{s}` is not a score"));
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Ok(Score(Ratio::new(n, d)));
        }
        if let Some((whole, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = whole.starts_with('-');
            let whole: i64 = if whole.is_empty() || whole == "-" {
                0
            } else {
                whole.parse().map_err(|_| bad())?
            };
            let denom = 10i64.pow(frac.len() as u32);
            let frac: i64 = frac.parse().map_err(|_| bad())?;
            let magnitude = whole.abs() * denom + frac;
            let numer = if negative { -magnitude } else { magnitude };
            return Ok(Score(Ratio::new(numer, denom)));
        }
        s.parse::<i64>().map(Score::integer).map_err(|_| bad())
    }
}

impl Serialize for Score {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.to_integer() {
            Some(v) => serializer.serialize_i64(v),
            None => serializer.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(v) => Ok(Score::integer(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// All 56 sorted triples over grades 0..=5, (0,0,0) included, in
/// lexicographic order.
pub fn all_sorted_triples() -> impl Iterator<Item = SeverityTriple> {
    (0..=5u8).flat_map(|a| {
        (0..=a).flat_map(move |b| (0..=b).map(move |c| SeverityTriple::new(a, b, c).expect("sorted by construction")))
    })
}

/// Explicit score table for a scoring rule that has no closed form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CustomTable {
    name: String,
    scores: BTreeMap<SeverityTriple, Score>,
}

impl CustomTable {
    /// Rejects duplicate triples, negative scores and tables that decrease
    /// when a single component of the triple is raised. Completeness is
    /// checked separately by [`CustomTable::is_complete`].
    pub fn new(name: impl Into<String>, entries: impl IntoIterator<Item = (SeverityTriple, Score)>) -> Result<Self> {
        let name = name.into();
        let malformed = |reason: String| Error::MalformedAggregator {
            name: name.clone(),
            reason,
        };
        let mut scores = BTreeMap::new();
        for (t, s) in entries {
            if s.ratio() < Rational::zero() {
                return Err(malformed(format!("negative score {s} for {t}")));
            }
            if scores.insert(t, s).is_some() {
                return Err(malformed(format!("triple {t} listed twice")));
            }
        }
        for (&t, &s) in &scores {
            for up in covers(t) {
                if let Some(&next) = scores.get(&up) {
                    if next < s {
                        return Err(malformed(format!("not monotone: {t} scores {s} but {up} scores {next}")));
                    }
                }
            }
        }
        Ok(CustomTable { name, scores })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn get(&self, t: &SeverityTriple) -> Option<Score> {
        self.scores.get(t).copied()
    }

    pub fn is_complete(&self) -> bool {
        self.missing().is_empty()
    }

    pub fn missing(&self) -> Vec<SeverityTriple> {
        all_sorted_triples().filter(|t| !self.scores.contains_key(t)).collect()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Sorted triples obtained by raising exactly one component by one grade.
fn covers(t: SeverityTriple) -> impl Iterator<Item = SeverityTriple> {
    let [a, b, c] = t.values();
    [
        SeverityTriple::new(a + 1, b, c),
        SeverityTriple::new(a, b + 1, c),
        SeverityTriple::new(a, b, c + 1),
    ]
    .into_iter()
    .flatten()
}

/// A named scoring rule over severity triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Aggregator {
    /// `a^p + b^p + c^p`
    PowerSum(u32),
    Custom(CustomTable),
}

impl Aggregator {
    /// Largest exponent whose scores fit in an `i64`.
    pub const MAX_EXPONENT: u32 = 26;

    pub const SUM: Aggregator = Aggregator::PowerSum(1);
    pub const ISS: Aggregator = Aggregator::PowerSum(2);
    pub const CUBES: Aggregator = Aggregator::PowerSum(3);

    pub fn power_sum(p: u32) -> Result<Self> {
        let agg = Aggregator::PowerSum(p);
        agg.validate()?;
        Ok(agg)
    }

    pub fn custom(table: CustomTable) -> Result<Self> {
        let agg = Aggregator::Custom(table);
        agg.validate()?;
        Ok(agg)
    }

    /// Exponent in range for power sums; complete table for custom rules.
    pub fn validate(&self) -> Result<()> {
        match self {
            Aggregator::PowerSum(p) if (1..=Self::MAX_EXPONENT).contains(p) => Ok(()),
            Aggregator::PowerSum(p) => Err(Error::MalformedAggregator {
                name: self.name(),
                reason: format!("exponent {p} outside 1..={}", Self::MAX_EXPONENT),
            }),
            Aggregator::Custom(t) => {
                let missing = t.missing();
                if missing.is_empty() {
                    Ok(())
                } else {
                    Err(Error::MalformedAggregator {
                        name: t.name.clone(),
                        reason: format!(
                            "{} triple(s) missing, first {}",
                            missing.len(),
                            missing[0]
                        ),
                    })
                }
            }
        }
    }

    /// Machine name: `power:p` or the custom table's name.
    pub fn name(&self) -> String {
        match self {
            Aggregator::PowerSum(p) => format!("power:{p}"),
            Aggregator::Custom(t) => t.name.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Aggregator::PowerSum(1) => "sum".into(),
            Aggregator::PowerSum(2) => "sum of squares (ISS)".into(),
            Aggregator::PowerSum(3) => "sum of cubes".into(),
            other => other.name(),
        }
    }

    pub fn exponent(&self) -> Option<u32> {
        match self {
            Aggregator::PowerSum(p) => Some(*p),
            Aggregator::Custom(_) => None,
        }
    }

    /// Ordering used to break ties between equally good candidates:
    /// power sums by increasing exponent, then everything by name.
    pub fn tie_break_key(&self) -> (u8, u32, String) {
        match self {
            Aggregator::PowerSum(p) => (0, *p, self.name()),
            Aggregator::Custom(t) => (1, 0, t.name.clone()),
        }
    }

    pub fn aggregate(&self, t: &SeverityTriple) -> Result<Score> {
        match self {
            Aggregator::PowerSum(p) => {
                self.validate()?;
                let total: i64 = t.values().iter().map(|&g| i64::from(g).pow(*p)).sum();
                Ok(Score::integer(total))
            }
            Aggregator::Custom(table) => table.get(t).ok_or_else(|| Error::MalformedAggregator {
                name: table.name.clone(),
                reason: format!("no score for {t}"),
            }),
        }
    }

    /// Scores for all 56 sorted triples, in lexicographic triple order.
    pub fn table(&self) -> Result<Vec<(SeverityTriple, Score)>> {
        all_sorted_triples()
            .map(|t| self.aggregate(&t).map(|s| (t, s)))
            .collect()
    }

    /// Applies `f` to every score and returns the result as a custom table.
    pub fn map_scores(&self, name: impl Into<String>, f: impl Fn(Score) -> Score) -> Result<Aggregator> {
        let entries = self.table()?.into_iter().map(|(t, s)| (t, f(s)));
        Aggregator::custom(CustomTable::new(name, entries)?)
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    /// Parses `power:p` and the aliases `sum`, `iss`, `cubes`. Custom
    /// tables need a file and are resolved by [`crate::io::parse_aggregator`].
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "sum" => return Ok(Aggregator::SUM),
            "iss" | "squares" => return Ok(Aggregator::ISS),
            "cubes" => return Ok(Aggregator::CUBES),
            _ => {}
        }
        let p = s
            .strip_prefix("power:")
            .ok_or_else(|| Error::InvalidConfig(format!("unknown aggregator `{s}` (expected power:p or custom:path)")))?;
        let p: u32 = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("`{p}` is not a positive integer exponent")))?;
        Aggregator::power_sum(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: u8, b: u8, c: u8) -> SeverityTriple {
        SeverityTriple::new(a, b, c).unwrap()
    }

    #[test]
    fn power_sums_on_printed_rows() {
        assert_eq!(Aggregator::ISS.aggregate(&t(4, 3, 3)).unwrap(), Score::integer(34));
        assert_eq!(Aggregator::CUBES.aggregate(&t(5, 4, 3)).unwrap(), Score::integer(216));
        assert_eq!(Aggregator::SUM.aggregate(&t(5, 4, 3)).unwrap(), Score::integer(12));
        assert_eq!(Aggregator::ISS.aggregate(&t(5, 5, 5)).unwrap(), Score::integer(75));
    }

    #[test]
    fn iss_range_is_zero_to_seventy_five() {
        let scores: Vec<_> = Aggregator::ISS.table().unwrap().into_iter().map(|(_, s)| s).collect();
        assert_eq!(scores.len(), 56);
        assert_eq!(*scores.iter().min().unwrap(), Score::integer(0));
        assert_eq!(*scores.iter().max().unwrap(), Score::integer(75));
    }

    #[test]
    fn exponent_bounds() {
        assert!(Aggregator::power_sum(0).is_err());
        assert!(Aggregator::power_sum(27).is_err());
        let top = Aggregator::power_sum(26).unwrap();
        assert!(top.aggregate(&t(5, 5, 5)).is_ok());
        assert!(Aggregator::PowerSum(0).aggregate(&t(1, 0, 0)).is_err());
    }

    #[test]
    fn custom_table_lookup_and_missing_triple() {
        let partial = CustomTable::new("half", [(t(1, 0, 0), Score::integer(1))]).unwrap();
        assert!(!partial.is_complete());
        assert_eq!(partial.missing().len(), 55);
        let agg = Aggregator::Custom(partial.clone());
        assert_eq!(agg.aggregate(&t(1, 0, 0)).unwrap(), Score::integer(1));
        assert!(matches!(agg.aggregate(&t(2, 0, 0)), Err(Error::MalformedAggregator { .. })));
        assert!(Aggregator::custom(partial).is_err());
    }

    #[test]
    fn custom_table_rejects_decreasing_scores() {
        let err = CustomTable::new(
            "bad",
            [(t(2, 0, 0), Score::integer(5)), (t(2, 1, 0), Score::integer(4))],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not monotone"));
        assert!(CustomTable::new("dup", [(t(1, 0, 0), Score::integer(1)), (t(1, 0, 0), Score::integer(2))]).is_err());
        assert!(CustomTable::new("neg", [(t(1, 0, 0), Score::integer(-1))]).is_err());
    }

    #[test]
    fn map_scores_builds_complete_custom_rule() {
        let doubled = Aggregator::ISS.map_scores("double", |s| Score::from_ratio(s.ratio() * 2)).unwrap();
        assert_eq!(doubled.aggregate(&t(4, 3, 3)).unwrap(), Score::integer(68));
        assert_eq!(doubled.name(), "double");
    }

    #[test]
    fn score_parsing_is_exact() {
        assert_eq!("12.5".parse::<Score>().unwrap(), Score::from_ratio(Ratio::new(25, 2)));
        assert_eq!("25/2".parse::<Score>().unwrap().to_string(), "25/2");
        assert_eq!("34".parse::<Score>().unwrap().to_string(), "34");
        assert_eq!("-0.5".parse::<Score>().unwrap(), Score::from_ratio(Ratio::new(-1, 2)));
        assert!("1/0".parse::<Score>().is_err());
        assert!("x".parse::<Score>().is_err());
    }

    #[test]
    fn aggregator_specs() {
        assert_eq!("power:2".parse::<Aggregator>().unwrap(), Aggregator::ISS);
        assert_eq!("cubes".parse::<Aggregator>().unwrap(), Aggregator::CUBES);
        assert!("power:x".parse::<Aggregator>().is_err());
        assert!("median".parse::<Aggregator>().is_err());
    }

    #[test]
    fn there_are_56_sorted_triples() {
        let all: Vec<_> = all_sorted_triples().collect();
        assert_eq!(all.len(), 56);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }
}
