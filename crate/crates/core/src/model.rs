//! AIS data model: grades, body regions, profiles, injury lists and the
//! sorted severity triple every aggregator consumes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One AIS severity grade, 0 (no injury) through 5 (critical).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct RegionGrade(u8);

impl RegionGrade {
    pub const MAX: u8 = 5;
    pub const ZERO: RegionGrade = RegionGrade(0);

    pub fn new(value: u8) -> Result<Self> {
        match value {
            0..=5 => Ok(RegionGrade(value)),
            6 => Err(Error::UntreatableGrade),
            v => Err(Error::InvalidGrade(i64::from(v))),
        }
    }

    pub fn from_i64(value: i64) -> Result<Self> {
        match value {
            0..=6 => RegionGrade::new(value as u8),
            v => Err(Error::InvalidGrade(v)),
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = RegionGrade> {
        (0..=Self::MAX).map(RegionGrade)
    }
}

impl TryFrom<u8> for RegionGrade {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        RegionGrade::new(v)
    }
}

impl From<RegionGrade> for u8 {
    fn from(g: RegionGrade) -> u8 {
        g.0
    }
}

impl fmt::Display for RegionGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for RegionGrade {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v: i64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("`{s}` is not an integer grade")))?;
        RegionGrade::from_i64(v)
    }
}

/// The nine AIS body regions injuries are coded against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AisRegion {
    Head,
    Face,
    Neck,
    Thorax,
    Abdomen,
    Spine,
    UpperExtremities,
    LowerExtremities,
    External,
}

impl AisRegion {
    pub const ALL: [AisRegion; 9] = [
        AisRegion::Head,
        AisRegion::Face,
        AisRegion::Neck,
        AisRegion::Thorax,
        AisRegion::Abdomen,
        AisRegion::Spine,
        AisRegion::UpperExtremities,
        AisRegion::LowerExtremities,
        AisRegion::External,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AisRegion::Head => "head",
            AisRegion::Face => "face",
            AisRegion::Neck => "neck",
            AisRegion::Thorax => "thorax",
            AisRegion::Abdomen => "abdomen",
            AisRegion::Spine => "spine",
            AisRegion::UpperExtremities => "upper extremities",
            AisRegion::LowerExtremities => "lower extremities",
            AisRegion::External => "external",
        }
    }
}

impl fmt::Display for AisRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AisRegion {
    type Err = Error;

    /// Case-insensitive; `_` and `-` are accepted in place of spaces.
    fn from_str(s: &str) -> Result<Self> {
        let normalized = s
            .trim()
            .to_ascii_lowercase()
            .replace(['_', '-'], " ")
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        AisRegion::ALL
            .into_iter()
            .find(|r| r.name() == normalized)
            .ok_or_else(|| Error::UnknownRegion(s.to_string()))
    }
}

/// The six body regions the ISS computes its maxima over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssRegion {
    /// Head or neck
    R1,
    /// Face
    R2,
    /// Chest
    R3,
    /// Abdominal or pelvic contents
    R4,
    /// Extremities or pelvic girdle
    R5,
    /// External
    R6,
}

impl IssRegion {
    pub const ALL: [IssRegion; 6] = [
        IssRegion::R1,
        IssRegion::R2,
        IssRegion::R3,
        IssRegion::R4,
        IssRegion::R5,
        IssRegion::R6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_number(n: u8) -> Option<Self> {
        IssRegion::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }
}

/// Per-region grades over the six ISS regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct AisProfile {
    grades: [RegionGrade; 6],
}

impl AisProfile {
    pub fn new(grades: [RegionGrade; 6]) -> Self {
        AisProfile { grades }
    }

    pub fn from_values(values: [u8; 6]) -> Result<Self> {
        let mut grades = [RegionGrade::ZERO; 6];
        for (g, v) in grades.iter_mut().zip(values) {
            *g = RegionGrade::new(v)?;
        }
        Ok(AisProfile { grades })
    }

    pub fn grades(&self) -> &[RegionGrade; 6] {
        &self.grades
    }

    pub fn grade(&self, region: IssRegion) -> RegionGrade {
        self.grades[region.index()]
    }

    pub fn values(&self) -> [u8; 6] {
        self.grades.map(RegionGrade::value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Injury {
    pub region: AisRegion,
    pub grade: RegionGrade,
}

impl Injury {
    pub fn new(region: AisRegion, grade: RegionGrade) -> Self {
        Injury { region, grade }
    }
}

/// A patient's raw injury list; several injuries may share a region.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InjuryCase {
    pub case_id: String,
    pub injuries: Vec<Injury>,
}

impl InjuryCase {
    pub fn new(case_id: impl Into<String>, injuries: Vec<Injury>) -> Self {
        InjuryCase {
            case_id: case_id.into(),
            injuries,
        }
    }
}

/// Assignment of the nine AIS regions to the six ISS regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMapping {
    table: [IssRegion; 9],
}

impl Default for RegionMapping {
    fn default() -> Self {
        use IssRegion::*;
        // head, face, neck, thorax, abdomen, spine, upper, lower, external
        RegionMapping {
            table: [R1, R2, R1, R3, R4, R3, R5, R5, R6],
        }
    }
}

impl RegionMapping {
    /// Builds a mapping from explicit pairs. Every AIS region must appear
    /// exactly once.
    pub fn from_pairs(pairs: &[(AisRegion, IssRegion)]) -> Result<Self> {
        let mut table: [Option<IssRegion>; 9] = [None; 9];
        for &(ais, iss) in pairs {
            let slot = &mut table[ais as usize];
            if slot.is_some() {
                return Err(Error::InvalidConfig(format!("region `{ais}` mapped twice")));
            }
            *slot = Some(iss);
        }
        let mut out = [IssRegion::R1; 9];
        for (i, slot) in table.iter().enumerate() {
            out[i] = slot.ok_or_else(|| {
                Error::InvalidConfig(format!("region `{}` is not mapped", AisRegion::ALL[i]))
            })?;
        }
        Ok(RegionMapping { table: out })
    }

    pub fn map(&self, region: AisRegion) -> IssRegion {
        self.table[region as usize]
    }

    /// Per-ISS-region maximum grade of a case.
    pub fn profile(&self, case: &InjuryCase) -> AisProfile {
        let mut grades = [RegionGrade::ZERO; 6];
        for injury in &case.injuries {
            let slot = &mut grades[self.map(injury.region).index()];
            *slot = (*slot).max(injury.grade);
        }
        AisProfile::new(grades)
    }
}

/// The three highest grades, A ≥ B ≥ C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SeverityTriple {
    a: RegionGrade,
    b: RegionGrade,
    c: RegionGrade,
}

impl SeverityTriple {
    pub const ZERO: SeverityTriple = SeverityTriple {
        a: RegionGrade::ZERO,
        b: RegionGrade::ZERO,
        c: RegionGrade::ZERO,
    };

    /// Rejects out-of-range grades and unsorted input.
    pub fn new(a: u8, b: u8, c: u8) -> Result<Self> {
        let (ga, gb, gc) = (RegionGrade::new(a)?, RegionGrade::new(b)?, RegionGrade::new(c)?);
        if a < b || b < c {
            return Err(Error::UnsortedTriple(a, b, c));
        }
        Ok(SeverityTriple { a: ga, b: gb, c: gc })
    }

    /// Sorts the three grades descending.
    pub fn from_unsorted(mut grades: [RegionGrade; 3]) -> Self {
        grades.sort_unstable_by(|x, y| y.cmp(x));
        SeverityTriple {
            a: grades[0],
            b: grades[1],
            c: grades[2],
        }
    }

    pub fn a(&self) -> RegionGrade {
        self.a
    }
    pub fn b(&self) -> RegionGrade {
        self.b
    }
    pub fn c(&self) -> RegionGrade {
        self.c
    }

    pub fn grades(&self) -> [RegionGrade; 3] {
        [self.a, self.b, self.c]
    }

    pub fn values(&self) -> [u8; 3] {
        [self.a.0, self.b.0, self.c.0]
    }

    pub fn is_zero(&self) -> bool {
        *self == SeverityTriple::ZERO
    }
}

impl fmt::Display for SeverityTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

impl FromStr for SeverityTriple {
    type Err = Error;

    /// Accepts `5,4,3`, `(5,4,3)` or `5 4 3`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        if parts.len() != 3 {
            return Err(Error::InvalidConfig(format!("`{s}` is not a triple")));
        }
        let mut v = [0u8; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse::<RegionGrade>()?.value();
        }
        SeverityTriple::new(v[0], v[1], v[2])
    }
}

impl Serialize for SeverityTriple {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.values().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SeverityTriple {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [a, b, c] = <[u8; 3]>::deserialize(deserializer)?;
        SeverityTriple::new(a, b, c).map_err(serde::de::Error::custom)
    }
}

/// The three largest of the six region grades.
pub fn triple_from_profile(profile: &AisProfile) -> SeverityTriple {
    top_three(profile.grades().iter().copied())
}

/// ISS rule: per-region maxima first, then the three largest regions.
pub fn triple_iss(case: &InjuryCase, mapping: &RegionMapping) -> SeverityTriple {
    triple_from_profile(&mapping.profile(case))
}

/// NISS rule: the three most severe injuries regardless of region.
pub fn triple_niss(case: &InjuryCase) -> SeverityTriple {
    top_three(case.injuries.iter().map(|i| i.grade))
}

fn top_three(grades: impl Iterator<Item = RegionGrade>) -> SeverityTriple {
    let mut top = [RegionGrade::ZERO; 3];
    for g in grades {
        if g > top[2] {
            top[2] = g;
            if top[2] > top[1] {
                top.swap(1, 2);
                if top[1] > top[0] {
                    top.swap(0, 1);
                }
            }
        }
    }
    SeverityTriple {
        a: top[0],
        b: top[1],
        c: top[2],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: u8) -> RegionGrade {
        RegionGrade::new(v).unwrap()
    }

    fn case(injuries: &[(AisRegion, u8)]) -> InjuryCase {
        InjuryCase::new(
            "c",
            injuries.iter().map(|&(r, v)| Injury::new(r, g(v))).collect(),
        )
    }

    #[test]
    fn grade_six_is_rejected_with_its_own_diagnostic() {
        assert!(matches!(RegionGrade::new(6), Err(Error::UntreatableGrade)));
        assert!(matches!(RegionGrade::new(7), Err(Error::InvalidGrade(7))));
        assert!(matches!(RegionGrade::from_i64(-1), Err(Error::InvalidGrade(-1))));
        assert_eq!(RegionGrade::all().count(), 6);
    }

    #[test]
    fn profile_triples() {
        let p = AisProfile::from_values([4, 0, 3, 3, 0, 0]).unwrap();
        assert_eq!(triple_from_profile(&p), SeverityTriple::new(4, 3, 3).unwrap());
        let p = AisProfile::from_values([0; 6]).unwrap();
        assert_eq!(triple_from_profile(&p), SeverityTriple::ZERO);
        let p = AisProfile::from_values([1, 2, 3, 4, 5, 0]).unwrap();
        assert_eq!(triple_from_profile(&p), SeverityTriple::new(5, 4, 3).unwrap());
    }

    #[test]
    fn iss_masks_second_injury_in_same_region_but_niss_does_not() {
        use AisRegion::*;
        let m = RegionMapping::default();
        let c = case(&[(Head, 5), (Head, 4), (Thorax, 3)]);
        assert_eq!(triple_iss(&c, &m), SeverityTriple::new(5, 3, 0).unwrap());
        assert_eq!(triple_niss(&c), SeverityTriple::new(5, 4, 3).unwrap());

        let c = case(&[(Face, 2), (Abdomen, 2), (External, 1), (LowerExtremities, 1)]);
        assert_eq!(triple_iss(&c, &m), SeverityTriple::new(2, 2, 1).unwrap());

        assert_eq!(triple_niss(&case(&[(Spine, 3)])), SeverityTriple::new(3, 0, 0).unwrap());
        assert_eq!(triple_iss(&case(&[]), &m), SeverityTriple::ZERO);
        assert_eq!(triple_niss(&case(&[])), SeverityTriple::ZERO);
    }

    #[test]
    fn region_names_parse_case_insensitively() {
        assert_eq!("Upper Extremities".parse::<AisRegion>().unwrap(), AisRegion::UpperExtremities);
        assert_eq!("lower_extremities".parse::<AisRegion>().unwrap(), AisRegion::LowerExtremities);
        assert_eq!("THORAX".parse::<AisRegion>().unwrap(), AisRegion::Thorax);
        assert!(matches!("pelvis".parse::<AisRegion>(), Err(Error::UnknownRegion(_))));
    }

    #[test]
    fn mapping_must_be_total_and_unique() {
        let pairs: Vec<_> = AisRegion::ALL
            .iter()
            .map(|&r| (r, RegionMapping::default().map(r)))
            .collect();
        assert_eq!(RegionMapping::from_pairs(&pairs).unwrap(), RegionMapping::default());
        assert!(RegionMapping::from_pairs(&pairs[..8]).is_err());
        let mut dup = pairs.clone();
        dup.push((AisRegion::Head, IssRegion::R2));
        assert!(RegionMapping::from_pairs(&dup).is_err());
    }

    #[test]
    fn triple_parsing() {
        assert_eq!("(5,4,3)".parse::<SeverityTriple>().unwrap(), SeverityTriple::new(5, 4, 3).unwrap());
        assert_eq!("5 4 3".parse::<SeverityTriple>().unwrap(), SeverityTriple::new(5, 4, 3).unwrap());
        assert!(matches!("3,4,0".parse::<SeverityTriple>(), Err(Error::UnsortedTriple(3, 4, 0))));
        assert!("3,4".parse::<SeverityTriple>().is_err());
    }

    #[test]
    fn top_three_matches_sort_on_every_profile() {
        // 6^6 profiles, compared against a full sort.
        for code in 0..6u32.pow(6) {
            let mut v = [0u8; 6];
            let mut rest = code;
            for slot in v.iter_mut() {
                *slot = (rest % 6) as u8;
                rest /= 6;
            }
            let p = AisProfile::from_values(v).unwrap();
            let mut sorted = v;
            sorted.sort_unstable_by(|x, y| y.cmp(x));
            assert_eq!(triple_from_profile(&p).values(), [sorted[0], sorted[1], sorted[2]]);
        }
    }
}
