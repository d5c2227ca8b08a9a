//! Published tables from the 1974 Baltimore motor-vehicle trauma sample
//! (2,128 patients) that introduced the ISS, used as reference data.

use crate::cohort::{CohortRow, CohortTable, MortalityRate};
use crate::model::SeverityTriple;

/// `(a, b, c, mortality %)` for the twelve triples with mortality reported
/// by the three most severe injuries.
pub const BAKER_PROFILE_ROWS: [(u8, u8, u8, u16); 12] = [
    (4, 3, 0, 18),
    (4, 3, 1, 18),
    (4, 3, 2, 18),
    (4, 3, 3, 43),
    (5, 3, 0, 59),
    (5, 3, 1, 59),
    (5, 3, 2, 59),
    (5, 3, 3, 86),
    (5, 4, 0, 62),
    (5, 4, 1, 62),
    (5, 4, 2, 62),
    (5, 4, 3, 92),
];

/// The bundled CSV form of [`BAKER_PROFILE_ROWS`].
pub const BAKER_PROFILES_CSV: &str = include_str!("../golden/baker_profiles.csv");

pub fn baker_profiles() -> CohortTable {
    let rows = BAKER_PROFILE_ROWS
        .iter()
        .map(|&(a, b, c, m)| CohortRow {
            triple: SeverityTriple::new(a, b, c).expect("fixture triple"),
            mortality: MortalityRate::from_percent(m).expect("fixture rate"),
            count: None,
        })
        .collect();
    CohortTable::new("baker_profiles", rows).expect("fixture has unique triples")
}

/// Percentage died by maximum AIS grade, in tenths of a percent.
pub const BAKER_MAX_AIS_TENTHS: [(u8, u16); 5] = [(1, 0), (2, 5), (3, 30), (4, 160), (5, 640)];

pub fn baker_max_ais(grade: u8) -> Option<MortalityRate> {
    BAKER_MAX_AIS_TENTHS
        .iter()
        .find(|&&(g, _)| g == grade)
        .map(|&(_, t)| MortalityRate::from_tenths(t).expect("fixture rate"))
}

/// One row of the grade distribution of each patient's main injury.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradeDistributionRow {
    /// `None` for the "Unknown" row.
    pub grade: Option<u8>,
    pub dead_on_arrival: u32,
    pub dead_later: u32,
    pub survived: u32,
    pub unknown: u32,
    /// The percentage column as printed.
    pub printed_percent: u32,
}

impl GradeDistributionRow {
    pub fn total(&self) -> u32 {
        self.dead_on_arrival + self.dead_later + self.survived + self.unknown
    }
}

pub const BAKER_GRADE_DISTRIBUTION: [GradeDistributionRow; 6] = [
    row(Some(1), 0, 0, 80, 1, 4),
    row(Some(2), 0, 2, 437, 1, 20),
    row(Some(3), 0, 23, 997, 20, 49),
    row(Some(4), 0, 30, 229, 3, 13),
    row(Some(5), 93, 80, 97, 3, 13),
    row(None, 1, 0, 12, 0, 1),
];

const fn row(
    grade: Option<u8>,
    dead_on_arrival: u32,
    dead_later: u32,
    survived: u32,
    unknown: u32,
    printed_percent: u32,
) -> GradeDistributionRow {
    GradeDistributionRow {
        grade,
        dead_on_arrival,
        dead_later,
        survived,
        unknown,
        printed_percent,
    }
}

/// Mortality grouped by the two most severe injuries, split on whether the
/// third is 0-2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SevereGroup {
    pub persons: u32,
    pub a: u8,
    pub b: u8,
    pub mortality_c_0_to_2: u16,
    pub mortality_c_3: u16,
}

pub const BAKER_SEVERE: [SevereGroup; 3] = [
    SevereGroup {
        persons: 102,
        a: 4,
        b: 3,
        mortality_c_0_to_2: 18,
        mortality_c_3: 43,
    },
    SevereGroup {
        persons: 78,
        a: 5,
        b: 3,
        mortality_c_0_to_2: 59,
        mortality_c_3: 86,
    },
    SevereGroup {
        persons: 38,
        a: 5,
        b: 4,
        mortality_c_0_to_2: 62,
        mortality_c_3: 92,
    },
];

/// Two-patient samples of consecutive ISS ranks.
pub const VARIANCE_TOY: [(char, [u8; 3], [u8; 3]); 3] = [
    ('A', [5, 2, 2], [5, 3, 0]),
    ('B', [5, 3, 2], [5, 4, 0]),
    ('C', [5, 3, 3], [5, 4, 1]),
];
