//! Profile/mortality tables: ingestion, per-aggregator association
//! reports and grade-distribution summaries.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::aggregator::{Aggregator, Score};
use crate::error::{Error, Result, RowDiagnostic};
use crate::fixtures::BAKER_GRADE_DISTRIBUTION;
use crate::model::SeverityTriple;
use crate::stats::{association_stats, AssociationStats, DiscretePair, PairedSample};
use crate::Real;

/// A mortality percentage held exactly, to one decimal place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MortalityRate {
    tenths: u16,
}

impl MortalityRate {
    pub const MAX_TENTHS: u16 = 1000;

    pub fn from_tenths(tenths: u16) -> Result<Self> {
        if tenths > Self::MAX_TENTHS {
            return Err(Error::InvalidConfig(format!(
                "mortality {}.{}% outside 0..=100",
                tenths / 10,
                tenths % 10
            )));
        }
        Ok(MortalityRate { tenths })
    }

    pub fn from_percent(percent: u16) -> Result<Self> {
        Self::from_tenths(percent.saturating_mul(10))
    }

    pub fn tenths(&self) -> u16 {
        self.tenths
    }

    pub fn percent<T: Real>(&self) -> T {
        T::from_u16(self.tenths).unwrap() / T::from_u8(10).unwrap()
    }

    pub fn probability(&self) -> f64 {
        f64::from(self.tenths) / 1000.0
    }
}

impl fmt::Display for MortalityRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tenths.is_multiple_of(10) {
            write!(f, "{}", self.tenths / 10)
        } else {
            write!(f, "{}.{}", self.tenths / 10, self.tenths % 10)
        }
    }
}

impl FromStr for MortalityRate {
    type Err = Error;

    /// `18`, `0.5`, `.5` and `18%` are accepted; at most one decimal.
    fn from_str(s: &str) -> Result<Self> {
        let raw = s.trim().trim_end_matches('%').trim();
        let bad = |why: &str| Error::InvalidConfig(format!("mortality `{s}`: {why}"));
        let (whole, frac) = raw.split_once('.').unwrap_or((raw, ""));
        if frac.len() > 1 {
            return Err(bad("more than one decimal place"));
        }
        if whole.starts_with('-') {
            return Err(bad("mortality out of range 0..=100"));
        }
        let whole: u32 = if whole.is_empty() && !frac.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| bad("not a number"))?
        };
        let frac: u32 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad("not a number"))?
        };
        let tenths = whole.saturating_mul(10).saturating_add(frac);
        if tenths > u32::from(Self::MAX_TENTHS) {
            return Err(bad("mortality out of range 0..=100"));
        }
        MortalityRate::from_tenths(tenths as u16)
    }
}

impl Serialize for MortalityRate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.percent::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CohortRow {
    pub triple: SeverityTriple,
    pub mortality: MortalityRate,
    pub count: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CohortTable {
    name: String,
    rows: Vec<CohortRow>,
}

impl CohortTable {
    pub fn new(name: impl Into<String>, rows: Vec<CohortRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert(r.triple) {
                return Err(Error::InvalidConfig(format!("duplicate triple {}", r.triple)));
            }
            if r.count == Some(0) {
                return Err(Error::InvalidConfig(format!("zero count for {}", r.triple)));
            }
        }
        Ok(CohortTable {
            name: name.into(),
            rows,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> &[CohortRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, t: &SeverityTriple) -> Option<&CohortRow> {
        self.rows.iter().find(|r| r.triple == *t)
    }
}

pub fn load_cohort(path: impl AsRef<Path>) -> Result<CohortTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_cohort_csv(file, path)
}

/// Parses `a,b,c,mortality[,count]`, reporting every bad row at once.
pub fn parse_cohort_csv(reader: impl Read, source: impl Into<PathBuf>) -> Result<CohortTable> {
    let source = source.into();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let missing: Vec<_> = ["a", "b", "c", "mortality"].into_iter().filter(|c| col(c).is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::InvalidRows {
            path: source,
            diagnostics: vec![RowDiagnostic {
                line: 1,
                field: missing.join(","),
                message: "required column missing from header".into(),
            }],
        });
    }
    let (ia, ib, ic, im) = (col("a").unwrap(), col("b").unwrap(), col("c").unwrap(), col("mortality").unwrap());
    let icount = col("count");

    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut diag = |field: &str, message: String| {
            diagnostics.push(RowDiagnostic {
                line,
                field: field.into(),
                message,
            })
        };
        let mut grades = [0u8; 3];
        let mut ok = true;
        for (slot, (idx, name)) in grades.iter_mut().zip([(ia, "a"), (ib, "b"), (ic, "c")]) {
            match record.get(idx).unwrap_or("").parse::<crate::RegionGrade>() {
                Ok(g) => *slot = g.value(),
                Err(e) => {
                    diag(name, e.to_string());
                    ok = false;
                }
            }
        }
        let mortality = match record.get(im).unwrap_or("").parse::<MortalityRate>() {
            Ok(m) => Some(m),
            Err(e) => {
                diag("mortality", e.to_string());
                None
            }
        };
        let count = match icount.and_then(|i| record.get(i)).filter(|v| !v.is_empty()) {
            None => Some(None),
            Some(v) => match v.parse::<u32>() {
                Ok(n) if n > 0 => Some(Some(n)),
                _ => {
                    diag("count", format!("`{v}` is not a positive integer"));
                    None
                }
            },
        };
        if !ok {
            continue;
        }
        let triple = match SeverityTriple::new(grades[0], grades[1], grades[2]) {
            Ok(t) => t,
            Err(_) => {
                diag("a,b,c", format!("triple ({},{},{}) not sorted: require a ≥ b ≥ c", grades[0], grades[1], grades[2]));
                continue;
            }
        };
        let (Some(mortality), Some(count)) = (mortality, count) else {
            continue;
        };
        if !seen.insert(triple) {
            diag("a,b,c", format!("duplicate triple {triple}"));
            continue;
        }
        rows.push(CohortRow { triple, mortality, count });
    }
    if !diagnostics.is_empty() {
        return Err(Error::InvalidRows {
            path: source,
            diagnostics,
        });
    }
    let name = source
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cohort".into());
    CohortTable::new(name, rows)
}

/// Writes the table back in the format [`parse_cohort_csv`] reads.
pub fn write_cohort_csv(table: &CohortTable, writer: impl Write) -> Result<()> {
    let with_counts = table.rows.iter().any(|r| r.count.is_some());
    let mut w = csv::Writer::from_writer(writer);
    if with_counts {
        w.write_record(["a", "b", "c", "mortality", "count"])?;
    } else {
        w.write_record(["a", "b", "c", "mortality"])?;
    }
    for r in &table.rows {
        let [a, b, c] = r.triple.values();
        let mut rec = vec![a.to_string(), b.to_string(), c.to_string(), r.mortality.to_string()];
        if with_counts {
            rec.push(r.count.map(|n| n.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<cohort output>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Every table row counts once.
    #[default]
    Equal,
    /// Rows are replicated by their `count`; every row must carry one.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportOptions {
    pub permutations: u64,
    pub seed: u64,
    pub weighting: Weighting,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            permutations: 10_000,
            seed: 0,
            weighting: Weighting::Equal,
        }
    }
}

/// Association of one aggregator with mortality, or why it could not be
/// computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregatorAssociation<T> {
    pub aggregator: String,
    pub label: String,
    #[serde(flatten)]
    pub outcome: AssociationOutcome<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AssociationOutcome<T> {
    Stats(AssociationStats<T>),
    Failed { error: String },
}

impl<T: Copy> AggregatorAssociation<T> {
    pub fn stats(&self) -> Option<AssociationStats<T>> {
        match &self.outcome {
            AssociationOutcome::Stats(s) => Some(*s),
            AssociationOutcome::Failed { .. } => None,
        }
    }
}

/// Scores every row with each aggregator and measures the association of
/// scores with mortality. Scores and rates enter the information measures
/// as raw symbols, without binning. A failure for one aggregator is
/// recorded in its entry and does not stop the others.
pub fn association_report<T: Real>(
    cohort: &CohortTable,
    aggs: &[Aggregator],
    options: &ReportOptions,
) -> Result<Vec<AggregatorAssociation<T>>> {
    if cohort.len() < 3 {
        return Err(Error::InsufficientSample {
            needed: 3,
            got: cohort.len(),
        });
    }
    let rows: Vec<&CohortRow> = match options.weighting {
        Weighting::Equal => cohort.rows.iter().collect(),
        Weighting::Count => {
            if let Some(r) = cohort.rows.iter().find(|r| r.count.is_none()) {
                return Err(Error::InvalidConfig(format!(
                    "count weighting needs a count on every row; {} has none",
                    r.triple
                )));
            }
            cohort
                .rows
                .iter()
                .flat_map(|r| std::iter::repeat_n(r, r.count.unwrap() as usize))
                .collect()
        }
    };
    Ok(aggs
        .iter()
        .map(|agg| {
            let outcome = match associate_one::<T>(&rows, agg, options) {
                Ok(s) => AssociationOutcome::Stats(s),
                Err(e) => AssociationOutcome::Failed { error: e.to_string() },
            };
            AggregatorAssociation {
                aggregator: agg.name(),
                label: agg.label(),
                outcome,
            }
        })
        .collect())
}

fn associate_one<T: Real>(rows: &[&CohortRow], agg: &Aggregator, options: &ReportOptions) -> Result<AssociationStats<T>> {
    let scores: Vec<Score> = rows.iter().map(|r| agg.aggregate(&r.triple)).collect::<Result<_>>()?;
    let mortality: Vec<MortalityRate> = rows.iter().map(|r| r.mortality).collect();
    let numeric = PairedSample::new(
        scores.iter().map(Score::to_real::<T>).collect(),
        mortality.iter().map(MortalityRate::percent::<T>).collect(),
    )?;
    let discrete = DiscretePair::new(scores, mortality)?;
    association_stats(&numeric, &discrete, options.permutations, options.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradeShare {
    /// `None` for patients whose main injury grade is unknown.
    pub grade: Option<u8>,
    pub patients: u32,
    /// Share of the table total, unrounded.
    pub percent: f64,
    pub printed_percent: u32,
}

/// Row shares of the main-injury grade distribution. The denominator is the
/// sum of the printed counts (2,109), which falls short of the 2,128
/// patients the study describes.
pub fn grade_distribution_summary() -> Vec<GradeShare> {
    let total: u32 = BAKER_GRADE_DISTRIBUTION.iter().map(|r| r.total()).sum();
    BAKER_GRADE_DISTRIBUTION
        .iter()
        .map(|r| GradeShare {
            grade: r.grade,
            patients: r.total(),
            percent: 100.0 * f64::from(r.total()) / f64::from(total),
            printed_percent: r.printed_percent,
        })
        .collect()
}
