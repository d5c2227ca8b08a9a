//! CSV readers for profiles, injury records, region mappings and custom
//! aggregator tables. All readers report rejected rows with their line
//! numbers.

use std::io::Read;
use std::path::{Path, PathBuf};

use grouping::CaseGroups;

use crate::aggregator::{Aggregator, CustomTable, Score};
use crate::error::{Error, Result, RowDiagnostic};
use crate::model::{AisProfile, AisRegion, Injury, InjuryCase, IssRegion, RegionGrade, RegionMapping, SeverityTriple};

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn reader(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

struct Columns(csv::StringRecord);

impl Columns {
    fn find(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|h| h.eq_ignore_ascii_case(name))
    }

    fn require(&self, names: &[&str], source: &Path) -> Result<Vec<usize>> {
        let missing: Vec<&str> = names.iter().copied().filter(|n| self.find(n).is_none()).collect();
        if !missing.is_empty() {
            return Err(Error::InvalidRows {
                path: source.to_path_buf(),
                diagnostics: vec![RowDiagnostic {
                    line: 1,
                    field: missing.join(","),
                    message: "required column missing from header".into(),
                }],
            });
        }
        Ok(names.iter().map(|n| self.find(n).unwrap()).collect())
    }
}

fn finish<T>(source: &Path, value: T, diagnostics: Vec<RowDiagnostic>) -> Result<T> {
    if diagnostics.is_empty() {
        Ok(value)
    } else {
        Err(Error::InvalidRows {
            path: source.to_path_buf(),
            diagnostics,
        })
    }
}

/// A profile row with an optional identifier column (`id` or `case_id`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileRecord {
    pub id: String,
    pub profile: AisProfile,
}

pub fn read_profiles(path: impl AsRef<Path>) -> Result<Vec<ProfileRecord>> {
    let path = path.as_ref();
    parse_profiles(open(path)?, path)
}

/// Columns `r1..r6`, plus `id`/`case_id` if present; rows without an id
/// are numbered from 1.
pub fn parse_profiles(r: impl Read, source: impl AsRef<Path>) -> Result<Vec<ProfileRecord>> {
    let source = source.as_ref();
    let mut rdr = reader(r);
    let cols = Columns(rdr.headers()?.clone());
    let idx = cols.require(&["r1", "r2", "r3", "r4", "r5", "r6"], source)?;
    let id_col = cols.find("id").or_else(|| cols.find("case_id"));
    let mut out = Vec::new();
    let mut diagnostics = Vec::new();
    for (n, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut grades = [RegionGrade::ZERO; 6];
        let mut ok = true;
        for (i, (&col, slot)) in idx.iter().zip(grades.iter_mut()).enumerate() {
            match record.get(col).unwrap_or("").parse::<RegionGrade>() {
                Ok(g) => *slot = g,
                Err(e) => {
                    ok = false;
                    diagnostics.push(RowDiagnostic {
                        line,
                        field: format!("r{}", i + 1),
                        message: e.to_string(),
                    });
                }
            }
        }
        if ok {
            let id = id_col
                .and_then(|c| record.get(c))
                .map(str::to_string)
                .unwrap_or_else(|| (n + 1).to_string());
            out.push(ProfileRecord {
                id,
                profile: AisProfile::new(grades),
            });
        }
    }
    finish(source, out, diagnostics)
}

pub fn read_injuries(path: impl AsRef<Path>) -> Result<Vec<InjuryCase>> {
    let path = path.as_ref();
    parse_injuries(open(path)?, path)
}

/// Columns `case_id,region,grade`; rows are grouped into cases in order
/// of first appearance.
pub fn parse_injuries(r: impl Read, source: impl AsRef<Path>) -> Result<Vec<InjuryCase>> {
    let source = source.as_ref();
    let mut rdr = reader(r);
    let cols = Columns(rdr.headers()?.clone());
    let idx = cols.require(&["case_id", "region", "grade"], source)?;
    let mut groups = CaseGroups::default();
    let mut diagnostics = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let case_id = record.get(idx[0]).unwrap_or("").to_string();
        if case_id.is_empty() {
            diagnostics.push(RowDiagnostic {
                line,
                field: "case_id".into(),
                message: "empty case identifier".into(),
            });
            continue;
        }
        let region = record.get(idx[1]).unwrap_or("").parse::<AisRegion>();
        let grade = record.get(idx[2]).unwrap_or("").parse::<RegionGrade>();
        if let Err(e) = &region {
            diagnostics.push(RowDiagnostic {
                line,
                field: "region".into(),
                message: e.to_string(),
            });
        }
        if let Err(e) = &grade {
            diagnostics.push(RowDiagnostic {
                line,
                field: "grade".into(),
                message: e.to_string(),
            });
        }
        if let (Ok(region), Ok(grade)) = (region, grade) {
            groups.push(case_id, Injury::new(region, grade));
        }
    }
    let cases = groups
        .into_iter()
        .map(|(id, injuries)| InjuryCase::new(id, injuries))
        .collect();
    finish(source, cases, diagnostics)
}

pub fn read_mapping(path: impl AsRef<Path>) -> Result<RegionMapping> {
    let path = path.as_ref();
    parse_mapping(open(path)?, path)
}

/// Columns `region,iss_region` where `iss_region` is 1..6 or `R1`..`R6`.
pub fn parse_mapping(r: impl Read, source: impl AsRef<Path>) -> Result<RegionMapping> {
    let source = source.as_ref();
    let mut rdr = reader(r);
    let cols = Columns(rdr.headers()?.clone());
    let idx = cols.require(&["region", "iss_region"], source)?;
    let mut pairs = Vec::new();
    let mut diagnostics = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let region = record.get(idx[0]).unwrap_or("").parse::<AisRegion>();
        let raw = record.get(idx[1]).unwrap_or("");
        let iss = raw
            .trim_start_matches(['R', 'r'])
            .parse::<u8>()
            .ok()
            .and_then(IssRegion::from_number);
        match (region, iss) {
            (Ok(a), Some(b)) => pairs.push((a, b)),
            (Err(e), _) => diagnostics.push(RowDiagnostic {
                line,
                field: "region".into(),
                message: e.to_string(),
            }),
            (_, None) => diagnostics.push(RowDiagnostic {
                line,
                field: "iss_region".into(),
                message: format!("`{raw}` is not one of 1..6"),
            }),
        }
    }
    finish(source, (), diagnostics)?;
    RegionMapping::from_pairs(&pairs)
}

pub fn read_custom_aggregator(path: impl AsRef<Path>) -> Result<Aggregator> {
    let path = path.as_ref();
    let name = format!("custom:{}", path.display());
    parse_custom_aggregator(open(path)?, path, name)
}

/// Columns `a,b,c,score` covering all 56 sorted triples, (0,0,0) included.
pub fn parse_custom_aggregator(r: impl Read, source: impl AsRef<Path>, name: impl Into<String>) -> Result<Aggregator> {
    let source = source.as_ref();
    let mut rdr = reader(r);
    let cols = Columns(rdr.headers()?.clone());
    let idx = cols.require(&["a", "b", "c", "score"], source)?;
    let mut entries = Vec::new();
    let mut diagnostics = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        let triple = format!("{},{},{}", field(0), field(1), field(2)).parse::<SeverityTriple>();
        let score = field(3).parse::<Score>();
        match (triple, score) {
            (Ok(t), Ok(s)) => entries.push((t, s)),
            (Err(e), _) => diagnostics.push(RowDiagnostic {
                line,
                field: "a,b,c".into(),
                message: e.to_string(),
            }),
            (_, Err(e)) => diagnostics.push(RowDiagnostic {
                line,
                field: "score".into(),
                message: e.to_string(),
            }),
        }
    }
    finish(source, (), diagnostics)?;
    Aggregator::custom(CustomTable::new(name, entries)?)
}

/// `power:p`, `sum`, `iss`, `cubes`, or `custom:path` (relative paths are
/// resolved against `base_dir`).
pub fn parse_aggregator(spec: &str, base_dir: Option<&Path>) -> Result<Aggregator> {
    match spec.trim().strip_prefix("custom:") {
        Some(p) => {
            let path = PathBuf::from(p);
            let path = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path,
            };
            read_custom_aggregator(path)
        }
        None => spec.parse(),
    }
}

/// Case grouping that keeps first-appearance order.
mod grouping {
    use std::collections::HashMap;

    use crate::model::Injury;

    #[derive(Default)]
    pub struct CaseGroups {
        index: HashMap<String, usize>,
        groups: Vec<(String, Vec<Injury>)>,
    }

    impl CaseGroups {
        pub fn push(&mut self, key: String, injury: Injury) {
            let next = self.groups.len();
            let i = *self.index.entry(key.clone()).or_insert(next);
            if i == next {
                self.groups.push((key, Vec::new()));
            }
            self.groups[i].1.push(injury);
        }
    }

    impl IntoIterator for CaseGroups {
        type Item = (String, Vec<Injury>);
        type IntoIter = std::vec::IntoIter<(String, Vec<Injury>)>;
        fn into_iter(self) -> Self::IntoIter {
            self.groups.into_iter()
        }
    }
}
