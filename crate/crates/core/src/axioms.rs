//! Change vectors on severity triples and exhaustive searches for three
//! ordering pathologies of an aggregator:
//!
//! * compensation: one change improves one patient's score and worsens
//!   another's;
//! * alternation: an identical sequence of changes applied to two patients
//!   flips their order more than once along the way;
//! * independence: two pairs differing only by a common shift react in
//!   opposite ways to the same change.
//!
//! A change vector acts on the A/B/C positions of a sorted triple and the
//! result is re-sorted. Lower scores are improvements.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregator::{Aggregator, Score};
use crate::error::{Error, Result};
use crate::lattice::enumerate_triples;
use crate::model::{RegionGrade, SeverityTriple};

/// Signed grade deltas on the A, B and C positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ChangeVector {
    pub xa: i8,
    pub xb: i8,
    pub xc: i8,
}

impl ChangeVector {
    pub const fn new(xa: i8, xb: i8, xc: i8) -> Self {
        ChangeVector { xa, xb, xc }
    }

    pub fn components(&self) -> [i8; 3] {
        [self.xa, self.xb, self.xc]
    }

    pub fn total(&self) -> i32 {
        self.components().iter().map(|&v| i32::from(v)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.components() == [0; 3]
    }

    /// The six changes that move one position by one grade.
    pub fn units() -> Vec<ChangeVector> {
        let mut out = Vec::with_capacity(6);
        for pos in 0..3 {
            for delta in [-1i8, 1] {
                let mut v = [0i8; 3];
                v[pos] = delta;
                out.push(ChangeVector::new(v[0], v[1], v[2]));
            }
        }
        out
    }

    /// Every distinct nonzero sum of one to `max_steps` unit changes, in
    /// ascending order.
    pub fn up_to_steps(max_steps: usize) -> Vec<ChangeVector> {
        let units = ChangeVector::units();
        let mut frontier = vec![ChangeVector::default()];
        let mut all = std::collections::BTreeSet::new();
        for _ in 0..max_steps {
            let next: Vec<ChangeVector> = frontier
                .iter()
                .flat_map(|v| units.iter().map(move |u| *v + *u))
                .collect();
            all.extend(next.iter().copied().filter(|v| !v.is_zero()));
            frontier = next;
        }
        all.into_iter().collect()
    }
}

impl std::ops::Add for ChangeVector {
    type Output = ChangeVector;
    fn add(self, o: ChangeVector) -> ChangeVector {
        ChangeVector::new(self.xa + o.xa, self.xb + o.xb, self.xc + o.xc)
    }
}

impl fmt::Display for ChangeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_one = |v: i8| if v > 0 { format!("+{v}") } else { v.to_string() };
        write!(f, "[{},{},{}]", fmt_one(self.xa), fmt_one(self.xb), fmt_one(self.xc))
    }
}

impl FromStr for ChangeVector {
    type Err = Error;

    /// `0,+1,-2` or `[0,+1,-2]`; components lie in -5..=5.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s
            .trim()
            .trim_start_matches('[')
            .trim_end_matches(']')
            .split(',')
            .map(str::trim)
            .collect();
        let bad = || Error::InvalidConfig(format!("`{s}` is not a change vector (expected xa,xb,xc)"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut v = [0i8; 3];
        for (slot, p) in v.iter_mut().zip(parts) {
            *slot = p.trim_start_matches('+').parse().map_err(|_| bad())?;
            if !(-5..=5).contains(slot) {
                return Err(Error::InvalidConfig(format!("change component {slot} in `{s}` outside -5..=5")));
            }
        }
        Ok(ChangeVector::new(v[0], v[1], v[2]))
    }
}

impl Serialize for ChangeVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.components().serialize(s)
    }
}

/// Adds the change position-wise and re-sorts. Fails if any position
/// leaves 0..=5.
pub fn apply_change(t: &SeverityTriple, c: &ChangeVector) -> Result<SeverityTriple> {
    let mut grades = [RegionGrade::ZERO; 3];
    for (i, (g, d)) in t.values().into_iter().zip(c.components()).enumerate() {
        let v = i32::from(g) + i32::from(d);
        if !(0..=i32::from(RegionGrade::MAX)).contains(&v) {
            return Err(Error::InvalidChange {
                triple: t.to_string(),
                change: c.to_string(),
                position: ['A', 'B', 'C'][i],
                value: v,
            });
        }
        grades[i] = RegionGrade::new(v as u8)?;
    }
    Ok(SeverityTriple::from_unsorted(grades))
}

fn sign(a: Score, b: Score) -> Ordering {
    a.cmp(&b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PatientChange {
    pub before: SeverityTriple,
    pub after: SeverityTriple,
    pub score_before: Score,
    pub score_after: Score,
}

/// `patient1` strictly degrades (score rises) and `patient2` strictly
/// improves under the same change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompensationWitness {
    pub change: ChangeVector,
    pub patient1: PatientChange,
    pub patient2: PatientChange,
}

fn scored_changes(agg: &Aggregator, c: &ChangeVector) -> Result<Vec<PatientChange>> {
    let mut out = Vec::new();
    for t in &enumerate_triples() {
        if let Ok(after) = apply_change(t, c) {
            out.push(PatientChange {
                before: *t,
                after,
                score_before: agg.aggregate(t)?,
                score_after: agg.aggregate(&after)?,
            });
        }
    }
    Ok(out)
}

/// Every pair of nonzero triples on which `c` is valid and moves the two
/// scores in strictly opposite directions. Each pair is reported once,
/// with the degrading patient first, in lexicographic order of
/// `(patient1, patient2)`.
pub fn audit_compensation(agg: &Aggregator, c: &ChangeVector) -> Result<Vec<CompensationWitness>> {
    let moves = scored_changes(agg, c)?;
    let witnesses = moves
        .par_iter()
        .map(|p1| {
            moves
                .iter()
                .filter(|p2| {
                    p1.score_after > p1.score_before && p2.score_after < p2.score_before && p1.before != p2.before
                })
                .map(|p2| CompensationWitness {
                    change: *c,
                    patient1: *p1,
                    patient2: *p2,
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(witnesses)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlternationTrace {
    pub patient1: SeverityTriple,
    pub patient2: SeverityTriple,
    pub steps: Vec<ChangeVector>,
    /// Triples after each step, starting with the initial pair.
    pub triples: Vec<(SeverityTriple, SeverityTriple)>,
    /// Scores after each step, starting with the initial pair.
    pub score_history: Vec<(Score, Score)>,
    /// Strict sign changes of `score1 - score2` along the history; ties in
    /// between are skipped, so `+ 0 -` counts as one flip.
    pub flips: usize,
}

fn count_flips(history: &[(Score, Score)]) -> usize {
    let signs: Vec<Ordering> = history
        .iter()
        .map(|&(a, b)| sign(a, b))
        .filter(|o| *o != Ordering::Equal)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn trajectory(agg: &Aggregator, start: &SeverityTriple, steps: &[ChangeVector]) -> Result<Option<Vec<(SeverityTriple, Score)>>> {
    let mut out = Vec::with_capacity(steps.len() + 1);
    let mut t = *start;
    out.push((t, agg.aggregate(&t)?));
    for s in steps {
        match apply_change(&t, s) {
            Ok(next) => t = next,
            Err(_) => return Ok(None),
        }
        out.push((t, agg.aggregate(&t)?));
    }
    Ok(Some(out))
}

/// Pairs of nonzero triples (`patient1 < patient2`) whose order flips at
/// least once when both undergo the same `steps`.
pub fn audit_alternation(agg: &Aggregator, steps: &[ChangeVector]) -> Result<Vec<AlternationTrace>> {
    if steps.is_empty() {
        return Err(Error::InvalidConfig("alternation audit needs at least one step".into()));
    }
    let triples = enumerate_triples();
    let paths: Vec<(SeverityTriple, Vec<(SeverityTriple, Score)>)> = triples
        .iter()
        .filter_map(|t| trajectory(agg, t, steps).transpose().map(|p| p.map(|p| (*t, p))))
        .collect::<Result<_>>()?;

    let traces = (0..paths.len())
        .into_par_iter()
        .map(|i| {
            let (x, px) = &paths[i];
            paths[i + 1..]
                .iter()
                .filter_map(|(y, py)| {
                    let score_history: Vec<(Score, Score)> = px.iter().zip(py).map(|(a, b)| (a.1, b.1)).collect();
                    let flips = count_flips(&score_history);
                    (flips >= 1).then(|| AlternationTrace {
                        patient1: *x,
                        patient2: *y,
                        steps: steps.to_vec(),
                        triples: px.iter().zip(py).map(|(a, b)| (a.0, b.0)).collect(),
                        score_history,
                        flips,
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(traces)
}

/// Runs [`audit_alternation`] for every sequence of one to `depth` unit
/// changes. Cost grows as `1485 · Σ 6^k` pair evaluations. Sequences are
/// visited in lexicographic order of their unit indices.
pub fn search_alternation(agg: &Aggregator, depth: usize) -> Result<Vec<AlternationTrace>> {
    let units = ChangeVector::units();
    let mut sequences: Vec<Vec<ChangeVector>> = Vec::new();
    let mut layer: Vec<Vec<ChangeVector>> = vec![vec![]];
    for _ in 0..depth {
        layer = layer
            .iter()
            .flat_map(|seq| {
                units.iter().map(move |u| {
                    let mut s = seq.clone();
                    s.push(*u);
                    s
                })
            })
            .collect();
        sequences.extend(layer.iter().cloned());
    }
    let mut out = Vec::new();
    for seq in &sequences {
        out.extend(audit_alternation(agg, seq)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Less,
    Equal,
    Greater,
}

impl From<Ordering> for Order {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => Order::Less,
            Ordering::Equal => Order::Equal,
            Ordering::Greater => Order::Greater,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairState {
    pub x: SeverityTriple,
    pub y: SeverityTriple,
    pub score_x: Score,
    pub score_y: Score,
    pub order: Order,
}

/// Two pairs related by a common shift that respond differently to the
/// same change: exactly one of them reverses its strict order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndependenceWitness {
    pub shift: ChangeVector,
    pub change: ChangeVector,
    pub pair1_before: PairState,
    pub pair1_after: PairState,
    pub pair2_before: PairState,
    pub pair2_after: PairState,
    /// True when the base pair reverses; otherwise the shifted pair does.
    pub base_pair_reverses: bool,
}

impl IndependenceWitness {
    pub fn base_pair(&self) -> (SeverityTriple, SeverityTriple) {
        (self.pair1_before.x, self.pair1_before.y)
    }

    pub fn shifted_pair(&self) -> (SeverityTriple, SeverityTriple) {
        (self.pair2_before.x, self.pair2_before.y)
    }
}

fn reverses(before: Ordering, after: Ordering) -> bool {
    before != Ordering::Equal && after == before.reverse()
}

/// For every base pair `x < y` of nonzero triples: shift both, apply
/// `change` to all four, and report when exactly one pair reverses.
pub fn audit_independence(agg: &Aggregator, shift: &ChangeVector, change: &ChangeVector) -> Result<Vec<IndependenceWitness>> {
    let triples = enumerate_triples();
    // (base, shifted, base+change, shifted+change) for every triple where
    // all of them are valid
    let mut legs = Vec::new();
    for t in &triples {
        let Ok(shifted) = apply_change(t, shift) else { continue };
        let (Ok(t_after), Ok(s_after)) = (apply_change(t, change), apply_change(&shifted, change)) else {
            continue;
        };
        let scores = [
            agg.aggregate(t)?,
            agg.aggregate(&shifted)?,
            agg.aggregate(&t_after)?,
            agg.aggregate(&s_after)?,
        ];
        legs.push(([*t, shifted, t_after, s_after], scores));
    }
    let state = |x: SeverityTriple, y: SeverityTriple, sx: Score, sy: Score| PairState {
        x,
        y,
        score_x: sx,
        score_y: sy,
        order: sign(sx, sy).into(),
    };
    let witnesses = (0..legs.len())
        .into_par_iter()
        .map(|i| {
            let (tx, sx) = legs[i];
            legs[i + 1..]
                .iter()
                .filter_map(|&(ty, sy)| {
                    let r1 = reverses(sign(sx[0], sy[0]), sign(sx[2], sy[2]));
                    let r2 = reverses(sign(sx[1], sy[1]), sign(sx[3], sy[3]));
                    (r1 != r2).then(|| IndependenceWitness {
                        shift: *shift,
                        change: *change,
                        pair1_before: state(tx[0], ty[0], sx[0], sy[0]),
                        pair1_after: state(tx[2], ty[2], sx[2], sy[2]),
                        pair2_before: state(tx[1], ty[1], sx[1], sy[1]),
                        pair2_after: state(tx[3], ty[3], sx[3], sy[3]),
                        base_pair_reverses: r1,
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(witnesses)
}

fn score_label(agg: &Aggregator) -> String {
    match agg {
        Aggregator::PowerSum(2) => "ISS".into(),
        other => other.name(),
    }
}

fn tsv_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join("\t"));
    out.push('\n');
}

/// Two-patient table: initial profiles, then each change and its result.
pub fn render_compensation(agg: &Aggregator, w: &CompensationWitness) -> String {
    let label = score_label(agg);
    let mut out = String::new();
    let (p1, p2) = (&w.patient1, &w.patient2);
    tsv_row(&mut out, &["Patient".into(), "Patient 1".into(), "Patient 2".into()]);
    tsv_row(&mut out, &[format!("Initial {label} Profile"), p1.before.to_string(), p2.before.to_string()]);
    tsv_row(&mut out, &[format!("Initial {label}"), p1.score_before.to_string(), p2.score_before.to_string()]);
    tsv_row(&mut out, &["Change".into(), w.change.to_string(), w.change.to_string()]);
    tsv_row(&mut out, &[format!("Resulting {label} Profile"), p1.after.to_string(), p2.after.to_string()]);
    tsv_row(&mut out, &[format!("Resulting {label}"), p1.score_after.to_string(), p2.score_after.to_string()]);
    out
}

pub fn render_alternation(agg: &Aggregator, t: &AlternationTrace) -> String {
    let label = score_label(agg);
    let mut out = String::new();
    tsv_row(&mut out, &["Patient".into(), "Patient 1".into(), "Patient 2".into()]);
    for (i, ((a, b), (sa, sb))) in t.triples.iter().zip(&t.score_history).enumerate() {
        let stage = if i == 0 { "Initial" } else { "Resulting" };
        if i > 0 {
            let step = t.steps[i - 1].to_string();
            tsv_row(&mut out, &["Change".into(), step.clone(), step]);
        }
        tsv_row(&mut out, &[format!("{stage} {label} Profile"), a.to_string(), b.to_string()]);
        tsv_row(&mut out, &[format!("{stage} {label}"), sa.to_string(), sb.to_string()]);
    }
    out
}

pub fn render_independence(agg: &Aggregator, w: &IndependenceWitness) -> String {
    let label = score_label(agg);
    let mut out = String::new();
    let (b1, a1, b2, a2) = (&w.pair1_before, &w.pair1_after, &w.pair2_before, &w.pair2_after);
    tsv_row(
        &mut out,
        &["Patient", "Patient 1", "Patient 2", "Patient 3", "Patient 4"].map(String::from),
    );
    tsv_row(
        &mut out,
        &[format!("Initial {label} Profile"), b1.x.to_string(), b1.y.to_string(), b2.x.to_string(), b2.y.to_string()],
    );
    tsv_row(
        &mut out,
        &[
            format!("Initial {label}"),
            b1.score_x.to_string(),
            b1.score_y.to_string(),
            b2.score_x.to_string(),
            b2.score_y.to_string(),
        ],
    );
    let c = w.change.to_string();
    tsv_row(&mut out, &["Change".into(), c.clone(), c.clone(), c.clone(), c]);
    tsv_row(
        &mut out,
        &[format!("Resulting {label} Profile"), a1.x.to_string(), a1.y.to_string(), a2.x.to_string(), a2.y.to_string()],
    );
    tsv_row(
        &mut out,
        &[
            format!("Resulting {label}"),
            a1.score_x.to_string(),
            a1.score_y.to_string(),
            a2.score_x.to_string(),
            a2.score_y.to_string(),
        ],
    );
    out
}
