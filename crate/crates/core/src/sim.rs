//! Monte-Carlo cohorts and simulation-based choice of an aggregator.
//!
//! A cohort is drawn from per-region grade distributions (or resampled
//! from observed profiles), outcomes are drawn from an [`OutcomeModel`],
//! and each candidate aggregator is scored against the outcomes under one
//! of three objectives. Patient `i` draws from ChaCha8 stream `i` of the
//! configured seed, so cohorts do not depend on thread scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use log::warn;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregator::{Aggregator, Score};
use crate::cohort::{load_cohort, CohortTable};
use crate::error::{Error, Result};
use crate::fixtures::{baker_max_ais, baker_profiles};
use crate::io::{parse_aggregator, read_profiles};
use crate::model::{triple_from_profile, AisProfile, RegionGrade, SeverityTriple};
use crate::stats::{normalized_mi, pearson, DiscretePair, PairedSample};

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum GradeDistribution {
    /// Weights over grades 0..=5 for each of the six regions.
    Categorical([[f64; 6]; 6]),
    /// Uniform resampling of whole observed profiles.
    Empirical(Vec<AisProfile>),
}

impl GradeDistribution {
    /// The same weights for every region.
    pub fn identical(weights: [f64; 6]) -> Self {
        GradeDistribution::Categorical([weights; 6])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GradeDistribution::Categorical(regions) => {
                for (i, w) in regions.iter().enumerate() {
                    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(Error::InvalidConfig(format!("region R{} has a negative or non-finite weight", i + 1)));
                    }
                    let total: f64 = w.iter().sum();
                    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                        return Err(Error::InvalidConfig(format!(
                            "region R{} weights sum to {total}, expected 1",
                            i + 1
                        )));
                    }
                }
                Ok(())
            }
            GradeDistribution::Empirical(p) if p.is_empty() => {
                Err(Error::InvalidConfig("empirical distribution has no profiles".into()))
            }
            GradeDistribution::Empirical(_) => Ok(()),
        }
    }
}

/// Death probability of a severity triple.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeModel {
    /// Mortality rate of the matching table row. A triple absent from the
    /// table takes the row with the largest reference score not above its
    /// own (highest rate among rows tied at that score); below the smallest
    /// reference score in the table, the maximum-AIS mortality of its
    /// leading grade is used, 0 for the uninjured.
    TableLookup { table: CohortTable, reference: Aggregator },
    /// `1 / (1 + exp(-(intercept + slope · score)))`.
    LogisticInScore {
        reference: Aggregator,
        intercept: f64,
        slope: f64,
    },
}

impl Default for OutcomeModel {
    fn default() -> Self {
        OutcomeModel::TableLookup {
            table: baker_profiles(),
            reference: Aggregator::ISS,
        }
    }
}

impl OutcomeModel {
    pub fn death_probability(&self, t: &SeverityTriple) -> Result<f64> {
        match self {
            OutcomeModel::TableLookup { table, reference } => {
                if let Some(row) = table.get(t) {
                    return Ok(row.mortality.probability());
                }
                let score = reference.aggregate(t)?;
                let mut best: Option<(Score, f64)> = None;
                for row in table.rows() {
                    let s = reference.aggregate(&row.triple)?;
                    if s > score {
                        continue;
                    }
                    let p = row.mortality.probability();
                    best = match best {
                        Some((bs, bp)) if bs > s || (bs == s && bp >= p) => Some((bs, bp)),
                        _ => Some((s, p)),
                    };
                }
                Ok(match best {
                    Some((_, p)) => p,
                    None => baker_max_ais(t.a().value()).map_or(0.0, |m| m.probability()),
                })
            }
            OutcomeModel::LogisticInScore {
                reference,
                intercept,
                slope,
            } => {
                let s = reference.aggregate(t)?.to_f64();
                Ok(1.0 / (1.0 + (-(intercept + slope * s)).exp()))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OutcomeModel::TableLookup { table, reference } => {
                reference.validate()?;
                if table.is_empty() {
                    return Err(Error::InvalidConfig("outcome table is empty".into()));
                }
                Ok(())
            }
            OutcomeModel::LogisticInScore {
                reference,
                intercept,
                slope,
            } => {
                reference.validate()?;
                if !intercept.is_finite() || !slope.is_finite() {
                    return Err(Error::InvalidConfig("logistic coefficients must be finite".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Maximise normalized mutual information between score and outcome.
    NmiWithOutcome,
    /// Maximise Pearson correlation between score and outcome.
    PearsonWithOutcome,
    /// Minimise the share of triple pairs ranked against the outcome
    /// model's death probabilities.
    DiscordanceVsTruth,
}

impl Objective {
    fn maximize(self) -> bool {
        !matches!(self, Objective::DiscordanceVsTruth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub cohort_size: usize,
    pub seed: u64,
    pub distribution: GradeDistribution,
    pub outcome: OutcomeModel,
    pub candidates: Vec<Aggregator>,
    pub objective: Objective,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cohort_size < 10 {
            return Err(Error::InvalidConfig(format!("cohort_size {} below 10", self.cohort_size)));
        }
        if self.candidates.len() < 2 {
            return Err(Error::InvalidConfig("at least two candidate aggregators are required".into()));
        }
        for c in &self.candidates {
            c.validate()?;
        }
        self.distribution.validate()?;
        self.outcome.validate()
    }

    /// Reads the JSON form ([`SimConfigFile`]); relative paths inside it
    /// resolve against the file's directory.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SimConfigFile = serde_json::from_str(&text)?;
        file.resolve(path.parent())
    }
}

/// JSON mirror of [`SimConfig`].
///
/// ```json
/// {
///   "cohort_size": 5000,
///   "seed": 42,
///   "distribution": { "categorical": [[0.5, 0.2, 0.1, 0.1, 0.05, 0.05], ...] },
///   "outcome": "table_lookup",
///   "candidates": ["power:1", "power:2", "power:3"],
///   "objective": "nmi_with_outcome"
/// }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfigFile {
    pub cohort_size: usize,
    pub seed: u64,
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub outcome: OutcomeSpec,
    pub candidates: Vec<String>,
    pub objective: Objective,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Six rows (one per region) of six weights, or one row for all regions.
    Categorical(Vec<[f64; 6]>),
    /// Path to a profile CSV (`r1..r6`).
    Empirical(String),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeSpec {
    /// The bundled 12-row mortality table with the ISS as reference.
    #[default]
    TableLookup,
    /// A cohort CSV with its own reference aggregator.
    Table { path: String, reference: String },
    Logistic {
        reference: String,
        intercept: f64,
        slope: f64,
    },
}

impl SimConfigFile {
    pub fn resolve(&self, base: Option<&Path>) -> Result<SimConfig> {
        let at = |p: &str| match base {
            Some(dir) if Path::new(p).is_relative() => dir.join(p),
            _ => Path::new(p).to_path_buf(),
        };
        let distribution = match &self.distribution {
            DistributionSpec::Categorical(rows) => match rows.len() {
                1 => GradeDistribution::identical(rows[0]),
                6 => GradeDistribution::Categorical(std::array::from_fn(|i| rows[i])),
                n => {
                    return Err(Error::InvalidConfig(format!(
                        "categorical distribution needs 1 or 6 weight rows, got {n}"
                    )))
                }
            },
            DistributionSpec::Empirical(p) => {
                GradeDistribution::Empirical(read_profiles(at(p))?.into_iter().map(|r| r.profile).collect())
            }
        };
        let outcome = match &self.outcome {
            OutcomeSpec::TableLookup => OutcomeModel::default(),
            OutcomeSpec::Table { path, reference } => OutcomeModel::TableLookup {
                table: load_cohort(at(path))?,
                reference: parse_aggregator(reference, base)?,
            },
            OutcomeSpec::Logistic {
                reference,
                intercept,
                slope,
            } => OutcomeModel::LogisticInScore {
                reference: parse_aggregator(reference, base)?,
                intercept: *intercept,
                slope: *slope,
            },
        };
        let candidates = self
            .candidates
            .iter()
            .map(|c| parse_aggregator(c, base))
            .collect::<Result<_>>()?;
        let config = SimConfig {
            cohort_size: self.cohort_size,
            seed: self.seed,
            distribution,
            outcome,
            candidates,
            objective: self.objective,
        };
        config.validate()?;
        Ok(config)
    }
}

/// One simulated (or observed) patient. `outcome` is 0 for survival and 1
/// for death in sampled cohorts; evaluation accepts any integer level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimPatient {
    pub profile: AisProfile,
    pub triple: SeverityTriple,
    pub outcome: i64,
}

impl SimPatient {
    pub fn new(profile: AisProfile, outcome: i64) -> Self {
        SimPatient {
            profile,
            triple: triple_from_profile(&profile),
            outcome,
        }
    }

    pub fn died(&self) -> bool {
        self.outcome == 1
    }
}

pub fn sample_cohort(config: &SimConfig) -> Result<Vec<SimPatient>> {
    config.validate()?;
    let samplers: Option<Vec<WeightedIndex<f64>>> = match &config.distribution {
        GradeDistribution::Categorical(regions) => Some(
            regions
                .iter()
                .map(|w| WeightedIndex::new(w).map_err(|e| Error::InvalidConfig(e.to_string())))
                .collect::<Result<_>>()?,
        ),
        GradeDistribution::Empirical(_) => None,
    };
    // the outcome model is evaluated on at most 56 triples; cache them
    let mut death: BTreeMap<SeverityTriple, f64> = BTreeMap::new();
    for t in crate::aggregator::all_sorted_triples() {
        death.insert(t, config.outcome.death_probability(&t)?);
    }

    let patients = (0..config.cohort_size as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i);
            let profile = match (&config.distribution, &samplers) {
                (GradeDistribution::Empirical(pool), _) => pool[rng.gen_range(0..pool.len())],
                (_, Some(samplers)) => {
                    let grades = std::array::from_fn(|r| {
                        RegionGrade::new(samplers[r].sample(&mut rng) as u8).expect("index below 6")
                    });
                    AisProfile::new(grades)
                }
                _ => unreachable!(),
            };
            let triple = triple_from_profile(&profile);
            let died = rng.gen::<f64>() < death[&triple];
            SimPatient {
                profile,
                triple,
                outcome: i64::from(died),
            }
        })
        .collect();
    Ok(patients)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateMetric {
    pub aggregator: String,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortSummary {
    pub size: usize,
    pub deaths: usize,
    /// `grade_histogram[r][g]`: patients with grade `g` in region `r+1`.
    pub grade_histogram: [[u64; 6]; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub objective: Objective,
    /// Differs from `objective` when the requested one was undefined on
    /// this cohort.
    pub objective_used: Objective,
    pub metrics: Vec<CandidateMetric>,
    pub selected: String,
    pub seed: Option<u64>,
    pub cohort: CohortSummary,
    pub warnings: Vec<String>,
}

fn summarize(patients: &[SimPatient]) -> CohortSummary {
    let mut grade_histogram = [[0u64; 6]; 6];
    for p in patients {
        for (r, g) in p.profile.grades().iter().enumerate() {
            grade_histogram[r][g.value() as usize] += 1;
        }
    }
    CohortSummary {
        size: patients.len(),
        deaths: patients.iter().filter(|p| p.outcome != 0).count(),
        grade_histogram,
    }
}

fn metric(patients: &[SimPatient], agg: &Aggregator, objective: Objective, truth: &OutcomeModel) -> Result<f64> {
    let scores: Vec<Score> = patients.iter().map(|p| agg.aggregate(&p.triple)).collect::<Result<_>>()?;
    match objective {
        Objective::NmiWithOutcome => {
            let outcomes = patients.iter().map(|p| p.outcome).collect();
            normalized_mi(&DiscretePair::new(scores, outcomes)?)
        }
        Objective::PearsonWithOutcome => {
            let sample = PairedSample::new(
                scores.iter().map(Score::to_f64).collect(),
                patients.iter().map(|p| p.outcome as f64).collect(),
            )?;
            pearson(&sample)
        }
        Objective::DiscordanceVsTruth => {
            let distinct: Vec<SeverityTriple> = patients.iter().map(|p| p.triple).collect::<BTreeSet<_>>().into_iter().collect();
            let keyed: Vec<(Score, f64)> = distinct
                .iter()
                .map(|t| Ok((agg.aggregate(t)?, truth.death_probability(t)?)))
                .collect::<Result<_>>()?;
            let mut pairs = 0u64;
            let mut reversed = 0u64;
            for (i, &(s1, p1)) in keyed.iter().enumerate() {
                for &(s2, p2) in &keyed[i + 1..] {
                    pairs += 1;
                    if (s1 > s2 && p1 < p2) || (s1 < s2 && p1 > p2) {
                        reversed += 1;
                    }
                }
            }
            Ok(if pairs == 0 { 0.0 } else { reversed as f64 / pairs as f64 })
        }
    }
}

/// Scores every candidate against the cohort and picks the best one.
/// Exact ties go to the lowest power-sum exponent, then to the
/// lexicographically smallest name. If every outcome is identical the
/// correlation objectives are undefined and selection falls back to
/// [`Objective::DiscordanceVsTruth`].
pub fn evaluate_candidates(
    patients: &[SimPatient],
    candidates: &[Aggregator],
    objective: Objective,
    truth: &OutcomeModel,
) -> Result<SimResult> {
    if patients.is_empty() {
        return Err(Error::Empty("cohort has no patients"));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate aggregators".into()));
    }
    let mut warnings = Vec::new();
    let constant_outcome = patients.iter().all(|p| p.outcome == patients[0].outcome);
    let mut used = objective;
    let mut requested_errors: Vec<Option<String>> = vec![None; candidates.len()];
    if constant_outcome && objective != Objective::DiscordanceVsTruth {
        let msg = format!(
            "every patient has outcome {}; {objective:?} is undefined, selecting by discordance with the outcome model",
            patients[0].outcome
        );
        warn!("{msg}");
        warnings.push(msg);
        requested_errors = vec![Some("outcome is constant".into()); candidates.len()];
        used = Objective::DiscordanceVsTruth;
    }

    let metrics: Vec<CandidateMetric> = candidates
        .par_iter()
        .zip(requested_errors)
        .map(|(agg, prior)| match metric(patients, agg, used, truth) {
            Ok(v) => CandidateMetric {
                aggregator: agg.name(),
                value: Some(v),
                error: prior,
            },
            Err(e) => CandidateMetric {
                aggregator: agg.name(),
                value: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let better = |a: f64, b: f64| if used.maximize() { a > b } else { a < b };
    let mut best: Option<(usize, f64)> = None;
    for (i, m) in metrics.iter().enumerate() {
        let Some(v) = m.value else { continue };
        best = match best {
            None => Some((i, v)),
            Some((_, bv)) if better(v, bv) => Some((i, v)),
            Some((j, bv)) if v == bv && candidates[i].tie_break_key() < candidates[j].tie_break_key() => Some((i, v)),
            keep => keep,
        };
    }
    let (winner, _) = best.ok_or_else(|| Error::InvalidConfig("objective undefined for every candidate".into()))?;
    Ok(SimResult {
        objective,
        objective_used: used,
        metrics,
        selected: candidates[winner].name(),
        seed: None,
        cohort: summarize(patients),
        warnings,
    })
}

/// Samples a cohort and evaluates the configured candidates on it.
pub fn simulate(config: &SimConfig) -> Result<(Vec<SimPatient>, SimResult)> {
    let patients = sample_cohort(config)?;
    let mut result = evaluate_candidates(&patients, &config.candidates, config.objective, &config.outcome)?;
    result.seed = Some(config.seed);
    Ok((patients, result))
}

/// CSV dump: `patient,r1..r6,a,b,c,outcome`.
pub fn write_cohort_dump(patients: &[SimPatient], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["patient", "r1", "r2", "r3", "r4", "r5", "r6", "a", "b", "c", "outcome"])?;
    for (i, p) in patients.iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(p.profile.values().iter().map(u8::to_string));
        rec.extend(p.triple.values().iter().map(u8::to_string));
        rec.push(match p.outcome {
            0 => "survived".into(),
            1 => "died".into(),
            v => v.to_string(),
        });
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<cohort dump>", e))?;
    Ok(())
}
