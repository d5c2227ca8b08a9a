//! One line per acceptance criterion; exits non-zero if any fails.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iss_core::axioms::{audit_alternation, audit_compensation, audit_independence, search_alternation, ChangeVector};
use iss_core::cohort::{association_report, ReportOptions};
use iss_core::fixtures::baker_profiles;
use iss_core::lattice::{build_lattice, discordance, enumerate_triples};
use iss_core::plot::step_plot;
use iss_core::sim::{evaluate_candidates, sample_cohort, GradeDistribution, Objective, OutcomeModel, SimConfig, SimPatient};
use iss_core::stats::{
    mutual_information_bits, normalized_mi, pearson, permutation_pvalue, sample_variance, spearman, DiscretePair,
    PairedSample, PermutationStatistic,
};
use iss_core::{Aggregator, Score, SeverityTriple};

const PEARSON_TOL: f64 = 0.005;
const NMI_TOL: f64 = 1e-5;

// Rank tables as printed: the ISS and cube columns.
const PRINTED_ISS: [i64; 44] = [
    1, 2, 3, 4, 5, 6, 8, 9, 10, 11, 12, 13, 14, 16, 17, 18, 19, 20, 21, 22, 24, 25, 26, 27, 29, 30, 32, 33, 34, 35, 36,
    38, 41, 42, 43, 45, 48, 50, 51, 54, 57, 59, 66, 75,
];
const PRINTED_CUBES: [i64; 55] = [
    1, 2, 3, 8, 9, 10, 16, 17, 24, 27, 28, 29, 35, 36, 43, 54, 55, 62, 64, 65, 66, 72, 73, 80, 81, 91, 92, 99, 118, 125,
    126, 127, 128, 129, 133, 134, 136, 141, 152, 153, 155, 160, 179, 189, 190, 192, 197, 216, 250, 251, 253, 258, 277,
    314, 375,
];

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn t(a: u8, b: u8, c: u8) -> SeverityTriple {
    SeverityTriple::new(a, b, c).unwrap()
}

fn naive_triples() -> Vec<(i64, i64, i64)> {
    let mut v = Vec::new();
    for a in 0..=5 {
        for b in 0..=a {
            for c in 0..=b {
                if a + b + c > 0 {
                    v.push((a, b, c));
                }
            }
        }
    }
    v
}

fn power(p: u32) -> impl Fn(&(i64, i64, i64)) -> i64 {
    move |&(a, b, c)| a.pow(p) + b.pow(p) + c.pow(p)
}

fn enumeration() -> Result<String, String> {
    let set = enumerate_triples();
    ensure(set.len() == 55, format!("{} triples", set.len()))?;
    let vals = |a: &Aggregator| -> Vec<i64> {
        build_lattice(a).unwrap().values().iter().map(|s| s.to_integer().unwrap()).collect()
    };
    let (sum, iss, cubes) = (vals(&Aggregator::SUM), vals(&Aggregator::ISS), vals(&Aggregator::CUBES));
    ensure(sum == (1..=15).collect::<Vec<_>>(), format!("sum lattice {sum:?}"))?;
    ensure(iss == PRINTED_ISS, "ISS ranks differ from the printed table")?;
    ensure(cubes == PRINTED_CUBES, "cube ranks differ from the printed table")?;
    Ok(format!("55 triples; distinct values {}/{}/{}", sum.len(), iss.len(), cubes.len()))
}

fn discordance_census() -> Result<String, String> {
    // brute-force oracle: the two-sided reversal condition over ordered
    // pairs of triples
    let ts = naive_triples();
    let ordered = |f: &dyn Fn(&(i64, i64, i64)) -> i64, g: &dyn Fn(&(i64, i64, i64)) -> i64| {
        let mut n = 0;
        for x in &ts {
            for y in &ts {
                if (f(x) > f(y) && g(x) < g(y)) || (f(x) < f(y) && g(x) > g(y)) {
                    n += 1;
                }
            }
        }
        n
    };
    let (s, q, c) = (power(1), power(2), power(3));
    let oracle = [ordered(&q, &c), ordered(&q, &s), ordered(&c, &s)];
    ensure(oracle == [84, 120, 220], format!("oracle counts {oracle:?}"))?;

    let r = |f, g| discordance(&f, &g).unwrap();
    let (qc, qs, cs) = (r(Aggregator::ISS, Aggregator::CUBES), r(Aggregator::ISS, Aggregator::SUM), r(Aggregator::CUBES, Aggregator::SUM));
    ensure(qc.total_pairs == 1485 && qc.count == 84, format!("ISS/cubes {} of {}", qc.count, qc.total_pairs))?;
    ensure(qs.count == 120 && qs.percent.round() == 8.0, format!("ISS/sum {} ({:.2}%)", qs.count, qs.percent))?;
    ensure(
        cs.count == 220 && format!("{:.2}", cs.percent) == "14.81",
        format!("cubes/sum {} ({:.2}%)", cs.count, cs.percent),
    )?;
    Ok(format!(
        "{}/1485 ({:.2}%), {}/1485 ({:.2}%), {}/1485 ({:.2}%)",
        qc.count, qc.percent, qs.count, qs.percent, cs.count, cs.percent
    ))
}

fn association() -> Result<String, String> {
    let report = association_report::<f64>(
        &baker_profiles(),
        &[Aggregator::SUM, Aggregator::ISS, Aggregator::CUBES],
        &ReportOptions {
            permutations: 100,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let got: Vec<f64> = report.iter().map(|r| r.stats().unwrap().pearson).collect();
    for (g, want) in got.iter().zip([0.77, 0.92, 0.92]) {
        ensure((g - want).abs() <= PEARSON_TOL, format!("pearson {g:.4} vs {want}"))?;
    }
    Ok(format!("pearson {:.4} / {:.4} / {:.4}", got[0], got[1], got[2]))
}

/// Plug-in NMI from the joint table, written out directly.
fn nmi_oracle(xs: &[i64], ys: &[i64]) -> f64 {
    let n = xs.len() as f64;
    let mut px: HashMap<i64, f64> = HashMap::new();
    let mut py: HashMap<i64, f64> = HashMap::new();
    let mut pxy: HashMap<(i64, i64), f64> = HashMap::new();
    for (&x, &y) in xs.iter().zip(ys) {
        *px.entry(x).or_default() += 1.0 / n;
        *py.entry(y).or_default() += 1.0 / n;
        *pxy.entry((x, y)).or_default() += 1.0 / n;
    }
    let h = |m: &HashMap<i64, f64>| -m.values().map(|p| p * p.log2()).sum::<f64>();
    let mi: f64 = pxy.iter().map(|(&(x, y), p)| p * (p / (px[&x] * py[&y])).log2()).sum();
    2.0 * mi / (h(&px) + h(&py))
}

fn fixture_columns(agg: &Aggregator) -> (Vec<i64>, Vec<i64>) {
    let cohort = baker_profiles();
    let xs = cohort.rows().iter().map(|r| agg.aggregate(&r.triple).unwrap().to_integer().unwrap()).collect();
    let ys = cohort.rows().iter().map(|r| i64::from(r.mortality.tenths())).collect();
    (xs, ys)
}

fn nmi_ordering() -> Result<String, String> {
    let mut got = Vec::new();
    for (agg, pinned) in [(Aggregator::SUM, 0.523306), (Aggregator::ISS, 0.766897), (Aggregator::CUBES, 0.801257)] {
        let (xs, ys) = fixture_columns(&agg);
        let oracle = nmi_oracle(&xs, &ys);
        let lib: f64 = normalized_mi(&DiscretePair::new(xs, ys).unwrap()).unwrap();
        ensure((oracle - pinned).abs() < NMI_TOL, format!("oracle {oracle:.6} vs pinned {pinned}"))?;
        ensure((lib - oracle).abs() < 1e-12, format!("{} nmi {lib} vs oracle {oracle}", agg.name()))?;
        got.push(lib);
    }
    ensure(got[0] < got[1] && got[1] < got[2], format!("not strictly increasing: {got:?}"))?;
    Ok(format!("nmi {:.4} < {:.4} < {:.4}", got[0], got[1], got[2]))
}

fn permutation_test() -> Result<String, String> {
    let (xs, ys) = fixture_columns(&Aggregator::CUBES);
    let pair = DiscretePair::new(xs, ys).unwrap();
    let p: f64 = permutation_pvalue(&pair, PermutationStatistic::MutualInformation, 1_000_000, 20240601).unwrap();
    ensure(p <= 1e-5, format!("p = {p} with 10^6 permutations (required <= 1e-5)"))?;
    Ok(format!("p = {p:.2e}"))
}

fn variance_pathology() -> Result<String, String> {
    let lattice = build_lattice(&Aggregator::ISS).unwrap();
    let mut out = Vec::new();
    for (pair, want_var, want_ranks) in [([33i32, 34], 0.5, [28, 29]), ([38, 41], 4.5, [32, 33]), ([42, 43], 0.5, [34, 35])] {
        let v: f64 = sample_variance(&pair.map(f64::from)).unwrap();
        ensure(v == want_var, format!("variance of {pair:?} is {v}"))?;
        let ranks = pair.map(|s| lattice.rank_of(Score::integer(i64::from(s))).unwrap());
        ensure(ranks == want_ranks, format!("ranks of {pair:?} are {ranks:?}"))?;
        out.push(format!("{v}"));
    }
    Ok(format!("variances {}", out.join(", ")))
}

fn axiom_witnesses() -> Result<String, String> {
    let iss = Aggregator::ISS;
    let s = |v: i64| Score::integer(v);

    let comp = audit_compensation(&iss, &ChangeVector::new(0, 1, -2)).unwrap();
    let w = comp
        .iter()
        .find(|w| w.patient1.before == t(5, 4, 3) && w.patient2.before == t(4, 4, 4))
        .ok_or("compensation witness missing")?;
    ensure(
        (w.patient1.score_before, w.patient1.score_after, w.patient2.score_before, w.patient2.score_after)
            == (s(50), s(51), s(48), s(45)),
        "compensation scores",
    )?;
    ensure(w.patient1.after == t(5, 5, 1) && w.patient2.after == t(5, 4, 2), "compensation profiles")?;

    for (steps, history) in [
        ([ChangeVector::new(-1, 0, 0), ChangeVector::new(0, -1, 0)], [(32, 33), (25, 24), (20, 21)]),
        ([ChangeVector::new(0, 1, 0), ChangeVector::new(0, 0, 1)], [(32, 33), (41, 38), (42, 43)]),
    ] {
        let traces = audit_alternation(&iss, &steps).unwrap();
        let tr = traces
            .iter()
            .find(|x| x.patient1 == t(4, 4, 0) && x.patient2 == t(5, 2, 2))
            .ok_or("alternation trace missing")?;
        let want: Vec<(Score, Score)> = history.iter().map(|&(a, b)| (s(a), s(b))).collect();
        ensure(tr.score_history == want, format!("history {:?}", tr.score_history))?;
        ensure(tr.flips == 2, format!("{} flips", tr.flips))?;
    }

    let ind = audit_independence(&iss, &ChangeVector::new(1, 0, 0), &ChangeVector::new(0, 1, 0)).unwrap();
    let w = ind
        .iter()
        .find(|w| w.base_pair() == (t(3, 2, 0), t(4, 0, 0)))
        .ok_or("independence witness missing")?;
    ensure(w.shifted_pair() == (t(4, 2, 0), t(5, 0, 0)), "shifted pair")?;
    let eight = [
        w.pair1_before.score_x,
        w.pair1_before.score_y,
        w.pair1_after.score_x,
        w.pair1_after.score_y,
        w.pair2_before.score_x,
        w.pair2_before.score_y,
        w.pair2_after.score_x,
        w.pair2_after.score_y,
    ];
    ensure(eight == [13, 16, 18, 17, 20, 25, 25, 26].map(s), format!("scores {eight:?}"))?;
    Ok("compensation, two alternation traces and the independence witness reproduced".into())
}

fn linear_nullity() -> Result<String, String> {
    let sum = Aggregator::SUM;
    let changes = ChangeVector::up_to_steps(2);
    let mut audits = 0;
    for c in &changes {
        ensure(audit_compensation(&sum, c).unwrap().is_empty(), format!("compensation under {c}"))?;
        ensure(audit_alternation(&sum, &[*c]).unwrap().is_empty(), format!("alternation under {c}"))?;
        for shift in &changes {
            ensure(audit_independence(&sum, shift, c).unwrap().is_empty(), format!("independence {shift} / {c}"))?;
            audits += 1;
        }
        audits += 2;
    }
    ensure(search_alternation(&sum, 2).unwrap().is_empty(), "alternation over unit sequences of length 2")?;
    Ok(format!("{} changes, {audits} audits plus 42 unit sequences, all empty", changes.len()))
}

fn step_plots() -> Result<String, String> {
    let iss = step_plot(&baker_profiles(), &Aggregator::ISS).unwrap();
    let at34: Vec<String> = iss.mortalities_at(Score::integer(34)).iter().map(ToString::to_string).collect();
    ensure(at34 == ["43", "59"], format!("ISS 34 -> {at34:?}"))?;
    ensure(!iss.is_functional(), "ISS plot should not be functional")?;
    let cubes = step_plot(&baker_profiles(), &Aggregator::CUBES).unwrap();
    ensure(cubes.is_functional(), "cubes plot has a vertical segment")?;
    Ok("ISS 34 -> 43% and 59%; cubes single-valued".into())
}

fn property_sweep() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.gen_range(2..40);
        let xs: Vec<u8> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        let ys: Vec<u8> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let p = DiscretePair::new(xs.clone(), ys).unwrap();
        let mi: f64 = mutual_information_bits(&p);
        let mi_swapped: f64 = mutual_information_bits(&p.swapped());
        ensure(mi >= 0.0 && (mi - mi_swapped).abs() < 1e-12, "MI nonnegativity or symmetry")?;
        if xs.iter().any(|x| *x != xs[0]) {
            let self_nmi: f64 = normalized_mi(&DiscretePair::new(xs.clone(), xs).unwrap()).unwrap();
            ensure((self_nmi - 1.0).abs() < 1e-12, "NMI(X,X) != 1")?;
        }

        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let (a, b) = (rng.gen_range(0.1..5.0), rng.gen_range(-3.0..3.0));
        let r1: f64 = pearson(&PairedSample::new(u.clone(), v.clone()).unwrap()).unwrap();
        let r2: f64 = pearson(&PairedSample::new(u.iter().map(|x| a * x + b).collect(), v.clone()).unwrap()).unwrap();
        ensure((r1 - r2).abs() < 1e-9, "pearson affine invariance")?;
        let rank = |w: &[f64]| -> Vec<f64> {
            w.iter().map(|x| w.iter().filter(|y| *y < x).count() as f64 + 1.0).collect()
        };
        let (rho, ties) = spearman(&PairedSample::new(u.clone(), v.clone()).unwrap()).unwrap();
        let direct: f64 = pearson(&PairedSample::new(rank(&u), rank(&v)).unwrap()).unwrap();
        ensure(ties || (rho - direct).abs() < 1e-9, "spearman vs pearson on ranks")?;
    }

    // ordinal invariance: a strictly increasing rescaling leaves lattice
    // ranks and discordance untouched
    let warped = Aggregator::ISS
        .map_scores("warped", |s| Score::from_ratio(s.ratio() * s.ratio() * 3 + s.ratio()))
        .unwrap();
    let (base, moved) = (build_lattice(&Aggregator::ISS).unwrap(), build_lattice(&warped).unwrap());
    ensure(base.len() == moved.len(), "lattice size changed under rescaling")?;
    for (e1, e2) in base.entries().zip(moved.entries()) {
        ensure(e1.triples == e2.triples, "lattice classes changed under rescaling")?;
    }
    let d = discordance(&warped, &Aggregator::CUBES).unwrap();
    ensure(d.count == 84 && discordance(&Aggregator::ISS, &warped).unwrap().count == 0, "discordance changed")?;

    // determinism of seeded operations
    let (xs, ys) = fixture_columns(&Aggregator::ISS);
    let pair = DiscretePair::new(xs, ys).unwrap();
    let p1: f64 = permutation_pvalue(&pair, PermutationStatistic::MutualInformation, 5000, 3).unwrap();
    let p2: f64 = permutation_pvalue(&pair, PermutationStatistic::MutualInformation, 5000, 3).unwrap();
    ensure(p1 == p2, "permutation p-value not deterministic")?;
    let cfg = SimConfig {
        cohort_size: 3000,
        seed: 11,
        distribution: GradeDistribution::identical([0.35, 0.2, 0.15, 0.12, 0.1, 0.08]),
        outcome: OutcomeModel::default(),
        candidates: vec![Aggregator::SUM, Aggregator::ISS, Aggregator::CUBES],
        objective: Objective::NmiWithOutcome,
    };
    let cohort = sample_cohort(&cfg).unwrap();
    ensure(cohort == sample_cohort(&cfg).unwrap(), "simulation not deterministic")?;

    // self-selection: an outcome generated by aggregator k is best explained by k
    for (k, agg) in cfg.candidates.iter().enumerate() {
        let own: Vec<SimPatient> = cohort
            .iter()
            .map(|p| SimPatient {
                outcome: agg.aggregate(&p.triple).unwrap().to_integer().unwrap(),
                ..*p
            })
            .collect();
        for objective in [Objective::NmiWithOutcome, Objective::PearsonWithOutcome] {
            let r = evaluate_candidates(&own, &cfg.candidates, objective, &cfg.outcome).unwrap();
            ensure(r.selected == agg.name(), format!("{objective:?}: {} selected for outcome from {}", r.selected, agg.name()))?;
            ensure((r.metrics[k].value.unwrap() - 1.0).abs() < 1e-12, "own metric below 1")?;
        }
        let truth = OutcomeModel::LogisticInScore {
            reference: agg.clone(),
            intercept: -4.0,
            slope: 0.05,
        };
        let r = evaluate_candidates(&cohort, &cfg.candidates, Objective::DiscordanceVsTruth, &truth).unwrap();
        ensure(r.selected == agg.name(), format!("discordance: {} selected for {}", r.selected, agg.name()))?;
    }
    Ok("information identities, affine/rank invariance, ordinal invariance, determinism, self-selection".into())
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("enumeration", enumeration),
        ("discordance census", discordance_census),
        ("pearson association", association),
        ("nmi ordering", nmi_ordering),
        ("permutation test", permutation_test),
        ("variance pathology", variance_pathology),
        ("axiom witnesses", axiom_witnesses),
        ("linear nullity", linear_nullity),
        ("step plots", step_plots),
        ("property sweep", property_sweep),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
