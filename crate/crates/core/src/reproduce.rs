//! Regenerates the reference tables from the library and checks them
//! against the bundled golden TSV files.

use std::fmt::Write as _;

use crate::aggregator::{Aggregator, Score};
use crate::axioms::{
    audit_alternation, audit_compensation, audit_independence, render_alternation, render_compensation,
    render_independence, ChangeVector,
};
use crate::error::{Error, Result};
use crate::fixtures::{baker_profiles, VARIANCE_TOY};
use crate::lattice::build_lattice;
use crate::model::SeverityTriple;
use crate::stats::{pearson, sample_variance, PairedSample};

pub const TABLE_IDS: [&str; 7] = ["pos", "mortality", "variance", "trade", "antimonot", "monot", "independence"];

pub fn golden(id: &str) -> Option<&'static str> {
    Some(match id {
        "pos" => include_str!("../golden/pos.tsv"),
        "mortality" => include_str!("../golden/mortality.tsv"),
        "variance" => include_str!("../golden/variance.tsv"),
        "trade" => include_str!("../golden/trade.tsv"),
        "antimonot" => include_str!("../golden/antimonot.tsv"),
        "monot" => include_str!("../golden/monot.tsv"),
        "independence" => include_str!("../golden/independence.tsv"),
        _ => return None,
    })
}

fn unknown(id: &str) -> Error {
    Error::InvalidConfig(format!("unknown table `{id}`; expected one of {}", TABLE_IDS.join(", ")))
}

/// Computes the named table without looking at its golden copy.
pub fn render_table(id: &str) -> Result<String> {
    match id {
        "pos" => pos(),
        "mortality" => mortality(),
        "variance" => variance(),
        "trade" => trade(),
        "antimonot" => alternation([ChangeVector::new(-1, 0, 0), ChangeVector::new(0, -1, 0)]),
        "monot" => alternation([ChangeVector::new(0, 1, 0), ChangeVector::new(0, 0, 1)]),
        "independence" => independence(),
        _ => Err(unknown(id)),
    }
}

/// Renders the table and fails with a line diff if it differs from the
/// golden file.
pub fn reproduce(id: &str) -> Result<String> {
    let expected = golden(id).ok_or_else(|| unknown(id))?;
    let actual = render_table(id)?;
    if actual == expected {
        Ok(actual)
    } else {
        Err(Error::GoldenMismatch {
            table: id.to_string(),
            diff: line_diff(expected, &actual),
        })
    }
}

pub fn line_diff(expected: &str, actual: &str) -> String {
    let e: Vec<&str> = expected.lines().collect();
    let a: Vec<&str> = actual.lines().collect();
    let mut out = String::new();
    for i in 0..e.len().max(a.len()) {
        let (x, y) = (e.get(i), a.get(i));
        if x != y {
            let _ = writeln!(out, "line {}:", i + 1);
            if let Some(x) = x {
                let _ = writeln!(out, "- {x}");
            }
            if let Some(y) = y {
                let _ = writeln!(out, "+ {y}");
            }
        }
    }
    if out.is_empty() && expected != actual {
        out.push_str("trailing newline differs\n");
    }
    out
}

fn pos() -> Result<String> {
    let cols = [Aggregator::SUM, Aggregator::ISS, Aggregator::CUBES]
        .iter()
        .map(|a| Ok(build_lattice(a)?.values().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let rows = cols.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::from("Rank\tA+B+C\tA^2+B^2+C^2\tA^3+B^3+C^3\n");
    for r in 0..rows {
        let cell = |c: &Vec<Score>| c.get(r).map_or("-".to_string(), Score::to_string);
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r + 1, cell(&cols[0]), cell(&cols[1]), cell(&cols[2]));
    }
    Ok(out)
}

fn mortality() -> Result<String> {
    let cohort = baker_profiles();
    let aggs = [Aggregator::SUM, Aggregator::ISS, Aggregator::CUBES];
    let mut out = String::from("A\tB\tC\tA+B+C\tA^2+B^2+C^2\tA^3+B^3+C^3\tMortality\n");
    for row in cohort.rows() {
        let [a, b, c] = row.triple.values();
        let _ = write!(out, "{a}\t{b}\t{c}");
        for agg in &aggs {
            let _ = write!(out, "\t{}", agg.aggregate(&row.triple)?);
        }
        let _ = writeln!(out, "\t{}%", row.mortality);
    }
    let ys: Vec<f64> = cohort.rows().iter().map(|r| r.mortality.percent()).collect();
    out.push_str("Correlation with mortality\t\t");
    for agg in &aggs {
        let xs = cohort
            .rows()
            .iter()
            .map(|r| Ok(agg.aggregate(&r.triple)?.to_f64()))
            .collect::<Result<Vec<_>>>()?;
        let _ = write!(out, "\t{:.2}", pearson(&PairedSample::new(xs, ys.clone())?)?);
    }
    let _ = writeln!(out, "\t{:.2}", pearson(&PairedSample::new(ys.clone(), ys)?)?);
    Ok(out)
}

fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn variance() -> Result<String> {
    let lattice = build_lattice(&Aggregator::ISS)?;
    let mut out = String::from(
        "Sample\tPatient 1 ISS profile\tPatient 2 ISS profile\tPatient 1 ISS\tPatient 2 ISS\tVariance of ISS\n",
    );
    for (label, p1, p2) in VARIANCE_TOY {
        let t1 = SeverityTriple::new(p1[0], p1[1], p1[2])?;
        let t2 = SeverityTriple::new(p2[0], p2[1], p2[2])?;
        let (s1, s2) = (Aggregator::ISS.aggregate(&t1)?, Aggregator::ISS.aggregate(&t2)?);
        let rank = |s: Score| lattice.rank_of(s).map(ordinal).unwrap_or_default();
        let var: f64 = sample_variance(&[s1.to_f64(), s2.to_f64()])?;
        let _ = writeln!(out, "{label}\t{t1}\t{t2}\t{s1} ({})\t{s2} ({})\t{var}", rank(s1), rank(s2));
    }
    Ok(out)
}

fn triple(a: u8, b: u8, c: u8) -> SeverityTriple {
    SeverityTriple::new(a, b, c).expect("literal triple is sorted")
}

fn not_found(what: &str) -> Error {
    Error::Empty(match what {
        "compensation" => "audit found no compensation witness for the reference pair",
        "alternation" => "audit found no alternation trace for the reference pair",
        _ => "audit found no independence witness for the reference pairs",
    })
}

fn trade() -> Result<String> {
    let change = ChangeVector::new(0, 1, -2);
    let w = audit_compensation(&Aggregator::ISS, &change)?
        .into_iter()
        .find(|w| w.patient1.before == triple(5, 4, 3) && w.patient2.before == triple(4, 4, 4))
        .ok_or_else(|| not_found("compensation"))?;
    Ok(render_compensation(&Aggregator::ISS, &w))
}

fn alternation(steps: [ChangeVector; 2]) -> Result<String> {
    let t = audit_alternation(&Aggregator::ISS, &steps)?
        .into_iter()
        .find(|t| t.patient1 == triple(4, 4, 0) && t.patient2 == triple(5, 2, 2))
        .ok_or_else(|| not_found("alternation"))?;
    Ok(render_alternation(&Aggregator::ISS, &t))
}

fn independence() -> Result<String> {
    let w = audit_independence(&Aggregator::ISS, &ChangeVector::new(1, 0, 0), &ChangeVector::new(0, 1, 0))?
        .into_iter()
        .find(|w| w.base_pair() == (triple(3, 2, 0), triple(4, 0, 0)))
        .ok_or_else(|| not_found("independence"))?;
    Ok(render_independence(&Aggregator::ISS, &w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_table_matches_its_golden_file() {
        for id in TABLE_IDS {
            if let Err(e) = reproduce(id) {
                panic!("{id}: {e}");
            }
        }
    }

    /// The printed sample C lists 42 beside (5,3,3) and 43 beside (5,4,1);
    /// the arithmetic gives the reverse. The golden file carries the
    /// computed cells, the profiles (one unit per sample) as printed.
    #[test]
    fn printed_variance_sample_c_swaps_its_scores() {
        let iss = |a, b, c| Aggregator::ISS.aggregate(&triple(a, b, c)).unwrap();
        assert_eq!(iss(5, 3, 3), Score::integer(43));
        assert_eq!(iss(5, 4, 1), Score::integer(42));
        assert!(golden("variance").unwrap().contains("(5,3,3)\t(5,4,1)\t43 (35th)\t42 (34th)"));
    }

    #[test]
    fn unknown_table_is_rejected() {
        assert!(matches!(reproduce("nope"), Err(Error::InvalidConfig(_))));
        assert!(render_table("nope").is_err());
    }

    #[test]
    fn diff_names_changed_lines() {
        let d = line_diff("a\nb\nc\n", "a\nx\nc\nd\n");
        assert_eq!(d, "line 2:\n- b\n+ x\nline 4:\n+ d\n");
    }

    #[test]
    fn ordinals() {
        let got: Vec<String> = [1, 2, 3, 4, 11, 12, 13, 21, 22, 28, 33].iter().map(|n| ordinal(*n)).collect();
        assert_eq!(got, ["1st", "2nd", "3rd", "4th", "11th", "12th", "13th", "21st", "22nd", "28th", "33rd"]);
    }
}
