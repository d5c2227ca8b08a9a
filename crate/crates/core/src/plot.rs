//! Step-plot data of mortality against an aggregate score.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::aggregator::{Aggregator, Score};
use crate::cohort::{CohortTable, MortalityRate};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct StepPoint {
    pub score: Score,
    pub mortality: MortalityRate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepPlotData {
    pub aggregator: String,
    /// One point per cohort row, sorted by score then mortality.
    pub points: Vec<StepPoint>,
}

pub fn step_plot(cohort: &CohortTable, agg: &Aggregator) -> Result<StepPlotData> {
    let mut points = cohort
        .rows()
        .iter()
        .map(|r| {
            Ok(StepPoint {
                score: agg.aggregate(&r.triple)?,
                mortality: r.mortality,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort();
    Ok(StepPlotData {
        aggregator: agg.name(),
        points,
    })
}

impl StepPlotData {
    /// True when no score carries two different mortality rates (no
    /// vertical segments).
    pub fn is_functional(&self) -> bool {
        let mut seen: HashMap<Score, MortalityRate> = HashMap::new();
        self.points
            .iter()
            .all(|p| *seen.entry(p.score).or_insert(p.mortality) == p.mortality)
    }

    pub fn mortalities_at(&self, score: Score) -> Vec<MortalityRate> {
        let mut m: Vec<_> = self.points.iter().filter(|p| p.score == score).map(|p| p.mortality).collect();
        m.dedup();
        m
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("score,mortality\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{}", p.score, p.mortality);
        }
        out
    }

    /// A fixed 800×600 SVG: step polyline through the sorted points, with a
    /// marker at each point. Mortality runs 0..100 on the vertical axis.
    pub fn to_svg(&self) -> String {
        const W: f64 = 800.0;
        const H: f64 = 600.0;
        const M: f64 = 60.0;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<path d="M{M} {M} L{M} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#,
            y0 = H - M,
            x1 = W - M
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="14" text-anchor="middle">{}</text>"#,
            self.aggregator,
            x = W / 2.0,
            y = H - M / 3.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="14" text-anchor="middle" transform="rotate(-90 {x} {y})">mortality (%)</text>"#,
            x = M / 3.0,
            y = H / 2.0
        );
        if let (Some(first), Some(last)) = (self.points.first(), self.points.last()) {
            let (lo, hi) = (first.score.to_f64(), last.score.to_f64());
            let span = if hi > lo { hi - lo } else { 1.0 };
            let px = |s: Score| M + (s.to_f64() - lo) / span * (W - 2.0 * M);
            let py = |m: MortalityRate| H - M - m.percent::<f64>() / 100.0 * (H - 2.0 * M);
            let mut coords = Vec::with_capacity(self.points.len() * 2);
            for (i, p) in self.points.iter().enumerate() {
                if i > 0 {
                    coords.push(format!("{:.2},{:.2}", px(p.score), py(self.points[i - 1].mortality)));
                }
                coords.push(format!("{:.2},{:.2}", px(p.score), py(p.mortality)));
            }
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
                coords.join(" ")
            );
            for p in &self.points {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
                    px(p.score),
                    py(p.mortality)
                );
            }
            let _ = writeln!(svg, r#"<text x="{M}" y="{y}" font-size="12">{lo}</text>"#, y = H - M + 16.0);
            let _ = writeln!(
                svg,
                r#"<text x="{x}" y="{y}" font-size="12" text-anchor="end">{hi}</text>"#,
                x = W - M,
                y = H - M + 16.0
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}
