use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use iss_core::axioms::{
    audit_alternation, audit_compensation, audit_independence, render_alternation, render_compensation,
    render_independence, search_alternation, ChangeVector,
};
use iss_core::cohort::{association_report, load_cohort, CohortTable, ReportOptions, Weighting};
use iss_core::fixtures::baker_profiles;
use iss_core::io::{parse_aggregator, read_injuries, read_mapping, read_profiles};
use iss_core::lattice::{build_lattice, discordance, enumerate_triples, gaps};
use iss_core::plot::step_plot;
use iss_core::sim::{simulate, write_cohort_dump, SimConfig};
use iss_core::{reproduce, triple_iss, triple_niss, Aggregator, Error, RegionMapping};

#[derive(Parser)]
#[command(name = "iss", version, about = "Injury severity aggregation: scoring, lattices, discordance, association, audits")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Permutations for p-values.
    #[arg(long, global = true, default_value_t = 10_000)]
    permutations: u64,
    /// Write machine-readable output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Score profile rows (r1..r6) or injury records (case_id,region,grade).
    Score {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "power:2")]
        rule: String,
        /// Treat the input as injury records and report ISS and NISS triples.
        #[arg(long)]
        injuries: bool,
        /// Region mapping CSV (region,iss_region) for injury records.
        #[arg(long)]
        mapping: Option<PathBuf>,
    },
    /// All 55 nonzero triples with their scores.
    Enumerate {
        #[arg(long = "rule", default_values_t = ["power:1".to_string(), "power:2".to_string(), "power:3".to_string()])]
        rules: Vec<String>,
    },
    /// Distinct values of a rule, ranked, with their triples.
    Lattice {
        #[arg(long, default_value = "power:2")]
        rule: String,
    },
    /// Differences between consecutive lattice values.
    Gaps {
        #[arg(long, default_value = "power:2")]
        rule: String,
    },
    /// Rank reversals between two rules over all pairs of triples.
    Discord {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        /// Include the discordant pairs.
        #[arg(long)]
        list: bool,
    },
    /// Association of rules with mortality on a cohort table (a,b,c,mortality[,count]).
    Associate {
        /// Defaults to the bundled 12-row table.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long = "rule", default_values_t = ["power:1".to_string(), "power:2".to_string(), "power:3".to_string()])]
        rules: Vec<String>,
        #[arg(long, value_enum, default_value_t = WeightingArg::Equal)]
        weighting: WeightingArg,
        /// Emit step-plot data for this rule instead of the report.
        #[arg(long)]
        plot: Option<String>,
    },
    /// Axiom audits.
    Audit {
        #[command(subcommand)]
        audit: Audit,
    },
    /// Monte-Carlo cohort and aggregator selection from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Also write the sampled cohort as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Regenerate a reference table and check it against its golden copy.
    Reproduce {
        #[arg(long)]
        table: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Equal,
    Count,
}

#[derive(Subcommand)]
enum Audit {
    Compensation {
        #[arg(long, default_value = "power:2")]
        aggregator: String,
        #[arg(long, allow_hyphen_values = true)]
        change: String,
    },
    Alternation {
        #[arg(long, default_value = "power:2")]
        aggregator: String,
        /// Semicolon-separated changes, e.g. "-1,0,0;0,-1,0".
        #[arg(long, allow_hyphen_values = true, conflicts_with = "search_depth")]
        steps: Option<String>,
        /// Try every sequence of unit changes up to this length.
        #[arg(long)]
        search_depth: Option<usize>,
    },
    Independence {
        #[arg(long, default_value = "power:2")]
        aggregator: String,
        #[arg(long, allow_hyphen_values = true)]
        shift: String,
        #[arg(long, allow_hyphen_values = true)]
        change: String,
    },
}

struct Output {
    text: String,
    summary: Vec<String>,
}

type Run = Result<Output, Error>;

fn rule(spec: &str) -> Result<Aggregator, Error> {
    parse_aggregator(spec, Some(Path::new(".")))
}

fn json(v: &impl serde::Serialize) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, Error> {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn unsupported(format: Format, what: &str) -> Error {
    let name = match format {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Svg => "svg",
    };
    Error::InvalidConfig(format!("--format {name} is not available for {what}"))
}

fn out(text: String, summary: impl Into<String>) -> Run {
    Ok(Output {
        text,
        summary: vec![summary.into()],
    })
}

fn score_cmd(g: &Global, input: &Path, spec: &str, injuries: bool, mapping: Option<&Path>) -> Run {
    let agg = rule(spec)?;
    if injuries {
        let mapping = match mapping {
            Some(p) => read_mapping(p)?,
            None => RegionMapping::default(),
        };
        let cases = read_injuries(input)?;
        let mut rows = Vec::with_capacity(cases.len());
        for c in &cases {
            let (iss, niss) = (triple_iss(c, &mapping), triple_niss(c));
            rows.push((c.case_id.clone(), iss, agg.aggregate(&iss)?, niss, agg.aggregate(&niss)?));
        }
        let text = match g.format {
            Format::Json => json(
                &rows
                    .iter()
                    .map(|(id, t, s, nt, ns)| json!({"case_id": id, "triple": t, "score": s, "niss_triple": nt, "niss_score": ns}))
                    .collect::<Vec<_>>(),
            )?,
            Format::Csv => csv(
                &["case_id", "a", "b", "c", "score", "niss_a", "niss_b", "niss_c", "niss_score"],
                rows.iter().map(|(id, t, s, nt, ns)| {
                    let mut r = vec![id.clone()];
                    r.extend(t.values().iter().map(u8::to_string));
                    r.push(s.to_string());
                    r.extend(nt.values().iter().map(u8::to_string));
                    r.push(ns.to_string());
                    r
                }),
            )?,
            f => return Err(unsupported(f, "score")),
        };
        return out(text, format!("scored {} case(s) with {}", rows.len(), agg.name()));
    }
    let records = read_profiles(input)?;
    let mut rows = Vec::with_capacity(records.len());
    for r in &records {
        let t = iss_core::triple_from_profile(&r.profile);
        rows.push((r.id.clone(), r.profile, t, agg.aggregate(&t)?));
    }
    let text = match g.format {
        Format::Json => json(
            &rows
                .iter()
                .map(|(id, p, t, s)| json!({"id": id, "profile": p.values(), "triple": t, "score": s}))
                .collect::<Vec<_>>(),
        )?,
        Format::Csv => csv(
            &["id", "a", "b", "c", "score"],
            rows.iter().map(|(id, _, t, s)| {
                let mut r = vec![id.clone()];
                r.extend(t.values().iter().map(u8::to_string));
                r.push(s.to_string());
                r
            }),
        )?,
        f => return Err(unsupported(f, "score")),
    };
    out(text, format!("scored {} profile(s) with {}", rows.len(), agg.name()))
}

fn enumerate_cmd(g: &Global, specs: &[String]) -> Run {
    let aggs = specs.iter().map(|s| rule(s)).collect::<Result<Vec<_>, _>>()?;
    let triples = enumerate_triples();
    let mut rows = Vec::new();
    for t in &triples {
        let scores = aggs.iter().map(|a| a.aggregate(t)).collect::<Result<Vec<_>, _>>()?;
        rows.push((*t, scores));
    }
    let text = match g.format {
        Format::Json => json(
            &rows
                .iter()
                .map(|(t, s)| {
                    let scores: serde_json::Map<String, Value> =
                        aggs.iter().zip(s).map(|(a, s)| (a.name(), json!(s))).collect();
                    json!({"triple": t, "scores": scores})
                })
                .collect::<Vec<_>>(),
        )?,
        Format::Csv => {
            let names: Vec<String> = aggs.iter().map(Aggregator::name).collect();
            let mut header = vec!["a", "b", "c"];
            header.extend(names.iter().map(String::as_str));
            csv(
                &header,
                rows.iter().map(|(t, s)| {
                    let mut r: Vec<String> = t.values().iter().map(u8::to_string).collect();
                    r.extend(s.iter().map(ToString::to_string));
                    r
                }),
            )?
        }
        f => return Err(unsupported(f, "enumerate")),
    };
    let mut summary = vec![format!("{} nonzero triples", triples.len())];
    for a in &aggs {
        summary.push(format!("{}: {} distinct values", a.name(), build_lattice(a)?.len()));
    }
    Ok(Output { text, summary })
}

fn joined_triples(ts: &[iss_core::SeverityTriple]) -> String {
    ts.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn lattice_cmd(g: &Global, spec: &str) -> Run {
    let agg = rule(spec)?;
    let lattice = build_lattice(&agg)?;
    let entries: Vec<_> = lattice.entries().collect();
    let text = match g.format {
        Format::Json => json(&json!({"aggregator": agg.name(), "entries": entries}))?,
        Format::Csv => csv(
            &["rank", "value", "triples"],
            entries
                .iter()
                .map(|e| vec![e.rank.to_string(), e.value.to_string(), joined_triples(&e.triples)]),
        )?,
        f => return Err(unsupported(f, "lattice")),
    };
    out(text, format!("{}: {} distinct values", agg.name(), lattice.len()))
}

fn gaps_cmd(g: &Global, spec: &str) -> Run {
    let agg = rule(spec)?;
    let profile = gaps(&build_lattice(&agg)?);
    let text = match g.format {
        Format::Json => json(&json!({"aggregator": agg.name(), "gaps": profile}))?,
        Format::Csv => csv(
            &["rank", "value", "next", "gap"],
            profile
                .iter()
                .map(|x| vec![x.rank.to_string(), x.value.to_string(), x.next.to_string(), x.gap.to_string()]),
        )?,
        f => return Err(unsupported(f, "gaps")),
    };
    let widest = profile.iter().map(|x| x.gap).max();
    out(
        text,
        format!(
            "{}: {} gaps, widest {}",
            agg.name(),
            profile.len(),
            widest.map_or("-".into(), |w| w.to_string())
        ),
    )
}

fn discord_cmd(g: &Global, f: &str, gg: &str, list: bool) -> Run {
    let (fa, ga) = (rule(f)?, rule(gg)?);
    let mut report = discordance(&fa, &ga)?;
    let summary = format!(
        "{} vs {}: {} of {} pairs discordant ({:.2}%), {} unordered",
        report.f, report.g, report.count, report.total_pairs, report.percent, report.unordered_count
    );
    let text = match g.format {
        Format::Json => {
            if !list {
                report.discordant_pairs.clear();
            }
            let mut v = serde_json::to_value(&report)?;
            if !list {
                v.as_object_mut().expect("report is an object").remove("discordant_pairs");
            }
            json(&v)?
        }
        Format::Csv if list => csv(
            &["x", "y", "f_x", "f_y", "g_x", "g_y"],
            report.discordant_pairs.iter().map(|p| {
                vec![
                    p.x.to_string(),
                    p.y.to_string(),
                    p.f_x.to_string(),
                    p.f_y.to_string(),
                    p.g_x.to_string(),
                    p.g_y.to_string(),
                ]
            }),
        )?,
        Format::Csv => csv(
            &["f", "g", "total_pairs", "count", "unordered_count", "percent"],
            [vec![
                report.f.clone(),
                report.g.clone(),
                report.total_pairs.to_string(),
                report.count.to_string(),
                report.unordered_count.to_string(),
                format!("{:.4}", report.percent),
            ]],
        )?,
        fmt => return Err(unsupported(fmt, "discord")),
    };
    out(text, summary)
}

fn associate_cmd(g: &Global, input: Option<&Path>, specs: &[String], weighting: WeightingArg, plot: Option<&str>) -> Run {
    let cohort: CohortTable = match input {
        Some(p) => load_cohort(p)?,
        None => baker_profiles(),
    };
    if let Some(spec) = plot {
        let data = step_plot(&cohort, &rule(spec)?)?;
        let summary = format!(
            "{}: {} points, {}",
            data.aggregator,
            data.points.len(),
            if data.is_functional() { "single-valued" } else { "has vertical segments" }
        );
        let text = match g.format {
            Format::Json => json(&data)?,
            Format::Csv => data.to_csv(),
            Format::Svg => data.to_svg(),
        };
        return out(text, summary);
    }
    let aggs = specs.iter().map(|s| rule(s)).collect::<Result<Vec<_>, _>>()?;
    let options = ReportOptions {
        permutations: g.permutations,
        seed: g.seed.unwrap_or(0),
        weighting: match weighting {
            WeightingArg::Equal => Weighting::Equal,
            WeightingArg::Count => Weighting::Count,
        },
    };
    let report = association_report::<f64>(&cohort, &aggs, &options)?;
    let summary = report
        .iter()
        .map(|r| match r.stats() {
            Some(s) => format!(
                "{}: pearson {:.3}, spearman {:.3}, nmi {:.3}, p {:.3e}",
                r.aggregator, s.pearson, s.spearman, s.nmi, s.p_value
            ),
            None => format!("{}: failed", r.aggregator),
        })
        .collect();
    let text = match g.format {
        Format::Json => json(&json!({"cohort": cohort.name(), "rows": cohort.len(), "seed": options.seed, "aggregators": report}))?,
        Format::Csv => csv(
            &["aggregator", "n", "pearson", "spearman", "has_ties", "mi_bits", "nmi", "p_value", "permutations", "error"],
            report.iter().map(|r| match (&r.stats(), &r.outcome) {
                (Some(s), _) => vec![
                    r.aggregator.clone(),
                    s.n.to_string(),
                    s.pearson.to_string(),
                    s.spearman.to_string(),
                    s.has_ties.to_string(),
                    s.mi_bits.to_string(),
                    s.nmi.to_string(),
                    s.p_value.to_string(),
                    s.permutations.to_string(),
                    String::new(),
                ],
                (None, iss_core::cohort::AssociationOutcome::Failed { error }) => {
                    let mut v = vec![r.aggregator.clone()];
                    v.extend(std::iter::repeat_n(String::new(), 8));
                    v.push(error.clone());
                    v
                }
                (None, _) => unreachable!(),
            }),
        )?,
        f => return Err(unsupported(f, "associate without --plot")),
    };
    Ok(Output { text, summary })
}

fn parse_steps(s: &str) -> Result<Vec<ChangeVector>, Error> {
    s.split(';').filter(|x| !x.trim().is_empty()).map(|x| x.trim().parse()).collect()
}

fn audit_cmd(g: &Global, audit: &Audit) -> Run {
    if g.format != Format::Json {
        return Err(unsupported(g.format, "audit"));
    }
    match audit {
        Audit::Compensation { aggregator, change } => {
            let agg = rule(aggregator)?;
            let c: ChangeVector = change.parse()?;
            let w = audit_compensation(&agg, &c)?;
            let mut summary = vec![format!("{}: {} compensation witness(es) under {c}", agg.name(), w.len())];
            if let Some(first) = w.first() {
                summary.push(render_compensation(&agg, first));
            }
            Ok(Output { text: json(&w)?, summary })
        }
        Audit::Alternation {
            aggregator,
            steps,
            search_depth,
        } => {
            let agg = rule(aggregator)?;
            let traces = match (steps, search_depth) {
                (Some(s), None) => audit_alternation(&agg, &parse_steps(s)?)?,
                (None, depth) => search_alternation(&agg, depth.unwrap_or(2))?,
                (Some(_), Some(_)) => unreachable!("clap rejects both"),
            };
            let mut summary = vec![format!("{}: {} alternating pair(s)", agg.name(), traces.len())];
            if let Some(first) = traces.first() {
                summary.push(render_alternation(&agg, first));
            }
            Ok(Output { text: json(&traces)?, summary })
        }
        Audit::Independence {
            aggregator,
            shift,
            change,
        } => {
            let agg = rule(aggregator)?;
            let (s, c): (ChangeVector, ChangeVector) = (shift.parse()?, change.parse()?);
            let w = audit_independence(&agg, &s, &c)?;
            let mut summary = vec![format!("{}: {} independence witness(es), shift {s}, change {c}", agg.name(), w.len())];
            if let Some(first) = w.first() {
                summary.push(render_independence(&agg, first));
            }
            Ok(Output { text: json(&w)?, summary })
        }
    }
}

fn simulate_cmd(g: &Global, config: &Path, dump: Option<&Path>) -> Run {
    if g.format != Format::Json {
        return Err(unsupported(g.format, "simulate"));
    }
    let mut cfg = SimConfig::from_json_file(config)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let (patients, result) = simulate(&cfg)?;
    if let Some(path) = dump {
        let file = fs::File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        write_cohort_dump(&patients, std::io::BufWriter::new(file))?;
    }
    let mut summary = vec![format!(
        "{} patients, {} deaths, selected {} by {:?}",
        result.cohort.size, result.cohort.deaths, result.selected, result.objective_used
    )];
    summary.extend(result.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(Output {
        text: json(&result)?,
        summary,
    })
}

fn reproduce_cmd(table: &str) -> Run {
    let text = reproduce::reproduce(table)?;
    out(text, format!("table `{table}` matches its golden copy"))
}

fn run(cli: &Cli) -> Run {
    let g = &cli.global;
    match &cli.command {
        Command::Score {
            input,
            rule,
            injuries,
            mapping,
        } => score_cmd(g, input, rule, *injuries, mapping.as_deref()),
        Command::Enumerate { rules } => enumerate_cmd(g, rules),
        Command::Lattice { rule } => lattice_cmd(g, rule),
        Command::Gaps { rule } => gaps_cmd(g, rule),
        Command::Discord { f, g: gg, list } => discord_cmd(g, f, gg, *list),
        Command::Associate {
            input,
            rules,
            weighting,
            plot,
        } => associate_cmd(g, input.as_deref(), rules, *weighting, plot.as_deref()),
        Command::Audit { audit } => audit_cmd(g, audit),
        Command::Simulate { config, dump } => simulate_cmd(g, config, dump.as_deref()),
        Command::Reproduce { table } => reproduce_cmd(table),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = run(&cli).and_then(|o| {
        emit(cli.global.output.as_deref(), &o.text)?;
        Ok(o)
    });
    match result {
        Ok(o) => {
            for line in o.summary {
                eprintln!("{}", line.trim_end());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
