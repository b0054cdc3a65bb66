use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gonscan::modgroup::LevelGroup;
use gonscan::pipeline::{self, CandidateKind, Engine, PipelineError};
use gonscan::{quadclass, trigfield};

#[derive(Parser)]
#[command(
    name = "gonscan",
    version,
    about = "Gonality of reductions of intermediate modular curves"
)]
struct Cli {
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// directory of externally supplied basis files (X<N>_<delta>.mfb)
    #[arg(long, global = true)]
    basis_dir: Option<PathBuf>,
    /// added to the default q-expansion precision
    #[arg(long, global = true, default_value_t = 0)]
    precision_slack: usize,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Hyperelliptic,
    Trigonal,
}

#[derive(Subcommand)]
enum Command {
    /// imaginary quadratic orders by class number
    Classnum {
        #[arg(long)]
        max_h: u64,
    },
    /// levels by number of fixed points of the Fricke involution
    Ram {
        #[arg(long)]
        max_d: u64,
    },
    /// candidate levels with their audit trail
    Candidates {
        #[arg(long, value_enum)]
        kind: Kind,
    },
    /// Petri analysis of one curve
    Petri {
        #[arg(long)]
        level: u64,
        #[arg(long, default_value = "full")]
        delta: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        degree: u8,
    },
    /// discriminant of the quadric of a genus-4 curve
    Trigfield {
        #[arg(long)]
        level: u64,
        #[arg(long, default_value = "full")]
        delta: String,
    },
    Theorem {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
    },
    Table {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
    },
}

/// A report in all three formats.
struct Report {
    json: serde_json::Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    text: String,
}

impl Report {
    fn new<T: Serialize>(
        value: &T,
        header: Vec<&'static str>,
        rows: Vec<Vec<String>>,
        text: String,
    ) -> Self {
        Report {
            json: serde_json::to_value(value).expect("serializable report"),
            header,
            rows,
            text,
        }
    }

    fn render(&self, format: Format) -> Result<String, PipelineError> {
        Ok(match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("json");
                s.push('\n');
                s
            }
            Format::Text => self.text.clone(),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| PipelineError::Io(e.to_string());
                w.write_record(&self.header).map_err(io)?;
                for r in &self.rows {
                    w.write_record(r).map_err(io)?;
                }
                let bytes = w
                    .into_inner()
                    .map_err(|e| PipelineError::Io(e.to_string()))?;
                String::from_utf8(bytes).expect("utf8")
            }
        })
    }
}

fn set_text(s: &std::collections::BTreeSet<u64>) -> String {
    let v: Vec<String> = s.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn engine(cli: &Cli) -> Result<Engine, PipelineError> {
    let mut e = Engine::new(cli.precision_slack);
    if let Some(d) = &cli.cache_dir {
        e = e.with_cache(d)?;
    }
    if let Some(d) = &cli.basis_dir {
        e = e.with_basis_dir(d);
    }
    Ok(e)
}

fn run(cli: &Cli) -> Result<Report, PipelineError> {
    match &cli.command {
        Command::Classnum { max_h } => {
            let t = quadclass::class_number_table(*max_h)?;
            let rows = t
                .iter()
                .map(|r| vec![r.h.to_string(), r.count.to_string(), r.smallest.to_string()])
                .collect::<Vec<_>>();
            let text = rows
                .iter()
                .map(|r| format!("{:>4} {:>5} {:>8}\n", r[0], r[1], r[2]))
                .collect();
            Ok(Report::new(&t, vec!["h", "count", "smallest"], rows, text))
        }
        Command::Ram { max_d } => {
            let t = quadclass::ramification_table(*max_d)?;
            let rows = t
                .iter()
                .map(|r| vec![r.d.to_string(), r.count.to_string(), r.largest.to_string()])
                .collect::<Vec<_>>();
            let text = rows
                .iter()
                .map(|r| format!("{:>4} {:>5} {:>8}\n", r[0], r[1], r[2]))
                .collect();
            Ok(Report::new(&t, vec!["d", "count", "largest"], rows, text))
        }
        Command::Candidates { kind } => {
            let kind = match kind {
                Kind::Hyperelliptic => CandidateKind::Hyperelliptic,
                Kind::Trigonal => CandidateKind::Trigonal,
            };
            let c = pipeline::compute_candidates(kind, &engine(cli)?)?;
            let rows = c
                .audit
                .iter()
                .map(|a| {
                    vec![
                        a.level.to_string(),
                        a.admitted.to_string(),
                        a.reason.clone(),
                    ]
                })
                .collect();
            let mut text = format!("levels ({}): {:?}\n", c.levels.len(), c.levels);
            for w in &c.pruned {
                text += &format!(
                    "pruned {} via sublevel {}: nu({};{}) = {}, quotient genus {}\n",
                    w.level, w.sublevel, w.d, w.sublevel, w.nu, w.quotient_genus
                );
            }
            Ok(Report::new(&c, vec!["N", "admitted", "reason"], rows, text))
        }
        Command::Petri {
            level,
            delta,
            degree,
        } => {
            let g = LevelGroup::parse(*level, delta)?;
            let r = engine(cli)?.report(&g, *degree as usize)?;
            let trig = r
                .trigonal_quintic_primes
                .as_ref()
                .map(set_text)
                .unwrap_or_default();
            let row = vec![
                r.level.to_string(),
                r.delta.clone(),
                r.genus.to_string(),
                r.char0_hyperelliptic.to_string(),
                set_text(&r.hyperelliptic_primes),
                r.char0_trigonal_or_quintic
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
                trig.clone(),
            ];
            let mut text = format!(
                "X({}, {}) genus {} precision {}\nhyperelliptic over Q: {}; at primes {}\n",
                r.level, r.delta, r.genus, r.precision, r.char0_hyperelliptic, row[4]
            );
            if let Some(t) = r.char0_trigonal_or_quintic {
                text += &format!("trigonal or quintic over Q: {t}; at primes {trig}\n");
            }
            for (p, why) in &r.inapplicable_primes {
                text += &format!("p = {p}: {why}\n");
            }
            let header = vec![
                "N",
                "delta",
                "genus",
                "hyperelliptic",
                "hyperelliptic_primes",
                "trigonal",
                "trigonal_primes",
            ];
            Ok(Report::new(&r, header, vec![row], text))
        }
        Command::Trigfield { level, delta } => {
            let g = LevelGroup::parse(*level, delta)?;
            let b = engine(cli)?.basis(&g)?;
            let q = trigfield::extract_quadric(&b)?;
            let rep = trigfield::discriminant_of_quadric(&g, &q);
            let mut text = format!(
                "X({}, {}) det {} D = {}\ntrigonal over Q: {}\n",
                rep.level,
                rep.delta,
                rep.gram_determinant,
                rep.d,
                trigfield::trigonal_over(&rep, 0, 1)?
            );
            for p in quadclass_primes(*level) {
                let v = match trigfield::trigonal_over(&rep, p, 1) {
                    Ok(v) => v.to_string(),
                    Err(e) => e.to_string(),
                };
                text += &format!(
                    "over F_{p}: {v}; over F_{p}^2: {}\n",
                    trigfield::trigonal_over(&rep, p, 2)?
                );
            }
            let row = vec![rep.level.to_string(), rep.delta.clone(), rep.d.to_string()];
            Ok(Report::new(&rep, vec!["N", "Delta", "D"], vec![row], text))
        }
        Command::Theorem { which } => {
            let r = pipeline::scan_theorem(*which, &engine(cli)?)?;
            let rows: Vec<Vec<String>> = r
                .pairs
                .iter()
                .map(|p| {
                    vec![
                        p.level.to_string(),
                        p.delta.clone(),
                        p.prime.to_string(),
                        p.kind.clone(),
                    ]
                })
                .collect();
            let mut text = format!(
                "scanned {} levels, {} curves\n",
                r.scanned_levels.len(),
                r.groups.len()
            );
            if rows.is_empty() {
                text += "no exceptional pairs\n";
            }
            for p in &r.pairs {
                text += &format!("({}, {}, {}) {}\n", p.level, p.delta, p.prime, p.kind);
            }
            Ok(Report::new(&r, vec!["N", "delta", "p", "kind"], rows, text))
        }
        Command::Table { which: 1 } => {
            let t = pipeline::table1(&engine(cli)?)?;
            let rows: Vec<Vec<String>> = t
                .iter()
                .map(|r| vec![r.level.to_string(), r.delta.clone(), r.d.to_string()])
                .collect();
            let mut text = String::new();
            for r in &t {
                let fp: Vec<String> = r
                    .over_fp
                    .iter()
                    .map(|(p, v)| {
                        format!(
                            "F{p}:{}",
                            v.map(|b| if b { "yes" } else { "no" }).unwrap_or("n/a")
                        )
                    })
                    .collect();
                text += &format!(
                    "{:>4} {:>8} {:>5}  Q:{}  {}\n",
                    r.level,
                    r.delta,
                    r.d,
                    if r.over_q { "yes" } else { "no" },
                    fp.join(" ")
                );
            }
            Ok(Report::new(&t, vec!["N", "Delta", "D"], rows, text))
        }
        Command::Table { which: 2 } => run_with(cli, Command::Classnum { max_h: 100 }),
        Command::Table { .. } => run_with(cli, Command::Ram { max_d: 16 }),
    }
}

fn run_with(cli: &Cli, command: Command) -> Result<Report, PipelineError> {
    let sub = Cli {
        out: None,
        format: cli.format,
        cache_dir: cli.cache_dir.clone(),
        basis_dir: cli.basis_dir.clone(),
        precision_slack: cli.precision_slack,
        threads: None,
        command,
    };
    run(&sub)
}

fn quadclass_primes(level: u64) -> Vec<u64> {
    [2u64, 3, 5, 7]
        .into_iter()
        .filter(|p| !level.is_multiple_of(*p))
        .collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("gonscan: {e}");
            return ExitCode::from(1);
        }
    }
    let report = match run(&cli).and_then(|r| r.render(cli.format)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("gonscan: {e}");
            return ExitCode::from(if e.is_anomaly() { 2 } else { 1 });
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, report.as_bytes()),
        None => std::io::stdout().write_all(report.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("gonscan: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
