//! The `carleman` command line front end.
//!
//! Every computation is exposed as a subcommand producing a table in CSV
//! (17-significant-digit floats, LF line endings) or JSON, written to stdout
//! or `--out`. Runs are deterministic for a fixed set of flags, including the
//! seeded oracle.
//!
//! Exit codes: 0 success, 1 hypothesis failure, 2 numeric failure, 64 usage.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::asymptotics::{fit_residual, predicted_log_breakdown, predicted_mu, theta, theta_infinity};
use crate::extremal::{oracle_maximize, reconstruct_extremal, verify_stationarity};
use crate::hypotheses::{check_hypotheses, CheckStatus};
use crate::recursion::{breakdown_index, section_constant, section_constant_with_tol};
use crate::weights::{estimate_constants, WeightSequence};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_HYPOTHESIS_FAILURE: i32 = 1;
pub const EXIT_NUMERIC_FAILURE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "carleman",
    about = "Best constants of finite sections of the weighted Carleman inequality",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Weight family: `unit`, `power:alpha=<f>` or `file:<path>` (one
    /// positive decimal per line).
    #[arg(long, global = true, default_value = "unit")]
    weights: String,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the brute-force oracle.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Range bound for constant estimation and hypothesis checks.
    #[arg(long, global = true, default_value_t = 10_000)]
    kmax: usize,
    /// Search cap for the breakdown index.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    cap: usize,
    /// Override the bisection bracket-width tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute section constants mu_N.
    Mu {
        #[arg(long)]
        n: Option<usize>,
        /// Inclusive range `start:stop:step`.
        #[arg(long = "n-range")]
        n_range: Option<String>,
    },
    /// Check the structural hypotheses of the weight sequence.
    Hypotheses,
    /// Breakdown index of the recurrence at given mu values.
    Breakdown {
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<f64>,
    },
    /// Compare exact mu_N with the second-order expansion over an N grid.
    Asymptotic {
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
    },
    /// Reconstruct and verify the optimizing vector for one N.
    Extremal {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        restarts: u32,
    },
    /// Evaluate the step-counting integral theta.
    Theta {
        #[arg(long)]
        mu: f64,
        /// Upper limit; omitted means theta(infinity).
        #[arg(long)]
        y: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(v) => v.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(v) => json!(v),
        }
    }
}

struct Table {
    name: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &'static str, columns: Vec<&'static str>) -> Self {
        Self { name, columns, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn render_csv(tables: &[Table]) -> String {
    let mut out = String::new();
    for (i, table) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&table.columns.join(","));
        out.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

fn render_json(tables: &[Table]) -> String {
    let mut root = serde_json::Map::new();
    for table in tables {
        let rows: Vec<serde_json::Value> = table
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (col, cell) in table.columns.iter().zip(row) {
                    obj.insert((*col).to_string(), cell.json());
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        root.insert(table.name.to_string(), serde_json::Value::Array(rows));
    }
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(root)).unwrap();
    s.push('\n');
    s
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::BadSpec(_) | Error::BadAlpha(_) | Error::InvalidArgument(_) | Error::Io(_) => {
            EXIT_USAGE
        }
        _ => EXIT_NUMERIC_FAILURE,
    }
}

fn parse_n_range(spec: &str) -> crate::Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("bad range `{spec}`, expected start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: usize = parts[0].parse().map_err(|_| bad())?;
    let stop: usize = parts[1].parse().map_err(|_| bad())?;
    let step: usize = parts[2].parse().map_err(|_| bad())?;
    if step == 0 || start == 0 || stop < start {
        return Err(bad());
    }
    Ok((start..=stop).step_by(step).collect())
}

/// Parses and runs a full command line (excluding argv[0] conventions —
/// pass the arguments exactly as `std::env::args_os` yields them).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok((tables, code)) => {
            let text = match cli.format {
                OutputFormat::Csv => render_csv(&tables),
                OutputFormat::Json => render_json(&tables),
            };
            let written = match &cli.out {
                Some(path) => fs::write(path, &text).map_err(|e| e.to_string()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_USAGE
                }
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn execute(cli: &Cli) -> crate::Result<(Vec<Table>, i32)> {
    let seq = WeightSequence::parse_spec(&cli.weights)?;
    let consts = estimate_constants(&seq, cli.kmax.max(100))?;
    match &cli.command {
        Command::Mu { n, n_range } => {
            let ns = match (n, n_range) {
                (Some(n), None) => vec![*n],
                (None, Some(range)) => parse_n_range(range)?,
                _ => {
                    return Err(Error::InvalidArgument(
                        "pass exactly one of --n and --n-range".into(),
                    ))
                }
            };
            let mut table =
                Table::new("sections", vec!["n", "mu", "residual", "bracket_width", "iterations"]);
            for n in ns {
                let s = match cli.tol {
                    Some(tol) => section_constant_with_tol(&seq, &consts, n, tol)?,
                    None => section_constant(&seq, &consts, n)?,
                };
                table.push(vec![
                    Cell::Int(s.n as i64),
                    Cell::Float(s.mu),
                    Cell::Float(s.residual),
                    Cell::Float(s.bracket_width),
                    Cell::Int(s.iterations as i64),
                ]);
            }
            Ok((vec![table], EXIT_OK))
        }
        Command::Hypotheses => {
            let report = check_hypotheses(&seq, &consts, cli.kmax)?;
            let mut table = Table::new(
                "conditions",
                vec![
                    "condition",
                    "checked_from",
                    "checked_to",
                    "status",
                    "witness",
                    "lhs",
                    "rhs",
                    "margin",
                ],
            );
            for entry in &report.entries {
                let (status, witness, lhs, rhs) = match entry.status {
                    CheckStatus::Pass => ("pass", Cell::Text(String::new()), Cell::Text(String::new()), Cell::Text(String::new())),
                    CheckStatus::NotApplicable => ("not_applicable", Cell::Text(String::new()), Cell::Text(String::new()), Cell::Text(String::new())),
                    CheckStatus::Fail { witness, lhs, rhs } => {
                        ("fail", Cell::Int(witness as i64), Cell::Float(lhs), Cell::Float(rhs))
                    }
                };
                table.push(vec![
                    Cell::Text(format!("{:?}", entry.condition)),
                    Cell::Int(entry.checked_from as i64),
                    Cell::Int(entry.checked_to as i64),
                    Cell::Text(status.to_string()),
                    witness,
                    lhs,
                    rhs,
                    Cell::Float(entry.margin),
                ]);
            }
            let code = if report.all_pass() { EXIT_OK } else { EXIT_HYPOTHESIS_FAILURE };
            if code != EXIT_OK {
                for failure in report.failures() {
                    eprintln!(
                        "condition {:?} failed at k = {}",
                        failure.condition,
                        match failure.status {
                            CheckStatus::Fail { witness, .. } => witness,
                            _ => unreachable!(),
                        }
                    );
                }
            }
            Ok((vec![table], code))
        }
        Command::Breakdown { mu } => {
            let mut table =
                Table::new("breakdown", vec!["mu", "index", "predicted_log_index", "note"]);
            for &mu in mu {
                let result = breakdown_index(&seq, mu, cli.cap)?;
                let predicted = predicted_log_breakdown(&consts, mu)
                    .map(Cell::Float)
                    .unwrap_or_else(|_| Cell::Text(String::new()));
                let (index, note) = match result.index {
                    Some(k) => (Cell::Int(k as i64), String::new()),
                    None if mu >= consts.e_m() => {
                        (Cell::Text("INF".into()), "mu >= e^M".into())
                    }
                    None => (Cell::Text("INF".into()), format!("cap {} reached", cli.cap)),
                };
                table.push(vec![Cell::Float(mu), index, predicted, Cell::Text(note)]);
            }
            Ok((vec![table], EXIT_OK))
        }
        Command::Asymptotic { grid } => {
            let grid: Vec<usize> = grid
                .iter()
                .map(|&x| {
                    if x.is_finite() && x >= 2.0 {
                        Ok(x.round() as usize)
                    } else {
                        Err(Error::InvalidArgument(format!("bad grid point {x}")))
                    }
                })
                .collect::<crate::Result<_>>()?;
            let fit = fit_residual(&seq, &consts, &grid)?;
            let mut table = Table::new("points", vec!["n", "mu_exact", "mu_predicted", "r"]);
            for (i, &n) in fit.grid.iter().enumerate() {
                table.push(vec![
                    Cell::Int(n as i64),
                    Cell::Float(fit.mu_values[i]),
                    Cell::Float(predicted_mu(&consts, n).mu_predicted),
                    Cell::Float(fit.r_values[i]),
                ]);
            }
            let mut footer =
                Table::new("fit", vec!["fitted_a", "fitted_b", "fit_rms", "target"]);
            let target = predicted_mu(&consts, 10).leading_gap_coefficient;
            footer.push(vec![
                Cell::Float(fit.fitted_a),
                Cell::Float(fit.fitted_b),
                Cell::Float(fit.fit_rms),
                Cell::Float(target),
            ]);
            Ok((vec![table, footer], EXIT_OK))
        }
        Command::Extremal { n, restarts } => {
            let s = section_constant(&seq, &consts, *n)?;
            let v = reconstruct_extremal(&seq, s.mu, *n)?;
            let residual = verify_stationarity(&seq, &v, s.mu)?;
            let mut table = Table::new("vector", vec!["k", "a", "g"]);
            for k in 1..=*n {
                table.push(vec![
                    Cell::Int(k as i64),
                    Cell::Float(v.a[k - 1]),
                    Cell::Float(v.g[k - 1]),
                ]);
            }
            let mut footer = Table::new(
                "summary",
                vec!["mu", "objective", "stationarity_residual", "oracle_objective"],
            );
            let oracle = if *n <= 8 {
                Cell::Float(oracle_maximize(&seq, *n, *restarts, cli.seed)?.objective)
            } else {
                Cell::Text(String::new())
            };
            footer.push(vec![
                Cell::Float(s.mu),
                Cell::Float(v.objective),
                Cell::Float(residual),
                oracle,
            ]);
            Ok((vec![table, footer], EXIT_OK))
        }
        Command::Theta { mu, y } => {
            let value = match y {
                Some(y) => theta(*y, *mu, consts.m)?,
                None => theta_infinity(*mu, consts.m)?,
            };
            let closed_form = predicted_log_breakdown(&consts, *mu)
                .map(|v| Cell::Float(v * consts.c)) // √2π·(log(e^M/μ))^{−1/2}
                .unwrap_or_else(|_| Cell::Text(String::new()));
            let mut table = Table::new("theta", vec!["mu", "y", "theta", "closed_form_estimate"]);
            table.push(vec![
                Cell::Float(*mu),
                y.map(Cell::Float).unwrap_or_else(|| Cell::Text("inf".into())),
                Cell::Float(value),
                closed_form,
            ]);
            Ok((vec![table], EXIT_OK))
        }
    }
}
