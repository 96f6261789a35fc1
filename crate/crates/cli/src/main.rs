//! `tradeoff`: cost, rank and Pareto-filter benchmarked models, check the
//! bundled reference tables, or serve scenario queries over HTTP.
//!
//! Exit status is 0 on success, 1 on invalid input and 2 when
//! `verify-paper` finds a mismatch.

use std::fs::File;
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tradeoff_core::decision::DEFAULT_TAUS_MS;
use tradeoff_core::measurements::{parse_records, parse_records_csv};
use tradeoff_core::plot::{scatter_csv, scatter_points, scatter_svg};
use tradeoff_core::report::{Format, ReportBundle};
use tradeoff_core::verify::{self, CheckKind};
use tradeoff_core::{
    fixtures, Analysis, CostPrecision, MeasurementRecord, ObjectiveSpace, PricingSnapshot,
    ScenarioEngine,
};

#[derive(Debug, Parser)]
#[command(
    name = "tradeoff",
    version,
    about = "Cost-aware model selection over benchmark measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimated USD per 1M requests for every model and dataset.
    Cost {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Utility scores and ranks for each latency tolerance.
    Rank {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        /// Latency tolerances in ms, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000")]
        tau: Vec<f64>,
        #[command(flatten)]
        precision: Precision,
    },
    /// Pareto frontier membership with dominance witnesses.
    Pareto {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        /// Objective spaces, comma separated. Defaults to all four.
        #[arg(long, value_delimiter = ',')]
        space: Vec<ObjectiveSpace>,
        /// Write one scatter point per candidate as CSV.
        #[arg(long)]
        scatter_out: Option<PathBuf>,
        /// Write an SVG scatter plot.
        #[arg(long)]
        svg_out: Option<PathBuf>,
        #[command(flatten)]
        precision: Precision,
    },
    /// Recompute the reference cost, utility and rank tables and compare.
    VerifyPaper {
        /// Records to verify instead of the bundled ones.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, env = "TRADEOFF_PRICING")]
        pricing: Option<PathBuf>,
        /// Expected costs (JSON Lines) instead of the bundled table.
        #[arg(long)]
        expected_costs: Option<PathBuf>,
        /// Expected utilities (JSON Lines) instead of the bundled table.
        #[arg(long)]
        expected_utility: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: Format,
        #[command(flatten)]
        precision: Precision,
    },
    /// Serve the scenario API and explorer UI.
    Serve {
        #[command(flatten)]
        input: RecordsPricing,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory with the built explorer UI.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[command(flatten)]
        precision: Precision,
    },
}

#[derive(Debug, Args)]
struct RecordsPricing {
    /// Records as JSON Lines, or CSV when the name ends in `.csv`.
    /// Defaults to the bundled reference records.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Pricing snapshot (JSON). Defaults to the bundled snapshot.
    #[arg(long, env = "TRADEOFF_PRICING")]
    pricing: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Input {
    #[command(flatten)]
    files: RecordsPricing,
    /// Only report this dataset.
    #[arg(long)]
    dataset: Option<String>,
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, default_value = "table")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Precision {
    /// Score utility on the unrounded cost instead of the cent-rounded one.
    #[arg(long)]
    full_precision_cost: bool,
}

impl Precision {
    fn get(&self) -> CostPrecision {
        if self.full_precision_cost {
            CostPrecision::Full
        } else {
            CostPrecision::Cents
        }
    }
}

fn load_records(path: Option<&Path>) -> Result<Vec<MeasurementRecord>> {
    let Some(path) = path else {
        return Ok(fixtures::paper_records());
    };
    let file =
        File::open(path).with_context(|| format!("cannot open records file {}", path.display()))?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let records = if is_csv {
        parse_records_csv(file)
    } else {
        parse_records(BufReader::new(file))
    };
    records.with_context(|| format!("invalid records in {}", path.display()))
}

fn load_pricing(path: Option<&Path>) -> Result<PricingSnapshot> {
    match path {
        Some(p) => PricingSnapshot::from_path(p)
            .with_context(|| format!("invalid pricing snapshot {}", p.display())),
        None => Ok(fixtures::paper_snapshot()),
    }
}

fn load(files: &RecordsPricing) -> Result<(Vec<MeasurementRecord>, PricingSnapshot)> {
    Ok((
        load_records(files.records.as_deref())?,
        load_pricing(files.pricing.as_deref())?,
    ))
}

fn analyze(input: &Input) -> Result<Analysis> {
    let (records, pricing) = load(&input.files)?;
    Ok(Analysis::new(&records, &pricing)?)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit(bundle: ReportBundle, output: &Output) -> Result<()> {
    let bundle = if output.format == Format::Table {
        bundle.with_timestamp(chrono::Utc::now())
    } else {
        bundle
    };
    write_output(output.out.as_deref(), &bundle.render(output.format))
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Cost { input, output } => {
            let analysis = analyze(&input)?;
            emit(
                ReportBundle::cost(&analysis, input.dataset.as_deref()),
                &output,
            )?;
        }
        Command::Rank {
            input,
            output,
            tau,
            precision,
        } => {
            let taus = if tau.is_empty() {
                DEFAULT_TAUS_MS.to_vec()
            } else {
                tau
            };
            if let Some(bad) = taus.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
                bail!("--tau values must be > 0, got {bad}");
            }
            let analysis = analyze(&input)?;
            emit(
                ReportBundle::rank(&analysis, &taus, input.dataset.as_deref(), precision.get())?,
                &output,
            )?;
        }
        Command::Pareto {
            input,
            output,
            space,
            scatter_out,
            svg_out,
            precision,
        } => {
            let spaces = if space.is_empty() {
                ObjectiveSpace::ALL.to_vec()
            } else {
                space
            };
            let analysis = analyze(&input)?;
            let bundle = ReportBundle::pareto(
                &analysis,
                &spaces,
                input.dataset.as_deref(),
                precision.get(),
            )?;
            if scatter_out.is_some() || svg_out.is_some() {
                let mut points = Vec::new();
                for listing in &bundle.frontiers {
                    let result = analysis.pareto(
                        &listing.dataset_id,
                        listing.objective_space,
                        precision.get(),
                    )?;
                    points.extend(scatter_points(&result));
                }
                if let Some(p) = &scatter_out {
                    write_output(Some(p), &scatter_csv(&points))?;
                }
                if let Some(p) = &svg_out {
                    write_output(Some(p), &scatter_svg(&points))?;
                }
            }
            emit(bundle, &output)?;
        }
        Command::VerifyPaper {
            records,
            pricing,
            expected_costs,
            expected_utility,
            format,
            precision,
        } => {
            let records = load_records(records.as_deref())?;
            let pricing = load_pricing(pricing.as_deref())?;
            let costs = match &expected_costs {
                Some(p) => verify::parse_expected_costs(&read(p)?)?,
                None => fixtures::paper_expected_costs(),
            };
            let utilities = match &expected_utility {
                Some(p) => verify::parse_expected_utilities(&read(p)?)?,
                None => fixtures::paper_expected_utilities(),
            };
            let report = verify::verify(&records, &pricing, &costs, &utilities, precision.get())?;
            let text = match format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report)?;
                    s.push('\n');
                    s
                }
                _ => verification_text(&report, pricing.snapshot_date),
            };
            write_output(None, &text)?;
            return Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            });
        }
        Command::Serve {
            input,
            host,
            port,
            static_dir,
            precision,
        } => {
            let (records, pricing) = load(&input)?;
            let engine = Arc::new(ScenarioEngine::new(&records, pricing, precision.get())?);
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .with_context(|| format!("invalid listen address {host}:{port}"))?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .with_context(|| format!("cannot listen on {addr}"))?;
                eprintln!(
                    "serving {} candidates on http://{}",
                    engine.catalog().entries.len(),
                    listener.local_addr()?
                );
                let app = tradeoff_service::router(engine, static_dir);
                tradeoff_service::serve(listener, app).await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn verification_text(report: &verify::VerificationReport, snapshot: chrono::NaiveDate) -> String {
    let mut out = format!("pricing snapshot: {snapshot}\n");
    for kind in [CheckKind::Cost, CheckKind::Utility, CheckKind::Rank] {
        let (passed, total) = report.count(kind);
        let name = format!("{kind:?}").to_lowercase();
        out.push_str(&format!("{name:<8} {passed}/{total} within tolerance\n"));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    for f in report.failures() {
        out.push_str(&format!("FAIL {}\n", f.describe()));
    }
    out.push_str(if report.passed() {
        "verification passed\n"
    } else {
        "verification FAILED\n"
    });
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
