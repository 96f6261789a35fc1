//! Report assembly and rendering as an aligned text table, CSV or JSON.
//!
//! Machine-readable output is byte-stable for identical inputs: datasets are
//! alphabetical, utility rows follow rank, other rows follow candidate label,
//! and the generation timestamp is only printed in the text table.

use chrono::{DateTime, NaiveDate, Utc};
use serde::Serialize;

use crate::analysis::{Analysis, CostPrecision};
use crate::costing::CostBasis;
use crate::decision::ObjectiveSpace;
use crate::display::{fmt2, round2};
use crate::measurements::Paradigm;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!(
                "unknown format `{other}`, expected table, csv or json"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub dataset_id: String,
    pub candidate: String,
    pub model_id: String,
    pub paradigm: Paradigm,
    pub cost_basis: CostBasis,
    pub usd_per_million_requests: f64,
    pub usd_per_million_requests_display: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityRow {
    pub rank: u32,
    pub candidate: String,
    pub f1: f64,
    pub cost_usd_per_million: f64,
    pub p50_latency_ms: f64,
    pub utility: f64,
    pub display_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityTable {
    pub dataset_id: String,
    pub tau_ms: f64,
    pub rows: Vec<UtilityRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierRow {
    pub candidate: String,
    pub on_frontier: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominated_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierListing {
    pub dataset_id: String,
    pub objective_space: ObjectiveSpace,
    pub rows: Vec<FrontierRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    #[serde(skip)]
    pub generated_at: Option<DateTime<Utc>>,
    pub pricing_snapshot_date: NaiveDate,
    pub cost_precision: CostPrecision,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub costs: Vec<CostRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub utilities: Vec<UtilityTable>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub frontiers: Vec<FrontierListing>,
    pub warnings: Vec<String>,
}

/// Datasets of `analysis`, optionally narrowed to one. A filter that matches
/// nothing yields an empty list.
fn selected_datasets(analysis: &Analysis, filter: Option<&str>) -> Vec<String> {
    analysis
        .datasets()
        .into_iter()
        .filter(|d| filter.is_none_or(|f| f == d))
        .collect()
}

impl ReportBundle {
    fn empty(analysis: &Analysis, precision: CostPrecision, filter: Option<&str>) -> Self {
        let warnings = analysis
            .warnings
            .iter()
            .filter(|w| filter.is_none_or(|f| f == w.dataset_id()))
            .map(|w| w.to_string())
            .collect();
        Self {
            generated_at: None,
            pricing_snapshot_date: analysis.pricing_snapshot_date,
            cost_precision: precision,
            costs: Vec::new(),
            utilities: Vec::new(),
            frontiers: Vec::new(),
            warnings,
        }
    }

    pub fn cost(analysis: &Analysis, dataset: Option<&str>) -> Self {
        let mut bundle = Self::empty(analysis, CostPrecision::Full, dataset);
        for ds in selected_datasets(analysis, dataset) {
            let mut rows: Vec<CostRow> = analysis
                .cells_for(&ds)
                .map(|c| CostRow {
                    dataset_id: ds.clone(),
                    candidate: c.key().label(),
                    model_id: c.key().model_id.clone(),
                    paradigm: c.key().paradigm,
                    cost_basis: c.cost.cost_basis,
                    usd_per_million_requests: c.cost.usd_per_million_requests,
                    usd_per_million_requests_display: round2(c.cost.usd_per_million_requests),
                })
                .collect();
            rows.sort_by(|a, b| a.candidate.cmp(&b.candidate));
            bundle.costs.extend(rows);
        }
        bundle
    }

    pub fn rank(
        analysis: &Analysis,
        taus_ms: &[f64],
        dataset: Option<&str>,
        precision: CostPrecision,
    ) -> Result<Self, Error> {
        let mut bundle = Self::empty(analysis, precision, dataset);
        for ds in selected_datasets(analysis, dataset) {
            let sweep = analysis.tau_sweep(&ds, taus_ms, precision)?;
            for column in &sweep.columns {
                let rows = column
                    .by_rank()
                    .into_iter()
                    .map(|s| UtilityRow {
                        rank: s.rank.unwrap_or(0),
                        candidate: s.candidate.label(),
                        f1: s.candidate.f1,
                        cost_usd_per_million: s.candidate.cost_usd_per_million,
                        p50_latency_ms: s.candidate.p50_latency_ms,
                        utility: s.utility,
                        display_value: s.display_value,
                    })
                    .collect();
                bundle.utilities.push(UtilityTable {
                    dataset_id: ds.clone(),
                    tau_ms: column.tau_ms,
                    rows,
                });
            }
        }
        Ok(bundle)
    }

    pub fn pareto(
        analysis: &Analysis,
        spaces: &[ObjectiveSpace],
        dataset: Option<&str>,
        precision: CostPrecision,
    ) -> Result<Self, Error> {
        let mut bundle = Self::empty(analysis, precision, dataset);
        for ds in selected_datasets(analysis, dataset) {
            for &space in spaces {
                let result = analysis.pareto(&ds, space, precision)?;
                let mut rows: Vec<FrontierRow> = result
                    .frontier
                    .iter()
                    .map(|c| FrontierRow {
                        candidate: c.label(),
                        on_frontier: true,
                        dominated_by: None,
                    })
                    .chain(result.dominated.iter().map(|d| FrontierRow {
                        candidate: d.candidate.label(),
                        on_frontier: false,
                        dominated_by: Some(d.dominated_by.label()),
                    }))
                    .collect();
                rows.sort_by(|a, b| a.candidate.cmp(&b.candidate));
                bundle.frontiers.push(FrontierListing {
                    dataset_id: ds.clone(),
                    objective_space: space,
                    rows,
                });
            }
        }
        Ok(bundle)
    }

    pub fn with_timestamp(mut self, at: DateTime<Utc>) -> Self {
        self.generated_at = Some(at);
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.render_table(),
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    pub fn render_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    /// One CSV block per non-empty section, separated by a blank line. Every
    /// row repeats the pricing snapshot date.
    pub fn render_csv(&self) -> String {
        let date = self.pricing_snapshot_date.to_string();
        let mut blocks = Vec::new();
        if !self.costs.is_empty() || (self.utilities.is_empty() && self.frontiers.is_empty()) {
            let mut w = csv_writer();
            w.write_record([
                "pricing_snapshot_date",
                "dataset_id",
                "candidate",
                "model_id",
                "paradigm",
                "cost_basis",
                "usd_per_million_requests",
            ])
            .expect("csv write");
            for r in &self.costs {
                w.write_record([
                    date.as_str(),
                    &r.dataset_id,
                    &r.candidate,
                    &r.model_id,
                    r.paradigm.as_str(),
                    r.cost_basis.as_str(),
                    &r.usd_per_million_requests.to_string(),
                ])
                .expect("csv write");
            }
            blocks.push(finish(w));
        }
        if !self.utilities.is_empty() {
            let mut w = csv_writer();
            w.write_record([
                "pricing_snapshot_date",
                "dataset_id",
                "tau_ms",
                "rank",
                "candidate",
                "f1",
                "cost_usd_per_million",
                "p50_latency_ms",
                "utility",
                "display_value",
            ])
            .expect("csv write");
            for t in &self.utilities {
                for r in &t.rows {
                    w.write_record([
                        date.as_str(),
                        &t.dataset_id,
                        &t.tau_ms.to_string(),
                        &r.rank.to_string(),
                        &r.candidate,
                        &r.f1.to_string(),
                        &r.cost_usd_per_million.to_string(),
                        &r.p50_latency_ms.to_string(),
                        &r.utility.to_string(),
                        &fmt2(r.display_value),
                    ])
                    .expect("csv write");
                }
            }
            blocks.push(finish(w));
        }
        if !self.frontiers.is_empty() {
            let mut w = csv_writer();
            w.write_record([
                "pricing_snapshot_date",
                "dataset_id",
                "objective_space",
                "candidate",
                "on_frontier",
                "dominated_by",
            ])
            .expect("csv write");
            for f in &self.frontiers {
                for r in &f.rows {
                    w.write_record([
                        date.as_str(),
                        &f.dataset_id,
                        f.objective_space.as_str(),
                        &r.candidate,
                        if r.on_frontier { "true" } else { "false" },
                        r.dominated_by.as_deref().unwrap_or(""),
                    ])
                    .expect("csv write");
                }
            }
            blocks.push(finish(w));
        }
        blocks.join("\n")
    }

    pub fn render_table(&self) -> String {
        let mut out = self.header();
        let mut ds = None::<&str>;
        let mut rows: Vec<Vec<String>> = Vec::new();
        for r in &self.costs {
            if ds != Some(r.dataset_id.as_str()) {
                if let Some(prev) = ds {
                    out.push_str(&section(
                        &format!("[{prev}] cost, USD per 1M requests"),
                        &rows,
                    ));
                    rows.clear();
                }
                ds = Some(&r.dataset_id);
                rows.push(vec![
                    "candidate".into(),
                    "basis".into(),
                    "usd_per_1m".into(),
                ]);
            }
            rows.push(vec![
                r.candidate.clone(),
                r.cost_basis.as_str().into(),
                fmt2(r.usd_per_million_requests),
            ]);
        }
        if let Some(prev) = ds {
            out.push_str(&section(
                &format!("[{prev}] cost, USD per 1M requests"),
                &rows,
            ));
        }

        for t in &self.utilities {
            let mut rows = vec![vec![
                "rank".into(),
                "candidate".into(),
                "f1".into(),
                "cost".into(),
                "p50_ms".into(),
                "100xU".into(),
            ]];
            for r in &t.rows {
                rows.push(vec![
                    r.rank.to_string(),
                    r.candidate.clone(),
                    format!("{:.4}", r.f1),
                    fmt2(r.cost_usd_per_million),
                    fmt2(r.p50_latency_ms),
                    fmt2(r.display_value),
                ]);
            }
            out.push_str(&section(
                &format!("[{}] utility, tau = {} ms", t.dataset_id, t.tau_ms),
                &rows,
            ));
        }

        for f in &self.frontiers {
            let mut rows = vec![vec![
                "candidate".into(),
                "frontier".into(),
                "dominated_by".into(),
            ]];
            for r in &f.rows {
                rows.push(vec![
                    r.candidate.clone(),
                    if r.on_frontier { "yes" } else { "no" }.into(),
                    r.dominated_by.clone().unwrap_or_else(|| "-".into()),
                ]);
            }
            out.push_str(&section(
                &format!("[{}] pareto, {}", f.dataset_id, f.objective_space),
                &rows,
            ));
        }

        if self.costs.is_empty() && self.utilities.is_empty() && self.frontiers.is_empty() {
            out.push_str("\n(no matching records)\n");
        }
        for w in &self.warnings {
            out.push_str(&format!("\nwarning: {w}"));
        }
        if !self.warnings.is_empty() {
            out.push('\n');
        }
        out
    }

    fn header(&self) -> String {
        let mut out = format!("pricing snapshot: {}\n", self.pricing_snapshot_date);
        if let Some(at) = self.generated_at {
            out.push_str(&format!(
                "generated at: {}\n",
                at.format("%Y-%m-%dT%H:%M:%SZ")
            ));
        }
        if !self.utilities.is_empty() || !self.frontiers.is_empty() {
            let precision = match self.cost_precision {
                CostPrecision::Cents => "cents",
                CostPrecision::Full => "full",
            };
            out.push_str(&format!("utility cost precision: {precision}\n"));
        }
        out
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
}

/// Left-aligns text columns and right-aligns numeric ones.
fn section(title: &str, rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|i| {
            rows.iter()
                .map(|r| r.get(i).map_or(0, |c| c.chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let numeric: Vec<bool> = (0..cols)
        .map(|i| {
            rows.iter()
                .skip(1)
                .all(|r| r.get(i).is_some_and(|c| c.parse::<f64>().is_ok()))
        })
        .collect();
    let mut out = format!("\n{title}\n");
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if numeric[i] {
                    format!("{c:>w$}", w = widths[i])
                } else {
                    format!("{c:<w$}", w = widths[i])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
