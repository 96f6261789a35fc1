//! Measurement data model and record ingestion.
//!
//! A [`MeasurementRecord`] is one model × dataset × run observation. Records
//! arrive as JSON Lines (one object per line) or as CSV with the flat header
//! in [`CSV_HEADER`]. Every record is validated on the way in; fields are
//! private so an invalid record cannot be built downstream.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Runs per model × dataset expected by the measurement protocol.
pub const PROTOCOL_RUNS: usize = 3;

/// Warm-up requests dropped from a raw trace when the record does not say.
pub const DEFAULT_WARMUP_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    FineTuned,
    ZeroShot,
    FewShot,
}

impl Paradigm {
    pub fn as_str(self) -> &'static str {
        match self {
            Paradigm::FineTuned => "fine_tuned",
            Paradigm::ZeroShot => "zero_shot",
            Paradigm::FewShot => "few_shot",
        }
    }

    /// Prompted paradigms are billed per token; fine-tuned ones per compute second.
    pub fn is_prompted(self) -> bool {
        !matches!(self, Paradigm::FineTuned)
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Paradigm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fine_tuned" => Ok(Paradigm::FineTuned),
            "zero_shot" => Ok(Paradigm::ZeroShot),
            "few_shot" => Ok(Paradigm::FewShot),
            other => Err(format!(
                "unknown paradigm `{other}`, expected one of fine_tuned, zero_shot, few_shot"
            )),
        }
    }
}

/// Seed index for fine-tuned runs, repetition index (or free label) for API runs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RunId {
    Index(u64),
    Label(String),
}

impl fmt::Display for RunId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunId::Index(i) => write!(f, "{i}"),
            RunId::Label(s) => f.write_str(s),
        }
    }
}

/// Identity of one model configuration on one dataset.
///
/// Two prompting setups of the same API model (zero-shot, few-shot) share a
/// `model_id` and are told apart by `paradigm`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset_id: String,
    pub model_id: String,
    pub paradigm: Paradigm,
}

impl CellKey {
    pub fn new(
        dataset_id: impl Into<String>,
        model_id: impl Into<String>,
        paradigm: Paradigm,
    ) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            model_id: model_id.into(),
            paradigm,
        }
    }

    /// Display name of the configuration, unique within a dataset.
    pub fn label(&self) -> String {
        candidate_label(&self.model_id, self.paradigm)
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.dataset_id, self.label())
    }
}

/// `bert`, `gpt-4o:zs`, `gpt-4o:fs`.
pub fn candidate_label(model_id: &str, paradigm: Paradigm) -> String {
    match paradigm {
        Paradigm::FineTuned => model_id.to_string(),
        Paradigm::ZeroShot => format!("{model_id}:zs"),
        Paradigm::FewShot => format!("{model_id}:fs"),
    }
}

/// Classification quality, every field a fraction in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityMetrics {
    pub f1_macro: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub accuracy: f64,
}

impl QualityMetrics {
    fn fields(&self) -> [(&'static str, f64); 4] {
        [
            ("f1_macro", self.f1_macro),
            ("precision_macro", self.precision_macro),
            ("recall_macro", self.recall_macro),
            ("accuracy", self.accuracy),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenUsage {
    pub avg_input_tokens_per_request: f64,
    pub avg_output_tokens_per_request: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceAllocation {
    pub vcpu: f64,
    pub memory_gib: f64,
}

/// Sampling settings of an API run. Recorded, never used in computation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
}

/// Raw per-request latencies in milliseconds, in request order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyTrace {
    pub samples_ms: Vec<f64>,
    pub warmup_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyPercentiles {
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
}

/// Latency of a run: either the raw trace or percentiles computed elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Latency {
    Trace(LatencyTrace),
    Percentiles(LatencyPercentiles),
}

impl Latency {
    pub fn is_trace(&self) -> bool {
        matches!(self, Latency::Trace(_))
    }
}

/// Unvalidated record contents. Turn into a [`MeasurementRecord`] with `try_from`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordParts {
    pub model_id: String,
    pub dataset_id: String,
    pub paradigm: Paradigm,
    pub run_id: RunId,
    pub quality: QualityMetrics,
    pub latency: Latency,
    pub ttft: Option<Latency>,
    pub tokens: Option<TokenUsage>,
    pub resources: Option<ResourceAllocation>,
    pub decoding: Option<DecodingConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    model_id: String,
    dataset_id: String,
    paradigm: Paradigm,
    run_id: RunId,
    quality: QualityMetrics,
    latency: Latency,
    #[serde(skip_serializing_if = "Option::is_none")]
    ttft: Option<Latency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tokens: Option<TokenUsage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resources: Option<ResourceAllocation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decoding: Option<DecodingConfig>,
}

impl MeasurementRecord {
    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn paradigm(&self) -> Paradigm {
        self.paradigm
    }

    pub fn run_id(&self) -> &RunId {
        &self.run_id
    }

    pub fn quality(&self) -> &QualityMetrics {
        &self.quality
    }

    pub fn latency(&self) -> &Latency {
        &self.latency
    }

    pub fn ttft(&self) -> Option<&Latency> {
        self.ttft.as_ref()
    }

    pub fn tokens(&self) -> Option<&TokenUsage> {
        self.tokens.as_ref()
    }

    pub fn resources(&self) -> Option<&ResourceAllocation> {
        self.resources.as_ref()
    }

    pub fn decoding(&self) -> Option<&DecodingConfig> {
        self.decoding.as_ref()
    }

    pub fn key(&self) -> CellKey {
        CellKey::new(&self.dataset_id, &self.model_id, self.paradigm)
    }

    /// `dataset/label#run`, used to point at a record in messages.
    pub fn describe(&self) -> String {
        format!("{}#{}", self.key(), self.run_id)
    }

    pub fn into_parts(self) -> RecordParts {
        RecordParts {
            model_id: self.model_id,
            dataset_id: self.dataset_id,
            paradigm: self.paradigm,
            run_id: self.run_id,
            quality: self.quality,
            latency: self.latency,
            ttft: self.ttft,
            tokens: self.tokens,
            resources: self.resources,
            decoding: self.decoding,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    /// A field is missing, unexpected or of the wrong shape.
    Schema,
    /// A field is present but its value breaks a type invariant.
    Invariant,
}

/// Why a [`RecordParts`] was rejected.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct RecordIssue {
    pub kind: IssueKind,
    pub field: String,
    pub message: String,
}

impl RecordIssue {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind: IssueKind::Schema,
            field: field.into(),
            message: message.into(),
        }
    }

    fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind: IssueKind::Invariant,
            field: field.into(),
            message: message.into(),
        }
    }
}

fn check_fraction(field: &str, value: f64) -> Result<(), RecordIssue> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(RecordIssue::invariant(
            field,
            format!("must be a fraction in [0, 1], got {value}"),
        ))
    }
}

fn check_non_negative(field: &str, value: f64) -> Result<(), RecordIssue> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(RecordIssue::invariant(
            field,
            format!("must be a finite value >= 0, got {value}"),
        ))
    }
}

fn check_positive(field: &str, value: f64) -> Result<(), RecordIssue> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(RecordIssue::invariant(
            field,
            format!("must be a finite value > 0, got {value}"),
        ))
    }
}

fn check_latency(field: &str, latency: &Latency) -> Result<(), RecordIssue> {
    match latency {
        Latency::Trace(trace) => {
            for (i, &s) in trace.samples_ms.iter().enumerate() {
                check_non_negative(&format!("{field}.samples_ms[{i}]"), s)?;
            }
            if trace.warmup_count >= trace.samples_ms.len() {
                return Err(RecordIssue::invariant(
                    format!("{field}.warmup_count"),
                    format!(
                        "warm-up count {} leaves no samples out of {}",
                        trace.warmup_count,
                        trace.samples_ms.len()
                    ),
                ));
            }
        }
        Latency::Percentiles(p) => {
            check_non_negative(&format!("{field}.p50_ms"), p.p50_ms)?;
            check_non_negative(&format!("{field}.p95_ms"), p.p95_ms)?;
            check_non_negative(&format!("{field}.p99_ms"), p.p99_ms)?;
            if p.p50_ms > p.p95_ms {
                return Err(RecordIssue::invariant(
                    format!("{field}.p95_ms"),
                    format!("p95 {} is below p50 {}", p.p95_ms, p.p50_ms),
                ));
            }
            if p.p95_ms > p.p99_ms {
                return Err(RecordIssue::invariant(
                    format!("{field}.p99_ms"),
                    format!("p99 {} is below p95 {}", p.p99_ms, p.p95_ms),
                ));
            }
        }
    }
    Ok(())
}

impl TryFrom<RecordParts> for MeasurementRecord {
    type Error = RecordIssue;

    fn try_from(parts: RecordParts) -> Result<Self, RecordIssue> {
        if parts.model_id.trim().is_empty() {
            return Err(RecordIssue::invariant("model_id", "must not be empty"));
        }
        if parts.dataset_id.trim().is_empty() {
            return Err(RecordIssue::invariant("dataset_id", "must not be empty"));
        }

        if parts.paradigm.is_prompted() {
            if parts.tokens.is_none() {
                return Err(RecordIssue::schema(
                    "tokens",
                    format!("required for paradigm {}", parts.paradigm),
                ));
            }
            if parts.resources.is_some() {
                return Err(RecordIssue::schema(
                    "resources",
                    format!("not allowed for paradigm {}", parts.paradigm),
                ));
            }
        } else {
            if parts.resources.is_none() {
                return Err(RecordIssue::schema(
                    "resources",
                    "required for paradigm fine_tuned",
                ));
            }
            if parts.tokens.is_some() {
                return Err(RecordIssue::schema(
                    "tokens",
                    "not allowed for paradigm fine_tuned",
                ));
            }
        }

        for (name, value) in parts.quality.fields() {
            check_fraction(&format!("quality.{name}"), value)?;
        }
        check_latency("latency", &parts.latency)?;
        if let Some(ttft) = &parts.ttft {
            check_latency("ttft", ttft)?;
        }
        if let Some(tokens) = &parts.tokens {
            check_non_negative(
                "tokens.avg_input_tokens_per_request",
                tokens.avg_input_tokens_per_request,
            )?;
            check_non_negative(
                "tokens.avg_output_tokens_per_request",
                tokens.avg_output_tokens_per_request,
            )?;
        }
        if let Some(res) = &parts.resources {
            check_positive("resources.vcpu", res.vcpu)?;
            check_positive("resources.memory_gib", res.memory_gib)?;
        }
        if let Some(dec) = &parts.decoding {
            if let Some(t) = dec.temperature {
                check_non_negative("decoding.temperature", t)?;
            }
            if let Some(p) = dec.top_p {
                check_fraction("decoding.top_p", p)?;
            }
        }

        Ok(MeasurementRecord {
            model_id: parts.model_id,
            dataset_id: parts.dataset_id,
            paradigm: parts.paradigm,
            run_id: parts.run_id,
            quality: parts.quality,
            latency: parts.latency,
            ttft: parts.ttft,
            tokens: parts.tokens,
            resources: parts.resources,
            decoding: parts.decoding,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("failed reading records: {0}")]
    Io(String),
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}{}: schema error at `{field}`: {message}", fmt_record(.record))]
    Schema {
        line: usize,
        record: Option<String>,
        field: String,
        message: String,
    },
    #[error("line {line}{}: invalid `{field}`: {message}", fmt_record(.record))]
    Invariant {
        line: usize,
        record: Option<String>,
        field: String,
        message: String,
    },
}

fn fmt_record(record: &Option<String>) -> String {
    record
        .as_ref()
        .map(|r| format!(" ({r})"))
        .unwrap_or_default()
}

impl RecordError {
    pub fn line(&self) -> Option<usize> {
        match self {
            RecordError::Io(_) => None,
            RecordError::Syntax { line, .. }
            | RecordError::Schema { line, .. }
            | RecordError::Invariant { line, .. } => Some(*line),
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            RecordError::Schema { field, .. } | RecordError::Invariant { field, .. } => Some(field),
            _ => None,
        }
    }

    fn from_issue(line: usize, record: Option<String>, issue: RecordIssue) -> Self {
        match issue.kind {
            IssueKind::Schema => RecordError::Schema {
                line,
                record,
                field: issue.field,
                message: issue.message,
            },
            IssueKind::Invariant => RecordError::Invariant {
                line,
                record,
                field: issue.field,
                message: issue.message,
            },
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    model_id: String,
    dataset_id: String,
    paradigm: Paradigm,
    run_id: RunId,
    quality: QualityMetrics,
    latency: RawLatency,
    #[serde(default)]
    ttft: Option<RawLatency>,
    #[serde(default)]
    tokens: Option<TokenUsage>,
    #[serde(default)]
    resources: Option<ResourceAllocation>,
    #[serde(default)]
    decoding: Option<DecodingConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLatency {
    #[serde(default)]
    samples_ms: Option<Vec<f64>>,
    #[serde(default)]
    warmup_count: Option<usize>,
    #[serde(default)]
    p50_ms: Option<f64>,
    #[serde(default)]
    p95_ms: Option<f64>,
    #[serde(default)]
    p99_ms: Option<f64>,
}

impl RawLatency {
    fn resolve(self, field: &str) -> Result<Latency, RecordIssue> {
        let any_percentile =
            self.p50_ms.is_some() || self.p95_ms.is_some() || self.p99_ms.is_some();
        match (self.samples_ms, any_percentile) {
            (Some(_), true) => Err(RecordIssue::schema(
                field,
                "give either samples_ms or p50_ms/p95_ms/p99_ms, not both",
            )),
            (None, false) => Err(RecordIssue::schema(
                field,
                "needs samples_ms or p50_ms/p95_ms/p99_ms",
            )),
            (Some(samples_ms), false) => Ok(Latency::Trace(LatencyTrace {
                samples_ms,
                warmup_count: self.warmup_count.unwrap_or(DEFAULT_WARMUP_COUNT),
            })),
            (None, true) => {
                if self.warmup_count.is_some() {
                    return Err(RecordIssue::schema(
                        format!("{field}.warmup_count"),
                        "only meaningful with samples_ms",
                    ));
                }
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| {
                        RecordIssue::schema(format!("{field}.{name}"), "missing percentile")
                    })
                };
                Ok(Latency::Percentiles(LatencyPercentiles {
                    p50_ms: need(self.p50_ms, "p50_ms")?,
                    p95_ms: need(self.p95_ms, "p95_ms")?,
                    p99_ms: need(self.p99_ms, "p99_ms")?,
                }))
            }
        }
    }
}

impl RawRecord {
    fn into_parts(self) -> Result<RecordParts, RecordIssue> {
        Ok(RecordParts {
            model_id: self.model_id,
            dataset_id: self.dataset_id,
            paradigm: self.paradigm,
            run_id: self.run_id,
            quality: self.quality,
            latency: self.latency.resolve("latency")?,
            ttft: self.ttft.map(|t| t.resolve("ttft")).transpose()?,
            tokens: self.tokens,
            resources: self.resources,
            decoding: self.decoding,
        })
    }
}

/// Best-effort `dataset/label#run` from an object that failed typed parsing.
fn describe_value(value: &Value) -> Option<String> {
    let obj = value.as_object()?;
    let model = obj.get("model_id")?.as_str()?;
    let dataset = obj.get("dataset_id")?.as_str()?;
    let label = match obj
        .get("paradigm")
        .and_then(Value::as_str)
        .and_then(|p| p.parse::<Paradigm>().ok())
    {
        Some(p) => candidate_label(model, p),
        None => model.to_string(),
    };
    let run = match obj.get("run_id") {
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::String(s)) => s.clone(),
        _ => "?".to_string(),
    };
    Some(format!("{dataset}/{label}#{run}"))
}

/// Pulls the field name out of serde's "missing field `x`" / "unknown field `x`".
fn quoted_field(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

fn record_from_value(line: usize, value: Value) -> Result<MeasurementRecord, RecordError> {
    let record = describe_value(&value);
    let raw: RawRecord = serde_path_to_error::deserialize(value).map_err(|err| {
        let path = err.path().to_string();
        let message = err.inner().to_string();
        let mut field = if path == "." { String::new() } else { path };
        if message.starts_with("missing field") || message.starts_with("unknown field") {
            if let Some(name) = quoted_field(&message) {
                if field.is_empty() {
                    field = name.to_string();
                } else if !field.ends_with(name) {
                    field = format!("{field}.{name}");
                }
            }
        }
        RecordError::Schema {
            line,
            record: record.clone(),
            field,
            message,
        }
    })?;
    let parts = raw
        .into_parts()
        .map_err(|issue| RecordError::from_issue(line, record.clone(), issue))?;
    MeasurementRecord::try_from(parts).map_err(|issue| RecordError::from_issue(line, record, issue))
}

/// Parses a JSON Lines records stream.
///
/// Blank lines and lines starting with `#` (provenance headers) are skipped.
/// Line numbers in errors are 1-based physical line numbers.
pub fn parse_records<R: BufRead>(source: R) -> Result<Vec<MeasurementRecord>, RecordError> {
    let mut records = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| RecordError::Io(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: Value = serde_json::from_str(trimmed).map_err(|e| RecordError::Syntax {
            line: line_no,
            message: e.to_string(),
        })?;
        if !value.is_object() {
            return Err(RecordError::Syntax {
                line: line_no,
                message: "record must be a JSON object".to_string(),
            });
        }
        records.push(record_from_value(line_no, value)?);
    }
    Ok(records)
}

pub fn parse_records_str(source: &str) -> Result<Vec<MeasurementRecord>, RecordError> {
    parse_records(source.as_bytes())
}

/// Writes records as JSON Lines; `parse_records` reads the output back unchanged.
pub fn write_records<W: Write>(records: &[MeasurementRecord], mut out: W) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn records_to_jsonl(records: &[MeasurementRecord]) -> String {
    let mut buf = Vec::new();
    write_records(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Header of the CSV import format. Empty cells mean "absent".
///
/// CSV rows carry precomputed percentiles only; raw traces need JSON Lines.
pub const CSV_HEADER: &[&str] = &[
    "model_id",
    "dataset_id",
    "paradigm",
    "run_id",
    "f1_macro",
    "precision_macro",
    "recall_macro",
    "accuracy",
    "latency_p50_ms",
    "latency_p95_ms",
    "latency_p99_ms",
    "ttft_p50_ms",
    "ttft_p95_ms",
    "ttft_p99_ms",
    "avg_input_tokens_per_request",
    "avg_output_tokens_per_request",
    "vcpu",
    "memory_gib",
    "temperature",
    "top_p",
];

fn csv_number(line: usize, column: &str, cell: &str) -> Result<Value, RecordError> {
    let parsed: f64 = cell.parse().map_err(|_| RecordError::Schema {
        line,
        record: None,
        field: column.to_string(),
        message: format!("expected a number, got `{cell}`"),
    })?;
    serde_json::Number::from_f64(parsed)
        .map(Value::Number)
        .ok_or_else(|| RecordError::Invariant {
            line,
            record: None,
            field: column.to_string(),
            message: format!("must be finite, got `{cell}`"),
        })
}

/// Parses the CSV import format (see [`CSV_HEADER`]) into the same records
/// `parse_records` would produce for the equivalent JSON Lines.
pub fn parse_records_csv<R: std::io::Read>(
    source: R,
) -> Result<Vec<MeasurementRecord>, RecordError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| RecordError::Syntax {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    for h in headers.iter() {
        if !CSV_HEADER.contains(&h) {
            return Err(RecordError::Schema {
                line: 1,
                record: None,
                field: h.to_string(),
                message: "unknown column".to_string(),
            });
        }
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| RecordError::Syntax {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let cells: BTreeMap<&str, &str> = headers
            .iter()
            .zip(row.iter())
            .filter(|(_, v)| !v.is_empty())
            .collect();

        let mut obj = Map::new();
        for key in ["model_id", "dataset_id", "paradigm"] {
            if let Some(v) = cells.get(key) {
                obj.insert(key.to_string(), Value::String(v.to_string()));
            }
        }
        if let Some(run) = cells.get("run_id") {
            let v = run
                .parse::<u64>()
                .map(Value::from)
                .unwrap_or_else(|_| Value::String(run.to_string()));
            obj.insert("run_id".to_string(), v);
        }

        let group = |pairs: &[(&str, &str)]| -> Result<Option<Value>, RecordError> {
            let mut inner = Map::new();
            for (column, field) in pairs {
                if let Some(cell) = cells.get(column) {
                    inner.insert(field.to_string(), csv_number(line, column, cell)?);
                }
            }
            Ok((!inner.is_empty()).then_some(Value::Object(inner)))
        };
        let quality = group(&[
            ("f1_macro", "f1_macro"),
            ("precision_macro", "precision_macro"),
            ("recall_macro", "recall_macro"),
            ("accuracy", "accuracy"),
        ])?;
        let latency = group(&[
            ("latency_p50_ms", "p50_ms"),
            ("latency_p95_ms", "p95_ms"),
            ("latency_p99_ms", "p99_ms"),
        ])?;
        let ttft = group(&[
            ("ttft_p50_ms", "p50_ms"),
            ("ttft_p95_ms", "p95_ms"),
            ("ttft_p99_ms", "p99_ms"),
        ])?;
        let tokens = group(&[
            (
                "avg_input_tokens_per_request",
                "avg_input_tokens_per_request",
            ),
            (
                "avg_output_tokens_per_request",
                "avg_output_tokens_per_request",
            ),
        ])?;
        let resources = group(&[("vcpu", "vcpu"), ("memory_gib", "memory_gib")])?;
        let decoding = group(&[("temperature", "temperature"), ("top_p", "top_p")])?;
        for (key, value) in [
            ("quality", quality),
            ("latency", latency),
            ("ttft", ttft),
            ("tokens", tokens),
            ("resources", resources),
            ("decoding", decoding),
        ] {
            if let Some(v) = value {
                obj.insert(key.to_string(), v);
            }
        }
        records.push(record_from_value(line, Value::Object(obj))?);
    }
    Ok(records)
}

/// Non-fatal findings about a record set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    RunCountBelowProtocol {
        dataset_id: String,
        candidate: String,
        runs: usize,
        expected: usize,
    },
    MixedLatencyRepresentation {
        dataset_id: String,
        candidate: String,
    },
    UnexpectedTtft {
        dataset_id: String,
        candidate: String,
        run_id: String,
    },
    DuplicateRecord {
        dataset_id: String,
        candidate: String,
        run_id: String,
    },
}

impl Warning {
    pub fn dataset_id(&self) -> &str {
        match self {
            Warning::RunCountBelowProtocol { dataset_id, .. }
            | Warning::MixedLatencyRepresentation { dataset_id, .. }
            | Warning::UnexpectedTtft { dataset_id, .. }
            | Warning::DuplicateRecord { dataset_id, .. } => dataset_id,
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::RunCountBelowProtocol {
                dataset_id,
                candidate,
                runs,
                expected,
            } => write!(
                f,
                "{dataset_id}/{candidate}: run count below protocol ({runs} < {expected})"
            ),
            Warning::MixedLatencyRepresentation {
                dataset_id,
                candidate,
            } => write!(
                f,
                "{dataset_id}/{candidate}: mixed latency representations (raw traces and percentiles)"
            ),
            Warning::UnexpectedTtft {
                dataset_id,
                candidate,
                run_id,
            } => write!(f, "{dataset_id}/{candidate}#{run_id}: unexpected TTFT on a fine-tuned record"),
            Warning::DuplicateRecord {
                dataset_id,
                candidate,
                run_id,
            } => write!(f, "{dataset_id}/{candidate}#{run_id}: duplicate record ignored"),
        }
    }
}

/// Cross-record checks that do not reject data.
///
/// Warnings come out sorted (dataset, then candidate) so reports are stable.
pub fn validate_consistency(records: &[MeasurementRecord]) -> Vec<Warning> {
    #[derive(Default)]
    struct Group {
        runs: BTreeSet<RunId>,
        traces: usize,
        percentiles: usize,
    }

    let mut groups: BTreeMap<CellKey, Group> = BTreeMap::new();
    let mut warnings = Vec::new();

    for record in records {
        let key = record.key();
        let label = key.label();
        if record.paradigm() == Paradigm::FineTuned && record.ttft().is_some() {
            warnings.push(Warning::UnexpectedTtft {
                dataset_id: key.dataset_id.clone(),
                candidate: label.clone(),
                run_id: record.run_id().to_string(),
            });
        }
        let group = groups.entry(key.clone()).or_default();
        if !group.runs.insert(record.run_id().clone()) {
            warnings.push(Warning::DuplicateRecord {
                dataset_id: key.dataset_id,
                candidate: label,
                run_id: record.run_id().to_string(),
            });
            continue;
        }
        if record.latency().is_trace() {
            group.traces += 1;
        } else {
            group.percentiles += 1;
        }
    }

    for (key, group) in &groups {
        if group.runs.len() < PROTOCOL_RUNS {
            warnings.push(Warning::RunCountBelowProtocol {
                dataset_id: key.dataset_id.clone(),
                candidate: key.label(),
                runs: group.runs.len(),
                expected: PROTOCOL_RUNS,
            });
        }
        if group.traces > 0 && group.percentiles > 0 {
            warnings.push(Warning::MixedLatencyRepresentation {
                dataset_id: key.dataset_id.clone(),
                candidate: key.label(),
            });
        }
    }
    warnings.sort();
    warnings
}
