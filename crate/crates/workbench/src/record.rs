//! Result records and their CSV/JSON persistence.

use std::io::{Read, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use twistbethe_core::model::Boundary;

use crate::config::Experiment;
use crate::WorkbenchError;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Columns preceding the named outputs in CSV.
const LEADING: [&str; 7] = ["experiment", "variant", "eta", "N", "boundary", "status", "error"];
/// Columns following the named outputs in CSV.
const TRAILING: [&str; 2] = ["timestamp", "code_version"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: Experiment,
    /// Sub-case of the experiment, e.g. the fit kind; empty when unused.
    pub variant: String,
    pub eta: f64,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(serialize_with = "ser_opt_boundary", deserialize_with = "de_opt_boundary")]
    pub boundary: Option<Boundary>,
    pub status: Status,
    pub error: Option<String>,
    /// Named scalar outputs; `NaN` where a failed point produced nothing.
    pub outputs: IndexMap<String, f64>,
    pub timestamp: u64,
    pub code_version: String,
}

/// Bitwise float comparison so failed points (`NaN` outputs) compare equal
/// to themselves after a round trip.
impl PartialEq for ResultRecord {
    fn eq(&self, other: &Self) -> bool {
        let same_floats = self.eta.to_bits() == other.eta.to_bits()
            && self.outputs.len() == other.outputs.len()
            && self
                .outputs
                .iter()
                .zip(&other.outputs)
                .all(|((ka, va), (kb, vb))| ka == kb && va.to_bits() == vb.to_bits());
        same_floats
            && self.experiment == other.experiment
            && self.variant == other.variant
            && self.n == other.n
            && self.boundary == other.boundary
            && self.status == other.status
            && self.error == other.error
            && self.timestamp == other.timestamp
            && self.code_version == other.code_version
    }
}

fn ser_opt_boundary<S: Serializer>(b: &Option<Boundary>, s: S) -> Result<S::Ok, S::Error> {
    match b {
        Some(b) => s.serialize_some(b.short_name()),
        None => s.serialize_none(),
    }
}

fn de_opt_boundary<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Boundary>, D::Error> {
    let raw: Option<String> = Option::deserialize(d)?;
    raw.map(|r| r.parse().map_err(serde::de::Error::custom)).transpose()
}

impl ResultRecord {
    pub fn schema(&self) -> (Experiment, Vec<&str>) {
        (self.experiment, self.outputs.keys().map(String::as_str).collect())
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    pub fn output(&self, name: &str) -> Option<f64> {
        self.outputs.get(name).copied()
    }
}

/// `v` with 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Fails unless all records share one experiment and one output list.
pub fn check_schema(records: &[ResultRecord]) -> Result<(), WorkbenchError> {
    let Some(first) = records.first() else {
        return Ok(());
    };
    let want = first.schema();
    if let Some(bad) = records.iter().find(|r| r.schema() != want) {
        return Err(WorkbenchError::Emit(format!(
            "mixed record schemas: {:?} vs {:?}",
            want,
            bad.schema()
        )));
    }
    Ok(())
}

pub fn write_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<(), WorkbenchError> {
    check_schema(records)?;
    let mut w = csv::Writer::from_writer(out);
    let outputs: Vec<String> = records
        .first()
        .map(|r| r.outputs.keys().cloned().collect())
        .unwrap_or_default();
    let header: Vec<&str> = LEADING
        .iter()
        .copied()
        .chain(outputs.iter().map(String::as_str))
        .chain(TRAILING)
        .collect();
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.experiment.slug().to_string(),
            r.variant.clone(),
            format_float(r.eta),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.boundary.map(|b| b.short_name().to_string()).unwrap_or_default(),
            match r.status {
                Status::Ok => "ok".into(),
                Status::Error => "error".into(),
            },
            r.error.clone().unwrap_or_default(),
        ];
        row.extend(r.outputs.values().map(|&v| format_float(v)));
        row.push(r.timestamp.to_string());
        row.push(r.code_version.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRecord>, WorkbenchError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let fixed = LEADING.len() + TRAILING.len();
    if header.len() < fixed
        || header[..LEADING.len()] != LEADING
        || header[header.len() - TRAILING.len()..] != TRAILING
    {
        return Err(WorkbenchError::Emit(format!("unexpected CSV header {header:?}")));
    }
    let output_names = &header[LEADING.len()..header.len() - TRAILING.len()];
    let bad = |what: &str, v: &str| WorkbenchError::Emit(format!("bad {what} '{v}' in CSV"));
    let float = |v: &str| v.parse::<f64>().map_err(|_| bad("number", v));
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let outputs = output_names
            .iter()
            .enumerate()
            .map(|(k, name)| Ok((name.clone(), float(get(LEADING.len() + k))?)))
            .collect::<Result<IndexMap<_, _>, WorkbenchError>>()?;
        let t = header.len() - TRAILING.len();
        records.push(ResultRecord {
            experiment: get(0).parse()?,
            variant: get(1).to_string(),
            eta: float(get(2))?,
            n: match get(3) {
                "" => None,
                v => Some(v.parse().map_err(|_| bad("N", v))?),
            },
            boundary: match get(4) {
                "" => None,
                v => Some(v.parse().map_err(|_| bad("boundary", v))?),
            },
            status: match get(5) {
                "ok" => Status::Ok,
                "error" => Status::Error,
                v => return Err(bad("status", v)),
            },
            error: match get(6) {
                "" => None,
                v => Some(v.to_string()),
            },
            outputs,
            timestamp: get(t).parse().map_err(|_| bad("timestamp", get(t)))?,
            code_version: get(t + 1).to_string(),
        });
    }
    Ok(records)
}

/// JSON array of records. Non-finite outputs are written as strings
/// (`"NaN"`, `"inf"`) since JSON has no literal for them.
pub fn write_json<W: Write>(records: &[ResultRecord], mut out: W) -> Result<(), WorkbenchError> {
    check_schema(records)?;
    let value: Vec<serde_json::Value> = records.iter().map(record_to_json).collect();
    serde_json::to_writer_pretty(&mut out, &value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<ResultRecord>, WorkbenchError> {
    let values: Vec<serde_json::Value> = serde_json::from_reader(input)?;
    values.into_iter().map(record_from_json).collect()
}

pub fn record_to_json(r: &ResultRecord) -> serde_json::Value {
    let mut v = serde_json::to_value(r).expect("records serialize");
    if let Some(outputs) = v.get_mut("outputs").and_then(|o| o.as_object_mut()) {
        for (name, slot) in outputs.iter_mut() {
            let x = r.outputs[name];
            if !x.is_finite() {
                *slot = serde_json::Value::String(x.to_string());
            }
        }
    }
    v
}

pub fn record_from_json(v: serde_json::Value) -> Result<ResultRecord, WorkbenchError> {
    let raw: RawRecord = serde_json::from_value(v)?;
    Ok(raw.into_record())
}

/// Mirror of [`ResultRecord`] whose outputs accept strings for non-finite
/// values.
#[derive(Deserialize)]
struct RawRecord {
    experiment: Experiment,
    variant: String,
    eta: f64,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(deserialize_with = "de_opt_boundary")]
    boundary: Option<Boundary>,
    status: Status,
    error: Option<String>,
    outputs: IndexMap<String, FloatOrString>,
    timestamp: u64,
    code_version: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FloatOrString {
    Float(f64),
    Text(String),
}

impl RawRecord {
    fn into_record(self) -> ResultRecord {
        ResultRecord {
            experiment: self.experiment,
            variant: self.variant,
            eta: self.eta,
            n: self.n,
            boundary: self.boundary,
            status: self.status,
            error: self.error,
            outputs: self
                .outputs
                .into_iter()
                .map(|(k, v)| {
                    let x = match v {
                        FloatOrString::Float(x) => x,
                        FloatOrString::Text(s) => s.parse().unwrap_or(f64::NAN),
                    };
                    (k, x)
                })
                .collect(),
            timestamp: self.timestamp,
            code_version: self.code_version,
        }
    }
}
