//! Experiment configuration, loaded from JSON and overridable from the CLI.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use twistbethe_core::baes::inhom::INHOM_MAX_SITES;
use twistbethe_core::baes::SolverSettings;
use twistbethe_core::ed::EdSettings;
use twistbethe_core::model::Boundary;
use twistbethe_core::scaling::FitKind;
use twistbethe_core::thermo::SeriesSettings;

use crate::WorkbenchError;

/// Largest chain any ED-backed experiment accepts.
pub const ED_MAX_SITES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    EdSpectrum,
    SolveHom,
    SolveInhom,
    EinhScan,
    BoundaryEnergyScan,
    GapScan,
    ChargeScan,
    Thermo,
    Fit,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::EdSpectrum,
        Experiment::SolveHom,
        Experiment::SolveInhom,
        Experiment::EinhScan,
        Experiment::BoundaryEnergyScan,
        Experiment::GapScan,
        Experiment::ChargeScan,
        Experiment::Thermo,
        Experiment::Fit,
    ];

    /// Kebab-case name used on the command line and in file names.
    pub fn slug(self) -> &'static str {
        match self {
            Experiment::EdSpectrum => "ed-spectrum",
            Experiment::SolveHom => "solve-hom",
            Experiment::SolveInhom => "solve-inhom",
            Experiment::EinhScan => "einh-scan",
            Experiment::BoundaryEnergyScan => "boundary-energy-scan",
            Experiment::GapScan => "gap-scan",
            Experiment::ChargeScan => "charge-scan",
            Experiment::Thermo => "thermo",
            Experiment::Fit => "fit",
        }
    }

    /// Whether the sweep runs over `N` (Thermo and Fit do not).
    pub fn uses_sizes(self) -> bool {
        !matches!(self, Experiment::Thermo | Experiment::Fit)
    }

    /// Largest `N` the experiment can handle.
    pub fn max_sites(self) -> Option<usize> {
        match self {
            Experiment::EdSpectrum | Experiment::EinhScan | Experiment::BoundaryEnergyScan => Some(ED_MAX_SITES),
            Experiment::ChargeScan => Some(ED_MAX_SITES),
            Experiment::SolveInhom => Some(INHOM_MAX_SITES),
            Experiment::SolveHom | Experiment::GapScan => None,
            Experiment::Thermo | Experiment::Fit => None,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Experiment {
    type Err = WorkbenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace(['_', '-'], "");
        Experiment::ALL
            .into_iter()
            .find(|e| e.slug().replace('-', "") == key)
            .ok_or_else(|| WorkbenchError::Config(format!("unknown experiment '{s}'")))
    }
}

/// A single η or a list of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl Default for EtaSpec {
    fn default() -> Self {
        EtaSpec::Many(Vec::new())
    }
}

impl EtaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EtaSpec::One(e) => vec![*e],
            EtaSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub kind: FitKind,
    pub input: PathBuf,
    /// Column holding the values; defaults to the first non-parameter column.
    #[serde(default)]
    pub column: Option<String>,
    /// Keep only even or only odd `N` (`"even"` / `"odd"`).
    #[serde(default)]
    pub parity: Option<ParityFilter>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityFilter {
    Even,
    Odd,
}

impl ParityFilter {
    pub fn keeps(self, n: usize) -> bool {
        (n % 2 == 0) == (self == ParityFilter::Even)
    }
}

impl FromStr for ParityFilter {
    type Err = WorkbenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "even" => Ok(ParityFilter::Even),
            "odd" => Ok(ParityFilter::Odd),
            _ => Err(WorkbenchError::Config(format!("unknown parity '{s}' (even|odd)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Unused by the fit experiment, which takes η from its input.
    #[serde(default)]
    pub eta: EtaSpec,
    #[serde(rename = "N_list", alias = "n_list", default)]
    pub n_list: Vec<usize>,
    #[serde(
        serialize_with = "ser_boundary",
        deserialize_with = "de_boundary",
        default = "default_boundary"
    )]
    pub boundary: Boundary,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub series: SeriesSettings,
    #[serde(default)]
    pub ed: EdSettings,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub force: bool,
    /// Unix seconds stamped on fresh records; `SOURCE_DATE_EPOCH` applies
    /// when unset, and `0` when neither is given.
    #[serde(default)]
    pub timestamp: Option<u64>,
    #[serde(default)]
    pub fit: Option<FitSpec>,
}

fn default_boundary() -> Boundary {
    Boundary::Antiperiodic
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

pub fn ser_boundary<S: Serializer>(b: &Boundary, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(b.short_name())
}

pub fn de_boundary<'de, D: Deserializer<'de>>(d: D) -> Result<Boundary, D::Error> {
    let raw = String::deserialize(d)?;
    raw.parse().map_err(serde::de::Error::custom)
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, eta: Vec<f64>, n_list: Vec<usize>, boundary: Boundary) -> Self {
        ExperimentConfig {
            experiment,
            eta: EtaSpec::Many(eta),
            n_list,
            boundary,
            solver: SolverSettings::default(),
            series: SeriesSettings::default(),
            ed: EdSettings::default(),
            output_dir: default_output_dir(),
            seed: 0,
            workers: None,
            force: false,
            timestamp: None,
            fit: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, WorkbenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WorkbenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| WorkbenchError::Config(format!("{}: {e}", path.display())))
    }

    pub fn etas(&self) -> Vec<f64> {
        self.eta.values()
    }

    /// ED settings with the configured seed.
    pub fn ed_settings(&self) -> EdSettings {
        EdSettings {
            seed: self.seed,
            ..self.ed.clone()
        }
    }

    pub fn validate(&self) -> Result<(), WorkbenchError> {
        let bad = |m: String| Err(WorkbenchError::Config(m));
        let etas = self.etas();
        if etas.is_empty() && self.experiment != Experiment::Fit {
            return bad("eta list is empty".into());
        }
        if let Some(e) = etas.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return bad(format!("eta must be finite and > 0, got {e}"));
        }
        self.solver
            .validate()
            .map_err(|e| WorkbenchError::Config(e.to_string()))?;
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        if self.experiment == Experiment::Fit && self.fit.is_none() {
            return bad("the fit experiment needs a `fit` section".into());
        }
        if !self.experiment.uses_sizes() {
            return Ok(());
        }
        if self.n_list.is_empty() {
            return bad("N_list is empty".into());
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("N_list must be strictly ascending, got {:?}", self.n_list));
        }
        if self.n_list[0] < 2 {
            return bad("N >= 2 required".into());
        }
        if let Some(max) = self.experiment.max_sites() {
            let top = *self.n_list.last().unwrap();
            if top > max {
                return bad(format!("{} supports N <= {max}, got {top}", self.experiment));
            }
        }
        let needs_twisted = matches!(
            self.experiment,
            Experiment::SolveInhom | Experiment::EinhScan | Experiment::ChargeScan
        );
        if needs_twisted && self.boundary != Boundary::Antiperiodic {
            return bad(format!("{} is defined for the antiperiodic chain", self.experiment));
        }
        Ok(())
    }

    /// Stamp for fresh records.
    pub fn resolved_timestamp(&self) -> u64 {
        self.timestamp
            .or_else(|| std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok())
            .unwrap_or(0)
    }
}

/// Parses `8,10,12`, `8..18` (inclusive) and `8..18:2`, or mixtures of
/// them separated by commas. The result is sorted and deduplicated.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>, WorkbenchError> {
    let bad = || WorkbenchError::Config(format!("bad size list '{spec}'"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((h, s)) => (h, s.parse::<usize>().map_err(|_| bad())?),
                None => (rest, 1),
            };
            let lo: usize = lo.trim().parse().map_err(|_| bad())?;
            let hi: usize = hi.trim().parse().map_err(|_| bad())?;
            if step == 0 || hi < lo {
                return Err(bad());
            }
            out.extend((lo..=hi).step_by(step));
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn parse_etas(spec: &str) -> Result<Vec<f64>, WorkbenchError> {
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| WorkbenchError::Config(format!("bad eta '{p}'")))
        })
        .collect()
}
