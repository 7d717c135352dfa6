//! Writes record sets as CSV, JSON and SVG files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use twistbethe_core::scaling::{fit, FitKind, FitResult, Sample};

use crate::config::Experiment;
use crate::record::{check_schema, write_csv, write_json, ResultRecord};
use crate::svg::{fit_curve, Plot, Scale, Series, Style};
use crate::WorkbenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Emitted {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// How an experiment's table is drawn.
struct PlotSpec {
    y: &'static str,
    y_label: &'static str,
    x_scale: Scale,
    y_scale: Scale,
    fit: Option<FitKind>,
    /// Plot `|y|`, so both parities show on a log axis.
    abs: bool,
    split_parity: bool,
}

fn plot_spec(experiment: Experiment) -> Option<PlotSpec> {
    let spec = |y, y_label, x_scale, y_scale, fit, abs, split_parity| {
        Some(PlotSpec {
            y,
            y_label,
            x_scale,
            y_scale,
            fit,
            abs,
            split_parity,
        })
    };
    use Scale::{Linear, Log};
    match experiment {
        Experiment::EdSpectrum => spec("e0_scaled", "E0 / cosh eta", Linear, Linear, None, false, true),
        Experiment::SolveHom => spec("energy_scaled", "E_hom / cosh eta", Linear, Linear, None, false, true),
        Experiment::SolveInhom => spec("abs_error", "|E_BAE - E_ED|", Linear, Log, None, false, false),
        Experiment::EinhScan => {
            spec("e_inh_scaled", "|E_inh| / cosh eta", Log, Log, Some(FitKind::Power), true, true)
        }
        Experiment::BoundaryEnergyScan => spec(
            "diff_scaled",
            "(E_anti - E_per) / cosh eta",
            Linear,
            Linear,
            Some(FitKind::PowerOffset),
            false,
            true,
        ),
        Experiment::GapScan => spec(
            "gap_scaled",
            "gap / cosh eta",
            Linear,
            Linear,
            Some(FitKind::PowerOffset),
            false,
            true,
        ),
        Experiment::ChargeScan => {
            spec("momentum_inh_im", "|Im P_inh|", Log, Log, Some(FitKind::Power), true, true)
        }
        Experiment::Thermo => spec("e_b_scaled", "E_b / cosh eta", Linear, Linear, None, false, false),
        Experiment::Fit => None,
    }
}

fn fit_label(kind: FitKind, f: &FitResult) -> String {
    match f.c {
        Some(c) => format!("{kind} fit: b = {:.4}, c = {c:.5}", f.b),
        None => format!("{kind} fit: b = {:.4}", f.b),
    }
}

/// Default figure of a scan: markers per η (and parity of `N`), with a
/// fitted curve wherever the fit succeeds.
pub fn plot_for(records: &[ResultRecord]) -> Option<Plot> {
    let first = records.first()?;
    let spec = plot_spec(first.experiment)?;
    let by_eta = first.experiment == Experiment::Thermo;
    let mut groups: BTreeMap<(u64, Option<bool>), Vec<(f64, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        let Some(mut y) = r.output(spec.y) else { continue };
        if spec.abs {
            y = y.abs();
        }
        let (x, key) = if by_eta {
            (r.eta, (0, None))
        } else {
            let Some(n) = r.n else { continue };
            let parity = spec.split_parity.then_some(n % 2 == 0);
            (n as f64, (r.eta.to_bits(), parity))
        };
        groups.entry(key).or_default().push((x, y));
    }
    let mut series = Vec::new();
    for ((eta_bits, parity), points) in groups {
        let label = match (by_eta, parity) {
            (true, _) => "thermodynamic limit".to_string(),
            (false, Some(even)) => {
                format!("eta = {}, {} N", f64::from_bits(eta_bits), if even { "even" } else { "odd" })
            }
            (false, None) => format!("eta = {}", f64::from_bits(eta_bits)),
        };
        let overlay = spec.fit.and_then(|kind| {
            let usable: Vec<Sample> = points
                .iter()
                .filter(|p| spec.y_scale == Scale::Linear || p.1 > 0.0)
                .map(|&(x, y)| Sample::new(x as usize, y))
                .collect();
            let f = fit(kind, &usable).ok()?;
            let (lo, hi) = (points.first()?.0, points.last()?.0);
            Some(Series {
                label: fit_label(kind, &f),
                points: fit_curve(&f, lo, hi, spec.x_scale == Scale::Log),
                style: Style::Line,
            })
        });
        series.push(Series {
            label,
            points,
            style: Style::Markers,
        });
        series.extend(overlay);
    }
    Some(Plot {
        title: first.experiment.slug().to_string(),
        x_label: if by_eta { "eta" } else { "N" }.to_string(),
        y_label: spec.y_label.to_string(),
        x_scale: spec.x_scale,
        y_scale: spec.y_scale,
        series,
    })
}

/// Data and fitted model of a standalone fit, on log axes when the model
/// decays as a power law.
pub fn fit_plot(samples: &[Sample], f: &FitResult, y_label: &str) -> Plot {
    let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.n as f64, s.value)).collect();
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let log = f.kind == FitKind::Power && points.iter().all(|p| p.1 > 0.0);
    let (x_scale, y_scale) = match f.kind {
        FitKind::Power if log => (Scale::Log, Scale::Log),
        FitKind::Exp if f.a > 0.0 => (Scale::Linear, Scale::Log),
        _ => (Scale::Linear, Scale::Linear),
    };
    Plot {
        title: format!("{} fit", f.kind),
        x_label: "N".into(),
        y_label: y_label.into(),
        x_scale,
        y_scale,
        series: vec![
            Series {
                label: "data".into(),
                points,
                style: Style::Markers,
            },
            Series {
                label: fit_label(f.kind, f),
                points: fit_curve(f, lo, hi, x_scale == Scale::Log),
                style: Style::Line,
            },
        ],
    }
}

/// Writes `records` in one format.
pub fn write<W: Write>(records: &[ResultRecord], format: Format, out: W, plot: Option<&Plot>) -> Result<(), WorkbenchError> {
    match format {
        Format::Csv => write_csv(records, out),
        Format::Json => write_json(records, out),
        Format::Svg => {
            check_schema(records)?;
            let owned;
            let plot = match plot {
                Some(p) => p,
                None => {
                    owned = plot_for(records)
                        .ok_or_else(|| WorkbenchError::Emit("no default plot for these records".into()))?;
                    &owned
                }
            };
            let mut out = out;
            out.write_all(plot.render().as_bytes())?;
            Ok(())
        }
    }
}

/// Writes `{slug}.csv`, `{slug}.json` and, when a figure exists,
/// `{slug}.svg` into `dir`. `plot` replaces the default figure.
pub fn emit_all(records: &[ResultRecord], dir: &Path, plot: Option<&Plot>) -> Result<Emitted, WorkbenchError> {
    check_schema(records)?;
    let Some(first) = records.first() else {
        return Ok(Emitted::default());
    };
    fs::create_dir_all(dir)?;
    let path = |f: Format| dir.join(format!("{}.{}", first.experiment.slug(), f.extension()));
    let mut emitted = Emitted::default();
    for format in [Format::Csv, Format::Json] {
        let p = path(format);
        write(records, format, fs::File::create(&p)?, None)?;
        match format {
            Format::Csv => emitted.csv = Some(p),
            _ => emitted.json = Some(p),
        }
    }
    let figure = match plot {
        Some(p) => Some(p.clone()),
        None => plot_for(records),
    };
    if let Some(figure) = figure {
        let p = path(Format::Svg);
        fs::write(&p, figure.render())?;
        emitted.svg = Some(p);
    }
    Ok(emitted)
}
