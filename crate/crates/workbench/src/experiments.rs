//! Per-point computations of every experiment.

use std::f64::consts::PI;

use indexmap::IndexMap;
use twistbethe_core::baes::inhom::{ground_transfer_eigenvector, solve_inhom_baes_with};
use twistbethe_core::baes::{
    energy_inhom, excited_quantum_numbers, ground_state_hom, inhom_contributions, InhomTarget,
};
use twistbethe_core::ed::{ed_spectrum, lowest_eigenpairs};
use twistbethe_core::model::{build_hamiltonian, Boundary, ModelParams, Parity};
use twistbethe_core::scaling::{extrapolate, fit, Sample};
use twistbethe_core::thermo::{
    e0_density, excitation_gap_tl, hole_energy, twisted_boundary_energy,
};

use crate::config::{Experiment, ExperimentConfig, FitSpec};
use crate::record::read_csv;

/// One point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub eta: f64,
    pub n: Option<usize>,
    pub boundary: Option<Boundary>,
}

/// Output columns of each experiment, in CSV order.
pub fn output_names(experiment: Experiment) -> &'static [&'static str] {
    match experiment {
        Experiment::EdSpectrum => &["e0", "e0_scaled", "e1", "degeneracy", "gap"],
        Experiment::SolveHom => &["energy", "energy_scaled", "m", "residual", "iterations"],
        Experiment::SolveInhom => &["energy", "energy_ed", "abs_error", "fit_residual", "bae_residual", "scalar_mismatch"],
        Experiment::EinhScan => &["e_hom", "e_ed", "e_inh", "e_inh_scaled"],
        Experiment::BoundaryEnergyScan => &["e_anti", "e_per", "diff_scaled", "eb_tl_scaled"],
        Experiment::GapScan => &["holes", "e_ground", "e_excited", "gap", "gap_scaled", "gap_tl_scaled"],
        Experiment::ChargeScan => &["momentum_inh_re", "momentum_inh_im", "h2_inh_re", "h2_inh_im"],
        Experiment::Thermo => &["e0", "e0_scaled", "e_h_edge", "e_b", "e_b_scaled", "gap_odd", "gap_odd_scaled"],
        Experiment::Fit => &["a", "b", "c", "rms_residual", "n_points", "asymptote"],
    }
}

pub fn points(cfg: &ExperimentConfig) -> Vec<Point> {
    let boundary = match cfg.experiment {
        Experiment::BoundaryEnergyScan | Experiment::Thermo | Experiment::Fit => None,
        _ => Some(cfg.boundary),
    };
    if cfg.experiment == Experiment::Fit {
        // the fit reads its data from a file; η is echoed from there
        return vec![Point { eta: f64::NAN, n: None, boundary }];
    }
    let mut out = Vec::new();
    for eta in cfg.etas() {
        if cfg.experiment.uses_sizes() {
            out.extend(cfg.n_list.iter().map(|&n| Point {
                eta,
                n: Some(n),
                boundary,
            }));
        } else {
            out.push(Point { eta, n: None, boundary });
        }
    }
    out
}

type Outputs = IndexMap<String, f64>;

fn outputs(experiment: Experiment, values: &[f64]) -> Outputs {
    let names = output_names(experiment);
    debug_assert_eq!(names.len(), values.len());
    names.iter().map(|s| s.to_string()).zip(values.iter().copied()).collect()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ground_ed(n: usize, eta: f64, boundary: Boundary, cfg: &ExperimentConfig) -> Result<f64, String> {
    let params = ModelParams::new(n, eta, boundary).map_err(err)?;
    let h = build_hamiltonian(&params).map_err(err)?;
    Ok(lowest_eigenpairs(&h, 1, &cfg.ed_settings()).map_err(err)?.values[0])
}

/// Computes one point. Errors are returned as text for the record.
pub fn compute(cfg: &ExperimentConfig, p: &Point) -> Result<Outputs, String> {
    let eta = p.eta;
    let ch = eta.cosh();
    let s = &cfg.solver;
    let ss = &cfg.series;
    let ed = cfg.ed_settings();
    let n = p.n.unwrap_or(0);
    let boundary = p.boundary.unwrap_or(cfg.boundary);
    let e = cfg.experiment;
    match e {
        Experiment::EdSpectrum => {
            let params = ModelParams::new(n, eta, boundary).map_err(err)?;
            let h = build_hamiltonian(&params).map_err(err)?;
            let count = params.dim().min(4);
            let spec = ed_spectrum(&h, count, &ed).map_err(err)?;
            let e0 = spec.levels[0].value.re;
            let gap = spec.levels.get(1).map_or(f64::NAN, |l| l.value.re - e0);
            let e1 = spec.eigenvalues.get(1).map_or(f64::NAN, |v| v.re);
            Ok(outputs(e, &[e0, e0 / ch, e1, spec.levels[0].multiplicity as f64, gap]))
        }
        Experiment::SolveHom => {
            let (roots, energy) = ground_state_hom(n, eta, boundary, s).map_err(err)?;
            Ok(outputs(
                e,
                &[energy, energy / ch, roots.x.len() as f64, roots.residual, roots.iterations as f64],
            ))
        }
        Experiment::SolveInhom => {
            let params = ModelParams::new(n, eta, boundary).map_err(err)?;
            let roots = solve_inhom_baes_with(&params, InhomTarget::GroundState, s, &ed).map_err(err)?;
            let energy = energy_inhom(&roots).map_err(err)?;
            let (_, energy_ed) = ground_transfer_eigenvector(&params, &ed).map_err(err)?;
            let mismatch = (roots.recomputed_scalar() - roots.sum_scalar).norm();
            Ok(outputs(
                e,
                &[energy, energy_ed, (energy - energy_ed).abs(), roots.fit_residual, roots.residual, mismatch],
            ))
        }
        Experiment::EinhScan => {
            let (_, e_hom) = ground_state_hom(n, eta, Boundary::Antiperiodic, s).map_err(err)?;
            let e_ed = ground_ed(n, eta, Boundary::Antiperiodic, cfg)?;
            let e_inh = e_hom - e_ed;
            Ok(outputs(e, &[e_hom, e_ed, e_inh, e_inh / ch]))
        }
        Experiment::BoundaryEnergyScan => {
            let anti = ground_ed(n, eta, Boundary::Antiperiodic, cfg)?;
            let per = ground_ed(n, eta, Boundary::Periodic, cfg)?;
            let eb = twisted_boundary_energy(eta, Parity::of(n), ss).map_err(err)?;
            Ok(outputs(e, &[anti, per, (anti - per) / ch, eb / ch]))
        }
        Experiment::GapScan => {
            let one_hole = matches!(
                (boundary, Parity::of(n)),
                (Boundary::Antiperiodic, Parity::Even) | (Boundary::Periodic, Parity::Odd)
            );
            let holes = if one_hole { 1 } else { 2 };
            let (_, ground) = ground_state_hom(n, eta, boundary, s).map_err(err)?;
            let excited = excited_quantum_numbers(n, boundary, holes, eta, s).map_err(err)?;
            let lowest = excited
                .first()
                .ok_or_else(|| format!("no {holes}-hole configuration for N = {n}"))?
                .energy;
            let sector = if one_hole { Parity::Even } else { Parity::Odd };
            let gap_tl = excitation_gap_tl(eta, sector, ss).map_err(err)?;
            let gap = lowest - ground;
            Ok(outputs(e, &[holes as f64, ground, lowest, gap, gap / ch, gap_tl / ch]))
        }
        Experiment::ChargeScan => {
            let c = inhom_contributions(n, eta, s, &ed).map_err(err)?;
            Ok(outputs(e, &[c.momentum.re, c.momentum.im, c.h2.re, c.h2.im]))
        }
        Experiment::Thermo => {
            let e0 = e0_density(eta, ss).map_err(err)?;
            let eh = hole_energy(PI / eta, eta, ss).map_err(err)?;
            let eb = twisted_boundary_energy(eta, Parity::Even, ss).map_err(err)?;
            let gap = excitation_gap_tl(eta, Parity::Odd, ss).map_err(err)?;
            Ok(outputs(e, &[e0, e0 / ch, eh, eb, eb / ch, gap, gap / ch]))
        }
        Experiment::Fit => {
            let spec = cfg.fit.as_ref().ok_or("missing fit section")?;
            let samples = load_samples(spec)?;
            let f = fit(spec.kind, &samples).map_err(err)?;
            let asymptote = extrapolate(&f).unwrap_or(f64::NAN);
            Ok(outputs(
                e,
                &[f.a, f.b, f.c.unwrap_or(f64::NAN), f.rms_residual, f.n_points as f64, asymptote],
            ))
        }
    }
}

/// Reads `(N, value)` samples from a results CSV. Failed rows, rows of the
/// other parity and rows with non-finite values are skipped.
pub fn load_samples(spec: &FitSpec) -> Result<Vec<Sample>, String> {
    let file = std::fs::File::open(&spec.input).map_err(|e| format!("{}: {e}", spec.input.display()))?;
    let records = read_csv(file).map_err(err)?;
    let first = records.first().ok_or("input CSV has no rows")?;
    let column = match &spec.column {
        Some(c) => c.clone(),
        None => first
            .outputs
            .keys()
            .next()
            .cloned()
            .ok_or("input CSV has no output columns")?,
    };
    if !first.outputs.contains_key(&column) {
        return Err(format!("column '{column}' not in input CSV"));
    }
    Ok(records
        .iter()
        .filter(|r| r.is_ok())
        .filter(|r| match (spec.parity, r.n) {
            (Some(p), Some(n)) => p.keeps(n),
            _ => true,
        })
        .filter_map(|r| Some(Sample::new(r.n?, r.output(&column)?)))
        .filter(|s| s.value.is_finite())
        .collect())
}
