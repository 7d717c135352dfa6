//! Thermodynamic-limit quantities from convergent series.
//!
//! All sums run over Fourier modes of the root density on the window
//! `[−π/η, π/η]`, where the kernels are `ã_m(k) = e^{−mη|k|}`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Boundary, Parity};

/// Below this η the hole energy switches to its Poisson-resummed form.
const DUAL_SERIES_ETA: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesSettings {
    pub term_tol: f64,
    /// `None` means `⌈40/η⌉ + 50`.
    pub max_terms: Option<usize>,
    pub eta_min: f64,
}

impl Default for SeriesSettings {
    fn default() -> Self {
        SeriesSettings {
            term_tol: 1e-15,
            max_terms: None,
            eta_min: 1e-4,
        }
    }
}

impl SeriesSettings {
    pub fn max_terms_for(&self, eta: f64) -> usize {
        self.max_terms
            .unwrap_or_else(|| (40.0 / eta).ceil() as usize + 50)
            .max(1)
    }

    fn guard(&self, eta: f64) -> Result<()> {
        if !(self.term_tol > 0.0) {
            return Err(Error::InvalidParams("term_tol must be > 0".into()));
        }
        if !eta.is_finite() || eta < self.eta_min {
            return Err(Error::EtaBelowGuard {
                eta,
                eta_min: self.eta_min,
            });
        }
        Ok(())
    }
}

/// Sums `term(k).0` for `k = 1, 2, …` until the envelope `term(k).1`
/// drops below `tol` or `max` terms are used.
fn tail_sum(max: usize, tol: f64, term: impl Fn(f64) -> (f64, f64)) -> f64 {
    let mut sum = 0.0;
    for k in 1..=max {
        let (t, envelope) = term(k as f64);
        sum += t;
        if envelope < tol {
            break;
        }
    }
    sum
}

/// `a_m(x) = (η/2π) sinh(mη) / (cosh(mη) − cos ηx)`.
pub fn kernel_a(m: u32, x: f64, eta: f64) -> f64 {
    let me = m as f64 * eta;
    eta / (2.0 * PI) * me.sinh() / (me.cosh() - (eta * x).cos())
}

/// Ground-energy density
/// `e₀ = −8 sinh η Σ_{k≥1} 1/(1+e^{2ηk}) − 2 sinh η + cosh η`.
pub fn e0_density(eta: f64, settings: &SeriesSettings) -> Result<f64> {
    settings.guard(eta)?;
    let sum = tail_sum(settings.max_terms_for(eta), settings.term_tol, |k| {
        let q = (-2.0 * eta * k).exp();
        (q / (1.0 + q), q)
    });
    Ok(-8.0 * eta.sinh() * sum - 2.0 * eta.sinh() + eta.cosh())
}

/// The `η → 0` limit of `e₀ / cosh η`.
pub fn xxx_energy_density() -> f64 {
    1.0 - 4.0 * LN_2
}

/// Energy of one hole at `x₀`,
/// `e_h(x₀) = 4 sinh η [1/2 + Σ_{k≥1} cos(kηx₀) / cosh(ηk)]`.
///
/// For small η the same quantity is evaluated through its Poisson dual,
/// `2π sinh η / η · Σ_n sech(π(2πn − ηx₀)/2η)`, which converges in a
/// handful of terms there and stays positive to full relative precision.
pub fn hole_energy(x0: f64, eta: f64, settings: &SeriesSettings) -> Result<f64> {
    settings.guard(eta)?;
    let edge = PI / eta;
    if !(x0.abs() <= edge * (1.0 + 1e-12)) {
        return Err(Error::InvalidParams(format!(
            "hole position {x0} outside [−π/η, π/η]"
        )));
    }
    if eta >= DUAL_SERIES_ETA {
        Ok(hole_energy_direct(x0, eta, settings))
    } else {
        Ok(hole_energy_dual(x0, eta, settings))
    }
}

fn hole_energy_direct(x0: f64, eta: f64, settings: &SeriesSettings) -> f64 {
    let sum = tail_sum(settings.max_terms_for(eta), settings.term_tol, |k| {
        let envelope = 1.0 / (eta * k).cosh();
        ((k * eta * x0).cos() * envelope, envelope)
    });
    4.0 * eta.sinh() * (0.5 + sum)
}

fn hole_energy_dual(x0: f64, eta: f64, settings: &SeriesSettings) -> f64 {
    let phase = eta * x0;
    let term = |n: f64| {
        let arg = PI * (2.0 * PI * n - phase) / (2.0 * eta);
        1.0 / arg.cosh()
    };
    let mut sum = term(0.0);
    for n in 1..=settings.max_terms_for(eta) {
        let t = term(n as f64) + term(-(n as f64));
        sum += t;
        if t < settings.term_tol * sum {
            break;
        }
    }
    2.0 * PI * eta.sinh() / eta * sum
}

/// Twisted boundary energy
/// `E_b = 4 sinh η Σ_{k≥1} (−1)^k / cosh(ηk) + 2 sinh η` for even `N`,
/// `−E_b` for odd `N`.
pub fn twisted_boundary_energy(eta: f64, parity: Parity, settings: &SeriesSettings) -> Result<f64> {
    settings.guard(eta)?;
    let sum = tail_sum(settings.max_terms_for(eta), settings.term_tol, |k| {
        let sign = if k as u64 % 2 == 0 { 1.0 } else { -1.0 };
        let envelope = 1.0 / (eta * k).cosh();
        (sign * envelope, envelope)
    });
    let eb = 4.0 * eta.sinh() * sum + 2.0 * eta.sinh();
    Ok(match parity {
        Parity::Even => eb,
        Parity::Odd => -eb,
    })
}

/// Lowest excitation in the thermodynamic limit: gapless (`0`) for even
/// `N`, two holes at the band edge (`2 e_h(π/η)`) for odd `N`.
pub fn excitation_gap_tl(eta: f64, parity: Parity, settings: &SeriesSettings) -> Result<f64> {
    settings.guard(eta)?;
    match parity {
        Parity::Even => Ok(0.0),
        Parity::Odd => Ok(2.0 * hole_energy(PI / eta, eta, settings)?),
    }
}

/// Ground energy at size `N` from the density and the hole energy: `e₀N`
/// plus `e_h(π/η)` for the twisted even and the periodic odd chain.
pub fn ground_energy_tl(n: usize, eta: f64, boundary: Boundary, settings: &SeriesSettings) -> Result<f64> {
    let bulk = e0_density(eta, settings)? * n as f64;
    if has_hole(n, boundary) {
        Ok(bulk + hole_energy(PI / eta, eta, settings)?)
    } else {
        Ok(bulk)
    }
}

/// `e₀N + Σ_h e_h(x_h)` for holes at the given positions. With the
/// finite-`N` hole positions this matches the Bethe energy up to
/// exponentially small terms; [`ground_energy_tl`] puts the hole at the
/// edge and so differs by `O(1/N²)`.
pub fn energy_with_holes(n: usize, eta: f64, holes: &[f64], settings: &SeriesSettings) -> Result<f64> {
    let mut e = e0_density(eta, settings)? * n as f64;
    for &x in holes {
        e += hole_energy(x, eta, settings)?;
    }
    Ok(e)
}

fn has_hole(n: usize, boundary: Boundary) -> bool {
    matches!(
        (boundary, Parity::of(n)),
        (Boundary::Antiperiodic, Parity::Even) | (Boundary::Periodic, Parity::Odd)
    )
}

/// Fourier mode `ρ̃(k)` of the ground-state root density at size `N`,
/// including the `1/N` boundary and hole terms. `x0` is the hole position
/// and must be given exactly for the configurations that carry a hole.
pub fn density_fourier(k: i64, n: usize, eta: f64, boundary: Boundary, x0: Option<f64>) -> Result<C64> {
    if n == 0 || !(eta > 0.0) {
        return Err(Error::InvalidParams("N >= 1 and eta > 0 required".into()));
    }
    let kf = k.abs() as f64;
    let nf = n as f64;
    let bulk = C64::new(1.0 / (2.0 * (eta * kf).cosh()), 0.0);
    let denom = 1.0 + (-2.0 * eta * kf).exp();
    let delta = if k == 0 { 1.0 / (nf * denom) } else { 0.0 };
    let hole = |x0: f64| C64::from_polar(1.0, -(k as f64) * eta * x0) / (nf * denom);
    match (boundary, Parity::of(n), x0) {
        (Boundary::Antiperiodic, Parity::Even, Some(x)) => Ok(bulk + delta - hole(x)),
        (Boundary::Antiperiodic, Parity::Odd, None) => Ok(bulk + delta),
        (Boundary::Periodic, Parity::Even, None) => Ok(bulk),
        (Boundary::Periodic, Parity::Odd, Some(x)) => Ok(bulk - hole(x)),
        (_, _, Some(_)) => Err(Error::InvalidParams(
            "this configuration has no hole; x0 must be None".into(),
        )),
        (_, _, None) => Err(Error::InvalidParams(
            "this configuration has one hole; x0 is required".into(),
        )),
    }
}

/// Energy obtained by integrating the density against `a₁` via Parseval,
/// `E = −4N sinh η Σ_k e^{−η|k|} ρ̃(−k) + N cosh η (+2 sinh η twisted)`.
/// Independent of [`ground_energy_tl`]; used as a cross-check.
pub fn energy_from_density(
    n: usize,
    eta: f64,
    boundary: Boundary,
    x0: Option<f64>,
    settings: &SeriesSettings,
) -> Result<f64> {
    settings.guard(eta)?;
    let mut sum = density_fourier(0, n, eta, boundary, x0)?;
    for k in 1..=settings.max_terms_for(eta) as i64 {
        let w = (-eta * k as f64).exp();
        let t = w * (density_fourier(-k, n, eta, boundary, x0)? + density_fourier(k, n, eta, boundary, x0)?);
        sum += t;
        if t.norm() < settings.term_tol * 1e-2 {
            break;
        }
    }
    let shift = if boundary == Boundary::Antiperiodic { 2.0 * eta.sinh() } else { 0.0 };
    let e = -4.0 * n as f64 * eta.sinh() * sum + n as f64 * eta.cosh() + shift;
    Ok(e.re)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoEnergies {
    pub eta: f64,
    pub e0: f64,
    /// `(x₀, e_h(x₀))` pairs.
    pub e_h_at: Vec<(f64, f64)>,
    pub e_b: f64,
    pub gap_odd: f64,
}

pub fn thermo_energies(eta: f64, hole_positions: &[f64], settings: &SeriesSettings) -> Result<ThermoEnergies> {
    let e_h_at = hole_positions
        .iter()
        .map(|&x| hole_energy(x, eta, settings).map(|e| (x, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThermoEnergies {
        eta,
        e0: e0_density(eta, settings)?,
        e_h_at,
        e_b: twisted_boundary_energy(eta, Parity::Even, settings)?,
        gap_odd: excitation_gap_tl(eta, Parity::Odd, settings)?,
    })
}
