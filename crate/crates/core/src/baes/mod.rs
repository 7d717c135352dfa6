//! Bethe-ansatz equations.
//!
//! The reduced (homogeneous) equations are solved in logarithmic form for
//! real roots `x_j`, related to the rapidities by `λ_j = (η/2)(i x_j − 1)`:
//!
//! ```text
//! [twisted] η x_j + N θ₁(x_j) = 2π I_j + Σ_k θ₂(x_j − x_k)
//! ```
//!
//! Each configuration is labelled by its quantum numbers `I_j`, stored as
//! `2 I_j` so half-odd values stay exact. The full inhomogeneous solution of
//! the twisted chain lives in [`inhom`], conserved charges in [`charges`].

pub mod charges;
pub mod inhom;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Boundary, Parity};

pub use charges::{
    charge_from_roots, exact_ground_charges, inhom_contribution, inhom_contributions, ChargeOrder, InhomContributions,
    Observable,
};
pub use inhom::{energy_inhom, solve_inhom_baes, InhomBetheRoots, InhomTarget};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial Newton step scale in `(0, 1]`.
    pub damping: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-12,
            max_iter: 200,
            damping: 1.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter < 1 || !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParams(format!("bad solver settings {self:?}")));
        }
        Ok(())
    }
}

/// Quantum numbers of a root configuration, stored as `2 I_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantumNumbers {
    pub twice_i: Vec<i64>,
    pub n: usize,
    pub boundary: Boundary,
}

impl QuantumNumbers {
    pub fn new(n: usize, boundary: Boundary, twice_i: Vec<i64>) -> Result<Self> {
        let qn = QuantumNumbers { twice_i, n, boundary };
        qn.validate()?;
        Ok(qn)
    }

    pub fn m(&self) -> usize {
        self.twice_i.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.twice_i.iter().map(|&t| t as f64 / 2.0).collect()
    }

    /// Whether `2 I_j` must be even for this `(N, M, boundary)`.
    pub fn requires_even(n: usize, m: usize, boundary: Boundary) -> bool {
        let n_minus_m_even = (n - m) % 2 == 0;
        match boundary {
            Boundary::Antiperiodic => n_minus_m_even,
            Boundary::Periodic => !n_minus_m_even,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m() > self.n {
            return Err(Error::InvalidParams(format!(
                "{} roots exceed chain length {}",
                self.m(),
                self.n
            )));
        }
        let even = Self::requires_even(self.n, self.m(), self.boundary);
        if let Some(bad) = self.twice_i.iter().find(|&&t| (t.rem_euclid(2) == 0) != even) {
            return Err(Error::InvalidParams(format!(
                "2I = {bad} has the wrong parity for N = {}, M = {} ({:?})",
                self.n,
                self.m(),
                self.boundary
            )));
        }
        if self.twice_i.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams(
                "quantum numbers must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Real roots of the reduced equations with their labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetheRootsX {
    /// Folded into `(−π/η, π/η]`.
    pub x: Vec<f64>,
    pub qn: QuantumNumbers,
    pub eta: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl BetheRootsX {
    pub fn n(&self) -> usize {
        self.qn.n
    }

    pub fn boundary(&self) -> Boundary {
        self.qn.boundary
    }
}

/// Continuous, strictly increasing branch of
/// `θ_m(x) = 2 arctan[tan(ηx/2) / tanh(mη/2)] + 2π ⌊(ηx + π)/2π⌋`.
pub fn theta_m(m: u32, x: f64, eta: f64) -> f64 {
    let y = eta * x;
    let k = (y / (2.0 * PI)).round();
    let half = 0.5 * (y - 2.0 * PI * k);
    let t = (0.5 * m as f64 * eta).tanh();
    // atan2 keeps the reduced branch continuous through half = ±π/2
    2.0 * half.sin().atan2(t * half.cos()) + 2.0 * PI * k
}

/// `dθ_m/dx = 2π a_m(x) = η sinh(mη) / (cosh(mη) − cos(ηx))`.
pub fn theta_m_prime(m: u32, x: f64, eta: f64) -> f64 {
    let me = m as f64 * eta;
    eta * me.sinh() / (me.cosh() - (eta * x).cos())
}

/// Counting function `Z(x)`; equals `I_j / N` at each solved root.
pub fn counting_function(x: f64, roots: &[f64], n: usize, eta: f64, boundary: Boundary) -> f64 {
    let nf = n as f64;
    let twist = match boundary {
        Boundary::Antiperiodic => eta * x / nf,
        Boundary::Periodic => 0.0,
    };
    let interaction: f64 = roots.iter().map(|&xk| theta_m(2, x - xk, eta)).sum();
    (twist + theta_m(1, x, eta) - interaction / nf) / (2.0 * PI)
}

/// Symmetric ladder of `slots` allowed values of `2I`.
fn slot_ladder(slots: usize) -> Vec<i64> {
    let top = slots as i64 - 1;
    (0..slots as i64).map(|k| -top + 2 * k).collect()
}

/// Ground-state labels. Twisted even `N`: `M = N/2`, `I = −M/2+1, …, M/2`;
/// twisted odd: `M = (N+1)/2`, symmetric. Periodic even: `M = N/2`,
/// symmetric; periodic odd: `M = (N−1)/2` with the hole at the band edge,
/// `I = −M/2+1, …, M/2`.
pub fn ground_quantum_numbers(n: usize, boundary: Boundary) -> Result<QuantumNumbers> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("N >= 2 required, got {n}")));
    }
    let twice_i = match (boundary, Parity::of(n)) {
        (Boundary::Antiperiodic, Parity::Odd) => slot_ladder(n.div_ceil(2)),
        (Boundary::Periodic, Parity::Even) => slot_ladder(n / 2),
        // one hole, parked on the left edge of M + 1 slots
        (Boundary::Antiperiodic, Parity::Even) => slot_ladder(n / 2 + 1)[1..].to_vec(),
        (Boundary::Periodic, Parity::Odd) => slot_ladder((n - 1) / 2 + 1)[1..].to_vec(),
    };
    QuantumNumbers::new(n, boundary, twice_i)
}

fn residuals(x: &[f64], targets: &[f64], n: usize, eta: f64, boundary: Boundary) -> Vec<f64> {
    let nf = n as f64;
    let twist = boundary == Boundary::Antiperiodic;
    x.iter()
        .zip(targets)
        .map(|(&xj, &target)| {
            let mut f = nf * theta_m(1, xj, eta) - target;
            if twist {
                f += eta * xj;
            }
            f - x.iter().map(|&xk| theta_m(2, xj - xk, eta)).sum::<f64>()
        })
        .collect()
}

fn jacobian(x: &[f64], n: usize, eta: f64, boundary: Boundary) -> DMatrix<f64> {
    let m = x.len();
    let nf = n as f64;
    let twist = if boundary == Boundary::Antiperiodic { eta } else { 0.0 };
    let mut jac = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut diag = twist + nf * theta_m_prime(1, x[j], eta);
        for k in 0..m {
            if k != j {
                let d = theta_m_prime(2, x[j] - x[k], eta);
                jac[(j, k)] = d;
                diag -= d;
            }
        }
        jac[(j, j)] = diag;
    }
    jac
}

/// Solves `slope·x + N θ₁(x) = target` for a single decoupled root.
fn decoupled_root(target: f64, n: usize, eta: f64, slope: f64) -> f64 {
    let g = |x: f64| slope * x + n as f64 * theta_m(1, x, eta) - target;
    let step = PI / eta;
    let (mut lo, mut hi) = (-step, step);
    while g(lo) > 0.0 {
        lo -= step;
    }
    while g(hi) < 0.0 {
        hi += step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn fold(x: f64, eta: f64) -> f64 {
    let period = 2.0 * PI / eta;
    let mut y = x - period * (x / period).round();
    if y <= -PI / eta {
        y += period;
    }
    y
}

/// Damped Newton solution of the logarithmic equations for the given labels.
pub fn solve_log_baes(eta: f64, qn: &QuantumNumbers, settings: &SolverSettings) -> Result<BetheRootsX> {
    solve_log_baes_from(eta, qn, settings, None)
}

/// As [`solve_log_baes`], optionally starting from a caller-supplied guess.
/// The guess is sorted first: roots are ordered like their labels.
pub fn solve_log_baes_from(
    eta: f64,
    qn: &QuantumNumbers,
    settings: &SolverSettings,
    initial: Option<&[f64]>,
) -> Result<BetheRootsX> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParams(format!("eta must be > 0, got {eta}")));
    }
    qn.validate()?;
    settings.validate()?;
    let n = qn.n;
    let boundary = qn.boundary;
    let targets: Vec<f64> = qn.twice_i.iter().map(|&t| PI * t as f64).collect();
    let slope = if boundary == Boundary::Antiperiodic { eta } else { 0.0 };

    let mut x: Vec<f64> = match initial {
        Some(guess) => {
            if guess.len() != qn.m() {
                return Err(Error::InvalidParams(format!(
                    "initial guess has {} roots, expected {}",
                    guess.len(),
                    qn.m()
                )));
            }
            let mut g = guess.to_vec();
            g.sort_by(f64::total_cmp);
            g
        }
        None => targets
            .iter()
            .map(|&t| decoupled_root(t, n, eta, slope))
            .collect(),
    };

    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let l2 = |v: &[f64]| v.iter().map(|f| f * f).sum::<f64>().sqrt();
    let mut f = residuals(&x, &targets, n, eta, boundary);
    let mut iterations = 0;
    while max_abs(&f) > settings.tol {
        if iterations >= settings.max_iter {
            return Err(Error::NewtonNonConvergence {
                iterations,
                residual: max_abs(&f),
                last_iterate: x,
            });
        }
        iterations += 1;
        let jac = jacobian(&x, n, eta, boundary);
        let rhs = DVector::from_iterator(f.len(), f.iter().map(|v| -v));
        let delta = jac
            .lu()
            .solve(&rhs)
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularJacobian { iteration: iterations })?;

        let f_norm = l2(&f);
        let mut step = settings.damping;
        let mut accepted = false;
        while step > 1e-12 {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + step * d).collect();
            let f_trial = residuals(&trial, &targets, n, eta, boundary);
            if l2(&f_trial) < (1.0 - 1e-4 * step) * f_norm {
                x = trial;
                f = f_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // at the rounding floor a full step can no longer reduce ‖F‖
            let floor = 64.0 * f64::EPSILON * (n as f64 + qn.m() as f64) * PI;
            if max_abs(&f) < floor.max(settings.tol) * 10.0 {
                break;
            }
            return Err(Error::NewtonNonConvergence {
                iterations,
                residual: max_abs(&f),
                last_iterate: x,
            });
        }
    }

    Ok(BetheRootsX {
        x: x.iter().map(|&v| fold(v, eta)).collect(),
        qn: qn.clone(),
        eta,
        residual: max_abs(&f),
        iterations,
    })
}

/// `E = −4 sinh η Σ_j sinh η / (cosh η − cos ηx_j) + N cosh η`, plus
/// `2 sinh η` for the twisted chain.
pub fn energy_hom(roots: &BetheRootsX) -> f64 {
    energy_hom_raw(&roots.x, roots.n(), roots.eta, roots.boundary())
}

pub fn energy_hom_raw(x: &[f64], n: usize, eta: f64, boundary: Boundary) -> f64 {
    let (sh, ch) = (eta.sinh(), eta.cosh());
    let sum: f64 = x.iter().map(|&xj| sh / (ch - (eta * xj).cos())).sum();
    let shift = if boundary == Boundary::Antiperiodic { 2.0 * sh } else { 0.0 };
    -4.0 * sh * sum + n as f64 * ch + shift
}

/// Ground configuration solved and evaluated in one go.
pub fn ground_state_hom(n: usize, eta: f64, boundary: Boundary, settings: &SolverSettings) -> Result<(BetheRootsX, f64)> {
    let qn = ground_quantum_numbers(n, boundary)?;
    let roots = solve_log_baes(eta, &qn, settings)?;
    let e = energy_hom(&roots);
    Ok((roots, e))
}

/// Positions of the holes of a solved configuration: the unoccupied slots
/// `I_h` of the ladder of `N − M (+1 twisted)` slots, located by solving
/// `Z(x_h) = I_h/N` on `[−π/η, π/η]`.
pub fn hole_positions(roots: &BetheRootsX) -> Vec<f64> {
    let n = roots.n();
    let eta = roots.eta;
    let boundary = roots.boundary();
    let twist = usize::from(boundary == Boundary::Antiperiodic);
    let slots = (n + twist).saturating_sub(roots.x.len());
    let z = |x: f64| counting_function(x, &roots.x, n, eta, boundary);
    slot_ladder(slots)
        .into_iter()
        .filter(|t| !roots.qn.twice_i.contains(t))
        .map(|t| {
            let target = t as f64 / (2.0 * n as f64);
            let (mut lo, mut hi) = (-PI / eta, PI / eta);
            if z(lo) >= target {
                return lo;
            }
            if z(hi) <= target {
                return hi;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if z(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 * (1.0 + mid.abs()) {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ExcitedConfiguration {
    pub qn: QuantumNumbers,
    pub roots: BetheRootsX,
    pub energy: f64,
}

/// Hole excitations: one hole for the twisted even / periodic odd chain
/// (`M = ⌊N/2⌋`), two holes for the twisted odd / periodic even chain
/// (`M = (N−1)/2` resp. `N/2 − 1`). Every placement of the holes on the
/// symmetric slot ladder is solved; the ground placement is excluded and
/// the rest is returned in ascending order of energy.
pub fn excited_quantum_numbers(
    n: usize,
    boundary: Boundary,
    holes: usize,
    eta: f64,
    settings: &SolverSettings,
) -> Result<Vec<ExcitedConfiguration>> {
    let one_hole_sector = matches!(
        (boundary, Parity::of(n)),
        (Boundary::Antiperiodic, Parity::Even) | (Boundary::Periodic, Parity::Odd)
    );
    let m = match (holes, one_hole_sector) {
        (1, true) => n / 2,
        (2, false) if n >= 3 => (n - 1) / 2,
        (1, false) | (2, true) | (2, false) => {
            return Err(Error::InvalidParams(format!(
                "{holes}-hole states are not the low-lying sector for N = {n}, {boundary:?}"
            )))
        }
        _ => {
            return Err(Error::InvalidParams(format!(
                "only 1- and 2-hole excitations are supported, got {holes}"
            )))
        }
    };
    let slots = slot_ladder(m + holes);
    let ground = ground_quantum_numbers(n, boundary)?;

    let mut placements: Vec<Vec<usize>> = Vec::new();
    if holes == 1 {
        placements.extend((0..slots.len()).map(|h| vec![h]));
    } else {
        for a in 0..slots.len() {
            for b in a + 1..slots.len() {
                placements.push(vec![a, b]);
            }
        }
    }

    let mut out = Vec::new();
    for hole_set in placements {
        let twice_i: Vec<i64> = slots
            .iter()
            .enumerate()
            .filter(|(i, _)| !hole_set.contains(i))
            .map(|(_, &t)| t)
            .collect();
        let qn = QuantumNumbers::new(n, boundary, twice_i)?;
        if qn == ground {
            continue;
        }
        let roots = solve_log_baes(eta, &qn, settings)?;
        let energy = energy_hom(&roots);
        out.push(ExcitedConfiguration { qn, roots, energy });
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
        // composite Simpson with many panels; integrands here are smooth
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn theta_is_odd_and_quasi_periodic() {
        for &eta in &[0.3, 1.0, 2.0, 3.5] {
            for m in 1..=2 {
                assert_eq!(theta_m(m, 0.0, eta), 0.0);
                for &x in &[0.1, 0.9, 1.7, 4.2] {
                    let a = theta_m(m, x, eta);
                    assert!((a + theta_m(m, -x, eta)).abs() < 1e-13);
                    let shifted = theta_m(m, x + 2.0 * PI / eta, eta);
                    assert!((shifted - a - 2.0 * PI).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn theta_is_continuous_at_the_window_edge() {
        let eta = 2.0;
        let edge = PI / eta;
        let below = theta_m(1, edge - 1e-9, eta);
        let above = theta_m(1, edge + 1e-9, eta);
        assert!((above - below).abs() < 1e-6);
        assert!((theta_m(1, edge, eta) - PI).abs() < 1e-12);
    }

    #[test]
    fn theta_matches_integrated_kernel() {
        let eta: f64 = 2.0;
        let a1 = |x: f64| eta / (2.0 * PI) * eta.sinh() / (eta.cosh() - (eta * x).cos());
        let oracle = 2.0 * PI * quad(a1, 0.0, 0.7);
        assert!((theta_m(1, 0.7, eta) - oracle).abs() < 1e-10);
    }

    #[test]
    fn ground_labels() {
        let q = ground_quantum_numbers(8, Boundary::Antiperiodic).unwrap();
        assert_eq!(q.values(), vec![-1.0, 0.0, 1.0, 2.0]);
        let q = ground_quantum_numbers(7, Boundary::Antiperiodic).unwrap();
        assert_eq!(q.values(), vec![-1.5, -0.5, 0.5, 1.5]);
        let q = ground_quantum_numbers(8, Boundary::Periodic).unwrap();
        assert_eq!(q.values(), vec![-1.5, -0.5, 0.5, 1.5]);
        let q = ground_quantum_numbers(9, Boundary::Periodic).unwrap();
        assert_eq!(q.m(), 4);
        assert_eq!(q.values(), vec![-1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn label_parity_is_enforced() {
        // N - M = 4 even: twisted labels must be integers
        assert!(QuantumNumbers::new(8, Boundary::Antiperiodic, vec![-3, -1, 1, 3]).is_err());
        assert!(QuantumNumbers::new(8, Boundary::Periodic, vec![-2, 0, 2, 4]).is_err());
        assert!(QuantumNumbers::new(8, Boundary::Antiperiodic, vec![2, 0, 4, 6]).is_err());
        assert!(QuantumNumbers::new(8, Boundary::Antiperiodic, vec![0, 0, 2, 4]).is_err());
    }

    #[test]
    fn empty_configuration_energy() {
        let e = energy_hom_raw(&[], 6, 1.5, Boundary::Periodic);
        assert!((e - 6.0 * 1.5f64.cosh()).abs() < 1e-14);
    }

    #[test]
    fn counting_function_at_roots() {
        for (n, boundary) in [(8, Boundary::Antiperiodic), (9, Boundary::Antiperiodic), (10, Boundary::Periodic)] {
            let (roots, _) = ground_state_hom(n, 2.0, boundary, &SolverSettings::default()).unwrap();
            for (x, i) in roots.x.iter().zip(roots.qn.values()) {
                let z = counting_function(*x, &roots.x, n, 2.0, boundary);
                assert!((z - i / n as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let qn = ground_quantum_numbers(10, Boundary::Antiperiodic).unwrap();
        let targets: Vec<f64> = qn.twice_i.iter().map(|&t| PI * t as f64).collect();
        let x = [-1.1, -0.6, -0.2, 0.35, 0.9];
        let jac = jacobian(&x, 10, 1.3, Boundary::Antiperiodic);
        let h = 1e-6;
        for k in 0..5 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fp = residuals(&xp, &targets, 10, 1.3, Boundary::Antiperiodic);
            let fm = residuals(&xm, &targets, 10, 1.3, Boundary::Antiperiodic);
            for j in 0..5 {
                let fd = (fp[j] - fm[j]) / (2.0 * h);
                assert!((fd - jac[(j, k)]).abs() <= 1e-6 * jac[(j, k)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn hole_count_contract() {
        let s = SolverSettings::default();
        assert!(excited_quantum_numbers(8, Boundary::Antiperiodic, 3, 2.0, &s).is_err());
        assert!(excited_quantum_numbers(8, Boundary::Antiperiodic, 2, 2.0, &s).is_err());
        assert!(excited_quantum_numbers(7, Boundary::Antiperiodic, 1, 2.0, &s).is_err());
    }

    #[test]
    fn roots_are_folded_into_window() {
        let (roots, _) = ground_state_hom(12, 2.5, Boundary::Antiperiodic, &SolverSettings::default()).unwrap();
        assert!(roots.x.iter().all(|&x| x > -PI / 2.5 && x <= PI / 2.5));
    }
}
