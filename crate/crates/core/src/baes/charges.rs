//! Momentum and second-derivative charges from roots and from ED, and the
//! inhomogeneous-term contribution `X_hom − X_exact` for each observable.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::inhom::{ground_transfer_eigenvector, InhomBetheRoots};
use super::{ground_state_hom, BetheRootsX, SolverSettings};
use crate::ed::EdSettings;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{build_h2_charge, build_momentum_charge, Boundary, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChargeOrder {
    Momentum,
    H2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    Energy,
    Momentum,
    ChargeH2,
}

/// Root sets a charge can be evaluated on.
#[derive(Clone, Copy, Debug)]
pub enum RootSet<'a> {
    Hom(&'a BetheRootsX),
    Inhom(&'a InhomBetheRoots),
}

impl<'a> From<&'a BetheRootsX> for RootSet<'a> {
    fn from(r: &'a BetheRootsX) -> Self {
        RootSet::Hom(r)
    }
}

impl<'a> From<&'a InhomBetheRoots> for RootSet<'a> {
    fn from(r: &'a InhomBetheRoots) -> Self {
        RootSet::Inhom(r)
    }
}

impl RootSet<'_> {
    /// Roots in the `x` parametrization `λ = (η/2)(i x − 1)`.
    fn x_and_eta(&self) -> (Vec<C64>, f64) {
        match self {
            RootSet::Hom(r) => (r.x.iter().map(|&x| C64::new(x, 0.0)).collect(), r.eta),
            RootSet::Inhom(r) => {
                let i = C64::new(0.0, 1.0);
                (r.lambda.iter().map(|&l| -i * (2.0 * l / r.eta + 1.0)).collect(), r.eta)
            }
        }
    }
}

/// Reduces the imaginary part of a logarithm into `(−π, π]`.
pub fn reduce_log(z: C64) -> C64 {
    let two_pi = 2.0 * PI;
    let mut im = z.im - two_pi * (z.im / two_pi).round();
    if im <= -PI {
        im += two_pi;
    }
    C64::new(z.re, im)
}

/// Momentum: `Σ_j [ln sin(η/2)(x_j−i) − ln sin(η/2)(x_j+i)]`, principal
/// branch, reported modulo `2πi`. H2:
/// `2i sinh²η Σ_j [cot²(η/2)(x_j−i) − cot²(η/2)(x_j+i)]`.
pub fn charge_from_roots<'a>(order: ChargeOrder, roots: impl Into<RootSet<'a>>) -> Result<C64> {
    let (xs, eta) = roots.into().x_and_eta();
    let i = C64::new(0.0, 1.0);
    let half = eta / 2.0;
    let mut total = C64::new(0.0, 0.0);
    for x in xs {
        let lo = (half * (x - i)).sin();
        let hi = (half * (x + i)).sin();
        if lo.norm() < 1e-14 || hi.norm() < 1e-14 {
            return Err(Error::Singularity(format!("{order:?} charge at x = {x}")));
        }
        total += match order {
            ChargeOrder::Momentum => lo.ln() - hi.ln(),
            ChargeOrder::H2 => {
                let cot_lo = (half * (x - i)).cos() / lo;
                let cot_hi = (half * (x + i)).cos() / hi;
                cot_lo * cot_lo - cot_hi * cot_hi
            }
        };
    }
    Ok(match order {
        ChargeOrder::Momentum => reduce_log(total),
        ChargeOrder::H2 => 2.0 * i * eta.sinh().powi(2) * total,
    })
}

/// Exact ground-state data of the twisted chain from ED, on the ground
/// state that is a common eigenvector of the transfer matrices (the member
/// of the doublet with `Λ(0) = i` for even `N`, `Λ(0) = 1` for odd `N`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundCharges {
    pub energy: f64,
    /// `ln Λ(0)`, reduced modulo `2πi`.
    pub momentum: C64,
    /// `⟨H⁽²⁾⟩`.
    pub h2: C64,
}

pub fn exact_ground_charges(n: usize, eta: f64, ed: &EdSettings) -> Result<GroundCharges> {
    let params = ModelParams::new(n, eta, Boundary::Antiperiodic)?;
    let (psi, energy) = ground_transfer_eigenvector(&params, ed)?;
    let t0 = build_momentum_charge(&params)?;
    let lam0 = dot(&psi, &t0.apply(&psi));
    let h2 = if n >= 3 {
        let op = build_h2_charge(&params)?;
        dot(&psi, &op.apply(&psi))
    } else {
        C64::new(0.0, 0.0)
    };
    Ok(GroundCharges {
        energy,
        momentum: reduce_log(lam0.ln()),
        h2,
    })
}

/// `X_hom − X_exact` for all three observables at the twisted-chain
/// ground state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InhomContributions {
    pub energy: f64,
    pub momentum: C64,
    pub h2: C64,
}

/// The homogeneous values come from the ground quantum numbers, the exact
/// ones from ED. For the momentum the exact value is the doublet member
/// nearest to the homogeneous one; differences are reduced modulo `2πi`.
pub fn inhom_contributions(
    n: usize,
    eta: f64,
    settings: &SolverSettings,
    ed: &EdSettings,
) -> Result<InhomContributions> {
    let (roots, e_hom) = ground_state_hom(n, eta, Boundary::Antiperiodic, settings)?;
    let exact = exact_ground_charges(n, eta, ed)?;
    let hom = charge_from_roots(ChargeOrder::Momentum, &roots)?;
    // the doublet carries {±iπ/2} (even N) or {0, iπ} (odd N)
    let members = if n % 2 == 0 {
        [C64::new(0.0, PI / 2.0), C64::new(0.0, -PI / 2.0)]
    } else {
        [C64::new(0.0, 0.0), C64::new(0.0, PI)]
    };
    let momentum = members
        .iter()
        .map(|&m| reduce_log(hom - m))
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("two members");
    Ok(InhomContributions {
        energy: e_hom - exact.energy,
        momentum,
        h2: charge_from_roots(ChargeOrder::H2, &roots)? - exact.h2,
    })
}

/// One observable of [`inhom_contributions`].
pub fn inhom_contribution(
    n: usize,
    eta: f64,
    observable: Observable,
    settings: &SolverSettings,
    ed: &EdSettings,
) -> Result<C64> {
    let all = inhom_contributions(n, eta, settings, ed)?;
    Ok(match observable {
        Observable::Energy => C64::new(all.energy, 0.0),
        Observable::Momentum => all.momentum,
        Observable::ChargeH2 => all.h2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baes::{ground_quantum_numbers, solve_log_baes};

    #[test]
    fn reduce_log_window() {
        assert!((reduce_log(C64::new(0.0, 3.0 * PI)).im - PI).abs() < 1e-12);
        assert!((reduce_log(C64::new(0.0, -PI)).im - PI).abs() < 1e-12);
        assert!((reduce_log(C64::new(0.0, 0.5)).im - 0.5).abs() < 1e-15);
    }

    #[test]
    fn odd_chain_symmetric_roots_have_trivial_charges() {
        for n in [5usize, 7, 9, 11] {
            let qn = ground_quantum_numbers(n, Boundary::Antiperiodic).unwrap();
            let roots = solve_log_baes(2.0, &qn, &SolverSettings::default()).unwrap();
            let p = charge_from_roots(ChargeOrder::Momentum, &roots).unwrap();
            let m = qn.m();
            // a root at x = 0 (odd M) contributes ln(−1) = iπ
            let expected = if m % 2 == 1 { PI } else { 0.0 };
            assert!(p.re.abs() < 1e-12);
            assert!(reduce_log(p - C64::new(0.0, expected)).norm() < 1e-12, "N={n}: {p}");
            let h2 = charge_from_roots(ChargeOrder::H2, &roots).unwrap();
            assert!(h2.norm() < 1e-10, "N={n}: {h2}");
        }
    }

    #[test]
    fn singular_root_is_rejected() {
        // x = i is not real, but a hand-built inhomogeneous set can hit it
        let eta = 1.0;
        let r = InhomBetheRoots {
            lambda: vec![C64::new(-eta, 0.0)],
            sum_scalar: C64::new(1.0, 0.0),
            residual: 0.0,
            fit_residual: 0.0,
            eta,
            n: 1,
        };
        assert!(charge_from_roots(ChargeOrder::Momentum, &r).is_err());
    }
}
