use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use twistbethe_core::baes::inhom::{ground_transfer_eigenvector, INHOM_MAX_SITES};
use twistbethe_core::baes::{energy_inhom, solve_inhom_baes, InhomTarget, SolverSettings};
use twistbethe_core::ed::EdSettings;
use twistbethe_core::model::{Boundary, ModelParams};

fn distance_mod_i_pi(a: C64, b: C64) -> f64 {
    let d = a - b;
    d.re.abs() + (d.im - PI * (d.im / PI).round()).abs()
}

#[test]
fn ground_state_matches_ed_up_to_max_sites() {
    let s = SolverSettings::default();
    let ed = EdSettings::default();
    for eta in [0.5, 2.0, 3.0] {
        for n in 2..=INHOM_MAX_SITES {
            let params = ModelParams::new(n, eta, Boundary::Antiperiodic).unwrap();
            let roots = solve_inhom_baes(&params, InhomTarget::GroundState, &s)
                .unwrap_or_else(|e| panic!("eta {eta}, N {n}: {e}"));
            let (_, e_ed) = ground_transfer_eigenvector(&params, &ed).unwrap();
            let e = energy_inhom(&roots).unwrap();
            assert!((e - e_ed).abs() < 1e-10 * e_ed.abs(), "eta {eta}, N {n}: {e} vs {e_ed}");
            assert!(roots.residual < 1e-9);
        }
    }
}

#[test]
fn root_set_is_mirror_symmetric() {
    let s = SolverSettings::default();
    for (eta, n) in [(2.0, 9), (2.0, 12), (1.0, 7)] {
        let params = ModelParams::new(n, eta, Boundary::Antiperiodic).unwrap();
        let roots = solve_inhom_baes(&params, InhomTarget::GroundState, &s).unwrap();
        for &l in &roots.lambda {
            let mirror = C64::new(-eta, 0.0) - l.conj();
            let nearest = roots
                .lambda
                .iter()
                .map(|&m| distance_mod_i_pi(mirror, m))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-8, "eta {eta}, N {n}: no partner for {l}");
        }
    }
}
