//! Self-check suite: cross-validates the solvers against exact
//! diagonalization and the thermodynamic series.

use std::fmt;
use std::time::Instant;

use twistbethe_core::baes::inhom::ground_transfer_eigenvector;
use twistbethe_core::baes::{
    energy_inhom, ground_state_hom, hole_positions, inhom_contributions, solve_inhom_baes, InhomTarget,
    SolverSettings,
};
use twistbethe_core::ed::{lowest_eigenpairs, EdSettings};
use twistbethe_core::error::Result as CoreResult;
use twistbethe_core::model::{build_hamiltonian, Boundary, ModelParams, Parity};
use twistbethe_core::thermo::{
    energy_with_holes, excitation_gap_tl, ground_energy_tl, twisted_boundary_energy, SeriesSettings,
};

const ETA: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Chains up to `N = 8`.
    Fast,
    /// ED up to `N = 18` and large-`N` Bethe-ansatz consistency.
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            _ => Err(format!("unknown verify level '{s}' (fast|full)")),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Added to the bulk energy density `e₀` wherever the series enters a
    /// check. Nonzero only to confirm the suite detects a broken series.
    pub e0_perturbation: f64,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} ({:.2} s): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub level: Level,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Maximum of `values` against `tol`, or the first solver error.
fn within(values: CoreResult<Vec<f64>>, tol: f64) -> (bool, String) {
    match values {
        Ok(v) => {
            let worst = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            (worst <= tol, format!("max deviation {worst:.2e}, tol {tol:.0e}"))
        }
        Err(e) => (false, format!("solver error: {e}")),
    }
}

fn ground_ed(n: usize, boundary: Boundary, ed: &EdSettings) -> CoreResult<f64> {
    let params = ModelParams::new(n, ETA, boundary)?;
    let h = build_hamiltonian(&params)?;
    Ok(lowest_eigenpairs(&h, 1, ed)?.values[0])
}

struct Suite {
    checks: Vec<Check>,
    s: SolverSettings,
    ss: SeriesSettings,
    ed: EdSettings,
    opts: VerifyOptions,
}

impl Suite {
    fn check(&mut self, name: &str, run: impl FnOnce(&Suite) -> (bool, String)) {
        let start = Instant::now();
        let (pass, detail) = run(self);
        self.checks.push(Check {
            name: name.to_string(),
            pass,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    fn two_site(&mut self) {
        self.check("two-site closed forms", |v| {
            let anti = ground_ed(2, Boundary::Antiperiodic, &v.ed).map(|e| e + 2.0);
            let per = ground_ed(2, Boundary::Periodic, &v.ed).map(|e| e + 4.0 + 2.0 * ETA.cosh());
            within(anti.and_then(|a| Ok(vec![a, per?])), 1e-12)
        });
    }

    fn periodic_bae_vs_ed(&mut self, max_n: usize) {
        self.check(&format!("periodic Bethe ansatz vs ED, N = 4..{max_n}"), |v| {
            within(
                (4..=max_n)
                    .map(|n| {
                        let (_, e) = ground_state_hom(n, ETA, Boundary::Periodic, &v.s)?;
                        Ok(e - ground_ed(n, Boundary::Periodic, &v.ed)?)
                    })
                    .collect(),
                1e-8,
            )
        });
    }

    fn inhom_term_signs(&mut self, max_n: usize) {
        self.check(&format!("sign of E_hom - E_ED on the twisted chain, N = 4..{max_n}"), |v| {
            let diffs: CoreResult<Vec<(usize, f64)>> = (4..=max_n)
                .map(|n| {
                    let (_, e) = ground_state_hom(n, ETA, Boundary::Antiperiodic, &v.s)?;
                    Ok((n, e - ground_ed(n, Boundary::Antiperiodic, &v.ed)?))
                })
                .collect();
            match diffs {
                Ok(d) => {
                    let bad: Vec<usize> = d
                        .iter()
                        .filter(|&&(n, e)| (n % 2 == 0) != (e > 0.0))
                        .map(|p| p.0)
                        .collect();
                    (bad.is_empty(), format!("positive for even N, negative for odd N; violations at {bad:?}"))
                }
                Err(e) => (false, format!("solver error: {e}")),
            }
        });
    }

    fn inhom_tq_vs_ed(&mut self, sizes: &[usize]) {
        self.check(&format!("inhomogeneous T-Q energy vs ED, N in {sizes:?}"), |v| {
            within(
                sizes
                    .iter()
                    .map(|&n| {
                        let params = ModelParams::new(n, ETA, Boundary::Antiperiodic)?;
                        let roots = solve_inhom_baes(&params, InhomTarget::GroundState, &v.s)?;
                        let (_, e_ed) = ground_transfer_eigenvector(&params, &v.ed)?;
                        Ok(energy_inhom(&roots)? - e_ed)
                    })
                    .collect(),
                1e-8,
            )
        });
    }

    fn odd_charges(&mut self, sizes: &[usize]) {
        self.check(&format!("odd-N inhomogeneous charge terms vanish, N in {sizes:?}"), |v| {
            within(
                sizes
                    .iter()
                    .map(|&n| {
                        let c = inhom_contributions(n, ETA, &v.s, &v.ed)?;
                        Ok(c.momentum.norm().max(c.h2.norm()))
                    })
                    .collect(),
                1e-10,
            )
        });
    }

    fn series_values(&mut self) {
        self.check("thermodynamic reference values at eta = 2, 3", |v| {
            let values: CoreResult<Vec<f64>> = [(2.0f64, 1.02746, 2.05492), (3.0, 1.61356, 3.22712)]
                .iter()
                .map(|&(eta, eb, gap)| {
                    let ch = eta.cosh();
                    Ok([
                        twisted_boundary_energy(eta, Parity::Even, &v.ss)? / ch - eb,
                        excitation_gap_tl(eta, Parity::Odd, &v.ss)? / ch - gap,
                    ])
                })
                .collect::<CoreResult<Vec<_>>>()
                .map(|v| v.concat());
            within(values, 1e-5)
        });
        self.check("parity reversal of the boundary energy", |v| {
            within(
                [10usize, 11]
                    .iter()
                    .map(|&n| {
                        let d = ground_energy_tl(n, ETA, Boundary::Antiperiodic, &v.ss)?
                            - ground_energy_tl(n, ETA, Boundary::Periodic, &v.ss)?;
                        let eb = twisted_boundary_energy(ETA, Parity::of(n), &v.ss)?;
                        Ok(d - eb)
                    })
                    .collect(),
                1e-12,
            )
        });
    }

    /// `E_hom` against `e₀N + Σ e_h(x_h)` at the located hole positions.
    fn large_n_consistency(&mut self, sizes: &[usize]) {
        self.check(&format!("Bethe ansatz vs thermodynamic series, N in {sizes:?}"), |v| {
            let mut deviations = Vec::new();
            for &n in sizes {
                for b in [Boundary::Antiperiodic, Boundary::Periodic] {
                    let d = ground_state_hom(n, ETA, b, &v.s).and_then(|(roots, e)| {
                        let holes = hole_positions(&roots);
                        let series = energy_with_holes(n, ETA, &holes, &v.ss)? + v.opts.e0_perturbation * n as f64;
                        Ok(e - series)
                    });
                    deviations.push(d);
                }
            }
            within(deviations.into_iter().collect(), 1e-9)
        });
    }

    fn dense_vs_iterative(&mut self) {
        self.check("dense vs iterative ED, N = 8, 10", |v| {
            within(
                [8usize, 10]
                    .iter()
                    .map(|&n| {
                        let dense = ground_ed(n, Boundary::Antiperiodic, &v.ed)?;
                        let iterative = ground_ed(n, Boundary::Antiperiodic, &v.ed.clone().iterative_only())?;
                        Ok(dense - iterative)
                    })
                    .collect(),
                1e-9,
            )
        });
    }
}

pub fn verify(level: Level, opts: &VerifyOptions) -> VerifyReport {
    let mut suite = Suite {
        checks: Vec::new(),
        s: SolverSettings::default(),
        ss: SeriesSettings::default(),
        ed: EdSettings::default(),
        opts: opts.clone(),
    };
    suite.two_site();
    suite.series_values();
    match level {
        Level::Fast => {
            suite.periodic_bae_vs_ed(8);
            suite.inhom_term_signs(8);
            suite.inhom_tq_vs_ed(&[4, 6, 8]);
            suite.odd_charges(&[5, 7]);
            suite.large_n_consistency(&[100, 101]);
        }
        Level::Full => {
            suite.periodic_bae_vs_ed(14);
            suite.inhom_term_signs(18);
            suite.inhom_tq_vs_ed(&[4, 6, 8, 10, 12]);
            suite.odd_charges(&[5, 7, 9, 11]);
            suite.dense_vs_iterative();
            suite.large_n_consistency(&[200, 201]);
        }
    }
    VerifyReport {
        level,
        checks: suite.checks,
    }
}
