//! Exact diagonalization.
//!
//! Hermitian operators on small chains go through a dense eigensolver. Larger
//! chains use a restarted Lanczos iteration with full reorthogonalization:
//! each converged Ritz pair is locked and the next search runs in the
//! orthogonal complement of everything locked so far, which resolves
//! degenerate levels one vector at a time.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, normalize, orthogonalize};
use crate::model::LinearOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverMethod {
    Dense,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdSettings {
    /// Chains up to this length are diagonalized densely.
    pub dense_max_sites: usize,
    /// Hard limit for the iterative solver.
    pub iterative_max_sites: usize,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Residual tolerance `‖Hx − θx‖ ≤ tol · max(1, |θ|)`.
    pub tol: f64,
    /// Absolute tolerance for grouping eigenvalues into levels.
    pub cluster_tol: f64,
    pub seed: u64,
}

impl Default for EdSettings {
    fn default() -> Self {
        EdSettings {
            dense_max_sites: 10,
            iterative_max_sites: 20,
            krylov_dim: 48,
            max_restarts: 400,
            tol: 1e-10,
            cluster_tol: 1e-8,
            seed: 0x5eed,
        }
    }
}

impl EdSettings {
    pub fn iterative_only(mut self) -> Self {
        self.dense_max_sites = 0;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub value: C64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Ascending by real part.
    pub eigenvalues: Vec<C64>,
    pub levels: Vec<Level>,
    pub method: SolverMethod,
    /// Final residual norms (iterative solver only).
    pub residuals: Vec<f64>,
}

/// Lowest eigenpairs of a Hermitian operator; vectors are orthonormal.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub method: SolverMethod,
    pub residuals: Vec<f64>,
}

/// Groups ascending eigenvalues whose consecutive distance is below `tol`.
pub fn cluster_levels(values: &[C64], tol: f64) -> Vec<Level> {
    let mut levels: Vec<Level> = Vec::new();
    for &v in values {
        match levels.last_mut() {
            Some(last) if (v - last.value).norm() <= tol => last.multiplicity += 1,
            _ => levels.push(Level {
                value: v,
                multiplicity: 1,
            }),
        }
    }
    levels
}

/// `count` lowest eigenvalues (Hermitian input) or the full spectrum
/// truncated to `count` (non-Hermitian input, dense only).
pub fn ed_spectrum(op: &LinearOperator, count: usize, settings: &EdSettings) -> Result<SpectrumResult> {
    if count == 0 || count > op.dim() {
        return Err(Error::InvalidParams(format!(
            "requested {count} eigenvalues of a {}-dimensional operator",
            op.dim()
        )));
    }
    if op.is_hermitian() {
        let pairs = lowest_eigenpairs(op, count, settings)?;
        let eigenvalues: Vec<C64> = pairs.values.iter().map(|&v| C64::new(v, 0.0)).collect();
        Ok(SpectrumResult {
            levels: cluster_levels(&eigenvalues, settings.cluster_tol),
            eigenvalues,
            method: pairs.method,
            residuals: pairs.residuals,
        })
    } else {
        let mut all = general_spectrum(op, settings)?;
        all.truncate(count);
        Ok(SpectrumResult {
            levels: cluster_levels(&all, settings.cluster_tol),
            eigenvalues: all,
            method: SolverMethod::Dense,
            residuals: Vec::new(),
        })
    }
}

/// Full spectrum of a general (e.g. unitary) operator via complex Schur
/// decomposition, sorted by real part then imaginary part.
pub fn general_spectrum(op: &LinearOperator, settings: &EdSettings) -> Result<Vec<C64>> {
    if op.n_sites() > settings.dense_max_sites.max(10) {
        return Err(Error::Unsupported(format!(
            "dense general eigensolver limited to N <= {}",
            settings.dense_max_sites.max(10)
        )));
    }
    let m = op.to_dense()?;
    let mut vals: Vec<C64> = m
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Unsupported("Schur decomposition failed".into()))?
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(vals)
}

pub fn lowest_eigenpairs(op: &LinearOperator, count: usize, settings: &EdSettings) -> Result<EigenPairs> {
    if !op.is_hermitian() {
        return Err(Error::Unsupported("Hermitian operator".into()));
    }
    if count == 0 || count > op.dim() {
        return Err(Error::InvalidParams(format!(
            "requested {count} eigenpairs of a {}-dimensional operator",
            op.dim()
        )));
    }
    if op.n_sites() <= settings.dense_max_sites {
        dense_lowest(op, count)
    } else if op.n_sites() <= settings.iterative_max_sites {
        lanczos_lowest(op, count, settings)
    } else {
        Err(Error::Unsupported(format!(
            "N <= {} for exact diagonalization (got {})",
            settings.iterative_max_sites,
            op.n_sites()
        )))
    }
}

fn dense_lowest(op: &LinearOperator, count: usize) -> Result<EigenPairs> {
    let m = op.to_dense()?;
    let (values, vectors): (Vec<f64>, Vec<Vec<C64>>) = if op.is_real() {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        let order = ascending(eig.eigenvalues.as_slice());
        order
            .into_iter()
            .take(count)
            .map(|i| {
                let v = eig.eigenvectors.column(i).iter().map(|&x| C64::new(x, 0.0)).collect();
                (eig.eigenvalues[i], v)
            })
            .unzip()
    } else {
        let eig = SymmetricEigen::new(m);
        let order = ascending(eig.eigenvalues.as_slice());
        order
            .into_iter()
            .take(count)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
            .unzip()
    };
    Ok(EigenPairs {
        residuals: vec![0.0; values.len()],
        values,
        vectors,
        method: SolverMethod::Dense,
    })
}

fn ascending(vals: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    idx
}

fn lanczos_lowest(op: &LinearOperator, count: usize, settings: &EdSettings) -> Result<EigenPairs> {
    let dim = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut locked: Vec<Vec<C64>> = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);

    while locked.len() < count {
        let mut start: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        orthogonalize(&mut start, &locked);
        normalize(&mut start);

        let mut history = Vec::new();
        let mut converged = None;
        for _ in 0..settings.max_restarts {
            let (theta, x) = lanczos_cycle(op, &start, &locked, settings.krylov_dim);
            let hx = op.apply(&x);
            let mut r = hx.clone();
            axpy(C64::new(-theta, 0.0), &x, &mut r);
            let res = norm(&r);
            history.push(res);
            if res <= settings.tol * theta.abs().max(1.0) {
                converged = Some((theta, x, res));
                break;
            }
            start = x;
        }
        match converged {
            Some((theta, x, res)) => {
                values.push(theta);
                residuals.push(res);
                locked.push(x);
            }
            None => {
                let tail = history.len().saturating_sub(5);
                return Err(Error::EigenNonConvergence {
                    iterations: settings.max_restarts,
                    residuals: history[tail..].to_vec(),
                });
            }
        }
    }

    // Locking order is not guaranteed to be ascending across restarts.
    let order = ascending(&values);
    Ok(EigenPairs {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: order.iter().map(|&i| locked[i].clone()).collect(),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        method: SolverMethod::Iterative,
    })
}

/// One Lanczos cycle from a normalized start vector orthogonal to `locked`.
/// Returns the lowest Ritz pair of the Krylov space.
fn lanczos_cycle(op: &LinearOperator, start: &[C64], locked: &[Vec<C64>], krylov_dim: usize) -> (f64, Vec<C64>) {
    let dim = op.dim();
    let max_k = krylov_dim.min(dim - locked.len()).max(1);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_k);
    let mut alpha = Vec::with_capacity(max_k);
    let mut beta: Vec<f64> = Vec::with_capacity(max_k);
    basis.push(start.to_vec());

    let mut w = vec![C64::new(0.0, 0.0); dim];
    loop {
        let k = basis.len() - 1;
        op.apply_into(&basis[k], &mut w);
        let a = dot(&basis[k], &w).re;
        alpha.push(a);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        if basis.len() == max_k {
            break;
        }
        let b = normalize(&mut w);
        if b < 1e-13 {
            break;
        }
        beta.push(b);
        basis.push(w.clone());
    }

    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let low = ascending(eig.eigenvalues.as_slice())[0];
    let theta = eig.eigenvalues[low];
    let y = eig.eigenvectors.column(low);

    let mut x = vec![C64::new(0.0, 0.0); dim];
    for (coef, b) in y.iter().zip(&basis) {
        axpy(C64::new(*coef, 0.0), b, &mut x);
    }
    orthogonalize(&mut x, locked);
    normalize(&mut x);
    (theta, x)
}

/// `P† A P` for an operator `A` and orthonormal columns `P`.
pub fn project(op: &LinearOperator, vectors: &[Vec<C64>]) -> DMatrix<C64> {
    let k = vectors.len();
    let images: Vec<Vec<C64>> = vectors.iter().map(|v| op.apply(v)).collect();
    DMatrix::from_fn(k, k, |i, j| dot(&vectors[i], &images[j]))
}
