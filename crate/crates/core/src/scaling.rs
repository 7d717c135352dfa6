//! Finite-size scaling fits `a·N^b`, `a·e^{bN}`, each with an optional
//! additive offset `c`, and extrapolation to `N → ∞`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const OFFSET_GRID: usize = 50;
/// Grid candidates refined by Levenberg–Marquardt.
const OFFSET_SEEDS: usize = 6;
const LM_MAX_ITER: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub n: usize,
    pub value: f64,
}

impl Sample {
    pub fn new(n: usize, value: f64) -> Self {
        Sample { n, value }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.value.is_finite() {
            return Err(Error::Fit(format!(
                "invalid sample (N = {}, value = {}); need N >= 2 and a finite value",
                self.n, self.value
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    /// `a·N^b`
    Power,
    /// `a·N^b + c`
    PowerOffset,
    /// `a·e^{bN}`
    Exp,
    /// `a·e^{bN} + c`
    ExpOffset,
}

impl FitKind {
    pub fn has_offset(self) -> bool {
        matches!(self, FitKind::PowerOffset | FitKind::ExpOffset)
    }

    pub fn n_params(self) -> usize {
        if self.has_offset() {
            3
        } else {
            2
        }
    }

    fn is_power(self) -> bool {
        matches!(self, FitKind::Power | FitKind::PowerOffset)
    }

    /// The abscissa the law is linear in after taking `ln|value − c|`.
    fn abscissa(self, n: f64) -> f64 {
        if self.is_power() {
            n.ln()
        } else {
            n
        }
    }

    fn basis(self, b: f64, n: f64) -> f64 {
        if self.is_power() {
            n.powf(b)
        } else {
            (b * n).exp()
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitKind::Power => "power",
            FitKind::PowerOffset => "power-offset",
            FitKind::Exp => "exp",
            FitKind::ExpOffset => "exp-offset",
        }
    }
}

impl fmt::Display for FitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "power" => Ok(FitKind::Power),
            "power-offset" => Ok(FitKind::PowerOffset),
            "exp" => Ok(FitKind::Exp),
            "exp-offset" => Ok(FitKind::ExpOffset),
            other => Err(Error::Fit(format!("unknown fit kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    pub a: f64,
    pub b: f64,
    /// `None` for the kinds without offset.
    pub c: Option<f64>,
    pub rms_residual: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn eval(&self, n: f64) -> f64 {
        self.a * self.kind.basis(self.b, n) + self.c.unwrap_or(0.0)
    }

    fn params(&self) -> Vec<f64> {
        let mut p = vec![self.a, self.b];
        p.extend(self.c);
        p
    }

    fn from_params(kind: FitKind, p: &[f64], samples: &[Sample]) -> Self {
        let mut r = FitResult {
            kind,
            a: p[0],
            b: p[1],
            c: kind.has_offset().then(|| p[2]),
            rms_residual: 0.0,
            n_points: samples.len(),
        };
        r.rms_residual = rms(&r, samples);
        r
    }
}

/// Root-mean-square residual of `fit` on `samples`.
pub fn rms(fit: &FitResult, samples: &[Sample]) -> f64 {
    let ss: f64 = samples
        .iter()
        .map(|s| (fit.eval(s.n as f64) - s.value).powi(2))
        .sum();
    (ss / samples.len() as f64).sqrt()
}

/// Least-squares fit of `kind` to `samples`.
///
/// Kinds without offset use exact linear regression of `ln|value|`; offset
/// kinds are seeded from a grid over `c` and refined by Levenberg–Marquardt.
pub fn fit(kind: FitKind, samples: &[Sample]) -> Result<FitResult> {
    check_samples(kind, samples)?;
    if !kind.has_offset() {
        let (a, b) = log_linear(kind, samples, 0.0)?;
        return Ok(FitResult::from_params(kind, &[a, b], samples));
    }
    let lo = samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
    let range = (hi - lo).max(f64::EPSILON * hi.abs().max(1.0));
    let mut seeds: Vec<FitResult> = (0..OFFSET_GRID)
        .filter_map(|i| {
            let c = lo - range + 3.0 * range * i as f64 / (OFFSET_GRID - 1) as f64;
            let (a, b) = log_linear(kind, samples, c).ok()?;
            let r = FitResult::from_params(kind, &[a, b, c], samples);
            r.rms_residual.is_finite().then_some(r)
        })
        .collect();
    if seeds.is_empty() {
        return Err(Error::Fit("no offset candidate gives a one-signed remainder".into()));
    }
    seeds.sort_by(|x, y| x.rms_residual.total_cmp(&y.rms_residual));
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for seed in seeds.iter().take(OFFSET_SEEDS) {
        match levenberg_marquardt(kind, samples, &seed.params()) {
            Ok(r) => {
                if best.as_ref().map_or(true, |b| r.rms_residual < b.rms_residual) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one seed was tried"))
}

/// Refines any fit by Levenberg–Marquardt on all of its parameters.
pub fn refine(start: &FitResult, samples: &[Sample]) -> Result<FitResult> {
    check_samples(start.kind, samples)?;
    levenberg_marquardt(start.kind, samples, &start.params())
}

/// Fits after excluding the smallest-`N` points while their residual
/// exceeds three times the rms, keeping at least `n_params + 2` points.
pub fn fit_windowed(kind: FitKind, samples: &[Sample]) -> Result<FitResult> {
    let mut window: Vec<Sample> = samples.to_vec();
    window.sort_by_key(|s| s.n);
    let mut result = fit(kind, &window)?;
    while window.len() > kind.n_params() + 2 {
        let first = window[0];
        let resid = (result.eval(first.n as f64) - first.value).abs();
        if resid <= 3.0 * result.rms_residual {
            break;
        }
        window.remove(0);
        result = fit(kind, &window)?;
    }
    Ok(result)
}

/// `N → ∞` limit: `c` for offset kinds, `0` otherwise.
pub fn extrapolate(fit: &FitResult) -> Result<f64> {
    if !(fit.b < 0.0) {
        return Err(Error::Fit(format!("exponent b = {} >= 0 has no asymptote", fit.b)));
    }
    Ok(fit.c.unwrap_or(0.0))
}

fn check_samples(kind: FitKind, samples: &[Sample]) -> Result<()> {
    for s in samples {
        s.validate()?;
    }
    if samples.len() < kind.n_params() + 1 {
        return Err(Error::Fit(format!(
            "{kind} fit needs at least {} points, got {}",
            kind.n_params() + 1,
            samples.len()
        )));
    }
    Ok(())
}

/// Regression of `ln|value − c|` on the kind's abscissa; all remainders
/// must share one sign.
fn log_linear(kind: FitKind, samples: &[Sample], c: f64) -> Result<(f64, f64)> {
    let shifted: Vec<f64> = samples.iter().map(|s| s.value - c).collect();
    let sign = shifted[0].signum();
    if shifted.iter().any(|&v| v == 0.0 || v.signum() != sign) {
        return Err(Error::Fit("values change sign; log-linear fit impossible".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| kind.abscissa(s.n as f64)).collect();
    let ys: Vec<f64> = shifted.iter().map(|v| v.abs().ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all samples share one N".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = sign * (my - b * mx).exp();
    Ok((a, b))
}

fn residuals_and_jacobian(kind: FitKind, samples: &[Sample], p: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let np = p.len();
    let mut r = DVector::zeros(samples.len());
    let mut jac = DMatrix::zeros(samples.len(), np);
    for (i, s) in samples.iter().enumerate() {
        let n = s.n as f64;
        let g = kind.basis(p[1], n);
        r[i] = p[0] * g + p.get(2).copied().unwrap_or(0.0) - s.value;
        jac[(i, 0)] = g;
        jac[(i, 1)] = p[0] * g * kind.abscissa(n);
        if np == 3 {
            jac[(i, 2)] = 1.0;
        }
    }
    (r, jac)
}

fn levenberg_marquardt(kind: FitKind, samples: &[Sample], start: &[f64]) -> Result<FitResult> {
    let mut p = start.to_vec();
    let (mut r, mut jac) = residuals_and_jacobian(kind, samples, &p);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    let mut converged = false;
    for _ in 0..LM_MAX_ITER {
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut lhs = jtj.clone();
        for k in 0..p.len() {
            lhs[(k, k)] += mu * jtj[(k, k)].max(1e-300);
        }
        let step = lhs.lu().solve(&(-&grad));
        let accepted = step.as_ref().and_then(|step| {
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let (tr, tj) = residuals_and_jacobian(kind, samples, &trial);
            let tc = tr.norm_squared();
            (tc.is_finite() && tc <= cost).then_some((trial, tr, tj, tc))
        });
        match accepted {
            Some((trial, tr, tj, tc)) => {
                let small_step = step
                    .as_ref()
                    .map(|s| s.iter().zip(&p).all(|(d, a)| d.abs() <= 1e-15 * a.abs().max(1e-300)))
                    .unwrap_or(false);
                let stalled = cost - tc <= 1e-30 * cost.max(1e-300);
                p = trial;
                r = tr;
                jac = tj;
                cost = tc;
                mu = (mu / 3.0).max(1e-15);
                if cost == 0.0 || (small_step && stalled) {
                    converged = true;
                    break;
                }
            }
            None => {
                mu *= 4.0;
                // no descent is possible at any damping: p is a minimum
                if mu > 1e20 {
                    converged = true;
                    break;
                }
            }
        }
        if !p.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    if !converged || !cost.is_finite() || !p.iter().all(|v| v.is_finite()) {
        return Err(Error::NewtonNonConvergence {
            iterations: LM_MAX_ITER,
            residual: cost.sqrt(),
            last_iterate: p,
        });
    }
    Ok(FitResult::from_params(kind, &p, samples))
}
