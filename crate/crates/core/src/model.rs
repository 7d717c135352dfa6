//! Spin-chain operators on the `2^N`-dimensional state space.
//!
//! Basis states are bit strings: bit `j` set means site `j` (0-based) is
//! spin down, so `σᶻ_j = (-1)^{bit_j}` and the all-zero state is the
//! ferromagnetic reference state. Local Hamiltonians and charges are stored
//! as sums of Pauli strings and applied matrix-free with bit operations. The
//! transfer matrix is applied by sweeping a two-component auxiliary state
//! through the chain of R-matrices, one site at a time.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain handled by any operator builder (`2^24` amplitudes).
pub const MAX_SITES: usize = 24;

/// Largest chain for which [`LinearOperator::to_dense`] is allowed.
pub const DENSE_MATRIX_MAX_SITES: usize = 12;

/// Vectors at least this long are applied in parallel.
const PAR_THRESHOLD: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    /// `σ^α_{N+1} = σˣ_1 σ^α_1 σˣ_1`
    Antiperiodic,
    /// `σ^α_{N+1} = σ^α_1`
    Periodic,
}

impl Boundary {
    pub fn short_name(self) -> &'static str {
        match self {
            Boundary::Antiperiodic => "anti",
            Boundary::Periodic => "per",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "anti" | "antiperiodic" | "twisted" => Ok(Boundary::Antiperiodic),
            "per" | "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidParams(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Chain length, anisotropy `Δ = cosh η`, boundary kind and inhomogeneities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub eta: f64,
    pub boundary: Boundary,
    pub theta: Vec<f64>,
}

impl ModelParams {
    /// Homogeneous chain (`θ_j = 0`).
    pub fn new(n: usize, eta: f64, boundary: Boundary) -> Result<Self> {
        let p = ModelParams {
            n,
            eta,
            boundary,
            theta: vec![0.0; n],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_theta(mut self, theta: Vec<f64>) -> Result<Self> {
        self.theta = theta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "eta must be finite and > 0, got {}",
                self.eta
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "chain length must be >= 2, got {}",
                self.n
            )));
        }
        if self.n > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "chain length {} exceeds {MAX_SITES}",
                self.n
            )));
        }
        if self.theta.len() != self.n {
            return Err(Error::InvalidParams(format!(
                "expected {} inhomogeneities, got {}",
                self.n,
                self.theta.len()
            )));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParams("non-finite inhomogeneity".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn is_homogeneous(&self) -> bool {
        self.theta.iter().all(|&t| t == 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// One weighted product of Pauli matrices on distinct sites.
#[derive(Clone, Debug)]
struct PauliTerm {
    flip: usize,
    sign_mask: usize,
    /// coefficient times `i^{#Y}`
    weight: C64,
    odd_y: bool,
}

impl PauliTerm {
    fn new(coeff: C64, ops: &[(usize, Pauli)]) -> Self {
        let mut flip = 0usize;
        let mut sign_mask = 0usize;
        let mut n_y = 0;
        for &(site, p) in ops {
            let bit = 1usize << site;
            assert!(
                (flip | sign_mask) & bit == 0,
                "Pauli string acts twice on site {site}"
            );
            match p {
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign_mask |= bit;
                    n_y += 1;
                }
                Pauli::Z => sign_mask |= bit,
            }
        }
        let i_pow = match n_y % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        PauliTerm {
            flip,
            sign_mask,
            weight: coeff * i_pow,
            odd_y: n_y % 2 == 1,
        }
    }

    #[inline]
    fn amplitude(&self, source: usize) -> C64 {
        if (source & self.sign_mask).count_ones() % 2 == 0 {
            self.weight
        } else {
            -self.weight
        }
    }
}

/// Sum of Pauli strings on `n` sites.
#[derive(Clone, Debug)]
pub struct PauliSum {
    n_sites: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(n_sites: usize) -> Self {
        PauliSum {
            n_sites,
            terms: Vec::new(),
        }
    }

    pub fn add(&mut self, coeff: f64, ops: &[(usize, Pauli)]) {
        self.add_complex(C64::new(coeff, 0.0), ops);
    }

    pub fn add_complex(&mut self, coeff: C64, ops: &[(usize, Pauli)]) {
        assert!(ops.iter().all(|&(s, _)| s < self.n_sites));
        self.terms.push(PauliTerm::new(coeff, ops));
    }

    fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.weight.im == 0.0)
    }

    #[inline]
    fn gather(&self, v: &[C64], target: usize) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                let source = target ^ t.flip;
                t.amplitude(source) * v[source]
            })
            .sum()
    }
}

#[derive(Clone, Debug)]
enum Action {
    Pauli(PauliSum),
    /// `out[perm[s]] = v[s]`
    Permutation(Vec<usize>),
    Transfer { u: C64, params: ModelParams },
    Dense(DMatrix<C64>),
}

/// A linear map on the `2^N`-dimensional spin state space. Immutable after
/// construction and `Sync`.
#[derive(Clone, Debug)]
pub struct LinearOperator {
    n_sites: usize,
    hermitian: bool,
    action: Action,
}

impl LinearOperator {
    pub fn from_pauli_sum(sum: PauliSum, hermitian: bool) -> Self {
        LinearOperator {
            n_sites: sum.n_sites,
            hermitian,
            action: Action::Pauli(sum),
        }
    }

    pub fn from_dense(n_sites: usize, m: DMatrix<C64>, hermitian: bool) -> Self {
        assert_eq!(m.nrows(), 1 << n_sites);
        assert_eq!(m.ncols(), 1 << n_sites);
        LinearOperator {
            n_sites,
            hermitian,
            action: Action::Dense(m),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// True when the matrix has only real entries in the spin basis.
    pub fn is_real(&self) -> bool {
        match &self.action {
            Action::Pauli(p) => p.is_real(),
            Action::Permutation(_) => true,
            Action::Transfer { u, .. } => u.im == 0.0,
            Action::Dense(m) => m.iter().all(|z| z.im == 0.0),
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        let dim = self.dim();
        assert_eq!(v.len(), dim, "vector length does not match operator");
        assert_eq!(out.len(), dim, "output length does not match operator");
        match &self.action {
            Action::Pauli(sum) => {
                if dim >= PAR_THRESHOLD {
                    out.par_iter_mut()
                        .enumerate()
                        .for_each(|(t, o)| *o = sum.gather(v, t));
                } else {
                    for (t, o) in out.iter_mut().enumerate() {
                        *o = sum.gather(v, t);
                    }
                }
            }
            Action::Permutation(perm) => {
                for (s, &p) in perm.iter().enumerate() {
                    out[p] = v[s];
                }
            }
            Action::Transfer { u, params } => transfer_apply(*u, params, v, out),
            Action::Dense(m) => {
                for (r, o) in out.iter_mut().enumerate() {
                    *o = m.row(r).iter().zip(v).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// Hermitian conjugate, as an operator of the same representation
    /// where possible.
    pub fn adjoint(&self) -> Result<LinearOperator> {
        let action = match &self.action {
            Action::Pauli(sum) => {
                let mut sum = sum.clone();
                // Pauli strings are Hermitian; only the coefficient conjugates,
                // and conj(i^{#Y}) = (-1)^{#Y} i^{#Y}.
                for t in &mut sum.terms {
                    t.weight = if t.odd_y { -t.weight.conj() } else { t.weight.conj() };
                }
                Action::Pauli(sum)
            }
            Action::Permutation(perm) => {
                let mut inv = vec![0usize; perm.len()];
                for (s, &p) in perm.iter().enumerate() {
                    inv[p] = s;
                }
                Action::Permutation(inv)
            }
            Action::Transfer { .. } => Action::Dense(self.to_dense()?.adjoint()),
            Action::Dense(m) => Action::Dense(m.adjoint()),
        };
        Ok(LinearOperator {
            n_sites: self.n_sites,
            hermitian: self.hermitian,
            action,
        })
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        if self.n_sites > DENSE_MATRIX_MAX_SITES {
            return Err(Error::Unsupported(format!(
                "a dense matrix needs N <= {DENSE_MATRIX_MAX_SITES} (got {})",
                self.n_sites
            )));
        }
        let dim = self.dim();
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        match &self.action {
            Action::Pauli(sum) => {
                for t in &sum.terms {
                    for s in 0..dim {
                        m[(s ^ t.flip, s)] += t.amplitude(s);
                    }
                }
            }
            Action::Dense(d) => m.copy_from(d),
            _ => {
                let mut e = vec![C64::new(0.0, 0.0); dim];
                let mut col = vec![C64::new(0.0, 0.0); dim];
                for c in 0..dim {
                    e[c] = C64::new(1.0, 0.0);
                    self.apply_into(&e, &mut col);
                    m.column_mut(c).copy_from_slice(&col);
                    e[c] = C64::new(0.0, 0.0);
                }
            }
        }
        Ok(m)
    }
}

fn bond_terms(sum: &mut PauliSum, i: usize, j: usize, delta: f64, twisted: bool) {
    // σˣ σ^α σˣ flips the sign of σʸ and σᶻ on the wrapped site.
    let s = if twisted { -1.0 } else { 1.0 };
    sum.add(1.0, &[(i, Pauli::X), (j, Pauli::X)]);
    sum.add(s, &[(i, Pauli::Y), (j, Pauli::Y)]);
    sum.add(s * delta, &[(i, Pauli::Z), (j, Pauli::Z)]);
}

/// `H = Σ_j [σˣ_jσˣ_{j+1} + σʸ_jσʸ_{j+1} + cosh η σᶻ_jσᶻ_{j+1}]` with the
/// boundary closure of `params.boundary`.
pub fn build_hamiltonian(params: &ModelParams) -> Result<LinearOperator> {
    params.validate()?;
    let n = params.n;
    let delta = params.eta.cosh();
    let mut sum = PauliSum::new(n);
    for j in 0..n - 1 {
        bond_terms(&mut sum, j, j + 1, delta, false);
    }
    let twisted = params.boundary == Boundary::Antiperiodic;
    bond_terms(&mut sum, n - 1, 0, delta, twisted);
    Ok(LinearOperator::from_pauli_sum(sum, true))
}

/// `t(0) = σˣ_1 P_{1,N} ⋯ P_{1,2}` for the homogeneous twisted chain. The
/// returned operator is unitary; its eigenvalue logarithms are the momenta.
pub fn build_momentum_charge(params: &ModelParams) -> Result<LinearOperator> {
    params.validate()?;
    if params.boundary != Boundary::Antiperiodic {
        return Err(Error::Unsupported(
            "the momentum charge is defined for the antiperiodic chain".into(),
        ));
    }
    if !params.is_homogeneous() {
        return Err(Error::Unsupported(
            "the momentum charge is defined at theta = 0".into(),
        ));
    }
    let n = params.n;
    let perm = (0..params.dim())
        .map(|s| {
            // P_{1,2} acts first, P_{1,N} last, then σˣ_1.
            let mut t = s;
            for k in 1..n {
                let b0 = t & 1;
                let bk = (t >> k) & 1;
                if b0 != bk {
                    t ^= 1 | (1 << k);
                }
            }
            t ^ 1
        })
        .collect();
    Ok(LinearOperator {
        n_sites: n,
        hermitian: false,
        action: Action::Permutation(perm),
    })
}

/// Second logarithmic derivative charge: the six three-site terms with
/// `σ^α_{N+k} = σˣ_k σ^α_k σˣ_k` for `k = 1, 2`.
pub fn build_h2_charge(params: &ModelParams) -> Result<LinearOperator> {
    params.validate()?;
    if params.boundary != Boundary::Antiperiodic {
        return Err(Error::Unsupported(
            "the H2 charge is built for the antiperiodic chain".into(),
        ));
    }
    let n = params.n;
    if n < 3 {
        return Err(Error::InvalidParams(format!(
            "H2 needs N >= 3, got {n}"
        )));
    }
    use Pauli::{X, Y, Z};
    let ch = params.eta.cosh();
    let pattern: [(f64, [Pauli; 3]); 6] = [
        (-ch, [X, Y, Z]),
        (ch, [Y, X, Z]),
        (-1.0, [Y, Z, X]),
        (ch, [Z, Y, X]),
        (-ch, [Z, X, Y]),
        (1.0, [X, Z, Y]),
    ];
    let mut sum = PauliSum::new(n);
    for j in 0..n {
        for (coeff, paulis) in &pattern {
            let mut c = *coeff;
            let mut ops = [(0usize, X); 3];
            for (offset, &p) in paulis.iter().enumerate() {
                let raw = j + offset;
                let site = raw % n;
                if raw >= n && p != X {
                    c = -c;
                }
                ops[offset] = (site, p);
            }
            sum.add(c, &ops);
        }
    }
    Ok(LinearOperator::from_pauli_sum(sum, true))
}

/// Global spin flip `Π_j σˣ_j`.
pub fn spin_flip(n: usize) -> LinearOperator {
    let mut sum = PauliSum::new(n);
    let ops: Vec<_> = (0..n).map(|j| (j, Pauli::X)).collect();
    sum.add(1.0, &ops);
    LinearOperator::from_pauli_sum(sum, true)
}

/// Transfer matrix `t(u) = tr_0 [σˣ_0 R_{0,N}(u-θ_N) ⋯ R_{0,1}(u-θ_1)]`;
/// the `σˣ_0` twist is dropped for the periodic chain.
pub fn transfer_matrix(u: C64, params: &ModelParams) -> Result<LinearOperator> {
    params.validate()?;
    if !(u.re.is_finite() && u.im.is_finite()) {
        return Err(Error::InvalidParams("spectral parameter must be finite".into()));
    }
    Ok(LinearOperator {
        n_sites: params.n,
        hermitian: false,
        action: Action::Transfer {
            u,
            params: params.clone(),
        },
    })
}

fn transfer_apply(u: C64, params: &ModelParams, v: &[C64], out: &mut [C64]) {
    let dim = v.len();
    let sh_eta = params.eta.sinh();
    let twisted = params.boundary == Boundary::Antiperiodic;
    out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));

    // aux[a][s]: amplitude with auxiliary spin a (0 = up) and chain state s
    let mut aux = [vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim]];
    for start in 0..2 {
        aux[start].copy_from_slice(v);
        aux[1 - start].iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for (j, &theta) in params.theta.iter().enumerate() {
            let w = u - theta;
            let parallel = (w + params.eta).sinh() / sh_eta;
            let anti = w.sinh() / sh_eta;
            apply_r(&mut aux, j, parallel, anti);
        }
        // trace with the twist: tr[σˣ M] picks the off-diagonal aux block
        let pick = if twisted { 1 - start } else { start };
        for (o, a) in out.iter_mut().zip(&aux[pick]) {
            *o += a;
        }
    }
}

/// Applies `R_{0,j}` to the combined auxiliary ⊗ chain state.
fn apply_r(aux: &mut [Vec<C64>; 2], site: usize, parallel: C64, anti: C64) {
    let bit = 1usize << site;
    let (up, down) = aux.split_at_mut(1);
    let (up, down) = (&mut up[0], &mut down[0]);
    for s in 0..up.len() {
        if s & bit != 0 {
            continue;
        }
        // s has site j up, t = s with site j down
        let t = s | bit;
        // parallel configurations: (aux up, site up) and (aux down, site down)
        up[s] *= parallel;
        down[t] *= parallel;
        // antiparallel pair (aux up, site down) <-> (aux down, site up) mixes
        let a = up[t];
        let b = down[s];
        up[t] = anti * a + b;
        down[s] = anti * b + a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diff_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
        (0..dim)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1, 1.0, Boundary::Periodic).is_err());
        assert!(ModelParams::new(4, 0.0, Boundary::Periodic).is_err());
        assert!(ModelParams::new(4, -1.0, Boundary::Antiperiodic).is_err());
        assert!(ModelParams::new(4, f64::NAN, Boundary::Antiperiodic).is_err());
        let p = ModelParams::new(4, 1.0, Boundary::Periodic).unwrap();
        assert!(p.clone().with_theta(vec![0.1; 3]).is_err());
        assert!(p.with_theta(vec![0.1; 4]).is_ok());
    }

    #[test]
    fn pauli_y_phases() {
        let mut sum = PauliSum::new(1);
        sum.add(1.0, &[(0, Pauli::Y)]);
        let m = LinearOperator::from_pauli_sum(sum, true).to_dense().unwrap();
        // up = index 0, down = index 1
        assert_eq!(m[(1, 0)], C64::new(0.0, 1.0));
        assert_eq!(m[(0, 1)], C64::new(0.0, -1.0));
    }

    #[test]
    fn two_site_antiperiodic_reduces_to_xx() {
        let p = ModelParams::new(2, 1.3, Boundary::Antiperiodic).unwrap();
        let h = build_hamiltonian(&p).unwrap().to_dense().unwrap();
        let mut sum = PauliSum::new(2);
        sum.add(2.0, &[(0, Pauli::X), (1, Pauli::X)]);
        let xx = LinearOperator::from_pauli_sum(sum, true).to_dense().unwrap();
        assert!((h - xx).norm() < 1e-14);
    }

    #[test]
    fn matrix_free_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ModelParams::new(5, 0.7, Boundary::Antiperiodic).unwrap();
        let ops = [
            build_hamiltonian(&p).unwrap(),
            build_h2_charge(&p).unwrap(),
            build_momentum_charge(&p).unwrap(),
            transfer_matrix(C64::new(0.2, 0.4), &p).unwrap(),
        ];
        for op in &ops {
            let d = op.to_dense().unwrap();
            let v = random_vec(op.dim(), &mut rng);
            let free = op.apply(&v);
            let dense = &d * nalgebra::DVector::from_vec(v.clone());
            assert!(diff_norm(&free, dense.as_slice()) < 1e-12);
        }
    }

    #[test]
    fn hermitian_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 3..=8 {
            let p = ModelParams::new(n, 1.1, Boundary::Antiperiodic).unwrap();
            for op in [build_hamiltonian(&p).unwrap(), build_h2_charge(&p).unwrap()] {
                let adj = op.adjoint().unwrap();
                for _ in 0..5 {
                    let v = random_vec(op.dim(), &mut rng);
                    let d = diff_norm(&op.apply(&v), &adj.apply(&v));
                    assert!(d < 1e-12 * crate::linalg::norm(&v));
                }
            }
        }
    }

    #[test]
    fn momentum_charge_is_the_transfer_matrix_at_zero() {
        let p = ModelParams::new(6, 0.9, Boundary::Antiperiodic).unwrap();
        let t0 = transfer_matrix(C64::new(0.0, 0.0), &p).unwrap().to_dense().unwrap();
        let perm = build_momentum_charge(&p).unwrap().to_dense().unwrap();
        assert!((t0 - perm).norm() < 1e-12);
    }

    #[test]
    fn periodic_transfer_at_zero_is_a_shift() {
        // without the twist t(0) is the plain cyclic shift: t(0)^N = 1
        let p = ModelParams::new(5, 0.9, Boundary::Periodic).unwrap();
        let t0 = transfer_matrix(C64::new(0.0, 0.0), &p).unwrap().to_dense().unwrap();
        let mut acc = DMatrix::<C64>::identity(32, 32);
        for _ in 0..5 {
            acc = &t0 * acc;
        }
        assert!((acc - DMatrix::<C64>::identity(32, 32)).norm() < 1e-12);
    }

    #[test]
    fn charge_builders_reject_bad_input() {
        let per = ModelParams::new(4, 1.0, Boundary::Periodic).unwrap();
        assert!(build_momentum_charge(&per).is_err());
        assert!(build_h2_charge(&per).is_err());
        let short = ModelParams::new(2, 1.0, Boundary::Antiperiodic).unwrap();
        assert!(matches!(build_h2_charge(&short), Err(Error::InvalidParams(_))));
        let inhom = ModelParams::new(4, 1.0, Boundary::Antiperiodic)
            .unwrap()
            .with_theta(vec![0.1, 0.0, 0.0, 0.0])
            .unwrap();
        assert!(build_momentum_charge(&inhom).is_err());
    }

    #[test]
    fn dense_guard() {
        let p = ModelParams::new(DENSE_MATRIX_MAX_SITES + 1, 1.0, Boundary::Periodic).unwrap();
        assert!(build_hamiltonian(&p).unwrap().to_dense().is_err());
    }
}
