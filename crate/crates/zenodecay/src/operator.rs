//! Dense complex-matrix foundation: Hermitian operators, density operators,
//! projectors, spectral decomposition, and unitary time evolution.
//!
//! Everything here is immutable after construction and all operations are
//! pure functions, so values can be shared freely across workers.

use crate::error::{Error, Result};
use crate::tol::{self, Tolerances};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// A square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: CMat,
}

impl Operator {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        for j in 0..mat.ncols() {
            for i in 0..mat.nrows() {
                let z = mat[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { mat })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMat::identity(dim, dim),
        }
    }

    /// Build from a row-major table of entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for dim {}, got {}",
                dim * dim,
                dim,
                entries.len()
            )));
        }
        let mat = CMat::from_fn(dim, dim, |i, j| entries[i * dim + j]);
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// Max elementwise |A − A†|.
    pub fn hermitian_deviation(&self) -> f64 {
        let adj = self.mat.adjoint();
        (&self.mat - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tolerance: f64) -> bool {
        self.hermitian_deviation() <= tolerance
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus; cheap scale estimate for tolerances.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Diagnostic text dump: row-major, one row per line, entries as
    /// `re+imi` with 17 significant digits. Used by golden-file tests.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if j > 0 {
                    out.push(' ');
                }
                let z = self.mat[(i, j)];
                out.push_str(&format!("{:.16e}{:+.16e}i", z.re, z.im));
            }
            out.push('\n');
        }
        out
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// Unit-trace positive-semidefinite Hermitian matrix: the system state ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    /// Validate Hermiticity, unit trace and positivity.
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: Operator, tols: &Tolerances) -> Result<Self> {
        let dev = op.hermitian_deviation();
        if dev > tols.hermitian {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > tols.trace_one || tr.im.abs() > tols.trace_one {
            return Err(Error::TraceNotOne { trace: tr.re });
        }
        let spec = spectral_decompose(&op, false)?;
        if let Some(&lo) = spec
            .eigenvalues()
            .first()
            .filter(|&&lo| lo < tols.eigenvalue_floor)
        {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: lo });
        }
        Ok(Self { op })
    }

    /// Pure state |v̂⟩⟨v̂| from an unnormalized ket.
    pub fn from_ket(v: &CVec) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        for z in v.iter() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidInput("non-finite ket entry".into()));
            }
        }
        let unit = v / C64::new(norm, 0.0);
        let mat = &unit * unit.adjoint();
        Ok(Self {
            op: Operator { mat },
        })
    }

    /// Trusted constructor for states that are valid by construction
    /// (unitary conjugation, Lüders update). Skips the eigenvalue check.
    pub(crate) fn from_valid_parts(mat: CMat) -> Self {
        debug_assert!(mat.nrows() == mat.ncols());
        Self {
            op: Operator { mat },
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> C64 {
        self.op.trace()
    }
}

/// Hermitian idempotent matrix Λ with its rank; the undecayed/decayed observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    op: Operator,
    rank: usize,
}

impl Projector {
    pub fn new(op: Operator, rank: usize) -> Result<Self> {
        Self::with_tolerances(op, rank, &Tolerances::default())
    }

    pub fn with_tolerances(op: Operator, rank: usize, tols: &Tolerances) -> Result<Self> {
        let dev = op.hermitian_deviation();
        if dev > tols.hermitian {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let sq = op.matrix() * op.matrix();
        let idem = (&sq - op.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if idem > tols.idempotent {
            return Err(Error::NotIdempotent { deviation: idem });
        }
        let tr = op.trace();
        if (tr.re - rank as f64).abs() > tols.projector_rank {
            return Err(Error::RankTraceMismatch { trace: tr.re, rank });
        }
        Ok(Self { op, rank })
    }

    /// Orthogonal projector onto the span of the given vectors.
    ///
    /// The span is orthonormalized by modified Gram–Schmidt with one
    /// re-orthogonalization pass; a dependent set is rejected.
    pub fn from_span(vectors: &[CVec]) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidInput(
                "projector span needs at least one vector; use Projector::rank_zero".into(),
            ));
        }
        let dim = vectors[0].len();
        let basis = orthonormalize(vectors)?;
        let mut mat = CMat::zeros(dim, dim);
        for e in &basis {
            mat += e * e.adjoint();
        }
        Ok(Self {
            op: Operator { mat },
            rank: basis.len(),
        })
    }

    /// Rank-0 projector: no undecayed subspace at all.
    pub fn rank_zero(dim: usize) -> Self {
        Self {
            op: Operator::zeros(dim),
            rank: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim),
            rank: dim,
        }
    }

    /// Trusted constructor for Λ = B B† with B orthonormal columns.
    pub(crate) fn from_valid_parts(mat: CMat, rank: usize) -> Self {
        Self {
            op: Operator { mat },
            rank,
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

/// Modified Gram–Schmidt with a single re-orthogonalization pass.
///
/// Residual diagonal factors are real and positive by construction, so
/// orthonormalizing a Gaussian matrix through this routine yields columns
/// distributed by Haar measure.
pub fn orthonormalize(vectors: &[CVec]) -> Result<Vec<CVec>> {
    let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
    let mut basis: Vec<CVec> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: v.len(),
            });
        }
        let mut w = v.clone();
        // Two MGS passes; the second removes the O(eps·cond) leakage of the first.
        for _ in 0..2 {
            for e in &basis {
                let overlap = e.dotc(&w);
                w -= e * overlap;
            }
        }
        let norm = w.norm();
        if norm < tol::TOL_DEPENDENT_SPAN {
            return Err(Error::RankDeficient { residual: norm });
        }
        basis.push(w / C64::new(norm, 0.0));
    }
    Ok(basis)
}

/// Real eigenvalues (ascending) and orthonormal eigenvectors of a
/// Hermitian operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary whose columns are the eigenvectors, ordered like `eigenvalues`.
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// U diag(λ) U†.
    pub fn reconstruct(&self) -> CMat {
        let lam = CMat::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j {
                C64::new(self.eigenvalues[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &self.eigenvectors * lam * self.eigenvectors.adjoint()
    }

    /// Max elementwise |U†U − I|.
    pub fn unitary_deviation(&self) -> f64 {
        let gram = self.eigenvectors.adjoint() * &self.eigenvectors;
        let eye = CMat::identity(self.dim(), self.dim());
        (gram - eye).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Time-evolution operator e^{−iHt/ħ} = U diag(e^{−iλt/ħ}) U†.
    pub fn evolution_operator(&self, t: f64, hbar: f64) -> CMat {
        let phases = CMat::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j {
                C64::new(0.0, -self.eigenvalues[i] * t / hbar).exp()
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &self.eigenvectors * phases * self.eigenvectors.adjoint()
    }
}

/// Hermitian eigendecomposition with deterministic output ordering.
///
/// Eigenvalues ascend; exact ties are broken by lexicographic order of the
/// phase-fixed eigenvector entries. Each eigenvector's first nonzero
/// component is rotated to be real and positive, so the output is a pure
/// function of the input matrix.
pub fn spectral_decompose(h: &Operator, require_hermitian: bool) -> Result<SpectralDecomposition> {
    if require_hermitian {
        let dev = h.hermitian_deviation();
        if dev > tol::TOL_HERMITIAN {
            return Err(Error::NotHermitian { deviation: dev });
        }
    }
    let dim = h.dim();
    if dim == 0 {
        return Err(Error::InvalidInput("empty operator".into()));
    }
    let se = h.matrix().clone().symmetric_eigen();
    let mut vectors: Vec<CVec> = (0..dim)
        .map(|j| fix_phase(se.eigenvectors.column(j).into_owned()))
        .collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lex_compare(&vectors[a], &vectors[b]))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut eigenvectors = CMat::zeros(dim, dim);
    for (slot, &k) in order.iter().enumerate() {
        eigenvectors.set_column(slot, &std::mem::replace(&mut vectors[k], CVec::zeros(0)));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Rotate the global phase so the first nonzero component is real positive.
fn fix_phase(mut v: CVec) -> CVec {
    let max_mod = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max_mod == 0.0 {
        return v;
    }
    let pivot = v
        .iter()
        .find(|z| z.norm() > 1e-12 * max_mod)
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot.conj() / C64::new(pivot.norm(), 0.0);
    v *= phase;
    v
}

fn lex_compare(a: &CVec, b: &CVec) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x
            .re
            .total_cmp(&y.re)
            .then_with(|| x.im.total_cmp(&y.im))
        {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// ρ(t) = e^{−iHt/ħ} ρ(0) e^{iHt/ħ} in natural units (ħ = 1).
pub fn evolve(rho: &DensityOperator, h: &Operator, t: f64) -> Result<DensityOperator> {
    evolve_with_hbar(rho, h, t, tol::DEFAULT_HBAR)
}

/// Same as [`evolve`] with an explicit ħ > 0.
pub fn evolve_with_hbar(
    rho: &DensityOperator,
    h: &Operator,
    t: f64,
    hbar: f64,
) -> Result<DensityOperator> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: h.dim(),
        });
    }
    if !t.is_finite() {
        return Err(Error::NonFiniteTime(t));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
    }
    let dev = h.hermitian_deviation();
    if dev > tol::TOL_HERMITIAN {
        return Err(Error::NotHermitian { deviation: dev });
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let spec = spectral_decompose(h, false)?;
    let u = spec.evolution_operator(t, hbar);
    let mat = &u * rho.matrix() * u.adjoint();
    Ok(DensityOperator::from_valid_parts(mat))
}

/// Tr(Λ ρ): probability of finding the state inside the projector's range.
/// Clamped to [0, 1] on return.
pub fn trace_prob(lam: &Projector, rho: &DensityOperator) -> Result<f64> {
    if lam.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            left: lam.dim(),
            right: rho.dim(),
        });
    }
    // Tr(Λρ) = Σ_ij Λ_ij ρ_ji
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..lam.dim() {
        for j in 0..lam.dim() {
            tr += lam.matrix()[(i, j)] * rho.matrix()[(j, i)];
        }
    }
    Ok(tr.re.clamp(0.0, 1.0))
}

/// ab − ba. Anti-Hermitian whenever both inputs are Hermitian.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mat = a.matrix() * b.matrix() - b.matrix() * a.matrix();
    Ok(Operator { mat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_x() -> Operator {
        Operator::from_rows(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
    }

    fn sigma_y() -> Operator {
        Operator::from_rows(2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap()
    }

    fn sigma_z() -> Operator {
        Operator::from_rows(2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]).unwrap()
    }

    #[test]
    fn density_from_basis_ket() {
        let v = CVec::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let rho = DensityOperator::from_ket(&v).unwrap();
        assert_eq!(rho.matrix()[(0, 0)], c(1., 0.));
        assert_eq!(rho.matrix()[(1, 1)], c(0., 0.));
    }

    #[test]
    fn density_from_symmetric_ket() {
        let v = CVec::from_vec(vec![c(1., 0.), c(1., 0.)]);
        let rho = DensityOperator::from_ket(&v).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(rho.matrix()[(i, j)].re, 0.5, max_relative = 1e-15);
                assert_eq!(rho.matrix()[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn density_normalization_idempotent() {
        let v = CVec::from_vec(vec![c(2., 0.), c(0., 0.)]);
        let rho = DensityOperator::from_ket(&v).unwrap();
        assert_eq!(rho.matrix()[(0, 0)], c(1., 0.));
    }

    #[test]
    fn density_rejects_zero_ket() {
        let v = CVec::from_vec(vec![c(0., 0.), c(0., 0.)]);
        assert!(matches!(
            DensityOperator::from_ket(&v),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn projector_single_vector() {
        let v = CVec::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let p = Projector::from_span(&[v]).unwrap();
        assert_eq!(p.rank(), 1);
        assert_eq!(p.matrix()[(0, 0)], c(1., 0.));
        assert_eq!(p.matrix()[(1, 1)], c(0., 0.));
    }

    #[test]
    fn projector_complete_set_is_identity() {
        let v0 = CVec::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let v1 = CVec::from_vec(vec![c(0., 0.), c(1., 0.)]);
        let p = Projector::from_span(&[v0, v1]).unwrap();
        assert_eq!(p.rank(), 2);
        let dev = (p.matrix() - CMat::identity(2, 2))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-15);
    }

    #[test]
    fn projector_rotated_complete_set_is_identity() {
        let v0 = CVec::from_vec(vec![c(1., 0.), c(1., 0.)]);
        let v1 = CVec::from_vec(vec![c(1., 0.), c(-1., 0.)]);
        let p = Projector::from_span(&[v0, v1]).unwrap();
        let dev = (p.matrix() - CMat::identity(2, 2))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "deviation {dev}");
    }

    #[test]
    fn projector_rejects_dependent_set() {
        let v0 = CVec::from_vec(vec![c(1., 0.), c(1., 0.)]);
        let v1 = CVec::from_vec(vec![c(2., 0.), c(2., 0.)]);
        assert!(matches!(
            Projector::from_span(&[v0, v1]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn spectral_identity() {
        let spec = spectral_decompose(&Operator::identity(3), true).unwrap();
        for &e in spec.eigenvalues() {
            assert_relative_eq!(e, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn spectral_sigma_z_ascending() {
        let spec = spectral_decompose(&sigma_z(), true).unwrap();
        assert_relative_eq!(spec.eigenvalues()[0], -1.0, max_relative = 1e-14);
        assert_relative_eq!(spec.eigenvalues()[1], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn spectral_sigma_x_eigenvectors_phase_fixed() {
        let spec = spectral_decompose(&sigma_x(), true).unwrap();
        let s = 1.0 / 2f64.sqrt();
        // λ = −1 → (1, −1)/√2; λ = +1 → (1, 1)/√2, first entries real positive
        assert_relative_eq!(spec.eigenvectors()[(0, 0)].re, s, max_relative = 1e-12);
        assert_relative_eq!(spec.eigenvectors()[(1, 0)].re, -s, max_relative = 1e-12);
        assert_relative_eq!(spec.eigenvectors()[(0, 1)].re, s, max_relative = 1e-12);
        assert_relative_eq!(spec.eigenvectors()[(1, 1)].re, s, max_relative = 1e-12);
    }

    #[test]
    fn spectral_rejects_non_hermitian_when_flagged() {
        let a = Operator::from_rows(2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert!(matches!(
            spectral_decompose(&a, true),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn evolve_zero_hamiltonian_is_identity() {
        let v = CVec::from_vec(vec![c(0.6, 0.0), c(0.8, 0.0)]);
        let rho = DensityOperator::from_ket(&v).unwrap();
        let rho_t = evolve(&rho, &Operator::zeros(2), 3.7).unwrap();
        let dev = (rho_t.matrix() - rho.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-14);
    }

    #[test]
    fn evolve_commuting_diagonal_unchanged() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(0.25, 0.);
        m[(1, 1)] = c(0.75, 0.);
        let rho = DensityOperator::new(Operator::new(m).unwrap()).unwrap();
        let h = sigma_z();
        let rho_t = evolve(&rho, &h, 1.3).unwrap();
        let dev = (rho_t.matrix() - rho.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "deviation {dev}");
    }

    #[test]
    fn evolve_rabi_oracle() {
        // ρ = |0⟩⟨0|, H = g σ_x: population of |0⟩ at t is cos²(gt).
        let v = CVec::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let rho = DensityOperator::from_ket(&v).unwrap();
        let h = sigma_x(); // g = 1
        let t = std::f64::consts::FRAC_PI_2;
        let rho_t = evolve(&rho, &h, t).unwrap();
        assert!(rho_t.matrix()[(0, 0)].re.abs() < 1e-10);
        // generic angle
        for &(g, t) in &[(0.5, 0.9), (1.7, 2.3)] {
            let mut hm = sigma_x().into_matrix();
            hm *= c(g, 0.);
            let h = Operator::new(hm).unwrap();
            let rho_t = evolve(&rho, &h, t).unwrap();
            let expect = (g * t).cos().powi(2);
            assert_relative_eq!(rho_t.matrix()[(0, 0)].re, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn trace_prob_extremes_and_bloch_overlap() {
        let v = CVec::from_vec(vec![c(1., 0.), c(1., 0.)]);
        let rho = DensityOperator::from_ket(&v).unwrap(); // |+x⟩
        assert_relative_eq!(
            trace_prob(&Projector::identity(2), &rho).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_eq!(trace_prob(&Projector::rank_zero(2), &rho).unwrap(), 0.0);
        let up = CVec::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let lam = Projector::from_span(&[up]).unwrap(); // |+z⟩⟨+z|
        assert_relative_eq!(trace_prob(&lam, &rho).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn commutator_pauli_algebra() {
        let zero = commutator(&sigma_x(), &sigma_x()).unwrap();
        assert!(zero.max_abs() < 1e-15);
        let xy = commutator(&sigma_x(), &sigma_y()).unwrap();
        // [σx, σy] = 2i σz
        assert_relative_eq!(xy.matrix()[(0, 0)].im, 2.0, max_relative = 1e-14);
        assert_relative_eq!(xy.matrix()[(1, 1)].im, -2.0, max_relative = 1e-14);
        let mut d1 = CMat::zeros(2, 2);
        d1[(0, 0)] = c(2., 0.);
        let mut d2 = CMat::zeros(2, 2);
        d2[(1, 1)] = c(3., 0.);
        let dd = commutator(
            &Operator::new(d1).unwrap(),
            &Operator::new(d2).unwrap(),
        )
        .unwrap();
        assert_eq!(dd.max_abs(), 0.0);
    }

    #[test]
    fn dump_text_golden() {
        let a = Operator::from_rows(1, &[c(0.5, -0.25)]).unwrap();
        assert_eq!(a.dump_text(), "5.0000000000000000e-1-2.5000000000000000e-1i\n");
    }

    #[test]
    fn dimension_mismatch_errors() {
        let v = CVec::from_vec(vec![c(1., 0.), c(0., 0.)]);
        let rho = DensityOperator::from_ket(&v).unwrap();
        assert!(matches!(
            evolve(&rho, &Operator::zeros(3), 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            trace_prob(&Projector::identity(3), &rho),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            commutator(&Operator::zeros(2), &Operator::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dim_one_systems_are_legal() {
        let v = CVec::from_vec(vec![c(1., 0.)]);
        let rho = DensityOperator::from_ket(&v).unwrap();
        let h = Operator::from_rows(1, &[c(0.7, 0.)]).unwrap();
        let rho_t = evolve(&rho, &h, 2.0).unwrap();
        assert_relative_eq!(rho_t.matrix()[(0, 0)].re, 1.0, max_relative = 1e-14);
        assert_eq!(trace_prob(&Projector::rank_zero(1), &rho).unwrap(), 0.0);
    }
}
