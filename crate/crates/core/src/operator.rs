//! Dense operators and state vectors on a truncated Fock space.

use std::io::{self, Write};
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dims, invalid, Error, Result};
use crate::linalg::{self, C64};

/// Relative Hermiticity tolerance: `max|A - A†| <= HERMITIAN_TOL * max|A|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Absolute idempotency tolerance for projectors: `max|P² - P| <= PROJECTOR_TOL`.
pub const PROJECTOR_TOL: f64 = 1e-9;
/// Default bound on the probability mass allowed in the top 10% of levels.
pub const TAIL_TOL: f64 = 1e-10;

/// A `dim × dim` complex matrix acting on the span of the lowest Fock levels
/// (or on a tensor product of such spaces).
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    entries: DMatrix<C64>,
    hermitian: bool,
    projector: bool,
    reliable_window: Option<(f64, f64)>,
}

/// Ascending eigenvalues with eigenvectors stored column-wise.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `Σ f(λ_i) |v_i⟩⟨v_i|`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        linalg::from_spectrum(&self.vectors, &weights)
    }

    /// Orthogonal projector onto eigenvectors with eigenvalue in `[lo, hi]`.
    pub fn window_projector(&self, lo: f64, hi: f64) -> TruncatedOperator {
        let m = self.reassemble(|l| if l >= lo && l <= hi { 1.0 } else { 0.0 });
        TruncatedOperator::trusted(m, true, true)
    }
}

impl TruncatedOperator {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(invalid(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self::trusted(entries, false, false))
    }

    /// Validates the Hermiticity invariant and stores the exact Hermitian part.
    pub fn hermitian(entries: DMatrix<C64>) -> Result<Self> {
        let op = Self::new(entries)?;
        let scale = linalg::max_abs(&op.entries);
        let defect = linalg::max_abs(&(&op.entries - op.entries.adjoint()));
        if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NumericalConsistency(format!(
                "matrix is not Hermitian: max|A - A†| = {defect:.3e}"
            )));
        }
        let sym = linalg::hermitian_part(&op.entries);
        Ok(Self::trusted(sym, true, false))
    }

    /// Validates both the Hermiticity and the idempotency invariants.
    pub fn projector(entries: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::hermitian(entries)?;
        let defect = linalg::max_abs(&(&op.entries * &op.entries - &op.entries));
        if defect > PROJECTOR_TOL {
            return Err(Error::NumericalConsistency(format!(
                "matrix is not idempotent: max|P² - P| = {defect:.3e}"
            )));
        }
        op.projector = true;
        Ok(op)
    }

    pub(crate) fn trusted(entries: DMatrix<C64>, hermitian: bool, projector: bool) -> Self {
        Self {
            entries,
            hermitian,
            projector,
            reliable_window: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::trusted(DMatrix::identity(dim, dim), true, true)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::trusted(DMatrix::zeros(dim, dim), true, true)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self::trusted(DMatrix::from_diagonal(&d), true, false)
    }

    /// Restricts the trusted part of the spectrum; spectral projectors with
    /// windows reaching outside it are rejected.
    pub fn with_reliable_window(mut self, lo: f64, hi: f64) -> Self {
        self.reliable_window = Some((lo, hi));
        self
    }

    pub fn reliable_window(&self) -> Option<(f64, f64)> {
        self.reliable_window
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_projector(&self) -> bool {
        self.projector
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::trusted(self.entries.adjoint(), self.hermitian, self.projector)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::trusted(self.entries.scale(s), self.hermitian, false)
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self::trusted(self.entries.map(|z| z * s), false, false)
    }

    /// Identity minus self; keeps the projector flag.
    pub fn complement(&self) -> Self {
        let dim = self.dim();
        Self::trusted(
            DMatrix::identity(dim, dim) - &self.entries,
            self.hermitian,
            self.projector,
        )
    }

    /// Compression onto the span of the first `keep` basis vectors.
    pub fn compress(&self, keep: usize) -> Self {
        let keep = keep.min(self.dim());
        let block = self.entries.view((0, 0), (keep, keep)).into_owned();
        // A compressed projector is generally not idempotent.
        Self::trusted(block, self.hermitian, false)
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.entries)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    fn require_hermitian(&self, what: &str) -> Result<()> {
        if !self.hermitian {
            return Err(invalid(format!("{what} requires a Hermitian operator")));
        }
        Ok(())
    }

    pub fn eigh(&self) -> Result<Spectrum> {
        self.require_hermitian("eigendecomposition")?;
        let (values, vectors) = linalg::eigh(&self.entries);
        Ok(Spectrum { values, vectors })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.require_hermitian("eigenvalue computation")?;
        Ok(linalg::eigvalsh(&self.entries))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.last().copied().unwrap_or(0.0))
    }

    /// Spectral norm of a Hermitian operator.
    pub fn operator_norm(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev.iter().fold(0.0_f64, |acc, l| acc.max(l.abs())))
    }

    /// `f(self)` through the spectral decomposition.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let spec = self.eigh()?;
        Ok(Self::trusted(spec.reassemble(f), true, false))
    }

    /// Number of eigenvalues above one half; the rank of a projector.
    pub fn rank(&self) -> Result<usize> {
        Ok(self.eigenvalues()?.iter().filter(|&&l| l > 0.5).count())
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        let c = &self.entries * &other.entries - &other.entries * &self.entries;
        Ok(Self::trusted(c, false, false))
    }

    /// Largest deviation of this operator from the idempotency invariant.
    pub fn idempotency_defect(&self) -> f64 {
        linalg::max_abs(&(&self.entries * &self.entries - &self.entries))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::max_abs(&(&self.entries - self.entries.adjoint()))
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        check_dims(self.dim(), v.len())?;
        Ok(&self.entries * v)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::trusted(
            self.entries.kronecker(&other.entries),
            self.hermitian && other.hermitian,
            self.projector && other.projector,
        )
    }

    /// Debug dump as `row,col,re,im` lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "row,col,re,im")?;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let z = self.entries[(r, c)];
                writeln!(w, "{r},{c},{:.17e},{:.17e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

impl Add for &TruncatedOperator {
    type Output = TruncatedOperator;

    fn add(self, rhs: Self) -> TruncatedOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        TruncatedOperator::trusted(&self.entries + &rhs.entries, self.hermitian && rhs.hermitian, false)
    }
}

impl Sub for &TruncatedOperator {
    type Output = TruncatedOperator;

    fn sub(self, rhs: Self) -> TruncatedOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        TruncatedOperator::trusted(&self.entries - &rhs.entries, self.hermitian && rhs.hermitian, false)
    }
}

impl Mul for &TruncatedOperator {
    type Output = TruncatedOperator;

    fn mul(self, rhs: Self) -> TruncatedOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        TruncatedOperator::trusted(&self.entries * &rhs.entries, false, false)
    }
}

/// A normalized amplitude vector on the truncated Fock space.
#[derive(Clone, Debug)]
pub struct FockVector {
    amplitudes: DVector<C64>,
    tail_mass: f64,
}

/// Number of top levels whose weight counts as truncation tail.
pub fn tail_levels(dim: usize) -> usize {
    dim.div_ceil(10).max(1)
}

impl FockVector {
    /// Normalizes `amplitudes` and rejects states whose top 10% of levels
    /// carry more than `tail_tol` of the probability.
    pub fn new(amplitudes: DVector<C64>, tail_tol: f64) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 {
            return Err(invalid("a Fock vector needs at least two levels"));
        }
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("amplitude vector has zero or non-finite norm"));
        }
        let amplitudes = amplitudes.unscale(norm);
        let tail_mass = amplitudes
            .iter()
            .skip(dim - tail_levels(dim))
            .map(|z| z.norm_sqr())
            .sum::<f64>();
        if tail_mass > tail_tol {
            return Err(Error::Truncation {
                message: format!(
                    "tail mass {tail_mass:.3e} in the top {} of {dim} levels exceeds {tail_tol:.1e}",
                    tail_levels(dim)
                ),
                suggested_dim: (dim * 3).div_ceil(2),
            });
        }
        Ok(Self { amplitudes, tail_mass })
    }

    /// Number state `|level⟩`.
    pub fn basis(dim: usize, level: usize) -> Result<Self> {
        if level >= dim {
            return Err(invalid(format!("level {level} outside dim {dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[level] = C64::new(1.0, 0.0);
        Self::new(v, f64::INFINITY)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, level: usize) -> C64 {
        self.amplitudes[level]
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `⟨self|op|self⟩`.
    pub fn expectation(&self, op: &TruncatedOperator) -> Result<C64> {
        check_dims(self.dim(), op.dim())?;
        Ok(linalg::quad_form(op.entries(), &self.amplitudes))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "level,re,im")?;
        for (m, z) in self.amplitudes.iter().enumerate() {
            writeln!(w, "{m},{:.17e},{:.17e}", z.re, z.im)?;
        }
        Ok(())
    }
}
