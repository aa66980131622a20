//! Single- and two-mode truncated Fock-space algebra.
//!
//! Conventions used throughout the crate:
//!
//! * `X = (a + a†)/2`, `Y = (a - a†)/(2i)`, so `[X, Y] = i/2` away from the
//!   truncation corner and the vacuum has `Var X = Var Y = 1/4`.
//! * `D(α) = exp(α a† - α* a)`, so `⟨X⟩ = Re α` and `⟨Y⟩ = Im α`.
//! * `R(θ) = exp(-iθ a†a)` and `S(r) = exp[r(a² - a†²)/2]`. With this sign
//!   `X` is the narrow quadrature for `r > 0`: `Var X = e^{-2r}/4`.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::linalg::{self, C64};
use crate::operator::{FockVector, TruncatedOperator, TAIL_TOL};

/// Largest squeezing magnitude accepted by [`GaussianParams`].
pub const R_MAX: f64 = 2.0;

/// Largest single-mode cutoff accepted for the two-mode beam splitter.
pub const BEAM_SPLITTER_MAX_DIM: usize = 64;

/// Deviation allowed when checking how well low levels stay inside the
/// truncated space under a Gaussian unitary.
pub const UNITARY_LEAK_TOL: f64 = 1e-6;

/// Upper limit for automatic dimension growth.
pub const AUTO_DIM_CAP: usize = 2048;

/// `|α, θ, r⟩ = D(α) R(θ) S(r) |0⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub theta: f64,
    pub r: f64,
}

impl GaussianParams {
    pub fn new(alpha_re: f64, alpha_im: f64, theta: f64, r: f64) -> Result<Self> {
        let p = Self {
            alpha_re,
            alpha_im,
            theta,
            r,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn vacuum() -> Self {
        Self {
            alpha_re: 0.0,
            alpha_im: 0.0,
            theta: 0.0,
            r: 0.0,
        }
    }

    pub fn squeezed_vacuum(r: f64) -> Result<Self> {
        Self::new(0.0, 0.0, 0.0, r)
    }

    pub fn coherent(alpha_re: f64, alpha_im: f64) -> Result<Self> {
        Self::new(alpha_re, alpha_im, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.alpha_re, self.alpha_im, self.theta, self.r];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(invalid("Gaussian parameters must be finite"));
        }
        if self.r.abs() > R_MAX {
            return Err(invalid(format!("|r| = {} exceeds R_MAX = {R_MAX}", self.r.abs())));
        }
        Ok(())
    }

    pub fn alpha(&self) -> C64 {
        C64::new(self.alpha_re, self.alpha_im)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(invalid(format!("Fock cutoff must be at least 2, got {dim}")));
    }
    Ok(())
}

/// Truncated annihilation operator: entry `(m, m+1) = √(m+1)`.
pub fn annihilation(dim: usize) -> Result<TruncatedOperator> {
    check_dim(dim)?;
    let m = DMatrix::from_fn(dim, dim, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    TruncatedOperator::new(m)
}

pub fn creation(dim: usize) -> Result<TruncatedOperator> {
    Ok(annihilation(dim)?.adjoint())
}

/// `a†a = diag(0, 1, ..., dim-1)`.
pub fn number(dim: usize) -> Result<TruncatedOperator> {
    check_dim(dim)?;
    let diag: Vec<f64> = (0..dim).map(|m| m as f64).collect();
    Ok(TruncatedOperator::from_real_diagonal(&diag))
}

/// Quadrature eigenvalues are trusted only for `|x| <= √(2 dim)/3`.
pub fn reliable_quadrature_bound(dim: usize) -> f64 {
    (2.0 * dim as f64).sqrt() / 3.0
}

/// `(X, Y)` with `X = (a + a†)/2` and `Y = (a - a†)/(2i)`.
pub fn quadratures(dim: usize) -> Result<(TruncatedOperator, TruncatedOperator)> {
    let a = annihilation(dim)?;
    let ad = a.adjoint();
    let bound = reliable_quadrature_bound(dim);
    let x = TruncatedOperator::hermitian((a.entries() + ad.entries()).scale(0.5))?.with_reliable_window(-bound, bound);
    let y = TruncatedOperator::hermitian((a.entries() - ad.entries()).map(|z| z * C64::new(0.0, -0.5)))?
        .with_reliable_window(-bound, bound);
    Ok((x, y))
}

/// Diagonal `R(θ) = exp(-iθ a†a)`; exact in any cutoff.
pub fn rotation(theta: f64, dim: usize) -> Result<TruncatedOperator> {
    check_dim(dim)?;
    let d = DVector::from_fn(dim, |m, _| C64::from_polar(1.0, -theta * m as f64));
    TruncatedOperator::new(DMatrix::from_diagonal(&d))
}

/// `exp(α a† - α* a)` of the truncated generator.
pub fn displacement(alpha: C64, dim: usize) -> Result<TruncatedOperator> {
    let a = annihilation(dim)?;
    let gen = a.entries().adjoint() * alpha - a.entries() * alpha.conj();
    TruncatedOperator::new(linalg::expm(&gen))
}

/// `exp[r(a² - a†²)/2]` of the truncated generator.
pub fn squeeze(r: f64, dim: usize) -> Result<TruncatedOperator> {
    let a = annihilation(dim)?;
    let a2 = a.entries() * a.entries();
    let gen = (&a2 - a2.adjoint()).scale(0.5 * r);
    TruncatedOperator::new(linalg::expm(&gen))
}

fn gaussian_unitary_unchecked(params: &GaussianParams, dim: usize) -> Result<TruncatedOperator> {
    params.validate()?;
    check_dim(dim)?;
    let d = displacement(params.alpha(), dim)?;
    let rot = rotation(params.theta, dim)?;
    let s = squeeze(params.r, dim)?;
    Ok(&(&d * &rot) * &s)
}

/// Weight that the lowest third of input levels pushes into the top third of
/// the truncated space, `max_{j,k < dim/3} |(U_L† U_L - I)_{jk}|` where `U_L`
/// keeps only the rows of the lower two thirds.
pub fn truncation_leakage(u: &TruncatedOperator) -> f64 {
    let dim = u.dim();
    let rows = (2 * dim).div_ceil(3);
    let cols = dim.div_ceil(3);
    let block = u.entries().view((0, 0), (rows, cols));
    let gram = block.adjoint() * block;
    let dev = gram - DMatrix::<C64>::identity(cols, cols);
    linalg::max_abs(&dev)
}

/// `D(α) R(θ) S(r)` from matrix exponentials of the truncated generators.
///
/// The truncated generators are exactly anti-Hermitian, so the result is
/// unitary in any cutoff; what can go wrong is that low levels are carried
/// into the top of the space where the truncated algebra is wrong. That
/// leakage is measured by [`truncation_leakage`] and must stay below
/// [`UNITARY_LEAK_TOL`].
pub fn gaussian_unitary(params: &GaussianParams, dim: usize) -> Result<TruncatedOperator> {
    let u = gaussian_unitary_unchecked(params, dim)?;
    let leak = truncation_leakage(&u);
    if leak > UNITARY_LEAK_TOL {
        return Err(Error::Truncation {
            message: format!("low levels leak {leak:.3e} into the top third of the space; enlarge the cutoff"),
            suggested_dim: (dim * 3).div_ceil(2),
        });
    }
    Ok(u)
}

/// `|α, θ, r⟩` with the default tail tolerance.
pub fn squeezed_coherent(params: &GaussianParams, dim: usize) -> Result<FockVector> {
    squeezed_coherent_with_tol(params, dim, TAIL_TOL)
}

pub fn squeezed_coherent_with_tol(params: &GaussianParams, dim: usize, tail_tol: f64) -> Result<FockVector> {
    let u = gaussian_unitary_unchecked(params, dim)?;
    let amps = u.entries().column(0).into_owned();
    FockVector::new(amps, tail_tol)
}

/// Starting cutoff for a state, optionally widened by a threshold energy the
/// state has to be resolved against.
pub fn auto_dim(params: &GaussianParams, context_energy: Option<f64>) -> usize {
    let energy = params.alpha().norm_sqr() + (2.0 * params.r.abs()).exp() * context_energy.unwrap_or(1.0);
    32usize.max((8.0 * energy).ceil() as usize)
}

/// Grows the cutoff geometrically until the tail mass is below `tail_tol`.
pub fn squeezed_coherent_auto(params: &GaussianParams, tail_tol: f64) -> Result<FockVector> {
    let mut dim = auto_dim(params, None);
    loop {
        match squeezed_coherent_with_tol(params, dim, tail_tol) {
            Ok(v) => return Ok(v),
            Err(Error::Truncation { suggested_dim, .. }) if suggested_dim <= AUTO_DIM_CAP => {
                dim = suggested_dim;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Which moment [`moment`] returns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentOrder {
    Mean,
    Variance,
}

/// `⟨op⟩` or `⟨op²⟩ - ⟨op⟩²` for a Hermitian `op`.
pub fn moment(op: &TruncatedOperator, vec: &FockVector, order: MomentOrder) -> Result<f64> {
    check_dims(op.dim(), vec.dim())?;
    if !op.is_hermitian() {
        return Err(invalid("moments require a Hermitian operator"));
    }
    let applied = op.entries() * vec.amplitudes();
    let mean = vec.amplitudes().dotc(&applied).re;
    Ok(match order {
        MomentOrder::Mean => mean,
        // ⟨op²⟩ = ‖op ψ‖² for Hermitian op
        MomentOrder::Variance => applied.norm_squared() - mean * mean,
    })
}

/// Projector onto the eigenvectors of `op` with eigenvalue in `[lo, hi]`.
pub fn spectral_projector(op: &TruncatedOperator, lo: f64, hi: f64) -> Result<TruncatedOperator> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(invalid(format!("spectral window [{lo}, {hi}] is empty or malformed")));
    }
    if let Some((min, max)) = op.reliable_window() {
        if lo < min || hi > max {
            return Err(Error::Range { lo, hi, min, max });
        }
    }
    Ok(op.eigh()?.window_projector(lo, hi))
}

/// Index of `|m⟩ ⊗ |n⟩` in the two-mode basis.
pub fn two_mode_index(dim: usize, m: usize, n: usize) -> usize {
    m * dim + n
}

/// Two-mode 50:50 beam splitter `exp[(π/4)(a₁ a₂† - a₁† a₂)]` as a
/// `dim² × dim²` matrix.
///
/// The generator conserves `n₁ + n₂` even after truncation, so the
/// exponential is assembled block by block over total excitation number.
pub fn beam_splitter(dim: usize) -> Result<TruncatedOperator> {
    check_dim(dim)?;
    if dim > BEAM_SPLITTER_MAX_DIM {
        return Err(Error::Guard(format!(
            "beam splitter cutoff {dim} exceeds {BEAM_SPLITTER_MAX_DIM} ({} x {} dense matrix)",
            dim * dim,
            dim * dim
        )));
    }
    let total = dim * dim;
    let mut out = DMatrix::<C64>::zeros(total, total);
    for excitations in 0..=2 * (dim - 1) {
        // block basis: |m, N-m⟩ for admissible m
        let lo = excitations.saturating_sub(dim - 1);
        let hi = excitations.min(dim - 1);
        let levels: Vec<usize> = (lo..=hi).collect();
        let size = levels.len();
        let mut gen = DMatrix::<C64>::zeros(size, size);
        for (j, &m) in levels.iter().enumerate() {
            let n = excitations - m;
            // a₁ a₂†: |m, n⟩ -> √m √(n+1) |m-1, n+1⟩
            if m > 0 && n + 1 < dim {
                let i = j - 1;
                gen[(i, j)] += C64::new(FRAC_PI_4 * ((m * (n + 1)) as f64).sqrt(), 0.0);
            }
            // -a₁† a₂: |m, n⟩ -> -√(m+1) √n |m+1, n-1⟩
            if n > 0 && m + 1 < dim {
                let i = j + 1;
                gen[(i, j)] -= C64::new(FRAC_PI_4 * (((m + 1) * n) as f64).sqrt(), 0.0);
            }
        }
        let block = linalg::expm(&gen);
        for (i, &mi) in levels.iter().enumerate() {
            for (j, &mj) in levels.iter().enumerate() {
                let row = two_mode_index(dim, mi, excitations - mi);
                let col = two_mode_index(dim, mj, excitations - mj);
                out[(row, col)] = block[(i, j)];
            }
        }
    }
    TruncatedOperator::new(out)
}

/// Bogoliubov mode `a′ = cosh r · a + sinh r · a†`, which annihilates `S(r)|0⟩`.
pub fn bogoliubov_annihilation(r: f64, dim: usize) -> Result<TruncatedOperator> {
    let a = annihilation(dim)?;
    let m = a.entries().scale(r.cosh()) + a.entries().adjoint().scale(r.sinh());
    TruncatedOperator::new(m)
}

/// The state with `a′`-eigenvalue `λ = e^{-r} x + i e^{r} y`, built as a
/// squeezed coherent state, together with the residual `‖(a′ - λ)|f⟩‖`.
///
/// `D(α)S(r)|0⟩` has `a′`-eigenvalue `e^{r} Re α + i e^{-r} Im α`, so the
/// displacement is `α = e^{-2r} x + i e^{2r} y`.
pub fn f_xy_state(x: f64, y: f64, r: f64, dim: usize) -> Result<(FockVector, f64)> {
    check_dim(dim)?;
    let lambda = C64::new((-r).exp() * x, r.exp() * y);
    let limit = (dim as f64).sqrt() / 3.0;
    if lambda.norm() > limit {
        return Err(invalid(format!(
            "eigenvalue |λ| = {:.3} exceeds the reliable range √dim/3 = {limit:.3}",
            lambda.norm()
        )));
    }
    let params = GaussianParams::new((-2.0 * r).exp() * x, (2.0 * r).exp() * y, 0.0, r)?;
    let state = squeezed_coherent(&params, dim)?;
    let ap = bogoliubov_annihilation(r, dim)?;
    let shifted = ap.apply(state.amplitudes())? - state.amplitudes() * lambda;
    Ok((state, shifted.norm()))
}
