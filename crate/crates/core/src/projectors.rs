//! Biased homodyne POVMs, the proof operators W₁, A, C and stepwise
//! certification of the operator inequality chain bounding γ.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::bounds;
use crate::error::{check_dims, invalid, Error, Result};
use crate::fock::{self, R_MAX};
use crate::linalg::{self, C64};
use crate::operator::{Spectrum, TruncatedOperator};

/// Allowed disagreement between the two constructions of V₀.
pub const ROUTE_TOL: f64 = 1e-6;

/// Default tolerance for certified operator inequalities.
pub const CHAIN_TOL: f64 = 1e-7;

/// Smallest cutoff satisfying the energy headroom rule `dim ≥ 8(n₀e^{2|r|} + 1)`.
pub fn headroom_dim(n0: f64, r: f64) -> usize {
    (8.0 * (n0 * (2.0 * r.abs()).exp() + 1.0)).ceil() as usize
}

/// Number of low Fock levels on which truncated operators are compared.
pub fn low_block(dim: usize) -> usize {
    dim / 2
}

/// Reliable upper edge of the truncated Bogoliubov number spectrum.
pub fn reliable_number_bound(r: f64, dim: usize) -> f64 {
    (dim as f64 / 8.0 - 1.0) * (-2.0 * r.abs()).exp() + 1.0
}

/// Eigenbasis of the truncated `X`, reused for every function of `X` and `Y`.
///
/// Functions of `Y` come from `Y = R†XR` with `R = R(π/2) = diag((-i)^m)`,
/// which holds exactly in the truncated space because `R` is diagonal.
#[derive(Clone, Debug)]
pub struct QuadratureBasis {
    x: Spectrum,
    phases: DVector<C64>,
    bound: f64,
}

impl QuadratureBasis {
    pub fn new(dim: usize) -> Result<Self> {
        let (x, _) = fock::quadratures(dim)?;
        let phases = DVector::from_fn(dim, |m, _| C64::from_polar(1.0, -PI / 2.0 * m as f64));
        Ok(Self {
            x: x.eigh()?,
            phases,
            bound: fock::reliable_quadrature_bound(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn x_eigenvalues(&self) -> &[f64] {
        &self.x.values
    }

    pub fn fn_x(&self, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
        self.x.reassemble(f)
    }

    pub fn fn_y(&self, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
        let fx = self.fn_x(f);
        let p = &self.phases;
        DMatrix::from_fn(fx.nrows(), fx.ncols(), |j, k| p[j].conj() * fx[(j, k)] * p[k])
    }

    fn check_square_window(&self, c: f64) -> Result<()> {
        let half = c.max(0.0).sqrt();
        if half > self.bound {
            return Err(Error::Range {
                lo: -half,
                hi: half,
                min: -self.bound,
                max: self.bound,
            });
        }
        Ok(())
    }

    /// `P^{X² ≤ c}`.
    pub fn x_square_projector(&self, c: f64) -> Result<TruncatedOperator> {
        self.check_square_window(c)?;
        Ok(TruncatedOperator::trusted(
            self.fn_x(|x| indicator(x * x <= c)),
            true,
            true,
        ))
    }

    /// `P^{Y² ≤ c}`.
    pub fn y_square_projector(&self, c: f64) -> Result<TruncatedOperator> {
        self.check_square_window(c)?;
        Ok(TruncatedOperator::trusted(
            self.fn_y(|y| indicator(y * y <= c)),
            true,
            true,
        ))
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn validate_qrn0(q: f64, r: f64, n0: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("q must lie strictly between 0 and 1, got {q}")));
    }
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(invalid(format!("n0 must be positive and finite, got {n0}")));
    }
    if !r.is_finite() || r.abs() > R_MAX {
        return Err(invalid(format!("|r| must be at most {R_MAX}, got {r}")));
    }
    Ok(())
}

fn check_headroom(n0: f64, r: f64, dim: usize) -> Result<()> {
    let need = headroom_dim(n0, r);
    if dim < need {
        return Err(Error::Truncation {
            message: format!("cutoff {dim} is below the energy headroom 8(n0 e^(2|r|) + 1) = {need}"),
            suggested_dim: need,
        });
    }
    Ok(())
}

/// `a′†a′` with `a′ = cosh r · a + sinh r · a†`.
pub fn bogoliubov_number(r: f64, dim: usize) -> Result<TruncatedOperator> {
    let ap = fock::bogoliubov_annihilation(r, dim)?;
    let n = ap.entries().adjoint() * ap.entries();
    Ok(TruncatedOperator::trusted(linalg::hermitian_part(&n), true, false)
        .with_reliable_window(f64::NEG_INFINITY, reliable_number_bound(r, dim)))
}

/// `e^{2r} X² + e^{-2r} Y²`, equal to `n′ + ½` away from the truncation corner.
pub fn quadratic_form(r: f64, dim: usize) -> Result<TruncatedOperator> {
    let (x, y) = fock::quadratures(dim)?;
    let q = (x.entries() * x.entries()).scale((2.0 * r).exp()) + (y.entries() * y.entries()).scale((-2.0 * r).exp());
    Ok(TruncatedOperator::trusted(linalg::hermitian_part(&q), true, false)
        .with_reliable_window(f64::NEG_INFINITY, reliable_number_bound(r, dim) + 0.5))
}

/// `q_λ = Γ(λ+1, n₀)/Γ(λ+1)`, the regularized upper incomplete gamma
/// function. For integer `λ` this is `Pr[Poisson(n₀) ≤ λ]`.
pub fn w1_weight(lambda: f64, n0: f64) -> f64 {
    gamma_ur(lambda.max(0.0) + 1.0, n0)
}

/// `q_0, ..., q_{count-1}`.
pub fn w1_weights(n0: f64, count: usize) -> Result<Vec<f64>> {
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(invalid(format!("n0 must be positive and finite, got {n0}")));
    }
    if count == 0 {
        return Err(invalid("weight count must be at least 1"));
    }
    Ok((0..count).map(|n| w1_weight(n as f64, n0)).collect())
}

fn w1_from_spectrum(spec: &Spectrum, n0: f64) -> TruncatedOperator {
    TruncatedOperator::trusted(spec.reassemble(|l| w1_weight(l, n0)), true, false)
}

/// `W₁ = Σ q_{n′} |n′⟩⟨n′|` in the Bogoliubov number eigenbasis.
pub fn build_w1(r: f64, n0: f64, dim: usize) -> Result<TruncatedOperator> {
    validate_qrn0(0.5, r, n0)?;
    check_headroom(n0, r, dim)?;
    Ok(w1_from_spectrum(&bogoliubov_number(r, dim)?.eigh()?, n0))
}

/// `F(v) = (e^{-r}/√π) ∫_{|x| ≥ √n₀} exp[-e^{-2r}(x - v)²] dx`
/// `     = ½[erfc(e^{-r}(√n₀ - v)) + erfc(e^{-r}(√n₀ + v))]`.
///
/// The `Y` counterpart `G` is this function with `r → -r`.
pub fn smoothing_function(v: f64, n0: f64, r: f64) -> f64 {
    let s = n0.sqrt();
    let w = (-r).exp();
    0.5 * (erfc(w * (s - v)) + erfc(w * (s + v)))
}

/// `exp[-e^{-2r}(√n₀ - a)²] / (√π e^{-r}(√n₀ - a))`, an upper bound on
/// `F(a)` for `0 ≤ a < √n₀`.
pub fn smoothing_tail_bound(a: f64, n0: f64, r: f64) -> f64 {
    let gap = n0.sqrt() - a;
    let w = (-r).exp();
    (-(w * gap).powi(2)).exp() / (PI.sqrt() * w * gap)
}

fn smoothers_in(basis: &QuadratureBasis, r: f64, n0: f64) -> (TruncatedOperator, TruncatedOperator) {
    let sx = 2f64.sqrt() * r.exp();
    let sy = 2f64.sqrt() * (-r).exp();
    let a = basis.fn_x(|x| smoothing_function(sx * x, n0, 0.0));
    let c = basis.fn_y(|y| smoothing_function(sy * y, n0, 0.0));
    (
        TruncatedOperator::trusted(a, true, false),
        TruncatedOperator::trusted(linalg::hermitian_part(&c), true, false),
    )
}

/// The oppositely squeezed smoothers `A = F₀(√2 e^{r} X)` and
/// `C = F₀(√2 e^{-r} Y)`, where `F₀` is [`smoothing_function`] at `r = 0`.
///
/// These split the coherent-state integral defining `W₁` into the two
/// half-planes `|Re β| ≥ √(n₀/2)` and `|Im β| ≥ √(n₀/2)`, so `W₁ ≤ A + C`.
pub fn build_smoothers(r: f64, n0: f64, dim: usize) -> Result<(TruncatedOperator, TruncatedOperator)> {
    validate_qrn0(0.5, r, n0)?;
    check_headroom(n0, r, dim)?;
    Ok(smoothers_in(&QuadratureBasis::new(dim)?, r, n0))
}

/// The operators `{U₀, U₁, V₀, V₁, W₁}` for one `(q, r, n₀, dim)`.
#[derive(Clone, Debug)]
pub struct PovmSet {
    pub q: f64,
    pub r: f64,
    pub n0: f64,
    pub dim: usize,
    pub u0: TruncatedOperator,
    pub u1: TruncatedOperator,
    pub v0: TruncatedOperator,
    pub v1: TruncatedOperator,
    pub w1: TruncatedOperator,
    /// Operator-norm difference of the two V₀ constructions on the low block.
    pub route_defect: f64,
    basis: QuadratureBasis,
}

/// Builds the POVM bundle.
///
/// `U₀ = q P^{X² ≤ e^{-2r}n₀/2} + (1-q) P^{Y² ≤ e^{2r}n₀/2}`. `V₀` is built
/// from the quadratic form `e^{2r}X² + e^{-2r}Y² ≤ n₀ + 1` and, independently,
/// from the Bogoliubov levels `n′ ≤ n₀ + ½`; the two must agree on the low
/// block.
pub fn build_povm_set(q: f64, r: f64, n0: f64, dim: usize) -> Result<PovmSet> {
    validate_qrn0(q, r, n0)?;
    check_headroom(n0, r, dim)?;
    let basis = QuadratureBasis::new(dim)?;
    let px = basis.x_square_projector((-2.0 * r).exp() * n0 / 2.0)?;
    let py = basis.y_square_projector((2.0 * r).exp() * n0 / 2.0)?;
    let u0 = TruncatedOperator::trusted(
        linalg::hermitian_part(&(px.entries().scale(q) + py.entries().scale(1.0 - q))),
        true,
        false,
    );
    let u1 = u0.complement();

    let form = quadratic_form(r, dim)?;
    let v0_form = fock::spectral_projector(&form, f64::NEG_INFINITY, n0 + 1.0)?;
    let number = bogoliubov_number(r, dim)?;
    let levels = number.eigh()?;
    let v0 = levels.window_projector(f64::NEG_INFINITY, (n0 + 0.5).floor() + 0.5);
    let keep = low_block(dim);
    let route_defect = (&v0_form - &v0).compress(keep).operator_norm()?;
    if route_defect > ROUTE_TOL {
        return Err(Error::NumericalConsistency(format!(
            "V0 constructions disagree by {route_defect:.3e} on the low block"
        )));
    }
    let v1 = v0.complement();
    let w1 = w1_from_spectrum(&levels, n0);
    Ok(PovmSet {
        q,
        r,
        n0,
        dim,
        u0,
        u1,
        v0,
        v1,
        w1,
        route_defect,
        basis,
    })
}

impl PovmSet {
    pub fn smoothers(&self) -> (TruncatedOperator, TruncatedOperator) {
        smoothers_in(&self.basis, self.r, self.n0)
    }

    pub fn basis(&self) -> &QuadratureBasis {
        &self.basis
    }

    /// `q_{n₀} = Γ(n₀+1, n₀)/Γ(n₀+1)`.
    pub fn q_n0(&self) -> f64 {
        w1_weight(self.n0, self.n0)
    }

    /// `P^{X² ≥ cx}` weighted by `q` plus `P^{Y² ≥ cy}` weighted by `1-q`.
    fn tail_projectors(&self, cx: f64, cy: f64) -> Result<TruncatedOperator> {
        let px = self.basis.x_square_projector(cx)?.complement();
        let py = self.basis.y_square_projector(cy)?.complement();
        Ok(&px.scale(self.q) + &py.scale(1.0 - self.q))
    }
}

/// Minimum eigenvalue of `rhs - lhs`; nonnegative iff `lhs ≤ rhs`.
pub fn min_eig_gap(lhs: &TruncatedOperator, rhs: &TruncatedOperator) -> Result<f64> {
    check_dims(lhs.dim(), rhs.dim())?;
    if !lhs.is_hermitian() || !rhs.is_hermitian() {
        return Err(invalid("min_eig_gap requires Hermitian operands"));
    }
    (rhs - lhs).min_eigenvalue()
}

fn low_gap(lhs: &TruncatedOperator, rhs: &TruncatedOperator, keep: usize) -> Result<f64> {
    min_eig_gap(&lhs.compress(keep), &rhs.compress(keep))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub q: f64,
    pub r: f64,
    pub n0: f64,
}

/// One certified operator inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationRecord {
    pub inequality_id: String,
    pub params: ChainParams,
    pub dim: usize,
    pub min_eig_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Diagnostic inequalities that are not part of the four-step chain.
    pub supplementary: bool,
}

/// Scalar remainder of the smoothing step,
/// `3/(√π √n₀) [q e^{r} e^{-n₀e^{-2r}/9} + (1-q) e^{-r} e^{-n₀e^{2r}/9}]`.
pub fn smoothing_remainder(n0: f64, r: f64, q: f64) -> f64 {
    3.0 / (PI.sqrt() * n0.sqrt()) * bounds::remainder_bracket(n0, r, q)
}

/// Certifies, on the low block of the truncated space:
///
/// * `i`:   `V₁ ≤ q_{n₀}⁻¹ W₁ ≤ 2 W₁`
/// * `ii`:  `√(q(1-q)) W₁ ≤ q A + (1-q) C`
/// * `iii`: `q A + (1-q) C ≤ q P^{X² ≥ e^{-2r}n₀/4} + (1-q) P^{Y² ≥ e^{2r}n₀/4} + ε I`
/// * `iv`:  `V₁ ≤ 2/(q(1-q)) U₁ + 6/(q(1-q)) [q e^{r} e^{-n₀e^{-2r}/9} + (1-q) e^{-r} e^{-n₀e^{2r}/9}] I`
///
/// Step `iii` splits at `|Re β| = √(n₀/2)` for the coherent amplitude `β`,
/// which is `X² = e^{-2r} n₀/4` for the quadrature. Supplementary records
/// cover `W₁ ≤ A + C`, the weaker `min(q, 1-q) W₁ ≤ qA + (1-q)C`, and step
/// `iii` with the `U₁` thresholds `e^{∓2r} n₀/2`.
pub fn certify_chain(set: &PovmSet, tol: f64) -> Result<Vec<CertificationRecord>> {
    let (q, r, n0) = (set.q, set.r, set.n0);
    let keep = low_block(set.dim);
    let params = ChainParams { q, r, n0 };
    let record = |id: &str, gap: f64, supplementary: bool| CertificationRecord {
        inequality_id: id.to_string(),
        params,
        dim: set.dim,
        min_eig_gap: gap,
        tolerance: tol,
        pass: gap >= -tol,
        supplementary,
    };

    let (a, c) = set.smoothers();
    let smooth = &a.scale(q) + &c.scale(1.0 - q);
    let w1_scaled = set.w1.scale(1.0 / set.q_n0());
    let eps = smoothing_remainder(n0, r, q);
    let id = TruncatedOperator::identity(set.dim);

    let gap_i = low_gap(&set.v1, &w1_scaled, keep)?.min(low_gap(&w1_scaled, &set.w1.scale(2.0), keep)?);
    let gap_ii = low_gap(&set.w1.scale((q * (1.0 - q)).sqrt()), &smooth, keep)?;
    let split = set.tail_projectors((-2.0 * r).exp() * n0 / 4.0, (2.0 * r).exp() * n0 / 4.0)?;
    let gap_iii = low_gap(&smooth, &(&split + &id.scale(eps)), keep)?;
    let pq = q * (1.0 - q);
    let end = &set.u1.scale(2.0 / pq) + &id.scale(6.0 / pq * bounds::remainder_bracket(n0, r, q));
    let gap_iv = low_gap(&set.v1, &end, keep)?;

    let gap_split = low_gap(&set.w1, &(&a + &c), keep)?;
    let gap_weak = low_gap(&set.w1.scale(q.min(1.0 - q)), &smooth, keep)?;
    let gap_u1 = low_gap(&smooth, &(&set.u1 + &id.scale(eps)), keep)?;

    Ok(vec![
        record("i", gap_i, false),
        record("ii", gap_ii, false),
        record("iii", gap_iii, false),
        record("iv", gap_iv, false),
        record("w1_split", gap_split, true),
        record("ii_min_weight", gap_weak, true),
        record("iii_u1_thresholds", gap_u1, true),
    ])
}
