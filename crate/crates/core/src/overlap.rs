//! Numeric complementary overlap
//! `γ_{U→V}(δ) = sup { tr(Vσ) : σ ≥ 0, tr σ = 1, tr(Uσ) ≤ δ }`.
//!
//! The dual is `min_{λ ≥ 0} g(λ)` with `g(λ) = λδ + λ_max(V - λU)`, a convex
//! function of one variable. It is minimized by golden-section search and a
//! primal state is rebuilt from top eigenvectors near the optimum, so every
//! answer comes with a duality gap.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::linalg::{self, C64};
use crate::operator::TruncatedOperator;

/// Default duality-gap tolerance.
pub const GAP_TOL: f64 = 1e-7;

/// Slack below `λ_min(U)` still treated as the boundary case `δ = λ_min(U)`.
pub const FEAS_TOL: f64 = 1e-9;

/// Allowed violation of convexity between consecutive dual evaluations.
pub const CONVEXITY_TOL: f64 = 1e-10;

const LAMBDA_START: f64 = 4.0;
const LAMBDA_CAP: f64 = 1e7;
const GOLDEN_ITERS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapSolution {
    /// Primal value `tr(Vσ)` of the reconstructed state.
    pub value: f64,
    /// Best dual value `g(λ*)`.
    pub dual_value: f64,
    pub lambda: f64,
    pub gap: f64,
    /// `δ` actually used: `max(δ, λ_min(U))` when `δ` sits within
    /// [`FEAS_TOL`] below `λ_min(U)`.
    pub delta_effective: f64,
    /// False when no state satisfies `tr(Uσ) ≤ δ`; the value is then 0.
    pub feasible: bool,
    /// `tr(Uσ)` of the reconstructed state.
    pub constraint_value: f64,
    /// Largest three-point convexity violation among the dual evaluations.
    pub convexity_violation: f64,
    pub evaluations: usize,
}

struct Dual<'a> {
    v: &'a DMatrix<C64>,
    u: &'a DMatrix<C64>,
    delta: f64,
    trace: Vec<(f64, f64)>,
}

impl Dual<'_> {
    fn shifted(&self, lambda: f64) -> DMatrix<C64> {
        self.v - self.u.scale(lambda)
    }

    fn eval(&mut self, lambda: f64) -> f64 {
        let top = *linalg::eigvalsh(&self.shifted(lambda)).last().unwrap_or(&0.0);
        let g = lambda * self.delta + top;
        self.trace.push((lambda, g));
        g
    }

    fn top_vector(&self, lambda: f64) -> DVector<C64> {
        let (_, vecs) = linalg::eigh(&self.shifted(lambda));
        vecs.column(vecs.ncols() - 1).into_owned()
    }
}

fn expect(m: &DMatrix<C64>, v: &DVector<C64>) -> f64 {
    linalg::quad_form(m, v).re
}

/// Largest three-point violation of convexity over evaluations sorted by λ.
fn convexity_violation(trace: &[(f64, f64)]) -> f64 {
    let mut pts = trace.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-15 * (1.0 + b.0.abs()));
    pts.windows(3).fold(0.0_f64, |worst, w| {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        let (x2, y2) = w[2];
        let t = (x1 - x0) / (x2 - x0);
        let chord = y0 + t * (y2 - y0);
        worst.max(y1 - chord)
    })
}

/// Best mixture of two states hitting `tr(Uσ) = δ`; `None` if both sit on
/// the same side of the constraint.
fn mix(u: &DMatrix<C64>, v: &DMatrix<C64>, a: &DVector<C64>, b: &DVector<C64>, delta: f64) -> Option<(f64, f64)> {
    let (ua, va) = (expect(u, a), expect(v, a));
    let (ub, vb) = (expect(u, b), expect(v, b));
    if ua <= delta {
        return Some((va, ua));
    }
    if ub > delta {
        return None;
    }
    let t = if ua - ub > 0.0 { (delta - ub) / (ua - ub) } else { 0.0 };
    let t = t.clamp(0.0, 1.0);
    Some((t * va + (1.0 - t) * vb, t * ua + (1.0 - t) * ub))
}

/// Solves the overlap problem for Hermitian `0 ≤ U, V ≤ I`.
pub fn gamma_numeric(u1: &TruncatedOperator, v1: &TruncatedOperator, delta: f64, tol: f64) -> Result<OverlapSolution> {
    check_dims(u1.dim(), v1.dim())?;
    if !u1.is_hermitian() || !v1.is_hermitian() {
        return Err(invalid("gamma_numeric requires Hermitian operators"));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(invalid(format!("delta must lie in [0, 1], got {delta}")));
    }
    let u = u1.entries();
    let v = v1.entries();
    let (u_vals, u_vecs) = linalg::eigh(u);
    let mu = u_vals[0];
    if delta < mu - FEAS_TOL {
        return Ok(OverlapSolution {
            value: 0.0,
            dual_value: 0.0,
            lambda: f64::INFINITY,
            gap: 0.0,
            delta_effective: delta,
            feasible: false,
            constraint_value: mu,
            convexity_violation: 0.0,
            evaluations: 0,
        });
    }
    let delta = delta.max(mu);

    // primal candidate on the eigenspace of U below δ
    let keep: Vec<usize> = (0..u_vals.len()).filter(|&i| u_vals[i] <= delta).collect();
    let basis = DMatrix::from_fn(u.nrows(), keep.len(), |r, c| u_vecs[(r, keep[c])]);
    let v_face = basis.adjoint() * v * &basis;
    let (_, face_vecs) = linalg::eigh(&v_face);
    let face_state = &basis * face_vecs.column(face_vecs.ncols() - 1);
    let mut best = (expect(v, &face_state), expect(u, &face_state));
    let min_u_state = u_vecs.column(0).into_owned();

    let mut dual = Dual {
        v,
        u,
        delta,
        trace: Vec::new(),
    };

    // bracket: g is convex, so once g(Λ) ≥ g(Λ/2) the minimizer is below Λ
    let mut hi = LAMBDA_START;
    let mut g_hi = dual.eval(hi);
    loop {
        let g_half = dual.eval(hi / 2.0);
        if g_hi >= g_half || hi >= LAMBDA_CAP {
            break;
        }
        hi *= 4.0;
        g_hi = dual.eval(hi);
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = dual.eval(c);
    let mut gd = dual.eval(d);
    for _ in 0..GOLDEN_ITERS {
        if b - a <= 1e-13 * (1.0 + b) {
            break;
        }
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = dual.eval(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = dual.eval(d);
        }
    }
    let g0 = dual.eval(0.0);
    let (mut lambda, mut dual_value) = if gc <= gd { (c, gc) } else { (d, gd) };
    if g0 <= dual_value {
        lambda = 0.0;
        dual_value = g0;
    }

    // primal candidates from top eigenvectors on both sides of λ*
    let h = 1e-7 * (1.0 + lambda);
    let right = dual.top_vector(lambda + h);
    let centre = dual.top_vector(lambda);
    let mut candidates = vec![centre.clone(), right.clone()];
    if lambda > h {
        candidates.push(dual.top_vector(lambda - h));
    }
    for x in &candidates {
        for y in candidates.iter().chain(std::iter::once(&min_u_state)) {
            if let Some(p) = mix(u, v, x, y, delta) {
                if p.0 > best.0 {
                    best = p;
                }
            }
        }
    }

    let gap = dual_value - best.0;
    let solution = OverlapSolution {
        value: best.0,
        dual_value,
        lambda,
        gap,
        delta_effective: delta,
        feasible: true,
        constraint_value: best.1,
        convexity_violation: convexity_violation(&dual.trace),
        evaluations: dual.trace.len(),
    };
    if gap > tol {
        return Err(Error::NumericalConsistency(format!(
            "duality gap {gap:.3e} exceeds tolerance {tol:.1e} (primal {:.9}, dual {dual_value:.9}, lambda {lambda:.6e})",
            best.0
        )));
    }
    Ok(solution)
}
