//! Closed-form bounds, the deviation choice and verification thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `(k, n, q, r, n₀, δ)` for one verification configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub k: f64,
    pub n: f64,
    pub q: f64,
    pub r: f64,
    pub n0: f64,
    pub delta: f64,
}

impl ProtocolParams {
    /// Parameters with `δ` set by [`delta_choice`].
    pub fn with_delta_choice(k: f64, n: f64, q: f64, r: f64, n0: f64) -> Result<Self> {
        check_kn(k, n)?;
        check_q_open(q)?;
        check_finite("r", r)?;
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(invalid(format!("n0 must be positive and finite, got {n0}")));
        }
        Ok(Self {
            k,
            n,
            q,
            r,
            n0,
            delta: delta_choice(k, n, q),
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_kn(self.k, self.n)?;
        check_q_open(self.q)?;
        check_finite("r", self.r)?;
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return Err(invalid(format!("n0 must be positive and finite, got {}", self.n0)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(invalid(format!("{name} must be finite, got {x}")));
    }
    Ok(())
}

fn check_kn(k: f64, n: f64) -> Result<()> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(invalid(format!("k must be at least 1, got {k}")));
    }
    if !(n >= 1.0 && n.is_finite()) {
        return Err(invalid(format!("n must be at least 1, got {n}")));
    }
    Ok(())
}

pub(crate) fn check_q_open(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("q must lie strictly between 0 and 1, got {q}")));
    }
    Ok(())
}

/// `q e^{r} e^{-n₀e^{-2r}/9} + (1-q) e^{-r} e^{-n₀e^{2r}/9}`.
pub fn remainder_bracket(n0: f64, r: f64, q: f64) -> f64 {
    q * r.exp() * (-n0 * (-2.0 * r).exp() / 9.0).exp() + (1.0 - q) * (-r).exp() * (-n0 * (2.0 * r).exp() / 9.0).exp()
}

/// `2δ/(q(1-q)) + 6/(q(1-q)) · remainder_bracket(n₀, r, q)`.
pub fn gamma_upper_bound(delta: f64, n0: f64, r: f64, q: f64) -> Result<f64> {
    check_q_open(q)?;
    if n0.is_nan() || n0 <= 0.0 {
        return Err(invalid(format!("n0 must be positive, got {n0}")));
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(invalid(format!("delta must be nonnegative, got {delta}")));
    }
    check_finite("r", r)?;
    let pq = q * (1.0 - q);
    Ok(2.0 / pq * delta + 6.0 / pq * remainder_bracket(n0, r, q))
}

/// `8 k^{3/2} e^{-kδ²}`.
pub fn lemma1_tail(k: f64, delta: f64) -> f64 {
    8.0 * k.powf(1.5) * (-k * delta * delta).exp()
}

/// `8 k^{3/2} exp[-4q(1-q)k³ / (25(k+n)²)]`.
pub fn lemma3_error(k: f64, n: f64, q: f64) -> f64 {
    let kn = k + n;
    8.0 * k.powf(1.5) * (-4.0 * q * (1.0 - q) * k.powi(3) / (25.0 * kn * kn)).exp()
}

/// `δ = 2q(1-q)k / (5(n+k))`.
pub fn delta_choice(k: f64, n: f64, q: f64) -> f64 {
    2.0 * q * (1.0 - q) * k / (5.0 * (n + k))
}

fn threshold_log(k: f64, n: f64, q: f64, r: f64) -> f64 {
    (12.0 * (k + n) / k * (r.exp() / (1.0 - q) + (-r).exp() / q)).ln()
}

/// `9 e^{2|r|} ln[12(k+n)/k · (e^{r}/(1-q) + e^{-r}/q)]`.
pub fn closed_form_threshold(k: f64, n: f64, q: f64, r: f64) -> Result<f64> {
    check_kn(k, n)?;
    check_q_open(q)?;
    check_finite("r", r)?;
    Ok(9.0 * (2.0 * r.abs()).exp() * threshold_log(k, n, q, r))
}

/// Variant with prefactor `q e^{2|r|}` in place of `9 e^{2|r|}`.
pub fn summary_prefactor_threshold(k: f64, n: f64, q: f64, r: f64) -> Result<f64> {
    check_kn(k, n)?;
    check_q_open(q)?;
    check_finite("r", r)?;
    Ok(q * (2.0 * r.abs()).exp() * threshold_log(k, n, q, r))
}

/// Remainder bracket with the exponents divided by `q` instead of 9.
pub fn q_exponent_bracket(n0: f64, r: f64, q: f64) -> f64 {
    q * r.exp() * (-n0 * (-2.0 * r).exp() / q).exp() + (1.0 - q) * (-r).exp() * (-n0 * (2.0 * r).exp() / q).exp()
}

/// `closed_form_threshold(k, n, 1/2, 0)`.
pub fn symmetric_baseline(k: f64, n: f64) -> Result<f64> {
    closed_form_threshold(k, n, 0.5, 0.0)
}

/// `γ(δ) + δ - k/(n+k)` with the analytic γ and `δ = delta_choice(k, n, q)`.
pub fn chain_slack(k: f64, n: f64, q: f64, r: f64, n0: f64) -> Result<f64> {
    let delta = delta_choice(k, n, q);
    Ok(gamma_upper_bound(delta, n0, r, q)? + delta - k / (n + k))
}

/// `(γ(δ) + δ) / (k/(n+k))` evaluated at `n₀`.
pub fn chain_ratio(k: f64, n: f64, q: f64, r: f64, n0: f64) -> Result<f64> {
    let target = k / (n + k);
    Ok((chain_slack(k, n, q, r, n0)? + target) / target)
}

/// Smallest `n₀` with `γ(δ) + δ ≤ k/(n+k)`, by bisection.
///
/// The returned value is the upper end of the final bracket, so it satisfies
/// the inequality.
pub fn solve_min_n0(k: f64, n: f64, q: f64, r: f64) -> Result<f64> {
    check_kn(k, n)?;
    check_q_open(q)?;
    check_finite("r", r)?;
    let delta = delta_choice(k, n, q);
    let target = k / (n + k);
    let floor = (1.0 + 2.0 / (q * (1.0 - q))) * delta;
    if floor >= target {
        return Err(Error::Infeasible(format!(
            "no n0 satisfies the chain: (1 + 2/(q(1-q)))·delta = {floor:.6e} >= k/(n+k) = {target:.6e}"
        )));
    }
    let f = |n0: f64| chain_slack(k, n, q, r, n0);
    let mut lo = 0.0;
    let mut hi = 100.0 * closed_form_threshold(k, n, q, r)?.max(1.0);
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NumericalConsistency("threshold bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Scalar summary for one `(k, n, q, r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    pub gamma_analytic: f64,
    pub gamma_numeric: Option<f64>,
    pub lemma1: f64,
    pub lemma3: f64,
    pub n0_closed: f64,
    pub n0_numeric: Option<f64>,
    pub chain_ratio: f64,
}

/// Evaluates every scalar bound. `γ` is taken at the closed-form threshold;
/// `n0_numeric` is `None` when the chain is infeasible.
pub fn bound_report(k: f64, n: f64, q: f64, r: f64) -> Result<BoundReport> {
    let n0_closed = closed_form_threshold(k, n, q, r)?;
    let delta = delta_choice(k, n, q);
    let n0_numeric = match solve_min_n0(k, n, q, r) {
        Ok(v) => Some(v),
        Err(Error::Infeasible(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        delta,
        gamma_analytic: gamma_upper_bound(delta, n0_closed, r, q)?,
        gamma_numeric: None,
        lemma1: lemma1_tail(k, delta),
        lemma3: lemma3_error(k, n, q),
        n0_closed,
        n0_numeric,
        chain_ratio: chain_ratio(k, n, q, r, n0_closed)?,
    })
}
