//! Monte Carlo simulation of biased-basis homodyne verification on product
//! Gaussian sources, and an empirical check of the sampling tail bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::bounds::{self, ProtocolParams};
use crate::error::{invalid, Result};
use crate::fock::GaussianParams;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Largest round count accepted by the simulator.
pub const MAX_ROUNDS: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    IidSqueezedCoherent,
    IidWithExcessNoise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub kind: SourceKind,
    pub params: GaussianParams,
    pub excess_variance: f64,
}

impl SourceModel {
    pub fn squeezed_coherent(params: GaussianParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            kind: SourceKind::IidSqueezedCoherent,
            params,
            excess_variance: 0.0,
        })
    }

    pub fn with_excess_noise(params: GaussianParams, excess_variance: f64) -> Result<Self> {
        let s = Self {
            kind: SourceKind::IidWithExcessNoise,
            params,
            excess_variance,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.excess_variance >= 0.0 && self.excess_variance.is_finite()) {
            return Err(invalid(format!(
                "excess variance must be finite and nonnegative, got {}",
                self.excess_variance
            )));
        }
        if self.kind == SourceKind::IidSqueezedCoherent && self.excess_variance != 0.0 {
            return Err(invalid("a pure squeezed coherent source has no excess variance"));
        }
        Ok(())
    }

    /// Mean and variance of the homodyne outcome in `basis`.
    pub fn quadrature_law(&self, basis: Basis) -> (f64, f64) {
        let GaussianParams {
            alpha_re,
            alpha_im,
            theta,
            r,
        } = self.params;
        let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
        let (narrow, wide) = ((-2.0 * r).exp(), (2.0 * r).exp());
        match basis {
            Basis::X => (alpha_re, (narrow * c2 + wide * s2) / 4.0 + self.excess_variance),
            Basis::Y => (alpha_im, (narrow * s2 + wide * c2) / 4.0 + self.excess_variance),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
}

/// Generator for one worker stream; identical `(seed, stream)` pairs replay
/// identical sequences.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One homodyne outcome.
pub fn sample_homodyne<R: Rng + ?Sized>(source: &SourceModel, basis: Basis, rng: &mut R) -> f64 {
    let (mean, var) = source.quadrature_law(basis);
    Normal::new(mean, var.sqrt())
        .expect("variance is positive for validated sources")
        .sample(rng)
}

/// `X² ≤ e^{-2r}n₀/2` and `Y² ≤ e^{2r}n₀/2` as bounds on `|x|`, `|y|`.
pub fn basis_thresholds(r: f64, n0: f64) -> (f64, f64) {
    let half = (n0 / 2.0).sqrt();
    ((-r).exp() * half, r.exp() * half)
}

fn interval_probability(mean: f64, var: f64, t: f64) -> f64 {
    let s = (2.0 * var).sqrt();
    0.5 * (erf((t - mean) / s) + erf((t + mean) / s))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassProbability {
    pub per_measurement: f64,
    pub k_round: f64,
}

/// `p = q Pr[X² ≤ e^{-2r}n₀/2] + (1-q) Pr[Y² ≤ e^{2r}n₀/2]` and `p^k`.
pub fn analytic_pass_probability(protocol: &ProtocolParams, source: &SourceModel) -> Result<PassProbability> {
    validate_protocol(protocol)?;
    source.validate()?;
    let (tx, ty) = basis_thresholds(protocol.r, protocol.n0);
    let (mx, vx) = source.quadrature_law(Basis::X);
    let (my, vy) = source.quadrature_law(Basis::Y);
    let p = protocol.q * interval_probability(mx, vx, tx) + (1.0 - protocol.q) * interval_probability(my, vy, ty);
    Ok(PassProbability {
        per_measurement: p,
        k_round: p.powf(protocol.k),
    })
}

fn validate_protocol(p: &ProtocolParams) -> Result<()> {
    bounds::check_q_open(p.q)?;
    if !(p.k >= 1.0 && p.k.fract() == 0.0 && p.k <= MAX_ROUNDS as f64) {
        return Err(invalid(format!("k must be a positive integer, got {}", p.k)));
    }
    if !(p.n0 > 0.0 && p.n0.is_finite()) {
        return Err(invalid(format!("n0 must be positive and finite, got {}", p.n0)));
    }
    if !p.r.is_finite() {
        return Err(invalid("r must be finite"));
    }
    Ok(())
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub protocol: ProtocolParams,
    pub source: SourceModel,
    pub seed: u64,
    pub streams: u64,
    pub trials: u64,
    pub pass_count: u64,
    pub pass_prob_mc: f64,
    pub pass_prob_analytic: f64,
    pub wilson_ci_95: (f64, f64),
    /// Number of rounds measured in the X basis, out of `trials · k`.
    pub x_basis_count: u64,
}

#[derive(Default)]
struct Tally {
    passed: u64,
    x_choices: u64,
}

fn run_chunk(protocol: &ProtocolParams, source: &SourceModel, trials: u64, seed: u64, stream: u64) -> Tally {
    let mut rng = stream_rng(seed, stream);
    let (tx, ty) = basis_thresholds(protocol.r, protocol.n0);
    let (mx, vx) = source.quadrature_law(Basis::X);
    let (my, vy) = source.quadrature_law(Basis::Y);
    let nx = Normal::new(mx, vx.sqrt()).expect("positive variance");
    let ny = Normal::new(my, vy.sqrt()).expect("positive variance");
    let rounds = protocol.k as u64;
    let mut tally = Tally::default();
    for _ in 0..trials {
        let mut ok = true;
        for _ in 0..rounds {
            let pass = if rng.random::<f64>() < protocol.q {
                tally.x_choices += 1;
                nx.sample(&mut rng).abs() <= tx
            } else {
                ny.sample(&mut rng).abs() <= ty
            };
            ok &= pass;
        }
        tally.passed += u64::from(ok);
    }
    tally
}

/// Runs `trials` independent verification rounds of `k` measurements each.
///
/// Trials are split into contiguous blocks, one per stream, so the result
/// depends only on `(seed, streams)` and not on thread scheduling.
pub fn run_verification(
    protocol: &ProtocolParams,
    source: &SourceModel,
    trials: u64,
    seed: u64,
    streams: u64,
) -> Result<RunRecord> {
    validate_protocol(protocol)?;
    source.validate()?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if streams == 0 {
        return Err(invalid("streams must be at least 1"));
    }
    let analytic = analytic_pass_probability(protocol, source)?;
    let per = trials / streams;
    let extra = trials % streams;
    let tallies: Vec<Tally> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let count = per + u64::from(s < extra);
            run_chunk(protocol, source, count, seed, s)
        })
        .collect();
    let passed: u64 = tallies.iter().map(|t| t.passed).sum();
    let x_choices: u64 = tallies.iter().map(|t| t.x_choices).sum();
    Ok(RunRecord {
        protocol: *protocol,
        source: *source,
        seed,
        streams,
        trials,
        pass_count: passed,
        pass_prob_mc: passed as f64 / trials as f64,
        pass_prob_analytic: analytic.k_round,
        wilson_ci_95: wilson_interval(passed, trials),
        x_basis_count: x_choices,
    })
}

fn default_n() -> f64 {
    1e3
}

/// One configuration of a batch run. Source fields default to a squeezed
/// vacuum matched to `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub k: f64,
    #[serde(default = "default_n")]
    pub n: f64,
    pub q: f64,
    pub r: f64,
    pub n0: f64,
    pub trials: f64,
    #[serde(default)]
    pub alpha_re: f64,
    #[serde(default)]
    pub alpha_im: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub source_r: Option<f64>,
    #[serde(default)]
    pub excess: f64,
}

/// Flat summary of one batch configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub k: f64,
    pub q: f64,
    pub r: f64,
    pub n0: f64,
    pub source_r: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub theta: f64,
    pub excess: f64,
    pub seed: u64,
    pub trials: u64,
    pub pass_count: u64,
    pub pass_prob_mc: f64,
    pub pass_prob_analytic: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl BatchConfig {
    pub fn source(&self) -> Result<SourceModel> {
        let params = GaussianParams::new(
            self.alpha_re,
            self.alpha_im,
            self.theta,
            self.source_r.unwrap_or(self.r),
        )?;
        if self.excess != 0.0 {
            SourceModel::with_excess_noise(params, self.excess)
        } else {
            SourceModel::squeezed_coherent(params)
        }
    }

    pub fn run(&self, seed: u64, streams: u64) -> Result<BatchRow> {
        if !(self.trials >= 1.0 && self.trials.fract() == 0.0 && self.trials <= 9.007_199_254_740_992e15) {
            return Err(invalid(format!(
                "trials must be a positive integer, got {}",
                self.trials
            )));
        }
        let protocol = ProtocolParams::with_delta_choice(self.k, self.n, self.q, self.r, self.n0)?;
        let source = self.source()?;
        let rec = run_verification(&protocol, &source, self.trials as u64, seed, streams)?;
        Ok(BatchRow {
            k: self.k,
            q: self.q,
            r: self.r,
            n0: self.n0,
            source_r: source.params.r,
            alpha_re: self.alpha_re,
            alpha_im: self.alpha_im,
            theta: self.theta,
            excess: self.excess,
            seed,
            trials: rec.trials,
            pass_count: rec.pass_count,
            pass_prob_mc: rec.pass_prob_mc,
            pass_prob_analytic: rec.pass_prob_analytic,
            ci_lo: rec.wilson_ci_95.0,
            ci_hi: rec.wilson_ci_95.1,
        })
    }
}

/// Runs every configuration; row `i` uses seed `seed + i`.
pub fn run_batch(configs: &[BatchConfig], seed: u64, streams: u64) -> Result<Vec<BatchRow>> {
    configs
        .iter()
        .enumerate()
        .map(|(i, c)| c.run(seed.wrapping_add(i as u64), streams))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub k: u64,
    pub n: u64,
    pub p_u: f64,
    pub p_v: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    pub bound: f64,
    /// True when the bound exceeds 1 and says nothing.
    pub vacuous: bool,
    pub violations: u64,
    pub empirical_rate: f64,
    pub mc_sigma: f64,
    /// `vacuous || empirical_rate ≤ bound + 3 mc_sigma`.
    pub consistent: bool,
}

/// Samples U₁-outcome frequencies on `k` copies and V₁-outcome frequencies
/// on `n` copies of a product source, and counts trials with
/// `f_V > γ(f_U + δ) + δ`.
#[allow(clippy::too_many_arguments)]
pub fn lemma1_mc_check(
    k: u64,
    n: u64,
    p_u: f64,
    p_v: f64,
    delta: f64,
    trials: u64,
    seed: u64,
    gamma: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Lemma1Report> {
    if k == 0 || n == 0 || trials == 0 {
        return Err(invalid("k, n and trials must be at least 1"));
    }
    for (name, p) in [("pU", p_u), ("pV", p_v)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("{name} must lie in [0, 1], got {p}")));
        }
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    let bu = Binomial::new(k, p_u).map_err(|e| invalid(e.to_string()))?;
    let bv = Binomial::new(n, p_v).map_err(|e| invalid(e.to_string()))?;
    let mut rng = stream_rng(seed, 0);
    let mut violations = 0u64;
    for _ in 0..trials {
        let fu = bu.sample(&mut rng) as f64 / k as f64;
        let fv = bv.sample(&mut rng) as f64 / n as f64;
        if fv > gamma(fu + delta) + delta {
            violations += 1;
        }
    }
    let bound = bounds::lemma1_tail(k as f64, delta);
    let rate = violations as f64 / trials as f64;
    let sigma = (rate * (1.0 - rate) / trials as f64).sqrt();
    let vacuous = bound > 1.0;
    Ok(Lemma1Report {
        k,
        n,
        p_u,
        p_v,
        delta,
        trials,
        seed,
        bound,
        vacuous,
        violations,
        empirical_rate: rate,
        mc_sigma: sigma,
        consistent: vacuous || rate <= bound + 3.0 * sigma,
    })
}
