//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Criteria 2 and 6 contain checks that cannot hold for the formulas as
//! stated; they are evaluated as written and reported red.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use finetti_core::bounds::{
    chain_ratio, chain_slack, closed_form_threshold, delta_choice, gamma_upper_bound, lemma1_tail, lemma3_error,
    solve_min_n0,
};
use finetti_core::fock::{moment, quadratures, squeezed_coherent_auto};
use finetti_core::operator::TAIL_TOL;
use finetti_core::overlap::gamma_numeric;
use finetti_core::projectors::{build_povm_set, certify_chain, headroom_dim, low_block};
use finetti_core::sim::{lemma1_mc_check, run_verification};
use finetti_core::symmetric::{binomial, restricted_projector, restricted_sym_projector, sym_projector};
use finetti_core::{GaussianParams, MomentOrder, ProtocolParams, SourceModel, SymmetricSpec, TruncatedOperator, C64};
use nalgebra::DMatrix;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

const CHAIN_N0: [f64; 3] = [2.0, 6.0, 12.0];
const CHAIN_R: [f64; 3] = [0.0, 0.3, -0.3];
const CHAIN_Q: [f64; 2] = [0.3, 0.5];

fn variance_law() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for r in [0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0] {
        for mag in [0.0, 1.0, 2.0] {
            let phase = std::f64::consts::FRAC_PI_3;
            let p = GaussianParams::new(mag * phase.cos(), mag * phase.sin(), 0.0, r).unwrap();
            let state = squeezed_coherent_auto(&p, TAIL_TOL).unwrap();
            let (x, y) = quadratures(state.dim()).unwrap();
            let vx = moment(&x, &state, MomentOrder::Variance).unwrap();
            let vy = moment(&y, &state, MomentOrder::Variance).unwrap();
            worst = worst
                .max((vx - (-2.0 * r).exp() / 4.0).abs())
                .max((vy - (2.0 * r).exp() / 4.0).abs());
            points += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-6 && within(t, 10.0),
        format!(
            "{points} grid points, worst variance error {worst:.2e}, {:.2}s",
            t.as_secs_f64()
        ),
    )
}

fn operator_chain() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for n0 in CHAIN_N0 {
        for r in CHAIN_R {
            for q in CHAIN_Q {
                let dim = headroom_dim(n0, r);
                let set = build_povm_set(q, r, n0, dim).unwrap();
                for rec in certify_chain(&set, 1e-7).unwrap().iter().filter(|r| !r.supplementary) {
                    count += 1;
                    worst = worst.min(rec.min_eig_gap);
                    if rec.min_eig_gap < -1e-7 {
                        failures.push(format!(
                            "{}@(n0={n0},r={r},q={q}):{:.4}",
                            rec.inequality_id, rec.min_eig_gap
                        ));
                    }
                }
            }
        }
    }
    let t = start.elapsed();
    let detail = if failures.is_empty() {
        format!("{count} gaps, min {worst:.3e}, {:.1}s", t.as_secs_f64())
    } else {
        format!(
            "{} of {count} gaps below -1e-7 (step ii needs sqrt(q(1-q)) <= min(q,1-q), false for q != 1/2): {}; {:.1}s",
            failures.len(),
            failures.join(" "),
            t.as_secs_f64()
        )
    };
    outcome(failures.is_empty() && within(t, 120.0), detail)
}

fn gamma_dominance() -> Outcome {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_gap: f64 = 0.0;
    let mut count = 0;
    for n0 in CHAIN_N0 {
        for r in CHAIN_R {
            for q in CHAIN_Q {
                let dim = headroom_dim(n0, r);
                let set = build_povm_set(q, r, n0, dim).unwrap();
                let keep = low_block(dim);
                let (u1, v1) = (set.u1.compress(keep), set.v1.compress(keep));
                for delta in [0.0, 0.05, 0.2] {
                    let sol = gamma_numeric(&u1, &v1, delta, 1e-7).unwrap();
                    let bound = gamma_upper_bound(delta, n0, r, q).unwrap();
                    worst_excess = worst_excess.max(sol.value - bound);
                    worst_gap = worst_gap.max(sol.gap);
                    count += 1;
                }
            }
        }
    }
    outcome(
        worst_excess <= 1e-6 && worst_gap <= 1e-7,
        format!("{count} points, max(gamma - bound) {worst_excess:.3e}, max gap {worst_gap:.2e}"),
    )
}

fn threshold_values() -> Outcome {
    let at = |r| closed_form_threshold(2e7, 2e9, 0.4, r).unwrap();
    let (a, b) = (at(0.0), at(0.05));
    let mags = [0.0, 0.1, 0.3, 0.6];
    let mut monotone = true;
    for sign in [1.0, -1.0] {
        for w in mags.windows(2) {
            monotone &= at(sign * w[1]) > at(sign * w[0]);
        }
    }
    outcome(
        (a - 76.74).abs() <= 0.05 && (b - 84.73).abs() <= 0.05 && monotone,
        format!("n0(r=0) = {a:.4}, n0(r=0.05) = {b:.4}, monotone in |r|: {monotone}"),
    )
}

fn chain_discrepancy() -> Outcome {
    let (k, n, q, r) = (2e7, 2e9, 0.4, 0.0);
    let closed = closed_form_threshold(k, n, q, r).unwrap();
    let ratio = chain_ratio(k, n, q, r, closed).unwrap();
    let solved = solve_min_n0(k, n, q, r).unwrap();
    let residual = chain_slack(k, n, q, r, solved).unwrap();
    outcome(
        (ratio - 1.40).abs() <= 0.02 && (solved - 90.84).abs() <= 0.05 && residual <= 1e-9 && residual.abs() <= 1e-9,
        format!("chain_ratio {ratio:.4}, solve_min_n0 {solved:.4}, residual {residual:.2e}"),
    )
}

fn lemma3_evaluation() -> Outcome {
    let (k, n, q) = (2e7, 2e9, 0.4);
    let err = lemma3_error(k, n, q);
    let in_range = (1.0e-21..=2.0e-21).contains(&err);
    let tail = lemma1_tail(k, delta_choice(k, n, q));
    let rel = (err - tail).abs() / err;
    let matches = rel <= 1e-12;
    let edge = 8.0 * k.powf(1.5);
    let degenerate = lemma3_error(k, n, 0.0) == edge && lemma3_error(k, n, 1.0) == edge;
    outcome(
        in_range && matches && degenerate,
        format!(
            "lemma3_error {err:.4e} in range: {in_range}; lemma1_tail at delta_choice {tail:.4e}, rel diff {rel:.2e} \
             (k*delta^2 carries q^2(1-q)^2, the closed exponent q(1-q)); q in {{0,1}} gives 8k^1.5: {degenerate}"
        ),
    )
}

fn mc_verification() -> Outcome {
    let start = Instant::now();
    let trials = 100_000u64;
    let mut probs = Vec::new();
    let mut ok = true;
    // distinct seeds: with a shared seed matched sources draw rescaled copies
    // of the same normals and agree exactly
    for (seed, r) in [(11u64, 0.0), (12, 0.3), (13, 0.6)] {
        let protocol = ProtocolParams::with_delta_choice(10.0, 1e3, 0.5, r, 2.0).unwrap();
        let source = SourceModel::squeezed_coherent(GaussianParams::squeezed_vacuum(r).unwrap()).unwrap();
        let rec = run_verification(&protocol, &source, trials, seed, 8).unwrap();
        let sigma = (0.6277 * (1.0 - 0.6277) / trials as f64).sqrt();
        ok &= (rec.pass_prob_mc - 0.6277).abs() <= 3.0 * sigma;
        probs.push(rec.pass_prob_mc);
    }
    for i in 0..probs.len() {
        for j in i + 1..probs.len() {
            let s = (probs[i] * (1.0 - probs[i]) / trials as f64 + probs[j] * (1.0 - probs[j]) / trials as f64).sqrt();
            ok &= (probs[i] - probs[j]).abs() <= 3.0 * s;
        }
    }
    let t = start.elapsed();
    outcome(
        ok && within(t, 10.0),
        format!("pass_prob_mc at r = 0, 0.3, 0.6: {probs:.4?}, {:.2}s", t.as_secs_f64()),
    )
}

fn lemma1_sanity() -> Outcome {
    let start = Instant::now();
    let rep = lemma1_mc_check(500, 500, 0.02, 0.02, 0.3, 100_000, 7, &|x| x).unwrap();
    let t = start.elapsed();
    outcome(
        rep.violations == 0 && (rep.bound - 2.6e-15).abs() <= 0.1e-15 && within(t, 30.0),
        format!(
            "{} violations, bound {:.3e}, {:.2}s",
            rep.violations,
            rep.bound,
            t.as_secs_f64()
        ),
    )
}

fn symmetric_algebra() -> Outcome {
    let mut ranks_ok = true;
    for (d, m) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        ranks_ok &= sym_projector(d, m).unwrap().rank().unwrap() == binomial(d + m - 1, m);
    }
    // a tilted reference projector as well as the ground state
    let s = 0.5f64.sqrt();
    let tilted = TruncatedOperator::projector(DMatrix::from_fn(2, 2, |i, j| {
        let v = [C64::new(s, 0.0), C64::new(0.0, s)];
        v[i] * v[j].conj()
    }))
    .unwrap();
    let specs = [
        SymmetricSpec::ground(2, 2, 1).unwrap(),
        SymmetricSpec::ground(3, 2, 1).unwrap(),
        SymmetricSpec::ground(2, 3, 2).unwrap(),
        SymmetricSpec::new(2, 3, 1, tilted).unwrap(),
    ];
    let mut worst_comm: f64 = 0.0;
    let mut worst_idem: f64 = 0.0;
    for spec in &specs {
        let sym = sym_projector(spec.d, spec.copies()).unwrap();
        let restricted = restricted_projector(spec).unwrap();
        worst_comm = worst_comm.max(restricted.commutator(&sym).unwrap().max_abs());
        worst_idem = worst_idem.max(restricted_sym_projector(spec).unwrap().idempotency_defect());
    }
    outcome(
        ranks_ok && worst_comm <= 1e-12 && worst_idem <= 1e-10,
        format!("ranks match binomials: {ranks_ok}, max commutator {worst_comm:.1e}, max idempotency defect {worst_idem:.1e}"),
    )
}

fn read_rows(path: &std::path::Path) -> Vec<[f64; 4]> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["sweep_var", "n0_closed", "n0_numeric", "symmetric_baseline"]
    );
    reader
        .deserialize::<(f64, f64, f64, f64)>()
        .map(|r| {
            let (a, b, c, d) = r.unwrap();
            [a, b, c, d]
        })
        .collect()
}

fn argmin(rows: &[[f64; 4]], col: usize) -> f64 {
    rows.iter().min_by(|a, b| a[col].total_cmp(&b[col])).unwrap()[0]
}

fn figure_reproduction() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    for preset in ["fig3a", "fig3b"] {
        let status = Command::new(env!("CARGO_BIN_EXE_finetti"))
            .args(["figures", preset])
            .env("FINETTI_OUTPUT_DIR", dir.path())
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    }
    let a = read_rows(&dir.path().join("fig3a.csv"));
    let b = read_rows(&dir.path().join("fig3b.csv"));

    // (a) monotone in |r|, on both sides of r = 0
    let mut monotone = true;
    for col in [1, 2] {
        for w in a.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if lo[0] >= 0.0 {
                monotone &= hi[col] > lo[col];
            } else if hi[0] <= 0.0 {
                monotone &= hi[col] < lo[col];
            }
        }
    }
    // (b) grid argmin over q of the closed-form curve near 1/2; the solved
    // curve's argmin is reported only
    let (q_closed, q_numeric) = (argmin(&b, 1), argmin(&b, 2));
    let centred = (q_closed - 0.5).abs() <= 0.02;
    // (c) never below the symmetric baseline, including r = 0
    let above = a.iter().chain(&b).all(|r| r[1] >= r[3] && r[2] >= r[3]);
    let t = start.elapsed();
    outcome(
        monotone && centred && above && within(t, 30.0),
        format!(
            "monotone in |r|: {monotone}; fig3b argmin q: n0_closed {q_closed:.2}, n0_numeric {q_numeric:.2} \
             (2 delta/(q(1-q)) is q-independent under delta_choice, so the solved curve is pulled to small q); \
             above baseline: {above}; {:.2}s",
            t.as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("variance law", variance_law),
        ("operator chain certified", operator_chain),
        ("gamma dominance", gamma_dominance),
        ("threshold values", threshold_values),
        ("documented chain discrepancy", chain_discrepancy),
        ("closed-form error bound", lemma3_evaluation),
        ("MC verification", mc_verification),
        ("sampling tail bound MC", lemma1_sanity),
        ("symmetric-subspace algebra", symmetric_algebra),
        ("figure reproduction", figure_reproduction),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({})",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            name,
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
