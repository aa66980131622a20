use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use finetti_core::bounds::{self, ProtocolParams};
use finetti_core::figures::{self, Curve, ThresholdRow};
use finetti_core::overlap::{self, OverlapSolution};
use finetti_core::projectors::{self, build_povm_set, headroom_dim, low_block};
use finetti_core::sim::{self, SourceModel};
use finetti_core::{BatchConfig, Error as CoreError, GaussianParams};

use crate::output::{self, emit, resolve};
use crate::svg::{line_plot, Series};
use crate::{
    BoundsArgs, Cli, Command, FiguresArgs, Format, GammaArgs, NumericalFailure, PointArgs, Preset, RegionsArgs,
    SimulateArgs, ThresholdArgs, VerifyArgs,
};

/// Largest cutoff `bounds --numeric-gamma` will eigensolve at.
const MAX_NUMERIC_DIM: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    K,
    N,
    Q,
    R,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

pub fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let (name, range) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=lo:hi:count, got {s}"))?;
    let param = match name.trim() {
        "k" => SweepParam::K,
        "n" => SweepParam::N,
        "q" => SweepParam::Q,
        "r" => SweepParam::R,
        other => return Err(format!("cannot sweep {other}; use k, n, q or r")),
    };
    let parts: Vec<&str> = range.split(':').map(str::trim).collect();
    let [lo, hi, count] = parts[..] else {
        return Err(format!("expected lo:hi:count, got {range}"));
    };
    let num = |v: &str| v.parse::<f64>().map_err(|_| format!("not a number: {v}"));
    let count = crate::parse_count(count)? as usize;
    if count == 0 {
        return Err("sweep needs at least one point".into());
    }
    Ok(Sweep {
        param,
        lo: num(lo)?,
        hi: num(hi)?,
        count,
    })
}

/// Grid of `(k, n, q, r)` points, the first sweep varying slowest.
fn grid(point: &PointArgs) -> Result<Vec<[f64; 4]>> {
    if point.sweep.len() > 2 {
        bail!(CoreError::InvalidParameter("at most two sweeps are allowed".into()));
    }
    if point.sweep.len() == 2 && point.sweep[0].param == point.sweep[1].param {
        bail!(CoreError::InvalidParameter(
            "the two sweeps must vary different parameters".into()
        ));
    }
    let mut points = vec![[point.k, point.n, point.q, point.r]];
    for s in &point.sweep {
        let idx = s.param as usize;
        let values = figures::linspace(s.lo, s.hi, s.count);
        points = points
            .iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut next = *p;
                    next[idx] = v;
                    next
                })
            })
            .collect();
    }
    Ok(points)
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Svg => "svg",
    }
}

struct Run<'a> {
    cli: &'a Cli,
    format: Format,
    target: Option<PathBuf>,
}

impl<'a> Run<'a> {
    fn start(cli: &'a Cli, params: &impl Serialize, default_format: Format, stem: &str) -> Result<Self> {
        let format = cli.global.format.unwrap_or(default_format);
        let target = resolve(cli.global.output.as_deref(), &format!("{stem}.{}", ext(format)));
        println!(
            "{}",
            output::header(cli.command.name(), params, cli.global.seed, target.as_deref())?
        );
        Ok(Self { cli, format, target })
    }

    fn rows<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let body = match self.format {
            Format::Csv => output::csv(rows)?,
            Format::Json => output::json(rows)?,
            Format::Svg => bail!(CoreError::InvalidParameter(format!(
                "{} has no SVG output",
                self.cli.command.name()
            ))),
        };
        emit(self.target.as_deref(), &body)
    }

    fn record<T: Serialize>(&self, record: &T) -> Result<()> {
        match self.format {
            Format::Json => emit(self.target.as_deref(), &output::json(record)?),
            _ => self.rows(std::slice::from_ref(record)),
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Threshold(a) => threshold(cli, a),
        Command::Bounds(a) => bounds_cmd(cli, a),
        Command::Gamma(a) => gamma(cli, a),
        Command::VerifyOperators(a) => verify(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Figures(a) => figures_cmd(cli, a),
        Command::Regions(a) => regions(cli, a),
    }
}

#[derive(Serialize)]
struct ThresholdReport {
    k: f64,
    n: f64,
    q: f64,
    r: f64,
    delta: f64,
    n0_closed: f64,
    n0_numeric: f64,
    chain_ratio: f64,
    symmetric_baseline: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary_prefactor_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_exponent_bracket: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    remainder_bracket: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lemma3_error: Option<f64>,
}

fn threshold(cli: &Cli, a: &ThresholdArgs) -> Result<()> {
    let points = grid(&a.point)?;
    let reports = points
        .iter()
        .map(|&[k, n, q, r]| {
            let n0_closed = bounds::closed_form_threshold(k, n, q, r)?;
            let verbose = |v: f64| a.verbose.then_some(v);
            Ok(ThresholdReport {
                k,
                n,
                q,
                r,
                delta: bounds::delta_choice(k, n, q),
                n0_closed,
                n0_numeric: bounds::solve_min_n0(k, n, q, r)?,
                chain_ratio: bounds::chain_ratio(k, n, q, r, n0_closed)?,
                symmetric_baseline: bounds::symmetric_baseline(k, n)?,
                summary_prefactor_threshold: verbose(bounds::summary_prefactor_threshold(k, n, q, r)?),
                q_exponent_bracket: verbose(bounds::q_exponent_bracket(n0_closed, r, q)),
                remainder_bracket: verbose(bounds::remainder_bracket(n0_closed, r, q)),
                lemma3_error: verbose(bounds::lemma3_error(k, n, q)),
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    let run = Run::start(
        cli,
        a,
        if a.point.sweep.is_empty() {
            Format::Json
        } else {
            Format::Csv
        },
        "threshold",
    )?;
    match reports.as_slice() {
        [one] => run.record(one),
        many => run.rows(many),
    }
}

#[derive(Serialize)]
struct BoundsRow {
    k: f64,
    n: f64,
    q: f64,
    r: f64,
    delta: f64,
    n0_closed: f64,
    n0_numeric: Option<f64>,
    gamma_analytic: f64,
    gamma_numeric: Option<f64>,
    lemma3_error: f64,
    chain_ratio: f64,
}

fn numeric_gamma_at(n0: f64, r: f64, q: f64, delta: f64) -> Result<f64> {
    let dim = headroom_dim(n0, r);
    if dim > MAX_NUMERIC_DIM {
        bail!(CoreError::Guard(format!(
            "numeric gamma at n0 = {n0:.2}, r = {r} needs dim {dim} > {MAX_NUMERIC_DIM}"
        )));
    }
    let set = build_povm_set(q, r, n0, dim)?;
    let keep = low_block(dim);
    let sol = overlap::gamma_numeric(&set.u1.compress(keep), &set.v1.compress(keep), delta, overlap::GAP_TOL)?;
    Ok(sol.value)
}

fn bounds_cmd(cli: &Cli, a: &BoundsArgs) -> Result<()> {
    let rows = grid(&a.point)?
        .iter()
        .map(|&[k, n, q, r]| {
            let rep = bounds::bound_report(k, n, q, r)?;
            let gamma_numeric = if a.numeric_gamma {
                Some(numeric_gamma_at(rep.n0_closed, r, q, rep.delta)?)
            } else {
                rep.gamma_numeric
            };
            Ok(BoundsRow {
                k,
                n,
                q,
                r,
                delta: rep.delta,
                n0_closed: rep.n0_closed,
                n0_numeric: rep.n0_numeric,
                gamma_analytic: rep.gamma_analytic,
                gamma_numeric,
                lemma3_error: rep.lemma3,
                chain_ratio: rep.chain_ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Run::start(cli, a, Format::Csv, "bounds")?.rows(&rows)
}

#[derive(Serialize)]
struct GammaReport {
    n0: f64,
    r: f64,
    q: f64,
    delta: f64,
    dim: usize,
    gamma_upper_bound: f64,
    #[serde(flatten)]
    solution: OverlapSolution,
}

fn gamma(cli: &Cli, a: &GammaArgs) -> Result<()> {
    let dim = a.dim.unwrap_or_else(|| headroom_dim(a.n0, a.r));
    let set = build_povm_set(a.q, a.r, a.n0, dim)?;
    let keep = low_block(dim);
    let solution = overlap::gamma_numeric(&set.u1.compress(keep), &set.v1.compress(keep), a.delta, a.tol)?;
    let report = GammaReport {
        n0: a.n0,
        r: a.r,
        q: a.q,
        delta: a.delta,
        dim,
        gamma_upper_bound: bounds::gamma_upper_bound(a.delta, a.n0, a.r, a.q)?,
        solution,
    };
    Run::start(cli, a, Format::Json, "gamma")?.record(&report)
}

fn verify(cli: &Cli, a: &VerifyArgs) -> Result<()> {
    if a.tol.is_nan() || a.tol < 0.0 {
        bail!(CoreError::InvalidParameter(format!(
            "tol must be nonnegative, got {}",
            a.tol
        )));
    }
    let dim = a.dim.unwrap_or_else(|| headroom_dim(a.n0, a.r));
    let set = build_povm_set(a.q, a.r, a.n0, dim)?;
    let records = projectors::certify_chain(&set, a.tol)?;
    Run::start(cli, a, Format::Json, "verify-operators")?.rows(&records)?;
    let failed: Vec<&str> = records
        .iter()
        .filter(|r| !r.supplementary && !r.pass)
        .map(|r| r.inequality_id.as_str())
        .collect();
    if !failed.is_empty() {
        bail!(NumericalFailure(format!(
            "certification failed for step(s) {}",
            failed.join(", ")
        )));
    }
    Ok(())
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    if let Some(path) = &a.batch {
        let configs = csv::Reader::from_path(path)
            .with_context(|| format!("reading batch file {}", path.display()))?
            .deserialize::<BatchConfig>()
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("parsing batch file {}", path.display()))?;
        if configs.is_empty() {
            bail!(CoreError::InvalidParameter("batch file has no configurations".into()));
        }
        let rows = sim::run_batch(&configs, cli.global.seed, cli.global.streams)?;
        return Run::start(cli, a, Format::Csv, "simulate")?.rows(&rows);
    }
    if a.tail_check {
        let rep = sim::lemma1_mc_check(a.k, a.n, a.p_u, a.p_v, a.delta, a.trials, cli.global.seed, &|x| x)?;
        return Run::start(cli, a, Format::Json, "simulate")?.record(&rep);
    }
    let protocol = ProtocolParams::with_delta_choice(a.k as f64, a.n as f64, a.q, a.r, a.n0)?;
    let params = GaussianParams::new(a.alpha_re, a.alpha_im, a.theta, a.source_r.unwrap_or(a.r))?;
    let source = if a.excess != 0.0 {
        SourceModel::with_excess_noise(params, a.excess)?
    } else {
        SourceModel::squeezed_coherent(params)?
    };
    let rec = sim::run_verification(&protocol, &source, a.trials, cli.global.seed, cli.global.streams)?;
    Run::start(cli, a, Format::Json, "simulate")?.record(&rec)
}

fn figure_svg(preset: Preset, rows: &[ThresholdRow]) -> String {
    let (title, x_label) = match preset {
        Preset::Fig3a => ("n0 against squeezing, q = 0.4", "r"),
        Preset::Fig3b => ("n0 against basis bias, r = 0.05", "q"),
    };
    let series = |label, f: fn(&ThresholdRow) -> f64| Series {
        label,
        points: rows.iter().map(|r| (r.sweep_var, f(r))).collect(),
    };
    line_plot(
        title,
        x_label,
        "n0",
        &[
            series("closed form", |r| r.n0_closed),
            series("solved chain", |r| r.n0_numeric),
            series("symmetric", |r| r.symmetric_baseline),
        ],
    )
}

fn figures_cmd(cli: &Cli, a: &FiguresArgs) -> Result<()> {
    let (rows, stem) = match a.preset {
        Preset::Fig3a => (figures::threshold_vs_squeezing(a.r_max, a.grid.unwrap_or(41))?, "fig3a"),
        Preset::Fig3b => (figures::threshold_vs_bias(0.01, 0.99, a.grid.unwrap_or(99))?, "fig3b"),
    };
    let run = Run::start(cli, a, Format::Csv, stem)?;
    if run.format == Format::Svg {
        emit(run.target.as_deref(), &figure_svg(a.preset, &rows))?;
    } else {
        run.rows(&rows)?;
    }
    if let Some(svg) = &a.svg {
        let path = resolve(Some(svg), "").unwrap_or_else(|| svg.clone());
        emit(Some(Path::new(&path)), &figure_svg(a.preset, &rows))?;
    }
    Ok(())
}

fn regions(cli: &Cli, a: &RegionsArgs) -> Result<()> {
    let points = figures::regions(a.n0, a.r, a.samples)?;
    let run = Run::start(cli, a, Format::Csv, "regions")?;
    if run.format != Format::Svg {
        return run.rows(&points);
    }
    let curve = |c: Curve, label| Series {
        label,
        points: points.iter().filter(|p| p.curve == c).map(|p| (p.x, p.y)).collect(),
    };
    let svg = line_plot(
        &format!("regions, n0 = {}, r = {}", a.n0, a.r),
        "x",
        "y",
        &[
            curve(Curve::Rectangle, "pass rectangle"),
            curve(Curve::Ellipse, "support ellipse"),
        ],
    );
    emit(run.target.as_deref(), &svg)
}
