//! Synthetic comparisons of Lewis weight sampling against uniform sampling.
//!
//! Each trial records `eps_empirical = (‖Ax̂ - b‖_p - OPT) / OPT`, where OPT
//! comes from solving the full problem. Trials derive their seeds from
//! the sweep seed and their grid position, so output does not depend on how
//! the work pool schedules them.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lewis::{uniform_sampler, DEFAULT_ITERATIONS};
use crate::linalg::{apply_sample, lp_norm, materialize, residual, DenseMatrix, VandermondeSpec};
use crate::seed::{derive_seed, rng_from_seed};
use crate::solver::solve_lp;
use crate::structured::{general_lewis_weights, solve_general_lp_with_weights, StructuredConfig};
use crate::vandermonde::{solve_vandermonde_lp, VanderConfig};

/// Tolerance for the full-problem solve that defines OPT.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lewis,
    Uniform,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lewis => "lewis",
            Method::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The swept quantity, used as the aggregation key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    P,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub method: Method,
    pub p: f64,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    /// `None` when a solve failed.
    pub eps_empirical: Option<f64>,
    /// Zero unless timing was requested.
    pub wall_time_s: f64,
}

impl TrialRecord {
    pub fn key(&self, axis: Axis) -> f64 {
        match axis {
            Axis::P => self.p,
            Axis::M => self.m as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileSummary {
    pub experiment: String,
    pub method: Method,
    pub key: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub count: usize,
}

/// Failed trials in one (experiment, method, key) group.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureCount {
    pub experiment: String,
    pub method: Method,
    pub key: f64,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateReport {
    pub summaries: Vec<QuantileSummary>,
    /// Groups with at least one failure; a group listed here and missing
    /// from `summaries` had no successful trial.
    pub failures: Vec<FailureCount>,
}

/// Vandermonde data: nodes `N(0, 1)` (optionally clipped), targets
/// `t^power` plus Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanderData {
    pub n: usize,
    pub d: usize,
    pub noise_sd: f64,
    pub power: u32,
    pub clip: Option<f64>,
}

impl VanderData {
    /// `n = 5000`, `d = 10`, target `t^5`, `|t| <= 6`, noise variance `1e5`.
    pub fn desk() -> Self {
        Self {
            n: 5000,
            d: 10,
            noise_sd: 1e5f64.sqrt(),
            power: 5,
            clip: Some(6.0),
        }
    }

    /// `n = 25000`, `d = 20`, target `t^10`, noise variance `1e10`.
    pub fn paper() -> Self {
        Self {
            n: 25_000,
            d: 20,
            noise_sd: 1e5,
            power: 10,
            clip: None,
        }
    }

    pub fn preset(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self::desk(),
            Scale::Paper => Self::paper(),
        }
    }
}

pub fn gen_vander_experiment(data: &VanderData, seed: u64) -> Result<(VandermondeSpec, Vec<f64>)> {
    if data.n == 0 {
        return Err(Error::param("n must be positive"));
    }
    if !(data.noise_sd.is_finite() && data.noise_sd >= 0.0) {
        return Err(Error::param(format!("bad noise_sd {}", data.noise_sd)));
    }
    let mut rng = rng_from_seed(seed);
    let nodes: Vec<f64> = (0..data.n)
        .map(|_| {
            let t: f64 = StandardNormal.sample(&mut rng);
            match data.clip {
                Some(c) => t.clamp(-c, c),
                None => t,
            }
        })
        .collect();
    let b = nodes
        .iter()
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            t.powi(data.power as i32) + data.noise_sd * z
        })
        .collect();
    Ok((VandermondeSpec::new(nodes, data.d)?, b))
}

/// Width of the informative top-left block and the number of its rows.
const BLOCK_COLS: usize = 6;
const BLOCK_ROWS: usize = 100;

/// Block-diagonal `[[G1, 0], [0, G2]]` with `G1` 100×6 and `G2` (n-100)×4,
/// `x*` with `N(0, 100^2)` leading entries, `b = A x* + z`.
pub fn gen_unstructured_experiment(n: usize, seed: u64) -> Result<(DenseMatrix, Vec<f64>)> {
    if n < 2 * BLOCK_ROWS {
        return Err(Error::param(format!("need n >= {}, got {n}", 2 * BLOCK_ROWS)));
    }
    let d = BLOCK_COLS + 4;
    let mut rng = rng_from_seed(seed);
    let mut data = vec![0.0; n * d];
    for (i, row) in data.chunks_mut(d).enumerate() {
        let cols = if i < BLOCK_ROWS { 0..BLOCK_COLS } else { BLOCK_COLS..d };
        for v in &mut row[cols] {
            *v = StandardNormal.sample(&mut rng);
        }
    }
    let a = DenseMatrix::new(n, d, data)?;
    let x: Vec<f64> = (0..d)
        .map(|j| {
            let z: f64 = StandardNormal.sample(&mut rng);
            if j < BLOCK_COLS {
                100.0 * z
            } else {
                z
            }
        })
        .collect();
    let b = a
        .matvec(&x)
        .into_iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + z
        })
        .collect();
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanderSweep {
    pub experiment: String,
    pub axis: Axis,
    pub data: VanderData,
    /// Every `(p, m)` pair of the two grids is run.
    pub ps: Vec<f64>,
    pub ms: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub eps: f64,
    pub rounding: bool,
    pub lewis_iterations: usize,
    pub solve_tol: f64,
    pub timing: bool,
}

impl VanderSweep {
    fn base(experiment: &str, axis: Axis, scale: Scale) -> Self {
        Self {
            experiment: experiment.to_string(),
            axis,
            data: VanderData::preset(scale),
            ps: Vec::new(),
            ms: Vec::new(),
            trials: match scale {
                Scale::Desk => 15,
                Scale::Paper => 30,
            },
            seed: 0,
            eps: 0.1,
            rounding: false,
            lewis_iterations: DEFAULT_ITERATIONS,
            solve_tol: ORACLE_TOL,
            timing: false,
        }
    }

    /// Error against `p` at fixed `m`.
    pub fn vander_p(scale: Scale) -> Self {
        let mut s = Self::base("vander-p", Axis::P, scale);
        match scale {
            Scale::Desk => {
                s.ps = vec![2.0, 4.0, 8.0, 16.0];
                s.ms = vec![800];
            }
            Scale::Paper => {
                s.ps = (2..=25).map(f64::from).collect();
                s.ms = vec![1000];
            }
        }
        s
    }

    /// Error against `m` at `p = 6`.
    pub fn vander_m(scale: Scale) -> Self {
        let mut s = Self::base("vander-m", Axis::M, scale);
        s.ps = vec![6.0];
        s.ms = match scale {
            Scale::Desk => vec![100, 200, 400, 800, 1600, 3000],
            Scale::Paper => vec![100, 250, 500, 1000, 1500, 2000, 2500, 3000],
        };
        s
    }

    fn grid(&self) -> Vec<(f64, usize)> {
        self.ps
            .iter()
            .flat_map(|&p| self.ms.iter().map(move |&m| (p, m)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnstructuredSweep {
    pub experiment: String,
    pub n: usize,
    pub p: f64,
    pub ms: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub eps: f64,
    pub rounding: bool,
    pub lewis_iterations: usize,
    pub solve_tol: f64,
    pub timing: bool,
}

impl UnstructuredSweep {
    pub fn preset(scale: Scale) -> Self {
        let (n, ms) = match scale {
            Scale::Desk => (5000, vec![25, 50, 100, 250, 500]),
            Scale::Paper => (25_000, vec![10, 25, 50, 100, 250, 500, 1000]),
        };
        Self {
            experiment: "unstructured".to_string(),
            n,
            p: 6.0,
            ms,
            trials: 50,
            seed: 0,
            eps: 0.1,
            rounding: false,
            lewis_iterations: DEFAULT_ITERATIONS,
            solve_tol: ORACLE_TOL,
            timing: false,
        }
    }
}

fn excess(err: f64, opt: f64) -> Option<f64> {
    let e = if opt > 0.0 {
        (err - opt) / opt
    } else if err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    e.is_finite().then_some(e)
}

fn timed<T>(timing: bool, f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, if timing { start.elapsed().as_secs_f64() } else { 0.0 })
}

fn uniform_trial(a: &DenseMatrix, b: &[f64], p: f64, m: usize, tol: f64, seed: u64) -> Result<Vec<f64>> {
    let sample = uniform_sampler(a.nrows(), m, p, seed)?;
    let (sa, sb) = apply_sample(&sample, a, b)?;
    Ok(solve_lp(&sa, &sb, p, tol)?.x)
}

fn check_grid(trials: usize, ms: &[usize], ps: &[f64]) -> Result<()> {
    if trials == 0 || ms.is_empty() || ps.is_empty() {
        return Err(Error::param("sweep needs at least one trial and grid point"));
    }
    if ms.contains(&0) {
        return Err(Error::param("sample sizes must be positive"));
    }
    if let Some(p) = ps.iter().find(|p| !(p.is_finite() && **p >= 1.0)) {
        return Err(Error::param(format!("p must be finite and >= 1, got {p}")));
    }
    Ok(())
}

struct Job {
    trial: usize,
    p: f64,
    m: usize,
    seed: u64,
}

fn jobs(grid: &[(f64, usize)], trials: usize, seed: u64) -> Vec<Job> {
    grid.iter()
        .enumerate()
        .flat_map(|(g, &(p, m))| {
            (0..trials).map(move |t| Job {
                trial: t,
                p,
                m,
                seed: derive_seed(seed, &[1, g as u64, t as u64]),
            })
        })
        .collect()
}

fn records(
    experiment: &str,
    job: &Job,
    lewis: (Option<f64>, f64),
    uniform: (Option<f64>, f64),
) -> [TrialRecord; 2] {
    let rec = |method, (eps, t)| TrialRecord {
        experiment: experiment.to_string(),
        method,
        p: job.p,
        m: job.m,
        trial: job.trial,
        seed: job.seed,
        eps_empirical: eps,
        wall_time_s: t,
    };
    [rec(Method::Lewis, lewis), rec(Method::Uniform, uniform)]
}

/// One fresh Vandermonde instance per trial, shared across grid points.
pub fn run_vander_sweep(cfg: &VanderSweep) -> Result<Vec<TrialRecord>> {
    check_grid(cfg.trials, &cfg.ms, &cfg.ps)?;
    let grid = cfg.grid();
    let jobs = jobs(&grid, cfg.trials, cfg.seed);
    let out: Vec<[TrialRecord; 2]> = jobs
        .par_iter()
        .map(|job| -> Result<[TrialRecord; 2]> {
            let (spec, b) = gen_vander_experiment(&cfg.data, derive_seed(cfg.seed, &[0, job.trial as u64]))?;
            let a = materialize(&spec);
            let norm = |x: &[f64]| lp_norm(&residual(&a, x, &b), job.p);
            let opt = solve_lp(&a, &b, job.p, cfg.solve_tol).and_then(|s| norm(&s.x));
            let Ok(opt) = opt else {
                return Ok(records(&cfg.experiment, job, (None, 0.0), (None, 0.0)));
            };
            let lewis = timed(cfg.timing, || {
                let mut vc = VanderConfig::new(job.p, cfg.eps);
                vc.m1 = Some(job.m);
                vc.rounding = cfg.rounding;
                vc.lewis_iterations = cfg.lewis_iterations;
                vc.solve_tol = Some(cfg.solve_tol);
                solve_vandermonde_lp(&spec, &b, &vc, derive_seed(job.seed, &[1]))
                    .and_then(|o| norm(&o.x))
                    .ok()
                    .and_then(|e| excess(e, opt))
            });
            let uniform = timed(cfg.timing, || {
                uniform_trial(&a, &b, job.p, job.m, cfg.solve_tol, derive_seed(job.seed, &[2]))
                    .and_then(|x| norm(&x))
                    .ok()
                    .and_then(|e| excess(e, opt))
            });
            Ok(records(&cfg.experiment, job, lewis, uniform))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// One instance for the whole sweep; variance comes from sampling alone.
pub fn run_unstructured_sweep(cfg: &UnstructuredSweep) -> Result<Vec<TrialRecord>> {
    check_grid(cfg.trials, &cfg.ms, &[cfg.p])?;
    let (a, b) = gen_unstructured_experiment(cfg.n, derive_seed(cfg.seed, &[0]))?;
    let norm = |x: &[f64]| lp_norm(&residual(&a, x, &b), cfg.p);
    let opt = norm(&solve_lp(&a, &b, cfg.p, cfg.solve_tol)?.x)?;
    let mut sc = StructuredConfig::new(cfg.p, cfg.eps);
    sc.rounding = cfg.rounding;
    sc.lewis_iterations = cfg.lewis_iterations;
    sc.solve_tol = Some(cfg.solve_tol);
    let weights = general_lewis_weights(&a, &sc)?;

    let grid: Vec<(f64, usize)> = cfg.ms.iter().map(|&m| (cfg.p, m)).collect();
    let jobs = jobs(&grid, cfg.trials, cfg.seed);
    Ok(jobs
        .par_iter()
        .map(|job| {
            let lewis = timed(cfg.timing, || {
                let mut sc = sc.clone();
                sc.m1 = Some(job.m);
                solve_general_lp_with_weights(&a, &b, &sc, &weights, derive_seed(job.seed, &[1]))
                    .and_then(|o| norm(&o.x))
                    .ok()
                    .and_then(|e| excess(e, opt))
            });
            let uniform = timed(cfg.timing, || {
                uniform_trial(&a, &b, job.p, job.m, cfg.solve_tol, derive_seed(job.seed, &[2]))
                    .and_then(|x| norm(&x))
                    .ok()
                    .and_then(|e| excess(e, opt))
            });
            records(&cfg.experiment, job, lewis, uniform)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect())
}

/// Linear interpolation between order statistics of sorted `v`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn aggregate(records: &[TrialRecord], axis: Axis) -> AggregateReport {
    // keys are positive, so their bit patterns sort like the values
    let mut groups: BTreeMap<(&str, Method, u64), (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let g = groups
            .entry((r.experiment.as_str(), r.method, r.key(axis).to_bits()))
            .or_default();
        match r.eps_empirical {
            Some(e) => g.0.push(e),
            None => g.1 += 1,
        }
    }
    let mut report = AggregateReport::default();
    for ((experiment, method, key), (mut vals, failed)) in groups {
        let key = f64::from_bits(key);
        if failed > 0 {
            report.failures.push(FailureCount {
                experiment: experiment.to_string(),
                method,
                key,
                failed,
            });
        }
        if vals.is_empty() {
            continue;
        }
        vals.sort_by(f64::total_cmp);
        report.summaries.push(QuantileSummary {
            experiment: experiment.to_string(),
            method,
            key,
            median: quantile(&vals, 0.5),
            q25: quantile(&vals, 0.25),
            q75: quantile(&vals, 0.75),
            count: vals.len(),
        });
    }
    report
}

fn write_config<W: Write>(out: &mut W, config: Option<&serde_json::Value>) -> Result<()> {
    if let Some(c) = config {
        let line = serde_json::to_string(c).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "# config: {line}")?;
    }
    Ok(())
}

/// Trial CSV, preceded by a `# config:` line when `config` is given.
pub fn write_trials_csv<W: Write>(
    mut out: W,
    config: Option<&serde_json::Value>,
    records: &[TrialRecord],
) -> Result<()> {
    write_config(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record([
            "experiment",
            "method",
            "p",
            "m",
            "trial",
            "seed",
            "eps_empirical",
            "wall_time_s",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(
    mut out: W,
    config: Option<&serde_json::Value>,
    summaries: &[QuantileSummary],
) -> Result<()> {
    write_config(&mut out, config)?;
    let mut w = csv::Writer::from_writer(out);
    for s in summaries {
        w.serialize(s)?;
    }
    if summaries.is_empty() {
        w.write_record(["experiment", "method", "key", "median", "q25", "q75", "count"])?;
    }
    w.flush()?;
    Ok(())
}

fn color(m: Method) -> &'static str {
    match m {
        Method::Lewis => "#1f77b4",
        Method::Uniform => "#d62728",
    }
}

/// Medians with interquartile bars on a log-scale y axis.
pub fn render_svg(summaries: &[QuantileSummary], title: &str, x_label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 70.0;
    const R: f64 = 130.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    let floor = 1e-12;
    let ly = |v: f64| v.max(floor).log10();
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in summaries {
        x0 = x0.min(s.key);
        x1 = x1.max(s.key);
        y0 = y0.min(ly(s.q25));
        y1 = y1.max(ly(s.q75));
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, -1.0, 0.0);
    }
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let xs = |k: f64| L + (W - L - R) * if x1 > x0 { (k - x0) / (x1 - x0) } else { 0.5 };
    let ys = |v: f64| T + (H - T - B) * (y1 - ly(v)) / (y1 - y0);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n\
         <line x1=\"{L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{L}\" y1=\"{T}\" x2=\"{L}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">relative error</text>\n",
        (W - R + L) / 2.0,
        escape(title),
        H - B,
        W - R,
        H - B,
        H - B,
        (W - R + L) / 2.0,
        H - 12.0,
        escape(x_label),
        (H - B + T) / 2.0,
        (H - B + T) / 2.0,
    );
    for e in (y0 as i32)..=(y1 as i32) {
        let y = ys(10f64.powi(e));
        svg += &format!(
            "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{L}\" y2=\"{y:.1}\" stroke=\"black\"/>\
             <text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">1e{e}</text>\n",
            L - 5.0,
            L - 8.0,
            y + 4.0
        );
    }
    let mut keys: Vec<f64> = summaries.iter().map(|s| s.key).collect();
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    for k in keys {
        let x = xs(k);
        svg += &format!(
            "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{k}</text>\n",
            H - B + 16.0
        );
    }
    for (i, method) in [Method::Lewis, Method::Uniform].into_iter().enumerate() {
        let pts: Vec<&QuantileSummary> = summaries.iter().filter(|s| s.method == method).collect();
        if pts.is_empty() {
            continue;
        }
        let c = color(method);
        let path: Vec<String> = pts
            .iter()
            .map(|s| format!("{:.1},{:.1}", xs(s.key), ys(s.median)))
            .collect();
        svg += &format!(
            "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        );
        for s in &pts {
            let x = xs(s.key);
            svg += &format!(
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"{c}\"/>\
                 <circle cx=\"{x:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{c}\"/>\n",
                ys(s.q25),
                ys(s.q75),
                ys(s.median)
            );
        }
        let ly = T + 10.0 + 20.0 * i as f64;
        svg += &format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{c}\" stroke-width=\"2\"/>\
             <text x=\"{}\" y=\"{}\">{method}</text>\n",
            W - R + 15.0,
            W - R + 40.0,
            W - R + 46.0,
            ly + 4.0
        );
    }
    svg += "</svg>\n";
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: Method, m: usize, e: Option<f64>) -> TrialRecord {
        TrialRecord {
            experiment: "x".into(),
            method,
            p: 6.0,
            m,
            trial: 0,
            seed: 0,
            eps_empirical: e,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn quantile_examples() {
        let r: Vec<_> = [1.0, 3.0, 2.0]
            .iter()
            .map(|&e| rec(Method::Lewis, 10, Some(e)))
            .collect();
        let s = &aggregate(&r, Axis::M).summaries[0];
        assert_eq!((s.median, s.q25, s.q75, s.count), (2.0, 1.5, 2.5, 3));

        let s = &aggregate(&[rec(Method::Lewis, 1, Some(0.7))], Axis::M).summaries[0];
        assert_eq!((s.median, s.q25, s.q75), (0.7, 0.7, 0.7));

        let r = vec![rec(Method::Uniform, 4, Some(0.2)); 5];
        let s = &aggregate(&r, Axis::M).summaries[0];
        assert_eq!((s.median, s.q25, s.q75), (0.2, 0.2, 0.2));
    }

    #[test]
    fn aggregate_orders_and_counts_failures() {
        let r = vec![
            rec(Method::Uniform, 100, Some(1.0)),
            rec(Method::Lewis, 100, None),
            rec(Method::Lewis, 50, Some(0.5)),
            rec(Method::Lewis, 100, Some(0.1)),
            rec(Method::Uniform, 50, None),
        ];
        let rep = aggregate(&r, Axis::M);
        let keys: Vec<_> = rep.summaries.iter().map(|s| (s.method, s.key)).collect();
        assert_eq!(
            keys,
            vec![(Method::Lewis, 50.0), (Method::Lewis, 100.0), (Method::Uniform, 100.0)]
        );
        assert_eq!(rep.failures.len(), 2);
        assert_eq!(rep.summaries[1].count, 1);
    }

    #[test]
    fn unstructured_block_shape() {
        let (a, b) = gen_unstructured_experiment(300, 1).unwrap();
        assert_eq!((a.nrows(), a.ncols(), b.len()), (300, 10, 300));
        for i in 100..300 {
            assert!(a.row(i)[..6].iter().all(|v| *v == 0.0));
        }
        for i in 0..100 {
            assert!(a.row(i)[6..].iter().all(|v| *v == 0.0));
        }
        assert!(gen_unstructured_experiment(199, 1).is_err());
    }

    #[test]
    fn noiseless_vander_data_is_realizable() {
        let data = VanderData {
            n: 50,
            d: 4,
            noise_sd: 0.0,
            power: 3,
            clip: Some(2.0),
        };
        let (spec, b) = gen_vander_experiment(&data, 3).unwrap();
        for (t, v) in spec.nodes().iter().zip(&b) {
            assert!(t.abs() <= 2.0);
            assert_eq!(*v, t.powi(3));
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let cfg = serde_json::json!({"seed": 1});
        write_trials_csv(&mut buf, Some(&cfg), &[rec(Method::Lewis, 10, Some(0.25)), rec(Method::Uniform, 10, None)])
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# config: {\"seed\":1}");
        assert_eq!(lines[1], "experiment,method,p,m,trial,seed,eps_empirical,wall_time_s");
        assert_eq!(lines[2], "x,lewis,6.0,10,0,0,0.25,0.0");
        assert_eq!(lines[3], "x,uniform,6.0,10,0,0,,0.0");

        let mut buf = Vec::new();
        let rep = aggregate(&[rec(Method::Lewis, 10, Some(0.25))], Axis::M);
        write_summary_csv(&mut buf, None, &rep.summaries).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("experiment,method,key,median,q25,q75,count\nx,lewis,10.0,"));
    }

    #[test]
    fn svg_mentions_both_methods() {
        let r = vec![
            rec(Method::Lewis, 10, Some(0.01)),
            rec(Method::Uniform, 10, Some(0.5)),
            rec(Method::Lewis, 20, Some(0.005)),
        ];
        let svg = render_svg(&aggregate(&r, Axis::M).summaries, "error vs m", "m");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(">lewis<") && svg.contains(">uniform<"));
    }

    #[test]
    fn tiny_sweep_is_deterministic() {
        let mut cfg = VanderSweep::vander_p(Scale::Desk);
        cfg.data.n = 300;
        cfg.data.d = 4;
        cfg.data.power = 2;
        cfg.data.noise_sd = 3.0;
        cfg.ps = vec![2.0, 4.0];
        cfg.ms = vec![60];
        cfg.trials = 2;
        let a = run_vander_sweep(&cfg).unwrap();
        let b = run_vander_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        assert!(a.iter().all(|r| r.eps_empirical.is_some_and(|e| e >= -1e-6)));
    }
}
