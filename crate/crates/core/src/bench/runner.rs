//! Scenario drivers for the accuracy, dimension, noise and averaging tables.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::data::{gen_queries, CellSelection, NoiseSpec, ProceduralMesh, QuerySet, QuerySpec};
use super::functions::TestFunction;
use super::stats::{compute_noise_ratios, compute_stats, log_log_slope, ErrorStats, NoiseRatios};
use crate::error::{Error, Result};
use crate::layers::{evaluate, EvalConfig};
use crate::mesh::Lattice;
use crate::model::{validate_training_set, AxisFlag, Estimate, Method, Point};
use crate::neighborhood::{CombinationStrategy, DataView, ScatteredView};
use crate::smooth::SmoothConfig;

/// Domain of every generated mesh axis.
pub const DOMAIN: (f64, f64) = (0.0, 3.0);

/// Dimensions of the high-dimensional scenarios.
pub const HIGH_DIMS: [usize; 4] = [10, 30, 50, 100];

/// Nodes per axis of the high-dimensional meshes.
pub const HIGH_DIM_NODES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Table {
    /// Gradient-method accuracy on the irregular surface vs. mesh density.
    T1,
    /// Smooth vs. gradient method on three 3-D surfaces.
    T2,
    /// Both methods on H1/H2 in 10 to 100 dimensions.
    T3,
    /// Noise attenuation ratios vs. dimension.
    T4,
    /// Error vs. number of averaged point combinations.
    Averaging,
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Table::T1 => "T1",
            Table::T2 => "T2",
            Table::T3 => "T3",
            Table::T4 => "T4",
            Table::Averaging => "averaging",
        })
    }
}

impl FromStr for Table {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T1" | "t1" => Ok(Table::T1),
            "T2" | "t2" => Ok(Table::T2),
            "T3" | "t3" => Ok(Table::T3),
            "T4" | "t4" => Ok(Table::T4),
            "averaging" => Ok(Table::Averaging),
            other => Err(Error::InvalidArgument(format!("unknown table `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Minutes on a laptop at most.
    Small,
    Medium,
    /// Includes the multi-million-point meshes.
    Large,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Small => "small",
            Scale::Medium => "medium",
            Scale::Large => "large",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Scale::Small),
            "medium" => Ok(Scale::Medium),
            "large" => Ok(Scale::Large),
            other => Err(Error::InvalidArgument(format!("unknown scale `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchConfig {
    pub table: Table,
    pub scale: Scale,
    pub seed: u64,
    pub workers: usize,
    /// Record wall-clock times. Off by default so that reports are
    /// byte-identical between runs.
    pub timing: bool,
    /// Overrides the per-scenario query budget.
    pub query_budget: Option<usize>,
    #[serde(skip)]
    pub smooth: SmoothConfig,
}

impl BenchConfig {
    pub fn new(table: Table, scale: Scale, seed: u64) -> Self {
        BenchConfig {
            table,
            scale,
            seed,
            workers: 1,
            timing: false,
            query_budget: None,
            smooth: SmoothConfig::default(),
        }
    }
}

/// How often each axis resolution occurred in a smooth-method scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlagCounts {
    pub corrected: usize,
    pub boundary_fallback: usize,
    pub newton_fallback: usize,
    pub chord_fallback: usize,
}

impl FlagCounts {
    fn add(&mut self, e: &Estimate) {
        for a in &e.diagnostics.axes {
            match a.flag {
                AxisFlag::Corrected => self.corrected += 1,
                AxisFlag::BoundaryFallback => self.boundary_fallback += 1,
                AxisFlag::NewtonFallback => self.newton_fallback += 1,
                AxisFlag::ChordFallback => self.chord_fallback += 1,
            }
        }
    }
}

/// One scenario of a report, one JSON line when emitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub table: Table,
    pub scenario: String,
    pub function: String,
    pub method: Method,
    pub dim: usize,
    pub nodes_per_axis: Option<usize>,
    /// Training point count; absent when it does not fit in 64 bits.
    pub points: Option<u64>,
    pub domain: (f64, f64),
    pub noise: NoiseSpec,
    pub combinations: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub stats: ErrorStats,
    pub time_per_query_s: f64,
    /// Queries that failed outright and were left out of the statistics.
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_to_gradient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_ratios: Option<NoiseRatios>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<FlagCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: BenchConfig,
    pub rows: Vec<ReportRow>,
}

/// Estimates for a batch of queries, in input order.
#[derive(Debug, Clone)]
pub struct BatchResult {
    /// `None` where the query failed.
    pub values: Vec<Option<f64>>,
    pub flags: FlagCounts,
    pub wall_time_s: f64,
}

impl BatchResult {
    pub fn failed(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Evaluates every query against layer 0. A single worker runs the queries
/// in a plain loop, which is what per-query timings refer to.
pub fn evaluate_batch(view: DataView<'_>, queries: &[Vec<f64>], config: &EvalConfig, workers: usize) -> Result<BatchResult> {
    if workers == 0 {
        return Err(Error::InvalidArgument("worker count must be at least 1".into()));
    }
    let start = Instant::now();
    let results: Vec<Result<Estimate>> = if workers == 1 {
        queries.iter().map(|q| evaluate(view, q, config, 0)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| queries.par_iter().map(|q| evaluate(view, q, config, 0)).collect())
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    let mut flags = FlagCounts::default();
    let values = results
        .iter()
        .map(|r| {
            r.as_ref().ok().map(|e| {
                flags.add(e);
                e.value
            })
        })
        .collect();
    Ok(BatchResult {
        values,
        flags,
        wall_time_s,
    })
}

/// Queries per second for each worker count.
pub fn measure_throughput(
    view: DataView<'_>,
    queries: &[Vec<f64>],
    config: &EvalConfig,
    worker_counts: &[usize],
) -> Result<Vec<(usize, f64)>> {
    worker_counts
        .iter()
        .map(|&w| {
            let r = evaluate_batch(view, queries, config, w)?;
            Ok((w, queries.len() as f64 / r.wall_time_s.max(1e-12)))
        })
        .collect()
}

/// Statistics over the queries that succeeded.
fn stats_of(batch: &BatchResult, queries: &QuerySet, timing: bool) -> Result<ErrorStats> {
    let mut est = Vec::with_capacity(queries.len());
    let mut truth = Vec::with_capacity(queries.len());
    let mut reference = Vec::with_capacity(queries.len());
    for (i, v) in batch.values.iter().enumerate() {
        if let Some(v) = v {
            est.push(*v);
            truth.push(queries.truths[i]);
            reference.push(queries.reference_truths[i]);
        }
    }
    let mut stats = compute_stats(&est, &truth, &reference)?;
    if timing {
        stats.wall_time_s = batch.wall_time_s;
    }
    Ok(stats)
}

struct Scenario<'a> {
    config: &'a BenchConfig,
    mesh: &'a ProceduralMesh,
    queries: &'a QuerySet,
    name: String,
}

impl Scenario<'_> {
    fn run(&self, method: Method) -> Result<(ReportRow, BatchResult)> {
        let eval = EvalConfig {
            method,
            smooth: self.config.smooth,
            ..EvalConfig::default()
        };
        let batch = evaluate_batch(DataView::Mesh(self.mesh), &self.queries.queries, &eval, self.config.workers)?;
        let stats = stats_of(&batch, self.queries, self.config.timing)?;
        let n = self.mesh.dim();
        let nodes = self.mesh.node_count(0);
        let row = ReportRow {
            table: self.config.table,
            scenario: self.name.clone(),
            function: self.mesh.function().to_string(),
            method,
            dim: n,
            nodes_per_axis: Some(nodes),
            points: (nodes as u64).checked_pow(n as u32),
            domain: DOMAIN,
            noise: self.mesh.noise(),
            combinations: 1,
            seed: self.config.seed,
            time_per_query_s: stats.time_per_query_s(),
            stats,
            failed: batch.failed(),
            ratio_to_gradient: None,
            noise_ratios: None,
            slope: None,
            flags: (method == Method::Smooth).then_some(batch.flags),
        };
        Ok((row, batch))
    }
}

fn budget(config: &BenchConfig, small: usize, medium: usize, large: usize) -> usize {
    config.query_budget.unwrap_or(match config.scale {
        Scale::Small => small,
        Scale::Medium => medium,
        Scale::Large => large,
    })
}

/// Runs one table. Every random choice derives from `config.seed`.
pub fn run_benchmark(config: &BenchConfig) -> Result<Report> {
    config.smooth.validate()?;
    if config.workers == 0 {
        return Err(Error::InvalidArgument("worker count must be at least 1".into()));
    }
    let rows = match config.table {
        Table::T1 => run_t1(config)?,
        Table::T2 => run_t2(config)?,
        Table::T3 => run_t3(config)?,
        Table::T4 => run_t4(config)?,
        Table::Averaging => run_averaging(config)?,
    };
    Ok(Report { config: *config, rows })
}

/// Mesh densities of the irregular-surface table.
pub fn t1_nodes(scale: Scale) -> &'static [usize] {
    match scale {
        Scale::Small => &[20, 29],
        Scale::Medium => &[20, 29, 46],
        Scale::Large => &[20, 29, 46, 93, 139],
    }
}

fn run_t1(config: &BenchConfig) -> Result<Vec<ReportRow>> {
    let spec = QuerySpec {
        budget: budget(config, 5000, 5000, 5000),
        ..QuerySpec::default()
    };
    let mut rows = Vec::new();
    for &nodes in t1_nodes(config.scale) {
        let mesh = ProceduralMesh::new(TestFunction::T1, nodes, DOMAIN, 0.0, NoiseSpec::None, config.seed)?;
        let queries = gen_queries(&mesh, &spec, config.seed)?;
        let scenario = Scenario {
            config,
            mesh: &mesh,
            queries: &queries,
            name: format!("{}", nodes.pow(3)),
        };
        rows.push(scenario.run(Method::Gradient)?.0);
    }
    Ok(rows)
}

/// Both methods on one mesh; the smooth row carries the error ratio.
fn compare_methods(scenario: &Scenario<'_>) -> Result<Vec<ReportRow>> {
    let (grad, _) = scenario.run(Method::Gradient)?;
    let (mut smooth, _) = scenario.run(Method::Smooth)?;
    smooth.ratio_to_gradient = Some(smooth.stats.avg_abs_err / grad.stats.avg_abs_err);
    Ok(vec![grad, smooth])
}

pub fn t2_nodes(scale: Scale) -> &'static [usize] {
    match scale {
        Scale::Small => &[20],
        Scale::Medium => &[20, 49],
        Scale::Large => &[20, 49, 100],
    }
}

fn run_t2(config: &BenchConfig) -> Result<Vec<ReportRow>> {
    let spec = QuerySpec {
        budget: budget(config, 5000, 5000, 5000),
        selection: CellSelection::FullStencil,
        ..QuerySpec::default()
    };
    let mut rows = Vec::new();
    for &nodes in t2_nodes(config.scale) {
        for function in [TestFunction::S1, TestFunction::S2, TestFunction::T1] {
            let mesh = ProceduralMesh::new(function, nodes, DOMAIN, 0.0, NoiseSpec::None, config.seed)?;
            let queries = gen_queries(&mesh, &spec, config.seed)?;
            rows.extend(compare_methods(&Scenario {
                config,
                mesh: &mesh,
                queries: &queries,
                name: format!("{}", nodes.pow(3)),
            })?);
        }
    }
    Ok(rows)
}

fn run_t3(config: &BenchConfig) -> Result<Vec<ReportRow>> {
    let spec = QuerySpec {
        budget: budget(config, 200, 1000, 5000),
        selection: CellSelection::FullStencil,
        ..QuerySpec::default()
    };
    let mut rows = Vec::new();
    for &dim in &HIGH_DIMS {
        for function in [TestFunction::H1 { dim }, TestFunction::H2 { dim }] {
            let mesh = ProceduralMesh::new(function, HIGH_DIM_NODES, DOMAIN, 0.0, NoiseSpec::None, config.seed)?;
            let queries = gen_queries(&mesh, &spec, config.seed)?;
            rows.extend(compare_methods(&Scenario {
                config,
                mesh: &mesh,
                queries: &queries,
                name: format!("n={dim}"),
            })?);
        }
    }
    Ok(rows)
}

/// Noise regimes of the noise table.
pub const T4_NOISE: [NoiseSpec; 2] = [NoiseSpec::Normal { sigma: 0.1 }, NoiseSpec::Uniform { half_width: 0.2 }];

/// Noise ratios of the smooth method over `queries`. The observed noisy
/// value for each query is its true value plus the noise realised at its
/// reference node, i.e. a typical noisy observation next to the query.
pub fn noise_ratios_for(mesh: &ProceduralMesh, queries: &QuerySet, computed: &[Option<f64>]) -> Result<NoiseRatios> {
    let mut noisy = Vec::new();
    let mut comp = Vec::new();
    let mut orig = Vec::new();
    for (i, c) in computed.iter().enumerate() {
        if let Some(c) = c {
            noisy.push(queries.truths[i] + mesh.node_noise(&queries.cells[i]));
            comp.push(*c);
            orig.push(queries.truths[i]);
        }
    }
    compute_noise_ratios(&noisy, &comp, &orig)
}

fn run_t4(config: &BenchConfig) -> Result<Vec<ReportRow>> {
    let spec = QuerySpec {
        budget: budget(config, 300, 1000, 5000),
        selection: CellSelection::FullStencil,
        ..QuerySpec::default()
    };
    let mut rows = Vec::new();
    for noise in T4_NOISE {
        for &dim in &HIGH_DIMS {
            for function in [TestFunction::H1 { dim }, TestFunction::H2 { dim }] {
                let mesh = ProceduralMesh::new(function, HIGH_DIM_NODES, DOMAIN, 0.0, noise, config.seed)?;
                let queries = gen_queries(&mesh, &spec, config.seed)?;
                let scenario = Scenario {
                    config,
                    mesh: &mesh,
                    queries: &queries,
                    name: format!("n={dim}"),
                };
                let (mut row, batch) = scenario.run(Method::Smooth)?;
                row.noise_ratios = Some(noise_ratios_for(&mesh, &queries, &batch.values)?);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Combination counts of the averaging study.
pub const AVERAGING_COUNTS: [usize; 4] = [1, 4, 16, 64];

/// Scattered 2-D data on the unit square: an affine surface plus normal
/// noise, so every error comes from the noise and averaging independent
/// combinations should shrink it like `1/√C`.
pub struct AveragingSetup {
    pub points: usize,
    pub queries: usize,
    pub sigma: f64,
}

impl AveragingSetup {
    pub fn for_scale(scale: Scale) -> Self {
        match scale {
            Scale::Small => AveragingSetup {
                points: 4000,
                queries: 300,
                sigma: 0.1,
            },
            Scale::Medium => AveragingSetup {
                points: 8000,
                queries: 1000,
                sigma: 0.1,
            },
            Scale::Large => AveragingSetup {
                points: 16000,
                queries: 4000,
                sigma: 0.1,
            },
        }
    }
}

fn averaging_surface(x: &[f64]) -> f64 {
    1.0 + 2.0 * x[0] - 0.5 * x[1]
}

/// Mean absolute error for each combination count, in `counts` order.
pub fn averaging_errors(setup: &AveragingSetup, counts: &[usize], seed: u64, workers: usize) -> Result<Vec<(ErrorStats, usize)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, setup.sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let points: Vec<Point> = (0..setup.points)
        .map(|_| {
            let x = vec![rng.random::<f64>(), rng.random::<f64>()];
            let y = averaging_surface(&x) + noise.sample(&mut rng);
            Point::new(x, y)
        })
        .collect();
    let training = validate_training_set(points, 2, 1)?;
    let view = ScatteredView::new(&training);
    let queries: Vec<Vec<f64>> = (0..setup.queries)
        .map(|_| vec![rng.random_range(0.25..0.75), rng.random_range(0.25..0.75)])
        .collect();
    let truths: Vec<f64> = queries.iter().map(|q| averaging_surface(q)).collect();
    let query_set = QuerySet {
        reference_truths: queries
            .iter()
            .map(|q| {
                let (i, _) = view.nearest(q, 1)[0];
                averaging_surface(training.coords(i))
            })
            .collect(),
        cells: Vec::new(),
        queries,
        truths,
    };
    counts
        .iter()
        .map(|&c| {
            let eval = EvalConfig {
                method: Method::Gradient,
                combinations: c,
                strategy: CombinationStrategy::Disjoint,
                ..EvalConfig::default()
            };
            let batch = evaluate_batch(DataView::Scattered(&view), &query_set.queries, &eval, workers)?;
            Ok((stats_of(&batch, &query_set, true)?, batch.failed()))
        })
        .collect()
}

fn run_averaging(config: &BenchConfig) -> Result<Vec<ReportRow>> {
    let setup = AveragingSetup {
        queries: config.query_budget.unwrap_or(AveragingSetup::for_scale(config.scale).queries),
        ..AveragingSetup::for_scale(config.scale)
    };
    let results = averaging_errors(&setup, &AVERAGING_COUNTS, config.seed, config.workers)?;
    let errors: Vec<f64> = results.iter().map(|(s, _)| s.avg_abs_err).collect();
    let counts: Vec<f64> = AVERAGING_COUNTS.iter().map(|&c| c as f64).collect();
    let slope = log_log_slope(&counts, &errors)?;
    Ok(results
        .into_iter()
        .zip(AVERAGING_COUNTS)
        .map(|((mut stats, failed), c)| {
            if !config.timing {
                stats.wall_time_s = 0.0;
            }
            ReportRow {
                table: Table::Averaging,
                scenario: format!("C={c}"),
                function: "affine:2".into(),
                method: Method::Gradient,
                dim: 2,
                nodes_per_axis: None,
                points: Some(setup.points as u64),
                domain: (0.0, 1.0),
                noise: NoiseSpec::Normal { sigma: setup.sigma },
                combinations: c,
                seed: config.seed,
                time_per_query_s: stats.time_per_query_s(),
                stats,
                failed,
                ratio_to_gradient: None,
                noise_ratios: None,
                slope: Some(slope),
                flags: None,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for t in [Table::T1, Table::T2, Table::T3, Table::T4, Table::Averaging] {
            assert_eq!(t.to_string().parse::<Table>().unwrap(), t);
        }
        for s in [Scale::Small, Scale::Medium, Scale::Large] {
            assert_eq!(s.to_string().parse::<Scale>().unwrap(), s);
        }
        assert!("T9".parse::<Table>().is_err());
    }

    #[test]
    fn t1_small_has_two_rows() {
        let mut cfg = BenchConfig::new(Table::T1, Scale::Small, 3);
        cfg.query_budget = Some(50);
        let report = run_benchmark(&cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].points, Some(8000));
        assert_eq!(report.rows[1].points, Some(24389));
    }

    #[test]
    fn reports_repeat_exactly() {
        let mut cfg = BenchConfig::new(Table::T2, Scale::Small, 11);
        cfg.query_budget = Some(30);
        let a = serde_json::to_string(&run_benchmark(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&run_benchmark(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_batch_keeps_order() {
        let mesh = ProceduralMesh::new(TestFunction::T1, 8, DOMAIN, 0.2, NoiseSpec::None, 1).unwrap();
        let queries = gen_queries(&mesh, &QuerySpec { budget: 40, ..Default::default() }, 2).unwrap();
        let cfg = EvalConfig::default();
        let one = evaluate_batch(DataView::Mesh(&mesh), &queries.queries, &cfg, 1).unwrap();
        let three = evaluate_batch(DataView::Mesh(&mesh), &queries.queries, &cfg, 3).unwrap();
        assert_eq!(one.values, three.values);
    }
}
