//! Generated meshes and query sets.
//!
//! [`ProceduralMesh`] computes node coordinates and outcomes on demand from a
//! hash of the seed and the node's multi-index, so even a 100-dimensional
//! grid costs nothing to "store" and any node always gets the same values.

use std::collections::HashSet;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::functions::TestFunction;
use crate::error::{Error, Result};
use crate::mesh::{check_axes, local_cell, Lattice, MeshIndex};
use crate::model::{validate_training_set, Point, TrainingSet};

const JITTER_STREAM: u64 = 0x6a09_e667_f3bc_c909;
const NOISE_STREAM: u64 = 0xbb67_ae85_84ca_a73b;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn node_hash(seed: u64, stream: u64, node: &[usize]) -> u64 {
    node.iter().fold(splitmix(seed ^ stream), |h, &k| splitmix(h ^ k as u64))
}

/// Uniform in `[-1, 1)` from the top 53 bits.
fn unit_symmetric(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Additive outcome noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSpec {
    None,
    /// Zero-mean normal with standard deviation `sigma`.
    Normal { sigma: f64 },
    /// Zero-mean uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
}

impl NoiseSpec {
    fn check(&self) -> Result<()> {
        let v = match self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Normal { sigma } => *sigma,
            NoiseSpec::Uniform { half_width } => *half_width,
        };
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("noise scale {v} must be finite and non-negative")));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Normal { sigma } => Normal::new(0.0, sigma).map(|d| d.sample(rng)).unwrap_or(0.0),
            NoiseSpec::Uniform { half_width } => {
                if half_width > 0.0 {
                    rng.random_range(-half_width..=half_width)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Accepts `none`, `normal:<sigma>` and `uniform:<half-width>`.
impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad noise spec `{s}`"));
        if s == "none" {
            return Ok(NoiseSpec::None);
        }
        let (kind, v) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = v.parse().map_err(|_| bad())?;
        let spec = match kind {
            "normal" => NoiseSpec::Normal { sigma: v },
            "uniform" => NoiseSpec::Uniform { half_width: v },
            _ => return Err(bad()),
        };
        spec.check()?;
        Ok(spec)
    }
}

/// A rectangular grid over a test function, with optional coordinate jitter
/// and outcome noise.
#[derive(Debug, Clone)]
pub struct ProceduralMesh {
    function: TestFunction,
    axes: Vec<Vec<f64>>,
    jitter: f64,
    noise: NoiseSpec,
    seed: u64,
}

impl ProceduralMesh {
    /// `nodes_per_axis` evenly spaced nodes over `domain` on every axis.
    /// Jitter moves interior nodes by up to `jitter` of a cell width; the
    /// outermost nodes stay put so the data never leaves the domain.
    pub fn new(
        function: TestFunction,
        nodes_per_axis: usize,
        domain: (f64, f64),
        jitter: f64,
        noise: NoiseSpec,
        seed: u64,
    ) -> Result<Self> {
        let (lo, hi) = domain;
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("bad domain [{lo}, {hi}]")));
        }
        if nodes_per_axis < 2 {
            return Err(Error::InvalidArgument("need at least two nodes per axis".into()));
        }
        let step = (hi - lo) / (nodes_per_axis - 1) as f64;
        let axis: Vec<f64> = (0..nodes_per_axis)
            .map(|k| if k + 1 == nodes_per_axis { hi } else { lo + k as f64 * step })
            .collect();
        let axes = vec![axis; function.dim()];
        check_axes(&axes, jitter)?;
        noise.check()?;
        Ok(ProceduralMesh {
            function,
            axes,
            jitter,
            noise,
            seed,
        })
    }

    pub fn function(&self) -> &TestFunction {
        &self.function
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn node_total(&self) -> Option<usize> {
        self.axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
    }

    /// Outcome noise realised at `node`.
    pub fn node_noise(&self, node: &[usize]) -> f64 {
        if self.noise == NoiseSpec::None {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(node_hash(self.seed, NOISE_STREAM, node));
        self.noise.sample(&mut rng)
    }

    /// Noise-free outcome at the node's actual position.
    pub fn node_truth(&self, node: &[usize]) -> f64 {
        let mut c = vec![0.0; self.axes.len()];
        self.node_coords(node, &mut c);
        self.function.eval(&c)
    }
}

impl Lattice for ProceduralMesh {
    fn dim(&self) -> usize {
        self.axes.len()
    }

    fn layer_count(&self) -> usize {
        1
    }

    fn nodes(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    fn node_coords(&self, node: &[usize], out: &mut [f64]) {
        for (a, (&k, o)) in node.iter().zip(out.iter_mut()).enumerate() {
            *o = self.axes[a][k];
        }
        if self.jitter == 0.0 {
            return;
        }
        let h = node_hash(self.seed, JITTER_STREAM, node);
        for (a, &k) in node.iter().enumerate() {
            let nodes = &self.axes[a];
            if k == 0 || k + 1 == nodes.len() {
                continue;
            }
            let u = unit_symmetric(splitmix(h ^ (a as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
            out[a] += self.jitter * local_cell(nodes, k) * u;
        }
    }

    fn node_outcome(&self, node: &[usize], _layer: usize) -> f64 {
        self.node_truth(node) + self.node_noise(node)
    }
}

/// A materialised mesh dataset.
#[derive(Debug, Clone)]
pub struct MeshDataset {
    pub training: TrainingSet,
    pub mesh: MeshIndex,
}

/// Largest grid [`gen_mesh_dataset`] will materialise.
pub const MAX_MATERIALISED_NODES: usize = 20_000_000;

/// Writes the procedural mesh out as training points (row-major node order)
/// together with the matching mesh index.
pub fn materialise(mesh: &ProceduralMesh) -> Result<MeshDataset> {
    let total = mesh
        .node_total()
        .filter(|&t| t <= MAX_MATERIALISED_NODES)
        .ok_or_else(|| Error::InvalidArgument("grid too large to materialise".into()))?;
    let n = mesh.dim();
    let counts: Vec<usize> = (0..n).map(|a| mesh.node_count(a)).collect();
    let mut node = vec![0usize; n];
    let mut points = Vec::with_capacity(total);
    for _ in 0..total {
        let mut c = vec![0.0; n];
        mesh.node_coords(&node, &mut c);
        let y = mesh.node_outcome(&node, 0);
        points.push(Point::new(c, y));
        for a in (0..n).rev() {
            node[a] += 1;
            if node[a] < counts[a] {
                break;
            }
            node[a] = 0;
        }
    }
    let training = validate_training_set(points, n, 1)?;
    let index = MeshIndex::build(&training, mesh.axes().to_vec(), mesh.jitter())?;
    Ok(MeshDataset { training, mesh: index })
}

/// Generates a grid dataset over `function`; reproducible per seed.
pub fn gen_mesh_dataset(
    function: TestFunction,
    nodes_per_axis: usize,
    domain: (f64, f64),
    jitter: f64,
    noise: NoiseSpec,
    seed: u64,
) -> Result<MeshDataset> {
    materialise(&ProceduralMesh::new(function, nodes_per_axis, domain, jitter, noise, seed)?)
}

/// Which cells may hold queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellSelection {
    /// Every cell of the grid.
    All,
    /// Cells whose lower corner has a neighbour below and two above on every
    /// axis, so the smooth method sees complete stencils.
    FullStencil,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuerySpec {
    /// Per-axis offset from the cell's lower corner, as a fraction of the
    /// cell, drawn from `[lo, hi)`.
    pub offsets: (f64, f64),
    /// Offsets within one query must all differ, so no two coordinates of a
    /// query sit at the same relative position.
    pub distinct: bool,
    pub selection: CellSelection,
    /// Maximum number of queries.
    pub budget: usize,
}

impl Default for QuerySpec {
    fn default() -> Self {
        QuerySpec {
            offsets: (0.3, 0.5),
            distinct: true,
            selection: CellSelection::All,
            budget: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub queries: Vec<Vec<f64>>,
    /// Lower-corner node of each query's cell.
    pub cells: Vec<Vec<usize>>,
    /// Function values at the queries.
    pub truths: Vec<f64>,
    /// Noise-free function values at the cell's lower corner.
    pub reference_truths: Vec<f64>,
}

impl QuerySet {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// One query per selected cell, or a random sample of `budget` distinct
/// cells when there are more. Cells are visited in row-major order when
/// all of them are used.
pub fn gen_queries(mesh: &ProceduralMesh, spec: &QuerySpec, seed: u64) -> Result<QuerySet> {
    let (lo, hi) = spec.offsets;
    if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "offset range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 0.5"
        )));
    }
    let n = mesh.dim();
    if spec.distinct && lo == hi && n > 1 {
        return Err(Error::InvalidArgument(
            "a degenerate offset range cannot give distinct offsets per query".into(),
        ));
    }
    let (first, span): (usize, Vec<usize>) = match spec.selection {
        CellSelection::All => (0, (0..n).map(|a| mesh.node_count(a) - 1).collect()),
        CellSelection::FullStencil => (
            1,
            (0..n).map(|a| mesh.node_count(a).saturating_sub(3)).collect(),
        ),
    };
    if span.contains(&0) {
        return Err(Error::InvalidArgument("mesh has no cells of the requested kind".into()));
    }
    let total = span.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<Vec<usize>> = match total {
        Some(t) if t <= spec.budget => (0..t)
            .map(|mut lin| {
                let mut c = vec![0; n];
                for a in (0..n).rev() {
                    c[a] = first + lin % span[a];
                    lin /= span[a];
                }
                c
            })
            .collect(),
        _ => {
            let mut seen = HashSet::with_capacity(spec.budget);
            let mut out = Vec::with_capacity(spec.budget);
            while out.len() < spec.budget {
                let c: Vec<usize> = span.iter().map(|&s| first + rng.random_range(0..s)).collect();
                if seen.insert(c.clone()) {
                    out.push(c);
                }
            }
            out
        }
    };

    let mut set = QuerySet {
        queries: Vec::with_capacity(cells.len()),
        cells: Vec::with_capacity(cells.len()),
        truths: Vec::with_capacity(cells.len()),
        reference_truths: Vec::with_capacity(cells.len()),
    };
    for cell in cells {
        let offsets = draw_offsets(&mut rng, n, lo, hi, spec.distinct);
        let q: Vec<f64> = cell
            .iter()
            .zip(&offsets)
            .enumerate()
            .map(|(a, (&k, t))| {
                let nodes = mesh.nodes(a);
                nodes[k] + t * (nodes[k + 1] - nodes[k])
            })
            .collect();
        set.truths.push(mesh.function().eval(&q));
        set.reference_truths.push(mesh.node_truth(&cell));
        set.queries.push(q);
        set.cells.push(cell);
    }
    Ok(set)
}

fn draw_offsets(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, distinct: bool) -> Vec<f64> {
    if lo == hi {
        return vec![lo; n];
    }
    loop {
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        if !distinct {
            return t;
        }
        let mut sorted = t.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[0] != w[1]) {
            return t;
        }
    }
}
