//! Rectangular (optionally jittered) mesh structure over training data.
//!
//! The neighbourhood and smooth-surface code only needs to look up nodes by
//! multi-index, so it works against the [`Lattice`] trait. [`MeshView`] backs
//! it with a stored [`TrainingSet`]; generated benchmark meshes implement it
//! procedurally so that 100-dimensional grids never have to be materialised.

use crate::error::{Error, Result};
use crate::model::TrainingSet;

/// Node lookup on a rectangular grid.
pub trait Lattice: Sync {
    /// Predictor dimension.
    fn dim(&self) -> usize;

    fn layer_count(&self) -> usize;

    /// Nominal (unjittered) node positions along `axis`, strictly increasing.
    fn nodes(&self, axis: usize) -> &[f64];

    /// Actual coordinates of a node, jitter included.
    fn node_coords(&self, node: &[usize], out: &mut [f64]);

    fn node_outcome(&self, node: &[usize], layer: usize) -> f64;

    fn node_count(&self, axis: usize) -> usize {
        self.nodes(axis).len()
    }
}

/// Width of the narrower cell adjacent to node `k`.
pub fn local_cell(nodes: &[f64], k: usize) -> f64 {
    let left = if k > 0 { nodes[k] - nodes[k - 1] } else { f64::INFINITY };
    let right = if k + 1 < nodes.len() { nodes[k + 1] - nodes[k] } else { f64::INFINITY };
    left.min(right)
}

pub(crate) fn check_axes(axes: &[Vec<f64>], jitter: f64) -> Result<()> {
    if axes.is_empty() {
        return Err(Error::InvalidArgument("mesh needs at least one axis".into()));
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(Error::InvalidArgument(format!("jitter fraction {jitter} outside [0, 0.5)")));
    }
    for (a, nodes) in axes.iter().enumerate() {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument(format!("axis {a} needs at least two nodes")));
        }
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                context: format!("mesh axis {a}"),
            });
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!("axis {a} nodes are not strictly increasing")));
        }
    }
    Ok(())
}

/// Maps grid multi-indices to training points.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshIndex {
    axes: Vec<Vec<f64>>,
    jitter: f64,
    strides: Vec<usize>,
    point_of_node: Vec<usize>,
}

impl MeshIndex {
    /// Assigns every training point to the nearest nominal node. Each point
    /// must sit within `jitter` of a local cell width of its node and every
    /// node must receive exactly one point.
    pub fn build(training: &TrainingSet, axes: Vec<Vec<f64>>, jitter: f64) -> Result<Self> {
        check_axes(&axes, jitter)?;
        if axes.len() != training.dim() {
            return Err(Error::DimensionMismatch {
                context: "mesh axes".into(),
                expected: training.dim(),
                got: axes.len(),
            });
        }
        let mut strides = vec![1usize; axes.len()];
        let mut total = 1usize;
        for a in (0..axes.len()).rev() {
            strides[a] = total;
            total = total
                .checked_mul(axes[a].len())
                .ok_or_else(|| Error::MeshMismatch("node count overflows".into()))?;
        }
        if total != training.len() {
            return Err(Error::MeshMismatch(format!(
                "{total} grid nodes but {} training points",
                training.len()
            )));
        }

        let mut point_of_node = vec![usize::MAX; total];
        for i in 0..training.len() {
            let mut linear = 0;
            for (a, &v) in training.coords(i).iter().enumerate() {
                let k = nearest_node(&axes[a], v);
                let cell = local_cell(&axes[a], k);
                let slack = jitter * cell + 1e-12 * (axes[a][k].abs() + cell);
                if (v - axes[a][k]).abs() > slack {
                    return Err(Error::MeshMismatch(format!(
                        "point {i} coordinate {a} = {v} is not within jitter of any node"
                    )));
                }
                linear += k * strides[a];
            }
            if point_of_node[linear] != usize::MAX {
                return Err(Error::MeshMismatch(format!(
                    "points {} and {i} map to the same node",
                    point_of_node[linear]
                )));
            }
            point_of_node[linear] = i;
        }

        Ok(MeshIndex {
            axes,
            jitter,
            strides,
            point_of_node,
        })
    }

    /// Recovers an unjittered grid from the distinct coordinate values.
    pub fn infer(training: &TrainingSet) -> Result<Self> {
        let axes = (0..training.dim())
            .map(|a| {
                let mut v: Vec<f64> = (0..training.len()).map(|i| training.coords(i)[a]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        MeshIndex::build(training, axes, 0.0)
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn linear(&self, node: &[usize]) -> usize {
        node.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    /// Training point index stored at `node`.
    pub fn point_at(&self, node: &[usize]) -> usize {
        self.point_of_node[self.linear(node)]
    }

    pub fn view<'a>(&'a self, training: &'a TrainingSet) -> MeshView<'a> {
        MeshView { training, mesh: self }
    }
}

fn nearest_node(nodes: &[f64], v: f64) -> usize {
    match nodes.binary_search_by(|n| n.total_cmp(&v)) {
        Ok(k) => k,
        Err(0) => 0,
        Err(k) if k == nodes.len() => k - 1,
        Err(k) => {
            if v - nodes[k - 1] <= nodes[k] - v {
                k - 1
            } else {
                k
            }
        }
    }
}

/// A [`TrainingSet`] viewed through its [`MeshIndex`].
#[derive(Debug, Clone, Copy)]
pub struct MeshView<'a> {
    pub training: &'a TrainingSet,
    pub mesh: &'a MeshIndex,
}

impl Lattice for MeshView<'_> {
    fn dim(&self) -> usize {
        self.training.dim()
    }

    fn layer_count(&self) -> usize {
        self.training.layer_count()
    }

    fn nodes(&self, axis: usize) -> &[f64] {
        &self.mesh.axes[axis]
    }

    fn node_coords(&self, node: &[usize], out: &mut [f64]) {
        out.copy_from_slice(self.training.coords(self.mesh.point_at(node)));
    }

    fn node_outcome(&self, node: &[usize], layer: usize) -> f64 {
        self.training.outcome(self.mesh.point_at(node), layer)
    }
}
