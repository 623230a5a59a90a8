//! Choosing which training points take part in an estimate: the reference
//! point, the auxiliary points of the local hyperplane, alternative point
//! combinations for averaging, and the four-point axis stencils used by the
//! smooth method.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::mesh::Lattice;
use crate::model::{Reference, TrainingSet};
use crate::solver::{solve_linear_system, LinearSystem};

/// Relative residual below which a difference vector counts as lying in the
/// span of the ones already accepted.
const RANK_TOLERANCE: f64 = 1e-8;

/// Scattered training data with per-axis range normalisation for distances.
#[derive(Debug, Clone)]
pub struct ScatteredView<'a> {
    pub training: &'a TrainingSet,
    inv_range: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl<'a> ScatteredView<'a> {
    pub fn new(training: &'a TrainingSet) -> Self {
        let bounds = training.bounds();
        let inv_range = bounds
            .iter()
            .map(|&(lo, hi)| if hi > lo { 1.0 / (hi - lo) } else { 1.0 })
            .collect();
        ScatteredView {
            training,
            inv_range,
            bounds,
        }
    }

    /// Squared distance on range-normalised coordinates.
    pub fn distance2(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.inv_range)
            .map(|((x, y), s)| ((x - y) * s).powi(2))
            .sum()
    }

    /// The `k` nearest points to `query`, closest first; ties break on index.
    pub fn nearest(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = (0..self.training.len())
            .map(|i| (i, self.distance2(self.training.coords(i), query)))
            .collect();
        let by_distance = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        let k = k.min(all.len());
        if k == 0 {
            return Vec::new();
        }
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, by_distance);
            all.truncate(k);
        }
        all.sort_by(by_distance);
        all.into_iter().map(|(i, d)| (i, d.sqrt())).collect()
    }

    fn contains(&self, query: &[f64]) -> bool {
        query.iter().zip(&self.bounds).all(|(&q, &(lo, hi))| q >= lo && q <= hi)
    }

    fn scaled_difference(&self, a: &[f64], origin: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(origin)
            .zip(&self.inv_range)
            .map(|((x, o), s)| (x - o) * s)
            .collect()
    }
}

/// Training data as seen by the estimators.
#[derive(Clone, Copy)]
pub enum DataView<'a> {
    Scattered(&'a ScatteredView<'a>),
    Mesh(&'a dyn Lattice),
}

impl DataView<'_> {
    pub fn dim(&self) -> usize {
        match self {
            DataView::Scattered(s) => s.training.dim(),
            DataView::Mesh(m) => m.dim(),
        }
    }

    pub fn layer_count(&self) -> usize {
        match self {
            DataView::Scattered(s) => s.training.layer_count(),
            DataView::Mesh(m) => m.layer_count(),
        }
    }

    pub fn coords_into(&self, r: &Reference, out: &mut [f64]) {
        match (self, r) {
            (DataView::Scattered(s), Reference::Point(i)) => out.copy_from_slice(s.training.coords(*i)),
            (DataView::Mesh(m), Reference::Node(node)) => m.node_coords(node, out),
            _ => panic!("reference kind does not match the data view"),
        }
    }

    pub fn coords(&self, r: &Reference) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.coords_into(r, &mut out);
        out
    }

    pub fn outcome(&self, r: &Reference, layer: usize) -> f64 {
        match (self, r) {
            (DataView::Scattered(s), Reference::Point(i)) => s.training.outcome(*i, layer),
            (DataView::Mesh(m), Reference::Node(node)) => m.node_outcome(node, layer),
            _ => panic!("reference kind does not match the data view"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Located {
    pub reference: Reference,
    /// The query lies outside the data's bounding box.
    pub extrapolated: bool,
}

/// Mesh mode: the lower corner of the cell holding the query (a query sitting
/// exactly on a node resolves to that node). Scattered mode: the nearest point
/// after per-axis range normalisation.
pub fn locate_reference(view: DataView<'_>, query: &[f64]) -> Result<Located> {
    check_query(view, query)?;
    match view {
        DataView::Scattered(s) => {
            let (i, _) = *s.nearest(query, 1).first().ok_or(Error::EmptyTrainingSet)?;
            Ok(Located {
                reference: Reference::Point(i),
                extrapolated: !s.contains(query),
            })
        }
        DataView::Mesh(m) => {
            let mut extrapolated = false;
            let node = (0..m.dim())
                .map(|a| {
                    let (k, inside) = cell_of(m.nodes(a), query[a]);
                    extrapolated |= !inside;
                    k
                })
                .collect();
            Ok(Located {
                reference: Reference::Node(node),
                extrapolated,
            })
        }
    }
}

fn check_query(view: DataView<'_>, query: &[f64]) -> Result<()> {
    if query.len() != view.dim() {
        return Err(Error::DimensionMismatch {
            context: "query".into(),
            expected: view.dim(),
            got: query.len(),
        });
    }
    if let DataView::Scattered(s) = view {
        if s.training.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
    }
    Ok(())
}

/// Index of the node at or below `v`, clamped to the axis; the flag is false
/// when `v` falls outside the node range.
pub fn cell_of(nodes: &[f64], v: f64) -> (usize, bool) {
    let last = nodes.len() - 1;
    if v < nodes[0] {
        return (0, false);
    }
    if v > nodes[last] {
        return (last, false);
    }
    let k = nodes.partition_point(|&n| n <= v);
    (k.saturating_sub(1), true)
}

/// Reference point plus the `n` auxiliary points of the local hyperplane.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub reference: Reference,
    pub auxiliaries: Vec<Reference>,
}

impl Simplex {
    pub fn members(&self) -> impl Iterator<Item = &Reference> {
        std::iter::once(&self.reference).chain(&self.auxiliaries)
    }
}

/// Mesh mode: the reference's forward neighbour along every axis (backward
/// where the reference sits on the last node). Scattered mode: the nearest
/// points to the query, skipping any that would leave the difference matrix
/// rank-deficient, searched among the `3n` nearest candidates.
pub fn select_simplex(view: DataView<'_>, query: &[f64], reference: &Reference) -> Result<Simplex> {
    check_query(view, query)?;
    match (view, reference) {
        (DataView::Mesh(m), Reference::Node(node)) => Ok(Simplex {
            reference: reference.clone(),
            auxiliaries: (0..m.dim())
                .map(|a| {
                    let mut aux = node.clone();
                    if node[a] + 1 < m.node_count(a) {
                        aux[a] += 1;
                    } else {
                        aux[a] -= 1;
                    }
                    Reference::Node(aux)
                })
                .collect(),
        }),
        (DataView::Scattered(s), Reference::Point(r)) => {
            let n = s.training.dim();
            let candidates = s.nearest(query, 3 * n + 1);
            let origin = s.training.coords(*r);
            let mut basis = RankBasis::new(n);
            let mut auxiliaries = Vec::with_capacity(n);
            for &(i, _) in &candidates {
                if i == *r {
                    continue;
                }
                if basis.try_add(s.scaled_difference(s.training.coords(i), origin)) {
                    auxiliaries.push(Reference::Point(i));
                    if auxiliaries.len() == n {
                        return Ok(Simplex {
                            reference: reference.clone(),
                            auxiliaries,
                        });
                    }
                }
            }
            Err(Error::DegenerateNeighborhood { reference: *r })
        }
        _ => Err(Error::InvalidArgument("reference kind does not match the data view".into())),
    }
}

/// Incremental Gram–Schmidt used for greedy rank checks.
struct RankBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl RankBasis {
    fn new(dim: usize) -> Self {
        RankBasis {
            dim,
            vectors: Vec::with_capacity(dim),
        }
    }

    fn try_add(&mut self, mut v: Vec<f64>) -> bool {
        if self.vectors.len() == self.dim {
            return false;
        }
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            return false;
        }
        // Two passes keep the residual accurate when vectors are nearly parallel.
        for _ in 0..2 {
            for b in &self.vectors {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= RANK_TOLERANCE * norm0 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        self.vectors.push(v);
        true
    }
}

/// How alternative point combinations are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinationStrategy {
    /// The primary simplex first, then further `(n+1)`-point subsets of the
    /// nearest candidates in order of increasing aggregate distance.
    #[default]
    Nearest,
    /// Combinations that share no points, each preferring a simplex that
    /// encloses the query, so that their outcome errors are independent.
    Disjoint,
}

impl std::str::FromStr for CombinationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(CombinationStrategy::Nearest),
            "disjoint" => Ok(CombinationStrategy::Disjoint),
            other => Err(Error::InvalidArgument(format!("unknown combination strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinationPlan {
    pub simplexes: Vec<Simplex>,
}

impl CombinationPlan {
    pub fn len(&self) -> usize {
        self.simplexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplexes.is_empty()
    }
}

/// Candidate point for combination search.
#[derive(Debug, Clone)]
struct Candidate {
    id: Reference,
    coords: Vec<f64>,
    distance: f64,
}

/// Produces `count` distinct point combinations for averaging.
pub fn enumerate_combinations(
    view: DataView<'_>,
    query: &[f64],
    count: usize,
    strategy: CombinationStrategy,
) -> Result<CombinationPlan> {
    if count == 0 {
        return Err(Error::InvalidArgument("combination count must be at least 1".into()));
    }
    check_query(view, query)?;
    let n = view.dim();
    let located = locate_reference(view, query)?;
    let primary = select_simplex(view, query, &located.reference);
    if count == 1 && strategy == CombinationStrategy::Nearest {
        return Ok(CombinationPlan {
            simplexes: vec![primary?],
        });
    }

    let total = match view {
        DataView::Scattered(s) => s.training.len(),
        DataView::Mesh(_) => usize::MAX,
    };
    let mut pool_size = match strategy {
        CombinationStrategy::Nearest => (3 * (n + 1) + count).min(total),
        CombinationStrategy::Disjoint => ((n + 1) * (count + 2)).min(total),
    };
    loop {
        let pool = candidate_pool(view, query, &located.reference, pool_size);
        let exhausted = pool.len() < pool_size || pool.len() == total;
        let found = match strategy {
            CombinationStrategy::Nearest => nearest_subsets(view, &pool, primary.as_ref().ok(), count),
            CombinationStrategy::Disjoint => disjoint_subsets(view, &pool, query, count),
        };
        if found.len() >= count {
            return Ok(CombinationPlan { simplexes: found });
        }
        if exhausted {
            if found.is_empty() {
                if let Err(e) = primary {
                    return Err(e);
                }
            }
            return Err(Error::InsufficientPoints {
                requested: count,
                available: found.len(),
            });
        }
        pool_size = (pool_size * 2).min(total);
    }
}

fn candidate_pool(view: DataView<'_>, query: &[f64], reference: &Reference, size: usize) -> Vec<Candidate> {
    match view {
        DataView::Scattered(s) => s
            .nearest(query, size)
            .into_iter()
            .map(|(i, distance)| Candidate {
                id: Reference::Point(i),
                coords: s.training.coords(i).to_vec(),
                distance,
            })
            .collect(),
        DataView::Mesh(m) => {
            let Reference::Node(node) = reference else {
                unreachable!("mesh views always yield node references")
            };
            let mut nodes: Vec<Vec<usize>> = Vec::new();
            let mut seen = HashSet::new();
            let mut push = |nodes: &mut Vec<Vec<usize>>, k: Vec<usize>| {
                if seen.insert(k.clone()) {
                    nodes.push(k);
                }
            };
            let n = m.dim();
            // Corners of the query's cell (small dimensions only), then
            // widening shells of axis neighbours around the reference.
            if n <= 8 {
                for mask in 0u32..(1 << n) {
                    let corner: Option<Vec<usize>> = (0..n)
                        .map(|a| {
                            let step = ((mask >> a) & 1) as usize;
                            let k = node[a] + step;
                            (k < m.node_count(a)).then_some(k)
                        })
                        .collect();
                    if let Some(c) = corner {
                        push(&mut nodes, c);
                    }
                }
            }
            let mut radius = 1usize;
            while nodes.len() < size && radius <= 64 {
                let before = nodes.len();
                for a in 0..n {
                    for offset in [radius as isize, -(radius as isize), radius as isize + 1] {
                        let k = node[a] as isize + offset;
                        if k >= 0 && (k as usize) < m.node_count(a) {
                            let mut c = node.clone();
                            c[a] = k as usize;
                            push(&mut nodes, c);
                        }
                    }
                }
                if nodes.len() == before && radius > 2 {
                    break;
                }
                radius += 1;
            }
            let spans: Vec<f64> = (0..n)
                .map(|a| {
                    let nodes = m.nodes(a);
                    1.0 / (nodes[nodes.len() - 1] - nodes[0])
                })
                .collect();
            let mut pool: Vec<Candidate> = nodes
                .into_iter()
                .map(|k| {
                    let mut coords = vec![0.0; n];
                    m.node_coords(&k, &mut coords);
                    let distance = coords
                        .iter()
                        .zip(query)
                        .zip(&spans)
                        .map(|((c, q), s)| ((c - q) * s).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    Candidate {
                        id: Reference::Node(k),
                        coords,
                        distance,
                    }
                })
                .collect();
            pool.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.id.cmp(&b.id)));
            pool.truncate(size);
            pool
        }
    }
}

fn nonsingular(view: DataView<'_>, pool: &[Candidate], members: &[usize]) -> bool {
    let origin = &pool[members[0]].coords;
    let scale = scale_of(view);
    let mut basis = RankBasis::new(origin.len());
    members[1..].iter().all(|&m| {
        let d = pool[m]
            .coords
            .iter()
            .zip(origin)
            .zip(&scale)
            .map(|((x, o), s)| (x - o) * s)
            .collect();
        basis.try_add(d)
    })
}

fn scale_of(view: DataView<'_>) -> Vec<f64> {
    match view {
        DataView::Scattered(s) => s.inv_range.clone(),
        DataView::Mesh(m) => (0..m.dim())
            .map(|a| {
                let nodes = m.nodes(a);
                1.0 / (nodes[nodes.len() - 1] - nodes[0])
            })
            .collect(),
    }
}

fn simplex_of(pool: &[Candidate], members: &[usize]) -> Simplex {
    Simplex {
        reference: pool[members[0]].id.clone(),
        auxiliaries: members[1..].iter().map(|&m| pool[m].id.clone()).collect(),
    }
}

#[derive(PartialEq)]
struct Pending {
    cost: f64,
    members: Vec<usize>,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then lexicographic on members for determinism.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.members.cmp(&self.members))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-first walk over `(n+1)`-subsets of the (distance-sorted) pool in order
/// of increasing aggregate distance.
fn nearest_subsets(view: DataView<'_>, pool: &[Candidate], primary: Option<&Simplex>, count: usize) -> Vec<Simplex> {
    let k = view.dim() + 1;
    let mut out: Vec<Simplex> = Vec::with_capacity(count);
    let mut taken: HashSet<Vec<Reference>> = HashSet::new();
    let key = |s: &Simplex| {
        let mut ids: Vec<Reference> = s.members().cloned().collect();
        ids.sort();
        ids
    };
    if let Some(p) = primary {
        taken.insert(key(p));
        out.push(p.clone());
    }
    if pool.len() < k {
        return out;
    }
    let cost = |m: &[usize]| m.iter().map(|&i| pool[i].distance).sum::<f64>();
    let first: Vec<usize> = (0..k).collect();
    let mut heap = BinaryHeap::new();
    let mut visited = HashSet::new();
    visited.insert(first.clone());
    heap.push(Pending {
        cost: cost(&first),
        members: first,
    });
    // Bounded so that a pool of nearly colinear mesh nodes cannot spin forever.
    let mut budget = 200_000usize;
    while let Some(Pending { members, .. }) = heap.pop() {
        if out.len() >= count || budget == 0 {
            break;
        }
        budget -= 1;
        for j in 0..k {
            let limit = if j + 1 < k { members[j + 1] } else { pool.len() };
            if members[j] + 1 < limit {
                let mut next = members.clone();
                next[j] += 1;
                if visited.insert(next.clone()) {
                    heap.push(Pending {
                        cost: cost(&next),
                        members: next,
                    });
                }
            }
        }
        if nonsingular(view, pool, &members) {
            let s = simplex_of(pool, &members);
            if taken.insert(key(&s)) {
                out.push(s);
            }
        }
    }
    out.truncate(count);
    out
}

/// Barycentric weights of `query` with respect to the simplex, reference first.
pub(crate) fn barycentric(coords: &[&[f64]], query: &[f64]) -> Option<Vec<f64>> {
    let n = query.len();
    let origin = coords[0];
    let mut a = vec![0.0; n * n];
    for (k, c) in coords[1..].iter().enumerate() {
        for i in 0..n {
            a[i * n + k] = c[i] - origin[i];
        }
    }
    let b = query.iter().zip(origin).map(|(q, o)| q - o).collect();
    let sys = LinearSystem::new(n, a, b).ok()?;
    let lambda = solve_linear_system(&sys).ok()?.x;
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0 - lambda.iter().sum::<f64>());
    w.extend(lambda);
    Some(w)
}

fn disjoint_subsets(view: DataView<'_>, pool: &[Candidate], query: &[f64], count: usize) -> Vec<Simplex> {
    let n = view.dim();
    let k = n + 1;
    let window = if n <= 3 { 3 * k } else { k };
    let mut used = vec![false; pool.len()];
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let free: Vec<usize> = (0..pool.len()).filter(|&i| !used[i]).take(window).collect();
        if free.len() < k {
            break;
        }
        let chosen = if n <= 3 {
            best_enclosing(view, pool, &free, query)
        } else {
            greedy_nonsingular(view, pool, &(0..pool.len()).filter(|&i| !used[i]).collect::<Vec<_>>())
        };
        let Some(members) = chosen else { break };
        for &m in &members {
            used[m] = true;
        }
        out.push(simplex_of(pool, &members));
    }
    out
}

fn greedy_nonsingular(view: DataView<'_>, pool: &[Candidate], free: &[usize]) -> Option<Vec<usize>> {
    let n = view.dim();
    let scale = scale_of(view);
    let (&first, rest) = free.split_first()?;
    let mut basis = RankBasis::new(n);
    let mut members = vec![first];
    for &c in rest.iter().take(3 * n) {
        let d = pool[c]
            .coords
            .iter()
            .zip(&pool[first].coords)
            .zip(&scale)
            .map(|((x, o), s)| (x - o) * s)
            .collect();
        if basis.try_add(d) {
            members.push(c);
            if members.len() == n + 1 {
                return Some(members);
            }
        }
    }
    None
}

/// Among subsets of `free`, the enclosing simplex with the smallest aggregate
/// distance; failing that, the one with the smallest total absolute weight.
fn best_enclosing(view: DataView<'_>, pool: &[Candidate], free: &[usize], query: &[f64]) -> Option<Vec<usize>> {
    let k = view.dim() + 1;
    let mut best: Option<((u8, f64), Vec<usize>)> = None;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let members: Vec<usize> = idx.iter().map(|&i| free[i]).collect();
        if nonsingular(view, pool, &members) {
            let coords: Vec<&[f64]> = members.iter().map(|&m| pool[m].coords.as_slice()).collect();
            if let Some(w) = barycentric(&coords, query) {
                let key = if w.iter().all(|&x| x >= 0.0) {
                    (0u8, members.iter().map(|&m| pool[m].distance).sum())
                } else {
                    (1u8, w.iter().map(|x| x.abs()).sum())
                };
                if best.as_ref().is_none_or(|(b, _)| key.0 < b.0 || (key.0 == b.0 && key.1 < b.1)) {
                    best = Some((key, members));
                }
            }
        }
        // Next k-combination of 0..free.len() in lexicographic order.
        let mut j = k;
        loop {
            if j == 0 {
                return best.map(|(_, m)| m);
            }
            j -= 1;
            if idx[j] < free.len() - k + j {
                idx[j] += 1;
                for t in j + 1..k {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Four points along one axis through the reference node, ordered by that
/// axis' coordinate: `Y0` below the reference, `Y1` the reference, `Y2` and
/// `Y3` above it.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil1D {
    pub axis: usize,
    pub x: [f64; 4],
    /// Outcomes, shifted onto the reference's axis line when an off-axis
    /// gradient is supplied.
    pub y: [f64; 4],
    pub present: [bool; 4],
}

impl Stencil1D {
    pub fn is_complete(&self) -> bool {
        self.present.iter().all(|&p| p)
    }
}

/// Builds the axis stencil around `reference`. Missing neighbours at the mesh
/// edge are flagged rather than treated as errors.
///
/// On a jittered mesh the stencil points do not share the reference's other
/// coordinates. When `gradient` is given, each outcome is corrected by
/// `Σ_{j≠axis} gradient[j] · (x_j − x_j^ref)` so the four values describe the
/// cross-section through the reference itself.
pub fn axis_stencil(
    lattice: &dyn Lattice,
    reference: &[usize],
    axis: usize,
    layer: usize,
    gradient: Option<&[f64]>,
) -> Stencil1D {
    let n = lattice.dim();
    let mut origin = vec![0.0; n];
    lattice.node_coords(reference, &mut origin);
    let mut stencil = Stencil1D {
        axis,
        x: [0.0; 4],
        y: [0.0; 4],
        present: [false; 4],
    };
    let mut coords = vec![0.0; n];
    let mut node = reference.to_vec();
    for slot in 0..4 {
        let k = reference[axis] as isize + slot as isize - 1;
        if k < 0 || k as usize >= lattice.node_count(axis) {
            continue;
        }
        node[axis] = k as usize;
        lattice.node_coords(&node, &mut coords);
        let mut y = lattice.node_outcome(&node, layer);
        if let Some(g) = gradient {
            y -= (0..n)
                .filter(|&j| j != axis)
                .map(|j| g[j] * (coords[j] - origin[j]))
                .sum::<f64>();
        }
        stencil.x[slot] = coords[axis];
        stencil.y[slot] = y;
        stencil.present[slot] = true;
    }
    stencil
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshIndex;
    use crate::model::{validate_training_set, Point};

    fn mesh_set(nodes: &[f64], dim: usize) -> TrainingSet {
        let mut pts = Vec::new();
        let count = nodes.len().pow(dim as u32);
        for lin in 0..count {
            let mut rem = lin;
            let mut c = vec![0.0; dim];
            for a in (0..dim).rev() {
                c[a] = nodes[rem % nodes.len()];
                rem /= nodes.len();
            }
            let y = c.iter().sum();
            pts.push(Point::new(c, y));
        }
        validate_training_set(pts, dim, 1).unwrap()
    }

    #[test]
    fn mesh_reference_is_lower_cell_corner() {
        let set = mesh_set(&[0.0, 1.0, 2.0], 3);
        let mesh = MeshIndex::infer(&set).unwrap();
        let view = mesh.view(&set);
        let loc = locate_reference(DataView::Mesh(&view), &[0.4, 1.7, 0.3]).unwrap();
        assert_eq!(loc.reference, Reference::Node(vec![0, 1, 0]));
        assert!(!loc.extrapolated);

        let on_node = locate_reference(DataView::Mesh(&view), &[1.0, 2.0, 0.0]).unwrap();
        assert_eq!(on_node.reference, Reference::Node(vec![1, 2, 0]));

        let outside = locate_reference(DataView::Mesh(&view), &[-0.5, 1.0, 3.0]).unwrap();
        assert!(outside.extrapolated);
        assert_eq!(outside.reference, Reference::Node(vec![0, 1, 2]));
    }

    #[test]
    fn scattered_reference_uses_normalised_distance() {
        let pts = vec![
            Point::new(vec![0.0, 0.0], 0.0),
            Point::new(vec![10.0, 0.0], 0.0),
            Point::new(vec![5.0, 1.0], 0.0),
        ];
        let set = validate_training_set(pts, 2, 1).unwrap();
        let view = ScatteredView::new(&set);
        let loc = locate_reference(DataView::Scattered(&view), &[4.0, 0.0]).unwrap();
        // Raw distance picks (5, 1); normalised by the ranges (10, 1) it is (0, 0).
        assert_eq!(loc.reference, Reference::Point(0));
    }

    #[test]
    fn mesh_simplex_uses_forward_neighbours() {
        let set = mesh_set(&[0.0, 1.0, 2.0], 3);
        let mesh = MeshIndex::infer(&set).unwrap();
        let view = mesh.view(&set);
        let s = select_simplex(DataView::Mesh(&view), &[0.5, 0.5, 0.5], &Reference::Node(vec![0, 0, 0])).unwrap();
        assert_eq!(
            s.auxiliaries,
            vec![
                Reference::Node(vec![1, 0, 0]),
                Reference::Node(vec![0, 1, 0]),
                Reference::Node(vec![0, 0, 1]),
            ]
        );
        let edge = select_simplex(DataView::Mesh(&view), &[2.0, 0.5, 0.5], &Reference::Node(vec![2, 0, 0])).unwrap();
        assert_eq!(edge.auxiliaries[0], Reference::Node(vec![1, 0, 0]));
    }

    #[test]
    fn colinear_points_are_degenerate() {
        let pts = (0..6).map(|i| Point::new(vec![i as f64, 2.0 * i as f64], 0.0)).collect();
        let set = validate_training_set(pts, 2, 1).unwrap();
        let view = ScatteredView::new(&set);
        let loc = locate_reference(DataView::Scattered(&view), &[2.2, 4.1]).unwrap();
        assert!(matches!(
            select_simplex(DataView::Scattered(&view), &[2.2, 4.1], &loc.reference),
            Err(Error::DegenerateNeighborhood { .. })
        ));
    }

    #[test]
    fn scattered_simplex_skips_rank_deficient_candidates() {
        let pts = vec![
            Point::new(vec![0.0, 0.0], 0.0),
            Point::new(vec![0.1, 0.0], 0.0),
            Point::new(vec![0.2, 0.0], 0.0),
            Point::new(vec![0.0, 1.0], 0.0),
            Point::new(vec![1.0, 1.0], 0.0),
        ];
        let set = validate_training_set(pts, 2, 1).unwrap();
        let view = ScatteredView::new(&set);
        let s = select_simplex(DataView::Scattered(&view), &[0.05, 0.0], &Reference::Point(0)).unwrap();
        assert_eq!(s.auxiliaries, vec![Reference::Point(1), Reference::Point(3)]);
    }

    fn four_points() -> TrainingSet {
        let pts = vec![
            Point::new(vec![0.0, 0.0], 1.0),
            Point::new(vec![1.0, 0.0], 2.0),
            Point::new(vec![0.0, 1.0], 3.0),
            Point::new(vec![1.0, 1.0], 4.5),
        ];
        validate_training_set(pts, 2, 1).unwrap()
    }

    #[test]
    fn four_points_give_four_combinations() {
        let set = four_points();
        let view = ScatteredView::new(&set);
        let plan = enumerate_combinations(DataView::Scattered(&view), &[0.3, 0.4], 4, CombinationStrategy::Nearest).unwrap();
        assert_eq!(plan.len(), 4);
        let mut sets: Vec<Vec<usize>> = plan
            .simplexes
            .iter()
            .map(|s| {
                let mut v: Vec<usize> = s
                    .members()
                    .map(|r| match r {
                        Reference::Point(i) => *i,
                        _ => unreachable!(),
                    })
                    .collect();
                v.sort();
                v
            })
            .collect();
        sets.sort();
        assert_eq!(sets, vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]]);

        assert!(matches!(
            enumerate_combinations(DataView::Scattered(&view), &[0.3, 0.4], 5, CombinationStrategy::Nearest),
            Err(Error::InsufficientPoints { requested: 5, available: 4 })
        ));
    }

    #[test]
    fn single_combination_is_primary_simplex() {
        let set = four_points();
        let view = ScatteredView::new(&set);
        let q = [0.8, 0.9];
        let plan = enumerate_combinations(DataView::Scattered(&view), &q, 1, CombinationStrategy::Nearest).unwrap();
        let loc = locate_reference(DataView::Scattered(&view), &q).unwrap();
        let primary = select_simplex(DataView::Scattered(&view), &q, &loc.reference).unwrap();
        assert_eq!(plan.simplexes, vec![primary]);
    }

    #[test]
    fn disjoint_combinations_share_no_points() {
        let mut pts = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                let x = i as f64 + 0.13 * ((i * 7 + j * 3) % 5) as f64;
                let y = j as f64 + 0.11 * ((i * 5 + j * 11) % 7) as f64;
                pts.push(Point::new(vec![x, y], 0.0));
            }
        }
        let set = validate_training_set(pts, 2, 1).unwrap();
        let view = ScatteredView::new(&set);
        let plan = enumerate_combinations(DataView::Scattered(&view), &[5.5, 5.5], 8, CombinationStrategy::Disjoint).unwrap();
        assert_eq!(plan.len(), 8);
        let mut seen = HashSet::new();
        for s in &plan.simplexes {
            for r in s.members() {
                assert!(seen.insert(format!("{r:?}")));
            }
        }
    }

    #[test]
    fn mesh_combinations_are_distinct() {
        let set = mesh_set(&[0.0, 1.0, 2.0, 3.0], 2);
        let mesh = MeshIndex::infer(&set).unwrap();
        let view = mesh.view(&set);
        let plan = enumerate_combinations(DataView::Mesh(&view), &[1.4, 1.3], 6, CombinationStrategy::Nearest).unwrap();
        assert_eq!(plan.len(), 6);
        assert_eq!(plan.simplexes[0].reference, Reference::Node(vec![1, 1]));
        let keys: HashSet<Vec<String>> = plan
            .simplexes
            .iter()
            .map(|s| {
                let mut k: Vec<String> = s.members().map(|r| format!("{r:?}")).collect();
                k.sort();
                k
            })
            .collect();
        assert_eq!(keys.len(), 6);
    }

    #[test]
    fn stencil_interior_and_edge() {
        let set = mesh_set(&[0.0, 1.0, 2.0, 3.0], 2);
        let mesh = MeshIndex::infer(&set).unwrap();
        let view = mesh.view(&set);
        let s = axis_stencil(&view, &[1, 2], 0, 0, None);
        assert!(s.is_complete());
        assert_eq!(s.x, [0.0, 1.0, 2.0, 3.0]);
        assert_eq!(s.y, [2.0, 3.0, 4.0, 5.0]);

        let edge = axis_stencil(&view, &[0, 2], 0, 0, None);
        assert_eq!(edge.present, [false, true, true, true]);
        let top = axis_stencil(&view, &[2, 2], 0, 0, None);
        assert_eq!(top.present, [true, true, true, false]);
    }

    #[test]
    fn cell_lookup() {
        let nodes = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(cell_of(&nodes, 1.4), (1, true));
        assert_eq!(cell_of(&nodes, 1.0), (1, true));
        assert_eq!(cell_of(&nodes, 3.0), (3, true));
        assert_eq!(cell_of(&nodes, -1.0), (0, false));
        assert_eq!(cell_of(&nodes, 9.0), (3, false));
    }

    #[test]
    fn fig1_subsets_are_valid_simplexes() {
        let set = four_points();
        let view = ScatteredView::new(&set);
        let pool: Vec<Candidate> = (0..4)
            .map(|i| Candidate {
                id: Reference::Point(i),
                coords: set.coords(i).to_vec(),
                distance: 0.0,
            })
            .collect();
        assert!(nonsingular(DataView::Scattered(&view), &pool, &[0, 1, 2]));
        assert!(nonsingular(DataView::Scattered(&view), &pool, &[0, 2, 3]));
    }
}
