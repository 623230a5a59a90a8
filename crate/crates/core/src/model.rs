//! Domain types shared by every method: training points, queries and
//! per-query estimates.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A raw training point before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
    /// One value per outcome layer.
    pub outcomes: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>, outcome: f64) -> Self {
        Point {
            coords,
            outcomes: vec![outcome],
        }
    }

    pub fn layered(coords: Vec<f64>, outcomes: Vec<f64>) -> Self {
        Point { coords, outcomes }
    }
}

/// Validated, immutable training data.
///
/// Coordinates and outcomes are stored row-major in flat buffers; point `i`
/// occupies `coords[i * dim..(i + 1) * dim]` and
/// `outcomes[i * layer_count..(i + 1) * layer_count]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    dim: usize,
    layer_count: usize,
    coords: Vec<f64>,
    outcomes: Vec<f64>,
}

/// Builds a [`TrainingSet`] from raw points, rejecting anything the methods
/// cannot work with.
pub fn validate_training_set(points: Vec<Point>, dim: usize, layer_count: usize) -> Result<TrainingSet> {
    if dim == 0 {
        return Err(Error::InvalidArgument("predictor dimension must be at least 1".into()));
    }
    if layer_count == 0 {
        return Err(Error::InvalidArgument("layer count must be at least 1".into()));
    }
    if points.len() < dim + 1 {
        return Err(Error::TooFewPoints {
            required: dim + 1,
            got: points.len(),
            dim,
        });
    }

    let mut coords = Vec::with_capacity(points.len() * dim);
    let mut outcomes = Vec::with_capacity(points.len() * layer_count);
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(points.len());

    for (i, p) in points.into_iter().enumerate() {
        if p.coords.len() != dim {
            return Err(Error::DimensionMismatch {
                context: format!("coordinates of point {i}"),
                expected: dim,
                got: p.coords.len(),
            });
        }
        if p.outcomes.len() != layer_count {
            return Err(Error::DimensionMismatch {
                context: format!("outcomes of point {i}"),
                expected: layer_count,
                got: p.outcomes.len(),
            });
        }
        if p.coords.iter().chain(&p.outcomes).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                context: format!("point {i}"),
            });
        }
        let key: Vec<u64> = p.coords.iter().map(|&v| coord_key(v)).collect();
        if let Some(&first) = seen.get(&key) {
            return Err(Error::DuplicatePoint { first, second: i });
        }
        seen.insert(key, i);
        coords.extend_from_slice(&p.coords);
        outcomes.extend_from_slice(&p.outcomes);
    }

    Ok(TrainingSet {
        dim,
        layer_count,
        coords,
        outcomes,
    })
}

// -0.0 and 0.0 compare equal, so they must hash equal too.
fn coord_key(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

impl TrainingSet {
    /// Predictor dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn outcomes(&self, i: usize) -> &[f64] {
        &self.outcomes[i * self.layer_count..(i + 1) * self.layer_count]
    }

    pub fn outcome(&self, i: usize, layer: usize) -> f64 {
        self.outcomes[i * self.layer_count + layer]
    }

    /// Copies the data back into raw points, e.g. for re-validation or export.
    pub fn points(&self) -> Vec<Point> {
        (0..self.len())
            .map(|i| Point::layered(self.coords(i).to_vec(), self.outcomes(i).to_vec()))
            .collect()
    }

    /// Per-axis `(min, max)` over all points.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for i in 0..self.len() {
            for (bound, &v) in b.iter_mut().zip(self.coords(i)) {
                bound.0 = bound.0.min(v);
                bound.1 = bound.1.max(v);
            }
        }
        b
    }

    /// Returns a copy holding only the given outcome layers, in the given order.
    pub fn select_layers(&self, layers: &[usize]) -> Result<TrainingSet> {
        if layers.is_empty() || layers.iter().any(|&l| l >= self.layer_count) {
            return Err(Error::InvalidArgument(format!(
                "layer selection {layers:?} out of range for {} layers",
                self.layer_count
            )));
        }
        let mut outcomes = Vec::with_capacity(self.len() * layers.len());
        for i in 0..self.len() {
            let row = self.outcomes(i);
            outcomes.extend(layers.iter().map(|&l| row[l]));
        }
        Ok(TrainingSet {
            dim: self.dim,
            layer_count: layers.len(),
            coords: self.coords.clone(),
            outcomes,
        })
    }

    /// Returns a copy whose outcomes are replaced by `f(coords, old outcomes)`.
    pub fn map_outcomes<F>(&self, layer_count: usize, f: F) -> Result<TrainingSet>
    where
        F: Fn(&[f64], &[f64]) -> Vec<f64>,
    {
        let points = (0..self.len())
            .map(|i| Point::layered(self.coords(i).to_vec(), f(self.coords(i), self.outcomes(i))))
            .collect();
        validate_training_set(points, self.dim, layer_count)
    }
}

/// A location at which an outcome is wanted.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    coords: Vec<f64>,
}

impl Query {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if coords.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "query".into(),
                expected: dim,
                got: coords.len(),
            });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                context: "query".into(),
            });
        }
        Ok(Query { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gradient,
    Smooth,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Gradient => "gradient",
            Method::Smooth => "smooth",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(Method::Gradient),
            "smooth" => Ok(Method::Smooth),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

/// Identifies the reference point of an estimate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Index into a [`TrainingSet`].
    Point(usize),
    /// Multi-index of a mesh node.
    Node(Vec<usize>),
}

/// How one axis of the smooth method was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisFlag {
    /// Full four-point stencil, approximant intersection found.
    Corrected,
    /// A stencil end point is missing; the tangent on that side follows the chord.
    BoundaryFallback,
    /// The intersection solve failed; the chord gradient was used.
    NewtonFallback,
    /// No usable interval along this axis (query outside it, or no forward
    /// neighbour); the hyperplane gradient was used.
    ChordFallback,
}

impl AxisFlag {
    pub fn name(self) -> &'static str {
        match self {
            AxisFlag::Corrected => "corrected",
            AxisFlag::BoundaryFallback => "boundary-fallback",
            AxisFlag::NewtonFallback => "newton-fallback",
            AxisFlag::ChordFallback => "chord-fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisDiagnostic {
    pub axis: usize,
    pub flag: AxisFlag,
    /// Root-finder iterations spent on this axis (0 when no solve was needed).
    pub iterations: usize,
    /// Effective gradient applied along this axis from the reference point.
    pub gradient: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Largest `‖Ax − b‖∞` over the linear solves behind the estimate.
    pub residual: f64,
    /// Estimate produced by each point combination, in plan order.
    pub combination_values: Vec<f64>,
    /// Per-axis breakdown (smooth method only).
    pub axes: Vec<AxisDiagnostic>,
    /// Query lies outside the bounding box of the training data.
    pub extrapolated: bool,
}

/// Result for a single query and outcome layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
    pub reference: Reference,
    pub combinations: usize,
    pub diagnostics: Diagnostics,
}
