//! The gradient-based reconstructor.
//!
//! Partial derivatives at the reference point come from the `n × n` system
//! whose rows are the coordinate differences between each auxiliary point
//! and the reference, with the outcome differences on the right-hand side.
//! The estimate is the reference outcome moved along that hyperplane to the
//! query. Several point combinations can be averaged.

use crate::error::{Error, Result};
use crate::model::{Diagnostics, Estimate, Method, Reference};
use crate::neighborhood::{enumerate_combinations, locate_reference, CombinationStrategy, DataView, Simplex};
use crate::solver::{solve_linear_system, LinearSystem};

/// Estimated partial derivatives at a reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub p: Vec<f64>,
    /// `‖Ax − b‖∞` of the solve.
    pub residual: f64,
}

/// Solves for the gradient given the reference point and `n` auxiliary
/// points, each as `(coords, outcome)`.
pub fn solve_gradients(reference: (&[f64], f64), auxiliaries: &[(&[f64], f64)]) -> Result<GradientVector> {
    let (origin, y_ref) = reference;
    let n = origin.len();
    if auxiliaries.len() != n {
        return Err(Error::DimensionMismatch {
            context: "auxiliary points".into(),
            expected: n,
            got: auxiliaries.len(),
        });
    }
    let mut a = Vec::with_capacity(n * n);
    let mut b = Vec::with_capacity(n);
    for (coords, y) in auxiliaries {
        a.extend(coords.iter().zip(origin).map(|(x, o)| x - o));
        b.push(y - y_ref);
    }
    let sol = solve_linear_system(&LinearSystem::new(n, a, b)?)?;
    Ok(GradientVector {
        p: sol.x,
        residual: sol.residual,
    })
}

/// Gradient at the simplex' reference point for one outcome layer.
pub fn estimate_gradients(view: DataView<'_>, simplex: &Simplex, layer: usize) -> Result<GradientVector> {
    let origin = view.coords(&simplex.reference);
    let y_ref = view.outcome(&simplex.reference, layer);
    let aux: Vec<(Vec<f64>, f64)> = simplex
        .auxiliaries
        .iter()
        .map(|r| (view.coords(r), view.outcome(r, layer)))
        .collect();
    let borrowed: Vec<(&[f64], f64)> = aux.iter().map(|(c, y)| (c.as_slice(), *y)).collect();
    solve_gradients((&origin, y_ref), &borrowed).map_err(|e| match e {
        Error::SingularSystem { .. } => Error::DegenerateNeighborhood {
            reference: reference_id(&simplex.reference),
        },
        other => other,
    })
}

pub(crate) fn reference_id(r: &Reference) -> usize {
    match r {
        Reference::Point(i) => *i,
        Reference::Node(_) => usize::MAX,
    }
}

/// `y_ref + Σ p_i (x_i^query − x_i^ref)`.
pub fn extrapolate(reference: &[f64], y_ref: f64, gradient: &[f64], query: &[f64]) -> f64 {
    y_ref
        + gradient
            .iter()
            .zip(query.iter().zip(reference))
            .map(|(p, (q, r))| p * (q - r))
            .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientConfig {
    pub combinations: usize,
    pub strategy: CombinationStrategy,
}

impl Default for GradientConfig {
    fn default() -> Self {
        GradientConfig {
            combinations: 1,
            strategy: CombinationStrategy::Nearest,
        }
    }
}

/// Mean of the per-combination hyperplane estimates. Combinations whose
/// system turns out singular are dropped; the call only fails if all do.
pub fn evaluate_gradient(view: DataView<'_>, query: &[f64], config: &GradientConfig, layer: usize) -> Result<Estimate> {
    if layer >= view.layer_count() {
        return Err(Error::InvalidArgument(format!("layer {layer} out of range")));
    }
    let located = locate_reference(view, query)?;
    let plan = enumerate_combinations(view, query, config.combinations, config.strategy)?;

    let mut values = Vec::with_capacity(plan.len());
    let mut residual: f64 = 0.0;
    let mut last_err = None;
    for simplex in &plan.simplexes {
        match estimate_gradients(view, simplex, layer) {
            Ok(g) => {
                let origin = view.coords(&simplex.reference);
                let y_ref = view.outcome(&simplex.reference, layer);
                values.push(extrapolate(&origin, y_ref, &g.p, query));
                residual = residual.max(g.residual);
            }
            Err(e) => last_err = Some(e),
        }
    }
    if values.is_empty() {
        return Err(last_err.unwrap_or(Error::DegenerateNeighborhood {
            reference: reference_id(&located.reference),
        }));
    }
    let value = values.iter().sum::<f64>() / values.len() as f64;
    Ok(Estimate {
        value,
        method: Method::Gradient,
        reference: plan.simplexes[0].reference.clone(),
        combinations: values.len(),
        diagnostics: Diagnostics {
            residual,
            combination_values: values,
            axes: Vec::new(),
            extrapolated: located.extrapolated,
        },
    })
}
