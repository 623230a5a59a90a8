//! Vector-valued outcomes. Every component is an independent layer that is
//! evaluated on its own and assembled in layer order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gradient::{evaluate_gradient, GradientConfig};
use crate::model::{Estimate, Method};
use crate::neighborhood::{CombinationStrategy, DataView};
use crate::smooth::{evaluate_smooth, SmoothConfig};

/// Method choice plus the settings of both methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub method: Method,
    /// Point combinations averaged by the gradient method.
    pub combinations: usize,
    pub strategy: CombinationStrategy,
    pub smooth: SmoothConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            method: Method::Smooth,
            combinations: 1,
            strategy: CombinationStrategy::Nearest,
            smooth: SmoothConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn gradient(&self) -> GradientConfig {
        GradientConfig {
            combinations: self.combinations,
            strategy: self.strategy,
        }
    }
}

/// Evaluates one layer with the configured method. The smooth method needs
/// mesh data.
pub fn evaluate(view: DataView<'_>, query: &[f64], config: &EvalConfig, layer: usize) -> Result<Estimate> {
    match (config.method, view) {
        (Method::Gradient, _) => evaluate_gradient(view, query, &config.gradient(), layer),
        (Method::Smooth, DataView::Mesh(lattice)) => evaluate_smooth(lattice, query, &config.smooth, layer),
        (Method::Smooth, DataView::Scattered(_)) => Err(Error::MeshRequired),
    }
}

/// One estimate (or error) per outcome layer.
#[derive(Debug)]
pub struct LayeredResult {
    pub components: Vec<Result<Estimate>>,
}

impl LayeredResult {
    /// The component values, or the first failure.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.components
            .iter()
            .map(|c| c.as_ref().map(|e| e.value).map_err(Clone::clone))
            .collect()
    }
}

/// Evaluates every layer, in parallel, keeping layer order in the result.
pub fn evaluate_layers(view: DataView<'_>, query: &[f64], config: &EvalConfig) -> LayeredResult {
    let components = (0..view.layer_count())
        .into_par_iter()
        .map(|layer| evaluate(view, query, config, layer))
        .collect();
    LayeredResult { components }
}
