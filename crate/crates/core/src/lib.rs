//! Local-area interpolation and regression for multidimensional data.
//!
//! Outcomes at query points are reconstructed from a handful of nearby
//! training points, either through the local hyperplane those points span
//! (the gradient method) or by additionally bending that hyperplane along
//! every axis to follow a smooth cubic cross-section (the smooth method).

pub mod bench;
pub mod error;
pub mod gradient;
pub mod io;
pub mod layers;
pub mod mesh;
pub mod model;
pub mod neighborhood;
pub mod smooth;
pub mod solver;

pub use error::{Error, Result};
pub use gradient::{evaluate_gradient, GradientConfig, GradientVector};
pub use layers::{evaluate, evaluate_layers, EvalConfig, LayeredResult};
pub use mesh::{Lattice, MeshIndex, MeshView};
pub use model::{validate_training_set, Estimate, Method, Point, Query, Reference, TrainingSet};
pub use neighborhood::{CombinationStrategy, DataView, ScatteredView};
pub use smooth::{evaluate_smooth, SmoothConfig};
