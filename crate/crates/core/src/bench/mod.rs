//! Test surfaces, generated datasets, error metrics and the table drivers.

pub mod data;
pub mod functions;
pub mod runner;
pub mod stats;

pub use data::{gen_mesh_dataset, gen_queries, CellSelection, MeshDataset, NoiseSpec, ProceduralMesh, QuerySet, QuerySpec};
pub use functions::TestFunction;
pub use runner::{run_benchmark, BenchConfig, Report, ReportRow, Scale, Table};
pub use stats::{compute_noise_ratios, compute_stats, ErrorStats, NoiseRatios};
