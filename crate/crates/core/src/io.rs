//! File formats: CSV datasets and query lists, the JSON mesh sidecar,
//! imputation output and benchmark reports.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::Report;
use crate::error::{Error, Result};
use crate::layers::{evaluate_layers, EvalConfig, LayeredResult};
use crate::mesh::MeshIndex;
use crate::model::{validate_training_set, AxisFlag, Point, TrainingSet};
use crate::neighborhood::DataView;

/// Mesh description stored next to a dataset. Without `axes` the grid is
/// inferred from the distinct coordinate values (which requires no jitter).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeshMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub jitter: f64,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub training: TrainingSet,
    pub mesh: Option<MeshIndex>,
}

/// `data.csv` → `data.mesh.json`.
pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("mesh.json")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => parse_err(line, e.to_string()),
    }
}

/// Column layout of a header: `x1..xn` followed by `y` or `y1..ym`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    dim: usize,
    layers: usize,
}

fn parse_header(header: &csv::StringRecord, require_outcomes: bool) -> Result<Layout> {
    let names: Vec<&str> = header.iter().collect();
    let dim = names.iter().take_while(|n| n.starts_with('x')).count();
    for (i, name) in names[..dim].iter().enumerate() {
        if *name != format!("x{}", i + 1) {
            return Err(parse_err(1, format!("expected column `x{}`, found `{name}`", i + 1)));
        }
    }
    if dim == 0 {
        return Err(parse_err(1, "no predictor columns (x1, x2, ...)"));
    }
    let rest = &names[dim..];
    let layers = match rest {
        [] if !require_outcomes => 0,
        [] => return Err(parse_err(1, "no outcome column (y or y1, y2, ...)")),
        ["y"] => 1,
        _ => {
            for (j, name) in rest.iter().enumerate() {
                if *name != format!("y{}", j + 1) {
                    return Err(parse_err(1, format!("expected column `y{}`, found `{name}`", j + 1)));
                }
            }
            rest.len()
        }
    };
    Ok(Layout { dim, layers })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

/// Reads every data row as numbers, with the line number of each row.
fn numeric_rows<R: Read>(rdr: &mut csv::Reader<R>, width: usize) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(parse_err(line, format!("expected {width} fields, found {}", rec.len())));
        }
        let values = rec
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("column {}: `{f}` is not a number", c + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

/// Parses a CSV dataset and validates it.
pub fn read_training<R: Read>(input: R) -> Result<TrainingSet> {
    let mut rdr = reader(input);
    let layout = parse_header(rdr.headers().map_err(csv_err)?, true)?;
    let rows = numeric_rows(&mut rdr, layout.dim + layout.layers)?;
    let points = rows
        .into_iter()
        .map(|(_, mut v)| {
            let outcomes = v.split_off(layout.dim);
            Point::layered(v, outcomes)
        })
        .collect();
    validate_training_set(points, layout.dim, layout.layers)
}

pub fn read_mesh_meta<R: Read>(input: R) -> Result<MeshMeta> {
    serde_json::from_reader(input).map_err(|e| parse_err(e.line(), e.to_string()))
}

pub fn build_mesh(training: &TrainingSet, meta: MeshMeta) -> Result<MeshIndex> {
    match meta.axes {
        Some(axes) => MeshIndex::build(training, axes, meta.jitter),
        None => MeshIndex::infer(training),
    }
}

/// Loads a dataset plus its mesh. The mesh comes from `mesh_path` when
/// given, otherwise from the sidecar next to the data if it exists.
pub fn load_dataset(path: &Path, mesh_path: Option<&Path>) -> Result<Dataset> {
    let training = read_training(File::open(path)?)?;
    let sidecar = sidecar_path(path);
    let meta_path = match mesh_path {
        Some(p) => Some(p.to_path_buf()),
        None if sidecar.exists() => Some(sidecar),
        None => None,
    };
    let mesh = match meta_path {
        Some(p) => Some(build_mesh(&training, read_mesh_meta(File::open(p)?)?)?),
        None => None,
    };
    Ok(Dataset { training, mesh })
}

fn header_for(dim: usize, layers: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    if layers == 1 {
        h.push("y".into());
    } else {
        h.extend((1..=layers).map(|j| format!("y{j}")));
    }
    h
}

/// Writes a dataset in the format [`read_training`] accepts. Values use the
/// shortest representation that parses back to the same number.
pub fn write_training<W: Write>(out: W, training: &TrainingSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header_for(training.dim(), training.layer_count()))
        .map_err(csv_err)?;
    for i in 0..training.len() {
        let row = training.coords(i).iter().chain(training.outcomes(i)).map(f64::to_string);
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(path: &Path, training: &TrainingSet, mesh: Option<&MeshMeta>) -> Result<()> {
    write_training(BufWriter::new(File::create(path)?), training)?;
    if let Some(meta) = mesh {
        let f = BufWriter::new(File::create(sidecar_path(path))?);
        serde_json::to_writer_pretty(f, meta).map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(())
}

/// Reads query coordinates. Outcome columns, if present, are ignored so a
/// dataset file can be used as its own query list.
pub fn read_queries<R: Read>(input: R, dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(input);
    let layout = parse_header(rdr.headers().map_err(csv_err)?, false)?;
    if layout.dim != dim {
        return Err(Error::DimensionMismatch {
            context: "query file".into(),
            expected: dim,
            got: layout.dim,
        });
    }
    let rows = numeric_rows(&mut rdr, layout.dim + layout.layers)?;
    rows.into_iter()
        .map(|(line, mut v)| {
            v.truncate(dim);
            if v.iter().any(|c| !c.is_finite()) {
                return Err(parse_err(line, "non-finite coordinate"));
            }
            Ok(v)
        })
        .collect()
}

/// Evaluates all layers for every query. Results keep the query order
/// whatever the worker count.
pub fn impute(view: DataView<'_>, queries: &[Vec<f64>], config: &EvalConfig, workers: usize) -> Result<Vec<LayeredResult>> {
    if workers == 0 {
        return Err(Error::InvalidArgument("worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| queries.par_iter().map(|q| evaluate_layers(view, q, config)).collect()))
}

/// `extrapolated` plus every axis that was not fully corrected, as
/// `x<axis>:<flag>`, semicolon-separated and without repeats.
fn flags_cell(result: &LayeredResult) -> String {
    let mut flags: Vec<String> = Vec::new();
    let mut push = |s: String| {
        if !flags.contains(&s) {
            flags.push(s);
        }
    };
    for est in result.components.iter().flatten() {
        if est.diagnostics.extrapolated {
            push("extrapolated".into());
        }
        for a in &est.diagnostics.axes {
            if a.flag != AxisFlag::Corrected {
                push(format!("x{}:{}", a.axis + 1, a.flag.name()));
            }
        }
    }
    flags.join(";")
}

fn status_cell(result: &LayeredResult) -> String {
    let multi = result.components.len() > 1;
    let errors: Vec<String> = result
        .components
        .iter()
        .enumerate()
        .filter_map(|(j, c)| c.as_ref().err().map(|e| if multi { format!("y{}: {e}", j + 1) } else { e.to_string() }))
        .collect();
    if errors.is_empty() {
        "ok".into()
    } else {
        format!("error: {}", errors.join("; "))
    }
}

/// Writes one row per query: coordinates, estimates (empty where a layer
/// failed), method, status and flags.
pub fn write_imputed<W: Write>(out: W, queries: &[Vec<f64>], results: &[LayeredResult], config: &EvalConfig, layers: usize) -> Result<()> {
    let dim = queries.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = header_for(dim, layers);
    header.extend(["method", "status", "flags"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    let method = config.method.to_string();
    for (q, r) in queries.iter().zip(results) {
        let mut row: Vec<String> = q.iter().map(f64::to_string).collect();
        row.extend(r.components.iter().map(|c| c.as_ref().map_or(String::new(), |e| e.value.to_string())));
        row.push(method.clone());
        row.push(status_cell(r));
        row.push(flags_cell(r));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per scenario, each carrying the run configuration.
pub fn write_report_jsonl<W: Write>(mut out: W, report: &Report) -> Result<()> {
    let config = serde_json::to_value(report.config).map_err(|e| Error::Io(e.to_string()))?;
    for row in &report.rows {
        let mut v = serde_json::to_value(row).map_err(|e| Error::Io(e.to_string()))?;
        if let serde_json::Value::Object(m) = &mut v {
            m.insert("config".into(), config.clone());
        }
        serde_json::to_writer(&mut out, &v).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Error against the base-10 logarithm of the training point count, for
/// rows that have one.
pub fn write_plot_csv<W: Write>(out: W, report: &Report) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "table",
        "scenario",
        "function",
        "method",
        "points",
        "log10_points",
        "rel_err",
        "avg_abs_err",
        "time_per_query_s",
    ])
    .map_err(csv_err)?;
    for row in &report.rows {
        let Some(points) = row.points else { continue };
        w.write_record([
            row.table.to_string(),
            row.scenario.clone(),
            row.function.clone(),
            row.method.to_string(),
            points.to_string(),
            (points as f64).log10().to_string(),
            row.stats.rel_err.to_string(),
            row.stats.avg_abs_err.to_string(),
            row.time_per_query_s.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
