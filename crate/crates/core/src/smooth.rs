//! The smooth-approximating-surface reconstructor.
//!
//! Along every axis the four mesh points `Y0..Y3` around the query interval
//! fix a chord `Y1Y2` and tangent directions at both of its ends (each
//! tangent bisects the neighbouring chords). In a frame rotated onto the
//! chord, the cross-section between `Y1` and `Y2` is modelled by
//!
//! ```text
//! A(x) = K x (B − x) (g1R (B − x)^d + g2L x^d),   K = 1 / B^(d+1)
//! ```
//!
//! which vanishes at both ends and has slopes `g1R` at 0 and `−g2L` at `B`.
//! The query's vertical line is intersected with `A`, and the outcome
//! increment along the axis is read off the line from `Y2` through that
//! intersection point.

use crate::error::{Error, Result};
use crate::gradient::estimate_gradients;
use crate::mesh::Lattice;
use crate::model::{AxisDiagnostic, AxisFlag, Diagnostics, Estimate, Method};
use crate::neighborhood::{axis_stencil, locate_reference, select_simplex, DataView, Stencil1D};
use crate::solver::{find_root, RootMethod, RootProblem, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};

/// `|tan F1|` below which the chord is treated as horizontal.
const FLAT_CHORD: f64 = 1e-12;

/// Relative distance to the chord's end below which the adjusted slope is
/// taken in its vertical limit.
const END_EPSILON: f64 = 1e-12;

/// Parameters of the approximant `A` on `[0, B]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxFunctionParams {
    pub b: f64,
    pub g1r: f64,
    pub g2l: f64,
    pub d: f64,
}

impl ApproxFunctionParams {
    pub fn new(b: f64, g1r: f64, g2l: f64, d: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("interval length {b} must be positive")));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidArgument(format!("shape exponent {d} must be positive")));
        }
        if !g1r.is_finite() || !g2l.is_finite() {
            return Err(Error::NonFiniteValue {
                context: "end gradients".into(),
            });
        }
        Ok(ApproxFunctionParams { b, g1r, g2l, d })
    }

    /// The scale `K = 1/B^(d+1)`.
    pub fn k_scale(&self) -> f64 {
        self.b.powf(-(self.d + 1.0))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = self.b - x;
        self.k_scale() * x * r * (self.g1r * r.powf(self.d) + self.g2l * x.powf(self.d))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (b, d) = (self.b, self.d);
        let r = b - x;
        let (rd, xd) = (r.powf(d), x.powf(d));
        let v = self.g1r * rd + self.g2l * xd;
        // d/dx of g1R r^d + g2L x^d, multiplied through by x r to avoid the
        // singular powers at the ends when d < 1.
        let xr_dv = d * (self.g2l * xd * r - self.g1r * x * rd);
        self.k_scale() * ((b - 2.0 * x) * v + xr_dv)
    }

    fn second_derivative(&self, x: f64) -> f64 {
        let h = 1e-6 * self.b;
        (self.derivative(x + h) - self.derivative(x - h)) / (2.0 * h)
    }

    /// Sign changes of `f` over a uniform sample of the open interval.
    fn sign_changes(&self, f: impl Fn(f64) -> f64) -> usize {
        const SAMPLES: usize = 4096;
        let mut changes = 0;
        let mut prev = 0.0f64;
        for s in 1..SAMPLES {
            let v = f(self.b * s as f64 / SAMPLES as f64);
            if v.abs() <= 1e-12 * (self.g1r.abs() + self.g2l.abs()) {
                continue;
            }
            if prev != 0.0 && v.signum() != prev.signum() {
                changes += 1;
            }
            prev = v;
        }
        changes
    }

    /// Number of interior extrema of `A`.
    pub fn extremum_count(&self) -> usize {
        self.sign_changes(|x| self.derivative(x))
    }

    /// Number of interior inflection points of `A`.
    pub fn inflection_count(&self) -> usize {
        self.sign_changes(|x| self.second_derivative(x))
    }

    /// The approximant bends more than once between the ends (several
    /// extrema), which only happens for `d > 1`.
    pub fn has_spurious_inflection(&self) -> bool {
        self.extremum_count() > 1
    }
}

/// `A(x)` for the given parameters.
pub fn approx_eval(params: &ApproxFunctionParams, x: f64) -> f64 {
    params.eval(x)
}

/// Chord and tangent-deviation angles of an axis stencil, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilAngles {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub fg1: f64,
    pub fg2: f64,
    /// `Y0` is missing, so `fg1` was set to zero.
    pub left_missing: bool,
    /// `Y3` is missing, so `fg2` was set to zero.
    pub right_missing: bool,
}

impl StencilAngles {
    pub fn at_boundary(&self) -> bool {
        self.left_missing || self.right_missing
    }
}

fn chord_angle(stencil: &Stencil1D, from: usize) -> Result<f64> {
    let dx = stencil.x[from + 1] - stencil.x[from];
    if !(dx > 0.0) {
        return Err(Error::ZeroWidthSegment { axis: stencil.axis });
    }
    Ok(((stencil.y[from + 1] - stencil.y[from]) / dx).atan())
}

/// Chord angles `F0, F1, F2` and the tangent deviations at `Y1` and `Y2`.
/// The tangent at each inner point bisects its two chords, so
/// `Fg1 = −(F1 − F0)/2` and `Fg2 = (F1 − F2)/2`, both measured in the
/// chord's rotated frame with `Fg2` taken looking back from `Y2`.
pub fn segment_angles(stencil: &Stencil1D) -> Result<StencilAngles> {
    if !stencil.present[1] || !stencil.present[2] {
        return Err(Error::InvalidArgument(format!(
            "axis {} stencil lacks the interval end points",
            stencil.axis
        )));
    }
    let f1 = chord_angle(stencil, 1)?;
    let f0 = if stencil.present[0] { chord_angle(stencil, 0)? } else { f1 };
    let f2 = if stencil.present[3] { chord_angle(stencil, 2)? } else { f1 };
    Ok(StencilAngles {
        f0,
        f1,
        f2,
        fg1: -(f1 - f0) / 2.0,
        fg2: (f1 - f2) / 2.0,
        left_missing: !stencil.present[0],
        right_missing: !stencil.present[3],
    })
}

/// The query's vertical line meeting the approximant, in the rotated frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionProblem {
    pub params: ApproxFunctionParams,
    /// Where the vertical line crosses the chord.
    pub x_p: f64,
    /// Slope `1/tan F1` of the vertical line in the rotated frame.
    pub k: f64,
    pub c: f64,
    /// Starting abscissa for Newton.
    pub x0: f64,
    /// Rotation angle `F1` of the chord.
    pub f1: f64,
    /// The chord is flat: the line stays vertical and `x* = x_p`.
    pub trivial: bool,
}

pub fn build_intersection(
    stencil: &Stencil1D,
    angles: &StencilAngles,
    query_x: f64,
    d: f64,
) -> Result<IntersectionProblem> {
    let (x1, x2) = (stencil.x[1], stencil.x[2]);
    if !(query_x >= x1 && query_x <= x2) {
        return Err(Error::InvalidArgument(format!(
            "query coordinate {query_x} outside the interval [{x1}, {x2}]"
        )));
    }
    let cos = angles.f1.cos();
    let tan = angles.f1.tan();
    let params = ApproxFunctionParams::new((x2 - x1) / cos, angles.fg1.tan(), angles.fg2.tan(), d)?;
    let x_p = ((query_x - x1) / cos).min(params.b);
    let trivial = tan.abs() < FLAT_CHORD;
    let (k, c, x0) = if trivial {
        (f64::INFINITY, f64::NEG_INFINITY, x_p)
    } else {
        let k = 1.0 / tan;
        let x0 = (x_p + params.eval(x_p) * tan).clamp(0.0, params.b);
        (k, -k * x_p, x0)
    };
    Ok(IntersectionProblem {
        params,
        x_p,
        k,
        c,
        x0,
        f1: angles.f1,
        trivial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    pub x: f64,
    pub y: f64,
    pub iterations: usize,
    pub method: Option<RootMethod>,
}

/// Solves `A(x) = k x + c` on `[0, B]`. The equation is scaled by `tan F1`
/// to `x_p − x + A(x) tan F1 = 0`, which keeps its residual meaningful for
/// nearly flat chords; `tolerance` applies to that form.
pub fn solve_intersection(problem: &IntersectionProblem, tolerance: f64, max_iterations: usize) -> Result<Intersection> {
    let a = &problem.params;
    if problem.trivial {
        return Ok(Intersection {
            x: problem.x_p,
            y: a.eval(problem.x_p),
            iterations: 0,
            method: None,
        });
    }
    let tan = problem.f1.tan();
    let x_p = problem.x_p;
    let root = find_root(
        &RootProblem::new(|x| (x_p - x + a.eval(x) * tan, a.derivative(x) * tan - 1.0), problem.x0)
            .with_bracket(0.0, a.b)
            .with_tolerance(tolerance)
            .with_max_iterations(max_iterations),
    )?;
    Ok(Intersection {
        x: root.x,
        y: a.eval(root.x),
        iterations: root.iterations,
        method: Some(root.method),
    })
}

/// The slope `tan(F1 − F2C)` of the line from the intersection point to
/// `Y2`, with `F2C = atan(y*/(B − x*))`. The flag reports that `x*` sat at
/// the chord's end and `F2C` was taken as its `±π/2` limit.
pub fn adjust_gradient(f1: f64, x: f64, y: f64, b: f64) -> (f64, bool) {
    let gap = b - x;
    if gap <= END_EPSILON * b {
        let f2c = if y == 0.0 { 0.0 } else { std::f64::consts::FRAC_PI_2 * y.signum() };
        return ((f1 - f2c).tan(), true);
    }
    ((f1 - (y / gap).atan()).tan(), false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothConfig {
    /// Shape exponent `d` of the approximant.
    pub d: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        SmoothConfig {
            d: 1.0,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl SmoothConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) || !self.d.is_finite() {
            return Err(Error::InvalidArgument(format!("shape exponent {} must be positive", self.d)));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "tolerance must be positive and max iterations at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Advisory messages about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.d > 1.0 {
            out.push(format!(
                "shape exponent d = {} > 1: the approximant may develop extra inflection points",
                self.d
            ));
        }
        out
    }
}

/// Outcome increment from `Y1` to the query along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisIncrement {
    pub delta: f64,
    pub flag: AxisFlag,
    pub iterations: usize,
    /// Slope applied from `Y2` (or the chord slope when not corrected).
    pub slope: f64,
}

/// Corrected increment for a stencil whose interval contains `query_x`.
/// `fallback_slope` is used from `Y1` when there is no usable interval.
pub fn axis_increment(stencil: &Stencil1D, query_x: f64, fallback_slope: f64, config: &SmoothConfig) -> AxisIncrement {
    let chord_fallback = AxisIncrement {
        delta: fallback_slope * (query_x - stencil.x[1]),
        flag: AxisFlag::ChordFallback,
        iterations: 0,
        slope: fallback_slope,
    };
    if !stencil.present[1] || !stencil.present[2] || !(query_x >= stencil.x[1] && query_x <= stencil.x[2]) {
        return chord_fallback;
    }
    let Ok(angles) = segment_angles(stencil) else {
        return chord_fallback;
    };
    let (x1, x2) = (stencil.x[1], stencil.x[2]);
    let rise = stencil.y[2] - stencil.y[1];
    let chord = rise / (x2 - x1);
    let newton_fallback = |iterations| AxisIncrement {
        delta: chord * (query_x - x1),
        flag: AxisFlag::NewtonFallback,
        iterations,
        slope: chord,
    };
    let Ok(problem) = build_intersection(stencil, &angles, query_x, config.d) else {
        return newton_fallback(0);
    };
    let hit = match solve_intersection(&problem, config.tolerance, config.max_iterations) {
        Ok(hit) => hit,
        Err(Error::NoConvergence { iterations }) => return newton_fallback(iterations),
        Err(_) => return newton_fallback(0),
    };
    let (slope, at_end) = adjust_gradient(angles.f1, hit.x, hit.y, problem.params.b);
    let delta = if at_end {
        // Query sits on Y2; read the intersection height directly.
        hit.x * angles.f1.sin() + hit.y * angles.f1.cos()
    } else {
        rise + slope * (query_x - x2)
    };
    if !delta.is_finite() {
        return newton_fallback(hit.iterations);
    }
    AxisIncrement {
        delta,
        flag: if angles.at_boundary() {
            AxisFlag::BoundaryFallback
        } else {
            AxisFlag::Corrected
        },
        iterations: hit.iterations,
        slope,
    }
}

/// Smooth-surface estimate at `query` for one outcome layer of a mesh.
///
/// The reference is the lower corner of the query's cell. The hyperplane
/// gradient through its forward neighbours projects jittered stencil points
/// back onto the reference's axis lines and also serves as the fallback
/// slope on axes without a usable interval. Axis failures never abort the
/// query; they are recorded per axis.
pub fn evaluate_smooth(lattice: &dyn Lattice, query: &[f64], config: &SmoothConfig, layer: usize) -> Result<Estimate> {
    config.validate()?;
    if layer >= lattice.layer_count() {
        return Err(Error::InvalidArgument(format!("layer {layer} out of range")));
    }
    let view = DataView::Mesh(lattice);
    let located = locate_reference(view, query)?;
    let simplex = select_simplex(view, query, &located.reference)?;
    let plane = estimate_gradients(view, &simplex, layer)?;
    let node = match &located.reference {
        crate::model::Reference::Node(node) => node.clone(),
        crate::model::Reference::Point(_) => unreachable!("mesh views yield node references"),
    };
    let y_ref = lattice.node_outcome(&node, layer);

    let mut value = y_ref;
    let mut axes = Vec::with_capacity(query.len());
    for (axis, &q) in query.iter().enumerate() {
        let stencil = axis_stencil(lattice, &node, axis, layer, Some(&plane.p));
        let inc = axis_increment(&stencil, q, plane.p[axis], config);
        value += inc.delta;
        let offset = q - stencil.x[1];
        axes.push(AxisDiagnostic {
            axis,
            flag: inc.flag,
            iterations: inc.iterations,
            gradient: if offset != 0.0 { inc.delta / offset } else { inc.slope },
        });
    }
    Ok(Estimate {
        value,
        method: Method::Smooth,
        reference: located.reference,
        combinations: 1,
        diagnostics: Diagnostics {
            residual: plane.residual,
            combination_values: vec![value],
            axes,
            extrapolated: located.extrapolated,
        },
    })
}
