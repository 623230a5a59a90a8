//! Numeric kernels: a small dense Gauss solver with partial pivoting and a
//! safeguarded Newton–Raphson root finder.

use crate::error::{Error, Result};

/// Pivots smaller than this fraction of their row's largest original entry
/// mark the system as singular.
pub const SINGULAR_RELATIVE: f64 = 1e-12;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITERATIONS: usize = 20;

/// A square system `A x = b` with `A` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LinearSystem {
    pub fn new(n: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "matrix".into(),
                expected: n * n,
                got: a.len(),
            });
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "right-hand side".into(),
                expected: n,
                got: b.len(),
            });
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                context: "linear system".into(),
            });
        }
        Ok(LinearSystem { n, a, b })
    }

    pub fn from_rows(rows: &[Vec<f64>], b: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "matrix row".into(),
                    expected: n,
                    got: row.len(),
                });
            }
            a.extend_from_slice(row);
        }
        LinearSystem::new(n, a, b)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `‖A x − b‖∞`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let row = &self.a[i * self.n..(i + 1) * self.n];
                let ax: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
                (ax - self.b[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub residual: f64,
}

/// Gauss elimination with row partial pivoting.
pub fn solve_linear_system(sys: &LinearSystem) -> Result<Solution> {
    let n = sys.n;
    let mut a = sys.a.clone();
    let mut b = sys.b.clone();
    let mut scale: Vec<f64> = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .collect();

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= SINGULAR_RELATIVE * scale[pivot_row] || pivot_abs == 0.0 {
            return Err(Error::SingularSystem {
                pivot: pivot_abs,
                column: col,
            });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
            scale.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[r * n + col] = 0.0;
            for k in col + 1..n {
                a[r * n + k] -= factor * a[col * n + k];
            }
            b[r] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    let residual = sys.residual(&x);
    Ok(Solution { x, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    Newton,
    Bisection,
}

/// A scalar root-finding problem. `func` returns `(f(x), f'(x))`.
pub struct RootProblem<F> {
    pub func: F,
    pub x0: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Interval the root must lie in; enables the bisection fallback.
    pub bracket: Option<(f64, f64)>,
}

impl<F: Fn(f64) -> (f64, f64)> RootProblem<F> {
    pub fn new(func: F, x0: f64) -> Self {
        RootProblem {
            func,
            x0,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            bracket: None,
        }
    }

    pub fn with_bracket(mut self, lo: f64, hi: f64) -> Self {
        self.bracket = Some((lo, hi));
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    /// Newton steps taken, plus bisection halvings when the fallback ran.
    pub iterations: usize,
    pub method: RootMethod,
}

/// Newton–Raphson from `x0`, stopping once `|f(x)|` or the last step is at
/// most the tolerance. If Newton stalls, diverges or leaves the bracket, the
/// bracket is bisected instead (it must contain a sign change).
pub fn find_root<F: Fn(f64) -> (f64, f64)>(p: &RootProblem<F>) -> Result<Root> {
    if !(p.tolerance > 0.0) || p.max_iterations == 0 {
        return Err(Error::InvalidArgument(
            "root finder needs tolerance > 0 and at least one iteration".into(),
        ));
    }
    let inside = |x: f64| match p.bracket {
        Some((lo, hi)) => x >= lo && x <= hi,
        None => true,
    };

    let mut x = p.x0;
    let mut steps = 0;
    if inside(x) {
        loop {
            let (f, df) = (p.func)(x);
            if f.abs() <= p.tolerance {
                return Ok(Root {
                    x,
                    iterations: steps,
                    method: RootMethod::Newton,
                });
            }
            if steps == p.max_iterations || !f.is_finite() || !df.is_finite() || df == 0.0 {
                break;
            }
            let next = x - f / df;
            steps += 1;
            if !next.is_finite() || !inside(next) {
                break;
            }
            let dx = (next - x).abs();
            x = next;
            if dx <= p.tolerance {
                return Ok(Root {
                    x,
                    iterations: steps,
                    method: RootMethod::Newton,
                });
            }
        }
    }

    let Some((mut lo, mut hi)) = p.bracket else {
        return Err(Error::NoConvergence { iterations: steps });
    };
    let mut f_lo = (p.func)(lo).0;
    let f_hi = (p.func)(hi).0;
    if f_lo == 0.0 {
        return Ok(Root {
            x: lo,
            iterations: steps,
            method: RootMethod::Bisection,
        });
    }
    if f_hi == 0.0 {
        return Ok(Root {
            x: hi,
            iterations: steps,
            method: RootMethod::Bisection,
        });
    }
    if !(f_lo.signum() != f_hi.signum()) || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::NoConvergence { iterations: steps });
    }
    while hi - lo > p.tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = (p.func)(mid).0;
        steps += 1;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root {
        x: 0.5 * (lo + hi),
        iterations: steps,
        method: RootMethod::Bisection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let sys = LinearSystem::from_rows(
            &[vec![1., 0., 0.], vec![0., 1., 0.], vec![0., 0., 1.]],
            vec![1., 2., 3.],
        )
        .unwrap();
        let sol = solve_linear_system(&sys).unwrap();
        assert_eq!(sol.x, vec![1., 2., 3.]);
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn rank_deficient_system_is_singular() {
        let sys = LinearSystem::from_rows(&[vec![1., 1.], vec![1., 1.]], vec![1., 2.]).unwrap();
        assert!(matches!(solve_linear_system(&sys), Err(Error::SingularSystem { .. })));
        let zero = LinearSystem::from_rows(&[vec![0., 0.], vec![0., 1.]], vec![1., 2.]).unwrap();
        assert!(matches!(solve_linear_system(&zero), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn two_by_two_matches_cramer() {
        // Cramer's rule by hand: det = 2*3 - 1*1 = 5,
        // x = (5*3 - 1*10)/5 = 1, y = (2*10 - 1*5)/5 = 3.
        let sys = LinearSystem::from_rows(&[vec![2., 1.], vec![1., 3.]], vec![5., 10.]).unwrap();
        let sol = solve_linear_system(&sys).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14);
        assert!((sol.x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn needs_pivoting() {
        let sys = LinearSystem::from_rows(&[vec![0., 1.], vec![1., 0.]], vec![2., 3.]).unwrap();
        assert_eq!(solve_linear_system(&sys).unwrap().x, vec![3., 2.]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(LinearSystem::new(2, vec![1.0; 3], vec![0.0; 2]).is_err());
        assert!(LinearSystem::new(2, vec![1.0; 4], vec![0.0; 3]).is_err());
        assert!(LinearSystem::new(1, vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn newton_known_root() {
        let p = RootProblem::new(|x: f64| (x * x - 4.0, 2.0 * x), 3.0);
        let root = find_root(&p).unwrap();
        assert!((root.x - 2.0).abs() < 1e-9);
        assert_eq!(root.method, RootMethod::Newton);
    }

    #[test]
    fn newton_already_at_root() {
        let p = RootProblem::new(|x: f64| (x * x * x, 3.0 * x * x), 0.0);
        let root = find_root(&p).unwrap();
        assert_eq!(root.x, 0.0);
        assert!(root.iterations <= 1);
    }

    #[test]
    fn falls_back_to_bisection_when_newton_leaves_bracket() {
        // atan overshoots wildly from x0 = 3.
        let p = RootProblem::new(|x: f64| (x.atan(), 1.0 / (1.0 + x * x)), 3.0).with_bracket(-4.0, 4.0);
        let root = find_root(&p).unwrap();
        assert_eq!(root.method, RootMethod::Bisection);
        assert!(root.x.abs() < 1e-9);
    }

    #[test]
    fn no_sign_change_means_no_convergence() {
        let p = RootProblem::new(|x: f64| (x * x + 1.0, 2.0 * x), 0.0).with_bracket(-1.0, 1.0);
        assert!(matches!(find_root(&p), Err(Error::NoConvergence { .. })));
        let unbracketed = RootProblem::new(|x: f64| (x * x + 1.0, 2.0 * x), 0.5);
        assert!(matches!(find_root(&unbracketed), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn rejects_bad_settings() {
        let p = RootProblem::new(|x: f64| (x, 1.0), 1.0).with_tolerance(0.0);
        assert!(matches!(find_root(&p), Err(Error::InvalidArgument(_))));
        let q = RootProblem::new(|x: f64| (x, 1.0), 1.0).with_max_iterations(0);
        assert!(matches!(find_root(&q), Err(Error::InvalidArgument(_))));
    }
}
