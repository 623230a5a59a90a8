//! Closed-form test surfaces.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `x1³ + 0.4 sin(6 x2) + 0.6 sin(4 x3 + 0.5)`, a highly irregular surface.
    T1,
    /// `0.3 √x1 + 0.5 √x2 + 0.7 √x3`, concave.
    S1,
    /// `0.3 x1^1.3 + 0.5 x2^1.5 + 0.7 x3^1.8`, convex.
    S2,
    /// `Σ (0.3 + i/(4n)) √x_i` over `n` predictors.
    H1 { dim: usize },
    /// `Σ (0.3 + i/(4n)) x_i^1.5` over `n` predictors.
    H2 { dim: usize },
    /// `x_0^1.5 + Σ_{i≥1} sin(x_i (0.4 + i/(2n)))` over `n` predictors.
    H3 { dim: usize },
    /// `intercept + Σ w_i x_i`.
    Affine { weights: Vec<f64>, intercept: f64 },
}

impl TestFunction {
    pub fn dim(&self) -> usize {
        match self {
            TestFunction::T1 | TestFunction::S1 | TestFunction::S2 => 3,
            TestFunction::H1 { dim } | TestFunction::H2 { dim } | TestFunction::H3 { dim } => *dim,
            TestFunction::Affine { weights, .. } => weights.len(),
        }
    }

    /// Weight of predictor `i` in H1 and H2.
    fn h_weight(i: usize, n: usize) -> f64 {
        0.3 + i as f64 / (4.0 * n as f64)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            TestFunction::T1 => x[0].powi(3) + 0.4 * (6.0 * x[1]).sin() + 0.6 * (4.0 * x[2] + 0.5).sin(),
            TestFunction::S1 => 0.3 * x[0].sqrt() + 0.5 * x[1].sqrt() + 0.7 * x[2].sqrt(),
            TestFunction::S2 => 0.3 * x[0].powf(1.3) + 0.5 * x[1].powf(1.5) + 0.7 * x[2].powf(1.8),
            TestFunction::H1 { dim } => x.iter().enumerate().map(|(i, v)| Self::h_weight(i, *dim) * v.sqrt()).sum(),
            TestFunction::H2 { dim } => x
                .iter()
                .enumerate()
                .map(|(i, v)| Self::h_weight(i, *dim) * v.powf(1.5))
                .sum(),
            TestFunction::H3 { dim } => {
                let n = *dim as f64;
                x[0].powf(1.5)
                    + x[1..]
                        .iter()
                        .enumerate()
                        .map(|(j, v)| (v * (0.4 + (j + 1) as f64 / (2.0 * n))).sin())
                        .sum::<f64>()
            }
            TestFunction::Affine { weights, intercept } => {
                intercept + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            }
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::T1 => f.write_str("T1"),
            TestFunction::S1 => f.write_str("S1"),
            TestFunction::S2 => f.write_str("S2"),
            TestFunction::H1 { dim } => write!(f, "H1:{dim}"),
            TestFunction::H2 { dim } => write!(f, "H2:{dim}"),
            TestFunction::H3 { dim } => write!(f, "H3:{dim}"),
            TestFunction::Affine { weights, .. } => write!(f, "affine:{}", weights.len()),
        }
    }
}

/// Accepts `T1`, `S1`, `S2` and `H1:<n>`, `H2:<n>`, `H3:<n>`.
impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown test function `{s}`"));
        match s {
            "T1" => return Ok(TestFunction::T1),
            "S1" => return Ok(TestFunction::S1),
            "S2" => return Ok(TestFunction::S2),
            _ => {}
        }
        let (name, dim) = s.split_once(':').ok_or_else(bad)?;
        let dim: usize = dim.parse().map_err(|_| bad())?;
        if dim < 2 {
            return Err(Error::InvalidArgument("H functions need at least two predictors".into()));
        }
        match name {
            "H1" => Ok(TestFunction::H1 { dim }),
            "H2" => Ok(TestFunction::H2 { dim }),
            "H3" => Ok(TestFunction::H3 { dim }),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_variable_surfaces() {
        let x = [1.0, 0.25, 4.0];
        let t1 = 1.0 + 0.4 * 1.5f64.sin() + 0.6 * 16.5f64.sin();
        assert!((TestFunction::T1.eval(&x) - t1).abs() < 1e-15);
        assert!((TestFunction::S1.eval(&x) - (0.3 + 0.25 + 1.4)).abs() < 1e-15);
        let s2 = 0.3 + 0.5 * 0.125 + 0.7 * 4f64.powf(1.8);
        assert!((TestFunction::S2.eval(&x) - s2).abs() < 1e-12);
    }

    #[test]
    fn high_dimensional_weights() {
        // n = 4: weights 0.3, 0.3625, 0.425, 0.4875.
        let x = [4.0, 1.0, 0.0, 9.0];
        let h1 = 0.3 * 2.0 + 0.3625 + 0.4875 * 3.0;
        assert!((TestFunction::H1 { dim: 4 }.eval(&x) - h1).abs() < 1e-14);
        let h2 = 0.3 * 8.0 + 0.3625 + 0.4875 * 27.0;
        assert!((TestFunction::H2 { dim: 4 }.eval(&x) - h2).abs() < 1e-13);
        let h3 = 8.0 + (1.0f64 * 0.525).sin() + 0.0 + (9.0f64 * 0.775).sin();
        assert!((TestFunction::H3 { dim: 4 }.eval(&x) - h3).abs() < 1e-14);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["T1", "S1", "S2", "H1:10", "H2:100", "H3:30"] {
            assert_eq!(s.parse::<TestFunction>().unwrap().to_string(), s);
        }
        assert!("H4:3".parse::<TestFunction>().is_err());
        assert!("H1:x".parse::<TestFunction>().is_err());
        assert!("H1:1".parse::<TestFunction>().is_err());
    }
}
