//! Error metrics in the layout of the accuracy tables.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ErrorStats {
    /// Number of queries.
    pub m: usize,
    /// Mean `|y_ref − y_true|`: how far the outcome moves between the
    /// reference and the query.
    pub avg_y_differ: f64,
    pub avg_abs_err: f64,
    pub max_abs_err: f64,
    /// `avg_abs_err / avg_y_differ`.
    pub rel_err: f64,
    /// Total evaluation time for the `m` queries, in seconds.
    pub wall_time_s: f64,
}

impl ErrorStats {
    pub fn time_per_query_s(&self) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            self.wall_time_s / self.m as f64
        }
    }
}

fn check_lengths(lens: &[usize]) -> Result<()> {
    if lens[0] == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = lens.iter().find(|&&l| l != lens[0]) {
        return Err(Error::DimensionMismatch {
            context: "metric inputs".into(),
            expected: lens[0],
            got: bad,
        });
    }
    Ok(())
}

/// Accuracy of `estimates` against `truths`. `rel_err` is NaN when the
/// queries coincide with their references.
pub fn compute_stats(estimates: &[f64], truths: &[f64], reference_truths: &[f64]) -> Result<ErrorStats> {
    check_lengths(&[estimates.len(), truths.len(), reference_truths.len()])?;
    let m = estimates.len();
    let mut sum_err = 0.0;
    let mut max_err: f64 = 0.0;
    let mut sum_differ = 0.0;
    for ((e, t), r) in estimates.iter().zip(truths).zip(reference_truths) {
        let err = (e - t).abs();
        sum_err += err;
        max_err = max_err.max(err);
        sum_differ += (r - t).abs();
    }
    let avg_abs_err = sum_err / m as f64;
    let avg_y_differ = sum_differ / m as f64;
    Ok(ErrorStats {
        m,
        avg_y_differ,
        avg_abs_err,
        max_abs_err: max_err,
        rel_err: if avg_y_differ > 0.0 { avg_abs_err / avg_y_differ } else { f64::NAN },
        wall_time_s: 0.0,
    })
}

/// Value reported for a ratio whose denominator vanished.
pub const RATIO_CAP: f64 = 1e12;

/// How much smaller the input noise is than the reconstruction error, with
/// absolute (`r1`) and signed (`r2`) error sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseRatios {
    pub m: usize,
    pub r1: f64,
    pub r2: f64,
    /// `r1` hit a zero denominator and holds [`RATIO_CAP`].
    pub r1_capped: bool,
    pub r2_capped: bool,
}

/// `R1 = Σ|y − y°| / Σ|ŷ − y°|` and `R2 = Σ|y − y°| / Σ(ŷ − y°)`, where `y`
/// are the noisy observations, `ŷ` the computed values and `y°` the
/// noise-free surface.
pub fn compute_noise_ratios(noisy_y: &[f64], computed_y: &[f64], original_y: &[f64]) -> Result<NoiseRatios> {
    check_lengths(&[noisy_y.len(), computed_y.len(), original_y.len()])?;
    let noise: f64 = noisy_y.iter().zip(original_y).map(|(y, o)| (y - o).abs()).sum();
    let abs_err: f64 = computed_y.iter().zip(original_y).map(|(c, o)| (c - o).abs()).sum();
    let signed_err: f64 = computed_y.iter().zip(original_y).map(|(c, o)| c - o).sum();
    let ratio = |num: f64, den: f64| {
        if den.abs() <= f64::MIN_POSITIVE || !(num / den).is_finite() || (num / den).abs() > RATIO_CAP {
            (RATIO_CAP, true)
        } else {
            (num / den, false)
        }
    };
    let (r1, r1_capped) = ratio(noise, abs_err);
    let (r2, r2_capped) = ratio(noise, signed_err);
    Ok(NoiseRatios {
        m: noisy_y.len(),
        r1,
        r2,
        r1_capped,
        r2_capped,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(&[x.len(), y.len()])?;
    if x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("slope fit needs two or more positive pairs".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_reconstruction() {
        let s = compute_stats(&[1.0, 2.0], &[1.0, 2.0], &[0.5, 2.5]).unwrap();
        assert_eq!((s.avg_abs_err, s.rel_err, s.max_abs_err), (0.0, 0.0, 0.0));
        assert_eq!(s.avg_y_differ, 0.5);
    }

    #[test]
    fn single_query_ratio() {
        let s = compute_stats(&[1.1], &[1.0], &[1.4]).unwrap();
        assert!((s.rel_err - 0.25).abs() < 1e-12);
        assert_eq!(s.m, 1);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(matches!(compute_stats(&[], &[], &[]), Err(Error::EmptyInput)));
        assert!(compute_stats(&[1.0], &[1.0, 2.0], &[1.0]).is_err());
        assert!(matches!(compute_noise_ratios(&[], &[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn noise_ratio_definitions() {
        let noisy = [1.1, 1.8, 3.2];
        let orig = [1.0, 2.0, 3.0];
        let comp = [1.5, 1.5, 3.5];
        let r = compute_noise_ratios(&noisy, &comp, &orig).unwrap();
        // Σ|noise| = 0.5, Σ|err| = 1.5, Σ err = 0.5
        assert!((r.r1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.r2 - 1.0).abs() < 1e-12);
        assert!(!r.r1_capped && !r.r2_capped);
    }

    #[test]
    fn exact_computation_is_capped() {
        let r = compute_noise_ratios(&[1.1, 2.1], &[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!(r.r1_capped && r.r2_capped);
        assert_eq!(r.r1, RATIO_CAP);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 4.0, 16.0, 64.0];
        let y: Vec<f64> = x.iter().map(|c: &f64| 3.0 * c.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
    }
}
