//! Power-law fit `eps = C (N + N0)^(-gamma)` in log-log space.
//!
//! For a fixed offset `N0` the model is a straight line in
//! `(ln(N + N0), ln eps)`, so `C` and `gamma` come from ordinary least
//! squares. The residual sum of squares of that line, as a function of `N0`,
//! is then minimized over `[0, max N]`: a log-spaced scan locates the basin
//! and golden-section search refines it.

use alloc::vec::Vec;

use thiserror::Error;

/// Checkpoints at or below this infidelity are dropped before fitting.
pub const DEFAULT_EPS_FLOOR: f64 = 1e-15;

const MIN_POINTS: usize = 3;
const SCAN_STEPS_PER_DECADE: usize = 8;
const SCAN_DECADES: usize = 16;
const GOLDEN_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub c: f64,
    pub n0: f64,
    pub gamma: f64,
    /// Ordinary least-squares standard error of `gamma` at the fitted `N0`.
    pub gamma_stderr: f64,
    /// Residual sum of squares in natural-log space.
    pub sse_log: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {required} usable points, got {usable}")]
    TooFewPoints { usable: usize, required: usize },
    #[error("non-finite or non-positive input at point {0}")]
    InvalidPoint(usize),
    #[error("all usable points share the same N")]
    Degenerate,
}

struct LineFit {
    intercept: f64,
    slope: f64,
    slope_stderr: f64,
    sse: f64,
}

fn line_fit(points: &[(f64, f64)], n0: f64) -> Option<LineFit> {
    let n = points.len() as f64;
    let xs = points.iter().map(|&(x, _)| libm::log(x + n0));
    let mean_x = xs.clone().sum::<f64>() / n;
    let mean_y = points.iter().map(|&(_, y)| libm::log(y)).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, &(_, e)) in xs.zip(points) {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (libm::log(e) - mean_y);
    }
    if sxx.is_nan() || sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse = points
        .iter()
        .map(|&(x, e)| {
            let r = libm::log(e) - (intercept + slope * libm::log(x + n0));
            r * r
        })
        .sum::<f64>();
    let slope_stderr = if points.len() > 2 {
        libm::sqrt(sse / (n - 2.0) / sxx)
    } else {
        0.0
    };
    Some(LineFit {
        intercept,
        slope,
        slope_stderr,
        sse,
    })
}

fn usable_points(points: &[(f64, f64)], eps_floor: f64) -> Result<Vec<(f64, f64)>, FitError> {
    let mut out = Vec::with_capacity(points.len());
    for (i, &(n, eps)) in points.iter().enumerate() {
        if !n.is_finite() || !eps.is_finite() || n <= 0.0 {
            return Err(FitError::InvalidPoint(i));
        }
        if eps > eps_floor {
            out.push((n, eps));
        }
    }
    Ok(out)
}

fn result_from(line: LineFit, n0: f64, n_points: usize) -> FitResult {
    FitResult {
        c: libm::exp(line.intercept),
        n0,
        gamma: -line.slope,
        gamma_stderr: line.slope_stderr,
        sse_log: line.sse,
        n_points,
    }
}

/// Sum of squared log residuals of the model `(c, n0, gamma)`.
pub fn sse_log(points: &[(f64, f64)], c: f64, n0: f64, gamma: f64) -> f64 {
    let log_c = libm::log(c);
    points
        .iter()
        .map(|&(n, e)| {
            let r = libm::log(e) - (log_c - gamma * libm::log(n + n0));
            r * r
        })
        .sum()
}

/// Fits `C`, `N0` and `gamma` to `(N, eps)` pairs, ignoring points with
/// `eps <= eps_floor`.
pub fn fit_scaling(points: &[(f64, f64)], eps_floor: f64) -> Result<FitResult, FitError> {
    let pts = usable_points(points, eps_floor)?;
    if pts.len() < MIN_POINTS {
        return Err(FitError::TooFewPoints {
            usable: pts.len(),
            required: MIN_POINTS,
        });
    }
    let max_n = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let profile = |n0: f64| line_fit(&pts, n0).map_or(f64::INFINITY, |l| l.sse);

    // Candidates in ascending order: 0, then max_n * 10^(-k/8) from small to
    // large.
    let steps = SCAN_DECADES * SCAN_STEPS_PER_DECADE;
    let mut grid = Vec::with_capacity(steps + 2);
    grid.push(0.0);
    for k in (0..=steps).rev() {
        grid.push(max_n * libm::pow(10.0, -(k as f64) / SCAN_STEPS_PER_DECADE as f64));
    }
    let values: Vec<f64> = grid.iter().map(|&n0| profile(n0)).collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .unwrap_or(0);
    if !values[best].is_finite() {
        return Err(FitError::Degenerate);
    }

    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = profile(x1);
    let mut f2 = profile(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if hi - lo <= f64::EPSILON * hi.max(1e-300) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = profile(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = profile(x2);
        }
    }
    let (mut n0, mut f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if values[best] < f {
        n0 = grid[best];
        f = values[best];
    }
    debug_assert!(f.is_finite());
    let line = line_fit(&pts, n0).ok_or(FitError::Degenerate)?;
    Ok(result_from(line, n0, pts.len()))
}

/// Fits `C` and `gamma` with the offset pinned at `n0`. Two points suffice.
pub fn fit_scaling_fixed_n0(
    points: &[(f64, f64)],
    eps_floor: f64,
    n0: f64,
) -> Result<FitResult, FitError> {
    let pts = usable_points(points, eps_floor)?;
    if pts.len() < 2 {
        return Err(FitError::TooFewPoints {
            usable: pts.len(),
            required: 2,
        });
    }
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(FitError::InvalidPoint(usize::MAX));
    }
    let line = line_fit(&pts, n0).ok_or(FitError::Degenerate)?;
    Ok(result_from(line, n0, pts.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: f64, n0: f64, gamma: f64, count: usize) -> Vec<(f64, f64)> {
        (0..count)
            .map(|i| {
                let n = 10f64.powf(1.0 + 5.0 * i as f64 / (count - 1) as f64);
                (n, c * (n + n0).powf(-gamma))
            })
            .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn recovers_exact_model() {
        let fit = fit_scaling(&synthetic(2.0, 10.0, 1.0, 50), DEFAULT_EPS_FLOOR).unwrap();
        assert!(rel(fit.c, 2.0) < 1e-6, "{fit:?}");
        assert!(rel(fit.n0, 10.0) < 1e-6, "{fit:?}");
        assert!(rel(fit.gamma, 1.0) < 1e-6, "{fit:?}");
        assert_eq!(fit.n_points, 50);
    }

    #[test]
    fn zero_offset_model_hits_boundary() {
        let fit = fit_scaling(&synthetic(0.5, 0.0, 0.8, 20), DEFAULT_EPS_FLOOR).unwrap();
        assert!(fit.n0 < 1e-6);
        assert!(rel(fit.gamma, 0.8) < 1e-6);
    }

    #[test]
    fn two_point_line_solve() {
        let fit = fit_scaling_fixed_n0(&[(10.0, 0.1), (1000.0, 0.001)], 0.0, 0.0).unwrap();
        assert!((fit.gamma - 1.0).abs() < 1e-14);
        assert!((fit.c - 1.0).abs() < 1e-13);
        assert!(fit.sse_log < 1e-28);
    }

    #[test]
    fn too_few_points() {
        let pts = [(10.0, 0.1), (100.0, 0.0), (1000.0, 0.001)];
        assert_eq!(
            fit_scaling(&pts, DEFAULT_EPS_FLOOR),
            Err(FitError::TooFewPoints {
                usable: 2,
                required: 3
            })
        );
        assert!(matches!(
            fit_scaling(&[], 0.0),
            Err(FitError::TooFewPoints { usable: 0, .. })
        ));
    }

    #[test]
    fn rejects_bad_input() {
        let pts = [(10.0, 0.1), (f64::NAN, 0.01), (1000.0, 0.001)];
        assert_eq!(fit_scaling(&pts, 0.0), Err(FitError::InvalidPoint(1)));
        let pts = [(10.0, 0.1), (-5.0, 0.01), (1000.0, f64::INFINITY)];
        assert_eq!(fit_scaling(&pts, 0.0), Err(FitError::InvalidPoint(1)));
    }

    #[test]
    fn degenerate_abscissa() {
        let pts = [(10.0, 0.1), (10.0, 0.2), (10.0, 0.3)];
        assert_eq!(
            fit_scaling_fixed_n0(&pts, 0.0, 0.0),
            Err(FitError::Degenerate)
        );
    }

    #[test]
    fn sse_at_fit_not_worse_than_truth() {
        let mut pts = synthetic(3.0, 40.0, 0.9, 40);
        for (i, p) in pts.iter_mut().enumerate() {
            p.1 *= 1.0 + 0.05 * ((i * 7919 % 13) as f64 / 6.0 - 1.0);
        }
        let fit = fit_scaling(&pts, 0.0).unwrap();
        assert!(fit.sse_log <= sse_log(&pts, 3.0, 40.0, 0.9) + 1e-9);
        assert!((fit.sse_log - sse_log(&pts, fit.c, fit.n0, fit.gamma)).abs() < 1e-12);
    }
}
