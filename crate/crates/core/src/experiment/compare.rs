use alloc::vec::Vec;

use thiserror::Error;

/// Fewest points for which a comparison is reported.
pub const MIN_COMPARE_POINTS: usize = 10;

/// Agreement between the streak-based infidelity `1/(1+M_S)` and the true
/// infidelity over a set of checkpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub n_points: usize,
    /// Pearson correlation of `ln eps_true` against `ln eps_monitored`.
    pub log_correlation: f64,
    /// Mean of `ln(eps_monitored / eps_true)`.
    pub mean_log_ratio: f64,
    /// Standard deviation of `ln(eps_monitored / eps_true)`.
    pub std_log_ratio: f64,
    pub median_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("need at least {required} checkpoints with eps_true above the floor, got {usable}")]
    InsufficientPoints { usable: usize, required: usize },
    #[error("correlation undefined: one of the series is constant")]
    ConstantSeries,
}

/// `pairs` are `(eps_true, eps_monitored)`; pairs with `eps_true <=
/// eps_floor` are skipped.
pub fn compare_monitored_vs_true(
    pairs: &[(f64, f64)],
    eps_floor: f64,
) -> Result<CorrelationReport, CompareError> {
    let logs: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|&&(t, m)| t > eps_floor && t.is_finite() && m > 0.0 && m.is_finite())
        .map(|&(t, m)| (libm::log(t), libm::log(m)))
        .collect();
    if logs.len() < MIN_COMPARE_POINTS {
        return Err(CompareError::InsufficientPoints {
            usable: logs.len(),
            required: MIN_COMPARE_POINTS,
        });
    }
    let n = logs.len() as f64;
    let mean_t = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_m = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut smm, mut stm) = (0.0, 0.0, 0.0);
    for &(t, m) in &logs {
        stt += (t - mean_t) * (t - mean_t);
        smm += (m - mean_m) * (m - mean_m);
        stm += (t - mean_t) * (m - mean_m);
    }
    if !(stt > 0.0 && smm > 0.0) {
        return Err(CompareError::ConstantSeries);
    }
    let log_correlation = (stm / libm::sqrt(stt * smm)).clamp(-1.0, 1.0);

    let mut log_ratios: Vec<f64> = logs.iter().map(|&(t, m)| m - t).collect();
    let mean_log_ratio = log_ratios.iter().sum::<f64>() / n;
    let var = log_ratios
        .iter()
        .map(|r| (r - mean_log_ratio) * (r - mean_log_ratio))
        .sum::<f64>()
        / (n - 1.0);
    log_ratios.sort_by(f64::total_cmp);
    let mid = log_ratios.len() / 2;
    let median_log = if log_ratios.len().is_multiple_of(2) {
        0.5 * (log_ratios[mid - 1] + log_ratios[mid])
    } else {
        log_ratios[mid]
    };
    Ok(CorrelationReport {
        n_points: logs.len(),
        log_correlation,
        mean_log_ratio,
        std_log_ratio: libm::sqrt(var),
        median_ratio: libm::exp(median_log),
        min_ratio: libm::exp(log_ratios[0]),
        max_ratio: libm::exp(log_ratios[log_ratios.len() - 1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_correlate_perfectly() {
        let pairs: Vec<(f64, f64)> = (1..=20).map(|k| (1.0 / k as f64, 1.0 / k as f64)).collect();
        let r = compare_monitored_vs_true(&pairs, 1e-9).unwrap();
        assert!((r.log_correlation - 1.0).abs() < 1e-12);
        assert_eq!(r.n_points, 20);
        assert!((r.median_ratio - 1.0).abs() < 1e-12);
        assert!(r.std_log_ratio < 1e-12);
    }

    #[test]
    fn empty_is_not_computable() {
        assert_eq!(
            compare_monitored_vs_true(&[], 1e-9),
            Err(CompareError::InsufficientPoints {
                usable: 0,
                required: 10
            })
        );
    }

    #[test]
    fn floor_filters_points() {
        let mut pairs: Vec<(f64, f64)> =
            (1..=9).map(|k| (0.1 / k as f64, 0.1 / k as f64)).collect();
        pairs.extend(core::iter::repeat_n((0.0, 0.5), 5));
        assert!(matches!(
            compare_monitored_vs_true(&pairs, 1e-9),
            Err(CompareError::InsufficientPoints { usable: 9, .. })
        ));
    }

    #[test]
    fn constant_series() {
        let pairs: Vec<(f64, f64)> = (1..=12).map(|k| (1.0 / k as f64, 0.5)).collect();
        assert_eq!(
            compare_monitored_vs_true(&pairs, 0.0),
            Err(CompareError::ConstantSeries)
        );
    }

    #[test]
    fn ratio_statistics() {
        let pairs: Vec<(f64, f64)> = (1..=11)
            .map(|k| (1e-3 / k as f64, 2e-3 / k as f64))
            .collect();
        let r = compare_monitored_vs_true(&pairs, 0.0).unwrap();
        assert!((r.median_ratio - 2.0).abs() < 1e-12);
        assert!((r.min_ratio - 2.0).abs() < 1e-12 && (r.max_ratio - 2.0).abs() < 1e-12);
        assert!((r.mean_log_ratio - 2f64.ln()).abs() < 1e-12);
    }
}
