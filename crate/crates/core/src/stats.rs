//! Small statistics helpers for Monte Carlo curves.

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// 95% Wilson interval.
pub fn wilson95(k: u64, n: u64) -> (f64, f64) {
    wilson_interval(k, n, 1.959_963_984_540_054)
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Diversity slope `-d log10 P / d log10 snr` from `(snr_db, p)` points.
/// Points with `p = 0` are skipped.
pub fn diversity_slope(points: &[(f64, f64)]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|&(db, p)| (db / 10.0, p.log10()))
        .unzip();
    linear_slope(&x, &y).map(|s| -s)
}

/// Slope over the points whose SNR lies within the highest `span_db` of the
/// usable (`p > 0`) range.
pub fn top_slope(points: &[(f64, f64)], span_db: f64) -> Option<f64> {
    let hi = points
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let sel: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(db, p)| p > 0.0 && db >= hi - span_db - 1e-9)
        .collect();
    diversity_slope(&sel)
}

/// Slope over the points with `lo <= p <= hi`.
pub fn slope_between(points: &[(f64, f64)], lo: f64, hi: f64) -> Option<f64> {
    let sel: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, p)| p >= lo && p <= hi).collect();
    diversity_slope(&sel)
}

/// SNR (dB) where a decreasing curve crosses `target`, interpolating
/// `log10 p` linearly in dB between the bracketing points.
pub fn crossing_db(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.log10();
    points.windows(2).find_map(|w| {
        let ((x0, p0), (x1, p1)) = (w[0], w[1]);
        if p0 >= target && p1 <= target && p0 > 0.0 && p1 > 0.0 {
            let (l0, l1) = (p0.log10(), p1.log10());
            if l0 == l1 {
                return Some(x0);
            }
            Some(x0 + (lt - l0) / (l1 - l0) * (x1 - x0))
        } else {
            None
        }
    })
}

/// `crossing(worse) - crossing(better)` at `target`.
pub fn horizontal_gap_db(worse: &[(f64, f64)], better: &[(f64, f64)], target: f64) -> Option<f64> {
    Some(crossing_db(worse, target)? - crossing_db(better, target)?)
}
