//! Sequence acceleration and convergence classification: Aitken Δ², Neville
//! extrapolation to zero, tail-stability tests, and log-log growth fits.

/// Aitken Δ² applied to the last three terms.
pub fn aitken_last(values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let [a, b, c] = [
        values[values.len() - 3],
        values[values.len() - 2],
        values[values.len() - 1],
    ];
    let denom = c - 2.0 * b + a;
    if denom == 0.0 || !denom.is_finite() {
        return None;
    }
    let out = c - (c - b) * (c - b) / denom;
    out.is_finite().then_some(out)
}

/// Two-test tail criterion on the last `m` values: max pairwise deviation
/// below `tol`, and the Aitken-accelerated value within `2·tol` of the tail
/// mean. Returns (estimate, error bound) when both hold.
pub fn tail_converged(values: &[f64], m: usize, tol: f64) -> Option<(f64, f64)> {
    if values.len() < m.max(3) {
        return None;
    }
    let tail = &values[values.len() - m..];
    if tail.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dev = hi - lo;
    if dev >= tol {
        return None;
    }
    let mean = tail.iter().sum::<f64>() / m as f64;
    let accel = aitken_last(values).unwrap_or(mean);
    if (accel - mean).abs() >= 2.0 * tol {
        return None;
    }
    let est = if (accel - mean).abs() <= dev { accel } else { mean };
    Some((est, dev.max((accel - mean).abs()).max(f64::EPSILON)))
}

/// Neville polynomial extrapolation of (x, y) samples to x = 0. The x values
/// must be distinct; geometric grids give Richardson-style convergence.
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let mut col: Vec<f64> = ys.to_vec();
    let n = col.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            col[i] = (xj * col[i] - xi * col[i + 1]) / (xj - xi);
        }
    }
    col[0]
}

/// Least-squares line through (x, y); returns (slope, intercept, r²).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Fits log|y| against log x over the top decade of the grid; a positive
/// slope with a good fit indicates power-law growth.
pub fn growth_exponent(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    assert_eq!(xs.len(), ys.len());
    let xmax = xs.iter().copied().fold(0.0, f64::max);
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x >= xmax / 10.0 && y.abs() > 0.0 && y.is_finite() {
            lx.push(x.ln());
            ly.push(y.abs().ln());
        }
    }
    if lx.len() < 4 {
        return None;
    }
    let (slope, _, r2) = linear_fit(&lx, &ly);
    Some((slope, r2))
}

/// Kendall rank correlation of y against its index, with the normal-
/// approximation z score. Negative τ with z ≪ 0 marks a downward trend.
pub fn kendall_trend(ys: &[f64]) -> (f64, f64) {
    let n = ys.len();
    assert!(n >= 3);
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match ys[j].partial_cmp(&ys[i]).expect("finite values") {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            };
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let tau = s as f64 / pairs;
    let var = (n * (n - 1) * (2 * n + 5)) as f64 / 18.0;
    let z = s as f64 / var.sqrt();
    (tau, z)
}
