//! Least-squares growth rates.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Residual above which a count sequence is treated as oscillating.
pub const OSCILLATION_RESIDUAL: f64 = 0.1;
/// Shortest trailing window used for the limsup proxy.
pub const MIN_TRAILING: usize = 5;

/// Slope of `log(count)` against `n` with its RMS residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub residual: f64,
    pub window: (usize, usize),
}

/// Least-squares line through `(x_i, y_i)`: `(slope, intercept, rms)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let k = xs.len();
    if k < 2 || ys.len() != k {
        return Err(invalid("a fit needs at least two points"));
    }
    let mx = xs.iter().sum::<f64>() / k as f64;
    let my = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("a fit needs at least two distinct abscissae"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok((slope, intercept, (rss / k as f64).sqrt()))
}

/// Fits `log(count)` against `n` over `points` with `n` in `window`.
pub fn fit_growth_rate(points: &[(usize, f64)], window: (usize, usize)) -> Result<GrowthFit> {
    let sel: Vec<(usize, f64)> = points.iter().copied().filter(|(n, _)| (window.0..=window.1).contains(n)).collect();
    if sel.len() < 3 {
        return Err(invalid(format!("window {}..{} holds fewer than 3 records", window.0, window.1)));
    }
    if let Some((n, c)) = sel.iter().find(|(_, c)| !(*c >= 1.0)) {
        return Err(invalid(format!("count {c} at n = {n} is below 1")));
    }
    let xs: Vec<f64> = sel.iter().map(|(n, _)| *n as f64).collect();
    let ys: Vec<f64> = sel.iter().map(|(_, c)| c.ln()).collect();
    let (slope, _, residual) = least_squares(&xs, &ys)?;
    Ok(GrowthFit { slope, residual, window })
}

/// The single-window slope, or for oscillating sequences the largest
/// slope over trailing windows `[k, hi]` of length at least 5.
pub fn limsup_rate(points: &[(usize, f64)], window: (usize, usize)) -> Result<GrowthFit> {
    let full = fit_growth_rate(points, window)?;
    if full.residual <= OSCILLATION_RESIDUAL {
        return Ok(full);
    }
    let mut best: Option<GrowthFit> = None;
    for lo in window.0..=window.1 {
        if window.1 + 1 < lo + MIN_TRAILING {
            break;
        }
        if let Ok(f) = fit_growth_rate(points, (lo, window.1)) {
            if best.map_or(true, |b| f.slope > b.slope) {
                best = Some(f);
            }
        }
    }
    Ok(best.unwrap_or(full))
}
