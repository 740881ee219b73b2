//! Log-log least squares.

use crate::error::{invalid, Result};

/// Power law `y ≈ constant·x^slope` fitted in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub constant: f64,
    /// RMS of the log deviations from the fitted line.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

impl DecayFit {
    /// Decay exponent `σ` in `y ≲ x^{−σ}`.
    pub fn sigma(&self) -> f64 {
        -self.slope
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.constant * x.powf(self.slope)
    }
}

/// Least-squares fit of `ln y` against `ln x`; needs two distinct abscissae and
/// positive finite data.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < 2 {
        return Err(invalid("power-law fit needs at least two samples"));
    }
    for &(x, y) in samples {
        if !(x > 0.0 && x.is_finite()) {
            return Err(invalid(format!("abscissa must be positive, got {x}")));
        }
        if !(y > 0.0 && y.is_finite()) {
            return Err(invalid(format!("magnitude must be positive and finite, got {y} at {x}")));
        }
    }
    let m = samples.len() as f64;
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(invalid("power-law fit needs distinct abscissae"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    Ok(DecayFit {
        slope,
        constant: icpt.exp(),
        residual: (rss / m).sqrt(),
        window: (lo, hi),
        samples: samples.len(),
    })
}

/// Decay-rate fit of `|J(τ)|` samples restricted to `window` (inclusive);
/// needs at least six samples spanning a decade.
pub fn fit_decay(samples: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<DecayFit> {
    let kept: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, _)| window.map_or(true, |(a, b)| t >= a && t <= b))
        .collect();
    if kept.len() < 6 {
        return Err(invalid(format!("decay fit needs at least 6 samples, got {}", kept.len())));
    }
    let lo = kept.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = kept.iter().map(|s| s.0).fold(0.0, f64::max);
    if !(hi >= 10.0 * lo * (1.0 - 1e-12)) {
        return Err(invalid(format!("decay fit window [{lo}, {hi}] spans less than a decade")));
    }
    fit_power_law(&kept)
}
