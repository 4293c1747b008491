use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::stimuli::MoraPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoraRegression {
    /// Seconds per mora.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares of word duration on mora count.
pub fn mora_regression(points: &[MoraPoint]) -> Result<MoraRegression> {
    if points.len() < 2 {
        return domain("at least 2 points are required");
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.moras as f64).sum::<f64>() / n;
    let my = points.iter().map(|p| p.duration).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.moras as f64 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return domain("mora counts are all identical");
    }
    let sxy: f64 = points.iter().map(|p| (p.moras as f64 - mx) * (p.duration - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.duration - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(MoraRegression { slope, intercept, r_squared, n_points: points.len() })
}
