use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const DEFAULT_BANDWIDTH: f64 = 0.02;

/// Evaluation grid for the density; fine enough that parabolic refinement is
/// well below any usable bandwidth.
const GRID: usize = 2000;
/// Local maxima below this fraction of the global maximum are not modes.
const MODE_FLOOR: f64 = 0.1;
/// A density whose peak is within this factor of its trough has no real modes.
const DIFFUSE_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub modes: Vec<Mode>,
    pub bandwidth: f64,
    /// Ratio of the highest to the lowest density on the circle.
    pub peak_to_trough: f64,
    pub diffuse: bool,
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Wrapped-Gaussian kernel density of `phases` on the unit circle, evaluated at `x`.
pub fn circular_kde(phases: &[f64], bandwidth: f64, x: f64) -> f64 {
    let norm = 1.0 / (phases.len() as f64 * bandwidth * TAU.sqrt());
    let wraps = (4.0 * bandwidth).ceil() as i32 + 1;
    let sum: f64 = phases
        .iter()
        .map(|&p| {
            let d = (x - p).rem_euclid(1.0);
            (-wraps..=wraps)
                .map(|k| {
                    let z = (d + k as f64) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .sum();
    sum * norm
}

/// Finds the modes of the circular density of `phases`. Each mode's mass is
/// the share of samples closer to it than to any other mode.
pub fn mode_report(phases: &[f64], bandwidth: f64) -> Result<ModeReport> {
    if phases.is_empty() {
        return domain("mode_report needs at least one phase");
    }
    if !(bandwidth > 0.0 && bandwidth < 0.25) {
        return domain(format!("bandwidth must lie in (0, 0.25), got {bandwidth}"));
    }
    if let Some(p) = phases.iter().find(|p| !(0.0..1.0).contains(*p)) {
        return domain(format!("phase {p} outside [0, 1)"));
    }

    let h = 1.0 / GRID as f64;
    let density: Vec<f64> = (0..GRID).map(|i| circular_kde(phases, bandwidth, i as f64 * h)).collect();
    let max = density.iter().cloned().fold(f64::MIN, f64::max);
    let min = density.iter().cloned().fold(f64::MAX, f64::min);
    let peak_to_trough = if min > 0.0 { max / min } else { f64::INFINITY };

    let mut locations = Vec::new();
    for i in 0..GRID {
        let (l, c, r) = (density[(i + GRID - 1) % GRID], density[i], density[(i + 1) % GRID]);
        // strict on the left so a flat top yields one mode
        if c > l && c >= r && c > MODE_FLOOR * max {
            let curv = l - 2.0 * c + r;
            let offset = if curv < 0.0 { 0.5 * (l - r) / curv } else { 0.0 };
            locations.push((i as f64 + offset.clamp(-0.5, 0.5)).rem_euclid(GRID as f64) * h);
        }
    }
    locations.sort_by(f64::total_cmp);

    let mut counts = vec![0usize; locations.len()];
    for &p in phases {
        let nearest = (0..locations.len())
            .min_by(|&a, &b| {
                circular_distance(p, locations[a]).total_cmp(&circular_distance(p, locations[b]))
            })
            .expect("a non-empty density has a maximum");
        counts[nearest] += 1;
    }
    let n = phases.len() as f64;
    let modes = locations
        .into_iter()
        .zip(counts)
        .map(|(location, c)| Mode { location, mass: c as f64 / n })
        .collect();
    Ok(ModeReport {
        modes,
        bandwidth,
        peak_to_trough,
        diffuse: peak_to_trough < DIFFUSE_RATIO,
    })
}
