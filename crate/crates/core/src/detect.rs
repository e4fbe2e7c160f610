//! Peak picking on fused spectra, truth matching and trial metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::FusedAngleSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub sin_theta: f64,
    pub angle_deg: f64,
    pub magnitude: f64,
    /// Baselines whose own curve clears the detection threshold at the peak.
    pub baseline_support: usize,
    /// Grid index of the un-refined local maximum.
    pub grid_index: usize,
}

/// Local maxima at or above `rel_threshold · max`, at least
/// `min_separation_bins` apart, refined by a 3-point parabola on
/// log-magnitude and sorted by descending magnitude.
pub fn detect_peaks(
    fused: &FusedAngleSpectrum,
    rel_threshold: f64,
    min_separation_bins: usize,
) -> Result<Vec<Detection>> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::Config(format!(
            "relative threshold must be in (0, 1), got {rel_threshold}"
        )));
    }
    let m = &fused.magnitudes;
    let n = m.len();
    let global = m.iter().cloned().fold(0.0, f64::max);
    if global <= 0.0 || n == 0 {
        return Ok(Vec::new());
    }
    let floor = rel_threshold * global;

    // Plateaus report their first point: strictly above the left neighbour,
    // not below the right one.
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&k| {
            let v = m[k];
            v >= floor
                && (k == 0 || v > m[k - 1])
                && (k + 1 == n || v >= m[k + 1])
        })
        .collect();
    candidates.sort_by(|&a, &b| m[b].total_cmp(&m[a]).then(a.cmp(&b)));

    let mut kept: Vec<usize> = Vec::new();
    for k in candidates {
        if kept.iter().all(|&j| j.abs_diff(k) >= min_separation_bins.max(1)) {
            kept.push(k);
        }
    }

    let step = fused.grid_step();
    Ok(kept
        .into_iter()
        .map(|k| {
            let offset = if k > 0 && k + 1 < n {
                parabolic_offset(m[k - 1], m[k], m[k + 1])
            } else {
                0.0
            };
            let sin_theta = (fused.sin_theta_grid[k] + offset * step).clamp(-1.0, 1.0);
            let baseline_support = fused
                .per_baseline
                .iter()
                .filter(|c| {
                    let peak = c.iter().cloned().fold(0.0, f64::max);
                    peak > 0.0 && c[k] >= rel_threshold * peak
                })
                .count();
            Detection {
                sin_theta,
                angle_deg: sin_theta.asin().to_degrees(),
                magnitude: m[k],
                baseline_support,
                grid_index: k,
            }
        })
        .collect())
}

/// Vertex of the parabola through `ln` of three samples, in grid steps from
/// the centre, bounded to ±½ step.
fn parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    if left <= 0.0 || right <= 0.0 || centre <= 0.0 {
        return 0.0;
    }
    let (a, b, c) = (left.ln(), centre.ln(), right.ln());
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Signed `detected − true` error per matched pair, degrees.
    pub errors_deg: Vec<f64>,
    /// Per true target (input order): matched within the gate.
    pub matched: Vec<bool>,
    pub detected_count: usize,
    pub false_alarm_count: usize,
}

impl TrialMetrics {
    pub fn miss_count(&self) -> usize {
        self.matched.iter().filter(|m| !**m).count()
    }

    pub fn truth_count(&self) -> usize {
        self.matched.len()
    }
}

/// Distance limit for pairing a detection with a true target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Degrees(f64),
    /// Measured in `sinθ`, where the fused grid is uniform; keeps the gate
    /// one resolution cell wide near endfire.
    SinTheta(f64),
}

impl Gate {
    fn distance(&self, det: &Detection, truth_deg: f64) -> f64 {
        match self {
            Gate::Degrees(_) => (det.angle_deg - truth_deg).abs(),
            Gate::SinTheta(_) => (det.sin_theta - truth_deg.to_radians().sin()).abs(),
        }
    }

    fn limit(&self) -> f64 {
        match *self {
            Gate::Degrees(g) | Gate::SinTheta(g) => g,
        }
    }
}

/// Greedy one-to-one assignment by ascending angular distance. Pairs farther
/// apart than `gate_deg` never match; leftover detections are false alarms.
pub fn match_to_truth(detections: &[Detection], true_angles_deg: &[f64], gate_deg: f64) -> TrialMetrics {
    match_with_gate(detections, true_angles_deg, Gate::Degrees(gate_deg))
}

/// [`match_to_truth`] with an explicit gate. Errors are always in degrees.
pub fn match_with_gate(detections: &[Detection], true_angles_deg: &[f64], gate: Gate) -> TrialMetrics {
    let mut pairs: Vec<(f64, usize, usize)> = detections
        .iter()
        .enumerate()
        .flat_map(|(d, det)| {
            true_angles_deg
                .iter()
                .enumerate()
                .map(move |(t, truth)| (gate.distance(det, *truth), d, t))
        })
        .filter(|(dist, _, _)| *dist <= gate.limit())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut det_used = vec![false; detections.len()];
    let mut matched = vec![false; true_angles_deg.len()];
    let mut errors_deg = Vec::new();
    for (_, d, t) in pairs {
        if det_used[d] || matched[t] {
            continue;
        }
        det_used[d] = true;
        matched[t] = true;
        errors_deg.push(detections[d].angle_deg - true_angles_deg[t]);
    }
    TrialMetrics {
        errors_deg,
        matched,
        detected_count: detections.len(),
        false_alarm_count: det_used.iter().filter(|u| !**u).count(),
    }
}

/// Pooled root-mean-square matched error, or `None` with no matches.
pub fn rmse(trials: &[TrialMetrics]) -> Option<f64> {
    let (sum, count) = trials
        .iter()
        .flat_map(|t| t.errors_deg.iter())
        .fold((0.0, 0usize), |(s, c), e| (s + e * e, c + 1));
    (count > 0).then(|| (sum / count as f64).sqrt())
}

/// Fraction of trials with at least one false alarm.
pub fn pfa(trials: &[TrialMetrics]) -> Option<f64> {
    if trials.is_empty() {
        return None;
    }
    let hits = trials.iter().filter(|t| t.false_alarm_count > 0).count();
    Some(hits as f64 / trials.len() as f64)
}

/// False alarms per examined grid cell.
pub fn pfa_per_cell(trials: &[TrialMetrics], cells_per_trial: usize) -> Option<f64> {
    if trials.is_empty() || cells_per_trial == 0 {
        return None;
    }
    let fa: usize = trials.iter().map(|t| t.false_alarm_count).sum();
    Some(fa as f64 / (trials.len() * cells_per_trial) as f64)
}

/// Fraction of true targets left unmatched across trials.
pub fn miss_rate(trials: &[TrialMetrics]) -> Option<f64> {
    let truths: usize = trials.iter().map(|t| t.truth_count()).sum();
    let misses: usize = trials.iter().map(|t| t.miss_count()).sum();
    (truths > 0).then(|| misses as f64 / truths as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::sin_theta_grid;

    fn fused_from(grid: Vec<f64>, magnitudes: Vec<f64>) -> FusedAngleSpectrum {
        FusedAngleSpectrum {
            per_baseline: vec![magnitudes.clone()],
            baseline_m: vec![1.0],
            contributing_baselines: 1,
            sin_theta_grid: grid,
            magnitudes,
        }
    }

    /// Gaussian lobes, exactly parabolic in log-magnitude.
    fn lobes(grid: &[f64], centres: &[(f64, f64)], width: f64) -> Vec<f64> {
        grid.iter()
            .map(|s| {
                centres
                    .iter()
                    .map(|(c, a)| a * (-(s - c).powi(2) / (2.0 * width * width)).exp())
                    .sum()
            })
            .collect()
    }

    fn det(angle: f64) -> Detection {
        let s = angle.to_radians().sin();
        Detection {
            sin_theta: s,
            angle_deg: angle,
            magnitude: 1.0,
            baseline_support: 1,
            grid_index: 0,
        }
    }

    #[test]
    fn single_lobe_refines_to_centre() {
        let grid = sin_theta_grid(0.002).unwrap();
        let s0 = 0.31234;
        let m = lobes(&grid, &[(s0, 1.0)], 0.004);
        let d = detect_peaks(&fused_from(grid.clone(), m), 0.1, 2).unwrap();
        assert_eq!(d.len(), 1);
        let step = grid[1] - grid[0];
        assert!((d[0].sin_theta - s0).abs() < 0.1 * step);
        assert!((d[0].angle_deg - d[0].sin_theta.asin().to_degrees()).abs() < 1e-12);
    }

    #[test]
    fn zero_spectrum_and_bad_threshold() {
        let grid = sin_theta_grid(0.01).unwrap();
        let f = fused_from(grid.clone(), vec![0.0; grid.len()]);
        assert!(detect_peaks(&f, 0.1, 1).unwrap().is_empty());
        assert!(detect_peaks(&f, 0.0, 1).is_err());
        assert!(detect_peaks(&f, 1.0, 1).is_err());
    }

    #[test]
    fn threshold_and_separation() {
        let grid = sin_theta_grid(0.001).unwrap();
        let m = lobes(&grid, &[(-0.5, 1.0), (0.2, 0.3), (0.205, 0.25), (0.7, 0.05)], 0.0015);
        let f = fused_from(grid, m);
        let d = detect_peaks(&f, 0.1, 2).unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.windows(2).all(|w| w[0].magnitude >= w[1].magnitude));
        // The two close lobes merge under a wide separation requirement.
        assert_eq!(detect_peaks(&f, 0.1, 10).unwrap().len(), 2);
        assert_eq!(detect_peaks(&f, 0.5, 2).unwrap().len(), 1);
    }

    #[test]
    fn exact_matches() {
        let truths = [-30.0, 0.0, 45.0];
        let dets: Vec<_> = truths.iter().map(|&a| det(a)).collect();
        let m = match_to_truth(&dets, &truths, 0.5);
        assert_eq!(m.false_alarm_count, 0);
        assert_eq!(m.miss_count(), 0);
        assert!(m.errors_deg.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn extra_detection_is_a_false_alarm() {
        let truths = [-30.0, 0.0, 45.0];
        let mut dets: Vec<_> = truths.iter().map(|&a| det(a + 0.2)).collect();
        dets.push(det(20.0));
        let m = match_to_truth(&dets, &truths, 1.0);
        assert_eq!(m.false_alarm_count, 1);
        assert_eq!(m.detected_count, 4);
        assert_eq!(m.miss_count(), 0);
    }

    #[test]
    fn small_errors_bound_rmse() {
        let truths = [-63.0, -36.0, -9.0, 18.0, 45.0, 72.0];
        let offs = [0.04, -0.03, 0.01, -0.04, 0.02, 0.0];
        let dets: Vec<_> = truths.iter().zip(offs).map(|(t, o)| det(t + o)).collect();
        let m = match_to_truth(&dets, &truths, 0.2);
        assert_eq!(m.errors_deg.len(), 6);
        assert!(rmse(&[m]).unwrap() <= 0.04 + 1e-12);
    }

    #[test]
    fn gate_limits() {
        let truths = [10.0, 20.0];
        let dets = vec![det(10.3), det(19.8), det(50.0)];
        let tight = match_to_truth(&dets, &truths, 1e-9);
        assert_eq!(tight.false_alarm_count, 3);
        let wide = match_to_truth(&dets, &truths, 180.0);
        assert_eq!(wide.false_alarm_count, 1);
    }

    #[test]
    fn rmse_and_pfa_arithmetic() {
        let t = |e: Vec<f64>, fa| TrialMetrics {
            matched: vec![true; e.len()],
            detected_count: e.len() + fa,
            errors_deg: e,
            false_alarm_count: fa,
        };
        assert!((rmse(&[t(vec![0.03, -0.03], 0)]).unwrap() - 0.03).abs() < 1e-15);
        assert_eq!(rmse(&[t(vec![0.0, 0.0], 0)]), Some(0.0));
        assert_eq!(rmse(&[t(vec![], 0)]), None);
        let clean: Vec<_> = (0..10).map(|_| t(vec![0.0], 0)).collect();
        assert_eq!(pfa(&clean), Some(0.0));
        let mut one = clean.clone();
        one[3].false_alarm_count = 2;
        assert_eq!(pfa(&one), Some(0.1));
        assert_eq!(pfa(&[]), None);
        assert_eq!(pfa_per_cell(&one, 100), Some(2.0 / 1000.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn count_non_increasing_in_threshold(
                centres in prop::collection::vec((-0.95f64..0.95, 0.01f64..1.0), 1..8),
                lo in 0.01f64..0.5, delta in 0.0f64..0.45,
            ) {
                let grid = sin_theta_grid(0.002).unwrap();
                let f = fused_from(grid.clone(), lobes(&grid, &centres, 0.003));
                let a = detect_peaks(&f, lo, 1).unwrap().len();
                let b = detect_peaks(&f, lo + delta, 1).unwrap().len();
                prop_assert!(b <= a);
                for d in detect_peaks(&f, lo, 1).unwrap() {
                    prop_assert!((d.sin_theta - grid[d.grid_index]).abs() <= f.grid_step());
                }
            }

            #[test]
            fn matching_is_permutation_symmetric(
                truths in prop::collection::vec(-89.0f64..89.0, 0..8),
                dets in prop::collection::vec(-89.0f64..89.0, 0..8),
                gate in 0.1f64..20.0,
                rot in 0usize..8,
            ) {
                let d: Vec<_> = dets.iter().map(|&a| det(a)).collect();
                let base = match_to_truth(&d, &truths, gate);
                let mut t2 = truths.clone();
                let mut d2 = d.clone();
                t2.reverse();
                if !d2.is_empty() { let r = rot % d2.len(); d2.rotate_left(r); }
                let other = match_to_truth(&d2, &t2, gate);
                prop_assert_eq!(base.false_alarm_count, other.false_alarm_count);
                prop_assert_eq!(base.miss_count(), other.miss_count());
                let sorted = |mut v: Vec<f64>| { v.sort_by(f64::total_cmp); v };
                prop_assert_eq!(sorted(base.errors_deg), sorted(other.errors_deg));
                let wide = match_to_truth(&d, &truths, 180.0);
                prop_assert_eq!(wide.false_alarm_count, d.len().saturating_sub(truths.len()));
            }
        }
    }
}
