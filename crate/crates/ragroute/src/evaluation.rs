//! Latency-aware routing and the evaluation metric suite.
//!
//! Score-threshold routing trades accuracy for latency: with models
//! pre-sorted most-efficient-first, a query that would go to the
//! highest-scoring model `i` instead goes to the first model `j <= i`
//! whose score is within a margin `theta` of model `i`'s. Sweeping
//! `theta` over a fine grid produces an accuracy–latency curve; the
//! metrics over that curve are
//!
//! - **area**: percentage of the area under the best-achievable-accuracy
//!   step frontier within a latency window (default 1 s),
//! - **peak accuracy**: best accuracy reached within the window,
//! - **gap to match**: the reference single model's latency minus the
//!   cheapest latency at which the curve matches its accuracy (absent
//!   when the curve never matches; negative when matching costs more).
//!
//! Alongside the curve metrics live the plain ones: routed accuracy,
//! unweighted macro averages, and the per-model label-flip rates
//! (documents fixing previously-wrong answers, or breaking
//! previously-right ones).

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ModelRegistry, ResponseDataset};
use crate::error::{Error, Result};

/// Default latency window (seconds) for area / peak accuracy.
pub const DEFAULT_WINDOW_S: f64 = 1.0;
/// Default threshold grid step for the sweep.
pub const DEFAULT_GRID_STEP: f64 = 1e-4;

/// One sweep sample: the threshold, the mean latency of the selected
/// models, and the routed accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub mean_latency_s: f64,
    pub accuracy: f64,
}

/// Sweep output: points with strictly increasing theta, starting at
/// theta = 0. Runs of identical (latency, accuracy) pairs are collapsed
/// to their first theta; metrics only depend on the distinct pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyLatencyCurve {
    points: Vec<SweepPoint>,
}

impl AccuracyLatencyCurve {
    pub fn new(points: Vec<SweepPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("curve needs at least one point".into()));
        }
        if points[0].theta != 0.0 {
            return Err(Error::Invalid("curve must include the theta = 0 point".into()));
        }
        for p in &points {
            if !(0.0..=1.0).contains(&p.theta) {
                return Err(Error::Invalid(format!("theta {} outside [0,1]", p.theta)));
            }
            if !(0.0..=1.0).contains(&p.accuracy) {
                return Err(Error::Invalid(format!(
                    "accuracy {} outside [0,1]",
                    p.accuracy
                )));
            }
            if !p.mean_latency_s.is_finite() || p.mean_latency_s < 0.0 {
                return Err(Error::Invalid(format!(
                    "mean latency {} must be finite and >= 0",
                    p.mean_latency_s
                )));
            }
        }
        for w in points.windows(2) {
            if w[1].theta <= w[0].theta {
                return Err(Error::Invalid("theta must be strictly increasing".into()));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[SweepPoint] {
        &self.points
    }
}

/// Latency-aware selection: `scores` are correctness estimates in
/// registry (most-efficient-first) order; returns the earliest model
/// whose score is within `theta` of the best one at or before the
/// argmax.
pub fn threshold_route(scores: &[f64], theta: f64) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::Invalid("cannot route over zero scores".into()));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("routing scores must be finite".into()));
    }
    if theta < 0.0 {
        return Err(Error::Invalid(format!("theta must be >= 0, got {theta}")));
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    for j in 0..best {
        if scores[best] - scores[j] <= theta {
            return Ok(j);
        }
    }
    Ok(best)
}

/// Sweeps theta over `[0, 1]` with the given grid step, routing every
/// query at every threshold. `scores_per_query` and `rag_labels` are
/// query-major with one entry per registry model.
pub fn sweep(
    scores_per_query: &[Vec<f64>],
    rag_labels: &[Vec<f64>],
    registry: &ModelRegistry,
    grid_step: f64,
) -> Result<AccuracyLatencyCurve> {
    if scores_per_query.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if scores_per_query.len() != rag_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} score rows vs {} label rows",
            scores_per_query.len(),
            rag_labels.len()
        )));
    }
    let n = registry.len();
    for (row, labels) in scores_per_query.iter().zip(rag_labels) {
        if row.len() != n || labels.len() != n {
            return Err(Error::ShapeMismatch(
                "score/label rows must match the registry size".into(),
            ));
        }
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::Invalid(format!(
            "grid step must lie in (0, 1], got {grid_step}"
        )));
    }

    let latencies = registry.latencies_s();
    let steps = (1.0 / grid_step).round() as usize;
    let q = scores_per_query.len() as f64;

    let points: Vec<SweepPoint> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let theta = (k as f64 * grid_step).min(1.0);
            let mut latency_sum = 0.0;
            let mut label_sum = 0.0;
            for (scores, labels) in scores_per_query.iter().zip(rag_labels) {
                let chosen = threshold_route(scores, theta).expect("validated inputs");
                latency_sum += latencies[chosen];
                label_sum += labels[chosen];
            }
            SweepPoint {
                theta,
                mean_latency_s: latency_sum / q,
                accuracy: label_sum / q,
            }
        })
        .collect();

    // Run-length collapse on identical (latency, accuracy) pairs.
    let mut collapsed: Vec<SweepPoint> = Vec::new();
    for p in points {
        match collapsed.last() {
            Some(prev)
                if prev.mean_latency_s == p.mean_latency_s && prev.accuracy == p.accuracy => {}
            _ => collapsed.push(p),
        }
    }
    AccuracyLatencyCurve::new(collapsed)
}

/// Best accuracy achievable at or below latency t, integrated over
/// `[0, window_s]` and normalized by the window; returned as a
/// percentage. Latencies beyond the window contribute nothing; the
/// region below the fastest point counts as zero.
pub fn area(curve: &AccuracyLatencyCurve, window_s: f64) -> f64 {
    let mut events: Vec<(f64, f64)> = curve
        .points()
        .iter()
        .map(|p| (p.mean_latency_s, p.accuracy))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut integral = 0.0;
    let mut frontier = 0.0;
    let mut t_prev = 0.0;
    for (lat, acc) in events {
        if lat > window_s {
            break;
        }
        integral += frontier * (lat - t_prev);
        let next = frontier.max(acc);
        debug_assert!(next >= frontier, "frontier must be non-decreasing");
        frontier = next;
        t_prev = lat;
    }
    integral += frontier * (window_s - t_prev);
    100.0 * integral / window_s
}

/// Highest accuracy among points within the latency window, percent;
/// zero when no point qualifies.
pub fn peak_acc(curve: &AccuracyLatencyCurve, window_s: f64) -> f64 {
    100.0
        * curve
            .points()
            .iter()
            .filter(|p| p.mean_latency_s <= window_s)
            .map(|p| p.accuracy)
            .fold(0.0, f64::max)
}

/// Reference latency minus the cheapest curve latency that matches the
/// reference accuracy; `None` when the curve never matches. Negative
/// values mean matching costs more time than the reference.
pub fn gap_to_match(
    curve: &AccuracyLatencyCurve,
    best_single_accuracy: f64,
    best_single_latency_s: f64,
) -> Option<f64> {
    curve
        .points()
        .iter()
        .filter(|p| p.accuracy >= best_single_accuracy)
        .map(|p| p.mean_latency_s)
        .min_by(|a, b| a.total_cmp(b))
        .map(|min_lat| best_single_latency_s - min_lat)
}

/// Mean document-setting label of the chosen models.
pub fn accuracy(decisions: &[usize], rag_labels: &[Vec<f64>]) -> Result<f64> {
    if decisions.len() != rag_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} decisions vs {} label rows",
            decisions.len(),
            rag_labels.len()
        )));
    }
    if decisions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = 0.0;
    for (&d, row) in decisions.iter().zip(rag_labels) {
        if d >= row.len() {
            return Err(Error::Invalid(format!("decision {d} out of range")));
        }
        sum += row[d];
    }
    Ok(sum / decisions.len() as f64)
}

/// Unweighted mean of per-task values.
pub fn macro_average(per_task: &[f64]) -> f64 {
    if per_task.is_empty() {
        return 0.0;
    }
    per_task.iter().sum::<f64>() / per_task.len() as f64
}

fn check_binary(labels: &[f64]) -> Result<()> {
    if labels.iter().any(|&l| l != 0.0 && l != 1.0) {
        return Err(Error::Invalid("flip rates need binary labels".into()));
    }
    Ok(())
}

/// Fraction of previously-wrong answers a document fixed:
/// #(0 -> 1) / #(no_rag = 0). `None` when the model was never wrong.
pub fn positive_gain_rate(no_rag: &[f64], rag: &[f64]) -> Result<Option<f64>> {
    if no_rag.len() != rag.len() {
        return Err(Error::ShapeMismatch("label arrays differ in length".into()));
    }
    check_binary(no_rag)?;
    check_binary(rag)?;
    let denom = no_rag.iter().filter(|&&l| l == 0.0).count();
    if denom == 0 {
        return Ok(None);
    }
    let gains = no_rag
        .iter()
        .zip(rag)
        .filter(|(&n, &r)| n == 0.0 && r == 1.0)
        .count();
    Ok(Some(gains as f64 / denom as f64))
}

/// Fraction of previously-right answers a document broke:
/// #(1 -> 0) / #(no_rag = 1). `None` when the model was never right.
pub fn negative_interference_rate(no_rag: &[f64], rag: &[f64]) -> Result<Option<f64>> {
    if no_rag.len() != rag.len() {
        return Err(Error::ShapeMismatch("label arrays differ in length".into()));
    }
    check_binary(no_rag)?;
    check_binary(rag)?;
    let denom = no_rag.iter().filter(|&&l| l == 1.0).count();
    if denom == 0 {
        return Ok(None);
    }
    let breaks = no_rag
        .iter()
        .zip(rag)
        .filter(|(&n, &r)| n == 1.0 && r == 0.0)
        .count();
    Ok(Some(breaks as f64 / denom as f64))
}

/// Dataset-level flip summary across all (query, model) pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlipStats {
    pub per_model_gain: Vec<Option<f64>>,
    pub per_model_interference: Vec<Option<f64>>,
    pub flipped_pairs: usize,
    pub total_pairs: usize,
}

impl FlipStats {
    pub fn flip_fraction(&self) -> f64 {
        if self.total_pairs == 0 {
            0.0
        } else {
            self.flipped_pairs as f64 / self.total_pairs as f64
        }
    }
}

/// Gain/interference rates per model plus the overall fraction of
/// (query, model) pairs whose label changed with the document.
pub fn flip_stats(ds: &ResponseDataset) -> Result<FlipStats> {
    if ds.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.registry.len();
    let mut per_model_gain = Vec::with_capacity(n);
    let mut per_model_interference = Vec::with_capacity(n);
    let mut flipped = 0usize;
    for m in 0..n {
        let no_rag: Vec<f64> = ds.records.iter().map(|r| r.outcomes[m].no_rag).collect();
        let rag: Vec<f64> = ds.records.iter().map(|r| r.outcomes[m].rag).collect();
        per_model_gain.push(positive_gain_rate(&no_rag, &rag)?);
        per_model_interference.push(negative_interference_rate(&no_rag, &rag)?);
        flipped += no_rag
            .iter()
            .zip(&rag)
            .filter(|(&a, &b)| a != b)
            .count();
    }
    Ok(FlipStats {
        per_model_gain,
        per_model_interference,
        flipped_pairs: flipped,
        total_pairs: ds.records.len() * n,
    })
}

/// Sweep metrics as written to disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub area: f64,
    pub peak_acc: f64,
    pub gap_to_match: Option<f64>,
    pub theta_grid_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_file: Option<String>,
}

impl MetricsReport {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes `theta,mean_latency_s,accuracy` rows.
pub fn write_curve_csv(curve: &AccuracyLatencyCurve, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("theta,mean_latency_s,accuracy\n");
    for p in curve.points() {
        out.push_str(&format!("{},{},{}\n", p.theta, p.mean_latency_s, p.accuracy));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<AccuracyLatencyCurve> {
    let path_str = path.as_ref().display().to_string();
    let text = fs::read_to_string(&path)?;
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path_str,
                line: idx + 1,
                msg: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: path_str.clone(),
                line: idx + 1,
                msg: format!("bad {what}: {e}"),
            })
        };
        points.push(SweepPoint {
            theta: parse(fields[0], "theta")?,
            mean_latency_s: parse(fields[1], "latency")?,
            accuracy: parse(fields[2], "accuracy")?,
        });
    }
    AccuracyLatencyCurve::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ModelRegistry, ProfileSpec};
    use crate::rng::DetRng;

    fn registry(latencies_ms: &[f64]) -> ModelRegistry {
        ModelRegistry::from_specs(
            latencies_ms
                .iter()
                .enumerate()
                .map(|(i, &l)| ProfileSpec {
                    name: format!("m{i}"),
                    params_b: 1.0,
                    latency_ms: l,
                    rank: None,
                })
                .collect(),
        )
        .unwrap()
    }

    fn curve(points: &[(f64, f64, f64)]) -> AccuracyLatencyCurve {
        AccuracyLatencyCurve::new(
            points
                .iter()
                .map(|&(theta, lat, acc)| SweepPoint {
                    theta,
                    mean_latency_s: lat,
                    accuracy: acc,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn threshold_route_hand_traversals() {
        let scores = [0.80, 0.93, 0.99];
        assert_eq!(threshold_route(&scores, 0.05).unwrap(), 2);
        assert_eq!(threshold_route(&scores, 0.07).unwrap(), 1);
        assert_eq!(threshold_route(&scores, 0.20).unwrap(), 0);
    }

    #[test]
    fn zero_threshold_is_plain_argmax_with_earliest_tie() {
        assert_eq!(threshold_route(&[0.2, 0.9, 0.9], 0.0).unwrap(), 1);
        assert_eq!(threshold_route(&[0.9, 0.2, 0.9], 0.0).unwrap(), 0);
    }

    #[test]
    fn threshold_route_rejects_bad_input() {
        assert!(threshold_route(&[], 0.1).is_err());
        assert!(threshold_route(&[0.5], -0.1).is_err());
        assert!(threshold_route(&[f64::NAN], 0.1).is_err());
    }

    #[test]
    fn selected_index_is_non_increasing_in_theta() {
        let mut rng = DetRng::seed_from_u64(7);
        for _ in 0..200 {
            let n = 2 + rng.below(8);
            let scores: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let mut prev = usize::MAX;
            for k in 0..=20 {
                let theta = k as f64 * 0.05;
                let j = threshold_route(&scores, theta).unwrap();
                assert!(j <= prev.min(n - 1), "theta {theta}: {j} after {prev}");
                prev = j;
            }
        }
    }

    fn sweep_fixture() -> (Vec<Vec<f64>>, Vec<Vec<f64>>, ModelRegistry) {
        let reg = registry(&[100.0, 400.0, 1600.0]);
        let scores = vec![
            vec![0.30, 0.55, 0.70],
            vec![0.62, 0.60, 0.20],
            vec![0.10, 0.80, 0.85],
            vec![0.45, 0.46, 0.47],
        ];
        let labels = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0],
        ];
        (scores, labels, reg)
    }

    #[test]
    fn sweep_theta_zero_matches_plain_argmax() {
        let (scores, labels, reg) = sweep_fixture();
        let curve = sweep(&scores, &labels, &reg, 1e-3).unwrap();
        let p0 = curve.points()[0];
        assert_eq!(p0.theta, 0.0);

        let mut lat = 0.0;
        let mut acc = 0.0;
        for (s, l) in scores.iter().zip(&labels) {
            let mut best = 0;
            for (i, &v) in s.iter().enumerate() {
                if v > s[best] {
                    best = i;
                }
            }
            lat += reg.latencies_s()[best];
            acc += l[best];
        }
        assert!((p0.mean_latency_s - lat / 4.0).abs() < 1e-15);
        assert!((p0.accuracy - acc / 4.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_theta_one_routes_everything_to_the_fastest_model() {
        let (scores, labels, reg) = sweep_fixture();
        let curve = sweep(&scores, &labels, &reg, 1e-3).unwrap();
        let last = curve.points().last().unwrap();
        assert!((last.mean_latency_s - 0.1).abs() < 1e-15);
        let fastest_acc = labels.iter().map(|l| l[0]).sum::<f64>() / 4.0;
        assert!((last.accuracy - fastest_acc).abs() < 1e-15);
    }

    #[test]
    fn sweep_matches_exhaustive_grid_enumeration() {
        // Independent reimplementation of the traversal rule at every
        // grid point, collapsed the same way.
        let (scores, labels, reg) = sweep_fixture();
        let step = 1e-4;
        let curve = sweep(&scores, &labels, &reg, step).unwrap();

        let lats = reg.latencies_s();
        let mut expected: Vec<SweepPoint> = Vec::new();
        let steps = (1.0 / step).round() as usize;
        for k in 0..=steps {
            let theta = (k as f64 * step).min(1.0);
            let mut lat_sum = 0.0;
            let mut acc_sum = 0.0;
            for (s, l) in scores.iter().zip(&labels) {
                let mut best = 0;
                for (i, &v) in s.iter().enumerate() {
                    if v > s[best] {
                        best = i;
                    }
                }
                let mut chosen = best;
                for j in 0..best {
                    if s[best] - s[j] <= theta {
                        chosen = j;
                        break;
                    }
                }
                lat_sum += lats[chosen];
                acc_sum += l[chosen];
            }
            let p = SweepPoint {
                theta,
                mean_latency_s: lat_sum / 4.0,
                accuracy: acc_sum / 4.0,
            };
            match expected.last() {
                Some(prev)
                    if prev.mean_latency_s == p.mean_latency_s
                        && prev.accuracy == p.accuracy => {}
                _ => expected.push(p),
            }
        }
        assert_eq!(curve.points(), expected.as_slice());
        // The fixture has few distinct score gaps, so the collapsed
        // curve is short.
        assert!(curve.points().len() <= 13, "{}", curve.points().len());
    }

    #[test]
    fn area_two_point_fixture() {
        let c = curve(&[(0.0, 0.2, 0.5), (0.5, 0.6, 0.8)]);
        assert!((area(&c, 1.0) - 52.0).abs() < 1e-9);
    }

    #[test]
    fn area_single_instant_point_fills_the_window() {
        let c = curve(&[(0.0, 0.0, 1.0)]);
        assert!((area(&c, 1.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn area_zero_when_all_points_exceed_window() {
        let c = curve(&[(0.0, 1.5, 0.9), (0.5, 2.0, 0.95)]);
        assert_eq!(area(&c, 1.0), 0.0);
    }

    #[test]
    fn peak_fixtures() {
        let c = curve(&[(0.0, 0.2, 0.5), (0.4, 0.6, 0.8), (0.8, 1.4, 0.9)]);
        assert!((peak_acc(&c, 1.0) - 80.0).abs() < 1e-12);
        let far = curve(&[(0.0, 1.2, 0.7)]);
        assert_eq!(peak_acc(&far, 1.0), 0.0);
        let single = curve(&[(0.0, 0.3, 0.61)]);
        assert!((peak_acc(&single, 1.0) - 61.0).abs() < 1e-12);
    }

    #[test]
    fn gap_to_match_fixtures() {
        let c = curve(&[(0.0, 0.6, 0.80), (0.5, 0.9, 0.85)]);
        let g = gap_to_match(&c, 0.80, 0.9).unwrap();
        assert!((g - 0.3).abs() < 1e-12);

        let never = curve(&[(0.0, 0.6, 0.70)]);
        assert!(gap_to_match(&never, 0.80, 0.9).is_none());

        let late = curve(&[(0.0, 1.4, 0.80)]);
        let g = gap_to_match(&late, 0.80, 0.9).unwrap();
        assert!((g + 0.5).abs() < 1e-12, "negative gap allowed: {g}");
    }

    #[test]
    fn area_and_peak_monotone_under_pointwise_improvement() {
        let mut rng = DetRng::seed_from_u64(15);
        for _ in 0..50 {
            let n = 1 + rng.below(6);
            let mut pts = Vec::new();
            for i in 0..n {
                pts.push(SweepPoint {
                    theta: i as f64 / n as f64,
                    mean_latency_s: rng.uniform_in(0.05, 1.5),
                    accuracy: rng.uniform(),
                });
            }
            let base = AccuracyLatencyCurve::new(pts.clone()).unwrap();
            let improved = AccuracyLatencyCurve::new(
                pts.iter()
                    .map(|p| SweepPoint {
                        accuracy: (p.accuracy + rng.uniform() * (1.0 - p.accuracy)),
                        ..*p
                    })
                    .collect(),
            )
            .unwrap();
            assert!(area(&improved, 1.0) + 1e-12 >= area(&base, 1.0));
            assert!(peak_acc(&improved, 1.0) + 1e-12 >= peak_acc(&base, 1.0));
        }
    }

    #[test]
    fn accuracy_and_macro_average() {
        let labels = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(accuracy(&[0, 1, 0], &labels).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0, 1], &labels).unwrap(), 1.0 / 3.0);
        assert!(accuracy(&[0], &labels).is_err());

        let row = [45.19, 51.11, 25.93, 34.81, 27.08, 38.75, 39.17];
        assert!((macro_average(&row) - 37.43).abs() < 0.005);
        let ours = [48.52, 52.59, 71.48, 74.44, 56.67, 56.67, 90.83];
        assert!((macro_average(&ours) - 64.46).abs() < 0.005);
    }

    #[test]
    fn gain_and_interference_hand_counts() {
        let no_rag = [0.0, 0.0, 1.0, 1.0];
        let rag = [1.0, 0.0, 1.0, 0.0];
        assert_eq!(positive_gain_rate(&no_rag, &rag).unwrap(), Some(0.5));
        assert_eq!(
            negative_interference_rate(&no_rag, &rag).unwrap(),
            Some(0.5)
        );
    }

    #[test]
    fn gain_undefined_when_never_wrong() {
        let no_rag = [1.0, 1.0];
        let rag = [1.0, 0.0];
        assert_eq!(positive_gain_rate(&no_rag, &rag).unwrap(), None);
        assert_eq!(
            negative_interference_rate(&no_rag, &rag).unwrap(),
            Some(0.5)
        );
    }

    #[test]
    fn unchanged_labels_give_zero_rates() {
        let labels = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(positive_gain_rate(&labels, &labels).unwrap(), Some(0.0));
        assert_eq!(
            negative_interference_rate(&labels, &labels).unwrap(),
            Some(0.0)
        );
    }

    #[test]
    fn rates_reject_continuous_labels() {
        assert!(positive_gain_rate(&[0.5], &[1.0]).is_err());
    }

    #[test]
    fn metrics_report_round_trip_preserves_null_gap() {
        let report = MetricsReport {
            method: "demo".into(),
            area: 52.0,
            peak_acc: 80.0,
            gap_to_match: None,
            theta_grid_step: 1e-4,
            curve_file: Some("curve.csv".into()),
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        report.save(f.path()).unwrap();
        let text = fs::read_to_string(f.path()).unwrap();
        assert!(text.contains("\"gap_to_match\": null"));
        let back = MetricsReport::load(f.path()).unwrap();
        assert_eq!(back.gap_to_match, None);
        assert_eq!(back.method, "demo");
    }

    #[test]
    fn curve_csv_round_trip() {
        let c = curve(&[(0.0, 0.2, 0.5), (0.31, 0.6, 0.8125)]);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_curve_csv(&c, f.path()).unwrap();
        let back = read_curve_csv(f.path()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn curve_validation_rejects_malformed_input() {
        assert!(AccuracyLatencyCurve::new(vec![]).is_err());
        // Missing theta = 0.
        assert!(AccuracyLatencyCurve::new(vec![SweepPoint {
            theta: 0.5,
            mean_latency_s: 0.2,
            accuracy: 0.5
        }])
        .is_err());
        // Non-increasing theta.
        assert!(AccuracyLatencyCurve::new(vec![
            SweepPoint {
                theta: 0.0,
                mean_latency_s: 0.2,
                accuracy: 0.5
            },
            SweepPoint {
                theta: 0.0,
                mean_latency_s: 0.3,
                accuracy: 0.6
            }
        ])
        .is_err());
    }
}
