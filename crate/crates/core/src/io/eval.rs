//! Foreground-mask scoring: precision, recall and F-measure over support
//! sets, plus threshold sweeps over residual magnitudes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Frame, Mask};

/// Default number of thresholds in a sweep.
pub const DEFAULT_GRID_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn scores_from_counts(detected: usize, truth: usize, overlap: usize) -> Scores {
    if detected == 0 && truth == 0 {
        return Scores {
            precision: 1.0,
            recall: 1.0,
            f_measure: 1.0,
        };
    }
    let precision = if detected == 0 { 0.0 } else { overlap as f64 / detected as f64 };
    let recall = if truth == 0 { 0.0 } else { overlap as f64 / truth as f64 };
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores {
        precision,
        recall,
        f_measure,
    }
}

/// Scores `mask` against `truth`. An empty mask scores zero unless the
/// truth is empty too, which scores one.
pub fn f_measure(mask: &Mask, truth: &Mask) -> Result<Scores> {
    if mask.shape() != truth.shape() {
        return Err(Error::DimensionMismatch {
            context: "mask vs truth pixels",
            expected: truth.bits().len(),
            found: mask.bits().len(),
        });
    }
    let overlap = mask.bits().iter().zip(truth.bits()).filter(|(a, b)| **a && **b).count();
    Ok(scores_from_counts(mask.count(), truth.count(), overlap))
}

/// `points` evenly spaced thresholds over `[0, max]`.
pub fn default_grid(max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        n => (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `|residual| > threshold`.
pub fn threshold_mask(residual: &Frame, threshold: f64) -> Mask {
    let bits = residual.values().iter().map(|v| v.abs() > threshold).collect();
    Mask::new(residual.width(), residual.height(), bits).expect("residual shape is valid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Names of the evaluated frames, when known.
    pub frames: Vec<String>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f_measure: Vec<f64>,
    /// Threshold chosen by the sweep; absent for binary masks.
    pub best_threshold: Option<f64>,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f_measure: f64,
}

impl EvalReport {
    fn from_scores(frames: Vec<String>, scores: &[Scores], best_threshold: Option<f64>) -> Self {
        let n = scores.len().max(1) as f64;
        let mean = |f: fn(&Scores) -> f64| scores.iter().map(f).sum::<f64>() / n;
        EvalReport {
            frames,
            precision: scores.iter().map(|s| s.precision).collect(),
            recall: scores.iter().map(|s| s.recall).collect(),
            f_measure: scores.iter().map(|s| s.f_measure).collect(),
            best_threshold,
            mean_precision: mean(|s| s.precision),
            mean_recall: mean(|s| s.recall),
            mean_f_measure: mean(|s| s.f_measure),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_pairs<A>(items: &[A], truths: &[Mask]) -> Result<()> {
    if items.len() != truths.len() {
        return Err(Error::InvalidInput(format!(
            "{} frames but {} ground-truth masks",
            items.len(),
            truths.len()
        )));
    }
    Ok(())
}

/// Per-frame scores of binary masks.
pub fn evaluate_masks(masks: &[Mask], truths: &[Mask], names: Vec<String>) -> Result<EvalReport> {
    check_pairs(masks, truths)?;
    let scores = masks.iter().zip(truths).map(|(m, t)| f_measure(m, t)).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_scores(names, &scores, None))
}

/// Picks the single threshold on `|residual|` maximizing the mean F-measure
/// over all frames and reports per-frame scores at it. Ties go to the
/// smaller threshold. Without a grid, 64 points over `[0, max |residual|]`
/// are used.
pub fn evaluate_residuals(residuals: &[Frame], truths: &[Mask], grid: Option<&[f64]>, names: Vec<String>) -> Result<EvalReport> {
    check_pairs(residuals, truths)?;
    for (r, t) in residuals.iter().zip(truths) {
        if r.shape() != t.shape() {
            return Err(Error::DimensionMismatch {
                context: "residual vs truth pixels",
                expected: t.bits().len(),
                found: r.len(),
            });
        }
    }
    let mut grid: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => {
            let max = residuals
                .iter()
                .flat_map(|r| r.values().iter().map(|v| v.abs()))
                .fold(0.0, f64::max);
            default_grid(max, DEFAULT_GRID_POINTS)
        }
    };
    if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("threshold grid must be non-empty and finite".into()));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let mut best: Option<(f64, Vec<Scores>, f64)> = None;
    for &t in &grid {
        let scores: Vec<Scores> = residuals
            .iter()
            .zip(truths)
            .map(|(r, truth)| f_measure(&threshold_mask(r, t), truth))
            .collect::<Result<_>>()?;
        let mean = scores.iter().map(|s| s.f_measure).sum::<f64>() / scores.len().max(1) as f64;
        if best.as_ref().is_none_or(|(_, _, m)| mean > *m) {
            best = Some((t, scores, mean));
        }
    }
    let (t, scores, _) = best.expect("grid is non-empty");
    Ok(EvalReport::from_scores(names, &scores, Some(t)))
}

/// Single-frame threshold sweep.
pub fn threshold_sweep(residual: &Frame, truth: &Mask, grid: &[f64]) -> Result<EvalReport> {
    evaluate_residuals(std::slice::from_ref(residual), std::slice::from_ref(truth), Some(grid), vec![])
}
