//! Mean and standard error across seeds.

use crate::env::EnvKind;
use crate::runner::{Phase, Variant};

use super::table::RunRecord;
use super::ExperimentError;

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub env: EnvKind,
    pub variant: Variant,
    pub label: String,
    pub seeds: usize,
    pub mean: Vec<f64>,
    /// Sample standard deviation over seeds divided by sqrt(seeds); zero for a
    /// single seed.
    pub se: Vec<f64>,
}

/// A horizontal level drawn next to the curves.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatReference {
    pub label: String,
    pub level: f64,
}

/// Pointwise mean and standard error of equal-length curves.
pub fn mean_se(curves: &[&[f64]]) -> Result<(Vec<f64>, Vec<f64>), ExperimentError> {
    let first = curves.first().ok_or(ExperimentError::EmptyGroup)?;
    let len = first.len();
    if let Some(bad) = curves.iter().find(|c| c.len() != len) {
        return Err(ExperimentError::Ragged {
            expected: len,
            found: bad.len(),
        });
    }
    let n = curves.len() as f64;
    let mut mean = vec![0.0; len];
    let mut se = vec![0.0; len];
    for k in 0..len {
        let m = curves.iter().map(|c| c[k]).sum::<f64>() / n;
        mean[k] = m;
        if curves.len() > 1 {
            let ss: f64 = curves.iter().map(|c| (c[k] - m).powi(2)).sum();
            se[k] = (ss / (n - 1.0)).sqrt() / n.sqrt();
        }
    }
    Ok((mean, se))
}

/// Trailing moving average over up to `window` points.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= w {
            sum -= values[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

/// Group runs by (env, variant) in order of first appearance and aggregate.
/// COLLECTOR_ONLY groups are returned as curves too; see [`flat_references`].
pub fn aggregate(
    records: &[RunRecord],
    smoothing: usize,
) -> Result<Vec<AggregateCurve>, ExperimentError> {
    let mut keys: Vec<(EnvKind, Variant)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.env, r.variant)) {
            keys.push((r.env, r.variant));
        }
    }
    keys.into_iter()
        .map(|(env, variant)| {
            let group: Vec<&[f64]> = records
                .iter()
                .filter(|r| r.env == env && r.variant == variant)
                .map(|r| r.episode_rewards.as_slice())
                .collect();
            let (mean, se) = mean_se(&group).map_err(|e| match e {
                ExperimentError::Ragged { expected, found } => ExperimentError::RaggedGroup {
                    label: format!("{env} {variant}"),
                    expected,
                    found,
                },
                other => other,
            })?;
            let mean = if smoothing > 1 {
                smooth(&mean, smoothing)
            } else {
                mean
            };
            Ok(AggregateCurve {
                env,
                variant,
                label: variant.name().to_string(),
                seeds: group.len(),
                mean,
                se,
            })
        })
        .collect()
}

/// Flat levels for the figure: the collector's mean episode reward (from
/// COLLECTOR_ONLY runs) and the random policy's (from the warm-start episodes
/// of PRETRAIN_RANDOM runs), each averaged over seeds.
pub fn flat_references(records: &[RunRecord], env: EnvKind) -> Vec<FlatReference> {
    let mut out = Vec::new();
    let level = |variant: Variant| -> Option<f64> {
        let per_seed: Vec<f64> = records
            .iter()
            .filter(|r| r.env == env && r.variant == variant)
            .filter_map(|r| {
                let xs: Vec<f64> = r
                    .episode_rewards
                    .iter()
                    .zip(&r.phases)
                    .filter(|(_, p)| **p == Phase::Collect)
                    .map(|(x, _)| *x)
                    .collect();
                (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
            })
            .collect();
        (!per_seed.is_empty()).then(|| per_seed.iter().sum::<f64>() / per_seed.len() as f64)
    };
    if let Some(l) = level(Variant::CollectorOnly) {
        out.push(FlatReference {
            label: "Collector".into(),
            level: l,
        });
    }
    if let Some(l) = level(Variant::PretrainRandom) {
        out.push(FlatReference {
            label: "Random".into(),
            level: l,
        });
    }
    out
}

/// Curves to draw as lines: everything except COLLECTOR_ONLY.
pub fn plotted(curves: &[AggregateCurve], env: EnvKind) -> Vec<AggregateCurve> {
    curves
        .iter()
        .filter(|c| c.env == env && c.variant != Variant::CollectorOnly)
        .cloned()
        .collect()
}
