//! Merged and blended training sets.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::question_gen::QaInstance;
use crate::seed;

/// Concatenate instance sets, keeping the first instance for every id.
/// Returns the merged list and the number of duplicates removed.
pub fn merge(sets: &[Vec<QaInstance>]) -> (Vec<QaInstance>, usize) {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut duplicates = 0;
    for instance in sets.iter().flatten() {
        if seen.insert(instance.instance_id.as_str()) {
            out.push(instance.clone());
        } else {
            duplicates += 1;
        }
    }
    (out, duplicates)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    /// `n_extra * max(0, 1 - alpha * (e - 1))`
    #[default]
    Linear,
    /// `n_extra * (1 - alpha)^(e - 1)`
    Geometric,
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decay::Linear => "linear",
            Decay::Geometric => "geometric",
        })
    }
}

impl FromStr for Decay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Decay::Linear),
            "geometric" => Ok(Decay::Geometric),
            other => Err(Error::InvalidArgument(format!(
                "unknown decay `{other}`; expected one of: linear, geometric"
            ))),
        }
    }
}

/// How many additional instances each epoch keeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendSchedule {
    pub alpha: f64,
    pub decay: Decay,
    pub n_epochs: usize,
    pub n_base: usize,
    pub n_extra: usize,
    /// Retained extra count for epochs 1..=n_epochs.
    pub per_epoch: Vec<usize>,
}

pub fn plan(alpha: f64, n_epochs: usize, n_base: usize, n_extra: usize, decay: Decay) -> Result<BlendSchedule> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if n_epochs == 0 {
        return Err(Error::InvalidSchedule("at least one epoch is required".into()));
    }
    let per_epoch = (0..n_epochs)
        .map(|e| {
            let fraction = match decay {
                Decay::Linear => (1.0 - alpha * e as f64).max(0.0),
                Decay::Geometric => (1.0 - alpha).powi(e as i32),
            };
            ((n_extra as f64 * fraction).round() as usize).min(n_extra)
        })
        .collect();
    Ok(BlendSchedule {
        alpha,
        decay,
        n_epochs,
        n_base,
        n_extra,
        per_epoch,
    })
}

impl BlendSchedule {
    /// Indices into the extra pool retained at `epoch` (1-based), in pool
    /// order. One seeded permutation is shared by all epochs and each epoch
    /// keeps a prefix of it, so later samples are subsets of earlier ones.
    pub fn retained(&self, epoch: usize, seed: u64) -> Result<Vec<usize>> {
        if epoch == 0 || epoch > self.n_epochs {
            return Err(Error::InvalidSchedule(format!(
                "epoch {epoch} outside 1..={}",
                self.n_epochs
            )));
        }
        let mut order: Vec<usize> = (0..self.n_extra).collect();
        order.shuffle(&mut seed::rng(seed::substream(seed, seed::BLEND)));
        let mut keep = order[..self.per_epoch[epoch - 1]].to_vec();
        keep.sort_unstable();
        Ok(keep)
    }
}

/// Training set for one epoch: every base instance followed by the retained
/// extras in their original order.
pub fn epoch_set(
    base: &[QaInstance],
    extra: &[QaInstance],
    schedule: &BlendSchedule,
    epoch: usize,
    seed: u64,
) -> Result<Vec<QaInstance>> {
    if extra.len() != schedule.n_extra || base.len() != schedule.n_base {
        return Err(Error::InvalidSchedule(format!(
            "schedule planned for {} base / {} extra instances, got {} / {}",
            schedule.n_base,
            schedule.n_extra,
            base.len(),
            extra.len()
        )));
    }
    let mut out = base.to_vec();
    out.extend(
        schedule
            .retained(epoch, seed)?
            .into_iter()
            .map(|i| extra[i].clone()),
    );
    Ok(out)
}
