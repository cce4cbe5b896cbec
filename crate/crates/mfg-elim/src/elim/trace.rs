use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Raw gaps below this value are reported as 0 in the normalized curve.
pub const NORM_GAP_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    If,
    Else,
    Single,
}

/// One CSV row; the column set is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub branch: Branch,
    pub inner_iter: usize,
    pub delta_max: f64,
    pub models_remaining: usize,
    pub trajectories_total: u64,
    pub norm_max_ne_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub branch: Branch,
    pub reference_id: String,
    /// Reference model, when the reference is a member's NE policy.
    pub reference_model: Option<usize>,
    pub survivors: Vec<usize>,
    pub trajectories_used: u64,
    pub delta_max: Vec<f64>,
    pub max_norm_gap: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ElimTrace {
    pub rows: Vec<TraceRow>,
    pub rounds: Vec<RoundRecord>,
}

impl ElimTrace {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Vec<TraceRow>> {
        let mut r = csv::Reader::from_path(path)?;
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }

    /// Whether `index` is in every recorded survivor set.
    pub fn survived(&self, index: usize) -> bool {
        self.rounds.iter().all(|r| r.survivors.contains(&index))
    }

    pub fn models_remaining_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].models_remaining <= w[0].models_remaining)
    }
}

/// Exact gaps of every member's NE policy in the true model, used for the
/// normalized-gap curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapMonitor {
    pub gaps: Vec<f64>,
    /// Worst gap over the whole class before elimination starts.
    pub initial: f64,
}

impl GapMonitor {
    pub fn new(gaps: Vec<f64>) -> Self {
        let initial = gaps.iter().cloned().fold(0.0, f64::max);
        GapMonitor { gaps, initial }
    }

    /// Worst survivor gap over the initial one; 0 once the raw gap is below
    /// [`NORM_GAP_FLOOR`].
    pub fn normalized(&self, survivors: &[usize]) -> f64 {
        let worst = survivors.iter().map(|&i| self.gaps[i]).fold(0.0, f64::max);
        if worst < NORM_GAP_FLOOR {
            0.0
        } else if self.initial > 0.0 {
            worst / self.initial
        } else {
            0.0
        }
    }
}
