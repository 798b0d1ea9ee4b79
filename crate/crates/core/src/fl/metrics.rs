use serde::{Deserialize, Serialize};

use crate::fl::Strategy;

/// One communication round's metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub participants: Vec<usize>,
    /// Participants whose local training diverged and were left out.
    pub failed: Vec<usize>,
    /// Global test accuracy (mean over client models for local-only runs).
    pub accuracy: f64,
    /// Global test cross-entropy.
    pub loss: f64,
    /// Mean post-training classification loss over successful clients.
    pub cla_loss: f64,
    /// Mean unweighted regularizer value over successful clients.
    pub reg_loss: f64,
    /// Mean `cla + μ·reg` over successful clients.
    pub train_loss: f64,
    /// `‖Ω_global − softmax(ω ωᵀ)‖_F` of the aggregated model.
    pub sl_cr_distance: f64,
    pub millis: u64,
    pub upload_bytes: u64,
    pub download_bytes: u64,
}

/// Byte accounting with every scalar sent as 8 bytes.
///
/// Upload per client: parameters plus the sample count; FedDW adds the
/// `|C|×|C|` SL matrix and the `|C|` per-class counts that weight SL aggregation. Download per
/// client: parameters; FedDW adds the global SL matrix.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CommMeter {
    pub param_count: usize,
    pub classes: usize,
    pub sends_sl: bool,
    pub communicates: bool,
    pub upload_bytes: u64,
    pub download_bytes: u64,
}

const SCALAR_BYTES: u64 = 8;

impl CommMeter {
    pub fn new(strategy: &Strategy, param_count: usize, classes: usize) -> Self {
        Self {
            param_count,
            classes,
            sends_sl: strategy.is_feddw(),
            communicates: strategy.aggregates(),
            upload_bytes: 0,
            download_bytes: 0,
        }
    }

    pub fn upload_per_client(&self) -> u64 {
        if !self.communicates {
            return 0;
        }
        let c = self.classes as u64;
        let mut scalars = self.param_count as u64 + 1;
        if self.sends_sl {
            scalars += c * c + c;
        }
        scalars * SCALAR_BYTES
    }

    pub fn download_per_client(&self) -> u64 {
        if !self.communicates {
            return 0;
        }
        let c = self.classes as u64;
        let mut scalars = self.param_count as u64;
        if self.sends_sl {
            scalars += c * c;
        }
        scalars * SCALAR_BYTES
    }

    /// Charges one round; returns `(upload, download)` bytes for it.
    pub fn record_round(&mut self, receivers: usize, uploaders: usize) -> (u64, u64) {
        let up = self.upload_per_client() * uploaders as u64;
        let down = self.download_per_client() * receivers as u64;
        self.upload_bytes += up;
        self.download_bytes += down;
        (up, down)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feddw::RegularizerConfig;

    #[test]
    fn feddw_overhead_is_sl_plus_counts() {
        let avg = CommMeter::new(&Strategy::FedAvg, 1000, 10);
        let dw = CommMeter::new(&Strategy::FedDw(RegularizerConfig::exact(0.1)), 1000, 10);
        assert_eq!(dw.upload_per_client() - avg.upload_per_client(), 8 * (100 + 10));
        assert_eq!(dw.download_per_client() - avg.download_per_client(), 8 * 100);
        assert_eq!(avg.upload_per_client(), 8 * 1001);
    }

    #[test]
    fn local_only_sends_nothing() {
        let mut m = CommMeter::new(&Strategy::LocalOnly, 50, 3);
        assert_eq!(m.record_round(4, 4), (0, 0));
    }

    #[test]
    fn totals_accumulate() {
        let mut m = CommMeter::new(&Strategy::FedAvg, 9, 2);
        m.record_round(3, 2);
        m.record_round(3, 3);
        assert_eq!(m.upload_bytes, 5 * 80);
        assert_eq!(m.download_bytes, 6 * 72);
    }
}
