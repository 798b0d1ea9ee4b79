use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Named bundles of config overrides for the standard studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// β = 0.5, every client every round.
    Practical,
    /// β = 0.1, half the clients per round.
    Pathological,
    Iid,
    NormStudy,
    /// Pathological setting with a strong regularizer (μ = 10).
    HeatmapStudy,
    /// Pathological FedDW; `sweep` varies μ over [`SWEEP_MUS`].
    SweepMu,
}

pub const SWEEP_MUS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

pub const ALL: [Preset; 6] = [
    Preset::Practical,
    Preset::Pathological,
    Preset::Iid,
    Preset::NormStudy,
    Preset::HeatmapStudy,
    Preset::SweepMu,
];

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Practical => "practical",
            Preset::Pathological => "pathological",
            Preset::Iid => "iid",
            Preset::NormStudy => "norm-study",
            Preset::HeatmapStudy => "heatmap-study",
            Preset::SweepMu => "sweep-mu",
        }
    }

    /// Overrides as a TOML fragment, merged over the defaults.
    pub fn overrides(self) -> &'static str {
        match self {
            Preset::Practical => "beta = 0.5\nparticipation_rate = 1.0\n",
            Preset::Pathological => "beta = 0.1\nparticipation_rate = 0.5\n",
            Preset::Iid => "beta = 1000000.0\nparticipation_rate = 1.0\n",
            Preset::NormStudy => {
                "clients = 1\nrounds = 1\nlocal_epochs = 10\n[strategy]\nkind = \"fedavg\"\n[model]\nclassifier_bias = false\n"
            }
            Preset::HeatmapStudy => {
                "beta = 0.1\nparticipation_rate = 0.5\n[strategy]\nkind = \"feddw\"\nmu = 10.0\n"
            }
            Preset::SweepMu => "beta = 0.1\nparticipation_rate = 0.5\n[strategy]\nkind = \"feddw\"\n",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ALL.iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ALL.iter().map(|p| p.name()).collect();
                format!("unknown preset `{s}` (expected one of {})", names.join(", "))
            })
    }
}
