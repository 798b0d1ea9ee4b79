use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feddw::{RegMode, RegularizerConfig};

/// Local objective and aggregation behaviour of a run.
///
/// Serialized flat, e.g. `{kind = "feddw", mu = 0.1}`; keys that do not
/// belong to the chosen kind are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StrategyRepr", into = "StrategyRepr")]
pub enum Strategy {
    FedAvg,
    /// FedAvg plus `prox_mu/2 · ‖θ − θ_global‖²` in every local objective.
    FedProx { prox_mu: f64 },
    FedDw(RegularizerConfig),
    /// Clients never aggregate; each keeps training its own model.
    LocalOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    FedAvg,
    FedProx,
    FedDw,
    Local,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyRepr {
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prox_mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<RegMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    linearization_refresh: Option<usize>,
}

impl TryFrom<StrategyRepr> for Strategy {
    type Error = String;

    fn try_from(r: StrategyRepr) -> std::result::Result<Self, String> {
        let stray = |allowed: &[&str]| {
            let present = [
                ("prox_mu", r.prox_mu.is_some()),
                ("mu", r.mu.is_some()),
                ("mode", r.mode.is_some()),
                ("linearization_refresh", r.linearization_refresh.is_some()),
            ];
            match present.iter().find(|(k, set)| *set && !allowed.contains(k)) {
                Some((k, _)) => Err(format!("key `{k}` does not apply to strategy {:?}", r.kind)),
                None => Ok(()),
            }
        };
        match r.kind {
            Kind::FedAvg => stray(&[]).map(|_| Strategy::FedAvg),
            Kind::Local => stray(&[]).map(|_| Strategy::LocalOnly),
            Kind::FedProx => {
                stray(&["prox_mu"])?;
                let prox_mu = r.prox_mu.ok_or("fedprox requires `prox_mu`")?;
                Ok(Strategy::FedProx { prox_mu })
            }
            Kind::FedDw => {
                stray(&["mu", "mode", "linearization_refresh"])?;
                let mut reg = RegularizerConfig::exact(r.mu.unwrap_or(0.1));
                reg.mode = r.mode.unwrap_or_default();
                if let Some(n) = r.linearization_refresh {
                    reg.linearization_refresh = n;
                }
                Ok(Strategy::FedDw(reg))
            }
        }
    }
}

impl From<Strategy> for StrategyRepr {
    fn from(s: Strategy) -> Self {
        let mut r = StrategyRepr {
            kind: Kind::FedAvg,
            prox_mu: None,
            mu: None,
            mode: None,
            linearization_refresh: None,
        };
        match s {
            Strategy::FedAvg => {}
            Strategy::LocalOnly => r.kind = Kind::Local,
            Strategy::FedProx { prox_mu } => {
                r.kind = Kind::FedProx;
                r.prox_mu = Some(prox_mu);
            }
            Strategy::FedDw(reg) => {
                r.kind = Kind::FedDw;
                r.mu = Some(reg.mu);
                r.mode = Some(reg.mode);
                r.linearization_refresh = Some(reg.linearization_refresh);
            }
        }
        r
    }
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::FedDw(RegularizerConfig::exact(0.1))
    }
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FedAvg => "fedavg",
            Strategy::FedProx { .. } => "fedprox",
            Strategy::FedDw(_) => "feddw",
            Strategy::LocalOnly => "local",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Strategy::FedProx { prox_mu } if !(*prox_mu >= 0.0 && prox_mu.is_finite()) => Err(
                Error::InvalidInput(format!("prox_mu must be ≥ 0, got {prox_mu}")),
            ),
            Strategy::FedDw(reg) => reg.validate(),
            _ => Ok(()),
        }
    }

    pub fn is_feddw(&self) -> bool {
        matches!(self, Strategy::FedDw(_))
    }

    /// Weight of the regularizer in the reported training loss.
    pub fn mu(&self) -> f64 {
        match self {
            Strategy::FedDw(reg) => reg.mu,
            _ => 0.0,
        }
    }

    pub fn aggregates(&self) -> bool {
        !matches!(self, Strategy::LocalOnly)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shapes() {
        let s: Strategy = serde_json::from_str(r#"{"kind":"feddw","mu":10.0,"mode":"linearized"}"#).unwrap();
        match &s {
            Strategy::FedDw(reg) => {
                assert_eq!(reg.mu, 10.0);
                assert_eq!(reg.mode, RegMode::Linearized);
                assert_eq!(reg.linearization_refresh, 50);
            }
            other => panic!("{other:?}"),
        }
        let back: Strategy = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Strategy>(r#"{"kind":"fedavg","mu":1}"#).is_err());
        assert!(serde_json::from_str::<Strategy>(r#"{"kind":"feddw","mu":1,"typo":2}"#).is_err());
        assert!(serde_json::from_str::<Strategy>(r#"{"kind":"fedprox"}"#).is_err());
        assert!(serde_json::from_str::<Strategy>(r#"{"kind":"sgd"}"#).is_err());
        let dflt: Strategy = serde_json::from_str(r#"{"kind":"feddw"}"#).unwrap();
        assert_eq!(dflt, Strategy::default());
    }

    #[test]
    fn validation() {
        assert!(Strategy::FedProx { prox_mu: -0.1 }.validate().is_err());
        assert!(Strategy::FedDw(RegularizerConfig::exact(-1.0)).validate().is_err());
        assert!(Strategy::FedDw(RegularizerConfig::exact(0.0)).validate().is_ok());
        assert!(Strategy::LocalOnly.validate().is_ok());
    }
}
