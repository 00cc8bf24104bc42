//! Named policies, their hyperparameters, and construction.

use std::fmt;

use csb_core::knapsack::{oracle_allocation, DEFAULT_SCALE};
use csb_core::model::same_threshold_equivalent;
use csb_core::policies::{
    AnytimeMultiConfig, CsbDu, CsbSu, FixedAllocation, KnownMultiThreshold, KnownSameThreshold,
    MpTs, MultiThresholdConfig, SameThresholdConfig, DEFAULT_RESOLVE_CADENCE,
};
use csb_core::{Policy, RngStream};

use crate::error::{LabError, Result};
use crate::instance::InstanceSpec;

/// Mean-loss floor used when none is configured.
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Grid width for instances that do not carry one.
pub const DEFAULT_GAMMA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    CsbSk,
    CsbMk,
    CsbSu,
    CsbDu,
    NumSk,
    NumMk,
    Oracle,
    MpTs,
    Uniform,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 9] = [
        PolicyKind::CsbSk,
        PolicyKind::CsbMk,
        PolicyKind::CsbSu,
        PolicyKind::CsbDu,
        PolicyKind::NumSk,
        PolicyKind::NumMk,
        PolicyKind::Oracle,
        PolicyKind::MpTs,
        PolicyKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::CsbSk => "csb-sk",
            PolicyKind::CsbMk => "csb-mk",
            PolicyKind::CsbSu => "csb-su",
            PolicyKind::CsbDu => "csb-du",
            PolicyKind::NumSk => "num-sk",
            PolicyKind::NumMk => "num-mk",
            PolicyKind::Oracle => "oracle",
            PolicyKind::MpTs => "mp-ts",
            PolicyKind::Uniform => "uniform",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| LabError::UnknownPolicy(name.to_owned()))
    }

    fn accepts(self, key: &str) -> bool {
        use PolicyKind::*;
        match key {
            "delta" | "epsilon" => matches!(self, CsbSk | CsbMk | NumSk | NumMk),
            "gamma" | "resolve_cadence" | "scale" => matches!(self, CsbMk | NumMk | CsbDu),
            "n" => matches!(self, CsbMk | NumMk),
            "observed" => self == MpTs,
            _ => false,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Policy choice with optional overrides; unset values get defaults that
/// depend on the instance and horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub n: Option<usize>,
    pub resolve_cadence: Option<usize>,
    pub scale: Option<u32>,
    pub observed: Option<usize>,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            delta: None,
            epsilon: None,
            gamma: None,
            n: None,
            resolve_cadence: None,
            scale: None,
            observed: None,
        }
    }

    /// Fails naming the first override the policy has no use for.
    pub fn check_keys(&self) -> Result<()> {
        let set = [
            ("delta", self.delta.is_some()),
            ("epsilon", self.epsilon.is_some()),
            ("gamma", self.gamma.is_some()),
            ("n", self.n.is_some()),
            ("resolve_cadence", self.resolve_cadence.is_some()),
            ("scale", self.scale.is_some()),
            ("observed", self.observed.is_some()),
        ];
        match set.iter().find(|(key, on)| *on && !self.kind.accepts(key)) {
            Some((key, _)) => Err(LabError::invalid(
                key,
                format!("not used by policy {}", self.kind),
            )),
            None => Ok(()),
        }
    }

    /// Fills in defaults: `delta = 1/T`, `epsilon = 0.1`, the instance's
    /// `gamma` (else 0.01), `n` = number of distinct thresholds, re-solve
    /// every 20 rounds at scale 10^4, and `observed = K - M` for MP-TS on a
    /// common-threshold instance.
    pub fn resolve(&self, spec: &InstanceSpec, horizon: u64) -> Result<ResolvedPolicy> {
        self.check_keys()?;
        let inst = &spec.instance;
        let observed = match (self.kind, self.observed) {
            (PolicyKind::MpTs, Some(m)) => m,
            (PolicyKind::MpTs, None) => {
                let theta_s = inst.common_threshold().ok_or_else(|| {
                    LabError::invalid(
                        "observed",
                        "required for instances without a common threshold",
                    )
                })?;
                let (m, _) = same_threshold_equivalent(theta_s, inst.arms(), inst.budget())?;
                inst.arms() - m
            }
            _ => 0,
        };
        Ok(ResolvedPolicy {
            kind: self.kind,
            delta: self.delta.unwrap_or(1.0 / horizon.max(2) as f64),
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            gamma: self.gamma.or(spec.gamma).unwrap_or(DEFAULT_GAMMA),
            n: self.n.unwrap_or_else(|| spec.distinct_thresholds()),
            resolve_cadence: self.resolve_cadence.unwrap_or(DEFAULT_RESOLVE_CADENCE),
            scale: self.scale.unwrap_or(DEFAULT_SCALE),
            observed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedPolicy {
    pub kind: PolicyKind,
    pub delta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub n: usize,
    pub resolve_cadence: usize,
    pub scale: u32,
    pub observed: usize,
}

impl ResolvedPolicy {
    pub fn multi_config(&self) -> MultiThresholdConfig {
        MultiThresholdConfig {
            resolve_cadence: self.resolve_cadence,
            scale: self.scale,
            ..MultiThresholdConfig::new(self.n, self.delta, self.epsilon, self.gamma)
        }
    }

    pub fn anytime_config(&self) -> AnytimeMultiConfig {
        AnytimeMultiConfig {
            resolve_cadence: self.resolve_cadence,
            scale: self.scale,
            ..AnytimeMultiConfig::new(self.gamma)
        }
    }

    pub fn same_config(&self) -> SameThresholdConfig {
        SameThresholdConfig {
            delta: self.delta,
            epsilon: self.epsilon,
        }
    }

    /// The oracle and uniform baselines read the full instance; every other
    /// policy only sees its public view.
    pub fn build(&self, spec: &InstanceSpec, rng: RngStream) -> Result<Box<dyn Policy + Send>> {
        let inst = &spec.instance;
        let view = inst.public_view();
        Ok(match self.kind {
            PolicyKind::CsbSk => {
                Box::new(KnownSameThreshold::csb_sk(view, self.same_config(), rng)?)
            }
            PolicyKind::NumSk => {
                Box::new(KnownSameThreshold::num_sk(view, self.same_config(), rng)?)
            }
            PolicyKind::CsbMk => {
                Box::new(KnownMultiThreshold::csb_mk(view, self.multi_config(), rng)?)
            }
            PolicyKind::NumMk => {
                Box::new(KnownMultiThreshold::num_mk(view, self.multi_config(), rng)?)
            }
            PolicyKind::CsbSu => Box::new(CsbSu::new(view, rng)?),
            PolicyKind::CsbDu => Box::new(CsbDu::new(view, self.anytime_config(), rng)?),
            PolicyKind::MpTs => Box::new(MpTs::new(view, self.observed, rng)?),
            PolicyKind::Oracle => Box::new(FixedAllocation::new(oracle_allocation(inst)?)),
            PolicyKind::Uniform => Box::new(FixedAllocation::uniform(view)),
        })
    }

    /// `(key, value)` pairs for the hyperparameters this policy uses.
    pub fn describe(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("policy", self.kind.name().to_owned())];
        let keys: [(&'static str, String); 7] = [
            ("delta", self.delta.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("gamma", self.gamma.to_string()),
            ("n", self.n.to_string()),
            ("resolve_cadence", self.resolve_cadence.to_string()),
            ("scale", self.scale.to_string()),
            ("observed", self.observed.to_string()),
        ];
        out.extend(keys.into_iter().filter(|(k, _)| self.kind.accepts(k)));
        out
    }
}
