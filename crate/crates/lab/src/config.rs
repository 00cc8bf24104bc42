//! Experiment configuration files.
//!
//! ```text
//! instance = I             # preset I..IV or a path relative to this file
//! policy = csb-su
//! horizon = 100000
//! repetitions = 100
//! seed = 1
//! log_stride = 100         # optional, default 100
//! output = trace.csv       # optional
//! Q = 10                   # optional budget override
//! theta_s = 0.4            # optional common-threshold override
//! mode = reward            # optional mode override
//! delta = 1e-5             # policy overrides: delta, epsilon, gamma, n,
//!                          # resolve_cadence, scale, observed
//! ```
//!
//! Unknown keys, and policy overrides the chosen policy does not use, are
//! errors naming the key.

use std::path::{Path, PathBuf};

use csb_core::Mode;

use crate::error::{LabError, Result};
use crate::instance::{parse_mode, resolve_instance, InstanceSpec};
use crate::kv::{parse_f64, parse_u64, parse_usize, KeyValues};
use crate::policy::{PolicyKind, PolicySpec, ResolvedPolicy};

pub const DEFAULT_LOG_STRIDE: u64 = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Preset name or instance file path.
    pub instance: String,
    /// Directory instance paths are relative to.
    pub base_dir: PathBuf,
    pub budget: Option<f64>,
    pub theta_s: Option<f64>,
    pub mode: Option<Mode>,
    pub policy: PolicySpec,
    pub horizon: u64,
    pub repetitions: usize,
    pub master_seed: u64,
    pub log_stride: u64,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(
        instance: impl Into<String>,
        policy: PolicyKind,
        horizon: u64,
        repetitions: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            instance: instance.into(),
            base_dir: PathBuf::from("."),
            budget: None,
            theta_s: None,
            mode: None,
            policy: PolicySpec::new(policy),
            horizon,
            repetitions,
            master_seed,
            log_stride: DEFAULT_LOG_STRIDE,
            output_path: None,
        }
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let instance = kv
            .take("instance")
            .ok_or(LabError::MissingKey("instance"))?;
        let policy = kv.take("policy").ok_or(LabError::MissingKey("policy"))?;
        let mut spec = PolicySpec::new(PolicyKind::from_name(&policy)?);
        spec.delta = kv.take_with("delta", parse_f64)?;
        spec.epsilon = kv.take_with("epsilon", parse_f64)?;
        spec.gamma = kv.take_with("gamma", parse_f64)?;
        spec.n = kv.take_with("n", parse_usize)?;
        spec.resolve_cadence = kv.take_with("resolve_cadence", parse_usize)?;
        spec.scale = kv
            .take_with("scale", parse_u64)?
            .map(|s| u32::try_from(s).map_err(|_| LabError::invalid("scale", "too large")))
            .transpose()?;
        spec.observed = kv.take_with("observed", parse_usize)?;
        let config = Self {
            instance,
            base_dir: base_dir.to_path_buf(),
            budget: kv.take_with("Q", parse_f64)?,
            theta_s: kv.take_with("theta_s", parse_f64)?,
            mode: kv.take_with("mode", parse_mode)?,
            policy: spec,
            horizon: kv
                .take_with("horizon", parse_u64)?
                .ok_or(LabError::MissingKey("horizon"))?,
            repetitions: kv
                .take_with("repetitions", parse_usize)?
                .ok_or(LabError::MissingKey("repetitions"))?,
            master_seed: kv.take_with("seed", parse_u64)?.unwrap_or(0),
            log_stride: kv
                .take_with("log_stride", parse_u64)?
                .unwrap_or(DEFAULT_LOG_STRIDE),
            output_path: kv.take("output").map(|p| base_dir.join(p)),
        };
        kv.finish()?;
        config.policy.check_keys()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Loads the instance, applies overrides and fills in policy defaults.
    pub fn resolve(&self) -> Result<Experiment> {
        if self.horizon < 1 {
            return Err(LabError::invalid("horizon", "must be at least 1"));
        }
        if self.repetitions < 1 {
            return Err(LabError::invalid("repetitions", "must be at least 1"));
        }
        if self.log_stride < 1 {
            return Err(LabError::invalid("log_stride", "must be at least 1"));
        }
        let mut spec = resolve_instance(&self.instance, &self.base_dir)?;
        if let Some(q) = self.budget {
            spec.instance = spec.instance.with_budget(q)?;
        }
        if let Some(t) = self.theta_s {
            spec.instance = spec.instance.with_threshold(t)?;
        }
        if let Some(m) = self.mode {
            spec.instance = spec.instance.with_mode(m);
        }
        let policy = self.policy.resolve(&spec, self.horizon)?;
        // Surface mode mismatches before any episode runs.
        policy.build(&spec, csb_core::derive_stream(0, 0))?;
        Ok(Experiment {
            spec,
            policy,
            horizon: self.horizon,
            repetitions: self.repetitions,
            master_seed: self.master_seed,
            log_stride: self.log_stride,
        })
    }
}

/// A fully resolved experiment: everything needed to reproduce its output.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub spec: InstanceSpec,
    pub policy: ResolvedPolicy,
    pub horizon: u64,
    pub repetitions: usize,
    pub master_seed: u64,
    pub log_stride: u64,
}

impl Experiment {
    /// `(key, value)` pairs that reproduce this experiment as a config file.
    pub fn describe(&self) -> Vec<(&'static str, String)> {
        let inst = &self.spec.instance;
        let mut out = vec![
            ("instance", self.spec.label.clone()),
            ("Q", inst.budget().to_string()),
        ];
        if let Some(t) = inst.common_threshold() {
            out.push(("theta_s", t.to_string()));
        }
        out.push(("mode", inst.mode().to_string()));
        out.extend(self.policy.describe());
        out.extend([
            ("horizon", self.horizon.to_string()),
            ("repetitions", self.repetitions.to_string()),
            ("seed", self.master_seed.to_string()),
            ("log_stride", self.log_stride.to_string()),
        ]);
        out
    }

    /// Logged rounds: every `log_stride`-th round plus the last one.
    pub fn logged_rounds(&self) -> Vec<u64> {
        let mut rounds: Vec<u64> = (1..=self.horizon / self.log_stride)
            .map(|i| i * self.log_stride)
            .collect();
        if rounds.last() != Some(&self.horizon) {
            rounds.push(self.horizon);
        }
        rounds
    }
}
