//! Instance files and the four preset instances.
//!
//! An instance file is a flat `key = value` document:
//!
//! ```text
//! K = 3              # optional, checked against the list lengths
//! Q = 1
//! mode = loss        # loss | reward, default loss
//! mu = 0.9, 0.6, 0.4
//! theta = 0.6, 0.55, 0.45
//! gamma = 0.01       # optional tolerance for the multi-threshold policies
//! ```
//!
//! `theta_s = x` (or a single-element `theta`) gives every arm the common
//! threshold `x`.

use std::fmt::Write as _;
use std::path::Path;

use csb_core::{CsbInstance, Mode};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::kv::{parse_f64, parse_list, parse_usize, KeyValues};

/// An instance plus the experiment-level knobs that travel with it.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    /// Preset name or file path, for reports.
    pub label: String,
    pub instance: CsbInstance,
    pub gamma: Option<f64>,
}

impl InstanceSpec {
    /// Canonical instance file text; stable across runs.
    pub fn render(&self) -> String {
        let inst = &self.instance;
        let mut out = String::new();
        let _ = writeln!(out, "K = {}", inst.arms());
        let _ = writeln!(out, "Q = {}", inst.budget());
        let _ = writeln!(out, "mode = {}", inst.mode());
        let _ = writeln!(out, "mu = {}", join(inst.mu()));
        match inst.common_threshold() {
            Some(t) => {
                let _ = writeln!(out, "theta_s = {t}");
            }
            None => {
                let _ = writeln!(out, "theta = {}", join(inst.theta()));
            }
        }
        if let Some(g) = self.gamma {
            let _ = writeln!(out, "gamma = {g}");
        }
        out
    }

    /// SHA-256 of [`render`](Self::render), lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.render().as_bytes()).iter().fold(
            String::with_capacity(64),
            |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            },
        )
    }

    /// Number of distinct thresholds.
    pub fn distinct_thresholds(&self) -> usize {
        let mut t = self.instance.theta().to_vec();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t.len()
    }
}

pub(crate) fn join(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn parse_mode(key: &str, value: &str) -> Result<Mode> {
    match value {
        "loss" => Ok(Mode::Loss),
        "reward" => Ok(Mode::Reward),
        other => Err(LabError::invalid(
            key,
            format!("`{other}` is not `loss` or `reward`"),
        )),
    }
}

pub fn parse_instance(text: &str, label: impl Into<String>) -> Result<InstanceSpec> {
    let mut kv = KeyValues::parse(text)?;
    let k = kv.take_with("K", parse_usize)?;
    let budget = kv
        .take_with("Q", parse_f64)?
        .ok_or(LabError::MissingKey("Q"))?;
    let mode = kv.take_with("mode", parse_mode)?.unwrap_or(Mode::Loss);
    let mu = kv
        .take_with("mu", parse_list)?
        .ok_or(LabError::MissingKey("mu"))?;
    let theta = kv.take_with("theta", parse_list)?;
    let theta_s = kv.take_with("theta_s", parse_f64)?;
    let gamma = kv.take_with("gamma", parse_f64)?;
    kv.finish()?;

    if let Some(k) = k {
        if k != mu.len() {
            return Err(LabError::invalid(
                "mu",
                format!("{} values for K = {k}", mu.len()),
            ));
        }
    }
    if let Some(g) = gamma {
        if g <= 0.0 {
            return Err(LabError::invalid("gamma", "must be positive"));
        }
    }
    let instance = match (theta, theta_s) {
        (Some(_), Some(_)) => return Err(LabError::invalid("theta_s", "conflicts with `theta`")),
        (None, None) => return Err(LabError::MissingKey("theta")),
        (None, Some(t)) => CsbInstance::same_threshold(mu, t, budget, mode)?,
        (Some(t), None) if t.len() == 1 && mu.len() > 1 => {
            CsbInstance::same_threshold(mu, t[0], budget, mode)?
        }
        (Some(t), None) => {
            if t.len() != mu.len() {
                return Err(LabError::invalid(
                    "theta",
                    format!("{} values for {} arms", t.len(), mu.len()),
                ));
            }
            CsbInstance::new(mu, t, budget, mode)?
        }
    };
    Ok(InstanceSpec {
        label: label.into(),
        instance,
        gamma,
    })
}

pub fn load_instance(path: &Path) -> Result<InstanceSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_instance(&text, path.display().to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    I,
    II,
    III,
    IV,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::I, Preset::II, Preset::III, Preset::IV];

    pub fn name(self) -> &'static str {
        match self {
            Preset::I => "I",
            Preset::II => "II",
            Preset::III => "III",
            Preset::IV => "IV",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| LabError::UnknownPreset(name.to_owned()))
    }

    pub fn spec(self) -> InstanceSpec {
        const MU: [f64; 10] = [0.9, 0.8, 0.42, 0.6, 0.5, 0.2, 0.1, 0.3, 0.7, 0.98];
        const THETA_III: [f64; 10] = [0.65, 0.55, 0.3, 0.46, 0.37, 0.2, 0.07, 0.25, 0.3, 0.8];
        const THETA_IV: [f64; 10] = [0.55, 0.55, 0.3, 0.55, 0.55, 0.55, 0.3, 0.3, 0.3, 0.55];
        let linear = |x: f64| (0..50).map(|i| x - i as f64 / 100.0).collect::<Vec<_>>();
        let (instance, gamma) = match self {
            Preset::I => (
                CsbInstance::same_threshold(linear(0.5), 0.5, 15.0, Mode::Loss),
                None,
            ),
            Preset::II => (
                CsbInstance::same_threshold(linear(0.7), 0.5, 15.0, Mode::Loss),
                None,
            ),
            Preset::III => (
                CsbInstance::new(MU.to_vec(), THETA_III.to_vec(), 3.0, Mode::Loss),
                Some(0.01),
            ),
            Preset::IV => (
                CsbInstance::new(MU.to_vec(), THETA_IV.to_vec(), 3.0, Mode::Loss),
                Some(0.01),
            ),
        };
        InstanceSpec {
            label: self.name().to_owned(),
            instance: instance.expect("preset parameters are valid"),
            gamma,
        }
    }
}

/// A preset name (`I` .. `IV`) or a path to an instance file.
pub fn resolve_instance(name_or_path: &str, base: &Path) -> Result<InstanceSpec> {
    match Preset::from_name(name_or_path) {
        Ok(p) => Ok(p.spec()),
        Err(_) => {
            let path = base.join(name_or_path);
            if path.exists() {
                load_instance(&path)
            } else {
                Err(LabError::UnknownPreset(name_or_path.to_owned()))
            }
        }
    }
}
