//! Run configuration: TOML with a default for every field and two named presets.

use crate::error::CliError;
use dicke_core::classical::{GridConfig, LyapunovConfig};
use dicke_core::mixed::ClassificationBounds;
use dicke_core::model::{ModelParams, DEFAULT_DELTA};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub basis: BasisConfig,
    pub spectrum: SpectrumConfig,
    pub classical: ClassicalConfig,
    pub stats: StatsConfig,
    pub husimi: HusimiConfig,
    pub mixed: MixedConfig,
    pub run: RunSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub omega: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub f: u8,
    pub j: f64,
}

impl ModelConfig {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        self.params_at(self.j)
    }

    pub fn params_at(&self, j: f64) -> Result<ModelParams, CliError> {
        ModelParams::new(self.omega, self.omega0, self.gamma, j, self.f).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Fock,
    Efficient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub kind: BasisChoice,
    /// Tail-weight tolerance of the convergence criterion.
    pub delta: f64,
    /// Fixed boson cutoff; when absent the Fock cutoff grows until the window converges.
    pub n_max: Option<usize>,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            kind: BasisChoice::Fock,
            delta: DEFAULT_DELTA,
            n_max: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Scaled-energy windows [ε_lo, ε_hi] solved at the model's j.
    pub windows: Vec<[f64; 2]>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            windows: vec![[-1.0, -0.8], [-0.1, 0.1], [2.9, 3.1]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalConfig {
    pub energies: Vec<f64>,
    pub resolution: usize,
    pub t_total: f64,
    pub renorm: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Overrides max(10/T, 0.005).
    pub threshold: Option<f64>,
    pub poincare_orbits: usize,
    pub poincare_crossings: usize,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        let l = LyapunovConfig::default();
        Self {
            energies: vec![-0.9, 0.0, 3.0],
            resolution: 201,
            t_total: l.t_total,
            renorm: l.renorm,
            rtol: l.rtol,
            atol: l.atol,
            threshold: None,
            poincare_orbits: 8,
            poincare_crossings: 300,
        }
    }
}

impl ClassicalConfig {
    pub fn grid(&self) -> GridConfig {
        GridConfig {
            resolution: self.resolution,
            lyapunov: LyapunovConfig {
                t_total: self.t_total,
                renorm: self.renorm,
                rtol: self.rtol,
                atol: self.atol,
            },
            threshold: self.threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureEntry {
    pub window: [f64; 2],
    pub regular: f64,
    pub chaotic: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub j: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub half_width: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    /// Windows whose ratio statistics are reported; each must also be a spectrum window.
    pub windows: Vec<[f64; 2]>,
    pub profile: Option<ProfileConfig>,
    pub bins: usize,
    pub surrogate_levels: usize,
    /// Explicit mixtures; windows without one take the chaotic components of a classical
    /// grid at the window centre when it exists.
    pub mixtures: Vec<MixtureEntry>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            windows: SpectrumConfig::default().windows,
            profile: Some(ProfileConfig {
                j: 20.0,
                eps_lo: -1.0,
                eps_hi: 3.5,
                half_width: 0.1,
                step: 0.1,
            }),
            bins: 20,
            surrogate_levels: 100_000,
            mixtures: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HusimiConfig {
    pub window: [f64; 2],
    pub moments: Vec<u32>,
    pub localization: bool,
    pub shell_samples: usize,
    /// Random states averaged for the delocalization thresholds; 0 skips them.
    pub threshold_ensemble: usize,
    /// State indices (within the model-j window) whose full fields are exported.
    pub export_states: Vec<usize>,
}

impl Default for HusimiConfig {
    fn default() -> Self {
        Self {
            window: [-0.05, 0.05],
            moments: vec![1, 2, 3, 4],
            localization: false,
            shell_samples: dicke_core::husimi::DEFAULT_SHELL_SAMPLES,
            threshold_ensemble: 0,
            export_states: Vec::new(),
        }
    }
}

impl HusimiConfig {
    pub fn center(&self) -> f64 {
        0.5 * (self.window[0] + self.window[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixedConfig {
    /// System-size ensembles such as "20-30", "49-51" or "100".
    pub ensembles: Vec<String>,
    pub m_minus: f64,
    pub m_plus: f64,
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_step: f64,
}

impl Default for MixedConfig {
    fn default() -> Self {
        Self {
            ensembles: vec!["20-30".into(), "49-51".into(), "100".into()],
            m_minus: -0.8,
            m_plus: 0.7,
            scan_lo: -0.8,
            scan_hi: 0.5,
            scan_step: 0.05,
        }
    }
}

impl MixedConfig {
    pub fn bounds(&self) -> Result<ClassificationBounds, CliError> {
        ClassificationBounds::new(self.m_minus, self.m_plus).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn ensemble_members(&self) -> Result<Vec<Vec<f64>>, CliError> {
        self.ensembles.iter().map(|s| parse_ensemble(s)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// 0 uses every available core.
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            workers: 0,
            out: PathBuf::from("dicke-out"),
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            omega0: 1.0,
            gamma: 0.5,
            f: 1,
            j: 50.0,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::preset("one-photon-paper").expect("built-in preset")
    }
}

/// "a-b" is every integer j in [a, b]; a lone number is one member.
pub fn parse_ensemble(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("cannot parse ensemble {spec:?}"));
    let check = |j: f64| if j >= 0.5 && (2.0 * j).fract() == 0.0 { Ok(j) } else { Err(bad()) };
    match spec.split_once('-') {
        Some((a, b)) => {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().parse().map_err(|_| bad())?;
            if a == 0 || a > b {
                return Err(bad());
            }
            Ok((a..=b).map(f64::from).collect())
        }
        None => Ok(vec![check(spec.trim().parse().map_err(|_| bad())?)?]),
    }
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let base = RunConfig {
            model: ModelConfig::default(),
            basis: BasisConfig::default(),
            spectrum: SpectrumConfig::default(),
            classical: ClassicalConfig::default(),
            stats: StatsConfig::default(),
            husimi: HusimiConfig::default(),
            mixed: MixedConfig::default(),
            run: RunSection::default(),
        };
        match name {
            "one-photon-paper" => Ok(base),
            "two-photon-paper" => Ok(RunConfig {
                model: ModelConfig {
                    omega: 1.0,
                    omega0: 2.0,
                    gamma: 0.3,
                    f: 2,
                    j: 50.0,
                },
                spectrum: SpectrumConfig {
                    windows: vec![[0.9, 1.1]],
                },
                classical: ClassicalConfig {
                    energies: vec![1.0],
                    ..base.classical
                },
                stats: StatsConfig {
                    windows: vec![[0.9, 1.1]],
                    profile: Some(ProfileConfig {
                        j: 10.0,
                        eps_lo: -1.5,
                        eps_hi: 7.0,
                        half_width: 0.2,
                        step: 0.25,
                    }),
                    ..base.stats
                },
                husimi: HusimiConfig {
                    window: [0.95, 1.05],
                    ..base.husimi
                },
                mixed: MixedConfig {
                    m_plus: 0.85,
                    scan_hi: 0.65,
                    ..base.mixed
                },
                ..base
            }),
            other => Err(CliError::Config(format!(
                "unknown preset {other:?} (one-photon-paper, two-photon-paper)"
            ))),
        }
    }

    /// Preset (default one-photon-paper) overlaid with the file's tables.
    pub fn load(path: Option<&Path>, preset: Option<&str>) -> Result<Self, CliError> {
        let base = Self::preset(preset.unwrap_or("one-photon-paper"))?;
        let Some(path) = path else {
            base.validate()?;
            return Ok(base);
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg = Self::overlay(base, &text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the tables present in `text` on top of `base`.
    pub fn overlay(base: Self, text: &str) -> Result<Self, CliError> {
        let mut merged = toml::Value::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
        let patch: toml::Value = text.parse::<toml::Table>().map(toml::Value::Table).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut merged, patch);
        merged.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.model.params()?;
        let windows = self.spectrum.windows.iter().chain(&self.stats.windows).chain(std::iter::once(&self.husimi.window));
        for w in windows {
            if !(w[0] < w[1]) {
                return bad(format!("empty energy window {w:?}"));
            }
        }
        for w in &self.stats.windows {
            if !self.spectrum.windows.contains(w) {
                return bad(format!("stats window {w:?} is not a spectrum window"));
            }
        }
        if !(self.basis.delta > 0.0 && self.basis.delta < 1.0) {
            return bad(format!("basis.delta = {} outside (0, 1)", self.basis.delta));
        }
        if self.basis.kind == BasisChoice::Efficient && self.basis.n_max.is_none() {
            return bad("the efficient basis needs an explicit basis.n_max".into());
        }
        if self.classical.resolution < 3 {
            return bad("classical.resolution must be at least 3".into());
        }
        if !(self.classical.t_total > 0.0 && self.classical.renorm > 0.0) {
            return bad("classical.t_total and classical.renorm must be positive".into());
        }
        if self.husimi.moments.iter().any(|&m| !(1..=4).contains(&m)) {
            return bad("husimi.moments must lie in 1..=4".into());
        }
        if self.stats.surrogate_levels < 100 {
            return bad("stats.surrogate_levels must be at least 100".into());
        }
        if let Some(p) = &self.stats.profile {
            if !(p.eps_lo < p.eps_hi && p.half_width > 0.0 && p.step > 0.0) {
                return bad(format!("invalid stats.profile {p:?}"));
            }
            self.model.params_at(p.j)?;
        }
        for m in &self.stats.mixtures {
            dicke_core::spectral::MixtureSpec::new(m.regular, m.chaotic.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.mixed.bounds()?;
        for j in self.mixed.ensemble_members()?.into_iter().flatten() {
            self.model.params_at(j)?;
        }
        if !(self.mixed.scan_step > 0.0 && self.mixed.scan_lo >= -1.0 && self.mixed.scan_hi < self.mixed.m_plus) {
            return bad("scan bounds must satisfy −1 ≤ scan_lo, scan_hi < m_plus, scan_step > 0".into());
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Value, patch: toml::Value) {
    match (base, patch) {
        (toml::Value::Table(b), toml::Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}
