//! Run-configuration schema and unit conversion.
//!
//! The file format uses bench units (Hz, GHz, mm, percent, dB/cm) so device
//! tables can be typed verbatim; everything is converted to SI (rad/s, m,
//! fractions) here and nowhere else. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use cfs_core::dispersion::{DispersionCatalog, DispersionModel};
use cfs_core::network::{CfsConfig, ControllerBs, PlantModel, PropagationSegment};
use cfs_core::plants::{ButterworthBpf, CavityDopoParams, LangevinDopoParams};
use cfs_core::stability::StabilitySettings;
use cfs_core::{loss_from_db_per_cm, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceSection,
    pub dopo: DopoSection,
    pub feedback: FeedbackSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bpf: Option<BpfSection>,
    pub dispersion: DispersionSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilitySection>,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub family: Family,
    pub carrier_wavelength_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FreeSpace,
    Waveguide,
}

/// A loss given either directly in percent or as attenuation in dB/cm
/// (converted with the element length).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub db_per_cm: Option<f64>,
}

impl LossSpec {
    fn fraction(&self, length_m: f64, what: &str) -> Result<f64> {
        match (self.percent, self.db_per_cm) {
            (Some(p), None) => Ok(p / 100.0),
            (None, Some(a)) => Ok(loss_from_db_per_cm(a, length_m)),
            _ => bail!("{what}: specify exactly one of percent or db_per_cm"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DopoSection {
    pub output_coupler_transmittance: f64,
    pub loss: LossSpec,
    pub round_trip_length_mm: f64,
    pub pump_normalized: f64,
    /// Poled/crystal interaction length; required for the waveguide family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interaction_length_mm: Option<f64>,
    /// Expert knob: bypass the bare-cavity calibration of the single-pass
    /// gain constant. With an oversized constant the DOPO loop can sit above
    /// threshold, which the stability commands reject.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_constant_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    /// Controller reflectivities; commands iterate over the list.
    pub reflectivity: Vec<f64>,
    #[serde(default)]
    pub delta_length_mm: f64,
    pub segment1: SegmentSection,
    pub segment2: SegmentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub loss: LossSpec,
    pub length_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BpfSection {
    pub cutoff_ghz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSection {
    /// Catalog path, resolved relative to the config file directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_file: Option<PathBuf>,
    /// `"vacuum"`, `"constant:<n>"`, or a catalog model name.
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub spectrum_min_hz: f64,
    pub spectrum_max_hz: f64,
    pub spectrum_points: usize,
    pub bode_max_hz: f64,
    pub bode_points: usize,
    pub gainspec_max_thz: f64,
    pub gainspec_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            spectrum_min_hz: 1e4,
            spectrum_max_hz: 1e10,
            spectrum_points: 600,
            bode_max_hz: 1.9e9,
            bode_points: 1200,
            gainspec_max_thz: 3.5,
            gainspec_points: 2500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub scan_halfwidth_mm: f64,
    pub coarse_step_mm: f64,
    pub bisect_tol_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilitySection {
    pub r_f: Vec<f64>,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub points_per_fsr: usize,
    pub budget: usize,
    pub margin_disk: f64,
    pub gc_tol: f64,
    pub hard_cap_thz: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        let d = StabilitySettings::default();
        Self {
            points_per_fsr: d.points_per_fsr,
            budget: d.budget,
            margin_disk: d.margin_disk,
            gc_tol: d.gc_tol,
            hard_cap_thz: d.hard_cap / (std::f64::consts::TAU * 1e12),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub gains: Vec<f64>,
    pub delta_gain_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Worker threads for sweeps; 0 keeps the rayon default.
    pub workers: usize,
}

/// A validated configuration bound to its source bytes (for provenance) and
/// resolved dispersion model.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub raw: RunConfig,
    pub sha256: String,
    pub model: DispersionModel,
    pub model_id: String,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("config parse error")?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub fn emit(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feedback.reflectivity.is_empty() {
            bail!("feedback.reflectivity must list at least one value");
        }
        for &r in &self.feedback.reflectivity {
            if !(0.0..1.0).contains(&r) {
                bail!("reflectivity {r} outside [0, 1)");
            }
        }
        if !(0.0..1.0).contains(&self.dopo.pump_normalized) {
            bail!(
                "pump_normalized {} outside [0, 1)",
                self.dopo.pump_normalized
            );
        }
        if self.device.family == Family::Waveguide && self.dopo.interaction_length_mm.is_none() {
            bail!("waveguide family requires dopo.interaction_length_mm");
        }
        if let Some(f) = &self.feasibility {
            if f.r_f.is_empty() || f.xi.is_empty() {
                bail!("feasibility grids must be non-empty");
            }
        }
        Ok(())
    }

    pub fn stability_settings(&self) -> StabilitySettings {
        StabilitySettings {
            points_per_fsr: self.stability.points_per_fsr,
            budget: self.stability.budget,
            margin_disk: self.stability.margin_disk,
            gc_tol: self.stability.gc_tol,
            hard_cap: self.stability.hard_cap_thz * std::f64::consts::TAU * 1e12,
            ..StabilitySettings::default()
        }
    }

    pub fn search(&self) -> cfs_core::feasibility::ScanSearch {
        match self.search {
            Some(s) => cfs_core::feasibility::ScanSearch {
                scan_halfwidth: s.scan_halfwidth_mm * 1e-3,
                coarse_step: s.coarse_step_mm * 1e-3,
                bisect_tol: s.bisect_tol_mm * 1e-3,
            },
            None => match self.device.family {
                Family::FreeSpace => cfs_core::feasibility::ScanSearch::free_space(),
                Family::Waveguide => cfs_core::feasibility::ScanSearch::waveguide(),
            },
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let raw = RunConfig::parse(&text)?;
    let sha256 = {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(text.as_bytes()))
    };
    let (model, model_id) = resolve_model(&raw, path)?;
    Ok(LoadedConfig {
        raw,
        sha256,
        model,
        model_id,
    })
}

fn resolve_model(cfg: &RunConfig, config_path: &Path) -> Result<(DispersionModel, String)> {
    let name = cfg.dispersion.model.as_str();
    if name == "vacuum" {
        return Ok((DispersionModel::ConstantIndex(1.0), "vacuum".into()));
    }
    if let Some(n) = name.strip_prefix("constant:") {
        let n: f64 = n.parse().context("constant:<n> index")?;
        return Ok((DispersionModel::ConstantIndex(n), format!("constant({n})")));
    }
    let file = cfg
        .dispersion
        .data_file
        .as_ref()
        .context("dispersion.data_file required for catalog models")?;
    let resolved = if file.is_absolute() {
        file.clone()
    } else {
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(file)
    };
    let catalog = DispersionCatalog::load(&resolved)?;
    let model = catalog.get(name)?;
    Ok((model, name.to_string()))
}

impl LoadedConfig {
    pub fn omega_c(&self) -> f64 {
        std::f64::consts::TAU * SPEED_OF_LIGHT / (self.raw.device.carrier_wavelength_nm * 1e-9)
    }

    fn segments(&self) -> Result<(PropagationSegment, PropagationSegment)> {
        let seg_model = match self.raw.device.family {
            Family::FreeSpace => DispersionModel::ConstantIndex(1.0),
            Family::Waveguide => self.model.clone(),
        };
        let s1 = &self.raw.feedback.segment1;
        let s2 = &self.raw.feedback.segment2;
        Ok((
            PropagationSegment {
                loss: s1.loss.fraction(s1.length_mm * 1e-3, "segment1")?,
                length: s1.length_mm * 1e-3,
                dispersion: seg_model.clone(),
            },
            PropagationSegment {
                loss: s2.loss.fraction(s2.length_mm * 1e-3, "segment2")?,
                length: s2.length_mm * 1e-3,
                dispersion: seg_model,
            },
        ))
    }

    fn dopo_loss(&self) -> Result<f64> {
        self.raw
            .dopo
            .loss
            .fraction(self.raw.dopo.round_trip_length_mm * 1e-3, "dopo.loss")
    }

    /// Spectrum-model configuration: Langevin plant.
    pub fn langevin_config(&self, r_f: f64) -> Result<CfsConfig> {
        let (seg1, seg2) = self.segments()?;
        let cfg = CfsConfig {
            plant: PlantModel::Langevin(LangevinDopoParams {
                t_o: self.raw.dopo.output_coupler_transmittance,
                l_o: self.dopo_loss()?,
                l_len: self.raw.dopo.round_trip_length_mm * 1e-3,
                xi: self.raw.dopo.pump_normalized,
            }),
            controller: ControllerBs { r_f },
            seg1,
            seg2,
            bpf: self.bpf(),
            delta_l_f: self.raw.feedback.delta_length_mm * 1e-3,
            omega_c: self.omega_c(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stability-model configuration: cavity plant with calibrated gain.
    pub fn cavity_config(&self, r_f: f64) -> Result<CfsConfig> {
        let (seg1, seg2) = self.segments()?;
        let plant_model = match self.raw.device.family {
            Family::FreeSpace => DispersionModel::ConstantIndex(1.0),
            Family::Waveguide => self.model.clone(),
        };
        let l_c = self
            .raw
            .dopo
            .interaction_length_mm
            .unwrap_or(self.raw.dopo.round_trip_length_mm)
            * 1e-3;
        let mut plant = CavityDopoParams::calibrated(
            1.0 - self.raw.dopo.output_coupler_transmittance,
            self.dopo_loss()?,
            self.raw.dopo.round_trip_length_mm * 1e-3,
            l_c,
            self.raw.dopo.pump_normalized,
            plant_model,
            self.omega_c(),
        )?;
        if let Some(c) = self.raw.dopo.gain_constant_override {
            plant.single_pass.c_const = c;
        }
        let cfg = CfsConfig {
            plant: PlantModel::Cavity(plant),
            controller: ControllerBs { r_f },
            seg1,
            seg2,
            bpf: self.bpf(),
            delta_l_f: self.raw.feedback.delta_length_mm * 1e-3,
            omega_c: self.omega_c(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn bpf(&self) -> Option<ButterworthBpf> {
        self.raw.bpf.as_ref().map(|b| ButterworthBpf {
            omega_hwhm: std::f64::consts::TAU * b.cutoff_ghz * 1e9,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_emit_round_trip() {
        let text = r#"
[device]
family = "free_space"
carrier_wavelength_nm = 1550.0

[dopo]
output_coupler_transmittance = 0.1
loss = { percent = 0.5 }
round_trip_length_mm = 500.0
pump_normalized = 0.9

[feedback]
reflectivity = [0.0, 0.5]
delta_length_mm = 0.0

[feedback.segment1]
loss = { percent = 1.01 }
length_mm = 250.0

[feedback.segment2]
loss = { percent = 1.01 }
length_mm = 250.0

[bpf]
cutoff_ghz = 100.0

[dispersion]
model = "vacuum"
"#;
        let cfg = RunConfig::parse(text).unwrap();
        let emitted = cfg.emit().unwrap();
        let back = RunConfig::parse(&emitted).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"
[device]
family = "free_space"
carrier_wavelength_nm = 1550.0
made_up_key = 7
"#;
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn loss_spec_exclusive() {
        let both = LossSpec {
            percent: Some(1.0),
            db_per_cm: Some(0.03),
        };
        assert!(both.fraction(0.01, "x").is_err());
        let db = LossSpec {
            percent: None,
            db_per_cm: Some(0.03),
        };
        let f = db.fraction(11e-3, "x").unwrap();
        assert!((f - 0.00757).abs() < 5e-5);
    }
}
