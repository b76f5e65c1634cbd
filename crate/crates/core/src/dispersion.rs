//! Refractive-index models and phase-matching quantities.
//!
//! Models are loaded from a versioned TOML data file (see `data/dispersion.toml`
//! in the repository root) so the coefficient sets stay citable and swappable.
//! Three kinds are supported: Sellmeier coefficient sets, tabulated effective
//! indices, and a confinement-weighted mix of two other models; a constant
//! index is available for free-space paths.

use num_complex::Complex64;
use serde::Deserialize;
use std::sync::Arc;

use crate::error::{CfsError, Result};
use crate::SPEED_OF_LIGHT;

/// Refractive-index-vs-frequency model with a wavelength validity range.
#[derive(Debug, Clone)]
pub enum DispersionModel {
    ConstantIndex(f64),
    Sellmeier(Arc<SellmeierSet>),
    Tabulated(Arc<TabulatedIndex>),
    /// Linear two-material mix with a confinement factor `w`:
    /// `n = w * n_a + (1 - w) * n_b`.
    Weighted {
        a: Arc<DispersionModel>,
        b: Arc<DispersionModel>,
        weight: f64,
        name: String,
    },
}

/// `n^2 = 1 + sum_i b[i] lam^2 / (lam^2 - c_um2[i])`, wavelength in um.
#[derive(Debug, Clone)]
pub struct SellmeierSet {
    pub name: String,
    pub b: Vec<f64>,
    pub c_um2: Vec<f64>,
    pub valid_um: (f64, f64),
    pub citation: String,
}

/// Sorted `(wavelength_um, n)` knots with linear interpolation.
#[derive(Debug, Clone)]
pub struct TabulatedIndex {
    pub name: String,
    pub lambda_um: Vec<f64>,
    pub n: Vec<f64>,
    pub citation: String,
}

impl DispersionModel {
    pub fn id(&self) -> String {
        match self {
            DispersionModel::ConstantIndex(n) => format!("constant({n})"),
            DispersionModel::Sellmeier(s) => s.name.clone(),
            DispersionModel::Tabulated(t) => t.name.clone(),
            DispersionModel::Weighted { name, .. } => name.clone(),
        }
    }

    fn valid_um(&self) -> (f64, f64) {
        match self {
            DispersionModel::ConstantIndex(_) => (0.0, f64::INFINITY),
            DispersionModel::Sellmeier(s) => s.valid_um,
            DispersionModel::Tabulated(t) => (
                *t.lambda_um.first().unwrap_or(&0.0),
                *t.lambda_um.last().unwrap_or(&0.0),
            ),
            DispersionModel::Weighted { a, b, .. } => {
                let (a0, a1) = a.valid_um();
                let (b0, b1) = b.valid_um();
                (a0.max(b0), a1.min(b1))
            }
        }
    }

    fn index_at_um(&self, lam_um: f64) -> Result<f64> {
        let (lo, hi) = self.valid_um();
        if !(lam_um >= lo && lam_um <= hi) {
            return Err(CfsError::DispersionRangeExceeded {
                model: self.id(),
                wavelength_um: lam_um,
                min_um: lo,
                max_um: hi,
            });
        }
        match self {
            DispersionModel::ConstantIndex(n) => Ok(*n),
            DispersionModel::Sellmeier(s) => {
                let l2 = lam_um * lam_um;
                let mut n2 = 1.0;
                for (b, c) in s.b.iter().zip(&s.c_um2) {
                    n2 += b * l2 / (l2 - c);
                }
                if n2 <= 0.0 {
                    return Err(CfsError::DispersionData(format!(
                        "{}: n^2 = {n2} <= 0 at {lam_um} um",
                        s.name
                    )));
                }
                Ok(n2.sqrt())
            }
            DispersionModel::Tabulated(t) => {
                let idx = t
                    .lambda_um
                    .partition_point(|&x| x < lam_um)
                    .clamp(1, t.lambda_um.len() - 1);
                let (x0, x1) = (t.lambda_um[idx - 1], t.lambda_um[idx]);
                let (y0, y1) = (t.n[idx - 1], t.n[idx]);
                Ok(y0 + (y1 - y0) * (lam_um - x0) / (x1 - x0))
            }
            DispersionModel::Weighted { a, b, weight, .. } => Ok(weight * a.index_at_um(lam_um)?
                + (1.0 - weight) * b.index_at_um(lam_um)?),
        }
    }
}

/// Refractive index at an absolute angular frequency, rad/s.
pub fn refractive_index(m: &DispersionModel, omega_abs: f64) -> Result<f64> {
    if !(omega_abs > 0.0) {
        return Err(CfsError::Domain(format!(
            "absolute frequency must be positive, got {omega_abs}"
        )));
    }
    let lam_um = std::f64::consts::TAU * SPEED_OF_LIGHT / omega_abs * 1e6;
    m.index_at_um(lam_um)
}

/// Wave-vector mismatch after the carrier-level cancellation:
/// `dk = [2 w_c n(w_c) - (w_c+w) n(w_c+w) - (w_c-w) n(w_c-w)] / c` (1/m).
///
/// Even in `w`, and exactly zero at `w = 0`.
pub fn wavevector_mismatch(m: &DispersionModel, omega_c: f64, omega: f64) -> Result<f64> {
    let n_c = refractive_index(m, omega_c)?;
    let n_p = refractive_index(m, omega_c + omega)?;
    let n_m = refractive_index(m, omega_c - omega)?;
    Ok((2.0 * omega_c * n_c - (omega_c + omega) * n_p - (omega_c - omega) * n_m) / SPEED_OF_LIGHT)
}

/// Single-pass gain constant calibrated from the bare cavity:
/// `C = ln(1 / sqrt(R_o (1 - L_o)))`.
pub fn single_pass_gain_constant(r_o: f64, l_o: f64) -> Result<f64> {
    let x = r_o * (1.0 - l_o);
    if !(x > 0.0 && x < 1.0) {
        return Err(CfsError::Domain(format!(
            "R_o (1 - L_o) = {x} must lie in (0, 1)"
        )));
    }
    Ok(-0.5 * x.ln())
}

/// Pump coupling `kappa_w = [(w_c+w)/w_c] [n(w_c)/n(w_c+w)] C xi` (real by
/// the pump-phase convention).
pub fn coupling_kappa(
    m: &DispersionModel,
    omega_c: f64,
    omega: f64,
    c_const: f64,
    xi: f64,
) -> Result<f64> {
    let n_c = refractive_index(m, omega_c)?;
    let n_p = refractive_index(m, omega_c + omega)?;
    Ok((omega_c + omega) / omega_c * n_c / n_p * c_const * xi)
}

/// Parametric gain `g = sqrt(kappa_+ kappa_- - (dk l_c / 2)^2)`, principal
/// branch; purely imaginary when the radicand is negative.
pub fn parametric_g(kappa_plus: f64, kappa_minus: f64, delta_k: f64, l_c: f64) -> Complex64 {
    let x = delta_k * l_c / 2.0;
    let radicand = kappa_plus * kappa_minus - x * x;
    Complex64::new(radicand, 0.0).sqrt()
}

// ---------------------------------------------------------------------------
// data file

#[derive(Debug, Deserialize)]
struct DataFile {
    schema: u32,
    #[serde(default, rename = "model")]
    models: Vec<ModelEntry>,
}

#[derive(Debug, Deserialize)]
struct ModelEntry {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    b: Vec<f64>,
    #[serde(default)]
    c_um2: Vec<f64>,
    #[serde(default)]
    valid_um: Vec<f64>,
    #[serde(default)]
    lambda_um: Vec<f64>,
    #[serde(default)]
    n: Vec<f64>,
    #[serde(default)]
    components: Vec<String>,
    #[serde(default)]
    weight: Option<f64>,
    #[serde(default)]
    citation: String,
}

/// A parsed dispersion data file: a named catalog of models.
#[derive(Debug, Clone)]
pub struct DispersionCatalog {
    pub schema: u32,
    models: Vec<(String, DispersionModel)>,
}

impl DispersionCatalog {
    pub fn parse(text: &str) -> Result<Self> {
        let file: DataFile = toml::from_str(text)
            .map_err(|e| CfsError::DispersionData(format!("parse error: {e}")))?;
        if file.schema != 1 {
            return Err(CfsError::DispersionData(format!(
                "unsupported schema version {}",
                file.schema
            )));
        }
        let mut models: Vec<(String, DispersionModel)> = Vec::new();
        for entry in &file.models {
            let model = match entry.kind.as_str() {
                "sellmeier" => {
                    if entry.b.len() != entry.c_um2.len() || entry.b.is_empty() {
                        return Err(CfsError::DispersionData(format!(
                            "{}: b and c_um2 must be non-empty and equal length",
                            entry.name
                        )));
                    }
                    if entry.valid_um.len() != 2 {
                        return Err(CfsError::DispersionData(format!(
                            "{}: valid_um must be [min, max]",
                            entry.name
                        )));
                    }
                    DispersionModel::Sellmeier(Arc::new(SellmeierSet {
                        name: entry.name.clone(),
                        b: entry.b.clone(),
                        c_um2: entry.c_um2.clone(),
                        valid_um: (entry.valid_um[0], entry.valid_um[1]),
                        citation: entry.citation.clone(),
                    }))
                }
                "tabulated" => {
                    if entry.lambda_um.len() != entry.n.len() || entry.lambda_um.len() < 2 {
                        return Err(CfsError::DispersionData(format!(
                            "{}: lambda_um and n must be equal length >= 2",
                            entry.name
                        )));
                    }
                    if !entry.lambda_um.windows(2).all(|p| p[1] > p[0]) {
                        return Err(CfsError::DispersionData(format!(
                            "{}: lambda_um must be strictly increasing",
                            entry.name
                        )));
                    }
                    DispersionModel::Tabulated(Arc::new(TabulatedIndex {
                        name: entry.name.clone(),
                        lambda_um: entry.lambda_um.clone(),
                        n: entry.n.clone(),
                        citation: entry.citation.clone(),
                    }))
                }
                "weighted" => {
                    if entry.components.len() != 2 {
                        return Err(CfsError::DispersionData(format!(
                            "{}: weighted model needs exactly two components",
                            entry.name
                        )));
                    }
                    let w = entry.weight.ok_or_else(|| {
                        CfsError::DispersionData(format!("{}: missing weight", entry.name))
                    })?;
                    if !(0.0..=1.0).contains(&w) {
                        return Err(CfsError::DispersionData(format!(
                            "{}: weight {w} outside [0, 1]",
                            entry.name
                        )));
                    }
                    let find = |name: &str| -> Result<DispersionModel> {
                        models
                            .iter()
                            .find(|(n, _)| n == name)
                            .map(|(_, m)| m.clone())
                            .ok_or_else(|| {
                                CfsError::DispersionData(format!(
                                    "{}: component {name} not defined earlier in the file",
                                    entry.name
                                ))
                            })
                    };
                    DispersionModel::Weighted {
                        a: Arc::new(find(&entry.components[0])?),
                        b: Arc::new(find(&entry.components[1])?),
                        weight: w,
                        name: entry.name.clone(),
                    }
                }
                other => {
                    return Err(CfsError::DispersionData(format!(
                        "{}: unknown model type {other}",
                        entry.name
                    )))
                }
            };
            models.push((entry.name.clone(), model));
        }
        Ok(Self {
            schema: file.schema,
            models,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CfsError::DispersionData(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, name: &str) -> Result<DispersionModel> {
        self.models
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| CfsError::DispersionData(format!("no model named {name}")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.iter().map(|(n, _)| n.as_str())
    }
}
