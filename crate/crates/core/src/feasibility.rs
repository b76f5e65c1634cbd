//! Allowable-length-mismatch computation per operating point and parallel
//! sweep assembly into feasibility maps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CfsError, Result};
use crate::network::{CfsConfig, PlantModel};
use crate::stability::{nyquist_verdict_with, StabilitySettings};

/// Mismatch-scan options.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanSearch {
    /// Half-width of the scanned delta-l window, m.
    pub scan_halfwidth: f64,
    /// Coarse probe spacing, m.
    pub coarse_step: f64,
    /// Boundary bisection tolerance, m.
    pub bisect_tol: f64,
}

impl ScanSearch {
    /// Free-space defaults: 5 mm window, 50 um coarse step, 1 um tolerance.
    pub fn free_space() -> Self {
        Self {
            scan_halfwidth: 5e-3,
            coarse_step: 50e-6,
            bisect_tol: 1e-6,
        }
    }

    /// Waveguide defaults: 500 um window, 5 um coarse step, 0.1 um tolerance.
    pub fn waveguide() -> Self {
        Self {
            scan_halfwidth: 500e-6,
            coarse_step: 5e-6,
            bisect_tol: 0.1e-6,
        }
    }
}

/// Classification of one (R_f, xi) operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellStatus {
    /// Stable at every probed mismatch in the scan window.
    UnconditionallyStable,
    /// Unstable already at delta_l = 0.
    UnconditionallyUnstable,
    /// Stable on a finite mismatch interval containing zero.
    Conditional,
    /// The verdict machinery failed; see flags.
    Error,
}

/// One feasibility-map cell.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityCell {
    pub r_f: f64,
    pub xi: f64,
    pub status: CellStatus,
    /// Most negative stable mismatch, m.
    pub delta_minus: Option<f64>,
    /// Most positive stable mismatch, m.
    pub delta_plus: Option<f64>,
    /// Allowable mismatch `(delta_plus - delta_minus) / 2`, m. For an
    /// unconditionally stable cell this is the scan half-width and is
    /// flagged `window-limited`.
    pub allowable: Option<f64>,
    pub dispersion_model_id: String,
    /// Diagnostics: window-limited certification, marginal verdicts touched,
    /// disjoint stable islands seen on the coarse scan, errors.
    pub flags: Vec<String>,
}

/// Device family tag carried by the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeviceFamily {
    FreeSpace,
    Waveguide,
}

/// Grid of feasibility cells with provenance.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityMap {
    pub r_f_grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    pub family: DeviceFamily,
    pub cells: Vec<FeasibilityCell>,
    pub search: ScanSearch,
    pub settings: StabilitySettings,
}

fn with_operating_point(base: &CfsConfig, r_f: f64, xi: f64, delta_l: f64) -> CfsConfig {
    let mut cfg = base.clone();
    cfg.controller.r_f = r_f;
    cfg.delta_l_f = delta_l;
    match &mut cfg.plant {
        PlantModel::Langevin(p) => p.xi = xi,
        PlantModel::Cavity(p) => p.single_pass.xi = xi,
    }
    cfg
}

fn model_id(cfg: &CfsConfig) -> String {
    match &cfg.plant {
        PlantModel::Langevin(_) => "langevin".into(),
        PlantModel::Cavity(p) => p.single_pass.dispersion.id(),
    }
}

/// Classifies one operating point by scanning delta_l over the window and
/// bisecting the boundaries of the maximal stable interval containing zero.
pub fn allowable_mismatch(
    base: &CfsConfig,
    r_f: f64,
    xi: f64,
    search: &ScanSearch,
    settings: &StabilitySettings,
) -> Result<FeasibilityCell> {
    let mut flags = Vec::new();
    let mut saw_marginal = false;
    let model = model_id(base);
    let probe = |delta: f64| -> Result<(bool, bool)> {
        let cfg = with_operating_point(base, r_f, xi, delta);
        let v = nyquist_verdict_with(&cfg, settings)?;
        Ok((v.stable && !v.marginal, v.marginal))
    };
    let mut stable_at = |delta: f64| -> Result<bool> {
        let (stable, marginal) = probe(delta)?;
        saw_marginal |= marginal;
        Ok(stable)
    };

    if !stable_at(0.0)? {
        if saw_marginal {
            flags.push("marginal-verdict".into());
        }
        return Ok(FeasibilityCell {
            r_f,
            xi,
            status: CellStatus::UnconditionallyUnstable,
            delta_minus: None,
            delta_plus: None,
            allowable: None,
            dispersion_model_id: model,
            flags,
        });
    }

    // coarse scan over the full window, including the endpoints
    let n = (search.scan_halfwidth / search.coarse_step).ceil() as i64;
    let step = search.scan_halfwidth / n as f64;
    let mut up_boundary: Option<(f64, f64)> = None; // (last stable, first unstable)
    let mut islands = false;
    let mut k = 1;
    while k <= n {
        let d = k as f64 * step;
        let s = stable_at(d)?;
        if up_boundary.is_none() && !s {
            up_boundary = Some(((k - 1) as f64 * step, d));
        } else if up_boundary.is_some() && s {
            islands = true;
        }
        k += 1;
    }
    let mut down_boundary: Option<(f64, f64)> = None;
    k = 1;
    while k <= n {
        let d = -(k as f64) * step;
        let s = stable_at(d)?;
        if down_boundary.is_none() && !s {
            down_boundary = Some((-((k - 1) as f64) * step, d));
        } else if down_boundary.is_some() && s {
            islands = true;
        }
        k += 1;
    }

    let mut bisect = |mut lo_stable: f64, mut hi_unstable: f64| -> Result<f64> {
        let max_iter = 128;
        for _ in 0..max_iter {
            if (hi_unstable - lo_stable).abs() <= search.bisect_tol {
                return Ok(lo_stable);
            }
            let mid = 0.5 * (lo_stable + hi_unstable);
            if stable_at(mid)? {
                lo_stable = mid;
            } else {
                hi_unstable = mid;
            }
        }
        Err(CfsError::BudgetExceeded { max_iter })
    };

    // the bisection tracks (stable, unstable) endpoints on either side of
    // zero; the gap test uses the absolute difference, so both orientations
    // converge to the last stable mismatch
    let dp = match up_boundary {
        Some((lo, hi)) => Some(bisect(lo, hi)?),
        None => None,
    };
    let dm = match down_boundary {
        Some((lo, hi)) => Some(bisect(lo, hi)?),
        None => None,
    };
    let boundaries = (dm, dp);
    if islands {
        flags.push("stable-islands-outside-interval".into());
    }
    if saw_marginal {
        flags.push("marginal-verdict".into());
    }

    match boundaries {
        (None, None) => {
            flags.push("window-limited".into());
            Ok(FeasibilityCell {
                r_f,
                xi,
                status: CellStatus::UnconditionallyStable,
                delta_minus: Some(-search.scan_halfwidth),
                delta_plus: Some(search.scan_halfwidth),
                allowable: Some(search.scan_halfwidth),
                dispersion_model_id: model,
                flags,
            })
        }
        (down, up) => {
            let delta_plus = up.unwrap_or_else(|| {
                flags.push("window-limited-plus".into());
                search.scan_halfwidth
            });
            let delta_minus = down.unwrap_or_else(|| {
                flags.push("window-limited-minus".into());
                -search.scan_halfwidth
            });
            Ok(FeasibilityCell {
                r_f,
                xi,
                status: CellStatus::Conditional,
                delta_minus: Some(delta_minus),
                delta_plus: Some(delta_plus),
                allowable: Some(0.5 * (delta_plus - delta_minus)),
                dispersion_model_id: model,
                flags,
            })
        }
    }
}

/// Sweeps the (R_f, xi) grid in parallel. Cells are independent work items;
/// the output ordering is row-major over `xi_grid` x `r_f_grid` and is
/// independent of the execution schedule. Individual cell errors are
/// recorded in-cell and the sweep continues.
pub fn sweep_map(
    base: &CfsConfig,
    r_f_grid: &[f64],
    xi_grid: &[f64],
    family: DeviceFamily,
    search: &ScanSearch,
    settings: &StabilitySettings,
) -> Result<FeasibilityMap> {
    if r_f_grid.is_empty() || xi_grid.is_empty() {
        return Err(CfsError::Domain("feasibility grids must be non-empty".into()));
    }
    let points: Vec<(f64, f64)> = xi_grid
        .iter()
        .flat_map(|&xi| r_f_grid.iter().map(move |&r| (r, xi)))
        .collect();
    let cells: Vec<FeasibilityCell> = points
        .par_iter()
        .map(|&(r_f, xi)| {
            allowable_mismatch(base, r_f, xi, search, settings).unwrap_or_else(|e| {
                FeasibilityCell {
                    r_f,
                    xi,
                    status: CellStatus::Error,
                    delta_minus: None,
                    delta_plus: None,
                    allowable: None,
                    dispersion_model_id: model_id(base),
                    flags: vec![format!("error: {e}")],
                }
            })
        })
        .collect();
    Ok(FeasibilityMap {
        r_f_grid: r_f_grid.to_vec(),
        xi_grid: xi_grid.to_vec(),
        family,
        cells,
        search: *search,
        settings: *settings,
    })
}
