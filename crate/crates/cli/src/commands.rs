//! The six analysis commands.

use std::path::Path;

use anyhow::{Context, Result};

use cfs_core::feasibility::{sweep_map, CellStatus, DeviceFamily};
use cfs_core::network::vacuum_output_spectrum;
use cfs_core::plants::{cavity_gain_svd, single_pass_gain_svd, Quadrature};
use cfs_core::stability::{bode_trace, nyquist_verdict_with, sensitivity_bound};
use cfs_core::PlantModel;

use crate::config::{Family, LoadedConfig};
use crate::output::{num, write_summary, write_table, Format, Provenance, Table};

fn rf_tag(r_f: f64) -> String {
    format!("{r_f:.4}").replace('.', "p")
}

fn log_grid(min_hz: f64, max_hz: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (min_hz.log10(), max_hz.log10());
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1).max(1) as f64;
            std::f64::consts::TAU * 10f64.powf(lo + t * (hi - lo))
        })
        .collect()
}

fn lin_grid(max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| max * i as f64 / (points - 1).max(1) as f64)
        .collect()
}

/// `spectrum`: vacuum-input output spectra, one table per reflectivity.
pub fn run_spectrum(lc: &LoadedConfig, out: &Path, format: Format) -> Result<()> {
    if lc.raw.device.family == Family::Waveguide {
        anyhow::bail!(cfs_core::CfsError::UnsupportedConfiguration(
            "output spectra are defined for the free-space (Langevin) model only".into()
        ));
    }
    let prov = Provenance::new(&lc.sha256, &lc.model_id);
    let grid = log_grid(
        lc.raw.grid.spectrum_min_hz,
        lc.raw.grid.spectrum_max_hz,
        lc.raw.grid.spectrum_points,
    );
    for &r_f in &lc.raw.feedback.reflectivity {
        let cfg = lc.langevin_config(r_f)?;
        let mut table = Table::new(vec!["frequency_hz", "s_x_db", "s_p_db"]);
        for &w in &grid {
            let sx = vacuum_output_spectrum(&cfg, w, Quadrature::X)?;
            let sp = vacuum_output_spectrum(&cfg, w, Quadrature::P)?;
            table.push(vec![
                num(w / std::f64::consts::TAU),
                num(10.0 * sx.log10()),
                num(10.0 * sp.log10()),
            ]);
        }
        write_table(out, &format!("spectrum_rf{}", rf_tag(r_f)), format, &prov, &table)?;
    }
    Ok(())
}

/// `bode`: loop-gain magnitude and phase components per reflectivity.
pub fn run_bode(lc: &LoadedConfig, out: &Path, format: Format) -> Result<()> {
    let prov = Provenance::new(&lc.sha256, &lc.model_id);
    let grid = lin_grid(
        std::f64::consts::TAU * lc.raw.grid.bode_max_hz,
        lc.raw.grid.bode_points,
    );
    for &r_f in &lc.raw.feedback.reflectivity {
        let cfg = lc.cavity_config(r_f)?;
        let pts = bode_trace(&cfg, &grid)?;
        let mut table = Table::new(vec![
            "frequency_hz",
            "magnitude_db",
            "phase_deg",
            "phase_loop_deg",
            "phase_plant_deg",
        ]);
        for p in pts {
            table.push(vec![
                num(p.omega / std::f64::consts::TAU),
                num(p.magnitude_db),
                num(p.phase_deg),
                num(p.phase_loop_deg),
                num(p.phase_plant_deg),
            ]);
        }
        write_table(out, &format!("bode_rf{}", rf_tag(r_f)), format, &prov, &table)?;
    }
    Ok(())
}

/// `nyquist`: verdict summaries plus a visualization trace per reflectivity.
pub fn run_nyquist(lc: &LoadedConfig, out: &Path, format: Format) -> Result<()> {
    let settings = lc.raw.stability_settings();
    let mut verdicts = Vec::new();
    for &r_f in &lc.raw.feedback.reflectivity {
        let cfg = lc.cavity_config(r_f)?;
        let v = nyquist_verdict_with(&cfg, &settings)?;
        let mut prov = Provenance::new(&lc.sha256, &lc.model_id);
        prov.truncation_omega = Some(v.truncation_omega);

        // decimated locus for plotting: -Lambda_x for the symmetric path,
        // Lambda_D for the dispersive path
        let grid = lin_grid(v.truncation_omega.max(1.0), lc.raw.grid.bode_points);
        let loci = cfs_core::stability::nyquist_loci(&cfg, &grid)?;
        let locus = &loci[0];
        let mut table = Table::new(vec!["frequency_hz", "re", "im"]);
        for &(w, z) in locus.trace.samples() {
            table.push(vec![num(w / std::f64::consts::TAU), num(z.re), num(z.im)]);
        }
        write_table(out, &format!("nyquist_rf{}", rf_tag(r_f)), format, &prov, &table)?;
        write_summary(out, &format!("nyquist_rf{}_verdict", rf_tag(r_f)), &prov, &v)?;
        verdicts.push((r_f, v.stable, v.winding));
    }
    for (r_f, stable, winding) in verdicts {
        println!(
            "nyquist R_f={r_f}: {} (winding {winding})",
            if stable { "stable" } else { "UNSTABLE" }
        );
    }
    Ok(())
}

/// `feasibility`: allowable-length-mismatch map over the configured grid.
pub fn run_feasibility(lc: &LoadedConfig, out: &Path, format: Format) -> Result<()> {
    let feas = lc
        .raw
        .feasibility
        .as_ref()
        .context("config is missing a [feasibility] section")?;
    let family = match lc.raw.device.family {
        Family::FreeSpace => DeviceFamily::FreeSpace,
        Family::Waveguide => DeviceFamily::Waveguide,
    };
    let base = lc.cavity_config(lc.raw.feedback.reflectivity[0])?;
    let map = sweep_map(
        &base,
        &feas.r_f,
        &feas.xi,
        family,
        &lc.raw.search(),
        &lc.raw.stability_settings(),
    )?;
    let prov = Provenance::new(&lc.sha256, &lc.model_id);
    let mut table = Table::new(vec![
        "r_f",
        "xi",
        "status",
        "delta_minus_m",
        "delta_plus_m",
        "allowable_m",
        "flags",
    ]);
    let fmt_opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for c in &map.cells {
        table.push(vec![
            num(c.r_f),
            num(c.xi),
            format!("{:?}", c.status),
            fmt_opt(c.delta_minus),
            fmt_opt(c.delta_plus),
            fmt_opt(c.allowable),
            c.flags.join(";"),
        ]);
    }
    write_table(out, "feasibility_map", format, &prov, &table)?;
    write_summary(out, "feasibility_summary", &prov, &map)?;
    let n_err = map
        .cells
        .iter()
        .filter(|c| c.status == CellStatus::Error)
        .count();
    println!(
        "feasibility: {} cells ({} errors)",
        map.cells.len(),
        n_err
    );
    if n_err > 0 {
        anyhow::bail!("{n_err} feasibility cells failed; see the map flags");
    }
    Ok(())
}

/// `gainspec`: single-pass and DOPO gain spectra for the dispersive device.
pub fn run_gainspec(lc: &LoadedConfig, out: &Path, format: Format) -> Result<()> {
    if lc.raw.device.family != Family::Waveguide {
        anyhow::bail!(cfs_core::CfsError::UnsupportedConfiguration(
            "gain spectra require the dispersive (waveguide) device family".into()
        ));
    }
    let cfg = lc.cavity_config(lc.raw.feedback.reflectivity[0])?;
    let plant = match &cfg.plant {
        PlantModel::Cavity(p) => p,
        _ => unreachable!(),
    };
    let prov = Provenance::new(&lc.sha256, &lc.model_id);
    let grid = lin_grid(
        std::f64::consts::TAU * lc.raw.grid.gainspec_max_thz * 1e12,
        lc.raw.grid.gainspec_points,
    );
    let mut table = Table::new(vec!["frequency_hz", "single_pass_gain_db", "dopo_gain_db"]);
    for &w in &grid {
        let sp = single_pass_gain_svd(&plant.single_pass, w)?;
        let cav = cavity_gain_svd(plant, w)?;
        table.push(vec![
            num(w / std::f64::consts::TAU),
            num(20.0 * sp.log10()),
            num(20.0 * cav.log10()),
        ]);
    }
    write_table(out, "gainspec", format, &prov, &table)?;
    Ok(())
}

/// `sensitivity`: tight and loose closed-loop sensitivity bounds.
pub fn run_sensitivity(lc: &LoadedConfig, out: &Path, format: Format) -> Result<()> {
    let sens = lc
        .raw
        .sensitivity
        .as_ref()
        .context("config is missing a [sensitivity] section")?;
    let prov = Provenance::new(&lc.sha256, &lc.model_id);
    let mut table = Table::new(vec!["r_f", "gain", "tight_bound", "loose_bound"]);
    for &r_f in &lc.raw.feedback.reflectivity {
        for &g in &sens.gains {
            let (tight, loose) = sensitivity_bound(g, r_f, sens.delta_gain_rel)?;
            table.push(vec![num(r_f), num(g), num(tight), num(loose)]);
        }
    }
    write_table(out, "sensitivity", format, &prov, &table)?;
    Ok(())
}
