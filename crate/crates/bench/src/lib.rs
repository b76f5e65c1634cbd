//! Shared fixtures for the benchmark targets.

use cfs_core::dispersion::DispersionModel;
use cfs_core::network::{CfsConfig, ControllerBs, PlantModel, PropagationSegment};
use cfs_core::plants::{ButterworthBpf, CavityDopoParams};
use cfs_core::SPEED_OF_LIGHT;

pub const OMEGA_C: f64 = std::f64::consts::TAU * SPEED_OF_LIGHT / 1550e-9;

/// Free-space stability configuration (500 mm cavity, 100 GHz BPF).
pub fn freespace(r_f: f64, xi: f64, delta_l: f64) -> CfsConfig {
    let seg = |l: f64| PropagationSegment {
        loss: 0.0101,
        length: l,
        dispersion: DispersionModel::ConstantIndex(1.0),
    };
    CfsConfig {
        plant: PlantModel::Cavity(
            CavityDopoParams::calibrated(
                0.9,
                0.005,
                0.5,
                0.01,
                xi,
                DispersionModel::ConstantIndex(1.0),
                OMEGA_C,
            )
            .unwrap(),
        ),
        controller: ControllerBs { r_f },
        seg1: seg(0.25),
        seg2: seg(0.25),
        bpf: Some(ButterworthBpf {
            omega_hwhm: std::f64::consts::TAU * 100e9,
        }),
        delta_l_f: delta_l,
        omega_c: OMEGA_C,
    }
}

/// Waveguide stability configuration with bulk MgO:LN dispersion.
pub fn waveguide(r_f: f64, xi: f64, delta_l: f64) -> CfsConfig {
    let catalog = cfs_core::dispersion::DispersionCatalog::load(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../data/dispersion.toml")
            .as_path(),
    )
    .unwrap();
    let model = catalog.get("mgoln_e_zelmon1997").unwrap();
    let loss = cfs_core::loss_from_db_per_cm(0.03, 5.5e-3);
    let seg = |l: f64| PropagationSegment {
        loss,
        length: l,
        dispersion: model.clone(),
    };
    CfsConfig {
        plant: PlantModel::Cavity(
            CavityDopoParams::calibrated(
                0.7,
                cfs_core::loss_from_db_per_cm(0.03, 11e-3),
                11e-3,
                5e-3,
                xi,
                model.clone(),
                OMEGA_C,
            )
            .unwrap(),
        ),
        controller: ControllerBs { r_f },
        seg1: seg(5.5e-3),
        seg2: seg(5.5e-3),
        bpf: None,
        delta_l_f: delta_l,
        omega_c: OMEGA_C,
    }
}
