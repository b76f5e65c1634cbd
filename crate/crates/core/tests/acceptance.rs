//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values once its assertions hold. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cfs_core::dispersion::{DispersionCatalog, DispersionModel};
use cfs_core::feasibility::{sweep_map, CellStatus, DeviceFamily, FeasibilityMap, ScanSearch};
use cfs_core::linsys::{svd_gain, to_quadrature_basis, AcMatrix};
use cfs_core::network::{
    cfs_transfer_symmetric, general_from_config, vacuum_output_spectrum, CfsConfig, ControllerBs,
    PlantModel, PropagationSegment,
};
use cfs_core::plants::{
    cavity_flat_gain, cavity_gain_svd, ideal_feedback_gain, langevin_dopo_response,
    single_pass_gain_svd, single_pass_response, ButterworthBpf, CavityDopoParams,
    LangevinDopoParams, Quadrature,
};
use cfs_core::stability::{locus_winding, nyquist_verdict, sensitivity_bound, StabilitySettings};
use cfs_core::{loss_from_db_per_cm, AcResponse, SPEED_OF_LIGHT};

const OMEGA_C: f64 = TAU * SPEED_OF_LIGHT / 1550e-9;

// ---------------------------------------------------------------- fixtures

fn table1_langevin() -> LangevinDopoParams {
    LangevinDopoParams {
        t_o: 0.1,
        l_o: 0.005,
        l_len: 0.5,
        xi: 0.9,
    }
}

fn vac_segment(loss: f64, length: f64) -> PropagationSegment {
    PropagationSegment {
        loss,
        length,
        dispersion: DispersionModel::ConstantIndex(1.0),
    }
}

fn table1_spectrum_config(r_f: f64) -> CfsConfig {
    CfsConfig {
        plant: PlantModel::Langevin(table1_langevin()),
        controller: ControllerBs { r_f },
        seg1: vac_segment(0.0101, 0.25),
        seg2: vac_segment(0.0101, 0.25),
        bpf: None,
        delta_l_f: 0.0,
        omega_c: OMEGA_C,
    }
}

fn freespace_stability_config(r_f: f64, xi: f64, delta_l: f64) -> CfsConfig {
    let mut cfg = table1_spectrum_config(r_f);
    cfg.plant = PlantModel::Cavity(
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
    );
    cfg.bpf = Some(ButterworthBpf {
        omega_hwhm: TAU * 100e9,
    });
    cfg.delta_l_f = delta_l;
    cfg
}

fn catalog() -> &'static DispersionCatalog {
    static CAT: OnceLock<DispersionCatalog> = OnceLock::new();
    CAT.get_or_init(|| {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../data/dispersion.toml");
        DispersionCatalog::load(&path).expect("dispersion catalog")
    })
}

fn waveguide_config(model: DispersionModel, r_f: f64, xi: f64, delta_l: f64) -> CfsConfig {
    let seg_loss = loss_from_db_per_cm(0.03, 5.5e-3);
    let seg = |l: f64| PropagationSegment {
        loss: seg_loss,
        length: l,
        dispersion: model.clone(),
    };
    CfsConfig {
        plant: PlantModel::Cavity(
            CavityDopoParams::calibrated(
                0.7,
                loss_from_db_per_cm(0.03, 11e-3),
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

/// Criterion 6/7 share one waveguide sweep (two xi rows, bulk LN model).
fn waveguide_rows() -> &'static FeasibilityMap {
    static MAP: OnceLock<FeasibilityMap> = OnceLock::new();
    MAP.get_or_init(|| {
        let model = catalog().get("mgoln_e_zelmon1997").unwrap();
        let base = waveguide_config(model, 0.37, 0.9, 0.0);
        sweep_map(
            &base,
            &[0.05, 0.15, 0.37, 0.5, 0.6, 0.65, 0.8, 0.93],
            &[0.1, 0.9],
            DeviceFamily::Waveguide,
            &ScanSearch::waveguide(),
            &StabilitySettings::default(),
        )
        .unwrap()
    })
}

fn cell(map: &FeasibilityMap, r_f: f64, xi: f64) -> &cfs_core::feasibility::FeasibilityCell {
    map.cells
        .iter()
        .find(|c| (c.r_f - r_f).abs() < 1e-9 && (c.xi - xi).abs() < 1e-9)
        .expect("cell present")
}

// ---------------------------------------------------------------- criteria

#[test]
fn criterion_1_derived_rates() {
    let p = table1_langevin();
    let fsr_ghz = p.fsr_hz() / 1e9;
    let gamma_mhz = p.gamma() / TAU / 1e6;
    assert!((fsr_ghz - 0.6).abs() / 0.6 < 0.01, "FSR {fsr_ghz} GHz");
    assert!((gamma_mhz - 5.0).abs() / 5.0 < 0.01, "gamma {gamma_mhz} MHz");
    println!("criterion 1 PASS: FSR = {fsr_ghz:.4} GHz, gamma/2pi = {gamma_mhz:.4} MHz");
}

#[test]
fn criterion_2_waveguide_loss() {
    let l = loss_from_db_per_cm(0.03, 11e-3);
    assert!((l - 0.757e-2).abs() <= 0.005e-2, "L = {l}");
    println!(
        "criterion 2 PASS: 0.03 dB/cm over 11 mm -> L = {:.4}%",
        l * 100.0
    );
}

#[test]
fn criterion_3_spectrum_suite() {
    // (a) zero pump preserves vacuum everywhere
    let mut cfg0 = table1_spectrum_config(0.5);
    if let PlantModel::Langevin(p) = &mut cfg0.plant {
        p.xi = 0.0;
    }
    for i in 0..=60 {
        let w = TAU * 1e4 * 10f64.powf(6.0 * i as f64 / 60.0);
        for q in [Quadrature::X, Quadrature::P] {
            let s = vacuum_output_spectrum(&cfg0, w, q).unwrap();
            assert!((s - 1.0).abs() < 1e-10, "S = {s}");
        }
    }

    // (b) DC squeezing magnitude strictly decreasing with feedback
    let rfs = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9];
    let mut s0_db = Vec::new();
    for &r in &rfs {
        let s = vacuum_output_spectrum(&table1_spectrum_config(r), 0.0, Quadrature::P).unwrap();
        s0_db.push(10.0 * s.log10());
    }
    for pair in s0_db.windows(2) {
        assert!(
            pair[1].abs() < pair[0].abs(),
            "|S_p(0)| dB not strictly decreasing: {s0_db:?}"
        );
    }

    // (c) gain peaking of the R_f = 0.9 squeezing trace in 20..40 MHz
    let cfg9 = table1_spectrum_config(0.9);
    let mut best = (0.0_f64, 0.0_f64);
    let mut prev = f64::INFINITY;
    let mut falling = false;
    let mut extremum_mhz = None;
    for k in 1..=4000 {
        let f = 1e6 + (100e6 - 1e6) * k as f64 / 4000.0;
        let s = vacuum_output_spectrum(&cfg9, TAU * f, Quadrature::P).unwrap();
        if s < prev {
            falling = true;
        } else if falling {
            extremum_mhz = Some(f / 1e6);
            best = (f / 1e6, 10.0 * prev.log10());
            break;
        }
        prev = s;
    }
    let at = extremum_mhz.expect("no interior extremum found");
    assert!(
        (20.0..=40.0).contains(&at),
        "extremum at {at} MHz outside 20..40"
    );

    // (d) half-dB squeezing bandwidth grows monotonically to R_f = 0.7
    let mut bw = Vec::new();
    for &r in &rfs[..5] {
        let cfg = table1_spectrum_config(r);
        let s0 = 10.0
            * vacuum_output_spectrum(&cfg, 0.0, Quadrature::P)
                .unwrap()
                .log10();
        let target = s0 / 2.0;
        let mut found = None;
        for i in 0..=6000 {
            let f = 1e4 * 10f64.powf(6.0 * i as f64 / 6000.0);
            let s = 10.0
                * vacuum_output_spectrum(&cfg, TAU * f, Quadrature::P)
                    .unwrap()
                    .log10();
            if s >= target {
                found = Some(f);
                break;
            }
        }
        bw.push(found.expect("no half-dB crossing"));
    }
    for pair in bw.windows(2) {
        assert!(pair[1] > pair[0], "bandwidths not monotone: {bw:?}");
    }

    println!(
        "criterion 3 PASS: S_p(0) dB = {:?}; peaking at {:.1} MHz ({:.2} dB); half-dB bandwidths {:?} Hz",
        s0_db.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>(),
        best.0,
        best.1,
        bw.iter().map(|x| (x / 1e6 * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_4_stability_goldens() {
    let matched = nyquist_verdict(&freespace_stability_config(0.5, 0.9, 0.0)).unwrap();
    assert!(matched.stable, "matched case winding {}", matched.winding);
    let mismatched = nyquist_verdict(&freespace_stability_config(0.5, 0.9, -0.05)).unwrap();
    assert!(
        !mismatched.stable,
        "450 mm case unexpectedly stable (winding {})",
        mismatched.winding
    );
    println!(
        "criterion 4 PASS: matched stable (margin {:.3}), l_f = 450 mm unstable (winding {})",
        matched.min_distance_to_critical, mismatched.winding
    );
}

#[test]
fn criterion_5_freespace_feasibility_topology() {
    let grid: Vec<f64> = (0..8).map(|k| 0.95 * k as f64 / 7.0).collect();
    let base = freespace_stability_config(0.5, 0.9, 0.0);
    let map = sweep_map(
        &base,
        &grid,
        &grid,
        DeviceFamily::FreeSpace,
        &ScanSearch::free_space(),
        &StabilitySettings::default(),
    )
    .unwrap();
    assert!(map.cells.iter().all(|c| c.status != CellStatus::Error));

    // (a) low corner unconditionally stable
    assert_eq!(
        cell(&map, 0.0, 0.0).status,
        CellStatus::UnconditionallyStable
    );
    // (b) high corner unconditionally unstable
    assert_eq!(
        cell(&map, 0.95, 0.95).status,
        CellStatus::UnconditionallyUnstable
    );
    // (c) conditional cells in between
    let n_cond = map
        .cells
        .iter()
        .filter(|c| c.status == CellStatus::Conditional)
        .count();
    assert!(n_cond > 0, "no conditional cells");
    // (d) at least one conditional cell with allowable >= 0.1 mm
    let best = map
        .cells
        .iter()
        .filter(|c| c.status == CellStatus::Conditional)
        .filter_map(|c| c.allowable)
        .fold(0.0_f64, f64::max);
    assert!(best >= 0.1e-3, "best conditional allowable {best}");

    // diagnostic only: report monotonicity violations along xi rows
    let mut warn = 0;
    for &xi in &grid {
        let mut prev = f64::INFINITY;
        for &r in &grid {
            let c = cell(&map, r, xi);
            let a = c.allowable.unwrap_or(0.0);
            if a > prev * (1.0 + 1e-9) {
                warn += 1;
            }
            prev = a;
        }
    }
    println!(
        "criterion 5 PASS: {} conditional cells, max conditional allowable {:.3} mm, {} row-monotonicity exceptions",
        n_cond,
        best * 1e3,
        warn
    );
}

#[test]
fn criterion_6_waveguide_thresholds() {
    let map = waveguide_rows();
    let model = &map.cells[0].dispersion_model_id;

    let c37 = cell(map, 0.37, 0.9);
    assert_eq!(c37.status, CellStatus::Conditional);
    assert!(
        c37.allowable.unwrap() >= 10e-6,
        "allowable at (0.37, 0.9) = {:?}",
        c37.allowable
    );

    let c93 = cell(map, 0.93, 0.1);
    assert!(
        c93.allowable.unwrap() >= 10e-6,
        "allowable at (0.93, 0.1) = {:?}",
        c93.allowable
    );

    // soft criterion: the 10 um contour crosses R_f ~ 0.5 +- 0.1 on the
    // xi = 0.9 row
    let a50 = cell(map, 0.5, 0.9).allowable.unwrap();
    let a60 = cell(map, 0.6, 0.9).allowable.unwrap();
    assert!(
        a60 < 10e-6 || a50 < 10e-6,
        "allowable at (0.5, 0.9) = {a50:.2e}, (0.6, 0.9) = {a60:.2e}"
    );

    println!(
        "criterion 6 PASS [dispersion model {model}]: allowable(0.37, 0.9) = {:.1} um, allowable(0.93, 0.1) = {:.1} um, allowable(0.5, 0.9) = {:.1} um, allowable(0.6, 0.9) = {:.1} um",
        c37.allowable.unwrap() * 1e6,
        c93.allowable.unwrap() * 1e6,
        a50 * 1e6,
        a60 * 1e6,
    );
}

#[test]
fn criterion_7_waveguide_discontinuity() {
    let map = waveguide_rows();
    let r_grid = &map.r_f_grid;
    // only jumps between cells that both carry a finite tolerance count;
    // the drop into the unconditionally unstable region is excluded
    let mut best_jump = (0.0_f64, 0.0, 0.0, 0.0);
    for &xi in &map.xi_grid {
        for pair in r_grid.windows(2) {
            let (a, b) = (cell(map, pair[0], xi), cell(map, pair[1], xi));
            if a.status == CellStatus::UnconditionallyUnstable
                || b.status == CellStatus::UnconditionallyUnstable
            {
                continue;
            }
            let (a, b) = (a.allowable.unwrap_or(0.0), b.allowable.unwrap_or(0.0));
            if b > 0.0 && a / b > best_jump.0 {
                best_jump = (a / b, xi, pair[0], pair[1]);
            }
        }
    }
    assert!(
        best_jump.0 > 3.0,
        "largest finite adjacent-cell jump {:.2}x",
        best_jump.0
    );
    println!(
        "criterion 7 PASS: {:.1}x jump on the xi = {} row between R_f = {} and {}",
        best_jump.0, best_jump.1, best_jump.2, best_jump.3
    );
}

#[test]
fn criterion_8_gain_spectrum_structure() {
    let model = catalog().get("lnoi_neff_thz_demo").unwrap();
    let cfg = waveguide_config(model, 0.37, 0.9, 0.0);
    let plant = match &cfg.plant {
        PlantModel::Cavity(p) => p.clone(),
        _ => unreachable!(),
    };

    // single-pass envelope: half-dB full width of order 2.5 THz
    let peak_db = 20.0 * single_pass_gain_svd(&plant.single_pass, 0.0).unwrap().log10();
    let mut sp_half = None;
    for k in 1..=3500 {
        let w = TAU * 1e9 * k as f64;
        let db = 20.0 * single_pass_gain_svd(&plant.single_pass, w).unwrap().log10();
        if db <= peak_db / 2.0 {
            sp_half = Some(2.0 * k as f64 / 1e3); // full width, THz
            break;
        }
    }
    let sp_fwhm = sp_half.expect("single-pass half-dB point not reached by 3.5 THz");
    assert!(
        (1.5..=3.5).contains(&sp_fwhm),
        "single-pass dB-FWHM {sp_fwhm} THz"
    );

    // DOPO envelope sampled at the cavity resonances. The loop phase is the
    // rotating-frame form (offset frequency times the sideband index), whose
    // comb spacing near the carrier is c / (n(w_c) l_o); it approaches the
    // group-index spacing only when n is nearly flat across the band.
    let n_c =
        cfs_core::dispersion::refractive_index(&plant.single_pass.dispersion, OMEGA_C).unwrap();
    let fsr = SPEED_OF_LIGHT / (n_c * plant.l_len);
    let n_res = (3.5e12 / fsr) as u32;
    let mut env = Vec::with_capacity(n_res as usize);
    for k in 1..=n_res {
        let w = plant.resonance_center(k).unwrap();
        if w <= TAU * 3.5e12 {
            env.push((w, 20.0 * cavity_gain_svd(&plant, w).unwrap().log10()));
        }
    }
    let spacing = (env[10].0 - env[0].0) / TAU / 10.0;
    assert!(
        (spacing - fsr).abs() / fsr < 0.02,
        "FSR spacing {spacing} vs {fsr}"
    );

    // first lobe: half-dB full width < 1 THz and narrower than single pass
    let dc_db = 20.0 * cavity_gain_svd(&plant, 0.0).unwrap().log10();
    let first_half = env
        .iter()
        .find(|(_, db)| *db <= dc_db / 2.0)
        .map(|(w, _)| *w / TAU)
        .expect("envelope never falls to half dB");
    let first_lobe_fwhm_thz = 2.0 * first_half / 1e12;
    assert!(first_lobe_fwhm_thz < 1.0, "first lobe {first_lobe_fwhm_thz} THz");
    assert!(first_lobe_fwhm_thz < sp_fwhm);

    // secondary envelope peak within 2..3.5 THz
    let lo = env.iter().position(|(w, _)| *w / TAU >= 1.2e12).unwrap();
    let mut sec: Option<(f64, f64)> = None;
    for i in (lo + 1)..env.len() - 1 {
        let (w, db) = env[i];
        let is_peak = db > env[i - 1].1 && db >= env[i + 1].1;
        if is_peak && sec.is_none_or(|(_, best)| db > best) {
            sec = Some((w / TAU / 1e12, db));
        }
    }
    let (sec_thz, sec_db) = sec.expect("no secondary envelope peak");
    assert!(
        (2.0..=3.5).contains(&sec_thz),
        "secondary peak at {sec_thz} THz"
    );

    println!(
        "criterion 8 PASS [dispersion model lnoi_neff_thz_demo]: single-pass dB-FWHM {sp_fwhm:.2} THz, first DOPO lobe {first_lobe_fwhm_thz:.2} THz, secondary envelope peak at {sec_thz:.2} THz ({sec_db:.1} dB), FSR {:.2} GHz",
        fsr / 1e9
    );
}

#[test]
fn criterion_9_invariant_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    // basis trace/det preservation, 1e4 draws
    let mut max_err: f64 = 0.0;
    for _ in 0..10_000 {
        let mut c = || C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let m = AcMatrix {
            aa: c(),
            ac: c(),
            ca: c(),
            cc: c(),
            omega: 0.0,
        };
        let q = to_quadrature_basis(&m);
        max_err = max_err
            .max((q.trace() - m.trace()).norm())
            .max((q.det() - m.det()).norm());
    }
    assert!(max_err < 1e-11);

    // symplectic single pass over the band
    let model = catalog().get("mgoln_e_zelmon1997").unwrap();
    let plant = waveguide_config(model, 0.37, 0.9, 0.0);
    let sp = match &plant.plant {
        PlantModel::Cavity(p) => p.single_pass.clone(),
        _ => unreachable!(),
    };
    for k in 0..1000 {
        let w = (k as f64 / 1000.0 - 0.5) * TAU * 6e12;
        let (ga, gc) = single_pass_response(&sp, w).unwrap();
        assert!((ga.norm_sqr() - gc.norm_sqr() - 1.0).abs() < 1e-10);
    }

    // vacuum preservation at zero pump
    let mut cfg0 = table1_spectrum_config(0.37);
    if let PlantModel::Langevin(p) = &mut cfg0.plant {
        p.xi = 0.0;
    }
    for i in 0..=200 {
        let w = TAU * 1e4 * 10f64.powf(6.0 * i as f64 / 200.0);
        for q in [Quadrature::X, Quadrature::P] {
            assert!((vacuum_output_spectrum(&cfg0, w, q).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    // composed network equals closed forms, 1e3 draws
    for _ in 0..1000 {
        let r_f = rng.gen_range(0.0..0.97);
        let mut cfg = table1_spectrum_config(r_f);
        if let PlantModel::Langevin(p) = &mut cfg.plant {
            p.xi = rng.gen_range(0.0..0.99);
            p.t_o = rng.gen_range(0.01..0.5);
            p.l_o = rng.gen_range(0.0..0.05);
        }
        cfg.seg1.loss = rng.gen_range(0.0..0.1);
        cfg.seg2.loss = rng.gen_range(0.0..0.1);
        let w = rng.gen_range(-5e9..5e9);
        let gen = general_from_config(&cfg, w).unwrap();
        for q in [Quadrature::X, Quadrature::P] {
            let s = q.sign();
            let closed = cfs_transfer_symmetric(&cfg, w, q).unwrap();
            let sig = gen.signal.a + s * gen.signal.c;
            assert!((sig - closed.signal).norm() < 1e-10 * closed.signal.norm().max(1.0));
        }
    }

    // DC reduction to the ideal feedback gain, lossless draws
    for _ in 0..1000 {
        let r_f = rng.gen_range(0.0..0.95);
        let mut cfg = table1_spectrum_config(r_f);
        cfg.seg1.loss = 0.0;
        cfg.seg2.loss = 0.0;
        if let PlantModel::Langevin(p) = &mut cfg.plant {
            p.xi = rng.gen_range(0.0..0.95);
            p.l_o = 0.0;
        }
        let p = match &cfg.plant {
            PlantModel::Langevin(p) => *p,
            _ => unreachable!(),
        };
        let g_x = langevin_dopo_response(&p, 0.0, Quadrature::X).unwrap().0.re;
        let t = cfs_transfer_symmetric(&cfg, 0.0, Quadrature::X).unwrap();
        let expect = ideal_feedback_gain(g_x, r_f, Quadrature::X).unwrap();
        assert!((t.signal.re - expect).abs() < 1e-12 * expect.max(1.0));
    }

    // sensitivity bound ordering, 1e4 draws
    for _ in 0..10_000 {
        let g = rng.gen_range(0.01..100.0);
        let r = rng.gen_range(0.0..0.999);
        let (tight, loose) = sensitivity_bound(g, r, 1.0).unwrap();
        assert!(tight <= loose * (1.0 + 1e-12) && loose <= 1.0);
    }

    // winding invariance under rotation, 1e3 draws
    for _ in 0..1000 {
        let phase = rng.gen_range(0.0..TAU);
        let n = rng.gen_range(64..256);
        let samples: Vec<(f64, C64)> = (0..n)
            .map(|k| {
                (
                    k as f64,
                    C64::from_polar(1.0, phase + TAU * k as f64 / n as f64),
                )
            })
            .collect();
        let tr = cfs_core::ComplexTrace::new(samples).unwrap();
        assert_eq!(
            cfs_core::linsys::winding_number(&tr, C64::new(0.0, 0.0)).unwrap(),
            1
        );
    }

    // Langevin vs cavity model agreement near DC for weak coupling
    for _ in 0..200 {
        let t_o = rng.gen_range(0.002..0.02);
        let l_o = rng.gen_range(0.0..0.001);
        let xi = rng.gen_range(0.0..0.9);
        let lang = LangevinDopoParams {
            t_o,
            l_o,
            l_len: 0.5,
            xi,
        };
        let cav = CavityDopoParams::calibrated(
            1.0 - t_o,
            l_o,
            0.5,
            0.01,
            xi,
            DispersionModel::ConstantIndex(1.0),
            OMEGA_C,
        )
        .unwrap();
        let w = TAU * rng.gen_range(-0.1..0.1) * SPEED_OF_LIGHT / 0.5;
        let gl = langevin_dopo_response(&lang, w, Quadrature::X).unwrap().0;
        let gc = cavity_flat_gain(&cav, w, Quadrature::X).unwrap();
        assert!((gl.norm() - gc.norm()).abs() <= 0.05 * gl.norm());
    }

    // winding parity between the factorized and general characteristic forms
    let settings = StabilitySettings::default();
    for _ in 0..100 {
        let r_f: f64 = rng.gen_range(0.05..0.9);
        let xi = rng.gen_range(0.0..0.95);
        let delta = rng.gen_range(-1e-3..1e-3);
        let cfg = freespace_stability_config(r_f, xi, delta);
        let fsr_w = TAU * SPEED_OF_LIGHT / 0.5;
        let grid: Vec<f64> = (0..=1680).map(|i| i as f64 * fsr_w / 160.0).collect();
        let lam = |w: f64, q: Quadrature| {
            cfs_core::network::cfs_loop_gain_symmetric(&cfg, w, q)
        };
        let zero = C64::new(0.0, 0.0);
        let wx = locus_winding(|w| Ok(1.0 - lam(w, Quadrature::X)?), zero, &grid, &settings)
            .unwrap()
            .0;
        let wp = locus_winding(|w| Ok(1.0 - lam(w, Quadrature::P)?), zero, &grid, &settings)
            .unwrap()
            .0;
        let wd = locus_winding(
            |w| {
                let (lx, lp) = (lam(w, Quadrature::X)?, lam(w, Quadrature::P)?);
                let (lxm, lpm) = (lam(-w, Quadrature::X)?, lam(-w, Quadrature::P)?);
                let (la, lc) = (0.5 * (lx + lp), 0.5 * (lx - lp));
                let (lam_, lcm) = (0.5 * (lxm + lpm), 0.5 * (lxm - lpm));
                Ok((1.0 - la) * (1.0 - lam_.conj()) - lc * lcm.conj())
            },
            zero,
            &grid,
            &settings,
        )
        .unwrap()
        .0;
        assert_eq!(wd, wx + wp);
    }

    // symplectic pairs through the SVD: g_x g_p = 1 for lossless squeezers
    for _ in 0..1000 {
        let r: f64 = rng.gen_range(-1.5..1.5);
        let m = AcMatrix {
            aa: C64::new(r.cosh(), 0.0),
            ac: C64::new(r.sinh(), 0.0),
            ca: C64::new(r.sinh(), 0.0),
            cc: C64::new(r.cosh(), 0.0),
            omega: 0.0,
        };
        let s = svd_gain(&to_quadrature_basis(&m));
        assert!((s.g_x * s.g_p - 1.0).abs() < 1e-10);
    }

    // doubled-representation consistency of the assembled matrices
    let sp2 = sp.clone();
    for k in 0..200 {
        let w = (k as f64 / 200.0 - 0.5) * TAU * 4e12;
        let m = sp2.ac_matrix(w).unwrap();
        let m_mirror = sp2.ac_matrix(-w).unwrap();
        assert!((m.cc - m_mirror.aa.conj()).norm() < 1e-12);
        assert!((m.ca - m_mirror.ac.conj()).norm() < 1e-12);
    }

    println!("criterion 9 PASS: analytic invariant suites (trace/det, symplectic, vacuum, network oracle, DC reduction, sensitivity ordering, winding invariance and parity, model agreement, doubled-representation consistency)");
}
