//! Assembles plant, controller beamsplitter, propagation segments, and the
//! optional bandpass filter into the coherent feedback squeezer; produces
//! loop gains, the closed-loop transfer-coefficient set, vacuum-input output
//! spectra, and the general two-port feedback composition used as a
//! cross-validation oracle.


use crate::dispersion::{refractive_index, DispersionModel};
use crate::error::{CfsError, Result};
use crate::linsys::C64;
use crate::plants::{
    cavity_dopo_response, cavity_flat_gain, dopo_internal_stability, langevin_dopo_response,
    ButterworthBpf, CavityDopoParams, LangevinDopoParams, Quadrature,
};
use crate::SPEED_OF_LIGHT;

/// Ideal beamsplitter controller; the minus sign on the reflected arm makes
/// the feedback negative, and the controller adds no noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerBs {
    pub r_f: f64,
}

impl ControllerBs {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.r_f) {
            return Err(CfsError::Domain(format!("R_f = {} outside [0, 1)", self.r_f)));
        }
        Ok(())
    }

    /// 2x2 beamsplitter matrix [[sqrt(R), sqrt(1-R)], [sqrt(1-R), -sqrt(R)]].
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let r = self.r_f.sqrt();
        let t = (1.0 - self.r_f).sqrt();
        [
            [C64::new(r, 0.0), C64::new(t, 0.0)],
            [C64::new(t, 0.0), C64::new(-r, 0.0)],
        ]
    }
}

/// Lossy propagation path of length `l` with per-segment dispersion.
#[derive(Debug, Clone)]
pub struct PropagationSegment {
    /// Energy loss in [0, 1).
    pub loss: f64,
    /// Length, m.
    pub length: f64,
    pub dispersion: DispersionModel,
}

impl PropagationSegment {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.loss) {
            return Err(CfsError::Domain(format!("segment loss {} outside [0, 1)", self.loss)));
        }
        if !(self.length >= 0.0) {
            return Err(CfsError::Domain("segment length must be >= 0".into()));
        }
        Ok(())
    }

    /// `sqrt(1-L) e^{i w n(w_c + w) l / c}`.
    pub fn response(&self, omega_c: f64, omega: f64) -> Result<C64> {
        let n = refractive_index(&self.dispersion, omega_c + omega)?;
        Ok(C64::from_polar(
            (1.0 - self.loss).sqrt(),
            omega * n * self.length / SPEED_OF_LIGHT,
        ))
    }
}

/// Plant choice: the Langevin model carries the spectrum computation, the
/// cavity model carries the stability analyses.
#[derive(Debug, Clone)]
pub enum PlantModel {
    Langevin(LangevinDopoParams),
    Cavity(CavityDopoParams),
}

/// Full device description of one coherent feedback squeezer.
#[derive(Debug, Clone)]
pub struct CfsConfig {
    pub plant: PlantModel,
    pub controller: ControllerBs,
    pub seg1: PropagationSegment,
    pub seg2: PropagationSegment,
    pub bpf: Option<ButterworthBpf>,
    /// Length-mismatch offset delta_l, m; the loop length is
    /// `l_f = seg1.length + seg2.length + delta_l_f`.
    pub delta_l_f: f64,
    /// Carrier angular frequency, rad/s.
    pub omega_c: f64,
}

impl CfsConfig {
    pub fn validate(&self) -> Result<()> {
        self.controller.validate()?;
        self.seg1.validate()?;
        self.seg2.validate()?;
        if let Some(b) = &self.bpf {
            b.validate()?;
        }
        match &self.plant {
            PlantModel::Langevin(p) => p.validate(),
            PlantModel::Cavity(p) => p.validate(),
        }
    }

    /// Total loop loss `1 - (1-L_1)(1-L_2)`.
    pub fn loop_loss(&self) -> f64 {
        1.0 - (1.0 - self.seg1.loss) * (1.0 - self.seg2.loss)
    }

    /// Total loop length including the mismatch offset, m.
    pub fn loop_length(&self) -> f64 {
        self.seg1.length + self.seg2.length + self.delta_l_f
    }

    /// Loop delay for non-dispersive paths, s.
    pub fn loop_tau(&self) -> f64 {
        self.loop_length() / SPEED_OF_LIGHT
    }

    fn langevin(&self) -> Result<&LangevinDopoParams> {
        match &self.plant {
            PlantModel::Langevin(p) => Ok(p),
            PlantModel::Cavity(_) => Err(CfsError::UnsupportedConfiguration(
                "operation requires the Langevin plant".into(),
            )),
        }
    }

    fn cavity(&self) -> Result<&CavityDopoParams> {
        match &self.plant {
            PlantModel::Cavity(p) => Ok(p),
            PlantModel::Langevin(_) => Err(CfsError::UnsupportedConfiguration(
                "operation requires the cavity plant".into(),
            )),
        }
    }
}

/// Feedback-path common factor `-sqrt(R_f (1-L_f)) e^{i w tau_f}` with the
/// compensated filter when present. Non-dispersive form.
fn feedback_factor_flat(cfg: &CfsConfig, omega: f64) -> C64 {
    let amp = (cfg.controller.r_f * (1.0 - cfg.loop_loss())).sqrt();
    let mut f = -C64::from_polar(amp, omega * cfg.loop_tau());
    if let Some(b) = &cfg.bpf {
        f *= b.compensated_response(omega);
    }
    f
}

/// Loop gain of the symmetric (carrier-symmetric) CFS:
/// `Lam_q = -sqrt(R_f (1-L_f)) e^{i w tau_f} [H(w)] G_q^(plant)(w)`.
///
/// The plant gain is the Langevin response for a Langevin plant or the
/// frequency-flat cavity form for a cavity plant.
pub fn cfs_loop_gain_symmetric(cfg: &CfsConfig, omega: f64, q: Quadrature) -> Result<C64> {
    cfg.validate()?;
    let g_plant = match &cfg.plant {
        PlantModel::Langevin(p) => langevin_dopo_response(p, omega, q)?.0,
        PlantModel::Cavity(p) => cavity_flat_gain(p, omega, q)?,
    };
    Ok(feedback_factor_flat(cfg, omega) * g_plant)
}

/// Loop gains of the dispersive CFS in the (a, c) representation:
/// `Lam_j = -sqrt(R_f (1-L_f)) e^{i w n(w_c+w) l_f / c} G_j^(o)(w)`.
pub fn cfs_loop_gain_ac(cfg: &CfsConfig, omega: f64) -> Result<(C64, C64)> {
    cfg.validate()?;
    let plant = cfg.cavity()?;
    if !dopo_internal_stability(plant) {
        return Err(CfsError::InternallyUnstablePlant {
            value: (plant.single_pass.c_const * plant.single_pass.xi).exp()
                * plant.roundtrip_amplitude(),
        });
    }
    let (g_a, g_c) = cavity_dopo_response(plant, omega)?;
    let n = refractive_index(&cfg.seg1.dispersion, cfg.omega_c + omega)?;
    let amp = (cfg.controller.r_f * (1.0 - cfg.loop_loss())).sqrt();
    let fb = -C64::from_polar(amp, omega * n * cfg.loop_length() / SPEED_OF_LIGHT);
    Ok((fb * g_a, fb * g_c))
}

/// The four closed-loop transfer coefficients of the symmetric CFS for one
/// quadrature: signal, DOPO noise, pre-plant loss noise, post-plant loss
/// noise.
#[derive(Debug, Clone, Copy)]
pub struct CfsTransfer {
    pub signal: C64,
    pub noise_dopo: C64,
    pub noise_seg1: C64,
    pub noise_seg2: C64,
    pub loop_gain: C64,
}

/// Closed-loop transfer set of the Langevin CFS (the spectrum model):
///
/// `G_q    = (sqrt(R_f) - Lam_q / sqrt(R_f)) / (1 - Lam_q)`
/// `G_Gq   = sqrt((1-R_f)(1-L_2)) e^{i w tau_2} G_dq / (1 - Lam_q)`
/// `G_G1q  = sqrt((1-R_f) L_1 (1-L_2)) e^{i w tau_2} G_q^DOPO / (1 - Lam_q)`
/// `G_G2q  = sqrt((1-R_f) L_2) / (1 - Lam_q)`
///
/// The signal numerator is evaluated in the algebraically equivalent form
/// `sqrt(R_f) + sqrt(1-L_f) e^{i w tau_f} G_q^DOPO`, which stays finite at
/// `R_f = 0`. The optional bandpass filter is not part of this model.
pub fn cfs_transfer_symmetric(cfg: &CfsConfig, omega: f64, q: Quadrature) -> Result<CfsTransfer> {
    cfg.validate()?;
    let p = cfg.langevin()?;
    let (g_q, g_dq) = langevin_dopo_response(p, omega, q)?;
    let r_f = cfg.controller.r_f;
    let l_f = cfg.loop_loss();
    let (l_1, l_2) = (cfg.seg1.loss, cfg.seg2.loss);
    let tau_f = cfg.loop_tau();
    let tau_2 = cfg.seg2.length / SPEED_OF_LIGHT;

    let loop_phase = C64::from_polar(1.0, omega * tau_f);
    let lam = -(r_f * (1.0 - l_f)).sqrt() * loop_phase * g_q;
    let den = 1.0 - lam;
    if den.norm() < 1e-14 {
        return Err(CfsError::MarginallyUnstableEvaluation {
            omega,
            denom: den.norm(),
        });
    }
    let phase2 = C64::from_polar(1.0, omega * tau_2);
    Ok(CfsTransfer {
        signal: (r_f.sqrt() + (1.0 - l_f).sqrt() * loop_phase * g_q) / den,
        noise_dopo: ((1.0 - r_f) * (1.0 - l_2)).sqrt() * phase2 * g_dq / den,
        noise_seg1: ((1.0 - r_f) * l_1 * (1.0 - l_2)).sqrt() * phase2 * g_q / den,
        noise_seg2: C64::new(((1.0 - r_f) * l_2).sqrt(), 0.0) / den,
        loop_gain: lam,
    })
}

/// Output power spectral density for vacuum inputs, normalized to vacuum:
/// the incoherent sum `|G_q|^2 + |G_Gq|^2 + |G_G1q|^2 + |G_G2q|^2` over the
/// independent vacuum channels.
pub fn vacuum_output_spectrum(cfg: &CfsConfig, omega: f64, q: Quadrature) -> Result<f64> {
    let t = cfs_transfer_symmetric(cfg, omega, q)?;
    Ok(t.signal.norm_sqr()
        + t.noise_dopo.norm_sqr()
        + t.noise_seg1.norm_sqr()
        + t.noise_seg2.norm_sqr())
}

/// One (a, c) coefficient pair of the general feedback composition.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcPair {
    pub a: C64,
    pub c: C64,
}

/// The full coefficient set of the general coherent-feedback network: the
/// signal pair and the five noise-channel pairs, plus the loop gains that
/// generated them.
#[derive(Debug, Clone, Copy)]
pub struct FeedbackTransfer {
    pub signal: AcPair,
    pub noise_plant: AcPair,
    pub noise_gamma1: AcPair,
    pub noise_gamma2: AcPair,
    pub noise_k1: AcPair,
    pub noise_k2: AcPair,
    pub lambda_a: C64,
    pub lambda_c: C64,
    pub lambda_d: C64,
}

/// General coherent-feedback composition of a SISO phase-sensitive plant, a
/// two-port controller, and two propagation filters.
///
/// `plant(w) -> (G_a, G_c)`, `k(w) -> 2x2 controller matrix`,
/// `gamma1/gamma2(w) -> propagation responses`. The printed coefficient
/// forms divide by `K_22` and `Gamma_1`; a vanishing value of either is
/// reported as `SingularController`.
pub fn general_feedback_transfer<P, K, F1, F2>(
    plant: &P,
    k: &K,
    gamma1: &F1,
    gamma2: &F2,
    omega: f64,
) -> Result<FeedbackTransfer>
where
    P: Fn(f64) -> Result<(C64, C64)>,
    K: Fn(f64) -> [[C64; 2]; 2],
    F1: Fn(f64) -> Result<C64>,
    F2: Fn(f64) -> Result<C64>,
{
    let km = k(omega);
    let (k11, k12, k21, k22) = (km[0][0], km[0][1], km[1][0], km[1][1]);
    let km_neg = k(-omega);
    let (k21_m, k22_m) = (km_neg[1][0], km_neg[1][1]);
    let g1 = gamma1(omega)?;
    let g1_m = gamma1(-omega)?;
    let g2 = gamma2(omega)?;
    let g2_m = gamma2(-omega)?;
    if k22.norm() < 1e-300 || g1.norm() < 1e-300 {
        return Err(CfsError::SingularController { omega });
    }
    let (ga, gc) = plant(omega)?;
    let (ga_m, gc_m) = plant(-omega)?;

    let lambda_a = k22 * g1 * g2 * ga;
    let lambda_c = k22 * g1 * g2 * gc;
    let lambda_a_mc = (k22_m * g1_m * g2_m * ga_m).conj();
    let lambda_c_mc = (k22_m * g1_m * g2_m * gc_m).conj();
    let lambda_d = (1.0 - lambda_a) * (1.0 - lambda_a_mc) - lambda_c * lambda_c_mc;

    let det_k = k11 * k22 - k12 * k21;
    let resolvent = (1.0 - lambda_a_mc) / lambda_d;
    let cross = lambda_c / lambda_d;
    let g1_ratio = g1_m.conj() / g1;

    let signal = AcPair {
        a: (det_k + resolvent * k12 * k21) / k22,
        c: cross * k12 * k21_m.conj() / k22 * g1_ratio,
    };
    let noise_gamma1 = AcPair {
        a: (resolvent - 1.0) * k12 / k22 / g1,
        c: cross * k12 / k22 / g1,
    };
    let noise_k2 = AcPair {
        a: (resolvent - 1.0) * k12 / k22,
        c: cross * k12 / k22 * g1_ratio,
    };
    let noise_gamma2 = AcPair {
        a: resolvent * k12,
        c: cross * k12 * k22_m.conj() / k22 * g1_ratio,
    };
    let noise_plant = AcPair {
        a: resolvent * k12 * g2,
        c: cross * k12 * k22_m.conj() / k22 * g1_ratio * g2_m.conj(),
    };
    let noise_k1 = AcPair {
        a: C64::new(1.0, 0.0),
        c: C64::new(0.0, 0.0),
    };

    Ok(FeedbackTransfer {
        signal,
        noise_plant,
        noise_gamma1,
        noise_gamma2,
        noise_k1,
        noise_k2,
        lambda_a,
        lambda_c,
        lambda_d,
    })
}

/// Convenience: the general composition instantiated from a `CfsConfig`
/// with a Langevin plant (the App.-level cross-validation oracle).
pub fn general_from_config(cfg: &CfsConfig, omega: f64) -> Result<FeedbackTransfer> {
    cfg.validate()?;
    let p = *cfg.langevin()?;
    let omega_c = cfg.omega_c;
    // the mismatch offset is part of the pre-plant path, keeping tau_2 and
    // the post-plant noise phases identical to the closed-form bookkeeping
    let mut seg1 = cfg.seg1.clone();
    seg1.length += cfg.delta_l_f;
    let seg2 = cfg.seg2.clone();
    let k = cfg.controller.matrix();
    general_feedback_transfer(
        &|w| crate::plants::langevin_dopo_ac(&p, w),
        &|_| k,
        &|w| seg1.response(omega_c, w),
        &|w| seg2.response(omega_c, w),
        omega,
    )
}
