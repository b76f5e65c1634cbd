//! Amplifier and filter models: ideal DOPO, quantum-Langevin DOPO,
//! single-pass parametric amplifier with phase matching, cavity DOPO
//! assembled as an internal positive-feedback loop, and the Butterworth
//! bandpass filter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::{
    coupling_kappa, parametric_g, refractive_index, wavevector_mismatch, DispersionModel,
};
use crate::error::{CfsError, Result};
use crate::linsys::{AcMatrix, AcResponse, C64};
use crate::SPEED_OF_LIGHT;

/// Quadrature selector: the DOPO amplifies x and deamplifies p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    /// Sign s_q with s_x = -s_p = 1.
    pub fn sign(self) -> f64 {
        match self {
            Quadrature::X => 1.0,
            Quadrature::P => -1.0,
        }
    }
}

/// Ideal lossless DOPO with quadrature gain G_x = 1/G_p = G.
#[derive(Debug, Clone, Copy)]
pub struct IdealDopoGain {
    pub g: f64,
}

impl IdealDopoGain {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(CfsError::Domain(format!("gain must be positive, got {g}")));
        }
        Ok(Self { g })
    }

    pub fn gain(&self, q: Quadrature) -> f64 {
        match q {
            Quadrature::X => self.g,
            Quadrature::P => 1.0 / self.g,
        }
    }

    /// Closed-loop gain with a negative feedback beamsplitter of
    /// reflectivity `r_f`.
    pub fn feedback_gain(&self, r_f: f64, q: Quadrature) -> Result<f64> {
        ideal_feedback_gain(self.g, r_f, q)
    }
}

/// Closed-loop gain of the ideal coherent feedback squeezer at DC:
/// `(sqrt(R_f) + G_q) / (1 + G_q sqrt(R_f))`.
pub fn ideal_feedback_gain(g: f64, r_f: f64, q: Quadrature) -> Result<f64> {
    if !(g > 0.0) {
        return Err(CfsError::Domain(format!("gain must be positive, got {g}")));
    }
    if !(0.0..1.0).contains(&r_f) {
        return Err(CfsError::Domain(format!("R_f = {r_f} outside [0, 1)")));
    }
    let g_q = match q {
        Quadrature::X => g,
        Quadrature::P => 1.0 / g,
    };
    let s = r_f.sqrt();
    Ok((s + g_q) / (1.0 + g_q * s))
}

/// Langevin DOPO parameters (zero cavity detuning).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangevinDopoParams {
    /// Output-coupler energy transmittance, (0, 1].
    pub t_o: f64,
    /// Intra-cavity energy loss, [0, 1).
    pub l_o: f64,
    /// Round-trip length, m.
    pub l_len: f64,
    /// Normalized pump amplitude, [0, 1).
    pub xi: f64,
}

impl LangevinDopoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_o > 0.0 && self.t_o <= 1.0) {
            return Err(CfsError::Domain(format!("T_o = {} outside (0, 1]", self.t_o)));
        }
        if !(0.0..1.0).contains(&self.l_o) {
            return Err(CfsError::Domain(format!("L_o = {} outside [0, 1)", self.l_o)));
        }
        if !(self.l_len > 0.0) {
            return Err(CfsError::Domain("round-trip length must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.xi) {
            return Err(CfsError::Domain(format!("xi = {} outside [0, 1)", self.xi)));
        }
        Ok(())
    }

    /// Output-coupling decay rate, rad/s.
    pub fn gamma_t(&self) -> f64 {
        SPEED_OF_LIGHT * self.t_o / self.l_len
    }

    /// Intra-cavity-loss decay rate, rad/s.
    pub fn gamma_l(&self) -> f64 {
        SPEED_OF_LIGHT * self.l_o / self.l_len
    }

    /// Total field decay rate, rad/s.
    pub fn gamma(&self) -> f64 {
        0.5 * (self.gamma_t() + self.gamma_l())
    }

    /// Free spectral range c / l_o, Hz.
    pub fn fsr_hz(&self) -> f64 {
        SPEED_OF_LIGHT / self.l_len
    }
}

/// Signal and noise transfer of the Langevin DOPO at `omega` for quadrature
/// `q`: returns `(G_q, G_dq)`.
pub fn langevin_dopo_response(
    p: &LangevinDopoParams,
    omega: f64,
    q: Quadrature,
) -> Result<(C64, C64)> {
    p.validate()?;
    let gamma = p.gamma();
    let s = q.sign();
    let a = (p.gamma_t() - p.gamma_l()) / (2.0 * gamma);
    let iw = C64::new(0.0, omega / gamma);
    let den = C64::new(1.0 - s * p.xi, 0.0) - iw;
    let g_q = (C64::new(a + s * p.xi, 0.0) + iw) / den;
    let g_dq = C64::new((p.gamma_t() * p.gamma_l()).sqrt() / gamma, 0.0) / den;
    Ok((g_q, g_dq))
}

/// The same plant in the (a, c) representation,
/// `G_a = [(gT/2)^2 - (gL/2 - iw)^2 + eps^2] / [(gamma - iw)^2 - eps^2]`,
/// `G_c = eps gT / [(gamma - iw)^2 - eps^2]`, used for cross-validation
/// against the quadrature form.
pub fn langevin_dopo_ac(p: &LangevinDopoParams, omega: f64) -> Result<(C64, C64)> {
    p.validate()?;
    let gamma = p.gamma();
    let eps = p.xi * gamma;
    let gt = p.gamma_t();
    let gl = p.gamma_l();
    let den = (C64::new(gamma, -omega)).powi(2) - eps * eps;
    let num_a = C64::new((gt / 2.0) * (gt / 2.0) + eps * eps, 0.0)
        - (C64::new(gl / 2.0, -omega)).powi(2);
    Ok((num_a / den, C64::new(eps * gt, 0.0) / den))
}

impl AcResponse for LangevinDopoParams {
    fn eval_ac(&self, omega: f64) -> Result<(C64, C64)> {
        langevin_dopo_ac(self, omega)
    }
}

/// Single-pass degenerate parametric amplifier in a dispersive medium.
#[derive(Debug, Clone)]
pub struct SinglePassParams {
    /// Interaction length, m.
    pub l_c: f64,
    /// Normalized pump amplitude, [0, 1).
    pub xi: f64,
    /// Single-pass gain constant (dimensionless).
    pub c_const: f64,
    pub dispersion: DispersionModel,
    /// Carrier angular frequency, rad/s.
    pub omega_c: f64,
}

impl SinglePassParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_c > 0.0) {
            return Err(CfsError::Domain("interaction length must be positive".into()));
        }
        if !(self.c_const > 0.0) {
            return Err(CfsError::Domain("gain constant must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.xi) {
            return Err(CfsError::Domain(format!("xi = {} outside [0, 1)", self.xi)));
        }
        Ok(())
    }
}

/// cosh(g) and sinh(g)/g, evaluated through the even series for small |g|
/// where the ratio would lose precision. Both are entire functions, so the
/// imaginary-g branch (radicand < 0) needs no special casing.
fn cosh_sinhc(g: Complex64) -> (Complex64, Complex64) {
    if g.norm() < 1e-6 {
        let g2 = g * g;
        let cosh = 1.0 + g2 * (0.5 + g2 / 24.0);
        let sinhc = 1.0 + g2 * (C64::new(1.0 / 6.0, 0.0) + g2 / 120.0);
        (cosh, sinhc)
    } else {
        (g.cosh(), g.sinh() / g)
    }
}

/// Single-pass transfer pair `(G_a^s, G_c^s)` at `omega`:
/// `G_a^s = e^{i dk l_c/2} [cosh g - i (dk l_c / 2g) sinh g]`,
/// `G_c^s = e^{i dk l_c/2} (sqrt(kappa_+ kappa_-) / g) sinh g`.
///
/// The phase-conjugating coupling uses the geometric mean of the two
/// sideband couplings: with the bare `kappa_+` the lossless element would
/// violate commutator preservation (|G_a|^2 - |G_c|^2 = 1) at order
/// `omega/omega_c`, while the symmetrized form satisfies it exactly in both
/// branches of `g`. The propagation phase over `l_c` is carried by the
/// network's propagation segments, not here.
pub fn single_pass_response(p: &SinglePassParams, omega: f64) -> Result<(C64, C64)> {
    p.validate()?;
    let dk = wavevector_mismatch(&p.dispersion, p.omega_c, omega)?;
    let kp = coupling_kappa(&p.dispersion, p.omega_c, omega, p.c_const, p.xi)?;
    let km = coupling_kappa(&p.dispersion, p.omega_c, -omega, p.c_const, p.xi)?;
    let g = parametric_g(kp, km, dk, p.l_c);
    let x = dk * p.l_c / 2.0;
    let phase = C64::new(0.0, x).exp();
    let (cosh_g, sinhc_g) = cosh_sinhc(g);
    let g_a = phase * (cosh_g - C64::new(0.0, x) * sinhc_g);
    let g_c = phase * (kp * km).max(0.0).sqrt() * sinhc_g;
    Ok((g_a, g_c))
}

/// Doubled-representation matrix of the single-pass amplifier.
pub fn single_pass_ac(p: &SinglePassParams, omega: f64) -> Result<AcMatrix> {
    p.ac_matrix(omega)
}

impl AcResponse for SinglePassParams {
    fn eval_ac(&self, omega: f64) -> Result<(C64, C64)> {
        single_pass_response(self, omega)
    }
}

/// Cavity DOPO: single-pass amplifier inside a round-trip positive-feedback
/// loop closed by the output coupler.
#[derive(Debug, Clone)]
pub struct CavityDopoParams {
    /// Output-coupler energy reflectivity, (0, 1).
    pub r_o: f64,
    /// Intra-cavity energy loss, [0, 1).
    pub l_o: f64,
    /// Round-trip length, m.
    pub l_len: f64,
    pub single_pass: SinglePassParams,
}

impl CavityDopoParams {
    /// Builds the cavity with `C` calibrated from the bare cavity so that
    /// the oscillation threshold sits exactly at `xi = 1`.
    pub fn calibrated(
        r_o: f64,
        l_o: f64,
        l_len: f64,
        l_c: f64,
        xi: f64,
        dispersion: DispersionModel,
        omega_c: f64,
    ) -> Result<Self> {
        let c_const = crate::dispersion::single_pass_gain_constant(r_o, l_o)?;
        Ok(Self {
            r_o,
            l_o,
            l_len,
            single_pass: SinglePassParams {
                l_c,
                xi,
                c_const,
                dispersion,
                omega_c,
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_o > 0.0 && self.r_o < 1.0) {
            return Err(CfsError::Domain(format!("R_o = {} outside (0, 1)", self.r_o)));
        }
        if !(0.0..1.0).contains(&self.l_o) {
            return Err(CfsError::Domain(format!("L_o = {} outside [0, 1)", self.l_o)));
        }
        if !(self.l_len > 0.0) {
            return Err(CfsError::Domain("round-trip length must be positive".into()));
        }
        self.single_pass.validate()
    }

    /// Round-trip amplitude factor sqrt(R_o (1 - L_o)).
    pub fn roundtrip_amplitude(&self) -> f64 {
        (self.r_o * (1.0 - self.l_o)).sqrt()
    }

    /// Internal loop gains `(Lambda_a^o, Lambda_c^o)` including the
    /// round-trip propagation phase `e^{i w n(w_c + w) l_o / c}`.
    pub fn internal_loop_gain(&self, omega: f64) -> Result<(C64, C64)> {
        let (g_a, g_c) = single_pass_response(&self.single_pass, omega)?;
        let n_p = refractive_index(&self.single_pass.dispersion, self.single_pass.omega_c + omega)?;
        let phase = C64::from_polar(1.0, omega * n_p * self.l_len / SPEED_OF_LIGHT);
        let amp = self.roundtrip_amplitude();
        Ok((amp * phase * g_a, amp * phase * g_c))
    }

    /// Group index at the carrier, d(w n)/dw.
    pub fn group_index(&self) -> Result<f64> {
        let wc = self.single_pass.omega_c;
        let h = wc * 1e-7;
        let up = (wc + h) * refractive_index(&self.single_pass.dispersion, wc + h)?;
        let dn = (wc - h) * refractive_index(&self.single_pass.dispersion, wc - h)?;
        Ok((up - dn) / (2.0 * h))
    }

    /// Free spectral range c / (n_g l_o), Hz.
    pub fn fsr_hz(&self) -> Result<f64> {
        Ok(SPEED_OF_LIGHT / (self.group_index()? * self.l_len))
    }
}

/// Internal stability of the DOPO loop: `e^{C xi} sqrt(R_o (1 - L_o)) < 1`.
/// With `C` calibrated from the bare cavity this is equivalent to `xi < 1`.
/// Evaluated in log space so the threshold equality is exact.
pub fn dopo_internal_stability(p: &CavityDopoParams) -> bool {
    p.single_pass.c_const * p.single_pass.xi + 0.5 * (p.r_o * (1.0 - p.l_o)).ln() < 0.0
}

/// Cavity DOPO transfer pair `(G_a^o, G_c^o)` at `omega`.
pub fn cavity_dopo_response(p: &CavityDopoParams, omega: f64) -> Result<(C64, C64)> {
    p.validate()?;
    if !dopo_internal_stability(p) {
        return Err(CfsError::InternallyUnstablePlant {
            value: (p.single_pass.c_const * p.single_pass.xi).exp() * p.roundtrip_amplitude(),
        });
    }
    let (la_p, lc_p) = p.internal_loop_gain(omega)?;
    let (la_m, lc_m) = p.internal_loop_gain(-omega)?;
    let lam_d = (1.0 - la_p) * (1.0 - la_m.conj()) - lc_p * lc_m.conj();
    let sqrt_ro = p.r_o.sqrt();
    let t = 1.0 - p.r_o;
    let g_a = (-1.0 + (1.0 - la_m.conj()) / lam_d * t) / sqrt_ro;
    let g_c = t / sqrt_ro * lc_p / lam_d;
    Ok((g_a, g_c))
}

/// Doubled-representation matrix of the cavity DOPO.
pub fn cavity_dopo_ac(p: &CavityDopoParams, omega: f64) -> Result<AcMatrix> {
    p.ac_matrix(omega)
}

impl AcResponse for CavityDopoParams {
    fn eval_ac(&self, omega: f64) -> Result<(C64, C64)> {
        cavity_dopo_response(self, omega)
    }
}

/// Frequency-flat approximation of the cavity DOPO used on the free-space
/// stability path: the single pass is pinned to its carrier value
/// `G_q^s(0) = e^{+-C xi}` and the round trip is non-dispersive,
/// `G_q^(o,f) = (1/sqrt(R_o)) (Lam_q - R_o) / (1 - Lam_q)` with
/// `Lam_q = sqrt(R_o (1-L_o)) e^{i w l_o / c} e^{s_q C xi}`.
pub fn cavity_flat_gain(p: &CavityDopoParams, omega: f64, q: Quadrature) -> Result<C64> {
    p.validate()?;
    if !dopo_internal_stability(p) {
        return Err(CfsError::InternallyUnstablePlant {
            value: (p.single_pass.c_const * p.single_pass.xi).exp() * p.roundtrip_amplitude(),
        });
    }
    let rho = p.roundtrip_amplitude() * (q.sign() * p.single_pass.c_const * p.single_pass.xi).exp();
    let lam = C64::from_polar(rho, omega * p.l_len / SPEED_OF_LIGHT);
    Ok((lam - p.r_o) / (1.0 - lam) / p.r_o.sqrt())
}

/// Largest value of `|G_q^(o,f)|` over frequency, from the closed form of
/// the Moebius image of the circle |Lam| = rho.
pub fn cavity_flat_gain_sup(p: &CavityDopoParams, q: Quadrature) -> f64 {
    let rho = p.roundtrip_amplitude() * (q.sign() * p.single_pass.c_const * p.single_pass.xi).exp();
    let r_o = p.r_o;
    let m = if rho * rho > r_o {
        (rho - r_o).abs() / (1.0 - rho)
    } else {
        (rho + r_o) / (1.0 + rho)
    };
    m / r_o.sqrt()
}

/// Larger singular value of the single-pass quadrature matrix at `omega`
/// (the single-pass gain of the rotation-squeezer-rotation reduction).
pub fn single_pass_gain_svd(p: &SinglePassParams, omega: f64) -> Result<f64> {
    let m = crate::linsys::to_quadrature_basis(&p.ac_matrix(omega)?);
    Ok(crate::linsys::svd_gain(&m).g_x)
}

/// Larger singular value of the cavity-DOPO quadrature matrix at `omega`.
pub fn cavity_gain_svd(p: &CavityDopoParams, omega: f64) -> Result<f64> {
    let m = crate::linsys::to_quadrature_basis(&p.ac_matrix(omega)?);
    Ok(crate::linsys::svd_gain(&m).g_x)
}

impl CavityDopoParams {
    /// The k-th cavity resonance offset: the positive solution of
    /// `w n(w_c + w) l_o / c = 2 pi k`, found by Newton iteration from the
    /// group-index estimate.
    pub fn resonance_center(&self, k: u32) -> Result<f64> {
        let target = std::f64::consts::TAU * k as f64;
        let mut w = target * SPEED_OF_LIGHT / (self.group_index()? * self.l_len);
        for _ in 0..6 {
            let n = refractive_index(&self.single_pass.dispersion, self.single_pass.omega_c + w)?;
            let phase = w * n * self.l_len / SPEED_OF_LIGHT;
            let slope = n * self.l_len / SPEED_OF_LIGHT;
            let next = w - (phase - target) / slope;
            if !(next.is_finite() && next > 0.0) {
                break;
            }
            w = next;
        }
        Ok(w)
    }
}

/// Second-order Butterworth bandpass filter around the carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ButterworthBpf {
    /// Half-width-at-half-maximum cutoff, rad/s.
    pub omega_hwhm: f64,
}

impl ButterworthBpf {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_hwhm > 0.0) {
            return Err(CfsError::Domain("BPF cutoff must be positive".into()));
        }
        Ok(())
    }

    /// Group delay at the carrier, sqrt(2)/omega_hwhm.
    pub fn group_delay(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.omega_hwhm
    }

    /// Filter response with its carrier group delay compensated away,
    /// `H(w) e^{-i w tau_H}`. The loop assembly uses this form so that a
    /// matched-length loop stays group-delay matched; the linear part of the
    /// filter phase is a design-time length offset, absorbed the same way as
    /// the other transmissive-element dispersion.
    pub fn compensated_response(&self, omega: f64) -> C64 {
        bpf_response(self, omega) * C64::from_polar(1.0, -omega * self.group_delay())
    }
}

/// Butterworth response `H(w) = w_H^2 / ((-iw - w_1)(-iw - w_2))` with
/// `w_1 = w_H e^{i 3pi/4}`, `w_2 = w_H e^{i 5pi/4}`.
///
/// `|H|^2 = 1 / (1 + (w/w_H)^4)`; the pole placement makes the filter causal
/// under the `e^{+i w tau}` propagation-phase convention used throughout.
pub fn bpf_response(f: &ButterworthBpf, omega: f64) -> C64 {
    let w1 = C64::from_polar(f.omega_hwhm, 3.0 * std::f64::consts::FRAC_PI_4);
    let w2 = C64::from_polar(f.omega_hwhm, 5.0 * std::f64::consts::FRAC_PI_4);
    let miw = C64::new(0.0, -omega);
    f.omega_hwhm * f.omega_hwhm / ((miw - w1) * (miw - w2))
}
