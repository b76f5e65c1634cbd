//! Stability verdicts from the characteristic function: Nyquist
//! winding-number tests on adaptively refined loci, Bode traces, and the
//! closed-loop sensitivity bound.
//!
//! The locus is sampled over `omega in [0, truncation]` on a grid clustered
//! at the cavity resonances, refined until every segment subtends less than
//! pi/2 about the critical point and changes magnitude by less than 6 dB,
//! then doubled by conjugate symmetry and closed at infinity through the
//! slit plane. The truncation point is chosen where a provable loop-gain
//! bound falls below one (BPF roll-off for the free-space path, the end of
//! the phase-matching band for the dispersive path).

use serde::Serialize;

use crate::error::{CfsError, Result};
use crate::linsys::{C64, ComplexTrace};
use crate::network::{cfs_loop_gain_ac, cfs_loop_gain_symmetric, CfsConfig, PlantModel};
use crate::plants::{
    cavity_flat_gain_sup, dopo_internal_stability, langevin_dopo_response, single_pass_response,
    Quadrature,
};
use crate::SPEED_OF_LIGHT;

/// Tunable settings of the Nyquist machinery. Defaults match the documented
/// budgets; every field can be overridden per run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilitySettings {
    /// Baseline samples per free spectral range on the initial grid.
    pub points_per_fsr: usize,
    /// Total sample budget per verdict.
    pub budget: usize,
    /// Exclusion-disk radius around the critical point; loci entering it
    /// yield a flagged (marginal) verdict.
    pub margin_disk: f64,
    /// Sustained-|G_c| tolerance that ends the phase-matching band on the
    /// dispersive path.
    pub gc_tol: f64,
    /// Hard truncation cap for the dispersive path, rad/s.
    pub hard_cap: f64,
    /// Safety margin demanded of the loop-gain bound at truncation.
    pub bound_margin: f64,
}

impl Default for StabilitySettings {
    fn default() -> Self {
        Self {
            points_per_fsr: 96,
            budget: 1 << 24,
            margin_disk: 1e-6,
            gc_tol: 1e-3,
            hard_cap: std::f64::consts::TAU * 5e12,
            bound_margin: 0.05,
        }
    }
}

/// Nyquist winding result plus prechecks and refinement diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Total signed encirclements (summed over both quadrature factors on
    /// the factorized path).
    pub winding: i64,
    pub precheck_dopo: bool,
    pub min_distance_to_critical: f64,
    pub refinement_depth: u32,
    pub truncation_omega: f64,
    /// Set when the locus entered the exclusion disk; the verdict is still
    /// issued but boundary searches should treat it as suspect.
    pub marginal: bool,
    /// Samples actually evaluated.
    pub evaluations: usize,
}

/// A sampled Nyquist locus with the critical point it is tested against.
#[derive(Debug, Clone)]
pub struct NyquistTrace {
    pub trace: ComplexTrace,
    pub critical_point: C64,
    pub label: &'static str,
}

/// Characteristic samples of a configuration on a caller-supplied grid.
/// The factorized path returns the `1 - Lambda_q` factors separately; the
/// general path returns `Lambda_D`.
#[derive(Debug, Clone)]
pub enum CharacteristicSamples {
    Factored {
        x: ComplexTrace,
        p: ComplexTrace,
    },
    General(ComplexTrace),
}

/// Nyquist loci of a configuration on a caller-supplied grid: the
/// `-Lambda_x` / `-Lambda_p` traces against the critical point `-1` on the
/// factorized path, or the `Lambda_D` trace against `0` on the general path.
pub fn nyquist_loci(cfg: &CfsConfig, grid: &[f64]) -> Result<Vec<NyquistTrace>> {
    match characteristic_samples(cfg, grid)? {
        CharacteristicSamples::Factored { x, p } => {
            let flip = |t: ComplexTrace| {
                let samples = t
                    .samples()
                    .iter()
                    .map(|&(w, z)| (w, 1.0 - z))
                    .collect::<Vec<_>>();
                ComplexTrace::new(samples).expect("grid preserved")
            };
            Ok(vec![
                NyquistTrace {
                    trace: flip(x),
                    critical_point: C64::new(-1.0, 0.0),
                    label: "-lambda_x",
                },
                NyquistTrace {
                    trace: flip(p),
                    critical_point: C64::new(-1.0, 0.0),
                    label: "-lambda_p",
                },
            ])
        }
        CharacteristicSamples::General(t) => Ok(vec![NyquistTrace {
            trace: t,
            critical_point: C64::new(0.0, 0.0),
            label: "lambda_d",
        }]),
    }
}

/// Evaluates the characteristic function on `grid`.
pub fn characteristic_samples(cfg: &CfsConfig, grid: &[f64]) -> Result<CharacteristicSamples> {
    precheck(cfg)?;
    match &cfg.plant {
        PlantModel::Langevin(_) => {
            let x = sample(grid, |w| {
                Ok(1.0 - cfs_loop_gain_symmetric(cfg, w, Quadrature::X)?)
            })?;
            let p = sample(grid, |w| {
                Ok(1.0 - cfs_loop_gain_symmetric(cfg, w, Quadrature::P)?)
            })?;
            Ok(CharacteristicSamples::Factored { x, p })
        }
        PlantModel::Cavity(c) => {
            if is_dispersive(cfg) {
                let t = sample(grid, |w| lambda_d_general(cfg, w))?;
                Ok(CharacteristicSamples::General(t))
            } else {
                let _ = c;
                let x = sample(grid, |w| {
                    Ok(1.0 - cfs_loop_gain_symmetric(cfg, w, Quadrature::X)?)
                })?;
                let p = sample(grid, |w| {
                    Ok(1.0 - cfs_loop_gain_symmetric(cfg, w, Quadrature::P)?)
                })?;
                Ok(CharacteristicSamples::Factored { x, p })
            }
        }
    }
}

fn sample<F>(grid: &[f64], f: F) -> Result<ComplexTrace>
where
    F: Fn(f64) -> Result<C64>,
{
    let mut samples = Vec::with_capacity(grid.len());
    for &w in grid {
        samples.push((w, f(w)?));
    }
    ComplexTrace::new(samples)
}

/// `Lambda_D(w) = [1 - La(w)][1 - conj(La(-w))] - Lc(w) conj(Lc(-w))`.
fn lambda_d_general(cfg: &CfsConfig, omega: f64) -> Result<C64> {
    let (la_p, lc_p) = cfs_loop_gain_ac(cfg, omega)?;
    let (la_m, lc_m) = cfs_loop_gain_ac(cfg, -omega)?;
    Ok((1.0 - la_p) * (1.0 - la_m.conj()) - lc_p * lc_m.conj())
}

/// Precomputed flat-path loop-gain evaluator: the operation-level
/// composition with the validation and parameter plumbing hoisted out of
/// the per-sample loop. Kept bit-identical to `cfs_loop_gain_symmetric`
/// (the factorization audit test pins the equality).
struct FlatLoopEval {
    amp: f64,
    lf_over_c: f64,
    plant: FlatPlant,
    bpf: Option<(C64, C64, f64, f64)>, // (w1, w2, whwm^2, group delay)
}

enum FlatPlant {
    Cavity {
        rho_x: f64,
        rho_p: f64,
        r_o: f64,
        sqrt_ro: f64,
        lo_over_c: f64,
    },
    Langevin {
        a: f64,
        xi: f64,
        gamma: f64,
    },
}

impl FlatLoopEval {
    fn new(cfg: &CfsConfig) -> Result<Self> {
        precheck(cfg)?;
        let plant = match &cfg.plant {
            PlantModel::Cavity(p) => {
                let cxi = p.single_pass.c_const * p.single_pass.xi;
                FlatPlant::Cavity {
                    rho_x: p.roundtrip_amplitude() * cxi.exp(),
                    rho_p: p.roundtrip_amplitude() * (-cxi).exp(),
                    r_o: p.r_o,
                    sqrt_ro: p.r_o.sqrt(),
                    lo_over_c: p.l_len / SPEED_OF_LIGHT,
                }
            }
            PlantModel::Langevin(p) => FlatPlant::Langevin {
                a: (p.gamma_t() - p.gamma_l()) / (2.0 * p.gamma()),
                xi: p.xi,
                gamma: p.gamma(),
            },
        };
        let bpf = cfg.bpf.as_ref().map(|b| {
            (
                C64::from_polar(b.omega_hwhm, 3.0 * std::f64::consts::FRAC_PI_4),
                C64::from_polar(b.omega_hwhm, 5.0 * std::f64::consts::FRAC_PI_4),
                b.omega_hwhm * b.omega_hwhm,
                b.group_delay(),
            )
        });
        Ok(Self {
            amp: (cfg.controller.r_f * (1.0 - cfg.loop_loss())).sqrt(),
            lf_over_c: cfg.loop_length() / SPEED_OF_LIGHT,
            plant,
            bpf,
        })
    }

    fn lambda(&self, omega: f64, q: Quadrature) -> C64 {
        let g = match &self.plant {
            FlatPlant::Cavity {
                rho_x,
                rho_p,
                r_o,
                sqrt_ro,
                lo_over_c,
            } => {
                let rho = match q {
                    Quadrature::X => *rho_x,
                    Quadrature::P => *rho_p,
                };
                let lam = C64::from_polar(rho, omega * lo_over_c);
                (lam - *r_o) / (1.0 - lam) / *sqrt_ro
            }
            FlatPlant::Langevin { a, xi, gamma } => {
                let s = q.sign();
                let iw = C64::new(0.0, omega / gamma);
                (C64::new(a + s * xi, 0.0) + iw) / (C64::new(1.0 - s * xi, 0.0) - iw)
            }
        };
        let mut f = -C64::from_polar(self.amp, omega * self.lf_over_c);
        if let Some((w1, w2, whwm2, tau)) = &self.bpf {
            let miw = C64::new(0.0, -omega);
            f *= whwm2 / ((miw - w1) * (miw - w2)) * C64::from_polar(1.0, -omega * tau);
        }
        f * g
    }
}

/// Precomputed dispersive-path evaluator for `Lambda_D`; hoists the index
/// lookups shared between the `+w`/`-w` pairs. Pinned to the compositional
/// route by the factorization audit test.
struct DispersiveLoopEval {
    amp: f64,
    rho: f64,
    r_o: f64,
    sqrt_ro: f64,
    l_o: f64,
    l_f: f64,
    l_c: f64,
    c_xi: f64,
    omega_c: f64,
    n_c: f64,
    dispersion: crate::dispersion::DispersionModel,
}

impl DispersiveLoopEval {
    fn new(cfg: &CfsConfig) -> Result<Self> {
        precheck(cfg)?;
        let p = match &cfg.plant {
            PlantModel::Cavity(p) => p,
            PlantModel::Langevin(_) => {
                return Err(CfsError::UnsupportedConfiguration(
                    "dispersive stability analysis requires the cavity plant".into(),
                ))
            }
        };
        Ok(Self {
            amp: (cfg.controller.r_f * (1.0 - cfg.loop_loss())).sqrt(),
            rho: p.roundtrip_amplitude(),
            r_o: p.r_o,
            sqrt_ro: p.r_o.sqrt(),
            l_o: p.l_len,
            l_f: cfg.loop_length(),
            l_c: p.single_pass.l_c,
            c_xi: p.single_pass.c_const * p.single_pass.xi,
            omega_c: p.single_pass.omega_c,
            n_c: crate::dispersion::refractive_index(
                &p.single_pass.dispersion,
                p.single_pass.omega_c,
            )?,
            dispersion: p.single_pass.dispersion.clone(),
        })
    }

    /// Single-pass pair plus the sideband indices at `omega`.
    fn single_pass(&self, omega: f64) -> Result<(C64, C64, f64)> {
        let n_p = crate::dispersion::refractive_index(&self.dispersion, self.omega_c + omega)?;
        let n_m = crate::dispersion::refractive_index(&self.dispersion, self.omega_c - omega)?;
        let dk = (2.0 * self.omega_c * self.n_c
            - (self.omega_c + omega) * n_p
            - (self.omega_c - omega) * n_m)
            / SPEED_OF_LIGHT;
        let kp = (self.omega_c + omega) / self.omega_c * self.n_c / n_p * self.c_xi;
        let km = (self.omega_c - omega) / self.omega_c * self.n_c / n_m * self.c_xi;
        let x = dk * self.l_c / 2.0;
        let g = C64::new(kp * km - x * x, 0.0).sqrt();
        let (cosh_g, sinhc_g) = cosh_sinhc_local(g);
        let phase = C64::from_polar(1.0, x);
        let g_a = phase * (cosh_g - C64::new(0.0, x) * sinhc_g);
        let g_c = phase * (kp * km).max(0.0).sqrt() * sinhc_g;
        Ok((g_a, g_c, n_p))
    }

    /// CFS loop-gain pair at `omega` (either sign).
    fn lambda_ac(&self, omega: f64) -> Result<(C64, C64)> {
        let (g_a, g_c, n_p) = self.single_pass(omega)?;
        let roundtrip = C64::from_polar(self.rho, omega * n_p * self.l_o / SPEED_OF_LIGHT);
        let la_o = roundtrip * g_a;
        let lc_o = roundtrip * g_c;
        // the internal mirror pair at -omega shares dk, g and swaps kappas,
        // so only the phase and the mirrored index differ
        let (g_a_m, g_c_m, n_m) = self.single_pass(-omega)?;
        let roundtrip_m = C64::from_polar(self.rho, -omega * n_m * self.l_o / SPEED_OF_LIGHT);
        let la_o_m = roundtrip_m * g_a_m;
        let lc_o_m = roundtrip_m * g_c_m;
        let lam_d_o = (1.0 - la_o) * (1.0 - la_o_m.conj()) - lc_o * lc_o_m.conj();
        let t = 1.0 - self.r_o;
        let g_ao = (-1.0 + (1.0 - la_o_m.conj()) / lam_d_o * t) / self.sqrt_ro;
        let g_co = t / self.sqrt_ro * lc_o / lam_d_o;
        let fb = -C64::from_polar(self.amp, omega * n_p * self.l_f / SPEED_OF_LIGHT);
        Ok((fb * g_ao, fb * g_co))
    }

    fn lambda_d(&self, omega: f64) -> Result<C64> {
        let (la_p, lc_p) = self.lambda_ac(omega)?;
        let (la_m, lc_m) = self.lambda_ac(-omega)?;
        Ok((1.0 - la_p) * (1.0 - la_m.conj()) - lc_p * lc_m.conj())
    }
}

fn cosh_sinhc_local(g: C64) -> (C64, C64) {
    if g.norm() < 1e-6 {
        let g2 = g * g;
        (
            1.0 + g2 * (0.5 + g2 / 24.0),
            1.0 + g2 * (C64::new(1.0 / 6.0, 0.0) + g2 / 120.0),
        )
    } else {
        (g.cosh(), g.sinh() / g)
    }
}

fn precheck(cfg: &CfsConfig) -> Result<()> {
    cfg.validate()?;
    if let PlantModel::Cavity(p) = &cfg.plant {
        if !dopo_internal_stability(p) {
            return Err(CfsError::InternallyUnstablePlant {
                value: (p.single_pass.c_const * p.single_pass.xi).exp() * p.roundtrip_amplitude(),
            });
        }
    }
    Ok(())
}

/// A configuration is treated as dispersive when either loop segment or the
/// cavity medium has a non-constant index.
fn is_dispersive(cfg: &CfsConfig) -> bool {
    use crate::dispersion::DispersionModel::ConstantIndex;
    let seg_const = matches!(cfg.seg1.dispersion, ConstantIndex(_))
        && matches!(cfg.seg2.dispersion, ConstantIndex(_));
    match &cfg.plant {
        PlantModel::Langevin(_) => false,
        PlantModel::Cavity(c) => {
            !(seg_const && matches!(c.single_pass.dispersion, ConstantIndex(_)))
        }
    }
}

/// Nyquist stability verdict with default settings.
pub fn nyquist_verdict(cfg: &CfsConfig) -> Result<StabilityVerdict> {
    nyquist_verdict_with(cfg, &StabilitySettings::default())
}

/// Nyquist stability verdict.
///
/// Factorized path: winding of `-Lambda_x` and `-Lambda_p` about `-1`, both
/// zero for stability. General path: winding of `Lambda_D` about `0`.
/// The DOPO internal-stability precheck guarantees the pole count of the
/// argument principle is zero; the BPF contributes stable poles only.
pub fn nyquist_verdict_with(
    cfg: &CfsConfig,
    settings: &StabilitySettings,
) -> Result<StabilityVerdict> {
    precheck(cfg)?;
    if is_dispersive(cfg) {
        general_verdict(cfg, settings)
    } else {
        factored_verdict(cfg, settings)
    }
}

// ---------------------------------------------------------------------------
// factorized (carrier-symmetric) path

fn factored_verdict(cfg: &CfsConfig, st: &StabilitySettings) -> Result<StabilityVerdict> {
    let amp = (cfg.controller.r_f * (1.0 - cfg.loop_loss())).sqrt();
    if cfg.controller.r_f == 0.0 {
        return Ok(StabilityVerdict {
            stable: true,
            winding: 0,
            precheck_dopo: true,
            min_distance_to_critical: 1.0,
            refinement_depth: 0,
            truncation_omega: 0.0,
            marginal: false,
            evaluations: 0,
        });
    }

    let (sup_x, sup_p, fsr_w, linewidth_frac) = match &cfg.plant {
        PlantModel::Cavity(p) => {
            let fsr_w = std::f64::consts::TAU * SPEED_OF_LIGHT / p.l_len;
            let rho = p.roundtrip_amplitude()
                * (p.single_pass.c_const * p.single_pass.xi).exp();
            (
                cavity_flat_gain_sup(p, Quadrature::X),
                cavity_flat_gain_sup(p, Quadrature::P),
                fsr_w,
                ((1.0 - rho).abs()).max(1e-9) / std::f64::consts::TAU,
            )
        }
        PlantModel::Langevin(p) => {
            let gx0 = langevin_dopo_response(p, 0.0, Quadrature::X)?.0.norm();
            // |G_x| decreases monotonically from its DC value toward 1
            (gx0.max(1.0), 1.0, std::f64::consts::TAU * p.fsr_hz(), 0.25)
        }
    };

    let truncation = truncation_flat(cfg, st, sup_x.max(sup_p), fsr_w)?;
    let mut evals = 0usize;
    let mut depth = 0u32;
    let mut min_dist = f64::INFINITY;
    let mut total_winding = 0i64;
    let critical = C64::new(-1.0, 0.0);

    for (q, sup) in [(Quadrature::X, sup_x), (Quadrature::P, sup_p)] {
        // sufficient bound: |Lambda_q| < 1 uniformly means this factor
        // cannot encircle the critical point
        if amp * sup < 1.0 - st.bound_margin {
            min_dist = min_dist.min(1.0 - amp * sup);
            continue;
        }
        let eval = FlatLoopEval::new(cfg)?;
        let f = move |w: f64| -> Result<C64> { Ok(-eval.lambda(w, q)) };
        let grid = clustered_grid(fsr_w, truncation, linewidth_frac, st.points_per_fsr);
        let r = refined_half_axis_winding(&f, critical, &grid, st, &mut evals)?;
        total_winding += r.winding;
        depth = depth.max(r.depth);
        min_dist = min_dist.min(r.min_dist);
    }

    finish_verdict(total_winding, min_dist, depth, truncation, evals, st)
}

/// Truncation for the flat (non-dispersive) path: the smallest omega at
/// which the provable bound `amp * sup_gain * |H|` drops below
/// `1 - bound_margin`, at least the documented 10x BPF cutoff, and at least
/// a few FSR.
fn truncation_flat(cfg: &CfsConfig, st: &StabilitySettings, sup_gain: f64, fsr_w: f64) -> Result<f64> {
    let amp = (cfg.controller.r_f * (1.0 - cfg.loop_loss())).sqrt();
    let bound = amp * sup_gain;
    let target = 1.0 - st.bound_margin;
    let omega = match &cfg.bpf {
        Some(b) => {
            // |H| = (1 + (w/w_H)^4)^(-1/2) < target/bound  solved in closed form
            let need = if bound <= target {
                1.0
            } else {
                let h = target / bound;
                (1.0 / (h * h) - 1.0).max(1.0).powf(0.25)
            };
            (need.max(10.0) * b.omega_hwhm).max(4.0 * fsr_w)
        }
        None => match &cfg.plant {
            PlantModel::Langevin(p) => {
                // |G_x(w)|^2 = (a + xi)^2 + (w/gamma)^2 over (1 - xi)^2 + (w/gamma)^2
                // falls below (target/amp)^2 beyond a closed-form frequency
                let gamma = p.gamma();
                let a = (p.gamma_t() - p.gamma_l()) / (2.0 * gamma);
                let t2 = (target / amp).powi(2);
                if t2 <= 1.0 {
                    return Err(CfsError::UnsupportedConfiguration(format!(
                        "loop gain bound {amp} does not fall below one at high frequency",
                    )));
                }
                let num = (a + p.xi).powi(2) - t2 * (1.0 - p.xi).powi(2);
                let w = if num <= 0.0 {
                    gamma
                } else {
                    gamma * (num / (t2 - 1.0)).sqrt()
                };
                w.max(4.0 * fsr_w)
            }
            PlantModel::Cavity(_) => {
                return Err(CfsError::UnsupportedConfiguration(
                    "flat cavity loop without a bandpass filter has no decaying \
                     loop-gain bound; add a BPF or use the dispersive path"
                        .into(),
                ))
            }
        },
    };
    Ok(omega)
}

// ---------------------------------------------------------------------------
// general (dispersive) path

fn general_verdict(cfg: &CfsConfig, st: &StabilitySettings) -> Result<StabilityVerdict> {
    let plant = match &cfg.plant {
        PlantModel::Cavity(p) => p,
        PlantModel::Langevin(_) => {
            return Err(CfsError::UnsupportedConfiguration(
                "dispersive stability analysis requires the cavity plant".into(),
            ))
        }
    };
    if cfg.controller.r_f == 0.0 {
        return Ok(StabilityVerdict {
            stable: true,
            winding: 0,
            precheck_dopo: true,
            min_distance_to_critical: 1.0,
            refinement_depth: 0,
            truncation_omega: 0.0,
            marginal: false,
            evaluations: 0,
        });
    }

    let fsr_w = std::f64::consts::TAU * plant.fsr_hz()?;
    let truncation = truncation_dispersive(cfg, st, fsr_w)?;
    let rho = plant.roundtrip_amplitude()
        * (plant.single_pass.c_const * plant.single_pass.xi).exp();
    let linewidth_frac = ((1.0 - rho).abs()).max(1e-9) / std::f64::consts::TAU;

    // cluster at both resonance families: w n(w_c + w) l_o / c = 2 pi k and
    // the mirrored branch w n(w_c - w) l_o / c = 2 pi k
    let mut centers = Vec::new();
    let mut k = 1usize;
    loop {
        let base = k as f64 * fsr_w;
        if base > truncation + fsr_w {
            break;
        }
        for sign in [1.0, -1.0] {
            let mut w = base;
            for _ in 0..4 {
                let n = crate::dispersion::refractive_index(
                    &plant.single_pass.dispersion,
                    cfg.omega_c + sign * w,
                )?;
                let phase = w * n * plant.l_len / SPEED_OF_LIGHT;
                let slope = n * plant.l_len / SPEED_OF_LIGHT;
                w -= (phase - std::f64::consts::TAU * k as f64) / slope;
                if !(w.is_finite() && w > 0.0) {
                    w = base;
                    break;
                }
            }
            if w <= truncation {
                centers.push(w);
            }
        }
        k += 1;
    }
    let grid = clustered_grid_at(&centers, fsr_w, truncation, linewidth_frac, st.points_per_fsr);

    let mut evals = 0usize;
    let eval = DispersiveLoopEval::new(cfg)?;
    let f = |w: f64| eval.lambda_d(w);
    let r = refined_half_axis_winding(&f, C64::new(0.0, 0.0), &grid, st, &mut evals)?;
    finish_verdict(r.winding, r.min_dist, r.depth, truncation, evals, st)
}

/// Truncation for the dispersive path: the first omega past which
/// `|G_c^s| < gc_tol` holds over one full FSR (the plant is passive to
/// tolerance), capped at `hard_cap`; within the final FSR the quietest
/// sample (smallest internal loop gain) is chosen as the cut.
fn truncation_dispersive(cfg: &CfsConfig, st: &StabilitySettings, fsr_w: f64) -> Result<f64> {
    let plant = match &cfg.plant {
        PlantModel::Cavity(p) => p,
        _ => unreachable!(),
    };
    let probe = |w: f64| -> Result<f64> {
        Ok(single_pass_response(&plant.single_pass, w)?.1.norm())
    };
    let step = fsr_w / 8.0;
    let mut w = fsr_w;
    let mut run_start: Option<f64> = None;
    let mut cut = st.hard_cap;
    while w < st.hard_cap {
        let quiet = probe(w)? < st.gc_tol && probe(-w)? < st.gc_tol;
        match (quiet, run_start) {
            (true, None) => run_start = Some(w),
            (true, Some(s)) => {
                if w - s >= fsr_w {
                    cut = w;
                    break;
                }
            }
            (false, _) => run_start = None,
        }
        w += step;
    }
    let cut = cut.min(st.hard_cap);
    // settle on the tamest sample within the last FSR below the cut
    let mut best = (f64::INFINITY, cut);
    let mut x = (cut - fsr_w).max(fsr_w);
    while x <= cut {
        let (la, _lc) = plant.internal_loop_gain(x)?;
        if la.norm() < best.0 {
            best = (la.norm(), x);
        }
        x += fsr_w / 64.0;
    }
    Ok(best.1)
}

// ---------------------------------------------------------------------------
// shared machinery

struct HalfAxisResult {
    winding: i64,
    min_dist: f64,
    depth: u32,
}

/// Grid over [0, truncation] with a geometric cluster at every multiple of
/// the FSR plus a uniform backbone.
fn clustered_grid(fsr_w: f64, truncation: f64, linewidth_frac: f64, backbone: usize) -> Vec<f64> {
    let n_fsr = (truncation / fsr_w).ceil() as usize;
    let centers: Vec<f64> = (1..=n_fsr).map(|k| k as f64 * fsr_w).collect();
    clustered_grid_at(&centers, fsr_w, truncation, linewidth_frac, backbone)
}

fn clustered_grid_at(
    centers: &[f64],
    fsr_w: f64,
    truncation: f64,
    linewidth_frac: f64,
    backbone: usize,
) -> Vec<f64> {
    let lw = linewidth_frac.clamp(1e-9, 0.2);
    let mut offsets = vec![0.0_f64];
    let mut x = lw / 4.0;
    while x < 0.5 {
        offsets.push(x);
        offsets.push(-x);
        x *= 1.6;
    }
    let mut grid: Vec<f64> = Vec::with_capacity(centers.len() * offsets.len() + backbone * 16);
    for &c in centers {
        for &o in &offsets {
            let w = c + o * fsr_w;
            if w > 0.0 && w <= truncation {
                grid.push(w);
            }
        }
    }
    // uniform backbone across the whole range, including omega = 0
    let n_fsr = (truncation / fsr_w).ceil().max(1.0) as usize;
    let n_uniform = backbone * n_fsr;
    for i in 0..=n_uniform {
        grid.push(truncation * i as f64 / n_uniform as f64);
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * fsr_w);
    grid
}

/// Angle accumulated by `f` about `point` over the sampled half axis,
/// refined adaptively until every segment satisfies the angle and magnitude
/// contracts; returns the full-axis winding using conjugate symmetry and the
/// slit-plane closure at infinity.
fn refined_half_axis_winding<F>(
    f: &F,
    point: C64,
    grid: &[f64],
    st: &StabilitySettings,
    evals: &mut usize,
) -> Result<HalfAxisResult>
where
    F: Fn(f64) -> Result<C64>,
{
    const MAG_CONTRACT: f64 = std::f64::consts::LN_2; // 6 dB in amplitude
    let angle_limit = 0.9; // strictly inside the pi/2 contract
    let scale = 1.0 + point.norm();

    let mut vals = Vec::with_capacity(grid.len());
    for &w in grid {
        vals.push(f(w)?);
    }
    *evals += grid.len();

    let mut total = 0.0_f64;
    let mut min_dist = f64::INFINITY;
    let mut depth = 0u32;

    let v0 = vals[0] - point;
    if v0.norm() <= 1e-12 * scale {
        return Err(CfsError::PointOnCurve {
            index: 0,
            distance: v0.norm(),
        });
    }
    min_dist = min_dist.min(v0.norm());

    // worklist of segments, processed in order; refined segments are pushed
    // back in place so accumulation stays ordered and deterministic
    let mut stack: Vec<(f64, C64, f64, C64, u32)> = Vec::with_capacity(256);
    for i in (1..vals.len()).rev() {
        stack.push((grid[i - 1], vals[i - 1], grid[i], vals[i], 0));
    }
    while let Some((w0, z0, w1, z1, d)) = stack.pop() {
        let a = z0 - point;
        let b = z1 - point;
        if b.norm() <= 1e-12 * scale {
            return Err(CfsError::PointOnCurve {
                index: 0,
                distance: b.norm(),
            });
        }
        let dang = (b / a).arg();
        let mag = (b.norm() / a.norm()).ln().abs();
        let too_close = w1 - w0 <= f64::EPSILON * w1.abs().max(1e-3);
        if (dang.abs() <= angle_limit && mag <= MAG_CONTRACT) || too_close {
            total += dang;
            min_dist = min_dist.min(b.norm());
            depth = depth.max(d);
            continue;
        }
        if *evals >= st.budget {
            return Err(CfsError::RefinementBudgetExceeded {
                budget: st.budget,
                used: *evals,
            });
        }
        let wm = 0.5 * (w0 + w1);
        let zm = f(wm)?;
        *evals += 1;
        stack.push((wm, zm, w1, z1, d + 1));
        stack.push((w0, z0, wm, zm, d + 1));
    }

    // conjugate symmetry doubles the half-axis contribution; the closure at
    // infinity joins the two truncated ends through the slit plane and
    // contributes the principal-argument difference
    let end = vals[vals.len() - 1] - point;
    let total_full = 2.0 * total - 2.0 * end.arg();
    Ok(HalfAxisResult {
        winding: (total_full / std::f64::consts::TAU).round() as i64,
        min_dist,
        depth,
    })
}

/// Winding of an arbitrary conjugate-symmetric locus about `point`:
/// `f` is sampled on `grid` (omega >= 0), refined under the angle and
/// magnitude contracts, doubled by symmetry, and closed at infinity through
/// the slit plane. Returns the signed winding and the minimum distance to
/// the point. `f` must satisfy `f(-w) = conj(f(w))`.
pub fn locus_winding<F>(
    f: F,
    point: C64,
    grid: &[f64],
    settings: &StabilitySettings,
) -> Result<(i64, f64)>
where
    F: Fn(f64) -> Result<C64>,
{
    let mut evals = 0usize;
    let r = refined_half_axis_winding(&f, point, grid, settings, &mut evals)?;
    Ok((r.winding, r.min_dist))
}

fn finish_verdict(
    winding: i64,
    min_dist: f64,
    depth: u32,
    truncation: f64,
    evals: usize,
    st: &StabilitySettings,
) -> Result<StabilityVerdict> {
    Ok(StabilityVerdict {
        stable: winding == 0,
        winding,
        precheck_dopo: true,
        min_distance_to_critical: min_dist,
        refinement_depth: depth,
        truncation_omega: truncation,
        marginal: min_dist < st.margin_disk,
        evaluations: evals,
    })
}

// ---------------------------------------------------------------------------
// Bode

/// One Bode sample of the x-quadrature loop gain: magnitude in dB, phase of
/// `-Lambda_x` wrapped to (-180, 180], plus the loop-propagation and plant
/// phase components.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BodePoint {
    pub omega: f64,
    pub magnitude_db: f64,
    pub phase_deg: f64,
    pub phase_loop_deg: f64,
    pub phase_plant_deg: f64,
}

/// Bode trace of the loop gain over `grid`.
pub fn bode_trace(cfg: &CfsConfig, grid: &[f64]) -> Result<Vec<BodePoint>> {
    precheck(cfg)?;
    let mut out = Vec::with_capacity(grid.len());
    for &w in grid {
        let lam = cfs_loop_gain_symmetric(cfg, w, Quadrature::X)?;
        let neg = -lam;
        let loop_phase = C64::from_polar(1.0, w * cfg.loop_tau());
        let plant_phase = match &cfg.plant {
            PlantModel::Langevin(p) => langevin_dopo_response(p, w, Quadrature::X)?.0,
            PlantModel::Cavity(p) => crate::plants::cavity_flat_gain(p, w, Quadrature::X)?,
        };
        out.push(BodePoint {
            omega: w,
            magnitude_db: 20.0 * lam.norm().log10(),
            phase_deg: neg.arg().to_degrees(),
            phase_loop_deg: loop_phase.arg().to_degrees(),
            phase_plant_deg: plant_phase.arg().to_degrees(),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// sensitivity

/// Upper bounds on the closed-loop sensitivity to a relative plant-gain
/// fluctuation `delta_G_rel`:
/// tight `= (1-R_f) / (1 + R_f + sqrt(R_f)(G + 1/G)) * delta`,
/// loose `= (1-R_f) / (1 + sqrt(R_f))^2 * delta`.
pub fn sensitivity_bound(g_q: f64, r_f: f64, delta_g_rel: f64) -> Result<(f64, f64)> {
    if !(g_q > 0.0) {
        return Err(CfsError::Domain("plant gain must be positive".into()));
    }
    if !(0.0..1.0).contains(&r_f) {
        return Err(CfsError::Domain(format!("R_f = {r_f} outside [0, 1)")));
    }
    if !(delta_g_rel >= 0.0) {
        return Err(CfsError::Domain("gain fluctuation must be >= 0".into()));
    }
    let s = r_f.sqrt();
    let tight = (1.0 - r_f) / (1.0 + r_f + s * (g_q + 1.0 / g_q)) * delta_g_rel;
    let loose = (1.0 - r_f) / ((1.0 + s) * (1.0 + s)) * delta_g_rel;
    Ok((tight, loose))
}
