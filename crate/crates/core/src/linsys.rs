//! Complex frequency-response algebra shared by the physics modules.
//!
//! The toolkit carries every two-photon response as a 2x2 complex matrix,
//! either in the annihilation/creation basis ([`AcMatrix`]) pairing the
//! coefficient of `A(w)` with the coefficient of `A^dag(-w)`, or in the
//! quadrature basis ([`QuadMatrix`]). The basis change is the similarity
//! transform by `J = 1/2 [[1, 1], [-i, i]]`, which preserves trace and
//! determinant.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CfsError, Result};

pub type C64 = Complex64;

/// 2x2 transfer matrix in the annihilation/creation basis at one frequency.
///
/// `aa` multiplies `A(w)`, `ac` multiplies `A^dag(-w)`. The mirror entries
/// are the conjugated responses evaluated at `-w`: `ca = conj(ac(-w))`,
/// `cc = conj(aa(-w))`. A response built from a single evaluator pair keeps
/// that consistency automatically (see [`AcResponse::ac_matrix`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcMatrix {
    pub aa: C64,
    pub ac: C64,
    pub ca: C64,
    pub cc: C64,
    /// Angular frequency offset from the carrier, rad/s.
    pub omega: f64,
}

/// 2x2 transfer matrix in the quadrature (x, p) basis at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadMatrix {
    pub xx: C64,
    pub xp: C64,
    pub px: C64,
    pub pp: C64,
    pub omega: f64,
}

impl AcMatrix {
    pub fn identity(omega: f64) -> Self {
        Self {
            aa: C64::new(1.0, 0.0),
            ac: C64::new(0.0, 0.0),
            ca: C64::new(0.0, 0.0),
            cc: C64::new(1.0, 0.0),
            omega,
        }
    }

    pub fn trace(&self) -> C64 {
        self.aa + self.cc
    }

    pub fn det(&self) -> C64 {
        self.aa * self.cc - self.ac * self.ca
    }
}

impl QuadMatrix {
    pub fn trace(&self) -> C64 {
        self.xx + self.pp
    }

    pub fn det(&self) -> C64 {
        self.xx * self.pp - self.xp * self.px
    }
}

/// A frequency response in the doubled (a, c) representation: the pair
/// `(G_a(w), G_c(w))`. Mirror entries come from evaluation at `-w`.
pub trait AcResponse {
    /// Returns `(G_a(omega), G_c(omega))`.
    fn eval_ac(&self, omega: f64) -> Result<(C64, C64)>;

    /// Assembles the full doubled matrix, evaluating at `-omega` for the
    /// conjugate-mirrored row.
    fn ac_matrix(&self, omega: f64) -> Result<AcMatrix> {
        let (aa, ac) = self.eval_ac(omega)?;
        let (am, cm) = self.eval_ac(-omega)?;
        Ok(AcMatrix {
            aa,
            ac,
            ca: cm.conj(),
            cc: am.conj(),
            omega,
        })
    }
}

/// Basis change J M J^-1 from (a, c) to quadratures. Total function;
/// preserves trace and determinant.
pub fn to_quadrature_basis(m: &AcMatrix) -> QuadMatrix {
    let half = C64::new(0.5, 0.0);
    let ihalf = C64::new(0.0, 0.5);
    QuadMatrix {
        xx: half * (m.aa + m.ac + m.ca + m.cc),
        xp: ihalf * (m.aa - m.ac + m.ca - m.cc),
        px: -ihalf * (m.aa + m.ac - m.ca - m.cc),
        pp: half * (m.aa - m.ac - m.ca + m.cc),
        omega: m.omega,
    }
}

/// Inverse basis change J^-1 Q J back to the (a, c) representation.
pub fn from_quadrature_basis(q: &QuadMatrix) -> AcMatrix {
    let half = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 1.0);
    AcMatrix {
        aa: half * (q.xx - i * q.xp + i * q.px + q.pp),
        ac: half * (q.xx + i * q.xp + i * q.px - q.pp),
        ca: half * (q.xx - i * q.xp - i * q.px - q.pp),
        cc: half * (q.xx + i * q.xp - i * q.px + q.pp),
        omega: q.omega,
    }
}

/// Checks the carrier-frequency symmetry `conj(f(-w)) = f(w)` on a grid.
///
/// When it holds, x and p dynamics decouple and the characteristic function
/// factorizes; the check routes configurations to the factorized or general
/// stability path.
pub fn check_symmetry<F>(f: F, grid: &[f64], tol: f64) -> Result<bool>
where
    F: Fn(f64) -> Result<C64>,
{
    if grid.is_empty() {
        return Err(CfsError::Domain("symmetry grid is empty".into()));
    }
    if !(tol > 0.0) {
        return Err(CfsError::Domain("symmetry tolerance must be > 0".into()));
    }
    for &w in grid {
        let plus = f(w)?;
        let minus = f(-w)?;
        let scale = 1.0_f64.max(plus.norm());
        if (minus.conj() - plus).norm() > tol * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of the rotation-squeezer-rotation factorization of a quadrature
/// matrix: `m = U(theta) diag(g_x, g_p) U(phi)` with `g_x >= g_p >= 0` and
/// `U` a rotation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SvdGain {
    pub theta: f64,
    pub g_x: f64,
    pub g_p: f64,
    pub phi: f64,
}

/// Singular-value gain decomposition of a 2x2 quadrature matrix.
///
/// The singular values come from the closed-form eigendecomposition of
/// `m m^H`; the larger one, `g_x`, is the reported gain. The factorization
/// with real rotations is exact for carrier-symmetric (real, det >= 0)
/// matrices; for complex input the angles are those of the closest rotations
/// to the singular-vector frames. Degenerate singular values return
/// `theta = 0`.
pub fn svd_gain(m: &QuadMatrix) -> SvdGain {
    let t = m.xx.norm_sqr() + m.xp.norm_sqr() + m.px.norm_sqr() + m.pp.norm_sqr();
    let d = m.det().norm_sqr();
    let disc = (t * t - 4.0 * d).max(0.0).sqrt();
    let g_x = ((t + disc) / 2.0).sqrt();
    let g_p = ((t - disc) / 2.0).max(0.0).sqrt();

    let scale = g_x.max(1e-300);
    if disc / (scale * scale) < 1e-12 {
        // degenerate singular values
        return SvdGain {
            theta: 0.0,
            g_x,
            g_p,
            phi: angle_of_closest_rotation(m.xx / scale, m.xp / scale, m.px / scale, m.pp / scale),
        };
    }

    let im_max = m
        .xx
        .im
        .abs()
        .max(m.xp.im.abs())
        .max(m.px.im.abs())
        .max(m.pp.im.abs());
    if im_max <= 1e-9 * scale {
        // real path: closed-form rotation SVD
        let (a, b, c, d2) = (m.xx.re, m.xp.re, m.px.re, m.pp.re);
        let e = 0.5 * (a + d2);
        let f = 0.5 * (a - d2);
        let g = 0.5 * (c + b);
        let h = 0.5 * (c - b);
        let a1 = g.atan2(f);
        let a2 = h.atan2(e);
        let theta = 0.5 * (a2 + a1);
        let phi = 0.5 * (a2 - a1);
        return SvdGain { theta, g_x, g_p, phi };
    }

    // complex path: angles from the closest real rotations to the
    // singular-vector frames of m m^H and m^H m.
    let theta = frame_angle(m.xx, m.xp, m.px, m.pp, g_x, true);
    let phi = frame_angle(m.xx, m.xp, m.px, m.pp, g_x, false);
    SvdGain { theta, g_x, g_p, phi }
}

fn frame_angle(xx: C64, xp: C64, px: C64, pp: C64, s: f64, left: bool) -> f64 {
    // leading eigenvector of m m^H (left) or m^H m (right) for eigenvalue s^2
    let (h11, h12, h22) = if left {
        (
            xx.norm_sqr() + xp.norm_sqr(),
            xx * px.conj() + xp * pp.conj(),
            px.norm_sqr() + pp.norm_sqr(),
        )
    } else {
        (
            xx.norm_sqr() + px.norm_sqr(),
            xx.conj() * xp + px.conj() * pp,
            xp.norm_sqr() + pp.norm_sqr(),
        )
    };
    let lam = s * s;
    // (H - lam I) v = 0 -> v = (h12, lam - h11) or (lam - h22, conj(h12))
    let v = if h12.norm() > 1e-30 {
        (h12, C64::new(lam - h11, 0.0))
    } else if h11 >= h22 {
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    };
    // strip the global phase so the first component is real >= 0
    let ph = if v.0.norm() > 1e-30 {
        v.0 / v.0.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let v1 = v.1 / ph;
    let n = (v.0.norm_sqr() + v1.norm_sqr()).sqrt();
    (v1.re / n).atan2(v.0.norm() / n)
}

fn angle_of_closest_rotation(a: C64, b: C64, c: C64, d: C64) -> f64 {
    (c.re - b.re).atan2(a.re + d.re)
}

/// Sampled complex trace: strictly increasing omegas, finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace {
    samples: Vec<(f64, C64)>,
    pub refinement_depth: u32,
    /// Truncation bounds (omega_min, omega_max) the trace covers.
    pub truncation: (f64, f64),
}

impl ComplexTrace {
    pub fn new(samples: Vec<(f64, C64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(CfsError::Domain("empty trace".into()));
        }
        for pair in samples.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(CfsError::Domain(
                    "trace omegas must be strictly increasing".into(),
                ));
            }
        }
        for &(w, z) in &samples {
            if !w.is_finite() || !z.re.is_finite() || !z.im.is_finite() {
                return Err(CfsError::Domain("trace contains non-finite values".into()));
            }
        }
        let truncation = (samples[0].0, samples[samples.len() - 1].0);
        Ok(Self {
            samples,
            refinement_depth: 0,
            truncation,
        })
    }

    pub fn samples(&self) -> &[(f64, C64)] {
        &self.samples
    }

    pub fn values(&self) -> impl Iterator<Item = C64> + '_ {
        self.samples.iter().map(|&(_, z)| z)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Maximum subtended angle allowed per polygon segment, rad.
pub const ANGLE_CONTRACT: f64 = std::f64::consts::FRAC_PI_2;

/// Relative distance below which a sample is considered to sit on the point.
pub const POINT_ON_CURVE_TOL: f64 = 1e-12;

/// Signed angle accumulated by an open polyline about `point`.
///
/// Enforces the refinement contract: every segment must subtend less than
/// pi/2 about the point, and no sample may coincide with it.
pub fn accumulated_angle(values: &[C64], point: C64) -> Result<f64> {
    let scale = 1.0 + point.norm();
    let mut total = 0.0;
    let mut prev = values
        .first()
        .copied()
        .ok_or_else(|| CfsError::Domain("empty trace".into()))?
        - point;
    if prev.norm() <= POINT_ON_CURVE_TOL * scale {
        return Err(CfsError::PointOnCurve {
            index: 0,
            distance: prev.norm(),
        });
    }
    for (i, &z) in values.iter().enumerate().skip(1) {
        let cur = z - point;
        if cur.norm() <= POINT_ON_CURVE_TOL * scale {
            return Err(CfsError::PointOnCurve {
                index: i,
                distance: cur.norm(),
            });
        }
        let dang = (cur / prev).arg();
        if dang.abs() >= ANGLE_CONTRACT {
            return Err(CfsError::RefinementRequired {
                index: i - 1,
                angle: dang.abs(),
            });
        }
        total += dang;
        prev = cur;
    }
    Ok(total)
}

/// Signed number of encirclements of `point` by the trace, treated as a
/// closed polygon (the segment from the last sample back to the first is
/// included and subject to the same angle contract).
pub fn winding_number(trace: &ComplexTrace, point: C64) -> Result<i64> {
    let values: Vec<C64> = trace.values().collect();
    let mut total = accumulated_angle(&values, point)?;
    let first = values[0] - point;
    let last = values[values.len() - 1] - point;
    let closing = (first / last).arg();
    if closing.abs() >= ANGLE_CONTRACT && (first - last).norm() > POINT_ON_CURVE_TOL {
        return Err(CfsError::RefinementRequired {
            index: values.len() - 1,
            angle: closing.abs(),
        });
    }
    total += closing;
    Ok((total / std::f64::consts::TAU).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_maps_to_identity() {
        let q = to_quadrature_basis(&AcMatrix::identity(0.0));
        assert_abs_diff_eq!(q.xx.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.pp.re, 1.0, epsilon = 1e-15);
        assert!(q.xp.norm() < 1e-15 && q.px.norm() < 1e-15);
    }

    #[test]
    fn real_squeezer_diagonalizes() {
        let r = 0.3_f64;
        let m = AcMatrix {
            aa: c(r.cosh(), 0.0),
            ac: c(r.sinh(), 0.0),
            ca: c(r.sinh(), 0.0),
            cc: c(r.cosh(), 0.0),
            omega: 0.0,
        };
        let q = to_quadrature_basis(&m);
        // hand product J M J^-1 for real symmetric M: diag(e^r, e^-r)
        assert_abs_diff_eq!(q.xx.re, 1.349_858_807_576_003, epsilon = 1e-12);
        assert_abs_diff_eq!(q.pp.re, 0.740_818_220_681_717_9, epsilon = 1e-12);
        assert!(q.xp.norm() < 1e-15 && q.px.norm() < 1e-15);
        assert!((q.trace() - m.trace()).norm() < 1e-14);
        assert!((q.det() - m.det()).norm() < 1e-14);
    }

    #[test]
    fn basis_round_trip() {
        let m = AcMatrix {
            aa: c(1.3, -0.4),
            ac: c(0.2, 0.9),
            ca: c(-0.7, 0.1),
            cc: c(0.5, 0.6),
            omega: 2.0,
        };
        let back = from_quadrature_basis(&to_quadrature_basis(&m));
        for (a, b) in [
            (m.aa, back.aa),
            (m.ac, back.ac),
            (m.ca, back.ca),
            (m.cc, back.cc),
        ] {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetry_detects_delay_and_dispersion() {
        let tau = 1e-9;
        let delay = |w: f64| Ok(C64::from_polar(1.0, w * tau));
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 1e8).collect();
        assert!(check_symmetry(delay, &grid, 1e-9).unwrap());

        let constant = |_: f64| Ok(c(0.7, 0.0));
        assert!(check_symmetry(constant, &grid, 1e-9).unwrap());

        // frequency-dependent index breaks the symmetry
        let n = |w: f64| 2.0 + 1e-16 * w;
        let disp = |w: f64| Ok(C64::from_polar(1.0, w * n(w) * 1e-2 / 3e8));
        let thz: Vec<f64> = vec![2.0 * std::f64::consts::PI * 1e12];
        assert!(!check_symmetry(disp, &thz, 1e-9).unwrap());
    }

    #[test]
    fn svd_of_diagonal_and_squeezer() {
        let q = QuadMatrix {
            xx: c(2.0, 0.0),
            xp: c(0.0, 0.0),
            px: c(0.0, 0.0),
            pp: c(0.5, 0.0),
            omega: 0.0,
        };
        let s = svd_gain(&q);
        assert_abs_diff_eq!(s.g_x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.g_p, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.phi, 0.0, epsilon = 1e-12);

        let r = 0.8_f64;
        let m = AcMatrix {
            aa: c(r.cosh(), 0.0),
            ac: c(r.sinh(), 0.0),
            ca: c(r.sinh(), 0.0),
            cc: c(r.cosh(), 0.0),
            omega: 0.0,
        };
        let s = svd_gain(&to_quadrature_basis(&m));
        assert_abs_diff_eq!(s.g_x, r.exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.g_p, (-r).exp(), epsilon = 1e-12);
    }

    #[test]
    fn svd_reconstructs_real_rotated_squeezer() {
        let (th, ph, gx, gp) = (0.4_f64, -1.1_f64, 3.0_f64, 0.2_f64);
        let rot = |t: f64| (t.cos(), -t.sin(), t.sin(), t.cos());
        let (u11, u12, u21, u22) = rot(th);
        let (v11, v12, v21, v22) = rot(ph);
        let q = QuadMatrix {
            xx: c(u11 * gx * v11 + u12 * gp * v21, 0.0),
            xp: c(u11 * gx * v12 + u12 * gp * v22, 0.0),
            px: c(u21 * gx * v11 + u22 * gp * v21, 0.0),
            pp: c(u21 * gx * v12 + u22 * gp * v22, 0.0),
            omega: 0.0,
        };
        let s = svd_gain(&q);
        assert_abs_diff_eq!(s.g_x, gx, epsilon = 1e-10);
        assert_abs_diff_eq!(s.g_p, gp, epsilon = 1e-10);
        // reconstruct
        let (a11, a12, a21, a22) = rot(s.theta);
        let (b11, b12, b21, b22) = rot(s.phi);
        let rec = [
            a11 * s.g_x * b11 + a12 * s.g_p * b21,
            a11 * s.g_x * b12 + a12 * s.g_p * b22,
            a21 * s.g_x * b11 + a22 * s.g_p * b21,
            a21 * s.g_x * b12 + a22 * s.g_p * b22,
        ];
        for (r, m) in rec.iter().zip([q.xx, q.xp, q.px, q.pp]) {
            assert_abs_diff_eq!(*r, m.re, epsilon = 1e-10);
        }
    }

    #[test]
    fn winding_of_circle() {
        let n = 256;
        let samples: Vec<(f64, C64)> = (0..n)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / n as f64;
                (k as f64, C64::from_polar(1.0, th))
            })
            .collect();
        let trace = ComplexTrace::new(samples).unwrap();
        assert_eq!(winding_number(&trace, c(0.0, 0.0)).unwrap(), 1);
        assert_eq!(winding_number(&trace, c(3.0, 0.0)).unwrap(), 0);
    }

    #[test]
    fn winding_of_lemniscate_lobes() {
        // Bernoulli lemniscate r^2 = cos(2t): each lobe is traversed once,
        // with opposite orientations seen from the two lobe centers.
        let n = 4096;
        let mut pts = Vec::new();
        for k in 0..n {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            let c2 = (2.0 * t).cos();
            if c2 > 1e-12 {
                let r = c2.sqrt();
                pts.push((k as f64, C64::from_polar(r, t)));
            }
        }
        // right lobe only (t near 0): closed curve around +0.7
        let right: Vec<(f64, C64)> = pts
            .iter()
            .filter(|&&(_, z)| z.re > 0.0)
            .cloned()
            .collect();
        let right_sorted = {
            let mut v = right;
            // re-index to keep omegas increasing
            v.iter_mut()
                .enumerate()
                .for_each(|(i, p)| p.0 = i as f64);
            v
        };
        let trace = ComplexTrace::new(right_sorted).unwrap();
        let w = winding_number(&trace, c(0.7, 0.0)).unwrap();
        assert_eq!(w.abs(), 1);
        assert_eq!(winding_number(&trace, c(-0.7, 0.0)).unwrap(), 0);
    }

    #[test]
    fn winding_requires_refinement_on_sparse_circle() {
        let samples: Vec<(f64, C64)> = (0..3)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / 3.0;
                (k as f64, C64::from_polar(1.0, th))
            })
            .collect();
        let trace = ComplexTrace::new(samples).unwrap();
        assert!(matches!(
            winding_number(&trace, c(0.0, 0.0)),
            Err(CfsError::RefinementRequired { .. })
        ));
    }

    #[test]
    fn point_on_curve_rejected() {
        let trace = ComplexTrace::new(vec![(0.0, c(1.0, 0.0)), (1.0, c(1.0, 1.0))]).unwrap();
        assert!(matches!(
            winding_number(&trace, c(1.0, 0.0)),
            Err(CfsError::PointOnCurve { .. })
        ));
    }
}
