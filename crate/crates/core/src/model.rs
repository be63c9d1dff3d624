//! The saddle-focus model: a linear chart map `L(z, t) = (re^{iθ}z, λt)`
//! and one polynomial transition `G` carrying `q` to `q̂ = (0, t0)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{wrap_pi, SpacePoint};
use crate::jet::{Jet2, MapJet};
use crate::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleFocusParams {
    pub r: f64,
    pub theta: f64,
    pub lambda: f64,
    pub a: f64,
}

impl SaddleFocusParams {
    /// `re^{iθ}`.
    pub fn multiplier(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }

    /// `(re^{iθ})^k` and `λ^k`.
    pub fn power(&self, k: i32) -> (Complex64, f64) {
        (
            Complex64::from_polar(self.r.powi(k), self.theta * k as f64),
            self.lambda.powi(k),
        )
    }
}

/// Coefficients of the transition
/// `X = cu² + duv + ev² + eps·s, Y = v, T = t0 + t_gain·u`, with
/// `u + iv = (z − q)e^{−i arg q}`, `s = t`, output `(e^{iβ}(X + iY), T)`.
///
/// `out_angle` (β) and `t_gain` are 0 and 1 for the normal form; other
/// values arise from conformal changes of chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalMapParams {
    pub q: Complex64,
    pub t0: f64,
    pub c: f64,
    pub eps: f64,
    pub d: f64,
    pub e: f64,
    pub patch_radius: f64,
    pub out_angle: f64,
    pub t_gain: f64,
}

/// `n0`, `u`, `j`, `m0`; a zero `u` or `m0` asks for automatic selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripIntegers {
    pub n0: u32,
    pub u: u32,
    pub j: u32,
    pub m0: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub local: SaddleFocusParams,
    pub global: GlobalMapParams,
    pub trips: TripIntegers,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            local: SaddleFocusParams {
                r: 1.5,
                theta: 1.0,
                lambda: 0.4,
                a: 1.0,
            },
            global: GlobalMapParams {
                q: Complex64::new(0.5, 0.0),
                t0: 0.5,
                c: 1.0,
                eps: -1.0,
                d: 0.0,
                e: 0.0,
                patch_radius: 0.2,
                out_angle: 0.0,
                t_gain: 1.0,
            },
            trips: TripIntegers {
                n0: 8,
                u: 0,
                j: 0,
                m0: 0,
            },
        }
    }
}

/// `L^k(p)`; negative `k` applies the inverse.
pub fn local_map(s: &SystemSpec, p: SpacePoint, k: i32) -> SpacePoint {
    let (m, l) = s.local.power(k);
    SpacePoint { z: m * p.z, t: l * p.t }
}

impl GlobalMapParams {
    /// `e^{−i arg q}`.
    pub fn frame(&self) -> Complex64 {
        self.q.conj() / self.q.norm()
    }

    /// `(u, v, s)` of a chart point.
    pub fn to_local(&self, p: SpacePoint) -> [f64; 3] {
        let w = (p.z - self.q) * self.frame();
        [w.re, w.im, p.t]
    }

    pub fn from_local(&self, l: [f64; 3]) -> SpacePoint {
        SpacePoint {
            z: self.q + Complex64::new(l[0], l[1]) * self.frame().conj(),
            t: l[2],
        }
    }

    pub fn in_patch(&self, l: [f64; 3]) -> bool {
        l[0].hypot(l[1]) <= self.patch_radius * (1.0 + 1e-12)
    }

    pub fn fold_polynomial(&self, u: f64, v: f64) -> f64 {
        self.c * u * u + self.d * u * v + self.e * v * v
    }

    /// `G` in local input coordinates, without domain check.
    pub fn apply_local(&self, l: [f64; 3]) -> SpacePoint {
        let [u, v, s] = l;
        let x = self.fold_polynomial(u, v) + self.eps * s;
        SpacePoint {
            z: Complex64::from_polar(1.0, self.out_angle) * Complex64::new(x, v),
            t: self.t0 + self.t_gain * u,
        }
    }

    /// `G⁻¹` to local coordinates.
    pub fn inverse_local(&self, p: SpacePoint) -> [f64; 3] {
        let w = p.z * Complex64::from_polar(1.0, -self.out_angle);
        let u = (p.t - self.t0) / self.t_gain;
        let v = w.im;
        [u, v, (w.re - self.fold_polynomial(u, v)) / self.eps]
    }

    /// 2-jet of `G` with respect to local coordinates.
    pub fn local_jet(&self, l: [f64; 3]) -> MapJet {
        let [u, v, _] = l;
        let out = self.apply_local(l);
        let rot = Complex64::from_polar(1.0, self.out_angle);
        let dx = [2.0 * self.c * u + self.d * v, self.d * u + 2.0 * self.e * v, self.eps];
        let hx = [
            [2.0 * self.c, self.d, 0.0],
            [self.d, 2.0 * self.e, 0.0],
            [0.0; 3],
        ];
        // rows of the rotated pair (X, Y)
        let mut d1 = [[0.0; 3]; 3];
        let mut d2 = [[[0.0; 3]; 3]; 3];
        for k in 0..3 {
            let dy = if k == 1 { 1.0 } else { 0.0 };
            d1[0][k] = rot.re * dx[k] - rot.im * dy;
            d1[1][k] = rot.im * dx[k] + rot.re * dy;
            for l2 in 0..3 {
                d2[0][k][l2] = rot.re * hx[k][l2];
                d2[1][k][l2] = rot.im * hx[k][l2];
            }
        }
        d1[2][0] = self.t_gain;
        MapJet {
            value: [out.z.re, out.z.im, out.t],
            d1,
            d2,
        }
    }

    /// Composes a jet given in local coordinates with `G`.
    pub fn apply_jet_local(&self, j: &Jet2) -> Jet2 {
        j.compose(&self.local_jet(j.value))
    }

    /// Composes a jet given in absolute chart coordinates with `G`.
    pub fn apply_jet(&self, j: &Jet2) -> Jet2 {
        let f = self.frame();
        let local = j.similarity(f, -self.q * f, 1.0, 0.0);
        self.apply_jet_local(&local)
    }

    /// Second derivative of the graph function of `G({t = 0})` along `T`.
    pub fn phi_tt(&self) -> f64 {
        2.0 * self.c / (self.t_gain * self.t_gain)
    }
}

/// `G(p)`; errors outside the patch around `q`.
pub fn global_map(s: &SystemSpec, p: SpacePoint) -> Result<SpacePoint> {
    let l = s.global.to_local(p);
    if !s.global.in_patch(l) {
        return Err(LabError::domain("point outside the G patch"));
    }
    Ok(s.global.apply_local(l))
}

/// `G⁻¹(p)`; errors when the preimage leaves the patch.
pub fn global_map_inverse(s: &SystemSpec, p: SpacePoint) -> Result<SpacePoint> {
    let l = s.global.inverse_local(p);
    if !s.global.in_patch(l) {
        return Err(LabError::domain("preimage outside the G patch"));
    }
    Ok(s.global.from_local(l))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// `(φ, ∂φ/∂t, ∂²φ/∂t²)` of `G({t = 0})` at `q̂`.
    pub tangency: [f64; 3],
    /// `(u, v)` with `θ/2π ≡ v/u`, when numerically rational.
    pub rational: Option<(u64, u64)>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Best rational approximation `p/q` of `x` with `q ≤ max_den` within `tol`,
/// by continued fractions.
pub fn rational_approximation(x: f64, max_den: u64, tol: f64) -> Option<(u64, u64)> {
    let x = x.abs();
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut rem = x;
    for _ in 0..64 {
        let a = rem.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = rem - a as f64;
        if frac <= 0.0 {
            break;
        }
        rem = 1.0 / frac;
    }
    None
}

/// `(u, v)`: the rotation `θ/2π mod 1` equals `v/u` in lowest terms.
pub fn rotation_signature(theta: f64) -> Option<(u64, u64)> {
    let x = theta / TAU - (theta / TAU).floor();
    let (p, q) = rational_approximation(x, 1_000_000, 1e-12)?;
    Some((q, p % q))
}

/// Graph jet of `G({t = 0})` at `q`: `(φ, ∂φ/∂t, ∂²φ/∂t²)` for `x = φ(y, t)`
/// in the frame rotated by `−β`.
fn tangency_jet(g: &GlobalMapParams) -> Option<[f64; 3]> {
    let base = Jet2::base_plane([g.q.re, g.q.im]);
    let j = g.apply_jet(&base).similarity(
        Complex64::from_polar(1.0, -g.out_angle),
        Complex64::new(0.0, 0.0),
        1.0,
        0.0,
    );
    let gj = j.implicit_graph([1, 2], 0)?;
    Some([gj.value, gj.grad[1], gj.hess[1][1]])
}

pub fn validate_params(s: &SystemSpec) -> ValidationReport {
    let mut checks = Vec::new();
    let mut add = |name: &'static str, passed: bool, detail: String| {
        checks.push(Check {
            name,
            passed,
            detail,
        })
    };
    let l = &s.local;
    let g = &s.global;
    let finite = [l.r, l.theta, l.lambda, l.a, g.q.re, g.q.im, g.t0, g.c, g.eps, g.d, g.e]
        .iter()
        .chain([g.patch_radius, g.out_angle, g.t_gain].iter())
        .all(|v| v.is_finite());
    add("finite", finite, String::from("all parameters finite"));
    add("expansion", l.r > 1.0, format!("r = {}", l.r));
    add(
        "contraction",
        l.lambda > 0.0 && l.lambda < 1.0,
        format!("lambda = {}", l.lambda),
    );
    add("chart_radius", l.a > 0.0, format!("a = {}", l.a));
    let reduced = wrap_pi(l.theta);
    add(
        "non_real_eigenvalues",
        reduced.abs() > 1e-12 && (reduced.abs() - PI).abs() > 1e-12,
        format!("theta = {} (mod 2pi: {})", l.theta, reduced),
    );
    add("tangency_point", g.q.norm() > 0.0, format!("|q| = {}", g.q.norm()));
    add(
        "patch_inside_chart",
        g.patch_radius > 0.0 && g.q.norm() + g.patch_radius < l.a,
        format!("|q| + patch = {}", g.q.norm() + g.patch_radius),
    );
    add(
        "stable_height",
        g.t0 > 0.0 && g.t0 < l.a,
        format!("t0 = {}", g.t0),
    );
    add("shear", g.eps != 0.0, format!("eps = {}", g.eps));
    add("t_gain", g.t_gain > 0.0, format!("t_gain = {}", g.t_gain));
    add(
        "n0",
        s.trips.n0 > 0,
        format!("n0 = {}", s.trips.n0),
    );

    let tangency = if finite && g.q.norm() > 0.0 && g.t_gain != 0.0 {
        tangency_jet(g).unwrap_or([f64::NAN; 3])
    } else {
        [f64::NAN; 3]
    };
    let image = s.global.apply_local([0.0, 0.0, 0.0]);
    let at_qhat = (image.z.norm() + (image.t - g.t0).abs()) < 1e-12;
    add(
        "tangency_conditions",
        at_qhat && tangency[0].abs() < 1e-12 && tangency[1].abs() < 1e-12,
        format!("phi = {:e}, phi_t = {:e}", tangency[0], tangency[1]),
    );
    add(
        "quadratic_tangency",
        g.c != 0.0 && tangency[2].abs() > 0.0 && tangency[2].is_finite(),
        format!("phi_tt = {}", tangency[2]),
    );
    let rational = if l.theta.is_finite() {
        rotation_signature(l.theta)
    } else {
        None
    };
    ValidationReport {
        checks,
        tangency,
        rational,
    }
}

/// Whether the local stable curve `G⁻¹(t-axis)`, whose height is
/// `−cτ²/eps`, lies on the same side of `{t = 0}` as the forward orbit of `q̂`.
pub fn check_positively_associated(s: &SystemSpec) -> bool {
    let g = &s.global;
    -g.c / g.eps > 0.0 && g.t0 > 0.0
}

/// A point of the local stable curve `κ = G⁻¹(t-axis)` at parameter `τ`.
pub fn stable_curve_point(s: &SystemSpec, tau: f64) -> SpacePoint {
    let g = &s.global;
    g.from_local([tau, 0.0, -g.c * tau * tau / g.eps])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Handedness {
    Preserving,
    Reversing,
}

/// `Φ(z, t) = (ρe^{iω}z, μt)`, or with `z̄` when reversing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConjugacy {
    pub rho: f64,
    pub omega: f64,
    pub mu: f64,
    pub handedness: Handedness,
}

impl ExactConjugacy {
    pub fn factor(&self) -> Complex64 {
        Complex64::from_polar(self.rho, self.omega)
    }

    pub fn apply(&self, p: SpacePoint) -> SpacePoint {
        let z = match self.handedness {
            Handedness::Preserving => p.z,
            Handedness::Reversing => p.z.conj(),
        };
        SpacePoint {
            z: self.factor() * z,
            t: self.mu * p.t,
        }
    }

    pub fn inverse(&self, p: SpacePoint) -> SpacePoint {
        let z = p.z / self.factor();
        let z = match self.handedness {
            Handedness::Preserving => z,
            Handedness::Reversing => z.conj(),
        };
        SpacePoint {
            z,
            t: p.t / self.mu,
        }
    }
}

/// The system `Φ∘f∘Φ⁻¹` together with `Φ`.
pub fn make_conjugate_system(
    s: &SystemSpec,
    rho: f64,
    omega: f64,
    mu: f64,
    handedness: Handedness,
) -> Result<(SystemSpec, ExactConjugacy)> {
    if !(rho > 0.0 && rho.is_finite() && mu > 0.0 && mu.is_finite() && omega.is_finite()) {
        return Err(LabError::domain("conjugacy needs rho > 0, mu > 0"));
    }
    let g = &s.global;
    let mut out = *s;
    out.local.a = rho * s.local.a;
    out.global.patch_radius = rho * g.patch_radius;
    out.global.c = g.c / rho;
    out.global.e = g.e / rho;
    out.global.eps = rho * g.eps / mu;
    out.global.t0 = mu * g.t0;
    out.global.t_gain = mu * g.t_gain / rho;
    let rot = Complex64::from_polar(rho, omega);
    match handedness {
        Handedness::Preserving => {
            out.global.q = rot * g.q;
            out.global.d = g.d / rho;
            out.global.out_angle = wrap_pi(g.out_angle + omega);
        }
        Handedness::Reversing => {
            out.local.theta = -s.local.theta;
            out.global.q = rot * g.q.conj();
            out.global.d = -g.d / rho;
            out.global.out_angle = wrap_pi(omega - g.out_angle);
        }
    }
    let g2 = &out.global;
    if g2.q.norm() + g2.patch_radius >= out.local.a || g2.t0 >= out.local.a {
        return Err(LabError::domain("conjugate system leaves its chart"));
    }
    Ok((
        out,
        ExactConjugacy {
            rho,
            omega,
            mu,
            handedness,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> SystemSpec {
        SystemSpec::default()
    }

    #[test]
    fn local_map_formula() {
        let mut s = defaults();
        s.local.r = 2.0;
        s.local.theta = PI;
        s.local.lambda = 0.5;
        let p = local_map(&s, SpacePoint::new(1.0, 0.0, 0.4), 1);
        assert!((p.z - Complex64::new(-2.0, 0.0)).norm() < 1e-15);
        assert_eq!(p.t, 0.2);
        let p0 = SpacePoint::new(0.3, -0.2, 0.7);
        assert_eq!(local_map(&s, p0, 0), p0);
    }

    #[test]
    fn local_map_semigroup() {
        let s = defaults();
        let p = SpacePoint::new(0.3, -0.2, 0.7);
        let mut q = p;
        for _ in 0..3 {
            q = local_map(&s, q, 1);
        }
        assert!(q.distance(&local_map(&s, p, 3)) < 1e-15);
        assert!(local_map(&s, local_map(&s, p, 4), -4).distance(&p) < 1e-15);
    }

    #[test]
    fn global_map_examples() {
        let s = defaults();
        let p = global_map(&s, SpacePoint::new(0.6, 0.1, 0.0)).unwrap();
        assert!(p.distance(&SpacePoint::new(0.01, 0.1, 0.6)) < 1e-15);
        let qhat = global_map(&s, SpacePoint::new(0.5, 0.0, 0.0)).unwrap();
        assert_eq!(qhat, SpacePoint::new(0.0, 0.0, 0.5));
        assert!(global_map(&s, SpacePoint::new(0.9, 0.0, 0.0)).is_err());
    }

    #[test]
    fn defaults_validate() {
        let rep = validate_params(&defaults());
        assert!(rep.is_ok(), "{:?}", rep.failures().collect::<Vec<_>>());
        assert!(rep.tangency[0].abs() < 1e-15);
        assert!(rep.tangency[1].abs() < 1e-15);
        assert!((rep.tangency[2] - 2.0).abs() < 1e-14);
        assert_eq!(rep.rational, None);
    }

    #[test]
    fn degenerate_fold_fails() {
        let mut s = defaults();
        s.global.c = 0.0;
        let rep = validate_params(&s);
        assert!(!rep.check("quadratic_tangency").unwrap().passed);
    }

    #[test]
    fn rational_rotation_detected() {
        let mut s = defaults();
        s.local.theta = TAU / 5.0;
        assert_eq!(validate_params(&s).rational, Some((5, 1)));
        assert_eq!(rotation_signature(-TAU / 5.0), Some((5, 4)));
        assert_eq!(rotation_signature(TAU * 3.0 / 7.0), Some((7, 3)));
    }

    #[test]
    fn association_sign() {
        let mut s = defaults();
        assert!(check_positively_associated(&s));
        s.global.eps = 1.0;
        assert!(!check_positively_associated(&s));
    }

    #[test]
    fn identity_conjugacy() {
        let s = defaults();
        let (s2, phi) = make_conjugate_system(&s, 1.0, 0.0, 1.0, Handedness::Preserving).unwrap();
        assert_eq!(s2, s);
        let p = SpacePoint::new(0.1, 0.2, 0.3);
        assert_eq!(phi.apply(p), p);
    }

    #[test]
    fn conjugate_too_tall_is_refused() {
        let s = defaults();
        assert!(make_conjugate_system(&s, 1.0, 0.0, 3.0, Handedness::Preserving).is_err());
    }
}
