//! Conjugacy candidates for model pairs: recovery of the linear conformal
//! map, transport of limit segments, equivariance, angle differences and
//! verdicts from moduli mismatches.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::atlas::Atlas;
use crate::fold::window_fold;
use crate::geometry::{wrap_pi, wrap_tau, OrientedSegment, SpacePoint};
use crate::model::{ExactConjugacy, Handedness, SystemSpec};
use crate::moduli::{
    a0_bound, estimate_moduli, parallel_family, xi_family, Estimate, FoldProvider,
    ModuliConfig, ModuliEstimate, SegmentFamily, SubsequencePlan,
};
use crate::{LabError, Result};

/// `z ↦ ρe^{iω}z`, or `z ↦ ρe^{iω}z̄` when reversing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConformalMap {
    pub rho: f64,
    pub omega: f64,
    pub handedness: Handedness,
}

impl LinearConformalMap {
    pub fn identity() -> Self {
        LinearConformalMap {
            rho: 1.0,
            omega: 0.0,
            handedness: Handedness::Preserving,
        }
    }

    pub fn from_exact(e: &ExactConjugacy) -> Self {
        LinearConformalMap {
            rho: e.rho,
            omega: wrap_pi(e.omega),
            handedness: e.handedness,
        }
    }

    pub fn factor(&self) -> Complex64 {
        Complex64::from_polar(self.rho, self.omega)
    }

    pub fn mirror(&self) -> bool {
        self.handedness == Handedness::Reversing
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        if self.mirror() {
            self.factor() * z.conj()
        } else {
            self.factor() * z
        }
    }

    /// Image of a direction angle.
    pub fn apply_angle(&self, a: f64) -> f64 {
        if self.mirror() {
            wrap_tau(self.omega - a)
        } else {
            wrap_tau(self.omega + a)
        }
    }

    pub fn apply_segment(&self, s: &OrientedSegment) -> OrientedSegment {
        s.transformed(self.factor(), self.mirror())
    }

    /// Distance to another map in `(ρ, ω)`.
    pub fn distance(&self, other: &LinearConformalMap) -> f64 {
        (self.rho - other.rho)
            .abs()
            .max(wrap_pi(self.omega - other.omega).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Violated,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Violated => "violated",
        }
    }
}

/// Relative floor added to every error bar, for float noise.
pub const MODULI_FLOOR: f64 = 1e-9;
/// Absolute tolerance on cross-ratios.
pub const CROSS_RATIO_TOL: f64 = 1e-8;

fn differ(a: &Option<Estimate>, b: &Option<Estimate>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => {
            let tol = a.half_width + b.half_width + MODULI_FLOOR * a.value.abs().max(b.value.abs());
            (a.value - b.value).abs() > tol
        }
        _ => false,
    }
}

/// `θ̂` branch: `Some(Preserving)` for `θ' = θ`, `Some(Reversing)` for
/// `θ' = −θ`, `None` when neither holds.
pub fn theta_branch(a: &Estimate, b: &Estimate) -> Option<Handedness> {
    let tol = a.half_width + b.half_width + MODULI_FLOOR;
    if wrap_pi(a.value - b.value).abs() <= tol {
        Some(Handedness::Preserving)
    } else if wrap_pi(a.value + b.value).abs() <= tol {
        Some(Handedness::Reversing)
    } else {
        None
    }
}

/// Residuals of the geometric checks of a pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairResiduals {
    /// Parallel family `γ_k♮`, per `k`.
    pub transport_parallel: Vec<f64>,
    /// `ξ_k♮`, per `k`.
    pub transport_xi: Vec<f64>,
    pub equivariance: Option<f64>,
    pub angle_differences: Option<f64>,
    pub orthogonality: Option<f64>,
    pub cross_ratio: Option<f64>,
    /// Distance of the recovered candidate to the exact conjugacy.
    pub candidate_error: Option<f64>,
    pub epsilon: Option<EpsilonReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub moduli: (ModuliEstimate, ModuliEstimate),
    pub verdict: Verdict,
    /// Every differing modulus, in the order `λ, r, θ, ratio, cross_ratio`.
    pub violated: Vec<String>,
    pub candidate: Option<LinearConformalMap>,
    pub residuals: PairResiduals,
    pub notes: Vec<String>,
}

impl PairReport {
    pub fn violated_modulus(&self) -> Option<&str> {
        self.violated.first().map(|s| s.as_str())
    }
}

/// Verdict from the moduli alone. Consistency is only non-refutation.
pub fn compare_moduli(a: &ModuliEstimate, b: &ModuliEstimate) -> PairReport {
    let mut violated = Vec::new();
    if differ(&a.lambda_hat, &b.lambda_hat) {
        violated.push(String::from("lambda"));
    }
    if differ(&a.r_hat, &b.r_hat) {
        violated.push(String::from("r"));
    }
    let branch = match (&a.theta_hat, &b.theta_hat) {
        (Some(x), Some(y)) => {
            let br = theta_branch(x, y);
            if br.is_none() {
                violated.push(String::from("theta"));
            }
            br
        }
        _ => None,
    };
    if differ(&a.ratio_hat, &b.ratio_hat) {
        violated.push(String::from("ratio"));
    }
    let mut cross = None;
    if let (Some(x), Some(y), Some(br)) = (a.cross_ratio, b.cross_ratio, branch) {
        let x = if br == Handedness::Reversing { x.conj() } else { x };
        let d = (x - y).norm();
        cross = Some(d);
        if d > CROSS_RATIO_TOL {
            violated.push(String::from("cross_ratio"));
        }
    }
    PairReport {
        moduli: (a.clone(), b.clone()),
        verdict: if violated.is_empty() {
            Verdict::Consistent
        } else {
            Verdict::Violated
        },
        violated,
        candidate: None,
        residuals: PairResiduals {
            cross_ratio: cross,
            ..PairResiduals::default()
        },
        notes: Vec::new(),
    }
}

/// The candidate `h` with `h(q) = q'`, handedness from the `θ̂` branch.
/// Refuses when the moduli differ.
pub fn recover_conjugacy(
    f: &SystemSpec,
    g: &SystemSpec,
    ef: &ModuliEstimate,
    eg: &ModuliEstimate,
) -> Result<LinearConformalMap> {
    let report = compare_moduli(ef, eg);
    if let Some(m) = report.violated_modulus() {
        return Err(LabError::NoCandidate {
            modulus: String::from(m),
        });
    }
    let handedness = match (&ef.theta_hat, &eg.theta_hat) {
        (Some(a), Some(b)) => theta_branch(a, b).unwrap_or(Handedness::Preserving),
        _ => Handedness::Preserving,
    };
    Ok(forced_candidate(f, g, handedness))
}

/// `h` from the tangency points alone, without any moduli check.
pub fn forced_candidate(f: &SystemSpec, g: &SystemSpec, handedness: Handedness) -> LinearConformalMap {
    let (q, q2) = (f.global.q, g.global.q);
    let omega = match handedness {
        Handedness::Preserving => q2.arg() - q.arg(),
        Handedness::Reversing => q2.arg() + q.arg(),
    };
    LinearConformalMap {
        rho: q2.norm() / q.norm(),
        omega: wrap_pi(omega),
        handedness,
    }
}

/// Compares `h(s)` clipped to `D_{a'}` with `s'`; `flip` adds `π` to the
/// transported direction.
pub fn segment_residual(h: &LinearConformalMap, s: &OrientedSegment, s2: &OrientedSegment, a2: f64, flip: bool) -> f64 {
    let hs = h.apply_segment(s);
    let da = wrap_pi(hs.angle() + if flip { PI } else { 0.0 } - s2.angle());
    (hs.foot() - s2.foot()).norm() + a2 * da.abs()
}

/// Whether `h` reverses the fold orientation, decided on one pair.
pub fn orientation_flip(h: &LinearConformalMap, s: &OrientedSegment, s2: &OrientedSegment) -> bool {
    wrap_pi(h.apply_segment(s).angle() - s2.angle()).abs() > FRAC_PI_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportReport {
    pub parallel: Vec<f64>,
    pub xi: Vec<f64>,
    pub flip: bool,
    pub tolerance: f64,
}

impl TransportReport {
    pub fn check(&self) -> Result<()> {
        for (k, r) in self.parallel.iter().chain(&self.xi).enumerate() {
            if r.is_nan() || *r > self.tolerance {
                return Err(LabError::TransportViolated { k, residual: *r });
            }
        }
        Ok(())
    }
}

/// Transport of the families of `f` by `h` onto the independently computed
/// families of `f'` at the same indices.
pub fn verify_segment_transport(
    h: &LinearConformalMap,
    fams: (&SegmentFamily, &SegmentFamily),
    xis: (&SegmentFamily, &SegmentFamily),
    a2: f64,
    tolerance: f64,
) -> TransportReport {
    let (p, p2) = fams;
    let flip = match (p.segments.first(), p2.segments.first()) {
        (Some(a), Some(b)) => orientation_flip(h, &a.segment, &b.segment),
        _ => false,
    };
    let res = |x: &SegmentFamily, y: &SegmentFamily| -> Vec<f64> {
        x.segments
            .iter()
            .zip(&y.segments)
            .map(|(s, t)| segment_residual(h, &s.segment, &t.segment, a2, flip))
            .collect()
    };
    TransportReport {
        parallel: res(p, p2),
        xi: res(xis.0, xis.1),
        flip,
        tolerance,
    }
}

/// Largest angular residual of `h(R_θ^n l) = R_{θ'}^n l'`, `n = 0..=n_max`,
/// as oriented diameters.
pub fn verify_equivariance(
    h: &LinearConformalMap,
    diameters: (f64, f64),
    thetas: (f64, f64),
    flip: bool,
    n_max: u32,
) -> f64 {
    let off = if flip { PI } else { 0.0 };
    (0..=n_max)
        .map(|n| {
            let a = h.apply_angle(diameters.0 + n as f64 * thetas.0) + off;
            let b = diameters.1 + n as f64 * thetas.1;
            wrap_pi(a - b).abs()
        })
        .fold(0.0, f64::max)
}

/// Angles `(ϑ(l₁), ϑ(l₂))` and the primed `(ϑ(l₁'), ϑ(l₂'))`.
pub type AnglePair = ((f64, f64), (f64, f64));

/// Largest violation of `ϑ(l₂) − ϑ(l₁) = ±(ϑ(l₂') − ϑ(l₁'))` over matched
/// diameter pairs; the sign is `−` for reversing maps.
pub fn verify_angle_differences(
    h: &LinearConformalMap,
    pairs: &[AnglePair],
) -> f64 {
    let sign = if h.mirror() { -1.0 } else { 1.0 };
    pairs
        .iter()
        .map(|&((a1, a2), (b1, b2))| wrap_pi(sign * (a2 - a1) - (b2 - b1)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport {
    pub holds: bool,
    /// Largest distance at the last index.
    pub margin: f64,
    /// Largest distance per index `j`.
    pub trend: Vec<f64>,
    /// `ε` lies below the float noise of the comparison.
    pub below_noise: bool,
}

/// `L^n` of a space point.
fn iterate(s: &SystemSpec, p: SpacePoint, n: i32) -> SpacePoint {
    let (m, l) = s.local.power(n);
    SpacePoint {
        z: m * p.z,
        t: l * p.t,
    }
}

fn point_polyline_distance(p: SpacePoint, poly: &[SpacePoint]) -> f64 {
    let a = p.to_array();
    poly.windows(2)
        .map(|w| {
            let x = w[0].to_array();
            let y = w[1].to_array();
            let d = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
            let r = [a[0] - x[0], a[1] - x[1], a[2] - x[2]];
            let dd = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            let t = if dd > 0.0 {
                ((r[0] * d[0] + r[1] * d[1] + r[2] * d[2]) / dd).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let e = [r[0] - t * d[0], r[1] - t * d[1], r[2] - t * d[2]];
            (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Float noise of a comparison at unit scale.
pub const EPSILON_NOISE: f64 = 1e-12;

/// `Φ(γ̃_{m_j,n_j})` against `γ̃'_{m_j,n_j}` for the last `j_count` members
/// of the plan, measured by the chart distance to the sampled front curve.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_neighborhood_check(
    phi: &ExactConjugacy,
    f: &Atlas,
    g: &Atlas,
    plan: &SubsequencePlan,
    j_count: usize,
    eps: f64,
    folds_f: &FoldProvider,
    folds_g: &FoldProvider,
) -> Result<EpsilonReport> {
    let k = plan.pairs.len();
    if j_count == 0 || j_count > k {
        return Err(LabError::OutOfRange { index: j_count });
    }
    let mut trend = Vec::new();
    for &(m, n) in &plan.pairs[k - j_count..] {
        let bf = folds_f(&[m])?;
        let bg = folds_g(&[m])?;
        let cf = window_fold(f, &bf[0], n)?;
        let cg = window_fold(g, &bg[0], n)?;
        let front_g: Vec<SpacePoint> = cg.front().into_iter().map(|p| iterate(&g.spec, p, n)).collect();
        let worst = cf
            .front()
            .into_iter()
            .map(|p| phi.apply(iterate(&f.spec, p, n)))
            .filter(|p| p.z.norm() <= g.spec.local.a)
            .map(|p| point_polyline_distance(p, &front_g))
            .fold(0.0, f64::max);
        trend.push(worst);
    }
    let margin = *trend.last().expect("non-empty");
    let below_noise = eps < EPSILON_NOISE * g.spec.local.a;
    Ok(EpsilonReport {
        holds: !below_noise && margin < eps,
        margin,
        trend,
        below_noise,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairConfig {
    pub moduli: ModuliConfig,
    pub k_parallel: u32,
    pub k_xi: u32,
    pub n_equivariance: u32,
    pub epsilon: f64,
    pub epsilon_j: usize,
    /// Transport tolerance relative to `a'`.
    pub transport_tol: f64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            moduli: ModuliConfig::default(),
            k_parallel: 5,
            k_xi: 4,
            n_equivariance: 50,
            epsilon: 1e-3,
            epsilon_j: 3,
            transport_tol: 1e-6,
        }
    }
}

/// Full pair pipeline: moduli, verdict, candidate, and the geometric checks
/// (run only when the moduli are consistent).
pub fn analyze_pair(
    f: &Atlas,
    g: &Atlas,
    exact: Option<&ExactConjugacy>,
    cfg: &PairConfig,
    folds_f: &FoldProvider,
    folds_g: &FoldProvider,
) -> PairReport {
    let ef = estimate_moduli(f, &cfg.moduli, folds_f);
    let eg = estimate_moduli(g, &cfg.moduli, folds_g);
    let mut report = compare_moduli(&ef, &eg);
    if report.verdict == Verdict::Violated {
        return report;
    }
    let h = match recover_conjugacy(&f.spec, &g.spec, &ef, &eg) {
        Ok(h) => h,
        Err(e) => {
            report.notes.push(format!("candidate: {e}"));
            return report;
        }
    };
    report.candidate = Some(h);
    if let Some(e) = exact {
        report.residuals.candidate_error = Some(h.distance(&LinearConformalMap::from_exact(e)));
    }
    if let Err(e) = geometric_checks(f, g, &h, exact, cfg, &ef, folds_f, folds_g, &mut report) {
        report.notes.push(format!("geometry: {e}"));
    }
    report
}

#[allow(clippy::too_many_arguments)]
fn geometric_checks(
    f: &Atlas,
    g: &Atlas,
    h: &LinearConformalMap,
    exact: Option<&ExactConjugacy>,
    cfg: &PairConfig,
    ef: &ModuliEstimate,
    folds_f: &FoldProvider,
    folds_g: &FoldProvider,
    report: &mut PairReport,
) -> Result<()> {
    let plan = ef.plan.as_ref().ok_or(LabError::NoCandidate {
        modulus: String::from("ratio"),
    })?;
    let a2 = g.spec.local.a;
    let pf = parallel_family(f, plan, cfg.k_parallel, folds_f)?;
    let pg = parallel_family(g, plan, cfg.k_parallel, folds_g)?;
    let a0 = a0_bound(&[
        (f.spec.local.lambda, f.spec.local.r),
        (g.spec.local.lambda, g.spec.local.r),
    ]);
    let xf = xi_family(f, plan, cfg.k_xi, a0, folds_f)?;
    let xg = xi_family(g, plan, cfg.k_xi, a0, folds_g)?;
    let t = verify_segment_transport(h, (&pf, &pg), (&xf, &xg), a2, cfg.transport_tol * a2);
    report.residuals.transport_parallel = t.parallel.clone();
    report.residuals.transport_xi = t.xi.clone();
    if t.flip {
        report
            .notes
            .push(String::from("fold orientations aligned by a half turn"));
    }
    if let Err(e) = t.check() {
        report.notes.push(format!("transport: {e}"));
    }

    // Limit diameters: the direction shared by the parallel family.
    let lf = pf.segments.last().map(|s| s.angle()).unwrap_or(0.0);
    let lg = pg.segments.last().map(|s| s.angle()).unwrap_or(0.0);
    let thetas = (f.spec.local.theta, g.spec.local.theta);
    report.residuals.equivariance = Some(verify_equivariance(h, (lf, lg), thetas, t.flip, cfg.n_equivariance));

    // Matched diameters from the rotation orbits and the ξ ladder.
    let off = if t.flip { PI } else { 0.0 };
    let orbit = |l: f64, th: f64, n: u32| l + n as f64 * th;
    let mut pairs = Vec::new();
    for i in 0..10u32 {
        let (n1, n2) = ((3 * i) % 17, (7 * i + 5) % 23);
        pairs.push((
            (orbit(lf, thetas.0, n1), orbit(lf, thetas.0, n2)),
            (orbit(lg, thetas.1, n1) - off, orbit(lg, thetas.1, n2) - off),
        ));
    }
    for (s, s2) in xf.segments.iter().zip(&xg.segments) {
        pairs.push(((lf, s.angle()), (lg, s2.angle())));
    }
    report.residuals.angle_differences = Some(verify_angle_differences(h, &pairs));

    // α ⟂ ξ₀♮ in f, carried by h; the right angle must persist.
    if let (Some(x), Some(x2)) = (xf.segments.first(), xg.segments.first()) {
        let alpha = x.angle() - FRAC_PI_2;
        let alpha2 = h.apply_angle(alpha) + off;
        let want = if h.mirror() { -FRAC_PI_2 } else { FRAC_PI_2 };
        report.residuals.orthogonality = Some(wrap_pi(x2.angle() - alpha2 - want).abs());
    }

    if let Some(phi) = exact {
        let j = cfg.epsilon_j.min(plan.pairs.len());
        report.residuals.epsilon = Some(epsilon_neighborhood_check(
            phi, f, g, plan, j, cfg.epsilon, folds_f, folds_g,
        )?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_candidate() {
        let s = SystemSpec::default();
        let h = forced_candidate(&s, &s, Handedness::Preserving);
        assert_eq!(h, LinearConformalMap::identity());
    }

    #[test]
    fn mirror_angles() {
        let h = LinearConformalMap {
            rho: 2.0,
            omega: 0.5,
            handedness: Handedness::Reversing,
        };
        let z = Complex64::from_polar(1.0, 0.3);
        assert!((h.apply(z).arg() - 0.2).abs() < 1e-15);
        assert!((h.apply_angle(0.3) - 0.2).abs() < 1e-15);
        let pairs = [((0.1, 0.4), (h.apply_angle(0.1), h.apply_angle(0.4)))];
        assert!(verify_angle_differences(&h, &pairs) < 1e-15);
    }

    #[test]
    fn equal_diameters_have_zero_difference() {
        let h = LinearConformalMap::identity();
        assert_eq!(verify_angle_differences(&h, &[((0.7, 0.7), (1.2, 1.2))]), 0.0);
        assert_eq!(verify_equivariance(&h, (0.3, 0.3), (1.0, 1.0), false, 0), 0.0);
    }
}
