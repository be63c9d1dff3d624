//! Front curves: the fold locus `g = det D(pr∘Φ) = 0` of the vertical
//! projection on a surface piece, its planar image and the per-`(m, n)`
//! metrics of the folding curves `γ_{m,n}`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::atlas::{Atlas, Surface};
use crate::geometry::{closest_point_and_angle, wrap_tau, Orientation, PlanarCurve, SpacePoint};
use crate::jet::FramedJet;
use crate::{LabError, Result};

/// Target tangent turn per continuation step.
pub const TURN_TARGET: f64 = 3.0 * PI / 180.0;
/// Steps are rejected beyond this turn.
const TURN_LIMIT: f64 = 4.5 * PI / 180.0;
/// Largest accepted `|g|` (normalized) at a fold point.
pub const RESIDUAL_MAX: f64 = 1e-11;
/// Minimum step, relative to the window, before the tracer gives up.
pub const MIN_STEP: f64 = 1e-6;
const MAX_POINTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldPoint {
    pub param: [f64; 2],
    pub space: SpacePoint,
    /// `pr` of the point in the inner frame of the piece.
    pub inner: Complex64,
    /// Unit parameter direction of the fold, oriented along the curve.
    pub direction: [f64; 2],
    /// `J_h·direction` in the inner frame.
    pub velocity: Complex64,
    /// Signed curvature of the folding curve in the inner frame.
    pub curvature: f64,
    /// `|g|`, normalized by the tangent column norms.
    pub residual: f64,
}

/// Fold points in curve order. Absolute planar coordinates are
/// `zf·inner`; the orientation follows the sample order, chosen so that
/// the fold runs towards increasing `v` at the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldCurve {
    pub label: String,
    pub points: Vec<FoldPoint>,
    pub zf: Complex64,
    pub orientation: Orientation,
    /// Clipping radius the curve was trimmed to.
    pub window: f64,
}

impl FoldCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The front curve `γ̃`.
    pub fn front(&self) -> Vec<SpacePoint> {
        self.points.iter().map(|p| p.space).collect()
    }

    /// The folding curve `γ = pr(γ̃)` with exact curvature attached.
    pub fn planar(&self) -> Result<PlanarCurve> {
        let scale = self.zf.norm();
        let mut pts = Vec::with_capacity(self.points.len());
        let mut tan = Vec::with_capacity(self.points.len());
        let mut kap = Vec::with_capacity(self.points.len());
        for p in &self.points {
            let z = self.zf * p.inner;
            if pts.last() == Some(&z) {
                continue;
            }
            pts.push(z);
            tan.push(self.zf * p.velocity);
            kap.push(p.curvature / scale);
        }
        PlanarCurve::new(pts, tan, self.orientation)?.with_curvature(kap)
    }

    pub fn residual_max(&self) -> f64 {
        self.points.iter().fold(0.0f64, |a, p| a.max(p.residual))
    }

    /// Largest `|κ|` in absolute coordinates over points with `|z| ≤ radius`.
    pub fn max_curvature_within(&self, radius: f64) -> f64 {
        let scale = self.zf.norm();
        self.points
            .iter()
            .filter(|p| scale * p.inner.norm() <= radius * (1.0 + 1e-12))
            .fold(0.0f64, |a, p| a.max(p.curvature.abs() / scale))
    }
}

/// Options of [`fold_locus_in`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Start the continuation here instead of scanning for a seed.
    pub seed: Option<[f64; 2]>,
    /// Trim at `|z| = window` (absolute chart coordinates).
    pub window: Option<f64>,
    /// Largest step as a fraction of the window.
    pub max_step: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            seed: None,
            window: None,
            max_step: 1.0 / 50.0,
        }
    }
}

/// Traces the fold of `pr` on the piece to its boundary in both directions.
pub fn fold_locus<S: Surface + ?Sized>(s: &S, label: &str) -> Result<FoldCurve> {
    fold_locus_in(s, label, TraceOptions::default())
}

pub fn fold_locus_in<S: Surface + ?Sized>(
    s: &S,
    label: &str,
    opts: TraceOptions,
) -> Result<FoldCurve> {
    let window = match (opts.window, s.clip_radius()) {
        (Some(w), Some(c)) => w.min(c),
        (Some(w), None) => w,
        (None, Some(c)) => c,
        (None, None) => f64::INFINITY,
    };
    let (_, bound) = s.bounds();
    let tracer = Tracer { s, window };
    let seed = match opts.seed {
        Some(p) => {
            let (p, j) = tracer.correct(p)?;
            if !tracer.inside(p, &j) {
                return Err(LabError::NoFold);
            }
            (p, j)
        }
        None => tracer.find_seed()?,
    };
    let (p0, j0) = seed;
    let mut first = fold_point(p0, &j0, None)?;
    if first.direction[1] < 0.0 || (first.direction[1] == 0.0 && first.direction[0] < 0.0) {
        first = flip(first);
    }
    let zf = j0.zf;
    // Inner planar length scale of the window.
    let length = if window.is_finite() {
        window / zf.norm()
    } else {
        bound * first.velocity.norm()
    };
    let limits = StepLimits {
        max: opts.max_step * length,
        min: MIN_STEP * opts.max_step * length,
        trim: 1e-12 * length,
    };
    let back = tracer.trace(flip(first), &limits)?;
    let ahead = tracer.trace(first, &limits)?;
    let mut points: Vec<FoldPoint> = back.into_iter().rev().map(flip).collect();
    points.push(first);
    points.extend(ahead);
    Ok(FoldCurve {
        label: String::from(label),
        points,
        zf,
        orientation: Orientation::AlongSamples,
        window,
    })
}

fn flip(mut p: FoldPoint) -> FoldPoint {
    p.direction = [-p.direction[0], -p.direction[1]];
    p.velocity = -p.velocity;
    p.curvature = -p.curvature;
    p
}

/// Builds the fold point at `p`, orienting along `prev` when given.
fn fold_point(p: [f64; 2], j: &FramedJet, prev: Option<[f64; 2]>) -> Result<FoldPoint> {
    let inner = &j.inner;
    let grad = inner.fold_gradient();
    let n = grad[0].hypot(grad[1]);
    if !(n > 0.0 && n.is_finite()) {
        return Err(LabError::DegenerateFold { u: p[0], v: p[1] });
    }
    let mut tau = [-grad[1] / n, grad[0] / n];
    if let Some(d) = prev {
        if tau[0] * d[0] + tau[1] * d[1] < 0.0 {
            tau = [-tau[0], -tau[1]];
        }
    }
    let v = inner.push(tau);
    let velocity = Complex64::new(v[0], v[1]);
    let jh = inner.horizontal_jacobian();
    let jnorm = jh.iter().flatten().fold(0.0f64, |a, x| a.hypot(*x));
    if velocity.norm() <= 1e-10 * jnorm {
        return Err(LabError::DegenerateFold { u: p[0], v: p[1] });
    }
    let acc = inner.second_along(tau);
    let cross = velocity.re * acc[1] - velocity.im * acc[0];
    Ok(FoldPoint {
        param: p,
        space: j.point(),
        inner: inner.z(),
        direction: tau,
        velocity,
        curvature: cross / velocity.norm().powi(3),
        residual: j.fold_value().abs(),
    })
}

struct StepLimits {
    max: f64,
    min: f64,
    trim: f64,
}

struct Tracer<'a, S: Surface + ?Sized> {
    s: &'a S,
    window: f64,
}

impl<S: Surface + ?Sized> Tracer<'_, S> {
    fn inside(&self, p: [f64; 2], j: &FramedJet) -> bool {
        self.s.in_domain(p) && j.z_norm() <= self.window
    }

    /// Newton projection onto `g = 0` along `∇g`.
    fn correct(&self, mut p: [f64; 2]) -> Result<([f64; 2], FramedJet)> {
        let mut j = self.s.jet(p)?;
        for _ in 0..40 {
            let val = j.fold_value();
            if val.abs() < 1e-15 {
                return Ok((p, j));
            }
            let g = j.inner.fold_det();
            let gr = j.inner.fold_gradient();
            let n2 = gr[0] * gr[0] + gr[1] * gr[1];
            if !(n2 > 0.0 && n2.is_finite()) {
                return Err(LabError::DegenerateFold { u: p[0], v: p[1] });
            }
            let k = g / n2;
            let step = [k * gr[0], k * gr[1]];
            p = [p[0] - step[0], p[1] - step[1]];
            j = self.s.jet(p)?;
            let size = step[0].hypot(step[1]);
            if size <= 1e-15 * (p[0].hypot(p[1]) + size) || size == 0.0 {
                break;
            }
        }
        let residual = j.fold_value().abs();
        if residual < RESIDUAL_MAX {
            Ok((p, j))
        } else {
            Err(LabError::NewtonFailed { residual })
        }
    }

    /// Sign changes of `g` along lines `v = const`, refined by bisection.
    /// Lines are tried outward from the center; the seed closest to the
    /// chart origin on the first successful line wins.
    fn find_seed(&self) -> Result<([f64; 2], FramedJet)> {
        let (c, r) = self.s.bounds();
        const LINES: i32 = 8;
        const SAMPLES: usize = 256;
        for k in 0..LINES {
            for sign in [1.0, -1.0] {
                if k == 0 && sign < 0.0 {
                    continue;
                }
                let v = c[1] + sign * r * k as f64 / LINES as f64;
                let mut prev: Option<(f64, f64)> = None;
                let mut best: Option<([f64; 2], FramedJet)> = None;
                for i in 0..=SAMPLES {
                    let u = c[0] - r + 2.0 * r * i as f64 / SAMPLES as f64;
                    let val = match self.sample(u, v) {
                        Some(x) => x,
                        None => {
                            prev = None;
                            continue;
                        }
                    };
                    if let Some((pu, pv)) = prev {
                        if pv == 0.0 || pv.signum() != val.signum() {
                            if let Some(found) = self.bisect(pu, pv, u, v) {
                                let closer = best
                                    .as_ref()
                                    .map(|b| found.1.z_norm() < b.1.z_norm())
                                    .unwrap_or(true);
                                if closer {
                                    best = Some(found);
                                }
                            }
                        }
                    }
                    prev = Some((u, val));
                }
                if let Some(b) = best {
                    return Ok(b);
                }
            }
        }
        Err(LabError::NoFold)
    }

    fn sample(&self, u: f64, v: f64) -> Option<f64> {
        let p = [u, v];
        if !self.s.in_domain(p) {
            return None;
        }
        let j = self.s.jet(p).ok()?;
        if j.z_norm() > self.window {
            return None;
        }
        Some(j.fold_value())
    }

    fn bisect(&self, mut lo: f64, flo: f64, mut hi: f64, v: f64) -> Option<([f64; 2], FramedJet)> {
        let slo = flo.signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f = self.sample(mid, v)?;
            if f == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if f.signum() == slo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (p, j) = self.correct([0.5 * (lo + hi), v]).ok()?;
        self.inside(p, &j).then_some((p, j))
    }

    fn trace(&self, start: FoldPoint, lim: &StepLimits) -> Result<Vec<FoldPoint>> {
        let mut out = Vec::new();
        let mut cur = start;
        loop {
            if out.len() > MAX_POINTS {
                return Err(LabError::domain("fold continuation did not reach the boundary"));
            }
            let speed = cur.velocity.norm();
            let mut ds = lim.max;
            if cur.curvature != 0.0 {
                ds = ds.min(TURN_TARGET / cur.curvature.abs());
            }
            loop {
                if ds < lim.min {
                    return Err(LabError::DegenerateFold {
                        u: cur.param[0],
                        v: cur.param[1],
                    });
                }
                let h = ds / speed;
                let pred = [
                    cur.param[0] + h * cur.direction[0],
                    cur.param[1] + h * cur.direction[1],
                ];
                if !self.s.in_domain(pred) {
                    return self.finish(out, cur, ds, lim);
                }
                let corrected = match self.correct(pred) {
                    Ok(x) => x,
                    Err(LabError::WordDomain { .. }) | Err(LabError::ChartExit) => {
                        return self.finish(out, cur, ds, lim);
                    }
                    Err(_) => {
                        ds *= 0.5;
                        continue;
                    }
                };
                let (p, j) = corrected;
                if !self.inside(p, &j) {
                    return self.finish(out, cur, ds, lim);
                }
                let next = fold_point(p, &j, Some(cur.direction))?;
                let turn = (cur.velocity.conj() * next.velocity).arg().abs();
                let jump = (next.inner - cur.inner).norm();
                if turn > TURN_LIMIT || jump > 2.0 * ds {
                    ds *= 0.5;
                    continue;
                }
                out.push(next);
                cur = next;
                break;
            }
        }
    }

    /// Bisects the last step against the boundary and appends the trimmed
    /// end point.
    fn finish(
        &self,
        mut out: Vec<FoldPoint>,
        cur: FoldPoint,
        ds: f64,
        lim: &StepLimits,
    ) -> Result<Vec<FoldPoint>> {
        let speed = cur.velocity.norm();
        let (mut lo, mut hi) = (0.0, ds);
        let mut last: Option<FoldPoint> = None;
        while hi - lo > lim.trim {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let h = mid / speed;
            let pred = [
                cur.param[0] + h * cur.direction[0],
                cur.param[1] + h * cur.direction[1],
            ];
            let ok = if self.s.in_domain(pred) {
                match self.correct(pred) {
                    Ok((p, j)) if self.inside(p, &j) => Some(fold_point(p, &j, Some(cur.direction))?),
                    _ => None,
                }
            } else {
                None
            };
            match ok {
                Some(fp) => {
                    lo = mid;
                    last = Some(fp);
                }
                None => hi = mid,
            }
        }
        if let Some(fp) = last {
            out.push(fp);
        }
        Ok(out)
    }
}

/// `(φ, ∂φ/∂t, ∂²φ/∂t²)` of the piece written as `x = φ(y, t)` in the
/// output frame of `G` (rotated by `−β`), at a parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangencyReport {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_tt: f64,
    pub quadratic: bool,
}

pub fn verify_quadratic_tangency<S: Surface + ?Sized>(
    s: &S,
    at: [f64; 2],
    out_angle: f64,
) -> Result<TangencyReport> {
    let j = s.jet(at)?;
    let rot = Complex64::from_polar(1.0, -out_angle);
    let frame = j.inner.similarity(rot, Complex64::new(0.0, 0.0), 1.0, 0.0);
    let graph = frame.implicit_graph([1, 2], 0).ok_or(LabError::NotAGraph)?;
    let phi = graph.value;
    let phi_t = graph.grad[1];
    let phi_tt = graph.hess[1][1];
    Ok(TangencyReport {
        phi,
        phi_t,
        phi_tt,
        quadratic: phi.abs() <= 1e-10 && phi_t.abs() <= 1e-10 && phi_tt.abs() > 1e-6,
    })
}

/// `γ_{m,n} = (re^{iθ})^n·γ_m`, exactly in the plane.
pub fn rotated_fold(gamma: &PlanarCurve, multiplier: Complex64, n: i32) -> PlanarCurve {
    if n == 0 {
        return gamma.clone();
    }
    gamma.transformed(multiplier.powi(n), false)
}

/// Closest fold point to the chart origin, refined on the exact fold by
/// Gauss-Newton along the curve.
pub fn exact_foot<S: Surface + ?Sized>(s: &S, curve: &FoldCurve, a: f64) -> Result<FoldPoint> {
    let planar = curve.planar()?;
    let cp = closest_point_and_angle(&planar, a)?;
    let i = cp.segment.min(curve.points.len() - 1);
    let k = (i + 1).min(curve.points.len() - 1);
    let (p0, p1) = (curve.points[i].param, curve.points[k].param);
    let guess = [
        p0[0] + cp.fraction * (p1[0] - p0[0]),
        p0[1] + cp.fraction * (p1[1] - p0[1]),
    ];
    let tracer = Tracer {
        s,
        window: f64::INFINITY,
    };
    let dir = curve.points[i].direction;
    let (p, j) = tracer.correct(guess)?;
    let mut fp = fold_point(p, &j, Some(dir))?;
    for _ in 0..60 {
        let z = fp.inner;
        let v = fp.velocity;
        let f = z.re * v.re + z.im * v.im;
        let step = -f / v.norm_sqr();
        if (step * v.norm()).abs() <= 1e-15 * z.norm() {
            break;
        }
        let h = step;
        let pred = [
            fp.param[0] + h * fp.direction[0],
            fp.param[1] + h * fp.direction[1],
        ];
        let (p, j) = tracer.correct(pred)?;
        fp = fold_point(p, &j, Some(fp.direction))?;
    }
    Ok(fp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldMetrics {
    pub m: i32,
    pub n: i32,
    pub d: f64,
    pub c: Complex64,
    pub theta: f64,
    pub kappa: f64,
    pub residual_max: f64,
}

impl FoldMetrics {
    /// `m,n,d_mn,theta_mn,kappa_mn,cx,cy,residual_max`.
    pub fn row(&self) -> [f64; 8] {
        [
            self.m as f64,
            self.n as f64,
            self.d,
            self.theta,
            self.kappa,
            self.c.re,
            self.c.im,
            self.residual_max,
        ]
    }
}

/// The folding curve of `H̃_m` with its exact foot point.
#[derive(Debug, Clone, PartialEq)]
pub struct BentFold {
    pub m: i32,
    pub curve: FoldCurve,
    pub foot: FoldPoint,
}

impl BentFold {
    pub fn distance(&self) -> f64 {
        (self.curve.zf * self.foot.inner).norm()
    }

    pub fn angle(&self) -> f64 {
        let v = self.curve.zf * self.foot.velocity;
        wrap_tau(v.im.atan2(v.re))
    }
}

pub fn bent_fold(atlas: &Atlas, m: i32) -> Result<BentFold> {
    let piece = atlas.bent_disk(m)?;
    let curve = fold_locus(&piece, &piece.label)?;
    let foot = exact_foot(&piece, &curve, atlas.spec.local.a)?;
    Ok(BentFold { m, curve, foot })
}

/// `bent_fold` for every `m`, in order.
pub fn bent_folds(atlas: &Atlas, ms: &[i32]) -> Result<Vec<BentFold>> {
    ms.iter().map(|&m| bent_fold(atlas, m)).collect()
}

/// The piece of `γ_m` inside `D(a·r^{−n})`, traced from the foot point.
pub fn window_fold(atlas: &Atlas, bent: &BentFold, n: i32) -> Result<FoldCurve> {
    let piece = atlas.bent_disk(bent.m)?;
    let radius = atlas.spec.local.a * atlas.spec.local.r.powi(-n);
    if bent.distance() >= radius {
        return Err(LabError::ChartExit);
    }
    fold_locus_in(
        &piece,
        &piece.label,
        TraceOptions {
            seed: Some(bent.foot.param),
            window: Some(radius),
            ..TraceOptions::default()
        },
    )
}

/// Metrics of `γ_{m,n}` for one `m` and all requested `n`.
pub fn fold_metrics_for(atlas: &Atlas, m: i32, ns: &[i32]) -> Result<Vec<FoldMetrics>> {
    fold_metrics_from(atlas, &bent_fold(atlas, m)?, ns)
}

/// `fold_metrics_for` with the folding curve already traced.
pub fn fold_metrics_from(atlas: &Atlas, bent: &BentFold, ns: &[i32]) -> Result<Vec<FoldMetrics>> {
    let m = bent.m;
    let local = &atlas.spec.local;
    let mult = local.multiplier();
    let d0 = bent.distance();
    let c0 = bent.curve.zf * bent.foot.inner;
    let v0 = bent.curve.zf * bent.foot.velocity;
    let mut traces = Vec::with_capacity(ns.len());
    let mut kappa0 = bent.curve.max_curvature_within(local.a);
    for &n in ns {
        let curve = if n == 0 {
            bent.curve.clone()
        } else {
            window_fold(atlas, bent, n)?
        };
        let k = curve.max_curvature_within(local.a * local.r.powi(-n));
        kappa0 = kappa0.max(k);
        traces.push((n, k, curve.residual_max()));
    }
    Ok(traces
        .into_iter()
        .map(|(n, k, res)| {
            let k = if n == 0 { kappa0 } else { k };
            FoldMetrics {
                m,
                n,
                d: d0 * local.r.powi(n),
                c: c0 * mult.powi(n),
                theta: {
                    let v = mult.powi(n) * v0;
                    wrap_tau(v.im.atan2(v.re))
                },
                kappa: k * local.r.powi(-n),
                residual_max: res.max(bent.curve.residual_max()),
            }
        })
        .collect())
}

/// Per-`m` estimates `d_{m,0}/λ^m` of `d̃₀t̃₀` with the change from the
/// previous `m` as residual.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub rows: Vec<FoldMetrics>,
    pub constants: Vec<(i32, f64, f64)>,
}

pub fn fold_metrics(atlas: &Atlas, ms: &[i32], ns: &[i32]) -> Result<MetricsTable> {
    let mut rows = Vec::new();
    for &m in ms {
        rows.extend(fold_metrics_for(atlas, m, ns)?);
    }
    Ok(tabulate(atlas, rows))
}

/// Attaches the fitted constants to precomputed rows.
pub fn tabulate(atlas: &Atlas, rows: Vec<FoldMetrics>) -> MetricsTable {
    let lambda = atlas.spec.local.lambda;
    let mut constants: Vec<(i32, f64, f64)> = Vec::new();
    for r in rows.iter().filter(|r| r.n == 0) {
        let value = r.d / lambda.powi(r.m);
        let residual = constants
            .last()
            .map(|&(_, prev, _)| (value - prev).abs())
            .unwrap_or(f64::NAN);
        constants.push((r.m, value, residual));
    }
    MetricsTable { rows, constants }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::initial_sheet;
    use crate::model::SystemSpec;

    #[test]
    fn initial_sheet_fold_is_the_y_axis() {
        let s = SystemSpec::default();
        let h = initial_sheet(&s);
        let f = fold_locus(&h, "H~").unwrap();
        assert!(f.len() > 10);
        for p in &f.points {
            assert!(p.residual < RESIDUAL_MAX);
            assert!(p.space.z.re.abs() < 1e-14, "{:?}", p.space);
            assert!((p.space.t - s.global.t0).abs() < 1e-14);
            assert!(p.curvature.abs() < 1e-12);
        }
        // oriented towards increasing y
        assert!(f.points.last().unwrap().space.z.im > f.points[0].space.z.im);
        let r = s.global.patch_radius;
        assert!((f.points[0].space.z.im + r).abs() < 1e-10);
        assert!((f.points.last().unwrap().space.z.im - r).abs() < 1e-10);
    }

    #[test]
    fn tangency_at_q() {
        let s = SystemSpec::default();
        let t = verify_quadratic_tangency(&initial_sheet(&s), [0.0, 0.0], 0.0).unwrap();
        assert_eq!((t.phi, t.phi_t, t.phi_tt), (0.0, 0.0, 2.0));
        assert!(t.quadratic);
    }

    #[test]
    fn rotation_by_zero_is_identity() {
        let c = PlanarCurve::from_points(
            alloc::vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0)],
            Orientation::AlongSamples,
        )
        .unwrap();
        assert_eq!(rotated_fold(&c, Complex64::new(1.0, 1.0), 0), c);
    }
}
