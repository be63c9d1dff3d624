//! Planar and spatial primitives: slopes, curvature, closest points,
//! direction angles, rotation numbers and curve distances.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{LabError, Result};

/// A point `(z, t)` of the linearizing chart, `z = x + iy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacePoint {
    pub z: Complex64,
    pub t: f64,
}

impl SpacePoint {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        SpacePoint {
            z: Complex64::new(x, y),
            t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.z.re.is_finite() && self.z.im.is_finite() && self.t.is_finite()
    }

    pub fn distance(&self, other: &SpacePoint) -> f64 {
        let dz = self.z - other.z;
        let dt = self.t - other.t;
        (dz.norm_sqr() + dt * dt).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.z.re, self.z.im, self.t]
    }
}

/// Angle reduced to `[0, 2π)`.
pub fn wrap_tau(angle: f64) -> f64 {
    let w = angle - TAU * (angle / TAU).floor();
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Angle reduced to `(-π, π]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let w = wrap_tau(angle);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// `|v₃| / |(v₁, v₂)|`.
pub fn absolute_slope(v: [f64; 3]) -> Result<f64> {
    let horizontal = v[0].hypot(v[1]);
    if horizontal == 0.0 {
        return Err(LabError::domain("absolute slope of a vertical vector"));
    }
    Ok(v[2].abs() / horizontal)
}

pub fn max_absolute_slope(samples: &[[f64; 3]]) -> Result<f64> {
    if samples.is_empty() {
        return Err(LabError::domain("no tangent samples"));
    }
    samples
        .iter()
        .try_fold(0.0f64, |acc, v| Ok(acc.max(absolute_slope(*v)?)))
}

/// Whether the curve is traversed in sample order or against it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    AlongSamples,
    AgainstSamples,
}

/// An oriented sampled curve in the plane. Tangents always point in the
/// direction of the orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCurve {
    points: Vec<Complex64>,
    tangents: Vec<Complex64>,
    curvature: Option<Vec<f64>>,
    orientation: Orientation,
}

impl PlanarCurve {
    pub fn new(
        points: Vec<Complex64>,
        tangents: Vec<Complex64>,
        orientation: Orientation,
    ) -> Result<Self> {
        if points.len() < 2 {
            return Err(LabError::domain("a planar curve needs at least 2 samples"));
        }
        if tangents.len() != points.len() {
            return Err(LabError::domain("one tangent per sample is required"));
        }
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(LabError::domain("consecutive samples coincide"));
        }
        let mut unit = Vec::with_capacity(tangents.len());
        for t in tangents {
            let n = t.norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err(LabError::domain("zero or non-finite tangent"));
            }
            unit.push(t / n);
        }
        Ok(PlanarCurve {
            points,
            tangents: unit,
            curvature: None,
            orientation,
        })
    }

    /// Builds tangents from central differences of the samples.
    pub fn from_points(points: Vec<Complex64>, orientation: Orientation) -> Result<Self> {
        if points.len() < 2 {
            return Err(LabError::domain("a planar curve needs at least 2 samples"));
        }
        let n = points.len();
        let sign = match orientation {
            Orientation::AlongSamples => 1.0,
            Orientation::AgainstSamples => -1.0,
        };
        let tangents = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                (points[hi] - points[lo]) * sign
            })
            .collect();
        PlanarCurve::new(points, tangents, orientation)
    }

    /// Attaches exact per-sample signed curvature (e.g. from surface jets).
    pub fn with_curvature(mut self, curvature: Vec<f64>) -> Result<Self> {
        if curvature.len() != self.points.len() {
            return Err(LabError::domain("one curvature value per sample is required"));
        }
        self.curvature = Some(curvature);
        Ok(self)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn tangents(&self) -> &[Complex64] {
        &self.tangents
    }

    pub fn curvature(&self) -> Option<&[f64]> {
        self.curvature.as_deref()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cumulative chord length along the samples.
    pub fn arc_lengths(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.points.len());
        let mut acc = 0.0;
        s.push(0.0);
        for w in self.points.windows(2) {
            acc += (w[1] - w[0]).norm();
            s.push(acc);
        }
        s
    }

    /// Rows `(s, x, y, tx, ty)`.
    pub fn rows(&self) -> Vec<[f64; 5]> {
        self.arc_lengths()
            .into_iter()
            .zip(self.points.iter().zip(&self.tangents))
            .map(|(s, (p, t))| [s, p.re, p.im, t.re, t.im])
            .collect()
    }

    /// Applies `z ↦ factor·z` (or `factor·z̄` when `mirror`), transporting
    /// the orientation. Curvature scales by `1/|factor|` and flips sign
    /// under mirroring.
    pub fn transformed(&self, factor: Complex64, mirror: bool) -> PlanarCurve {
        let map = |z: Complex64| if mirror { factor * z.conj() } else { factor * z };
        let scale = factor.norm();
        PlanarCurve {
            points: self.points.iter().map(|&z| map(z)).collect(),
            tangents: self
                .tangents
                .iter()
                .map(|&t| {
                    let v = map(t);
                    v / v.norm()
                })
                .collect(),
            curvature: self.curvature.as_ref().map(|k| {
                k.iter()
                    .map(|&c| if mirror { -c / scale } else { c / scale })
                    .collect()
            }),
            orientation: self.orientation,
        }
    }
}

/// Signed curvature of the circle through three points (0 for collinear).
pub fn circumcircle_curvature(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let ab = b - a;
    let bc = c - b;
    let ca = a - c;
    let cross = ab.re * (c - a).im - ab.im * (c - a).re;
    let denom = ab.norm() * bc.norm() * ca.norm();
    if denom == 0.0 || cross == 0.0 {
        0.0
    } else {
        2.0 * cross / denom
    }
}

/// Maximum absolute curvature: exact values when attached, otherwise the
/// circumcircles of consecutive sample triples.
pub fn max_curvature(c: &PlanarCurve) -> Result<f64> {
    if c.len() < 3 {
        return Err(LabError::domain("curvature needs at least 3 samples"));
    }
    if let Some(k) = c.curvature() {
        return Ok(k.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    }
    Ok(c.points
        .windows(3)
        .map(|w| circumcircle_curvature(w[0], w[1], w[2]).abs())
        .fold(0.0f64, f64::max))
}

/// Foot point `z(α)` and direction angle `ϑ(α)` of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub foot: Complex64,
    /// Oriented tangent angle at the foot, in `[0, 2π)`.
    pub angle: f64,
    pub distance: f64,
    /// Segment index and fraction along it.
    pub segment: usize,
    pub fraction: f64,
    /// The foot sits at an end of the curve; the angle is one-sided.
    pub endpoint_foot: bool,
}

fn project_origin(p: Complex64, q: Complex64) -> (f64, Complex64) {
    let d = q - p;
    let len2 = d.norm_sqr();
    let t = if len2 == 0.0 {
        0.0
    } else {
        (-(p.re * d.re + p.im * d.im) / len2).clamp(0.0, 1.0)
    };
    (t, p + d * t)
}

/// Closest point of the curve to the origin together with the angle of the
/// oriented tangent there. Two separated minimizers at the same distance
/// (closer than `1e-6·a` apart is treated as one) violate the uniqueness
/// hypothesis `κ < 1/a` and are reported as an error.
pub fn closest_point_and_angle(c: &PlanarCurve, a: f64) -> Result<ClosestPoint> {
    let pts = c.points();
    let nseg = pts.len() - 1;
    let seg: Vec<(f64, Complex64, f64)> = (0..nseg)
        .map(|i| {
            let (t, f) = project_origin(pts[i], pts[i + 1]);
            (t, f, f.norm())
        })
        .collect();
    let (best, &(t_best, foot, dist)) = seg
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .2.total_cmp(&y.1 .2))
        .expect("at least one segment");

    // Other local minima of the per-segment distance.
    let s = c.arc_lengths();
    let arc_at = |i: usize, t: f64| s[i] + t * (s[i + 1] - s[i]);
    let best_arc = arc_at(best, t_best);
    let tie = 1e-9 * dist.max(a * 1e-6);
    for i in 0..nseg {
        let left = if i > 0 { seg[i - 1].2 } else { f64::INFINITY };
        let right = if i + 1 < nseg { seg[i + 1].2 } else { f64::INFINITY };
        let (t, _, d) = seg[i];
        if d <= left && d <= right && (d - dist).abs() <= tie {
            let sep = (arc_at(i, t) - best_arc).abs();
            if sep > 1e-6 * a && !(i + 1 == best || best + 1 == i) {
                return Err(LabError::UniquenessViolated { distance: dist });
            }
        }
    }

    let tan = c.tangents()[best] * (1.0 - t_best) + c.tangents()[best + 1] * t_best;
    let tan = if tan.norm() > 0.0 { tan } else { c.tangents()[best] };
    let endpoint_foot = (best == 0 && t_best == 0.0) || (best == nseg - 1 && t_best == 1.0);
    Ok(ClosestPoint {
        foot,
        angle: wrap_tau(tan.im.atan2(tan.re)),
        distance: dist,
        segment: best,
        fraction: t_best,
        endpoint_foot,
    })
}

/// Rotation-number estimate with the half-width of the increment spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationEstimate {
    pub value: f64,
    pub half_width: f64,
}

/// Mean lifted increment of an angle orbit, normalized to `[0, 1)`.
pub fn rotation_number(angles: &[f64]) -> Result<RotationEstimate> {
    if angles.len() < 2 {
        return Err(LabError::domain("rotation number needs an orbit of length >= 2"));
    }
    let increments: Vec<f64> = angles
        .windows(2)
        .map(|w| wrap_tau(w[1] - w[0]))
        .collect();
    let mean = increments.iter().sum::<f64>() / increments.len() as f64;
    let (lo, hi) = increments
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    let mut value = mean / TAU;
    if value >= 1.0 {
        value -= 1.0;
    }
    Ok(RotationEstimate {
        value,
        half_width: (hi - lo).abs() / 2.0 / TAU,
    })
}

fn point_polyline_distance(p: Complex64, poly: &[Complex64]) -> f64 {
    if poly.len() == 1 {
        return (p - poly[0]).norm();
    }
    poly.windows(2)
        .map(|w| project_origin(w[0] - p, w[1] - p).1.norm())
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between the sample sets, each sample
/// measured against the other curve's polyline.
pub fn hausdorff_distance(c1: &PlanarCurve, c2: &PlanarCurve) -> f64 {
    let one_way = |a: &PlanarCurve, b: &PlanarCurve| {
        a.points()
            .iter()
            .map(|&p| point_polyline_distance(p, b.points()))
            .fold(0.0f64, f64::max)
    };
    one_way(c1, c2).max(one_way(c2, c1))
}

/// An oriented straight segment, stored by its direction angle, the foot of
/// the perpendicular from the origin, and its half-length about that foot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedSegment {
    angle: f64,
    foot: Complex64,
    half_length: f64,
}

impl OrientedSegment {
    /// Snaps the foot onto the normal line so that `⟨foot, direction⟩ = 0`.
    pub fn new(angle: f64, foot: Complex64, half_length: f64) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(LabError::domain("segment half-length must be positive"));
        }
        let dir = Complex64::from_polar(1.0, angle);
        let along = foot.re * dir.re + foot.im * dir.im;
        Ok(OrientedSegment {
            angle: wrap_tau(angle),
            foot: foot - dir * along,
            half_length,
        })
    }

    /// The chord of the line `{foot + s·dir}` inside the disk of radius `a`.
    pub fn chord(angle: f64, foot: Complex64, a: f64) -> Result<Self> {
        let dir = Complex64::from_polar(1.0, angle);
        let along = foot.re * dir.re + foot.im * dir.im;
        let foot = foot - dir * along;
        let d = foot.norm();
        if d >= a {
            return Err(LabError::domain("line misses the disk"));
        }
        OrientedSegment::new(angle, foot, (a * a - d * d).sqrt())
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn foot(&self) -> Complex64 {
        self.foot
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn direction(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle)
    }

    pub fn distance_to_origin(&self) -> f64 {
        self.foot.norm()
    }

    pub fn endpoints(&self) -> (Complex64, Complex64) {
        let d = self.direction() * self.half_length;
        (self.foot - d, self.foot + d)
    }

    /// `count` evenly spaced samples from start to end.
    pub fn sample(&self, count: usize) -> PlanarCurve {
        let count = count.max(2);
        let (p0, p1) = self.endpoints();
        let pts = (0..count)
            .map(|i| p0 + (p1 - p0) * (i as f64 / (count - 1) as f64))
            .collect();
        let tans = alloc::vec![self.direction(); count];
        PlanarCurve::new(pts, tans, Orientation::AlongSamples)
            .expect("segment samples are distinct")
    }

    /// Image under `z ↦ factor·z` (or `factor·z̄`).
    pub fn transformed(&self, factor: Complex64, mirror: bool) -> OrientedSegment {
        let map = |z: Complex64| if mirror { factor * z.conj() } else { factor * z };
        let dir = map(self.direction());
        OrientedSegment {
            angle: wrap_tau(dir.im.atan2(dir.re)),
            foot: map(self.foot),
            half_length: self.half_length * factor.norm(),
        }
    }

    /// The same line clipped to the disk of radius `a`.
    pub fn clipped(&self, a: f64) -> Result<OrientedSegment> {
        OrientedSegment::chord(self.angle, self.foot, a)
    }
}

/// Total-least-squares line through the samples, oriented by the curve.
/// Returns the chord inside `D_a` and the largest perpendicular deviation.
pub fn fit_segment(c: &PlanarCurve, a: f64) -> Result<(OrientedSegment, f64)> {
    let pts = c.points();
    let n = pts.len() as f64;
    let mean = pts.iter().sum::<Complex64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let d = p - mean;
        sxx += d.re * d.re;
        sxy += d.re * d.im;
        syy += d.im * d.im;
    }
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut dir = Complex64::from_polar(1.0, phi);
    let mean_tangent: Complex64 = c.tangents().iter().sum();
    if dir.re * mean_tangent.re + dir.im * mean_tangent.im < 0.0 {
        dir = -dir;
    }
    let normal = dir * Complex64::i();
    let residual = pts
        .iter()
        .map(|p| {
            let d = p - mean;
            (d.re * normal.re + d.im * normal.im).abs()
        })
        .fold(0.0f64, f64::max);
    let seg = OrientedSegment::chord(dir.im.atan2(dir.re), mean, a)?;
    Ok((seg, residual))
}

/// An oriented diameter of `D_a(p)`, identified with its angle in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterClass(f64);

impl DiameterClass {
    pub fn new(angle: f64) -> Self {
        DiameterClass(wrap_tau(angle))
    }

    pub fn angle(&self) -> f64 {
        self.0
    }

    pub fn rotated(&self, by: f64) -> Self {
        DiameterClass::new(self.0 + by)
    }

    /// Signed angular gap to `other`, in `(-π, π]`.
    pub fn gap(&self, other: &DiameterClass) -> f64 {
        wrap_pi(other.0 - self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn slope_examples() {
        assert_eq!(absolute_slope([3.0, 4.0, 10.0]).unwrap(), 2.0);
        assert_eq!(absolute_slope([1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(absolute_slope([0.0, 2.0, 1.0]).unwrap(), 0.5);
        assert!(absolute_slope([0.0, 0.0, 1.0]).is_err());
        assert_eq!(
            max_absolute_slope(&[[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]]).unwrap(),
            1.0
        );
        assert_eq!(max_absolute_slope(&[[1.0, 0.0, 0.0]]).unwrap(), 0.0);
        assert!(max_absolute_slope(&[]).is_err());
    }

    fn arc(radius: f64, n: usize) -> PlanarCurve {
        let pts = (0..n)
            .map(|i| Complex64::from_polar(radius, 0.1 + 2.0 * i as f64 / n as f64))
            .collect();
        PlanarCurve::from_points(pts, Orientation::AlongSamples).unwrap()
    }

    #[test]
    fn circle_and_line_curvature() {
        let k = max_curvature(&arc(2.0, 100)).unwrap();
        assert!((k - 0.5).abs() < 1e-3, "{k}");
        let line = PlanarCurve::from_points(
            (0..10).map(|i| c(i as f64 * 0.1, 0.3)).collect(),
            Orientation::AlongSamples,
        )
        .unwrap();
        assert_eq!(max_curvature(&line).unwrap(), 0.0);
        let two = PlanarCurve::from_points(vec![c(0.0, 0.0), c(1.0, 0.0)], Orientation::AlongSamples)
            .unwrap();
        assert!(max_curvature(&two).is_err());
    }

    #[test]
    fn vertical_segment_foot_and_angle() {
        let pts = (0..=50).map(|i| c(0.3, -0.1 + 0.01 * i as f64)).collect();
        let curve = PlanarCurve::from_points(pts, Orientation::AlongSamples).unwrap();
        let cp = closest_point_and_angle(&curve, 1.0).unwrap();
        assert!((cp.foot - c(0.3, 0.0)).norm() < 1e-14);
        assert!((cp.angle - PI / 2.0).abs() < 1e-14);
        assert!(!cp.endpoint_foot);
    }

    #[test]
    fn diameter_through_origin() {
        let pts = (0..=20).map(|i| c(-1.0 + 0.1 * i as f64, 0.0)).collect();
        let curve = PlanarCurve::from_points(pts, Orientation::AlongSamples).unwrap();
        let cp = closest_point_and_angle(&curve, 1.0).unwrap();
        assert!(cp.foot.norm() < 1e-15);
        assert!(cp.angle.abs() < 1e-15);
    }

    #[test]
    fn endpoint_foot_is_flagged() {
        let pts = (0..=10).map(|i| c(0.2 + 0.05 * i as f64, 0.1)).collect();
        let curve = PlanarCurve::from_points(pts, Orientation::AlongSamples).unwrap();
        let cp = closest_point_and_angle(&curve, 1.0).unwrap();
        assert!(cp.endpoint_foot);
        assert!((cp.foot - c(0.2, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn symmetric_arc_violates_uniqueness() {
        // Polar W: r(s) = 0.3 + (0.09 - s²)², nearest at s = ±0.3.
        let w: Vec<_> = (0..=40)
            .map(|i| {
                let s = -0.6 + 0.03 * i as f64;
                Complex64::from_polar(0.3 + (0.09 - s * s).powi(2), PI / 2.0 + s)
            })
            .collect();
        let curve = PlanarCurve::from_points(w, Orientation::AlongSamples).unwrap();
        assert!(matches!(
            closest_point_and_angle(&curve, 1.0),
            Err(LabError::UniquenessViolated { .. })
        ));
    }

    #[test]
    fn rigid_rotation_numbers() {
        let step = TAU / 5.0;
        let orbit: Vec<f64> = (0..10).map(|i| wrap_tau(i as f64 * step)).collect();
        let est = rotation_number(&orbit).unwrap();
        assert!((est.value - 0.2).abs() < 1e-15);
        assert!(est.half_width < 1e-14);

        let orbit: Vec<f64> = (0..50).map(|i| wrap_tau(i as f64 * 1.0)).collect();
        let est = rotation_number(&orbit).unwrap();
        assert!((est.value - 1.0 / TAU).abs() < 1e-12);
        assert!(rotation_number(&[0.3]).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        let s = OrientedSegment::new(0.0, c(0.0, 0.2), 0.5).unwrap();
        let a = s.sample(30);
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
        let b = OrientedSegment::new(0.0, c(0.0, 0.21), 0.5).unwrap().sample(30);
        assert!((hausdorff_distance(&a, &b) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn segment_fit_recovers_line() {
        let s = OrientedSegment::chord(0.7, Complex64::from_polar(0.2, 0.7 + PI / 2.0), 1.0)
            .unwrap();
        let curve = s.sample(40);
        let (fit, res) = fit_segment(&curve, 1.0).unwrap();
        assert!(res < 1e-14);
        assert!((fit.angle() - s.angle()).abs() < 1e-12);
        assert!((fit.foot() - s.foot()).norm() < 1e-12);
    }

    #[test]
    fn segment_foot_is_orthogonal() {
        let s = OrientedSegment::new(1.1, c(0.3, 0.4), 0.2).unwrap();
        let d = s.direction();
        assert!((s.foot().re * d.re + s.foot().im * d.im).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn slope_is_rotation_and_scale_invariant(
            v in prop::array::uniform3(-10.0f64..10.0),
            phi in -PI..PI,
            scale in 0.01f64..100.0,
        ) {
            prop_assume!(v[0].hypot(v[1]) > 1e-6);
            let z = Complex64::new(v[0], v[1]) * Complex64::from_polar(scale, phi);
            let s0 = absolute_slope(v).unwrap();
            let s1 = absolute_slope([z.re, z.im, v[2] * scale]).unwrap();
            prop_assert!((s0 - s1).abs() <= 1e-12 * (1.0 + s0));
        }

        #[test]
        fn curvature_scales_inversely(radius in 0.1f64..5.0, factor in 0.1f64..10.0) {
            let curve = arc(radius, 60);
            let k0 = max_curvature(&curve).unwrap();
            let k1 = max_curvature(&curve.transformed(Complex64::new(factor, 0.0), false)).unwrap();
            prop_assert!((k1 * factor - k0).abs() <= 1e-9 * k0);
        }

        #[test]
        fn rigid_rotation_number_is_start_independent(theta in 0.01f64..6.2, start in 0.0f64..TAU) {
            let orbit: Vec<f64> = (0..30).map(|i| wrap_tau(start + i as f64 * theta)).collect();
            let est = rotation_number(&orbit).unwrap();
            prop_assert!((est.value - theta / TAU).abs() < 1e-12);
        }

        #[test]
        fn diameter_angle_is_translation_invariant_along_itself(
            angle in 0.0f64..TAU, shift in -0.3f64..0.3
        ) {
            let dir = Complex64::from_polar(1.0, angle);
            let pts: Vec<_> = (0..=20).map(|i| dir * (-0.5 + 0.05 * i as f64 + shift)).collect();
            let curve = PlanarCurve::from_points(pts, Orientation::AlongSamples).unwrap();
            let cp = closest_point_and_angle(&curve, 1.0).unwrap();
            prop_assert!(wrap_pi(cp.angle - angle).abs() < 1e-12);
        }
    }
}
