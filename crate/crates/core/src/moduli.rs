//! Subsequences, limit straight segments and the estimated moduli
//! `(λ, r, θ, log r/log λ⁻¹, rotation number, cross-ratio)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::atlas::Atlas;
use crate::fold::{window_fold, BentFold};
use crate::geometry::{
    fit_segment, hausdorff_distance, rotation_number, wrap_pi, wrap_tau, OrientedSegment,
    PlanarCurve, RotationEstimate,
};
use crate::{LabError, Result};

/// Computes bent folds for a list of `m`, in order.
pub type FoldProvider<'a> = dyn Fn(&[i32]) -> Result<Vec<BentFold>> + Sync + 'a;

/// A value with a half-width error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

impl Estimate {
    /// Half the spread of the last three values, the last one as estimate.
    pub fn from_tail(values: &[f64]) -> Option<Estimate> {
        let value = *values.last()?;
        let tail = &values[values.len().saturating_sub(3)..];
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Some(Estimate {
            value,
            half_width: 0.5 * (hi - lo),
        })
    }

    pub fn agrees_with(&self, other: &Estimate) -> bool {
        (self.value - other.value).abs() <= self.half_width + other.half_width
    }
}

/// `d̃₀t̃₀` from the sequence `d_{m,0}/λ^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtConstant {
    pub value: f64,
    pub half_width: f64,
    /// `(m, d_{m,0}/λ^m)`.
    pub raw: Vec<(i32, f64)>,
    /// Aitken-accelerated estimates, aligned with the last entries of `raw`.
    pub accelerated: Vec<f64>,
}

/// Relative spread of the last raw estimates above which the sequence is
/// not considered Cauchy.
pub const DT_CAUCHY_TOL: f64 = 1e-2;

pub fn extrapolate_dt_constant(lambda: f64, data: &[(i32, f64)]) -> Result<DtConstant> {
    if data.len() < 2 {
        return Err(LabError::ConstantNotResolved { spread: f64::NAN });
    }
    let raw: Vec<(i32, f64)> = data.iter().map(|&(m, d)| (m, d / lambda.powi(m))).collect();
    let e: Vec<f64> = raw.iter().map(|x| x.1).collect();
    let n = e.len();
    let spread = (e[n - 1] - e[n - 2]).abs() / e[n - 1].abs();
    if spread.is_nan() || spread > DT_CAUCHY_TOL {
        return Err(LabError::ConstantNotResolved { spread });
    }
    let mut acc = Vec::new();
    for w in e.windows(3) {
        let d2 = w[2] - 2.0 * w[1] + w[0];
        // Aitken is only meaningful for a geometric error; otherwise keep the
        // raw value.
        let a = if d2 != 0.0 && (d2.abs() > 1e-14 * w[2].abs()) {
            w[2] - (w[2] - w[1]) * (w[2] - w[1]) / d2
        } else {
            w[2]
        };
        acc.push(if a.is_finite() { a } else { w[2] });
    }
    let est = if acc.is_empty() {
        Estimate::from_tail(&e)
    } else {
        Estimate::from_tail(&acc)
    }
    .expect("non-empty");
    Ok(DtConstant {
        value: est.value,
        half_width: est.half_width,
        raw,
        accelerated: acc,
    })
}

pub fn estimate_dt_constant(atlas: &Atlas, folds: &[BentFold]) -> Result<DtConstant> {
    let data: Vec<(i32, f64)> = folds.iter().map(|b| (b.m, b.distance())).collect();
    extrapolate_dt_constant(atlas.spec.local.lambda, &data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsequencePlan {
    /// `(m_j, n_j)`.
    pub pairs: Vec<(i32, i32)>,
    /// `v_{n_j} = d̃₀t̃₀λ^{m_j}r^{n_j}`.
    pub values: Vec<f64>,
    pub w: f64,
    pub w0: f64,
    /// Distance of `(v_{n_j}, ϑ_{n_j})` to the cluster target, in units of
    /// a `λ`-decade plus turns; non-increasing.
    pub residuals: Vec<f64>,
    /// Every candidate `(n, m(n), v_n)` with `v_n ∈ (wλ, w]`.
    pub candidates: Vec<(i32, i32, f64)>,
}

impl SubsequencePlan {
    pub fn last(&self) -> (i32, i32) {
        *self.pairs.last().expect("plans are never empty")
    }

    pub fn window_holds(&self, lambda: f64) -> bool {
        self.w * lambda / 2.0 <= self.w0 && self.w0 <= self.w
    }
}

/// Bins over one `λ`-decade of `(wλ, w]`.
pub const VALUE_BINS: usize = 5;
/// Bins over the circle of directions.
pub const ANGLE_BINS: usize = 5;
/// Minimum cluster size.
pub const CLUSTER_MIN: usize = 5;

/// The distance and angle laws `v = d̃₀t̃₀λ^m r^n`, `ϑ = ϑ₀ + nθ` a plan
/// is selected from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanModel {
    pub dt: f64,
    pub lambda: f64,
    pub r: f64,
    /// `(ϑ₀, θ)`; without it only distances are clustered.
    pub angle: Option<(f64, f64)>,
}

pub fn select_subsequence(model: &PlanModel, w: f64, n_max: i32) -> Result<SubsequencePlan> {
    let PlanModel { dt, lambda, r, angle } = *model;
    if !(dt > 0.0 && lambda > 0.0 && lambda < 1.0 && r > 1.0 && w > 0.0) {
        return Err(LabError::domain("subsequence needs d̃₀t̃₀ > 0, 0 < λ < 1 < r, w > 0"));
    }
    let ll = lambda.ln();
    let mut candidates = Vec::new();
    for n in 0..=n_max {
        let base = dt.ln() + n as f64 * r.ln();
        // smallest positive m with base + m ln λ ≤ ln w
        let mut m = (((w.ln() - base) / ll).ceil() as i32).max(1);
        while m > 1 && base + (m - 1) as f64 * ll <= w.ln() {
            m -= 1;
        }
        while base + m as f64 * ll > w.ln() {
            m += 1;
        }
        let v = (base + m as f64 * ll).exp();
        if v > w * lambda && v <= w {
            candidates.push((n, m, v));
        }
    }
    let frac = |v: f64| ((v / w).ln() / ll).clamp(0.0, 1.0);
    let phase = |n: i32| angle.map(|(a0, th)| wrap_tau(a0 + n as f64 * th) / TAU).unwrap_or(0.0);
    let angle_bins = if angle.is_some() { ANGLE_BINS } else { 1 };
    let cell = |c: &(i32, i32, f64)| -> usize {
        let i = ((frac(c.2) * VALUE_BINS as f64).floor() as usize).min(VALUE_BINS - 1);
        let k = ((phase(c.0) * angle_bins as f64).floor() as usize).min(angle_bins - 1);
        i * angle_bins + k
    };
    let mut counts = alloc::vec![0usize; VALUE_BINS * angle_bins];
    for c in &candidates {
        counts[cell(c)] += 1;
    }
    let (best, &size) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("bins");
    if size < CLUSTER_MIN {
        let per_cell = candidates.len() as f64 / counts.len() as f64;
        let scale = (CLUSTER_MIN as f64 / per_cell.max(1e-3)).max(1.0);
        return Err(LabError::IncreaseNMax {
            needed: ((n_max.max(1) as f64) * scale).ceil() as usize + 1,
        });
    }
    let members: Vec<(i32, i32, f64)> = candidates
        .iter()
        .copied()
        .filter(|c| cell(c) == best)
        .collect();
    let k = members.len() as f64;
    let w0 = (members.iter().map(|c| c.2.ln()).sum::<f64>() / k).exp();
    let (s, c) = members.iter().fold((0.0, 0.0), |(s, c), m| {
        let a = phase(m.0) * TAU;
        (s + a.sin(), c + a.cos())
    });
    let a_target = s.atan2(c);
    let gap = |c: &(i32, i32, f64)| {
        let dv = (c.2 / w0).ln().abs() / ll.abs();
        let da = if angle.is_some() {
            wrap_pi(phase(c.0) * TAU - a_target).abs() / TAU
        } else {
            0.0
        };
        dv + da
    };
    let mut ordered = members;
    ordered.sort_by(|a, b| gap(b).total_cmp(&gap(a)).then(a.0.cmp(&b.0)));
    Ok(SubsequencePlan {
        pairs: ordered.iter().map(|c| (c.1, c.0)).collect(),
        values: ordered.iter().map(|c| c.2).collect(),
        residuals: ordered.iter().map(gap).collect(),
        w,
        w0,
        candidates,
    })
}

/// Least-squares slope of `m_j` against `n_j`. The error bar is the larger
/// of the slope's standard error and the half spread of the slopes over
/// the last three prefixes ordered by `n`.
pub fn ratio_from_plan(plan: &SubsequencePlan) -> Option<Estimate> {
    let mut pts: Vec<(f64, f64)> = plan
        .pairs
        .iter()
        .map(|&(m, n)| (n as f64, m as f64))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let fit = |p: &[(f64, f64)]| -> Option<(f64, f64)> {
        if p.len() < 3 {
            return None;
        }
        let k = p.len() as f64;
        let mx = p.iter().map(|x| x.0).sum::<f64>() / k;
        let my = p.iter().map(|x| x.1).sum::<f64>() / k;
        let sxx: f64 = p.iter().map(|x| (x.0 - mx) * (x.0 - mx)).sum();
        let sxy: f64 = p.iter().map(|x| (x.0 - mx) * (x.1 - my)).sum();
        if sxx <= 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        let sse: f64 = p
            .iter()
            .map(|x| {
                let e = x.1 - my - slope * (x.0 - mx);
                e * e
            })
            .sum();
        Some((slope, (sse / (k - 2.0) / sxx).sqrt()))
    };
    let n = pts.len();
    let slopes: Vec<f64> = (n.saturating_sub(2).max(3)..=n)
        .filter_map(|k| fit(&pts[..k]).map(|x| x.0))
        .collect();
    let (_, se) = fit(&pts)?;
    Estimate::from_tail(&slopes).map(|e| Estimate {
        value: e.value,
        half_width: e.half_width.max(se),
    })
}

/// An oriented straight segment fitted to a rescaled folding curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSegment {
    pub m: i32,
    pub n: i32,
    pub segment: OrientedSegment,
    /// Largest deviation of the curve samples from the fitted line.
    pub residual: f64,
    /// Hausdorff distance to the previous member of the sequence.
    pub hausdorff: Option<f64>,
    /// `κ(γ_{m,n})`.
    pub kappa: f64,
}

impl LimitSegment {
    pub fn angle(&self) -> f64 {
        self.segment.angle()
    }

    pub fn distance(&self) -> f64 {
        self.segment.distance_to_origin()
    }
}

/// `γ_{m,n}` inside `D_a(p)` together with its line fit.
pub fn fitted_fold(atlas: &Atlas, bent: &BentFold, n: i32) -> Result<(PlanarCurve, LimitSegment)> {
    let local = &atlas.spec.local;
    let curve = window_fold(atlas, bent, n)?;
    let kappa = curve.max_curvature_within(local.a * local.r.powi(-n)) * local.r.powi(-n);
    let planar = curve.planar()?.transformed(local.multiplier().powi(n), false);
    let (segment, residual) = fit_segment(&planar, local.a)?;
    Ok((
        planar,
        LimitSegment {
            m: bent.m,
            n,
            segment,
            residual,
            hausdorff: None,
            kappa,
        },
    ))
}

/// Straightness tolerance relative to `w₀`.
pub const STRAIGHT_TOL: f64 = 1e-3;

/// `γ₀♮`: the fit of `γ_{m_j,n_j}` at the last `j`, validated against the
/// previous `j`.
pub fn limit_segment(atlas: &Atlas, plan: &SubsequencePlan, folds: &FoldProvider) -> Result<LimitSegment> {
    let k = plan.pairs.len();
    let wanted: Vec<(i32, i32)> = plan.pairs[k.saturating_sub(2)..].to_vec();
    let ms: Vec<i32> = wanted.iter().map(|p| p.0).collect();
    let bents = folds(&ms)?;
    let mut prev: Option<PlanarCurve> = None;
    let mut out = None;
    for (b, &(_, n)) in bents.iter().zip(&wanted) {
        let (planar, mut seg) = fitted_fold(atlas, b, n)?;
        if let Some(p) = &prev {
            seg.hausdorff = Some(hausdorff_distance(p, &planar));
        }
        prev = Some(planar);
        out = Some(seg);
    }
    let seg = out.ok_or(LabError::NoCandidate {
        modulus: String::from("limit segment"),
    })?;
    if seg.residual > STRAIGHT_TOL * plan.w0 {
        return Err(LabError::NotStraight {
            residual: seg.residual,
        });
    }
    Ok(seg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// `γ_k♮`: limits along `(m_j + k, n_j)`.
    Parallel,
    /// `ξ_k♮ = R^k(γ_{a₀k}♮)`.
    Xi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFamily {
    pub kind: FamilyKind,
    pub segments: Vec<LimitSegment>,
    pub a0: Option<u32>,
    pub w0: f64,
}

impl SegmentFamily {
    /// Largest pairwise angle gap.
    pub fn angle_spread(&self) -> f64 {
        let a0 = self.segments.first().map(|s| s.angle()).unwrap_or(0.0);
        self.segments
            .iter()
            .map(|s| wrap_pi(s.angle() - a0).abs())
            .fold(0.0, f64::max)
    }

    /// `d(0, γ_k)/d(0, γ_{k+1})` for consecutive members.
    pub fn distance_ratios(&self) -> Vec<f64> {
        self.segments
            .windows(2)
            .map(|w| w[0].distance() / w[1].distance())
            .collect()
    }
}

/// The parallel family `γ_k♮`, `k = 0..=k_max`, at the last pair of the plan.
pub fn parallel_family(
    atlas: &Atlas,
    plan: &SubsequencePlan,
    k_max: u32,
    folds: &FoldProvider,
) -> Result<SegmentFamily> {
    let (mj, nj) = plan.last();
    let ms: Vec<i32> = (0..=k_max as i32).map(|k| mj + k).collect();
    let bents = folds(&ms)?;
    let segments = bents
        .iter()
        .map(|b| fitted_fold(atlas, b, nj).map(|x| x.1))
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentFamily {
        kind: FamilyKind::Parallel,
        segments,
        a0: None,
        w0: plan.w0,
    })
}

/// Smallest integer strictly above every `log(2r)/log(1/λ)`.
pub fn a0_bound(pairs: &[(f64, f64)]) -> u32 {
    let b = pairs
        .iter()
        .map(|&(lambda, r)| (2.0 * r).ln() / (1.0 / lambda).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    (b.floor() as i64 + 1).max(1) as u32
}

/// Distances below this are refused.
pub const PRECISION_FLOOR: f64 = 1e-12;

/// `ξ_k♮ = R^k(γ_{a₀k}♮)` clipped to `D_a(p)`, `k = 0..=k_max`.
pub fn xi_family(
    atlas: &Atlas,
    plan: &SubsequencePlan,
    k_max: u32,
    a0: u32,
    folds: &FoldProvider,
) -> Result<SegmentFamily> {
    let local = &atlas.spec.local;
    let (mj, nj) = plan.last();
    let ms: Vec<i32> = (0..=k_max as i32).map(|k| mj + a0 as i32 * k).collect();
    let bents = folds(&ms)?;
    let mult = local.multiplier();
    let mut segments = Vec::new();
    for (k, b) in bents.iter().enumerate() {
        let (_, mut seg) = fitted_fold(atlas, b, nj)?;
        let moved = seg.segment.transformed(mult.powi(k as i32), false);
        if moved.distance_to_origin() < PRECISION_FLOOR {
            return Err(LabError::BelowPrecision {
                distance: moved.distance_to_origin(),
            });
        }
        seg.segment = moved.clipped(local.a)?;
        segments.push(seg);
    }
    Ok(SegmentFamily {
        kind: FamilyKind::Xi,
        segments,
        a0: Some(a0),
        w0: plan.w0,
    })
}

/// `z(s)/z(q)` for the base point `s` over which the recrossing `ẑ` sits.
pub fn cross_ratio_invariant(atlas: &Atlas) -> Result<Complex64> {
    let s = atlas.zhat_preimage();
    if s.z.norm() > atlas.spec.local.a {
        return Err(LabError::ChartExit);
    }
    Ok(s.z / atlas.spec.global.q)
}

/// Orbit closure: smallest period `u ≤ max_period` after which every angle
/// returns within `tol`, with winding `v = round(u·ρ)`.
pub fn orbit_signature(angles: &[f64], rotation: f64, max_period: usize, tol: f64) -> Option<(u64, u64)> {
    for u in 1..=max_period.min(angles.len().saturating_sub(1)) {
        let closes = (0..angles.len() - u).all(|i| wrap_pi(angles[i + u] - angles[i]).abs() < tol);
        if closes {
            let v = (u as f64 * rotation).round() as u64 % u as u64;
            return Some((u as u64, v));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuliConfig {
    /// `m` values for the distance table (shifted by `m_min`).
    pub ms: Vec<i32>,
    /// Ratios are averaged over `m ≥ m_fit`.
    pub m_fit: i32,
    pub ns: Vec<i32>,
    pub w: f64,
    pub n_max: i32,
    /// Length of the angle orbit used for the rotation number.
    pub orbit: usize,
    pub max_period: usize,
}

impl Default for ModuliConfig {
    fn default() -> Self {
        ModuliConfig {
            ms: (0..=20).collect(),
            m_fit: 12,
            ns: (0..=10).collect(),
            w: 0.3,
            n_max: 400,
            orbit: 81,
            max_period: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Signature {
    Rational { u: u64, v: u64 },
    Irrational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuliEstimate {
    pub lambda_hat: Option<Estimate>,
    pub r_hat: Option<Estimate>,
    pub theta_hat: Option<Estimate>,
    /// `lim m_j/n_j = log r/log λ⁻¹`.
    pub ratio_hat: Option<Estimate>,
    pub rotation: Option<RotationEstimate>,
    pub signature: Option<Signature>,
    pub cross_ratio: Option<Complex64>,
    pub dt: Option<DtConstant>,
    pub plan: Option<SubsequencePlan>,
    /// `(quantity, message)` of every failed sub-estimate.
    pub errors: Vec<(String, String)>,
}

fn geometric_mean(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp()
}

fn circular_mean(xs: &[f64]) -> f64 {
    let (s, c) = xs
        .iter()
        .fold((0.0, 0.0), |(s, c), x| (s + x.sin(), c + x.cos()));
    s.atan2(c)
}

/// Per-`m` estimates of a quantity, reduced with `Estimate::from_tail`.
fn per_m<F: Fn(&BentFold, &BentFold) -> Option<f64>>(folds: &[BentFold], m_fit: i32, f: F) -> Vec<f64> {
    folds
        .windows(2)
        .filter(|w| w[0].m >= m_fit && w[1].m == w[0].m + 1)
        .filter_map(|w| f(&w[0], &w[1]))
        .collect()
}

pub fn estimate_moduli(atlas: &Atlas, cfg: &ModuliConfig, folds: &FoldProvider) -> ModuliEstimate {
    let local = &atlas.spec.local;
    let mult = local.multiplier();
    let mut errors: Vec<(String, String)> = Vec::new();
    let mut fail = |q: &str, e: LabError| errors.push((String::from(q), e.to_string()));
    let ms: Vec<i32> = cfg.ms.iter().map(|m| m + atlas.m_min).collect();
    let m_fit = cfg.m_fit + atlas.m_min;
    let table = match folds(&ms) {
        Ok(t) => t,
        Err(e) => {
            fail("folds", e);
            Vec::new()
        }
    };

    // d_{m,n} = |A^n c_{m,0}| and ϑ(γ_{m,n}) = arg(A^n γ'_m) over the grid.
    let d = |b: &BentFold, n: i32| (mult.powi(n) * b.curve.zf * b.foot.inner).norm();
    let angle = |b: &BentFold, n: i32| {
        let v = mult.powi(n) * b.curve.zf * b.foot.velocity;
        wrap_tau(v.im.atan2(v.re))
    };
    let ns = &cfg.ns;
    let lambda_ests = per_m(&table, m_fit, |a, b| {
        let ratios: Vec<f64> = ns.iter().map(|&n| d(b, n) / d(a, n)).collect();
        (!ratios.is_empty()).then(|| geometric_mean(&ratios))
    });
    let lambda_hat = Estimate::from_tail(&lambda_ests).map(|e| Estimate {
        value: geometric_mean(&lambda_ests[lambda_ests.len().saturating_sub(3)..]),
        ..e
    });
    if lambda_hat.is_none() {
        fail("lambda_hat", LabError::NoCandidate { modulus: "λ".into() });
    }
    let fit_rows: Vec<&BentFold> = table.iter().filter(|b| b.m >= m_fit).collect();
    let r_ests: Vec<f64> = fit_rows
        .iter()
        .filter_map(|b| {
            let ratios: Vec<f64> = ns.windows(2).filter(|w| w[1] == w[0] + 1).map(|w| d(b, w[1]) / d(b, w[0])).collect();
            (!ratios.is_empty()).then(|| geometric_mean(&ratios))
        })
        .collect();
    let r_hat = Estimate::from_tail(&r_ests);
    if r_hat.is_none() {
        fail("r_hat", LabError::NoCandidate { modulus: "r".into() });
    }
    let theta_ests: Vec<f64> = fit_rows
        .iter()
        .filter_map(|b| {
            let diffs: Vec<f64> = ns
                .windows(2)
                .filter(|w| w[1] == w[0] + 1)
                .map(|w| wrap_pi(angle(b, w[1]) - angle(b, w[0])))
                .collect();
            (!diffs.is_empty()).then(|| circular_mean(&diffs))
        })
        .collect();
    let theta_hat = Estimate::from_tail(&theta_ests);
    if theta_hat.is_none() {
        fail("theta_hat", LabError::NoCandidate { modulus: "θ".into() });
    }

    let dt = match estimate_dt_constant(atlas, &table) {
        Ok(v) => Some(v),
        Err(e) => {
            fail("dt_constant", e);
            None
        }
    };
    let phase = match (table.last(), theta_hat) {
        (Some(b), Some(th)) => Some((angle(b, 0), th.value)),
        _ => None,
    };
    let plan = match (&dt, lambda_hat, r_hat) {
        (Some(dt), Some(l), Some(r)) => {
            let model = PlanModel {
                dt: dt.value,
                lambda: l.value,
                r: r.value,
                angle: phase,
            };
            match select_subsequence(&model, cfg.w, cfg.n_max) {
            Ok(p) => Some(p),
                Err(e) => {
                    fail("ratio_hat", e);
                    None
                }
            }
        }
        _ => None,
    };
    let ratio_hat = plan.as_ref().and_then(ratio_from_plan);

    // Rotation of the limit-diameter orbit, from the folding curve with the
    // largest computed m.
    let (rotation, signature) = match table.last() {
        Some(b) => {
            let orbit: Vec<f64> = (0..cfg.orbit as i32).map(|n| angle(b, n)).collect();
            match rotation_number(&orbit) {
                Ok(rot) => {
                    let sig = orbit_signature(&orbit, rot.value, cfg.max_period, 1e-9)
                        .map(|(u, v)| Signature::Rational { u, v })
                        .unwrap_or(Signature::Irrational);
                    (Some(rot), Some(sig))
                }
                Err(e) => {
                    fail("rotation", e);
                    (None, None)
                }
            }
        }
        None => (None, None),
    };
    let cross_ratio = match cross_ratio_invariant(atlas) {
        Ok(c) => Some(c),
        Err(e) => {
            fail("cross_ratio", e);
            None
        }
    };
    ModuliEstimate {
        lambda_hat,
        r_hat,
        theta_hat,
        ratio_hat,
        rotation,
        signature,
        cross_ratio,
        dt,
        plan,
        errors,
    }
}

/// `θ/2π` reduced to `[0, 1)`.
pub fn turn_fraction(theta: f64) -> f64 {
    let x = theta / TAU;
    x - x.floor()
}

pub fn describe(e: &ModuliEstimate) -> String {
    let f = |x: &Option<Estimate>| match x {
        Some(v) => format!("{:.9} ± {:.2e}", v.value, v.half_width),
        None => String::from("n/a"),
    };
    format!(
        "λ̂ = {}, r̂ = {}, θ̂ = {}, ratio = {}",
        f(&e.lambda_hat),
        f(&e.r_hat),
        f(&e.theta_hat),
        f(&e.ratio_hat)
    )
}
