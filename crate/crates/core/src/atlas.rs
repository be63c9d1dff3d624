//! Pieces of the unstable manifold: the initial sheet `H̃`, the bent disk
//! `H̃₀` and its sheets, the recrossing `ẑ`, the transversal disks `D_m` and
//! the bent disks `H̃_m`.
//!
//! Parameters of every piece derived from the base plane are the `(u, v)`
//! coordinates of the `G` patch around `q`. The transversal disks `D_m` are
//! parametrized by the horizontal chart coordinate.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{max_absolute_slope, SpacePoint};
use crate::jet::{FramedJet, Jet2, ScalarJet};
use crate::linalg::{cross3, dot3, norm3, solve3};
use crate::model::{check_positively_associated, validate_params, SystemSpec};
use crate::word::{evaluate_word_from, Atom, ChartWord, WordInput};
use crate::{LabError, Result};

/// Number of rays used to describe star-shaped parameter domains.
pub const STAR_RAYS: usize = 256;
/// Largest `u` tried by the recrossing search.
pub const U_MAX: u32 = 40;

/// A surface given by 2-jets over a parameter domain.
pub trait Surface {
    fn jet(&self, p: [f64; 2]) -> Result<FramedJet>;
    /// Membership in the parameter domain, before clipping.
    fn in_domain(&self, p: [f64; 2]) -> bool;
    /// Final clipping radius `|z| ≤ R`, if any.
    fn clip_radius(&self) -> Option<f64> {
        None
    }
    /// A disk containing the parameter domain.
    fn bounds(&self) -> ([f64; 2], f64);
}

/// Star-shaped region `{center + ρe^{iφ} : ρ ≤ R(φ)}` with `R` sampled on
/// equally spaced rays and interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct StarDomain {
    pub center: [f64; 2],
    pub radii: Vec<f64>,
}

impl StarDomain {
    /// Bisects each ray for the last point where `inside` holds, up to
    /// `max_radius`. The flag reports whether some ray reached `max_radius`.
    pub fn build(
        center: [f64; 2],
        max_radius: f64,
        rays: usize,
        inside: impl Fn([f64; 2]) -> bool,
    ) -> (StarDomain, bool) {
        let mut touched = false;
        let radii = (0..rays)
            .map(|k| {
                let phi = TAU * k as f64 / rays as f64;
                let (s, c) = phi.sin_cos();
                let at = |rho: f64| [center[0] + rho * c, center[1] + rho * s];
                if inside(at(max_radius)) {
                    touched = true;
                    return max_radius;
                }
                let (mut lo, mut hi) = (0.0, max_radius);
                while hi - lo > 1e-13 * max_radius {
                    let mid = 0.5 * (lo + hi);
                    if inside(at(mid)) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            })
            .collect();
        (StarDomain { center, radii }, touched)
    }

    pub fn radius_at(&self, phi: f64) -> f64 {
        let n = self.radii.len();
        let x = (phi / TAU - (phi / TAU).floor()) * n as f64;
        let i = (x.floor() as usize) % n;
        let f = x - x.floor();
        self.radii[i] * (1.0 - f) + self.radii[(i + 1) % n] * f
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        dx.hypot(dy) <= self.radius_at(dy.atan2(dx))
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// Which side of the fold line `{2cu + dv = 0}` of the base patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Whole,
    /// `T` above the fold.
    Plus,
    /// `T` below the fold.
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Disk { center: [f64; 2], radius: f64 },
    Star(StarDomain),
}

impl Domain {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Domain::Disk { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) <= *radius
            }
            Domain::Star(s) => s.contains(p),
        }
    }

    pub fn bounding_radius(&self) -> ([f64; 2], f64) {
        match self {
            Domain::Disk { center, radius } => (*center, *radius),
            Domain::Star(s) => (s.center, s.max_radius()),
        }
    }
}

/// How a parameter point becomes the input jet of the word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lift {
    /// The base plane `{t = 0}` in `G`-patch coordinates.
    Plane,
    /// The graph `s = ψ_m(u, v)` of `D_m` in `G`-patch coordinates.
    Psi { chart: TransversalChart, power: i32 },
    /// `D_m` as a graph over the horizontal chart coordinate.
    Height { chart: TransversalChart, power: i32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePiece {
    pub label: String,
    pub word: ChartWord,
    pub lift: Lift,
    pub domain: Domain,
    pub side: Side,
    /// Optional final clipping radius `|z| ≤ clip`.
    pub clip: Option<f64>,
    spec: SystemSpec,
}

impl SurfacePiece {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    fn input(&self, p: [f64; 2]) -> Result<WordInput> {
        Ok(match self.lift {
            Lift::Plane => WordInput::GLocal(Jet2::base_plane(p)),
            Lift::Psi { chart, power } => {
                let psi = chart.psi_jet(power, p)?;
                WordInput::GLocal(Jet2::graph(p, psi.value, psi.grad, psi.hess))
            }
            Lift::Height { chart, power } => {
                let h = chart.horizontal_jet(power, p)?;
                WordInput::Chart(FramedJet::new(Jet2::graph(p, h.value, h.grad, h.hess)))
            }
        })
    }

    fn on_side(&self, p: [f64; 2]) -> bool {
        let g = &self.spec.global;
        let rel = 2.0 * g.c * p[0] + g.d * p[1];
        match self.side {
            Side::Whole => true,
            Side::Plus => rel * g.c >= 0.0,
            Side::Minus => rel * g.c < 0.0,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        if !self.in_domain(p) {
            return false;
        }
        match self.clip {
            None => true,
            Some(a) => self.jet(p).map(|j| j.z_norm() <= a).unwrap_or(false),
        }
    }

    /// `L^k` of the piece, still clipped to `U_a(p)`.
    pub fn iterated(&self, k: i32) -> SurfacePiece {
        let mut out = self.clone();
        out.label = format!("L^{k}({})", self.label);
        out.word = self.word.clone().then(Atom::L(k));
        out.clip = Some(self.spec.local.a);
        out
    }

    /// Rows `(param_u, param_v, x, y, t)` on an `n × n` grid of the domain.
    pub fn sample_grid(&self, n: usize) -> Vec<[f64; 5]> {
        let (c, r) = self.domain.bounding_radius();
        let mut rows = Vec::new();
        for i in 0..n {
            for k in 0..n {
                let p = [
                    c[0] - r + 2.0 * r * (i as f64 + 0.5) / n as f64,
                    c[1] - r + 2.0 * r * (k as f64 + 0.5) / n as f64,
                ];
                if !self.contains(p) {
                    continue;
                }
                if let Ok(j) = self.jet(p) {
                    let x = j.point();
                    rows.push([p[0], p[1], x.z.re, x.z.im, x.t]);
                }
            }
        }
        rows
    }
}

impl Surface for SurfacePiece {
    fn jet(&self, p: [f64; 2]) -> Result<FramedJet> {
        evaluate_word_from(&self.spec, &self.word, self.input(p)?)
    }

    fn in_domain(&self, p: [f64; 2]) -> bool {
        self.domain.contains(p) && self.on_side(p)
    }

    fn clip_radius(&self) -> Option<f64> {
        self.clip
    }

    fn bounds(&self) -> ([f64; 2], f64) {
        self.domain.bounding_radius()
    }
}

/// `H̃ = G(base patch)`.
pub fn initial_sheet(s: &SystemSpec) -> SurfacePiece {
    SurfacePiece {
        label: String::from("H~"),
        word: ChartWord::new(alloc::vec![Atom::G]),
        lift: Lift::Plane,
        domain: Domain::Disk {
            center: [0.0, 0.0],
            radius: s.global.patch_radius,
        },
        side: Side::Whole,
        clip: None,
        spec: *s,
    }
}

fn clipped_piece(
    s: &SystemSpec,
    label: String,
    word: ChartWord,
    lift: Lift,
    side: Side,
) -> Result<SurfacePiece> {
    let mut piece = SurfacePiece {
        label,
        word,
        lift,
        domain: Domain::Disk {
            center: [0.0, 0.0],
            radius: s.global.patch_radius,
        },
        side: Side::Whole,
        clip: None,
        spec: *s,
    };
    let a = s.local.a;
    let patch = s.global.patch_radius;
    let (star, touched) = StarDomain::build([0.0, 0.0], patch, STAR_RAYS, |p| {
        piece.jet(p).map(|j| j.z_norm() <= a).unwrap_or(false)
    });
    if touched {
        return Err(LabError::N0TooSmall);
    }
    piece.domain = Domain::Star(star);
    piece.side = side;
    piece.clip = Some(a);
    Ok(piece)
}

/// `H̃₀ = L^{n0}(H̃) ∩ U_a(p)`, the component through `q₀`, and its sheets
/// `(H̃₀, H̃₀⁺, H̃₀⁻)`.
pub fn push_to_bent_disk(
    s: &SystemSpec,
    n0: u32,
) -> Result<(SurfacePiece, SurfacePiece, SurfacePiece)> {
    let word = ChartWord::new(alloc::vec![Atom::G, Atom::L(n0 as i32)]);
    let whole = clipped_piece(s, String::from("H~0"), word, Lift::Plane, Side::Whole)?;
    let mut plus = whole.clone();
    plus.label = String::from("H~0+");
    plus.side = Side::Plus;
    let mut minus = whole.clone();
    minus.label = String::from("H~0-");
    minus.side = Side::Minus;
    Ok((whole, plus, minus))
}

/// A transverse intersection of a curve with a surface piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransversalCrossing {
    pub param: [f64; 2],
    pub point: SpacePoint,
    pub curve_param: f64,
    /// `t` of the crossing.
    pub height: f64,
    /// Sine of the angle between the curve and the surface.
    pub margin: f64,
}

/// Newton on `S(p) − C(σ) = 0`; both given with first derivatives in a
/// common coordinate system.
pub(crate) fn intersect_curve_surface(
    surface: impl Fn([f64; 2]) -> Result<([f64; 3], [[f64; 3]; 2])>,
    curve: impl Fn(f64) -> ([f64; 3], [f64; 3]),
    mut p: [f64; 2],
    mut sigma: f64,
    scale: f64,
) -> Result<([f64; 2], f64, f64)> {
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let (sv, sd) = surface(p)?;
        let (cv, cd) = curve(sigma);
        let f = [sv[0] - cv[0], sv[1] - cv[1], sv[2] - cv[2]];
        residual = norm3(f);
        let m = [
            [sd[0][0], sd[1][0], -cd[0]],
            [sd[0][1], sd[1][1], -cd[1]],
            [sd[0][2], sd[1][2], -cd[2]],
        ];
        let step = solve3(&m, [-f[0], -f[1], -f[2]])
            .ok_or(LabError::NewtonFailed { residual })?;
        p[0] += step[0];
        p[1] += step[1];
        sigma += step[2];
        if !(p[0].is_finite() && p[1].is_finite() && sigma.is_finite()) {
            return Err(LabError::NewtonFailed { residual });
        }
        if step[0].hypot(step[1]).hypot(step[2]) <= 1e-15 * scale {
            let (_, sd) = surface(p)?;
            let (_, cd) = curve(sigma);
            let n = cross3(sd[0], sd[1]);
            let margin = dot3(n, cd).abs() / (norm3(n) * norm3(cd));
            return Ok((p, sigma, margin));
        }
    }
    Err(LabError::NewtonFailed { residual })
}

/// The recrossing `ẑ` of `H̃_{0;u}⁻` with the local stable curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recrossing {
    pub u: u32,
    /// `q` as a point of `H̃_{0;u}⁻`, in base parameters.
    pub q_param: [f64; 2],
    /// Distance in the plane from `q` to the folding curve of the sheet.
    pub q_margin: f64,
    pub crossing: TransversalCrossing,
}

fn inverse_projection_lower(s: &SystemSpec, power: i32, z: Complex64) -> Option<[f64; 2]> {
    let g = &s.global;
    let (m, _) = s.local.power(power);
    let w = z / m * Complex64::from_polar(1.0, -g.out_angle);
    let (x, y) = (w.re, w.im);
    let disc = g.d * g.d * y * y - 4.0 * g.c * (g.e * y * y - x);
    if disc < 0.0 {
        return None;
    }
    let u_fold = -g.d * y / (2.0 * g.c);
    Some([u_fold - disc.sqrt() / (2.0 * g.c.abs()), y])
}

fn sheet_word(n: i32) -> ChartWord {
    ChartWord::new(alloc::vec![Atom::G, Atom::L(n)])
}

fn try_recrossing(s: &SystemSpec, u: u32) -> Option<Recrossing> {
    let g = &s.global;
    let power = (s.trips.n0 + u) as i32;
    let q_param = inverse_projection_lower(s, power, g.q)?;
    if q_param[0].hypot(q_param[1]) >= g.patch_radius {
        return None;
    }
    // Distance from q to the folding curve X = (e − d²/4c)Y² of the sheet.
    let (m, l) = s.local.power(power);
    let w = g.q / m * Complex64::from_polar(1.0, -g.out_angle);
    let kf = g.e - g.d * g.d / (4.0 * g.c);
    let gap = (w.re - kf * w.im * w.im) * g.c.signum();
    let q_margin = m.norm() * gap / (1.0 + (2.0 * kf * w.im).powi(2)).sqrt();
    if q_margin < 0.1 * g.q.norm() {
        return None;
    }
    let height = l * (g.t0 + g.t_gain * q_param[0]);
    let tau_sq = -height * g.eps / g.c;
    if tau_sq <= 0.0 {
        return None;
    }
    let tau0 = tau_sq.sqrt();
    let start = inverse_projection_lower(s, power, g.from_local([tau0, 0.0, 0.0]).z)?;
    let word = sheet_word(power);
    let surface = |p: [f64; 2]| -> Result<([f64; 3], [[f64; 3]; 2])> {
        let j = evaluate_word_from(s, &word, WordInput::GLocal(Jet2::base_plane(p)))?;
        let loc = g.to_local(j.point());
        let f = g.frame();
        let col = |a: usize| {
            let t = j.tangent(a);
            let z = Complex64::new(t[0], t[1]) * f;
            [z.re, z.im, t[2]]
        };
        Ok((loc, [col(0), col(1)]))
    };
    let curve = |tau: f64| {
        let k = -g.c / g.eps;
        ([tau, 0.0, k * tau * tau], [1.0, 0.0, 2.0 * k * tau])
    };
    let (p, tau, margin) =
        intersect_curve_surface(surface, curve, start, tau0, g.patch_radius).ok()?;
    let lower = 2.0 * g.c * p[0] + g.d * p[1];
    if tau <= 0.0 || lower * g.c >= 0.0 || p[0].hypot(p[1]) > g.patch_radius || margin <= 0.0 {
        return None;
    }
    let point = g.from_local([tau, 0.0, -g.c * tau * tau / g.eps]);
    Some(Recrossing {
        u,
        q_param,
        q_margin,
        crossing: TransversalCrossing {
            param: p,
            point,
            curve_param: tau,
            height: point.t,
            margin,
        },
    })
}

/// Smallest `u ≤ U_MAX` (or the configured `u`) for which `H̃_{0;u}⁻`
/// projects over `q` and crosses the local stable curve transversally.
pub fn find_recrossing(s: &SystemSpec) -> Result<Recrossing> {
    if s.trips.u > 0 {
        return try_recrossing(s, s.trips.u).ok_or(LabError::NoRecrossing { u_max: s.trips.u });
    }
    (1..=U_MAX)
        .find_map(|u| try_recrossing(s, u))
        .ok_or(LabError::NoRecrossing { u_max: U_MAX })
}

/// The disk `D` near `ẑ₀`, as the graph `t = h(w)` of `G(H̃_{0;u}⁻)` over
/// the horizontal disk `|w| ≤ radius` around the stable axis.
///
/// Near `ẑ` the sheet is a graph `s = σ(u, v)` over the `G` patch, so
/// `G` sends it to `X = cu² + duv + ev² + eps·σ, Y = v`; inverting the
/// projection of `D` is then a scalar equation in `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransversalChart {
    spec: SystemSpec,
    sheet_power: i32,
    /// `u` of `ẑ` in patch coordinates.
    anchor_u: f64,
    pub radius: f64,
}

impl TransversalChart {
    fn new(s: &SystemSpec, sheet_power: i32, anchor_u: f64) -> Result<Self> {
        let mut chart = TransversalChart {
            spec: *s,
            sheet_power,
            anchor_u,
            radius: f64::INFINITY,
        };
        chart.radius = 0.5 * chart.fold_distance()?;
        Ok(chart)
    }

    /// `σ` and its derivatives over the patch point `(u, v)`.
    pub fn sheet_jet(&self, u: f64, v: f64) -> Result<ScalarJet> {
        let s = &self.spec;
        let g = &s.global;
        let z = g.from_local([u, v, 0.0]).z;
        let p = inverse_projection_lower(s, self.sheet_power, z)
            .filter(|p| p[0].hypot(p[1]) <= g.patch_radius)
            .ok_or(LabError::domain("sheet does not cover the point"))?;
        let j = evaluate_word_from(
            s,
            &sheet_word(self.sheet_power),
            WordInput::GLocal(Jet2::base_plane(p)),
        )?;
        let graph = j
            .absolute()
            .implicit_graph([0, 1], 2)
            .ok_or(LabError::NotAGraph)?;
        let rot = g.frame().conj();
        let r = [[rot.re, -rot.im], [rot.im, rot.re]];
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        for a in 0..2 {
            grad[a] = r[0][a] * graph.grad[0] + r[1][a] * graph.grad[1];
            for b in 0..2 {
                let mut acc = 0.0;
                for i in 0..2 {
                    for k in 0..2 {
                        acc += r[i][a] * graph.hess[i][k] * r[k][b];
                    }
                }
                hess[a][b] = acc;
            }
        }
        Ok(ScalarJet {
            at: [u, v],
            value: graph.value,
            grad,
            hess,
        })
    }

    fn x_and_slope(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        let g = &self.spec.global;
        let sj = self.sheet_jet(u, v)?;
        Ok((
            g.fold_polynomial(u, v) + g.eps * sj.value,
            2.0 * g.c * u + g.d * v + g.eps * sj.grad[0],
        ))
    }

    /// Branch sign: `∂X/∂u` keeps the sign it has at `ẑ`.
    fn branch(&self) -> f64 {
        let g = &self.spec.global;
        (2.0 * g.c * self.anchor_u).signum()
    }

    /// Solves `X(u, v) = x` on the branch of `ẑ`.
    fn solve_u(&self, x: f64, v: f64) -> Result<f64> {
        let sign = self.branch();
        let mut u = self.anchor_u;
        let (mut fx, mut du) = self.x_and_slope(u, v)?;
        let mut res = (fx - x).abs();
        let tol = 1e-15 * (x.abs() + self.anchor_u * self.anchor_u * self.spec.global.c.abs());
        for _ in 0..80 {
            if res <= tol {
                return Ok(u);
            }
            if du * sign <= 0.0 {
                return Err(LabError::domain("fold reached inside the transversal disk"));
            }
            let step = (x - fx) / du;
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let ut = u + scale * step;
                if let Ok((ft, dt)) = self.x_and_slope(ut, v) {
                    if dt * sign > 0.0 && (ft - x).abs() < res {
                        u = ut;
                        fx = ft;
                        du = dt;
                        res = (ft - x).abs();
                        accepted = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res <= 1e3 * tol {
            Ok(u)
        } else {
            Err(LabError::NewtonFailed { residual: res })
        }
    }

    /// Distance from the stable axis to the fold edge of `G(H̃_{0;u}⁻)`.
    fn fold_distance(&self) -> Result<f64> {
        let g = &self.spec.global;
        let fold_u = |v: f64| -> Result<f64> {
            // bisection on ∂X/∂u between the fold and ẑ
            let (_, d_anchor) = self.x_and_slope(self.anchor_u, v)?;
            let sign = d_anchor.signum();
            let (mut lo, mut hi) = (self.anchor_u, -self.anchor_u);
            let mut probe = hi;
            while self.x_and_slope(probe, v).map(|(_, d)| d * sign > 0.0).unwrap_or(false) {
                probe += hi - lo;
            }
            hi = probe;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                match self.x_and_slope(mid, v) {
                    Ok((_, d)) if d * sign > 0.0 => lo = mid,
                    _ => hi = mid,
                }
            }
            Ok(lo)
        };
        let u0 = fold_u(0.0)?;
        let d0 = self.x_and_slope(u0, 0.0)?.0.abs();
        let mut best = d0;
        let n = 50;
        for k in 1..=n {
            for v in [d0 * k as f64 / n as f64, -d0 * k as f64 / n as f64] {
                if v.abs() >= best {
                    continue;
                }
                let u = fold_u(v)?;
                let x = self.x_and_slope(u, v)?.0;
                best = best.min(x.hypot(v));
            }
        }
        if !(best > 0.0 && best.is_finite()) || best > g.patch_radius {
            return Err(LabError::domain("transversal disk has no fold-free neighborhood"));
        }
        Ok(best)
    }

    /// `h` and its derivatives at the horizontal point `w`.
    pub fn height_jet(&self, w: [f64; 2]) -> Result<ScalarJet> {
        if w[0].hypot(w[1]) > self.radius * (1.0 + 1e-9) {
            return Err(LabError::domain("point outside the transversal disk"));
        }
        let g = &self.spec.global;
        let local = Complex64::new(w[0], w[1]) * Complex64::from_polar(1.0, -g.out_angle);
        let v = local.im;
        let u = self.solve_u(local.re, v)?;
        let sj = self.sheet_jet(u, v)?;
        let surface = g.apply_jet_local(&Jet2::graph([u, v], sj.value, sj.grad, sj.hess));
        surface.implicit_graph([0, 1], 2).ok_or(LabError::NotAGraph)
    }

    /// `D_M`: `t = λ^M h(A^{−M} z)` with derivatives in the horizontal `z`.
    pub fn horizontal_jet(&self, power: i32, z: [f64; 2]) -> Result<ScalarJet> {
        let (m, l) = self.spec.local.power(-power);
        let w = m * Complex64::new(z[0], z[1]);
        self.pulled_jet(l, m, [w.re, w.im], z)
    }

    /// `ψ_M(u, v) = λ^M h(A^{−M}(q + e^{iα}(u + iv)))`.
    pub fn psi_jet(&self, power: i32, p: [f64; 2]) -> Result<ScalarJet> {
        let g = &self.spec.global;
        let (m, l) = self.spec.local.power(-power);
        let k = m * g.frame().conj();
        let w = m * g.q + k * Complex64::new(p[0], p[1]);
        self.pulled_jet(l, k, [w.re, w.im], p)
    }

    fn pulled_jet(
        &self,
        inv_l: f64,
        k: Complex64,
        w: [f64; 2],
        at: [f64; 2],
    ) -> Result<ScalarJet> {
        let h = self.height_jet(w)?;
        let scale = 1.0 / inv_l;
        let b = [[k.re, -k.im], [k.im, k.re]];
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        for a in 0..2 {
            grad[a] = scale * (b[0][a] * h.grad[0] + b[1][a] * h.grad[1]);
            for c in 0..2 {
                let mut acc = 0.0;
                for i in 0..2 {
                    for k2 in 0..2 {
                        acc += b[i][a] * h.hess[i][k2] * b[k2][c];
                    }
                }
                hess[a][c] = scale * acc;
            }
        }
        Ok(ScalarJet {
            at,
            value: scale * h.value,
            grad,
            hess,
        })
    }
}

/// Cached results of the trip `H̃₀⁻ → ẑ → D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atlas {
    pub spec: SystemSpec,
    pub bent: SurfacePiece,
    pub recrossing: Recrossing,
    pub chart: TransversalChart,
    pub j: u32,
    pub m0: u32,
    /// Smallest `m` for which `D_m` is a graph over all of `D_a(p)`.
    pub m_min: i32,
    /// `t̂ = λ^j h(0)`.
    pub t_hat: f64,
    /// `σ(D)` over its disk.
    pub sigma_d: f64,
}

impl Atlas {
    pub fn build(s: &SystemSpec) -> Result<Atlas> {
        let report = validate_params(s);
        if let Some(c) = report.failures().next() {
            return Err(LabError::domain(format!("invalid system: {} ({})", c.name, c.detail)));
        }
        let (bent, _, _) = push_to_bent_disk(s, s.trips.n0)?;
        if !check_positively_associated(s) {
            return Err(LabError::NoRecrossing { u_max: U_MAX });
        }
        let recrossing = find_recrossing(s)?;
        let power = (s.trips.n0 + recrossing.u) as i32;
        let chart = TransversalChart::new(s, power, recrossing.crossing.curve_param)?;
        let radius = chart.radius;
        let j = s.trips.j;
        let r = s.local.r;
        let a = s.local.a;
        let mut m_auto = 0u32;
        while r.powi((j + m_auto) as i32) * radius < a {
            m_auto += 1;
        }
        let m0 = if s.trips.m0 > 0 { s.trips.m0 } else { m_auto };
        let m_min = (m_auto as i32 - m0 as i32).max(0);
        let h0 = chart.height_jet([0.0, 0.0])?;
        let t_hat = s.local.lambda.powi(j as i32) * h0.value;
        let sigma_d = sample_slope(&chart, j as i32, r.powi(j as i32) * radius, 32)?;
        Ok(Atlas {
            spec: *s,
            bent,
            recrossing,
            chart,
            j,
            m0,
            m_min,
            t_hat,
            sigma_d,
        })
    }

    /// `j + m0 + m`.
    pub fn power(&self, m: i32) -> i32 {
        (self.j + self.m0) as i32 + m
    }

    fn check_m(&self, m: i32) -> Result<()> {
        if m < self.m_min {
            return Err(LabError::MBelowMin {
                m,
                m_min: self.m_min,
            });
        }
        Ok(())
    }

    /// `σ₀ = σ(D)λ^{m0}r^{−m0}`.
    pub fn sigma0(&self) -> f64 {
        self.sigma_d * (self.spec.local.lambda / self.spec.local.r).powi(self.m0 as i32)
    }

    /// `t₀' = λ^{m0} t̂`.
    pub fn t0_prime(&self) -> f64 {
        self.t_hat * self.spec.local.lambda.powi(self.m0 as i32)
    }

    /// The base-plane point `s` over which `ẑ` sits, in chart coordinates.
    pub fn zhat_preimage(&self) -> SpacePoint {
        let p = self.recrossing.crossing.param;
        self.spec.global.from_local([p[0], p[1], 0.0])
    }

    pub fn transversal_disk(&self, m: i32) -> Result<TransversalDisk> {
        self.check_m(m)?;
        let power = self.power(m);
        let height = self.chart.horizontal_jet(power, [0.0, 0.0])?.value;
        let piece = SurfacePiece {
            label: format!("D_{m}"),
            word: ChartWord::new(Vec::new()),
            lift: Lift::Height {
                chart: self.chart,
                power,
            },
            domain: Domain::Disk {
                center: [0.0, 0.0],
                radius: self.spec.local.a,
            },
            side: Side::Whole,
            clip: None,
            spec: self.spec,
        };
        Ok(TransversalDisk { m, height, piece })
    }

    /// `σ(D_m)` on an `n × n` sampling of `D_a(p)`.
    pub fn slope(&self, m: i32, n: usize) -> Result<f64> {
        self.check_m(m)?;
        sample_slope(&self.chart, self.power(m), self.spec.local.a, n)
    }

    /// `H̃_m = L^{n0}(G(D_m ∩ patch))`, clipped to `U_a(p)`.
    pub fn bent_disk(&self, m: i32) -> Result<SurfacePiece> {
        self.check_m(m)?;
        let s = &self.spec;
        let word = ChartWord::new(alloc::vec![Atom::G, Atom::L(s.trips.n0 as i32)]);
        let lift = Lift::Psi {
            chart: self.chart,
            power: self.power(m),
        };
        clipped_piece(s, format!("H~_{m}"), word, lift, Side::Whole)
    }

    /// `w_m`: the probe `ρ̃ = {q} × R` against `D_m`.
    pub fn probe_intersection(&self, m: i32) -> Result<ProbeCrossing> {
        self.check_m(m)?;
        let power = self.power(m);
        let g = &self.spec.global;
        let chart = self.chart;
        let surface = |p: [f64; 2]| -> Result<([f64; 3], [[f64; 3]; 2])> {
            let psi = chart.psi_jet(power, p)?;
            Ok((
                [p[0], p[1], psi.value],
                [[1.0, 0.0, psi.grad[0]], [0.0, 1.0, psi.grad[1]]],
            ))
        };
        let curve = |sigma: f64| ([0.0, 0.0, sigma], [0.0, 0.0, 1.0]);
        let guess = chart.psi_jet(power, [0.0, 0.0])?.value;
        let (p, sigma, margin) =
            intersect_curve_surface(surface, curve, [0.0, 0.0], guess, g.patch_radius)?;
        let point = g.from_local([p[0], p[1], sigma]);
        Ok(ProbeCrossing {
            m,
            distance: (point.z - g.q).norm().hypot(sigma),
            crossing: TransversalCrossing {
                param: p,
                point,
                curve_param: sigma,
                height: sigma,
                margin,
            },
        })
    }
}

fn sample_slope(chart: &TransversalChart, power: i32, radius: f64, n: usize) -> Result<f64> {
    let mut samples = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let z = [
                radius * (-1.0 + (2 * i + 1) as f64 / n as f64),
                radius * (-1.0 + (2 * k + 1) as f64 / n as f64),
            ];
            if z[0].hypot(z[1]) > radius {
                continue;
            }
            let h = chart.horizontal_jet(power, z)?;
            let gn = h.grad[0].hypot(h.grad[1]);
            samples.push([1.0, 0.0, h.grad[0]]);
            samples.push([0.0, 1.0, h.grad[1]]);
            if gn > 0.0 {
                samples.push([h.grad[0] / gn, h.grad[1] / gn, gn]);
            }
        }
    }
    max_absolute_slope(&samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalDisk {
    pub m: i32,
    /// `t` where `D_m` meets the stable axis.
    pub height: f64,
    pub piece: SurfacePiece,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeCrossing {
    pub m: i32,
    pub distance: f64,
    pub crossing: TransversalCrossing,
}

/// `D_m` for every `m` in the range.
pub fn transversal_disks(atlas: &Atlas, ms: impl IntoIterator<Item = i32>) -> Result<Vec<TransversalDisk>> {
    ms.into_iter().map(|m| atlas.transversal_disk(m)).collect()
}

pub fn bent_disk_sequence(atlas: &Atlas, m: i32) -> Result<SurfacePiece> {
    atlas.bent_disk(m)
}

pub fn probe_intersection(atlas: &Atlas, m: i32) -> Result<ProbeCrossing> {
    atlas.probe_intersection(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_sheet_is_the_normal_form_graph() {
        let s = SystemSpec::default();
        let h = initial_sheet(&s);
        for p in [[0.05, 0.1], [-0.1, 0.02], [0.0, -0.15]] {
            let j = h.jet(p).unwrap();
            let x = j.point();
            assert!((x.z.re - (x.t - 0.5).powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn bent_disk_fits_in_the_patch() {
        let s = SystemSpec::default();
        let (b, _, _) = push_to_bent_disk(&s, 8).unwrap();
        let Domain::Star(star) = &b.domain else {
            panic!("star domain expected")
        };
        // along u: r⁸u² = 1
        let expect = 1.5f64.powi(-4);
        assert!((star.radius_at(0.0) - expect).abs() < 1e-9);
        assert!(matches!(push_to_bent_disk(&s, 7), Err(LabError::N0TooSmall)));
    }

    #[test]
    fn recrossing_at_defaults() {
        let s = SystemSpec::default();
        let rc = find_recrossing(&s).unwrap();
        assert_eq!(rc.u, 4);
        assert!(rc.crossing.margin > 0.0);
        assert!(rc.crossing.curve_param > 0.0);
    }

    #[test]
    fn star_domain_of_a_disk() {
        let (d, touched) = StarDomain::build([0.1, 0.0], 1.0, 64, |p| {
            (p[0] - 0.1).hypot(p[1]) <= 0.3
        });
        assert!(!touched);
        assert!(d.radii.iter().all(|r| (r - 0.3).abs() < 1e-12));
        assert!(d.contains([0.35, 0.0]));
        assert!(!d.contains([0.45, 0.0]));
    }
}
