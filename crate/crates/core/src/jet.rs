//! Second-order jets of surface parametrizations `R² → R³`.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::SpacePoint;
use crate::linalg::{inv2, norm3};

/// Value, Jacobian and Hessian of a map `(p₀, p₁) ↦ (x, y, t)`.
/// `hess[i][a][b] = ∂²hᵢ / ∂p_a ∂p_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: [f64; 3],
    pub jac: [[f64; 2]; 3],
    pub hess: [[[f64; 2]; 2]; 3],
}

/// 2-jet of a scalar function of two variables at `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJet {
    pub at: [f64; 2],
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

/// First and second derivatives of a map `R³ → R³` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapJet {
    pub value: [f64; 3],
    pub d1: [[f64; 3]; 3],
    pub d2: [[[f64; 3]; 3]; 3],
}

impl Jet2 {
    /// The inclusion `(x, y) ↦ (x, y, 0)` of the base plane.
    pub fn base_plane(p: [f64; 2]) -> Jet2 {
        Jet2 {
            value: [p[0], p[1], 0.0],
            jac: [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
            hess: [[[0.0; 2]; 2]; 3],
        }
    }

    /// The graph `(u, v) ↦ (u, v, ψ(u, v))` from a scalar 2-jet of `ψ`.
    pub fn graph(p: [f64; 2], psi: f64, grad: [f64; 2], hess: [[f64; 2]; 2]) -> Jet2 {
        Jet2 {
            value: [p[0], p[1], psi],
            jac: [[1.0, 0.0], [0.0, 1.0], grad],
            hess: [[[0.0; 2]; 2], [[0.0; 2]; 2], hess],
        }
    }

    /// Chain rule with an outer map given by its 2-jet at `self.value`.
    pub fn compose(&self, f: &MapJet) -> Jet2 {
        let mut out = Jet2 {
            value: f.value,
            jac: [[0.0; 2]; 3],
            hess: [[[0.0; 2]; 2]; 3],
        };
        for i in 0..3 {
            for a in 0..2 {
                out.jac[i][a] = (0..3).map(|j| f.d1[i][j] * self.jac[j][a]).sum();
                for b in 0..2 {
                    let mut h = 0.0;
                    for j in 0..3 {
                        h += f.d1[i][j] * self.hess[j][a][b];
                        for k in 0..3 {
                            h += f.d2[i][j][k] * self.jac[j][a] * self.jac[k][b];
                        }
                    }
                    out.hess[i][a][b] = h;
                }
            }
        }
        out
    }

    /// Applies `(z, t) ↦ (m·z + dz, s·t + dt)`.
    pub fn similarity(&self, m: Complex64, dz: Complex64, s: f64, dt: f64) -> Jet2 {
        let rot = |x: f64, y: f64| (m.re * x - m.im * y, m.im * x + m.re * y);
        let mut out = *self;
        let (x, y) = rot(self.value[0], self.value[1]);
        out.value = [x + dz.re, y + dz.im, s * self.value[2] + dt];
        for a in 0..2 {
            let (x, y) = rot(self.jac[0][a], self.jac[1][a]);
            out.jac[0][a] = x;
            out.jac[1][a] = y;
            out.jac[2][a] = s * self.jac[2][a];
            for b in 0..2 {
                let (x, y) = rot(self.hess[0][a][b], self.hess[1][a][b]);
                out.hess[0][a][b] = x;
                out.hess[1][a][b] = y;
                out.hess[2][a][b] = s * self.hess[2][a][b];
            }
        }
        out
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.value[0], self.value[1])
    }

    /// Horizontal block of the Jacobian (the differential of `pr∘Φ`).
    pub fn horizontal_jacobian(&self) -> [[f64; 2]; 2] {
        [self.jac[0], self.jac[1]]
    }

    pub fn column(&self, a: usize) -> [f64; 3] {
        [self.jac[0][a], self.jac[1][a], self.jac[2][a]]
    }

    /// `g = det D(pr∘Φ)`.
    pub fn fold_det(&self) -> f64 {
        self.jac[0][0] * self.jac[1][1] - self.jac[0][1] * self.jac[1][0]
    }

    /// `g` divided by the product of the tangent column norms.
    pub fn fold_value(&self) -> f64 {
        let n0 = norm3(self.column(0));
        let n1 = norm3(self.column(1));
        let d = self.fold_det();
        if n0 == 0.0 || n1 == 0.0 {
            d
        } else {
            d / (n0 * n1)
        }
    }

    /// `∇g` from the Hessian.
    pub fn fold_gradient(&self) -> [f64; 2] {
        let j = &self.jac;
        let h = &self.hess;
        let mut g = [0.0; 2];
        for (a, ga) in g.iter_mut().enumerate() {
            *ga = h[0][0][a] * j[1][1] + j[0][0] * h[1][1][a]
                - h[0][1][a] * j[1][0]
                - j[0][1] * h[1][0][a];
        }
        g
    }

    /// Directional second derivative `Σ H[a][b] τ_a τ_b` per component.
    pub fn second_along(&self, tau: [f64; 2]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    *o += self.hess[i][a][b] * tau[a] * tau[b];
                }
            }
        }
        out
    }

    /// The surface written locally as a graph `x_g = ψ(x_{h₀}, x_{h₁})`;
    /// `None` when the `h` block of the Jacobian is singular.
    #[allow(clippy::needless_range_loop)]
    pub fn implicit_graph(&self, h: [usize; 2], g: usize) -> Option<ScalarJet> {
        let jh = [self.jac[h[0]], self.jac[h[1]]];
        let inv = inv2(&jh)?;
        let jg = self.jac[g];
        let mut grad = [0.0; 2];
        for (i, gi) in grad.iter_mut().enumerate() {
            *gi = jg[0] * inv[0][i] + jg[1] * inv[1][i];
        }
        let mut core = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                core[a][b] = self.hess[g][a][b]
                    - grad[0] * self.hess[h[0]][a][b]
                    - grad[1] * self.hess[h[1]][a][b];
            }
        }
        let mut hess = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        acc += inv[a][i] * core[a][b] * inv[b][j];
                    }
                }
                hess[i][j] = acc;
            }
        }
        Some(ScalarJet {
            at: [self.value[h[0]], self.value[h[1]]],
            value: self.value[g],
            grad,
            hess,
        })
    }

    /// `J·τ`.
    pub fn push(&self, tau: [f64; 2]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.jac[i][0] * tau[0] + self.jac[i][1] * tau[1];
        }
        out
    }
}

/// A jet in an inner frame together with a pending similarity:
/// absolute coordinates are `(zf·z_inner, tf·t_inner)`.
///
/// Chains of linear atoms only update the frame, so fold values and
/// curvatures can be computed at unit scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramedJet {
    pub inner: Jet2,
    pub zf: Complex64,
    pub tf: f64,
}

impl FramedJet {
    pub fn new(inner: Jet2) -> Self {
        FramedJet {
            inner,
            zf: Complex64::new(1.0, 0.0),
            tf: 1.0,
        }
    }

    /// Post-composes with the linear map `(z, t) ↦ (m·z, s·t)`.
    pub fn then_linear(self, m: Complex64, s: f64) -> Self {
        FramedJet {
            inner: self.inner,
            zf: m * self.zf,
            tf: s * self.tf,
        }
    }

    /// The jet in absolute chart coordinates.
    pub fn absolute(&self) -> Jet2 {
        self.inner
            .similarity(self.zf, Complex64::new(0.0, 0.0), self.tf, 0.0)
    }

    pub fn point(&self) -> SpacePoint {
        SpacePoint {
            z: self.zf * self.inner.z(),
            t: self.tf * self.inner.value[2],
        }
    }

    pub fn z_norm(&self) -> f64 {
        self.zf.norm() * self.inner.z().norm()
    }

    /// Absolute tangent vector `∂Φ/∂p_a`.
    pub fn tangent(&self, a: usize) -> [f64; 3] {
        let c = self.inner.column(a);
        let z = self.zf * Complex64::new(c[0], c[1]);
        [z.re, z.im, self.tf * c[2]]
    }

    /// Normalized fold function; the frame does not change its sign.
    pub fn fold_value(&self) -> f64 {
        self.inner.fold_value()
    }
}
