//! Smooth SU(2) field configurations on ℝ³: a connection A and a Higgs
//! field Φ, with the gauge-covariant differential operators built on them.
//!
//! Configurations are closures over points, so gauge transforms, rescalings
//! and reconstructed fields compose without ever committing to a grid.
//! Derivatives are analytic when the configuration carries them and central
//! finite differences otherwise; every consumer states which one it got.
//!
//! Scalars built from pairs of field values use ⟨a,b⟩ = -2 Re tr(ab), twice
//! the algebra inner product of [`crate::su2`]. Under this pairing the
//! charge-1 monopole has |Φ| → 1 - 1/r and carries total abelian flux 8π,
//! and the half-basis eᵃ/2 is orthonormal.

use crate::{su2, CMatrix2, Complex, Error, Point, Result};
use std::sync::Arc;

/// Smallest admissible finite-difference step; below this the stencil is
/// pure roundoff.
pub const MIN_FD_STEP: f64 = 1e-8;

pub type MatrixFn = dyn Fn(&Point) -> CMatrix2 + Send + Sync;
pub type TripleFn = dyn Fn(&Point) -> [CMatrix2; 3] + Send + Sync;
pub type GradTripleFn = dyn Fn(&Point) -> [[CMatrix2; 3]; 3] + Send + Sync;

/// Field-level pairing ⟨a,b⟩ = -2 Re tr(ab) (4× the algebra inner product).
pub fn pair(a: &CMatrix2, b: &CMatrix2) -> f64 {
    -2.0 * (a * b).trace().re
}

/// Norm under [`pair`].
pub fn field_norm(a: &CMatrix2) -> f64 {
    pair(a, a).max(0.0).sqrt()
}

/// A connection + Higgs pair with optional analytic derivatives.
///
/// Cloning is cheap (shared closures). `charge` is bookkeeping carried to
/// the scattering and rational-map layers; it is not re-derived from the
/// fields.
#[derive(Clone)]
pub struct FieldConfiguration {
    higgs: Arc<MatrixFn>,
    connection: Arc<TripleFn>,
    d_higgs: Option<Arc<TripleFn>>,
    /// d_connection(x)[i][j] = ∂ᵢ A_j
    d_connection: Option<Arc<GradTripleFn>>,
    charge: u32,
}

impl FieldConfiguration {
    pub fn new(
        charge: u32,
        higgs: impl Fn(&Point) -> CMatrix2 + Send + Sync + 'static,
        connection: impl Fn(&Point) -> [CMatrix2; 3] + Send + Sync + 'static,
    ) -> Self {
        FieldConfiguration {
            higgs: Arc::new(higgs),
            connection: Arc::new(connection),
            d_higgs: None,
            d_connection: None,
            charge,
        }
    }

    pub fn with_derivatives(
        mut self,
        d_higgs: impl Fn(&Point) -> [CMatrix2; 3] + Send + Sync + 'static,
        d_connection: impl Fn(&Point) -> [[CMatrix2; 3]; 3] + Send + Sync + 'static,
    ) -> Self {
        self.d_higgs = Some(Arc::new(d_higgs));
        self.d_connection = Some(Arc::new(d_connection));
        self
    }

    /// Constant diagonal Higgs vacuum Φ = diag(i, -i), A = 0; the reference
    /// background of the scattering examples.
    pub fn vacuum() -> Self {
        let phi = CMatrix2::new(
            Complex::new(0.0, 1.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, -1.0),
        );
        FieldConfiguration::new(0, move |_| phi, |_| [CMatrix2::zeros(); 3]).with_derivatives(
            |_| [CMatrix2::zeros(); 3],
            |_| [[CMatrix2::zeros(); 3]; 3],
        )
    }

    pub fn charge(&self) -> u32 {
        self.charge
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.d_higgs.is_some() && self.d_connection.is_some()
    }

    pub fn higgs(&self, x: &Point) -> CMatrix2 {
        (self.higgs)(x)
    }

    pub fn connection(&self, x: &Point) -> [CMatrix2; 3] {
        (self.connection)(x)
    }

    /// |Φ(x)| under the field pairing.
    pub fn higgs_norm(&self, x: &Point) -> f64 {
        field_norm(&self.higgs(x))
    }

    fn check_step(h: f64) -> Result<()> {
        if h < MIN_FD_STEP {
            return Err(Error::Validation(format!(
                "finite-difference step {h:.3e} below minimum {MIN_FD_STEP:.1e}"
            )));
        }
        Ok(())
    }

    /// ∂ᵢΦ for i = 1..3, analytic if available, else central differences of
    /// step `h`.
    pub fn d_higgs(&self, x: &Point, h: f64) -> Result<[CMatrix2; 3]> {
        if let Some(d) = &self.d_higgs {
            return Ok(d(x));
        }
        Self::check_step(h)?;
        Ok(central_diff3(|p| (self.higgs)(p), x, h))
    }

    /// ∂ᵢA_j, analytic if available.
    pub fn d_connection(&self, x: &Point, h: f64) -> Result<[[CMatrix2; 3]; 3]> {
        if let Some(d) = &self.d_connection {
            return Ok(d(x));
        }
        Self::check_step(h)?;
        let mut out = [[CMatrix2::zeros(); 3]; 3];
        for i in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            let ap = (self.connection)(&xp);
            let am = (self.connection)(&xm);
            for j in 0..3 {
                out[i][j] = (ap[j] - am[j]) / Complex::new(2.0 * h, 0.0);
            }
        }
        Ok(out)
    }

    /// Curvature F_ij = ∂ᵢA_j - ∂ⱼAᵢ + [Aᵢ, A_j], returned as the cyclic
    /// triple (F₂₃, F₃₁, F₁₂).
    pub fn curvature(&self, x: &Point, h: f64) -> Result<[CMatrix2; 3]> {
        let da = self.d_connection(x, h)?;
        let a = self.connection(x);
        let mut f = [CMatrix2::zeros(); 3];
        for k in 0..3 {
            let i = (k + 1) % 3;
            let j = (k + 2) % 3;
            f[k] = da[i][j] - da[j][i] + su2::bracket(&a[i], &a[j]);
        }
        Ok(f)
    }

    /// Covariant derivative ∇ᵢΦ = ∂ᵢΦ + [Aᵢ, Φ].
    pub fn cov_deriv_higgs(&self, x: &Point, h: f64) -> Result<[CMatrix2; 3]> {
        let dphi = self.d_higgs(x, h)?;
        let a = self.connection(x);
        let phi = self.higgs(x);
        let mut out = [CMatrix2::zeros(); 3];
        for i in 0..3 {
            out[i] = dphi[i] + su2::bracket(&a[i], &phi);
        }
        Ok(out)
    }

    /// Pointwise first-order equation defect: max over the cyclic index of
    /// |F_ij - ε_ijk ∇ₖΦ| under the field pairing.
    pub fn bogomolny_residual(&self, x: &Point, h: f64) -> Result<f64> {
        let f = self.curvature(x, h)?;
        let d = self.cov_deriv_higgs(x, h)?;
        let mut worst = 0.0_f64;
        for k in 0..3 {
            worst = worst.max(field_norm(&(f[k] - d[k])));
        }
        Ok(worst)
    }

    /// Energy density ½|F|² + ¼ Σᵢ ⟨∇ᵢΦ, ∇ᵢΦ⟩ with |F|² = Σ_{i<j} ⟨F_ij, F_ij⟩.
    ///
    /// The two terms enter with different weights by construction; the
    /// Laplacian-normalized density below integrates to the 8π flux instead.
    pub fn energy_density(&self, x: &Point, h: f64) -> Result<f64> {
        let f = self.curvature(x, h)?;
        let d = self.cov_deriv_higgs(x, h)?;
        let ff: f64 = f.iter().map(|m| pair(m, m)).sum();
        let dd: f64 = d.iter().map(|m| pair(m, m)).sum();
        Ok(0.5 * ff + 0.25 * dd)
    }

    /// Laplacian-normalized energy density Δ⟨Φ,Φ⟩ by second differences of
    /// the gauge-invariant scalar |Φ|².
    pub fn energy_density_laplacian(&self, x: &Point, h: f64) -> Result<f64> {
        Self::check_step(h)?;
        let n = |p: &Point| {
            let m = self.higgs(p);
            pair(&m, &m)
        };
        let c = n(x);
        let mut acc = 0.0;
        for i in 0..3 {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            acc += n(&xp) - 2.0 * c + n(&xm);
        }
        Ok(acc / (h * h))
    }

    /// Gauge transform (A, Φ) ↦ (gAg⁻¹ + g d(g⁻¹), gΦg⁻¹).
    ///
    /// Analytic derivatives survive the transform (the gauge transform
    /// carries its own first and second derivatives); otherwise the result
    /// falls back to finite differences like any other configuration.
    pub fn gauge_apply(&self, t: &GaugeTransform) -> FieldConfiguration {
        let higgs = self.higgs.clone();
        let conn = self.connection.clone();
        let tg = t.clone();
        let tg2 = t.clone();
        let higgs2 = self.higgs.clone();
        let conn2 = self.connection.clone();

        let new_higgs = move |x: &Point| -> CMatrix2 {
            let g = (tg.g)(x);
            g * higgs(x) * g.adjoint()
        };
        let new_conn = move |x: &Point| -> [CMatrix2; 3] {
            let g = (tg2.g)(x);
            let gi = g.adjoint();
            let dg = (tg2.dg)(x);
            let a = conn(x);
            let mut out = [CMatrix2::zeros(); 3];
            for j in 0..3 {
                out[j] = g * a[j] * gi - dg[j] * gi;
            }
            out
        };

        let mut cfg = FieldConfiguration::new(self.charge, new_higgs, new_conn);
        if self.has_analytic_derivatives() {
            let d_higgs = self.d_higgs.clone().unwrap();
            let d_conn = self.d_connection.clone().unwrap();
            let t_h = t.clone();
            let t_a = t.clone();
            let dh = move |x: &Point| -> [CMatrix2; 3] {
                let g = (t_h.g)(x);
                let gi = g.adjoint();
                let dg = (t_h.dg)(x);
                let phi = higgs2(x);
                let dphi = d_higgs(x);
                let mut out = [CMatrix2::zeros(); 3];
                for i in 0..3 {
                    // ∂ᵢ(g⁻¹) = -g⁻¹ (∂ᵢg) g⁻¹
                    let dgi = -gi * dg[i] * gi;
                    out[i] = dg[i] * phi * gi + g * dphi[i] * gi + g * phi * dgi;
                }
                out
            };
            let da = move |x: &Point| -> [[CMatrix2; 3]; 3] {
                let g = (t_a.g)(x);
                let gi = g.adjoint();
                let dg = (t_a.dg)(x);
                let d2g = (t_a.d2g)(x);
                let a = conn2(x);
                let da = d_conn(x);
                let mut out = [[CMatrix2::zeros(); 3]; 3];
                for i in 0..3 {
                    let dgi_i = -gi * dg[i] * gi;
                    for j in 0..3 {
                        out[i][j] = dg[i] * a[j] * gi
                            + g * da[i][j] * gi
                            + g * a[j] * dgi_i
                            - d2g[i][j] * gi
                            - dg[j] * dgi_i;
                    }
                }
                out
            };
            cfg = cfg.with_derivatives(dh, da);
        }
        cfg
    }

    /// Rescaled configuration x ↦ (c·A(cx), c·Φ(cx)); multiplies the total
    /// flux by c while preserving the first-order equations.
    pub fn scale(&self, c: f64) -> FieldConfiguration {
        let higgs = self.higgs.clone();
        let conn = self.connection.clone();
        let cc = Complex::new(c, 0.0);
        let mut cfg = FieldConfiguration::new(
            self.charge,
            move |x: &Point| higgs(&(x * c)) * cc,
            move |x: &Point| {
                let a = conn(&(x * c));
                [a[0] * cc, a[1] * cc, a[2] * cc]
            },
        );
        if self.has_analytic_derivatives() {
            let dh = self.d_higgs.clone().unwrap();
            let da = self.d_connection.clone().unwrap();
            let c2 = Complex::new(c * c, 0.0);
            cfg = cfg.with_derivatives(
                move |x: &Point| {
                    let d = dh(&(x * c));
                    [d[0] * c2, d[1] * c2, d[2] * c2]
                },
                move |x: &Point| {
                    let mut d = da(&(x * c));
                    for row in &mut d {
                        for m in row.iter_mut() {
                            *m *= c2;
                        }
                    }
                    d
                },
            );
        }
        cfg
    }

    /// Abelian flux through the sphere of radius `r` about the origin,
    /// ∮ Σₖ n̂ₖ ε_kij ⟨F_ij, Φ⟩ dS (both antisymmetric index pairs counted).
    pub fn flux(&self, r: f64, sphere_order: usize, h: f64) -> Result<f64> {
        let rule = crate::numeric::quad::SphereRule::product(sphere_order);
        let origin = Point::zeros();
        let mut err: Option<Error> = None;
        let val = rule.integrate(r, &origin, |x, n| {
            let f = match self.curvature(x, h) {
                Ok(f) => f,
                Err(e) => {
                    err.get_or_insert(e);
                    return 0.0;
                }
            };
            let phi = self.higgs(x);
            2.0 * (0..3).map(|k| n[k] * pair(&f[k], &phi)).sum::<f64>()
        });
        match err {
            Some(e) => Err(e),
            None => Ok(val),
        }
    }

    /// Surface-term energy: flux through spheres of the given radii, a 1/R
    /// Richardson extrapolation of them, and the ball integral of
    /// [`Self::energy_density`] inside the largest radius.
    pub fn total_energy(
        &self,
        radii: &[f64],
        sphere_order: usize,
        h: f64,
    ) -> Result<TotalEnergy> {
        if radii.is_empty() {
            return Err(Error::Validation("need at least one radius".into()));
        }
        let mut fluxes = Vec::with_capacity(radii.len());
        for &r in radii {
            let f = self.flux(r, sphere_order, h)?;
            let f_check = self.flux(r, sphere_order + 6, h)?;
            if (f - f_check).abs() > 1e-4 * (1.0 + f.abs()) {
                return Err(Error::Numeric(format!(
                    "surface quadrature not converged at R = {r}: {f} vs {f_check}"
                )));
            }
            fluxes.push([r, f]);
        }
        // Flux(R) = F∞ - C/R up to exponentially small terms; fit linearly
        // in 1/R. A single radius degenerates to no extrapolation.
        let extrapolated = if fluxes.len() == 1 {
            fluxes[0][1]
        } else {
            let n = fluxes.len() as f64;
            let (mut su, mut sv, mut suu, mut suv) = (0.0, 0.0, 0.0, 0.0);
            for &[r, f] in &fluxes {
                let u = 1.0 / r;
                su += u;
                sv += f;
                suu += u * u;
                suv += u * f;
            }
            let denom = n * suu - su * su;
            (sv * suu - su * suv) / denom
        };
        let r_max = radii.iter().cloned().fold(0.0, f64::max);
        let ball = crate::numeric::quad::ball_rule(&Point::zeros(), r_max, 48, sphere_order);
        let mut ball_energy = 0.0;
        for (x, w) in &ball {
            ball_energy += w * self.energy_density(x, h)?;
        }
        Ok(TotalEnergy {
            fluxes,
            extrapolated,
            ball_energy,
        })
    }

    /// Both sides of the sphere-truncated energy identity
    /// ∫ (|F|² + |∇Φ|²) = ∫ |F - ∇Φ|² + flux(R), all under the field
    /// pairing with every antisymmetric pair counted. Exact for smooth
    /// fields up to quadrature, whether or not the first-order equations
    /// hold.
    pub fn energy_balance(&self, r: f64, sphere_order: usize, h: f64) -> Result<(f64, f64)> {
        let ball = crate::numeric::quad::ball_rule(&Point::zeros(), r, 48, sphere_order);
        let mut lhs = 0.0;
        let mut defect = 0.0;
        for (x, w) in &ball {
            let f = self.curvature(x, h)?;
            let d = self.cov_deriv_higgs(x, h)?;
            for k in 0..3 {
                lhs += w * (pair(&f[k], &f[k]) + pair(&d[k], &d[k]));
                let diff = f[k] - d[k];
                defect += w * pair(&diff, &diff);
            }
        }
        let rhs = defect + self.flux(r, sphere_order, h)?;
        Ok((lhs, rhs))
    }
}

/// Flux-based total energy report from [`FieldConfiguration::total_energy`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct TotalEnergy {
    /// (radius, flux) pairs, in input order.
    pub fluxes: Vec<[f64; 2]>,
    /// 1/R → 0 extrapolation of the fluxes.
    pub extrapolated: f64,
    /// ∫ energy_density over the ball of the largest radius.
    pub ball_energy: f64,
}

/// Smooth SU(2)-valued gauge transform with analytic first and second
/// derivatives, assembled from constants and compactly supported axis
/// rotations.
#[derive(Clone)]
pub struct GaugeTransform {
    g: Arc<MatrixFn>,
    dg: Arc<TripleFn>,
    d2g: Arc<GradTripleFn>,
}

impl GaugeTransform {
    pub fn identity() -> Self {
        Self::constant(CMatrix2::identity())
    }

    /// Spatially constant transform; `g` should be (close to) SU(2).
    pub fn constant(g: CMatrix2) -> Self {
        debug_assert!(su2::unitary_defect(&g) < 1e-9);
        GaugeTransform {
            g: Arc::new(move |_| g),
            dg: Arc::new(|_| [CMatrix2::zeros(); 3]),
            d2g: Arc::new(|_| [[CMatrix2::zeros(); 3]; 3]),
        }
    }

    /// g(x) = exp(f(x)·eᵃ) with f a smooth bump of the given amplitude
    /// supported in |x - centre| < radius; equals the identity outside, so
    /// the transform is framed at infinity.
    pub fn axis_bump(axis: usize, amplitude: f64, centre: Point, radius: f64) -> Self {
        assert!((1..=3).contains(&axis), "axis must be 1..=3");
        assert!(radius > 0.0);
        let e = su2::basis()[axis - 1];
        let r2 = radius * radius;

        // f = amplitude · F(q), q = |x-c|²/R², F(q) = exp(1 - 1/(1-q)).
        // F' = -F/u², F'' = F(1-2u)/u⁴ with u = 1-q.
        let bump = move |x: &Point| -> (f64, [f64; 3], [[f64; 3]; 3]) {
            let d = x - centre;
            let q = d.norm_squared() / r2;
            if q >= 1.0 {
                return (0.0, [0.0; 3], [[0.0; 3]; 3]);
            }
            let u = 1.0 - q;
            let f = amplitude * (1.0 - 1.0 / u).exp();
            let fp = -f / (u * u);
            let fpp = f * (1.0 - 2.0 * u) / (u * u * u * u);
            let dq = [2.0 * d[0] / r2, 2.0 * d[1] / r2, 2.0 * d[2] / r2];
            let mut grad = [0.0; 3];
            let mut hess = [[0.0; 3]; 3];
            for i in 0..3 {
                grad[i] = fp * dq[i];
                for j in 0..3 {
                    hess[i][j] = fpp * dq[i] * dq[j] + if i == j { fp * 2.0 / r2 } else { 0.0 };
                }
            }
            (f, grad, hess)
        };

        let b1 = bump;
        let b2 = bump;
        GaugeTransform {
            g: Arc::new(move |x| {
                let (f, _, _) = bump(x);
                su2::exp(&(e * Complex::new(f, 0.0)))
            }),
            dg: Arc::new(move |x| {
                let (f, grad, _) = b1(x);
                let (s, c) = f.sin_cos();
                let base = CMatrix2::identity() * Complex::new(-s, 0.0) + e * Complex::new(c, 0.0);
                [
                    base * Complex::new(grad[0], 0.0),
                    base * Complex::new(grad[1], 0.0),
                    base * Complex::new(grad[2], 0.0),
                ]
            }),
            d2g: Arc::new(move |x| {
                let (f, grad, hess) = b2(x);
                let (s, c) = f.sin_cos();
                let first = CMatrix2::identity() * Complex::new(-s, 0.0) + e * Complex::new(c, 0.0);
                let second =
                    CMatrix2::identity() * Complex::new(-c, 0.0) + e * Complex::new(-s, 0.0);
                let mut out = [[CMatrix2::zeros(); 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        out[i][j] = first * Complex::new(hess[i][j], 0.0)
                            + second * Complex::new(grad[i] * grad[j], 0.0);
                    }
                }
                out
            }),
        }
    }

    /// Pointwise product (self·other)(x) = self(x)·other(x).
    pub fn compose(&self, other: &GaugeTransform) -> GaugeTransform {
        let (g1, dg1, d2g1) = (self.g.clone(), self.dg.clone(), self.d2g.clone());
        let (g2, dg2, d2g2) = (other.g.clone(), other.dg.clone(), other.d2g.clone());
        let (g1b, dg1b) = (self.g.clone(), self.dg.clone());
        let (g2b, dg2b) = (other.g.clone(), other.dg.clone());
        let g1c = self.g.clone();
        let g2c = other.g.clone();
        GaugeTransform {
            g: Arc::new(move |x| g1c(x) * g2c(x)),
            dg: Arc::new(move |x| {
                let (a, b) = (g1b(x), g2b(x));
                let (da, db) = (dg1b(x), dg2b(x));
                [
                    da[0] * b + a * db[0],
                    da[1] * b + a * db[1],
                    da[2] * b + a * db[2],
                ]
            }),
            d2g: Arc::new(move |x| {
                let (a, b) = (g1(x), g2(x));
                let (da, db) = (dg1(x), dg2(x));
                let (d2a, d2b) = (d2g1(x), d2g2(x));
                let mut out = [[CMatrix2::zeros(); 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        out[i][j] =
                            d2a[i][j] * b + da[i] * db[j] + da[j] * db[i] + a * d2b[i][j];
                    }
                }
                out
            }),
        }
    }

    pub fn at(&self, x: &Point) -> CMatrix2 {
        (self.g)(x)
    }
}

/// Central differences of a matrix-valued map in the three coordinate
/// directions.
pub fn central_diff3(f: impl Fn(&Point) -> CMatrix2, x: &Point, h: f64) -> [CMatrix2; 3] {
    let mut out = [CMatrix2::zeros(); 3];
    for i in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        out[i] = (f(&xp) - f(&xm)) / Complex::new(2.0 * h, 0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config() -> FieldConfiguration {
        // Analytic non-solution fields with enough structure to exercise
        // every term: Φ = sin(x₁)e¹ + x₂x₃e², A_j built from polynomials.
        let e = su2::basis();
        FieldConfiguration::new(
            1,
            move |x: &Point| {
                e[0] * Complex::new(x[0].sin(), 0.0) + e[1] * Complex::new(x[1] * x[2], 0.0)
            },
            move |x: &Point| {
                [
                    e[2] * Complex::new(0.3 * x[1], 0.0),
                    e[0] * Complex::new(x[2] * x[2], 0.0),
                    e[1] * Complex::new(0.5 * x[0] * x[1], 0.0),
                ]
            },
        )
    }

    fn analytic_sample_config() -> FieldConfiguration {
        let e = su2::basis();
        sample_config().with_derivatives(
            move |x: &Point| {
                [
                    e[0] * Complex::new(x[0].cos(), 0.0),
                    e[1] * Complex::new(x[2], 0.0),
                    e[1] * Complex::new(x[1], 0.0),
                ]
            },
            move |x: &Point| {
                let z = CMatrix2::zeros();
                let mut d = [[z; 3]; 3];
                d[1][0] = e[2] * Complex::new(0.3, 0.0);
                d[2][1] = e[0] * Complex::new(2.0 * x[2], 0.0);
                d[0][2] = e[1] * Complex::new(0.5 * x[1], 0.0);
                d[1][2] = e[1] * Complex::new(0.5 * x[0], 0.0);
                d
            },
        )
    }

    #[test]
    fn pairing_normalization() {
        let e = su2::basis();
        // Half-basis orthonormal under the field pairing.
        for a in 0..3 {
            for b in 0..3 {
                let ea = e[a] * Complex::new(0.5, 0.0);
                let eb = e[b] * Complex::new(0.5, 0.0);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((pair(&ea, &eb) - want).abs() < 1e-15);
            }
        }
        assert!((field_norm(&FieldConfiguration::vacuum().higgs(&Point::zeros())) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn numeric_and_analytic_derivatives_agree() {
        let num = sample_config();
        let ana = analytic_sample_config();
        let x = Point::new(0.4, -0.7, 1.1);
        let h = 1e-5;
        let dn = num.d_higgs(&x, h).unwrap();
        let da = ana.d_higgs(&x, h).unwrap();
        for (a, b) in dn.iter().zip(&da) {
            assert!((a - b).iter().all(|z| z.norm() < 1e-9));
        }
        let cn = num.curvature(&x, h).unwrap();
        let ca = ana.curvature(&x, h).unwrap();
        for (a, b) in cn.iter().zip(&ca) {
            assert!((a - b).iter().all(|z| z.norm() < 1e-9));
        }
    }

    #[test]
    fn step_guard_rejects_tiny_h() {
        let cfg = sample_config();
        let x = Point::zeros();
        let err = cfg.curvature(&x, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        // Analytic configurations ignore the step entirely.
        assert!(analytic_sample_config().curvature(&x, 1e-9).is_ok());
    }

    #[test]
    fn curvature_is_antisymmetric_consistent() {
        // For an abelian-embedded configuration the commutator vanishes and
        // F reduces to the curl of the coefficient functions.
        let e = su2::basis();
        let cfg = FieldConfiguration::new(
            0,
            move |_| CMatrix2::zeros(),
            move |x: &Point| {
                [
                    CMatrix2::zeros(),
                    CMatrix2::zeros(),
                    e[2] * Complex::new(x[0], 0.0),
                ]
            },
        );
        let f = cfg.curvature(&Point::new(0.3, 0.5, -0.2), 1e-5).unwrap();
        // A₃ = x₁ e³: only F₁₃ = e³ nonzero, i.e. cyclic component F₃₁ = -e³.
        assert!(field_norm(&f[0]) < 1e-9);
        assert!((f[1] + e[2]).iter().all(|z| z.norm() < 1e-9));
        assert!(field_norm(&f[2]) < 1e-9);
    }

    #[test]
    fn gauge_transform_is_unitary_and_localized() {
        let t = GaugeTransform::axis_bump(2, 0.8, Point::new(0.5, 0.0, 0.0), 2.0);
        let inside = t.at(&Point::new(0.4, 0.3, -0.1));
        assert!(su2::unitary_defect(&inside) < 1e-12);
        assert!((inside - CMatrix2::identity()).iter().any(|z| z.norm() > 1e-3));
        let outside = t.at(&Point::new(5.0, 0.0, 0.0));
        assert!((outside - CMatrix2::identity()).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn gauge_transform_derivatives_match_finite_differences() {
        let t = GaugeTransform::axis_bump(1, 0.6, Point::new(0.0, 0.2, -0.4), 1.5)
            .compose(&GaugeTransform::axis_bump(3, -0.4, Point::new(0.3, 0.0, 0.0), 2.5));
        let x = Point::new(0.25, 0.4, -0.3);
        let h = 1e-5;
        let dg_fd = central_diff3(|p| t.at(p), &x, h);
        let dg = (t.dg)(&x);
        for (a, b) in dg.iter().zip(&dg_fd) {
            assert!((a - b).iter().all(|z| z.norm() < 1e-9), "dg mismatch");
        }
        let d2g = (t.d2g)(&x);
        for j in 0..3 {
            let d2_fd = central_diff3(|p| (t.dg)(p)[j], &x, h);
            for i in 0..3 {
                assert!(
                    (d2g[i][j] - d2_fd[i]).iter().all(|z| z.norm() < 1e-8),
                    "d2g mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn gauge_invariants_survive_a_bump_transform() {
        let cfg = analytic_sample_config();
        let t = GaugeTransform::axis_bump(2, 0.7, Point::new(0.1, -0.2, 0.3), 2.0);
        let moved = cfg.gauge_apply(&t);
        let x = Point::new(0.3, 0.1, -0.2);
        let h = 1e-5;
        assert!((cfg.higgs_norm(&x) - moved.higgs_norm(&x)).abs() < 1e-12);
        let r0 = cfg.bogomolny_residual(&x, h).unwrap();
        let r1 = moved.bogomolny_residual(&x, h).unwrap();
        assert!((r0 - r1).abs() < 1e-9, "{r0} vs {r1}");
        let e0 = cfg.energy_density(&x, h).unwrap();
        let e1 = moved.energy_density(&x, h).unwrap();
        assert!((e0 - e1).abs() < 1e-8 * (1.0 + e0.abs()));
    }

    #[test]
    fn gauge_apply_composes_with_constant_transform() {
        let cfg = analytic_sample_config();
        let g = su2::exp(&su2::from_coeffs(&[0.3, -0.5, 0.7]));
        let t = GaugeTransform::constant(g);
        let moved = cfg.gauge_apply(&t);
        let x = Point::new(-0.6, 0.2, 0.9);
        let want = g * cfg.higgs(&x) * g.adjoint();
        assert!((moved.higgs(&x) - want).iter().all(|z| z.norm() < 1e-14));
        // Connection transforms without the derivative term.
        let a = cfg.connection(&x);
        let got = moved.connection(&x);
        for j in 0..3 {
            let want = g * a[j] * g.adjoint();
            assert!((got[j] - want).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn energy_balance_identity_holds_off_shell() {
        // The identity is algebraic; it must hold for a non-solution too.
        let cfg = analytic_sample_config();
        let (lhs, rhs) = cfg.energy_balance(1.2, 12, 1e-5).unwrap();
        assert!(
            (lhs - rhs).abs() < 1e-6 * (1.0 + lhs.abs()),
            "balance {lhs} vs {rhs}"
        );
    }
}
