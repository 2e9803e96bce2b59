//! Gauss-Legendre quadrature and product rules on spheres and balls.
//!
//! Nodes are found by Newton iteration on the Legendre recurrence, which is
//! accurate to machine precision for the orders used here (≤ a few hundred).
//! The sphere rule is a product of Gauss-Legendre in cos θ with a uniform
//! trapezoid in azimuth; it integrates spherical polynomials of degree up to
//! `2·order - 1` exactly and converges spectrally for smooth integrands.

use crate::Point;

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Exact for polynomials of degree ≤ 2n-1. Panics if `n == 0`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial Pₙ at `x` via the
/// three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Affine image of [`gauss_legendre`] on [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}

/// Quadrature rule on the unit sphere: unit direction points and weights
/// summing to 4π.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Product rule with `order` Gauss nodes in cos θ and `2·order` uniform
    /// azimuth nodes.
    pub fn product(order: usize) -> Self {
        let (ct, wt) = gauss_legendre(order);
        let n_phi = 2 * order;
        let w_phi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut points = Vec::with_capacity(order * n_phi);
        let mut weights = Vec::with_capacity(order * n_phi);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..n_phi {
                let phi = w_phi * j as f64;
                points.push(Point::new(s * phi.cos(), s * phi.sin(), *c));
                weights.push(w * w_phi);
            }
        }
        SphereRule { points, weights }
    }

    /// ∮ f dS over the sphere of radius `r` centred at `c`.
    pub fn integrate(&self, r: f64, c: &Point, mut f: impl FnMut(&Point, &Point) -> f64) -> f64 {
        let mut acc = 0.0;
        for (n, w) in self.points.iter().zip(&self.weights) {
            let x = c + r * n;
            acc += w * f(&x, n);
        }
        acc * r * r
    }
}

/// Rule on the solid ball |x - c| ≤ r: points with weights summing to the
/// ball volume. Radial direction uses `n_r` Gauss nodes on [0, r].
pub fn ball_rule(c: &Point, r: f64, n_r: usize, sphere_order: usize) -> Vec<(Point, f64)> {
    let sphere = SphereRule::product(sphere_order);
    let (rs, ws) = gauss_legendre_on(n_r, 0.0, r);
    let mut out = Vec::with_capacity(n_r * sphere.points.len());
    for (ri, wi) in rs.iter().zip(&ws) {
        for (n, wn) in sphere.points.iter().zip(&sphere.weights) {
            out.push((c + *ri * n, wi * wn * ri * ri));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_nodes_match_closed_forms() {
        let (x, w) = gauss_legendre(2);
        let g = 1.0 / 3.0_f64.sqrt();
        assert!((x[0] + g).abs() < 1e-15 && (x[1] - g).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);

        let (x, w) = gauss_legendre(3);
        assert!(x[1].abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((x[2] - (0.6_f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn integrates_high_degree_monomials_exactly() {
        // n nodes are exact through degree 2n-1.
        let (x, w) = gauss_legendre(5);
        let int_x8: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert!((int_x8 - 2.0 / 9.0).abs() < 1e-14);
        let int_x9: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(9)).sum();
        assert!(int_x9.abs() < 1e-15);
    }

    #[test]
    fn sphere_rule_weights_and_moments() {
        let rule = SphereRule::product(8);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        // ∮ (x³)² dS = 4π/3 on the unit sphere.
        let m: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p.z * p.z)
            .sum();
        assert!((m - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_integrate_scales_with_radius() {
        let rule = SphereRule::product(6);
        let c = Point::new(1.0, -2.0, 0.5);
        let area = rule.integrate(3.0, &c, |_, _| 1.0);
        assert!((area - 4.0 * std::f64::consts::PI * 9.0).abs() < 1e-10);
    }

    #[test]
    fn ball_rule_volume_and_radial_moment() {
        let c = Point::new(0.0, 0.0, 0.0);
        let pts = ball_rule(&c, 2.0, 12, 8);
        let vol: f64 = pts.iter().map(|(_, w)| w).sum();
        assert!((vol - 4.0 / 3.0 * std::f64::consts::PI * 8.0).abs() < 1e-10);
        // ∫ |x|² dV = 4π r⁵ / 5.
        let m: f64 = pts.iter().map(|(p, w)| w * p.norm_squared()).sum();
        assert!((m - 4.0 * std::f64::consts::PI * 32.0 / 5.0).abs() < 1e-9);
    }
}
