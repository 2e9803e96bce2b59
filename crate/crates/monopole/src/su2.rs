//! su(2) and SU(2) as concrete 2×2 complex matrices, plus the Möbius action
//! on the Riemann sphere and closed-form 2×2 hermitian spectral helpers.
//!
//! The algebra basis is eᵃ = i·τₐ with τₐ the Pauli matrices, so elements
//! are anti-hermitian and traceless. The inner product ⟨A,B⟩ = -½ Re tr(AB)
//! makes the basis orthonormal, and the bracket is the plain matrix
//! commutator, under which [e¹, e²] = -2e³ and cyclic.

use crate::{CMatrix2, CVector2, Complex};

const I: Complex = Complex::new(0.0, 1.0);
const ONE: Complex = Complex::new(1.0, 0.0);
const ZERO: Complex = Complex::new(0.0, 0.0);

/// Pauli matrix τₐ for `a` in 1..=3.
pub fn pauli(a: usize) -> CMatrix2 {
    match a {
        1 => CMatrix2::new(ZERO, ONE, ONE, ZERO),
        2 => CMatrix2::new(ZERO, -I, I, ZERO),
        3 => CMatrix2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index must be 1, 2 or 3"),
    }
}

/// Orthonormal basis eᵃ = i·τₐ, indices 0..3 for a = 1..3.
pub fn basis() -> [CMatrix2; 3] {
    [pauli(1) * I, pauli(2) * I, pauli(3) * I]
}

/// ⟨A,B⟩ = -½ Re tr(AB); positive definite on su(2) and the basis above is
/// orthonormal.
pub fn inner(a: &CMatrix2, b: &CMatrix2) -> f64 {
    -0.5 * (a * b).trace().re
}

pub fn norm(a: &CMatrix2) -> f64 {
    inner(a, a).max(0.0).sqrt()
}

/// Matrix commutator [A, B].
pub fn bracket(a: &CMatrix2, b: &CMatrix2) -> CMatrix2 {
    a * b - b * a
}

/// Σ cₐ eᵃ.
pub fn from_coeffs(c: &[f64; 3]) -> CMatrix2 {
    let e = basis();
    e[0] * Complex::new(c[0], 0.0) + e[1] * Complex::new(c[1], 0.0) + e[2] * Complex::new(c[2], 0.0)
}

/// Coefficients of an algebra element over the basis.
pub fn coeffs(m: &CMatrix2) -> [f64; 3] {
    let e = basis();
    [inner(m, &e[0]), inner(m, &e[1]), inner(m, &e[2])]
}

/// Distance of `m` from the algebra: hermitian part plus trace, max-norm.
pub fn algebra_defect(m: &CMatrix2) -> f64 {
    let herm = m + m.adjoint();
    let h = herm.iter().map(|c| c.norm()).fold(0.0, f64::max);
    h.max(m.trace().norm())
}

/// Distance of `g` from SU(2): ‖g†g - I‖ (max entry) plus |det g - 1|.
pub fn unitary_defect(g: &CMatrix2) -> f64 {
    let d = g.adjoint() * g - CMatrix2::identity();
    let u = d.iter().map(|c| c.norm()).fold(0.0, f64::max);
    u + (g.determinant() - ONE).norm()
}

/// Anti-hermitian traceless projection of an arbitrary 2×2 matrix.
pub fn project_algebra(m: &CMatrix2) -> CMatrix2 {
    let a = (m - m.adjoint()) * Complex::new(0.5, 0.0);
    let t = a.trace() * Complex::new(0.5, 0.0);
    a - CMatrix2::from_diagonal_element(t)
}

/// Matrix exponential of an su(2) element, closed form.
///
/// For X = Σ cₐ eᵃ one has X² = -|c|² I, so exp X = cos|c|·I + sinc|c|·X.
pub fn exp(x: &CMatrix2) -> CMatrix2 {
    debug_assert!(algebra_defect(x) < 1e-9 * (1.0 + norm(x)), "exp expects an su(2) element");
    let c = norm(x);
    let sinc = if c < 1e-4 {
        1.0 - c * c / 6.0 + c.powi(4) / 120.0
    } else {
        c.sin() / c
    };
    CMatrix2::identity() * Complex::new(c.cos(), 0.0) + x * Complex::new(sinc, 0.0)
}

/// Point of the Riemann sphere ℂ ∪ {∞}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtComplex {
    Finite(Complex),
    Infinity,
}

impl ExtComplex {
    /// num/den as a sphere point; a vanishing denominator maps to ∞.
    pub fn from_ratio(num: Complex, den: Complex) -> Self {
        if den.norm() == 0.0 || num.norm() > den.norm() * 1e280 {
            ExtComplex::Infinity
        } else {
            ExtComplex::Finite(num / den)
        }
    }

    /// Homogeneous representative (z : 1) or (1 : 0).
    pub fn homogeneous(&self) -> (Complex, Complex) {
        match *self {
            ExtComplex::Finite(z) => (z, ONE),
            ExtComplex::Infinity => (ONE, ZERO),
        }
    }
}

impl From<Complex> for ExtComplex {
    fn from(z: Complex) -> Self {
        ExtComplex::Finite(z)
    }
}

/// Möbius action z ↦ (g₀₀ z + g₀₁) / (g₁₀ z + g₁₁).
pub fn mobius(g: &CMatrix2, z: ExtComplex) -> ExtComplex {
    let (a, b) = z.homogeneous();
    ExtComplex::from_ratio(g[(0, 0)] * a + g[(0, 1)] * b, g[(1, 0)] * a + g[(1, 1)] * b)
}

/// Chordal distance on the Riemann sphere, |a-b| / √((1+|a|²)(1+|b|²))
/// extended continuously to ∞; ranges over [0, 1].
pub fn chordal(a: ExtComplex, b: ExtComplex) -> f64 {
    let (a0, a1) = a.homogeneous();
    let (b0, b1) = b.homogeneous();
    let cross = (a0 * b1 - a1 * b0).norm();
    let na = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
    let nb = (b0.norm_sqr() + b1.norm_sqr()).sqrt();
    cross / (na * nb)
}

/// Eigenvalues of a 2×2 hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix2) -> [f64; 2] {
    let m = 0.5 * h.trace().re;
    let a = 0.5 * (h[(0, 0)] - h[(1, 1)]).re;
    let d = (a * a + h[(0, 1)].norm_sqr()).sqrt();
    [m - d, m + d]
}

/// Unit eigenvector of a 2×2 hermitian matrix for the chosen end of the
/// spectrum (`largest = true` picks the top eigenvalue).
pub fn hermitian_eigenvector(h: &CMatrix2, largest: bool) -> CVector2 {
    let [lo, hi] = hermitian_eigenvalues(h);
    let lambda = if largest { hi } else { lo };
    let b = h[(0, 1)];
    let c = h[(1, 0)];
    // Pick the numerically fatter of the two column constructions.
    let v1 = CVector2::new(b, Complex::new(lambda, 0.0) - h[(0, 0)]);
    let v2 = CVector2::new(Complex::new(lambda, 0.0) - h[(1, 1)], c);
    let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
    let n = v.norm();
    if n < 1e-300 {
        // Diagonal matrix: coordinate axes are eigenvectors.
        let first = (h[(0, 0)].re >= h[(1, 1)].re) == largest;
        if first {
            CVector2::new(ONE, ZERO)
        } else {
            CVector2::new(ZERO, ONE)
        }
    } else {
        v.unscale(n)
    }
}

/// exp of a hermitian 2×2 matrix, closed form via H = m·I + D with D²
/// scalar.
pub fn exp_hermitian(h: &CMatrix2) -> CMatrix2 {
    let m = 0.5 * h.trace().re;
    let d = h - CMatrix2::from_diagonal_element(Complex::new(m, 0.0));
    let s = {
        let a = 0.5 * (h[(0, 0)] - h[(1, 1)]).re;
        (a * a + h[(0, 1)].norm_sqr()).sqrt()
    };
    let (ch, shc) = if s < 1e-8 {
        (1.0 + s * s / 2.0, 1.0 + s * s / 6.0)
    } else {
        (s.cosh(), s.sinh() / s)
    };
    (CMatrix2::identity() * Complex::new(ch, 0.0) + d * Complex::new(shc, 0.0))
        * Complex::new(m.exp(), 0.0)
}

/// H^(-1/2) for positive definite hermitian H, via spectral projectors.
/// Returns `None` when the smallest eigenvalue is not safely positive.
pub fn inv_sqrt_hermitian(h: &CMatrix2) -> Option<CMatrix2> {
    let [lo, hi] = hermitian_eigenvalues(h);
    if lo <= hi * 1e-14 || lo <= 0.0 {
        return None;
    }
    let m = 0.5 * (hi + lo);
    let s = 0.5 * (hi - lo);
    let d = h - CMatrix2::from_diagonal_element(Complex::new(m, 0.0));
    if s < 1e-12 * m {
        // Nearly scalar: first-order expansion of λ^(-1/2) about m.
        return Some(
            CMatrix2::identity() * Complex::new(m.powf(-0.5), 0.0)
                + d * Complex::new(-0.5 * m.powf(-1.5), 0.0),
        );
    }
    let p_hi = (CMatrix2::identity() + d / Complex::new(s, 0.0)) * Complex::new(0.5, 0.0);
    let p_lo = (CMatrix2::identity() - d / Complex::new(s, 0.0)) * Complex::new(0.5, 0.0);
    Some(p_hi * Complex::new(hi.powf(-0.5), 0.0) + p_lo * Complex::new(lo.powf(-0.5), 0.0))
}
