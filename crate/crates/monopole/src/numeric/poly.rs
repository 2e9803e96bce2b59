//! Complex polynomial helpers: evaluation, interpolation, least-squares
//! fitting, characteristic polynomials, and a derivative-free 2D Newton root
//! finder.
//!
//! Coefficients are stored in ascending powers everywhere, `c[0] + c[1]·z +
//! …`, matching the serialized spectral-curve format. The root finder treats
//! the target as a smooth map ℝ² → ℝ², not a holomorphic one, because
//! numerically normalized spectral determinants pick up small
//! non-holomorphic contamination that breaks complex Newton but not real
//! Newton.

use crate::Complex;
use nalgebra::{DMatrix, DVector};

/// Horner evaluation of `Σ c[i] zⁱ`.
pub fn eval(c: &[Complex], z: Complex) -> Complex {
    let mut acc = Complex::new(0.0, 0.0);
    for &ci in c.iter().rev() {
        acc = acc * z + ci;
    }
    acc
}

/// Monic polynomial with the given roots, ascending coefficients.
pub fn from_roots(roots: &[Complex]) -> Vec<Complex> {
    let mut c = vec![Complex::new(1.0, 0.0)];
    for &r in roots {
        // In-place multiply by (z - r): new[i] = old[i-1] - r·old[i].
        c.push(Complex::new(0.0, 0.0));
        for i in (0..c.len() - 1).rev() {
            let old = c[i];
            c[i + 1] += old;
            c[i] = old * (-r);
        }
    }
    c
}

/// Coefficients of the derivative.
pub fn derivative(c: &[Complex]) -> Vec<Complex> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &ci)| ci * (i as f64))
        .collect()
}

/// Product of two coefficient vectors.
pub fn mul(a: &[Complex], b: &[Complex]) -> Vec<Complex> {
    let mut out = vec![Complex::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Lagrange interpolation through distinct nodes, ascending coefficients.
pub fn lagrange(nodes: &[(Complex, Complex)]) -> Vec<Complex> {
    let n = nodes.len();
    assert!(n > 0, "need at least one node");
    let mut acc = vec![Complex::new(0.0, 0.0); n];
    for (i, &(xi, yi)) in nodes.iter().enumerate() {
        let mut basis = vec![Complex::new(1.0, 0.0)];
        let mut denom = Complex::new(1.0, 0.0);
        for (j, &(xj, _)) in nodes.iter().enumerate() {
            if i != j {
                basis = mul(&basis, &[-xj, Complex::new(1.0, 0.0)]);
                denom *= xi - xj;
            }
        }
        let w = yi / denom;
        for (a, b) in acc.iter_mut().zip(&basis) {
            *a += w * b;
        }
    }
    acc
}

/// Least-squares polynomial fit of degree `deg` through weighted samples.
///
/// Returns ascending coefficients and the max residual |p(zᵢ) - wᵢ| over the
/// samples. Solved by SVD of the Vandermonde matrix, so near-degenerate node
/// sets degrade gracefully instead of blowing up.
pub fn fit_least_squares(samples: &[(Complex, Complex)], deg: usize) -> (Vec<Complex>, f64) {
    let m = samples.len();
    assert!(m > deg, "need more samples than coefficients");
    let mut v = DMatrix::<Complex>::zeros(m, deg + 1);
    let mut rhs = DVector::<Complex>::zeros(m);
    for (r, &(z, w)) in samples.iter().enumerate() {
        let mut p = Complex::new(1.0, 0.0);
        for c in 0..=deg {
            v[(r, c)] = p;
            p *= z;
        }
        rhs[r] = w;
    }
    let svd = v.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-13).expect("svd solve");
    let coeffs: Vec<Complex> = sol.iter().copied().collect();
    let residual = samples
        .iter()
        .map(|&(z, w)| (eval(&coeffs, z) - w).norm())
        .fold(0.0, f64::max);
    (coeffs, residual)
}

/// Characteristic polynomial det(λI - M) by the Faddeev-LeVerrier
/// recurrence, ascending coefficients (length n+1, leading coefficient 1).
pub fn char_poly(m: &DMatrix<Complex>) -> Vec<Complex> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut coeffs = vec![Complex::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex::new(1.0, 0.0);
    let mut aux = DMatrix::<Complex>::zeros(n, n);
    for k in 1..=n {
        aux = m * &aux;
        let prev = coeffs[n - k + 1];
        for i in 0..n {
            aux[(i, i)] += prev;
        }
        let trace = (m * &aux).diagonal().sum();
        coeffs[n - k] = -trace / (k as f64);
    }
    coeffs
}

/// All roots of the polynomial by the Weierstrass simultaneous iteration.
///
/// Trailing coefficients below 1e-12 of the largest are dropped first, so
/// the count of returned roots is the numerical degree. Seeds sit on a
/// detuned circle at the Cauchy bound; the iteration is deterministic and
/// converges quadratically for the low degrees used here.
pub fn roots(coeffs: &[Complex]) -> Vec<Complex> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut c: Vec<Complex> = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().norm() <= scale * 1e-12 {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<Complex> = c.iter().map(|ci| ci / lead).collect();
    let bound = 1.0
        + monic[..n]
            .iter()
            .map(|ci| ci.norm())
            .fold(0.0, f64::max);
    let mut w: Vec<Complex> = (0..n)
        .map(|j| {
            let angle = 2.0 * std::f64::consts::PI * (j as f64 + 0.27) / n as f64;
            Complex::new(bound * angle.cos(), bound * angle.sin())
        })
        .collect();
    for _ in 0..200 {
        let mut moved = 0.0_f64;
        for j in 0..n {
            let mut denom = Complex::new(1.0, 0.0);
            for i in 0..n {
                if i != j {
                    denom *= w[j] - w[i];
                }
            }
            if denom.norm() == 0.0 {
                // Coincident iterates; nudge apart and retry next sweep.
                w[j] += Complex::new(1e-8 * bound, 0.0);
                continue;
            }
            let step = eval(&monic, w[j]) / denom;
            w[j] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 * bound {
            break;
        }
    }
    w.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    w
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Finite-difference step for the 2×2 Jacobian.
    pub fd_step: f64,
    /// Stop when |f| falls below this.
    pub f_tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            fd_step: 1e-6,
            f_tol: 1e-9,
            max_iters: 40,
        }
    }
}

/// Root of a smooth map ℂ → ℂ by damped real Newton with central-difference
/// Jacobian. Returns the refined root and |f| there, or `None` if the
/// iteration fails to reach `f_tol`.
pub fn newton_root_2d(
    f: &mut impl FnMut(Complex) -> Complex,
    start: Complex,
    opts: &NewtonOptions,
) -> Option<(Complex, f64)> {
    let h = opts.fd_step;
    let mut z = start;
    let mut fz = f(z);
    for _ in 0..opts.max_iters {
        if fz.norm() < opts.f_tol {
            return Some((z, fz.norm()));
        }
        let fx = (f(z + h) - f(z - h)) / (2.0 * h);
        let fy = (f(z + Complex::new(0.0, h)) - f(z - Complex::new(0.0, h))) / (2.0 * h);
        // Solve [fx.re fy.re; fx.im fy.im] (dx, dy)ᵀ = -f.
        let det = fx.re * fy.im - fy.re * fx.im;
        if det.abs() < 1e-300 {
            return None;
        }
        let dx = (-fz.re * fy.im + fz.im * fy.re) / det;
        let dy = (-fx.re * fz.im + fz.re * fx.im) / det;
        let mut step = Complex::new(dx, dy);
        // Backtracking keeps the iteration from overshooting shallow basins.
        let mut improved = false;
        for _ in 0..8 {
            let z_try = z + step;
            let f_try = f(z_try);
            if f_try.norm() < fz.norm() {
                z = z_try;
                fz = f_try;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if fz.norm() < opts.f_tol {
        Some((z, fz.norm()))
    } else {
        None
    }
}

/// Locate up to `want` roots of `f` inside the disk |z - centre| ≤ radius.
///
/// A coarse `grid × grid` scan ranks local minima of |f|, each is refined by
/// [`newton_root_2d`], and converged roots closer than `dedupe` to an
/// earlier root are dropped. The result may be shorter than `want`.
pub fn roots_in_disk(
    f: &mut impl FnMut(Complex) -> Complex,
    centre: Complex,
    radius: f64,
    want: usize,
    grid: usize,
    dedupe: f64,
    opts: &NewtonOptions,
) -> Vec<Complex> {
    assert!(grid >= 3);
    let n = grid;
    let mut vals = vec![0.0_f64; n * n];
    let at = |i: usize, j: usize| -> Complex {
        let x = -radius + 2.0 * radius * (i as f64 + 0.5) / n as f64;
        let y = -radius + 2.0 * radius * (j as f64 + 0.5) / n as f64;
        centre + Complex::new(x, y)
    };
    for i in 0..n {
        for j in 0..n {
            vals[i * n + j] = f(at(i, j)).norm();
        }
    }
    // Local minima of |f| on the grid, best first.
    let mut seeds: Vec<(f64, Complex)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = vals[i * n + j];
            let mut is_min = true;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii >= 0 && jj >= 0 && (ii as usize) < n && (jj as usize) < n {
                    is_min &= v <= vals[ii as usize * n + jj as usize];
                }
            }
            if is_min {
                seeds.push((v, at(i, j)));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut roots: Vec<Complex> = Vec::new();
    for (_, seed) in seeds {
        if roots.len() >= want {
            break;
        }
        if let Some((z, _)) = newton_root_2d(f, seed, opts) {
            if (z - centre).norm() <= radius * 1.2
                && roots.iter().all(|r| (r - z).norm() > dedupe)
            {
                roots.push(z);
            }
        }
    }
    roots
}
