//! Inverse Nahm transform: monopole fields from Nahm data, via the L²
//! kernel of the ODE dv/dz = M(z)v on (-1, 1) and quadrature formulas for
//! Φ and A.
//!
//! The kernel matrix couples the data to the evaluation point x through
//! hermitian generators ρₐ = τₐ/2; anti-hermitian triples are rotated by
//! -i into the hermitian presentation first, so both presentations of the
//! same data reconstruct the same fields. Charge 1 has a closed-form
//! solution path (the data is z-independent and M is a constant hermitian
//! 2×2); charge ≥ 2 requires pole residues to select the two-dimensional
//! admissible subspace and is experimental: the selection is a
//! growth-penalty heuristic with conditioning guards, not a proven
//! boundary-condition solver.

use crate::fields::{self, FieldConfiguration};
use crate::nahm::{NahmData, NahmTriple, POLE_MARGIN};
use crate::numeric::{ode, quad};
use crate::su2;
use crate::volume::GridSpec;
use crate::{CMatrix2, Complex, Error, Point, Result};
use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;
use std::sync::Arc;

const ONE: Complex = Complex::new(1.0, 0.0);

/// Presentation factor turning the data hermitian: 1 for hermitian
/// triples, -i for anti-hermitian ones.
fn presentation_factor(data: &NahmData) -> Result<Complex> {
    let scale = data
        .samples()
        .iter()
        .flat_map(|t| t.iter())
        .flat_map(|m| m.iter())
        .map(|c| c.norm())
        .fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    if data.hermiticity_defect() <= tol {
        Ok(ONE)
    } else if data.antihermiticity_defect() <= tol {
        Ok(Complex::new(0.0, -1.0))
    } else {
        Err(Error::Validation(
            "Nahm data is neither hermitian nor anti-hermitian; no presentation applies".into(),
        ))
    }
}

/// Kernel ODE matrix M(z) = Σₐ (c·Tₐ(z)) ⊗ ρₐ + xₐ·(I_k ⊗ ρₐ), hermitian
/// 2k×2k for either data presentation.
pub fn kernel_ode_matrix(data: &NahmData, x: &Point, z: f64) -> Result<DMatrix<Complex>> {
    let c = presentation_factor(data)?;
    let t = data.at(z)?;
    Ok(kernel_matrix_from(&t, c, x))
}

fn kernel_matrix_from(t: &NahmTriple, c: Complex, x: &Point) -> DMatrix<Complex> {
    let k = t[0].nrows();
    let eye = DMatrix::<Complex>::identity(k, k);
    let mut m = DMatrix::zeros(2 * k, 2 * k);
    for a in 0..3 {
        let rho = su2::pauli(a + 1) * Complex::new(0.5, 0.0);
        let rho_d = DMatrix::from_fn(2, 2, |r, s| rho[(r, s)]);
        m += (&t[a] * c + &eye * Complex::new(x[a], 0.0)).kronecker(&rho_d);
    }
    m
}

/// Conditioning record of the L² Gram matrix behind a frame.
#[derive(Debug, Clone)]
pub struct GramDiagnostics {
    pub smallest_eigenvalue: f64,
    pub largest_eigenvalue: f64,
    pub condition: f64,
    /// ‖Σ w·V†V − I‖max after normalization.
    pub orthonormality_residual: f64,
}

#[derive(Debug)]
enum FrameBackend {
    /// Charge 1: M is constant hermitian 2×2 and solutions are exp(Mz).
    Constant {
        m: CMatrix2,
        normalizer: CMatrix2,
    },
    /// Charge ≥ 2 (experimental): columns seeded at the window midpoint and
    /// integrated on demand.
    Integrated {
        data: NahmData,
        factor: Complex,
        x: Point,
        z_mid: f64,
        seed: DMatrix<Complex>,
        normalizer: Matrix2<Complex>,
        tol: f64,
    },
}

/// L²-orthonormal basis (v₁, v₂) of the admissible kernel subspace at a
/// point, tabulated on the quadrature nodes.
#[derive(Debug)]
pub struct KernelFrame {
    pub x: Point,
    k: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<DMatrix<Complex>>,
    backend: FrameBackend,
    pub gram: GramDiagnostics,
}

impl KernelFrame {
    pub fn charge(&self) -> usize {
        self.k
    }

    /// Quadrature nodes the frame is tabulated on.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// 2k×2 frame value at node q (columns are v₁, v₂).
    pub fn node_values(&self) -> &[DMatrix<Complex>] {
        &self.values
    }

    /// Frame at an arbitrary z in the window.
    pub fn basis(&self, z: f64) -> Result<DMatrix<Complex>> {
        match &self.backend {
            FrameBackend::Constant { m, normalizer } => {
                let w = su2::exp_hermitian(&(m * Complex::new(z, 0.0))) * normalizer;
                Ok(DMatrix::from_fn(2, 2, |r, c| w[(r, c)]))
            }
            FrameBackend::Integrated {
                data,
                factor,
                x,
                z_mid,
                seed,
                normalizer,
                tol,
            } => {
                let raw = propagate(data, *factor, x, *z_mid, seed, &[z], *tol)?
                    .pop()
                    .expect("one sample requested");
                Ok(raw * normalizer_to_dmatrix(normalizer))
            }
        }
    }

    /// Max finite-difference defect of dv/dz = M(z)v over a few interior
    /// points; a consistency diagnostic on the basis functions.
    pub fn ode_residual(&self, data: &NahmData) -> Result<f64> {
        let delta = 1e-5;
        let lo = self.nodes.first().copied().unwrap_or(-0.5) + 2.0 * delta;
        let hi = self.nodes.last().copied().unwrap_or(0.5) - 2.0 * delta;
        let mut worst = 0.0_f64;
        for frac in [0.11, 0.5, 0.83] {
            let z = lo + (hi - lo) * frac;
            let plus = self.basis(z + delta)?;
            let minus = self.basis(z - delta)?;
            let here = self.basis(z)?;
            let m = kernel_ode_matrix(data, &self.x, z)?;
            let d = (plus - minus) / Complex::new(2.0 * delta, 0.0) - m * here;
            worst = worst.max(d.iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
        Ok(worst)
    }
}

fn normalizer_to_dmatrix(n: &Matrix2<Complex>) -> DMatrix<Complex> {
    DMatrix::from_fn(2, 2, |r, c| n[(r, c)])
}

/// Integrate the fundamental columns of `seed` from z_mid to each target.
fn propagate(
    data: &NahmData,
    factor: Complex,
    x: &Point,
    z_mid: f64,
    seed: &DMatrix<Complex>,
    targets: &[f64],
    tol: f64,
) -> Result<Vec<DMatrix<Complex>>> {
    let dim = seed.nrows();
    let cols = seed.ncols();
    let mut rhs = |z: f64, y: &DVector<Complex>| -> DVector<Complex> {
        let t = data.at(z).expect("z inside the data window");
        let m = kernel_matrix_from(&t, factor, x);
        let mut out = DVector::zeros(dim * cols);
        for c in 0..cols {
            let v = y.rows(c * dim, dim);
            let mv = &m * v;
            out.rows_mut(c * dim, dim).copy_from(&mv);
        }
        out
    };
    let mut y0 = DVector::zeros(dim * cols);
    for c in 0..cols {
        y0.rows_mut(c * dim, dim).copy_from(&seed.column(c));
    }
    let opts = ode::OdeOptions::with_tol(tol);

    // Split targets into the part below and above the anchor; integrate
    // outward in each direction.
    let mut below: Vec<f64> = targets.iter().copied().filter(|&z| z < z_mid).collect();
    below.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let above: Vec<f64> = {
        let mut v: Vec<f64> = targets.iter().copied().filter(|&z| z >= z_mid).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    let mut by_z: Vec<(f64, DMatrix<Complex>)> = Vec::with_capacity(targets.len());
    for (list, far) in [(below, -1.0 + POLE_MARGIN), (above, 1.0 - POLE_MARGIN)] {
        if list.is_empty() {
            continue;
        }
        let end = *list.last().unwrap();
        let end = if (end - z_mid).abs() < 1e-15 { z_mid + (far - z_mid) * 1e-12 } else { end };
        let states = ode::integrate_sampled(&mut rhs, z_mid, end, y0.clone(), &list, &opts)
            .map_err(|e| Error::Numeric(format!("kernel ODE: {e}")))?;
        for (&z, s) in list.iter().zip(&states) {
            let mut m = DMatrix::zeros(dim, cols);
            for c in 0..cols {
                m.column_mut(c).copy_from(&s.rows(c * dim, dim));
            }
            by_z.push((z, m));
        }
    }
    // Return in the order requested.
    let mut out = Vec::with_capacity(targets.len());
    for &z in targets {
        let pos = by_z
            .iter()
            .position(|(zz, _)| (*zz - z).abs() < 1e-14)
            .expect("every target propagated");
        out.push(by_z[pos].1.clone());
    }
    Ok(out)
}

/// Build the orthonormal kernel frame at `x`.
///
/// Charge 1 requires z-independent data (its flow is trivial) and uses the
/// closed-form path; charge ≥ 2 requires `pole_meta` and goes through the
/// experimental subspace selection.
pub fn kernel_frame(data: &NahmData, x: &Point, quad_order: usize) -> Result<KernelFrame> {
    if quad_order < 4 {
        return Err(Error::Validation("quadrature order must be at least 4".into()));
    }
    let factor = presentation_factor(data)?;
    match data.charge() {
        0 => Err(Error::Validation("charge must be positive".into())),
        1 => kernel_frame_charge_one(data, factor, x, quad_order),
        _ => kernel_frame_experimental(data, factor, x, quad_order),
    }
}

fn constant_triple_scalars(data: &NahmData, factor: Complex) -> Result<[f64; 3]> {
    let first = &data.samples()[0];
    for t in data.samples().iter().skip(1) {
        for a in 0..3 {
            let d = &t[a] - &first[a];
            if d.iter().any(|c| c.norm() > 1e-12) {
                return Err(Error::Validation(
                    "charge-1 Nahm data must be z-independent".into(),
                ));
            }
        }
    }
    let mut out = [0.0; 3];
    for a in 0..3 {
        let v = first[a][(0, 0)] * factor;
        if v.im.abs() > 1e-9 {
            return Err(Error::Validation(
                "charge-1 data is not real in the hermitian presentation".into(),
            ));
        }
        out[a] = v.re;
    }
    Ok(out)
}

fn kernel_frame_charge_one(
    data: &NahmData,
    factor: Complex,
    x: &Point,
    quad_order: usize,
) -> Result<KernelFrame> {
    let t = constant_triple_scalars(data, factor)?;
    let y = [t[0] + x[0], t[1] + x[1], t[2] + x[2]];
    let m = constant_kernel_matrix(&y);
    let (nodes, weights) = quad::gauss_legendre(quad_order);
    let mut gram = Matrix2::<Complex>::zeros();
    let mut raw = Vec::with_capacity(nodes.len());
    for (&z, &w) in nodes.iter().zip(&weights) {
        let v = su2::exp_hermitian(&(m * Complex::new(z, 0.0)));
        gram += v.adjoint() * v * Complex::new(w, 0.0);
        raw.push(v);
    }
    let normalizer = su2::inv_sqrt_hermitian(&gram)
        .ok_or_else(|| Error::Numeric("kernel Gram matrix is numerically singular".into()))?;
    let values: Vec<DMatrix<Complex>> = raw
        .iter()
        .map(|v| {
            let n = v * normalizer;
            DMatrix::from_fn(2, 2, |r, c| n[(r, c)])
        })
        .collect();
    let gram_diag = diagnostics_2x2(&gram, &values, &weights);
    Ok(KernelFrame {
        x: *x,
        k: 1,
        nodes,
        weights,
        values,
        backend: FrameBackend::Constant { m, normalizer },
        gram: gram_diag,
    })
}

/// Hermitian 2×2 Σ yₐ τₐ/2 without going through dynamic matrices.
fn constant_kernel_matrix(y: &[f64; 3]) -> CMatrix2 {
    Matrix2::new(
        Complex::new(y[2] / 2.0, 0.0),
        Complex::new(y[0] / 2.0, -y[1] / 2.0),
        Complex::new(y[0] / 2.0, y[1] / 2.0),
        Complex::new(-y[2] / 2.0, 0.0),
    )
}

fn diagnostics_2x2(
    gram: &Matrix2<Complex>,
    values: &[DMatrix<Complex>],
    weights: &[f64],
) -> GramDiagnostics {
    let [lo, hi] = su2::hermitian_eigenvalues(gram);
    let mut check = Matrix2::<Complex>::identity() * Complex::new(-1.0, 0.0);
    for (v, &w) in values.iter().zip(weights) {
        let vv = v.adjoint() * v * Complex::new(w, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                check[(r, c)] += vv[(r, c)];
            }
        }
    }
    GramDiagnostics {
        smallest_eigenvalue: lo,
        largest_eigenvalue: hi,
        condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
        orthonormality_residual: check.iter().map(|c| c.norm()).fold(0.0, f64::max),
    }
}

fn kernel_frame_experimental(
    data: &NahmData,
    factor: Complex,
    x: &Point,
    quad_order: usize,
) -> Result<KernelFrame> {
    if data.pole_meta.is_none() {
        return Err(Error::Validation(
            "pole data required to select the kernel subspace for charge ≥ 2".into(),
        ));
    }
    let k = data.charge();
    let dim = 2 * k;
    let (z_lo, z_hi) = if data.is_constant() {
        (-1.0 + POLE_MARGIN, 1.0 - POLE_MARGIN)
    } else {
        (data.z_samples()[0], *data.z_samples().last().unwrap())
    };
    let z_mid = 0.5 * (z_lo + z_hi);
    let tol = 1e-10;

    // Growth-penalty selection: the inadmissible solutions blow up toward
    // the poles, so the two smallest right-singular directions of the
    // stacked end values are the candidate subspace.
    let eye = DMatrix::<Complex>::identity(dim, dim);
    let ends = propagate(data, factor, x, z_mid, &eye, &[z_lo, z_hi], tol)?;
    let mut stacked = DMatrix::<Complex>::zeros(2 * dim, dim);
    stacked.rows_mut(0, dim).copy_from(&ends[0]);
    stacked.rows_mut(dim, dim).copy_from(&ends[1]);
    let svd = stacked.svd(false, true);
    let v_t = svd
        .v_t
        .as_ref()
        .expect("requested right singular vectors");
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if dim > 2 && sv[2] < 5.0 * sv[1] {
        return Err(Error::Numeric(format!(
            "kernel subspace selection failed: growth separation {:.2} is too weak \
             (experimental charge ≥ 2 path)",
            sv[2] / sv[1]
        )));
    }
    // Rows of v_t are ordered by descending singular value; the seed is the
    // conjugate of the last two rows.
    let mut seed = DMatrix::<Complex>::zeros(dim, 2);
    for c in 0..2 {
        let row = v_t.row(dim - 1 - c);
        for r in 0..dim {
            seed[(r, c)] = row[r].conj();
        }
    }

    let (nodes, weights) = quad::gauss_legendre_on(quad_order, z_lo, z_hi);
    let raw = propagate(data, factor, x, z_mid, &seed, &nodes, tol)?;
    let mut gram = Matrix2::<Complex>::zeros();
    for (v, &w) in raw.iter().zip(&weights) {
        let vv = v.adjoint() * v;
        for r in 0..2 {
            for c in 0..2 {
                gram[(r, c)] += vv[(r, c)] * Complex::new(w, 0.0);
            }
        }
    }
    let [lo_eig, hi_eig] = su2::hermitian_eigenvalues(&gram);
    if !(lo_eig > hi_eig * 1e-10) {
        return Err(Error::Numeric(
            "kernel subspace selection failed: Gram matrix rank < 2".into(),
        ));
    }
    let normalizer = su2::inv_sqrt_hermitian(&gram)
        .ok_or_else(|| Error::Numeric("kernel Gram matrix is numerically singular".into()))?;
    let values: Vec<DMatrix<Complex>> = raw
        .iter()
        .map(|v| v * normalizer_to_dmatrix(&normalizer))
        .collect();
    let gram_diag = diagnostics_2x2(&gram, &values, &weights);
    Ok(KernelFrame {
        x: *x,
        k,
        nodes,
        weights,
        values,
        backend: FrameBackend::Integrated {
            data: data.clone(),
            factor,
            x: *x,
            z_mid,
            seed,
            normalizer,
            tol,
        },
        gram: gram_diag,
    })
}

/// Higgs field at `x`: Φ_ab = ∫ z (v_b, v_a) dz mapped into su(2) as
/// (i/2)·(traceless part).
pub fn reconstruct_higgs(data: &NahmData, x: &Point, quad_order: usize) -> Result<CMatrix2> {
    let frame = kernel_frame(data, x, quad_order)?;
    Ok(higgs_from_frame(&frame))
}

fn higgs_from_frame(frame: &KernelFrame) -> CMatrix2 {
    let mut p = Matrix2::<Complex>::zeros();
    for ((v, &w), &z) in frame
        .values
        .iter()
        .zip(&frame.weights)
        .zip(&frame.nodes)
    {
        let vv = v.adjoint() * v;
        for r in 0..2 {
            for c in 0..2 {
                p[(r, c)] += vv[(r, c)] * Complex::new(w * z, 0.0);
            }
        }
    }
    let half_trace = (p[(0, 0)] + p[(1, 1)]) * Complex::new(0.5, 0.0);
    p[(0, 0)] -= half_trace;
    p[(1, 1)] -= half_trace;
    p * Complex::new(0.0, 0.5)
}

/// Connection at `x` by central differences of the frames at x ± h·êⱼ:
/// A_j = antihermitian part of Σ w · v†(x) ∂ⱼv.
///
/// The displaced frames come from the same deterministic construction, so
/// no alignment is applied before differencing; aligning them onto the
/// centre frame would parallel-transport away exactly the component being
/// measured. The alignment unitary is still computed as a safety check: if
/// it strays far from the identity the frames jumped gauge branches and
/// the difference quotient is meaningless.
pub fn reconstruct_connection(
    data: &NahmData,
    x: &Point,
    quad_order: usize,
    h: f64,
) -> Result<[CMatrix2; 3]> {
    let centre = kernel_frame(data, x, quad_order)?;
    connection_from_frames(data, &centre, quad_order, h)
}

fn connection_from_frames(
    data: &NahmData,
    centre: &KernelFrame,
    quad_order: usize,
    h: f64,
) -> Result<[CMatrix2; 3]> {
    if !(h > 0.0) {
        return Err(Error::Validation("difference step must be positive".into()));
    }
    let mut a = [Matrix2::<Complex>::zeros(); 3];
    for j in 0..3 {
        let mut step = Point::zeros();
        step[j] = h;
        let plus = kernel_frame(data, &(centre.x + step), quad_order)?;
        let minus = kernel_frame(data, &(centre.x - step), quad_order)?;
        for side in [&plus, &minus] {
            let dev = alignment_deviation(centre, side);
            if dev > 0.05 {
                return Err(Error::Numeric(format!(
                    "frame alignment failed along axis {} (deviation {dev:.2}); \
                     the kernel frames jumped gauge branches",
                    j + 1
                )));
            }
        }
        let mut n = Matrix2::<Complex>::zeros();
        let inv_2h = Complex::new(1.0 / (2.0 * h), 0.0);
        for ((v0, vp), (vm, &w)) in centre
            .values
            .iter()
            .zip(&plus.values)
            .zip(minus.values.iter().zip(&centre.weights))
        {
            let dv = (vp - vm) * inv_2h;
            let prod = v0.adjoint() * dv;
            for r in 0..2 {
                for c in 0..2 {
                    n[(r, c)] += prod[(r, c)] * Complex::new(w, 0.0);
                }
            }
        }
        a[j] = (n - n.adjoint()) * Complex::new(0.5, 0.0);
    }
    Ok(a)
}

/// ‖U − I‖max for the polar alignment unitary between two frames.
fn alignment_deviation(base: &KernelFrame, other: &KernelFrame) -> f64 {
    let mut s = Matrix2::<Complex>::zeros();
    for ((vb, vo), &w) in base.values.iter().zip(&other.values).zip(&base.weights) {
        let prod = vo.adjoint() * vb;
        for r in 0..2 {
            for c in 0..2 {
                s[(r, c)] += prod[(r, c)] * Complex::new(w, 0.0);
            }
        }
    }
    let u = match su2::inv_sqrt_hermitian(&(s.adjoint() * s)) {
        Some(inv_sqrt) => s * inv_sqrt,
        None => return f64::INFINITY,
    };
    (u - Matrix2::identity())
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Fields at one point: (Φ, A) sharing a single centre frame.
pub fn reconstruct_point(
    data: &NahmData,
    x: &Point,
    quad_order: usize,
    h: f64,
) -> Result<(CMatrix2, [CMatrix2; 3])> {
    let centre = kernel_frame(data, x, quad_order)?;
    let phi = higgs_from_frame(&centre);
    let a = connection_from_frames(data, &centre, quad_order, h)?;
    Ok((phi, a))
}

/// Wrap charge-1 data as a [`FieldConfiguration`] whose closures evaluate
/// the reconstruction on demand. The connection uses central differences
/// with the given step.
pub fn reconstruct_field(data: &NahmData, quad_order: usize, h: f64) -> Result<FieldConfiguration> {
    if data.charge() != 1 {
        return Err(Error::Validation(
            "on-demand reconstruction is implemented for charge 1".into(),
        ));
    }
    if !(h > 0.0) {
        return Err(Error::Validation("difference step must be positive".into()));
    }
    let factor = presentation_factor(data)?;
    let t = constant_triple_scalars(data, factor)?;
    let (nodes, weights) = quad::gauss_legendre(quad_order);
    let nodes = Arc::new(nodes);
    let weights = Arc::new(weights);

    // Normalized frame at x, tabulated on the quadrature nodes; the whole
    // fast path in one deterministic closure shared by both fields.
    let frame_at = Arc::new({
        let nodes = Arc::clone(&nodes);
        let weights = Arc::clone(&weights);
        move |x: &Point| -> Vec<CMatrix2> {
            let m = constant_kernel_matrix(&[t[0] + x[0], t[1] + x[1], t[2] + x[2]]);
            let mut gram = Matrix2::<Complex>::zeros();
            let mut vs: Vec<CMatrix2> = Vec::with_capacity(nodes.len());
            for (&z, &w) in nodes.iter().zip(weights.iter()) {
                let v = su2::exp_hermitian(&(m * Complex::new(z, 0.0)));
                gram += v.adjoint() * v * Complex::new(w, 0.0);
                vs.push(v);
            }
            let normalizer = su2::inv_sqrt_hermitian(&gram)
                .expect("constant hermitian Gram is positive definite");
            for v in &mut vs {
                *v *= normalizer;
            }
            vs
        }
    });

    let higgs = {
        let frame_at = Arc::clone(&frame_at);
        let nodes = Arc::clone(&nodes);
        let weights = Arc::clone(&weights);
        move |x: &Point| -> CMatrix2 {
            let vs = frame_at(x);
            let mut p = Matrix2::<Complex>::zeros();
            for ((v, &z), &w) in vs.iter().zip(nodes.iter()).zip(weights.iter()) {
                p += v.adjoint() * v * Complex::new(w * z, 0.0);
            }
            let half_trace = (p[(0, 0)] + p[(1, 1)]) * Complex::new(0.5, 0.0);
            p[(0, 0)] -= half_trace;
            p[(1, 1)] -= half_trace;
            p * Complex::new(0.0, 0.5)
        }
    };
    let connection = {
        let frame_at = Arc::clone(&frame_at);
        let weights = Arc::clone(&weights);
        move |x: &Point| -> [CMatrix2; 3] {
            let v0 = frame_at(x);
            let mut a = [Matrix2::<Complex>::zeros(); 3];
            let inv_2h = Complex::new(1.0 / (2.0 * h), 0.0);
            for j in 0..3 {
                let mut step = Point::zeros();
                step[j] = h;
                let vp = frame_at(&(x + step));
                let vm = frame_at(&(x - step));
                let mut n = Matrix2::<Complex>::zeros();
                for ((v, p), (m, &w)) in v0.iter().zip(&vp).zip(vm.iter().zip(weights.iter())) {
                    n += v.adjoint() * ((p - m) * inv_2h) * Complex::new(w, 0.0);
                }
                a[j] = (n - n.adjoint()) * Complex::new(0.5, 0.0);
            }
            a
        }
    };
    Ok(FieldConfiguration::new(1, higgs, connection))
}

/// Per-point failures collected by [`reconstruct_grid`].
#[derive(Debug, Clone)]
pub struct GridReconstruction {
    /// |Φ| in the grid's canonical order; NaN where a point failed.
    pub higgs_norm: Vec<f64>,
    pub failures: Vec<(usize, String)>,
}

/// Evaluate |Φ| over a grid in parallel.
pub fn reconstruct_grid(
    data: &NahmData,
    grid: &GridSpec,
    quad_order: usize,
) -> Result<GridReconstruction> {
    // Fail fast on structural problems instead of once per point.
    kernel_frame(data, &grid.point([0, 0, 0]), quad_order)?;
    let idxs: Vec<[usize; 3]> = grid.indices().collect();
    let results: Vec<std::result::Result<f64, String>> = idxs
        .par_iter()
        .map(|idx| {
            reconstruct_higgs(data, &grid.point(*idx), quad_order)
                .map(|phi| fields::field_norm(&phi))
                .map_err(|e| e.to_string())
        })
        .collect();
    let mut higgs_norm = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => higgs_norm.push(v),
            Err(e) => {
                higgs_norm.push(f64::NAN);
                failures.push((i, e));
            }
        }
    }
    Ok(GridReconstruction {
        higgs_norm,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bps;
    use crate::nahm::{evolve, su2_residues, PoleMeta};
    use approx::assert_relative_eq;

    fn point_data(p: &Point) -> NahmData {
        let t = [
            DMatrix::from_element(1, 1, Complex::new(-p[0], 0.0)),
            DMatrix::from_element(1, 1, Complex::new(-p[1], 0.0)),
            DMatrix::from_element(1, 1, Complex::new(-p[2], 0.0)),
        ];
        NahmData::constant(1, t).unwrap()
    }

    fn phi_profile(r: f64) -> f64 {
        1.0 / r.tanh() - 1.0 / r
    }

    #[test]
    fn kernel_matrix_matches_hand_values() {
        let data = point_data(&Point::zeros());
        let r = 1.7;
        let m = kernel_ode_matrix(&data, &Point::new(0.0, 0.0, r), 0.0).unwrap();
        assert!((m[(0, 0)] - Complex::new(r / 2.0, 0.0)).norm() < 1e-15);
        assert!((m[(1, 1)] + Complex::new(r / 2.0, 0.0)).norm() < 1e-15);
        assert!(m[(0, 1)].norm() < 1e-15);

        let p = Point::new(0.3, -0.2, 0.5);
        let at_centre = kernel_ode_matrix(&point_data(&p), &p, 0.0).unwrap();
        assert!(at_centre.iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn kernel_matrix_is_hermitian_for_antihermitian_data() {
        let rho = su2_residues();
        let third = Complex::new(0.3, 0.0);
        let t0 = [&rho[0] * third, &rho[1] * third, &rho[2] * third];
        let data = evolve(&t0, -0.5, 0.5, 1e-10, 5).unwrap();
        let m = kernel_ode_matrix(&data, &Point::new(0.4, -0.1, 0.9), 0.3).unwrap();
        let d = &m - m.adjoint();
        assert!(d.iter().all(|c| c.norm() < 1e-12));
        assert!(kernel_ode_matrix(&data, &Point::zeros(), 0.7).is_err());
    }

    #[test]
    fn axis_frame_has_the_analytic_form() {
        let r = 1.3;
        let data = point_data(&Point::zeros());
        let frame = kernel_frame(&data, &Point::new(0.0, 0.0, r), 64).unwrap();
        // Gram should be (2 sinh r / r)·I, so each basis column is the
        // normalized pure exponential.
        let norm = (r / (2.0 * r.sinh())).sqrt();
        for z in [-0.7, 0.0, 0.4] {
            let b = frame.basis(z).unwrap();
            assert_relative_eq!(b[(0, 0)].re, (r * z / 2.0).exp() * norm, max_relative = 1e-12);
            assert_relative_eq!(b[(1, 1)].re, (-r * z / 2.0).exp() * norm, max_relative = 1e-12);
            assert!(b[(0, 1)].norm() < 1e-14);
            assert!(b[(1, 0)].norm() < 1e-14);
        }
        assert!(frame.gram.orthonormality_residual < 1e-10);
        assert!(frame.gram.condition < 1e3);
        assert!(frame.ode_residual(&data).unwrap() < 1e-8);
    }

    #[test]
    fn higgs_matches_the_axis_profile() {
        let data = point_data(&Point::zeros());
        for r in [0.3, 1.0, 2.6] {
            let phi = reconstruct_higgs(&data, &Point::new(0.0, 0.0, r), 64).unwrap();
            assert_relative_eq!(
                fields::field_norm(&phi),
                phi_profile(r),
                max_relative = 1e-12
            );
            // Diagonal (i, -i)·φ/2 in this gauge.
            assert!((phi[(0, 0)] - Complex::new(0.0, phi_profile(r) / 2.0)).norm() < 1e-12);
        }
        // At the centre the integrand is odd and Φ vanishes identically.
        let at_centre = reconstruct_higgs(&data, &Point::zeros(), 32).unwrap();
        assert!(at_centre.iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn higgs_norm_depends_only_on_the_radius() {
        let p = Point::new(0.3, -0.2, 0.5);
        let data = point_data(&p);
        let xs = [
            p + Point::new(1.1, 0.0, 0.0),
            p + Point::new(0.0, -1.1, 0.0),
            p + Point::new(1.1 / 3f64.sqrt(), 1.1 / 3f64.sqrt(), -1.1 / 3f64.sqrt()),
        ];
        let want = phi_profile(1.1);
        for x in &xs {
            let phi = reconstruct_higgs(&data, x, 64).unwrap();
            assert_relative_eq!(fields::field_norm(&phi), want, max_relative = 1e-11);
        }
    }

    #[test]
    fn round_trip_reproduces_the_closed_form_fields() {
        let p = Point::new(0.3, -0.2, 0.5);
        let data = point_data(&p);
        let reference = bps::bps(p);
        let xs = [
            Point::new(1.0, 0.5, -0.3),
            p + Point::new(1e-4, 0.0, 0.0),
            Point::new(0.3, -0.2, 3.5),
            Point::new(-2.0, 1.0, 2.0),
        ];
        for x in &xs {
            let (phi, a) = reconstruct_point(&data, x, 96, 1e-3).unwrap();
            let d_phi = phi - reference.higgs(x);
            assert!(
                d_phi.iter().all(|c| c.norm() < 1e-9),
                "Higgs mismatch at {x:?}"
            );
            let a_ref = reference.connection(x);
            for j in 0..3 {
                let d = a[j] - a_ref[j];
                assert!(
                    d.iter().all(|c| c.norm() < 1e-6),
                    "connection mismatch at {x:?} axis {j}"
                );
            }
        }
    }

    #[test]
    fn reconstructed_field_satisfies_the_bogomolny_equation() {
        let p = Point::new(0.3, -0.2, 0.5);
        let data = point_data(&p);
        let cfg = reconstruct_field(&data, 64, 1e-3).unwrap();
        let xs = [p + Point::new(0.9, 0.1, -0.4), Point::new(-0.5, 0.6, 1.2)];
        for x in &xs {
            let res = cfg.bogomolny_residual(x, 1e-3).unwrap();
            assert!(res < 5e-6, "residual {res:.2e} at {x:?}");
        }
        // Second-order decay under step halving, measured away from the
        // h-independent quadrature floor.
        let x = xs[0];
        let coarse = cfg.bogomolny_residual(&x, 4e-3).unwrap();
        let fine = cfg.bogomolny_residual(&x, 2e-3).unwrap();
        let order = (coarse / fine).log2();
        assert!(order > 1.7, "order {order:.2}");
        // Smooth at the centre too.
        assert!(cfg.bogomolny_residual(&p, 1e-3).unwrap() < 5e-6);
        // The Laplacian-normalized density peaks at the centre at the
        // closed-form value 2/3.
        let e0 = cfg.energy_density_laplacian(&p, 1e-3).unwrap();
        assert!((e0 - 2.0 / 3.0).abs() < 1e-3, "e(0) = {e0}");
    }

    #[test]
    fn unitary_frame_change_is_a_gauge_transformation() {
        let p = Point::new(0.3, -0.2, 0.5);
        let data = point_data(&p);
        let x = Point::new(1.0, 0.2, -0.1);
        let frame = kernel_frame(&data, &x, 64).unwrap();
        let phi = higgs_from_frame(&frame);

        // Rotate the frame by a constant unitary and redo the quadrature.
        let u = su2::exp(&(su2::basis()[0] * Complex::new(0.4, 0.0)));
        let mut rotated = Matrix2::<Complex>::zeros();
        for ((v, &w), &z) in frame
            .node_values()
            .iter()
            .zip(frame.weights())
            .zip(frame.nodes())
        {
            let vu = v * DMatrix::from_fn(2, 2, |r, c| u[(r, c)]);
            let vv = vu.adjoint() * vu;
            for r in 0..2 {
                for c in 0..2 {
                    rotated[(r, c)] += vv[(r, c)] * Complex::new(w * z, 0.0);
                }
            }
        }
        let half_trace = (rotated[(0, 0)] + rotated[(1, 1)]) * Complex::new(0.5, 0.0);
        rotated[(0, 0)] -= half_trace;
        rotated[(1, 1)] -= half_trace;
        let phi_rot = rotated * Complex::new(0.0, 0.5);

        let conjugated = u.adjoint() * phi * u;
        let d = phi_rot - conjugated;
        assert!(d.iter().all(|c| c.norm() < 1e-12));
        assert_relative_eq!(
            fields::field_norm(&phi_rot),
            fields::field_norm(&phi),
            max_relative = 1e-10
        );
    }

    #[test]
    fn grid_reconstruction_matches_the_profile() {
        let p = Point::new(0.3, -0.2, 0.5);
        let data = point_data(&p);
        let grid = GridSpec::cube(5, p, 1.6).unwrap();
        let rec = reconstruct_grid(&data, &grid, 48).unwrap();
        assert!(rec.failures.is_empty());
        let mut worst = 0.0_f64;
        for idx in grid.indices() {
            let r = (grid.point(idx) - p).norm();
            let want = if r < 1e-12 { 0.0 } else { phi_profile(r) };
            worst = worst.max((rec.higgs_norm[grid.linear_index(idx)] - want).abs());
        }
        assert!(worst < 1e-6, "worst profile error {worst:.2e}");
    }

    #[test]
    fn experimental_path_guards_fire() {
        // Pole family T = ρ/(1-z) sampled from its value at z = -0.9.
        let rho = su2_residues();
        let start = Complex::new(1.0 / 1.9, 0.0);
        let t0 = [&rho[0] * start, &rho[1] * start, &rho[2] * start];

        // No pole data: rejected up front.
        let free = evolve(&t0, -0.9, 0.9, 1e-10, 19).unwrap();
        let err = kernel_frame(&free, &Point::zeros(), 32).unwrap_err();
        assert!(err.to_string().contains("pole data"));

        // With pole data the growth-penalty selection runs, but the
        // one-sided pole family has a three-dimensional mild subspace, so
        // the separation guard must fire at the symmetric point.
        let mut tagged = evolve(&t0, -0.9, 0.9, 1e-10, 19).unwrap();
        tagged.pole_meta = Some(PoleMeta {
            left: None,
            right: Some(su2_residues()),
        });
        let err = kernel_frame(&tagged, &Point::zeros(), 32).unwrap_err();
        assert!(
            err.to_string().contains("selection failed"),
            "unexpected: {err}"
        );
    }

    #[test]
    fn charge_one_rejects_z_dependent_or_complex_data() {
        let mut samples = Vec::new();
        let zs = vec![-0.2, 0.2];
        for f in [1.0, 2.0] {
            samples.push([
                DMatrix::from_element(1, 1, Complex::new(f, 0.0)),
                DMatrix::from_element(1, 1, Complex::ZERO),
                DMatrix::from_element(1, 1, Complex::ZERO),
            ]);
        }
        let varying = NahmData::new(1, zs, samples, None).unwrap();
        assert!(kernel_frame(&varying, &Point::zeros(), 16).is_err());

        let mixed = NahmData::constant(
            1,
            [
                DMatrix::from_element(1, 1, Complex::new(0.4, 0.4)),
                DMatrix::from_element(1, 1, Complex::ZERO),
                DMatrix::from_element(1, 1, Complex::ZERO),
            ],
        )
        .unwrap();
        assert!(kernel_frame(&mixed, &Point::zeros(), 16).is_err());
    }

    #[test]
    fn antihermitian_presentation_reconstructs_the_same_fields() {
        let p = Point::new(0.3, -0.2, 0.5);
        let anti = NahmData::constant(
            1,
            [
                DMatrix::from_element(1, 1, Complex::new(0.0, -p[0])),
                DMatrix::from_element(1, 1, Complex::new(0.0, -p[1])),
                DMatrix::from_element(1, 1, Complex::new(0.0, -p[2])),
            ],
        )
        .unwrap();
        let herm = point_data(&p);
        let x = Point::new(0.8, -0.6, 0.2);
        let a = reconstruct_higgs(&anti, &x, 48).unwrap();
        let b = reconstruct_higgs(&herm, &x, 48).unwrap();
        let d = a - b;
        assert!(d.iter().all(|c| c.norm() < 1e-13));
    }
}
