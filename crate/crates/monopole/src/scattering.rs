//! Hitchin's equation along oriented lines: decaying solutions, spectral
//! line detection, spectral-curve fitting, and the Donaldson and Jarvis
//! rational maps.
//!
//! Along γ(t) = v + tu the equation reads ds/dt = (iΦ − Σᵢ uᵢAᵢ)s. With Φ
//! anti-hermitian, iΦ is hermitian and its eigenvalues at γ(±t_max) set the
//! asymptotic rates, so each end carries a one-dimensional subspace of
//! solutions decaying toward it. A line is spectral when the two subspaces
//! coincide. Both are found by shooting inward from ±t_max, the direction
//! in which the wanted mode dominates; the full u·A term is kept rather
//! than gauged away so arbitrary sampled configurations work unchanged.
//!
//! The coefficient matrix is traceless, so det[s₊(t), s₋(t)] is constant in
//! t and the spectral determinant does not depend on the evaluation point.

use crate::fields::FieldConfiguration;
use crate::minitwistor::{self, OrientedLine, SpectralCurvePoly, TwistorCoord};
use crate::numeric::ode::{self, OdeOptions};
use crate::numeric::poly::{self, NewtonOptions};
use crate::su2::{self, ExtComplex};
use crate::{CMatrix2, CVector2, Complex, Error, Point, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default integration cutoff; ±t_max must sit well inside the asymptotic
/// regime of the configuration.
pub const DEFAULT_T_MAX: f64 = 25.0;
/// Default local tolerance of the adaptive integrator.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Required product (eigenvalue gap of iΦ at the end) · t_max. Below this
/// the decaying and growing modes are not separated enough to shoot.
pub const MIN_GAP_PRODUCT: f64 = 20.0;
/// Allowed drift of |Φ| between 0.8·t_max and t_max before the end is
/// declared outside the asymptotic regime.
pub const PLATEAU_TOL: f64 = 0.05;

/// Span of one renormalized chunk of a long integration. The equation is
/// linear, so the state can be rescaled freely between chunks; this keeps
/// growth like e^{t_max} away from the stepper's blow-up guard.
const CHUNK_SPAN: f64 = 4.0;

/// Which asymptotic end of a line a solution decays toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Plus,
    Minus,
}

impl End {
    fn sign(self) -> f64 {
        match self {
            End::Plus => 1.0,
            End::Minus => -1.0,
        }
    }
}

/// Coefficient matrix iΦ − Σᵢ uᵢAᵢ at parameter t along the line.
fn hitchin_matrix(cfg: &FieldConfiguration, line: &OrientedLine, t: f64) -> CMatrix2 {
    let x = line.point_at(t);
    let u = line.direction();
    let a = cfg.connection(&x);
    let mut m = cfg.higgs(&x) * Complex::new(0.0, 1.0);
    for j in 0..3 {
        m -= a[j] * Complex::new(u[j], 0.0);
    }
    m
}

/// Integrate ds/dt = (iΦ − u·A)s from `t0` to `t1` along the line.
pub fn integrate_hitchin(
    cfg: &FieldConfiguration,
    line: &OrientedLine,
    s0: &CVector2,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<CVector2> {
    let opts = OdeOptions::with_tol(tol);
    let mut f = |t: f64, s: &CVector2| hitchin_matrix(cfg, line, t) * s;
    ode::integrate(&mut f, t0, t1, *s0, &opts)
        .map_err(|e| Error::Numeric(format!("Hitchin integration on [{t0}, {t1}] failed: {e}")))
}

/// Long-span integration in renormalized chunks. Returns the unit final
/// direction and the log of the true magnitude relative to `s0`.
fn integrate_renormalized(
    cfg: &FieldConfiguration,
    line: &OrientedLine,
    s0: &CVector2,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<(CVector2, f64)> {
    let span = t1 - t0;
    let chunks = (span.abs() / CHUNK_SPAN).ceil().max(1.0) as usize;
    let mut s = *s0;
    let mut log_scale = 0.0;
    for c in 0..chunks {
        let a = t0 + span * c as f64 / chunks as f64;
        let b = if c + 1 == chunks {
            t1
        } else {
            t0 + span * (c + 1) as f64 / chunks as f64
        };
        s = integrate_hitchin(cfg, line, &s, a, b, tol)?;
        let n = s.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Numeric(format!(
                "solution norm degenerated to {n} near t = {b}"
            )));
        }
        log_scale += n.ln();
        s = s.unscale(n);
    }
    Ok((s, log_scale))
}

/// Conditioning of one asymptotic end.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EndDiagnostics {
    /// Eigenvalue gap of iΦ at γ(±t_max).
    pub gap: f64,
    /// |Φ| drift over the outer fifth of the ray.
    pub plateau_drift: f64,
}

/// Asymptotic checks at one end of the segment [around − t_max, around +
/// t_max] and the unit seed vector there: the eigenvector of iΦ whose
/// eigenvalue gives decay toward that end.
fn end_seed(
    cfg: &FieldConfiguration,
    line: &OrientedLine,
    end: End,
    around: f64,
    t_max: f64,
) -> Result<(CVector2, EndDiagnostics)> {
    let t_end = around + end.sign() * t_max;
    let t_inner = around + end.sign() * 0.8 * t_max;
    let drift =
        (cfg.higgs_norm(&line.point_at(t_end)) - cfg.higgs_norm(&line.point_at(t_inner))).abs();
    if drift > PLATEAU_TOL {
        return Err(Error::Numeric(format!(
            "asymptotic regime not reached: |Φ| drifts by {drift:.3} over t ∈ [{:.1}, {:.1}]; \
             increase t_max",
            t_inner.min(t_end),
            t_inner.max(t_end),
        )));
    }
    let iphi = cfg.higgs(&line.point_at(t_end)) * Complex::new(0.0, 1.0);
    let [lo, hi] = su2::hermitian_eigenvalues(&iphi);
    let gap = hi - lo;
    if gap * t_max <= MIN_GAP_PRODUCT {
        return Err(Error::Numeric(format!(
            "eigenvalue gap {gap:.3} at t = {t_end:.1} gives gap·t_max = {:.1} ≤ \
             {MIN_GAP_PRODUCT}; the decaying mode is not resolved",
            gap * t_max,
        )));
    }
    // Decay toward +∞ wants the most negative asymptotic rate of s' ≈ iΦs,
    // decay toward −∞ the most positive.
    let seed = su2::hermitian_eigenvector(&iphi, matches!(end, End::Minus));
    Ok((seed, EndDiagnostics { gap, plateau_drift: drift }))
}

/// Solution decaying toward the chosen end, shot inward to t = 0 and
/// unit-normalized there. The result spans the decaying line in the solution
/// space; its phase follows the deterministic eigenvector convention at the
/// seed point.
pub fn decaying_solution(
    cfg: &FieldConfiguration,
    line: &OrientedLine,
    end: End,
    t_max: f64,
    tol: f64,
) -> Result<CVector2> {
    let (s, _, _) = decaying_solution_diagnosed(cfg, line, end, t_max, tol)?;
    Ok(s)
}

fn decaying_solution_diagnosed(
    cfg: &FieldConfiguration,
    line: &OrientedLine,
    end: End,
    t_max: f64,
    tol: f64,
) -> Result<(CVector2, f64, EndDiagnostics)> {
    if !(t_max > 0.0) {
        return Err(Error::Validation(format!("t_max must be positive, got {t_max}")));
    }
    let (seed, diag) = end_seed(cfg, line, end, 0.0, t_max)?;
    let (s, log_scale) = integrate_renormalized(cfg, line, &seed, end.sign() * t_max, 0.0, tol)?;
    Ok((s, log_scale, diag))
}

/// Both decaying solutions of one line, evaluated at t = 0.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub line: OrientedLine,
    pub t_max: f64,
    /// Unit solution decaying as t → +∞.
    pub s_plus: CVector2,
    /// Unit solution decaying as t → −∞.
    pub s_minus: CVector2,
    pub plus: EndDiagnostics,
    pub minus: EndDiagnostics,
}

impl ScatteringSolution {
    /// det[s₊, s₋]; modulus in [0, 1], zero exactly on spectral lines.
    pub fn determinant(&self) -> Complex {
        CMatrix2::from_columns(&[self.s_plus, self.s_minus]).determinant()
    }
}

pub fn scattering_solution(
    cfg: &FieldConfiguration,
    line: &OrientedLine,
    t_max: f64,
    tol: f64,
) -> Result<ScatteringSolution> {
    let (s_plus, _, plus) = decaying_solution_diagnosed(cfg, line, End::Plus, t_max, tol)?;
    let (s_minus, _, minus) = decaying_solution_diagnosed(cfg, line, End::Minus, t_max, tol)?;
    Ok(ScatteringSolution {
        line: *line,
        t_max,
        s_plus,
        s_minus,
        plus,
        minus,
    })
}

/// det of the unit decaying solutions; modulus in [0, 1], zero iff the line
/// is spectral.
pub fn spectral_determinant(
    cfg: &FieldConfiguration,
    line: &OrientedLine,
    t_max: f64,
    tol: f64,
) -> Result<Complex> {
    Ok(scattering_solution(cfg, line, t_max, tol)?.determinant())
}

/// Spectral determinants of many lines in parallel.
pub fn spectral_determinants(
    cfg: &FieldConfiguration,
    lines: &[OrientedLine],
    t_max: f64,
    tol: f64,
) -> Result<Vec<Complex>> {
    lines
        .par_iter()
        .map(|line| spectral_determinant(cfg, line, t_max, tol))
        .collect()
}

/// η-roots of the spectral determinant at fixed direction ζ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaScan {
    pub zeta: Complex,
    /// Converged roots, sorted by real then imaginary part.
    pub roots: Vec<Complex>,
    /// |det| at each root.
    pub residuals: Vec<f64>,
    /// Whether the expected k roots were all located.
    pub complete: bool,
}

/// Locate up to `k` zeros of η ↦ spectral_determinant(line(η, ζ)) in the
/// disk |η| ≤ search_radius.
///
/// A coarse grid scan at relaxed integrator tolerance ranks local minima of
/// |det|; each seed is refined by damped 2-d Newton at full tolerance, and
/// roots are kept when |det| < 1e-8 there. Fewer than `k` roots is reported
/// through `complete`, not as an error.
pub fn find_spectral_etas(
    cfg: &FieldConfiguration,
    zeta: Complex,
    k: u32,
    search_radius: f64,
    t_max: f64,
    tol: f64,
) -> Result<EtaScan> {
    if k == 0 || k != cfg.charge() {
        return Err(Error::Validation(format!(
            "spectral scan needs k = charge ≥ 1, got k = {k} for charge {}",
            cfg.charge()
        )));
    }
    if !(search_radius > 0.0) {
        return Err(Error::Validation(format!(
            "search radius must be positive, got {search_radius}"
        )));
    }
    let det_at = |eta: Complex, tol: f64| -> Result<Complex> {
        let line = TwistorCoord { eta, zeta }.to_line();
        spectral_determinant(cfg, &line, t_max, tol)
    };

    // Coarse heatmap of |det| at relaxed tolerance, in parallel.
    const GRID: usize = 15;
    let coarse_tol = tol.max(1e-5);
    let at = |i: usize, j: usize| -> Complex {
        let x = -search_radius + 2.0 * search_radius * (i as f64 + 0.5) / GRID as f64;
        let y = -search_radius + 2.0 * search_radius * (j as f64 + 0.5) / GRID as f64;
        Complex::new(x, y)
    };
    let cells: Vec<(usize, usize)> =
        (0..GRID).flat_map(|i| (0..GRID).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| det_at(at(i, j), coarse_tol).map(|d| d.norm()))
        .collect::<Result<_>>()?;

    let mut seeds: Vec<(f64, Complex)> = Vec::new();
    for i in 0..GRID {
        for j in 0..GRID {
            let v = vals[i * GRID + j];
            let mut is_min = true;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii >= 0 && jj >= 0 && (ii as usize) < GRID && (jj as usize) < GRID {
                    is_min &= v <= vals[ii as usize * GRID + jj as usize];
                }
            }
            if is_min {
                seeds.push((v, at(i, j)));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Newton refinement at full tolerance. Integration failures inside the
    // refinement are structural and propagate.
    let mut failure: Option<Error> = None;
    let mut f = |eta: Complex| -> Complex {
        match det_at(eta, tol) {
            Ok(d) => d,
            Err(e) => {
                failure.get_or_insert(e);
                Complex::new(f64::NAN, f64::NAN)
            }
        }
    };
    let newton = NewtonOptions {
        fd_step: 1e-5,
        f_tol: 1e-8,
        max_iters: 50,
    };
    let dedupe = search_radius * 5e-3;
    let mut roots: Vec<Complex> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    for (_, seed) in seeds {
        if roots.len() >= k as usize {
            break;
        }
        if let Some((root, res)) = poly::newton_root_2d(&mut f, seed, &newton) {
            if root.norm() <= search_radius * 1.2
                && roots.iter().all(|r| (r - root).norm() > dedupe)
            {
                roots.push(root);
                residuals.push(res);
            }
        }
    }
    drop(f);
    if let Some(e) = failure {
        return Err(e);
    }
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| (roots[a].re, roots[a].im).partial_cmp(&(roots[b].re, roots[b].im)).unwrap());
    let complete = roots.len() == k as usize;
    Ok(EtaScan {
        zeta,
        roots: order.iter().map(|&i| roots[i]).collect(),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        complete,
    })
}

/// A full spectral scan: per-ζ root lists and the fitted curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralScan {
    pub zetas: Vec<Complex>,
    pub roots: Vec<Vec<Complex>>,
    pub residuals: Vec<Vec<f64>>,
    pub curve: SpectralCurvePoly,
    /// Largest pointwise residual among the coefficient fits.
    pub fit_residual: f64,
}

/// Well-spread default ζ sample set: three rings in the unit disk with
/// enough points to overdetermine every coefficient fit.
pub fn default_zeta_samples(k: u32) -> Vec<Complex> {
    let per_ring = (2 * k as usize + 3).max(7);
    let mut out = Vec::with_capacity(3 * per_ring);
    for (ring, radius) in [0.35, 0.6, 0.85].into_iter().enumerate() {
        for j in 0..per_ring {
            let angle = 2.0 * std::f64::consts::PI * (j as f64 + 0.37 * ring as f64) / per_ring as f64;
            out.push(Complex::new(radius * angle.cos(), radius * angle.sin()));
        }
    }
    out
}

/// Fit the spectral curve of a charge-k configuration from η-root scans
/// over the given ζ samples.
///
/// Per ζ the roots η₁…η_k give coefficient samples through Π(η − ηⱼ), and
/// each aᵢ is least-squares fitted by a polynomial of degree ≤ 2i. Every
/// scan must be complete; a missing root is an error here, unlike in
/// [`find_spectral_etas`].
pub fn fit_spectral_curve(
    cfg: &FieldConfiguration,
    k: u32,
    zetas: &[Complex],
    search_radius: f64,
    t_max: f64,
    tol: f64,
) -> Result<SpectralScan> {
    if k == 0 || k != cfg.charge() {
        return Err(Error::Validation(format!(
            "curve fit needs k = charge ≥ 1, got k = {k} for charge {}",
            cfg.charge()
        )));
    }
    let needed = 3 * (2 * k as usize + 1);
    if zetas.len() < needed {
        return Err(Error::Validation(format!(
            "charge {k} needs at least {needed} ζ samples to pin a degree-{} coefficient, got {}",
            2 * k,
            zetas.len()
        )));
    }
    let scans: Vec<EtaScan> = zetas
        .par_iter()
        .map(|&zeta| find_spectral_etas(cfg, zeta, k, search_radius, t_max, tol))
        .collect::<Result<_>>()?;
    for scan in &scans {
        if !scan.complete {
            return Err(Error::Numeric(format!(
                "spectral scan at ζ = {:.4}{:+.4}i found {} of {} η roots",
                scan.zeta.re,
                scan.zeta.im,
                scan.roots.len(),
                k
            )));
        }
    }
    let mut a = Vec::with_capacity(k as usize);
    let mut fit_residual = 0.0_f64;
    for i in 1..=k as usize {
        let samples: Vec<(Complex, Complex)> = scans
            .iter()
            .map(|scan| {
                // Π(η − ηⱼ) = η^k + a₁η^{k−1} + …: aᵢ is the coefficient of
                // η^{k−i}, signs included.
                let c = poly::from_roots(&scan.roots);
                (scan.zeta, c[k as usize - i])
            })
            .collect();
        let (coeffs, residual) = poly::fit_least_squares(&samples, 2 * i);
        fit_residual = fit_residual.max(residual);
        a.push(coeffs);
    }
    let curve = SpectralCurvePoly::new(k, a)?;
    Ok(SpectralScan {
        zetas: zetas.to_vec(),
        roots: scans.iter().map(|s| s.roots.clone()).collect(),
        residuals: scans.iter().map(|s| s.residuals.clone()).collect(),
        curve,
        fit_residual,
    })
}

/// Drop trailing coefficients below `tol` in modulus.
fn trim_trailing(mut v: Vec<Complex>, tol: f64) -> Vec<Complex> {
    while v.last().is_some_and(|c| c.norm() <= tol) {
        v.pop();
    }
    v
}

/// Resultant of two polynomials (ascending coefficients, nonzero leading
/// terms) via the Sylvester determinant.
pub fn resultant(p: &[Complex], q: &[Complex]) -> Complex {
    assert!(!p.is_empty() && !q.is_empty(), "resultant of the zero polynomial");
    let m = p.len() - 1;
    let n = q.len() - 1;
    if m == 0 {
        return p[0].powu(n as u32);
    }
    if n == 0 {
        return q[0].powu(m as u32);
    }
    let size = m + n;
    let mut s = DMatrix::<Complex>::zeros(size, size);
    for r in 0..n {
        for j in 0..=m {
            s[(r, r + j)] = p[m - j];
        }
    }
    for r in 0..m {
        for j in 0..=n {
            s[(n + r, r + j)] = q[n - j];
        }
    }
    s.determinant()
}

/// Rational map p/q of one complex variable, stored as ascending
/// coefficients with q monic.
///
/// Construction trims near-zero leading coefficients, scales both
/// polynomials by the leading coefficient of q, and rejects pairs whose
/// max-normalized resultant falls below 1e-10 (a shared root would make the
/// quotient drop degree). `based` records deg p < deg q.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMap {
    p: Vec<Complex>,
    q: Vec<Complex>,
    based: bool,
}

impl RationalMap {
    pub fn new(p: Vec<Complex>, q: Vec<Complex>) -> Result<Self> {
        let scale = p
            .iter()
            .chain(q.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let p = trim_trailing(p, scale * 1e-12);
        let mut q = trim_trailing(q, scale * 1e-12);
        if q.is_empty() {
            return Err(Error::Validation("denominator is the zero polynomial".into()));
        }
        if p.is_empty() {
            return Err(Error::Validation("numerator is the zero polynomial".into()));
        }
        let lead = *q.last().unwrap();
        let p: Vec<Complex> = p.iter().map(|c| c / lead).collect();
        for c in q.iter_mut() {
            *c /= lead;
        }
        let np = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let nq = q.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let p_hat: Vec<Complex> = p.iter().map(|c| c / np).collect();
        let q_hat: Vec<Complex> = q.iter().map(|c| c / nq).collect();
        let res = resultant(&p_hat, &q_hat).norm();
        if res <= 1e-10 {
            return Err(Error::Validation(format!(
                "numerator and denominator share a root: normalized |resultant| = {res:.3e}"
            )));
        }
        let based = p.len() < q.len();
        Ok(RationalMap { p, q, based })
    }

    /// Ascending numerator coefficients.
    pub fn numerator(&self) -> &[Complex] {
        &self.p
    }

    /// Ascending denominator coefficients (monic).
    pub fn denominator(&self) -> &[Complex] {
        &self.q
    }

    /// max(deg p, deg q).
    pub fn degree(&self) -> usize {
        self.p.len().max(self.q.len()) - 1
    }

    /// Whether the map sends ∞ to 0 (deg p < deg q).
    pub fn is_based(&self) -> bool {
        self.based
    }

    pub fn eval(&self, z: Complex) -> ExtComplex {
        ExtComplex::from_ratio(poly::eval(&self.p, z), poly::eval(&self.q, z))
    }
}

/// Wire form: coefficient arrays of [re, im] pairs, ascending powers.
#[derive(Serialize, Deserialize)]
struct RationalMapWire {
    p: Vec<Complex>,
    q: Vec<Complex>,
    based: bool,
}

impl Serialize for RationalMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalMapWire {
            p: self.p.clone(),
            q: self.q.clone(),
            based: self.based,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = RationalMapWire::deserialize(d)?;
        RationalMap::new(wire.p, wire.q).map_err(serde::de::Error::custom)
    }
}

/// The standard orthonormal frame: z = x¹ + ix², lines along ê₃.
pub fn standard_frame() -> [Point; 3] {
    [
        Point::new(1.0, 0.0, 0.0),
        Point::new(0.0, 1.0, 0.0),
        Point::new(0.0, 0.0, 1.0),
    ]
}

fn check_frame(frame: &[Point; 3]) -> Result<()> {
    let mut defect = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            let d = frame[i].dot(&frame[j]) - if i == j { 1.0 } else { 0.0 };
            defect = defect.max(d.abs());
        }
    }
    if defect > 1e-9 {
        return Err(Error::Validation(format!(
            "frame is not orthonormal: max defect {defect:.3e}"
        )));
    }
    if frame[0].cross(&frame[1]).dot(&frame[2]) < 0.0 {
        return Err(Error::Validation("frame is left-handed".into()));
    }
    Ok(())
}

/// Transition coefficients (a, b) of one line: the +∞-decaying solution
/// expanded over the −∞ model pair, s₊ = a·s_dec + b·s_grow, where s_dec ~
/// |t|^{k/2}e^{t/2} and s_grow ~ |t|^{−k/2}e^{−t/2} as t → −∞, both pinned
/// to the unit eigenframe at t = −t_max. b vanishes exactly on spectral
/// lines; a stays away from zero there.
///
/// Each solution is shot inward from its own end and the pairings are taken
/// at t = 0 where all three are renormalized to unit size, so both
/// determinants are well conditioned. Carrying s₊ across the full span and
/// reading the s_dec component at −t_max instead would bury a under
/// integration error amplified by the growing mode (the unit vector there
/// aligns with s_grow to within e^{−2∫λ}, far below the error floor).
fn transition_coefficients(
    cfg: &FieldConfiguration,
    line: &OrientedLine,
    k: u32,
    t_max: f64,
    tol: f64,
) -> Result<(Complex, Complex)> {
    let (seed_plus, _) = end_seed(cfg, line, End::Plus, 0.0, t_max)?;
    let (s_plus, log_plus) = integrate_renormalized(cfg, line, &seed_plus, t_max, 0.0, tol)?;
    let (seed_dec, _) = end_seed(cfg, line, End::Minus, 0.0, t_max)?;
    let (s_dec, log_dec) = integrate_renormalized(cfg, line, &seed_dec, -t_max, 0.0, tol)?;
    let iphi = cfg.higgs(&line.point_at(-t_max)) * Complex::new(0.0, 1.0);
    let seed_grow = su2::hermitian_eigenvector(&iphi, false);
    let (s_grow, log_grow) = integrate_renormalized(cfg, line, &seed_grow, -t_max, 0.0, tol)?;
    let det2 = |u: &CVector2, v: &CVector2| u[0] * v[1] - u[1] * v[0];
    // Wronskian of the unit-seeded reference pair, a pure phase; dividing by
    // it keeps a and b on a common convention across lines.
    let w = det2(&seed_dec, &seed_grow);
    let a = det2(&s_plus, &s_grow) * Complex::new((log_plus + log_grow).exp(), 0.0) / w;
    let model = t_max.powi(k as i32) * (-t_max).exp();
    let b = -det2(&s_plus, &s_dec) * Complex::new((log_plus + log_dec).exp() * model, 0.0) / w;
    Ok((a, b))
}

/// Donaldson's rational map of a charge-k configuration in the splitting
/// fixed by `frame`.
///
/// For z = x·e₁ + ix·e₂ the line through z along e₃ carries the transition
/// coefficients a(z), b(z). The k zeros β of b inside |z − centre| ≤ radius
/// become the poles: q = Π(z − βᵢ) and p interpolates a(βᵢ), so deg p < k
/// and the map is based. a is rescaled by its largest interpolated value,
/// fixing the one global constant the construction leaves free; callers
/// should compare pole sets and degrees, not the constant. Basedness is
/// cross-checked on the ratio |a/b|, which must fall off toward the grid
/// boundary like the map itself; a itself tends to a constant at large |z|
/// (times a finite-span factor e^{−|z|²/(2·t_max)}), the decay of the map
/// lives in the growth of b.
pub fn donaldson_map(
    cfg: &FieldConfiguration,
    k: u32,
    frame: &[Point; 3],
    z_centre: Complex,
    z_radius: f64,
    t_max: f64,
    tol: f64,
) -> Result<RationalMap> {
    if k == 0 || k != cfg.charge() {
        return Err(Error::Validation(format!(
            "Donaldson map needs k = charge ≥ 1, got k = {k} for charge {}",
            cfg.charge()
        )));
    }
    check_frame(frame)?;
    if !(z_radius > 0.0) {
        return Err(Error::Validation(format!("grid radius must be positive, got {z_radius}")));
    }
    let line_at = |z: Complex| -> Result<OrientedLine> {
        OrientedLine::through(frame[2], frame[0] * z.re + frame[1] * z.im)
    };

    // Zeros of b by heatmap plus Newton; errors inside the closure are
    // structural (asymptotics, gap) and surface afterwards.
    let mut failure: Option<Error> = None;
    let mut b = |z: Complex| -> Complex {
        let det = line_at(z).and_then(|line| spectral_determinant(cfg, &line, t_max, tol));
        match det {
            Ok(d) => d,
            Err(e) => {
                failure.get_or_insert(e);
                Complex::new(f64::NAN, f64::NAN)
            }
        }
    };
    let newton = NewtonOptions {
        fd_step: 1e-5,
        f_tol: 1e-8,
        max_iters: 50,
    };
    let betas = poly::roots_in_disk(
        &mut b,
        z_centre,
        z_radius,
        k as usize,
        17,
        z_radius * 5e-3,
        &newton,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if betas.len() != k as usize {
        return Err(Error::Numeric(format!(
            "pole count mismatch: found {} of {k} zeros of b(z) in |z − ({:.3}{:+.3}i)| ≤ {z_radius}",
            betas.len(),
            z_centre.re,
            z_centre.im,
        )));
    }
    let mut betas = betas;
    betas.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());

    let coeffs_at = |z: Complex| -> Result<(Complex, Complex)> {
        transition_coefficients(cfg, &line_at(z)?, k, t_max, tol)
    };
    let a_poles: Vec<Complex> = betas
        .iter()
        .map(|&z| Ok(coeffs_at(z)?.0))
        .collect::<Result<_>>()?;
    let a_ref = a_poles
        .iter()
        .copied()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .unwrap();
    if a_ref.norm() == 0.0 {
        return Err(Error::Numeric(
            "a(z) vanishes at every pole of the map".into(),
        ));
    }

    // Basedness: |a/b| must fall off toward the grid boundary. Between one
    // ring at the grid radius and one at half of it the map loses at least
    // one power of |z|, so a ratio this close to 1 means the tail is wrong.
    let ring_max = |radius: f64| -> Result<f64> {
        let mut m = 0.0_f64;
        for j in 0..8 {
            let angle = 2.0 * std::f64::consts::PI * (j as f64 + 0.45) / 8.0;
            let z = z_centre + Complex::new(radius * angle.cos(), radius * angle.sin());
            let (a, b) = coeffs_at(z)?;
            m = m.max(a.norm() / b.norm());
        }
        Ok(m)
    };
    let inner = ring_max(0.5 * z_radius)?;
    let outer = ring_max(z_radius)?;
    if outer >= 0.8 * inner {
        return Err(Error::Numeric(format!(
            "basedness violated: max |a/b| = {outer:.3e} on the grid boundary vs {inner:.3e} \
             at half that radius"
        )));
    }

    let q = poly::from_roots(&betas);
    let nodes: Vec<(Complex, Complex)> = betas
        .iter()
        .copied()
        .zip(a_poles.iter().map(|a| a / a_ref))
        .collect();
    let p = poly::lagrange(&nodes);
    RationalMap::new(p, q)
}

/// Ray direction for the Jarvis chart value ζ: the antipodal-conjugate of
/// the spectral-line chart, chosen so the unit charge at the origin maps to
/// the identity. ζ = 0 is −ê₃; ζ → ∞ approaches ê₃.
pub fn jarvis_direction(zeta: Complex) -> Point {
    minitwistor::direction_of(zeta.conj())
}

/// Chart value of a unit direction, inverse to [`jarvis_direction`].
pub fn jarvis_chart(u: &Point) -> ExtComplex {
    let denom = 1.0 - u[2];
    if denom.abs() < 1e-12 {
        return ExtComplex::Infinity;
    }
    ExtComplex::Finite(Complex::new(u[0], -u[1]) / denom)
}

/// Unit forward-decaying solution at `base` of the ray through `base` with
/// direction ζ.
pub fn jarvis_section(
    cfg: &FieldConfiguration,
    base: &Point,
    zeta: Complex,
    t_max: f64,
    tol: f64,
) -> Result<CVector2> {
    let line = OrientedLine::through(jarvis_direction(zeta), *base)?;
    let t_base = line.foot_parameter(base);
    let (seed, _) = end_seed(cfg, &line, End::Plus, t_base, t_max)?;
    let (s, _) = integrate_renormalized(cfg, &line, &seed, t_base + t_max, t_base, tol)?;
    Ok(s)
}

/// Projective value s⁰/s¹ of the Jarvis section.
pub fn jarvis_ratio(
    cfg: &FieldConfiguration,
    base: &Point,
    zeta: Complex,
    t_max: f64,
    tol: f64,
) -> Result<ExtComplex> {
    let s = jarvis_section(cfg, base, zeta, t_max, tol)?;
    Ok(ExtComplex::from_ratio(s[0], s[1]))
}

/// Sampled Jarvis map with its total-least-squares rational fit.
///
/// `numerator`/`denominator` are ascending coefficients of the fitted P/Q;
/// both are meaningful only up to the SU(2) Möbius action on the target and
/// one overall scale, which is fixed by making the largest coefficient 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JarvisMap {
    pub base: [f64; 3],
    pub t_max: f64,
    pub zetas: Vec<Complex>,
    /// Unit homogeneous section values (s⁰, s¹) at the base point.
    pub sections: Vec<[Complex; 2]>,
    pub numerator: Vec<Complex>,
    pub denominator: Vec<Complex>,
    /// max(deg P, deg Q) of the accepted fit.
    pub degree: usize,
    /// Smallest singular value of the fit system at the accepted degree.
    pub residual: f64,
}

impl JarvisMap {
    /// Sampled projective value at sample j.
    pub fn sample(&self, j: usize) -> ExtComplex {
        ExtComplex::from_ratio(self.sections[j][0], self.sections[j][1])
    }

    /// Fitted projective value at an arbitrary ζ.
    pub fn fitted(&self, zeta: Complex) -> ExtComplex {
        ExtComplex::from_ratio(
            poly::eval(&self.numerator, zeta),
            poly::eval(&self.denominator, zeta),
        )
    }
}

/// Sample the Jarvis map of a configuration on a ζ grid and fit a rational
/// map by a degree sweep.
///
/// Each ζ contributes one homogeneous row s¹P(ζ) − s⁰Q(ζ) = 0; the smallest
/// degree d ≤ k+1 whose smallest singular value falls below 1e-6·(sample
/// count) is accepted. The null vector is split into P and Q and trimmed,
/// so a constant map reports degree 0 even when swept at higher d.
pub fn jarvis_map(
    cfg: &FieldConfiguration,
    base: &Point,
    zetas: &[Complex],
    t_max: f64,
    tol: f64,
) -> Result<JarvisMap> {
    let k = cfg.charge() as usize;
    let needed = 2 * k + 4;
    if zetas.len() < needed {
        return Err(Error::Validation(format!(
            "charge {k} needs at least {needed} ζ samples for the degree sweep, got {}",
            zetas.len()
        )));
    }
    let sections: Vec<CVector2> = zetas
        .par_iter()
        .map(|&zeta| jarvis_section(cfg, base, zeta, t_max, tol))
        .collect::<Result<_>>()?;

    let n = zetas.len();
    let threshold = 1e-6 * n as f64;
    let mut best = f64::INFINITY;
    for d in 0..=k + 1 {
        let cols = 2 * (d + 1);
        let mut m = DMatrix::<Complex>::zeros(n, cols);
        for (r, (&zeta, s)) in zetas.iter().zip(&sections).enumerate() {
            let mut pw = Complex::new(1.0, 0.0);
            for c in 0..=d {
                m[(r, c)] = s[1] * pw;
                m[(r, d + 1 + c)] = -s[0] * pw;
                pw *= zeta;
            }
        }
        let svd = m.svd(false, true);
        let sigma = svd.singular_values[cols - 1];
        best = best.min(sigma);
        if sigma >= threshold {
            continue;
        }
        let v_t = svd.v_t.expect("svd was computed with right singular vectors");
        let raw: Vec<Complex> = v_t.row(cols - 1).iter().map(|c| c.conj()).collect();
        let pivot = raw
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        let vec: Vec<Complex> = raw.iter().map(|c| c / pivot).collect();
        let numerator = trim_trailing(vec[..=d].to_vec(), 1e-6);
        let denominator = trim_trailing(vec[d + 1..].to_vec(), 1e-6);
        let deg = |v: &Vec<Complex>| v.len().saturating_sub(1);
        return Ok(JarvisMap {
            base: [base[0], base[1], base[2]],
            t_max,
            zetas: zetas.to_vec(),
            sections: sections.iter().map(|s| [s[0], s[1]]).collect(),
            degree: deg(&numerator).max(deg(&denominator)),
            residual: sigma,
            numerator,
            denominator,
        });
    }
    Err(Error::Numeric(format!(
        "degree estimate unstable: no rational map of degree ≤ {} fits the {n} samples \
         (best singular value {best:.3e} ≥ threshold {threshold:.1e})",
        k + 1
    )))
}

/// Jarvis ratios over a ζ grid in parallel, without fitting.
pub fn jarvis_samples(
    cfg: &FieldConfiguration,
    base: &Point,
    zetas: &[Complex],
    t_max: f64,
    tol: f64,
) -> Result<Vec<ExtComplex>> {
    zetas
        .par_iter()
        .map(|&zeta| jarvis_ratio(cfg, base, zeta, t_max, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bps::bps;
    use crate::fields::GaugeTransform;
    use crate::minitwistor::eta_of_point;
    use approx::assert_relative_eq;

    const P: [f64; 3] = [0.3, -0.2, 0.5];

    fn bps_at_p() -> FieldConfiguration {
        bps(Point::new(P[0], P[1], P[2]))
    }

    /// Deterministic unit vectors from a tiny xorshift stream.
    fn pseudo_random_directions(count: usize, seed: u64) -> Vec<Point> {
        let mut state = seed | 1;
        let mut next = move || -> f64 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let v = Point::new(next(), next(), next());
            if v.norm() > 0.1 {
                out.push(v / v.norm());
            }
        }
        out
    }

    #[test]
    fn vacuum_solutions_pin_exponentials() {
        let cfg = FieldConfiguration::vacuum();
        let line = OrientedLine::through(Point::new(0.0, 0.0, 1.0), Point::zeros()).unwrap();
        let s = integrate_hitchin(
            &cfg,
            &line,
            &CVector2::new(Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)),
            0.0,
            1.5,
            DEFAULT_TOL,
        )
        .unwrap();
        assert_relative_eq!(s[0].re, (-1.5_f64).exp(), max_relative = 1e-9);
        assert!(s[0].im.abs() < 1e-14 && s[1].norm() < 1e-14);
        let s = integrate_hitchin(
            &cfg,
            &line,
            &CVector2::new(Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)),
            0.0,
            1.5,
            DEFAULT_TOL,
        )
        .unwrap();
        assert_relative_eq!(s[1].re, 1.5_f64.exp(), max_relative = 1e-9);
        assert!(s[0].norm() < 1e-14);

        // Linearity in the initial vector.
        let a = CVector2::new(Complex::new(0.3, 0.4), Complex::new(-0.2, 0.9));
        let b = CVector2::new(Complex::new(-1.1, 0.0), Complex::new(0.5, -0.3));
        let alpha = Complex::new(0.7, -0.2);
        let beta = Complex::new(-0.4, 1.1);
        let lhs = integrate_hitchin(&cfg, &line, &(a * alpha + b * beta), 0.0, 1.5, DEFAULT_TOL).unwrap();
        let ra = integrate_hitchin(&cfg, &line, &a, 0.0, 1.5, DEFAULT_TOL).unwrap();
        let rb = integrate_hitchin(&cfg, &line, &b, 0.0, 1.5, DEFAULT_TOL).unwrap();
        assert!((lhs - (ra * alpha + rb * beta)).norm() < 1e-9);
    }

    #[test]
    fn vacuum_scattering_is_trivial() {
        let cfg = FieldConfiguration::vacuum();
        let u = Point::new(1.0, 2.0, 2.0) / 3.0;
        let line = OrientedLine::through(u, Point::new(0.7, -0.3, 0.2)).unwrap();
        let sol = scattering_solution(&cfg, &line, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
        assert!((sol.s_plus.norm() - 1.0).abs() < 1e-10);
        assert!((sol.s_minus.norm() - 1.0).abs() < 1e-10);
        // Decaying spans are the coordinate axes in the standard gauge.
        assert!(sol.s_plus[1].norm() < 1e-9);
        assert!(sol.s_minus[0].norm() < 1e-9);
        assert_relative_eq!(sol.determinant().norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn forward_backward_integration_is_reversible() {
        let cfg = bps_at_p();
        let line = OrientedLine::through(Point::new(0.0, 1.0, 0.0), Point::new(0.4, 0.0, 0.1)).unwrap();
        let s0 = CVector2::new(Complex::new(0.6, -0.1), Complex::new(0.2, 0.7));
        let fwd = integrate_hitchin(&cfg, &line, &s0, -2.0, 4.0, DEFAULT_TOL).unwrap();
        let back = integrate_hitchin(&cfg, &line, &fwd, 4.0, -2.0, DEFAULT_TOL).unwrap();
        assert!((back - s0).norm() < 1e-8);
    }

    #[test]
    fn unit_charge_decay_has_half_rate_and_log_factor() {
        // Along a line through the centre the hedgehog direction is frozen,
        // so the decaying solution is exactly exp(−∫|Φ|/2) times the seed
        // and |s(20)|/|s(25)| = √(sinh 25/ sinh 20 · 20/25): rate |Φ|∞/2
        // with the 1/r tail contributing the √t factor.
        let cfg = bps(Point::zeros());
        let line = OrientedLine::through(Point::new(0.0, 0.0, 1.0), Point::zeros()).unwrap();
        let iphi = cfg.higgs(&line.point_at(25.0)) * Complex::new(0.0, 1.0);
        let seed = su2::hermitian_eigenvector(&iphi, false);
        let s20 = integrate_hitchin(&cfg, &line, &seed, 25.0, 20.0, DEFAULT_TOL).unwrap();
        let expected = ((25.0_f64.sinh() / 20.0_f64.sinh()) * (20.0 / 25.0)).sqrt();
        assert_relative_eq!(s20.norm(), expected, max_relative = 1e-8);
    }

    #[test]
    fn spectral_lines_pass_through_the_centre() {
        let cfg = bps_at_p();
        let p = Point::new(P[0], P[1], P[2]);
        for u in pseudo_random_directions(6, 11) {
            let line = OrientedLine::through(u, p).unwrap();
            let det = spectral_determinant(&cfg, &line, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
            assert!(det.norm() < 1e-6, "|det| = {:.3e} through the centre", det.norm());
        }
        for (i, u) in pseudo_random_directions(6, 23).into_iter().enumerate() {
            // Offset perpendicular to the direction so the distance is 0.5.
            let mut w = if u[0].abs() < 0.7 {
                Point::new(1.0, 0.0, 0.0)
            } else {
                Point::new(0.0, 1.0, 0.0)
            };
            w = (w - u * w.dot(&u)).normalize();
            let line = OrientedLine::through(u, p + w * 0.5).unwrap();
            let det = spectral_determinant(&cfg, &line, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
            assert!(det.norm() > 0.1, "offset line {i}: |det| = {:.3e}", det.norm());
        }
        // Regression value for the impact-0.5 modulus along ê₃.
        let line = OrientedLine::through(Point::new(0.0, 0.0, 1.0), Point::new(P[0] + 0.5, P[1], 0.0)).unwrap();
        let det = spectral_determinant(&cfg, &line, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
        assert_relative_eq!(det.norm(), 0.47700, epsilon = 1e-4);
    }

    #[test]
    fn determinant_modulus_is_tau_symmetric_and_gauge_invariant() {
        let cfg = bps_at_p();
        let lines = [
            OrientedLine::through(Point::new(0.0, 0.0, 1.0), Point::new(P[0] + 0.5, P[1], 0.0)).unwrap(),
            OrientedLine::through(Point::new(1.0, 2.0, 2.0) / 3.0, Point::new(-0.4, 0.3, 0.6)).unwrap(),
        ];
        let transform = GaugeTransform::axis_bump(2, 0.8, Point::new(0.2, 0.1, -0.3), 1.5);
        let gauged = cfg.gauge_apply(&transform);
        for line in &lines {
            let d = spectral_determinant(&cfg, line, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
            let d_rev =
                spectral_determinant(&cfg, &line.reverse(), DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
            assert!((d.norm() - d_rev.norm()).abs() < 1e-6);
            let d_gauged = spectral_determinant(&gauged, line, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
            assert!((d.norm() - d_gauged.norm()).abs() < 1e-6);
        }
    }

    #[test]
    fn asymptotic_guards_fire() {
        let cfg = bps(Point::zeros());
        let line = OrientedLine::through(Point::new(0.0, 0.0, 1.0), Point::zeros()).unwrap();
        // |Φ| still climbs steeply at r = 3.
        let err = decaying_solution(&cfg, &line, End::Plus, 3.0, DEFAULT_TOL).unwrap_err();
        assert!(err.to_string().contains("asymptotic regime"), "{err}");
        // Plateau fine at r = 12 but gap·t_max ≈ 11 is too small to shoot.
        let err = decaying_solution(&cfg, &line, End::Plus, 12.0, DEFAULT_TOL).unwrap_err();
        assert!(err.to_string().contains("gap"), "{err}");
    }

    #[test]
    fn eta_scan_matches_the_incidence_oracle() {
        let cfg = bps_at_p();
        let p = Point::new(P[0], P[1], P[2]);
        let mut zetas = vec![
            Complex::new(0.0, 0.0),
            Complex::new(0.31, 0.12),
            Complex::new(-0.44, 0.27),
        ];
        for u in pseudo_random_directions(3, 37) {
            zetas.push(Complex::new(0.45 * u[0], 0.45 * u[1]));
        }
        for zeta in zetas {
            let scan = find_spectral_etas(&cfg, zeta, 1, 2.0, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
            assert!(scan.complete, "no root at ζ = {zeta}");
            assert!(scan.residuals[0] < 1e-8);
            let expected = eta_of_point(&p, zeta);
            assert!(
                (scan.roots[0] - expected).norm() < 1e-4,
                "ζ = {zeta}: root {} vs η_p {expected}",
                scan.roots[0]
            );
            // The detected spectral line passes through the centre.
            let line = TwistorCoord { eta: scan.roots[0], zeta }.to_line();
            assert!(line.distance_to(&p) < 1e-3);
        }
        // Charge bookkeeping is validated up front.
        assert!(find_spectral_etas(&cfg, Complex::new(0.0, 0.0), 2, 1.0, DEFAULT_T_MAX, DEFAULT_TOL).is_err());
        assert!(find_spectral_etas(&FieldConfiguration::vacuum(), Complex::new(0.0, 0.0), 0, 1.0, DEFAULT_T_MAX, DEFAULT_TOL).is_err());
    }

    #[test]
    fn fitted_curve_matches_the_point_curve() {
        let cfg = bps_at_p();
        let p = Point::new(P[0], P[1], P[2]);
        let zetas = default_zeta_samples(1);
        let scan = fit_spectral_curve(&cfg, 1, &zetas, 2.0, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
        // k = 1: a₁(ζ) = −η_p(ζ) coefficientwise.
        let a1 = scan.curve.coefficient_poly(1);
        let expected = [
            -Complex::new(p[0], p[1]),
            -Complex::new(2.0 * p[2], 0.0),
            -Complex::new(-p[0], p[1]),
        ];
        for (got, want) in a1.iter().zip(expected) {
            assert!((got - want).norm() < 1e-3, "{got} vs {want}");
        }
        assert!(scan.curve.reality_defect() < 1e-3);
        assert!((scan.curve.centre(1e-2).unwrap() - p).norm() < 1e-3);

        // Scan results survive a JSON round trip.
        let json = serde_json::to_string(&scan).unwrap();
        let back: SpectralScan = serde_json::from_str(&json).unwrap();
        assert_eq!(back.roots, scan.roots);
        assert_eq!(back.curve.coefficient_poly(1), scan.curve.coefficient_poly(1));

        // Sample-count precondition.
        assert!(fit_spectral_curve(&cfg, 1, &zetas[..8], 2.0, DEFAULT_T_MAX, DEFAULT_TOL).is_err());
    }

    #[test]
    fn centred_charge_fits_the_zero_curve() {
        let cfg = bps(Point::zeros());
        let zetas: Vec<Complex> = default_zeta_samples(1).into_iter().take(9).collect();
        let scan = fit_spectral_curve(&cfg, 1, &zetas, 1.0, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
        for c in scan.curve.coefficient_poly(1) {
            assert!(c.norm() < 1e-6, "a₁ coefficient {c} should vanish");
        }
        assert!(scan.fit_residual < 1e-6);
    }

    #[test]
    fn rational_map_invariants() {
        let one = Complex::new(1.0, 0.0);
        // (z − r) over (z − r)(z − 2) shares a root.
        let r = Complex::new(0.4, -0.3);
        let shared = RationalMap::new(
            vec![-r, one],
            poly::from_roots(&[r, Complex::new(2.0, 0.0)]),
        );
        assert!(shared.is_err());

        // Non-monic input is normalized without changing the map.
        let map = RationalMap::new(
            vec![Complex::new(0.0, 2.0)],
            vec![Complex::new(3.0, 0.0), Complex::new(-1.5, 0.0)],
        )
        .unwrap();
        assert_eq!(map.denominator().len(), 2);
        assert!((map.denominator()[1] - one).norm() < 1e-15);
        assert!(map.is_based());
        assert_eq!(map.degree(), 1);
        match map.eval(Complex::new(2.0, 0.0)) {
            ExtComplex::Infinity => {}
            ExtComplex::Finite(v) => panic!("expected the pole, got {v}"),
        }

        let json = serde_json::to_string(&map).unwrap();
        let back: RationalMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn donaldson_pole_sits_at_the_centre_projection() {
        let cfg = bps_at_p();
        let map = donaldson_map(
            &cfg,
            1,
            &standard_frame(),
            Complex::new(0.0, 0.0),
            3.0,
            21.5,
            1e-10,
        )
        .unwrap();
        assert!(map.is_based());
        assert_eq!(map.degree(), 1);
        // q(z) = z − (p¹ + ip²).
        let pole = -map.denominator()[0];
        assert!((pole - Complex::new(P[0], P[1])).norm() < 1e-4, "pole at {pole}");

        // Searching a disk that excludes the pole reports the mismatch.
        let err = donaldson_map(
            &cfg,
            1,
            &standard_frame(),
            Complex::new(-1.0, 1.0),
            0.3,
            21.5,
            1e-8,
        )
        .unwrap_err();
        assert!(err.to_string().contains("pole count"), "{err}");
    }

    #[test]
    fn centred_donaldson_map_is_c_over_z() {
        let cfg = bps(Point::zeros());
        let map = donaldson_map(
            &cfg,
            1,
            &standard_frame(),
            Complex::new(0.0, 0.0),
            3.0,
            21.5,
            1e-10,
        )
        .unwrap();
        assert!(map.is_based());
        assert!(map.denominator()[0].norm() < 1e-4, "pole should sit at 0");
        // The global constant is fixed by the pole values, so p = 1 exactly.
        assert!((map.numerator()[0] - Complex::new(1.0, 0.0)).norm() < 1e-12);
        let probe = Complex::new(2.0, 1.0);
        match map.eval(probe) {
            ExtComplex::Finite(v) => {
                assert!((v * (probe - (-map.denominator()[0])) - Complex::new(1.0, 0.0)).norm() < 1e-10);
            }
            ExtComplex::Infinity => panic!("finite probe hit a pole"),
        }
    }

    #[test]
    fn jarvis_vacuum_is_the_constant_infinity() {
        let cfg = FieldConfiguration::vacuum();
        let zetas: Vec<Complex> = (0..8)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / 8.0;
                Complex::new(0.7 * a.cos(), 0.7 * a.sin())
            })
            .collect();
        let map = jarvis_map(&cfg, &Point::new(0.2, -0.1, 0.4), &zetas, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
        assert_eq!(map.degree, 0);
        for j in 0..zetas.len() {
            assert_eq!(map.sample(j), ExtComplex::Infinity);
        }
        assert_eq!(map.fitted(Complex::new(0.3, 0.1)), ExtComplex::Infinity);
        assert!(map.residual < 1e-10);
    }

    #[test]
    fn centred_jarvis_map_is_the_identity() {
        let cfg = bps(Point::zeros());
        let zetas: Vec<Complex> = (0..12)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * (j as f64 + 0.3) / 12.0;
                let r = if j % 2 == 0 { 0.5 } else { 1.1 };
                Complex::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let map = jarvis_map(&cfg, &Point::zeros(), &zetas, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
        assert_eq!(map.degree, 1);
        for (j, &zeta) in zetas.iter().enumerate() {
            let d = su2::chordal(map.sample(j), ExtComplex::Finite(zeta));
            assert!(d < 1e-6, "sample at ζ = {zeta} off by {d:.2e}");
        }
        let probe = Complex::new(0.37, 0.21);
        assert!(su2::chordal(map.fitted(probe), ExtComplex::Finite(probe)) < 1e-6);
    }

    #[test]
    fn jarvis_map_is_rotation_equivariant() {
        // Rotating the configuration by R (lifted to g ∈ SU(2)) rotates the
        // rays and acts on the target by the Möbius action of g.
        let theta: f64 = 0.7;
        let g = su2::exp(&(su2::basis()[2] * Complex::new(-theta / 2.0, 0.0)));
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::z_axis(), theta);

        let cfg = bps(Point::zeros());
        let g_c = g;
        let cfg_h = cfg.clone();
        let higgs = move |x: &Point| g_c * cfg_h.higgs(&(rot.inverse() * x)) * g_c.adjoint();
        let cfg_a = cfg.clone();
        let connection = move |x: &Point| {
            let a = cfg_a.connection(&(rot.inverse() * x));
            let mut out = [CMatrix2::zeros(); 3];
            for i in 0..3 {
                for k in 0..3 {
                    out[i] += (g_c * a[k] * g_c.adjoint()) * Complex::new(rot.matrix()[(i, k)], 0.0);
                }
            }
            out
        };
        let rotated = FieldConfiguration::new(1, higgs, connection);

        let base = Point::new(0.4, 0.1, -0.2);
        let base_rot = rot * base;
        for zeta in [Complex::new(0.3, 0.2), Complex::new(-0.5, 0.1), Complex::new(0.25, -0.6)] {
            let u = jarvis_direction(zeta);
            let zeta_rot = match jarvis_chart(&(rot * u)) {
                ExtComplex::Finite(z) => z,
                ExtComplex::Infinity => panic!("rotated direction hit the chart pole"),
            };
            let r1 = jarvis_ratio(&cfg, &base, zeta, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
            let r2 = jarvis_ratio(&rotated, &base_rot, zeta_rot, DEFAULT_T_MAX, DEFAULT_TOL).unwrap();
            let d = su2::chordal(r2, su2::mobius(&g, r1));
            assert!(d < 1e-3, "equivariance defect {d:.2e} at ζ = {zeta}");
        }
    }
}

