//! Nahm matrix data on the open interval (-1, 1): the flow
//! dT₁/dz = [T₂, T₃] (and cyclic), its Lax form, and the induced spectral
//! curve.
//!
//! Charge-k data is a triple of k×k matrices per sample point. Solutions of
//! interest are anti-hermitian with simple poles at z = ±1 whose residues
//! form an irreducible su(2) representation; the integrator refuses to
//! start or end inside the pole window |z| > 1 - 0.05 and reports blow-up
//! locations for trajectories that escape early. Hermitian presentations
//! (T ↦ -iT) are accepted everywhere and detected where the distinction
//! matters (the spectral curve); the charge-1 point monopole is the real
//! triple Tₐ = -pₐ.

use crate::minitwistor::SpectralCurvePoly;
use crate::numeric::ode::{self, OdeError, OdeOptions};
use crate::numeric::poly;
use crate::{Complex, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Triple (T₁, T₂, T₃) of k×k complex matrices.
pub type NahmTriple = [DMatrix<Complex>; 3];

/// Margin of the pole window at z = ±1 the flow keeps out of.
pub const POLE_MARGIN: f64 = 0.05;

/// Right-hand side of Nahm's equations, dTₐ/dz = [T_b, T_c] for (a,b,c)
/// cyclic.
pub fn nahm_rhs(t: &NahmTriple) -> NahmTriple {
    let comm = |a: &DMatrix<Complex>, b: &DMatrix<Complex>| a * b - b * a;
    [comm(&t[1], &t[2]), comm(&t[2], &t[0]), comm(&t[0], &t[1])]
}

/// Lax polynomial A(ζ) = (T₁+iT₂) + 2T₃ζ + (-T₁+iT₂)ζ².
pub fn lax_polynomial(t: &NahmTriple, zeta: Complex) -> DMatrix<Complex> {
    let i = Complex::new(0.0, 1.0);
    (&t[0] + &t[1] * i) + &t[2] * (2.0 * zeta) + (&t[1] * i - &t[0]) * (zeta * zeta)
}

/// Companion matrix A₊(ζ) = iT₃ - (iT₁ + T₂)ζ; along solutions
/// dA/dz = [A₊, A].
pub fn lax_companion(t: &NahmTriple, zeta: Complex) -> DMatrix<Complex> {
    let i = Complex::new(0.0, 1.0);
    &t[2] * i - (&t[0] * i + &t[1]) * zeta
}

/// su(2) residue triple ρₐ = -(i/2)τₐ; satisfies [ρ_b, ρ_c] = ρₐ, so
/// Tₐ(z) = ρₐ/(1-z) solves the flow with a simple pole at z = 1.
pub fn su2_residues() -> NahmTriple {
    let h = Complex::new(0.0, -0.5);
    [
        DMatrix::from_row_slice(2, 2, &[Complex::ZERO, h, h, Complex::ZERO]),
        DMatrix::from_row_slice(
            2,
            2,
            &[Complex::ZERO, -Complex::new(0.5, 0.0), Complex::new(0.5, 0.0), Complex::ZERO],
        ),
        DMatrix::from_row_slice(2, 2, &[h, Complex::ZERO, Complex::ZERO, -h]),
    ]
}

/// Pole residues recorded alongside a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleMeta {
    /// Residue triple at z = -1, if the trajectory has that pole.
    pub left: Option<NahmTriple>,
    /// Residue triple at z = +1.
    pub right: Option<NahmTriple>,
}

/// Sampled Nahm trajectory with cubic Hermite evaluation between samples
/// (slopes supplied by the flow itself).
#[derive(Debug, Clone, PartialEq)]
pub struct NahmData {
    k: usize,
    z_samples: Vec<f64>,
    t: Vec<NahmTriple>,
    pub pole_meta: Option<PoleMeta>,
}

impl NahmData {
    pub fn new(
        k: usize,
        z_samples: Vec<f64>,
        t: Vec<NahmTriple>,
        pole_meta: Option<PoleMeta>,
    ) -> Result<Self> {
        if z_samples.is_empty() || z_samples.len() != t.len() {
            return Err(Error::Validation(
                "need equal, nonzero numbers of z samples and matrix triples".into(),
            ));
        }
        for w in z_samples.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Validation("z samples must be strictly increasing".into()));
            }
        }
        if z_samples[0] <= -1.0 || *z_samples.last().unwrap() >= 1.0 {
            return Err(Error::Validation("z samples must lie inside (-1, 1)".into()));
        }
        for triple in &t {
            for m in triple {
                if m.nrows() != k || m.ncols() != k {
                    return Err(Error::Validation(format!(
                        "matrix block is {}×{}, expected {k}×{k}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        Ok(NahmData {
            k,
            z_samples,
            t,
            pole_meta,
        })
    }

    /// z-independent data (a single sample at z = 0, valid on all of the
    /// interval). Exact for charge 1, where the flow is trivial.
    pub fn constant(k: usize, t: NahmTriple) -> Result<Self> {
        NahmData::new(k, vec![0.0], vec![t], None)
    }

    pub fn charge(&self) -> usize {
        self.k
    }

    pub fn z_samples(&self) -> &[f64] {
        &self.z_samples
    }

    pub fn samples(&self) -> &[NahmTriple] {
        &self.t
    }

    pub fn is_constant(&self) -> bool {
        self.t.len() == 1
    }

    /// Matrix triple at `z`: exact sample, cubic Hermite between samples,
    /// error outside the sampled range (constant data is defined
    /// everywhere).
    pub fn at(&self, z: f64) -> Result<NahmTriple> {
        if self.is_constant() {
            return Ok(self.t[0].clone());
        }
        let (lo, hi) = (self.z_samples[0], *self.z_samples.last().unwrap());
        if z < lo - 1e-12 || z > hi + 1e-12 {
            return Err(Error::Validation(format!(
                "z = {z} outside the sampled range [{lo}, {hi}]"
            )));
        }
        let z = z.clamp(lo, hi);
        let idx = match self
            .z_samples
            .binary_search_by(|a| a.partial_cmp(&z).unwrap())
        {
            Ok(i) => return Ok(self.t[i].clone()),
            Err(i) => i - 1,
        };
        let (z0, z1) = (self.z_samples[idx], self.z_samples[idx + 1]);
        let h = z1 - z0;
        let s = (z - z0) / h;
        let (t0, t1) = (&self.t[idx], &self.t[idx + 1]);
        let (d0, d1) = (nahm_rhs(t0), nahm_rhs(t1));
        let h00 = (2.0 * s - 3.0) * s * s + 1.0;
        let h10 = ((s - 2.0) * s + 1.0) * s;
        let h01 = (3.0 - 2.0 * s) * s * s;
        let h11 = (s - 1.0) * s * s;
        let mut out = [
            DMatrix::zeros(self.k, self.k),
            DMatrix::zeros(self.k, self.k),
            DMatrix::zeros(self.k, self.k),
        ];
        for a in 0..3 {
            out[a] = &t0[a] * Complex::new(h00, 0.0)
                + &d0[a] * Complex::new(h10 * h, 0.0)
                + &t1[a] * Complex::new(h01, 0.0)
                + &d1[a] * Complex::new(h11 * h, 0.0);
        }
        Ok(out)
    }

    /// Max hermitian part over all samples and components; zero for
    /// anti-hermitian data.
    pub fn antihermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for triple in &self.t {
            for m in triple {
                let d = m + m.adjoint();
                worst = worst.max(d.iter().map(|c| c.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    /// Max anti-hermitian part; zero for hermitian-presentation data.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for triple in &self.t {
            for m in triple {
                let d = m - m.adjoint();
                worst = worst.max(d.iter().map(|c| c.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    /// Max finite-difference defect of the flow at interior samples;
    /// second-order in the sample spacing, a consistency diagnostic for
    /// imported data.
    pub fn flow_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 1..self.t.len().saturating_sub(1) {
            let dz = self.z_samples[i + 1] - self.z_samples[i - 1];
            let rhs = nahm_rhs(&self.t[i]);
            for a in 0..3 {
                let fd = (&self.t[i + 1][a] - &self.t[i - 1][a]) / Complex::new(dz, 0.0);
                let d = fd - &rhs[a];
                worst = worst.max(d.iter().map(|c| c.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }
}

fn flatten(t: &NahmTriple, k: usize) -> DVector<Complex> {
    let mut v = DVector::zeros(3 * k * k);
    for (a, m) in t.iter().enumerate() {
        for (i, c) in m.iter().enumerate() {
            v[a * k * k + i] = *c;
        }
    }
    v
}

fn unflatten(v: &DVector<Complex>, k: usize) -> NahmTriple {
    let mut out = [
        DMatrix::zeros(k, k),
        DMatrix::zeros(k, k),
        DMatrix::zeros(k, k),
    ];
    for a in 0..3 {
        for i in 0..k * k {
            out[a][i] = v[a * k * k + i];
        }
    }
    out
}

/// Integrate the flow from `t0` at `z0` to `z1`, recording `n_samples`
/// uniformly spaced triples (endpoints included).
///
/// Both endpoints must stay out of the pole window |z| ≥ 1 - 0.05.
/// Trajectories that blow up mid-interval (poles inside the interval) are
/// reported as numeric errors carrying the blow-up location.
pub fn evolve(t0: &NahmTriple, z0: f64, z1: f64, tol: f64, n_samples: usize) -> Result<NahmData> {
    let k = t0[0].nrows();
    for m in t0 {
        if m.nrows() != k || m.ncols() != k {
            return Err(Error::Validation("initial triple blocks differ in size".into()));
        }
    }
    let lim = 1.0 - POLE_MARGIN;
    if z0.abs() > lim || z1.abs() > lim {
        return Err(Error::Validation(format!(
            "integration endpoints must lie in [-{lim}, {lim}]"
        )));
    }
    if n_samples < 2 || z1 <= z0 {
        return Err(Error::Validation(
            "need z1 > z0 and at least two samples".into(),
        ));
    }
    let zs: Vec<f64> = (0..n_samples)
        .map(|i| z0 + (z1 - z0) * i as f64 / (n_samples - 1) as f64)
        .collect();
    let mut rhs = |_z: f64, y: &DVector<Complex>| -> DVector<Complex> {
        flatten(&nahm_rhs(&unflatten(y, k)), k)
    };
    let opts = OdeOptions {
        blowup_norm: 1e9,
        ..OdeOptions::with_tol(tol)
    };
    let states = ode::integrate_sampled(&mut rhs, z0, z1, flatten(t0, k), &zs, &opts).map_err(
        |e| match e {
            OdeError::BlowUp { t, norm } => Error::Numeric(format!(
                "Nahm flow blew up near z = {t} (norm {norm:.2e}); pole inside the interval"
            )),
            other => Error::Numeric(other.to_string()),
        },
    )?;
    let t = states.iter().map(|v| unflatten(v, k)).collect();
    NahmData::new(k, zs, t, None)
}

/// Spectral curve det(ηI + c·A(ζ)) = 0 of the data at its first sample,
/// fitted in ζ; returns the curve and the max coefficient fit residual.
///
/// The presentation factor c is 1 for hermitian triples and -i for
/// anti-hermitian ones, so both presentations of the same data produce the
/// same real curve. Needs more ζ samples than 2k+1.
pub fn nahm_spectral_curve(
    data: &NahmData,
    zeta_samples: &[Complex],
) -> Result<(SpectralCurvePoly, f64)> {
    let k = data.k;
    if zeta_samples.len() <= 2 * k {
        return Err(Error::Validation(format!(
            "need more than {} ζ samples for charge {k}",
            2 * k
        )));
    }
    let t = &data.samples()[0];
    let c = presentation_factor(data);
    let mut per_zeta: Vec<Vec<Complex>> = Vec::with_capacity(zeta_samples.len());
    for &zeta in zeta_samples {
        per_zeta.push(eta_coefficients(t, zeta, c));
    }
    let mut a = Vec::with_capacity(k);
    let mut residual = 0.0_f64;
    for i in 1..=k {
        let samples: Vec<(Complex, Complex)> = zeta_samples
            .iter()
            .zip(&per_zeta)
            .map(|(&z, coeffs)| (z, coeffs[k - i]))
            .collect();
        let (ci, res) = poly::fit_least_squares(&samples, 2 * i);
        residual = residual.max(res);
        a.push(ci);
    }
    Ok((SpectralCurvePoly::new(k as u32, a)?, residual))
}

/// -i for anti-hermitian data, 1 for hermitian presentations.
fn presentation_factor(data: &NahmData) -> Complex {
    if data.antihermiticity_defect() <= data.hermiticity_defect() {
        Complex::new(0.0, -1.0)
    } else {
        Complex::new(1.0, 0.0)
    }
}

/// Ascending η coefficients of det(ηI + c·A(ζ)) (length k+1, monic).
fn eta_coefficients(t: &NahmTriple, zeta: Complex, c: Complex) -> Vec<Complex> {
    let a = lax_polynomial(t, zeta) * (-c);
    poly::char_poly(&a)
}

/// Max drift of the spectral coefficients aᵢ(ζ) across the trajectory's z
/// samples, evaluated pointwise at the given ζ values. The flow is
/// isospectral, so this measures integration error.
pub fn conservation_report(data: &NahmData, zeta_samples: &[Complex]) -> Result<f64> {
    if data.samples().is_empty() {
        return Err(Error::Validation("empty trajectory".into()));
    }
    let c = presentation_factor(data);
    let mut worst = 0.0_f64;
    for &zeta in zeta_samples {
        let base = eta_coefficients(&data.samples()[0], zeta, c);
        for t in data.samples().iter().skip(1) {
            let here = eta_coefficients(t, zeta, c);
            for (x, y) in here.iter().zip(&base) {
                worst = worst.max((x - y).norm());
            }
        }
    }
    Ok(worst)
}

// Serialized form: T[sample][component][row][col] = [re, im].
#[derive(Serialize, Deserialize)]
struct TripleWire(Vec<Vec<Vec<[f64; 2]>>>);

impl TripleWire {
    fn pack(t: &NahmTriple) -> Self {
        TripleWire(
            t.iter()
                .map(|m| {
                    (0..m.nrows())
                        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                        .collect()
                })
                .collect(),
        )
    }

    fn unpack(&self, k: usize) -> std::result::Result<NahmTriple, String> {
        if self.0.len() != 3 {
            return Err("triple must have three components".into());
        }
        let mut out = [
            DMatrix::zeros(k, k),
            DMatrix::zeros(k, k),
            DMatrix::zeros(k, k),
        ];
        for (a, rows) in self.0.iter().enumerate() {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(format!("component {a} is not {k}×{k}"));
            }
            for (r, row) in rows.iter().enumerate() {
                for (c, &[re, im]) in row.iter().enumerate() {
                    out[a][(r, c)] = Complex::new(re, im);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct PoleMetaWire {
    left: Option<TripleWire>,
    right: Option<TripleWire>,
}

#[derive(Serialize, Deserialize)]
struct NahmWire {
    k: usize,
    z_samples: Vec<f64>,
    #[serde(rename = "T")]
    t: Vec<TripleWire>,
    pole_meta: Option<PoleMetaWire>,
}

impl Serialize for NahmData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NahmWire {
            k: self.k,
            z_samples: self.z_samples.clone(),
            t: self.t.iter().map(TripleWire::pack).collect(),
            pole_meta: self.pole_meta.as_ref().map(|p| PoleMetaWire {
                left: p.left.as_ref().map(TripleWire::pack),
                right: p.right.as_ref().map(TripleWire::pack),
            }),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NahmData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let wire = NahmWire::deserialize(d)?;
        let t = wire
            .t
            .iter()
            .map(|w| w.unpack(wire.k))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(DeError::custom)?;
        let pole_meta = match wire.pole_meta {
            None => None,
            Some(p) => Some(PoleMeta {
                left: p.left.map(|w| w.unpack(wire.k)).transpose().map_err(DeError::custom)?,
                right: p
                    .right
                    .map(|w| w.unpack(wire.k))
                    .transpose()
                    .map_err(DeError::custom)?,
            }),
        };
        NahmData::new(wire.k, wire.z_samples, t, pole_meta).map_err(DeError::custom)
    }
}
