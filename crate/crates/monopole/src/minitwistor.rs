//! Oriented lines in ℝ³, their minitwistor coordinates (η, ζ), and
//! polynomial spectral curves in those coordinates.
//!
//! A line is (u, v) with |u| = 1 and u·v = 0; points are v + t·u. In the
//! chart excluding u = ê₃, the direction maps to ζ = (u¹+iu²)/(1-u³) by
//! stereographic projection and the moment to η = (v¹+iv²) + 2v³ζ +
//! (-v¹+iv²)ζ². η is constant along the line, so (η, ζ) are coordinates on
//! the space of oriented lines. Orientation reversal acts as the real
//! structure τ(η, ζ) = (-η̄/ζ̄², -1/ζ̄).

use crate::{Complex, Error, Point, Result};
use serde::{Deserialize, Serialize};

/// Tolerance on the unit-direction and orthogonality invariants.
const LINE_TOL: f64 = 1e-12;

/// Oriented line { v + t·u } with unit direction `u` and moment `v ⊥ u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedLine {
    u: Point,
    v: Point,
}

impl OrientedLine {
    /// Validates the invariants |u| = 1 and u·v = 0 to 1e-12.
    pub fn new(u: Point, v: Point) -> Result<Self> {
        if (u.norm() - 1.0).abs() > LINE_TOL {
            return Err(Error::Validation(format!(
                "direction is not unit: |u| = {}",
                u.norm()
            )));
        }
        if u.dot(&v).abs() > LINE_TOL {
            return Err(Error::Validation(format!(
                "moment not orthogonal to direction: u·v = {}",
                u.dot(&v)
            )));
        }
        Ok(OrientedLine { u, v })
    }

    /// Line through `x` in direction `u` (need not be normalized).
    pub fn through(u: Point, x: Point) -> Result<Self> {
        let n = u.norm();
        if n < 1e-12 {
            return Err(Error::Validation("direction vector is zero".into()));
        }
        let u = u / n;
        let v = x - u * x.dot(&u);
        // Re-orthogonalize once; the subtraction can leave ~1e-16 dust.
        let v = v - u * v.dot(&u);
        OrientedLine::new(u, v)
    }

    pub fn direction(&self) -> Point {
        self.u
    }

    pub fn moment(&self) -> Point {
        self.v
    }

    pub fn point_at(&self, t: f64) -> Point {
        self.v + self.u * t
    }

    /// Same support, opposite orientation.
    pub fn reverse(&self) -> OrientedLine {
        OrientedLine {
            u: -self.u,
            v: self.v,
        }
    }

    /// Euclidean distance from the line to `p`.
    pub fn distance_to(&self, p: &Point) -> f64 {
        let d = p - self.v;
        (d - self.u * d.dot(&self.u)).norm()
    }

    /// Parameter of the orthogonal foot of `p` on the line.
    pub fn foot_parameter(&self, p: &Point) -> f64 {
        (p - self.v).dot(&self.u)
    }

    /// Minitwistor coordinates; errors for directions at (or within 1e-9
    /// of) the excluded chart point ê₃.
    pub fn to_twistor(&self) -> Result<TwistorCoord> {
        let denom = 1.0 - self.u[2];
        if denom < 1e-9 {
            return Err(Error::Validation(
                "direction too close to ê₃: not covered by this chart".into(),
            ));
        }
        let zeta = Complex::new(self.u[0], self.u[1]) / denom;
        Ok(TwistorCoord {
            eta: eta_of_point(&self.v, zeta),
            zeta,
        })
    }
}

/// Unit direction for the chart coordinate ζ (inverse stereographic
/// projection; ζ = 0 is -ê₃, |ζ| → ∞ approaches ê₃).
pub fn direction_of(zeta: Complex) -> Point {
    let n = zeta.norm_sqr();
    let s = 1.0 + n;
    Point::new(2.0 * zeta.re / s, 2.0 * zeta.im / s, (n - 1.0) / s)
}

/// η of the line through `x` with direction ζ:
/// (x¹+ix²) + 2x³ζ + (-x¹+ix²)ζ². Constant along the line.
pub fn eta_of_point(x: &Point, zeta: Complex) -> Complex {
    let xp = Complex::new(x[0], x[1]);
    let xm = Complex::new(-x[0], x[1]);
    xp + 2.0 * x[2] * zeta + xm * zeta * zeta
}

/// Minitwistor coordinates of an oriented line in the ζ chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistorCoord {
    pub eta: Complex,
    pub zeta: Complex,
}

impl TwistorCoord {
    /// The oriented line with these coordinates.
    ///
    /// The moment is recovered from Re η, Im η and u·v = 0 by a 3×3 real
    /// solve; the system is regular for every finite ζ.
    pub fn to_line(&self) -> OrientedLine {
        let u = direction_of(self.zeta);
        let z2 = self.zeta * self.zeta;
        // η = v¹(1-ζ²) + v²·i(1+ζ²) + v³·2ζ
        let c1 = Complex::new(1.0, 0.0) - z2;
        let c2 = Complex::new(0.0, 1.0) * (Complex::new(1.0, 0.0) + z2);
        let c3 = 2.0 * self.zeta;
        let m = nalgebra::Matrix3::new(
            c1.re, c2.re, c3.re, //
            c1.im, c2.im, c3.im, //
            u[0], u[1], u[2],
        );
        let rhs = nalgebra::Vector3::new(self.eta.re, self.eta.im, 0.0);
        let v = m.lu().solve(&rhs).expect("moment system is regular for finite ζ");
        OrientedLine {
            u,
            v: Point::new(v[0], v[1], v[2]),
        }
    }

    /// Real structure τ(η, ζ) = (-η̄/ζ̄², -1/ζ̄), the coordinate form of
    /// orientation reversal. Errors at the chart pole ζ = 0.
    pub fn real_structure(&self) -> Result<TwistorCoord> {
        if self.zeta.norm() < 1e-14 {
            return Err(Error::Validation(
                "real structure has a pole at ζ = 0 in this chart".into(),
            ));
        }
        let zc = self.zeta.conj();
        Ok(TwistorCoord {
            eta: -self.eta.conj() / (zc * zc),
            zeta: -1.0 / zc,
        })
    }
}

/// Mean of lines sharing a direction; errors if the directions differ by
/// more than 1e-10.
pub fn average_lines(lines: &[OrientedLine]) -> Result<OrientedLine> {
    let first = lines
        .first()
        .ok_or_else(|| Error::Validation("cannot average zero lines".into()))?;
    let u = first.u;
    let mut v = Point::zeros();
    for l in lines {
        if (l.u - u).norm() > 1e-10 {
            return Err(Error::Validation(
                "lines do not share a common direction".into(),
            ));
        }
        v += l.v;
    }
    v /= lines.len() as f64;
    let v = v - u * v.dot(&u);
    OrientedLine::new(u, v)
}

/// Spectral curve polynomial ηᵏ + a₁(ζ)η^(k-1) + … + a_k(ζ) = 0 with
/// deg aᵢ ≤ 2i.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCurvePoly {
    k: u32,
    /// a[i] holds the 2(i+1)+1 ascending ζ coefficients of a_{i+1}.
    a: Vec<Vec<Complex>>,
}

impl SpectralCurvePoly {
    pub fn new(k: u32, a: Vec<Vec<Complex>>) -> Result<Self> {
        if a.len() != k as usize {
            return Err(Error::Validation(format!(
                "expected {k} coefficient polynomials, got {}",
                a.len()
            )));
        }
        for (i, ai) in a.iter().enumerate() {
            let want = 2 * (i + 1) + 1;
            if ai.len() != want {
                return Err(Error::Validation(format!(
                    "a_{} must have {want} coefficients (degree ≤ {}), got {}",
                    i + 1,
                    want - 1,
                    ai.len()
                )));
            }
        }
        Ok(SpectralCurvePoly { k, a })
    }

    pub fn charge(&self) -> u32 {
        self.k
    }

    /// Ascending ζ coefficients of a_i for i in 1..=k.
    pub fn coefficient_poly(&self, i: usize) -> &[Complex] {
        &self.a[i - 1]
    }

    /// Ascending η coefficients [a_k(ζ), …, a₁(ζ), 1] at fixed ζ.
    pub fn eta_polynomial(&self, zeta: Complex) -> Vec<Complex> {
        let mut out = Vec::with_capacity(self.k as usize + 1);
        for i in (1..=self.k as usize).rev() {
            out.push(crate::numeric::poly::eval(&self.a[i - 1], zeta));
        }
        out.push(Complex::new(1.0, 0.0));
        out
    }

    /// Max deviation of the coefficients from the τ-reality constraint
    /// aᵢ(ζ) = (-1)ⁱ ζ²ⁱ conj(aᵢ(-1/ζ̄)), i.e. c_m = (-1)^(i+m) c̄_(2i-m).
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (idx, c) in self.a.iter().enumerate() {
            let i = idx + 1;
            let deg = 2 * i;
            for m in 0..=deg {
                let sign = if (i + m) % 2 == 0 { 1.0 } else { -1.0 };
                let want = c[deg - m].conj() * sign;
                worst = worst.max((c[m] - want).norm());
            }
        }
        worst
    }

    /// Monopole centre read off a₁ = -k·η_p; requires the reality defect to
    /// be below `tol`.
    pub fn centre(&self, tol: f64) -> Result<Point> {
        let defect = self.reality_defect();
        if defect > tol {
            return Err(Error::Validation(format!(
                "curve is not real: defect {defect:.3e} exceeds {tol:.3e}"
            )));
        }
        let a1 = &self.a[0];
        let k = self.k as f64;
        let w0 = -a1[0] / k;
        let w1 = -a1[1] / k;
        let w2 = -a1[2] / k;
        Ok(Point::new(
            0.5 * (w0 - w2).re,
            0.5 * (w0 + w2).im,
            0.5 * w1.re,
        ))
    }
}

/// Serialized form: coefficients as [re, im] pairs in ascending ζ powers.
#[derive(Serialize, Deserialize)]
struct CurveWire {
    k: u32,
    a: Vec<Vec<[f64; 2]>>,
}

impl Serialize for SpectralCurvePoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CurveWire {
            k: self.k,
            a: self
                .a
                .iter()
                .map(|ai| ai.iter().map(|c| [c.re, c.im]).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralCurvePoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = CurveWire::deserialize(d)?;
        let a = wire
            .a
            .into_iter()
            .map(|ai| ai.into_iter().map(|[re, im]| Complex::new(re, im)).collect())
            .collect();
        SpectralCurvePoly::new(wire.k, a).map_err(serde::de::Error::custom)
    }
}
