//! The closed-form charge-1 BPS monopole and its radial profiles.
//!
//! With φ(r) = coth r - 1/r and a(r) = 1/sinh r - 1/r, the fields
//!
//! Φ(x)  = ½ φ(r)/r · xᵃ eᵃ,
//! A_j(x) = ½ a(r)/r · ε_jab x_a e^b,
//!
//! solve F_ij = ε_ijk ∇ₖΦ exactly, with |Φ| = φ(r) under the field pairing,
//! so |Φ| → 1 - 1/r and the Higgs field vanishes at the centre. All profile
//! functions switch to truncated Taylor series below `R_SERIES` where the
//! closed forms lose digits to cancellation; the series coefficients are
//! exact rationals.

use crate::fields::FieldConfiguration;
use crate::{su2, CMatrix2, Complex, Point};

/// Switchover radius between closed hyperbolic forms and Taylor series.
pub const R_SERIES: f64 = 1e-3;

/// Wider switchover for the slope helpers: their closed forms divide a
/// doubly-cancelled difference by r², losing ~1e-16/r⁴ in absolute terms,
/// while the series tail at 0.05 is below 1e-14.
const R_SERIES_SLOPE: f64 = 5e-2;

/// Higgs profile φ(r) = coth r - 1/r; equals |Φ| at radius r.
pub fn higgs_profile(r: f64) -> f64 {
    if r < R_SERIES {
        r * (1.0 / 3.0 + r * r * (-1.0 / 45.0 + r * r * (2.0 / 945.0 - r * r / 4725.0)))
    } else {
        1.0 / r.tanh() - 1.0 / r
    }
}

/// Connection profile a(r) = 1/sinh r - 1/r.
pub fn connection_profile(r: f64) -> f64 {
    if r < R_SERIES {
        r * (-1.0 / 6.0 + r * r * (7.0 / 360.0 + r * r * (-31.0 / 15120.0 + r * r * 127.0 / 604800.0)))
    } else {
        1.0 / r.sinh() - 1.0 / r
    }
}

/// φ(r)/r, smooth and even through the origin (→ 1/3).
pub fn higgs_coeff(r: f64) -> f64 {
    if r < R_SERIES {
        let q = r * r;
        1.0 / 3.0 + q * (-1.0 / 45.0 + q * (2.0 / 945.0 + q * (-1.0 / 4725.0 + q * 2.0 / 93555.0)))
    } else {
        higgs_profile(r) / r
    }
}

/// (d/dr of [`higgs_coeff`]) / r, smooth and even (→ -2/45).
pub fn higgs_coeff_slope(r: f64) -> f64 {
    if r < R_SERIES_SLOPE {
        let q = r * r;
        -2.0 / 45.0
            + q * (8.0 / 945.0
                + q * (-2.0 / 1575.0 + q * (16.0 / 93555.0 - q * 2764.0 / 127702575.0)))
    } else {
        // b' = (φ' - b)/r with φ' = 1/r² - 1/sinh²r, then divide by r again.
        let b = higgs_coeff(r);
        let s = r.sinh();
        let dphi = 1.0 / (r * r) - 1.0 / (s * s);
        (dphi - b) / (r * r)
    }
}

/// a(r)/r, smooth and even (→ -1/6).
pub fn connection_coeff(r: f64) -> f64 {
    if r < R_SERIES {
        let q = r * r;
        -1.0 / 6.0
            + q * (7.0 / 360.0 + q * (-31.0 / 15120.0 + q * (127.0 / 604800.0 - q * 73.0 / 3421440.0)))
    } else {
        connection_profile(r) / r
    }
}

/// (d/dr of [`connection_coeff`]) / r, smooth and even (→ 7/180).
pub fn connection_coeff_slope(r: f64) -> f64 {
    if r < R_SERIES_SLOPE {
        let q = r * r;
        7.0 / 180.0
            + q * (-31.0 / 3780.0
                + q * (127.0 / 100800.0 + q * (-73.0 / 427680.0 + q * 1414477.0 / 65383718400.0)))
    } else {
        let c = connection_coeff(r);
        let s = r.sinh();
        let da = 1.0 / (r * r) - r.cosh() / (s * s);
        (da - c) / (r * r)
    }
}

/// Closed-form Laplacian-normalized energy density Δ|Φ|² of the charge-1
/// monopole, a function of the radius alone. Peaks at 2/3 at the centre and
/// integrates to 8π.
pub fn energy_density_closed(r: f64) -> f64 {
    if r < 5e-2 {
        // Cancellation between the 1/r⁴ terms costs ~8 digits here; the
        // series is exact to well below 1e-12 in this range.
        let q = r * r;
        2.0 / 3.0 + q * (-8.0 / 27.0 + q * (2.0 / 25.0 + q * (-16.0 / 945.0 + q * 2764.0 / 893025.0)))
    } else {
        let t = r.tanh();
        6.0 / t.powi(4) - 8.0 / (t * t) + 2.0 + 2.0 / r.powi(4) - 8.0 / (r * t.powi(3))
            + 8.0 / (r * t)
    }
}

/// The charge-1 monopole centred at `p`, with analytic derivatives.
pub fn bps(p: Point) -> FieldConfiguration {
    let e = su2::basis();
    let higgs = move |x: &Point| -> CMatrix2 {
        let d = x - p;
        let b = higgs_coeff(d.norm());
        let mut m = CMatrix2::zeros();
        for a in 0..3 {
            m += e[a] * Complex::new(0.5 * b * d[a], 0.0);
        }
        m
    };
    let connection = move |x: &Point| -> [CMatrix2; 3] {
        let d = x - p;
        let c = connection_coeff(d.norm());
        let mut out = [CMatrix2::zeros(); 3];
        for j in 0..3 {
            let a = (j + 1) % 3;
            let b = (j + 2) % 3;
            // ε_jab x_a e^b over the two nonzero index pairs
            out[j] = e[b] * Complex::new(0.5 * c * d[a], 0.0)
                - e[a] * Complex::new(0.5 * c * d[b], 0.0);
        }
        out
    };
    let d_higgs = move |x: &Point| -> [CMatrix2; 3] {
        let d = x - p;
        let r = d.norm();
        let b = higgs_coeff(r);
        let s = higgs_coeff_slope(r);
        let mut out = [CMatrix2::zeros(); 3];
        for j in 0..3 {
            let mut m = e[j] * Complex::new(0.5 * b, 0.0);
            for a in 0..3 {
                m += e[a] * Complex::new(0.5 * s * d[j] * d[a], 0.0);
            }
            out[j] = m;
        }
        out
    };
    let d_connection = move |x: &Point| -> [[CMatrix2; 3]; 3] {
        let d = x - p;
        let r = d.norm();
        let c = connection_coeff(r);
        let s = connection_coeff_slope(r);
        let mut out = [[CMatrix2::zeros(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let a = (j + 1) % 3;
                let b = (j + 2) % 3;
                let mut m = (e[b] * Complex::new(d[a], 0.0) - e[a] * Complex::new(d[b], 0.0))
                    * Complex::new(0.5 * s * d[i], 0.0);
                if i == a {
                    m += e[b] * Complex::new(0.5 * c, 0.0);
                }
                if i == b {
                    m -= e[a] * Complex::new(0.5 * c, 0.0);
                }
                out[i][j] = m;
            }
        }
        out
    };
    FieldConfiguration::new(1, higgs, connection).with_derivatives(d_higgs, d_connection)
}
