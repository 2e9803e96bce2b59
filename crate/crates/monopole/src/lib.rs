//! Numerical toolkit for SU(2) magnetic monopoles on ℝ³.
//!
//! The crate provides four layers that build on each other:
//!
//! - [`su2`] and [`fields`]: the su(2) matrix algebra and smooth field
//!   configurations (connection + Higgs field) with gauge-covariant
//!   differential operators,
//! - [`bps`]: the closed-form charge-1 BPS monopole and its energy profile,
//! - [`minitwistor`] and [`scattering`]: oriented lines in ℝ³, the linear
//!   scattering problem along lines, spectral curves, and the Donaldson and
//!   Jarvis rational maps,
//! - [`nahm`] and [`nahm_inverse`]: Nahm matrix data on (-1, 1), its flow,
//!   Lax spectral curve, and the reconstruction of monopole fields from
//!   Nahm data by quadrature of the kernel ODE.
//!
//! Conventions used throughout: su(2) elements are anti-hermitian traceless
//! 2×2 complex matrices over the basis eᵃ = i·τₐ (τₐ the Pauli matrices).
//! Field-level scalars (|Φ|, energy densities, fluxes) use the pairing
//! ⟨a,b⟩ = -2 Re tr(ab), under which the half-basis eᵃ/2 is orthonormal and
//! the charge-1 monopole has |Φ| → 1 and total flux 8π. Lengths are in units
//! of the asymptotic Higgs scale; no physical constants appear anywhere.
//!
//! Numerical building blocks (adaptive Runge-Kutta, Gauss-Legendre rules,
//! complex polynomial fitting) live in [`numeric`] and are deliberately
//! dependency-free so results are reproducible to the last bit for a fixed
//! thread count.

pub mod bps;
pub mod fields;
pub mod minitwistor;
pub mod nahm;
pub mod nahm_inverse;
pub mod numeric;
pub mod scattering;
pub mod su2;
pub mod volume;

/// Complex scalar used everywhere; fields are double precision throughout.
pub type Complex = num_complex::Complex64;
/// 2×2 complex matrix, the concrete carrier of su(2) and SU(2) elements.
pub type CMatrix2 = nalgebra::Matrix2<Complex>;
/// Complex 2-vector, the state of the scattering problem along a line.
pub type CVector2 = nalgebra::Vector2<Complex>;
/// Point of ℝ³.
pub type Point = nalgebra::Vector3<f64>;

/// Errors shared by the numerical layers.
///
/// Variants are grouped by what the caller can do about them: `Validation`
/// means the input violates a documented precondition, `Numeric` means an
/// iteration failed to converge or left its domain of validity, `Io` wraps
/// file and serialization failures from the volume layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violates a documented precondition of the operation.
    #[error("validation: {0}")]
    Validation(String),
    /// A solver or iteration failed to reach its tolerance.
    #[error("numeric: {0}")]
    Numeric(String),
    /// File or serialization failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the command line driver maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Numeric(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
