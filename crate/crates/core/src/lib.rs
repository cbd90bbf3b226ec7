//! Measurement-chain simulator for a projection-noise-limited atom-laser
//! Ramsey interferometer.
//!
//! The crate follows the physical signal path:
//!
//! * [`sideband`]: phase-modulated light, Sagnac-loop interference and the
//!   intensity beat harmonics it produces.
//! * [`raman`]: conversion of a beat harmonic into a two-photon Rabi frequency.
//! * [`ramsey`]: two-level dynamics for square pulses and for atoms falling
//!   through Gaussian light sheets.
//! * [`imaging`]: synthetic absorption images, atom counting, photon shot
//!   noise prediction, cloud fits and thermometry.
//! * [`noise`]: shot-to-shot Monte Carlo, projection-noise theory and Allan
//!   deviation.
//!
//! [`scenario`] and [`io`] provide the file formats used by the `qpn` CLI.

pub mod bessel;
pub mod error;
pub mod imaging;
pub mod io;
pub mod lsq;
pub mod noise;
pub mod raman;
pub mod ramsey;
pub mod scenario;
pub mod sideband;

pub use error::{Error, Result};

/// Physical constants in SI units (CODATA 2018).
pub mod consts {
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Mass of a ⁸⁷Rb atom.
    pub const RB87_MASS: f64 = 1.443_160_648e-25;
    /// Ground-state hyperfine splitting of ⁸⁷Rb in Hz.
    pub const RB87_HYPERFINE_HZ: f64 = 6.834_682_611e9;
    /// D2 line wavelength of ⁸⁷Rb.
    pub const RB87_D2_WAVELENGTH: f64 = 780.241e-9;
    /// D2 natural linewidth of ⁸⁷Rb in Hz (Γ/2π).
    pub const RB87_D2_LINEWIDTH_HZ: f64 = 6.065e6;
    /// Apéry's constant ζ(3).
    pub const ZETA_3: f64 = 1.202_056_903_159_594_3;
    pub const STANDARD_GRAVITY: f64 = 9.81;
}
