//! Grids, sampled fields, test families and the Fourier bridge.

mod families;
mod field;
mod grid;
pub mod io;
mod params;
mod transform;

pub use families::{radial_window, sample_family, smooth_step, Family};
pub use field::{lp_norm, FieldMeta, SpectralField, VectorField, BOUNDARY_TOLERANCE};
pub use grid::{make_grid, GridSpec};
pub use params::FracParams;
pub use transform::{imaginary_residue, inverse_of, spectrum_of, to_spatial, to_spectral};
pub(crate) use transform::fft_nd;
