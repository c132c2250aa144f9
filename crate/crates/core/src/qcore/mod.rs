//! Qubit linear algebra in the polarization basis `(H, V)`.

mod optics;
mod state;
mod unitary;

pub use optics::{
    estimated_state, jones_matrix, prepare_state, stack_unitary, PreparationSetting, Waveplate,
    WaveplateStack, HALF_WAVE, QUARTER_WAVE,
};
pub use state::{
    haar_random_state, infidelity, stokes_infidelity, to_stokes, PureState, StokesVector,
};
pub use unitary::Unitary2;

pub use num_complex::Complex64;
