//! Shared fixtures for the criterion benches.

use deformed_lindblad::coherent::{alpha_for_mean_n, build_state, to_density};
use deformed_lindblad::{DensityMatrix, MorseParams, StateKind};

pub fn morse15() -> MorseParams {
    MorseParams::with_bound_states(15).expect("valid")
}

/// DOCS with `<n> = 2` for the 15-level Morse model.
pub fn docs_state(params: &MorseParams) -> DensityMatrix {
    let sol = alpha_for_mean_n(2.0, StateKind::Docs, params).expect("attainable");
    to_density(&build_state(StateKind::Docs, sol.alpha, params).expect("valid"))
}
