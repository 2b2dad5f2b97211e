//! Colour-centre side: crystal and NV frames, strain projections onto the
//! C₃ᵥ irreducible combinations, and the cooling figures of merit built on
//! the resulting coupling rates.

mod cooling;
mod coupling;
mod orientation;

pub use cooling::{
    collective_rate, cooling_report, cooperativity, coupling_report, ensemble_rate, final_occupation,
    offresonant_cooling_rate, resonant_cooling_rate, rethermalization_rate, thermal_occupation, CoolingInputs,
    CoolingReport, CouplingReport, GammaConvention,
};
pub use coupling::{
    coupling_coefficients, coupling_coefficients_with, coupling_map, couplings_from_strain, invariant_coupling_norm,
    project, static_diagonalize, CouplingRow, CouplingSet, Grid, StaticSplitting, StrainSusceptibilities,
};
pub use orientation::{
    rotation_cryst_to_lab, rotation_cryst_to_nv, rotation_lab_to_nv, transform_strain, x_choices, Mat3, Miller,
    NvOrientation, NV_AXES,
};
