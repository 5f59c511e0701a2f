//! Spatial extremal processes `W_λ + g` on box domains.
//!
//! The crate covers four things:
//!
//! * [`field`]: scalar fields on a cell grid and the [`MeasureTable`] that
//!   carries the normalized rate measure, the level CDF `H` and its running
//!   integral `I`.
//! * [`sampler`]: the discrete processes `f_n`, the i.i.d. construction of
//!   `W_λ + g`, and an exact record sampler for the first `k` argmins.
//! * [`density`]: closed-form evaluation of the `Φ`/`Ψ` kernels and the
//!   argmin densities built from them.
//! * [`verify`]: goodness-of-fit statistics used to check simulation
//!   against the analytic side.
//!
//! Everything is `no_std` with `alloc`. IO, configuration and parallel
//! replicate runners live in the `extremal` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod density;
pub mod domain;
pub mod error;
pub mod field;
pub mod kargmin;
pub mod quad;
pub mod sampler;
pub mod special;
pub mod verify;

pub use density::{
    closed_form_rho_delta, eval_phi, eval_psi, joint_density_k, joint_density_k_mc,
    marginal_argmin_density, min_value_density, printed_rho_delta, DensityGrid, DensityKind,
    MinValueDensity, ShiftedOffset,
};
pub use domain::{AxisBox, BoxDomain, Point};
pub use error::{Error, Result};
pub use field::{build_measure_table, MeasureTable, Polynomial, ScalarField};
pub use kargmin::{extract_k_argmins, KArgmin, KArgminRecord};
pub use sampler::{
    sample_fn, sample_w_construction_a, sample_w_records, CdfTable, ConstructionA,
    DiscreteProcess, NoiseSpec, RecordSampler, RngSeed, SampleFunction,
};
pub use verify::{
    histogram_vs_cdf, histogram_vs_density, independence_check, ks_exponential, ks_two_sample, TestReport,
};
