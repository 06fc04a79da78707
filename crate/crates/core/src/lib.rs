//! State-of-charge evolution for flywheel energy storage driven by slotted,
//! piecewise-constant grid power commands.
//!
//! The stored energy obeys `dE/dt = P_m(t) - E / t_loss`, where the mechanical
//! input power `P_m` is the grid command passed through a first-order
//! controller lag and scaled by the charging or discharging efficiency that
//! matches its sign. Sampled at slot boundaries this becomes the recursion
//! `E(t_k) = Γ E(t_{k-1}) + Ē_k`, with `Γ = exp(-delta / t_loss)`.
//!
//! * [`model`]: parameters, slot classification, `Γ`/`P`/`Q`, traces.
//! * [`exact`]: closed-form `Ē_k` and the exact recursion.
//! * [`approx`]: loss-free slot energy `Ê_k`, its recursion, and the
//!   a-priori error bound between the two.
//! * [`oracle`]: quadrature and RK4 references that share no code with the
//!   closed forms, plus the lossless baseline.
//! * [`cli`]: file formats and subcommands behind the `flywheel-soc` binary.
//!
//! ```
//! use flywheel_soc::{simulate_exact, FlywheelParams, PowerProfile, SaturationMode};
//!
//! let params = FlywheelParams {
//!     t_loss: 10_000.0,
//!     t_cont: 0.2,
//!     e_c: 0.9,
//!     e_d: 0.95,
//!     e_init: 1e6,
//!     e_cap: 9e7,
//!     p_rated: 1e5,
//!     delta: 300.0,
//!     p_prev_init: 0.0,
//! };
//! let idle = PowerProfile::constant(300.0, 0.0, 10)?;
//! let trace = simulate_exact(&idle, &params, SaturationMode::Unconstrained)?;
//! assert!((trace.final_energy() - 1e6 * (-0.3f64).exp()).abs() < 1e-6);
//! # Ok::<(), flywheel_soc::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod cli;
mod error;
pub mod exact;
pub mod model;
pub mod oracle;

pub use approx::{
    bound_from_r_max, check_bound, error_bound, simulate_approx, slot_energy_approx, ApproxMode,
    BoundEntry, BoundReport, BOUND_SLACK_J,
};
pub use error::{Error, Result};
pub use exact::{simulate_exact, slot_energy_exact, step_exact, FormulaBranch, SlotEnergy};
pub use model::{
    classify_transition, coefficients, energy_of_speed, filtered_mech_power, gamma,
    speed_of_energy, t_loss_from_inertia, validate_params, EnergyTrace, FlywheelParams,
    ModelCoefficients, PowerProfile, SaturationMode, SlotCase, SlotTransition, TraceEntry,
};
pub use oracle::{
    integrate_ode, integrate_physical, quadrature_slot_energy, simulate_baseline, OracleConfig,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/approximation.md")]
    mod approximation {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
