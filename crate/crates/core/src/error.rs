use thiserror::Error;

/// Errors raised by parameter validation and the numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("efficiency out of range: {name} = {value} is not in (0, 1]")]
    EfficiencyOutOfRange { name: &'static str, value: f64 },

    #[error("initial energy {e_init} J outside [0, {e_cap}] J")]
    InitialEnergyOutOfRange { e_init: f64, e_cap: f64 },

    #[error("coefficient singularity: t_cont = {t_cont} s is too close to t_loss = {t_loss} s")]
    CoefficientSingularity { t_loss: f64, t_cont: f64 },

    #[error("power profile is empty")]
    EmptyProfile,

    #[error("slot {slot}: |{power}| W exceeds rated power {rated} W")]
    PowerExceedsRated { slot: usize, power: f64, rated: f64 },

    #[error("slot {slot}: power {power} is not finite")]
    NonFinitePower { slot: usize, power: f64 },

    #[error("profile slot duration {profile} s does not match parameter slot duration {params} s")]
    SlotDurationMismatch { profile: f64, params: f64 },

    #[error("negative energy {0} J has no corresponding speed")]
    NegativeEnergy(f64),

    #[error(
        "quadrature did not converge: estimate {estimate}, error {error} after {intervals} intervals"
    )]
    QuadratureNotConverged {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
