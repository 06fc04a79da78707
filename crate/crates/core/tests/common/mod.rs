//! Random parameter and profile generators shared by the integration tests.
#![allow(dead_code)]

use flywheel_soc::{FlywheelParams, PowerProfile, SlotCase};
use rand::Rng;

pub const P_RATED: f64 = 1e5;

pub fn reference_params() -> FlywheelParams {
    FlywheelParams {
        t_loss: 10_000.0,
        t_cont: 0.2,
        e_c: 0.9,
        e_d: 0.95,
        e_init: 5e7,
        e_cap: 9e7,
        p_rated: P_RATED,
        delta: 300.0,
        p_prev_init: 0.0,
    }
}

/// Parameters drawn from the sweep ranges; `delta` from `delta_range`.
pub fn random_params<R: Rng>(rng: &mut R, delta_range: (f64, f64)) -> FlywheelParams {
    FlywheelParams {
        t_loss: rng.gen_range(1e3..=1e5),
        t_cont: rng.gen_range(0.05..=0.4),
        e_c: rng.gen_range(0.85..1.0),
        e_d: rng.gen_range(0.85..1.0),
        e_init: rng.gen_range(0.0..=5e7),
        e_cap: 1e9,
        p_rated: P_RATED,
        delta: rng.gen_range(delta_range.0..=delta_range.1),
        p_prev_init: 0.0,
    }
}

pub fn random_power<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(-P_RATED..=P_RATED)
}

/// Uniform powers with roughly one slot in ten idle.
pub fn random_profile<R: Rng>(rng: &mut R, delta: f64, slots: usize) -> PowerProfile {
    let powers = (0..slots)
        .map(|_| {
            if rng.gen_bool(0.1) {
                0.0
            } else {
                random_power(rng)
            }
        })
        .collect();
    PowerProfile::new(delta, powers).unwrap()
}

fn nonzero_power<R: Rng>(rng: &mut R) -> f64 {
    let magnitude = rng.gen_range(1.0..=P_RATED);
    if rng.gen_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

/// A slot tuple `(params, p_in, p_prev)` whose classification is `case`.
///
/// Non-switching opposite-sign slots need `|P_in|` below a fraction
/// `exp(-delta / t_cont)` of `|P_prev|`, so that case draws `delta` from the
/// short end of the range.
pub fn tuple_for_case<R: Rng>(rng: &mut R, case: SlotCase) -> (FlywheelParams, f64, f64) {
    loop {
        let mut params = random_params(rng, (1.0, 900.0));
        let p_prev = nonzero_power(rng);
        let (p_in, p_prev) = match case {
            SlotCase::ZeroIn => (0.0, p_prev),
            SlotCase::ZeroPrev => (p_prev, 0.0),
            SlotCase::SameSign => (p_prev.signum() * rng.gen_range(1.0..=P_RATED), p_prev),
            SlotCase::OppositeSwitch => (-p_prev.signum() * rng.gen_range(1.0..=P_RATED), p_prev),
            SlotCase::OppositeNoSwitch => {
                params.delta = rng.gen_range(1.0..=5.0);
                let r_star = (-params.delta / params.t_cont).exp();
                let ratio = r_star * rng.gen_range(0.01..1.0);
                (-ratio * p_prev / (1.0 - ratio), p_prev)
            }
        };
        if params.classify(p_in, p_prev).case == case {
            return (params, p_in, p_prev);
        }
    }
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}
