//! Exact slot energy and the loss-aware slot recursion.
//!
//! Within a slot the mechanical input power is the first-order step response
//! from `P_prev` toward `P_in`, scaled by the efficiency matching its sign.
//! The energy it leaves at the end of the slot is that power weighted by
//! `exp(-(delta - tau) / t_loss)` and integrated over the slot. Splitting the
//! integral at the zero crossing gives two closed-form pieces:
//!
//! * no crossing: `H = eta_eff * I(delta)`
//! * crossing at `t_change`: `G = eta_in * I(delta) + (eta_prev - eta_in) * I(t_change)`
//!
//! where `I(t)` is the weighted integral of the unscaled filter output from
//! `0` to `t`. Expanding `I` recovers the textbook expressions in `Γ`, `P`
//! and `Q`; keeping it factored lets `I` be evaluated with `expm1`, which
//! avoids cancelling terms of size `P_in * t_loss`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{
    run_decay_recursion, DecayFactor, EnergyTrace, FlywheelParams, PowerProfile, SaturationMode,
    SlotCase, SlotTransition,
};

/// Which closed form produced a [`SlotEnergy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormulaBranch {
    /// Switching slot: efficiency changes at `t_change`.
    GBar,
    /// Every other slot: one efficiency throughout.
    HBar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotEnergy {
    /// Energy added to the store by the end of the slot (J), after losses.
    pub value: f64,
    pub case: SlotCase,
    pub branch: FormulaBranch,
}

/// Precomputed per-parameter constants for repeated slot evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ExactKernel {
    delta: f64,
    t_loss: f64,
    gamma: f64,
    q_coef: f64,
}

impl ExactKernel {
    pub(crate) fn new(params: &FlywheelParams) -> Result<Self> {
        let c = params.coefficients()?;
        Ok(ExactKernel {
            delta: params.delta,
            t_loss: params.t_loss,
            gamma: c.gamma,
            q_coef: c.q_coef,
        })
    }

    /// `∫_0^t [P_in - (P_in - P_prev) e^{-τ/t_cont}] e^{-(δ-τ)/t_loss} dτ`
    #[inline]
    fn weighted_filter_integral(&self, t: f64, p_in: f64, p_prev: f64) -> f64 {
        let step = p_in - p_prev;
        let steady = p_in * self.t_loss * (t / self.t_loss).exp_m1();
        let transient = step * (self.q_coef * t).exp_m1() / self.q_coef;
        self.gamma * (steady - transient)
    }

    #[inline]
    pub(crate) fn slot_energy(&self, p_in: f64, p_prev: f64, tr: &SlotTransition) -> SlotEnergy {
        let full = self.weighted_filter_integral(self.delta, p_in, p_prev);
        match tr.t_change {
            Some(t_change) => {
                let head = self.weighted_filter_integral(t_change, p_in, p_prev);
                SlotEnergy {
                    value: tr.eta_in * full + (tr.eta_prev - tr.eta_in) * head,
                    case: tr.case,
                    branch: FormulaBranch::GBar,
                }
            }
            None => SlotEnergy {
                value: tr.eta_eff * full,
                case: tr.case,
                branch: FormulaBranch::HBar,
            },
        }
    }
}

/// Energy absorbed (positive) or supplied (negative) during a slot commanded
/// at `p_in` after one commanded at `p_prev`, net of losses within the slot.
pub fn slot_energy_exact(p_in: f64, p_prev: f64, params: &FlywheelParams) -> Result<SlotEnergy> {
    let params = params.validate()?;
    let kernel = ExactKernel::new(&params)?;
    Ok(kernel.slot_energy(p_in, p_prev, &params.classify(p_in, p_prev)))
}

/// One slot of the exact recursion, `Γ E_prev + Ē`. No saturation applied.
pub fn step_exact(e_prev: f64, p_in: f64, p_prev: f64, params: &FlywheelParams) -> Result<f64> {
    let params = params.validate()?;
    let kernel = ExactKernel::new(&params)?;
    let slot = kernel.slot_energy(p_in, p_prev, &params.classify(p_in, p_prev));
    Ok(DecayFactor::new(params.delta, params.t_loss).apply(e_prev) + slot.value)
}

/// Slot-boundary trace of the exact model, starting at `e_init`.
pub fn simulate_exact(
    profile: &PowerProfile,
    params: &FlywheelParams,
    mode: SaturationMode,
) -> Result<EnergyTrace> {
    let kernel = ExactKernel::new(&params.validate()?)?;
    run_decay_recursion(profile, params, mode, |p_in, p_prev, tr| {
        kernel.slot_energy(p_in, p_prev, tr).value
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::classify_transition;

    fn params() -> FlywheelParams {
        FlywheelParams {
            t_loss: 10_000.0,
            t_cont: 0.2,
            e_c: 0.9,
            e_d: 0.95,
            e_init: 1e6,
            e_cap: 9e7,
            p_rated: 1e5,
            delta: 300.0,
            p_prev_init: 0.0,
        }
    }

    /// The boxed expressions, transcribed term by term.
    fn textbook_slot_energy(p_in: f64, p_prev: f64, p: &FlywheelParams) -> f64 {
        let c = p.coefficients().unwrap();
        let (g, pc, q) = (c.gamma, c.p_coef, c.q_coef);
        let tr = classify_transition(p_in, p_prev, p.delta, p.t_cont, p.e_c, p.e_d);
        let (ei, ep) = (tr.eta_in, tr.eta_prev);
        let dq = (p.delta * q).exp();
        if tr.case == SlotCase::OppositeSwitch {
            g * (pc * (ep - ei) * p_in * ((p_in - p_prev) / p_in).powf(p.t_cont / p.t_loss)
                + p_in * p.t_loss * (ei / g - ep)
                - (p_in - p_prev) / q * (dq * ei - ep))
        } else {
            g * tr.eta_eff * (p_in * p.t_loss * (1.0 / g - 1.0) - (p_in - p_prev) / q * (dq - 1.0))
        }
    }

    #[test]
    fn zero_input_is_zero() {
        let e = slot_energy_exact(0.0, 0.0, &params()).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.branch, FormulaBranch::HBar);
    }

    #[test]
    fn constant_power_slot() {
        // 0.9 * 1000 * 10000 * (1 - e^{-0.03}), evaluated at 40 digits.
        let expected = 265_990.198_063_426_4;
        for t_cont in [0.05, 0.2, 3.0] {
            let p = FlywheelParams { t_cont, ..params() };
            let e = slot_energy_exact(1000.0, 1000.0, &p).unwrap().value;
            assert!((e - expected).abs() < 1e-8 * expected, "{t_cont}: {e}");
        }
    }

    #[test]
    fn switching_branch_is_tagged() {
        let p = FlywheelParams {
            delta: 1.0,
            ..params()
        };
        let e = slot_energy_exact(5e4, -5e4, &p).unwrap();
        assert_eq!(e.case, SlotCase::OppositeSwitch);
        assert_eq!(e.branch, FormulaBranch::GBar);
    }

    #[test]
    fn textbook_form_agrees() {
        let p = FlywheelParams {
            delta: 1.0,
            ..params()
        };
        for (a, b) in [
            (5e4, -5e4),
            (75.0, -25.0),
            (-3e4, 8e4),
            (1e4, 2e4),
            (0.0, -7e4),
            (6e4, 0.0),
            (1e4, -9e4),
        ] {
            let ours = slot_energy_exact(a, b, &p).unwrap().value;
            let book = textbook_slot_energy(a, b, &p);
            let tol = 1e-7 * ours.abs().max(1.0);
            assert!((ours - book).abs() < tol, "({a}, {b}): {ours} vs {book}");
        }
    }

    #[test]
    fn step_examples() {
        let p = params();
        let e = step_exact(1e6, 0.0, 0.0, &p).unwrap();
        assert!((e - 970_445.533_548_508_2).abs() < 1e-8);
        assert_eq!(step_exact(0.0, 0.0, 0.0, &p).unwrap(), 0.0);

        let mut e = 0.0;
        for _ in 0..2000 {
            e = step_exact(e, 1000.0, 1000.0, &p).unwrap();
        }
        let fixed = 0.9 * 1000.0 * 10_000.0;
        assert!(((e - fixed) / fixed).abs() < 1e-9);
    }

    #[test]
    fn simulate_examples() {
        let p = params();
        let zero = PowerProfile::constant(300.0, 0.0, 10).unwrap();
        let tr = simulate_exact(&zero, &p, SaturationMode::Unconstrained).unwrap();
        assert_eq!(tr.entries.len(), 11);
        assert!((tr.final_energy() - 740_818.220_681_717_9).abs() < 1e-8);

        let p1 = FlywheelParams {
            p_prev_init: 1000.0,
            ..p
        };
        let one = PowerProfile::constant(300.0, 1000.0, 1).unwrap();
        let tr = simulate_exact(&one, &p1, SaturationMode::Unconstrained).unwrap();
        let expected = 970_445.533_548_508_2 + 265_990.198_063_426_4;
        assert!((tr.final_energy() - expected).abs() < 1e-8);
    }

    #[test]
    fn clamp_mode_caps_and_flags() {
        let p = FlywheelParams {
            e_init: 8.9e7,
            ..params()
        };
        let charge = PowerProfile::constant(300.0, 1e5, 20).unwrap();
        let clamped = simulate_exact(&charge, &p, SaturationMode::Clamp).unwrap();
        assert!(clamped.energies().all(|e| (0.0..=p.e_cap).contains(&e)));
        assert!(clamped.saturated.iter().any(|&f| f));
        assert_eq!(clamped.final_energy(), p.e_cap);

        let free = simulate_exact(&charge, &p, SaturationMode::Unconstrained).unwrap();
        assert!(free.final_energy() > p.e_cap);
        assert_eq!(free.saturated, clamped.saturated);

        let p = FlywheelParams {
            e_init: 0.0,
            ..params()
        };
        let drain = PowerProfile::constant(300.0, -1e5, 3).unwrap();
        let free = simulate_exact(&drain, &p, SaturationMode::Unconstrained).unwrap();
        assert!(free.final_energy() < 0.0);
        assert!(free.saturated.iter().all(|&f| f));
        let clamped = simulate_exact(&drain, &p, SaturationMode::Clamp).unwrap();
        assert_eq!(clamped.final_energy(), 0.0);
    }

    #[test]
    fn times_are_slot_multiples() {
        let prof = PowerProfile::new(300.0, vec![1.0, -2.0, 3.0]).unwrap();
        let tr = simulate_exact(&prof, &params(), SaturationMode::Unconstrained).unwrap();
        for (k, e) in tr.entries.iter().enumerate() {
            assert_eq!(e.slot, k);
            assert_eq!(e.time, k as f64 * 300.0);
        }
    }

    #[test]
    fn efficiency_scaling_is_linear() {
        let p = FlywheelParams {
            delta: 1.0,
            ..params()
        };
        let alpha = 0.5;
        let scaled = FlywheelParams {
            e_c: p.e_c * alpha,
            e_d: p.e_d * alpha,
            ..p
        };
        for (a, b) in [(5e4, -5e4), (-2e4, 1e4), (3e4, 3e4), (0.0, 4e4)] {
            let e = slot_energy_exact(a, b, &p).unwrap().value;
            let s = slot_energy_exact(a, b, &scaled).unwrap().value;
            assert!((s - alpha * e).abs() <= 1e-14 * e.abs());
        }
    }
}
