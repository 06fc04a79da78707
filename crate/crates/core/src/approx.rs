//! Approximate slot energy that ignores losses inside the slot, and the
//! a-priori bound on how far the resulting trace drifts from the exact one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::simulate_exact;
use crate::model::{
    run_decay_recursion, EnergyTrace, FlywheelParams, PowerProfile, SaturationMode, SlotTransition,
};

/// Absolute slack (J) when comparing a gap against its bound.
pub const BOUND_SLACK_J: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ApproxMode {
    /// Keeps the `exp(-delta / t_cont)` terms.
    Full,
    /// Drops the `exp(-delta / t_cont)` terms, valid for `delta >> t_cont`.
    #[default]
    Truncated,
}

/// Unweighted integral of the mechanical input power over one slot.
#[inline]
pub(crate) fn approx_slot_energy_classified(
    p_in: f64,
    p_prev: f64,
    delta: f64,
    t_cont: f64,
    tr: &SlotTransition,
    mode: ApproxMode,
) -> f64 {
    let step = p_in - p_prev;
    let tail = match mode {
        ApproxMode::Full => (-delta / t_cont).exp(),
        ApproxMode::Truncated => 0.0,
    };
    match tr.t_change {
        Some(t_change) => {
            tr.eta_prev * (p_in * t_change + p_prev * t_cont)
                + tr.eta_in * (p_in * (delta - t_change - t_cont) + step * t_cont * tail)
        }
        // P_in (δ - T) + P_prev T, written so a constant command gives η P δ exactly.
        None => tr.eta_eff * (p_in * delta - step * t_cont * (1.0 - tail)),
    }
}

/// Approximate energy absorbed during a slot commanded at `p_in` after one
/// commanded at `p_prev`.
pub fn slot_energy_approx(
    p_in: f64,
    p_prev: f64,
    params: &FlywheelParams,
    mode: ApproxMode,
) -> Result<f64> {
    let params = params.validate()?;
    let tr = params.classify(p_in, p_prev);
    Ok(approx_slot_energy_classified(
        p_in,
        p_prev,
        params.delta,
        params.t_cont,
        &tr,
        mode,
    ))
}

/// Slot-boundary trace of the approximate recursion.
pub fn simulate_approx(
    profile: &PowerProfile,
    params: &FlywheelParams,
    mode: ApproxMode,
    saturation: SaturationMode,
) -> Result<EnergyTrace> {
    let (delta, t_cont) = (params.delta, params.t_cont);
    run_decay_recursion(profile, params, saturation, |p_in, p_prev, tr| {
        approx_slot_energy_classified(p_in, p_prev, delta, t_cont, tr, mode)
    })
}

/// `(1 - exp(-(k + 1) delta / t_loss)) * r_max * delta`.
pub fn bound_from_r_max(k: usize, delta: f64, t_loss: f64, r_max: f64) -> f64 {
    -((k as f64 + 1.0) * (-delta / t_loss)).exp_m1() * r_max * delta
}

/// Bound on `|E(t_k) - E_app(t_k)|` with `R_max = e_d * max |P_in|` over
/// slots `1..=k`.
///
/// The bound assumes the filter at `t = 0` carries no more power than the
/// horizon maximum; [`check_bound`] folds `p_prev_init` in for you.
pub fn error_bound(
    k: usize,
    delta: f64,
    t_loss: f64,
    profile: &PowerProfile,
    e_d: f64,
) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::EmptyProfile);
    }
    if k > profile.len() {
        return Err(Error::InvalidArgument(format!(
            "slot {k} beyond profile of {} slots",
            profile.len()
        )));
    }
    let r_max = e_d * profile.max_abs_power_through(k);
    Ok(bound_from_r_max(k, delta, t_loss, r_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub slot: usize,
    /// `|E(t_k) - E_app(t_k)|` (J).
    pub gap: f64,
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mode: ApproxMode,
    pub entries: Vec<BoundEntry>,
    /// `e_d` times the largest commanded power magnitude, including the
    /// power assumed before `t = 0` (W).
    pub r_max: f64,
    /// `r_max * delta`, the limit of the bound as `k` grows (J).
    pub asymptotic_bound: f64,
}

impl BoundReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn violations(&self) -> impl Iterator<Item = &BoundEntry> {
        self.entries.iter().filter(|e| !e.satisfied)
    }

    pub fn max_gap(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.gap))
    }
}

/// Compares an approximate trace against the exact one slot by slot.
///
/// Both traces must be unconstrained; clamping breaks the superposition the
/// bound relies on.
pub fn bound_report_for(
    exact: &EnergyTrace,
    approx: &EnergyTrace,
    profile: &PowerProfile,
    params: &FlywheelParams,
    mode: ApproxMode,
) -> Result<BoundReport> {
    if exact.entries.len() != approx.entries.len() || exact.entries.len() != profile.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "trace lengths {} and {} do not match a profile of {} slots",
            exact.entries.len(),
            approx.entries.len(),
            profile.len()
        )));
    }
    let mut running_max = params.p_prev_init.abs();
    let mut entries = Vec::with_capacity(exact.entries.len());
    for (k, (e, a)) in exact.entries.iter().zip(&approx.entries).enumerate() {
        if k > 0 {
            running_max = running_max.max(profile.powers[k - 1].abs());
        }
        let gap = (e.energy - a.energy).abs();
        let bound = bound_from_r_max(k, params.delta, params.t_loss, params.e_d * running_max);
        entries.push(BoundEntry {
            slot: k,
            gap,
            bound,
            // NaN gaps fail
            satisfied: gap <= bound + BOUND_SLACK_J,
        });
    }
    let r_max = params.e_d * running_max;
    Ok(BoundReport {
        mode,
        entries,
        r_max,
        asymptotic_bound: r_max * params.delta,
    })
}

/// Runs both recursions unconstrained and checks every slot against the bound.
pub fn check_bound(
    profile: &PowerProfile,
    params: &FlywheelParams,
    mode: ApproxMode,
) -> Result<BoundReport> {
    let (exact, approx) = rayon::join(
        || simulate_exact(profile, params, SaturationMode::Unconstrained),
        || simulate_approx(profile, params, mode, SaturationMode::Unconstrained),
    );
    bound_report_for(&exact?, &approx?, profile, params, mode)
}
