//! Brute-force references for the closed forms.
//!
//! Nothing here uses the closed-form slot energies. The quadrature and ODE
//! paths evaluate the mechanical input power pointwise and integrate it
//! numerically; the physical integrator also integrates the filter itself and
//! carries its state across slot boundaries.

pub mod quad;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    efficiency_for, filtered_mech_power, EnergyTrace, FlywheelParams, PowerProfile, SaturationMode,
};
use quad::{integrate, QuadOptions};

/// Width of the post-boundary refinement window, in controller time
/// constants. `exp(-40)` is below `f64` resolution relative to the step.
const TRANSIENT_WINDOW: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Relative tolerance of the adaptive quadrature.
    pub quad_tol: f64,
    /// Absolute tolerance floor of the adaptive quadrature (J).
    pub quad_abs_tol: f64,
    /// RK4 steps per slot.
    pub substeps_per_slot: usize,
    /// Split integration at the zero crossing of the filtered power.
    pub split_at_t_change: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            quad_tol: 1e-12,
            quad_abs_tol: 1e-9,
            substeps_per_slot: 1000,
            split_at_t_change: true,
        }
    }
}

impl OracleConfig {
    pub fn validate(self) -> Result<Self> {
        if !(self.quad_tol > 0.0) || !(self.quad_abs_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "quadrature tolerances must be positive, got {} / {}",
                self.quad_tol, self.quad_abs_tol
            )));
        }
        if self.substeps_per_slot == 0 {
            return Err(Error::InvalidArgument(
                "substeps_per_slot must be at least 1".into(),
            ));
        }
        Ok(self)
    }
}

/// Where the filtered power `P_prev + (P_in - P_prev)(1 - e^{-t/T})` crosses
/// zero inside `(0, delta)`, if it does.
fn zero_crossing(p_in: f64, p_prev: f64, delta: f64, t_cont: f64) -> Option<f64> {
    if p_in == 0.0 || p_prev == 0.0 || p_in.signum() == p_prev.signum() {
        return None;
    }
    // e^{-t/T} = P_in / (P_in - P_prev)
    let t = t_cont * ((p_in - p_prev) / p_in).ln();
    (t > 0.0 && t < delta).then_some(t)
}

/// Adaptive quadrature of the mechanical input power over one slot,
/// optionally weighted by `exp(-(delta - tau) / t_loss)`.
pub fn quadrature_slot_energy(
    p_in: f64,
    p_prev: f64,
    params: &FlywheelParams,
    weighted: bool,
    config: &OracleConfig,
) -> Result<f64> {
    let p = params.validate()?;
    let config = config.validate()?;
    let opts = QuadOptions {
        rel_tol: config.quad_tol,
        abs_tol: config.quad_abs_tol,
        ..QuadOptions::default()
    };
    let mut breaks = Vec::with_capacity(2);
    if config.split_at_t_change {
        breaks.extend(zero_crossing(p_in, p_prev, p.delta, p.t_cont));
    }
    breaks.push((TRANSIENT_WINDOW * p.t_cont).min(p.delta));
    let power = |t: f64| filtered_mech_power(t, p_in, p_prev, p.t_cont, p.e_c, p.e_d);
    let result = if weighted {
        integrate(
            |t| power(t) * (-(p.delta - t) / p.t_loss).exp(),
            0.0,
            p.delta,
            &breaks,
            opts,
        )?
    } else {
        integrate(power, 0.0, p.delta, &breaks, opts)?
    };
    Ok(result.value)
}

/// Cuts `[0, delta]` into fixed-step pieces: a refined window right after the
/// boundary where the filter transient lives, the remainder, and a cut at
/// the zero crossing. Returns `(start, end, steps)`.
fn slot_pieces(
    delta: f64,
    t_cont: f64,
    crossing: Option<f64>,
    substeps: usize,
) -> Vec<(f64, f64, usize)> {
    let window = (TRANSIENT_WINDOW * t_cont).min(delta);
    let regions: &[(f64, f64, usize)] = if window < delta {
        let head = substeps.div_ceil(2);
        &[
            (0.0, window, head),
            (window, delta, (substeps - head).max(1)),
        ]
    } else {
        &[(0.0, delta, substeps)]
    };
    let mut pieces = Vec::with_capacity(4);
    for &(a, b, n) in regions {
        match crossing.filter(|&t| t > a && t < b) {
            Some(t) => {
                let n_left = ((n as f64 * (t - a) / (b - a)).round() as usize).max(1);
                let n_right = n.saturating_sub(n_left).max(1);
                pieces.push((a, t, n_left));
                pieces.push((t, b, n_right));
            }
            None => pieces.push((a, b, n)),
        }
    }
    pieces
}

fn rk4_energy<F: Fn(f64) -> f64>(
    mut e: f64,
    a: f64,
    b: f64,
    steps: usize,
    t_loss: f64,
    power: &F,
) -> f64 {
    let h = (b - a) / steps as f64;
    let rhs = |t: f64, e: f64| power(t) - e / t_loss;
    for i in 0..steps {
        let t = a + i as f64 * h;
        let k1 = rhs(t, e);
        let k2 = rhs(t + 0.5 * h, e + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, e + 0.5 * h * k2);
        let k4 = rhs(t + h, e + h * k3);
        e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    e
}

/// Fixed-step RK4 on `dE/dt = P_m(t) - E / t_loss`, where `P_m` restarts from
/// `P_prev` at every slot boundary. Slot-boundary samples only; never clamped.
pub fn integrate_ode(
    profile: &PowerProfile,
    params: &FlywheelParams,
    config: &OracleConfig,
) -> Result<EnergyTrace> {
    let p = params.validate()?;
    let config = config.validate()?;
    profile.validate_against(&p)?;
    let mut trace = EnergyTrace::with_capacity(p.e_init, profile.len());
    let mut e = p.e_init;
    for (p_in, p_prev) in profile.slot_pairs(p.p_prev_init) {
        let crossing = if config.split_at_t_change {
            zero_crossing(p_in, p_prev, p.delta, p.t_cont)
        } else {
            None
        };
        let power = |t: f64| filtered_mech_power(t, p_in, p_prev, p.t_cont, p.e_c, p.e_d);
        for (a, b, n) in slot_pieces(p.delta, p.t_cont, crossing, config.substeps_per_slot) {
            e = rk4_energy(e, a, b, n, p.t_loss, &power);
        }
        e = trace.push_slot(
            p.delta,
            p.e_cap,
            e,
            p.classify(p_in, p_prev),
            SaturationMode::Unconstrained,
        );
    }
    Ok(trace)
}

/// Energy at `samples + 1` evenly spaced instants across slot `k` (1-based)
/// of the same ODE, starting from `e_start` at the slot's beginning.
pub fn ode_slot_samples(
    e_start: f64,
    p_in: f64,
    p_prev: f64,
    params: &FlywheelParams,
    samples: usize,
    config: &OracleConfig,
) -> Result<Vec<(f64, f64)>> {
    let p = params.validate()?;
    let config = config.validate()?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let power = |t: f64| filtered_mech_power(t, p_in, p_prev, p.t_cont, p.e_c, p.e_d);
    let per_sample = config.substeps_per_slot.div_ceil(samples).max(1);
    let h = p.delta / samples as f64;
    let mut out = Vec::with_capacity(samples + 1);
    let mut e = e_start;
    out.push((0.0, e));
    for i in 0..samples {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let crossing = zero_crossing(p_in, p_prev, p.delta, p.t_cont).filter(|&t| t > a && t < b);
        e = match crossing {
            Some(t) if config.split_at_t_change => {
                let mid = rk4_energy(e, a, t, per_sample, p.t_loss, &power);
                rk4_energy(mid, t, b, per_sample, p.t_loss, &power)
            }
            _ => rk4_energy(e, a, b, per_sample, p.t_loss, &power),
        };
        out.push((b, e));
    }
    Ok(out)
}

/// Joint RK4 on the filter state `y' = (P_in - y) / t_cont` and the stored
/// energy `E' = eta(y) y - E / t_loss`, with `y` carried across slot
/// boundaries and `y(0) = p_prev_init`. Never clamped.
///
/// Steps are capped at `t_cont / 2` to stay inside RK4's stability region for
/// the filter.
pub fn integrate_physical(
    profile: &PowerProfile,
    params: &FlywheelParams,
    config: &OracleConfig,
) -> Result<EnergyTrace> {
    let p = params.validate()?;
    let config = config.validate()?;
    profile.validate_against(&p)?;
    let mut trace = EnergyTrace::with_capacity(p.e_init, profile.len());
    let mut e = p.e_init;
    let mut y = p.p_prev_init;
    let max_step = 0.5 * p.t_cont;
    let rhs = |p_in: f64, y: f64, e: f64| {
        let dy = (p_in - y) / p.t_cont;
        let de = efficiency_for(y, p.e_c, p.e_d) * y - e / p.t_loss;
        (dy, de)
    };
    for (p_in, p_prev) in profile.slot_pairs(p.p_prev_init) {
        // y(t) = P_in + (y0 - P_in) e^{-t/T}; cut where it crosses zero.
        let crossing =
            if config.split_at_t_change && y != 0.0 && p_in != 0.0 && y.signum() != p_in.signum() {
                let t = p.t_cont * ((p_in - y) / p_in).ln();
                (t > 0.0 && t < p.delta).then_some(t)
            } else {
                None
            };
        for (a, b, n) in slot_pieces(p.delta, p.t_cont, crossing, config.substeps_per_slot) {
            let n = n.max(((b - a) / max_step).ceil() as usize);
            let h = (b - a) / n as f64;
            for _ in 0..n {
                let (y1, e1) = rhs(p_in, y, e);
                let (y2, e2) = rhs(p_in, y + 0.5 * h * y1, e + 0.5 * h * e1);
                let (y3, e3) = rhs(p_in, y + 0.5 * h * y2, e + 0.5 * h * e2);
                let (y4, e4) = rhs(p_in, y + h * y3, e + h * e3);
                y += h / 6.0 * (y1 + 2.0 * y2 + 2.0 * y3 + y4);
                e += h / 6.0 * (e1 + 2.0 * e2 + 2.0 * e3 + e4);
            }
        }
        e = trace.push_slot(
            p.delta,
            p.e_cap,
            e,
            p.classify(p_in, p_prev),
            SaturationMode::Unconstrained,
        );
    }
    Ok(trace)
}

/// Lossless, filterless accumulation `E_k = E_{k-1} + eta(P_in) P_in delta`.
pub fn simulate_baseline(
    profile: &PowerProfile,
    params: &FlywheelParams,
    mode: SaturationMode,
) -> Result<EnergyTrace> {
    let p = params.validate()?;
    profile.validate_against(&p)?;
    let mut trace = EnergyTrace::with_capacity(p.e_init, profile.len());
    let mut e = p.e_init;
    for (p_in, p_prev) in profile.slot_pairs(p.p_prev_init) {
        let next = e + efficiency_for(p_in, p.e_c, p.e_d) * p_in * p.delta;
        e = trace.push_slot(p.delta, p.e_cap, next, p.classify(p_in, p_prev), mode);
    }
    Ok(trace)
}
