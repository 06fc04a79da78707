//! Domain types and the closed-form building blocks shared by every engine.
//!
//! All quantities are SI: watts, joules, seconds. Powers are grid-side
//! commands; positive charges the flywheel, negative discharges it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative distance `|t_cont - t_loss| / t_loss` below which the `P` and `Q`
/// coefficients are treated as singular.
pub const SINGULARITY_TOLERANCE: f64 = 1e-9;

/// Physical and model constants of one flywheel installation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlywheelParams {
    /// Self-discharge time constant (s).
    pub t_loss: f64,
    /// Time constant of the power controller and machine (s).
    pub t_cont: f64,
    /// Charging efficiency.
    pub e_c: f64,
    /// Discharging efficiency.
    pub e_d: f64,
    /// Stored energy at `t = 0` (J).
    pub e_init: f64,
    /// Storage capacity (J).
    pub e_cap: f64,
    /// Rated power magnitude (W).
    pub p_rated: f64,
    /// Slot duration (s).
    pub delta: f64,
    /// Grid power assumed to have been applied before `t = 0` (W).
    pub p_prev_init: f64,
}

impl FlywheelParams {
    /// Checks every parameter constraint and returns the parameters unchanged.
    pub fn validate(self) -> Result<Self> {
        let fields = [
            ("t_loss", self.t_loss),
            ("t_cont", self.t_cont),
            ("e_c", self.e_c),
            ("e_d", self.e_d),
            ("e_init", self.e_init),
            ("e_cap", self.e_cap),
            ("p_rated", self.p_rated),
            ("delta", self.delta),
            ("p_prev_init", self.p_prev_init),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::NonFinite { name, value });
            }
        }
        for (name, value) in [
            ("t_loss", self.t_loss),
            ("t_cont", self.t_cont),
            ("delta", self.delta),
            ("e_cap", self.e_cap),
            ("p_rated", self.p_rated),
        ] {
            if value <= 0.0 {
                return Err(Error::NonPositive { name, value });
            }
        }
        for (name, value) in [("e_c", self.e_c), ("e_d", self.e_d)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::EfficiencyOutOfRange { name, value });
            }
        }
        if self.e_init < 0.0 || self.e_init > self.e_cap {
            return Err(Error::InitialEnergyOutOfRange {
                e_init: self.e_init,
                e_cap: self.e_cap,
            });
        }
        if ((self.t_cont - self.t_loss) / self.t_loss).abs() <= SINGULARITY_TOLERANCE {
            return Err(Error::CoefficientSingularity {
                t_loss: self.t_loss,
                t_cont: self.t_cont,
            });
        }
        if self.p_prev_init.abs() > self.p_rated {
            return Err(Error::PowerExceedsRated {
                slot: 0,
                power: self.p_prev_init,
                rated: self.p_rated,
            });
        }
        Ok(self)
    }

    /// `Γ`, `P` and `Q` for these parameters.
    pub fn coefficients(&self) -> Result<ModelCoefficients> {
        coefficients(self.delta, self.t_loss, self.t_cont)
    }

    /// Classifies the boundary between a slot commanded at `p_prev` and one
    /// commanded at `p_in`.
    pub fn classify(&self, p_in: f64, p_prev: f64) -> SlotTransition {
        classify_transition(p_in, p_prev, self.delta, self.t_cont, self.e_c, self.e_d)
    }
}

/// Free-function form of [`FlywheelParams::validate`].
pub fn validate_params(params: FlywheelParams) -> Result<FlywheelParams> {
    params.validate()
}

/// Slot duration plus the constant grid power commanded in each slot.
///
/// `powers[0]` is slot `k = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub delta: f64,
    pub powers: Vec<f64>,
}

impl PowerProfile {
    pub fn new(delta: f64, powers: Vec<f64>) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::NonFinite {
                name: "delta",
                value: delta,
            });
        }
        if delta <= 0.0 {
            return Err(Error::NonPositive {
                name: "delta",
                value: delta,
            });
        }
        if powers.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if let Some((i, &p)) = powers.iter().enumerate().find(|(_, p)| !p.is_finite()) {
            return Err(Error::NonFinitePower {
                slot: i + 1,
                power: p,
            });
        }
        Ok(PowerProfile { delta, powers })
    }

    /// A profile holding `power` for `slots` slots.
    pub fn constant(delta: f64, power: f64, slots: usize) -> Result<Self> {
        PowerProfile::new(delta, vec![power; slots])
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    /// Checks the slot duration and the rated-power limit against `params`.
    pub fn validate_against(&self, params: &FlywheelParams) -> Result<()> {
        if self.powers.is_empty() {
            return Err(Error::EmptyProfile);
        }
        let tol = 1e-12 * params.delta.abs();
        if (self.delta - params.delta).abs() > tol {
            return Err(Error::SlotDurationMismatch {
                profile: self.delta,
                params: params.delta,
            });
        }
        for (i, &p) in self.powers.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinitePower {
                    slot: i + 1,
                    power: p,
                });
            }
            if p.abs() > params.p_rated {
                return Err(Error::PowerExceedsRated {
                    slot: i + 1,
                    power: p,
                    rated: params.p_rated,
                });
            }
        }
        Ok(())
    }

    /// `(p_in, p_prev)` for every slot, with `p_prev_init` feeding slot 1.
    pub fn slot_pairs(&self, p_prev_init: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let prevs = std::iter::once(p_prev_init).chain(self.powers.iter().copied());
        self.powers.iter().copied().zip(prevs)
    }

    /// Largest `|P_in|` over slots `1..=k` (slot 1 when `k = 0`).
    pub fn max_abs_power_through(&self, k: usize) -> f64 {
        let end = k.clamp(1, self.powers.len());
        self.powers[..end].iter().fold(0.0, |m, p| m.max(p.abs()))
    }
}

/// The five ways consecutive slot powers can relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotCase {
    /// `P_in = 0`; the filtered power keeps the sign of `P_prev`.
    ZeroIn,
    /// `P_prev = 0`, `P_in != 0`; the filtered power takes the sign of `P_in`.
    ZeroPrev,
    /// `P_in` and `P_prev` have the same sign.
    SameSign,
    /// Opposite signs, but the filtered power never crosses zero in the slot.
    OppositeNoSwitch,
    /// Opposite signs and the filtered power crosses zero at `t_change`.
    OppositeSwitch,
}

impl SlotCase {
    pub const ALL: [SlotCase; 5] = [
        SlotCase::ZeroIn,
        SlotCase::ZeroPrev,
        SlotCase::SameSign,
        SlotCase::OppositeNoSwitch,
        SlotCase::OppositeSwitch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SlotCase::ZeroIn => "ZeroIn",
            SlotCase::ZeroPrev => "ZeroPrev",
            SlotCase::SameSign => "SameSign",
            SlotCase::OppositeNoSwitch => "OppositeNoSwitch",
            SlotCase::OppositeSwitch => "OppositeSwitch",
        }
    }
}

impl std::fmt::Display for SlotCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SlotCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SlotCase::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown slot case `{s}`")))
    }
}

/// Classification of one slot boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotTransition {
    pub case: SlotCase,
    /// Efficiency matching the sign of `P_in`.
    pub eta_in: f64,
    /// Efficiency matching the sign of `P_prev`.
    pub eta_prev: f64,
    /// Efficiency applied over the whole slot in the non-switching cases,
    /// derived from the sign of the filtered power. For
    /// [`SlotCase::OppositeSwitch`] it equals [`Self::eta_eff_compact`].
    pub eta_eff: f64,
    /// The compact magnitude rule: `eta_in` if `|P_in| > |P_prev|`, else
    /// `eta_prev`. Agrees with `eta_eff` whenever `delta >= t_cont ln 2`.
    pub eta_eff_compact: f64,
    /// Zero crossing of the filtered power, present only when switching.
    pub t_change: Option<f64>,
}

/// Self-discharge over one slot, `exp(-delta / t_loss)`.
pub fn gamma(delta: f64, t_loss: f64) -> f64 {
    (-delta / t_loss).exp()
}

/// `Γ`, `P` and `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelCoefficients {
    /// `exp(-delta / t_loss)`.
    pub gamma: f64,
    /// `t_loss - t_loss t_cont / (t_cont - t_loss)`, seconds.
    pub p_coef: f64,
    /// `(t_cont - t_loss) / (t_loss t_cont)`, 1/s.
    pub q_coef: f64,
}

pub fn coefficients(delta: f64, t_loss: f64, t_cont: f64) -> Result<ModelCoefficients> {
    for (name, value) in [("delta", delta), ("t_loss", t_loss), ("t_cont", t_cont)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositive { name, value });
        }
    }
    if ((t_cont - t_loss) / t_loss).abs() <= SINGULARITY_TOLERANCE {
        return Err(Error::CoefficientSingularity { t_loss, t_cont });
    }
    let q_coef = 1.0 / t_loss - 1.0 / t_cont;
    let p_coef = t_loss - t_loss * t_cont / (t_cont - t_loss);
    Ok(ModelCoefficients {
        gamma: gamma(delta, t_loss),
        p_coef,
        q_coef,
    })
}

/// Efficiency selected by the sign of a power: `e_c` for `p >= 0`, else `e_d`.
#[inline]
pub fn efficiency_for(p: f64, e_c: f64, e_d: f64) -> f64 {
    if p >= 0.0 {
        e_c
    } else {
        e_d
    }
}

pub fn classify_transition(
    p_in: f64,
    p_prev: f64,
    delta: f64,
    t_cont: f64,
    e_c: f64,
    e_d: f64,
) -> SlotTransition {
    let eta_in = efficiency_for(p_in, e_c, e_d);
    let eta_prev = efficiency_for(p_prev, e_c, e_d);
    let eta_eff_compact = if p_in.abs() > p_prev.abs() {
        eta_in
    } else {
        eta_prev
    };

    let (case, eta_eff, t_change) = if p_in == 0.0 {
        (SlotCase::ZeroIn, eta_prev, None)
    } else if p_prev == 0.0 {
        (SlotCase::ZeroPrev, eta_in, None)
    } else if (p_in > 0.0) == (p_prev > 0.0) {
        (SlotCase::SameSign, eta_in, None)
    } else {
        let ratio = p_in / (p_in - p_prev);
        if ratio > (-delta / t_cont).exp() {
            let t_change = -t_cont * ratio.ln();
            (SlotCase::OppositeSwitch, eta_eff_compact, Some(t_change))
        } else {
            (SlotCase::OppositeNoSwitch, eta_prev, None)
        }
    };

    SlotTransition {
        case,
        eta_in,
        eta_prev,
        eta_eff,
        eta_eff_compact,
        t_change,
    }
}

/// Output of the first-order filter `t` seconds into a slot, before the
/// efficiency is applied, assuming it sat at `p_prev` at the slot start.
#[inline]
pub fn filtered_power(t: f64, p_in: f64, p_prev: f64, t_cont: f64) -> f64 {
    let step = p_in - p_prev;
    if t < t_cont {
        p_prev - step * (-t / t_cont).exp_m1()
    } else {
        p_in - step * (-t / t_cont).exp()
    }
}

/// Mechanical input power `t` seconds into a slot: the filtered grid power
/// scaled by the efficiency matching its sign.
#[inline]
pub fn filtered_mech_power(t: f64, p_in: f64, p_prev: f64, t_cont: f64, e_c: f64, e_d: f64) -> f64 {
    let y = filtered_power(t, p_in, p_prev, t_cont);
    efficiency_for(y, e_c, e_d) * y
}

/// Loss time constant `J / (2 Q_loss)` from rotor inertia and the lumped
/// windage-plus-lamination loss factor.
pub fn t_loss_from_inertia(inertia: f64, loss_factor: f64) -> Result<f64> {
    if !(inertia > 0.0) {
        return Err(Error::NonPositive {
            name: "inertia",
            value: inertia,
        });
    }
    if !(loss_factor > 0.0) {
        return Err(Error::NonPositive {
            name: "loss_factor",
            value: loss_factor,
        });
    }
    Ok(inertia / (2.0 * loss_factor))
}

/// Kinetic energy `J ω² / 2`.
pub fn energy_of_speed(inertia: f64, omega: f64) -> Result<f64> {
    if !(inertia > 0.0) {
        return Err(Error::NonPositive {
            name: "inertia",
            value: inertia,
        });
    }
    if !(omega >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "angular speed must be non-negative, got {omega}"
        )));
    }
    Ok(0.5 * inertia * omega * omega)
}

/// Angular speed `sqrt(2E / J)` holding `energy`.
pub fn speed_of_energy(inertia: f64, energy: f64) -> Result<f64> {
    if !(inertia > 0.0) {
        return Err(Error::NonPositive {
            name: "inertia",
            value: inertia,
        });
    }
    if energy < 0.0 {
        return Err(Error::NegativeEnergy(energy));
    }
    Ok((2.0 * energy / inertia).sqrt())
}

/// How a simulation treats energy leaving `[0, e_cap]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SaturationMode {
    /// Flag the slot but keep the unconstrained value.
    #[default]
    Unconstrained,
    /// Flag the slot and clamp the energy into `[0, e_cap]`.
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub slot: usize,
    pub time: f64,
    pub energy: f64,
}

/// Stored energy at every slot boundary, `t_0 = 0` through `t_K`.
///
/// `transitions[k - 1]` and `saturated[k - 1]` describe slot `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub entries: Vec<TraceEntry>,
    pub transitions: Vec<SlotTransition>,
    pub saturated: Vec<bool>,
}

impl EnergyTrace {
    pub(crate) fn with_capacity(e_init: f64, slots: usize) -> Self {
        let mut entries = Vec::with_capacity(slots + 1);
        entries.push(TraceEntry {
            slot: 0,
            time: 0.0,
            energy: e_init,
        });
        EnergyTrace {
            entries,
            transitions: Vec::with_capacity(slots),
            saturated: Vec::with_capacity(slots),
        }
    }

    /// Appends slot `k`, applying `mode` to an energy that left `[0, e_cap]`.
    pub(crate) fn push_slot(
        &mut self,
        delta: f64,
        e_cap: f64,
        energy: f64,
        transition: SlotTransition,
        mode: SaturationMode,
    ) -> f64 {
        let out_of_range = !(0.0..=e_cap).contains(&energy);
        let energy = match mode {
            SaturationMode::Clamp if out_of_range => energy.clamp(0.0, e_cap),
            _ => energy,
        };
        let slot = self.entries.len();
        self.entries.push(TraceEntry {
            slot,
            time: slot as f64 * delta,
            energy,
        });
        self.transitions.push(transition);
        self.saturated.push(out_of_range);
        energy
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.energy)
    }

    pub fn final_energy(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.energy)
    }

    /// Number of slots (entries minus the initial sample).
    pub fn slots(&self) -> usize {
        self.entries.len() - 1
    }
}

/// Runs `E(t_k) = Γ E(t_{k-1}) + slot_energy(k)` over a validated profile.
pub(crate) fn run_decay_recursion<F>(
    profile: &PowerProfile,
    params: &FlywheelParams,
    mode: SaturationMode,
    mut slot_energy: F,
) -> Result<EnergyTrace>
where
    F: FnMut(f64, f64, &SlotTransition) -> f64,
{
    let params = params.validate()?;
    profile.validate_against(&params)?;
    let decay = DecayFactor::new(params.delta, params.t_loss);
    let mut trace = EnergyTrace::with_capacity(params.e_init, profile.len());
    let mut energy = params.e_init;
    for (p_in, p_prev) in profile.slot_pairs(params.p_prev_init) {
        let transition = params.classify(p_in, p_prev);
        let next = decay.apply(energy) + slot_energy(p_in, p_prev, &transition);
        energy = trace.push_slot(params.delta, params.e_cap, next, transition, mode);
    }
    Ok(trace)
}

/// `exp(-delta / t_loss)` carried as an unevaluated sum `hi + lo`.
///
/// The rounding error of `exp` would otherwise compound linearly over
/// thousands of decay steps.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DecayFactor {
    hi: f64,
    lo: f64,
}

impl DecayFactor {
    pub(crate) fn new(delta: f64, t_loss: f64) -> Self {
        let x = delta / t_loss;
        let hi = (-x).exp();
        // exp(-x) = hi * exp(-x - ln hi); the residual is a few ulps of x.
        let lo = if hi > 0.0 {
            hi * (-x - hi.ln()).exp_m1()
        } else {
            0.0
        };
        DecayFactor { hi, lo }
    }

    #[inline]
    pub(crate) fn apply(&self, energy: f64) -> f64 {
        energy.mul_add(self.hi, energy * self.lo)
    }
}
