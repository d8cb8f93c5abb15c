//! Payload power accounting.
//!
//! Per satellite, hardware power is a DC share proportional to the occupied
//! bandwidth plus the RF power divided by the HPA efficiency. Summed over the
//! constellation together with the radiated RF power this collapses into a
//! per-user linear form, `Σ_k ((ρ+1)/ρ) P_k + (P_DC/B_tot) B_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams<T> {
    /// DC-to-RF efficiency of the amplifiers, in (0, 1].
    pub hpa_efficiency: T,
    /// DC power drawn at full bandwidth occupancy (W).
    pub dc_power_max_w: T,
    /// Bandwidth available per satellite (Hz).
    pub bandwidth_total_hz: T,
    /// RF power available per satellite (W).
    pub rf_power_max_w: T,
}

impl<T: Scalar> PowerParams<T> {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("hpa_efficiency", self.hpa_efficiency),
            ("dc_power_max_w", self.dc_power_max_w),
            ("bandwidth_total_hz", self.bandwidth_total_hz),
            ("rf_power_max_w", self.rf_power_max_w),
        ];
        for (name, v) in checks {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::config(format!("power.{name}"), "must be positive and finite"));
            }
        }
        if self.hpa_efficiency > T::one() {
            return Err(Error::config("power.hpa_efficiency", "must not exceed 1"));
        }
        Ok(())
    }

    /// Watts of consumption per radiated watt, `(ρ + 1) / ρ`.
    pub fn power_coeff(&self) -> T {
        (self.hpa_efficiency + T::one()) / self.hpa_efficiency
    }

    /// Watts of DC consumption per Hz, `P_DC / B_tot`.
    pub fn bw_coeff(&self) -> T {
        self.dc_power_max_w / self.bandwidth_total_hz
    }
}

/// RF power radiated by one satellite: sum over the users it serves.
pub fn meo_rf_power<T: Scalar>(per_user_power: &[T]) -> T {
    per_user_power.iter().fold(T::zero(), |a, &p| a + p)
}

/// Hardware power of one satellite for `assigned_bw_hz` of occupied
/// bandwidth and `rf_power_w` of radiated power.
pub fn meo_hw_power<T: Scalar>(assigned_bw_hz: T, rf_power_w: T, params: &PowerParams<T>) -> Result<T> {
    if assigned_bw_hz > params.bandwidth_total_hz {
        return Err(Error::Domain(format!(
            "assigned bandwidth {assigned_bw_hz} Hz exceeds capacity {} Hz",
            params.bandwidth_total_hz
        )));
    }
    Ok(params.dc_power_max_w * (assigned_bw_hz / params.bandwidth_total_hz) + rf_power_w / params.hpa_efficiency)
}

/// Constellation power in per-user form.
pub fn total_power<T: Scalar>(per_user_bw: &[T], per_user_power: &[T], params: &PowerParams<T>) -> T {
    let (pc, bc) = (params.power_coeff(), params.bw_coeff());
    per_user_bw
        .iter()
        .zip(per_user_power)
        .fold(T::zero(), |acc, (&b, &p)| acc + pc * p + bc * b)
}

/// Constellation power composed satellite by satellite: hardware power of
/// every active satellite plus the total radiated power. `serving[k]` is
/// the satellite serving user `k`, if any; unserved users contribute nothing
/// and satellites without users are switched off.
pub fn composed_power<T: Scalar>(
    serving: &[Option<usize>],
    per_user_bw: &[T],
    per_user_power: &[T],
    num_satellites: usize,
    params: &PowerParams<T>,
) -> Result<T> {
    let mut bw = vec![T::zero(); num_satellites];
    let mut powers: Vec<Vec<T>> = vec![Vec::new(); num_satellites];
    let mut radiated = T::zero();
    for (k, s) in serving.iter().enumerate() {
        if let Some(n) = *s {
            bw[n] = bw[n] + per_user_bw[k];
            powers[n].push(per_user_power[k]);
            radiated = radiated + per_user_power[k];
        }
    }
    let mut total = radiated;
    for n in 0..num_satellites {
        if powers[n].is_empty() {
            continue;
        }
        total = total + meo_hw_power(bw[n], meo_rf_power(&powers[n]), params)?;
    }
    Ok(total)
}
