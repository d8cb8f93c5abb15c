//! Beam pattern, path loss, noise and Shannon rate.

mod bessel;

pub use bessel::bessel_j1;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{boresight_angle, elevation_angle, slant_range, EcefVector, SurfacePoint};
use crate::optimize::bisect;
use crate::scalar::Scalar;

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
/// Boltzmann constant (J/K).
pub const BOLTZMANN_J_K: f64 = 1.380_649e-23;
/// First zero of J1; bounds the main lobe in `u = 2π (r/λ) sin θ`.
pub const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512;
/// Default aperture efficiency used to derive the peak gain.
pub const DEFAULT_APERTURE_EFFICIENCY: f64 = 0.55;

/// Satellite transmit antenna: circular aperture of radius `r`, with
/// `aperture_ratio = r / λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaConfig<T> {
    pub aperture_ratio: T,
    /// Peak (boresight) gain, linear.
    pub max_gain: T,
    pub carrier_frequency_hz: T,
}

impl<T: Scalar> AntennaConfig<T> {
    pub fn new(aperture_ratio: T, max_gain: T, carrier_frequency_hz: T) -> Result<Self> {
        let a = Self {
            aperture_ratio,
            max_gain,
            carrier_frequency_hz,
        };
        a.validate()?;
        Ok(a)
    }

    /// Peak gain of a uniformly illuminated aperture, `(2π r/λ)² · efficiency`.
    pub fn aperture_gain(aperture_ratio: T, efficiency: T) -> T {
        let k = T::lit(2.0) * T::PI() * aperture_ratio;
        k * k * efficiency
    }

    pub fn with_efficiency(aperture_ratio: T, efficiency: T, carrier_frequency_hz: T) -> Result<Self> {
        Self::new(
            aperture_ratio,
            Self::aperture_gain(aperture_ratio, efficiency),
            carrier_frequency_hz,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_ratio > T::zero() && self.aperture_ratio.is_finite()) {
            return Err(Error::Domain("aperture ratio must be positive".into()));
        }
        if !(self.max_gain >= T::one() && self.max_gain.is_finite()) {
            return Err(Error::Domain("max gain must be >= 1 (linear)".into()));
        }
        if !(self.carrier_frequency_hz > T::zero() && self.carrier_frequency_hz.is_finite()) {
            return Err(Error::Domain("carrier frequency must be positive".into()));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> T {
        T::lit(SPEED_OF_LIGHT_M_S) / self.carrier_frequency_hz
    }
}

/// Per-link channel quantities entering the rate formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    /// End-to-end linear gain `h` (antenna pattern × path loss × rx gain).
    pub channel_gain: T,
    /// Noise power spectral density (W/Hz).
    pub noise_psd: T,
}

pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Scalar>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

/// Normalized circular-aperture pattern `4 |J1(u)/u|²`,
/// `u = 2π (r/λ) sin θ`; equals 1 on boresight.
pub fn normalized_pattern_gain<T: Scalar>(theta: T, aperture_ratio: T) -> Result<T> {
    if !(theta >= T::zero() && theta <= T::FRAC_PI_2()) {
        return Err(Error::Domain(format!(
            "off-boresight angle {theta} rad outside [0, π/2]"
        )));
    }
    if theta == T::zero() {
        return Ok(T::one());
    }
    let u = T::lit(2.0) * T::PI() * aperture_ratio * theta.sin();
    if u == T::zero() {
        return Ok(T::one());
    }
    let r = bessel_j1(u) / u;
    Ok(T::lit(4.0) * r * r)
}

fn main_lobe_edge<T: Scalar>(aperture_ratio: T) -> T {
    let s = T::lit(J1_FIRST_ZERO) / (T::lit(2.0) * T::PI() * aperture_ratio);
    s.min(T::one()).asin()
}

/// Full 3 dB beamwidth (degrees): twice the main-lobe angle at which the
/// normalized pattern equals 0.5, located by bisection to machine precision.
pub fn half_power_beamwidth<T: Scalar>(aperture_ratio: T) -> Result<T> {
    if !(aperture_ratio > T::lit(0.5) && aperture_ratio.is_finite()) {
        return Err(Error::Domain(format!(
            "aperture ratio {aperture_ratio} must exceed 0.5"
        )));
    }
    let hi = main_lobe_edge(aperture_ratio);
    let g = |th: T| normalized_pattern_gain(th, aperture_ratio).expect("angle within main lobe") - T::lit(0.5);
    let root = bisect(g, T::zero(), hi, T::tol(1e-16))
        .ok_or_else(|| Error::Solver("half-power point not bracketed".into()))?;
    Ok(T::lit(2.0) * root.to_degrees())
}

/// Beamwidth read off a uniform half-angle sweep: twice the largest grid
/// angle `i · step_deg` whose normalized gain is still ≥ 0.5.
///
/// This is how beamwidth tables are often produced from a plotted pattern;
/// with a 0.01° step it reproduces the commonly tabulated values (5.88°,
/// 2.94°, 1.96°, 1.46° for r/λ = 5, 10, 15, 20), which sit up to 0.02°
/// below the exact [`half_power_beamwidth`].
pub fn swept_beamwidth<T: Scalar>(aperture_ratio: T, step_deg: T) -> Result<T> {
    if step_deg.is_nan() || step_deg <= T::zero() {
        return Err(Error::Domain("sweep step must be positive".into()));
    }
    let edge = main_lobe_edge(aperture_ratio).to_degrees();
    let mut last = T::zero();
    let mut i = 1usize;
    loop {
        let th = step_deg * T::from_count(i);
        if th > edge {
            break;
        }
        if normalized_pattern_gain(th.to_radians(), aperture_ratio)? >= T::lit(0.5) {
            last = th;
        } else {
            break;
        }
        i += 1;
    }
    Ok(T::lit(2.0) * last)
}

/// Free-space path gain `(λ / (4π d))²` (linear, ≤ 1 beyond λ/4π).
pub fn free_space_path_loss<T: Scalar>(distance_km: T, carrier_frequency_hz: T) -> T {
    let lambda = T::lit(SPEED_OF_LIGHT_M_S) / carrier_frequency_hz;
    let x = lambda / (T::lit(4.0) * T::PI() * distance_km * T::lit(1000.0));
    x * x
}

/// Channel gain `g_max · G(θ) · FSPL(d) · rx_gain` from `sat` to `user` for a
/// beam pointed at `beam_center`.
pub fn channel_gain<T: Scalar>(
    sat: &EcefVector<T>,
    beam_center: &SurfacePoint<T>,
    user: &SurfacePoint<T>,
    ant: &AntennaConfig<T>,
    rx_gain: T,
) -> Result<T> {
    if elevation_angle(user, sat) < T::zero() {
        return Err(Error::Domain("user is below the satellite's horizon".into()));
    }
    let theta = boresight_angle(sat, beam_center, user);
    let pattern = normalized_pattern_gain(theta, ant.aperture_ratio)?;
    let path = free_space_path_loss(slant_range(sat, user), ant.carrier_frequency_hz);
    Ok(ant.max_gain * pattern * path * rx_gain)
}

/// Thermal noise PSD `k_B · T` (W/Hz).
pub fn noise_psd<T: Scalar>(system_temperature_k: T) -> T {
    T::lit(BOLTZMANN_J_K) * system_temperature_k
}

/// `B log2(1 + P h / (B σ²))`, continuously extended by 0 at `B = 0`.
pub fn shannon_rate<T: Scalar>(bandwidth_hz: T, power_w: T, link: &LinkBudget<T>) -> T {
    if bandwidth_hz <= T::zero() {
        return T::zero();
    }
    let snr = power_w * link.channel_gain / (bandwidth_hz * link.noise_psd);
    bandwidth_hz * snr.ln_1p() / T::LN_2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{satellite_position, SatelliteOrbit};
    use approx::assert_relative_eq;

    #[test]
    fn pattern_examples() {
        assert_eq!(normalized_pattern_gain(0.0f64, 15.0).unwrap(), 1.0);
        let g = normalized_pattern_gain(0.98f64.to_radians(), 15.0).unwrap();
        assert!((g - 0.5).abs() < 0.005, "{g}");
        assert!(normalized_pattern_gain(-0.1f64, 15.0).is_err());
        assert!(normalized_pattern_gain(1.6f64, 15.0).is_err());
    }

    #[test]
    fn pattern_small_angle_quadratic() {
        // G ≈ 1 − u²/4 for small u.
        for &th in &[1e-5f64, 1e-4, 5e-4] {
            let u = 2.0 * std::f64::consts::PI * 15.0 * th.sin();
            let g = normalized_pattern_gain(th, 15.0).unwrap();
            assert!((g - (1.0 - u * u / 4.0)).abs() < u.powi(4) / 10.0);
        }
    }

    #[test]
    fn beamwidth_is_exact_half_power_point() {
        for &a in &[5.0f64, 10.0, 15.0, 20.0] {
            let bw = half_power_beamwidth(a).unwrap();
            let g = normalized_pattern_gain((bw / 2.0).to_radians(), a).unwrap();
            assert!((g - 0.5).abs() < 1e-8);
        }
        // Closed form: u_3dB = 1.616339948...
        let bw = half_power_beamwidth(15.0f64).unwrap();
        let expect = 2.0
            * (1.616_339_948_310_703_7 / (2.0 * std::f64::consts::PI * 15.0))
                .asin()
                .to_degrees();
        assert_relative_eq!(bw, expect, epsilon = 1e-7);
        assert!(half_power_beamwidth(0.4f64).is_err());
    }

    #[test]
    fn swept_beamwidth_reproduces_tabulated_values() {
        let table = [(5.0, 5.88), (10.0, 2.94), (15.0, 1.96), (20.0, 1.46)];
        for (a, expect) in table {
            let bw: f64 = swept_beamwidth(a, 0.01).unwrap();
            assert!((bw - expect).abs() < 1e-9, "{a}: {bw}");
        }
    }

    #[test]
    fn fspl_examples() {
        let f = 20e9f64;
        let g1 = free_space_path_loss(1000.0, f);
        let g2 = free_space_path_loss(2000.0, f);
        assert_relative_eq!(g1 / g2, 4.0, max_relative = 1e-12);

        let db = -linear_to_db(free_space_path_loss(8062.0, f));
        let hand = 32.45 + 20.0 * 8062f64.log10() + 20.0 * 20_000f64.log10();
        assert!((db - hand).abs() < 0.01, "{db} vs {hand}");
        assert!((db - 196.6).abs() < 0.05);

        let lambda = SPEED_OF_LIGHT_M_S / f;
        let d_km = lambda / (4.0 * std::f64::consts::PI) / 1000.0;
        assert_relative_eq!(free_space_path_loss(d_km, f), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn noise_examples() {
        assert_relative_eq!(noise_psd(224.5f64), 3.099_507e-21, max_relative = 1e-6);
        assert_relative_eq!(noise_psd(449.0f64), 2.0 * noise_psd(224.5f64), max_relative = 1e-15);
        assert_relative_eq!(noise_psd(1.0 / BOLTZMANN_J_K), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn rate_examples() {
        let link = LinkBudget {
            channel_gain: 2e-12f64,
            noise_psd: 4e-21,
        };
        assert_eq!(shannon_rate(0.0, 10.0, &link), 0.0);
        // P h / (B σ²) = 1  ⇒  rate = B.
        let b = 1e6;
        let p = b * link.noise_psd / link.channel_gain;
        assert_relative_eq!(shannon_rate(b, p, &link), b, max_relative = 1e-12);
    }

    #[test]
    fn channel_gain_factors() {
        let ant = AntennaConfig::with_efficiency(15.0f64, DEFAULT_APERTURE_EFFICIENCY, 20e9).unwrap();
        let sat = satellite_position(&SatelliteOrbit::new(0.0, 8062.0, 0.0).unwrap(), 0.0);
        let c = SurfacePoint::new(10.0, 2.0).unwrap();
        let rx = db_to_linear(41.45);
        let at_centre = channel_gain(&sat, &c, &c, &ant, rx).unwrap();
        let fspl = free_space_path_loss(slant_range(&sat, &c), 20e9);
        assert_relative_eq!(at_centre, ant.max_gain * fspl * rx, max_relative = 1e-12);

        let u = SurfacePoint::new(10.5, 2.3).unwrap();
        let th = boresight_angle(&sat, &c, &u);
        let expected = ant.max_gain
            * normalized_pattern_gain(th, 15.0).unwrap()
            * free_space_path_loss(slant_range(&sat, &u), 20e9)
            * rx;
        assert_relative_eq!(
            channel_gain(&sat, &c, &u, &ant, rx).unwrap(),
            expected,
            max_relative = 1e-12
        );

        let below = SurfacePoint::new(0.0, 170.0).unwrap();
        assert!(channel_gain(&sat, &below, &below, &ant, rx).is_err());
    }

    #[test]
    fn channel_gain_half_at_beam_edge() {
        // Pattern factor at the 3 dB angle is exactly half the boresight one.
        let a = 15.0f64;
        let half = (half_power_beamwidth(a).unwrap() / 2.0).to_radians();
        assert!((normalized_pattern_gain(half, a).unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn default_peak_gain() {
        let g = AntennaConfig::<f64>::aperture_gain(15.0, 0.55);
        assert_relative_eq!(
            g,
            (2.0 * std::f64::consts::PI * 15.0).powi(2) * 0.55,
            max_relative = 1e-15
        );
        assert!((linear_to_db(g) - 36.89).abs() < 0.01);
    }
}
