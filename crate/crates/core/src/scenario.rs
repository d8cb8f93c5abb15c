//! Scenario files and synthetic user/demand generation.
//!
//! A scenario is a JSON document. Every physical quantity carries its unit in
//! the field name. Only `cities` is mandatory; everything else falls back to
//! the defaults below (15 satellites 24° apart at 8062 km, 2500 MHz and
//! 800 W per satellite, ρ = 0.6, 5000 W DC, 5° minimum elevation, 150 slots
//! of 360 s).

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SatelliteOrbit, SurfacePoint};
use crate::power_model::PowerParams;
use crate::rf_model::{db_to_linear, half_power_beamwidth, noise_psd, AntennaConfig, DEFAULT_APERTURE_EFFICIENCY};
use crate::scalar::Scalar;

pub const DEFAULT_NUM_SATELLITES: usize = 15;
pub const DEFAULT_ALTITUDE_KM: f64 = 8062.0;
pub const DEFAULT_HPA_EFFICIENCY: f64 = 0.6;
pub const DEFAULT_DC_POWER_MAX_W: f64 = 5000.0;
pub const DEFAULT_BANDWIDTH_TOTAL_HZ: f64 = 2.5e9;
pub const DEFAULT_RF_POWER_MAX_W: f64 = 800.0;
pub const DEFAULT_APERTURE_RATIO: f64 = 15.0;
pub const DEFAULT_CARRIER_FREQUENCY_HZ: f64 = 20e9;
pub const DEFAULT_RX_GAIN_DBI: f64 = 41.45;
pub const DEFAULT_SYSTEM_TEMPERATURE_K: f64 = 224.5;
pub const DEFAULT_MIN_ELEVATION_DEG: f64 = 5.0;
pub const DEFAULT_TIMESLOT_DURATION_S: f64 = 360.0;
pub const DEFAULT_NUM_TIMESLOTS: usize = 150;
pub const DEFAULT_BEAM_BW_CAP_HZ: f64 = 5e8;
pub const DEFAULT_BEAM_POWER_CAP_W: f64 = 160.0;
pub const DEFAULT_ETA_BPS: f64 = 1e6;
pub const DEFAULT_RNG_SEED: u64 = 1;
pub const DEFAULT_USER_SPREAD_KM: f64 = 50.0;
pub const DEFAULT_CITY_USERS: (usize, usize) = (20, 50);
pub const DEFAULT_AMPLITUDE_BPS: (f64, f64) = (20e6, 200e6);
pub const DEFAULT_DEMAND_NOISE_STD_BPS: f64 = 5e6;
pub const DEFAULT_PHASE_JITTER_H: f64 = 1.5;

/// Length of the demand cycle (s).
pub const DAY_S: f64 = 86_400.0;

/// Ground terminal with a fixed position and one demand value per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTerminal<T> {
    pub id: usize,
    pub position: SurfacePoint<T>,
    pub demand_bps: Vec<T>,
}

impl<T: Scalar> UserTerminal<T> {
    pub fn peak_demand(&self) -> T {
        self.demand_bps.iter().fold(T::zero(), |a, &d| a.max(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct City {
    #[serde(default)]
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default = "default_city_min")]
    pub users_min: usize,
    #[serde(default = "default_city_max")]
    pub users_max: usize,
}

fn default_city_min() -> usize {
    DEFAULT_CITY_USERS.0
}

fn default_city_max() -> usize {
    DEFAULT_CITY_USERS.1
}

/// Sinusoidal day/night demand with per-user amplitude and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub amplitude_min_bps: f64,
    pub amplitude_max_bps: f64,
    pub noise_std_bps: f64,
    /// Half-width of the uniform per-user phase jitter (hours).
    pub phase_jitter_h: f64,
}

impl Default for DemandModel {
    fn default() -> Self {
        Self {
            amplitude_min_bps: DEFAULT_AMPLITUDE_BPS.0,
            amplitude_max_bps: DEFAULT_AMPLITUDE_BPS.1,
            noise_std_bps: DEFAULT_DEMAND_NOISE_STD_BPS,
            phase_jitter_h: DEFAULT_PHASE_JITTER_H,
        }
    }
}

/// Fully resolved, validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub satellites: Vec<SatelliteOrbit<f64>>,
    pub power: PowerParams<f64>,
    pub antenna: AntennaConfig<f64>,
    pub rx_gain_dbi: f64,
    pub system_temperature_k: f64,
    pub min_elevation_deg: f64,
    /// Beamwidth used for clustering; defaults to the antenna's 3 dB width.
    pub beamwidth_deg: f64,
    pub timeslot_duration_s: f64,
    pub num_timeslots: usize,
    pub beam_bw_cap_hz: f64,
    pub beam_power_cap_w: f64,
    pub eta_bps: f64,
    pub rng_seed: u64,
    pub user_spread_km: f64,
    pub demand: DemandModel,
    pub cities: Vec<City>,
}

impl ScenarioConfig {
    /// Defaults for everything except the cities.
    pub fn with_cities(cities: Vec<City>) -> Self {
        ScenarioFile {
            cities: Some(cities),
            ..Default::default()
        }
        .resolve()
        .expect("defaults are valid")
    }

    pub fn rx_gain(&self) -> f64 {
        db_to_linear(self.rx_gain_dbi)
    }

    pub fn noise_psd(&self) -> f64 {
        noise_psd(self.system_temperature_k)
    }

    pub fn beamwidth_rad(&self) -> f64 {
        self.beamwidth_deg.to_radians()
    }

    /// Start time of slot `t` (s).
    pub fn slot_time(&self, t: usize) -> f64 {
        t as f64 * self.timeslot_duration_s
    }

    pub fn validate(&self) -> Result<()> {
        if self.satellites.is_empty() {
            return Err(Error::config("satellites", "at least one satellite is required"));
        }
        for (i, s) in self.satellites.iter().enumerate() {
            s.validate()
                .map_err(|e| Error::config(format!("satellites[{i}]"), e.to_string()))?;
        }
        self.power.validate()?;
        self.antenna
            .validate()
            .map_err(|e| Error::config("antenna", e.to_string()))?;
        positive("system_temperature_k", self.system_temperature_k)?;
        if !self.rx_gain_dbi.is_finite() {
            return Err(Error::config("rx_gain_dbi", "must be finite"));
        }
        if !(self.min_elevation_deg >= 0.0 && self.min_elevation_deg < 90.0) {
            return Err(Error::config("min_elevation_deg", "must lie in [0, 90)"));
        }
        positive("beamwidth_deg", self.beamwidth_deg)?;
        positive("timeslot_duration_s", self.timeslot_duration_s)?;
        if self.num_timeslots < 1 {
            return Err(Error::config("num_timeslots", "must be at least 1"));
        }
        positive("beam_bw_cap_hz", self.beam_bw_cap_hz)?;
        positive("beam_power_cap_w", self.beam_power_cap_w)?;
        if self.beam_bw_cap_hz > self.power.bandwidth_total_hz {
            return Err(Error::config(
                "beam_bw_cap_hz",
                "must not exceed power.bandwidth_total_hz",
            ));
        }
        positive("eta_bps", self.eta_bps)?;
        if !(self.user_spread_km >= 0.0 && self.user_spread_km.is_finite()) {
            return Err(Error::config("user_spread_km", "must be non-negative"));
        }
        let d = &self.demand;
        if !(d.amplitude_min_bps >= 0.0
            && d.amplitude_min_bps <= d.amplitude_max_bps
            && d.amplitude_max_bps.is_finite())
        {
            return Err(Error::config(
                "demand.amplitude_min_bps",
                "need 0 <= amplitude_min_bps <= amplitude_max_bps",
            ));
        }
        if !(d.noise_std_bps >= 0.0 && d.noise_std_bps.is_finite()) {
            return Err(Error::config("demand.noise_std_bps", "must be non-negative"));
        }
        if !(d.phase_jitter_h >= 0.0 && d.phase_jitter_h.is_finite()) {
            return Err(Error::config("demand.phase_jitter_h", "must be non-negative"));
        }
        if self.cities.is_empty() {
            return Err(Error::config("cities", "at least one city is required"));
        }
        for (i, c) in self.cities.iter().enumerate() {
            if SurfacePoint::new(c.lat_deg, c.lon_deg).is_err() {
                return Err(Error::config(format!("cities[{i}]"), "coordinates out of range"));
            }
            if c.users_min > c.users_max {
                return Err(Error::config(
                    format!("cities[{i}].users_min"),
                    "must not exceed users_max",
                ));
            }
        }
        Ok(())
    }

    /// Fully explicit file representation (every default written out).
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            constellation: None,
            satellites: Some(
                self.satellites
                    .iter()
                    .map(|s| SatelliteEntry {
                        initial_longitude_deg: s.initial_longitude_deg,
                        altitude_km: s.altitude_km,
                        longitude_rate_deg_per_s: Some(s.longitude_rate_deg_per_s),
                    })
                    .collect(),
            ),
            power: Some(PowerSection {
                hpa_efficiency: Some(self.power.hpa_efficiency),
                dc_power_max_w: Some(self.power.dc_power_max_w),
                bandwidth_total_hz: Some(self.power.bandwidth_total_hz),
                rf_power_max_w: Some(self.power.rf_power_max_w),
            }),
            antenna: Some(AntennaSection {
                aperture_ratio: Some(self.antenna.aperture_ratio),
                carrier_frequency_hz: Some(self.antenna.carrier_frequency_hz),
                max_gain: Some(self.antenna.max_gain),
                aperture_efficiency: None,
            }),
            rx_gain_dbi: Some(self.rx_gain_dbi),
            system_temperature_k: Some(self.system_temperature_k),
            min_elevation_deg: Some(self.min_elevation_deg),
            beamwidth_deg: Some(self.beamwidth_deg),
            timeslot_duration_s: Some(self.timeslot_duration_s),
            num_timeslots: Some(self.num_timeslots),
            beam_bw_cap_hz: Some(self.beam_bw_cap_hz),
            beam_power_cap_w: Some(self.beam_power_cap_w),
            eta_bps: Some(self.eta_bps),
            rng_seed: Some(self.rng_seed),
            user_spread_km: Some(self.user_spread_km),
            demand: Some(self.demand),
            cities: Some(self.cities.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, "must be positive and finite"))
    }
}

/// Uniformly spaced equatorial ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSection {
    pub num_satellites: usize,
    #[serde(default = "default_altitude")]
    pub altitude_km: f64,
    #[serde(default)]
    pub first_longitude_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude_rate_deg_per_s: Option<f64>,
}

fn default_altitude() -> f64 {
    DEFAULT_ALTITUDE_KM
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteEntry {
    pub initial_longitude_deg: f64,
    #[serde(default = "default_altitude")]
    pub altitude_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude_rate_deg_per_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    pub hpa_efficiency: Option<f64>,
    pub dc_power_max_w: Option<f64>,
    pub bandwidth_total_hz: Option<f64>,
    pub rf_power_max_w: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaSection {
    pub aperture_ratio: Option<f64>,
    pub carrier_frequency_hz: Option<f64>,
    /// Linear peak gain; derived from the aperture when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aperture_efficiency: Option<f64>,
}

/// On-disk scenario document. Absent fields take the documented defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constellation: Option<ConstellationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satellites: Option<Vec<SatelliteEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antenna: Option<AntennaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_gain_dbi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_temperature_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_elevation_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beamwidth_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeslot_duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_timeslots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_bw_cap_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_power_cap_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_spread_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<DemandModel>,
    /// Mandatory.
    pub cities: Option<Vec<City>>,
}

impl ScenarioFile {
    /// Applies defaults and validates.
    pub fn resolve(self) -> Result<ScenarioConfig> {
        let cities = self
            .cities
            .ok_or_else(|| Error::config("cities", "missing mandatory field"))?;

        let satellites = match (self.satellites, self.constellation) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "satellites",
                    "give either `satellites` or `constellation`, not both",
                ))
            }
            (Some(list), None) => list
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let rate = s
                        .longitude_rate_deg_per_s
                        .unwrap_or_else(|| crate::geometry::default_longitude_rate(s.altitude_km));
                    SatelliteOrbit::new(s.initial_longitude_deg, s.altitude_km, rate)
                        .map_err(|e| Error::config(format!("satellites[{i}]"), e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?,
            (None, c) => {
                let c = c.unwrap_or(ConstellationSection {
                    num_satellites: DEFAULT_NUM_SATELLITES,
                    altitude_km: DEFAULT_ALTITUDE_KM,
                    first_longitude_deg: 0.0,
                    longitude_rate_deg_per_s: None,
                });
                uniform_ring(&c)?
            }
        };

        let p = self.power.unwrap_or_default();
        let power = PowerParams {
            hpa_efficiency: p.hpa_efficiency.unwrap_or(DEFAULT_HPA_EFFICIENCY),
            dc_power_max_w: p.dc_power_max_w.unwrap_or(DEFAULT_DC_POWER_MAX_W),
            bandwidth_total_hz: p.bandwidth_total_hz.unwrap_or(DEFAULT_BANDWIDTH_TOTAL_HZ),
            rf_power_max_w: p.rf_power_max_w.unwrap_or(DEFAULT_RF_POWER_MAX_W),
        };
        power.validate()?;

        let a = self.antenna.unwrap_or_default();
        let aperture_ratio = a.aperture_ratio.unwrap_or(DEFAULT_APERTURE_RATIO);
        if !(aperture_ratio > 0.5 && aperture_ratio.is_finite()) {
            return Err(Error::config("antenna.aperture_ratio", "must exceed 0.5"));
        }
        let efficiency = a.aperture_efficiency.unwrap_or(DEFAULT_APERTURE_EFFICIENCY);
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::config("antenna.aperture_efficiency", "must lie in (0, 1]"));
        }
        let max_gain = a
            .max_gain
            .unwrap_or_else(|| AntennaConfig::aperture_gain(aperture_ratio, efficiency));
        let antenna = AntennaConfig::new(
            aperture_ratio,
            max_gain,
            a.carrier_frequency_hz.unwrap_or(DEFAULT_CARRIER_FREQUENCY_HZ),
        )
        .map_err(|e| Error::config("antenna", e.to_string()))?;

        let beamwidth_deg = match self.beamwidth_deg {
            Some(b) => b,
            None => half_power_beamwidth(aperture_ratio)
                .map_err(|e| Error::config("antenna.aperture_ratio", e.to_string()))?,
        };

        let cfg = ScenarioConfig {
            satellites,
            power,
            antenna,
            rx_gain_dbi: self.rx_gain_dbi.unwrap_or(DEFAULT_RX_GAIN_DBI),
            system_temperature_k: self.system_temperature_k.unwrap_or(DEFAULT_SYSTEM_TEMPERATURE_K),
            min_elevation_deg: self.min_elevation_deg.unwrap_or(DEFAULT_MIN_ELEVATION_DEG),
            beamwidth_deg,
            timeslot_duration_s: self.timeslot_duration_s.unwrap_or(DEFAULT_TIMESLOT_DURATION_S),
            num_timeslots: self.num_timeslots.unwrap_or(DEFAULT_NUM_TIMESLOTS),
            beam_bw_cap_hz: self.beam_bw_cap_hz.unwrap_or(DEFAULT_BEAM_BW_CAP_HZ),
            beam_power_cap_w: self.beam_power_cap_w.unwrap_or(DEFAULT_BEAM_POWER_CAP_W),
            eta_bps: self.eta_bps.unwrap_or(DEFAULT_ETA_BPS),
            rng_seed: self.rng_seed.unwrap_or(DEFAULT_RNG_SEED),
            user_spread_km: self.user_spread_km.unwrap_or(DEFAULT_USER_SPREAD_KM),
            demand: self.demand.unwrap_or_default(),
            cities,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn uniform_ring(c: &ConstellationSection) -> Result<Vec<SatelliteOrbit<f64>>> {
    if c.num_satellites == 0 {
        return Err(Error::config("constellation.num_satellites", "must be at least 1"));
    }
    let spacing = 360.0 / c.num_satellites as f64;
    (0..c.num_satellites)
        .map(|i| {
            let lon = c.first_longitude_deg + spacing * i as f64;
            let rate = c
                .longitude_rate_deg_per_s
                .unwrap_or_else(|| crate::geometry::default_longitude_rate(c.altitude_km));
            SatelliteOrbit::new(lon, c.altitude_km, rate).map_err(|e| Error::config("constellation", e.to_string()))
        })
        .collect()
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(
            if path == "." { "<root>".to_string() } else { path },
            e.inner().to_string(),
        )
    })?;
    file.resolve()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}

pub fn save_scenario(config: &ScenarioConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, config.to_json()).map_err(|e| Error::io(path, e))
}

/// Demand series for a user at `position`, drawn from `rng`.
///
/// `D(t) = max(0, A (1 + sin(2π (t Δt + φ) / day)) / 2 + n_t)` with
/// amplitude `A` uniform in the configured range, phase `φ` equal to the
/// user's solar-time offset (longitude / 15 h) plus uniform jitter, and
/// Gaussian noise `n_t`.
pub fn generate_demand<R: Rng>(position: &SurfacePoint<f64>, config: &ScenarioConfig, rng: &mut R) -> Vec<f64> {
    let m = &config.demand;
    let amplitude = if m.amplitude_max_bps > m.amplitude_min_bps {
        rng.random_range(m.amplitude_min_bps..=m.amplitude_max_bps)
    } else {
        m.amplitude_min_bps
    };
    let jitter_h = if m.phase_jitter_h > 0.0 {
        rng.random_range(-m.phase_jitter_h..=m.phase_jitter_h)
    } else {
        0.0
    };
    let phase_s = (position.lon_deg / 15.0 + jitter_h) * 3600.0;
    let noise = Normal::new(0.0, m.noise_std_bps).expect("validated std");
    (0..config.num_timeslots)
        .map(|t| {
            let arg = 2.0 * std::f64::consts::PI * (config.slot_time(t) + phase_s) / DAY_S;
            let n = if m.noise_std_bps > 0.0 { noise.sample(rng) } else { 0.0 };
            (amplitude * (1.0 + arg.sin()) / 2.0 + n).max(0.0)
        })
        .collect()
}

/// Places users around each city and draws their demand series.
/// Deterministic for a given config (including `rng_seed`).
pub fn generate_users(config: &ScenarioConfig) -> Vec<UserTerminal<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let spread = Normal::new(0.0, config.user_spread_km.max(0.0)).expect("validated spread");
    let mut positions = Vec::new();
    for city in &config.cities {
        let count = rng.random_range(city.users_min..=city.users_max);
        let centre = SurfacePoint {
            lat_deg: city.lat_deg,
            lon_deg: city.lon_deg,
        };
        for _ in 0..count {
            let (dn, de) = if config.user_spread_km > 0.0 {
                (spread.sample(&mut rng), spread.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            positions.push(centre.offset_km(dn, de));
        }
    }
    positions
        .into_iter()
        .enumerate()
        .map(|(id, position)| {
            let demand_bps = generate_demand(&position, config, &mut rng);
            UserTerminal {
                id,
                position,
                demand_bps,
            }
        })
        .collect()
}
