//! Spherical-Earth geometry for an equatorial constellation.
//!
//! Positions are expressed in an Earth-fixed Cartesian frame (km) with the
//! x axis through (0°N, 0°E) and z through the north pole. Users are static
//! in this frame; satellites move along the equator at a constant rate
//! relative to it.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::golden_section_max;
use crate::scalar::Scalar;

/// Mean Earth radius (km).
pub const EARTH_RADIUS_KM: f64 = 6378.0;
/// Earth gravitational parameter (km^3/s^2).
pub const EARTH_MU_KM3_S2: f64 = 398_600.441_8;
/// Sidereal day (s).
pub const SIDEREAL_DAY_S: f64 = 86_164.0;

/// Slack (degrees) applied to elevation comparisons so that points built to
/// sit exactly on the FoV edge are not rejected by rounding.
pub const FOV_EPS_DEG: f64 = 1e-9;

/// Number of uniform orbit samples taken before refining the pairwise
/// maximum angle.
pub const ORBIT_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EcefVector<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> EcefVector<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// Angle between two vectors (radians), via `atan2(|a×b|, a·b)`.
    pub fn angle_to(&self, o: &Self) -> T {
        let c = self.cross(o).norm();
        let d = self.dot(o);
        if c == T::zero() && d == T::zero() {
            return T::zero();
        }
        c.atan2(d)
    }
}

impl<T: Scalar> Add for EcefVector<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for EcefVector<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Mul<T> for EcefVector<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A point on the Earth's surface (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SurfacePoint<T> {
    pub lat_deg: T,
    pub lon_deg: T,
}

impl<T: Scalar> SurfacePoint<T> {
    /// Validated constructor; latitude must lie in [-90, 90] and longitude
    /// in [-180, 180].
    pub fn new(lat_deg: T, lon_deg: T) -> Result<Self> {
        let p = Self { lat_deg, lon_deg };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ninety = T::lit(90.0);
        let half_turn = T::lit(180.0);
        if !(self.lat_deg.is_finite() && self.lat_deg.abs() <= ninety) {
            return Err(Error::Domain(format!("latitude {} out of range", self.lat_deg)));
        }
        if !(self.lon_deg.is_finite() && self.lon_deg.abs() <= half_turn) {
            return Err(Error::Domain(format!("longitude {} out of range", self.lon_deg)));
        }
        Ok(())
    }

    pub fn to_ecef(&self) -> EcefVector<T> {
        let r = T::lit(EARTH_RADIUS_KM);
        let (lat, lon) = (self.lat_deg.to_radians(), self.lon_deg.to_radians());
        EcefVector::new(r * lat.cos() * lon.cos(), r * lat.cos() * lon.sin(), r * lat.sin())
    }

    /// Radial projection of an arbitrary non-zero vector onto the surface.
    pub fn from_ecef(v: &EcefVector<T>) -> Self {
        let horiz = v.x.hypot(v.y);
        Self {
            lat_deg: v.z.atan2(horiz).to_degrees(),
            lon_deg: wrap_longitude(v.y.atan2(v.x).to_degrees()),
        }
    }

    /// Outward unit normal.
    pub fn up(&self) -> EcefVector<T> {
        self.to_ecef() * (T::one() / T::lit(EARTH_RADIUS_KM))
    }

    /// Great-circle distance (km).
    pub fn great_circle_km(&self, other: &Self) -> T {
        self.to_ecef().angle_to(&other.to_ecef()) * T::lit(EARTH_RADIUS_KM)
    }

    /// Moves `north_km`/`east_km` along the local tangent plane, mapped back
    /// onto the sphere. Latitude is clamped to the poles.
    pub fn offset_km(&self, north_km: T, east_km: T) -> Self {
        let r = T::lit(EARTH_RADIUS_KM);
        let ninety = T::lit(90.0);
        let lat = (self.lat_deg + (north_km / r).to_degrees()).max(-ninety).min(ninety);
        let cos_lat = lat.to_radians().cos().max(T::lit(1e-6));
        let lon = wrap_longitude(self.lon_deg + (east_km / (r * cos_lat)).to_degrees());
        Self {
            lat_deg: lat,
            lon_deg: lon,
        }
    }
}

/// Maps any longitude (degrees) into [-180, 180).
pub fn wrap_longitude<T: Scalar>(deg: T) -> T {
    let turn = T::lit(360.0);
    let half = T::lit(180.0);
    let mut w = (deg + half) % turn;
    if w < T::zero() {
        w = w + turn;
    }
    w - half
}

/// Longitude drift of a circular equatorial orbit relative to the
/// Earth-fixed frame (deg/s): Keplerian mean motion minus Earth rotation.
pub fn default_longitude_rate<T: Scalar>(altitude_km: T) -> T {
    let r = T::lit(EARTH_RADIUS_KM) + altitude_km;
    let period = T::lit(2.0) * T::PI() * (r * r * r / T::lit(EARTH_MU_KM3_S2)).sqrt();
    T::lit(360.0) / period - T::lit(360.0 / SIDEREAL_DAY_S)
}

/// Circular equatorial orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteOrbit<T> {
    pub initial_longitude_deg: T,
    pub altitude_km: T,
    pub longitude_rate_deg_per_s: T,
}

impl<T: Scalar> SatelliteOrbit<T> {
    pub fn new(initial_longitude_deg: T, altitude_km: T, longitude_rate_deg_per_s: T) -> Result<Self> {
        let o = Self {
            initial_longitude_deg: wrap_longitude(initial_longitude_deg),
            altitude_km,
            longitude_rate_deg_per_s,
        };
        o.validate()?;
        Ok(o)
    }

    /// Orbit drifting at [`default_longitude_rate`].
    pub fn with_default_rate(initial_longitude_deg: T, altitude_km: T) -> Result<Self> {
        Self::new(initial_longitude_deg, altitude_km, default_longitude_rate(altitude_km))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_km.is_finite() && self.altitude_km > T::zero()) {
            return Err(Error::Domain(format!("altitude {} must be positive", self.altitude_km)));
        }
        if !self.initial_longitude_deg.is_finite() || !self.longitude_rate_deg_per_s.is_finite() {
            return Err(Error::Domain("orbit longitude/rate must be finite".into()));
        }
        Ok(())
    }

    /// Distance of the orbit from the Earth's centre (km).
    pub fn radius_km(&self) -> T {
        T::lit(EARTH_RADIUS_KM) + self.altitude_km
    }

    /// Sub-satellite longitude at `t` seconds, wrapped to [-180, 180).
    pub fn longitude_at(&self, t: T) -> T {
        wrap_longitude(self.initial_longitude_deg + self.longitude_rate_deg_per_s * t)
    }
}

fn orbit_point<T: Scalar>(radius_km: T, lon_rad: T) -> EcefVector<T> {
    EcefVector::new(radius_km * lon_rad.cos(), radius_km * lon_rad.sin(), T::zero())
}

pub fn satellite_position<T: Scalar>(orbit: &SatelliteOrbit<T>, t: T) -> EcefVector<T> {
    orbit_point(orbit.radius_km(), orbit.longitude_at(t).to_radians())
}

pub fn slant_range<T: Scalar>(sat: &EcefVector<T>, user: &SurfacePoint<T>) -> T {
    (*sat - user.to_ecef()).norm()
}

/// Elevation of `sat` above the local horizon at `user` (degrees).
pub fn elevation_angle<T: Scalar>(user: &SurfacePoint<T>, sat: &EcefVector<T>) -> T {
    let up = user.up();
    let los = *sat - user.to_ecef();
    let vertical = up.dot(&los);
    let horizontal = (los - up * vertical).norm();
    vertical.atan2(horizontal).to_degrees()
}

/// Whether `point` sees `sat` at or above `min_elevation_deg`.
pub fn in_fov<T: Scalar>(sat: &EcefVector<T>, point: &SurfacePoint<T>, min_elevation_deg: T) -> bool {
    elevation_angle(point, sat) >= min_elevation_deg - T::lit(FOV_EPS_DEG)
}

/// Angle at `vertex` between the rays towards `a` and `b` (radians).
pub fn vertex_angle<T: Scalar>(vertex: &EcefVector<T>, a: &EcefVector<T>, b: &EcefVector<T>) -> T {
    (*a - *vertex).angle_to(&(*b - *vertex))
}

/// Off-boresight angle of `user` for a beam from `sat` pointed at
/// `beam_center` (radians).
pub fn boresight_angle<T: Scalar>(sat: &EcefVector<T>, beam_center: &SurfacePoint<T>, user: &SurfacePoint<T>) -> T {
    vertex_angle(sat, &beam_center.to_ecef(), &user.to_ecef())
}

/// Angle subtended by two ground points, seen from the orbit point at
/// longitude `lon_rad`.
pub fn angle_from_orbit<T: Scalar>(k: &EcefVector<T>, l: &EcefVector<T>, radius_km: T, lon_rad: T) -> T {
    vertex_angle(&orbit_point(radius_km, lon_rad), k, l)
}

/// Largest angle under which the two users are seen from any point of the
/// orbit circle (radians).
///
/// Samples [`ORBIT_SAMPLES`] equally spaced longitudes, then refines the best
/// bracket with golden-section search.
pub fn max_orbit_angle<T: Scalar>(user_k: &SurfacePoint<T>, user_l: &SurfacePoint<T>, orbit: &SatelliteOrbit<T>) -> T {
    let k = user_k.to_ecef();
    let l = user_l.to_ecef();
    if k == l {
        return T::zero();
    }
    let radius = orbit.radius_km();
    let step = T::lit(2.0) * T::PI() / T::from_count(ORBIT_SAMPLES);
    let f = |lon: T| angle_from_orbit(&k, &l, radius, lon);

    let (mut best_i, mut best) = (0usize, T::neg_infinity());
    for i in 0..ORBIT_SAMPLES {
        let v = f(step * T::from_count(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let centre = step * T::from_count(best_i);
    let (_, refined) = golden_section_max(f, centre - step, centre + step, T::tol(1e-10));
    refined.max(best)
}
