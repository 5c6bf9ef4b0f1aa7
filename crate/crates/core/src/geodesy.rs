//! WGS-84 coordinate conversions and satellite look angles.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::{Add, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WGS-84 semi-major axis (m).
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

const MIN_ORIGIN_NORM: f64 = 1.0e3;
const MIN_LOS_RANGE: f64 = 1.0;
const LATITUDE_MAX_ITERATIONS: usize = 10;
const LATITUDE_TOLERANCE: f64 = 1.0e-12;

/// Earth-centered Earth-fixed position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EcefPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefPosition {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: EcefPosition) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Sub for EcefPosition {
    type Output = EcefPosition;

    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Add for EcefPosition {
    type Output = EcefPosition;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl From<[f64; 3]> for EcefPosition {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Latitude/longitude in radians, height in meters above the ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeodeticPosition {
    pub latitude: f64,
    pub longitude: f64,
    pub height: f64,
}

impl GeodeticPosition {
    pub const fn new(latitude: f64, longitude: f64, height: f64) -> Self {
        Self {
            latitude,
            longitude,
            height,
        }
    }

    pub fn from_degrees(latitude_deg: f64, longitude_deg: f64, height: f64) -> Self {
        Self::new(
            latitude_deg.to_radians(),
            longitude_deg.to_radians(),
            height,
        )
    }
}

/// Local east/north/up offset in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnuVector {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

impl EnuVector {
    pub const fn new(east: f64, north: f64, up: f64) -> Self {
        Self { east, north, up }
    }

    pub fn horizontal_norm(self) -> f64 {
        self.east.hypot(self.north)
    }

    pub fn norm(self) -> f64 {
        (self.east * self.east + self.north * self.north + self.up * self.up).sqrt()
    }
}

fn prime_vertical_radius(sin_lat: f64) -> f64 {
    WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt()
}

pub fn ecef_to_geodetic(p: EcefPosition) -> Result<GeodeticPosition> {
    let norm = p.norm();
    if !(norm > MIN_ORIGIN_NORM) {
        return Err(Error::NearSingularOrigin { norm });
    }
    let rho = p.x.hypot(p.y);
    let longitude = p.y.atan2(p.x);

    // Fixed-point iteration on tan(lat) = (z + e^2 N sin(lat)) / rho.
    let mut latitude = p.z.atan2(rho * (1.0 - WGS84_E2));
    for _ in 0..LATITUDE_MAX_ITERATIONS {
        let n = prime_vertical_radius(latitude.sin());
        let next = (p.z + WGS84_E2 * n * latitude.sin()).atan2(rho);
        let done = (next - latitude).abs() < LATITUDE_TOLERANCE;
        latitude = next;
        if done {
            break;
        }
    }

    let (sin_lat, cos_lat) = latitude.sin_cos();
    let n = prime_vertical_radius(sin_lat);
    // Valid at the poles, unlike rho / cos(lat) - N.
    let height = rho * cos_lat + p.z * sin_lat - WGS84_A * WGS84_A / n;

    Ok(GeodeticPosition::new(latitude, longitude, height))
}

pub fn geodetic_to_ecef(g: GeodeticPosition) -> EcefPosition {
    let (sin_lat, cos_lat) = g.latitude.sin_cos();
    let (sin_lon, cos_lon) = g.longitude.sin_cos();
    let n = prime_vertical_radius(sin_lat);
    EcefPosition::new(
        (n + g.height) * cos_lat * cos_lon,
        (n + g.height) * cos_lat * sin_lon,
        (n * (1.0 - WGS84_E2) + g.height) * sin_lat,
    )
}

/// Rows are the local east, north and up unit vectors expressed in ECEF.
pub fn enu_rotation(origin: GeodeticPosition) -> Matrix3<f64> {
    let (sin_lat, cos_lat) = origin.latitude.sin_cos();
    let (sin_lon, cos_lon) = origin.longitude.sin_cos();
    Matrix3::new(
        -sin_lon,
        cos_lon,
        0.0,
        -sin_lat * cos_lon,
        -sin_lat * sin_lon,
        cos_lat,
        cos_lat * cos_lon,
        cos_lat * sin_lon,
        sin_lat,
    )
}

pub fn ecef_to_enu(p: EcefPosition, origin: EcefPosition) -> Result<EnuVector> {
    let rotation = enu_rotation(ecef_to_geodetic(origin)?);
    let local = rotation * (p - origin).to_vector();
    Ok(EnuVector::new(local.x, local.y, local.z))
}

pub fn enu_to_ecef(enu: EnuVector, origin: EcefPosition) -> Result<EcefPosition> {
    let rotation = enu_rotation(ecef_to_geodetic(origin)?);
    let offset = rotation.transpose() * Vector3::new(enu.east, enu.north, enu.up);
    Ok(origin + EcefPosition::from_vector(&offset))
}

/// Elevation in [-pi/2, pi/2] and azimuth in [0, 2pi), clockwise from north.
pub fn elevation_azimuth(receiver: EcefPosition, satellite: EcefPosition) -> Result<(f64, f64)> {
    let los = satellite - receiver;
    let range = los.norm();
    if !(range >= MIN_LOS_RANGE) {
        return Err(Error::DegenerateGeometry { range });
    }
    let rotation = enu_rotation(ecef_to_geodetic(receiver)?);
    let local = rotation * (los.to_vector() / range);
    let elevation = local.z.clamp(-1.0, 1.0).asin();
    let mut azimuth = local.x.atan2(local.y);
    if azimuth < 0.0 {
        azimuth += TAU;
    }
    if azimuth >= TAU {
        azimuth -= TAU;
    }
    debug_assert!((-FRAC_PI_2..=FRAC_PI_2).contains(&elevation));
    debug_assert!((0.0..2.0 * PI).contains(&azimuth));
    Ok((elevation, azimuth))
}
