//! Network geometry, physical constants and the discrete receive-beam sets.
//!
//! On disk the configuration is a TOML key-value file with angles in degrees;
//! in memory every angle is in radians.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the deployment plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Direction of `other` as seen from `self`, radians in (-pi, pi].
    pub fn bearing_to(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// All fixed physical and search-space parameters of one deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub n_ues: usize,
    pub n_aps: usize,
    /// Per-UE power cap, watts.
    pub max_power: f64,
    /// System bandwidth, Hz.
    pub bandwidth: f64,
    /// Receiver noise power, watts.
    pub noise_power: f64,
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
    pub area_width: f64,
    pub area_height: f64,
    pub ap_positions: Vec<Point>,
    /// Axis (radians) from which each AP's receive direction is measured.
    pub ap_boresight_reference: Vec<f64>,
    /// Receive beamwidth set, radians, strictly increasing.
    pub beamwidth_set: Vec<f64>,
    /// Receive direction set, radians, strictly increasing.
    pub direction_set: Vec<f64>,
    pub ue_tx_beamwidth: f64,
    /// Half-open range `[min, max)` of UE transmit directions, radians.
    pub ue_tx_direction_range: (f64, f64),
    pub sidelobe_gain: f64,
    /// UE-AP separations at or below this distance (meters) are rejected.
    pub min_distance: f64,
}

/// Dimensions a trained model or a dataset must agree with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    pub n_ues: usize,
    pub n_aps: usize,
    pub n_widths: usize,
    pub n_directions: usize,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

impl Default for NetworkConfig {
    /// Ten UEs, three APs on the top edge of a 20 m x 30 m area, 28 GHz.
    fn default() -> Self {
        let (width, height) = (20.0, 30.0);
        let n_aps = 3;
        let bandwidth: f64 = 100e6;
        // thermal floor -174 dBm/Hz plus a 9 dB noise figure
        let noise_dbm = -174.0 + 10.0 * bandwidth.log10() + 9.0;
        Self {
            n_ues: 10,
            n_aps,
            max_power: dbm_to_watts(24.0),
            bandwidth,
            noise_power: dbm_to_watts(noise_dbm),
            carrier_freq: 28e9,
            area_width: width,
            area_height: height,
            ap_positions: edge_positions(n_aps, width, height),
            ap_boresight_reference: vec![180f64.to_radians(); n_aps],
            beamwidth_set: degrees(&[30.0, 45.0, 60.0]),
            direction_set: degrees(&[80.0, 90.0, 100.0]),
            ue_tx_beamwidth: 90f64.to_radians(),
            ue_tx_direction_range: (0.0, TAU),
            sidelobe_gain: 0.1,
            min_distance: 0.5,
        }
    }
}

/// APs evenly spaced along the top edge (`y = height / 2`).
pub fn edge_positions(n_aps: usize, width: f64, height: f64) -> Vec<Point> {
    (0..n_aps)
        .map(|k| {
            let x = -width / 2.0 + width * (k as f64 + 0.5) / n_aps as f64;
            Point::new(x, height / 2.0)
        })
        .collect()
}

fn degrees(values: &[f64]) -> Vec<f64> {
    values.iter().map(|d| d.to_radians()).collect()
}

fn check_angle_set(name: &str, set: &[f64]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    if set.iter().any(|&a| !(a > 0.0 && a < TAU)) {
        return Err(Error::Config(format!("{name} values must lie in (0, 360) degrees")));
    }
    if set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n_ues == 0 {
            return fail("n_ues must be at least 1");
        }
        if self.n_aps == 0 {
            return fail("n_aps must be at least 1");
        }
        for (name, v) in [
            ("max_power", self.max_power),
            ("bandwidth", self.bandwidth),
            ("noise_power", self.noise_power),
            ("carrier_freq", self.carrier_freq),
            ("area_width", self.area_width),
            ("area_height", self.area_height),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        if !(self.min_distance.is_finite() && self.min_distance >= 0.0) {
            return fail("min_distance must be non-negative");
        }
        check_angle_set("beamwidth set", &self.beamwidth_set)?;
        check_angle_set("direction set", &self.direction_set)?;
        if self.ap_positions.len() != self.n_aps {
            return fail("number of AP positions must equal n_aps");
        }
        if self.ap_boresight_reference.len() != self.n_aps {
            return fail("number of AP boresight references must equal n_aps");
        }
        for (i, a) in self.ap_positions.iter().enumerate() {
            if !(a.x.is_finite() && a.y.is_finite()) {
                return fail("AP positions must be finite");
            }
            if self.ap_positions[..i].iter().any(|b| b == a) {
                return fail("AP positions must be pairwise distinct");
            }
        }
        if !(self.ue_tx_beamwidth > 0.0 && self.ue_tx_beamwidth <= TAU) {
            return fail("ue_tx_beamwidth must lie in (0, 360] degrees");
        }
        let (lo, hi) = self.ue_tx_direction_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return fail("ue_tx_direction_range must satisfy min < max");
        }
        if !(self.sidelobe_gain > 0.0 && self.sidelobe_gain < 1.0) {
            return fail("sidelobe_gain must lie in (0, 1)");
        }
        Ok(())
    }

    /// Number of beam configurations, `(|widths| * |directions|)^M`.
    pub fn n_beam_configs(&self) -> usize {
        (self.beamwidth_set.len() * self.direction_set.len()).pow(self.n_aps as u32)
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint {
            n_ues: self.n_ues,
            n_aps: self.n_aps,
            n_widths: self.beamwidth_set.len(),
            n_directions: self.direction_set.len(),
        }
    }

    pub fn half_width(&self) -> f64 {
        self.area_width / 2.0
    }

    pub fn half_height(&self) -> f64 {
        self.area_height / 2.0
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x.abs() <= self.half_width() && p.y.abs() <= self.half_height()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&ConfigFile::from(self)).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let cfg = NetworkConfig::from(file);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }
}

/// On-disk layout. Angles in degrees, powers in watts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n_ues: usize,
    n_aps: usize,
    max_power_w: f64,
    bandwidth_hz: f64,
    noise_power_w: f64,
    carrier_freq_hz: f64,
    area_width_m: f64,
    area_height_m: f64,
    #[serde(default)]
    min_distance_m: Option<f64>,
    /// Defaults to APs evenly spaced along the top edge.
    #[serde(default)]
    ap_positions_m: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    ap_boresight_reference_deg: Option<Vec<f64>>,
    beamwidths_deg: Vec<f64>,
    directions_deg: Vec<f64>,
    ue_tx_beamwidth_deg: f64,
    ue_tx_direction_range_deg: [f64; 2],
    sidelobe_gain: f64,
}

impl From<&NetworkConfig> for ConfigFile {
    fn from(c: &NetworkConfig) -> Self {
        let deg = |v: &[f64]| v.iter().map(|r| r.to_degrees()).collect::<Vec<_>>();
        Self {
            n_ues: c.n_ues,
            n_aps: c.n_aps,
            max_power_w: c.max_power,
            bandwidth_hz: c.bandwidth,
            noise_power_w: c.noise_power,
            carrier_freq_hz: c.carrier_freq,
            area_width_m: c.area_width,
            area_height_m: c.area_height,
            min_distance_m: Some(c.min_distance),
            ap_positions_m: Some(c.ap_positions.iter().map(|p| [p.x, p.y]).collect()),
            ap_boresight_reference_deg: Some(deg(&c.ap_boresight_reference)),
            beamwidths_deg: deg(&c.beamwidth_set),
            directions_deg: deg(&c.direction_set),
            ue_tx_beamwidth_deg: c.ue_tx_beamwidth.to_degrees(),
            ue_tx_direction_range_deg: [
                c.ue_tx_direction_range.0.to_degrees(),
                c.ue_tx_direction_range.1.to_degrees(),
            ],
            sidelobe_gain: c.sidelobe_gain,
        }
    }
}

impl From<ConfigFile> for NetworkConfig {
    fn from(f: ConfigFile) -> Self {
        let ap_positions = match f.ap_positions_m {
            Some(ps) => ps.into_iter().map(|[x, y]| Point::new(x, y)).collect(),
            None => edge_positions(f.n_aps, f.area_width_m, f.area_height_m),
        };
        let ap_boresight_reference = match f.ap_boresight_reference_deg {
            Some(v) => degrees(&v),
            None => vec![180f64.to_radians(); f.n_aps],
        };
        Self {
            n_ues: f.n_ues,
            n_aps: f.n_aps,
            max_power: f.max_power_w,
            bandwidth: f.bandwidth_hz,
            noise_power: f.noise_power_w,
            carrier_freq: f.carrier_freq_hz,
            area_width: f.area_width_m,
            area_height: f.area_height_m,
            ap_positions,
            ap_boresight_reference,
            beamwidth_set: degrees(&f.beamwidths_deg),
            direction_set: degrees(&f.directions_deg),
            ue_tx_beamwidth: f.ue_tx_beamwidth_deg.to_radians(),
            ue_tx_direction_range: (
                f.ue_tx_direction_range_deg[0].to_radians(),
                f.ue_tx_direction_range_deg[1].to_radians(),
            ),
            sidelobe_gain: f.sidelobe_gain,
            min_distance: f.min_distance_m.unwrap_or(0.5),
        }
    }
}
