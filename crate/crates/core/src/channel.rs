//! Sectored-antenna link gains over a log-distance UMi line-of-sight path
//! loss, plus the SINR and rate expressions built on them.
//!
//! The gain `h[m][n]` of a link depends on the beam configuration only
//! through AP `m`'s own receive beam, which is what lets the interference-free
//! rate be found with `M * |widths| * |directions|` link evaluations.

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scenario::{BeamConfig, Scenario, UeState};

use std::f64::consts::{PI, TAU};

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Gain of a cone pattern: constant main lobe of width `beamwidth` around
/// `boresight`, constant `sidelobe_gain` elsewhere, normalized so that
/// `beamwidth * main + (2pi - beamwidth) * sidelobe = 2pi`.
pub fn antenna_gain<T: Scalar>(
    beamwidth: T,
    boresight: T,
    angle_to_peer: T,
    sidelobe_gain: T,
) -> Result<T> {
    let tau = T::lit(TAU);
    if !(beamwidth > T::zero() && beamwidth <= tau) {
        return Err(Error::Config(format!(
            "beamwidth {beamwidth} rad outside (0, 2pi]"
        )));
    }
    let offset = wrap_angle((angle_to_peer - boresight).as_f64()).abs();
    if offset <= (beamwidth / T::lit(2.0)).as_f64() {
        Ok((tau - (tau - beamwidth) * sidelobe_gain) / beamwidth)
    } else {
        Ok(sidelobe_gain)
    }
}

/// UMi street-canyon LoS path loss in dB, `d` in meters and `carrier_freq` in Hz.
pub fn path_loss_db(distance: f64, carrier_freq: f64) -> f64 {
    32.4 + 21.0 * distance.log10() + 20.0 * (carrier_freq / 1e9).log10()
}

fn link_gain(
    cfg: &NetworkConfig,
    ue: &UeState,
    n: usize,
    m: usize,
    rx_width: f64,
    rx_direction: f64,
) -> Result<f64> {
    let ap = cfg.ap_positions[m];
    let d = ue.position.distance(&ap);
    if d <= cfg.min_distance {
        return Err(Error::TooClose {
            ue: n,
            ap: m,
            distance: d,
            min_distance: cfg.min_distance,
        });
    }
    let g_tx = antenna_gain(
        cfg.ue_tx_beamwidth,
        ue.tx_direction,
        ue.position.bearing_to(&ap),
        cfg.sidelobe_gain,
    )?;
    let g_rx = antenna_gain(
        rx_width,
        cfg.ap_boresight_reference[m] + rx_direction,
        ap.bearing_to(&ue.position),
        cfg.sidelobe_gain,
    )?;
    Ok(g_tx * g_rx * 10f64.powf(-path_loss_db(d, cfg.carrier_freq) / 10.0))
}

/// Gain between UE `n` and AP `m` under configuration `q`.
pub fn channel_gain<T: Scalar>(
    cfg: &NetworkConfig,
    scenario: &Scenario,
    q: &BeamConfig,
    m: usize,
    n: usize,
) -> Result<T> {
    if m >= cfg.n_aps || n >= scenario.len() {
        return Err(Error::Dimension(format!(
            "link ({m}, {n}) out of range for {} APs and {} UEs",
            cfg.n_aps,
            scenario.len()
        )));
    }
    q.validate(cfg)?;
    let ue = &scenario.rows()[n];
    link_gain(
        cfg,
        ue,
        n,
        m,
        cfg.beamwidth_set[q.widths[m]],
        cfg.direction_set[q.directions[m]],
    )
    .map(T::lit)
}

/// `M x N` matrix of strictly positive link gains for one beam configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T> {
    n_aps: usize,
    n_ues: usize,
    gains: Vec<T>,
}

impl<T: Scalar> ChannelMatrix<T> {
    /// `rows[m][n]` is the gain from UE `n` to AP `m`.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_aps = rows.len();
        let n_ues = rows.first().map_or(0, Vec::len);
        if n_aps == 0 || n_ues == 0 {
            return Err(Error::Empty("channel matrix"));
        }
        if rows.iter().any(|r| r.len() != n_ues) {
            return Err(Error::Dimension("ragged channel matrix rows".into()));
        }
        let gains: Vec<T> = rows.iter().flatten().copied().collect();
        if gains.iter().any(|&g| !(g.is_finite() && g > T::zero())) {
            return Err(Error::Config("channel gains must be positive and finite".into()));
        }
        Ok(Self {
            n_aps,
            n_ues,
            gains,
        })
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }

    pub fn n_ues(&self) -> usize {
        self.n_ues
    }

    #[inline]
    pub fn gain(&self, m: usize, n: usize) -> T {
        self.gains[m * self.n_ues + n]
    }

    #[inline]
    pub fn row(&self, m: usize) -> &[T] {
        &self.gains[m * self.n_ues..(m + 1) * self.n_ues]
    }
}

/// The scalars the rate expressions need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    pub max_power: T,
    pub noise_power: T,
    pub bandwidth: T,
}

impl<T: Scalar> LinkBudget<T> {
    pub fn new(max_power: T, noise_power: T, bandwidth: T) -> Self {
        Self {
            max_power,
            noise_power,
            bandwidth,
        }
    }

    pub fn from_config(cfg: &NetworkConfig) -> Self {
        Self::new(
            T::lit(cfg.max_power),
            T::lit(cfg.noise_power),
            T::lit(cfg.bandwidth),
        )
    }

    /// `W log2(1 + s)`.
    #[inline]
    pub fn rate(&self, sinr: T) -> T {
        self.bandwidth * sinr.ln_1p() / T::LN_2()
    }
}

/// Received interference plus noise at AP `m` for UE `n`.
#[inline]
pub(crate) fn interference<T: Scalar>(p: &[T], h: &ChannelMatrix<T>, noise: T, n: usize, m: usize) -> T {
    let row = h.row(m);
    let mut acc = noise;
    for (k, (&pk, &hk)) in p.iter().zip(row).enumerate() {
        if k != n {
            acc = acc + pk * hk;
        }
    }
    acc
}

/// SINR of UE `n` at AP `m`.
pub fn sinr<T: Scalar>(p: &[T], h: &ChannelMatrix<T>, noise_power: T, n: usize, m: usize) -> T {
    p[n] * h.gain(m, n) / interference(p, h, noise_power, n, m)
}

/// Rate of UE `n` at its best AP, bits/s.
pub fn achievable_rate<T: Scalar>(p: &[T], h: &ChannelMatrix<T>, budget: &LinkBudget<T>, n: usize) -> T {
    let best = (0..h.n_aps())
        .map(|m| sinr(p, h, budget.noise_power, n, m))
        .fold(T::zero(), T::max);
    budget.rate(best)
}

/// Link gains of every UE towards every AP under every receive beam of that AP.
///
/// Building one table per scenario makes each per-configuration channel
/// matrix a gather instead of a recomputation.
#[derive(Debug, Clone)]
pub struct LinkTable<T> {
    n_ues: usize,
    n_aps: usize,
    n_widths: usize,
    n_dirs: usize,
    /// Indexed `[m][w][d][n]`.
    gains: Vec<T>,
}

impl<T: Scalar> LinkTable<T> {
    pub fn build(cfg: &NetworkConfig, scenario: &Scenario) -> Result<Self> {
        scenario.validate(cfg)?;
        let (nw, nd) = (cfg.beamwidth_set.len(), cfg.direction_set.len());
        let mut gains = Vec::with_capacity(cfg.n_aps * nw * nd * scenario.len());
        for m in 0..cfg.n_aps {
            for &w in &cfg.beamwidth_set {
                for &d in &cfg.direction_set {
                    for (n, ue) in scenario.rows().iter().enumerate() {
                        gains.push(T::lit(link_gain(cfg, ue, n, m, w, d)?));
                    }
                }
            }
        }
        Ok(Self {
            n_ues: scenario.len(),
            n_aps: cfg.n_aps,
            n_widths: nw,
            n_dirs: nd,
            gains,
        })
    }

    fn beam_row(&self, m: usize, w: usize, d: usize) -> &[T] {
        let start = ((m * self.n_widths + w) * self.n_dirs + d) * self.n_ues;
        &self.gains[start..start + self.n_ues]
    }

    /// Channel matrix for configuration `q` (assumed valid for this table).
    pub fn channel(&self, q: &BeamConfig) -> ChannelMatrix<T> {
        let mut gains = Vec::with_capacity(self.n_aps * self.n_ues);
        for m in 0..self.n_aps {
            gains.extend_from_slice(self.beam_row(m, q.widths[m], q.directions[m]));
        }
        ChannelMatrix {
            n_aps: self.n_aps,
            n_ues: self.n_ues,
            gains,
        }
    }

    /// Interference-free rates: each UE alone at full power, best AP, best beam of that AP.
    pub fn interference_free_rates(&self, budget: &LinkBudget<T>) -> Vec<T> {
        (0..self.n_ues)
            .map(|n| {
                let mut best = T::zero();
                for m in 0..self.n_aps {
                    for w in 0..self.n_widths {
                        for d in 0..self.n_dirs {
                            best = best.max(self.beam_row(m, w, d)[n]);
                        }
                    }
                }
                budget.rate(budget.max_power * best / budget.noise_power)
            })
            .collect()
    }
}

/// Channel matrix of `scenario` under `q`.
pub fn channel_matrix<T: Scalar>(
    cfg: &NetworkConfig,
    scenario: &Scenario,
    q: &BeamConfig,
) -> Result<ChannelMatrix<T>> {
    q.validate(cfg)?;
    Ok(LinkTable::build(cfg, scenario)?.channel(q))
}

/// Interference-free rate of every UE, bits/s.
pub fn interference_free_rates<T: Scalar>(cfg: &NetworkConfig, scenario: &Scenario) -> Result<Vec<T>> {
    Ok(LinkTable::build(cfg, scenario)?.interference_free_rates(&LinkBudget::from_config(cfg)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Point;
    use crate::scenario::{enumerate_beam_configs, sample_scenario_c1};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_link_cfg(ue_width: f64, rx_width: f64) -> NetworkConfig {
        let mut cfg = NetworkConfig::default();
        cfg.n_ues = 1;
        cfg.n_aps = 1;
        cfg.ap_positions = vec![Point::new(0.0, 0.0)];
        cfg.ap_boresight_reference = vec![0.0];
        cfg.beamwidth_set = vec![rx_width];
        cfg.direction_set = vec![PI / 2.0];
        cfg.ue_tx_beamwidth = ue_width;
        cfg
    }

    fn ue_at(x: f64, y: f64, dir: f64) -> UeState {
        UeState {
            position: Point::new(x, y),
            tx_direction: dir,
        }
    }

    #[test]
    fn omni_pattern_is_unity() {
        for a in [0.0, 1.0, 3.0, -2.0] {
            let g = antenna_gain(TAU, 0.3, a, 0.1).unwrap();
            assert_relative_eq!(g, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn half_plane_main_lobe() {
        let g = antenna_gain(PI, 0.0, 0.0, 0.1).unwrap();
        assert_relative_eq!(g, 1.9, epsilon = 1e-12);
        let edge = antenna_gain(PI, 0.0, PI / 2.0 + 1e-9, 0.1).unwrap();
        assert_eq!(edge, 0.1);
    }

    #[test]
    fn antenna_gain_rejects_bad_width() {
        assert!(antenna_gain(0.0, 0.0, 0.0, 0.1).is_err());
        assert!(antenna_gain(7.0, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn conservation_holds_for_many_widths() {
        for k in 1..=100 {
            let theta = TAU * k as f64 / 100.0;
            let g = antenna_gain(theta, 0.0, 0.0, 0.1).unwrap();
            assert!((theta * g + (TAU - theta) * 0.1 - TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn omni_link_at_one_meter_is_inverse_path_loss() {
        let cfg = single_link_cfg(TAU, TAU);
        let s = Scenario::new(vec![ue_at(0.0, -1.0, 0.0)]);
        let h: f64 = channel_gain(&cfg, &s, &BeamConfig { widths: vec![0], directions: vec![0] }, 0, 0)
            .unwrap();
        let expected = 10f64.powf(-(32.4 + 20.0 * 28f64.log10()) / 10.0);
        assert_relative_eq!(h, expected, max_relative = 1e-12);
    }

    #[test]
    fn doubling_distance_costs_21_log2_db() {
        let cfg = single_link_cfg(TAU, TAU);
        let q = BeamConfig { widths: vec![0], directions: vec![0] };
        let near = Scenario::new(vec![ue_at(0.0, -3.0, 0.0)]);
        let far = Scenario::new(vec![ue_at(0.0, -6.0, 0.0)]);
        let a: f64 = channel_gain(&cfg, &near, &q, 0, 0).unwrap();
        let b: f64 = channel_gain(&cfg, &far, &q, 0, 0).unwrap();
        let drop_db = 10.0 * (a / b).log10();
        assert_relative_eq!(drop_db, 21.0 * 2f64.log10(), epsilon = 1e-10);
        assert!((drop_db - 6.32).abs() < 0.01);
    }

    #[test]
    fn misaligned_ue_scales_by_sidelobe() {
        let cfg = single_link_cfg(PI / 2.0, TAU);
        let q = BeamConfig { widths: vec![0], directions: vec![0] };
        // AP straight up from the UE
        let aligned = Scenario::new(vec![ue_at(0.0, -5.0, PI / 2.0)]);
        let away = Scenario::new(vec![ue_at(0.0, -5.0, -PI / 2.0)]);
        let a: f64 = channel_gain(&cfg, &aligned, &q, 0, 0).unwrap();
        let b: f64 = channel_gain(&cfg, &away, &q, 0, 0).unwrap();
        let g_main = antenna_gain(PI / 2.0, 0.0, 0.0, 0.1).unwrap();
        assert_relative_eq!(b / a, 0.1 / g_main, max_relative = 1e-12);
    }

    #[test]
    fn too_close_is_an_error() {
        let cfg = single_link_cfg(TAU, TAU);
        let q = BeamConfig { widths: vec![0], directions: vec![0] };
        let s = Scenario::new(vec![ue_at(0.0, -0.4, 0.0)]);
        let err = channel_gain::<f64>(&cfg, &s, &q, 0, 0).unwrap_err();
        assert!(matches!(err, Error::TooClose { .. }));
    }

    #[test]
    fn sinr_examples() {
        let h1 = ChannelMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert_eq!(sinr(&[1.0], &h1, 1.0, 0, 0), 1.0);
        assert_eq!(sinr(&[0.0], &h1, 1.0, 0, 0), 0.0);
        let h2 = ChannelMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert_eq!(sinr(&[1.0, 1.0], &h2, 1.0, 0, 0), 0.5);
        assert_eq!(sinr(&[1.0, 1.0], &h2, 1.0, 1, 0), 0.5);
    }

    #[test]
    fn rate_examples() {
        let budget = LinkBudget::new(1.0, 1.0, 1.0);
        let h = ChannelMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert_relative_eq!(achievable_rate(&[1.0], &h, &budget, 0), 1.0, epsilon = 1e-15);
        // a second AP with worse SINR changes nothing
        let h2 = ChannelMatrix::from_rows(&[vec![1.0], vec![0.25]]).unwrap();
        assert_eq!(
            achievable_rate(&[1.0], &h2, &budget, 0),
            achievable_rate(&[1.0], &h, &budget, 0)
        );
    }

    #[test]
    fn channel_matrix_rejects_nonpositive() {
        assert!(ChannelMatrix::from_rows(&[vec![1.0, 0.0]]).is_err());
        assert!(ChannelMatrix::<f64>::from_rows(&[]).is_err());
        assert!(ChannelMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn singleton_sets_give_direct_interference_free_rate() {
        let cfg = single_link_cfg(TAU, PI / 3.0);
        let s = Scenario::new(vec![ue_at(2.0, -7.0, 1.0)]);
        let r: Vec<f64> = interference_free_rates(&cfg, &s).unwrap();
        let q = BeamConfig { widths: vec![0], directions: vec![0] };
        let h: f64 = channel_gain(&cfg, &s, &q, 0, 0).unwrap();
        let expected = cfg.bandwidth * (1.0 + cfg.max_power * h / cfg.noise_power).log2();
        assert_relative_eq!(r[0], expected, max_relative = 1e-14);
    }

    #[test]
    fn separability_of_gains() {
        let cfg = NetworkConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = sample_scenario_c1(&cfg, &mut rng);
        let all: Vec<BeamConfig> = enumerate_beam_configs(&cfg).collect();
        for _ in 0..50 {
            let q = &all[rng.gen_range(0..all.len())];
            let mut q2 = all[rng.gen_range(0..all.len())].clone();
            let m = rng.gen_range(0..cfg.n_aps);
            q2.widths[m] = q.widths[m];
            q2.directions[m] = q.directions[m];
            for n in 0..cfg.n_ues {
                let a: f64 = channel_gain(&cfg, &s, q, m, n).unwrap();
                let b: f64 = channel_gain(&cfg, &s, &q2, m, n).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn rates_never_exceed_interference_free() {
        let cfg = NetworkConfig::default();
        let budget = LinkBudget::from_config(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let s = sample_scenario_c1(&cfg, &mut rng);
            let table = LinkTable::<f64>::build(&cfg, &s).unwrap();
            let r_bar = table.interference_free_rates(&budget);
            let q = BeamConfig::from_canonical_index(&cfg, rng.gen_range(0..729));
            let h = table.channel(&q);
            let p: Vec<f64> = (0..cfg.n_ues).map(|_| rng.gen_range(0.0..=cfg.max_power)).collect();
            for n in 0..cfg.n_ues {
                assert!(achievable_rate(&p, &h, &budget, n) <= r_bar[n]);
            }
        }
    }

    #[test]
    fn sinr_monotone_in_own_and_others_power() {
        let cfg = NetworkConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let s = sample_scenario_c1(&cfg, &mut rng);
        let q = BeamConfig::from_canonical_index(&cfg, 100);
        let h: ChannelMatrix<f64> = channel_matrix(&cfg, &s, &q).unwrap();
        for _ in 0..200 {
            let p: Vec<f64> = (0..cfg.n_ues).map(|_| rng.gen_range(0.01..0.25)).collect();
            let n = rng.gen_range(0..cfg.n_ues);
            let m = rng.gen_range(0..cfg.n_aps);
            let base = sinr(&p, &h, cfg.noise_power, n, m);
            let mut up = p.clone();
            up[n] *= 1.01;
            assert!(sinr(&up, &h, cfg.noise_power, n, m) > base);
            let k = (n + 1) % cfg.n_ues;
            let mut other = p.clone();
            other[k] *= 1.01;
            assert!(sinr(&other, &h, cfg.noise_power, n, m) <= base);
        }
    }

    #[test]
    fn rates_follow_ue_permutation() {
        let cfg = NetworkConfig::default();
        let s = sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(31));
        let r: Vec<f64> = interference_free_rates(&cfg, &s).unwrap();
        // re-sorting a reversed copy restores the same rows and rates
        let mut rows = s.rows().to_vec();
        rows.reverse();
        let s2 = Scenario::new(rows);
        let r2: Vec<f64> = interference_free_rates(&cfg, &s2).unwrap();
        assert_eq!(r, r2);
    }

    #[test]
    fn single_precision_agrees() {
        let cfg = NetworkConfig::default();
        let s = sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(37));
        let a: Vec<f64> = interference_free_rates(&cfg, &s).unwrap();
        let b: Vec<f32> = interference_free_rates(&cfg, &s).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - *y as f64).abs() / x < 1e-5);
        }
    }
}
