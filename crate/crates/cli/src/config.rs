//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, keys follow the system
//! symbols (`P_m_dBm`, `d_ms_m`, `Delta_1_deg`, ...). Groups are numbered
//! from 1 and discovered by contiguous presence of their three keys. Every
//! dB/dBm quantity is converted to linear exactly once, here.

use std::collections::HashMap;
use std::fmt::Write as _;

use jsdm_outage_core::geometry::CellLayout;
use jsdm_outage_core::params::{
    db_to_linear, kappa, rho_times_s_from_powers, GroupGeometry, SystemParams, PATH_LOSS_REF_M,
};
use jsdm_outage_core::scenario::Scenario;

/// A `start:stop:step` grid specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RangeSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:step, got `{text}`"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        let spec = Self { start: nums[0], stop: nums[1], step: nums[2] };
        if !(spec.step > 0.0 && spec.stop >= spec.start) {
            return Err(format!("degenerate range `{text}`: need stop ≥ start and step > 0"));
        }
        Ok(spec)
    }

    /// Grid points start, start+step, ..., up to stop (inclusive within a
    /// half-step tolerance for rounding).
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0u64;
        loop {
            let v = self.start + self.step * i as f64;
            if v > self.stop + 1e-9 * self.step.max(1.0) {
                break;
            }
            out.push(v);
            i += 1;
        }
        out
    }
}

impl std::fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// One angular group: bearing, spread, and its nominal user count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSpec {
    pub theta_deg: f64,
    pub delta_deg: f64,
    pub users: usize,
}

/// Everything an experiment needs, as parsed from the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p_m_dbm: f64,
    pub p_s_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub carrier_frequency_hz: f64,
    pub alpha: f64,
    pub cell_radius_m: f64,
    pub pico_radius_m: f64,
    pub pico_dist_m: f64,
    pub num_antennas: usize,
    pub antenna_spacing: f64,
    pub groups: Vec<GroupSpec>,
    /// 1-based index of the group hosting the relay.
    pub pico_group: usize,
    pub partition_random: bool,
    pub infeasible_skip: bool,
    pub association_pathloss: bool,
    pub kappa_sq_in_pico_interference: bool,
    pub seed: u64,
    pub drops: u64,
    pub channels_per_drop: u32,
    pub thresholds_db: RangeSpec,
    /// Direct per-stream SNR override in dB; replaces the link-budget
    /// derivation from powers, bandwidth and noise figure when present.
    pub snr_db: Option<f64>,
    pub dms_grid_m: RangeSpec,
    pub antenna_grid: Vec<usize>,
    pub sweep_threshold_db: f64,
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("key `{key}`: expected true or false, got `{other}`")),
    }
}

struct KeyMap(HashMap<String, String>);

impl KeyMap {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String, String> {
        self.take(key).ok_or_else(|| format!("missing key `{key}`"))
    }

    fn req_f64(&mut self, key: &str) -> Result<f64, String> {
        let v = self.required(key)?;
        v.parse::<f64>().map_err(|e| format!("key `{key}`: {e}"))
    }

    fn opt_f64(&mut self, key: &str, default: f64) -> Result<f64, String> {
        match self.take(key) {
            Some(v) => v.parse::<f64>().map_err(|e| format!("key `{key}`: {e}")),
            None => Ok(default),
        }
    }

    fn opt_u64(&mut self, key: &str, default: u64) -> Result<u64, String> {
        match self.take(key) {
            Some(v) => v.parse::<u64>().map_err(|e| format!("key `{key}`: {e}")),
            None => Ok(default),
        }
    }

    fn opt_usize(&mut self, key: &str, default: usize) -> Result<usize, String> {
        match self.take(key) {
            Some(v) => v.parse::<usize>().map_err(|e| format!("key `{key}`: {e}")),
            None => Ok(default),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected `key = value`, got `{line}`", lineno + 1));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if map.insert(key.clone(), value).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", lineno + 1));
            }
        }
        let mut keys = KeyMap(map);

        let p_m_dbm = keys.req_f64("P_m_dBm")?;
        let p_s_dbm = keys.req_f64("P_s_dBm")?;
        let bandwidth_hz = keys.req_f64("bandwidth_Hz")?;
        let noise_figure_db = keys.req_f64("noise_figure_dB")?;
        let carrier_frequency_hz = keys.req_f64("carrier_frequency_Hz")?;
        let alpha = keys.req_f64("alpha")?;
        let cell_radius_m = keys.req_f64("R_m")?;
        let pico_radius_m = keys.req_f64("r_m")?;
        let pico_dist_m = keys.req_f64("d_ms_m")?;
        let num_antennas = keys
            .required("M")?
            .parse::<usize>()
            .map_err(|e| format!("key `M`: {e}"))?;
        let antenna_spacing = keys.opt_f64("antenna_spacing", 0.5)?;

        let mut groups = Vec::new();
        loop {
            let g = groups.len() + 1;
            let theta_key = format!("theta_{g}_deg");
            let Some(theta) = keys.take(&theta_key) else { break };
            let theta_deg = theta.parse::<f64>().map_err(|e| format!("key `{theta_key}`: {e}"))?;
            let delta_key = format!("Delta_{g}_deg");
            let delta_deg = keys
                .required(&delta_key)?
                .parse::<f64>()
                .map_err(|e| format!("key `{delta_key}`: {e}"))?;
            let users_key = format!("K_{g}");
            let users = keys
                .required(&users_key)?
                .parse::<usize>()
                .map_err(|e| format!("key `{users_key}`: {e}"))?;
            groups.push(GroupSpec { theta_deg, delta_deg, users });
        }
        if groups.is_empty() {
            return Err("missing key `theta_1_deg`: at least one group is required".into());
        }

        let pico_group = keys.opt_usize("pico_group", 1)?;
        let partition_random = match keys.take("partition").as_deref() {
            None | Some("fixed") => false,
            Some("random") => true,
            Some(other) => {
                return Err(format!("key `partition`: expected fixed or random, got `{other}`"))
            }
        };
        let infeasible_skip = match keys.take("infeasible_compositions").as_deref() {
            None | Some("error") => false,
            Some("skip") => true,
            Some(other) => {
                return Err(format!(
                    "key `infeasible_compositions`: expected error or skip, got `{other}`"
                ))
            }
        };
        let association_pathloss = match keys.take("association").as_deref() {
            None | Some("disk") => false,
            Some("pathloss") => true,
            Some(other) => {
                return Err(format!("key `association`: expected disk or pathloss, got `{other}`"))
            }
        };
        let kappa_sq_in_pico_interference = match keys.take("kappa_sq_in_pico_interference") {
            Some(v) => parse_bool("kappa_sq_in_pico_interference", &v)?,
            None => true,
        };
        let seed = keys.opt_u64("seed", 1)?;
        let drops = keys.opt_u64("drops", 20_000)?;
        let channels_per_drop = keys.opt_u64("channels_per_drop", 1)? as u32;
        let thresholds_db = match keys.take("thresholds_dB") {
            Some(v) => RangeSpec::parse(&v).map_err(|e| format!("key `thresholds_dB`: {e}"))?,
            None => RangeSpec { start: -10.0, stop: 20.0, step: 2.0 },
        };
        let snr_db = match keys.take("snr_dB") {
            Some(v) => Some(v.parse::<f64>().map_err(|e| format!("key `snr_dB`: {e}"))?),
            None => None,
        };
        let dms_grid_m = match keys.take("dms_grid_m") {
            Some(v) => RangeSpec::parse(&v).map_err(|e| format!("key `dms_grid_m`: {e}"))?,
            None => RangeSpec { start: 60.0, stop: 190.0, step: 10.0 },
        };
        let antenna_grid = match keys.take("antenna_grid") {
            Some(v) => v
                .split(',')
                .map(|p| p.trim().parse::<usize>().map_err(|e| format!("key `antenna_grid`: {e}")))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![32, 64, 128, 256],
        };
        let sweep_threshold_db = keys.opt_f64("sweep_threshold_dB", 0.0)?;

        if let Some(unknown) = keys.0.keys().next() {
            return Err(format!("unknown key `{unknown}`"));
        }

        let cfg = Self {
            p_m_dbm,
            p_s_dbm,
            bandwidth_hz,
            noise_figure_db,
            carrier_frequency_hz,
            alpha,
            cell_radius_m,
            pico_radius_m,
            pico_dist_m,
            num_antennas,
            antenna_spacing,
            groups,
            pico_group,
            partition_random,
            infeasible_skip,
            association_pathloss,
            kappa_sq_in_pico_interference,
            seed,
            drops,
            channels_per_drop,
            thresholds_db,
            snr_db,
            dms_grid_m,
            antenna_grid,
            sweep_threshold_db,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 2.0) {
            return Err(format!("key `alpha`: must exceed 2, got {}", self.alpha));
        }
        for (key, v) in [
            ("P_m_dBm", self.p_m_dbm),
            ("P_s_dBm", self.p_s_dbm),
            ("noise_figure_dB", self.noise_figure_db),
        ] {
            if !v.is_finite() {
                return Err(format!("key `{key}`: must be finite"));
            }
        }
        for (key, v) in [
            ("bandwidth_Hz", self.bandwidth_hz),
            ("carrier_frequency_Hz", self.carrier_frequency_hz),
            ("R_m", self.cell_radius_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("key `{key}`: must be positive, got {v}"));
            }
        }
        if !(self.pico_radius_m >= 0.0 && self.pico_dist_m >= 0.0) {
            return Err("keys `r_m`, `d_ms_m`: must be nonnegative".into());
        }
        if self.num_antennas == 0 {
            return Err("key `M`: must be at least 1".into());
        }
        if !(self.antenna_spacing > 0.0) {
            return Err("key `antenna_spacing`: must be positive".into());
        }
        for (g, spec) in self.groups.iter().enumerate() {
            if !(spec.delta_deg > 0.0) {
                return Err(format!("key `Delta_{}_deg`: must be positive", g + 1));
            }
        }
        if self.groups.iter().map(|g| g.users).sum::<usize>() == 0 {
            return Err("keys `K_*`: at least one user is required".into());
        }
        if !(1..=self.groups.len()).contains(&self.pico_group) {
            return Err(format!(
                "key `pico_group`: must name a group between 1 and {}, got {}",
                self.groups.len(),
                self.pico_group
            ));
        }
        if self.drops == 0 {
            return Err("key `drops`: must be at least 1".into());
        }
        if self.channels_per_drop == 0 {
            return Err("key `channels_per_drop`: must be at least 1".into());
        }
        if let Some(db) = self.snr_db {
            if !db.is_finite() {
                return Err("key `snr_dB`: must be finite".into());
            }
        }
        if self.antenna_grid.is_empty() {
            return Err("key `antenna_grid`: must not be empty".into());
        }
        Ok(())
    }

    /// Serialize back to the config format; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "P_m_dBm = {}", self.p_m_dbm);
        let _ = writeln!(s, "P_s_dBm = {}", self.p_s_dbm);
        let _ = writeln!(s, "bandwidth_Hz = {}", self.bandwidth_hz);
        let _ = writeln!(s, "noise_figure_dB = {}", self.noise_figure_db);
        let _ = writeln!(s, "carrier_frequency_Hz = {}", self.carrier_frequency_hz);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "R_m = {}", self.cell_radius_m);
        let _ = writeln!(s, "r_m = {}", self.pico_radius_m);
        let _ = writeln!(s, "d_ms_m = {}", self.pico_dist_m);
        let _ = writeln!(s, "M = {}", self.num_antennas);
        let _ = writeln!(s, "antenna_spacing = {}", self.antenna_spacing);
        for (g, spec) in self.groups.iter().enumerate() {
            let _ = writeln!(s, "theta_{}_deg = {}", g + 1, spec.theta_deg);
            let _ = writeln!(s, "Delta_{}_deg = {}", g + 1, spec.delta_deg);
            let _ = writeln!(s, "K_{} = {}", g + 1, spec.users);
        }
        let _ = writeln!(s, "pico_group = {}", self.pico_group);
        let _ = writeln!(s, "partition = {}", if self.partition_random { "random" } else { "fixed" });
        let _ = writeln!(
            s,
            "infeasible_compositions = {}",
            if self.infeasible_skip { "skip" } else { "error" }
        );
        let _ = writeln!(
            s,
            "association = {}",
            if self.association_pathloss { "pathloss" } else { "disk" }
        );
        let _ = writeln!(
            s,
            "kappa_sq_in_pico_interference = {}",
            self.kappa_sq_in_pico_interference
        );
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "drops = {}", self.drops);
        let _ = writeln!(s, "channels_per_drop = {}", self.channels_per_drop);
        let _ = writeln!(s, "thresholds_dB = {}", self.thresholds_db);
        if let Some(db) = self.snr_db {
            let _ = writeln!(s, "snr_dB = {db}");
        }
        let _ = writeln!(s, "dms_grid_m = {}", self.dms_grid_m);
        let grid: Vec<String> = self.antenna_grid.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "antenna_grid = {}", grid.join(","));
        let _ = writeln!(s, "sweep_threshold_dB = {}", self.sweep_threshold_db);
        s
    }

    /// Whether the configured system has a relay at all.
    pub fn has_relay(&self) -> bool {
        self.pico_radius_m > 0.0
    }

    /// Total transmitted streams: one per user plus the backhaul beam.
    pub fn total_streams(&self) -> usize {
        self.groups.iter().map(|g| g.users).sum::<usize>() + usize::from(self.has_relay())
    }

    /// ρ·S, either from the explicit SNR override or from the link budget
    /// (powers, bandwidth, noise figure, carrier), converted to the
    /// kilometer path-loss reference used internally.
    pub fn rho_times_s(&self) -> f64 {
        match self.snr_db {
            Some(db) => self.total_streams() as f64 * db_to_linear(db),
            None => {
                rho_times_s_from_powers(
                    self.p_m_dbm,
                    self.carrier_frequency_hz,
                    self.bandwidth_hz,
                    self.noise_figure_db,
                ) * PATH_LOSS_REF_M.powf(-self.alpha)
            }
        }
    }

    /// Build the scenario with explicit antenna count and relay placement;
    /// sweeps override these one at a time.
    pub fn scenario_with(
        &self,
        num_antennas: usize,
        pico_dist_m: f64,
        pico_radius_m: f64,
    ) -> Result<Scenario, jsdm_outage_core::Error> {
        let k = kappa(self.carrier_frequency_hz);
        let params = SystemParams::new(
            num_antennas,
            self.antenna_spacing,
            self.alpha,
            self.rho_times_s(),
            db_to_linear(self.p_s_dbm - self.p_m_dbm),
            k * k,
            self.kappa_sq_in_pico_interference,
        )?;
        let groups: Vec<GroupGeometry> = self
            .groups
            .iter()
            .map(|g| GroupGeometry::from_degrees(g.theta_deg, g.delta_deg))
            .collect::<Result<_, _>>()?;
        let pico0 = self.pico_group - 1;
        let has_relay = pico_radius_m > 0.0;
        let layout = CellLayout::new(
            self.cell_radius_m,
            pico_radius_m,
            if has_relay { pico_dist_m } else { 0.0 },
            if has_relay { groups[pico0].aoa_rad } else { 0.0 },
        )?;
        let counts: Vec<usize> = self.groups.iter().map(|g| g.users).collect();
        Scenario::build(params, layout, groups, counts, has_relay.then_some(pico0))
    }

    pub fn to_scenario(&self) -> Result<Scenario, jsdm_outage_core::Error> {
        self.scenario_with(self.num_antennas, self.pico_dist_m, self.pico_radius_m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
        # two-group reference system
        P_m_dBm = 46
        P_s_dBm = 28
        bandwidth_Hz = 20e6
        noise_figure_dB = 9
        carrier_frequency_Hz = 28e9
        alpha = 4
        R_m = 200
        r_m = 50
        d_ms_m = 150
        M = 16
        theta_1_deg = -20
        Delta_1_deg = 20
        K_1 = 3
        theta_2_deg = 10
        Delta_2_deg = 10
        K_2 = 2
        snr_dB = -40
        drops = 500
    ";

    #[test]
    fn test_parse_sample() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.groups.len(), 2);
        assert_eq!(cfg.groups[0].users, 3);
        assert_eq!(cfg.num_antennas, 16);
        assert_eq!(cfg.pico_group, 1);
        assert!(!cfg.partition_random);
        assert_eq!(cfg.drops, 500);
        assert_eq!(cfg.thresholds_db.values().len(), 16);
        assert_eq!(cfg.total_streams(), 6);
    }

    #[test]
    fn test_round_trip_identity() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn test_snr_override_sets_rho() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        // ρ = 10^(−4), S = 6.
        assert!((cfg.rho_times_s() - 6.0e-4).abs() < 1e-15);
        let sc = cfg.to_scenario().unwrap();
        assert!((sc.rho() - 1.0e-4).abs() < 1e-18);
    }

    #[test]
    fn test_link_budget_derivation() {
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        cfg.snr_db = None;
        // ρS = P_m κ² / N0 referenced to 1 km. Expressed as a single dB
        // difference: N0 = −174 + 10·log10(20e6) + 9 ≈ −91.99 dBm.
        let n0_dbm = -174.0 + 10.0 * 20e6f64.log10() + 9.0;
        let k = kappa(28e9);
        let expected = 10f64.powf((46.0 - n0_dbm) / 10.0) * k * k * 1e-12;
        assert!((cfg.rho_times_s() / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_r_zero_builds_without_relay() {
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        cfg.pico_radius_m = 0.0;
        assert_eq!(cfg.total_streams(), 5);
        let sc = cfg.to_scenario().unwrap();
        assert!(sc.pico_group.is_none());
    }

    #[test]
    fn test_field_level_errors() {
        assert!(ExperimentConfig::parse("").unwrap_err().contains("P_m_dBm"));
        let bad_alpha = SAMPLE.replace("alpha = 4", "alpha = 2");
        assert!(ExperimentConfig::parse(&bad_alpha).unwrap_err().contains("alpha"));
        let unknown = format!("{SAMPLE}\nbogus_key = 1\n");
        assert!(ExperimentConfig::parse(&unknown).unwrap_err().contains("bogus_key"));
        let dup = format!("{SAMPLE}\nM = 8\n");
        assert!(ExperimentConfig::parse(&dup).unwrap_err().contains("duplicate"));
        let broken_group = SAMPLE.replace("K_2 = 2", "");
        assert!(ExperimentConfig::parse(&broken_group).unwrap_err().contains("K_2"));
    }

    #[test]
    fn test_range_spec() {
        let r = RangeSpec::parse("-10:20:2").unwrap();
        assert_eq!(r.values().len(), 16);
        assert_eq!(r.values()[0], -10.0);
        assert_eq!(*r.values().last().unwrap(), 20.0);
        assert!(RangeSpec::parse("5:1:1").is_err());
        assert!(RangeSpec::parse("1:5:0").is_err());
        assert!(RangeSpec::parse("1:5").is_err());
        // A single-point grid is legal.
        assert_eq!(RangeSpec::parse("3:3:1").unwrap().values(), vec![3.0]);
    }
}
