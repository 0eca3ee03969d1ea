//! Subcommand implementations: curve, sweeps, association report, validate.
//!
//! Every command renders into a writer so tests can capture output, and all
//! probabilities arrive from the core crate already in [0,1]. CSV is plain
//! comma-separated text with a header row and LF line endings; sweep rows
//! are computed in parallel and written in grid order.

use std::io::Write;

use rayon::prelude::*;

use jsdm_outage_core::averaging::InterferenceMode;
use jsdm_outage_core::cell::{
    cell_outage_fixed, cell_outage_noise_limited, cell_outage_random, InfeasiblePolicy,
};
use jsdm_outage_core::geometry::{association_probability, effective_pico_prob, region_masses};
use jsdm_outage_core::params::db_to_linear;
use jsdm_outage_core::scenario::Scenario;
use jsdm_outage_core::simulation::{
    estimate_outage_curve, AssociationStrategy, CurveEstimate, PartitionMode, SimMode, TrialConfig,
};
use jsdm_outage_core::Error as CoreError;

use crate::config::ExperimentConfig;

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: a validation gate did not pass.
    Gate(String),
    /// Exit 2: configuration or environment problem.
    Config(String),
    /// Exit 3: the numerical machinery failed to converge.
    Numerics(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Gate(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerics(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Gate(m) => format!("validation failure: {m}"),
            CliError::Config(m) => format!("config error: {m}"),
            CliError::Numerics(m) => format!("numerical error: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Convergence { .. } => CliError::Numerics(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}

fn policy(cfg: &ExperimentConfig) -> InfeasiblePolicy {
    if cfg.infeasible_skip {
        InfeasiblePolicy::SkipAndRenormalize
    } else {
        InfeasiblePolicy::Error
    }
}

/// Analytic cell outage under the configured partition mode.
fn analytic_outage(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    x: f64,
    mode: InterferenceMode,
) -> Result<f64, CliError> {
    if cfg.partition_random {
        Ok(cell_outage_random(sc, x, mode, policy(cfg))?)
    } else {
        Ok(cell_outage_fixed(sc, x, mode)?)
    }
}

/// Noise-limited column: the closed forms for a fixed partition, the
/// general-path mixture when the partition is random.
fn noise_limited_outage(cfg: &ExperimentConfig, sc: &Scenario, x: f64) -> Result<f64, CliError> {
    if cfg.partition_random {
        Ok(cell_outage_random(sc, x, InterferenceMode::NoiseOnly, policy(cfg))?)
    } else {
        Ok(cell_outage_noise_limited(sc, x)?)
    }
}

fn trial_config(cfg: &ExperimentConfig, mode: SimMode) -> TrialConfig {
    TrialConfig {
        num_drops: cfg.drops,
        channels_per_drop: cfg.channels_per_drop,
        seed: cfg.seed,
        mode,
        partition: if cfg.partition_random {
            PartitionMode::Random
        } else {
            PartitionMode::Fixed
        },
        strategy: if cfg.association_pathloss {
            AssociationStrategy::PathLoss
        } else {
            AssociationStrategy::Disk
        },
    }
}

/// `curve`: analytic, noise-limited, simulated and relay-free outage over
/// the threshold grid.
pub fn cmd_curve(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let thresholds = cfg.thresholds_db.values();
    let sc = cfg.to_scenario()?;
    let no_pico_sc = if sc.pico_group.is_some() { sc.without_relay()? } else { sc.clone() };
    let est = estimate_outage_curve(&sc, trial_config(cfg, SimMode::FullSinr), &thresholds)?;

    let rows: Result<Vec<(f64, f64, f64)>, CliError> = thresholds
        .par_iter()
        .map(|db| {
            let x = db_to_linear(*db);
            Ok((
                analytic_outage(cfg, &sc, x, InterferenceMode::Full)?,
                noise_limited_outage(cfg, &sc, x)?,
                analytic_outage(cfg, &no_pico_sc, x, InterferenceMode::Full)?,
            ))
        })
        .collect();
    let rows = rows?;

    writeln!(out, "threshold_dB,analytic,noise_limited,monte_carlo,mc_stderr,no_pico_analytic")?;
    for (i, db) in thresholds.iter().enumerate() {
        let (analytic, nl, no_pico) = rows[i];
        writeln!(
            out,
            "{},{},{},{},{},{}",
            db,
            analytic,
            nl,
            est.curve.probabilities[i],
            est.curve.stderrs.as_ref().expect("simulated curve carries errors")[i],
            no_pico
        )?;
    }
    Ok(())
}

/// `sweep --var dms`: relay placement sweep. The relay disk radius scales
/// proportionally with its distance so the disk stays inside the cell over
/// the whole grid.
pub fn cmd_sweep_dms(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if !cfg.has_relay() {
        return Err(CliError::Config("d_ms sweep needs a relay (r_m > 0)".into()));
    }
    let grid = cfg.dms_grid_m.values();
    if grid.is_empty() {
        return Err(CliError::Config("key `dms_grid_m`: empty grid".into()));
    }
    let x = db_to_linear(cfg.sweep_threshold_db);
    // The disk scales with the relay distance (fixed r/d, hence fixed chord
    // angle θ0): the served area then peaks exactly at the cell-contact
    // distance d = R − r, beyond which the cell border clips the disk.
    let scale = cfg.pico_radius_m / cfg.pico_dist_m;
    let rows: Result<Vec<(f64, f64, f64)>, CliError> = grid
        .par_iter()
        .map(|&d| {
            let r = scale * d;
            let sc = cfg.scenario_with(cfg.num_antennas, d, r)?;
            let pg = sc.pico_group.expect("relay present along the sweep");
            let masses = region_masses(&sc.layout, sc.groups[pg].spread_rad, sc.sum_delta())?;
            let outage = analytic_outage(cfg, &sc, x, InterferenceMode::Full)?;
            Ok((r, masses.p_gs, outage))
        })
        .collect();
    let rows = rows?;
    writeln!(out, "d_ms_m,r_m,p_gs,analytic")?;
    for (i, d) in grid.iter().enumerate() {
        let (r, p_gs, outage) = rows[i];
        writeln!(out, "{d},{r},{p_gs},{outage}")?;
    }
    Ok(())
}

/// `sweep --var antennas`: the analytic curve for every antenna count.
pub fn cmd_sweep_antennas(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if cfg.antenna_grid.is_empty() {
        return Err(CliError::Config("key `antenna_grid`: empty grid".into()));
    }
    let thresholds = cfg.thresholds_db.values();
    let rows: Result<Vec<Vec<f64>>, CliError> = cfg
        .antenna_grid
        .par_iter()
        .map(|&m| {
            let sc = cfg.scenario_with(m, cfg.pico_dist_m, cfg.pico_radius_m)?;
            thresholds
                .iter()
                .map(|db| analytic_outage(cfg, &sc, db_to_linear(*db), InterferenceMode::Full))
                .collect()
        })
        .collect();
    let rows = rows?;
    writeln!(out, "M,threshold_dB,analytic")?;
    for (mi, m) in cfg.antenna_grid.iter().enumerate() {
        for (ti, db) in thresholds.iter().enumerate() {
            writeln!(out, "{m},{db},{}", rows[mi][ti])?;
        }
    }
    Ok(())
}

/// `sweep --var strategy`: simulated curves under the relay-disk rule and
/// the weighted path-loss rule, same seed.
pub fn cmd_sweep_strategy(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let thresholds = cfg.thresholds_db.values();
    let sc = cfg.to_scenario()?;
    let run = |strategy: AssociationStrategy| -> Result<CurveEstimate, CliError> {
        let mut tc = trial_config(cfg, SimMode::FullSinr);
        tc.strategy = strategy;
        Ok(estimate_outage_curve(&sc, tc, &thresholds)?)
    };
    let disk = run(AssociationStrategy::Disk)?;
    let pathloss = run(AssociationStrategy::PathLoss)?;
    writeln!(out, "threshold_dB,mc_disk,mc_disk_stderr,mc_pathloss,mc_pathloss_stderr")?;
    for (i, db) in thresholds.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            db,
            disk.curve.probabilities[i],
            disk.curve.stderrs.as_ref().expect("simulated curve carries errors")[i],
            pathloss.curve.probabilities[i],
            pathloss.curve.stderrs.as_ref().expect("simulated curve carries errors")[i],
        )?;
    }
    Ok(())
}

/// `assoc`: the closed-form association quantities and their geometric
/// ingredients, one `key = value` per line.
pub fn cmd_assoc(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = cfg.to_scenario()?;
    let Some(pg) = sc.pico_group else {
        return Err(CliError::Config("association report needs a relay (r_m > 0)".into()));
    };
    let delta_g = sc.groups[pg].spread_rad;
    let split = association_probability(&sc.layout, delta_g, sc.sum_delta());
    let effective = effective_pico_prob(&sc.layout, delta_g)?;
    let masses = region_masses(&sc.layout, delta_g, sc.sum_delta())?;
    writeln!(out, "pico_group = {}", pg + 1)?;
    writeln!(out, "theta_rad = {}", sc.layout.theta())?;
    writeln!(out, "theta0_rad = {}", sc.layout.theta0())?;
    writeln!(out, "clip_angle_rad = {}", sc.layout.clip_angle())?;
    match split {
        Ok(split) => {
            writeln!(out, "p_gs = {}", split.p_gs)?;
            writeln!(out, "p_gm = {}", split.p_gm)?;
            writeln!(out, "upsilon = {}", split.upsilon)?;
        }
        Err(_) => {
            // The closed form assumes the disk inside cell and wedge; fall
            // back to the boundary-aware quadrature outside its domain.
            writeln!(out, "p_gs = {}", effective)?;
            writeln!(out, "p_gm = {}", 1.0 - effective)?;
            writeln!(out, "upsilon = {}", masses.macro_in_pico_group)?;
        }
    }
    writeln!(out, "p_gs_quadrature = {effective}")?;
    writeln!(out, "pico_served_mass = {}", masses.pico_served)?;
    writeln!(out, "macro_in_pico_group_mass = {}", masses.macro_in_pico_group)?;
    Ok(())
}

/// `validate`: analytic vs simulated curve, per-threshold z-scores, pass
/// iff the worst absolute gap is within tolerance.
pub fn cmd_validate(
    cfg: &ExperimentConfig,
    tolerance: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if !(tolerance > 0.0) {
        return Err(CliError::Config(format!("tolerance must be positive, got {tolerance}")));
    }
    let thresholds = cfg.thresholds_db.values();
    let sc = cfg.to_scenario()?;
    let est = estimate_outage_curve(&sc, trial_config(cfg, SimMode::FullSinr), &thresholds)?;
    let analytic: Result<Vec<f64>, CliError> = thresholds
        .par_iter()
        .map(|db| analytic_outage(cfg, &sc, db_to_linear(*db), InterferenceMode::Full))
        .collect();
    let analytic = analytic?;

    writeln!(out, "threshold_dB,analytic,monte_carlo,mc_stderr,gap,z")?;
    let mut worst: (f64, f64) = (f64::NEG_INFINITY, 0.0);
    for (i, db) in thresholds.iter().enumerate() {
        let mc = est.curve.probabilities[i];
        let se = est.curve.stderrs.as_ref().expect("simulated curve carries errors")[i];
        let gap = analytic[i] - mc;
        let z = if se > 0.0 { gap / se } else { 0.0 };
        if gap.abs() > worst.0 {
            worst = (gap.abs(), *db);
        }
        writeln!(out, "{},{},{},{},{},{}", db, analytic[i], mc, se, gap, z)?;
    }
    writeln!(
        out,
        "# max |gap| = {} at {} dB over {} drops (tolerance {})",
        worst.0, worst.1, cfg.drops, tolerance
    )?;
    let verdict = if worst.0 <= tolerance { "# PASS" } else { "# FAIL" };
    writeln!(out, "{verdict}")?;
    // The effective configuration (after flag overrides), replayable as-is.
    writeln!(out, "# effective configuration:")?;
    for line in cfg.serialize().lines() {
        writeln!(out, "#   {line}")?;
    }
    if worst.0 <= tolerance {
        Ok(())
    } else {
        Err(CliError::Gate(format!(
            "max |analytic − simulated| = {} at {} dB exceeds tolerance {}",
            worst.0, worst.1, tolerance
        )))
    }
}
