//! Monte Carlo system simulator: the independent validation path.
//!
//! Every drop places users, realizes full M-dimensional channels, and
//! evaluates the two-tier SINRs literally — beam products h^H b_j against
//! the actual precoder columns, relay cross-fading, both relay hops — with
//! no reuse of the analytic spectra. Drops are keyed to (seed, drop index)
//! RNG substreams and accumulated chunk-by-chunk in a fixed order, so the
//! estimate is bit-reproducible regardless of thread count.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;

use crate::cell::{compositions, config_fingerprint, OutageCurve, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{drop_users, drop_users_partitioned};
use crate::params::db_to_linear;
use crate::precoding::assign_user_beams;
use crate::rng::{complex_gaussian, rng_for};
use crate::scenario::Scenario;

/// Consecutive infeasible random partitions tolerated per drop.
const MAX_RESAMPLES: u64 = 10_000;
/// Drops accumulated sequentially per parallel work item.
const CHUNK: u64 = 256;

/// Which terms the simulated SINR keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Everything: intra-group, inter-group, relay interference, both hops.
    FullSinr,
    /// All interference zeroed; association still happens.
    SnrOnly,
    /// Relay removed entirely: one stream fewer, everyone macro-served.
    NoPico,
}

/// How users map to groups in each drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Exactly the scenario's user counts per wedge.
    Fixed,
    /// Users land anywhere in the wedge union; the realized counts decide
    /// the precoder, resampling infeasible draws.
    Random,
}

/// Which rule decides relay service for relay-group users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssociationStrategy {
    /// Inside the relay disk and beyond the relay's own distance.
    Disk,
    /// Smallest weighted path loss between the two stations.
    PathLoss,
}

/// Simulation plan: sample sizes, seed, and modeling switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialConfig {
    pub num_drops: u64,
    pub channels_per_drop: u32,
    pub seed: u64,
    pub mode: SimMode,
    pub partition: PartitionMode,
    pub strategy: AssociationStrategy,
}

impl TrialConfig {
    pub fn new(num_drops: u64, seed: u64) -> Self {
        Self {
            num_drops,
            channels_per_drop: 1,
            seed,
            mode: SimMode::FullSinr,
            partition: PartitionMode::Fixed,
            strategy: AssociationStrategy::Disk,
        }
    }
}

/// One channel realization of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// Linear SINR per user in drop order.
    pub sinr: Vec<f64>,
    /// Relay-served flags, same order.
    pub pico_served: Vec<bool>,
    /// Group id per user, same order.
    pub group: Vec<usize>,
}

impl TrialRecord {
    /// Fraction of users whose SINR fell below `x`.
    pub fn outage_fraction(&self, x: f64) -> f64 {
        let below = self.sinr.iter().filter(|s| **s < x).count();
        below as f64 / self.sinr.len() as f64
    }

    /// Whether any user fell below `x`.
    pub fn any_outage(&self, x: f64) -> bool {
        self.sinr.iter().any(|s| *s < x)
    }
}

/// A prepared simulation: the effective scenario (relay stripped in no-pico
/// mode), its stacked precoder, and the per-composition cache for random
/// partitions (`None` marks infeasible compositions, which get resampled).
pub struct SimContext {
    cfg: TrialConfig,
    sc: Scenario,
    stacked: DMatrix<Complex<f64>>,
    comps: HashMap<Vec<usize>, Option<(Scenario, DMatrix<Complex<f64>>)>>,
}

impl SimContext {
    /// The scenario actually simulated (after any relay stripping).
    pub fn scenario(&self) -> &Scenario {
        &self.sc
    }
}

/// Resolve a scenario and trial configuration into a runnable context.
pub fn prepare(sc: &Scenario, cfg: TrialConfig) -> Result<SimContext> {
    if cfg.num_drops == 0 || cfg.channels_per_drop == 0 {
        return Err(Error::InvalidParameter(
            "simulation needs at least one drop and one channel per drop".into(),
        ));
    }
    let k_total: usize = sc.user_counts.iter().sum();
    if k_total == 0 {
        return Err(Error::InvalidParameter("no users to simulate".into()));
    }
    let sc = if cfg.mode == SimMode::NoPico && sc.pico_group.is_some() {
        sc.without_relay()?
    } else {
        sc.clone()
    };
    let stacked = sc.precoders.stacked();
    let mut comps = HashMap::new();
    if cfg.partition == PartitionMode::Random {
        for comp in compositions(k_total, sc.num_groups())? {
            let entry = match sc.with_user_counts(comp.clone()) {
                Ok(s) => {
                    let b = s.precoders.stacked();
                    Some((s, b))
                }
                Err(_) => None,
            };
            comps.insert(comp, entry);
        }
    }
    Ok(SimContext { cfg, sc, stacked, comps })
}

/// Simulate one drop: place users, realize channels `channels_per_drop`
/// times, and score every user's SINR literally. Returns the records and
/// the number of infeasible random partitions that had to be resampled.
/// Deterministic in (seed, drop_index) alone.
pub fn run_drop(ctx: &SimContext, drop_index: u64) -> Result<(Vec<TrialRecord>, u64)> {
    let cfg = &ctx.cfg;
    let mut rng = rng_for(cfg.seed, drop_index);
    let k_total: usize = ctx.sc.user_counts.iter().sum();
    let mut resamples = 0u64;
    let (users, sc, stacked) = loop {
        match cfg.partition {
            PartitionMode::Fixed => {
                let users = drop_users_partitioned(
                    &ctx.sc.user_counts,
                    &ctx.sc.groups,
                    ctx.sc.layout.cell_radius,
                    &mut rng,
                );
                break (users, &ctx.sc, &ctx.stacked);
            }
            PartitionMode::Random => {
                let users =
                    drop_users(k_total, &ctx.sc.groups, ctx.sc.layout.cell_radius, &mut rng);
                let mut counts = vec![0usize; ctx.sc.num_groups()];
                for (_, g) in &users {
                    counts[*g] += 1;
                }
                match ctx.comps.get(&counts) {
                    Some(Some((s, b))) => break (users, s, b),
                    Some(None) => {
                        resamples += 1;
                        if resamples >= MAX_RESAMPLES {
                            return Err(Error::InfeasiblePartition(format!(
                                "drop {drop_index}: {resamples} consecutive infeasible partitions"
                            )));
                        }
                    }
                    None => {
                        return Err(Error::InvalidParameter(
                            "realized partition missing from the composition cache".into(),
                        ))
                    }
                }
            }
        }
    };

    let memberships: Vec<usize> = users.iter().map(|(_, g)| *g).collect();
    let beam_of = assign_user_beams(&sc.precoders.streams, sc.pico_group, &memberships)?;
    let rho = sc.rho();
    let relay = sc.pico_group;
    let full = cfg.mode != SimMode::SnrOnly;
    let served: Vec<bool> = users
        .iter()
        .map(|(pt, g)| {
            relay == Some(*g)
                && match cfg.strategy {
                    AssociationStrategy::Disk => sc.layout.is_pico_associated(pt),
                    AssociationStrategy::PathLoss => sc.layout.is_pico_associated_pathloss(
                        pt,
                        sc.params.pico_power_ratio,
                        sc.params.path_loss_exponent,
                    ),
                }
        })
        .collect();

    let mut records = Vec::with_capacity(cfg.channels_per_drop as usize);
    for _ in 0..cfg.channels_per_drop {
        // The backhaul hop is one realization shared by the drop's relay
        // users; its marginal law is what the per-user analysis needs.
        let hop1 = relay.map(|g| {
            let hp = sc.models[g].sample_channel(&mut rng);
            let zp = hp.adjoint() * stacked;
            let s_col = sc.precoders.group_offset(g);
            let pl_ms = sc.params.path_gain(sc.layout.pico_dist);
            let useful = pl_ms * zp[s_col].norm_sqr();
            let mut denom = 1.0 / rho;
            if full {
                for j in 0..zp.len() {
                    if j != s_col {
                        denom += pl_ms * zp[j].norm_sqr();
                    }
                }
            }
            useful / denom
        });

        let mut sinr = Vec::with_capacity(users.len());
        for (k, (pt, g)) in users.iter().enumerate() {
            let pl_l = sc.params.path_gain(pt.radius);
            let h = sc.models[*g].sample_channel(&mut rng);
            let z = h.adjoint() * stacked;
            if served[k] {
                let pl_sk = sc.params.path_gain(sc.layout.dist_user_pico(pt));
                let h_sk = complex_gaussian(&mut rng);
                let mut denom = 1.0 / rho;
                if full {
                    // The whole macro downlink interferes with hop two.
                    for j in 0..z.len() {
                        denom += pl_l * z[j].norm_sqr();
                    }
                }
                let hop2 = sc.tau() * pl_sk * h_sk.norm_sqr() / denom;
                sinr.push(hop1.expect("served user without relay").min(hop2));
            } else {
                let own = sc.precoders.group_offset(beam_of[k].0) + beam_of[k].1;
                let useful = pl_l * z[own].norm_sqr();
                let mut denom = 1.0 / rho;
                if full {
                    for j in 0..z.len() {
                        if j != own {
                            denom += pl_l * z[j].norm_sqr();
                        }
                    }
                    if relay.is_some() {
                        let pl_sk = sc.params.path_gain(sc.layout.dist_user_pico(pt));
                        let h_sk = complex_gaussian(&mut rng);
                        denom += sc.pico_interference_coeff() * pl_sk * h_sk.norm_sqr();
                    }
                }
                sinr.push(useful / denom);
            }
        }
        records.push(TrialRecord {
            sinr,
            pico_served: served.clone(),
            group: memberships.clone(),
        });
    }
    Ok((records, resamples))
}

/// Sufficient statistics per threshold, merged associatively.
#[derive(Clone)]
struct ThreshStat {
    sum_f: f64,
    sum_f2: f64,
    sum_u: f64,
    sum_u2: f64,
}

struct Accum {
    per_x: Vec<ThreshStat>,
    drops: u64,
    pico_users: u64,
    relay_group_users: u64,
    resamples: u64,
}

impl Accum {
    fn new(n: usize) -> Self {
        Self {
            per_x: vec![
                ThreshStat { sum_f: 0.0, sum_f2: 0.0, sum_u: 0.0, sum_u2: 0.0 };
                n
            ],
            drops: 0,
            pico_users: 0,
            relay_group_users: 0,
            resamples: 0,
        }
    }

    fn absorb(&mut self, records: &[TrialRecord], xs: &[f64], relay: Option<usize>) {
        let reps = records.len() as f64;
        for (i, &x) in xs.iter().enumerate() {
            let f: f64 = records.iter().map(|r| r.outage_fraction(x)).sum::<f64>() / reps;
            let u: f64 =
                records.iter().map(|r| f64::from(r.any_outage(x))).sum::<f64>() / reps;
            let st = &mut self.per_x[i];
            st.sum_f += f;
            st.sum_f2 += f * f;
            st.sum_u += u;
            st.sum_u2 += u * u;
        }
        self.drops += 1;
        if let Some(g) = relay {
            let rec = &records[0];
            for k in 0..rec.group.len() {
                if rec.group[k] == g {
                    self.relay_group_users += 1;
                    if rec.pico_served[k] {
                        self.pico_users += 1;
                    }
                }
            }
        }
    }

    fn add(&mut self, other: Accum) {
        for (a, b) in self.per_x.iter_mut().zip(other.per_x) {
            a.sum_f += b.sum_f;
            a.sum_f2 += b.sum_f2;
            a.sum_u += b.sum_u;
            a.sum_u2 += b.sum_u2;
        }
        self.drops += other.drops;
        self.pico_users += other.pico_users;
        self.relay_group_users += other.relay_group_users;
        self.resamples += other.resamples;
    }
}

fn mean_se(sum: f64, sum2: f64, n: f64) -> (f64, f64) {
    let mean = sum / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// A Monte Carlo outage curve with its companion statistics.
pub struct CurveEstimate {
    /// Mean-fraction statistic (the analysis-comparable one) with standard
    /// errors per point.
    pub curve: OutageCurve,
    /// Probability that at least one user is in outage, per threshold.
    pub union_probabilities: Vec<f64>,
    pub union_stderrs: Vec<f64>,
    /// Fraction of relay-group users that ended relay-served.
    pub pico_fraction: f64,
    /// Infeasible random partitions that were resampled.
    pub resampled_drops: u64,
}

/// Estimate the outage curve over a sorted dB threshold grid.
pub fn estimate_outage_curve(
    sc: &Scenario,
    cfg: TrialConfig,
    thresholds_db: &[f64],
) -> Result<CurveEstimate> {
    if thresholds_db.is_empty() {
        return Err(Error::InvalidParameter("empty threshold grid".into()));
    }
    if thresholds_db.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "thresholds must be strictly increasing".into(),
        ));
    }
    let ctx = prepare(sc, cfg)?;
    let xs: Vec<f64> = thresholds_db.iter().map(|db| db_to_linear(*db)).collect();
    let n = ctx.cfg.num_drops;
    let chunks: Result<Vec<Accum>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accum::new(xs.len());
            for drop_index in (c * CHUNK)..((c + 1) * CHUNK).min(n) {
                let (records, resamples) = run_drop(&ctx, drop_index)?;
                acc.absorb(&records, &xs, ctx.sc.pico_group);
                acc.resamples += resamples;
            }
            Ok(acc)
        })
        .collect();
    let mut total = Accum::new(xs.len());
    for chunk in chunks? {
        total.add(chunk);
    }

    let nd = total.drops as f64;
    let mut probs = Vec::with_capacity(xs.len());
    let mut ses = Vec::with_capacity(xs.len());
    let mut union_probs = Vec::with_capacity(xs.len());
    let mut union_ses = Vec::with_capacity(xs.len());
    for st in &total.per_x {
        let (m, se) = mean_se(st.sum_f, st.sum_f2, nd);
        probs.push(m);
        ses.push(se);
        let (mu, seu) = mean_se(st.sum_u, st.sum_u2, nd);
        union_probs.push(mu);
        union_ses.push(seu);
    }
    let curve = OutageCurve::new(
        thresholds_db.to_vec(),
        probs,
        Some(ses),
        Provenance::MonteCarlo,
        config_fingerprint(&ctx.sc),
    )?;
    let pico_fraction = if total.relay_group_users > 0 {
        total.pico_users as f64 / total.relay_group_users as f64
    } else {
        0.0
    };
    Ok(CurveEstimate {
        curve,
        union_probabilities: union_probs,
        union_stderrs: union_ses,
        pico_fraction,
        resampled_drops: total.resamples,
    })
}
