//! Cell-level outage: the per-user averaged terms composed into one number.
//!
//! The cell statistic is the expected fraction of users in outage. Each
//! mass-weighted region average first becomes a conditional per-user outage
//! by dividing out its region's landing probability; the relay group then
//! mixes its macro- and relay-served conditionals over the binomial number
//! of relay-associated users, every other group contributes its per-beam
//! conditionals directly, and the total divides by the user count. Random
//! group membership additionally mixes over all user-count compositions
//! with multinomial weights.

use crate::averaging::{avg_user_outage, AvgRegion, InterferenceMode};
use crate::error::{Error, Result};
use crate::gamma::ln_gamma;
use crate::geometry::region_masses;
use crate::noise_limited::noise_limited_avg;
use crate::scenario::Scenario;

/// How `cell_outage_random` treats compositions whose stream demand exceeds
/// a group's eigenspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasiblePolicy {
    /// Propagate the error.
    Error,
    /// Drop the composition and renormalize the remaining weights.
    SkipAndRenormalize,
}

/// ln C(n, k).
fn ln_binom(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// All user-count compositions (K_1..K_G) of `k` over `g` groups, first
/// coordinate descending; there are C(k+g−1, g−1) of them.
pub fn compositions(k: usize, g: usize) -> Result<Vec<Vec<usize>>> {
    if g == 0 {
        return Err(Error::InvalidParameter("at least one group required".into()));
    }
    let ln_count = ln_binom(k + g - 1, g - 1);
    if ln_count > (200_000.0_f64).ln() {
        return Err(Error::InvalidParameter(format!(
            "{k} users over {g} groups yields too many compositions to enumerate; \
             use the Monte Carlo estimator instead"
        )));
    }
    fn rec(slot: usize, remaining: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot + 1 == cur.len() {
            cur[slot] = remaining;
            out.push(cur.clone());
            return;
        }
        for q in (0..=remaining).rev() {
            cur[slot] = q;
            rec(slot + 1, remaining - q, cur, out);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; g];
    rec(0, k, &mut cur, &mut out);
    Ok(out)
}

/// Multinomial probability of one composition under per-group membership
/// probabilities: C(K; K_1..K_G) Π p_g^{K_g}.
pub fn composition_weight(comp: &[usize], probs: &[f64]) -> Result<f64> {
    if comp.len() != probs.len() {
        return Err(Error::InvalidParameter(
            "composition and probability lengths differ".into(),
        ));
    }
    let k: usize = comp.iter().sum();
    let mut ln_w = ln_gamma(k as f64 + 1.0);
    for (&c, &p) in comp.iter().zip(probs) {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "membership probability {p} outside [0,1]"
            )));
        }
        ln_w -= ln_gamma(c as f64 + 1.0);
        if c > 0 {
            if p == 0.0 {
                return Ok(0.0);
            }
            ln_w += c as f64 * p.ln();
        }
    }
    Ok(ln_w.exp())
}

/// Cell-wide mixture assembly from a per-region term provider. The provider
/// returns mass-weighted averages; this divides each by its region mass to
/// get conditional per-user outages before mixing.
fn assemble_cell<F: Fn(AvgRegion) -> Result<f64>>(sc: &Scenario, term: F) -> Result<f64> {
    let k_total: usize = sc.user_counts.iter().sum();
    if k_total == 0 {
        return Err(Error::InvalidParameter("no users in the cell".into()));
    }
    let mut acc = 0.0;
    if let Some(g) = sc.pico_group {
        let kg = sc.user_counts[g];
        if kg > 0 {
            let rm = region_masses(&sc.layout, sc.groups[g].spread_rad, sc.sum_delta())?;
            let mut macro_cond = 0.0;
            if rm.macro_in_pico_group > 0.0 {
                let mut sum = 0.0;
                for beam in sc.user_beams(g) {
                    sum += term(AvgRegion::MacroInPicoGroup { local_beam: beam })?;
                }
                macro_cond = sum / (kg as f64 * rm.macro_in_pico_group);
            }
            let mut pico_cond = 0.0;
            if rm.pico_served > 0.0 {
                pico_cond = term(AvgRegion::PicoServed)? / rm.pico_served;
            }
            let (p_gm, p_gs) = (1.0 - rm.p_gs, rm.p_gs);
            for i in 0..=kg {
                let w = ln_binom(kg, i).exp()
                    * p_gm.powi((kg - i) as i32)
                    * p_gs.powi(i as i32);
                acc += w * ((kg - i) as f64 * macro_cond + i as f64 * pico_cond);
            }
        }
    }
    for g in 0..sc.num_groups() {
        if sc.pico_group == Some(g) {
            continue;
        }
        let mass = sc.groups[g].spread_rad / sc.sum_delta();
        for beam in sc.user_beams(g) {
            acc += term(AvgRegion::MacroOtherGroup { group: g, local_beam: beam })? / mass;
        }
    }
    Ok(acc / k_total as f64)
}

/// Cell outage for the scenario's fixed user partition.
pub fn cell_outage_fixed(sc: &Scenario, x: f64, mode: InterferenceMode) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::InvalidParameter("threshold must be nonnegative".into()));
    }
    let spectra = sc.spectra_at(x)?;
    assemble_cell(sc, |region| avg_user_outage(sc, &spectra, region, mode))
}

/// Cell outage assembled from the noise-limited closed forms.
pub fn cell_outage_noise_limited(sc: &Scenario, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::InvalidParameter("threshold must be nonnegative".into()));
    }
    assemble_cell(sc, |region| noise_limited_avg(sc, region, x))
}

/// Cell outage under multinomial random group membership: mixes the fixed
/// result over all compositions of the total user count, weighted by the
/// wedge-width membership probabilities.
pub fn cell_outage_random(
    sc: &Scenario,
    x: f64,
    mode: InterferenceMode,
    policy: InfeasiblePolicy,
) -> Result<f64> {
    let k_total: usize = sc.user_counts.iter().sum();
    let g = sc.num_groups();
    let sum_delta = sc.sum_delta();
    let probs: Vec<f64> = sc.groups.iter().map(|gr| gr.spread_rad / sum_delta).collect();
    let mut acc = 0.0;
    let mut weight_used = 0.0;
    for comp in compositions(k_total, g)? {
        let w = composition_weight(&comp, &probs)?;
        if w == 0.0 {
            continue;
        }
        match sc.with_user_counts(comp.clone()) {
            Ok(sub) => {
                acc += w * cell_outage_fixed(&sub, x, mode)?;
                weight_used += w;
            }
            Err(e) => match policy {
                InfeasiblePolicy::Error => {
                    return Err(Error::InfeasiblePartition(format!(
                        "composition {comp:?}: {e}"
                    )));
                }
                InfeasiblePolicy::SkipAndRenormalize => continue,
            },
        }
    }
    if weight_used <= 0.0 {
        return Err(Error::InfeasiblePartition(
            "every composition was infeasible".into(),
        ));
    }
    Ok(acc / weight_used)
}

/// Where an outage curve came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    MonteCarlo,
    NoiseLimited,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Analytic => write!(f, "analytic"),
            Provenance::MonteCarlo => write!(f, "monte-carlo"),
            Provenance::NoiseLimited => write!(f, "noise-limited"),
        }
    }
}

/// A sampled outage-vs-threshold curve with its origin and the fingerprint
/// of the configuration that produced it.
#[derive(Debug, Clone)]
pub struct OutageCurve {
    pub thresholds_db: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Per-point standard errors; present for Monte Carlo curves.
    pub stderrs: Option<Vec<f64>>,
    pub provenance: Provenance,
    pub fingerprint: String,
}

impl OutageCurve {
    /// Validates monotonicity and range. Monte Carlo curves get statistical
    /// slack from their standard errors; analytic curves only quadrature
    /// slack. Sub-epsilon range excursions are clamped.
    pub fn new(
        thresholds_db: Vec<f64>,
        probabilities: Vec<f64>,
        stderrs: Option<Vec<f64>>,
        provenance: Provenance,
        fingerprint: String,
    ) -> Result<Self> {
        if thresholds_db.len() != probabilities.len() {
            return Err(Error::InvalidParameter(
                "threshold and probability lengths differ".into(),
            ));
        }
        if let Some(se) = &stderrs {
            if se.len() != probabilities.len() {
                return Err(Error::InvalidParameter(
                    "standard error length differs".into(),
                ));
            }
        }
        if thresholds_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "thresholds must be strictly increasing".into(),
            ));
        }
        let mut probabilities = probabilities;
        for (i, p) in probabilities.iter_mut().enumerate() {
            if !(-1e-9..=1.0 + 1e-9).contains(p) {
                return Err(Error::InvalidParameter(format!(
                    "probability {p} at point {i} outside [0,1]"
                )));
            }
            *p = p.clamp(0.0, 1.0);
        }
        for i in 1..probabilities.len() {
            let slack = match (&stderrs, provenance) {
                (Some(se), Provenance::MonteCarlo) => 4.0 * (se[i] + se[i - 1]) + 1e-6,
                _ => 1e-6,
            };
            if probabilities[i] + slack < probabilities[i - 1] {
                return Err(Error::InvalidParameter(format!(
                    "outage decreases from {} to {} between points {} and {}",
                    probabilities[i - 1],
                    probabilities[i],
                    i - 1,
                    i
                )));
            }
        }
        Ok(Self {
            thresholds_db,
            probabilities,
            stderrs,
            provenance,
            fingerprint,
        })
    }
}

/// FNV-1a fingerprint of everything that shapes a scenario's curves.
pub fn config_fingerprint(sc: &Scenario) -> String {
    let mut desc = String::new();
    let p = &sc.params;
    desc.push_str(&format!(
        "m={};d={};alpha={};rhos={};ratio={};ksq={};flag={};",
        p.num_antennas,
        p.antenna_spacing,
        p.path_loss_exponent,
        p.rho_times_s,
        p.pico_power_ratio,
        p.kappa_sq,
        p.kappa_sq_in_pico_interference
    ));
    let l = &sc.layout;
    desc.push_str(&format!(
        "R={};r={};dms={};paoa={};",
        l.cell_radius, l.pico_radius, l.pico_dist, l.pico_aoa
    ));
    for g in &sc.groups {
        desc.push_str(&format!("g={},{};", g.aoa_rad, g.spread_rad));
    }
    desc.push_str(&format!("k={:?};pg={:?}", sc.user_counts, sc.pico_group));
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in desc.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
