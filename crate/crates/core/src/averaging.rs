//! Position-averaged outage of one served beam over its geometric region.
//!
//! Users land uniformly in area over the union of the group wedges, so the
//! averaged outage of a beam is a two-dimensional polar integral of the
//! pointwise outage weighted by l/(R²ΣΔ). Each average is mass-weighted:
//! it carries the probability of landing in the region, not the conditional
//! mean given the region. The macro-served part of the relay group's wedge
//! is assembled from its exact pieces — the angular flanks outside the relay
//! sector, the slab in front of the relay disk, and the slab beyond it —
//! while the relay-served region runs from the tie radius out to the disk
//! (or cell) boundary.

use crate::error::{Error, Result};
use crate::geometry::PolarPoint;
use crate::numerics::{adaptive_simpson_fallible, adaptive_simpson_layered};
use crate::outage::{
    user_outage_macro, user_outage_macro_noise_only, user_outage_pico,
    user_outage_pico_noise_only,
};
use crate::scenario::{Scenario, SpectraAtX};

/// Which interference terms the pointwise outage keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceMode {
    /// Intra-group, inter-group and cross-tier terms all active.
    Full,
    /// Pure beamformed SNR; every interference term dropped.
    NoiseOnly,
}

/// Region selector for the averaged per-user outage terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgRegion {
    /// Macro-served remainder of the relay group's wedge, on one of that
    /// group's user beams (local index within the group's beam block).
    MacroInPicoGroup { local_beam: usize },
    /// The relay-served slice of the relay group's wedge.
    PicoServed,
    /// The whole wedge of a group hosting no relay.
    MacroOtherGroup { group: usize, local_beam: usize },
}

/// Relative tolerance of the outer (angular) quadrature.
const OUTER_REL_TOL: f64 = 1e-6;
/// Relative tolerance of the inner (radial) quadrature; tighter than the
/// outer one so its noise does not masquerade as angular structure.
const INNER_REL_TOL: f64 = 1e-7;
/// Absolute floor in units of the unnormalized position mass R²ΣΔ.
const MASS_FLOOR_REL: f64 = 1e-10;

/// ∫∫ l·p(l, β) dl dβ over an angular interval with β-dependent radial
/// bounds; `p` is the pointwise outage.
fn outage_mass<P, L, H>(p: &P, beta_lo: f64, beta_hi: f64, r_lo: L, r_hi: H, floor: f64) -> Result<f64>
where
    P: Fn(&PolarPoint) -> Result<f64>,
    L: Fn(f64) -> Result<f64>,
    H: Fn(f64) -> Result<f64>,
{
    if beta_hi <= beta_lo {
        return Ok(0.0);
    }
    adaptive_simpson_fallible(
        |beta| {
            let lo = r_lo(beta)?;
            let hi = r_hi(beta)?;
            if hi <= lo {
                return Ok(0.0);
            }
            // Layered: a nearly annihilated beam confines its coverage to a
            // boundary layer metres wide, invisible to coarse stencils.
            adaptive_simpson_layered(
                |l| {
                    let point = PolarPoint { radius: l, angle: beta };
                    Ok(l * p(&point)?)
                },
                lo,
                hi,
                INNER_REL_TOL,
                floor,
            )
        },
        beta_lo,
        beta_hi,
        OUTER_REL_TOL,
        floor,
    )
}

/// Averaged outage of one macro user beam over its region: the whole wedge
/// for a group without the relay, the wedge minus the relay-served slice for
/// the relay's own group. Mass-weighted by the landing probability.
pub fn avg_outage_macro_beam(
    sc: &Scenario,
    spectra: &SpectraAtX,
    g: usize,
    local_beam: usize,
    mode: InterferenceMode,
) -> Result<f64> {
    if g >= sc.num_groups() {
        return Err(Error::InvalidParameter(format!("group {g} out of range")));
    }
    if !sc.user_beams(g).contains(&local_beam) {
        return Err(Error::InvalidParameter(format!(
            "beam {local_beam} is not a user beam of group {g}"
        )));
    }
    let x = spectra.x;
    if x == 0.0 {
        return Ok(0.0);
    }
    let layout = &sc.layout;
    let big_r = layout.cell_radius;
    let norm = big_r * big_r * sc.sum_delta();
    let floor = MASS_FLOOR_REL * norm;
    let aoa = sc.groups[g].aoa_rad;
    let delta = sc.groups[g].spread_rad;
    let p = |point: &PolarPoint| match mode {
        InterferenceMode::Full => user_outage_macro(sc, spectra, g, local_beam, point),
        InterferenceMode::NoiseOnly => user_outage_macro_noise_only(sc, g, local_beam, x, point),
    };

    if sc.pico_group != Some(g) {
        // Whole wedge; no symmetry is assumed because the relay (if any)
        // sits in another wedge and breaks it.
        let mass = outage_mass(&p, aoa - delta, aoa + delta, |_| Ok(0.0), |_| Ok(big_r), floor)?;
        return Ok(mass / norm);
    }

    // Relay group: everything is symmetric about the relay bearing, so
    // integrate the half-wedge in the offset angle and double. The offset
    // is relative to the bearing; shift it back before the pointwise call.
    let lim = layout.theta0().min(delta);
    let clip = layout.clip_angle().min(lim);
    let d = layout.pico_dist;
    let p_off = |pt: &PolarPoint| p(&PolarPoint { radius: pt.radius, angle: aoa + pt.angle });
    let pr = |offset: f64| -> Result<f64> {
        Ok(layout.pico_region_upper(aoa + offset)?.min(big_r))
    };
    // Angular flank outside the relay sector, full radial range.
    let flank = outage_mass(&p_off, lim, delta, |_| Ok(0.0), |_| Ok(big_r), floor)?;
    // In front of the relay disk.
    let front = outage_mass(&p_off, 0.0, lim, |_| Ok(0.0), |_| Ok(d), floor)?;
    // Beyond the disk; empty at offsets where the disk pokes past the cell.
    let beyond = outage_mass(&p_off, clip, lim, &pr, |_| Ok(big_r), floor)?;
    Ok(2.0 * (flank + front + beyond) / norm)
}

/// Averaged outage of a relay-served user over the relay-served region,
/// mass-weighted by the landing probability.
pub fn avg_outage_pico(sc: &Scenario, spectra: &SpectraAtX, mode: InterferenceMode) -> Result<f64> {
    let g = sc
        .pico_group
        .ok_or_else(|| Error::InvalidParameter("scenario has no relay".into()))?;
    let x = spectra.x;
    if x == 0.0 {
        return Ok(0.0);
    }
    let layout = &sc.layout;
    let big_r = layout.cell_radius;
    let norm = big_r * big_r * sc.sum_delta();
    let floor = MASS_FLOOR_REL * norm;
    let aoa = sc.groups[g].aoa_rad;
    let delta = sc.groups[g].spread_rad;
    let lim = layout.theta0().min(delta);
    let clip = layout.clip_angle().min(lim);
    let d = layout.pico_dist;
    let p = |point: &PolarPoint| match mode {
        InterferenceMode::Full => user_outage_pico(sc, spectra, point),
        InterferenceMode::NoiseOnly => user_outage_pico_noise_only(sc, x, point),
    };
    let p_off = |pt: &PolarPoint| p(&PolarPoint { radius: pt.radius, angle: aoa + pt.angle });
    let pr = |offset: f64| -> Result<f64> {
        Ok(layout.pico_region_upper(aoa + offset)?.min(big_r))
    };
    // Where the disk crosses the cell border the region runs out to R,
    // elsewhere out to the disk boundary; symmetric about the bearing.
    let clipped = outage_mass(&p_off, 0.0, clip, |_| Ok(d), |_| Ok(big_r), floor)?;
    let free = outage_mass(&p_off, clip, lim, |_| Ok(d), &pr, floor)?;
    Ok(2.0 * (clipped + free) / norm)
}

/// Region-dispatched averaged per-user outage.
pub fn avg_user_outage(
    sc: &Scenario,
    spectra: &SpectraAtX,
    region: AvgRegion,
    mode: InterferenceMode,
) -> Result<f64> {
    match region {
        AvgRegion::MacroInPicoGroup { local_beam } => {
            let g = sc
                .pico_group
                .ok_or_else(|| Error::InvalidParameter("scenario has no relay".into()))?;
            avg_outage_macro_beam(sc, spectra, g, local_beam, mode)
        }
        AvgRegion::PicoServed => avg_outage_pico(sc, spectra, mode),
        AvgRegion::MacroOtherGroup { group, local_beam } => {
            if sc.pico_group == Some(group) {
                return Err(Error::InvalidParameter(format!(
                    "group {group} hosts the relay; use the relay-group regions"
                )));
            }
            avg_outage_macro_beam(sc, spectra, group, local_beam, mode)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::region_masses as masses;
    use crate::rng::rng_for;
    use crate::scenario::Scenario;
    use crate::testutil::{mc_macro_outage_at, mc_pico_outage_at, table_scenario};
    use rand::Rng;

    fn reference() -> Scenario {
        table_scenario(16, &[3, 2])
    }

    #[test]
    fn test_avg_zero_threshold_is_zero() {
        let sc = reference();
        let spectra = sc.spectra_at(0.0).unwrap();
        for region in [
            AvgRegion::MacroInPicoGroup { local_beam: 1 },
            AvgRegion::PicoServed,
            AvgRegion::MacroOtherGroup { group: 1, local_beam: 0 },
        ] {
            for mode in [InterferenceMode::Full, InterferenceMode::NoiseOnly] {
                let v = avg_user_outage(&sc, &spectra, region, mode).unwrap();
                assert_eq!(v, 0.0, "{region:?} {mode:?}");
            }
        }
    }

    #[test]
    fn test_avg_mass_limit_at_huge_threshold() {
        // As the threshold diverges every pointwise outage tends to one, so
        // each average tends to its region's landing probability.
        let sc = reference();
        let spectra = sc.spectra_at(1.0e4).unwrap();
        let rm = masses(&sc.layout, sc.groups[0].spread_rad, sc.sum_delta()).unwrap();
        let am = avg_outage_macro_beam(&sc, &spectra, 0, 1, InterferenceMode::Full).unwrap();
        assert!(
            (am - rm.macro_in_pico_group).abs() < 1e-4 * rm.macro_in_pico_group,
            "macro-in-relay-group average {am} vs mass {}",
            rm.macro_in_pico_group
        );
        let as_ = avg_outage_pico(&sc, &spectra, InterferenceMode::Full).unwrap();
        assert!(
            (as_ - rm.pico_served).abs() < 1e-4 * rm.pico_served,
            "relay-served average {as_} vs mass {}",
            rm.pico_served
        );
        let other_mass = sc.groups[1].spread_rad / sc.sum_delta();
        let ao = avg_outage_macro_beam(&sc, &spectra, 1, 0, InterferenceMode::Full).unwrap();
        assert!(
            (ao - other_mass).abs() < 1e-4 * other_mass,
            "other-group average {ao} vs mass {other_mass}"
        );
    }

    /// Positional Monte Carlo of a mass-weighted average: positions uniform
    /// in the group wedge, `keep` masks the region, `draws` channel draws per
    /// position. Returns (estimate, standard error).
    fn positional_mc<F, K>(
        sc: &Scenario,
        g: usize,
        n_pos: usize,
        keep: K,
        per_point: F,
        seed_index: u64,
    ) -> (f64, f64)
    where
        F: Fn(&PolarPoint, &mut rand_chacha::ChaCha8Rng) -> f64,
        K: Fn(&PolarPoint) -> bool,
    {
        let mut rng = rng_for(0x5eed_0012, seed_index);
        let aoa = sc.groups[g].aoa_rad;
        let delta = sc.groups[g].spread_rad;
        let wedge_mass = delta / sc.sum_delta();
        let mut vals = Vec::with_capacity(n_pos);
        for _ in 0..n_pos {
            let beta = aoa + delta * (2.0 * rng.random::<f64>() - 1.0);
            let l = sc.layout.cell_radius * rng.random::<f64>().sqrt();
            let point = PolarPoint { radius: l, angle: beta };
            let v = if keep(&point) { per_point(&point, &mut rng) } else { 0.0 };
            vals.push(v);
        }
        let mean = vals.iter().sum::<f64>() / n_pos as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (n_pos as f64 - 1.0);
        (
            wedge_mass * mean,
            wedge_mass * (var / n_pos as f64).sqrt(),
        )
    }

    #[test]
    fn test_avg_macro_other_group_matches_positional_mc() {
        let sc = reference();
        let x = 1.0;
        let spectra = sc.spectra_at(x).unwrap();
        let analytic =
            avg_outage_macro_beam(&sc, &spectra, 1, 0, InterferenceMode::Full).unwrap();
        let (mc, se) = positional_mc(
            &sc,
            1,
            6000,
            |_| true,
            |pt, rng| mc_macro_outage_at(&sc, 1, 0, pt, x, 150, rng),
            1,
        );
        assert!(
            (analytic - mc).abs() < 3.0 * se + 1e-3,
            "analytic {analytic} vs positional MC {mc} ± {se}"
        );
    }

    #[test]
    fn test_avg_macro_pico_group_matches_positional_mc() {
        let sc = reference();
        let x = 1.0;
        let spectra = sc.spectra_at(x).unwrap();
        let analytic =
            avg_outage_macro_beam(&sc, &spectra, 0, 1, InterferenceMode::Full).unwrap();
        let layout = sc.layout.clone();
        let (mc, se) = positional_mc(
            &sc,
            0,
            6000,
            move |pt| !layout.is_pico_associated(pt),
            |pt, rng| mc_macro_outage_at(&sc, 0, 1, pt, x, 150, rng),
            2,
        );
        assert!(
            (analytic - mc).abs() < 3.0 * se + 1e-3,
            "analytic {analytic} vs positional MC {mc} ± {se}"
        );
    }

    #[test]
    fn test_avg_pico_served_matches_positional_mc() {
        let sc = reference();
        let x = 1.0;
        let spectra = sc.spectra_at(x).unwrap();
        let analytic = avg_outage_pico(&sc, &spectra, InterferenceMode::Full).unwrap();
        let layout = sc.layout.clone();
        let (mc, se) = positional_mc(
            &sc,
            0,
            6000,
            move |pt| layout.is_pico_associated(pt),
            |pt, rng| mc_pico_outage_at(&sc, pt, x, 150, rng),
            3,
        );
        assert!(
            (analytic - mc).abs() < 3.0 * se + 1e-3,
            "analytic {analytic} vs positional MC {mc} ± {se}"
        );
    }

    #[test]
    fn test_avg_noise_only_below_full() {
        // Dropping interference can only improve every pointwise SINR.
        let sc = reference();
        let spectra = sc.spectra_at(1.0).unwrap();
        for region in [
            AvgRegion::MacroInPicoGroup { local_beam: 1 },
            AvgRegion::PicoServed,
            AvgRegion::MacroOtherGroup { group: 1, local_beam: 0 },
        ] {
            let full = avg_user_outage(&sc, &spectra, region, InterferenceMode::Full).unwrap();
            let noise =
                avg_user_outage(&sc, &spectra, region, InterferenceMode::NoiseOnly).unwrap();
            assert!(
                noise <= full + 1e-6,
                "{region:?}: noise-only {noise} above full {full}"
            );
        }
    }

    #[test]
    fn test_avg_region_validation() {
        let sc = reference();
        let spectra = sc.spectra_at(1.0).unwrap();
        // The relay group cannot be requested through the other-group region.
        assert!(avg_user_outage(
            &sc,
            &spectra,
            AvgRegion::MacroOtherGroup { group: 0, local_beam: 1 },
            InterferenceMode::Full
        )
        .is_err());
        // Beam 0 of the relay group is the backhaul beam, not a user beam.
        assert!(avg_outage_macro_beam(&sc, &spectra, 0, 0, InterferenceMode::Full).is_err());
        assert!(avg_outage_macro_beam(&sc, &spectra, 2, 0, InterferenceMode::Full).is_err());
        // Relay regions require a relay.
        let bare = crate::testutil::bare_scenario(16, &[3, 2]);
        let bare_spectra = bare.spectra_at(1.0).unwrap();
        assert!(avg_outage_pico(&bare, &bare_spectra, InterferenceMode::Full).is_err());
        assert!(avg_user_outage(
            &bare,
            &bare_spectra,
            AvgRegion::MacroInPicoGroup { local_beam: 0 },
            InterferenceMode::Full
        )
        .is_err());
        // A group without the relay integrates over its whole wedge, and the
        // dispatcher is just a thin wrapper over the same computation.
        let via_region = avg_user_outage(
            &sc,
            &spectra,
            AvgRegion::MacroOtherGroup { group: 1, local_beam: 0 },
            InterferenceMode::Full,
        )
        .unwrap();
        let direct = avg_outage_macro_beam(&sc, &spectra, 1, 0, InterferenceMode::Full).unwrap();
        assert_eq!(via_region, direct);
    }
}
