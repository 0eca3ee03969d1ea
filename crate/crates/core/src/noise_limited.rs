//! Noise-limited (interference-free) averaged outage in closed form.
//!
//! With every interference term dropped, each pointwise coverage becomes a
//! single exponential in l^α, so the radial integrals collapse to lower
//! incomplete gamma functions: ∫_0^U l e^{−a(l/re)^α} dl =
//! re²·γ(2/α, a(U/re)^α)/(α a^{2/α}). Only a one-dimensional angular
//! integral survives in the relay group's macro term (the relay disk
//! boundary ℓ1(β) enters the gamma argument), and a two-dimensional one in
//! the relay-served term (the relay distance couples both coordinates).
//! These forms are an independent check on the general region quadrature:
//! the two paths share no integration code.

use crate::averaging::AvgRegion;
use crate::error::{Error, Result};
use crate::gamma::incomplete_gamma_lower;
use crate::geometry::{region_masses, PolarPoint};
use crate::numerics::{adaptive_gauss_kronrod, adaptive_simpson_fallible};
use crate::params::PATH_LOSS_REF_M;
use crate::scenario::Scenario;

/// Relative tolerance of the surviving angular quadratures.
const ANGULAR_REL_TOL: f64 = 1e-7;
/// Absolute floor in units of the unnormalized position mass R²ΣΔ.
const MASS_FLOOR_REL: f64 = 1e-10;

/// ∫_0^{upper} l e^{−a (l/re)^α} dl in m², re the path-loss reference.
fn radial_coverage_mass(a: f64, alpha: f64, upper_m: f64) -> Result<f64> {
    if upper_m <= 0.0 {
        return Ok(0.0);
    }
    if a == 0.0 {
        return Ok(0.5 * upper_m * upper_m);
    }
    let u = upper_m / PATH_LOSS_REF_M;
    let g = incomplete_gamma_lower(2.0 / alpha, a * u.powf(alpha))?;
    Ok(PATH_LOSS_REF_M * PATH_LOSS_REF_M * g / (alpha * a.powf(2.0 / alpha)))
}

/// Beamforming gain b^H R b of one local beam of a group.
fn beam_gain(sc: &Scenario, g: usize, local_beam: usize) -> f64 {
    sc.eff[g]
        .column(sc.precoders.group_offset(g) + local_beam)
        .norm_squared()
}

/// Noise-limited averaged outage of a macro user beam: whole wedge for a
/// group without the relay, wedge minus the relay-served slice otherwise.
pub fn nl_avg_macro_beam(sc: &Scenario, g: usize, local_beam: usize, x: f64) -> Result<f64> {
    if g >= sc.num_groups() {
        return Err(Error::InvalidParameter(format!("group {g} out of range")));
    }
    if !sc.user_beams(g).contains(&local_beam) {
        return Err(Error::InvalidParameter(format!(
            "beam {local_beam} is not a user beam of group {g}"
        )));
    }
    if x < 0.0 {
        return Err(Error::InvalidParameter("threshold must be nonnegative".into()));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let layout = &sc.layout;
    let big_r = layout.cell_radius;
    let alpha = sc.params.path_loss_exponent;
    let norm = big_r * big_r * sc.sum_delta();
    let delta = sc.groups[g].spread_rad;
    let a = x / (sc.rho() * beam_gain(sc, g, local_beam));
    let i_cell = radial_coverage_mass(a, alpha, big_r)?;

    if sc.pico_group != Some(g) {
        return Ok(delta / sc.sum_delta() - 2.0 * delta * i_cell / norm);
    }

    let aoa = sc.groups[g].aoa_rad;
    let lim = layout.theta0().min(delta);
    let clip = layout.clip_angle().min(lim);
    let d = layout.pico_dist;
    let i_front = radial_coverage_mass(a, alpha, d)?;
    // Coverage mass of the half wedge: angular flank outside the relay
    // sector, the slab in front of the disk, and — where the disk stays
    // inside the cell — the slab beyond its boundary ℓ1(β).
    let flank = (delta - lim) * i_cell;
    let front = lim * i_front;
    let beyond = adaptive_simpson_fallible(
        |offset| {
            let l1 = layout.pico_region_upper(aoa + offset)?.min(big_r);
            Ok(i_cell - radial_coverage_mass(a, alpha, l1)?)
        },
        clip,
        lim,
        ANGULAR_REL_TOL,
        MASS_FLOOR_REL * norm,
    )?;
    let mass = region_masses(layout, delta, sc.sum_delta())?.macro_in_pico_group;
    Ok(mass - 2.0 * (flank + front + beyond) / norm)
}

/// Noise-limited averaged outage of a relay-served user: the backhaul SNR
/// exponential factors out, the second hop keeps its two-dimensional
/// integral because the relay distance couples both polar coordinates.
pub fn nl_avg_pico(sc: &Scenario, x: f64) -> Result<f64> {
    let g = sc
        .pico_group
        .ok_or_else(|| Error::InvalidParameter("scenario has no relay".into()))?;
    if x < 0.0 {
        return Err(Error::InvalidParameter("threshold must be nonnegative".into()));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let layout = &sc.layout;
    let big_r = layout.cell_radius;
    let alpha = sc.params.path_loss_exponent;
    let norm = big_r * big_r * sc.sum_delta();
    let delta = sc.groups[g].spread_rad;
    let aoa = sc.groups[g].aoa_rad;
    let lim = layout.theta0().min(delta);
    let clip = layout.clip_angle().min(lim);
    let d = layout.pico_dist;
    let backhaul = (-x / (sc.rho() * sc.params.path_gain(d) * beam_gain(sc, g, 0))).exp();
    let a = x / (sc.rho() * sc.tau());
    let inner = |offset: f64, hi: f64| -> Result<f64> {
        adaptive_gauss_kronrod(
            |l| {
                let d_sk = layout.dist_user_pico(&PolarPoint { radius: l, angle: aoa + offset });
                l * (-a * (d_sk / PATH_LOSS_REF_M).powf(alpha)).exp()
            },
            d,
            hi,
            1e-7 * big_r * big_r,
        )
    };
    let clipped = adaptive_simpson_fallible(
        |offset| inner(offset, big_r),
        0.0,
        clip,
        ANGULAR_REL_TOL,
        MASS_FLOOR_REL * norm,
    )?;
    let free = adaptive_simpson_fallible(
        |offset| {
            let l1 = layout.pico_region_upper(aoa + offset)?.min(big_r);
            inner(offset, l1)
        },
        clip,
        lim,
        ANGULAR_REL_TOL,
        MASS_FLOOR_REL * norm,
    )?;
    let mass = region_masses(layout, delta, sc.sum_delta())?.pico_served;
    Ok(mass - 2.0 * backhaul * (clipped + free) / norm)
}

/// Region-dispatched noise-limited average, mirroring the general path.
pub fn noise_limited_avg(sc: &Scenario, region: AvgRegion, x: f64) -> Result<f64> {
    match region {
        AvgRegion::MacroInPicoGroup { local_beam } => {
            let g = sc
                .pico_group
                .ok_or_else(|| Error::InvalidParameter("scenario has no relay".into()))?;
            nl_avg_macro_beam(sc, g, local_beam, x)
        }
        AvgRegion::PicoServed => nl_avg_pico(sc, x),
        AvgRegion::MacroOtherGroup { group, local_beam } => {
            if sc.pico_group == Some(group) {
                return Err(Error::InvalidParameter(format!(
                    "group {group} hosts the relay; use the relay-group regions"
                )));
            }
            nl_avg_macro_beam(sc, group, local_beam, x)
        }
    }
}

/// The averaged noise-limited outage terms at one threshold: one per user
/// beam of the relay group, one for the relay-served region, and one per
/// user beam of every relay-free group (indexed by group).
#[derive(Debug, Clone)]
pub struct NoiseLimitedTerms {
    pub macro_in_pico_group: Vec<f64>,
    pub pico_served: Option<f64>,
    pub macro_other_groups: Vec<Vec<f64>>,
}

/// Evaluate every noise-limited term of the scenario at one threshold.
pub fn noise_limited_curves(sc: &Scenario, x: f64) -> Result<NoiseLimitedTerms> {
    let mut macro_in_pico_group = Vec::new();
    let mut pico_served = None;
    if let Some(g) = sc.pico_group {
        for beam in sc.user_beams(g) {
            macro_in_pico_group.push(nl_avg_macro_beam(sc, g, beam, x)?);
        }
        pico_served = Some(nl_avg_pico(sc, x)?);
    }
    let mut macro_other_groups = Vec::new();
    for g in 0..sc.num_groups() {
        let mut beams = Vec::new();
        if sc.pico_group != Some(g) {
            for beam in sc.user_beams(g) {
                beams.push(nl_avg_macro_beam(sc, g, beam, x)?);
            }
        }
        macro_other_groups.push(beams);
    }
    Ok(NoiseLimitedTerms {
        macro_in_pico_group,
        pico_served,
        macro_other_groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::{avg_user_outage, InterferenceMode};
    use crate::geometry::region_masses as masses;
    use crate::testutil::table_scenario;

    #[test]
    fn test_radial_mass_against_quadrature() {
        for &(a, alpha, upper) in &[(2.7, 4.0, 180.0), (0.4, 3.17, 200.0), (11.0, 2.5, 60.0)] {
            let oracle = adaptive_gauss_kronrod(
                |l: f64| l * (-a * (l / PATH_LOSS_REF_M).powf(alpha)).exp(),
                0.0,
                upper,
                1e-9,
            )
            .unwrap();
            let closed = radial_coverage_mass(a, alpha, upper).unwrap();
            assert!(
                (closed - oracle).abs() < 1e-7 * oracle.max(1.0),
                "a={a} α={alpha}: {closed} vs {oracle}"
            );
        }
    }

    #[test]
    fn test_nl_zero_threshold() {
        let sc = table_scenario(16, &[3, 2]);
        assert_eq!(nl_avg_macro_beam(&sc, 0, 1, 0.0).unwrap(), 0.0);
        assert_eq!(nl_avg_macro_beam(&sc, 1, 0, 0.0).unwrap(), 0.0);
        assert_eq!(nl_avg_pico(&sc, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn test_nl_matches_general_quadrature_with_interference_off() {
        // The gamma closed forms against the general region quadrature of
        // the pointwise no-interference outage: independent integration
        // paths for the same quantity.
        let sc = table_scenario(16, &[3, 2]);
        for x_db in [-5.0, 0.0, 5.0] {
            let x = crate::params::db_to_linear(x_db);
            let spectra = sc.spectra_at(x).unwrap();
            for region in [
                AvgRegion::MacroInPicoGroup { local_beam: 1 },
                AvgRegion::PicoServed,
                AvgRegion::MacroOtherGroup { group: 1, local_beam: 0 },
            ] {
                let closed = noise_limited_avg(&sc, region, x).unwrap();
                let quad =
                    avg_user_outage(&sc, &spectra, region, InterferenceMode::NoiseOnly).unwrap();
                assert!(
                    (closed - quad).abs() < 1e-3 * quad.abs().max(1e-6),
                    "{region:?} at {x_db} dB: closed {closed} vs quadrature {quad}"
                );
            }
        }
    }

    #[test]
    fn test_nl_mass_limit_at_huge_threshold() {
        let sc = table_scenario(16, &[3, 2]);
        let rm = masses(&sc.layout, sc.groups[0].spread_rad, sc.sum_delta()).unwrap();
        let x = 1.0e8;
        let am = nl_avg_macro_beam(&sc, 0, 1, x).unwrap();
        assert!((am - rm.macro_in_pico_group).abs() < 1e-4 * rm.macro_in_pico_group);
        let as_ = nl_avg_pico(&sc, x).unwrap();
        assert!((as_ - rm.pico_served).abs() < 1e-4 * rm.pico_served);
        let other_mass = sc.groups[1].spread_rad / sc.sum_delta();
        let ao = nl_avg_macro_beam(&sc, 1, 0, x).unwrap();
        assert!((ao - other_mass).abs() < 1e-4 * other_mass);
    }

    #[test]
    fn test_nl_terms_collection_shape() {
        let sc = table_scenario(16, &[3, 2]);
        let terms = noise_limited_curves(&sc, 1.0).unwrap();
        assert_eq!(terms.macro_in_pico_group.len(), 3);
        assert!(terms.pico_served.is_some());
        assert_eq!(terms.macro_other_groups.len(), 2);
        assert!(terms.macro_other_groups[0].is_empty());
        assert_eq!(terms.macro_other_groups[1].len(), 2);
        for v in terms
            .macro_in_pico_group
            .iter()
            .chain(terms.macro_other_groups[1].iter())
            .chain(terms.pico_served.iter())
        {
            assert!((0.0..=1.0).contains(v), "term {v} outside [0,1]");
        }
    }

    #[test]
    fn test_nl_validation() {
        let sc = table_scenario(16, &[3, 2]);
        assert!(nl_avg_macro_beam(&sc, 0, 0, 1.0).is_err());
        assert!(nl_avg_macro_beam(&sc, 2, 0, 1.0).is_err());
        assert!(nl_avg_macro_beam(&sc, 1, 0, -1.0).is_err());
        assert!(noise_limited_avg(
            &sc,
            AvgRegion::MacroOtherGroup { group: 0, local_beam: 1 },
            1.0
        )
        .is_err());
        let bare = crate::testutil::bare_scenario(16, &[3, 2]);
        assert!(nl_avg_pico(&bare, 1.0).is_err());
        let terms = noise_limited_curves(&bare, 1.0).unwrap();
        assert!(terms.macro_in_pico_group.is_empty());
        assert!(terms.pico_served.is_none());
        assert_eq!(terms.macro_other_groups[0].len(), 3);
        assert_eq!(terms.macro_other_groups[1].len(), 2);
    }
}
