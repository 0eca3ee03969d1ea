//! Outage probability of a single user at a fixed position, averaged over
//! channel fading only.
//!
//! Every SINR event `SINR > x` rearranges into `Σ μ_i |w_i|² > x/ρ` for
//! iid complex Gaussians w, with the spectrum μ carrying the path gains,
//! beam gains and interference weights. Macro-served users additionally see
//! the relay's transmission as an independent exponential term, which
//! integrates out into the algebraic front factor μ1/(μ1 + x·τ·g(d_sk)).
//! Relay-served users need both hops up: the backhaul beam at the relay
//! and the relay-to-user link against the full macro downlink.

use crate::error::Result;
use crate::geometry::PolarPoint;
use crate::scenario::{Scenario, SpectraAtX};

/// Relay interference front factor for a macro-served user at distance
/// `d_sk` from the relay, given the user's path gain and top eigenvalue μ1.
fn relay_factor(sc: &Scenario, pl: f64, mu1: f64, x: f64, d_sk: f64) -> f64 {
    if sc.pico_group.is_none() {
        return 1.0;
    }
    let w = x * sc.pico_interference_coeff() * sc.params.path_gain(d_sk);
    // Written as a ratio so an infinite path gain (radius → 0) gives 1.
    1.0 / (1.0 + w / (pl * mu1))
}

/// Outage of a macro-served user on local beam `local_beam` of group `g`
/// at a fixed position, with all interference terms active.
pub fn user_outage_macro(
    sc: &Scenario,
    spectra: &SpectraAtX,
    g: usize,
    local_beam: usize,
    point: &PolarPoint,
) -> Result<f64> {
    let x = spectra.x;
    if x == 0.0 {
        return Ok(0.0);
    }
    let xi = &spectra.beams[g][local_beam];
    let pl = sc.params.path_gain(point.radius);
    let tail = xi.tail(x / (sc.rho() * pl))?;
    let factor = relay_factor(sc, pl, xi.mu1(), x, sc.layout.dist_user_pico(point));
    Ok(1.0 - factor * tail)
}

/// Macro-served outage with interference suppressed: pure beamformed SNR.
pub fn user_outage_macro_noise_only(
    sc: &Scenario,
    g: usize,
    local_beam: usize,
    x: f64,
    point: &PolarPoint,
) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let gain = sc
        .eff[g]
        .column(sc.precoders.group_offset(g) + local_beam)
        .norm_squared();
    let pl = sc.params.path_gain(point.radius);
    Ok(1.0 - (-x / (sc.rho() * pl * gain)).exp())
}

/// Outage of a relay-served user at a fixed position: the decode-and-forward
/// chain fails if either hop does.
pub fn user_outage_pico(sc: &Scenario, spectra: &SpectraAtX, point: &PolarPoint) -> Result<f64> {
    let x = spectra.x;
    if x == 0.0 {
        return Ok(0.0);
    }
    let g = sc
        .pico_group
        .expect("relay-served outage requires a relay");
    let rho = sc.rho();
    // Hop 1: macro → relay on the backhaul beam, at the relay's position.
    let pl_ms = sc.params.path_gain(sc.layout.pico_dist);
    let cov1 = spectra.hop1(g).tail(x / (rho * pl_ms))?;
    // Hop 2: relay → user against the full macro downlink. At the relay
    // position itself the link gain diverges and the hop never fails.
    let pl_l = sc.params.path_gain(point.radius);
    let pl_sk = sc.params.path_gain(sc.layout.dist_user_pico(point));
    let cov2 = if pl_sk.is_infinite() {
        1.0
    } else {
        sc.hop2_spectrum(pl_l, pl_sk, x)?.tail(x / rho)?
    };
    Ok(1.0 - cov1 * cov2)
}

/// Relay-served outage with all interference suppressed.
pub fn user_outage_pico_noise_only(sc: &Scenario, x: f64, point: &PolarPoint) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let g = sc
        .pico_group
        .expect("relay-served outage requires a relay");
    let rho = sc.rho();
    let backhaul_gain = sc.eff[g].column(sc.precoders.group_offset(g)).norm_squared();
    let cov1 = (-x / (rho * sc.params.path_gain(sc.layout.pico_dist) * backhaul_gain)).exp();
    let pl_sk = sc.params.path_gain(sc.layout.dist_user_pico(point));
    let cov2 = (-x / (rho * sc.tau() * pl_sk)).exp();
    Ok(1.0 - cov1 * cov2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolarPoint;
    use crate::rng::rng_for;
    use crate::scenario::Scenario;
    use crate::testutil::{
        bare_scenario, mc_macro_outage_at, mc_pico_outage_at, table_scenario,
    };

    fn mc_macro_outage(
        sc: &Scenario,
        g: usize,
        local_beam: usize,
        point: &PolarPoint,
        x: f64,
        n: usize,
        seed_idx: u64,
    ) -> f64 {
        let mut rng = rng_for(0x5eed_0010, seed_idx);
        mc_macro_outage_at(sc, g, local_beam, point, x, n, &mut rng)
    }

    fn mc_pico_outage(sc: &Scenario, point: &PolarPoint, x: f64, n: usize, seed_idx: u64) -> f64 {
        let mut rng = rng_for(0x5eed_0011, seed_idx);
        mc_pico_outage_at(sc, point, x, n, &mut rng)
    }

    fn assert_within_mc(p: f64, p_mc: f64, n: usize, what: &str) {
        let sigma = (p_mc * (1.0 - p_mc) / n as f64).sqrt().max(1e-6);
        assert!(
            (p - p_mc).abs() < 3.0 * sigma + 1e-4,
            "{what}: analytic {p} vs mc {p_mc} (3σ={:.2e})",
            3.0 * sigma
        );
    }

    #[test]
    fn test_macro_outage_matches_simulation() {
        let sc = table_scenario(16, &[3, 2]);
        let n = 150_000;
        for (i, (l, off_deg, beam, x)) in [
            (120.0f64, 5.0f64, 1usize, 1.0f64),
            (80.0, -10.0, 2, 0.5),
            (190.0, 15.0, 1, 2.0),
        ]
        .iter()
        .enumerate()
        {
            let point = crate::geometry::PolarPoint {
                radius: *l,
                angle: sc.groups[0].aoa_rad + off_deg.to_radians(),
            };
            let spectra = sc.spectra_at(*x).unwrap();
            let p = user_outage_macro(&sc, &spectra, 0, *beam, &point).unwrap();
            let p_mc = mc_macro_outage(&sc, 0, *beam, &point, *x, n, i as u64);
            assert_within_mc(p, p_mc, n, &format!("macro case {i}"));
        }
    }

    #[test]
    fn test_other_group_macro_outage_matches_simulation() {
        let sc = table_scenario(16, &[3, 2]);
        let point = crate::geometry::PolarPoint {
            radius: 100.0,
            angle: sc.groups[1].aoa_rad + 3.0_f64.to_radians(),
        };
        let n = 150_000;
        let x = 1.0;
        let spectra = sc.spectra_at(x).unwrap();
        let p = user_outage_macro(&sc, &spectra, 1, 0, &point).unwrap();
        let p_mc = mc_macro_outage(&sc, 1, 0, &point, x, n, 7);
        assert_within_mc(p, p_mc, n, "other-group macro");
    }

    #[test]
    fn test_pico_outage_matches_simulation() {
        let sc = table_scenario(16, &[3, 2]);
        let n = 150_000;
        for (i, (l, off_deg, x)) in
            [(160.0f64, 0.0f64, 1.0f64), (185.0, 3.0, 0.5), (155.0, -5.0, 2.0)].iter().enumerate()
        {
            let point = crate::geometry::PolarPoint {
                radius: *l,
                angle: sc.groups[0].aoa_rad + off_deg.to_radians(),
            };
            assert!(sc.layout.is_pico_associated(&point), "case {i} not in region");
            let spectra = sc.spectra_at(*x).unwrap();
            let p = user_outage_pico(&sc, &spectra, &point).unwrap();
            let p_mc = mc_pico_outage(&sc, &point, *x, n, i as u64);
            assert_within_mc(p, p_mc, n, &format!("pico case {i}"));
        }
    }

    #[test]
    fn test_no_relay_outage_matches_simulation() {
        let sc = bare_scenario(16, &[3, 2]);
        let point = crate::geometry::PolarPoint {
            radius: 140.0,
            angle: sc.groups[0].aoa_rad,
        };
        let n = 120_000;
        let x = 1.5;
        let spectra = sc.spectra_at(x).unwrap();
        let p = user_outage_macro(&sc, &spectra, 0, 0, &point).unwrap();
        let p_mc = mc_macro_outage(&sc, 0, 0, &point, x, n, 11);
        assert_within_mc(p, p_mc, n, "no-relay macro");
    }

    #[test]
    fn test_zero_threshold_means_no_outage() {
        let sc = table_scenario(16, &[3, 2]);
        let spectra = sc.spectra_at(0.0).unwrap();
        let point = crate::geometry::PolarPoint {
            radius: 120.0,
            angle: sc.groups[0].aoa_rad,
        };
        assert_eq!(user_outage_macro(&sc, &spectra, 0, 1, &point).unwrap(), 0.0);
        let in_region = crate::geometry::PolarPoint {
            radius: 160.0,
            angle: sc.groups[0].aoa_rad,
        };
        assert_eq!(user_outage_pico(&sc, &spectra, &in_region).unwrap(), 0.0);
        assert_eq!(
            user_outage_macro_noise_only(&sc, 0, 1, 0.0, &point).unwrap(),
            0.0
        );
        assert_eq!(user_outage_pico_noise_only(&sc, 0.0, &in_region).unwrap(), 0.0);
    }

    #[test]
    fn test_outage_monotone_in_threshold() {
        let sc = table_scenario(16, &[3, 2]);
        let point = crate::geometry::PolarPoint {
            radius: 150.0,
            angle: sc.groups[0].aoa_rad + 0.1,
        };
        let mut prev = 0.0;
        for &x_db in &[-10.0, -5.0, 0.0, 5.0, 10.0, 20.0] {
            let x = 10f64.powf(x_db / 10.0);
            let spectra = sc.spectra_at(x).unwrap();
            let p = user_outage_macro(&sc, &spectra, 0, 1, &point).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert!(p >= prev - 1e-12, "not monotone at {x_db} dB");
            prev = p;
        }
    }

    #[test]
    fn test_noise_only_bounds_full_outage() {
        let sc = table_scenario(16, &[3, 2]);
        let macro_pt = crate::geometry::PolarPoint {
            radius: 110.0,
            angle: sc.groups[0].aoa_rad - 0.05,
        };
        let pico_pt = crate::geometry::PolarPoint {
            radius: 165.0,
            angle: sc.groups[0].aoa_rad + 0.02,
        };
        for &x in &[0.2, 1.0, 5.0] {
            let spectra = sc.spectra_at(x).unwrap();
            let full = user_outage_macro(&sc, &spectra, 0, 1, &macro_pt).unwrap();
            let clean = user_outage_macro_noise_only(&sc, 0, 1, x, &macro_pt).unwrap();
            assert!(clean <= full + 1e-12, "x={x}: clean {clean} > full {full}");
            let full_p = user_outage_pico(&sc, &spectra, &pico_pt).unwrap();
            let clean_p = user_outage_pico_noise_only(&sc, x, &pico_pt).unwrap();
            assert!(clean_p <= full_p + 1e-12);
        }
    }
}
