//! Browser-facing bindings: a fixed two-group reference cell whose free
//! knobs (antennas, user split, SNR, relay placement) come from the page.
//!
//! Every export takes plain numbers and returns a JSON string — on success
//! an object with the result arrays, on failure `{"error": "..."}` — so the
//! page needs no marshalling layer. The crate compiles unchanged for native
//! targets, which is how its tests run; see the workspace README for the
//! wasm-pack build steps.

use wasm_bindgen::prelude::wasm_bindgen;

use jsdm_outage_core::averaging::InterferenceMode;
use jsdm_outage_core::cell::{cell_outage_fixed, cell_outage_noise_limited};
use jsdm_outage_core::geometry::{association_probability, region_masses, CellLayout};
use jsdm_outage_core::params::{db_to_linear, GroupGeometry, SystemParams};
use jsdm_outage_core::scenario::Scenario;
use jsdm_outage_core::Result;

/// Fixed demo geometry: wedge bearings/spreads in degrees, relay in the
/// first group, 200 m cell, fourth-power path loss, −18 dB power ratio.
const GROUPS_DEG: [(f64, f64); 2] = [(-20.0, 20.0), (10.0, 10.0)];
const CELL_RADIUS_M: f64 = 200.0;
const ALPHA: f64 = 4.0;
const POWER_RATIO_DB: f64 = -18.0;
const KAPPA_SQ: f64 = 7.26e-7;

fn build_scenario(
    m: usize,
    k1: usize,
    k2: usize,
    snr_db: f64,
    d_ms_m: f64,
    r_m: f64,
) -> Result<Scenario> {
    let groups: Vec<GroupGeometry> = GROUPS_DEG
        .iter()
        .map(|(t, d)| GroupGeometry::from_degrees(*t, *d))
        .collect::<Result<_>>()?;
    let has_relay = r_m > 0.0;
    let streams = k1 + k2 + usize::from(has_relay);
    let params = SystemParams::new(
        m,
        0.5,
        ALPHA,
        streams as f64 * db_to_linear(snr_db),
        db_to_linear(POWER_RATIO_DB),
        KAPPA_SQ,
        true,
    )?;
    let layout = CellLayout::new(
        CELL_RADIUS_M,
        r_m,
        if has_relay { d_ms_m } else { 0.0 },
        if has_relay { groups[0].aoa_rad } else { 0.0 },
    )?;
    Scenario::build(params, layout, groups, vec![k1, k2], has_relay.then_some(0))
}

fn err_json(e: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": e.to_string() }).to_string()
}

/// Analytic outage curves over a dB threshold grid: full interference,
/// noise-limited, and the relay-free system for comparison.
#[wasm_bindgen]
pub fn outage_curve_json(
    m: usize,
    k1: usize,
    k2: usize,
    snr_db: f64,
    d_ms_m: f64,
    r_m: f64,
    start_db: f64,
    stop_db: f64,
    step_db: f64,
) -> String {
    let run = || -> Result<String> {
        if !(step_db > 0.0 && stop_db >= start_db) {
            return Ok(err_json("need stop ≥ start and step > 0"));
        }
        let n = ((stop_db - start_db) / step_db).round() as usize + 1;
        if n > 100 {
            return Ok(err_json("threshold grid too fine for the browser demo"));
        }
        let sc = build_scenario(m, k1, k2, snr_db, d_ms_m, r_m)?;
        let no_pico = if sc.pico_group.is_some() { sc.without_relay()? } else { sc.clone() };
        let mut thresholds = Vec::with_capacity(n);
        let mut analytic = Vec::with_capacity(n);
        let mut noise_limited = Vec::with_capacity(n);
        let mut relay_free = Vec::with_capacity(n);
        for i in 0..n {
            let db = start_db + step_db * i as f64;
            if db > stop_db + 1e-9 {
                break;
            }
            let x = db_to_linear(db);
            thresholds.push(db);
            analytic.push(cell_outage_fixed(&sc, x, InterferenceMode::Full)?);
            noise_limited.push(cell_outage_noise_limited(&sc, x)?);
            relay_free.push(cell_outage_fixed(&no_pico, x, InterferenceMode::Full)?);
        }
        Ok(serde_json::json!({
            "thresholds_db": thresholds,
            "analytic": analytic,
            "noise_limited": noise_limited,
            "no_pico": relay_free,
        })
        .to_string())
    };
    run().unwrap_or_else(err_json)
}

/// Closed-form association quantities of the relay's group.
#[wasm_bindgen]
pub fn association_json(d_ms_m: f64, r_m: f64) -> String {
    let run = || -> Result<String> {
        let groups: Vec<GroupGeometry> = GROUPS_DEG
            .iter()
            .map(|(t, d)| GroupGeometry::from_degrees(*t, *d))
            .collect::<Result<_>>()?;
        let layout = CellLayout::new(CELL_RADIUS_M, r_m, d_ms_m, groups[0].aoa_rad)?;
        let sum_delta: f64 = groups.iter().map(|g| g.spread_rad).sum();
        let masses = region_masses(&layout, groups[0].spread_rad, sum_delta)?;
        let closed = association_probability(&layout, groups[0].spread_rad, sum_delta);
        Ok(serde_json::json!({
            "p_gs": masses.p_gs,
            "pico_served_mass": masses.pico_served,
            "macro_in_pico_group_mass": masses.macro_in_pico_group,
            "theta0_rad": layout.theta0(),
            "clip_angle_rad": layout.clip_angle(),
            "closed_form_p_gs": closed.ok().map(|s| s.p_gs),
        })
        .to_string())
    };
    run().unwrap_or_else(err_json)
}

/// Relay-placement sweep: p_gs and the analytic outage at one threshold
/// over a relay-distance grid, the disk radius scaling with distance.
#[wasm_bindgen]
pub fn dms_sweep_json(
    m: usize,
    k1: usize,
    k2: usize,
    snr_db: f64,
    r_over_d: f64,
    threshold_db: f64,
    start_m: f64,
    stop_m: f64,
    step_m: f64,
) -> String {
    let run = || -> Result<String> {
        if !(step_m > 0.0 && stop_m >= start_m && start_m > 0.0) {
            return Ok(err_json("need 0 < start ≤ stop and step > 0"));
        }
        if !(r_over_d > 0.0 && r_over_d < 1.0) {
            return Ok(err_json("relay disk ratio must lie in (0,1)"));
        }
        let n = ((stop_m - start_m) / step_m).round() as usize + 1;
        if n > 60 {
            return Ok(err_json("distance grid too fine for the browser demo"));
        }
        let x = db_to_linear(threshold_db);
        let mut dist = Vec::with_capacity(n);
        let mut p_gs = Vec::with_capacity(n);
        let mut outage = Vec::with_capacity(n);
        for i in 0..n {
            let d = start_m + step_m * i as f64;
            if d > stop_m + 1e-9 {
                break;
            }
            let sc = build_scenario(m, k1, k2, snr_db, d, r_over_d * d)?;
            let pg = sc.pico_group.expect("sweep keeps the relay");
            let masses = region_masses(&sc.layout, sc.groups[pg].spread_rad, sc.sum_delta())?;
            dist.push(d);
            p_gs.push(masses.p_gs);
            outage.push(cell_outage_fixed(&sc, x, InterferenceMode::Full)?);
        }
        Ok(serde_json::json!({
            "d_ms_m": dist,
            "p_gs": p_gs,
            "analytic": outage,
        })
        .to_string())
    };
    run().unwrap_or_else(err_json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn test_curve_json_shape() {
        let v = parse(&outage_curve_json(8, 1, 1, -40.0, 150.0, 50.0, -5.0, 5.0, 5.0));
        assert!(v.get("error").is_none(), "{v}");
        assert_eq!(v["thresholds_db"].as_array().unwrap().len(), 3);
        for key in ["analytic", "noise_limited", "no_pico"] {
            let arr = v[key].as_array().unwrap();
            assert_eq!(arr.len(), 3);
            for p in arr {
                let p = p.as_f64().unwrap();
                assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn test_curve_json_relay_free_coincides_without_relay() {
        let v = parse(&outage_curve_json(8, 1, 1, -40.0, 150.0, 0.0, 0.0, 0.0, 1.0));
        let a = v["analytic"][0].as_f64().unwrap();
        let b = v["no_pico"][0].as_f64().unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn test_association_json_matches_core() {
        let v = parse(&association_json(150.0, 50.0));
        let closed = v["closed_form_p_gs"].as_f64().unwrap();
        let quad = v["p_gs"].as_f64().unwrap();
        assert!((closed - quad).abs() < 1e-9, "closed {closed} vs quadrature {quad}");
    }

    #[test]
    fn test_dms_sweep_json_peak_at_cell_edge_contact() {
        let v = parse(&dms_sweep_json(8, 1, 1, -40.0, 1.0 / 3.0, 0.0, 130.0, 170.0, 10.0));
        assert!(v.get("error").is_none(), "{v}");
        let d = v["d_ms_m"].as_array().unwrap();
        let p = v["p_gs"].as_array().unwrap();
        assert_eq!(d.len(), 5);
        let best = (0..5).max_by(|&i, &j| {
            p[i].as_f64().unwrap().partial_cmp(&p[j].as_f64().unwrap()).unwrap()
        });
        assert_eq!(d[best.unwrap()].as_f64().unwrap(), 150.0);
    }

    #[test]
    fn test_error_objects_not_panics() {
        let v = parse(&outage_curve_json(8, 1, 1, -40.0, 150.0, 50.0, 5.0, -5.0, 1.0));
        assert!(v.get("error").is_some());
        let v = parse(&dms_sweep_json(8, 1, 1, -40.0, 2.0, 0.0, 100.0, 150.0, 10.0));
        assert!(v.get("error").is_some());
        // A relay disk larger than geometry permits reports, not panics.
        let v = parse(&association_json(30.0, 120.0));
        assert!(v.get("error").is_some(), "{v}");
    }
}
