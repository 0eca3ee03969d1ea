//! Shared fixtures for the unit tests: the reference two-group layout used
//! throughout (wedges at −20°/+20° half-width and +10°/10°, R = 200 m,
//! relay at 150 m with a 50 m disk, 18 dB macro/pico power gap), plus
//! literal-SINR Monte Carlo samplers used as oracles against the analytic
//! formulas. The samplers compute each SINR exactly as defined, with no
//! shared code with the analytic path.

use rand::Rng;

use crate::geometry::{CellLayout, PolarPoint};
use crate::params::{GroupGeometry, SystemParams};
use crate::rng::{complex_gaussian, complex_gaussian_vector};
use crate::scenario::Scenario;

/// ρ = −40 dB per stream at S = 11, relay 18 dB below the macro.
pub(crate) fn table_params(m: usize) -> SystemParams {
    SystemParams::new(m, 0.5, 4.0, 11.0 * 1e-4, 10f64.powf(-1.8), 7.26e-7, true).unwrap()
}

pub(crate) fn table_groups() -> Vec<GroupGeometry> {
    vec![
        GroupGeometry::from_degrees(-20.0, 20.0).unwrap(),
        GroupGeometry::from_degrees(10.0, 10.0).unwrap(),
    ]
}

pub(crate) fn table_layout() -> CellLayout {
    CellLayout::new(200.0, 50.0, 150.0, table_groups()[0].aoa_rad).unwrap()
}

/// Reference scenario with the relay in group 0.
pub(crate) fn table_scenario(m: usize, counts: &[usize]) -> Scenario {
    Scenario::build(
        table_params(m),
        table_layout(),
        table_groups(),
        counts.to_vec(),
        Some(0),
    )
    .unwrap()
}

/// Relay-free counterpart with the same wedges.
pub(crate) fn bare_scenario(m: usize, counts: &[usize]) -> Scenario {
    let layout = CellLayout::new(200.0, 0.0, 0.0, 0.0).unwrap();
    Scenario::build(table_params(m), layout, table_groups(), counts.to_vec(), None).unwrap()
}

/// Fraction of channel draws in which a macro-served user on local beam
/// `local_beam` of group `g`, fixed at `point`, falls below threshold `x`.
pub(crate) fn mc_macro_outage_at<R: Rng + ?Sized>(
    sc: &Scenario,
    g: usize,
    local_beam: usize,
    point: &PolarPoint,
    x: f64,
    draws: usize,
    rng: &mut R,
) -> f64 {
    let col = sc.precoders.group_offset(g) + local_beam;
    let pl = sc.params.path_gain(point.radius);
    let pico_w = if sc.pico_group.is_some() {
        sc.pico_interference_coeff() * sc.params.path_gain(sc.layout.dist_user_pico(point))
    } else {
        0.0
    };
    let mut outages = 0usize;
    for _ in 0..draws {
        let w = complex_gaussian_vector(sc.eff[g].nrows(), rng);
        let z = sc.eff[g].adjoint() * &w;
        let useful = pl * z[col].norm_sqr();
        let mut interf = 0.0;
        for j in 0..z.len() {
            if j != col {
                interf += pl * z[j].norm_sqr();
            }
        }
        if sc.pico_group.is_some() {
            interf += pico_w * complex_gaussian(rng).norm_sqr();
        }
        if useful / (1.0 / sc.rho() + interf) < x {
            outages += 1;
        }
    }
    outages as f64 / draws as f64
}

/// Fraction of channel draws in which a relay-served user fixed at `point`
/// falls below `x`; both hops drawn literally.
pub(crate) fn mc_pico_outage_at<R: Rng + ?Sized>(
    sc: &Scenario,
    point: &PolarPoint,
    x: f64,
    draws: usize,
    rng: &mut R,
) -> f64 {
    let g = sc.pico_group.expect("relay sampler needs a relay");
    let s_col = sc.precoders.group_offset(g);
    let pl_l = sc.params.path_gain(point.radius);
    let pl_ms = sc.params.path_gain(sc.layout.pico_dist);
    let pl_sk = sc.params.path_gain(sc.layout.dist_user_pico(point));
    let tau = sc.tau();
    let mut outages = 0usize;
    for _ in 0..draws {
        // The user's own macro channel interferes with the relay hop.
        let wu = complex_gaussian_vector(sc.eff[g].nrows(), rng);
        let zu = sc.eff[g].adjoint() * &wu;
        let downlink: f64 = zu.iter().map(|z| pl_l * z.norm_sqr()).sum();
        let h_sk = complex_gaussian(rng);
        let hop2 = tau * pl_sk * h_sk.norm_sqr() / (1.0 / sc.rho() + downlink);
        // The relay's backhaul channel.
        let wp = complex_gaussian_vector(sc.eff[g].nrows(), rng);
        let zp = sc.eff[g].adjoint() * &wp;
        let useful = pl_ms * zp[s_col].norm_sqr();
        let mut interf = 0.0;
        for j in 0..zp.len() {
            if j != s_col {
                interf += pl_ms * zp[j].norm_sqr();
            }
        }
        let hop1 = useful / (1.0 / sc.rho() + interf);
        if hop1.min(hop2) < x {
            outages += 1;
        }
    }
    outages as f64 / draws as f64
}
