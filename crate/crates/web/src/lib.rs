//! Browser bindings for three views of the one- and two-dimensional
//! fixtures: DPOF curves for a chosen β, EMUB-based DPOF for a chosen
//! (β, γ), and the HLGP vs GPC feasible regions on a grid.
//!
//! Every view returns a flat `Float64Array`; the layouts are given on each
//! function. The `*_data` functions hold the logic and run natively.

use std::cell::OnceCell;

use cbob::acquisition::{Acquisition, AcquisitionSpec, GammaPolicy, SurrogateBundle};
use cbob::figures::{fixture_bundle, region_comparison, to_unit, window_grid};
use cbob::problems::illustrative_function;
use cbob::{Bounds, Result};
use wasm_bindgen::prelude::*;

/// Columns of one [`dpof_curve`] row.
pub const DPOF_COLUMNS: usize = 8;
/// Columns of one [`emub_curve`] row after the leading γ value.
pub const EMUB_COLUMNS: usize = 3;
/// Summary values that precede the cells of [`region_grid`].
pub const REGION_HEADER: usize = 4;
/// Probe count used to resolve an adaptive γ.
const ADAPT_PROBES: usize = 2048;

thread_local! {
    static BUNDLE: OnceCell<SurrogateBundle> = const { OnceCell::new() };
}

fn with_bundle<T>(f: impl FnOnce(&SurrogateBundle) -> Result<T>) -> Result<T> {
    BUNDLE.with(|cell| {
        if cell.get().is_none() {
            let _ = cell.set(fixture_bundle()?);
        }
        f(cell.get().expect("bundle was just set"))
    })
}

fn spec_for_beta(beta: f64) -> AcquisitionSpec {
    if beta > 0.0 {
        AcquisitionSpec::eicb_pob(beta)
    } else {
        AcquisitionSpec::eic()
    }
}

/// Rows of `x, g_true, g_mean, g_std, pof, dpof, ei_x_pof, ei_x_dpof` over
/// the fixture window; `beta ≤ 0` means no exploration.
pub fn dpof_curve_data(beta: f64) -> Result<Vec<f64>> {
    with_bundle(|bundle| {
        let unit = Bounds::unit(1);
        let acq = Acquisition::new(bundle, spec_for_beta(beta), &unit, 1, 0)?;
        let eic = Acquisition::new(bundle, AcquisitionSpec::eic(), &unit, 1, 0)?;
        let grid = window_grid();
        let mut out = Vec::with_capacity(grid.len() * DPOF_COLUMNS);
        for x in grid {
            let u = to_unit(x);
            let (m, s) = bundle.constraints[0].predict(&u);
            out.extend([x, illustrative_function(x), m, s, acq.pof(&u), acq.dpof(&u), eic.eicb(&u)?, acq.eicb(&u)?]);
        }
        Ok(out)
    })
}

/// The resolved γ followed by rows of `x, pof, dpof` for EMUB exploration;
/// `gamma ≤ 0` selects the adaptive scale.
pub fn emub_curve_data(beta: f64, gamma: f64) -> Result<Vec<f64>> {
    with_bundle(|bundle| {
        let policy = if gamma > 0.0 { GammaPolicy::Fixed(gamma) } else { GammaPolicy::Adapt };
        let acq = Acquisition::new(bundle, AcquisitionSpec::eicb_emub(beta, policy), &Bounds::unit(1), ADAPT_PROBES, 0)?;
        let grid = window_grid();
        let mut out = Vec::with_capacity(1 + grid.len() * EMUB_COLUMNS);
        out.push(acq.gammas()[0]);
        for x in grid {
            let u = to_unit(x);
            out.extend([x, acq.pof(&u), acq.dpof(&u)]);
        }
        Ok(out)
    })
}

/// `hlgp_components, gpc_components, hlgp_coverage, gpc_coverage`, then one
/// code per cell in row-major order from the bottom-left: bit 0 true
/// feasibility, bit 1 HLGP feasible, bit 2 GPC feasible.
pub fn region_grid_data(side: usize) -> Result<Vec<f64>> {
    let r = region_comparison(side)?;
    let mut out = Vec::with_capacity(REGION_HEADER + side * side);
    out.extend([r.hlgp_components() as f64, r.gpc_components() as f64, r.hlgp_coverage(), r.gpc_coverage()]);
    out.extend((0..side * side).map(|c| f64::from(u8::from(r.truth[c]) | u8::from(r.hlgp[c]) << 1 | u8::from(r.gpc[c]) << 2)));
    Ok(out)
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = dpofCurve)]
pub fn dpof_curve(beta: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(dpof_curve_data(beta))
}

#[wasm_bindgen(js_name = emubCurve)]
pub fn emub_curve(beta: f64, gamma: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(emub_curve_data(beta, gamma))
}

#[wasm_bindgen(js_name = regionGrid)]
pub fn region_grid(side: usize) -> std::result::Result<Vec<f64>, JsError> {
    if !(8..=400).contains(&side) {
        return Err(JsError::new("grid side must be between 8 and 400"));
    }
    js(region_grid_data(side))
}
