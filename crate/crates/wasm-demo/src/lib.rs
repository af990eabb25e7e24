//! WebAssembly bindings for the interactive page in `www/`.
//!
//! Every export returns a flat `Float64Array`; the page knows the stride.
//! The computations live in plain functions so they can be tested natively.

use gw_harmonic::bernoulli::{self, Boundary};
use gw_harmonic::process::{self, Estimator, Mechanism};
use gw_harmonic::{gcm, Error};
use wasm_bindgen::prelude::*;

/// Largest truncation depth accepted from the page.
const MAX_DEPTH: usize = 20_000;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Brackets of `B(x) = x B_1(x)` on `points` equally spaced interior
/// points, as `[x, lower, upper]` triples.
#[wasm_bindgen(js_name = bCurve)]
pub fn b_curve(n: usize, points: usize) -> Result<Vec<f64>, JsError> {
    b_curve_flat(n, points).map_err(js)
}

/// `M_n E_k(1/Z_n)` for n = 0..=n_max with every efficiency equal to `x`.
#[wasm_bindgen(js_name = bernoulliNormalized)]
pub fn bernoulli_normalized(x: f64, k: u32, n_max: usize) -> Result<Vec<f64>, JsError> {
    bernoulli_normalized_flat(x, k, n_max).map_err(js)
}

/// `[m, m E_k(1/Z), (m-1)^{k/c} E_k(1/Z)]` triples for the reference law
/// `g_{c,m}` at `m = 10^{1/4}, 10^{2/4}, ..., 10^{decades}`; the last entry is
/// the limit of the scaled column when `k < c`, NaN otherwise.
#[wasm_bindgen(js_name = divergence)]
pub fn divergence(c: f64, k: u32, decades: u32) -> Result<Vec<f64>, JsError> {
    divergence_flat(c, k, decades).map_err(js)
}

fn b_curve_flat(n: usize, points: usize) -> Result<Vec<f64>, Error> {
    if n == 0 || n > MAX_DEPTH || points == 0 || points > 1000 {
        return Err(Error::Precondition(format!("need 1 <= n <= {MAX_DEPTH} and 1 <= points <= 1000")));
    }
    let grid: Vec<f64> = (1..=points).map(|i| i as f64 / (points + 1) as f64).collect();
    let curve = bernoulli::b_curve(n, &grid, Boundary::Refined)?;
    Ok(curve.iter().flat_map(|p| [p.x, p.b_lower, p.b_upper]).collect())
}

fn bernoulli_normalized_flat(x: f64, k: u32, n_max: usize) -> Result<Vec<f64>, Error> {
    if n_max > 200 {
        return Err(Error::Precondition("n_max must be at most 200".into()));
    }
    let mech = Mechanism::bernoulli(vec![x; n_max])?;
    process::normalized_sequence(&mech, k.into(), n_max, 1.0, Estimator::Quadrature)
}

fn divergence_flat(c: f64, k: u32, decades: u32) -> Result<Vec<f64>, Error> {
    if !(1..=8).contains(&decades) {
        return Err(Error::Precondition("decades must be in 1..=8".into()));
    }
    let grid: Vec<f64> = (1..=4 * decades).map(|j| 10f64.powf(j as f64 / 4.0)).collect();
    let p = gcm::divergence_profile(c, k.into(), &grid)?;
    let mut out = Vec::with_capacity(3 * grid.len() + 1);
    for i in 0..p.m.len() {
        out.extend([p.m[i], p.normalized[i], p.scaled[i]]);
    }
    out.push(p.scale_bound.unwrap_or(f64::NAN));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_triples_are_ordered() {
        let v = b_curve_flat(200, 9).unwrap();
        assert_eq!(v.len(), 27);
        for t in v.chunks(3) {
            assert!(t[1] <= t[2]);
            assert!(t[1] > 0.9 && t[2] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn efficiency_one_is_flat() {
        let v = bernoulli_normalized_flat(1.0, 4, 10).unwrap();
        assert_eq!(v.len(), 11);
        assert!(v.iter().all(|&y| (y - 0.25).abs() < 1e-12));
    }

    #[test]
    fn divergence_shapes() {
        let v = divergence_flat(2.0, 1, 3).unwrap();
        assert_eq!(v.len(), 3 * 12 + 1);
        let bound = *v.last().unwrap();
        assert!(v[..36].chunks(3).all(|t| t[2] <= bound * (1.0 + 1e-9)));
        // Without the small-k regime there is no scale limit.
        assert!(divergence_flat(2.0, 2, 2).unwrap().last().unwrap().is_nan());
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(b_curve_flat(0, 9).is_err());
        assert!(bernoulli_normalized_flat(1.5, 1, 5).is_err());
        assert!(divergence_flat(2.0, 1, 0).is_err());
    }
}
