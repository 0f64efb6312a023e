//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a flat `Float64Array` of `(x, y)` pairs. The plain
//! `*_points` functions carry the logic so they can be tested natively.

use boltzmix::bounds::bernoulli_solution;
use boltzmix::povzner::{find_kstar_pair, PovznerConstants, DEFAULT_GRID_STEP};
use boltzmix::{AngularKernel, Error};
use wasm_bindgen::prelude::*;

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(hi > lo) {
        return Err("need at least two points and an increasing interval".into());
    }
    let h = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|m| lo + m as f64 * h).collect())
}

fn pairs(xs: Vec<f64>, mut f: impl FnMut(f64) -> Result<f64, String>) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(2 * xs.len());
    for x in xs {
        out.push(x);
        out.push(f(x)?);
    }
    Ok(out)
}

pub fn povzner_points(r: f64, n_min: f64, n_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let pc = PovznerConstants::new(r).map_err(|e| e.to_string())?;
    pairs(grid(n_min, n_max, points)?, |n| {
        pc.evaluate(n).map_err(|e| e.to_string())
    })
}

/// Mass fractions with no threshold below the search cap map to `NaN`.
pub fn kstar_points(r_min: f64, r_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let kernel = AngularKernel::normalized_constant();
    pairs(grid(r_min, r_max, points)?, |r| {
        match find_kstar_pair(r, &kernel, DEFAULT_GRID_STEP) {
            Ok(p) => Ok(p.k),
            Err(Error::KStarNotFound { .. }) => Ok(f64::NAN),
            Err(e) => Err(e.to_string()),
        }
    })
}

pub fn bernoulli_points(
    a: f64,
    b: f64,
    c: f64,
    y0: f64,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    pairs(grid(0.0, t_max, points)?, |t| {
        bernoulli_solution(a, b, c, y0, t).map_err(|e| e.to_string())
    })
}

/// `(n, C_inf_n(r))` for `n` evenly spaced in `[n_min, n_max]`.
#[wasm_bindgen]
pub fn povzner_curve(r: f64, n_min: f64, n_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    povzner_points(r, n_min, n_max, points).map_err(|e| JsError::new(&e))
}

/// `(r, k*)` for the constant kernel, `r` evenly spaced in `[r_min, r_max]`.
#[wasm_bindgen]
pub fn kstar_curve(r_min: f64, r_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    kstar_points(r_min, r_max, points).map_err(|e| JsError::new(&e))
}

/// `(t, y(t))` for `y' = -a y^(1+c) + b y`, `y(0) = y0`, on `[0, t_max]`.
#[wasm_bindgen]
pub fn bernoulli_curve(
    a: f64,
    b: f64,
    c: f64,
    y0: f64,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    bernoulli_points(a, b, c, y0, t_max, points).map_err(|e| JsError::new(&e))
}

/// The level `(a / b)^(-1/c)` every trajectory approaches.
#[wasm_bindgen]
pub fn bernoulli_limit(a: f64, b: f64, c: f64) -> f64 {
    (a / b).powf(-1.0 / c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn povzner_points_layout() {
        let p = povzner_points(0.5, 2.0, 3.0, 3).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0..2], [2.0, 0.5]);
        assert!((p[5] - 0.5625).abs() < 1e-12);
        assert!(povzner_points(1.5, 2.0, 3.0, 3).is_err());
        assert!(povzner_points(0.5, 3.0, 2.0, 3).is_err());
    }

    #[test]
    fn kstar_points_nan_beyond_cap() {
        let p = kstar_points(0.5, 0.995, 2).unwrap();
        assert_eq!(p[1], 2.5);
        assert!(p[3].is_nan());
    }

    #[test]
    fn bernoulli_points_limit() {
        let p = bernoulli_points(2.0, 1.0, 0.5, 3.0, 100.0, 11).unwrap();
        assert_eq!(p[1], 3.0);
        assert!((p[21] - bernoulli_limit(2.0, 1.0, 0.5)).abs() < 1e-9);
        assert!(bernoulli_points(-1.0, 1.0, 0.5, 3.0, 1.0, 4).is_err());
    }
}
