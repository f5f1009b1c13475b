//! Browser bindings for the demo page in `www/`.
//!
//! Each export has a plain Rust counterpart returning `Result<_, String>`,
//! which is what the native tests call.

use std::sync::Arc;

use dpp_core::certifier::{evaluate_margin, CertifierSettings, Inequality};
use dpp_core::comparison::{ComparisonParams, CoupledPoint, DESK_DEFAULTS};
use dpp_core::{
    build_grid_domain, coupled_drift, solve_dpp, Alpha, CouplingMap, GameKind, GameSpec, Shape, SolveSettings,
    ValueField,
};
use dpp_expr::Expr;
use wasm_bindgen::prelude::*;

/// Lattice points allowed in one browser solve.
pub const MAX_POINTS: usize = 60_000;

/// Values of a solved field on the bounding raster of the lattice, row
/// major from the lowest `y2`. Cells off the lattice are NaN.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub x0: f64,
    pub y0: f64,
    pub spacing: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    values: Vec<f64>,
    interior: Vec<u8>,
}

#[wasm_bindgen]
impl Heatmap {
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// 1 for interior cells, 0 for strip cells and cells off the lattice.
    #[wasm_bindgen(getter)]
    pub fn interior(&self) -> Vec<u8> {
        self.interior.clone()
    }
}

/// Solves the game on the unit disk with boundary data given as an
/// expression in `y1, y2`. `spacing <= 0` selects `epsilon / 3`.
pub fn solve_disk(kind: &str, epsilon: f64, alpha: f64, boundary: &str, spacing: f64) -> Result<Heatmap, String> {
    let kind = GameKind::parse(kind).ok_or_else(|| format!("unknown game kind '{kind}'"))?;
    let spec = match kind {
        GameKind::TugOfWar => GameSpec::tug_of_war(epsilon),
        GameKind::RandomWalk => GameSpec::random_walk(epsilon),
        GameKind::SpaceDependent => GameSpec::space_dependent(epsilon, Alpha::Constant(alpha)),
        GameKind::DirectionalNoise => return Err("the demo solves ball-noise games only".into()),
    };
    spec.validate().map_err(|e| e.to_string())?;
    let g = Expr::parse(boundary).map_err(|e| e.to_string())?;
    if g.arity() > 2 {
        return Err(format!("boundary uses y{} on a disk", g.arity()));
    }
    let h = if spacing > 0.0 { spacing } else { epsilon / 3.0 };
    let extent = 2.0 * (1.0 + epsilon) / h + 1.0;
    if extent * extent > MAX_POINTS as f64 {
        return Err(format!("spacing {h} gives too many lattice points for the browser"));
    }
    let domain = Arc::new(build_grid_domain(Shape::unit_ball(2), h, epsilon).map_err(|e| e.to_string())?);
    let data = ValueField::with_strip_data(domain.clone(), |y| g.eval(y), 0.0).map_err(|e| e.to_string())?;
    let settings = SolveSettings {
        tol: Some(1e-6),
        max_iter: 20_000,
        error_control: true,
    };
    let (field, diag) = solve_dpp(&domain, &data, &spec, &settings, None).map_err(|e| e.to_string())?;

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in domain.points() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let width = ((hi[0] - lo[0]) / h).round() as usize + 1;
    let height = ((hi[1] - lo[1]) / h).round() as usize + 1;
    let mut values = vec![f64::NAN; width * height];
    let mut interior = vec![0u8; width * height];
    for id in 0..domain.len() {
        let p = domain.point(id);
        let i = ((p[0] - lo[0]) / h).round() as usize;
        let j = ((p[1] - lo[1]) / h).round() as usize;
        values[j * width + i] = field.get(id);
        interior[j * width + i] = domain.is_interior(id) as u8;
    }
    Ok(Heatmap {
        width,
        height,
        x0: lo[0],
        y0: lo[1],
        spacing: h,
        iterations: diag.iterations,
        residual: diag.final_residual,
        converged: diag.converged,
        values,
        interior,
    })
}

#[wasm_bindgen(js_name = solveDisk)]
pub fn solve_disk_js(kind: &str, epsilon: f64, alpha: f64, boundary: &str, spacing: f64) -> Result<Heatmap, JsError> {
    solve_disk(kind, epsilon, alpha, boundary, spacing).map_err(|e| JsError::new(&e))
}

/// Parallel arrays over log-spaced distances.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Profile {
    distances: Vec<f64>,
    values: Vec<f64>,
    errors: Vec<f64>,
    bounds: Vec<f64>,
}

#[wasm_bindgen]
impl Profile {
    #[wasm_bindgen(getter)]
    pub fn distances(&self) -> Vec<f64> {
        self.distances.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Standard errors; zero for deterministic values.
    #[wasm_bindgen(getter)]
    pub fn errors(&self) -> Vec<f64> {
        self.errors.clone()
    }

    /// Reference curve; empty when there is none.
    #[wasm_bindgen(getter)]
    pub fn bounds(&self) -> Vec<f64> {
        self.bounds.clone()
    }
}

fn desk_params(c: f64) -> Result<ComparisonParams, String> {
    let mut params = ComparisonParams::desk(2, DESK_DEFAULTS);
    params.c = c;
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64))
        .collect()
}

fn pair_at(d: f64) -> CoupledPoint {
    CoupledPoint::new(vec![0.5 * d, 0.0], vec![-0.5 * d, 0.0])
}

/// Margin of one comparison inequality at pairs `(d/2, 0), (-d/2, 0)` for
/// `points` distances from `eps/20` to `1.9`, desk constants with the given C.
pub fn margin_profile(inequality: &str, c: f64, points: usize, seed: u64) -> Result<Profile, String> {
    let which = Inequality::parse(inequality).ok_or_else(|| format!("unknown inequality '{inequality}'"))?;
    if points == 0 {
        return Err("points must be positive".into());
    }
    let params = desk_params(c)?;
    let settings = CertifierSettings::sweep(2);
    let distances = log_spaced(params.epsilon / 20.0, 1.9, points);
    let mut values = Vec::with_capacity(points);
    let mut errors = Vec::with_capacity(points);
    for (k, &d) in distances.iter().enumerate() {
        let p = pair_at(d);
        let (m, se) = evaluate_margin(&params, which, &p.x, &p.z, seed, k, &settings).map_err(|e| e.to_string())?;
        values.push(m);
        errors.push(se.unwrap_or(0.0));
    }
    Ok(Profile {
        distances,
        values,
        errors,
        bounds: Vec::new(),
    })
}

#[wasm_bindgen(js_name = marginProfile)]
pub fn margin_profile_js(inequality: &str, c: f64, points: usize, seed: u64) -> Result<Profile, JsError> {
    margin_profile(inequality, c, points, seed).map_err(|e| JsError::new(&e))
}

/// Drift of `f1` under one mirror-coupled random-walk step, for distances
/// from `2 eps` to `1.9`, with the bound `eps^2 d^(delta - 2) (10 - K)`,
/// `K = C delta / (4 (n + 2))`.
pub fn drift_profile(c: f64, points: usize, samples: usize, seed: u64) -> Result<Profile, String> {
    if points == 0 {
        return Err("points must be positive".into());
    }
    let params = desk_params(c)?;
    let eps = params.epsilon;
    let spec = GameSpec::random_walk(eps);
    let k = params.c * params.delta / (4.0 * (params.n as f64 + 2.0));
    let g = |x: &[f64], z: &[f64]| params.f1(x, z);
    let distances = log_spaced(2.0 * eps * 1.0001, 1.9, points);
    let (mut values, mut errors, mut bounds) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &d) in distances.iter().enumerate() {
        let pair = pair_at(d);
        let mirror = CouplingMap::mirror(&pair.x, &pair.z).map_err(|e| e.to_string())?;
        let est = coupled_drift(&g, &mirror, &pair, &spec, samples, seed.wrapping_add(i as u64))
            .map_err(|e| e.to_string())?;
        values.push(est.mean);
        errors.push(est.std_error);
        bounds.push(eps * eps * d.powf(params.delta - 2.0) * (10.0 - k));
    }
    Ok(Profile {
        distances,
        values,
        errors,
        bounds,
    })
}

#[wasm_bindgen(js_name = driftProfile)]
pub fn drift_profile_js(c: f64, points: usize, samples: usize, seed: u64) -> Result<Profile, JsError> {
    drift_profile(c, points, samples, seed).map_err(|e| JsError::new(&e))
}
