//! Solves tug-of-war with noise on the unit disk for a few step sizes and
//! prints the Hölder statistic for each.
//!
//! cargo run --release -p dpp-core --example holder_scan -- [tol]

use std::sync::Arc;
use std::time::Instant;

use dpp_core::regularity::{default_c_prime_grid, fit_c_prime, holder_report};
use dpp_core::{solve_dpp, Alpha, GameSpec, GridDomain, Shape, SolveSettings, ValueField};

fn main() {
    let tol: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1e-5);
    let delta = 1.0 / 40.0;
    let mut init: Option<ValueField> = None;
    for eps in [0.1, 0.05, 0.025] {
        let h = eps / 3.0;
        let domain = Arc::new(GridDomain::with_strip(Shape::unit_ball(2), h, eps, eps).unwrap());
        let data = ValueField::with_strip_data(domain.clone(), |y| y[0].abs(), 0.0).unwrap();
        let start = init.as_ref().map(|prev| {
            let mut v = data.clone();
            let ids: Vec<usize> = domain.interior_ids().to_vec();
            let vals: Vec<f64> = data.values().to_vec();
            let mut vals = vals;
            for id in ids {
                vals[id] = prev.interpolate(domain.point(id)).unwrap_or(0.5);
            }
            v = ValueField::new(domain.clone(), vals).unwrap_or(v);
            v
        });
        let spec = GameSpec::space_dependent(eps, Alpha::Constant(0.5));
        let t = Instant::now();
        let (u, diag) = solve_dpp(&domain, &data, &spec, &SolveSettings::with_tol(tol), start.as_ref()).unwrap();
        let solve_time = t.elapsed();
        let r = holder_report(&u, delta, eps, 0.45, &[0.0, 0.0], 0.0, 20_000, 7).unwrap();
        let fit = fit_c_prime(&r, &default_c_prime_grid());
        println!(
            "eps {eps}: points {} iterations {} residual {:.2e} err {:?} time {:.1?} | K(C'=0) {:.4} fitted C' {:.2} K {:.4}",
            domain.interior_count(),
            diag.iterations,
            diag.final_residual,
            diag.error_estimate,
            solve_time,
            r.k,
            fit.c_prime,
            fit.k
        );
        init = Some(u);
    }
}
