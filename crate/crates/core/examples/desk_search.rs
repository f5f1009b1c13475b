//! Searches desk-scale comparison constants for which all four inequalities
//! keep a positive minimum margin over stratified samples.
//!
//! Usage: `cargo run --release -p dpp-core --example desk_search -- [samples] [seed]`

use std::time::Instant;

use dpp_core::certifier::{certify_region, CertifierSettings, Inequality};
use dpp_core::comparison::{ComparisonParams, DeskConstants, DESK_DEFAULTS};

fn main() {
    let mut args = std::env::args().skip(1);
    let samples: usize = args.next().map(|s| s.parse().expect("sample count")).unwrap_or(400);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(1);
    let settings = CertifierSettings::sweep(2);

    let mut candidates = vec![DESK_DEFAULTS];
    for &c in &[1.0, 10.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0] {
        for &(n_annuli, epsilon) in &[(40u128, 0.005), (30, 0.01)] {
            candidates.push(DeskConstants {
                delta: 0.1,
                c,
                n_annuli,
                epsilon,
                theta: 0.1,
                omega: 0.05,
            });
        }
    }
    for k in candidates {
        let params = ComparisonParams::desk(2, k);
        if !params.f2_max().is_finite() {
            println!("{k:?}: f2 overflows");
            continue;
        }
        let mut line = format!(
            "C={} delta={} N={} eps={}",
            k.c, k.delta, k.n_annuli, k.epsilon
        );
        for which in Inequality::ALL {
            let t = Instant::now();
            let rep = &certify_region(&params, &[which], samples, seed, &settings).unwrap()[0];
            let arg = rep.argmin.as_ref().unwrap();
            line.push_str(&format!(
                " | {:?}: min {:.3e} ({}, d={:.4}) neg {} [{:.1}s]",
                which,
                rep.min_margin,
                arg.regime,
                arg.x.iter().zip(&arg.z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
                rep.negative_count,
                t.elapsed().as_secs_f64()
            ));
        }
        println!("{line}");
    }
}
