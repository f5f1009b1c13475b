use dpp_wasm::{drift_profile, margin_profile, solve_disk, MAX_POINTS};

#[test]
fn linear_data_gives_a_linear_heatmap() {
    // affine data are fixed by every ball-noise game
    let hm = solve_disk("random-walk", 0.15, 0.0, "2*y1 - y2 + 0.5", 0.05).unwrap();
    assert!(hm.converged);
    let (v, inner) = (hm.values(), hm.interior());
    assert_eq!(v.len(), hm.width * hm.height);
    let mut seen = 0;
    for j in 0..hm.height {
        for i in 0..hm.width {
            let k = j * hm.width + i;
            if v[k].is_nan() {
                assert_eq!(inner[k], 0);
                continue;
            }
            let (y1, y2) = (hm.x0 + i as f64 * hm.spacing, hm.y0 + j as f64 * hm.spacing);
            assert!((v[k] - (2.0 * y1 - y2 + 0.5)).abs() < 1e-5, "({y1}, {y2}): {}", v[k]);
            seen += inner[k] as usize;
        }
    }
    assert!(seen > 1000);
}

#[test]
fn cone_data_stay_in_range_and_are_symmetric() {
    let hm = solve_disk("tug-of-war", 0.2, 0.0, "cone", 0.0).unwrap();
    let v = hm.values();
    let w = hm.width;
    for j in 0..hm.height {
        for i in 0..w {
            let a = v[j * w + i];
            if a.is_nan() {
                continue;
            }
            assert!((-1e-9..=1.2 + 1e-9).contains(&a));
            let b = v[j * w + (w - 1 - i)];
            assert!((a - b).abs() < 1e-5);
        }
    }
}

#[test]
fn solve_rejects_bad_input() {
    assert!(solve_disk("chess", 0.1, 0.0, "y1", 0.0).is_err());
    assert!(solve_disk("directional", 0.1, 0.5, "y1", 0.0).is_err());
    assert!(solve_disk("random-walk", 0.1, 0.0, "y3", 0.0).is_err());
    assert!(solve_disk("random-walk", 0.1, 0.0, "y1 +", 0.0).is_err());
    assert!(solve_disk("random-walk", -0.1, 0.0, "y1", 0.0).is_err());
    let tiny = 2.0 * 1.1 / (MAX_POINTS as f64).sqrt() / 2.0;
    assert!(solve_disk("random-walk", 0.1, 0.0, "y1", tiny).is_err());
}

#[test]
fn margins_are_positive_at_desk_constants_and_not_at_c_one() {
    let good = margin_profile("I", 2000.0, 12, 3).unwrap();
    assert_eq!(good.distances().len(), 12);
    assert!(good.values().iter().all(|&m| m > 0.0), "{:?}", good.values());
    let d = good.distances();
    assert!(d.windows(2).all(|w| w[0] < w[1]));
    assert!((d[11] - 1.9).abs() < 1e-12);

    let bad = margin_profile("I", 1.0, 12, 3).unwrap();
    assert!(bad.values().iter().any(|&m| m <= 0.0));
    assert!(margin_profile("IV", 2000.0, 4, 0).is_err());
    assert!(margin_profile("I", 0.5, 4, 0).is_err());
}

#[test]
fn second_inequality_reports_standard_errors() {
    let p = margin_profile("II", 2000.0, 3, 5).unwrap();
    assert!(p.errors().iter().all(|&e| e > 0.0));
    assert!(p.bounds().is_empty());
}

#[test]
fn mirror_drift_is_below_its_bound() {
    let p = drift_profile(2000.0, 5, 20_000, 9).unwrap();
    let (v, e, b) = (p.values(), p.errors(), p.bounds());
    for k in 0..5 {
        assert!(v[k] < 0.0);
        assert!(v[k] <= b[k] + 3.0 * e[k], "{} vs {}", v[k], b[k]);
    }
    let again = drift_profile(2000.0, 5, 20_000, 9).unwrap();
    assert_eq!(again.values(), v);
}
