use num_complex::Complex64;
use riesz_lab::analytic::lfun_eval;
use riesz_lab::coeffs::multiplicative_sieve;
use riesz_lab::perron::contour_residue_check;
use riesz_lab::riesz::riesz_mean;
use riesz_lab::testbeds::{make_testbed, TestbedId};
use riesz_lab::Error;

fn spec(s: &str) -> riesz_lab::coeffs::LSeriesSpec {
    make_testbed(&s.parse::<TestbedId>().unwrap()).unwrap()
}

#[test]
fn zeta_box_matches_residues() {
    let z = spec("zeta");
    let r = contour_residue_check(&z, 50.0, 2, 1.05, 5.0, -0.5).unwrap();
    println!("zeta: deviation {:.3e}, tolerance {:.3e}", r.relative_deviation, r.tolerance);
    assert!(r.relative_deviation <= 1e-3);
    assert!(r.within_tolerance());
    // s = 0 is enclosed: zeta(0) / (0 - 1)(0 - 2) = -1/4
    assert_eq!(r.other_poles.len(), 1);
    assert!((r.other_poles[0].residue.re + 0.25).abs() < 1e-10);
    assert!((r.residue_main - 50.0 / 6.0).abs() < 1e-12);
}

#[test]
fn eisenstein_box_includes_shifted_poles() {
    let e = spec("eisenstein:0,1,-1");
    let r = contour_residue_check(&e, 50.0, 2, 1.05, 5.0, -0.5).unwrap();
    println!(
        "eisenstein: deviation {:.3e}, poles {}",
        r.relative_deviation,
        r.other_poles.len()
    );
    assert!(r.relative_deviation <= 1e-3);
    // 1 + i, 1 - i and the kernel pole at 0
    assert_eq!(r.other_poles.len(), 3);
    let a = r.other_poles.iter().find(|p| (p.location - Complex64::new(1.0, 1.0)).norm() < 1e-12);
    let b = r.other_poles.iter().find(|p| (p.location - Complex64::new(1.0, -1.0)).norm() < 1e-12);
    let (a, b) = (a.unwrap(), b.unwrap());
    assert!((a.residue - b.residue.conj()).norm() < 1e-10);
    assert!(r.expected_total.im.abs() < 1e-9);
}

#[test]
fn box_independence() {
    for label in ["zeta", "eisenstein:0,0.5,-0.5", "eisenstein:0,1,-1"] {
        let s = spec(label);
        let a = contour_residue_check(&s, 50.0, 2, 1.05, 5.0, -0.5).unwrap();
        let b = contour_residue_check(&s, 50.0, 2, 1.2, 8.0, -0.7).unwrap();
        let diff = (a.integral_value - b.integral_value).norm();
        println!("{label}: box difference {diff:.3e}");
        assert!(diff <= a.tolerance + b.tolerance, "{label}: {diff}");
    }
}

#[test]
fn left_edge_past_a_kernel_pole() {
    let z = spec("zeta");
    let r = contour_residue_check(&z, 50.0, 2, 1.05, 5.0, -1.5).unwrap();
    assert_eq!(r.other_poles.len(), 2);
    assert!(r.within_tolerance());
}

#[test]
fn horizontal_edges_shrink_with_height() {
    let z = spec("zeta");
    let ts = [8.0, 16.0, 32.0, 64.0];
    let mags: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let r = contour_residue_check(&z, 50.0, 2, 1.05, t, -0.5).unwrap();
            r.horizontal_contrib.0.norm() + r.horizontal_contrib.1.norm()
        })
        .collect();
    let logs: Vec<f64> = ts.iter().map(|t: &f64| t.ln()).collect();
    let lm: Vec<f64> = mags.iter().map(|m| m.ln()).collect();
    let fit = riesz_lab::fit::linear_fit(&logs, &lm).unwrap();
    println!("horizontal slope {:.3} ({:?})", fit.slope, mags);
    // |zeta| grows at most like t^{1/2} on the segment, the kernel decays like t^{-3}
    assert!(fit.slope <= -2.0 + 0.5 + 0.5);
}

#[test]
fn collisions_and_preconditions() {
    let z = spec("zeta");
    match contour_residue_check(&z, 50.0, 2, 1.05, 5.0, -1.0005) {
        Err(Error::PoleCollision { distance, .. }) => assert!(distance < 1e-3),
        other => panic!("expected collision, got {other:?}"),
    }
    assert!(contour_residue_check(&z, 50.0, 0, 1.05, 5.0, -0.5).is_err());
    assert!(contour_residue_check(&z, 50.0, 2, 0.9, 5.0, -0.5).is_err());
    assert!(matches!(
        contour_residue_check(&spec("eisenstein:0,0"), 50.0, 2, 1.05, 5.0, -0.5),
        Err(Error::PoleOrder { .. })
    ));
    assert!(contour_residue_check(&spec("rs-delta"), 50.0, 2, 1.05, 5.0, -0.5).is_err());
}

/// The right edge is the truncated Perron integral for `S_k`; the dropped
/// tails are bounded termwise by `(x/m)^c / (pi k T^k)`.
#[test]
fn right_edge_is_the_riesz_mean() {
    for label in ["zeta", "eisenstein:0,1,-1"] {
        let s = spec(label);
        let table = multiplicative_sieve(&s, 1000).unwrap();
        let (c, k) = (1.1, 2u32);
        for (x, t) in [(37.5, 40.0), (200.0, 60.0), (1000.0, 60.0)] {
            let r = contour_residue_check(&s, x, k, c, t, -0.5).unwrap();
            let sk = riesz_mean(&table, x, k).unwrap();
            let lc = lfun_eval(&s, Complex64::new(c, 0.0)).unwrap().value.re;
            let bound = x.powf(c) * lc / (std::f64::consts::PI * k as f64 * t.powi(k as i32));
            let gap = (r.right_contrib - sk).norm();
            println!("{label} x={x}: |right - S_k| = {gap:.3e}, bound {bound:.3e}");
            assert!(gap <= bound + r.tolerance, "{label} x={x}");
            // and through the residues and the other three edges
            let via = r.expected_total - r.horizontal_contrib.0 - r.horizontal_contrib.1 - r.left_contrib;
            assert!((via - sk).norm() <= bound + 2.0 * r.tolerance + 1e-3 * r.residue_main);
        }
    }
}
