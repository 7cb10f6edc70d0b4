use riesz_lab::coeffs::{multiplicative_sieve, CoeffTable};
use riesz_lab::testbeds::{make_testbed, TestbedId};

fn table(label: &str, cutoff: usize) -> CoeffTable {
    let spec = make_testbed(&label.parse::<TestbedId>().unwrap()).unwrap();
    multiplicative_sieve(&spec, cutoff).unwrap()
}

fn weighted_tails(t: &CoeffTable, eps: f64, start: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut x = start;
    while x <= t.cutoff() {
        let s: f64 = (x / 2 + 1..=x).map(|m| t.get(m).abs() * (m as f64).powf(-1.0 - eps)).sum();
        out.push((x, s));
        x *= 2;
    }
    out
}

/// With a pole of order `d` the tail over `(X/2, X]` behaves like
/// `X^{-eps} (log X)^{d-1}`, which only turns downward once
/// `log X > (d - 1) / eps`. Shifted poles off the real axis add
/// oscillating terms, so only real-pole testbeds are checked.
#[test]
fn weighted_tails_shrink_under_doubling() {
    let cases = [
        ("zeta", 1_000, 1 << 20),
        ("rs-delta", 1_000, 16_000),
        ("zeta2", 1 << 15, 1 << 21),
    ];
    for (label, start, cutoff) in cases {
        let t = table(label, cutoff);
        let tails = weighted_tails(&t, 0.1, start);
        println!("{label}: {tails:?}");
        assert!(tails.len() >= 4);
        for w in tails.windows(2) {
            assert!(w[1].1 < w[0].1, "{label}: {:?} -> {:?}", w[0], w[1]);
        }
    }
}

#[test]
fn weighted_partial_sums_are_monotone_and_bounded() {
    let t = table("rs-delta", 16_000);
    let mut acc = 0.0;
    let mut prev = 0.0;
    for m in 1..=t.cutoff() {
        acc += t.get(m).abs() * (m as f64).powf(-1.1);
        assert!(acc >= prev);
        prev = acc;
    }
    // sum of b(m) m^{-1.1} is L(1.1), about C / 0.1 near the pole
    assert!(acc < 20.0, "{acc}");
}

#[test]
fn nonneg_testbeds_stay_nonneg() {
    for (label, cutoff) in [("rs-delta", 20_000), ("rs-eisenstein:0.5,-0.5", 200_000), ("zeta2", 100_000)] {
        let t = table(label, cutoff);
        let worst = t.values().iter().copied().fold(f64::INFINITY, f64::min);
        assert!(worst >= -1e-9, "{label}: {worst}");
        assert!(t.nonneg);
    }
}
