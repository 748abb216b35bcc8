use spdelab::sde1d::{survival_exact, ScaleFn};
use statrs::function::gamma::{gamma, gamma_lr};

#[test]
fn survival_matches_regularised_incomplete_gamma() {
    for &q in &[0.1, 0.25, 0.45] {
        let nu = 1.0 / (2.0 * (1.0 - q));
        for &y0 in &[0.3f64, 1.0, 2.0] {
            for &t in &[0.5, 4.0, 64.0, 1024.0] {
                let z: f64 = y0.powf(1.0 - q) / (1.0 - q);
                let expected = gamma_lr(nu, z * z / (2.0 * t));
                let got = survival_exact(q, y0, t).unwrap();
                assert!((got - expected).abs() < 1e-10, "q {q} y0 {y0} T {t}: {got} vs {expected}");
            }
        }
    }
}

#[test]
fn scale_at_infinity_matches_gamma_function() {
    for &(b, q, k) in &[(1.0, 0.25, 1.0), (2.0, 0.1, 1.0), (1.0, 0.45, 0.5)] {
        let s = ScaleFn::new(b, q, k).unwrap();
        let a: f64 = 1.0 - 2.0 * q;
        let c: f64 = 2.0 * b / (k * a);
        let expected = c.powf(-1.0 / a) * gamma(1.0 + 1.0 / a);
        assert!((s.s_inf() / expected - 1.0).abs() < 1e-12);
        let partial = expected * gamma_lr(1.0 / a, c * 0.7f64.powf(a));
        assert!((s.eval(0.7).unwrap() / partial - 1.0).abs() < 1e-10);
    }
}
