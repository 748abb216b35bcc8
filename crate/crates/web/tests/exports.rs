use spdelab_web::{hitting_values, lemma_values, spde_values};

#[test]
fn lemma_layout_and_outcome() {
    let v = lemma_values(4, 0.25, 2.0, 1.5).unwrap();
    let n = v[0] as usize;
    assert_eq!(v.len(), 3 + n + 27);
    assert!(v[3..3 + n].iter().all(|&x| x >= 0.0));
    for c in v[3 + n..].chunks(3) {
        assert_eq!(c[2], 1.0, "lhs {} rhs {}", c[0], c[1]);
    }
    assert!(lemma_values(4, 1.5, 2.0, 1.5).is_err());
}

#[test]
fn hitting_curve_runs_from_zero_to_one() {
    let v = hitting_values(1.0, 0.25, 1.0, 1.0, 11).unwrap();
    assert_eq!(v.len(), 22);
    assert_eq!(v[1], 0.0);
    assert!((v[21] - 1.0).abs() < 1e-12);
    let p: Vec<f64> = v.chunks(2).map(|c| c[1]).collect();
    assert!(p.windows(2).all(|w| w[1] >= w[0]));
    // s(x) = (1 − (1 + 4√x)e^{−4√x})/8 for b = 1, p = 1/4.
    let s = |x: f64| (1.0 - (1.0 + 4.0 * x.sqrt()) * (-4.0 * x.sqrt()).exp()) / 8.0;
    let mid = hitting_values(1.0, 0.25, 1.0, 1.0, 3).unwrap()[3];
    assert!((mid - s(0.5) / s(1.0)).abs() < 1e-10);
    assert!(hitting_values(1.0, 0.25, 0.0, 1.0, 5).is_err());
}

#[test]
fn spde_path_layout() {
    let v = spde_values(1, 0.25, 1.0, 0.5, 64, 4.0).unwrap();
    let rows = v[0] as usize;
    assert!(rows > 10);
    let n = v[1 + 3 * rows] as usize;
    assert_eq!(n, 64);
    assert_eq!(v.len(), 2 + 3 * rows + n);
    assert!(v[2 + 3 * rows..].iter().all(|&x| x >= 0.0));
}
