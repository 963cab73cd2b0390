use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rds_circle::circle::{Arc, Point};
use rds_circle::dynamics::{backward_orbit, cocycle, forward_orbit, NoiseWindow};
use rds_circle::family::{Family, Sign};
use rds_circle::structure::{estimate_minimal_structure, gcd, McParams};
use std::f64::consts::TAU;

fn p(x: f64) -> Point<f64> {
    Point::new(x)
}

fn e1_oracle(k: u32, l: u32, r: f64, a: f64, x: f64) -> f64 {
    let kf = k as f64;
    (x + (TAU * kf * x).sin() / (TAU * kf) + l as f64 / kf + r * a).rem_euclid(1.0)
}

proptest! {
    #[test]
    fn circle_distance_laws(x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let (a, b) = (p(x), p(y));
        prop_assert!(a.dist(b) <= 0.5);
        prop_assert_eq!(a.dist(b), b.dist(a));
        let s = a.dplus(b) + b.dplus(a);
        prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-15);
        assert_abs_diff_eq!(a.shift(a.dplus(b)).dist(b), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn arcs_split_the_circle(x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64) {
        prop_assume!(x != y && z != x && z != y);
        let (fwd, back) = (Arc::new(p(x), p(y)), Arc::new(p(y), p(x)));
        prop_assert!(fwd.contains(p(z)) != back.contains(p(z)));
        assert_abs_diff_eq!(fwd.lebesgue() + back.lebesgue(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mth_root_inverts_mfold(x in 0.0..1.0f64, m in 1u32..7) {
        let y = p(x).mth_root(m);
        prop_assert!(y.value() < 1.0 / m as f64);
        assert_abs_diff_eq!(y.mfold(m).dist(p(x)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn example1_matches_formula(k in 1u32..5, x in 0.0..1.0f64, a in -1.0..1.0f64, r in 0.0..0.2f64) {
        let l = k - 1;
        let f = Family::<f64>::example1(k, l, r).unwrap();
        let got = f.eval(&[a, 0.0], p(x)).unwrap();
        assert_abs_diff_eq!(got.dist(p(e1_oracle(k, l, r, a, x))), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn inverses_round_trip(x in 0.0..1.0f64, a in 0.0..1.0f64, c in 0.0..1.0f64) {
        let f = Family::<f64>::example3(0.9 / TAU, c).unwrap();
        let y = f.eval(&[a], p(x)).unwrap();
        assert_abs_diff_eq!(f.eval_inverse(&[a], y).unwrap().dist(p(x)), 0.0, epsilon = 1e-12);
        // g_{3,1} has critical points, where the inverse loses digits
        let g = Family::<f64>::example2(3, 1, 0.04, Sign::Minus).unwrap();
        let y = g.eval(&[2.0 * a - 1.0], p(x)).unwrap();
        assert_abs_diff_eq!(g.eval_inverse(&[2.0 * a - 1.0], y).unwrap().dist(p(x)), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn mirror_and_rotation_conjugates(x in 0.0..1.0f64, a in -1.0..1.0f64, c in 0.0..1.0f64) {
        let f = Family::<f64>::example1(2, 1, 0.1).unwrap();
        let fx = f.eval(&[a, 0.0], p(x)).unwrap();
        let m = f.mirror().eval(&[a, 0.0], -p(x)).unwrap();
        assert_abs_diff_eq!(m.dist(-fx), 0.0, epsilon = 1e-14);
        let r = f.rotate_conjugate(p(c)).eval(&[a, 0.0], p(x).shift(c)).unwrap();
        assert_abs_diff_eq!(r.dist(fx.shift(c)), 0.0, epsilon = 1e-14);
    }
}

#[test]
fn example3_and_canonical_formulas() {
    let f = Family::<f64>::example3(1.0 / TAU, 0.37).unwrap();
    let g = Family::<f64>::canonical(3, 2).unwrap();
    for j in 0..200 {
        let (x, a) = (j as f64 / 200.0, (j as f64 * 0.618).fract());
        let want = (x + 0.37 + (TAU * (x + a)).sin() / TAU).rem_euclid(1.0);
        assert_abs_diff_eq!(f.eval(&[a], p(x)).unwrap().dist(p(want)), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.eval(&[], p(x)).unwrap().dist(p(e1_oracle(3, 2, 0.0, 0.0, x))), 0.0, epsilon = 1e-14);
    }
}

#[test]
fn parameters_are_validated() {
    assert!(Family::<f64>::example1(2, 2, 0.1).is_err());
    assert!(Family::<f64>::example1_on(2, 1, 0.1, 2).is_err());
    assert!(Family::<f64>::example3(0.2, 0.1).is_err());
    assert!(Family::<f64>::example3(0.1, 1.0).is_err());
    assert!(Family::<f64>::example1(2, 1, 0.1).unwrap().eval(&[3.0, 0.0], p(0.1)).is_err());
}

#[test]
fn windows_are_nested_and_shift_consistently() {
    let f = Family::<f64>::example1(2, 1, 0.05).unwrap();
    let short = NoiseWindow::symmetric(f.noise(), 9, 50);
    let long = NoiseWindow::symmetric(f.noise(), 9, 200);
    for i in -50..50 {
        assert_eq!(short.alpha(i).unwrap(), long.alpha(i).unwrap());
        assert_eq!(long.shift(3).alpha(i).unwrap(), long.alpha(i + 3).unwrap());
    }
    assert!(short.alpha(50).is_err());
    assert_ne!(NoiseWindow::symmetric(f.noise(), 10, 50).alpha(0).unwrap(), short.alpha(0).unwrap());
}

#[test]
fn cocycle_property_and_orbits() {
    let f = Family::<f64>::example3(1.0 / TAU, 0.1).unwrap();
    let w = NoiseWindow::symmetric(f.noise(), 4, 40);
    let x = p(0.3);
    for (n, m) in [(3, 5), (7, 0), (10, 10)] {
        let whole = cocycle(&f, &w, n + m, x).unwrap();
        let split = cocycle(&f, &w.shift(m), n, cocycle(&f, &w, m, x).unwrap()).unwrap();
        assert_abs_diff_eq!(whole.dist(split), 0.0, epsilon = 1e-15);
    }
    let g = Family::<f64>::example3(0.3 / TAU, 0.2).unwrap();
    let w = NoiseWindow::symmetric(g.noise(), 4, 40);
    let fwd = forward_orbit(&g, &w, -10, x, 12).unwrap();
    assert_eq!(fwd[12], cocycle(&g, &w.shift(-10), 12, x).unwrap());
    let back = backward_orbit(&g, &w, 2, fwd[12], 12).unwrap();
    for (a, b) in back.iter().zip(&fwd) {
        assert_abs_diff_eq!(a.dist(*b), 0.0, epsilon = 1e-10);
    }
    assert!(cocycle(&g, &w, 41, x).is_err());
}

#[test]
fn rotation_invariant_structures() {
    assert_eq!(gcd(12, 18), 6);
    assert_eq!(gcd(5, 0), 5);
    let s = estimate_minimal_structure(&Family::<f64>::example1(1, 0, 0.05).unwrap(), &McParams::default()).unwrap();
    assert_eq!((s.k, s.l), (1, 0));
    assert!(!s.whole_circle);
    assert!(s.components[0].contains(p(0.5)) && !s.components[0].contains(p(0.0)));
    let s = estimate_minimal_structure(&Family::<f64>::example1(3, 2, 0.02).unwrap(), &McParams::default()).unwrap();
    assert_eq!((s.k, s.l), (3, 2));
    for x in [1.0 / 6.0, 0.5, 5.0 / 6.0] {
        assert!(s.component_of(p(x)).is_some(), "{x}");
    }
}

#[test]
fn single_precision_scalar() {
    let f = Family::<f32>::example1(2, 1, 0.05).unwrap();
    let y = f.eval(&[0.5, 0.0], Point::new(0.1f32)).unwrap();
    assert!((y.value() as f64 - e1_oracle(2, 1, 0.05, 0.5, 0.1)).abs() < 1e-6);
    let w = rds_circle::dynamics::NoiseWindow::<f32>::symmetric(f.noise(), 1, 20);
    assert!(cocycle(&f, &w, 20, Point::new(0.1f32)).is_ok());
}
