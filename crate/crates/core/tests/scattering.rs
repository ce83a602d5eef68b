use levinson_ab::extensions::{random_pair, table_fixtures, AdmissiblePair, Flux};
use levinson_ab::linalg::Matrix2;
use levinson_ab::scalar::cis;
use levinson_ab::scattering::*;
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type M = Matrix2<f64>;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

#[test]
fn unitary_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for seed in 0..10_000u64 {
        let pair = random_pair::<f64>(seed);
        let a = Flux::new(rng.random_range(0.01..0.99)).unwrap();
        let kappa = 10f64.powf(rng.random_range(-8.0..8.0));
        let s = s_matrix(&pair, a, kappa).unwrap();
        worst = worst.max(s.unitarity_residual());
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn three_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..2000u64 {
        let pair = random_pair::<f64>(seed);
        let a = Flux::new(rng.random_range(0.05..0.95)).unwrap();
        let kappa = 10f64.powf(rng.random_range(-3.0..3.0));
        let s = s_matrix(&pair, a, kappa).unwrap();
        let literal = s_tilde(&pair, a, kappa).unwrap() + free_part(a);
        assert!((s - literal).max_abs() < 1e-10, "seed {seed}: {:e}", (s - literal).max_abs());
        let cayley = s_matrix_cayley(&pair, a, kappa).unwrap();
        assert!((s - cayley).max_abs() < 1e-10, "seed {seed}: {:e}", (s - cayley).max_abs());
    }
}

#[test]
fn literal_route_has_the_clause_limits() {
    // The literal product, independent of the rational evaluator, approaches
    // the clause values on both ends for invertible C and D.
    let pair = AdmissiblePair::new(
        M::new(c(1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(-2.0, 0.0)),
        M::identity(),
    )
    .unwrap();
    let a = Flux::new(0.3).unwrap();
    let s0 = s_tilde(&pair, a, 1e-12).unwrap() + free_part(a);
    let si = s_tilde(&pair, a, 1e12).unwrap() + free_part(a);
    assert!((s0 - s_asymptotic(&pair, a, End::Zero).unwrap()).max_abs() < 1e-6);
    assert!((si - s_asymptotic(&pair, a, End::Infinity).unwrap()).max_abs() < 1e-6);
}

#[test]
fn clause_examples() {
    let a = Flux::new(0.3).unwrap();
    let pa = 0.3 * std::f64::consts::PI;
    let inv = AdmissiblePair::new(-M::identity(), M::identity()).unwrap();
    let s = s_asymptotic(&inv, a, End::Infinity).unwrap();
    assert!((s - M::diag(cis(pa), cis(-pa))).max_abs() < 1e-15);
    // ker C = (ℂ, 0).
    let pair = AdmissiblePair::new(M::real_diag(0.0, 1.0), M::real_diag(1.0, 0.0)).unwrap();
    let s = s_asymptotic(&pair, a, End::Zero).unwrap();
    assert!((s - M::scalar(cis(pa))).max_abs() < 1e-15);
    let cz = AdmissiblePair::new(M::zero(), M::identity()).unwrap();
    let s = s_matrix(&cz, a, 0.0).unwrap();
    assert!((s - M::diag(cis(pa), cis(-pa))).max_abs() < 1e-15);
}

/// `S(κ)` approaches the clause value at both ends for every table row, and the
/// distance shrinks monotonically over the last decades.
#[test]
fn numeric_limits_match_clauses_on_all_fixtures() {
    for f in table_fixtures::<f64>() {
        let e = gamma_edges(&f.pair, f.alpha).unwrap();
        let (s0, si) = e.endpoints();
        let mut prev_inf = f64::INFINITY;
        let mut prev_zero = f64::INFINITY;
        for v in [100.0, 150.0, 200.0, 250.0, 300.0] {
            let di = (e.gamma2_log(v) - si).max_abs();
            let dz = (e.gamma2_log(-v) - s0).max_abs();
            assert!(di <= prev_inf + 1e-15 && dz <= prev_zero + 1e-15, "{}: v={v}", f.case);
            prev_inf = di;
            prev_zero = dz;
        }
        assert!(prev_inf < 1e-8, "{} at infinity: {prev_inf:e}", f.case);
        assert!(prev_zero < 1e-8, "{} at zero: {prev_zero:e}", f.case);
        assert!(e.corner_residual() < 1e-12, "{}", f.case);
    }
}

/// Once `S(κ)` is within 0.05 of its limit it keeps approaching it over the
/// next three decades, at the power-law rate `κ^{∓2 min(α, 1−α)}`.
#[test]
fn endpoint_convergence_is_monotone_for_random_pairs() {
    let ln10 = std::f64::consts::LN_10;
    for seed in 0..100u64 {
        let pair = random_pair::<f64>(seed);
        for &a in &[0.2, 0.5, 0.8] {
            let e = gamma_edges(&pair, Flux::new(a).unwrap()).unwrap();
            let (s0, si) = e.endpoints();
            let expect = 10f64.powf(-2.0 * a.min(1.0 - a));
            for (sign, limit) in [(1.0, si), (-1.0, s0)] {
                let d = |k: usize| (e.gamma2_log(sign * k as f64 * ln10) - limit).max_abs();
                let k0 = (0..100).find(|&k| d(k) < 0.05).expect("converges");
                let w: Vec<f64> = (k0..=k0 + 3).map(d).collect();
                for pair in w.windows(2).filter(|p| p[1] > 1e-12) {
                    assert!(pair[1] < pair[0], "seed {seed} alpha {a} sign {sign}: {w:?}");
                    assert!(pair[1] / pair[0] < expect * 1.5, "seed {seed} alpha {a}: {w:?}");
                }
            }
        }
    }
}

#[test]
fn corners_match_for_random_pairs() {
    for seed in 0..200u64 {
        let pair = random_pair::<f64>(seed);
        for &a in &[0.1, 0.5, 0.9] {
            let e = gamma_edges(&pair, Flux::new(a).unwrap()).unwrap();
            assert!(e.corner_residual() <= 1e-8, "seed {seed}");
            assert_eq!(e.gamma4(3.0), M::identity());
            assert_eq!(e.gamma1(f64::NEG_INFINITY), M::identity());
        }
    }
}

#[test]
fn edge_values_are_unitary() {
    for seed in 0..50u64 {
        let pair = random_pair::<f64>(seed);
        let e = gamma_edges(&pair, Flux::new(0.37).unwrap()).unwrap();
        for k in -400..=400 {
            let x = k as f64 * 0.1;
            assert!(e.gamma1(x).unitarity_residual() < 1e-9, "seed {seed} x {x}");
            assert!(e.gamma3(x).unitarity_residual() < 1e-9, "seed {seed} x {x}");
        }
    }
}

#[test]
fn det_s_is_continuous() {
    for seed in 0..20u64 {
        let pair = random_pair::<f64>(seed);
        let e = gamma_edges(&pair, Flux::new(0.6).unwrap()).unwrap();
        let mut prev = e.gamma2_log(-25.0).det();
        for k in -2499..=2500 {
            let d = e.gamma2_log(k as f64 * 0.01).det();
            assert!((d.norm() - 1.0).abs() < 1e-12);
            assert!((d / prev).arg().abs() < 0.1, "seed {seed} at v {}", k as f64 * 0.01);
            prev = d;
        }
    }
}

#[test]
fn phi_tilde_matches_direct_gamma_product() {
    // (1/2π) e^{-iπ|m|/2} e^{πx/2} Γ-ratio Γ(½(1+c−ix)) Γ(½(1−c−ix)) via log Γ.
    use levinson_ab::special_fn::log_gamma;
    for &(m, a, x) in &[(0i64, 0.5, 0.0), (0, 0.3, 1.7), (-1, 0.3, -2.2), (-1, 0.8, 6.0), (0, 0.1, -9.0)] {
        let alpha = Flux::new(a).unwrap();
        let c_ = ((m as f64) + a).abs();
        let am = (m as f64).abs();
        let lg = |re: f64, im: f64| log_gamma(c(re, im)).unwrap();
        let log_val = lg(0.5 * (am + 1.0), 0.5 * x) - lg(0.5 * (am + 1.0), -0.5 * x)
            + lg(0.5 * (1.0 + c_), -0.5 * x)
            + lg(0.5 * (1.0 - c_), -0.5 * x)
            + c(std::f64::consts::PI * x / 2.0 - (2.0 * std::f64::consts::PI).ln(), -std::f64::consts::PI * am / 2.0);
        let want = log_val.exp();
        let got = phi_tilde(m, alpha, x).unwrap();
        assert!((got - want).norm() < 1e-12 * want.norm().max(1.0), "{m} {a} {x}: {got} vs {want}");
    }
}

#[test]
fn f32_smoke() {
    let pair = AdmissiblePair::<f32>::new(-Matrix2::identity(), Matrix2::identity()).unwrap();
    let s = s_matrix(&pair, Flux::new(0.5f32).unwrap(), 2.0).unwrap();
    let want = Matrix2::diag(Complex::new(-0.8f32, 0.6), Complex::new(0.8, -0.6));
    assert!((s - want).max_abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn unitary_and_phase_symmetric(seed in 0u64..1_000_000, a in 0.01f64..0.99, lk in -20.0f64..20.0) {
        let pair = random_pair::<f64>(seed);
        let alpha = Flux::new(a).unwrap();
        let s = ScatteringMatrix::new(&pair, alpha).unwrap().at_log(lk);
        prop_assert!(s.unitarity_residual() < 1e-10);
        prop_assert!((s.det().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn channel_functions_are_bounded(m in -1i64..=0, a in 0.01f64..0.99, x in -300.0f64..300.0) {
        let alpha = Flux::new(a).unwrap();
        prop_assert!((phi_minus(m, alpha, x).norm() - 1.0).abs() < 1e-13);
        let t = phi_tilde(m, alpha, x).unwrap();
        prop_assert!(t.is_finite() && t.norm() < 10.0);
    }
}
