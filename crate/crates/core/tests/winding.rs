use std::f64::consts::PI;

use levinson_ab::extensions::{
    from_unitary, random_pair, table_fixtures, AdmissiblePair, ExtensionPoint, Flux,
};
use levinson_ab::linalg::Matrix2;
use levinson_ab::scattering::{gamma_edges, phi_minus, phi_tilde, ChannelPhase};
use levinson_ab::winding::*;
use num_complex::Complex;
use rayon::prelude::*;

type M = Matrix2<f64>;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

#[test]
fn table_fixtures_satisfy_levinson_and_the_table() {
    for f in table_fixtures::<f64>() {
        let (ok, r) = levinson_check(&f.pair, f.alpha).unwrap();
        assert!(ok, "{}: {:?} predicted {:?}", f.case, r.phi, r.predicted);
        assert_eq!(r.case_label.unwrap().case, f.case);
        assert!(r.max_corner_residual < 1e-8);
    }
}

#[test]
fn random_pairs_satisfy_levinson() {
    let alphas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let bad: Vec<String> = (0..200u64)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let pair = random_pair::<f64>(seed);
            alphas.iter().filter_map(move |&a| match levinson_check(&pair, Flux::new(a).unwrap()) {
                Ok((true, _)) => None,
                Ok((false, r)) => Some(format!("seed {seed} alpha {a}: {:?} wind {} count {}", r.phi, r.wind, r.bound_count)),
                Err(e) => Some(format!("seed {seed} alpha {a}: {e}")),
            })
        })
        .collect();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn examples() {
    let a = Flux::new(0.3).unwrap();
    let r = total_winding(&AdmissiblePair::new(M::identity(), M::zero()).unwrap(), a).unwrap();
    assert_eq!((r.wind, r.bound_count), (0, 0));
    let r = total_winding(&AdmissiblePair::new(-M::identity(), M::identity()).unwrap(), a).unwrap();
    assert_eq!((r.wind, r.bound_count), (-2, 2));
    assert!((r.phi[1] + 2.0 * PI).abs() < 1e-9);
    let u = ExtensionPoint::new(M::diag(c(-1.0, 0.0), c(0.0, 1.0))).unwrap();
    let r = total_winding(&from_unitary(&u), Flux::new(0.5).unwrap()).unwrap();
    assert_eq!((r.wind, r.bound_count), (-1, 1));
    let pair = AdmissiblePair::new(M::zero(), M::identity()).unwrap();
    let (ok, r) = levinson_check(&pair, a).unwrap();
    assert!(ok);
    for (got, want) in r.phi.iter().zip([2.0 * PI, 0.0, -2.0 * PI, 0.0]) {
        assert!((got - want).abs() < 1e-9);
    }
    assert_eq!(r.phi[3], 0.0);
}

#[test]
fn reversal_negates_exactly() {
    for seed in 0..20u64 {
        let pair = random_pair::<f64>(seed);
        let set = gamma_edges(&pair, Flux::new(0.35).unwrap()).unwrap();
        let lp = BoundaryLoop::sample(&set).unwrap();
        let rev = lp.reversed().unwrap();
        assert_eq!(rev.raw_winding(), -lp.raw_winding());
        let (f, b) = (lp.variations(), rev.variations());
        for j in 0..4 {
            assert_eq!(b[3 - j], -f[j]);
        }
    }
}

#[test]
fn doubling_the_samples_changes_nothing() {
    for seed in 0..20u64 {
        let pair = random_pair::<f64>(seed);
        let a = Flux::new(0.65).unwrap();
        let (r1, _) = total_winding_with(&pair, a, SamplingOptions::default()).unwrap();
        let (r2, _) = total_winding_with(&pair, a, SamplingOptions::default().doubled()).unwrap();
        for j in 0..4 {
            assert!((r1.phi[j] - r2.phi[j]).abs() <= 1e-8, "seed {seed} edge {j}");
        }
    }
}

#[test]
fn edge_examples() {
    let a = Flux::new(0.4).unwrap();
    let set = gamma_edges(&AdmissiblePair::new(M::zero(), M::identity()).unwrap(), a).unwrap();
    let lp = BoundaryLoop::sample(&set).unwrap();
    assert!((lp.variations()[0] - 2.0 * PI).abs() < 1e-9);
    for &al in &[0.2, 0.5, 0.9] {
        let set = gamma_edges(&AdmissiblePair::new(-M::identity(), M::identity()).unwrap(), Flux::new(al).unwrap()).unwrap();
        let lp = BoundaryLoop::sample(&set).unwrap();
        assert!((lp.variations()[1] + 2.0 * PI).abs() < 1e-9);
    }
}

/// Numeric unwrap of a scalar path on `x = sinh(u)` with exact end values.
fn unwrap_scalar(f: impl Fn(f64) -> Complex<f64>, start: Complex<f64>, end: Complex<f64>) -> f64 {
    let n = 20_001;
    let um = 2e4f64.asinh();
    let mut pts = vec![M::scalar(start)];
    for k in 0..n {
        let u = -um + 2.0 * um * k as f64 / (n - 1) as f64;
        pts.push(M::real_diag(1.0, 1.0).scale(f(u.sinh())));
    }
    pts.push(M::scalar(end));
    // det of a scalar matrix doubles the phase.
    edge_variation(&pts).unwrap() / 2.0
}

#[test]
fn var_corollaries() {
    for &al in &[0.25, 0.5, 0.75] {
        let a = Flux::new(al).unwrap();
        for m in [0i64, -1] {
            let d = ChannelPhase::new(m, a).delta;
            let mm = (m as f64).abs();
            let lemma = var_phi_ab((mm + 1.0) / 2.0, ((m as f64 + al).abs() + 1.0) / 2.0);
            assert!((lemma - 2.0 * d).abs() < 1e-6);
            let numeric = unwrap_scalar(|x| phi_minus(m, a, x), c(1.0, 0.0), phi_minus(m, a, f64::INFINITY));
            assert!((numeric - 2.0 * d).abs() < 1e-3, "{numeric} vs {}", 2.0 * d);
        }
        let e = Complex::from_polar(1.0, PI * al);
        let k0 = e - e.conj();
        assert!((var_phi_ab(0.5, (1.0 - al) / 2.0) - PI * al).abs() < 1e-6);
        let numeric = unwrap_scalar(
            |x| phi_minus(0, a, x) + phi_tilde(0, a, x).unwrap() * k0,
            c(1.0, 0.0),
            phi_minus(0, a, f64::INFINITY) + k0,
        );
        assert!((numeric - PI * al).abs() < 1e-3, "{numeric}");
        let k1 = e.conj() - e;
        assert!((var_phi_ab(1.0, al / 2.0) - PI * (2.0 - al)).abs() < 1e-6);
        let numeric = unwrap_scalar(
            |x| phi_minus(-1, a, x) + phi_tilde(-1, a, x).unwrap() * k1,
            c(1.0, 0.0),
            phi_minus(-1, a, f64::INFINITY) + k1,
        );
        assert!((numeric - PI * (2.0 - al)).abs() < 1e-3, "{numeric}");
    }
}

#[test]
fn f32_smoke() {
    let pair = AdmissiblePair::<f32>::new(-Matrix2::identity(), Matrix2::identity()).unwrap();
    let r = total_winding(&pair, Flux::new(0.3f32).unwrap()).unwrap();
    assert_eq!((r.wind, r.bound_count), (-2, 2));
}
