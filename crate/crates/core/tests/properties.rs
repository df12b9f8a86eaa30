use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use recurlab::certifier::{certify, tail_bound, Verdict, DEFAULT_EPS_GRID};
use recurlab::probsim::{make_x, rho_exact, tail_probability_exact, RVLinearExpr};
use recurlab::pspace::{PSeminorm, SeminormFamily, Vector};
use recurlab::seqlab::{
    closed_form, converges_to, forward_transform, inverse_solve, SequencePrefix, SequenceSpec,
};

type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(0.5), 0.05f64..=1.0]
}

fn weights(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..5.0], dim)
}

fn seminorm_and_dim() -> impl Strategy<Value = (PSeminorm<f64>, usize)> {
    (1usize..5).prop_flat_map(|d| {
        (exponent(), weights(d)).prop_map(move |(p, w)| (PSeminorm::new(p, w).unwrap(), d))
    })
}

/// Small dyadic rational `a / 2^j`.
fn dyadic() -> impl Strategy<Value = Q> {
    (-64i64..=64, 0u32..6).prop_map(|(a, j)| q(a, 1 << j))
}

fn exact_point(dim: usize) -> impl Strategy<Value = Vector<Q>> {
    prop::collection::vec(dyadic(), dim).prop_map(|v| Vector::new(v).unwrap())
}

fn exact_prefix(dim: usize) -> impl Strategy<Value = SequencePrefix<Q>> {
    prop::collection::vec(exact_point(dim), 1..16).prop_map(|t| SequencePrefix::new(t).unwrap())
}

fn small_expr() -> impl Strategy<Value = RVLinearExpr> {
    prop::collection::vec((1u64..=7, -8i64..=8, 1i64..=4), 0..5).prop_map(|ts| {
        RVLinearExpr::from_terms(ts.into_iter().map(|(k, a, d)| (k, q(a, d)))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn triangle_inequality((s, d) in seminorm_and_dim(), raw in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4)) {
        let x = Vector::new(raw[..d].iter().map(|r| r.0).collect()).unwrap();
        let y = Vector::new(raw[..d].iter().map(|r| r.1).collect()).unwrap();
        let lhs = s.eval(&x.add(&y).unwrap()).unwrap();
        prop_assert!(lhs <= s.eval(&x).unwrap() + s.eval(&y).unwrap() + 1e-12);
    }

    #[test]
    fn p_homogeneity((s, d) in seminorm_and_dim(), k in -20.0f64..20.0, raw in prop::collection::vec(-10.0f64..10.0, 4)) {
        let x = Vector::new(raw[..d].to_vec()).unwrap();
        let kx = s.eval(&x.scale(&k)).unwrap();
        let expected = k.abs().powf(s.p()) * s.eval(&x).unwrap();
        prop_assert!((kx - expected).abs() <= 1e-9 * (1.0 + kx));
    }

    #[test]
    fn ball_symmetry(
        (s, d) in seminorm_and_dim(),
        raw in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4),
        eps in 0.01f64..6.0,
    ) {
        let x = Vector::new(raw[..d].iter().map(|r| r.0).collect()).unwrap();
        let y = Vector::new(raw[..d].iter().map(|r| r.1).collect()).unwrap();
        prop_assert_eq!(s.ball_contains(&x, eps, &y).unwrap(), s.ball_contains(&y, eps, &x).unwrap());
    }

    #[test]
    fn indistinguishability_is_an_equivalence(
        ws in prop::collection::vec(weights(3), 1..4),
        p in exponent(),
        pts in prop::collection::vec(prop::collection::vec(0i8..2, 3), 3),
    ) {
        let family = SeminormFamily::new(ws.into_iter().map(|w| PSeminorm::new(p, w).unwrap()).collect()).unwrap();
        let pts: Vec<Vector<f64>> = pts.into_iter().map(|v| Vector::new(v.into_iter().map(f64::from).collect()).unwrap()).collect();
        let rel = |a: usize, b: usize| family.points_indistinguishable(&pts[a], &pts[b]).unwrap();
        for a in 0..3 {
            prop_assert!(rel(a, a));
            for b in 0..3 {
                prop_assert_eq!(rel(a, b), rel(b, a));
                for c in 0..3 {
                    if rel(a, b) && rel(b, c) {
                        prop_assert!(rel(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn transform_round_trip((x1, c) in (1usize..4).prop_flat_map(|d| (exact_point(d), exact_prefix(d)))) {
        prop_assert_eq!(forward_transform(&inverse_solve(&x1, &c).unwrap()).unwrap(), c);
    }

    #[test]
    fn closed_form_agrees_with_recursion(x1 in exact_point(2), c in exact_prefix(2)) {
        let x = inverse_solve(&x1, &c).unwrap();
        for n in 1..=x.len() {
            prop_assert_eq!(&closed_form(&x1, &c, n).unwrap(), x.term(n).unwrap());
        }
    }

    #[test]
    fn transform_is_linear(
        pair in (2usize..12).prop_flat_map(|l| (
            prop::collection::vec(exact_point(2), l),
            prop::collection::vec(exact_point(2), l),
        )),
        a in dyadic(),
        b in dyadic(),
    ) {
        let x = SequencePrefix::new(pair.0).unwrap();
        let y = SequencePrefix::new(pair.1).unwrap();
        let lhs = forward_transform(&x.lin_comb(&a, &y, &b).unwrap()).unwrap();
        let rhs = forward_transform(&x).unwrap().lin_comb(&a, &forward_transform(&y).unwrap(), &b).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn transform_commutes_with_shifts(
        terms in prop::collection::vec(exact_point(3), 2..12),
        v in exact_point(3),
    ) {
        let x = SequencePrefix::new(terms).unwrap();
        let lhs = forward_transform(&x.shift(&v).unwrap()).unwrap();
        let rhs = forward_transform(&x).unwrap().shift(&v).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn scale_coherence(p in exponent(), w in weights(3), raw in prop::collection::vec(-10.0f64..10.0, 3), m in 0u32..30) {
        let s = PSeminorm::new(p, w).unwrap();
        let u = Vector::new(raw).unwrap();
        let scaled = s.eval(&u.scale(&2f64.powi(m as i32))).unwrap();
        let expected = 2f64.powf(m as f64 * p) * s.eval(&u).unwrap();
        prop_assert!((scaled - expected).abs() <= 1e-9 * (1.0 + scaled));
    }

    #[test]
    fn tail_bound_moves_monotonically_toward_eps(sigma in 0.0f64..50.0, eps in 1e-3f64..5.0, p in exponent()) {
        let curve: Vec<f64> = (0..200).map(|m| tail_bound(sigma, eps, p, m)).collect();
        prop_assert!((curve[0] - sigma).abs() <= 1e-12 * (1.0 + sigma));
        for w in curve.windows(2) {
            if sigma < eps {
                prop_assert!(w[1] >= w[0] - 1e-12);
            } else {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
        }
        let (lo, hi) = (sigma.min(eps), sigma.max(eps));
        prop_assert!(curve.iter().all(|b| *b >= lo - 1e-12 && *b <= hi + 1e-12));
    }

    #[test]
    fn rho_pseudo_metric(a in small_expr(), b in small_expr(), c in small_expr()) {
        let ab = rho_exact(&a, &b).unwrap();
        prop_assert!(ab >= Q::zero());
        prop_assert_eq!(rho_exact(&a, &a).unwrap(), Q::zero());
        prop_assert_eq!(&ab, &rho_exact(&b, &a).unwrap());
        let bc = rho_exact(&b, &c).unwrap();
        prop_assert!(rho_exact(&a, &c).unwrap() <= ab + bc);
    }

    #[test]
    fn bridge_inequality(r in small_expr(), t in (1i64..=16, 1i64..=8).prop_map(|(a, d)| q(a, d))) {
        let rho = rho_exact(&r, &RVLinearExpr::zero()).unwrap();
        let tail = tail_probability_exact(&r, &t).unwrap();
        prop_assert!(rho >= t.clone() / (Q::one() + t) * tail);
    }

    #[test]
    fn odd_x_dominates_union_indicator(n in 1u64..40, bits in prop::collection::vec(any::<bool>(), 80)) {
        let x = make_x(2 * n + 1).unwrap();
        // S_1 is sure, so every admissible pattern has it.
        let occurred = |k: u64| k == 1 || bits[k as usize - 1];
        let union = (n + 1..=2 * n).any(occurred);
        let indicator = if union { Q::one() } else { Q::zero() };
        prop_assert!(x.value_at(occurred) >= indicator);
    }
}

fn geometric_drive() -> impl Strategy<Value = (f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..4).prop_flat_map(|d| {
        (
            (1u32..12).prop_map(|k| k as f64 / 16.0),
            prop::collection::vec((-64i32..=64).prop_map(|a| a as f64 / 8.0), d),
            prop::collection::vec((-64i32..=64).prop_map(|a| a as f64 / 8.0), d),
            prop::collection::vec((-16i32..=16).prop_map(|a| a as f64 / 4.0), d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certificates_respect_their_bound_curves(
        (ratio, scale, x1, limit) in geometric_drive(),
        p in prop_oneof![Just(0.3), Just(0.5), Just(1.0)],
    ) {
        let d = x1.len();
        // c_n − limit = scale·r^n, so x_n → limit.
        let drive = SequenceSpec::Named(recurlab::seqlab::NamedFamily::Geometric {
            ratio: recurlab::seqlab::Components::Uniform(ratio),
            scale: recurlab::seqlab::Components::PerCoordinate(scale),
            offset: Some(recurlab::seqlab::Components::PerCoordinate(limit.clone())),
        });
        let spec = SequenceSpec::driven(x1, drive);
        let family = SeminormFamily::single(PSeminorm::uniform(p, d).unwrap());
        let lim = Vector::new(limit).unwrap().to_exact().unwrap();
        let report = certify::<Q, f64>(&family, &spec, &lim, &DEFAULT_EPS_GRID, 160).unwrap();
        for cert in &report.certificates {
            for row in &cert.rows {
                let bound = tail_bound(cert.sigma_xn.unwrap(), cert.epsilon, p, row.m as u64);
                prop_assert!(row.observed <= bound + 1e-9 * (1.0 + bound));
            }
            prop_assert_ne!(cert.verdict, Verdict::BoundViolated);
        }
        if report.all_certified {
            let diag = converges_to::<Q, f64>(&family, &spec, &lim, 160, &DEFAULT_EPS_GRID).unwrap();
            prop_assert!(diag.converging);
        }
    }
}

#[test]
fn exact_identity_on_large_integers() {
    let big = Q::from_integer(BigInt::one() << 200usize);
    let x1 = Vector::new(vec![big.clone()]).unwrap();
    let c = SequencePrefix::scalar(vec![big.clone(), -big.clone(), q(1, 3)]).unwrap();
    let x = inverse_solve(&x1, &c).unwrap();
    assert_eq!(forward_transform(&x).unwrap(), c);
}
