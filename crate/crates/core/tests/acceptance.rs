//! Acceptance suite. Runs every criterion in sequence, prints one line per
//! criterion and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recurlab::certifier::{certify, Verdict};
use recurlab::probsim::{
    make_x, make_y, rho_bracket, rho_exact, rho_mc, tail_probability_exact, tail_probability_mc,
    union_probability_exact, verify_recurrence_identity, McConfig, RVLinearExpr,
    RHO_EXACT_MAX_FREE_TERMS,
};
use recurlab::pspace::{PSeminorm, SeminormFamily, Vector};
use recurlab::seqlab::{Components, NamedFamily, SequenceSpec};

type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn pow2(e: usize) -> BigInt {
    BigInt::one() << e
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

// 1. union probability
fn union_identity() -> Outcome {
    let t = Instant::now();
    let half = q(1, 2);
    let bad: Vec<u64> = (1..=10_000u64)
        .filter(|&n| union_probability_exact(n).unwrap() != half)
        .collect();
    let el = t.elapsed();
    check(
        bad.is_empty() && el < Duration::from_secs(5),
        format!(
            "P(S_(n+1) ∪ … ∪ S_(2n)) = 1/2 for n = 1..10000; mismatches {}; {} (limit 5 s)",
            bad.len(),
            secs(el)
        ),
    )
}

// 2. recurrence identity
fn recurrence_identity() -> Outcome {
    let t = Instant::now();
    let bad = (1..=1000u64)
        .filter(|&n| !verify_recurrence_identity(n).unwrap())
        .count();
    let el = t.elapsed();
    check(
        bad == 0 && el < Duration::from_secs(1),
        format!(
            "2X_(n+1) − X_n = Y_n for n = 1..1000; failures {bad}; {} (limit 1 s)",
            secs(el)
        ),
    )
}

// 3. exact odd tail
fn exact_odd_tail() -> Outcome {
    let half = q(1, 2);
    let mut worst = Q::one();
    let mut ok = true;
    for n in 1..=12u64 {
        let p = tail_probability_exact(&make_x(2 * n + 1).unwrap(), &half).unwrap();
        ok &= p >= half;
        if n == 1 {
            ok &= p == half;
        }
        worst = worst.min(p);
    }
    check(
        ok,
        format!("P(|X_(2n+1)| > 1/2) >= 1/2 for n = 1..12, equal at n = 1; minimum {worst}"),
    )
}

// 4. sampled odd tail at n = 50
fn sampled_odd_tail() -> Outcome {
    let t = Instant::now();
    let cfg = McConfig::membership(20_240_601, 1_000_000);
    let e = tail_probability_mc(&make_x(101).unwrap(), &q(1, 2), &cfg).unwrap();
    let el = t.elapsed();
    check(
        e.mean >= 0.5 - 4.0 * e.stderr && el < Duration::from_secs(30),
        format!(
            "P(|X_101| > 1/2) ≈ {:.5} ± {:.5} (10^6 samples, seed {}) vs 0.5 − 4·se; {} (limit 30 s)",
            e.mean,
            e.stderr,
            cfg.seed,
            secs(el)
        ),
    )
}

// 5. transform tail
fn transform_tail() -> Outcome {
    let half = q(1, 2);
    let bad: Vec<i64> = (1..=25i64)
        .filter(|&n| tail_probability_exact(&make_y(n as u64).unwrap(), &half).unwrap() != q(1, n))
        .collect();
    check(
        bad.is_empty(),
        format!("P(|Y_n| > 1/2) = 1/n for n = 1..25; mismatches {bad:?}"),
    )
}

// 6. rho values
fn rho_values() -> Outcome {
    let zero = RVLinearExpr::zero();
    let sixth = q(1, 6);
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 1..=10u64 {
        let x = make_x(2 * n + 1).unwrap();
        let free = x.num_terms() - 1;
        let bracket = rho_bracket(&x, &zero).unwrap();
        ok &= bracket.lower > sixth;
        if free <= RHO_EXACT_MAX_FREE_TERMS {
            let v = rho_exact(&x, &zero).unwrap();
            ok &= v > sixth && bracket.contains(&v);
        }
        notes.push(format!("{:.4}", bracket.lower.to_f64().unwrap()));
    }
    let mut prev = f64::INFINITY;
    for n in 1..=20usize {
        // Y_n is 2^n with probability 1/n and 0 otherwise.
        let oracle = Q::new(pow2(n), BigInt::from(n) * (pow2(n) + 1u32));
        let v = rho_exact(&make_y(n as u64).unwrap(), &zero).unwrap();
        ok &= v == oracle;
        let f = v.to_f64().unwrap();
        ok &= f < prev;
        prev = f;
        if n == 17 {
            ok &= f < 0.06;
        }
    }
    check(
        ok,
        format!(
            "rho(X_(2n+1), 0) > 1/6 for n = 1..10 (exact for n <= 6, exact rational lower bounds {}); \
             rho(Y_n, 0) = 2^n/(n(2^n+1)) for n <= 20, below 0.06 from n = 17",
            notes.join(", ")
        ),
    )
}

// 7. certifier bound suite
fn certifier_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eps_grid = [1.0, 0.3, 0.1, 0.03, 0.01];
    let prefix = 200;
    let mut assertions = 0usize;
    let mut failures = Vec::new();
    for case in 0..100 {
        let p = [0.3, 0.5, 1.0][case % 3];
        let d = rng.random_range(1..=3usize);
        let ratio = rng.random_range(1..=10i64);
        let scale: Vec<i64> = (0..d).map(|_| rng.random_range(-64..=64)).collect();
        let x1: Vec<i64> = (0..d).map(|_| rng.random_range(-64..=64)).collect();
        let limit: Vec<i64> = (0..d).map(|_| rng.random_range(-16..=16)).collect();
        let weights: Vec<f64> = (0..d).map(|_| rng.random_range(0.25..4.0)).collect();

        let as_f = |v: &[i64], den: f64| v.iter().map(|&a| a as f64 / den).collect::<Vec<_>>();
        let drive = SequenceSpec::Named(NamedFamily::Geometric {
            ratio: Components::Uniform(ratio as f64 / 16.0),
            scale: Components::PerCoordinate(as_f(&scale, 8.0)),
            offset: Some(Components::PerCoordinate(as_f(&limit, 4.0))),
        });
        let spec = SequenceSpec::driven(as_f(&x1, 8.0), drive);
        let s = PSeminorm::new(p, weights.clone()).unwrap();
        let family = SeminormFamily::single(s);
        let lim_q: Vec<Q> = limit.iter().map(|&a| q(a, 4)).collect();
        let lim = Vector::new(lim_q.clone()).unwrap();
        let report = certify::<Q, f64>(&family, &spec, &lim, &eps_grid, prefix).unwrap();

        // Independent recomputation of σ(x_n − limit) from the recursion
        // x_(n+1) = (c_n + x_n)/2, c_n = limit + scale·r^n.
        let r = q(ratio, 16);
        let mut xs: Vec<Vec<Q>> = vec![x1.iter().map(|&a| q(a, 8)).collect()];
        let mut rn = Q::one();
        for _ in 1..prefix {
            rn *= r.clone();
            let prev = xs.last().unwrap();
            let next = (0..d)
                .map(|i| {
                    (lim_q[i].clone() + q(scale[i], 8) * rn.clone() + prev[i].clone()) / q(2, 1)
                })
                .collect();
            xs.push(next);
        }
        let sigma: Vec<f64> = xs
            .iter()
            .map(|x| {
                (0..d)
                    .map(|i| {
                        weights[i]
                            * (x[i].clone() - lim_q[i].clone())
                                .abs()
                                .to_f64()
                                .unwrap()
                                .powf(p)
                    })
                    .sum()
            })
            .collect();

        for cert in &report.certificates {
            let eps = cert.epsilon;
            assertions += 1;
            if cert.verdict != Verdict::Certified {
                failures.push(format!("case {case} eps {eps}: {:?}", cert.verdict));
                continue;
            }
            let n = cert.n.unwrap();
            for row in &cert.rows {
                let observed = sigma[n - 1 + row.m];
                let decay = 2f64.powf(-(row.m as f64) * p);
                let bound = decay * sigma[n - 1] + (1.0 - decay) * eps;
                assertions += 2;
                if (observed - row.observed).abs() > 1e-9 * (1.0 + observed) {
                    failures.push(format!(
                        "case {case} eps {eps} m {}: observed mismatch",
                        row.m
                    ));
                }
                if observed > bound + 1e-9 * (1.0 + bound) {
                    failures.push(format!(
                        "case {case} eps {eps} m {}: {observed} > {bound}",
                        row.m
                    ));
                }
            }
            let window = prefix.div_ceil(4);
            let limsup = sigma[prefix - window..]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assertions += 1;
            if limsup > eps + 1e-6 {
                failures.push(format!("case {case} eps {eps}: limsup {limsup}"));
            }
        }
    }
    check(
        failures.is_empty() && assertions >= 1000,
        format!(
            "100 driven sequences, p in {{0.3, 0.5, 1}}: {assertions} assertions, {} failures{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!(" (first: {f})"))
                .unwrap_or_default()
        ),
    )
}

fn random_coordinate(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..8u8) {
        0 => 0.0,
        1 => rng.random_range(-1e-6..1e-6),
        _ => rng.random_range(-100.0..100.0),
    }
}

fn random_expr(rng: &mut ChaCha8Rng) -> RVLinearExpr {
    let terms: Vec<(u64, Q)> = (0..rng.random_range(0..=4))
        .map(|_| {
            (
                rng.random_range(1..=7u64),
                q(rng.random_range(-12..=12), rng.random_range(1..=6)),
            )
        })
        .collect();
    RVLinearExpr::from_terms(terms).unwrap()
}

// 8. axiom suites
fn axiom_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut triangle = 0;
    let mut homogeneity = 0;
    let samples = 10_000;
    for i in 0..samples {
        let d = rng.random_range(1..=5usize);
        let p = [0.1, 0.3, 0.5, 0.75, 1.0][i % 5];
        let w: Vec<f64> = (0..d)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(0.0..10.0)
                }
            })
            .collect();
        let s = PSeminorm::new(p, w.clone()).unwrap();
        let x: Vec<f64> = (0..d).map(|_| random_coordinate(&mut rng)).collect();
        let y: Vec<f64> = (0..d).map(|_| random_coordinate(&mut rng)).collect();
        let k: f64 = match rng.random_range(0..4u8) {
            0 => 0.0,
            1 => -1.0,
            _ => rng.random_range(-50.0..50.0),
        };
        let sigma = |v: &[f64]| s.eval(&Vector::new(v.to_vec()).unwrap()).unwrap();
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        if sigma(&sum) > sigma(&x) + sigma(&y) + 1e-12 {
            triangle += 1;
        }
        let kx: Vec<f64> = x.iter().map(|a| k * a).collect();
        let lhs = sigma(&kx);
        if (lhs - k.abs().powf(p) * sigma(&x)).abs() > 1e-9 * (1.0 + lhs) {
            homogeneity += 1;
        }
        // Independent evaluation of the weighted p-power sum.
        let direct: f64 = w.iter().zip(&x).map(|(wi, xi)| wi * xi.abs().powf(p)).sum();
        if (direct - sigma(&x)).abs() > 1e-12 * (1.0 + direct) {
            homogeneity += 1;
        }
    }

    let zero = RVLinearExpr::zero();
    let mut rho_failures = 0;
    let triples = 1000;
    for _ in 0..triples {
        let (a, b, c) = (
            random_expr(&mut rng),
            random_expr(&mut rng),
            random_expr(&mut rng),
        );
        let ab = rho_exact(&a, &b).unwrap();
        let bc = rho_exact(&b, &c).unwrap();
        let ac = rho_exact(&a, &c).unwrap();
        let ok = ab >= Q::zero()
            && rho_exact(&a, &a).unwrap().is_zero()
            && ab == rho_exact(&b, &a).unwrap()
            && ac <= ab.clone() + bc
            && rho_exact(&a, &zero).unwrap() < Q::one();
        rho_failures += (!ok) as usize;
    }
    check(
        triangle == 0 && homogeneity == 0 && rho_failures == 0,
        format!(
            "{samples} seminorm samples: {triangle} triangle and {homogeneity} homogeneity violations; \
             {triples} rho triples: {rho_failures} violations"
        ),
    )
}

/// Exact `P(|r| > t)` and `E[|r|/(1 + |r|)]` by summing over all
/// occurrence patterns of `S_2, …, S_k` for the referenced `k`.
fn brute_force(r: &RVLinearExpr, t: &Q) -> (Q, Q) {
    let idx: Vec<u64> = r.indices().into_iter().filter(|&k| k > 1).collect();
    let (mut tail, mut rho) = (Q::zero(), Q::zero());
    for mask in 0u32..(1 << idx.len()) {
        let occurs = |k: u64| {
            k == 1
                || idx
                    .iter()
                    .position(|&j| j == k)
                    .is_some_and(|i| mask >> i & 1 == 1)
        };
        let weight = idx.iter().enumerate().fold(Q::one(), |acc, (i, &k)| {
            acc * if mask >> i & 1 == 1 {
                q(1, k as i64)
            } else {
                q(k as i64 - 1, k as i64)
            }
        });
        let v = r
            .terms()
            .fold(
                Q::zero(),
                |acc, (k, a)| if occurs(k) { acc + a } else { acc },
            )
            .abs();
        if &v > t {
            tail += weight.clone();
        }
        rho += weight * v.clone() / (Q::one() + v);
    }
    (tail, rho)
}

// 9. sampled estimates against exact oracles
fn mc_oracle_agreement() -> Outcome {
    let half = q(1, 2);
    let zero = RVLinearExpr::zero();
    let vars = [
        ("Y_3 tail", make_y(3).unwrap(), true),
        ("X_5 tail", make_x(5).unwrap(), true),
        ("X_9 tail", make_x(9).unwrap(), true),
        ("rho(X_7, 0)", make_x(7).unwrap(), false),
        ("rho(Y_4, 0)", make_y(4).unwrap(), false),
    ];
    let oracles: Vec<f64> = vars
        .iter()
        .map(|(_, r, is_tail)| {
            let (tail, rho) = brute_force(r, &half);
            if *is_tail { tail } else { rho }.to_f64().unwrap()
        })
        .collect();
    let runs = 100;
    let mut hits = vec![0usize; vars.len()];
    for seed in 0..runs {
        let cfg = McConfig::membership(1000 + seed, 20_000);
        for (j, (_, r, is_tail)) in vars.iter().enumerate() {
            let e = if *is_tail {
                tail_probability_mc(r, &half, &cfg).unwrap()
            } else {
                rho_mc(r, &zero, &cfg).unwrap()
            };
            hits[j] += e.within(oracles[j], 4.0) as usize;
        }
    }
    let summary: Vec<String> = vars
        .iter()
        .zip(&hits)
        .map(|((name, _, _), h)| format!("{name} {h}/{runs}"))
        .collect();
    check(
        hits.iter().all(|&h| h * 100 >= 99 * runs as usize),
        format!("within 4·stderr of exact oracle: {}", summary.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("union probability identity", union_identity),
        ("recurrence identity", recurrence_identity),
        ("exact odd-index tail bound", exact_odd_tail),
        ("sampled odd-index tail bound", sampled_odd_tail),
        ("transform tail 1/n", transform_tail),
        ("rho non-convergence and decay", rho_values),
        ("certifier bound suite", certifier_bounds),
        ("axiom suites", axiom_suites),
        ("sampling vs exact oracles", mc_oracle_agreement),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let el = secs(t.elapsed());
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} [{el}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail} [{el}]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
