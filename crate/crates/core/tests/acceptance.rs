//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any criterion fails.
//!
//! Expected values are computed here from closed forms written out
//! independently of the library.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::time::{Duration, Instant};

use km_rates::certificates::{
    certify, example1_certificate, general_certificate, instance_constants, liminf_modulus,
    omega_factored, FormulaChoice, InstanceConstants, OmegaVariant,
};
use km_rates::engine::{audit_inequalities, iterate, iterate_perturbed, Inequality};
use km_rates::moduli::{
    check_cauchy_modulus_sequence, check_cauchy_modulus_series, check_divergence_rate,
    check_uc_transfer, combine_cauchy_moduli, inverse_square_modulus, Nat, RateFn, RateKind,
    UcModulus,
};
use km_rates::operators::{catalog_make, NormKind, Operator, OperatorSpec, Space};
use km_rates::schedules::{make_anchor, make_classical_km, make_example1, make_example2, Schedule};
use km_rates::verify::{
    check_liminf_contract, check_rate_soundness, empirical_first_index, Quantity,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("runtime {:.2}s exceeds {limit_s}s", elapsed.as_secs_f64())
    })
}

fn e<E: std::fmt::Debug>(err: E) -> String {
    format!("{err:?}")
}

fn rotation_instance() -> (Space, Operator, Schedule) {
    let space = Space::euclidean(2).unwrap();
    let op = catalog_make(
        &OperatorSpec::Rotation {
            theta: FRAC_PI_2,
            axes: (0, 1),
        },
        &space,
    )
    .unwrap();
    (space, op, make_classical_km(0.5).unwrap())
}

fn ball3() -> (Space, Operator) {
    let space = Space::euclidean(3).unwrap();
    let op = catalog_make(
        &OperatorSpec::BallProjection {
            center: vec![0.0; 3],
            radius: 1.0,
        },
        &space,
    )
    .unwrap();
    (space, op)
}

/// Hilbert closed form of Ω̃: 4·M0·(M0 + M_ab·b + M_r + 1)(k+1)².
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let eta = UcModulus::hilbert();
    let mut cells = 0;
    for b in 1..=3u128 {
        for m_ab in 0..=3u128 {
            for m_r in 0..=3u128 {
                let c = InstanceConstants::new(b, m_ab, m_r).map_err(e)?;
                let om = omega_factored(&c, &eta).map_err(e)?;
                let m0 = b + m_ab * b + m_r;
                for k in 0..=1000u128 {
                    let want = 4 * m0 * (m0 + m_ab * b + m_r + 1) * (k + 1) * (k + 1);
                    let got = om.eval(k).map_err(e)?;
                    ensure(got == want, || {
                        format!("b={b} M_ab={m_ab} M_r={m_r} k={k}: {got} != {want}")
                    })?;
                    cells += 1;
                }
            }
        }
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("{cells} (b, M_ab, M_r, k) cells equal"))
}

/// Example 1, λ = 1/2 (Λ = 4): Φ*(k) = Λ(Ω*(2k+1) + 8c(k+1) + 1) with
/// Ω*(k) = 4(b + 2c)(b + 4c + 1)(k+1)².
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let space = Space::euclidean(2).unwrap();
    let eta = UcModulus::hilbert();
    let big = 4u128;
    for b in 1..=3u128 {
        for c in 0..=2u128 {
            let s = make_example1(0.5, 1, vec![c as f64, 0.0], &space).map_err(e)?;
            let consts = InstanceConstants::new(b, s.m_ab(), s.m_r()).map_err(e)?;
            let general =
                general_certificate(&consts, &s, &eta, OmegaVariant::Factored).map_err(e)?;
            let family = example1_certificate(b, 0.5, c as f64, &eta, true).map_err(e)?;
            let omega_star = |k: u128| 4 * (b + 2 * c) * (b + 4 * c + 1) * (k + 1) * (k + 1);
            for k in 0..=100u128 {
                let want = big * (omega_star(2 * k + 1) + 8 * c * (k + 1) + 1);
                let want_psi = big * (omega_star(4 * k + 3) + 16 * c * (k + 1) + 1);
                let got = general.phi.eval(k).map_err(e)?;
                ensure(got == want, || {
                    format!("b={b} c={c} k={k}: Phi {got} != {want}")
                })?;
                ensure(family.phi.eval(k).map_err(e)? == want, || {
                    format!("b={b} c={c} k={k}: closed-form Phi differs")
                })?;
                ensure(general.psi.eval(k).map_err(e)? == want_psi, || {
                    format!("b={b} c={c} k={k}: Psi differs")
                })?;
                if b == 1 && c == 0 {
                    ensure(got == 128 * (k + 1) * (k + 1) + 4, || {
                        format!("k={k}: not 128(k+1)^2+4")
                    })?;
                }
            }
            if b == 1 && c == 0 {
                ensure(general.phi.eval(0).map_err(e)? == 132, || {
                    "Phi*(0) != 132".into()
                })?;
                ensure(general.psi.eval(0).map_err(e)? == 516, || {
                    "Psi*(0) != 516".into()
                })?;
            }
        }
    }
    within(start.elapsed(), 1.0)?;
    Ok("Phi*(0)=132, Psi*(0)=516; 9 (b, c) pairs x 101 k equal".into())
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (space, op, s) = rotation_instance();
    let x0 = [1.0, 0.0];
    let t = iterate(&space, &op, &x0, &s, 35_000).map_err(e)?;
    let c = instance_constants(&space, &x0, &t.z, &s).map_err(e)?;
    let cert = certify(FormulaChoice::Auto, &c, &s, &space).map_err(e)?;
    for k in 0..=15u128 {
        ensure(
            cert.phi.eval(k).map_err(e)? == 128 * (k + 1) * (k + 1) + 4,
            || format!("Phi*({k}) not 128(k+1)^2+4"),
        )?;
    }
    let rt = check_rate_soundness(&t, &cert.phi, Quantity::ResT, 15).map_err(e)?;
    let rs = check_rate_soundness(&t, &cert.psi, Quantity::ResStep, 15).map_err(e)?;
    ensure(rt.pass(), || format!("res_T failures: {:?}", rt.failures()))?;
    ensure(rs.pass(), || {
        format!("res_step failures: {:?}", rs.failures())
    })?;
    ensure(rt.checked() == 16, || {
        format!("only {} res_T rows checked", rt.checked())
    })?;
    // closed form √2(√2/2)^n: first index at k = 0
    let closed: Vec<f64> = (0..=35_000)
        .map(|n| SQRT_2 * (SQRT_2 / 2.0).powi(n))
        .collect();
    let want0 = (0..)
        .find(|&n: &usize| closed[n..].iter().all(|&v| v <= 1.0 + 1e-9))
        .unwrap();
    ensure(want0 == 1, || format!("closed-form first index {want0}"))?;
    let efi = empirical_first_index(&t.res_t, 0);
    ensure(efi == Some(1), || {
        format!("empirical_first_index(0) = {efi:?}")
    })?;
    ensure(rt.rows[0].empirical_first_index == Some(1), || {
        "report efi(0) != 1".into()
    })?;
    for (n, (r, c)) in t.res_t.iter().zip(&closed).take(201).enumerate() {
        ensure((r - c).abs() <= 1e-9, || {
            format!("res_T[{n}] off closed form")
        })?;
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!(
        "res_T {} rows, res_step {} rows checked ({} truncated), efi(0)=1",
        rt.checked(),
        rs.checked(),
        rs.rows.len() - rs.checked()
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (space, op) = ball3();
    let s = make_example2(0.5, 2, 1, vec![0.0; 3], &space).map_err(e)?;
    let x0 = [2.0, 0.0, 0.0];
    let z = op.fixed_point_for(&space, &x0);
    let c = instance_constants(&space, &x0, &z, &s).map_err(e)?;
    ensure(c.b == 1, || format!("b = {}", c.b))?;
    let cert = certify(FormulaChoice::Auto, &c, &s, &space).map_err(e)?;
    ensure(cert.phi.eval(0).map_err(e)? == 1291, || {
        "Phi(0) != 1291".into()
    })?;
    let k_max = 5u128;
    let top = (0..=k_max)
        .map(|k| cert.phi.eval(k).unwrap())
        .max()
        .unwrap();
    let horizon = top.min(100_000) as u64 + 100;
    let t = iterate(&space, &op, &x0, &s, horizon).map_err(e)?;
    let rt = check_rate_soundness(&t, &cert.phi, Quantity::ResT, k_max).map_err(e)?;
    let rs = check_rate_soundness(&t, &cert.psi, Quantity::ResStep, k_max).map_err(e)?;
    ensure(rt.pass() && rs.pass(), || {
        format!("failures {:?} {:?}", rt.failures(), rs.failures())
    })?;
    ensure(rt.checked() == 6, || {
        format!("{} res_T rows checked", rt.checked())
    })?;
    if let Some((p, q)) = &cert.alternate {
        let a = check_rate_soundness(&t, p, Quantity::ResT, k_max).map_err(e)?;
        let b = check_rate_soundness(&t, q, Quantity::ResStep, k_max).map_err(e)?;
        ensure(a.pass() && b.pass(), || "alternate derivation fails".into())?;
    }
    let lim = check_liminf_contract(&t, &cert.liminf, 8, 8).map_err(e)?;
    ensure(lim.pass(), || {
        format!("liminf violations {:?}", lim.violations())
    })?;
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "horizon {horizon}, res_T {} rows, res_step {} rows checked",
        rt.checked(),
        rs.checked()
    ))
}

fn criterion_5() -> Outcome {
    let mut instances: Vec<(String, Space, Operator, Schedule, Vec<f64>, u64)> = Vec::new();
    let (space, op, s) = rotation_instance();
    instances.push(("rotation-KM".into(), space, op, s, vec![1.0, 0.0], 35_000));
    let (space, op) = ball3();
    let s = make_example2(0.5, 2, 1, vec![0.0; 3], &space).map_err(e)?;
    instances.push((
        "example2-ball".into(),
        space,
        op,
        s,
        vec![2.0, 0.0, 0.0],
        42_351,
    ));

    let space = Space::euclidean(2).unwrap();
    let op = catalog_make(
        &OperatorSpec::HalfspaceProjection {
            a: vec![1.0, 1.0],
            b: 1.0,
        },
        &space,
    )
    .map_err(e)?;
    let s = make_example1(0.5, 1, vec![0.5, -0.5], &space).map_err(e)?;
    instances.push((
        "example1-halfspace".into(),
        space.clone(),
        op,
        s,
        vec![3.0, -1.0],
        20_000,
    ));

    let op = catalog_make(
        &OperatorSpec::BoxProjection {
            lo: vec![-1.0, -1.0],
            hi: vec![1.0, 1.0],
        },
        &space,
    )
    .map_err(e)?;
    let base = make_example2(0.5, 2, 1, vec![0.0, 0.0], &space).map_err(e)?;
    let s = make_anchor(&base, vec![0.5, 0.0], &space).map_err(e)?;
    instances.push((
        "anchor-box".into(),
        space.clone(),
        op,
        s,
        vec![2.0, 2.0],
        20_000,
    ));

    let op = catalog_make(
        &OperatorSpec::AffineAvg {
            q: vec![vec![0.0, -0.5], vec![0.5, 0.0]],
            c: vec![1.0, 0.0],
        },
        &space,
    )
    .map_err(e)?;
    let s = make_example1(0.3, 2, vec![0.0, 1.0], &space).map_err(e)?;
    instances.push((
        "affine-example1".into(),
        space.clone(),
        op,
        s,
        vec![-2.0, 3.0],
        20_000,
    ));

    let op = catalog_make(&OperatorSpec::Identity, &space).map_err(e)?;
    let s = make_classical_km(0.5).map_err(e)?;
    instances.push(("identity-at-z".into(), space, op, s, vec![0.0, 0.0], 1_000));

    let lp = Space::new(3, NormKind::Lp(3.0)).map_err(e)?;
    let op = catalog_make(
        &OperatorSpec::CoordinateShrink {
            factors: vec![0.5, -1.0, 0.0],
        },
        &lp,
    )
    .map_err(e)?;
    let s = make_example2(0.5, 2, 1, vec![0.1, 0.0, 0.2], &lp).map_err(e)?;
    instances.push(("lp3-shrink".into(), lp, op, s, vec![1.0, 1.0, 1.0], 20_000));

    let mut checked = 0u64;
    for (name, space, op, s, x0, horizon) in &instances {
        let t = iterate(space, op, x0, s, *horizon).map_err(e)?;
        let c = instance_constants(space, x0, &t.z, s).map_err(e)?;
        let r = audit_inequalities(&t, &c);
        ensure(r.pass(), || {
            format!(
                "{name}: {} violations, first {:?}",
                r.total_violations(),
                r.violations.first()
            )
        })?;
        ensure(r.summaries.iter().all(|s| s.checked > 0), || {
            format!("{name}: an inequality was not checked")
        })?;
        checked += r.summaries.iter().map(|s| s.checked).sum::<u64>();
    }

    let (space, op, s) = rotation_instance();
    let t = iterate_perturbed(&space, &op, &[1.0, 0.0], &s, 1_000, 50, 1.0).map_err(e)?;
    let c = instance_constants(&space, &[1.0, 0.0], &t.z, &s).map_err(e)?;
    let r = audit_inequalities(&t, &c);
    let flagged = r.indices(Inequality::DistanceBound);
    ensure(flagged == vec![50], || {
        format!("negative control DistanceBound violations at {flagged:?}")
    })?;
    Ok(format!(
        "{} instances, {checked} inequality checks clean; corrupted x_50 flags DistanceBound at [50]",
        instances.len()
    ))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    // inverse-square moduli, tail Σ_{i>N} t/(i+L)² ≤ t/(N+L)
    for (t, l) in [(1.0f64, 1u64), (2.5, 2)] {
        let m = inverse_square_modulus(t, Nat::from(l)).map_err(e)?;
        let term = move |i: u64| t / ((i + l) as f64).powi(2);
        let tail = move |n: u64| t / (n + l) as f64;
        for (name, phi) in [("phi", &m.phi), ("phi*", &m.phi_star)] {
            let r = check_cauchy_modulus_series(term, phi, 100, 5_000, Some(&tail)).map_err(e)?;
            ensure(r.all_pass(), || format!("(t={t}, L={l}) {name} fails"))?;
        }
        let total: f64 = (0..2_000_000u64).map(term).sum::<f64>() + tail(1_999_999);
        ensure(total <= m.m_t as f64, || {
            format!("(t={t}, L={l}) sum {total} > M_t {}", m.m_t)
        })?;
    }
    let m = inverse_square_modulus(1.0, 1).map_err(e)?;
    ensure(
        m.m_t == 2 && m.phi.eval(3).map_err(e)? == 4 && m.phi_star.eval(3).map_err(e)? == 3,
        || "(1,1) values".into(),
    )?;

    // combinator on s·1/(n+1)² + t·2^-n, s = 2, t = 3, brute force
    let phi1 = inverse_square_modulus(1.0, 1).map_err(e)?.phi;
    let phi2 = RateFn::new(RateKind::CauchyModulus, "ceil(log2(k+1))", |k| {
        let mut p = 0u32;
        while (1u128 << p) < k + 1 {
            p += 1;
        }
        Ok(Nat::from(p))
    });
    let combined = combine_cauchy_moduli(&phi1, &phi2, 2, 3).map_err(e)?;
    for (name, a, phi) in [
        (
            "1/(n+1)^2",
            Box::new(|i: u64| 1.0 / ((i + 1) as f64).powi(2)) as Box<dyn Fn(u64) -> f64>,
            &phi1,
        ),
        ("2^-n", Box::new(|i: u64| 0.5f64.powi(i as i32)), &phi2),
    ] {
        let partial = prefix_sums(&a, 400_000);
        let r = check_cauchy_modulus_sequence(|n| partial[n as usize], phi, 50, 20, 10_000)
            .map_err(e)?;
        ensure(r.all_pass(), || format!("{name}: modulus fails"))?;
    }
    let c_terms = |i: u64| 2.0 / ((i + 1) as f64).powi(2) + 3.0 * 0.5f64.powi(i as i32);
    let partial = prefix_sums(&c_terms, 400_000);
    let r = check_cauchy_modulus_sequence(|n| partial[n as usize], &combined, 50, 20, 10_000)
        .map_err(e)?;
    ensure(r.all_pass(), || "combined modulus fails".into())?;

    // Λ(n+2)-1 for Example 2
    let space = Space::euclidean(2).unwrap();
    for (lambda, j) in [(0.5, 2u64), (0.3, 3), (0.7, 4)] {
        let s = make_example2(lambda, j, 1, vec![0.0, 0.0], &space).map_err(e)?;
        let big = (1.0 / (lambda * (1.0 - lambda))).ceil() as u128;
        for n in [0u128, 1, 7, 2000] {
            ensure(s.sigma2().eval(n).map_err(e)? == big * (n + 2) - 1, || {
                format!("sigma2({n}) for lambda={lambda}")
            })?;
        }
        let r = check_divergence_rate(|i| s.divergence_summand(i), s.sigma2(), 2000).map_err(e)?;
        ensure(r.all_pass(), || {
            format!("lambda={lambda}, J={j}: {:?}", r.first_failure())
        })?;
    }

    // θ(n) ≥ n for every constructed divergence rate
    let mut schedules = vec![
        make_classical_km(0.5).map_err(e)?,
        make_classical_km(0.1).map_err(e)?,
        make_example1(0.5, 1, vec![1.0, 0.0], &space).map_err(e)?,
        make_example1(0.25, 3, vec![0.0, 2.0], &space).map_err(e)?,
        make_example2(0.5, 2, 1, vec![0.0, 0.0], &space).map_err(e)?,
        make_example2(0.9, 4, 2, vec![1.0, 1.0], &space).map_err(e)?,
    ];
    let base = make_example2(0.5, 2, 1, vec![0.0, 0.0], &space).map_err(e)?;
    schedules.push(make_anchor(&base, vec![2.5, 0.0], &space).map_err(e)?);
    for s in &schedules {
        let r = check_divergence_rate(|i| s.divergence_summand(i), s.sigma2(), 1000).map_err(e)?;
        ensure(r.all_pass(), || {
            format!("{:?}: {:?}", s.family(), r.first_failure())
        })?;
        ensure(
            r.rows.iter().all(|row| row.theta_n >= Nat::from(row.n)),
            || format!("{:?}: theta(n) < n", s.family()),
        )?;
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!(
        "inverse-square, combinator, sigma2 claim and {} divergence rates hold",
        schedules.len()
    ))
}

fn prefix_sums(a: &dyn Fn(u64) -> f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 0..n as u64 {
        acc += a(i);
        out.push(acc);
    }
    out
}

fn criterion_7() -> Outcome {
    let euclid = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let unit = |rng: &mut ChaCha8Rng| loop {
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let n = euclid(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect::<Vec<f64>>();
        }
    };
    let mut samples = Vec::with_capacity(10_000);
    while samples.len() < 10_000 {
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..=5.0)).collect();
        let r: f64 = rng.random_range(0.1..=4.0);
        // half the points on the sphere, half strictly inside
        let on_sphere = samples.len() % 2 == 0;
        let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let d = unit(rng);
            let rho = if on_sphere {
                r
            } else {
                r * rng.random_range(0.0..=1.0f64).cbrt()
            };
            a.iter().zip(&d).map(|(ai, di)| ai + rho * di).collect()
        };
        let x = point(&mut rng);
        let y = point(&mut rng);
        let dxy = euclid(&x.iter().zip(&y).map(|(p, q)| p - q).collect::<Vec<_>>());
        let eps_max = (dxy / r).min(2.0);
        if eps_max < 1e-6 {
            continue;
        }
        let eps = eps_max * rng.random_range(0.5..=1.0);
        let lambda = rng.random_range(0.0..=1.0);
        samples.push((a, x, y, r, eps, lambda));
    }
    let run = |eta: &UcModulus| -> Result<usize, String> {
        let mut failures = 0;
        for (a, x, y, r, eps, lambda) in &samples {
            match check_uc_transfer(eta, euclid, a, x, y, *r, *eps, *lambda) {
                Ok(true) => {}
                Ok(false) => failures += 1,
                Err(err) => return Err(format!("inadmissible sample: {err}")),
            }
        }
        Ok(failures)
    };
    let sound = run(&UcModulus::hilbert())?;
    ensure(sound == 0, || format!("eps^2/8 fails on {sound} samples"))?;
    let inflated = UcModulus::custom("eps^2/2", |x: f64| x * x / 2.0);
    let bad = run(&inflated)?;
    ensure(bad >= 1, || "eps^2/2 never fails: test has no power".into())?;
    Ok(format!(
        "10000 samples: eps^2/8 all pass, eps^2/2 fails on {bad}"
    ))
}

fn criterion_8() -> Outcome {
    let (space, op, s) = rotation_instance();
    let x0 = [1.0, 0.0];
    let t = iterate(&space, &op, &x0, &s, 100_000).map_err(e)?;
    let c = instance_constants(&space, &x0, &t.z, &s).map_err(e)?;
    let om = omega_factored(&c, &UcModulus::hilbert()).map_err(e)?;
    let lim = liminf_modulus(&s, &om);
    let r = check_liminf_contract(&t, &lim, 8, 8).map_err(e)?;
    ensure(r.pass(), || format!("violations {:?}", r.violations()))?;
    ensure(r.truncated() == 0, || {
        format!("{} truncated cells", r.truncated())
    })?;
    ensure(r.cells.len() == 81, || "grid size".into())?;
    // negative control Δ'(k, L) = L
    let naive = km_rates::moduli::LiminfModulus::new("L", |_, l| Ok(l));
    let bad = check_liminf_contract(&t, &naive, 2, 0).map_err(e)?;
    ensure(!bad.pass(), || "Delta' = L not rejected".into())?;
    Ok("81 cells with witnesses within horizon 100000; Delta'=L rejected".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 Hilbert closed form of Omega~", criterion_1),
        ("2 Example 1 pipeline consistency", criterion_2),
        ("3 rotation-KM rate soundness", criterion_3),
        ("4 Example 2 rate soundness", criterion_4),
        ("5 inequality audit", criterion_5),
        ("6 moduli contracts", criterion_6),
        ("7 uniform convexity transfer", criterion_7),
        ("8 liminf contract", criterion_8),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2}s): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
