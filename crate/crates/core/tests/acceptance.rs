//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use privregion::closed_form::{gaussian_gamma, gaussian_region, hamming_waterfill, GaussianModel};
use privregion::dp::{accuracy_curve, dp_ratio_check, Mechanism, QuerySpec};
use privregion::oracle::{oracle_gamma, oracle_rd, oracle_region, OracleConfig, RegionQuery};
use privregion::pipeline::{measure, SanitizationRun, Schema, Table};
use privregion::prob::*;
use privregion::rd::{rd_at_distortion, BaConfig};
use privregion::region::{self, PrivacyProblem, RegionPoint, SolverConfig};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: privregion::Error) -> String {
    e.to_string()
}

/// (h, r, z): p(h, r) fixed, z a BSC(`flip`) copy of h.
fn side_info_problem(flip: f64) -> PrivacyProblem {
    let ax = |n: &str, r| Axis::new(n, r, Alphabet::indexed(2).unwrap());
    let phr = [[0.4, 0.1], [0.15, 0.35]];
    let mut probs = Vec::new();
    for h in 0..2 {
        for r in 0..2 {
            for z in 0..2 {
                probs.push(phr[h][r] * if z == h { 1.0 - flip } else { flip });
            }
        }
    }
    let j = JointPmf::new(
        vec![
            ax("h", Role::Private),
            ax("r", Role::Public),
            ax("z", Role::SideInfo),
        ],
        probs,
    )
    .unwrap();
    PrivacyProblem::new(j, DistortionSpec::hamming(2), Some(3)).unwrap()
}

fn census_identity() -> Check {
    let t0 = Instant::now();
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for p in [vec![0.5, 0.25, 0.25], vec![0.5, 0.5]] {
        let src = Pmf::from_probs(p.clone()).unwrap();
        let n = p.len();
        let d = DistortionSpec::hamming(n);
        let dmax = privregion::rd::d_max(&src, &d);
        let grid: Vec<f64> = (0..20).map(|i| dmax * i as f64 / 19.0).collect();
        let prob = PrivacyProblem::census(&src, d.clone(), Some(n)).map_err(err)?;
        let curve = region::region_curve(&prob, &grid, &[], &cfg).map_err(err)?;
        for (s, &t) in curve.boundary.iter().zip(&grid) {
            let g = s
                .point
                .as_ref()
                .ok_or_else(|| format!("D={t}: {:?}", s.error))?
                .equivocation;
            let r = rd_at_distortion(&src, &d, t, &BaConfig::default())
                .map_err(err)?
                .rate;
            let gap = (g - (entropy(&src) - r)).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-3, || {
                format!("p={p:?} D={t}: Gamma {g} vs H-R {}", entropy(&src) - r)
            })?;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "40 points, max |Gamma - (H - R)| = {worst:.2e} bits, {secs:.2} s"
    ))
}

fn waterfill_example() -> Check {
    let src = Pmf::from_probs(vec![0.5, 0.25, 0.25]).unwrap();
    let w = hamming_waterfill(&src, 0.2).map_err(err)?;
    ensure((w.lambda - 0.1).abs() < 1e-12, || {
        format!("lambda {}", w.lambda)
    })?;
    for (a, b) in w
        .p_xhat
        .probs()
        .iter()
        .zip([4.0 / 7.0, 3.0 / 14.0, 3.0 / 14.0])
    {
        ensure((a - b).abs() < 1e-12, || {
            format!("p_xhat {:?}", w.p_xhat.probs())
        })?;
    }
    ensure(w.consistency_residual < 1e-9, || {
        format!("residual {}", w.consistency_residual)
    })?;
    // H(X | X_hat) straight from the test channel rows
    let direct: f64 = (0..3)
        .map(|xh| w.p_xhat.probs()[xh] * entropy_bits(w.test_channel.row(xh)))
        .sum();
    ensure((w.gamma_exact - direct).abs() < 1e-12, || {
        format!("gamma {} vs {direct}", w.gamma_exact)
    })?;
    ensure((w.gamma_exact - 0.922).abs() < 5e-4, || {
        format!("gamma {}", w.gamma_exact)
    })?;
    let ba = rd_at_distortion(&src, &DistortionSpec::hamming(3), 0.2, &BaConfig::default())
        .map_err(err)?;
    ensure((ba.rate - w.rate).abs() < 1e-4, || {
        format!("BA {} vs implied {}", ba.rate, w.rate)
    })?;

    // exhaustive search at q = 0.05 needs about 1.2e7 channels
    let cfg = OracleConfig::new(0.05, 50_000_000).unwrap();
    let o_rd = oracle_rd(&src, &DistortionSpec::hamming(3), 0.2, &cfg).map_err(err)?;
    ensure(
        o_rd.lower_bound <= w.rate + 1e-9 && w.rate <= o_rd.upper_bound + 1e-9,
        || {
            format!(
                "rate {} outside [{}, {}]",
                w.rate, o_rd.lower_bound, o_rd.upper_bound
            )
        },
    )?;
    let o_g = oracle_gamma(
        &src.to_joint("x", Role::Both),
        &DistortionSpec::hamming(3),
        0.2,
        3,
        &cfg,
    )
    .map_err(err)?;
    ensure(
        o_g.lower_bound <= w.gamma_exact + 1e-9 && w.gamma_exact <= o_g.upper_bound + 1e-9,
        || {
            format!(
                "gamma {} outside [{}, {}]",
                w.gamma_exact, o_g.lower_bound, o_g.upper_bound
            )
        },
    )?;
    Ok(format!(
        "lambda = {}, gamma = {:.6}, |R_BA - R| = {:.1e}, oracle rate [{:.4}, {:.4}], gamma [{:.4}, {:.4}]",
        w.lambda,
        w.gamma_exact,
        (ba.rate - w.rate).abs(),
        o_rd.lower_bound,
        o_rd.upper_bound,
        o_g.lower_bound,
        o_g.upper_bound
    ))
}

fn gaussian_example() -> Check {
    let mut worst = 0.0f64;
    for &(sx2, sy2, rho) in &[
        (1.0, 1.0, 0.5),
        (2.0, 3.0, 0.6),
        (0.5, 4.0, -0.9),
        (3.0, 2.0, 0.0),
    ] {
        let m = GaussianModel::new(sx2, sy2, rho).map_err(err)?;
        let lo = gaussian_gamma(&m, 0.0).map_err(err)?.variance_form.0;
        let hi = gaussian_gamma(&m, sx2).map_err(err)?.variance_form.0;
        let want_lo = sy2 * (1.0 - rho * rho);
        let ulp = |a: f64, b: f64| (a - b).abs() / (f64::EPSILON * b.abs().max(1.0));
        ensure(ulp(lo, want_lo) <= 4.0, || {
            format!("D=0: {lo} vs {want_lo}")
        })?;
        ensure(ulp(hi, sy2) <= 4.0, || format!("D=sx2: {hi} vs {sy2}"))?;
        let grid: Vec<f64> = (0..=16).map(|i| sx2 * i as f64 / 16.0).collect();
        let pts = gaussian_region(&m, &grid).map_err(err)?;
        let slope = sy2 * rho * rho / sx2;
        for p in &pts {
            let dev = (p.variance_form.0 - (want_lo + slope * p.distortion)).abs();
            worst = worst.max(dev);
            ensure(dev <= 8.0 * f64::EPSILON * sy2.max(1.0), || {
                format!("D={}: off line by {dev:e}", p.distortion)
            })?;
        }
    }
    Ok(format!(
        "endpoints within 4 ulp, max deviation from line {worst:.1e}"
    ))
}

fn within_window(prob: &PrivacyProblem, p: &RegionPoint) -> Result<(), String> {
    let (lo, hi) = (prob.min_equivocation(), prob.max_equivocation());
    ensure(
        p.equivocation >= lo - 1e-9 && p.equivocation <= hi + 1e-9,
        || format!("equivocation {} outside [{lo}, {hi}]", p.equivocation),
    )
}

fn theorem_structure() -> Check {
    let prob = side_info_problem(0.2);
    let cfg = SolverConfig::default();
    let queries = [
        RegionQuery::Gamma { d: 0.05 },
        RegionQuery::Gamma { d: 0.15 },
        RegionQuery::Gamma { d: 0.3 },
        RegionQuery::Rate { d: 0.1, e: 0.5 },
        RegionQuery::Rate { d: 0.2, e: 0.6 },
    ];
    // (1/q + 2 choose 2)^4 / symmetry: about 5.4e8 channels
    let ocfg = OracleConfig::new(0.05, 1_000_000_000).unwrap();
    let reps = oracle_region(&prob, &queries, false, &ocfg).map_err(err)?;
    let mut lines = Vec::new();
    for (q, r) in queries.iter().zip(reps) {
        let r = r.map_err(err)?;
        match *q {
            RegionQuery::Gamma { d } => {
                let p = region::gamma_of_d(&prob, d, &cfg).map_err(err)?;
                within_window(&prob, &p)?;
                let g = p.equivocation;
                ensure(g >= r.value - 1e-9 && g <= r.upper_bound + 1e-9, || {
                    format!(
                        "Gamma({d}) = {g} vs oracle {} [.., {}]",
                        r.value, r.upper_bound
                    )
                })?;
                lines.push(format!("G({d})={g:.4}>={:.4}", r.value));
            }
            RegionQuery::Rate { d, e } => {
                let p = region::r_of_de(&prob, d, e, &cfg).map_err(err)?;
                within_window(&prob, &p)?;
                let v = p.rate;
                ensure(v <= r.value + 1e-9 && v >= r.lower_bound - 1e-9, || {
                    format!(
                        "R({d},{e}) = {v} vs oracle {} [{}, ..]",
                        r.value, r.lower_bound
                    )
                })?;
                lines.push(format!("R({d},{e})={v:.4}<={:.4}", r.value));
            }
        }
    }

    let indep = side_info_problem(0.5);
    let plain = indep.without_side_info().map_err(err)?;
    let mut worst = 0.0f64;
    for d in [0.05, 0.1, 0.2, 0.3] {
        let a = region::gamma_of_d(&indep, d, &cfg).map_err(err)?;
        let b = region::gamma_of_d(&plain, d, &cfg).map_err(err)?;
        within_window(&indep, &a)?;
        worst = worst.max((a.equivocation - b.equivocation).abs());
        for e in [0.5, 0.7, 0.9] {
            let (a, b) = match (
                region::r_of_de(&indep, d, e, &cfg),
                region::r_of_de(&plain, d, e, &cfg),
            ) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(_), Err(_)) => continue,
                (a, b) => {
                    return Err(format!(
                        "feasibility differs at D={d}, E={e}: {:?} / {:?}",
                        a.err(),
                        b.err()
                    ))
                }
            };
            within_window(&indep, &a)?;
            worst = worst.max((a.rate - b.rate).abs());
        }
    }
    ensure(worst <= 1e-3, || {
        format!("Z-independent reduction off by {worst}")
    })?;
    Ok(format!(
        "{}; Z-independent gap {worst:.1e}",
        lines.join(" ")
    ))
}

fn monotonicity() -> Check {
    // R(D) from BA
    let src = Pmf::from_probs(vec![0.5, 0.3, 0.2]).unwrap();
    let d = DistortionSpec::hamming(3);
    let dmax = privregion::rd::d_max(&src, &d);
    let r: Vec<f64> = (0..=10)
        .map(|i| {
            rd_at_distortion(&src, &d, dmax * i as f64 / 10.0, &BaConfig::default()).map(|p| p.rate)
        })
        .collect::<Result<_, _>>()
        .map_err(err)?;
    ensure(r.windows(2).all(|w| w[1] <= w[0] + 1e-6), || {
        format!("R(D) increases: {r:?}")
    })?;
    ensure(
        r.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] >= -1e-6),
        || format!("R(D) not convex: {r:?}"),
    )?;

    let prob = side_info_problem(0.2);
    let (lo, hi) = (prob.min_equivocation(), prob.max_equivocation());
    let d_grid: Vec<f64> = (0..10).map(|i| 0.03 * (i + 1) as f64).collect();
    let e_grid: Vec<f64> = (0..10).map(|i| lo + (hi - lo) * i as f64 / 9.0).collect();
    let curve =
        region::region_curve(&prob, &d_grid, &e_grid, &SolverConfig::default()).map_err(err)?;
    let gam: Vec<f64> = curve
        .boundary
        .iter()
        .map(|s| {
            s.point
                .as_ref()
                .map(|p| p.equivocation)
                .ok_or_else(|| format!("{:?}", s.error))
        })
        .collect::<Result<_, _>>()?;
    ensure(gam.windows(2).all(|w| w[1] >= w[0] - 1e-6), || {
        format!("Gamma decreases: {gam:?}")
    })?;
    let ne = e_grid.len();
    let rate = |i: usize, j: usize| curve.surface[i * ne + j].point.as_ref().map(|p| p.rate);
    let mut feasible = 0;
    for i in 0..d_grid.len() {
        for j in 0..ne {
            let Some(v) = rate(i, j) else { continue };
            feasible += 1;
            if let Some(w) = (j + 1 < ne).then(|| rate(i, j + 1)).flatten() {
                ensure(w >= v - 1e-6, || {
                    format!(
                        "R not non-decreasing in E at D={}, E={}",
                        d_grid[i], e_grid[j]
                    )
                })?;
            }
            if let Some(w) = (i + 1 < d_grid.len()).then(|| rate(i + 1, j)).flatten() {
                ensure(w <= v + 1e-6, || {
                    format!(
                        "R not non-increasing in D at D={}, E={}",
                        d_grid[i], e_grid[j]
                    )
                })?;
            }
        }
    }
    Ok(format!(
        "R(D) on 11 points, Gamma on 10, R(D,E) on 10x10 ({feasible} feasible)"
    ))
}

fn dp_baseline() -> Check {
    for &(eps, df) in &[(0.1, 1.0), (1.0, 1.0), (0.5, 2.0), (2.0, 5.0)] {
        let m = Mechanism::new(eps, df).map_err(err)?;
        let r = dp_ratio_check(m.scale(), eps, df).map_err(err)?;
        ensure(
            r.analytic_holds && (r.analytic_ratio - eps.exp()).abs() <= 1e-12 * eps.exp(),
            || format!("eps={eps}: analytic ratio {}", r.analytic_ratio),
        )?;
        ensure(r.empirical_holds, || {
            format!("eps={eps}: histogram ratio {}", r.empirical_ratio)
        })?;
    }
    let m = Mechanism::new(0.1, 1.0).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 1_000_000;
    let xs: Vec<f64> = (0..n).map(|_| m.sample(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    ensure((var - 200.0).abs() <= 0.02 * 200.0, || {
        format!("variance {var}")
    })?;
    let grid = [0.1, 0.25, 1.0, 4.0, 10.0];
    for (q, df) in [
        (QuerySpec::Count, 1.0),
        (QuerySpec::clipped_sum(-2.0, 5.0).map_err(err)?, 5.0),
    ] {
        let c = accuracy_curve(&grid, &q).map_err(err)?;
        for (p, &eps) in c.iter().zip(&grid) {
            ensure(p.expected_abs_error == df / eps, || {
                format!("eps={eps}: {}", p.expected_abs_error)
            })?;
        }
    }
    Ok(format!(
        "ratio bound e^eps holds, variance {var:.2} (target 200), accuracy = df/eps exactly"
    ))
}

fn pipeline_concentration() -> Check {
    let p = [0.5, 0.25, 0.25];
    let n = 100_000;
    let schema = Schema::new(vec![Axis::new(
        "x",
        Role::Both,
        Alphabet::new(["a", "b", "c"]).unwrap(),
    )])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rows = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            vec![if u < 0.5 {
                0
            } else if u < 0.75 {
                1
            } else {
                2
            }]
        })
        .collect();
    let t = Table::new(schema, rows).map_err(err)?;
    let w = hamming_waterfill(&Pmf::from_probs(p.to_vec()).unwrap(), 0.2).map_err(err)?;
    let run = SanitizationRun::new(&t, w.forward_channel.clone(), 99).map_err(err)?;
    let m = measure(&run, &DistortionSpec::hamming(3)).map_err(err)?;
    ensure((m.empirical_distortion - 0.2).abs() <= 0.005, || {
        format!("distortion {}", m.empirical_distortion)
    })?;
    ensure(
        (m.plug_in_equivocation - w.gamma_exact).abs() <= 0.02,
        || {
            format!(
                "equivocation {} vs {}",
                m.plug_in_equivocation, w.gamma_exact
            )
        },
    )?;
    let again = SanitizationRun::new(&t, w.forward_channel, 99).map_err(err)?;
    ensure(again.output == run.output, || {
        "rerun with the same seed differs".into()
    })?;
    Ok(format!(
        "n = {n}: distortion {:.4}, plug-in equivocation {:.4} (exact {:.4}), rerun identical",
        m.empirical_distortion, m.plug_in_equivocation, w.gamma_exact
    ))
}

fn random_joint(rng: &mut ChaCha8Rng) -> JointPmf {
    let dims: Vec<usize> = (0..3).map(|_| rng.random_range(1..=4)).collect();
    let len: usize = dims.iter().product();
    let mut w: Vec<f64> = (0..len)
        .map(|_| {
            if rng.random::<f64>() < 0.2 {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    let axes = dims
        .iter()
        .enumerate()
        .map(|(i, &n)| Axis::new(format!("a{i}"), Role::Public, Alphabet::indexed(n).unwrap()))
        .collect();
    JointPmf::new(axes, w.into_iter().map(|v| v / s).collect()).unwrap()
}

fn random_channel(rng: &mut ChaCha8Rng, n_in: usize, n_out: usize) -> Channel {
    let rows: Vec<Vec<f64>> = (0..n_in)
        .map(|_| {
            let w: Vec<f64> = (0..n_out).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        })
        .collect();
    Channel::from_rows(&rows).unwrap()
}

fn information_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tol = 1e-9;
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let j = random_joint(&mut rng);
        let h = |a: &[usize]| joint_entropy(&j, a).unwrap();
        let ch = |a: &[usize], b: &[usize]| conditional_entropy(&j, a, b).unwrap();
        // chain rule
        let gap = (h(&[0, 1, 2]) - h(&[0]) - ch(&[1], &[0]) - ch(&[2], &[0, 1])).abs();
        worst = worst.max(gap);
        ensure(gap <= tol, || format!("joint {k}: chain rule off by {gap}"))?;
        // non-negativity
        for v in [
            h(&[0]),
            h(&[1, 2]),
            ch(&[0], &[1, 2]),
            mutual_information(&j, &[0], &[2]).unwrap(),
        ] {
            ensure(v >= 0.0, || format!("joint {k}: negative measure {v}"))?;
        }
        // conditioning reduces entropy
        ensure(
            ch(&[0], &[1]) <= h(&[0]) + tol && ch(&[0], &[1, 2]) <= ch(&[0], &[1]) + tol,
            || format!("joint {k}: conditioning increased entropy"),
        )?;
        // data processing along a0 -> a3 -> a4
        let n0 = j.axis(0).size();
        let k1 = rng.random_range(1..=4);
        let c1 = random_channel(&mut rng, n0, k1);
        let y = push_forward(&j, &[0], &c1).unwrap();
        let k2 = rng.random_range(1..=4);
        let c2 = random_channel(&mut rng, c1.n_out(), k2);
        let z = push_forward(&y, &[3], &c2).unwrap();
        let i1 = mutual_information(&z, &[0], &[3]).unwrap();
        let i2 = mutual_information(&z, &[0], &[4]).unwrap();
        ensure(i2 <= i1 + tol, || {
            format!("joint {k}: data processing {i2} > {i1}")
        })?;
        let back = z.marginal(&[0, 1, 2]).unwrap();
        let m = back
            .iter()
            .zip(j.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ensure(m <= 1e-12, || {
            format!("joint {k}: push-forward moved the input law by {m}")
        })?;
    }
    Ok(format!("1000 joints, max chain-rule residual {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("census identity", census_identity),
        ("waterfill example", waterfill_example),
        ("gaussian example", gaussian_example),
        ("side-information structure", theorem_structure),
        ("monotonicity", monotonicity),
        ("laplace baseline", dp_baseline),
        ("sanitization concentration", pipeline_concentration),
        ("information identities", information_identities),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let r = f();
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {}: PASS  {name} ({secs:.1} s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1} s): {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
