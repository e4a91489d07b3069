//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use grpadmm::linops::{BlurMethod, PeriodicBlur};
use grpadmm::problems::{uot_from_histograms, ProblemKind, ProblemSpec};
use grpadmm::vecops::{dist, dot, norm};
use grpadmm::{
    psnr, run, step, Algorithm, Branch, LinearMap, ProxTerm, QuadData, RunOptions, SolverState, SplitProblem,
    StepRule,
};
use grpadmm_harness::compare::{compare, ComparisonReport};
use grpadmm_harness::config::preset_suite;
use grpadmm_harness::presets::{estimate_norm, preset};
use grpadmm_harness::reference::{reference_solve, ReferenceSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lasso_1d(a: f64, d: f64, lam: f64) -> SplitProblem {
    SplitProblem::new(
        ProxTerm::l1(1, lam),
        ProxTerm::sql2_shift(1.0, vec![0.0]),
        LinearMap::dense(1, 1, vec![a]).unwrap(),
        LinearMap::identity(1),
        vec![d],
    )
    .unwrap()
}

fn all_operators(rng: &mut ChaCha8Rng) -> Vec<LinearMap> {
    let blur = PeriodicBlur::gaussian(12, 10, 5, 1.3).unwrap();
    vec![
        LinearMap::dense(7, 5, rand_vec(rng, 35)).unwrap(),
        LinearMap::identity(6),
        LinearMap::negated_identity(6),
        LinearMap::scaled_identity(6, -2.5),
        LinearMap::grad2d(9, 7),
        LinearMap::div2d(9, 7),
        LinearMap::BlurPeriodic(blur.with_method(BlurMethod::Direct)),
        LinearMap::BlurPeriodic(blur.with_method(BlurMethod::Fourier)),
        LinearMap::ot_marginal(5, 4),
    ]
}

fn operator_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for op in all_operators(&mut rng) {
        for _ in 0..100 {
            let v = rand_vec(&mut rng, op.domain_dim());
            let u = rand_vec(&mut rng, op.codomain_dim());
            let lhs = dot(&op.apply(&v).unwrap(), &u);
            let rhs = dot(&v, &op.adjoint(&u).unwrap());
            let err = (lhs - rhs).abs() / (1.0 + lhs.abs());
            worst = worst.max(err);
            ensure(err <= 1e-10, format!("{} adjoint error {err:e}", op.kind_name()))?;
        }
    }
    let mut norms = Vec::new();
    for n in [16, 64] {
        let est = estimate_norm(&LinearMap::grad2d(n, n)).unwrap();
        ensure((est - 8f64.sqrt()).abs() <= 1e-3, format!("||grad|| on {n}x{n} = {est}"))?;
        norms.push(est);
    }
    Ok(format!("max adjoint error {worst:.1e}; ||grad|| = {:.6}, {:.6}", norms[0], norms[1]))
}

fn all_terms(rng: &mut ChaCha8Rng) -> Vec<ProxTerm> {
    let blur = LinearMap::BlurPeriodic(PeriodicBlur::gaussian(8, 8, 5, 1.0).unwrap());
    let data = rand_vec(rng, 64);
    vec![
        ProxTerm::l1(8, 0.7),
        ProxTerm::sql2_shift(1.3, rand_vec(rng, 8)),
        ProxTerm::group_l21(5, 0.9),
        ProxTerm::linear_plus_nonneg(rand_vec(rng, 8)),
        ProxTerm::QuadData(QuadData::new(blur, data, 2.0).unwrap()),
        ProxTerm::QuadData(QuadData::new(LinearMap::dense(4, 6, rand_vec(rng, 24)).unwrap(), rand_vec(rng, 4), 0.5).unwrap()),
    ]
}

fn prox_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_residual: f64 = 0.0;
    for term in all_terms(&mut rng) {
        let n = term.dim();
        for t in [0.05, 0.5, 3.0] {
            let v: Vec<f64> = rand_vec(&mut rng, n).iter().map(|x| 2.0 * x).collect();
            let p = term.prox(&v, t).unwrap();
            let model = |z: &[f64]| term.eval(z) + dist(z, &v).powi(2) / (2.0 * t);
            let best = model(&p);
            for _ in 0..50 {
                let scale = 10f64.powi(rng.gen_range(-4..1));
                let z: Vec<f64> = p.iter().map(|pi| pi + scale * rng.gen_range(-1.0..1.0)).collect();
                ensure(best <= model(&z) + 1e-9, format!("{} prox not optimal at t={t}", term.kind_name()))?;
            }
            for _ in 0..100 {
                let a = rand_vec(&mut rng, n);
                let b = rand_vec(&mut rng, n);
                let gap = dist(&term.prox(&a, t).unwrap(), &term.prox(&b, t).unwrap());
                ensure(gap <= dist(&a, &b) * (1.0 + 1e-12), format!("{} prox expands", term.kind_name()))?;
            }
            if let ProxTerm::QuadData(q) = &term {
                let rhs = q.normal_rhs(&v, t * q.weight).unwrap();
                let res = q.normal_residual(&p, &rhs, t * q.weight).unwrap() / norm(&rhs);
                worst_residual = worst_residual.max(res);
                ensure(res <= 1e-9, format!("quad-data normal residual {res:e}"))?;
            }
        }
    }
    Ok(format!("6 terms optimal and nonexpansive; worst quad residual {worst_residual:.1e}"))
}

fn lasso() -> SplitProblem {
    ProblemSpec::paper(ProblemKind::Lasso, 0).build().unwrap()
}

fn step_invariants() -> Check {
    let p = lasso();
    let norm_a = estimate_norm(&p.a).unwrap();
    let mut failures = Vec::new();

    let cfg1 = preset(ProblemKind::Lasso, Algorithm::Alg1, norm_a).unwrap();
    let StepRule::Alg1(r1) = cfg1.rule else { unreachable!() };
    let floor1 = r1.tau0.min(r1.mu * r1.lambda_min_s.sqrt() / (r1.beta.sqrt() * norm_a));
    let mut taus = vec![r1.tau0];
    run(&p, &cfg1, &RunOptions::new(2000), |s, _| taus.push(s.tau)).unwrap();
    if !taus.windows(2).all(|w| w[1] <= w[0]) {
        failures.push("alg1 tau increased".to_string());
    }
    let min1 = taus.iter().copied().fold(f64::INFINITY, f64::min);
    if min1 < floor1 {
        failures.push(format!("alg1 tau {min1} below {floor1}"));
    }

    let cfg2 = preset(ProblemKind::Lasso, Algorithm::Alg2, norm_a).unwrap();
    let StepRule::Alg2(r2) = cfg2.rule else { unreachable!() };
    let floor2 = r2.tau0.min(r2.lambda_bar * r2.r1 / (r2.beta.sqrt() * norm_a));
    let mut min2 = f64::INFINITY;
    let mut late_shrinks = 0;
    let mut last_shrink = 0;
    let mut bad_ratio = 0;
    run(&p, &cfg2, &RunOptions::new(2000), |s, info| {
        min2 = min2.min(s.tau);
        match info.branch {
            Some(Branch::Shrink) => {
                last_shrink = s.k;
                if s.k > 1000 {
                    late_shrinks += 1;
                }
            }
            Some(Branch::Grow) => {
                if s.tau != (r2.rho + r2.xi.value(s.k - 1)) * s.tau_prev {
                    bad_ratio += 1;
                }
            }
            None => {}
        }
    })
    .unwrap();
    if min2 < floor2 {
        failures.push(format!("alg2 tau {min2} below {floor2}"));
    }
    if bad_ratio > 0 {
        failures.push(format!("{bad_ratio} grow steps off the rho + xi ratio"));
    }
    if late_shrinks > 0 {
        failures.push(format!("alg2 shrank {late_shrinks} times in iterations 1001-2000 (last at k={last_shrink})"));
    }
    let detail = format!("alg1 min tau {min1:.4} >= {floor1:.4}; alg2 min tau {min2:.4} >= {floor2:.4}");
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join("; ")))
    }
}

/// Minimizes `<c, x> + gamma/2 ||rhs - A x||^2` over a shrinking grid on `x >= 0`.
fn uot_grid_oracle(p: &SplitProblem, gamma: f64) -> f64 {
    let ProxTerm::LinearPlusNonneg { cost } = &p.g else { unreachable!() };
    let eval = |x: &[f64; 4]| {
        let ax = p.a.apply(x).unwrap();
        let pen: f64 = ax.iter().zip(&p.rhs).map(|(a, b)| (b - a) * (b - a)).sum();
        dot(cost, x) + 0.5 * gamma * pen
    };
    let mut center = [0.5; 4];
    let mut half = 0.5;
    let steps = 20;
    let mut best = f64::INFINITY;
    while half > 1e-7 {
        let h = 2.0 * half / steps as f64;
        let axis = |c: f64| (0..=steps).map(move |i| c - half + i as f64 * h).filter(|v| *v >= 0.0);
        let mut arg = center;
        for a in axis(center[0]) {
            for b in axis(center[1]) {
                for c in axis(center[2]) {
                    for d in axis(center[3]) {
                        let x = [a, b, c, d];
                        let v = eval(&x);
                        if v < best {
                            best = v;
                            arg = x;
                        }
                    }
                }
            }
        }
        center = arg;
        half *= 0.25;
    }
    best
}

fn oracle_small() -> Check {
    let mut worst_lasso: f64 = 0.0;
    for (a, d, lam) in [(2.0, 3.0, 0.5), (1.0, -0.5, 0.2), (0.5, 0.1, 1.0), (3.0, -2.0, 0.1)] {
        let sol = reference_solve(&lasso_1d(a, d, lam), 200_000, 1e-14).unwrap();
        let x_star = (a * d).signum() * ((a * d).abs() - lam).max(0.0) / (a * a);
        let err = (sol.x[0] - x_star).abs();
        worst_lasso = worst_lasso.max(err);
        ensure(err <= 1e-8, format!("1-D LASSO a={a} d={d}: {} vs {x_star}", sol.x[0]))?;
    }
    let mut worst_uot: f64 = 0.0;
    for (a, b) in [([0.7, 0.3], [0.4, 0.6]), ([0.5, 0.5], [0.9, 0.1]), ([0.2, 0.8], [0.3, 0.7])] {
        let p = uot_from_histograms(&a, &b, 1.0).unwrap();
        let sol = reference_solve(&p, 200_000, 1e-13).unwrap();
        let oracle = uot_grid_oracle(&p, 1.0);
        let err = (sol.phi - oracle).abs();
        worst_uot = worst_uot.max(err);
        ensure(err <= 1e-3, format!("UOT 2x2 {a:?} {b:?}: {} vs grid {oracle}", sol.phi))?;
    }
    Ok(format!("1-D LASSO max error {worst_lasso:.1e}; UOT 2x2 max objective error {worst_uot:.1e}"))
}

fn final_rel_gap(report: &ComparisonReport, name: &str) -> f64 {
    report.run(name).and_then(|r| r.trace.last()).and_then(|l| l.rel_gap).unwrap_or(f64::INFINITY)
}

fn lasso_comparison(report: &ComparisonReport, reference: &ReferenceSolution) -> Check {
    let mut failures = Vec::new();
    let mut parts = Vec::new();
    for algo in Algorithm::ALL {
        let run = report.run(algo.name()).unwrap();
        let last = run.trace.last().unwrap();
        let gap = last.rel_gap.unwrap();
        parts.push(format!("{}: rel {gap:.1e} fes {:.1e}", algo.name(), last.fes_gap));
        if !(gap <= 1e-4 && last.fes_gap <= 1e-3) {
            failures.push(algo.name());
        }
    }
    let cross = (report.phi_star - reference.phi).abs() / reference.phi.abs();
    let (g2, g1, gf) = (
        final_rel_gap(report, "alg2"),
        final_rel_gap(report, "alg1"),
        final_rel_gap(report, "grp-fixed"),
    );
    let ordered = g2 <= g1 && g1 <= 10.0 * gf;
    let detail = format!(
        "{}; phi* vs reference {cross:.1e}; ordering alg2 <= alg1 <= 10x grp-fixed {}",
        parts.join(", "),
        if ordered { "holds" } else { "violated" }
    );
    if failures.is_empty() && cross <= 1e-4 && ordered && reference.fes_gap <= 1e-8 {
        Ok(detail)
    } else {
        Err(format!("above tolerance: [{}]; {detail}", failures.join(", ")))
    }
}

fn ergodic_rate(report: &ComparisonReport, phi_ref: f64) -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for algo in Algorithm::ALL {
        let rows = &report.run(algo.name()).unwrap().trace.rows;
        let gap = |k: usize| (rows[k - 1].ergodic_objective - phi_ref).abs();
        for n in [250, 500] {
            let ratio = gap(4 * n) / gap(n);
            ok &= ratio <= 0.75;
            parts.push(format!("{} N={n}: {ratio:.2}", algo.name()));
        }
    }
    let detail = format!("gap(4N)/gap(N) {}", parts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rof() -> Check {
    let p = ProblemSpec::desk(ProblemKind::Rof, 0).build().unwrap();
    let truth = p.truth.as_ref().unwrap();
    let noisy = psnr(truth.observation.as_ref().unwrap(), &truth.x).unwrap();
    let report = compare(&p, &preset_suite(ProblemKind::Rof, &p).unwrap(), &RunOptions::new(1000));
    let mut parts = vec![format!("noisy {noisy:.2} dB")];
    let mut ok = report.all_completed();
    for r in &report.runs {
        let last = r.trace.last().unwrap();
        let out = last.psnr.unwrap();
        ok &= out >= noisy + 2.0 && last.fes_gap <= 1e-2;
        parts.push(format!("{} {out:.2} dB fes {:.1e}", r.trace.name, last.fes_gap));
    }
    let detail = parts.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn deblur() -> Check {
    let p = ProblemSpec::desk(ProblemKind::Deblur, 0).build().unwrap();
    let truth = p.truth.as_ref().unwrap();
    let blurred = psnr(truth.observation.as_ref().unwrap(), &truth.x).unwrap();
    let cfg = preset(ProblemKind::Deblur, Algorithm::Alg2, 1.0).unwrap();
    let rep = run(&p, &cfg, &RunOptions::new(1000).with_cadence(100), |_, _| {}).map_err(|e| e.to_string())?;
    let last = rep.rows.last().unwrap();
    let out = last.psnr.unwrap();
    let detail = format!("blurred {blurred:.2} dB, alg2 {out:.2} dB, fes {:.1e}", last.fes_gap);
    if out >= blurred + 1.0 && last.fes_gap <= 1e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn band_mass(x: &[f64], n_s: usize, n_t: usize) -> f64 {
    let total: f64 = x.iter().sum();
    let band: f64 = (0..n_s)
        .flat_map(|i| (0..n_t).map(move |j| (i, j)))
        .filter(|(i, j)| i.abs_diff(*j) <= 2)
        .map(|(i, j)| x[i * n_t + j])
        .sum();
    band / total
}

fn uot() -> Check {
    let spec = ProblemSpec::paper(ProblemKind::Uot, 0);
    let ProblemSpec::Uot { n_s, n_t, .. } = spec else { unreachable!() };
    let p = spec.build().unwrap();
    let reference = reference_solve(&p, 100_000, 1e-12).unwrap();
    let ref_band = band_mass(&reference.x, n_s, n_t);
    let report = compare(&p, &preset_suite(ProblemKind::Uot, &p).unwrap(), &RunOptions::new(1000));
    let mut ok = report.all_completed() && ref_band >= 0.6;
    let mut parts = vec![format!("reference phi {:.6e} band {:.0}%", reference.phi, 100.0 * ref_band)];
    for r in &report.runs {
        let x = &r.report.as_ref().unwrap().state.x;
        let last = r.trace.last().unwrap();
        let band = band_mass(x, n_s, n_t);
        let rel = (last.objective - reference.phi).abs() / reference.phi.abs();
        ok &= x.iter().all(|v| *v >= 0.0) && last.fes_gap <= 1e-3 && band >= 0.6;
        parts.push(format!("{} fes {:.1e} band {:.0}% obj vs ref {rel:.1e}", r.trace.name, last.fes_gap, 100.0 * band));
    }
    let detail = parts.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn saddle_fixedness() -> Check {
    let p = lasso_1d(2.0, 3.0, 0.5);
    let sol = reference_solve(&p, 200_000, 1e-15).unwrap();
    let mut worst: f64 = 0.0;
    for algo in Algorithm::ALL {
        let cfg = preset(ProblemKind::Lasso, algo, 2.0).unwrap();
        let mut state = SolverState::new(&p, &cfg.rule, sol.x.clone(), sol.w.clone(), sol.y.clone()).unwrap();
        step(&mut state, &p, &cfg).unwrap();
        let moved = dist(&state.x, &sol.x).max(dist(&state.w, &sol.w)).max(dist(&state.y, &sol.y));
        worst = worst.max(moved);
        ensure(moved <= 1e-6, format!("{algo} moved {moved:e}"))?;
    }
    Ok(format!("max movement {worst:.1e}"))
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, limit: Duration, check: &mut dyn FnMut() -> Check| {
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let within = elapsed <= limit;
        let (tag, detail) = match (&outcome, within) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("exceeded {}s; {d}", limit.as_secs())),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} {name} [{:.1}s] {detail}", elapsed.as_secs_f64());
    };

    report("operators", Duration::from_secs(5), &mut operator_suite);
    report("prox", Duration::from_secs(10), &mut prox_suite);
    report("step-size invariants", Duration::from_secs(60), &mut step_invariants);
    report("small oracles", Duration::from_secs(30), &mut oracle_small);

    let mut lasso_runs = None;
    report("lasso comparison", Duration::from_secs(180), &mut || {
        let p = lasso();
        let comparison = compare(&p, &preset_suite(ProblemKind::Lasso, &p).unwrap(), &RunOptions::new(2000));
        let reference = reference_solve(&p, 20_000, 1e-12).unwrap();
        let outcome = lasso_comparison(&comparison, &reference);
        lasso_runs = Some((comparison, reference));
        outcome
    });
    let (comparison, reference) = lasso_runs.expect("lasso runs recorded");
    report("ergodic rate", Duration::from_secs(180), &mut || ergodic_rate(&comparison, reference.phi));

    report("rof", Duration::from_secs(120), &mut rof);
    report("deblur", Duration::from_secs(300), &mut deblur);
    report("uot", Duration::from_secs(120), &mut uot);
    report("saddle-point fixedness", Duration::from_secs(1), &mut saddle_fixedness);

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
