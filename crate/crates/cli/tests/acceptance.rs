//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rctfuse_core::estimators::{
    bootstrap_se, fit_participation, obs_aipw, obs_aipw_sandwich, obs_aipw_with, obs_ipw,
    obs_ipw_with, rct_aipw, rct_aipw_with, rct_aippw, rct_aippw_with, rct_ipw, rct_ipw_with,
    rct_ippw, rct_ippw_with, EstimatorOptions,
};
use rctfuse_core::fusion::{anchored_threshold, naive_pool};
use rctfuse_core::math::expit;
use rctfuse_core::simulation::{
    generate_obs, lambda_label, phase_sweep, run_experiment, verify_amse, verify_coverage, Effect,
    EstimatorPair, Model1Params, Scenario,
};
use rctfuse_core::{Dataset, EstimateSummary, FusionConfig, Matrix, RctDesign, Rng, Source};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rctfuse(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rctfuse"))
        .args(args)
        .env_remove("RCTFUSE_SEED")
        .output()
        .expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(j).unwrap().to_string()).collect()
}

const PUBLISHED_FUSED: [(&str, f64); 10] = [
    ("LEADER", -0.0075),
    ("DECLARE-TIMI 58", -0.0053),
    ("EMPA-REG OUTCOME", -0.0043),
    ("CANVAS", -0.0074),
    ("CARMELINA", -0.0054),
    ("TECOS", -0.0089),
    ("SAVOR-TIMI 53", -0.0064),
    ("CAROLINA", -0.0035),
    ("TRITON-TIMI 38", -0.0129),
    ("PLATO", -0.0154),
];

fn trial_table_reproduction() -> Outcome {
    let start = Instant::now();
    let out = rctfuse(&["--mode", "fuse", "--lambda1", "0.5"]);
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let csv = String::from_utf8(out.stdout).unwrap();
    let studies = column(&csv, "study");
    let values: Vec<f64> = column(&csv, "beta_lambda").iter().map(|v| v.parse().unwrap()).collect();
    let mut misses = Vec::new();
    let mut worst: f64 = 0.0;
    for (study, published) in PUBLISHED_FUSED {
        let Some(k) = studies.iter().position(|s| s == study) else {
            misses.push(format!("{study} missing"));
            continue;
        };
        let err = (values[k] - published).abs();
        worst = worst.max(err);
        if err > 1e-4 {
            misses.push(format!("{study} {:.6} vs {published} (|err| {err:.1e})", values[k]));
        }
    }
    let fast = elapsed < Duration::from_secs(1);
    check(
        misses.is_empty() && studies.len() == 10 && fast,
        format!(
            "{}/10 rows within 1e-4, max |err| {worst:.1e}, runtime {:.3}s{}",
            10 - misses.len(),
            elapsed.as_secs_f64(),
            if misses.is_empty() { String::new() } else { format!("; off: {}", misses.join("; ")) }
        ),
    )
}

fn mse_ratio_bands() -> Outcome {
    let start = Instant::now();
    let seed = 20_260_101;
    let b0 = run_experiment(&Scenario::new(Effect::Constant, 10_000, 0.0, EstimatorPair::Ipw, 1000, seed))
        .map_err(|e| e.to_string())?;
    let b10 = run_experiment(&Scenario::new(Effect::Constant, 10_000, 10.0, EstimatorPair::Ipw, 1000, seed))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let l05 = lambda_label(0.5);
    let (rc, ro, rl) = (b0.ratio("rct").unwrap(), b0.ratio("obs").unwrap(), b0.ratio(&l05).unwrap());
    let (rc10, ro10) = (b10.ratio("rct").unwrap(), b10.ratio("obs").unwrap());
    let ok = (15.0..=45.0).contains(&rc)
        && (0.95..=1.3).contains(&ro)
        && (2.0..=6.0).contains(&rl)
        && (0.9..=1.1).contains(&rc10)
        && ro10 >= 10.0
        && elapsed < Duration::from_secs(600);
    check(
        ok,
        format!(
            "b=0: rct {rc:.2} [15,45], obs {ro:.3} [0.95,1.3], lambda1=0.5 {rl:.2} [2,6]; b=10: rct {rc10:.3} [0.9,1.1], obs {ro10:.2} >= 10; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn amse_formulas() -> Outcome {
    let start = Instant::now();
    let se_c = Model1Params::simple(500, 5000, 2.0, 0.0).se_c();
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, mult) in [0.0, 1.0, 3.0].into_iter().enumerate() {
        let p = Model1Params::simple(500, 5000, 2.0, mult * se_c);
        let r = verify_amse(&p, 5000, 7000 + k as u64).map_err(|e| e.to_string())?;
        let same_order = (r.mse_pooled < r.mse_rct) == (r.amse_pooled < r.amse_rct);
        ok &= r.rel_err_rct <= 0.10 && r.rel_err_pooled <= 0.10 && same_order;
        parts.push(format!(
            "delta={mult}se_c: rel err rct {:.3} pooled {:.3}, {}",
            r.rel_err_rct,
            r.rel_err_pooled,
            if r.mse_pooled < r.mse_rct { "pooled<rct" } else { "rct<pooled" }
        ));
        if k == 0 {
            ok &= r.mse_pooled < r.mse_rct;
        }
        if k == 2 {
            ok &= r.mse_rct < r.mse_pooled;
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    check(ok, format!("{}; {:.1}s", parts.join("; "), elapsed.as_secs_f64()))
}

fn ci_coverage() -> Outcome {
    let start = Instant::now();
    let se_c = Model1Params::simple(500, 5000, 2.0, 0.0).se_c();
    let delta_bar = 0.9 * se_c;
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, mult) in [0.0, 0.5, 0.9].into_iter().enumerate() {
        let p = Model1Params::simple(500, 5000, 2.0, mult * se_c);
        let r = verify_coverage(&p, delta_bar, 0.05, 2000, 8000 + k as u64).map_err(|e| e.to_string())?;
        ok &= r.oracle_coverage >= 0.93;
        parts.push(format!("oracle {:.4} at delta={mult}se_c", r.oracle_coverage));
    }
    let p = Model1Params::simple(500, 5000, 2.0, 0.5 * se_c);
    let r = verify_coverage(&p, delta_bar, 0.05, 10_000, 8100).map_err(|e| e.to_string())?;
    ok &= (0.935..=0.965).contains(&r.rct_coverage);
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    check(
        ok,
        format!(
            "{} (>= 0.93, R=2000); rct {:.4} in [0.935,0.965] (R=10000); {:.1}s",
            parts.join(", "),
            r.rct_coverage,
            elapsed.as_secs_f64()
        ),
    )
}

fn threshold_envelope() -> Outcome {
    let base = Model1Params::simple(500, 5000, 2.0, 0.0);
    let se_c = base.se_c();
    let grid: Vec<f64> = rctfuse_cli::commands::PHASE_GRID.iter().map(|k| k * se_c).collect();
    let rows = phase_sweep(&base, &grid, 0.5, 2000, 9000).map_err(|e| e.to_string())?;
    let factor = 10.0 * (500f64).ln();
    let mut worst: f64 = 0.0;
    for &d in &grid {
        let get = |name: &str| rows.iter().find(|r| r.delta == d && r.estimator == name).unwrap().mse;
        worst = worst.max(get("lambda") / get("oracle"));
    }
    check(
        worst <= factor,
        format!("max MSE(lambda)/MSE(oracle) {worst:.3} <= {factor:.2} over {} grid points", grid.len()),
    )
}

fn random_summary(rng: &mut Rng, n: usize) -> EstimateSummary {
    let est = 10.0 * rng.uniform() - 5.0;
    let se = 10f64.powf(3.3 * rng.uniform() - 3.0);
    EstimateSummary::from_standard_error(est, se, n, "s").unwrap()
}

fn shifted(s: &EstimateSummary, shift: f64, scale: f64) -> EstimateSummary {
    EstimateSummary::from_standard_error((s.estimate + shift) * scale, s.standard_error * scale, s.n, "s").unwrap()
}

fn fusion_invariants() -> Outcome {
    let mut rng = Rng::new(424_242);
    let mut bad = Vec::new();
    let (mut dead, mut dyadic_checked) = (0, 0);
    for i in 0..10_000 {
        let n_c = 2 + rng.index(5000);
        let n_o = n_c + 1 + rng.index(100_000);
        let c = random_summary(&mut rng, n_c);
        let o = random_summary(&mut rng, n_o);
        let cfg = FusionConfig {
            lambda1: 0.01 + 3.0 * rng.uniform(),
            lambda_override: if i % 5 == 0 { Some(4.0 * rng.uniform()) } else { None },
            ..FusionConfig::default()
        };
        let r = anchored_threshold(&c, &o, &cfg).map_err(|e| e.to_string())?;
        if !(r.delta_hat.abs() <= r.tilde_delta.abs()
            && (r.delta_hat - r.tilde_delta).abs() <= r.threshold + 1e-12
            && (r.delta_hat == 0.0) == (r.tilde_delta.abs() <= r.threshold))
        {
            bad.push(format!("soft-threshold triple at case {i}"));
        }
        if r.tilde_delta.abs() <= r.threshold {
            dead += 1;
            if r.beta_lambda != naive_pool(&c, &o).unwrap().estimate {
                bad.push(format!("dead zone != naive pool at case {i}"));
            }
        }
        let zero = FusionConfig { lambda_override: Some(0.0), ..cfg };
        if anchored_threshold(&c, &o, &zero).unwrap().beta_lambda != c.estimate {
            bad.push(format!("lambda=0 != beta_c at case {i}"));
        }
        let k = rng.index(41) as i32 - 20;
        let s = 2f64.powi(k);
        let scaled = anchored_threshold(&shifted(&c, 0.0, s), &shifted(&o, 0.0, s), &cfg).unwrap();
        if scaled.beta_lambda != s * r.beta_lambda || scaled.omega_hat != r.omega_hat {
            bad.push(format!("power-of-two scaling at case {i}"));
        }
        let shift = 6.0 * rng.uniform() - 3.0;
        let scale = 0.1 + 9.9 * rng.uniform();
        let tol = 1e-12 * (1.0 + c.estimate.abs() + o.estimate.abs() + shift.abs());
        let moved = anchored_threshold(&shifted(&c, shift, 1.0), &shifted(&o, shift, 1.0), &cfg).unwrap();
        let scaled = anchored_threshold(&shifted(&c, 0.0, scale), &shifted(&o, 0.0, scale), &cfg).unwrap();
        if (moved.beta_lambda - r.beta_lambda - shift).abs() > tol
            || (scaled.beta_lambda - scale * r.beta_lambda).abs() > tol * scale
            || (scaled.omega_hat - r.omega_hat).abs() > 1e-15
        {
            bad.push(format!("real affine map at case {i}"));
        }

        // Dyadic inputs with equal SEs: every operation on the exact branches is exact.
        let dy = |rng: &mut Rng| (rng.index(8192) as f64 - 4096.0) / 1024.0;
        let se = 2f64.powi(-(rng.index(8) as i32));
        let (dc, dobs, dshift) = (dy(&mut rng), dy(&mut rng), dy(&mut rng));
        let mk = |e: f64, n: usize| EstimateSummary::from_standard_error(e, se, n, "d").unwrap();
        let dcfg = if i % 2 == 0 { zero } else { FusionConfig { lambda_override: Some(1e3), ..cfg } };
        let base = anchored_threshold(&mk(dc, n_c), &mk(dobs, n_o), &dcfg).unwrap();
        let moved = anchored_threshold(&mk(dc + dshift, n_c), &mk(dobs + dshift, n_o), &dcfg).unwrap();
        dyadic_checked += 1;
        if moved.beta_lambda != base.beta_lambda + dshift {
            bad.push(format!("dyadic shift at case {i}"));
        }
    }
    check(
        bad.is_empty(),
        format!(
            "10000 random inputs ({dead} in dead zone), {dyadic_checked} dyadic shift cases{}",
            if bad.is_empty() { String::new() } else { format!("; violations: {}", bad.iter().take(5).cloned().collect::<Vec<_>>().join(", ")) }
        ),
    )
}

fn data(y: &[f64], a: &[u8], x: Option<&[f64]>, source: Source) -> Dataset {
    match x {
        Some(x) => Dataset::new(y.to_vec(), a.to_vec(), Matrix::from_columns(&[x], y.len()).unwrap(), source).unwrap(),
        None => Dataset::without_covariates(y.to_vec(), a.to_vec(), source).unwrap(),
    }
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Arm mean of `y`.
fn arm_mean(y: &[f64], a: &[u8], arm: u8) -> f64 {
    mean((0..y.len()).filter(|&i| a[i] == arm).map(|i| y[i]))
}

/// Line through the arm's two points `(x, y)`, evaluated at `at`.
fn arm_line(y: &[f64], a: &[u8], x: &[f64], arm: u8, at: f64) -> f64 {
    let pts: Vec<(f64, f64)> = (0..y.len()).filter(|&i| a[i] == arm).map(|i| (x[i], y[i])).collect();
    assert_eq!(pts.len(), 2);
    let slope = (pts[1].1 - pts[0].1) / (pts[1].0 - pts[0].0);
    pts[0].1 + slope * (at - pts[0].0)
}

fn ht(y: &[f64], a: &[u8], p: &[f64], w: &[f64]) -> f64 {
    mean((0..y.len()).map(|i| w[i] * (f64::from(a[i]) / p[i] - f64::from(1 - a[i]) / (1.0 - p[i])) * y[i]))
}

fn hajek(y: &[f64], a: &[u8], p: &[f64], w: &[f64]) -> f64 {
    let n = y.len();
    let t = |arm: u8, q: &dyn Fn(usize) -> f64| {
        let num: f64 = (0..n).filter(|&i| a[i] == arm).map(|i| w[i] * y[i] / q(i)).sum();
        let den: f64 = (0..n).filter(|&i| a[i] == arm).map(|i| w[i] / q(i)).sum();
        num / den
    };
    t(1, &|i| p[i]) - t(0, &|i| 1.0 - p[i])
}

fn estimator_oracles() -> Outcome {
    let stab = EstimatorOptions { stabilized: true, ..EstimatorOptions::default() };
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    let mut cmp = |name: &str, got: f64, want: f64, tol: f64| {
        let e = (got - want).abs();
        if tol == 1e-10 {
            worst = worst.max(e);
        }
        if !(e <= tol) {
            fails.push(format!("{name}: {got} vs {want}"));
        }
    };

    // Trial, no covariates, per-row assignment probabilities.
    let y = [3.0, 5.5, 1.0, 0.5];
    let a = [1u8, 1, 0, 0];
    let p = [0.4, 0.7, 0.3, 0.6];
    let ones = [1.0; 4];
    let d = data(&y, &a, None, Source::Rct);
    let design = RctDesign::PerRow(p.to_vec());
    let ipw = rct_ipw(&d, &design).unwrap();
    cmp("rct_ipw", ipw.estimate, ht(&y, &a, &p, &ones), 1e-10);
    let psi: Vec<f64> = (0..4).map(|i| (f64::from(a[i]) / p[i] - f64::from(1 - a[i]) / (1.0 - p[i])) * y[i]).collect();
    let m = mean(psi.iter().copied());
    cmp("rct_ipw se", ipw.standard_error, (mean(psi.iter().map(|v| (v - m).powi(2))) / 4.0).sqrt(), 1e-10);
    cmp("rct_sipw", rct_ipw_with(&d, &design, &stab).unwrap().estimate, hajek(&y, &a, &p, &ones), 1e-10);
    let (m1, m0) = (arm_mean(&y, &a, 1), arm_mean(&y, &a, 0));
    let res: Vec<f64> = (0..4).map(|i| y[i] - if a[i] == 1 { m1 } else { m0 }).collect();
    cmp("rct_aipw", rct_aipw(&d, &design).unwrap().estimate, m1 - m0 + ht(&res, &a, &p, &ones), 1e-10);
    cmp("rct_saipw", rct_aipw_with(&d, &design, &stab).unwrap().estimate, m1 - m0 + hajek(&res, &a, &p, &ones), 1e-10);

    // Trial with a binary covariate: per-arm lines interpolate.
    let x = [0.0, 1.0, 0.0, 1.0];
    let dx = data(&y, &a, Some(&x), Source::Rct);
    let half = RctDesign::Constant(0.5);
    let contrast = |at: f64| arm_line(&y, &a, &x, 1, at) - arm_line(&y, &a, &x, 0, at);
    cmp("rct_aipw x", rct_aipw(&dx, &half).unwrap().estimate, mean(x.iter().map(|&v| contrast(v))), 1e-10);
    cmp("rct_ipw pi=0.5", rct_ipw(&dx, &half).unwrap().estimate, ht(&y, &a, &[0.5; 4], &ones), 1e-10);

    // Observational, intercept-only propensity: p-hat = 3/4.
    let yo = [2.0, 4.0, 3.5, 1.0];
    let ao = [1u8, 1, 1, 0];
    let o = data(&yo, &ao, None, Source::Obs);
    let ph = [0.75; 4];
    cmp("obs_ipw", obs_ipw(&o).unwrap().estimate, ht(&yo, &ao, &ph, &ones), 1e-10);
    cmp("obs_sipw", obs_ipw_with(&o, &stab).unwrap().estimate, hajek(&yo, &ao, &ph, &ones), 1e-10);
    let (o1m, o0m) = (arm_mean(&yo, &ao, 1), arm_mean(&yo, &ao, 0));
    let reso: Vec<f64> = (0..4).map(|i| yo[i] - if ao[i] == 1 { o1m } else { o0m }).collect();
    cmp("obs_aipw", obs_aipw(&o).unwrap().estimate, o1m - o0m + ht(&reso, &ao, &ph, &ones), 1e-10);
    cmp("obs_aipw_sandwich", obs_aipw_sandwich(&o).unwrap().estimate, o1m - o0m, 1e-10);

    // Observational, binary covariate (saturated propensity, 1/2 in each cell).
    let xo = [0.0, 0.0, 1.0, 1.0];
    let ao2 = [1u8, 0, 0, 1];
    let o2 = data(&yo, &ao2, Some(&xo), Source::Obs);
    cmp("obs_ipw x", obs_ipw(&o2).unwrap().estimate, ht(&yo, &ao2, &[0.5; 4], &ones), 1e-10);
    let c2 = |at: f64| arm_line(&yo, &ao2, &xo, 1, at) - arm_line(&yo, &ao2, &xo, 0, at);
    cmp("obs_aipw x", obs_aipw(&o2).unwrap().estimate, mean(xo.iter().map(|&v| c2(v))), 1e-10);

    // Participation, no covariates: e = 4/6, odds weight 1/2.
    let o1 = data(&[0.0, 1.0], &[0, 1], None, Source::Obs);
    let fit = fit_participation(&d, &o1).unwrap();
    let w = [0.5; 4];
    cmp("rct_ippw", rct_ippw(&d, &design, &fit).unwrap().estimate, ht(&y, &a, &p, &w), 1e-10);
    cmp("rct_sippw", rct_ippw_with(&d, &design, &fit, &stab).unwrap().estimate, hajek(&y, &a, &p, &w), 1e-10);
    cmp("rct_aippw", rct_aippw(&d, &design, &fit, &o1).unwrap().estimate, ht(&res, &a, &p, &w) + m1 - m0, 1e-10);
    cmp(
        "rct_saippw",
        rct_aippw_with(&d, &design, &fit, &o1, &stab).unwrap().estimate,
        hajek(&res, &a, &p, &w) + m1 - m0,
        1e-10,
    );

    // Participation, binary covariate: e(0) = 2/3, e(1) = 1/2.
    let xo1 = [0.0, 1.0, 1.0];
    let o1x = data(&[0.0; 3], &[0, 1, 0], Some(&xo1), Source::Obs);
    let fitx = fit_participation(&dx, &o1x).unwrap();
    let wx: Vec<f64> = x.iter().map(|&v| if v == 0.0 { 0.5 } else { 1.0 }).collect();
    cmp("rct_ippw x", rct_ippw(&dx, &half, &fitx).unwrap().estimate, ht(&y, &a, &[0.5; 4], &wx), 1e-10);
    cmp("rct_aippw x", rct_aippw(&dx, &half, &fitx, &o1x).unwrap().estimate, mean(xo1.iter().map(|&v| contrast(v))), 1e-10);

    // Stabilized = unstabilized when the weights average to one in each arm.
    let o1_four = data(&[0.0; 4], &[0, 1, 0, 1], Some(&x), Source::Obs);
    let fit4 = fit_participation(&dx, &o1_four).unwrap();
    for (name, plain, st) in [
        ("rct_ipw", rct_ipw(&dx, &half).unwrap(), rct_ipw_with(&dx, &half, &stab).unwrap()),
        ("rct_aipw", rct_aipw(&d, &half).unwrap(), rct_aipw_with(&d, &half, &stab).unwrap()),
        ("obs_ipw", obs_ipw(&o).unwrap(), obs_ipw_with(&o, &stab).unwrap()),
        ("obs_aipw", obs_aipw(&o).unwrap(), obs_aipw_with(&o, &stab).unwrap()),
        ("rct_ippw", rct_ippw(&dx, &half, &fit4).unwrap(), rct_ippw_with(&dx, &half, &fit4, &stab).unwrap()),
        (
            "rct_aippw",
            rct_aippw(&dx, &half, &fit4, &o1_four).unwrap(),
            rct_aippw_with(&dx, &half, &fit4, &o1_four, &stab).unwrap(),
        ),
    ] {
        cmp(&format!("{name} stabilized"), st.estimate, plain.estimate, 1e-12);
    }

    // Zero-noise linear outcome: AIPW-family estimators recover tau.
    let tau = 1.75;
    let mut rng = Rng::new(31);
    let n = 300;
    let x1: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let outcome = |a: u8, i: usize| 1.0 + tau * f64::from(a) + 0.7 * x1[i] - 1.2 * x2[i];
    let cov = Matrix::from_columns(&[x1.clone(), x2.clone()], n).unwrap();
    let pi: Vec<f64> = (0..n).map(|i| expit(0.3 * x1[i])).collect();
    let at: Vec<u8> = pi.iter().map(|&q| rng.bernoulli(q)).collect();
    let trial = Dataset::new((0..n).map(|i| outcome(at[i], i)).collect(), at, cov.clone(), Source::Rct).unwrap();
    let ao: Vec<u8> = (0..n).map(|i| rng.bernoulli(expit(0.5 - x1[i] + 0.8 * x2[i]))).collect();
    let obs = Dataset::new((0..n).map(|i| outcome(ao[i], i)).collect(), ao, cov, Source::Obs).unwrap();
    let o1 = obs.subset(&(0..150).collect::<Vec<_>>());
    let part = fit_participation(&trial, &o1).unwrap();
    let pd = RctDesign::PerRow(pi);
    for (name, est) in [
        ("rct_aipw", rct_aipw(&trial, &pd).unwrap()),
        ("rct_saipw", rct_aipw_with(&trial, &pd, &stab).unwrap()),
        ("obs_aipw", obs_aipw(&obs).unwrap()),
        ("obs_saipw", obs_aipw_with(&obs, &stab).unwrap()),
        ("obs_aipw_sandwich", obs_aipw_sandwich(&obs).unwrap()),
        ("rct_aippw", rct_aippw(&trial, &pd, &part, &o1).unwrap()),
        ("rct_saippw", rct_aippw_with(&trial, &pd, &part, &o1, &stab).unwrap()),
    ] {
        cmp(&format!("{name} tau"), est.estimate, tau, 1e-8);
    }

    check(
        fails.is_empty(),
        format!(
            "brute force max |err| {worst:.1e} (tol 1e-10), stabilized no-op (1e-12), tau recovery (1e-8){}",
            if fails.is_empty() { String::new() } else { format!("; off: {}", fails.join("; ")) }
        ),
    )
}

fn sandwich_vs_bootstrap() -> Outcome {
    let mut rng = Rng::new(5000);
    let d = generate_obs(Effect::Heterogeneous, 5000, 0.5, &mut rng);
    let sandwich = obs_aipw_sandwich(&d).map_err(|e| e.to_string())?.standard_error;
    let boot = bootstrap_se(&d, 500, &mut rng, obs_aipw).map_err(|e| e.to_string())?;
    let rel = (sandwich / boot - 1.0).abs();
    check(rel <= 0.15, format!("sandwich {sandwich:.5} vs bootstrap {boot:.5} (rel diff {rel:.3} <= 0.15)"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out_dir = dir.path().join(threads);
        let out = rctfuse(&[
            "--mode", "simulate", "--reps", "50", "--b", "0,10", "--seed", "2024", "--threads", threads,
            "--output", out_dir.to_str().unwrap(),
        ]);
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        outputs.push(std::fs::read(out_dir.join("sim_report.csv")).map_err(|e| e.to_string())?);
    }
    check(
        outputs[0] == outputs[1],
        format!("sim_report.csv at --threads 1 vs 8: {} bytes, identical = {}", outputs[0].len(), outputs[0] == outputs[1]),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("trial table reproduction", trial_table_reproduction),
        ("MSE-ratio bands", mse_ratio_bands),
        ("amse formula verification", amse_formulas),
        ("CI coverage", ci_coverage),
        ("thresholding MSE envelope", threshold_envelope),
        ("fusion invariant suite", fusion_invariants),
        ("estimator oracle equivalence", estimator_oracles),
        ("sandwich vs bootstrap SE", sandwich_vs_bootstrap),
        ("determinism across threads", determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
