//! Acceptance criteria. Each prints one `criterion N PASS|FAIL` line; the
//! process fails if any criterion does. Extra arguments select criteria
//! by number.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ips_ergodicity::model::{
    beta_delta, classify_simple, criterion, Alphabet, RegionClass, SimpleParams, TransitionRule,
};
use ips_ergodicity::sim::{
    chernoff_4t, cone_stats, couple, gen_events, pi_tail, AgreementTime, Configuration,
    TailOptions, Window,
};
use ips_ergodicity::stats::{dkw_epsilon, ks_survival, ols};
use ips_ergodicity::walks::{
    agreement_fraction, containment_check, drift_estimate, prob_in_a, run_walks, WalkField,
    WalkOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn wall() -> SimpleParams {
    SimpleParams::new(0.0, 0.9, 0.02, 0.02).unwrap()
}

fn c1_agreement_probability() -> Outcome {
    let (t, beta, delta, n) = (5.0, 0.1, 0.1, 100_000);
    let p = prob_in_a(t, beta, delta);
    let est = agreement_fraction(t, beta, delta, n, 1_000).unwrap();
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let pass = (p - 0.316_060).abs() < 5e-7 && (est.mean - p).abs() <= 3.0 * se;
    outcome(
        pass,
        format!("fraction={:.6} closed_form={:.6} 3se={:.6} n={n}", est.mean, p, 3.0 * se),
    )
}

fn c2_drift() -> Outcome {
    let r = drift_estimate(0.1, 0.1, 200.0, 100_000, 2_000).unwrap();
    let mc = r.mc.as_ref().unwrap();
    let checks = [
        ("dY", mc.drift_y, 5.5),
        ("dX_up", mc.drift_x_up, 5.0),
        ("dX_down", mc.drift_x_down, -5.0),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, e, target) in checks {
        pass &= e.within(target, 3.0);
        detail += &format!("{name}={:.4}±{:.4}(target {target}) ", e.mean, e.se);
    }
    detail += &format!("decomposition_mismatches={}", mc.decomposition_mismatches);
    pass &= mc.decomposition_mismatches == 0;
    outcome(pass, detail)
}

fn c3_containment() -> Outcome {
    let rule = wall().to_rule().unwrap();
    let c = beta_delta(&rule, 0).unwrap();
    let window = Window::new(-200, 20).unwrap();
    let (mut violations, mut checked, mut unchecked, mut spread) = (0, 0, 0, 0);
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
        let bg = Configuration {
            window,
            states: (0..window.len()).map(|_| rng.random_range(0..2u8)).collect(),
            right_boundary: rng.random_range(0..2u8),
        };
        let configs = [bg.clone().with_site(0, 0), bg.with_site(0, 1)];
        let events = gen_events(seed, window, 100.0).unwrap();
        let coupled = couple(&rule, 0, &configs, &events).unwrap();
        let mut field = WalkField::new(seed, c.beta, c.delta).unwrap();
        let walk = run_walks(&mut field, &WalkOptions::default_for(c.beta, c.delta)).unwrap();
        let report = containment_check(&coupled, &walk);
        violations += report.violations.len();
        checked += report.checked;
        unchecked += report.unchecked;
        spread += coupled.disagreements().filter(|(j, _)| *j < 0).count();
    }
    outcome(
        violations == 0 && unchecked == 0,
        format!(
            "violations={violations} intervals_checked={checked} unchecked={unchecked} intervals_left_of_0={spread} runs=1000"
        ),
    )
}

fn blind_tail(rule: &TransitionRule, seed: u64) -> (f64, f64) {
    let n = 10_000;
    let est = pi_tail(rule, &[25.0], n, seed, &TailOptions::default()).unwrap();
    let times: Vec<f64> = est
        .samples
        .iter()
        .map(|s| match s {
            AgreementTime::At(t) => *t,
            AgreementTime::Censored => f64::INFINITY,
        })
        .collect();
    (ks_survival(&times, |t| (-t).exp()), dkw_epsilon(n, 0.01))
}

fn c4_blind_tail() -> Outcome {
    let binary = SimpleParams::new(0.3, 0.3, 0.3, 0.3).unwrap().to_rule().unwrap();
    let three = TransitionRule::from_fn(Alphabet::new(3).unwrap(), |_, _, a| [0.2, 0.5, 0.3][a as usize]).unwrap();
    let (ks2, eps) = blind_tail(&binary, 4_000);
    let (ks3, _) = blind_tail(&three, 4_100);
    outcome(
        ks2 <= eps && ks3 <= eps,
        format!("ks_binary={ks2:.5} ks_three_state={ks3:.5} dkw99={eps:.5} n=10000"),
    )
}

fn c5_showcase_tail() -> Outcome {
    let rule = wall().to_rule().unwrap();
    let grid = [50.0, 100.0, 150.0, 200.0];
    let est = pi_tail(&rule, &grid, 10_000, 5_000, &TailOptions::default()).unwrap();
    let s = &est.scaled;
    let non_increasing = s[1] >= s[2] && s[2] >= s[3];
    let bound = 0.05 / 200.0 * 10.0;
    let pass = non_increasing && est.survival[3] < bound && est.censored == 0;
    outcome(
        pass,
        format!(
            "t*P(pi>t)={:?} P(pi>200)={} bound={bound} censored={}",
            s, est.survival[3], est.censored
        ),
    )
}

/// Independent enumeration of `(β, δ, β_eff)` straight off the table.
fn brute(rule: &TransitionRule, a: u8) -> (f64, f64, f64) {
    let n = rule.alphabet().size();
    let table = rule.table();
    let mut beta = f64::INFINITY;
    let mut delta = f64::NEG_INFINITY;
    let mut beta_eff = f64::INFINITY;
    for s0 in 0..n {
        for s1 in 0..n {
            let p = table[(s0 * n + s1) * n + a as usize];
            beta = beta.min(p);
            if s0 == a as usize {
                delta = delta.max(1.0 - p);
            } else {
                beta_eff = beta_eff.min(p);
            }
        }
    }
    (beta, delta, beta_eff)
}

/// Region class from integer grid coordinates `p = i/100`, `p11 = 0`.
fn grid_oracle(i10: i64, i01: i64, i00: i64) -> &'static str {
    if i10 == 100 && i00 == 0 && i01 > 0 {
        return "EastLine";
    }
    if i10 == 100 || i01 == 0 {
        return "NotPositiveRates";
    }
    if 2 * i10 < 100 && i01 > 0 && i00 > 0 {
        return "PriorCovered";
    }
    if i10 < i01 + i00 || i01 < i00 {
        return "PriorCovered";
    }
    let d = i01.max(i00);
    if d * d < 2 * (100 - i10) * (100 - i10) {
        "NewlyCovered"
    } else {
        "Open"
    }
}

fn c6_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6_000);
    let mut bd_mismatch = 0;
    for k in 0..1000 {
        let n = 2 + k % 3;
        let mut table = Vec::with_capacity(n * n * n);
        for _ in 0..n * n {
            let mut w: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>() })
                .collect();
            if w.iter().all(|&x| x == 0.0) {
                w[rng.random_range(0..n)] = 1.0;
            }
            let s: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|x| x / s).collect();
            let rest: f64 = row[1..].iter().sum();
            row[0] = (1.0 - rest).max(0.0);
            table.extend(row);
        }
        let rule = TransitionRule::from_table(Alphabet::new(n).unwrap(), table).unwrap();
        for a in 0..n as u8 {
            let c = beta_delta(&rule, a).unwrap();
            if (c.beta, c.delta, c.beta_eff) != brute(&rule, a) {
                bd_mismatch += 1;
            }
        }
    }

    let mut class_mismatch = 0;
    for i00 in [0i64, 25] {
        for i10 in 0..=100i64 {
            for i01 in 0..=100i64 {
                let p = SimpleParams::new(0.0, i10 as f64 / 100.0, i01 as f64 / 100.0, i00 as f64 / 100.0).unwrap();
                if classify_simple(&p).name() != grid_oracle(i10, i01, i00) {
                    class_mismatch += 1;
                }
            }
        }
    }

    // upper edge of the new region along p10 = 0.585, p00 = 0
    let mut last_new = f64::NAN;
    let mut last_holds = f64::NAN;
    for k in 0..=2000 {
        let p01 = 0.5 + k as f64 * 1e-4;
        let p = SimpleParams::new(0.0, 0.585, p01, 0.0).unwrap();
        if classify_simple(&p) == RegionClass::NewlyCovered {
            last_new = p01;
        }
        if criterion(&p.to_rule().unwrap(), 0).unwrap().eff_holds {
            last_holds = p01;
        }
    }
    let inside = |x: f64| x > 0.58 && x < 0.59;
    outcome(
        bd_mismatch == 0 && class_mismatch == 0 && inside(last_new) && inside(last_holds),
        format!(
            "beta_delta_mismatches={bd_mismatch}/3000 class_mismatches={class_mismatch}/20402 new_region_edge={last_new:.4} criterion_edge={last_holds:.4}"
        ),
    )
}

fn c7_cone() -> Outcome {
    let s10 = cone_stats(10.0, 10_000, 7_000);
    let tol = 3.0 * (10.0f64 / 10_000.0).sqrt();
    let s5 = cone_stats(5.0, 100_000, 7_100);
    let bound = chernoff_4t(5.0);
    outcome(
        (s10.reach.mean - 10.0).abs() <= tol && s5.exceed_4t < bound,
        format!(
            "mean(sigma-1)@T=10={:.4} tol={tol:.4} P(sigma-1>4T)@T=5={} chernoff={bound:.5}",
            s10.reach.mean, s5.exceed_4t
        ),
    )
}

fn c8_walk_tail() -> Outcome {
    let n = 10_000;
    let opts = WalkOptions::default_for(0.1, 0.1);
    let taus: Vec<usize> = (0..n as u64)
        .map(|s| {
            let mut f = WalkField::new(8_000 + s, 0.1, 0.1).unwrap();
            let w = run_walks(&mut f, &opts).unwrap();
            w.tau.unwrap_or(usize::MAX)
        })
        .collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 0.. {
        let count = taus.iter().filter(|&&t| t > k).count();
        if count < 50 {
            break;
        }
        xs.push(k as f64);
        ys.push((count as f64 / n as f64).ln());
    }
    let Some(fit) = ols(&xs, &ys) else {
        return outcome(false, format!("too few tail points: {}", xs.len()));
    };
    let df = (fit.points - 2) as f64;
    let q = StudentsT::new(0.0, 1.0, df).unwrap().inverse_cdf(0.995);
    let upper = fit.slope + q * fit.slope_se;
    let censored = taus.iter().filter(|&&t| t == usize::MAX).count();
    outcome(
        fit.slope < 0.0 && upper < 0.0,
        format!(
            "slope={:.5} ci99_upper={upper:.5} points={} censored={censored} n={n}",
            fit.slope, fit.points
        ),
    )
}

type CliRun = (i32, Vec<u8>, Vec<(String, Vec<u8>)>);

fn run_cli(bin: &str, dir: &Path, tag: &str, args: &[String]) -> CliRun {
    let run_dir = dir.join(tag);
    std::fs::create_dir_all(&run_dir).unwrap();
    let args: Vec<String> = args.iter().map(|a| a.replace("{dir}", run_dir.to_str().unwrap())).collect();
    let out = Command::new(bin).args(&args).output().unwrap();
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&run_dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    (out.status.code().unwrap_or(-1), out.stdout, files)
}

fn c9_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ipsergo");
    let dir = tempfile::tempdir().unwrap();
    let wall = "--p11 0 --p10 0.9 --p01 0.02 --p00 0.02";
    let commands = [
        format!("criterion {wall} --state 0"),
        format!("criterion {wall} --state 1"),
        format!("classify {wall}"),
        "sweep --p00 0.25 --grid-n 41 --out {dir}/sweep.csv".to_string(),
        format!("raster {wall} --left -60 --right 59 --horizon 80 --dt 0.5 --seed 9 --out {{dir}}/r.pgm"),
        format!("couple {wall} --left -80 --right 20 --horizon 40 --seed 9 --out {{dir}}/c.csv"),
        format!("tail {wall} --t-grid 10,20,40 --reps 300 --seed 9 --out {{dir}}/t.csv"),
        "walks --beta 0.1 --delta 0.1 --steps 40 --seed 9 --out {dir}/w.csv --agreement-out {dir}/a.csv".to_string(),
        "drift --beta 0.1 --delta 0.1 --T 200 --reps 3000 --seed 9 --out {dir}/d.csv".to_string(),
        "cone --T 5,10 --reps 2000 --seed 9 --out {dir}/k.csv".to_string(),
        "tail --blind 0.4 --t-grid 1,2,3 --reps 500 --seed 3".to_string(),
    ];
    let mut bad = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let args: Vec<String> = cmd.split_whitespace().map(String::from).collect();
        let a = run_cli(bin, dir.path(), &format!("{i}a"), &args);
        let b = run_cli(bin, dir.path(), &format!("{i}b"), &args);
        let sub = &args[0];
        let expected = if cmd.contains("--state 1") { 1 } else { 0 };
        if a != b || a.0 != expected || (a.1.is_empty() && a.2.is_empty()) {
            bad.push(sub.clone());
        }
    }
    outcome(
        bad.is_empty(),
        format!("commands={} differing_or_failing={:?}", commands.len(), bad),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 9] = [
        (1, "closed-form agreement probability", c1_agreement_probability),
        (2, "drift formulas", c2_drift),
        (3, "walk containment", c3_containment),
        (4, "neighbor-blind tail oracle", c4_blind_tail),
        (5, "showcase tail decay", c5_showcase_tail),
        (6, "criterion and classifier oracles", c6_oracles),
        (7, "cone statistics", c7_cone),
        (8, "walk crossing tail", c8_walk_tail),
        (9, "cli determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|x| x == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} {verdict} [{name}] {} ({:.1}s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
