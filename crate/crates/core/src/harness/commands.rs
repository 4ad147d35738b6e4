use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use super::output::{emit, fmt_num, pgm, Cell, Csv};
use super::{Command, HarnessError, Init, RuleArgs, EXIT_FAILS, EXIT_OK, EXIT_RUNTIME};
use crate::model::{beta_delta, classify, criterion, classify_simple, SimpleParams, State, TransitionRule};
use crate::sim::{
    agreement_time, cone_stats, couple, evolve, gen_events, pi_tail, stream_rng,
    AgreementTime, Configuration, Sampler, TailOptions, Window, CONFIG_STREAM,
};
use crate::walks::{containment_check, run_walks, drift_estimate, drift_closed_form, WalkField, WalkOptions};

pub(super) fn dispatch(cmd: &Command) -> Result<i32, HarnessError> {
    match cmd {
        Command::Criterion { rule, state } => cmd_criterion(rule, *state),
        Command::Classify { rule } => cmd_classify(rule),
        Command::Sweep { p00, grid_n, out } => cmd_sweep(*p00, *grid_n, out.as_deref()),
        Command::Raster {
            rule,
            left,
            right,
            horizon,
            dt,
            seed,
            state,
            init,
            out,
        } => cmd_raster(rule, Window::new(*left, *right)?, *horizon, *dt, *seed, *state, *init, out),
        Command::Couple {
            rule,
            left,
            right,
            horizon,
            seed,
            state,
            background,
            out,
        } => cmd_couple(
            rule,
            Window::new(*left, *right)?,
            *horizon,
            *seed,
            *state,
            *background,
            out.as_deref(),
        ),
        Command::Tail {
            rule,
            t_grid,
            reps,
            seed,
            state,
            random_backgrounds,
            no_constants,
            left,
            right,
            max_censored,
            out,
        } => {
            let window = match (left, right) {
                (Some(l), Some(r)) => Some(Window::new(*l, *r)?),
                _ => None,
            };
            let opts = TailOptions {
                designated: *state,
                sampler: Sampler {
                    constants: !no_constants,
                    random: *random_backgrounds,
                },
                window,
                max_censored: *max_censored,
            };
            cmd_tail(rule, t_grid, *reps, *seed, &opts, out.as_deref())
        }
        Command::Walks {
            beta,
            delta,
            rule,
            state,
            steps,
            seed,
            threshold,
            out,
            agreement_out,
        } => {
            let (beta, delta) = match rule {
                Some(p) => {
                    if p.len() != 4 {
                        return Err(HarnessError::Usage("--rule takes p11,p10,p01,p00".into()));
                    }
                    let r = SimpleParams::new(p[0], p[1], p[2], p[3])?.to_rule()?;
                    let c = beta_delta(&r, *state)?;
                    (c.beta, c.delta)
                }
                None => (beta.unwrap_or_default(), delta.unwrap_or_default()),
            };
            cmd_walks(beta, delta, *steps, *seed, *threshold, out.as_deref(), agreement_out.as_deref())
        }
        Command::Drift {
            beta,
            delta,
            threshold,
            reps,
            seed,
            out,
        } => cmd_drift(*beta, *delta, *threshold, *reps, *seed, out.as_deref()),
        Command::Cone { t, reps, seed, out } => cmd_cone(t, *reps, *seed, out.as_deref()),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".into(), fmt_num)
}

fn cmd_criterion(rule: &RuleArgs, state: State) -> Result<i32, HarnessError> {
    let r = criterion(&rule.rule()?, state)?;
    let text = format!(
        "state={}\nbeta={}\ndelta={}\nbeta_eff={}\nraw_holds={}\neff_holds={}\ndrift_unscaled={}\ndrift_scaled={}\n",
        r.state,
        fmt_num(r.beta),
        fmt_num(r.delta),
        fmt_num(r.beta_eff),
        r.raw_holds,
        r.eff_holds,
        opt(r.drift_unscaled),
        opt(r.drift_scaled),
    );
    emit(None, text.as_bytes())?;
    Ok(if r.eff_holds { EXIT_OK } else { EXIT_FAILS })
}

fn cmd_classify(rule: &RuleArgs) -> Result<i32, HarnessError> {
    let p = rule.params()?;
    let (red, class) = classify(&p)?;
    let text = format!(
        "class={}\nclause={}\nlambda={}\nface={:?}\nreduced={}\npositive_rates={}\n",
        class.name(),
        class.clause().map_or("", |c| c.id()),
        fmt_num(red.lambda),
        red.face,
        red.canonical,
        p.positive_rates(),
    );
    emit(None, text.as_bytes())?;
    Ok(EXIT_OK)
}

/// `i/(n-1)` for `i = 0..n`.
pub(crate) fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn cmd_sweep(p00: f64, grid_n: usize, out: Option<&Path>) -> Result<i32, HarnessError> {
    if grid_n < 2 {
        return Err(HarnessError::Usage("grid-n must be at least 2".into()));
    }
    let g = grid(grid_n);
    let points: Vec<(f64, f64)> = g.iter().flat_map(|&a| g.iter().map(move |&b| (a, b))).collect();
    let rows = points
        .par_iter()
        .map(|&(p10, p01)| {
            let p = SimpleParams::new(0.0, p10, p01, p00)?;
            let c = criterion(&p.to_rule()?, 0)?;
            Ok((p, c, classify_simple(&p)))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let mut csv = Csv::new(
        "sweep",
        1,
        &[("p11", "0".into()), ("p00", fmt_num(p00)), ("grid_n", grid_n.to_string())],
        &["p11", "p10", "p01", "p00", "beta", "delta", "beta_eff", "raw_holds", "eff_holds", "region_class", "clause"],
    );
    for (p, c, class) in rows {
        csv.row(&[
            Cell::F(p.p11),
            Cell::F(p.p10),
            Cell::F(p.p01),
            Cell::F(p.p00),
            Cell::F(c.beta),
            Cell::F(c.delta),
            Cell::F(c.beta_eff),
            Cell::B(c.raw_holds),
            Cell::B(c.eff_holds),
            Cell::S(class.name().into()),
            Cell::S(class.clause().map_or("", |c| c.id()).into()),
        ]);
    }
    emit(out, csv.as_str().as_bytes())?;
    Ok(EXIT_OK)
}

/// Initial configuration; `Random` draws every site and the boundary
/// uniformly from the alphabet.
pub(crate) fn initial(rule: &TransitionRule, window: Window, init: Init, seed: u64) -> Configuration {
    let n = rule.alphabet().size();
    match init {
        Init::Zeros => Configuration::constant(window, 0),
        Init::Ones => Configuration::constant(window, 1.min(n - 1) as State),
        Init::Random => {
            let mut rng = stream_rng(seed, CONFIG_STREAM);
            let states = (0..window.len()).map(|_| rng.random_range(0..n) as State).collect();
            Configuration {
                window,
                states,
                right_boundary: rng.random_range(0..n) as State,
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_raster(
    rule: &RuleArgs,
    window: Window,
    horizon: f64,
    dt: f64,
    seed: u64,
    state: State,
    init: Init,
    out: &Path,
) -> Result<i32, HarnessError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(HarnessError::Usage("dt must be positive".into()));
    }
    let rule = rule.rule()?;
    let events = gen_events(seed, window, horizon)?;
    let traj = evolve(&rule, state, &initial(&rule, window, init, seed), &events)?;
    let rows = (horizon / dt + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=rows).map(|k| k as f64 * dt).collect();
    let img = pgm(&traj.sample(&times), rule.alphabet().size());
    emit(Some(out), &img)?;
    Ok(EXIT_OK)
}

fn cmd_couple(
    rule_args: &RuleArgs,
    window: Window,
    horizon: f64,
    seed: u64,
    state: State,
    background: Init,
    out: Option<&Path>,
) -> Result<i32, HarnessError> {
    let rule = rule_args.rule()?;
    let bg = initial(&rule, window, background, seed);
    let configs: Vec<Configuration> = rule
        .alphabet()
        .states()
        .map(|s| bg.clone().with_site(0, s))
        .collect();
    let events = gen_events(seed, window, horizon)?;
    let coupled = couple(&rule, state, &configs, &events)?;
    let at = match agreement_time(&coupled) {
        AgreementTime::At(t) => fmt_num(t),
        AgreementTime::Censored => "censored".into(),
    };
    let c = beta_delta(&rule, state)?;
    let mut meta = vec![
        ("rule", rule_args.params()?.to_string()),
        ("state", state.to_string()),
        ("window", format!("{},{}", window.left, window.right)),
        ("horizon", fmt_num(horizon)),
        ("seed", seed.to_string()),
        ("agreement_time", at),
    ];
    let mut violations = 0;
    if c.beta > 0.0 && c.delta > 0.0 {
        let mut field = WalkField::new(seed, c.beta, c.delta)?;
        let walk = run_walks(&mut field, &WalkOptions::default_for(c.beta, c.delta))?;
        let report = containment_check(&coupled, &walk);
        violations = report.violations.len();
        meta.push(("containment_checked", report.checked.to_string()));
        meta.push(("containment_unchecked", report.unchecked.to_string()));
        meta.push(("containment_violations", violations.to_string()));
    }
    let mut csv = Csv::new("couple", 1, &meta, &["site", "start", "end", "open"]);
    for (site, d) in coupled.disagreements() {
        csv.row(&[Cell::I(site), Cell::F(d.start), Cell::F(d.end), Cell::B(d.open)]);
    }
    emit(out, csv.as_str().as_bytes())?;
    if violations > 0 {
        eprintln!("error: {violations} disagreement intervals outside the walk bounds");
        return Ok(EXIT_RUNTIME);
    }
    Ok(EXIT_OK)
}

fn cmd_tail(
    rule_args: &RuleArgs,
    t_grid: &[f64],
    reps: usize,
    seed: u64,
    opts: &TailOptions,
    out: Option<&Path>,
) -> Result<i32, HarnessError> {
    let rule = rule_args.rule()?;
    let est = pi_tail(&rule, t_grid, reps, seed, opts)?;
    let meta = [
        ("rule", rule_args.params()?.to_string()),
        ("state", opts.designated.to_string()),
        ("replicas", reps.to_string()),
        ("seed", seed.to_string()),
        ("window", format!("{},{}", est.window.left, est.window.right)),
        ("horizon", fmt_num(est.horizon)),
        ("censored", est.censored.to_string()),
        ("persisting", est.persisting.to_string()),
        ("constants", opts.sampler.constants.to_string()),
        ("random_backgrounds", opts.sampler.random.to_string()),
        ("note", est.note.to_string()),
    ];
    let mut csv = Csv::new("tail", 1, &meta, &["t", "survival", "lower", "upper", "scaled"]);
    for i in 0..est.t_grid.len() {
        csv.row(&[
            Cell::F(est.t_grid[i]),
            Cell::F(est.survival[i]),
            Cell::F(est.lower[i]),
            Cell::F(est.upper[i]),
            Cell::F(est.scaled[i]),
        ]);
    }
    emit(out, csv.as_str().as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_walks(
    beta: f64,
    delta: f64,
    steps: Option<usize>,
    seed: u64,
    threshold: f64,
    out: Option<&Path>,
    agreement_out: Option<&Path>,
) -> Result<i32, HarnessError> {
    let mut field = WalkField::new(seed, beta, delta)?;
    let mut opts = WalkOptions::default_for(beta, delta);
    opts.threshold = threshold;
    if let Some(s) = steps {
        opts.max_points = s;
    }
    let walk = run_walks(&mut field, &opts)?;
    let meta = [
        ("beta", fmt_num(beta)),
        ("delta", fmt_num(delta)),
        ("seed", seed.to_string()),
        ("steps", opts.max_points.to_string()),
        ("threshold", fmt_num(threshold)),
        ("tau", walk.tau.map_or_else(|| "censored".into(), |t| t.to_string())),
        ("sigma", walk.sigma.to_string()),
        ("m", fmt_num(walk.m)),
        ("censored", walk.censored.to_string()),
    ];
    let mut csv = Csv::new("walks", 1, &meta, &["n", "x", "y", "x_in_a", "y_in_a", "cone"]);
    for n in 0..walk.len() {
        let flag = |v: &[bool]| v.get(n).map_or(Cell::Empty, |&b| Cell::B(b));
        csv.row(&[
            Cell::U(n),
            Cell::F(walk.x[n]),
            Cell::F(walk.y[n]),
            flag(&walk.x_in_a),
            flag(&walk.y_in_a),
            Cell::F(walk.cone[n]),
        ]);
    }
    emit(out, csv.as_str().as_bytes())?;

    if let Some(path) = agreement_out {
        let top = walk.x.iter().chain(&walk.y).copied().fold(threshold, f64::max);
        let horizon = top * 1.25 + 1.0;
        let sites = field.snapshot(walk.len().max(1), horizon)?;
        let mut csv = Csv::new(
            "agreement",
            1,
            &[("beta", fmt_num(beta)), ("delta", fmt_num(delta)), ("seed", seed.to_string()), ("horizon", fmt_num(horizon))],
            &["site", "start", "end", "censored"],
        );
        for (n, ivs) in sites.iter().enumerate() {
            for iv in ivs {
                csv.row(&[
                    Cell::I(-(n as i64)),
                    Cell::F(iv.start),
                    Cell::F(iv.end),
                    Cell::B(iv.censored() || iv.end >= horizon),
                ]);
            }
        }
        emit(Some(path), csv.as_str().as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn cmd_drift(
    beta: f64,
    delta: f64,
    threshold: f64,
    reps: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<i32, HarnessError> {
    let report = if reps == 0 {
        drift_closed_form(beta, delta)?
    } else {
        drift_estimate(beta, delta, threshold, reps, seed)?
    };
    let c = report.closed;
    let mut meta = vec![
        ("beta", fmt_num(beta)),
        ("delta", fmt_num(delta)),
        ("threshold", fmt_num(threshold)),
        ("replicas", reps.to_string()),
        ("seed", seed.to_string()),
    ];
    if let Some(mc) = &report.mc {
        meta.push(("decomposition_mismatches", mc.decomposition_mismatches.to_string()));
    }
    let mut csv = Csv::new("drift", 1, &meta, &["quantity", "closed_form", "mc_mean", "mc_se", "n"]);
    let mut row = |name: &str, closed: f64, e: Option<crate::stats::Estimate>| {
        let (m, s, n) = match e {
            Some(e) => (Cell::F(e.mean), Cell::F(e.se), Cell::U(e.n)),
            None => (Cell::Empty, Cell::Empty, Cell::Empty),
        };
        csv.row(&[Cell::S(name.into()), Cell::F(closed), m, s, n]);
    };
    let mc = report.mc.as_ref();
    row("drift_y", c.drift_y, mc.map(|m| m.drift_y));
    row("drift_x_up", c.drift_x_up, mc.map(|m| m.drift_x_up));
    row("drift_x_down", c.drift_x_down, mc.map(|m| m.drift_x_down));
    row("drift_z", c.drift_z, mc.map(|m| m.drift_z));
    row("drift_z_limit", c.drift_z_limit, None);
    row("y_outside", 1.0, mc.map(|m| m.y_outside));
    row("x_down_decomposition", c.drift_x_down, mc.map(|m| m.x_down_decomposition));
    row("x_down_integrand", c.drift_x_down, mc.map(|m| m.x_down_integrand));
    let m = beta.min(delta);
    row("abs_moment_1_bound", 1.0 / m, mc.map(|m| m.abs_moments[0]));
    row("abs_moment_2_bound", 2.0 / (m * m), mc.map(|m| m.abs_moments[1]));
    emit(out, csv.as_str().as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_cone(ts: &[f64], reps: usize, seed: u64, out: Option<&Path>) -> Result<i32, HarnessError> {
    if ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(HarnessError::Usage("times must be finite and nonnegative".into()));
    }
    let mut csv = Csv::new(
        "cone",
        1,
        &[("replicas", reps.to_string()), ("seed", seed.to_string())],
        &["t", "replicas", "mean_sigma", "mean_reach", "reach_se", "exceed_4t", "chernoff"],
    );
    for &t in ts {
        let s = cone_stats(t, reps, seed);
        csv.row(&[
            Cell::F(t),
            Cell::U(reps),
            Cell::F(s.reach.mean + 1.0),
            Cell::F(s.reach.mean),
            Cell::F(s.reach.se),
            Cell::F(s.exceed_4t),
            Cell::F(s.chernoff),
        ]);
    }
    emit(out, csv.as_str().as_bytes())?;
    Ok(EXIT_OK)
}
