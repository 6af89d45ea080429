use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::time::Instant;

use taxed_ruin::identities::{tax_npv, two_sided_exit, ConstantGammaOracle, ExitQuery, GerberShiu};
use taxed_ruin::inversion::InversionParams;
use taxed_ruin::montecarlo::{
    estimate_exit, estimate_gs_masses, estimate_npv, simulate_paths, write_paths_csv, Estimate, GsTarget, SimConfig,
};
use taxed_ruin::quad::QuadOptions;
use taxed_ruin::verify::{self, CheckOutcome, VerifyOptions};
use taxed_ruin::{LevyModel, Method, ScaleEngine, ScaleFunction};

use crate::config::{QueryConfig, RunConfig, ScaleMethod, Scenario, SimSection};
use crate::{Cli, CliError, Command};

const DEFAULT_SEED: u64 = 7;

pub(crate) fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None if cli.command == Command::Verify => RunConfig::parse("{}")?,
        None => return Err(CliError::Config("--config is required".into())),
    };
    match cli.command {
        Command::Eval => eval(cli, &config),
        Command::Simulate => simulate(cli, &config),
        Command::Verify => run_verify(cli, &config),
        Command::Scale => scale(cli, &config),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
}

fn sink(cli: &Cli, file: &str) -> Result<Box<dyn Write>, CliError> {
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Ok(Box::new(BufWriter::new(File::create(dir.join(file))?)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn quad_options(cli: &Cli, config: &RunConfig) -> QuadOptions {
    let tol = cli
        .tolerance
        .or(config.output.as_ref().and_then(|o| o.tolerance))
        .unwrap_or(QuadOptions::default().abs_tol);
    QuadOptions::with_tol(tol)
}

fn eval(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let model = config.model()?;
    let rule = config.rule()?;
    let opts = quad_options(cli, config);
    let x = rule.base();
    let oracle = rule
        .constant_rate()
        .map(|g| ConstantGammaOracle::new(&model, g, x))
        .transpose()?;
    let mut out = sink(cli, "eval.csv")?;
    let oracle_col = if oracle.is_some() { ",constant_rate_oracle" } else { "" };
    let oracle_doc = "# constant_rate_oracle: the same quantity from the constant-rate closed form";

    match config.query()? {
        QueryConfig::Exit { q, a, .. } => {
            writeln!(
                out,
                "# two-sided exit: value = E_x[exp(-q tau_a); tau_a < tau_0], x = {}",
                num(x)
            )?;
            if oracle.is_some() {
                writeln!(out, "{oracle_doc}")?;
            }
            writeln!(out, "q,a,value{oracle_col}")?;
            for q in q.points("query.q")? {
                for a in a.points("query.a")? {
                    let query = ExitQuery {
                        model: &model,
                        rule: &rule,
                        q,
                        x,
                        a,
                    };
                    let mut vals = vec![q, a, two_sided_exit(&query, &opts)?];
                    if let Some(o) = &oracle {
                        vals.push(o.exit(q, a)?);
                    }
                    writeln!(out, "{}", row(&vals))?;
                }
            }
        }
        QueryConfig::Npv { q, .. } => {
            writeln!(
                out,
                "# tax NPV: value = E_x[int_0^tau_0 exp(-qt) gamma(S_t) dS_t], x = {}",
                num(x)
            )?;
            if oracle.is_some() {
                writeln!(out, "{oracle_doc}")?;
            }
            writeln!(out, "q,value{oracle_col}")?;
            for q in q.points("query.q")? {
                let mut vals = vec![q, tax_npv(&model, &rule, q, x, &opts)?];
                if let Some(o) = &oracle {
                    vals.push(o.npv(q, &opts)?);
                }
                writeln!(out, "{}", row(&vals))?;
            }
        }
        QueryConfig::GsDensity {
            alpha,
            beta,
            theta,
            y,
            z,
            ..
        } => {
            let gs = GerberShiu::new(&model, &rule, *alpha, *beta, &opts)?;
            writeln!(
                out,
                "# Gerber-Shiu density in (theta, y, z): sup of U at ruin, U before ruin, deficit; alpha = {}, beta = {}, x = {}",
                num(*alpha),
                num(*beta),
                num(x)
            )?;
            writeln!(
                out,
                "# points with theta < x or y >= theta lie outside the support and are 0"
            )?;
            if oracle.is_some() {
                writeln!(out, "{oracle_doc}")?;
            }
            writeln!(out, "theta,y,z,value{oracle_col}")?;
            for t in theta.points("query.theta")? {
                for yv in y.points("query.y")? {
                    for zv in z.points("query.z")? {
                        let inside = t >= x && yv < t;
                        let value = if inside { gs.density(t, yv, zv)? } else { 0.0 };
                        let mut vals = vec![t, yv, zv, value];
                        if let Some(o) = &oracle {
                            vals.push(if inside {
                                o.gs_density(*alpha, *beta, t, yv, zv)?
                            } else {
                                0.0
                            });
                        }
                        writeln!(out, "{}", row(&vals))?;
                    }
                }
            }
        }
        QueryConfig::GsCreep { alpha, beta, theta, .. } => {
            let gs = GerberShiu::new(&model, &rule, *alpha, *beta, &opts)?;
            writeln!(
                out,
                "# creeping density in theta; alpha = {}, beta = {}, x = {}",
                num(*alpha),
                num(*beta),
                num(x)
            )?;
            if oracle.is_some() {
                writeln!(out, "{oracle_doc}")?;
            }
            writeln!(out, "theta,value{oracle_col}")?;
            for t in theta.points("query.theta")? {
                let mut vals = vec![t, gs.creep(t)?];
                if let Some(o) = &oracle {
                    vals.push(o.gs_creep(*alpha, *beta, t)?);
                }
                writeln!(out, "{}", row(&vals))?;
            }
        }
        QueryConfig::GsMass {
            alpha, beta, region, ..
        } => {
            let gs = GerberShiu::new(&model, &rule, *alpha, *beta, &opts)?;
            let r = region.build();
            let mass = gs.mass(&r)?;
            writeln!(
                out,
                "# discounted ruin masses; box theta in ({}, {}], y in ({}, {}], z in ({}, {}]; alpha = {}, beta = {}",
                num(r.theta.0),
                num(r.theta.1),
                num(r.y.0),
                num(r.y.1),
                num(r.z.0),
                num(r.z.1),
                num(*alpha),
                num(*beta)
            )?;
            writeln!(
                out,
                "# overshoot: claim from below the maximum; atom: claim at the maximum; creep: theta range only"
            )?;
            writeln!(out, "event,value")?;
            writeln!(out, "overshoot,{}", num(mass.overshoot))?;
            writeln!(out, "atom,{}", num(mass.atom))?;
            writeln!(out, "creep,{}", num(gs.creep_mass(r.theta)?))?;
            writeln!(out, "any_ruin,{}", num(gs.total_mass()?))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn sim_config(cli: &Cli, sim: &SimSection) -> SimConfig {
    let mut cfg = SimConfig::new(sim.n_paths, cli.seed.unwrap_or(sim.seed));
    cfg.step = sim.step;
    cfg.horizon = sim.horizon;
    cfg.acknowledge_horizon = sim.acknowledge_horizon;
    cfg
}

fn estimate_row(prefix: &[f64], est: &Estimate, analytic: f64) -> String {
    let mut cells: Vec<String> = prefix.iter().map(|&v| num(v)).collect();
    cells.extend([
        num(est.mean),
        num(est.std_error),
        est.n.to_string(),
        num(est.bias_bound),
        num(analytic),
    ]);
    cells.join(",")
}

fn simulate(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let model = config.model()?;
    let rule = config.rule()?;
    let opts = quad_options(cli, config);
    let sim = config
        .sim
        .as_ref()
        .ok_or_else(|| CliError::Config("sim: section is required".into()))?;
    let mut cfg = sim_config(cli, sim);
    for w in cfg.warnings(&model, &rule) {
        eprintln!("taxed-ruin: warning: {w}");
    }
    let x = rule.base();
    let mut out = sink(cli, "simulate.csv")?;
    writeln!(
        out,
        "# {} paths, seed {}, horizon {}, Euler step {} (Gaussian models only)",
        cfg.n_paths,
        cfg.seed,
        num(cfg.horizon),
        num(cfg.step)
    )?;
    writeln!(
        out,
        "# bias_bound: bound on the error from censoring paths at the horizon; analytic: the identity"
    )?;
    let est_cols = "mean,std_error,n,bias_bound,analytic";

    match config.query()? {
        QueryConfig::Exit { q, a, .. } => {
            let (qs, as_) = (q.points("query.q")?, a.points("query.a")?);
            writeln!(out, "# E_x[exp(-q tau_a); tau_a < tau_0], x = {}", num(x))?;
            writeln!(out, "q,a,{est_cols}")?;
            for &q in &qs {
                for &a in &as_ {
                    let est = estimate_exit(&model, &rule, q, a, &cfg)?;
                    let query = ExitQuery {
                        model: &model,
                        rule: &rule,
                        q,
                        x,
                        a,
                    };
                    writeln!(out, "{}", estimate_row(&[q, a], &est, two_sided_exit(&query, &opts)?))?;
                }
            }
            cfg.barrier = Some(as_[0]);
            cfg.tax_discount = qs[0];
        }
        QueryConfig::Npv { q, .. } => {
            let qs = q.points("query.q")?;
            writeln!(out, "# E_x[int_0^tau_0 exp(-qt) gamma(S_t) dS_t], x = {}", num(x))?;
            writeln!(out, "q,{est_cols}")?;
            for &q in &qs {
                let est = estimate_npv(&model, &rule, q, &cfg)?;
                writeln!(
                    out,
                    "{}",
                    estimate_row(&[q], &est, tax_npv(&model, &rule, q, x, &opts)?)
                )?;
            }
            cfg.tax_discount = qs[0];
        }
        QueryConfig::GsMass {
            alpha, beta, region, ..
        } => {
            let r = region.build();
            let targets = [GsTarget::Jump(r), GsTarget::Creep { theta: r.theta }, GsTarget::AnyRuin];
            let est = estimate_gs_masses(&model, &rule, *alpha, *beta, &targets, &cfg)?;
            let gs = GerberShiu::new(&model, &rule, *alpha, *beta, &opts)?;
            let analytic = [gs.mass(&r)?.total(), gs.creep_mass(r.theta)?, gs.total_mass()?];
            writeln!(
                out,
                "# E_x[exp(-alpha kappa - beta (tau_0 - kappa)); event], alpha = {}, beta = {}",
                num(*alpha),
                num(*beta)
            )?;
            writeln!(
                out,
                "# jump_region: claim ruin in the configured box (atom included); creep: theta range only"
            )?;
            writeln!(out, "event,{est_cols}")?;
            for (name, (e, v)) in ["jump_region", "creep", "any_ruin"]
                .iter()
                .zip(est.iter().zip(analytic))
            {
                writeln!(out, "{name},{}", estimate_row(&[], e, v))?;
            }
        }
        QueryConfig::GsDensity { .. } | QueryConfig::GsCreep { .. } => {
            return Err(CliError::Config(
                "query.functional: simulate supports exit, npv and gs_mass".into(),
            ))
        }
    }
    out.flush()?;

    if sim.dump_paths {
        if cli.out.is_none() {
            return Err(CliError::Config("sim.dump_paths needs --out".into()));
        }
        let records = simulate_paths(&model, &rule, &cfg)?;
        let mut dump = sink(cli, "paths.csv")?;
        write_paths_csv(&mut dump, &records)?;
        dump.flush()?;
    }
    Ok(())
}

fn run_verify(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let section = config.verify.clone().unwrap_or(crate::config::VerifySection {
        scenario: Scenario::Default,
        seed: None,
        checks: None,
    });
    let seed = cli.seed.or(section.seed).unwrap_or(DEFAULT_SEED);
    let mut opts = match section.scenario {
        Scenario::Default => VerifyOptions::full(seed),
        Scenario::Quick => VerifyOptions::quick(seed),
    };
    opts.quad = quad_options(cli, config);
    if let Some(names) = &section.checks {
        for n in names {
            if !verify::CHECKS.iter().any(|(name, _)| name == n) {
                let known: Vec<&str> = verify::CHECKS.iter().map(|c| c.0).collect();
                return Err(CliError::Config(format!(
                    "verify.checks: unknown check {n:?}, expected one of {known:?}"
                )));
            }
        }
    }
    let mut rows: Vec<CheckOutcome> = Vec::new();
    for (name, check) in verify::CHECKS.iter() {
        if section.checks.as_ref().is_some_and(|c| !c.iter().any(|n| n == name)) {
            continue;
        }
        let start = Instant::now();
        let group = check(&opts)?;
        let failed = group.iter().filter(|r| !r.pass).count();
        eprintln!(
            "{:<20} {} ({} rows, {:.2} s)",
            name,
            if failed == 0 { "PASS" } else { "FAIL" },
            group.len(),
            start.elapsed().as_secs_f64()
        );
        rows.extend(group);
    }
    let mut out = sink(cli, "verify_report.csv")?;
    verify::write_report(&mut out, &rows)?;
    out.flush()?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}

fn scale(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let model = config.model()?;
    let section = config
        .scale
        .as_ref()
        .ok_or_else(|| CliError::Config("scale: section is required".into()))?;
    let method = match section.method.unwrap_or(ScaleMethod::ClosedForm) {
        ScaleMethod::ClosedForm => Method::ClosedForm,
        ScaleMethod::LaplaceInversion => Method::LaplaceInversion,
    };
    let mut out = sink(cli, "scale.csv")?;
    writeln!(
        out,
        "# q-scale function W^(q) and derivatives ({method:?}); w_second is empty without a Gaussian part"
    )?;
    writeln!(out, "q,phi,x,w,w_prime,w_second")?;
    for q in section.q.points("scale.q")? {
        let engine = ScaleEngine::with_method(&model, q, method, InversionParams::default())?;
        for x in section.x.points("scale.x")? {
            write_scale_row(&mut out, &engine, &model, q, x)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_scale_row(out: &mut dyn Write, e: &ScaleEngine, model: &LevyModel, q: f64, x: f64) -> Result<(), CliError> {
    let w = e.w(x)?;
    let w1 = if x >= 0.0 { num(e.w_prime(x)?) } else { String::new() };
    let w2 = if model.sigma() > 0.0 && x >= 0.0 {
        num(e.w_second(x)?)
    } else {
        String::new()
    };
    writeln!(out, "{},{},{},{},{},{}", num(q), num(e.phi()), num(x), num(w), w1, w2)?;
    Ok(())
}
