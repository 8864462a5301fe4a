//! One function per subcommand. Each writes its machine-readable outputs
//! into the configured directory next to `config.resolved`.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use storage_core::estimate::{lr_bootstrap_compare, BootstrapResult};
use storage_core::estimate::{ExperimentResult, ExperimentSpec};
use storage_core::estimate::monte_carlo_std;
use storage_core::rng::{derive_seed, Stream};
use storage_core::{
    estimate, fit_benchmark, parametric_bootstrap, price_stats, residual_diagnostics, run_experiment, run_filter,
    simulate_dgp, solve_price_function, BenchmarkModel, EstimationReport, FilterConfig, Params, Series,
};

use crate::config::{Command, RunConfig};
use crate::data::{load_prices, synthetic_dates, PriceData};
use crate::error::{CliError, CliResult};
use crate::report::{
    diagnostics_record, diagnostics_table, emit_report, series_csv, write_file, KvRecord, MISSING, PARAM_NAMES,
};

/// Name of the persisted configuration in every output directory.
pub const RESOLVED_CONFIG: &str = "config.resolved";

/// Validates the configuration, writes the resolved copy and dispatches.
/// Runs inside a dedicated thread pool when `threads > 0`.
pub fn run_command(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output).map_err(|e| CliError::io(&cfg.output, e))?;
    write_file(&cfg.output, RESOLVED_CONFIG, &cfg.resolved())?;
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
        pool.install(|| dispatch(cfg))
    } else {
        dispatch(cfg)
    }
}

fn dispatch(cfg: &RunConfig) -> CliResult<()> {
    match cfg.command {
        Command::Solve => solve(cfg),
        Command::Simulate => simulate(cfg),
        Command::Estimate => estimate_cmd(cfg),
        Command::Bootstrap => bootstrap(cfg),
        Command::Experiment => experiment(cfg),
        Command::Compare => compare(cfg),
        Command::Diagnose => diagnose(cfg),
    }
}

fn params_record(p: &Params) -> KvRecord {
    let mut kv = KvRecord::new();
    for (name, v) in PARAM_NAMES.iter().zip(p.theta()) {
        kv.float(*name, v);
    }
    kv.float("r", p.r);
    kv
}

fn input_data(cfg: &RunConfig) -> CliResult<PriceData> {
    let path = cfg.input.as_ref().ok_or_else(|| CliError::Usage(format!("`{}` needs --input", cfg.command.name())))?;
    let mut data = load_prices(path, cfg.frequency)?;
    if !cfg.normalize {
        data.series = Series::new(data.series.raw_values(), cfg.frequency)?;
    }
    for w in &data.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(data)
}

fn solve(cfg: &RunConfig) -> CliResult<()> {
    let params = cfg.params()?;
    let table = solve_price_function(&params, &cfg.solver())?;
    eprintln!("final_sup_change = {}", table.final_sup_change);
    let mut dump = Vec::new();
    table.write_dump(&mut dump).map_err(|e| CliError::io(cfg.output.join("price_function.txt"), e))?;
    let dump = String::from_utf8(dump).expect("dump is ASCII");
    write_file(&cfg.output, "price_function.txt", &dump)?;

    let mut kv = params_record(&params);
    kv.float("beta", params.beta())
        .int("iterations", table.iterations)
        .float("final_sup_change", table.final_sup_change)
        .float("max_monotonicity_violation", table.max_monotonicity_violation())
        .float("min_margin_over_floor", table.min_margin_over_floor())
        .float("threshold_price_at_zero_shock", table.threshold_price(0.0));
    write_file(&cfg.output, "results.kv", &kv.to_text())?;
    let report = format!(
        "Price function: {} x {} nodes, {} sweeps, final sup change {:.3e}\nthreshold price at z = 0: {:.4}\n",
        table.grid.nx(),
        table.grid.mz,
        table.iterations,
        table.final_sup_change,
        table.threshold_price(0.0)
    );
    write_file(&cfg.output, "report.txt", &report)
}

fn simulate(cfg: &RunConfig) -> CliResult<()> {
    let params = cfg.params()?;
    let table = solve_price_function(&params, &cfg.solver())?;
    let path = simulate_dgp(&params, &table, cfg.len, derive_seed(cfg.seed, Stream::Simulation, 0), cfg.shocks, cfg.frequency)?;
    let dates = synthetic_dates(cfg.len, cfg.frequency);
    let mut csv = String::from("date,price\n");
    for (d, p) in dates.iter().zip(&path.series.values) {
        let _ = writeln!(csv, "{d},{p}");
    }
    write_file(&cfg.output, "simulated.csv", &csv)?;
    write_file(&cfg.output, "shocks.csv", &series_csv(&dates, &path.shocks))?;

    let stats = price_stats(&path.series, Some(&table), Some(&path.shocks));
    let mut kv = params_record(&params);
    kv.int("len", stats.n)
        .float("mean", stats.mean)
        .float("sd", stats.sd)
        .opt("skewness", stats.skewness)
        .opt("kurtosis", stats.kurtosis)
        .opt("ac1", stats.ac1)
        .opt("ac2", stats.ac2)
        .opt("ac1_abs_diff", stats.ac1_abs_diff)
        .opt("stockout_frequency", stats.stockout_frequency);
    write_file(&cfg.output, "results.kv", &kv.to_text())?;
    let fmt = |v: Option<f64>| v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.4}"));
    let report = format!(
        "Simulated {} periods\nmean {:.4}  sd {:.4}  skewness {}  kurtosis {}\nAC(1) {}  AC(2) {}  AC(1) |diff| {}  stock-out frequency {}\n",
        stats.n,
        stats.mean,
        stats.sd,
        fmt(stats.skewness),
        fmt(stats.kurtosis),
        fmt(stats.ac1),
        fmt(stats.ac2),
        fmt(stats.ac1_abs_diff),
        fmt(stats.stockout_frequency)
    );
    write_file(&cfg.output, "report.txt", &report)
}

/// Estimates, optionally with Monte Carlo spread and bootstrap standard
/// errors; returns the report and the bootstrap run when one was made.
fn fit(cfg: &RunConfig, data: &PriceData, replicas: usize) -> CliResult<(EstimationReport, Option<BootstrapResult>)> {
    let start = cfg.params()?;
    let est = cfg.estimation();
    let mut report = estimate(&data.series, &start, &est)?;
    if cfg.mc_repeats >= 2 {
        report.mc_std = Some(monte_carlo_std(&data.series, &start, &est, cfg.mc_repeats)?);
    }
    let boot = if replicas > 0 {
        let b = parametric_bootstrap(&report.theta_hat, data.series.len(), cfg.frequency, replicas, &est, cfg.seed)?;
        report.bootstrap_se = Some(b.std_errors);
        Some(b)
    } else {
        None
    };
    Ok((report, boot))
}

fn failure(report: &EstimationReport) -> CliResult<()> {
    if report.failed {
        Err(CliError::Numerical(format!(
            "estimation failed (loglik {}, simplex diameter {:.3e})",
            report.loglik, report.diameter
        )))
    } else {
        Ok(())
    }
}

fn estimate_cmd(cfg: &RunConfig) -> CliResult<()> {
    let data = input_data(cfg)?;
    let (report, _) = fit(cfg, &data, cfg.replicas)?;
    emit_report(&report, &data.dates, data.series.normalization_factor, &KvRecord::new(), &cfg.output)?;
    failure(&report)
}

fn bootstrap_csv(boot: &BootstrapResult) -> String {
    let mut csv = String::from("replica,rho,a,b,delta,loglik\n");
    for (i, (e, ll)) in boot.estimates.iter().zip(&boot.logliks).enumerate() {
        match e {
            Some(p) => {
                let _ = writeln!(csv, "{i},{},{},{},{},{ll}", p.rho, p.a, p.b, p.delta);
            }
            None => {
                let _ = writeln!(csv, "{i},{MISSING},{MISSING},{MISSING},{MISSING},{MISSING}");
            }
        }
    }
    csv
}

fn bootstrap(cfg: &RunConfig) -> CliResult<()> {
    if cfg.replicas == 0 {
        return Err(CliError::Usage("bootstrap needs replicas >= 1".into()));
    }
    let data = input_data(cfg)?;
    let (report, boot) = fit(cfg, &data, cfg.replicas)?;
    let boot = boot.expect("replicas > 0");
    let mut extra = KvRecord::new();
    extra.int("bootstrap.replicas", cfg.replicas).int("bootstrap.failed", boot.failed);
    emit_report(&report, &data.dates, data.series.normalization_factor, &extra, &cfg.output)?;
    write_file(&cfg.output, "bootstrap.csv", &bootstrap_csv(&boot))?;
    failure(&report)
}

fn compare(cfg: &RunConfig) -> CliResult<()> {
    if cfg.replicas == 0 {
        return Err(CliError::Usage("compare needs replicas >= 1".into()));
    }
    let data = input_data(cfg)?;
    let (report, boot) = fit(cfg, &data, cfg.replicas)?;
    failure(&report)?;
    let boot = boot.expect("replicas > 0");
    let lr = lr_bootstrap_compare(&data.series, &report, cfg.competitor, &boot)?;
    let mut extra = KvRecord::new();
    extra
        .text("compare.competitor", cfg.competitor.to_string())
        .float("compare.competitor_loglik", lr.competitor_loglik)
        .float("compare.observed_lr", lr.observed_lr)
        .float("compare.rank", lr.rank)
        .int("compare.simulated", lr.simulated_lr.len())
        .int("compare.failed", lr.failed);
    emit_report(&report, &data.dates, data.series.normalization_factor, &extra, &cfg.output)?;
    write_file(&cfg.output, "bootstrap.csv", &bootstrap_csv(&boot))?;
    let mut csv = String::from("replica,lr\n");
    for (i, v) in lr.simulated_lr.iter().enumerate() {
        let _ = writeln!(csv, "{i},{v}");
    }
    write_file(&cfg.output, "simulated_lr.csv", &csv)?;
    let mut text = std::fs::read_to_string(cfg.output.join("report.txt")).map_err(|e| CliError::io(cfg.output.join("report.txt"), e))?;
    let _ = write!(
        text,
        "\nLikelihood-ratio comparison against {}\n  competitor loglik {:.2}\n  observed LR {:.2}\n  rank {:.1} of {} simulated ({} failed)\n",
        cfg.competitor,
        lr.competitor_loglik,
        lr.observed_lr,
        lr.rank,
        lr.simulated_lr.len(),
        lr.failed
    );
    write_file(&cfg.output, "report.txt", &text)
}

pub fn experiment_spec(cfg: &RunConfig) -> CliResult<ExperimentSpec> {
    Ok(ExperimentSpec {
        truth: cfg.params()?,
        len: cfg.len,
        replicas: cfg.replicas,
        periods_per_year: cfg.frequency,
        methods: cfg.methods.clone(),
        shocks: cfg.shocks,
        seed: cfg.seed,
        mc_repeats: cfg.mc_repeats,
        config: cfg.estimation(),
    })
}

fn experiment(cfg: &RunConfig) -> CliResult<()> {
    let spec = experiment_spec(cfg)?;
    let clock = Instant::now();
    let result = run_experiment(&spec)?;
    let elapsed = clock.elapsed().as_secs_f64();
    write_experiment(&result, &cfg.output)?;
    let mut timing = format!("# wall-clock timings, not reproducible\nelapsed_seconds = {elapsed}\n");
    for m in &result.methods {
        let tau = m.tau_seconds.map_or_else(|| MISSING.to_string(), |t| t.to_string());
        let _ = writeln!(timing, "{}.tau_seconds = {tau}", m.method.name());
    }
    write_file(&cfg.output, "timing.txt", &timing)
}

pub fn write_experiment(result: &ExperimentResult, dir: &Path) -> CliResult<()> {
    let spec = &result.spec;
    let mut kv = params_record(&spec.truth);
    kv.int("len", spec.len).int("replicas", spec.replicas);
    let mut report = format!(
        "Simulation study: T = {}, {} replicas, truth rho {} a {} b {} delta {}\n",
        spec.len, spec.replicas, spec.truth.rho, spec.truth.a, spec.truth.b, spec.truth.delta
    );
    let mut csv = String::from("method,replica,rho,a,b,delta,loglik,converged,failed\n");
    for m in &result.methods {
        let name = m.method.name();
        for (k, p) in PARAM_NAMES.iter().enumerate() {
            kv.float(format!("{name}.{p}.bias"), m.params[k].bias)
                .float(format!("{name}.{p}.sd"), m.params[k].sd)
                .float(format!("{name}.{p}.rmse"), m.params[k].rmse);
        }
        kv.float(format!("{name}.mean_loglik"), m.mean_loglik)
            .int(format!("{name}.used"), m.used)
            .int(format!("{name}.failed"), m.failed);
        for (k, p) in PARAM_NAMES.iter().chain(["loglik"].iter()).enumerate() {
            kv.opt(format!("{name}.{p}.mc_std"), m.mc_std.map(|s| s[k]));
        }

        let _ = writeln!(report, "\n{} ({} used, {} failed)", name.to_uppercase(), m.used, m.failed);
        let _ = writeln!(report, "{:<10}{:>12}{:>12}{:>12}{:>12}", "", "bias", "std.dev", "RMSE", "MC std");
        for (k, p) in PARAM_NAMES.iter().enumerate() {
            let mc = m.mc_std.map_or_else(|| MISSING.to_string(), |s| format!("{:.4}", s[k]));
            let _ = writeln!(
                report,
                "{:<10}{:>12.4}{:>12.4}{:>12.4}{:>12}",
                p, m.params[k].bias, m.params[k].sd, m.params[k].rmse, mc
            );
        }
        let mc = m.mc_std.map_or_else(|| MISSING.to_string(), |s| format!("{:.4}", s[4]));
        let _ = writeln!(report, "{:<10}{:>12.2}{:>12}{:>12}{:>12}", "loglik", m.mean_loglik, "", "", mc);

        for (i, e) in m.estimates.iter().enumerate() {
            match e {
                Some(e) => {
                    let p = e.params;
                    let _ = writeln!(
                        csv,
                        "{name},{i},{},{},{},{},{},{},{}",
                        p.rho, p.a, p.b, p.delta, e.loglik, e.converged, e.failed
                    );
                }
                None => {
                    let _ = writeln!(csv, "{name},{i},{MISSING},{MISSING},{MISSING},{MISSING},{MISSING},false,true");
                }
            }
        }
    }
    write_file(dir, "results.kv", &kv.to_text())?;
    write_file(dir, "report.txt", &report)?;
    write_file(dir, "estimates.csv", &csv)
}

/// Grid settings `(mz, mx1 = mx2)` for the sensitivity study.
pub const GRID_STUDY: [(usize, usize); 4] = [(32, 64), (64, 128), (64, 256), (128, 128)];

fn diagnose(cfg: &RunConfig) -> CliResult<()> {
    let data = input_data(cfg)?;
    let params = cfg.params()?;
    let filter_cfg = FilterConfig { track_states: true, ..cfg.filter() };
    let table = solve_price_function(&params, &cfg.solver())?;
    let out = run_filter(&table, &data.series, &filter_cfg, cfg.seed)?;
    let diag = out.is_finite().then(|| residual_diagnostics(&out.residual_eta));

    let mut kv = params_record(&params);
    kv.int("observations", data.series.len())
        .float("normalization_factor", data.series.normalization_factor)
        .float("loglik", out.loglik)
        .flag("filter.degenerate", out.degenerate);
    kv.append(&diagnostics_record(diag.as_ref()));
    let mut report = format!("Filter at the given parameters: loglik {:.2}\n\n", out.loglik);
    report.push_str(&diagnostics_table(diag.as_ref()));
    let _ = writeln!(report, "\nBenchmarks");
    for model in [BenchmarkModel::Ar1, BenchmarkModel::Garch, BenchmarkModel::MsAr1] {
        let name = model.name();
        match fit_benchmark(model, &data.series.values) {
            Ok(fit) => {
                kv.float(format!("{name}.loglik"), fit.loglik).flag(format!("{name}.converged"), fit.converged);
                let _ = write!(report, "  {name:<14} loglik {:>10.2} ", fit.loglik);
                for (p, v) in &fit.parameters {
                    kv.float(format!("{name}.{p}"), *v);
                    let _ = write!(report, " {p} {v:.4}");
                }
                let _ = writeln!(report);
            }
            Err(e) => {
                kv.text(format!("{name}.loglik"), MISSING);
                let _ = writeln!(report, "  {name:<14} not fitted: {e}");
            }
        }
    }

    if cfg.grid_study {
        let mut csv = String::from("mz,mx,loglik,ks_p,ljung_box_p\n");
        let _ = writeln!(report, "\nGrid sensitivity");
        for (mz, mx) in GRID_STUDY {
            let solver = storage_core::SolverConfig { mz, mx1: mx, mx2: mx, ..cfg.solver() };
            let t = solve_price_function(&params, &solver)?;
            let o = run_filter(&t, &data.series, &FilterConfig { track_states: false, ..filter_cfg }, cfg.seed)?;
            let d = o.is_finite().then(|| residual_diagnostics(&o.residual_eta));
            let ks = d.as_ref().and_then(|d| d.kolmogorov_smirnov_p);
            let lb = d.as_ref().and_then(|d| d.ljung_box_p);
            let f = |v: Option<f64>| v.map_or_else(|| MISSING.to_string(), |v| v.to_string());
            let _ = writeln!(csv, "{mz},{mx},{},{},{}", o.loglik, f(ks), f(lb));
            let _ = writeln!(report, "  mz {mz:>4} mx {mx:>4}  loglik {:>10.3}", o.loglik);
        }
        write_file(&cfg.output, "grid_study.csv", &csv)?;
    }

    write_file(&cfg.output, "results.kv", &kv.to_text())?;
    write_file(&cfg.output, "report.txt", &report)?;
    write_file(&cfg.output, "stockout.csv", &series_csv(&data.dates, &out.stockout_prob))?;
    write_file(&cfg.output, "storage.csv", &series_csv(&data.dates, &out.storage_median))
}
