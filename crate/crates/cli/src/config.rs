//! Run configuration: built-in defaults, then a `key = value` file, then
//! command-line flags, each layer overriding the previous one.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use storage_core::estimate::Competitor;
use storage_core::{
    period_rate, BenchmarkModel, CmlConfig, EstimationConfig, FilterConfig, Method, NelderMeadOptions, Params,
    Preset, ShockDistribution, SolverConfig,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Simulate,
    Estimate,
    Bootstrap,
    Experiment,
    Compare,
    Diagnose,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Solve,
        Command::Simulate,
        Command::Estimate,
        Command::Bootstrap,
        Command::Experiment,
        Command::Compare,
        Command::Diagnose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Bootstrap => "bootstrap",
            Command::Experiment => "experiment",
            Command::Compare => "compare",
            Command::Diagnose => "diagnose",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown command `{s}`")))
    }
}

/// Every setting of a run. Fields that only some commands use are still
/// resolved, so the persisted file always describes the run completely.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: PathBuf,
    pub frequency: u32,
    pub rho: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub delta: Option<f64>,
    pub annual_rate: f64,
    pub method: Method,
    pub particles: usize,
    pub resample_grid: usize,
    pub quad_order: usize,
    pub mz: usize,
    pub mx1: usize,
    pub mx2: usize,
    pub p_max: f64,
    pub c: f64,
    pub iterations: usize,
    pub n_i: usize,
    pub n_t: usize,
    pub n_g: usize,
    pub max_evaluations: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub initial_step: f64,
    pub fixed_rho: Option<f64>,
    pub seed: u64,
    pub replicas: usize,
    pub len: usize,
    pub mc_repeats: usize,
    pub methods: Vec<Method>,
    pub competitor: Competitor,
    pub shocks: ShockDistribution,
    pub threads: usize,
    pub grid_study: bool,
    /// Rescale input prices to unit mean before estimation.
    pub normalize: bool,
}

/// Keys accepted in configuration files and by `--set`.
pub const KEYS: [&str; 37] = [
    "command",
    "input",
    "output",
    "frequency",
    "rho",
    "a",
    "b",
    "delta",
    "annual_rate",
    "method",
    "particles",
    "resample_grid",
    "quad_order",
    "mz",
    "mx1",
    "mx2",
    "p_max",
    "c",
    "iterations",
    "n_i",
    "n_t",
    "n_g",
    "max_evaluations",
    "f_tol",
    "x_tol",
    "initial_step",
    "fixed_rho",
    "seed",
    "replicas",
    "len",
    "mc_repeats",
    "methods",
    "competitor",
    "shocks",
    "threads",
    "grid_study",
    "normalize",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|_| CliError::Usage(format!("invalid value `{value}` for `{key}`")))
}

fn parse_optional_f64(key: &str, value: &str) -> CliResult<Option<f64>> {
    if value.is_empty() || value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_shocks(value: &str) -> CliResult<ShockDistribution> {
    if value == "gaussian" {
        return Ok(ShockDistribution::Gaussian);
    }
    match value.strip_prefix("t:") {
        Some(dof) => ShockDistribution::scaled_student_t(parse("shocks", dof)?).map_err(CliError::from),
        None => Err(CliError::Usage(format!("invalid shock law `{value}` (expected gaussian or t:<dof>)"))),
    }
}

fn shocks_name(s: &ShockDistribution) -> String {
    match s {
        ShockDistribution::Gaussian => "gaussian".into(),
        ShockDistribution::ScaledStudentT { dof } => format!("t:{dof}"),
    }
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl RunConfig {
    /// Defaults mirror the reference settings; replica and length defaults
    /// depend on the command.
    pub fn defaults(command: Command) -> Self {
        let solver = SolverConfig::default();
        let cml = CmlConfig::default();
        let nm = NelderMeadOptions::default();
        let filter = FilterConfig::default();
        let (replicas, len, mc_repeats) = match command {
            Command::Bootstrap | Command::Compare => (100, 0, 0),
            Command::Experiment => (20, 500, 10),
            Command::Simulate => (0, 1000, 0),
            _ => (0, 0, 0),
        };
        Self {
            command,
            input: None,
            output: PathBuf::from("out"),
            frequency: 12,
            rho: None,
            a: None,
            b: None,
            delta: None,
            annual_rate: 0.05,
            method: Method::Sml,
            particles: filter.particles,
            resample_grid: filter.resample_grid,
            quad_order: filter.quad_order,
            mz: solver.mz,
            mx1: solver.mx1,
            mx2: solver.mx2,
            p_max: solver.p_max,
            c: solver.c,
            iterations: solver.iterations,
            n_i: cml.n_i,
            n_t: cml.n_t,
            n_g: cml.n_g,
            max_evaluations: nm.max_evaluations,
            f_tol: nm.f_tol,
            x_tol: nm.x_tol,
            initial_step: nm.initial_step,
            fixed_rho: None,
            seed: 1,
            replicas,
            len,
            mc_repeats,
            methods: vec![Method::Sml, Method::Cml],
            competitor: Competitor::Benchmark(BenchmarkModel::Ar1),
            shocks: ShockDistribution::Gaussian,
            threads: 0,
            grid_study: false,
            normalize: true,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let value = value.trim();
        match key {
            "command" => {
                let c = Command::parse(value)?;
                if c != self.command {
                    return Err(CliError::Usage(format!(
                        "configuration is for `{value}` but the command is `{}`",
                        self.command.name()
                    )));
                }
            }
            "input" => self.input = if value.is_empty() || value == "none" { None } else { Some(PathBuf::from(value)) },
            "output" => self.output = PathBuf::from(value),
            "frequency" => {
                let f: u32 = parse(key, value)?;
                if Preset::from_frequency(f).is_none() {
                    return Err(CliError::Usage(format!("frequency must be 1, 12 or 52, got {f}")));
                }
                self.frequency = f;
            }
            "rho" => self.rho = parse_optional_f64(key, value)?,
            "a" => self.a = parse_optional_f64(key, value)?,
            "b" => self.b = parse_optional_f64(key, value)?,
            "delta" => self.delta = parse_optional_f64(key, value)?,
            "annual_rate" => self.annual_rate = parse(key, value)?,
            "method" => self.method = value.parse()?,
            "particles" => self.particles = parse(key, value)?,
            "resample_grid" => self.resample_grid = parse(key, value)?,
            "quad_order" => self.quad_order = parse(key, value)?,
            "mz" => self.mz = parse(key, value)?,
            "mx1" => self.mx1 = parse(key, value)?,
            "mx2" => self.mx2 = parse(key, value)?,
            "p_max" => self.p_max = parse(key, value)?,
            "c" => self.c = parse(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "n_i" => self.n_i = parse(key, value)?,
            "n_t" => self.n_t = parse(key, value)?,
            "n_g" => self.n_g = parse(key, value)?,
            "max_evaluations" => self.max_evaluations = parse(key, value)?,
            "f_tol" => self.f_tol = parse(key, value)?,
            "x_tol" => self.x_tol = parse(key, value)?,
            "initial_step" => self.initial_step = parse(key, value)?,
            "fixed_rho" => self.fixed_rho = parse_optional_f64(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "replicas" => self.replicas = parse(key, value)?,
            "len" => self.len = parse(key, value)?,
            "mc_repeats" => self.mc_repeats = parse(key, value)?,
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(|m| m.trim().parse::<Method>().map_err(CliError::from))
                    .collect::<CliResult<_>>()?;
            }
            "competitor" => self.competitor = value.parse()?,
            "shocks" => self.shocks = parse_shocks(value)?,
            "threads" => self.threads = parse(key, value)?,
            "grid_study" => self.grid_study = parse(key, value)?,
            "normalize" => self.normalize = parse(key, value)?,
            other => return Err(CliError::Usage(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> CliResult<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Data {
                path: origin.to_path_buf(),
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value).map_err(|e| match e {
                CliError::Usage(message) => CliError::Data { path: origin.to_path_buf(), line: idx + 1, message },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(&text, path)
    }

    /// The fully resolved configuration in `key = value` form, which
    /// reproduces the run when read back.
    pub fn resolved(&self) -> String {
        let params = self.params().ok();
        let theta = |f: fn(&Params) -> f64, own: Option<f64>| own.or(params.as_ref().map(f));
        let mut out = String::from("# resolved configuration\n");
        let entries: Vec<(&str, String)> = vec![
            ("command", self.command.name().to_string()),
            ("input", self.input.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string())),
            ("output", self.output.display().to_string()),
            ("frequency", self.frequency.to_string()),
            ("rho", optional(theta(|p| p.rho, self.rho))),
            ("a", optional(theta(|p| p.a, self.a))),
            ("b", optional(theta(|p| p.b, self.b))),
            ("delta", optional(theta(|p| p.delta, self.delta))),
            ("annual_rate", self.annual_rate.to_string()),
            ("method", self.method.name().to_string()),
            ("particles", self.particles.to_string()),
            ("resample_grid", self.resample_grid.to_string()),
            ("quad_order", self.quad_order.to_string()),
            ("mz", self.mz.to_string()),
            ("mx1", self.mx1.to_string()),
            ("mx2", self.mx2.to_string()),
            ("p_max", self.p_max.to_string()),
            ("c", self.c.to_string()),
            ("iterations", self.iterations.to_string()),
            ("n_i", self.n_i.to_string()),
            ("n_t", self.n_t.to_string()),
            ("n_g", self.n_g.to_string()),
            ("max_evaluations", self.max_evaluations.to_string()),
            ("f_tol", self.f_tol.to_string()),
            ("x_tol", self.x_tol.to_string()),
            ("initial_step", self.initial_step.to_string()),
            ("fixed_rho", optional(self.fixed_rho)),
            ("seed", self.seed.to_string()),
            ("replicas", self.replicas.to_string()),
            ("len", self.len.to_string()),
            ("mc_repeats", self.mc_repeats.to_string()),
            ("methods", self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")),
            ("competitor", self.competitor.to_string()),
            ("shocks", shocks_name(&self.shocks)),
            ("threads", self.threads.to_string()),
            ("grid_study", self.grid_study.to_string()),
            ("normalize", self.normalize.to_string()),
        ];
        debug_assert_eq!(entries.len(), KEYS.len());
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Structural parameters: the preset for the frequency, overridden by
    /// any explicitly set value, with the per-period interest rate.
    pub fn params(&self) -> CliResult<Params> {
        let preset = Preset::from_frequency(self.frequency)
            .ok_or_else(|| CliError::Usage(format!("frequency must be 1, 12 or 52, got {}", self.frequency)))?;
        let base: Params = preset.params();
        let p = Params {
            rho: self.rho.unwrap_or(base.rho),
            a: self.a.unwrap_or(base.a),
            b: self.b.unwrap_or(base.b),
            delta: self.delta.unwrap_or(base.delta),
            r: period_rate(self.annual_rate, self.frequency),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig { mz: self.mz, mx1: self.mx1, mx2: self.mx2, p_max: self.p_max, c: self.c, iterations: self.iterations }
    }

    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            particles: self.particles,
            quad_order: self.quad_order,
            resample_grid: self.resample_grid,
            track_states: true,
        }
    }

    pub fn cml(&self) -> CmlConfig {
        CmlConfig { n_i: self.n_i, n_t: self.n_t, n_g: self.n_g, quad_order: self.quad_order, ..CmlConfig::default() }
    }

    pub fn optimizer(&self) -> NelderMeadOptions {
        NelderMeadOptions {
            f_tol: self.f_tol,
            x_tol: self.x_tol,
            max_evaluations: self.max_evaluations,
            initial_step: self.initial_step,
        }
    }

    pub fn estimation(&self) -> EstimationConfig {
        EstimationConfig {
            method: self.method,
            solver: self.solver(),
            filter: self.filter(),
            cml: self.cml(),
            optimizer: self.optimizer(),
            fixed_rho: self.fixed_rho,
            seed: self.seed,
        }
    }

    /// Checks settings that every command depends on.
    pub fn validate(&self) -> CliResult<()> {
        let params = self.params()?;
        if params.delta <= 0.0 {
            return Err(CliError::Usage("delta must be positive: with delta = 0 the stock grid is unbounded".into()));
        }
        self.solver().validate()?;
        self.filter().validate()?;
        if self.methods.is_empty() {
            return Err(CliError::Usage("`methods` must name at least one estimator".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::defaults(Command::Estimate);
        cfg.set("seed", "42").unwrap();
        cfg.set("rho", "0.5").unwrap();
        cfg.set("shocks", "t:5").unwrap();
        cfg.set("methods", "cml").unwrap();
        let text = cfg.resolved();
        let mut back = RunConfig::defaults(Command::Estimate);
        back.apply_text(&text, Path::new("resolved")).unwrap();
        assert_eq!(back.params().unwrap(), cfg.params().unwrap());
        assert_eq!(back.resolved(), text);
        assert_eq!(back.seed, 42);
    }

    #[test]
    fn comments_and_errors() {
        let mut cfg = RunConfig::defaults(Command::Solve);
        cfg.apply_text("# header\nmz = 32 # coarse\n\n", Path::new("f")).unwrap();
        assert_eq!(cfg.mz, 32);
        let err = cfg.apply_text("mz = 32\nbogus\n", Path::new("f")).unwrap_err();
        assert!(matches!(err, CliError::Data { line: 2, .. }));
        assert!(matches!(cfg.set("nonsense", "1"), Err(CliError::Usage(_))));
        assert!(cfg.set("command", "estimate").is_err());
    }

    #[test]
    fn zero_depreciation_is_a_usage_error() {
        let mut cfg = RunConfig::defaults(Command::Solve);
        cfg.set("delta", "0").unwrap();
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
    }
}
