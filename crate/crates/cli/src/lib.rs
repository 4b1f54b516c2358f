//! Command-line front end: argument definitions, configuration merging and
//! the subcommands. `main.rs` only prints and sets the exit code.

pub mod config;
pub mod data;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use glme::nonstationary::LocationFit;
use glme::simulation::{default_sizes, DEFAULT_XIS};
use glme::{
    fit_glme, fit_gmle, fit_lme, fit_mle, fit_ns_glme, fit_ns_lme, grid_cells, mann_kendall, ns_return_level,
    profile_xi, return_level, run_grid, CovMethod, Design, FitOptions, GevParams, Method, NsOptions, Penalty,
    ProfileMethod, Scenario, SimMethod,
};

use crate::config::{parse_grid, parse_list, Config};
use crate::data::Dataset;
use crate::error::{CliError, CliResult};
use crate::output::*;

pub const DEFAULT_PERIODS: [f64; 3] = [50.0, 100.0, 200.0];
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_GRID: &str = "-0.9:0.5:0.01";

#[derive(Debug, Parser)]
#[command(name = "glme", version, about = "GEV estimation by L-moments, likelihood and generalized L-moments")]
pub struct Cli {
    /// Seed for bootstrap covariances, optimizer restarts and simulation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format: table, csv or json.
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// Configuration file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a stationary GEV and report return levels.
    Fit(FitArgs),
    /// Fit a GEV with linear location and log-linear scale in the covariates.
    FitNs(FitNsArgs),
    /// Monte Carlo comparison of estimators of the 100-year return level.
    Simulate(SimulateArgs),
    /// Profile of the fitting criterion over a grid of shape values.
    Profile(ProfileArgs),
    /// Mann-Kendall trend test against the observation order.
    Trend(TrendArgs),
    /// Return levels of a given GEV.
    Returns(ReturnsArgs),
}

#[derive(Debug, Args, Default)]
pub struct EstimationArgs {
    /// Penalty on the shape, e.g. `beta_adaptive:choice=6`, `normal:2`, `cd`, `beta_fixed:ms`, `flat`.
    #[arg(long)]
    pub penalty: Option<String>,
    /// Weight of the penalty in the GLME objective.
    #[arg(long)]
    pub alpha_n: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub input: PathBuf,
    /// lme, mle, gmle or glme.
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub est: EstimationArgs,
    /// Covariance of the sample L-moments for GLME: bootstrap or exact.
    #[arg(long)]
    pub cov: Option<String>,
    /// Bootstrap resamples.
    #[arg(long)]
    pub bootstrap_b: Option<usize>,
    /// Comma-separated return periods.
    #[arg(long)]
    pub return_periods: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitNsArgs {
    pub input: PathBuf,
    /// lme or glme.
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub est: EstimationArgs,
    /// Location regression: tukey or ols.
    #[arg(long)]
    pub location_fit: Option<String>,
    /// Replicates for the Gumbel reference covariance.
    #[arg(long)]
    pub cov_b: Option<usize>,
    #[arg(long)]
    pub return_periods: Option<String>,
    /// Also report the return levels at every row.
    #[arg(long)]
    pub series: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// stationary or gev11.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated shapes.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    pub n: Option<String>,
    /// Comma-separated methods: lme, mle, glme.n.cK, glme.b.cK.
    #[arg(long)]
    pub methods: Option<String>,
    /// Trials per cell.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Bootstrap (or Gumbel reference) replicates per fit.
    #[arg(long)]
    pub cov_b: Option<usize>,
    /// Suppress progress messages.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    pub input: PathBuf,
    /// Curve to compute; repeat for several. `mle`, `gmle:<penalty>`, `flat`,
    /// `glme:<penalty>`, `glme.n.cK` or `glme.b.cK`.
    #[arg(long = "method")]
    pub methods: Vec<String>,
    /// Shape grid: `lo:hi:step`, a comma list or one value.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub alpha_n: Option<f64>,
    #[arg(long)]
    pub cov: Option<String>,
    #[arg(long)]
    pub bootstrap_b: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrendArgs {
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReturnsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    /// Scale; alternatively give `--log-sigma`.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub log_sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi: f64,
    /// Location slope; the location at time `t` is `mu + mu_slope * t`.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub mu_slope: f64,
    /// Log-scale slope; the scale at time `t` is `sigma * exp(sigma_slope * t)`.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub sigma_slope: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long)]
    pub return_periods: Option<String>,
}

/// Text for standard output and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, exit_code: 0 }
    }
}

/// Settings shared by all subcommands after merging flags and config.
pub struct Context {
    pub config: Config,
    pub seed: u64,
    pub format: Option<Format>,
}

impl Context {
    pub fn new(cli: &Cli) -> CliResult<Self> {
        let config = match &cli.config {
            Some(p) => Config::from_path(p)?,
            None => Config::default(),
        };
        let seed = config.pick(cli.seed, "seed", DEFAULT_SEED)?;
        let format = match cli.format {
            Some(f) => Some(f),
            None => config.parsed("format")?,
        };
        Ok(Context { config, seed, format })
    }

    /// Thread count from the flag or config, if either sets one.
    pub fn threads(&self, flag: Option<usize>) -> CliResult<Option<usize>> {
        match flag {
            Some(t) => Ok(Some(t)),
            None => self.config.parsed("threads"),
        }
    }

    fn periods(&self, flag: &Option<String>) -> CliResult<Vec<f64>> {
        let text = flag.as_deref().or(self.config.get("return_periods"));
        let periods = match text {
            Some(t) => parse_list(t, "return periods")?,
            None => DEFAULT_PERIODS.to_vec(),
        };
        if let Some(p) = periods.iter().find(|p| !(**p > 1.0) || !p.is_finite()) {
            return Err(CliError::input(format!("return period must exceed 1, got {p}")));
        }
        Ok(periods)
    }

    fn text(&self, flag: &Option<String>, key: &str, default: &str) -> String {
        flag.clone().or_else(|| self.config.get(key).map(str::to_string)).unwrap_or_else(|| default.to_string())
    }

    fn penalty(&self, est: &EstimationArgs) -> CliResult<Penalty> {
        Ok(self.text(&est.penalty, "penalty", "flat").parse::<Penalty>()?)
    }

    fn cov(&self, method: &Option<String>, b: Option<usize>) -> CliResult<CovMethod> {
        let b = self.config.pick(b, "bootstrap_b", 1000usize)?;
        match self.text(method, "cov", "bootstrap").to_ascii_lowercase().as_str() {
            "bootstrap" => {
                if b < 10 {
                    return Err(CliError::input("bootstrap_b must be at least 10"));
                }
                Ok(CovMethod::Bootstrap { b })
            }
            "exact" => Ok(CovMethod::Exact),
            other => Err(CliError::input(format!("unknown covariance method '{other}' (bootstrap, exact)"))),
        }
    }
}

/// Run a parsed command line. `progress` receives status lines meant for
/// standard error.
pub fn run(cli: &Cli, progress: &mut dyn FnMut(&str)) -> CliResult<Outcome> {
    let ctx = Context::new(cli)?;
    let format = |default: Format| ctx.format.unwrap_or(default);
    match &cli.command {
        Command::Fit(a) => {
            let (out, converged) = cmd_fit(&ctx, a)?;
            let stdout = out.render(format(Format::Table))?;
            Ok(Outcome { stdout, exit_code: if converged { 0 } else { 2 } })
        }
        Command::FitNs(a) => {
            let out = cmd_fit_ns(&ctx, a)?;
            let exit_code = if out.converged { 0 } else { 2 };
            Ok(Outcome { stdout: out.render(format(Format::Table))?, exit_code })
        }
        Command::Simulate(a) => Ok(Outcome::ok(cmd_simulate(&ctx, a, progress)?.render(format(Format::Csv))?)),
        Command::Profile(a) => Ok(Outcome::ok(cmd_profile(&ctx, a)?.render(format(Format::Table))?)),
        Command::Trend(a) => Ok(Outcome::ok(cmd_trend(&Dataset::from_path(&a.input)?)?.render(format(Format::Table))?)),
        Command::Returns(a) => Ok(Outcome::ok(cmd_returns(&ctx, a)?.render(format(Format::Table))?)),
    }
}

fn return_levels(params: &GevParams, periods: &[f64]) -> CliResult<Vec<ReturnLevel>> {
    periods.iter().map(|&p| Ok(ReturnLevel { period: p, level: return_level(params, p)? })).collect()
}

pub fn cmd_fit(ctx: &Context, a: &FitArgs) -> CliResult<(FitOutput, bool)> {
    let data = Dataset::from_path(&a.input)?;
    let method: Method = ctx.text(&a.method, "method", "lme").parse()?;
    let penalty = ctx.penalty(&a.est)?;
    let opts = FitOptions {
        alpha_n: ctx.config.pick(a.est.alpha_n, "alpha_n", 1.0)?,
        cov: ctx.cov(&a.cov, a.bootstrap_b)?,
        seed: ctx.seed,
        ..FitOptions::default()
    };
    let periods = ctx.periods(&a.return_periods)?;
    let x = &data.values;
    let fit = match method {
        Method::Lme => fit_lme(x)?,
        Method::Mle => fit_mle(x, None, &opts)?,
        Method::Gmle => fit_gmle(x, &penalty, &opts)?,
        Method::Glme => fit_glme(x, &penalty, &opts)?,
    };
    let out = FitOutput {
        source: data.source_path.clone(),
        n: data.len(),
        method: method.to_string(),
        penalty: fit.penalty.to_string(),
        alpha_n: fit.alpha_n,
        mu: fit.params.mu,
        sigma: fit.params.sigma,
        xi: fit.params.xi,
        objective: fit.objective_value,
        converged: fit.converged,
        evaluations: fit.evaluations,
        return_levels: return_levels(&fit.params, &periods)?,
    };
    Ok((out, fit.converged))
}

/// Design columns for a nonstationary fit: the covariates if any, else the
/// time index `year - first_year + 1`.
fn ns_design(data: &Dataset) -> CliResult<(Design, Vec<String>)> {
    if !data.covariates.is_empty() {
        let cols: Vec<Vec<f64>> = data.covariates.iter().map(|(_, c)| c.clone()).collect();
        let names = data.covariates.iter().map(|(n, _)| n.clone()).collect();
        return Ok((Design::from_columns(&cols)?, names));
    }
    match &data.year {
        Some(years) => {
            let t: Vec<f64> = years.iter().map(|y| (y - years[0] + 1) as f64).collect();
            Ok((Design::from_columns(&[t])?, vec!["t".to_string()]))
        }
        None => Err(CliError::input(
            "a nonstationary fit needs a time index: add a 'year' column or covariate columns",
        )),
    }
}

pub fn cmd_fit_ns(ctx: &Context, a: &FitNsArgs) -> CliResult<FitNsOutput> {
    let data = Dataset::from_path(&a.input)?;
    let (design, covariates) = ns_design(&data)?;
    let method = ctx.text(&a.method, "method", "lme").to_ascii_lowercase();
    let location_fit = match ctx.text(&a.location_fit, "location_fit", "tukey").to_ascii_lowercase().as_str() {
        "tukey" => LocationFit::Tukey,
        "ols" => LocationFit::Ols,
        other => return Err(CliError::input(format!("unknown location fit '{other}' (tukey, ols)"))),
    };
    let opts = NsOptions {
        location_fit,
        cov_b: ctx.config.pick(a.cov_b, "cov_b", 1000)?,
        alpha_n: ctx.config.pick(a.est.alpha_n, "alpha_n", 1.0)?,
        seed: ctx.seed,
        ..NsOptions::default()
    };
    let periods = ctx.periods(&a.return_periods)?;
    let fit = match method.as_str() {
        "lme" => fit_ns_lme(&data.values, &design, &opts)?,
        "glme" => fit_ns_glme(&data.values, &design, &ctx.penalty(&a.est)?, &opts)?,
        other => return Err(CliError::input(format!("unknown nonstationary method '{other}' (lme, glme)"))),
    };
    let last = data.len() - 1;
    let levels_at = |row: usize| -> CliResult<Vec<f64>> {
        periods.iter().map(|&p| Ok(ns_return_level(&fit.model, p, row)?)).collect()
    };
    let return_levels = periods.iter().zip(levels_at(last)?).map(|(&period, level)| ReturnLevel { period, level }).collect();
    let series = if a.series {
        let rows: CliResult<Vec<SeriesRow>> = (0..data.len())
            .map(|row| {
                let label = data.year.as_ref().map_or((row + 1) as f64, |y| y[row] as f64);
                Ok(SeriesRow { row, label, levels: levels_at(row)? })
            })
            .collect();
        Some(rows?)
    } else {
        None
    };
    Ok(FitNsOutput {
        source: data.source_path.clone(),
        n: data.len(),
        method,
        penalty: fit.penalty.to_string(),
        alpha_n: opts.alpha_n,
        location_fit: format!("{location_fit:?}").to_ascii_lowercase(),
        covariates,
        mu_coef: fit.model.mu_coef.clone(),
        sigma_coef: fit.model.sigma_coef.clone(),
        xi: fit.model.xi,
        objective: fit.objective_value,
        converged: fit.converged,
        residual_norm: fit.diagnostics.residual_norm,
        return_levels,
        series,
    })
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn cmd_simulate(ctx: &Context, a: &SimulateArgs, progress: &mut dyn FnMut(&str)) -> CliResult<SimulateOutput> {
    let scenario: Scenario = ctx.text(&a.scenario, "scenario", "stationary").parse()?;
    let xis = match a.xi.as_deref().or(ctx.config.get("xi")) {
        Some(t) => parse_list(t, "xi")?,
        None => DEFAULT_XIS.to_vec(),
    };
    let ns = match a.n.as_deref().or(ctx.config.get("n")) {
        Some(t) => parse_list(t, "n")?,
        None => default_sizes(scenario),
    };
    let methods: Vec<SimMethod> = match a.methods.as_deref().or(ctx.config.get("methods")) {
        Some(t) => parse_methods(t)?,
        None => SimMethod::defaults().into_iter().filter(|m| scenario == Scenario::Stationary || *m != SimMethod::Mle).collect(),
    };
    let trials = ctx.config.pick(a.trials, "trials", 1000)?;
    let cov_b = ctx.config.pick(a.cov_b, "cov_b", 500)?;
    let mut cells = grid_cells(scenario, &xis, &ns, &methods, trials, ctx.seed);
    for c in &mut cells {
        c.cov_b = cov_b;
        c.validate()?;
    }
    let total = cells.len();
    let quiet = a.quiet;
    let reports = run_grid(&cells, |done, _| {
        if !quiet {
            let c = &cells[done - 1];
            progress(&format!("cell {done}/{total}: {} xi={} n={}", c.scenario, c.xi, c.n));
        }
    })?;
    for r in reports.iter().filter(|r| r.unreliable) {
        progress(&format!(
            "warning: {} xi={} n={} {}: {} of {} trials failed",
            r.scenario, r.xi, r.n, r.method, r.n_failures, r.trials
        ));
    }
    Ok(SimulateOutput {
        rows: reports
            .into_iter()
            .map(|r| SimRow {
                scenario: r.scenario.to_string(),
                xi: r.xi,
                n: r.n,
                method: r.method.to_string(),
                bias: finite(r.bias),
                se: finite(r.se),
                rmse: finite(r.rmse),
                n_failures: r.n_failures,
                truth: r.truth,
            })
            .collect(),
    })
}

fn parse_methods(text: &str) -> CliResult<Vec<SimMethod>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<SimMethod>().map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()
        .and_then(|m| if m.is_empty() { Err(CliError::input("no simulation methods given")) } else { Ok(m) })
}

/// Parse one profile curve token.
pub fn profile_method(token: &str) -> CliResult<ProfileMethod> {
    let t = token.trim();
    let lower = t.to_ascii_lowercase();
    if lower == "mle" {
        return Ok(ProfileMethod::Likelihood(Penalty::flat()));
    }
    if lower == "flat" || lower == "lme" {
        return Ok(ProfileMethod::Glme(Penalty::flat()));
    }
    if let Some(p) = lower.strip_prefix("gmle:") {
        return Ok(ProfileMethod::Likelihood(p.parse()?));
    }
    if let Some(p) = lower.strip_prefix("glme:") {
        return Ok(ProfileMethod::Glme(p.parse()?));
    }
    match t.parse::<SimMethod>() {
        Ok(SimMethod::GlmeNormal(c)) => Ok(ProfileMethod::Glme(Penalty::normal_choice(c)?)),
        Ok(SimMethod::GlmeBeta(c)) => Ok(ProfileMethod::Glme(Penalty::adaptive_choice(c)?)),
        _ => Err(CliError::input(format!("unknown profile method '{t}'"))),
    }
}

pub fn cmd_profile(ctx: &Context, a: &ProfileArgs) -> CliResult<ProfileOutput> {
    let data = Dataset::from_path(&a.input)?;
    let tokens: Vec<String> = if !a.methods.is_empty() {
        a.methods.clone()
    } else if let Some(m) = ctx.config.get("methods") {
        m.split(';').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    } else {
        vec!["mle".into(), "flat".into()]
    };
    let grid = parse_grid(&ctx.text(&a.grid, "grid", DEFAULT_GRID))?;
    let opts = FitOptions {
        alpha_n: ctx.config.pick(a.alpha_n, "alpha_n", 1.0)?,
        cov: ctx.cov(&a.cov, a.bootstrap_b)?,
        seed: ctx.seed,
        ..FitOptions::default()
    };
    let mut rows = Vec::new();
    for token in &tokens {
        let method = profile_method(token)?;
        for p in profile_xi(&data.values, &method, &grid, &opts)? {
            let ok = p.value.is_some();
            rows.push(ProfileRow {
                method: token.clone(),
                xi: p.xi,
                value: p.value,
                mu: ok.then_some(p.mu),
                sigma: ok.then_some(p.sigma),
            });
        }
    }
    Ok(ProfileOutput { source: data.source_path, rows })
}

pub fn cmd_trend(data: &Dataset) -> CliResult<TrendOutput> {
    let mk = mann_kendall(&data.values)?;
    Ok(TrendOutput {
        source: data.source_path.clone(),
        n: mk.n,
        s: mk.s,
        var_s: mk.var_s,
        z: mk.z,
        tau: mk.tau,
        p_value: mk.p_value,
    })
}

pub fn cmd_returns(ctx: &Context, a: &ReturnsArgs) -> CliResult<ReturnsOutput> {
    let trend = (a.sigma_slope * a.t).exp();
    let sigma = match (a.sigma, a.log_sigma) {
        (Some(s), None) => s * trend,
        (None, Some(l)) => (l + a.sigma_slope * a.t).exp(),
        _ => return Err(CliError::input("give exactly one of --sigma and --log-sigma")),
    };
    let params = GevParams::new(a.mu + a.mu_slope * a.t, sigma, a.xi)?;
    let periods = ctx.periods(&a.return_periods)?;
    Ok(ReturnsOutput { mu: params.mu, sigma: params.sigma, xi: params.xi, return_levels: return_levels(&params, &periods)? })
}
