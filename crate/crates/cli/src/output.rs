//! Result records for each subcommand and their three renderings.
//!
//! Values that can be undefined (a failed profile point, a simulation cell
//! where every trial failed) are `Option` so the JSON form stays valid and
//! parses back into the same record.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::input(format!("unknown format '{other}' (table, csv, json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnLevel {
    pub period: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub source: String,
    pub n: usize,
    pub method: String,
    pub penalty: String,
    pub alpha_n: f64,
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
    pub objective: f64,
    pub converged: bool,
    pub evaluations: usize,
    pub return_levels: Vec<ReturnLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub row: usize,
    /// Year when the input has one, else the time index.
    pub label: f64,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitNsOutput {
    pub source: String,
    pub n: usize,
    pub method: String,
    pub penalty: String,
    pub alpha_n: f64,
    pub location_fit: String,
    /// Names of the design columns (after the intercept).
    pub covariates: Vec<String>,
    /// Intercept first.
    pub mu_coef: Vec<f64>,
    /// Log-scale coefficients, intercept first.
    pub sigma_coef: Vec<f64>,
    pub xi: f64,
    pub objective: f64,
    pub converged: bool,
    pub residual_norm: f64,
    /// Return levels at the last row.
    pub return_levels: Vec<ReturnLevel>,
    pub series: Option<Vec<SeriesRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub method: String,
    pub xi: f64,
    pub value: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOutput {
    pub source: String,
    pub rows: Vec<ProfileRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendOutput {
    pub source: String,
    pub n: usize,
    pub s: f64,
    pub var_s: f64,
    pub z: f64,
    pub tau: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsOutput {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
    pub return_levels: Vec<ReturnLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub scenario: String,
    pub xi: f64,
    pub n: usize,
    pub method: String,
    pub bias: Option<f64>,
    pub se: Option<f64>,
    pub rmse: Option<f64>,
    pub n_failures: usize,
    pub truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub rows: Vec<SimRow>,
}

/// A printable subcommand result.
pub trait Report: Serialize + DeserializeOwned {
    fn table(&self) -> String;
    fn csv_records(&self) -> Vec<Vec<String>>;

    fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Table => Ok(self.table()),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in self.csv_records() {
                    w.write_record(&r).map_err(|e| CliError::Numerical(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?;
                String::from_utf8(bytes).map_err(|e| CliError::Numerical(e.to_string()))
            }
            Format::Json => to_json(self),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

fn opt_fixed(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.digits$}"))
}

fn period_label(p: f64) -> String {
    format!("r{p}")
}

/// Left-aligned first column, right-aligned rest.
fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

impl Report for FitOutput {
    fn table(&self) -> String {
        let mut head = vec!["method".into(), "mu".into(), "sigma".into(), "xi".into()];
        let mut row = vec![self.method.clone(), format!("{:.2}", self.mu), format!("{:.2}", self.sigma), format!("{:.3}", self.xi)];
        for r in &self.return_levels {
            head.push(period_label(r.period));
            row.push(format!("{:.0}", r.level));
        }
        let mut s = format!("{} (n = {}), penalty {}\n", self.source, self.n, self.penalty);
        s.push_str(&align(&[head, row]));
        if !self.converged {
            s.push_str("warning: optimizer did not converge\n");
        }
        s
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        let mut head: Vec<String> =
            ["method", "penalty", "alpha_n", "n", "mu", "sigma", "xi", "objective", "converged"].map(String::from).into();
        let mut row = vec![
            self.method.clone(),
            self.penalty.clone(),
            num(self.alpha_n),
            self.n.to_string(),
            num(self.mu),
            num(self.sigma),
            num(self.xi),
            num(self.objective),
            self.converged.to_string(),
        ];
        for r in &self.return_levels {
            head.push(period_label(r.period));
            row.push(num(r.level));
        }
        vec![head, row]
    }
}

impl Report for FitNsOutput {
    fn table(&self) -> String {
        let mut s = format!(
            "{} (n = {}), method {}, penalty {}, location fit {}\n",
            self.source, self.n, self.method, self.penalty, self.location_fit
        );
        let mut rows = vec![vec!["term".to_string(), "mu".to_string(), "log sigma".to_string()]];
        rows.push(vec!["intercept".into(), format!("{:.2}", self.mu_coef[0]), format!("{:.2}", self.sigma_coef[0])]);
        for (j, name) in self.covariates.iter().enumerate() {
            rows.push(vec![name.clone(), format!("{:.3}", self.mu_coef[j + 1]), format!("{:.3}", self.sigma_coef[j + 1])]);
        }
        s.push_str(&align(&rows));
        let _ = writeln!(s, "xi = {:.3}", self.xi);
        let levels: Vec<String> =
            self.return_levels.iter().map(|r| format!("{} = {:.0}", period_label(r.period), r.level)).collect();
        let _ = writeln!(s, "end of sample: {}", levels.join(", "));
        if let Some(series) = &self.series {
            let mut rows = vec![std::iter::once("t".to_string())
                .chain(self.return_levels.iter().map(|r| period_label(r.period)))
                .collect::<Vec<_>>()];
            for r in series {
                rows.push(std::iter::once(r.label.to_string()).chain(r.levels.iter().map(|v| format!("{v:.0}"))).collect());
            }
            s.push_str(&align(&rows));
        }
        if !self.converged {
            s.push_str("warning: optimizer did not converge\n");
        }
        s
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        match &self.series {
            Some(series) => {
                let head = ["row", "t"]
                    .map(String::from)
                    .into_iter()
                    .chain(self.return_levels.iter().map(|r| period_label(r.period)))
                    .collect();
                let mut out = vec![head];
                for r in series {
                    out.push([r.row.to_string(), num(r.label)].into_iter().chain(r.levels.iter().map(|v| num(*v))).collect());
                }
                out
            }
            None => {
                let mut head: Vec<String> = ["method", "penalty", "n"].map(String::from).into();
                let mut row = vec![self.method.clone(), self.penalty.clone(), self.n.to_string()];
                head.push("mu_0".into());
                row.push(num(self.mu_coef[0]));
                for (j, name) in self.covariates.iter().enumerate() {
                    head.push(format!("mu_{name}"));
                    row.push(num(self.mu_coef[j + 1]));
                }
                head.push("sigma_0".into());
                row.push(num(self.sigma_coef[0]));
                for (j, name) in self.covariates.iter().enumerate() {
                    head.push(format!("sigma_{name}"));
                    row.push(num(self.sigma_coef[j + 1]));
                }
                head.extend(["xi", "objective", "converged"].map(String::from));
                row.extend([num(self.xi), num(self.objective), self.converged.to_string()]);
                for r in &self.return_levels {
                    head.push(period_label(r.period));
                    row.push(num(r.level));
                }
                vec![head, row]
            }
        }
    }
}

impl Report for ProfileOutput {
    fn table(&self) -> String {
        let mut rows = vec![["method", "xi", "value", "mu", "sigma"].map(String::from).to_vec()];
        for r in &self.rows {
            rows.push(vec![
                r.method.clone(),
                format!("{:.3}", r.xi),
                opt_fixed(r.value, 4),
                opt_fixed(r.mu, 2),
                opt_fixed(r.sigma, 2),
            ]);
        }
        align(&rows)
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        let mut out = vec![["method", "xi", "value", "mu", "sigma"].map(String::from).to_vec()];
        for r in &self.rows {
            out.push(vec![r.method.clone(), num(r.xi), opt(r.value), opt(r.mu), opt(r.sigma)]);
        }
        out
    }
}

impl Report for TrendOutput {
    fn table(&self) -> String {
        format!(
            "{} (n = {})\nMann-Kendall S = {}, var(S) = {:.2}, z = {:.4}\ntau = {:.3}, two-sided p = {:.3}\n",
            self.source, self.n, self.s, self.var_s, self.z, self.tau, self.p_value
        )
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        vec![
            ["n", "s", "var_s", "z", "tau", "p_value"].map(String::from).to_vec(),
            vec![self.n.to_string(), num(self.s), num(self.var_s), num(self.z), num(self.tau), num(self.p_value)],
        ]
    }
}

impl Report for ReturnsOutput {
    fn table(&self) -> String {
        let mut rows = vec![vec!["period".to_string(), "return level".to_string()]];
        for r in &self.return_levels {
            rows.push(vec![r.period.to_string(), format!("{:.0}", r.level)]);
        }
        format!("GEV(mu = {}, sigma = {}, xi = {})\n{}", self.mu, self.sigma, self.xi, align(&rows))
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        let mut out = vec![["mu", "sigma", "xi", "period", "level"].map(String::from).to_vec()];
        for r in &self.return_levels {
            out.push(vec![num(self.mu), num(self.sigma), num(self.xi), num(r.period), num(r.level)]);
        }
        out
    }
}

impl Report for SimulateOutput {
    fn table(&self) -> String {
        let mut rows = vec![["scenario", "xi", "n", "method", "bias", "se", "rmse", "failures", "truth"]
            .map(String::from)
            .to_vec()];
        for r in &self.rows {
            rows.push(vec![
                r.scenario.clone(),
                format!("{:.2}", r.xi),
                r.n.to_string(),
                r.method.clone(),
                opt_fixed(r.bias, 2),
                opt_fixed(r.se, 2),
                opt_fixed(r.rmse, 2),
                r.n_failures.to_string(),
                format!("{:.2}", r.truth),
            ]);
        }
        align(&rows)
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        let mut out = vec![["scenario", "xi", "n", "method", "bias", "se", "rmse", "n_failures", "truth"]
            .map(String::from)
            .to_vec()];
        for r in &self.rows {
            out.push(vec![
                r.scenario.clone(),
                num(r.xi),
                r.n.to_string(),
                r.method.clone(),
                opt(r.bias),
                opt(r.se),
                opt(r.rmse),
                r.n_failures.to_string(),
                num(r.truth),
            ]);
        }
        out
    }
}
