//! Experiment configuration: TOML schema, the arithmetic grammar for
//! expression priors, and user-defined families built from base densities
//! with location / location-scale combinators.
//!
//! Expression priors use a tiny grammar over the parameter components
//! `t1 .. tp`:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := NUMBER | 't' DIGITS | '(' expr ')'
//!        | ('log' | 'exp' | 'sqrt') '(' expr ')'
//!        | 'pow' '(' expr ',' expr ')'
//! ```
//!
//! The expression is the log prior; its gradient is taken by central finite
//! differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{builtin_family, location_family, location_scale_family, BaseKind};
use crate::family::{ParametricFamily, PriorField};
use crate::numerics::NumericsConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Quantile-matching residual sweep.
    Residual,
    /// Region-matching residual sweep.
    HpdResidual,
    /// Uniformly matching gradient along the grid, with field diagnostics.
    Upmp,
    /// Region-matching gradient along the grid.
    HpdUpmp,
    /// Correction field and curl diagnostics.
    Fields,
    /// Separability structure and Gram verdicts.
    Diagnose,
    /// Monte Carlo coverage runs.
    Coverage,
    /// Family invariant suite.
    Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDim {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomFamilySpec {
    /// Base density: normal, t(1), t(2), t(5), logistic.
    pub base: String,
    /// Combinator: location, location-scale.
    pub combinator: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    pub n: usize,
    pub replicates: usize,
    pub theta0: Vec<f64>,
    /// quantile or hpd.
    #[serde(default = "default_kind")]
    pub kind: String,
}

fn default_kind() -> String {
    "quantile".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_family: Option<CustomFamilySpec>,
    /// Named priors of the family, or `expr: <formula>` log priors.
    #[serde(default)]
    pub priors: Vec<String>,
    #[serde(default)]
    pub theta_grid: Vec<GridDim>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerics: Option<NumericsConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            // toml errors carry line/column spans in their display form
            Error::Config(format!("config parse error: {e}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn numerics(&self) -> Result<NumericsConfig> {
        let cfg = self.numerics.clone().unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_family(&self) -> Result<ParametricFamily> {
        match (&self.family, &self.custom_family) {
            (Some(name), None) => builtin_family(name),
            (None, Some(spec)) => custom_family(spec),
            (Some(_), Some(_)) => Err(Error::Config(
                "specify either `family` or `custom_family`, not both".into(),
            )),
            (None, None) => Err(Error::Config("no family specified".into())),
        }
    }

    /// Cartesian parameter grid from the per-dimension specs.
    pub fn theta_points(&self, param_dim: usize) -> Result<Vec<Vec<f64>>> {
        if self.theta_grid.len() != param_dim {
            return Err(Error::Config(format!(
                "theta_grid has {} dimensions, the family needs {param_dim}",
                self.theta_grid.len()
            )));
        }
        let mut axes = Vec::new();
        for d in &self.theta_grid {
            if d.count == 0 || !(d.min <= d.max) {
                return Err(Error::Config("invalid grid dimension".into()));
            }
            let axis: Vec<f64> = if d.count == 1 {
                vec![0.5 * (d.min + d.max)]
            } else {
                (0..d.count)
                    .map(|i| d.min + (d.max - d.min) * i as f64 / (d.count - 1) as f64)
                    .collect()
            };
            axes.push(axis);
        }
        let mut points = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(points.len() * axis.len());
            for p in &points {
                for &v in axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        Ok(points)
    }

    /// Resolve prior names and expressions against a family.
    pub fn resolve_priors(
        &self,
        fam: &ParametricFamily,
        cfg: &NumericsConfig,
    ) -> Result<Vec<PriorField>> {
        self.priors
            .iter()
            .map(|spec| resolve_prior(spec, fam, cfg))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.family.is_none() && self.custom_family.is_none() {
            return Err(Error::Config("no family specified".into()));
        }
        match self.task {
            Task::Coverage => {
                let cov = self.coverage.as_ref().ok_or_else(|| {
                    Error::Config("coverage task needs a [coverage] table".into())
                })?;
                if cov.replicates == 0 {
                    return Err(Error::Config("coverage needs replicates >= 1".into()));
                }
                if cov.n == 0 {
                    return Err(Error::Config("coverage needs n >= 1".into()));
                }
                if !matches!(cov.kind.as_str(), "quantile" | "hpd") {
                    return Err(Error::Config(format!(
                        "unknown coverage kind `{}`",
                        cov.kind
                    )));
                }
                if self.alphas.is_empty() {
                    return Err(Error::Config("coverage needs at least one level".into()));
                }
            }
            Task::Verify => {}
            Task::Residual | Task::HpdResidual => {
                if self.priors.is_empty() {
                    return Err(Error::Config("residual tasks need priors".into()));
                }
                if self.theta_grid.is_empty() {
                    return Err(Error::Config("residual tasks need a theta grid".into()));
                }
            }
            _ => {
                if self.theta_grid.is_empty() {
                    return Err(Error::Config("this task needs a theta grid".into()));
                }
            }
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Config(format!("level {a} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Resolve a prior spec: a family prior name or `expr: <formula>`.
pub fn resolve_prior(
    spec: &str,
    fam: &ParametricFamily,
    cfg: &NumericsConfig,
) -> Result<PriorField> {
    if let Some(formula) = spec.strip_prefix("expr:") {
        let expr = Expr::parse(formula.trim(), fam.param_dim)?;
        let name = format!("expr:{}", formula.trim());
        let dim = fam.param_dim;
        let e = expr.clone();
        return Ok(PriorField::from_log_density(
            name,
            move |t: &[f64]| {
                debug_assert_eq!(t.len(), dim);
                e.eval(t)
            },
            cfg,
        ));
    }
    fam.named_prior(spec)
}

fn custom_family(spec: &CustomFamilySpec) -> Result<ParametricFamily> {
    let base = BaseKind::parse(&spec.base)
        .ok_or_else(|| Error::Config(format!("unknown base density `{}`", spec.base)))?;
    match spec.combinator.as_str() {
        "location" => Ok(location_family(base)),
        "location-scale" => Ok(location_scale_family(base)),
        other => Err(Error::Config(format!("unknown combinator `{other}`"))),
    }
}

/// Parsed log-prior expression.
#[derive(Clone, Debug)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Log(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn parse(input: &str, param_dim: usize) -> Result<Expr> {
        let mut p = Parser {
            chars: input.char_indices().peekable(),
            input,
            param_dim,
        };
        let e = p.expr()?;
        p.skip_ws();
        if let Some(&(i, c)) = p.chars.peek() {
            return Err(Error::Config(format!(
                "unexpected `{c}` at column {} in prior expression",
                i + 1
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => theta[*i],
            Expr::Neg(e) => -e.eval(theta),
            Expr::Add(a, b) => a.eval(theta) + b.eval(theta),
            Expr::Sub(a, b) => a.eval(theta) - b.eval(theta),
            Expr::Mul(a, b) => a.eval(theta) * b.eval(theta),
            Expr::Div(a, b) => a.eval(theta) / b.eval(theta),
            Expr::Pow(a, b) => a.eval(theta).powf(b.eval(theta)),
            Expr::Log(e) => e.eval(theta).ln(),
            Expr::Exp(e) => e.eval(theta).exp(),
            Expr::Sqrt(e) => e.eval(theta).sqrt(),
        }
    }
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    input: &'a str,
    param_dim: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(&(_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn eat(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.chars.next() {
            Some((_, c)) if c == want => Ok(()),
            Some((i, c)) => Err(Error::Config(format!(
                "expected `{want}` at column {}, found `{c}`",
                i + 1
            ))),
            None => Err(Error::Config(format!(
                "expected `{want}` at end of prior expression"
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.chars.peek() {
                Some(&(_, '+')) => {
                    self.chars.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(&(_, '-')) => {
                    self.chars.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            self.skip_ws();
            match self.chars.peek() {
                Some(&(_, '*')) => {
                    self.chars.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(&(_, '/')) => {
                    self.chars.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        self.skip_ws();
        if matches!(self.chars.peek(), Some(&(_, '-'))) {
            self.chars.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        self.skip_ws();
        if matches!(self.chars.peek(), Some(&(_, '^'))) {
            self.chars.next();
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let &(start, c) = self
            .chars
            .peek()
            .ok_or_else(|| Error::Config("unexpected end of prior expression".into()))?;
        if c == '(' {
            self.chars.next();
            let e = self.expr()?;
            self.eat(')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() {
            return self.ident(start);
        }
        Err(Error::Config(format!(
            "unexpected `{c}` at column {} in prior expression",
            start + 1
        )))
    }

    fn number(&mut self, start: usize) -> Result<Expr> {
        let mut end = start;
        while let Some(&(i, c)) = self.chars.peek() {
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' {
                end = i + c.len_utf8();
                self.chars.next();
            } else if (c == '+' || c == '-') && self.input[start..end].ends_with(['e', 'E']) {
                end = i + 1;
                self.chars.next();
            } else {
                break;
            }
        }
        self.input[start..end]
            .parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| {
                Error::Config(format!(
                    "bad number `{}` at column {}",
                    &self.input[start..end],
                    start + 1
                ))
            })
    }

    fn ident(&mut self, start: usize) -> Result<Expr> {
        let mut end = start;
        while let Some(&(i, c)) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                end = i + c.len_utf8();
                self.chars.next();
            } else {
                break;
            }
        }
        let word = &self.input[start..end];
        match word {
            "log" => {
                self.eat('(')?;
                let e = self.expr()?;
                self.eat(')')?;
                Ok(Expr::Log(Box::new(e)))
            }
            "exp" => {
                self.eat('(')?;
                let e = self.expr()?;
                self.eat(')')?;
                Ok(Expr::Exp(Box::new(e)))
            }
            "sqrt" => {
                self.eat('(')?;
                let e = self.expr()?;
                self.eat(')')?;
                Ok(Expr::Sqrt(Box::new(e)))
            }
            "pow" => {
                self.eat('(')?;
                let a = self.expr()?;
                self.eat(',')?;
                let b = self.expr()?;
                self.eat(')')?;
                Ok(Expr::Pow(Box::new(a), Box::new(b)))
            }
            w if w.starts_with('t') => {
                let idx: usize = w[1..].parse().map_err(|_| {
                    Error::Config(format!("unknown identifier `{w}` at column {}", start + 1))
                })?;
                if idx == 0 || idx > self.param_dim {
                    return Err(Error::Config(format!(
                        "variable `{w}` out of range: the family has {} parameters",
                        self.param_dim
                    )));
                }
                Ok(Expr::Var(idx - 1))
            }
            w => Err(Error::Config(format!(
                "unknown identifier `{w}` at column {}",
                start + 1
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expression_grammar_evaluates() {
        let e = Expr::parse("-1.5*log(t2) + t1/2 - exp(-t1)", 2).unwrap();
        let t = [0.8_f64, 2.5];
        let expect = -1.5 * t[1].ln() + t[0] / 2.0 - (-t[0]).exp();
        assert_abs_diff_eq!(e.eval(&t), expect, epsilon = 1e-14);

        let e = Expr::parse("pow(t1, 2) ^ 2", 1).unwrap();
        assert_abs_diff_eq!(e.eval(&[3.0]), 81.0, epsilon = 1e-12);

        let e = Expr::parse("sqrt(t1) * (t1 - 2e-1)", 1).unwrap();
        assert_abs_diff_eq!(e.eval(&[4.0]), 2.0 * 3.8, epsilon = 1e-12);
    }

    #[test]
    fn expression_errors_carry_positions() {
        let err = Expr::parse("t3 + 1", 2).unwrap_err();
        assert!(err.to_string().contains("out of range"));
        let err = Expr::parse("log(t1", 1).unwrap_err();
        assert!(err.to_string().contains("expected `)`"));
        let err = Expr::parse("1 + $", 1).unwrap_err();
        assert!(err.to_string().contains("column 5"));
    }

    #[test]
    fn expression_prior_gradient_matches_closed_form() {
        let cfg = NumericsConfig::default();
        let fam = builtin_family("location-scale-normal").unwrap();
        let p = resolve_prior("expr: -1.0*log(t2)", &fam, &cfg).unwrap();
        let g = p.gradient(&[0.3, 2.0]);
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g[1], -0.5, epsilon = 1e-8);
    }

    #[test]
    fn config_round_trip_is_identity() {
        let text = r#"
task = "residual"
family = "location-scale-normal"
priors = ["right-haar", "jeffreys", "expr: -1.5*log(t2)"]
alphas = [0.05, 0.5, 0.95]
seed = 42

[[theta_grid]]
min = -1.0
max = 1.0
count = 3

[[theta_grid]]
min = 0.5
max = 2.0
count = 3
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let round = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, round);
        assert_eq!(cfg.theta_points(2).unwrap().len(), 9);
    }

    #[test]
    fn coverage_needs_positive_replicates() {
        let text = r#"
task = "coverage"
family = "location-scale-normal"
priors = ["jeffreys"]
alphas = [0.1]

[coverage]
n = 10
replicates = 0
theta0 = [0.0, 1.0]
"#;
        let err = ExperimentConfig::from_toml(text).unwrap_err();
        assert!(err.to_string().contains("replicates"));
    }

    #[test]
    fn custom_family_from_spec() {
        let spec = CustomFamilySpec {
            base: "t(5)".into(),
            combinator: "location-scale".into(),
        };
        let fam = custom_family(&spec).unwrap();
        assert_eq!(fam.name, "location-scale-t(5)");
        assert_eq!(fam.param_dim, 2);
    }
}
