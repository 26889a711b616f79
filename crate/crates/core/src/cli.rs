//! Command-line front end: argument parsing, fragment loading and exact output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::approx::{binomial_tail_exact, fam_search, fim_convexity_check, indexed_vars, wlln_bound};
use crate::error::{Error, Result};
use crate::formula::{parse_with, Formula, ParseOptions, Sort};
use crate::measures::parse_measure;
use crate::morley::{check_assoc, check_commute, power_eval, product_eval_traced, Report};
use crate::qe::{eliminate_quantifiers_with, QeConfig};
use crate::scalar::{fmt_rat, parse_rat};
use crate::scenarios::{self, ScenarioResult};
use crate::theories::{Fragment, HalfSet, TheoryId};
use crate::types::{enumerate_types_capped, var_list, DEFAULT_TYPE_CAP};
use crate::Rational;

#[derive(Debug, Parser)]
#[command(name = "keisler", version, about = "Exact computations with Keisler measures on finite fragments")]
pub struct Cli {
    #[command(flatten)]
    pub config: Config,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct Config {
    /// Fragment file (see README for the format).
    #[arg(long, global = true)]
    pub fragment: Option<String>,
    /// Theory for a fragment synthesized from the formula's parameters.
    #[arg(long, global = true)]
    pub theory: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
    /// Cap on DNF size in quantifier elimination and good-set analysis.
    #[arg(long, global = true, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(1..))]
    pub dnf_cap: u64,
    /// Cap on the number of complete types enumerated.
    #[arg(long, global = true, default_value_t = DEFAULT_TYPE_CAP, value_parser = clap::value_parser!(u64).range(1..))]
    pub type_cap: u64,
    /// Largest tuple length tried by fam-search.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_max: u64,
    /// Recorded in JSON output; all computations are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure of a formula.
    Eval {
        #[arg(long)]
        measure: String,
        /// Measure variables, comma separated.
        #[arg(long, default_value = "x")]
        vars: String,
        formula: String,
    },
    /// Morley product `left ⊗ right` of a formula.
    Product {
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, default_value = "x")]
        left_vars: String,
        #[arg(long, default_value = "y")]
        right_vars: String,
        formula: String,
    },
    /// `μ^(n)` of a formula in `x1..xn`.
    Power {
        #[arg(long)]
        measure: String,
        #[arg(long)]
        n: usize,
        formula: String,
    },
    /// Compare `μ_x ⊗ ν_y` with `ν_y ⊗ μ_x` on a formula pool.
    Commute {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        #[arg(long, default_value = "x")]
        x: String,
        #[arg(long, default_value = "y")]
        y: String,
        #[arg(required = true)]
        formulas: Vec<String>,
    },
    /// Compare `(μ⊗ν)⊗λ` with `μ⊗(ν⊗λ)` on formulas in `x, y, z`.
    Assoc {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        #[arg(long)]
        lambda: String,
        #[arg(required = true)]
        formulas: Vec<String>,
    },
    /// Lexicographically first tuple of fragment elements approximating μ.
    FamSearch {
        #[arg(long)]
        measure: String,
        #[arg(long, default_value = "x")]
        var: String,
        /// Sort of the measure variable (vertex, P or Q).
        #[arg(long)]
        sort: Option<String>,
        #[arg(long)]
        eps: String,
        formula: String,
    },
    /// Concentration bounds, e.g. `bounds --binomial r=1/2 eps=1/4 n=16`.
    Bounds {
        #[arg(long)]
        binomial: bool,
        #[arg(long)]
        wlln: bool,
        /// `r=…` (or `p=…`), `eps=…`, `n=…`.
        #[arg(required = true)]
        params: Vec<String>,
    },
    /// Compare `λ^(n)` with the pattern-product expansion for `λ = rμ + (1−r)ν`.
    FimConvexity {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        #[arg(long)]
        r: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(required = true)]
        formulas: Vec<String>,
    },
    /// Quantifier-free equivalent in THalfInf or its PQ reduct.
    Qe { formula: String },
    /// Complete quantifier-free types of the variables over the fragment.
    Types {
        #[arg(long, default_value = "x")]
        vars: String,
    },
    /// Run a named scenario with `--param key=value` settings.
    Scenario {
        name: String,
        #[arg(long = "param")]
        params: Vec<String>,
    },
}

/// A table cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    Num(Rational),
    Text(String),
}

/// What a subcommand prints.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub rows: Vec<(String, Cell)>,
    /// `Some(false)` makes the exit code 1.
    pub verdict: Option<bool>,
}

impl Output {
    fn value(v: Rational) -> Output {
        Output { rows: vec![(String::new(), Cell::Num(v))], verdict: None }
    }

    fn num(&mut self, label: impl Into<String>, v: Rational) {
        self.rows.push((label.into(), Cell::Num(v)));
    }

    fn text(&mut self, label: impl Into<String>, v: impl Into<String>) {
        self.rows.push((label.into(), Cell::Text(v.into())));
    }

    fn report(r: Report) -> Output {
        let mut out = Output::default();
        match r {
            Report::Equal => {
                out.text("report", "equal");
                out.verdict = Some(true);
            }
            Report::Counterexample { formula, left, right } => {
                out.text("report", "counterexample");
                out.text("formula", formula.to_string());
                out.num("left", left);
                out.num("right", right);
                out.verdict = Some(false);
            }
        }
        out
    }

    fn scenario(r: ScenarioResult) -> Output {
        let mut out = Output::default();
        for (label, v) in r.rows {
            out.num(label, v);
        }
        out.verdict = Some(r.pass);
        out
    }

    pub fn render(&self, format: Format, seed: u64) -> String {
        match format {
            Format::Tsv => {
                let mut s = String::new();
                for (label, cell) in &self.rows {
                    let v = match cell {
                        Cell::Num(r) => fmt_rat(r),
                        Cell::Text(t) => t.clone(),
                    };
                    if label.is_empty() {
                        s.push_str(&v);
                    } else {
                        s.push_str(label);
                        s.push('\t');
                        s.push_str(&v);
                    }
                    s.push('\n');
                }
                if let Some(v) = self.verdict {
                    s.push_str(if v { "verdict\tpass\n" } else { "verdict\tfail\n" });
                }
                s
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|(label, cell)| match cell {
                        Cell::Num(r) => json!({
                            "label": label,
                            "num": r.numer().to_string(),
                            "den": r.denom().to_string(),
                        }),
                        Cell::Text(t) => json!({ "label": label, "text": t }),
                    })
                    .collect();
                let mut v = json!({ "rows": rows, "seed": seed });
                if let Some(p) = self.verdict {
                    v["verdict"] = json!(if p { "pass" } else { "fail" });
                }
                format!("{v}\n")
            }
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code: 0 on success or a passing verdict, 1 on a failing verdict, 2 on
/// usage or input errors.
pub fn run<I, T>(argv: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let _ = out.write_all(o.render(cli.config.format, cli.config.seed).as_bytes());
            match o.verdict {
                Some(false) => 1,
                _ => 0,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn theory_of(cfg: &Config) -> Result<Option<TheoryId>> {
    cfg.theory.as_deref().map(str::parse).transpose()
}

/// The fragment from `--fragment`, or one synthesized over `--theory` from
/// the parameters of `texts`.
fn load(cfg: &Config, texts: &[&str]) -> Result<Fragment> {
    if let Some(path) = &cfg.fragment {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Precondition(format!("reading {path}: {e}")))?;
        let frag = Fragment::from_text(&text)?;
        if let Some(t) = theory_of(cfg)? {
            if t != frag.theory {
                return Err(Error::Precondition(format!("--theory {t} disagrees with the fragment's {}", frag.theory)));
            }
        }
        return Ok(frag);
    }
    let theory = theory_of(cfg)?.ok_or_else(|| Error::Precondition("give --fragment or --theory".into()))?;
    let opts = ParseOptions { sorts: BTreeMap::new(), default_sort: theory.default_sort() };
    let parts: Vec<Formula> = texts.iter().map(|t| parse_with(t, &opts)).collect::<Result<_>>()?;
    Fragment::synthesize(theory, &Formula::and(parts))
}

fn kv(params: &[String]) -> Result<BTreeMap<String, String>> {
    params
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Precondition(format!("expected key=value, got `{p}`")))
        })
        .collect()
}

fn usize_param(m: &BTreeMap<String, String>, key: &str, default: Option<usize>) -> Result<usize> {
    match m.get(key) {
        Some(v) => v.parse().map_err(|_| Error::Precondition(format!("`{key}` must be a natural number"))),
        None => default.ok_or_else(|| Error::Precondition(format!("missing parameter `{key}`"))),
    }
}

fn rat_param(m: &BTreeMap<String, String>, key: &str) -> Result<Rational> {
    parse_rat(m.get(key).ok_or_else(|| Error::Precondition(format!("missing parameter `{key}`")))?)
}

fn pool(frag: &Fragment, texts: &[String]) -> Result<Vec<Formula>> {
    texts.iter().map(|t| frag.parse_formula(t)).collect()
}

fn parse_sort(s: &str) -> Result<Sort> {
    match s.to_ascii_lowercase().as_str() {
        "vertex" | "v" => Ok(Sort::Vertex),
        "p" => Ok(Sort::P),
        "q" => Ok(Sort::Q),
        "r" => Ok(Sort::R),
        _ => Err(Error::Precondition(format!("unknown sort `{s}`"))),
    }
}

pub fn execute(cli: &Cli) -> Result<Output> {
    let cfg = &cli.config;
    match &cli.command {
        Command::Eval { measure, vars, formula } => {
            let frag = load(cfg, &[formula])?;
            let m = parse_measure(measure, &frag)?;
            let f = frag.parse_formula(formula)?;
            Ok(Output::value(m.eval(&var_list(vars), &f, &frag)?))
        }
        Command::Product { left, right, left_vars, right_vars, formula } => {
            let frag = load(cfg, &[formula])?;
            let (l, r) = (parse_measure(left, &frag)?, parse_measure(right, &frag)?);
            let f = frag.parse_formula(formula)?;
            let (v, strategy) = product_eval_traced(&l, &var_list(left_vars), &r, &var_list(right_vars), &f, &frag)?;
            let mut out = Output::value(v);
            out.text("strategy", format!("{strategy:?}"));
            Ok(out)
        }
        Command::Power { measure, n, formula } => {
            let frag = load(cfg, &[formula])?;
            let m = parse_measure(measure, &frag)?;
            let f = frag.parse_formula(formula)?;
            Ok(Output::value(power_eval(&m, *n, &indexed_vars(*n), &f, &frag)?))
        }
        Command::Commute { mu, nu, x, y, formulas } => {
            let texts: Vec<&str> = formulas.iter().map(String::as_str).collect();
            let frag = load(cfg, &texts)?;
            let (m, n) = (parse_measure(mu, &frag)?, parse_measure(nu, &frag)?);
            Ok(Output::report(check_commute(&m, &n, x, y, &frag, &pool(&frag, formulas)?)?))
        }
        Command::Assoc { mu, nu, lambda, formulas } => {
            let texts: Vec<&str> = formulas.iter().map(String::as_str).collect();
            let frag = load(cfg, &texts)?;
            let ms = [mu, nu, lambda].map(|s| parse_measure(s, &frag));
            let [a, b, c] = ms;
            let vars = ["x".to_string(), "y".to_string(), "z".to_string()];
            Ok(Output::report(check_assoc(&a?, &b?, &c?, &vars, &frag, &pool(&frag, formulas)?)?))
        }
        Command::FamSearch { measure, var, sort, eps, formula } => {
            let frag = load(cfg, &[formula])?;
            let m = parse_measure(measure, &frag)?;
            let f = frag.parse_formula(formula)?;
            let sort = match sort {
                Some(s) => parse_sort(s)?,
                None => *f
                    .free_vars()
                    .get(var)
                    .ok_or_else(|| Error::Precondition(format!("`{var}` is not free in the formula")))?,
            };
            let eps = parse_rat(eps)?;
            let mut out = Output::default();
            match fam_search(&m, var, sort, &f, &eps, &frag, cfg.n_max as usize)? {
                Some((tuple, err)) => {
                    out.text("tuple", tuple.join(","));
                    out.num("error", err);
                    out.verdict = Some(true);
                }
                None => {
                    out.text("tuple", "none");
                    out.verdict = Some(false);
                }
            }
            Ok(out)
        }
        Command::Bounds { binomial, wlln, params } => {
            let m = kv(params)?;
            let r = rat_param(&m, if m.contains_key("p") { "p" } else { "r" })?;
            let eps = rat_param(&m, "eps")?;
            let n = usize_param(&m, "n", None)?;
            let (both, mut out) = (binomial == wlln, Output::default());
            if *binomial && !both {
                return Ok(Output::value(binomial_tail_exact(&r, &eps, n)?));
            }
            if *wlln && !both {
                return Ok(Output::value(wlln_bound(&r, &eps, n)?));
            }
            let b = binomial_tail_exact(&r, &eps, n)?;
            let w = wlln_bound(&r, &eps, n)?;
            out.verdict = Some(b >= w);
            out.num("binomial", b);
            out.num("wlln", w);
            Ok(out)
        }
        Command::FimConvexity { mu, nu, r, n, formulas } => {
            let texts: Vec<&str> = formulas.iter().map(String::as_str).collect();
            let frag = load(cfg, &texts)?;
            let (a, b) = (parse_measure(mu, &frag)?, parse_measure(nu, &frag)?);
            let r = parse_rat(r)?;
            Ok(Output::report(fim_convexity_check(&a, &b, &r, *n, &frag, &pool(&frag, formulas)?)?))
        }
        Command::Qe { formula } => {
            let frag = match (&cfg.fragment, theory_of(cfg)?) {
                (Some(_), _) => load(cfg, &[])?,
                (None, Some(t)) => Fragment::new(t),
                (None, None) => Fragment::new(TheoryId::THalfInf),
            };
            let f = frag.parse_formula(formula)?;
            let qcfg = QeConfig { dnf_cap: cfg.dnf_cap as usize, ..QeConfig::default() };
            let g = eliminate_quantifiers_with(&f, frag.theory, &qcfg)?;
            let mut out = Output::default();
            out.text("", g.to_string());
            Ok(out)
        }
        Command::Types { vars } => {
            let frag = load(cfg, &[])?;
            let space = enumerate_types_capped(&frag, &var_list(vars), cfg.type_cap)?;
            let mut out = Output::default();
            out.num("count", Rational::from_integer((space.types.len() as i64).into()));
            for (i, t) in space.types.iter().enumerate() {
                out.text(format!("t{i}"), t.to_formula(&frag).to_string());
            }
            Ok(out)
        }
        Command::Scenario { name, params } => scenario(cfg, name, &kv(params)?).map(Output::scenario),
    }
}

fn scenario(cfg: &Config, name: &str, m: &BTreeMap<String, String>) -> Result<ScenarioResult> {
    match name {
        "ternary-gap" => scenarios::run_ternary_gap(usize_param(m, "m", Some(1))?, usize_param(m, "kappa", Some(2))?),
        "pq-property-ii" => {
            let size = usize_param(m, "m", Some(1))?;
            let z: Vec<usize> = match m.get("z").map(String::as_str) {
                None | Some("none") | Some("") => Vec::new(),
                Some("all") => {
                    let base = Fragment::from_text(&format!(
                        "theory tr\n{}",
                        (0..size).map(|i| format!("param b{i}\n")).collect::<String>()
                    ))?;
                    (0..enumerate_types_capped(&base, &["z".to_string()], cfg.type_cap)?.types.len()).collect()
                }
                Some(list) => list
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| Error::Precondition(format!("bad type index `{s}`"))))
                    .collect::<Result<_>>()?,
            };
            scenarios::run_pq_property_ii(size, &z)
        }
        "nocom" => scenarios::run_nocom(),
        "thalf-nonfam" => {
            let sets = m.get("b").ok_or_else(|| Error::Precondition("missing parameter `b`".into()))?;
            let bs: Vec<HalfSet> =
                sets.split(';').map(|s| HalfSet::from_set(s.trim().parse()?)).collect::<Result<_>>()?;
            scenarios::run_thalf_nonfam(&bs)
        }
        "thalf-satisfiability" => {
            let pts = m.get("points").map(String::as_str).unwrap_or("");
            let points: Vec<Rational> =
                pts.split(',').filter(|s| !s.trim().is_empty()).map(parse_rat).collect::<Result<_>>()?;
            scenarios::run_thalf_satisfiability(&points)
        }
        "qpq" => scenarios::run_qpq_suite(usize_param(m, "n", Some(4))?, usize_param(m, "k", Some(2))?),
        "henson-tgood" => {
            let theta = m.get("theta").ok_or_else(|| Error::Precondition("missing parameter `theta`".into()))?;
            let frag = match &cfg.fragment {
                Some(_) => load(cfg, &[])?,
                None => {
                    let s = usize_param(m, "s", Some(3))?;
                    let t = TheoryId::henson(s)?;
                    let opts = ParseOptions { sorts: BTreeMap::new(), default_sort: Sort::Vertex };
                    Fragment::synthesize(t, &parse_with(theta, &opts)?)?
                }
            };
            let f = frag.parse_formula(theta)?;
            let n = match m.get("n") {
                Some(_) => usize_param(m, "n", None)?,
                None => f.free_vars().len(),
            };
            let eps = match m.get("eps") {
                Some(e) => parse_rat(e)?,
                None => Rational::new(1.into(), 2.into()),
            };
            scenarios::run_henson_tgood(&frag, &f, n, &eps)
        }
        other => Err(Error::Precondition(format!(
            "unknown scenario `{other}` (ternary-gap, pq-property-ii, nocom, thalf-nonfam, thalf-satisfiability, qpq, henson-tgood)"
        ))),
    }
}
