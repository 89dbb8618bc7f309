use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use surfgraph::asymptotics::{
    britikov_f_log, classify_regime, cubic_kernel_log, l0_solve, main4_log, sigma_core_eval, sigma_d_eval, window,
    AsymptoticContext, NuPolicy, SumEvaluation, SumMode, TauPolicy, DEFAULT_CUTOFF,
};
use surfgraph::decompose::decompose;
use surfgraph::enumerate::{rho_exact, Caps, ClassQuery, ClassTag, EnumError, Enumerator, IdentityReport};
use surfgraph::genus::{GenusOracle, DART_CAP_ENV, DEFAULT_DART_CAP, DEFAULT_NODE_BUDGET};
use surfgraph::montecarlo::{self, MeasureOptions, Model, Seed, SweepPlan, CSV_SCHEMA_VERSION};
use surfgraph::{LabeledGraph, LabeledMultigraph};

const WORKERS_ENV: &str = "SURFGRAPH_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "surfgraph", version, about = "Random graphs on surfaces: exact counts, asymptotics and sampling")]
struct Cli {
    /// JSON file merged over the default configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count a graph class by brute force.
    Enumerate {
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 0)]
        g: u32,
    },
    /// Check the decomposition identities cell by cell.
    VerifyIdentities {
        #[arg(long)]
        n_max: u32,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        g: Vec<u32>,
        /// Largest excess for the complex-part and core identities.
        #[arg(long, default_value_t = 3)]
        l_max: u32,
        /// Also check the kernel ratio bounds and the subdivision brackets.
        #[arg(long)]
        bounds: bool,
    },
    /// Kernel, core and complex part of a graph.
    Decompose {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Genus of a graph or multigraph.
    Genus {
        #[arg(long = "in")]
        input: PathBuf,
        /// Largest dart count searched exhaustively.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Exact probability that a uniform graph has no complex component.
    Rho {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: u32,
    },
    /// Most likely excess of the complex part.
    L0 {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 0)]
        g: u32,
    },
    /// Predicted sizes of every part of the decomposition.
    Predict {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 0)]
        g: u32,
    },
    /// Evaluate the core or deficiency sum in log space.
    Sums {
        #[arg(long, value_enum)]
        which: SumArg,
        #[arg(long)]
        n_c: u64,
        #[arg(long)]
        l: u64,
        /// Deficiency, for the core sum.
        #[arg(long, default_value_t = 0)]
        d: u64,
        /// `lower`, `upper` or a number; defaults to the configuration.
        #[arg(long, value_parser = parse_nu)]
        nu: Option<NuPolicy>,
        /// `lower`, `upper` or a number; defaults to the configuration.
        #[arg(long, value_parser = parse_tau)]
        tau: Option<TauPolicy>,
        /// Evaluate every term instead of truncating around the peak.
        #[arg(long)]
        full: bool,
        /// Probability mass of the reported window.
        #[arg(long, default_value_t = 0.99)]
        mass: f64,
        /// Per-index CSV of the log terms.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Closed-form asymptotic counts.
    Asymptotics {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        m: Option<u64>,
        #[arg(long, default_value_t = 0)]
        g: u32,
        /// Excess, for the cubic kernel count.
        #[arg(long)]
        l: Option<u64>,
    },
    /// Draw and measure one graph.
    Sample {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: u64,
        /// Condition on embeddability on this surface; unconditioned when absent.
        #[arg(long)]
        g: Option<u32>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_tries: u64,
        #[arg(long)]
        rest_planarity: bool,
        #[arg(long)]
        largest_genus: bool,
    },
    /// Repeated samples over a grid, written as CSV.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        reps: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ClassArg {
    General,
    Complex,
    Core,
    Kernel,
    Noncomplex,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SumArg {
    Core,
    D,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseArg {
    Main4,
    Britikov,
    Cubic,
}

fn parse_policy(s: &str) -> Result<Option<f64>, String> {
    match s {
        "lower" | "upper" => Ok(None),
        _ => s.parse::<f64>().map(Some).map_err(|_| format!("expected lower, upper or a number, got {s}")),
    }
}

fn parse_nu(s: &str) -> Result<NuPolicy, String> {
    Ok(match parse_policy(s)? {
        Some(x) => NuPolicy::Fixed(x),
        None if s == "lower" => NuPolicy::Lower,
        None => NuPolicy::Upper,
    })
}

fn parse_tau(s: &str) -> Result<TauPolicy, String> {
    Ok(match parse_policy(s)? {
        Some(x) => TauPolicy::Fixed(x),
        None if s == "lower" => TauPolicy::Lower,
        None => TauPolicy::Upper,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    caps: Caps,
    genus_dart_cap: usize,
    genus_node_budget: u64,
    constants: AsymptoticContext,
    nu: NuPolicy,
    tau: TauPolicy,
    sum_cutoff: f64,
    workers: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            caps: Caps::default(),
            genus_dart_cap: DEFAULT_DART_CAP,
            genus_node_budget: DEFAULT_NODE_BUDGET,
            constants: AsymptoticContext::default(),
            nu: NuPolicy::Upper,
            tau: TauPolicy::Upper,
            sum_cutoff: DEFAULT_CUTOFF,
            workers: None,
        }
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<Config> {
    let mut config = Config::default();
    if let Ok(cap) = std::env::var(DART_CAP_ENV) {
        config.genus_dart_cap = cap.parse().with_context(|| format!("{DART_CAP_ENV}={cap}"))?;
    }
    let Some(path) = path else {
        return Ok(config);
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let over: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut base = serde_json::to_value(&config)?;
    merge(&mut base, over);
    serde_json::from_value(base).with_context(|| format!("invalid configuration in {}", path.display()))
}

/// Failures that are not usage errors: a checked statement turned out false.
#[derive(Debug)]
struct VerificationFailure(String);

impl std::fmt::Display for VerificationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for VerificationFailure {}

fn enum_error(e: EnumError) -> anyhow::Error {
    match e {
        EnumError::IdentityViolation(r) => VerificationFailure(format!(
            "identity {} fails at {}: lhs {} rhs {}",
            r.identity,
            params_text(&r),
            r.lhs,
            r.rhs
        ))
        .into(),
        EnumError::BoundViolation(s) => VerificationFailure(s).into(),
        EnumError::NonIntegralResult(x) => VerificationFailure(format!("non-integral weighted count {x}")).into(),
        other => other.into(),
    }
}

fn params_text(r: &IdentityReport) -> String {
    r.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

struct Session {
    config: Config,
    command_line: Vec<String>,
}

impl Session {
    fn oracle(&self) -> GenusOracle {
        GenusOracle::new(self.config.genus_dart_cap, self.config.genus_node_budget)
    }

    fn artifact(&self, seed: Option<u64>, result: Value) -> anyhow::Result<Value> {
        let mut out = match result {
            Value::Object(map) => map,
            other => {
                let mut map = serde_json::Map::new();
                map.insert("result".into(), other);
                map
            }
        };
        out.insert(
            "provenance".into(),
            json!({
                "tool": "surfgraph",
                "version": env!("CARGO_PKG_VERSION"),
                "command": self.command_line,
                "config": serde_json::to_value(&self.config)?,
                "seed": seed,
            }),
        );
        Ok(Value::Object(out))
    }

    fn emit(&self, seed: Option<u64>, result: Value, out: Option<&Path>) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(&self.artifact(seed, result)?)? + "\n";
        match out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn report_json(r: &IdentityReport) -> Value {
    let params: serde_json::Map<String, Value> = r.params.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "identity": r.identity,
        "params": params,
        "lhs": r.lhs.to_string(),
        "rhs": r.rhs.to_string(),
        "holds": r.holds(),
        "terms": r.terms.iter().map(|t| {
            let index: serde_json::Map<String, Value> = t.index.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            json!({"index": index, "value": t.value.to_string()})
        }).collect::<Vec<_>>(),
    })
}

fn read_multigraph(path: &Path) -> anyhow::Result<LabeledMultigraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing graph JSON in {}", path.display()))
}

fn read_graph(path: &Path) -> anyhow::Result<LabeledGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing simple graph JSON in {}", path.display()))
}

fn sum_json(eval: &SumEvaluation, mass: f64) -> Value {
    let (lo, hi) = window(eval, mass);
    json!({
        "first_index": eval.first_index,
        "last_index": eval.last_index(),
        "argmax": eval.argmax,
        "ln_total": eval.total.ln_f64(),
        "residual_exponent": eval.residual_exponent,
        "truncated": eval.truncated,
        "window": {"mass": mass, "lo": lo, "hi": hi, "captured": eval.mass(lo, hi)},
    })
}

fn run(cli: Cli, ctx: &mut Session) -> anyhow::Result<()> {
    match cli.command {
        Command::Enumerate { class, n, m, g } => {
            let class = match class {
                ClassArg::General => ClassTag::General,
                ClassArg::Complex => ClassTag::Complex,
                ClassArg::Core => ClassTag::Core,
                ClassArg::Kernel => ClassTag::Kernel,
                ClassArg::Noncomplex => ClassTag::NonComplex,
            };
            let query = ClassQuery { class, n, m, g };
            let count = Enumerator::new(ctx.config.caps).brute_count(query).map_err(enum_error)?;
            ctx.emit(None, json!({"query": query, "count": count.to_rational().to_string()}), None)
        }
        Command::VerifyIdentities {
            n_max,
            g,
            l_max,
            bounds,
        } => {
            let e = Enumerator::new(ctx.config.caps);
            let mut cells = Vec::new();
            let mut failure = None;
            let mut check = |r: Result<IdentityReport, EnumError>| -> anyhow::Result<()> {
                match r {
                    Ok(r) => cells.push(report_json(&r)),
                    Err(EnumError::IdentityViolation(r)) => {
                        eprintln!("identity {} fails at {}: lhs {} rhs {}", r.identity, params_text(&r), r.lhs, r.rhs);
                        cells.push(report_json(&r));
                        failure.get_or_insert(format!("identity {} at {}", r.identity, params_text(&r)));
                    }
                    Err(other) => return Err(enum_error(other)),
                }
                Ok(())
            };
            for &genus in &g {
                for n in 0..=n_max {
                    for m in 0..=n * n.saturating_sub(1) / 2 {
                        check(e.verify_identity_general(n, m, genus))?;
                    }
                }
                for n in 1..=n_max {
                    for l in 1..=l_max {
                        if n + l > n * (n - 1) / 2 {
                            continue;
                        }
                        check(e.verify_identity_complexcore(n, l, genus))?;
                        check(e.verify_identity_core(n, l, genus))?;
                    }
                }
            }
            let mut bound_rows = Vec::new();
            if bounds {
                for &genus in &g {
                    for l in 1..=l_max {
                        let rows = e.verify_kernel_pumping(l, genus).map_err(enum_error)?;
                        for row in rows {
                            bound_rows.push(json!({
                                "kind": "kernel-ratio", "l": l, "g": genus, "d": row.d,
                                "ratio": row.ratio.to_string(), "upper": row.upper.to_string(),
                                "lower": row.lower.map(|x| x.to_string()),
                            }));
                        }
                        for d in 0..=(2 * l - 1).min(2) {
                            for n_core in (2 * l - d)..=n_max.max(2 * l - d) {
                                let r = e.verify_binsandballs(l, d, genus, n_core).map_err(enum_error)?;
                                bound_rows.push(json!({
                                    "kind": "subdivision-bracket", "l": l, "g": genus, "d": d, "n_core": n_core,
                                    "phi": r.phi.to_string(), "lower": r.lower.to_string(),
                                    "upper": r.upper.to_string(), "nu": r.nu,
                                }));
                            }
                        }
                    }
                }
            }
            let failed = cells.iter().filter(|c| c["holds"] == json!(false)).count();
            ctx.emit(
                None,
                json!({"checked": cells.len(), "failed": failed, "cells": cells, "bounds": bound_rows}),
                None,
            )?;
            match failure {
                Some(f) => Err(VerificationFailure(f).into()),
                None => Ok(()),
            }
        }
        Command::Decompose { input, out } => {
            let g = read_graph(&input)?;
            let d = decompose(&g);
            ctx.emit(None, serde_json::to_value(&d)?, out.as_deref())
        }
        Command::Genus { input, cap } => {
            if let Some(cap) = cap {
                ctx.config.genus_dart_cap = cap;
            }
            let m = read_multigraph(&input)?;
            let genus = ctx.oracle().genus(&m)?;
            ctx.emit(None, json!({"genus": genus}), None)
        }
        Command::Rho { n, m } => {
            let rho = rho_exact(n, m);
            let ln = surfgraph::asymptotics::ln_rational(&rho);
            let f = britikov_f_log(u64::from(n), u64::from(m), &ctx.config.constants).ok();
            ctx.emit(
                None,
                json!({
                    "n": n, "m": m, "rho": rho.to_string(), "rho_f64": ln.exp(),
                    "limit_profile": f.map(|v| v.to_f64()),
                }),
                None,
            )
        }
        Command::L0 { n, m, g } => {
            let p = l0_solve(n, m, g, &ctx.config.constants)?;
            ctx.emit(None, json!({"n": n, "m": m, "l0": p.l0, "residual": p.residual}), None)
        }
        Command::Predict { n, m, g } => {
            let p = l0_solve(n, m, g, &ctx.config.constants)?;
            ctx.emit(None, serde_json::to_value(&p)?, None)
        }
        Command::Sums {
            which,
            n_c,
            l,
            d,
            nu,
            tau,
            full,
            mass,
            csv,
        } => {
            let nu = nu.unwrap_or(ctx.config.nu);
            let tau = tau.unwrap_or(ctx.config.tau);
            ctx.config.nu = nu;
            ctx.config.tau = tau;
            let mode = if full {
                SumMode::Full
            } else {
                SumMode::Truncated {
                    cutoff: ctx.config.sum_cutoff,
                }
            };
            let eval = match which {
                SumArg::Core => sigma_core_eval(n_c, l, d, nu, mode)?,
                SumArg::D => sigma_d_eval(n_c, l, tau, nu, mode)?,
            };
            if let Some(path) = &csv {
                let mut w = String::from("index,ln_term\n");
                for (i, t) in eval.log_terms.iter().enumerate() {
                    w.push_str(&format!("{},{}\n", eval.first_index + i as u64, t));
                }
                fs::write(path, w).with_context(|| format!("writing {}", path.display()))?;
            }
            let mut v = sum_json(&eval, mass);
            v["which"] = json!(match which {
                SumArg::Core => "core",
                SumArg::D => "d",
            });
            v["params"] = json!({"n_C": n_c, "l": l, "d": d, "nu": nu.value(), "tau": tau.value()});
            ctx.emit(None, v, None)
        }
        Command::Asymptotics { case, n, m, g, l } => {
            let constants = &ctx.config.constants;
            let need = |x: Option<u64>, name: &str| x.with_context(|| format!("--{name} is required for this case"));
            let v = match case {
                CaseArg::Main4 => {
                    let (n, m) = (need(n, "n")?, need(m, "m")?);
                    let r = main4_log(n, m, g, constants)?;
                    json!({
                        "case": "main4", "n": n, "m": m, "g": g,
                        "regime": classify_regime(n, m, g, &constants.regime)?,
                        "ln_count": r.log_count.ln_f64(),
                        "ln_count_hi_lo": r.log_count.ln().map(|x| [x.hi, x.lo]),
                        "uncertainty": r.uncertainty,
                        "uncertainty_exponent": r.uncertainty_exponent,
                    })
                }
                CaseArg::Britikov => {
                    let (n, m) = (need(n, "n")?, need(m, "m")?);
                    let r = britikov_f_log(n, m, constants)?;
                    json!({"case": "britikov", "n": n, "m": m, "ln_value": r.ln_f64()})
                }
                CaseArg::Cubic => {
                    let l = need(l, "l")?;
                    let r = cubic_kernel_log(l, g, constants)?;
                    json!({"case": "cubic", "l": l, "g": g, "ln_value": r.ln_f64()})
                }
            };
            ctx.emit(None, v, None)
        }
        Command::Sample {
            n,
            m,
            g,
            seed,
            max_tries,
            rest_planarity,
            largest_genus,
        } => {
            let model = match g {
                Some(g) => Model::Surface { g, max_tries },
                None => Model::Er,
            };
            let options = MeasureOptions {
                rest_planarity,
                largest_genus,
            };
            let rec = montecarlo::run_sample(model, n, m, Seed::for_sample(seed, 0, 0), options, &ctx.oracle())?;
            ctx.emit(Some(seed), json!({"model": model, "record": rec}), None)
        }
        Command::Sweep { plan, reps, seed, out } => {
            let text = fs::read_to_string(&plan).with_context(|| format!("reading {}", plan.display()))?;
            let plan: SweepPlan = serde_json::from_str(&text).with_context(|| format!("parsing {}", plan.display()))?;
            let result = montecarlo::sweep(&plan, reps, seed, &ctx.oracle())?;
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            montecarlo::write_csv(&result.records, std::io::BufWriter::new(file))?;
            let meta = json!({
                "csv": out.display().to_string(),
                "csv_schema_version": CSV_SCHEMA_VERSION,
                "plan": plan,
                "reps": reps,
                "summaries": result.summaries,
            });
            let mut meta_path = out.clone().into_os_string();
            meta_path.push(".meta.json");
            ctx.emit(Some(seed), meta.clone(), Some(Path::new(&meta_path)))?;
            ctx.emit(Some(seed), meta, None)
        }
    }
}

fn init_workers(config: &Config) -> anyhow::Result<()> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(s) => Some(s.parse::<usize>().with_context(|| format!("{WORKERS_ENV}={s}"))?),
        Err(_) => None,
    };
    if let Some(threads) = from_env.or(config.workers) {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = init_workers(&config) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let mut command_line = vec!["surfgraph".to_string()];
    command_line.extend(std::env::args().skip(1));
    let mut ctx = Session { config, command_line };
    match run(cli, &mut ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.is::<VerificationFailure>() {
                eprintln!("verification failed: {e}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.is::<VerificationFailure>() {
        2
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use surfgraph::enumerate::{rational_pow, IdentityTerm};

    #[test]
    fn failed_checks_map_to_exit_two() {
        let report = IdentityReport {
            identity: "general".into(),
            params: vec![("n".into(), 3)],
            lhs: rational_pow(1, 0),
            rhs: rational_pow(2, 1),
            terms: Vec::<IdentityTerm>::new(),
        };
        assert_eq!(exit_code(&enum_error(EnumError::IdentityViolation(Box::new(report)))), 2);
        assert_eq!(exit_code(&enum_error(EnumError::BoundViolation("x".into()))), 2);
        let cap = EnumError::CapExceeded {
            what: "n = 9".into(),
            limit: 7,
        };
        assert_eq!(exit_code(&enum_error(cap)), 1);
    }

    #[test]
    fn config_merge_is_deep() {
        let mut base = json!({"a": {"b": 1, "c": 2}, "d": 3});
        merge(&mut base, json!({"a": {"c": 5}}));
        assert_eq!(base, json!({"a": {"b": 1, "c": 5}, "d": 3}));
    }
}
