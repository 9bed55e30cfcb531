use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use cardfair::bounds::{
    applicable_bounds, lower_achieved_exact, poc_esw_multi, poc_esw_single, poc_usw_single, poc_usw_two,
    BoundValue,
};
use cardfair::generators::*;
use cardfair::oracle::{default_budget, empirical_poc_with_budget, opt_brute_with_budget};
use cardfair::rational::Rational;
use cardfair::solvers::{greedy_reassign_all, keep_top_k, opt_usw_cardinal_matching, opt_usw_unconstrained};
use cardfair::sweep::{self, GridConfig};
use cardfair::welfare::poc_ratio;
use cardfair::{is_cardinal, Allocation, Error, Instance, Objective};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cardfair", version, about = "Welfare and price-of-cardinality tools for capped allocations")]
struct Cli {
    /// Maximum number of assignments exhaustive search may visit
    /// (overrides CARDFAIR_BUDGET).
    #[arg(long, global = true)]
    budget: Option<u128>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a welfare-maximizing or cardinalized allocation.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "usw")]
        objective: ObjectiveArg,
        #[arg(long, value_enum, default_value = "cardinal")]
        mode: Mode,
    },
    /// Emit a worst-case instance, e.g. `generate esw-single m=4 n=2 k=2`.
    Generate {
        #[arg(value_enum)]
        construction: Construction,
        /// Parameters as key=value. Category lists use `pairs=m:k,m:k`.
        params: Vec<String>,
        /// Measure the achieved ratio and compare it with the prediction.
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure an instance's prices and check them against the closed forms.
    Verify {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Tabulate bound curves or fuzz bounds over a grid, as CSV.
    Sweep {
        #[arg(long, value_enum)]
        mode: SweepMode,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Item count for fig1 and fig2.
        #[arg(long, default_value_t = 50)]
        m: u64,
        /// Required for grid.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        #[arg(long, default_value_t = 8)]
        m_max: usize,
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Usw,
    Esw,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Usw => Objective::Usw,
            ObjectiveArg::Esw => Objective::Esw,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cardinal,
    Unconstrained,
    Greedy,
    Topk,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMode {
    Fig1,
    Fig2,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Construction {
    UswSingleDivisible,
    UswSingleGeneral,
    EswSingle,
    UswTwo,
    UswMulti,
    EswMulti,
}

/// Failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => 3,
            Error::Infeasible { .. } => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let budget = cli.budget.unwrap_or_else(default_budget);
    let result = match cli.command {
        Command::Solve {
            instance,
            objective,
            mode,
        } => solve(&instance, objective.into(), mode, budget),
        Command::Generate {
            construction,
            params,
            verify,
            out,
        } => generate(construction, &params, verify, out.as_deref(), budget),
        Command::Verify { instance } => verify(&instance, budget),
        Command::Sweep {
            mode,
            out,
            m,
            seed,
            n_max,
            m_max,
            trials,
        } => sweep_cmd(mode, out.as_deref(), m, seed, n_max, m_max, trials, budget),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> CliResult<Instance> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    Ok(Instance::from_json(&text)?)
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn rational_json(r: &Rational) -> Value {
    json!(r.to_fraction_string())
}

fn solve(path: &Path, objective: Objective, mode: Mode, budget: u128) -> CliResult<u8> {
    let inst = load(path)?;
    let start = Instant::now();
    let mut steps = None;
    let alloc: Allocation = match (mode, objective) {
        (Mode::Cardinal, Objective::Usw) => opt_usw_cardinal_matching(&inst)?.0,
        (Mode::Unconstrained, Objective::Usw) => opt_usw_unconstrained(&inst).0,
        (Mode::Cardinal, Objective::Esw) => opt_brute_with_budget(&inst, objective, true, budget)?.1,
        (Mode::Unconstrained, Objective::Esw) => opt_brute_with_budget(&inst, objective, false, budget)?.1,
        (Mode::Greedy, _) => {
            let (start_alloc, _) = opt_usw_unconstrained(&inst);
            let (alloc, s) = greedy_reassign_all(&inst, &start_alloc)?;
            steps = Some(s);
            alloc
        }
        (Mode::Topk, _) => {
            let (_, start_alloc) = opt_brute_with_budget(&inst, Objective::Esw, false, budget)?;
            keep_top_k(&inst, &start_alloc)?
        }
    };
    let welfare = objective.evaluate(&inst, &alloc)?;
    let elapsed = start.elapsed();
    let mut out = json!({
        "objective": objective,
        "mode": mode.to_possible_value().map(|v| v.get_name().to_string()),
        "welfare": rational_json(&welfare),
        "welfare_decimal": welfare.to_f64(),
        "cardinal": is_cardinal(&inst, &alloc)?,
        "allocation": alloc,
        "wall_time_ms": elapsed.as_secs_f64() * 1e3,
    });
    if let Some(s) = steps {
        out["steps"] = serde_json::to_value(s).expect("steps serialize");
    }
    print_json(&out);
    Ok(0)
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn parse(raw: &[String]) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        for p in raw {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| input_error(format!("parameter `{p}` is not key=value")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params(map))
    }

    fn int(&self, key: &str) -> CliResult<usize> {
        let v = self
            .0
            .get(key)
            .ok_or_else(|| input_error(format!("missing parameter `{key}`")))?;
        v.parse()
            .map_err(|_| input_error(format!("parameter `{key}` must be a nonnegative integer, got `{v}`")))
    }

    fn pairs(&self) -> CliResult<Vec<(usize, usize)>> {
        let v = self
            .0
            .get("pairs")
            .ok_or_else(|| input_error("missing parameter `pairs` (e.g. pairs=4:2,3:2)"))?;
        v.split(',')
            .map(|pair| {
                let (m, k) = pair
                    .split_once(':')
                    .ok_or_else(|| input_error(format!("category `{pair}` is not m:k")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| input_error(format!("category `{pair}` is not m:k")))
                };
                Ok((parse(m)?, parse(k)?))
            })
            .collect()
    }
}

/// The instance, the objective whose price it targets, and the predicted price.
fn build(c: Construction, p: &Params) -> CliResult<(Instance, Objective, BoundValue)> {
    Ok(match c {
        Construction::UswSingleDivisible => {
            let inst = gen_usw_single_divisible(p.int("c")?, p.int("k")?, p.int("n")?)?;
            let (m, k) = inst.pairs()[0];
            let predicted = poc_usw_single(m as u64, k as u64)?;
            (inst, Objective::Usw, BoundValue::Real(predicted))
        }
        Construction::UswSingleGeneral => {
            let (m, k) = (p.int("m")?, p.int("k")?);
            let inst = gen_usw_single_general(m, k, p.int("n")?)?;
            let predicted = lower_achieved_exact(m as u64, k as u64)?;
            (inst, Objective::Usw, BoundValue::Exact(predicted))
        }
        Construction::EswSingle => {
            let (m, n, k) = (p.int("m")?, p.int("n")?, p.int("k")?);
            let inst = gen_esw_single(m, n, k)?;
            let predicted = poc_esw_single(m as u64, n as u64, k as u64)?;
            (inst, Objective::Esw, BoundValue::Exact(predicted))
        }
        Construction::UswTwo => {
            let pairs = p.pairs()?;
            let inst = gen_usw_two(&pairs)?;
            (inst, Objective::Usw, BoundValue::Exact(poc_usw_two(&pairs)?))
        }
        Construction::UswMulti => {
            let (q, k) = (p.int("q")?, p.int("k")?);
            let inst = gen_usw_multi(p.int("n")?, q, k)?;
            (inst, Objective::Usw, BoundValue::Exact(Rational::from(q) / Rational::from(k)))
        }
        Construction::EswMulti => {
            let n = p.int("n")?;
            let pairs = p.pairs()?;
            let inst = gen_esw_multi(n, &pairs)?;
            (inst, Objective::Esw, BoundValue::Exact(poc_esw_multi(n as u64, &pairs)?))
        }
    })
}

fn bound_json(b: &BoundValue) -> Value {
    match b {
        BoundValue::Exact(r) => rational_json(r),
        BoundValue::Real(x) => json!(x),
    }
}

/// Achieved ratio of `objective`: by the oracle when within budget, else
/// (utilitarian only) by the polynomial solvers.
fn measure(inst: &Instance, objective: Objective, budget: u128) -> CliResult<(Rational, &'static str)> {
    match empirical_poc_with_budget(inst, budget) {
        Ok(r) => Ok((
            match objective {
                Objective::Usw => r.usw_ratio,
                Objective::Esw => r.esw_ratio,
            },
            "oracle",
        )),
        Err(Error::BudgetExceeded { .. }) if objective == Objective::Usw => {
            let (_, opt) = opt_usw_unconstrained(inst);
            let (_, best) = opt_usw_cardinal_matching(inst)?;
            Ok((poc_ratio(&opt, &best)?, "solvers"))
        }
        Err(e) => Err(e.into()),
    }
}

fn matches(predicted: &BoundValue, achieved: &Rational) -> bool {
    match predicted {
        BoundValue::Exact(r) => r == achieved,
        BoundValue::Real(x) => (achieved.to_f64() - x).abs() <= cardfair::bounds::TOLERANCE,
    }
}

fn generate(c: Construction, raw: &[String], verify: bool, out: Option<&Path>, budget: u128) -> CliResult<u8> {
    let params = Params::parse(raw)?;
    let (inst, objective, predicted) = build(c, &params)?;
    let text = serde_json::to_string_pretty(&inst).expect("instances serialize");
    match out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| input_error(format!("{}: {e}", path.display())))?,
        None => println!("{text}"),
    }
    if !verify {
        return Ok(0);
    }
    let (achieved, method) = measure(&inst, objective, budget)?;
    let ok = matches(&predicted, &achieved);
    let report = json!({
        "objective": objective,
        "achieved": rational_json(&achieved),
        "achieved_decimal": achieved.to_f64(),
        "predicted": bound_json(&predicted),
        "predicted_decimal": predicted.to_f64(),
        "method": method,
        "match": ok,
    });
    let report = serde_json::to_string_pretty(&report).expect("json values serialize");
    // keep stdout a clean instance when the instance goes there
    if out.is_some() {
        println!("{report}");
    } else {
        eprintln!("{report}");
    }
    Ok(if ok { 0 } else { 1 })
}

fn verify(path: &Path, budget: u128) -> CliResult<u8> {
    let inst = load(path)?;
    let report = empirical_poc_with_budget(&inst, budget)?;
    let mut all_hold = true;
    let bounds: Vec<Value> = applicable_bounds(&inst)?
        .into_iter()
        .map(|b| {
            let measured = match b.objective {
                Objective::Usw => &report.usw_ratio,
                Objective::Esw => &report.esw_ratio,
            };
            let holds = b.value.admits(measured);
            all_hold &= holds;
            json!({
                "name": b.name,
                "objective": b.objective,
                "bound": bound_json(&b.value),
                "bound_decimal": b.value.to_f64(),
                "measured": rational_json(measured),
                "holds": holds,
                "attained": matches(&b.value, measured),
                "tight_family": b.tight,
                "note": b.note,
            })
        })
        .collect();
    print_json(&json!({ "report": report, "bounds": bounds }));
    Ok(if all_hold { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn sweep_cmd(
    mode: SweepMode,
    out: Option<&Path>,
    m: u64,
    seed: Option<u64>,
    n_max: usize,
    m_max: usize,
    trials: usize,
    budget: u128,
) -> CliResult<u8> {
    let table = match mode {
        SweepMode::Fig1 => sweep::fig1(m)?,
        SweepMode::Fig2 => sweep::fig2(m)?,
        SweepMode::Grid => {
            let seed = seed.ok_or_else(|| input_error("grid mode requires --seed"))?;
            sweep::grid(&GridConfig {
                n_max,
                m_max,
                trials,
                seed,
                budget,
            })?
        }
    };
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            table.write_csv(file)?;
        }
        None => {
            table.write_csv(io::stdout().lock())?;
            io::stdout().flush().ok();
        }
    }
    let failing = table.header.iter().position(|h| h == "ok").map_or(0, |col| {
        table.rows.iter().filter(|r| r[col] != "true").count()
    });
    Ok(if failing == 0 { 0 } else { 1 })
}
