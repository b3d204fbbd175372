use std::collections::BTreeMap;

use monorun::convergence::{self, TrajectoryConfig, TrialSchedule};
use monorun::error::{Error, Result};
use monorun::exact::{self, ExactLaws, ExactPmf};
use monorun::montecarlo::{self, EmpiricalDistribution, TrialConfig};
use monorun::scan::{self, PermutationSample, Statistic};
use monorun::theory::{self, FactorialMode, PoissonApprox, Schedule};
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::output::{OutputRecord, Table, SCHEMA_VERSION};

fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| "NaN".into())
}

fn rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn exact_value(r: &BigRational) -> Value {
    json!({ "exact": rational(r), "decimal": exact::to_f64(r) })
}

fn record(command: &'static str, params: Value, seed: u64, results: Value) -> OutputRecord {
    let params = match params {
        Value::Object(map) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    };
    OutputRecord {
        schema_version: SCHEMA_VERSION,
        command,
        params,
        seed,
        results,
    }
}

/// Parses a permutation given as integers separated by whitespace, commas
/// or slashes, possibly spread over several arguments.
pub fn parse_permutation(args: &[String]) -> Result<PermutationSample> {
    let tokens: Vec<&str> = args
        .iter()
        .flat_map(|a| a.split(|c: char| c.is_whitespace() || c == ',' || c == '/'))
        .filter(|t| !t.is_empty())
        .collect();
    let values = tokens
        .iter()
        .map(|t| {
            t.parse::<u32>().map_err(|_| Error::InvalidPermutation {
                n: tokens.len(),
                reason: format!("'{t}' is not a positive integer"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PermutationSample::new(values)
}

pub fn scan(sample: &PermutationSample, ks: &[usize], seed: u64) -> Result<(OutputRecord, Table)> {
    let n = sample.len();
    let ks: Vec<usize> = if ks.is_empty() {
        (2..n).collect()
    } else {
        ks.to_vec()
    };
    let profile = scan::maximal_run_profile(sample)?;
    let reports = scan::block_count_reports(sample, &ks)?;
    let mut table = Table::new(&["n", "k", "M", "M_strict", "L"]);
    let mut rows = Vec::new();
    for r in &reports {
        let blocks = scan::strict_block_positions(sample, r.k)?;
        table.push(vec![
            r.n.to_string(),
            r.k.to_string(),
            r.windows.to_string(),
            r.strict.to_string(),
            r.longest.to_string(),
        ]);
        rows.push(json!({
            "k": r.k,
            "M": r.windows,
            "M_strict": r.strict,
            "strict_blocks": blocks,
        }));
    }
    let results = json!({
        "n": n,
        "L": scan::longest_monotone_block(sample)?,
        "runs": profile.runs,
        "reports": rows,
    });
    let params = json!({ "permutation": sample.ranks(), "k": ks });
    Ok((record("scan", params, seed, results), table))
}

fn pmf_json(pmf: &ExactPmf) -> Value {
    let entries: Vec<Value> = pmf
        .weights
        .iter()
        .map(|(&v, w)| {
            let p = pmf.probability(v);
            json!({
                "value": v,
                "weight": w.to_string(),
                "probability": rational(&p),
                "decimal": exact::to_f64(&p),
            })
        })
        .collect();
    json!({ "total": pmf.total.to_string(), "pmf": entries, "mean": exact_value(&pmf.mean()) })
}

pub fn exact(
    n: usize,
    k: Option<usize>,
    statistic: Statistic,
    cap: usize,
    seed: u64,
) -> Result<(OutputRecord, Table)> {
    let k_val = match (statistic, k) {
        (Statistic::Longest, k) => k.unwrap_or(0),
        (_, Some(k)) => k,
        (_, None) => {
            return Err(Error::InvalidParameter(format!(
                "--k is required for statistic {statistic}"
            )))
        }
    };
    let laws = ExactLaws::enumerate_capped(n, cap)?;
    let pmf = laws.pmf(statistic, k_val)?;
    let mut results = pmf_json(&pmf);
    let obj = results.as_object_mut().expect("object");
    if statistic != Statistic::Longest {
        let void = pmf.void_probability();
        obj.insert(
            "void_probability".into(),
            json!({
                "weight": format!("{}/{}", pmf.weight(0), pmf.total),
                "exact": rational(&void),
                "decimal": exact::to_f64(&void),
            }),
        );
        if k_val < n {
            let approx = theory::void_probability_approx(n as u64, k_val as u64)?;
            obj.insert("void_approx".into(), json!(approx));
        }
    }
    if statistic == Statistic::Strict {
        let lambda = exact::lambda_strict_exact(n, k_val)?;
        obj.insert("lambda".into(), exact_value(&lambda));
        obj.insert(
            "tv_to_poisson".into(),
            json!(exact::tv_to_poisson_strict(&laws, k_val)?),
        );
        obj.insert(
            "tv_bound".into(),
            json!(theory::tv_bound_strict(n as u64, k_val as u64)?),
        );
    }
    let mut table = Table::new(&[
        "n",
        "k",
        "statistic",
        "value",
        "weight",
        "total",
        "probability",
        "decimal",
    ]);
    for (&v, w) in &pmf.weights {
        let p = pmf.probability(v);
        table.push(vec![
            n.to_string(),
            pmf.k.map(|k| k.to_string()).unwrap_or_default(),
            statistic.to_string(),
            v.to_string(),
            w.to_string(),
            pmf.total.to_string(),
            rational(&p),
            num(exact::to_f64(&p)),
        ]);
    }
    let params = json!({ "n": n, "k": pmf.k, "statistic": statistic });
    Ok((record("exact", params, seed, results), table))
}

pub struct WindowArgs {
    pub x: f64,
    pub delta: Schedule,
    pub theta: Schedule,
    pub mode: FactorialMode,
}

pub fn bounds(
    n: u64,
    ks: &[usize],
    window: Option<WindowArgs>,
    seed: u64,
) -> Result<(OutputRecord, Table)> {
    if ks.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one --k is required".into(),
        ));
    }
    let mut table = Table::new(&[
        "n",
        "k",
        "lambda",
        "lambda_asym",
        "tv_bound",
        "void_approx",
        "void_error_bound",
        "switch_bound",
        "t1_over_lambda",
        "t2_over_lambda",
        "t3_over_lambda_bound",
    ]);
    let mut rows = Vec::new();
    for &k in ks {
        let k = k as u64;
        let approx = PoissonApprox::new(n, k)?;
        let naive = theory::naive_terms(n, k)?;
        table.push(vec![
            n.to_string(),
            k.to_string(),
            num(approx.lambda),
            num(approx.lambda_asym),
            num(approx.tv_bound),
            num(approx.void_prob),
            num(approx.void_error_bound),
            num(approx.switch_bound),
            num(naive.t1_over_lambda),
            num(naive.t2_over_lambda),
            num(naive.t3_over_lambda_bound),
        ]);
        rows.push(json!({
            "k": k,
            "lambda": approx.lambda,
            "lambda_asym": approx.lambda_asym,
            "tv_bound": approx.tv_bound,
            "tv_local_term": theory::tv_local_term(k),
            "tail_term": theory::tail_term(n, k),
            "void_approx": approx.void_prob,
            "void_error_bound": approx.void_error_bound,
            "switch_bound": approx.switch_bound,
            "naive_terms": naive,
        }));
    }
    let mut results = json!({ "n": n, "bounds": rows });
    let mut params = json!({ "n": n, "k": ks });
    if n >= 16 {
        results["target_length"] = json!(theory::target_length(n)?);
    }
    if let Some(w) = window {
        let approx = theory::window_probability(n, w.x, w.delta, w.theta, w.mode)?;
        results["window"] = json!(approx);
        params["x"] = json!(w.x);
        params["gamma_mode"] = json!(w.mode);
        params["delta"] = json!(w.delta);
        params["theta"] = json!(w.theta);
    }
    Ok((record("bounds", params, seed, results), table))
}

fn counts_json(d: &EmpiricalDistribution) -> Value {
    Value::Array(
        d.counts
            .iter()
            .map(|(&v, &c)| json!({ "value": v, "count": c }))
            .collect(),
    )
}

fn push_counts(table: &mut Table, d: &EmpiricalDistribution) {
    for (&v, &c) in &d.counts {
        table.push(vec![
            d.n.to_string(),
            d.statistic.to_string(),
            d.k.map(|k| k.to_string()).unwrap_or_default(),
            v.to_string(),
            c.to_string(),
            num(c as f64 / d.trials as f64),
        ]);
    }
}

pub fn simulate(config: &TrialConfig) -> Result<(OutputRecord, Table)> {
    let report = montecarlo::run_trials(config)?;
    let mut per_k = Vec::new();
    for (m, s) in report.windows.iter().zip(&report.strict) {
        let k = m.k.expect("window law carries k");
        let (n64, k64) = (config.n as u64, k as u64);
        let approx = PoissonApprox::new(n64, k64)?;
        let void = m.probability(0);
        let tv = montecarlo::empirical_tv_to_poisson(s, approx.lambda)?;
        per_k.push(json!({
            "k": k,
            "M": counts_json(m),
            "M_strict": counts_json(s),
            "void_empirical": void,
            "void_stderr": montecarlo::proportion_stderr(void, m.trials),
            "void_approx": approx.void_prob,
            "void_error_bound": approx.void_error_bound,
            "lambda": approx.lambda,
            "mean_M_strict": s.mean(),
            "tv_to_poisson": tv,
            "tv_bound": approx.tv_bound,
        }));
    }
    let l = &report.longest;
    let results = json!({
        "n": config.n,
        "trials": config.trials,
        "L": { "counts": counts_json(l), "mean": l.mean(), "median": l.median() },
        "windows": per_k,
    });
    let mut table = Table::new(&["n", "statistic", "k", "value", "count", "frequency"]);
    for d in report.distributions() {
        push_counts(&mut table, d);
    }
    // worker count is deliberately absent: it never changes the output
    let params = json!({ "n": config.n, "k": config.ks, "trials": config.trials });
    Ok((record("simulate", params, config.seed, results), table))
}

pub fn converge(config: &TrajectoryConfig) -> Result<(OutputRecord, Table)> {
    let trajectory = convergence::trajectory(config)?;
    let mut table = Table::new(&[
        "n",
        "target",
        "trials",
        "mean_L",
        "median_L",
        "ratio",
        "predicted_median",
        "window_hit_rate",
        "window_prediction",
        "coin_ratio",
    ]);
    for p in &trajectory.points {
        table.push(vec![
            p.n.to_string(),
            num(p.target),
            p.trials.to_string(),
            num(p.mean_l),
            p.median_l.to_string(),
            num(p.ratio),
            p.predicted_median.to_string(),
            num(p.window_hit_rate),
            p.window_prediction.map(num).unwrap_or_default(),
            p.coin.as_ref().map(|c| num(c.ratio)).unwrap_or_default(),
        ]);
    }
    let params = json!({
        "grid": config.grid,
        "schedule": config.schedule,
        "x": config.x,
        "gamma_mode": config.mode,
        "delta": config.delta_fn,
        "theta": config.theta_fn,
        "coin": config.coin,
    });
    Ok((
        record("converge", params, config.seed, json!(trajectory)),
        table,
    ))
}

pub fn schedule(
    trials: Option<u64>,
    budget: Option<u64>,
    min: Option<u64>,
    max: Option<u64>,
) -> TrialSchedule {
    match trials {
        Some(t) => TrialSchedule::fixed(t),
        None => {
            let d = TrialSchedule::default();
            TrialSchedule {
                budget: budget.unwrap_or(d.budget),
                min_trials: min.unwrap_or(d.min_trials),
                max_trials: max.unwrap_or(d.max_trials),
            }
        }
    }
}
