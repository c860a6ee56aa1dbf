//! Batch experiments with per-trial rows, summaries and CSV export.
//!
//! Every random choice is derived from the configured seed, so two runs of
//! the same configuration produce the same rows apart from `runtime_ms`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generate::{gen_random, stream, GenConfig, PowerSpec};
use crate::lab::{gen_greedy_adversary, reverse_dual, simulate_aloha, strengthen, ProbSchedule};
use crate::model::{Instance, LinkId, PowerAssignment, PowerCap, Solution};
use crate::oracle::{brute_opt_threshold, check_admissible, Regime};
use crate::threshold::{solve_fixed, solve_limited, solve_unlimited};
use crate::verify::{verify_solution, ViolationKind};

/// Stream tag for per-trial seeds, distinct from the generator's field tags.
const TRIAL: u64 = 16;
/// Exponents cycled through when no alpha is configured.
pub const ALPHAS: [f64; 3] = [2.0, 2.5, 4.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Ratio,
    Adversary,
    Aloha,
    Strengthen,
    Reverse,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] = [
        ExperimentName::Ratio,
        ExperimentName::Adversary,
        ExperimentName::Aloha,
        ExperimentName::Strengthen,
        ExperimentName::Reverse,
    ];

    fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Ratio => "ratio",
            ExperimentName::Adversary => "adversary",
            ExperimentName::Aloha => "aloha",
            ExperimentName::Strengthen => "strengthen",
            ExperimentName::Reverse => "reverse",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    /// Largest instance size for `ratio`, set size for `strengthen` and
    /// `reverse`, and `k` for `adversary` and `aloha`.
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Path-loss exponent; `None` cycles through [`ALPHAS`].
    pub alpha: Option<f64>,
    /// Power cap for the limited regime and uniform power for the fixed one.
    pub p_max: PowerCap,
    /// Side of the deployment square; `None` picks a size-dependent default.
    pub area: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(name: ExperimentName) -> Self {
        let (n, trials) = match name {
            ExperimentName::Ratio => (10, 200),
            ExperimentName::Adversary => (8, 1),
            ExperimentName::Aloha => (32, 400),
            ExperimentName::Strengthen | ExperimentName::Reverse => (400, 100),
        };
        ExperimentConfig {
            name,
            n,
            trials,
            seed: 0,
            alpha: None,
            p_max: PowerCap::Finite(1.0),
            area: None,
        }
    }

    fn alpha_for(&self, trial: usize) -> f64 {
        self.alpha.unwrap_or(ALPHAS[trial % ALPHAS.len()])
    }
}

/// One CSV line. Columns, in order: trial, algorithm, instance_digest, n,
/// alg_value, opt_value, ratio, feasible, power_cap_ok, runtime_ms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub trial: usize,
    pub algorithm: String,
    /// SHA-256 of the instance JSON.
    pub instance_digest: String,
    pub n: usize,
    pub alg_value: Option<f64>,
    pub opt_value: Option<f64>,
    pub ratio: Option<f64>,
    pub feasible: bool,
    pub power_cap_ok: bool,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub count: usize,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

impl RatioStats {
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return RatioStats::default();
        }
        v.sort_by(f64::total_cmp);
        let m = v.len();
        let median = if m % 2 == 1 {
            v[m / 2]
        } else {
            (v[m / 2 - 1] + v[m / 2]) / 2.0
        };
        RatioStats {
            count: m,
            min: Some(v[0]),
            median: Some(median),
            max: Some(v[m - 1]),
            mean: Some(v.iter().sum::<f64>() / m as f64),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub feasibility_violations: usize,
    pub power_cap_violations: usize,
    pub by_algorithm: BTreeMap<String, RatioStats>,
    /// Experiment-specific figures such as an empirical probability.
    pub extra: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub summary: Summary,
    /// Human-readable reasons the run failed its checks.
    pub failures: Vec<String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn digest(inst: &Instance) -> Result<String> {
    Ok(hex::encode(Sha256::digest(inst.to_json()?.as_bytes())))
}

/// Seed of trial `t`, drawn from its own stream.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    stream(seed, TRIAL, trial as u64).random()
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Ratio `opt / alg`, 1 when both are zero and `None` when only `alg` is.
pub fn ratio(opt: f64, alg: f64) -> Option<f64> {
    match (opt == 0.0, alg == 0.0) {
        (true, true) => Some(1.0),
        (false, true) => None,
        _ => Some(opt / alg),
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    if config.n == 0 {
        return Err(Error::InvalidConfig("n must be positive".into()));
    }
    let (rows, extra, mut failures) = match config.name {
        ExperimentName::Ratio => ratio_experiment(config)?,
        ExperimentName::Adversary => adversary_experiment(config)?,
        ExperimentName::Aloha => aloha_experiment(config)?,
        ExperimentName::Strengthen => strengthen_experiment(config)?,
        ExperimentName::Reverse => reverse_experiment(config)?,
    };
    let mut ratios: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in &rows {
        let entry = ratios.entry(row.algorithm.clone()).or_default();
        entry.extend(row.ratio);
    }
    let summary = Summary {
        rows: rows.len(),
        feasibility_violations: rows.iter().filter(|r| !r.feasible).count(),
        power_cap_violations: rows.iter().filter(|r| !r.power_cap_ok).count(),
        by_algorithm: ratios.iter().map(|(k, v)| (k.clone(), RatioStats::of(v))).collect(),
        extra,
    };
    for row in rows.iter().filter(|r| !r.feasible || !r.power_cap_ok) {
        failures.push(format!(
            "trial {} ({}): feasible={} power_cap_ok={}",
            row.trial, row.algorithm, row.feasible, row.power_cap_ok
        ));
    }
    Ok(ExperimentReport {
        config: config.clone(),
        seed: config.seed,
        rows,
        summary,
        failures,
    })
}

type Outcome = (Vec<Row>, BTreeMap<String, f64>, Vec<String>);

/// Random instance of trial `t`: size uniform in `1..=n` for `ratio`,
/// exactly `n` otherwise.
fn trial_instance(config: &ExperimentConfig, t: usize, fixed_size: bool, cap: PowerCap) -> Result<Instance> {
    let seed = trial_seed(config.seed, t);
    let n = if fixed_size {
        config.n
    } else {
        1 + (seed % config.n as u64) as usize
    };
    let mut g = GenConfig::new(n, seed);
    g.alpha = config.alpha_for(t);
    let density = if fixed_size { 20.0 } else { 10.0 };
    g.area = config.area.unwrap_or(density * (n as f64).sqrt());
    g.p_max = cap;
    g.power = Some(PowerSpec::Uniform {
        power: if config.p_max.is_finite() {
            config.p_max.value()
        } else {
            1.0
        },
    });
    gen_random(&g)
}

fn ratio_row(
    trial: usize,
    algorithm: &str,
    inst: &Instance,
    sol: &Solution,
    regime: &Regime,
    certified: bool,
    start: Instant,
) -> Result<Row> {
    let ids = inst.link_ids();
    let check = verify_solution(inst, sol)?;
    let opt = brute_opt_threshold(inst, &ids, regime)?.value;
    let alg = sol.len() as f64;
    Ok(Row {
        trial,
        algorithm: algorithm.into(),
        instance_digest: digest(inst)?,
        n: ids.len(),
        alg_value: Some(alg),
        opt_value: Some(opt),
        ratio: ratio(opt, alg),
        feasible: check.ok() && certified,
        power_cap_ok: check.count(ViolationKind::PowerCap) == 0,
        runtime_ms: elapsed_ms(start),
    })
}

fn ratio_trial(config: &ExperimentConfig, t: usize) -> Result<Vec<Row>> {
    let capped = trial_instance(config, t, false, config.p_max)?;
    let free = trial_instance(config, t, false, PowerCap::Infinite)?;
    let ids = capped.link_ids();
    let mut rows = Vec::with_capacity(3);

    let start = Instant::now();
    let sol = solve_unlimited(&free, &ids)?;
    let cert = check_admissible(&free, &sol.selected, PowerCap::Infinite)?.feasible;
    rows.push(ratio_row(t, "unlimited", &free, &sol, &Regime::Variable, cert, start)?);

    let start = Instant::now();
    let sol = solve_limited(&capped, &ids)?;
    let cert = check_admissible(&capped, &sol.selected, capped.p_max())?.feasible;
    rows.push(ratio_row(t, "limited", &capped, &sol, &Regime::VariableCapped, cert, start)?);

    let start = Instant::now();
    let sol = solve_fixed(&capped, &ids)?;
    let powers = ids
        .iter()
        .map(|&id| Ok((id, capped.link(id)?.fixed_power.ok_or(Error::MissingPower(id))?)))
        .collect::<Result<Vec<(LinkId, f64)>>>()?;
    let mut fixed = PowerAssignment::new();
    for (id, p) in powers {
        fixed.set(id, p);
    }
    rows.push(ratio_row(t, "fixed", &capped, &sol, &Regime::Fixed { powers: fixed }, true, start)?);
    Ok(rows)
}

fn ratio_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let rows: Vec<Row> = (0..config.trials)
        .into_par_iter()
        .map(|t| ratio_trial(config, t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let empty = rows.iter().filter(|r| r.ratio.is_none()).count();
    let failures = rows
        .iter()
        .filter(|r| r.ratio.is_none())
        .map(|r| format!("trial {} ({}): empty output with OPT {:?}", r.trial, r.algorithm, r.opt_value))
        .collect();
    let extra = BTreeMap::from([("empty_with_opt".to_string(), empty as f64)]);
    Ok((rows, extra, failures))
}

fn adversary_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let k = config.n;
    let start = Instant::now();
    let inst = gen_greedy_adversary(k, config.alpha.unwrap_or(2.0))?;
    let sol = solve_unlimited(&inst, &inst.link_ids())?;
    let reversed: Vec<LinkId> = inst.link_ids().into_iter().skip(1).collect();
    let cert = check_admissible(&inst, &reversed, PowerCap::Infinite)?;
    let check = verify_solution(&inst, &sol)?;
    let opt = if cert.feasible { k as f64 } else { 0.0 };
    let alg = sol.len() as f64;
    let r = ratio(opt, alg);
    let row = Row {
        trial: 0,
        algorithm: "unlimited".into(),
        instance_digest: digest(&inst)?,
        n: inst.links().len(),
        alg_value: Some(alg),
        opt_value: Some(opt),
        ratio: r,
        feasible: check.ok(),
        power_cap_ok: true,
        runtime_ms: elapsed_ms(start),
    };
    let mut failures = Vec::new();
    if !cert.feasible {
        failures.push(format!("the {k} reversed links are not certified admissible"));
    }
    if r.is_none_or(|r| r < k as f64) {
        failures.push(format!("ratio {r:?} below {k}"));
    }
    Ok((vec![row], BTreeMap::from([("k".to_string(), k as f64)]), failures))
}

/// Round cap per trial in the access-protocol simulation.
pub fn aloha_round_cap(k: usize) -> usize {
    1000 * k.max(1)
}

fn aloha_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let k = config.n;
    let start = Instant::now();
    let report = simulate_aloha(k, &ProbSchedule::Uniform, config.trials, config.seed, aloha_round_cap(k))?;
    let per_trial = elapsed_ms(start) / config.trials as f64;
    let digest = digest(&crate::lab::aloha_instance(k)?)?;
    let rows = report
        .trials
        .iter()
        .enumerate()
        .map(|(t, tr)| Row {
            trial: t,
            algorithm: "aloha".into(),
            instance_digest: digest.clone(),
            n: 2 * k,
            alg_value: tr.rounds.map(|r| r as f64),
            opt_value: None,
            ratio: None,
            feasible: true,
            power_cap_ok: true,
            runtime_ms: per_trial,
        })
        .collect();
    let censored = report.trials.iter().filter(|t| t.rounds.is_none()).count();
    let extra = BTreeMap::from([
        ("horizon".to_string(), report.horizon as f64),
        ("within_horizon".to_string(), report.within_horizon),
        ("censored".to_string(), censored as f64),
        ("p".to_string(), ProbSchedule::Uniform.at(1, k)),
    ]);
    let mut failures = Vec::new();
    if report.within_horizon > 0.5 {
        failures.push(format!(
            "P(T <= {}) = {} exceeds 1/2",
            report.horizon, report.within_horizon
        ));
    }
    Ok((rows, extra, failures))
}

/// Scales exercised by the strengthening experiment.
pub const STRENGTHEN_SCALES: [f64; 3] = [1.0, 2.0, 3.0];

/// A greedy solution together with the oracle's minimal powers for it. Those
/// powers meet every threshold with equality, which leaves the constructions
/// no slack to hide in.
fn harvested(config: &ExperimentConfig, t: usize) -> Result<(Instance, Solution, PowerAssignment)> {
    let inst = trial_instance(config, t, true, PowerCap::Infinite)?;
    let sol = solve_unlimited(&inst, &inst.link_ids())?;
    let witness = check_admissible(&inst, &sol.selected, PowerCap::Infinite)?
        .powers
        .ok_or_else(|| Error::NotAdmissible(sol.selected[0]))?;
    Ok((inst, sol, witness))
}

fn strengthen_trial(config: &ExperimentConfig, t: usize) -> Result<(Vec<Row>, Vec<String>)> {
    let (inst, sol, witness) = harvested(config, t)?;
    let digest = digest(&inst)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for c in STRENGTHEN_SCALES {
        let start = Instant::now();
        let d = strengthen(&inst, &sol.selected, &witness, c)?;
        let mut covered: Vec<LinkId> = d.parts.concat();
        covered.sort();
        let partition = covered == sol.selected;
        let within = d.parts.len() <= d.bound();
        if !partition {
            failures.push(format!("trial {t} (c = {c}): parts do not partition the set"));
        }
        if !within {
            failures.push(format!("trial {t} (c = {c}): {} parts exceed {}", d.parts.len(), d.bound()));
        }
        rows.push(Row {
            trial: t,
            algorithm: format!("strengthen_c{c}"),
            instance_digest: digest.clone(),
            n: sol.len(),
            alg_value: Some(d.parts.len() as f64),
            opt_value: Some(d.bound() as f64),
            ratio: Some(d.parts.len() as f64 / d.bound() as f64),
            feasible: d.certified && partition && within,
            power_cap_ok: true,
            runtime_ms: elapsed_ms(start),
        });
    }
    Ok((rows, failures))
}

fn strengthen_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let results = (0..config.trials)
        .into_par_iter()
        .map(|t| strengthen_trial(config, t))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in results {
        rows.extend(r);
        failures.extend(f);
    }
    Ok((rows, BTreeMap::new(), failures))
}

fn reverse_trial(config: &ExperimentConfig, t: usize) -> Result<(Row, Vec<String>)> {
    let (inst, sol, witness) = harvested(config, t)?;
    let start = Instant::now();
    let r = reverse_dual(&inst, &sol.selected, &witness)?;
    let size = sol.len();
    let mut failures = Vec::new();
    if r.subset.len() < size / 72 {
        failures.push(format!("trial {t}: subset {} below floor({size}/72)", r.subset.len()));
    }
    if 2 * r.survivors.len() < size {
        failures.push(format!("trial {t}: only {} of {size} links pass the averaging bound", r.survivors.len()));
    }
    let row = Row {
        trial: t,
        algorithm: "reverse".into(),
        instance_digest: digest(&inst)?,
        n: size,
        alg_value: Some(r.subset.len() as f64),
        opt_value: Some(size as f64),
        ratio: ratio(size as f64, r.subset.len() as f64),
        feasible: r.certificate.feasible && failures.is_empty(),
        power_cap_ok: true,
        runtime_ms: elapsed_ms(start),
    };
    Ok((row, failures))
}

fn reverse_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let results = (0..config.trials)
        .into_par_iter()
        .map(|t| reverse_trial(config, t))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in results {
        rows.push(r);
        failures.extend(f);
    }
    Ok((rows, BTreeMap::new(), failures))
}
