//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line for each, and exits nonzero if any failed.
//!
//! SINRs are recomputed here from raw metric distances rather than through
//! the library's evaluator, so a bug shared by solver and evaluator cannot
//! hide.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use sinrsched::experiment::{self, ExperimentConfig, ExperimentName};
use sinrsched::flexible::{ceil_log2, covers, solve_flexible, solve_latency};
use sinrsched::generate::{gen_random, stream, DemandSpec, GenConfig, PowerSpec, UtilityFamily};
use sinrsched::lab::{gen_greedy_adversary, reverse_dual, simulate_aloha, strengthen, ProbSchedule};
use sinrsched::oracle::{brute_opt_flexible_fixed, check_admissible, check_admissible_with, check_spectral};
use sinrsched::verify::{verify_flexible, verify_schedule};
use sinrsched::{
    solve_limited, solve_unlimited, Algorithm, Instance, LinkId, PowerAssignment, PowerCap, Utility,
};

/// Relative SINR slack shared by every feasibility check.
const SINR_SLACK: f64 = 1e-9;
/// Relative slack on the power cap.
const CAP_SLACK: f64 = 1e-12;
/// Fulfilment tolerance on demands.
const DEMAND_SLACK: f64 = 1e-9;
const ALPHAS: [f64; 3] = [2.0, 2.5, 4.0];
const SEED: u64 = 20_240_611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// SINR of `target` among `active` computed from scratch.
fn raw_sinr(inst: &Instance, active: &[LinkId], powers: &PowerAssignment, target: LinkId) -> f64 {
    let m = inst.metric();
    let alpha = inst.alpha();
    let t = inst.link(target).unwrap();
    let recv = t.receiver;
    let loss = |from: usize| m.distance(from, recv).unwrap().powf(alpha);
    let mut interference = 0.0;
    for &id in active {
        if id != target {
            let p = powers.get(id).unwrap();
            if p > 0.0 {
                interference += p / loss(inst.link(id).unwrap().sender);
            }
        }
    }
    powers.get(target).unwrap() / loss(t.sender) / (interference + inst.noise())
}

fn sinr_ok(inst: &Instance, active: &[LinkId], powers: &PowerAssignment, beta: &dyn Fn(LinkId) -> f64) -> usize {
    active
        .iter()
        .filter(|&&id| raw_sinr(inst, active, powers, id) < beta(id) * (1.0 - SINR_SLACK))
        .count()
}

fn own_threshold(inst: &Instance) -> impl Fn(LinkId) -> f64 + '_ {
    |id| inst.threshold(id).unwrap()
}

fn trial_rng(tag: u64, t: u64) -> rand_chacha::ChaCha8Rng {
    stream(SEED, 100 + tag, t)
}

fn random_instance(tag: u64, t: u64, max_n: usize, area: f64) -> GenConfig {
    let mut rng = trial_rng(tag, t);
    let n = rng.random_range(1..=max_n);
    let mut c = GenConfig::new(n, rng.random());
    c.alpha = ALPHAS[rng.random_range(0..ALPHAS.len())];
    c.area = area;
    c
}

fn criterion_1() -> Outcome {
    let mut violations = 0;
    let mut links = 0;
    for t in 0..1000 {
        let inst = gen_random(&random_instance(1, t, 50, 60.0)).unwrap();
        let sol = solve_unlimited(&inst, &inst.link_ids()).unwrap();
        links += sol.len();
        violations += sinr_ok(&inst, &sol.selected, &sol.powers, &own_threshold(&inst));
    }
    outcome(violations == 0, format!("{links} selected links, {violations} below threshold"))
}

fn criterion_2() -> Outcome {
    let (mut cap_violations, mut sinr_violations, mut links) = (0, 0, 0);
    for t in 0..1000 {
        let mut c = random_instance(2, t, 50, 60.0);
        let cap = 10f64.powf(trial_rng(20, t).random_range(-4.0..0.0));
        c.p_max = PowerCap::Finite(cap);
        let inst = gen_random(&c).unwrap();
        let sol = solve_limited(&inst, &inst.link_ids()).unwrap();
        links += sol.len();
        cap_violations += sol.powers.iter().filter(|&(_, p)| p > cap * (1.0 + CAP_SLACK)).count();
        sinr_violations += sinr_ok(&inst, &sol.selected, &sol.powers, &own_threshold(&inst));
    }
    outcome(
        cap_violations == 0 && sinr_violations == 0,
        format!("{links} selected links, {cap_violations} over cap, {sinr_violations} below threshold"),
    )
}

fn criterion_3() -> Outcome {
    let (mut subsets, mut feasible, mut disagreements) = (0usize, 0usize, Vec::new());
    for t in 0..500 {
        let mut c = random_instance(3, t, 6, 8.0);
        c.noise = 1e-9;
        let inst = gen_random(&c).unwrap();
        let ids = inst.link_ids();
        for mask in 1u32..(1 << ids.len()) {
            let subset: Vec<LinkId> = (0..ids.len()).filter(|i| mask >> i & 1 == 1).map(|i| ids[i]).collect();
            let fp = check_admissible(&inst, &subset, PowerCap::Infinite).unwrap();
            let sp = check_spectral(&inst, &subset).unwrap();
            subsets += 1;
            feasible += fp.feasible as usize;
            if fp.feasible != sp.feasible {
                disagreements.push((t, mask, sp.spectral_radius));
            }
        }
    }
    outcome(
        disagreements.is_empty(),
        format!(
            "{subsets} subsets ({feasible} admissible), {} disagreements {:?}",
            disagreements.len(),
            &disagreements[..disagreements.len().min(5)]
        ),
    )
}

fn criterion_4() -> Outcome {
    let config = ExperimentConfig {
        trials: 200,
        seed: SEED,
        ..ExperimentConfig::new(ExperimentName::Ratio)
    };
    let report = experiment::run(&config).unwrap();
    let empty = report.summary.extra["empty_with_opt"];
    let stats: Vec<String> = report
        .summary
        .by_algorithm
        .iter()
        .map(|(alg, s)| {
            format!(
                "{alg} OPT/ALG min {:.2} median {:.2} mean {:.3} max {:.2}",
                s.min.unwrap_or(f64::NAN),
                s.median.unwrap_or(f64::NAN),
                s.mean.unwrap_or(f64::NAN),
                s.max.unwrap_or(f64::NAN)
            )
        })
        .collect();
    outcome(
        report.passed() && empty == 0.0 && report.summary.feasibility_violations == 0,
        format!(
            "{} rows, {} empty with OPT >= 1, {} certification failures; {}",
            report.rows.len(),
            empty,
            report.summary.feasibility_violations,
            stats.join("; ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut ratios = Vec::new();
    let mut failures = Vec::new();
    for t in 0..200 {
        let mut c = random_instance(5, t, 10, 8.0);
        c.power = Some(PowerSpec::Uniform { power: 1.0 });
        c.utility = Some(UtilityFamily::Step {
            steps: 4,
            gamma_max: 50.0,
            value_max: 5.0,
        });
        let inst = gen_random(&c).unwrap();
        let ids = inst.link_ids();
        let run = solve_flexible(&inst, Algorithm::Fixed, &ids).unwrap();
        if !verify_flexible(&inst, &run).unwrap().ok() {
            failures.push(format!("trial {t}: flexible run fails re-verification"));
        }
        let best = run.best();
        let alg: f64 = best
            .selected
            .iter()
            .map(|&id| {
                let gamma = raw_sinr(&inst, &best.selected, &best.powers, id);
                let beta = best.thresholds[&id];
                let u = inst.link(id).unwrap().utility.as_ref().unwrap();
                if gamma >= beta * (1.0 - SINR_SLACK) {
                    u.value(gamma.max(beta))
                } else {
                    u.value(gamma)
                }
            })
            .sum();
        let powers = PowerAssignment::uniform(&ids, 1.0);
        let opt = brute_opt_flexible_fixed(&inst, &ids, &powers).unwrap().value;
        let bound = opt / (4.0 * (ceil_log2(ids.len()) + 1) as f64);
        if alg < bound * (1.0 - SINR_SLACK) {
            failures.push(format!("trial {t}: ALG {alg} < OPT {opt} / 4(log n + 1)"));
        }
        if alg > 0.0 {
            let r = opt / alg;
            worst = worst.min(alg / opt.max(f64::MIN_POSITIVE));
            ratios.push(r);
        }
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios.get(ratios.len() / 2).copied().unwrap_or(f64::NAN);
    let max = ratios.last().copied().unwrap_or(f64::NAN);
    outcome(
        failures.is_empty(),
        format!(
            "OPT/ALG median {median:.3} max {max:.3} over {} instances; {} failures {:?}",
            ratios.len(),
            failures.len(),
            &failures[..failures.len().min(3)]
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let (mut slots, mut scheme1) = (0, 0);
    let mut stretch: f64 = 0.0;
    for t in 0..100 {
        let mut c = random_instance(6, t, 12, 10.0);
        c.p_max = PowerCap::Finite(1.0);
        let family = if t % 2 == 0 {
            UtilityFamily::Shannon { scale: 1.0, cutoff: 1.0 }
        } else {
            UtilityFamily::Step {
                steps: 3,
                gamma_max: 40.0,
                value_max: 3.0,
            }
        };
        c.utility = Some(family);
        c.demand = Some(DemandSpec::RelativeToMax { min: 0.5, max: 3.0 });
        let inst = gen_random(&c).unwrap();
        let ids = inst.link_ids();
        let s = solve_latency(&inst, Algorithm::Limited, &ids).unwrap();
        slots += s.len();
        scheme1 += (s.scheme == 1) as usize;

        // independent length bound
        let u_max: BTreeMap<LinkId, f64> = ids
            .iter()
            .map(|&id| {
                let l = inst.link(id).unwrap();
                let d = inst.metric().distance(l.sender, l.receiver).unwrap();
                let cap = 1.0 / (inst.noise() * d.powf(inst.alpha()));
                (id, l.utility.as_ref().unwrap().max_utility(cap).unwrap())
            })
            .collect();
        let n = s.demands.len();
        let levels = (ceil_log2(n) + 1) as usize;
        let units: usize = s.demands.iter().map(|(id, d)| (d / u_max[id]).ceil() as usize).sum();
        let bound = 4 * units * levels * levels + n;
        if s.len() > bound {
            failures.push(format!("trial {t}: {} slots exceed bound {bound}", s.len()));
        }
        stretch = stretch.max(s.len() as f64 / units.max(1) as f64);

        // fulfilment recomputed from raw SINRs
        let mut delivered: BTreeMap<LinkId, f64> = BTreeMap::new();
        for (i, slot) in s.slots.iter().enumerate() {
            let beta = |id: LinkId| slot.thresholds[&id];
            if sinr_ok(&inst, &slot.selected, &slot.powers, &beta) > 0 {
                failures.push(format!("trial {t} slot {i}: SINR below scheduled threshold"));
            }
            if slot.powers.iter().any(|(_, p)| p > 1.0 * (1.0 + CAP_SLACK)) {
                failures.push(format!("trial {t} slot {i}: power over cap"));
            }
            let cert = check_admissible_with(&inst, &slot.selected, &slot.thresholds, inst.p_max()).unwrap();
            if !cert.feasible {
                failures.push(format!("trial {t} slot {i}: oracle rejects slot"));
            }
            for &id in &slot.selected {
                let gamma = raw_sinr(&inst, &slot.selected, &slot.powers, id);
                let u = inst.link(id).unwrap().utility.as_ref().unwrap();
                *delivered.entry(id).or_default() += u.value(gamma.max(slot.thresholds[&id]));
            }
        }
        for (id, &d) in &s.demands {
            let got = delivered.get(id).copied().unwrap_or(0.0);
            if got < d - DEMAND_SLACK * d.max(1.0) || !covers(got, d) {
                failures.push(format!("trial {t}: link {id} got {got} of {d}"));
            }
        }
        if !verify_schedule(&inst, &s).unwrap().ok() {
            failures.push(format!("trial {t}: schedule fails re-verification"));
        }

        // per-slot progress, replayed from the residuals
        let mut prev: BTreeMap<LinkId, f64> = s.demands.clone();
        for (i, residual) in s.residual_demands.iter().enumerate() {
            let completed = residual.iter().any(|(id, &r)| prev[id] > 0.0 && r == 0.0);
            let progress: f64 = residual.iter().map(|(id, &r)| (prev[id] - r) / u_max[id]).sum();
            let ok = if s.scheme == 2 {
                let singleton = prev
                    .iter()
                    .filter(|(_, &r)| r > 0.0)
                    .map(|(id, &r)| (r / u_max[id]).min(1.0))
                    .fold(0.0, f64::max);
                completed || progress >= singleton * (1.0 - SINR_SLACK)
            } else {
                progress > 0.0
            };
            if !ok {
                failures.push(format!("trial {t} slot {i}: no progress"));
            }
            prev = residual.clone();
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{slots} slots over 100 schedules ({scheme1} from the rounded scheme), max length/sum(ceil(delta/u_max)) {stretch:.2}; {} failures {:?}",
            failures.len(),
            &failures[..failures.len().min(3)]
        ),
    )
}

/// The 100 admissible sets shared by criteria 7 and 8, with the oracle's
/// minimal powers as witnesses.
fn harvested_sets() -> Vec<(Instance, Vec<LinkId>, PowerAssignment)> {
    (0..100u64)
        .map(|t| {
            let mut c = GenConfig::new(400, trial_rng(7, t).random());
            c.alpha = ALPHAS[t as usize % 3];
            c.area = 400.0;
            let inst = gen_random(&c).unwrap();
            let sol = solve_unlimited(&inst, &inst.link_ids()).unwrap();
            let witness = check_admissible(&inst, &sol.selected, PowerCap::Infinite)
                .unwrap()
                .powers
                .unwrap();
            (inst, sol.selected, witness)
        })
        .collect()
}

fn criterion_7(sets: &[(Instance, Vec<LinkId>, PowerAssignment)]) -> Outcome {
    let mut failures = Vec::new();
    let mut most = BTreeMap::new();
    for (t, (inst, set, witness)) in sets.iter().enumerate() {
        for c in [1.0, 2.0, 3.0] {
            let d = strengthen(inst, set, witness, c).unwrap();
            let bound = (2.0 * c).ceil().powi(2) as usize;
            if d.parts.len() > bound {
                failures.push(format!("set {t}, c {c}: {} parts", d.parts.len()));
            }
            let mut all: Vec<LinkId> = d.parts.concat();
            all.sort();
            if all != *set {
                failures.push(format!("set {t}, c {c}: not a partition"));
            }
            let scaled: BTreeMap<LinkId, f64> = set.iter().map(|&id| (id, c * inst.threshold(id).unwrap())).collect();
            for part in &d.parts {
                let cert = check_admissible_with(inst, part, &scaled, PowerCap::Infinite).unwrap();
                let ok = cert.feasible
                    && sinr_ok(inst, part, cert.powers.as_ref().unwrap(), &|id| scaled[&id]) == 0;
                if !ok {
                    failures.push(format!("set {t}, c {c}: part not admissible at c * beta"));
                }
            }
            let e = most.entry(c as u32).or_insert(0);
            *e = (*e).max(d.parts.len());
        }
    }
    let sizes: Vec<usize> = sets.iter().map(|s| s.1.len()).collect();
    outcome(
        failures.is_empty(),
        format!(
            "set sizes {}..{}, most parts per c {:?}; {} failures {:?}",
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap(),
            most,
            failures.len(),
            &failures[..failures.len().min(3)]
        ),
    )
}

fn criterion_8(sets: &[(Instance, Vec<LinkId>, PowerAssignment)]) -> Outcome {
    let mut failures = Vec::new();
    let mut nontrivial = 0;
    let mut worst: f64 = 0.0;
    for (t, (inst, set, witness)) in sets.iter().enumerate() {
        let r = reverse_dual(inst, set, witness).unwrap();
        let floor = set.len() / 72;
        nontrivial += (floor > 0) as usize;
        if r.subset.len() < floor {
            failures.push(format!("set {t}: {} < floor({}/72)", r.subset.len(), set.len()));
        }
        let reversed = inst.reversed(&r.subset).unwrap();
        let cert = check_admissible(&reversed, &r.subset, PowerCap::Infinite).unwrap();
        let ok = cert.feasible
            && sinr_ok(&reversed, &r.subset, cert.powers.as_ref().unwrap(), &own_threshold(&reversed)) == 0;
        if !ok {
            failures.push(format!("set {t}: reversed subset not admissible"));
        }
        worst = worst.max(set.len() as f64 / r.subset.len().max(1) as f64);
    }
    outcome(
        failures.is_empty(),
        format!(
            "{nontrivial} sets with |L| >= 72, worst |L|/|subset| {worst:.2}; {} failures {:?}",
            failures.len(),
            &failures[..failures.len().min(3)]
        ),
    )
}

fn criterion_9() -> Outcome {
    let k = 8;
    let inst = gen_greedy_adversary(k, 2.0).unwrap();
    let sol = solve_unlimited(&inst, &inst.link_ids()).unwrap();
    let reversed: Vec<LinkId> = inst.link_ids().into_iter().skip(1).collect();
    let cert = check_admissible(&inst, &reversed, PowerCap::Infinite).unwrap();
    let certified = cert.feasible && sinr_ok(&inst, &reversed, cert.powers.as_ref().unwrap(), &own_threshold(&inst)) == 0;
    let ratio = if certified { k as f64 / sol.len() as f64 } else { 0.0 };
    outcome(
        sol.len() == 1 && certified && ratio >= 8.0,
        format!("greedy picks {} link(s), {k} reversed links certified: {certified}, ratio {ratio}", sol.len()),
    )
}

fn criterion_10() -> Outcome {
    let k = 32;
    let report = simulate_aloha(k, &ProbSchedule::Uniform, 400, SEED, experiment::aloha_round_cap(k)).unwrap();
    let rounds: Vec<usize> = report.trials.iter().filter_map(|t| t.rounds).collect();
    let mean = rounds.iter().sum::<usize>() as f64 / rounds.len().max(1) as f64;
    outcome(
        report.within_horizon <= 0.5,
        format!(
            "P(T <= {}) = {:.4} over 400 trials, mean T {mean:.1}, min T {:?}, censored {}",
            report.horizon,
            report.within_horizon,
            rounds.iter().min(),
            400 - rounds.len()
        ),
    )
}

fn timed(results: &mut Vec<bool>, id: u32, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let pass = o.pass && took < limit;
    println!(
        "criterion {id:>2} [{}] {title}: {} ({:.2}s, limit {}s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        limit.as_secs_f64()
    );
    results.push(pass);
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let secs = Duration::from_secs;
    let mut r = Vec::new();
    timed(&mut r, 1, "feasibility of the unlimited solver", secs(60), criterion_1);
    timed(&mut r, 2, "power cap of the limited solver", secs(60), criterion_2);
    timed(&mut r, 3, "fixed point vs spectral oracle", secs(120), criterion_3);
    timed(&mut r, 4, "approximation ratios against brute force", secs(300), criterion_4);
    timed(&mut r, 5, "flexible rates against fixed-power optimum", secs(300), criterion_5);
    timed(&mut r, 6, "latency schedules fulfil demands", secs(300), criterion_6);
    let start = Instant::now();
    let sets = harvested_sets();
    let harvest = start.elapsed();
    timed(&mut r, 7, "signal strengthening", secs(120) - harvest, || criterion_7(&sets));
    timed(&mut r, 8, "link reversal", secs(120) - harvest, || criterion_8(&sets));
    timed(&mut r, 9, "greedy gap on the adversary", Duration::from_secs(1), criterion_9);
    timed(&mut r, 10, "randomized access bound", secs(30), criterion_10);
    let passed = r.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", r.len());
    if passed == r.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
