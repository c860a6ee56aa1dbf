//! Executable constructions: signal strengthening, link reversal, and the
//! two lower-bound instances for thresholds below 1.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::{gen_line, stream, LineOptions};
use crate::model::{meets, received, sinr, Instance, LinkId, PowerAssignment, PowerCap};
use crate::oracle::{check_admissible, check_admissible_with, AdmissibilityCertificate};

/// Noise used by the lower-bound instances.
pub const ADVERSARY_NOISE: f64 = 1e-9;
/// Relative slack on the averaging bound in [`reverse_dual`].
const MARKOV_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub scale: f64,
    pub parts: Vec<Vec<LinkId>>,
    /// Whether every part passed the admissibility oracle at the scaled
    /// thresholds.
    pub certified: bool,
}

impl Decomposition {
    /// `ceil(2c)^2`.
    pub fn bound(&self) -> usize {
        let k = (2.0 * self.scale).ceil() as usize;
        k * k
    }
}

fn require_witness(
    inst: &Instance,
    set: &[LinkId],
    thresholds: &BTreeMap<LinkId, f64>,
    witness: &PowerAssignment,
) -> Result<()> {
    for &id in set {
        let beta = *thresholds.get(&id).ok_or(Error::MissingThreshold(id))?;
        if !meets(sinr(inst, set, witness, id)?, beta) {
            return Err(Error::NotAdmissible(id));
        }
    }
    Ok(())
}

/// First-fit binning: a link joins the first bin in which its SINR against
/// the links already there, under powers `2c * p`, is at least `2c * beta`.
fn first_fit(
    inst: &Instance,
    order: &[LinkId],
    thresholds: &BTreeMap<LinkId, f64>,
    witness: &PowerAssignment,
    c: f64,
) -> Result<Vec<Vec<LinkId>>> {
    let boost = 2.0 * c;
    let mut bins: Vec<Vec<LinkId>> = Vec::new();
    for &id in order {
        let pos = inst.position(id)?;
        let beta = thresholds[&id];
        let signal = received(boost * witness.get(id).ok_or(Error::MissingPower(id))?, inst.own_loss(pos));
        let fits = |bin: &Vec<LinkId>| -> bool {
            let interference: f64 = bin
                .iter()
                .map(|&o| {
                    let from = inst.position(o).expect("binned link");
                    received(boost * witness.get(o).expect("binned link"), inst.cross_loss(from, pos))
                })
                .sum();
            signal >= boost * beta * (interference + inst.noise())
        };
        match bins.iter().position(fits) {
            Some(k) => bins[k].push(id),
            None => bins.push(vec![id]),
        }
    }
    Ok(bins)
}

/// Splits `set`, feasible under `witness` for `thresholds`, into parts that
/// are each admissible for thresholds scaled by `c`.
pub fn strengthen_with(
    inst: &Instance,
    set: &[LinkId],
    thresholds: &BTreeMap<LinkId, f64>,
    witness: &PowerAssignment,
    c: f64,
) -> Result<Decomposition> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(format!("scale {c} must be >= 1")));
    }
    require_witness(inst, set, thresholds, witness)?;
    let mut parts = Vec::new();
    for bin in first_fit(inst, set, thresholds, witness, c)? {
        let reversed: Vec<LinkId> = bin.into_iter().rev().collect();
        parts.extend(first_fit(inst, &reversed, thresholds, witness, c)?);
    }
    let scaled: BTreeMap<LinkId, f64> = set.iter().map(|id| (*id, c * thresholds[id])).collect();
    let mut certified = true;
    for part in &parts {
        certified &= check_admissible_with(inst, part, &scaled, PowerCap::Infinite)?.feasible;
    }
    Ok(Decomposition {
        scale: c,
        parts,
        certified,
    })
}

/// [`strengthen_with`] using the links' own thresholds.
pub fn strengthen(
    inst: &Instance,
    set: &[LinkId],
    witness: &PowerAssignment,
    c: f64,
) -> Result<Decomposition> {
    let thresholds = set
        .iter()
        .map(|&id| Ok((id, inst.threshold(id)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    strengthen_with(inst, set, &thresholds, witness, c)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reversal {
    /// Links whose reversal is admissible at the original thresholds.
    pub subset: Vec<LinkId>,
    /// Links passing the averaging bound on the dual powers.
    pub survivors: Vec<LinkId>,
    /// The survivors with senders and receivers swapped.
    pub reversed: Instance,
    /// Oracle verdict on the reversed subset at the original thresholds.
    pub certificate: AdmissibilityCertificate,
}

/// Finds a subset of the admissible `set` that stays admissible after
/// swapping every sender with its receiver.
pub fn reverse_dual(inst: &Instance, set: &[LinkId], witness: &PowerAssignment) -> Result<Reversal> {
    let thresholds = set
        .iter()
        .map(|&id| Ok((id, inst.threshold(id)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    for &id in set {
        if witness.get(id).ok_or(Error::MissingPower(id))? == 0.0 {
            return Err(Error::ZeroWitnessPower(id));
        }
    }
    require_witness(inst, set, &thresholds, witness)?;

    let pos: Vec<usize> = set.iter().map(|&id| inst.position(id)).collect::<Result<_>>()?;
    let dual: Vec<f64> = set
        .iter()
        .zip(&pos)
        .map(|(id, &p)| thresholds[id] * inst.own_loss(p) / witness.get(*id).expect("checked"))
        .collect();
    let survivors: Vec<LinkId> = (0..set.len())
        .filter(|&j| {
            let load: f64 = (0..set.len())
                .filter(|&i| i != j)
                .map(|i| received(dual[i], inst.cross_loss(pos[j], pos[i])))
                .sum();
            let bound = 2.0 * dual[j] / inst.own_loss(pos[j]);
            thresholds[&set[j]] * load <= bound * (1.0 + MARKOV_SLACK)
        })
        .map(|j| set[j])
        .collect();

    let reversed = inst.reversed(&survivors)?;
    let third: BTreeMap<LinkId, f64> = survivors.iter().map(|id| (*id, thresholds[id] / 3.0)).collect();
    let scaled = check_admissible_with(&reversed, &survivors, &third, PowerCap::Infinite)?;
    let powers = scaled.powers.ok_or_else(|| {
        Error::NotAdmissible(*survivors.first().expect("empty sets are admissible"))
    })?;
    let parts = strengthen_with(&reversed, &survivors, &third, &powers, 3.0)?;
    let mut subset = parts
        .parts
        .iter()
        .fold(Vec::new(), |best, p| if p.len() > best.len() { p.clone() } else { best });
    subset.sort();
    let certificate = check_admissible(&reversed, &subset, PowerCap::Infinite)?;
    Ok(Reversal {
        subset,
        survivors,
        reversed,
        certificate,
    })
}

/// One link from 0 to 1 followed by `k` links from 1 to 0, all with
/// threshold `1/k`. Coinciding endpoints are separated by 1e-9 steps, which
/// leaves the forward link the shortest, so greedy solvers take it first.
pub fn gen_greedy_adversary(k: usize, alpha: f64) -> Result<Instance> {
    if k < 1 {
        return Err(Error::InvalidConfig("adversary needs k >= 1".into()));
    }
    let beta = 1.0 / k as f64;
    let mut entries = vec![(0.0, 1.0, beta)];
    entries.extend(std::iter::repeat_n((1.0, 0.0, beta), k));
    gen_line(
        &entries,
        &LineOptions {
            alpha,
            noise: ADVERSARY_NOISE,
            p_max: PowerCap::Infinite,
            allow_sub_unit: true,
            perturb: true,
        },
    )
}

/// Per-round transmit probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbSchedule {
    /// `2 / (k + 2)` in every round.
    Uniform,
    Constant { p: f64 },
    /// Round `t` uses entry `t - 1`; the last entry repeats.
    Sequence { probs: Vec<f64> },
}

impl ProbSchedule {
    fn validate(&self) -> Result<()> {
        let check = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidProbability(p))
            }
        };
        match self {
            ProbSchedule::Uniform => Ok(()),
            ProbSchedule::Constant { p } => check(*p),
            ProbSchedule::Sequence { probs } => {
                if probs.is_empty() {
                    return Err(Error::InvalidConfig("empty probability sequence".into()));
                }
                probs.iter().try_for_each(|&p| check(p))
            }
        }
    }

    /// Probability in round `t` (1-based).
    pub fn at(&self, t: usize, k: usize) -> f64 {
        match self {
            ProbSchedule::Uniform => 2.0 / (k as f64 + 2.0),
            ProbSchedule::Constant { p } => *p,
            ProbSchedule::Sequence { probs } => probs[(t - 1).min(probs.len() - 1)],
        }
    }
}

/// `k` links from 0 to 1 and `k` from 1 to 0, threshold `1/k`, perturbed.
pub fn aloha_instance(k: usize) -> Result<Instance> {
    let beta = 1.0 / k as f64;
    let mut entries: Vec<(f64, f64, f64)> = std::iter::repeat_n((0.0, 1.0, beta), k).collect();
    entries.extend(std::iter::repeat_n((1.0, 0.0, beta), k));
    gen_line(
        &entries,
        &LineOptions {
            alpha: 2.0,
            noise: ADVERSARY_NOISE,
            p_max: PowerCap::Infinite,
            allow_sub_unit: true,
            perturb: true,
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlohaTrial {
    /// First round after which at least `k/2` links have succeeded; `None`
    /// when the round cap was reached first.
    pub rounds: Option<usize>,
    /// Cumulative successes after each round.
    pub successes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlohaReport {
    pub k: usize,
    pub probs: ProbSchedule,
    pub seed: u64,
    pub max_rounds: usize,
    pub trials: Vec<AlohaTrial>,
    /// `k / 16`.
    pub horizon: usize,
    /// Fraction of trials with `T <= k/16`.
    pub within_horizon: f64,
}

struct Channel {
    gain: Vec<Vec<f64>>,
    signal: Vec<f64>,
    noise: f64,
    beta: f64,
}

impl Channel {
    fn new(inst: &Instance) -> Self {
        let n = inst.links().len();
        Channel {
            gain: (0..n)
                .map(|to| (0..n).map(|from| 1.0 / inst.cross_loss(from, to)).collect())
                .collect(),
            signal: (0..n).map(|i| 1.0 / inst.own_loss(i)).collect(),
            noise: inst.noise(),
            beta: inst.links()[0].threshold.expect("threshold set"),
        }
    }

    /// Links among `active` whose SINR at unit power meets the threshold.
    fn successes(&self, active: &[usize]) -> Vec<usize> {
        active
            .iter()
            .copied()
            .filter(|&t| {
                let interference: f64 = active.iter().filter(|&&o| o != t).map(|&o| self.gain[t][o]).sum();
                meets(self.signal[t] / (interference + self.noise), self.beta)
            })
            .collect()
    }
}

fn aloha_trial(channel: &Channel, k: usize, probs: &ProbSchedule, seed: u64, trial: u64, max_rounds: usize) -> AlohaTrial {
    let mut rng = stream(seed, trial, 0);
    let mut remaining = vec![true; 2 * k];
    let mut done = 0;
    let mut successes = Vec::new();
    let goal = k.div_ceil(2);
    for t in 1..=max_rounds {
        let p = probs.at(t, k);
        let active: Vec<usize> = (0..2 * k)
            .filter(|&i| remaining[i] && rng.random_bool(p))
            .collect();
        for i in channel.successes(&active) {
            remaining[i] = false;
            done += 1;
        }
        successes.push(done);
        if done >= goal {
            return AlohaTrial {
                rounds: Some(t),
                successes,
            };
        }
    }
    AlohaTrial {
        rounds: None,
        successes,
    }
}

/// Runs the randomized access protocol on [`aloha_instance`] and records the
/// number of rounds until half of `k` transmissions have succeeded.
pub fn simulate_aloha(
    k: usize,
    probs: &ProbSchedule,
    trials: usize,
    seed: u64,
    max_rounds: usize,
) -> Result<AlohaReport> {
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("k = {k} must be positive and even")));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    probs.validate()?;
    let channel = Channel::new(&aloha_instance(k)?);
    let results: Vec<AlohaTrial> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| aloha_trial(&channel, k, probs, seed, trial, max_rounds))
        .collect();
    let horizon = k / 16;
    let within = results
        .iter()
        .filter(|r| r.rounds.is_some_and(|t| t <= horizon))
        .count();
    Ok(AlohaReport {
        k,
        probs: probs.clone(),
        seed,
        max_rounds,
        horizon,
        within_horizon: within as f64 / trials as f64,
        trials: results,
    })
}
