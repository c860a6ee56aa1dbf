//! Flexible data rates: utility maximization by threshold levels, and
//! demand-driven schedules built from repeated utility maximization.
//!
//! [`solve_flexible`] tries the thresholds reaching `2^-i * B` for
//! `i = 0..=ceil(log2 n)`, where `B` is the largest utility any link can
//! reach alone, runs a threshold solver per level and keeps the level with
//! the largest realized utility.
//!
//! [`solve_latency`] repeatedly schedules a slot with [`solve_flexible`] on
//! residual-capped utilities until every demand is met. Two normalizations
//! are run and the shorter schedule is returned:
//!
//! * scheme 1 measures utility in demand units rounded down to multiples of
//!   `1/2n`;
//! * scheme 2 divides utility by the link's maximum utility.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{meets, Algorithm, Instance, LinkId, PowerCap, Solution, Target};
use crate::threshold;
use crate::utility::{Utility, UtilitySpec};

/// Relative residual below which a normalized demand counts as met.
const RESIDUAL_SLACK: f64 = 1e-12;

/// Hard cap on schedule length.
pub const SLOT_CAP: usize = 1_000_000;

/// `ceil(log2 n)`, zero for `n <= 1`.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Utility credited for SINR `gamma` scheduled against threshold `beta`.
/// An SINR meeting `beta` within the shared tolerance earns the value at
/// `beta`, so rounding in the powers never drops a step.
pub fn credited_value<U: Utility + ?Sized>(u: &U, gamma: f64, beta: f64) -> f64 {
    if meets(gamma, beta) {
        u.value(gamma.max(beta))
    } else {
        u.value(gamma)
    }
}

/// Smallest SINR up to `gamma_cap` reaching `target`. The cap is widened by
/// rounding slack for the query and the answer clamped back to it.
fn level_threshold<U: Utility + ?Sized>(u: &U, target: f64, gamma_cap: f64) -> Result<Option<f64>> {
    Ok(u
        .inverse_threshold(target, gamma_cap * (1.0 + 1e-9))?
        .map(|g| g.min(gamma_cap)))
}

/// SINR a link reaches alone at the largest power the mode allows.
fn gamma_cap(inst: &Instance, pos: usize, mode: Algorithm, power: Option<f64>) -> f64 {
    let p = match mode {
        Algorithm::Fixed => power.unwrap_or(0.0),
        Algorithm::Unlimited | Algorithm::Limited => match inst.p_max() {
            PowerCap::Finite(p) => p,
            PowerCap::Infinite => return f64::INFINITY,
        },
    };
    p / (inst.noise() * inst.own_loss(pos))
}

struct FlexLink<U> {
    pos: usize,
    utility: U,
    gamma_cap: f64,
    power: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub i: u32,
    /// Utility every link of this level must reach: `2^-i * B`.
    pub target: f64,
    pub thresholds: BTreeMap<LinkId, f64>,
    /// Threshold solution; its objective is the realized utility.
    pub solution: Solution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlexibleRun {
    #[serde(rename = "B")]
    pub b: f64,
    pub levels: Vec<Level>,
    pub best_index: usize,
}

impl FlexibleRun {
    pub fn best(&self) -> &Solution {
        &self.levels[self.best_index].solution
    }
}

fn run_levels<U: Utility + Sync>(
    inst: &Instance,
    links: &[FlexLink<U>],
    mode: Algorithm,
) -> Result<FlexibleRun> {
    if links.is_empty() {
        return Err(Error::NoLinks);
    }
    let u_max = links
        .iter()
        .map(|l| l.utility.max_utility(l.gamma_cap))
        .collect::<Result<Vec<_>>>()?;
    let b = u_max.iter().copied().fold(0.0, f64::max);
    if !b.is_finite() {
        return Err(Error::Unbounded);
    }
    let count = ceil_log2(links.len()) + 1;
    let id = |l: &FlexLink<U>| inst.links()[l.pos].id;

    let levels = (0..count)
        .into_par_iter()
        .map(|i| -> Result<Level> {
            let target = b / 2f64.powi(i as i32);
            let mut targets = Vec::new();
            let mut powers = Vec::new();
            if b > 0.0 {
                for (l, &top) in links.iter().zip(&u_max) {
                    if target > top {
                        continue;
                    }
                    let Some(beta) = level_threshold(&l.utility, target, l.gamma_cap)? else {
                        continue;
                    };
                    assert!(beta >= 1.0, "utilities vanish below SINR 1");
                    targets.push(Target { pos: l.pos, beta });
                    powers.push(l.power.unwrap_or(0.0));
                }
            }
            let mut solution = match mode {
                Algorithm::Unlimited => threshold::unlimited(inst, &targets),
                Algorithm::Limited => threshold::limited(inst, &targets),
                Algorithm::Fixed => threshold::fixed(inst, &targets, &powers),
            };
            solution.objective = links
                .iter()
                .filter(|l| solution.sinr.contains_key(&id(l)))
                .map(|l| {
                    let lid = id(l);
                    credited_value(&l.utility, solution.sinr[&lid], solution.thresholds[&lid])
                })
                .sum();
            Ok(Level {
                i,
                target,
                thresholds: solution.thresholds.clone(),
                solution,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best_index = 0;
    for (k, level) in levels.iter().enumerate() {
        if level.solution.objective > levels[best_index].solution.objective {
            best_index = k;
        }
    }
    Ok(FlexibleRun { b, levels, best_index })
}

fn flex_links<'a>(
    inst: &'a Instance,
    mode: Algorithm,
    links: &[LinkId],
) -> Result<Vec<FlexLink<&'a UtilitySpec>>> {
    links
        .iter()
        .map(|&id| {
            let link = inst.link(id)?;
            let utility = link.utility.as_ref().ok_or(Error::MissingUtility(id))?;
            let power = match mode {
                Algorithm::Fixed => Some(link.fixed_power.ok_or(Error::MissingPower(id))?),
                _ => None,
            };
            let pos = inst.position(id)?;
            Ok(FlexLink {
                pos,
                utility,
                gamma_cap: gamma_cap(inst, pos, mode, power),
                power,
            })
        })
        .collect()
}

/// Maximizes summed utility over `links`, with powers governed by `mode`.
pub fn solve_flexible(inst: &Instance, mode: Algorithm, links: &[LinkId]) -> Result<FlexibleRun> {
    run_levels(inst, &flex_links(inst, mode, links)?, mode)
}

/// `min(cap, inner / divisor)`.
struct ScaledCapped<'a> {
    inner: &'a UtilitySpec,
    divisor: f64,
    cap: f64,
}

impl Utility for ScaledCapped<'_> {
    fn value(&self, gamma: f64) -> f64 {
        (self.inner.value(gamma) / self.divisor).min(self.cap)
    }

    fn max_utility(&self, gamma_cap: f64) -> Result<f64> {
        Ok((self.inner.max_utility(gamma_cap)? / self.divisor).min(self.cap))
    }

    fn inverse_threshold(&self, target: f64, gamma_cap: f64) -> Result<Option<f64>> {
        if target > self.cap {
            return Ok(None);
        }
        let mut t = target * self.divisor;
        if let Ok(top) = self.inner.max_utility(gamma_cap) {
            // undo rounding from the division in max_utility
            if t > top && t <= top * (1.0 + 1e-12) {
                t = top;
            }
        }
        self.inner.inverse_threshold(t, gamma_cap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeLengths {
    /// `None` when the rounded scheme cannot progress (some demand needs
    /// more than `2n` of its smallest increments).
    pub scheme1: Option<usize>,
    pub scheme2: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub scheme: u8,
    pub slots: Vec<Solution>,
    /// Remaining demand per link after each slot, in original units as
    /// tracked by the chosen scheme.
    pub residual_demands: Vec<BTreeMap<LinkId, f64>>,
    pub demands: BTreeMap<LinkId, f64>,
    /// Utility delivered per link over the whole schedule.
    pub delivered: BTreeMap<LinkId, f64>,
    pub lengths: SchemeLengths,
    /// `4 * sum ceil(delta / u_max) * (ceil(log2 n) + 1)^2 + n`.
    pub length_bound: usize,
    pub fulfilled: bool,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Whether `delivered` covers `demand` under the fulfilment tolerance.
pub fn covers(delivered: f64, demand: f64) -> bool {
    delivered >= demand - 1e-9 * demand.max(1.0)
}

struct Demand<'a> {
    id: LinkId,
    pos: usize,
    utility: &'a UtilitySpec,
    gamma_cap: f64,
    power: Option<f64>,
    u_max: f64,
    delta: f64,
}

struct SchemeRun {
    slots: Vec<Solution>,
    residuals: Vec<BTreeMap<LinkId, f64>>,
}

fn credited(d: &Demand, slot: &Solution) -> Option<f64> {
    let gamma = *slot.sinr.get(&d.id)?;
    Some(credited_value(d.utility, gamma, slot.thresholds[&d.id]))
}

fn finish_slot(demands: &[Demand], mut slot: Solution) -> Solution {
    slot.objective = demands.iter().filter_map(|d| credited(d, &slot)).sum();
    slot
}

fn scheme_rounded(inst: &Instance, mode: Algorithm, demands: &[Demand]) -> Result<Option<SchemeRun>> {
    let n = demands.len();
    let per = 2 * n as u64;
    let mut units = vec![per; n];
    let mut run = SchemeRun {
        slots: Vec::new(),
        residuals: Vec::new(),
    };
    while units.iter().any(|&u| u > 0) {
        if run.slots.len() >= SLOT_CAP {
            return Err(Error::SlotCapExceeded(SLOT_CAP));
        }
        let mut links = Vec::new();
        let mut owners = Vec::new();
        for (k, d) in demands.iter().enumerate() {
            if units[k] == 0 {
                continue;
            }
            let mut steps: Vec<(f64, f64)> = Vec::new();
            for j in 1..=units[k] {
                let target = j as f64 * d.delta / per as f64;
                let Some(g) = level_threshold(d.utility, target, d.gamma_cap)? else {
                    break;
                };
                let v = j as f64 / per as f64;
                match steps.last_mut() {
                    Some(last) if last.0 == g => last.1 = v,
                    _ => steps.push((g, v)),
                }
            }
            if steps.is_empty() {
                continue;
            }
            links.push(FlexLink {
                pos: d.pos,
                utility: UtilitySpec::step(steps)?,
                gamma_cap: d.gamma_cap,
                power: d.power,
            });
            owners.push(k);
        }
        if links.is_empty() {
            return Ok(None);
        }
        let flex = run_levels(inst, &links, mode)?;
        let slot = flex.best().clone();
        let mut gained = 0;
        for (l, &k) in links.iter().zip(&owners) {
            let id = demands[k].id;
            if let Some(&gamma) = slot.sinr.get(&id) {
                let v = credited_value(&l.utility, gamma, slot.thresholds[&id]);
                let got = ((v * per as f64).round() as u64).min(units[k]);
                units[k] -= got;
                gained += got;
            }
        }
        if gained == 0 {
            return Ok(None);
        }
        run.slots.push(finish_slot(demands, slot));
        run.residuals.push(
            demands
                .iter()
                .zip(&units)
                .map(|(d, &u)| (d.id, u as f64 / per as f64 * d.delta))
                .collect(),
        );
    }
    Ok(Some(run))
}

fn scheme_normalized(inst: &Instance, mode: Algorithm, demands: &[Demand]) -> Result<SchemeRun> {
    let initial: Vec<f64> = demands.iter().map(|d| d.delta / d.u_max).collect();
    let mut residual = initial.clone();
    let mut run = SchemeRun {
        slots: Vec::new(),
        residuals: Vec::new(),
    };
    while residual.iter().any(|&r| r > 0.0) {
        if run.slots.len() >= SLOT_CAP {
            return Err(Error::SlotCapExceeded(SLOT_CAP));
        }
        let owners: Vec<usize> = (0..demands.len()).filter(|&k| residual[k] > 0.0).collect();
        let links: Vec<FlexLink<ScaledCapped>> = owners
            .iter()
            .map(|&k| {
                let d = &demands[k];
                FlexLink {
                    pos: d.pos,
                    utility: ScaledCapped {
                        inner: d.utility,
                        divisor: d.u_max,
                        cap: residual[k],
                    },
                    gamma_cap: d.gamma_cap,
                    power: d.power,
                }
            })
            .collect();
        let singleton = owners
            .iter()
            .map(|&k| residual[k].min(1.0))
            .fold(0.0, f64::max);
        let flex = run_levels(inst, &links, mode)?;
        let slot = flex.best().clone();
        let mut total = 0.0;
        let mut completed = false;
        for (l, &k) in links.iter().zip(&owners) {
            let id = demands[k].id;
            if let Some(&gamma) = slot.sinr.get(&id) {
                let v = credited_value(&l.utility, gamma, slot.thresholds[&id]);
                total += v;
                // leftovers from rounding in delta / u_max count as done
                if v >= residual[k] - RESIDUAL_SLACK * initial[k] {
                    residual[k] = 0.0;
                    completed = true;
                } else {
                    residual[k] -= v;
                }
            }
        }
        if total == 0.0 {
            return Err(Error::NoProgress);
        }
        assert!(
            completed || total >= singleton * (1.0 - 1e-9),
            "slot {} neither completes a demand nor reaches the best singleton utility",
            run.slots.len()
        );
        run.slots.push(finish_slot(demands, slot));
        run.residuals.push(
            demands
                .iter()
                .zip(&residual)
                .map(|(d, &r)| (d.id, r * d.u_max))
                .collect(),
        );
    }
    Ok(run)
}

/// Builds a schedule whose slots together deliver every link's demand.
/// Links with zero demand are dropped.
pub fn solve_latency(inst: &Instance, mode: Algorithm, links: &[LinkId]) -> Result<Schedule> {
    let mut demands = Vec::new();
    for &id in links {
        let link = inst.link(id)?;
        let delta = link.demand.ok_or(Error::MissingDemand(id))?;
        if delta == 0.0 {
            continue;
        }
        let utility = link.utility.as_ref().ok_or(Error::MissingUtility(id))?;
        let power = match mode {
            Algorithm::Fixed => Some(link.fixed_power.ok_or(Error::MissingPower(id))?),
            _ => None,
        };
        let pos = inst.position(id)?;
        let cap = gamma_cap(inst, pos, mode, power);
        let u_max = utility.max_utility(cap)?;
        if !(u_max > 0.0) {
            return Err(Error::UnschedulableDemand(id));
        }
        demands.push(Demand {
            id,
            pos,
            utility,
            gamma_cap: cap,
            power,
            u_max,
            delta,
        });
    }
    let demand_map: BTreeMap<LinkId, f64> = demands.iter().map(|d| (d.id, d.delta)).collect();
    let levels = (ceil_log2(demands.len()) + 1) as usize;
    let length_bound = 4
        * demands
            .iter()
            .map(|d| (d.delta / d.u_max).ceil() as usize)
            .sum::<usize>()
        * levels
        * levels
        + demands.len();

    let rounded = scheme_rounded(inst, mode, &demands)?;
    let normalized = scheme_normalized(inst, mode, &demands)?;
    let lengths = SchemeLengths {
        scheme1: rounded.as_ref().map(|r| r.slots.len()),
        scheme2: normalized.slots.len(),
    };
    let (scheme, run) = match rounded {
        Some(r) if r.slots.len() < normalized.slots.len() => (1, r),
        _ => (2, normalized),
    };

    let mut delivered: BTreeMap<LinkId, f64> = demands.iter().map(|d| (d.id, 0.0)).collect();
    for slot in &run.slots {
        for d in &demands {
            if let Some(v) = credited(d, slot) {
                *delivered.get_mut(&d.id).expect("demand link") += v;
            }
        }
    }
    let fulfilled = demands.iter().all(|d| covers(delivered[&d.id], d.delta));
    Ok(Schedule {
        scheme,
        slots: run.slots,
        residual_demands: run.residuals,
        demands: demand_map,
        delivered,
        lengths,
        length_bound,
        fulfilled,
    })
}
