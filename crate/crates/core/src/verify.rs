//! Independent re-checks of solver output against an instance.
//!
//! Nothing here trusts the SINRs, objectives or delivery totals stored in the
//! output; everything is recomputed from powers and geometry.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flexible::{covers, credited_value, FlexibleRun, Schedule, SLOT_CAP};
use crate::model::{meets, sinr, Algorithm, Instance, LinkId, PowerCap, Solution};

pub use crate::model::POWER_SLACK;
/// Relative slack on recomputed objectives.
pub const OBJECTIVE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Sinr,
    PowerCap,
    FixedPower,
    MissingPower,
    Threshold,
    Objective,
    Demand,
    Length,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkId>,
    /// Slot or level index, when the output has several.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.index {
            write!(f, "[{i}] ")?;
        }
        if let Some(l) = self.link {
            write!(f, "link {l}: ")?;
        }
        write!(f, "{}", self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub violations: Vec<Violation>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    fn push(&mut self, kind: ViolationKind, link: Option<LinkId>, index: Option<usize>, detail: String) {
        self.violations.push(Violation {
            kind,
            link,
            index,
            detail,
        });
    }
}

/// Checks powers and SINRs of `sol` against the given per-link thresholds.
/// Returns the recomputed SINRs.
fn check_slot(
    inst: &Instance,
    sol: &Solution,
    thresholds: &BTreeMap<LinkId, f64>,
    index: Option<usize>,
    out: &mut Verification,
) -> Result<BTreeMap<LinkId, f64>> {
    let mut gammas = BTreeMap::new();
    let mut complete = true;
    for &id in &sol.selected {
        let link = inst.link(id)?;
        let Some(p) = sol.powers.get(id) else {
            out.push(ViolationKind::MissingPower, Some(id), index, "no power assigned".into());
            complete = false;
            continue;
        };
        if !(p.is_finite() && p >= 0.0) {
            out.push(ViolationKind::PowerCap, Some(id), index, format!("power {p} is not a finite nonnegative number"));
        }
        if let PowerCap::Finite(cap) = inst.p_max() {
            if p > cap * (1.0 + POWER_SLACK) {
                out.push(ViolationKind::PowerCap, Some(id), index, format!("power {p} exceeds cap {cap}"));
            }
        }
        if sol.algorithm == Algorithm::Fixed {
            let fixed = link.fixed_power.ok_or(Error::MissingPower(id))?;
            if (p - fixed).abs() > POWER_SLACK * fixed.abs() {
                out.push(ViolationKind::FixedPower, Some(id), index, format!("power {p} differs from fixed power {fixed}"));
            }
        }
    }
    if !complete {
        return Ok(gammas);
    }
    for &id in &sol.selected {
        let beta = *thresholds.get(&id).ok_or(Error::MissingThreshold(id))?;
        let gamma = sinr(inst, &sol.selected, &sol.powers, id)?;
        if !meets(gamma, beta) {
            out.push(ViolationKind::Sinr, Some(id), index, format!("SINR {gamma} below threshold {beta}"));
        }
        gammas.insert(id, gamma);
    }
    Ok(gammas)
}

/// Re-checks a threshold solution against the instance's own thresholds.
pub fn verify_solution(inst: &Instance, sol: &Solution) -> Result<Verification> {
    let thresholds = sol
        .selected
        .iter()
        .map(|&id| Ok((id, inst.threshold(id)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let mut out = Verification::default();
    check_slot(inst, sol, &thresholds, None, &mut out)?;
    Ok(out)
}

fn scheduled_thresholds(
    inst: &Instance,
    sol: &Solution,
    index: usize,
    out: &mut Verification,
) -> Result<BTreeMap<LinkId, f64>> {
    let mut thresholds = BTreeMap::new();
    for &id in &sol.selected {
        let beta = *sol.thresholds.get(&id).ok_or(Error::MissingThreshold(id))?;
        if !(beta.is_finite() && (beta >= 1.0 || inst.allows_sub_unit_threshold())) {
            out.push(ViolationKind::Threshold, Some(id), Some(index), format!("scheduled threshold {beta} is invalid"));
        }
        thresholds.insert(id, beta);
    }
    Ok(thresholds)
}

/// Re-checks every level of a flexible run: feasibility at the scheduled
/// thresholds, the claimed objectives, and the choice of best level.
pub fn verify_flexible(inst: &Instance, run: &FlexibleRun) -> Result<Verification> {
    let mut out = Verification::default();
    let mut objectives = Vec::with_capacity(run.levels.len());
    for (i, level) in run.levels.iter().enumerate() {
        let sol = &level.solution;
        let thresholds = scheduled_thresholds(inst, sol, i, &mut out)?;
        let gammas = check_slot(inst, sol, &thresholds, Some(i), &mut out)?;
        let mut value = 0.0;
        for (&id, &gamma) in &gammas {
            let u = inst.link(id)?.utility.as_ref().ok_or(Error::MissingUtility(id))?;
            value += credited_value(u, gamma, thresholds[&id]);
        }
        if (value - sol.objective).abs() > OBJECTIVE_SLACK * value.abs().max(1.0) {
            out.push(
                ViolationKind::Objective,
                None,
                Some(i),
                format!("claimed objective {} but recomputed {value}", sol.objective),
            );
        }
        objectives.push(value);
    }
    if let Some(best) = objectives.get(run.best_index) {
        let top = objectives.iter().copied().fold(0.0, f64::max);
        if *best < top * (1.0 - OBJECTIVE_SLACK) {
            out.push(
                ViolationKind::Objective,
                None,
                Some(run.best_index),
                format!("best level has {best} but another level reaches {top}"),
            );
        }
    } else if !run.levels.is_empty() {
        out.push(ViolationKind::Objective, None, None, format!("best index {} out of range", run.best_index));
    }
    Ok(out)
}

/// Re-checks a schedule: each slot feasible at its thresholds, and the
/// utility recomputed from the slots' SINRs covering every demand.
pub fn verify_schedule(inst: &Instance, schedule: &Schedule) -> Result<Verification> {
    let mut out = Verification::default();
    if schedule.len() > SLOT_CAP {
        out.push(ViolationKind::Length, None, None, format!("{} slots exceed the cap", schedule.len()));
    }
    let mut delivered: BTreeMap<LinkId, f64> = schedule.demands.keys().map(|&id| (id, 0.0)).collect();
    for (i, slot) in schedule.slots.iter().enumerate() {
        let thresholds = scheduled_thresholds(inst, slot, i, &mut out)?;
        let gammas = check_slot(inst, slot, &thresholds, Some(i), &mut out)?;
        for (&id, &gamma) in &gammas {
            if !meets(gamma, thresholds[&id]) {
                continue;
            }
            let u = inst.link(id)?.utility.as_ref().ok_or(Error::MissingUtility(id))?;
            *delivered.entry(id).or_insert(0.0) += credited_value(u, gamma, thresholds[&id]);
        }
    }
    for (&id, &demand) in &schedule.demands {
        let got = delivered[&id];
        if !covers(got, demand) {
            out.push(ViolationKind::Demand, Some(id), None, format!("delivered {got} of demand {demand}"));
        }
    }
    if !schedule.fulfilled && out.ok() {
        out.push(ViolationKind::Demand, None, None, "schedule reports unfulfilled demands".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flexible::{solve_flexible, solve_latency};
    use crate::generate::{gen_line, gen_random, GenConfig, LineOptions, UtilityFamily};
    use crate::threshold::{solve_limited, solve_unlimited};
    use crate::utility::UtilitySpec;

    #[test]
    fn solver_output_verifies() {
        for seed in 0..10 {
            let mut c = GenConfig::new(30, seed);
            c.area = 40.0;
            let inst = gen_random(&c).unwrap();
            let sol = solve_unlimited(&inst, &inst.link_ids()).unwrap();
            assert!(verify_solution(&inst, &sol).unwrap().ok());
        }
    }

    #[test]
    fn halved_power_names_the_link() {
        let inst = gen_line(&[(0.0, 1.0, 2.0), (30.0, 31.0, 2.0)], &LineOptions::default()).unwrap();
        let mut sol = solve_unlimited(&inst, &inst.link_ids()).unwrap();
        assert_eq!(sol.len(), 2);
        // the most sensitive link gets exactly twice its noise-only power, so
        // halving it leaves no room for the other link's interference
        let order = crate::model::sensitivity_order(&inst, &sol.selected).unwrap();
        let victim = order[0];
        let p = sol.powers.get(victim).unwrap();
        sol.powers.set(victim, p / 2.0);
        let v = verify_solution(&inst, &sol).unwrap();
        assert!(!v.ok());
        assert!(v.violations.iter().any(|x| x.kind == ViolationKind::Sinr && x.link == Some(victim)));
    }

    #[test]
    fn cap_violation_detected() {
        let opts = LineOptions {
            p_max: PowerCap::Finite(10.0),
            ..LineOptions::default()
        };
        let inst = gen_line(&[(0.0, 1.0, 2.0)], &opts).unwrap();
        let mut sol = solve_limited(&inst, &inst.link_ids()).unwrap();
        assert!(verify_solution(&inst, &sol).unwrap().ok());
        sol.powers.set(LinkId(0), 20.0);
        assert_eq!(verify_solution(&inst, &sol).unwrap().count(ViolationKind::PowerCap), 1);
    }

    #[test]
    fn flexible_and_schedule_verify() {
        let mut c = GenConfig::new(8, 3);
        c.area = 20.0;
        c.p_max = PowerCap::Finite(1.0);
        c.utility = Some(UtilityFamily::Shannon { scale: 1.0, cutoff: 1.0 });
        c.demand = Some(crate::generate::DemandSpec::RelativeToMax { min: 0.5, max: 2.0 });
        let inst = gen_random(&c).unwrap();
        let run = solve_flexible(&inst, Algorithm::Limited, &inst.link_ids()).unwrap();
        assert!(verify_flexible(&inst, &run).unwrap().ok());
        let mut tampered = run.clone();
        tampered.levels[tampered.best_index].solution.objective += 1.0;
        assert!(!verify_flexible(&inst, &tampered).unwrap().ok());

        let schedule = solve_latency(&inst, Algorithm::Limited, &inst.link_ids()).unwrap();
        assert!(verify_schedule(&inst, &schedule).unwrap().ok());
        let mut short = schedule.clone();
        short.slots.pop();
        assert!(!verify_schedule(&inst, &short).unwrap().ok());
    }

    #[test]
    fn flexible_rejects_sub_unit_threshold() {
        let opts = LineOptions {
            p_max: PowerCap::Finite(10.0),
            ..LineOptions::default()
        };
        let inst = gen_line(&[(0.0, 1.0, 2.0)], &opts).unwrap();
        let link = inst.links()[0].clone().with_utility(UtilitySpec::shannon(1.0, 1.0).unwrap());
        let inst = inst.with_links(vec![link]).unwrap();
        let mut run = solve_flexible(&inst, Algorithm::Limited, &inst.link_ids()).unwrap();
        assert!(verify_flexible(&inst, &run).unwrap().ok());
        let level = &mut run.levels[0].solution;
        assert_eq!(level.selected, vec![LinkId(0)]);
        level.thresholds.insert(LinkId(0), 0.5);
        assert_eq!(verify_flexible(&inst, &run).unwrap().count(ViolationKind::Threshold), 1);
    }
}
