//! Capacity maximization with individual SINR thresholds.
//!
//! Three greedy algorithms share the sensitivity ordering π (rank 1 = largest
//! `beta * d^alpha`):
//!
//! * [`solve_unlimited`]: greedy selection on the directed weight `w` with
//!   bound `tau = 1/(6 * 3^alpha + 2)`, then a power recurrence from the most
//!   sensitive link downwards.
//! * [`solve_fixed`]: greedy on bidirectional affectance under given powers,
//!   followed by a clean-up keeping links with incoming affectance below 1.
//! * [`solve_limited`]: splits links by whether their sensitivity fits in a
//!   quarter of `p_max`; runs a capped variant of the unlimited algorithm on
//!   one part and the fixed algorithm at `p_max` on the other, returning the
//!   larger result.

use crate::error::{Error, Result};
use crate::model::{
    order_targets, received, Algorithm, Instance, LinkId, PowerAssignment, PowerCap, Solution,
    Target, TraceStep,
};

/// Bounds used by the greedy passes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams {
    /// Selection bound `1 / (6 * 3^alpha + 2)`.
    pub tau: f64,
    /// Bound on outgoing weight in the second pass of the limited algorithm.
    pub secondary_tau: f64,
}

impl WeightParams {
    pub fn for_alpha(alpha: f64) -> Self {
        WeightParams {
            tau: 1.0 / (6.0 * 3f64.powf(alpha) + 2.0),
            secondary_tau: 0.25,
        }
    }
}

/// Bound on the summed bidirectional affectance in the tentative pass.
const FIXED_TENTATIVE_BOUND: f64 = 0.5;

/// Weight of `from` on `to`, assuming `from` has the larger rank (is less
/// sensitive). Zero cross distances saturate the weight at 1.
pub(crate) fn raw_weight(inst: &Instance, from: Target, to: Target) -> f64 {
    let own_from = inst.own_loss(from.pos);
    let own_to = inst.own_loss(to.pos);
    let from_to = inst.cross_loss(from.pos, to.pos); // d(s, r')
    let to_from = inst.cross_loss(to.pos, from.pos); // d(s', r)
    let mutual = from.beta * to.beta * own_from * own_to / (from_to * to_from);
    let at_to = from.beta * own_from / from_to;
    let at_from = from.beta * own_from / to_from;
    let w = mutual + at_to + at_from;
    if w.is_nan() {
        1.0
    } else {
        w.min(1.0)
    }
}

/// Directed weight `w(from, to)` under the ranking `order` (as returned by
/// [`crate::model::sensitivity_order`]). Zero unless `from` ranks after `to`.
pub fn weight(inst: &Instance, from: LinkId, to: LinkId, order: &[LinkId]) -> Result<f64> {
    let rank = |id: LinkId| {
        order
            .iter()
            .position(|&x| x == id)
            .ok_or(Error::UnknownLink(id))
    };
    let (rf, rt) = (rank(from)?, rank(to)?);
    if rf <= rt {
        return Ok(0.0);
    }
    let target = |id: LinkId| -> Result<Target> {
        Ok(Target {
            pos: inst.position(id)?,
            beta: inst.threshold(id)?,
        })
    };
    Ok(raw_weight(inst, target(from)?, target(to)?))
}

/// Signal margin `p/d^alpha - beta N` of a link; negative means the link
/// cannot reach its threshold even without interference. Margins within
/// rounding of zero count as exactly zero.
fn margin(inst: &Instance, t: Target, power: f64) -> f64 {
    let floor = t.beta * inst.noise();
    let m = received(power, inst.own_loss(t.pos)) - floor;
    if m.abs() <= 1e-12 * floor {
        0.0
    } else {
        m
    }
}

/// Affectance of `from` (power `p_from`) on `to` (power `p_to`).
pub(crate) fn raw_affectance(
    inst: &Instance,
    from: Target,
    p_from: f64,
    to: Target,
    p_to: f64,
) -> f64 {
    let den = margin(inst, to, p_to);
    if den < 0.0 {
        return 1.0;
    }
    if from.pos == to.pos {
        return 0.0;
    }
    let num = to.beta * received(p_from, inst.cross_loss(from.pos, to.pos));
    if num == 0.0 {
        return 0.0;
    }
    if den == 0.0 {
        return 1.0;
    }
    (num / den).min(1.0)
}

/// Affectance `a_p(from, to)`, with thresholds from the links.
pub fn affectance(
    inst: &Instance,
    from: LinkId,
    to: LinkId,
    powers: &PowerAssignment,
) -> Result<f64> {
    let target = |id: LinkId| -> Result<(Target, f64)> {
        Ok((
            Target {
                pos: inst.position(id)?,
                beta: inst.threshold(id)?,
            },
            powers.get(id).ok_or(Error::MissingPower(id))?,
        ))
    };
    let (f, pf) = target(from)?;
    let (t, pt) = target(to)?;
    Ok(raw_affectance(inst, f, pf, t, pt))
}

pub(crate) fn targets_from_links(inst: &Instance, links: &[LinkId]) -> Result<Vec<Target>> {
    links
        .iter()
        .map(|&id| {
            Ok(Target {
                pos: inst.position(id)?,
                beta: inst.threshold(id)?,
            })
        })
        .collect()
}

fn id_of(inst: &Instance, t: Target) -> LinkId {
    inst.links()[t.pos].id
}

/// Greedy pass over `ordered` (rank order) from the last rank to the first,
/// accepting a link when the weight it receives from already accepted links
/// is at most `tau`. Returns the accepted links in rank order.
fn greedy_select(
    inst: &Instance,
    ordered: &[Target],
    tau: f64,
    trace: &mut Vec<TraceStep>,
) -> Vec<Target> {
    let mut accepted: Vec<Target> = Vec::new();
    for &cand in ordered.iter().rev() {
        let load: f64 = accepted.iter().map(|&a| raw_weight(inst, a, cand)).fold(0.0, |a, b| a + b);
        let ok = load <= tau;
        trace.push(TraceStep {
            pass: "select".into(),
            link: id_of(inst, cand),
            load,
            bound: tau,
            accepted: ok,
        });
        if ok {
            accepted.push(cand);
        }
    }
    accepted.reverse();
    accepted
}

/// Power for the next link given the already powered, more sensitive links:
/// `2 beta N d^alpha + 2 beta sum p / d(s, r')^alpha * d^alpha`.
fn recurrence_power(inst: &Instance, t: Target, powered: &[(Target, f64)]) -> f64 {
    let own = inst.own_loss(t.pos);
    let interference: f64 = powered
        .iter()
        .map(|&(o, p)| received(p, inst.cross_loss(o.pos, t.pos)))
        .sum();
    2.0 * t.beta * inst.noise() * own + 2.0 * t.beta * interference * own
}

pub(crate) fn unlimited(inst: &Instance, targets: &[Target]) -> Solution {
    let params = WeightParams::for_alpha(inst.alpha());
    let ordered = order_targets(inst, targets);
    let mut trace = Vec::new();
    let chosen = greedy_select(inst, &ordered, params.tau, &mut trace);
    let mut powered: Vec<(Target, f64)> = Vec::with_capacity(chosen.len());
    for &t in &chosen {
        let p = recurrence_power(inst, t, &powered);
        powered.push((t, p));
    }
    let powers = PowerAssignment(powered.iter().map(|&(t, p)| (id_of(inst, t), p)).collect());
    Solution::assemble(inst, Algorithm::Unlimited, &chosen, powers, trace)
}

/// Greedy selection with `tau`, then powers from the recurrence. Links must
/// carry thresholds.
pub fn solve_unlimited(inst: &Instance, links: &[LinkId]) -> Result<Solution> {
    let targets = targets_from_links(inst, links)?;
    Ok(unlimited(inst, &targets))
}

/// Pairs violating the monotone, (sub-)linear condition on fixed powers:
/// for `beta d^alpha` no larger, power must be no larger and
/// `p / (beta d^alpha)` no smaller. Ties are accepted.
pub(crate) fn power_condition_violations(
    inst: &Instance,
    targets: &[Target],
    powers: &[f64],
) -> Vec<(LinkId, LinkId)> {
    let mut out = Vec::new();
    for (i, &a) in targets.iter().enumerate() {
        let sa = a.beta * inst.own_loss(a.pos);
        for (j, &b) in targets.iter().enumerate() {
            if i == j {
                continue;
            }
            let sb = b.beta * inst.own_loss(b.pos);
            if sa <= sb && (powers[i] > powers[j] || powers[i] / sa < powers[j] / sb) {
                out.push((id_of(inst, a), id_of(inst, b)));
            }
        }
    }
    out
}

pub(crate) fn fixed(inst: &Instance, targets: &[Target], powers: &[f64]) -> Solution {
    let power_of: std::collections::HashMap<usize, f64> = targets
        .iter()
        .zip(powers)
        .map(|(t, &p)| (t.pos, p))
        .collect();
    let mut warnings = Vec::new();
    let violations = power_condition_violations(inst, targets, powers);
    if !violations.is_empty() {
        let (a, b) = violations[0];
        warnings.push(format!(
            "power assignment is not monotone and sublinear in sensitivity ({} pairs, first: {a} vs {b})",
            violations.len()
        ));
    }

    let ordered = order_targets(inst, targets);
    let mut trace = Vec::new();
    let mut tentative: Vec<Target> = Vec::new();
    for &cand in ordered.iter().rev() {
        let pc = power_of[&cand.pos];
        if margin(inst, cand, pc) < 0.0 {
            trace.push(TraceStep {
                pass: "noise".into(),
                link: id_of(inst, cand),
                load: f64::INFINITY,
                bound: 0.0,
                accepted: false,
            });
            continue;
        }
        let load: f64 = tentative
            .iter()
            .map(|&l| {
                let pl = power_of[&l.pos];
                raw_affectance(inst, l, pl, cand, pc) + raw_affectance(inst, cand, pc, l, pl)
            })
            .fold(0.0, |a, b| a + b);
        let ok = load <= FIXED_TENTATIVE_BOUND;
        trace.push(TraceStep {
            pass: "tentative".into(),
            link: id_of(inst, cand),
            load,
            bound: FIXED_TENTATIVE_BOUND,
            accepted: ok,
        });
        if ok {
            tentative.push(cand);
        }
    }

    let mut kept = Vec::new();
    for &t in &tentative {
        let pt = power_of[&t.pos];
        let incoming: f64 = tentative
            .iter()
            .map(|&l| raw_affectance(inst, l, power_of[&l.pos], t, pt))
            .fold(0.0, |a, b| a + b);
        let ok = incoming < 1.0;
        trace.push(TraceStep {
            pass: "filter".into(),
            link: id_of(inst, t),
            load: incoming,
            bound: 1.0,
            accepted: ok,
        });
        if ok {
            kept.push(t);
        }
    }
    let assignment = PowerAssignment(
        kept.iter()
            .map(|&t| (id_of(inst, t), power_of[&t.pos]))
            .collect(),
    );
    let mut sol = Solution::assemble(inst, Algorithm::Fixed, &kept, assignment, trace);
    sol.warnings = warnings;
    sol
}

/// Greedy on bidirectional affectance under each link's fixed power, then
/// the incoming-affectance clean-up.
pub fn solve_fixed(inst: &Instance, links: &[LinkId]) -> Result<Solution> {
    let targets = targets_from_links(inst, links)?;
    let powers = links
        .iter()
        .map(|&id| inst.link(id)?.fixed_power.ok_or(Error::MissingPower(id)))
        .collect::<Result<Vec<_>>>()?;
    Ok(fixed(inst, &targets, &powers))
}

/// Same as [`solve_fixed`] but with an explicit power assignment.
pub fn solve_fixed_with(
    inst: &Instance,
    links: &[LinkId],
    powers: &PowerAssignment,
) -> Result<Solution> {
    let targets = targets_from_links(inst, links)?;
    let p = links
        .iter()
        .map(|&id| powers.get(id).ok_or(Error::MissingPower(id)))
        .collect::<Result<Vec<_>>>()?;
    Ok(fixed(inst, &targets, &p))
}

pub(crate) fn limited(inst: &Instance, targets: &[Target]) -> Solution {
    let p_max = match inst.p_max() {
        PowerCap::Infinite => {
            let mut sol = unlimited(inst, targets);
            sol.algorithm = Algorithm::Limited;
            return sol;
        }
        PowerCap::Finite(p) => p,
    };
    let params = WeightParams::for_alpha(inst.alpha());
    let (low, high): (Vec<Target>, Vec<Target>) = targets
        .iter()
        .partition(|t| t.beta * inst.noise() * inst.own_loss(t.pos) <= p_max / 4.0);

    let ordered = order_targets(inst, &low);
    let mut trace = Vec::new();
    let first = greedy_select(inst, &ordered, params.tau, &mut trace);

    // Second pass from the most sensitive link on: keep a link when the
    // weight it sends to the links kept so far is at most 1/4.
    let mut kept: Vec<(Target, f64)> = Vec::new();
    for &t in &first {
        let load: f64 = kept.iter().map(|&(k, _)| raw_weight(inst, t, k)).fold(0.0, |a, b| a + b);
        let ok = load <= params.secondary_tau;
        trace.push(TraceStep {
            pass: "keep".into(),
            link: id_of(inst, t),
            load,
            bound: params.secondary_tau,
            accepted: ok,
        });
        if ok {
            let p = recurrence_power(inst, t, &kept);
            kept.push((t, p));
        }
    }

    let capped = fixed(inst, &high, &vec![p_max; high.len()]);
    if kept.len() >= capped.len() {
        let chosen: Vec<Target> = kept.iter().map(|&(t, _)| t).collect();
        let powers = PowerAssignment(kept.iter().map(|&(t, p)| (id_of(inst, t), p)).collect());
        Solution::assemble(inst, Algorithm::Limited, &chosen, powers, trace)
    } else {
        let mut sol = capped;
        sol.algorithm = Algorithm::Limited;
        if let Some(steps) = sol.trace.as_mut() {
            let mut all = trace;
            all.append(steps);
            *steps = all;
        }
        sol
    }
}

/// Threshold capacity maximization with powers in `[0, p_max]`.
pub fn solve_limited(inst: &Instance, links: &[LinkId]) -> Result<Solution> {
    let targets = targets_from_links(inst, links)?;
    Ok(limited(inst, &targets))
}

/// Dispatches on the algorithm; the fixed variant reads link powers.
pub fn solve(inst: &Instance, algorithm: Algorithm, links: &[LinkId]) -> Result<Solution> {
    match algorithm {
        Algorithm::Unlimited => solve_unlimited(inst, links),
        Algorithm::Fixed => solve_fixed(inst, links),
        Algorithm::Limited => solve_limited(inst, links),
    }
}
