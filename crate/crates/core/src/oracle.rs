//! Exact references: admissibility of a link set under variable powers, and
//! brute-force optima for small instances.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{meets, received, Instance, LinkId, PowerAssignment, PowerCap, Target};
use crate::threshold::targets_from_links;
use crate::utility::Utility;

/// Relative change below which the fixed-point iteration has converged.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-12;
/// Iteration budget of the fixed-point iteration.
pub const MAX_ITERATIONS: usize = 100_000;
/// Powers above this bound count as divergence when the cap is infinite.
pub const DIVERGENCE_BOUND: f64 = 1e30;
/// Largest link count accepted by the brute-force searches.
pub const BRUTE_FORCE_LIMIT: usize = 20;
/// Utilities within this distance count as tied in the flexible search.
const UTILITY_TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FixedPoint,
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityCertificate {
    pub feasible: bool,
    /// Power assignment meeting every threshold; present iff feasible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powers: Option<PowerAssignment>,
    pub iterations: usize,
    pub method: Method,
    /// First link whose power passed the cap (or the divergence bound).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violated: Option<LinkId>,
    /// Bound used to declare divergence.
    pub divergence_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_radius: Option<f64>,
}

impl AdmissibilityCertificate {
    fn trivial() -> Self {
        AdmissibilityCertificate {
            feasible: true,
            powers: Some(PowerAssignment::new()),
            iterations: 0,
            method: Method::FixedPoint,
            violated: None,
            divergence_bound: DIVERGENCE_BOUND,
            spectral_radius: None,
        }
    }
}

/// `g[i][j] = beta_i d(s_i, r_i)^alpha / d(s_j, r_i)^alpha`, the power link
/// `i` needs per unit of power sent by `j`. Diagonal entries are zero.
fn gain_matrix(inst: &Instance, targets: &[Target]) -> Vec<Vec<f64>> {
    targets
        .iter()
        .map(|t| {
            let own = t.beta * inst.own_loss(t.pos);
            targets
                .iter()
                .map(|o| {
                    if o.pos == t.pos {
                        0.0
                    } else {
                        own / inst.cross_loss(o.pos, t.pos)
                    }
                })
                .collect()
        })
        .collect()
}

/// One step `p' = G p + beta N d^alpha`, with zero powers contributing
/// nothing even across zero distances.
fn step(gain: &[Vec<f64>], base: &[f64], p: &[f64]) -> Vec<f64> {
    gain.iter()
        .zip(base)
        .map(|(row, &b)| {
            let interference: f64 = row
                .iter()
                .zip(p)
                .map(|(&g, &q)| if q == 0.0 { 0.0 } else { g * q })
                .sum();
            interference + b
        })
        .collect()
}

pub(crate) fn admissible(inst: &Instance, targets: &[Target], cap: PowerCap) -> AdmissibilityCertificate {
    if targets.is_empty() {
        return AdmissibilityCertificate::trivial();
    }
    // a threshold equal to the SINR reachable alone at the cap needs the cap
    // itself, which rounding may overshoot by an ulp
    let limit = match cap {
        PowerCap::Finite(c) => c * (1.0 + crate::model::POWER_SLACK),
        PowerCap::Infinite => DIVERGENCE_BOUND,
    };
    let gain = gain_matrix(inst, targets);
    let base: Vec<f64> = targets
        .iter()
        .map(|t| t.beta * inst.noise() * inst.own_loss(t.pos))
        .collect();
    let id = |i: usize| inst.links()[targets[i].pos].id;
    let infeasible = |iterations, violated| AdmissibilityCertificate {
        feasible: false,
        powers: None,
        iterations,
        method: Method::FixedPoint,
        violated,
        divergence_bound: DIVERGENCE_BOUND,
        spectral_radius: None,
    };

    let mut p = vec![0.0; targets.len()];
    for iteration in 1..=MAX_ITERATIONS {
        let next = step(&gain, &base, &p);
        assert!(
            next.iter().zip(&p).all(|(a, b)| a >= b),
            "fixed-point iteration must be nondecreasing"
        );
        if let Some(i) = next.iter().position(|&q| !(q <= limit)) {
            return infeasible(iteration, Some(id(i)));
        }
        let change = next
            .iter()
            .zip(&p)
            .map(|(&a, &b)| (a - b) / a)
            .fold(0.0, f64::max);
        // p is returned rather than next: since next = beta d^alpha (I(p) + N),
        // each link reaches SINR beta * p / next >= beta * (1 - change) under p.
        if iteration > 1 && change < CONVERGENCE_TOLERANCE {
            return certified(targets, inst, p, iteration);
        }
        if iteration == MAX_ITERATIONS {
            return if change < crate::model::SINR_TOLERANCE {
                certified(targets, inst, p, iteration)
            } else {
                infeasible(iteration, None)
            };
        }
        p = next;
    }
    unreachable!("loop returns on its last iteration")
}

fn certified(
    targets: &[Target],
    inst: &Instance,
    p: Vec<f64>,
    iterations: usize,
) -> AdmissibilityCertificate {
    let powers = PowerAssignment(
        targets
            .iter()
            .zip(p)
            .map(|(t, q)| (inst.links()[t.pos].id, q))
            .collect(),
    );
    AdmissibilityCertificate {
        feasible: true,
        powers: Some(powers),
        iterations,
        method: Method::FixedPoint,
        violated: None,
        divergence_bound: DIVERGENCE_BOUND,
        spectral_radius: None,
    }
}

/// Decides whether some power assignment with powers at most `cap` lets every
/// link of `subset` meet its own threshold.
pub fn check_admissible(
    inst: &Instance,
    subset: &[LinkId],
    cap: PowerCap,
) -> Result<AdmissibilityCertificate> {
    let targets = targets_from_links(inst, subset)?;
    Ok(admissible(inst, &targets, cap))
}

/// [`check_admissible`] against explicit thresholds instead of the links' own.
pub fn check_admissible_with(
    inst: &Instance,
    subset: &[LinkId],
    thresholds: &BTreeMap<LinkId, f64>,
    cap: PowerCap,
) -> Result<AdmissibilityCertificate> {
    let targets = thresholded(inst, subset, thresholds)?;
    Ok(admissible(inst, &targets, cap))
}

pub(crate) fn thresholded(
    inst: &Instance,
    subset: &[LinkId],
    thresholds: &BTreeMap<LinkId, f64>,
) -> Result<Vec<Target>> {
    subset
        .iter()
        .map(|&id| {
            Ok(Target {
                pos: inst.position(id)?,
                beta: *thresholds.get(&id).ok_or(Error::MissingThreshold(id))?,
            })
        })
        .collect()
}

/// Lower and upper Collatz–Wielandt bounds on the spectral radius of the
/// nonnegative matrix `m`, from power iteration on `m + I`.
fn spectral_bounds(m: &[Vec<f64>], decide_at: f64) -> (f64, f64, usize) {
    let n = m.len();
    let mut x = vec![1.0; n];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for iteration in 1..=MAX_ITERATIONS {
        let y: Vec<f64> = (0..n)
            .map(|i| x[i] + (0..n).map(|j| if x[j] == 0.0 { 0.0 } else { m[i][j] * x[j] }).sum::<f64>())
            .collect();
        let ratios = (0..n).filter(|&i| x[i] > 0.0).map(|i| y[i] / x[i]);
        lo = ratios.clone().fold(f64::INFINITY, f64::min) - 1.0;
        hi = ratios.fold(0.0, f64::max) - 1.0;
        if !hi.is_finite() || hi < decide_at || lo >= decide_at || hi - lo <= 1e-14 * hi.max(1e-300) {
            return (lo, hi, iteration);
        }
        let norm = y.iter().copied().fold(0.0, f64::max);
        x = y.into_iter().map(|v| v / norm).collect();
    }
    (lo, hi, MAX_ITERATIONS)
}

/// Estimate of the spectral radius of the normalized gain matrix
/// `B[l][l'] = beta(l) d(s, r)^alpha / d(s', r)^alpha` (zero diagonal).
pub fn spectral_radius(inst: &Instance, subset: &[LinkId]) -> Result<f64> {
    let targets = targets_from_links(inst, subset)?;
    if targets.is_empty() {
        return Ok(0.0);
    }
    let (lo, hi, _) = spectral_bounds(&gain_matrix(inst, &targets), f64::NAN);
    Ok(if hi.is_finite() { 0.5 * (lo + hi) } else { hi })
}

/// Uncapped admissibility from the spectral radius of the gain matrix:
/// feasible iff it is below 1. Carries no powers.
pub fn check_spectral(inst: &Instance, subset: &[LinkId]) -> Result<AdmissibilityCertificate> {
    let targets = targets_from_links(inst, subset)?;
    if targets.is_empty() {
        let mut c = AdmissibilityCertificate::trivial();
        c.method = Method::Spectral;
        c.powers = None;
        c.spectral_radius = Some(0.0);
        return Ok(c);
    }
    let (lo, hi, iterations) = spectral_bounds(&gain_matrix(inst, &targets), 1.0);
    let feasible = hi < 1.0;
    let rho = if hi < 1.0 || lo >= 1.0 || !hi.is_finite() { hi } else { 0.5 * (lo + hi) };
    Ok(AdmissibilityCertificate {
        feasible,
        powers: None,
        iterations,
        method: Method::Spectral,
        violated: None,
        divergence_bound: DIVERGENCE_BOUND,
        spectral_radius: Some(rho),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// Any nonnegative powers.
    Variable,
    /// Powers at most the instance's `p_max`.
    VariableCapped,
    /// The given powers; feasibility is read off the SINRs.
    Fixed { powers: PowerAssignment },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    pub subset: Vec<LinkId>,
    pub value: f64,
}

fn brute_force_ids(links: &[LinkId]) -> Result<Vec<LinkId>> {
    if links.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyLinks {
            n: links.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut ids = links.to_vec();
    ids.sort();
    ids.dedup();
    Ok(ids)
}

/// Largest subset of `links` feasible under `regime`; among equally large
/// subsets the lexicographically smallest sorted id list wins.
pub fn brute_opt_threshold(inst: &Instance, links: &[LinkId], regime: &Regime) -> Result<BruteForce> {
    let ids = brute_force_ids(links)?;
    let targets = targets_from_links(inst, &ids)?;
    if let Regime::Fixed { powers } = regime {
        for &id in &ids {
            powers.get(id).ok_or(Error::MissingPower(id))?;
        }
    }
    let feasible = |set: &[usize]| -> bool {
        match regime {
            Regime::Variable | Regime::VariableCapped => {
                let cap = match regime {
                    Regime::Variable => PowerCap::Infinite,
                    _ => inst.p_max(),
                };
                let ts: Vec<Target> = set.iter().map(|&i| targets[i]).collect();
                admissible(inst, &ts, cap).feasible
            }
            Regime::Fixed { powers } => {
                let active: Vec<LinkId> = set.iter().map(|&i| ids[i]).collect();
                set.iter().all(|&i| {
                    let g = crate::model::sinr(inst, &active, powers, ids[i]).expect("powers checked");
                    meets(g, targets[i].beta)
                })
            }
        }
    };

    // admissibility is closed under subsets, so infeasible singletons and
    // pairs prune every superset
    let n = ids.len();
    let single: Vec<bool> = (0..n).map(|i| feasible(&[i])).collect();
    let mut pair = vec![vec![true; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let ok = single[i] && single[j] && feasible(&[i, j]);
            pair[i][j] = ok;
            pair[j][i] = ok;
        }
    }
    let candidates: Vec<usize> = (0..n).filter(|&i| single[i]).collect();
    for k in (1..=candidates.len()).rev() {
        let sets: Vec<Vec<usize>> = candidates
            .iter()
            .copied()
            .combinations(k)
            .filter(|s| s.iter().tuple_combinations().all(|(&a, &b)| pair[a][b]))
            .collect();
        if let Some(best) = sets.par_iter().find_first(|s| feasible(s)) {
            return Ok(BruteForce {
                subset: best.iter().map(|&i| ids[i]).collect(),
                value: k as f64,
            });
        }
    }
    Ok(BruteForce {
        subset: Vec::new(),
        value: 0.0,
    })
}

/// Subset of `links` with the largest summed utility at realized SINRs under
/// fixed `powers`. Ties (within 1e-12) go to the lexicographically smallest
/// sorted id list.
pub fn brute_opt_flexible_fixed(
    inst: &Instance,
    links: &[LinkId],
    powers: &PowerAssignment,
) -> Result<BruteForce> {
    let ids = brute_force_ids(links)?;
    let n = ids.len();
    let mut utilities = Vec::with_capacity(n);
    let mut pw = Vec::with_capacity(n);
    let mut pos = Vec::with_capacity(n);
    for &id in &ids {
        let link = inst.link(id)?;
        utilities.push(link.utility.clone().ok_or(Error::MissingUtility(id))?);
        pw.push(powers.get(id).ok_or(Error::MissingPower(id))?);
        pos.push(inst.position(id)?);
    }
    let own: Vec<f64> = pos.iter().map(|&p| inst.own_loss(p)).collect();
    let cross: Vec<Vec<f64>> = pos
        .iter()
        .map(|&from| pos.iter().map(|&to| inst.cross_loss(from, to)).collect())
        .collect();
    let noise = inst.noise();

    let values: Vec<f64> = (0u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            members
                .iter()
                .map(|&t| {
                    let interference: f64 = members
                        .iter()
                        .filter(|&&o| o != t)
                        .map(|&o| received(pw[o], cross[o][t]))
                        .sum();
                    utilities[t].value(received(pw[t], own[t]) / (interference + noise))
                })
                .sum()
        })
        .collect();
    let top = values.iter().copied().fold(0.0, f64::max);
    let subset_of = |mask: usize| -> Vec<LinkId> {
        (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ids[i]).collect()
    };
    let best = values
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v >= top - UTILITY_TIE)
        .map(|(mask, _)| subset_of(mask))
        .min()
        .expect("the maximum is attained");
    let value = values[best
        .iter()
        .map(|id| 1usize << ids.binary_search(id).expect("member"))
        .sum::<usize>()];
    Ok(BruteForce { subset: best, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpace;
    use crate::model::{sinr, Link};
    use crate::utility::UtilitySpec;

    fn line(entries: &[(f64, f64, f64)], noise: f64, cap: PowerCap) -> Instance {
        let mut points = Vec::new();
        let mut links = Vec::new();
        for (i, &(s, r, b)) in entries.iter().enumerate() {
            points.push(vec![s]);
            points.push(vec![r]);
            links.push(Link::new(i as u32, 2 * i, 2 * i + 1).with_threshold(b));
        }
        Instance::builder(MetricSpace::euclidean(1, points).unwrap(), 2.0, noise)
            .p_max(cap)
            .links(links)
            .build()
            .unwrap()
    }

    /// Two unit links whose cross distances are both 2: `B = [[0, b/4], [b/4, 0]]`.
    fn symmetric_pair(beta: f64) -> Instance {
        let d = vec![
            vec![0.0, 1.0, 2.0, 1.5],
            vec![1.0, 0.0, 1.5, 2.0],
            vec![2.0, 1.5, 0.0, 1.0],
            vec![1.5, 2.0, 1.0, 0.0],
        ];
        Instance::builder(MetricSpace::matrix(d).unwrap(), 2.0, 1e-9)
            .link(Link::new(0, 0, 1).with_threshold(beta))
            .link(Link::new(1, 3, 2).with_threshold(beta))
            .build()
            .unwrap()
    }

    #[test]
    fn singleton_fixed_point() {
        let inst = line(&[(0.0, 2.0, 3.0)], 0.1, PowerCap::Infinite);
        let c = check_admissible(&inst, &[LinkId(0)], PowerCap::Infinite).unwrap();
        assert!(c.feasible);
        let p = c.powers.unwrap().get(LinkId(0)).unwrap();
        assert!((p - 3.0 * 0.1 * 4.0).abs() < 1e-12);
        let c = check_admissible(&inst, &[LinkId(0)], PowerCap::Finite(1.0)).unwrap();
        assert!(!c.feasible);
        assert_eq!(c.violated, Some(LinkId(0)));
    }

    #[test]
    fn symmetric_pair_spectral_examples() {
        let ids = [LinkId(0), LinkId(1)];
        let ok = symmetric_pair(1.0);
        assert!((spectral_radius(&ok, &ids).unwrap() - 0.25).abs() < 1e-12);
        assert!(check_admissible(&ok, &ids, PowerCap::Infinite).unwrap().feasible);
        assert!(check_spectral(&ok, &ids).unwrap().feasible);
        let bad = symmetric_pair(5.0);
        assert!((spectral_radius(&bad, &ids).unwrap() - 1.25).abs() < 1e-12);
        let c = check_admissible(&bad, &ids, PowerCap::Infinite).unwrap();
        assert!(!c.feasible);
        assert!(c.powers.is_none());
        assert!(!check_spectral(&bad, &ids).unwrap().feasible);
    }

    #[test]
    fn certificate_powers_meet_thresholds() {
        let entries = [(0.0, 1.0, 2.0), (3.0, 4.0, 1.5), (8.0, 9.5, 3.0)];
        let inst = line(&entries, 0.05, PowerCap::Infinite);
        let ids = inst.link_ids();
        let c = check_admissible(&inst, &ids, PowerCap::Infinite).unwrap();
        assert!(c.feasible);
        let p = c.powers.unwrap();
        for &id in &ids {
            let g = sinr(&inst, &ids, &p, id).unwrap();
            assert!(g >= inst.threshold(id).unwrap() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn empty_set_is_admissible() {
        let inst = line(&[(0.0, 1.0, 1.0)], 0.1, PowerCap::Infinite);
        assert!(check_admissible(&inst, &[], PowerCap::Finite(1e-9)).unwrap().feasible);
    }

    #[test]
    fn scaled_thresholds() {
        let inst = line(&[(0.0, 1.0, 1.0)], 0.1, PowerCap::Finite(0.25));
        let ids = [LinkId(0)];
        let t: BTreeMap<_, _> = [(LinkId(0), 3.0)].into_iter().collect();
        assert!(!check_admissible_with(&inst, &ids, &t, inst.p_max()).unwrap().feasible);
        let t: BTreeMap<_, _> = [(LinkId(0), 2.0)].into_iter().collect();
        assert!(check_admissible_with(&inst, &ids, &t, inst.p_max()).unwrap().feasible);
        assert!(matches!(
            check_admissible_with(&inst, &ids, &BTreeMap::new(), inst.p_max()),
            Err(Error::MissingThreshold(_))
        ));
    }

    #[test]
    fn certificate_json_shape() {
        let inst = line(&[(0.0, 1.0, 1.0)], 0.1, PowerCap::Infinite);
        let c = check_admissible(&inst, &[LinkId(0)], PowerCap::Infinite).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["feasible"], true);
        assert_eq!(v["method"], "fixed_point");
        assert!(v["powers"]["0"].is_number());
    }

    #[test]
    fn brute_force_examples() {
        let inst = line(&[(0.0, 1.0, 1.0)], 0.1, PowerCap::Infinite);
        let r = brute_opt_threshold(&inst, &[LinkId(0)], &Regime::Variable).unwrap();
        assert_eq!(r.subset, vec![LinkId(0)]);

        // beta N d^alpha = 0.1 > p_max for both
        let inst = line(&[(0.0, 1.0, 1.0), (10.0, 11.0, 1.0)], 0.1, PowerCap::Finite(0.05));
        let r = brute_opt_threshold(&inst, &inst.link_ids(), &Regime::VariableCapped).unwrap();
        assert!(r.subset.is_empty());
        assert_eq!(r.value, 0.0);
        let r = brute_opt_threshold(&inst, &inst.link_ids(), &Regime::Variable).unwrap();
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn brute_force_tie_is_lexicographic() {
        // three mutually incompatible links (shared geometry, beta high)
        let inst = line(&[(0.0, 1.0, 5.0), (0.5, 1.5, 5.0), (1.0, 2.0, 5.0)], 0.1, PowerCap::Infinite);
        let r = brute_opt_threshold(&inst, &inst.link_ids(), &Regime::Variable).unwrap();
        assert_eq!(r.subset, vec![LinkId(0)]);
    }

    #[test]
    fn brute_force_fixed_regime() {
        let inst = line(&[(0.0, 1.0, 1.0), (2.0, 3.0, 1.0)], 0.1, PowerCap::Infinite);
        let ids = inst.link_ids();
        let p = PowerAssignment::uniform(&ids, 1.0);
        // link 0 suffers SINR 1 / (1 + 0.1) < 1 when both transmit
        let r = brute_opt_threshold(&inst, &ids, &Regime::Fixed { powers: p }).unwrap();
        assert_eq!(r.subset, vec![LinkId(0)]);
    }

    #[test]
    fn brute_force_limit() {
        let entries: Vec<_> = (0..21).map(|i| (10.0 * i as f64, 10.0 * i as f64 + 1.0, 1.0)).collect();
        let inst = line(&entries, 0.1, PowerCap::Infinite);
        assert!(matches!(
            brute_opt_threshold(&inst, &inst.link_ids(), &Regime::Variable),
            Err(Error::TooManyLinks { n: 21, limit: 20 })
        ));
    }

    fn with_utility(inst: Instance, u: UtilitySpec) -> Instance {
        let links = inst.links().iter().cloned().map(|l| l.with_utility(u.clone())).collect();
        inst.with_links(links).unwrap()
    }

    #[test]
    fn flexible_brute_force_examples() {
        let u = UtilitySpec::shannon(1.0, 1.0).unwrap();
        let inst = with_utility(line(&[(0.0, 1.0, 1.0)], 0.1, PowerCap::Infinite), u.clone());
        let p = PowerAssignment::uniform(&[LinkId(0)], 1.0);
        let r = brute_opt_flexible_fixed(&inst, &[LinkId(0)], &p).unwrap();
        assert_eq!(r.subset, vec![LinkId(0)]);
        assert!((r.value - 11f64.log2()).abs() < 1e-12);

        // together each SINR is below 1, so a singleton wins
        let inst = with_utility(line(&[(0.0, 1.0, 1.0), (1.5, 0.5, 1.0)], 0.1, PowerCap::Infinite), u);
        let ids = inst.link_ids();
        let p = PowerAssignment::uniform(&ids, 1.0);
        for &id in &ids {
            assert!(sinr(&inst, &ids, &p, id).unwrap() < 1.0);
        }
        let r = brute_opt_flexible_fixed(&inst, &ids, &p).unwrap();
        assert_eq!(r.subset.len(), 1);
    }

    #[test]
    fn flexible_brute_force_all_zero() {
        let u = UtilitySpec::step(vec![(1e6, 1.0)]).unwrap();
        let inst = with_utility(line(&[(0.0, 1.0, 1.0), (5.0, 6.0, 1.0)], 0.1, PowerCap::Infinite), u);
        let ids = inst.link_ids();
        let r = brute_opt_flexible_fixed(&inst, &ids, &PowerAssignment::uniform(&ids, 1.0)).unwrap();
        assert!(r.subset.is_empty());
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn subset_monotonicity_spot_check() {
        let entries = [(0.0, 1.0, 1.5), (2.5, 3.5, 1.0), (6.0, 7.0, 2.0), (9.0, 10.0, 1.0)];
        let inst = line(&entries, 0.01, PowerCap::Infinite);
        let ids = inst.link_ids();
        for mask in 0u32..16 {
            let set: Vec<LinkId> = (0..4).filter(|i| mask >> i & 1 == 1).map(|i| ids[i]).collect();
            if check_admissible(&inst, &set, PowerCap::Infinite).unwrap().feasible {
                for drop in 0..set.len() {
                    let mut sub = set.clone();
                    sub.remove(drop);
                    assert!(check_admissible(&inst, &sub, PowerCap::Infinite).unwrap().feasible);
                }
            }
        }
    }
}
