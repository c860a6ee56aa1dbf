//! Instances, links, power assignments and solutions, plus SINR evaluation
//! and the sensitivity ordering used by every threshold algorithm.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::utility::UtilitySpec;

/// Relative slack for all SINR-versus-threshold comparisons.
pub const SINR_TOLERANCE: f64 = 1e-9;
/// Relative slack for power-versus-cap comparisons.
pub const POWER_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Maximum transmission power. Serialized as a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerCap {
    Finite(f64),
    Infinite,
}

impl PowerCap {
    pub fn is_finite(self) -> bool {
        matches!(self, PowerCap::Finite(_))
    }

    /// The cap as a float; `f64::INFINITY` for the unbounded cap.
    pub fn value(self) -> f64 {
        match self {
            PowerCap::Finite(p) => p,
            PowerCap::Infinite => f64::INFINITY,
        }
    }

    pub fn allows(self, power: f64) -> bool {
        match self {
            PowerCap::Finite(cap) => power <= cap,
            PowerCap::Infinite => true,
        }
    }
}

impl fmt::Display for PowerCap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerCap::Finite(p) => p.fmt(f),
            PowerCap::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for PowerCap {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inf" | "infinity" | "Infinity" => Ok(PowerCap::Infinite),
            _ => {
                let p: f64 = s.parse().map_err(|e| format!("bad power cap {s:?}: {e}"))?;
                if p.is_infinite() && p > 0.0 {
                    Ok(PowerCap::Infinite)
                } else {
                    Ok(PowerCap::Finite(p))
                }
            }
        }
    }
}

impl Serialize for PowerCap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PowerCap::Finite(p) => s.serialize_f64(*p),
            PowerCap::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PowerCap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(p) => Ok(PowerCap::Finite(p)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub id: LinkId,
    #[serde(rename = "s")]
    pub sender: usize,
    #[serde(rename = "r")]
    pub receiver: usize,
    #[serde(rename = "beta", default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<f64>,
    #[serde(rename = "power", default, skip_serializing_if = "Option::is_none")]
    pub fixed_power: Option<f64>,
}

impl Link {
    pub fn new(id: u32, sender: usize, receiver: usize) -> Self {
        Link {
            id: LinkId(id),
            sender,
            receiver,
            threshold: None,
            utility: None,
            demand: None,
            fixed_power: None,
        }
    }

    pub fn with_threshold(mut self, beta: f64) -> Self {
        self.threshold = Some(beta);
        self
    }

    pub fn with_utility(mut self, utility: UtilitySpec) -> Self {
        self.utility = Some(utility);
        self
    }

    pub fn with_demand(mut self, demand: f64) -> Self {
        self.demand = Some(demand);
        self
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.fixed_power = Some(power);
        self
    }

    /// The same link with sender and receiver swapped.
    pub fn reversed(&self) -> Link {
        Link {
            sender: self.receiver,
            receiver: self.sender,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct InstanceDoc {
    alpha: f64,
    noise: f64,
    p_max: PowerCap,
    metric: MetricSpace,
    links: Vec<Link>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    allow_sub_unit_threshold: bool,
}

/// A metric space with links and physical constants. Immutable once built.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    alpha: f64,
    noise: f64,
    p_max: PowerCap,
    metric: MetricSpace,
    links: Vec<Link>,
    allow_sub_unit_threshold: bool,
    index: HashMap<LinkId, usize>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha
            && self.noise == other.noise
            && self.p_max == other.p_max
            && self.metric == other.metric
            && self.links == other.links
            && self.allow_sub_unit_threshold == other.allow_sub_unit_threshold
    }
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        Instance::build(doc, true)
    }
}

impl From<Instance> for InstanceDoc {
    fn from(inst: Instance) -> Self {
        InstanceDoc {
            alpha: inst.alpha,
            noise: inst.noise,
            p_max: inst.p_max,
            metric: inst.metric,
            links: inst.links,
            allow_sub_unit_threshold: inst.allow_sub_unit_threshold,
        }
    }
}

/// Builder for [`Instance`]; validation runs in [`InstanceBuilder::build`].
#[derive(Clone, Debug)]
pub struct InstanceBuilder {
    doc: InstanceDoc,
    check_triangle: bool,
}

impl InstanceBuilder {
    pub fn p_max(mut self, cap: PowerCap) -> Self {
        self.doc.p_max = cap;
        self
    }

    pub fn link(mut self, link: Link) -> Self {
        self.doc.links.push(link);
        self
    }

    pub fn links(mut self, links: impl IntoIterator<Item = Link>) -> Self {
        self.doc.links.extend(links);
        self
    }

    pub fn allow_sub_unit_threshold(mut self, allow: bool) -> Self {
        self.doc.allow_sub_unit_threshold = allow;
        self
    }

    /// Skips the O(n³) triangle check on matrix spaces.
    pub fn skip_triangle_check(mut self) -> Self {
        self.check_triangle = false;
        self
    }

    pub fn build(self) -> Result<Instance> {
        Instance::build(self.doc, self.check_triangle)
    }
}

impl Instance {
    pub fn builder(metric: MetricSpace, alpha: f64, noise: f64) -> InstanceBuilder {
        InstanceBuilder {
            doc: InstanceDoc {
                alpha,
                noise,
                p_max: PowerCap::Infinite,
                metric,
                links: Vec::new(),
                allow_sub_unit_threshold: false,
            },
            check_triangle: true,
        }
    }

    fn build(doc: InstanceDoc, check_triangle: bool) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if !(doc.alpha.is_finite() && doc.alpha > 0.0) {
            return bad(format!("alpha = {} must be positive", doc.alpha));
        }
        if !(doc.noise.is_finite() && doc.noise > 0.0) {
            return bad(format!("noise = {} must be strictly positive", doc.noise));
        }
        if let PowerCap::Finite(p) = doc.p_max {
            if !(p.is_finite() && p > 0.0) {
                return bad(format!("p_max = {p} must be positive"));
            }
        }
        doc.metric.validate(check_triangle)?;
        let nodes = doc.metric.len();
        let mut index = HashMap::with_capacity(doc.links.len());
        for (pos, link) in doc.links.iter().enumerate() {
            let id = link.id;
            if index.insert(id, pos).is_some() {
                return bad(format!("duplicate link id {id}"));
            }
            for node in [link.sender, link.receiver] {
                if node >= nodes {
                    return Err(Error::NodeOutOfRange { index: node, len: nodes });
                }
            }
            if link.sender == link.receiver {
                return bad(format!("link {id} has sender = receiver"));
            }
            if !(doc.metric.distance_unchecked(link.sender, link.receiver) > 0.0) {
                return bad(format!("link {id} has zero length"));
            }
            if let Some(beta) = link.threshold {
                let floor = if doc.allow_sub_unit_threshold { 0.0 } else { 1.0 };
                if !(beta.is_finite() && beta > 0.0 && beta >= floor) {
                    return bad(format!("link {id} threshold {beta} below {floor}"));
                }
            }
            if let Some(delta) = link.demand {
                if !(delta.is_finite() && delta >= 0.0) {
                    return bad(format!("link {id} demand {delta} must be >= 0"));
                }
            }
            if let Some(p) = link.fixed_power {
                if !(p.is_finite() && p >= 0.0) {
                    return bad(format!("link {id} power {p} must be finite and >= 0"));
                }
            }
            if let Some(u) = &link.utility {
                u.validate()?;
            }
        }
        Ok(Instance {
            alpha: doc.alpha,
            noise: doc.noise,
            p_max: doc.p_max,
            metric: doc.metric,
            links: doc.links,
            allow_sub_unit_threshold: doc.allow_sub_unit_threshold,
            index,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn p_max(&self) -> PowerCap {
        self.p_max
    }

    pub fn metric(&self) -> &MetricSpace {
        &self.metric
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn allows_sub_unit_threshold(&self) -> bool {
        self.allow_sub_unit_threshold
    }

    pub fn link_ids(&self) -> Vec<LinkId> {
        self.links.iter().map(|l| l.id).collect()
    }

    pub fn position(&self, id: LinkId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownLink(id))
    }

    pub fn link(&self, id: LinkId) -> Result<&Link> {
        Ok(&self.links[self.position(id)?])
    }

    pub fn threshold(&self, id: LinkId) -> Result<f64> {
        self.link(id)?.threshold.ok_or(Error::MissingThreshold(id))
    }

    /// `d^alpha` between two nodes.
    pub(crate) fn path_loss(&self, from: usize, to: usize) -> f64 {
        self.metric.distance_unchecked(from, to).powf(self.alpha)
    }

    /// `d(s, r)^alpha` of the link at position `pos`.
    pub(crate) fn own_loss(&self, pos: usize) -> f64 {
        let l = &self.links[pos];
        self.path_loss(l.sender, l.receiver)
    }

    /// `d(s_from, r_to)^alpha`: loss from the sender of one link to the
    /// receiver of another.
    pub(crate) fn cross_loss(&self, from: usize, to: usize) -> f64 {
        self.path_loss(self.links[from].sender, self.links[to].receiver)
    }

    /// SINR a link reaches alone at power `power`: `p / (N d^alpha)`.
    pub fn solo_sinr(&self, id: LinkId, power: f64) -> Result<f64> {
        let pos = self.position(id)?;
        Ok(power / (self.noise * self.own_loss(pos)))
    }

    /// A copy carrying only `ids`, each with sender and receiver swapped.
    pub fn reversed(&self, ids: &[LinkId]) -> Result<Instance> {
        let links = ids
            .iter()
            .map(|&id| self.link(id).map(Link::reversed))
            .collect::<Result<Vec<_>>>()?;
        self.with_links(links)
    }

    /// A copy over the same space and constants with a new link list.
    pub fn with_links(&self, links: Vec<Link>) -> Result<Instance> {
        Instance::build(
            InstanceDoc {
                alpha: self.alpha,
                noise: self.noise,
                p_max: self.p_max,
                metric: self.metric.clone(),
                links,
                allow_sub_unit_threshold: self.allow_sub_unit_threshold,
            },
            false,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerAssignment(pub BTreeMap<LinkId, f64>);

impl PowerAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform(ids: &[LinkId], power: f64) -> Self {
        PowerAssignment(ids.iter().map(|&id| (id, power)).collect())
    }

    pub fn get(&self, id: LinkId) -> Option<f64> {
        self.0.get(&id).copied()
    }

    pub fn set(&mut self, id: LinkId, power: f64) {
        self.0.insert(id, power);
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PowerAssignment(self.0.iter().map(|(&id, &p)| (id, p * factor)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (LinkId, f64)> + '_ {
        self.0.iter().map(|(&id, &p)| (id, p))
    }

    pub fn max(&self) -> f64 {
        self.0.values().copied().fold(0.0, f64::max)
    }
}

/// Received strength `p / loss`, with zero power contributing nothing even
/// at zero distance.
pub(crate) fn received(power: f64, loss: f64) -> f64 {
    if power == 0.0 {
        0.0
    } else {
        power / loss
    }
}

/// SINR of `target` when exactly the links in `active` transmit with `powers`.
pub fn sinr(
    inst: &Instance,
    active: &[LinkId],
    powers: &PowerAssignment,
    target: LinkId,
) -> Result<f64> {
    if !active.contains(&target) {
        return Err(Error::NotActive(target));
    }
    let t = inst.position(target)?;
    let mut interference = 0.0;
    for &id in active {
        if id == target {
            continue;
        }
        let p = powers.get(id).ok_or(Error::MissingPower(id))?;
        interference += received(p, inst.cross_loss(inst.position(id)?, t));
    }
    let signal = received(powers.get(target).ok_or(Error::MissingPower(target))?, inst.own_loss(t));
    Ok(signal / (interference + inst.noise))
}

/// SINR of every active link.
pub fn sinr_all(
    inst: &Instance,
    active: &[LinkId],
    powers: &PowerAssignment,
) -> Result<BTreeMap<LinkId, f64>> {
    active
        .iter()
        .map(|&id| sinr(inst, active, powers, id).map(|g| (id, g)))
        .collect()
}

/// Whether `gamma` meets `beta` under the shared relative tolerance.
pub fn meets(gamma: f64, beta: f64) -> bool {
    gamma >= beta * (1.0 - SINR_TOLERANCE)
}

/// A link taking part in a threshold problem together with the SINR target
/// in force for this run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Target {
    pub pos: usize,
    pub beta: f64,
}

/// Orders targets by decreasing `beta * d^alpha`, ties by ascending link id.
/// Element 0 has rank 1 (the most sensitive link).
pub(crate) fn order_targets(inst: &Instance, targets: &[Target]) -> Vec<Target> {
    let mut keyed: Vec<(f64, LinkId, Target)> = targets
        .iter()
        .map(|t| (t.beta * inst.own_loss(t.pos), inst.links[t.pos].id, *t))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, _, t)| t).collect()
}

/// Link ids ordered by rank: the first entry has rank 1, i.e. the largest
/// `beta * d^alpha`. Ties go to the smaller id.
pub fn sensitivity_order(inst: &Instance, links: &[LinkId]) -> Result<Vec<LinkId>> {
    let targets = links
        .iter()
        .map(|&id| {
            Ok(Target {
                pos: inst.position(id)?,
                beta: inst.threshold(id)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(order_targets(inst, &targets)
        .into_iter()
        .map(|t| inst.links[t.pos].id)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Unlimited,
    Fixed,
    Limited,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Unlimited => "unlimited",
            Algorithm::Fixed => "fixed",
            Algorithm::Limited => "limited",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "unlimited" => Ok(Algorithm::Unlimited),
            "fixed" => Ok(Algorithm::Fixed),
            "limited" => Ok(Algorithm::Limited),
            _ => Err(format!("unknown algorithm {s:?}")),
        }
    }
}

/// One decision in a greedy pass, kept for replay checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub pass: String,
    pub link: LinkId,
    pub load: f64,
    pub bound: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub algorithm: Algorithm,
    pub selected: Vec<LinkId>,
    pub powers: PowerAssignment,
    pub sinr: BTreeMap<LinkId, f64>,
    /// SINR target each selected link was scheduled against.
    pub thresholds: BTreeMap<LinkId, f64>,
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Solution {
    pub fn empty(algorithm: Algorithm) -> Self {
        Solution {
            algorithm,
            selected: Vec::new(),
            powers: PowerAssignment::new(),
            sinr: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            objective: 0.0,
            trace: None,
            warnings: Vec::new(),
        }
    }

    /// Assembles a threshold solution: sorts the selection, evaluates SINRs
    /// and sets the objective to the number of selected links.
    pub(crate) fn assemble(
        inst: &Instance,
        algorithm: Algorithm,
        chosen: &[Target],
        powers: PowerAssignment,
        trace: Vec<TraceStep>,
    ) -> Solution {
        let mut selected: Vec<LinkId> = chosen.iter().map(|t| inst.links[t.pos].id).collect();
        selected.sort();
        let thresholds = chosen
            .iter()
            .map(|t| (inst.links[t.pos].id, t.beta))
            .collect();
        let sinr = sinr_all(inst, &selected, &powers).expect("powers cover the selection");
        Solution {
            algorithm,
            objective: selected.len() as f64,
            selected,
            powers,
            sinr,
            thresholds,
            trace: Some(trace),
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Links whose stored SINR misses their threshold.
    pub fn shortfalls(&self) -> Vec<LinkId> {
        self.selected
            .iter()
            .copied()
            .filter(|id| match (self.sinr.get(id), self.thresholds.get(id)) {
                (Some(&g), Some(&b)) => !meets(g, b),
                _ => true,
            })
            .collect()
    }
}
