//! Seeded instance generation.
//!
//! Every random draw comes from a ChaCha stream keyed by the seed, a field
//! tag and the link index, so adding a field never shifts earlier draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::model::{Instance, Link, PowerCap};
use crate::utility::{Utility, UtilitySpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSpec {
    Range { min: f64, max: f64 },
    Set { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityFamily {
    /// A single step of value 1 at the link's threshold.
    Threshold,
    /// `steps` random steps with SINRs in `[1, gamma_max]` and values up to
    /// `value_max`.
    Step { steps: usize, gamma_max: f64, value_max: f64 },
    Shannon { scale: f64, cutoff: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandSpec {
    Absolute { min: f64, max: f64 },
    /// Multiples of the link's maximum utility.
    RelativeToMax { min: f64, max: f64 },
}

/// Fixed powers as a function of `s = beta N d^alpha`. All three are
/// nondecreasing in `s` with `p / s` nonincreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PowerSpec {
    Uniform { power: f64 },
    Linear { factor: f64 },
    SquareRoot { factor: f64 },
}

impl PowerSpec {
    fn power(&self, sensitivity: f64) -> f64 {
        match *self {
            PowerSpec::Uniform { power } => power,
            PowerSpec::Linear { factor } => factor * sensitivity,
            PowerSpec::SquareRoot { factor } => factor * sensitivity.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub area: f64,
    pub d_range: (f64, f64),
    pub beta: BetaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilityFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<DemandSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerSpec>,
    pub alpha: f64,
    pub noise: f64,
    pub p_max: PowerCap,
    pub seed: u64,
    #[serde(default)]
    pub allow_sub_unit: bool,
}

fn default_dim() -> usize {
    2
}

impl GenConfig {
    /// Planar links with thresholds in `[1, 10]`, infinite cap.
    pub fn new(n: usize, seed: u64) -> Self {
        GenConfig {
            n,
            dim: 2,
            area: 100.0,
            d_range: (1.0, 10.0),
            beta: BetaSpec::Range { min: 1.0, max: 10.0 },
            utility: None,
            demand: None,
            power: None,
            alpha: 2.0,
            noise: 1e-6,
            p_max: PowerCap::Infinite,
            seed,
            allow_sub_unit: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        let (lo, hi) = self.d_range;
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
            return bad(format!("link lengths ({lo}, {hi}) must be positive and finite"));
        }
        if lo > hi {
            return bad(format!("impossible geometry: d_min {lo} > d_max {hi}"));
        }
        if !(self.area > 0.0) || hi > self.area * (self.dim as f64).sqrt() {
            return bad(format!("d_max {hi} exceeds the diameter of area {}", self.area));
        }
        let floor = if self.allow_sub_unit { 0.0 } else { 1.0 };
        let betas_ok = match &self.beta {
            BetaSpec::Range { min, max } => *min > 0.0 && *min >= floor && min <= max && max.is_finite(),
            BetaSpec::Set { values } => {
                !values.is_empty() && values.iter().all(|&b| b > 0.0 && b >= floor && b.is_finite())
            }
        };
        if !betas_ok {
            return bad(format!("thresholds {:?} must be finite and >= {floor}", self.beta));
        }
        if let Some(UtilityFamily::Step { steps, gamma_max, value_max }) = &self.utility {
            if *steps == 0 || !(*gamma_max >= 1.0) || !(*value_max > 0.0) {
                return bad("step family needs steps >= 1, gamma_max >= 1, value_max > 0".into());
            }
        }
        if let Some(DemandSpec::Absolute { min, max } | DemandSpec::RelativeToMax { min, max }) = &self.demand {
            if !(*min >= 0.0 && min <= max && max.is_finite()) {
                return bad(format!("demand range ({min}, {max}) is invalid"));
            }
        }
        Ok(())
    }
}

/// Field tags for the random streams.
mod tag {
    pub const SENDER: u64 = 1;
    pub const RADIUS: u64 = 2;
    pub const DIRECTION: u64 = 3;
    pub const BETA: u64 = 4;
    pub const UTILITY: u64 = 5;
    pub const DEMAND: u64 = 6;
}

/// Stream for one field of one link.
pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng.set_word_pos(u128::from(index) << 32);
    rng
}

fn random_step(rng: &mut ChaCha8Rng, steps: usize, gamma_max: f64, value_max: f64) -> Result<UtilitySpec> {
    let mut gammas: Vec<f64> = (1..steps).map(|_| rng.random_range(1.0..=gamma_max)).collect();
    gammas.push(1.0);
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let mut value = 0.0;
    let table = gammas
        .into_iter()
        .map(|g| {
            value += rng.random_range(0.0..=value_max / steps as f64);
            (g, value)
        })
        .collect();
    UtilitySpec::step(table)
}

/// Random instance: senders uniform in `[0, area]^dim`, each receiver at a
/// uniform distance from `d_range` in a uniform direction. Node `2i` sends
/// and node `2i + 1` receives on link `i`.
pub fn gen_random(config: &GenConfig) -> Result<Instance> {
    config.validate()?;
    let mut points = Vec::with_capacity(2 * config.n);
    let mut links = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let idx = i as u64;
        let mut rng = stream(config.seed, tag::SENDER, idx);
        let sender: Vec<f64> = (0..config.dim).map(|_| rng.random_range(0.0..=config.area)).collect();
        let (lo, hi) = config.d_range;
        let radius = stream(config.seed, tag::RADIUS, idx).random_range(lo..=hi);
        let mut rng = stream(config.seed, tag::DIRECTION, idx);
        let direction = loop {
            let v: Vec<f64> = (0..config.dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
            }
        };
        let receiver: Vec<f64> = sender.iter().zip(&direction).map(|(s, d)| s + radius * d).collect();
        let length = sender
            .iter()
            .zip(&receiver)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        points.push(sender);
        points.push(receiver);

        let mut rng = stream(config.seed, tag::BETA, idx);
        let beta = match &config.beta {
            BetaSpec::Range { min, max } => rng.random_range(*min..=*max),
            BetaSpec::Set { values } => values[rng.random_range(0..values.len())],
        };
        let mut link = Link::new(i as u32, 2 * i, 2 * i + 1).with_threshold(beta);
        let sensitivity = beta * config.noise * length.powf(config.alpha);
        if let Some(power) = &config.power {
            link = link.with_power(power.power(sensitivity));
        }
        if let Some(family) = &config.utility {
            let mut rng = stream(config.seed, tag::UTILITY, idx);
            let u = match *family {
                UtilityFamily::Threshold => UtilitySpec::threshold(beta.max(1.0))?,
                UtilityFamily::Step { steps, gamma_max, value_max } => {
                    random_step(&mut rng, steps, gamma_max, value_max)?
                }
                UtilityFamily::Shannon { scale, cutoff } => UtilitySpec::shannon(scale, cutoff)?,
            };
            link = link.with_utility(u);
        }
        if let Some(demand) = &config.demand {
            let mut rng = stream(config.seed, tag::DEMAND, idx);
            let delta = match *demand {
                DemandSpec::Absolute { min, max } => rng.random_range(min..=max),
                DemandSpec::RelativeToMax { min, max } => {
                    let u = link.utility.as_ref().ok_or_else(|| {
                        Error::InvalidConfig("relative demands need a utility family".into())
                    })?;
                    let p = link.fixed_power.unwrap_or(config.p_max.value());
                    let cap = p / (config.noise * length.powf(config.alpha));
                    rng.random_range(min..=max) * u.max_utility(cap)?
                }
            };
            link = link.with_demand(delta);
        }
        links.push(link);
    }
    Instance::builder(MetricSpace::euclidean(config.dim, points)?, config.alpha, config.noise)
        .p_max(config.p_max)
        .allow_sub_unit_threshold(config.allow_sub_unit)
        .links(links)
        .build()
}

/// Options for [`gen_line`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineOptions {
    pub alpha: f64,
    pub noise: f64,
    pub p_max: PowerCap,
    pub allow_sub_unit: bool,
    /// Separate coinciding coordinates by 1e-9 steps so distinct nodes never
    /// share a position.
    pub perturb: bool,
}

impl Default for LineOptions {
    fn default() -> Self {
        LineOptions {
            alpha: 2.0,
            noise: 0.1,
            p_max: PowerCap::Infinite,
            allow_sub_unit: false,
            perturb: false,
        }
    }
}

/// Offset between nodes that would otherwise coincide.
pub const PERTURBATION: f64 = 1e-9;

/// One-dimensional instance with link `i` sending from `entries[i].0` to
/// `entries[i].1` at threshold `entries[i].2`.
///
/// With `perturb`, the `j`-th repeat of a coordinate moves `j * 1e-9` away
/// from its link partner, which only lengthens the link.
pub fn gen_line(entries: &[(f64, f64, f64)], options: &LineOptions) -> Result<Instance> {
    let mut points: Vec<f64> = Vec::with_capacity(2 * entries.len());
    for &(s, r, _) in entries {
        if !(s.is_finite() && r.is_finite()) {
            return Err(Error::InvalidConfig(format!("coordinates ({s}, {r}) not finite")));
        }
        if s == r {
            return Err(Error::InvalidConfig(format!("sender and receiver both at {s}")));
        }
        points.push(s);
        points.push(r);
    }
    if options.perturb {
        let mut seen: std::collections::HashMap<u64, usize> = std::collections::HashMap::new();
        for k in 0..points.len() {
            let x = points[k];
            let partner = points[k ^ 1];
            let count = seen.entry(x.to_bits()).or_insert(0);
            let shift = *count as f64 * PERTURBATION;
            *count += 1;
            points[k] = if x < partner { x - shift } else { x + shift };
        }
    }
    let links = entries
        .iter()
        .enumerate()
        .map(|(i, &(_, _, beta))| Link::new(i as u32, 2 * i, 2 * i + 1).with_threshold(beta));
    Instance::builder(
        MetricSpace::euclidean(1, points.into_iter().map(|x| vec![x]).collect())?,
        options.alpha,
        options.noise,
    )
    .p_max(options.p_max)
    .allow_sub_unit_threshold(options.allow_sub_unit)
    .links(links)
    .build()
}
