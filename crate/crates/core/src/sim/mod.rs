//! Monte Carlo for Lévy processes whose characteristics are chosen from Θ
//! piecewise in time.
//!
//! One increment over `dt` is
//!
//! ```text
//! b_ε dt + √(c dt) N + Σ_{jumps with |z| > ε} z + √(σ²_ε dt) N'
//! ```
//!
//! with `b_ε = b − ∫_{|z|>ε} h(z) F(dz)`. Big jumps form a compound Poisson
//! sum, and jumps below `ε` are replaced by a Gaussian of matching variance
//! (or dropped). A [`ControlPolicy`] picks one vertex of the family box per
//! interval, so the law of every simulated path has characteristics in Θ.
//! The largest mean over a policy set is a statistical lower bound for
//! `sup_P E^P[ψ(x + X_T)]`.

mod policy;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use policy::{default_policy_set, ControlPolicy, FeedbackTable, PolicyChoice};

use crate::error::{Error, Result};
use crate::generator::SampledFunction;
use crate::levy::{LevyMeasure, LevyTriplet, TripletFamily, Truncation};
use crate::stats::mean_and_std_error;

/// Treatment of jumps inside `ε_sim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumps {
    #[default]
    Gaussian,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub eps_sim: f64,
    /// Sub-step; `None` means `min(interval length, T / 100)`.
    pub dt_sim: Option<f64>,
    pub small_jumps: SmallJumps,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { eps_sim: 1e-2, dt_sim: None, small_jumps: SmallJumps::Gaussian }
    }
}

#[derive(Debug, Clone)]
enum JumpSizes {
    None,
    Atoms { positions: Vec<f64>, index: WeightedIndex<f64> },
    Stable { alpha: f64, eps: f64, p_plus: f64 },
}

/// Pieces of one increment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    pub drift: f64,
    pub gaussian: f64,
    pub big_jumps: f64,
    pub n_jumps: u64,
    pub small_jumps: f64,
}

impl Increment {
    pub fn total(&self) -> f64 {
        self.drift + self.gaussian + self.big_jumps + self.small_jumps
    }

    fn accumulate(&mut self, other: &Increment) {
        self.drift += other.drift;
        self.gaussian += other.gaussian;
        self.big_jumps += other.big_jumps;
        self.n_jumps += other.n_jumps;
        self.small_jumps += other.small_jumps;
    }
}

/// Samples increments of one triplet.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    drift: f64,
    diffusion: f64,
    small_variance: f64,
    rate: f64,
    sizes: JumpSizes,
}

impl IncrementSampler {
    pub fn new(triplet: &LevyTriplet, h: Truncation, eps_sim: f64, mode: SmallJumps) -> Result<Self> {
        if !(eps_sim > 0.0) || !h.is_linear_on(eps_sim) {
            return Err(Error::InvalidParameter(format!(
                "ε_sim = {eps_sim} must be positive and inside the linear region of the truncation"
            )));
        }
        let m = &triplet.measure;
        let drift = triplet.drift - m.compensator_drift(h, eps_sim)?;
        let small_variance = match mode {
            SmallJumps::Gaussian => m.small_jump_second_moment(eps_sim),
            SmallJumps::Dropped => 0.0,
        };
        let rate = m.tail_intensity(eps_sim);
        let sizes = match m {
            LevyMeasure::Zero => JumpSizes::None,
            LevyMeasure::FiniteAtomic(atoms) => {
                let big: Vec<_> = atoms.iter().filter(|a| a.position.abs() > eps_sim && a.weight > 0.0).collect();
                if big.is_empty() {
                    JumpSizes::None
                } else {
                    JumpSizes::Atoms {
                        positions: big.iter().map(|a| a.position).collect(),
                        index: WeightedIndex::new(big.iter().map(|a| a.weight))
                            .map_err(|e| Error::InvalidParameter(e.to_string()))?,
                    }
                }
            }
            LevyMeasure::AlphaStable(p) if p.k_plus + p.k_minus > 0.0 => {
                JumpSizes::Stable { alpha: p.alpha, eps: eps_sim, p_plus: p.k_plus / (p.k_plus + p.k_minus) }
            }
            LevyMeasure::AlphaStable(_) => JumpSizes::None,
        };
        Ok(Self { drift, diffusion: triplet.diffusion, small_variance, rate, sizes })
    }

    /// Drift after removing the compensator of jumps beyond `ε_sim`.
    pub fn effective_drift(&self) -> f64 {
        self.drift
    }

    /// Mean number of big jumps per unit time.
    pub fn jump_rate(&self) -> f64 {
        self.rate
    }

    fn jump_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.sizes {
            JumpSizes::None => 0.0,
            JumpSizes::Atoms { positions, index } => positions[index.sample(rng)],
            JumpSizes::Stable { alpha, eps, p_plus } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                let r = eps * u.powf(-1.0 / alpha);
                if rng.random::<f64>() < *p_plus {
                    r
                } else {
                    -r
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Increment {
        let mut inc = Increment { drift: self.drift * dt, ..Default::default() };
        if self.diffusion > 0.0 {
            let n: f64 = rng.sample(StandardNormal);
            inc.gaussian = (self.diffusion * dt).sqrt() * n;
        }
        if self.rate > 0.0 {
            let count = Poisson::new(self.rate * dt).expect("positive Poisson mean").sample(rng) as u64;
            inc.n_jumps = count;
            for _ in 0..count {
                inc.big_jumps += self.jump_size(rng);
            }
        }
        if self.small_variance > 0.0 {
            let n: f64 = rng.sample(StandardNormal);
            inc.small_jumps = (self.small_variance * dt).sqrt() * n;
        }
        inc
    }
}

/// Total of one increment of `triplet` over `dt`.
pub fn sample_increment<R: Rng + ?Sized>(
    triplet: &LevyTriplet,
    h: Truncation,
    dt: f64,
    eps_sim: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    Ok(IncrementSampler::new(triplet, h, eps_sim, SmallJumps::Gaussian)?.sample(dt, rng).total())
}

/// One simulated path, summarized per policy interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub intervals: Vec<Increment>,
    /// Vertex used on each interval.
    pub vertices: Vec<usize>,
    pub terminal: f64,
    /// `max |X_u|` over the sub-step grid.
    pub sup_abs: f64,
}

/// Counter-based stream for path `index` of policy `policy_id`.
pub fn path_rng(seed: u64, policy_id: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(policy_id)));
    rng.set_stream(index);
    rng
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-vertex samplers for one family.
#[derive(Debug, Clone)]
pub struct FamilySampler {
    samplers: Vec<IncrementSampler>,
}

impl FamilySampler {
    pub fn new(theta: &TripletFamily, cfg: &SimConfig) -> Result<Self> {
        let samplers = theta
            .vertices()
            .iter()
            .map(|v| IncrementSampler::new(&v.triplet, theta.truncation, cfg.eps_sim, cfg.small_jumps))
            .collect::<Result<_>>()?;
        Ok(Self { samplers })
    }

    pub fn vertex(&self, id: usize) -> &IncrementSampler {
        &self.samplers[id]
    }
}

fn sub_steps(length: f64, dt_sim: f64) -> (usize, f64) {
    let n = (length / dt_sim * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (n, length / n as f64)
}

fn default_dt(policy: &ControlPolicy, cfg: &SimConfig) -> f64 {
    cfg.dt_sim.unwrap_or_else(|| {
        let shortest = policy.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        shortest.min(1e-2 * policy.horizon())
    })
}

/// Simulates one path from `x0`.
pub fn simulate_path(
    policy: &ControlPolicy,
    sampler: &FamilySampler,
    x0: f64,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> PathSample {
    let dt_sim = default_dt(policy, cfg);
    let mut x = x0;
    let mut sup_abs = x0.abs();
    let mut intervals = Vec::with_capacity(policy.choices.len());
    let mut vertices = Vec::with_capacity(policy.choices.len());
    for (j, w) in policy.breakpoints.windows(2).enumerate() {
        let vertex = policy.vertex_for(j, x);
        let s = sampler.vertex(vertex);
        let (n, h) = sub_steps(w[1] - w[0], dt_sim);
        let mut acc = Increment::default();
        for _ in 0..n {
            let inc = s.sample(h, rng);
            x += inc.total();
            sup_abs = sup_abs.max(x.abs());
            acc.accumulate(&inc);
        }
        intervals.push(acc);
        vertices.push(vertex);
    }
    PathSample { intervals, vertices, terminal: x, sup_abs }
}

/// Full path summaries, in path order; identical for any worker count.
pub fn simulate_paths(
    theta: &TripletFamily,
    policy: &ControlPolicy,
    x0: f64,
    n_paths: usize,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Vec<PathSample>> {
    policy.validate(theta)?;
    let sampler = FamilySampler::new(theta, cfg)?;
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(policy, &sampler, x0, cfg, &mut path_rng(seed, policy.id, i)))
        .collect())
}

/// Terminal values `X_T` of `n_paths` paths.
pub fn simulate_terminal(
    theta: &TripletFamily,
    policy: &ControlPolicy,
    x0: f64,
    n_paths: usize,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(simulate_paths(theta, policy, x0, n_paths, cfg, seed)?.into_iter().map(|p| p.terminal).collect())
}

/// One classical expectation `E^P[ψ(X_T)]` estimated from paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Starting state of the paths.
    pub x0: f64,
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub policy_id: u64,
    pub policy_label: String,
    pub rng_seed: u64,
}

impl McEstimate {
    pub fn from_values(x0: f64, values: &[f64], policy: &ControlPolicy, seed: u64) -> Self {
        let (mean, std_error) = mean_and_std_error(values);
        Self {
            x0,
            mean,
            std_error,
            n_paths: values.len(),
            policy_id: policy.id,
            policy_label: policy.label.clone(),
            rng_seed: seed,
        }
    }
}

/// Maximum Monte Carlo mean of `ψ(x0 + X_T)` over `policies`, with the full table.
pub fn worst_case_expectation(
    theta: &TripletFamily,
    psi: &SampledFunction,
    policies: &[ControlPolicy],
    x0: f64,
    n_paths: usize,
    cfg: &SimConfig,
    seed: u64,
) -> Result<(McEstimate, Vec<McEstimate>)> {
    if policies.is_empty() {
        return Err(Error::InvalidParameter("the policy set is empty".into()));
    }
    let horizon = policies[0].horizon();
    if policies.iter().any(|p| (p.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0)) {
        return Err(Error::InvalidParameter("policies must share one horizon".into()));
    }
    let mut all = Vec::with_capacity(policies.len());
    for policy in policies {
        let terminal = simulate_terminal(theta, policy, x0, n_paths, cfg, seed)?;
        let values: Vec<f64> = terminal.iter().map(|&x| psi.value(x)).collect();
        all.push(McEstimate::from_values(x0, &values, policy, seed));
    }
    let best = all
        .iter()
        .fold(None::<&McEstimate>, |b, e| match b {
            Some(b) if b.mean >= e.mean => Some(b),
            _ => Some(e),
        })
        .expect("nonempty")
        .clone();
    Ok((best, all))
}

/// Writes an estimate table as CSV.
pub fn write_estimates_csv<W: std::io::Write>(estimates: &[McEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in estimates {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_estimates_csv<R: std::io::Read>(input: R) -> Result<Vec<McEstimate>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
