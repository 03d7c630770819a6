//! The associative memory: weight matrices, code selection, Hebbian storage,
//! fixed-cost recall and recurrent evolution.
//!
//! Three weight matrices connect to the coding field:
//!
//! * `F` (`n_in x units`, binary): input field to coding field.
//! * `H` (`units x units`, counts): coding field at `t` to itself at `t + 1`.
//! * `D` (`units x n_out`, binary): coding field to output field.
//!
//! Code selection works cluster by cluster on the normalized summation
//! `u / divisor`, where the divisor is the number of active input bits plus
//! `q` when a previous code drives the field through `H` (each of its winners
//! contributes at most one). The per-cluster maxima average to the familiarity
//! `G`. Storage samples each cluster's winner from a softmax whose temperature
//! falls linearly from `tau_max` at `G = 0` to `tau_min` at `G = 1`: novel
//! inputs get fresh random codes and familiar ones re-evoke the code they were
//! stored with, with similar inputs landing in between. Every step touches the whole field, so the operation count is a
//! function of the geometry and the input alone.

use std::time::Instant;

use crate::coding_field::{Code, FieldGeometry};
use crate::cost::CostReport;
use crate::error::{Error, Result};
use crate::pattern::BitPattern;
use crate::rng::SdrRng;

pub const DEFAULT_TAU_MIN: f64 = 0.05;
pub const DEFAULT_TAU_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub geometry: FieldGeometry,
    /// Softmax temperature at full familiarity.
    pub tau_min: f64,
    /// Softmax temperature at zero familiarity.
    pub tau_max: f64,
    pub seed: u64,
    /// Minimum number of winners that must vote for an output bit.
    pub readout_threshold: usize,
}

impl ModelParams {
    /// Default temperatures and a majority (`ceil(q / 2)`) readout threshold.
    pub fn new(geometry: FieldGeometry, seed: u64) -> Self {
        Self {
            geometry,
            tau_min: DEFAULT_TAU_MIN,
            tau_max: DEFAULT_TAU_MAX,
            seed,
            readout_threshold: geometry.q().div_ceil(2),
        }
    }

    pub fn with_temperatures(mut self, tau_min: f64, tau_max: f64) -> Self {
        self.tau_min = tau_min;
        self.tau_max = tau_max;
        self
    }

    pub fn with_readout_threshold(mut self, threshold: usize) -> Self {
        self.readout_threshold = threshold;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.tau_min.is_finite() && self.tau_max.is_finite();
        if !(finite && 0.0 < self.tau_min && self.tau_min < self.tau_max) {
            return Err(Error::InvalidParams(format!(
                "need 0 < tau_min < tau_max, got tau_min={} tau_max={}",
                self.tau_min, self.tau_max
            )));
        }
        if self.readout_threshold == 0 || self.readout_threshold > self.geometry.q() {
            return Err(Error::InvalidParams(format!(
                "readout threshold {} outside 1..={}",
                self.readout_threshold,
                self.geometry.q()
            )));
        }
        Ok(())
    }

    /// `tau(G) = tau_min + (1 - G) * (tau_max - tau_min)`.
    pub fn temperature(&self, familiarity: f64) -> f64 {
        self.tau_min + (1.0 - familiarity) * (self.tau_max - self.tau_min)
    }
}

/// How a winner is chosen within each cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    /// Softmax over the normalized summation at temperature `tau(G)`.
    Stochastic,
    /// Highest summation; ties broken by the seeded generator.
    Argmax,
    /// Probability proportional to the raw summation, uniform when the
    /// cluster receives no input. Used to sample recurrent transitions.
    Proportional,
}

/// Summation field over the coding units.
#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    k: usize,
    raw: Vec<u64>,
    divisor: u64,
    cluster_max_raw: Vec<u64>,
}

impl Activation {
    fn new(k: usize, raw: Vec<u64>, divisor: u64, cost: &mut CostReport) -> Self {
        let cluster_max_raw: Vec<u64> = raw
            .chunks(k)
            .map(|cluster| cluster.iter().copied().max().unwrap_or(0))
            .collect();
        cost.comparisons += (cluster_max_raw.len() * (k - 1)) as u64;
        Self {
            k,
            raw,
            divisor: divisor.max(1),
            cluster_max_raw,
        }
    }

    /// Per-unit input sums `u`.
    pub fn raw(&self) -> &[u64] {
        &self.raw
    }

    pub fn divisor(&self) -> u64 {
        self.divisor
    }

    /// Per-unit `u / divisor`, in `[0, 1]`.
    pub fn normalized(&self) -> Vec<f64> {
        self.raw
            .iter()
            .map(|&u| u as f64 / self.divisor as f64)
            .collect()
    }

    /// Per-cluster maximum of the normalized summation.
    pub fn cluster_max(&self) -> Vec<f64> {
        self.cluster_max_raw
            .iter()
            .map(|&m| m as f64 / self.divisor as f64)
            .collect()
    }

    /// `G`, the mean of the cluster maxima.
    pub fn familiarity(&self) -> f64 {
        let total: u64 = self.cluster_max_raw.iter().sum();
        total as f64 / (self.cluster_max_raw.len() as f64 * self.divisor as f64)
    }

    /// Mean normalized summation over `code`'s units: the strength with which
    /// this field expresses that code.
    pub fn implied_strength(&self, code: &Code) -> f64 {
        let support: u64 = code.units().map(|u| self.raw[u]).sum();
        support as f64 / (code.q() as f64 * self.divisor as f64)
    }

    fn clusters(&self) -> usize {
        self.cluster_max_raw.len()
    }
}

/// Result of a recall: the collapsed code, its readout and the match
/// confidence `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recall {
    pub code: Code,
    pub output: BitPattern,
    pub familiarity: f64,
}

/// Result of a learning event.
#[derive(Debug, Clone, PartialEq)]
pub struct Learned {
    pub code: Code,
    /// Familiarity of the input before it was learned.
    pub familiarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Memory {
    pub(crate) params: ModelParams,
    pub(crate) f: Vec<u8>,
    pub(crate) h: Vec<u32>,
    pub(crate) d: Vec<u8>,
    pub(crate) active: Option<Code>,
    pub(crate) rng: SdrRng,
    counters: CostReport,
}

impl Memory {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let g = params.geometry;
        Ok(Self {
            params,
            f: vec![0; g.n_in() * g.units()],
            h: vec![0; g.units() * g.units()],
            d: vec![0; g.units() * g.n_out()],
            active: None,
            rng: SdrRng::new(params.seed),
            counters: CostReport::default(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn geometry(&self) -> &FieldGeometry {
        &self.params.geometry
    }

    /// Operations accumulated by mutating calls since construction or the
    /// last [`Memory::reset_counters`].
    pub fn counters(&self) -> CostReport {
        self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = CostReport::default();
    }

    pub fn active(&self) -> Option<&Code> {
        self.active.as_ref()
    }

    pub fn f_weight(&self, input_bit: usize, unit: usize) -> bool {
        self.f[input_bit * self.geometry().units() + unit] != 0
    }

    pub fn h_weight(&self, from: usize, to: usize) -> u32 {
        self.h[from * self.geometry().units() + to]
    }

    pub fn d_weight(&self, unit: usize, output_bit: usize) -> bool {
        self.d[unit * self.geometry().n_out() + output_bit] != 0
    }

    /// Nonzero entries of `(F, H, D)`.
    pub fn nonzero_weights(&self) -> (usize, usize, usize) {
        (
            self.f.iter().filter(|&&w| w != 0).count(),
            self.h.iter().filter(|&&w| w != 0).count(),
            self.d.iter().filter(|&&w| w != 0).count(),
        )
    }

    /// Makes `code` the single fully active code.
    pub fn set_active(&mut self, code: Code) -> Result<()> {
        code.check_geometry(self.geometry())?;
        self.active = Some(code);
        Ok(())
    }

    pub fn clear_active(&mut self) {
        self.active = None;
    }

    /// Bottom-up summation of `input`, plus recurrent input from the active
    /// code when `recurrent` is set and a code is active.
    pub fn summate(&mut self, input: &BitPattern, recurrent: bool) -> Result<Activation> {
        let mut cost = CostReport::default();
        let act = self.summate_with(input, recurrent, &mut cost)?;
        self.counters += cost;
        Ok(act)
    }

    /// Read-only [`Memory::summate`] reporting into a caller-owned accumulator.
    pub fn summate_with(
        &self,
        input: &BitPattern,
        recurrent: bool,
        cost: &mut CostReport,
    ) -> Result<Activation> {
        input.check_width(self.geometry().n_in())?;
        let prev = if recurrent {
            self.active.as_ref()
        } else {
            None
        };
        Ok(self.summation(Some(input), prev, false, cost))
    }

    /// With `prev`, each of its winners adds its `H` row. Learning and
    /// `summate` read a row as binary (transition learned or not), so the
    /// recurrent part is at most `q` and the divisor gains exactly `q`. Steps
    /// weight by presentation count and normalize by the strongest drive any
    /// unit receives.
    fn summation(
        &self,
        input: Option<&BitPattern>,
        prev: Option<&Code>,
        weighted: bool,
        cost: &mut CostReport,
    ) -> Activation {
        let g = self.geometry();
        let units = g.units();
        let mut raw = vec![0u64; units];
        let mut divisor = 0u64;

        if let Some(x) = input {
            for (j, row) in self.f.chunks_exact(units).enumerate() {
                let xj = x.get(j) as u64;
                divisor += xj;
                for (u, &w) in raw.iter_mut().zip(row) {
                    *u += w as u64 * xj;
                }
            }
            cost.weight_reads += (g.n_in() * units) as u64;
        }

        if let Some(code) = prev {
            let mut recurrent = vec![0u64; units];
            for from in code.units() {
                let row = &self.h[from * units..(from + 1) * units];
                for (r, &w) in recurrent.iter_mut().zip(row) {
                    *r += if weighted { w as u64 } else { (w > 0) as u64 };
                }
            }
            cost.weight_reads += (g.q() * units) as u64;
            divisor += if weighted {
                recurrent.iter().copied().max().unwrap_or(0)
            } else {
                g.q() as u64
            };
            for (u, r) in raw.iter_mut().zip(recurrent) {
                *u += r;
            }
        }

        Activation::new(g.k(), raw, divisor, cost)
    }

    /// Chooses one winner per cluster from `act` using the model's generator.
    pub fn select_code(&mut self, act: &Activation, mode: SelectMode) -> Code {
        let mut cost = CostReport::default();
        let code = select(&self.params, act, mode, &mut self.rng, &mut cost);
        self.counters += cost;
        code
    }

    /// Learns `input` as a standalone item and returns its code. When the input
    /// and output fields have the same width the input doubles as the output
    /// pattern, so recall reads the stored item back out through `D`.
    pub fn store(&mut self, input: &BitPattern) -> Result<Code> {
        let output = self.autoassociative(input);
        self.learn(input, output.as_ref(), false).map(|l| l.code)
    }

    /// One learning event: summate, select stochastically, then OR the
    /// input-to-winner (`F`) and winner-to-output (`D`) weights. With
    /// `recurrent` set and a code active, the summation includes that code's
    /// `H` input and each previous-winner-to-new-winner `H` count is
    /// incremented.
    pub fn learn(
        &mut self,
        input: &BitPattern,
        output: Option<&BitPattern>,
        recurrent: bool,
    ) -> Result<Learned> {
        input.check_width(self.geometry().n_in())?;
        if let Some(out) = output {
            out.check_width(self.geometry().n_out())?;
        }
        let start = Instant::now();
        let mut cost = CostReport::default();
        let prev = if recurrent { self.active.take() } else { None };

        let act = self.summation(Some(input), prev.as_ref(), false, &mut cost);
        let code = select(
            &self.params,
            &act,
            SelectMode::Stochastic,
            &mut self.rng,
            &mut cost,
        );

        let units = self.geometry().units();
        for j in input.active_indices() {
            for i in code.units() {
                set_bit(&mut self.f[j * units + i], &mut cost);
            }
        }
        if let Some(prev) = &prev {
            for from in prev.units() {
                for to in code.units() {
                    let w = &mut self.h[from * units + to];
                    if *w == 0 {
                        cost.new_weights += 1;
                    }
                    *w = w.saturating_add(1);
                    cost.weight_writes += 1;
                }
            }
        }
        if let Some(out) = output {
            let n_out = self.geometry().n_out();
            for i in code.units() {
                for j in out.active_indices() {
                    set_bit(&mut self.d[i * n_out + j], &mut cost);
                }
            }
        }

        self.active = Some(code.clone());
        cost.wall_nanos = start.elapsed().as_nanos() as u64;
        self.counters += cost;
        Ok(Learned {
            code,
            familiarity: act.familiarity(),
        })
    }

    /// Best-match recall of `input` without learning. The recalled code
    /// becomes the active code.
    pub fn query(&mut self, input: &BitPattern) -> Result<Recall> {
        let mut cost = CostReport::default();
        let mut rng = std::mem::replace(&mut self.rng, SdrRng::new(0));
        let recall = self.recall(input, &mut rng, &mut cost);
        self.rng = rng;
        let recall = recall?;
        self.active = Some(recall.code.clone());
        self.counters += cost;
        Ok(recall)
    }

    /// Read-only [`Memory::query`]: tie-breaks draw from `rng`, costs go to
    /// `cost`, and the model is left untouched.
    pub fn recall(
        &self,
        input: &BitPattern,
        rng: &mut SdrRng,
        cost: &mut CostReport,
    ) -> Result<Recall> {
        input.check_width(self.geometry().n_in())?;
        let start = Instant::now();
        let act = self.summation(Some(input), None, false, cost);
        let code = select(&self.params, &act, SelectMode::Argmax, rng, cost);
        let output = self.readout(&code, cost);
        cost.wall_nanos += start.elapsed().as_nanos() as u64;
        Ok(Recall {
            code,
            output,
            familiarity: act.familiarity(),
        })
    }

    /// Output bit `j` is on when at least `readout_threshold` of the code's
    /// winners connect to it through `D`.
    pub fn readout(&self, code: &Code, cost: &mut CostReport) -> BitPattern {
        let n_out = self.geometry().n_out();
        let mut votes = vec![0usize; n_out];
        for i in code.units() {
            for (v, &w) in votes.iter_mut().zip(&self.d[i * n_out..(i + 1) * n_out]) {
                *v += w as usize;
            }
        }
        cost.weight_reads += (code.q() * n_out) as u64;
        let threshold = self.params.readout_threshold;
        BitPattern::from_bits(votes.into_iter().map(|v| v >= threshold).collect())
    }

    /// Advances one time step using `H` alone: the active code's recurrent
    /// input, weighted by how often each transition was learned, selects the
    /// next code, which replaces it and is read out.
    pub fn step(&mut self, mode: SelectMode) -> Result<Recall> {
        let current = self.active.clone().ok_or(Error::NoActiveState)?;
        let start = Instant::now();
        let mut cost = CostReport::default();
        let act = self.summation(None, Some(&current), true, &mut cost);
        let code = select(&self.params, &act, mode, &mut self.rng, &mut cost);
        let output = self.readout(&code, &mut cost);
        self.active = Some(code.clone());
        cost.wall_nanos = start.elapsed().as_nanos() as u64;
        self.counters += cost;
        Ok(Recall {
            code,
            output,
            familiarity: act.familiarity(),
        })
    }

    /// Learns `items` as a temporal sequence, wiring `H` from each item's
    /// code to its successor's. The sequence starts from no active code.
    pub fn learn_sequence(&mut self, items: &[BitPattern]) -> Result<Vec<Code>> {
        if items.is_empty() {
            return Err(Error::InvalidParams("empty sequence".into()));
        }
        for item in items {
            item.check_width(self.geometry().n_in())?;
        }
        self.active = None;
        items
            .iter()
            .map(|item| {
                let output = self.autoassociative(item);
                self.learn(item, output.as_ref(), true).map(|l| l.code)
            })
            .collect()
    }

    /// The single fully active code.
    pub fn collapse(&self) -> Result<Code> {
        self.active.clone().ok_or(Error::NoActiveState)
    }

    /// The active code as a field over all units (1 on its winners). Any
    /// stored code's strength is its [`Activation::implied_strength`] here,
    /// which equals its intersection with the active code over `q`.
    pub fn current_superposition_inputs(&self) -> Activation {
        let g = self.geometry();
        let mut raw = vec![0u64; g.units()];
        if let Some(code) = &self.active {
            for u in code.units() {
                raw[u] = 1;
            }
        }
        Activation::new(g.k(), raw, 1, &mut CostReport::default())
    }

    fn autoassociative(&self, input: &BitPattern) -> Option<BitPattern> {
        (self.geometry().n_in() == self.geometry().n_out()).then(|| input.clone())
    }
}

fn set_bit(w: &mut u8, cost: &mut CostReport) {
    if *w == 0 {
        *w = 1;
        cost.new_weights += 1;
    }
    cost.weight_writes += 1;
}

/// Per-cluster winner selection. Every mode scans all `k` units of every
/// cluster and draws exactly one random value per cluster, so the cost does
/// not depend on the summation values.
fn select(
    params: &ModelParams,
    act: &Activation,
    mode: SelectMode,
    rng: &mut SdrRng,
    cost: &mut CostReport,
) -> Code {
    let k = act.k;
    let tau = params.temperature(act.familiarity());
    let mut winners = Vec::with_capacity(act.clusters());
    let mut weights = vec![0f64; k];

    for (c, cluster) in act.raw.chunks_exact(k).enumerate() {
        let r = rng.unit();
        cost.rng_draws += 1;
        cost.comparisons += k as u64;
        let best = act.cluster_max_raw[c];
        let winner = match mode {
            SelectMode::Argmax => {
                let ties = cluster.iter().filter(|&&u| u == best).count();
                let pick = ((r * ties as f64) as usize).min(ties - 1);
                cluster
                    .iter()
                    .enumerate()
                    .filter(|(_, &u)| u == best)
                    .nth(pick)
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            }
            SelectMode::Stochastic => {
                let divisor = act.divisor as f64;
                let top = best as f64 / divisor;
                for (w, &u) in weights.iter_mut().zip(cluster) {
                    *w = ((u as f64 / divisor - top) / tau).exp();
                }
                sample(&weights, r)
            }
            SelectMode::Proportional => {
                let total: u64 = cluster.iter().sum();
                for (w, &u) in weights.iter_mut().zip(cluster) {
                    *w = if total == 0 { 1.0 } else { u as f64 };
                }
                sample(&weights, r)
            }
        };
        winners.push(winner as u32);
    }
    Code::new(k, winners).expect("winners are in range by construction")
}

/// Inverse-CDF draw from unnormalized `weights` with `r` in `[0, 1)`.
fn sample(weights: &[f64], r: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = r * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}
