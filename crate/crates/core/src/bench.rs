//! Experiments: cost scaling against the localist oracle, and the
//! similar-inputs-to-similar-codes run.
//!
//! Both experiments are batches of independent tasks (one per database size,
//! one per trial) and run through [`Exec`], so the parallel and sequential
//! paths give identical reports.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::coding_field::intersection;
pub use crate::cost::CostReport;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::memory::{Memory, ModelParams, SelectMode};
use crate::oracle::Registry;
use crate::pattern::BitPattern;
use crate::rng::SdrRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonLines,
}

pub trait Emit {
    fn emit(&self, format: Format) -> String;
}

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub active_bits: usize,
    pub pattern_seed: u64,
    /// Record wall-clock times. Off by default so reports are byte-stable.
    pub wall_clock: bool,
    pub exec: Exec,
}

impl ScalingConfig {
    pub fn new(sizes: Vec<usize>, active_bits: usize, pattern_seed: u64) -> Self {
        Self {
            sizes,
            active_bits,
            pattern_seed,
            wall_clock: false,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub stored_count: usize,
    pub sdr_store_cost: CostReport,
    pub sdr_query_cost: CostReport,
    pub localist_query_cost: CostReport,
    /// The SDR query collapsed onto the probe's stored code.
    pub sdr_hit: bool,
    /// The linear scan returned the probe's entry.
    pub localist_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
}

fn binomial_at_least(n: usize, k: usize, needed: usize) -> bool {
    // C(n, k) >= needed, computed with early exit to avoid overflow
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c >= needed as u128 {
            return true;
        }
    }
    c >= needed as u128
}

fn distinct_patterns(
    count: usize,
    width: usize,
    active: usize,
    rng: &mut SdrRng,
    exclude: &HashSet<BitPattern>,
) -> Result<Vec<BitPattern>> {
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = BitPattern::random(width, active, rng)?;
        if !exclude.contains(&p) && seen.insert(p.clone()) {
            out.push(p);
        }
    }
    Ok(out)
}

/// For each size, fills a fresh model and registry with that many random
/// patterns, then measures one SDR query (an exact probe of the first stored
/// pattern), one linear scan with the same probe, and one SDR store of an
/// unseen pattern.
pub fn run_scaling(params: &ModelParams, config: &ScalingConfig) -> Result<ScalingReport> {
    params.validate()?;
    let g = params.geometry;
    let sizes = &config.sizes;
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(
            "sizes must be nonempty, positive and strictly increasing".into(),
        ));
    }
    let largest = *sizes.last().unwrap();
    if config.active_bits > g.n_in()
        || !binomial_at_least(g.n_in(), config.active_bits, largest + 1)
    {
        return Err(Error::Generation(format!(
            "fewer than {} distinct patterns with {} of {} bits active",
            largest + 1,
            config.active_bits,
            g.n_in()
        )));
    }

    let patterns = distinct_patterns(
        largest,
        g.n_in(),
        config.active_bits,
        &mut SdrRng::substream(config.pattern_seed, 0),
        &HashSet::new(),
    )?;
    let stored: HashSet<BitPattern> = patterns.iter().cloned().collect();
    let unseen = distinct_patterns(
        1,
        g.n_in(),
        config.active_bits,
        &mut SdrRng::substream(config.pattern_seed, 1),
        &stored,
    )?
    .remove(0);

    let rows = config.exec.try_map(sizes.len(), |i| {
        let n = sizes[i];
        let mut model = Memory::new(*params)?;
        let mut registry = Registry::new(g);
        for (idx, p) in patterns[..n].iter().enumerate() {
            let code = model.store(p)?;
            registry.register(format!("p{idx}"), p.clone(), code)?;
        }
        let probe = &patterns[0];

        let before = model.counters();
        let recall = model.query(probe)?;
        let mut sdr_query_cost = model.counters().since(&before);

        let mut localist_query_cost = CostReport::default();
        let start = std::time::Instant::now();
        let scan = registry.linear_scan_best_match(probe, &mut localist_query_cost)?;
        localist_query_cost.wall_nanos = start.elapsed().as_nanos() as u64;

        let before = model.counters();
        model.store(&unseen)?;
        let mut sdr_store_cost = model.counters().since(&before);

        if !config.wall_clock {
            sdr_query_cost.wall_nanos = 0;
            sdr_store_cost.wall_nanos = 0;
            localist_query_cost.wall_nanos = 0;
        }
        Ok::<_, Error>(ScalingRow {
            stored_count: n,
            sdr_store_cost,
            sdr_query_cost,
            localist_query_cost,
            sdr_hit: recall.code == registry.entries()[0].code,
            localist_hit: scan.index == 0,
        })
    })?;
    Ok(ScalingReport { rows })
}

impl ScalingReport {
    /// `(a, b)` with `reads = a * stored_count + b` through the first two rows.
    pub fn localist_fit(&self) -> Option<(i128, i128)> {
        let [r0, r1, ..] = &self.rows[..] else {
            return self
                .rows
                .first()
                .map(|r| (0, r.localist_query_cost.weight_reads as i128));
        };
        let (n0, y0) = (
            r0.stored_count as i128,
            r0.localist_query_cost.weight_reads as i128,
        );
        let (n1, y1) = (
            r1.stored_count as i128,
            r1.localist_query_cost.weight_reads as i128,
        );
        let dy = y1 - y0;
        let dn = n1 - n0;
        if dy % dn != 0 {
            return None;
        }
        let a = dy / dn;
        Some((a, y0 - a * n0))
    }

    /// Checks the fixed-cost law: identical SDR store and query counts on every
    /// row, and localist reads exactly linear in the stored count.
    pub fn check(&self) -> std::result::Result<(), String> {
        let Some(first) = self.rows.first() else {
            return Ok(());
        };
        for row in &self.rows {
            if row.sdr_query_cost.counts() != first.sdr_query_cost.counts() {
                return Err(format!(
                    "SDR query counts differ: {:?} at n={} vs {:?} at n={}",
                    row.sdr_query_cost.counts(),
                    row.stored_count,
                    first.sdr_query_cost.counts(),
                    first.stored_count
                ));
            }
            if row.sdr_store_cost.counts() != first.sdr_store_cost.counts() {
                return Err(format!(
                    "SDR store counts differ: {:?} at n={} vs {:?} at n={}",
                    row.sdr_store_cost.counts(),
                    row.stored_count,
                    first.sdr_store_cost.counts(),
                    first.stored_count
                ));
            }
        }
        let (a, b) = self
            .localist_fit()
            .ok_or_else(|| "localist reads are not an integer-slope line".to_string())?;
        for row in &self.rows {
            let expect = a * row.stored_count as i128 + b;
            if row.localist_query_cost.weight_reads as i128 != expect {
                return Err(format!(
                    "localist reads {} at n={} off the line {a}*n+{b}",
                    row.localist_query_cost.weight_reads, row.stored_count
                ));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ScalingRecord {
    stored_count: usize,
    sdr_store_reads: u64,
    sdr_store_writes: u64,
    sdr_query_reads: u64,
    sdr_query_comparisons: u64,
    sdr_query_rng: u64,
    localist_reads: u64,
    wall_nanos_sdr: u64,
    wall_nanos_localist: u64,
}

const SCALING_HEADER: &str = "stored_count,sdr_store_reads,sdr_store_writes,sdr_query_reads,\
sdr_query_comparisons,sdr_query_rng,localist_reads,wall_nanos_sdr,wall_nanos_localist";

impl From<&ScalingRow> for ScalingRecord {
    fn from(r: &ScalingRow) -> Self {
        Self {
            stored_count: r.stored_count,
            sdr_store_reads: r.sdr_store_cost.weight_reads,
            sdr_store_writes: r.sdr_store_cost.weight_writes,
            sdr_query_reads: r.sdr_query_cost.weight_reads,
            sdr_query_comparisons: r.sdr_query_cost.comparisons,
            sdr_query_rng: r.sdr_query_cost.rng_draws,
            localist_reads: r.localist_query_cost.weight_reads,
            wall_nanos_sdr: r.sdr_query_cost.wall_nanos,
            wall_nanos_localist: r.localist_query_cost.wall_nanos,
        }
    }
}

impl Emit for ScalingReport {
    fn emit(&self, format: Format) -> String {
        let records: Vec<ScalingRecord> = self.rows.iter().map(Into::into).collect();
        match format {
            Format::Csv => {
                let mut out = format!("{SCALING_HEADER}\n");
                for r in &records {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        r.stored_count,
                        r.sdr_store_reads,
                        r.sdr_store_writes,
                        r.sdr_query_reads,
                        r.sdr_query_comparisons,
                        r.sdr_query_rng,
                        r.localist_reads,
                        r.wall_nanos_sdr,
                        r.wall_nanos_localist
                    );
                }
                out
            }
            Format::JsonLines => json_lines(&records),
        }
    }
}

fn json_lines<T: Serialize>(records: &[T]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("plain records serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone)]
pub struct SiscConfig {
    pub levels: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub active_bits: usize,
    pub exec: Exec,
}

impl SiscConfig {
    pub const DEFAULT_LEVELS: [f64; 6] = [1.0, 0.8, 0.6, 0.4, 0.2, 0.0];

    pub fn new(trials: usize, seed: u64, active_bits: usize) -> Self {
        Self {
            levels: Self::DEFAULT_LEVELS.to_vec(),
            trials,
            seed,
            active_bits,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiscRow {
    pub input_overlap: f64,
    pub trials: usize,
    pub mean_code_intersection: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiscReport {
    pub rows: Vec<SiscRow>,
    pub spearman_rho: f64,
    /// Code intersections per level, one per trial.
    pub samples: Vec<Vec<usize>>,
}

/// Per trial: a fresh model stores a random base pattern, then for each level
/// a perturbation sharing exactly that fraction of the base's active bits is
/// presented (stochastic selection, no learning) and its code's intersection
/// with the base code recorded.
pub fn run_sisc(params: &ModelParams, config: &SiscConfig) -> Result<SiscReport> {
    params.validate()?;
    let g = params.geometry;
    if config.trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let a = config.active_bits;
    if a > g.n_in() {
        return Err(Error::Generation(format!(
            "{a} active bits exceed n_in={}",
            g.n_in()
        )));
    }
    let mut shared = Vec::with_capacity(config.levels.len());
    for &level in &config.levels {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::InvalidParams(format!(
                "overlap level {level} outside [0, 1]"
            )));
        }
        let exact = level * a as f64;
        if (exact - exact.round()).abs() > 1e-9 {
            return Err(Error::Generation(format!(
                "overlap {level} is not attainable with {a} active bits"
            )));
        }
        let keep = exact.round() as usize;
        if a - keep > g.n_in() - a {
            return Err(Error::Generation(format!(
                "overlap {level} needs {} free positions, only {} exist",
                a - keep,
                g.n_in() - a
            )));
        }
        shared.push(keep);
    }

    let per_trial = config.exec.try_map(config.trials, |t| {
        let mut rng = SdrRng::substream(config.seed, t as u64);
        let mut model = Memory::new(params.with_seed(rng.next_u64()))?;
        let base = BitPattern::random(g.n_in(), a, &mut rng)?;
        let base_code = model.store(&base)?;
        shared
            .iter()
            .map(|&keep| {
                let probe = base.perturb(keep, &mut rng)?;
                let act = model.summate(&probe, false)?;
                let code = model.select_code(&act, SelectMode::Stochastic);
                intersection(&code, &base_code)
            })
            .collect::<Result<Vec<usize>>>()
    })?;

    let samples = (0..shared.len())
        .map(|l| per_trial.iter().map(|trial| trial[l]).collect())
        .collect();
    Ok(SiscReport::from_samples(&config.levels, samples))
}

impl SiscReport {
    pub fn from_samples(levels: &[f64], samples: Vec<Vec<usize>>) -> Self {
        let rows: Vec<SiscRow> = levels
            .iter()
            .zip(&samples)
            .map(|(&level, xs)| {
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<usize>() as f64 / n;
                let var = if xs.len() > 1 {
                    xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                SiscRow {
                    input_overlap: level,
                    trials: xs.len(),
                    mean_code_intersection: mean,
                    std: var.sqrt(),
                }
            })
            .collect();
        let xs: Vec<f64> = rows.iter().map(|r| r.input_overlap).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_code_intersection).collect();
        Self {
            spearman_rho: spearman(&xs, &ys),
            rows,
            samples,
        }
    }

    /// Pools reports over the same levels, e.g. one per seed.
    pub fn pool(reports: &[SiscReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::InvalidParams("nothing to pool".into()))?;
        let levels: Vec<f64> = first.rows.iter().map(|r| r.input_overlap).collect();
        let mut samples = vec![Vec::new(); levels.len()];
        for rep in reports {
            let these: Vec<f64> = rep.rows.iter().map(|r| r.input_overlap).collect();
            if these != levels {
                return Err(Error::InvalidParams("reports use different levels".into()));
            }
            for (acc, xs) in samples.iter_mut().zip(&rep.samples) {
                acc.extend_from_slice(xs);
            }
        }
        Ok(Self::from_samples(&levels, samples))
    }

    pub fn check(&self, min_rho: f64) -> std::result::Result<(), String> {
        if self.spearman_rho >= min_rho {
            Ok(())
        } else {
            Err(format!(
                "spearman rho {} below {min_rho}",
                self.spearman_rho
            ))
        }
    }
}

#[derive(Serialize)]
struct SiscRecord<'a> {
    #[serde(flatten)]
    row: &'a SiscRow,
    spearman_rho: f64,
}

impl Emit for SiscReport {
    fn emit(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out =
                    String::from("input_overlap,trials,mean_code_intersection,std,spearman_rho\n");
                for r in &self.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.input_overlap,
                        r.trials,
                        r.mean_code_intersection,
                        r.std,
                        self.spearman_rho
                    );
                }
                out
            }
            Format::JsonLines => {
                let records: Vec<SiscRecord> = self
                    .rows
                    .iter()
                    .map(|row| SiscRecord {
                        row,
                        spearman_rho: self.spearman_rho,
                    })
                    .collect();
                json_lines(&records)
            }
        }
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; 0 when either side has no spread.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}
