//! Localist reference: one slot per stored state.
//!
//! The registry keeps every stored input and its code side by side and answers
//! best-match queries by scanning all of them, so its cost grows linearly with
//! the number of entries. [`ExplicitSuperposition`] holds one explicit
//! coefficient per state, and [`evolve_explicit`] advances it with a Markov
//! step over counted transitions. These are the yardsticks the memory's
//! implicit, intersection-based representation is checked against.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::coding_field::{likelihood, Code, FieldGeometry, Likelihood};
use crate::cost::CostReport;
use crate::error::{Error, Result};
use crate::pattern::BitPattern;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub label: String,
    pub input: BitPattern,
    pub code: Code,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    geometry: FieldGeometry,
    entries: Vec<Entry>,
    index: HashMap<String, usize>,
}

/// Outcome of a linear scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanMatch {
    pub label: String,
    pub index: usize,
    /// Jaccard overlap `|query AND input| / |query OR input|`.
    pub similarity: f64,
    /// Another entry reached the same similarity; the earliest one is reported.
    pub tie: bool,
}

impl Registry {
    pub fn new(geometry: FieldGeometry) -> Self {
        Self {
            geometry,
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn geometry(&self) -> &FieldGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, label: &str) -> Option<&Entry> {
        self.index.get(label).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn register(
        &mut self,
        label: impl Into<String>,
        input: BitPattern,
        code: Code,
    ) -> Result<()> {
        let label = label.into();
        if self.index.contains_key(&label) {
            return Err(Error::DuplicateLabel(label));
        }
        if label.contains(['\t', '\n']) {
            return Err(Error::Parse(format!(
                "label {label:?} contains a tab or newline"
            )));
        }
        input.check_width(self.geometry.n_in())?;
        code.check_geometry(&self.geometry)?;
        self.index.insert(label.clone(), self.entries.len());
        self.entries.push(Entry { label, input, code });
        Ok(())
    }

    /// Label of the first entry whose code equals `code`.
    pub fn label_of_code(&self, code: &Code) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| &e.code == code)
            .map(|e| e.label.as_str())
    }

    /// The entry whose code is most likely under `active`, i.e. the peak of
    /// the strength field. `None` when empty or when the peak is shared.
    pub fn decode(&self, active: &Code) -> Result<Option<(&str, Likelihood)>> {
        active.check_geometry(&self.geometry)?;
        let mut best: Option<(&Entry, Likelihood)> = None;
        let mut tie = false;
        for e in &self.entries {
            let l = likelihood(&e.code, active)?;
            match &best {
                Some((_, top)) if l < *top => {}
                Some((_, top)) if l == *top => tie = true,
                _ => {
                    best = Some((e, l));
                    tie = false;
                }
            }
        }
        Ok(best.filter(|_| !tie).map(|(e, l)| (e.label.as_str(), l)))
    }

    /// Compares `query` against every stored input. Each entry costs `n_in`
    /// reads and one comparison.
    pub fn linear_scan_best_match(
        &self,
        query: &BitPattern,
        cost: &mut CostReport,
    ) -> Result<ScanMatch> {
        query.check_width(self.geometry.n_in())?;
        if self.entries.is_empty() {
            return Err(Error::EmptyRegistry);
        }
        let mut best: Option<(usize, (u64, u64))> = None;
        let mut tie = false;
        for (i, e) in self.entries.iter().enumerate() {
            let sim = jaccard(query, &e.input);
            cost.weight_reads += self.geometry.n_in() as u64;
            cost.comparisons += 1;
            match best {
                None => best = Some((i, sim)),
                Some((_, top)) => match cmp_ratio(sim, top) {
                    std::cmp::Ordering::Greater => {
                        best = Some((i, sim));
                        tie = false;
                    }
                    std::cmp::Ordering::Equal => tie = true,
                    std::cmp::Ordering::Less => {}
                },
            }
        }
        let (index, (num, den)) = best.expect("registry is nonempty");
        Ok(ScanMatch {
            label: self.entries[index].label.clone(),
            index,
            similarity: num as f64 / den as f64,
            tie,
        })
    }

    /// Exact strength of every entry while `active` is fully active.
    pub fn strengths(&self, active: &Code) -> Result<Vec<(String, Likelihood)>> {
        active.check_geometry(&self.geometry)?;
        self.entries
            .iter()
            .map(|e| Ok((e.label.clone(), likelihood(&e.code, active)?)))
            .collect()
    }

    /// One explicit coefficient per entry: its likelihood under `active`.
    pub fn superposition_from_code(&self, active: &Code) -> Result<ExplicitSuperposition> {
        let coeffs = self
            .strengths(active)?
            .into_iter()
            .map(|(label, l)| (label, l.as_f64()))
            .collect();
        Ok(ExplicitSuperposition { coeffs })
    }

    /// `label <tab> bits <tab> code` per entry.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{}\t{}\t{}", e.label, e.input, e.code);
        }
        out
    }

    pub fn parse_dump(text: &str, geometry: FieldGeometry) -> Result<Self> {
        let mut registry = Registry::new(geometry);
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let [label, bits, code] = parts[..] else {
                return Err(Error::Parse(format!(
                    "registry line {}: expected 3 fields",
                    n + 1
                )));
            };
            registry.register(
                label,
                BitPattern::parse(bits)?,
                Code::parse(code, geometry.k())?,
            )?;
        }
        Ok(registry)
    }
}

fn jaccard(a: &BitPattern, b: &BitPattern) -> (u64, u64) {
    let union = a.union(b) as u64;
    if union == 0 {
        // two empty patterns are identical
        return (1, 1);
    }
    (a.overlap(b) as u64, union)
}

fn cmp_ratio(a: (u64, u64), b: (u64, u64)) -> std::cmp::Ordering {
    (a.0 * b.1).cmp(&(b.0 * a.1))
}

/// Explicit per-state coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExplicitSuperposition {
    coeffs: Vec<(String, f64)>,
}

impl ExplicitSuperposition {
    pub fn new(coeffs: Vec<(String, f64)>) -> Result<Self> {
        if let Some((label, c)) = coeffs.iter().find(|(_, c)| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidParams(format!(
                "coefficient {c} for `{label}`"
            )));
        }
        Ok(Self { coeffs })
    }

    /// All mass on `label`.
    pub fn point(label: impl Into<String>) -> Self {
        Self {
            coeffs: vec![(label.into(), 1.0)],
        }
    }

    pub fn coeffs(&self) -> &[(String, f64)] {
        &self.coeffs
    }

    pub fn get(&self, label: &str) -> f64 {
        self.coeffs
            .iter()
            .find(|(l, _)| l == label)
            .map_or(0.0, |(_, c)| *c)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.coeffs.iter().map(|(_, c)| c).sum()
    }

    /// Coefficients scaled to sum to 1; unchanged when the total is zero.
    pub fn normalized(&self) -> Vec<(String, f64)> {
        let total = self.total();
        self.coeffs
            .iter()
            .map(|(l, c)| (l.clone(), if total > 0.0 { c / total } else { *c }))
            .collect()
    }

    /// Labels ordered by decreasing coefficient; equal coefficients keep
    /// registration order.
    pub fn ranking(&self) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.coeffs.len()).collect();
        idx.sort_by(|&a, &b| self.coeffs[b].1.total_cmp(&self.coeffs[a].1));
        idx.into_iter().map(|i| self.coeffs[i].0.as_str()).collect()
    }
}

/// Transition counts between registered labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransitionTable {
    counts: BTreeMap<(String, String), u64>,
}

impl TransitionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, registry: &Registry, from: &str, to: &str) -> Result<()> {
        self.add(registry, from, to, 1)
    }

    pub fn add(&mut self, registry: &Registry, from: &str, to: &str, n: u64) -> Result<()> {
        for label in [from, to] {
            if !registry.contains(label) {
                return Err(Error::UnknownLabel(label.to_string()));
            }
        }
        *self
            .counts
            .entry((from.to_string(), to.to_string()))
            .or_default() += n;
        Ok(())
    }

    pub fn count(&self, from: &str, to: &str) -> u64 {
        self.counts
            .get(&(from.to_string(), to.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn row_total(&self, from: &str) -> u64 {
        self.counts
            .iter()
            .filter(|((f, _), _)| f == from)
            .map(|(_, &n)| n)
            .sum()
    }
}

/// One Markov step: `c'[B] = sum_A c[A] * count(A->B) / row_total(A)`,
/// renormalized. States without outgoing transitions pass on no mass.
pub fn evolve_explicit(
    superposition: &ExplicitSuperposition,
    table: &TransitionTable,
) -> ExplicitSuperposition {
    let mut labels: Vec<String> = superposition
        .coeffs
        .iter()
        .map(|(l, _)| l.clone())
        .collect();
    for (_, to) in table.counts.keys() {
        if !labels.contains(to) {
            labels.push(to.clone());
        }
    }
    let mut next: Vec<f64> = vec![0.0; labels.len()];
    for (from, c) in &superposition.coeffs {
        let total = table.row_total(from);
        if total == 0 || *c == 0.0 {
            continue;
        }
        for ((f, to), &n) in &table.counts {
            if f == from {
                let slot = labels
                    .iter()
                    .position(|l| l == to)
                    .expect("target was added");
                next[slot] += c * n as f64 / total as f64;
            }
        }
    }
    let total: f64 = next.iter().sum();
    if total > 0.0 {
        next.iter_mut().for_each(|v| *v /= total);
    }
    ExplicitSuperposition {
        coeffs: labels.into_iter().zip(next).collect(),
    }
}
