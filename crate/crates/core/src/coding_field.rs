//! Coding-field geometry and the algebra of codes.
//!
//! The field is `q` winner-take-all clusters of `k` units. A [`Code`] names one
//! winner per cluster, so `k^q` codes exist and any two codes intersect in
//! `0..=q` units. The intersection size divided by `q` is the strength with
//! which one code is present while another is fully active ([`Likelihood`]).

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::rng::SdrRng;

/// Shape of a model: cluster layout plus the widths of the input and output
/// fields wired to it. Fixed for a model's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldGeometry {
    q: usize,
    k: usize,
    n_in: usize,
    n_out: usize,
}

impl FieldGeometry {
    pub fn new(q: usize, k: usize, n_in: usize, n_out: usize) -> Result<Self> {
        for (name, v) in [("q", q), ("k", k), ("n_in", n_in), ("n_out", n_out)] {
            if v == 0 {
                return Err(Error::InvalidGeometry(format!("{name} must be at least 1")));
            }
        }
        // Winner indices and counters are stored as u32.
        if q.checked_mul(k).is_none_or(|u| u > u32::MAX as usize) {
            return Err(Error::InvalidGeometry(format!(
                "q*k = {q}*{k} is too large"
            )));
        }
        Ok(Self { q, k, n_in, n_out })
    }

    /// Number of clusters.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Units per cluster.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    /// Total coding units, `q * k`.
    pub fn units(&self) -> usize {
        self.q * self.k
    }

    /// Number of distinct codes, `k^q`.
    pub fn num_codes(&self) -> Result<u128> {
        num_codes(self.q, self.k)
    }

    /// Number of distinct intersection sizes between two codes, `q + 1`.
    pub fn num_levels(&self) -> usize {
        num_levels(self.q)
    }
}

impl fmt::Display for FieldGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "q={} k={} n_in={} n_out={}",
            self.q, self.k, self.n_in, self.n_out
        )
    }
}

/// `k^q`, or [`Error::CapacityOverflow`] when it does not fit in a `u128`.
pub fn num_codes(q: usize, k: usize) -> Result<u128> {
    let exp = u32::try_from(q).map_err(|_| Error::CapacityOverflow { q, k })?;
    (k as u128)
        .checked_pow(exp)
        .ok_or(Error::CapacityOverflow { q, k })
}

pub fn num_levels(q: usize) -> usize {
    q + 1
}

/// One winner per cluster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Code {
    k: u32,
    winners: Vec<u32>,
}

impl Code {
    pub fn new(k: usize, winners: Vec<u32>) -> Result<Self> {
        if k == 0 || winners.is_empty() {
            return Err(Error::InvalidGeometry(
                "a code needs at least one cluster of at least one unit".into(),
            ));
        }
        if let Some((c, w)) = winners.iter().enumerate().find(|(_, &w)| w as usize >= k) {
            return Err(Error::InvalidGeometry(format!(
                "winner {w} in cluster {c} is out of range for k={k}"
            )));
        }
        Ok(Self {
            k: k as u32,
            winners,
        })
    }

    pub fn for_geometry(geometry: &FieldGeometry, winners: Vec<u32>) -> Result<Self> {
        if winners.len() != geometry.q() {
            return Err(Error::GeometryMismatch {
                expected: format!("{} clusters", geometry.q()),
                got: format!("{} clusters", winners.len()),
            });
        }
        Self::new(geometry.k(), winners)
    }

    /// Parses the `c0:c1:...` text form.
    pub fn parse(text: &str, k: usize) -> Result<Self> {
        let winners = text
            .trim()
            .split(':')
            .map(|s| {
                s.parse::<u32>()
                    .map_err(|e| Error::Parse(format!("code `{text}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(k, winners)
    }

    pub fn q(&self) -> usize {
        self.winners.len()
    }

    pub fn k(&self) -> usize {
        self.k as usize
    }

    pub fn winners(&self) -> &[u32] {
        &self.winners
    }

    /// Flat unit indices (`cluster * k + winner`) of the code's units.
    pub fn units(&self) -> impl Iterator<Item = usize> + '_ {
        let k = self.k as usize;
        self.winners
            .iter()
            .enumerate()
            .map(move |(c, &w)| c * k + w as usize)
    }

    /// Packed `q * k` bit-mask view, little-endian within each word.
    pub fn to_mask(&self) -> Vec<u64> {
        let n = self.q() * self.k();
        let mut words = vec![0u64; n.div_ceil(64)];
        for u in self.units() {
            words[u / 64] |= 1 << (u % 64);
        }
        words
    }

    pub fn check_compatible(&self, other: &Code) -> Result<()> {
        if self.q() != other.q() || self.k != other.k {
            return Err(Error::GeometryMismatch {
                expected: format!("q={} k={}", self.q(), self.k),
                got: format!("q={} k={}", other.q(), other.k),
            });
        }
        Ok(())
    }

    pub fn check_geometry(&self, geometry: &FieldGeometry) -> Result<()> {
        if self.q() != geometry.q() || self.k() != geometry.k() {
            return Err(Error::GeometryMismatch {
                expected: format!("q={} k={}", geometry.q(), geometry.k()),
                got: format!("q={} k={}", self.q(), self.k),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.winners.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

/// Number of clusters in which `a` and `b` pick the same winner.
pub fn intersection(a: &Code, b: &Code) -> Result<usize> {
    a.check_compatible(b)?;
    Ok(a.winners
        .iter()
        .zip(&b.winners)
        .filter(|(x, y)| x == y)
        .count())
}

/// Strength of `stored` while `active` is fully active.
pub fn likelihood(stored: &Code, active: &Code) -> Result<Likelihood> {
    let hits = intersection(stored, active)?;
    Ok(Likelihood {
        hits: hits as u32,
        q: stored.q() as u32,
    })
}

/// Exact rational `hits / q`. One of `q + 1` levels. Equality and ordering
/// compare values, so `4/6 == 2/3`.
#[derive(Debug, Clone, Copy)]
pub struct Likelihood {
    hits: u32,
    q: u32,
}

impl Likelihood {
    pub fn new(hits: usize, q: usize) -> Result<Self> {
        if q == 0 || hits > q {
            return Err(Error::InvalidParams(format!(
                "likelihood {hits}/{q} out of range"
            )));
        }
        Ok(Self {
            hits: hits as u32,
            q: q as u32,
        })
    }

    pub fn numerator(&self) -> usize {
        self.hits as usize
    }

    pub fn denominator(&self) -> usize {
        self.q as usize
    }

    pub fn as_f64(&self) -> f64 {
        self.hits as f64 / self.q as f64
    }
}

impl PartialEq for Likelihood {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Likelihood {}

impl std::hash::Hash for Likelihood {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        let (mut a, mut b) = (self.hits, self.q);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        (self.hits / a, self.q / a).hash(state);
    }
}

impl PartialOrd for Likelihood {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Likelihood {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.hits as u64 * other.q as u64).cmp(&(other.hits as u64 * self.q as u64))
    }
}

impl fmt::Display for Likelihood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.hits, self.q)
    }
}

/// Each cluster's winner drawn independently and uniformly from `0..k`.
pub fn random_code(geometry: &FieldGeometry, rng: &mut SdrRng) -> Code {
    let winners = (0..geometry.q())
        .map(|_| rng.below(geometry.k()) as u32)
        .collect();
    Code {
        k: geometry.k() as u32,
        winners,
    }
}

/// Every code of a `q`-by-`k` field in odometer order (cluster 0 fastest).
pub fn all_codes(q: usize, k: usize) -> AllCodes {
    AllCodes {
        k: k as u32,
        next: (q > 0 && k > 0).then(|| vec![0; q]),
    }
}

pub struct AllCodes {
    k: u32,
    next: Option<Vec<u32>>,
}

impl Iterator for AllCodes {
    type Item = Code;

    fn next(&mut self) -> Option<Code> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carried_out = true;
        for digit in succ.iter_mut() {
            *digit += 1;
            if *digit < self.k {
                carried_out = false;
                break;
            }
            *digit = 0;
        }
        if !carried_out {
            self.next = Some(succ);
        }
        Some(Code {
            k: self.k,
            winners: current,
        })
    }
}
