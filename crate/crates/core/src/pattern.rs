//! Fixed-width binary patterns for the input and output fields.

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::SdrRng;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitPattern {
    bits: Vec<bool>,
}

impl BitPattern {
    pub fn zeros(width: usize) -> Self {
        Self {
            bits: vec![false; width],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(width: usize, active: &[usize]) -> Result<Self> {
        let mut bits = vec![false; width];
        for &i in active {
            if i >= width {
                return Err(Error::WidthMismatch {
                    expected: width,
                    got: i + 1,
                });
            }
            bits[i] = true;
        }
        Ok(Self { bits })
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(text: &str) -> Result<Self> {
        text.trim()
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }

    /// `active` distinct bits chosen uniformly among `width`.
    pub fn random(width: usize, active: usize, rng: &mut SdrRng) -> Result<Self> {
        if active > width {
            return Err(Error::Generation(format!(
                "cannot set {active} bits in a width-{width} pattern"
            )));
        }
        let mut idx: Vec<usize> = (0..width).collect();
        // partial Fisher-Yates
        for i in 0..active {
            let j = i + rng.below(width - i);
            idx.swap(i, j);
        }
        Self::from_indices(width, &idx[..active])
    }

    /// A pattern with the same active count that shares exactly `shared` of
    /// this pattern's active bits; the rest are drawn from inactive positions.
    pub fn perturb(&self, shared: usize, rng: &mut SdrRng) -> Result<Self> {
        let on = self.active_indices();
        let off: Vec<usize> = (0..self.width()).filter(|&i| !self.bits[i]).collect();
        let moved = on.len().checked_sub(shared).ok_or_else(|| {
            Error::Generation(format!("cannot keep {shared} of {} active bits", on.len()))
        })?;
        if moved > off.len() {
            return Err(Error::Generation(format!(
                "need {moved} free positions, only {} available",
                off.len()
            )));
        }
        let kept = BitPattern::random(on.len(), shared, rng)?;
        let fresh = BitPattern::random(off.len(), moved, rng)?;
        let mut bits = vec![false; self.width()];
        for i in kept.active_indices() {
            bits[on[i]] = true;
        }
        for i in fresh.active_indices() {
            bits[off[i]] = true;
        }
        Ok(Self { bits })
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn active_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// `|self AND other|`.
    pub fn overlap(&self, other: &BitPattern) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a && **b)
            .count()
    }

    /// `|self OR other|`.
    pub fn union(&self, other: &BitPattern) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a || **b)
            .count()
    }

    pub(crate) fn check_width(&self, width: usize) -> Result<()> {
        if self.width() != width {
            return Err(Error::WidthMismatch {
                expected: width,
                got: self.width(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let p = BitPattern::parse("0110\n").unwrap();
        assert_eq!(p.width(), 4);
        assert_eq!(p.active_indices(), vec![1, 2]);
        assert_eq!(p.to_string(), "0110");
        assert!(BitPattern::parse("01x0").is_err());
    }

    #[test]
    fn random_has_exact_active_count() {
        let mut rng = SdrRng::new(1);
        for a in [0, 1, 17, 64] {
            assert_eq!(
                BitPattern::random(64, a, &mut rng).unwrap().active_count(),
                a
            );
        }
        assert!(BitPattern::random(8, 9, &mut rng).is_err());
    }

    #[test]
    fn perturb_hits_exact_overlap() {
        let mut rng = SdrRng::new(2);
        let base = BitPattern::random(256, 40, &mut rng).unwrap();
        for shared in [40, 32, 24, 16, 8, 0] {
            let p = base.perturb(shared, &mut rng).unwrap();
            assert_eq!(p.active_count(), 40);
            assert_eq!(p.overlap(&base), shared);
        }
        let tight = BitPattern::random(10, 8, &mut rng).unwrap();
        assert!(tight.perturb(0, &mut rng).is_err());
    }
}
