//! Pattern files: one fixed-width 0/1 string per line, optionally prefixed by
//! `label<TAB>`. Blank lines are skipped.

use std::collections::HashSet;

use sdrqc_core::{BitPattern, Error, Registry};

#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub label: Option<String>,
    pub pattern: BitPattern,
}

pub fn parse(text: &str) -> Result<Vec<Labeled>, Error> {
    let mut items: Vec<Labeled> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (label, bits) = match line.split_once('\t') {
            Some((label, bits)) => (Some(label), bits),
            None => (None, line),
        };
        if label.is_some_and(|l| l.is_empty() || l.contains('\t')) {
            return Err(Error::Parse(format!("line {}: bad label", n + 1)));
        }
        let pattern = BitPattern::parse(bits.trim())
            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        if let Some(first) = items.first() {
            if first.pattern.width() != pattern.width() {
                return Err(Error::Parse(format!(
                    "line {}: width {} differs from the first pattern's {}",
                    n + 1,
                    pattern.width(),
                    first.pattern.width()
                )));
            }
        }
        items.push(Labeled {
            label: label.map(str::to_owned),
            pattern,
        });
    }
    Ok(items)
}

/// Final labels for `items` about to be registered: explicit labels as given,
/// unlabeled lines get `p<n>` where `n` counts registry entries. Any clash with
/// the registry or within the batch is an error.
pub fn assign_labels(items: &[Labeled], registry: &Registry) -> Result<Vec<String>, Error> {
    let mut seen = HashSet::new();
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let label = item
                .label
                .clone()
                .unwrap_or_else(|| format!("p{}", registry.len() + i));
            if registry.contains(&label) || !seen.insert(label.clone()) {
                return Err(Error::DuplicateLabel(label));
            }
            Ok(label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use sdrqc_core::FieldGeometry;

    use super::*;

    #[test]
    fn labels_and_blank_lines() {
        let items = parse("a\t0101\n\n1100\r\n").unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].label.as_deref(), Some("a"));
        assert_eq!(items[1].label, None);
        assert_eq!(items[1].pattern, BitPattern::parse("1100").unwrap());
    }

    #[test]
    fn rejects_ragged_and_junk() {
        assert!(parse("0101\n011\n").is_err());
        assert!(parse("01x1\n").is_err());
        assert!(parse("\t0101\n").is_err());
        assert!(parse("a\tb\t0101\n").is_err());
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn auto_labels_continue_from_registry() {
        let g = FieldGeometry::new(2, 2, 4, 4).unwrap();
        let mut r = Registry::new(g);
        let items = parse("0101\nx\t1100\n0011\n").unwrap();
        assert_eq!(assign_labels(&items, &r).unwrap(), ["p0", "x", "p2"]);
        let code = sdrqc_core::Code::new(2, vec![0, 1]).unwrap();
        r.register("p0", items[0].pattern.clone(), code).unwrap();
        assert_eq!(assign_labels(&items, &r).unwrap(), ["p1", "x", "p3"]);
        for clash in ["p0\t0101\n", "p2\t0101\n0101\n"] {
            let items = parse(clash).unwrap();
            assert!(matches!(
                assign_labels(&items, &r),
                Err(Error::DuplicateLabel(_))
            ));
        }
    }
}
