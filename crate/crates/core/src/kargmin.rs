//! Ordered minimum values `m₁ < m₂ < …` and argmin sets `M₁, M₂, …` of a
//! discrete lower semi-continuous function.

use alloc::vec::Vec;

use crate::domain::Point;
use crate::error::{Error, Result};
use crate::sampler::SampleFunction;

/// The `i`-th distinct minimum value and every point attaining it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KArgmin {
    pub value: f64,
    pub argmins: Vec<Point>,
}

/// First `k` argmin levels of a function, sorted by value.
///
/// `truncated` is set when the function has fewer than `requested` distinct
/// values; the remaining `M_i` are empty and are not stored.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KArgminRecord {
    pub entries: Vec<KArgmin>,
    pub requested: usize,
    pub truncated: bool,
}

impl KArgminRecord {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.value)
    }

    /// First point of `M_{i+1}`; with continuous noise it is the only one.
    pub fn location(&self, i: usize) -> Point {
        self.entries[i].argmins[0]
    }

    pub fn value(&self, i: usize) -> f64 {
        self.entries[i].value
    }

    /// Strictly increasing values and nonempty argmin sets.
    pub fn is_well_formed(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].value < w[1].value)
            && self.entries.iter().all(|e| !e.argmins.is_empty())
            && self.entries.len() <= self.requested
    }
}

/// Group the `k` smallest distinct values of `f` with all points attaining
/// them. Equal values are detected by exact floating-point comparison.
pub fn extract_k_argmins(f: &SampleFunction, k: usize) -> Result<KArgminRecord> {
    if f.is_empty() {
        return Err(Error::EmptyFunction);
    }
    let values = f.values();
    let points = f.points();
    let mut order: Vec<usize> = (0..values.len()).collect();
    // sort by value, then by point so argmin sets are order-independent
    order.sort_by(|&a, &b| {
        values[a]
            .total_cmp(&values[b])
            .then_with(|| points[a].0[0].total_cmp(&points[b].0[0]))
            .then_with(|| points[a].0[1].total_cmp(&points[b].0[1]))
    });
    let mut entries: Vec<KArgmin> = Vec::with_capacity(k);
    for i in order {
        match entries.last_mut() {
            Some(last) if last.value == values[i] => last.argmins.push(points[i]),
            _ => {
                if entries.len() == k {
                    break;
                }
                entries.push(KArgmin {
                    value: values[i],
                    argmins: alloc::vec![points[i]],
                });
            }
        }
    }
    Ok(KArgminRecord {
        truncated: entries.len() < k,
        entries,
        requested: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn func(pairs: &[(f64, f64)]) -> SampleFunction {
        SampleFunction::new(
            1,
            pairs.iter().map(|&(x, _)| Point::new1(x)).collect(),
            pairs.iter().map(|&(_, v)| v).collect(),
        )
        .unwrap()
    }

    #[test]
    fn distinct_values() {
        let r = extract_k_argmins(&func(&[(0.1, 3.0), (0.5, 1.0), (0.9, 2.0)]), 2).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.value(0), 1.0);
        assert_eq!(r.entries[0].argmins, alloc::vec![Point::new1(0.5)]);
        assert_eq!(r.value(1), 2.0);
        assert_eq!(r.entries[1].argmins, alloc::vec![Point::new1(0.9)]);
        assert!(!r.truncated);
    }

    #[test]
    fn ties_share_a_level() {
        let r = extract_k_argmins(&func(&[(0.2, 1.0), (0.7, 1.0), (0.4, 2.0)]), 2).unwrap();
        assert_eq!(r.entries[0].argmins, alloc::vec![Point::new1(0.2), Point::new1(0.7)]);
        assert_eq!(r.entries[1].argmins, alloc::vec![Point::new1(0.4)]);
    }

    #[test]
    fn truncates_when_short() {
        let r = extract_k_argmins(&func(&[(0.3, 5.0)]), 3).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.truncated);
        assert_eq!(r.requested, 3);
    }

    #[test]
    fn empty_is_an_error() {
        let f = SampleFunction::new(1, Vec::new(), Vec::new()).unwrap();
        assert_eq!(extract_k_argmins(&f, 1), Err(Error::EmptyFunction));
    }

    /// Brute force: sort all values, take distinct ones, collect points by
    /// scanning the whole function for each.
    fn oracle(pairs: &[(f64, f64)], k: usize) -> Vec<(f64, Vec<f64>)> {
        let mut vals: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        vals.into_iter()
            .take(k)
            .map(|v| {
                let mut xs: Vec<f64> = pairs.iter().filter(|p| p.1 == v).map(|p| p.0).collect();
                xs.sort_by(f64::total_cmp);
                (v, xs)
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn matches_sorting_oracle(
            pairs in proptest::collection::vec((0.0f64..1.0, 0u8..12), 1..50),
            k in 1usize..8,
        ) {
            // small integer values force plenty of ties
            let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(x, v)| (x, v as f64)).collect();
            let r = extract_k_argmins(&func(&pairs), k).unwrap();
            let expected = oracle(&pairs, k);
            prop_assert!(r.is_well_formed());
            prop_assert_eq!(r.len(), expected.len());
            prop_assert_eq!(r.truncated, expected.len() < k);
            for (e, (v, xs)) in r.entries.iter().zip(&expected) {
                prop_assert_eq!(e.value, *v);
                let got: Vec<f64> = e.argmins.iter().map(|p| p.x()).collect();
                prop_assert_eq!(&got, xs);
            }
        }

        #[test]
        fn permutation_invariant(
            pairs in proptest::collection::vec((0.0f64..1.0, 0u8..6), 1..30),
            k in 1usize..5,
            rot in 0usize..30,
        ) {
            let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(x, v)| (x, v as f64)).collect();
            let mut shuffled = pairs.clone();
            let n = shuffled.len();
            shuffled.rotate_left(rot % n);
            shuffled.reverse();
            prop_assert_eq!(
                extract_k_argmins(&func(&pairs), k).unwrap(),
                extract_k_argmins(&func(&shuffled), k).unwrap()
            );
        }
    }
}
