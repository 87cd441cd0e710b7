//! Labels, labeled states and labeled finite sets.
//!
//! A label is a `(birth_step, index)` pair. Labels are totally ordered
//! lexicographically, and label sets are kept sorted so that equality,
//! ordering and subset enumeration are canonical.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Track identity: the time step a target appeared at and its serial
/// number among the targets born at that step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "(u32, u32)", from = "(u32, u32)")]
pub struct Label {
    pub birth_step: u32,
    pub index: u32,
}

impl Label {
    /// # Panics
    /// If `index` is zero; per-step serials start at 1.
    pub fn new(birth_step: u32, index: u32) -> Self {
        assert!(index > 0, "label index must be positive");
        Label { birth_step, index }
    }
}

impl From<(u32, u32)> for Label {
    fn from((birth_step, index): (u32, u32)) -> Self {
        Label { birth_step, index }
    }
}

impl From<Label> for (u32, u32) {
    fn from(l: Label) -> Self {
        (l.birth_step, l.index)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.birth_step, self.index)
    }
}

/// A finite set of labels, stored sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(Vec<Label>);

impl LabelSet {
    pub fn empty() -> Self {
        LabelSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Label> + Clone + '_ {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    pub fn contains(&self, l: &Label) -> bool {
        self.0.binary_search(l).is_ok()
    }

    pub fn is_subset(&self, other: &LabelSet) -> bool {
        self.0.iter().all(|l| other.contains(l))
    }

    pub fn is_disjoint(&self, other: &LabelSet) -> bool {
        self.0.iter().all(|l| !other.contains(l))
    }

    pub fn union(&self, other: &LabelSet) -> LabelSet {
        self.0.iter().chain(other.0.iter()).copied().collect()
    }

    pub fn intersection(&self, other: &LabelSet) -> LabelSet {
        self.0.iter().filter(|l| other.contains(l)).copied().collect()
    }

    pub fn difference(&self, other: &LabelSet) -> LabelSet {
        self.0.iter().filter(|l| !other.contains(l)).copied().collect()
    }

    pub fn insert(&mut self, l: Label) {
        if let Err(pos) = self.0.binary_search(&l) {
            self.0.insert(pos, l);
        }
    }

    /// All `2^n` subsets, in bitmask order (the empty set first).
    pub fn subsets(&self) -> impl Iterator<Item = LabelSet> + '_ {
        let n = self.0.len();
        assert!(n < 32, "subset enumeration over {n} labels");
        (0u32..(1u32 << n)).map(move |mask| {
            LabelSet(
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| self.0[i])
                    .collect(),
            )
        })
    }
}

impl FromIterator<Label> for LabelSet {
    fn from_iter<I: IntoIterator<Item = Label>>(iter: I) -> Self {
        let mut v: Vec<Label> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        LabelSet(v)
    }
}

impl<'a> IntoIterator for &'a LabelSet {
    type Item = &'a Label;
    type IntoIter = std::slice::Iter<'a, Label>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("}")
    }
}

/// A kinematic state paired with its track label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledState {
    pub kinematic: DVector<f64>,
    pub label: Label,
}

impl LabeledState {
    pub fn new(kinematic: DVector<f64>, label: Label) -> Self {
        LabeledState { kinematic, label }
    }
}

/// A labeled finite set: every element carries a distinct label.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledFiniteSet {
    // keyed by label, so each label maps to exactly one kinematic point
    elements: BTreeMap<Label, DVector<f64>>,
}

impl LabeledFiniteSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// The kinematic point carried by label `l`, if present.
    pub fn state_of(&self, l: &Label) -> Option<&DVector<f64>> {
        self.elements.get(l)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &DVector<f64>)> {
        self.elements.iter()
    }

    pub fn to_states(&self) -> Vec<LabeledState> {
        self.elements
            .iter()
            .map(|(l, x)| LabeledState::new(x.clone(), *l))
            .collect()
    }
}

/// Builds a labeled finite set, rejecting repeated labels.
pub fn validate_lfs(elements: impl IntoIterator<Item = LabeledState>) -> Result<LabeledFiniteSet> {
    let mut map = BTreeMap::new();
    for s in elements {
        if map.insert(s.label, s.kinematic).is_some() {
            return Err(Error::DuplicateLabel(s.label));
        }
    }
    Ok(LabeledFiniteSet { elements: map })
}

pub fn labels_of(x: &LabeledFiniteSet) -> LabelSet {
    x.elements.keys().copied().collect()
}

/// Splits `x` into its surviving part (labels in `persisting`) and its
/// newborn part (labels in `birth`).
pub fn split_survivor_birth(
    x: &LabeledFiniteSet,
    persisting: &LabelSet,
    birth: &LabelSet,
) -> Result<(LabeledFiniteSet, LabeledFiniteSet)> {
    debug_assert!(persisting.is_disjoint(birth));
    let mut minus = LabeledFiniteSet::empty();
    let mut plus = LabeledFiniteSet::empty();
    for (l, s) in &x.elements {
        if persisting.contains(l) {
            minus.elements.insert(*l, s.clone());
        } else if birth.contains(l) {
            plus.elements.insert(*l, s.clone());
        } else {
            return Err(Error::UnknownLabel(*l));
        }
    }
    Ok((minus, plus))
}

/// Labeled multi-Bernoulli weight of label set `set` for a Bernoulli family on
/// `birth_labels` with existence probabilities `existence`.
///
/// Zero whenever `set` is not a subset of `birth_labels`.
pub fn lmb_weight(birth_labels: &LabelSet, existence: &BTreeMap<Label, f64>, set: &LabelSet) -> f64 {
    if !set.is_subset(birth_labels) {
        return 0.0;
    }
    birth_labels
        .iter()
        .map(|l| {
            let q = existence[l];
            if set.contains(l) {
                q
            } else {
                1.0 - q
            }
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn l(k: u32, i: u32) -> Label {
        Label::new(k, i)
    }

    #[test]
    fn empty_lfs_is_valid() {
        let x = validate_lfs(Vec::new()).unwrap();
        assert!(x.is_empty());
        assert!(labels_of(&x).is_empty());
    }

    #[test]
    fn repeated_label_is_rejected() {
        let err = validate_lfs(vec![
            LabeledState::new(dvector![1.0], l(1, 1)),
            LabeledState::new(dvector![2.0], l(1, 1)),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(x) if x == l(1, 1)));
    }

    #[test]
    fn same_point_with_distinct_labels_is_valid() {
        let x = validate_lfs(vec![
            LabeledState::new(dvector![1.0], l(1, 1)),
            LabeledState::new(dvector![1.0], l(1, 2)),
        ])
        .unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(labels_of(&x), [l(1, 1), l(1, 2)].into_iter().collect());
    }

    #[test]
    fn split_partitions_by_label() {
        let (a, b) = (l(0, 1), l(2, 1));
        let x = validate_lfs(vec![
            LabeledState::new(dvector![1.0], a),
            LabeledState::new(dvector![2.0], b),
        ])
        .unwrap();
        let pers: LabelSet = [a].into_iter().collect();
        let born: LabelSet = [b].into_iter().collect();
        let (minus, plus) = split_survivor_birth(&x, &pers, &born).unwrap();
        assert_eq!(labels_of(&minus), pers);
        assert_eq!(labels_of(&plus), born);
        assert_eq!(plus.state_of(&b), Some(&dvector![2.0]));

        let (e1, e2) = split_survivor_birth(&LabeledFiniteSet::empty(), &pers, &born).unwrap();
        assert!(e1.is_empty() && e2.is_empty());

        let stray = validate_lfs(vec![LabeledState::new(dvector![0.0], l(5, 5))]).unwrap();
        assert!(matches!(
            split_survivor_birth(&stray, &pers, &born),
            Err(Error::UnknownLabel(x)) if x == l(5, 5)
        ));
    }

    #[test]
    fn lmb_weight_examples() {
        let j1: LabelSet = [l(1, 1)].into_iter().collect();
        let q1 = BTreeMap::from([(l(1, 1), 1.0)]);
        assert_eq!(lmb_weight(&j1, &q1, &j1), 1.0);

        let j2: LabelSet = [l(1, 1), l(1, 2)].into_iter().collect();
        let q2 = BTreeMap::from([(l(1, 1), 0.5), (l(1, 2), 0.5)]);
        assert_eq!(lmb_weight(&j2, &q2, &j1), 0.25);

        let outside: LabelSet = [l(1, 3)].into_iter().collect();
        assert_eq!(lmb_weight(&j2, &q2, &outside), 0.0);
    }

    #[test]
    fn label_order_is_lexicographic() {
        assert!(l(0, 9) < l(1, 1));
        assert!(l(1, 1) < l(1, 2));
        let s: LabelSet = [l(2, 1), l(0, 3), l(0, 1)].into_iter().collect();
        assert_eq!(s.as_slice(), &[l(0, 1), l(0, 3), l(2, 1)]);
    }

    fn existence_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..=1.0, 0..=6)
    }

    proptest! {
        #[test]
        fn lmb_weights_sum_to_one(q in existence_strategy()) {
            let labels: LabelSet = (1..=q.len() as u32).map(|i| l(1, i)).collect();
            let ex: BTreeMap<_, _> = labels.iter().copied().zip(q.iter().copied()).collect();
            let total: f64 = labels.subsets().map(|s| lmb_weight(&labels, &ex, &s)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn certain_existence_concentrates_on_full_set(n in 0usize..=6) {
            let labels: LabelSet = (1..=n as u32).map(|i| l(3, i)).collect();
            let ex: BTreeMap<_, _> = labels.iter().map(|x| (*x, 1.0)).collect();
            for s in labels.subsets() {
                let w = lmb_weight(&labels, &ex, &s);
                prop_assert_eq!(w, if s == labels { 1.0 } else { 0.0 });
            }
        }

        #[test]
        fn split_is_a_partition(mask in 0u32..64, n in 0u32..6) {
            let all: Vec<Label> = (1..=n).map(|i| l(1, i)).collect();
            let pers: LabelSet = all.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, x)| *x).collect();
            let born: LabelSet = all.iter().filter(|x| !pers.contains(x)).copied().collect();
            let x = validate_lfs(all.iter().map(|lab| LabeledState::new(dvector![lab.index as f64], *lab))).unwrap();
            let (minus, plus) = split_survivor_birth(&x, &pers, &born).unwrap();
            prop_assert_eq!(minus.len() + plus.len(), x.len());
            prop_assert!(labels_of(&minus).is_disjoint(&labels_of(&plus)));
            prop_assert_eq!(labels_of(&minus).union(&labels_of(&plus)), labels_of(&x));
        }
    }
}
