//! Hypothesis indices and measurement-to-track associations.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::lrfs::{Label, LabelSet};

/// Measurement-to-track association for one scan.
///
/// Only labels associated with a measurement are stored (1-based measurement
/// indices); every other label is implicitly missed. This makes the
/// representation canonical: two associations are equal iff they agree on
/// every label.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mta(Vec<(Label, u32)>);

impl Mta {
    pub fn empty() -> Self {
        Mta(Vec::new())
    }

    /// Builds an association from `(label, measurement)` pairs; zero entries
    /// are dropped. Returns `None` if a label repeats or a measurement is
    /// used twice.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, u32)>) -> Option<Self> {
        let mut v: Vec<(Label, u32)> = pairs.into_iter().filter(|(_, j)| *j > 0).collect();
        v.sort_unstable();
        let labels_unique = v.windows(2).all(|w| w[0].0 != w[1].0);
        let mut meas: Vec<u32> = v.iter().map(|(_, j)| *j).collect();
        meas.sort_unstable();
        let meas_unique = meas.windows(2).all(|w| w[0] != w[1]);
        (labels_unique && meas_unique).then_some(Mta(v))
    }

    /// `θ(l)`: 0 for a miss, otherwise the 1-based measurement index.
    pub fn get(&self, l: &Label) -> u32 {
        self.0
            .binary_search_by(|(x, _)| x.cmp(l))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn assigned(&self) -> &[(Label, u32)] {
        &self.0
    }

    /// The indicator `λ^θ(L)`: true iff every label outside `set` is missed.
    pub fn admissible_for(&self, set: &LabelSet) -> bool {
        self.0.iter().all(|(l, _)| set.contains(l))
    }
}

impl fmt::Display for Mta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("m[")?;
        for (i, (l, j)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{l}>{j}")?;
        }
        f.write_str("]")
    }
}

/// One step in a hypothesis history.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexStep {
    /// Component of a correlated birth model.
    Birth(u32),
    /// Association chosen in a measurement scan.
    Scan(Mta),
}

impl fmt::Display for IndexStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexStep::Birth(i) => write!(f, "b{i}"),
            IndexStep::Scan(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug)]
struct Node {
    parent: HypothesisIndex,
    step: IndexStep,
    depth: usize,
}

/// History of a hypothesis, stored as a shared persistent list so that
/// children of one parent share its prefix.
///
/// Ordering and equality are those of the step sequence read from the root.
#[derive(Clone, Debug, Default)]
pub struct HypothesisIndex(Option<Arc<Node>>);

impl HypothesisIndex {
    /// The empty history of the initial, target-free density.
    pub fn root() -> Self {
        HypothesisIndex(None)
    }

    pub fn child(&self, step: IndexStep) -> Self {
        HypothesisIndex(Some(Arc::new(Node {
            parent: self.clone(),
            step,
            depth: self.depth() + 1,
        })))
    }

    pub fn depth(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.depth)
    }

    /// Steps from the root to this hypothesis.
    pub fn steps(&self) -> Vec<&IndexStep> {
        let mut out = Vec::with_capacity(self.depth());
        let mut cur = self;
        while let Some(n) = &cur.0 {
            out.push(&n.step);
            cur = &n.parent;
        }
        out.reverse();
        out
    }

    pub fn from_steps(steps: impl IntoIterator<Item = IndexStep>) -> Self {
        steps.into_iter().fold(Self::root(), |acc, s| acc.child(s))
    }
}

impl PartialEq for HypothesisIndex {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HypothesisIndex {}

impl Ord for HypothesisIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        let (da, db) = (self.depth(), other.depth());
        let (mut a, mut b) = (self, other);
        while a.depth() > db {
            a = a.parent();
        }
        while b.depth() > da {
            b = b.parent();
        }
        // Walk both to the root in lockstep; the difference nearest the
        // root decides, and a shared ancestor ends the walk early.
        let mut order = Ordering::Equal;
        loop {
            match (&a.0, &b.0) {
                (Some(x), Some(y)) if !Arc::ptr_eq(x, y) => {
                    let c = x.step.cmp(&y.step);
                    if c != Ordering::Equal {
                        order = c;
                    }
                    a = &x.parent;
                    b = &y.parent;
                }
                _ => break,
            }
        }
        order.then(da.cmp(&db))
    }
}

impl HypothesisIndex {
    fn parent(&self) -> &HypothesisIndex {
        &self.0.as_ref().expect("non-root index").parent
    }
}

impl PartialOrd for HypothesisIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for HypothesisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, s) in self.steps().iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(">")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(i: u32) -> Label {
        Label::new(1, i)
    }

    #[test]
    fn mta_rejects_non_injective_maps() {
        assert!(Mta::from_pairs([(l(1), 1), (l(2), 1)]).is_none());
        assert!(Mta::from_pairs([(l(1), 1), (l(1), 2)]).is_none());
        let m = Mta::from_pairs([(l(2), 1), (l(1), 0), (l(3), 2)]).unwrap();
        assert_eq!(m.get(&l(1)), 0);
        assert_eq!(m.get(&l(2)), 1);
        assert_eq!(m.assigned().len(), 2);
    }

    #[test]
    fn lambda_zeroes_assignments_outside_the_set() {
        let m = Mta::from_pairs([(l(1), 1)]).unwrap();
        assert!(!m.admissible_for(&LabelSet::empty()));
        assert!(m.admissible_for(&[l(1)].into_iter().collect()));
        assert!(Mta::empty().admissible_for(&LabelSet::empty()));
    }

    #[test]
    fn index_order_follows_step_sequence() {
        let root = HypothesisIndex::root();
        let a = root.child(IndexStep::Scan(Mta::empty()));
        let b = root.child(IndexStep::Scan(Mta::from_pairs([(l(1), 1)]).unwrap()));
        let a2 = a.child(IndexStep::Birth(0));
        assert!(root < a && a < a2 && a2 < b);
        let rebuilt = HypothesisIndex::from_steps(a2.steps().into_iter().cloned());
        assert_eq!(rebuilt, a2);
        assert_eq!(rebuilt.cmp(&a2), Ordering::Equal);
        assert_eq!(a2.to_string(), "<m[]/b0>");
    }

    proptest::proptest! {
        #[test]
        fn order_matches_step_vectors(
            a in proptest::collection::vec(0u32..3, 0..6),
            b in proptest::collection::vec(0u32..3, 0..6),
            shared in 0usize..4,
        ) {
            let prefix = HypothesisIndex::from_steps((0..shared as u32).map(IndexStep::Birth));
            let build = |v: &[u32]| v.iter().fold(prefix.clone(), |acc, i| acc.child(IndexStep::Birth(*i)));
            let (x, y) = (build(&a), build(&b));
            let expected = x.steps().cmp(&y.steps());
            proptest::prop_assert_eq!(x.cmp(&y), expected);
            proptest::prop_assert_eq!(x == y, expected == Ordering::Equal);
        }
    }
}
