//! Birth models.
//!
//! [`SlcBirthModel`] describes a newly appearing cluster: each label exists
//! independently with probability `q_l`, and given the set `L` of labels that
//! exist, the joint spatial density is the mixture
//! `Σ_i α_i^L ∏_{l∈L} s_l^i(x_l)` over a small component index `i`.
//! With a single component this is the ordinary labeled multi-Bernoulli
//! birth ([`LmbBirth`]).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lrfs::{lmb_weight, Label, LabelSet};
use crate::single_target::SpatialPdf;

/// Spatial densities of one hypothesis, keyed by label.
pub type SpatialTable = BTreeMap<Label, Arc<SpatialPdf>>;

/// Labeled multi-Bernoulli birth: independent targets.
#[derive(Clone, Debug)]
pub struct LmbBirth {
    pub existence: BTreeMap<Label, f64>,
    pub spatial: SpatialTable,
}

impl LmbBirth {
    pub fn new(targets: impl IntoIterator<Item = (Label, f64, SpatialPdf)>) -> Result<Self> {
        let mut existence = BTreeMap::new();
        let mut spatial = BTreeMap::new();
        for (l, q, s) in targets {
            if existence.insert(l, q).is_some() {
                return Err(Error::DuplicateLabel(l));
            }
            spatial.insert(l, Arc::new(s));
        }
        Ok(LmbBirth { existence, spatial })
    }
}

/// Birth model with simple labeled correlation between the newborn targets.
#[derive(Clone, Debug)]
pub struct SlcBirthModel {
    labels: LabelSet,
    existence: BTreeMap<Label, f64>,
    default_alpha: Vec<f64>,
    alpha: BTreeMap<LabelSet, Vec<f64>>,
    spatial: Vec<SpatialTable>,
}

impl SlcBirthModel {
    /// `spatial[i]` holds `s_l^i` for every birth label. `default_alpha` is
    /// used for label sets without an entry in `alpha_overrides`.
    pub fn new(
        existence: BTreeMap<Label, f64>,
        spatial: Vec<SpatialTable>,
        default_alpha: Vec<f64>,
        alpha_overrides: BTreeMap<LabelSet, Vec<f64>>,
    ) -> Result<Self> {
        let labels: LabelSet = existence.keys().copied().collect();
        let n = spatial.len();
        if n == 0 {
            return Err(Error::InvalidModel("birth model needs at least one component".into()));
        }
        for (l, q) in &existence {
            if !(0.0..=1.0).contains(q) {
                return Err(Error::InvalidModel(format!("existence probability {q} for {l}")));
            }
        }
        for (i, table) in spatial.iter().enumerate() {
            for l in &labels {
                if !table.contains_key(l) {
                    return Err(Error::InvalidModel(format!("birth component {i} has no density for {l}")));
                }
            }
        }
        check_alpha(&default_alpha, n)?;
        for (set, a) in &alpha_overrides {
            if !set.is_subset(&labels) {
                return Err(Error::InvalidModel(format!("alpha given for {set}, not a subset of the birth labels")));
            }
            check_alpha(a, n)?;
        }
        Ok(SlcBirthModel {
            labels,
            existence,
            default_alpha,
            alpha: alpha_overrides,
            spatial,
        })
    }

    /// No births.
    pub fn none() -> Self {
        SlcBirthModel {
            labels: LabelSet::empty(),
            existence: BTreeMap::new(),
            default_alpha: vec![1.0],
            alpha: BTreeMap::new(),
            spatial: vec![BTreeMap::new()],
        }
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn existence(&self) -> &BTreeMap<Label, f64> {
        &self.existence
    }

    /// Size of the component index set.
    pub fn num_components(&self) -> usize {
        self.spatial.len()
    }

    pub fn is_lmb(&self) -> bool {
        self.spatial.len() == 1
    }

    /// `α_i^L` over all components `i`.
    pub fn alpha(&self, set: &LabelSet) -> &[f64] {
        self.alpha.get(set).unwrap_or(&self.default_alpha)
    }

    pub fn spatial(&self, component: usize) -> &SpatialTable {
        &self.spatial[component]
    }

    /// Labeled multi-Bernoulli weight of `set`.
    pub fn label_weight(&self, set: &LabelSet) -> f64 {
        lmb_weight(&self.labels, &self.existence, set)
    }

    /// Positive-weight terms `(L, i, ω(L)·α_i^L)` of the equivalent GLMB
    /// birth, in (label set, component) order.
    pub fn glmb_terms(&self) -> Vec<(LabelSet, usize, f64)> {
        let mut out = Vec::new();
        let mut sets: Vec<LabelSet> = self.labels.subsets().collect();
        sets.sort();
        for set in sets {
            let w = self.label_weight(&set);
            if w <= 0.0 {
                continue;
            }
            for (i, a) in self.alpha(&set).iter().enumerate() {
                if *a > 0.0 {
                    out.push((set.clone(), i, w * a));
                }
            }
        }
        out
    }
}

fn check_alpha(a: &[f64], n: usize) -> Result<()> {
    if a.len() != n {
        return Err(Error::InvalidModel(format!("alpha has {} entries for {n} components", a.len())));
    }
    if a.iter().any(|v| !(*v >= 0.0)) || (a.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidModel(format!("alpha {a:?} is not a probability vector")));
    }
    Ok(())
}

impl From<LmbBirth> for SlcBirthModel {
    fn from(b: LmbBirth) -> Self {
        SlcBirthModel {
            labels: b.existence.keys().copied().collect(),
            existence: b.existence,
            default_alpha: vec![1.0],
            alpha: BTreeMap::new(),
            spatial: vec![b.spatial],
        }
    }
}
