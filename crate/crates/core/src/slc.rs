//! SLC-GLMB densities: the GLMB density written as a label-set weight
//! `ω(L)`, per-set correlation weights `α_o^L` over hypothesis indices, and
//! per-hypothesis spatial densities `s^o_l`.
//!
//! The recursion here works on that quadruple directly. It agrees with
//! converting to the classical form, running [`crate::glmb`], and converting
//! back, up to floating-point rounding.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::association::{associations, score_table, AssociationMode};
use crate::birth::{SlcBirthModel, SpatialTable};
use crate::error::{Error, Result};
use crate::glmb::{self, birth_child, check_birth_labels, predict_table, GlmbDensity, HypothesisKey, NORMALIZATION_TOL};
use crate::hypothesis::{HypothesisIndex, IndexStep};
use crate::lrfs::{Label, LabelSet};
use crate::numeric::{log_sum_exp, NORMALIZER_FLOOR};
use crate::single_target::{GaussianComponent, MotionModel, SensorModel, SpatialPdf};

/// Correlation weights `α_o^L` of one label set.
pub type CorrelationWeights = BTreeMap<HypothesisIndex, f64>;

#[derive(Clone, Debug)]
pub struct SlcDensity {
    label_weight: BTreeMap<LabelSet, f64>,
    correlation_weight: BTreeMap<LabelSet, CorrelationWeights>,
    spatial: BTreeMap<HypothesisIndex, SpatialTable>,
    label_universe: LabelSet,
}

/// Estimated label set and one kinematic state per label.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub labels: LabelSet,
    pub states: BTreeMap<Label, DVector<f64>>,
}

impl Estimate {
    pub fn empty() -> Self {
        Estimate {
            labels: LabelSet::empty(),
            states: BTreeMap::new(),
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (l, x)) in self.states.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}: {:.3?}", x.as_slice())?;
        }
        f.write_str("}")
    }
}

impl SlcDensity {
    pub fn empty_scene() -> Self {
        from_glmb(&GlmbDensity::empty_scene())
    }

    /// Validates the quadruple; zero label-set weights are dropped.
    pub fn new(
        label_weight: BTreeMap<LabelSet, f64>,
        correlation_weight: BTreeMap<LabelSet, CorrelationWeights>,
        spatial: BTreeMap<HypothesisIndex, SpatialTable>,
        label_universe: LabelSet,
    ) -> Result<Self> {
        let label_weight: BTreeMap<LabelSet, f64> = label_weight.into_iter().filter(|(_, w)| *w != 0.0).collect();
        let total: f64 = label_weight.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidModel(format!("label-set weights sum to {total}")));
        }
        for (set, w) in &label_weight {
            if !(*w > 0.0 && *w <= 1.0 + NORMALIZATION_TOL) {
                return Err(Error::InvalidModel(format!("weight {w} of {set}")));
            }
            if !set.is_subset(&label_universe) {
                return Err(Error::InvalidModel(format!("label set {set} outside universe {label_universe}")));
            }
            let alpha = correlation_weight
                .get(set)
                .ok_or_else(|| Error::InvalidModel(format!("no correlation weights for {set}")))?;
            if alpha.values().any(|a| !(*a >= 0.0)) || (alpha.values().sum::<f64>() - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidModel(format!("correlation weights of {set} are not a probability vector")));
            }
            for (o, a) in alpha {
                if *a == 0.0 {
                    continue;
                }
                for l in set {
                    if spatial.get(o).and_then(|t| t.get(l)).is_none() {
                        return Err(Error::InvalidModel(format!("no spatial density for {l} under {o}")));
                    }
                }
            }
        }
        let correlation_weight = correlation_weight
            .into_iter()
            .filter(|(set, _)| label_weight.contains_key(set))
            .map(|(set, a)| (set, a.into_iter().filter(|(_, a)| *a > 0.0).collect()))
            .collect();
        let mut d = SlcDensity {
            label_weight,
            correlation_weight,
            spatial,
            label_universe,
        };
        d.collect_spatial();
        Ok(d)
    }

    pub fn label_weights(&self) -> &BTreeMap<LabelSet, f64> {
        &self.label_weight
    }

    /// `ω(L)`; zero outside the support.
    pub fn label_weight(&self, set: &LabelSet) -> f64 {
        self.label_weight.get(set).copied().unwrap_or(0.0)
    }

    pub fn correlation_weights(&self) -> &BTreeMap<LabelSet, CorrelationWeights> {
        &self.correlation_weight
    }

    /// `α_o^L`; zero outside the support.
    pub fn correlation_weight(&self, o: &HypothesisIndex, set: &LabelSet) -> f64 {
        self.correlation_weight.get(set).and_then(|a| a.get(o)).copied().unwrap_or(0.0)
    }

    pub fn spatial(&self) -> &BTreeMap<HypothesisIndex, SpatialTable> {
        &self.spatial
    }

    pub fn label_universe(&self) -> &LabelSet {
        &self.label_universe
    }

    /// `ω(L)·α_o^L` for every supported pair.
    pub fn joint_weights(&self) -> BTreeMap<HypothesisKey, f64> {
        let mut out = BTreeMap::new();
        for (set, w) in &self.label_weight {
            for (o, a) in &self.correlation_weight[set] {
                out.insert((o.clone(), set.clone()), w * a);
            }
        }
        out
    }

    pub fn num_hypotheses(&self) -> usize {
        self.correlation_weight.values().map(|a| a.len()).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.label_weight.values().sum()
    }

    /// Largest `|Σ_o α_o^L − 1|` over the support.
    pub fn correlation_residual(&self) -> f64 {
        self.correlation_weight
            .values()
            .map(|a| (a.values().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Marginal spatial density `Σ_o α_o^L s^o_l` of label `l` given `L`.
    pub fn marginal(&self, set: &LabelSet, l: &Label) -> Option<SpatialPdf> {
        let alpha = self.correlation_weight.get(set)?;
        if !set.contains(l) {
            return None;
        }
        let mut comps = Vec::new();
        for (o, a) in alpha {
            for c in self.spatial[o][l].components() {
                comps.push(GaussianComponent {
                    weight: a * c.weight,
                    ..c.clone()
                });
            }
        }
        SpatialPdf::new(comps).ok()
    }

    /// The density conditioned on the label set being exactly `set`.
    pub fn conditioned_on(&self, set: &LabelSet) -> Result<SlcDensity> {
        let alpha = self
            .correlation_weight
            .get(set)
            .ok_or_else(|| Error::UnsupportedDensity(format!("label set {set} has zero weight")))?;
        let mut d = SlcDensity {
            label_weight: BTreeMap::from([(set.clone(), 1.0)]),
            correlation_weight: BTreeMap::from([(set.clone(), alpha.clone())]),
            spatial: self.spatial.clone(),
            label_universe: self.label_universe.clone(),
        };
        d.collect_spatial();
        Ok(d)
    }

    fn collect_spatial(&mut self) {
        let live: std::collections::BTreeSet<&HypothesisIndex> =
            self.correlation_weight.values().flat_map(|a| a.keys()).collect();
        self.spatial.retain(|o, _| live.contains(o));
    }
}

/// `ω(L) = Σ_o ω^o(L)`, `α_o^L = ω^o(L)/ω(L)`.
pub fn from_glmb(d: &GlmbDensity) -> SlcDensity {
    let mut label_weight: BTreeMap<LabelSet, f64> = BTreeMap::new();
    for ((_, set), w) in d.weights() {
        *label_weight.entry(set.clone()).or_insert(0.0) += w;
    }
    let mut correlation_weight: BTreeMap<LabelSet, CorrelationWeights> = BTreeMap::new();
    for ((o, set), w) in d.weights() {
        correlation_weight
            .entry(set.clone())
            .or_default()
            .insert(o.clone(), w / label_weight[set]);
    }
    SlcDensity {
        label_weight,
        correlation_weight,
        spatial: d.spatial().clone(),
        label_universe: d.label_universe().clone(),
    }
}

/// `ω^o(L) = ω(L)·α_o^L`.
pub fn to_glmb(d: &SlcDensity) -> GlmbDensity {
    GlmbDensity::from_parts(d.joint_weights(), d.spatial.clone(), d.label_universe.clone())
}

/// The birth model as an SLC density: `ω(L)` is the LMB weight, `α_i^L` the
/// model's component weights. A single-component model gives an LMB density.
pub fn slc_birth_density(model: &SlcBirthModel) -> SlcDensity {
    time_update_inner(&SlcDensity::empty_scene(), None, model).expect("birth from an empty scene")
}

/// Time update on the quadruple.
///
/// Survivors: `ω̃(J) = Σ_L ω(L) Σ_o ω^{S,o}(J|L) α_o^L` and
/// `α̃_o^J = Σ_L ω(L) ω^{S,o}(J|L) α_o^L / ω̃(J)`.
/// Births then give `ω(J ∪ B) = ω_B(B) ω̃(J)` and
/// `α_{(o,i)}^{J∪B} = α_i^B α̃_o^J`.
pub fn time_update(prior: &SlcDensity, motion: &MotionModel, birth: &SlcBirthModel) -> Result<SlcDensity> {
    time_update_inner(prior, Some(motion), birth)
}

fn time_update_inner(prior: &SlcDensity, motion: Option<&MotionModel>, birth: &SlcBirthModel) -> Result<SlcDensity> {
    check_birth_labels(&prior.label_universe, birth)?;
    let mut predicted: BTreeMap<HypothesisIndex, SpatialTable> = BTreeMap::new();
    if let Some(motion) = motion {
        for (o, table) in &prior.spatial {
            predicted.insert(o.clone(), predict_table(table, motion)?);
        }
    }

    let mut surv_weight: BTreeMap<LabelSet, f64> = BTreeMap::new();
    let mut surv_alpha: BTreeMap<LabelSet, CorrelationWeights> = BTreeMap::new();
    let empty = SpatialTable::new();
    for (set, w) in &prior.label_weight {
        for (o, a) in &prior.correlation_weight[set] {
            let table = prior.spatial.get(o).unwrap_or(&empty);
            let mut check = 0.0;
            for j in set.subsets() {
                let t = match motion {
                    Some(m) => glmb::log_survival_transition(table, m, set, &j).exp(),
                    None if j.is_empty() => 1.0,
                    None => 0.0,
                };
                check += t;
                if t > 0.0 {
                    let mass = w * a * t;
                    *surv_weight.entry(j.clone()).or_insert(0.0) += mass;
                    *surv_alpha.entry(j).or_default().entry(o.clone()).or_insert(0.0) += mass;
                }
            }
            if (check - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::DegenerateNormalizer("survival transition"));
            }
        }
    }

    let birth_sets = birth_sets(birth);
    let mut label_weight = BTreeMap::new();
    let mut correlation_weight: BTreeMap<LabelSet, CorrelationWeights> = BTreeMap::new();
    let mut spatial: BTreeMap<HypothesisIndex, SpatialTable> = BTreeMap::new();
    for (j, wj) in &surv_weight {
        if *wj <= 0.0 {
            continue;
        }
        let alpha_j = &surv_alpha[j];
        for (plus, wb, alpha_b) in &birth_sets {
            let set = j.union(plus);
            label_weight.insert(set.clone(), wb * wj);
            let entry = correlation_weight.entry(set).or_default();
            for (o, mass) in alpha_j {
                let a = mass / wj;
                for (i, ab) in alpha_b {
                    let child = birth_child(o, birth, *i);
                    entry.insert(child.clone(), ab * a);
                    spatial.entry(child).or_insert_with(|| {
                        let mut t = predicted.get(o).cloned().unwrap_or_default();
                        t.extend(birth.spatial(*i).iter().map(|(l, s)| (*l, Arc::clone(s))));
                        t
                    });
                }
            }
        }
    }
    let total: f64 = label_weight.values().sum();
    if !(total >= NORMALIZER_FLOOR) {
        return Err(Error::DegenerateNormalizer("time update"));
    }
    for w in label_weight.values_mut() {
        *w /= total;
    }
    let mut d = SlcDensity {
        label_weight,
        correlation_weight,
        spatial,
        label_universe: prior.label_universe.union(birth.labels()),
    };
    d.collect_spatial();
    Ok(d)
}

/// `(B, ω_B(B), [(i, α_i^B)])` for every birth label set of positive weight.
fn birth_sets(birth: &SlcBirthModel) -> Vec<(LabelSet, f64, Vec<(usize, f64)>)> {
    let mut out: Vec<(LabelSet, f64, Vec<(usize, f64)>)> = Vec::new();
    for (set, i, _) in birth.glmb_terms() {
        let a = birth.alpha(&set)[i];
        match out.last_mut() {
            Some(last) if last.0 == set => last.2.push((i, a)),
            _ => {
                let w = birth.label_weight(&set);
                out.push((set, w, vec![(i, a)]));
            }
        }
    }
    out
}

pub fn measurement_update(predicted: &SlcDensity, sensor: &SensorModel, measurements: &[DVector<f64>]) -> Result<SlcDensity> {
    measurement_update_with(predicted, sensor, measurements, AssociationMode::default())
}

/// Measurement update on the quadruple:
/// `ω(L) ∝ ω(L) Σ_o α_o^L Σ_θ r^{(o,θ)}(L)` and
/// `α_{(o,θ)}^L ∝ α_o^L r^{(o,θ)}(L)`, where `r` is the product of the
/// per-label detection functionals under `θ`.
pub fn measurement_update_with(
    predicted: &SlcDensity,
    sensor: &SensorModel,
    measurements: &[DVector<f64>],
    mode: AssociationMode,
) -> Result<SlcDensity> {
    let scores = score_table(&predicted.spatial, sensor, measurements)?;
    let no_scores = BTreeMap::new();
    let mut log_label = BTreeMap::new();
    let mut correlation_weight = BTreeMap::new();
    let mut spatial: BTreeMap<HypothesisIndex, SpatialTable> = BTreeMap::new();
    for (set, w) in &predicted.label_weight {
        let mut terms: Vec<(HypothesisIndex, f64)> = Vec::new();
        for (o, a) in &predicted.correlation_weight[set] {
            let per_label = scores.get(o).unwrap_or(&no_scores);
            for (theta, ls) in associations(set, per_label, measurements.len(), mode)? {
                let child = o.child(IndexStep::Scan(theta.clone()));
                let table = spatial.entry(child.clone()).or_default();
                for l in set {
                    table.entry(*l).or_insert_with(|| {
                        let j = theta.get(l) as usize;
                        Arc::clone(per_label[l].posterior[j].as_ref().expect("usable association"))
                    });
                }
                terms.push((child, a.ln() + ls));
            }
        }
        if terms.is_empty() {
            continue;
        }
        let lse = log_sum_exp(terms.iter().map(|t| t.1));
        if lse == f64::NEG_INFINITY {
            continue;
        }
        let alpha: CorrelationWeights = terms
            .into_iter()
            .map(|(o, lr)| (o, (lr - lse).exp()))
            .filter(|(_, a)| *a > 0.0)
            .collect();
        log_label.insert(set.clone(), w.ln() + lse);
        correlation_weight.insert(set.clone(), alpha);
    }
    let label_weight = glmb::normalize_log(log_label, "measurement update")?;
    correlation_weight.retain(|set, _| label_weight.contains_key(set));
    let mut d = SlcDensity {
        label_weight,
        correlation_weight,
        spatial,
        label_universe: predicted.label_universe.clone(),
    };
    d.collect_spatial();
    Ok(d)
}

/// Pruning on the joint weights `ω(L)·α_o^L`, with the same selection rule
/// as [`glmb::prune_truncate`].
pub fn prune_truncate(d: &SlcDensity, min_weight: f64, max_hypotheses: usize) -> Result<SlcDensity> {
    Ok(from_glmb(&glmb::prune_truncate(&to_glmb(d), min_weight, max_hypotheses)?))
}

fn map_label_set(d: &SlcDensity) -> Option<(&LabelSet, f64)> {
    let mut best: Option<(&LabelSet, f64)> = None;
    for (set, w) in &d.label_weight {
        if best.is_none_or(|(_, bw)| *w > bw) {
            best = Some((set, *w));
        }
    }
    best
}

/// MAP label set, then for each of its labels the mode of the marginal
/// mixture `Σ_o α_o^L s^o_l`.
pub fn estimate_states(d: &SlcDensity) -> Estimate {
    let Some((set, _)) = map_label_set(d) else {
        return Estimate::empty();
    };
    let states = set
        .iter()
        .map(|l| (*l, d.marginal(set, l).expect("supported label").mode()))
        .collect();
    Estimate {
        labels: set.clone(),
        states,
    }
}

/// MAP label set, then the single most probable hypothesis for it and the
/// modes of that hypothesis's densities. Approximates [`estimate_states`]
/// when one hypothesis dominates `α^L`.
pub fn estimate_states_mht(d: &SlcDensity) -> Estimate {
    let Some((set, _)) = map_label_set(d) else {
        return Estimate::empty();
    };
    let o = dominant_hypothesis(&d.correlation_weight[set]);
    let states = set.iter().map(|l| (*l, d.spatial[o][l].mode())).collect();
    Estimate {
        labels: set.clone(),
        states,
    }
}

/// `argmax_o α_o`; ties go to the smaller index.
pub fn dominant_hypothesis(alpha: &CorrelationWeights) -> &HypothesisIndex {
    let mut best: Option<(&HypothesisIndex, f64)> = None;
    for (o, a) in alpha {
        if best.is_none_or(|(_, b)| *a > b) {
            best = Some((o, *a));
        }
    }
    best.expect("nonempty correlation weights").0
}

/// Largest differences between an SLC density and a classical one.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct Discrepancy {
    /// Largest `|ω(L)·α_o^L − ω^o(L)|` over the union of supports.
    pub weight: f64,
    /// Largest difference of any mixture weight, mean or covariance entry;
    /// infinite when the component structure differs.
    pub spatial: f64,
}

impl Discrepancy {
    pub fn within(&self, tol: f64) -> bool {
        self.weight <= tol && self.spatial <= tol
    }
}

pub fn compare_with_glmb(slc: &SlcDensity, glmb: &GlmbDensity) -> Discrepancy {
    let joint = slc.joint_weights();
    let mut weight: f64 = 0.0;
    for (k, w) in &joint {
        weight = weight.max((w - glmb.weights().get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, w) in glmb.weights() {
        if !joint.contains_key(k) {
            weight = weight.max(*w);
        }
    }
    let mut used: BTreeMap<&HypothesisIndex, LabelSet> = BTreeMap::new();
    for (o, set) in joint.keys().filter(|k| glmb.weights().contains_key(*k)) {
        let entry = used.entry(o).or_insert_with(LabelSet::empty);
        for l in set {
            entry.insert(*l);
        }
    }
    let mut spatial: f64 = 0.0;
    for (o, labels) in used {
        for l in labels.iter() {
            let a = &slc.spatial[o][l];
            let b = &glmb.spatial()[o][l];
            if !Arc::ptr_eq(a, b) {
                spatial = spatial.max(pdf_difference(a, b));
            }
        }
    }
    Discrepancy { weight, spatial }
}

pub fn pdf_difference(a: &SpatialPdf, b: &SpatialPdf) -> f64 {
    if a.components().len() != b.components().len() || a.dim() != b.dim() {
        return f64::INFINITY;
    }
    a.components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| {
            let dw = (x.weight - y.weight).abs();
            let dm = (&x.mean - &y.mean).amax();
            let dc = (&x.covariance - &y.covariance).amax();
            dw.max(dm).max(dc)
        })
        .fold(0.0, f64::max)
}
