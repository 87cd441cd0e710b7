//! Generalized labeled multi-Bernoulli densities in their classical
//! `(index, label set) -> weight` form, with the exact time- and
//! measurement-update recursions.
//!
//! Hypothesis weights are combined in the log domain and normalized once per
//! update with a log-sum-exp over the (sorted) hypothesis keys, so the result
//! does not depend on evaluation order.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::association::{associations, score_table, AssociationMode};
use crate::birth::{SlcBirthModel, SpatialTable};
use crate::error::{Error, Result};
use crate::hypothesis::{HypothesisIndex, IndexStep};
use crate::lrfs::LabelSet;
use crate::numeric::{ln0, log_sum_exp, LOG_NORMALIZER_FLOOR};
use crate::single_target::{predict_pdf, survival_mass, MotionModel, SensorModel};

/// Tolerance on `|Σ ω - 1|` accepted when a density is constructed.
pub const NORMALIZATION_TOL: f64 = 1e-9;

pub type HypothesisKey = (HypothesisIndex, LabelSet);

/// Classical GLMB density `{ω^o(L), s^o_l}`.
#[derive(Clone, Debug)]
pub struct GlmbDensity {
    weights: BTreeMap<HypothesisKey, f64>,
    spatial: BTreeMap<HypothesisIndex, SpatialTable>,
    label_universe: LabelSet,
}

impl GlmbDensity {
    /// The target-free density `f(∅) = 1`.
    pub fn empty_scene() -> Self {
        GlmbDensity {
            weights: BTreeMap::from([((HypothesisIndex::root(), LabelSet::empty()), 1.0)]),
            spatial: BTreeMap::new(),
            label_universe: LabelSet::empty(),
        }
    }

    /// Checks the density invariants; zero-weight entries are dropped.
    pub fn new(
        weights: BTreeMap<HypothesisKey, f64>,
        spatial: BTreeMap<HypothesisIndex, SpatialTable>,
        label_universe: LabelSet,
    ) -> Result<Self> {
        let mut total = 0.0;
        for ((o, set), w) in &weights {
            if !(0.0..=1.0 + NORMALIZATION_TOL).contains(w) {
                return Err(Error::InvalidModel(format!("weight {w} of hypothesis {o} {set}")));
            }
            if *w == 0.0 {
                continue;
            }
            if !set.is_subset(&label_universe) {
                return Err(Error::InvalidModel(format!("label set {set} outside universe {label_universe}")));
            }
            for l in set {
                if spatial.get(o).and_then(|t| t.get(l)).is_none() {
                    return Err(Error::InvalidModel(format!("no spatial density for {l} under {o}")));
                }
            }
            total += w;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidModel(format!("weights sum to {total}")));
        }
        let weights = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
        Ok(GlmbDensity {
            weights,
            spatial,
            label_universe,
        })
    }

    /// Builds from unnormalized log weights, normalizing with log-sum-exp.
    pub(crate) fn from_log_weights(
        log_weights: BTreeMap<HypothesisKey, f64>,
        spatial: BTreeMap<HypothesisIndex, SpatialTable>,
        label_universe: LabelSet,
        context: &'static str,
    ) -> Result<Self> {
        let weights = normalize_log(log_weights, context)?;
        let mut d = GlmbDensity {
            weights,
            spatial,
            label_universe,
        };
        d.collect_spatial();
        Ok(d)
    }

    /// Assembles already-normalized parts without validation.
    pub(crate) fn from_parts(
        weights: BTreeMap<HypothesisKey, f64>,
        spatial: BTreeMap<HypothesisIndex, SpatialTable>,
        label_universe: LabelSet,
    ) -> Self {
        let mut d = GlmbDensity {
            weights,
            spatial,
            label_universe,
        };
        d.collect_spatial();
        d
    }

    pub fn weights(&self) -> &BTreeMap<HypothesisKey, f64> {
        &self.weights
    }

    /// `ω^o(L)`; zero outside the support.
    pub fn weight(&self, o: &HypothesisIndex, set: &LabelSet) -> f64 {
        self.weights.get(&(o.clone(), set.clone())).copied().unwrap_or(0.0)
    }

    pub fn spatial(&self) -> &BTreeMap<HypothesisIndex, SpatialTable> {
        &self.spatial
    }

    pub fn label_universe(&self) -> &LabelSet {
        &self.label_universe
    }

    pub fn num_hypotheses(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Drops spatial tables of indices no longer referenced.
    fn collect_spatial(&mut self) {
        let live: std::collections::BTreeSet<&HypothesisIndex> = self.weights.keys().map(|(o, _)| o).collect();
        self.spatial.retain(|o, _| live.contains(o));
    }
}

pub(crate) fn normalize_log<K: Ord + Clone>(log_weights: BTreeMap<K, f64>, context: &'static str) -> Result<BTreeMap<K, f64>> {
    let total = log_sum_exp(log_weights.values().copied());
    if !(total >= LOG_NORMALIZER_FLOOR) {
        return Err(Error::DegenerateNormalizer(context));
    }
    Ok(log_weights
        .into_iter()
        .filter(|(_, lw)| *lw > f64::NEG_INFINITY)
        .map(|(k, lw)| (k, (lw - total).exp()))
        .filter(|(_, w)| *w > 0.0)
        .collect())
}

/// Log of the survivor transition `ω^{S,o}(J | L)`: every label of `L` in `J`
/// survives, every other label of `L` dies. `-inf` unless `J ⊆ L`.
pub fn log_survival_transition(table: &SpatialTable, motion: &MotionModel, prior: &LabelSet, survivors: &LabelSet) -> f64 {
    if !survivors.is_subset(prior) {
        return f64::NEG_INFINITY;
    }
    prior
        .iter()
        .map(|l| {
            let p = survival_mass(&table[l], motion);
            if survivors.contains(l) {
                ln0(p)
            } else {
                ln0(1.0 - p)
            }
        })
        .sum()
}

/// Inner time-update weights `ω̃^o(J) = Σ_L ω^o(L) ω^{S,o}(J|L)`.
///
/// No label-set indicator factor is applied; the weights sum to one
/// over `(o, J)`.
pub fn survivor_weights(prior: &GlmbDensity, motion: &MotionModel) -> BTreeMap<HypothesisKey, f64> {
    let mut out: BTreeMap<HypothesisKey, f64> = BTreeMap::new();
    let empty = SpatialTable::new();
    for ((o, set), w) in &prior.weights {
        let table = prior.spatial.get(o).unwrap_or(&empty);
        for j in set.subsets() {
            let t = log_survival_transition(table, motion, set, &j).exp();
            if t > 0.0 {
                *out.entry((o.clone(), j)).or_insert(0.0) += w * t;
            }
        }
    }
    out
}

/// Predicted spatial densities of one hypothesis; labels whose survival mass
/// is below the floor are left out (they carry zero weight).
pub(crate) fn predict_table(table: &SpatialTable, motion: &MotionModel) -> Result<SpatialTable> {
    let mut out = SpatialTable::new();
    for (l, s) in table {
        if ln0(survival_mass(s, motion)) >= LOG_NORMALIZER_FLOOR {
            out.insert(*l, Arc::new(predict_pdf(s, motion)?));
        }
    }
    Ok(out)
}

/// Index of a child hypothesis after adding birth component `i`; single
/// component births keep the parent index.
pub(crate) fn birth_child(o: &HypothesisIndex, birth: &SlcBirthModel, i: usize) -> HypothesisIndex {
    if birth.is_lmb() {
        o.clone()
    } else {
        o.child(IndexStep::Birth(i as u32))
    }
}

pub(crate) fn check_birth_labels(universe: &LabelSet, birth: &SlcBirthModel) -> Result<()> {
    match birth.labels().iter().find(|l| universe.contains(l)) {
        Some(l) => Err(Error::LabelCollision(*l)),
        None => Ok(()),
    }
}

/// Time update: `ω^{o'}(L) = ω_B^i(L⁺) ω̃^o(L⁻)` with surviving densities
/// Kalman-predicted and newborn densities taken from the birth model.
pub fn time_update(prior: &GlmbDensity, motion: &MotionModel, birth: &SlcBirthModel) -> Result<GlmbDensity> {
    check_birth_labels(&prior.label_universe, birth)?;
    let survivors = survivor_weights(prior, motion);

    let mut predicted: BTreeMap<HypothesisIndex, SpatialTable> = BTreeMap::new();
    for o in prior.spatial.keys() {
        predicted.insert(o.clone(), predict_table(&prior.spatial[o], motion)?);
    }

    let birth_terms = birth.glmb_terms();
    let mut log_weights = BTreeMap::new();
    let mut spatial: BTreeMap<HypothesisIndex, SpatialTable> = BTreeMap::new();
    for ((o, j), w) in &survivors {
        let lw = w.ln();
        for (plus, i, bw) in &birth_terms {
            let child = birth_child(o, birth, *i);
            log_weights.insert((child.clone(), j.union(plus)), lw + bw.ln());
            spatial.entry(child).or_insert_with(|| {
                let mut t = predicted.get(o).cloned().unwrap_or_default();
                t.extend(birth.spatial(*i).iter().map(|(l, s)| (*l, Arc::clone(s))));
                t
            });
        }
    }
    let universe = prior.label_universe.union(birth.labels());
    GlmbDensity::from_log_weights(log_weights, spatial, universe, "time update")
}

/// Measurement update with exhaustive association enumeration.
pub fn measurement_update(predicted: &GlmbDensity, sensor: &SensorModel, measurements: &[DVector<f64>]) -> Result<GlmbDensity> {
    measurement_update_with(predicted, sensor, measurements, AssociationMode::default())
}

/// Measurement update: each `(o, L)` spawns `((o, θ), L)` for every admissible
/// association `θ` of `L`, weighted by `ω^o(L) ∏_{l∈L} s^o_l[L^θ]`.
///
/// Associations that assign a measurement to a label outside `L` have
/// `λ^θ(L) = 0` and are never generated.
pub fn measurement_update_with(
    predicted: &GlmbDensity,
    sensor: &SensorModel,
    measurements: &[DVector<f64>],
    mode: AssociationMode,
) -> Result<GlmbDensity> {
    let scores = score_table(&predicted.spatial, sensor, measurements)?;
    let no_scores = BTreeMap::new();
    let mut log_weights = BTreeMap::new();
    let mut spatial: BTreeMap<HypothesisIndex, SpatialTable> = BTreeMap::new();
    for ((o, set), w) in &predicted.weights {
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
            log_weights.insert((child, set.clone()), w.ln() + ls);
        }
    }
    GlmbDensity::from_log_weights(log_weights, spatial, predicted.label_universe.clone(), "measurement update")
}

/// Drops hypotheses below `min_weight`, keeps the `max_hypotheses` heaviest
/// (ties go to the smaller key) and renormalizes.
pub fn prune_truncate(d: &GlmbDensity, min_weight: f64, max_hypotheses: usize) -> Result<GlmbDensity> {
    let kept = select_top(d.weights.iter().map(|(k, w)| (k, *w)), min_weight, max_hypotheses);
    if kept.is_empty() {
        return Err(Error::EmptyDensity);
    }
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    let weights: BTreeMap<HypothesisKey, f64> = kept.into_iter().map(|(k, w)| (k.clone(), w / total)).collect();
    let mut out = GlmbDensity {
        weights,
        spatial: d.spatial.clone(),
        label_universe: d.label_universe.clone(),
    };
    out.collect_spatial();
    Ok(out)
}

/// Weights agreeing to within this relative amount rank as equal.
const RANK_RESOLUTION: f64 = 1e-10;

/// Keeps entries of weight at least `min_weight`, the `max` heaviest first.
/// Ranking uses the log weight in bins of [`RANK_RESOLUTION`], ties going
/// to the smaller key, so rounding-level noise cannot reorder the cut.
pub(crate) fn select_top<K: Ord>(entries: impl Iterator<Item = (K, f64)>, min_weight: f64, max: usize) -> Vec<(K, f64)> {
    let rank = |w: f64| (w.ln() / RANK_RESOLUTION).round() as i64;
    let mut v: Vec<(K, f64)> = entries.filter(|(_, w)| *w >= min_weight && *w > 0.0).collect();
    v.sort_by(|a, b| rank(b.1).cmp(&rank(a.1)).then_with(|| a.0.cmp(&b.0)));
    v.truncate(max);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birth::LmbBirth;
    use crate::hypothesis::Mta;
    use crate::lrfs::Label;
    use crate::single_target::{ClutterModel, SpatialPdf};
    use nalgebra::{dmatrix, dvector};

    fn l(i: u32) -> Label {
        Label::new(1, i)
    }

    fn motion(p_s: f64) -> MotionModel {
        MotionModel::new(dmatrix![1.0], dmatrix![0.5], p_s).unwrap()
    }

    fn sensor(p_d: f64) -> SensorModel {
        let clutter = ClutterModel::new(4.0, dvector![-20.0], dvector![20.0]).unwrap();
        SensorModel::new(dmatrix![1.0], dmatrix![1.0], p_d, clutter).unwrap()
    }

    fn birth(targets: &[(u32, f64, f64)]) -> SlcBirthModel {
        LmbBirth::new(
            targets
                .iter()
                .map(|&(i, q, m)| (l(i), q, SpatialPdf::gaussian(dvector![m], dmatrix![2.0]).unwrap())),
        )
        .unwrap()
        .into()
    }

    fn set(ids: &[u32]) -> LabelSet {
        ids.iter().map(|i| l(*i)).collect()
    }

    #[test]
    fn birth_from_empty_scene() {
        let d = time_update(&GlmbDensity::empty_scene(), &motion(0.9), &birth(&[(1, 0.4, 0.0)])).unwrap();
        let root = HypothesisIndex::root();
        assert!((d.weight(&root, &set(&[])) - 0.6).abs() < 1e-15);
        assert!((d.weight(&root, &set(&[1])) - 0.4).abs() < 1e-15);
        assert_eq!(d.num_hypotheses(), 2);
    }

    fn two_target_prior() -> GlmbDensity {
        let d = time_update(
            &GlmbDensity::empty_scene(),
            &motion(0.9),
            &birth(&[(1, 0.7, -3.0), (2, 0.5, 4.0)]),
        )
        .unwrap();
        let z = vec![dvector![-2.5], dvector![10.0]];
        measurement_update(&d, &sensor(0.8), &z).unwrap()
    }

    #[test]
    fn certain_survival_keeps_weights() {
        let prior = two_target_prior();
        let next = time_update(&prior, &motion(1.0), &SlcBirthModel::none()).unwrap();
        assert_eq!(next.num_hypotheses(), prior.num_hypotheses());
        for (k, w) in prior.weights() {
            assert!((next.weights()[k] - w).abs() < 1e-12);
        }
        let (o, _) = prior.weights().keys().find(|(_, s)| s.len() == 2).unwrap();
        let before = &prior.spatial()[o][&l(1)].components()[0];
        let after = &next.spatial()[o][&l(1)].components()[0];
        assert_eq!(after.mean, before.mean);
        assert!((after.covariance[(0, 0)] - before.covariance[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_survival_empties_the_scene() {
        let next = time_update(&two_target_prior(), &motion(0.0), &SlcBirthModel::none()).unwrap();
        let mass: f64 = next.weights().iter().filter(|((_, s), _)| s.is_empty()).map(|(_, w)| w).sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn survivor_weights_sum_to_one() {
        let prior = two_target_prior();
        for p_s in [0.0, 0.3, 0.95, 1.0] {
            let total: f64 = survivor_weights(&prior, &motion(p_s)).values().sum();
            assert!((total - 1.0).abs() < 1e-12, "p_S = {p_s}: {total}");
        }
    }

    #[test]
    fn label_collision_is_rejected() {
        let prior = two_target_prior();
        let err = time_update(&prior, &motion(0.9), &birth(&[(1, 0.3, 0.0)])).unwrap_err();
        assert!(matches!(err, Error::LabelCollision(x) if x == l(1)));
    }

    #[test]
    fn vacuous_measurement_update() {
        let prior = time_update(&GlmbDensity::empty_scene(), &motion(0.9), &birth(&[(1, 0.4, 0.0), (2, 0.3, 1.0)])).unwrap();
        let post = measurement_update(&prior, &sensor(0.0), &[]).unwrap();
        assert_eq!(post.num_hypotheses(), prior.num_hypotheses());
        for ((o, s), w) in prior.weights() {
            let child = o.child(IndexStep::Scan(Mta::empty()));
            assert!((post.weight(&child, s) - w).abs() < 1e-15);
            for lab in s {
                assert_eq!(post.spatial()[&child][lab], prior.spatial()[o][lab]);
            }
        }
    }

    #[test]
    fn single_target_single_measurement() {
        let root = HypothesisIndex::root();
        let pdf = Arc::new(SpatialPdf::gaussian(dvector![1.0], dmatrix![2.0]).unwrap());
        let prior = GlmbDensity::new(
            BTreeMap::from([((root.clone(), set(&[1])), 1.0)]),
            BTreeMap::from([(root.clone(), BTreeMap::from([(l(1), pdf)]))]),
            set(&[1]),
        )
        .unwrap();
        let z = dvector![2.0];
        let post = measurement_update(&prior, &sensor(0.8), &[z]).unwrap();
        assert_eq!(post.num_hypotheses(), 2);

        // (1 - p_D) vs p_D N(z; 1, 3) / κ with κ = 4/40
        let kappa = 0.1;
        let lik = (-(1.0f64).powi(2) / 6.0).exp() / (2.0 * std::f64::consts::PI * 3.0).sqrt();
        let missed = 0.2;
        let assigned = 0.8 * lik / kappa;
        let miss_idx = root.child(IndexStep::Scan(Mta::empty()));
        let hit_idx = root.child(IndexStep::Scan(Mta::from_pairs([(l(1), 1)]).unwrap()));
        let wm = post.weight(&miss_idx, &set(&[1]));
        let wh = post.weight(&hit_idx, &set(&[1]));
        assert!((wm - missed / (missed + assigned)).abs() < 1e-14);
        assert!((wh - assigned / (missed + assigned)).abs() < 1e-14);
    }

    #[test]
    fn assignments_outside_the_set_carry_no_weight() {
        let prior = two_target_prior();
        for (o, s) in prior.weights().keys() {
            if let Some(IndexStep::Scan(theta)) = o.steps().last() {
                assert!(theta.admissible_for(s));
            }
        }
        // the empty label set only ever pairs with the all-missed association
        let n_empty = prior.weights().keys().filter(|(_, s)| s.is_empty()).count();
        assert_eq!(n_empty, 1);
    }

    #[test]
    fn ranked_mode_keeps_the_best_associations() {
        let prior = time_update(&GlmbDensity::empty_scene(), &motion(0.9), &birth(&[(1, 0.7, -3.0), (2, 0.5, 4.0)])).unwrap();
        let z = vec![dvector![-2.5], dvector![3.0], dvector![0.0]];
        let full = measurement_update(&prior, &sensor(0.8), &z).unwrap();
        let ranked = measurement_update_with(&prior, &sensor(0.8), &z, AssociationMode::Ranked { per_hypothesis: 100 }).unwrap();
        assert_eq!(full.num_hypotheses(), ranked.num_hypotheses());
        for (k, w) in full.weights() {
            assert!((ranked.weights()[k] - w).abs() < 1e-12);
        }
        let top = measurement_update_with(&prior, &sensor(0.8), &z, AssociationMode::Ranked { per_hypothesis: 2 }).unwrap();
        assert!(top.num_hypotheses() <= 2 * prior.num_hypotheses());
        let best_full = full.weights().iter().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(top.weights().contains_key(best_full));
    }

    #[test]
    fn exhaustive_cap_surfaces_as_error() {
        let prior = time_update(&GlmbDensity::empty_scene(), &motion(0.9), &birth(&[(1, 0.7, -3.0), (2, 0.5, 4.0)])).unwrap();
        let z = vec![dvector![-2.5], dvector![3.0]];
        let err = measurement_update_with(&prior, &sensor(0.8), &z, AssociationMode::Exhaustive { cap: 3 }).unwrap_err();
        assert!(matches!(err, Error::CombinatorialCap { .. }));
    }

    #[test]
    fn prune_examples() {
        let root = HypothesisIndex::root();
        let pdf = Arc::new(SpatialPdf::gaussian(dvector![0.0], dmatrix![1.0]).unwrap());
        let table: SpatialTable = BTreeMap::from([(l(1), pdf.clone()), (l(2), pdf)]);
        let weights = BTreeMap::from([
            ((root.clone(), set(&[])), 0.1),
            ((root.clone(), set(&[1])), 0.7),
            ((root.clone(), set(&[1, 2])), 0.2),
        ]);
        let d = GlmbDensity::new(weights, BTreeMap::from([(root.clone(), table)]), set(&[1, 2])).unwrap();

        let same = prune_truncate(&d, 0.0, usize::MAX).unwrap();
        assert_eq!(same.num_hypotheses(), 3);
        for (k, w) in d.weights() {
            assert!((same.weights()[k] - w).abs() < 1e-15);
        }

        let top2 = prune_truncate(&d, 0.0, 2).unwrap();
        assert_eq!(top2.num_hypotheses(), 2);
        assert!((top2.weight(&root, &set(&[1])) - 0.7 / 0.9).abs() < 1e-15);
        assert!((top2.weight(&root, &set(&[1, 2])) - 0.2 / 0.9).abs() < 1e-15);

        assert!(matches!(prune_truncate(&d, 0.8, 10), Err(Error::EmptyDensity)));
    }

    #[test]
    fn prune_ties_prefer_smaller_keys() {
        let root = HypothesisIndex::root();
        let a = root.child(IndexStep::Birth(0));
        let b = root.child(IndexStep::Birth(1));
        let weights = BTreeMap::from([((b.clone(), set(&[])), 0.5), ((a.clone(), set(&[])), 0.5)]);
        let d = GlmbDensity::new(weights, BTreeMap::new(), LabelSet::empty()).unwrap();
        let top = prune_truncate(&d, 0.0, 1).unwrap();
        assert_eq!(top.weight(&a, &LabelSet::empty()), 1.0);
    }
}
