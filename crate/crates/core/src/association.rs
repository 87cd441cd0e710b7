//! Measurement-to-track association enumeration and per-label scores.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::assignment;
use crate::birth::SpatialTable;
use crate::error::{Error, Result};
use crate::hypothesis::{HypothesisIndex, Mta};
use crate::lrfs::{Label, LabelSet};
use crate::numeric::LOG_NORMALIZER_FLOOR;
use crate::single_target::{detection_update, Assignment, SensorModel, SpatialPdf};

/// How associations are generated for each prior hypothesis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AssociationMode {
    /// Every association; fails with `CombinatorialCap` beyond `cap` per label set.
    Exhaustive { cap: usize },
    /// The `per_hypothesis` best associations by ranked assignment.
    Ranked { per_hypothesis: usize },
}

impl Default for AssociationMode {
    fn default() -> Self {
        AssociationMode::Exhaustive { cap: 1 << 20 }
    }
}

/// Number of associations of `n` labels with `m` measurements:
/// `Σ_j C(n,j) C(m,j) j!`.
pub fn mta_count(n: usize, m: usize) -> u128 {
    (0..=n.min(m))
        .map(|j| binomial(n, j) * binomial(m, j) * (1..=j as u128).product::<u128>())
        .sum()
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Every association of `labels` with `num_measurements` measurements.
pub fn enumerate_mtas(labels: &LabelSet, num_measurements: usize, cap: usize) -> Result<Vec<Mta>> {
    let count = mta_count(labels.len(), num_measurements);
    if count > cap as u128 {
        return Err(Error::CombinatorialCap { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut used = vec![false; num_measurements + 1];
    let mut cur = Vec::with_capacity(labels.len());
    extend(labels.as_slice(), &mut used, &mut cur, &mut out);
    Ok(out)
}

fn extend(rest: &[Label], used: &mut [bool], cur: &mut Vec<(Label, u32)>, out: &mut Vec<Mta>) {
    let Some((&l, tail)) = rest.split_first() else {
        out.push(Mta::from_pairs(cur.iter().copied()).expect("injective by construction"));
        return;
    };
    extend(tail, used, cur, out);
    for j in 1..used.len() {
        if !used[j] {
            used[j] = true;
            cur.push((l, j as u32));
            extend(tail, used, cur, out);
            cur.pop();
            used[j] = false;
        }
    }
}

/// Log detection functionals and updated densities of one label under one
/// hypothesis, for "missed" (slot 0) and each measurement (slot j).
#[derive(Clone, Debug)]
pub(crate) struct LabelScores {
    pub log_score: Vec<f64>,
    pub posterior: Vec<Option<Arc<SpatialPdf>>>,
}

impl LabelScores {
    fn usable(&self, j: usize) -> bool {
        self.log_score[j] >= LOG_NORMALIZER_FLOOR && self.posterior[j].is_some()
    }
}

pub(crate) type ScoreTable = BTreeMap<HypothesisIndex, BTreeMap<Label, LabelScores>>;

/// Scores every label of every hypothesis against every measurement.
pub(crate) fn score_table(
    spatial: &BTreeMap<HypothesisIndex, SpatialTable>,
    sensor: &SensorModel,
    measurements: &[DVector<f64>],
) -> Result<ScoreTable> {
    let mut table = ScoreTable::new();
    for (o, labels) in spatial {
        let mut per_label = BTreeMap::new();
        for (l, pdf) in labels {
            let mut log_score = Vec::with_capacity(measurements.len() + 1);
            let mut posterior = Vec::with_capacity(measurements.len() + 1);
            let (lm, _) = detection_update(pdf, sensor, Assignment::Missed, false)?;
            log_score.push(lm);
            posterior.push((lm >= LOG_NORMALIZER_FLOOR).then(|| Arc::clone(pdf)));
            for z in measurements {
                let (ls, post) = detection_update(pdf, sensor, Assignment::Measurement(z), true)?;
                log_score.push(ls);
                posterior.push(post.map(Arc::new));
            }
            per_label.insert(*l, LabelScores { log_score, posterior });
        }
        table.insert(o.clone(), per_label);
    }
    Ok(table)
}

/// Admissible associations of `set` with their summed log scores.
///
/// An association is dropped when any of its per-label functionals falls
/// below the normalizer floor.
pub(crate) fn associations(
    set: &LabelSet,
    scores: &BTreeMap<Label, LabelScores>,
    num_measurements: usize,
    mode: AssociationMode,
) -> Result<Vec<(Mta, f64)>> {
    match mode {
        AssociationMode::Exhaustive { cap } => {
            let mut out = Vec::new();
            for theta in enumerate_mtas(set, num_measurements, cap)? {
                let mut total = 0.0;
                let mut ok = true;
                for l in set {
                    let j = theta.get(l) as usize;
                    let s = &scores[l];
                    if !s.usable(j) {
                        ok = false;
                        break;
                    }
                    total += s.log_score[j];
                }
                if ok {
                    out.push((theta, total));
                }
            }
            Ok(out)
        }
        AssociationMode::Ranked { per_hypothesis } => {
            let n = set.len();
            let m = num_measurements;
            let labels = set.as_slice();
            let cost: Vec<Vec<f64>> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let s = &scores[l];
                    let mut row = vec![f64::INFINITY; m + n];
                    for j in 1..=m {
                        if s.usable(j) {
                            row[j - 1] = -s.log_score[j];
                        }
                    }
                    if s.usable(0) {
                        row[m + i] = -s.log_score[0];
                    }
                    row
                })
                .collect();
            let ranked = assignment::k_best(&cost, per_hypothesis);
            Ok(ranked
                .into_iter()
                .map(|(cols, total)| {
                    let pairs = cols
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| (labels[i], if c < m { c as u32 + 1 } else { 0 }));
                    (Mta::from_pairs(pairs).expect("assignment is injective"), -total)
                })
                .collect())
        }
    }
}
