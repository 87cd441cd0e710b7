//! JSON snapshots of GLMB and SLC-GLMB densities.
//!
//! Labels are written as `[k, i]`. A hypothesis index is the list of its
//! steps from the initial density, each either `{"birth": i}` or
//! `{"scan": [[[k, i], j], ..]}` (measured labels only; others were missed).

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::birth::SpatialTable;
use crate::error::{Error, Result};
use crate::glmb::GlmbDensity;
use crate::hypothesis::{HypothesisIndex, IndexStep, Mta};
use crate::lrfs::{Label, LabelSet};
use crate::single_target::{GaussianComponent, SpatialPdf};
use crate::slc::SlcDensity;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRepr {
    Birth(u32),
    Scan(Vec<(Label, u32)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRepr {
    pub index: Vec<StepRepr>,
    pub labels: LabelSet,
    pub log_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRepr {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Row-major.
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialRepr {
    pub index: Vec<StepRepr>,
    pub label: Label,
    pub components: Vec<ComponentRepr>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelWeightRepr {
    pub labels: LabelSet,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationWeightRepr {
    pub labels: LabelSet,
    pub index: Vec<StepRepr>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema_version: u32,
    pub kind: String,
    pub step: u32,
    pub label_universe: LabelSet,
    pub hypotheses: Vec<HypothesisRepr>,
    pub spatial: Vec<SpatialRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_weight: Option<Vec<LabelWeightRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_weight: Option<Vec<CorrelationWeightRepr>>,
}

fn index_repr(o: &HypothesisIndex) -> Vec<StepRepr> {
    o.steps()
        .into_iter()
        .map(|s| match s {
            IndexStep::Birth(i) => StepRepr::Birth(*i),
            IndexStep::Scan(m) => StepRepr::Scan(m.assigned().to_vec()),
        })
        .collect()
}

fn index_from_repr(steps: &[StepRepr]) -> Result<HypothesisIndex> {
    let mut out = Vec::with_capacity(steps.len());
    for s in steps {
        out.push(match s {
            StepRepr::Birth(i) => IndexStep::Birth(*i),
            StepRepr::Scan(pairs) => IndexStep::Scan(
                Mta::from_pairs(pairs.iter().copied())
                    .ok_or_else(|| Error::InvalidModel("association in snapshot is not injective".into()))?,
            ),
        });
    }
    Ok(HypothesisIndex::from_steps(out))
}

fn pdf_repr(s: &SpatialPdf) -> Vec<ComponentRepr> {
    s.components()
        .iter()
        .map(|c| ComponentRepr {
            weight: c.weight,
            mean: c.mean.iter().copied().collect(),
            covariance: c.covariance.row_iter().map(|r| r.iter().copied().collect()).collect(),
        })
        .collect()
}

fn pdf_from_repr(comps: &[ComponentRepr]) -> Result<SpatialPdf> {
    let mut out = Vec::with_capacity(comps.len());
    for c in comps {
        let n = c.mean.len();
        if c.covariance.len() != n || c.covariance.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("covariance in snapshot does not match mean".into()));
        }
        out.push(GaussianComponent {
            weight: c.weight,
            mean: DVector::from_vec(c.mean.clone()),
            covariance: DMatrix::from_fn(n, n, |i, j| c.covariance[i][j]),
        });
    }
    SpatialPdf::new(out)
}

fn spatial_repr(spatial: &BTreeMap<HypothesisIndex, SpatialTable>) -> Vec<SpatialRepr> {
    let mut out = Vec::new();
    for (o, table) in spatial {
        let index = index_repr(o);
        for (l, s) in table {
            out.push(SpatialRepr {
                index: index.clone(),
                label: *l,
                components: pdf_repr(s),
            });
        }
    }
    out
}

pub fn glmb_snapshot(d: &GlmbDensity, step: u32) -> Snapshot {
    Snapshot {
        schema_version: SCHEMA_VERSION,
        kind: "glmb".into(),
        step,
        label_universe: d.label_universe().clone(),
        hypotheses: d
            .weights()
            .iter()
            .map(|((o, set), w)| HypothesisRepr {
                index: index_repr(o),
                labels: set.clone(),
                log_weight: w.ln(),
            })
            .collect(),
        spatial: spatial_repr(d.spatial()),
        label_weight: None,
        correlation_weight: None,
    }
}

pub fn slc_snapshot(d: &SlcDensity, step: u32) -> Snapshot {
    let mut correlation_weight = Vec::new();
    for (set, alpha) in d.correlation_weights() {
        for (o, a) in alpha {
            correlation_weight.push(CorrelationWeightRepr {
                labels: set.clone(),
                index: index_repr(o),
                weight: *a,
            });
        }
    }
    Snapshot {
        schema_version: SCHEMA_VERSION,
        kind: "slc".into(),
        step,
        label_universe: d.label_universe().clone(),
        hypotheses: d
            .joint_weights()
            .iter()
            .map(|((o, set), w)| HypothesisRepr {
                index: index_repr(o),
                labels: set.clone(),
                log_weight: w.ln(),
            })
            .collect(),
        spatial: spatial_repr(d.spatial()),
        label_weight: Some(
            d.label_weights()
                .iter()
                .map(|(set, w)| LabelWeightRepr {
                    labels: set.clone(),
                    weight: *w,
                })
                .collect(),
        ),
        correlation_weight: Some(correlation_weight),
    }
}

/// Rebuilds the classical density from any snapshot's hypothesis list.
pub fn glmb_from_snapshot(s: &Snapshot) -> Result<GlmbDensity> {
    let mut weights = BTreeMap::new();
    for h in &s.hypotheses {
        weights.insert((index_from_repr(&h.index)?, h.labels.clone()), h.log_weight.exp());
    }
    let mut spatial: BTreeMap<HypothesisIndex, SpatialTable> = BTreeMap::new();
    for r in &s.spatial {
        spatial
            .entry(index_from_repr(&r.index)?)
            .or_default()
            .insert(r.label, Arc::new(pdf_from_repr(&r.components)?));
    }
    GlmbDensity::new(weights, spatial, s.label_universe.clone())
}

pub fn to_json(s: &Snapshot) -> Result<String> {
    Ok(serde_json::to_string_pretty(s)?)
}

pub fn from_json(text: &str) -> Result<Snapshot> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birth::LmbBirth;
    use crate::glmb::{measurement_update, time_update};
    use crate::single_target::{ClutterModel, MotionModel, SensorModel};
    use crate::slc::from_glmb;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;

    fn density(q: [f64; 2], m: [f64; 2], z: Vec<f64>, p_d: f64) -> GlmbDensity {
        let motion = MotionModel::new(dmatrix![1.0, 1.0; 0.0, 1.0], dmatrix![0.2, 0.1; 0.1, 0.3], 0.9).unwrap();
        let birth = LmbBirth::new([
            (Label::new(1, 1), q[0], SpatialPdf::gaussian(dvector![m[0], 0.0], dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap()),
            (Label::new(1, 2), q[1], SpatialPdf::gaussian(dvector![m[1], 1.0], dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap()),
        ])
        .unwrap();
        let clutter = ClutterModel::new(1.0, dvector![-50.0], dvector![50.0]).unwrap();
        let sensor = SensorModel::new(dmatrix![1.0, 0.0], dmatrix![0.5], p_d, clutter).unwrap();
        let pred = time_update(&GlmbDensity::empty_scene(), &motion, &birth.into()).unwrap();
        let zs: Vec<DVector<f64>> = z.into_iter().map(|v| dvector![v]).collect();
        measurement_update(&pred, &sensor, &zs).unwrap()
    }

    #[test]
    fn labels_are_pairs() {
        let s = glmb_snapshot(&density([0.5, 0.5], [0.0, 3.0], vec![0.1], 0.9), 1);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"labels\":[[1,1],[1,2]]"));
        assert!(json.contains("\"scan\""));
        let slc = slc_snapshot(&from_glmb(&density([0.5, 0.5], [0.0, 3.0], vec![0.1], 0.9)), 1);
        let json = to_json(&slc).unwrap();
        assert!(json.contains("label_weight") && json.contains("correlation_weight"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip(
            q in prop::array::uniform2(0.05f64..0.95),
            m in prop::array::uniform2(-5.0f64..5.0),
            z in prop::collection::vec(-8.0f64..8.0, 0..3),
            p_d in 0.1f64..0.99,
        ) {
            let d = density(q, m, z, p_d);
            for snap in [glmb_snapshot(&d, 3), slc_snapshot(&from_glmb(&d), 3)] {
                let parsed = from_json(&to_json(&snap).unwrap()).unwrap();
                prop_assert_eq!(&parsed, &snap);
                let back = glmb_from_snapshot(&parsed).unwrap();
                prop_assert_eq!(back.num_hypotheses(), d.num_hypotheses());
                for (k, w) in d.weights() {
                    prop_assert!((back.weights()[k] - w).abs() <= 1e-12 * w);
                }
                for (o, table) in d.spatial() {
                    for (l, s) in table {
                        prop_assert!(crate::slc::pdf_difference(s, &back.spatial()[o][l]) < 1e-15);
                    }
                }
            }
        }
    }
}
