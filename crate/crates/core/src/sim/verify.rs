//! Oracle cross-checks of the closed forms on a small 1-D scene.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector, DVector};
use rand::Rng;
use serde::Serialize;

use crate::birth::{LmbBirth, SlcBirthModel};
use crate::correlation::factorial_covariance_pair;
use crate::error::Result;
use crate::glmb::{self, GlmbDensity};
use crate::lrfs::{Label, LabelSet, LabeledState};
use crate::oracle::{bayes_update_standard, fcd_fd, DiscreteDensity, DiscreteScene, Pgfl, TestFunction};
use crate::single_target::{ClutterModel, MotionModel, SensorModel, SpatialPdf};
use crate::slc::{slc_birth_density, SlcDensity};

use super::scenario::rng_from_seed;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

fn label(i: u32) -> Label {
    Label::new(1, i)
}

pub fn pair_labels() -> LabelSet {
    [label(1), label(2)].into_iter().collect()
}

/// Two-target LMB prior, one scan of `num_measurements` random measurements.
pub fn oracle_problem(seed: u64, num_measurements: usize) -> Result<(GlmbDensity, SensorModel, Vec<DVector<f64>>)> {
    let mut rng = rng_from_seed(seed);
    let birth = LmbBirth::new([
        (label(1), 0.7, SpatialPdf::gaussian(dvector![-1.5], dmatrix![0.6])?),
        (label(2), 0.6, SpatialPdf::gaussian(dvector![1.0], dmatrix![0.8])?),
    ])?;
    let motion = MotionModel::new(dmatrix![1.0], dmatrix![0.1], 0.95)?;
    let prior = glmb::time_update(&GlmbDensity::empty_scene(), &motion, &birth.into())?;
    let clutter = ClutterModel::new(1.5, dvector![-10.0], dvector![10.0])?;
    let sensor = SensorModel::new(dmatrix![1.0], dmatrix![0.4], 0.85, clutter)?;
    let z = (0..num_measurements).map(|_| dvector![rng.gen_range(-3.0..3.0)]).collect();
    Ok((prior, sensor, z))
}

pub fn oracle_scene(points: usize) -> Result<DiscreteScene> {
    DiscreteScene::uniform_1d(-12.0, 12.0, points, pair_labels())
}

/// Density concentrated on `{l1, l2}` with two swapped hypotheses.
pub fn correlated_pair(alpha: f64) -> Result<SlcDensity> {
    let existence = BTreeMap::from([(label(1), 1.0), (label(2), 1.0)]);
    let s = |m: f64| -> Result<Arc<SpatialPdf>> { Ok(Arc::new(SpatialPdf::gaussian(dvector![m], dmatrix![0.7])?)) };
    let spatial = vec![
        BTreeMap::from([(label(1), s(-2.0)?), (label(2), s(2.0)?)]),
        BTreeMap::from([(label(1), s(2.0)?), (label(2), s(-2.0)?)]),
    ];
    let birth = SlcBirthModel::new(existence, spatial, vec![alpha, 1.0 - alpha], BTreeMap::new())?;
    Ok(slc_birth_density(&birth))
}

/// Runs every check; measurements are drawn from `seed`.
pub fn oracle_checks(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let scene = oracle_scene(401)?;
    let (prior, sensor, z) = oracle_problem(seed, 2)?;

    let post = glmb::measurement_update(&prior, &sensor, &z)?;
    let closed = DiscreteDensity::from_glmb(&post, &scene)?;
    out.push(Check::new("set integral of the posterior", (closed.total() - 1.0).abs(), 1e-6));

    let discrete_prior = DiscreteDensity::from_glmb(&prior, &scene)?;
    let brute = bayes_update_standard(&discrete_prior, &sensor, &z, &scene)?;
    out.push(Check::new("closed-form vs brute-force Bayes (TV)", closed.tv_distance(&brute), 1e-8));

    let ramp: Vec<f64> = (0..scene.grid().len()).map(|g| 0.2 + 0.6 * g as f64 / 400.0).collect();
    let h = TestFunction::constant(0.5).with_label(label(1), ramp);
    out.push(Check::new(
        "p.g.fl. closed form vs enumeration",
        (post.pgfl(&h, &scene) - closed.pgfl(&h, &scene)).abs(),
        1e-6,
    ));

    let coarse = oracle_scene(201)?;
    let d = correlated_pair(0.5)?;
    let mut worst: f64 = 0.0;
    for (a, b) in [(-2.0, 2.0), (-2.0, -2.0), (0.5, 1.0)] {
        let x1 = LabeledState::new(coarse.grid()[coarse.nearest(&dvector![a])].clone(), label(1));
        let x2 = LabeledState::new(coarse.grid()[coarse.nearest(&dvector![b])].clone(), label(2));
        let c = factorial_covariance_pair(&d, &x1, &x2)?;
        let fd = fcd_fd(&d, &x1, &x2, &coarse)?;
        worst = worst.max((c - fd).abs() / c.abs());
    }
    out.push(Check::new("f.c.d. closed form vs finite differences (relative)", worst, 1e-4));

    let lmb = crate::slc::from_glmb(&prior);
    let x1 = LabeledState::new(dvector![-1.5], label(1));
    let x2 = LabeledState::new(dvector![1.0], label(2));
    out.push(Check::new("LMB f.c.d. by finite differences", fcd_fd(&lmb, &x1, &x2, &coarse)?.abs(), 1e-6));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for c in oracle_checks(9).unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }
}
