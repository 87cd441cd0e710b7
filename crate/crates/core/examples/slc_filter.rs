//! SLC recursion on a correlated cluster and its agreement with the
//! classical recursion.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector};
use slc_glmb::slc::{self, compare_with_glmb};
use slc_glmb::{glmb, ClutterModel, Label, MotionModel, SensorModel, SlcBirthModel, SlcDensity, SpatialPdf};

fn main() -> slc_glmb::Result<()> {
    let (a, b) = (Label::new(1, 1), Label::new(1, 2));
    let pdf = |m: f64| SpatialPdf::gaussian(dvector![m], dmatrix![0.5]).map(Arc::new);
    let birth = SlcBirthModel::new(
        BTreeMap::from([(a, 1.0), (b, 1.0)]),
        vec![BTreeMap::from([(a, pdf(-3.0)?), (b, pdf(3.0)?)]), BTreeMap::from([(a, pdf(3.0)?), (b, pdf(-3.0)?)])],
        vec![0.5, 0.5],
        BTreeMap::new(),
    )?;
    let motion = MotionModel::new(dmatrix![1.0], dmatrix![0.05], 0.99)?;
    let clutter = ClutterModel::new(0.5, dvector![-20.0], dvector![20.0])?;
    let sensor = SensorModel::new(dmatrix![1.0], dmatrix![0.2], 0.95, clutter)?;

    let mut d = SlcDensity::empty_scene();
    for (k, z) in [vec![dvector![-3.1], dvector![2.8]], vec![dvector![-2.9]], vec![dvector![3.2], dvector![-3.0]]].iter().enumerate() {
        let b = if k == 0 { birth.clone() } else { SlcBirthModel::none() };
        let predicted = slc::time_update(&d, &motion, &b)?;
        let updated = slc::measurement_update(&predicted, &sensor, z)?;
        let classical = glmb::measurement_update(&slc::to_glmb(&predicted), &sensor, z)?;
        let gap = compare_with_glmb(&updated, &classical);
        d = slc::prune_truncate(&updated, 1e-8, 100)?;
        println!(
            "step {}: {} label sets, {} hypotheses, gap to classical {:.1e}/{:.1e}",
            k + 1,
            d.label_weights().len(),
            d.num_hypotheses(),
            gap.weight,
            gap.spatial
        );
        for (set, w) in d.label_weights() {
            println!("  ω({set}) = {w:.4}, {} correlation terms", d.correlation_weights()[set].len());
        }
    }
    let est = slc::estimate_states(&d);
    let mht = slc::estimate_states_mht(&d);
    println!("marginal estimate {est}");
    println!("dominant-hypothesis estimate {mht}");
    Ok(())
}
