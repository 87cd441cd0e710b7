//! Classical GLMB recursion on a two-target scene with hand-made scans.

use nalgebra::{dmatrix, dvector};
use slc_glmb::{glmb, slc};
use slc_glmb::{ClutterModel, GlmbDensity, Label, LmbBirth, MotionModel, SensorModel, SlcBirthModel, SpatialPdf};

fn main() -> slc_glmb::Result<()> {
    let motion = MotionModel::new(dmatrix![1.0], dmatrix![0.1], 0.97)?;
    let clutter = ClutterModel::new(1.0, dvector![-30.0], dvector![30.0])?;
    let sensor = SensorModel::new(dmatrix![1.0], dmatrix![0.3], 0.9, clutter)?;
    let birth: SlcBirthModel = LmbBirth::new([
        (Label::new(1, 1), 0.8, SpatialPdf::gaussian(dvector![-5.0], dmatrix![2.0])?),
        (Label::new(1, 2), 0.8, SpatialPdf::gaussian(dvector![5.0], dmatrix![2.0])?),
    ])?
    .into();

    let scans = [vec![dvector![-4.6], dvector![5.3], dvector![17.0]], vec![dvector![-4.4]], vec![dvector![5.1], dvector![-4.5]]];
    let mut d = GlmbDensity::empty_scene();
    for (k, z) in scans.iter().enumerate() {
        let b = if k == 0 { birth.clone() } else { SlcBirthModel::none() };
        let predicted = glmb::time_update(&d, &motion, &b)?;
        let updated = glmb::measurement_update(&predicted, &sensor, z)?;
        d = glmb::prune_truncate(&updated, 1e-6, 100)?;
        let est = slc::estimate_states(&slc::from_glmb(&d));
        println!("step {}: {} hypotheses, estimate {est}", k + 1, d.num_hypotheses());
    }
    Ok(())
}
