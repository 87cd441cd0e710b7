//! JSON snapshots of a predicted density.

use nalgebra::{dmatrix, dvector};
use slc_glmb::snapshot::{from_json, glmb_from_snapshot, glmb_snapshot, slc_snapshot, to_json};
use slc_glmb::{glmb, slc, GlmbDensity, Label, LmbBirth, MotionModel, SpatialPdf};

fn main() -> slc_glmb::Result<()> {
    let birth = LmbBirth::new([(Label::new(1, 1), 0.6, SpatialPdf::gaussian(dvector![0.0], dmatrix![1.0])?)])?;
    let motion = MotionModel::new(dmatrix![1.0], dmatrix![0.1], 0.9)?;
    let d = glmb::time_update(&GlmbDensity::empty_scene(), &motion, &birth.into())?;

    let text = to_json(&glmb_snapshot(&d, 1))?;
    println!("{text}");
    let back = glmb_from_snapshot(&from_json(&text)?)?;
    println!("roundtrip keeps {} hypotheses", back.num_hypotheses());
    println!("{}", to_json(&slc_snapshot(&slc::from_glmb(&d), 1))?);
    Ok(())
}
