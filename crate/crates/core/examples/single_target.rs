//! Gaussian-mixture prediction and the survival mass.

use nalgebra::{dmatrix, dvector};
use slc_glmb::single_target::{predict_pdf, survival_mass};
use slc_glmb::{GaussianComponent, MotionModel, SpatialPdf};

fn main() -> slc_glmb::Result<()> {
    let motion = MotionModel::new(dmatrix![1.0, 1.0; 0.0, 1.0], dmatrix![0.05, 0.1; 0.1, 0.2], 0.95)?;
    let s = SpatialPdf::new(vec![
        GaussianComponent { weight: 0.7, mean: dvector![0.0, 1.0], covariance: dmatrix![1.0, 0.0; 0.0, 0.1] },
        GaussianComponent { weight: 0.3, mean: dvector![4.0, -1.0], covariance: dmatrix![1.0, 0.0; 0.0, 0.1] },
    ])?;
    let mut p = s.clone();
    for k in 1..=3 {
        p = predict_pdf(&p, &motion)?;
        println!("step {k}: mean {:.3?} mode {:.3?}", p.mean().as_slice(), p.mode().as_slice());
    }
    println!("survival mass {}", survival_mass(&s, &motion));
    Ok(())
}
