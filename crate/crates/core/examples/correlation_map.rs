//! Factorial covariance of a swapped pair versus an independent pair.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector};
use slc_glmb::correlation::{fcd_heat_map, report};
use slc_glmb::slc::slc_birth_density;
use slc_glmb::{Label, LabeledState, LmbBirth, SlcBirthModel, SpatialPdf};

fn main() -> slc_glmb::Result<()> {
    let (a, b) = (Label::new(1, 1), Label::new(1, 2));
    let pdf = |m: f64| SpatialPdf::gaussian(dvector![m], dmatrix![0.6]);
    let swapped = SlcBirthModel::new(
        BTreeMap::from([(a, 1.0), (b, 1.0)]),
        vec![
            BTreeMap::from([(a, Arc::new(pdf(-2.0)?)), (b, Arc::new(pdf(2.0)?))]),
            BTreeMap::from([(a, Arc::new(pdf(2.0)?)), (b, Arc::new(pdf(-2.0)?))]),
        ],
        vec![0.5, 0.5],
        BTreeMap::new(),
    )?;
    let independent: SlcBirthModel = LmbBirth::new([(a, 1.0, pdf(-2.0)?), (b, 1.0, pdf(2.0)?)])?.into();

    for (name, model) in [("swapped", swapped), ("independent", independent)] {
        let d = slc_birth_density(&model);
        let r = report(&d, LabeledState::new(dvector![-2.0], a), LabeledState::new(dvector![2.0], b))?;
        println!("{name}: f.c.d. at (-2, 2) = {:+.4e}, independence gap {:.4e}", r.fcd_value, r.independence_gap);
        let cells = fcd_heat_map(&d, 7)?;
        for row in cells.chunks(7) {
            let line: Vec<String> = row.iter().map(|c| format!("{:+.3}", c.fcd)).collect();
            println!("  {}", line.join(" "));
        }
    }
    Ok(())
}
