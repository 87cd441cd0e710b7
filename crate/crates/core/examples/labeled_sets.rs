//! Labeled finite sets: distinct labels are enforced at construction.

use nalgebra::dvector;
use slc_glmb::lrfs::{labels_of, validate_lfs};
use slc_glmb::{Error, Label, LabeledState};

fn main() -> slc_glmb::Result<()> {
    let a = Label::new(1, 1);
    let b = Label::new(1, 2);
    let x = validate_lfs([
        LabeledState::new(dvector![0.0, 1.0], a),
        LabeledState::new(dvector![5.0, -1.0], b),
    ])?;
    println!("{} targets with labels {}", x.len(), labels_of(&x));
    for (l, s) in x.iter() {
        println!("  {l}: {:?}", s.as_slice());
    }

    let clash = validate_lfs([
        LabeledState::new(dvector![0.0, 1.0], a),
        LabeledState::new(dvector![3.0, 0.0], a),
    ]);
    match clash {
        Err(Error::DuplicateLabel(l)) => println!("rejected duplicate label {l}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
