//! Counting and listing measurement-to-track associations.

use slc_glmb::association::{enumerate_mtas, mta_count};
use slc_glmb::{Label, LabelSet};

fn main() -> slc_glmb::Result<()> {
    for (n, m) in [(1, 1), (2, 2), (3, 6), (5, 5)] {
        println!("|L|={n} |Z|={m}: {} associations", mta_count(n, m));
    }
    let labels: LabelSet = [Label::new(1, 1), Label::new(1, 2)].into_iter().collect();
    for mta in enumerate_mtas(&labels, 2, 100)? {
        let pairs: Vec<String> = mta.assigned().iter().map(|(l, j)| format!("{l}->z{j}")).collect();
        println!("  [{}]", pairs.join(" "));
    }
    Ok(())
}
