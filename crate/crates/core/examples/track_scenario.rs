//! Load a scenario, simulate it, and run both filters.
//!
//! `cargo run --example track_scenario -- crates/core/examples/configs/cluster.toml`

use std::path::PathBuf;

use slc_glmb::sim::{generate_scenario, run_filter, FilterKind, ScenarioConfig};

fn main() -> slc_glmb::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/two_targets.toml")));
    let scenario = ScenarioConfig::load(&path)?.build()?;
    let scans = generate_scenario(&scenario)?;
    for kind in [FilterKind::Glmb, FilterKind::Slc] {
        let steps = run_filter(&scenario, &scans, kind)?;
        println!("{}", kind.name());
        for (r, scan) in steps.iter().zip(&scans) {
            println!(
                "  k={:2} truth={} z={} est={} hyp={:3} ospa={:.3}",
                r.k,
                scan.truth.len(),
                scan.measurements.len(),
                r.estimate.labels.len(),
                r.hypotheses,
                r.ospa
            );
        }
    }
    Ok(())
}
