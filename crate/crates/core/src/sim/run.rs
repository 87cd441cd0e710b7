//! Filter execution, metrics and result emission.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use crate::assignment;
use crate::error::{Error, Result};
use crate::glmb::{self, GlmbDensity};
use crate::lrfs::LabeledFiniteSet;
use crate::slc::{self, compare_with_glmb, Discrepancy, Estimate, SlcDensity};
use crate::snapshot;

use super::config::Scenario;
use super::scenario::ScanRecord;

/// Version tag written in the first line of every CSV file.
pub const CSV_VERSION: u32 = 1;
pub const OSPA_CUTOFF: f64 = 10.0;
pub const OSPA_ORDER: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Glmb,
    Slc,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Glmb => "glmb",
            FilterKind::Slc => "slc",
        }
    }
}

#[derive(Clone, Debug)]
pub enum FilterState {
    Glmb(GlmbDensity),
    Slc(SlcDensity),
}

impl FilterState {
    pub fn initial(kind: FilterKind) -> Self {
        match kind {
            FilterKind::Glmb => FilterState::Glmb(GlmbDensity::empty_scene()),
            FilterKind::Slc => FilterState::Slc(SlcDensity::empty_scene()),
        }
    }

    pub fn total_weight(&self) -> f64 {
        match self {
            FilterState::Glmb(d) => d.total_weight(),
            FilterState::Slc(d) => d.total_weight(),
        }
    }

    pub fn num_hypotheses(&self) -> usize {
        match self {
            FilterState::Glmb(d) => d.num_hypotheses(),
            FilterState::Slc(d) => d.num_hypotheses(),
        }
    }

    pub fn estimate(&self) -> Estimate {
        match self {
            FilterState::Glmb(d) => slc::estimate_states(&slc::from_glmb(d)),
            FilterState::Slc(d) => slc::estimate_states(d),
        }
    }

    pub fn as_slc(&self) -> SlcDensity {
        match self {
            FilterState::Glmb(d) => slc::from_glmb(d),
            FilterState::Slc(d) => d.clone(),
        }
    }

    pub fn snapshot_json(&self, step: u32) -> Result<String> {
        let s = match self {
            FilterState::Glmb(d) => snapshot::glmb_snapshot(d, step),
            FilterState::Slc(d) => snapshot::slc_snapshot(d, step),
        };
        snapshot::to_json(&s)
    }
}

/// Diagnostics of one filter step.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub k: u32,
    /// `|Σ weights − 1|` after the time update.
    pub predicted_residual: f64,
    /// `|Σ weights − 1|` after the measurement update (before pruning).
    pub updated_residual: f64,
    pub hypotheses_before_pruning: usize,
    pub hypotheses: usize,
    pub estimate: Estimate,
    pub ospa: f64,
    pub density: FilterState,
}

/// One predict/update/prune cycle.
pub fn step(scenario: &Scenario, state: &FilterState, scan: &ScanRecord) -> Result<StepResult> {
    let k = scan.k;
    let t = &scenario.config.truncation;
    let mode = t.association_mode();
    let birth = scenario.birth_at(k);
    let z = &scan.measurements;
    let (predicted_residual, updated) = match state {
        FilterState::Glmb(d) => {
            let p = glmb::time_update(d, &scenario.motion, &birth)?;
            let r = (p.total_weight() - 1.0).abs();
            (r, FilterState::Glmb(glmb::measurement_update_with(&p, &scenario.sensor, z, mode)?))
        }
        FilterState::Slc(d) => {
            let p = slc::time_update(d, &scenario.motion, &birth)?;
            let r = (p.total_weight() - 1.0).abs();
            (r, FilterState::Slc(slc::measurement_update_with(&p, &scenario.sensor, z, mode)?))
        }
    };
    let updated_residual = (updated.total_weight() - 1.0).abs();
    let hypotheses_before_pruning = updated.num_hypotheses();
    let pruned = match &updated {
        FilterState::Glmb(d) => FilterState::Glmb(glmb::prune_truncate(d, t.min_weight, t.max_hypotheses)?),
        FilterState::Slc(d) => FilterState::Slc(slc::prune_truncate(d, t.min_weight, t.max_hypotheses)?),
    };
    let estimate = pruned.estimate();
    let ospa = ospa(&scan.truth, &estimate, OSPA_CUTOFF, OSPA_ORDER);
    Ok(StepResult {
        k,
        predicted_residual,
        updated_residual,
        hypotheses_before_pruning,
        hypotheses: pruned.num_hypotheses(),
        estimate,
        ospa,
        density: pruned,
    })
}

/// Runs the filter over every scan from the target-free initial density.
pub fn run_filter(scenario: &Scenario, scans: &[ScanRecord], kind: FilterKind) -> Result<Vec<StepResult>> {
    let mut state = FilterState::initial(kind);
    let mut out = Vec::with_capacity(scans.len());
    for scan in scans {
        let r = step(scenario, &state, scan).map_err(|e| e.at_step(scan.k))?;
        state = r.density.clone();
        out.push(r);
    }
    Ok(out)
}

/// Per-step agreement between the SLC recursion and the classical one,
/// both started from the same SLC density.
#[derive(Clone, Debug, Serialize)]
pub struct StepComparison {
    pub k: u32,
    pub predicted: Discrepancy,
    pub updated: Discrepancy,
    pub estimates_equal: bool,
    pub slc_hypotheses: usize,
}

/// Runs the SLC filter; at each step the SLC updates are checked against
/// `from_glmb ∘ glmb update ∘ to_glmb` of the same prior.
pub fn compare_filters(scenario: &Scenario, scans: &[ScanRecord]) -> Result<Vec<StepComparison>> {
    let t = &scenario.config.truncation;
    let mode = t.association_mode();
    let mut state = SlcDensity::empty_scene();
    let mut out = Vec::with_capacity(scans.len());
    for scan in scans {
        let k = scan.k;
        let inner = || -> Result<(StepComparison, SlcDensity)> {
            let birth = scenario.birth_at(k);
            let sp = slc::time_update(&state, &scenario.motion, &birth)?;
            let gp = glmb::time_update(&slc::to_glmb(&state), &scenario.motion, &birth)?;
            let predicted = compare_with_glmb(&sp, &gp);

            let su = slc::measurement_update_with(&sp, &scenario.sensor, &scan.measurements, mode)?;
            let gu = glmb::measurement_update_with(&slc::to_glmb(&sp), &scenario.sensor, &scan.measurements, mode)?;
            let updated = compare_with_glmb(&su, &gu);
            let next = slc::prune_truncate(&su, t.min_weight, t.max_hypotheses)?;
            let classical = slc::from_glmb(&glmb::prune_truncate(&gu, t.min_weight, t.max_hypotheses)?);
            let estimates_equal = estimates_match(&slc::estimate_states(&next), &slc::estimate_states(&classical), 1e-8);
            let c = StepComparison {
                k,
                predicted,
                updated,
                estimates_equal,
                slc_hypotheses: next.num_hypotheses(),
            };
            Ok((c, next))
        };
        let (c, next) = inner().map_err(|e| e.at_step(k))?;
        out.push(c);
        state = next;
    }
    Ok(out)
}

pub fn estimates_match(a: &Estimate, b: &Estimate, tol: f64) -> bool {
    a.labels == b.labels && a.states.iter().all(|(l, x)| b.states.get(l).is_some_and(|y| (x - y).amax() <= tol))
}

/// OSPA distance between the truth and the estimated states, labels ignored.
pub fn ospa(truth: &LabeledFiniteSet, estimate: &Estimate, cutoff: f64, order: f64) -> f64 {
    let x: Vec<&DVector<f64>> = truth.iter().map(|(_, v)| v).collect();
    let y: Vec<&DVector<f64>> = estimate.states.values().collect();
    ospa_points(&x, &y, cutoff, order)
}

pub fn ospa_points(x: &[&DVector<f64>], y: &[&DVector<f64>], cutoff: f64, order: f64) -> f64 {
    assert!(cutoff > 0.0 && order >= 1.0, "OSPA needs c > 0 and p >= 1");
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let n = large.len();
    if n == 0 {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| large.iter().map(|b| (*a - *b).norm().min(cutoff).powf(order)).collect())
        .collect();
    let (_, matched) = assignment::solve(&cost).expect("dense cost matrix is feasible");
    let penalty = cutoff.powf(order) * (n - small.len()) as f64;
    ((matched + penalty) / n as f64).powf(1.0 / order)
}

fn csv_header(kind: &str, seed: u64, extra: &str) -> String {
    format!("# slcglmb {kind} v{CSV_VERSION} seed={seed}{extra}\n")
}

/// `step,kind,label_k,label_i,v0..` rows for truth and measurements
/// (measurements have empty label columns).
pub fn scenario_csv(scans: &[ScanRecord], seed: u64) -> String {
    let width = scans
        .iter()
        .flat_map(|s| s.truth.iter().map(|(_, x)| x.len()).chain(s.measurements.iter().map(|z| z.len())))
        .max()
        .unwrap_or(0);
    let mut out = csv_header("scenario", seed, "");
    out.push_str("step,kind,label_k,label_i");
    for i in 0..width {
        let _ = write!(out, ",v{i}");
    }
    out.push('\n');
    for s in scans {
        for (l, x) in s.truth.iter() {
            let _ = write!(out, "{},truth,{},{}", s.k, l.birth_step, l.index);
            push_values(&mut out, x, width);
        }
        for z in &s.measurements {
            let _ = write!(out, "{},measurement,,", s.k);
            push_values(&mut out, z, width);
        }
    }
    out
}

fn push_values(out: &mut String, v: &DVector<f64>, width: usize) {
    for i in 0..width {
        match v.get(i) {
            Some(x) => {
                let _ = write!(out, ",{x}");
            }
            None => out.push(','),
        }
    }
    out.push('\n');
}

/// `step,filter,label_k,label_i,x0..,ospa,hypotheses` with one row per
/// estimated target, or one row with empty label and state columns when
/// nothing is estimated.
pub fn estimates_csv(results: &[(FilterKind, Vec<StepResult>)], state_dim: usize, seed: u64) -> String {
    let filters: Vec<&str> = results.iter().map(|r| r.0.name()).collect();
    let mut out = csv_header("estimates", seed, &format!(" filters={}", filters.join("+")));
    out.push_str("step,filter,label_k,label_i");
    for i in 0..state_dim {
        let _ = write!(out, ",x{i}");
    }
    out.push_str(",ospa,hypotheses\n");
    for (kind, steps) in results {
        for r in steps {
            let tail = format!(",{},{}\n", r.ospa, r.hypotheses);
            if r.estimate.states.is_empty() {
                let _ = write!(out, "{},{},,{}", r.k, kind.name(), ",".repeat(state_dim));
                out.push_str(&tail);
            }
            for (l, x) in &r.estimate.states {
                let _ = write!(out, "{},{},{},{}", r.k, kind.name(), l.birth_step, l.index);
                for v in x.iter() {
                    let _ = write!(out, ",{v}");
                }
                out.push_str(&tail);
            }
        }
    }
    out
}

pub fn comparison_csv(rows: &[StepComparison], seed: u64) -> String {
    let mut out = csv_header("compare", seed, "");
    out.push_str("step,predicted_weight,predicted_spatial,updated_weight,updated_spatial,estimates_equal,hypotheses\n");
    for c in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.k, c.predicted.weight, c.predicted.spatial, c.updated.weight, c.updated.spatial, c.estimates_equal, c.slc_hypotheses
        );
    }
    out
}

pub fn write_snapshots(dir: &Path, kind: FilterKind, steps: &[StepResult]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in steps {
        let path = dir.join(format!("{}_step{:03}.json", kind.name(), r.k));
        std::fs::write(path, r.density.snapshot_json(r.k)?)?;
    }
    Ok(())
}

/// Exit status for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        2
    } else {
        3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lrfs::{validate_lfs, Label, LabeledState};
    use crate::sim::config::ScenarioConfig;
    use crate::sim::scenario::generate_scenario;
    use nalgebra::dvector;
    use std::collections::BTreeMap;

    fn est(points: &[f64]) -> Estimate {
        let states: BTreeMap<Label, DVector<f64>> =
            points.iter().enumerate().map(|(i, v)| (Label::new(1, i as u32 + 1), dvector![*v])).collect();
        Estimate {
            labels: states.keys().copied().collect(),
            states,
        }
    }

    fn truth(points: &[f64]) -> LabeledFiniteSet {
        validate_lfs(points.iter().enumerate().map(|(i, v)| LabeledState::new(dvector![*v], Label::new(2, i as u32 + 1)))).unwrap()
    }

    #[test]
    fn ospa_examples() {
        assert_eq!(ospa(&truth(&[1.0, 4.0]), &est(&[4.0, 1.0]), 10.0, 1.0), 0.0);
        assert_eq!(ospa(&truth(&[]), &est(&[1.0, 2.0, 3.0]), 7.0, 2.0), 7.0);
        assert_eq!(ospa(&truth(&[0.0]), &est(&[2.5]), 10.0, 1.0), 2.5);
        assert_eq!(ospa(&truth(&[]), &est(&[]), 10.0, 1.0), 0.0);
        // one matched at distance 1, one unmatched: (1 + 10) / 2
        assert_eq!(ospa(&truth(&[0.0, 50.0]), &est(&[1.0]), 10.0, 1.0), 5.5);
    }

    const CONFIG: &str = r#"
state_dim = 1
steps = 4
rng_seed = 3
[motion]
transition = [[1.0]]
process_noise = [[0.05]]
survival_prob = 0.97
[sensor]
observation = [[1.0]]
measurement_noise = [[0.3]]
detection_prob = 0.9
clutter_rate = 1.0
region_min = [-15.0]
region_max = [15.0]
[[births]]
step = 1
alpha = [0.6, 0.4]
[[births.targets]]
existence = 0.9
hypotheses = [[{ weight = 1.0, mean = [-2.0], covariance = [[0.5]] }], [{ weight = 1.0, mean = [2.0], covariance = [[0.5]] }]]
[[births.targets]]
existence = 0.8
hypotheses = [[{ weight = 1.0, mean = [2.0], covariance = [[0.5]] }], [{ weight = 1.0, mean = [-2.0], covariance = [[0.5]] }]]
"#;

    #[test]
    fn empty_scan_list_gives_no_steps() {
        let sc = ScenarioConfig::from_toml(CONFIG).unwrap().build().unwrap();
        assert!(run_filter(&sc, &[], FilterKind::Slc).unwrap().is_empty());
    }

    #[test]
    fn both_filters_agree() {
        let sc = ScenarioConfig::from_toml(CONFIG).unwrap().build().unwrap();
        let scans = generate_scenario(&sc).unwrap();
        let g = run_filter(&sc, &scans, FilterKind::Glmb).unwrap();
        let s = run_filter(&sc, &scans, FilterKind::Slc).unwrap();
        for (a, b) in g.iter().zip(&s) {
            assert!(a.updated_residual <= 1e-9 && b.updated_residual <= 1e-9);
            assert!(estimates_match(&a.estimate, &b.estimate, 1e-8));
            let FilterState::Glmb(gd) = &a.density else { unreachable!() };
            assert!(compare_with_glmb(&b.density.as_slc(), gd).within(1e-10));
        }
        for c in compare_filters(&sc, &scans).unwrap() {
            assert!(c.predicted.within(1e-10) && c.updated.within(1e-10) && c.estimates_equal, "{c:?}");
        }
    }

    #[test]
    fn single_scan_structure() {
        let cfg = CONFIG.replace("steps = 4", "steps = 1");
        let sc = ScenarioConfig::from_toml(&cfg).unwrap().build().unwrap();
        let scan = ScanRecord {
            k: 1,
            truth: truth(&[0.3]),
            measurements: vec![dvector![0.3]],
        };
        let r = run_filter(&sc, &[scan], FilterKind::Glmb).unwrap();
        let FilterState::Glmb(d) = &r[0].density else { unreachable!() };
        // each birth component i crossed with every association of each label set
        let birth = sc.birth_at(1);
        let expected: usize = birth
            .glmb_terms()
            .iter()
            .map(|(set, _, _)| crate::association::mta_count(set.len(), 1) as usize)
            .sum();
        assert_eq!(r[0].hypotheses_before_pruning, expected);
        assert!(d.num_hypotheses() <= expected);
    }

    #[test]
    fn csv_is_versioned() {
        let sc = ScenarioConfig::from_toml(CONFIG).unwrap().build().unwrap();
        let scans = generate_scenario(&sc).unwrap();
        let csv = scenario_csv(&scans, 3);
        assert!(csv.starts_with("# slcglmb scenario v1 seed=3\nstep,kind,label_k,label_i,v0\n"));
        let r = run_filter(&sc, &scans, FilterKind::Slc).unwrap();
        let csv = estimates_csv(&[(FilterKind::Slc, r)], 1, 3);
        assert!(csv.lines().nth(1).unwrap() == "step,filter,label_k,label_i,x0,ospa,hypotheses");
        assert!(csv.lines().skip(2).all(|l| l.split(',').count() == 7));
    }
}
