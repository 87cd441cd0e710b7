//! Synthetic truth and measurement generation.
//!
//! Randomness comes from ChaCha8 seeded with the configured 64-bit seed, so
//! a scenario reproduces bit-for-bit on every platform.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::birth::SlcBirthModel;
use crate::error::Result;
use crate::lrfs::{LabelSet, LabeledFiniteSet, LabeledState, validate_lfs};
use crate::single_target::{MotionModel, SensorModel, SpatialPdf};

use super::config::Scenario;

/// Truth and measurements of one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub k: u32,
    pub truth: LabeledFiniteSet,
    pub measurements: Vec<DVector<f64>>,
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draw from `N(mean, cov)` for a positive semidefinite `cov`.
pub fn sample_gaussian(rng: &mut impl Rng, mean: &DVector<f64>, cov: &DMatrix<f64>) -> DVector<f64> {
    let n = mean.len();
    let eig = cov.clone().symmetric_eigen();
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    let root = &eig.eigenvectors * sqrt;
    let w = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + root * w
}

pub fn sample_mixture(rng: &mut impl Rng, s: &SpatialPdf) -> DVector<f64> {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let comps = s.components();
    let mut pick = comps.len() - 1;
    for (i, c) in comps.iter().enumerate() {
        acc += c.weight;
        if u < acc {
            pick = i;
            break;
        }
    }
    sample_gaussian(rng, &comps[pick].mean, &comps[pick].covariance)
}

fn sample_categorical(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.gen::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Newborn targets: each label exists independently, then one correlation
/// component is drawn for the whole set of existing labels.
pub fn sample_births(rng: &mut impl Rng, birth: &SlcBirthModel) -> Vec<LabeledState> {
    let existing: LabelSet = birth
        .existence()
        .iter()
        .filter(|(_, q)| rng.gen::<f64>() < **q)
        .map(|(l, _)| *l)
        .collect();
    if existing.is_empty() {
        return Vec::new();
    }
    let i = sample_categorical(rng, birth.alpha(&existing));
    existing
        .iter()
        .map(|l| LabeledState::new(sample_mixture(rng, &birth.spatial(i)[l]), *l))
        .collect()
}

pub fn propagate(rng: &mut impl Rng, truth: &LabeledFiniteSet, motion: &MotionModel) -> Vec<LabeledState> {
    let zero = DVector::zeros(motion.state_dim());
    let mut out = Vec::with_capacity(truth.len());
    for (l, x) in truth.iter() {
        if rng.gen::<f64>() < motion.survival_prob {
            let noise = sample_gaussian(rng, &zero, &motion.process_noise);
            out.push(LabeledState::new(&motion.transition * x + noise, *l));
        }
    }
    out
}

/// Detections (kept only inside the clutter region) plus Poisson clutter,
/// in shuffled order.
pub fn observe(rng: &mut impl Rng, truth: &LabeledFiniteSet, sensor: &SensorModel) -> Vec<DVector<f64>> {
    let zero = DVector::zeros(sensor.measurement_dim());
    let mut z = Vec::new();
    for (_, x) in truth.iter() {
        if rng.gen::<f64>() < sensor.detection_prob {
            let v = &sensor.observation * x + sample_gaussian(rng, &zero, &sensor.measurement_noise);
            if sensor.clutter.contains(&v) {
                z.push(v);
            }
        }
    }
    let c = &sensor.clutter;
    let count = if c.rate > 0.0 {
        Poisson::new(c.rate).expect("positive rate").sample(rng) as usize
    } else {
        0
    };
    for _ in 0..count {
        let v = DVector::from_fn(c.region_min.len(), |i, _| rng.gen_range(c.region_min[i]..c.region_max[i]));
        z.push(v);
    }
    z.shuffle(rng);
    z
}

/// Truth and measurements for steps `1..=K`: survivors move first, then the
/// step's newborn targets appear, then the scan is observed.
pub fn generate_scenario(scenario: &Scenario) -> Result<Vec<ScanRecord>> {
    let mut rng = rng_from_seed(scenario.config.rng_seed);
    let mut truth = LabeledFiniteSet::empty();
    let mut out = Vec::with_capacity(scenario.config.steps as usize);
    for k in 1..=scenario.config.steps {
        let mut next = propagate(&mut rng, &truth, &scenario.motion);
        if let Some(b) = scenario.births.get(&k) {
            next.extend(sample_births(&mut rng, b));
        }
        truth = validate_lfs(next)?;
        let measurements = observe(&mut rng, &truth, &scenario.sensor);
        out.push(ScanRecord {
            k,
            truth: truth.clone(),
            measurements,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::ScenarioConfig;

    fn scenario(p_d: f64, rate: f64, p_s: f64) -> Scenario {
        let text = format!(
            r#"
state_dim = 2
steps = 6
rng_seed = 5
[motion]
transition = [[1.0, 1.0], [0.0, 1.0]]
process_noise = [[0.01, 0.0], [0.0, 0.01]]
survival_prob = {p_s}
[sensor]
observation = [[1.0, 0.0]]
measurement_noise = [[0.2]]
detection_prob = {p_d}
clutter_rate = {rate}
region_min = [-100.0]
region_max = [100.0]
[[births]]
step = 1
[[births.targets]]
existence = 1.0
hypotheses = [[{{ weight = 1.0, mean = [0.0, 1.0], covariance = [[1.0, 0.0], [0.0, 0.1]] }}]]
[[births.targets]]
existence = 1.0
hypotheses = [[{{ weight = 1.0, mean = [10.0, -1.0], covariance = [[1.0, 0.0], [0.0, 0.1]] }}]]
"#
        );
        ScenarioConfig::from_toml(&text).unwrap().build().unwrap()
    }

    #[test]
    fn perfect_sensor_sees_exactly_the_truth() {
        let scans = generate_scenario(&scenario(1.0, 0.0, 1.0)).unwrap();
        for s in &scans {
            assert_eq!(s.truth.len(), 2);
            assert_eq!(s.measurements.len(), 2);
            for z in &s.measurements {
                let hit = s.truth.iter().any(|(_, x)| (x[0] - z[0]).abs() < 5.0 * 0.2f64.sqrt());
                assert!(hit);
            }
        }
    }

    #[test]
    fn labels_carry_birth_step() {
        let scans = generate_scenario(&scenario(1.0, 0.0, 1.0)).unwrap();
        for (l, _) in scans[3].truth.iter() {
            assert_eq!(l.birth_step, 1);
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let a = generate_scenario(&scenario(0.8, 4.0, 0.9)).unwrap();
        let b = generate_scenario(&scenario(0.8, 4.0, 0.9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_sampling_moments() {
        let mut rng = rng_from_seed(1);
        let mean = DVector::from_vec(vec![1.0, -2.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let n = 20_000;
        let xs: Vec<DVector<f64>> = (0..n).map(|_| sample_gaussian(&mut rng, &mean, &cov)).collect();
        let m = xs.iter().fold(DVector::zeros(2), |a, x| a + x) / n as f64;
        let c = xs.iter().fold(DMatrix::zeros(2, 2), |a, x| a + (x - &m) * (x - &m).transpose()) / n as f64;
        assert!((m - mean).amax() < 0.05);
        assert!((c - cov).amax() < 0.08);
    }
}
