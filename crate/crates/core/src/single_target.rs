//! Gaussian-mixture spatial densities and the single-target functionals the
//! labeled recursions consume.
//!
//! Survival and detection probabilities are constants per scenario. With a
//! constant `p_S` the survival functional is `p_S` itself and prediction is a
//! per-component Kalman prediction; with a constant `p_D` a missed detection
//! leaves the mixture unchanged.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{cholesky, ln0, log_gaussian_chol, log_sum_exp, symmetrize, LOG_NORMALIZER_FLOOR};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// Normalized Gaussian mixture over the kinematic space.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialPdf {
    components: Vec<GaussianComponent>,
}

impl SpatialPdf {
    /// Validates dimensions and positive definiteness, then rescales the
    /// weights to sum to one.
    pub fn new(mut components: Vec<GaussianComponent>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidModel("mixture has no components".into()));
        };
        let dim = first.mean.len();
        let mut total = 0.0;
        for c in &components {
            if c.mean.len() != dim || c.covariance.nrows() != dim || c.covariance.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "mixture component has mean of length {} and covariance {}x{}, expected {dim}",
                    c.mean.len(),
                    c.covariance.nrows(),
                    c.covariance.ncols()
                )));
            }
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(Error::InvalidModel(format!("mixture weight {}", c.weight)));
            }
            if (&c.covariance - c.covariance.transpose()).amax() > 1e-9 * c.covariance.amax().max(1.0)
                || cholesky(&c.covariance).is_none()
            {
                return Err(Error::InvalidModel("covariance is not symmetric positive definite".into()));
            }
            total += c.weight;
        }
        if total <= 0.0 {
            return Err(Error::InvalidModel("mixture weights sum to zero".into()));
        }
        for c in &mut components {
            c.weight /= total;
        }
        Ok(SpatialPdf { components })
    }

    pub fn gaussian(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![GaussianComponent {
            weight: 1.0,
            mean,
            covariance,
        }])
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        log_sum_exp(self.components.iter().map(|c| {
            let chol = cholesky(&c.covariance).expect("validated covariance");
            ln0(c.weight) + log_gaussian_chol(x, &c.mean, &chol)
        }))
    }

    pub fn density(&self, x: &DVector<f64>) -> f64 {
        self.log_density(x).exp()
    }

    pub fn mean(&self) -> DVector<f64> {
        self.components
            .iter()
            .fold(DVector::zeros(self.dim()), |acc, c| acc + &c.mean * c.weight)
    }

    /// Highest mode of the mixture.
    ///
    /// Mean-shift iterations start from every distinct component mean and
    /// are polished by Newton steps. Candidates whose log densities agree
    /// within 1e-9 count as ties and the earliest start wins.
    pub fn mode(&self) -> DVector<f64> {
        if self.components.len() == 1 {
            return self.components[0].mean.clone();
        }
        let terms = ModeSearch::new(&self.components);
        let mut found: Vec<(f64, DVector<f64>)> = Vec::new();
        let mut best = 0;
        for c in &self.components {
            if found.iter().any(|(_, m)| close(m, &c.mean, 1e-12)) {
                continue;
            }
            let x = terms.climb(c.mean.clone(), &found);
            if found.iter().any(|(_, m)| *m == x) {
                continue;
            }
            let v = terms.log_density(&x);
            found.push((v, x));
            if v > found[best].0 + 1e-9 {
                best = found.len() - 1;
            }
        }
        found.swap_remove(best).1
    }
}

/// Linear-Gaussian motion with a constant survival probability.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionModel {
    pub transition: DMatrix<f64>,
    pub process_noise: DMatrix<f64>,
    pub survival_prob: f64,
}

impl MotionModel {
    pub fn new(transition: DMatrix<f64>, process_noise: DMatrix<f64>, survival_prob: f64) -> Result<Self> {
        let d = transition.nrows();
        if transition.ncols() != d || process_noise.shape() != (d, d) {
            return Err(Error::DimensionMismatch("transition and process noise must be square of equal size".into()));
        }
        check_probability("survival_prob", survival_prob)?;
        check_psd("process_noise", &process_noise)?;
        Ok(MotionModel {
            transition,
            process_noise,
            survival_prob,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }
}

/// Poisson clutter, uniform over an axis-aligned box in measurement space.
#[derive(Clone, Debug, PartialEq)]
pub struct ClutterModel {
    pub rate: f64,
    pub region_min: DVector<f64>,
    pub region_max: DVector<f64>,
}

impl ClutterModel {
    pub fn new(rate: f64, region_min: DVector<f64>, region_max: DVector<f64>) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidModel(format!("clutter rate {rate}")));
        }
        if region_min.len() != region_max.len() || region_min.iter().zip(region_max.iter()).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidModel("clutter region must have min < max per axis".into()));
        }
        Ok(ClutterModel {
            rate,
            region_min,
            region_max,
        })
    }

    pub fn volume(&self) -> f64 {
        self.region_min
            .iter()
            .zip(self.region_max.iter())
            .map(|(a, b)| b - a)
            .product()
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.iter()
            .zip(self.region_min.iter().zip(self.region_max.iter()))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// `κ(z)`: `rate / volume` inside the region, zero outside.
    pub fn intensity(&self, z: &DVector<f64>) -> f64 {
        if self.contains(z) {
            self.rate / self.volume()
        } else {
            0.0
        }
    }
}

/// Linear-Gaussian sensor with constant detection probability and Poisson clutter.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorModel {
    pub observation: DMatrix<f64>,
    pub measurement_noise: DMatrix<f64>,
    pub detection_prob: f64,
    pub clutter: ClutterModel,
}

impl SensorModel {
    pub fn new(
        observation: DMatrix<f64>,
        measurement_noise: DMatrix<f64>,
        detection_prob: f64,
        clutter: ClutterModel,
    ) -> Result<Self> {
        let m = observation.nrows();
        if measurement_noise.shape() != (m, m) || clutter.region_min.len() != m {
            return Err(Error::DimensionMismatch(
                "measurement noise and clutter region must match the observation rows".into(),
            ));
        }
        check_probability("detection_prob", detection_prob)?;
        if cholesky(&measurement_noise).is_none() {
            return Err(Error::InvalidModel("measurement noise is not positive definite".into()));
        }
        Ok(SensorModel {
            observation,
            measurement_noise,
            detection_prob,
            clutter,
        })
    }

    pub fn measurement_dim(&self) -> usize {
        self.observation.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.observation.ncols()
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} = {p} is not a probability")))
    }
}

fn check_psd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if (m - m.transpose()).amax() > 1e-9 * m.amax().max(1.0) {
        return Err(Error::InvalidModel(format!("{name} is not symmetric")));
    }
    let min_eig = m.clone().symmetric_eigenvalues().min();
    if min_eig < -1e-12 * m.amax().max(1.0) {
        return Err(Error::InvalidModel(format!("{name} is not positive semidefinite")));
    }
    Ok(())
}

/// What a label is associated with in one scan.
#[derive(Clone, Copy, Debug)]
pub enum Assignment<'a> {
    Missed,
    Measurement(&'a DVector<f64>),
}

/// `∫ p_S(x) s(x) dx`; exactly `p_S` for the constant-survival model.
pub fn survival_mass(_s: &SpatialPdf, model: &MotionModel) -> f64 {
    model.survival_prob
}

/// Survival-weighted prediction `s[p_S M_x] / s[p_S]`.
pub fn predict_pdf(s: &SpatialPdf, model: &MotionModel) -> Result<SpatialPdf> {
    if ln0(survival_mass(s, model)) < LOG_NORMALIZER_FLOOR {
        return Err(Error::DegenerateNormalizer("survival mass"));
    }
    if s.dim() != model.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "density has dimension {}, motion model {}",
            s.dim(),
            model.state_dim()
        )));
    }
    let f = &model.transition;
    let components = s
        .components
        .iter()
        .map(|c| {
            let mut cov = f * &c.covariance * f.transpose() + &model.process_noise;
            symmetrize(&mut cov);
            GaussianComponent {
                weight: c.weight,
                mean: f * &c.mean,
                covariance: cov,
            }
        })
        .collect();
    Ok(SpatialPdf { components })
}

/// Log of the detection functional `s[L^θ]`.
///
/// For a miss this is `ln(1 - p_D)`. For a measurement `z` it is
/// `ln(p_D / κ(z)) + ln Σ_j w_j N(z; H m_j, H P_j Hᵀ + R)`.
pub fn log_detection_functional(s: &SpatialPdf, sensor: &SensorModel, assignment: Assignment<'_>) -> Result<f64> {
    Ok(detection_update(s, sensor, assignment, false)?.0)
}

/// `s[L^θ]` in the linear domain.
pub fn detection_functional(s: &SpatialPdf, sensor: &SensorModel, assignment: Assignment<'_>) -> Result<f64> {
    log_detection_functional(s, sensor, assignment).map(f64::exp)
}

/// Normalized `s · L^θ`.
pub fn detection_update_pdf(s: &SpatialPdf, sensor: &SensorModel, assignment: Assignment<'_>) -> Result<SpatialPdf> {
    let (log_mass, pdf) = detection_update(s, sensor, assignment, true)?;
    if log_mass < LOG_NORMALIZER_FLOOR {
        return Err(Error::DegenerateNormalizer("detection-updated density"));
    }
    Ok(pdf.expect("requested posterior"))
}

/// Log detection functional together with (optionally) the updated mixture.
///
/// The posterior is only built when `with_posterior` is set and the
/// functional is above the normalizer floor.
pub(crate) fn detection_update(
    s: &SpatialPdf,
    sensor: &SensorModel,
    assignment: Assignment<'_>,
    with_posterior: bool,
) -> Result<(f64, Option<SpatialPdf>)> {
    if s.dim() != sensor.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "density has dimension {}, sensor expects {}",
            s.dim(),
            sensor.state_dim()
        )));
    }
    let p_d = sensor.detection_prob;
    let z = match assignment {
        Assignment::Missed => {
            let lm = ln0(1.0 - p_d);
            let post = (with_posterior && lm >= LOG_NORMALIZER_FLOOR).then(|| s.clone());
            return Ok((lm, post));
        }
        Assignment::Measurement(z) => z,
    };
    if z.len() != sensor.measurement_dim() {
        return Err(Error::DimensionMismatch(format!(
            "measurement has length {}, sensor produces {}",
            z.len(),
            sensor.measurement_dim()
        )));
    }
    let kappa = sensor.clutter.intensity(z);
    if kappa <= 0.0 {
        return Err(Error::ZeroClutterDensity);
    }
    let log_scale = ln0(p_d) - kappa.ln();
    if log_scale == f64::NEG_INFINITY {
        return Ok((log_scale, None));
    }

    let h = &sensor.observation;
    let r = &sensor.measurement_noise;
    let n = s.dim();
    let mut log_terms = Vec::with_capacity(s.components.len());
    let mut updated = Vec::with_capacity(s.components.len());
    for c in &s.components {
        let mut innov_cov = h * &c.covariance * h.transpose() + r;
        symmetrize(&mut innov_cov);
        let chol = cholesky(&innov_cov).ok_or(Error::DegenerateNormalizer("innovation covariance"))?;
        let predicted_z = h * &c.mean;
        log_terms.push(ln0(c.weight) + log_gaussian_chol(z, &predicted_z, &chol));
        if with_posterior {
            // K = P Hᵀ S⁻¹, covariance in Joseph form
            let pht = &c.covariance * h.transpose();
            let gain = chol.solve(&pht.transpose()).transpose();
            let mean = &c.mean + &gain * (z - predicted_z);
            let ikh = DMatrix::<f64>::identity(n, n) - &gain * h;
            let mut cov = &ikh * &c.covariance * ikh.transpose() + &gain * r * gain.transpose();
            symmetrize(&mut cov);
            updated.push(GaussianComponent {
                weight: 0.0,
                mean,
                covariance: cov,
            });
        }
    }
    let log_mix = log_sum_exp(log_terms.iter().copied());
    let log_mass = log_scale + log_mix;
    let post = if with_posterior && log_mass >= LOG_NORMALIZER_FLOOR && log_mix > f64::NEG_INFINITY {
        for (u, lt) in updated.iter_mut().zip(&log_terms) {
            u.weight = (lt - log_mix).exp();
        }
        let total: f64 = updated.iter().map(|u| u.weight).sum();
        for u in &mut updated {
            u.weight /= total;
        }
        Some(SpatialPdf { components: updated })
    } else {
        None
    };
    Ok((log_mass, post))
}

fn close(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    (a - b).amax() <= tol * (1.0 + b.amax())
}

/// Per-component terms of a mixture for repeated gradient evaluations.
struct ModeSearch {
    log_norm: Vec<f64>,
    means: Vec<DVector<f64>>,
    precisions: Vec<DMatrix<f64>>,
}

impl ModeSearch {
    fn new(components: &[GaussianComponent]) -> Self {
        let mut log_norm = Vec::with_capacity(components.len());
        let mut precisions = Vec::with_capacity(components.len());
        for c in components {
            let chol = cholesky(&c.covariance).expect("validated covariance");
            let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            log_norm.push(ln0(c.weight) - 0.5 * (c.mean.len() as f64 * (2.0 * std::f64::consts::PI).ln() + log_det));
            precisions.push(chol.inverse());
        }
        ModeSearch {
            log_norm,
            means: components.iter().map(|c| c.mean.clone()).collect(),
            precisions,
        }
    }

    fn log_terms(&self, x: &DVector<f64>) -> Vec<f64> {
        self.means
            .iter()
            .zip(&self.precisions)
            .zip(&self.log_norm)
            .map(|((m, p), c)| {
                let d = x - m;
                c - 0.5 * d.dot(&(p * &d))
            })
            .collect()
    }

    fn log_density(&self, x: &DVector<f64>) -> f64 {
        log_sum_exp(self.log_terms(x))
    }

    /// Relative responsibilities `exp(t_i − max t)`.
    fn responsibilities(&self, x: &DVector<f64>) -> Vec<f64> {
        let t = self.log_terms(x);
        let top = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        t.iter().map(|v| (v - top).exp()).collect()
    }

    /// Mean-shift ascent from `x`, cut short when it reaches a mode in
    /// `known`, then Newton refinement.
    fn climb(&self, mut x: DVector<f64>, known: &[(f64, DVector<f64>)]) -> DVector<f64> {
        let dim = x.len();
        for _ in 0..500 {
            let r = self.responsibilities(&x);
            let mut a = DMatrix::zeros(dim, dim);
            let mut b = DVector::zeros(dim);
            for ((m, p), w) in self.means.iter().zip(&self.precisions).zip(&r) {
                if *w < 1e-300 {
                    continue;
                }
                a += p * *w;
                b += p * m * *w;
            }
            let Some(next) = cholesky(&a).map(|ch| ch.solve(&b)) else {
                break;
            };
            let done = close(&next, &x, 1e-8);
            x = next;
            if let Some((_, m)) = known.iter().find(|(_, m)| close(&x, m, 1e-6)) {
                return m.clone();
            }
            if done {
                break;
            }
        }
        for _ in 0..20 {
            let r = self.responsibilities(&x);
            let mut g = DVector::zeros(dim);
            let mut h = DMatrix::zeros(dim, dim);
            for ((m, p), w) in self.means.iter().zip(&self.precisions).zip(&r) {
                let u = p * (m - &x);
                g += &u * *w;
                h += (&u * u.transpose() - p) * *w;
            }
            let Some(ch) = cholesky(&(-&h)) else {
                break;
            };
            let next = &x + ch.solve(&g);
            let done = close(&next, &x, 1e-15);
            x = next;
            if done {
                break;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn sensor_1d(p_d: f64) -> SensorModel {
        let clutter = ClutterModel::new(2.0, dvector![-10.0], dvector![10.0]).unwrap();
        SensorModel::new(dmatrix![1.0], dmatrix![0.5], p_d, clutter).unwrap()
    }

    fn motion_1d(f: f64, q: f64, p_s: f64) -> MotionModel {
        MotionModel::new(dmatrix![f], dmatrix![q], p_s).unwrap()
    }

    fn two_component() -> SpatialPdf {
        SpatialPdf::new(vec![
            GaussianComponent {
                weight: 0.3,
                mean: dvector![-1.0],
                covariance: dmatrix![0.8],
            },
            GaussianComponent {
                weight: 0.7,
                mean: dvector![1.5],
                covariance: dmatrix![1.2],
            },
        ])
        .unwrap()
    }

    /// Uniform grid over `[lo, hi]` used by the quadrature checks below.
    fn grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
        let dx = (hi - lo) / (n - 1) as f64;
        ((0..n).map(|i| lo + i as f64 * dx).collect(), dx)
    }

    fn gauss(x: f64, m: f64, v: f64) -> f64 {
        (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }

    #[test]
    fn rejects_bad_mixtures() {
        assert!(SpatialPdf::new(vec![]).is_err());
        assert!(SpatialPdf::gaussian(dvector![0.0], dmatrix![-1.0]).is_err());
        assert!(SpatialPdf::gaussian(dvector![0.0, 1.0], dmatrix![1.0]).is_err());
        let s = two_component();
        let total: f64 = s.components().iter().map(|c| c.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn survival_mass_is_the_constant() {
        let s = two_component();
        assert_eq!(survival_mass(&s, &motion_1d(1.0, 0.0, 1.0)), 1.0);
        assert_eq!(survival_mass(&s, &motion_1d(1.0, 0.0, 0.9)), 0.9);
    }

    #[test]
    fn identity_dynamics_leave_the_mixture_alone() {
        let s = two_component();
        let p = predict_pdf(&s, &motion_1d(1.0, 0.0, 0.7)).unwrap();
        assert_eq!(p, s);
    }

    #[test]
    fn zero_survival_is_degenerate() {
        let err = predict_pdf(&two_component(), &motion_1d(1.0, 0.1, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateNormalizer(_)));
    }

    #[test]
    fn prediction_matches_grid_convolution() {
        let s = SpatialPdf::gaussian(dvector![0.5], dmatrix![1.0]).unwrap();
        let model = motion_1d(0.9, 0.25, 0.95);
        let p = predict_pdf(&s, &model).unwrap();
        let c = &p.components()[0];
        assert!((c.mean[0] - 0.45).abs() < 1e-15);
        assert!((c.covariance[(0, 0)] - (0.81 + 0.25)).abs() < 1e-15);

        // ∫ N(x; F x', Q) s(x') dx' on a ±8σ grid
        let (xs, dx) = grid(-8.0, 8.0, 801);
        let mut max_rel: f64 = 0.0;
        for &x in xs.iter().step_by(10) {
            let conv: f64 = xs.iter().map(|&xp| gauss(x, 0.9 * xp, 0.25) * gauss(xp, 0.5, 1.0) * dx).sum();
            let closed = p.density(&dvector![x]);
            if closed > 1e-8 {
                max_rel = max_rel.max((conv - closed).abs() / closed);
            }
        }
        assert!(max_rel < 1e-6, "max relative error {max_rel}");
    }

    #[test]
    fn missed_detection_functional() {
        let s = two_component();
        assert_eq!(detection_functional(&s, &sensor_1d(0.0), Assignment::Missed).unwrap(), 1.0);
        assert_eq!(detection_functional(&s, &sensor_1d(1.0), Assignment::Missed).unwrap(), 0.0);
        let post = detection_update_pdf(&s, &sensor_1d(0.6), Assignment::Missed).unwrap();
        assert_eq!(post, s);
    }

    #[test]
    fn detection_functional_at_predicted_measurement() {
        let s = SpatialPdf::gaussian(dvector![1.0], dmatrix![2.0]).unwrap();
        let sensor = sensor_1d(0.8);
        let z = dvector![1.0];
        let v = detection_functional(&s, &sensor, Assignment::Measurement(&z)).unwrap();
        let kappa = 2.0 / 20.0;
        let expected = 0.8 / kappa * gauss(0.0, 0.0, 2.5);
        assert!((v - expected).abs() < 1e-12 * expected);

        // quadrature of p_D g(z|x) s(x) / κ
        let (xs, dx) = grid(-15.0, 17.0, 1601);
        let quad: f64 = xs.iter().map(|&x| 0.8 * gauss(1.0, x, 0.5) * gauss(x, 1.0, 2.0) * dx).sum::<f64>() / kappa;
        assert!((quad - v).abs() < 1e-9 * v);
    }

    #[test]
    fn zero_clutter_is_rejected() {
        let s = two_component();
        let z = dvector![50.0];
        let err = detection_functional(&s, &sensor_1d(0.9), Assignment::Measurement(&z)).unwrap_err();
        assert!(matches!(err, Error::ZeroClutterDensity));
    }

    #[test]
    fn single_gaussian_kalman_update() {
        let s = SpatialPdf::gaussian(dvector![1.0], dmatrix![2.0]).unwrap();
        let z = dvector![2.0];
        let post = detection_update_pdf(&s, &sensor_1d(0.9), Assignment::Measurement(&z)).unwrap();
        let k = 2.0 / 2.5;
        let c = &post.components()[0];
        assert!((c.mean[0] - (1.0 + k * 1.0)).abs() < 1e-14);
        assert!((c.covariance[(0, 0)] - (1.0 - k) * 2.0).abs() < 1e-14);
    }

    #[test]
    fn mixture_update_matches_grid_bayes() {
        let s = two_component();
        let sensor = sensor_1d(0.9);
        let z = dvector![0.7];
        let post = detection_update_pdf(&s, &sensor, Assignment::Measurement(&z)).unwrap();

        let (xs, dx) = grid(-10.0, 10.0, 2001);
        let prior = |x: f64| 0.3 * gauss(x, -1.0, 0.8) + 0.7 * gauss(x, 1.5, 1.2);
        let unnorm: Vec<f64> = xs.iter().map(|&x| gauss(0.7, x, 0.5) * prior(x)).collect();
        let norm: f64 = unnorm.iter().sum::<f64>() * dx;
        let mut max_rel: f64 = 0.0;
        for (x, u) in xs.iter().zip(&unnorm).step_by(5) {
            let g = u / norm;
            let c = post.density(&dvector![*x]);
            if c > 1e-8 {
                max_rel = max_rel.max((g - c).abs() / c);
            }
        }
        assert!(max_rel < 1e-6, "max relative error {max_rel}");
        let total: f64 = post.components().iter().map(|c| c.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mode_of_bimodal_mixture_matches_grid_argmax() {
        let s = SpatialPdf::new(vec![
            GaussianComponent {
                weight: 0.45,
                mean: dvector![-2.0],
                covariance: dmatrix![0.5],
            },
            GaussianComponent {
                weight: 0.55,
                mean: dvector![1.0],
                covariance: dmatrix![1.5],
            },
        ])
        .unwrap();
        let (xs, _) = grid(-6.0, 6.0, 120_001);
        let grid_best = xs
            .iter()
            .copied()
            .max_by(|a, b| s.density(&dvector![*a]).total_cmp(&s.density(&dvector![*b])))
            .unwrap();
        let m = s.mode();
        assert!((m[0] - grid_best).abs() < 2e-4, "mode {} vs grid {}", m[0], grid_best);
    }

    fn two_bumps(w0: f64) -> SpatialPdf {
        SpatialPdf::new(vec![
            GaussianComponent { weight: w0, mean: dvector![-3.0], covariance: dmatrix![0.5] },
            GaussianComponent { weight: 1.0 - w0, mean: dvector![3.0], covariance: dmatrix![0.5] },
        ])
        .unwrap()
    }

    #[test]
    fn equal_modes_resolve_to_the_first_component() {
        let a = two_bumps(0.5).mode();
        let b = two_bumps(0.5 + 1e-14).mode();
        let c = two_bumps(0.5 - 1e-14).mode();
        assert!(a[0] < 0.0 && b[0] < 0.0 && c[0] < 0.0);
        assert!((&a - &c).amax() < 1e-12);
    }

    #[test]
    fn mode_is_a_stationary_point_to_rounding() {
        let s = SpatialPdf::new(vec![
            GaussianComponent { weight: 0.6, mean: dvector![0.0, 0.0], covariance: dmatrix![1.0, 0.3; 0.3, 1.0] },
            GaussianComponent { weight: 0.4, mean: dvector![0.8, 0.5], covariance: dmatrix![0.7, 0.0; 0.0, 1.5] },
        ])
        .unwrap();
        let m = s.mode();
        let h = 1e-5;
        for k in 0..2 {
            let mut up = m.clone();
            let mut down = m.clone();
            up[k] += h;
            down[k] -= h;
            let grad = (s.log_density(&up) - s.log_density(&down)) / (2.0 * h);
            assert!(grad.abs() < 1e-8, "gradient {grad}");
        }
    }
}
