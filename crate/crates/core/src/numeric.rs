//! Log-domain helpers and Gaussian evaluation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Below this mass a normalizer is treated as zero.
pub const NORMALIZER_FLOOR: f64 = 1e-300;
/// `ln(NORMALIZER_FLOOR)`, rounded.
pub const LOG_NORMALIZER_FLOOR: f64 = -690.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln Σ exp(x_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + s.ln()
}

/// Natural log that maps 0 to `-inf` without tripping on negative zero.
pub fn ln0(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

pub(crate) fn cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Log of the Gaussian density `N(x; mean, chol·cholᵀ)`.
pub(crate) fn log_gaussian_chol(x: &DVector<f64>, mean: &DVector<f64>, chol: &Cholesky<f64, Dyn>) -> f64 {
    let d = x - mean;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&d)
        .expect("cholesky factor is nonsingular");
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (x.len() as f64 * LN_2PI + log_det + y.norm_squared())
}

/// Log of `N(x; mean, cov)`; `None` if `cov` is not positive definite.
pub fn log_gaussian(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Option<f64> {
    cholesky(cov).map(|c| log_gaussian_chol(x, mean, &c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(vec![f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(vec![-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let w = log_sum_exp(vec![0.0, 1.0f64.ln(), 2.0f64.ln()]);
        assert!((w - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn standard_normal_peak() {
        let v = log_gaussian(&dvector![0.0], &dvector![0.0], &dmatrix![1.0]).unwrap();
        assert!((v.exp() - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!(log_gaussian(&dvector![0.0], &dvector![0.0], &dmatrix![-1.0]).is_none());
    }
}
