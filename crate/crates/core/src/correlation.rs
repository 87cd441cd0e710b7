//! Factorial-moment diagnostics of statistical correlation between targets.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lrfs::{Label, LabelSet, LabeledState};
use crate::slc::SlcDensity;

/// Points per axis of the default probe grid.
pub const PROBE_POINTS: usize = 21;
/// Half-width of the default probe grid in standard deviations.
pub const PROBE_SIGMAS: f64 = 4.0;

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationReport {
    pub pair: (LabeledState, LabeledState),
    pub fcd_value: f64,
    pub independence_gap: f64,
}

/// First factorial-moment density
/// `D(x, l) = Σ_{L∋l} ω(L) Σ_o α_o^L s^o_l(x)`.
pub fn first_moment_density(d: &SlcDensity, x: &LabeledState) -> f64 {
    let mut total = 0.0;
    for (set, w) in d.label_weights() {
        if !set.contains(&x.label) {
            continue;
        }
        for (o, a) in &d.correlation_weights()[set] {
            total += w * a * d.spatial()[o][&x.label].density(&x.kinematic);
        }
    }
    total
}

/// Second factorial-moment density of two distinct labels.
fn second_moment_density(d: &SlcDensity, x1: &LabeledState, x2: &LabeledState) -> f64 {
    let mut total = 0.0;
    for (set, w) in d.label_weights() {
        if !(set.contains(&x1.label) && set.contains(&x2.label)) {
            continue;
        }
        for (o, a) in &d.correlation_weights()[set] {
            let t = &d.spatial()[o];
            total += w * a * t[&x1.label].density(&x1.kinematic) * t[&x2.label].density(&x2.kinematic);
        }
    }
    total
}

/// The two-label set carrying all of `d`'s weight.
pub fn pair_support(d: &SlcDensity) -> Result<LabelSet> {
    let support: Vec<&LabelSet> = d.label_weights().keys().collect();
    match support.as_slice() {
        [set] if set.len() == 2 => Ok((*set).clone()),
        _ => Err(Error::UnsupportedDensity(format!(
            "weight is spread over {} label sets, not one pair",
            support.len()
        ))),
    }
}

/// Factorial covariance density of a density concentrated on one pair
/// `L = {l1, l2}`:
/// `ŝ_L(x1, x2) − ŝ_{l1|L}(x1) ŝ_{l2|L}(x2)` when the query labels are
/// `L` in some order, and 0 otherwise (including repeated labels).
pub fn factorial_covariance_pair(d: &SlcDensity, x1: &LabeledState, x2: &LabeledState) -> Result<f64> {
    let support = pair_support(d)?;
    if x1.label == x2.label || !support.contains(&x1.label) || !support.contains(&x2.label) {
        return Ok(0.0);
    }
    let alpha = &d.correlation_weights()[&support];
    let (mut joint, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (o, a) in alpha {
        let t = &d.spatial()[o];
        let s1 = t[&x1.label].density(&x1.kinematic);
        let s2 = t[&x2.label].density(&x2.kinematic);
        joint += a * s1 * s2;
        m1 += a * s1;
        m2 += a * s2;
    }
    Ok(joint - m1 * m2)
}

/// Factorial covariance density of two distinct labels for any density:
/// the second factorial moment minus the product of first moments.
pub fn factorial_covariance(d: &SlcDensity, x1: &LabeledState, x2: &LabeledState) -> f64 {
    if x1.label == x2.label {
        return 0.0;
    }
    second_moment_density(d, x1, x2) - first_moment_density(d, x1) * first_moment_density(d, x2)
}

/// Largest `|f.c.d.|` over all probe pairs of `pair`.
pub fn independence_gap(d: &SlcDensity, pair: (Label, Label), probe_grid: &[DVector<f64>]) -> f64 {
    let mut gap: f64 = 0.0;
    for x1 in probe_grid {
        let a = LabeledState::new(x1.clone(), pair.0);
        for x2 in probe_grid {
            let b = LabeledState::new(x2.clone(), pair.1);
            gap = gap.max(factorial_covariance(d, &a, &b).abs());
        }
    }
    gap
}

/// Tensor grid of [`PROBE_POINTS`] per axis spanning `±PROBE_SIGMAS`
/// standard deviations around every component mean of the given labels.
pub fn default_probe_grid(d: &SlcDensity, labels: &[Label]) -> Vec<DVector<f64>> {
    let dim = d
        .spatial()
        .values()
        .flat_map(|t| t.values())
        .next()
        .map_or(0, |s| s.dim());
    if dim == 0 {
        return Vec::new();
    }
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for table in d.spatial().values() {
        for l in labels {
            let Some(s) = table.get(l) else { continue };
            for c in s.components() {
                for k in 0..dim {
                    let sd = c.covariance[(k, k)].sqrt();
                    lo[k] = lo[k].min(c.mean[k] - PROBE_SIGMAS * sd);
                    hi[k] = hi[k].max(c.mean[k] + PROBE_SIGMAS * sd);
                }
            }
        }
    }
    if lo.iter().any(|v| !v.is_finite()) {
        return Vec::new();
    }
    let axes: Vec<Vec<f64>> = (0..dim).map(|k| linspace(lo[k], hi[k], PROBE_POINTS)).collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    out.into_iter().map(DVector::from_vec).collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Report for one query pair with the gap over the default probe grid.
pub fn report(d: &SlcDensity, x1: LabeledState, x2: LabeledState) -> Result<CorrelationReport> {
    let fcd_value = factorial_covariance_pair(d, &x1, &x2)?;
    let grid = default_probe_grid(d, &[x1.label, x2.label]);
    let independence_gap = independence_gap(d, (x1.label, x2.label), &grid);
    Ok(CorrelationReport {
        pair: (x1, x2),
        fcd_value,
        independence_gap,
    })
}

/// One cell of an f.c.d. heat map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatCell {
    pub x1: f64,
    pub x2: f64,
    pub fcd: f64,
}

/// Closed-form f.c.d. of a pair density over the first coordinate of each
/// label, `points` values per axis on the default probe range. Remaining
/// coordinates are held at the label's marginal mean.
pub fn fcd_heat_map(d: &SlcDensity, points: usize) -> Result<Vec<HeatCell>> {
    let support = pair_support(d)?;
    let labels: Vec<Label> = support.iter().copied().collect();
    let (l1, l2) = (labels[0], labels[1]);
    let anchor = |l: &Label| -> DVector<f64> {
        d.marginal(&support, l).expect("label in support").mean()
    };
    let (base1, base2) = (anchor(&l1), anchor(&l2));
    let range = |l: Label| {
        let grid = default_probe_grid(d, &[l]);
        let lo = grid.iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
        let hi = grid.iter().map(|x| x[0]).fold(f64::NEG_INFINITY, f64::max);
        linspace(lo, hi, points)
    };
    let (axis1, axis2) = (range(l1), range(l2));
    let mut out = Vec::with_capacity(points * points);
    for a in &axis1 {
        let mut k1 = base1.clone();
        k1[0] = *a;
        let x1 = LabeledState::new(k1, l1);
        for b in &axis2 {
            let mut k2 = base2.clone();
            k2[0] = *b;
            let fcd = factorial_covariance_pair(d, &x1, &LabeledState::new(k2, l2))?;
            out.push(HeatCell { x1: *a, x2: *b, fcd });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birth::{LmbBirth, SlcBirthModel};
    use crate::slc::slc_birth_density;
    use crate::single_target::SpatialPdf;
    use nalgebra::{dmatrix, dvector};
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn l(i: u32) -> Label {
        Label::new(1, i)
    }

    fn pdf(m: f64, v: f64) -> SpatialPdf {
        SpatialPdf::gaussian(dvector![m], dmatrix![v]).unwrap()
    }

    fn at(x: f64, i: u32) -> LabeledState {
        LabeledState::new(dvector![x], l(i))
    }

    fn correlated(q: f64) -> SlcDensity {
        let existence = BTreeMap::from([(l(1), q), (l(2), q)]);
        let spatial = vec![
            BTreeMap::from([(l(1), Arc::new(pdf(-3.0, 0.5))), (l(2), Arc::new(pdf(3.0, 0.5)))]),
            BTreeMap::from([(l(1), Arc::new(pdf(3.0, 0.5))), (l(2), Arc::new(pdf(-3.0, 0.5)))]),
        ];
        slc_birth_density(&SlcBirthModel::new(existence, spatial, vec![0.5, 0.5], BTreeMap::new()).unwrap())
    }

    fn lmb() -> SlcDensity {
        let b = LmbBirth::new([(l(1), 0.6, pdf(-1.0, 1.0)), (l(2), 0.3, pdf(2.0, 2.0))]).unwrap();
        slc_birth_density(&SlcBirthModel::from(b))
    }

    #[test]
    fn first_moment_of_bernoulli() {
        let d = lmb();
        let x = at(0.4, 1);
        assert!((first_moment_density(&d, &x) - 0.6 * pdf(-1.0, 1.0).density(&x.kinematic)).abs() < 1e-15);
        assert_eq!(first_moment_density(&d, &at(0.0, 9)), 0.0);
    }

    #[test]
    fn first_moment_integrates_to_expected_cardinality() {
        let d = correlated(0.7);
        let xs = linspace(-12.0, 12.0, 4001);
        let dx = xs[1] - xs[0];
        let integral: f64 = [1, 2]
            .iter()
            .map(|i| xs.iter().map(|x| first_moment_density(&d, &at(*x, *i))).sum::<f64>() * dx)
            .sum();
        let expected: f64 = d.label_weights().iter().map(|(s, w)| w * s.len() as f64).sum();
        assert!((integral - expected).abs() < 1e-9, "{integral} vs {expected}");
    }

    #[test]
    fn lmb_pair_is_uncorrelated() {
        let d = lmb();
        let pair = d.conditioned_on(&[l(1), l(2)].into_iter().collect()).unwrap();
        let grid = default_probe_grid(&d, &[l(1), l(2)]);
        assert_eq!(grid.len(), PROBE_POINTS);
        assert!(independence_gap(&d, (l(1), l(2)), &grid) < 1e-15);
        assert_eq!(factorial_covariance_pair(&pair, &at(0.0, 1), &at(1.0, 2)).unwrap(), 0.0);
        assert!(matches!(
            factorial_covariance_pair(&d, &at(0.0, 1), &at(1.0, 2)),
            Err(Error::UnsupportedDensity(_))
        ));
    }

    #[test]
    fn correlated_sign_pattern() {
        let d = correlated(1.0);
        let matched = factorial_covariance_pair(&d, &at(-3.0, 1), &at(3.0, 2)).unwrap();
        let crossed = factorial_covariance_pair(&d, &at(-3.0, 1), &at(-3.0, 2)).unwrap();
        assert!(matched > 0.0 && crossed < 0.0);
        let swapped = factorial_covariance_pair(&d, &at(3.0, 2), &at(-3.0, 1)).unwrap();
        assert_eq!(matched, swapped);
        assert_eq!(factorial_covariance_pair(&d, &at(-3.0, 1), &at(3.0, 1)).unwrap(), 0.0);
        assert_eq!(factorial_covariance_pair(&d, &at(-3.0, 1), &at(3.0, 7)).unwrap(), 0.0);
        let grid = default_probe_grid(&d, &[l(1), l(2)]);
        assert!(independence_gap(&d, (l(1), l(2)), &grid) > 0.01);
    }

    #[test]
    fn general_form_reduces_to_pair_form() {
        let d = correlated(1.0);
        for (a, b) in [(-3.0, 3.0), (0.2, -1.0), (3.0, 3.0)] {
            let (x1, x2) = (at(a, 1), at(b, 2));
            let p = factorial_covariance_pair(&d, &x1, &x2).unwrap();
            assert!((factorial_covariance(&d, &x1, &x2) - p).abs() < 1e-15);
        }
    }

    #[test]
    fn report_serializes() {
        let r = report(&correlated(1.0), at(-3.0, 1), at(3.0, 2)).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("fcd_value"));
        assert!(r.fcd_value > 0.0 && r.independence_gap > 0.0);
    }

    #[test]
    fn heat_map_is_symmetric_for_swapped_pair() {
        let cells = fcd_heat_map(&correlated(1.0), 11).unwrap();
        assert_eq!(cells.len(), 121);
        let at = |i: usize, j: usize| cells[i * 11 + j].fcd;
        for i in 0..11 {
            for j in 0..11 {
                assert!((at(i, j) - at(j, i)).abs() < 1e-12);
            }
        }
        assert!(cells.iter().any(|c| c.fcd > 0.0) && cells.iter().any(|c| c.fcd < 0.0));
    }

    #[test]
    fn heat_map_needs_a_pair() {
        let lmb = LmbBirth::new([(l(1), 0.5, pdf(0.0, 1.0)), (l(2), 0.5, pdf(1.0, 1.0))]).unwrap();
        let d = slc_birth_density(&lmb.into());
        assert!(matches!(fcd_heat_map(&d, 5), Err(Error::UnsupportedDensity(_))));
    }
}
