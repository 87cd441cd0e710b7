//! Probability generating functionals and their finite-difference
//! functional derivatives.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::glmb::GlmbDensity;
use crate::lrfs::{Label, LabeledState};
use crate::slc::{to_glmb, SlcDensity};

use super::{DiscreteDensity, DiscreteScene};

/// Smallest finite-difference step accepted.
pub const MIN_STEP: f64 = 1e-8;
/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Step of [`fcd_fd`]. The mixed difference of `log G` loses about
/// `1e-16 / ε²` to rounding while the extrapolated truncation error is
/// relative, so a comparatively large step is the accurate choice.
pub const FCD_STEP: f64 = 3e-2;

/// Test function `h(x, l)` on the scene grid: a dense base table per label
/// (labels without one take `default`) plus additive spikes on single cells.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    default: f64,
    base: BTreeMap<Label, Vec<f64>>,
    spikes: Vec<(Label, usize, f64)>,
}

impl TestFunction {
    pub fn constant(value: f64) -> Self {
        TestFunction {
            default: value,
            base: BTreeMap::new(),
            spikes: Vec::new(),
        }
    }

    /// `h(x_g, l) = values[g]` for label `l`.
    pub fn with_label(mut self, l: Label, values: Vec<f64>) -> Self {
        self.base.insert(l, values);
        self
    }

    /// Adds `amount` to `h` on grid cell `g` of label `l`.
    pub fn with_spike(mut self, l: Label, g: usize, amount: f64) -> Self {
        self.spikes.push((l, g, amount));
        self
    }

    pub fn at(&self, l: &Label, g: usize) -> f64 {
        let base = self.base.get(l).map_or(self.default, |v| v[g]);
        base + self
            .spikes
            .iter()
            .filter(|(sl, sg, _)| sl == l && *sg == g)
            .map(|s| s.2)
            .sum::<f64>()
    }

    /// `s[h] = Σ_g h(x_g, l) s(x_g) Δx` for a tabulated density `s`.
    fn integrate(&self, l: &Label, s: &[f64], cell: f64) -> f64 {
        let base: f64 = match self.base.get(l) {
            Some(h) => h.iter().zip(s).map(|(a, b)| a * b).sum(),
            None => self.default * s.iter().sum::<f64>(),
        };
        let spikes: f64 = self.spikes.iter().filter(|x| x.0 == *l).map(|x| x.2 * s[x.1]).sum();
        (base + spikes) * cell
    }

    /// True when every value lies in `[0, 1]`.
    pub fn is_bounded(&self, grid_len: usize) -> bool {
        let labels: Vec<Label> = self.base.keys().chain(self.spikes.iter().map(|s| &s.0)).copied().collect();
        (0.0..=1.0).contains(&self.default)
            && labels
                .iter()
                .all(|l| (0..grid_len).all(|g| (0.0..=1.0).contains(&self.at(l, g))))
    }
}

/// `G[h] = ∫ h^X f(X) δX` on a scene.
pub trait Pgfl {
    fn pgfl(&self, h: &TestFunction, scene: &DiscreteScene) -> f64;
}

impl Pgfl for DiscreteDensity {
    /// Direct sum over every tabulated labeled set.
    fn pgfl(&self, h: &TestFunction, scene: &DiscreteScene) -> f64 {
        let n = scene.grid().len();
        let mut total = 0.0;
        for (set, table) in self.values() {
            let labels = set.as_slice();
            let hv: Vec<Vec<f64>> = labels.iter().map(|l| (0..n).map(|g| h.at(l, g)).collect()).collect();
            let mut s = 0.0;
            for (idx, v) in table.iter().enumerate() {
                if *v == 0.0 {
                    continue;
                }
                let mut rest = idx;
                let mut prod = *v;
                for k in (0..labels.len()).rev() {
                    prod *= hv[k][rest % n];
                    rest /= n;
                }
                s += prod;
            }
            total += s * scene.cell().powi(labels.len() as i32);
        }
        total
    }
}

impl Pgfl for GlmbDensity {
    /// `Σ_o Σ_L ω^o(L) ∏_{l∈L} s^o_l[h]` with each `s[h]` by grid quadrature.
    fn pgfl(&self, h: &TestFunction, scene: &DiscreteScene) -> f64 {
        let mut integrals: BTreeMap<(&crate::hypothesis::HypothesisIndex, Label), f64> = BTreeMap::new();
        for (o, table) in self.spatial() {
            for (l, s) in table {
                let dens: Vec<f64> = scene.grid().iter().map(|x| s.density(x)).collect();
                integrals.insert((o, *l), h.integrate(l, &dens, scene.cell()));
            }
        }
        self.weights()
            .iter()
            .map(|((o, set), w)| w * set.iter().map(|l| integrals[&(o, *l)]).product::<f64>())
            .sum()
    }
}

impl Pgfl for SlcDensity {
    fn pgfl(&self, h: &TestFunction, scene: &DiscreteScene) -> f64 {
        to_glmb(self).pgfl(h, scene)
    }
}

/// Central-difference estimate of `δ^n F / δx_1..δx_n [h0]` for `n ≤ 2`,
/// with `F = G` or `F = log G`, at a single step `eps`.
///
/// The Dirac mass at `x` is `1/Δx` on the grid cell nearest `x`.
pub fn functional_derivative_fd_step<D: Pgfl + ?Sized>(
    d: &D,
    points: &[LabeledState],
    h0: &TestFunction,
    scene: &DiscreteScene,
    eps: f64,
    log: bool,
) -> Result<f64> {
    if !(eps.is_finite() && eps >= MIN_STEP) {
        return Err(Error::StepUnderflow(eps));
    }
    if points.len() > 2 {
        return Err(Error::InvalidModel("at most two derivative points".into()));
    }
    let cells: Vec<(Label, usize)> = points.iter().map(|p| (p.label, scene.nearest(&p.kinematic))).collect();
    let amp = eps / scene.cell();
    let eval = |signs: &[f64]| {
        let mut h = h0.clone();
        for ((l, g), s) in cells.iter().zip(signs) {
            h = h.with_spike(*l, *g, s * amp);
        }
        let v = d.pgfl(&h, scene);
        if log {
            v.ln()
        } else {
            v
        }
    };
    Ok(match points.len() {
        0 => eval(&[]),
        1 => (eval(&[1.0]) - eval(&[-1.0])) / (2.0 * eps),
        _ => (eval(&[1.0, 1.0]) - eval(&[1.0, -1.0]) - eval(&[-1.0, 1.0]) + eval(&[-1.0, -1.0])) / (4.0 * eps * eps),
    })
}

/// [`functional_derivative_fd_step`] at `eps` and `eps/2`, combined by one
/// Richardson extrapolation step to cancel the `eps²` error term.
pub fn functional_derivative_fd<D: Pgfl + ?Sized>(
    d: &D,
    points: &[LabeledState],
    h0: &TestFunction,
    scene: &DiscreteScene,
    eps: f64,
    log: bool,
) -> Result<f64> {
    let coarse = functional_derivative_fd_step(d, points, h0, scene, eps, log)?;
    let fine = functional_derivative_fd_step(d, points, h0, scene, eps / 2.0, log)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Finite-difference factorial covariance density: the mixed second
/// derivative of `log G` at `h = 1`.
pub fn fcd_fd<D: Pgfl + ?Sized>(d: &D, x1: &LabeledState, x2: &LabeledState, scene: &DiscreteScene) -> Result<f64> {
    functional_derivative_fd(
        d,
        &[x1.clone(), x2.clone()],
        &TestFunction::constant(1.0),
        scene,
        FCD_STEP,
        true,
    )
}
