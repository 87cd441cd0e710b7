//! Brute-force ground truth on a discretized single-target space.
//!
//! Every labeled finite set over a small label set and a grid is enumerated
//! explicitly, so set integrals, Bayes updates and p.g.fl.s can be evaluated
//! without any of the closed forms they are meant to check.

mod pgfl;

pub use pgfl::{fcd_fd, DEFAULT_STEP, FCD_STEP, functional_derivative_fd, functional_derivative_fd_step, Pgfl, TestFunction};

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::glmb::GlmbDensity;
use crate::lrfs::{Label, LabelSet};
use crate::numeric::NORMALIZER_FLOOR;
use crate::single_target::SensorModel;
use crate::slc::{to_glmb, SlcDensity};

/// Largest number of grid/label tuples any enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 50_000_000;

/// Discretized kinematic space with the labels that may appear.
#[derive(Clone, Debug)]
pub struct DiscreteScene {
    grid: Vec<DVector<f64>>,
    cell: f64,
    labels: LabelSet,
    max_cardinality: usize,
    enumeration_cap: u128,
}

impl DiscreteScene {
    pub fn new(grid: Vec<DVector<f64>>, cell: f64, labels: LabelSet, max_cardinality: usize) -> Result<Self> {
        if !(cell > 0.0) {
            return Err(Error::InvalidModel(format!("cell measure {cell}")));
        }
        if grid.is_empty() {
            return Err(Error::InvalidModel("empty grid".into()));
        }
        if labels.len() > 3 || max_cardinality > 3 {
            return Err(Error::InvalidModel("at most three labels and cardinality three".into()));
        }
        let mut sorted: Vec<&[f64]> = grid.iter().map(|p| p.as_slice()).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel("repeated grid point".into()));
        }
        Ok(DiscreteScene {
            grid,
            cell,
            labels,
            max_cardinality,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    /// `n` evenly spaced points on `[lo, hi]`.
    pub fn uniform_1d(lo: f64, hi: f64, n: usize, labels: LabelSet) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidModel(format!("grid [{lo}, {hi}] with {n} points")));
        }
        let dx = (hi - lo) / (n - 1) as f64;
        let grid = (0..n).map(|i| DVector::from_element(1, lo + dx * i as f64)).collect();
        let max = labels.len();
        Self::new(grid, dx, labels, max)
    }

    /// Tensor product of two uniform axes.
    pub fn product_2d(x: (f64, f64, usize), y: (f64, f64, usize), labels: LabelSet) -> Result<Self> {
        let ax = Self::uniform_1d(x.0, x.1, x.2, LabelSet::empty())?;
        let ay = Self::uniform_1d(y.0, y.1, y.2, LabelSet::empty())?;
        let grid = ax
            .grid
            .iter()
            .flat_map(|p| ay.grid.iter().map(move |q| DVector::from_vec(vec![p[0], q[0]])))
            .collect();
        let max = labels.len();
        Self::new(grid, ax.cell * ay.cell, labels, max)
    }

    pub fn with_enumeration_cap(mut self, cap: u128) -> Self {
        self.enumeration_cap = cap;
        self
    }

    pub fn with_max_cardinality(mut self, n: usize) -> Self {
        self.max_cardinality = n.min(3);
        self
    }

    pub fn grid(&self) -> &[DVector<f64>] {
        &self.grid
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn max_cardinality(&self) -> usize {
        self.max_cardinality
    }

    /// Index of the grid point nearest to `x`.
    pub fn nearest(&self, x: &DVector<f64>) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.grid.iter().enumerate() {
            let d = (p - x).norm_squared();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Label sets the scene can represent, in sorted order.
    pub fn label_sets(&self) -> Vec<LabelSet> {
        let mut v: Vec<LabelSet> = self.labels.subsets().filter(|s| s.len() <= self.max_cardinality).collect();
        v.sort();
        v
    }

    fn check_size(&self, size: u128) -> Result<()> {
        if size > self.enumeration_cap {
            return Err(Error::CardinalityOverflow {
                size,
                cap: self.enumeration_cap,
            });
        }
        Ok(())
    }

    fn tuples(&self, n: usize) -> u128 {
        (self.grid.len() as u128).pow(n as u32)
    }
}

/// Set integral
/// `Σ_n (1/n!) Σ_{(l_1..l_n)} Σ_{(x_1..x_n)} f({(x_1,l_1),..}) Δx^n`
/// over ordered label tuples and grid tuples. Tuples with a repeated label
/// are not labeled finite sets and contribute nothing.
///
/// `f` receives the labels and grid indices of one ordered tuple.
pub fn set_integral(scene: &DiscreteScene, f: impl Fn(&[Label], &[usize]) -> f64) -> Result<f64> {
    let k = scene.labels.len() as u128;
    let size: u128 = (0..=scene.max_cardinality).map(|n| k.pow(n as u32) * scene.tuples(n)).sum();
    scene.check_size(size)?;
    let labels = scene.labels.as_slice();
    let mut total = 0.0;
    let mut factorial = 1.0;
    for n in 0..=scene.max_cardinality {
        if n > 0 {
            factorial *= n as f64;
        }
        let mut stratum = 0.0;
        for_each_tuple(labels.len(), n, |li| {
            let ls: Vec<Label> = li.iter().map(|i| labels[*i]).collect();
            if (1..n).any(|a| ls[..a].contains(&ls[a])) {
                return;
            }
            for_each_tuple(scene.grid.len(), n, |gi| stratum += f(&ls, gi));
        });
        total += stratum * scene.cell.powi(n as i32) / factorial;
    }
    Ok(total)
}

/// Calls `f` with every tuple in `{0..base}^n`, lexicographically.
fn for_each_tuple(base: usize, n: usize, mut f: impl FnMut(&[usize])) {
    if n == 0 {
        f(&[]);
        return;
    }
    if base == 0 {
        return;
    }
    let mut idx = vec![0usize; n];
    loop {
        f(&idx);
        let mut d = n;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < base {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Multitarget density tabulated on a scene: for each label set
/// `{l_1 < .. < l_n}` a row-major table over grid tuples `(g_1, .., g_n)`
/// holding `f({(x_{g_1}, l_1), .., (x_{g_n}, l_n)})`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDensity {
    values: BTreeMap<LabelSet, Vec<f64>>,
    grid_len: usize,
    cell: f64,
}

impl DiscreteDensity {
    /// Tabulates `f`, given the (sorted) labels and grid indices of a set.
    pub fn tabulate(scene: &DiscreteScene, f: impl Fn(&LabelSet, &[usize]) -> f64) -> Result<Self> {
        let size: u128 = scene.label_sets().iter().map(|s| scene.tuples(s.len())).sum();
        scene.check_size(size)?;
        let mut values = BTreeMap::new();
        for set in scene.label_sets() {
            let mut table = Vec::with_capacity(scene.tuples(set.len()) as usize);
            for_each_tuple(scene.grid.len(), set.len(), |gi| table.push(f(&set, gi)));
            values.insert(set, table);
        }
        Ok(DiscreteDensity {
            values,
            grid_len: scene.grid.len(),
            cell: scene.cell,
        })
    }

    /// Point evaluation of a GLMB density on the grid.
    pub fn from_glmb(d: &GlmbDensity, scene: &DiscreteScene) -> Result<Self> {
        check_support(d, scene)?;
        // per (hypothesis, label): density at every grid point
        let mut tables: BTreeMap<_, BTreeMap<Label, Vec<f64>>> = BTreeMap::new();
        for (o, table) in d.spatial() {
            let per_label = table
                .iter()
                .map(|(l, s)| (*l, scene.grid.iter().map(|x| s.density(x)).collect()))
                .collect();
            tables.insert(o.clone(), per_label);
        }
        let mut by_set: BTreeMap<&LabelSet, Vec<(f64, &BTreeMap<Label, Vec<f64>>)>> = BTreeMap::new();
        for ((o, set), w) in d.weights() {
            by_set.entry(set).or_default().push((*w, &tables[o]));
        }
        Self::tabulate(scene, |set, gi| {
            let Some(terms) = by_set.get(set) else { return 0.0 };
            terms
                .iter()
                .map(|(w, t)| w * set.iter().zip(gi).map(|(l, g)| t[l][*g]).product::<f64>())
                .sum()
        })
    }

    pub fn from_slc(d: &SlcDensity, scene: &DiscreteScene) -> Result<Self> {
        Self::from_glmb(&to_glmb(d), scene)
    }

    pub fn values(&self) -> &BTreeMap<LabelSet, Vec<f64>> {
        &self.values
    }

    /// `f` at the set with sorted labels `set` placed at grid indices `gi`.
    pub fn value(&self, set: &LabelSet, gi: &[usize]) -> f64 {
        let Some(t) = self.values.get(set) else { return 0.0 };
        let idx = gi.iter().fold(0usize, |acc, g| acc * self.grid_len + g);
        t[idx]
    }

    /// Value at an ordered label tuple; zero when a label repeats.
    pub fn value_ordered(&self, labels: &[Label], gi: &[usize]) -> f64 {
        let mut pairs: Vec<(Label, usize)> = labels.iter().copied().zip(gi.iter().copied()).collect();
        pairs.sort();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return 0.0;
        }
        let set: LabelSet = pairs.iter().map(|p| p.0).collect();
        let g: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        self.value(&set, &g)
    }

    /// `∫ f(..) dx_1..dx_n` over all placements of the labels in `set`.
    pub fn label_mass(&self, set: &LabelSet) -> f64 {
        self.values
            .get(set)
            .map_or(0.0, |t| t.iter().sum::<f64>() * self.cell.powi(set.len() as i32))
    }

    /// Set integral evaluated stratum by stratum on sorted label sets.
    pub fn total(&self) -> f64 {
        self.values.keys().map(|s| self.label_mass(s)).sum()
    }

    /// Total-variation distance `½ ∫ |f − g| δX`.
    pub fn tv_distance(&self, other: &DiscreteDensity) -> f64 {
        let keys: std::collections::BTreeSet<&LabelSet> = self.values.keys().chain(other.values.keys()).collect();
        let mut total = 0.0;
        for set in keys {
            let scale = self.cell.powi(set.len() as i32);
            let a = self.values.get(set);
            let b = other.values.get(set);
            let n = a.or(b).map_or(0, |t| t.len());
            let mut s = 0.0;
            for i in 0..n {
                let x = a.map_or(0.0, |t| t[i]);
                let y = b.map_or(0.0, |t| t[i]);
                s += (x - y).abs();
            }
            total += s * scale;
        }
        0.5 * total
    }
}

fn check_support(d: &GlmbDensity, scene: &DiscreteScene) -> Result<()> {
    for (_, set) in d.weights().keys() {
        if !set.is_subset(&scene.labels) || set.len() > scene.max_cardinality {
            return Err(Error::InvalidModel(format!("label set {set} not representable on the scene")));
        }
    }
    Ok(())
}

/// Bayes' rule applied pointwise to every tabulated set, normalized by the
/// set integral of the product.
pub fn bayes_update_bruteforce(
    prior: &DiscreteDensity,
    likelihood: impl Fn(&LabelSet, &[usize]) -> f64,
    scene: &DiscreteScene,
) -> Result<DiscreteDensity> {
    let unnormalized = DiscreteDensity::tabulate(scene, |set, gi| {
        let p = prior.value(set, gi);
        if p == 0.0 {
            0.0
        } else {
            p * likelihood(set, gi)
        }
    })?;
    let total = unnormalized.total();
    if !(total >= NORMALIZER_FLOOR) {
        return Err(Error::DegenerateNormalizer("brute-force Bayes"));
    }
    let values = unnormalized
        .values
        .into_iter()
        .map(|(k, t)| (k, t.into_iter().map(|v| v / total).collect()))
        .collect();
    Ok(DiscreteDensity {
        values,
        grid_len: prior.grid_len,
        cell: prior.cell,
    })
}

/// Standard multitarget likelihood with Poisson clutter:
/// `f(Z|X) = e^{−λ} ∏_z κ(z) · Σ_θ ∏_i φ_θ(x_i)` where `θ` ranges over all
/// injective partial maps from targets to measurements and `φ` is
/// `1 − p_D` for a miss and `p_D g(z|x)/κ(z)` for a detection.
pub fn standard_likelihood(sensor: &SensorModel, measurements: &[DVector<f64>], targets: &[&DVector<f64>]) -> f64 {
    let kappa: Vec<f64> = measurements.iter().map(|z| sensor.clutter.intensity(z)).collect();
    let rate = sensor.clutter.rate;
    let p_d = sensor.detection_prob;
    let mut g = vec![vec![0.0; measurements.len()]; targets.len()];
    for (i, x) in targets.iter().enumerate() {
        let hx = &sensor.observation * *x;
        for (j, z) in measurements.iter().enumerate() {
            g[i][j] = crate::numeric::log_gaussian(z, &hx, &sensor.measurement_noise)
                .expect("positive definite noise")
                .exp();
        }
    }
    fn rec(i: usize, used: &mut Vec<bool>, g: &[Vec<f64>], kappa: &[f64], p_d: f64) -> f64 {
        if i == g.len() {
            return 1.0;
        }
        let mut s = (1.0 - p_d) * rec(i + 1, used, g, kappa, p_d);
        for j in 0..kappa.len() {
            if !used[j] && g[i][j] > 0.0 {
                used[j] = true;
                s += p_d * g[i][j] / kappa[j] * rec(i + 1, used, g, kappa, p_d);
                used[j] = false;
            }
        }
        s
    }
    let clutter: f64 = (-rate).exp() * kappa.iter().product::<f64>();
    clutter * rec(0, &mut vec![false; measurements.len()], &g, &kappa, p_d)
}

/// Brute-force measurement update of `prior` under the standard likelihood.
pub fn bayes_update_standard(
    prior: &DiscreteDensity,
    sensor: &SensorModel,
    measurements: &[DVector<f64>],
    scene: &DiscreteScene,
) -> Result<DiscreteDensity> {
    bayes_update_bruteforce(
        prior,
        |_, gi| {
            let xs: Vec<&DVector<f64>> = gi.iter().map(|g| &scene.grid[*g]).collect();
            standard_likelihood(sensor, measurements, &xs)
        },
        scene,
    )
}
