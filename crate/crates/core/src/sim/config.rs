//! Scenario configuration read from TOML.
//!
//! ```toml
//! state_dim = 2
//! steps = 10
//! rng_seed = 7
//! cluster_mode = false
//!
//! [motion]
//! transition = [[1.0, 1.0], [0.0, 1.0]]
//! process_noise = [[0.25, 0.5], [0.5, 1.0]]
//! survival_prob = 0.98
//!
//! [sensor]
//! observation = [[1.0, 0.0]]
//! measurement_noise = [[1.0]]
//! detection_prob = 0.9
//! clutter_rate = 5.0
//! region_min = [-100.0]
//! region_max = [100.0]
//!
//! [truncation]
//! min_weight = 1e-7
//! max_hypotheses = 300
//! mode = "exhaustive"   # or "ranked"
//! ranked_k = 50
//! mta_cap = 1000000
//!
//! [[births]]
//! step = 1
//! alpha = [0.5, 0.5]
//! [[births.targets]]
//! existence = 0.9
//! hypotheses = [
//!   [{ weight = 1.0, mean = [-5.0, 1.0], covariance = [[4.0, 0.0], [0.0, 1.0]] }],
//!   [{ weight = 1.0, mean = [5.0, -1.0], covariance = [[4.0, 0.0], [0.0, 1.0]] }],
//! ]
//! ```
//!
//! Birth targets of the entry at step `k` get labels `(k, 1), (k, 2), ..`
//! in file order. `hypotheses[i]` is the Gaussian mixture of component `i`;
//! `alpha` (default `[1.0]`) weights the components for every label set,
//! and `alpha_overrides` entries `{ labels = [1, 2], alpha = [..] }`
//! replace it for the set of targets with those positions.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::association::AssociationMode;
use crate::birth::{SlcBirthModel, SpatialTable};
use crate::error::{Error, Result};
use crate::lrfs::{Label, LabelSet};
use crate::single_target::{ClutterModel, GaussianComponent, MotionModel, SensorModel, SpatialPdf};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub state_dim: usize,
    pub steps: u32,
    pub rng_seed: u64,
    #[serde(default)]
    pub cluster_mode: bool,
    pub motion: MotionConfig,
    pub sensor: SensorConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub births: Vec<BirthConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    pub transition: Vec<Vec<f64>>,
    pub process_noise: Vec<Vec<f64>>,
    pub survival_prob: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub observation: Vec<Vec<f64>>,
    pub measurement_noise: Vec<Vec<f64>>,
    pub detection_prob: f64,
    pub clutter_rate: f64,
    pub region_min: Vec<f64>,
    pub region_max: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationMode {
    Exhaustive,
    Ranked,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    pub min_weight: f64,
    pub max_hypotheses: usize,
    pub mode: TruncationMode,
    pub ranked_k: usize,
    pub mta_cap: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            min_weight: 1e-8,
            max_hypotheses: 500,
            mode: TruncationMode::Exhaustive,
            ranked_k: 50,
            mta_cap: 1 << 20,
        }
    }
}

impl TruncationConfig {
    pub fn association_mode(&self) -> AssociationMode {
        match self.mode {
            TruncationMode::Exhaustive => AssociationMode::Exhaustive { cap: self.mta_cap },
            TruncationMode::Ranked => AssociationMode::Ranked {
                per_hypothesis: self.ranked_k,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthConfig {
    pub step: u32,
    #[serde(default = "unit_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub alpha_overrides: Vec<AlphaOverride>,
    pub targets: Vec<BirthTargetConfig>,
}

fn unit_alpha() -> Vec<f64> {
    vec![1.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaOverride {
    /// 1-based target positions within the birth entry.
    pub labels: Vec<u32>,
    pub alpha: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthTargetConfig {
    pub existence: f64,
    pub hypotheses: Vec<Vec<ComponentConfig>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

/// Validated models built from a [`ScenarioConfig`].
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub motion: MotionModel,
    pub sensor: SensorModel,
    /// Birth model per step; steps without births are absent.
    pub births: BTreeMap<u32, SlcBirthModel>,
}

impl Scenario {
    pub fn birth_at(&self, k: u32) -> SlcBirthModel {
        self.births.get(&k).cloned().unwrap_or_else(SlcBirthModel::none)
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("<toml>", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field and builds the models.
    pub fn build(&self) -> Result<Scenario> {
        let n = self.state_dim;
        if n == 0 {
            return Err(Error::config("state_dim", "must be positive"));
        }
        let f = matrix("motion.transition", &self.motion.transition, Some((n, n)))?;
        let q = matrix("motion.process_noise", &self.motion.process_noise, Some((n, n)))?;
        let motion = MotionModel::new(f, q, self.motion.survival_prob).map_err(|e| field("motion", e))?;

        let s = &self.sensor;
        let h = matrix("sensor.observation", &s.observation, None)?;
        if h.ncols() != n {
            return Err(Error::config("sensor.observation", format!("needs {n} columns, has {}", h.ncols())));
        }
        let m = h.nrows();
        let r = matrix("sensor.measurement_noise", &s.measurement_noise, Some((m, m)))?;
        if s.region_min.len() != m || s.region_max.len() != m {
            return Err(Error::config("sensor.region_min", format!("region must have {m} coordinates")));
        }
        let clutter = ClutterModel::new(
            s.clutter_rate,
            DVector::from_vec(s.region_min.clone()),
            DVector::from_vec(s.region_max.clone()),
        )
        .map_err(|e| field("sensor.clutter_rate", e))?;
        let sensor = SensorModel::new(h, r, s.detection_prob, clutter).map_err(|e| field("sensor", e))?;

        let t = &self.truncation;
        if !(0.0..1.0).contains(&t.min_weight) {
            return Err(Error::config("truncation.min_weight", "must lie in [0, 1)"));
        }
        if t.max_hypotheses == 0 {
            return Err(Error::config("truncation.max_hypotheses", "must be positive"));
        }
        if t.mode == TruncationMode::Ranked && t.ranked_k == 0 {
            return Err(Error::config("truncation.ranked_k", "must be positive"));
        }

        let mut births = BTreeMap::new();
        for (b, entry) in self.births.iter().enumerate() {
            let path = format!("births[{b}]");
            if entry.step == 0 || entry.step > self.steps {
                return Err(Error::config(format!("{path}.step"), format!("must lie in 1..={}", self.steps)));
            }
            if births.contains_key(&entry.step) {
                return Err(Error::config(format!("{path}.step"), "two birth entries for one step"));
            }
            births.insert(entry.step, birth_model(&path, entry, n)?);
        }
        if self.cluster_mode && (self.births.len() != 1 || self.births[0].step != 1) {
            return Err(Error::config("cluster_mode", "needs exactly one birth entry, at step 1"));
        }
        Ok(Scenario {
            config: self.clone(),
            motion,
            sensor,
            births,
        })
    }
}

fn field(path: &str, e: Error) -> Error {
    Error::config(path, e.to_string())
}

fn matrix(path: &str, rows: &[Vec<f64>], shape: Option<(usize, usize)>) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |v| v.len());
    if r == 0 || c == 0 || rows.iter().any(|v| v.len() != c) {
        return Err(Error::config(path, "must be a non-empty rectangular matrix"));
    }
    if let Some((er, ec)) = shape {
        if (r, c) != (er, ec) {
            return Err(Error::config(path, format!("expected {er}x{ec}, found {r}x{c}")));
        }
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::config(path, "entries must be finite"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn birth_model(path: &str, entry: &BirthConfig, n: usize) -> Result<SlcBirthModel> {
    let comps = entry.alpha.len();
    if entry.targets.is_empty() {
        return Err(Error::config(format!("{path}.targets"), "no targets"));
    }
    let mut existence = BTreeMap::new();
    let mut spatial: Vec<SpatialTable> = vec![SpatialTable::new(); comps];
    for (t, target) in entry.targets.iter().enumerate() {
        let tpath = format!("{path}.targets[{t}]");
        let l = Label::new(entry.step, t as u32 + 1);
        existence.insert(l, target.existence);
        if target.hypotheses.len() != comps {
            return Err(Error::config(
                format!("{tpath}.hypotheses"),
                format!("{} mixtures for {comps} alpha entries", target.hypotheses.len()),
            ));
        }
        for (i, mix) in target.hypotheses.iter().enumerate() {
            let hpath = format!("{tpath}.hypotheses[{i}]");
            let mut out = Vec::with_capacity(mix.len());
            for (c, comp) in mix.iter().enumerate() {
                let cpath = format!("{hpath}[{c}]");
                if comp.mean.len() != n {
                    return Err(Error::config(format!("{cpath}.mean"), format!("needs {n} entries")));
                }
                out.push(GaussianComponent {
                    weight: comp.weight,
                    mean: DVector::from_vec(comp.mean.clone()),
                    covariance: matrix(&format!("{cpath}.covariance"), &comp.covariance, Some((n, n)))?,
                });
            }
            let pdf = SpatialPdf::new(out).map_err(|e| field(&hpath, e))?;
            spatial[i].insert(l, Arc::new(pdf));
        }
    }
    let mut overrides = BTreeMap::new();
    for (o, ov) in entry.alpha_overrides.iter().enumerate() {
        let set: LabelSet = ov.labels.iter().map(|i| Label::new(entry.step, (*i).max(1))).collect();
        if ov.labels.iter().any(|i| *i == 0 || *i as usize > entry.targets.len()) {
            return Err(Error::config(format!("{path}.alpha_overrides[{o}].labels"), "positions are 1-based target indices"));
        }
        overrides.insert(set, ov.alpha.clone());
    }
    SlcBirthModel::new(existence, spatial, entry.alpha.clone(), overrides).map_err(|e| field(path, e))
}
