//! Per-command configuration: a JSON file, then flag overrides.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use latdisp::decay::{geometric_times, SupConfig};
use latdisp::nls::{SmallDataConfig, SolverConfig};
use latdisp::oscillatory::QuadratureConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// A list of times, written either as a JSON array or as a compact spec:
/// `a:b:geomN` (N geometric points), `a:b:linN` (N equispaced points) or `t1,t2,…`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeList(pub Vec<f64>);

impl FromStr for TimeList {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |m: &str| CliError::Validation(format!("time list {s:?}: {m}"));
        let s = s.trim();
        if s.is_empty() {
            return Err(bad("empty"));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let ts = match parts.as_slice() {
            [a, b, kind] => {
                let a: f64 = a.trim().parse().map_err(|_| bad("bad start"))?;
                let b: f64 = b.trim().parse().map_err(|_| bad("bad end"))?;
                let (geom, count) = if let Some(n) = kind.strip_prefix("geom") {
                    (true, n)
                } else if let Some(n) = kind.strip_prefix("lin") {
                    (false, n)
                } else {
                    return Err(bad("expected geomN or linN"));
                };
                let count: usize = count.parse().map_err(|_| bad("bad point count"))?;
                if count == 0 {
                    return Err(bad("zero points"));
                }
                if geom {
                    if !(a > 0.0 && b > a) {
                        return Err(bad("geometric spacing needs 0 < start < end"));
                    }
                    geometric_times(a, b, count)
                } else if count == 1 {
                    vec![a]
                } else {
                    (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect()
                }
            }
            [one] => one
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad("bad number")))
                .collect::<Result<_, _>>()?,
            _ => return Err(bad("expected a:b:geomN, a:b:linN or a comma list")),
        };
        TimeList::new(ts)
    }
}

impl TimeList {
    pub fn new(ts: Vec<f64>) -> Result<Self, CliError> {
        if ts.is_empty() {
            return Err(CliError::Validation("time list is empty".into()));
        }
        if let Some(t) = ts.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(CliError::Validation(format!("time {t} must be finite and ≥ 0")));
        }
        Ok(TimeList(ts))
    }
}

impl fmt::Display for TimeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", s.join(","))
    }
}

impl Serialize for TimeList {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TimeList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            List(Vec<f64>),
            Spec(String),
        }
        let out = match Raw::deserialize(d)? {
            Raw::List(v) => TimeList::new(v),
            Raw::Spec(s) => s.parse(),
        };
        out.map_err(serde::de::Error::custom)
    }
}

impl Default for TimeList {
    fn default() -> Self {
        TimeList(vec![1.0])
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| CliError::Validation(format!("bad number {x:?}"))))
        .collect()
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenConfig {
    pub gamma: f64,
    pub dim: usize,
    pub t: TimeList,
    /// Lattice points; empty means the box |x|∞ ≤ `radius`.
    pub x: Vec<Vec<i64>>,
    pub radius: i64,
    pub quadrature: QuadratureConfig,
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self { gamma: 0.0, dim: 1, t: TimeList::default(), x: Vec::new(), radius: 5, quadrature: Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayFitConfig {
    pub gamma: Vec<f64>,
    pub dim: usize,
    pub t: TimeList,
    pub sup: SupConfig,
}

impl Default for DecayFitConfig {
    fn default() -> Self {
        Self {
            gamma: vec![0.0],
            dim: 1,
            t: "10:10000:geom16".parse().expect("default time list"),
            sup: SupConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalConfig {
    pub gamma: f64,
    pub dim: usize,
    /// Velocity; empty means v = 0.
    pub v: Vec<f64>,
    pub seed_grid_n: usize,
    pub tol: f64,
    /// Also emit the degenerate catalog (d = 2).
    pub catalog: bool,
    pub curve_samples: usize,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        Self { gamma: 0.0, dim: 2, v: Vec::new(), seed_grid_n: 24, tol: 1e-10, catalog: false, curve_samples: 9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// The point (π/2, π/2) at its critical velocity.
    SpecialPoint,
    /// A sample of the curve E_γ.
    ECurve,
    /// A point of Σ₂.
    Sigma2,
    /// A sample of the curve D_γ.
    DCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    pub gamma: f64,
    pub preset: Option<Preset>,
    /// Explicit base point; used when no preset is given.
    pub xi: Vec<f64>,
    /// Explicit polynomial, map "i,j" → coefficient; bypasses the catalog.
    pub series: Option<std::collections::BTreeMap<String, f64>>,
    pub order: usize,
    pub curve_index: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { gamma: 1.0, preset: None, xi: Vec::new(), series: None, order: 10, curve_index: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    Delta,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialData {
    pub kind: DataKind,
    /// ℓ² norm of the data.
    pub epsilon: f64,
    pub radius: usize,
    pub seed: u64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self { kind: DataKind::Delta, epsilon: 1e-2, radius: 4, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub gamma: f64,
    pub dim: usize,
    pub data: InitialData,
    pub solver: SolverConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { gamma: 0.0, dim: 2, data: InitialData::default(), solver: SolverConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StrichartzMode {
    /// Nonlinear small-data experiment.
    SmallData,
    /// Homogeneous bound over random unit data.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearExperimentConfig {
    pub samples: usize,
    pub radius: usize,
    pub horizons: Vec<f64>,
    pub seed: u64,
    /// Uniform step on [0, t_switch], then geometric with ratio `growth`.
    pub h0: f64,
    pub t_switch: f64,
    pub growth: f64,
}

impl Default for LinearExperimentConfig {
    fn default() -> Self {
        Self {
            samples: 50,
            radius: 8,
            horizons: vec![64.0, 128.0],
            seed: 7,
            h0: 0.02,
            t_switch: 4.0,
            growth: std::f64::consts::SQRT_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrichartzConfig {
    pub mode: StrichartzMode,
    pub gamma: f64,
    pub epsilon: f64,
    pub s: f64,
    pub t_final: f64,
    pub small_data: SmallDataConfig,
    pub linear: LinearExperimentConfig,
}

impl Default for StrichartzConfig {
    fn default() -> Self {
        Self {
            mode: StrichartzMode::SmallData,
            gamma: 0.0,
            epsilon: 1e-2,
            s: 5.0,
            t_final: 50.0,
            small_data: SmallDataConfig::default(),
            linear: LinearExperimentConfig::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_list_specs() {
        let t: TimeList = "10:10000:geom16".parse().unwrap();
        assert_eq!(t.0.len(), 16);
        assert_eq!(t.0[0], 10.0);
        assert_eq!(*t.0.last().unwrap(), 10000.0);
        assert_eq!("0:1:lin3".parse::<TimeList>().unwrap().0, vec![0.0, 0.5, 1.0]);
        assert_eq!("1, 10,100".parse::<TimeList>().unwrap().0, vec![1.0, 10.0, 100.0]);
        for bad in ["", " ", "1:2", "0:10:geom4", "1:10:geom0", "a,b", "1:2:cub3"] {
            assert!(bad.parse::<TimeList>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<DecayFitConfig>(r#"{"gama": [1]}"#).is_err());
        let c: DecayFitConfig = serde_json::from_str(r#"{"gamma": [1], "t": "10:100:geom5"}"#).unwrap();
        assert_eq!(c.t.0.len(), 5);
        assert!(serde_json::from_str::<DecayFitConfig>(r#"{"t": []}"#).is_err());
    }
}
