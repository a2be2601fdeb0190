//! JSON run configuration, merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};
use vhlift::bench::{Axis, EstimatorSpec, HausdorffMetric, Param};
use vhlift::estimate::Estimator;
use vhlift::model::{OrientLaw, SubspaceDistribution};
use vhlift::report::read_file;
use vhlift::{Error, Result};

/// Keys mirror the long flag names with `-` replaced by `_`. Lists use the
/// same comma-separated strings as their flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub s: Option<usize>,
    pub r: Option<usize>,
    pub seed: Option<u64>,
    pub distribution: Option<SubspaceDistribution>,
    pub orient_law: Option<OrientLaw>,
    pub delta: Option<f64>,
    #[serde(default, deserialize_with = "snr_value")]
    pub snr: Option<f64>,
    pub rho: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub estimator: Option<Estimator>,
    pub row: Option<usize>,
    pub grid: Option<usize>,
    pub svg: Option<bool>,
    pub refine: Option<bool>,
    pub model: Option<PathBuf>,
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub trials: Option<usize>,
    pub threshold: Option<f64>,
    pub row_axis: Option<String>,
    pub col_axis: Option<String>,
    pub snrs: Option<String>,
    pub estimators: Option<String>,
    pub metric: Option<HausdorffMetric>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(path) => serde_json::from_str(&read_file(path)?)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display()))),
        }
    }
}

/// JSON has no infinity, so SNR accepts a number or the string `"inf"`.
fn snr_value<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Option::<Raw>::deserialize(d)? {
        None => Ok(None),
        Some(Raw::Num(v)) => Ok(Some(v)),
        Some(Raw::Text(t)) => parse_snr(&t).map(Some).map_err(serde::de::Error::custom),
    }
}

/// Flag beats config beats default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

pub fn parse_snr(text: &str) -> Result<f64> {
    match text.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::InvalidConfig(format!("bad SNR `{t}`"))),
    }
}

pub fn parse_snrs(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(parse_snr).collect()
}

pub fn parse_estimators(text: &str) -> Result<Vec<EstimatorSpec>> {
    text.split(',').map(|s| s.trim().parse()).collect()
}

/// `r:1,2,4,8` → axis over `r`.
pub fn parse_axis(text: &str) -> Result<Axis> {
    let (param, values) = text
        .split_once(':')
        .ok_or_else(|| Error::InvalidConfig(format!("axis `{text}` must look like r:1,2,4")))?;
    let param: Param = param.trim().parse()?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad axis value `{v}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Axis { param, values })
}
