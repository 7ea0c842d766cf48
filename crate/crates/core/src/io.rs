//! JSON formats for distributions, Gaussian models and synthetic graphs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discrete::JointDistribution;
use crate::error::Result;
use crate::gaussian::GaussianModel;
use crate::whg::SyntheticWhg;

/// `{"domains": [[v, ...], ...], "probs": [p, ...]}`, probabilities row-major
/// over the domain product with the last tuple fastest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    pub domains: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

/// `{"mu": [...], "sigma": [[...]], "M": 1.0, "lambda": 1.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    pub range: f64,
    pub lambda: f64,
}

impl From<&JointDistribution> for DistributionFile {
    fn from(d: &JointDistribution) -> Self {
        Self { domains: d.domains().to_vec(), probs: d.probs().to_vec() }
    }
}

impl From<&GaussianModel> for ModelFile {
    fn from(m: &GaussianModel) -> Self {
        let s = m.sigma();
        Self {
            mu: m.mu().iter().copied().collect(),
            sigma: (0..m.n()).map(|r| (0..m.n()).map(|c| s[(r, c)]).collect()).collect(),
            range: m.range(),
            lambda: m.lambda(),
        }
    }
}

pub fn parse_distribution(json: &str) -> Result<JointDistribution> {
    let f: DistributionFile = serde_json::from_str(json)?;
    JointDistribution::new(f.domains, f.probs)
}

pub fn parse_model(json: &str) -> Result<GaussianModel> {
    let f: ModelFile = serde_json::from_str(json)?;
    GaussianModel::new(f.mu, f.sigma, f.range, f.lambda)
}

pub fn read_distribution(path: &Path) -> Result<JointDistribution> {
    parse_distribution(&fs::read_to_string(path)?)
}

pub fn read_model(path: &Path) -> Result<GaussianModel> {
    parse_model(&fs::read_to_string(path)?)
}

pub fn read_synthetic(path: &Path) -> Result<SyntheticWhg> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    SyntheticWhg::from_json(&v)
}

pub fn distribution_json(d: &JointDistribution) -> String {
    serde_json::to_string_pretty(&DistributionFile::from(d)).expect("serializes")
}

pub fn model_json(m: &GaussianModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from(m)).expect("serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::PdpError;

    #[test]
    fn distribution_round_trip() {
        let d = parse_distribution(r#"{"domains": [[0, 1], [0, 1]], "probs": [0.3, 0.2, 0.2, 0.3]}"#).unwrap();
        assert_eq!(d.cell(&[0, 1]), 0.2);
        assert_eq!(parse_distribution(&distribution_json(&d)).unwrap(), d);
    }

    #[test]
    fn distribution_errors() {
        let short = parse_distribution(r#"{"domains": [[0, 1], [0, 1]], "probs": [0.5, 0.5]}"#);
        assert!(matches!(short, Err(PdpError::InvalidDistribution(_))));
        let off = parse_distribution(r#"{"domains": [[0, 1]], "probs": [0.5, 0.6]}"#);
        assert!(matches!(off, Err(PdpError::InvalidDistribution(_))));
        assert!(matches!(parse_distribution("{"), Err(PdpError::Json(_))));
    }

    #[test]
    fn model_round_trip() {
        let m = parse_model(r#"{"mu": [0, 0], "sigma": [[1, 0.5], [0.5, 1]], "M": 2.0, "lambda": 1.0}"#).unwrap();
        assert_eq!(m.range(), 2.0);
        assert_eq!(parse_model(&model_json(&m)).unwrap(), m);
        assert!(parse_model(r#"{"mu": [0, 0], "sigma": [[1, 2], [2, 1]], "M": 1, "lambda": 1}"#).is_err());
    }
}
