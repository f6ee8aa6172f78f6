//! Wire messages exchanged with a model backend.
//!
//! Field names are fixed by `schema/oracle-protocol.schema.json`. Every
//! message carries the protocol version; a mismatch fails fast.

use serde::{Deserialize, Serialize};

use super::OracleError;

pub const PROTOCOL_VERSION: &str = "1";

/// Tolerance on attention row sums.
pub const ATTENTION_ROW_TOL: f64 = 1e-4;
/// Tolerance on class-probability sums.
pub const PROBABILITY_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub version: String,
    pub id: u64,
    pub part1: Vec<String>,
    pub part2: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictResponse {
    pub version: String,
    pub id: u64,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeRequest {
    pub version: String,
    pub id: u64,
    pub part1: Vec<String>,
    pub part2: Vec<String>,
}

/// Forward-pass outputs for one input, at word level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeResult {
    pub part1: Vec<String>,
    pub part2: Vec<String>,
    /// Index of the first Part 2 token in the concatenated sequence.
    pub boundary: usize,
    /// Top-layer attention, one row-stochastic `T × T` matrix per head.
    pub attention: Vec<Vec<Vec<f64>>>,
    pub cls: Vec<f64>,
    pub head_count: usize,
    pub probabilities: Vec<f64>,
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeResponse {
    pub version: String,
    pub id: u64,
    pub part1: Vec<String>,
    pub part2: Vec<String>,
    pub boundary: usize,
    pub attention: Vec<Vec<Vec<f64>>>,
    pub cls: Vec<f64>,
    pub head_count: usize,
    pub probabilities: Vec<f64>,
    pub predicted: usize,
}

impl EncodeResponse {
    pub fn new(id: u64, r: EncodeResult) -> Self {
        EncodeResponse {
            version: PROTOCOL_VERSION.to_string(),
            id,
            part1: r.part1,
            part2: r.part2,
            boundary: r.boundary,
            attention: r.attention,
            cls: r.cls,
            head_count: r.head_count,
            probabilities: r.probabilities,
            predicted: r.predicted,
        }
    }

    pub fn into_result(self) -> EncodeResult {
        EncodeResult {
            part1: self.part1,
            part2: self.part2,
            boundary: self.boundary,
            attention: self.attention,
            cls: self.cls,
            head_count: self.head_count,
            probabilities: self.probabilities,
            predicted: self.predicted,
        }
    }
}

/// Static model description: CLS size `n`, heads `a`, classes `m`, and the
/// `n × m` classifier matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    pub n: usize,
    pub a: usize,
    pub m: usize,
    pub classifier: Vec<Vec<f64>>,
    pub label_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaResponse {
    pub version: String,
    /// Present on the stdio transport, where responses are matched by id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    pub n: usize,
    pub a: usize,
    pub m: usize,
    pub classifier: Vec<Vec<f64>>,
    pub label_names: Vec<String>,
}

impl MetaResponse {
    pub fn new(id: Option<u64>, meta: ModelMeta) -> Self {
        MetaResponse {
            version: PROTOCOL_VERSION.to_string(),
            id,
            n: meta.n,
            a: meta.a,
            m: meta.m,
            classifier: meta.classifier,
            label_names: meta.label_names,
        }
    }

    pub fn into_meta(self) -> ModelMeta {
        ModelMeta { n: self.n, a: self.a, m: self.m, classifier: self.classifier, label_names: self.label_names }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorResponse {
    pub version: String,
    pub id: Option<u64>,
    pub error: ErrorBody,
}

/// One line of the stdio transport, tagged by `method`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum StdioRequest {
    Predict(PredictRequest),
    Encode(EncodeRequest),
    Meta(MetaRequest),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaRequest {
    pub version: String,
    pub id: u64,
}

pub fn check_version(got: &str) -> Result<(), OracleError> {
    if got == PROTOCOL_VERSION {
        Ok(())
    } else {
        Err(OracleError::VersionMismatch { expected: PROTOCOL_VERSION.to_string(), got: got.to_string() })
    }
}

pub fn validate_probabilities(p: &[f64], classes: Option<usize>) -> Result<(), OracleError> {
    if p.is_empty() {
        return Err(OracleError::Invalid("empty probability vector".into()));
    }
    if let Some(m) = classes {
        if p.len() != m {
            return Err(OracleError::Invalid(format!("{} probabilities for {m} classes", p.len())));
        }
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
        return Err(OracleError::Invalid("probability outside [0, 1]".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(OracleError::Invalid(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

impl EncodeResult {
    pub fn token_count(&self) -> usize {
        self.part1.len() + self.part2.len()
    }

    /// Checks every invariant a backend promises for an encode response.
    pub fn validate(&self) -> Result<(), OracleError> {
        let invalid = |m: String| Err(OracleError::Invalid(m));
        if self.part1.is_empty() || self.part2.is_empty() {
            return invalid("encode result has an empty part".into());
        }
        if self.boundary != self.part1.len() {
            return invalid(format!("boundary {} != part 1 length {}", self.boundary, self.part1.len()));
        }
        if self.head_count == 0 || self.attention.len() != self.head_count {
            return invalid(format!("{} attention matrices for {} heads", self.attention.len(), self.head_count));
        }
        if self.cls.len() % self.head_count != 0 {
            return invalid(format!("cls length {} not divisible by {} heads", self.cls.len(), self.head_count));
        }
        let t = self.token_count();
        for (h, mat) in self.attention.iter().enumerate() {
            if mat.len() != t || mat.iter().any(|row| row.len() != t) {
                return invalid(format!("head {} attention is not {t}×{t}", h + 1));
            }
            for (i, row) in mat.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > ATTENTION_ROW_TOL {
                    return invalid(format!("head {} row {i} is not a distribution (sum {sum})", h + 1));
                }
            }
        }
        validate_probabilities(&self.probabilities, None)?;
        if self.predicted >= self.probabilities.len() {
            return invalid(format!("predicted class {} out of range", self.predicted));
        }
        Ok(())
    }
}

impl ModelMeta {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.a == 0 || self.n % self.a != 0 {
            return Err(OracleError::Invalid(format!("n = {} not divisible by a = {}", self.n, self.a)));
        }
        if self.classifier.len() != self.n || self.classifier.iter().any(|r| r.len() != self.m) {
            return Err(OracleError::Invalid(format!("classifier is not {}×{}", self.n, self.m)));
        }
        if self.label_names.len() != self.m {
            return Err(OracleError::Invalid(format!("{} label names for {} classes", self.label_names.len(), self.m)));
        }
        Ok(())
    }

    /// Column `k` of the classifier: the weight vector of class `k`.
    pub fn class_weights(&self, k: usize) -> Vec<f64> {
        self.classifier.iter().map(|row| row[k]).collect()
    }

    /// Class index of a gold label, matched by name or alias.
    pub fn class_of(&self, label: crate::dataset::Label) -> Option<usize> {
        self.label_names.iter().position(|name| label.aliases().contains(&name.to_ascii_lowercase().as_str()))
    }
}
