//! Serialized solution path.
//!
//! Numbers are written in shortest round-trip form, so parsing a document
//! restores every `f64` bit for bit. An unbounded upper end is the string
//! `"inf"`; preserved coordinates are 1-based.

use l1fit::{PenaltyInterval, PerCoordinatePath, SolutionPath, UpperBound};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Hex SHA-256 of the input bytes.
pub fn fingerprint(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound(pub UpperBound);

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            UpperBound::Finite(x) => s.serialize_f64(x),
            UpperBound::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Bound(UpperBound::Finite(x))),
            Raw::Text(t) if t == "inf" => Ok(Bound(UpperBound::Unbounded)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub lo: f64,
    pub hi: Bound,
    /// 1-based; `None` for the zero line.
    pub preserved: Option<usize>,
    pub v: Vec<f64>,
    pub error_intercept: f64,
    pub l1_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub lo: f64,
    pub hi: Bound,
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateRecord {
    /// 1-based.
    pub preserved: usize,
    pub breakpoints: Vec<f64>,
    pub segments: Vec<SegmentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguousRecord {
    pub lo: f64,
    pub hi: Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDocument {
    pub schema_version: u32,
    pub fingerprint: String,
    pub n: usize,
    pub m: usize,
    pub intervals: Vec<IntervalRecord>,
    /// Merge intervals where the winning preserved coordinate changed more
    /// than once.
    #[serde(default)]
    pub multi_crossing: Vec<AmbiguousRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_coordinate: Option<Vec<CoordinateRecord>>,
}

impl PathDocument {
    pub fn new(path: &SolutionPath, n: usize, fingerprint: String) -> Self {
        let intervals = path
            .intervals
            .iter()
            .map(|iv| IntervalRecord {
                lo: iv.lo,
                hi: Bound(iv.hi),
                preserved: iv.preserved.map(|p| p + 1),
                v: iv.v_star.clone(),
                error_intercept: iv.error_intercept,
                l1_slope: iv.l1_slope,
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            fingerprint,
            n,
            m: path.dimension(),
            intervals,
            multi_crossing: path
                .multi_crossing
                .iter()
                .map(|&(lo, hi)| AmbiguousRecord { lo, hi: Bound(hi) })
                .collect(),
            per_coordinate: None,
        }
    }

    pub fn with_per_coordinate(mut self, parts: &[PerCoordinatePath]) -> Self {
        let records = parts
            .iter()
            .map(|p| CoordinateRecord {
                preserved: p.preserved + 1,
                breakpoints: p.breakpoints.clone(),
                segments: p
                    .segments
                    .iter()
                    .enumerate()
                    .map(|(k, s)| SegmentRecord {
                        lo: s.lo,
                        hi: Bound(p.segment_hi(k)),
                        intercept: s.intercept,
                        slope: s.slope,
                    })
                    .collect(),
            })
            .collect();
        self.per_coordinate = Some(records);
        self
    }

    pub fn to_path(&self) -> SolutionPath {
        SolutionPath {
            intervals: self
                .intervals
                .iter()
                .map(|r| PenaltyInterval {
                    lo: r.lo,
                    hi: r.hi.0,
                    v_star: r.v.clone(),
                    preserved: r.preserved.map(|p| p - 1),
                    error_intercept: r.error_intercept,
                    l1_slope: r.l1_slope,
                })
                .collect(),
            multi_crossing: self.multi_crossing.iter().map(|r| (r.lo, r.hi.0)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path document serializes")
    }

    /// Parses a document and checks that preserved indices and direction
    /// lengths agree with `m`.
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        use serde::de::Error;
        let doc: Self = serde_json::from_str(text)?;
        for (k, r) in doc.intervals.iter().enumerate() {
            if r.v.len() != doc.m {
                return Err(serde_json::Error::custom(format!(
                    "interval {k}: direction has {} entries, expected {}",
                    r.v.len(),
                    doc.m
                )));
            }
            if r.preserved.is_some_and(|p| p == 0 || p > doc.m) {
                return Err(serde_json::Error::custom(format!("interval {k}: preserved index out of range")));
            }
        }
        Ok(doc)
    }
}
