//! JSON instance files.
//!
//! ```json
//! { "type": "qp", "n": 2, "m": 1,
//!   "Q": [[0, 0], [0, 0]], "c": [1, -1],
//!   "A": [[1, 1]], "b": [1],
//!   "x0": [1, 0], "norm": "l2" }
//! ```
//!
//! LCP files use `M`/`q` instead of `Q`/`c` and carry no `m`, `A`, `b`.
//! Matrices are arrays of rows. Numbers may be JSON numbers or decimal
//! strings; they are written back as shortest round-trip JSON numbers.
//! Output files from the CLI add a `result` object, preserved here as
//! opaque JSON.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{CandidatePoint, LcpInstance, NormChoice, QpInstance};
use crate::error::{dim_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct NumVisitor;

        impl Visitor<'_> for NumVisitor {
            type Value = Num;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a decimal string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                Ok(Num(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                v.trim()
                    .parse::<f64>()
                    .map(Num)
                    .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }

        d.deserialize_any(NumVisitor)
    }
}

type Rows = Vec<Vec<Num>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemType {
    Qp,
    Lcp,
}

/// On-disk layout of an instance (and, for CLI output, its result).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "type")]
    pub kind: ProblemType,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q_matrix: Option<Rows>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m_matrix: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Num>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

/// A parsed and dimension-checked instance.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceData {
    Qp {
        inst: QpInstance,
        point: CandidatePoint,
        norm: Option<NormChoice>,
    },
    Lcp {
        inst: LcpInstance,
        point: CandidatePoint,
        norm: Option<NormChoice>,
    },
}

pub fn matrix_to_rows(a: &DMatrix<f64>) -> Rows {
    a.row_iter().map(|r| r.iter().map(|&v| Num(v)).collect()).collect()
}

pub fn vector_to_nums(v: &DVector<f64>) -> Vec<Num> {
    v.iter().map(|&x| Num(x)).collect()
}

fn rows_to_matrix(name: &str, rows: &Rows, nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return dim_err(format!("{name} has {} rows, expected {nrows}", rows.len()));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return dim_err(format!("{name} row {i} has {} entries, expected {ncols}", r.len()));
    }
    Ok(DMatrix::from_row_iterator(nrows, ncols, rows.iter().flatten().map(|v| v.0)))
}

fn nums_to_vector(name: &str, v: &[Num], len: usize) -> Result<DVector<f64>> {
    if v.len() != len {
        return dim_err(format!("{name} has length {}, expected {len}", v.len()));
    }
    Ok(DVector::from_iterator(len, v.iter().map(|x| x.0)))
}

fn required<'a, T>(field: &'a Option<T>, name: &str, kind: &str) -> Result<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("{kind} instance is missing `{name}`")))
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files are always serializable")
    }

    pub fn from_qp(inst: &QpInstance, point: &CandidatePoint, norm: Option<NormChoice>) -> Self {
        Self {
            kind: ProblemType::Qp,
            n: inst.n(),
            m: Some(inst.m()),
            q_matrix: Some(matrix_to_rows(inst.q())),
            m_matrix: None,
            c: Some(vector_to_nums(inst.c())),
            q: None,
            a: Some(matrix_to_rows(inst.a())),
            b: Some(vector_to_nums(inst.b())),
            x0: point.x0.as_ref().map(vector_to_nums),
            s0: point.s0.as_ref().map(vector_to_nums),
            norm,
            result: None,
        }
    }

    pub fn from_lcp(inst: &LcpInstance, point: &CandidatePoint, norm: Option<NormChoice>) -> Self {
        Self {
            kind: ProblemType::Lcp,
            n: inst.n(),
            m: None,
            q_matrix: None,
            m_matrix: Some(matrix_to_rows(inst.m())),
            c: None,
            q: Some(vector_to_nums(inst.q())),
            a: None,
            b: None,
            x0: point.x0.as_ref().map(vector_to_nums),
            s0: point.s0.as_ref().map(vector_to_nums),
            norm,
            result: None,
        }
    }

    pub fn from_data(data: &InstanceData) -> Self {
        match data {
            InstanceData::Qp { inst, point, norm } => Self::from_qp(inst, point, *norm),
            InstanceData::Lcp { inst, point, norm } => Self::from_lcp(inst, point, *norm),
        }
    }

    pub fn to_data(&self) -> Result<InstanceData> {
        let n = self.n;
        if n == 0 {
            return dim_err("n must be positive");
        }
        let x0 = self.x0.as_deref().map(|v| nums_to_vector("x0", v, n)).transpose()?;
        let s0 = self.s0.as_deref().map(|v| nums_to_vector("s0", v, n)).transpose()?;
        let point = CandidatePoint { x0, s0 };
        match self.kind {
            ProblemType::Qp => {
                let m = *required(&self.m, "m", "qp")?;
                let q = rows_to_matrix("Q", required(&self.q_matrix, "Q", "qp")?, n, n)?;
                let c = nums_to_vector("c", required(&self.c, "c", "qp")?, n)?;
                let a = rows_to_matrix("A", required(&self.a, "A", "qp")?, m, n)?;
                let b = nums_to_vector("b", required(&self.b, "b", "qp")?, m)?;
                Ok(InstanceData::Qp {
                    inst: QpInstance::new(q, c, a, b)?,
                    point,
                    norm: self.norm,
                })
            }
            ProblemType::Lcp => {
                let m = rows_to_matrix("M", required(&self.m_matrix, "M", "lcp")?, n, n)?;
                let q = nums_to_vector("q", required(&self.q, "q", "lcp")?, n)?;
                Ok(InstanceData::Lcp {
                    inst: LcpInstance::new(m, q)?,
                    point,
                    norm: self.norm,
                })
            }
        }
    }
}
