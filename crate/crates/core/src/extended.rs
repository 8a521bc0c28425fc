//! Serde helpers for extended reals.
//!
//! JSON has no representation for ±∞ or NaN, so non-finite values are written
//! as the strings `"inf"`, `"-inf"` and `"nan"` and read back the same way.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;

/// An `f64` that serializes ±∞ and NaN as strings.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ExtendedReal(pub f64);

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            serializer.serialize_f64(v)
        } else if v.is_nan() {
            serializer.serialize_str("nan")
        } else if v > 0.0 {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtendedVisitor;

        impl Visitor<'_> for ExtendedVisitor {
            type Value = ExtendedReal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtendedReal, E> {
                Ok(ExtendedReal(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtendedReal, E> {
                Ok(ExtendedReal(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtendedReal, E> {
                Ok(ExtendedReal(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtendedReal, E> {
                match v {
                    "inf" => Ok(ExtendedReal(f64::INFINITY)),
                    "-inf" => Ok(ExtendedReal(f64::NEG_INFINITY)),
                    "nan" => Ok(ExtendedReal(f64::NAN)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(ExtendedVisitor)
    }
}

/// `#[serde(with = "crate::extended::scalar")]` for plain `f64` fields.
pub mod scalar {
    use super::ExtendedReal;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        ExtendedReal(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        ExtendedReal::deserialize(d).map(|e| e.0)
    }
}

/// `#[serde(with = "crate::extended::matrix")]` for `Vec<Vec<f64>>` fields.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(m.len()))?;
        for row in m {
            let row: Vec<ExtendedReal> = row.iter().copied().map(ExtendedReal).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows: Vec<Vec<ExtendedReal>> = Vec::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|r| r.into_iter().map(|e| e.0).collect())
            .collect())
    }
}

/// Plain-text rendering used in CSV cells.
pub fn format_extended(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else if v == f64::INFINITY {
        "inf".to_owned()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_owned()
    } else {
        format!("{v}")
    }
}
