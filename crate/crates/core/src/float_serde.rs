//! JSON has no representation for infinities or NaN. Fields that may hold
//! them go through these helpers: finite values are plain numbers, the rest
//! are the strings `"inf"`, `"-inf"` and `"nan"`.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::Deserialize;
use std::fmt;

#[derive(Clone, Copy)]
struct Repr(f64);

impl serde::Serialize for Repr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Repr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Repr;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Repr, E> {
                Ok(Repr(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Repr, E> {
                Ok(Repr(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Repr, E> {
                Ok(Repr(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Repr, E> {
                match v.to_ascii_lowercase().as_str() {
                    "inf" | "+inf" | "infinity" => Ok(Repr(f64::INFINITY)),
                    "-inf" | "-infinity" => Ok(Repr(f64::NEG_INFINITY)),
                    "nan" => Ok(Repr(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }

            fn visit_unit<E: de::Error>(self) -> Result<Repr, E> {
                Ok(Repr(f64::NAN))
            }
        }
        d.deserialize_any(V)
    }
}

pub mod scalar {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&Repr(*v), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Repr::deserialize(d).map(|r| r.0)
    }
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&Repr(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Repr> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|r| r.0).collect())
    }
}
