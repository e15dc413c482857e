//! Serde helpers for extended reals: finite values as numbers, infinities as
//! the strings `"inf"` / `"-inf"` (JSON has no literal for them).

use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;

pub mod ext_real {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtRealVisitor)
    }
}

/// `Option<f64>` where `None` means "+inf / undefined" is handled by plain
/// serde; this module covers bare `f64` fields that may be infinite.
struct ExtRealVisitor;

impl<'de> Visitor<'de> for ExtRealVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        match v.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => other
                .parse::<f64>()
                .map_err(|_| E::custom(format!("not an extended real: {v:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Wrap {
        #[serde(with = "super::ext_real")]
        v: f64,
    }

    #[test]
    fn json_round_trip() {
        for v in [1.5, f64::INFINITY, f64::NEG_INFINITY, -0.25] {
            let s = serde_json::to_string(&Wrap { v }).unwrap();
            let back: Wrap = serde_json::from_str(&s).unwrap();
            assert_eq!(back.v, v);
        }
        let w: Wrap = serde_json::from_str(r#"{"v": 3}"#).unwrap();
        assert_eq!(w.v, 3.0);
    }
}
