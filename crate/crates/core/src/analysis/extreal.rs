use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A nonnegative constant that may be `+∞` (for methods without a bounded extension).
///
/// Serialized as a JSON number, or as the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinite => None,
        }
    }

    /// The value as an `f64`, with `+∞` for [`ExtReal::Infinite`].
    pub fn value(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        if x.is_finite() {
            ExtReal::Finite(x)
        } else {
            ExtReal::Infinite
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for ExtReal {
    type Err = std::num::ParseFloatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "inf" {
            Ok(ExtReal::Infinite)
        } else {
            s.parse::<f64>().map(ExtReal::from)
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::Infinite => serializer.serialize_str("inf"),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Number(f64),
    Text(String),
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match Repr::deserialize(deserializer)? {
            Repr::Number(x) => Ok(ExtReal::Finite(x)),
            Repr::Text(s) if s == "inf" => Ok(ExtReal::Infinite),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}
