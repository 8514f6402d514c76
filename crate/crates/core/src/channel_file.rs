//! JSON channel descriptions.
//!
//! ```json
//! {"family": "additive", "m": 3, "p": 0.1}
//! {"family": "product", "q1": [[0.9, 0.1], [0.1, 0.9]], "q2": [[0.9, 0.1], [0.1, 0.9]]}
//! {"family": "explicit", "nx1": 2, "nx2": 1, "ny": 2, "kernel": [[[0.9, 0.1]], [[0.1, 0.9]]]}
//! ```
//!
//! `kernel` is indexed `[x1][x2][y]`; `q1`/`q2` are `[x][y]`.

use serde_json::{Map, Value};
use thiserror::Error;

use crate::bounds::{BoundsError, CapacitySurface};
use crate::channel::ChannelError;
use crate::{Channel, PtpChannel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelFileError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("key `family`: unknown family `{0}` (expected additive, product or explicit)")]
    UnknownFamily(String),
    #[error("key `{key}`: {source}")]
    Channel { key: String, source: ChannelError },
}

/// Which family a file described; closed-form surfaces exist for the first two.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelFamily {
    Additive { m: usize, p: f64 },
    Product { q1: PtpChannel, q2: PtpChannel },
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDescription {
    pub family: ChannelFamily,
    pub channel: Channel,
}

impl ChannelDescription {
    /// Closed-form surface when the family has one (or an input alphabet is
    /// trivial), the single-letter surrogate otherwise.
    pub fn surface(&self) -> Result<CapacitySurface, BoundsError> {
        match &self.family {
            ChannelFamily::Additive { m, p } => CapacitySurface::additive(*m, *p),
            ChannelFamily::Product { q1, q2 } => Ok(CapacitySurface::product_of(q1, q2)),
            ChannelFamily::Explicit => Ok(CapacitySurface::for_channel(&self.channel)),
        }
    }

    /// Same family with the noise level replaced (additive only).
    pub fn with_noise(&self, p: f64) -> Result<Self, ChannelFileError> {
        match self.family {
            ChannelFamily::Additive { m, .. } => Ok(Self {
                family: ChannelFamily::Additive { m, p },
                channel: Channel::additive_mod_m(m, p).map_err(|e| ChannelFileError::Channel {
                    key: "p".into(),
                    source: e,
                })?,
            }),
            _ => Err(ChannelFileError::BadValue {
                key: "family".into(),
                msg: "only the additive family has a noise parameter".into(),
            }),
        }
    }
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, ChannelFileError> {
    obj.get(key).ok_or_else(|| ChannelFileError::MissingKey(key.into()))
}

fn bad(key: &str, msg: impl Into<String>) -> ChannelFileError {
    ChannelFileError::BadValue {
        key: key.into(),
        msg: msg.into(),
    }
}

fn as_usize(obj: &Map<String, Value>, key: &str) -> Result<usize, ChannelFileError> {
    get(obj, key)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| bad(key, "expected a nonnegative integer"))
}

fn as_f64(obj: &Map<String, Value>, key: &str) -> Result<f64, ChannelFileError> {
    get(obj, key)?.as_f64().ok_or_else(|| bad(key, "expected a number"))
}

fn matrix(v: &Value, key: &str) -> Result<Vec<Vec<f64>>, ChannelFileError> {
    let rows = v.as_array().ok_or_else(|| bad(key, "expected an array of rows"))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r.as_array()
                .ok_or_else(|| bad(key, format!("row {i} is not an array")))?
                .iter()
                .enumerate()
                .map(|(j, x)| x.as_f64().ok_or_else(|| bad(key, format!("entry [{i}][{j}] is not a number"))))
                .collect()
        })
        .collect()
}

fn ptp(obj: &Map<String, Value>, key: &str) -> Result<PtpChannel, ChannelFileError> {
    let m = matrix(get(obj, key)?, key)?;
    PtpChannel::new(&m).map_err(|e| ChannelFileError::Channel {
        key: key.into(),
        source: e,
    })
}

pub fn parse_channel(text: &str) -> Result<ChannelDescription, ChannelFileError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ChannelFileError::Json(e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| bad("<root>", "expected a JSON object"))?;
    let family = get(obj, "family")?
        .as_str()
        .ok_or_else(|| bad("family", "expected a string"))?;
    match family {
        "additive" => {
            let m = as_usize(obj, "m")?;
            let p = as_f64(obj, "p")?;
            let channel = Channel::additive_mod_m(m, p).map_err(|e| ChannelFileError::Channel {
                key: if m < 2 { "m" } else { "p" }.into(),
                source: e,
            })?;
            Ok(ChannelDescription {
                family: ChannelFamily::Additive { m, p },
                channel,
            })
        }
        "product" => {
            let q1 = ptp(obj, "q1")?;
            let q2 = ptp(obj, "q2")?;
            let channel = Channel::product(&q1, &q2);
            Ok(ChannelDescription {
                family: ChannelFamily::Product { q1, q2 },
                channel,
            })
        }
        "explicit" => {
            let nx1 = as_usize(obj, "nx1")?;
            let nx2 = as_usize(obj, "nx2")?;
            let ny = as_usize(obj, "ny")?;
            let k = get(obj, "kernel")?
                .as_array()
                .ok_or_else(|| bad("kernel", "expected [x1][x2][y] nested arrays"))?;
            if k.len() != nx1 {
                return Err(bad("kernel", format!("has {} entries for x1, nx1 = {nx1}", k.len())));
            }
            let mut rows = Vec::with_capacity(nx1 * nx2);
            for (x1, block) in k.iter().enumerate() {
                let m = matrix(block, "kernel")?;
                if m.len() != nx2 {
                    return Err(bad("kernel", format!("x1 = {x1} has {} rows, nx2 = {nx2}", m.len())));
                }
                rows.extend(m);
            }
            let channel = Channel::new(nx1, nx2, ny, &rows).map_err(|e| ChannelFileError::Channel {
                key: "kernel".into(),
                source: e,
            })?;
            Ok(ChannelDescription {
                family: ChannelFamily::Explicit,
                channel,
            })
        }
        other => Err(ChannelFileError::UnknownFamily(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_roundtrip() {
        let d = parse_channel(r#"{"family":"additive","m":3,"p":0.1}"#).unwrap();
        assert_eq!(d.channel, Channel::additive_mod_m(3, 0.1).unwrap());
        assert!(d.surface().unwrap().is_exact());
    }

    #[test]
    fn explicit_layout() {
        let d = parse_channel(
            r#"{"family":"explicit","nx1":2,"nx2":1,"ny":2,"kernel":[[[0.9,0.1]],[[0.2,0.8]]]}"#,
        )
        .unwrap();
        assert_eq!(d.channel.q(1, 1, 0), 0.8);
        // Trivial second alphabet gets the exact surface.
        assert!(d.surface().unwrap().is_exact());
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse_channel(r#"{"family":"additive","m":3}"#).unwrap_err();
        assert_eq!(e, ChannelFileError::MissingKey("p".into()));
        let e = parse_channel(r#"{"family":"additive","m":3,"p":0.9}"#).unwrap_err();
        assert!(e.to_string().starts_with("key `p`"));
        let e = parse_channel(r#"{"family":"product","q1":[[0.5,0.5]],"q2":[[1,"x"]]}"#).unwrap_err();
        assert!(e.to_string().contains("`q2`"));
        let e = parse_channel(r#"{"family":"explicit","nx1":1,"nx2":1,"ny":2,"kernel":[[[0.5,0.4]]]}"#).unwrap_err();
        assert!(e.to_string().starts_with("key `kernel`"));
        assert!(matches!(parse_channel(r#"{"family":"weird"}"#), Err(ChannelFileError::UnknownFamily(_))));
        assert!(matches!(parse_channel("{"), Err(ChannelFileError::Json(_))));
    }
}
