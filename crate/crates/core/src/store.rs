//! Binary artifact container shared by tensors, factors and models.
//!
//! Layout: the 4-byte magic `ASHM`, a little-endian `u64` header length, a
//! JSON header, then every array's `f64` values in little-endian order. The
//! header names each array with its shape and carries a SHA-256 of the
//! payload so truncation or bit rot is detected on read.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ASHM";
pub const FORMAT: &str = "aseshm-artifact/1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub kind: String,
    pub endianness: String,
    pub arrays: Vec<ArrayInfo>,
    pub meta: serde_json::Value,
    pub payload_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub kind: String,
    pub meta: serde_json::Value,
    arrays: Vec<(ArrayInfo, Vec<f64>)>,
}

impl Artifact {
    pub fn new(kind: &str, meta: serde_json::Value) -> Self {
        Self {
            kind: kind.into(),
            meta,
            arrays: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, shape: &[usize], data: Vec<f64>) -> Result<()> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::InvalidInput(format!(
                "array `{name}` has {} values, shape {shape:?} needs {}",
                data.len(),
                shape.iter().product::<usize>()
            )));
        }
        self.arrays.push((
            ArrayInfo {
                name: name.into(),
                shape: shape.to_vec(),
            },
            data,
        ));
        Ok(())
    }

    pub fn with(mut self, name: &str, shape: &[usize], data: Vec<f64>) -> Result<Self> {
        self.push(name, shape, data)?;
        Ok(self)
    }

    pub fn array_infos(&self) -> impl Iterator<Item = &ArrayInfo> {
        self.arrays.iter().map(|(i, _)| i)
    }

    pub fn array(&self, name: &str) -> Result<(&[usize], &[f64])> {
        self.arrays
            .iter()
            .find(|(i, _)| i.name == name)
            .map(|(i, d)| (i.shape.as_slice(), d.as_slice()))
            .ok_or_else(|| Error::Integrity(format!("{} artifact lacks array `{name}`", self.kind)))
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Integrity(format!(
                "expected a {kind} artifact, found {}",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload: Vec<u8> = self
            .arrays
            .iter()
            .flat_map(|(_, d)| d.iter().flat_map(|v| v.to_le_bytes()))
            .collect();
        let header = Header {
            format: FORMAT.into(),
            kind: self.kind.clone(),
            endianness: "little".into(),
            arrays: self.arrays.iter().map(|(i, _)| i.clone()).collect(),
            meta: self.meta.clone(),
            payload_sha256: sha256_hex(&payload),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(12 + json.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |what: &str| Error::Integrity(format!("artifact {what}"));
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(corrupt("magic bytes missing"));
        }
        let len = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
        let body = &bytes[12..];
        if len > body.len() {
            return Err(corrupt("header truncated"));
        }
        let header: Header = serde_json::from_slice(&body[..len])
            .map_err(|e| Error::Integrity(format!("artifact header unreadable: {e}")))?;
        if header.format != FORMAT || header.endianness != "little" {
            return Err(corrupt("format or endianness unsupported"));
        }
        let payload = &body[len..];
        if sha256_hex(payload) != header.payload_sha256 {
            return Err(corrupt("payload checksum mismatch"));
        }
        let expected: usize = header.arrays.iter().map(|a| a.shape.iter().product::<usize>()).sum();
        if expected * 8 != payload.len() {
            return Err(corrupt("payload size disagrees with header shapes"));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let arrays = header
            .arrays
            .into_iter()
            .map(|info| {
                let n = info.shape.iter().product();
                let data: Vec<f64> = values.by_ref().take(n).collect();
                (info, data)
            })
            .collect();
        Ok(Self {
            kind: header.kind,
            meta: header.meta,
            arrays,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Deserializes the `meta` block of an artifact, mapping failures to
/// integrity errors.
pub fn meta_as<T: serde::de::DeserializeOwned>(art: &Artifact) -> Result<T> {
    serde_json::from_value(art.meta.clone())
        .map_err(|e| Error::Integrity(format!("{} metadata: {e}", art.kind)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn sample() -> Artifact {
        Artifact::new("demo", json!({"note": "x"}))
            .with("a", &[2, 3], (0..6).map(f64::from).collect())
            .unwrap()
            .with("b", &[1], vec![f64::MIN_POSITIVE])
            .unwrap()
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(Artifact::new("x", json!(null)).with("a", &[2, 2], vec![1.0]).is_err());
    }

    #[test]
    fn flipped_payload_bit_fails_checksum() {
        let mut bytes = sample().to_bytes().unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        assert!(matches!(Artifact::from_bytes(&bytes), Err(Error::Integrity(_))));
    }

    #[test]
    fn garbage_header_is_integrity_error() {
        let mut bytes = sample().to_bytes().unwrap();
        bytes[14] = b'!';
        assert!(matches!(Artifact::from_bytes(&bytes), Err(Error::Integrity(_))));
        assert!(matches!(Artifact::from_bytes(b"nope"), Err(Error::Integrity(_))));
    }

    #[test]
    fn missing_array_is_reported() {
        assert!(sample().array("c").is_err());
        assert_eq!(sample().array("a").unwrap().0, &[2, 3]);
    }

    proptest! {
        #[test]
        fn bytes_round_trip(data in proptest::collection::vec(-1e300f64..1e300, 0..64)) {
            let n = data.len();
            let art = Artifact::new("p", json!({"n": n})).with("v", &[n], data).unwrap();
            prop_assert_eq!(Artifact::from_bytes(&art.to_bytes().unwrap()).unwrap(), art);
        }
    }
}
