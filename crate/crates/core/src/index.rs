//! Serde adapters: node and alternative indices are zero-based in Rust and
//! one-based in every external format.

use serde::{de::Error, Deserialize, Deserializer, Serializer};

pub mod one_based {
    use super::*;

    pub fn serialize<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*v as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = u64::deserialize(d)?;
        if v == 0 {
            return Err(D::Error::custom("indices are one-based; 0 is not a valid index"));
        }
        Ok(v as usize - 1)
    }
}

pub mod one_based_pair {
    use super::*;
    use serde::Serialize;

    pub fn serialize<S: Serializer>(v: &(usize, usize), s: S) -> Result<S::Ok, S::Error> {
        [v.0 + 1, v.1 + 1].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(usize, usize), D::Error> {
        let [a, b] = <[u64; 2]>::deserialize(d)?;
        if a == 0 || b == 0 {
            return Err(D::Error::custom("indices are one-based; 0 is not a valid index"));
        }
        Ok((a as usize - 1, b as usize - 1))
    }
}

pub mod one_based_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_some(&(*v as u64 + 1)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        match Option::<u64>::deserialize(d)? {
            Some(0) => Err(D::Error::custom("indices are one-based; 0 is not a valid index")),
            Some(v) => Ok(Some(v as usize - 1)),
            None => Ok(None),
        }
    }
}

pub mod one_based_sets {
    use super::*;
    use serde::Serialize;

    pub fn serialize<S: Serializer>(v: &[Vec<usize>], s: S) -> Result<S::Ok, S::Error> {
        let shifted: Vec<Vec<usize>> = v.iter().map(|set| set.iter().map(|i| i + 1).collect()).collect();
        shifted.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<usize>>, D::Error> {
        let raw = Vec::<Vec<u64>>::deserialize(d)?;
        raw.into_iter()
            .map(|set| {
                set.into_iter()
                    .map(|v| match v {
                        0 => Err(D::Error::custom("indices are one-based; 0 is not a valid index")),
                        v => Ok(v as usize - 1),
                    })
                    .collect()
            })
            .collect()
    }
}
