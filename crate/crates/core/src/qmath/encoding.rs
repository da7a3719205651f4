//! Serde adapters: complex numbers as `[re, im]`, matrices as row lists.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::linalg::{CMat, CVec};

pub type RawComplex = [f64; 2];

pub fn complex_to_raw(z: Complex64) -> RawComplex {
    [z.re, z.im]
}

pub fn raw_to_complex(r: RawComplex) -> Complex64 {
    Complex64::new(r[0], r[1])
}

pub fn matrix_to_rows(m: &CMat) -> Vec<Vec<RawComplex>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| complex_to_raw(m[(r, c)])).collect())
        .collect()
}

/// Fails on ragged input.
pub fn rows_to_matrix(rows: &[Vec<RawComplex>]) -> Option<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return None;
    }
    Some(CMat::from_fn(n, m, |r, c| raw_to_complex(rows[r][c])))
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        complex_to_raw(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        Ok(raw_to_complex(RawComplex::deserialize(d)?))
    }
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows = Vec::<Vec<RawComplex>>::deserialize(d)?;
        rows_to_matrix(&rows).ok_or_else(|| serde::de::Error::custom("ragged matrix rows"))
    }
}

pub mod matrix_pair {
    use super::*;

    pub fn serialize<S: Serializer>(p: &(CMat, CMat), s: S) -> Result<S::Ok, S::Error> {
        [matrix_to_rows(&p.0), matrix_to_rows(&p.1)].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(CMat, CMat), D::Error> {
        let [a, b] = <[Vec<Vec<RawComplex>>; 2]>::deserialize(d)?;
        let bad = || serde::de::Error::custom("ragged matrix rows");
        Ok((
            rows_to_matrix(&a).ok_or_else(bad)?,
            rows_to_matrix(&b).ok_or_else(bad)?,
        ))
    }
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|z| complex_to_raw(*z))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let raw = Vec::<RawComplex>::deserialize(d)?;
        Ok(CVec::from_iterator(
            raw.len(),
            raw.into_iter().map(raw_to_complex),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Holder {
        #[serde(with = "matrix")]
        m: CMat,
        #[serde(with = "complex")]
        z: Complex64,
    }

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let m = CMat::from_fn(3, 2, |r, c| {
            Complex64::new(0.1 * r as f64 + 1.0 / 3.0, -(c as f64) / 7.0)
        });
        let h = Holder {
            m: m.clone(),
            z: Complex64::new(std::f64::consts::PI, 1e-300),
        };
        let text = serde_json::to_string(&h).unwrap();
        let back: Holder = serde_json::from_str(&text).unwrap();
        assert_eq!(back.m, m);
        assert_eq!(back.z, h.z);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let text = r#"{"m": [[[1,0],[0,0]],[[0,0]]], "z": [0,0]}"#;
        assert!(serde_json::from_str::<Holder>(text).is_err());
    }
}
