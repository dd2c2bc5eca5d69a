//! JSON forms shared by reports and configuration files.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::operators::{CMatrix, DensityOperator, HermitianOperator, QuditRegister, C64};

/// `{dims, re, im}` with row-major nested arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(dims: Vec<usize>, m: &CMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        Self {
            dims,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.re.len();
        let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !square(&self.re) || !square(&self.im) {
            return Err(Error::Config("matrix rows must form a square array".into()));
        }
        let expected: usize = self.dims.iter().product();
        if expected != n {
            return Err(Error::DimensionMismatch { expected, found: n });
        }
        Ok(CMatrix::from_fn(n, n, |r, c| {
            C64::new(self.re[r][c], self.im[r][c])
        }))
    }

    pub fn to_hermitian(&self) -> Result<HermitianOperator> {
        HermitianOperator::new(QuditRegister::new(self.dims.clone())?, self.to_matrix()?)
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        DensityOperator::from_hermitian(self.to_hermitian()?)
    }
}

impl From<&HermitianOperator> for MatrixJson {
    fn from(op: &HermitianOperator) -> Self {
        Self::from_matrix(op.register().dims().to_vec(), op.matrix())
    }
}

impl From<&DensityOperator> for MatrixJson {
    fn from(rho: &DensityOperator) -> Self {
        Self::from(rho.as_hermitian())
    }
}

impl Serialize for HermitianOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MatrixJson::deserialize(d)?
            .to_hermitian()
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MatrixJson::deserialize(d)?
            .to_density()
            .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for bare matrices (`dims` holds the single side length).
pub mod cmatrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(vec![m.nrows()], m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        MatrixJson::deserialize(d)?
            .to_matrix()
            .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for optional lists of matrices.
pub mod cmatrix_vec {
    use super::*;

    pub fn serialize<S: Serializer>(
        ms: &Option<Vec<CMatrix>>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ms.as_ref()
            .map(|v| {
                v.iter()
                    .map(|m| MatrixJson::from_matrix(vec![m.nrows()], m))
                    .collect::<Vec<_>>()
            })
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Vec<CMatrix>>, D::Error> {
        let raw: Option<Vec<MatrixJson>> = Option::deserialize(d)?;
        raw.map(|v| {
            v.iter()
                .map(MatrixJson::to_matrix)
                .collect::<Result<Vec<_>>>()
        })
        .transpose()
        .map_err(serde::de::Error::custom)
    }
}

/// Writes pretty JSON to `path`, or to stdout when `path` is `None`.
pub fn write_json<T: Serialize>(value: &T, path: Option<&std::path::Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => write_stdout(&(text + "\n"))?,
    }
    Ok(())
}

/// Writes to stdout; a closed pipe is not an error.
pub fn write_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let reg = QuditRegister::qubits(1);
        let mut m = CMatrix::identity(2, 2).map(|z| z * 0.5);
        m[(0, 1)] = C64::new(0.1, -0.2);
        m[(1, 0)] = C64::new(0.1, 0.2);
        let rho = DensityOperator::new(reg, m).unwrap();
        let json = serde_json::to_string(&MatrixJson::from(&rho)).unwrap();
        let back: MatrixJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_density().unwrap(), rho);
        assert!(
            serde_json::from_str::<MatrixJson>(r#"{"dims":[2],"re":[],"im":[],"x":1}"#).is_err()
        );
        let direct: DensityOperator =
            serde_json::from_str(&serde_json::to_string(&rho).unwrap()).unwrap();
        assert_eq!(direct, rho);
    }
}
