//! JSON encoding of CP maps.
//!
//! A map is an object with `dim_in`, `dim_out` and exactly one of
//!
//! * `"kraus"`: list of `dim_in x dim_out` matrices `K_i` with `phi(a) = sum K_i^* a K_i`;
//! * `"choi"`: the `nm x nm` matrix `sum_ij E_ij (x) phi(E_ij)`.
//!
//! Matrices are row-major nested arrays of complex scalars `[re, im]`. For
//! Choi input the dimensions may be omitted when `dim_in = dim_out`.

use serde::{Deserialize, Serialize};

use crate::cpmap::{CpMap, KrausSet};
use crate::error::{Error, Result};
use crate::matrix::{CMat, C64};

type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_out: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<JsonMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<JsonMatrix>,
}

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<CMat> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Parse("matrix has no rows".into()));
    }
    let c = rows[0].len();
    if c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Parse("matrix rows are empty or ragged".into()));
    }
    let data: Vec<C64> = rows
        .iter()
        .flat_map(|row| row.iter().map(|z| C64::new(z[0], z[1])))
        .collect();
    let m = CMat::from_vec(r, c, data)?;
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

impl MapFile {
    /// Choi form, which round-trips bit for bit.
    pub fn from_map(phi: &CpMap) -> Self {
        MapFile {
            dim_in: Some(phi.dim_in()),
            dim_out: Some(phi.dim_out()),
            kraus: None,
            choi: Some(matrix_to_json(phi.choi())),
        }
    }

    pub fn kraus_form(phi: &CpMap) -> Self {
        MapFile {
            dim_in: Some(phi.dim_in()),
            dim_out: Some(phi.dim_out()),
            kraus: Some(phi.kraus().blocks().iter().map(matrix_to_json).collect()),
            choi: None,
        }
    }

    pub fn to_map(&self) -> Result<CpMap> {
        match (&self.kraus, &self.choi) {
            (Some(_), Some(_)) => Err(Error::Parse(
                "exactly one of \"kraus\" and \"choi\" must be present, found both".into(),
            )),
            (None, None) => Err(Error::Parse(
                "exactly one of \"kraus\" and \"choi\" must be present, found neither".into(),
            )),
            (Some(blocks), None) => {
                let mats = blocks
                    .iter()
                    .map(matrix_from_json)
                    .collect::<Result<Vec<_>>>()?;
                let (n, m) = match (self.dim_in, self.dim_out, mats.first()) {
                    (Some(n), Some(m), _) => (n, m),
                    (None, None, Some(k)) => k.shape(),
                    (_, _, None) => return Err(Error::Parse("empty Kraus list".into())),
                    _ => {
                        return Err(Error::Parse(
                            "\"dim_in\" and \"dim_out\" must be given together".into(),
                        ))
                    }
                };
                if mats.is_empty() {
                    return Err(Error::ZeroMap);
                }
                CpMap::from_kraus(KrausSet::new(n, m, mats)?)
            }
            (None, Some(j)) => {
                let j = matrix_from_json(j)?;
                if !j.is_square() {
                    return Err(Error::NonSquare(j.rows(), j.cols()));
                }
                let (n, m) = match (self.dim_in, self.dim_out) {
                    (Some(n), Some(m)) => (n, m),
                    (None, None) => {
                        let s = j.rows();
                        let n = (s as f64).sqrt().round() as usize;
                        if n * n != s {
                            return Err(Error::Parse(format!(
                                "cannot infer dimensions of a {s}x{s} Choi matrix; give dim_in and dim_out"
                            )));
                        }
                        (n, n)
                    }
                    _ => {
                        return Err(Error::Parse(
                            "\"dim_in\" and \"dim_out\" must be given together".into(),
                        ))
                    }
                };
                CpMap::from_choi(n, m, j)
            }
        }
    }
}

pub fn parse_map(text: &str) -> Result<CpMap> {
    let file: MapFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_map()
}

pub fn read_map(path: &std::path::Path) -> Result<CpMap> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_map(&text)
}

/// Choi-form JSON text.
pub fn map_to_json(phi: &CpMap) -> String {
    serde_json::to_string_pretty(&MapFile::from_map(phi)).expect("map files serialize")
}
