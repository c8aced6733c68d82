//! JSON file formats for forms, spaces, triples and holonomy tuples.
//!
//! Matrices are flat row-major arrays. Triples store the map matrices
//! `W_A` with `ω_A(v, w) = (W_A v)(w)`.

use std::fs;
use std::path::{Path, PathBuf};

use hyperkahler_core::exterior::{permutation_sign, BasisIndex};
use hyperkahler_core::reconstruct::SymplecticTriple;
use hyperkahler_core::torus::{self, CompactGroupData, HolonomyTuple, C64};
use hyperkahler_core::{Axis, HyperKahlerSpace, KForm};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Core(#[from] hyperkahler_core::Error),
}

fn field(field: &str, message: impl Into<String>) -> InputError {
    InputError::Field {
        field: field.into(),
        message: message.into(),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Read {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| InputError::Parse {
        path: path.into(),
        source,
    })
}

fn square(name: &str, data: &[f64], dim: usize) -> Result<DMatrix<f64>, InputError> {
    if data.len() != dim * dim {
        return Err(field(
            name,
            format!(
                "expected {} entries for dimension {dim}, found {}",
                dim * dim,
                data.len()
            ),
        ));
    }
    if let Some(i) = data.iter().position(|x| !x.is_finite()) {
        return Err(field(name, format!("entry {i} is not finite")));
    }
    Ok(DMatrix::from_row_slice(dim, dim, data))
}

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermFile {
    pub indices: Vec<usize>,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KFormFile {
    pub dim: usize,
    pub degree: usize,
    pub terms: Vec<TermFile>,
}

impl KFormFile {
    /// Sorts each index list, folding the permutation sign into the
    /// coefficient. Terms with a repeated index vanish and are dropped.
    pub fn to_kform(&self) -> Result<KForm, InputError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (t, term) in self.terms.iter().enumerate() {
            let name = format!("terms[{t}].indices");
            if term.indices.len() != self.degree {
                return Err(field(
                    &name,
                    format!("expected {} indices, found {}", self.degree, term.indices.len()),
                ));
            }
            if let Some(&i) = term.indices.iter().find(|&&i| i >= self.dim) {
                return Err(field(
                    &name,
                    format!("index {i} out of range for dimension {}", self.dim),
                ));
            }
            let Some(sign) = permutation_sign(&term.indices) else {
                continue;
            };
            let mut sorted = term.indices.clone();
            sorted.sort_unstable();
            let blade = BasisIndex::from_indices(self.dim, &sorted)?;
            terms.push((blade, f64::from(sign) * term.coeff));
        }
        Ok(KForm::from_terms(self.dim, self.degree, terms)?)
    }

    pub fn from_kform(form: &KForm) -> Self {
        KFormFile {
            dim: form.dim(),
            degree: form.degree(),
            terms: form
                .terms()
                .map(|(b, c)| TermFile {
                    indices: b.indices().collect(),
                    coeff: c,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub k: usize,
    pub gram: Vec<f64>,
    #[serde(rename = "I")]
    pub i: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Vec<f64>,
    #[serde(rename = "K")]
    pub k_structure: Vec<f64>,
}

impl SpaceFile {
    pub fn to_space(&self, tol: f64) -> Result<HyperKahlerSpace, InputError> {
        let dim = 4 * self.k;
        let gram = square("gram", &self.gram, dim)?;
        let structures = [
            square("I", &self.i, dim)?,
            square("J", &self.j, dim)?,
            square("K", &self.k_structure, dim)?,
        ];
        Ok(HyperKahlerSpace::from_parts(self.k, gram, structures, tol)?)
    }

    pub fn from_space(s: &HyperKahlerSpace) -> Self {
        SpaceFile {
            k: s.k(),
            gram: flat(s.gram()),
            i: flat(s.structure(Axis::I)),
            j: flat(s.structure(Axis::J)),
            k_structure: flat(s.structure(Axis::K)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleFile {
    pub dim: usize,
    #[serde(rename = "W_I")]
    pub w_i: Vec<f64>,
    #[serde(rename = "W_J")]
    pub w_j: Vec<f64>,
    #[serde(rename = "W_K")]
    pub w_k: Vec<f64>,
}

impl TripleFile {
    pub fn to_triple(&self) -> Result<SymplecticTriple, InputError> {
        let maps = [
            square("W_I", &self.w_i, self.dim)?,
            square("W_J", &self.w_j, self.dim)?,
            square("W_K", &self.w_k, self.dim)?,
        ];
        Ok(SymplecticTriple::from_maps(maps)?)
    }

    pub fn from_triple(t: &SymplecticTriple) -> Self {
        TripleFile {
            dim: t.dim(),
            w_i: flat(t.map(Axis::I)),
            w_j: flat(t.map(Axis::J)),
            w_k: flat(t.map(Axis::K)),
        }
    }
}

/// A complex matrix as row-major `[re, im]` pairs.
pub type ComplexEntries = Vec<[f64; 2]>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupDataFile {
    pub name: String,
    pub rank: usize,
    pub basis: Vec<ComplexEntries>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TupleFile {
    Angles {
        group: String,
        angles: Vec<f64>,
    },
    Explicit {
        group_data: GroupDataFile,
        generators: Vec<ComplexEntries>,
    },
}

fn complex_matrix(name: &str, entries: &ComplexEntries) -> Result<DMatrix<C64>, InputError> {
    let d = (entries.len() as f64).sqrt().round() as usize;
    if d * d != entries.len() || d == 0 {
        return Err(field(
            name,
            format!("{} entries do not form a square matrix", entries.len()),
        ));
    }
    Ok(DMatrix::from_row_iterator(
        d,
        d,
        entries.iter().map(|[re, im]| C64::new(*re, *im)),
    ))
}

impl TupleFile {
    pub fn to_tuple(&self) -> Result<HolonomyTuple, InputError> {
        match self {
            TupleFile::Angles { group, angles } => {
                if group != "su2" {
                    return Err(field("group", format!("unknown group `{group}`, expected `su2`")));
                }
                Ok(torus::su2_holonomy_from_angles(angles)?)
            }
            TupleFile::Explicit { group_data, generators } => {
                let basis = group_data
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(i, b)| complex_matrix(&format!("group_data.basis[{i}]"), b))
                    .collect::<Result<Vec<_>, _>>()?;
                let group = CompactGroupData::new(&group_data.name, group_data.rank, basis)?;
                let generators = generators
                    .iter()
                    .enumerate()
                    .map(|(i, g)| complex_matrix(&format!("generators[{i}]"), g))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(HolonomyTuple::new(group, generators)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kform_loader_normalizes_order() {
        let f: KFormFile = serde_json::from_str(
            r#"{"dim": 4, "degree": 2, "terms": [{"indices": [1, 0], "coeff": 2.0}, {"indices": [2, 2], "coeff": 5.0}]}"#,
        )
        .unwrap();
        let form = f.to_kform().unwrap();
        assert_eq!(form.coeff(BasisIndex::from_indices(4, &[0, 1]).unwrap()), -2.0);
        assert_eq!(form.terms().count(), 1);
        let back = KFormFile::from_kform(&form);
        assert_eq!(back.terms[0].indices, vec![0, 1]);
    }

    #[test]
    fn kform_loader_rejects_bad_terms() {
        let f = KFormFile {
            dim: 4,
            degree: 2,
            terms: vec![TermFile {
                indices: vec![0, 7],
                coeff: 1.0,
            }],
        };
        let err = f.to_kform().unwrap_err().to_string();
        assert!(err.contains("terms[0].indices"), "{err}");
    }

    #[test]
    fn space_round_trip() {
        let s = HyperKahlerSpace::random(1, 3).unwrap();
        let back = SpaceFile::from_space(&s).to_space(1e-8).unwrap();
        assert!((back.gram() - s.gram()).norm() == 0.0);
        assert_eq!(back.orientation(), s.orientation());
    }

    #[test]
    fn triple_size_mismatch_names_field() {
        let f = TripleFile {
            dim: 4,
            w_i: vec![0.0; 16],
            w_j: vec![0.0; 15],
            w_k: vec![0.0; 16],
        };
        let err = f.to_triple().unwrap_err().to_string();
        assert!(err.starts_with("field `W_J`"), "{err}");
    }

    #[test]
    fn tuple_formats() {
        let a: TupleFile = serde_json::from_str(r#"{"group": "su2", "angles": [0.7, 1.3, 2.1, 0.4]}"#).unwrap();
        assert_eq!(a.to_tuple().unwrap().len(), 4);
        let bad: TupleFile = serde_json::from_str(r#"{"group": "so3", "angles": [0.0]}"#).unwrap();
        assert!(bad.to_tuple().is_err());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let explicit = format!(
            r#"{{"group_data": {{"name": "su2", "rank": 1, "basis": [
                [[0,0],[0,{s}],[0,{s}],[0,0]],
                [[0,0],[{s},0],[-{s},0],[0,0]],
                [[0,{s}],[0,0],[0,0],[0,-{s}]]]}},
              "generators": [[[0,1],[0,0],[0,0],[0,-1]]]}}"#
        );
        let e: TupleFile = serde_json::from_str(&explicit).unwrap();
        let t = e.to_tuple().unwrap();
        assert!((&t.group.inner - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
    }
}
