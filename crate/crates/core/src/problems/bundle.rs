//! A problem on disk: `A.mtx`, `b_clean.txt`, `b_noisy.txt`,
//! `b_outliers.txt`, `x_true.txt` and `meta.json` in one directory. Only
//! `A.mtx` is required; absent vectors read back as `None`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linop::mtx::{read_matrix_market, read_vector, write_vector, MtxMatrix};

#[derive(Debug, Clone)]
pub struct Bundle {
    pub a: MtxMatrix,
    pub b_clean: Option<Vec<f64>>,
    pub b_noisy: Option<Vec<f64>>,
    pub b_outliers: Option<Vec<f64>>,
    pub x_true: Option<Vec<f64>>,
    pub meta: serde_json::Value,
}

impl Bundle {
    /// The data vector to invert: the outlier data when present, else the
    /// noisy data, else the clean data.
    pub fn data(&self) -> Option<&[f64]> {
        self.b_outliers
            .as_deref()
            .or(self.b_noisy.as_deref())
            .or(self.b_clean.as_deref())
    }

    pub fn data_named(&self, which: &str) -> Result<&[f64]> {
        let v = match which {
            "clean" => self.b_clean.as_deref(),
            "noisy" => self.b_noisy.as_deref(),
            "outliers" => self.b_outliers.as_deref(),
            _ => return Err(Error::invalid(format!("unknown data vector '{which}'"))),
        };
        v.ok_or_else(|| Error::invalid(format!("bundle has no b_{which}.txt")))
    }
}

const VECTORS: [&str; 4] = ["b_clean", "b_noisy", "b_outliers", "x_true"];

pub fn write_bundle(dir: &Path, bundle: &Bundle) -> Result<()> {
    fs::create_dir_all(dir)?;
    bundle.a.write(&dir.join("A.mtx"))?;
    let vecs = [&bundle.b_clean, &bundle.b_noisy, &bundle.b_outliers, &bundle.x_true];
    for (name, v) in VECTORS.iter().zip(vecs) {
        if let Some(v) = v {
            write_vector(&dir.join(format!("{name}.txt")), v)?;
        }
    }
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&bundle.meta)? + "\n")?;
    Ok(())
}

pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    let a = read_matrix_market(&dir.join("A.mtx"))?;
    let mut vecs: Vec<Option<Vec<f64>>> = Vec::with_capacity(4);
    for name in VECTORS {
        let path = dir.join(format!("{name}.txt"));
        vecs.push(if path.exists() { Some(read_vector(&path)?) } else { None });
    }
    for (name, v) in VECTORS.iter().zip(&vecs) {
        let expected = if *name == "x_true" { a.cols() } else { a.rows() };
        if let Some(v) = v {
            if v.len() != expected {
                return Err(Error::invalid(format!(
                    "{name}.txt has {} entries, A.mtx needs {expected}",
                    v.len()
                )));
            }
        }
    }
    let meta_path = dir.join("meta.json");
    let meta = if meta_path.exists() {
        serde_json::from_str(&fs::read_to_string(meta_path)?)?
    } else {
        serde_json::Value::Null
    };
    let mut it = vecs.into_iter();
    Ok(Bundle {
        a,
        b_clean: it.next().flatten(),
        b_noisy: it.next().flatten(),
        b_outliers: it.next().flatten(),
        x_true: it.next().flatten(),
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::CsrMatrix;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = CsrMatrix::from_triplets(3, 2, &[(0, 0, 0.1), (2, 1, -1.0 / 3.0)]).unwrap();
        let bundle = Bundle {
            a: MtxMatrix::Sparse(a.clone()),
            b_clean: Some(vec![1.0, 2.0, 3.0]),
            b_noisy: None,
            b_outliers: Some(vec![1.5, 2.0, -3.0]),
            x_true: Some(vec![0.25, 1e-300]),
            meta: serde_json::json!({"seed": 7}),
        };
        write_bundle(dir.path(), &bundle).unwrap();
        let back = read_bundle(dir.path()).unwrap();
        assert_eq!(back.a.to_dense(), a.to_dense());
        assert_eq!(back.b_clean, bundle.b_clean);
        assert_eq!(back.b_noisy, None);
        assert_eq!(back.x_true, bundle.x_true);
        assert_eq!(back.meta["seed"], 7);
        assert_eq!(back.data().unwrap(), &[1.5, 2.0, -3.0]);
        assert!(back.data_named("noisy").is_err());
        assert_eq!(back.a.rows(), 3);
    }

    #[test]
    fn wrong_vector_length_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = Bundle {
            a: MtxMatrix::Sparse(CsrMatrix::from_triplets(3, 2, &[(0, 0, 1.0)]).unwrap()),
            b_clean: None,
            b_noisy: None,
            b_outliers: None,
            x_true: None,
            meta: serde_json::Value::Null,
        };
        write_bundle(dir.path(), &bundle).unwrap();
        write_vector(&dir.path().join("b_clean.txt"), &[1.0, 2.0]).unwrap();
        assert!(read_bundle(dir.path()).is_err());
    }
}
