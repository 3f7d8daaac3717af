//! Persistence: scenario configs, binary data cubes, model files and tidy
//! result tables.

pub mod config;
pub mod cube;
pub mod model;
pub mod results;

pub use config::{load_config, parse_config};
pub use cube::{read_cube, write_cube, DataCube};
pub use model::ModelFile;
pub use results::{emit_results, planned_outputs, RunManifest};

/// Serde adapter storing a complex matrix as `{ rows, cols, data: [[re, im], ...] }`
/// with row-major data.
pub mod serde_matrix {
    use num_complex::Complex64;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::ComplexMatrix;

    #[derive(Serialize, Deserialize)]
    struct Repr {
        rows: usize,
        cols: usize,
        data: Vec<[f64; 2]>,
    }

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, ser: S) -> Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Repr {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<ComplexMatrix, D::Error> {
        let r = Repr::deserialize(de)?;
        if r.data.len() != r.rows * r.cols {
            return Err(D::Error::custom(format!(
                "matrix data has {} entries, expected {}",
                r.data.len(),
                r.rows * r.cols
            )));
        }
        if r.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(D::Error::custom("non-finite matrix entry"));
        }
        let entries: Vec<Complex64> = r.data.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        Ok(ComplexMatrix::from_row_slice(r.rows, r.cols, &entries))
    }
}
