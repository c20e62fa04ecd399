use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SdpInstance;
use crate::error::{Error, Result};
use crate::linalg::SparseHermitian;

/// Upper-triangle `[row, col, re, im]` entries, 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub triplets: Vec<(usize, usize, f64, f64)>,
}

/// On-disk instance layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    #[serde(rename = "R")]
    pub primal_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub b: Vec<f64>,
    #[serde(rename = "C")]
    pub objective: MatrixFile,
    #[serde(rename = "A")]
    pub constraints: Vec<MatrixFile>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub norm_waiver: bool,
}

impl MatrixFile {
    fn from_sparse(a: &SparseHermitian<f64>) -> Self {
        Self {
            triplets: a
                .upper_triplets()
                .into_iter()
                .map(|(r, c, z)| (r, c, z.re, z.im))
                .collect(),
        }
    }

    fn to_sparse(&self, n: usize) -> Result<SparseHermitian<f64>> {
        SparseHermitian::from_upper_triplets(
            n,
            self.triplets
                .iter()
                .map(|&(r, c, re, im)| (r, c, Complex64::new(re, im))),
        )
    }
}

impl InstanceFile {
    pub fn from_instance(inst: &SdpInstance<f64>) -> Self {
        Self {
            n: inst.n(),
            m: inst.m(),
            s: inst.s(),
            primal_bound: inst.primal_bound(),
            r: inst.dual_bound(),
            b: inst.b().to_vec(),
            objective: MatrixFile::from_sparse(inst.objective()),
            constraints: inst
                .constraints()
                .iter()
                .map(MatrixFile::from_sparse)
                .collect(),
            norm_waiver: inst.norm_waiver(),
        }
    }

    /// Builds the instance, checking the declared sizes against the data.
    pub fn into_instance(self) -> Result<SdpInstance<f64>> {
        if self.constraints.len() != self.m || self.b.len() != self.m {
            return Err(Error::InvalidInstance(format!(
                "m = {} but {} matrices and {} bounds given",
                self.m,
                self.constraints.len(),
                self.b.len()
            )));
        }
        let c = self.objective.to_sparse(self.n)?;
        let a = self
            .constraints
            .iter()
            .map(|mf| mf.to_sparse(self.n))
            .collect::<Result<Vec<_>>>()?;
        Ok(SdpInstance::new(c, a, self.b, self.primal_bound)?
            .with_sparsity(self.s)?
            .with_dual_bound(self.r)
            .with_norm_waiver(self.norm_waiver))
    }
}

impl SdpInstance<f64> {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str::<InstanceFile>(text)?.into_instance()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&InstanceFile::from_instance(self)).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{"n":2,"m":2,"s":2,"R":1.0,"b":[1.0,-0.5],
        "C":{"triplets":[[0,1,0.25,-0.5]]},
        "A":[{"triplets":[[0,0,1,0],[1,1,1,0]]},{"triplets":[[1,1,0.5,0]]}]}"#;

    #[test]
    fn parses_and_mirrors_lower_triangle() {
        let inst = SdpInstance::from_json_str(SAMPLE).unwrap();
        assert_eq!(inst.objective().get(1, 0), Complex64::new(0.25, 0.5));
        assert_eq!(inst.s(), 2);
        assert!(inst.validate().is_valid());
    }

    #[test]
    fn round_trip_is_stable() {
        let inst = SdpInstance::from_json_str(SAMPLE).unwrap();
        let text = inst.to_json_string();
        let again = SdpInstance::from_json_str(&text).unwrap();
        assert_eq!(again, inst);
        assert_eq!(again.to_json_string(), text);
        assert!(!text.contains("norm_waiver"));
    }

    #[test]
    fn count_mismatch_rejected() {
        let bad = SAMPLE.replace("\"m\":2", "\"m\":3");
        assert!(SdpInstance::from_json_str(&bad).is_err());
    }

    #[test]
    fn unknown_field_rejected() {
        let bad = SAMPLE.replace("\"n\":2", "\"n\":2,\"extra\":1");
        assert!(SdpInstance::from_json_str(&bad).is_err());
    }
}
