use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::operator::{FockOperator, StorageKind};
use super::space::{Budget, FockSpace};
use crate::error::{Error, Result};
use crate::C64;

/// Tolerance for the self-adjointness precondition of [`empirical_spectrum`].
pub const SELF_ADJOINT_TOL: f64 = 1e-10;

const ENCODING: &str = "base64:f64le:re,im:column-major";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDocument {
    pub d: usize,
    #[serde(rename = "D")]
    pub depth: usize,
    pub label: String,
    pub exact_depth: usize,
    pub weight: usize,
    pub encoding: String,
    pub data: String,
}

pub fn serialize_operator(op: &FockOperator) -> OperatorDocument {
    let m = op.to_dense();
    let mut bytes = Vec::with_capacity(16 * m.len());
    for z in m.iter() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    OperatorDocument {
        d: op.space().one_particle_dim(),
        depth: op.space().depth(),
        label: op.label().to_string(),
        exact_depth: op.exact_depth(),
        weight: op.weight(),
        encoding: ENCODING.to_string(),
        data: STANDARD.encode(bytes),
    }
}

pub fn deserialize_operator(doc: &OperatorDocument, budget: &Budget) -> Result<FockOperator> {
    if doc.encoding != ENCODING {
        return Err(Error::InvalidArgument(format!("unsupported encoding `{}`", doc.encoding)));
    }
    let space = FockSpace::new(doc.d, doc.depth, budget)?;
    let n = space.total_dim();
    let bytes = STANDARD.decode(&doc.data).map_err(|e| Error::InvalidArgument(format!("bad base64: {e}")))?;
    if bytes.len() != 16 * n * n {
        return Err(Error::DimensionMismatch { expected: 16 * n * n, got: bytes.len() });
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let values = bytes.chunks_exact(16).map(|c| C64::new(f(&c[..8]), f(&c[8..])));
    let m = DMatrix::from_iterator(n, n, values);
    let op = FockOperator::from_dense(&space, m, doc.weight, doc.label.clone())?;
    Ok(op.into_kind(StorageKind::for_dim(n)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<f64>,
}

impl Histogram {
    /// Histogram of weighted samples; a degenerate range gives one unit-width bin.
    pub fn from_weighted(samples: &[(f64, f64)], bins: usize) -> Self {
        let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
        if samples.is_empty() || bins == 0 {
            return Histogram { edges: vec![0.0], counts: vec![] };
        }
        if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
            let total = samples.iter().map(|s| s.1).sum();
            return Histogram { edges: vec![lo - 0.5, lo + 0.5], counts: vec![total] };
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|k| if k == bins { hi } else { lo + k as f64 * width }).collect();
        let mut counts = vec![0.0; bins];
        for &(x, w) in samples {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += w;
        }
        Histogram { edges, counts }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[k], self.edges[k + 1], c));
        }
        out
    }

    pub fn support(&self) -> (f64, f64) {
        (self.edges[0], *self.edges.last().unwrap_or(&self.edges[0]))
    }
}

/// Sorted eigenvalues of a self-adjoint operator.
pub fn eigenvalues(x: &FockOperator) -> Result<Vec<f64>> {
    let defect = x.self_adjoint_defect();
    if defect > SELF_ADJOINT_TOL {
        return Err(Error::NotSelfAdjoint(defect));
    }
    let eig = SymmetricEigen::new(x.to_dense());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Eigenvalue histogram of the truncated operator (each eigenvalue counts once).
pub fn empirical_spectrum(x: &FockOperator, bins: usize) -> Result<Histogram> {
    let ev = eigenvalues(x)?;
    let samples: Vec<(f64, f64)> = ev.iter().map(|&e| (e, 1.0)).collect();
    Ok(Histogram::from_weighted(&samples, bins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::fields::semicircular_field;
    use crate::rep::RepSpec;

    #[test]
    fn serialization_round_trips_bitwise() {
        let f = FockSpace::new(2, 3, &Budget::default()).unwrap();
        let xi = [C64::new(0.3, -0.1), C64::new(1.0 / 3.0, 0.0)];
        let op = FockOperator::creation(&f, &xi, false).unwrap();
        let doc = serialize_operator(&op);
        assert_eq!(doc.exact_depth, 3);
        let json = serde_json::to_string(&doc).unwrap();
        let back = deserialize_operator(&serde_json::from_str(&json).unwrap(), &Budget::default()).unwrap();
        assert_eq!(back.to_dense(), op.to_dense());
        assert_eq!(serialize_operator(&back), doc);
    }

    #[test]
    fn semicircle_spectrum_support() {
        let f = FockSpace::new(1, 8, &Budget::default()).unwrap();
        let s = semicircular_field(&f, &RepSpec::trivial(1).unwrap(), &[1.0]).unwrap();
        let h = empirical_spectrum(&s, 10).unwrap();
        let (lo, hi) = h.support();
        assert!(lo >= -1.1 && hi <= 1.1);
        assert_eq!(h.counts.iter().sum::<f64>(), 9.0);
    }

    #[test]
    fn point_masses() {
        let f = FockSpace::new(1, 3, &Budget::default()).unwrap();
        let zero = FockOperator::zero(&f, StorageKind::Dense);
        let h = empirical_spectrum(&zero, 5).unwrap();
        assert_eq!(h.counts, vec![4.0]);
        assert!(h.edges[0] < 0.0 && h.edges[1] > 0.0);
        let one = FockOperator::identity(&f, StorageKind::Sparse);
        let h = empirical_spectrum(&one, 5).unwrap();
        assert!(h.edges[0] < 1.0 && h.edges[1] > 1.0);
        assert!(h.to_csv().starts_with("bin_left,bin_right,count\n"));
    }

    #[test]
    fn non_self_adjoint_is_rejected() {
        let f = FockSpace::new(1, 3, &Budget::default()).unwrap();
        let l = FockOperator::creation(&f, &[C64::new(1.0, 0.0)], false).unwrap();
        assert!(matches!(empirical_spectrum(&l, 4), Err(Error::NotSelfAdjoint(_))));
    }
}
