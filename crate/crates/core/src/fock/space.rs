use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::C64;

/// Environment variable overriding the default allocation budget, in bytes.
pub const BUDGET_ENV: &str = "AWLAB_BUDGET_BYTES";
const DEFAULT_BUDGET_BYTES: u64 = 2 << 30;

/// Limits on the size of a truncated Fock space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_dim: Option<usize>,
    pub max_bytes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_dim: None, max_bytes: DEFAULT_BUDGET_BYTES }
    }
}

impl Budget {
    /// Default budget, with `AWLAB_BUDGET_BYTES` taking precedence when set.
    pub fn from_env() -> Result<Self> {
        let mut b = Budget::default();
        if let Ok(v) = std::env::var(BUDGET_ENV) {
            b.max_bytes = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{BUDGET_ENV} must be a byte count, got `{v}`")))?;
        }
        Ok(b)
    }

    pub fn with_max_dim(mut self, max_dim: Option<usize>) -> Self {
        self.max_dim = max_dim;
        self
    }

    /// Bytes charged for a space: one sparse creation operator plus a few state vectors.
    fn cost(d: usize, total_dim: usize) -> Option<u64> {
        let per_row = 24u64.checked_mul(d as u64)?.checked_add(64)?;
        per_row.checked_mul(total_dim as u64)
    }
}

/// Full Fock space over `ℂ^d` truncated at tensor rank `depth`.
///
/// Basis words are ordered by length, then lexicographically with the first
/// letter most significant. Word `(i_1, …, i_n)` (letters `0..d`) sits at
/// `offset(n) + Σ_k i_k d^{n-k}`; the vacuum `Ω` has index 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockSpace {
    d: usize,
    depth: usize,
    offsets: Vec<usize>,
}

pub fn build_fock(d: usize, depth: usize) -> Result<FockSpace> {
    FockSpace::new(d, depth, &Budget::from_env()?)
}

impl FockSpace {
    pub fn new(d: usize, depth: usize, budget: &Budget) -> Result<Self> {
        if d == 0 || depth == 0 {
            return Err(Error::InvalidArgument(format!("need d >= 1 and depth >= 1, got d={d}, depth={depth}")));
        }
        let mut offsets = Vec::with_capacity(depth + 2);
        let mut total: Option<usize> = Some(0);
        let mut level: Option<usize> = Some(1);
        for _ in 0..=depth {
            offsets.push(total.unwrap_or(usize::MAX));
            total = total.zip(level).and_then(|(t, l)| t.checked_add(l));
            level = level.and_then(|l| l.checked_mul(d));
        }
        let over = |required: String| Error::BudgetExceeded {
            required,
            budget: match budget.max_dim {
                Some(m) => format!("{m} basis vectors, {} bytes", budget.max_bytes),
                None => format!("{} bytes", budget.max_bytes),
            },
        };
        let Some(total) = total else {
            return Err(over(format!("> {} (overflow)", usize::MAX)));
        };
        offsets.push(total);
        let within = budget.max_dim.is_none_or(|m| total <= m)
            && Budget::cost(d, total).is_some_and(|c| c <= budget.max_bytes);
        if !within {
            return Err(over(total.to_string()));
        }
        Ok(FockSpace { d, depth, offsets })
    }

    pub fn one_particle_dim(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn total_dim(&self) -> usize {
        self.offsets[self.depth + 1]
    }

    /// First index of the words of length `n`.
    pub fn offset(&self, n: usize) -> usize {
        self.offsets[n]
    }

    pub fn level_dim(&self, n: usize) -> usize {
        self.offsets[n + 1] - self.offsets[n]
    }

    pub fn index(&self, word: &[usize]) -> Result<usize> {
        if word.len() > self.depth {
            return Err(Error::InvalidArgument(format!("word length {} exceeds depth {}", word.len(), self.depth)));
        }
        let mut rank = 0usize;
        for &i in word {
            if i >= self.d {
                return Err(Error::InvalidArgument(format!("letter {i} out of range 0..{}", self.d)));
            }
            rank = rank * self.d + i;
        }
        Ok(self.offsets[word.len()] + rank)
    }

    pub fn word(&self, index: usize) -> Vec<usize> {
        let n = (0..=self.depth).rfind(|&n| self.offsets[n] <= index).unwrap_or(0);
        let mut rank = index - self.offsets[n];
        let mut w = vec![0; n];
        for slot in w.iter_mut().rev() {
            *slot = rank % self.d;
            rank /= self.d;
        }
        w
    }

    pub fn level_of(&self, index: usize) -> usize {
        (0..=self.depth).rfind(|&n| self.offsets[n] <= index).unwrap_or(0)
    }

    pub fn vacuum(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.total_dim());
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// `ℓ(ξ)v`: prepends `ξ` to every tensor of length `< depth`; the top level is annihilated.
    pub fn apply_creation(&self, xi: &[C64], v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.total_dim());
        for n in 0..self.depth {
            let (src, len) = (self.offsets[n], self.level_dim(n));
            let dst = self.offsets[n + 1];
            for (a, &x) in xi.iter().enumerate() {
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                let base = dst + a * len;
                for r in 0..len {
                    out[base + r] += x * v[src + r];
                }
            }
        }
        out
    }

    /// `ℓ(ξ)*v`: contracts the first tensor slot against `ξ`; kills the vacuum.
    pub fn apply_annihilation(&self, xi: &[C64], v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.total_dim());
        for n in 0..self.depth {
            let (dst, len) = (self.offsets[n], self.level_dim(n));
            let src = self.offsets[n + 1];
            for (a, x) in xi.iter().enumerate() {
                let c = x.conj();
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let base = src + a * len;
                for r in 0..len {
                    out[dst + r] += c * v[base + r];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_dimensions() {
        let b = Budget::default();
        assert_eq!(FockSpace::new(1, 3, &b).unwrap().total_dim(), 4);
        assert_eq!(FockSpace::new(2, 3, &b).unwrap().total_dim(), 15);
        assert_eq!(FockSpace::new(3, 2, &b).unwrap().total_dim(), 13);
    }

    #[test]
    fn budget_refusal_reports_dimension() {
        match FockSpace::new(2, 30, &Budget::default()) {
            Err(Error::BudgetExceeded { required, .. }) => assert_eq!(required, ((1u64 << 31) - 1).to_string()),
            other => panic!("unexpected {other:?}"),
        }
        assert!(FockSpace::new(7, 200, &Budget::default()).is_err());
        let tight = Budget::default().with_max_dim(Some(10));
        assert!(FockSpace::new(2, 3, &tight).is_err());
    }

    #[test]
    fn index_and_word_are_inverse() {
        let f = FockSpace::new(3, 4, &Budget::default()).unwrap();
        for i in 0..f.total_dim() {
            assert_eq!(f.index(&f.word(i)).unwrap(), i);
        }
        assert_eq!(f.index(&[]).unwrap(), 0);
        assert_eq!(f.index(&[0]).unwrap(), 1);
        assert_eq!(f.index(&[2, 0]).unwrap(), 4 + 6);
    }

    #[test]
    fn graded_order_is_lexicographic_within_levels() {
        let f = FockSpace::new(2, 3, &Budget::default()).unwrap();
        let words: Vec<_> = (f.offset(2)..f.offset(3)).map(|i| f.word(i)).collect();
        assert_eq!(words, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn creation_prepends() {
        let f = FockSpace::new(2, 3, &Budget::default()).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let v = f.apply_creation(&[zero, one], &f.vacuum());
        let v = f.apply_creation(&[one, zero], &v);
        assert_eq!(v[f.index(&[0, 1]).unwrap()], one);
        assert_eq!(v.iter().filter(|z| z.norm() > 0.0).count(), 1);
        let back = f.apply_annihilation(&[one, zero], &v);
        assert_eq!(back[f.index(&[1]).unwrap()], one);
    }
}
