use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use super::space::FockSpace;
use crate::error::{Error, Result};
use crate::word::{Letter, WordExpr};
use crate::C64;

/// Spaces up to this total dimension get dense storage by default.
pub const DENSE_MAX_DIM: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageKind {
    Dense,
    Sparse,
}

impl StorageKind {
    pub fn for_dim(n: usize) -> Self {
        if n <= DENSE_MAX_DIM {
            StorageKind::Dense
        } else {
            StorageKind::Sparse
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(DMatrix<C64>),
    Sparse(CsrMatrix<C64>),
}

/// A linear operator on a truncated Fock space.
///
/// `weight` counts how many tensor levels the operator may move a vector by;
/// creation, annihilation and field operators have weight 1, scalars weight 0.
/// Vacuum moments of words whose total weight is at most the depth are exact.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    space: FockSpace,
    storage: Storage,
    weight: usize,
    label: String,
}

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

impl FockOperator {
    pub fn from_triplets(
        space: &FockSpace,
        entries: impl IntoIterator<Item = (usize, usize, C64)>,
        kind: StorageKind,
        weight: usize,
        label: impl Into<String>,
    ) -> Self {
        let n = space.total_dim();
        let storage = match kind {
            StorageKind::Dense => {
                let mut m = DMatrix::zeros(n, n);
                for (i, j, v) in entries {
                    m[(i, j)] += v;
                }
                Storage::Dense(m)
            }
            StorageKind::Sparse => {
                let mut coo = CooMatrix::new(n, n);
                for (i, j, v) in entries {
                    if v != czero() {
                        coo.push(i, j, v);
                    }
                }
                Storage::Sparse(CsrMatrix::from(&coo))
            }
        };
        FockOperator { space: space.clone(), storage, weight, label: label.into() }
    }

    pub fn from_dense(space: &FockSpace, m: DMatrix<C64>, weight: usize, label: impl Into<String>) -> Result<Self> {
        let n = space.total_dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
        }
        Ok(FockOperator { space: space.clone(), storage: Storage::Dense(m), weight, label: label.into() })
    }

    pub fn identity(space: &FockSpace, kind: StorageKind) -> Self {
        let entries = (0..space.total_dim()).map(|i| (i, i, C64::new(1.0, 0.0)));
        Self::from_triplets(space, entries, kind, 0, "1")
    }

    pub fn zero(space: &FockSpace, kind: StorageKind) -> Self {
        Self::from_triplets(space, std::iter::empty(), kind, 0, "0")
    }

    /// Creation operator `ℓ(ξ)`, or `ℓ(ξ)*` when `adjoint` is set.
    pub fn creation(space: &FockSpace, xi: &[C64], adjoint: bool) -> Result<Self> {
        Self::creation_with(space, xi, adjoint, StorageKind::for_dim(space.total_dim()))
    }

    pub fn creation_with(space: &FockSpace, xi: &[C64], adjoint: bool, kind: StorageKind) -> Result<Self> {
        let d = space.one_particle_dim();
        if xi.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: xi.len() });
        }
        let mut entries = Vec::new();
        for n in 0..space.depth() {
            let (src, len, dst) = (space.offset(n), space.level_dim(n), space.offset(n + 1));
            for (a, &x) in xi.iter().enumerate() {
                if x == czero() {
                    continue;
                }
                for r in 0..len {
                    let (row, col) = (dst + a * len + r, src + r);
                    entries.push(if adjoint { (col, row, x.conj()) } else { (row, col, x) });
                }
            }
        }
        let label = if adjoint { "l(xi)*" } else { "l(xi)" };
        Ok(Self::from_triplets(space, entries, kind, 1, label))
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn kind(&self) -> StorageKind {
        match self.storage {
            Storage::Dense(_) => StorageKind::Dense,
            Storage::Sparse(_) => StorageKind::Sparse,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn with_weight(mut self, weight: usize) -> Self {
        self.weight = weight;
        self
    }

    /// Longest word length in this operator whose vacuum moments are unaffected by truncation.
    pub fn exact_depth(&self) -> usize {
        match self.weight {
            0 => self.space.depth(),
            w => self.space.depth() / w,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => {
                let mut m = DMatrix::zeros(s.nrows(), s.ncols());
                for (i, j, v) in s.triplet_iter() {
                    m[(i, j)] += *v;
                }
                m
            }
        }
    }

    fn to_csr(&self) -> CsrMatrix<C64> {
        match &self.storage {
            Storage::Sparse(s) => s.clone(),
            Storage::Dense(m) => CsrMatrix::from(&CooMatrix::try_from_triplets_iter(
                m.nrows(),
                m.ncols(),
                m.column_iter().enumerate().flat_map(|(j, col)| {
                    col.iter().enumerate().filter(|(_, v)| **v != czero()).map(move |(i, v)| (i, j, *v)).collect::<Vec<_>>()
                }),
            ).expect("indices within bounds")),
        }
    }

    /// Converts to the requested storage, preserving all other fields.
    pub fn into_kind(self, kind: StorageKind) -> Self {
        if self.kind() == kind {
            return self;
        }
        let storage = match kind {
            StorageKind::Dense => Storage::Dense(self.to_dense()),
            StorageKind::Sparse => Storage::Sparse(self.to_csr()),
        };
        FockOperator { storage, ..self }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Sparse(s) => s.get_entry(i, j).map(|e| e.into_value()).unwrap_or_else(czero),
        }
    }

    /// Nonzero entries of every column, as `(row, value)` lists.
    pub fn columns(&self) -> Vec<Vec<(usize, C64)>> {
        let mut cols = vec![Vec::new(); self.dim()];
        match &self.storage {
            Storage::Dense(m) => {
                for (j, col) in m.column_iter().enumerate() {
                    cols[j] = col.iter().enumerate().filter(|(_, v)| **v != czero()).map(|(i, v)| (i, *v)).collect();
                }
            }
            Storage::Sparse(s) => {
                for (i, j, v) in s.triplet_iter() {
                    if *v != czero() {
                        cols[j].push((i, *v));
                    }
                }
            }
        }
        cols
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        match &self.storage {
            Storage::Dense(m) => m * v,
            Storage::Sparse(s) => {
                let mut out = DVector::zeros(s.nrows());
                for (i, row) in s.row_iter().enumerate() {
                    let mut acc = czero();
                    for (&j, &x) in row.col_indices().iter().zip(row.values()) {
                        acc += x * v[j];
                    }
                    out[i] = acc;
                }
                out
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.adjoint()),
            Storage::Sparse(s) => {
                let mut t = s.transpose();
                for v in t.values_mut() {
                    *v = v.conj();
                }
                Storage::Sparse(t)
            }
        };
        FockOperator { space: self.space.clone(), storage, weight: self.weight, label: format!("({})*", self.label) }
    }

    pub fn scale(&self, c: C64) -> Self {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m * c),
            Storage::Sparse(s) => {
                let mut t = s.clone();
                for v in t.values_mut() {
                    *v *= c;
                }
                Storage::Sparse(t)
            }
        };
        let weight = if c == czero() { 0 } else { self.weight };
        FockOperator { space: self.space.clone(), storage, weight, label: format!("{c}*{}", self.label) }
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(a + b),
            (Storage::Sparse(a), Storage::Sparse(b)) => Storage::Sparse(a + b),
            (Storage::Dense(a), Storage::Sparse(_)) => Storage::Dense(a + other.to_dense()),
            (Storage::Sparse(_), Storage::Dense(b)) => Storage::Dense(self.to_dense() + b),
        };
        Ok(FockOperator {
            space: self.space.clone(),
            storage,
            weight: self.weight.max(other.weight),
            label: format!("{} + {}", self.label, other.label),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let storage = match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(a * b),
            (Storage::Sparse(a), Storage::Sparse(b)) => Storage::Sparse(a * b),
            (Storage::Dense(a), Storage::Sparse(_)) => Storage::Dense(a * other.to_dense()),
            (Storage::Sparse(_), Storage::Dense(b)) => Storage::Dense(self.to_dense() * b),
        };
        Ok(FockOperator {
            space: self.space.clone(),
            storage,
            weight: self.weight + other.weight,
            label: format!("({})({})", self.label, other.label),
        })
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max),
            _ => {
                let mut acc: HashMap<(usize, usize), C64> = HashMap::new();
                for (i, j, v) in self.to_csr().triplet_iter() {
                    *acc.entry((i, j)).or_insert_with(czero) += *v;
                }
                for (i, j, v) in other.to_csr().triplet_iter() {
                    *acc.entry((i, j)).or_insert_with(czero) -= *v;
                }
                acc.values().map(|z| z.norm()).fold(0.0, f64::max)
            }
        })
    }

    /// Largest entry modulus of `self - self*`.
    pub fn self_adjoint_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint()).unwrap_or(f64::INFINITY)
    }

    /// Operator norm (largest singular value) computed densely.
    pub fn norm(&self) -> f64 {
        let m = self.to_dense();
        m.singular_values().iter().cloned().fold(0.0, f64::max)
    }

    /// `⟨xΩ, Ω⟩`.
    pub fn vacuum_expectation(&self) -> C64 {
        self.get(0, 0)
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        self.try_add(rhs).expect("operators on different Fock spaces")
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        self.try_sub(rhs).expect("operators on different Fock spaces")
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        self.try_mul(rhs).expect("operators on different Fock spaces")
    }
}

/// Vacuum moment with its truncation flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moment {
    pub value: C64,
    /// True when the truncation cannot have affected `value`.
    pub exact: bool,
}

/// Named operators on one Fock space, against which [`WordExpr`]s are evaluated.
#[derive(Clone, Debug)]
pub struct FockAlgebra {
    space: FockSpace,
    ops: HashMap<String, (FockOperator, FockOperator)>,
    order: Vec<String>,
}

impl FockAlgebra {
    pub fn new(space: &FockSpace) -> Self {
        FockAlgebra { space: space.clone(), ops: HashMap::new(), order: Vec::new() }
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn insert(&mut self, name: impl Into<String>, op: FockOperator) -> Result<()> {
        if op.space() != &self.space {
            return Err(Error::DimensionMismatch { expected: self.space.total_dim(), got: op.dim() });
        }
        let name = name.into();
        let adj = op.adjoint();
        if self.ops.insert(name.clone(), (op, adj)).is_none() {
            self.order.push(name);
        }
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, op: FockOperator) -> Result<Self> {
        self.insert(name, op)?;
        Ok(self)
    }

    pub fn names(&self) -> &[String] {
        &self.order
    }

    pub fn contains(&self, name: &str) -> bool {
        self.ops.contains_key(name)
    }

    pub fn operator(&self, letter: &Letter) -> Result<&FockOperator> {
        let (op, adj) = self.ops.get(&letter.name).ok_or_else(|| Error::UnknownGenerator(letter.name.clone()))?;
        Ok(if letter.adjoint { adj } else { op })
    }

    /// `xΩ` for a polynomial `x`, applying letters right to left.
    pub fn apply_to_vacuum(&self, x: &WordExpr) -> Result<DVector<C64>> {
        self.apply(x, &self.space.vacuum())
    }

    /// `xv` for a polynomial `x`.
    pub fn apply(&self, x: &WordExpr, v0: &DVector<C64>) -> Result<DVector<C64>> {
        let mut out = DVector::zeros(self.space.total_dim());
        for (word, c) in x.terms() {
            let mut v = v0.clone();
            for l in word.iter().rev() {
                v = self.operator(l)?.apply(&v);
            }
            out += v * *c;
        }
        Ok(out)
    }

    /// Total weight of the heaviest word in `x`.
    pub fn weight(&self, x: &WordExpr) -> Result<usize> {
        let mut max = 0;
        for (word, _) in x.terms() {
            let mut w = 0;
            for l in word {
                w += self.operator(l)?.weight();
            }
            max = max.max(w);
        }
        Ok(max)
    }

    pub fn vacuum_expectation(&self, x: &WordExpr) -> Result<Moment> {
        let v = self.apply_to_vacuum(x)?;
        let exact = self.weight(x)? <= self.space.depth();
        Ok(Moment { value: v[0], exact })
    }

    /// Assembles `x` as an operator.
    pub fn operator_of(&self, x: &WordExpr) -> Result<FockOperator> {
        let kind = StorageKind::for_dim(self.space.total_dim());
        let mut acc = FockOperator::zero(&self.space, kind);
        for (word, c) in x.terms() {
            let mut prod = FockOperator::identity(&self.space, kind);
            for l in word {
                prod = prod.try_mul(self.operator(l)?)?;
            }
            acc = acc.try_add(&prod.scale(*c))?;
        }
        Ok(acc.with_label(x.to_string()))
    }
}
