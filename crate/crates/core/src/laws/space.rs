use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{FockAlgebra, FockOperator};
use crate::word::{Letter, Word, WordExpr};
use crate::C64;

/// Realized matrix algebras up to this size use an orthonormal GNS basis;
/// larger ones fall back to word vectors.
pub const GNS_MAX_SIZE: usize = 16;
/// Tolerance for density-matrix validation.
pub const DENSITY_TOL: f64 = 1e-12;

type Columns = Vec<Vec<(usize, C64)>>;

/// A vector of the centered GNS space of one factor.
///
/// `Basis(k)` is the `k`-th vector of an orthonormal basis whose vector 0 is
/// the cyclic vector (never used as a leg). `Word(w)` stands for
/// `(w - φ(w))Ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leg {
    Basis(usize),
    Word(Word),
}

/// Result of acting on a GNS vector: `None` is the cyclic vector.
pub type LegCombination = BTreeMap<Option<Leg>, C64>;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

fn accumulate(map: &mut LegCombination, key: Option<Leg>, c: C64) {
    if c == czero() {
        return;
    }
    *map.entry(key).or_insert_with(czero) += c;
}

/// `M_n` with the state `Tr(ρ ·)` and named elements.
#[derive(Clone, Debug)]
pub struct MatrixSpace {
    rho: DMatrix<C64>,
    rho_eigen: (Vec<f64>, DMatrix<C64>),
    gens: Vec<(String, DMatrix<C64>)>,
    gns: Option<Gns>,
}

#[derive(Clone, Debug)]
struct Gns {
    basis: Vec<DMatrix<C64>>,
    columns: HashMap<Letter, Columns>,
}

impl MatrixSpace {
    /// Validates that `ρ` is a faithful density matrix.
    pub fn new(rho: DMatrix<C64>) -> Result<Self> {
        let n = rho.nrows();
        if n == 0 || rho.ncols() != n {
            return Err(Error::InvalidArgument("density matrix must be square and non-empty".into()));
        }
        let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > DENSITY_TOL {
            return Err(Error::NotSelfAdjoint(herm));
        }
        let tr = rho.trace();
        if (tr - 1.0).norm() > DENSITY_TOL {
            return Err(Error::InvalidArgument(format!("density matrix has trace {tr}")));
        }
        let eig = SymmetricEigen::new(rho.clone());
        let values: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        let top = values.iter().cloned().fold(0.0, f64::max);
        if values.iter().any(|&v| v <= f64::EPSILON * n as f64 * top) {
            return Err(Error::SingularDensity);
        }
        let gns = (n <= GNS_MAX_SIZE).then(|| Gns::new(&rho));
        Ok(MatrixSpace { rho, rho_eigen: (values, eig.eigenvectors), gens: Vec::new(), gns })
    }

    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| C64::new(if i == j { weights[i] } else { 0.0 }, 0.0)))
    }

    pub fn tracial(n: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0 / n as f64; n])
    }

    /// `M₂` with `ρ = diag(1, λ)/(1+λ)`.
    pub fn d_lambda(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidArgument(format!("lambda must lie in (0,1], got {lambda}")));
        }
        Self::diagonal(&[1.0 / (1.0 + lambda), lambda / (1.0 + lambda)])
    }

    /// `B(ℓ²)` cut to `(K+1)×(K+1)` with weights `λ^j(1-λ)/Z_K`, `K` the least
    /// size dropping mass below `tail`.
    pub fn omega_lambda(lambda: f64, tail: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidArgument(format!("lambda must lie in (0,1), got {lambda}")));
        }
        let mut k = 0usize;
        while lambda.powi(k as i32 + 1) >= tail {
            k += 1;
        }
        let z = 1.0 - lambda.powi(k as i32 + 1);
        let weights: Vec<f64> = (0..=k).map(|j| lambda.powi(j as i32) * (1.0 - lambda) / z).collect();
        Self::diagonal(&weights)
    }

    pub fn size(&self) -> usize {
        self.rho.nrows()
    }

    pub fn rho(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn with_generator(mut self, name: impl Into<String>, m: DMatrix<C64>) -> Result<Self> {
        self.insert(name, m)?;
        Ok(self)
    }

    pub fn insert(&mut self, name: impl Into<String>, m: DMatrix<C64>) -> Result<()> {
        let n = self.size();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
        }
        let name = name.into();
        if let Some(gns) = &mut self.gns {
            let adj = m.adjoint();
            gns.columns.insert(Letter::new(name.clone()), gns.action(&self.rho, &m));
            gns.columns.insert(Letter::star(name.clone()), gns.action(&self.rho, &adj));
        }
        self.gens.retain(|(g, _)| *g != name);
        self.gens.push((name, m));
        Ok(())
    }

    pub fn generator_names(&self) -> Vec<String> {
        self.gens.iter().map(|(g, _)| g.clone()).collect()
    }

    pub fn matrix(&self, name: &str) -> Option<&DMatrix<C64>> {
        self.gens.iter().find(|(g, _)| g == name).map(|(_, m)| m)
    }

    fn letter_matrix(&self, l: &Letter) -> Result<DMatrix<C64>> {
        let m = self.matrix(&l.name).ok_or_else(|| Error::UnknownGenerator(l.name.clone()))?;
        Ok(if l.adjoint { m.adjoint() } else { m.clone() })
    }

    pub fn word_matrix(&self, w: &[Letter]) -> Result<DMatrix<C64>> {
        let n = self.size();
        let mut m = DMatrix::identity(n, n);
        for l in w {
            m *= self.letter_matrix(l)?;
        }
        Ok(m)
    }

    pub fn expr_matrix(&self, x: &WordExpr) -> Result<DMatrix<C64>> {
        let n = self.size();
        let mut acc = DMatrix::zeros(n, n);
        for (w, c) in x.terms() {
            acc += self.word_matrix(w)? * *c;
        }
        Ok(acc)
    }

    /// `Tr(ρ m)`.
    pub fn state_of(&self, m: &DMatrix<C64>) -> C64 {
        (&self.rho * m).trace()
    }

    /// `ρ^{iz} m ρ^{-iz}`; `z = i/2` gives `ρ^{-1/2} m ρ^{1/2}`.
    pub fn sigma(&self, m: &DMatrix<C64>, z: C64) -> DMatrix<C64> {
        let (vals, vecs) = &self.rho_eigen;
        let pow = |s: C64| {
            let d = DMatrix::from_fn(vals.len(), vals.len(), |i, j| {
                if i == j { (s * vals[i].ln()).exp() } else { czero() }
            });
            vecs * d * vecs.adjoint()
        };
        pow(C64::i() * z) * m * pow(-C64::i() * z)
    }

    pub fn modular_halfstep(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        self.sigma(m, C64::new(0.0, 0.5))
    }

    fn moment(&self, w: &[Letter]) -> Result<C64> {
        Ok(self.state_of(&self.word_matrix(w)?))
    }
}

impl Gns {
    /// Orthonormal basis of `M_n` for `⟨X, Y⟩ = Tr(ρ Y* X)`, starting at the identity.
    fn new(rho: &DMatrix<C64>) -> Self {
        let n = rho.nrows();
        let inner = |x: &DMatrix<C64>, y: &DMatrix<C64>| (rho * y.adjoint() * x).trace();
        let mut basis: Vec<DMatrix<C64>> = Vec::with_capacity(n * n);
        let candidates = std::iter::once(DMatrix::identity(n, n)).chain((0..n * n).map(|k| {
            let mut e = DMatrix::zeros(n, n);
            e[(k / n, k % n)] = C64::new(1.0, 0.0);
            e
        }));
        for mut x in candidates {
            // Two passes of modified Gram-Schmidt.
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(&x, b);
                    x -= b * c;
                }
            }
            let norm = inner(&x, &x).re.sqrt();
            if norm > 1e-8 {
                basis.push(x / C64::new(norm, 0.0));
            }
            if basis.len() == n * n {
                break;
            }
        }
        Gns { basis, columns: HashMap::new() }
    }

    /// Columns of left multiplication by `a`: entry `(k, j)` is `⟨a B_j, B_k⟩`.
    fn action(&self, rho: &DMatrix<C64>, a: &DMatrix<C64>) -> Columns {
        let duals: Vec<DMatrix<C64>> = self.basis.iter().map(|b| rho * b.adjoint()).collect();
        self.basis
            .iter()
            .map(|bj| {
                let abj = a * bj;
                duals
                    .iter()
                    .enumerate()
                    .map(|(k, d)| (k, (d * &abj).trace()))
                    .filter(|(_, v)| v.norm() > 1e-15)
                    .collect()
            })
            .collect()
    }
}

/// A Fock-space realization with its vacuum state.
#[derive(Clone, Debug)]
pub struct FockFactor {
    algebra: FockAlgebra,
    columns: HashMap<Letter, Columns>,
}

impl FockFactor {
    pub fn new(algebra: FockAlgebra) -> Result<Self> {
        let mut columns = HashMap::new();
        for name in algebra.names() {
            for l in [Letter::new(name.clone()), Letter::star(name.clone())] {
                columns.insert(l.clone(), algebra.operator(&l)?.columns());
            }
        }
        Ok(FockFactor { algebra, columns })
    }

    pub fn algebra(&self) -> &FockAlgebra {
        &self.algebra
    }

    pub fn depth(&self) -> usize {
        self.algebra.space().depth()
    }
}

/// Distributions given by closed-form moment formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    /// Semicircle on `[-r, r]`.
    Semicircle { radius: f64 },
    /// Density `(4/π)√(1-x²)` on `[0, 1]`.
    QuarterCircle,
    /// Unitary with `φ(uⁿ) = δ_{n0}`.
    HaarUnitary,
    /// Unilateral shift on `ℓ²` under `ω_λ(e_jj) = λ^j(1-λ)`.
    ShiftIsometry { lambda: f64 },
}


impl Law {
    pub fn is_self_adjoint(&self) -> bool {
        matches!(self, Law::Semicircle { .. } | Law::QuarterCircle)
    }

    /// `φ(w)` for a word in the single generator of the law.
    pub fn word_moment(&self, w: &[Letter]) -> C64 {
        let value = match *self {
            Law::Semicircle { radius } => semicircle_moment(radius, w.len()),
            Law::QuarterCircle => quarter_circle_moment(w.len()),
            Law::HaarUnitary => {
                let up = w.iter().filter(|l| !l.adjoint).count();
                if 2 * up == w.len() { 1.0 } else { 0.0 }
            }
            Law::ShiftIsometry { lambda } => {
                let (mut pos, mut low) = (0i64, 0i64);
                for l in w.iter().rev() {
                    pos += if l.adjoint { -1 } else { 1 };
                    low = low.min(pos);
                }
                if pos == 0 { lambda.powi((-low) as i32) } else { 0.0 }
            }
        };
        C64::new(value, 0.0)
    }
}

pub(crate) fn catalan(k: usize) -> f64 {
    (0..k).fold(1.0, |c, j| c * 2.0 * (2 * j + 1) as f64 / (j + 2) as f64)
}

pub(crate) fn semicircle_moment(radius: f64, n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    catalan(n / 2) * (radius / 2.0).powi(n as i32)
}

pub(crate) fn quarter_circle_moment(n: usize) -> f64 {
    let mut m = if n % 2 == 0 { 1.0 } else { 4.0 / (3.0 * std::f64::consts::PI) };
    let mut k = n % 2;
    while k < n {
        k += 2;
        m *= (k - 1) as f64 / (k + 2) as f64;
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct LawSpace {
    law: Law,
    generator: String,
}

impl LawSpace {
    pub fn new(law: Law, generator: impl Into<String>) -> Result<Self> {
        match law {
            Law::Semicircle { radius } if !(radius > 0.0) => {
                return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")))
            }
            Law::ShiftIsometry { lambda } if !(lambda > 0.0 && lambda < 1.0) => {
                return Err(Error::InvalidArgument(format!("lambda must lie in (0,1), got {lambda}")))
            }
            _ => {}
        }
        Ok(LawSpace { law, generator: generator.into() })
    }

    pub fn law(&self) -> Law {
        self.law
    }
}

/// A non-commutative probability space: named generators and a state.
#[derive(Clone, Debug)]
pub enum NCSpace {
    Matrix(MatrixSpace),
    Fock(FockFactor),
    Law(LawSpace),
}

impl From<MatrixSpace> for NCSpace {
    fn from(m: MatrixSpace) -> Self {
        NCSpace::Matrix(m)
    }
}

impl From<LawSpace> for NCSpace {
    fn from(l: LawSpace) -> Self {
        NCSpace::Law(l)
    }
}

impl NCSpace {
    pub fn fock(algebra: FockAlgebra) -> Result<Self> {
        Ok(NCSpace::Fock(FockFactor::new(algebra)?))
    }

    pub fn generators(&self) -> Vec<String> {
        match self {
            NCSpace::Matrix(m) => m.gens.iter().map(|(g, _)| g.clone()).collect(),
            NCSpace::Fock(f) => f.algebra.names().to_vec(),
            NCSpace::Law(l) => vec![l.generator.clone()],
        }
    }

    pub fn has_generator(&self, name: &str) -> bool {
        match self {
            NCSpace::Matrix(m) => m.matrix(name).is_some(),
            NCSpace::Fock(f) => f.algebra.contains(name),
            NCSpace::Law(l) => l.generator == name,
        }
    }

    pub fn is_self_adjoint(&self, name: &str) -> bool {
        match self {
            NCSpace::Matrix(m) => m
                .matrix(name)
                .is_some_and(|a| (a - a.adjoint()).iter().all(|z| z.norm() <= DENSITY_TOL)),
            NCSpace::Fock(f) => f
                .algebra
                .operator(&Letter::new(name))
                .is_ok_and(|op: &FockOperator| op.self_adjoint_defect() <= DENSITY_TOL),
            NCSpace::Law(l) => l.generator == name && l.law.is_self_adjoint(),
        }
    }

    /// Longest word whose moments are unaffected by truncation, if any.
    pub fn exact_length(&self) -> Option<usize> {
        match self {
            NCSpace::Fock(f) => Some(f.depth()),
            _ => None,
        }
    }

    fn check_letter(&self, l: &Letter) -> Result<()> {
        if self.has_generator(&l.name) {
            Ok(())
        } else {
            Err(Error::UnknownGenerator(l.name.clone()))
        }
    }

    /// Closed-form or matrix-trace moment (not available for Fock spaces).
    fn oracle_moment(&self, w: &[Letter]) -> Result<C64> {
        match self {
            NCSpace::Matrix(m) => m.moment(w),
            NCSpace::Law(l) => {
                for x in w {
                    self.check_letter(x)?;
                }
                Ok(l.law.word_moment(w))
            }
            NCSpace::Fock(_) => unreachable!("Fock factors act on basis legs"),
        }
    }

    fn uses_word_legs(&self) -> bool {
        match self {
            NCSpace::Matrix(m) => m.gns.is_none(),
            NCSpace::Fock(_) => false,
            NCSpace::Law(_) => true,
        }
    }

    fn basis_columns(&self, l: &Letter) -> Result<&Columns> {
        let cols = match self {
            NCSpace::Matrix(m) => m.gns.as_ref().and_then(|g| g.columns.get(l)),
            NCSpace::Fock(f) => f.columns.get(l),
            NCSpace::Law(_) => None,
        };
        cols.ok_or_else(|| Error::UnknownGenerator(l.name.clone()))
    }

    /// Action of one letter on a GNS vector (`None` is the cyclic vector).
    pub fn act(&self, l: &Letter, leg: Option<&Leg>) -> Result<LegCombination> {
        let mut out = LegCombination::new();
        if self.uses_word_legs() {
            self.check_letter(l)?;
            let a = vec![l.clone()];
            let phi_a = self.oracle_moment(&a)?;
            match leg {
                None => {
                    accumulate(&mut out, None, phi_a);
                    out.insert(Some(Leg::Word(a)), C64::new(1.0, 0.0));
                }
                Some(Leg::Word(w)) => {
                    // a·(w - φ(w))Ω = [aw] + φ(aw) - φ(w)([a] + φ(a))
                    let mut aw = a.clone();
                    aw.extend_from_slice(w);
                    let phi_w = self.oracle_moment(w)?;
                    let phi_aw = self.oracle_moment(&aw)?;
                    accumulate(&mut out, None, phi_aw - phi_w * phi_a);
                    accumulate(&mut out, Some(Leg::Word(aw)), C64::new(1.0, 0.0));
                    accumulate(&mut out, Some(Leg::Word(a)), -phi_w);
                }
                Some(Leg::Basis(_)) => return Err(Error::InvalidArgument("basis leg on a word-leg factor".into())),
            }
            return Ok(out);
        }
        let j = match leg {
            None => 0,
            Some(Leg::Basis(j)) => *j,
            Some(Leg::Word(_)) => return Err(Error::InvalidArgument("word leg on a basis-leg factor".into())),
        };
        for &(i, v) in &self.basis_columns(l)?[j] {
            accumulate(&mut out, if i == 0 { None } else { Some(Leg::Basis(i)) }, v);
        }
        Ok(out)
    }

    /// Applies a word (right to left) to a GNS vector.
    pub fn apply_word(&self, w: &[Letter], leg: Option<&Leg>) -> Result<LegCombination> {
        let mut state = LegCombination::new();
        state.insert(leg.cloned(), C64::new(1.0, 0.0));
        for l in w.iter().rev() {
            let mut next = LegCombination::new();
            for (g, c) in &state {
                for (h, v) in self.act(l, g.as_ref())? {
                    accumulate(&mut next, h, c * v);
                }
            }
            state = next;
        }
        Ok(state)
    }

    /// `⟨a, b⟩` for two centered GNS vectors.
    pub fn leg_inner(&self, a: &Leg, b: &Leg) -> Result<C64> {
        match (a, b) {
            (Leg::Basis(i), Leg::Basis(j)) => Ok(if i == j { C64::new(1.0, 0.0) } else { czero() }),
            (Leg::Word(u), Leg::Word(v)) => {
                // ⟨(u-φ(u))Ω, (v-φ(v))Ω⟩ = φ(v* u) - φ(u) conj(φ(v))
                let mut vu = crate::word::word_adjoint(v);
                vu.extend_from_slice(u);
                Ok(self.oracle_moment(&vu)? - self.oracle_moment(u)? * self.oracle_moment(v)?.conj())
            }
            _ => Err(Error::InvalidArgument("mixed leg kinds".into())),
        }
    }
}

/// Anything that assigns moments to words in named generators.
pub trait StateSpace {
    fn generator_names(&self) -> Vec<String>;
    fn generator_is_self_adjoint(&self, name: &str) -> bool;
    fn moment(&self, w: &[Letter]) -> Result<C64>;

    fn state(&self, x: &WordExpr) -> Result<C64> {
        let mut acc = czero();
        for (w, c) in x.terms() {
            acc += c * self.moment(w)?;
        }
        Ok(acc)
    }

    /// `φ((m₁ - c₁)(m₂ - c₂)⋯(m_k - c_k))`.
    fn centered_product(&self, slots: &[(Word, C64)]) -> Result<C64> {
        let mut x = WordExpr::one();
        for (m, c) in slots {
            let centered = &WordExpr::word(m.clone()) - &WordExpr::scalar(*c);
            x = &x * &centered;
        }
        self.state(&x)
    }
}

impl StateSpace for NCSpace {
    fn generator_names(&self) -> Vec<String> {
        self.generators()
    }

    fn generator_is_self_adjoint(&self, name: &str) -> bool {
        self.is_self_adjoint(name)
    }

    fn moment(&self, w: &[Letter]) -> Result<C64> {
        if let Some(limit) = self.exact_length() {
            if w.len() > limit {
                return Err(Error::DegreeTooHigh { degree: w.len(), limit });
            }
        }
        Ok(self.apply_word(w, None)?.get(&None).copied().unwrap_or_else(czero))
    }

    fn centered_product(&self, slots: &[(Word, C64)]) -> Result<C64> {
        let NCSpace::Fock(f) = self else {
            let mut x = WordExpr::one();
            for (m, c) in slots {
                x = &x * &(&WordExpr::word(m.clone()) - &WordExpr::scalar(*c));
            }
            return self.state(&x);
        };
        let mut v = f.algebra.space().vacuum();
        for (m, c) in slots.iter().rev() {
            let mv = f.algebra.apply(&WordExpr::word(m.clone()), &v)?;
            v = mv - v * *c;
        }
        Ok(v[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]).map(|x| C64::new(x, 0.0))
    }

    fn pauli_z() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]).map(|x| C64::new(x, 0.0))
    }

    #[test]
    fn gns_moments_agree_with_traces() {
        let m = MatrixSpace::d_lambda(0.3)
            .unwrap()
            .with_generator("x", pauli_x())
            .unwrap()
            .with_generator("z", pauli_z() * C64::new(0.5, 0.2))
            .unwrap();
        let space = NCSpace::Matrix(m.clone());
        for s in ["x", "z", "x z", "z* x z", "x x z z*", "z x z* x z"] {
            let w: Word = WordExpr::parse(s).unwrap().terms().next().unwrap().0.clone();
            let a = space.moment(&w).unwrap();
            let b = m.moment(&w).unwrap();
            assert!((a - b).norm() < 1e-14, "{s}: {a} vs {b}");
        }
    }

    #[test]
    fn omega_lambda_truncation() {
        let m = MatrixSpace::omega_lambda(0.5, 1e-12).unwrap();
        let e00 = DMatrix::from_fn(m.size(), m.size(), |i, j| C64::new(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0));
        let m = m.with_generator("e(0,0)", e00).unwrap();
        let space = NCSpace::Matrix(m);
        let v = space.moment(&[Letter::new("e(0,0)")]).unwrap();
        assert!((v.re - 0.5).abs() < 1e-12);
        assert!(space.uses_word_legs());
    }

    #[test]
    fn singular_density_is_rejected() {
        assert!(matches!(MatrixSpace::diagonal(&[1.0, 0.0]), Err(Error::SingularDensity)));
        assert!(MatrixSpace::diagonal(&[0.6, 0.6]).is_err());
    }

    #[test]
    fn law_word_moments() {
        let s = Law::Semicircle { radius: 2.0 };
        assert_eq!(s.word_moment(&vec![Letter::new("s"); 4]).re, 2.0);
        let u = Law::HaarUnitary;
        assert_eq!(u.word_moment(&[Letter::new("u"), Letter::star("u")]).re, 1.0);
        assert_eq!(u.word_moment(&vec![Letter::new("u"); 3]).re, 0.0);
        let v = Law::ShiftIsometry { lambda: 0.5 };
        assert_eq!(v.word_moment(&[Letter::new("v"), Letter::star("v")]).re, 0.5);
        assert_eq!(v.word_moment(&[Letter::star("v"), Letter::new("v")]).re, 1.0);
        let vvss = [Letter::new("v"), Letter::new("v"), Letter::star("v"), Letter::star("v")];
        assert_eq!(v.word_moment(&vvss).re, 0.25);
    }

    #[test]
    fn word_legs_reproduce_oracle() {
        let space = NCSpace::Law(LawSpace::new(Law::ShiftIsometry { lambda: 0.3 }, "v").unwrap());
        let w = WordExpr::parse("v* v v* v* v v").unwrap();
        let word = w.terms().next().unwrap().0.clone();
        let direct = Law::ShiftIsometry { lambda: 0.3 }.word_moment(&word);
        assert!((space.moment(&word).unwrap() - direct).norm() < 1e-15);
    }

    #[test]
    fn halfstep_of_sigma_x() {
        let lambda: f64 = 0.5;
        let m = MatrixSpace::d_lambda(lambda).unwrap();
        let h = m.modular_halfstep(&pauli_x());
        assert!((h[(0, 1)].re - lambda.sqrt()).abs() < 1e-14);
        assert!((h[(1, 0)].re - 1.0 / lambda.sqrt()).abs() < 1e-14);
    }
}
