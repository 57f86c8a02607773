//! Constants and numerical verification of the commutator inequality
//!
//! `‖x − ω(x)1‖₂ ≤ E·max{‖xa − α(a)x‖₂, ‖xb − α(b)x‖₂, ‖xc − α(c)x‖₂} + F‖x‖₂`
//!
//! for `a ∈ N₁`, `b, c ∈ N₂` in a free product of finite-dimensional factors.
//! All norms on the right-hand constants are taken in the factors' own
//! realizations; the 2-norms are exact free-product moments.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::{FreeProductSpace, MatrixSpace};
use crate::word::{Letter, WordExpr};
use crate::C64;

/// Slack allowed on the inequality for floating-point noise.
pub const BARNETT_SLACK: f64 = 1e-9;
/// Largest polynomial degree accepted by [`barnett_check`].
pub const MAX_BARNETT_DEGREE: usize = 8;
const STATE_TOL: f64 = 1e-12;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Operator norm as `‖m*m‖^{1/2}`; exact for unitaries.
fn op_norm(m: &DMatrix<C64>) -> f64 {
    let gram = m.adjoint() * m;
    gram.symmetric_eigenvalues().max().max(0.0).sqrt()
}

fn identity(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

/// `C(a) = 2‖a‖³‖σ_{i/2}(a) − a‖ + 2‖a‖²‖a*a − 1‖ + 3(1 + ‖a‖²)‖aa* − 1‖ + 6|ω(a)|‖a‖`.
pub fn c_const(space: &MatrixSpace, a: &DMatrix<C64>) -> Result<f64> {
    let n = space.size();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
    }
    let na = op_norm(a);
    let half = space.modular_halfstep(a);
    let id = identity(n);
    Ok(2.0 * na.powi(3) * op_norm(&(half - a))
        + 2.0 * na * na * op_norm(&(a.adjoint() * a - &id))
        + 3.0 * (1.0 + na * na) * op_norm(&(a * a.adjoint() - &id))
        + 6.0 * space.state_of(a).norm() * na)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BarnettConstants {
    pub c_a: f64,
    pub c_b: f64,
    pub c_c: f64,
    pub e: f64,
    pub f: f64,
}

/// Inner automorphisms `Ad u₁ ∗ Ad u₂`; each `uᵢ` must commute with `ρᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerAutomorphism {
    pub u1: DMatrix<C64>,
    pub u2: DMatrix<C64>,
}

#[derive(Clone, Debug)]
pub struct BarnettSetup {
    n1: MatrixSpace,
    n2: MatrixSpace,
    names: [String; 3],
    alpha: Option<InnerAutomorphism>,
    product: FreeProductSpace,
}

fn alpha_name(g: &str) -> String {
    format!("alpha({g})")
}

impl BarnettSetup {
    /// `a` must be a generator of `n1`, `b` and `c` generators of `n2`.
    pub fn new(n1: MatrixSpace, n2: MatrixSpace, a: &str, b: &str, c: &str) -> Result<Self> {
        for (space, g) in [(&n1, a), (&n2, b), (&n2, c)] {
            if space.matrix(g).is_none() {
                return Err(Error::UnknownGenerator(g.to_string()));
            }
        }
        let product = FreeProductSpace::new(vec![n1.clone().into(), n2.clone().into()])?;
        Ok(BarnettSetup { n1, n2, names: [a.into(), b.into(), c.into()], alpha: None, product })
    }

    /// Registers `α(a)`, `α(b)`, `α(c)` as extra generators of the factors.
    pub fn with_alpha(mut self, alpha: InnerAutomorphism) -> Result<Self> {
        for (space, u) in [(&self.n1, &alpha.u1), (&self.n2, &alpha.u2)] {
            let n = space.size();
            if u.nrows() != n || u.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: u.nrows() });
            }
            let unitary = op_norm(&(u.adjoint() * u - identity(n)));
            if unitary > STATE_TOL {
                return Err(Error::InvalidArgument(format!("automorphism implementer is not unitary ({unitary:e})")));
            }
            let moved = op_norm(&(u * space.rho() * u.adjoint() - space.rho()));
            if moved > STATE_TOL {
                return Err(Error::StateNotPreserved(moved));
            }
        }
        let [a, b, c] = self.names.clone();
        let conj = |u: &DMatrix<C64>, m: &DMatrix<C64>| u * m * u.adjoint();
        let ma = conj(&alpha.u1, self.n1.matrix(&a).expect("checked in new"));
        let mb = conj(&alpha.u2, self.n2.matrix(&b).expect("checked in new"));
        let mc = conj(&alpha.u2, self.n2.matrix(&c).expect("checked in new"));
        self.n1.insert(alpha_name(&a), ma)?;
        self.n2.insert(alpha_name(&b), mb)?;
        self.n2.insert(alpha_name(&c), mc)?;
        self.product = FreeProductSpace::new(vec![self.n1.clone().into(), self.n2.clone().into()])?;
        self.alpha = Some(alpha);
        Ok(self)
    }

    /// Two copies of `(M₂, tr)` with `a = b = diag(1, −1)`, `c = σ_x`, and a
    /// second generator `a2 = σ_x` in `N₁`.
    pub fn tracial() -> Result<Self> {
        let n1 = MatrixSpace::tracial(2)?.with_generator("a", pauli_z())?.with_generator("a2", pauli_x())?;
        let n2 = MatrixSpace::tracial(2)?.with_generator("b", pauli_z())?.with_generator("c", pauli_x())?;
        Self::new(n1, n2, "a", "b", "c")
    }

    /// `(M₂, ω)` with `ρ = diag(1, λ)/(1+λ)` and `a = σ_x`, `a2 = diag(1, −1)`,
    /// free with `(M₂, tr)` carrying `b = diag(1, −1)`, `c = σ_x`.
    pub fn omega_lambda(lambda: f64) -> Result<Self> {
        let n1 = MatrixSpace::d_lambda(lambda)?.with_generator("a", pauli_x())?.with_generator("a2", pauli_z())?;
        let n2 = MatrixSpace::tracial(2)?.with_generator("b", pauli_z())?.with_generator("c", pauli_x())?;
        Self::new(n1, n2, "a", "b", "c")
    }

    pub fn product(&self) -> &FreeProductSpace {
        &self.product
    }

    /// Generators a random polynomial may use, per factor.
    pub fn alphabets(&self) -> [Vec<String>; 2] {
        let filter = |s: &MatrixSpace| {
            s.generator_names().into_iter().filter(|g| !g.starts_with("alpha(")).collect::<Vec<_>>()
        };
        [filter(&self.n1), filter(&self.n2)]
    }

    fn element(&self, g: &str) -> (&MatrixSpace, &DMatrix<C64>) {
        let space = if self.n1.matrix(g).is_some() { &self.n1 } else { &self.n2 };
        (space, space.matrix(g).expect("generator registered"))
    }
}

fn pauli_x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

fn pauli_z() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

pub fn ef_consts(setup: &BarnettSetup) -> Result<BarnettConstants> {
    let [a, b, cn] = &setup.names;
    let (sa, ma) = setup.element(a);
    let (sb, mb) = setup.element(b);
    let (sc, mc) = setup.element(cn);
    let cb = mc * mb.adjoint();
    let (c_a, c_b, c_c) = (c_const(sa, ma)?, c_const(sb, mb)?, c_const(sc, mc)?);
    let e = 6.0 * op_norm(ma).powi(3) + 4.0 * op_norm(mb).powi(3) + 4.0 * op_norm(mc).powi(3);
    let f = 3.0 * c_a + 2.0 * c_b + 2.0 * c_c + 12.0 * setup.n2.state_of(&cb).norm() * op_norm(&cb);
    Ok(BarnettConstants { c_a, c_b, c_c, e, f })
}

/// `‖x‖₂ = φ(x*x)^{1/2}`.
pub fn two_norm(space: &FreeProductSpace, x: &WordExpr) -> Result<f64> {
    space.two_norm(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarnettEntry {
    pub word: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BarnettSummary {
    pub min_margin: f64,
    pub pass: bool,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarnettReport {
    pub constants: BarnettConstants,
    pub entries: Vec<BarnettEntry>,
    pub summary: BarnettSummary,
}

/// Evaluates both sides of the inequality for every `x`.
pub fn barnett_check(setup: &BarnettSetup, xs: &[WordExpr]) -> Result<BarnettReport> {
    let constants = ef_consts(setup)?;
    let space = &setup.product;
    let mut entries = Vec::with_capacity(xs.len());
    for x in xs {
        if x.degree() > MAX_BARNETT_DEGREE {
            return Err(Error::DegreeTooHigh { degree: x.degree(), limit: MAX_BARNETT_DEGREE });
        }
        let lhs = space.centered_two_norm(x)?;
        let mut worst: f64 = 0.0;
        for g in &setup.names {
            let plain = WordExpr::generator(g);
            let moved = match setup.alpha {
                Some(_) => WordExpr::letter(Letter::new(alpha_name(g))),
                None => plain.clone(),
            };
            worst = worst.max(space.two_norm(&(x * &plain - &moved * x))?);
        }
        let rhs = constants.e * worst + constants.f * space.two_norm(x)?;
        entries.push(BarnettEntry { word: x.to_string(), lhs, rhs, margin: rhs - lhs });
    }
    let min_margin = entries.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min);
    let pass = entries.iter().all(|e| e.lhs <= e.rhs + BARNETT_SLACK);
    Ok(BarnettReport { constants, summary: BarnettSummary { min_margin, pass, count: entries.len() }, entries })
}

/// Random polynomials for [`barnett_check`].
///
/// Each polynomial has 1 to 4 terms with coefficients whose real and imaginary
/// parts are uniform in `[−1, 1]`. A term is an alternating word of uniform
/// length in `1..=max_degree`: the first factor is chosen uniformly, blocks
/// have length 1 or 2, and each letter is uniform within its factor subject to
/// the two letters of a block being distinct. Stream
/// `k` of a `ChaCha8` generator seeded with `seed` produces polynomial `k`.
pub fn random_polynomials(setup: &BarnettSetup, count: usize, max_degree: usize, seed: u64) -> Vec<WordExpr> {
    let alphabets = setup.alphabets();
    (0..count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut x = WordExpr::zero();
            for _ in 0..rng.random_range(1..=4) {
                let len = rng.random_range(1..=max_degree.max(1));
                let mut factor = rng.random_range(0..2);
                let mut word = Vec::with_capacity(len);
                while word.len() < len {
                    let alphabet = &alphabets[factor];
                    let block = rng.random_range(1..=2).min(len - word.len()).min(alphabet.len());
                    let first = rng.random_range(0..alphabet.len());
                    word.push(Letter::new(alphabet[first].clone()));
                    if block == 2 {
                        let second = (first + rng.random_range(1..alphabet.len())) % alphabet.len();
                        word.push(Letter::new(alphabet[second].clone()));
                    }
                    factor = 1 - factor;
                }
                let coeff = C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
                x.add_term(word, coeff);
            }
            x
        })
        .collect()
}
