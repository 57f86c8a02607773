//! Orthogonal one-parameter groups `U_t` on finite real Hilbert spaces.
//!
//! A [`RepSpec`] is a direct sum of a trivial part (where `U_t = 1`) and
//! rotation blocks `rot(tθ)` with multiplicities. Coordinates of `H_ℝ` are laid
//! out as the trivial part first, followed by one coordinate pair per copy of
//! each block, in block order.
//!
//! The generator `A` (with `U_t = A^{it}` on the complexification) is diagonal
//! in the basis `ξ₊ = (1, -i)/√2`, `ξ₋ = (1, i)/√2` of every rotation pair,
//! with `A ξ₊ = e^{θ} ξ₊` and `A ξ₋ = e^{-θ} ξ₋`. Every function of `A` is built
//! from that pair of rank-one projections.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to decide integer frequency ratios on floats.
pub const COMMENSURABILITY_TOL: f64 = 1e-9;
/// Largest ratio `θ_min / θ*` searched by the float commensurability test.
pub const MAX_COMMENSURABILITY_DENOMINATOR: u64 = 1000;
/// Relative tolerance under which two float frequencies are merged.
const MERGE_TOL: f64 = 1e-12;

/// Frequency of a rotation block, either a float or `(num/den)·ln(log_base)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Frequency {
    Float(f64),
    Exact { num: i64, den: i64, log_base: f64 },
}

impl Frequency {
    pub fn value(&self) -> f64 {
        match *self {
            Frequency::Float(x) => x,
            Frequency::Exact { num, den, log_base } => num as f64 / den as f64 * log_base.ln(),
        }
    }

    /// The eigenvalue `e^{θ}` of `A`, evaluated as `base^{num/den}` for exact frequencies.
    pub fn exp_value(&self) -> f64 {
        match *self {
            Frequency::Float(x) => x.exp(),
            Frequency::Exact { num, den, log_base } => log_base.powf(num as f64 / den as f64),
        }
    }

    fn reduced(self) -> Self {
        match self {
            Frequency::Exact { num, den, log_base } => {
                let g = num.gcd(&den).max(1);
                let sign = if den < 0 { -1 } else { 1 };
                Frequency::Exact { num: sign * num / g, den: sign * den / g, log_base }
            }
            f => f,
        }
    }

    fn same_as(&self, other: &Frequency) -> bool {
        match (self, other) {
            (
                Frequency::Exact { num: a, den: b, log_base: x },
                Frequency::Exact { num: c, den: d, log_base: y },
            ) if x == y => a == c && b == d,
            _ => {
                let (a, b) = (self.value(), other.value());
                (a - b).abs() <= MERGE_TOL * a.abs().max(b.abs())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Block {
    pub frequency: Frequency,
    pub multiplicity: usize,
}

impl Block {
    pub fn new(frequency: f64, multiplicity: usize) -> Self {
        Block { frequency: Frequency::Float(frequency), multiplicity }
    }

    pub fn theta(&self) -> f64 {
        self.frequency.value()
    }
}

/// Finite spectral description of an orthogonal representation of ℝ.
#[derive(Clone, Debug, PartialEq)]
pub struct RepSpec {
    trivial_dim: usize,
    blocks: Vec<Block>,
    declared_continuous: bool,
    declared_label: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RepDocument {
    #[serde(default)]
    trivial_dim: usize,
    #[serde(default)]
    blocks: Vec<BlockDocument>,
    #[serde(default)]
    declared_continuous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_type: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct BlockDocument {
    frequency: FrequencyDocument,
    multiplicity: usize,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum FrequencyDocument {
    Float(f64),
    Exact { num: i64, den: i64, log_base: f64 },
}

/// Serializes in the same document format [`parse_rep_spec`] reads.
impl Serialize for RepSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RepDocument {
            trivial_dim: self.trivial_dim,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockDocument {
                    frequency: match b.frequency {
                        Frequency::Float(x) => FrequencyDocument::Float(x),
                        Frequency::Exact { num, den, log_base } => FrequencyDocument::Exact { num, den, log_base },
                    },
                    multiplicity: b.multiplicity,
                })
                .collect(),
            declared_continuous: self.declared_continuous,
            declared_type: self.declared_label.clone(),
        }
        .serialize(serializer)
    }
}

/// Parses and validates a JSON representation document.
pub fn parse_rep_spec(document: &str) -> Result<RepSpec> {
    let doc: RepDocument =
        serde_json::from_str(document).map_err(|e| Error::MalformedRep(e.to_string()))?;
    let blocks = doc
        .blocks
        .into_iter()
        .map(|b| {
            let frequency = match b.frequency {
                FrequencyDocument::Float(x) => Frequency::Float(x),
                FrequencyDocument::Exact { num, den, log_base } => {
                    if den == 0 {
                        return Err(Error::MalformedRep("zero denominator".into()));
                    }
                    if !(log_base > 0.0) || log_base == 1.0 || !log_base.is_finite() {
                        return Err(Error::MalformedRep(format!("invalid log_base {log_base}")));
                    }
                    Frequency::Exact { num, den, log_base }
                }
            };
            Ok(Block { frequency, multiplicity: b.multiplicity })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rep = RepSpec::new(doc.trivial_dim, blocks)?;
    rep.declared_continuous = doc.declared_continuous;
    rep.declared_label = doc.declared_type;
    Ok(rep)
}

impl RepSpec {
    /// Validates the blocks and merges repeated frequencies.
    pub fn new(trivial_dim: usize, blocks: Vec<Block>) -> Result<Self> {
        let mut merged: Vec<Block> = Vec::with_capacity(blocks.len());
        for block in blocks {
            let theta = block.theta();
            if !(theta > 0.0) || !theta.is_finite() {
                return Err(Error::NonPositiveFrequency(theta));
            }
            if block.multiplicity == 0 {
                return Err(Error::ZeroMultiplicity);
            }
            let frequency = block.frequency.reduced();
            match merged.iter_mut().find(|b| b.frequency.same_as(&frequency)) {
                Some(existing) => existing.multiplicity += block.multiplicity,
                None => merged.push(Block { frequency, multiplicity: block.multiplicity }),
            }
        }
        if trivial_dim == 0 && merged.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(RepSpec { trivial_dim, blocks: merged, declared_continuous: false, declared_label: None })
    }

    pub fn trivial(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    /// The two-dimensional rotation representation with `λ = e^{-θ}`.
    pub fn lambda_block(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidArgument(format!("lambda must lie in (0,1), got {lambda}")));
        }
        Self::new(0, vec![Block::new(-lambda.ln(), 1)])
    }

    pub fn trivial_dim(&self) -> usize {
        self.trivial_dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn declared_continuous(&self) -> bool {
        self.declared_continuous
    }

    pub fn with_declared_continuous(mut self, label: Option<String>) -> Self {
        self.declared_continuous = true;
        self.declared_label = label;
        self
    }

    /// Real dimension of `H_ℝ` (equal to the complex dimension of `H`).
    pub fn dim(&self) -> usize {
        self.trivial_dim + 2 * self.blocks.iter().map(|b| b.multiplicity).sum::<usize>()
    }

    /// Direct sum `self ⊕ other`. Coordinates are re-laid out in canonical order.
    pub fn direct_sum(&self, other: &RepSpec) -> Result<RepSpec> {
        let mut blocks = self.blocks.clone();
        blocks.extend_from_slice(&other.blocks);
        RepSpec::new(self.trivial_dim + other.trivial_dim, blocks)
    }

    /// Iterator over rotation pairs: `(first coordinate, θ)`.
    pub fn rotation_pairs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let mut offset = self.trivial_dim;
        self.blocks.iter().flat_map(move |b| {
            let theta = b.theta();
            let start = offset;
            offset += 2 * b.multiplicity;
            (0..b.multiplicity).map(move |k| (start + 2 * k, theta))
        })
    }

    pub fn generator_spectrum(&self) -> SpectralData {
        let mut eigen_pairs = Vec::with_capacity(2 * self.blocks.len() + 1);
        if self.trivial_dim > 0 {
            eigen_pairs.push(EigenPair { log_value: 0.0, a_value: 1.0, multiplicity: self.trivial_dim });
        }
        for b in &self.blocks {
            let up = b.frequency.exp_value();
            let theta = b.theta();
            eigen_pairs.push(EigenPair { log_value: theta, a_value: up, multiplicity: b.multiplicity });
            eigen_pairs.push(EigenPair {
                log_value: -theta,
                a_value: 1.0 / up,
                multiplicity: b.multiplicity,
            });
        }
        eigen_pairs.sort_by(|x, y| x.log_value.total_cmp(&y.log_value));
        SpectralData { eigen_pairs }
    }

    /// `f(A)` for a function of `log a`, as a complex matrix in the real basis.
    pub fn functional_calculus(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::<C64>::zeros(n, n);
        let one = f(0.0);
        for i in 0..self.trivial_dim {
            m[(i, i)] = one;
        }
        for (p, theta) in self.rotation_pairs() {
            let (fp, fm) = (f(theta), f(-theta));
            let s = (fp + fm) * 0.5;
            let d = C64::i() * (fp - fm) * 0.5;
            m[(p, p)] = s;
            m[(p, p + 1)] = d;
            m[(p + 1, p)] = -d;
            m[(p + 1, p + 1)] = s;
        }
        m
    }

    /// `A^s` for complex `s`; `s = it` gives the unitary `U_t`.
    pub fn a_power(&self, s: C64) -> DMatrix<C64> {
        self.functional_calculus(|log_a| (s * log_a).exp())
    }

    /// `U_t` on the complexification.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        self.a_power(C64::new(0.0, t))
    }

    /// `U_t` as a real orthogonal matrix on `H_ℝ`.
    pub fn orthogonal(&self, t: f64) -> DMatrix<f64> {
        self.unitary(t).map(|z| z.re)
    }

    /// Spectral projection of `A` onto the eigenvalue `e^{log_value}`.
    pub fn spectral_projection(&self, log_value: f64) -> DMatrix<C64> {
        self.functional_calculus(|l| if l == log_value { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Orthonormal eigenvectors of `A` whose eigenvalue `a` satisfies `|a - target| <= window`.
    pub fn eigenvectors_near(&self, target: f64, window: f64) -> Vec<(f64, DVector<C64>)> {
        let n = self.dim();
        let mut out = Vec::new();
        if (1.0 - target).abs() <= window {
            for i in 0..self.trivial_dim {
                let mut v = DVector::zeros(n);
                v[i] = C64::new(1.0, 0.0);
                out.push((1.0, v));
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (p, theta) in self.rotation_pairs() {
            for (a, sign) in [(theta.exp(), -1.0), ((-theta).exp(), 1.0)] {
                if (a - target).abs() <= window {
                    let mut v = DVector::zeros(n);
                    v[p] = C64::new(h, 0.0);
                    v[p + 1] = C64::new(0.0, sign * h);
                    out.push((a, v));
                }
            }
        }
        out
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }

    /// The isometric embedding `ξ ↦ (2/(A^{-1}+1))^{1/2} ξ` of `H_ℝ` onto `K_ℝ`.
    pub fn embed(&self, xi: &[f64]) -> Result<DVector<C64>> {
        self.check_dim(xi.len())?;
        let m = self.functional_calculus(|l| {
            let a = l.exp();
            C64::new((2.0 * a / (1.0 + a)).sqrt(), 0.0)
        });
        let v = DVector::from_iterator(xi.len(), xi.iter().map(|&x| C64::new(x, 0.0)));
        Ok(m * v)
    }

    pub fn involution_apply(&self, zeta: &DVector<C64>, which: Involution) -> Result<DVector<C64>> {
        self.check_dim(zeta.len())?;
        Ok(match which {
            Involution::J => zeta.map(|z| z.conj()),
            Involution::T => (self.a_power(C64::new(-0.5, 0.0)) * zeta).map(|z| z.conj()),
            Involution::APower(s) => self.a_power(s) * zeta,
        })
    }

    /// `T ζ = J A^{-1/2} ζ`.
    pub fn t_apply(&self, zeta: &DVector<C64>) -> Result<DVector<C64>> {
        self.involution_apply(zeta, Involution::T)
    }

    pub fn classify(&self) -> TypeLabel {
        let generator = |theta: f64| {
            let value = theta.exp();
            SGenerator { value, display: format_generator(value) }
        };
        let dim = self.dim();
        let (factor_type, commensurability, s_invariant) = if self.blocks.is_empty() {
            let t = if dim == 1 { FactorType::NonFactorDim1 } else { FactorType::II1 };
            (t, None, Vec::new())
        } else {
            let c = self.common_frequency();
            let (t, gens) = match c.common_frequency {
                Some(theta) => (FactorType::IIILambda { lambda: (-theta).exp() }, vec![generator(theta)]),
                None => {
                    let mut thetas: Vec<f64> = self.blocks.iter().map(Block::theta).collect();
                    thetas.sort_by(f64::total_cmp);
                    (FactorType::III1, thetas.into_iter().map(generator).collect())
                }
            };
            (t, Some(c), gens)
        };
        TypeLabel {
            factor_type,
            s_invariant,
            almost_periodic: !self.declared_continuous,
            commensurability,
            declared_label: self.declared_label.clone(),
        }
    }

    /// Largest `θ* > 0` with every block frequency in `θ*·ℤ`, if any.
    fn common_frequency(&self) -> Commensurability {
        let exact_base = match self.blocks.first().map(|b| b.frequency) {
            Some(Frequency::Exact { log_base, .. }) => Some(log_base),
            _ => None,
        };
        let all_exact = exact_base.is_some()
            && self.blocks.iter().all(
                |b| matches!(b.frequency, Frequency::Exact { log_base, .. } if Some(log_base) == exact_base),
            );
        if all_exact {
            let base = exact_base.unwrap_or(std::f64::consts::E);
            let (mut g_num, mut l_den) = (0i64, 1i64);
            for b in &self.blocks {
                if let Frequency::Exact { num, den, .. } = b.frequency {
                    g_num = g_num.gcd(&num);
                    l_den = l_den.lcm(&den);
                }
            }
            let theta = g_num as f64 / l_den as f64 * base.ln();
            return Commensurability {
                method: CommensurabilityMethod::Exact,
                common_frequency: Some(theta),
                period: Some(2.0 * std::f64::consts::PI / theta),
            };
        }
        let thetas: Vec<f64> = self.blocks.iter().map(Block::theta).collect();
        let theta_min = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
        let found = (1..=MAX_COMMENSURABILITY_DENOMINATOR).map(|k| theta_min / k as f64).find(|&unit| {
            thetas.iter().all(|&t| {
                let r = t / unit;
                (r - r.round()).abs() <= COMMENSURABILITY_TOL
            })
        });
        Commensurability {
            method: CommensurabilityMethod::Tolerance {
                tol: COMMENSURABILITY_TOL,
                max_denominator: MAX_COMMENSURABILITY_DENOMINATOR,
            },
            common_frequency: found,
            period: found.map(|t| 2.0 * std::f64::consts::PI / t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Involution {
    T,
    J,
    APower(C64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenPair {
    pub a_value: f64,
    /// `ln a`; inversion symmetry is exact on this field.
    pub log_value: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralData {
    pub eigen_pairs: Vec<EigenPair>,
}

impl SpectralData {
    /// True when the spectrum is closed under `a ↦ 1/a` with equal multiplicities.
    pub fn is_inversion_symmetric(&self) -> bool {
        self.eigen_pairs.iter().all(|p| {
            self.eigen_pairs
                .iter()
                .any(|q| q.log_value == -p.log_value && q.multiplicity == p.multiplicity)
        })
    }

    pub fn multiplicity_of(&self, a_value: f64, tol: f64) -> usize {
        self.eigen_pairs
            .iter()
            .filter(|p| (p.a_value - a_value).abs() <= tol)
            .map(|p| p.multiplicity)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactorType {
    NonFactorDim1,
    II1,
    IIILambda { lambda: f64 },
    III1,
}

impl FactorType {
    pub fn tag(&self) -> &'static str {
        match self {
            FactorType::NonFactorDim1 => "NonFactor_dim1",
            FactorType::II1 => "II_1",
            FactorType::IIILambda { .. } => "III_lambda",
            FactorType::III1 => "III_1",
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            FactorType::IIILambda { lambda } => Some(lambda),
            _ => None,
        }
    }
}

impl fmt::Display for FactorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorType::IIILambda { lambda } => write!(f, "III_{}", format_generator(*lambda)),
            t => f.write_str(t.tag()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CommensurabilityMethod {
    Exact,
    Tolerance { tol: f64, max_denominator: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Commensurability {
    #[serde(flatten)]
    pub method: CommensurabilityMethod,
    pub common_frequency: Option<f64>,
    pub period: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SGenerator {
    pub value: f64,
    pub display: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeLabel {
    pub factor_type: FactorType,
    /// Generators of the subgroup of ℝ*₊ generated by the point spectrum of `A`.
    pub s_invariant: Vec<SGenerator>,
    pub almost_periodic: bool,
    pub commensurability: Option<Commensurability>,
    /// User-declared label for a discretized continuous spectrum; never inferred.
    pub declared_label: Option<String>,
}

#[derive(Serialize)]
struct TypeLabelJson<'a> {
    #[serde(rename = "type")]
    tag: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    s_invariant: Vec<&'a str>,
    almost_periodic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    commensurability: Option<&'a Commensurability>,
    #[serde(skip_serializing_if = "Option::is_none")]
    declared_label: Option<&'a str>,
}

impl Serialize for TypeLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TypeLabelJson {
            tag: self.factor_type.tag(),
            lambda: self.factor_type.lambda(),
            s_invariant: self.s_invariant.iter().map(|g| g.display.as_str()).collect(),
            almost_periodic: self.almost_periodic,
            commensurability: self.commensurability.as_ref(),
            declared_label: self.declared_label.as_deref(),
        }
        .serialize(s)
    }
}

/// Formats a positive real with at most ten decimals and no trailing zeros.
pub fn format_generator(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}
