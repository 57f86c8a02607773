//! The modular group of the free quasi-free state.
//!
//! On the truncated Fock space the flow is second quantization,
//! `σ_t(x) = Γ(U_t) x Γ(U_t)*`. For complex `z`, `σ_z` is only defined on
//! polynomials in creation and annihilation operators ([`AnalyticExpr`]), by
//! `ℓ(ζ) ↦ ℓ(A^{iz}ζ)` and `ℓ(ζ)* ↦ ℓ(A^{i z̄}ζ)*`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{FockOperator, FockSpace, StorageKind};
use crate::rep::RepSpec;
use crate::C64;

/// Default real grid for KMS checks.
pub const DEFAULT_T_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
/// Entries of `Γ(U_t)` below this are dropped.
const GAMMA_DROP_TOL: f64 = 1e-300;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// The square `[−1, 1]²` sampled at steps of `0.25`.
pub fn default_z_grid() -> Vec<C64> {
    let steps: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.25).collect();
    steps.iter().flat_map(|&re| steps.iter().map(move |&im| C64::new(re, im))).collect()
}

#[derive(Clone, Debug)]
pub struct ModularFlow {
    rep: RepSpec,
    space: FockSpace,
}

impl ModularFlow {
    pub fn new(rep: RepSpec, space: FockSpace) -> Result<Self> {
        if space.one_particle_dim() != rep.dim() {
            return Err(Error::DimensionMismatch { expected: rep.dim(), got: space.one_particle_dim() });
        }
        Ok(ModularFlow { rep, space })
    }

    pub fn rep(&self) -> &RepSpec {
        &self.rep
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    /// `Γ(U_t) = 1 ⊕ ⊕ₙ U_t^{⊗n}`.
    pub fn gamma(&self, t: f64) -> FockOperator {
        let u = self.rep.unitary(t);
        let d = self.rep.dim();
        let one = C64::new(1.0, 0.0);
        let mut entries = vec![(0, 0, one)];
        // Level n block as (row, col, value) in level coordinates.
        let mut level: Vec<(usize, usize, C64)> = vec![(0, 0, one)];
        for n in 1..=self.space.depth() {
            let len = self.space.level_dim(n - 1);
            let mut next = Vec::new();
            for a in 0..d {
                for b in 0..d {
                    let m = u[(a, b)];
                    if m.norm() <= GAMMA_DROP_TOL {
                        continue;
                    }
                    next.extend(level.iter().map(|&(r, c, v)| (a * len + r, b * len + c, m * v)));
                }
            }
            let off = self.space.offset(n);
            entries.extend(next.iter().map(|&(r, c, v)| (off + r, off + c, v)));
            level = next;
        }
        let kind = StorageKind::for_dim(self.space.total_dim());
        FockOperator::from_triplets(&self.space, entries, kind, 0, format!("Gamma(U_{t})"))
    }

    /// `σ_t(x) = Γ(U_t) x Γ(U_t)*`.
    pub fn modular_apply(&self, x: &FockOperator, t: f64) -> Result<FockOperator> {
        if x.space() != &self.space {
            return Err(Error::DimensionMismatch { expected: self.space.total_dim(), got: x.dim() });
        }
        let g = self.gamma(t);
        Ok(g.try_mul(x)?.try_mul(&g.adjoint())?.with_weight(x.weight()).with_label(format!("sigma_{t}({})", x.label())))
    }

    /// `σ_z(ℓ(ζ) + ℓ(Tζ)*)` as an operator.
    pub fn analytic_field(&self, zeta: &DVector<C64>, z: C64) -> Result<FockOperator> {
        AnalyticExpr::field(&self.rep, zeta)?.sigma(&self.rep, z).to_operator(&self.space)
    }

    /// Compares `φ(x σ_{t+i}(y))` with `φ(σ_t(y) x)` on each grid point.
    pub fn kms_check(&self, x: &AnalyticExpr, y: &AnalyticExpr, t_grid: &[f64]) -> Result<FlowReport> {
        let mut per_point = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let shifted = y.sigma(&self.rep, C64::new(t, 1.0));
            let lhs = x.mul(&shifted).vacuum_expectation(&self.space)?;
            let rhs = y.sigma(&self.rep, C64::new(t, 0.0)).mul(x).vacuum_expectation(&self.space)?;
            per_point.push(GridPoint::new(C64::new(t, 0.0), lhs, rhs));
        }
        Ok(FlowReport::new(&self.rep, vec![x.describe(), y.describe()], per_point))
    }

    /// Builds `x = ℓ(ξ) + ℓ(Tξ)*` from a unit eigenvector `Aξ = λξ`, `λ` within
    /// `window` of `e^{θ_target}`, and reports `‖σ_z(x) − λ^{iz} x‖` over `z_grid`.
    pub fn almost_eigen(&self, theta_target: f64, window: f64, z_grid: &[C64]) -> Result<(AnalyticExpr, FlowReport)> {
        let target = theta_target.exp();
        let found = self.rep.eigenvectors_near(target, window);
        let (lambda, xi) = found
            .into_iter()
            .min_by(|a, b| (a.0 - target).abs().total_cmp(&(b.0 - target).abs()))
            .ok_or(Error::NoSpectralVector { target, window })?;
        let x = AnalyticExpr::field(&self.rep, &xi)?;
        let x_op = x.to_operator(&self.space)?;
        let mut per_point = Vec::with_capacity(z_grid.len());
        for &z in z_grid {
            let phase = (C64::i() * z * lambda.ln()).exp();
            let moved = x.sigma(&self.rep, z).to_operator(&self.space)?;
            let defect = moved.try_sub(&x_op.scale(phase))?.norm();
            per_point.push(GridPoint { z: [z.re, z.im], lhs: None, rhs: None, residual: defect });
        }
        let mut report = FlowReport::new(&self.rep, vec![x.describe()], per_point);
        report.lambda = Some(lambda);
        report.self_adjoint_defect = Some(x_op.self_adjoint_defect());
        Ok((x, report))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    /// `[re, im]` of the grid point.
    pub z: [f64; 2],
    pub lhs: Option<[f64; 2]>,
    pub rhs: Option<[f64; 2]>,
    pub residual: f64,
}

impl GridPoint {
    fn new(z: C64, lhs: C64, rhs: C64) -> Self {
        GridPoint { z: [z.re, z.im], lhs: Some([lhs.re, lhs.im]), rhs: Some([rhs.re, rhs.im]), residual: (lhs - rhs).norm() }
    }
}

/// Residuals of a flow identity over a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowReport {
    pub rep: RepSpec,
    pub operators: Vec<String>,
    pub grid: Vec<[f64; 2]>,
    pub max_residual: f64,
    pub per_point: Vec<GridPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_adjoint_defect: Option<f64>,
}

impl FlowReport {
    fn new(rep: &RepSpec, operators: Vec<String>, per_point: Vec<GridPoint>) -> Self {
        FlowReport {
            rep: rep.clone(),
            operators,
            grid: per_point.iter().map(|p| p.z).collect(),
            max_residual: per_point.iter().map(|p| p.residual).fold(0.0, f64::max),
            per_point,
            lambda: None,
            self_adjoint_defect: None,
        }
    }

    /// Merges several reports over the same representation.
    pub fn merge(reports: Vec<FlowReport>) -> Option<FlowReport> {
        let mut it = reports.into_iter();
        let mut out = it.next()?;
        for r in it {
            out.operators.extend(r.operators);
            out.grid.extend(r.grid);
            out.per_point.extend(r.per_point);
            out.max_residual = out.max_residual.max(r.max_residual);
        }
        Some(out)
    }
}

/// `ℓ(ζ)`, or `ℓ(ζ)*` when `adjoint` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct Creation {
    pub vector: DVector<C64>,
    pub adjoint: bool,
}

/// A polynomial in creation and annihilation operators.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalyticExpr {
    terms: Vec<(C64, Vec<Creation>)>,
}

impl AnalyticExpr {
    pub fn one() -> Self {
        AnalyticExpr { terms: vec![(C64::new(1.0, 0.0), Vec::new())] }
    }

    pub fn creation(zeta: DVector<C64>, adjoint: bool) -> Self {
        AnalyticExpr { terms: vec![(C64::new(1.0, 0.0), vec![Creation { vector: zeta, adjoint }])] }
    }

    /// `ℓ(ζ) + ℓ(Tζ)*`.
    pub fn field(rep: &RepSpec, zeta: &DVector<C64>) -> Result<Self> {
        let tz = rep.t_apply(zeta)?;
        Ok(Self::creation(zeta.clone(), false).add(&Self::creation(tz, true)))
    }

    /// `s(ξ) = (ℓ(ξ_K) + ℓ(ξ_K)*)/2` for `ξ ∈ H_ℝ`.
    pub fn semicircular(rep: &RepSpec, xi: &[f64]) -> Result<Self> {
        let k = rep.embed(xi)?;
        Ok(Self::creation(k.clone(), false).add(&Self::creation(k, true)).scale(C64::new(0.5, 0.0)))
    }

    pub fn terms(&self) -> &[(C64, Vec<Creation>)] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.1.len()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        AnalyticExpr { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        AnalyticExpr { terms: self.terms.iter().map(|(k, w)| (k * c, w.clone())).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                let mut w = u.clone();
                w.extend(v.iter().cloned());
                terms.push((a * b, w));
            }
        }
        AnalyticExpr { terms }
    }

    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(c, w)| {
                let w = w.iter().rev().map(|l| Creation { vector: l.vector.clone(), adjoint: !l.adjoint }).collect();
                (c.conj(), w)
            })
            .collect();
        AnalyticExpr { terms }
    }

    /// Letter-wise `σ_z`.
    pub fn sigma(&self, rep: &RepSpec, z: C64) -> Self {
        let i = C64::i();
        let up = rep.a_power(i * z);
        let down = rep.a_power(i * z.conj());
        let terms = self
            .terms
            .iter()
            .map(|(c, w)| {
                let w = w
                    .iter()
                    .map(|l| Creation { vector: if l.adjoint { &down * &l.vector } else { &up * &l.vector }, adjoint: l.adjoint })
                    .collect();
                (*c, w)
            })
            .collect();
        AnalyticExpr { terms }
    }

    pub fn to_operator(&self, space: &FockSpace) -> Result<FockOperator> {
        let kind = StorageKind::for_dim(space.total_dim());
        let mut acc = FockOperator::zero(space, kind);
        for (c, w) in &self.terms {
            let mut op = FockOperator::identity(space, kind);
            for l in w {
                op = op.try_mul(&FockOperator::creation_with(space, l.vector.as_slice(), l.adjoint, kind)?)?;
            }
            acc = acc.try_add(&op.scale(*c))?;
        }
        Ok(acc.with_weight(self.degree()).with_label(self.describe()))
    }

    /// `⟨Ω, xΩ⟩` by applying letters to the vacuum. A vacuum path of length
    /// `m` never rises above level `m/2`, so this is exact for `m ≤ 2D`.
    pub fn vacuum_expectation(&self, space: &FockSpace) -> Result<C64> {
        let limit = 2 * space.depth();
        if self.degree() > limit {
            return Err(Error::DegreeTooHigh { degree: self.degree(), limit });
        }
        let mut total = czero();
        for (c, w) in &self.terms {
            let mut v = space.vacuum();
            for l in w.iter().rev() {
                v = if l.adjoint {
                    space.apply_annihilation(l.vector.as_slice(), &v)
                } else {
                    space.apply_creation(l.vector.as_slice(), &v)
                };
            }
            total += c * v[0];
        }
        Ok(total)
    }

    pub fn describe(&self) -> String {
        let fmt_vec = |v: &DVector<C64>| {
            let parts: Vec<String> = v.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
            format!("[{}]", parts.join(","))
        };
        let terms: Vec<String> = self
            .terms
            .iter()
            .map(|(c, w)| {
                let letters: Vec<String> =
                    w.iter().map(|l| format!("l({}){}", fmt_vec(&l.vector), if l.adjoint { "*" } else { "" })).collect();
                format!("({:.6}{:+.6}i){}", c.re, c.im, letters.join(""))
            })
            .collect();
        terms.join(" + ")
    }
}

/// Basis fields `s(e_i)` and their pairwise products `s(e_i)s(e_j)`.
pub fn quadratic_battery(rep: &RepSpec) -> Result<Vec<AnalyticExpr>> {
    let d = rep.dim();
    let fields = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            AnalyticExpr::semicircular(rep, &e)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = fields.clone();
    for a in &fields {
        for b in &fields {
            out.push(a.mul(b));
        }
    }
    Ok(out)
}

/// KMS residuals for every ordered pair from [`quadratic_battery`].
pub fn kms_battery(flow: &ModularFlow, t_grid: &[f64]) -> Result<FlowReport> {
    let battery = quadratic_battery(flow.rep())?;
    let mut reports = Vec::new();
    for x in &battery {
        for y in &battery {
            reports.push(flow.kms_check(x, y, t_grid)?);
        }
    }
    FlowReport::merge(reports).ok_or_else(|| Error::InvalidArgument("empty representation".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_fock, semicircular_field};
    use crate::rep::Block;
    use std::f64::consts::{LN_2, PI};

    fn flow(rep: RepSpec, depth: usize) -> ModularFlow {
        let space = build_fock(rep.dim(), depth).unwrap();
        ModularFlow::new(rep, space).unwrap()
    }

    fn two_block() -> RepSpec {
        RepSpec::new(0, vec![Block::new(LN_2, 1), Block::new(3f64.ln(), 1)]).unwrap()
    }

    #[test]
    fn gamma_is_a_unitary_group() {
        let f = flow(RepSpec::lambda_block(0.5).unwrap(), 4);
        for &(t, s) in &[(0.3, -1.2), (1.0, 2.5), (-0.7, 0.7)] {
            let lhs = f.gamma(t + s);
            let rhs = f.gamma(t).try_mul(&f.gamma(s)).unwrap();
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
            let g = f.gamma(t);
            let id = FockOperator::identity(f.space(), g.kind());
            assert!(g.try_mul(&g.adjoint()).unwrap().max_abs_diff(&id).unwrap() < 1e-12);
        }
    }

    #[test]
    fn covariance_of_fields() {
        let rep = two_block();
        let f = flow(rep.clone(), 3);
        let xi = [0.3, -1.0, 0.5, 2.0];
        let s = semicircular_field(f.space(), &rep, &xi).unwrap();
        for t in [-1.0, 0.4, 2.0] {
            let moved = f.modular_apply(&s, t).unwrap();
            let rotated: Vec<f64> = (rep.orthogonal(t) * nalgebra::DVector::from_column_slice(&xi)).iter().copied().collect();
            let target = semicircular_field(f.space(), &rep, &rotated).unwrap();
            assert!(moved.max_abs_diff(&target).unwrap() < 1e-12);
            assert!((moved.vacuum_expectation() - s.vacuum_expectation()).norm() < 1e-12);
        }
        let zero = f.modular_apply(&s, 0.0).unwrap();
        assert!(zero.max_abs_diff(&s).unwrap() < 1e-15);
    }

    #[test]
    fn state_invariance_on_products() {
        let rep = RepSpec::lambda_block(0.5).unwrap();
        let f = flow(rep.clone(), 4);
        let a = semicircular_field(f.space(), &rep, &[1.0, 0.0]).unwrap();
        let b = semicircular_field(f.space(), &rep, &[0.2, 0.9]).unwrap();
        let x = a.try_mul(&b).unwrap().try_mul(&a).unwrap().try_mul(&b).unwrap();
        for t in [-2.0, 0.5, 3.0] {
            let moved = f.modular_apply(&x, t).unwrap();
            assert!((moved.vacuum_expectation() - x.vacuum_expectation()).norm() < 1e-12);
        }
    }

    #[test]
    fn trivial_rep_has_trivial_flow() {
        let rep = RepSpec::trivial(2).unwrap();
        let f = flow(rep, 3);
        let id = FockOperator::identity(f.space(), StorageKind::Dense);
        assert!(f.gamma(1.7).max_abs_diff(&id).unwrap() < 1e-15);
        let zeta = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let half = f.analytic_field(&zeta, C64::new(0.0, 0.5)).unwrap();
        let plain = f.analytic_field(&zeta, czero()).unwrap();
        assert!(half.max_abs_diff(&plain).unwrap() < 1e-15);
    }

    #[test]
    fn periodicity_of_lambda_block() {
        let f = flow(RepSpec::lambda_block(0.5).unwrap(), 5);
        let g = f.gamma(2.0 * PI / LN_2);
        let id = FockOperator::identity(f.space(), g.kind());
        assert!(g.max_abs_diff(&id).unwrap() < 1e-10);
    }

    #[test]
    fn analytic_field_at_real_z_matches_modular_apply() {
        let rep = two_block();
        let f = flow(rep.clone(), 3);
        let zeta = DVector::from_vec((0..4).map(|k| C64::new(0.1 * k as f64 + 0.2, -0.3 * k as f64)).collect());
        let x0 = f.analytic_field(&zeta, czero()).unwrap();
        for t in [-0.8, 1.3] {
            let a = f.analytic_field(&zeta, C64::new(t, 0.0)).unwrap();
            let b = f.modular_apply(&x0, t).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn kms_two_point_function_explicit() {
        // φ(s(ξ) σ_z(s(η))) = ¼⟨ξ_K, A^{iz} η_K⟩ with ⟨·,·⟩ antilinear in the first slot.
        let rep = RepSpec::lambda_block(0.5).unwrap();
        let f = flow(rep.clone(), 2);
        let (xi, eta) = ([1.0, 0.2], [-0.4, 0.7]);
        let x = AnalyticExpr::semicircular(&rep, &xi).unwrap();
        let y = AnalyticExpr::semicircular(&rep, &eta).unwrap();
        let (xk, ek) = (rep.embed(&xi).unwrap(), rep.embed(&eta).unwrap());
        for z in [C64::new(0.3, 1.0), C64::new(-1.0, 0.4)] {
            let got = x.mul(&y.sigma(&rep, z)).vacuum_expectation(f.space()).unwrap();
            let expected = xk.dotc(&(rep.a_power(C64::i() * z) * &ek)) * 0.25;
            assert!((got - expected).norm() < 1e-13, "{got} vs {expected}");
        }
        let r = f.kms_check(&x, &y, &[-1.0, 0.0, 1.0]).unwrap();
        assert!(r.max_residual < 1e-9);
    }

    #[test]
    fn kms_holds_on_quadratic_battery() {
        for rep in [RepSpec::trivial(1).unwrap(), RepSpec::lambda_block(0.5).unwrap(), two_block()] {
            let f = flow(rep, 2);
            let r = kms_battery(&f, &DEFAULT_T_GRID).unwrap();
            assert!(r.max_residual < 1e-9, "{}", r.max_residual);
        }
    }

    #[test]
    fn kms_with_unit_x() {
        let rep = two_block();
        let f = flow(rep.clone(), 2);
        let y = AnalyticExpr::semicircular(&rep, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let y = y.mul(&y);
        let r = f.kms_check(&AnalyticExpr::one(), &y, &DEFAULT_T_GRID).unwrap();
        assert!(r.max_residual < 1e-12);
        let first = r.per_point[0].lhs.unwrap();
        assert!(r.per_point.iter().all(|p| (p.lhs.unwrap()[0] - first[0]).abs() < 1e-12));
    }

    #[test]
    fn almost_eigen_exact_eigenvector() {
        let f = flow(RepSpec::lambda_block(0.5).unwrap(), 3);
        let (_, r) = f.almost_eigen(LN_2, 1e-9, &default_z_grid()).unwrap();
        assert_eq!(r.per_point.len(), 81);
        assert!(r.max_residual < 1e-10, "{}", r.max_residual);
        assert!((r.lambda.unwrap() - 2.0).abs() < 1e-12);

        let f = flow(RepSpec::trivial(1).unwrap(), 3);
        let (_, r) = f.almost_eigen(0.0, 1e-9, &default_z_grid()).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert!(r.self_adjoint_defect.unwrap() < 1e-15);

        assert!(matches!(f.almost_eigen(1.0, 1e-3, &default_z_grid()), Err(Error::NoSpectralVector { .. })));
    }

    #[test]
    fn report_serializes() {
        let f = flow(RepSpec::lambda_block(0.5).unwrap(), 2);
        let x = AnalyticExpr::semicircular(f.rep(), &[1.0, 0.0]).unwrap();
        let r = f.kms_check(&x, &x, &[0.0]).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["rep", "operators", "grid", "max_residual", "per_point"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn group_law_and_state_invariance(t in -3.0..3.0f64, s in -3.0..3.0f64, c in prop::collection::vec(-1.0..1.0f64, 4)) {
                let rep = two_block();
                let f = flow(rep.clone(), 2);
                let lhs = f.gamma(t + s);
                let rhs = f.gamma(t).try_mul(&f.gamma(s)).unwrap();
                prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
                let a = semicircular_field(f.space(), &rep, &c).unwrap();
                let x = a.try_mul(&a).unwrap();
                let moved = f.modular_apply(&x, t).unwrap();
                prop_assert!((moved.vacuum_expectation() - x.vacuum_expectation()).norm() < 1e-12);
            }
        }
    }
}
