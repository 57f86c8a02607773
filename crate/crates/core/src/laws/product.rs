use std::collections::{BTreeMap, HashMap};

use super::space::{Leg, NCSpace, StateSpace};
use crate::error::{Error, Result};
use crate::word::{Letter, Word, WordExpr};
use crate::C64;

/// A vector in the free product of the factors' GNS spaces: a combination of
/// alternating tensors of centered legs, the empty tensor being `Ω`.
pub type Tensor = Vec<(usize, Leg)>;
pub type ProductVector = BTreeMap<Tensor, C64>;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// The reduced free product of a list of spaces.
#[derive(Clone, Debug)]
pub struct FreeProductSpace {
    factors: Vec<NCSpace>,
    tags: HashMap<String, usize>,
}

impl FreeProductSpace {
    pub fn new(factors: Vec<NCSpace>) -> Result<Self> {
        let mut tags = HashMap::new();
        for (i, f) in factors.iter().enumerate() {
            for g in f.generators() {
                if tags.insert(g.clone(), i).is_some() {
                    return Err(Error::InvalidArgument(format!("generator `{g}` appears in two factors")));
                }
            }
        }
        Ok(FreeProductSpace { factors, tags })
    }

    pub fn factors(&self) -> &[NCSpace] {
        &self.factors
    }

    pub fn factor_mut(&mut self, i: usize) -> &mut NCSpace {
        &mut self.factors[i]
    }

    /// Re-reads generator names after a factor was modified.
    pub fn retag(self) -> Result<Self> {
        Self::new(self.factors)
    }

    pub fn factor_of(&self, name: &str) -> Result<usize> {
        self.tags.get(name).copied().ok_or_else(|| Error::UntaggedLetter(name.to_string()))
    }

    /// Splits a word into maximal runs of letters from one factor.
    fn blocks<'w>(&self, w: &'w [Letter]) -> Result<Vec<(usize, &'w [Letter])>> {
        let mut out: Vec<(usize, &[Letter])> = Vec::new();
        let mut start = 0;
        for i in 0..w.len() {
            let f = self.factor_of(&w[i].name)?;
            let next = w.get(i + 1).map(|l| self.factor_of(&l.name)).transpose()?;
            if next != Some(f) {
                out.push((f, &w[start..=i]));
                start = i + 1;
            }
        }
        Ok(out)
    }

    fn check_length(&self, len: usize) -> Result<()> {
        if let Some(limit) = self.factors.iter().filter_map(NCSpace::exact_length).min() {
            if len > limit {
                return Err(Error::DegreeTooHigh { degree: len, limit });
            }
        }
        Ok(())
    }

    /// Applies `(m - c)` with `m` a word in factor `f`, keeping tensors of length `<= keep`.
    ///
    /// The scalar part `φ(m)` of `m` acting across a factor boundary is
    /// computed by the same code path as [`StateSpace::moment`], so with `c = φ(m)`
    /// the subtraction cancels exactly.
    fn apply_block(&self, v: &ProductVector, f: usize, m: &[Letter], c: C64, keep: usize) -> Result<ProductVector> {
        let factor = &self.factors[f];
        let mut out = ProductVector::new();
        let mut add = |t: Tensor, x: C64| {
            if x != czero() && t.len() <= keep {
                *out.entry(t).or_insert_with(czero) += x;
            }
        };
        let mut from_cyclic = None;
        for (t, coef) in v {
            let (leg, rest) = match t.first() {
                Some((g, leg)) if *g == f => (Some(leg), &t[1..]),
                _ => (None, &t[..]),
            };
            let image = match leg {
                Some(_) => factor.apply_word(m, leg)?,
                None => {
                    if from_cyclic.is_none() {
                        from_cyclic = Some(factor.apply_word(m, None)?);
                    }
                    from_cyclic.clone().unwrap_or_default()
                }
            };
            // Scalar part: for a tensor starting in another factor it is φ(m) - c.
            let scalar = image.get(&None).copied().unwrap_or_else(czero);
            let scalar = if leg.is_none() { scalar - c } else { scalar };
            add(rest.to_vec(), coef * scalar);
            for (h, x) in image {
                let Some(h) = h else { continue };
                let mut nt = Vec::with_capacity(rest.len() + 1);
                nt.push((f, h));
                nt.extend_from_slice(rest);
                add(nt, coef * x);
            }
            if leg.is_some() {
                add(t.clone(), -coef * c);
            }
        }
        Ok(out)
    }

    /// `wΩ` in the free product, keeping only tensors that can still return to `Ω`
    /// within `keep` further blocks.
    fn apply_word_vec(&self, w: &[Letter], v: ProductVector, prune: bool) -> Result<ProductVector> {
        let blocks = self.blocks(w)?;
        let mut v = v;
        for (k, (f, m)) in blocks.iter().enumerate().rev() {
            let keep = if prune { k } else { usize::MAX };
            v = self.apply_block(&v, *f, m, czero(), keep)?;
        }
        Ok(v)
    }

    fn vacuum() -> ProductVector {
        let mut v = ProductVector::new();
        v.insert(Vec::new(), C64::new(1.0, 0.0));
        v
    }

    /// `xΩ` as a free-product tensor vector.
    pub fn apply_to_vacuum(&self, x: &WordExpr) -> Result<ProductVector> {
        self.check_length(x.degree())?;
        let mut out = ProductVector::new();
        for (w, c) in x.terms() {
            for (t, v) in self.apply_word_vec(w, Self::vacuum(), false)? {
                *out.entry(t).or_insert_with(czero) += c * v;
            }
        }
        out.retain(|_, v| *v != czero());
        Ok(out)
    }

    /// `⟨u, v⟩`, linear in `u`.
    pub fn inner(&self, u: &ProductVector, v: &ProductVector) -> Result<C64> {
        let pure = |t: &Tensor| t.iter().all(|(_, l)| matches!(l, Leg::Basis(_)));
        let mut acc = czero();
        let mut by_shape: BTreeMap<Vec<usize>, Vec<(&Tensor, C64)>> = BTreeMap::new();
        for (t, c) in v {
            if pure(t) {
                continue;
            }
            by_shape.entry(t.iter().map(|(f, _)| *f).collect()).or_default().push((t, *c));
        }
        for (t, a) in u {
            if pure(t) {
                if let Some(b) = v.get(t) {
                    acc += a * b.conj();
                }
                continue;
            }
            let shape: Vec<usize> = t.iter().map(|(f, _)| *f).collect();
            for (s, b) in by_shape.get(&shape).map(Vec::as_slice).unwrap_or(&[]) {
                let mut prod = a * b.conj();
                for ((f, x), (_, y)) in t.iter().zip(s.iter()) {
                    prod *= self.factors[*f].leg_inner(x, y)?;
                }
                acc += prod;
            }
        }
        Ok(acc)
    }

    /// `‖x‖₂ = ⟨xΩ, xΩ⟩^{1/2}`.
    pub fn two_norm(&self, x: &WordExpr) -> Result<f64> {
        let v = self.apply_to_vacuum(x)?;
        Ok(self.inner(&v, &v)?.re.max(0.0).sqrt())
    }

    /// `‖x - φ(x)1‖₂`: the norm of the non-vacuum part of `xΩ`.
    pub fn centered_two_norm(&self, x: &WordExpr) -> Result<f64> {
        let mut v = self.apply_to_vacuum(x)?;
        v.remove(&Vec::new());
        Ok(self.inner(&v, &v)?.re.max(0.0).sqrt())
    }
}

/// Mixed moment of `w` in the free product state.
pub fn free_product_moment(space: &FreeProductSpace, w: &WordExpr) -> Result<C64> {
    space.state(w)
}

impl StateSpace for FreeProductSpace {
    fn generator_names(&self) -> Vec<String> {
        self.factors.iter().flat_map(NCSpace::generators).collect()
    }

    fn generator_is_self_adjoint(&self, name: &str) -> bool {
        self.factor_of(name).is_ok_and(|f| self.factors[f].is_self_adjoint(name))
    }

    fn moment(&self, w: &[Letter]) -> Result<C64> {
        self.check_length(w.len())?;
        let v = self.apply_word_vec(w, Self::vacuum(), true)?;
        Ok(v.get(&Vec::new()).copied().unwrap_or_else(czero))
    }

    fn centered_product(&self, slots: &[(Word, C64)]) -> Result<C64> {
        self.check_length(slots.iter().map(|(m, _)| m.len()).sum::<usize>())?;
        let mut v = Self::vacuum();
        for (k, (m, c)) in slots.iter().enumerate().rev() {
            let blocks = self.blocks(m)?;
            let [(f, _)] = blocks.as_slice() else {
                // Multi-factor slot: expand (m - c) directly.
                let mv = self.apply_word_vec(m, v.clone(), false)?;
                let mut next = mv;
                for (t, x) in &v {
                    *next.entry(t.clone()).or_insert_with(czero) -= c * x;
                }
                next.retain(|_, x| *x != czero());
                v = next;
                continue;
            };
            let keep = slots[..k].iter().map(|(m, _)| m.len()).sum();
            v = self.apply_block(&v, *f, m, *c, keep)?;
        }
        Ok(v.get(&Vec::new()).copied().unwrap_or_else(czero))
    }
}

#[cfg(test)]
mod tests {
    use super::super::space::{Law, LawSpace, MatrixSpace};
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn mat(rows: &[[f64; 2]; 2]) -> DMatrix<C64> {
        DMatrix::from_fn(2, 2, |i, j| C64::new(rows[i][j], 0.0))
    }

    fn two_m2(lambda: f64) -> FreeProductSpace {
        let n1 = MatrixSpace::d_lambda(lambda)
            .unwrap()
            .with_generator("a", mat(&[[1.0, 0.0], [0.0, -1.0]]))
            .unwrap()
            .with_generator("p", mat(&[[0.3, 0.5], [-0.2, 0.9]]))
            .unwrap();
        let n2 = MatrixSpace::tracial(2)
            .unwrap()
            .with_generator("b", mat(&[[0.0, 1.0], [1.0, 0.0]]))
            .unwrap()
            .with_generator("q", mat(&[[1.0, 0.4], [0.0, 0.2]]))
            .unwrap();
        FreeProductSpace::new(vec![n1.into(), n2.into()]).unwrap()
    }

    fn laws() -> FreeProductSpace {
        FreeProductSpace::new(vec![
            LawSpace::new(Law::Semicircle { radius: 2.0 }, "s").unwrap().into(),
            LawSpace::new(Law::HaarUnitary, "u").unwrap().into(),
            LawSpace::new(Law::ShiftIsometry { lambda: 0.5 }, "v").unwrap().into(),
        ])
        .unwrap()
    }

    fn p(s: &str) -> WordExpr {
        WordExpr::parse(s).unwrap()
    }

    /// Independent oracle: `φ(b₁⋯b_k) = Σ_{S ⊊ [k]} Π_{i∉S} φ(b_i) · φ(Π_{i∈S} b̊_i)`,
    /// evaluated by recursive expansion on words.
    fn oracle(space: &FreeProductSpace, w: &[Letter]) -> C64 {
        let blocks = space.blocks(w).unwrap();
        if blocks.len() <= 1 {
            return match blocks.first() {
                None => C64::new(1.0, 0.0),
                Some((f, m)) => space.factors()[*f].moment(m).unwrap(),
            };
        }
        let k = blocks.len();
        let phis: Vec<C64> = blocks.iter().map(|(f, m)| space.factors()[*f].moment(m).unwrap()).collect();
        let mut total = C64::new(0.0, 0.0);
        for mask in 0u32..(1 << k) - 1 {
            let mut scalar = C64::new(1.0, 0.0);
            let mut centered = WordExpr::one();
            for (i, (_, m)) in blocks.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    let b = &WordExpr::word(m.to_vec()) - &WordExpr::scalar(phis[i]);
                    centered = &centered * &b;
                } else {
                    scalar *= phis[i];
                }
            }
            for (word, c) in centered.terms() {
                total += scalar * c * oracle(space, word);
            }
        }
        total
    }

    #[test]
    fn factorization_of_free_pairs() {
        let s = two_m2(0.5);
        let ab = free_product_moment(&s, &p("a b")).unwrap();
        let pa = s.factors()[0].moment(&[Letter::new("a")]).unwrap();
        let pb = s.factors()[1].moment(&[Letter::new("b")]).unwrap();
        assert!((ab - pa * pb).norm() < 1e-15);
        let pq = free_product_moment(&s, &p("p q")).unwrap();
        let pp = s.factors()[0].moment(&[Letter::new("p")]).unwrap();
        let pq_ = s.factors()[1].moment(&[Letter::new("q")]).unwrap();
        assert!((pq - pp * pq_).norm() < 1e-15);
    }

    #[test]
    fn alternating_centered_words_vanish_exactly() {
        let s = two_m2(0.5);
        let slot = |name: &str| {
            let w = vec![Letter::new(name)];
            let c = s.moment(&w).unwrap();
            (w, c)
        };
        let slots = vec![slot("p"), slot("q"), slot("p"), slot("q")];
        assert_eq!(s.centered_product(&slots).unwrap(), C64::new(0.0, 0.0));
        let l = laws();
        let slots: Vec<(Word, C64)> = ["v", "u", "s", "v"]
            .iter()
            .map(|n| {
                let w = vec![Letter::new(*n)];
                let c = l.moment(&w).unwrap();
                (w, c)
            })
            .collect();
        assert_eq!(l.centered_product(&slots).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn omega_lambda_e00() {
        let lambda = 0.5;
        let m = MatrixSpace::omega_lambda(lambda, 1e-12).unwrap();
        let n = m.size();
        let e00 = DMatrix::from_fn(n, n, |i, j| C64::new((i == 0 && j == 0) as u8 as f64, 0.0));
        let m = m.with_generator("e(0,0)", e00).unwrap();
        let s = FreeProductSpace::new(vec![m.into(), LawSpace::new(Law::HaarUnitary, "u").unwrap().into()]).unwrap();
        let v = free_product_moment(&s, &p("e(0,0)")).unwrap();
        assert!((v.re - (1.0 - lambda)).abs() < 1e-12);
        let v = free_product_moment(&s, &p("u e(0,0) u*")).unwrap();
        assert!((v.re - (1.0 - lambda)).abs() < 1e-12);
    }

    #[test]
    fn haar_commutator_norm() {
        // Two free Haar unitaries: ‖ab − ba‖₂ = √2.
        let s = FreeProductSpace::new(vec![
            LawSpace::new(Law::HaarUnitary, "a").unwrap().into(),
            LawSpace::new(Law::HaarUnitary, "b").unwrap().into(),
        ])
        .unwrap();
        let n = s.two_norm(&p("a b - b a")).unwrap();
        assert!((n - 2f64.sqrt()).abs() < 1e-14);
        assert!((s.two_norm(&p("a")).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.two_norm(&WordExpr::one()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn untagged_letters_are_rejected() {
        let s = two_m2(0.5);
        assert!(matches!(free_product_moment(&s, &p("a zz")), Err(Error::UntaggedLetter(_))));
    }

    fn arb_word(names: &'static [&'static str], max: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec((0..names.len(), any::<bool>()), 0..=max)
            .prop_map(move |v| v.into_iter().map(|(i, a)| Letter { name: names[i].to_string(), adjoint: a }).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn recursion_matches_subset_oracle(w in arb_word(&["a", "p", "b", "q"], 7)) {
            let s = two_m2(0.4);
            let fast = s.moment(&w).unwrap();
            let slow = oracle(&s, &w);
            prop_assert!((fast - slow).norm() < 1e-12, "{fast} vs {slow}");
        }

        #[test]
        fn recursion_matches_oracle_on_laws(w in arb_word(&["s", "u", "v"], 7)) {
            let s = laws();
            let fast = s.moment(&w).unwrap();
            let slow = oracle(&s, &w);
            prop_assert!((fast - slow).norm() < 1e-12, "{fast} vs {slow}");
        }

        #[test]
        fn adjoint_conjugates(w in arb_word(&["a", "p", "b", "q"], 7)) {
            let s = two_m2(0.7);
            let x = s.moment(&w).unwrap();
            let y = s.moment(&crate::word::word_adjoint(&w)).unwrap();
            prop_assert!((x - y.conj()).norm() < 1e-13);
        }

        #[test]
        fn positivity_and_norm_consistency(
            terms in prop::collection::vec((arb_word(&["a", "p", "b", "q"], 3), -1.0f64..1.0, -1.0f64..1.0), 1..4)
        ) {
            let s = two_m2(0.5);
            let mut x = WordExpr::zero();
            for (w, re, im) in terms {
                x.add_term(w, C64::new(re, im));
            }
            let xx = &x.adjoint() * &x;
            let phi = s.state(&xx).unwrap();
            prop_assert!(phi.re >= -1e-12 && phi.im.abs() < 1e-12);
            let n = s.two_norm(&x).unwrap();
            prop_assert!((n * n - phi.re).abs() < 1e-11);
        }

        #[test]
        fn parallelogram_identity(
            u in arb_word(&["s", "u", "v"], 3), w in arb_word(&["s", "u", "v"], 3), c in -1.0f64..1.0
        ) {
            let s = laws();
            let x = WordExpr::word(u);
            let y = WordExpr::term(w, C64::new(c, 0.5));
            let n = |e: &WordExpr| s.two_norm(e).unwrap().powi(2);
            let lhs = n(&(&x + &y)) + n(&(&x - &y));
            let rhs = 2.0 * n(&x) + 2.0 * n(&y);
            prop_assert!((lhs - rhs).abs() < 1e-11);
        }
    }
}
