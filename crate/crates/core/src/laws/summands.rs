use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::freeness::{check_freeness, FreenessReport, Verdict, EXACT_FREENESS_TOL};
use super::product::FreeProductSpace;
use super::space::{NCSpace, StateSpace};
use crate::error::{Error, Result};
use crate::fock::{semicircular_field, Budget, FockAlgebra, FockSpace};
use crate::rep::RepSpec;
use crate::word::{format_word, Letter};
use crate::C64;

/// Agreement required between Fock and recursion moments.
pub const DIRECT_SUM_TOL: f64 = 1e-10;

/// Orthogonal summands of `rep`: the trivial part, then one per block, with
/// the first real coordinate each occupies.
pub fn summands(rep: &RepSpec) -> Result<Vec<(RepSpec, usize)>> {
    let mut out = Vec::new();
    if rep.trivial_dim() > 0 {
        out.push((RepSpec::trivial(rep.trivial_dim())?, 0));
    }
    let mut offset = rep.trivial_dim();
    for b in rep.blocks() {
        out.push((RepSpec::new(0, vec![*b])?, offset));
        offset += 2 * b.multiplicity;
    }
    Ok(out)
}

/// Name of the field `s(e_i)` for the real basis vector `e_i`.
pub fn field_name(i: usize) -> String {
    format!("s({i})")
}

/// `s(e_i)` for every real coordinate `i` of `rep`, on a depth-`depth` Fock space.
pub fn field_algebra(rep: &RepSpec, depth: usize, budget: &Budget) -> Result<FockAlgebra> {
    let space = FockSpace::new(rep.dim(), depth, budget)?;
    let mut alg = FockAlgebra::new(&space);
    for i in 0..rep.dim() {
        let mut e = vec![0.0; rep.dim()];
        e[i] = 1.0;
        alg.insert(field_name(i), semicircular_field(&space, rep, &e)?)?;
    }
    Ok(alg)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectSumReport {
    pub verdict: Verdict,
    pub depth: usize,
    /// Freeness of the summands' fields inside the Fock space of `rep`.
    pub fock: FreenessReport,
    /// The same check in the free product of the summands' Fock spaces.
    pub recursion: FreenessReport,
    pub random_words: usize,
    pub max_moment_difference: f64,
    pub worst_word: Option<String>,
}

/// Checks that the fields of orthogonal summands are free: alternating
/// centered words on the Fock space of the whole representation, the same
/// words in the free product of the summands, and `random_words` random
/// field words compared between the two.
pub fn direct_sum_freeness(
    rep: &RepSpec,
    depth: usize,
    max_len: usize,
    random_words: usize,
    seed: u64,
    budget: &Budget,
) -> Result<DirectSumReport> {
    if depth < max_len {
        return Err(Error::InvalidArgument(format!("depth {depth} is below the word length {max_len}")));
    }
    let parts = summands(rep)?;
    let families: Vec<Vec<String>> =
        parts.iter().map(|(r, off)| (0..r.dim()).map(|i| field_name(off + i)).collect()).collect();

    let whole = NCSpace::fock(field_algebra(rep, depth, budget)?)?;
    let factors = parts
        .iter()
        .map(|(r, off)| {
            let local = field_algebra(r, depth, budget)?;
            let mut renamed = FockAlgebra::new(local.space());
            for i in 0..r.dim() {
                renamed.insert(field_name(off + i), local.operator(&Letter::new(field_name(i)))?.clone())?;
            }
            NCSpace::fock(renamed)
        })
        .collect::<Result<Vec<_>>>()?;
    let product = FreeProductSpace::new(factors)?;

    let fock = check_freeness(&whole, &families, max_len, EXACT_FREENESS_TOL)?;
    let recursion = check_freeness(&product, &families, max_len, 0.0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = whole.generators();
    let (mut max_diff, mut worst_word) = (0.0f64, None);
    for _ in 0..random_words {
        let len = rng.random_range(1..=max_len);
        let w: Vec<Letter> = (0..len).map(|_| Letter::new(names[rng.random_range(0..names.len())].clone())).collect();
        let a: C64 = whole.moment(&w)?;
        let b: C64 = product.moment(&w)?;
        let diff = (a - b).norm();
        if worst_word.is_none() || diff > max_diff {
            max_diff = diff;
            worst_word = Some(format_word(&w));
        }
    }

    let verdict = if parts.len() < 2 {
        Verdict::Inapplicable
    } else if fock.verdict == Verdict::Pass && recursion.verdict == Verdict::Pass && max_diff <= DIRECT_SUM_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(DirectSumReport { verdict, depth, fock, recursion, random_words, max_moment_difference: max_diff, worst_word })
}
