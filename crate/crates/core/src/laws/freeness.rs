use std::collections::HashMap;

use serde::Serialize;

use super::space::StateSpace;
use crate::error::{Error, Result};
use crate::word::{format_word, Letter, Word};
use crate::C64;

/// Longest alternating word `check_freeness` will enumerate.
pub const MAX_FREENESS_LEN: usize = 8;
/// Cap on the number of alternating words enumerated in one check.
pub const MAX_FREENESS_WORDS: usize = 200_000;
/// Default pass threshold for exactly evaluated spaces.
pub const EXACT_FREENESS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreenessReport {
    pub verdict: Verdict,
    pub families: Vec<Vec<String>>,
    pub max_len: usize,
    pub tolerance: f64,
    pub words_checked: usize,
    pub max_residual: f64,
    /// Worst alternating word, written as its centered slots.
    pub worst_word: Option<String>,
    pub reason: Option<String>,
}

/// Evaluates every alternating product of centered monomials drawn from
/// distinct consecutive families, up to `max_len` letters in total.
pub fn check_freeness(
    space: &dyn StateSpace,
    families: &[Vec<String>],
    max_len: usize,
    tolerance: f64,
) -> Result<FreenessReport> {
    if max_len > MAX_FREENESS_LEN {
        return Err(Error::CombinatorialBudget(format!("max_len {max_len} exceeds {MAX_FREENESS_LEN}")));
    }
    let mut report = FreenessReport {
        verdict: Verdict::Inapplicable,
        families: families.to_vec(),
        max_len,
        tolerance,
        words_checked: 0,
        max_residual: 0.0,
        worst_word: None,
        reason: None,
    };
    let known = space.generator_names();
    for g in families.iter().flatten() {
        if !known.contains(g) {
            return Err(Error::UnknownGenerator(g.clone()));
        }
    }
    let mut seen = std::collections::HashSet::new();
    let overlapping = families.iter().flatten().any(|g| !seen.insert(g));
    if families.len() < 2 || families.iter().any(Vec::is_empty) || overlapping {
        report.reason = Some(if overlapping {
            "families overlap; freeness of a family with itself is not tested".into()
        } else {
            "need at least two non-empty families".into()
        });
        return Ok(report);
    }
    let alphabets: Vec<Vec<Letter>> = families
        .iter()
        .map(|fam| {
            fam.iter()
                .flat_map(|g| {
                    let mut ls = vec![Letter::new(g.clone())];
                    if !space.generator_is_self_adjoint(g) {
                        ls.push(Letter::star(g.clone()));
                    }
                    ls
                })
                .collect()
        })
        .collect();

    // Monomials per family and length, with their moments.
    let mut monomials: Vec<Vec<Vec<(Word, C64)>>> = Vec::new();
    let mut cache: HashMap<Word, C64> = HashMap::new();
    for alphabet in &alphabets {
        let mut by_len = vec![Vec::new(); max_len + 1];
        let mut layer: Vec<Word> = vec![Vec::new()];
        for len in 1..=max_len.saturating_sub(1) {
            layer = layer
                .iter()
                .flat_map(|w| {
                    alphabet.iter().map(move |l| {
                        let mut w = w.clone();
                        w.push(l.clone());
                        w
                    })
                })
                .collect();
            if layer.len() > MAX_FREENESS_WORDS {
                return Err(Error::CombinatorialBudget(format!("{} monomials of length {len}", layer.len())));
            }
            for w in &layer {
                let phi = match cache.get(w) {
                    Some(v) => *v,
                    None => {
                        let v = space.moment(w)?;
                        cache.insert(w.clone(), v);
                        v
                    }
                };
                by_len[len].push((w.clone(), phi));
            }
        }
        monomials.push(by_len);
    }

    let mut slots: Vec<(Word, C64)> = Vec::new();
    let mut walk = Walk { space, monomials: &monomials, max_len, report: &mut report, slots: &mut slots };
    walk.extend(None, 0)?;

    report.verdict = if report.max_residual <= tolerance { Verdict::Pass } else { Verdict::Fail };
    Ok(report)
}

struct Walk<'a> {
    space: &'a dyn StateSpace,
    monomials: &'a [Vec<Vec<(Word, C64)>>],
    max_len: usize,
    report: &'a mut FreenessReport,
    slots: &'a mut Vec<(Word, C64)>,
}

impl Walk<'_> {
    fn extend(&mut self, last: Option<usize>, used: usize) -> Result<()> {
        if self.slots.len() >= 2 {
            self.report.words_checked += 1;
            if self.report.words_checked > MAX_FREENESS_WORDS {
                return Err(Error::CombinatorialBudget(format!("more than {MAX_FREENESS_WORDS} alternating words")));
            }
            let r = self.space.centered_product(self.slots)?.norm();
            if self.report.worst_word.is_none() || r > self.report.max_residual {
                self.report.max_residual = r;
                let shown: Vec<String> = self.slots.iter().map(|(w, _)| format!("[{}]", format_word(w))).collect();
                self.report.worst_word = Some(shown.join(" "));
            }
        }
        for (f, by_len) in self.monomials.iter().enumerate() {
            if Some(f) == last {
                continue;
            }
            for len in 1..=self.max_len - used {
                for (w, c) in by_len.get(len).map(Vec::as_slice).unwrap_or(&[]) {
                    self.slots.push((w.clone(), *c));
                    self.extend(Some(f), used + len)?;
                    self.slots.pop();
                }
            }
        }
        Ok(())
    }
}
