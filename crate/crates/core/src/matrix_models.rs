//! Monte Carlo random-matrix models: GUE matrices for semicircular families
//! and complex Ginibre matrices for circular ones.
//!
//! Randomness comes from `ChaCha8`: matrix `j` of sample `s` is drawn from
//! stream `2s + j` of a generator seeded with the ensemble seed, so each
//! sample is reproducible on its own. Entries are filled column by column,
//! upper triangle first.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::catalan_number;
use crate::C64;

pub const MAX_MC_ORDER: usize = 8;
pub const MAX_MC_WORD_LEN: usize = 6;
/// Alternating words checked by default, written over `{X, Y}`; each maximal
/// run is one centered slot.
pub const DEFAULT_WORDS: [&str; 6] = ["XY", "XYXY", "XXYY", "XXYXY", "XYXYXY", "XXYYXY"];
/// Number of pilot standard errors a calibrated band allows.
pub const BAND_STDERRS: f64 = 4.0;

const BAND_FIXTURE: &str = include_str!("../fixtures/gue_bands.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GuePair,
    GueSingle,
    ComplexGinibre,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gue_pair" => Ok(Family::GuePair),
            "gue_single" => Ok(Family::GueSingle),
            "complex_ginibre" => Ok(Family::ComplexGinibre),
            _ => Err(Error::InvalidArgument(format!("unknown ensemble family {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub family: Family,
}

impl EnsembleSpec {
    pub fn new(n: usize, samples: usize, seed: u64, family: Family) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("matrix size must be at least 2, got {n}")));
        }
        if samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        Ok(EnsembleSpec { n, samples, seed, family })
    }
}

/// A complex matrix stored as real and imaginary parts, so products run on
/// real matrix multiplication.
#[derive(Clone, Debug, PartialEq)]
struct Split {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Split {
    fn from_complex(m: &DMatrix<C64>) -> Self {
        Split { re: m.map(|z| z.re), im: m.map(|z| z.im) }
    }

    fn n(&self) -> usize {
        self.re.nrows()
    }

    fn mul(&self, other: &Split) -> Split {
        let re = &self.re * &other.re - &self.im * &other.im;
        let im = &self.re * &other.im + &self.im * &other.re;
        Split { re, im }
    }

    fn adjoint(&self) -> Split {
        Split { re: self.re.transpose(), im: -self.im.transpose() }
    }

    /// Normalized trace `tr_n(AB)` without forming the product.
    fn trace_of_product(&self, other: &Split) -> C64 {
        let n = self.n();
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (self.re[(i, j)], self.im[(i, j)]);
                let (c, d) = (other.re[(j, i)], other.im[(j, i)]);
                re += a * c - b * d;
                im += a * d + b * c;
            }
        }
        C64::new(re, im) / n as f64
    }

    fn trace(&self) -> C64 {
        C64::new(self.re.trace(), self.im.trace()) / self.n() as f64
    }

    /// `self − tr_n(self)·1`.
    fn centered(&self) -> Split {
        let t = self.trace();
        let mut out = self.clone();
        for i in 0..self.n() {
            out.re[(i, i)] -= t.re;
            out.im[(i, i)] -= t.im;
        }
        out
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gue_from(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let diag = (1.0 / n as f64).sqrt();
    let off = (0.5 / n as f64).sqrt();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let z = C64::new(re * off, im * off);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        let d: f64 = StandardNormal.sample(rng);
        m[(j, j)] = C64::new(d * diag, 0.0);
    }
    m
}

fn ginibre_from(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let s = (0.5 / n as f64).sqrt();
    DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    })
}

/// Hermitian `n × n` matrix with complex Gaussian off-diagonal entries and
/// real Gaussian diagonal, all of variance `1/n`.
pub fn sample_gue(n: usize, seed: u64) -> Result<DMatrix<C64>> {
    EnsembleSpec::new(n, 1, seed, Family::GueSingle)?;
    Ok(gue_from(n, &mut rng_for(seed, 0)))
}

/// `n × n` matrix of i.i.d. complex Gaussian entries of variance `1/n`.
pub fn sample_ginibre(n: usize, seed: u64) -> Result<DMatrix<C64>> {
    EnsembleSpec::new(n, 1, seed, Family::ComplexGinibre)?;
    Ok(ginibre_from(n, &mut rng_for(seed, 0)))
}

/// The matrices of sample `s`: one for single families, two for pairs.
pub fn ensemble_sample(spec: &EnsembleSpec, s: usize) -> Vec<DMatrix<C64>> {
    let draw = |j: u64| {
        let mut rng = rng_for(spec.seed, 2 * s as u64 + j);
        match spec.family {
            Family::ComplexGinibre => ginibre_from(spec.n, &mut rng),
            _ => gue_from(spec.n, &mut rng),
        }
    };
    match spec.family {
        Family::GuePair => vec![draw(0), draw(1)],
        _ => vec![draw(0)],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub k: usize,
    pub estimate: f64,
    /// `None` for a single sample.
    pub stderr: Option<f64>,
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentEstimates {
    pub spec: EnsembleSpec,
    /// What is averaged: `tr_n(X^k)` or `tr_n((Y*Y)^k)`.
    pub statistic: String,
    pub rows: Vec<MomentRow>,
}

impl MomentEstimates {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,estimate,stderr,target\n");
        for r in &self.rows {
            let se = r.stderr.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", r.k, r.estimate, se, r.target));
        }
        out
    }

    /// Rows whose estimate is more than `z` standard errors from the target.
    pub fn outliers(&self, z: f64) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.stderr.is_some_and(|se| (r.estimate - r.target).abs() > z * se))
            .map(|r| r.k)
            .collect()
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, Option<f64>) {
    let s = values.len() as f64;
    let mean = values.iter().sum::<f64>() / s;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0);
    (mean, Some((var / s).sqrt()))
}

/// `tr_n(M^k)` for `k = 0..=order`, from powers up to `⌈order/2⌉`.
fn power_traces(m: &Split, order: usize) -> Vec<C64> {
    let half = order.div_ceil(2).max(1);
    let mut powers = vec![m.clone()];
    for _ in 1..half {
        powers.push(powers.last().expect("non-empty").mul(m));
    }
    (0..=order)
        .map(|k| match k {
            0 => C64::new(1.0, 0.0),
            1 => m.trace(),
            _ => powers[k.div_ceil(2) - 1].trace_of_product(&powers[k / 2 - 1]),
        })
        .collect()
}

/// Averaged normalized traces with Monte Carlo standard errors.
///
/// GUE families report `tr_n(X^k)` (the first matrix of a pair) against the
/// semicircle moments; the Ginibre family reports `tr_n((Y*Y)^k)` against the
/// Catalan numbers.
pub fn mc_moments(spec: &EnsembleSpec, order: usize) -> Result<MomentEstimates> {
    if order > MAX_MC_ORDER {
        return Err(Error::UnsupportedOrder { order, max: MAX_MC_ORDER });
    }
    let mut per_k: Vec<Vec<f64>> = vec![Vec::with_capacity(spec.samples); order + 1];
    for s in 0..spec.samples {
        let mats = ensemble_sample(spec, s);
        let m = Split::from_complex(&mats[0]);
        let base = match spec.family {
            Family::ComplexGinibre => m.adjoint().mul(&m),
            _ => m,
        };
        for (k, t) in power_traces(&base, order).into_iter().enumerate() {
            per_k[k].push(t.re);
        }
    }
    let rows = per_k
        .iter()
        .enumerate()
        .map(|(k, vals)| {
            let (estimate, stderr) = mean_and_stderr(vals);
            let target = match spec.family {
                Family::ComplexGinibre => catalan_number(k),
                _ => {
                    if k % 2 == 0 {
                        catalan_number(k / 2)
                    } else {
                        0.0
                    }
                }
            };
            MomentRow { k, estimate, stderr, target }
        })
        .collect();
    let statistic = match spec.family {
        Family::ComplexGinibre => "tr_n((Y*Y)^k)",
        _ => "tr_n(X^k)",
    };
    Ok(MomentEstimates { spec: *spec, statistic: statistic.into(), rows })
}

/// A word over `{X, Y}` split into maximal runs `(family, power)`.
pub fn word_slots(word: &str) -> Result<Vec<(usize, usize)>> {
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for ch in word.chars() {
        let f = match ch {
            'X' => 0,
            'Y' => 1,
            c if c.is_whitespace() => continue,
            c => return Err(Error::Parse { pos: 0, msg: format!("unexpected {c:?} in matrix word {word:?}") }),
        };
        match slots.last_mut() {
            Some((g, p)) if *g == f => *p += 1,
            _ => slots.push((f, 1)),
        }
    }
    let len: usize = slots.iter().map(|s| s.1).sum();
    if len == 0 || len > MAX_MC_WORD_LEN {
        return Err(Error::InvalidArgument(format!("matrix word length must be in 1..={MAX_MC_WORD_LEN}, got {len}")));
    }
    Ok(slots)
}

/// `tr_n` of the product of centered slots `X^p − tr_n(X^p)`.
fn centered_word_trace(x: &Split, y: &Split, slots: &[(usize, usize)]) -> C64 {
    let slot = |(f, p): (usize, usize)| {
        let m = if f == 0 { x } else { y };
        let mut acc = m.clone();
        for _ in 1..p {
            acc = acc.mul(m);
        }
        acc.centered()
    };
    let mut acc = slot(slots[0]);
    for &s in &slots[1..slots.len() - 1] {
        acc = acc.mul(&slot(s));
    }
    acc.trace_of_product(&slot(slots[slots.len() - 1]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandEntry {
    pub word: String,
    /// Band constant: the allowed `|mean|` is `c / √n`.
    pub c: f64,
}

/// Pilot-calibrated bands for one reference `(n, samples)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandFixture {
    pub n: usize,
    pub samples: usize,
    pub pilot_seed: u64,
    pub stderrs: f64,
    pub bands: Vec<BandEntry>,
}

impl BandFixture {
    /// The fixture shipped with the crate.
    pub fn builtin() -> Result<Self> {
        Ok(serde_json::from_str(BAND_FIXTURE)?)
    }

    /// Band on `|mean|` for `word` at `(n, samples)`; the constant is rescaled
    /// by `√(samples_ref / samples)` away from the reference sample count.
    pub fn band(&self, word: &str, n: usize, samples: usize) -> Option<f64> {
        let e = self.bands.iter().find(|b| b.word == word)?;
        Some(e.c * (self.samples as f64 / samples as f64).sqrt() / (n as f64).sqrt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordEstimate {
    pub word: String,
    pub applicable: bool,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub band: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixFreenessReport {
    pub spec: EnsembleSpec,
    pub words: Vec<WordEstimate>,
    pub pass: bool,
}

fn word_means(spec: &EnsembleSpec, words: &[String]) -> Result<Vec<Option<(f64, Option<f64>)>>> {
    if spec.family != Family::GuePair {
        return Err(Error::InvalidArgument("freeness check needs the gue_pair family".into()));
    }
    let parsed = words.iter().map(|w| word_slots(w)).collect::<Result<Vec<_>>>()?;
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(spec.samples); words.len()];
    for s in 0..spec.samples {
        let mats = ensemble_sample(spec, s);
        let (x, y) = (Split::from_complex(&mats[0]), Split::from_complex(&mats[1]));
        for (slots, vals) in parsed.iter().zip(values.iter_mut()) {
            if slots.len() >= 2 {
                vals.push(centered_word_trace(&x, &y, slots).re);
            }
        }
    }
    Ok(values.iter().map(|v| (!v.is_empty()).then(|| mean_and_stderr(v))).collect())
}

/// Averages centered alternating trace words of an independent GUE pair and
/// compares each `|mean|` with its calibrated band. Words with a single slot
/// are reported as inapplicable.
pub fn asymptotic_freeness_check(spec: &EnsembleSpec, words: &[String], bands: &BandFixture) -> Result<MatrixFreenessReport> {
    let means = word_means(spec, words)?;
    let mut all = true;
    let words = words
        .iter()
        .zip(means)
        .map(|(w, m)| {
            let Some((mean, stderr)) = m else {
                return WordEstimate { word: w.clone(), applicable: false, mean: None, stderr: None, band: None, pass: None };
            };
            let band = bands.band(w, spec.n, spec.samples);
            let pass = band.map(|b| mean.abs() <= b);
            all &= pass == Some(true);
            WordEstimate { word: w.clone(), applicable: true, mean: Some(mean), stderr, band, pass }
        })
        .collect();
    Ok(MatrixFreenessReport { spec: *spec, words, pass: all })
}

/// Pilot run: `c = BAND_STDERRS · √n · stderr` per applicable word.
pub fn calibrate_bands(spec: &EnsembleSpec, words: &[String]) -> Result<BandFixture> {
    let means = word_means(spec, words)?;
    let bands = words
        .iter()
        .zip(means)
        .filter_map(|(w, m)| {
            let se = m?.1?;
            Some(BandEntry { word: w.clone(), c: BAND_STDERRS * (spec.n as f64).sqrt() * se })
        })
        .collect();
    Ok(BandFixture { n: spec.n, samples: spec.samples, pilot_seed: spec.seed, stderrs: BAND_STDERRS, bands })
}
