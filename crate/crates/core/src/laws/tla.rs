use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::Histogram;

/// Singular values at or below this are treated as kernel.
pub const SVD_KERNEL_TOL: f64 = 1e-10;
/// Largest `k`, `l` in the moment table.
pub const TLA_ORDER: usize = 3;
pub const MIN_TLA_DEPTH: usize = 4;
const B_BINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TlaReport {
    pub lambda: f64,
    pub depth: usize,
    /// `table[k][l] = |φ(vᵏ v*ˡ) − δ_kl λᵏ|`.
    pub table: Vec<Vec<f64>>,
    /// `φ(vᵏ v*ᵏ)` for `k = 0..=3`.
    pub diagonal_moments: Vec<f64>,
    /// Spectral distribution of `b = |y|` in the vacuum state.
    pub b_distribution: Histogram,
    /// Largest `‖v*v − P‖` over the charge blocks, `P` the support projection.
    pub isometry_defect: f64,
    /// `1 − φ(v*v)`.
    pub vacuum_isometry_defect: f64,
    /// `φ(1 − vv*)`, which tends to `1 − λ`.
    pub coisometry_defect: f64,
}

impl TlaReport {
    pub fn to_csv(&self) -> String {
        defect_csv(std::slice::from_ref(self))
    }
}

/// Words over `{1, 2}` of length at most `depth` whose charge `#1 − #2` is `q`,
/// in lexicographic order within each length.
fn sector(depth: usize, q: i64) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    for n in 0..=depth {
        for w in &layer {
            let c: i64 = w.iter().map(|&a| if a == 1 { 1 } else { -1 }).sum();
            if c == q {
                out.push(w.clone());
            }
        }
        if n < depth {
            layer = layer
                .iter()
                .flat_map(|w| {
                    [1u8, 2u8].into_iter().map(move |a| {
                        let mut w = w.clone();
                        w.push(a);
                        w
                    })
                })
                .filter(|w| {
                    // Prune words whose charge can no longer reach q.
                    let c: i64 = w.iter().map(|&a| if a == 1 { 1 } else { -1 }).sum();
                    (c - q).unsigned_abs() as usize <= depth - w.len()
                })
                .collect();
        }
    }
    out
}

/// Block of `y = ℓ(e₁) + √λ ℓ(e₂)*` from charge `q` to charge `q + 1`, with `y`
/// taken as the exact map from words of length `< depth` into words of length
/// `≤ depth`. Top-length columns are zero.
fn y_block(lambda: f64, depth: usize, from: &[Vec<u8>], to: &[Vec<u8>]) -> DMatrix<f64> {
    let index: HashMap<&[u8], usize> = to.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
    let mut y = DMatrix::zeros(to.len(), from.len());
    let s = lambda.sqrt();
    for (j, w) in from.iter().enumerate() {
        if w.len() >= depth {
            continue;
        }
        let mut up = Vec::with_capacity(w.len() + 1);
            up.push(1u8);
            up.extend_from_slice(w);
        y[(index[up.as_slice()], j)] += 1.0;
        if w.first() == Some(&2) {
            y[(index[&w[1..]], j)] += s;
        }
    }
    y
}

struct PolarBlock {
    v: DMatrix<f64>,
    defect: f64,
}

fn polar_block(y: DMatrix<f64>) -> Result<(PolarBlock, Vec<f64>, DMatrix<f64>)> {
    let svd = y.try_svd(true, true, f64::EPSILON, 0).ok_or_else(|| Error::Decomposition("SVD did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Decomposition("missing U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Decomposition("missing Vᵀ".into()))?;
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > SVD_KERNEL_TOL).collect();
    let u_s = u.select_columns(&keep);
    let vt_s = vt.select_rows(&keep);
    let v = &u_s * &vt_s;
    let p = vt_s.transpose() * &vt_s;
    let defect = (v.transpose() * &v - p).amax();
    let sv = keep.iter().map(|&i| svd.singular_values[i]).collect();
    Ok((PolarBlock { v, defect }, sv, vt_s))
}

/// Truncated polar decomposition of the generalized circular element at `depth`.
///
/// `y` changes the charge `#e₁ − #e₂` by one, so `v` and `b` are computed block
/// by block from the real SVD of each charge block. `y` is cut on its domain
/// only, so `b²` is the compression of `y*y` to words of length `< depth`.
pub fn polar_tla(lambda: f64, depth: usize) -> Result<TlaReport> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if depth < MIN_TLA_DEPTH {
        return Err(Error::InvalidArgument(format!("depth must be at least {MIN_TLA_DEPTH}, got {depth}")));
    }
    let k = TLA_ORDER as i64;
    let sectors: HashMap<i64, Vec<Vec<u8>>> = (-k..=1).map(|q| (q, sector(depth, q))).collect();

    // Charge 0 block: vacuum isometry and the distribution of b.
    let y0 = y_block(lambda, depth, &sectors[&0], &sectors[&1]);
    let (p0, sv0, vt0) = polar_block(y0)?;
    let weights: Vec<f64> = (0..sv0.len()).map(|i| vt0[(i, 0)] * vt0[(i, 0)]).collect();
    let supported: f64 = weights.iter().sum();
    let mut samples: Vec<(f64, f64)> = sv0.iter().copied().zip(weights).collect();
    if 1.0 - supported > SVD_KERNEL_TOL {
        samples.push((0.0, 1.0 - supported));
    }
    let b_distribution = Histogram::from_weighted(&samples, B_BINS);
    let vacuum_isometry_defect = 1.0 - p0.v.column(0).norm_squared();
    let mut isometry_defect = p0.defect;

    // v*ᵏ Ω walks down through the negative charges.
    let mut x = DMatrix::<f64>::zeros(sectors[&0].len(), 1);
    x[(0, 0)] = 1.0;
    let mut diagonal_moments = vec![1.0];
    for q in (-k..0).rev() {
        let y = y_block(lambda, depth, &sectors[&q], &sectors[&(q + 1)]);
        let (p, _, _) = polar_block(y)?;
        isometry_defect = isometry_defect.max(p.defect);
        x = p.v.transpose() * x;
        diagonal_moments.push(x.norm_squared());
    }

    let table = (0..=TLA_ORDER)
        .map(|a| {
            (0..=TLA_ORDER)
                .map(|b| if a == b { (diagonal_moments[a] - lambda.powi(a as i32)).abs() } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(TlaReport {
        lambda,
        depth,
        table,
        coisometry_defect: 1.0 - diagonal_moments[1],
        diagonal_moments,
        b_distribution,
        isometry_defect,
        vacuum_isometry_defect,
    })
}

/// Runs [`polar_tla`] for each depth, in order.
pub fn tla_sweep(lambda: f64, depths: impl IntoIterator<Item = usize>) -> Result<Vec<TlaReport>> {
    depths.into_iter().map(|d| polar_tla(lambda, d)).collect()
}

/// Defect tables as CSV with header `k,l,depth,defect`.
pub fn defect_csv(reports: &[TlaReport]) -> String {
    let mut out = String::from("k,l,depth,defect\n");
    for r in reports {
        for (k, row) in r.table.iter().enumerate() {
            for (l, d) in row.iter().enumerate() {
                out.push_str(&format!("{k},{l},{},{d:e}\n", r.depth));
            }
        }
    }
    out
}

/// Rounding slack allowed when comparing defects across depths.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Entries `(k, l, depth)` where the defect grew by more than
/// [`MONOTONE_SLACK`] from one depth to the next.
pub fn monotonicity_violations(reports: &[TlaReport]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for pair in reports.windows(2) {
        for k in 0..=TLA_ORDER {
            for l in 0..=TLA_ORDER {
                if pair[1].table[k][l] > pair[0].table[k][l] + MONOTONE_SLACK {
                    out.push((k, l, pair[1].depth));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_sizes_match_ballot_counts() {
        // Words of length n with charge q number C(n, (n+q)/2).
        for q in -3..=1i64 {
            let expected: usize = (0..=8usize)
                .filter(|n| (*n as i64 + q) % 2 == 0 && (q.unsigned_abs() as usize) <= *n)
                .map(|n| num_integer::binomial(n, (n as i64 + q) as usize / 2))
                .sum();
            assert_eq!(sector(8, q).len(), expected, "q={q}");
        }
        assert_eq!(sector(12, 0).len(), 1275);
    }

    #[test]
    fn y_block_matches_fock_operator() {
        use crate::fock::{build_fock, FockOperator};
        use crate::C64;
        let (lambda, depth) = (0.3f64, 5);
        let space = build_fock(2, depth).unwrap();
        let e1 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let e2 = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let y = &FockOperator::creation(&space, &e1, false).unwrap()
            + &FockOperator::creation(&space, &e2, true).unwrap().scale(C64::new(lambda.sqrt(), 0.0));
        let from = sector(depth, -1);
        let to = sector(depth, 0);
        let block = y_block(lambda, depth, &from, &to);
        let idx = |w: &Vec<u8>| space.index(&w.iter().map(|&a| a as usize - 1).collect::<Vec<_>>()).unwrap();
        for (j, wf) in from.iter().enumerate() {
            for (i, wt) in to.iter().enumerate() {
                let expected = if wf.len() < depth { y.get(idx(wt), idx(wf)).re } else { 0.0 };
                assert!((expected - block[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn trivial_and_off_diagonal_entries() {
        let r = polar_tla(0.5, 6).unwrap();
        assert_eq!(r.table[0][0], 0.0);
        assert_eq!(r.table[2][1], 0.0);
        assert!(r.isometry_defect < 1e-10);
        assert!(r.table.iter().flatten().all(|&d| d >= 0.0));
        assert!((r.b_distribution.counts.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vv_star_defect_shrinks_with_depth() {
        let r = tla_sweep(0.5, [6, 10]).unwrap();
        assert!(r[1].table[1][1] < r[0].table[1][1]);
        let csv = defect_csv(&r);
        assert!(csv.starts_with("k,l,depth,defect\n"));
        assert_eq!(csv.lines().count(), 1 + 2 * 16);
    }

    #[test]
    fn diagonal_moments_approach_powers_of_lambda() {
        let r = tla_sweep(0.5, 6..=10).unwrap();
        assert!(monotonicity_violations(&r).is_empty());
        let last = &r[4];
        for k in 1..=3 {
            assert!(last.table[k][k] < r[0].table[k][k]);
            assert!(last.table[k][k] < 0.02, "k={k}: {}", last.table[k][k]);
        }
        assert!(last.vacuum_isometry_defect.abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(polar_tla(1.0, 6).is_err());
        assert!(polar_tla(0.5, 3).is_err());
    }
}
