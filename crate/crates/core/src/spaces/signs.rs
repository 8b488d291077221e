//! Exhaustive maximization of an even function of `Σ xᵢ rᵢ` over sign
//! vectors `x ∈ {±1}^k`.
//!
//! The first sign is pinned to `+1` (the objective is even), leaving
//! `2^(k-1)` patterns. Patterns are split into fixed-size chunks walked in
//! Gray-code order, so each step is one vector update. The winner of every
//! chunk is re-evaluated from scratch and the chunk maxima are reduced with
//! ties broken by pattern index; the answer does not depend on how chunks
//! are scheduled across threads.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par;

const CHUNK_BITS: u32 = 12;

#[derive(Debug, Clone)]
pub(crate) struct SignMax {
    pub value: f64,
    pub signs: Vec<f64>,
    /// `Σ xᵢ rᵢ` at the maximizing signs.
    pub image: Vec<f64>,
}

pub(crate) fn check_limit(k: usize, limit: usize) -> Result<()> {
    if k > limit || k > 62 {
        Err(Error::EnumLimitExceeded { dims: k, limit })
    } else {
        Ok(())
    }
}

fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

fn signs_of(k: usize, pattern: u64) -> Vec<f64> {
    (0..k)
        .map(|j| {
            if j > 0 && (pattern >> (j - 1)) & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

fn combine(rows: &[Vec<f64>], signs: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (row, s) in rows.iter().zip(signs) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += s * r;
        }
    }
}

/// Maximizes `objective(Σ xᵢ · rows[i])` over sign vectors.
pub(crate) fn max_over_signs<F>(rows: &DMatrix<f64>, limit: usize, objective: F) -> Result<SignMax>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let k = rows.nrows();
    let p = rows.ncols();
    check_limit(k, limit)?;
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|i| rows.row(i).iter().copied().collect())
        .collect();
    let total: u64 = 1 << (k - 1);
    let chunk: u64 = total.min(1 << CHUNK_BITS);
    let n_chunks = (total / chunk) as usize;

    let per_chunk = par::map_indexed(n_chunks, |c| {
        let start = c as u64 * chunk;
        let mut signs = signs_of(k, gray(start));
        let mut y = vec![0.0; p];
        combine(&rows, &signs, &mut y);
        let mut best = (objective(&y), start);
        for t in 1..chunk {
            let i = start + t;
            let j = i.trailing_zeros() as usize + 1;
            signs[j] = -signs[j];
            let s2 = 2.0 * signs[j];
            for (o, r) in y.iter_mut().zip(&rows[j]) {
                *o += s2 * r;
            }
            let v = objective(&y);
            if v > best.0 {
                best = (v, i);
            }
        }
        // drop the accumulated rounding of the incremental walk
        let signs = signs_of(k, gray(best.1));
        combine(&rows, &signs, &mut y);
        (objective(&y), (best.1, signs, y))
    });

    let (value, (_, signs, image)) =
        par::argmax_first(per_chunk).expect("at least one sign pattern");
    Ok(SignMax {
        value,
        signs,
        image,
    })
}
