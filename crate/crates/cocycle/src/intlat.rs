//! Integer linear systems by diagonalization with unimodular row and column
//! operations (Smith-style reduction, without the divisibility chain).
//!
//! Circle-valued cohomology classes differ from their real-logarithm classes
//! by the `2 pi Z` lattice; deciding class equality reduces to the
//! solvability of `D m = k` over the integers for an integer differential
//! matrix `D`. Sizes here are desk scale, so a direct reduction suffices.

use crate::error::{Error, Result};

fn checked_mul(a: i64, b: i64) -> Result<i64> {
    a.checked_mul(b).ok_or(Error::LatticeOverflow)
}

fn checked_sub(a: i64, b: i64) -> Result<i64> {
    a.checked_sub(b).ok_or(Error::LatticeOverflow)
}

/// Solves `D m = k` over the integers. Returns `None` when no integer
/// solution exists.
pub(crate) fn solve(d: &[Vec<i64>], k: &[i64]) -> Result<Option<Vec<i64>>> {
    let rows = d.len();
    let cols = if rows == 0 { 0 } else { d[0].len() };
    if k.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "integer system: {rows} rows, {} right-hand entries",
            k.len()
        )));
    }
    if cols == 0 {
        return Ok(if k.iter().all(|&x| x == 0) {
            Some(Vec::new())
        } else {
            None
        });
    }
    let mut s: Vec<Vec<i64>> = d.to_vec();
    let mut b: Vec<i64> = k.to_vec();
    // Column operations accumulate in v, so that m = v y.
    let mut v: Vec<Vec<i64>> = (0..cols)
        .map(|i| (0..cols).map(|j| i64::from(i == j)).collect())
        .collect();

    let mut t = 0;
    let bound = rows.min(cols);
    while t < bound {
        // Pivot: smallest nonzero entry in the trailing block.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if s[i][j] != 0
                    && pivot.map_or(true, |(pi, pj)| s[i][j].abs() < s[pi][pj].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        s.swap(t, pi);
        b.swap(t, pi);
        if pj != t {
            for row in s.iter_mut() {
                row.swap(t, pj);
            }
            for row in v.iter_mut() {
                row.swap(t, pj);
            }
        }

        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if s[i][t] != 0 {
                    let q = s[i][t].div_euclid(s[t][t]);
                    if q != 0 {
                        for j in t..cols {
                            s[i][j] = checked_sub(s[i][j], checked_mul(q, s[t][j])?)?;
                        }
                        b[i] = checked_sub(b[i], checked_mul(q, b[t])?)?;
                    }
                    if s[i][t] != 0 {
                        s.swap(t, i);
                        b.swap(t, i);
                        clean = false;
                    }
                }
            }
            for j in t + 1..cols {
                if s[t][j] != 0 {
                    let q = s[t][j].div_euclid(s[t][t]);
                    if q != 0 {
                        for i in 0..rows {
                            s[i][j] = checked_sub(s[i][j], checked_mul(q, s[i][t])?)?;
                        }
                        for r in 0..cols {
                            v[r][j] = checked_sub(v[r][j], checked_mul(q, v[r][t])?)?;
                        }
                    }
                    if s[t][j] != 0 {
                        for row in s.iter_mut() {
                            row.swap(t, j);
                        }
                        for row in v.iter_mut() {
                            row.swap(t, j);
                        }
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        t += 1;
    }
    let rank = t;

    let mut y = vec![0i64; cols];
    for idx in 0..rank {
        let pivot = s[idx][idx];
        if b[idx] % pivot != 0 {
            return Ok(None);
        }
        y[idx] = b[idx] / pivot;
    }
    for idx in rank..rows {
        if b[idx] != 0 {
            return Ok(None);
        }
    }
    let mut m = vec![0i64; cols];
    for (i, row) in v.iter().enumerate() {
        let mut acc = 0i64;
        for (j, &vij) in row.iter().enumerate() {
            acc = acc
                .checked_add(checked_mul(vij, y[j])?)
                .ok_or(Error::LatticeOverflow)?;
        }
        m[i] = acc;
    }
    debug_assert!(
        d.iter()
            .zip(k.iter())
            .all(|(row, &ki)| row.iter().zip(m.iter()).map(|(&a, &x)| a * x).sum::<i64>() == ki),
        "integer solve verification failed"
    );
    Ok(Some(m))
}
