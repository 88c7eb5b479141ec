//! Small dense matrices over Q_p.

use crate::error::{Error, Result};
use crate::padic::PadicNumber;

pub type Matrix = Vec<Vec<PadicNumber>>;

pub fn identity(p: u64, n: usize, prec: i64) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { PadicNumber::one(p, prec) } else { PadicNumber::exact_zero(p) }).collect())
        .collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let p = a[0][0].prime();
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = PadicNumber::exact_zero(p);
                    for l in 0..k {
                        acc = &acc + &(&a[i][l] * &b[l][j]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &Matrix, v: &[PadicNumber]) -> Vec<PadicNumber> {
    let p = v[0].prime();
    a.iter()
        .map(|row| {
            let mut acc = PadicNumber::exact_zero(p);
            for (x, y) in row.iter().zip(v) {
                acc = &acc + &(x * y);
            }
            acc
        })
        .collect()
}

pub fn transpose(a: &Matrix) -> Matrix {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Solves A·x = b by Gaussian elimination, pivoting on the entry of least valuation.
pub fn solve(a: &Matrix, b: &[PadicNumber]) -> Result<Vec<PadicNumber>> {
    let n = a.len();
    let mut m: Matrix = a.iter().zip(b).map(|(r, bi)| {
        let mut r = r.clone();
        r.push(bi.clone());
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| !m[r][col].is_zero())
            .min_by_key(|&r| m[r][col].valuation())
            .ok_or_else(|| Error::Singular(format!("no pivot in column {col}")))?;
        m.swap(piv, col);
        let inv = m[col][col].inverse()?;
        for c in col..=n {
            m[col][c] = &m[col][c] * &inv;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() && m[r][col].absprec() >= crate::padic::EXACT {
                continue;
            }
            let f = m[r][col].clone();
            for c in col..=n {
                let t = &f * &m[col][c];
                m[r][c] = &m[r][c] - &t;
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n].clone()).collect())
}

/// Characteristic polynomial det(x·I - A), constant term first, by Faddeev–LeVerrier.
/// Requires the dimension to be smaller than p.
pub fn charpoly(a: &Matrix) -> Vec<PadicNumber> {
    let n = a.len();
    let p = a[0][0].prime();
    assert!((n as u64) < p, "Faddeev-LeVerrier divides by the dimension");
    let mut c = vec![PadicNumber::exact_zero(p); n + 1];
    let prec = a.iter().flatten().map(|x| x.absprec()).filter(|&x| x < crate::padic::EXACT).max().unwrap_or(1) + 2;
    c[n] = PadicNumber::one(p, prec);
    let id = identity(p, n, prec);
    let mut mk: Matrix = vec![vec![PadicNumber::exact_zero(p); n]; n];
    for k in 1..=n {
        let am = mat_mul(a, &mk);
        mk = am
            .iter()
            .zip(&id)
            .map(|(r, ir)| r.iter().zip(ir).map(|(x, e)| x + &(e * &c[n + 1 - k])).collect())
            .collect();
        let amk = mat_mul(a, &mk);
        let mut tr = PadicNumber::exact_zero(p);
        for (i, row) in amk.iter().enumerate() {
            tr = &tr + &row[i];
        }
        c[n - k] = (-tr).div_int(k as i64);
    }
    c
}

pub fn det(a: &Matrix) -> PadicNumber {
    let c = charpoly(a);
    if a.len() % 2 == 0 {
        c[0].clone()
    } else {
        -c[0].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: u64, rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|&x| PadicNumber::from_i64(p, x, 20)).collect()).collect()
    }

    #[test]
    fn charpoly_of_small_matrix() {
        let a = m(7, &[&[1, 2], &[3, 4]]);
        let c = charpoly(&a);
        assert_eq!(c[0].to_signed_bigint(20).unwrap(), (-2).into());
        assert_eq!(c[1].to_signed_bigint(20).unwrap(), (-5).into());
        assert_eq!(det(&a).to_signed_bigint(20).unwrap(), (-2).into());
    }

    #[test]
    fn solve_recovers_vector() {
        let a = m(7, &[&[7, 1, 0], &[2, 3, 1], &[0, 14, 5]]);
        let x: Vec<PadicNumber> = [1, -2, 3].iter().map(|&v| PadicNumber::from_i64(7, v, 20)).collect();
        let b = mat_vec(&a, &x);
        let y = solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).valuation() >= 18);
        }
    }
}
