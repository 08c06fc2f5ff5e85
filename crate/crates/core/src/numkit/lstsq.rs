//! Dense complex least squares with Tikhonov regularization.
//!
//! The regularized problem `min ‖Ac − b‖² + λ²‖c‖²` is solved as the
//! ordinary least-squares problem for the stacked matrix `[A; λI]` with a
//! column-pivoted Householder QR factorization.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{config, Error, Result};

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Builds a matrix column by column; `f(j)` must return `rows` entries.
    pub fn from_columns(rows: usize, cols: usize, f: impl Fn(usize) -> Vec<C64> + Sync) -> Result<Self> {
        let columns: Vec<Vec<C64>> = (0..cols).into_par_iter().map(&f).collect();
        let mut data = Vec::with_capacity(rows * cols);
        for (j, c) in columns.into_iter().enumerate() {
            if c.len() != rows {
                return config(format!("column {j} has {} entries, expected {rows}", c.len()));
            }
            data.extend(c);
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return config("ragged rows");
        }
        Ok(CMatrix {
            rows: m,
            cols: n,
            data: (0..n).flat_map(|j| rows.iter().map(move |r| r[j])).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[j * self.rows + i]
    }

    pub fn column(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.column(j)) {
                *o += a * xj;
            }
        }
        out
    }

    /// Largest column 2-norm, a cheap lower bound for the spectral norm.
    pub fn max_column_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| norm(self.column(j)))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: Vec<C64>,
    /// `‖Ax − b‖` evaluated directly.
    pub residual_norm: f64,
    /// `|R_11| / |R_nn|` of the pivoted factorization of the stacked matrix.
    pub condition_estimate: f64,
    pub lambda: f64,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `min ‖Ac − b‖² + λ²‖c‖²`.
pub fn lstsq_tikhonov(a: &CMatrix, b: &[C64], lambda: f64) -> Result<LstsqSolution> {
    let (m, n) = (a.rows, a.cols);
    if b.len() != m {
        return config(format!("right-hand side has {} entries, matrix has {m} rows", b.len()));
    }
    if m < n {
        return config(format!("underdetermined system: {m} rows < {n} columns"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return config(format!("Tikhonov parameter must be finite and non-negative, got {lambda}"));
    }
    if a.data.iter().chain(b).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return config("non-finite matrix or right-hand-side entry");
    }
    let x = solve_stacked(a, b, lambda)?;
    let ax = a.mul_vec(&x.0);
    let residual_norm = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(LstsqSolution {
        x: x.0,
        residual_norm,
        condition_estimate: x.1,
        lambda,
    })
}

fn solve_stacked(a: &CMatrix, b: &[C64], lambda: f64) -> Result<(Vec<C64>, f64)> {
    let (m, n) = (a.rows, a.cols);
    let zero = C64::new(0.0, 0.0);
    let rows = if lambda > 0.0 { m + n } else { m };
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut c = Vec::with_capacity(rows);
            c.extend_from_slice(a.column(j));
            if lambda > 0.0 {
                c.extend((0..n).map(|i| if i == j { C64::new(lambda, 0.0) } else { zero }));
            }
            c
        })
        .collect();
    let mut rhs: Vec<C64> = b.to_vec();
    rhs.resize(rows, zero);

    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms2: Vec<f64> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect();
    let mut ref_norms2 = norms2.clone();
    let mut diag = vec![zero; n];

    for k in 0..n {
        // pivot: remaining column with the largest trailing norm
        let p = (k..n)
            .max_by(|&i, &j| norms2[i].total_cmp(&norms2[j]))
            .expect("non-empty range");
        if p != k {
            cols.swap(k, p);
            perm.swap(k, p);
            norms2.swap(k, p);
            ref_norms2.swap(k, p);
        }
        let (head, tail) = cols.split_at_mut(k + 1);
        let ck = &mut head[k];
        let xnorm = ck[k..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            diag[k] = zero;
            continue;
        }
        let x0 = ck[k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        // v = x - alpha e1 stored in place; vᴴv = 2‖x‖(‖x‖ + |x0|)
        ck[k] = x0 - alpha;
        let vnorm2 = 2.0 * xnorm * (xnorm + x0.norm());
        let v: &[C64] = &ck[k..];
        let reflect = |c: &mut [C64]| {
            let dot: C64 = v.iter().zip(&c[k..]).map(|(vi, ci)| vi.conj() * ci).sum();
            let s = dot * (2.0 / vnorm2);
            for (ci, vi) in c[k..].iter_mut().zip(v) {
                *ci -= vi * s;
            }
        };
        if tail.len() * (rows - k) > 200_000 {
            tail.par_iter_mut().for_each(|c| reflect(c));
        } else {
            tail.iter_mut().for_each(|c| reflect(c));
        }
        reflect(&mut rhs);
        diag[k] = alpha;
        for (j, c) in tail.iter().enumerate() {
            let jj = k + 1 + j;
            norms2[jj] -= c[k].norm_sqr();
            if norms2[jj] < 1e-10 * ref_norms2[jj] {
                norms2[jj] = c[k + 1..].iter().map(|z| z.norm_sqr()).sum();
                ref_norms2[jj] = norms2[jj];
            }
        }
    }

    let dmax = diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let dmin = diag.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
    let cond = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };

    // back substitution; negligible pivots give a basic solution
    let tiny = dmax * f64::EPSILON * (rows as f64);
    let mut y = vec![zero; n];
    for k in (0..n).rev() {
        if diag[k].norm() <= tiny {
            continue;
        }
        let mut s = rhs[k];
        for (j, yj) in y.iter().enumerate().skip(k + 1) {
            s -= cols[j][k] * yj;
        }
        y[k] = s / diag[k];
    }
    let mut x = vec![zero; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = y[k];
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Accuracy("least-squares solution is not finite".into()));
    }
    Ok((x, cond))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn small_system() -> (CMatrix, Vec<C64>) {
        let a = CMatrix::from_rows(&[
            vec![c(1.0, 0.5), c(2.0, 0.0), c(0.0, -1.0)],
            vec![c(0.3, 0.0), c(-1.0, 1.0), c(2.0, 0.0)],
            vec![c(1.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 2.0), c(1.0, -0.5), c(0.5, 0.5)],
        ])
        .unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0), c(0.5, 0.5)];
        (a, b)
    }

    #[test]
    fn identity_returns_rhs() {
        let n = 5;
        let a = CMatrix::from_columns(n, n, |j| {
            (0..n).map(|i| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()
        })
        .unwrap();
        let b: Vec<C64> = (0..n).map(|i| c(i as f64, -(i as f64) / 2.0)).collect();
        let s = lstsq_tikhonov(&a, &b, 0.0).unwrap();
        for (x, y) in s.x.iter().zip(&b) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn consistent_overdetermined_duplicate_rows() {
        let base = [vec![c(2.0, 1.0), c(0.0, 1.0)], vec![c(1.0, 0.0), c(-1.0, 3.0)]];
        let rows: Vec<Vec<C64>> = base.iter().cycle().take(6).cloned().collect();
        let a = CMatrix::from_rows(&rows).unwrap();
        let x_true = vec![c(0.5, -2.0), c(1.5, 0.25)];
        let b = a.mul_vec(&x_true);
        let s = lstsq_tikhonov(&a, &b, 0.0).unwrap();
        assert!(s.residual_norm < 1e-13);
        for (x, y) in s.x.iter().zip(&x_true) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn penalty_dominance_shrinks_solution() {
        let (a, b) = small_system();
        let mut last = f64::INFINITY;
        for &lam in &[0.0, 1e-2, 1.0, 1e2, 1e4, 1e6] {
            let s = lstsq_tikhonov(&a, &b, lam).unwrap();
            let nx = norm(&s.x);
            assert!(nx < last, "lambda={lam}");
            last = nx;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        // Independent route: solve (AᴴA + λ²I) x = Aᴴb by Gaussian elimination.
        let (a, b) = small_system();
        let lam = 0.3;
        let n = a.cols();
        let mut g = vec![vec![c(0.0, 0.0); n + 1]; n];
        for i in 0..n {
            for j in 0..n {
                g[i][j] = a.column(i).iter().zip(a.column(j)).map(|(p, q)| p.conj() * q).sum();
            }
            g[i][i] += lam * lam;
            g[i][n] = a.column(i).iter().zip(&b).map(|(p, q)| p.conj() * q).sum();
        }
        for k in 0..n {
            for i in k + 1..n {
                let f = g[i][k] / g[k][k];
                for j in k..=n {
                    let t = g[k][j];
                    g[i][j] -= f * t;
                }
            }
        }
        let mut x = vec![c(0.0, 0.0); n];
        for k in (0..n).rev() {
            let mut s = g[k][n];
            for j in k + 1..n {
                s -= g[k][j] * x[j];
            }
            x[k] = s / g[k][k];
        }
        let s = lstsq_tikhonov(&a, &b, lam).unwrap();
        for (p, q) in s.x.iter().zip(&x) {
            assert!((p - q).norm() < 1e-12 * q.norm().max(1.0));
        }
    }

    #[test]
    fn square_full_rank_reproduces_direct_solve() {
        let n = 12;
        let a = CMatrix::from_columns(n, n, |j| {
            (0..n)
                .map(|i| {
                    let t = (i * 7 + j * 3) as f64;
                    c((0.37 * t).sin() + if i == j { 3.0 } else { 0.0 }, (0.11 * t).cos())
                })
                .collect()
        })
        .unwrap();
        let x_true: Vec<C64> = (0..n).map(|i| c(1.0 / (i + 1) as f64, i as f64 * 0.1)).collect();
        let b = a.mul_vec(&x_true);
        let s = lstsq_tikhonov(&a, &b, 0.0).unwrap();
        for (p, q) in s.x.iter().zip(&x_true) {
            assert!((p - q).norm() <= 1e-10 * q.norm().max(1e-3));
        }
        assert!(s.condition_estimate >= 1.0);
    }

    #[test]
    fn dimension_errors() {
        let (a, _) = small_system();
        assert!(lstsq_tikhonov(&a, &[c(1.0, 0.0)], 0.0).is_err());
        let wide = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)]]).unwrap();
        assert!(lstsq_tikhonov(&wide, &[c(1.0, 0.0)], 0.0).is_err());
        let (a, b) = small_system();
        assert!(lstsq_tikhonov(&a, &b, -1.0).is_err());
    }

    #[test]
    fn deterministic() {
        let (a, b) = small_system();
        let s1 = lstsq_tikhonov(&a, &b, 1e-3).unwrap();
        let s2 = lstsq_tikhonov(&a, &b, 1e-3).unwrap();
        assert_eq!(s1.x, s2.x);
    }
}
