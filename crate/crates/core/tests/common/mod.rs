//! Independent dense oracles shared by the integration tests.
#![allow(dead_code)]

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &v)| r.iter().copied().chain([v]).collect())
        .collect();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(1e-300);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))?;
        if m[p][k].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..=n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (m[k][n] - s) / m[k][k];
    }
    Some(x)
}

/// Independent rows of `[A | b]` by elimination; `None` if `Ax = b` is
/// inconsistent.
fn independent_rows(a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = a.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &v)| r.iter().copied().chain([v]).collect())
        .collect();
    let scale = a.iter().flatten().fold(1.0f64, |s, v| s.max(v.abs()));
    let mut pivot_row = 0;
    for col in 0..n {
        let Some(p) = (pivot_row..rows.len())
            .max_by(|&i, &j| rows[i][col].abs().total_cmp(&rows[j][col].abs()))
        else {
            break;
        };
        if rows[p][col].abs() <= 1e-10 * scale {
            continue;
        }
        rows.swap(pivot_row, p);
        for i in pivot_row + 1..rows.len() {
            let f = rows[i][col] / rows[pivot_row][col];
            for j in col..=n {
                rows[i][j] -= f * rows[pivot_row][j];
            }
        }
        pivot_row += 1;
    }
    let rhs_scale = 1.0 + b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if rows[pivot_row..]
        .iter()
        .any(|r| r[n].abs() > 1e-9 * rhs_scale * scale)
    {
        return None;
    }
    let a_red = rows[..pivot_row].iter().map(|r| r[..n].to_vec()).collect();
    let b_red = rows[..pivot_row].iter().map(|r| r[n]).collect();
    Some((a_red, b_red))
}

/// Minimum of `cᵀx` over `Ax = b, x ≥ 0` by enumerating basic solutions.
///
/// `None` if infeasible. The caller guarantees boundedness.
pub fn vertex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    let (ar, br) = independent_rows(a, b)?;
    let r = br.len();
    if r == 0 {
        return Some((0.0, vec![0.0; n]));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset: Vec<usize> = (0..r).collect();
    loop {
        let sq: Vec<Vec<f64>> = ar
            .iter()
            .map(|row| subset.iter().map(|&j| row[j]).collect())
            .collect();
        if let Some(xb) = dense_solve(&sq, &br) {
            let tol = 1e-9 * (1.0 + xb.iter().fold(0.0f64, |s, v| s.max(v.abs())));
            if xb.iter().all(|&v| v >= -tol) {
                let mut x = vec![0.0; n];
                for (&j, &v) in subset.iter().zip(&xb) {
                    x[j] = v.max(0.0);
                }
                let val: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
                if best.as_ref().is_none_or(|(b, _)| val < *b) {
                    best = Some((val, x));
                }
            }
        }
        // Next r-subset of 0..n in lexicographic order.
        let mut i = r;
        while i > 0 && subset[i - 1] == n - r + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        subset[i - 1] += 1;
        for k in i..r {
            subset[k] = subset[k - 1] + 1;
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn matvec_t(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = a.first().map_or(0, Vec::len);
    (0..n)
        .map(|j| a.iter().zip(y).map(|(r, v)| r[j] * v).sum())
        .collect()
}
