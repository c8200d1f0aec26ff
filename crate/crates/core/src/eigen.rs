//! Spectra of small Hermitian matrices.
//!
//! A Hermitian `H = A + iB` is embedded as the real symmetric
//! `[[A, -B], [B, A]]`, whose spectrum is that of `H` with every eigenvalue
//! doubled; an eigenvector `(x, y)` of the embedding gives `x + iy` for `H`.
//! The real matrix is reduced by Householder tridiagonalization and then
//! diagonalized with the implicit QL iteration.

use num_complex::Complex64;

pub type CMatrix = Vec<Vec<Complex64>>;

/// Max `|H_jk - conj(H_kj)|`.
pub fn hermitian_defect(h: &CMatrix) -> f64 {
    let n = h.len();
    let mut d: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            d = d.max((h[j][k] - h[k][j].conj()).norm());
        }
    }
    d
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending, eigenvectors of
/// unit norm.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

fn tql2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> bool {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 64 {
                    return false;
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    true
}

/// Real symmetric eigendecomposition; eigenvalues ascending, eigenvectors as
/// columns of the returned matrix.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    if n == 0 {
        return Some((vec![], vec![]));
    }
    let mut v: Vec<Vec<f64>> = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    if !tql2(&mut v, &mut d, &mut e) {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&k| v[r][k]).collect()).collect();
    Some((values, vectors))
}

/// Eigendecomposition of a Hermitian matrix (the lower triangle is used).
pub fn hermitian_eigen(h: &CMatrix) -> Option<HermitianEigen> {
    let n = h.len();
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for j in 0..n {
        for k in 0..n {
            // Symmetrize explicitly so tiny defects do not leak into the
            // real embedding.
            let z = (h[j][k] + h[k][j].conj()) * 0.5;
            big[j][k] = z.re;
            big[j + n][k + n] = z.re;
            big[j][k + n] = -z.im;
            big[j + n][k] = z.im;
        }
    }
    let (vals, vecs) = symmetric_eigen(&big)?;
    // Eigenvalues come in pairs; keep one of each pair.
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for idx in (0..2 * n).step_by(2) {
        let z: Vec<Complex64> = (0..n).map(|r| Complex64::new(vecs[r][idx], vecs[r + n][idx])).collect();
        let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        values.push(vals[idx]);
        vectors.push(z.into_iter().map(|c| c / norm).collect());
    }
    Some(HermitianEigen { values, vectors })
}

/// `z* H z`.
pub fn quadratic_form(h: &CMatrix, z: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, row) in h.iter().enumerate() {
        for (k, hjk) in row.iter().enumerate() {
            acc += z[j].conj() * hjk * z[k];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn all_ones_spectrum() {
        let h = vec![vec![c(1.0, 0.0); 3]; 3];
        let e = hermitian_eigen(&h).unwrap();
        assert!((e.values[2] - 3.0).abs() < 1e-12);
        assert!(e.values[0].abs() < 1e-12 && e.values[1].abs() < 1e-12);
    }

    #[test]
    fn diagonal_negative_witness() {
        let h = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]];
        let e = hermitian_eigen(&h).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.vectors[0][1].norm() - 1.0).abs() < 1e-14);
        assert!(e.vectors[0][0].norm() < 1e-14);
    }

    #[test]
    fn complex_hermitian_pair() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let h = vec![vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]];
        let e = hermitian_eigen(&h).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-13);
        assert!((e.values[1] - 3.0).abs() < 1e-13);
        for (lam, v) in e.values.iter().zip(&e.vectors) {
            assert!((quadratic_form(&h, v).re - lam).abs() < 1e-12);
        }
    }

    #[test]
    fn defect() {
        let h = vec![vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]];
        assert!((hermitian_defect(&h) - 2.0).abs() < 1e-15);
    }
}
