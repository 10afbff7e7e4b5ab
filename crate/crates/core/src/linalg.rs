//! Dense complex linear algebra used by the spectral and response code.
//!
//! The eigensolver is the classical pipeline: diagonal balancing, Householder
//! reduction to upper Hessenberg form, single-shift complex QR iteration to a
//! triangular Schur form, then eigenvectors by back substitution.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// QR sweeps allowed per matrix dimension.
pub const SWEEPS_PER_DIM: usize = 30;

#[inline]
fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

pub fn norm2(v: ArrayView1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum.
pub fn norm1(a: &Array2<Complex64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn matvec(a: &Array2<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    a.rows()
        .into_iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Array2<Complex64>,
    perm: Vec<usize>,
    singular: bool,
}

impl Lu {
    pub fn factor(a: &Array2<Complex64>) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[[i, k]].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.swap([p, j], [k, j]);
                }
            }
            let pivot = lu[[k, k]];
            for i in k + 1..n {
                let factor = lu[[i, k]] / pivot;
                lu[[i, k]] = factor;
                if factor != ZERO {
                    for j in k + 1..n {
                        let u = lu[[k, j]];
                        lu[[i, j]] -= factor * u;
                    }
                }
            }
        }
        Self { lu, perm, singular }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.singular {
            return Err(Error::SingularMatrix { rcond: 0.0 });
        }
        let n = self.lu.nrows();
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s / self.lu[[i, i]];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Array2<Complex64>> {
        let n = self.lu.nrows();
        let mut inv = Array2::zeros((n, n));
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e[j] = ONE;
            let col = self.solve(&e)?;
            e[j] = ZERO;
            for (i, v) in col.into_iter().enumerate() {
                inv[[i, j]] = v;
            }
        }
        Ok(inv)
    }
}

/// 1-norm condition number; infinite for singular matrices.
pub fn condition_1(a: &Array2<Complex64>) -> f64 {
    let lu = Lu::factor(a);
    match lu.inverse() {
        Ok(inv) => {
            let c = norm1(a) * norm1(&inv);
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Eigenvalues with unit-norm right eigenvectors stored column-wise.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub vectors: Array2<Complex64>,
}

/// Full eigendecomposition of a general complex matrix.
///
/// Eigenvalues come out sorted by real part, then imaginary part. Each
/// eigenvector is normalized to unit 2-norm with its largest component made
/// real and positive.
pub fn eig(a: &Array2<Complex64>) -> Result<EigenDecomposition> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eig needs a square matrix");
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            vectors: Array2::zeros((0, 0)),
        });
    }

    let mut h = a.clone();
    let scale = balance(&mut h);
    let mut z = hessenberg(&mut h);
    schur(&mut h, &mut z)?;
    let y = triangular_eigenvectors(&h);

    // back-transform: x = D Z y
    let mut vectors = z.dot(&y);
    for (i, mut row) in vectors.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|v| v * scale[i]);
    }
    for mut col in vectors.columns_mut() {
        normalize_with_phase(&mut col);
    }

    let values: Vec<Complex64> = (0..n).map(|k| h[[k, k]]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| compare_eigenvalues(values[i], values[j]));

    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let mut sorted_vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        sorted_vectors.column_mut(dst).assign(&vectors.column(src));
    }
    Ok(EigenDecomposition {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

pub fn compare_eigenvalues(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn normalize_with_phase(col: &mut ndarray::ArrayViewMut1<Complex64>) {
    let norm = norm2(col.view());
    if norm == 0.0 || !norm.is_finite() {
        return;
    }
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, v) in col.iter().enumerate() {
        let m = v.norm();
        if m > best_abs {
            best_abs = m;
            best = i;
        }
    }
    let phase = col[best].conj() / col[best].norm();
    col.mapv_inplace(|v| v * phase / norm);
    col[best] = Complex64::new(col[best].re, 0.0);
}

/// Radix-2 diagonal balancing. Overwrites `a` with `D^-1 A D` and returns `D`.
fn balance(a: &mut Array2<Complex64>) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    const LIMIT: f64 = 1e150;
    let n = a.nrows();
    let mut d = vec![1.0; n];
    for _sweep in 0..200 {
        let mut changed = false;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += cabs1(a[[j, i]]);
                    r += cabs1(a[[i, j]]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g && f < LIMIT {
                f *= RADIX;
                c *= RADIX;
                r /= RADIX;
                g /= RADIX;
            }
            g = c / RADIX;
            while g >= r && f > 1.0 / LIMIT {
                f /= RADIX;
                c /= RADIX;
                g /= RADIX;
                r *= RADIX;
            }
            if c + r >= 0.95 * s {
                continue;
            }
            d[i] *= f;
            changed = true;
            for j in 0..n {
                a[[i, j]] /= f;
                a[[j, i]] *= f;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Householder reduction to upper Hessenberg form. Overwrites `a` with
/// `Q^H A Q` and returns `Q`.
fn hessenberg(a: &mut Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    let mut q = Array2::<Complex64>::eye(n);
    if n < 3 {
        return q;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let m = n - k - 1;
        let tail: f64 = (k + 2..n).map(|i| a[[i, k]].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = a[[k + 1, k]];
        let xnorm = (tail + x0.norm_sqr()).sqrt();
        let phase = if x0.norm() == 0.0 {
            ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        for i in 0..m {
            v[i] = a[[k + 1 + i, k]];
        }
        v[0] -= alpha;
        let vnorm = v[..m].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for vi in v[..m].iter_mut() {
            *vi /= vnorm;
        }
        // rows k+1.. : A <- (I - 2 v v^H) A
        for j in 0..n {
            let s: Complex64 = (0..m).map(|i| v[i].conj() * a[[k + 1 + i, j]]).sum();
            if s != ZERO {
                for i in 0..m {
                    a[[k + 1 + i, j]] -= 2.0 * v[i] * s;
                }
            }
        }
        // columns k+1.. : A <- A (I - 2 v v^H), same for Q
        for mat in [&mut *a, &mut q] {
            for i in 0..n {
                let s: Complex64 = (0..m).map(|j| mat[[i, k + 1 + j]] * v[j]).sum();
                if s != ZERO {
                    for j in 0..m {
                        mat[[i, k + 1 + j]] -= 2.0 * s * v[j].conj();
                    }
                }
            }
        }
        a[[k + 1, k]] = alpha;
        for i in k + 2..n {
            a[[i, k]] = ZERO;
        }
    }
    q
}

/// Rotation `(c, s)` with `[c s; -conj(s) c] [x; y] = [r; 0]`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64, Complex64) {
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO, x);
    }
    let ax = x.norm();
    if ax == 0.0 {
        let s = y.conj() / ay;
        return (0.0, s, Complex64::new(ay, 0.0));
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let phase = x / ax;
    let s = phase * y.conj() / r;
    (c, s, phase * r)
}

/// Complex single-shift QR iteration on an upper Hessenberg matrix, producing
/// the full triangular Schur form and accumulating the unitary factor in `z`.
fn schur(h: &mut Array2<Complex64>, z: &mut Array2<Complex64>) -> Result<()> {
    let n = h.nrows();
    let eps = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / eps);
    let budget = SWEEPS_PER_DIM * n.max(1);
    let mut total = 0usize;
    let mut ihi = n - 1;

    while ihi > 0 {
        let mut its = 0usize;
        loop {
            // locate a negligible subdiagonal entry
            let mut l = ihi;
            while l > 0 {
                let sub = cabs1(h[[l, l - 1]]);
                if sub <= smlnum {
                    break;
                }
                let mut tst = cabs1(h[[l - 1, l - 1]]) + cabs1(h[[l, l]]);
                if tst == 0.0 {
                    if l >= 2 {
                        tst += h[[l - 1, l - 2]].re.abs();
                    }
                    if l < ihi {
                        tst += h[[l + 1, l]].re.abs();
                    }
                }
                if sub <= eps * tst {
                    let up = cabs1(h[[l - 1, l]]);
                    let ab = sub.max(up);
                    let ba = sub.min(up);
                    let d1 = cabs1(h[[l, l]]);
                    let d2 = cabs1(h[[l - 1, l - 1]] - h[[l, l]]);
                    let aa = d1.max(d2);
                    let bb = d1.min(d2);
                    let s = aa + ab;
                    if ba * (ab / s) <= smlnum.max(eps * (bb * (aa / s))) {
                        break;
                    }
                }
                l -= 1;
            }
            if l > 0 {
                h[[l, l - 1]] = ZERO;
            }
            if l == ihi {
                break;
            }

            total += 1;
            if total > budget {
                return Err(Error::NoConvergence {
                    dim: n,
                    iterations: total - 1,
                });
            }

            let shift = if its == 10 {
                Complex64::new(0.75 * h[[l + 1, l]].re.abs(), 0.0) + h[[l, l]]
            } else if its == 20 {
                Complex64::new(0.75 * h[[ihi, ihi - 1]].re.abs(), 0.0) + h[[ihi, ihi]]
            } else {
                wilkinson_shift(
                    h[[ihi - 1, ihi - 1]],
                    h[[ihi - 1, ihi]],
                    h[[ihi, ihi - 1]],
                    h[[ihi, ihi]],
                )
            };

            for k in l..ihi {
                let (x, y) = if k == l {
                    (h[[l, l]] - shift, h[[l + 1, l]])
                } else {
                    (h[[k, k - 1]], h[[k + 1, k - 1]])
                };
                let (c, s, _) = givens(x, y);
                let first = if k == l { k } else { k - 1 };
                for j in first..n {
                    let u = h[[k, j]];
                    let w = h[[k + 1, j]];
                    h[[k, j]] = c * u + s * w;
                    h[[k + 1, j]] = -s.conj() * u + c * w;
                }
                if k > l {
                    h[[k + 1, k - 1]] = ZERO;
                }
                let last = (k + 2).min(ihi);
                for i in 0..=last {
                    let u = h[[i, k]];
                    let w = h[[i, k + 1]];
                    h[[i, k]] = c * u + s.conj() * w;
                    h[[i, k + 1]] = -s * u + c * w;
                }
                for i in 0..n {
                    let u = z[[i, k]];
                    let w = z[[i, k + 1]];
                    z[[i, k]] = c * u + s.conj() * w;
                    z[[i, k + 1]] = -s * u + c * w;
                }
            }
            its += 1;
        }
        ihi -= 1;
    }
    // clear the strictly lower triangle left over from deflation
    for i in 1..n {
        for j in 0..i {
            h[[i, j]] = ZERO;
        }
    }
    Ok(())
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let e1 = mid + disc;
    let e2 = mid - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Right eigenvectors of an upper triangular matrix, column `k` for `t[k, k]`.
fn triangular_eigenvectors(t: &Array2<Complex64>) -> Array2<Complex64> {
    let n = t.nrows();
    let tnorm = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE * 1e10);
    let mut y = Array2::<Complex64>::zeros((n, n));
    let mut work = vec![ZERO; n];
    for k in 0..n {
        let lambda = t[[k, k]];
        work[..=k].fill(ZERO);
        work[k] = ONE;
        for i in (0..k).rev() {
            let s: Complex64 = (i + 1..=k).map(|j| t[[i, j]] * work[j]).sum();
            let mut denom = t[[i, i]] - lambda;
            if denom.norm() < smin {
                denom = Complex64::new(smin, 0.0);
            }
            work[i] = -s / denom;
            let m = work[i].norm();
            if m > 1e100 {
                for w in work[i..=k].iter_mut() {
                    *w /= m;
                }
            }
        }
        for i in 0..=k {
            y[[i, k]] = work[i];
        }
    }
    y
}

/// All eigenvalues of a real symmetric tridiagonal matrix by Sturm-sequence
/// bisection, ascending.
pub fn symmetric_tridiagonal_eigenvalues(diagonal: &[f64], off_diagonal: &[f64]) -> Vec<f64> {
    let n = diagonal.len();
    assert_eq!(off_diagonal.len(), n.saturating_sub(1));
    if n == 0 {
        return Vec::new();
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 {
            off_diagonal[i - 1].abs()
        } else {
            0.0
        } + if i + 1 < n {
            off_diagonal[i].abs()
        } else {
            0.0
        };
        lo = lo.min(diagonal[i] - radius);
        hi = hi.max(diagonal[i] + radius);
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * span + f64::MIN_POSITIVE;
    hi += 1e-12 * span + f64::MIN_POSITIVE;
    let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * span * 1e-3);

    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = diagonal[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let e = off_diagonal[i - 1];
            q = diagonal[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };

    (0..n)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if count_below(mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn residual(a: &Array2<Complex64>, d: &EigenDecomposition) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &lambda) in d.values.iter().enumerate() {
            let v: Vec<Complex64> = d.vectors.column(k).to_vec();
            let av = matvec(a, &v);
            let r: f64 = av
                .iter()
                .zip(&v)
                .map(|(x, y)| (x - lambda * y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    #[test]
    fn one_by_one() {
        let a = Array2::from_elem((1, 1), c(2.5, -1.0));
        let d = eig(&a).unwrap();
        assert_eq!(d.values, vec![c(2.5, -1.0)]);
        assert_eq!(d.vectors[[0, 0]], c(1.0, 0.0));
    }

    #[test]
    fn rotation_generator_has_imaginary_pair() {
        let a = ndarray::arr2(&[[c(0.0, 0.0), c(-1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
        let d = eig(&a).unwrap();
        assert!((d.values[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((d.values[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(residual(&a, &d) < 1e-14);
    }

    #[test]
    fn dense_random_matrix_residuals() {
        // deterministic pseudo-random fill
        let n = 12;
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = Array2::from_shape_fn((n, n), |_| c(next(), next()));
        let d = eig(&a).unwrap();
        assert!(residual(&a, &d) < 1e-12 * frobenius(&a));
        // trace is preserved
        let tr: Complex64 = (0..n).map(|i| a[[i, i]]).sum();
        let sum: Complex64 = d.values.iter().sum();
        assert!((tr - sum).norm() < 1e-12);
        for k in 0..n {
            assert!((norm2(d.vectors.column(k)) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn upper_triangular_input_keeps_diagonal() {
        let a = ndarray::arr2(&[
            [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)],
            [c(0.0, 0.0), c(-1.0, 1.0), c(4.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(5.0, 0.0)],
        ]);
        let d = eig(&a).unwrap();
        let expected = [c(-1.0, 1.0), c(1.0, 0.0), c(5.0, 0.0)];
        for (x, y) in d.values.iter().zip(expected) {
            assert!((x - y).norm() < 1e-14);
        }
        assert!(residual(&a, &d) < 1e-13);
    }

    #[test]
    fn lu_solves_and_inverts() {
        let a = ndarray::arr2(&[
            [c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)],
            [c(1.0, -1.0), c(0.0, 0.0), c(3.0, 0.0)],
            [c(2.0, 0.0), c(1.0, 0.0), c(0.0, 2.0)],
        ]);
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(-2.0, 0.5)];
        let lu = Lu::factor(&a);
        let x = lu.solve(&b).unwrap();
        let ax = matvec(&a, &x);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).norm() < 1e-14);
        }
        let inv = lu.inverse().unwrap();
        let id = a.dot(&inv);
        for ((i, j), v) in id.indexed_iter() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((v - c(e, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_reports_infinite_condition() {
        let a = ndarray::arr2(&[[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]]);
        assert!(Lu::factor(&a).is_singular() || condition_1(&a) > 1e15);
        let z = Array2::<Complex64>::zeros((3, 3));
        assert_eq!(condition_1(&z), f64::INFINITY);
    }

    #[test]
    fn bisection_matches_closed_form_chain() {
        // uniform chain: E_k = 2 t cos(k pi / (n + 1))
        let n = 9;
        let t = 0.7;
        let got = symmetric_tridiagonal_eigenvalues(&vec![0.0; n], &vec![t; n - 1]);
        let mut want: Vec<f64> = (1..=n)
            .map(|k| 2.0 * t * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-13, "{g} vs {w}");
        }
    }
}
