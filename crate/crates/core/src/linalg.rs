//! Small fixed-size helpers and a dense complex LU log-determinant.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type Mat2 = Matrix2<f64>;
pub type CMat2 = Matrix2<Complex64>;
pub type CMat4 = Matrix4<Complex64>;

pub fn complexify2(m: &Mat2) -> CMat2 {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Square root of a symmetric positive semi-definite 2×2 matrix.
///
/// Uses √S = (S + √det S · I)/√(tr S + 2√det S). Returns zero for S = 0.
pub fn sqrt_spd2(s: &Mat2) -> Mat2 {
    let det = (s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)]).max(0.0);
    let sd = det.sqrt();
    let t = s.trace() + 2.0 * sd;
    if t <= 0.0 {
        return Mat2::zeros();
    }
    (s + Mat2::identity() * sd) / t.sqrt()
}

pub fn frob_c4(m: &CMat4) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense square complex matrix stored as separate real and imaginary planes, row-major.
#[derive(Clone, Debug)]
pub struct CMatrix {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, re: vec![0.0; n * n], im: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.re[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let k = i * self.n + j;
        Complex64::new(self.re[k], self.im[k])
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        let k = i * self.n + j;
        self.re[k] = z.re;
        self.im[k] = z.im;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn add_identity(&mut self) {
        for i in 0..self.n {
            self.re[i * self.n + i] += 1.0;
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|v| v * v).sum::<f64>().sqrt()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        let n = self.n;
        for j in 0..n {
            self.re.swap(a * n + j, b * n + j);
            self.im.swap(a * n + j, b * n + j);
        }
    }
}

/// Determinant in logarithmic form: det = exp(log_abs + i·arg).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub arg: f64,
}

impl LogDet {
    pub fn value(&self) -> Complex64 {
        if self.log_abs == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_abs.exp(), self.arg)
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

type AxpyFn = fn(&mut [f64], &mut [f64], &[f64], &[f64], f64, f64);

// y -= l * x on split complex slices
#[inline(always)]
fn caxpy_body(yr: &mut [f64], yi: &mut [f64], xr: &[f64], xi: &[f64], lr: f64, li: f64) {
    let m = yr.len();
    let (yi, xr, xi) = (&mut yi[..m], &xr[..m], &xi[..m]);
    for j in 0..m {
        let (a, b) = (xr[j], xi[j]);
        yr[j] -= lr * a - li * b;
        yi[j] -= lr * b + li * a;
    }
}

fn caxpy_generic(yr: &mut [f64], yi: &mut [f64], xr: &[f64], xi: &[f64], lr: f64, li: f64) {
    caxpy_body(yr, yi, xr, xi, lr, li)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn caxpy_avx2_inner(yr: &mut [f64], yi: &mut [f64], xr: &[f64], xi: &[f64], lr: f64, li: f64) {
    caxpy_body(yr, yi, xr, xi, lr, li)
}

#[cfg(target_arch = "x86_64")]
fn caxpy_avx2(yr: &mut [f64], yi: &mut [f64], xr: &[f64], xi: &[f64], lr: f64, li: f64) {
    // SAFETY: only selected after runtime detection of avx2
    unsafe { caxpy_avx2_inner(yr, yi, xr, xi, lr, li) }
}

fn select_axpy() -> AxpyFn {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx2") {
            return caxpy_avx2;
        }
    }
    caxpy_generic
}

const BLOCK: usize = 48;
const COL_TILE: usize = 256;

/// log|det A| and arg det A by blocked right-looking LU with partial pivoting.
///
/// Consumes the matrix (it is overwritten by the factors). An exactly zero pivot
/// column yields `log_abs = -inf`.
pub fn log_det(mut a: CMatrix) -> LogDet {
    let n = a.n;
    let axpy = select_axpy();
    let mut log_abs = 0.0;
    let mut arg = 0.0;

    let mut kb = 0;
    while kb < n {
        let e = (kb + BLOCK).min(n);

        // panel factorization, columns kb..e
        for k in kb..e {
            let mut p = k;
            let mut best = -1.0;
            for i in k..n {
                let v = a.get(i, k).norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return LogDet { log_abs: f64::NEG_INFINITY, arg: 0.0 };
            }
            if p != k {
                a.swap_rows(p, k);
                arg += PI;
            }
            let piv = a.get(k, k);
            log_abs += piv.norm().ln();
            arg += piv.arg();
            let inv = piv.inv();
            for i in k + 1..n {
                let l = a.get(i, k) * inv;
                a.set(i, k, l);
                if l.re == 0.0 && l.im == 0.0 {
                    continue;
                }
                for j in k + 1..e {
                    let v = a.get(i, j) - l * a.get(k, j);
                    a.set(i, j, v);
                }
            }
        }
        if e == n {
            break;
        }

        // U12 = L11^{-1} A12
        for k in kb..e {
            for i in k + 1..e {
                let l = a.get(i, k);
                let (top, bot) = split_rows(&mut a, k, i);
                axpy(&mut bot.0[e..], &mut bot.1[e..], &top.0[e..], &top.1[e..], l.re, l.im);
            }
        }

        // trailing update A22 -= L21 U12, tiled over columns
        let mut jc = e;
        while jc < n {
            let je = (jc + COL_TILE).min(n);
            for i in e..n {
                for k in kb..e {
                    let l = a.get(i, k);
                    if l.re == 0.0 && l.im == 0.0 {
                        continue;
                    }
                    let (top, bot) = split_rows(&mut a, k, i);
                    axpy(&mut bot.0[jc..je], &mut bot.1[jc..je], &top.0[jc..je], &top.1[jc..je], l.re, l.im);
                }
            }
            jc = je;
        }
        kb = e;
    }
    LogDet { log_abs, arg: wrap_angle(arg) }
}

type RowRef<'a> = (&'a [f64], &'a [f64]);
type RowMut<'a> = (&'a mut [f64], &'a mut [f64]);

// row k (read) and row i (write), k < i
fn split_rows(a: &mut CMatrix, k: usize, i: usize) -> (RowRef<'_>, RowMut<'_>) {
    debug_assert!(k < i);
    let n = a.n;
    let (re_lo, re_hi) = a.re.split_at_mut(i * n);
    let (im_lo, im_hi) = a.im.split_at_mut(i * n);
    (
        (&re_lo[k * n..(k + 1) * n], &im_lo[k * n..(k + 1) * n]),
        (&mut re_hi[..n], &mut im_hi[..n]),
    )
}
