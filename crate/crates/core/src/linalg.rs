// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra: determinants, matrix exponentials and a
//! general eigenvalue solver (Householder Hessenberg reduction followed by
//! single-shift QR).

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Determinant kept as log-magnitude and phase, so that products over many
/// factors neither overflow nor underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub phase: f64,
}

impl LogDet {
    pub const ONE: LogDet = LogDet {
        log_abs: 0.0,
        phase: 0.0,
    };

    pub fn from_value(z: C64) -> Self {
        LogDet {
            log_abs: z.norm().ln(),
            phase: z.arg(),
        }
    }

    pub fn abs(&self) -> f64 {
        self.log_abs.exp()
    }

    pub fn value(&self) -> C64 {
        C64::from_polar(self.log_abs.exp(), self.phase)
    }

    pub fn mul(self, other: LogDet) -> LogDet {
        LogDet {
            log_abs: self.log_abs + other.log_abs,
            phase: wrap_phase(self.phase + other.phase),
        }
    }
}

/// Reduce an angle to (-pi, pi].
pub fn wrap_phase(phi: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = phi.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Determinant by LU decomposition with partial pivoting.
pub fn log_det(a: ArrayView2<C64>) -> LogDet {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "determinant of a non-square matrix");
    let mut lu = a.to_owned();
    let mut acc = LogDet::ONE;
    for k in 0..n {
        let (piv, piv_abs) = (k..n)
            .map(|i| (i, lu[[i, k]].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs == 0.0 {
            return LogDet {
                log_abs: f64::NEG_INFINITY,
                phase: 0.0,
            };
        }
        if piv != k {
            for j in 0..n {
                lu.swap([k, j], [piv, j]);
            }
            acc.phase = wrap_phase(acc.phase + std::f64::consts::PI);
        }
        let pivot = lu[[k, k]];
        acc = acc.mul(LogDet::from_value(pivot));
        for i in k + 1..n {
            let f = lu[[i, k]] / pivot;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k + 1..n {
                let u = lu[[k, j]];
                lu[[i, j]] -= f * u;
            }
        }
    }
    acc
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

fn norm1(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "exponential of a non-square matrix");
    if n == 1 {
        return Array2::from_elem((1, 1), a[[0, 0]].exp());
    }
    let norm = norm1(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * C64::new(0.5f64.powi(squarings), 0.0);
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=30 {
        term = term.dot(&scaled) * C64::new(1.0 / k as f64, 0.0);
        result += &term;
        if norm1(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

pub fn is_diagonal(a: ArrayView2<C64>, tol: f64) -> bool {
    a.indexed_iter()
        .all(|((i, j), z)| i == j || z.norm() <= tol)
}

/// Unitary reduction to upper Hessenberg form by Householder reflections.
/// The similarity transform is not accumulated.
pub fn hessenberg(a: ArrayView2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let mut h = a.to_owned();
    if n < 3 {
        return h;
    }
    for k in 0..n - 2 {
        let norm_x = (k + 1..n).map(|i| h[[i, k]].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let x0 = h[[k + 1, k]];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * norm_x;
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[[i, k]]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2 v v^H) H
        for j in 0..n {
            let s: C64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| vr.conj() * h[[k + 1 + r, j]])
                .sum();
            for (r, vr) in v.iter().enumerate() {
                h[[k + 1 + r, j]] -= 2.0 * vr * s;
            }
        }
        // H <- H (I - 2 v v^H)
        for i in 0..n {
            let s: C64 = v
                .iter()
                .enumerate()
                .map(|(c, vc)| h[[i, k + 1 + c]] * vc)
                .sum();
            for (c, vc) in v.iter().enumerate() {
                h[[i, k + 1 + c]] -= 2.0 * s * vc.conj();
            }
        }
        for i in k + 2..n {
            h[[i, k]] = C64::new(0.0, 0.0);
        }
    }
    h
}

/// Givens rotation `[c s; -conj(s) c]` zeroing `b` against `a`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let n = (an * an + b.norm_sqr()).sqrt();
    if n == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    (an / n, (a / an) * b.conj() / n)
}

/// Eigenvalue of the 2x2 block `[a b; c d]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr_half = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powu(2) + b * c;
    let root = disc.sqrt();
    let l1 = tr_half + root;
    let l2 = tr_half - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// All eigenvalues of a general complex square matrix.
pub fn eigenvalues(a: ArrayView2<C64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigenvalues of a non-square matrix");
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(a);
    let mut eig = vec![C64::new(0.0, 0.0); n];
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let max_iter = 60 * n.max(10);
    let mut total_iter = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    loop {
        if hi == 0 {
            eig[0] = h[[0, 0]];
            break;
        }
        // locate the start of the unreduced trailing block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[[lo, lo - 1]].norm();
            let diag = h[[lo, lo]].norm() + h[[lo - 1, lo - 1]].norm();
            let tol = f64::EPSILON * if diag > 0.0 { diag } else { scale };
            if sub <= tol {
                h[[lo, lo - 1]] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[[hi, hi]];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total_iter += 1;
        since_deflation += 1;
        if total_iter > max_iter {
            return Err(Error::EigensolveFailure {
                dim: n,
                iterations: total_iter,
            });
        }
        let mu = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            h[[hi, hi]] + C64::new(h[[hi, hi - 1]].norm() * 0.75, h[[hi, hi - 1]].norm() * 0.5)
        } else {
            wilkinson_shift(
                h[[hi - 1, hi - 1]],
                h[[hi - 1, hi]],
                h[[hi, hi - 1]],
                h[[hi, hi]],
            )
        };
        for i in lo..=hi {
            h[[i, i]] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[[k, k]], h[[k + 1, k]]);
            for j in k..=hi {
                let x = h[[k, j]];
                let y = h[[k + 1, j]];
                h[[k, j]] = c * x + s * y;
                h[[k + 1, j]] = -s.conj() * x + c * y;
            }
            rots.push((c, s));
        }
        for (off, &(c, s)) in rots.iter().enumerate() {
            let k = lo + off;
            let last = (k + 2).min(hi);
            for i in lo..=last {
                let x = h[[i, k]];
                let y = h[[i, k + 1]];
                h[[i, k]] = x * c + y * s.conj();
                h[[i, k + 1]] = -x * s + y * c;
            }
        }
        for i in lo..=hi {
            h[[i, i]] += mu;
        }
    }
    Ok(eig)
}
