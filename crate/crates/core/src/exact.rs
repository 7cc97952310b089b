// SPDX-License-Identifier: Apache-2.0

//! Closed-form evolution through the influence functional
//!
//! ```text
//! rho_nm(t) = rho_nm(0) e^{-i (n - m) w t} F_nm(t),
//! F_nm(t)   = e^{i G(t) (n^2 - m^2)} e^{-Gamma(t) (n - m)^2}.
//! ```
//!
//! Populations are constants of motion; coherences dephase while `gamma > 0`
//! and rephase while it is negative.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::bath::BathSpec;
use crate::fock::{DensityMatrix, FockSpace};
use crate::{Error, Result};

/// Resonator of frequency `omega` on a truncated space, coupled to `bath`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub omega: f64,
    pub space: FockSpace,
    pub bath: BathSpec,
}

impl SystemSpec {
    pub fn new(omega: f64, space: FockSpace, bath: BathSpec) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::param("system.omega", format!("must be positive, got {omega}")));
        }
        Ok(SystemSpec { omega, space, bath })
    }

    pub fn period(&self) -> f64 {
        self.bath.period()
    }

    /// `E_n = n omega`.
    pub fn energy(&self, n: usize) -> f64 {
        n as f64 * self.omega
    }
}

/// Phase and decay shared by every element at time `t`.
#[derive(Debug, Clone, Copy)]
struct Dephasing {
    free: f64,
    big_g: f64,
    big_gamma: f64,
}

impl Dephasing {
    fn at(sys: &SystemSpec, t: f64) -> Self {
        Dephasing {
            free: sys.omega * t,
            big_g: sys.bath.integral_g(t),
            big_gamma: sys.bath.integral_gamma(t),
        }
    }

    fn influence(&self, n: usize, m: usize) -> C64 {
        if n == m {
            return C64::new(1.0, 0.0);
        }
        let (nf, mf) = (n as f64, m as f64);
        let d = nf - mf;
        C64::from_polar((-self.big_gamma * d * d).exp(), self.big_g * (nf * nf - mf * mf))
    }

    /// Influence functional times the free rotation `e^{-i (n-m) w t}`.
    fn propagator(&self, n: usize, m: usize) -> C64 {
        if n == m {
            return C64::new(1.0, 0.0);
        }
        let (nf, mf) = (n as f64, m as f64);
        let d = nf - mf;
        C64::from_polar(
            (-self.big_gamma * d * d).exp(),
            self.big_g * (nf * nf - mf * mf) - d * self.free,
        )
    }
}

/// `F_nm(t)`.
pub fn influence_functional(sys: &SystemSpec, n: usize, m: usize, t: f64) -> Result<C64> {
    let dim = sys.space.dim();
    for level in [n, m] {
        if level >= dim {
            return Err(Error::LevelOutOfRange { level, dim });
        }
    }
    Ok(Dephasing::at(sys, t).influence(n, m))
}

/// Exact reduced state at time `t`, applied elementwise to any initial
/// density matrix.
pub fn evolve_exact(rho0: &DensityMatrix, sys: &SystemSpec, t: f64) -> Result<DensityMatrix> {
    let dim = sys.space.dim();
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho0.dim(),
        });
    }
    let deph = Dephasing::at(sys, t);
    let r0 = rho0.elements();
    let out = Array2::from_shape_fn((dim, dim), |(n, m)| r0[[n, m]] * deph.propagator(n, m));
    Ok(DensityMatrix::from_elements_unchecked(out))
}

/// `|det Phi(t)|` of the exact map: `exp(-Gamma(t) sum_{n,m} (n-m)^2)`.
pub fn exact_volume(sys: &SystemSpec, t: f64) -> f64 {
    let n = sys.space.dim() as f64;
    let sum_sq = n * n * (n * n - 1.0) / 6.0;
    (-sys.bath.integral_gamma(t) * sum_sq).exp()
}

/// `R(t) = Tr[rho(t) rho(0)]`.
pub fn return_probability(rho_t: &DensityMatrix, rho_0: &DensityMatrix) -> Result<f64> {
    if rho_t.dim() != rho_0.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho_0.dim(),
            found: rho_t.dim(),
        });
    }
    let a = rho_t.elements();
    let b = rho_0.elements();
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[[i, j]] * b[[j, i]];
        }
    }
    Ok(acc.re)
}

/// `1 - Tr rho^2`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - crate::fock::purity(rho)
}

/// `<n^2>` from the populations.
pub fn n2_expectation(rho: &DensityMatrix) -> f64 {
    rho.elements()
        .diag()
        .iter()
        .enumerate()
        .map(|(n, p)| (n * n) as f64 * p.re)
        .sum()
}

/// `<n>` from the populations.
pub fn n_expectation(rho: &DensityMatrix) -> f64 {
    rho.elements()
        .diag()
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p.re)
        .sum()
}
