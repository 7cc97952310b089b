// SPDX-License-Identifier: Apache-2.0

//! The engineered bath with commensurate mode frequencies `w_k = k^s W`.
//!
//! Four time functions drive the resonator:
//!
//! ```text
//! gamma(t) = 2 sum_k g_k^2/w_k sin(w_k t) coth(beta w_k/2)      dephasing rate
//! g(t)     =   sum_k g_k^2/w_k (1 - cos w_k t)                  Kerr-like drive
//! G(t)     =   sum_k (g_k/w_k)^2 (w_k t - sin w_k t)            G' = g
//! Gamma(t) =   sum_k (g_k/w_k)^2 (1 - cos w_k t) coth(...)      2 Gamma' = gamma
//! ```
//!
//! with `g_k = h exp(-z k / 2)`. Every function has period `T = 2 pi / W`.
//! For infinitely many modes with `s = 1` at zero temperature the sums are
//! evaluated in closed form through `log(1 - e^{-z + i W t})` and the
//! dilogarithm of the same argument.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modes {
    Finite(usize),
    InfiniteClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Zero,
    /// Inverse temperature `beta`, in the same time units as the period.
    Finite { beta: f64 },
}

/// Which exponent the mode couplings decay with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingExponent {
    /// `g_k = h exp(-z k / 2)`, so `g_k^2 = h^2 exp(-z k)`.
    #[default]
    HalfZ,
    /// `g_k = h exp(-z k)`.
    FullZ,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    h: f64,
    z: f64,
    omega0: f64,
    s: u32,
    modes: Modes,
    temperature: Temperature,
    coupling: CouplingExponent,
}

impl BathSpec {
    /// Zero coupling (`h = 0`) is accepted and switches the bath off.
    pub fn new(
        h: f64,
        z: f64,
        omega0: f64,
        s: u32,
        modes: Modes,
        temperature: Temperature,
    ) -> Result<Self> {
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::param("bath.h", format!("must be finite and non-negative, got {h}")));
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::param("bath.z", format!("must be positive, got {z}")));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::param("bath.omega0", format!("must be positive, got {omega0}")));
        }
        if s == 0 {
            return Err(Error::param("bath.s", "frequency exponent must be a positive integer"));
        }
        if let Modes::Finite(0) = modes {
            return Err(Error::param("bath.modes", "at least one mode is required"));
        }
        if let Temperature::Finite { beta } = temperature {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(Error::param("bath.beta", format!("must be positive, got {beta}")));
            }
        }
        if modes == Modes::InfiniteClosedForm {
            if s != 1 {
                return Err(Error::param(
                    "bath.s",
                    "the closed-form infinite bath requires s = 1",
                ));
            }
            if temperature != Temperature::Zero {
                return Err(Error::param(
                    "bath.beta",
                    "the closed-form infinite bath requires zero temperature",
                ));
            }
        }
        Ok(BathSpec {
            h,
            z,
            omega0,
            s,
            modes,
            temperature,
            coupling: CouplingExponent::HalfZ,
        })
    }

    pub fn with_coupling_exponent(mut self, coupling: CouplingExponent) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn modes(&self) -> Modes {
        self.modes
    }

    pub fn temperature(&self) -> Temperature {
        self.temperature
    }

    pub fn coupling_exponent(&self) -> CouplingExponent {
        self.coupling
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega0
    }

    /// Decay constant of `g_k^2 = h^2 exp(-z_eff k)`.
    fn z_eff(&self) -> f64 {
        match self.coupling {
            CouplingExponent::HalfZ => self.z,
            CouplingExponent::FullZ => 2.0 * self.z,
        }
    }

    pub fn coupling(&self, k: usize) -> f64 {
        self.h * (-0.5 * self.z_eff() * k as f64).exp()
    }

    pub fn frequency(&self, k: usize) -> f64 {
        (k as f64).powi(self.s as i32) * self.omega0
    }

    fn coth_factor(&self, k: usize) -> f64 {
        match self.temperature {
            Temperature::Zero => 1.0,
            Temperature::Finite { beta } => 1.0 / (0.5 * beta * self.frequency(k)).tanh(),
        }
    }

    /// `w_k t` reduced modulo `2 pi`; exact zero at multiples of the period.
    fn mode_phase(&self, k: usize, t: f64) -> f64 {
        let cycles = (k as f64).powi(self.s as i32) * (t / self.period());
        2.0 * PI * cycles.rem_euclid(1.0)
    }

    fn finite_sum<F: Fn(usize, f64) -> f64>(&self, n: usize, term: F) -> f64 {
        // smallest terms first
        (1..=n).rev().map(|k| term(k, self.coupling(k).powi(2))).sum()
    }

    /// Dephasing rate `gamma(t)`.
    pub fn rate_gamma(&self, t: f64) -> f64 {
        match self.modes {
            Modes::Finite(n) => self.finite_sum(n, |k, g2| {
                2.0 * g2 / self.frequency(k) * self.mode_phase(k, t).sin() * self.coth_factor(k)
            }),
            Modes::InfiniteClosedForm => {
                let (r, phi) = self.closed_form_point(t);
                // -Im log(1 - r e^{i phi})
                let im = (r * phi.sin()).atan2(-(-self.z_eff()).exp_m1() + 2.0 * r * (0.5 * phi).sin().powi(2));
                2.0 * self.h * self.h / self.omega0 * im
            }
        }
    }

    /// Bath-induced drive `g(t)` multiplying `-n^2` in the Hamiltonian.
    pub fn drive_g(&self, t: f64) -> f64 {
        match self.modes {
            Modes::Finite(n) => self.finite_sum(n, |k, g2| {
                2.0 * g2 / self.frequency(k) * (0.5 * self.mode_phase(k, t)).sin().powi(2)
            }),
            Modes::InfiniteClosedForm => {
                let (r, phi) = self.closed_form_point(t);
                // Re log(1 - w) - log(1 - e^{-z}) = 1/2 log(1 + 4 r sin^2(phi/2) / (1 - r)^2)
                let one_minus_r = -(-self.z_eff()).exp_m1();
                let ratio = 4.0 * r * (0.5 * phi).sin().powi(2) / (one_minus_r * one_minus_r);
                0.5 * self.h * self.h / self.omega0 * ratio.ln_1p()
            }
        }
    }

    /// `G(t)`, the antiderivative of `g` with `G(0) = 0`.
    pub fn integral_g(&self, t: f64) -> f64 {
        match self.modes {
            Modes::Finite(n) => self.finite_sum(n, |k, g2| {
                let w = self.frequency(k);
                g2 / (w * w) * (w * t - self.mode_phase(k, t).sin())
            }),
            Modes::InfiniteClosedForm => {
                let (r, phi) = self.closed_form_point(t);
                let h2 = self.h * self.h;
                let w0 = self.omega0;
                h2 / w0 * t * self.sum_g2_over_omega_unit()
                    - h2 / (w0 * w0) * dilog(C64::from_polar(r, phi)).im
            }
        }
    }

    /// `Gamma(t)`, with `2 Gamma' = gamma`, `Gamma(0) = 0` and `Gamma >= 0`.
    pub fn integral_gamma(&self, t: f64) -> f64 {
        match self.modes {
            Modes::Finite(n) => self.finite_sum(n, |k, g2| {
                let w = self.frequency(k);
                g2 / (w * w)
                    * 2.0
                    * (0.5 * self.mode_phase(k, t)).sin().powi(2)
                    * self.coth_factor(k)
            }),
            Modes::InfiniteClosedForm => {
                let (r, phi) = self.closed_form_point(t);
                let h2 = self.h * self.h;
                let w0 = self.omega0;
                let v = h2 / (w0 * w0) * (dilog(C64::new(r, 0.0)).re - dilog(C64::from_polar(r, phi)).re);
                v.max(0.0)
            }
        }
    }

    /// `sum_k g_k^2 / w_k`, which equals `G(T) / T`.
    pub fn sum_g2_over_omega(&self) -> f64 {
        match self.modes {
            Modes::Finite(n) => self.finite_sum(n, |k, g2| g2 / self.frequency(k)),
            Modes::InfiniteClosedForm => self.h * self.h / self.omega0 * self.sum_g2_over_omega_unit(),
        }
    }

    /// `-log(1 - e^{-z})`.
    fn sum_g2_over_omega_unit(&self) -> f64 {
        -(-(-self.z_eff()).exp_m1()).ln()
    }

    fn closed_form_point(&self, t: f64) -> (f64, f64) {
        ((-self.z_eff()).exp(), self.mode_phase(1, t))
    }

    /// Highest harmonic that contributes above round-off.
    pub fn effective_bandwidth(&self) -> usize {
        match self.modes {
            Modes::Finite(n) => n.saturating_pow(self.s),
            Modes::InfiniteClosedForm => (40.0 / self.z_eff()).ceil() as usize,
        }
    }

    /// Composite Gauss–Legendre integral of `gamma` over `[a, b]`, at least
    /// 64 nodes per period and at least one 8-node panel per harmonic.
    pub fn integrate_gamma(&self, a: f64, b: f64) -> f64 {
        let periods = ((b - a) / self.period()).abs().max(1e-12);
        let per_period = self.effective_bandwidth().max(8);
        let panels = (per_period as f64 * periods).ceil() as usize;
        GaussLegendre::new(8).integrate(|t| self.rate_gamma(t), a, b, panels.max(1))
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        let max = match self.modes {
            Modes::Finite(n) => n,
            Modes::InfiniteClosedForm => usize::MAX,
        };
        if k == 0 || k > max {
            return Err(Error::ModeIndexOutOfRange { k, max });
        }
        Ok(())
    }

    /// Mean photon number of mode `k` pushed out of its vacuum by the
    /// resonator, given the conserved `<n^2>` of the resonator.
    pub fn bath_mode_photon_number(&self, k: usize, t: f64, n2_expect: f64) -> Result<f64> {
        self.check_mode(k)?;
        let ratio = self.coupling(k) / self.frequency(k);
        Ok(4.0 * ratio * ratio * (0.5 * self.mode_phase(k, t)).sin().powi(2) * n2_expect)
    }

    /// `(<X_k>, <P_k>)` for `X = (a^dagger + a)/sqrt 2`, `P = i(a^dagger - a)/sqrt 2`.
    pub fn bath_mode_quadratures(&self, k: usize, t: f64, n_expect: f64) -> Result<(f64, f64)> {
        self.check_mode(k)?;
        let amp = std::f64::consts::SQRT_2 * self.coupling(k) / self.frequency(k) * n_expect;
        let phi = self.mode_phase(k, t);
        let x = -2.0 * amp * (0.5 * phi).sin().powi(2);
        let p = -amp * phi.sin();
        Ok((x, p))
    }
}

/// Dilogarithm `Li2(x) = sum_{k>=1} x^k / k^2` for `|x| <= 1`.
pub fn dilog(x: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    if x == one {
        return C64::new(PI * PI / 6.0, 0.0);
    }
    if x.norm() <= 0.5 {
        return dilog_series(x);
    }
    let u = -(one - x).ln();
    if u.norm() < 4.0 {
        dilog_bernoulli(u)
    } else {
        // reflection: Li2(x) = pi^2/6 - ln(x) ln(1-x) - Li2(1-x), with |1-x| small
        C64::new(PI * PI / 6.0, 0.0) - x.ln() * (one - x).ln() - dilog_series(one - x)
    }
}

fn dilog_series(x: C64) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    let mut pow = x;
    for k in 1..10_000 {
        let term = pow / (k * k) as f64;
        sum += term;
        if term.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
        pow *= x;
    }
    sum
}

/// `Li2 = u - u^2/4 + sum_k B_2k u^(2k+1) / (2k+1)!` with `u = -ln(1-x)`.
fn dilog_bernoulli(u: C64) -> C64 {
    let u2 = u * u;
    let mut sum = u - u2 * 0.25;
    let mut pow = u * u2;
    let two_pi_sq = 4.0 * PI * PI;
    let mut scale = 1.0;
    for k in 1..80 {
        scale /= two_pi_sq;
        let zeta = zeta_even(k);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let coeff = sign * 2.0 * zeta * scale / (2 * k + 1) as f64;
        let term = pow * coeff;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
        pow *= u2;
    }
    sum
}

/// `zeta(2k)` for `k >= 1`.
fn zeta_even(k: usize) -> f64 {
    if k == 1 {
        return PI * PI / 6.0;
    }
    // partial sum plus Euler-Maclaurin tail
    let p = 2 * k as i32;
    let n = 40.0f64;
    let mut s: f64 = (1..40).map(|j| (j as f64).powi(-p)).sum();
    let pf = p as f64;
    s += n.powi(1 - p) / (pf - 1.0) + 0.5 * n.powi(-p) + pf * n.powi(-p - 1) / 12.0
        - pf * (pf + 1.0) * (pf + 2.0) * n.powi(-p - 3) / 720.0;
    s
}
