// SPDX-License-Identifier: Apache-2.0

//! Wigner fields on phase-space grids and time series of scalar observables.

use std::f64::consts::{FRAC_1_PI, FRAC_1_SQRT_2};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::exact::{evolve_exact, exact_volume, linear_entropy, n2_expectation, return_probability, SystemSpec};
use crate::fock::{displacement_elements, DensityMatrix, FockSpace};
use crate::propagate::{monodromy, PropagationConfig};
use crate::{Error, Result};

/// Imaginary part of a Wigner value tolerated before it is discarded.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Rectangular grid in the canonical coordinates, `alpha = (Q + iP)/sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
}

impl PhaseGrid {
    pub fn new(q_min: f64, q_max: f64, p_min: f64, p_max: f64, n_q: usize, n_p: usize) -> Result<Self> {
        if n_q < 2 || n_p < 2 {
            return Err(Error::param("grid.n", format!("need at least 2 points per axis, got {n_q}x{n_p}")));
        }
        if !(q_max > q_min) || !q_min.is_finite() || !q_max.is_finite() {
            return Err(Error::param("grid.q", format!("need q_max > q_min, got [{q_min}, {q_max}]")));
        }
        if !(p_max > p_min) || !p_min.is_finite() || !p_max.is_finite() {
            return Err(Error::param("grid.p", format!("need p_max > p_min, got [{p_min}, {p_max}]")));
        }
        Ok(PhaseGrid {
            q_min,
            q_max,
            p_min,
            p_max,
            n_q,
            n_p,
        })
    }

    pub fn square(half_width: f64, points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width, points, points)
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_q - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        if i + 1 == self.n_q {
            self.q_max
        } else {
            self.q_min + i as f64 * self.dq()
        }
    }

    pub fn p(&self, j: usize) -> f64 {
        if j + 1 == self.n_p {
            self.p_max
        } else {
            self.p_min + j as f64 * self.dp()
        }
    }

    pub fn alpha(&self, i: usize, j: usize) -> C64 {
        C64::new(self.q(i), self.p(j)) * FRAC_1_SQRT_2
    }
}

/// `W(Q_i, P_j)` stored as `values[[i, j]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub values: Array2<f64>,
}

impl WignerField {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &WignerField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidState("Wigner fields on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// `W(alpha) = Tr[Pi D^dagger(alpha) rho D(alpha)] / pi = Tr[D(2 alpha) Pi rho] / pi`,
/// with exact matrix elements of `D(2 alpha)`.
pub fn wigner_at(rho: &DensityMatrix, alpha: C64) -> Result<f64> {
    let n = rho.dim();
    let d = displacement_elements(FockSpace::new(n)?, alpha * 2.0);
    let (d, r) = (d.elements(), rho.elements());
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut row = C64::new(0.0, 0.0);
        for m in 0..n {
            row += d[[m, k]] * r[[k, m]];
        }
        acc += row * sign;
    }
    let w = acc * FRAC_1_PI;
    if w.im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::ImaginaryResidue {
            q: (alpha.re / FRAC_1_SQRT_2),
            p: (alpha.im / FRAC_1_SQRT_2),
            residue: w.im,
        });
    }
    Ok(w.re)
}

pub fn wigner(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<WignerField> {
    let points: Vec<Result<f64>> = (0..grid.n_q * grid.n_p)
        .into_par_iter()
        .map(|k| wigner_at(rho, grid.alpha(k / grid.n_p, k % grid.n_p)))
        .collect();
    let values: Vec<f64> = points.into_iter().collect::<Result<_>>()?;
    Ok(WignerField {
        grid: *grid,
        values: Array2::from_shape_vec((grid.n_q, grid.n_p), values).expect("grid shape"),
    })
}

/// Two-dimensional trapezoid integral of the field.
pub fn wigner_norm(field: &WignerField) -> f64 {
    let g = &field.grid;
    let mut total = 0.0;
    for ((i, j), w) in field.values.indexed_iter() {
        let wq = if i == 0 || i + 1 == g.n_q { 0.5 } else { 1.0 };
        let wp = if j == 0 || j + 1 == g.n_p { 0.5 } else { 1.0 };
        total += wq * wp * w;
    }
    total * g.dq() * g.dp()
}

/// Scalar observables tracked along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    ReturnProbability,
    LinearEntropy,
    N2,
    /// `|det Phi(t)|` of the exact map.
    Volume,
}

impl Observable {
    pub const ALL: [Observable; 4] = [
        Observable::ReturnProbability,
        Observable::LinearEntropy,
        Observable::N2,
        Observable::Volume,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Observable::ReturnProbability => "return_probability",
            Observable::LinearEntropy => "linear_entropy",
            Observable::N2 => "n2",
            Observable::Volume => "volume",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    pub value: f64,
}

fn observe(sys: &SystemSpec, rho0: &DensityMatrix, obs: Observable, t: f64) -> Result<f64> {
    if obs == Observable::Volume {
        return Ok(exact_volume(sys, t));
    }
    let rho = evolve_exact(rho0, sys, t)?;
    Ok(match obs {
        Observable::ReturnProbability => return_probability(&rho, rho0)?,
        Observable::LinearEntropy => linear_entropy(&rho),
        Observable::N2 => n2_expectation(&rho),
        Observable::Volume => unreachable!(),
    })
}

/// Values at `t_l = l T`, `l = 0..=l_max`.
pub fn stroboscopic_series(sys: &SystemSpec, rho0: &DensityMatrix, obs: Observable, l_max: u32) -> Result<Vec<SeriesPoint>> {
    let times: Vec<f64> = (0..=l_max).map(|l| l as f64 * sys.period()).collect();
    dense_series(sys, rho0, obs, &times)
}

/// Values on an arbitrary time grid.
pub fn dense_series(sys: &SystemSpec, rho0: &DensityMatrix, obs: Observable, times: &[f64]) -> Result<Vec<SeriesPoint>> {
    times
        .par_iter()
        .map(|&t| Ok(SeriesPoint { t, value: observe(sys, rho0, obs, t)? }))
        .collect()
}

/// `n` equally spaced times covering `[t0, t1]`, end points included.
pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..n)
            .map(|i| if i + 1 == n { t1 } else { t0 + (t1 - t0) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Largest elementwise gap between `Phi(T)^l rho0` and the exact state at
/// `l T`, `l = 1..=l_max`.
pub fn monodromy_crosscheck(sys: &SystemSpec, rho0: &DensityMatrix, l_max: u32, cfg: &PropagationConfig) -> Result<f64> {
    let mono = monodromy(sys, cfg)?;
    let mut rho = rho0.clone();
    let mut worst: f64 = 0.0;
    for l in 1..=l_max {
        rho = mono.apply(&rho)?;
        let ex = evolve_exact(rho0, sys, l as f64 * sys.period())?;
        let gap = (rho.elements() - ex.elements()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathSpec, Modes, Temperature};
    use crate::fock::{cat_state, coherent_state, density_from_ket, expectation, fock_state, parity_operator, vacuum, Ket};
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn space(n: usize) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    fn reference_system(dim: usize) -> SystemSpec {
        let bath = BathSpec::new(1.0, 0.1, 2.0 * PI, 1, Modes::Finite(60), Temperature::Zero).unwrap();
        SystemSpec::new(2.0 * PI, space(dim), bath).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
        density_from_ket(
            &Ket::new(Array1::from_shape_fn(n, |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
                .unwrap(),
        )
    }

    #[test]
    fn grid_validation_and_coordinates() {
        assert!(PhaseGrid::new(0.0, 1.0, 0.0, 1.0, 1, 5).is_err());
        assert!(PhaseGrid::new(1.0, 1.0, 0.0, 1.0, 3, 5).is_err());
        let g = PhaseGrid::square(6.0, 241).unwrap();
        assert_eq!(g.q(0), -6.0);
        assert_eq!(g.q(240), 6.0);
        assert!((g.q(120)).abs() < 1e-15);
        assert!((g.dq() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn vacuum_is_gaussian() {
        let rho = density_from_ket(&vacuum(space(10)));
        let grid = PhaseGrid::square(3.0, 13).unwrap();
        let f = wigner(&rho, &grid).unwrap();
        for i in 0..13 {
            for j in 0..13 {
                let (q, p) = (grid.q(i), grid.p(j));
                let want = (-(q * q + p * p)).exp() / PI;
                assert!((f.values[[i, j]] - want).abs() < 1e-6);
            }
        }
        assert!((wigner_at(&rho, C64::new(0.0, 0.0)).unwrap() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn vacuum_norm_on_documented_grid() {
        let rho = density_from_ket(&vacuum(space(10)));
        let f = wigner(&rho, &PhaseGrid::square(5.0, 201).unwrap()).unwrap();
        assert!((wigner_norm(&f) - 1.0).abs() < 1e-4);
        let half = wigner(&rho, &PhaseGrid::new(0.0, 5.0, -5.0, 5.0, 101, 201).unwrap()).unwrap();
        assert!((wigner_norm(&half) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn coherent_state_far_from_origin() {
        // exercises the displacement elements at |2 alpha| ~ 12
        let beta = C64::new(2.0, 0.0);
        let rho = density_from_ket(&coherent_state(space(40), beta).unwrap());
        for (q, p) in [(6.0, 6.0), (-6.0, 6.0), (2.0f64.sqrt() * 2.0, 0.0), (5.5, -1.0)] {
            let w = wigner_at(&rho, C64::new(q, p) * FRAC_1_SQRT_2).unwrap();
            let (q0, p0) = (2.0f64.sqrt() * 2.0, 0.0);
            let want = (-((q - q0).powi(2) + (p - p0).powi(2))).exp() / PI;
            assert!((w - want).abs() < 1e-10, "({q},{p}): {w} vs {want}");
        }
    }

    #[test]
    fn cat_parity_bound_and_norm() {
        let s = space(30);
        let rho = density_from_ket(&cat_state(s, C64::new(2.0, 0.0)).unwrap());
        let parity = expectation(&rho, &parity_operator(s)).unwrap().re;
        assert!((wigner_at(&rho, C64::new(0.0, 0.0)).unwrap() - parity / PI).abs() < 1e-10);
        assert!((parity - 1.0).abs() < 1e-12);
        let f = wigner(&rho, &PhaseGrid::square(6.0, 241).unwrap()).unwrap();
        assert!(f.max() <= 1.0 / PI + 1e-9 && f.min() >= -1.0 / PI - 1e-9);
        assert!(f.min() < -0.1);
        assert!((wigner_norm(&f) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fock_one_is_negative_at_origin() {
        let rho = density_from_ket(&fock_state(space(5), 1).unwrap());
        assert!((wigner_at(&rho, C64::new(0.0, 0.0)).unwrap() + 1.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn linearity_and_bound_for_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let grid = PhaseGrid::square(4.0, 17).unwrap();
        let (r1, r2) = (random_state(&mut rng, 8), random_state(&mut rng, 8));
        let a = 0.3;
        let mix = r1.mix(&r2, a).unwrap();
        let (w1, w2, wm) = (wigner(&r1, &grid).unwrap(), wigner(&r2, &grid).unwrap(), wigner(&mix, &grid).unwrap());
        for ((x, y), z) in w1.values.iter().zip(w2.values.iter()).zip(wm.values.iter()) {
            assert!((a * x + (1.0 - a) * y - z).abs() < 1e-10);
            assert!(x.abs() <= 1.0 / PI + 1e-9);
        }
    }

    #[test]
    fn wigner_is_deterministic_under_parallelism() {
        let rho = density_from_ket(&cat_state(space(30), C64::new(2.0, 0.0)).unwrap());
        let grid = PhaseGrid::square(6.0, 31).unwrap();
        let a = wigner(&rho, &grid).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| wigner(&rho, &grid).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn stroboscopic_series_values() {
        let sys = reference_system(30);
        let rho = density_from_ket(&cat_state(sys.space, C64::new(2.0, 0.0)).unwrap());
        let ent = stroboscopic_series(&sys, &rho, Observable::LinearEntropy, 5).unwrap();
        assert!(ent.iter().all(|p| p.value.abs() <= 1e-10));
        let ret = stroboscopic_series(&sys, &rho, Observable::ReturnProbability, 2).unwrap();
        assert!((ret[0].value - 1.0).abs() < 1e-12);
        let vol = stroboscopic_series(&sys, &rho, Observable::Volume, 3).unwrap();
        assert!(vol.iter().all(|p| p.value == 1.0));
        assert_eq!(Observable::parse("n2"), Some(Observable::N2));
        assert_eq!(Observable::parse("nope"), None);
    }

    #[test]
    fn entropy_rises_and_returns() {
        let sys = reference_system(30);
        let rho = density_from_ket(&cat_state(sys.space, C64::new(2.0, 0.0)).unwrap());
        let curve = dense_series(&sys, &rho, Observable::LinearEntropy, &uniform_times(0.0, 1.0, 201)).unwrap();
        let max = curve.iter().map(|p| p.value).fold(0.0, f64::max);
        let last = curve.last().unwrap().value;
        assert!(max > 10.0 * last.abs().max(1e-12));
        for p in &curve {
            let direct = linear_entropy(&evolve_exact(&rho, &sys, p.t).unwrap());
            assert_eq!(p.value, direct);
        }
    }

    #[test]
    fn free_return_probability_is_periodic() {
        let bath = BathSpec::new(0.0, 0.1, 2.0 * PI, 1, Modes::Finite(10), Temperature::Zero).unwrap();
        let sys = SystemSpec::new(2.0 * PI, space(12), bath).unwrap();
        let rho = density_from_ket(&coherent_state(space(12), C64::new(0.8, 0.0)).unwrap_or_else(|_| {
            crate::fock::coherent_state_with_threshold(space(12), C64::new(0.8, 0.0), 1e-6).unwrap()
        }));
        let times = uniform_times(0.0, 2.0, 41);
        let r = dense_series(&sys, &rho, Observable::ReturnProbability, &times).unwrap();
        for k in 0..21 {
            assert!((r[k].value - r[k + 20].value).abs() < 1e-12);
        }
        assert!(r[10].value < 0.9);
    }

    #[test]
    fn uniform_times_endpoints() {
        assert!(uniform_times(0.0, 3.0, 0).is_empty());
        assert_eq!(uniform_times(1.0, 3.0, 1), vec![1.0]);
        let t = uniform_times(0.0, 3.0, 7);
        assert_eq!((t[0], t[6]), (0.0, 3.0));
        assert_eq!(t[2], 1.0);
    }

    #[test]
    fn monodromy_powers_track_exact_solver() {
        let sys = reference_system(8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_state(&mut rng, 8);
        let cfg = PropagationConfig::new(1000, crate::propagate::Scheme::Magnus4, false).unwrap();
        assert!(monodromy_crosscheck(&sys, &rho, 4, &cfg).unwrap() < 1e-8);
    }
}
