// SPDX-License-Identifier: Apache-2.0

//! Monodromy spectrum, analytic multipliers, and the stroboscopic
//! divisibility series.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::exact::SystemSpec;
use crate::linalg::{self, wrap_phase};
use crate::liouville::vec_label;
use crate::propagate::DynamicalMap;
use crate::{Error, Result};

/// Off-diagonal magnitude below which the monodromy is read as diagonal.
pub const DIAGONAL_TOLERANCE: f64 = 1e-10;
/// `Delta_m` at or below this counts as divisible.
pub const DIVISIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetMode {
    pub multiplier: C64,
    /// Principal-branch exponent, `Im` in `(-pi/T, pi/T]`.
    pub exponent: C64,
    /// Exponents are defined modulo `2 pi i / T`; always 0 here.
    pub branch: i64,
    /// `(m, n)` for the basis element `|m><n|`, when the monodromy is diagonal.
    pub label: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetSpectrum {
    pub period: f64,
    /// Sorted by `Re L`, then `Im L`, both descending.
    pub modes: Vec<FloquetMode>,
    pub diagonal: bool,
}

impl FloquetSpectrum {
    pub fn multipliers(&self) -> Vec<C64> {
        self.modes.iter().map(|m| m.multiplier).collect()
    }

    pub fn exponents(&self) -> Vec<C64> {
        self.modes.iter().map(|m| m.exponent).collect()
    }

    /// Mode index carrying label `(m, n)`.
    pub fn index_of(&self, m: usize, n: usize) -> Option<usize> {
        self.modes.iter().position(|x| x.label == Some((m, n)))
    }

    pub fn mode(&self, m: usize, n: usize) -> Option<&FloquetMode> {
        self.index_of(m, n).map(|i| &self.modes[i])
    }
}

/// `ln(lambda) / T` on the principal branch.
pub fn principal_exponent(lambda: C64, period: f64) -> C64 {
    C64::new(lambda.norm().ln(), wrap_phase(lambda.arg())) / period
}

fn mode(multiplier: C64, period: f64, label: Option<(usize, usize)>) -> FloquetMode {
    FloquetMode {
        multiplier,
        exponent: principal_exponent(multiplier, period),
        branch: 0,
        label,
    }
}

pub fn floquet_spectrum(mono: &DynamicalMap) -> Result<FloquetSpectrum> {
    let period = mono.t_end() - mono.t_start();
    if !(period > 0.0) {
        return Err(Error::InvalidState("monodromy must span a positive interval".into()));
    }
    let n = mono.hilbert_dim();
    let diagonal = mono
        .blocks()
        .iter()
        .all(|b| linalg::is_diagonal(b.matrix.view(), DIAGONAL_TOLERANCE));
    let mut modes: Vec<FloquetMode> = if diagonal {
        mono.blocks()
            .iter()
            .flat_map(|b| {
                b.indices
                    .iter()
                    .enumerate()
                    .map(move |(i, &g)| mode(b.matrix[[i, i]], period, Some(vec_label(g, n))))
            })
            .collect()
    } else {
        let per_block: Vec<Result<Vec<C64>>> = mono
            .blocks()
            .par_iter()
            .map(|b| linalg::eigenvalues(b.matrix.view()))
            .collect();
        let mut out = Vec::with_capacity(mono.size());
        for (b, eig) in mono.blocks().iter().zip(per_block) {
            let eig = eig?;
            if b.indices.len() == 1 {
                out.push(mode(eig[0], period, Some(vec_label(b.indices[0], n))));
            } else {
                out.extend(eig.into_iter().map(|z| mode(z, period, None)));
            }
        }
        out
    };
    modes.sort_by(|a, b| {
        b.exponent
            .re
            .total_cmp(&a.exponent.re)
            .then(b.exponent.im.total_cmp(&a.exponent.im))
    });
    Ok(FloquetSpectrum { period, modes, diagonal })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticMultiplier {
    pub label: (usize, usize),
    pub multiplier: C64,
    pub exponent: C64,
}

/// `lambda_{m,n} = exp(-i (E_m - E_n) T) exp(i G(T) (m^2 - n^2))` for every
/// `|m><n|`, in vectorized order.
pub fn analytic_multipliers(sys: &SystemSpec) -> Vec<AnalyticMultiplier> {
    analytic_multipliers_with_kerr_sign(sys, 1.0)
}

/// As [`analytic_multipliers`] with the `G(T)` phase multiplied by `sign`.
pub fn analytic_multipliers_with_kerr_sign(sys: &SystemSpec, sign: f64) -> Vec<AnalyticMultiplier> {
    let period = sys.period();
    let g_period = period * sys.bath.sum_g2_over_omega();
    let n = sys.space.dim();
    (0..n * n)
        .map(|i| {
            let (m, k) = vec_label(i, n);
            let (mf, kf) = (m as f64, k as f64);
            let phase = if m == k {
                0.0
            } else {
                -(sys.energy(m) - sys.energy(k)) * period + sign * g_period * (mf * mf - kf * kf)
            };
            let multiplier = C64::from_polar(1.0, phase);
            AnalyticMultiplier {
                label: (m, k),
                multiplier,
                exponent: C64::new(0.0, wrap_phase(phase)) / period,
            }
        })
        .collect()
}

/// Result of pairing two multisets of complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct MultisetMatch {
    /// `(numeric index, analytic index, distance)`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub max_distance: f64,
    /// Analytic values that are the nearest point of more than one numeric
    /// value: degenerate clusters paired as multisets.
    pub collisions: usize,
}

/// Greedy global nearest-neighbour matching: all cross distances are sorted
/// and taken in order, each value used once.
pub fn match_multisets(numeric: &[C64], analytic: &[C64]) -> Result<MultisetMatch> {
    if numeric.len() != analytic.len() {
        return Err(Error::DimensionMismatch {
            expected: analytic.len(),
            found: numeric.len(),
        });
    }
    let n = numeric.len();
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, a) in numeric.iter().enumerate() {
        for (j, b) in analytic.iter().enumerate() {
            cand.push(((a - b).norm(), i, j));
        }
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let (mut used_n, mut used_a) = (vec![false; n], vec![false; n]);
    let mut pairs = Vec::with_capacity(n);
    for (d, i, j) in cand {
        if used_n[i] || used_a[j] {
            continue;
        }
        used_n[i] = true;
        used_a[j] = true;
        pairs.push((i, j, d));
        if pairs.len() == n {
            break;
        }
    }
    pairs.sort_by_key(|p| p.0);
    let mut nearest_count = vec![0usize; n];
    for a in numeric {
        let j = (0..n)
            .min_by(|&x, &y| (a - analytic[x]).norm().total_cmp(&(a - analytic[y]).norm()))
            .expect("non-empty");
        nearest_count[j] += 1;
    }
    let max_distance = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(MultisetMatch {
        pairs,
        max_distance,
        collisions: nearest_count.iter().filter(|&&c| c > 1).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivisibilityPoint {
    pub m: u32,
    pub delta: f64,
    /// `ln|Delta_m|`, finite even when `delta` underflows.
    pub log_abs_delta: f64,
    /// Sign of `Delta_m`: `-1`, `0` or `1`.
    pub sign: i8,
    pub divisible: bool,
}

/// `Delta_m = |det Phi(T)|^m (|det Phi(T)| - 1) / T`.
pub fn divisibility_delta(mono: &DynamicalMap, m: u32) -> DivisibilityPoint {
    let period = mono.t_end() - mono.t_start();
    let log_abs = mono.log_det().log_abs;
    let factor = log_abs.exp_m1();
    let delta = (m as f64 * log_abs).exp() * factor / period;
    let sign = if factor > 0.0 {
        1
    } else if factor < 0.0 {
        -1
    } else {
        0
    };
    DivisibilityPoint {
        m,
        delta,
        log_abs_delta: m as f64 * log_abs + factor.abs().ln() - period.ln(),
        sign,
        divisible: delta <= DIVISIBILITY_TOLERANCE,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeSeries {
    /// `|det Phi(T)|^l`, `l = 0..=m_max`.
    pub power_law: Vec<f64>,
    /// `|det|` of the `l`-fold composed monodromy.
    pub composed: Vec<f64>,
    pub max_deviation: f64,
}

pub fn volume_series(mono: &DynamicalMap, m_max: u32) -> VolumeSeries {
    let log_abs = mono.log_det().log_abs;
    let power_law: Vec<f64> = (0..=m_max).map(|l| (l as f64 * log_abs).exp()).collect();
    let mut composed = Vec::with_capacity(power_law.len());
    let mut acc = mono.power(0);
    composed.push(acc.log_det().abs());
    for _ in 1..=m_max {
        acc = mono.compose(&acc).expect("same partition");
        composed.push(acc.log_det().abs());
    }
    let max_deviation = power_law
        .iter()
        .zip(&composed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    VolumeSeries {
        power_law,
        composed,
        max_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathSpec, Modes, Temperature};
    use crate::fock::FockSpace;
    use crate::liouville::{control_liouvillian, PeriodicLiouvillian};
    use crate::propagate::{monodromy, monodromy_of, PropagationConfig, Scheme};
    use std::f64::consts::PI;

    fn system(dim: usize, h: f64, omega: f64) -> SystemSpec {
        let bath = BathSpec::new(h, 0.1, 2.0 * PI, 1, Modes::InfiniteClosedForm, Temperature::Zero).unwrap();
        SystemSpec::new(omega, FockSpace::new(dim).unwrap(), bath).unwrap()
    }

    fn cfg() -> PropagationConfig {
        PropagationConfig::new(1000, Scheme::Magnus4, false).unwrap()
    }

    #[test]
    fn free_rotation_multipliers() {
        let sys = system(3, 0.0, 1.3);
        let spec = floquet_spectrum(&monodromy(&sys, &cfg()).unwrap()).unwrap();
        assert!(spec.diagonal);
        assert_eq!(spec.modes.len(), 9);
        for m in 0..3 {
            for n in 0..3 {
                let want = C64::from_polar(1.0, -(m as f64 - n as f64) * 1.3);
                assert!((spec.mode(m, n).unwrap().multiplier - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn exponents_are_principal_logs() {
        let sys = system(4, 1.0, 2.0 * PI);
        let spec = floquet_spectrum(&monodromy(&sys, &cfg()).unwrap()).unwrap();
        for md in &spec.modes {
            assert!(((md.exponent * spec.period).exp() - md.multiplier).norm() < 1e-10);
            assert!(md.exponent.im > -PI && md.exponent.im <= PI);
            assert_eq!(md.branch, 0);
        }
        for w in spec.modes.windows(2) {
            assert!(w[0].exponent.re >= w[1].exponent.re);
        }
    }

    #[test]
    fn analytic_values() {
        let sys = system(5, 1.0, 2.0 * PI);
        let an = analytic_multipliers(&sys);
        assert_eq!(an.len(), 25);
        let g_t = 1.0 / (2.0 * PI) * -(1.0 - (-0.1f64).exp()).ln();
        for a in &an {
            let (m, n) = a.label;
            if m == n {
                assert_eq!(a.multiplier, C64::new(1.0, 0.0));
            }
            let partner = an.iter().find(|b| b.label == (n, m)).unwrap();
            assert!((a.multiplier - partner.multiplier.conj()).norm() < 1e-15);
        }
        let l10 = an.iter().find(|a| a.label == (1, 0)).unwrap();
        assert!((l10.multiplier - C64::from_polar(1.0, g_t)).norm() < 1e-12);
    }

    #[test]
    fn numeric_spectrum_matches_analytic_with_labels() {
        let sys = system(3, 1.0, 2.0 * PI);
        let spec = floquet_spectrum(&monodromy(&sys, &cfg()).unwrap()).unwrap();
        let an = analytic_multipliers(&sys);
        let got = match_multisets(&spec.multipliers(), &an.iter().map(|a| a.multiplier).collect::<Vec<_>>()).unwrap();
        assert!(got.max_distance < 1e-6);
        for a in &an {
            let num = spec.mode(a.label.0, a.label.1).unwrap().multiplier;
            assert!((num - a.multiplier).norm() < 1e-6, "{:?}", a.label);
        }
    }

    #[test]
    fn greedy_matching_handles_degeneracy() {
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let m = match_multisets(&[one, one + 1e-9, i], &[i, one, one]).unwrap();
        assert!(m.max_distance < 2e-9);
        assert_eq!(m.collisions, 1);
        assert!(match_multisets(&[one], &[]).is_err());
    }

    #[test]
    fn general_eigen_path_on_non_diagonal_monodromy() {
        use crate::fock::{annihilation_operator, number_operator, OperatorMatrix};
        use crate::liouville::commutator_superop;
        use std::sync::Arc;
        // constant Hamiltonian a + a^dagger: multipliers exp(-i (e_j - e_k) T)
        let space = FockSpace::new(3).unwrap();
        let a = annihilation_operator(space);
        let x = OperatorMatrix::new(a.elements() + a.dagger().elements()).unwrap();
        let h = OperatorMatrix::new(number_operator(space).elements() + x.elements()).unwrap();
        let gen = PeriodicLiouvillian::new(1.0, 3)
            .unwrap()
            .with_term(Arc::new(|_| 1.0), commutator_superop(&h).unwrap())
            .unwrap();
        let spec = floquet_spectrum(&monodromy_of(&gen, &cfg()).unwrap()).unwrap();
        assert!(!spec.diagonal);
        let e = crate::linalg::eigenvalues(h.elements().view()).unwrap();
        let mut want = Vec::new();
        for j in 0..3 {
            for k in 0..3 {
                want.push((C64::new(0.0, -1.0) * (e[j] - e[k])).exp());
            }
        }
        let m = match_multisets(&spec.multipliers(), &want).unwrap();
        assert!(m.max_distance < 1e-8, "{}", m.max_distance);
    }

    #[test]
    fn divisibility_on_model_and_control() {
        let sys = system(6, 1.0, 2.0 * PI);
        let mono = monodromy(&sys, &cfg()).unwrap();
        for m in 0..=10 {
            let p = divisibility_delta(&mono, m);
            assert!(p.delta.abs() < 1e-9 && p.divisible);
        }
        let vs = volume_series(&mono, 5);
        assert!(vs.power_law.iter().all(|v| (v - 1.0).abs() < 1e-6));
        assert!(vs.max_deviation < 1e-6);

        let ctrl = control_liouvillian(2.0 * PI, FockSpace::new(3).unwrap(), 0.1, 1.0).unwrap();
        let mono = monodromy_of(&ctrl, &cfg()).unwrap();
        let det = mono.log_det().abs();
        assert!((det - (-0.6f64).exp()).abs() < 1e-12);
        let series: Vec<f64> = (0..=10).map(|m| divisibility_delta(&mono, m).delta).collect();
        assert!(series.iter().all(|d| *d < 0.0));
        for w in series.windows(2) {
            assert!((w[1] / w[0] - det).abs() < 1e-12);
        }
        let vs = volume_series(&mono, 4);
        assert_eq!(vs.power_law[0], 1.0);
        assert!((vs.composed[4] - det.powi(4)).abs() < 1e-12);
    }
}
