// SPDX-License-Identifier: Apache-2.0

//! Truncated Fock space: operators, canonical states and density-matrix
//! utilities.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::linalg;
use crate::{Error, Result};

/// Largest Poisson tail mass a truncated coherent or cat state may drop.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Levels `|0>, ..., |dim-1>` of a single bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::param("fock_dim", format!("must be at least 2, got {dim}")));
        }
        Ok(FockSpace { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: Array1<C64>,
}

impl Ket {
    /// Normalizes the given amplitudes.
    pub fn new(amplitudes: Array1<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidState(format!(
                "amplitudes have norm {norm}, cannot normalize"
            )));
        }
        if amplitudes.len() < 2 {
            return Err(Error::param("fock_dim", "a ket needs at least 2 levels"));
        }
        Ok(Ket {
            amplitudes: amplitudes.mapv(|c| c / norm),
        })
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn space(&self) -> FockSpace {
        FockSpace {
            dim: self.amplitudes.len(),
        }
    }
}

/// Density operator on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: Array2<C64>,
}

/// Tolerance for Hermiticity and unit trace at construction.
pub const STATE_TOLERANCE: f64 = 1e-12;

impl DensityMatrix {
    /// Validates Hermiticity and unit trace.
    pub fn new(elements: Array2<C64>) -> Result<Self> {
        let n = elements.nrows();
        if n != elements.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: elements.ncols(),
            });
        }
        if n < 2 {
            return Err(Error::param("fock_dim", "a density matrix needs at least 2 levels"));
        }
        let rho = DensityMatrix { elements };
        let herm = rho.hermiticity_defect();
        if herm > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "not Hermitian: max |rho - rho^H| = {herm:.3e}"
            )));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(rho)
    }

    /// Wraps a matrix produced by a trace- and Hermiticity-preserving
    /// evolution without re-validating it.
    pub fn from_elements_unchecked(elements: Array2<C64>) -> Self {
        DensityMatrix { elements }
    }

    pub fn maximally_mixed(space: FockSpace) -> Self {
        let n = space.dim();
        DensityMatrix {
            elements: Array2::from_diag_elem(n, C64::new(1.0 / n as f64, 0.0)),
        }
    }

    pub fn elements(&self) -> &Array2<C64> {
        &self.elements
    }

    pub fn into_elements(self) -> Array2<C64> {
        self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn space(&self) -> FockSpace {
        FockSpace { dim: self.dim() }
    }

    pub fn trace(&self) -> C64 {
        self.elements.diag().sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.elements[[i, j]] - self.elements[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue (real part); used for positivity checks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let ev = linalg::eigenvalues(self.elements.view())?;
        Ok(ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
    }

    /// Convex combination `a * self + (1 - a) * other`.
    pub fn mix(&self, other: &DensityMatrix, a: f64) -> Result<DensityMatrix> {
        self.space().check(other.dim())?;
        Ok(DensityMatrix {
            elements: &self.elements * C64::new(a, 0.0) + &other.elements * C64::new(1.0 - a, 0.0),
        })
    }
}

/// Operator on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    elements: Array2<C64>,
}

impl OperatorMatrix {
    pub fn new(elements: Array2<C64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch {
                expected: elements.nrows(),
                found: elements.ncols(),
            });
        }
        Ok(OperatorMatrix { elements })
    }

    pub fn elements(&self) -> &Array2<C64> {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn dagger(&self) -> OperatorMatrix {
        OperatorMatrix {
            elements: self.elements.t().mapv(|z| z.conj()),
        }
    }

    pub fn compose(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rhs.dim(),
            });
        }
        Ok(OperatorMatrix {
            elements: self.elements.dot(&rhs.elements),
        })
    }

    pub fn act(&self, psi: &Ket) -> Result<Array1<C64>> {
        if self.dim() != psi.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        Ok(self.elements.dot(psi.amplitudes()))
    }
}

pub fn identity_operator(space: FockSpace) -> OperatorMatrix {
    OperatorMatrix {
        elements: linalg::identity(space.dim()),
    }
}

/// `n = b^dagger b`.
pub fn number_operator(space: FockSpace) -> OperatorMatrix {
    OperatorMatrix {
        elements: Array2::from_diag(&Array1::from_shape_fn(space.dim(), |n| {
            C64::new(n as f64, 0.0)
        })),
    }
}

pub fn annihilation_operator(space: FockSpace) -> OperatorMatrix {
    let n = space.dim();
    let mut b = Array2::zeros((n, n));
    for k in 1..n {
        b[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    OperatorMatrix { elements: b }
}

/// `diag((-1)^n)`.
pub fn parity_operator(space: FockSpace) -> OperatorMatrix {
    OperatorMatrix {
        elements: Array2::from_diag(&Array1::from_shape_fn(space.dim(), |n| {
            if n % 2 == 0 {
                ONE
            } else {
                -ONE
            }
        })),
    }
}

pub fn fock_state(space: FockSpace, n: usize) -> Result<Ket> {
    if n >= space.dim() {
        return Err(Error::LevelOutOfRange {
            level: n,
            dim: space.dim(),
        });
    }
    let mut c = Array1::zeros(space.dim());
    c[n] = ONE;
    Ket::new(c)
}

pub fn vacuum(space: FockSpace) -> Ket {
    fock_state(space, 0).expect("level 0 always exists")
}

/// Poisson(mean) probability mass on levels `>= first`.
pub fn poisson_tail(mean: f64, first: usize) -> f64 {
    if mean == 0.0 {
        return if first == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=first).map(|k| (k as f64).ln()).sum();
    let mut ln_term = -mean + first as f64 * mean.ln() - ln_fact;
    let mut tail = 0.0;
    let mut n = first;
    loop {
        let term = ln_term.exp();
        tail += term;
        n += 1;
        ln_term += mean.ln() - (n as f64).ln();
        if (n as f64 > mean && term < tail * 1e-18) || n > first + 100_000 {
            break;
        }
    }
    tail
}

fn check_tail(space: FockSpace, alpha: C64, threshold: f64) -> Result<()> {
    let tail = poisson_tail(alpha.norm_sqr(), space.dim());
    if tail > threshold {
        return Err(Error::Truncation {
            tail,
            last_level: space.dim() - 1,
            threshold,
        });
    }
    Ok(())
}

fn coherent_amplitudes(dim: usize, alpha: C64) -> Array1<C64> {
    let mut c = Array1::zeros(dim);
    c[0] = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..dim {
        c[n] = c[n - 1] * alpha / (n as f64).sqrt();
    }
    c
}

pub fn coherent_state(space: FockSpace, alpha: C64) -> Result<Ket> {
    coherent_state_with_threshold(space, alpha, DEFAULT_TAIL_THRESHOLD)
}

pub fn coherent_state_with_threshold(space: FockSpace, alpha: C64, threshold: f64) -> Result<Ket> {
    check_tail(space, alpha, threshold)?;
    Ket::new(coherent_amplitudes(space.dim(), alpha))
}

/// Even cat `C(alpha) (|alpha> + |-alpha>)`; odd levels are exactly zero.
pub fn cat_state(space: FockSpace, alpha: C64) -> Result<Ket> {
    cat_state_with_threshold(space, alpha, DEFAULT_TAIL_THRESHOLD)
}

pub fn cat_state_with_threshold(space: FockSpace, alpha: C64, threshold: f64) -> Result<Ket> {
    check_tail(space, alpha, threshold)?;
    let mut c = coherent_amplitudes(space.dim(), alpha);
    for (n, z) in c.iter_mut().enumerate() {
        if n % 2 == 1 {
            *z = ZERO;
        }
    }
    Ket::new(c)
}

/// `D(alpha) = exp(alpha b^dagger - alpha* b)`, exponentiated in an enlarged
/// working space and truncated back.
pub fn displacement_operator(space: FockSpace, alpha: C64) -> OperatorMatrix {
    let n = space.dim();
    // the top retained level spreads over roughly (sqrt(n) + |alpha|)^2 +- a few widths
    let a = alpha.norm();
    let work = n + (4.0 * a * (a + (n as f64).sqrt())).ceil() as usize + 10;
    let b = annihilation_operator(FockSpace { dim: work });
    let bd = b.dagger();
    let generator = bd.elements() * alpha - b.elements() * alpha.conj();
    let full = linalg::expm(&generator);
    OperatorMatrix {
        elements: full.slice(ndarray::s![..n, ..n]).to_owned(),
    }
}

/// Matrix elements `<m|D(beta)|n>` of the untruncated displacement
/// operator, restricted to the levels of `space`.
///
/// Uses `b D = D (b + beta)`, which gives
/// `sqrt(m+1) D[m+1, n] = sqrt(n) D[m, n-1] + beta D[m, n]`,
/// seeded by `D[0, n] = exp(-|beta|^2/2) (-beta*)^n / sqrt(n!)`.
pub fn displacement_elements(space: FockSpace, beta: C64) -> OperatorMatrix {
    let n = space.dim();
    let mut d = Array2::zeros((n, n));
    d[[0, 0]] = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for k in 1..n {
        d[[0, k]] = d[[0, k - 1]] * (-beta.conj()) / (k as f64).sqrt();
    }
    for m in 0..n - 1 {
        let inv = 1.0 / ((m + 1) as f64).sqrt();
        for k in 0..n {
            let mut v = beta * d[[m, k]];
            if k > 0 {
                v += (k as f64).sqrt() * d[[m, k - 1]];
            }
            d[[m + 1, k]] = v * inv;
        }
    }
    OperatorMatrix { elements: d }
}

pub fn density_from_ket(psi: &Ket) -> DensityMatrix {
    let c = psi.amplitudes();
    let n = c.len();
    DensityMatrix {
        elements: Array2::from_shape_fn((n, n), |(i, j)| c[i] * c[j].conj()),
    }
}

/// `Tr rho^2`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(rho rho) = sum |rho_ij|^2 for Hermitian rho
    rho.elements.iter().map(|z| z.norm_sqr()).sum()
}

/// `Tr(rho op)`.
pub fn expectation(rho: &DensityMatrix, op: &OperatorMatrix) -> Result<C64> {
    if rho.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: op.dim(),
        });
    }
    let n = rho.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += rho.elements[[i, j]] * op.elements[[j, i]];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space(n: usize) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    fn poisson_moment(mean: f64, power: i32, terms: usize) -> f64 {
        // independent brute-force Poisson sum
        let mut p = (-mean).exp();
        let mut acc = 0.0;
        for n in 0..terms {
            if n > 0 {
                p *= mean / n as f64;
            }
            acc += (n as f64).powi(power) * p;
        }
        acc
    }

    #[test]
    fn space_rejects_single_level() {
        assert!(FockSpace::new(1).is_err());
        assert!(FockSpace::new(2).is_ok());
    }

    #[test]
    fn number_operator_is_level_index() {
        let n2 = number_operator(space(2));
        assert_eq!(n2.elements()[[0, 0]], ZERO);
        assert_eq!(n2.elements()[[1, 1]], ONE);
        let n4 = number_operator(space(4));
        for k in 0..4 {
            assert_eq!(n4.elements()[[k, k]], C64::new(k as f64, 0.0));
        }
        assert!(linalg::is_diagonal(n4.elements().view(), 0.0));
    }

    #[test]
    fn coherent_mean_photon_number() {
        let s = space(30);
        let rho = density_from_ket(&coherent_state(s, C64::new(2.0, 0.0)).unwrap());
        let n = expectation(&rho, &number_operator(s)).unwrap();
        let oracle = poisson_moment(4.0, 1, 30);
        assert!((n.re - oracle).abs() < 1e-12);
        assert!((n.re - 4.0).abs() < 1e-8);
    }

    #[test]
    fn coherent_vacuum_weight_and_zero_alpha() {
        let s = space(30);
        let psi = coherent_state(s, C64::new(2.0, 0.0)).unwrap();
        assert!((psi.amplitudes()[0].norm_sqr() - (-4.0f64).exp()).abs() < 1e-9);
        let vac = coherent_state(s, ZERO).unwrap();
        assert_eq!(vac, vacuum(s));
    }

    #[test]
    fn coherent_state_rejects_short_truncation() {
        let err = coherent_state(space(5), C64::new(2.0, 0.0)).unwrap_err();
        match err {
            Error::Truncation { tail, .. } => assert!((tail - 0.3711630648201266).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(cat_state(space(5), C64::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn cat_state_structure() {
        let s = space(30);
        assert_eq!(cat_state(s, ZERO).unwrap(), vacuum(s));
        let cat = cat_state(s, C64::new(2.0, 0.0)).unwrap();
        assert_eq!(cat.amplitudes()[1], ZERO);
        for n in (1..30).step_by(2) {
            assert_eq!(cat.amplitudes()[n], ZERO);
        }
        let rho = density_from_ket(&cat);
        let n2 = number_operator(s).compose(&number_operator(s)).unwrap();
        let got = expectation(&rho, &n2).unwrap().re;
        // oracle: brute-force sum over even-cat weights ~ x^n/n! on even n
        let mut w = Vec::new();
        let mut p = 1.0f64;
        for n in 0..30 {
            if n > 0 {
                p *= 4.0 / n as f64;
            }
            w.push(if n % 2 == 0 { p } else { 0.0 });
        }
        let z: f64 = w.iter().sum();
        let oracle: f64 = w.iter().enumerate().map(|(n, p)| (n * n) as f64 * p / z).sum();
        assert!((got - oracle).abs() < 1e-10);
        let untruncated = 16.0 + 4.0 * 4f64.tanh();
        assert!((got - untruncated).abs() < 1e-8, "cat <n^2> = {got}");
        let parity = expectation(&rho, &parity_operator(s)).unwrap();
        assert!((parity - ONE).norm() < 1e-12);
    }

    #[test]
    fn displacement_identity_and_action_on_vacuum() {
        let s = space(30);
        let d0 = displacement_operator(s, ZERO);
        assert!((d0.elements() - &linalg::identity(30)).iter().all(|z| z.norm() < 1e-14));
        let alpha = C64::new(1.0, 0.0);
        let d = displacement_operator(s, alpha);
        let psi = d.act(&vacuum(s)).unwrap();
        let coh = coherent_state(s, alpha).unwrap();
        let err = (&psi - coh.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn displacement_inverse_and_composition_law() {
        let a = C64::new(1.5, 0.0);
        let big = FockSpace::new(90).unwrap();
        let prod = displacement_operator(big, a)
            .compose(&displacement_operator(big, -a))
            .unwrap();
        let err = (&prod.elements().slice(ndarray::s![..30, ..30]) - &linalg::identity(30))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");

        // products formed in an enlarged space, compared on the retained block
        for (a, b) in [(a, C64::new(-0.7, 1.1)), (C64::new(0.0, 2.0), C64::new(2.0, 0.0))] {
            let lhs = displacement_operator(big, a)
                .compose(&displacement_operator(big, b))
                .unwrap();
            let phase = C64::new(0.0, (a * b.conj()).im).exp();
            let rhs = displacement_operator(space(30), a + b).elements() * phase;
            let err = (&lhs.elements().slice(ndarray::s![..30, ..30]) - &rhs)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "{err}");
        }
    }

    #[test]
    fn exact_displacement_elements_agree_with_enlarged_exponential() {
        let s = space(30);
        for beta in [C64::new(0.3, -0.2), C64::new(1.0, 0.0), C64::new(-1.2, 1.5)] {
            let exact = displacement_elements(s, beta);
            let big = displacement_operator(FockSpace::new(80).unwrap(), beta);
            let err = (exact.elements() - &big.elements().slice(ndarray::s![..30, ..30]))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "beta={beta}: {err}");
        }
    }

    #[test]
    fn exact_displacement_column_zero_is_coherent_state() {
        let s = space(30);
        let beta = C64::new(1.3, 0.4);
        let d = displacement_elements(s, beta);
        let coh = coherent_amplitudes(30, beta);
        for m in 0..30 {
            assert!((d.elements()[[m, 0]] - coh[m]).norm() < 1e-14);
        }
    }

    #[test]
    fn parity_squares_to_identity_and_flips_coherent_states() {
        let s = space(30);
        let p = parity_operator(s);
        assert_eq!(p.compose(&p).unwrap().elements(), &linalg::identity(30));
        let p2 = parity_operator(space(2));
        assert_eq!(p2.elements()[[1, 1]], -ONE);
        let a = C64::new(1.2, -0.8);
        let flipped = p.act(&coherent_state(s, a).unwrap()).unwrap();
        let target = coherent_state(s, -a).unwrap();
        let err = (&flipped - target.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn purity_of_mixed_and_pure_states() {
        let s = space(4);
        assert!((purity(&DensityMatrix::maximally_mixed(s)) - 0.25).abs() < 1e-15);
        let rho = density_from_ket(&fock_state(s, 2).unwrap());
        assert!((purity(&rho) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expectation_rejects_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(space(3));
        assert!(matches!(
            expectation(&rho, &number_operator(space(4))),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = C64::new(0.5, 0.0);
        m[[1, 1]] = C64::new(0.5, 0.0);
        m[[0, 1]] = C64::new(0.1, 0.1);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[[1, 0]] = C64::new(0.1, -0.1);
        assert!(DensityMatrix::new(m.clone()).is_ok());
        m[[1, 1]] = C64::new(0.6, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn fock_state_out_of_range() {
        assert!(matches!(
            fock_state(space(3), 3),
            Err(Error::LevelOutOfRange { level: 3, dim: 3 })
        ));
    }

    proptest! {
        #[test]
        fn pure_states_have_unit_trace_and_purity(
            parts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..12)
        ) {
            let amps = Array1::from_iter(parts.iter().map(|&(r, i)| C64::new(r, i)));
            prop_assume!(amps.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-6);
            let psi = Ket::new(amps).unwrap();
            let rho = density_from_ket(&psi);
            prop_assert!((rho.trace() - ONE).norm() < 1e-12);
            prop_assert!((purity(&rho) - 1.0).abs() < 1e-12);
            prop_assert!(rho.min_eigenvalue().unwrap() > -1e-10);
        }
    }
}
