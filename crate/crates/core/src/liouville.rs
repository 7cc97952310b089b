// SPDX-License-Identifier: Apache-2.0

//! Superoperators on column-major vectorized density matrices.
//!
//! `vec(rho)[col * N + row] = rho[row, col]`, so `vec(A rho B) = (B^T ⊗ A) vec(rho)`.
//! The basis element `|n><m|` sits at index `m * N + n`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::exact::SystemSpec;
use crate::fock::{number_operator, DensityMatrix, FockSpace, OperatorMatrix};
use crate::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Vector index of the element `rho[row, col]`.
#[inline]
pub fn vec_index(row: usize, col: usize, dim: usize) -> usize {
    col * dim + row
}

/// `(row, col)` of vector index `i`.
#[inline]
pub fn vec_label(i: usize, dim: usize) -> (usize, usize) {
    (i % dim, i / dim)
}

pub fn vectorize(rho: &DensityMatrix) -> Array1<C64> {
    vectorize_matrix(rho.elements())
}

pub fn vectorize_matrix(m: &Array2<C64>) -> Array1<C64> {
    let n = m.nrows();
    Array1::from_shape_fn(n * m.ncols(), |i| m[[i % n, i / n]])
}

/// Inverse of [`vectorize`]. The result is not validated as a state.
pub fn devectorize(v: &Array1<C64>) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_elements_unchecked(devectorize_matrix(v)?))
}

pub fn devectorize_matrix(v: &Array1<C64>) -> Result<Array2<C64>> {
    let n = perfect_sqrt(v.len())?;
    Ok(Array2::from_shape_fn((n, n), |(r, c)| v[c * n + r]))
}

fn perfect_sqrt(len: usize) -> Result<usize> {
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len || n == 0 {
        return Err(Error::NotPerfectSquare(len));
    }
    Ok(n)
}

/// Sparse `D x D` superoperator in compressed-row form, `D = N^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    hilbert_dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
}

impl Superoperator {
    pub fn zeros(hilbert_dim: usize) -> Self {
        Self::from_triplets(hilbert_dim, std::iter::empty())
    }

    pub fn identity(hilbert_dim: usize) -> Self {
        let d = hilbert_dim * hilbert_dim;
        Self::from_triplets(hilbert_dim, (0..d).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(hilbert_dim: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let d = hilbert_dim * hilbert_dim;
        let mut map: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in entries {
            assert!(r < d && c < d, "superoperator index out of range");
            *map.entry((r, c)).or_insert(ZERO) += v;
        }
        let mut row_ptr = vec![0usize; d + 1];
        let mut cols = Vec::with_capacity(map.len());
        let mut values = Vec::with_capacity(map.len());
        for ((r, c), v) in map {
            if v == ZERO {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            values.push(v);
        }
        for r in 0..d {
            row_ptr[r + 1] += row_ptr[r];
        }
        Superoperator {
            hilbert_dim,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn from_dense(hilbert_dim: usize, m: &Array2<C64>) -> Result<Self> {
        let d = hilbert_dim * hilbert_dim;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }
        Ok(Self::from_triplets(
            hilbert_dim,
            m.indexed_iter().map(|((r, c), &v)| (r, c, v)),
        ))
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// `D = N^2`.
    pub fn size(&self) -> usize {
        self.hilbert_dim * self.hilbert_dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries as `(row, col, value)`, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.size()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.values[k]))
        })
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[span.clone()].binary_search(&col) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let d = self.size();
        let mut m = Array2::zeros((d, d));
        for (r, c, v) in self.entries() {
            m[[r, c]] = v;
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.size()).map(|i| self.element(i, i)).sum()
    }

    pub fn apply_vec(&self, v: &Array1<C64>) -> Result<Array1<C64>> {
        let d = self.size();
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        Ok(Array1::from_shape_fn(d, |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(|k| self.values[k] * v[self.cols[k]])
                .sum()
        }))
    }

    /// `devectorize(S vectorize(rho))`.
    pub fn apply(&self, rho: &Array2<C64>) -> Result<Array2<C64>> {
        if rho.nrows() != self.hilbert_dim {
            return Err(Error::DimensionMismatch {
                expected: self.hilbert_dim,
                found: rho.nrows(),
            });
        }
        devectorize_matrix(&self.apply_vec(&vectorize_matrix(rho))?)
    }

    pub fn scaled(&self, a: C64) -> Self {
        Self::from_triplets(self.hilbert_dim, self.entries().map(|(r, c, v)| (r, c, v * a)))
    }

    pub fn add(&self, other: &Superoperator) -> Result<Self> {
        if other.hilbert_dim != self.hilbert_dim {
            return Err(Error::DimensionMismatch {
                expected: self.hilbert_dim,
                found: other.hilbert_dim,
            });
        }
        Ok(Self::from_triplets(self.hilbert_dim, self.entries().chain(other.entries())))
    }
}

fn check_square(op: &OperatorMatrix, dim: usize) -> Result<()> {
    if op.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: op.dim(),
        });
    }
    Ok(())
}

/// `rho -> A rho B`, i.e. `B^T ⊗ A`.
pub fn left_right(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<Superoperator> {
    let n = a.dim();
    check_square(b, n)?;
    let (ae, be) = (a.elements(), b.elements());
    let nz_a: Vec<(usize, usize, C64)> = ae.indexed_iter().filter(|(_, v)| **v != ZERO).map(|((r, c), &v)| (r, c, v)).collect();
    let nz_b: Vec<(usize, usize, C64)> = be.indexed_iter().filter(|(_, v)| **v != ZERO).map(|((r, c), &v)| (r, c, v)).collect();
    // (A rho B)[i, l] = sum_{j,k} A[i, j] rho[j, k] B[k, l]
    let mut entries = Vec::with_capacity(nz_a.len() * nz_b.len());
    for &(i, j, av) in &nz_a {
        for &(k, l, bv) in &nz_b {
            entries.push((vec_index(i, l, n), vec_index(j, k, n), av * bv));
        }
    }
    Ok(Superoperator::from_triplets(n, entries))
}

fn unit(n: usize) -> OperatorMatrix {
    OperatorMatrix::new(crate::linalg::identity(n)).expect("identity is square")
}

/// `rho -> -i [H, rho]`.
pub fn commutator_superop(h: &OperatorMatrix) -> Result<Superoperator> {
    let id = unit(h.dim());
    let left = left_right(h, &id)?.scaled(C64::new(0.0, -1.0));
    let right = left_right(&id, h)?.scaled(C64::new(0.0, 1.0));
    left.add(&right)
}

/// `rho -> O rho O^dagger - (O^dagger O rho + rho O^dagger O) / 2`.
pub fn dissipator_superop(op: &OperatorMatrix) -> Result<Superoperator> {
    let n = op.dim();
    let id = unit(n);
    let od = op.dagger();
    let odo = od.compose(op)?;
    let jump = left_right(op, &od)?;
    let anti = left_right(&odo, &id)?.add(&left_right(&id, &odo)?)?;
    jump.add(&anti.scaled(C64::new(-0.5, 0.0)))
}

/// Scalar time dependence of one generator term.
pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `L(t) = sum_j c_j(t) S_j` with constant sparse `S_j` and `c_j(t + T) = c_j(t)`.
#[derive(Clone)]
pub struct PeriodicLiouvillian {
    period: f64,
    hilbert_dim: usize,
    terms: Vec<(Coefficient, Superoperator)>,
}

impl fmt::Debug for PeriodicLiouvillian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicLiouvillian")
            .field("period", &self.period)
            .field("hilbert_dim", &self.hilbert_dim)
            .field("terms", &self.terms.len())
            .finish()
    }
}

impl PeriodicLiouvillian {
    pub fn new(period: f64, hilbert_dim: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::param("period", format!("must be positive, got {period}")));
        }
        Ok(PeriodicLiouvillian {
            period,
            hilbert_dim,
            terms: Vec::new(),
        })
    }

    pub fn with_term(mut self, coefficient: Coefficient, op: Superoperator) -> Result<Self> {
        if op.hilbert_dim() != self.hilbert_dim {
            return Err(Error::DimensionMismatch {
                expected: self.hilbert_dim,
                found: op.hilbert_dim(),
            });
        }
        self.terms.push((coefficient, op));
        Ok(self)
    }

    pub fn with_constant(self, op: Superoperator) -> Result<Self> {
        self.with_term(Arc::new(|_| 1.0), op)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn terms(&self) -> &[(Coefficient, Superoperator)] {
        &self.terms
    }

    pub fn coefficients(&self, t: f64) -> Vec<f64> {
        self.terms.iter().map(|(c, _)| c(t)).collect()
    }

    pub fn at(&self, t: f64) -> Superoperator {
        let entries: Vec<_> = self
            .terms
            .iter()
            .flat_map(|(c, s)| {
                let a = c(t);
                s.entries().map(move |(r, col, v)| (r, col, v * a))
            })
            .collect();
        Superoperator::from_triplets(self.hilbert_dim, entries)
    }

    /// `Tr L(t)` from the cached term traces.
    pub fn trace_at(&self, t: f64) -> C64 {
        self.terms.iter().map(|(c, s)| s.trace() * c(t)).sum()
    }
}

/// `L(t) = -i[w n - g(t) n^2, .] + gamma(t) D(n)`.
pub fn system_liouvillian(sys: &SystemSpec) -> Result<PeriodicLiouvillian> {
    let n_op = number_operator(sys.space);
    let n2 = n_op.compose(&n_op)?;
    let free = commutator_superop(&n_op)?.scaled(C64::new(sys.omega, 0.0));
    // -i[-g n^2, .] = g * (i[n^2, .])
    let kerr = commutator_superop(&n2)?.scaled(C64::new(-1.0, 0.0));
    let deph = dissipator_superop(&n_op)?;
    let (bg, bgam) = (sys.bath, sys.bath);
    PeriodicLiouvillian::new(sys.period(), sys.space.dim())?
        .with_constant(free)?
        .with_term(Arc::new(move |t| bg.drive_g(t)), kerr)?
        .with_term(Arc::new(move |t| bgam.rate_gamma(t)), deph)
}

pub fn liouvillian_at(sys: &SystemSpec, t: f64) -> Result<Superoperator> {
    Ok(system_liouvillian(sys)?.at(t))
}

/// Time-independent comparison generator `-i[w n, .] + gamma0 D(n)`, viewed
/// as periodic with period `period`.
pub fn control_liouvillian(omega: f64, space: FockSpace, gamma0: f64, period: f64) -> Result<PeriodicLiouvillian> {
    let n_op = number_operator(space);
    let free = commutator_superop(&n_op)?.scaled(C64::new(omega, 0.0));
    let deph = dissipator_superop(&n_op)?.scaled(C64::new(gamma0, 0.0));
    PeriodicLiouvillian::new(period, space.dim())?
        .with_constant(free)?
        .with_constant(deph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathSpec, Modes, Temperature};
    use crate::fock::{density_from_ket, identity_operator, Ket};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
        Array2::from_shape_fn((n, n), |_| rand_c(rng))
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
        density_from_ket(&Ket::new(Array1::from_shape_fn(n, |_| rand_c(rng))).unwrap())
    }

    fn max_abs(a: &Array2<C64>) -> f64 {
        a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn reference_system(dim: usize) -> SystemSpec {
        let bath = BathSpec::new(1.0, 0.1, 2.0 * PI, 1, Modes::Finite(60), Temperature::Zero).unwrap();
        SystemSpec::new(2.0 * PI, FockSpace::new(dim).unwrap(), bath).unwrap()
    }

    #[test]
    fn vectorization_is_column_major() {
        let half = DensityMatrix::maximally_mixed(FockSpace::new(2).unwrap());
        let v = vectorize(&half);
        assert_eq!(v.to_vec(), vec![C64::new(0.5, 0.0), ZERO, ZERO, C64::new(0.5, 0.0)]);
        let m = Array2::from_shape_fn((2, 2), |(r, c)| C64::new((10 * r + c) as f64, 0.0));
        assert_eq!(vectorize_matrix(&m)[1], C64::new(10.0, 0.0));
        assert_eq!(vec_label(1, 2), (1, 0));
        assert_eq!(vec_index(1, 0, 2), 1);
    }

    #[test]
    fn vectorization_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_state(&mut rng, 5);
        assert_eq!(devectorize(&vectorize(&rho)).unwrap(), rho);
        assert_eq!(devectorize(&Array1::zeros(8)).unwrap_err(), Error::NotPerfectSquare(8));
    }

    #[test]
    fn left_right_matches_matrix_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = OperatorMatrix::new(random_matrix(&mut rng, 4)).unwrap();
        let b = OperatorMatrix::new(random_matrix(&mut rng, 4)).unwrap();
        let x = random_matrix(&mut rng, 4);
        let s = left_right(&a, &b).unwrap();
        let want = a.elements().dot(&x).dot(b.elements());
        assert!(max_abs(&(s.apply(&x).unwrap() - want)) < 1e-13);
        // dense Kronecker oracle B^T ⊗ A
        let dense = s.to_dense();
        for r in 0..16 {
            for c in 0..16 {
                let kron = b.elements()[[c / 4, r / 4]] * a.elements()[[r % 4, c % 4]];
                assert!((dense[[r, c]] - kron).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn dissipator_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let o = OperatorMatrix::new(random_matrix(&mut rng, 4)).unwrap();
        let rho = random_matrix(&mut rng, 4);
        let od = o.dagger();
        let odo = od.elements().dot(o.elements());
        let want = o.elements().dot(&rho).dot(od.elements()) - (odo.dot(&rho) + rho.dot(&odo)) * 0.5;
        let got = dissipator_superop(&o).unwrap().apply(&rho).unwrap();
        assert!(max_abs(&(got - want)) < 1e-12);
    }

    #[test]
    fn dissipator_special_cases() {
        let s2 = FockSpace::new(2).unwrap();
        assert_eq!(dissipator_superop(&identity_operator(s2)).unwrap().nnz(), 0);
        let d = dissipator_superop(&number_operator(s2)).unwrap();
        let mut rho = Array2::zeros((2, 2));
        rho[[1, 0]] = C64::new(1.0, 0.0);
        let out = d.apply(&rho).unwrap();
        assert_eq!(out[[1, 0]], C64::new(-0.5, 0.0));
        assert_eq!(out[[0, 1]], ZERO);
    }

    #[test]
    fn liouvillian_is_diagonal_with_known_entries() {
        let sys = reference_system(4);
        let t = 0.23;
        let l = liouvillian_at(&sys, t).unwrap();
        let (g, gam) = (sys.bath.drive_g(t), sys.bath.rate_gamma(t));
        for i in 0..16 {
            for j in 0..16 {
                if i != j {
                    assert_eq!(l.element(i, j), ZERO);
                }
            }
            let (n, m) = vec_label(i, 4);
            let (nf, mf) = (n as f64, m as f64);
            let want = C64::new(
                -0.5 * gam * (nf - mf).powi(2),
                -((nf - mf) * sys.omega - g * (nf * nf - mf * mf)),
            );
            assert!((l.element(i, i) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn liouvillian_trace_and_periodicity() {
        let sys = reference_system(4);
        let gen = system_liouvillian(&sys).unwrap();
        for t in [0.1, 0.37, 0.8] {
            let sum_sq: f64 = (0..4).flat_map(|n| (0..4).map(move |m| ((n - m) as f64).powi(2))).sum();
            let want = -0.5 * sys.bath.rate_gamma(t) * sum_sq;
            let elementwise = gen.at(t).trace();
            assert!((elementwise.re - want).abs() < 1e-12 && elementwise.im.abs() < 1e-12);
            assert!((gen.trace_at(t) - elementwise).norm() < 1e-12);
            let shifted = gen.at(t + 1.0).to_dense() - gen.at(t).to_dense();
            assert!(max_abs(&shifted) < 1e-10);
        }
    }

    #[test]
    fn zero_coupling_is_pure_commutator() {
        let bath = BathSpec::new(0.0, 0.1, 2.0 * PI, 1, Modes::Finite(60), Temperature::Zero).unwrap();
        let sys = SystemSpec::new(2.0 * PI, FockSpace::new(3).unwrap(), bath).unwrap();
        let l = liouvillian_at(&sys, 0.4).unwrap();
        let h = number_operator(sys.space).elements() * C64::new(sys.omega, 0.0);
        let want = commutator_superop(&OperatorMatrix::new(h).unwrap()).unwrap();
        assert!(max_abs(&(l.to_dense() - want.to_dense())) < 1e-15);
    }

    #[test]
    fn sparse_arithmetic() {
        let id = Superoperator::identity(3);
        assert_eq!(id.trace(), C64::new(9.0, 0.0));
        let twice = id.add(&id).unwrap();
        assert_eq!(twice.element(4, 4), C64::new(2.0, 0.0));
        assert_eq!(twice.add(&id.scaled(C64::new(-2.0, 0.0))).unwrap().nnz(), 0);
        let dense = Array2::from_shape_fn((9, 9), |(r, c)| C64::new((r * 9 + c) as f64, 0.0));
        assert_eq!(Superoperator::from_dense(3, &dense).unwrap().to_dense(), dense);
        assert!(Superoperator::from_dense(2, &dense).is_err());
    }
}
