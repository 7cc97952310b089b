// SPDX-License-Identifier: Apache-2.0

//! Fixed-step propagation of the fundamental matrix `dPhi/dt = L(t) Phi`.
//!
//! The generator is split into the connected components of its sparsity
//! pattern; `Phi` is block diagonal in the same partition and every block is
//! propagated independently (in parallel, on a shared, precomputed sample of
//! the scalar coefficients). For the resonator model every block is `1 x 1`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::exact::SystemSpec;
use crate::fock::DensityMatrix;
use crate::linalg::{self, LogDet};
use crate::liouville::{devectorize, system_liouvillian, vectorize, PeriodicLiouvillian};
use crate::{Error, Result};

/// Richardson deviation above which propagation is rejected.
pub const RICHARDSON_TOLERANCE: f64 = 1e-6;
pub const MIN_STEPS_PER_PERIOD: usize = 100;

/// Fourth-order fixed-step integrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Fourth-order Magnus step on two Gauss nodes, exponentiated exactly per block.
    #[default]
    Magnus4,
    /// Classical Runge–Kutta.
    Rk4,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Magnus4 => "magnus4",
            Scheme::Rk4 => "rk4",
        }
    }

    fn nodes(&self) -> &'static [f64] {
        const GAUSS: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];
        const RK: [f64; 3] = [0.0, 0.5, 1.0];
        match self {
            Scheme::Magnus4 => &GAUSS,
            Scheme::Rk4 => &RK,
        }
    }

    /// Quadrature weights on the nodes, used for `int Tr L`.
    fn weights(&self) -> &'static [f64] {
        match self {
            Scheme::Magnus4 => &[0.5, 0.5],
            Scheme::Rk4 => &[1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub steps_per_period: usize,
    pub scheme: Scheme,
    pub richardson_check: bool,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            steps_per_period: 2000,
            scheme: Scheme::Magnus4,
            richardson_check: true,
        }
    }
}

impl PropagationConfig {
    pub fn new(steps_per_period: usize, scheme: Scheme, richardson_check: bool) -> Result<Self> {
        let cfg = PropagationConfig {
            steps_per_period,
            scheme,
            richardson_check,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period < MIN_STEPS_PER_PERIOD {
            return Err(Error::StepCountTooSmall(self.steps_per_period));
        }
        Ok(())
    }

    /// Number of steps used on `[t0, t1]`.
    pub fn steps_for(&self, t0: f64, t1: f64, period: f64) -> usize {
        let exact = self.steps_per_period as f64 * (t1 - t0) / period;
        ((exact - 1e-9).ceil() as usize).max(1)
    }
}

/// One diagonal block of a block-diagonal map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapBlock {
    pub indices: Vec<usize>,
    pub matrix: Array2<C64>,
}

/// `Phi(t_start -> t_end)` stored blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalMap {
    hilbert_dim: usize,
    t_start: f64,
    t_end: f64,
    blocks: Vec<MapBlock>,
    steps: usize,
    richardson_deviation: Option<f64>,
}

impl DynamicalMap {
    pub fn identity_on(hilbert_dim: usize, partition: &[Vec<usize>], t: f64) -> Self {
        DynamicalMap {
            hilbert_dim,
            t_start: t,
            t_end: t,
            blocks: partition
                .iter()
                .map(|idx| MapBlock {
                    indices: idx.clone(),
                    matrix: linalg::identity(idx.len()),
                })
                .collect(),
            steps: 0,
            richardson_deviation: None,
        }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn size(&self) -> usize {
        self.hilbert_dim * self.hilbert_dim
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn blocks(&self) -> &[MapBlock] {
        &self.blocks
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn richardson_deviation(&self) -> Option<f64> {
        self.richardson_deviation
    }

    /// Dense `D x D` matrix.
    pub fn matrix(&self) -> Array2<C64> {
        let d = self.size();
        let mut m = Array2::zeros((d, d));
        for b in &self.blocks {
            for (i, &r) in b.indices.iter().enumerate() {
                for (j, &c) in b.indices.iter().enumerate() {
                    m[[r, c]] = b.matrix[[i, j]];
                }
            }
        }
        m
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        for b in &self.blocks {
            if let (Some(i), Some(j)) = (
                b.indices.iter().position(|&x| x == row),
                b.indices.iter().position(|&x| x == col),
            ) {
                return b.matrix[[i, j]];
            }
        }
        C64::new(0.0, 0.0)
    }

    pub fn apply_vec(&self, v: &Array1<C64>) -> Result<Array1<C64>> {
        if v.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                found: v.len(),
            });
        }
        let mut out = Array1::zeros(v.len());
        for b in &self.blocks {
            for (i, &r) in b.indices.iter().enumerate() {
                out[r] = b.indices.iter().enumerate().map(|(j, &c)| b.matrix[[i, j]] * v[c]).sum();
            }
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.hilbert_dim {
            return Err(Error::DimensionMismatch {
                expected: self.hilbert_dim,
                found: rho.dim(),
            });
        }
        devectorize(&self.apply_vec(&vectorize(rho))?)
    }

    fn same_partition(&self, other: &DynamicalMap) -> Result<()> {
        let same = self.hilbert_dim == other.hilbert_dim
            && self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.indices == b.indices);
        if !same {
            return Err(Error::InvalidState("maps have different block partitions".into()));
        }
        Ok(())
    }

    /// `self ∘ earlier`: apply `earlier`, then `self`.
    pub fn compose(&self, earlier: &DynamicalMap) -> Result<DynamicalMap> {
        self.same_partition(earlier)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&earlier.blocks)
            .map(|(a, b)| MapBlock {
                indices: a.indices.clone(),
                matrix: a.matrix.dot(&b.matrix),
            })
            .collect();
        Ok(DynamicalMap {
            hilbert_dim: self.hilbert_dim,
            t_start: earlier.t_start,
            t_end: earlier.t_end + (self.t_end - self.t_start),
            blocks,
            steps: self.steps + earlier.steps,
            richardson_deviation: None,
        })
    }

    /// `m`-fold composition with itself.
    pub fn power(&self, m: u32) -> DynamicalMap {
        let partition: Vec<Vec<usize>> = self.blocks.iter().map(|b| b.indices.clone()).collect();
        let mut acc = DynamicalMap::identity_on(self.hilbert_dim, &partition, self.t_start);
        for _ in 0..m {
            acc = self.compose(&acc).expect("same partition");
        }
        acc
    }

    /// LU determinant, blockwise, as log-magnitude and phase.
    pub fn log_det(&self) -> LogDet {
        self.blocks
            .iter()
            .map(|b| linalg::log_det(b.matrix.view()))
            .fold(LogDet::ONE, LogDet::mul)
    }

    /// `max_j |sum_n Phi[(n,n), j] - [j is diagonal]|`: zero when the map
    /// preserves the trace of every input.
    pub fn trace_defect(&self) -> f64 {
        let n = self.hilbert_dim;
        let d = self.size();
        let mut col_sums = vec![C64::new(0.0, 0.0); d];
        for b in &self.blocks {
            for (i, &r) in b.indices.iter().enumerate() {
                if r % n == r / n {
                    for (j, &c) in b.indices.iter().enumerate() {
                        col_sums[c] += b.matrix[[i, j]];
                    }
                }
            }
        }
        (0..d)
            .map(|c| {
                let want = if c % n == c / n { 1.0 } else { 0.0 };
                (col_sums[c] - want).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest elementwise difference between two maps on the same partition.
    pub fn max_abs_diff(&self, other: &DynamicalMap) -> Result<f64> {
        self.same_partition(other)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.matrix.iter().zip(b.matrix.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max))
    }
}

/// Connected components of the union sparsity pattern of all terms, each
/// sorted, ordered by smallest index.
pub fn block_partition(gen: &PeriodicLiouvillian) -> Vec<Vec<usize>> {
    let d = gen.hilbert_dim() * gen.hilbert_dim();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (_, op) in gen.terms() {
        for (r, c, _) in op.entries() {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..d {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Restriction of every generator term to one block.
struct BlockGenerator {
    indices: Vec<usize>,
    terms: Vec<Array2<C64>>,
}

fn block_generators(gen: &PeriodicLiouvillian, partition: &[Vec<usize>]) -> Vec<BlockGenerator> {
    let d = gen.hilbert_dim() * gen.hilbert_dim();
    let mut owner = vec![(0usize, 0usize); d];
    for (b, idx) in partition.iter().enumerate() {
        for (local, &g) in idx.iter().enumerate() {
            owner[g] = (b, local);
        }
    }
    let mut out: Vec<BlockGenerator> = partition
        .iter()
        .map(|idx| BlockGenerator {
            indices: idx.clone(),
            terms: vec![Array2::zeros((idx.len(), idx.len())); gen.terms().len()],
        })
        .collect();
    for (j, (_, op)) in gen.terms().iter().enumerate() {
        for (r, c, v) in op.entries() {
            let (b, lr) = owner[r];
            let (_, lc) = owner[c];
            out[b].terms[j][[lr, lc]] += v;
        }
    }
    out
}

/// Coefficients sampled at every node of every step.
struct CoefficientTable {
    t0: f64,
    h: f64,
    steps: usize,
    nodes: usize,
    terms: usize,
    values: Vec<f64>,
}

impl CoefficientTable {
    fn sample(gen: &PeriodicLiouvillian, scheme: Scheme, t0: f64, t1: f64, steps: usize) -> Self {
        let h = (t1 - t0) / steps as f64;
        let offsets = scheme.nodes();
        let nterms = gen.terms().len();
        let values: Vec<f64> = (0..steps * offsets.len())
            .into_par_iter()
            .flat_map_iter(|k| {
                let (s, q) = (k / offsets.len(), k % offsets.len());
                let t = t0 + (s as f64 + offsets[q]) * h;
                gen.terms().iter().map(move |(c, _)| c(t))
            })
            .collect();
        CoefficientTable {
            t0,
            h,
            steps,
            nodes: offsets.len(),
            terms: nterms,
            values,
        }
    }

    fn at(&self, step: usize, node: usize) -> &[f64] {
        let start = (step * self.nodes + node) * self.terms;
        &self.values[start..start + self.terms]
    }

    fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.h
    }
}

fn combine(terms: &[Array2<C64>], coeffs: &[f64]) -> Array2<C64> {
    let mut a = terms[0].mapv(|v| v * coeffs[0]);
    for (s, &c) in terms.iter().zip(coeffs).skip(1) {
        a.scaled_add(C64::new(c, 0.0), s);
    }
    a
}

fn combine_scalar(terms: &[Array2<C64>], coeffs: &[f64]) -> C64 {
    terms.iter().zip(coeffs).map(|(s, &c)| s[[0, 0]] * c).sum()
}

/// Runs one block over the whole table; optionally records `log det` after
/// every step.
fn run_block(block: &BlockGenerator, table: &CoefficientTable, scheme: Scheme, record: bool) -> (Array2<C64>, Vec<LogDet>) {
    let h = table.h;
    let k = block.indices.len();
    let mut dets = Vec::with_capacity(if record { table.steps } else { 0 });
    if k == 1 {
        let terms = &block.terms;
        match scheme {
            Scheme::Magnus4 => {
                // commuting 1x1 generators: accumulate the exponent exactly
                let mut omega = C64::new(0.0, 0.0);
                for s in 0..table.steps {
                    let a1 = combine_scalar(terms, table.at(s, 0));
                    let a2 = combine_scalar(terms, table.at(s, 1));
                    omega += (a1 + a2) * (0.5 * h);
                    if record {
                        dets.push(LogDet::from_value(omega.exp()));
                    }
                }
                (Array2::from_elem((1, 1), omega.exp()), dets)
            }
            Scheme::Rk4 => {
                let mut phi = C64::new(1.0, 0.0);
                for s in 0..table.steps {
                    let a0 = combine_scalar(terms, table.at(s, 0));
                    let am = combine_scalar(terms, table.at(s, 1));
                    let a1 = combine_scalar(terms, table.at(s, 2));
                    let k1 = a0 * phi;
                    let k2 = am * (phi + k1 * (0.5 * h));
                    let k3 = am * (phi + k2 * (0.5 * h));
                    let k4 = a1 * (phi + k3 * h);
                    phi += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
                    if record {
                        dets.push(LogDet::from_value(phi));
                    }
                }
                (Array2::from_elem((1, 1), phi), dets)
            }
        }
    } else {
        let mut phi = linalg::identity(k);
        for s in 0..table.steps {
            phi = match scheme {
                Scheme::Magnus4 => {
                    let a1 = combine(&block.terms, table.at(s, 0));
                    let a2 = combine(&block.terms, table.at(s, 1));
                    let comm = a2.dot(&a1) - a1.dot(&a2);
                    let mut omega = (&a1 + &a2) * C64::new(0.5 * h, 0.0);
                    omega.scaled_add(C64::new(h * h * 3f64.sqrt() / 12.0, 0.0), &comm);
                    linalg::expm(&omega).dot(&phi)
                }
                Scheme::Rk4 => {
                    let a0 = combine(&block.terms, table.at(s, 0));
                    let am = combine(&block.terms, table.at(s, 1));
                    let a1 = combine(&block.terms, table.at(s, 2));
                    let hh = C64::new(0.5 * h, 0.0);
                    let k1 = a0.dot(&phi);
                    let k2 = am.dot(&(&phi + &(&k1 * hh)));
                    let k3 = am.dot(&(&phi + &(&k2 * hh)));
                    let k4 = a1.dot(&(&phi + &(&k3 * C64::new(h, 0.0))));
                    &phi + &((&k1 + &((&k2 + &k3) * C64::new(2.0, 0.0)) + &k4) * C64::new(h / 6.0, 0.0))
                }
            };
            if record {
                dets.push(linalg::log_det(phi.view()));
            }
        }
        (phi, dets)
    }
}

fn check_interval(t0: f64, t1: f64) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::param("t1", format!("interval [{t0}, {t1}] is not ordered")));
    }
    Ok(())
}

fn propagate_once(
    gen: &PeriodicLiouvillian,
    partition: &[Vec<usize>],
    generators: &[BlockGenerator],
    t0: f64,
    t1: f64,
    steps: usize,
    scheme: Scheme,
) -> DynamicalMap {
    let table = CoefficientTable::sample(gen, scheme, t0, t1, steps);
    let blocks: Vec<MapBlock> = generators
        .par_iter()
        .map(|b| MapBlock {
            indices: b.indices.clone(),
            matrix: run_block(b, &table, scheme, false).0,
        })
        .collect();
    debug_assert_eq!(blocks.len(), partition.len());
    DynamicalMap {
        hilbert_dim: gen.hilbert_dim(),
        t_start: t0,
        t_end: t1,
        blocks,
        steps,
        richardson_deviation: None,
    }
}

/// Fundamental matrix of an arbitrary periodic generator over `[t0, t1]`.
pub fn propagate_generator(gen: &PeriodicLiouvillian, t0: f64, t1: f64, cfg: &PropagationConfig) -> Result<DynamicalMap> {
    cfg.validate()?;
    check_interval(t0, t1)?;
    let partition = block_partition(gen);
    if t1 == t0 {
        return Ok(DynamicalMap::identity_on(gen.hilbert_dim(), &partition, t0));
    }
    let generators = block_generators(gen, &partition);
    let steps = cfg.steps_for(t0, t1, gen.period());
    let mut map = propagate_once(gen, &partition, &generators, t0, t1, steps, cfg.scheme);
    if cfg.richardson_check {
        let fine = propagate_once(gen, &partition, &generators, t0, t1, 2 * steps, cfg.scheme);
        let deviation = map.max_abs_diff(&fine)?;
        if !(deviation <= RICHARDSON_TOLERANCE) {
            return Err(Error::NonConvergence {
                deviation,
                tolerance: RICHARDSON_TOLERANCE,
            });
        }
        map.richardson_deviation = Some(deviation);
    }
    Ok(map)
}

/// `Phi(t0 -> t1)` for the resonator model.
pub fn propagate_map(sys: &SystemSpec, t0: f64, t1: f64, cfg: &PropagationConfig) -> Result<DynamicalMap> {
    propagate_generator(&system_liouvillian(sys)?, t0, t1, cfg)
}

/// `Phi(0 -> T)`.
pub fn monodromy(sys: &SystemSpec, cfg: &PropagationConfig) -> Result<DynamicalMap> {
    monodromy_of(&system_liouvillian(sys)?, cfg)
}

pub fn monodromy_of(gen: &PeriodicLiouvillian, cfg: &PropagationConfig) -> Result<DynamicalMap> {
    propagate_generator(gen, 0.0, gen.period(), cfg)
}

/// `det Phi(t0 -> t_i)` next to `exp(int_{t0}^{t_i} Tr L)` at every grid time.
#[derive(Debug, Clone)]
pub struct JacobiTrace {
    pub times: Vec<f64>,
    pub map_log_det: Vec<LogDet>,
    /// `int Tr L` on the propagation grid, same quadrature nodes.
    pub trace_integral: Vec<C64>,
}

impl JacobiTrace {
    /// `max_i |det Phi(t_i) - exp(int Tr L)|`.
    pub fn max_abs_deviation(&self) -> f64 {
        self.map_log_det
            .iter()
            .zip(&self.trace_integral)
            .map(|(d, i)| (d.value() - i.exp()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest mismatch in `log|det|` and in the wrapped phase.
    pub fn max_log_deviation(&self) -> f64 {
        self.map_log_det
            .iter()
            .zip(&self.trace_integral)
            .map(|(d, i)| (d.log_abs - i.re).abs().max(linalg::wrap_phase(d.phase - i.im).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn liouville_jacobi(gen: &PeriodicLiouvillian, t0: f64, t1: f64, cfg: &PropagationConfig) -> Result<JacobiTrace> {
    cfg.validate()?;
    check_interval(t0, t1)?;
    let partition = block_partition(gen);
    let generators = block_generators(gen, &partition);
    let steps = cfg.steps_for(t0, t1, gen.period());
    let table = CoefficientTable::sample(gen, cfg.scheme, t0, t1, steps);
    let per_block: Vec<Vec<LogDet>> = generators
        .par_iter()
        .map(|b| run_block(b, &table, cfg.scheme, true).1)
        .collect();
    let traces: Vec<C64> = gen.terms().iter().map(|(_, s)| s.trace()).collect();
    let weights = cfg.scheme.weights();
    let mut times = vec![t0];
    let mut map_log_det = vec![LogDet::ONE];
    let mut trace_integral = vec![C64::new(0.0, 0.0)];
    let mut acc = C64::new(0.0, 0.0);
    for s in 0..steps {
        for (q, w) in weights.iter().enumerate() {
            let tr: C64 = table.at(s, q).iter().zip(&traces).map(|(&c, &t)| t * c).sum();
            acc += tr * (w * table.h);
        }
        times.push(table.time(s + 1));
        trace_integral.push(acc);
        map_log_det.push(per_block.iter().map(|d| d[s]).fold(LogDet::ONE, LogDet::mul));
    }
    Ok(JacobiTrace {
        times,
        map_log_det,
        trace_integral,
    })
}

/// `int_{t0}^{t1} Tr L` on the propagation grid of `cfg`.
pub fn trace_integral(gen: &PeriodicLiouvillian, t0: f64, t1: f64, cfg: &PropagationConfig) -> Result<C64> {
    cfg.validate()?;
    check_interval(t0, t1)?;
    let steps = cfg.steps_for(t0, t1, gen.period());
    let table = CoefficientTable::sample(gen, cfg.scheme, t0, t1, steps);
    let traces: Vec<C64> = gen.terms().iter().map(|(_, s)| s.trace()).collect();
    let mut acc = C64::new(0.0, 0.0);
    for s in 0..steps {
        for (q, w) in cfg.scheme.weights().iter().enumerate() {
            let tr: C64 = table.at(s, q).iter().zip(&traces).map(|(&c, &t)| t * c).sum();
            acc += tr * (w * table.h);
        }
    }
    Ok(acc)
}
