//! Saddle-point systems of one time step and their solution.
//!
//! Unknowns are ordered `(u, p, lambda)` where `lambda` is the multiplier of
//! the zero-mean pressure constraint:
//!
//! ```text
//! [ sigma M + A + C   B^T   0 ] [u]        [rhs_u]
//! [ B                 -S    m ] [p]      = [rhs_p]
//! [ 0                 m^T   0 ] [lambda]   [0    ]
//! ```

use std::fmt;
use std::str::FromStr;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix, Triplets};

/// Relative residual every accepted solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SolverBackend {
    /// Sparse LU with partial pivoting.
    #[default]
    Direct,
    /// Restarted GMRES with an ILU(0) preconditioner.
    Gmres,
}

impl SolverBackend {
    /// Smallest level that defaults to GMRES.
    pub const KRYLOV_LEVEL: u32 = 3;

    /// Default backend at refinement `level`: LU on coarse meshes, GMRES
    /// from [`Self::KRYLOV_LEVEL`] on.
    pub fn for_level(level: u32) -> Self {
        if level >= Self::KRYLOV_LEVEL {
            SolverBackend::Gmres
        } else {
            SolverBackend::Direct
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverBackend::Direct => "direct",
            SolverBackend::Gmres => "gmres",
        }
    }
}

impl fmt::Display for SolverBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SolverBackend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(SolverBackend::Direct),
            "gmres" => Ok(SolverBackend::Gmres),
            _ => Err(Error::UnknownName {
                kind: "solver backend",
                value: s.to_string(),
            }),
        }
    }
}

/// Solution of one saddle-point solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub lambda: f64,
}

/// The step operator without convection, plus the map that adds a
/// convection matrix on a fixed pattern.
#[derive(Debug, Clone)]
pub struct SaddleOperator {
    pub matrix: CsrMatrix,
    pub n_u: usize,
    pub n_p: usize,
    conv_slots: Vec<usize>,
}

impl SaddleOperator {
    /// Build from the velocity block `sigma M + A`, the coupling `B`
    /// (pressure rows), the scaled pressure stabilization `S` and the
    /// constraint vector `m`. Entries of `conv_pattern` are reserved in the
    /// velocity block even where they are zero.
    pub fn assemble(
        velocity: &CsrMatrix,
        coupling: &CsrMatrix,
        pressure_stab: &CsrMatrix,
        mean: &[f64],
        conv_pattern: Option<&CsrMatrix>,
    ) -> Result<Self> {
        let n_u = velocity.nrows;
        let n_p = pressure_stab.nrows;
        let check = |expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected, got })
            }
        };
        check(n_u, velocity.ncols)?;
        check(n_u, coupling.ncols)?;
        check(n_p, coupling.nrows)?;
        check(n_p, pressure_stab.ncols)?;
        check(n_p, mean.len())?;
        let n = n_u + n_p + 1;
        let mut trip = Triplets::new(n, n);
        trip.add_block(velocity, 0, 0, 1.0);
        if let Some(c) = conv_pattern {
            check(n_u, c.nrows)?;
            for r in 0..c.nrows {
                for (col, _) in c.row(r) {
                    trip.push(r, col, 0.0);
                }
            }
        }
        trip.add_block_transposed(coupling, 0, n_u, 1.0);
        trip.add_block(coupling, n_u, 0, 1.0);
        trip.add_block(pressure_stab, n_u, n_u, -1.0);
        for (i, &mi) in mean.iter().enumerate() {
            trip.push(n_u + i, n - 1, mi);
            trip.push(n - 1, n_u + i, mi);
        }
        // Explicit zero so the last pivot exists in incomplete factorizations.
        trip.push(n - 1, n - 1, 0.0);
        let matrix = trip.into_csr();
        let conv_slots = match conv_pattern {
            Some(c) => {
                let mut slots = Vec::with_capacity(c.nnz());
                for r in 0..c.nrows {
                    for (col, _) in c.row(r) {
                        slots.push(matrix.position(r, col).expect("reserved entry"));
                    }
                }
                slots
            }
            None => Vec::new(),
        };
        Ok(Self {
            matrix,
            n_u,
            n_p,
            conv_slots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_u + self.n_p + 1
    }

    /// Operator with `c` added to the velocity block. `c` must have the
    /// pattern given at construction.
    pub fn with_convection(&self, c: &CsrMatrix) -> CsrMatrix {
        assert_eq!(c.nnz(), self.conv_slots.len(), "convection pattern changed");
        let mut k = self.matrix.clone();
        for (slot, v) in self.conv_slots.iter().zip(&c.values) {
            k.values[*slot] += v;
        }
        k
    }

    pub fn rhs(&self, rhs_u: &[f64], rhs_p: &[f64]) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.dim());
        b.extend_from_slice(rhs_u);
        b.extend_from_slice(rhs_p);
        b.push(0.0);
        b
    }

    pub fn split(&self, x: &[f64]) -> SaddleSolution {
        SaddleSolution {
            u: x[..self.n_u].to_vec(),
            p: x[self.n_u..self.n_u + self.n_p].to_vec(),
            lambda: x[self.n_u + self.n_p],
        }
    }
}

/// `||K x - b|| / ||b||`, or `||K x||` when `b = 0`.
pub fn relative_residual(k: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = vec![0.0; k.nrows];
    k.spmv_into(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let nb = norm2(b);
    if nb > 0.0 {
        norm2(&r) / nb
    } else {
        norm2(&r)
    }
}

fn to_faer(k: &CsrMatrix) -> SparseColMat<usize, f64> {
    // The row-compressed arrays of K^T are the column-compressed arrays of K.
    let t = k.transpose();
    let symbolic = SymbolicSparseColMat::new_checked(k.nrows, k.ncols, t.row_ptr, None, t.col_idx);
    SparseColMat::new(symbolic, t.values)
}

/// Sparse LU factors of a square matrix.
pub struct DirectFactor {
    lu: Lu<usize, f64>,
    n: usize,
}

impl DirectFactor {
    pub fn new(k: &CsrMatrix) -> Result<Self> {
        let a = to_faer(k);
        let symbolic = SymbolicLu::try_new(a.symbolic()).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Self::with_symbolic(&a, symbolic)
    }

    fn with_symbolic(a: &SparseColMat<usize, f64>, symbolic: SymbolicLu<usize>) -> Result<Self> {
        let lu = Lu::try_new_with_symbolic(symbolic, a.as_ref()).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { lu, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(k: &CsrMatrix) -> Result<Self> {
        let n = k.nrows;
        let mut lu = k.clone();
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            *d = lu.position(i, i).ok_or_else(|| Error::Factorization(format!("no diagonal entry in row {i}")))?;
        }
        let scale = k.max_abs().max(f64::MIN_POSITIVE);
        let mut where_in_row = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                where_in_row[lu.col_idx[p]] = p;
            }
            for p in start..end {
                let kcol = lu.col_idx[p];
                if kcol >= i {
                    break;
                }
                let pivot = lu.values[diag[kcol]];
                let lik = lu.values[p] / pivot;
                lu.values[p] = lik;
                for q in diag[kcol] + 1..lu.row_ptr[kcol + 1] {
                    let j = lu.col_idx[q];
                    let w = where_in_row[j];
                    if w != usize::MAX {
                        lu.values[w] -= lik * lu.values[q];
                    }
                }
            }
            let d = &mut lu.values[diag[i]];
            if d.abs() < 1e-14 * scale {
                *d = if *d < 0.0 { -1e-8 * scale } else { 1e-8 * scale };
            }
            for p in start..end {
                where_in_row[lu.col_idx[p]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag })
    }

    /// `x = (LU)^-1 b`.
    pub fn apply(&self, b: &[f64], x: &mut [f64]) {
        let n = self.diag.len();
        x.copy_from_slice(b);
        for i in 0..n {
            let mut s = x[i];
            for p in self.lu.row_ptr[i]..self.diag[i] {
                s -= self.lu.values[p] * x[self.lu.col_idx[p]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..self.lu.row_ptr[i + 1] {
                s -= self.lu.values[p] * x[self.lu.col_idx[p]];
            }
            x[i] = s / self.lu.values[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresConfig {
    pub restart: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 100,
            max_iter: 5000,
            tol: 1e-11,
        }
    }
}

/// Right-preconditioned restarted GMRES. Returns the iterate and the number
/// of inner iterations, or an error if the relative residual stays above
/// `cfg.tol` after `cfg.max_iter` iterations.
pub fn gmres(k: &CsrMatrix, b: &[f64], x0: &[f64], pre: &Ilu0, cfg: &GmresConfig) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let nb = norm2(b);
    let mut x = x0.to_vec();
    if nb == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let m = cfg.restart.max(1);
    let mut iters = 0;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        k.spmv_into(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        if beta / nb <= cfg.tol {
            return Ok((x, iters));
        }
        if iters >= cfg.max_iter {
            return Err(Error::NotConverged {
                iterations: iters,
                residual: beta / nb,
            });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut j = 0;
        while j < m && iters < cfg.max_iter {
            pre.apply(&v[j], &mut z);
            k.spmv_into(&z, &mut w);
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                h[i][j] = hij;
                for (wl, vl) in w.iter_mut().zip(vi) {
                    *wl -= hij * vl;
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            iters += 1;
            j += 1;
            if g[j].abs() / nb <= cfg.tol * 0.5 || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // Back substitution on the triangular least-squares system.
        let mut y = vec![0.0; j];
        for i in (0..j).rev() {
            let mut s = g[i];
            for l in i + 1..j {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        let mut dz = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            for (d, vl) in dz.iter_mut().zip(&v[i]) {
                *d += yi * vl;
            }
        }
        pre.apply(&dz, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
    }
}

/// Linear solver with the residual contract, caching the LU factors while
/// the matrix is unchanged and the symbolic analysis while its pattern is.
pub struct LinearSolver {
    pub backend: SolverBackend,
    pub tol: f64,
    pub gmres: GmresConfig,
    cache: Option<Cached>,
}

struct Cached {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symbolic: Option<SymbolicLu<usize>>,
    direct: Option<DirectFactor>,
    ilu: Option<Ilu0>,
}

impl LinearSolver {
    pub fn new(backend: SolverBackend) -> Self {
        Self {
            backend,
            tol: RESIDUAL_TOL,
            gmres: GmresConfig::default(),
            cache: None,
        }
    }

    /// Solve `k x = b`. Direct solves get up to three steps of iterative
    /// refinement; the result is rejected if the relative residual exceeds
    /// `self.tol`.
    pub fn solve(&mut self, k: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != k.nrows || k.nrows != k.ncols {
            return Err(Error::DimensionMismatch {
                expected: k.nrows,
                got: b.len(),
            });
        }
        self.prepare(k)?;
        let cache = self.cache.as_ref().expect("prepared");
        let x = match self.backend {
            SolverBackend::Direct => {
                let lu = cache.direct.as_ref().expect("factorized");
                let mut x = lu.solve(b);
                for _ in 0..3 {
                    if relative_residual(k, &x, b) <= self.tol {
                        break;
                    }
                    let mut r = k.spmv(&x)?;
                    for (ri, bi) in r.iter_mut().zip(b) {
                        *ri = bi - *ri;
                    }
                    for (xi, di) in x.iter_mut().zip(lu.solve(&r)) {
                        *xi += di;
                    }
                }
                x
            }
            SolverBackend::Gmres => {
                let pre = cache.ilu.as_ref().expect("factorized");
                let cfg = GmresConfig {
                    tol: self.gmres.tol.min(self.tol),
                    ..self.gmres
                };
                let (x, iters) = gmres(k, b, &vec![0.0; b.len()], pre, &cfg)?;
                log::debug!("gmres converged in {iters} iterations");
                x
            }
        };
        let res = relative_residual(k, &x, b);
        if !(res <= self.tol) {
            return Err(Error::ResidualTooLarge {
                residual: res,
                tolerance: self.tol,
            });
        }
        Ok(x)
    }

    fn prepare(&mut self, k: &CsrMatrix) -> Result<()> {
        let same_pattern = self
            .cache
            .as_ref()
            .is_some_and(|c| c.row_ptr == k.row_ptr && c.col_idx == k.col_idx);
        if same_pattern && self.cache.as_ref().is_some_and(|c| c.values == k.values) {
            return Ok(());
        }
        let mut symbolic = if same_pattern {
            self.cache.take().and_then(|c| c.symbolic)
        } else {
            None
        };
        let (direct, ilu) = match self.backend {
            SolverBackend::Direct => {
                let a = to_faer(k);
                let sym = match symbolic.take() {
                    Some(s) => s,
                    None => SymbolicLu::try_new(a.symbolic()).map_err(|e| Error::Factorization(format!("{e:?}")))?,
                };
                symbolic = Some(sym.clone());
                (Some(DirectFactor::with_symbolic(&a, sym)?), None)
            }
            SolverBackend::Gmres => (None, Some(Ilu0::new(k)?)),
        };
        self.cache = Some(Cached {
            row_ptr: k.row_ptr.clone(),
            col_idx: k.col_idx.clone(),
            values: k.values.clone(),
            symbolic,
            direct,
            ilu,
        });
        Ok(())
    }
}

/// Solve one saddle system and split the result.
pub fn solve_step(
    solver: &mut LinearSolver,
    op: &SaddleOperator,
    k: &CsrMatrix,
    rhs_u: &[f64],
    rhs_p: &[f64],
) -> Result<SaddleSolution> {
    let b = op.rhs(rhs_u, rhs_p);
    let x = solver.solve(k, &b)?;
    Ok(op.split(&x))
}
