//! Dense and sparse linear algebra kernels.

mod bessel;
mod propagate;
mod sparse;

pub use bessel::{bessel_j_sequence, chebyshev_order};
pub use propagate::{
    evolve, propagate, propagate_nonhermitian, DecayPropagator, Method, PropagationOptions, DEFAULT_PROPAGATION_TOL,
    DENSE_PROPAGATION_THRESHOLD,
};
pub use sparse::CsrMatrix;

use crate::error::{domain, Error, Result};
use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use std::sync::Once;

/// Complex scalar used throughout.
pub type C64 = Complex64;

static SEQUENTIAL: Once = Once::new();

/// Kernels run single-threaded; parallelism lives across realizations.
pub(crate) fn sequential_kernels() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Eigendecomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending.
    pub values: Vec<f64>,
    dim: usize,
    /// Column-major, one eigenvector per column.
    vectors: Vec<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim.max(1))
    }
}

/// Symmetric eigensolve. Each eigenvector is signed so that its first
/// component of non-negligible magnitude is positive.
pub fn eigh(h: MatRef<'_, f64>) -> Result<Spectrum> {
    sequential_kernels();
    let n = h.nrows();
    if h.ncols() != n {
        return Err(domain(format!("eigh needs a square matrix, got {}x{}", n, h.ncols())));
    }
    let mut scale = 0.0f64;
    let mut asym = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let v = h[(i, j)];
            if !v.is_finite() {
                return Err(domain("eigh input has non-finite entries"));
            }
            scale = scale.max(v.abs());
            asym = asym.max((v - h[(j, i)]).abs());
        }
    }
    if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(domain(format!("eigh input is not symmetric (max asymmetry {asym:e})")));
    }
    if n == 0 {
        return Ok(Spectrum {
            values: vec![],
            dim: 0,
            vectors: vec![],
        });
    }
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Singular(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = eig.S();
    let u = eig.U();
    let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for j in 0..n {
        let col = u.col(j);
        let max = (0..n).fold(0.0f64, |m, i| m.max(col[i].abs()));
        let pivot = (0..n).map(|i| col[i]).find(|v| v.abs() > 1e-8 * max).unwrap_or(1.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.extend((0..n).map(|i| sign * col[i]));
    }
    Ok(Spectrum {
        values,
        dim: n,
        vectors,
    })
}

/// Solution of a dense complex system with diagnostics.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<C64>,
    /// Estimate of the 1-norm condition number.
    pub condition: f64,
    /// `‖Ax − b‖₂ / ‖b‖₂`.
    pub relative_residual: f64,
}

pub const CONDITION_WARNING: f64 = 1e12;

/// LU solve of `A x = b` with partial pivoting.
pub fn solve_complex(a: MatRef<'_, C64>, b: &[C64]) -> Result<LinearSolution> {
    sequential_kernels();
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(domain(format!(
            "solve_complex shape mismatch: {}x{} matrix, rhs of length {}",
            n,
            a.ncols(),
            b.len()
        )));
    }
    if n == 0 {
        return Ok(LinearSolution {
            x: vec![],
            condition: 0.0,
            relative_residual: 0.0,
        });
    }
    let mut a_norm1 = 0.0f64;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            let v = a[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(domain("solve_complex input has non-finite entries"));
            }
            col += v.norm();
        }
        a_norm1 = a_norm1.max(col);
    }
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let min_pivot = (0..n).fold(f64::INFINITY, |m, i| m.min(u[(i, i)].norm()));
    if !(min_pivot > f64::EPSILON * a_norm1 * 1e-4) {
        return Err(Error::Singular(format!(
            "matrix is singular to working precision (smallest pivot {min_pivot:e})"
        )));
    }

    let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    let sol = lu.solve(&rhs);
    let x: Vec<C64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Singular("solution overflowed".into()));
    }

    // Hager / Higham estimate of ‖A⁻¹‖₁.
    let mut probe = Mat::from_fn(n, 1, |_, _| C64::new(1.0 / n as f64, 0.0));
    let mut inv_norm = 0.0f64;
    let mut last_index = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&probe);
        inv_norm = (0..n).map(|i| y[(i, 0)].norm()).sum();
        let signs = Mat::from_fn(n, 1, |i, _| {
            let v = y[(i, 0)];
            let m = v.norm();
            if m > 0.0 {
                v / m
            } else {
                C64::new(1.0, 0.0)
            }
        });
        let z = lu.solve_adjoint(&signs);
        let (jmax, zmax) = (0..n)
            .map(|i| (i, z[(i, 0)].norm()))
            .fold((0, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * probe[(i, 0)]).re).sum();
        if zmax <= ztx || jmax == last_index {
            break;
        }
        last_index = jmax;
        probe = Mat::from_fn(n, 1, |i, _| if i == jmax { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    }
    let condition = a_norm1 * inv_norm;
    if condition > CONDITION_WARNING {
        log::warn!("linear system is ill-conditioned (condition estimate {condition:e})");
    }

    let b_norm = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let mut r2 = 0.0;
    for i in 0..n {
        let mut acc = -b[i];
        for j in 0..n {
            acc += a[(i, j)] * x[j];
        }
        r2 += acc.norm_sqr();
    }
    let relative_residual = if b_norm > 0.0 { r2.sqrt() / b_norm } else { r2.sqrt() };
    Ok(LinearSolution {
        x,
        condition,
        relative_residual,
    })
}

/// 2-norm of a complex vector.
pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
