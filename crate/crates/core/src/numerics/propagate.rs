use super::{bessel_j_sequence, chebyshev_order, eigh, norm, sequential_kernels, CsrMatrix, C64};
use crate::error::{domain, Error, Result};
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatRef, Side};

pub const DEFAULT_PROPAGATION_TOL: f64 = 1e-8;

/// Below this dimension `Method::Auto` diagonalizes densely.
pub const DENSE_PROPAGATION_THRESHOLD: usize = 256;

/// Largest `‖H‖·τ` covered by a single Chebyshev expansion.
const MAX_STEP_ARGUMENT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Auto,
    Dense,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    /// Target 2-norm error of the final state.
    pub tol: f64,
    pub method: Method,
    pub dense_threshold: usize,
    /// Cap on the Chebyshev order of a single step.
    pub max_order: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            tol: DEFAULT_PROPAGATION_TOL,
            method: Method::Auto,
            dense_threshold: DENSE_PROPAGATION_THRESHOLD,
            max_order: 20_000,
        }
    }
}

/// `e^{−iHt} ψ0`.
pub fn propagate(h: &CsrMatrix, psi0: &[C64], t: f64, opts: &PropagationOptions) -> Result<Vec<C64>> {
    let mut out = Vec::new();
    evolve(h, psi0, &[t], opts, |_, psi| out = psi.to_vec())?;
    Ok(out)
}

/// Calls `observe(i, ψ(times[i]))` for each observation time in order.
/// Times must be nonnegative and nondecreasing.
pub fn evolve(
    h: &CsrMatrix,
    psi0: &[C64],
    times: &[f64],
    opts: &PropagationOptions,
    mut observe: impl FnMut(usize, &[C64]),
) -> Result<()> {
    let n = h.dim();
    if psi0.len() != n {
        return Err(domain(format!("state has length {}, Hamiltonian has dimension {n}", psi0.len())));
    }
    let nrm = norm(psi0);
    if (nrm - 1.0).abs() > 1e-6 {
        return Err(domain(format!("initial state must be normalized (norm {nrm})")));
    }
    let mut prev = 0.0;
    for &t in times {
        if !(t.is_finite() && t >= prev) {
            return Err(domain(format!("observation times must be finite, nonnegative and sorted (got {t})")));
        }
        prev = t;
    }
    if h.asymmetry() > 1e-12 * h.max_abs().max(f64::MIN_POSITIVE) {
        return Err(domain("propagate needs a symmetric Hamiltonian"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::ToleranceUnreachable {
            tol: opts.tol,
            cap: opts.max_order,
        });
    }
    let dense = match opts.method {
        Method::Dense => true,
        Method::Chebyshev => false,
        Method::Auto => n <= opts.dense_threshold,
    };
    if dense {
        evolve_dense(h, psi0, times, observe)
    } else {
        Chebyshev::new(h, times, opts)?.run(psi0, times, &mut observe)
    }
}

fn evolve_dense(h: &CsrMatrix, psi0: &[C64], times: &[f64], mut observe: impl FnMut(usize, &[C64])) -> Result<()> {
    let spec = eigh(h.to_dense().as_ref())?;
    let n = h.dim();
    let weights: Vec<C64> = spec
        .vectors()
        .map(|v| v.iter().zip(psi0).map(|(a, p)| p * a).sum())
        .collect();
    let mut psi = vec![C64::new(0.0, 0.0); n];
    for (i, &t) in times.iter().enumerate() {
        if t == 0.0 {
            observe(i, psi0);
            continue;
        }
        psi.iter_mut().for_each(|p| *p = C64::new(0.0, 0.0));
        for ((v, w), &e) in spec.vectors().zip(&weights).zip(&spec.values) {
            let c = w * C64::from_polar(1.0, -e * t);
            for (p, a) in psi.iter_mut().zip(v) {
                *p += c * a;
            }
        }
        observe(i, &psi);
    }
    Ok(())
}

struct Chebyshev<'a> {
    h: &'a CsrMatrix,
    center: f64,
    half_width: f64,
    step_tol: f64,
    max_order: usize,
    cached: Option<(f64, Vec<C64>)>,
}

impl<'a> Chebyshev<'a> {
    fn new(h: &'a CsrMatrix, times: &[f64], opts: &PropagationOptions) -> Result<Self> {
        let (lo, hi) = h.gershgorin();
        let center = 0.5 * (hi + lo);
        let half_width = (0.5 * (hi - lo) * (1.0 + 1e-12)).max(1e-12);
        let mut pieces = 0usize;
        let mut prev = 0.0;
        for &t in times {
            pieces += Self::pieces(half_width * (t - prev));
            prev = t;
        }
        Ok(Chebyshev {
            h,
            center,
            half_width,
            step_tol: opts.tol / pieces.max(1) as f64,
            max_order: opts.max_order,
            cached: None,
        })
    }

    fn pieces(z: f64) -> usize {
        if z <= 0.0 {
            0
        } else {
            (z / MAX_STEP_ARGUMENT).ceil() as usize
        }
    }

    fn run(mut self, psi0: &[C64], times: &[f64], observe: &mut impl FnMut(usize, &[C64])) -> Result<()> {
        let n = psi0.len();
        let mut psi = psi0.to_vec();
        let mut work = [vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n]];
        let mut prev = 0.0;
        for (i, &t) in times.iter().enumerate() {
            let span = t - prev;
            let m = Self::pieces(self.half_width * span);
            for _ in 0..m {
                self.step(&mut psi, span / m as f64, &mut work)?;
            }
            prev = t;
            observe(i, &psi);
        }
        Ok(())
    }

    fn coefficients(&mut self, tau: f64) -> Result<&[C64]> {
        if self.cached.as_ref().map_or(true, |(t, _)| *t != tau) {
            let z = self.half_width * tau;
            let order = chebyshev_order(z, self.step_tol, self.max_order).ok_or(Error::ToleranceUnreachable {
                tol: self.step_tol,
                cap: self.max_order,
            })?;
            let j = bessel_j_sequence(z, order);
            let phase = C64::from_polar(1.0, -self.center * tau);
            let minus_i = C64::new(0.0, -1.0);
            let mut power = C64::new(1.0, 0.0);
            let coeffs = j
                .iter()
                .enumerate()
                .map(|(k, &jk)| {
                    let c = phase * power * if k == 0 { jk } else { 2.0 * jk };
                    power *= minus_i;
                    c
                })
                .collect();
            self.cached = Some((tau, coeffs));
        }
        Ok(&self.cached.as_ref().expect("filled above").1)
    }

    fn step(&mut self, psi: &mut [C64], tau: f64, work: &mut [Vec<C64>; 3]) -> Result<()> {
        let (h, center, scale) = (self.h, self.center, 1.0 / self.half_width);
        let coeffs = self.coefficients(tau)?;
        let [prev, cur, next] = work;
        prev.copy_from_slice(psi);
        let mut acc: Vec<C64> = prev.iter().map(|p| p * coeffs[0]).collect();
        if coeffs.len() > 1 {
            h.shifted_matvec_c(prev, center, scale, cur);
            for (a, c) in acc.iter_mut().zip(cur.iter()) {
                *a += c * coeffs[1];
            }
        }
        for &ck in &coeffs[2.min(coeffs.len())..] {
            h.shifted_matvec_c(cur, center, scale, next);
            for ((nx, pv), a) in next.iter_mut().zip(prev.iter()).zip(acc.iter_mut()) {
                *nx = 2.0 * *nx - pv;
                *a += *nx * ck;
            }
            std::mem::swap(prev, cur);
            std::mem::swap(cur, next);
        }
        psi.copy_from_slice(&acc);
        Ok(())
    }
}

/// Propagator `e^{−iKt}` for a dissipative generator `K`, whose
/// anti-Hermitian part `(K − K†)/2i` must be negative semidefinite.
pub struct DecayPropagator {
    dim: usize,
    values: Vec<C64>,
    vectors: Mat<C64>,
    lu: PartialPivLu<C64>,
}

impl DecayPropagator {
    pub fn new(k: MatRef<'_, C64>) -> Result<Self> {
        sequential_kernels();
        let n = k.nrows();
        if k.ncols() != n || n == 0 {
            return Err(domain(format!("generator must be square and nonempty, got {}x{}", n, k.ncols())));
        }
        let gain = Mat::from_fn(n, n, |i, j| (k[(i, j)] - k[(j, i)].conj()) / C64::new(0.0, 2.0));
        let scale = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .fold(0.0f64, |m, (i, j)| m.max(k[(i, j)].norm()));
        let g = gain
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Singular(format!("eigensolver failed: {e:?}")))?;
        let top = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top > 1e-12 * scale.max(1.0) {
            return Err(domain(format!("generator has gain (anti-Hermitian eigenvalue {top:e} > 0)")));
        }
        let eig = k
            .eigen()
            .map_err(|e| Error::Singular(format!("eigensolver failed: {e:?}")))?;
        let vectors = eig.U().to_owned();
        let values: Vec<C64> = (0..n).map(|i| eig.S()[i]).collect();
        let lu = vectors.partial_piv_lu();
        let min_pivot = (0..n).fold(f64::INFINITY, |m, i| m.min(lu.U()[(i, i)].norm()));
        if !(min_pivot > 1e-12) {
            return Err(Error::Singular("generator is not diagonalizable to working precision".into()));
        }
        Ok(DecayPropagator {
            dim: n,
            values,
            vectors,
            lu,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn weights(&self, psi0: &[C64]) -> Result<Mat<C64>> {
        if psi0.len() != self.dim {
            return Err(domain(format!("state has length {}, generator has dimension {}", psi0.len(), self.dim)));
        }
        Ok(self.lu.solve(Mat::from_fn(self.dim, 1, |i, _| psi0[i])))
    }

    fn apply(&self, w: &Mat<C64>, t: f64) -> Vec<C64> {
        let mut out = vec![C64::default(); self.dim];
        for (j, &lambda) in self.values.iter().enumerate() {
            let c = w[(j, 0)] * (C64::new(0.0, -t) * lambda).exp();
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.vectors[(i, j)] * c;
            }
        }
        out
    }

    pub fn propagate(&self, psi0: &[C64], t: f64) -> Result<Vec<C64>> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(domain(format!("time must be finite and nonnegative (got {t})")));
        }
        Ok(self.apply(&self.weights(psi0)?, t))
    }

    /// States at sorted times; fails if the norm ever grows by more than `tol`.
    pub fn evolve(&self, psi0: &[C64], times: &[f64], tol: f64) -> Result<Vec<Vec<C64>>> {
        let w = self.weights(psi0)?;
        let mut before = norm(psi0);
        let mut prev_t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if !(t.is_finite() && t >= prev_t) {
                return Err(domain(format!("observation times must be finite, nonnegative and sorted (got {t})")));
            }
            let psi = self.apply(&w, t);
            let after = norm(&psi);
            if after > before + tol {
                return Err(Error::NormGrowth { before, after });
            }
            before = after;
            prev_t = t;
            out.push(psi);
        }
        Ok(out)
    }
}

/// `e^{−iKt} ψ0` for a dissipative generator.
pub fn propagate_nonhermitian(k: MatRef<'_, C64>, psi0: &[C64], t: f64, tol: f64) -> Result<Vec<C64>> {
    let p = DecayPropagator::new(k)?;
    let out = p.evolve(psi0, &[t], tol)?;
    Ok(out.into_iter().next().expect("one time requested"))
}
