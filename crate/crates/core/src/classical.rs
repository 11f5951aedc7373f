//! Classical diffusion across the modified glued trees with leaky roots.
//!
//! Column populations obey `dp/dt = L p + b`, where walkers hop between
//! columns at rate `λ` per edge, leave through the left and right roots at
//! rates `λ_left`, `λ_right`, and are injected at the left root with flux
//! `Γ_in`. The transmitted fraction of the steady state is
//! `T_c = λ_right p_{2d+1} / Γ_in`.

use faer::Mat;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSystem {
    pub depth: usize,
    pub lambda: f64,
    pub lambda_left: f64,
    pub lambda_right: f64,
    pub gamma_in: f64,
    /// Tridiagonal `L` by row: `(sub, diag, super)`.
    pub rows: Vec<(f64, f64, f64)>,
}

pub fn build_master(d: usize, lambda: f64, lambda_left: f64, lambda_right: f64, gamma_in: f64) -> Result<MasterSystem> {
    if d == 0 {
        return Err(domain("depth must be at least 1"));
    }
    for (name, v) in [
        ("lambda", lambda),
        ("lambda_left", lambda_left),
        ("lambda_right", lambda_right),
        ("gamma_in", gamma_in),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let last = 2 * d + 1;
    let l = lambda;
    let rows = (0..=last)
        .map(|j| match j {
            0 => (0.0, -(2.0 * l + lambda_left), l),
            j if j == last => (l, -(2.0 * l + lambda_right), 0.0),
            j if j == d || j == d + 1 => (2.0 * l, -3.0 * l, 2.0 * l),
            j if j < d => (2.0 * l, -3.0 * l, l),
            _ => (l, -3.0 * l, 2.0 * l),
        })
        .collect();
    Ok(MasterSystem {
        depth: d,
        lambda,
        lambda_left,
        lambda_right,
        gamma_in,
        rows,
    })
}

impl MasterSystem {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            let (sub, diag, sup) = self.rows[i];
            if j + 1 == i {
                sub
            } else if j == i {
                diag
            } else if j == i + 1 {
                sup
            } else {
                0.0
            }
        })
    }

    /// `b = Γ_in e_0`.
    pub fn source(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim()];
        b[0] = self.gamma_in;
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub p: Vec<f64>,
    /// `‖Lp + b‖₂`.
    pub residual: f64,
    /// `|λ_left p_0 + λ_right p_last − Γ_in|`.
    pub flux_error: f64,
}

impl SteadyState {
    pub fn transmission(&self, sys: &MasterSystem) -> f64 {
        sys.lambda_right * self.p[self.p.len() - 1] / sys.gamma_in
    }
}

/// `p_ss = −L⁻¹ b` by dense LU.
pub fn steady_state(sys: &MasterSystem) -> Result<SteadyState> {
    crate::numerics::sequential_kernels();
    let n = sys.dim();
    let l = sys.to_dense();
    let b = sys.source();
    let lu = l.partial_piv_lu();
    let min_pivot = (0..n).fold(f64::INFINITY, |m, i| m.min(lu.U()[(i, i)].abs()));
    if !(min_pivot > 0.0) {
        return Err(Error::Singular("rate matrix is singular".into()));
    }
    let rhs = Mat::from_fn(n, 1, |i, _| -b[i]);
    let x = faer::linalg::solvers::Solve::solve(&lu, &rhs);
    let p: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    let residual = (0..n)
        .map(|i| {
            let (sub, diag, sup) = sys.rows[i];
            let mut r = diag * p[i] + b[i];
            if i > 0 {
                r += sub * p[i - 1];
            }
            if i + 1 < n {
                r += sup * p[i + 1];
            }
            r * r
        })
        .sum::<f64>()
        .sqrt();
    let flux_error = (sys.lambda_left * p[0] + sys.lambda_right * p[n - 1] - sys.gamma_in).abs();
    Ok(SteadyState {
        p,
        residual,
        flux_error,
    })
}

/// `T_c = 1 / (1 + λ_left/λ_right + 2(1 − 3·2^{−d−2}) λ_left/λ)`.
pub fn analytic_tc(d: usize, lambda: f64, lambda_left: f64, lambda_right: f64) -> Result<f64> {
    if d == 0 {
        return Err(domain("depth must be at least 1"));
    }
    if !(lambda > 0.0 && lambda_left > 0.0 && lambda_right > 0.0) {
        return Err(domain("rates must be positive"));
    }
    let shape = 1.0 - 3.0 * 0.5f64.powi(d as i32 + 2);
    Ok(1.0 / (1.0 + lambda_left / lambda_right + 2.0 * shape * lambda_left / lambda))
}

/// `T_c(W)` with `λ_left = λ_right = γ` and `λ = γ³/W²`; `W = 0` gives 1/2.
pub fn tc_of_disorder(d: usize, widths: &[f64], gamma: f64) -> Result<Vec<f64>> {
    widths
        .iter()
        .map(|&w| {
            if !(w >= 0.0) {
                Err(domain(format!("disorder width must be nonnegative, got {w}")))
            } else if w == 0.0 {
                Ok(0.5)
            } else {
                analytic_tc(d, gamma.powi(3) / (w * w), gamma, gamma)
            }
        })
        .collect()
}

/// Largest deviation of the interior populations from the two-term
/// recurrences `p_{j+1} = 3p_j − 2p_{j−1}` (left tree) and
/// `p_{j−1} = 3p_j − 2p_{j+1}` (right tree).
pub fn recursion_residual(p: &[f64], d: usize) -> f64 {
    let mut worst = 0.0f64;
    for j in 1..d {
        worst = worst.max((p[j + 1] - 3.0 * p[j] + 2.0 * p[j - 1]).abs());
    }
    for j in d + 2..=2 * d {
        worst = worst.max((p[j - 1] - 3.0 * p[j] + 2.0 * p[j + 1]).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_patterns() {
        let s = build_master(3, 1.5, 0.4, 0.7, 1.0).unwrap();
        assert_eq!(s.rows[0], (0.0, -(3.0 + 0.4), 1.5));
        assert_eq!(s.rows[1], (3.0, -4.5, 1.5));
        assert_eq!(s.rows[3], (3.0, -4.5, 3.0));
        assert_eq!(s.rows[4], (3.0, -4.5, 3.0));
        assert_eq!(s.rows[5], (1.5, -4.5, 3.0));
        assert_eq!(s.rows[7], (1.5, -(3.0 + 0.7), 0.0));
        // probability only leaves through the roots
        let l = s.to_dense();
        for j in 1..7 {
            let col: f64 = (0..8).map(|i| l[(i, j)]).sum();
            assert!(col.abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_matches_solve() {
        let s = build_master(4, 0.9, 1.3, 0.6, 2.0).unwrap();
        let ss = steady_state(&s).unwrap();
        assert!(ss.residual < 1e-12 && ss.flux_error < 1e-12);
        assert!((ss.transmission(&s) - analytic_tc(4, 0.9, 1.3, 0.6).unwrap()).abs() < 1e-12);
        assert!(recursion_residual(&ss.p, 4) < 1e-12);
        assert!(ss.p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn disorder_mapping() {
        let v = tc_of_disorder(6, &[0.0, 2.0], 1.0).unwrap();
        assert_eq!(v[0], 0.5);
        assert!((v[1] - 0.100_946_372_239_747_63).abs() < 1e-12);
        let big = analytic_tc(5, 1e12, 1.0, 1.0).unwrap();
        assert!((big - 0.5).abs() < 1e-10);
    }
}
