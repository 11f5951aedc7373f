//! Column-space walk with column-dependent leakage, `H_col − iΓ/2`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::graph::{column_size, Layout};
use crate::hamiltonian::column_hamiltonian;
use crate::numerics::{DecayPropagator, C64};

/// Decay rates `Γ_j = (W²/12γ)(1 − 1/N_j)` over the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayGenerator {
    pub depth: usize,
    pub width: f64,
    pub gamma: f64,
    pub layout: Layout,
    pub rates: Vec<f64>,
}

pub fn decay_generator(d: usize, width: f64, gamma: f64, layout: Layout) -> Result<DecayGenerator> {
    if !(width >= 0.0 && width.is_finite()) {
        return Err(domain(format!("disorder width must be finite and nonnegative, got {width}")));
    }
    if !(gamma > 0.0) {
        return Err(domain(format!("hopping rate must be positive, got {gamma}")));
    }
    if d == 0 {
        return Err(domain("depth must be at least 1"));
    }
    let prefactor = width * width / (12.0 * gamma);
    let rates = (0..layout.num_columns(d))
        .map(|j| column_size(j, d, layout).map(|n| prefactor * (1.0 - 1.0 / n as f64)))
        .collect::<Result<_>>()?;
    Ok(DecayGenerator {
        depth: d,
        width,
        gamma,
        layout,
        rates,
    })
}

impl DecayGenerator {
    /// `K = H_col − iΓ/2`.
    pub fn matrix(&self) -> Result<Mat<C64>> {
        let h = column_hamiltonian(self.depth, self.layout, self.gamma)?;
        let n = h.dim();
        Ok(Mat::from_fn(n, n, |i, j| {
            let decay = if i == j { self.rates[i] / 2.0 } else { 0.0 };
            C64::new(h.get(i, j), -decay)
        }))
    }

    /// Same generator with hopping removed: each column decays on its own.
    pub fn isolated(&self) -> Mat<C64> {
        let n = self.rates.len();
        Mat::from_fn(n, n, |i, j| if i == j { C64::new(0.0, -self.rates[i] / 2.0) } else { C64::default() })
    }
}

/// `ψ(t) = e^{−iKt} ψ0` at each grid time.
pub fn evolve_local_decay(g: &DecayGenerator, psi0: &[C64], times: &[f64], tol: f64) -> Result<Vec<Vec<C64>>> {
    DecayPropagator::new(g.matrix()?.as_ref())?.evolve(psi0, times, tol)
}

/// Observables of the decayed column-space state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSeries {
    pub times: Vec<f64>,
    /// `|⟨col last|ψ(t)⟩|²`.
    pub p_hit: Vec<f64>,
    /// `‖ψ(t)‖²`.
    pub p_col: Vec<f64>,
    /// `Σ_j j |ψ_j(t)|²`.
    pub depth: Vec<f64>,
}

pub fn model_observables(g: &DecayGenerator, j0: usize, times: &[f64]) -> Result<ModelSeries> {
    let n = g.rates.len();
    if j0 >= n {
        return Err(domain(format!("start column {j0} outside 0..{n}")));
    }
    let mut psi0 = vec![C64::default(); n];
    psi0[j0] = C64::new(1.0, 0.0);
    let states = evolve_local_decay(g, &psi0, times, 1e-10)?;
    let mut out = ModelSeries {
        times: times.to_vec(),
        p_hit: Vec::with_capacity(times.len()),
        p_col: Vec::with_capacity(times.len()),
        depth: Vec::with_capacity(times.len()),
    };
    for psi in states {
        let probs: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
        out.p_hit.push(probs[n - 1]);
        out.p_col.push(probs.iter().sum());
        out.depth.push(probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum());
    }
    Ok(out)
}

/// Leading-order `⟨p_col(t)⟩ = 1 − t²W²(1 − 1/N_{j0})/12`.
pub fn short_time_pcol(t: f64, width: f64, n_j0: usize) -> f64 {
    1.0 - t * t * width * width * (1.0 - 1.0 / n_j0 as f64) / 12.0
}
