//! Walk observables in the full Hilbert space and their disorder ensembles.

use serde::{Deserialize, Serialize};

use crate::ensemble::{map_indexed, SeriesStats, Summary};
use crate::error::{domain, Result};
use crate::graph::{Family, Graph, Layout};
use crate::hamiltonian::{assemble_h, column_hamiltonian, sample_disorder, DisorderSpec};
use crate::numerics::{evolve, propagate, PropagationOptions, C64};

/// `t_hit ≈ [2d + 1 + 1.0188 (d + 1/2)^{1/3}] / (2√2 γ)`.
pub fn hitting_time(d: usize, gamma: f64) -> f64 {
    let d = d as f64;
    (2.0 * d + 1.0 + 1.0188 * (d + 0.5).cbrt()) / (2.0 * std::f64::consts::SQRT_2 * gamma)
}

/// `p_d · exp[−(d − 1/2) W² / 16]`.
pub fn hit_decay_prediction(p_d: f64, d: usize, width: f64) -> f64 {
    p_d * (-(d as f64 - 0.5) * width * width / 16.0).exp()
}

/// `points` uniform times on `[0, 3 t_hit]`.
pub fn default_time_grid(d: usize, gamma: f64, points: usize) -> Vec<f64> {
    linspace(0.0, 3.0 * hitting_time(d, gamma), points)
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => (0..points)
            .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Observables of one walk at each grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSeries {
    pub times: Vec<f64>,
    /// `|⟨col last|ψ(t)⟩|²`.
    pub p_hit: Vec<f64>,
    /// `Σ_j |⟨col j|ψ(t)⟩|²`.
    pub p_col: Vec<f64>,
    /// `⟨ψ(t)| r̂ |ψ(t)⟩` with `r̂` the column index.
    pub depth: Vec<f64>,
    /// `‖ψ(t)‖²`.
    pub norm: Vec<f64>,
}

impl WalkSeries {
    fn with_capacity(n: usize) -> Self {
        WalkSeries {
            times: Vec::with_capacity(n),
            p_hit: Vec::with_capacity(n),
            p_col: Vec::with_capacity(n),
            depth: Vec::with_capacity(n),
            norm: Vec::with_capacity(n),
        }
    }

    pub fn max_depth(&self) -> f64 {
        self.depth.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn column_start_state(g: &Graph, j0: usize) -> Result<Vec<C64>> {
    let col = g.column_state(j0)?;
    Ok(col.amplitudes.into_iter().map(|a| C64::new(a, 0.0)).collect())
}

fn record(g: &Graph, psi: &[C64], t: f64, out: &mut WalkSeries) {
    let mut p_col = 0.0;
    let mut depth = 0.0;
    let mut norm = 0.0;
    let mut p_hit = 0.0;
    for j in 0..g.num_columns() {
        let range = g.column(j);
        let size = range.len() as f64;
        let mut amp = C64::default();
        let mut weight = 0.0;
        for v in range {
            amp += psi[v];
            weight += psi[v].norm_sqr();
        }
        let overlap = amp.norm_sqr() / size;
        p_col += overlap;
        depth += j as f64 * weight;
        norm += weight;
        if j == g.last_column() {
            p_hit = overlap;
        }
    }
    out.times.push(t);
    out.p_hit.push(p_hit);
    out.p_col.push(p_col);
    out.depth.push(depth);
    out.norm.push(norm);
}

/// Walk from `|col j0⟩` under `H = −γA + diag(ε)`.
pub fn walk_series(
    g: &Graph,
    gamma: f64,
    eps: &[f64],
    times: &[f64],
    j0: usize,
    opts: &PropagationOptions,
) -> Result<WalkSeries> {
    let h = assemble_h(g, gamma, eps)?;
    let psi0 = column_start_state(g, j0)?;
    let mut out = WalkSeries::with_capacity(times.len());
    evolve(h.matrix(), &psi0, times, opts, |i, psi| record(g, psi, times[i], &mut out))?;
    Ok(out)
}

pub fn p_hit_series(g: &Graph, eps: &[f64], times: &[f64], opts: &PropagationOptions) -> Result<Vec<f64>> {
    Ok(walk_series(g, 1.0, eps, times, 0, opts)?.p_hit)
}

pub fn p_col_series(g: &Graph, eps: &[f64], times: &[f64], j0: usize, opts: &PropagationOptions) -> Result<Vec<f64>> {
    Ok(walk_series(g, 1.0, eps, times, j0, opts)?.p_col)
}

pub fn avg_depth_series(g: &Graph, eps: &[f64], times: &[f64], opts: &PropagationOptions) -> Result<Vec<f64>> {
    Ok(walk_series(g, 1.0, eps, times, 0, opts)?.depth)
}

/// Clean walk from `|col j0⟩` evolved in the column space only.
pub fn column_walk(d: usize, layout: Layout, gamma: f64, times: &[f64], j0: usize) -> Result<WalkSeries> {
    let h = column_hamiltonian(d, layout, gamma)?;
    let n = h.dim();
    if j0 >= n {
        return Err(domain(format!("start column {j0} outside 0..{n}")));
    }
    let mut psi0 = vec![C64::default(); n];
    psi0[j0] = C64::new(1.0, 0.0);
    let mut out = WalkSeries::with_capacity(times.len());
    let opts = PropagationOptions {
        method: crate::numerics::Method::Dense,
        ..Default::default()
    };
    evolve(h.matrix(), &psi0, times, &opts, |i, psi| {
        let probs: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = probs.iter().sum();
        out.times.push(times[i]);
        out.p_hit.push(probs[n - 1]);
        out.p_col.push(total);
        out.depth.push(probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum());
        out.norm.push(total);
    })?;
    Ok(out)
}

/// Clean maximum `(t*, p_d)` of `p_hit`: grid argmax refined by golden-section
/// search in the column space.
pub fn clean_peak(d: usize, layout: Layout, gamma: f64, times: &[f64]) -> Result<(f64, f64)> {
    let series = column_walk(d, layout, gamma, times, 0)?;
    let (i, _) = series
        .p_hit
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &p)| if p > b.1 { (i, p) } else { b });
    let h = column_hamiltonian(d, layout, gamma)?;
    let n = h.dim();
    let mut psi0 = vec![C64::default(); n];
    psi0[0] = C64::new(1.0, 0.0);
    let opts = PropagationOptions {
        method: crate::numerics::Method::Dense,
        tol: 1e-12,
        ..Default::default()
    };
    let f = |t: f64| -> Result<f64> { Ok(propagate(h.matrix(), &psi0, t, &opts)?[n - 1].norm_sqr()) };
    let mut a = times[i.saturating_sub(1)];
    let mut b = times[(i + 1).min(times.len() - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkEnsembleParams {
    pub depth: usize,
    pub width: f64,
    pub gamma: f64,
    pub realizations: usize,
    pub seed: u64,
    pub family: Family,
    pub start_column: usize,
    pub times: Vec<f64>,
    pub propagation: PropagationOptions,
}

/// Per-time ensemble statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkObservables {
    pub depth: usize,
    pub width: f64,
    pub seed: u64,
    pub family: Family,
    pub realizations: usize,
    pub times: Vec<f64>,
    pub p_hit: SeriesStats,
    pub p_col: SeriesStats,
    pub avg_depth: SeriesStats,
    /// Largest `|‖ψ‖² − 1|` seen in any realization.
    pub max_norm_error: f64,
}

/// One series per realization.
pub fn walk_realizations(p: &WalkEnsembleParams) -> Result<Vec<WalkSeries>> {
    if p.realizations == 0 {
        return Err(domain("need at least one realization"));
    }
    map_indexed(p.realizations, |r| {
        let g = p.family.realize(p.depth, p.seed, r as u64)?;
        let eps = sample_disorder(&DisorderSpec::realization(p.width, p.seed, r as u64, g.num_vertices()))?;
        walk_series(&g, p.gamma, &eps, &p.times, p.start_column, &p.propagation)
    })
    .into_iter()
    .collect()
}

pub fn walk_ensemble(p: &WalkEnsembleParams) -> Result<WalkObservables> {
    let runs = walk_realizations(p)?;
    let collect = |f: fn(&WalkSeries) -> &Vec<f64>| runs.iter().map(|s| f(s).clone()).collect::<Vec<_>>();
    let max_norm_error = runs
        .iter()
        .flat_map(|s| s.norm.iter())
        .fold(0.0f64, |m, n| m.max((n - 1.0).abs()));
    Ok(WalkObservables {
        depth: p.depth,
        width: p.width,
        seed: p.seed,
        family: p.family,
        realizations: runs.len(),
        times: p.times.clone(),
        p_hit: SeriesStats::of(&collect(|s| &s.p_hit)),
        p_col: SeriesStats::of(&collect(|s| &s.p_col)),
        avg_depth: SeriesStats::of(&collect(|s| &s.depth)),
        max_norm_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxDepthRow {
    pub depth: usize,
    pub width: f64,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxDepthParams {
    pub depths: Vec<usize>,
    pub widths: Vec<f64>,
    /// One count per depth.
    pub realizations: Vec<usize>,
    pub seed: u64,
    pub family: Family,
    pub points: usize,
    pub propagation: PropagationOptions,
}

/// Ensemble mean of `max_{t < 3 t_hit} r(t)`.
pub fn max_depth_sweep(p: &MaxDepthParams) -> Result<Vec<MaxDepthRow>> {
    if p.realizations.len() != p.depths.len() {
        return Err(domain("one realization count per depth is required"));
    }
    let mut jobs = Vec::new();
    for (di, &d) in p.depths.iter().enumerate() {
        for &w in &p.widths {
            for r in 0..p.realizations[di] {
                jobs.push((d, w, r as u64));
            }
        }
    }
    let maxima: Vec<f64> = map_indexed(jobs.len(), |i| {
        let (d, w, r) = jobs[i];
        let g = p.family.realize(d, p.seed, r)?;
        let eps = sample_disorder(&DisorderSpec::realization(w, p.seed, r, g.num_vertices()))?;
        let times = default_time_grid(d, 1.0, p.points);
        Ok(walk_series(&g, 1.0, &eps, &times, 0, &p.propagation)?.max_depth())
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut cursor = 0;
    for (di, &d) in p.depths.iter().enumerate() {
        for &w in &p.widths {
            let n = p.realizations[di];
            let s = Summary::of(&maxima[cursor..cursor + n]);
            cursor += n;
            rows.push(MaxDepthRow {
                depth: d,
                width: w,
                mean: s.mean,
                std: s.std,
                stderr: s.stderr,
                realizations: s.n,
            });
        }
    }
    Ok(rows)
}
