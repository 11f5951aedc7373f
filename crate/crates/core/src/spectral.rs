//! Clean spectrum, inverse participation ratios and level statistics.

use serde::{Deserialize, Serialize};

use crate::ensemble::{map_indexed, Summary};
use crate::error::{domain, Result};
use crate::graph::Family;
use crate::hamiltonian::{assemble_h, sample_disorder, DisorderSpec};
use crate::numerics::Spectrum;

/// `E_{k,m} = −2√2 γ cos(kπ / 2(m+1))` for `k = 1..2m+1`.
pub fn column_energies(m: usize, gamma: f64) -> Vec<f64> {
    (1..=2 * m + 1)
        .map(|k| {
            let e = -2.0 * std::f64::consts::SQRT_2 * gamma
                * (k as f64 * std::f64::consts::PI / (2.0 * (m as f64 + 1.0))).cos();
            if e.abs() < 1e-13 * gamma.abs().max(1.0) {
                0.0
            } else {
                e
            }
        })
        .collect()
}

/// Clean SGT spectrum as distinct energies with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSpectrum {
    /// Ascending energies, each with its multiplicity.
    pub levels: Vec<(f64, usize)>,
}

impl ClosedFormSpectrum {
    pub fn total(&self) -> usize {
        self.levels.iter().map(|l| l.1).sum()
    }

    pub fn multiplicity_at(&self, e: f64, tol: f64) -> usize {
        self.levels.iter().filter(|l| (l.0 - e).abs() <= tol).map(|l| l.1).sum()
    }

    /// Energies repeated by multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        self.levels
            .iter()
            .flat_map(|&(e, m)| std::iter::repeat(e).take(m))
            .collect()
    }
}

/// `σ = σ_d ∪ ⋃_{ν=1..d} 2^{ν−1} copies of σ_{d−ν}`.
pub fn closed_form_spectrum(d: usize, gamma: f64) -> Result<ClosedFormSpectrum> {
    if d == 0 {
        return Err(domain("depth must be at least 1"));
    }
    let mut all: Vec<(f64, usize)> = column_energies(d, gamma).into_iter().map(|e| (e, 1)).collect();
    for nu in 1..=d {
        let copies = 1usize << (nu - 1);
        all.extend(column_energies(d - nu, gamma).into_iter().map(|e| (e, copies)));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut levels: Vec<(f64, usize)> = Vec::new();
    for (e, m) in all {
        match levels.last_mut() {
            Some(last) if (last.0 - e).abs() <= 1e-12 * gamma.abs().max(1.0) => last.1 += m,
            _ => levels.push((e, m)),
        }
    }
    Ok(ClosedFormSpectrum { levels })
}

/// `I₂(ψ) = Σ |ψ_j|⁴` of a normalized real state.
pub fn ipr(psi: &[f64]) -> Result<f64> {
    let n2: f64 = psi.iter().map(|x| x * x).sum();
    if (n2 - 1.0).abs() > 1e-9 {
        return Err(domain(format!("state is not normalized (‖ψ‖² = {n2})")));
    }
    Ok(psi.iter().map(|x| x.powi(4)).sum())
}

/// IPR of every eigenvector, in eigenvalue order.
pub fn state_iprs(spec: &Spectrum) -> Vec<f64> {
    spec.vectors().map(|v| v.iter().map(|x| x.powi(4)).sum()).collect()
}

/// Mean over a set of eigenstates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMean {
    pub mean: f64,
    pub count: usize,
}

/// Mean IPR of eigenstates with `|E_j − E| < ΔE`; `None` if the window is empty.
pub fn averaged_ipr(spec: &Spectrum, e: f64, half_width: f64) -> Result<Option<WindowMean>> {
    if !(half_width > 0.0) {
        return Err(domain(format!("window half-width must be positive, got {half_width}")));
    }
    Ok(window_mean(&spec.values, &state_iprs(spec), e, half_width))
}

fn window_mean(values: &[f64], iprs: &[f64], e: f64, half_width: f64) -> Option<WindowMean> {
    let lo = values.partition_point(|&v| v <= e - half_width);
    let hi = values.partition_point(|&v| v < e + half_width);
    (hi > lo).then(|| WindowMean {
        mean: iprs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64,
        count: hi - lo,
    })
}

/// Realization-averaged value at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IprCell {
    pub energy: f64,
    pub width: f64,
    pub mean: f64,
    pub stderr: f64,
    /// Realizations with at least one eigenstate in the window.
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IprTable {
    pub half_width: f64,
    pub cells: Vec<IprCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramParams {
    pub depth: usize,
    pub widths: Vec<f64>,
    pub half_width: f64,
    pub realizations: usize,
    pub seed: u64,
    pub family: Family,
}

/// Energy grid `iΔE` covering `[−3√2γ − W/2, 3√2γ + W/2]`.
pub fn energy_grid(width: f64, spacing: f64) -> Vec<f64> {
    let bound = 3.0 * std::f64::consts::SQRT_2 + width / 2.0;
    let m = (bound / spacing + 1e-9).floor() as i64;
    (-m..=m).map(|i| i as f64 * spacing).collect()
}

/// Eigen-decomposition of one disordered realization, reduced to what the
/// IPR statistics need.
struct Realization {
    values: Vec<f64>,
    iprs: Vec<f64>,
}

fn realize(family: Family, d: usize, width: f64, seed: u64, index: u64) -> Result<Realization> {
    let g = family.realize(d, seed, index)?;
    let eps = sample_disorder(&DisorderSpec::realization(width, seed, index, g.num_vertices()))?;
    let spec = assemble_h(&g, 1.0, &eps)?.spectrum()?;
    Ok(Realization {
        iprs: state_iprs(&spec),
        values: spec.values,
    })
}

pub fn ipr_phase_diagram(p: &PhaseDiagramParams) -> Result<IprTable> {
    if !(p.half_width > 0.0) {
        return Err(domain("energy bin half-width must be positive"));
    }
    if p.realizations == 0 {
        return Err(domain("need at least one realization"));
    }
    let r = p.realizations;
    let tasks = map_indexed(p.widths.len() * r, |t| {
        let (wi, ri) = (t / r, t % r);
        let w = p.widths[wi];
        realize(p.family, p.depth, w, p.seed, ri as u64).map(|real| {
            energy_grid(w, p.half_width)
                .into_iter()
                .map(|e| window_mean(&real.values, &real.iprs, e, p.half_width).map(|m| m.mean))
                .collect::<Vec<_>>()
        })
    });
    let tasks: Vec<Vec<Option<f64>>> = tasks.into_iter().collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (wi, &w) in p.widths.iter().enumerate() {
        let block = &tasks[wi * r..(wi + 1) * r];
        for (ei, e) in energy_grid(w, p.half_width).into_iter().enumerate() {
            let samples: Vec<f64> = block.iter().filter_map(|row| row[ei]).collect();
            if samples.is_empty() {
                continue;
            }
            let s = Summary::of(&samples);
            cells.push(IprCell {
                energy: e,
                width: w,
                mean: s.mean,
                stderr: s.stderr,
                realizations: s.n,
            });
        }
    }
    Ok(IprTable {
        half_width: p.half_width,
        cells,
    })
}

/// Which eigenstates count as the band center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandCenter {
    /// The middle `n` eigenstates by rank (all of them if fewer exist).
    MiddleRank(usize),
    /// Eigenstates with `|E| < ΔE`.
    EnergyWindow(f64),
}

impl Default for BandCenter {
    fn default() -> Self {
        BandCenter::MiddleRank(100)
    }
}

impl BandCenter {
    fn mean(self, r: &Realization) -> Option<f64> {
        match self {
            BandCenter::MiddleRank(n) => {
                let total = r.iprs.len();
                let n = n.min(total);
                if n == 0 {
                    return None;
                }
                let lo = (total - n) / 2;
                Some(r.iprs[lo..lo + n].iter().sum::<f64>() / n as f64)
            }
            BandCenter::EnergyWindow(h) => window_mean(&r.values, &r.iprs, 0.0, h).map(|m| m.mean),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub depths: Vec<usize>,
    pub widths: Vec<f64>,
    /// One count per depth.
    pub realizations: Vec<usize>,
    pub seed: u64,
    pub family: Family,
    pub band: BandCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub depth: usize,
    pub width: f64,
    pub mean: f64,
    pub stderr: f64,
    pub realizations: usize,
}

/// Band-center IPR against disorder width, one curve per depth.
pub fn band_center_ipr_sweep(p: &SweepParams) -> Result<Vec<SweepRow>> {
    if p.realizations.len() != p.depths.len() {
        return Err(domain(format!(
            "{} realization counts for {} depths",
            p.realizations.len(),
            p.depths.len()
        )));
    }
    let mut jobs = Vec::new();
    for (di, &d) in p.depths.iter().enumerate() {
        for (wi, &w) in p.widths.iter().enumerate() {
            for r in 0..p.realizations[di] {
                jobs.push((di, wi, d, w, r as u64));
            }
        }
    }
    let results = map_indexed(jobs.len(), |i| {
        let (_, _, d, w, r) = jobs[i];
        realize(p.family, d, w, p.seed, r).map(|real| p.band.mean(&real))
    });
    let mut rows = Vec::new();
    let mut cursor = 0;
    for (di, &d) in p.depths.iter().enumerate() {
        for &w in &p.widths {
            let n = p.realizations[di];
            let mut samples = Vec::with_capacity(n);
            for res in &results[cursor..cursor + n] {
                match res {
                    Ok(Some(v)) => samples.push(*v),
                    Ok(None) => {}
                    Err(e) => return Err(domain(format!("realization failed: {e}"))),
                }
            }
            cursor += n;
            let s = Summary::of(&samples);
            rows.push(SweepRow {
                depth: d,
                width: w,
                mean: s.mean,
                stderr: s.stderr,
                realizations: s.n,
            });
        }
    }
    Ok(rows)
}

/// First sign change of `b − a` along `x`, located by linear interpolation.
pub fn crossing_point(x: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let diff: Vec<f64> = a.iter().zip(b).map(|(a, b)| b - a).collect();
    for i in 0..diff.len().min(x.len()) {
        if diff[i] == 0.0 {
            return Some(x[i]);
        }
        if i + 1 < diff.len() && diff[i].signum() != diff[i + 1].signum() && diff[i + 1] != 0.0 {
            let f = diff[i] / (diff[i] - diff[i + 1]);
            return Some(x[i] + f * (x[i + 1] - x[i]));
        }
    }
    None
}

/// Mean adjacent-gap ratio over the middle half of a sorted spectrum.
/// Ratios whose two gaps are both zero are skipped.
pub fn gap_ratio(values: &[f64]) -> Result<f64> {
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("eigenvalues must be sorted ascending"));
    }
    let n = values.len();
    let (mut lo, mut hi) = (n / 4, n - n / 4);
    if hi - lo < 3 {
        lo = 0;
        hi = n;
    }
    let slice = &values[lo..hi];
    let gaps: Vec<f64> = slice.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = gaps
        .windows(2)
        .filter_map(|g| {
            let (small, large) = if g[0] < g[1] { (g[0], g[1]) } else { (g[1], g[0]) };
            (large > 0.0).then(|| small / large)
        })
        .collect();
    if ratios.is_empty() {
        return Err(domain("need at least three distinct eigenvalues"));
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Ensemble of gap ratios for disordered graphs of one family.
pub fn gap_ratio_ensemble(family: Family, d: usize, width: f64, realizations: usize, seed: u64) -> Result<Summary> {
    let values = map_indexed(realizations, |r| {
        realize(family, d, width, seed, r as u64).and_then(|real| gap_ratio(&real.values))
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    Ok(Summary::of(&values))
}
