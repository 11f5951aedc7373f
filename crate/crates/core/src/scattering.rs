//! Transmission through the glued trees between two semi-infinite tails.
//!
//! A plane wave `e^{ikn}` with energy `E = −2cos k` comes in on the tail
//! attached to the left root. The tails are folded into boundary terms on
//! the roots, and one linear solve of `(E − H̃) x = e_in` yields both
//! amplitudes: `𝒯 = 2i sin k · x_out · e^{−ikL}` and `ℛ = 2i sin k · x_in − 1`,
//! where `L` is the column index of the right root.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::ensemble::{derive_seed, map_indexed, Stream, Summary};
use crate::error::{domain, Error, Result};
use crate::graph::{Family, Graph, Layout};
use crate::hamiltonian::{sample_disorder, scattering_hamiltonian, DisorderSpec};
use crate::numerics::{solve_complex, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    /// `𝒯`.
    pub amplitude: C64,
    /// `ℛ`.
    pub reflection: C64,
    /// Estimated condition number of `E − H̃`.
    pub condition: f64,
}

impl Transmission {
    /// `T = |𝒯|²`.
    pub fn probability(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    /// `|𝒯|² + |ℛ|²`, one for any Hermitian scatterer.
    pub fn flux(&self) -> f64 {
        self.amplitude.norm_sqr() + self.reflection.norm_sqr()
    }
}

pub fn transmission(g: &Graph, eps: &[f64], k: f64) -> Result<Transmission> {
    let h = scattering_hamiltonian(g, eps, k)?;
    let e = h.energy();
    let m = h.to_dense();
    let n = m.nrows();
    let a = Mat::from_fn(n, n, |i, j| if i == j { C64::new(e, 0.0) - m[(i, j)] } else { -m[(i, j)] });
    let mut b = vec![C64::default(); n];
    b[h.input()] = C64::new(1.0, 0.0);
    let sol = solve_complex(a.as_ref(), &b)?;
    let source = C64::new(0.0, 2.0 * k.sin());
    let last = g.last_column() as f64;
    Ok(Transmission {
        amplitude: source * sol.x[h.output()] * C64::from_polar(1.0, -k * last),
        reflection: source * sol.x[h.input()] - 1.0,
        condition: sol.condition,
    })
}

/// Clean `𝒯(π/2)`: `8/(9 + (−1)^d)` for the MGT and 1 for the SGT.
pub fn analytic_t_halfpi(d: usize, layout: Layout) -> f64 {
    match layout {
        Layout::Sgt => 1.0,
        Layout::Mgt => 8.0 / (9.0 + if d % 2 == 0 { 1.0 } else { -1.0 }),
    }
}

/// Clean amplitudes from the plane-wave ansatz in the column space.
///
/// Each tree carries `A e^{ik̃j} + B e^{−ik̃j}` (left) or
/// `C e^{ik̃j} + D e^{−ik̃j}` (right) with `cos k̃ = cos k / √2`. Matching to
/// the tails and imposing the Schrödinger equation at the boundary and
/// gluing columns gives six equations in `A, B, C, D, ℛ, 𝒯`.
pub fn clean_transmission_general_k(d: usize, layout: Layout, k: f64) -> Result<Transmission> {
    if !(k > 0.0 && k < std::f64::consts::PI) {
        return Err(domain(format!("momentum must lie in (0, π), got {k}")));
    }
    if d == 0 {
        return Err(domain("depth must be at least 1"));
    }
    let s2 = std::f64::consts::SQRT_2;
    let e = C64::new(-2.0 * k.cos(), 0.0);
    let kt = (k.cos() / s2).acos();
    let wave = |q: f64, j: f64| C64::from_polar(1.0, q * j);
    let last = layout.last_column(d) as f64;
    let d_f = d as f64;
    let one = C64::new(1.0, 0.0);
    let zero = C64::default();

    // Unknown order: A, B, C, D, R, T.
    let mut rows: Vec<[C64; 6]> = Vec::with_capacity(6);
    let mut rhs: Vec<C64> = Vec::with_capacity(6);
    let left = |j: f64| [wave(kt, j), wave(-kt, j)];
    let right = |j: f64| [wave(kt, j), wave(-kt, j)];

    // ψ_0 = 1 + ℛ
    let l0 = left(0.0);
    rows.push([l0[0], l0[1], zero, zero, -one, zero]);
    rhs.push(one);
    // E ψ_0 = −ψ_{−1} − √2 ψ_1 with ψ_{−1} = e^{−ik} + ℛ e^{ik}
    let l1 = left(1.0);
    rows.push([
        e * l0[0] + s2 * l1[0],
        e * l0[1] + s2 * l1[1],
        zero,
        zero,
        wave(k, 1.0),
        zero,
    ]);
    rhs.push(-wave(-k, 1.0));
    // ψ_L = 𝒯 e^{ikL}
    let rl = right(last);
    rows.push([zero, zero, rl[0], rl[1], zero, -wave(k, last)]);
    rhs.push(zero);
    // E ψ_L = −√2 ψ_{L−1} − 𝒯 e^{ik(L+1)}
    let rl1 = right(last - 1.0);
    rows.push([
        zero,
        zero,
        e * rl[0] + s2 * rl1[0],
        e * rl[1] + s2 * rl1[1],
        zero,
        wave(k, last + 1.0),
    ]);
    rhs.push(zero);

    let ld = left(d_f);
    let ldm = left(d_f - 1.0);
    match layout {
        Layout::Mgt => {
            let rd1 = right(d_f + 1.0);
            let rd2 = right(d_f + 2.0);
            // E ψ_d = −√2 ψ_{d−1} − 2 ψ_{d+1}
            rows.push([
                e * ld[0] + s2 * ldm[0],
                e * ld[1] + s2 * ldm[1],
                2.0 * rd1[0],
                2.0 * rd1[1],
                zero,
                zero,
            ]);
            rhs.push(zero);
            // E ψ_{d+1} = −2 ψ_d − √2 ψ_{d+2}
            rows.push([
                2.0 * ld[0],
                2.0 * ld[1],
                e * rd1[0] + s2 * rd2[0],
                e * rd1[1] + s2 * rd2[1],
                zero,
                zero,
            ]);
            rhs.push(zero);
        }
        Layout::Sgt => {
            let rd = right(d_f);
            let rd1 = right(d_f + 1.0);
            // both forms agree on the shared column
            rows.push([ld[0], ld[1], -rd[0], -rd[1], zero, zero]);
            rhs.push(zero);
            // E ψ_d = −√2 ψ_{d−1} − √2 ψ_{d+1}
            rows.push([
                e * ld[0] + s2 * ldm[0],
                e * ld[1] + s2 * ldm[1],
                s2 * rd1[0],
                s2 * rd1[1],
                zero,
                zero,
            ]);
            rhs.push(zero);
        }
    }
    let a = Mat::from_fn(6, 6, |i, j| rows[i][j]);
    let sol = solve_complex(a.as_ref(), &rhs)?;
    Ok(Transmission {
        amplitude: sol.x[5],
        reflection: sol.x[4],
        condition: sol.condition,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSweepParams {
    pub depth: usize,
    pub momenta: Vec<f64>,
    pub widths: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub family: Family,
}

/// Ensemble statistics of `T = |𝒯|²` at one `(k, W)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCell {
    pub k: f64,
    pub width: f64,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub realizations: usize,
    pub excluded: usize,
}

/// Largest `| |ℛ|² + |𝒯|² − 1 |` accepted from one solve.
pub const FLUX_TOLERANCE: f64 = 1e-8;

fn sample(family: Family, d: usize, w: f64, k: f64, master: u64, index: u64) -> Result<Transmission> {
    let g = family.realize(d, master, index)?;
    let eps = sample_disorder(&DisorderSpec::realization(w, master, index, g.num_vertices()))?;
    let t = transmission(&g, &eps, k)?;
    // Dark states that never touch the roots make the clean system
    // singular without spoiling the solution, so judge by flux instead.
    let flux_error = (t.flux() - 1.0).abs();
    if !(flux_error <= FLUX_TOLERANCE) {
        return Err(Error::Singular(format!(
            "resonance, flux error {flux_error:e}, condition {:e}",
            t.condition
        )));
    }
    Ok(t)
}

/// Transmission of one realization, resampled once at a resonance.
fn robust_sample(p: &TransmissionSweepParams, w: f64, k: f64, r: u64) -> Option<f64> {
    match sample(p.family, p.depth, w, k, p.seed, r) {
        Ok(t) => Some(t.probability()),
        Err(first) => {
            let fresh = derive_seed(p.seed, Stream::Resample, r);
            match sample(p.family, p.depth, w, k, fresh, 0) {
                Ok(t) => {
                    log::debug!("realization {r} at k={k}, W={w} resampled after: {first}");
                    Some(t.probability())
                }
                Err(second) => {
                    log::warn!("realization {r} at k={k}, W={w} excluded: {second}");
                    None
                }
            }
        }
    }
}

pub fn transmission_sweep(p: &TransmissionSweepParams) -> Result<Vec<TransmissionCell>> {
    if p.momenta.is_empty() || p.widths.is_empty() || p.realizations == 0 {
        return Err(domain("transmission sweep needs nonempty k and W grids and realizations"));
    }
    if let Some(k) = p.momenta.iter().find(|k| !(**k > 0.0 && **k < std::f64::consts::PI)) {
        return Err(domain(format!("momentum must lie in (0, π), got {k}")));
    }
    let r = p.realizations;
    let per_cell = |i: usize| {
        let cell = i / r;
        let (wi, ki) = (cell / p.momenta.len(), cell % p.momenta.len());
        robust_sample(p, p.widths[wi], p.momenta[ki], (i % r) as u64)
    };
    let samples = map_indexed(p.widths.len() * p.momenta.len() * r, per_cell);
    let mut cells = Vec::with_capacity(p.widths.len() * p.momenta.len());
    for (c, chunk) in samples.chunks(r).enumerate() {
        let (wi, ki) = (c / p.momenta.len(), c % p.momenta.len());
        let values: Vec<f64> = chunk.iter().flatten().copied().collect();
        let s = Summary::of(&values);
        cells.push(TransmissionCell {
            k: p.momenta[ki],
            width: p.widths[wi],
            mean: s.mean,
            std: s.std,
            stderr: s.stderr,
            realizations: s.n,
            excluded: r - s.n,
        });
    }
    Ok(cells)
}

/// `T_0 / (1 + c W²)` on a grid.
pub fn classical_fit_overlay(widths: &[f64], t0: f64, c: f64) -> Vec<f64> {
    widths.iter().map(|w| t0 / (1.0 + c * w * w)).collect()
}

/// Weighted least-squares estimate of `(T_0, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalFit {
    pub t0: f64,
    pub c: f64,
    pub chi2: f64,
}

/// Fits `T_0/(1 + cW²)` to means with standard errors by Gauss–Newton.
pub fn fit_classical(widths: &[f64], means: &[f64], stderrs: &[f64]) -> Result<ClassicalFit> {
    let n = widths.len();
    if means.len() != n || stderrs.len() != n || n < 2 {
        return Err(domain("fit needs at least two points with matching lengths"));
    }
    let weights: Vec<f64> = stderrs.iter().map(|s| if *s > 0.0 { 1.0 / (s * s) } else { 1e12 }).collect();
    let chi2 = |t0: f64, c: f64| -> f64 {
        (0..n)
            .map(|i| weights[i] * (means[i] - t0 / (1.0 + c * widths[i] * widths[i])).powi(2))
            .sum()
    };
    // start from the linearization 1/T = 1/T0 + (c/T0) W²
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (x, y) = (widths[i] * widths[i], 1.0 / means[i].max(1e-6));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let nf = n as f64;
    let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    let icpt = (sy - slope * sx) / nf;
    let (mut t0, mut c) = if icpt > 0.0 && slope.is_finite() {
        (1.0 / icpt, slope / icpt)
    } else {
        (means[0], 0.1)
    };
    let mut best = chi2(t0, c);
    let mut damping = 1e-3;
    for _ in 0..200 {
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let w2 = widths[i] * widths[i];
            let den = 1.0 + c * w2;
            let f = t0 / den;
            let j1 = 1.0 / den;
            let j2 = -t0 * w2 / (den * den);
            let r = means[i] - f;
            a11 += weights[i] * j1 * j1;
            a12 += weights[i] * j1 * j2;
            a22 += weights[i] * j2 * j2;
            g1 += weights[i] * j1 * r;
            g2 += weights[i] * j2 * r;
        }
        let (b11, b22) = (a11 * (1.0 + damping), a22 * (1.0 + damping));
        let det = b11 * b22 - a12 * a12;
        if det.abs() < 1e-300 {
            break;
        }
        let dt = (b22 * g1 - a12 * g2) / det;
        let dc = (b11 * g2 - a12 * g1) / det;
        let trial = chi2(t0 + dt, c + dc);
        if trial < best {
            let converged = (best - trial) < 1e-14 * best.max(1e-300);
            t0 += dt;
            c += dc;
            best = trial;
            damping = (damping / 10.0).max(1e-12);
            if converged {
                break;
            }
        } else {
            damping *= 10.0;
            if damping > 1e12 {
                break;
            }
        }
    }
    Ok(ClassicalFit { t0, c, chi2: best })
}

/// Mean absolute second difference along a grid; a measure of how much a
/// curve oscillates.
/// RMS second difference of an ensemble-mean curve on a uniform grid, with the
/// sampling variance of each second difference (from the standard errors)
/// subtracted before the square root.
pub fn oscillation_index(mean: &[f64], stderr: &[f64]) -> f64 {
    assert_eq!(mean.len(), stderr.len());
    if mean.len() < 3 {
        return 0.0;
    }
    let n = (mean.len() - 2) as f64;
    let (mut power, mut noise) = (0.0, 0.0);
    for i in 1..mean.len() - 1 {
        power += (mean[i - 1] - 2.0 * mean[i] + mean[i + 1]).powi(2);
        noise += stderr[i - 1].powi(2) + 4.0 * stderr[i].powi(2) + stderr[i + 1].powi(2);
    }
    ((power - noise) / n).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Gluing;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn half_pi_oracles() {
        for d in 3..=6 {
            let g = Graph::mgt(d, Gluing::Regular).unwrap();
            let t = transmission(&g, &vec![0.0; g.num_vertices()], FRAC_PI_2).unwrap();
            let want = analytic_t_halfpi(d, Layout::Mgt);
            assert!((t.amplitude - C64::new(want, 0.0)).norm() < 1e-10, "d={d}: {}", t.amplitude);
            let s = Graph::sgt(d).unwrap();
            let t = transmission(&s, &vec![0.0; s.num_vertices()], FRAC_PI_2).unwrap();
            assert!((t.probability() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ansatz_matches_resolvent() {
        for layout in [Layout::Mgt, Layout::Sgt] {
            for d in [2, 5] {
                let g = match layout {
                    Layout::Mgt => Graph::mgt(d, Gluing::Random { seed: 3 }).unwrap(),
                    Layout::Sgt => Graph::sgt(d).unwrap(),
                };
                for k in [0.3, 1.1, 2.0, 2.9] {
                    let a = clean_transmission_general_k(d, layout, k).unwrap();
                    let b = transmission(&g, &vec![0.0; g.num_vertices()], k).unwrap();
                    assert!((a.amplitude - b.amplitude).norm() < 1e-9, "{layout:?} d={d} k={k}");
                    assert!((a.reflection - b.reflection).norm() < 1e-9);
                    assert!((b.flux() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn overlay_values() {
        let v = classical_fit_overlay(&[0.0, 2.0], 0.8, 0.2);
        assert_eq!(v[0], 0.8);
        assert!((v[1] - 0.8 / 1.8).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_exact_curve() {
        let w: Vec<f64> = (0..9).map(|i| 2.0 + 0.5 * i as f64).collect();
        let m = classical_fit_overlay(&w, 0.7, 0.15);
        let f = fit_classical(&w, &m, &vec![0.01; w.len()]).unwrap();
        assert!((f.t0 - 0.7).abs() < 1e-8 && (f.c - 0.15).abs() < 1e-8);
    }

    #[test]
    fn oscillation_of_a_line_is_zero() {
        assert_eq!(oscillation_index(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]), 0.0);
        assert_eq!(oscillation_index(&[0.0, 1.0, 0.0], &[0.0; 3]), 2.0);
        assert_eq!(oscillation_index(&[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0]), 0.0);
    }
}
