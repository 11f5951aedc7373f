//! Walk Hamiltonians `H = −γA + diag(ε)` and their reductions.

use crate::ensemble::{derive_seed, Stream};
use crate::error::{domain, Result};
use crate::graph::{Graph, Layout};
use crate::numerics::{eigh, CsrMatrix, Spectrum, C64};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest dimension converted to dense storage for a full eigensolve.
pub const DENSE_EIGEN_THRESHOLD: usize = 4096;

/// On-site energies drawn i.i.d. from `U[−W/2, W/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderSpec {
    pub width: f64,
    pub seed: u64,
    pub count: usize,
}

impl DisorderSpec {
    /// Disorder of realization `index` under a master seed.
    pub fn realization(width: f64, master: u64, index: u64, count: usize) -> Self {
        DisorderSpec {
            width,
            seed: derive_seed(master, Stream::Disorder, index),
            count,
        }
    }
}

pub fn sample_disorder(spec: &DisorderSpec) -> Result<Vec<f64>> {
    let w = spec.width;
    if !(w >= 0.0 && w.is_finite()) {
        return Err(domain(format!("disorder width must be finite and nonnegative, got {w}")));
    }
    if w == 0.0 {
        return Ok(vec![0.0; spec.count]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.count).map(|_| (rng.gen::<f64>() - 0.5) * w).collect())
}

/// Real symmetric Hamiltonian in sparse storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: CsrMatrix,
    gamma: f64,
}

impl Hamiltonian {
    pub fn from_matrix(matrix: CsrMatrix, gamma: f64) -> Result<Self> {
        if matrix.asymmetry() > 1e-12 * matrix.max_abs().max(f64::MIN_POSITIVE) {
            return Err(domain("Hamiltonian must be symmetric"));
        }
        Ok(Hamiltonian { matrix, gamma })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        self.matrix.to_dense()
    }

    /// Full spectrum via dense conversion.
    pub fn spectrum(&self) -> Result<Spectrum> {
        if self.dim() > DENSE_EIGEN_THRESHOLD {
            return Err(domain(format!(
                "dimension {} exceeds the dense eigensolve threshold {DENSE_EIGEN_THRESHOLD}",
                self.dim()
            )));
        }
        eigh(self.to_dense().as_ref())
    }

    pub fn to_coordinate_text(&self) -> String {
        self.matrix.to_coordinate_text()
    }
}

pub fn assemble_h0(g: &Graph, gamma: f64) -> Hamiltonian {
    let triplets = g
        .edges()
        .flat_map(|(u, v)| [(u, v, -gamma), (v, u, -gamma)])
        .collect();
    Hamiltonian {
        matrix: CsrMatrix::from_triplets(g.num_vertices(), triplets),
        gamma,
    }
}

pub fn assemble_h(g: &Graph, gamma: f64, eps: &[f64]) -> Result<Hamiltonian> {
    if eps.len() != g.num_vertices() {
        return Err(domain(format!(
            "disorder vector has length {}, graph has {} vertices",
            eps.len(),
            g.num_vertices()
        )));
    }
    if let Some(e) = eps.iter().find(|e| !e.is_finite()) {
        return Err(domain(format!("non-finite on-site energy {e}")));
    }
    let h0 = assemble_h0(g, gamma);
    Ok(Hamiltonian {
        matrix: h0.matrix.with_diagonal(eps),
        gamma,
    })
}

/// Clean Hamiltonian restricted to the uniform column states.
pub fn column_hamiltonian(d: usize, layout: Layout, gamma: f64) -> Result<Hamiltonian> {
    if d == 0 {
        return Err(domain("depth must be at least 1"));
    }
    let n = layout.num_columns(d);
    let tree = -std::f64::consts::SQRT_2 * gamma;
    let mut triplets = Vec::with_capacity(2 * n);
    for j in 0..n - 1 {
        let v = if layout == Layout::Mgt && j == d { -2.0 * gamma } else { tree };
        triplets.push((j, j + 1, v));
        triplets.push((j + 1, j, v));
    }
    Ok(Hamiltonian {
        matrix: CsrMatrix::from_triplets(n, triplets),
        gamma,
    })
}

/// `H̃ = H − e^{ik}(|in⟩⟨in| + |out⟩⟨out|)` on the two root vertices, the
/// self-energy of semi-infinite unit-hopping leads at `E = −2cos k`.
#[derive(Debug, Clone)]
pub struct ScatteringHamiltonian {
    base: Hamiltonian,
    momentum: f64,
    input: usize,
    output: usize,
}

pub fn scattering_hamiltonian(g: &Graph, eps: &[f64], k: f64) -> Result<ScatteringHamiltonian> {
    if !(k > 0.0 && k < std::f64::consts::PI) {
        return Err(domain(format!("momentum must lie in (0, π), got {k}")));
    }
    Ok(ScatteringHamiltonian {
        base: assemble_h(g, 1.0, eps)?,
        momentum: k,
        input: g.left_root(),
        output: g.right_root(),
    })
}

impl ScatteringHamiltonian {
    pub fn base(&self) -> &Hamiltonian {
        &self.base
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    /// Lead energy `−2cos k`.
    pub fn energy(&self) -> f64 {
        -2.0 * self.momentum.cos()
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn output(&self) -> usize {
        self.output
    }

    /// Diagonal term added at each root.
    pub fn boundary_term(&self) -> C64 {
        -C64::from_polar(1.0, self.momentum)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let n = self.base.dim();
        let mut m = Mat::from_fn(n, n, |_, _| C64::default());
        for i in 0..n {
            for (j, v) in self.base.matrix().row(i) {
                m[(i, j)] = C64::new(v, 0.0);
            }
        }
        let b = self.boundary_term();
        m[(self.input, self.input)] += b;
        m[(self.output, self.output)] += b;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Gluing;

    #[test]
    fn four_cycle_h0() {
        let g = Graph::sgt(1).unwrap();
        let h = assemble_h0(&g, 1.0);
        let s = h.spectrum().unwrap();
        for (a, b) in s.values.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        for v in 0..4 {
            let row_sum: f64 = h.matrix().row(v).map(|(_, x)| -x).sum();
            assert_eq!(row_sum, g.degree(v) as f64);
        }
    }

    #[test]
    fn disorder_only_touches_the_diagonal() {
        let g = Graph::mgt(3, Gluing::Random { seed: 4 }).unwrap();
        let eps = sample_disorder(&DisorderSpec::realization(2.0, 1, 0, g.num_vertices())).unwrap();
        let h = assemble_h(&g, 1.0, &eps).unwrap();
        assert_eq!(h.diagonal(), eps);
        let h0 = assemble_h0(&g, 1.0);
        assert_eq!(h.matrix().with_diagonal(&vec![0.0; eps.len()]).to_dense(), h0.to_dense());
        assert!(assemble_h(&g, 1.0, &eps[1..]).is_err());
        assert!(eps.iter().all(|e| e.abs() <= 1.0));
    }

    #[test]
    fn disorder_is_deterministic_and_zero_width_is_clean() {
        let s = DisorderSpec {
            width: 3.0,
            seed: 11,
            count: 50,
        };
        assert_eq!(sample_disorder(&s).unwrap(), sample_disorder(&s).unwrap());
        let clean = DisorderSpec { width: 0.0, ..s };
        assert!(sample_disorder(&clean).unwrap().iter().all(|&e| e == 0.0));
        assert!(sample_disorder(&DisorderSpec { width: -1.0, ..s }).is_err());
    }

    #[test]
    fn column_hamiltonian_shapes() {
        let h = column_hamiltonian(1, Layout::Sgt, 1.0).unwrap();
        assert_eq!(h.dim(), 3);
        assert_eq!(h.get(0, 1), -std::f64::consts::SQRT_2);
        let m = column_hamiltonian(3, Layout::Mgt, 1.0).unwrap();
        assert_eq!(m.dim(), 8);
        assert_eq!(m.get(3, 4), -2.0);
        assert_eq!(m.get(2, 3), -std::f64::consts::SQRT_2);
    }

    #[test]
    fn scattering_boundary() {
        let g = Graph::mgt(2, Gluing::Regular).unwrap();
        let eps = vec![0.0; g.num_vertices()];
        let s = scattering_hamiltonian(&g, &eps, std::f64::consts::FRAC_PI_2).unwrap();
        let m = s.to_dense();
        assert!((m[(0, 0)] - C64::new(0.0, -1.0)).norm() < 1e-15);
        let last = g.num_vertices() - 1;
        assert!((m[(last, last)] - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(scattering_hamiltonian(&g, &eps, 0.0).is_err());
        assert!(scattering_hamiltonian(&g, &eps, std::f64::consts::PI).is_err());
    }
}
