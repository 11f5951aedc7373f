use faer::Mat;
use num_complex::Complex64;

/// Compressed sparse row matrix with real entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros kept (structural entries matter for the graph pattern).
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside {dim}x{dim}");
            if last == Some((r, c)) {
                *vals.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c as u32);
            vals.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Copy with the diagonal replaced by `diag` (entries added if absent).
    pub fn with_diagonal(&self, diag: &[f64]) -> Self {
        assert_eq!(diag.len(), self.dim);
        let mut triplets: Vec<_> = (0..self.dim)
            .flat_map(|i| self.row(i).filter(move |&(c, _)| c != i).map(move |(c, v)| (i, c, v)))
            .collect();
        triplets.extend(diag.iter().enumerate().map(|(i, &v)| (i, i, v)));
        Self::from_triplets(self.dim, triplets)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `y = (A x − shift·x) · scale` for complex `x`.
    pub fn shifted_matvec_c(&self, x: &[Complex64], shift: f64, scale: f64, y: &mut [Complex64]) {
        for i in 0..self.dim {
            let mut acc = Complex64::new(-shift * x[i].re, -shift * x[i].im);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k] as usize] * self.vals[k];
            }
            y[i] = acc * scale;
        }
    }

    pub fn matvec_c(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.shifted_matvec_c(x, 0.0, 1.0, y);
    }

    /// Interval containing the whole spectrum of a symmetric matrix.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut center = 0.0;
            let mut radius = 0.0;
            for (c, v) in self.row(i) {
                if c == i {
                    center += v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        if self.dim == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (c, v) in self.row(i) {
                worst = worst.max((v - self.get(c, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (c, v) in self.row(i) {
                m[(i, c)] = v;
            }
        }
        m
    }

    /// Coordinate text, one `row col value` triple per line.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            for (c, v) in self.row(i) {
                out.push_str(&format!("{i} {c} {v:e}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_merged_and_ordered() {
        let m = CsrMatrix::from_triplets(3, vec![(2, 0, 1.0), (0, 1, 2.0), (0, 1, 0.5), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 2.5);
        assert_eq!(m.get(1, 1), -1.0);
        assert_eq!(m.get(2, 2), 0.0);
        let mut y = vec![0.0; 3];
        m.matvec(&[1.0, 2.0, 3.0], &mut y);
        assert_eq!(y, vec![5.0, -2.0, 1.0]);
    }

    #[test]
    fn gershgorin_bounds_a_path() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 1, -1.0), (1, 0, -1.0), (1, 2, -1.0), (2, 1, -1.0)]);
        assert_eq!(m.gershgorin(), (-2.0, 2.0));
        assert_eq!(m.asymmetry(), 0.0);
        let d = m.with_diagonal(&[0.5, 0.0, -3.0]);
        assert_eq!(d.gershgorin(), (-4.0, 2.0));
        assert_eq!(d.diagonal(), vec![0.5, 0.0, -3.0]);
    }
}
