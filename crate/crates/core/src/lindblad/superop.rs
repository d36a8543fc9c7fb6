//! Liouvillian compiled to a sparse superoperator acting on row-major vec(ρ).
//!
//! With row-major vectorisation vec(AXB) = (A ⊗ Bᵀ) vec(X), so
//! L = −i H_eff ⊗ I + i I ⊗ conj(H_eff) + Σ γ O ⊗ conj(O)
//! where H_eff = H − (i/2) Σ γ O†O.

use num_complex::Complex64;

use super::LindbladSystem;
use crate::operator::Operator;

pub(crate) struct Liouvillian {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

fn nonzeros(op: &Operator) -> Vec<(usize, usize, Complex64)> {
    let d = op.dim();
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let v = op.get(i, j);
            if v.re != 0.0 || v.im != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

impl Liouvillian {
    pub(crate) fn compile(sys: &LindbladSystem) -> Self {
        let d = sys.dim();
        let n = d * d;
        let mut h_eff = sys.hamiltonian().clone();
        for c in sys.collapse_ops() {
            if c.rate != 0.0 {
                let odo = &c.op.dagger() * &c.op;
                h_eff = &h_eff - &odo.scale(Complex64::new(0.0, 0.5 * c.rate));
            }
        }

        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
        let minus_i = Complex64::new(0.0, -1.0);
        let plus_i = Complex64::new(0.0, 1.0);
        for (i, k, h) in nonzeros(&h_eff) {
            // −i H_eff ⊗ I
            for j in 0..d {
                triplets.push((i * d + j, k * d + j, minus_i * h));
            }
            // +i I ⊗ conj(H_eff): entry (j, l) of conj(H_eff) is at (i, k) here
            for r in 0..d {
                triplets.push((r * d + i, r * d + k, plus_i * h.conj()));
            }
        }
        for c in sys.collapse_ops() {
            if c.rate == 0.0 {
                continue;
            }
            let nz = nonzeros(&c.op);
            for &(i, k, a) in &nz {
                for &(j, l, b) in &nz {
                    triplets.push((i * d + j, k * d + l, a * b.conj() * c.rate));
                }
            }
        }

        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_start = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        // drop exact cancellations (e.g. diagonal Hamiltonian terms)
        let keep: Vec<usize> = (0..vals.len())
            .filter(|&k| vals[k].re != 0.0 || vals[k].im != 0.0)
            .collect();
        let rows: Vec<usize> = keep.iter().map(|&k| rows[k]).collect();
        let cols: Vec<usize> = keep.iter().map(|&k| cols[k]).collect();
        let vals: Vec<Complex64> = keep.iter().map(|&k| vals[k]).collect();
        for &r in &rows {
            row_start[r + 1] += 1;
        }
        for r in 0..n {
            row_start[r + 1] += row_start[r];
        }
        Self {
            dim: d,
            row_start,
            cols,
            vals,
        }
    }

    #[cfg(test)]
    pub(crate) fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    fn row(&self, r: usize, y: &[f64]) -> (f64, f64) {
        let (mut re, mut im) = (0.0, 0.0);
        for k in self.row_start[r]..self.row_start[r + 1] {
            let c = self.cols[k];
            let v = self.vals[k];
            let (yr, yi) = (y[2 * c], y[2 * c + 1]);
            re += v.re * yr - v.im * yi;
            im += v.re * yi + v.im * yr;
        }
        (re, im)
    }

    /// `out = L·y` on interleaved (re, im) storage.
    #[cfg(test)]
    pub(crate) fn apply(&self, y: &[f64], out: &mut [f64]) {
        for r in 0..self.row_start.len() - 1 {
            let (re, im) = self.row(r, y);
            out[2 * r] = re;
            out[2 * r + 1] = im;
        }
    }

    /// `out = L·y` for Hermitian `y`. A Lindbladian maps Hermitian matrices
    /// to Hermitian matrices, so only the upper triangle is evaluated and
    /// the lower one is mirrored.
    pub(crate) fn apply_hermitian(&self, y: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let (re, _) = self.row(i * d + i, y);
            out[2 * (i * d + i)] = re;
            out[2 * (i * d + i) + 1] = 0.0;
            for j in i + 1..d {
                let (re, im) = self.row(i * d + j, y);
                let (u, l) = (i * d + j, j * d + i);
                out[2 * u] = re;
                out[2 * u + 1] = im;
                out[2 * l] = re;
                out[2 * l + 1] = -im;
            }
        }
    }
}
