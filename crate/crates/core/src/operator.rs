//! Dense complex operators on the composite emitter ⊗ cavity space.
//!
//! Every operator in the crate (Hamiltonians, collapse operators and density
//! matrices) is an [`Operator`]. The composite basis is ordered atom ⊗ cavity,
//! so the state |level, n⟩ sits at index `level * n_fock + n`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: DMatrix<Complex64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            m: DMatrix::from_fn(dim, dim, &mut f),
        }
    }

    /// Builds from row-major entries; `entries.len()` must be a perfect square.
    pub fn from_rows(entries: &[Complex64]) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() || dim == 0 {
            return Err(Error::InvalidSpace(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Ok(Self {
            m: DMatrix::from_row_slice(dim, dim, entries),
        })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut op = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            op.m[(i, i)] = Complex64::new(d, 0.0);
        }
        op
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidSpace(format!(
                "{}x{} matrix is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.m[(row, col)] = value;
    }

    pub fn dagger(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            m: &self.m * factor,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other)?;
        Ok(Self {
            m: &self.m * &other.m - &other.m * &self.m,
        })
    }

    /// Largest element-wise modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |A − A†| over all elements.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part (A + A†)/2, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.m + self.m.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()
            .first()
            .copied()
            .unwrap_or(f64::NAN)
    }

    /// Checks the density-matrix invariants: Hermitian to 1e-12, unit trace
    /// to 1e-10 and positive semidefinite to −1e-9.
    pub fn validate_density(&self) -> Result<()> {
        let herm = self.hermiticity_deviation();
        if herm > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "density matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {tr} is not 1"
            )));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < -1e-9 {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min_ev:e}"
            )));
        }
        Ok(())
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }

    pub(crate) fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl Mul for &Operator {
    type Output = Operator;

    /// Panics on dimension mismatch, like nalgebra's product.
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            m: &self.m * &rhs.m,
        }
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            m: &self.m + &rhs.m,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            m: &self.m - &rhs.m,
        }
    }
}

/// Bookkeeping for the atom ⊗ cavity tensor product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceLayout {
    n_levels: usize,
    n_fock: usize,
}

impl SpaceLayout {
    pub fn new(n_levels: usize, n_fock: usize) -> Result<Self> {
        if n_levels == 0 || n_fock == 0 {
            return Err(Error::InvalidSpace(format!(
                "layout needs positive sizes, got {n_levels} levels x {n_fock} Fock states"
            )));
        }
        Ok(Self { n_levels, n_fock })
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn dim(&self) -> usize {
        self.n_levels * self.n_fock
    }

    pub fn index(&self, level: usize, photons: usize) -> usize {
        debug_assert!(level < self.n_levels && photons < self.n_fock);
        level * self.n_fock + photons
    }

    /// Inverse of [`SpaceLayout::index`].
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.n_fock, index % self.n_fock)
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.n_levels {
            return Err(Error::InvalidLevel {
                level,
                n_levels: self.n_levels,
            });
        }
        Ok(())
    }

    /// Pure state |level, photons⟩⟨level, photons|.
    pub fn basis_density(&self, level: usize, photons: usize) -> Result<Operator> {
        self.check_level(level)?;
        if photons >= self.n_fock {
            return Err(Error::InvalidSpace(format!(
                "photon number {photons} exceeds truncation {}",
                self.n_fock
            )));
        }
        let mut rho = Operator::zeros(self.dim());
        let i = self.index(level, photons);
        rho.set(i, i, ONE);
        Ok(rho)
    }

    /// Cavity annihilation operator lifted to the composite space, I ⊗ a.
    pub fn cavity_annihilation(&self) -> Result<Operator> {
        Ok(kron(
            &Operator::identity(self.n_levels),
            &annihilation(self.n_fock)?,
        ))
    }

    /// |level⟩⟨level| ⊗ I.
    pub fn projector(&self, level: usize) -> Result<Operator> {
        transition(self, level, level)
    }
}

/// Kronecker product, `result[(i·nb+k),(j·nb+l)] = a[i,j]·b[k,l]`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator {
        m: a.m.kronecker(&b.m),
    }
}

/// Truncated photon annihilation operator, `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(n_fock: usize) -> Result<Operator> {
    if n_fock < 2 {
        return Err(Error::InvalidSpace(format!(
            "annihilation needs at least 2 Fock states, got {n_fock}"
        )));
    }
    let mut a = Operator::zeros(n_fock);
    for n in 1..n_fock {
        a.set(n - 1, n, Complex64::new((n as f64).sqrt(), 0.0));
    }
    Ok(a)
}

pub fn creation(n_fock: usize) -> Result<Operator> {
    Ok(annihilation(n_fock)?.dagger())
}

/// |to⟩⟨from| ⊗ I_cavity.
pub fn transition(layout: &SpaceLayout, from_level: usize, to_level: usize) -> Result<Operator> {
    layout.check_level(from_level)?;
    layout.check_level(to_level)?;
    let mut op = Operator::zeros(layout.dim());
    for n in 0..layout.n_fock() {
        op.set(layout.index(to_level, n), layout.index(from_level, n), ONE);
    }
    Ok(op)
}

/// Tr(op · rho).
pub fn expectation(op: &Operator, rho: &Operator) -> Result<Complex64> {
    op.check_same_dim(rho)?;
    let n = op.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += op.m[(i, k)] * rho.m[(k, i)];
        }
    }
    Ok(acc)
}

/// Multiplies a unit-free frequency in GHz by 2π to get rad/ns.
pub fn angular(f_ghz: f64) -> f64 {
    std::f64::consts::TAU * f_ghz
}

/// Inverse of [`angular`].
pub fn ordinary(omega: f64) -> f64 {
    omega / std::f64::consts::TAU
}
