//! Lindblad master-equation integration with an in-state photon counter.
//!
//! The density matrix obeys dρ/dt = −i[H, ρ] + Σₖ γₖ D(Oₖ)ρ with
//! D(O)ρ = OρO† − ½O†Oρ − ½ρO†O (ħ = 1, times in ns, rates in rad/ns).
//! [`evolve`] integrates ρ together with the transmitted-photon integral
//! ∫ κ|Tr(aρ)|² dt so both share the same error control.

mod dopri;
mod superop;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{expectation, Operator, SpaceLayout};

pub use dopri::Stats as IntegratorStats;
use superop::Liouvillian;

/// One decay channel `rate · D(op)`.
#[derive(Clone, Debug)]
pub struct Collapse {
    pub rate: f64,
    pub op: Operator,
}

/// Hamiltonian, decay channels and the cavity output port of one model.
#[derive(Clone, Debug)]
pub struct LindbladSystem {
    layout: SpaceLayout,
    hamiltonian: Operator,
    collapse: Vec<Collapse>,
    cavity: Operator,
    kappa: f64,
}

impl LindbladSystem {
    /// `cavity` is the mode operator `a` whose coherent amplitude is
    /// detected; `kappa` is the output rate multiplying |Tr(aρ)|².
    pub fn new(
        layout: SpaceLayout,
        hamiltonian: Operator,
        collapse: Vec<Collapse>,
        cavity: Operator,
        kappa: f64,
    ) -> Result<Self> {
        let dim = layout.dim();
        for op in std::iter::once(&hamiltonian)
            .chain(collapse.iter().map(|c| &c.op))
            .chain(std::iter::once(&cavity))
        {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
        }
        let herm = hamiltonian.hermiticity_deviation();
        if herm > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "Hamiltonian is not Hermitian (deviation {herm:e})"
            )));
        }
        for c in &collapse {
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "collapse rate {} must be finite and non-negative",
                    c.rate
                )));
            }
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "output rate {kappa} must be finite and non-negative"
            )));
        }
        Ok(Self {
            layout,
            hamiltonian,
            collapse,
            cavity,
            kappa,
        })
    }

    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[Collapse] {
        &self.collapse
    }

    pub fn cavity(&self) -> &Operator {
        &self.cavity
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Transmitted flux κ|Tr(aρ)|² in photons/ns.
    pub fn flux(&self, rho: &Operator) -> Result<f64> {
        Ok(self.kappa * expectation(&self.cavity, rho)?.norm_sqr())
    }

    /// Ground-state density matrix |level, 0⟩⟨level, 0| (cavity in vacuum).
    pub fn initial_state(&self, level: usize) -> Result<Operator> {
        self.layout.basis_density(level, 0)
    }
}

#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub output_grid: Vec<f64>,
}

impl IntegratorConfig {
    pub fn with_grid(output_grid: Vec<f64>) -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 1.0,
            max_steps: 200_000_000,
            output_grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerances and max_step must be positive (rel {}, abs {}, max_step {})",
                self.rel_tol, self.abs_tol, self.max_step
            )));
        }
        match self.output_grid.first() {
            None => return Err(Error::InvalidConfig("empty output grid".into())),
            Some(&t0) if t0 != 0.0 => {
                return Err(Error::InvalidConfig(format!(
                    "output grid must start at 0, starts at {t0}"
                )))
            }
            _ => {}
        }
        if self
            .output_grid
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidConfig(
                "output grid must be strictly increasing and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Worst-case deviations from the density-matrix invariants over a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantReport {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// κ|Tr(aρ)|², photons/ns.
    pub flux: Vec<f64>,
    /// ∫₀ᵗ κ|Tr(aρ)|² dt′ before collection efficiency.
    pub accumulated: Vec<f64>,
    /// κ⟨a†a⟩; diagnostic only, not used for counting.
    pub incoherent_flux: Vec<f64>,
    /// `populations[i][level]` at `times[i]`.
    pub populations: Vec<Vec<f64>>,
    pub final_rho: Operator,
    pub invariants: InvariantReport,
    pub stats: IntegratorStats,
}

/// D(op)ρ = OρO† − ½O†Oρ − ½ρO†O.
pub fn dissipator(op: &Operator, rho: &Operator) -> Result<Operator> {
    op.check_same_dim(rho)?;
    let od = op.dagger();
    let odo = &od * op;
    let jump = &(op * rho) * &od;
    let anti = &(&odo * rho) + &(rho * &odo);
    Ok(&jump - &anti.scale_real(0.5))
}

/// −i[H, ρ] + Σ rate·D(op)ρ.
pub fn rhs(sys: &LindbladSystem, rho: &Operator) -> Result<Operator> {
    if rho.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: rho.dim(),
        });
    }
    let mut out = sys
        .hamiltonian
        .commutator(rho)?
        .scale(Complex64::new(0.0, -1.0));
    for c in &sys.collapse {
        if c.rate != 0.0 {
            out = &out + &dissipator(&c.op, rho)?.scale_real(c.rate);
        }
    }
    Ok(out)
}

/// Integrates from `rho0` over `cfg.output_grid`.
pub fn evolve(sys: &LindbladSystem, rho0: &Operator, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: rho0.dim(),
        });
    }
    rho0.validate_density()?;

    let dim = sys.dim();
    let n = dim * dim;
    let liouvillian = Liouvillian::compile(sys);
    // Tr(aρ) = Σ a_ij ρ_ji as a sparse functional over the row-major vec(ρ)
    let amplitude: Vec<(usize, Complex64)> = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let v = sys.cavity.get(i, j);
            (v != Complex64::new(0.0, 0.0)).then_some((j * dim + i, v))
        })
        .collect();
    let kappa = sys.kappa;

    let mut y0 = vec![0.0; 2 * n + 1];
    for (k, z) in rho0.to_row_major().into_iter().enumerate() {
        y0[2 * k] = z.re;
        y0[2 * k + 1] = z.im;
    }

    let mut f = |y: &[f64], dy: &mut [f64]| {
        liouvillian.apply_hermitian(&y[..2 * n], &mut dy[..2 * n]);
        let mut amp = Complex64::new(0.0, 0.0);
        for &(idx, coeff) in &amplitude {
            amp += coeff * Complex64::new(y[2 * idx], y[2 * idx + 1]);
        }
        dy[2 * n] = kappa * amp.norm_sqr();
    };

    let grid = &cfg.output_grid;
    let mut traj = Trajectory {
        times: grid.clone(),
        flux: Vec::with_capacity(grid.len()),
        accumulated: Vec::with_capacity(grid.len()),
        incoherent_flux: Vec::with_capacity(grid.len()),
        populations: Vec::with_capacity(grid.len()),
        final_rho: rho0.clone(),
        invariants: InvariantReport {
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        },
        stats: IntegratorStats::default(),
    };
    let number = &sys.cavity.dagger() * &sys.cavity;
    let layout = sys.layout;
    let mut sample_error = None;

    let tol = dopri::Tolerances {
        rel: cfg.rel_tol,
        abs: cfg.abs_tol,
        max_step: cfg.max_step,
        max_steps: cfg.max_steps,
    };
    let stats = dopri::integrate(&mut f, &y0, grid, &tol, |_, _, y| {
        let entries: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(y[2 * k], y[2 * k + 1]))
            .collect();
        let rho = match Operator::from_rows(&entries) {
            Ok(r) => r,
            Err(e) => {
                sample_error.get_or_insert(e);
                return;
            }
        };
        let amp = expectation(&sys.cavity, &rho).unwrap_or_default();
        let photons = expectation(&number, &rho).unwrap_or_default();
        traj.flux.push(kappa * amp.norm_sqr());
        traj.incoherent_flux.push(kappa * photons.re);
        traj.accumulated.push(y[2 * n]);
        traj.populations.push(
            (0..layout.n_levels())
                .map(|l| {
                    (0..layout.n_fock())
                        .map(|p| {
                            let i = layout.index(l, p);
                            rho.get(i, i).re
                        })
                        .sum()
                })
                .collect(),
        );
        let inv = &mut traj.invariants;
        inv.max_trace_error = inv
            .max_trace_error
            .max((rho.trace() - Complex64::new(1.0, 0.0)).norm());
        inv.max_hermiticity_error = inv.max_hermiticity_error.max(rho.hermiticity_deviation());
        inv.min_eigenvalue = inv.min_eigenvalue.min(rho.min_eigenvalue());
        traj.final_rho = rho;
    })?;
    if let Some(e) = sample_error {
        return Err(e);
    }
    traj.stats = stats;
    Ok(traj)
}

#[cfg(test)]
mod tests;
