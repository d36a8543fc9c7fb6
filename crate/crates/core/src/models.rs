//! Concrete emitter–cavity models: the three-level λ-system, the four-level
//! Voigt-geometry quantum dot, pure dephasing and Gaussian spectral diffusion.
//!
//! Frequencies and rates are stored as ordinary frequencies in GHz (f = ω/2π)
//! and converted to rad/ns by [`crate::operator::angular`] when a model is
//! built.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{Collapse, LindbladSystem};
use crate::operator::{angular, transition, Operator, SpaceLayout};

/// Level indices shared by both emitter models.
pub mod levels {
    pub const G0: usize = 0;
    pub const G1: usize = 1;
    /// Excited state of the three-level λ-system.
    pub const E: usize = 2;
    /// Four-level model: excited state on the vertical transition from |g₀⟩.
    pub const E0: usize = 2;
    /// Four-level model: excited state on the vertical transition from |g₁⟩.
    pub const E1: usize = 3;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Vacuum Rabi coupling g/2π of the |g₀⟩↔|e₀⟩ transition, GHz.
    pub g: f64,
    /// Coupling of |g₁⟩↔|e₁⟩ (four-level only); `None` means equal to `g`.
    pub g_e1: Option<f64>,
    /// Cavity energy decay rate κ/2π, GHz.
    pub kappa: f64,
    /// Spontaneous emission rates γ₀..γ₃ /2π in GHz. A single entry applies
    /// to every channel; the three-level model reads γ₀ and γ₁.
    pub gamma: Vec<f64>,
    /// Pure dephasing γ_d/2π of the excited states, GHz.
    pub gamma_d: f64,
    /// Zeeman splitting Δz/2π between the vertical transitions, GHz.
    pub delta_z: f64,
    pub omega_c: f64,
    pub omega_a: f64,
    pub omega_laser: f64,
    /// Probe amplitude in √(photons/ns); `None` selects √(0.01·2g²/κ).
    pub epsilon: Option<f64>,
    /// Fraction of κ through which the probe is injected (the input port).
    pub drive_coupling: f64,
    /// Overall photon collection efficiency.
    pub eta: f64,
    /// Spectral-diffusion shift Δω/2π of the emitter transitions, GHz.
    pub delta_omega: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl PhysicalParams {
    /// g/2π = 20 GHz, κ/2π = 6 GHz, γ/2π = 0.1 GHz on every channel, all
    /// transitions resonant, Δz/2π = 100 GHz, η = 1 %.
    pub fn reference() -> Self {
        Self {
            g: 20.0,
            g_e1: None,
            kappa: 6.0,
            gamma: vec![0.1; 4],
            gamma_d: 0.0,
            delta_z: 100.0,
            omega_c: 0.0,
            omega_a: 0.0,
            omega_laser: 0.0,
            epsilon: None,
            drive_coupling: 0.5,
            eta: 0.01,
            delta_omega: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma_d", self.gamma_d),
            ("delta_z", self.delta_z),
            ("omega_c", self.omega_c),
            ("omega_a", self.omega_a),
            ("omega_laser", self.omega_laser),
            ("drive_coupling", self.drive_coupling),
            ("eta", self.eta),
            ("delta_omega", self.delta_omega),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        for (name, v) in [("kappa", self.kappa), ("gamma_d", self.gamma_d)] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} is negative")));
            }
        }
        if self.gamma.is_empty() || self.gamma.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be a non-empty list of non-negative rates, got {:?}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!(
                "eta = {} outside [0, 1]",
                self.eta
            )));
        }
        if !(self.drive_coupling > 0.0 && self.drive_coupling <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "drive_coupling = {} outside (0, 1]",
                self.drive_coupling
            )));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!("epsilon = {e} is invalid")));
            }
        }
        if let Some(g1) = self.g_e1 {
            if !g1.is_finite() {
                return Err(Error::InvalidParameter("g_e1 is not finite".into()));
            }
        }
        Ok(())
    }

    /// Spontaneous rate of channel `k` in GHz.
    pub fn gamma_channel(&self, k: usize) -> Result<f64> {
        match self.gamma.len() {
            1 => Ok(self.gamma[0]),
            len if k < len => Ok(self.gamma[k]),
            len => Err(Error::InvalidParameter(format!(
                "gamma has {len} entries, channel γ{k} requested"
            ))),
        }
    }

    /// Probe amplitude in √(photons/ns).
    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or_else(|| {
            let g = angular(self.g);
            let kappa = angular(self.kappa);
            if kappa > 0.0 {
                (0.01 * 2.0 * g * g / kappa).sqrt()
            } else {
                0.0
            }
        })
    }

    /// Coefficient of (a + a†) in the Hamiltonian, rad/ns.
    pub fn drive_strength(&self) -> f64 {
        (self.drive_coupling * angular(self.kappa)).sqrt() * self.epsilon()
    }
}

/// C = 2g²/(κγ₀); the 2π factors cancel.
pub fn cooperativity(p: &PhysicalParams) -> Result<f64> {
    let gamma0 = p.gamma_channel(0)?;
    if p.kappa <= 0.0 || gamma0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cooperativity needs kappa > 0 and gamma0 > 0 (kappa = {}, gamma0 = {gamma0})",
            p.kappa
        )));
    }
    Ok(2.0 * p.g * p.g / (p.kappa * gamma0))
}

fn drive_and_cavity(p: &PhysicalParams, layout: &SpaceLayout) -> Result<(Operator, Operator)> {
    let a = layout.cavity_annihilation()?;
    let ad = a.dagger();
    let detuning = angular(p.omega_c - p.omega_laser);
    let mut h = (&ad * &a).scale_real(detuning);
    h = &h + &(&a + &ad).scale_real(p.drive_strength());
    Ok((h, a))
}

/// i g (a|e⟩⟨g| − a†|g⟩⟨e|), with g in rad/ns.
fn jaynes_cummings(
    layout: &SpaceLayout,
    a: &Operator,
    ground: usize,
    excited: usize,
    g: f64,
) -> Result<Operator> {
    let raise = transition(layout, ground, excited)?;
    let lower = raise.dagger();
    let term = &(a * &raise) - &(&a.dagger() * &lower);
    Ok(term.scale(Complex64::new(0.0, g)))
}

fn require_levels(layout: &SpaceLayout, n: usize) -> Result<()> {
    if layout.n_levels() != n {
        return Err(Error::WrongLayout(format!(
            "model needs {n} emitter levels, layout has {}",
            layout.n_levels()
        )));
    }
    if layout.n_fock() < 2 {
        return Err(Error::WrongLayout(format!(
            "cavity truncation {} too small",
            layout.n_fock()
        )));
    }
    Ok(())
}

/// λ-system {|g₀⟩, |g₁⟩, |e⟩} with the cavity on |g₀⟩↔|e⟩.
pub fn build_three_level(p: &PhysicalParams, layout: &SpaceLayout) -> Result<LindbladSystem> {
    use levels::{E, G0, G1};
    p.validate()?;
    require_levels(layout, 3)?;
    let (drive, a) = drive_and_cavity(p, layout)?;
    let atom =
        transition(layout, E, E)?.scale_real(angular(p.omega_a + p.delta_omega - p.omega_laser));
    let coupling = jaynes_cummings(layout, &a, G0, E, angular(p.g))?;
    let h = &(&drive + &atom) + &coupling;

    let mut collapse = vec![
        Collapse {
            rate: angular(p.kappa),
            op: a.clone(),
        },
        Collapse {
            rate: angular(p.gamma_channel(0)?),
            op: transition(layout, E, G0)?,
        },
        Collapse {
            rate: angular(p.gamma_channel(1)?),
            op: transition(layout, E, G1)?,
        },
    ];
    if p.gamma_d > 0.0 {
        collapse.push(Collapse {
            rate: 2.0 * angular(p.gamma_d),
            op: transition(layout, E, E)?,
        });
    }
    LindbladSystem::new(*layout, h, collapse, a, angular(p.kappa))
}

/// Voigt-geometry dot {|g₀⟩, |g₁⟩, |e₀⟩, |e₁⟩}. The cavity couples only the
/// vertical transitions; the cross transitions appear as decay channels.
/// Spectral diffusion shifts both excited levels rigidly by Δω.
pub fn build_four_level(p: &PhysicalParams, layout: &SpaceLayout) -> Result<LindbladSystem> {
    use levels::{E0, E1, G0, G1};
    p.validate()?;
    require_levels(layout, 4)?;
    if p.gamma.len() != 1 && p.gamma.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "four-level model needs 1 or 4 spontaneous rates, got {}",
            p.gamma.len()
        )));
    }
    let (drive, a) = drive_and_cavity(p, layout)?;
    let shift = p.omega_a + p.delta_omega - p.omega_laser;
    let atom = &transition(layout, E0, E0)?.scale_real(angular(shift))
        + &transition(layout, E1, E1)?.scale_real(angular(shift - p.delta_z));
    let coupling = &jaynes_cummings(layout, &a, G0, E0, angular(p.g))?
        + &jaynes_cummings(layout, &a, G1, E1, angular(p.g_e1.unwrap_or(p.g)))?;
    let h = &(&drive + &atom) + &coupling;

    let mut collapse = vec![Collapse {
        rate: angular(p.kappa),
        op: a.clone(),
    }];
    for (k, (from, to)) in [(E0, G0), (E0, G1), (E1, G0), (E1, G1)]
        .into_iter()
        .enumerate()
    {
        collapse.push(Collapse {
            rate: angular(p.gamma_channel(k)?),
            op: transition(layout, from, to)?,
        });
    }
    if p.gamma_d > 0.0 {
        for e in [E0, E1] {
            collapse.push(Collapse {
                rate: 2.0 * angular(p.gamma_d),
                op: transition(layout, e, e)?,
            });
        }
    }
    LindbladSystem::new(*layout, h, collapse, a, angular(p.kappa))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    /// FWHM γ_I/2π of the Gaussian distribution of Δω/2π, GHz.
    pub gamma_i: f64,
    pub n_nodes: usize,
    /// Half-width covered by the nodes in units of γ_I; informational.
    pub span: f64,
}

impl Default for DiffusionSpec {
    fn default() -> Self {
        Self {
            gamma_i: 0.0,
            n_nodes: 21,
            span: 1.5,
        }
    }
}

impl DiffusionSpec {
    pub fn new(gamma_i: f64, n_nodes: usize) -> Self {
        Self {
            gamma_i,
            n_nodes,
            ..Self::default()
        }
    }

    /// Standard deviation of the Gaussian, σ = γ_I / (2√(2 ln 2)).
    pub fn sigma(&self) -> f64 {
        self.gamma_i / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionNode {
    /// Δω/2π in GHz.
    pub delta_omega: f64,
    pub weight: f64,
}

/// Physicists' Gauss–Hermite rule for ∫ e^{−x²} f(x) dx (Golub–Welsch).
/// Nodes ascending; weights sum to √π.
pub fn gauss_hermite(n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidQuadrature("zero nodes".into()));
    }
    let jacobi = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mu0 = std::f64::consts::PI.sqrt();
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    // enforce the exact mirror symmetry of the rule
    for k in 0..n / 2 {
        let m = n - 1 - k;
        let x = 0.5 * (rule[m].0 - rule[k].0);
        let w = 0.5 * (rule[m].1 + rule[k].1);
        rule[k] = (-x, w);
        rule[m] = (x, w);
    }
    if n % 2 == 1 {
        rule[n / 2].0 = 0.0;
    }
    Ok(rule)
}

/// Nodes and normalised weights for averaging over the spectral-diffusion
/// Gaussian G(Δω) = (2/γ_I)√(ln2/π) exp(−4 ln2 (Δω/γ_I)²).
pub fn sample_diffusion(spec: &DiffusionSpec) -> Result<Vec<DiffusionNode>> {
    if !(spec.gamma_i >= 0.0 && spec.gamma_i.is_finite()) {
        return Err(Error::InvalidQuadrature(format!(
            "gamma_I = {} must be finite and non-negative",
            spec.gamma_i
        )));
    }
    if spec.gamma_i == 0.0 {
        return Ok(vec![DiffusionNode {
            delta_omega: 0.0,
            weight: 1.0,
        }]);
    }
    if spec.n_nodes < 3 || spec.n_nodes.is_multiple_of(2) {
        return Err(Error::InvalidQuadrature(format!(
            "n_nodes must be odd and at least 3, got {}",
            spec.n_nodes
        )));
    }
    let rule = gauss_hermite(spec.n_nodes)?;
    let total: f64 = rule.iter().map(|r| r.1).sum();
    let scale = std::f64::consts::SQRT_2 * spec.sigma();
    Ok(rule
        .into_iter()
        .map(|(x, w)| DiffusionNode {
            delta_omega: scale * x,
            weight: w / total,
        })
        .collect())
}
