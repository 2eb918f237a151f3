//! Gamma matrices in the chiral (Weyl) basis and on-shell Dirac spinors.
//!
//! Natural units (ħ = c = 1) and metric signature (+,−,−,−) throughout.
//! In this basis
//!
//! ```text
//! γ⁰ = [[0, 1], [1, 0]],   γⁱ = [[0, σⁱ], [−σⁱ, 0]]
//! u(p, ξ) = ( √(p·σ) ξ , √(p·σ̄) ξ )
//! ```
//!
//! with `p·σ = E − p⃗·σ⃗` and `p·σ̄ = E + p⃗·σ⃗`. Spinors are normalized to
//! `u†u = 2E`, `ūu = 2m`.

use std::ops::{Add, Neg, Sub};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{block2, hermitian_sqrt, pauli, ComplexMatrix, ComplexVector, C64};

/// Metric diagonal `g^{μμ} = g_{μμ}`.
pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// On-shell tolerance on `|p² − m²|`, relative to `max(1, E²)`.
pub const ON_SHELL_TOL: f64 = 1e-9;

/// Real energy-momentum (or spacetime) four-vector with upper indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FourVector {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FourVector {
    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.t, self.x, self.y, self.z]
    }

    pub fn at_rest(mass: f64) -> Self {
        Self::new(mass, 0.0, 0.0, 0.0)
    }

    /// On-shell momentum with positive energy for the given 3-momentum.
    pub fn on_shell(mass: f64, p: [f64; 3]) -> Self {
        let e = (mass * mass + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        Self::new(e, p[0], p[1], p[2])
    }

    pub fn spatial(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn spatial_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Minkowski product `a·b = a⁰b⁰ − a⃗·b⃗`.
    pub fn dot(self, other: Self) -> f64 {
        self.t * other.t - self.x * other.x - self.y * other.y - self.z * other.z
    }

    pub fn square(self) -> f64 {
        self.dot(self)
    }

    /// Lower-index components `p_μ = g_{μν} p^ν`.
    pub fn lowered(self) -> [f64; 4] {
        [self.t, -self.x, -self.y, -self.z]
    }

    pub fn mass_shell_defect(self, mass: f64) -> f64 {
        (self.square() - mass * mass).abs()
    }

    pub fn is_on_shell(self, mass: f64) -> bool {
        self.mass_shell_defect(mass) <= ON_SHELL_TOL * (self.t * self.t).max(1.0)
    }

    pub fn is_physical(self) -> bool {
        self.t > 0.0
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_at_rest(self, tol: f64) -> bool {
        self.spatial_norm() <= tol
    }
}

impl Add for FourVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.t + o.t, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for FourVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.t - o.t, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for FourVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.t, -self.x, -self.y, -self.z)
    }
}

/// Spin orientation along z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SpinLabel {
    Up,
    Down,
}

impl SpinLabel {
    pub const ALL: [SpinLabel; 2] = [SpinLabel::Up, SpinLabel::Down];

    /// Position in the `(↑, ↓)` basis.
    pub fn index(self) -> usize {
        match self {
            SpinLabel::Up => 0,
            SpinLabel::Down => 1,
        }
    }

    pub fn xi(self) -> ComplexVector {
        ComplexVector::basis(2, self.index())
    }

    pub fn flipped(self) -> Self {
        match self {
            SpinLabel::Up => SpinLabel::Down,
            SpinLabel::Down => SpinLabel::Up,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            SpinLabel::Up => 'u',
            SpinLabel::Down => 'd',
        }
    }

    pub fn from_symbol(ch: char) -> Option<Self> {
        match ch {
            'u' | 'U' | '+' => Some(SpinLabel::Up),
            'd' | 'D' | '-' => Some(SpinLabel::Down),
            _ => None,
        }
    }
}

/// Gamma matrices with the Pauli four-vectors used to build them.
#[derive(Clone, Debug)]
pub struct GammaBasis {
    pub gamma: [ComplexMatrix; 4],
    /// `σ^μ = (1, σ⃗)`
    pub sigma: [ComplexMatrix; 4],
    /// `σ̄^μ = (1, −σ⃗)`
    pub sigma_bar: [ComplexMatrix; 4],
}

impl GammaBasis {
    fn build() -> Self {
        let [sx, sy, sz] = pauli();
        let id = ComplexMatrix::identity(2);
        let zero = ComplexMatrix::zeros(2, 2);
        let sigma = [id.clone(), sx.clone(), sy.clone(), sz.clone()];
        let sigma_bar = [id.clone(), -&sx, -&sy, -&sz];
        let gamma = std::array::from_fn(|mu| block2(&zero, &sigma[mu], &sigma_bar[mu], &zero));
        Self {
            gamma,
            sigma,
            sigma_bar,
        }
    }

    /// Shared chiral-basis instance.
    pub fn weyl() -> &'static GammaBasis {
        static BASIS: OnceLock<GammaBasis> = OnceLock::new();
        BASIS.get_or_init(Self::build)
    }

    pub fn gamma0(&self) -> &ComplexMatrix {
        &self.gamma[0]
    }

    /// `γ^μ p_μ`.
    pub fn slash(&self, p: FourVector) -> ComplexMatrix {
        let pl = p.lowered();
        let mut out = ComplexMatrix::zeros(4, 4);
        for (g, &pmu) in self.gamma.iter().zip(&pl) {
            out = &out + &g.scale_real(pmu);
        }
        out
    }

    /// Largest entry of `{γ^μ, γ^ν} − 2g^{μν}·1` over all index pairs.
    pub fn clifford_defect(&self) -> f64 {
        let id = ComplexMatrix::identity(4);
        let mut worst: f64 = 0.0;
        for mu in 0..4 {
            for nu in 0..4 {
                let g = if mu == nu { METRIC[mu] } else { 0.0 };
                let ac = self.gamma[mu].anticommutator(&self.gamma[nu]);
                worst = worst.max(ac.max_abs_diff(&id.scale_real(2.0 * g)));
            }
        }
        worst
    }
}

/// `p_μσ^μ = E − p⃗·σ⃗`, or `p_μσ̄^μ = E + p⃗·σ⃗` when `barred`.
pub fn pauli_dot(p: FourVector, barred: bool) -> ComplexMatrix {
    let basis = GammaBasis::weyl();
    let set = if barred { &basis.sigma_bar } else { &basis.sigma };
    let pl = p.lowered();
    let mut out = ComplexMatrix::zeros(2, 2);
    for (s, &pmu) in set.iter().zip(&pl) {
        out = &out + &s.scale_real(pmu);
    }
    out
}

/// Positive-energy Dirac spinor tagged with its momentum and mass.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracSpinor {
    pub components: ComplexVector,
    pub momentum: FourVector,
    pub mass: f64,
}

impl DiracSpinor {
    /// Raw constructor with no on-shell or Dirac-equation checks.
    pub fn from_parts(components: ComplexVector, momentum: FourVector, mass: f64) -> Self {
        assert_eq!(components.dim(), 4, "Dirac spinors have four components");
        Self {
            components,
            momentum,
            mass,
        }
    }

    /// `ū = u†γ⁰` as a row, returned as the conjugated column entries.
    pub fn dirac_adjoint(&self) -> ComplexVector {
        let g0 = GammaBasis::weyl().gamma0();
        // (u†γ⁰)_j = Σ_i conj(u_i) γ⁰_{ij}
        let u = &self.components;
        ComplexVector::new((0..4).map(|j| (0..4).map(|i| u[i].conj() * g0[(i, j)]).sum()).collect())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.norm_sqr()
    }
}

/// `u(p, ξ) = (√(p·σ) ξ, √(p·σ̄) ξ)`.
pub fn u_spinor(p: FourVector, xi: &ComplexVector, mass: f64) -> Result<DiracSpinor> {
    if mass <= 0.0 {
        return Err(Error::NonPositiveInput {
            name: "mass",
            value: mass,
        });
    }
    if !p.is_physical() || !p.is_on_shell(mass) {
        return Err(Error::OffShell(p.mass_shell_defect(mass)));
    }
    if xi.dim() != 2 || !xi.is_normalized(1e-12) {
        return Err(Error::NotNormalizedSpinor(xi.norm_sqr()));
    }
    let upper = hermitian_sqrt(&pauli_dot(p, false))?.apply(xi);
    let lower = hermitian_sqrt(&pauli_dot(p, true))?.apply(xi);
    let mut comps = upper.into_vec();
    comps.extend(lower.into_vec());
    Ok(DiracSpinor::from_parts(ComplexVector::new(comps), p, mass))
}

/// Spinor with a z-axis spin label.
pub fn u_labeled(p: FourVector, spin: SpinLabel, mass: f64) -> Result<DiracSpinor> {
    u_spinor(p, &spin.xi(), mass)
}

/// Spinor at rest: `√m (ξ, ξ)`.
pub fn u_rest(spin: SpinLabel, mass: f64) -> DiracSpinor {
    u_labeled(FourVector::at_rest(mass), spin, mass).expect("rest frame is on shell")
}

/// `‖(γ^μ p_μ − m)u‖₂`.
pub fn dirac_residual(u: &DiracSpinor) -> f64 {
    let op = &GammaBasis::weyl().slash(u.momentum) - &ComplexMatrix::identity(4).scale_real(u.mass);
    op.apply(&u.components).norm()
}

/// `ū_out Γ u_in = u_out† γ⁰ Γ u_in`.
pub fn bilinear(u_out: &DiracSpinor, gamma: &ComplexMatrix, u_in: &DiracSpinor) -> C64 {
    let bar = u_out.dirac_adjoint();
    let g_in = gamma.apply(&u_in.components);
    bar.as_slice().iter().zip(g_in.as_slice()).map(|(a, b)| a * b).sum()
}

/// `ū_out γ^μ u_in` for μ = 0..3 (upper index).
pub fn vector_current(u_out: &DiracSpinor, u_in: &DiracSpinor) -> [C64; 4] {
    let basis = GammaBasis::weyl();
    std::array::from_fn(|mu| bilinear(u_out, &basis.gamma[mu], u_in))
}

/// The 2x2 Gram matrix `u(p, a)† u(p, b)` for a = ↑, ↓.
pub fn spin_basis_gram(p: FourVector, mass: f64) -> Result<ComplexMatrix> {
    let us = [u_labeled(p, SpinLabel::Up, mass)?, u_labeled(p, SpinLabel::Down, mass)?];
    let mut g = ComplexMatrix::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            g[(a, b)] = us[a].components.inner(&us[b].components);
        }
    }
    Ok(g)
}
