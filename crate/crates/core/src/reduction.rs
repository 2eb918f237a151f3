//! Nonrelativistic potentials read off from the one-photon amplitude.
//!
//! Spin operators act on the ordered two-spin basis `(↑↑, ↑↓, ↓↑, ↓↓)`;
//! matrix element `(a, b)` is `⟨a|V|b⟩` with `a` outgoing and `b` incoming.
//!
//! Conventions:
//!
//! - `q⃗ = p⃗' − p⃗` (outgoing minus incoming) everywhere.
//! - The amplitude is built from spinors normalized to `ūu = 2m`, so each
//!   current carries a factor `2m`. The momentum kernels returned here have
//!   that `(2m)²` divided out. [`coulomb_position`] keeps it, i.e. returns
//!   `(2m)²e²/(4πr)`; the physical Coulomb energy is that over `(2m)²`.
//! - Fourier pairs are used analytically: `e²/|q|² ↔ e²/(4πr)` and
//!   `−(e/2m)²(σ⃗₁×q⃗)·(σ⃗₂×q⃗)/|q|² ↔ −μ⃗₁·∇×(μ⃗₂×∇ 1/(4πr))`. The latter
//!   also contains a contact term `(2/3)μ⃗₁·μ⃗₂ δ(r)` that no position-space
//!   routine here evaluates.

use std::f64::consts::PI;

use serde::Serialize;

use crate::amplitude::{elastic_kinematics, tree_direct_term, ScatteringKinematics};
use crate::dirac::SpinLabel;
use crate::error::{Error, Result};
use crate::tensor::{c, kron, pauli, ComplexMatrix, C64, I};

/// A 4x4 operator on two spins.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinOperator(ComplexMatrix);

impl SpinOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(Error::DimensionMismatch(format!("{}x{} spin operator", m.rows(), m.cols())));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// `⟨out|V|in⟩` for z-axis labels.
    pub fn element(&self, out: [SpinLabel; 2], inc: [SpinLabel; 2]) -> C64 {
        self.0[(spin_index(out), spin_index(inc))]
    }

    /// Restriction to `span{|↓↑⟩, |↑↓⟩}` in that order.
    pub fn flip_flop_block(&self) -> ComplexMatrix {
        let idx = [2, 1];
        let mut b = ComplexMatrix::zeros(2, 2);
        for (a, &i) in idx.iter().enumerate() {
            for (bb, &j) in idx.iter().enumerate() {
                b[(a, bb)] = self.0[(i, j)];
            }
        }
        b
    }
}

/// Index of `|ε₁ε₂⟩` in `(↑↑, ↑↓, ↓↑, ↓↓)`.
pub fn spin_index(spins: [SpinLabel; 2]) -> usize {
    2 * spins[0].index() + spins[1].index()
}

/// The four basis labels in index order.
pub const SPIN_PAIRS: [[SpinLabel; 2]; 4] = [
    [SpinLabel::Up, SpinLabel::Up],
    [SpinLabel::Up, SpinLabel::Down],
    [SpinLabel::Down, SpinLabel::Up],
    [SpinLabel::Down, SpinLabel::Down],
];

/// `σⁱ ⊗ 1` for i = x, y, z.
pub fn sigma_first() -> [ComplexMatrix; 3] {
    let id = ComplexMatrix::identity(2);
    pauli().map(|s| kron(&s, &id))
}

/// `1 ⊗ σⁱ` for i = x, y, z.
pub fn sigma_second() -> [ComplexMatrix; 3] {
    let id = ComplexMatrix::identity(2);
    pauli().map(|s| kron(&id, &s))
}

/// `Σᵢⱼ Kᵢⱼ σᵢ ⊗ σⱼ`.
fn bilinear_spin_form(k: &[[f64; 3]; 3]) -> ComplexMatrix {
    let s = pauli();
    let mut out = ComplexMatrix::zeros(4, 4);
    for i in 0..3 {
        for j in 0..3 {
            if k[i][j] != 0.0 {
                out = &out + &kron(&s[i], &s[j]).scale_real(k[i][j]);
            }
        }
    }
    out
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositiveInput { name, value })
    }
}

/// `(2m)² e² / (4πr)`: the Coulomb potential with the relativistic
/// spinor normalization left in.
pub fn coulomb_position(r: f64, mass: f64, e: f64) -> Result<f64> {
    positive("r", r)?;
    Ok((2.0 * mass).powi(2) * e * e / (4.0 * PI * r))
}

/// Spin-independent momentum kernel `e²/|q|²`.
pub fn coulomb_momentum(q: [f64; 3], e: f64) -> Result<f64> {
    let q2 = norm3(q).powi(2);
    if q2 == 0.0 {
        return Err(Error::ZeroMomentumTransfer);
    }
    Ok(e * e / q2)
}

/// `−(e/2m)² (σ⃗₁×q⃗)·(σ⃗₂×q⃗) / |q|²`, evaluated through
/// `(σ⃗₁·σ⃗₂)|q|² − (σ⃗₁·q⃗)(σ⃗₂·q⃗)`.
pub fn dipole_momentum_kernel(q: [f64; 3], mass: f64, e: f64) -> Result<SpinOperator> {
    let qn = norm3(q);
    if qn == 0.0 {
        return Err(Error::ZeroMomentumTransfer);
    }
    let mu2 = (e / (2.0 * mass)).powi(2);
    let qhat = q.map(|x| x / qn);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            k[i][j] = -mu2 * (delta - qhat[i] * qhat[j]);
        }
    }
    SpinOperator::new(bilinear_spin_form(&k))
}

/// `[3(n·μ⃗₁)(n·μ⃗₂) − μ⃗₁·μ⃗₂] / (4π|r|³)` with `μ⃗ = (e/2m)σ⃗`; the
/// `δ(r)` contact term is not included.
pub fn dipole_position_hamiltonian(r_vec: [f64; 3], mass: f64, e: f64) -> Result<SpinOperator> {
    let r = norm3(r_vec);
    if r == 0.0 {
        return Err(Error::ZeroSeparation);
    }
    let n = r_vec.map(|x| x / r);
    let pref = (e / (2.0 * mass)).powi(2) / (4.0 * PI * r.powi(3));
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            k[i][j] = pref * (3.0 * n[i] * n[j] - delta);
        }
    }
    SpinOperator::new(bilinear_spin_form(&k))
}

fn coulomb_kernel(r: [f64; 3]) -> f64 {
    1.0 / (4.0 * PI * norm3(r))
}

/// Hessian of `1/(4π|r|)` by central differences: the three-point stencil
/// on the diagonal, the four-point cross stencil off it.
fn kernel_hessian(r: [f64; 3], h: f64) -> [[f64; 3]; 3] {
    let shifted = |i: usize, si: f64, j: usize, sj: f64| {
        let mut p = r;
        p[i] += si * h;
        p[j] += sj * h;
        coulomb_kernel(p)
    };
    let centre = coulomb_kernel(r);
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            hess[i][j] = if i == j {
                (shifted(i, 1.0, i, 0.0) - 2.0 * centre + shifted(i, -1.0, i, 0.0)) / (h * h)
            } else {
                (shifted(i, 1.0, j, 1.0) - shifted(i, 1.0, j, -1.0) - shifted(i, -1.0, j, 1.0)
                    + shifted(i, -1.0, j, -1.0))
                    / (4.0 * h * h)
            };
        }
    }
    hess
}

/// `−μ⃗₁·∇×(μ⃗₂×∇ 1/(4πr)) = Σᵢⱼ μ₁ᵢμ₂ⱼ(∂ᵢ∂ⱼ − δᵢⱼ∇²) 1/(4πr)`, with every
/// derivative taken by finite differences of step `step`.
pub fn curl_form_hamiltonian(r_vec: [f64; 3], step: f64, mass: f64, e: f64) -> Result<SpinOperator> {
    let r = norm3(r_vec);
    if r == 0.0 {
        return Err(Error::ZeroSeparation);
    }
    if step.is_nan() || step <= 0.0 || r <= 10.0 * step {
        return Err(Error::StepTooLarge { step, r });
    }
    let mu2 = (e / (2.0 * mass)).powi(2);
    let hess = kernel_hessian(r_vec, step);
    let lap = hess[0][0] + hess[1][1] + hess[2][2];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            k[i][j] = mu2 * (hess[i][j] - delta * lap);
        }
    }
    SpinOperator::new(bilinear_spin_form(&k))
}

/// Max-entry deviation of the finite-difference curl form from the closed
/// tensor form, relative to the largest entry of the latter.
pub fn curl_form_check(r_vec: [f64; 3], step: f64) -> Result<f64> {
    let fd = curl_form_hamiltonian(r_vec, step, 1.0, 2.0)?;
    let exact = dipole_position_hamiltonian(r_vec, 1.0, 2.0)?;
    Ok(fd.matrix().max_abs_diff(exact.matrix()) / exact.matrix().max_abs())
}

/// `J(2·SWAP − 1)`: triplet eigenvalue `J`, singlet `−3J`.
pub fn effective_spin_potential(j: f64) -> SpinOperator {
    let mut swap = ComplexMatrix::zeros(4, 4);
    for a in SpinLabel::ALL {
        for b in SpinLabel::ALL {
            swap[(spin_index([b, a]), spin_index([a, b]))] = c(1.0, 0.0);
        }
    }
    let m = &swap.scale_real(2.0 * j) - &ComplexMatrix::identity(4).scale_real(j);
    SpinOperator(m)
}

/// Spin-space potential kernel at a fixed momentum transfer.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumKernel {
    pub q: [f64; 3],
    pub matrix: SpinOperator,
}

/// Kinematics used to read the spin potential off the amplitude.
///
/// Centre-of-momentum elastic scattering with `|p⃗| = δm` at angle `π − 2δ`,
/// so `q⃗ = 2δm cos δ ẑ` and the summed momenta `p⃗ + p⃗'` of each line have
/// size `2δm sin δ`. Convective and spin-orbit pieces of the currents are
/// then suppressed by `O(δ)` against the dipole term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtractionTemplate {
    pub delta: f64,
    pub mass: f64,
    pub coupling_e: f64,
}

impl ExtractionTemplate {
    pub fn new(delta: f64, mass: f64, coupling_e: f64) -> Self {
        Self { delta, mass, coupling_e }
    }

    pub fn scattering_angle(&self) -> f64 {
        PI - 2.0 * self.delta
    }

    pub fn kinematics(&self, spins_in: [SpinLabel; 2], spins_out: [SpinLabel; 2]) -> Result<ScatteringKinematics> {
        elastic_kinematics(
            self.mass,
            self.coupling_e,
            self.delta * self.mass,
            self.scattering_angle(),
            spins_in,
            spins_out,
        )
    }

    pub fn momentum_transfer(&self) -> Result<[f64; 3]> {
        let k = self.kinematics(SPIN_PAIRS[0], SPIN_PAIRS[0])?;
        Ok(k.momentum_transfer().spatial())
    }
}

/// Direct-channel Born potential over all sixteen spin assignments, divided
/// by `(2m)²`, with the Coulomb kernel `e²/|q|²` removed from the diagonal.
pub fn extract_spin_potential(template: &ExtractionTemplate) -> Result<MomentumKernel> {
    positive("delta", template.delta)?;
    positive("mass", template.mass)?;
    let norm = (2.0 * template.mass).powi(2);
    let q = template.momentum_transfer()?;
    let coulomb = coulomb_momentum(q, template.coupling_e)?;
    let mut m = ComplexMatrix::zeros(4, 4);
    for out in SPIN_PAIRS {
        for inc in SPIN_PAIRS {
            let k = template.kinematics(inc, out)?;
            let born = I * tree_direct_term(&k)?;
            let mut v = born / norm;
            if out == inc {
                v -= coulomb;
            }
            m[(spin_index(out), spin_index(inc))] = v;
        }
    }
    Ok(MomentumKernel {
        q,
        matrix: SpinOperator::new(m)?,
    })
}

/// Largest entrywise gap between the extracted residual and the dipole
/// kernel, relative to the kernel's largest entry.
pub fn extraction_deviation(template: &ExtractionTemplate) -> Result<f64> {
    let extracted = extract_spin_potential(template)?;
    let kernel = dipole_momentum_kernel(extracted.q, template.mass, template.coupling_e)?;
    Ok(extracted.matrix.matrix().max_abs_diff(kernel.matrix()) / kernel.matrix().max_abs())
}
