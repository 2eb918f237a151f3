//! Proper orthochronous Lorentz transforms in both the vector and the Dirac
//! spinor representation.
//!
//! A transform is parametrized by an antisymmetric `ω_{μν}` with
//! `ω_{0i} = η nᵢ` (boost of rapidity η along n) and `ω_{ij} = θ ε_{ijk} n_k`
//! (rotation by θ about n). Both representations are exponentials of the
//! same `ω`:
//!
//! ```text
//! Λ = exp(ω^μ_ν)                      (vector)
//! S = exp(−(i/2) ω_{μν} S^{μν}),  S^{μν} = (i/4)[γ^μ, γ^ν]
//! ```
//!
//! so `S⁻¹ γ^μ S = Λ^μ_ν γ^ν` holds by construction and is checked
//! numerically. Boosts give Hermitian, non-unitary `S`; rotations give
//! unitary `S` with the usual sign flip at 2π.

use std::fmt;

use serde::Serialize;

use crate::dirac::{DiracSpinor, FourVector, GammaBasis, METRIC};
use crate::dynamics::TwoParticleState;
use crate::error::{Error, Result};
use crate::tensor::{c, kron, matrix_exp, ComplexMatrix};

const AXIS_TOL: f64 = 1e-12;

pub type Matrix4 = [[f64; 4]; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    Boost,
    Rotation,
    Composite,
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TransformKind::Identity => "identity",
            TransformKind::Boost => "boost",
            TransformKind::Rotation => "rotation",
            TransformKind::Composite => "composite",
        };
        f.write_str(s)
    }
}

/// Coordinate axis shorthand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn unit(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        }
    }

    /// The next axis in cyclic order x → y → z → x.
    pub fn next(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::Z,
            Axis::Z => Axis::X,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(format!("unknown axis '{other}' (expected x, y or z)")),
        }
    }
}

pub fn axis_name(n: [f64; 3]) -> String {
    for a in Axis::ALL {
        if a.unit() == n {
            return format!("{a:?}").to_ascii_lowercase();
        }
    }
    format!("({:.6},{:.6},{:.6})", n[0], n[1], n[2])
}

fn check_axis(axis: [f64; 3]) -> Result<[f64; 3]> {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (n - 1.0).abs() > AXIS_TOL || !n.is_finite() {
        return Err(Error::NonUnitAxis(n));
    }
    Ok(axis)
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Lower-index `ω_{μν}` for a boost vector `η n` and rotation vector `θ n`.
fn omega_lower(boost: [f64; 3], rotation: [f64; 3]) -> Matrix4 {
    let mut w = [[0.0; 4]; 4];
    for i in 0..3 {
        w[0][i + 1] = boost[i];
        w[i + 1][0] = -boost[i];
        for j in 0..3 {
            w[i + 1][j + 1] = (0..3).map(|k| levi_civita(i, j, k) * rotation[k]).sum();
        }
    }
    w
}

fn exponentiate(boost: [f64; 3], rotation: [f64; 3]) -> (Matrix4, ComplexMatrix) {
    let w = omega_lower(boost, rotation);

    // ω^μ_ν = g^{μμ} ω_{μν}
    let mut gen = ComplexMatrix::zeros(4, 4);
    for mu in 0..4 {
        for nu in 0..4 {
            gen[(mu, nu)] = c(METRIC[mu] * w[mu][nu], 0.0);
        }
    }
    let lambda_c = matrix_exp(&gen).expect("4x4 exponential");
    let mut lambda = [[0.0; 4]; 4];
    for mu in 0..4 {
        for nu in 0..4 {
            lambda[mu][nu] = lambda_c[(mu, nu)].re;
        }
    }

    // −(i/2) ω_{μν} (i/4)[γ^μ, γ^ν] = (1/8) ω_{μν} [γ^μ, γ^ν]
    let g = &GammaBasis::weyl().gamma;
    let mut sgen = ComplexMatrix::zeros(4, 4);
    for mu in 0..4 {
        for nu in 0..4 {
            if w[mu][nu] != 0.0 {
                sgen = &sgen + &g[mu].commutator(&g[nu]).scale_real(w[mu][nu] / 8.0);
            }
        }
    }
    let s = matrix_exp(&sgen).expect("4x4 exponential");
    (lambda, s)
}

/// A Lorentz transform carried in both representations.
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzTransform {
    vector_rep: Matrix4,
    spinor_rep: ComplexMatrix,
    kind: TransformKind,
    axis: String,
    rapidity: f64,
    angle: f64,
    label: String,
}

/// Flat description of a transform for reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformDescriptor {
    pub kind: TransformKind,
    pub label: String,
    pub axis: String,
    pub rapidity: f64,
    pub angle: f64,
}

impl LorentzTransform {
    pub fn identity() -> Self {
        let mut v = [[0.0; 4]; 4];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self {
            vector_rep: v,
            spinor_rep: ComplexMatrix::identity(4),
            kind: TransformKind::Identity,
            axis: String::new(),
            rapidity: 0.0,
            angle: 0.0,
            label: "identity".into(),
        }
    }

    /// Pure boost of the given rapidity along a unit axis.
    pub fn boost(axis: [f64; 3], rapidity: f64) -> Result<Self> {
        let n = check_axis(axis)?;
        let (vector_rep, spinor_rep) = exponentiate(n.map(|x| x * rapidity), [0.0; 3]);
        let name = axis_name(n);
        Ok(Self {
            vector_rep,
            spinor_rep,
            kind: TransformKind::Boost,
            label: format!("boost({name}, eta={rapidity})"),
            axis: name,
            rapidity,
            angle: 0.0,
        })
    }

    /// Boost parametrized by velocity `β = tanh η`, `|β| < 1`.
    pub fn boost_velocity(axis: [f64; 3], beta: f64) -> Result<Self> {
        if beta.abs() >= 1.0 || !beta.is_finite() {
            return Err(Error::NonPositiveInput {
                name: "1 - |beta|",
                value: 1.0 - beta.abs(),
            });
        }
        Self::boost(axis, beta.atanh())
    }

    /// Rotation by `angle` radians (right-handed) about a unit axis.
    pub fn rotation(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = check_axis(axis)?;
        let (vector_rep, spinor_rep) = exponentiate([0.0; 3], n.map(|x| x * angle));
        let name = axis_name(n);
        Ok(Self {
            vector_rep,
            spinor_rep,
            kind: TransformKind::Rotation,
            label: format!("rotation({name}, theta={angle})"),
            axis: name,
            rapidity: 0.0,
            angle,
        })
    }

    pub fn vector_rep(&self) -> &Matrix4 {
        &self.vector_rep
    }

    pub fn spinor_rep(&self) -> &ComplexMatrix {
        &self.spinor_rep
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn descriptor(&self) -> TransformDescriptor {
        TransformDescriptor {
            kind: self.kind,
            label: self.label.clone(),
            axis: self.axis.clone(),
            rapidity: self.rapidity,
            angle: self.angle,
        }
    }

    pub fn apply_vector(&self, p: FourVector) -> FourVector {
        let a = p.to_array();
        FourVector::from_array(std::array::from_fn(|mu| (0..4).map(|nu| self.vector_rep[mu][nu] * a[nu]).sum()))
    }

    /// Largest entry of `ΛᵀgΛ − g`.
    pub fn metric_defect(&self) -> f64 {
        let l = &self.vector_rep;
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let v: f64 = (0..4).map(|mu| l[mu][a] * METRIC[mu] * l[mu][b]).sum();
                let g = if a == b { METRIC[a] } else { 0.0 };
                worst = worst.max((v - g).abs());
            }
        }
        worst
    }

    /// Largest entry of `S⁻¹γ^μS − Λ^μ_ν γ^ν` over μ.
    pub fn intertwining_defect(&self) -> Result<f64> {
        let g = &GammaBasis::weyl().gamma;
        let s_inv = self.spinor_rep.inverse()?;
        let mut worst: f64 = 0.0;
        for mu in 0..4 {
            let lhs = &(&s_inv * &g[mu]) * &self.spinor_rep;
            let mut rhs = ComplexMatrix::zeros(4, 4);
            for nu in 0..4 {
                rhs = &rhs + &g[nu].scale_real(self.vector_rep[mu][nu]);
            }
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
        Ok(worst)
    }

    /// `max |S†S − 1|`; zero for rotations, nonzero for boosts.
    pub fn unitarity_defect(&self) -> f64 {
        (&self.spinor_rep.adjoint() * &self.spinor_rep).max_abs_diff(&ComplexMatrix::identity(4))
    }
}

/// `a ∘ b`: apply `b` first, then `a`.
pub fn compose(a: &LorentzTransform, b: &LorentzTransform) -> LorentzTransform {
    let mut v = [[0.0; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = (0..4).map(|k| a.vector_rep[i][k] * b.vector_rep[k][j]).sum();
        }
    }
    let (kind, axis, rapidity, angle) = match (a.kind, b.kind) {
        (TransformKind::Identity, _) => (b.kind, b.axis.clone(), b.rapidity, b.angle),
        (_, TransformKind::Identity) => (a.kind, a.axis.clone(), a.rapidity, a.angle),
        (TransformKind::Rotation, TransformKind::Boost) => (
            TransformKind::Composite,
            format!("boost:{};rot:{}", b.axis, a.axis),
            b.rapidity,
            a.angle,
        ),
        (TransformKind::Boost, TransformKind::Rotation) => (
            TransformKind::Composite,
            format!("rot:{};boost:{}", b.axis, a.axis),
            a.rapidity,
            b.angle,
        ),
        _ => (TransformKind::Composite, format!("{};{}", b.axis, a.axis), f64::NAN, f64::NAN),
    };
    let label = match (a.kind, b.kind) {
        (TransformKind::Identity, _) => b.label.clone(),
        (_, TransformKind::Identity) => a.label.clone(),
        _ => format!("{} o {}", a.label, b.label),
    };
    LorentzTransform {
        vector_rep: v,
        spinor_rep: &a.spinor_rep * &b.spinor_rep,
        kind,
        axis,
        rapidity,
        angle,
        label,
    }
}

/// `u ↦ S u` with momentum `p ↦ Λ p`.
pub fn transform_spinor(t: &LorentzTransform, u: &DiracSpinor) -> DiracSpinor {
    DiracSpinor::from_parts(t.spinor_rep.apply(&u.components), t.apply_vector(u.momentum), u.mass)
}

/// `Ψ ↦ (S ⊗ S) Ψ` with both momenta boosted. No renormalization.
pub fn transform_two_particle(t: &LorentzTransform, psi: &TwoParticleState) -> TwoParticleState {
    let ss = kron(&t.spinor_rep, &t.spinor_rep);
    TwoParticleState::from_parts(
        ss.apply(&psi.amplitudes),
        [t.apply_vector(psi.momenta[0]), t.apply_vector(psi.momenta[1])],
        psi.mass,
    )
}
