//! Degree of entanglement for two-spinor states and its behaviour under
//! Lorentz transforms.
//!
//! The primary measure is the Schmidt spectrum of the normalized 16-vector
//! split as `C⁴ ⊗ C⁴`, with its entropy in bits. The projection onto the
//! spin subspace `span{u(p,↑), u(p,↓)}` of each particle gives a 2⊗2
//! spectrum and a concurrence as secondary figures.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::Serialize;

use crate::dirac::{spin_basis_gram, u_labeled, u_rest, FourVector, SpinLabel};
use crate::dynamics::TwoParticleState;
use crate::error::{Error, Result};
use crate::lorentz::{compose, transform_two_particle, Axis, LorentzTransform, TransformDescriptor};
use crate::tensor::{entropy_bits, kron, schmidt_coefficients, ComplexMatrix, ComplexVector, C64};

/// Gram matrices of the spin basis must match `2E·1` to this relative size.
pub const GRAM_TOL: f64 = 1e-8;
/// States leaving more than this relative weight outside the spin subspace
/// get no spin-projected spectrum.
pub const SPIN_SUBSPACE_TOL: f64 = 1e-8;
/// Default pass threshold for invariance scans.
pub const DEFAULT_SCAN_TOL: f64 = 1e-9;

pub const DEFAULT_RAPIDITIES: [f64; 4] = [0.5, 1.0, 2.0, 3.0];
pub const DEFAULT_ANGLES: [f64; 2] = [FRAC_PI_4, FRAC_PI_2];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntanglementReport {
    /// Descending, four entries.
    pub schmidt_spectrum: Vec<f64>,
    pub entropy_bits: f64,
    /// Descending, two entries; `None` when the state is not in the spin subspace.
    pub spin_schmidt_spectrum: Option<Vec<f64>>,
    pub concurrence: Option<f64>,
    pub transform_applied: TransformDescriptor,
}

fn check_spin_basis(psi: &TwoParticleState) -> Result<()> {
    for p in psi.momenta {
        let g = spin_basis_gram(p, psi.mass)?;
        let target = ComplexMatrix::identity(2).scale_real(2.0 * p.t);
        let dev = g.max_abs_diff(&target) / (2.0 * p.t);
        if dev > GRAM_TOL {
            return Err(Error::NonOrthogonalSpinBasis(dev));
        }
    }
    Ok(())
}

/// `2|c↑↑c↓↓ − c↑↓c↓↑| / ‖c‖²`.
pub fn concurrence(spin: &[C64; 4]) -> Result<f64> {
    let n: f64 = spin.iter().map(|z| z.norm_sqr()).sum();
    if n == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(2.0 * (spin[0] * spin[3] - spin[1] * spin[2]).norm() / n)
}

/// Entanglement of `psi`, tagged with the identity transform.
pub fn analyze(psi: &TwoParticleState) -> Result<EntanglementReport> {
    analyze_tagged(psi, LorentzTransform::identity().descriptor())
}

/// Entanglement of `t` applied to `psi`.
pub fn analyze_transformed(psi: &TwoParticleState, t: &LorentzTransform) -> Result<EntanglementReport> {
    analyze_tagged(&transform_two_particle(t, psi), t.descriptor())
}

fn analyze_tagged(psi: &TwoParticleState, transform_applied: TransformDescriptor) -> Result<EntanglementReport> {
    check_spin_basis(psi)?;
    let unit = psi.amplitudes.normalized()?;
    let schmidt_spectrum = schmidt_coefficients(&unit, (4, 4))?;
    let entropy = entropy_bits(&schmidt_spectrum);

    let (spin_schmidt_spectrum, concurrence_value) = if psi.spin_subspace_residual()? <= SPIN_SUBSPACE_TOL {
        let spin = psi.spin_amplitudes()?;
        let v = ComplexVector::new(spin.to_vec()).normalized()?;
        (Some(schmidt_coefficients(&v, (2, 2))?), Some(concurrence(&spin)?))
    } else {
        (None, None)
    };

    Ok(EntanglementReport {
        schmidt_spectrum,
        entropy_bits: entropy,
        spin_schmidt_spectrum,
        concurrence: concurrence_value,
        transform_applied,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub transform: TransformDescriptor,
    pub entropy_bits: f64,
    pub entropy_deviation: f64,
    /// Largest gap between the transformed and rest-frame Schmidt spectra.
    pub spectrum_deviation: f64,
    /// Same for the spin-projected spectrum, when both exist.
    pub spin_spectrum_deviation: Option<f64>,
    /// Rows from the deliberately non-Lorentz negative control.
    pub negative_control: bool,
}

impl ScanRow {
    /// Larger of the entropy and spectrum deviations.
    pub fn deviation(&self) -> f64 {
        self.entropy_deviation.max(self.spectrum_deviation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.deviation() <= tol
    }
}

fn spectrum_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn compare(reference: &EntanglementReport, report: EntanglementReport, negative_control: bool) -> ScanRow {
    let spin_spectrum_deviation = match (&reference.spin_schmidt_spectrum, &report.spin_schmidt_spectrum) {
        (Some(a), Some(b)) => Some(spectrum_gap(a, b)),
        _ => None,
    };
    ScanRow {
        entropy_deviation: (report.entropy_bits - reference.entropy_bits).abs(),
        spectrum_deviation: spectrum_gap(&reference.schmidt_spectrum, &report.schmidt_spectrum),
        spin_spectrum_deviation,
        entropy_bits: report.entropy_bits,
        transform: report.transform_applied,
        negative_control,
    }
}

/// One row per transform, each compared with the untransformed state.
pub fn invariance_scan(psi: &TwoParticleState, transforms: &[LorentzTransform]) -> Result<Vec<ScanRow>> {
    let reference = analyze(psi)?;
    transforms
        .iter()
        .map(|t| Ok(compare(&reference, analyze_transformed(psi, t)?, false)))
        .collect()
}

/// Pure boosts along every axis at every rapidity, pure rotations about
/// every axis at every angle, then `rotation(next axis, θ) ∘ boost(axis, η)`
/// for every combination. Order is fixed.
pub fn transform_grid(axes: &[Axis], rapidities: &[f64], angles: &[f64]) -> Result<Vec<LorentzTransform>> {
    let mut out = Vec::new();
    for &axis in axes {
        for &eta in rapidities {
            out.push(LorentzTransform::boost(axis.unit(), eta)?);
        }
    }
    for &axis in axes {
        for &theta in angles {
            out.push(LorentzTransform::rotation(axis.unit(), theta)?);
        }
    }
    for &axis in axes {
        for &eta in rapidities {
            for &theta in angles {
                let boost = LorentzTransform::boost(axis.unit(), eta)?;
                let rot = LorentzTransform::rotation(axis.next().unit(), theta)?;
                out.push(compose(&rot, &boost));
            }
        }
    }
    Ok(out)
}

pub fn default_grid() -> Vec<LorentzTransform> {
    transform_grid(&Axis::ALL, &DEFAULT_RAPIDITIES, &DEFAULT_ANGLES).expect("unit axes")
}

/// `S·P↑ + P↓` on particle 1 with `P_ε = u(0,ε)u(0,ε)†/(2m)`: the spinor
/// transform applied to one spin component only. Not a Lorentz transform;
/// particle 1 is tagged with the transformed momentum.
pub fn negative_control(psi: &TwoParticleState, t: &LorentzTransform) -> Result<TwoParticleState> {
    if !psi.is_at_rest() {
        return Err(Error::NotAtRest);
    }
    let projector = |spin: SpinLabel| {
        let u = u_rest(spin, psi.mass).components;
        u.projector().scale_real(1.0 / (2.0 * psi.mass))
    };
    let local = &(t.spinor_rep() * &projector(SpinLabel::Up)) + &projector(SpinLabel::Down);
    let map = kron(&local, &ComplexMatrix::identity(4));
    Ok(TwoParticleState::from_parts(
        map.apply(&psi.amplitudes),
        [t.apply_vector(psi.momenta[0]), psi.momenta[1]],
        psi.mass,
    ))
}

/// Scan rows for [`negative_control`] under each transform, flagged as such.
pub fn negative_control_scan(psi: &TwoParticleState, transforms: &[LorentzTransform]) -> Result<Vec<ScanRow>> {
    let reference = analyze(psi)?;
    transforms
        .iter()
        .map(|t| {
            let corrupted = negative_control(psi, t)?;
            Ok(compare(&reference, analyze_tagged(&corrupted, t.descriptor())?, true))
        })
        .collect()
}

/// Relative deviation of `B†S†SB` from a multiple of the identity, where
/// `B = [u(p,↑), u(p,↓)]`.
pub fn scaled_isometry_deviation(t: &LorentzTransform, p: FourVector, mass: f64) -> Result<f64> {
    let up = u_labeled(p, SpinLabel::Up, mass)?;
    let down = u_labeled(p, SpinLabel::Down, mass)?;
    let b = ComplexMatrix::from_columns(&[&up.components, &down.components])?;
    let sb = t.spinor_rep() * &b;
    let g = &sb.adjoint() * &sb;
    let scale = g.trace().re / 2.0;
    Ok(g.max_abs_diff(&ComplexMatrix::identity(2).scale_real(scale)) / scale)
}
