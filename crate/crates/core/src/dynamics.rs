//! Two-particle spinor states and their evolution under the effective
//! spin-spin exchange potential.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::dirac::{u_labeled, FourVector, SpinLabel};
use crate::error::{Error, Result};
use crate::reduction::{effective_spin_potential, spin_index, SPIN_PAIRS};
use crate::tensor::{c, matrix_exp, ComplexMatrix, ComplexVector, C64, I, ZERO};

const REST_TOL: f64 = 1e-12;
const DEFINITE_TOL: f64 = 1e-10;

/// A vector in `C⁴ ⊗ C⁴` tagged with the momenta of its two factors.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoParticleState {
    pub amplitudes: ComplexVector,
    pub momenta: [FourVector; 2],
    pub mass: f64,
}

impl TwoParticleState {
    pub fn from_parts(amplitudes: ComplexVector, momenta: [FourVector; 2], mass: f64) -> Self {
        Self { amplitudes, momenta, mass }
    }

    /// `⟨Ψ|Ψ⟩`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_sqr()
    }

    pub fn is_at_rest(&self) -> bool {
        self.momenta.iter().all(|p| p.is_at_rest(REST_TOL * self.mass.max(1.0)))
    }

    /// `c_ab = ⟨u(p₁,a) ⊗ u(p₂,b)|Ψ⟩ / (2E₁·2E₂)` in `(↑↑, ↑↓, ↓↑, ↓↓)` order.
    pub fn spin_amplitudes(&self) -> Result<[C64; 4]> {
        let basis = self.product_basis()?;
        let norm = 4.0 * self.momenta[0].t * self.momenta[1].t;
        Ok(std::array::from_fn(|k| basis[k].inner(&self.amplitudes) / norm))
    }

    /// `‖Ψ − lift(c)‖ / ‖Ψ‖`: the weight left outside the spin subspace.
    pub fn spin_subspace_residual(&self) -> Result<f64> {
        let lifted = lift_spin_to_spinor(&self.spin_amplitudes()?, self.momenta[0], self.momenta[1], self.mass)?;
        let n = self.amplitudes.norm();
        if n == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok((&self.amplitudes - &lifted.amplitudes).norm() / n)
    }

    fn product_basis(&self) -> Result<[ComplexVector; 4]> {
        let mut out = Vec::with_capacity(4);
        for [a, b] in SPIN_PAIRS {
            let u1 = u_labeled(self.momenta[0], a, self.mass)?;
            let u2 = u_labeled(self.momenta[1], b, self.mass)?;
            out.push(u1.components.kron(&u2.components));
        }
        Ok(out.try_into().expect("four spin pairs"))
    }
}

/// Spin-spin coupling for two charges a distance `r` apart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingConstant {
    pub j: f64,
    pub r: f64,
    pub mass: f64,
    pub alpha: f64,
}

/// `J = −e²/(16π m² r³) = −α/(4 m² r³)` with `e² = 4πα`.
pub fn coupling_j(r: f64, mass: f64, alpha: f64) -> Result<CouplingConstant> {
    for (name, value) in [("r", r), ("mass", mass), ("alpha", alpha)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveInput { name, value });
        }
    }
    Ok(CouplingConstant {
        j: -alpha / (4.0 * mass * mass * r.powi(3)),
        r,
        mass,
        alpha,
    })
}

/// `Σ c_{ε₁ε₂} u(p₁,ε₁) ⊗ u(p₂,ε₂)`.
pub fn lift_spin_to_spinor(spin: &[C64; 4], p1: FourVector, p2: FourVector, mass: f64) -> Result<TwoParticleState> {
    let mut psi = ComplexVector::zeros(16);
    for (k, [a, b]) in SPIN_PAIRS.into_iter().enumerate() {
        if spin[k] == ZERO {
            continue;
        }
        let u1 = u_labeled(p1, a, mass)?;
        let u2 = u_labeled(p2, b, mass)?;
        psi = &psi + &u1.components.kron(&u2.components).scale(spin[k]);
    }
    Ok(TwoParticleState::from_parts(psi, [p1, p2], mass))
}

/// `exp(−iVt)·e^{−iJt}` on the two-spin space. The extra factor cancels the
/// overall phase `e^{iJt}` picked up by `|↓↑⟩`, so that
/// `|↓↑⟩ ↦ cos(2Jt)|↓↑⟩ − i sin(2Jt)|↑↓⟩` exactly. Aligned states pick up
/// `e^{−2iJt}`.
pub fn spin_evolution_operator(j: f64, t: f64) -> Result<ComplexMatrix> {
    let v = effective_spin_potential(j);
    let u = matrix_exp(&v.matrix().scale(c(0.0, -t)))?;
    Ok(u.scale(C64::from_polar(1.0, -j * t)))
}

pub fn evolve_spin(spin: &[C64; 4], j: f64, t: f64) -> Result<[C64; 4]> {
    let out = spin_evolution_operator(j, t)?.apply(&ComplexVector::new(spin.to_vec()));
    Ok(std::array::from_fn(|k| out[k]))
}

/// Evolves a rest-frame state of definite spins under the exchange potential.
pub fn evolve(initial: &TwoParticleState, j: f64, t: f64) -> Result<TwoParticleState> {
    if !initial.is_at_rest() {
        return Err(Error::NotAtRest);
    }
    let spin = initial.spin_amplitudes()?;
    let total: f64 = spin.iter().map(|z| z.norm_sqr()).sum();
    let largest = spin.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    if total == 0.0 || (total - largest) > DEFINITE_TOL * total || initial.spin_subspace_residual()? > DEFINITE_TOL {
        return Err(Error::IndefiniteInitialSpin);
    }
    let evolved = evolve_spin(&spin, j, t)?;
    lift_spin_to_spinor(&evolved, initial.momenta[0], initial.momenta[1], initial.mass)
}

/// `u(0,ε₁) ⊗ u(0,ε₂)`.
pub fn definite_state(spins: [SpinLabel; 2], mass: f64) -> Result<TwoParticleState> {
    let mut spin = [ZERO; 4];
    spin[spin_index(spins)] = c(1.0, 0.0);
    let rest = FourVector::at_rest(mass);
    lift_spin_to_spinor(&spin, rest, rest, mass)
}

/// `u(p₁,ε₁) ⊗ u(p₂,ε₂)` at arbitrary on-shell momenta.
pub fn product_state(p1: FourVector, p2: FourVector, spins: [SpinLabel; 2], mass: f64) -> Result<TwoParticleState> {
    let mut spin = [ZERO; 4];
    spin[spin_index(spins)] = c(1.0, 0.0);
    lift_spin_to_spinor(&spin, p1, p2, mass)
}

/// `(1/√2)[u(0,↓)⊗u(0,↑) − i u(0,↑)⊗u(0,↓)]`.
pub fn epr_state(mass: f64) -> Result<TwoParticleState> {
    let rest = FourVector::at_rest(mass);
    let spin = [ZERO, -I * FRAC_1_SQRT_2, c(FRAC_1_SQRT_2, 0.0), ZERO];
    lift_spin_to_spinor(&spin, rest, rest, mass)
}

/// `t* = π/(8|J|)`, where `2|J|t = π/4` and the evolved state is maximally
/// entangled. At `π/(4|J|)` the spin has fully transferred and the state
/// is a product again.
pub fn maximal_entanglement_time(j: f64) -> f64 {
    PI / (8.0 * j.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::{transform_two_particle, LorentzTransform};
    use crate::tensor::eigh;
    use proptest::prelude::*;
    use SpinLabel::{Down, Up};

    const ALPHA: f64 = 1.0 / 137.035999;

    fn du() -> [C64; 4] {
        let mut s = [ZERO; 4];
        s[spin_index([Down, Up])] = c(1.0, 0.0);
        s
    }

    // closed form from V = J(2·SWAP − 1) and SWAP² = 1
    fn oracle(jt2: f64) -> (C64, C64) {
        (c(jt2.cos(), 0.0), c(0.0, -jt2.sin()))
    }

    #[test]
    fn coupling_examples() {
        let k = coupling_j(1.0, 1.0, ALPHA).unwrap();
        assert!((k.j + ALPHA / 4.0).abs() < 1e-18, "J = {}", k.j);
        assert!((k.j + 1.82434e-3).abs() < 5e-9);
        let k2 = coupling_j(2.0, 1.0, ALPHA).unwrap();
        assert!((k2.j - k.j / 8.0).abs() < 1e-18);
        let k3 = coupling_j(1.0, 1.0, 2.0 * ALPHA).unwrap();
        assert!((k3.j - 2.0 * k.j).abs() < 1e-18);
        assert!(matches!(coupling_j(0.0, 1.0, ALPHA), Err(Error::NonPositiveInput { name: "r", .. })));
        assert!(matches!(coupling_j(1.0, -1.0, ALPHA), Err(Error::NonPositiveInput { name: "mass", .. })));
    }

    #[test]
    fn lift_examples() {
        let psi = lift_spin_to_spinor(&du(), FourVector::at_rest(1.0), FourVector::at_rest(1.0), 1.0).unwrap();
        let down = ComplexVector::new([0.0, 1.0, 0.0, 1.0].map(|x| c(x, 0.0)).to_vec());
        let up = ComplexVector::new([1.0, 0.0, 1.0, 0.0].map(|x| c(x, 0.0)).to_vec());
        assert_eq!(psi.amplitudes, down.kron(&up));

        let p1 = FourVector::on_shell(1.0, [0.3, -0.2, 0.5]);
        let p2 = FourVector::on_shell(1.0, [-0.1, 0.7, 0.0]);
        let a = [c(0.1, 0.2), c(0.0, -0.5), c(0.4, 0.0), c(-0.3, 0.1)];
        let b = [c(0.0, 1.0), c(0.2, 0.0), c(0.0, 0.0), c(0.5, -0.5)];
        let sum: [C64; 4] = std::array::from_fn(|k| a[k] + c(2.0, 0.0) * b[k]);
        let la = lift_spin_to_spinor(&a, p1, p2, 1.0).unwrap();
        let lb = lift_spin_to_spinor(&b, p1, p2, 1.0).unwrap();
        let ls = lift_spin_to_spinor(&sum, p1, p2, 1.0).unwrap();
        let manual = &la.amplitudes + &lb.amplitudes.scale(c(2.0, 0.0));
        assert!(ls.amplitudes.max_abs_diff(&manual) < 1e-14);

        let norm_c: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let expect = 4.0 * p1.t * p2.t * norm_c;
        assert!((la.norm_sqr() - expect).abs() <= 1e-12 * expect);

        let back = la.spin_amplitudes().unwrap();
        for k in 0..4 {
            assert!((back[k] - a[k]).norm() < 1e-14);
        }
        assert!(la.spin_subspace_residual().unwrap() < 1e-14);

        let off = FourVector::new(1.0, 0.5, 0.0, 0.0);
        assert!(matches!(lift_spin_to_spinor(&a, off, p2, 1.0), Err(Error::OffShell(_))));
    }

    #[test]
    fn evolution_block_matches_closed_form() {
        let j = coupling_j(1.0, 1.0, ALPHA).unwrap().j;
        for k in 0..100 {
            let jt2 = 2.0 * PI * k as f64 / 99.0;
            let t = jt2 / (2.0 * j);
            let u = spin_evolution_operator(j, t).unwrap();
            let (cs, sn) = oracle(jt2);
            let d = spin_index([Down, Up]);
            let ud = spin_index([Up, Down]);
            assert!((u[(d, d)] - cs).norm() < 1e-12);
            assert!((u[(ud, d)] - sn).norm() < 1e-12);
            assert!((u[(d, ud)] - sn).norm() < 1e-12);
            assert!((u[(ud, ud)] - cs).norm() < 1e-12);
        }
    }

    #[test]
    fn evolve_examples() {
        let j = -0.7;
        let start = definite_state([Down, Up], 1.0).unwrap();
        let same = evolve(&start, j, 0.0).unwrap();
        assert!(same.amplitudes.max_abs_diff(&start.amplitudes) < 1e-14);

        let flipped = evolve(&start, j, (PI / 2.0) / (2.0 * j)).unwrap();
        let s = flipped.spin_amplitudes().unwrap();
        assert!(s[spin_index([Down, Up])].norm() < 1e-13);
        assert!((s[spin_index([Up, Down])] - c(0.0, -1.0)).norm() < 1e-13);

        let epr = evolve(&start, j, (PI / 4.0) / (2.0 * j)).unwrap();
        let target = epr_state(1.0).unwrap();
        assert!(epr.amplitudes.max_abs_diff(&target.amplitudes) < 1e-12);
    }

    #[test]
    fn evolve_rejects_bad_inputs() {
        let moving = product_state(
            FourVector::on_shell(1.0, [0.1, 0.0, 0.0]),
            FourVector::at_rest(1.0),
            [Up, Down],
            1.0,
        )
        .unwrap();
        assert_eq!(evolve(&moving, -0.1, 1.0), Err(Error::NotAtRest));
        let mixed = epr_state(1.0).unwrap();
        assert_eq!(evolve(&mixed, -0.1, 1.0), Err(Error::IndefiniteInitialSpin));
    }

    #[test]
    fn epr_structure() {
        let psi = epr_state(1.0).unwrap();
        let s = psi.spin_amplitudes().unwrap();
        assert!((s[spin_index([Down, Up])] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s[spin_index([Up, Down])] - c(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);
        assert_eq!(s[spin_index([Up, Up])], ZERO);
        assert_eq!(s[spin_index([Down, Down])], ZERO);
        // normalization (2m)² at rest
        assert!((psi.norm_sqr() - 4.0).abs() < 1e-12);
        let heavy = epr_state(2.5).unwrap();
        assert!((heavy.norm_sqr() - 25.0).abs() < 1e-10);
    }

    #[test]
    fn aligned_states_are_stationary() {
        let j = -0.4;
        for spins in [[Up, Up], [Down, Down]] {
            let psi = definite_state(spins, 1.0).unwrap();
            for t in [0.3, 1.7, 12.0] {
                let out = evolve(&psi, j, t).unwrap();
                let phase = C64::from_polar(1.0, -2.0 * j * t);
                assert!(out.amplitudes.max_abs_diff(&psi.amplitudes.scale(phase)) < 1e-12);
            }
        }
        let v = effective_spin_potential(j);
        let eig = eigh(v.matrix(), 1e-14).unwrap();
        assert!((eig.values[3] + 3.0 * j).abs() < 1e-12);
    }

    #[test]
    fn maximal_time_gives_equal_weights() {
        let j = coupling_j(1.0, 1.0, ALPHA).unwrap().j;
        let t = maximal_entanglement_time(j);
        let s = evolve_spin(&du(), j, t).unwrap();
        assert!((s[1].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((s[2].norm_sqr() - 0.5).abs() < 1e-12);
        let product = evolve_spin(&du(), j, 2.0 * t).unwrap();
        assert!(product[2].norm() < 1e-12);
    }

    #[test]
    fn amplitudes_survive_boosts() {
        let j = -0.25;
        let start = definite_state([Down, Up], 1.0).unwrap();
        for (k, jt2) in [0.3, 0.9, 2.2].into_iter().enumerate() {
            let psi = evolve(&start, j, jt2 / (2.0 * j)).unwrap();
            let axis = [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [0.48, 0.6, 0.64]][k];
            let boost = LorentzTransform::boost(axis, 1.3).unwrap();
            let moved = transform_two_particle(&boost, &psi);
            let s = moved.spin_amplitudes().unwrap();
            let (cs, sn) = oracle(jt2);
            assert!((s[spin_index([Down, Up])] - cs).norm() < 1e-12);
            assert!((s[spin_index([Up, Down])] - sn).norm() < 1e-12);
            assert!(moved.spin_subspace_residual().unwrap() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn spin_norm_conserved(jt2 in -20.0..20.0f64, j in -2.0..-0.01f64) {
            let s = evolve_spin(&du(), j, jt2 / (2.0 * j)).unwrap();
            let n: f64 = s.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }

        #[test]
        fn evolution_is_periodic(t in 0.0..50.0f64, j in -2.0..-0.05f64) {
            let a = evolve_spin(&du(), j, t).unwrap();
            let b = evolve_spin(&du(), j, t + PI / j).unwrap();
            for k in 0..4 {
                prop_assert!((a[k] - b[k]).norm() < 1e-10);
            }
        }
    }
}
