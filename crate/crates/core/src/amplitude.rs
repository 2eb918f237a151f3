//! Tree-level one-photon-exchange amplitude for two identical spin-1/2
//! particles, with the spin of every external leg kept explicit.
//!
//! ```text
//! iM = (−ie)² [ ū₁'γ^μu₁ (−i g_μν / (p₁'−p₁)²) ū₂'γ^νu₂
//!             − ū₁'γ^νu₂ (−i g_μν / (p₁'−p₂)²) ū₂'γ^μu₁ ]
//! ```
//!
//! Feynman-gauge propagator; the relative minus sign between the direct and
//! exchange diagrams carries the Fermi statistics. The Born potential in
//! momentum space is read off as `Ṽ = −M = i·(iM)`.

use serde::Serialize;

use crate::dirac::{u_labeled, u_spinor, vector_current, DiracSpinor, FourVector, SpinLabel, METRIC};
use crate::error::{Error, Result};
use crate::tensor::{pauli, ComplexMatrix, ComplexVector, C64, I};

/// Photon denominators with modulus below this are treated as poles.
pub const POLE_TOL: f64 = 1e-12;
const CONSERVATION_TOL: f64 = 1e-9;

/// One external fermion line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Leg {
    pub momentum: FourVector,
    pub spin: SpinLabel,
}

/// Incoming `(p₁ε₁, p₂ε₂)` and outgoing `(p₁'ε₁', p₂'ε₂')` legs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatteringKinematics {
    pub incoming: [Leg; 2],
    pub outgoing: [Leg; 2],
    pub mass: f64,
    pub coupling_e: f64,
}

impl ScatteringKinematics {
    pub fn validate(&self) -> Result<()> {
        for leg in self.incoming.iter().chain(&self.outgoing) {
            if !leg.momentum.is_physical() || !leg.momentum.is_on_shell(self.mass) {
                return Err(Error::OffShell(leg.momentum.mass_shell_defect(self.mass)));
            }
        }
        let p_in = self.incoming[0].momentum + self.incoming[1].momentum;
        let p_out = self.outgoing[0].momentum + self.outgoing[1].momentum;
        let dev = p_in.max_abs_diff(p_out);
        if dev > CONSERVATION_TOL {
            return Err(Error::MomentumNotConserved(dev));
        }
        Ok(())
    }

    /// Same process with the two outgoing legs relabeled.
    pub fn with_outgoing_swapped(&self) -> Self {
        let mut k = self.clone();
        k.outgoing.swap(0, 1);
        k
    }

    /// Direct-channel momentum transfer `q = p₁' − p₁`.
    pub fn momentum_transfer(&self) -> FourVector {
        self.outgoing[0].momentum - self.incoming[0].momentum
    }

    /// `[u(p₁), u(p₂), u(p₁'), u(p₂')]` for the labelled legs.
    pub fn spinors(&self) -> Result<[DiracSpinor; 4]> {
        let u = |leg: &Leg| u_labeled(leg.momentum, leg.spin, self.mass);
        Ok([
            u(&self.incoming[0])?,
            u(&self.incoming[1])?,
            u(&self.outgoing[0])?,
            u(&self.outgoing[1])?,
        ])
    }
}

/// Elastic scattering in the centre-of-momentum frame with the momentum
/// transfer along +z:
///
/// ```text
/// p₁  = k (cos θ/2, 0, −sin θ/2),  p₂  = −p₁
/// p₁' = k (cos θ/2, 0, +sin θ/2),  p₂' = −p₁'
/// ```
///
/// so `θ` is the scattering angle, `q⃗ = 2k sin(θ/2) ẑ`, `q⁰ = 0`.
pub fn elastic_kinematics(
    mass: f64,
    coupling_e: f64,
    pmag: f64,
    angle: f64,
    spins_in: [SpinLabel; 2],
    spins_out: [SpinLabel; 2],
) -> Result<ScatteringKinematics> {
    if mass <= 0.0 {
        return Err(Error::NonPositiveInput { name: "mass", value: mass });
    }
    if pmag < 0.0 || !pmag.is_finite() {
        return Err(Error::NonPositiveInput { name: "pmag", value: pmag });
    }
    let (s, co) = (angle / 2.0).sin_cos();
    let p1 = [pmag * co, 0.0, -pmag * s];
    let p1_out = [pmag * co, 0.0, pmag * s];
    let neg = |v: [f64; 3]| v.map(|x| -x);
    let leg = |p: [f64; 3], spin| Leg {
        momentum: FourVector::on_shell(mass, p),
        spin,
    };
    Ok(ScatteringKinematics {
        incoming: [leg(p1, spins_in[0]), leg(neg(p1), spins_in[1])],
        outgoing: [leg(p1_out, spins_out[0]), leg(neg(p1_out), spins_out[1])],
        mass,
        coupling_e,
    })
}

/// Amplitude split by diagram; all three are contributions to `iM`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Amplitude {
    pub value: C64,
    pub direct_term: C64,
    pub exchange_term: C64,
}

impl Amplitude {
    /// Momentum-space Born potential `Ṽ = i·(iM)`.
    pub fn born_potential(&self) -> C64 {
        I * self.value
    }

    pub fn direct_born_potential(&self) -> C64 {
        I * self.direct_term
    }
}

/// `ū_out γ^μ u_in`, upper index.
pub fn current(u_out: &DiracSpinor, u_in: &DiracSpinor) -> [C64; 4] {
    vector_current(u_out, u_in)
}

/// `g_μν a^μ b^ν` for complex four-vectors (no conjugation).
pub fn contract(a: &[C64; 4], b: &[C64; 4]) -> C64 {
    (0..4).map(|mu| a[mu] * b[mu] * METRIC[mu]).sum()
}

/// `q_μ j^μ`.
pub fn ward_contraction(q: FourVector, j: &[C64; 4]) -> C64 {
    let q = q.to_array();
    (0..4).map(|mu| j[mu] * q[mu] * METRIC[mu]).sum()
}

fn photon_denominator(q: FourVector, channel: &'static str) -> Result<f64> {
    let q2 = q.square();
    if q2.abs() < POLE_TOL {
        return Err(Error::SingularKinematics { channel, value: q2 });
    }
    Ok(q2)
}

/// `(−ie)² (−i) j₁·j₂ / q² = i e² j₁·j₂ / q²`.
fn one_photon(e: f64, j1: &[C64; 4], j2: &[C64; 4], q2: f64) -> C64 {
    I * (e * e / q2) * contract(j1, j2)
}

/// Direct diagram only, from explicit spinors `[u₁, u₂, u₁', u₂']`.
pub fn direct_term_from_spinors(e: f64, spinors: &[DiracSpinor; 4]) -> Result<C64> {
    let [u1, u2, u1o, u2o] = spinors;
    let q2 = photon_denominator(u1o.momentum - u1.momentum, "direct (p1' - p1)^2")?;
    Ok(one_photon(e, &current(u1o, u1), &current(u2o, u2), q2))
}

/// Full amplitude from explicit spinors `[u₁, u₂, u₁', u₂']`.
///
/// Spinors need not carry z-axis labels, so this also evaluates boosted or
/// rotated external states.
pub fn amplitude_from_spinors(e: f64, spinors: &[DiracSpinor; 4]) -> Result<Amplitude> {
    let [u1, u2, u1o, u2o] = spinors;
    let q2_direct = photon_denominator(u1o.momentum - u1.momentum, "direct (p1' - p1)^2")?;
    let q2_exchange = photon_denominator(u1o.momentum - u2.momentum, "exchange (p1' - p2)^2")?;
    let direct_term = one_photon(e, &current(u1o, u1), &current(u2o, u2), q2_direct);
    let exchange_term = one_photon(e, &current(u1o, u2), &current(u2o, u1), q2_exchange);
    Ok(Amplitude {
        value: direct_term - exchange_term,
        direct_term,
        exchange_term,
    })
}

pub fn tree_amplitude(k: &ScatteringKinematics) -> Result<Amplitude> {
    k.validate()?;
    amplitude_from_spinors(k.coupling_e, &k.spinors()?)
}

/// Direct term of [`tree_amplitude`]; the exchange pole is not consulted.
pub fn tree_direct_term(k: &ScatteringKinematics) -> Result<C64> {
    k.validate()?;
    direct_term_from_spinors(k.coupling_e, &k.spinors()?)
}

/// Small-momentum form of the spatial current,
/// `ξ'†[(p⃗ + p⃗')ⁱ + i(σ⃗ × q⃗)ⁱ]ξ` with `q⃗ = p⃗' − p⃗`.
pub fn leading_spatial_current(p: FourVector, p_prime: FourVector, xi: &ComplexVector, xi_prime: &ComplexVector) -> [C64; 3] {
    let sig = pauli();
    let sum = [p.x + p_prime.x, p.y + p_prime.y, p.z + p_prime.z];
    let q = [p_prime.x - p.x, p_prime.y - p.y, p_prime.z - p.z];
    std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        // (σ × q)ᵢ = σⱼ q_k − σ_k qⱼ
        let cross = &sig[j].scale_real(q[k]) - &sig[k].scale_real(q[j]);
        let op = &ComplexMatrix::identity(2).scale_real(sum[i]) + &cross.scale(I);
        xi_prime.inner(&op.apply(xi))
    })
}

/// Relative deviation between the exact spatial current `ū(p',ξ')γⁱu(p,ξ)`
/// and its small-momentum form, normalized by the largest leading-order
/// component. Shrinks as `(|p⃗|/m)²`.
pub fn gordon_check(p: FourVector, p_prime: FourVector, xi: &ComplexVector, xi_prime: &ComplexVector, mass: f64) -> Result<f64> {
    let u = u_spinor(p, xi, mass)?;
    let u_out = u_spinor(p_prime, xi_prime, mass)?;
    let exact = current(&u_out, &u);
    let lead = leading_spatial_current(p, p_prime, xi, xi_prime);
    let abs_dev = (0..3).map(|i| (exact[i + 1] - lead[i]).norm()).fold(0.0, f64::max);
    let scale = lead.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(if abs_dev == 0.0 { 0.0 } else { abs_dev / mass });
    }
    Ok(abs_dev / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::u_rest;
    use crate::lorentz::{compose, transform_spinor, LorentzTransform};
    use crate::tensor::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use SpinLabel::{Down, Up};

    const E: f64 = 0.302_822_120_871_1; // sqrt(4π/137.035999)

    fn rand_spin(rng: &mut impl Rng) -> SpinLabel {
        if rng.gen_bool(0.5) {
            Up
        } else {
            Down
        }
    }

    fn rand_kinematics(rng: &mut impl Rng) -> ScatteringKinematics {
        elastic_kinematics(
            1.0,
            E,
            rng.gen_range(0.01..3.0),
            rng.gen_range(0.1..3.0),
            [rand_spin(rng), rand_spin(rng)],
            [rand_spin(rng), rand_spin(rng)],
        )
        .unwrap()
    }

    #[test]
    fn forward_scattering_is_singular() {
        let k = elastic_kinematics(1.0, E, 0.3, 0.0, [Up, Down], [Up, Down]).unwrap();
        match tree_amplitude(&k) {
            Err(Error::SingularKinematics { channel, .. }) => assert!(channel.starts_with("direct")),
            other => panic!("expected a pole, got {other:?}"),
        }
    }

    #[test]
    fn backscattering_hits_exchange_pole() {
        let k = elastic_kinematics(1.0, E, 0.3, std::f64::consts::PI, [Up, Down], [Up, Down]).unwrap();
        match tree_amplitude(&k) {
            Err(Error::SingularKinematics { channel, .. }) => assert!(channel.starts_with("exchange")),
            other => panic!("expected a pole, got {other:?}"),
        }
        assert!(tree_direct_term(&k).is_ok());
    }

    #[test]
    fn non_conserving_kinematics_rejected() {
        let mut k = elastic_kinematics(1.0, E, 0.3, 1.0, [Up, Down], [Up, Down]).unwrap();
        k.outgoing[1].momentum = FourVector::on_shell(1.0, [0.0, 0.0, 0.1]);
        assert!(matches!(tree_amplitude(&k), Err(Error::MomentumNotConserved(_))));
        let mut k = elastic_kinematics(1.0, E, 0.3, 1.0, [Up, Down], [Up, Down]).unwrap();
        k.outgoing[1].momentum.t += 0.5;
        assert!(matches!(tree_amplitude(&k), Err(Error::OffShell(_))));
    }

    #[test]
    fn value_is_direct_minus_exchange() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = tree_amplitude(&rand_kinematics(&mut rng)).unwrap();
        assert_eq!(a.value, a.direct_term - a.exchange_term);
    }

    #[test]
    fn antisymmetric_under_outgoing_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..1000 {
            let k = rand_kinematics(&mut rng);
            let a = tree_amplitude(&k).unwrap().value;
            let b = tree_amplitude(&k.with_outgoing_swapped()).unwrap().value;
            assert!((a + b).norm() <= 1e-10 * a.norm().max(b.norm()).max(1e-300));
        }
    }

    #[test]
    fn current_examples() {
        let u = u_rest(Up, 1.0);
        let j = current(&u, &u);
        assert!((j[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!(j[1..].iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn ward_identity_for_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..300 {
            let k = rand_kinematics(&mut rng);
            for (o, i) in [(0, 0), (1, 1), (0, 1), (1, 0)] {
                let uo = u_labeled(k.outgoing[o].momentum, k.outgoing[o].spin, 1.0).unwrap();
                let ui = u_labeled(k.incoming[i].momentum, k.incoming[i].spin, 1.0).unwrap();
                let j = current(&uo, &ui);
                let norm = j.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let q = uo.momentum - ui.momentum;
                assert!(ward_contraction(q, &j).norm() <= 1e-9 * norm.max(1e-300));
            }
        }
    }

    #[test]
    fn small_momentum_direct_term_is_coulomb() {
        // Ṽ_direct → (2m)² e² / |q|²
        for pmag in [0.01, 0.005] {
            let k = elastic_kinematics(1.0, E, pmag, 1.2, [Up, Down], [Up, Down]).unwrap();
            let d = tree_direct_term(&k).unwrap();
            let q = k.momentum_transfer().spatial_norm();
            let coulomb = 4.0 * E * E / (q * q);
            let born = (I * d).re;
            assert!((born / coulomb - 1.0).abs() < 2.0 * pmag * pmag, "pmag {pmag}: {}", born / coulomb);
        }
    }

    #[test]
    fn amplitude_is_frame_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..50 {
            let k = rand_kinematics(&mut rng);
            let spinors = k.spinors().unwrap();
            let a = amplitude_from_spinors(E, &spinors).unwrap();
            let t = compose(
                &LorentzTransform::rotation([0.0, 0.6, 0.8], rng.gen_range(-3.0..3.0)).unwrap(),
                &LorentzTransform::boost([0.0, 0.0, 1.0], rng.gen_range(-2.0..2.0)).unwrap(),
            );
            let moved = spinors.clone().map(|u| transform_spinor(&t, &u));
            let b = amplitude_from_spinors(E, &moved).unwrap();
            assert!((a.value.norm() - b.value.norm()).abs() <= 1e-8 * a.value.norm());
        }
    }

    #[test]
    fn gordon_zero_momentum() {
        let p = FourVector::at_rest(1.0);
        assert_eq!(gordon_check(p, p, &Up.xi(), &Up.xi(), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn gordon_quadratic_convergence() {
        let xi = ComplexVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let xi_p = ComplexVector::new(vec![c(0.8, 0.0), c(-0.6, 0.0)]);
        let dev = |d: f64| {
            let p = FourVector::on_shell(1.0, [d * 0.48, d * 0.6, d * 0.64]);
            let pp = FourVector::on_shell(1.0, [-d * 0.4, d * 0.18, d * 0.24]);
            gordon_check(p, pp, &xi, &xi_p, 1.0).unwrap()
        };
        let ratio = dev(0.1) / dev(0.05);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn gordon_pure_spin_flip() {
        let d = 0.05;
        let p = FourVector::on_shell(1.0, [d, 0.0, 0.0]);
        let pp = FourVector::on_shell(1.0, [-d, 0.0, 0.0]);
        let lead = leading_spatial_current(p, pp, &Up.xi(), &Down.xi());
        // convective piece vanishes; i(σ×q) with q = −2d x̂ gives 2d ŷ-ish terms
        assert!(lead[0].norm() < 1e-15);
        assert!(lead[1].norm() > 0.0 || lead[2].norm() > 0.0);
        let dev = gordon_check(p, pp, &Up.xi(), &Down.xi(), 1.0).unwrap();
        assert!(dev <= d * d, "dev {dev}");
    }
}
