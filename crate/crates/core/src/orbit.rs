//! Closed-orbit domain types and the per-orbit algebra: wedge traces,
//! determinant normalization, repetition expansion, orientability.

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::SqMatrix;

/// Orbits whose |det(I - P)| falls at or below this are treated as
/// non-hyperbolic and rejected outright rather than skipped.
pub const DET_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("wedge degree {degree} out of range for a {dim}x{dim} matrix")]
    WedgeDegreeOutOfRange { degree: usize, dim: usize },
    #[error("near-singular I - P on orbit '{label}' (period {period}): |det| = {det:e}")]
    NearSingular { label: String, period: f64, det: f64 },
    #[error("orientation sign flips at orbit '{label}' (period {period}): no constant beta exists")]
    InconsistentOrientation { label: String, period: f64 },
    #[error("empty orbit list")]
    EmptyOrbitList,
}

/// A primitive periodic orbit of the flow, identified by a canonical label
/// (lexicographically minimal rotation for symbolic words, minimal point for
/// lattice cycles).
#[derive(Clone, Debug)]
pub struct PrimitiveCycle {
    pub label: String,
    pub primitive_period: f64,
    pub primitive_poincare: SqMatrix,
    pub primitive_potential_average: Complex64,
}

/// A closed orbit = primitive cycle traversed `repetition` times.
#[derive(Clone, Debug)]
pub struct ClosedOrbit {
    pub label: String,
    pub primitive_period: f64,
    pub repetition: u32,
    /// period = repetition * primitive_period, exactly.
    pub period: f64,
    /// Linearized Poincare map on the transversal: m-th power of the
    /// primitive cycle's matrix.
    pub poincare: SqMatrix,
    /// Scalar transport factor exp(-T * V_avg).
    pub transport_trace: Complex64,
    /// Average of the potential over the orbit (repetition-invariant).
    pub potential_average: Complex64,
}

/// Scalar potentials supported by the weight algebra. Both variants have
/// orbit averages independent of the orbit geometry, which is what makes the
/// zeta shift identity zeta(lambda, V=c) = zeta(lambda + c, V=0) exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential {
    Zero,
    Constant(Complex64),
}

impl Potential {
    pub fn average(&self) -> Complex64 {
        match self {
            Potential::Zero => Complex64::new(0.0, 0.0),
            Potential::Constant(c) => *c,
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Constant(c) => c.im == 0.0,
        }
    }
}

/// Parameters of the orbit weight e^{-T(lambda+V)} T# tr wedge^l(P) / |det(I-P)|.
#[derive(Clone, Copy, Debug)]
pub struct WeightParams {
    pub lambda: Complex64,
    pub wedge_degree: usize,
    /// Parity beta with (-1)^beta det(I-P) = |det(I-P)|, from check_orientability.
    pub orientation_sign: u32,
    pub potential: Potential,
}

impl WeightParams {
    pub fn new(lambda: Complex64, wedge_degree: usize) -> Self {
        WeightParams {
            lambda,
            wedge_degree,
            orientation_sign: 1,
            potential: Potential::Zero,
        }
    }
}

/// Trace of the l-th exterior power of P: the l-th elementary symmetric
/// polynomial of the eigenvalues, read off the characteristic polynomial.
/// l = 0 gives 1, l = dim gives det(P).
pub fn wedge_trace(p: &SqMatrix, ell: usize) -> Result<f64, OrbitError> {
    if ell > p.dim() {
        return Err(OrbitError::WedgeDegreeOutOfRange { degree: ell, dim: p.dim() });
    }
    Ok(p.elementary_symmetric()[ell])
}

/// Expand primitive cycles into all closed orbits with period <= t_max,
/// ordered by (period, label). The same primitive cycle at two repetition
/// counts is two distinct closed orbits.
pub fn expand_repetitions(cycles: &[PrimitiveCycle], t_max: f64) -> Vec<ClosedOrbit> {
    assert!(t_max > 0.0, "t_max must be positive");
    let mut orbits = Vec::new();
    for cycle in cycles {
        assert!(cycle.primitive_period > 0.0, "primitive period must be positive");
        let max_rep = (t_max / cycle.primitive_period).floor() as u32;
        let mut power = SqMatrix::identity(cycle.primitive_poincare.dim());
        for m in 1..=max_rep {
            power = power.mul(&cycle.primitive_poincare);
            let period = m as f64 * cycle.primitive_period;
            if period > t_max {
                break;
            }
            orbits.push(ClosedOrbit {
                label: cycle.label.clone(),
                primitive_period: cycle.primitive_period,
                repetition: m,
                period,
                poincare: power.clone(),
                transport_trace: (-period * cycle.primitive_potential_average).exp(),
                potential_average: cycle.primitive_potential_average,
            });
        }
    }
    orbits.sort_by(|a, b| {
        a.period
            .partial_cmp(&b.period)
            .unwrap()
            .then_with(|| a.label.cmp(&b.label))
            .then(a.repetition.cmp(&b.repetition))
    });
    orbits
}

/// Weight of one closed orbit in the dynamical trace:
/// e^{-T(lambda + V)} * T# * tr wedge^l(P) / |det(I - P)|.
pub fn orbit_weight(orbit: &ClosedOrbit, params: &WeightParams) -> Result<Complex64, OrbitError> {
    let det = orbit.poincare.sub_from_identity().det();
    if det.abs() <= DET_THRESHOLD {
        return Err(OrbitError::NearSingular {
            label: orbit.label.clone(),
            period: orbit.period,
            det: det.abs(),
        });
    }
    let wedge = wedge_trace(&orbit.poincare, params.wedge_degree)?;
    let v = params.potential.average();
    let exponent = -(params.lambda + v) * orbit.period;
    Ok(exponent.exp() * orbit.primitive_period * wedge / det.abs())
}

/// Determine the constant parity beta with (-1)^beta det(I - P) = |det(I - P)|
/// across all orbits. Fails on the first orbit whose sign disagrees.
pub fn check_orientability(orbits: &[ClosedOrbit]) -> Result<u32, OrbitError> {
    let first = orbits.first().ok_or(OrbitError::EmptyOrbitList)?;
    let beta_of = |orbit: &ClosedOrbit| -> Result<u32, OrbitError> {
        let det = orbit.poincare.sub_from_identity().det();
        if det.abs() <= DET_THRESHOLD {
            return Err(OrbitError::NearSingular {
                label: orbit.label.clone(),
                period: orbit.period,
                det: det.abs(),
            });
        }
        Ok(if det > 0.0 { 0 } else { 1 })
    };
    let beta = beta_of(first)?;
    for orbit in &orbits[1..] {
        if beta_of(orbit)? != beta {
            return Err(OrbitError::InconsistentOrientation {
                label: orbit.label.clone(),
                period: orbit.period,
            });
        }
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn basic_cycle() -> PrimitiveCycle {
        PrimitiveCycle {
            label: "gamma".into(),
            primitive_period: 2.0 * PI,
            primitive_poincare: SqMatrix::diag(&[(-2.0 * PI).exp(), (2.0 * PI).exp()]),
            primitive_potential_average: Complex64::new(0.0, 0.0),
        }
    }

    #[test]
    fn wedge_trace_on_diagonal_matrix() {
        let p = SqMatrix::diag(&[2.0, 0.5]);
        assert_eq!(wedge_trace(&p, 0).unwrap(), 1.0, "zeroth wedge power is scalar");
        assert_eq!(wedge_trace(&p, 1).unwrap(), 2.5, "first wedge trace is the trace");
        assert!((wedge_trace(&p, 2).unwrap() - 1.0).abs() < 1e-15, "top wedge is det");
        assert!(matches!(
            wedge_trace(&p, 3),
            Err(OrbitError::WedgeDegreeOutOfRange { degree: 3, dim: 2 })
        ));
    }

    #[test]
    fn wedge_trace_is_transpose_invariant() {
        let p = SqMatrix::new(2, vec![0.3, 1.7, -0.4, 2.2]);
        let pt = p.transpose();
        for ell in 0..=2 {
            let a = wedge_trace(&p, ell).unwrap();
            let b = wedge_trace(&pt, ell).unwrap();
            // the LU pivot order differs on the transpose, so only demand
            // agreement to rounding
            assert!(
                (a - b).abs() <= 1e-15 * a.abs().max(1.0),
                "wedge trace must not depend on the transpose convention: {a} vs {b}"
            );
        }
    }

    #[test]
    fn repetition_expansion_of_the_single_basic_cycle() {
        let cycles = vec![basic_cycle()];
        let up_to_7 = expand_repetitions(&cycles, 7.0);
        assert_eq!(up_to_7.len(), 1, "4 pi exceeds 7");
        let up_to_13 = expand_repetitions(&cycles, 13.0);
        assert_eq!(up_to_13.len(), 2, "floor(13 / 2 pi) = 2");
        assert_eq!(up_to_13[0].period, 2.0 * PI);
        assert_eq!(up_to_13[1].period, 4.0 * PI);
        assert_eq!(up_to_13[1].repetition, 2);
        // P for m = 2 is the square of the primitive matrix
        let p2 = up_to_13[1].poincare.clone();
        assert!((p2.get(0, 0) - (-4.0 * PI).exp()).abs() < 1e-18);
        assert!((p2.get(1, 1) - (4.0 * PI).exp()).abs() / (4.0 * PI).exp() < 1e-15);
    }

    #[test]
    fn expansion_is_a_monotone_prefix_in_t_max() {
        let word = PrimitiveCycle {
            label: "01".into(),
            primitive_period: 2.0,
            primitive_poincare: SqMatrix::diag(&[1.0 / 9.0, 16.0]),
            primitive_potential_average: Complex64::new(0.0, 0.0),
        };
        let cycles = vec![basic_cycle(), word];
        let small = expand_repetitions(&cycles, 6.0);
        let large = expand_repetitions(&cycles, 13.0);
        assert!(small.len() < large.len());
        for (a, b) in small.iter().zip(&large) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.repetition, b.repetition);
        }
    }

    #[test]
    fn horseshoe_word_expansion_powers_the_poincare_matrix() {
        let word = PrimitiveCycle {
            label: "01".into(),
            primitive_period: 2.0,
            primitive_poincare: SqMatrix::diag(&[1.0 / 9.0, 16.0]),
            primitive_potential_average: Complex64::new(0.0, 0.0),
        };
        let orbits = expand_repetitions(&[word], 6.0);
        assert_eq!(orbits.len(), 3, "m = 1, 2, 3 fit under T_max = 6");
        for (i, orbit) in orbits.iter().enumerate() {
            let m = (i + 1) as i32;
            assert!((orbit.poincare.get(0, 0) - (1.0f64 / 9.0).powi(m)).abs() < 1e-15);
            assert!((orbit.poincare.get(1, 1) - 16.0f64.powi(m)).abs() < 1e-6 * 16.0f64.powi(m));
        }
    }

    #[test]
    fn basic_orbit_weight_matches_hand_computed_values() {
        let orbits = expand_repetitions(&[basic_cycle()], 7.0);
        let w0 = orbit_weight(&orbits[0], &WeightParams::new(Complex64::new(0.0, 0.0), 0)).unwrap();
        // denominator e^{2 pi} + e^{-2 pi} - 2 = 533.49352296749644
        let denom = (2.0 * PI).exp() + (-2.0 * PI).exp() - 2.0;
        assert!((denom - 533.49352296749644).abs() < 1e-10);
        assert!(
            (w0.re - 0.011777435032819311).abs() < 1e-16 && w0.im == 0.0,
            "weight at lambda=0: {w0}"
        );
        let w1 = orbit_weight(&orbits[0], &WeightParams::new(Complex64::new(1.0, 0.0), 0)).unwrap();
        assert!(
            (w1.re - 2.1993685450201462e-5).abs() < 1e-19,
            "weight at lambda=1 picks up e^(-2 pi): {}",
            w1.re
        );
    }

    #[test]
    fn cat_fixed_point_weight_is_one() {
        // P = (A^{-1})^T for A = [[2,1],[1,1]]; |det(I - P)| = 1, T# = 1.
        let orbit = ClosedOrbit {
            label: "0/1,0/1".into(),
            primitive_period: 1.0,
            repetition: 1,
            period: 1.0,
            poincare: SqMatrix::new(2, vec![1.0, -1.0, -1.0, 2.0]),
            transport_trace: Complex64::new(1.0, 0.0),
            potential_average: Complex64::new(0.0, 0.0),
        };
        let w = orbit_weight(&orbit, &WeightParams::new(Complex64::new(0.0, 0.0), 0)).unwrap();
        assert!((w.re - 1.0).abs() < 1e-14 && w.im == 0.0, "unit weight, got {w}");
    }

    #[test]
    fn weight_shift_law_in_lambda() {
        let orbits = expand_repetitions(&[basic_cycle()], 13.0);
        let c = Complex64::new(0.37, -0.21);
        let lam = Complex64::new(0.5, 1.25);
        for orbit in &orbits {
            let base = orbit_weight(orbit, &WeightParams::new(lam, 1)).unwrap();
            let shifted = orbit_weight(orbit, &WeightParams::new(lam + c, 1)).unwrap();
            let factor = (-c * orbit.period).exp();
            assert!(
                (shifted - base * factor).norm() <= 1e-12 * base.norm() * factor.norm(),
                "shift by c multiplies the weight by exp(-cT)"
            );
        }
    }

    #[test]
    fn constant_potential_shifts_like_lambda() {
        let orbits = expand_repetitions(&[basic_cycle()], 13.0);
        let c = Complex64::new(0.4, 0.1);
        let lam = Complex64::new(1.0, 0.0);
        for orbit in &orbits {
            let mut with_v = WeightParams::new(lam, 0);
            with_v.potential = Potential::Constant(c);
            let lhs = orbit_weight(orbit, &with_v).unwrap();
            let rhs = orbit_weight(orbit, &WeightParams::new(lam + c, 0)).unwrap();
            assert!((lhs - rhs).norm() < 1e-18, "V = c equals a lambda shift");
        }
    }

    #[test]
    fn near_singular_poincare_is_a_hard_error() {
        let orbit = ClosedOrbit {
            label: "bad".into(),
            primitive_period: 1.0,
            repetition: 1,
            period: 1.0,
            poincare: SqMatrix::identity(2),
            transport_trace: Complex64::new(1.0, 0.0),
            potential_average: Complex64::new(0.0, 0.0),
        };
        let err = orbit_weight(&orbit, &WeightParams::new(Complex64::new(0.0, 0.0), 0));
        assert!(matches!(err, Err(OrbitError::NearSingular { .. })));
    }

    #[test]
    fn orientability_of_basic_orbits_is_beta_one() {
        let orbits = expand_repetitions(&[basic_cycle()], 5.0 * 2.0 * PI + 0.1);
        assert_eq!(orbits.len(), 5);
        assert_eq!(check_orientability(&orbits).unwrap(), 1, "saddle orbits have det(I-P) < 0");
    }

    #[test]
    fn orientability_rejects_a_constructed_sign_flip() {
        let mut orbits = expand_repetitions(&[basic_cycle()], 13.0);
        orbits.push(ClosedOrbit {
            label: "flip".into(),
            primitive_period: 1.0,
            repetition: 1,
            period: 1.0,
            poincare: SqMatrix::diag(&[0.5, 0.5]),
            transport_trace: Complex64::new(1.0, 0.0),
            potential_average: Complex64::new(0.0, 0.0),
        });
        assert!(matches!(
            check_orientability(&orbits),
            Err(OrbitError::InconsistentOrientation { .. })
        ));
        assert!(matches!(check_orientability(&[]), Err(OrbitError::EmptyOrbitList)));
    }

    #[test]
    fn per_orbit_orientability_identity_sums_to_one() {
        // sum_l (-1)^(l + beta) tr wedge^l P / |det(I-P)| = 1 with beta = 1.
        let orbits = expand_repetitions(&[basic_cycle()], 26.0);
        for orbit in &orbits {
            let det = orbit.poincare.sub_from_identity().det();
            let mut acc = 0.0;
            for ell in 0..=2 {
                let sign = if (ell + 1) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * wedge_trace(&orbit.poincare, ell).unwrap() / det.abs();
            }
            assert!(
                (acc - 1.0).abs() < 1e-10,
                "orientability identity fails at m = {}: {acc}",
                orbit.repetition
            );
        }
    }
}
