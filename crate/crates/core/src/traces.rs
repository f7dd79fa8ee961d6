//! Dynamical trace sums, Ruelle zeta products, and exact meromorphic
//! continuations of the built-in models' traces.
//!
//! Truncated sums carry an empirical geometric tail bound obtained from the
//! ratio of the last two period blocks; the continuations are closed forms
//! (functional-equation descent for the basic model, per-orbit cancellation
//! for the cat suspension, lattice resummation for the horseshoe) valid on
//! all of C away from the pole sets.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::models::{ModelDescriptor, ModelError, POLE_GUARD};
use crate::orbit::{
    expand_repetitions, orbit_weight, OrbitError, Potential, WeightParams,
};

/// Default lattice truncation for the horseshoe continuation; terms decay
/// like lambda_u^-j lambda_s^k, so 40 gives < 1e-12 truncation error for the
/// standard parameters in the acceptance window.
pub const HORSESHOE_J_DEFAULT: usize = 40;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("evaluation within {guard:e} of the pole at {pole}")]
    NearPole { pole: Complex64, guard: f64 },
}

/// A truncated sum with its accuracy metadata.
#[derive(Clone, Copy, Debug)]
pub struct TraceValue {
    pub value: Complex64,
    /// Geometric bound on the omitted terms; infinite when no convergent
    /// extrapolation exists (ratio >= 1 or too few blocks).
    pub tail_estimate: f64,
    pub terms_used: usize,
    /// Re lambda minus the estimated convergence abscissa; the tail is
    /// finite only when this is positive.
    pub abscissa_margin: f64,
}

/// exp(z) - 1 without cancellation for small z or z near 2 pi i k:
/// Re = expm1(Re z) cos(Im z) - 2 sin^2(Im z / 2), Im = exp(Re z) sin(Im z).
pub(crate) fn cexpm1(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let s = (0.5 * b).sin();
    Complex64::new(a.exp_m1() * b.cos() - 2.0 * s * s, a.exp() * b.sin())
}

fn tail_from_blocks(blocks: &BTreeMap<u64, Complex64>, delta: f64) -> (f64, f64) {
    // norms of the trailing consecutive run of blocks, oldest first
    let mut run: Vec<f64> = Vec::new();
    let mut expect: Option<u64> = None;
    for (k, b) in blocks.iter().rev().take(4) {
        if expect.is_some_and(|e| *k != e) {
            break;
        }
        run.push(b.norm());
        expect = k.checked_sub(1);
    }
    run.reverse();
    let n = run.len();
    if n < 2 || run[n - 2] == 0.0 {
        return (f64::INFINITY, f64::NAN);
    }
    let mut r = run[n - 1] / run[n - 2];
    // The block ratios of a hyperbolic orbit sum approach their limit from
    // below (the 1/det corrections shrink), so the raw last ratio slightly
    // understates the tail.  When the last three ratios increase with
    // geometrically decaying increments, extrapolate the limit instead.
    if n == 4 && run[0] > 0.0 && run[1] > 0.0 {
        let (r1, r2) = (run[1] / run[0], run[2] / run[1]);
        let (d1, d2) = (r2 - r1, r - r2);
        if d1 > 0.0 && d2 > 0.0 && d2 < d1 {
            let s = d2 / d1;
            r = (r + d2 * s / (1.0 - s)).max(r);
        }
    }
    let margin = -r.ln() / delta;
    let tail = if r < 1.0 { run[n - 1] * r / (1.0 - r) } else { f64::INFINITY };
    (tail, margin)
}

/// Truncated dynamical trace
/// F_l(lambda) = sum over closed orbits of
/// e^{-T(lambda+V)} T# tr wedge^l(P) / |det(I - P)|,
/// over all orbits with period <= t_max.
pub fn trace_sum(
    model: &ModelDescriptor,
    lambda: Complex64,
    t_max: f64,
    ell: usize,
    potential: Potential,
) -> Result<TraceValue, TraceError> {
    let mut cycles = model.primitive_cycles(t_max)?;
    for c in &mut cycles {
        c.primitive_potential_average = potential.average();
    }
    let orbits = expand_repetitions(&cycles, t_max);
    let params = WeightParams {
        lambda,
        wedge_degree: ell,
        orientation_sign: model.beta(),
        potential,
    };
    let delta = model.roof();
    let mut blocks: BTreeMap<u64, Complex64> = BTreeMap::new();
    for orbit in &orbits {
        let w = orbit_weight(orbit, &params)?;
        *blocks.entry((orbit.period / delta).round() as u64).or_insert(Complex64::new(0.0, 0.0)) +=
            w;
    }
    let value = blocks.values().sum();
    let (tail_estimate, abscissa_margin) = tail_from_blocks(&blocks, delta);
    Ok(TraceValue { value, tail_estimate, terms_used: orbits.len(), abscissa_margin })
}

/// Truncated Ruelle zeta: product over primitive cycles with T# <= t_max of
/// (1 - e^{-T#(lambda + V)}).
pub fn zeta_product(
    model: &ModelDescriptor,
    lambda: Complex64,
    t_max: f64,
    potential: Potential,
) -> Result<TraceValue, TraceError> {
    let cycles = model.primitive_cycles(t_max)?;
    let v = potential.average();
    let delta = model.roof();
    let mut value = Complex64::new(1.0, 0.0);
    // first-order per-block log contributions |e^{-T#(lambda+V)}|, for the
    // geometric tail of the omitted factors
    let mut log_blocks: BTreeMap<u64, Complex64> = BTreeMap::new();
    for c in &cycles {
        let x = (-(lambda + v) * c.primitive_period).exp();
        value *= Complex64::new(1.0, 0.0) - x;
        *log_blocks
            .entry((c.primitive_period / delta).round() as u64)
            .or_insert(Complex64::new(0.0, 0.0)) += Complex64::new(x.norm(), 0.0);
    }
    let (log_tail, abscissa_margin) = tail_from_blocks(&log_blocks, delta);
    // |zeta_full - zeta_trunc| <= |zeta_trunc| (e^{log_tail} - 1) to first order
    let tail_estimate = if log_tail.is_finite() {
        value.norm() * log_tail.exp_m1()
    } else {
        f64::INFINITY
    };
    Ok(TraceValue { value, tail_estimate, terms_used: cycles.len(), abscissa_margin })
}

/// zeta'(lambda)/zeta(lambda) as the alternating wedge-degree combination
/// sum over l of (-1)^{l + beta} F_l(lambda), with beta from
/// check_orientability.
pub fn zeta_log_derivative(
    model: &ModelDescriptor,
    lambda: Complex64,
    t_max: f64,
    potential: Potential,
    beta: u32,
) -> Result<TraceValue, TraceError> {
    let top = model.dimension - 1;
    let mut value = Complex64::new(0.0, 0.0);
    let mut tail = 0.0f64;
    let mut terms = 0;
    let mut margin = f64::INFINITY;
    for ell in 0..=top {
        let sign = if (ell + beta as usize) % 2 == 0 { 1.0 } else { -1.0 };
        let t = trace_sum(model, lambda, t_max, ell, potential)?;
        value += sign * t.value;
        tail += t.tail_estimate;
        terms = terms.max(t.terms_used);
        margin = margin.min(t.abscissa_margin);
    }
    Ok(TraceValue { value, tail_estimate: tail, terms_used: terms, abscissa_margin: margin })
}

fn basic_nearest_pole(lambda: Complex64) -> Complex64 {
    let ell = (-1.0 - lambda.re).round().max(0.0);
    Complex64::new(-1.0 - ell, lambda.im.round())
}

/// Direct series for the basic model, F(lambda) =
/// sum over m >= 1 of 2 pi e^{-2 pi m (lambda+1)} / (1 - e^{-2 pi m})^2,
/// converging for Re lambda > -1 (used for Re lambda > -1/2).
fn basic_series(lambda: Complex64) -> Complex64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 1..=400 {
        let mf = m as f64;
        let damp = (-two_pi * mf).exp();
        let term = two_pi * (-(lambda + 1.0) * two_pi * mf).exp() / ((1.0 - damp) * (1.0 - damp));
        acc += term;
        if term.norm() < 1e-18 * acc.norm().max(1e-300) {
            break;
        }
    }
    acc
}

/// Exact meromorphic continuation of the basic-model trace to all of C off
/// the lattice {-1 - l + i k}: direct series for Re lambda > -1/2, else
/// downward descent through the functional equation
/// F(mu - 1) = 2 F(mu) - F(mu + 1) + 2 pi / (e^{2 pi mu} - 1).
/// No pole-proximity guard; the explicit term is evaluated through expm1 and
/// stays relatively accurate arbitrarily close to the poles.
pub fn continue_basic_unchecked(lambda: Complex64) -> Complex64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    if lambda.re > -0.5 {
        return basic_series(lambda);
    }
    let depth = (-lambda.re).ceil() as i32 + 1;
    let mut f1 = basic_series(lambda + depth as f64); // F(lambda + depth)
    let mut f2 = basic_series(lambda + (depth + 1) as f64);
    for j in (0..depth).rev() {
        let mu = lambda + (j + 1) as f64;
        let g = two_pi / cexpm1(two_pi * mu);
        let f0 = 2.0 * f1 - f2 + g;
        f2 = f1;
        f1 = f0;
    }
    f1
}

/// Guarded continuation: errors within 1e-8 of a lattice pole; residues near
/// poles belong to the resonances module's contour quadrature.
pub fn continue_basic(lambda: Complex64) -> Result<Complex64, TraceError> {
    let pole = basic_nearest_pole(lambda);
    if (lambda - pole).norm() < POLE_GUARD {
        return Err(TraceError::NearPole { pole, guard: POLE_GUARD });
    }
    Ok(continue_basic_unchecked(lambda))
}

/// Cat-suspension continuation 1/(e^lambda - 1), poles 2 pi i Z, residue 1.
pub fn continue_cat_unchecked(lambda: Complex64) -> Complex64 {
    cexpm1(lambda).inv()
}

pub fn continue_cat(lambda: Complex64) -> Result<Complex64, TraceError> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let pole = Complex64::new(0.0, two_pi * (lambda.im / two_pi).round());
    if (lambda - pole).norm() < POLE_GUARD {
        return Err(TraceError::NearPole { pole, guard: POLE_GUARD });
    }
    Ok(continue_cat_unchecked(lambda))
}

/// Horseshoe lattice resummation, no guard: F(lambda) =
/// sum over j, k in [0, j_max] of q/(1 - q), q = 2 lambda_u^-j lambda_s^{k+1} e^{-lambda}.
pub fn continue_horseshoe_unchecked(
    lambda: Complex64,
    j_max: usize,
    lambda_u: f64,
    lambda_s: f64,
) -> Complex64 {
    let e = (-lambda).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=j_max {
        let wu = lambda_u.powi(-(j as i32));
        for k in 0..=j_max {
            let w = wu * lambda_s.powi(k as i32 + 1);
            let q = 2.0 * w * e;
            acc += q / (Complex64::new(1.0, 0.0) - q);
        }
    }
    acc
}

/// Horseshoe continuation with pole guard and geometric truncation tail.
///
/// Expanding 1/((1 - lambda_u^-n)(lambda_s^-n - 1)) into a double geometric
/// series and summing over n turns the trace into the lattice sum of
/// q/(1 - q) terms; poles sit at e^lambda = 2 w, i.e.
/// lambda = log 2 - j log lambda_u + (k+1) log lambda_s + 2 pi i m.
pub fn continue_horseshoe(
    lambda: Complex64,
    j_max: usize,
    lambda_u: f64,
    lambda_s: f64,
) -> Result<TraceValue, TraceError> {
    if !(lambda_u > 1.0) || !(lambda_s > 0.0 && lambda_s < 1.0) {
        return Err(TraceError::Model(ModelError::ParameterOutOfRange {
            reason: format!("lambda_u = {lambda_u}, lambda_s = {lambda_s}"),
        }));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let e = (-lambda).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=j_max {
        let wu = lambda_u.powi(-(j as i32));
        for k in 0..=j_max {
            let w = wu * lambda_s.powi(k as i32 + 1);
            let q = 2.0 * w * e;
            let denom = Complex64::new(1.0, 0.0) - q;
            if denom.norm() < POLE_GUARD {
                let pole = Complex64::new(
                    (2.0 * w).ln(),
                    two_pi * (lambda.im / two_pi).round(),
                );
                return Err(TraceError::NearPole { pole, guard: POLE_GUARD });
            }
            acc += q / denom;
        }
    }
    // tail over the omitted lattice indices, geometric in both directions
    let re_damp = (-lambda.re).exp();
    let q0 = 2.0
        * re_damp
        * (lambda_u.powi(-(j_max as i32 + 1)) * lambda_s).max(lambda_s.powi(j_max as i32 + 2));
    let (tail, margin) = if q0 < 1.0 {
        let su_tail = lambda_u.powi(-(j_max as i32 + 1)) / (1.0 - 1.0 / lambda_u);
        let su_head = (1.0 - lambda_u.powi(-(j_max as i32 + 1))) / (1.0 - 1.0 / lambda_u);
        let sk_all = lambda_s / (1.0 - lambda_s);
        let sk_tail = lambda_s.powi(j_max as i32 + 2) / (1.0 - lambda_s);
        (
            2.0 * re_damp * (su_tail * sk_all + su_head * sk_tail) / (1.0 - q0),
            lambda.re - (2.0 * lambda_s).ln(),
        )
    } else {
        (f64::INFINITY, lambda.re - (2.0 * lambda_s).ln())
    };
    Ok(TraceValue {
        value: acc,
        tail_estimate: tail,
        terms_used: (j_max + 1) * (j_max + 1),
        abscissa_margin: margin,
    })
}
