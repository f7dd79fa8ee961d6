//! Exact enumeration of primitive periodic orbits for the symbolic models:
//! binary Lyndon words for the horseshoe shift, lattice fixed points for
//! toral automorphisms (in exact rational arithmetic), orbit-count tables.

use std::collections::HashSet;

use num_complex::Complex64;
use num_rational::Ratio;
use thiserror::Error;

use crate::matrix::{IMat2, SqMatrix};
use crate::models::{ModelDescriptor, ModelError, ModelKind};
use crate::orbit::PrimitiveCycle;

/// Hard enumeration cap: beyond this, 2^n word counts and A^n entries stop
/// being desk-scale (and i64 matrix entries approach overflow).
pub const N_MAX_LIMIT: usize = 30;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("n_max = {n_max} outside 1..={N_MAX_LIMIT}")]
    NMaxOutOfRange { n_max: usize },
    #[error("integer overflow computing {what} at n = {n}")]
    Overflow { what: &'static str, n: usize },
    #[error("A^{n} - I is singular (matrix not hyperbolic)")]
    SingularFixedPointSystem { n: usize },
    #[error("point ({x}, {y}) is not exactly {n}-periodic under the map")]
    NotPeriodic { x: String, y: String, n: usize },
}

/// Exact rational point on the 2-torus, coordinates in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TorusPoint {
    pub x: Ratio<i128>,
    pub y: Ratio<i128>,
}

impl TorusPoint {
    pub fn new(x: Ratio<i128>, y: Ratio<i128>) -> Self {
        TorusPoint { x: frac(x), y: frac(y) }
    }

    /// Image under the toral automorphism x -> Ax mod 1, exactly.
    pub fn apply(&self, a: &IMat2) -> TorusPoint {
        let x = Ratio::from_integer(a.a[0][0]) * self.x + Ratio::from_integer(a.a[0][1]) * self.y;
        let y = Ratio::from_integer(a.a[1][0]) * self.x + Ratio::from_integer(a.a[1][1]) * self.y;
        TorusPoint { x: frac(x), y: frac(y) }
    }

    pub fn label(&self) -> String {
        format!("{},{}", self.x, self.y)
    }

    /// n-fold application of the map, for tests and periodicity checks.
    pub fn apply_n(&self, a: &IMat2, n: usize) -> TorusPoint {
        let mut p = *self;
        for _ in 0..n {
            p = p.apply(a);
        }
        p
    }
}

fn frac(r: Ratio<i128>) -> Ratio<i128> {
    r - r.floor()
}

/// All binary Lyndon words of length <= n_max, lexicographic order
/// (Duval's generation).
pub fn lyndon_words(n_max: usize) -> Result<Vec<String>, EnumError> {
    if n_max == 0 || n_max > N_MAX_LIMIT {
        return Err(EnumError::NMaxOutOfRange { n_max });
    }
    let mut words = Vec::new();
    let mut w: Vec<u8> = vec![0];
    loop {
        words.push(w.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect::<String>());
        let len = w.len();
        let mut t = Vec::with_capacity(n_max);
        for i in 0..n_max {
            t.push(w[i % len]);
        }
        w = t;
        while w.last() == Some(&1) {
            w.pop();
        }
        if w.is_empty() {
            break;
        }
        *w.last_mut().unwrap() = 1;
    }
    Ok(words)
}

fn moebius(n: u64) -> i64 {
    let mut n = n;
    let mut mu = 1i64;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// Number of binary Lyndon words of length exactly n:
/// (1/n) sum over d | n of mu(d) 2^(n/d).
pub fn necklace_count(n: usize) -> u64 {
    assert!(n >= 1 && n <= 63, "necklace count within u64 range");
    let n = n as u64;
    let mut acc: i128 = 0;
    for d in divisors(n) {
        acc += moebius(d) as i128 * (1i128 << (n / d));
    }
    (acc / n as i128) as u64
}

/// Primitive horseshoe cycles up to word length n_max: one cycle per binary
/// Lyndon word, period = word length, Poincare matrix
/// diag(lambda_u^-n, lambda_s^-n). Output in (length, lexicographic) order;
/// per-length counts are asserted against the necklace formula.
pub fn lyndon_cycles(
    n_max: usize,
    lambda_u: f64,
    lambda_s: f64,
) -> Result<Vec<PrimitiveCycle>, EnumError> {
    let words = lyndon_words(n_max)?;
    let mut counts = vec![0u64; n_max + 1];
    let mut cycles: Vec<PrimitiveCycle> = words
        .into_iter()
        .map(|w| {
            let n = w.len();
            counts[n] += 1;
            let nf = n as f64;
            PrimitiveCycle {
                label: w,
                primitive_period: nf,
                primitive_poincare: SqMatrix::diag(&[
                    lambda_u.powf(-nf),
                    lambda_s.powf(-nf),
                ]),
                primitive_potential_average: Complex64::new(0.0, 0.0),
            }
        })
        .collect();
    for n in 1..=n_max {
        assert_eq!(
            counts[n],
            necklace_count(n),
            "Lyndon word count at length {n} disagrees with the necklace formula"
        );
    }
    cycles.sort_by(|a, b| {
        a.primitive_period
            .partial_cmp(&b.primitive_period)
            .unwrap()
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(cycles)
}

fn imat_pow_checked(a: &IMat2, n: usize) -> Result<IMat2, EnumError> {
    a.checked_pow(n as u32).ok_or(EnumError::Overflow { what: "matrix power", n })
}

/// All fixed points of A^n on the torus, exactly: the solutions of
/// (A^n - I) x = 0 mod 1 in [0,1)^2, via the Hermite normal form of
/// M = A^n - I. Returns exactly |det M| rational points, sorted.
pub fn cat_fixed_points(a: [[i64; 2]; 2], n: usize) -> Result<Vec<TorusPoint>, EnumError> {
    if n == 0 || n > N_MAX_LIMIT {
        return Err(EnumError::NMaxOutOfRange { n_max: n });
    }
    let ai = IMat2::new([
        [a[0][0] as i128, a[0][1] as i128],
        [a[1][0] as i128, a[1][1] as i128],
    ]);
    let m = imat_pow_checked(&ai, n)?.sub_identity();
    let det = m.det();
    if det == 0 {
        return Err(EnumError::SingularFixedPointSystem { n });
    }
    // Row-reduce M to upper-triangular Hermite form H = U M (U unimodular):
    // then M x in Z^2 iff H x in Z^2.
    let mut r0 = (m.a[0][0], m.a[0][1]);
    let mut r1 = (m.a[1][0], m.a[1][1]);
    while r1.0 != 0 {
        let q = r0.0.div_euclid(r1.0);
        r0 = (r0.0 - q * r1.0, r0.1 - q * r1.1);
        std::mem::swap(&mut r0, &mut r1);
    }
    // now r1.0 == 0; make diagonal entries positive
    if r0.0 < 0 {
        r0 = (-r0.0, -r0.1);
    }
    if r1.1 < 0 {
        r1 = (r1.0, -r1.1);
    }
    let (h11, h12, h22) = (r0.0, r0.1, r1.1);
    debug_assert_eq!(h11 * h22, det.abs(), "HNF diagonal product is |det|");

    let mut seen: HashSet<TorusPoint> = HashSet::with_capacity((h11 * h22) as usize);
    let mut points = Vec::with_capacity((h11 * h22) as usize);
    for j in 0..h22 {
        let y = Ratio::new(j, h22);
        for i in 0..h11 {
            // h11 x + h12 y in Z  =>  x = (i - h12 j / h22)/h11 mod 1
            let x = frac(Ratio::new(i * h22 - h12 * j, h11 * h22));
            let p = TorusPoint { x, y };
            if seen.insert(p) {
                points.push(p);
            }
        }
    }
    assert_eq!(
        points.len() as i128,
        det.abs(),
        "fixed-point count must equal |det(A^n - I)|"
    );
    points.sort();
    Ok(points)
}

/// Partition exactly-n-periodic points into orbits under x -> Ax mod 1 and
/// wrap each orbit of primitive period exactly n as a PrimitiveCycle
/// (shorter orbits belong to smaller n and are skipped). The cycle label is
/// the minimal point of the orbit; the Poincare matrix is (A^n)^{-T}.
pub fn group_into_cycles(
    points: &[TorusPoint],
    a: &IMat2,
    n: usize,
) -> Result<Vec<PrimitiveCycle>, EnumError> {
    let an = imat_pow_checked(a, n)?;
    let poincare = inverse_transpose_f64(&an);
    let mut visited: HashSet<TorusPoint> = HashSet::with_capacity(points.len());
    let mut cycles = Vec::new();
    for &start in points {
        if visited.contains(&start) {
            continue;
        }
        let mut orbit = vec![start];
        let mut cur = start.apply(a);
        while cur != start {
            if orbit.len() > n {
                return Err(EnumError::NotPeriodic {
                    x: start.x.to_string(),
                    y: start.y.to_string(),
                    n,
                });
            }
            orbit.push(cur);
            cur = cur.apply(a);
        }
        if n % orbit.len() != 0 {
            return Err(EnumError::NotPeriodic {
                x: start.x.to_string(),
                y: start.y.to_string(),
                n,
            });
        }
        for p in &orbit {
            visited.insert(*p);
        }
        if orbit.len() == n {
            let canonical = *orbit.iter().min().unwrap();
            cycles.push((canonical, orbit.len()));
        }
    }
    cycles.sort();
    Ok(cycles
        .into_iter()
        .map(|(canonical, len)| PrimitiveCycle {
            label: canonical.label(),
            primitive_period: len as f64,
            primitive_poincare: poincare.clone(),
            primitive_potential_average: Complex64::new(0.0, 0.0),
        })
        .collect())
}

/// (A^n)^{-T} as an f64 matrix: for unimodular A the inverse is the adjugate,
/// so entries stay integers and the cast is exact up to 2^53.
fn inverse_transpose_f64(an: &IMat2) -> SqMatrix {
    let [[a, b], [c, d]] = an.a;
    let det = an.det();
    assert!(det == 1 || det == -1, "inverse-transpose route requires |det| = 1");
    let s = det as f64; // adj/det
    SqMatrix::new(
        2,
        vec![
            d as f64 / s,
            -(c as f64) / s,
            -(b as f64) / s,
            a as f64 / s,
        ],
    )
}

/// All primitive cat-suspension cycles with word period <= n_max,
/// (period, canonical point) order.
pub fn cat_primitive_cycles(
    a: [[i64; 2]; 2],
    n_max: usize,
) -> Result<Vec<PrimitiveCycle>, EnumError> {
    if n_max == 0 || n_max > N_MAX_LIMIT {
        return Err(EnumError::NMaxOutOfRange { n_max });
    }
    let ai = IMat2::new([
        [a[0][0] as i128, a[0][1] as i128],
        [a[1][0] as i128, a[1][1] as i128],
    ]);
    let mut out = Vec::new();
    for n in 1..=n_max {
        let points = cat_fixed_points(a, n)?;
        out.extend(group_into_cycles(&points, &ai, n)?);
    }
    Ok(out)
}

/// Poincare matrix of a primitive cycle from the model's closed form
/// (inverse-transpose of the flow differential over one period, restricted
/// to the transversal).
pub fn poincare_of_cycle(model: &ModelDescriptor, cycle: &PrimitiveCycle) -> SqMatrix {
    match &model.kind {
        ModelKind::Basic => {
            let t = cycle.primitive_period;
            SqMatrix::diag(&[(-t).exp(), t.exp()])
        }
        ModelKind::Cat { .. } => {
            let n = cycle.primitive_period.round() as usize;
            let an = model.cat_matrix().unwrap().pow(n as u32);
            inverse_transpose_f64(&an)
        }
        ModelKind::Horseshoe { lambda_u, lambda_s } => {
            let n = cycle.primitive_period.round();
            SqMatrix::diag(&[lambda_u.powf(-n), lambda_s.powf(-n)])
        }
        ModelKind::DegenerateDrift => {
            unreachable!("degenerate drift has no isolated cycles")
        }
    }
}

/// Orbit counts N(T) at multiples of the roof, counting (cycle, repetition)
/// pairs with period <= T, plus a fitted exponential growth rate.
#[derive(Clone, Debug)]
pub struct OrbitCountTable {
    pub model: String,
    pub entries: Vec<(f64, u128)>,
    /// Least-squares exponential rate fitted on the last third of the table.
    /// NaN when fewer than two usable entries exist.
    pub fitted_rate: f64,
}

/// Exact N(T) table for a model up to t_max.
///
/// Counts use the closed necklace/Moebius formulas rather than enumeration,
/// so tables to T = 30 are cheap. The growth rate is the least-squares slope
/// of log N(T) + log T against T on the last third of the table: for
/// hyperbolic flows N(T) grows like e^{hT}/(hT), so fitting log N alone
/// underestimates h by roughly 1/T at these desk-scale horizons, while the
/// log T correction removes that bias.
pub fn count_orbits(model: &ModelDescriptor, t_max: f64) -> Result<OrbitCountTable, ModelError> {
    let roof = model.roof();
    let k_max = (t_max / roof).floor() as usize;
    let mut per_period: Vec<u128> = Vec::with_capacity(k_max);
    match &model.kind {
        ModelKind::Basic => {
            per_period = vec![1u128; k_max];
        }
        ModelKind::Horseshoe { .. } => {
            if k_max > N_MAX_LIMIT {
                return Err(ModelError::Enumeration(EnumError::NMaxOutOfRange { n_max: k_max }));
            }
            for n in 1..=k_max {
                let c: u128 = divisors(n as u64)
                    .into_iter()
                    .map(|d| necklace_count(d as usize) as u128)
                    .sum();
                per_period.push(c);
            }
        }
        ModelKind::Cat { .. } => {
            if k_max > N_MAX_LIMIT {
                return Err(ModelError::Enumeration(EnumError::NMaxOutOfRange { n_max: k_max }));
            }
            let ai = model.cat_matrix().unwrap();
            // Fix(A^n) = |det(A^n - I)|; primitive counts by Moebius inversion.
            let mut fix: Vec<i128> = Vec::with_capacity(k_max);
            for n in 1..=k_max {
                fix.push(imat_pow_checked(&ai, n)?.sub_identity().det().abs());
            }
            let mut primitive = vec![0i128; k_max + 1];
            for n in 1..=k_max {
                let mut acc: i128 = 0;
                for d in divisors(n as u64) {
                    acc += moebius((n as u64) / d) as i128 * fix[d as usize - 1];
                }
                primitive[n] = acc / n as i128;
            }
            for n in 1..=k_max {
                let c: u128 = divisors(n as u64)
                    .into_iter()
                    .map(|d| primitive[d as usize] as u128)
                    .sum();
                per_period.push(c);
            }
        }
        ModelKind::DegenerateDrift => {
            return Err(ModelError::EnumerationUnsupported {
                model: model.name.clone(),
                reason: "orbit counts are not defined for a continuum of cycles".into(),
            })
        }
    }
    let mut entries = Vec::with_capacity(k_max);
    let mut acc: u128 = 0;
    for (k, c) in per_period.iter().enumerate() {
        acc += c;
        entries.push(((k + 1) as f64 * roof, acc));
    }
    let fitted_rate = fit_growth_rate(&entries);
    Ok(OrbitCountTable { model: model.name.clone(), entries, fitted_rate })
}

fn fit_growth_rate(entries: &[(f64, u128)]) -> f64 {
    let usable: Vec<(f64, f64)> = entries
        .iter()
        .filter(|(_, n)| *n >= 1)
        .map(|(t, n)| (*t, (*n as f64).ln() + t.ln()))
        .collect();
    if usable.len() < 2 {
        return f64::NAN;
    }
    let start = usable.len() - (usable.len() / 3).max(2);
    let window = &usable[start..];
    let m = window.len() as f64;
    let sx: f64 = window.iter().map(|(t, _)| t).sum();
    let sy: f64 = window.iter().map(|(_, y)| y).sum();
    let sxx: f64 = window.iter().map(|(t, _)| t * t).sum();
    let sxy: f64 = window.iter().map(|(t, y)| t * y).sum();
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{basic_example, cat_suspension, horseshoe_suspension};

    const CAT_A: [[i64; 2]; 2] = [[2, 1], [1, 1]];

    #[test]
    fn lyndon_words_small_cases() {
        assert_eq!(lyndon_words(1).unwrap(), vec!["0", "1"]);
        let w3 = lyndon_words(3).unwrap();
        assert_eq!(w3, vec!["0", "001", "01", "011", "1"], "lexicographic order");
        let mut sorted = w3.clone();
        sorted.sort();
        assert_eq!(w3, sorted);
        assert!(matches!(lyndon_words(0), Err(EnumError::NMaxOutOfRange { .. })));
        assert!(matches!(lyndon_words(31), Err(EnumError::NMaxOutOfRange { .. })));
    }

    #[test]
    fn necklace_formula_matches_frozen_table() {
        let expected: [u64; 20] = [
            2, 1, 2, 3, 6, 9, 18, 30, 56, 99, 186, 335, 630, 1161, 2182, 4080, 7710, 14532,
            27594, 52377,
        ];
        for (i, want) in expected.iter().enumerate() {
            assert_eq!(necklace_count(i + 1), *want, "length {}", i + 1);
        }
        // spec-level arithmetic sanity: (2^6 - 2^3 - 2^2 + 2)/6 = 9
        assert_eq!(necklace_count(6), (64 - 8 - 4 + 2) / 6);
    }

    #[test]
    fn lyndon_cycles_order_and_matrices() {
        let cycles = lyndon_cycles(3, 3.0, 0.25).unwrap();
        let labels: Vec<&str> = cycles.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, vec!["0", "1", "01", "001", "011"], "(length, lex) order");
        let p01 = &cycles[2].primitive_poincare;
        assert!((p01.get(0, 0) - 1.0 / 9.0).abs() < 1e-16);
        assert!((p01.get(1, 1) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn cat_fixed_point_counts_match_determinants() {
        assert_eq!(cat_fixed_points(CAT_A, 1).unwrap().len(), 1);
        assert_eq!(cat_fixed_points(CAT_A, 2).unwrap().len(), 5);
        assert_eq!(cat_fixed_points(CAT_A, 3).unwrap().len(), 16);
        // tr A^n - 2 for n <= 8
        let fix: [usize; 8] = [1, 5, 16, 45, 121, 320, 841, 2205];
        for (n, want) in fix.iter().enumerate() {
            let pts = cat_fixed_points(CAT_A, n + 1).unwrap();
            assert_eq!(pts.len(), *want, "Fix(A^{})", n + 1);
            for p in &pts {
                assert!(p.x >= Ratio::new(0, 1) && p.x < Ratio::new(1, 1));
                assert!(p.y >= Ratio::new(0, 1) && p.y < Ratio::new(1, 1));
                assert_eq!(p.apply_n(&IMat2::new([[2, 1], [1, 1]]), n + 1), *p,
                    "every returned point is exactly fixed by A^n");
            }
        }
    }

    #[test]
    fn singular_system_is_rejected() {
        assert!(matches!(
            cat_fixed_points([[1, 0], [0, 1]], 2),
            Err(EnumError::SingularFixedPointSystem { n: 2 })
        ));
    }

    #[test]
    fn grouping_into_primitive_cycles() {
        let a = IMat2::new([[2, 1], [1, 1]]);
        let n3 = group_into_cycles(&cat_fixed_points(CAT_A, 3).unwrap(), &a, 3).unwrap();
        assert_eq!(n3.len(), 5, "(16 - 1)/3 primitive 3-cycles");
        let n2 = group_into_cycles(&cat_fixed_points(CAT_A, 2).unwrap(), &a, 2).unwrap();
        assert_eq!(n2.len(), 2, "(5 - 1)/2 primitive 2-cycles");
        let n1 = group_into_cycles(&cat_fixed_points(CAT_A, 1).unwrap(), &a, 1).unwrap();
        assert_eq!(n1.len(), 1, "only the origin");
        assert_eq!(n1[0].label, "0,0");
        // a non-periodic point must be detected
        let bogus = TorusPoint::new(Ratio::new(1, 3), Ratio::new(0, 1));
        assert!(matches!(
            group_into_cycles(&[bogus], &a, 1),
            Err(EnumError::NotPeriodic { .. })
        ));
    }

    #[test]
    fn cycle_count_period_identity() {
        // sum over d | n of d * (#primitive d-cycles) = #Fix(A^n)
        let cycles = cat_primitive_cycles(CAT_A, 10).unwrap();
        let mut per_len = vec![0i128; 11];
        for c in &cycles {
            per_len[c.primitive_period.round() as usize] += 1;
        }
        let frozen_primitives: [i128; 10] = [1, 2, 5, 10, 24, 50, 120, 270, 640, 1500];
        for n in 1..=10usize {
            assert_eq!(per_len[n], frozen_primitives[n - 1], "primitive count at n = {n}");
            let fix: i128 = divisors(n as u64)
                .into_iter()
                .map(|d| d as i128 * per_len[d as usize])
                .sum();
            let a = IMat2::new([[2, 1], [1, 1]]);
            assert_eq!(fix, a.pow(n as u32).sub_identity().det().abs());
        }
    }

    #[test]
    fn poincare_of_cycle_matches_enumerators() {
        let basic = basic_example();
        let c = &basic.primitive_cycles(7.0).unwrap()[0];
        assert_eq!(poincare_of_cycle(&basic, c), c.primitive_poincare.clone());

        let cat = cat_suspension(CAT_A).unwrap();
        for c in cat.primitive_cycles(4.0).unwrap() {
            assert_eq!(poincare_of_cycle(&cat, &c), c.primitive_poincare);
        }
        // n = 1: (A^{-1})^T = [[1, -1], [-1, 2]]
        let c1 = &cat.primitive_cycles(1.0).unwrap()[0];
        let p = poincare_of_cycle(&cat, c1);
        assert_eq!(
            (p.get(0, 0), p.get(0, 1), p.get(1, 0), p.get(1, 1)),
            (1.0, -1.0, -1.0, 2.0)
        );

        let hs = horseshoe_suspension(3.0, 0.25).unwrap();
        for c in hs.primitive_cycles(5.0).unwrap() {
            assert_eq!(poincare_of_cycle(&hs, &c), c.primitive_poincare);
        }
    }

    #[test]
    fn conjugate_cycle_points_share_characteristic_polynomials() {
        // cyclic rotations of a product of per-step differentials
        let b1 = SqMatrix::new(2, vec![3.0, 1.0, 0.5, 0.25]);
        let b2 = SqMatrix::new(2, vec![1.5, -0.5, 2.0, 0.75]);
        let b3 = SqMatrix::new(2, vec![0.4, 1.2, -0.3, 2.5]);
        let p123 = b3.mul(&b2).mul(&b1);
        let p231 = b1.mul(&b3).mul(&b2);
        let p312 = b2.mul(&b1).mul(&b3);
        let e = p123.elementary_symmetric();
        for other in [p231, p312] {
            let eo = other.elementary_symmetric();
            for (a, b) in e.iter().zip(&eo) {
                assert!(
                    (a - b).abs() < 1e-12 * (1.0 + a.abs()),
                    "cyclic rotation changes the char poly: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn orbit_count_small_tables() {
        let hs = horseshoe_suspension(3.0, 0.25).unwrap();
        let t = count_orbits(&hs, 3.0).unwrap();
        assert_eq!(t.entries.last().unwrap().1, 9, "N_horseshoe(3)");
        let frozen_hs: [u128; 8] = [2, 5, 9, 15, 23, 37, 57, 93];
        let t8 = count_orbits(&hs, 8.0).unwrap();
        for (entry, want) in t8.entries.iter().zip(frozen_hs) {
            assert_eq!(entry.1, want);
        }

        let cat = cat_suspension(CAT_A).unwrap();
        let t = count_orbits(&cat, 2.0).unwrap();
        assert_eq!(t.entries.last().unwrap().1, 4, "N_cat(2): fixed point twice + two 2-cycles");
        let frozen_cat: [u128; 8] = [1, 4, 10, 23, 48, 106, 227, 510];
        let t8 = count_orbits(&cat, 8.0).unwrap();
        for (entry, want) in t8.entries.iter().zip(frozen_cat) {
            assert_eq!(entry.1, want);
        }

        let basic = basic_example();
        let t = count_orbits(&basic, 13.0).unwrap();
        assert_eq!(t.entries.len(), 2);
        assert_eq!(t.entries.last().unwrap().1, 2, "single cycle, two repetitions");
    }

    #[test]
    fn counts_are_nondecreasing() {
        let hs = horseshoe_suspension(3.0, 0.25).unwrap();
        let t = count_orbits(&hs, 14.0).unwrap();
        for pair in t.entries.windows(2) {
            assert!(pair[1].1 >= pair[0].1);
        }
    }
}
