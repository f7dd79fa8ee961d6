//! Pole location by grid seeding + Newton refinement on the reciprocal,
//! residue extraction by contour quadrature, and verification against the
//! model resonance oracles (residue = rank at every pole).

use num_complex::Complex64;
use thiserror::Error;

use crate::models::{ModelDescriptor, ModelError, ModelKind, OraclePole, Region};
use crate::traces::{
    continue_basic_unchecked, continue_cat_unchecked, continue_horseshoe_unchecked,
    HORSESHOE_J_DEFAULT,
};

pub const RESIDUE_RADIUS_DEFAULT: f64 = 0.1;
pub const RESIDUE_NODES_DEFAULT: usize = 64;

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITERS: usize = 50;
const DEDUP_DIST: f64 = 1e-6;
const SEED_RESIDUE_FLOOR: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ResonanceError {
    #[error("grid {nx}x{ny} too coarse, need at least 8x8")]
    GridTooCoarse { nx: usize, ny: usize },
    #[error(
        "residue quadrature did not stabilize at {lambda}: \
         node-doubling discrepancy {discrepancy:e} (contour likely near a singularity)"
    )]
    ResidueUnstable { lambda: Complex64, discrepancy: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("verification failed for model '{model}': {detail}")]
    VerificationFailed {
        model: String,
        detail: String,
        report: Box<VerificationReport>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    GridNewton,
    LatticeOracle,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::GridNewton => write!(f, "grid+newton"),
            Method::LatticeOracle => write!(f, "lattice-oracle"),
        }
    }
}

/// One located pole with its residue and error estimates.
#[derive(Clone, Debug)]
pub struct ResonanceReport {
    pub position: Complex64,
    pub residue: Complex64,
    pub method: Method,
    /// Estimated distance to the true pole (size of the final Newton step).
    pub position_error: f64,
    /// Node-doubling discrepancy of the residue quadrature.
    pub residue_error: f64,
    /// Filled by verify_against_oracle: (oracle position, oracle rank).
    pub matched_oracle: Option<(Complex64, u32)>,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub model: String,
    /// Located poles matched to oracle poles, sorted by (Re, Im).
    pub matches: Vec<ResonanceReport>,
    /// Oracle poles with no located partner.
    pub missed: Vec<OraclePole>,
    /// Located poles with no oracle partner.
    pub extra: Vec<ResonanceReport>,
    pub max_position_error: f64,
    /// max over matches of |residue - rank|
    pub max_residue_error: f64,
    pub passed: bool,
}

/// (1/2 pi i) times the contour integral of f over the circle
/// |z - center| = radius, by the trapezoid rule (exponentially convergent
/// for f analytic on the contour). Equals the sum of residues enclosed.
pub fn contour_residue_sum<F>(f: F, center: Complex64, radius: f64, nodes: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(radius > 0.0 && nodes >= 4, "degenerate contour");
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let dir = Complex64::new(theta.cos(), theta.sin());
        acc += f(center + radius * dir) * dir;
    }
    acc * radius / nodes as f64
}

fn residue_with_error<F>(
    f: F,
    lambda0: Complex64,
    radius: f64,
    nodes: usize,
) -> (Complex64, f64)
where
    F: Fn(Complex64) -> Complex64,
{
    let coarse = contour_residue_sum(&f, lambda0, radius, nodes);
    let fine = contour_residue_sum(&f, lambda0, radius, 2 * nodes);
    (fine, (fine - coarse).norm())
}

/// Residue of f at lambda0 by Cauchy quadrature on a circle of the given
/// radius. The caller must keep other poles at distance > 2 * radius.
/// Errors when doubling the node count moves the answer by more than 1e-6.
pub fn residue_at<F>(
    f: F,
    lambda0: Complex64,
    radius: f64,
    nodes: usize,
) -> Result<Complex64, ResonanceError>
where
    F: Fn(Complex64) -> Complex64,
{
    let (value, discrepancy) = residue_with_error(f, lambda0, radius, nodes);
    // written with a negated <= so a NaN quadrature (contour through the
    // pole itself) also lands in the error branch
    if !(discrepancy <= 1e-6) {
        return Err(ResonanceError::ResidueUnstable { lambda: lambda0, discrepancy });
    }
    Ok(value)
}

/// Exact continuation of the model's flat trace as a total function,
/// suitable for pole searching arbitrarily close to the poles.
pub fn model_continuation(
    model: &ModelDescriptor,
) -> Result<Box<dyn Fn(Complex64) -> Complex64 + Send + Sync>, ResonanceError> {
    match model.kind {
        ModelKind::Basic => Ok(Box::new(continue_basic_unchecked)),
        ModelKind::Cat { .. } => Ok(Box::new(continue_cat_unchecked)),
        ModelKind::Horseshoe { lambda_u, lambda_s } => Ok(Box::new(move |z| {
            continue_horseshoe_unchecked(z, HORSESHOE_J_DEFAULT, lambda_u, lambda_s)
        })),
        ModelKind::DegenerateDrift => Err(ResonanceError::Model(ModelError::NoOracle {
            model: model.name.clone(),
            what: "meromorphic continuation".into(),
        })),
    }
}

struct GridEval {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    /// cell-center sample points, row-major (j * nx + i)
    points: Vec<Complex64>,
    values: Vec<Complex64>,
    /// |f|, with non-finite samples mapped to +infinity
    mags: Vec<f64>,
}

fn eval_grid<F>(f: &F, region: &Region, nx: usize, ny: usize) -> GridEval
where
    F: Fn(Complex64) -> Complex64,
{
    let dx = (region.re_max - region.re_min) / nx as f64;
    let dy = (region.im_max - region.im_min) / ny as f64;
    let mut points = Vec::with_capacity(nx * ny);
    let mut values = Vec::with_capacity(nx * ny);
    let mut mags = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = region.im_min + (j as f64 + 0.5) * dy;
        for i in 0..nx {
            let x = region.re_min + (i as f64 + 0.5) * dx;
            let z = Complex64::new(x, y);
            let v = f(z);
            let m = v.norm();
            points.push(z);
            values.push(v);
            mags.push(if m.is_finite() { m } else { f64::INFINITY });
        }
    }
    GridEval { nx, ny, dx, dy, points, values, mags }
}

/// Seeds from two complementary detectors:
/// 1. strict 8-neighbor local maxima of |f| above 10x the grid median, and
/// 2. discrete Cauchy windows: the trapezoid contour integral around every
///    2x2-cell square whose normalized value exceeds 0.1 in magnitude.
/// The maxima rule alone misses poles whose peak falls between sample
/// points; the contour windows see the residue no matter where the pole
/// sits inside them, so the union is taken.
fn seed_indices(g: &GridEval) -> Vec<usize> {
    let mut finite: Vec<f64> = g.mags.iter().copied().filter(|m| m.is_finite()).collect();
    finite.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if finite.is_empty() { 0.0 } else { finite[finite.len() / 2] };
    let threshold = 10.0 * median;

    let idx = |i: usize, j: usize| j * g.nx + i;
    let mut seeds = std::collections::BTreeSet::new();

    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let c = g.mags[idx(i, j)];
            if c <= threshold {
                continue;
            }
            let mut strict_max = true;
            for (di, dj) in [(-1i64, -1i64), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
            {
                let n = g.mags[idx((i as i64 + di) as usize, (j as i64 + dj) as usize)];
                if !(c > n) {
                    strict_max = false;
                    break;
                }
            }
            if strict_max {
                seeds.insert(idx(i, j));
            }
        }
    }

    // perimeter of the 3x3 point block centered at (i, j), counterclockwise
    const RING: [(i64, i64); 8] =
        [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let mut ok = true;
            let mut ring_pts = [Complex64::new(0.0, 0.0); 8];
            let mut ring_vals = [Complex64::new(0.0, 0.0); 8];
            for (s, (di, dj)) in RING.iter().enumerate() {
                let k = idx((i as i64 + di) as usize, (j as i64 + dj) as usize);
                if !g.mags[k].is_finite() {
                    ok = false;
                    break;
                }
                ring_pts[s] = g.points[k];
                ring_vals[s] = g.values[k];
            }
            if !ok {
                continue;
            }
            let mut integral = Complex64::new(0.0, 0.0);
            for s in 0..8 {
                let t = (s + 1) % 8;
                integral +=
                    0.5 * (ring_vals[s] + ring_vals[t]) * (ring_pts[t] - ring_pts[s]);
            }
            let winding = integral / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
            if winding.norm() > SEED_RESIDUE_FLOOR {
                seeds.insert(idx(i, j));
            }
        }
    }
    seeds.into_iter().collect()
}

/// Newton iteration on g = 1/f from the given seed; a simple pole of f is a
/// simple zero of g. Returns (position, |final step|) on convergence.
fn newton_refine<F>(
    f: &F,
    seed: Complex64,
    region: &Region,
    dx: f64,
    dy: f64,
) -> Option<(Complex64, f64)>
where
    F: Fn(Complex64) -> Complex64,
{
    let g = |z: Complex64| f(z).inv();
    let mut z = seed;
    if !g(z).is_finite() {
        // seed sits exactly on the pole; nudge into the cell interior
        z += Complex64::new(0.25 * dx, 0.25 * dy);
    }
    let h = 1e-6;
    let mut last_step = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITERS {
        let gz = g(z);
        if !gz.is_finite() {
            return None;
        }
        if gz.norm() <= NEWTON_TOL {
            // distance to the zero, first order
            let gp = (g(z + h) - g(z - h)) / (2.0 * h);
            let err = if gp.norm() > 0.0 { (gz / gp).norm() } else { last_step };
            return Some((z, err.min(last_step)));
        }
        let gp = (g(z + h) - g(z - h)) / (2.0 * h);
        if !gp.is_finite() || gp.norm() < 1e-300 {
            return None;
        }
        let step = gz / gp;
        z -= step;
        last_step = step.norm();
        if !region.contains(z) {
            return None;
        }
        if (z.re - seed.re).abs() > 2.0 * dx || (z.im - seed.im).abs() > 2.0 * dy {
            return None;
        }
    }
    None
}

/// Locate poles of f in the region: grid-sample |f| on nx x ny cell centers,
/// seed from local maxima and discrete Cauchy windows, refine each seed by
/// Newton on 1/f (tolerance 1e-10, max 50 iterations, rejecting runs that
/// leave the region or drift more than 2 cells), deduplicate within 1e-6,
/// then attach residues by contour quadrature. Reports are sorted by
/// (Re, Im). Newton divergence on every seed yields an empty list, not an
/// error. A residue whose node-doubling discrepancy exceeds 1e-6 is still
/// reported, with the discrepancy in residue_error.
pub fn locate_resonances<F>(
    f: F,
    region: &Region,
    grid: (usize, usize),
) -> Result<Vec<ResonanceReport>, ResonanceError>
where
    F: Fn(Complex64) -> Complex64,
{
    let (nx, ny) = grid;
    if nx < 8 || ny < 8 {
        return Err(ResonanceError::GridTooCoarse { nx, ny });
    }
    let g = eval_grid(&f, region, nx, ny);
    let seeds = seed_indices(&g);

    let mut found: Vec<(Complex64, f64)> = Vec::new();
    for s in seeds {
        if let Some((z, perr)) = newton_refine(&f, g.points[s], region, g.dx, g.dy) {
            found.push((z, perr));
        }
    }
    found.sort_by(|a, b| (a.0.re, a.0.im).partial_cmp(&(b.0.re, b.0.im)).unwrap());
    let mut unique: Vec<(Complex64, f64)> = Vec::new();
    for (z, perr) in found {
        match unique.iter_mut().find(|(u, _)| (*u - z).norm() < DEDUP_DIST) {
            Some((_, uerr)) => *uerr = uerr.min(perr),
            None => unique.push((z, perr)),
        }
    }

    let mut min_gap = f64::INFINITY;
    for a in 0..unique.len() {
        for b in a + 1..unique.len() {
            min_gap = min_gap.min((unique[a].0 - unique[b].0).norm());
        }
    }
    let radius = RESIDUE_RADIUS_DEFAULT.min(0.45 * min_gap);

    let mut reports = Vec::with_capacity(unique.len());
    for (z, perr) in unique {
        let (residue, residue_error) = residue_with_error(&f, z, radius, RESIDUE_NODES_DEFAULT);
        reports.push(ResonanceReport {
            position: z,
            residue,
            method: Method::GridNewton,
            position_error: perr,
            residue_error,
            matched_oracle: None,
        });
    }
    Ok(reports)
}

fn default_grid(region: &Region) -> (usize, usize) {
    let nx = ((region.re_max - region.re_min) * 20.0).ceil() as usize;
    let ny = ((region.im_max - region.im_min) * 20.0).ceil() as usize;
    (nx.max(8), ny.max(8))
}

/// Run locate_resonances on the model's exact continuation and check the
/// result against the model's resonance oracle: every oracle pole must be
/// found within 1e-8 and carry a residue within 1e-6 of its rank, with no
/// extra poles. Failures come back as VerificationFailed with the offending
/// poles listed.
pub fn verify_against_oracle(
    model: &ModelDescriptor,
    region: &Region,
) -> Result<VerificationReport, ResonanceError> {
    let oracle = model.resonance_oracle(region)?;
    let f = model_continuation(model)?;
    let grid = default_grid(region);
    let located = locate_resonances(&f, region, grid)?;

    // greedy bipartite matching by nearest distance
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (li, l) in located.iter().enumerate() {
        for (oi, o) in oracle.iter().enumerate() {
            let d = (l.position - o.location).norm();
            if d < 1e-3 {
                pairs.push((d, li, oi));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut l_matched = vec![usize::MAX; located.len()];
    let mut o_matched = vec![usize::MAX; oracle.len()];
    for (_, li, oi) in pairs {
        if l_matched[li] == usize::MAX && o_matched[oi] == usize::MAX {
            l_matched[li] = oi;
            o_matched[oi] = li;
        }
    }

    let mut matches = Vec::new();
    let mut extra = Vec::new();
    let mut max_position_error = 0.0f64;
    let mut max_residue_error = 0.0f64;
    let mut offenders: Vec<String> = Vec::new();
    for (li, report) in located.iter().enumerate() {
        if l_matched[li] == usize::MAX {
            offenders.push(format!("extra pole located at {}", report.position));
            extra.push(report.clone());
            continue;
        }
        let o = &oracle[l_matched[li]];
        let mut r = report.clone();
        r.matched_oracle = Some((o.location, o.rank));
        let pos_err = (r.position - o.location).norm();
        let res_err = (r.residue - Complex64::new(o.rank as f64, 0.0)).norm();
        max_position_error = max_position_error.max(pos_err);
        max_residue_error = max_residue_error.max(res_err);
        if pos_err >= 1e-8 {
            offenders.push(format!(
                "pole at {} off oracle {} by {pos_err:e}",
                r.position, o.location
            ));
        }
        if res_err >= 1e-6 {
            offenders.push(format!(
                "residue {} at {} off rank {} by {res_err:e}",
                r.residue, r.position, o.rank
            ));
        }
        matches.push(r);
    }
    let missed: Vec<OraclePole> = oracle
        .iter()
        .enumerate()
        .filter(|(oi, _)| o_matched[*oi] == usize::MAX)
        .map(|(_, o)| {
            offenders.push(format!("oracle pole {} (rank {}) not located", o.location, o.rank));
            o.clone()
        })
        .collect();

    let passed = offenders.is_empty();
    let report = VerificationReport {
        model: model.name.clone(),
        matches,
        missed,
        extra,
        max_position_error,
        max_residue_error,
        passed,
    };
    if passed {
        Ok(report)
    } else {
        Err(ResonanceError::VerificationFailed {
            model: model.name.clone(),
            detail: offenders.join("; "),
            report: Box::new(report),
        })
    }
}
