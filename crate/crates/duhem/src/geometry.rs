//! Phase-plot geometry of closed orbits: self-intersections, lobe
//! decomposition with signed areas, loop classification, and the
//! constructive butterfly search.
//!
//! All geometry here works on the sampled polylines of a [`ClosedOrbit`].
//! Crossings between the ascending and descending branches are transversal
//! by construction for the models of interest; near-parallel segment pairs
//! are skipped with a warning rather than guessed at.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accommodation::ClosedOrbit;
use crate::integrator::{extend_to_crossing, sweep, BranchTrajectory, Crossing, Direction};
use crate::models::{Branch, CurveSpec, DuhemModel};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("orbit is degenerate (fewer than 2 samples per branch)")]
    DegenerateOrbit,
    #[error("lobe decomposition failed to close: {0}")]
    InconsistentTopology(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("epsilon underflowed below {floor} before the middle crossing appeared")]
    EpsilonExhausted { floor: f64 },
}

/// A transversal crossing between the ascending and descending branch
/// polylines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionPoint {
    pub upsilon: f64,
    pub gamma: f64,
    /// Indices of the crossing segments in each polyline.
    pub ascending_segment: usize,
    pub descending_segment: usize,
    /// Position of the crossing along each segment, in `[0, 1]`.
    pub params: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LobeOrientation {
    Clockwise,
    CounterClockwise,
}

impl LobeOrientation {
    pub fn flipped(self) -> Self {
        match self {
            LobeOrientation::Clockwise => LobeOrientation::CounterClockwise,
            LobeOrientation::CounterClockwise => LobeOrientation::Clockwise,
        }
    }
}

/// One closed sub-loop of the orbit, with its shoelace signed area
/// (counterclockwise positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub vertices: Vec<(f64, f64)>,
    pub signed_area: f64,
    pub orientation: LobeOrientation,
}

impl Lobe {
    pub fn centroid_upsilon(&self) -> f64 {
        self.vertices.iter().map(|v| v.0).sum::<f64>() / self.vertices.len() as f64
    }
}

/// Shape verdict for a closed orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopClass {
    SimpleClockwise,
    SimpleCounterClockwise,
    Butterfly,
    MultiLoop,
    Degenerate,
}

/// The abscissae produced by the constructive butterfly proof, in the order
/// they are derived. `upsilon_min`, `upsilon_x`, `upsilon_max` are the three
/// intersections of the two branch solutions; the invariant ordering is
/// `upsilon_min < upsilon_a_plus < upsilon_x < upsilon_a_minus < upsilon_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ButterflyConstruction {
    pub upsilon_a_plus: f64,
    pub upsilon_b_plus: f64,
    pub upsilon_c_plus: f64,
    pub epsilon: f64,
    pub upsilon_a_minus: f64,
    pub upsilon_x: f64,
    pub upsilon_min: f64,
    pub upsilon_max: f64,
    /// Largest gap between the two solutions at the three intersections.
    pub crossing_residual: f64,
}

/// Cross-product magnitude below which a segment pair counts as parallel.
const PARALLEL_DENOM_TOL: f64 = 1e-12;
/// Crossings closer than this in both coordinates collapse into one.
const DEDUP_TOL: f64 = 1e-6;

fn segment_crossing(
    p0: (f64, f64),
    p1: (f64, f64),
    q0: (f64, f64),
    q1: (f64, f64),
) -> Result<Option<(f64, f64, (f64, f64))>, ()> {
    let d1 = (p1.0 - p0.0, p1.1 - p0.1);
    let d2 = (q1.0 - q0.0, q1.1 - q0.1);
    let denom = d1.0 * d2.1 - d1.1 * d2.0;
    if denom.abs() <= PARALLEL_DENOM_TOL {
        // near-parallel: report so the caller can warn if the pair overlaps
        return Err(());
    }
    let w = (q0.0 - p0.0, q0.1 - p0.1);
    let t = (w.0 * d2.1 - w.1 * d2.0) / denom;
    let s = (w.0 * d1.1 - w.1 * d1.0) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&s) {
        let point = (p0.0 + t * d1.0, p0.1 + t * d1.1);
        Ok(Some((t, s, point)))
    } else {
        Ok(None)
    }
}

fn ranges_overlap(a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64) -> bool {
    a_lo <= b_hi && b_lo <= a_hi
}

/// All transversal crossings between the ascending and descending polylines
/// of `orbit`, sorted by input value. The shared closure points at the drive
/// extrema are not self-intersections and are excluded: any crossing within
/// `tol` (in input units) of either extreme is dropped. Crossings within
/// 1e-6 of each other in both coordinates are deduplicated.
pub fn self_intersections(
    orbit: &ClosedOrbit,
    tol: f64,
) -> Result<Vec<IntersectionPoint>, GeometryError> {
    let asc = &orbit.ascending.samples;
    let desc = &orbit.descending.samples;
    if asc.len() < 2 || desc.len() < 2 {
        return Err(GeometryError::DegenerateOrbit);
    }
    let u_min = orbit.upsilon_min();
    let u_max = orbit.upsilon_max();

    let mut found: Vec<IntersectionPoint> = Vec::new();
    let mut skipped_parallel = 0usize;
    for i in 0..asc.len() - 1 {
        let p0 = asc[i];
        let p1 = asc[i + 1];
        let (lo_u, hi_u) = (p0.0.min(p1.0), p0.0.max(p1.0));
        // descending upsilon values decrease with index; only the segments
        // whose upsilon range overlaps [lo_u, hi_u] can cross this one
        let p = desc.partition_point(|&(u, _)| u > hi_u);
        let q = desc.partition_point(|&(u, _)| u >= lo_u);
        let j_start = p.saturating_sub(1);
        let j_end = q.min(desc.len() - 1);
        for j in j_start..j_end {
            let q0 = desc[j];
            let q1 = desc[j + 1];
            match segment_crossing(p0, p1, q0, q1) {
                Ok(Some((t, s, (u, g)))) => {
                    if (u - u_min).abs() <= tol || (u - u_max).abs() <= tol {
                        continue; // endpoint closure, not a self-intersection
                    }
                    found.push(IntersectionPoint {
                        upsilon: u,
                        gamma: g,
                        ascending_segment: i,
                        descending_segment: j,
                        params: (t, s),
                    });
                }
                Ok(None) => {}
                Err(()) => {
                    let g_overlap = ranges_overlap(
                        p0.1.min(p1.1),
                        p0.1.max(p1.1),
                        q0.1.min(q1.1),
                        q0.1.max(q1.1),
                    );
                    if g_overlap {
                        skipped_parallel += 1;
                    }
                }
            }
        }
    }
    if skipped_parallel > 0 {
        log::warn!(
            "skipped {skipped_parallel} near-parallel overlapping segment pair(s); \
             possible tangential contact"
        );
    }

    found.sort_by(|a, b| {
        a.upsilon
            .partial_cmp(&b.upsilon)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut deduped: Vec<IntersectionPoint> = Vec::with_capacity(found.len());
    for x in found {
        let duplicate = deduped.iter().any(|y| {
            (x.upsilon - y.upsilon).abs() <= DEDUP_TOL && (x.gamma - y.gamma).abs() <= DEDUP_TOL
        });
        if !duplicate {
            deduped.push(x);
        }
    }
    Ok(deduped)
}

#[derive(Clone, Copy, Debug)]
enum CurveVertex {
    Point(f64, f64),
    Crossing { id: usize, at: (f64, f64) },
}

impl CurveVertex {
    fn coords(&self) -> (f64, f64) {
        match *self {
            CurveVertex::Point(u, g) => (u, g),
            CurveVertex::Crossing { at, .. } => at,
        }
    }
}

fn shoelace(vertices: &[(f64, f64)]) -> f64 {
    let n = vertices.len();
    let mut twice_area = 0.0;
    for i in 0..n {
        let (x0, y0) = vertices[i];
        let (x1, y1) = vertices[(i + 1) % n];
        twice_area += x0 * y1 - x1 * y0;
    }
    0.5 * twice_area
}

fn chain_with_crossings(
    samples: &[(f64, f64)],
    xs: &[IntersectionPoint],
    segment_of: impl Fn(&IntersectionPoint) -> usize,
    param_of: impl Fn(&IntersectionPoint) -> f64,
) -> Vec<CurveVertex> {
    let mut per_segment: Vec<Vec<(f64, usize)>> = vec![Vec::new(); samples.len().saturating_sub(1)];
    for (id, x) in xs.iter().enumerate() {
        per_segment[segment_of(x)].push((param_of(x), id));
    }
    for bucket in &mut per_segment {
        bucket.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    }
    let mut chain = Vec::with_capacity(samples.len() + xs.len());
    for (i, &point) in samples.iter().enumerate() {
        chain.push(CurveVertex::Point(point.0, point.1));
        if i < per_segment.len() {
            for &(_, id) in &per_segment[i] {
                chain.push(CurveVertex::Crossing {
                    id,
                    at: (xs[id].upsilon, xs[id].gamma),
                });
            }
        }
    }
    chain
}

fn lobe_from(vertices: Vec<(f64, f64)>) -> Lobe {
    let signed_area = shoelace(&vertices);
    let orientation = if signed_area >= 0.0 {
        LobeOrientation::CounterClockwise
    } else {
        LobeOrientation::Clockwise
    };
    Lobe {
        vertices,
        signed_area,
        orientation,
    }
}

/// Splits the closed orbit curve at the given self-intersections into
/// edge-disjoint closed sub-loops. The signed areas of the returned lobes
/// sum to the signed area of the whole closed curve (within rounding).
pub fn decompose_lobes(
    orbit: &ClosedOrbit,
    xs: &[IntersectionPoint],
) -> Result<Vec<Lobe>, GeometryError> {
    let asc = &orbit.ascending.samples;
    let desc = &orbit.descending.samples;
    if asc.len() < 2 || desc.len() < 2 {
        return Err(GeometryError::DegenerateOrbit);
    }

    let asc_chain = chain_with_crossings(asc, xs, |x| x.ascending_segment, |x| x.params.0);
    let desc_chain = chain_with_crossings(desc, xs, |x| x.descending_segment, |x| x.params.1);
    // the descending chain starts where the ascending one ends and ends
    // where it starts; drop both duplicated raw endpoints when closing
    let mut closed = asc_chain;
    closed.extend_from_slice(&desc_chain[1..desc_chain.len() - 1]);

    let mut seen = vec![0u8; xs.len()];
    for v in &closed {
        if let CurveVertex::Crossing { id, .. } = v {
            seen[*id] += 1;
        }
    }
    if let Some(id) = seen.iter().position(|&c| c != 2) {
        return Err(GeometryError::InconsistentTopology(format!(
            "crossing {id} appears {} time(s) on the curve, expected 2",
            seen[id]
        )));
    }

    // walk the curve keeping an open path; when a crossing id repeats, the
    // piece since its first visit closes into a lobe
    let mut lobes: Vec<Lobe> = Vec::new();
    let mut path: Vec<CurveVertex> = Vec::new();
    let mut open: Vec<(usize, usize)> = Vec::new(); // (crossing id, index in path)
    for v in closed {
        match v {
            CurveVertex::Point(..) => path.push(v),
            CurveVertex::Crossing { id, .. } => {
                if let Some(pos) = open.iter().position(|&(open_id, _)| open_id == id) {
                    let (_, start) = open.remove(pos);
                    let vertices: Vec<(f64, f64)> =
                        path[start..].iter().map(CurveVertex::coords).collect();
                    lobes.push(lobe_from(vertices));
                    path.truncate(start + 1);
                    // crossings opened inside the extracted piece are gone
                    open.retain(|&(_, at)| at <= start);
                } else {
                    path.push(v);
                    open.push((id, path.len() - 1));
                }
            }
        }
    }
    if !open.is_empty() {
        return Err(GeometryError::InconsistentTopology(format!(
            "{} crossing(s) never closed",
            open.len()
        )));
    }
    let outer: Vec<(f64, f64)> = path.iter().map(CurveVertex::coords).collect();
    lobes.push(lobe_from(outer));

    // consistency: splitting must conserve the total signed area
    let mut full: Vec<(f64, f64)> = asc.to_vec();
    full.extend_from_slice(&desc[1..desc.len() - 1]);
    let total = shoelace(&full);
    let sum: f64 = lobes.iter().map(|l| l.signed_area).sum();
    let gross: f64 = lobes.iter().map(|l| l.signed_area.abs()).sum();
    let scale = total.abs().max(gross).max(1e-12);
    if (sum - total).abs() > 1e-9 * scale {
        return Err(GeometryError::InconsistentTopology(format!(
            "lobe areas sum to {sum}, expected {total}"
        )));
    }
    Ok(lobes)
}

/// Classifies the orbit shape. "Degenerate" means the gross enclosed area
/// (sum of absolute lobe areas) is below `1e-9 * input span * output span`.
pub fn classify_loop(orbit: &ClosedOrbit) -> LoopClass {
    let asc = &orbit.ascending.samples;
    let desc = &orbit.descending.samples;
    if asc.len() < 2 || desc.len() < 2 {
        return LoopClass::Degenerate;
    }
    let all = asc.iter().chain(desc.iter());
    let (mut u_lo, mut u_hi, mut g_lo, mut g_hi) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(u, g) in all {
        u_lo = u_lo.min(u);
        u_hi = u_hi.max(u);
        g_lo = g_lo.min(g);
        g_hi = g_hi.max(g);
    }
    let u_span = u_hi - u_lo;
    let g_span = g_hi - g_lo;
    if u_span <= 0.0 || g_span <= 0.0 {
        return LoopClass::Degenerate;
    }
    let area_tol = 1e-9 * u_span * g_span;

    let xs = match self_intersections(orbit, 1e-6 * u_span) {
        Ok(xs) => xs,
        Err(_) => return LoopClass::Degenerate,
    };
    let lobes = match decompose_lobes(orbit, &xs) {
        Ok(lobes) => lobes,
        Err(_) => return LoopClass::Degenerate,
    };
    let gross: f64 = lobes.iter().map(|l| l.signed_area.abs()).sum();
    if gross <= area_tol {
        return LoopClass::Degenerate;
    }

    match xs.len() {
        0 => {
            let total: f64 = lobes.iter().map(|l| l.signed_area).sum();
            if total >= 0.0 {
                LoopClass::SimpleCounterClockwise
            } else {
                LoopClass::SimpleClockwise
            }
        }
        1 => {
            if lobes.len() == 2 && lobes[0].orientation != lobes[1].orientation {
                LoopClass::Butterfly
            } else {
                LoopClass::MultiLoop
            }
        }
        _ => LoopClass::MultiLoop,
    }
}

/// How far beyond the seed the level-curve crossing searches extend.
const SEARCH_SPAN: f64 = 50.0;
const EPSILON_FLOOR: f64 = 1e-9;
const SLOPE_TOL: f64 = 1e-12;
const SLOPE_CHECK_SAMPLES: usize = 512;

fn require_curve_chasing(model: &DuhemModel) -> Result<(&CurveSpec, &CurveSpec), GeometryError> {
    match model {
        DuhemModel::CurveChasing { c1, c2, .. } => Ok((c1, c2)),
        DuhemModel::BoucWen { .. } => Err(GeometryError::HypothesisViolated(
            "construction needs analytic level curves (curve-chasing model)".into(),
        )),
    }
}

fn check_slopes(c1: &CurveSpec, c2: &CurveSpec, lo: f64, hi: f64) -> Result<(), GeometryError> {
    for u in crate::uniform_grid(lo, hi, SLOPE_CHECK_SAMPLES) {
        if c1.derivative(u) < -SLOPE_TOL {
            return Err(GeometryError::HypothesisViolated(format!(
                "dc1/du = {} < 0 at upsilon = {u}",
                c1.derivative(u)
            )));
        }
        if c2.derivative(u) > SLOPE_TOL {
            return Err(GeometryError::HypothesisViolated(format!(
                "dc2/du = {} > 0 at upsilon = {u}",
                c2.derivative(u)
            )));
        }
    }
    Ok(())
}

/// Crossings of two upsilon-parameterized sampled curves on `[lo, hi]`,
/// located by scanning at step `h` and bisecting each sign change of the
/// interpolated difference.
fn curve_crossings(
    ya: &BranchTrajectory,
    yb: &BranchTrajectory,
    lo: f64,
    hi: f64,
    h: f64,
) -> Vec<(f64, f64)> {
    let diff = |u: f64| ya.value_at(u) - yb.value_at(u);
    let steps = ((hi - lo) / h).ceil().max(1.0) as usize;
    let du = (hi - lo) / steps as f64;
    let mut crossings = Vec::new();
    let mut u_prev = lo;
    let mut d_prev = diff(lo);
    for i in 1..=steps {
        let u = if i == steps { hi } else { lo + i as f64 * du };
        let d = diff(u);
        if d == 0.0 {
            crossings.push((u, ya.value_at(u)));
        } else if d_prev * d < 0.0 {
            let (mut a, mut b) = (u_prev, u);
            let mut d_a = d_prev;
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                let d_mid = diff(mid);
                if d_a * d_mid <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    d_a = d_mid;
                }
                if (b - a).abs() <= 1e-10 {
                    break;
                }
            }
            let u_star = 0.5 * (a + b);
            crossings.push((u_star, 0.5 * (ya.value_at(u_star) + yb.value_at(u_star))));
        }
        u_prev = u;
        d_prev = d;
    }
    crossings
}

fn merged_two_sided_sweep(
    model: &DuhemModel,
    branch: Branch,
    anchor_u: f64,
    anchor_g: f64,
    lo: f64,
    hi: f64,
    h: f64,
) -> Result<BranchTrajectory, GeometryError> {
    let err = |e| {
        GeometryError::HypothesisViolated(format!("solution left the finite range: {e}"))
    };
    let back = sweep(model, branch, anchor_u, lo, anchor_g, h).map_err(err)?;
    let fwd = sweep(model, branch, anchor_u, hi, anchor_g, h).map_err(err)?;
    let mut samples: Vec<(f64, f64)> = back.samples.iter().rev().copied().collect();
    samples.extend_from_slice(&fwd.samples[1..]);
    Ok(BranchTrajectory {
        branch,
        samples,
        step: fwd.step,
    })
}

/// Reproduces the constructive butterfly existence argument for a
/// curve-chasing model whose level curves have the right slope signs and
/// cross at some input beyond the seed:
///
/// 1. extend the rising solution through `(ua+, c1(ua+))` backward to its
///    crossing with `c2` (at `ub+`) and forward to the next one (at `uc+`);
/// 2. seed the falling solution just past it, at `ua- = uc+ + eps` on `c2`,
///    and extend it to its own crossing with `c1` (at `ub-`);
/// 3. intersect the two solutions: the middle crossing `ux` must land
///    strictly inside `(ua+, ua-)`, halving `eps` until it does; the outer
///    crossings are the loop's turning abscissae.
pub fn construct_butterfly(
    model: &DuhemModel,
    upsilon_a_plus: f64,
    epsilon_0: f64,
    h: f64,
) -> Result<ButterflyConstruction, GeometryError> {
    assert!(epsilon_0 > 0.0, "epsilon must start positive");
    let (c1, c2) = require_curve_chasing(model)?;

    // the curves must meet somewhere past the seed
    let mut upsilon_f = None;
    let scan = crate::uniform_grid(
        upsilon_a_plus,
        upsilon_a_plus + SEARCH_SPAN,
        (SEARCH_SPAN / h).ceil().max(8.0) as usize,
    );
    for w in scan.windows(2) {
        let d0 = c1.eval(w[0]) - c2.eval(w[0]);
        let d1 = c1.eval(w[1]) - c2.eval(w[1]);
        if d0 == 0.0 || d0 * d1 < 0.0 {
            upsilon_f = Some(w[1]);
            break;
        }
    }
    let upsilon_f = upsilon_f.ok_or_else(|| {
        GeometryError::HypothesisViolated(format!(
            "level curves never meet in ({upsilon_a_plus}, {})",
            upsilon_a_plus + SEARCH_SPAN
        ))
    })?;
    check_slopes(c1, c2, upsilon_a_plus - 1.0, upsilon_f + 1.0)?;

    let gamma_a_plus = c1.eval(upsilon_a_plus);
    let to_crossing = |r: Result<Option<Crossing>, _>, what: &str| -> Result<Crossing, GeometryError> {
        match r {
            Ok(Some(c)) => Ok(c),
            Ok(None) => Err(GeometryError::HypothesisViolated(format!(
                "{what} not found within the search span"
            ))),
            Err(e) => Err(GeometryError::HypothesisViolated(format!(
                "{what} search diverged: {e}"
            ))),
        }
    };

    let b_plus = to_crossing(
        extend_to_crossing(
            model,
            Branch::Rising,
            upsilon_a_plus,
            gamma_a_plus,
            c2,
            Direction::Backward,
            upsilon_a_plus - SEARCH_SPAN,
            h,
        ),
        "backward crossing with the falling level curve",
    )?;
    let c_plus = to_crossing(
        extend_to_crossing(
            model,
            Branch::Rising,
            upsilon_a_plus,
            gamma_a_plus,
            c2,
            Direction::Forward,
            upsilon_a_plus + SEARCH_SPAN,
            h,
        ),
        "forward crossing with the falling level curve",
    )?;

    let mut epsilon = epsilon_0;
    while epsilon >= EPSILON_FLOOR {
        let upsilon_a_minus = c_plus.upsilon + epsilon;
        let gamma_a_minus = c2.eval(upsilon_a_minus);
        let b_minus = to_crossing(
            extend_to_crossing(
                model,
                Branch::Falling,
                upsilon_a_minus,
                gamma_a_minus,
                c1,
                Direction::Forward,
                upsilon_a_minus + SEARCH_SPAN,
                h,
            ),
            "crossing of the falling solution with the rising level curve",
        )?;

        let lo = b_plus.upsilon;
        let hi = b_minus.upsilon;
        let rising = merged_two_sided_sweep(
            model,
            Branch::Rising,
            upsilon_a_plus,
            gamma_a_plus,
            lo,
            hi,
            h,
        )?;
        let falling = merged_two_sided_sweep(
            model,
            Branch::Falling,
            upsilon_a_minus,
            gamma_a_minus,
            lo,
            hi,
            h,
        )?;

        let crossings = curve_crossings(&rising, &falling, lo, hi, h);
        let below = crossings
            .iter()
            .filter(|&&(u, _)| u < upsilon_a_plus)
            .last()
            .copied();
        let middle = crossings
            .iter()
            .find(|&&(u, _)| u > upsilon_a_plus && u < upsilon_a_minus)
            .copied();
        let above = crossings
            .iter()
            .find(|&&(u, _)| u > upsilon_a_minus)
            .copied();

        if let (Some(lo_x), Some(mid_x), Some(hi_x)) = (below, middle, above) {
            check_slopes(c1, c2, lo, hi)?;
            let residual = |u: f64| (rising.value_at(u) - falling.value_at(u)).abs();
            let crossing_residual = residual(lo_x.0).max(residual(mid_x.0)).max(residual(hi_x.0));
            let construction = ButterflyConstruction {
                upsilon_a_plus,
                upsilon_b_plus: b_plus.upsilon,
                upsilon_c_plus: c_plus.upsilon,
                epsilon,
                upsilon_a_minus,
                upsilon_x: mid_x.0,
                upsilon_min: lo_x.0,
                upsilon_max: hi_x.0,
                crossing_residual,
            };
            if !(construction.upsilon_min < upsilon_a_plus
                && upsilon_a_plus < construction.upsilon_x
                && construction.upsilon_x < upsilon_a_minus
                && upsilon_a_minus < construction.upsilon_max)
            {
                return Err(GeometryError::HypothesisViolated(format!(
                    "crossing ordering failed: {construction:?}"
                )));
            }
            return Ok(construction);
        }
        epsilon *= 0.5;
    }
    Err(GeometryError::EpsilonExhausted {
        floor: EPSILON_FLOOR,
    })
}

/// Allowed overshoot above the level curve before invariance counts as
/// violated.
pub const INVARIANCE_TOL: f64 = 1e-7;

/// Result of checking one seed against the invariance claim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SeedInvariance {
    /// Seed started on or below the curve; worst overshoot observed.
    Checked { worst_violation: f64 },
    /// Seed started above the curve, outside the claim's scope.
    NotApplicable,
}

/// Aggregate invariance verdict across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub passed: bool,
    pub worst_violation: f64,
    pub worst_seed: f64,
    pub worst_upsilon: f64,
    pub seeds_checked: usize,
}

/// Checks positive invariance of the region below the branch's level curve
/// for one seed: integrates the branch from `(upsilon_from, gamma_0)` to
/// `upsilon_to` and reports the worst overshoot `gamma(u) - c(u)`.
pub fn check_invariance_from_seed(
    model: &DuhemModel,
    branch: Branch,
    upsilon_from: f64,
    upsilon_to: f64,
    gamma_0: f64,
    h: f64,
) -> Result<(SeedInvariance, f64), GeometryError> {
    let (c1, c2) = require_curve_chasing(model)?;
    let curve = match branch {
        Branch::Rising => c1,
        Branch::Falling => c2,
    };
    match branch {
        Branch::Rising if upsilon_to <= upsilon_from => {
            return Err(GeometryError::HypothesisViolated(
                "rising-branch invariance holds along increasing inputs".into(),
            ))
        }
        Branch::Falling if upsilon_to >= upsilon_from => {
            return Err(GeometryError::HypothesisViolated(
                "falling-branch invariance holds along decreasing inputs".into(),
            ))
        }
        _ => {}
    }
    let (lo, hi) = (
        upsilon_from.min(upsilon_to),
        upsilon_from.max(upsilon_to),
    );
    match branch {
        Branch::Rising => check_slopes(curve, &CurveSpec::default(), lo, hi)?,
        Branch::Falling => check_slopes(&CurveSpec::default(), curve, lo, hi)?,
    }
    if gamma_0 > curve.eval(upsilon_from) + SLOPE_TOL {
        return Ok((SeedInvariance::NotApplicable, upsilon_from));
    }
    let trajectory = sweep(model, branch, upsilon_from, upsilon_to, gamma_0, h).map_err(|e| {
        GeometryError::HypothesisViolated(format!("invariance sweep diverged: {e}"))
    })?;
    let mut worst = 0.0f64;
    let mut worst_at = upsilon_from;
    for &(u, g) in &trajectory.samples {
        let overshoot = g - curve.eval(u);
        if overshoot > worst {
            worst = overshoot;
            worst_at = u;
        }
    }
    Ok((
        SeedInvariance::Checked {
            worst_violation: worst,
        },
        worst_at,
    ))
}

/// Seeds a batch of trajectories on and below the branch's level curve at
/// `upsilon_from` and checks that none escape above it along the sweep.
pub fn verify_invariance(
    model: &DuhemModel,
    branch: Branch,
    upsilon_from: f64,
    upsilon_to: f64,
    h: f64,
) -> Result<InvarianceReport, GeometryError> {
    let (c1, c2) = require_curve_chasing(model)?;
    let curve = match branch {
        Branch::Rising => c1,
        Branch::Falling => c2,
    };
    let base = curve.eval(upsilon_from);
    let seeds = [base, base - 0.5, base - 1.0, base - 2.0];
    let mut report = InvarianceReport {
        passed: true,
        worst_violation: 0.0,
        worst_seed: seeds[0],
        worst_upsilon: upsilon_from,
        seeds_checked: 0,
    };
    for &seed in &seeds {
        match check_invariance_from_seed(model, branch, upsilon_from, upsilon_to, seed, h)? {
            (SeedInvariance::Checked { worst_violation }, at) => {
                report.seeds_checked += 1;
                if worst_violation > report.worst_violation {
                    report.worst_violation = worst_violation;
                    report.worst_seed = seed;
                    report.worst_upsilon = at;
                }
            }
            (SeedInvariance::NotApplicable, _) => {}
        }
    }
    report.passed = report.seeds_checked > 0 && report.worst_violation <= INVARIANCE_TOL;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accommodation::find_periodic_orbit;
    use crate::models::CurveSpec;

    fn cubic_default() -> DuhemModel {
        let c1 = CurveSpec::polynomial(&[0.0, 1.0, 0.0, 0.04]);
        let c2 = c1.negated();
        DuhemModel::curve_chasing(c1, c2, 1.0).unwrap()
    }

    fn orbit_from_chains(asc: Vec<(f64, f64)>, desc: Vec<(f64, f64)>) -> ClosedOrbit {
        let closure_residual = (asc[asc.len() - 1].1 - desc[0].1)
            .abs()
            .max((desc[desc.len() - 1].1 - asc[0].1).abs());
        ClosedOrbit {
            ascending: BranchTrajectory {
                branch: Branch::Rising,
                samples: asc,
                step: 0.0,
            },
            descending: BranchTrajectory {
                branch: Branch::Falling,
                samples: desc,
                step: 0.0,
            },
            closure_residual,
        }
    }

    /// Exhaustive all-pairs reference for the pruned implementation.
    fn brute_force_intersections(orbit: &ClosedOrbit, tol: f64) -> Vec<(f64, f64)> {
        let asc = &orbit.ascending.samples;
        let desc = &orbit.descending.samples;
        let u_min = orbit.upsilon_min();
        let u_max = orbit.upsilon_max();
        let mut out: Vec<(f64, f64)> = Vec::new();
        for i in 0..asc.len() - 1 {
            for j in 0..desc.len() - 1 {
                if let Ok(Some((_, _, (u, g)))) =
                    segment_crossing(asc[i], asc[i + 1], desc[j], desc[j + 1])
                {
                    if (u - u_min).abs() <= tol || (u - u_max).abs() <= tol {
                        continue;
                    }
                    if !out
                        .iter()
                        .any(|&(uu, gg)| (uu - u).abs() <= 1e-6 && (gg - g).abs() <= 1e-6)
                    {
                        out.push((u, g));
                    }
                }
            }
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    }

    #[test]
    fn simple_diamond_loop_has_no_interior_intersections() {
        // ascending chain below, descending chain above: a plain loop
        let orbit = orbit_from_chains(
            vec![(0.0, 0.0), (1.0, -1.0), (2.0, 0.0)],
            vec![(2.0, 0.0), (1.0, 1.0), (0.0, 0.0)],
        );
        let xs = self_intersections(&orbit, 1e-9).unwrap();
        assert!(xs.is_empty());
        let lobes = decompose_lobes(&orbit, &xs).unwrap();
        assert_eq!(lobes.len(), 1);
        assert!((lobes[0].signed_area.abs() - 2.0).abs() < 1e-12);
        assert_eq!(classify_loop(&orbit), LoopClass::SimpleCounterClockwise);
    }

    #[test]
    fn figure_eight_splits_into_opposite_lobes() {
        // flat ascending chain, descending chain weaving over then under it:
        // one crossing at (1, 0), two triangular lobes of opposite turn
        let orbit = orbit_from_chains(
            vec![(0.0, 0.0), (2.0, 0.0)],
            vec![(2.0, 0.0), (1.5, 1.0), (0.5, -1.0), (0.0, 0.0)],
        );
        let xs = self_intersections(&orbit, 1e-9).unwrap();
        assert_eq!(xs.len(), 1);
        assert!((xs[0].upsilon - 1.0).abs() < 1e-12);
        assert!(xs[0].gamma.abs() < 1e-12);

        let lobes = decompose_lobes(&orbit, &xs).unwrap();
        assert_eq!(lobes.len(), 2);
        assert!(lobes[0].orientation != lobes[1].orientation);
        let sum: f64 = lobes.iter().map(|l| l.signed_area).sum();
        let gross: f64 = lobes.iter().map(|l| l.signed_area.abs()).sum();
        assert!((gross - 1.0).abs() < 1e-12);
        assert!(sum.abs() < 1e-12);
        assert_eq!(classify_loop(&orbit), LoopClass::Butterfly);
    }

    #[test]
    fn degenerate_orbit_is_rejected() {
        let orbit = orbit_from_chains(vec![(0.0, 0.0)], vec![(0.0, 0.0)]);
        assert!(matches!(
            self_intersections(&orbit, 1e-9),
            Err(GeometryError::DegenerateOrbit)
        ));
        assert_eq!(classify_loop(&orbit), LoopClass::Degenerate);
    }

    #[test]
    fn flat_orbit_classifies_degenerate() {
        let orbit = orbit_from_chains(
            vec![(0.0, 0.5), (1.0, 0.5), (2.0, 0.5)],
            vec![(2.0, 0.5), (1.0, 0.5), (0.0, 0.5)],
        );
        assert_eq!(classify_loop(&orbit), LoopClass::Degenerate);
    }

    #[test]
    fn pruned_intersections_match_brute_force_on_butterfly_orbit() {
        let orbit = find_periodic_orbit(&cubic_default(), -5.0, 5.0, 0.0, 1e-8, 500, 0.02)
            .expect("converges");
        let tol = 1e-6 * 10.0;
        let xs = self_intersections(&orbit, tol).unwrap();
        let reference = brute_force_intersections(&orbit, tol);
        assert_eq!(xs.len(), reference.len());
        for (x, r) in xs.iter().zip(&reference) {
            assert!((x.upsilon - r.0).abs() < 1e-9);
            assert!((x.gamma - r.1).abs() < 1e-9);
        }
    }

    #[test]
    fn cubic_orbit_is_a_butterfly_with_one_crossing_near_zero() {
        let orbit = find_periodic_orbit(&cubic_default(), -5.0, 5.0, 0.0, 1e-8, 500, 0.005)
            .expect("converges");
        let xs = self_intersections(&orbit, 1e-5).unwrap();
        assert_eq!(xs.len(), 1);
        assert!(xs[0].upsilon.abs() < 1.0, "crossing at {}", xs[0].upsilon);
        let lobes = decompose_lobes(&orbit, &xs).unwrap();
        assert_eq!(lobes.len(), 2);
        assert!(lobes[0].orientation != lobes[1].orientation);
        assert_eq!(classify_loop(&orbit), LoopClass::Butterfly);
    }

    #[test]
    fn boucwen_orbit_is_simple() {
        let m = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        let orbit = find_periodic_orbit(&m, -1.0, 1.0, 0.0, 1e-8, 500, 0.001).expect("converges");
        let xs = self_intersections(&orbit, 1e-6).unwrap();
        assert!(xs.is_empty());
        let class = classify_loop(&orbit);
        assert!(
            class == LoopClass::SimpleClockwise || class == LoopClass::SimpleCounterClockwise
        );
    }

    #[test]
    fn butterfly_construction_on_defaults() {
        let m = cubic_default();
        let c = construct_butterfly(&m, -2.0, 0.5, 0.005).expect("construction succeeds");
        assert!(c.upsilon_min < c.upsilon_a_plus);
        assert!(c.upsilon_a_plus < c.upsilon_x);
        assert!(c.upsilon_x < c.upsilon_a_minus);
        assert!(c.upsilon_a_minus < c.upsilon_max);
        assert!(c.upsilon_b_plus < c.upsilon_min);
        assert!(c.upsilon_max < 50.0);
        assert!(c.crossing_residual <= 1e-6);
    }

    #[test]
    fn butterfly_construction_rejects_wrong_slopes() {
        // level curves with flipped slopes violate the hypotheses
        let c1 = CurveSpec::polynomial(&[0.0, -1.0, 0.0, -0.04]);
        let c2 = c1.negated();
        let m = DuhemModel::curve_chasing(c1, c2, 1.0).unwrap();
        assert!(matches!(
            construct_butterfly(&m, -2.0, 0.5, 0.01),
            Err(GeometryError::HypothesisViolated(_))
        ));
    }

    #[test]
    fn butterfly_construction_rejects_boucwen() {
        let m = DuhemModel::bouc_wen(1.0, 1.0, 2.0, 1.0).unwrap();
        assert!(matches!(
            construct_butterfly(&m, -2.0, 0.5, 0.01),
            Err(GeometryError::HypothesisViolated(_))
        ));
    }

    #[test]
    fn symmetric_seeds_cross_at_the_curve_meeting_point() {
        // odd-symmetric curves: seeding the falling solution at the exact
        // mirror of the rising seed puts the middle crossing at zero
        let m = cubic_default();
        let (c1, c2) = match &m {
            DuhemModel::CurveChasing { c1, c2, .. } => (c1.clone(), c2.clone()),
            _ => unreachable!(),
        };
        let a = 2.0;
        let rising =
            merged_two_sided_sweep(&m, Branch::Rising, -a, c1.eval(-a), -6.0, 6.0, 0.002).unwrap();
        let falling =
            merged_two_sided_sweep(&m, Branch::Falling, a, c2.eval(a), -6.0, 6.0, 0.002).unwrap();
        let crossings = curve_crossings(&rising, &falling, -6.0, 6.0, 0.002);
        let middle = crossings
            .iter()
            .find(|&&(u, _)| u > -a && u < a)
            .expect("middle crossing exists");
        assert!(middle.0.abs() < 1e-6, "middle crossing at {}", middle.0);
    }

    #[test]
    fn invariance_holds_for_cubic_defaults() {
        let m = cubic_default();
        let rising = verify_invariance(&m, Branch::Rising, -3.0, 5.0, 0.005).unwrap();
        assert!(rising.passed, "{rising:?}");
        assert!(rising.worst_violation <= INVARIANCE_TOL);
        let falling = verify_invariance(&m, Branch::Falling, 3.0, -5.0, 0.005).unwrap();
        assert!(falling.passed, "{falling:?}");
    }

    #[test]
    fn invariance_seed_above_curve_is_out_of_scope() {
        let m = cubic_default();
        let c1_at = match &m {
            DuhemModel::CurveChasing { c1, .. } => c1.eval(-3.0),
            _ => unreachable!(),
        };
        let (outcome, _) =
            check_invariance_from_seed(&m, Branch::Rising, -3.0, 5.0, c1_at + 1.0, 0.01).unwrap();
        assert_eq!(outcome, SeedInvariance::NotApplicable);
    }

    #[test]
    fn invariance_rejects_wrong_sweep_direction() {
        let m = cubic_default();
        assert!(matches!(
            verify_invariance(&m, Branch::Rising, 5.0, -3.0, 0.01),
            Err(GeometryError::HypothesisViolated(_))
        ));
    }
}
