//! Grid approximations of invariant sets: avoidance sets, orbit closures of
//! curves, local manifold tests and a model horseshoe.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use bitvec::prelude::*;
use serde::Serialize;

use crate::da::DaMap;
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::linalg::{self, IMatrix, Vector};
use crate::torus::{frac, torus_dist, wrap_diff, ToralAutomorphism};

/// Cells whose closed box meets the closed ball (fail-closed).
pub fn ball_cells(dim: usize, n: usize, center: &[f64], radius: f64) -> Result<GridSet> {
    let mut g = GridSet::empty(dim, n)?;
    let h = 1.0 / n as f64;
    let r_cells = (radius * n as f64).ceil() as i64 + 1;
    let c0: Vec<i64> = (0..dim).map(|d| (center[d] * n as f64).floor() as i64).collect();
    let span = -r_cells..=r_cells;
    let zspan = if dim == 3 { span.clone() } else { 0..=0 };
    for dk in zspan {
        for dj in span.clone() {
            for di in span.clone() {
                let off = [di, dj, dk];
                let cell: Vec<i64> = (0..dim).map(|d| c0[d] + off[d]).collect();
                // Distance from the center to the box [cell·h, (cell+1)·h].
                let mut dist2 = 0.0;
                for d in 0..dim {
                    let lo = cell[d] as f64 * h;
                    let hi = lo + h;
                    let c = center[d];
                    let gap = if c < lo { lo - c } else if c > hi { c - hi } else { 0.0 };
                    dist2 += gap * gap;
                }
                if dist2 <= radius * radius {
                    g.insert(g.index(&cell));
                }
            }
        }
    }
    if radius >= 0.5 * (dim as f64).sqrt() {
        g = GridSet::full(dim, n)?;
    }
    Ok(g)
}

#[inline]
fn mul_mod<const D: usize>(m: &IMatrix<D>, p: &[i64; D], q: i64) -> [i64; D] {
    std::array::from_fn(|i| {
        let mut s = 0i64;
        for j in 0..D {
            s += m[i][j] * p[j];
        }
        s.rem_euclid(q)
    })
}

#[inline]
fn lattice_cell<const D: usize>(g: &GridSet, p: &[i64; D], q: i64) -> usize {
    let n = g.resolution() as i64;
    let mut c = [0i64; 3];
    for d in 0..D {
        c[d] = p[d] * n / q;
    }
    g.index(&c)
}

/// Finite-horizon over-approximation of `⋂_{|k| ≤ h} A^k(ball^c)`.
///
/// Each cell carries `3^dim` sample points `(3i + a)/(3N)`, `a ∈ {0,1,2}`,
/// so the cell corner is a sample. Their orbits are computed exactly on the
/// `1/(3N)` lattice. A cell is kept if some sample avoids every ball cell
/// for `|k| ≤ horizon`.
pub fn avoidance_set<const D: usize>(
    a: &ToralAutomorphism<D>,
    center: &Vector<D>,
    radius: f64,
    n: usize,
    horizon: usize,
) -> Result<GridSet> {
    if !(radius > 0.0) {
        return Err(Error::Invalid("ball radius must be positive".into()));
    }
    let ball = ball_cells(D, n, center, radius)?;
    let mut out = GridSet::empty(D, n)?;
    let q = 3 * n as i64;
    let (fwd, bwd) = (a.matrix(), a.inverse_matrix());
    let samples = 3usize.pow(D as u32);
    let avoids = |p: &[i64; D]| -> bool {
        for m in [fwd, bwd] {
            let mut x = *p;
            for _ in 0..horizon {
                x = mul_mod(m, &x, q);
                if ball.contains(lattice_cell(&ball, &x, q)) {
                    return false;
                }
            }
        }
        true
    };
    for idx in 0..out.cells() {
        if ball.contains(idx) {
            continue;
        }
        let c = out.coords(idx);
        for s in 0..samples {
            let mut p = [0i64; D];
            let mut r = s;
            for (d, slot) in p.iter_mut().enumerate() {
                *slot = 3 * c[d] + (r % 3) as i64;
                r /= 3;
            }
            if avoids(&p) {
                out.insert(idx);
                break;
            }
        }
    }
    Ok(out)
}

/// Lattice points `p/q` whose entire (periodic) orbit under `A mod q`
/// stays out of `forbidden`. Bit `i + q(j + q k)` refers to `(i, j, k)`.
pub fn good_lattice_points(a: &ToralAutomorphism<3>, forbidden: &GridSet, q: i64) -> BitVec<u64, Lsb0> {
    let qq = q as usize;
    let total = qq * qq * qq;
    let mut good = bitvec![u64, Lsb0; 0; total];
    let mut seen = bitvec![u64, Lsb0; 0; total];
    let lin = |p: &[i64; 3]| (p[0] as usize) + qq * (p[1] as usize + qq * p[2] as usize);
    let mut orbit = Vec::new();
    for start in 0..total {
        if seen[start] {
            continue;
        }
        let p0 = [(start % qq) as i64, ((start / qq) % qq) as i64, (start / (qq * qq)) as i64];
        orbit.clear();
        let mut ok = true;
        let mut p = p0;
        loop {
            let l = lin(&p);
            seen.set(l, true);
            orbit.push(l);
            if forbidden.contains(lattice_cell(forbidden, &p, q)) {
                ok = false;
            }
            p = mul_mod(a.matrix(), &p, q);
            if p == p0 {
                break;
            }
        }
        if ok {
            for &l in &orbit {
                good.set(l, true);
            }
        }
    }
    good
}

/// A piecewise-linear curve given by lifted control points.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSpec {
    pub points: Vec<Vector<3>>,
}

impl CurveSpec {
    pub fn new(points: Vec<Vector<3>>) -> Self {
        CurveSpec { points }
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| linalg::norm(&linalg::sub(&w[1], &w[0]))).sum()
    }

    /// Checks non-emptiness and that some control point is fixed by `A`.
    pub fn validate(&self, a: &ToralAutomorphism<3>) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Invalid("curve has no points".into()));
        }
        let fixed = self.points.iter().any(|p| torus_dist(&a.apply(p), p) < 1e-12);
        if !fixed {
            return Err(Error::Invalid("curve does not pass through a fixed point".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Sampling {
    /// Curve sampled on the `1/q` lattice; orbits are exact and periodic.
    Lattice { q: i64 },
    /// Curve images `A^k γ` as polylines, subdivided below the cell size.
    /// Stops when an iteration would need more than `max_points` samples.
    Polyline { max_points: usize },
}

#[derive(Debug, Clone)]
pub struct OrbitClosure {
    pub set: GridSet,
    /// Iterations performed (largest orbit period in lattice mode).
    pub iterations: usize,
    /// Marked set stable under one more iteration.
    pub converged: bool,
    pub samples: usize,
    /// Fraction of sampled image points whose cell lies outside the
    /// one-cell dilation of the set.
    pub invariance_residual: f64,
}

/// Grid over-approximation of the closure of `⋃_k A^k(γ)`.
pub fn orbit_closure(
    a: &ToralAutomorphism<3>,
    curve: &CurveSpec,
    n: usize,
    max_iters: usize,
    sampling: Sampling,
) -> Result<OrbitClosure> {
    curve.validate(a)?;
    match sampling {
        Sampling::Lattice { q } => orbit_closure_lattice(a, curve, n, max_iters, q),
        Sampling::Polyline { max_points } => orbit_closure_polyline(a, curve, n, max_iters, max_points),
    }
}

/// Lattice points along a curve whose control points lie on the `1/q`
/// lattice; each segment is cut into as many pieces as its sup-norm length
/// in lattice units.
pub fn lattice_samples(curve: &CurveSpec, q: i64) -> Result<Vec<[i64; 3]>> {
    let qf = q as f64;
    let mut verts = Vec::with_capacity(curve.points.len());
    for p in &curve.points {
        let v: [i64; 3] = std::array::from_fn(|i| (p[i] * qf).round() as i64);
        if (0..3).any(|i| (p[i] * qf - v[i] as f64).abs() > 1e-6) {
            return Err(Error::Invalid(format!("control point {p:?} is not on the 1/{q} lattice")));
        }
        verts.push(v);
    }
    let mut out = vec![verts[0]];
    for w in verts.windows(2) {
        let d: [i64; 3] = std::array::from_fn(|i| w[1][i] - w[0][i]);
        let pieces = d.iter().map(|x| x.abs()).max().unwrap_or(0).max(1);
        for k in 1..=pieces {
            out.push(std::array::from_fn(|i| {
                let t = w[0][i] as f64 + d[i] as f64 * k as f64 / pieces as f64;
                t.round() as i64
            }));
        }
    }
    Ok(out)
}

fn orbit_closure_lattice(a: &ToralAutomorphism<3>, curve: &CurveSpec, n: usize, max_iters: usize, q: i64) -> Result<OrbitClosure> {
    let mut set = GridSet::empty(3, n)?;
    let samples = lattice_samples(curve, q)?;
    let mut visited: HashSet<[i64; 3]> = HashSet::new();
    let mut points: Vec<[i64; 3]> = Vec::new();
    let mut iterations = 0;
    let mut converged = true;
    for s in &samples {
        let p0: [i64; 3] = std::array::from_fn(|i| s[i].rem_euclid(q));
        if visited.contains(&p0) {
            continue;
        }
        let mut p = p0;
        let mut closed = false;
        for step in 1..=max_iters.max(1) {
            visited.insert(p);
            points.push(p);
            p = mul_mod(a.matrix(), &p, q);
            if p == p0 {
                closed = true;
                iterations = iterations.max(step);
                break;
            }
        }
        if !closed {
            converged = false;
            iterations = iterations.max(max_iters);
            let mut p = p0;
            for _ in 0..max_iters {
                p = mul_mod(a.inverse_matrix(), &p, q);
                if !visited.insert(p) {
                    break;
                }
                points.push(p);
            }
        }
    }
    for p in &points {
        set.insert(lattice_cell(&set, p, q));
    }
    let dil = set.dilate(1);
    let outside = points.iter().filter(|p| !dil.contains(lattice_cell(&dil, &mul_mod(a.matrix(), p, q), q))).count();
    Ok(OrbitClosure {
        invariance_residual: if points.is_empty() { 0.0 } else { outside as f64 / points.len() as f64 },
        set,
        iterations,
        converged,
        samples: points.len(),
    })
}

/// Marks cells along the polyline `pts`, sampled every quarter cell.
/// Returns the number of samples, or `None` if it would exceed `budget`.
fn mark_polyline(set: &mut GridSet, pts: &[Vector<3>], budget: usize, new_cells: &mut usize) -> Option<usize> {
    let n = set.resolution() as f64;
    let mut total = 0usize;
    for w in pts.windows(2) {
        let len = linalg::norm(&linalg::sub(&w[1], &w[0]));
        let pieces = (len * n * 4.0).ceil().max(1.0);
        if pieces as usize > budget.saturating_sub(total) {
            return None;
        }
        total += pieces as usize;
    }
    if pts.len() == 1 {
        let c = set.cell_of(&frac(&pts[0]));
        *new_cells += set.insert(c) as usize;
        return Some(1);
    }
    for w in pts.windows(2) {
        let d = linalg::sub(&w[1], &w[0]);
        let pieces = (linalg::norm(&d) * n * 4.0).ceil().max(1.0) as usize;
        for k in 0..=pieces {
            let t = k as f64 / pieces as f64;
            let x: Vector<3> = std::array::from_fn(|i| w[0][i] + t * d[i]);
            let c = set.cell_of(&frac(&x));
            *new_cells += set.insert(c) as usize;
        }
    }
    Some(total)
}

fn orbit_closure_polyline(
    a: &ToralAutomorphism<3>,
    curve: &CurveSpec,
    n: usize,
    max_iters: usize,
    max_points: usize,
) -> Result<OrbitClosure> {
    let mut set = GridSet::empty(3, n)?;
    let mut fwd = curve.points.clone();
    let mut bwd = curve.points.clone();
    let mut dummy = 0;
    let mut samples = mark_polyline(&mut set, &fwd, max_points, &mut dummy).unwrap_or(0);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iters {
        let nf: Vec<Vector<3>> = fwd.iter().map(|p| a.apply(p)).collect();
        let nb: Vec<Vector<3>> = bwd.iter().map(|p| a.apply_inverse(p)).collect();
        let mut trial = set.clone();
        let mut added = 0;
        let (Some(sf), Some(sb)) = (
            mark_polyline(&mut trial, &nf, max_points, &mut added),
            mark_polyline(&mut trial, &nb, max_points, &mut added),
        ) else {
            break;
        };
        iterations += 1;
        samples += sf + sb;
        set = trial;
        fwd = nf;
        bwd = nb;
        if added == 0 {
            converged = true;
            break;
        }
    }
    // Residual: image of the final forward front against the dilated set.
    let dil = set.dilate(1);
    let img: Vec<Vector<3>> = fwd.iter().map(|p| a.apply(p)).collect();
    let mut probe = GridSet::empty(3, n)?;
    let mut cnt = 0;
    let residual = match mark_polyline(&mut probe, &img, max_points, &mut cnt) {
        Some(_) if probe.count() > 0 => probe.difference(&dil).count() as f64 / probe.count() as f64,
        _ => f64::NAN,
    };
    Ok(OrbitClosure { set, iterations, converged, samples, invariance_residual: residual })
}

/// A candidate curve for a proper invariant subset: a bouquet of lattice
/// loops at the fixed point 0, one per coordinate direction, through lattice
/// points whose whole orbits avoid the ball cells.
#[derive(Debug, Clone, Serialize)]
pub struct HancockCandidate {
    pub curve: CurveSpec,
    pub q: i64,
    /// Fraction of lattice points whose orbits avoid the ball cells.
    pub good_fraction: f64,
    /// Steps of each loop.
    pub loop_lengths: Vec<usize>,
    pub expansions: usize,
}

/// Searches for a bouquet curve whose lattice orbit closure avoids
/// `B(center, radius)` at grid resolution `n`.
pub fn hancock_curve(a: &ToralAutomorphism<3>, center: &Vector<3>, radius: f64, n: usize, q: i64) -> Result<HancockCandidate> {
    let ball = ball_cells(3, n, center, radius)?;
    let good = good_lattice_points(a, &ball, q);
    let qq = q as usize;
    let is_good = |p: &[i64; 3]| {
        let r: [usize; 3] = std::array::from_fn(|i| p[i].rem_euclid(q) as usize);
        good[r[0] + qq * (r[1] + qq * r[2])]
    };
    if !is_good(&[0, 0, 0]) {
        return Err(Error::BasepointMissing);
    }
    let mut pts: Vec<Vector<3>> = vec![[0.0; 3]];
    let mut loop_lengths = Vec::new();
    let mut expansions = 0;
    // Loops are concatenated in the lift: loop i runs from e_1 + … + e_{i−1}.
    let mut base = [0i64; 3];
    for axis in 0..3 {
        let mut target = [0i64; 3];
        target[axis] = q;
        let (path, exp) = astar(&[0, 0, 0], &target, &is_good, 5_000_000)?;
        expansions += exp;
        loop_lengths.push(path.len() - 1);
        for p in path.iter().skip(1) {
            pts.push(std::array::from_fn(|i| (base[i] + p[i]) as f64 / q as f64));
        }
        base[axis] += q;
    }
    Ok(HancockCandidate {
        curve: CurveSpec::new(pts),
        q,
        good_fraction: good.count_ones() as f64 / good.len() as f64,
        loop_lengths,
        expansions,
    })
}

fn astar(
    start: &[i64; 3],
    goal: &[i64; 3],
    ok: &dyn Fn(&[i64; 3]) -> bool,
    limit: usize,
) -> Result<(Vec<[i64; 3]>, usize)> {
    let h = |p: &[i64; 3]| (0..3).map(|i| (p[i] - goal[i]).abs()).max().unwrap_or(0) as u64;
    let mut open = BinaryHeap::new();
    let mut best: HashMap<[i64; 3], (u64, [i64; 3])> = HashMap::new();
    best.insert(*start, (0, *start));
    open.push(Reverse((h(start), 0u64, *start)));
    let mut expansions = 0;
    while let Some(Reverse((_, g, p))) = open.pop() {
        if best.get(&p).map(|b| b.0) != Some(g) {
            continue;
        }
        if p == *goal {
            let mut path = vec![p];
            let mut cur = p;
            while cur != *start {
                cur = best[&cur].1;
                path.push(cur);
            }
            path.reverse();
            return Ok((path, expansions));
        }
        expansions += 1;
        if expansions > limit {
            return Err(Error::GraphTooLarge { edges: expansions as u64, limit: limit as u64 });
        }
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy, dz) == (0, 0, 0) {
                        continue;
                    }
                    let nb = [p[0] + dx, p[1] + dy, p[2] + dz];
                    if !ok(&nb) {
                        continue;
                    }
                    let ng = g + 1;
                    if best.get(&nb).is_none_or(|b| ng < b.0) {
                        best.insert(nb, (ng, p));
                        open.push(Reverse((ng + h(&nb), ng, nb)));
                    }
                }
            }
        }
    }
    Err(Error::Invalid("no avoiding lattice path between the endpoints".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Stable,
    Unstable,
}

/// Planar maps whose local stable and unstable arcs can be computed.
pub trait LocalManifolds2 {
    /// Polyline through `x` approximating the local arc of total length
    /// `len` (half on each side of `x`).
    fn local_arc(&self, x: &Vector<2>, side: Side, len: f64) -> Result<Vec<Vector<2>>>;
}

fn straight_arc(x: &Vector<2>, e: &Vector<2>, len: f64) -> Vec<Vector<2>> {
    let h = 0.5 * len;
    vec![[x[0] - h * e[0], x[1] - h * e[1]], [x[0] + h * e[0], x[1] + h * e[1]]]
}

impl LocalManifolds2 for ToralAutomorphism<2> {
    fn local_arc(&self, x: &Vector<2>, side: Side, len: f64) -> Result<Vec<Vector<2>>> {
        let k = if side == Side::Stable { 0 } else { 1 };
        Ok(straight_arc(x, self.eigenvector(k), len))
    }
}

/// Depth of the backward pull used to straighten unstable arcs.
const ARC_PULLBACK: usize = 12;

impl LocalManifolds2 for DaMap<2> {
    /// Stable arcs are segments of the invariant lines parallel to the
    /// stable eigenvector. Unstable arcs are obtained by pulling `x` back,
    /// laying a short segment along the linear unstable direction and
    /// pushing it forward again; points whose backward orbit approaches the
    /// source have no one-dimensional unstable arc.
    fn local_arc(&self, x: &Vector<2>, side: Side, len: f64) -> Result<Vec<Vector<2>>> {
        let a = self.base();
        if side == Side::Stable {
            return Ok(straight_arc(x, a.eigenvector(0), len));
        }
        let core = 0.5 * self.cstar().min(self.rho() / 4.0);
        let mut y = *x;
        let mut pulled = Vec::with_capacity(ARC_PULLBACK);
        for _ in 0..ARC_PULLBACK {
            if torus_dist(&y, self.x1()) < core {
                return Err(Error::ManifoldUnavailable(format!("backward orbit of {x:?} approaches the source")));
            }
            y = self.backward(&y);
            pulled.push(y);
        }
        let eu = a.eigenvector(1);
        let lu = a.eigenvalues()[1];
        let half0 = 2.0 * len / lu.powi(ARC_PULLBACK as i32);
        let m = 4000;
        let mut arc: Vec<Vector<2>> = (0..=m)
            .map(|k| {
                let t = -half0 + 2.0 * half0 * k as f64 / m as f64;
                [y[0] + t * eu[0], y[1] + t * eu[1]]
            })
            .collect();
        for _ in 0..ARC_PULLBACK {
            for p in arc.iter_mut() {
                *p = self.forward(p);
            }
        }
        // Recentre on the image of y, which is x up to rounding.
        let mid = m / 2;
        let shift = wrap_diff(x, &arc[mid]);
        let shift = linalg::sub(&linalg::add(&arc[mid], &shift), &arc[mid]);
        for p in arc.iter_mut() {
            *p = linalg::add(p, &shift);
        }
        let cut = |range: Box<dyn Iterator<Item = usize>>| -> Vec<Vector<2>> {
            let mut acc = 0.0;
            let mut prev = arc[mid];
            let mut out = Vec::new();
            for k in range {
                let step = linalg::norm(&linalg::sub(&arc[k], &prev));
                if acc + step > 0.5 * len {
                    let t = (0.5 * len - acc) / step;
                    out.push(std::array::from_fn(|i| prev[i] + t * (arc[k][i] - prev[i])));
                    return out;
                }
                acc += step;
                prev = arc[k];
                out.push(prev);
            }
            out
        };
        let mut left = cut(Box::new((0..mid).rev()));
        let right = cut(Box::new(mid + 1..=m));
        left.reverse();
        left.push(arc[mid]);
        left.extend(right);
        Ok(left)
    }
}

/// Whether every sample of the local arc of `x` falls in a cell of `s`
/// (samples every quarter cell).
pub fn local_arc_test<F: LocalManifolds2>(f: &F, s: &GridSet, x: &Vector<2>, side: Side, arc_len: f64) -> Result<bool> {
    assert_eq!(s.dim(), 2, "local arc test is planar");
    let arc = f.local_arc(x, side, arc_len)?;
    let n = s.resolution() as f64;
    if arc.len() == 1 {
        return Ok(s.contains(s.cell_of(&frac(&arc[0]))));
    }
    for w in arc.windows(2) {
        let d = linalg::sub(&w[1], &w[0]);
        let pieces = (linalg::norm(&d) * n * 4.0).ceil().max(1.0) as usize;
        for k in 0..=pieces {
            let t = k as f64 / pieces as f64;
            let p: Vector<2> = std::array::from_fn(|i| w[0][i] + t * d[i]);
            if !s.contains(s.cell_of(&frac(&p))) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Grid over-approximation of the attractor of a planar DA map: cells with
/// a sample (3×3 per cell) whose backward orbit stays away from the source
/// for `horizon` steps.
pub fn da_attractor_set(f: &DaMap<2>, n: usize, horizon: usize) -> Result<GridSet> {
    let mut out = GridSet::empty(2, n)?;
    let core = 0.5 * f.cstar().min(f.rho() / 4.0);
    let h = 1.0 / n as f64;
    for idx in 0..out.cells() {
        let c = out.coords(idx);
        'samples: for s in 0..9 {
            let x0 = [(c[0] as f64 + (s % 3) as f64 / 3.0 + 1.0 / 6.0) * h, (c[1] as f64 + (s / 3) as f64 / 3.0 + 1.0 / 6.0) * h];
            let mut x = x0;
            for _ in 0..=horizon {
                if torus_dist(&x, f.x1()) < core {
                    continue 'samples;
                }
                x = frac(&f.backward(&x));
            }
            out.insert(idx);
            break;
        }
    }
    Ok(out)
}

/// The affine horseshoe on the unit square: the strips `x ≤ 1/4` and
/// `x ≥ 3/4` are stretched horizontally by 4 and squeezed vertically by 4
/// into the strips `y ≤ 1/4` and `y ≥ 3/4`. Its maximal invariant set is
/// `C × C` with `C` the middle-half Cantor set.
#[derive(Debug, Clone, Copy, Default)]
pub struct Horseshoe;

impl Horseshoe {
    fn in_strips(t: f64) -> bool {
        t <= 0.25 || t >= 0.75
    }

    pub fn forward(&self, p: &Vector<2>) -> Option<Vector<2>> {
        let [x, y] = *p;
        if x <= 0.25 {
            Some([4.0 * x, 0.25 * y])
        } else if x >= 0.75 {
            Some([4.0 * x - 3.0, 0.25 * y + 0.75])
        } else {
            None
        }
    }

    pub fn backward(&self, p: &Vector<2>) -> Option<Vector<2>> {
        let [x, y] = *p;
        if y <= 0.25 {
            Some([0.25 * x, 4.0 * y])
        } else if y >= 0.75 {
            Some([0.25 * x + 0.75, 4.0 * y - 3.0])
        } else {
            None
        }
    }

    /// Cells whose center survives `depth` forward and backward steps.
    pub fn grid(&self, n: usize, depth: usize) -> Result<GridSet> {
        let mut g = GridSet::empty(2, n)?;
        let h = 1.0 / n as f64;
        let ok_axis = |mut t: f64| {
            for _ in 0..depth {
                if !Self::in_strips(t) {
                    return false;
                }
                t = if t <= 0.25 { 4.0 * t } else { 4.0 * t - 3.0 };
            }
            true
        };
        for j in 0..n {
            let yok = ok_axis((j as f64 + 0.5) * h);
            if !yok {
                continue;
            }
            for i in 0..n {
                if ok_axis((i as f64 + 0.5) * h) {
                    g.insert(g.index(&[i as i64, j as i64]));
                }
            }
        }
        Ok(g)
    }

    /// Local product: horizontal coordinate from `x` (its vertical stable
    /// line) and vertical coordinate from `y` (its horizontal unstable line).
    pub fn bracket(&self, x: &Vector<2>, y: &Vector<2>) -> Vector<2> {
        [x[0], y[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b() -> ToralAutomorphism<3> {
        ToralAutomorphism::classify_t3([[0, 0, 1], [1, 0, -38], [0, 1, 40]]).unwrap()
    }

    #[test]
    fn fixed_point_curve_is_one_cell() {
        let a = b();
        let c = CurveSpec::new(vec![[0.0; 3]]);
        let oc = orbit_closure(&a, &c, 16, 10, Sampling::Lattice { q: 32 }).unwrap();
        assert_eq!(oc.set.count(), 1);
        assert!(oc.set.contains(0));
        let oc = orbit_closure(&a, &c, 16, 10, Sampling::Polyline { max_points: 1000 }).unwrap();
        assert_eq!(oc.set.count(), 1);
    }

    #[test]
    fn curve_must_hit_fixed_point() {
        let c = CurveSpec::new(vec![[0.1, 0.2, 0.3]]);
        assert!(c.validate(&b()).is_err());
    }

    #[test]
    fn avoidance_trivial_cases() {
        let a = b();
        let all = avoidance_set(&a, &[0.5; 3], 1.0, 8, 3).unwrap();
        assert!(all.is_empty());
        let s = avoidance_set(&a, &[0.5; 3], 0.1, 16, 4).unwrap();
        assert!(s.contains(0));
        let ball = ball_cells(3, 16, &[0.5; 3], 0.1).unwrap();
        assert!(s.is_disjoint(&ball));
    }

    #[test]
    fn horseshoe_cells_are_isolated() {
        let g = Horseshoe.grid(64, 3).unwrap();
        assert_eq!(g.count(), 64);
    }
}
