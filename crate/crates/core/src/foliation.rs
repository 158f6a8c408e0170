//! Leaves of the invariant foliations of a map isotopic to a T³-class
//! automorphism, and the tube and chain projection built from them.
//!
//! Leaves are stored as eigencoordinate offsets from an exact seed, so every
//! point on a leaf can be iterated without rounding in the stable direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exact::{ExactDynamics, ExactPoint};
use crate::grid::GridSet;
use crate::linalg::{self, Vector};
use crate::product::{self, Chain};
use crate::torus::frac;
use crate::{Error, Result};

pub const DEFAULT_DEPTH: usize = 30;
pub const DIRECTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LeafField {
    U,
    C,
    /// Straight line in the center-stable plane at `angle` from `e_s`
    /// towards `e_c`.
    Cs { angle: f64 },
}

/// Unit unstable direction at `p` in eigencoordinates, oriented with
/// positive `u` part, by pushing probes forward along the backward orbit.
pub fn unstable_direction<G: ExactDynamics>(g: &G, p: &ExactPoint, depth: usize) -> Result<Vector<3>> {
    let a = g.linear();
    let mut orbit = Vec::with_capacity(depth);
    let mut q = *p;
    for _ in 0..depth {
        g.retreat(&mut q);
        orbit.push(q.point(a));
    }
    let mut v1 = [0.0, 0.0, 1.0];
    let mut v2 = [0.5, 0.5, 1.0];
    for z in orbit.iter().rev() {
        let j = g.jacobian_eigen(z);
        v1 = normalized(&linalg::mat_vec(&j, &v1));
        v2 = normalized(&linalg::mat_vec(&j, &v2));
    }
    if linalg::norm(&linalg::sub(&v1, &v2)) > DIRECTION_TOL || !v1.iter().all(|c| c.is_finite()) {
        return Err(Error::DirectionNotConverged(p.point(a)));
    }
    if v1[2] < 0.0 {
        v1 = linalg::scale(&v1, -1.0);
    }
    Ok(v1)
}

fn normalized(v: &Vector<3>) -> Vector<3> {
    linalg::scale(v, 1.0 / linalg::norm(v))
}

/// Eigen-offset derivative of the unstable leaf per unit of `u`, and the
/// matching arc-length rate.
fn slope<G: ExactDynamics>(g: &G, p: &ExactPoint) -> Result<(Vector<3>, f64)> {
    let v = unstable_direction(g, p, DEFAULT_DEPTH)?;
    let d = linalg::scale(&v, 1.0 / v[2]);
    Ok((d, linalg::norm(&g.linear().from_eigen(&d))))
}

/// One RK4 step in the `u` parameter; returns the new offset and arc gained.
fn rk4_u<G: ExactDynamics>(g: &G, seed: &ExactPoint, o: &Vector<3>, du: f64) -> Result<(Vector<3>, f64)> {
    let at = |o: &Vector<3>| slope(g, &seed.with_offset(o));
    let (k1, a1) = at(o)?;
    let (k2, a2) = at(&linalg::add(o, &linalg::scale(&k1, du / 2.0)))?;
    let (k3, a3) = at(&linalg::add(o, &linalg::scale(&k2, du / 2.0)))?;
    let (k4, a4) = at(&linalg::add(o, &linalg::scale(&k3, du)))?;
    let o1 = std::array::from_fn(|i| o[i] + du / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    Ok((o1, du.abs() / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)))
}

/// Integrates the unstable leaf of `seed` from offset `o` over `u`-length
/// `du` in steps of at most `h`; returns the end offset and arc length.
pub fn unstable_step<G: ExactDynamics>(g: &G, seed: &ExactPoint, o: &Vector<3>, du: f64, h: f64) -> Result<(Vector<3>, f64)> {
    if du == 0.0 {
        return Ok((*o, 0.0));
    }
    let n = (du.abs() / h).ceil().max(1.0) as usize;
    let step = du / n as f64;
    let mut o = *o;
    let mut arc = 0.0;
    for _ in 0..n {
        let (o1, da) = rk4_u(g, seed, &o, step)?;
        o = o1;
        arc += da;
    }
    Ok((o, arc))
}

/// A leaf sampled as a polyline.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub seed: ExactPoint,
    /// Lift of the seed the polyline is drawn from.
    pub anchor: Vector<3>,
    pub field: LeafField,
    /// Eigencoordinate offsets from the seed.
    pub offsets: Vec<Vector<3>>,
    /// Arc length from the seed, signed by direction.
    pub arc: Vec<f64>,
    pub step: f64,
}

impl Leaf {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }
    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
    pub fn exact(&self, k: usize) -> ExactPoint {
        self.seed.with_offset(&self.offsets[k])
    }
    /// The `k`-th point on the lift.
    pub fn point<G: ExactDynamics>(&self, g: &G, k: usize) -> Vector<3> {
        linalg::add(&self.anchor, &g.linear().from_eigen(&self.offsets[k]))
    }
    pub fn points<G: ExactDynamics>(&self, g: &G) -> Vec<Vector<3>> {
        (0..self.len()).map(|k| self.point(g, k)).collect()
    }

    pub fn write_csv<G: ExactDynamics, W: std::io::Write>(&self, g: &G, mut w: W) -> Result<()> {
        writeln!(w, "arc,x,y,z")?;
        for k in 0..self.len() {
            let p = self.point(g, k);
            writeln!(w, "{},{},{},{}", self.arc[k], p[0], p[1], p[2])?;
        }
        Ok(())
    }
}

/// Calls `visit(offset, arc)` at spacing `h` along the leaf, seed included.
fn walk<G: ExactDynamics>(
    g: &G,
    seed: &ExactPoint,
    field: LeafField,
    length: f64,
    h: f64,
    visit: &mut dyn FnMut(&Vector<3>, f64),
) -> Result<()> {
    if !(h > 0.0) {
        return Err(Error::Invalid("leaf step must be positive".into()));
    }
    let a = g.linear();
    let n = (length.abs() / h).ceil() as usize;
    let step = if n == 0 { 0.0 } else { length / n as f64 };
    visit(&[0.0; 3], 0.0);
    match field {
        LeafField::U => {
            let mut o = [0.0; 3];
            for k in 1..=n {
                // Arc-length RK4 on the unit tangent.
                let dir = |o: &Vector<3>| -> Result<Vector<3>> {
                    let v = unstable_direction(g, &seed.with_offset(o), DEFAULT_DEPTH)?;
                    Ok(linalg::scale(&v, 1.0 / linalg::norm(&a.from_eigen(&v))))
                };
                let k1 = dir(&o)?;
                let k2 = dir(&linalg::add(&o, &linalg::scale(&k1, step / 2.0)))?;
                let k3 = dir(&linalg::add(&o, &linalg::scale(&k2, step / 2.0)))?;
                let k4 = dir(&linalg::add(&o, &linalg::scale(&k3, step)))?;
                o = std::array::from_fn(|i| o[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
                visit(&o, step * k as f64);
            }
        }
        LeafField::C | LeafField::Cs { .. } => {
            let e = match field {
                LeafField::Cs { angle } => [angle.cos(), angle.sin(), 0.0],
                _ => [0.0, 1.0, 0.0],
            };
            let e = linalg::scale(&e, 1.0 / linalg::norm(&a.from_eigen(&e)));
            for k in 1..=n {
                let t = step * k as f64;
                visit(&linalg::scale(&e, t), t);
            }
        }
    }
    Ok(())
}

/// Leaf through `seed` (lift `anchor`) of signed arc length `length`.
pub fn integrate_leaf<G: ExactDynamics>(
    g: &G,
    seed: &ExactPoint,
    anchor: &Vector<3>,
    field: LeafField,
    length: f64,
    h: f64,
) -> Result<Leaf> {
    let mut offsets = Vec::new();
    let mut arc = Vec::new();
    walk(g, seed, field, length, h, &mut |o, s| {
        offsets.push(*o);
        arc.push(s);
    })?;
    Ok(Leaf { seed: *seed, anchor: *anchor, field, offsets, arc, step: h })
}

/// As [`integrate_leaf`], seeded at the lattice point nearest `x`.
pub fn integrate_leaf_at<G: ExactDynamics>(g: &G, x: &Vector<3>, field: LeafField, length: f64, h: f64) -> Result<Leaf> {
    integrate_leaf(g, &ExactPoint::from_point(x), x, field, length, h)
}

/// Fraction of the `n³` cells met by the leaf of length `length` through
/// `x`, sampled at a quarter of the cell size.
pub fn leaf_density<G: ExactDynamics>(g: &G, x: &Vector<3>, field: LeafField, length: f64, n: usize) -> Result<f64> {
    let mut cells = GridSet::empty(3, n)?;
    let a = g.linear();
    let seed = ExactPoint::from_point(x);
    walk(g, &seed, field, length, 0.25 / n as f64, &mut |o, _| {
        let p = frac(&linalg::add(x, &a.from_eigen(o)));
        let c = cells.cell_of(&p);
        cells.insert(c);
    })?;
    Ok(cells.coverage())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationOptions {
    pub pairs: usize,
    /// Arc lengths `l^u(x, y)` to test, ascending.
    pub deltas: Vec<f64>,
    pub eps: Vec<f64>,
    /// Bound on the cs-distance from `x` to `z`.
    pub cs_radius: f64,
    pub h: f64,
    pub seed: u64,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        let deltas = (1..=40).map(|k| 0.0025 * k as f64).collect();
        let eps = vec![0.005, 0.01, 0.02, 0.05, 0.1];
        SeparationOptions { pairs: 1000, deltas, eps, cs_radius: 2.0, h: 0.005, seed: 7 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationTable {
    /// `(δ, worst observed separation)`.
    pub worst: Vec<(f64, f64)>,
    /// `(ε, δ(ε))`.
    pub table: Vec<(f64, f64)>,
    pub pairs: usize,
    pub excluded: usize,
}

impl SeparationTable {
    /// `δ(ε)` for the largest tabulated `ε` not above the request.
    pub fn delta_for(&self, eps: f64) -> Option<f64> {
        self.table.iter().filter(|(e, d)| *e <= eps && *d > 0.0).map(|(_, d)| *d).last()
    }
}

/// For `x`, `y` on one unstable leaf at arc `δ` and `z` on the cs-leaf of
/// `x`, measures the arc along the unstable leaf of `z` up to the cs-leaf of
/// `y`. `δ(ε)` is the largest tested `δ` whose worst separation (and that of
/// every smaller `δ`) stays below `ε`.
pub fn leaf_separation_modulus<G: ExactDynamics>(g: &G, opts: &SeparationOptions) -> Result<SeparationTable> {
    let a = g.linear();
    let mut deltas = opts.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = vec![0.0f64; deltas.len()];
    let mut excluded = 0;
    for _ in 0..opts.pairs {
        let x: Vector<3> = std::array::from_fn(|_| rng.gen::<f64>());
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let rad = opts.cs_radius * rng.gen::<f64>().sqrt();
        let dir = a.from_eigen(&[theta.cos(), theta.sin(), 0.0]);
        let z = linalg::add(&x, &linalg::scale(&dir, rad / linalg::norm(&dir)));
        let sx = ExactPoint::from_point(&x);
        let sz = ExactPoint::from_point(&z);
        let run = || -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(deltas.len());
            let (mut ox, mut oz) = ([0.0; 3], [0.0; 3]);
            let mut arc_x = 0.0;
            let mut arc_z = 0.0;
            for &d in &deltas {
                // Advance x's leaf to arc d by u-steps, correcting with the
                // local arc rate.
                while d - arc_x > 1e-13 {
                    let (_, rate) = slope(g, &sx.with_offset(&ox))?;
                    let du = ((d - arc_x) / rate).min(opts.h);
                    let (o1, da) = unstable_step(g, &sx, &ox, du, opts.h)?;
                    oz = unstable_step(g, &sz, &oz, o1[2] - ox[2], opts.h).map(|(o, s)| {
                        arc_z += s;
                        o
                    })?;
                    ox = o1;
                    arc_x += da;
                }
                out.push(arc_z);
            }
            Ok(out)
        };
        match run() {
            Ok(seps) => {
                for (w, s) in worst.iter_mut().zip(seps) {
                    *w = w.max(s);
                }
            }
            Err(Error::DirectionNotConverged(_)) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let table = opts
        .eps
        .iter()
        .map(|&e| {
            let mut best = 0.0;
            for (d, w) in deltas.iter().zip(&worst) {
                if *w < e * (1.0 + 1e-12) {
                    best = *d;
                } else {
                    break;
                }
            }
            (e, best)
        })
        .collect();
    Ok(SeparationTable { worst: deltas.into_iter().zip(worst).collect(), table, pairs: opts.pairs, excluded })
}

/// Calibration persisted alongside the tube.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub delta0: f64,
    pub eps0: f64,
    pub beta: f64,
    pub eta: f64,
    pub table: Vec<(f64, f64)>,
}

/// The union of cs-leaves through an unstable arc `U^u` around a fixed point.
#[derive(Debug, Clone, Serialize)]
pub struct TubeV {
    pub x0: Vector<3>,
    pub delta_p: f64,
    pub beta: f64,
    pub eta: f64,
    pub eps0: f64,
    pub delta0: f64,
    /// Largest `|dc/du|` seen along `U^u`; zero means the arc is straight.
    pub straightness: f64,
    /// Largest `d(x, y)` over sampled `x ∈ V`, `y` on its unstable leaf in V.
    pub bullet_distance: f64,
    pub bullet_samples: usize,
}

impl TubeV {
    fn u_of<G: ExactDynamics>(&self, g: &G, p: &Vector<3>) -> f64 {
        g.linear().to_eigen(&linalg::sub(p, &self.x0))[2]
    }

    /// Membership of a lifted point. The cs-leaves are the planes of constant
    /// `u`, so this is a slab around `x0`.
    pub fn contains<G: ExactDynamics>(&self, g: &G, p: &Vector<3>) -> bool {
        self.u_of(g, p).abs() < self.delta0 / 2.0
    }

    /// Position along `U^u` of the cs-projection of `p`, as arc length from
    /// `x0` (the arc is straight, so this is the `u` coordinate scaled by
    /// `|e_u|`).
    pub fn arc_position<G: ExactDynamics>(&self, g: &G, p: &Vector<3>) -> f64 {
        self.u_of(g, p) * linalg::norm(g.linear().eigenvector(2))
    }

    pub fn calibration(&self, table: &SeparationTable) -> Calibration {
        Calibration { delta0: self.delta0, eps0: self.eps0, beta: self.beta, eta: self.eta, table: table.table.clone() }
    }

    pub fn bullet_holds(&self) -> bool {
        self.bullet_distance < self.delta_p && self.bullet_distance < self.beta
    }
}

/// Chooses `ε0 = min(δ_p, β)/2`, reads `δ0 = δ(ε0)` off the table and checks
/// the first tube property on `samples` seeded pairs.
pub fn build_tube<G: ExactDynamics>(
    g: &G,
    x0: &Vector<3>,
    delta_p: f64,
    beta: f64,
    eta: f64,
    table: Option<&SeparationTable>,
    samples: usize,
    seed: u64,
) -> Result<TubeV> {
    let table = table.ok_or(Error::CalibrationMissing)?;
    let eps0 = 0.5 * delta_p.min(beta);
    let delta0 = table.delta_for(eps0).ok_or(Error::CalibrationMissing)?;
    let a = g.linear();
    let s0 = ExactPoint::from_point(x0);
    let eu_len = linalg::norm(a.eigenvector(2));
    let mut straightness = 0.0f64;
    for k in 0..=20 {
        let u = (k as f64 / 20.0 - 0.5) * delta0 / eu_len;
        let (d, _) = slope(g, &s0.with_offset(&[0.0, 0.0, u]))?;
        straightness = straightness.max(d[0].abs()).max(d[1].abs());
    }
    let mut tube = TubeV { x0: *x0, delta_p, beta, eta, eps0, delta0, straightness, bullet_distance: 0.0, bullet_samples: samples };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = delta0 / 2.0 / eu_len;
    for _ in 0..samples {
        let e = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, (rng.gen::<f64>() * 2.0 - 1.0) * half];
        let x = linalg::add(x0, &a.from_eigen(&e));
        let target = (rng.gen::<f64>() * 2.0 - 1.0) * half;
        let sx = ExactPoint::from_point(&x);
        let (o, _) = unstable_step(g, &sx, &[0.0; 3], target - e[2], 0.005)?;
        let y = linalg::add(&x, &a.from_eigen(&o));
        debug_assert!(tube.contains(g, &y) || (target.abs() - half).abs() < 1e-12);
        tube.bullet_distance = tube.bullet_distance.max(linalg::norm(&linalg::sub(&x, &y)));
    }
    Ok(tube)
}

/// Default search range, in `u`, for [`bracket_foliated`].
pub const BRACKET_RANGE: f64 = 0.5;

/// `F^{cs}(x) ∩ F^u(y)` for lifted points, following the unstable leaf of
/// `y` to the cs-leaf of `x`.
pub fn bracket_foliated<G: ExactDynamics>(g: &G, x: &Vector<3>, y: &Vector<3>, h: f64) -> Result<Vector<3>> {
    let a = g.linear();
    let du = a.to_eigen(&linalg::sub(x, y))[2];
    if du.abs() > BRACKET_RANGE {
        return Err(Error::NoIntersectionInRange);
    }
    let (o, _) = unstable_step(g, &ExactPoint::from_point(y), &[0.0; 3], du, h)?;
    Ok(linalg::add(y, &a.from_eigen(&o)))
}

/// Number of times the unstable leaf of `y`, followed over `±range` in arc
/// length, crosses the cs-leaf of `x`.
pub fn crossing_count<G: ExactDynamics>(g: &G, x: &Vector<3>, y: &Vector<3>, range: f64, h: f64) -> Result<usize> {
    let a = g.linear();
    let ux = a.to_eigen(x)[2];
    let uy = a.to_eigen(y)[2];
    let seed = ExactPoint::from_point(y);
    let mut count = 0;
    for sign in [1.0, -1.0] {
        let mut prev = uy - ux;
        let mut first = true;
        walk(g, &seed, LeafField::U, sign * range, h, &mut |o, _| {
            let v = uy + o[2] - ux;
            if first {
                first = false;
                if sign > 0.0 && v == 0.0 {
                    count += 1;
                }
            } else if (prev < 0.0 && v >= 0.0) || (prev > 0.0 && v <= 0.0) {
                count += 1;
            }
            prev = v;
        })?;
    }
    Ok(count)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainProjection {
    /// `p^{cs}_{x0}(x_i)` for the points of the chain inside the tube.
    pub points: Vec<Vector<3>>,
    /// Largest step bound of each intermediate chain, the input first.
    pub level_eps: Vec<f64>,
    /// Linear reference `(x_i + E^{cs}) ∩ (x_0 + E^u)` and its largest
    /// distance to the projections.
    pub linear_deviation: f64,
}

/// Step bound of Def.-style relations: for `z = F^{cs}(x_i) ∩ F^u(x_{i+1})`,
/// the larger of `d(z, x_{i+1})` and `d(z, x_i)`.
pub fn step_bounds<G: ExactDynamics>(g: &G, pts: &[Vector<3>], h: f64) -> Result<Vec<f64>> {
    pts.windows(2)
        .map(|w| {
            let z = bracket_foliated(g, &w[0], &w[1], h)?;
            Ok(linalg::norm(&linalg::sub(&z, &w[1])).max(linalg::norm(&linalg::sub(&z, &w[0]))))
        })
        .collect()
}

/// Runs the induction `x̄_j = F^u(x_j) ∩ F^{cs}(x_{j+1})` level by level and
/// collects the first point of each level, which is `F^{cs}(x_i) ∩ F^u(x_0)`.
/// Every point except possibly the last must lie in the tube, and each level
/// must keep its step bound within `ε0`.
pub fn project_chain_nonlinear<G: ExactDynamics>(g: &G, tube: &TubeV, chain: &Chain, h: f64) -> Result<ChainProjection> {
    let pts = &chain.points;
    if pts.is_empty() {
        return Err(Error::EmptyChain);
    }
    let inside = pts.len() - 1;
    if let Some(i) = (0..inside).find(|&i| !tube.contains(g, &pts[i])) {
        return Err(Error::ChainLeftTube(i));
    }
    let n = if tube.contains(g, &pts[inside]) { pts.len() } else { inside };
    let mut level: Vec<Vector<3>> = pts[..n].to_vec();
    let mut out = vec![level[0]];
    let mut level_eps = Vec::new();
    while level.len() > 1 {
        let bounds = step_bounds(g, &level, h)?;
        let mut worst = 0.0f64;
        for (i, &b) in bounds.iter().enumerate() {
            if b > tube.eps0 {
                return Err(Error::StepBoundViolated { index: i, value: b, bound: tube.eps0 });
            }
            worst = worst.max(b);
        }
        level_eps.push(worst);
        level = level.windows(2).map(|w| bracket_foliated(g, &w[1], &w[0], h)).collect::<Result<_>>()?;
        out.push(level[0]);
    }
    let a = g.linear();
    let linear_deviation = out
        .iter()
        .zip(&pts[..n])
        .map(|(p, x)| linalg::norm(&linalg::sub(p, &product::bracket_linear(a, x, &pts[0]))))
        .fold(0.0, f64::max);
    Ok(ChainProjection { points: out, level_eps, linear_deviation })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    /// `+1` for `U^{u+}`, `−1` for `U^{u−}`.
    pub side: i32,
    pub max_gap: f64,
    pub positions: usize,
}

/// Largest gap between consecutive projections on the half of `U^u` the
/// chain exits through, endpoints `0` and `δ0/2` included.
pub fn projection_gaps<G: ExactDynamics>(g: &G, tube: &TubeV, proj: &ChainProjection, exit: &Vector<3>) -> GapReport {
    let side = if tube.arc_position(g, exit) >= 0.0 { 1.0 } else { -1.0 };
    let half = tube.delta0 / 2.0;
    let mut pos: Vec<f64> = proj
        .points
        .iter()
        .map(|p| side * tube.arc_position(g, p))
        .filter(|&t| (0.0..=half).contains(&t))
        .collect();
    pos.push(0.0);
    pos.push(half);
    pos.sort_by(f64::total_cmp);
    let max_gap = pos.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    GapReport { side: side as i32, max_gap, positions: pos.len() - 2 }
}

/// Straight chain from `x0` towards `x0 + n` with step `step`, cut after the
/// first point outside the tube.
pub fn loop_chain<G: ExactDynamics>(g: &G, tube: &TubeV, x0: &Vector<3>, n: &[i64; 3], step: f64) -> Result<Chain> {
    let end = std::array::from_fn(|i| x0[i] + n[i] as f64);
    let len = linalg::norm(&linalg::sub(&end, x0));
    let k = (len / step).ceil().max(1.0) as usize;
    let mut pts = Vec::new();
    for j in 0..=k {
        let t = j as f64 / k as f64;
        let p = std::array::from_fn(|i| x0[i] + t * (end[i] - x0[i]));
        let outside = !tube.contains(g, &p);
        pts.push(p);
        if outside {
            break;
        }
    }
    product::make_chain(pts, g.linear())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::da::DaMap;
    use crate::ToralAutomorphism;

    fn b() -> ToralAutomorphism<3> {
        ToralAutomorphism::classify_t3([[0, 0, 1], [1, 0, -38], [0, 1, 40]]).unwrap()
    }

    #[test]
    fn linear_unstable_leaf_is_straight() {
        let a = b();
        let x = [0.1, 0.2, 0.3];
        let leaf = integrate_leaf_at(&a, &x, LeafField::U, 1.0, 0.05).unwrap();
        let eu = a.eigenvector(2);
        for k in 0..leaf.len() {
            let p = leaf.point(&a, k);
            let want = linalg::add(&x, &linalg::scale(eu, leaf.arc[k]));
            assert!(linalg::norm(&linalg::sub(&p, &want)) < 1e-9 * leaf.arc[k].max(1.0));
        }
    }

    #[test]
    fn center_leaf_through_x1_holds_bifurcation_points() {
        let a = b();
        let f = DaMap::build(a.clone(), [0.5; 3], 0.2, 1.2, 0.03).unwrap();
        let leaf = integrate_leaf_at(&f, &[0.5; 3], LeafField::C, 0.03, 0.001).unwrap();
        let end = leaf.point(&f, leaf.len() - 1);
        let x2 = f.bifurcation_points()[1];
        assert!(linalg::norm(&linalg::sub(&end, &x2)) < 1e-12);
    }

    #[test]
    fn bracket_of_a_point_with_itself() {
        let a = b();
        let f = DaMap::build(a, [0.5; 3], 0.2, 1.2, 0.03).unwrap();
        let x = [0.52, 0.48, 0.5];
        assert_eq!(bracket_foliated(&f, &x, &x, 0.01).unwrap(), x);
    }
}
