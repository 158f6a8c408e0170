//! The semiconjugacy `H = id + h` with `A∘H = H∘G`.
//!
//! In eigencoordinates the equation splits into scalar equations
//! `λ_i h_i(x) = d_i(x) + h_i(G x)` with `d = G − A`. The stable and center
//! parts are contractions when read backwards, the unstable part when read
//! forwards. A grid fixed point gives an interpolant `h̃`; off-grid values
//! pull `h̃` back along exact orbits, which shrinks its error by `λ_i^K`.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exact::{ExactDynamics, ExactPoint};
use crate::grid::GridSet;
use crate::linalg::{self, Vector};
use crate::torus::{frac, torus_dist};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Nodes per axis.
    pub m: usize,
    /// Stop when the sup-norm update falls below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Bound on the truncation error of off-grid evaluation.
    pub refine_target: f64,
    /// Test grid resolution for the residual; 0 skips the check.
    pub test_resolution: usize,
    pub node_limit: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { m: 64, tol: 1e-8, max_iters: 20_000, refine_target: 1e-7, test_resolution: 128, node_limit: 1 << 24 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Semiconjugacy {
    pub m: usize,
    /// Eigencomponents of `h̃` at the nodes; empty when identically zero.
    #[serde(skip)]
    pub h: [Vec<f64>; 3],
    pub active: [bool; 3],
    pub iterations: usize,
    pub last_update: f64,
    /// Pullback depth per component.
    pub depth: [usize; 3],
    /// `sup ‖G − A‖` over the nodes.
    pub r: f64,
    /// `sup ‖H − id‖` over the nodes.
    pub cr_nodes: f64,
    /// The same, with the supplied extremal points included.
    pub cr_bound: f64,
    pub c_ratio: f64,
    /// `sup ‖A∘H − H∘G‖` on the test grid, with refined evaluation.
    pub residual: f64,
    /// The same with pure interpolation.
    pub grid_residual: f64,
    pub test_resolution: usize,
    /// Fraction of the `(M/2)³` grid hit by images of nodes.
    pub surjectivity: f64,
}

#[inline]
fn node(m: usize, n: usize) -> Vector<3> {
    let mf = m as f64;
    [(n / (m * m)) as f64 / mf, ((n / m) % m) as f64 / mf, (n % m) as f64 / mf]
}

/// Periodic trilinear interpolation of node values.
pub fn interpolate(field: &[f64], m: usize, x: &Vector<3>) -> f64 {
    if field.is_empty() {
        return 0.0;
    }
    let mf = m as f64;
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut w = [0.0; 3];
    for a in 0..3 {
        let t = x[a].rem_euclid(1.0) * mf;
        let f = t.floor();
        let i = (f as usize) % m;
        lo[a] = i;
        hi[a] = (i + 1) % m;
        w[a] = t - f;
    }
    let at = |i: usize, j: usize, k: usize| field[(i * m + j) * m + k];
    let mut s = 0.0;
    for (ci, wi) in [(lo[0], 1.0 - w[0]), (hi[0], w[0])] {
        for (cj, wj) in [(lo[1], 1.0 - w[1]), (hi[1], w[1])] {
            let wij = wi * wj;
            if wij == 0.0 {
                continue;
            }
            s += wij * ((1.0 - w[2]) * at(ci, cj, lo[2]) + w[2] * at(ci, cj, hi[2]));
        }
    }
    s
}

pub fn solve_h<G: ExactDynamics>(g: &G, opts: &SolveOptions) -> Result<Semiconjugacy> {
    solve_h_with(g, opts, &[])
}

/// As [`solve_h`]; `extremal` points are added to the sample for the
/// `‖H − id‖` bound.
pub fn solve_h_with<G: ExactDynamics>(g: &G, opts: &SolveOptions, extremal: &[ExactPoint]) -> Result<Semiconjugacy> {
    let m = opts.m;
    let nodes = (m as u64).saturating_pow(3);
    if m < 2 || nodes > opts.node_limit {
        return Err(Error::ResolutionOverflow { cells: nodes, limit: opts.node_limit });
    }
    let nodes = nodes as usize;
    let a = g.linear();
    let lam = *a.eigenvalues();

    let mut pre = Vec::with_capacity(nodes);
    let mut post = Vec::with_capacity(nodes);
    let mut d_pre = Vec::with_capacity(nodes);
    let mut d_node = Vec::with_capacity(nodes);
    let mut active = [false; 3];
    let mut r = 0.0f64;
    let mut r_comp = [0.0f64; 3];
    for n in 0..nodes {
        let x = node(m, n);
        let p = ExactPoint::from_point(&x);
        let dn = g.displacement(&x);
        let mut q = p;
        g.retreat(&mut q);
        let y = q.point(a);
        let dy = g.displacement(&y);
        let mut q = p;
        g.advance(&mut q);
        r = r.max(linalg::norm(&a.from_eigen(&dn)));
        for i in 0..3 {
            active[i] |= dn[i] != 0.0 || dy[i] != 0.0;
            r_comp[i] = r_comp[i].max(dn[i].abs()).max(dy[i].abs());
        }
        pre.push(y);
        post.push(q.point(a));
        d_pre.push(dy);
        d_node.push(dn);
    }

    let mut h: [Vec<f64>; 3] = Default::default();
    for i in 0..3 {
        if active[i] {
            h[i] = vec![0.0; nodes];
        }
    }
    let mut next = h.clone();
    let mut iterations = 0;
    let mut last_update = 0.0;
    if active.iter().any(|&b| b) {
        loop {
            iterations += 1;
            let mut update = 0.0f64;
            for i in 0..3 {
                if !active[i] {
                    continue;
                }
                let unstable = lam[i] > 1.0;
                for n in 0..nodes {
                    let v = if unstable {
                        (interpolate(&h[i], m, &post[n]) + d_node[n][i]) / lam[i]
                    } else {
                        lam[i] * interpolate(&h[i], m, &pre[n]) - d_pre[n][i]
                    };
                    update = update.max((v - h[i][n]).abs());
                    next[i][n] = v;
                }
            }
            std::mem::swap(&mut h, &mut next);
            last_update = update;
            if update < opts.tol {
                break;
            }
            if iterations >= opts.max_iters || !update.is_finite() {
                return Err(Error::NoConvergence { iterations, residual: update });
            }
        }
    }
    drop((pre, post, d_pre, d_node));

    let mut depth = [0usize; 3];
    for i in 0..3 {
        if !active[i] {
            continue;
        }
        let sup = h[i].iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let rate = if lam[i] > 1.0 { 1.0 / lam[i] } else { lam[i].abs() };
        // |h_i| ≤ sup|d_i| / |λ_i − 1| from the series.
        let tail = sup + r_comp[i] / (lam[i] - 1.0).abs();
        if tail > opts.refine_target {
            depth[i] = ((opts.refine_target / tail).ln() / rate.ln()).ceil().max(0.0) as usize;
        }
    }

    let mut s = Semiconjugacy {
        m,
        h,
        active,
        iterations,
        last_update,
        depth,
        r,
        cr_nodes: 0.0,
        cr_bound: 0.0,
        c_ratio: 0.0,
        residual: 0.0,
        grid_residual: 0.0,
        test_resolution: opts.test_resolution,
        surjectivity: 0.0,
    };

    let half = (m / 2).max(1);
    let mut image = GridSet::empty(3, half)?;
    let mut cr = 0.0f64;
    for n in 0..nodes {
        let x = node(m, n);
        let hx = s.displacement(g, &x);
        cr = cr.max(linalg::norm(&hx));
        let y = frac(&linalg::add(&x, &hx));
        let cell = image.cell_of(&y);
        image.insert(cell);
    }
    s.cr_nodes = cr;
    for p in extremal {
        cr = cr.max(linalg::norm(&a.from_eigen(&s.pair_exact(g, *p, false).hx)));
    }
    s.cr_bound = cr;
    s.c_ratio = if r > 0.0 { cr / r } else { 0.0 };
    s.surjectivity = image.coverage();

    if opts.test_resolution > 0 {
        let (res, grid_res) = s.residual_on_grid(g, opts.test_resolution);
        s.residual = res;
        s.grid_residual = grid_res;
    }
    Ok(s)
}

/// `h` at `x` and at `G x`, from the orbit of the lattice point nearest `x`.
struct Pair {
    x: Vector<3>,
    gx: Vector<3>,
    d: Vector<3>,
    hx: Vector<3>,
    hgx: Vector<3>,
}

impl Semiconjugacy {
    fn interp(&self, i: usize, x: &Vector<3>) -> f64 {
        interpolate(&self.h[i], self.m, x)
    }

    /// `h̃` in eigencoordinates, by interpolation alone.
    pub fn grid_value(&self, x: &Vector<3>) -> Vector<3> {
        std::array::from_fn(|i| self.interp(i, x))
    }

    fn pair<G: ExactDynamics>(&self, g: &G, x: &Vector<3>, with_image: bool) -> Pair {
        self.pair_exact(g, ExactPoint::from_point(x), with_image)
    }

    fn pair_exact<G: ExactDynamics>(&self, g: &G, p0: ExactPoint, with_image: bool) -> Pair {
        let a = g.linear();
        let lam = *a.eigenvalues();
        let z0 = p0.point(a);
        let d0 = g.displacement(&z0);
        let mut gp = p0;
        g.advance(&mut gp);
        let gx = gp.point(a);
        let mut hx = [0.0; 3];
        let mut hgx = [0.0; 3];

        let back: Vec<usize> = (0..3).filter(|&i| self.active[i] && lam[i] < 1.0).collect();
        let kb = back.iter().map(|&i| self.depth[i]).max().unwrap_or(0);
        for &i in &back {
            if self.depth[i] == 0 {
                hx[i] = self.interp(i, &z0);
                hgx[i] = self.interp(i, &gx);
            }
        }
        if kb > 0 {
            let mut p = p0;
            let mut w = [1.0; 3];
            let mut prev_z = z0;
            let mut prev_d = d0;
            for n in 1..=kb {
                g.retreat(&mut p);
                let z = p.point(a);
                let d = g.displacement(&z);
                for &i in &back {
                    if n > self.depth[i] {
                        continue;
                    }
                    hx[i] -= w[i] * d[i];
                    hgx[i] -= w[i] * prev_d[i];
                    w[i] *= lam[i];
                    if n == self.depth[i] {
                        hx[i] += w[i] * self.interp(i, &z);
                        if with_image {
                            hgx[i] += w[i] * self.interp(i, &prev_z);
                        }
                    }
                }
                prev_z = z;
                prev_d = d;
            }
        }

        let u = 2;
        if self.active[u] {
            let k = self.depth[u];
            let mut p = p0;
            let mut w = 1.0;
            let mut z = z0;
            let mut d = d0;
            for n in 0..=k {
                g.advance(&mut p);
                let z1 = p.point(a);
                let d1 = g.displacement(&z1);
                if n < k {
                    w /= lam[u];
                    hx[u] += w * d[u];
                    hgx[u] += w * d1[u];
                } else {
                    hx[u] += w * self.interp(u, &z);
                    hgx[u] += w * self.interp(u, &z1);
                }
                z = z1;
                d = d1;
            }
        }
        Pair { x: z0, gx, d: d0, hx, hgx }
    }

    /// `h` at an exact point, in eigencoordinates.
    pub fn eigen_value_exact<G: ExactDynamics>(&self, g: &G, p: &ExactPoint) -> Vector<3> {
        self.pair_exact(g, *p, false).hx
    }

    /// `h(x)` in eigencoordinates.
    pub fn eigen_value<G: ExactDynamics>(&self, g: &G, x: &Vector<3>) -> Vector<3> {
        self.pair(g, x, false).hx
    }

    /// `H(x) − x` in standard coordinates.
    pub fn displacement<G: ExactDynamics>(&self, g: &G, x: &Vector<3>) -> Vector<3> {
        g.linear().from_eigen(&self.eigen_value(g, x))
    }

    /// `H(x)` on the lift through `x`.
    pub fn apply<G: ExactDynamics>(&self, g: &G, x: &Vector<3>) -> Vector<3> {
        linalg::add(x, &self.displacement(g, x))
    }

    /// Sup of `‖A H(x) − H(G x)‖` at the `n³` cell centers, refined and by
    /// pure interpolation.
    pub fn residual_on_grid<G: ExactDynamics>(&self, g: &G, n: usize) -> (f64, f64) {
        let a = g.linear();
        let lam = *a.eigenvalues();
        let nf = n as f64;
        let mut worst = 0.0f64;
        let mut worst_grid = 0.0f64;
        for idx in 0..n * n * n {
            let x = [
                ((idx / (n * n)) as f64 + 0.5) / nf,
                (((idx / n) % n) as f64 + 0.5) / nf,
                ((idx % n) as f64 + 0.5) / nf,
            ];
            let p = self.pair(g, &x, true);
            let e: Vector<3> = std::array::from_fn(|i| lam[i] * p.hx[i] - p.d[i] - p.hgx[i]);
            worst = worst.max(linalg::norm(&a.from_eigen(&e)));
            let hx = self.grid_value(&p.x);
            let hg = self.grid_value(&p.gx);
            let e: Vector<3> = std::array::from_fn(|i| lam[i] * hx[i] - p.d[i] - hg[i]);
            worst_grid = worst_grid.max(linalg::norm(&a.from_eigen(&e)));
        }
        (worst, worst_grid)
    }

    /// Writes `h̃` in standard coordinates as HSC1.
    pub fn write_hsc<G: ExactDynamics, W: Write>(&self, g: &G, w: &mut W) -> Result<()> {
        let a = g.linear();
        let nodes = self.m * self.m * self.m;
        let mut field = Vec::with_capacity(nodes);
        for n in 0..nodes {
            let e: Vector<3> = std::array::from_fn(|i| if self.h[i].is_empty() { 0.0 } else { self.h[i][n] });
            field.push(a.from_eigen(&e));
        }
        write_hsc(w, self.m, &field)
    }
}

/// `HSC1`: magic, `M` as u32 LE, then three f64 LE per node with the first
/// axis varying slowest.
pub fn write_hsc<W: Write>(w: &mut W, m: usize, field: &[Vector<3>]) -> Result<()> {
    if field.len() != m * m * m {
        return Err(Error::Invalid(format!("field has {} nodes, expected {}", field.len(), m * m * m)));
    }
    w.write_all(b"HSC1")?;
    w.write_all(&(m as u32).to_le_bytes())?;
    for v in field {
        for c in v {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_hsc<R: Read>(r: &mut R) -> Result<(usize, Vec<Vector<3>>)> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head)?;
    if &head[..4] != b"HSC1" {
        return Err(Error::Invalid("bad HSC1 magic".into()));
    }
    let m = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let mut field = Vec::with_capacity(m * m * m);
    let mut buf = [0u8; 24];
    for _ in 0..m * m * m {
        r.read_exact(&mut buf)?;
        field.push(std::array::from_fn(|i| f64::from_le_bytes(buf[8 * i..8 * i + 8].try_into().unwrap())));
    }
    Ok((m, field))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusRow {
    pub radius: f64,
    pub value: f64,
}

/// For each radius, the largest `d(H x, H y)` seen over sampled pairs at
/// distance at most that radius. Pairs are drawn at each listed radius and
/// the table is the running maximum.
pub fn modulus_of_continuity<G: ExactDynamics>(
    s: &Semiconjugacy,
    g: &G,
    radii: &[f64],
    pairs: usize,
    seed: u64,
) -> Vec<ModulusRow> {
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&i, &j| radii[i].total_cmp(&radii[j]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(Vector<3>, Vector<3>)> = (0..pairs)
        .map(|_| {
            let x: Vector<3> = std::array::from_fn(|_| rng.gen::<f64>());
            let v: Vector<3> = std::array::from_fn(|_| rng.gen::<f64>() * 2.0 - 1.0);
            let n = linalg::norm(&v).max(1e-12);
            (x, linalg::scale(&v, 1.0 / n))
        })
        .collect();
    let hx: Vec<Vector<3>> = samples.iter().map(|(x, _)| s.apply(g, x)).collect();
    let mut out = vec![ModulusRow { radius: 0.0, value: 0.0 }; radii.len()];
    let mut running = 0.0f64;
    for &i in &order {
        let r = radii[i];
        if r > 0.0 {
            for (k, (x, v)) in samples.iter().enumerate() {
                let y = linalg::add(x, &linalg::scale(v, r));
                running = running.max(torus_dist(&hx[k], &s.apply(g, &y)));
            }
        }
        out[i] = ModulusRow { radius: r, value: running };
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafItem {
    CuCs,
    C,
    ULine,
    Transversality,
    FiberCenter,
}

impl LeafItem {
    pub const ALL: [LeafItem; 5] = [LeafItem::CuCs, LeafItem::C, LeafItem::ULine, LeafItem::Transversality, LeafItem::FiberCenter];

    pub fn statement(self) -> &'static str {
        match self {
            LeafItem::CuCs => "H maps cs- and cu-leaves into the linear cs- and cu-planes through the image",
            LeafItem::C => "H maps center leaves into linear center lines",
            LeafItem::ULine => "H maps each unstable leaf monotonically onto the line H(x) + E^u",
            LeafItem::Transversality => "cs(x) meets u(y) exactly once, and H carries the bracket to the linear bracket",
            LeafItem::FiberCenter => "points with equal image under H share a center leaf",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LeafCheckOptions {
    pub samples: usize,
    pub seed: u64,
    /// Allowed deviation.
    pub tolerance: f64,
    /// Half-length of sampled unstable leaves.
    pub leaf_length: f64,
    pub h: f64,
    /// Center segment `(x, half_length)` expected to collapse under H.
    pub fiber: Option<(Vector<3>, f64)>,
    pub horizon: usize,
}

impl LeafCheckOptions {
    /// Tolerance of ten times the measured residual, floored at rounding
    /// level.
    pub fn for_residual(residual: f64) -> Self {
        LeafCheckOptions {
            samples: 1000,
            seed: 11,
            tolerance: (10.0 * residual).max(1e-12),
            leaf_length: 0.1,
            h: 0.005,
            fiber: None,
            horizon: 60,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafCheck {
    pub item: LeafItem,
    pub statement: &'static str,
    pub samples: usize,
    pub deviation: f64,
    pub tolerance: f64,
    /// Item-specific count of structural failures: monotonicity breaks,
    /// crossing counts other than one, pairs not collapsed.
    pub violations: usize,
    pub witness: Option<Vector<3>>,
    pub passed: bool,
}

fn plane_distance(normal: &Vector<3>, d: &Vector<3>) -> f64 {
    linalg::dot(normal, d).abs() / linalg::norm(normal)
}

fn line_distance(dir: &Vector<3>, d: &Vector<3>) -> f64 {
    let e = linalg::scale(dir, 1.0 / linalg::norm(dir));
    linalg::norm(&linalg::sub(d, &linalg::scale(&e, linalg::dot(d, &e))))
}

/// Checks one item of the correspondence between the foliations of `G` and
/// the linear foliations of `A` under `H`.
pub fn check_leaf_correspondence<G: ExactDynamics>(s: &Semiconjugacy, g: &G, item: LeafItem, opts: &LeafCheckOptions) -> Result<LeafCheck> {
    use crate::foliation::{bracket_foliated, crossing_count, integrate_leaf, LeafField};
    let a = g.linear();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut deviation = 0.0f64;
    let mut violations = 0;
    let mut witness: Option<Vector<3>> = None;
    let mut samples = 0;
    fn note(dev: f64, x: &Vector<3>, deviation: &mut f64, witness: &mut Option<Vector<3>>) {
        if dev > *deviation {
            *deviation = dev;
            *witness = Some(*x);
        }
    }
    let random_point = |rng: &mut ChaCha8Rng| -> Vector<3> { std::array::from_fn(|_| rng.gen::<f64>()) };
    match item {
        LeafItem::CuCs => {
            let duals = a.dual_basis();
            while samples < opts.samples {
                let x = random_point(&mut rng);
                let hx = s.apply(g, &x);
                let t = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5];
                let y_cs = linalg::add(&x, &a.from_eigen(&[0.1 * t[0], 0.1 * t[1], 0.0]));
                let y_cu = linalg::add(&x, &a.from_eigen(&[0.0, 0.1 * t[0], 0.1 * t[1]]));
                let d_cs = linalg::sub(&s.apply(g, &y_cs), &hx);
                let d_cu = linalg::sub(&s.apply(g, &y_cu), &hx);
                note(plane_distance(&duals[2], &d_cs), &y_cs, &mut deviation, &mut witness);
                note(plane_distance(&duals[0], &d_cu), &y_cu, &mut deviation, &mut witness);
                samples += 2;
            }
        }
        LeafItem::C => {
            let ec = *a.eigenvector(1);
            while samples < opts.samples {
                let x = random_point(&mut rng);
                let y = linalg::add(&x, &linalg::scale(&ec, rng.gen::<f64>() - 0.5));
                let d = linalg::sub(&s.apply(g, &y), &s.apply(g, &x));
                note(line_distance(&ec, &d), &y, &mut deviation, &mut witness);
                samples += 1;
            }
        }
        LeafItem::ULine => {
            let eu = *a.eigenvector(2);
            while samples < opts.samples {
                let x = match &opts.fiber {
                    Some((c, r)) if rng.gen::<bool>() => {
                        let t: Vector<3> = std::array::from_fn(|_| (rng.gen::<f64>() - 0.5) * 2.0 * r);
                        linalg::add(c, &t)
                    }
                    _ => random_point(&mut rng),
                };
                let seed = ExactPoint::from_point(&x);
                let hx = s.eigen_value_exact(g, &seed);
                for sign in [1.0, -1.0] {
                    let leaf = integrate_leaf(g, &seed, &x, LeafField::U, sign * opts.leaf_length, opts.h)?;
                    let mut prev_u = 0.0;
                    for k in 1..leaf.len() {
                        let o = leaf.offsets[k];
                        let hy = s.eigen_value_exact(g, &leaf.exact(k));
                        let de: Vector<3> = std::array::from_fn(|i| o[i] + hy[i] - hx[i]);
                        let d = a.from_eigen(&de);
                        note(line_distance(&eu, &d), &leaf.point(g, k), &mut deviation, &mut witness);
                        if sign * (de[2] - prev_u) <= 0.0 {
                            violations += 1;
                        }
                        prev_u = de[2];
                        samples += 1;
                    }
                }
            }
        }
        LeafItem::Transversality => {
            while samples < opts.samples {
                let x = random_point(&mut rng);
                let v: Vector<3> = std::array::from_fn(|_| (rng.gen::<f64>() - 0.5) * 0.1);
                let y = linalg::add(&x, &v);
                let z = bracket_foliated(g, &x, &y, opts.h)?;
                if crossing_count(g, &x, &y, 0.3, opts.h)? != 1 {
                    violations += 1;
                    witness = Some(y);
                }
                // z as an exact point on the leaf of y, to evaluate H on it.
                let o = a.to_eigen(&linalg::sub(&z, &y));
                let zy = ExactPoint::from_point(&y).with_offset(&[0.0, o[1], o[2]]);
                let hz = linalg::add(&z, &a.from_eigen(&s.eigen_value_exact(g, &zy)));
                let want = a.bracket(&s.apply(g, &x), &s.apply(g, &y));
                note(linalg::norm(&linalg::sub(&hz, &want)), &z, &mut deviation, &mut witness);
                samples += 1;
            }
        }
        LeafItem::FiberCenter => {
            if let Some((c, half)) = opts.fiber {
                let base = ExactPoint::from_point(&c);
                let ec = *a.eigenvector(1);
                while samples < opts.samples {
                    let t1 = (rng.gen::<f64>() * 2.0 - 1.0) * half;
                    let t2 = (rng.gen::<f64>() * 2.0 - 1.0) * half;
                    let p = base.with_offset(&[0.0, t1, 0.0]);
                    let q = base.with_offset(&[0.0, t2, 0.0]);
                    let gap = crate::exact::expansivity_gap(g, &p, &q, opts.horizon);
                    if gap > 2.0 * half * (1.0 + 1e-9) {
                        violations += 1;
                    }
                    let hp = a.from_eigen(&linalg::add(&[0.0, t1, 0.0], &s.eigen_value_exact(g, &p)));
                    let hq = a.from_eigen(&linalg::add(&[0.0, t2, 0.0], &s.eigen_value_exact(g, &q)));
                    let image_gap = linalg::norm(&linalg::sub(&hp, &hq));
                    let transverse = line_distance(&ec, &a.from_eigen(&[0.0, t2 - t1, 0.0]));
                    note(image_gap.max(transverse), &linalg::add(&c, &linalg::scale(&ec, t1)), &mut deviation, &mut witness);
                    samples += 1;
                }
            }
        }
    }
    let passed = deviation <= opts.tolerance && violations == 0;
    Ok(LeafCheck { item, statement: item.statement(), samples, deviation, tolerance: opts.tolerance, violations, witness, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::AffineShift;
    use crate::ToralAutomorphism;

    fn b() -> ToralAutomorphism<3> {
        ToralAutomorphism::classify_t3([[0, 0, 1], [1, 0, -38], [0, 1, 40]]).unwrap()
    }

    #[test]
    fn identity_for_linear_map() {
        let a = b();
        let s = solve_h(&a, &SolveOptions { m: 8, test_resolution: 4, ..Default::default() }).unwrap();
        assert_eq!(s.residual, 0.0);
        assert_eq!(s.cr_bound, 0.0);
        assert_eq!(s.iterations, 0);
        assert_eq!(s.surjectivity, 1.0);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_is_periodic() {
        let m = 4;
        let f: Vec<f64> = (0..64).map(|i| i as f64).collect();
        for n in 0..64 {
            assert_eq!(interpolate(&f, m, &node(m, n)), n as f64);
        }
        let x = [0.1, 0.6, 0.95];
        assert!((interpolate(&f, m, &x) - interpolate(&f, m, &[1.1, -0.4, 2.95])).abs() < 1e-12);
    }

    #[test]
    fn hsc_round_trip() {
        let a = b();
        let g = AffineShift::new(a, [0.01, -0.02, 0.005]);
        let s = solve_h(&g, &SolveOptions { m: 4, test_resolution: 0, tol: 1e-13, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        s.write_hsc(&g, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 64 * 24);
        let (m, f) = read_hsc(&mut buf.as_slice()).unwrap();
        assert_eq!(m, 4);
        assert!((f[0][0] - f[63][0]).abs() < 1e-12);
    }
}
