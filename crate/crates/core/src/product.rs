//! Linear local product structure: brackets on grids, loop subgroups,
//! density of projected loop displacements and chain propagation.

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{offsets_within, GridSet};
use crate::invariant::Horseshoe;
use crate::lattice::{IVec, LatticeSubgroup};
use crate::linalg::{self, Vector};
use crate::torus::ToralAutomorphism;

/// A δ-adapted loop at the basepoint and its class in `π₁(T³) = ℤ³`.
#[derive(Debug, Clone, Serialize)]
pub struct LoopClass {
    pub basepoint: Vector<3>,
    pub displacement: IVec,
    /// Lifted integer cell coordinates; consecutive entries are within δ
    /// and the last equals the first plus `N·displacement`.
    pub witness: Vec<IVec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaDelta {
    pub subgroup: LatticeSubgroup,
    /// Loops whose displacement enlarged the subgroup (at most `max_loops`).
    pub loops: Vec<LoopClass>,
    pub cells: usize,
    pub edges: usize,
}

/// Upper bound on the edges of the δ-graph.
pub const EDGE_LIMIT: u64 = 1 << 31;

/// Subgroup of `ℤ³` generated by the displacements of δ-adapted loops at
/// `x0` through cells of `s`. Cells are joined when their centers are closer
/// than δ; each non-tree edge of a breadth-first spanning tree closes a
/// fundamental loop. All edges are visited, so the result depends only on
/// the δ-graph.
pub fn gamma_delta(s: &GridSet, x0: &Vector<3>, delta: f64, max_loops: usize) -> Result<GammaDelta> {
    assert_eq!(s.dim(), 3);
    let n = s.resolution() as i64;
    let root = s.cell_of(x0);
    if !s.contains(root) {
        return Err(Error::BasepointMissing);
    }
    let offs = offsets_within(3, delta * n as f64);
    let est = s.count() as u64 * offs.len() as u64;
    if est > EDGE_LIMIT {
        return Err(Error::GraphTooLarge { edges: est, limit: EDGE_LIMIT });
    }
    let mut lift: Vec<Option<IVec>> = vec![None; s.cells()];
    let mut parent = vec![usize::MAX; s.cells()];
    let rc = s.coords(root);
    lift[root] = Some(rc);
    let mut queue = VecDeque::from([root]);
    let mut sub = LatticeSubgroup::trivial();
    let mut loops = Vec::new();
    let mut edges = 0usize;
    let mut cells = 0usize;
    while let Some(u) = queue.pop_front() {
        cells += 1;
        let lu = lift[u].expect("queued cells are lifted");
        for o in &offs {
            let lv_new = [lu[0] + o[0], lu[1] + o[1], lu[2] + o[2]];
            let v = s.index(&lv_new);
            if !s.contains(v) {
                continue;
            }
            edges += 1;
            match lift[v] {
                None => {
                    lift[v] = Some(lv_new);
                    parent[v] = u;
                    queue.push_back(v);
                }
                Some(lv) => {
                    let k: IVec = std::array::from_fn(|i| (lv_new[i] - lv[i]) / n);
                    if k != [0, 0, 0] && sub.insert(k) && loops.len() < max_loops {
                        loops.push(LoopClass {
                            basepoint: *x0,
                            displacement: k,
                            witness: loop_witness(&lift, &parent, root, u, v, &lv_new, &lv),
                        });
                    }
                }
            }
        }
    }
    Ok(GammaDelta { subgroup: sub, loops, cells, edges: edges / 2 })
}

fn tree_path(lift: &[Option<IVec>], parent: &[usize], root: usize, mut c: usize) -> Vec<IVec> {
    let mut path = vec![lift[c].expect("tree cell")];
    while c != root {
        c = parent[c];
        path.push(lift[c].expect("tree cell"));
    }
    path.reverse();
    path
}

fn loop_witness(lift: &[Option<IVec>], parent: &[usize], root: usize, u: usize, v: usize, lv_new: &IVec, lv: &IVec) -> Vec<IVec> {
    let mut w = tree_path(lift, parent, root, u);
    let shift: IVec = std::array::from_fn(|i| lv_new[i] - lv[i]);
    let back = tree_path(lift, parent, root, v);
    for p in back.iter().rev() {
        w.push(std::array::from_fn(|i| p[i] + shift[i]));
    }
    w
}

/// How projected positions are brought into the window `[0, w]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reduction {
    /// Keep positions that fall in the window.
    Window,
    /// Reduce positions modulo the window length (circular gaps).
    Modulo,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapStats {
    pub window: f64,
    pub positions: Vec<f64>,
    /// Gap following each position (the last one wraps around in modulo
    /// mode, reaches the window end otherwise).
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    pub combinations: usize,
    pub shell: i64,
}

impl GapStats {
    /// Number of distinct gap lengths, merging lengths closer than `tol`.
    pub fn distinct_gaps(&self, tol: f64) -> usize {
        let mut g = self.gaps.clone();
        g.sort_by(f64::total_cmp);
        let mut count = 0;
        let mut last = f64::NEG_INFINITY;
        for x in g {
            if x - last > tol {
                count += 1;
                last = x;
            }
        }
        count
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "position,gap")?;
        for (p, g) in self.positions.iter().zip(&self.gaps) {
            writeln!(w, "{p},{g}")?;
        }
        Ok(())
    }
}

/// Unstable coordinates of integer combinations of the subgroup basis, with
/// coefficients in sup-norm shells `0, 1, …` as long as the total count
/// stays within `budget`.
pub fn projection_density(g: &LatticeSubgroup, a: &ToralAutomorphism<3>, window: f64, budget: usize, reduction: Reduction) -> GapStats {
    let basis = &g.hnf_basis;
    let r = basis.len();
    let proj: Vec<f64> = basis
        .iter()
        .map(|b| a.to_eigen(&b.map(|x| x as f64))[ToralAutomorphism::<3>::U])
        .collect();
    let mut shell = 0i64;
    if r > 0 {
        while ((2 * (shell + 1) + 1) as f64).powi(r as i32) <= budget as f64 {
            shell += 1;
        }
    }
    let mut positions = Vec::new();
    let mut combinations = 0;
    let span = 2 * shell + 1;
    let total = (span as usize).pow(r as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut value = 0.0;
        for p in &proj {
            let c = (rem % span as usize) as i64 - shell;
            rem /= span as usize;
            value += c as f64 * p;
        }
        combinations += 1;
        match reduction {
            Reduction::Window => {
                if (0.0..=window).contains(&value) {
                    positions.push(value);
                }
            }
            Reduction::Modulo => positions.push(value.rem_euclid(window)),
        }
    }
    positions.sort_by(f64::total_cmp);
    positions.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    let mut gaps: Vec<f64> = positions.windows(2).map(|w| w[1] - w[0]).collect();
    match reduction {
        Reduction::Window => {
            let Some(&first) = positions.first() else {
                return GapStats { window, positions, gaps: Vec::new(), max_gap: window, combinations, shell };
            };
            gaps.push(window - positions[positions.len() - 1]);
            let max_gap = gaps.iter().copied().fold(first, f64::max);
            GapStats { window, positions, gaps, max_gap, combinations, shell }
        }
        Reduction::Modulo => {
            if let (Some(&f), Some(&l)) = (positions.first(), positions.last()) {
                gaps.push(window - l + f);
            }
            let max_gap = gaps.iter().copied().fold(0.0, f64::max);
            GapStats { window, positions, gaps, max_gap, combinations, shell }
        }
    }
}

/// Lifted points with the measured relation bound.
#[derive(Debug, Clone, Serialize)]
pub struct Chain {
    pub points: Vec<Vector<3>>,
    /// Largest `max(|π^s Δ|, |π^u Δ|)` over consecutive differences `Δ`,
    /// where `π^s` projects onto `E^u` along the contracting plane and `π^u`
    /// onto that plane along `E^u`.
    pub epsilon: f64,
}

/// The two projected lengths of a difference vector `(π^s, π^u)`.
pub fn split_lengths(a: &ToralAutomorphism<3>, d: &Vector<3>) -> (f64, f64) {
    let e = a.to_eigen(d);
    let u = e[2].abs() * linalg::norm(a.eigenvector(2));
    let cs = a.from_eigen(&[e[0], e[1], 0.0]);
    (u, linalg::norm(&cs))
}

pub fn make_chain(points: Vec<Vector<3>>, a: &ToralAutomorphism<3>) -> Result<Chain> {
    if points.len() < 2 {
        return Err(Error::EmptyChain);
    }
    let epsilon = points
        .windows(2)
        .map(|w| {
            let (s, u) = split_lengths(a, &linalg::sub(&w[1], &w[0]));
            s.max(u)
        })
        .fold(0.0, f64::max);
    Ok(Chain { points, epsilon })
}

/// `(x + E^{cs}) ∩ (y + E^u)` for lifted points.
pub fn bracket_linear(a: &ToralAutomorphism<3>, x: &Vector<3>, y: &Vector<3>) -> Vector<3> {
    a.bracket(x, y)
}

/// One induction step: `x̄_j = (x_j + E^{cs}) ∩ (x_{j+1} + E^u)`.
pub fn shorten_chain(a: &ToralAutomorphism<3>, pts: &[Vector<3>]) -> Vec<Vector<3>> {
    pts.windows(2).map(|w| bracket_linear(a, &w[0], &w[1])).collect()
}

/// Shortens the chain one point at a time until a single point remains.
pub fn propagate_chain(a: &ToralAutomorphism<3>, c: &Chain) -> Result<Vector<3>> {
    if c.points.len() < 2 {
        return Err(Error::EmptyChain);
    }
    let mut level = c.points.clone();
    while level.len() > 1 {
        level = shorten_chain(a, &level);
    }
    Ok(level[0])
}

/// All intermediate chains of [`propagate_chain`], starting with the input.
pub fn propagate_chain_levels(a: &ToralAutomorphism<3>, c: &Chain) -> Result<Vec<Vec<Vector<3>>>> {
    if c.points.len() < 2 {
        return Err(Error::EmptyChain);
    }
    let mut out = vec![c.points.clone()];
    while out.last().map_or(0, Vec::len) > 1 {
        let next = shorten_chain(a, out.last().expect("nonempty"));
        out.push(next);
    }
    Ok(out)
}

/// Bracket of two grid cells, `y` given as a cell offset from `x`.
pub trait GridBracket {
    fn bracket_cell(&self, g: &GridSet, x: usize, offset: &[i64; 3]) -> usize;
}

/// Offset of the bracket cell for a cell offset `o`: the contracting part of
/// `o` in the splitting `E^{cs} ⊕ E^u`, rounded to the nearest cell.
fn linear_bracket_offset<const D: usize>(a: &ToralAutomorphism<D>, o: &[i64; 3]) -> [i64; 3] {
    let v: Vector<D> = std::array::from_fn(|i| o[i] as f64);
    let mut e = a.to_eigen(&v);
    for x in e.iter_mut().skip(a.stable_dim()) {
        *x = 0.0;
    }
    let w = a.from_eigen(&e);
    std::array::from_fn(|i| if i < D { (0.5 + w[i]).floor() as i64 } else { 0 })
}

impl<const D: usize> GridBracket for ToralAutomorphism<D> {
    fn bracket_cell(&self, g: &GridSet, x: usize, offset: &[i64; 3]) -> usize {
        let t = linear_bracket_offset(self, offset);
        let c = g.coords(x);
        g.index(&[c[0] + t[0], c[1] + t[1], c[2] + t[2]])
    }
}

impl GridBracket for Horseshoe {
    fn bracket_cell(&self, g: &GridSet, x: usize, offset: &[i64; 3]) -> usize {
        let c = g.coords(x);
        g.index(&[c[0], c[1] + offset[1]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Each round reads the previous round's set.
    Jacobi,
    /// Newly marked cells are visible within the same round.
    InPlace,
}

#[derive(Debug, Clone)]
pub struct Saturation {
    pub set: GridSet,
    pub rounds: usize,
    pub converged: bool,
    /// Coverage fraction after each round (index 0 is the input).
    pub coverage: Vec<f64>,
}

/// Smallest superset of `s` closed under brackets of cells closer than
/// `δ_p` (or the state after `rounds` rounds).
pub fn bracket_saturate<B: GridBracket>(f: &B, s: &GridSet, delta_p: f64, rounds: usize) -> Result<Saturation> {
    bracket_saturate_with(f, s, delta_p, rounds, Schedule::Jacobi)
}

pub fn bracket_saturate_with<B: GridBracket>(f: &B, s: &GridSet, delta_p: f64, rounds: usize, schedule: Schedule) -> Result<Saturation> {
    let offs = offsets_within(s.dim(), delta_p * s.resolution() as f64);
    let mut cur = s.clone();
    let mut coverage = vec![cur.coverage()];
    let mut converged = false;
    let mut done = 0;
    for _ in 0..rounds {
        let mut next = cur.clone();
        let members: Vec<usize> = cur.iter().collect();
        let mut grew = false;
        for &x in &members {
            let c = cur.coords(x);
            for o in &offs {
                let y = cur.index(&[c[0] + o[0], c[1] + o[1], c[2] + o[2]]);
                let present = match schedule {
                    Schedule::Jacobi => cur.contains(y),
                    Schedule::InPlace => next.contains(y),
                };
                if present {
                    let z = f.bracket_cell(&cur, x, o);
                    grew |= next.insert(z);
                }
            }
        }
        done += 1;
        cur = next;
        coverage.push(cur.coverage());
        if !grew {
            converged = true;
            break;
        }
    }
    Ok(Saturation { set: cur, rounds: done, converged, coverage })
}

/// Cell centers `(x, y)` closer than `δ_p` with bracket cell `z ∉ s`.
pub fn lps_violation_witness<B: GridBracket>(f: &B, s: &GridSet, delta_p: f64) -> Option<(usize, usize, usize)> {
    let offs = offsets_within(s.dim(), delta_p * s.resolution() as f64);
    for x in s.iter() {
        let c = s.coords(x);
        for o in &offs {
            let y = s.index(&[c[0] + o[0], c[1] + o[1], c[2] + o[2]]);
            if s.contains(y) {
                let z = f.bracket_cell(s, x, o);
                if !s.contains(z) {
                    return Some((x, y, z));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> ToralAutomorphism<3> {
        ToralAutomorphism::classify_t3([[0, 0, 1], [1, 0, -5], [0, 1, 6]]).unwrap()
    }

    #[test]
    fn single_cell_subgroup_is_trivial() {
        let mut s = GridSet::empty(3, 8).unwrap();
        s.insert(0);
        let g = gamma_delta(&s, &[0.0; 3], 0.5, 10).unwrap();
        assert_eq!(g.subgroup.rank, 0);
    }

    #[test]
    fn missing_basepoint() {
        let s = GridSet::empty(3, 8).unwrap();
        assert!(matches!(gamma_delta(&s, &[0.0; 3], 0.5, 10), Err(Error::BasepointMissing)));
    }

    #[test]
    fn empty_projection_gap_is_window() {
        let g = LatticeSubgroup::trivial();
        let st = projection_density(&g, &a(), 1.0, 100, Reduction::Window);
        assert_eq!(st.max_gap, 1.0);
    }

    #[test]
    fn chain_base_case() {
        let a = a();
        let x = [0.1, 0.2, 0.3];
        let y = [0.15, 0.22, 0.31];
        let c = make_chain(vec![x, y], &a).unwrap();
        let z = propagate_chain(&a, &c).unwrap();
        assert_eq!(z, bracket_linear(&a, &x, &y));
        assert_eq!(make_chain(vec![x, x], &a).unwrap().epsilon, 0.0);
    }

    #[test]
    fn saturation_trivial() {
        let a = a();
        let full = GridSet::full(3, 8).unwrap();
        assert_eq!(bracket_saturate(&a, &full, 3.0 / 8.0, 5).unwrap().set, full);
        let mut one = GridSet::empty(3, 8).unwrap();
        one.insert(0);
        assert_eq!(bracket_saturate(&a, &one, 3.0 / 8.0, 5).unwrap().set, one);
        assert!(lps_violation_witness(&a, &full, 0.3).is_none());
    }
}
