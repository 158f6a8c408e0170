//! Bitset grids over the torus: the finite-resolution stand-in for compact
//! invariant sets.

use std::io::{Read, Write};
use std::path::Path;

use bitvec::prelude::*;

use crate::error::{Error, Result};

/// Default bound on the number of cells in a grid.
pub const DEFAULT_CELL_LIMIT: u64 = 1 << 30;

/// Subset of the uniform `N^dim` partition of the torus into half-open cells
/// `[k/N, (k+1)/N)`. Cell `(i, j, k)` has index `i + N(j + N k)`.
#[derive(Clone, PartialEq, Eq)]
pub struct GridSet {
    dim: usize,
    n: usize,
    bits: BitVec<u64, Lsb0>,
}

impl std::fmt::Debug for GridSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GridSet(dim={}, N={}, count={})", self.dim, self.n, self.count())
    }
}

impl GridSet {
    pub fn empty(dim: usize, n: usize) -> Result<Self> {
        Self::with_limit(dim, n, DEFAULT_CELL_LIMIT)
    }

    pub fn with_limit(dim: usize, n: usize, limit: u64) -> Result<Self> {
        assert!(dim == 2 || dim == 3, "grids are 2D or 3D");
        assert!(n >= 1, "resolution must be positive");
        let cells = (n as u64).checked_pow(dim as u32).unwrap_or(u64::MAX);
        if cells > limit {
            return Err(Error::ResolutionOverflow { cells, limit });
        }
        Ok(GridSet { dim, n, bits: bitvec![u64, Lsb0; 0; cells as usize] })
    }

    pub fn full(dim: usize, n: usize) -> Result<Self> {
        let mut g = Self::empty(dim, n)?;
        g.bits.fill(true);
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn resolution(&self) -> usize {
        self.n
    }
    pub fn cells(&self) -> usize {
        self.bits.len()
    }
    pub fn count(&self) -> usize {
        self.bits.count_ones()
    }
    pub fn coverage(&self) -> f64 {
        self.count() as f64 / self.cells() as f64
    }
    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    /// Marks `idx`; returns whether it was newly marked.
    #[inline]
    pub fn insert(&mut self, idx: usize) -> bool {
        !self.bits.replace(idx, true)
    }

    #[inline]
    pub fn remove(&mut self, idx: usize) {
        self.bits.set(idx, false);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    #[inline]
    pub fn index(&self, c: &[i64]) -> usize {
        let n = self.n as i64;
        let mut idx = 0usize;
        for d in (0..self.dim).rev() {
            idx = idx * self.n + c[d].rem_euclid(n) as usize;
        }
        idx
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [i64; 3] {
        let mut c = [0i64; 3];
        let mut r = idx;
        for slot in c.iter_mut().take(self.dim) {
            *slot = (r % self.n) as i64;
            r /= self.n;
        }
        c
    }

    /// Cell containing a torus point (coordinates reduced mod 1).
    #[inline]
    pub fn cell_of(&self, x: &[f64]) -> usize {
        let mut c = [0i64; 3];
        for d in 0..self.dim {
            c[d] = (x[d] * self.n as f64).floor() as i64;
        }
        self.index(&c)
    }

    pub fn center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let h = 1.0 / self.n as f64;
        std::array::from_fn(|d| if d < self.dim { (c[d] as f64 + 0.5) * h } else { 0.0 })
    }

    pub fn union_with(&mut self, other: &GridSet) {
        assert_eq!((self.dim, self.n), (other.dim, other.n));
        self.bits |= &other.bits;
    }

    pub fn intersect_with(&mut self, other: &GridSet) {
        assert_eq!((self.dim, self.n), (other.dim, other.n));
        self.bits &= &other.bits;
    }

    pub fn difference(&self, other: &GridSet) -> GridSet {
        let mut out = self.clone();
        let mut inv = other.bits.clone();
        inv = !inv;
        out.bits &= &inv;
        out
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    /// Cells of `self` that meet no cell of `other`.
    pub fn is_disjoint(&self, other: &GridSet) -> bool {
        self.iter().all(|i| !other.contains(i))
    }

    /// Coarsens to resolution `N / 2`: a coarse cell is marked when any of
    /// its children is.
    pub fn coarsen(&self) -> Result<GridSet> {
        assert!(self.n % 2 == 0, "resolution must be even");
        let mut out = GridSet::empty(self.dim, self.n / 2)?;
        for i in self.iter() {
            let c = self.coords(i);
            let cc: Vec<i64> = c.iter().map(|x| x / 2).collect();
            out.insert(out.index(&cc));
        }
        Ok(out)
    }

    /// Marks every cell within `r` cells (sup-distance) of a marked cell.
    pub fn dilate(&self, r: i64) -> GridSet {
        let mut out = self.clone();
        let offs = offsets_sup(self.dim, r);
        for i in self.iter() {
            let c = self.coords(i);
            for o in &offs {
                let nc: Vec<i64> = (0..self.dim).map(|d| c[d] + o[d]).collect();
                out.insert(self.index(&nc));
            }
        }
        out
    }

    /// Run-length encoded binary: 16-byte header `HGS1`, dim, N, popcount
    /// (little-endian `u32`), then alternating run lengths starting with a
    /// run of unmarked cells, each as an LEB128 varint.
    pub fn write_hgs<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"HGS1")?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.count() as u32).to_le_bytes())?;
        let mut cur = false;
        let mut run = 0u64;
        for b in self.bits.iter().by_vals() {
            if b == cur {
                run += 1;
            } else {
                write_varint(&mut w, run)?;
                cur = b;
                run = 1;
            }
        }
        write_varint(&mut w, run)?;
        Ok(())
    }

    pub fn read_hgs<R: Read>(mut r: R) -> Result<GridSet> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != b"HGS1" {
            return Err(Error::Invalid("bad HGS1 magic".into()));
        }
        let field = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().expect("4 bytes")) as usize;
        let (dim, n, pop) = (field(4), field(8), field(12));
        if dim != 2 && dim != 3 {
            return Err(Error::Invalid(format!("bad dimension {dim}")));
        }
        let mut g = GridSet::empty(dim, n)?;
        let mut pos = 0usize;
        let mut cur = false;
        while pos < g.cells() {
            let run = read_varint(&mut r)? as usize;
            if pos + run > g.cells() {
                return Err(Error::Invalid("run overflows grid".into()));
            }
            if cur {
                g.bits[pos..pos + run].fill(true);
            }
            pos += run;
            cur = !cur;
        }
        if g.count() != pop {
            return Err(Error::Invalid("popcount mismatch".into()));
        }
        Ok(g)
    }

    pub fn save_hgs(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_hgs(std::io::BufWriter::new(f))
    }

    /// Slice `z = k` (or the whole grid in 2D) as binary PGM, marked = 255.
    pub fn write_pgm<W: Write>(&self, mut w: W, k: usize) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.n, self.n)?;
        let mut row = vec![0u8; self.n];
        // PGM rows run top to bottom; put y = N − 1 first.
        for j in (0..self.n).rev() {
            for (i, px) in row.iter_mut().enumerate() {
                let idx = if self.dim == 3 { self.index(&[i as i64, j as i64, k as i64]) } else { self.index(&[i as i64, j as i64]) };
                *px = if self.contains(idx) { 255 } else { 0 };
            }
            w.write_all(&row)?;
        }
        Ok(())
    }
}

fn write_varint<W: Write>(w: &mut W, mut v: u64) -> std::io::Result<()> {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            return w.write_all(&[byte]);
        }
        w.write_all(&[byte | 0x80])?;
    }
}

fn read_varint<R: Read>(r: &mut R) -> Result<u64> {
    let mut v = 0u64;
    let mut shift = 0;
    loop {
        let mut b = [0u8; 1];
        r.read_exact(&mut b)?;
        v |= u64::from(b[0] & 0x7f) << shift;
        if b[0] & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
        if shift > 63 {
            return Err(Error::Invalid("varint too long".into()));
        }
    }
}

/// Integer offsets with sup-norm at most `r`, excluding zero.
pub fn offsets_sup(dim: usize, r: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let zr = if dim == 3 { r } else { 0 };
    for k in -zr..=zr {
        for j in -r..=r {
            for i in -r..=r {
                if (i, j, k) != (0, 0, 0) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Integer offsets whose Euclidean length, in cell units, is below `radius`,
/// excluding zero.
pub fn offsets_within(dim: usize, radius: f64) -> Vec<[i64; 3]> {
    let r = radius.ceil() as i64;
    offsets_sup(dim, r)
        .into_iter()
        .filter(|o| ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64) < radius * radius)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjacency {
    /// Cells sharing a face (4 neighbours in 2D, 6 in 3D).
    Face,
    /// Cells sharing at least a vertex (8 in 2D, 26 in 3D).
    Vertex,
}

/// Component labelling of a grid set on the torus.
#[derive(Debug, Clone)]
pub struct Labeling {
    /// Component id per cell; `u32::MAX` for unmarked cells.
    pub labels: Vec<u32>,
    pub sizes: Vec<usize>,
}

impl Labeling {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

struct Dsu {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (ra, rb) = if self.rank[ra as usize] < self.rank[rb as usize] { (rb, ra) } else { (ra, rb) };
        self.parent[rb as usize] = ra;
        if self.rank[ra as usize] == self.rank[rb as usize] {
            self.rank[ra as usize] += 1;
        }
    }
}

/// Union-find labelling with periodic boundary. Labels are assigned in order
/// of the smallest cell index of each component.
pub fn connected_components(s: &GridSet, adjacency: Adjacency) -> Labeling {
    let members: Vec<usize> = s.iter().collect();
    let mut slot = vec![u32::MAX; s.cells()];
    for (k, &i) in members.iter().enumerate() {
        slot[i] = k as u32;
    }
    let offs: Vec<[i64; 3]> = match adjacency {
        Adjacency::Vertex => offsets_sup(s.dim(), 1),
        Adjacency::Face => offsets_sup(s.dim(), 1).into_iter().filter(|o| o.iter().map(|x| x.abs()).sum::<i64>() == 1).collect(),
    };
    let mut dsu = Dsu::new(members.len());
    for (k, &i) in members.iter().enumerate() {
        let c = s.coords(i);
        for o in &offs {
            let nc = [c[0] + o[0], c[1] + o[1], c[2] + o[2]];
            let j = s.index(&nc);
            if slot[j] != u32::MAX {
                dsu.union(k as u32, slot[j]);
            }
        }
    }
    let mut labels = vec![u32::MAX; s.cells()];
    let mut root_label = vec![u32::MAX; members.len()];
    let mut sizes = Vec::new();
    for (k, &i) in members.iter().enumerate() {
        let r = dsu.find(k as u32) as usize;
        if root_label[r] == u32::MAX {
            root_label[r] = sizes.len() as u32;
            sizes.push(0);
        }
        labels[i] = root_label[r];
        sizes[root_label[r] as usize] += 1;
    }
    Labeling { labels, sizes }
}

/// Splits `s` into the union of singleton components (`Λ0`) and the rest
/// (`Λ1`), using face adjacency.
pub fn decompose_lambda01(s: &GridSet) -> (GridSet, GridSet) {
    decompose_lambda01_with(s, Adjacency::Face)
}

pub fn decompose_lambda01_with(s: &GridSet, adjacency: Adjacency) -> (GridSet, GridSet) {
    let lab = connected_components(s, adjacency);
    let mut l0 = GridSet::empty(s.dim(), s.resolution()).expect("same size as input");
    let mut l1 = l0.clone();
    for i in s.iter() {
        if lab.sizes[lab.labels[i] as usize] == 1 {
            l0.insert(i);
        } else {
            l1.insert(i);
        }
    }
    (l0, l1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hgs_round_trip() {
        let mut g = GridSet::empty(3, 8).unwrap();
        for i in [0, 1, 2, 100, 511, 300] {
            g.insert(i);
        }
        let mut buf = Vec::new();
        g.write_hgs(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"HGS1");
        let h = GridSet::read_hgs(&buf[..]).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn components_basic() {
        let g = GridSet::empty(3, 8).unwrap();
        assert_eq!(connected_components(&g, Adjacency::Face).count(), 0);
        let mut g = g;
        g.insert(g.index(&[1, 1, 1]));
        g.insert(g.index(&[4, 4, 4]));
        assert_eq!(connected_components(&g, Adjacency::Face).count(), 2);
        // periodic wrap joins the two ends of an axis
        let mut h = GridSet::empty(2, 8).unwrap();
        h.insert(h.index(&[0, 3]));
        h.insert(h.index(&[7, 3]));
        assert_eq!(connected_components(&h, Adjacency::Face).count(), 1);
    }

    #[test]
    fn decomposition_partitions() {
        let full = GridSet::full(2, 6).unwrap();
        let (l0, l1) = decompose_lambda01(&full);
        assert!(l0.is_empty());
        assert_eq!(l1, full);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(GridSet::with_limit(3, 1000, 1 << 20), Err(Error::ResolutionOverflow { .. })));
    }

    #[test]
    fn pgm_header() {
        let g = GridSet::full(2, 4).unwrap();
        let mut buf = Vec::new();
        g.write_pgm(&mut buf, 0).unwrap();
        assert!(buf.starts_with(b"P5\n4 4\n255\n"));
        assert_eq!(buf.len(), 11 + 16);
    }
}
