//! Eventually periodic symbol sequences, subshift-of-finite-type hulls and
//! the enclosure of a zero-dimensional piece next to a grid set.
//!
//! Sequence space carries `d(x, y) = 2^{−min{|i| : x_i ≠ y_i}}`. A point of
//! the hull of order `n` agrees with the source set on every centered window
//! of radius `⌊(n−1)/2⌋`, so it lies within `2^{−⌊(n−1)/2⌋}` of it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::grid::GridSet;
use crate::{Error, Result};

pub type Word = Vec<u8>;

/// `left^∞ · pre · period^∞`, with `pre` starting at position `−shift`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sequence {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<Word>,
    #[serde(default)]
    pub pre: Word,
    pub period: Word,
    #[serde(default)]
    pub shift: i64,
}

impl Sequence {
    pub fn periodic(w: &[u8]) -> Self {
        Sequence { left: None, pre: Vec::new(), period: w.to_vec(), shift: 0 }
    }

    /// `left^∞ . right^∞` with the first `right` symbol at position 0.
    pub fn heteroclinic(left: &[u8], right: &[u8]) -> Self {
        Sequence { left: Some(left.to_vec()), pre: Vec::new(), period: right.to_vec(), shift: 0 }
    }

    fn left_word(&self) -> &[u8] {
        self.left.as_deref().unwrap_or(&self.period)
    }

    fn valid(&self, k: usize) -> bool {
        !self.period.is_empty()
            && !self.left_word().is_empty()
            && self.left_word().iter().chain(&self.pre).chain(&self.period).all(|&s| (s as usize) < k)
    }

    #[inline]
    pub fn at(&self, i: i64) -> u8 {
        let j = i + self.shift;
        if j < 0 {
            let l = self.left_word();
            l[j.rem_euclid(l.len() as i64) as usize]
        } else if (j as usize) < self.pre.len() {
            self.pre[j as usize]
        } else {
            let p = &self.period;
            p[(j as usize - self.pre.len()) % p.len()]
        }
    }

    pub fn window(&self, start: i64, len: usize) -> Word {
        (0..len as i64).map(|t| self.at(start + t)).collect()
    }

    /// `σ(x)_i = x_{i+1}`.
    pub fn shifted(&self, by: i64) -> Self {
        Sequence { shift: self.shift + by, ..self.clone() }
    }

    /// Positions `[lo, hi)` whose windows of length `n` include every
    /// window of the sequence.
    fn window_range(&self, n: usize) -> (i64, i64) {
        let l = self.left_word().len() as i64;
        let lo = -self.shift - n as i64 - l;
        let hi = -self.shift + (self.pre.len() + self.period.len()) as i64 + 1;
        (lo, hi)
    }

    pub fn factors(&self, n: usize) -> BTreeSet<Word> {
        let (lo, hi) = self.window_range(n);
        (lo..hi).map(|i| self.window(i, n)).collect()
    }

    /// `d(x, y)`, exact for eventually periodic sequences.
    pub fn distance(&self, other: &Sequence) -> f64 {
        let span = [self, other]
            .iter()
            .map(|s| s.shift.unsigned_abs() as usize + s.pre.len() + s.period.len() + s.left_word().len())
            .sum::<usize>() as i64
            * 2
            + 2;
        for r in 0..=span {
            if self.at(r) != other.at(r) || self.at(-r) != other.at(-r) {
                return 0.5f64.powi(r as i32);
            }
        }
        0.0
    }
}

/// The closed shift-invariant hull of finitely many sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicSet {
    pub k: usize,
    pub generators: Vec<Sequence>,
}

impl SymbolicSet {
    pub fn new(k: usize, generators: Vec<Sequence>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| !g.valid(k)) {
            return Err(Error::Invalid(format!("generator {g:?} is not over the alphabet [0, {k})")));
        }
        Ok(SymbolicSet { k, generators })
    }

    pub fn factors(&self, n: usize) -> BTreeSet<Word> {
        self.generators.iter().flat_map(|g| g.factors(n)).collect()
    }

    /// Largest `r ≤ max` such that the centered window of radius `r` of `w`
    /// (length `2·max + 1`) is a factor of the set.
    fn agreement_radius(&self, w: &[u8], max: usize, cache: &mut BTreeMap<usize, BTreeSet<Word>>) -> Option<usize> {
        let mut best = None;
        for r in 0..=max {
            let f = cache.entry(2 * r + 1).or_insert_with(|| self.factors(2 * r + 1));
            if f.contains(&w[max - r..max + r + 1]) {
                best = Some(r);
            } else {
                break;
            }
        }
        best
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: SymbolicSet = serde_json::from_str(s).map_err(|e| Error::Invalid(e.to_string()))?;
        SymbolicSet::new(v.k, v.generators)
    }
}

/// Subshift of finite type given by its allowed words of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SftHull {
    pub n: usize,
    pub k: usize,
    pub words: BTreeSet<Word>,
}

/// Removes words whose prefix has no incoming or whose suffix has no
/// outgoing word, until nothing changes.
fn prune(words: &mut BTreeSet<Word>) {
    loop {
        let ends: BTreeSet<&[u8]> = words.iter().map(|w| &w[1..]).collect();
        let starts: BTreeSet<&[u8]> = words.iter().map(|w| &w[..w.len() - 1]).collect();
        let dead: Vec<Word> = words
            .iter()
            .filter(|w| !ends.contains(&w[..w.len() - 1]) || !starts.contains(&w[1..]))
            .cloned()
            .collect();
        if dead.is_empty() {
            return;
        }
        for w in dead {
            words.remove(&w);
        }
    }
}

/// The SFT whose allowed `n`-words are those of the generators.
pub fn hull(s: &SymbolicSet, n: usize) -> Result<SftHull> {
    if n < 2 {
        return Err(Error::Invalid("hull order must be at least 2".into()));
    }
    let mut words = s.factors(n);
    prune(&mut words);
    if words.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(SftHull { n, k: s.k, words })
}

impl SftHull {
    /// The SFT with every word of length `n` allowed.
    pub fn full(k: usize, n: usize) -> Self {
        let mut words = BTreeSet::new();
        let mut w = vec![0u8; n];
        loop {
            words.insert(w.clone());
            let mut i = n;
            loop {
                if i == 0 {
                    return SftHull { n, k, words };
                }
                i -= 1;
                w[i] += 1;
                if (w[i] as usize) < k {
                    break;
                }
                w[i] = 0;
            }
        }
    }

    /// The SFT of an explicit word list, pruned.
    pub fn from_words(k: usize, n: usize, words: impl IntoIterator<Item = Word>) -> Result<Self> {
        let mut words: BTreeSet<Word> = words.into_iter().collect();
        if words.iter().any(|w| w.len() != n || w.iter().any(|&s| s as usize >= k)) {
            return Err(Error::Invalid("word of wrong length or symbol".into()));
        }
        prune(&mut words);
        if words.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(SftHull { n, k, words })
    }

    /// Vertices (`(n−1)`-words) and their successors.
    pub fn adjacency(&self) -> BTreeMap<Word, Vec<Word>> {
        let mut adj: BTreeMap<Word, Vec<Word>> = BTreeMap::new();
        for w in &self.words {
            adj.entry(w[..self.n - 1].to_vec()).or_default().push(w[1..].to_vec());
        }
        adj
    }

    pub fn allows(&self, s: &Sequence) -> bool {
        let (lo, hi) = s.window_range(self.n);
        (lo..hi).all(|i| self.words.contains(&s.window(i, self.n)))
    }

    /// Whether every bi-infinite path of `self` is a path of `other`;
    /// needs `self.n ≥ other.n`.
    pub fn is_subshift_of(&self, other: &SftHull) -> bool {
        if self.n < other.n {
            return false;
        }
        self.words.iter().all(|w| w.windows(other.n).all(|v| other.words.contains(v)))
    }

    /// All words of length `len` all of whose `n`-windows are allowed and
    /// that extend to bi-infinite paths.
    pub fn words_of_length(&self, len: usize) -> Vec<Word> {
        if len < self.n {
            let set: BTreeSet<Word> = self.words.iter().flat_map(|w| w.windows(len).map(<[u8]>::to_vec).collect::<Vec<_>>()).collect();
            return set.into_iter().collect();
        }
        let adj = self.adjacency();
        let mut out: Vec<Word> = self.words.iter().cloned().collect();
        for _ in self.n..len {
            let mut next = Vec::new();
            for w in &out {
                if let Some(succ) = adj.get(&w[w.len() - (self.n - 1)..]) {
                    for v in succ {
                        let mut x = w.clone();
                        x.push(v[self.n - 2]);
                        next.push(x);
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Periodic points with least period `p`, as their repeating words.
    pub fn periodic_points(&self, p: usize) -> Vec<Word> {
        let mut out = Vec::new();
        let mut w = vec![0u8; p];
        loop {
            if is_primitive(&w) && (0..p).all(|i| {
                let win: Word = (0..self.n).map(|t| w[(i + t) % p]).collect();
                self.words.contains(&win)
            }) {
                out.push(w.clone());
            }
            let mut i = p;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                w[i] += 1;
                if (w[i] as usize) < self.k {
                    break;
                }
                w[i] = 0;
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let adj: BTreeMap<String, Vec<String>> =
            self.adjacency().into_iter().map(|(v, s)| (word_string(&v), s.iter().map(|w| word_string(w)).collect())).collect();
        serde_json::json!({ "n": self.n, "k": self.k, "adjacency": adj })
    }
}

fn is_primitive(w: &[u8]) -> bool {
    let p = w.len();
    (1..p).filter(|d| p % d == 0).all(|d| (0..p).any(|i| w[i] != w[i % d]))
}

pub fn word_string(w: &[u8]) -> String {
    w.iter().map(|&s| char::from_digit(s as u32, 36).unwrap_or('?')).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct NeighborhoodReport {
    /// `2^{−⌊(n−1)/2⌋}`.
    pub bound: f64,
    /// Largest distance to the source over the enumerated hull windows.
    pub worst: f64,
    /// Radius of the enumerated centered windows.
    pub radius: usize,
    pub windows: usize,
    /// A hull word that does not occur in the source.
    pub witness: Option<String>,
    pub passed: bool,
}

/// Checks that every allowed word occurs in `s` and measures, over hull
/// windows of radius `n`, the distance from the window's center to `s`.
pub fn hull_neighborhood_check(s: &SymbolicSet, h: &SftHull) -> NeighborhoodReport {
    let bound = 0.5f64.powi(((h.n - 1) / 2) as i32);
    let source = s.factors(h.n);
    let witness = h.words.iter().find(|w| !source.contains(*w)).map(|w| word_string(w));
    let radius = h.n;
    let mut cache = BTreeMap::new();
    let windows = h.words_of_length(2 * radius + 1);
    let mut worst = 0.0f64;
    for w in &windows {
        let d = match s.agreement_radius(w, radius, &mut cache) {
            Some(r) => 0.5f64.powi(r as i32 + 1),
            None => 1.0,
        };
        worst = worst.max(d);
    }
    let passed = witness.is_none() && worst <= bound;
    NeighborhoodReport { bound, worst, radius, windows: windows.len(), witness, passed }
}

/// `z_i = y_i` for `i < 0` and `x_i` for `i ≥ 0`, provided `x` and `y` agree
/// on positions `0..n−1` and every window of `z` is allowed.
pub fn symbolic_bracket(h: &SftHull, x: &Sequence, y: &Sequence) -> Option<Sequence> {
    if x.window(0, h.n - 1) != y.window(0, h.n - 1) {
        return None;
    }
    // Before `start` both halves of y are periodic; from `end` on x is.
    let start = -y.shift.max(0);
    let end = (x.pre.len() as i64 - x.shift).max(0);
    let l = y.left_word().len() as i64;
    let left = (0..l).map(|t| y.at(start - l + t)).collect();
    let pre = (start..0).map(|i| y.at(i)).chain((0..end).map(|i| x.at(i))).collect();
    let period = x.window(end, x.period.len());
    let z = Sequence { left: Some(left), pre, period, shift: -start };
    if h.allows(&z) {
        Some(z)
    } else {
        None
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub points: usize,
    pub compatible_pairs: usize,
    pub failures: usize,
}

/// Brackets every compatible pair of periodic points of least period at
/// most `max_period` and counts splices that leave the hull.
pub fn bracket_closure(h: &SftHull, max_period: usize) -> ClosureReport {
    let pts: Vec<Sequence> = (1..=max_period).flat_map(|p| h.periodic_points(p)).map(|w| Sequence::periodic(&w)).collect();
    let mut by_window: BTreeMap<Word, Vec<usize>> = BTreeMap::new();
    for (i, p) in pts.iter().enumerate() {
        by_window.entry(p.window(0, h.n - 1)).or_default().push(i);
    }
    let mut pairs = 0;
    let mut failures = 0;
    for group in by_window.values() {
        for &i in group {
            for &j in group {
                pairs += 1;
                if symbolic_bracket(h, &pts[i], &pts[j]).is_none() {
                    failures += 1;
                }
            }
        }
    }
    ClosureReport { points: pts.len(), compatible_pairs: pairs, failures }
}

/// Places symbol windows in a grid: the cells a centered window of radius
/// `radius` can land in.
pub trait Coding {
    fn radius(&self) -> usize;
    fn cells(&self, grid: &GridSet, window: &[u8]) -> Vec<usize>;
}

/// Coding of the affine horseshoe: future symbols fix the horizontal
/// coordinate, past symbols the vertical one, each digit worth a factor 4.
#[derive(Debug, Clone, Copy)]
pub struct HorseshoeCoding {
    pub radius: usize,
}

impl HorseshoeCoding {
    /// Ranges of `x` and `y` compatible with a centered window.
    pub fn rectangle(&self, window: &[u8]) -> ([f64; 2], [f64; 2]) {
        let r = self.radius;
        let mut x = 0.0;
        let mut y = 0.0;
        for t in 0..=r {
            x += 0.75 * window[r + t] as f64 * 0.25f64.powi(t as i32);
        }
        for t in 1..=r {
            y += 0.75 * window[r - t] as f64 * 0.25f64.powi(t as i32 - 1);
        }
        // Bounds on the unknown tails beyond the window.
        let wx = 0.25f64.powi(r as i32 + 1);
        let wy = 0.25f64.powi(r as i32);
        ([x, x + wx], [y, y + wy])
    }
}

impl Coding for HorseshoeCoding {
    fn radius(&self) -> usize {
        self.radius
    }
    fn cells(&self, grid: &GridSet, window: &[u8]) -> Vec<usize> {
        let n = grid.resolution() as f64;
        let ([x0, x1], [y0, y1]) = self.rectangle(window);
        let mut out = Vec::new();
        let last = grid.resolution() as i64 - 1;
        let (i0, i1) = ((x0 * n).floor() as i64, ((x1 * n).floor() as i64).min(last));
        let (j0, j1) = ((y0 * n).floor() as i64, ((y1 * n).floor() as i64).min(last));
        for i in i0..=i1 {
            for j in j0..=j1 {
                out.push(grid.index(&[i, j]));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Enclosure {
    pub hull: Option<SftHull>,
    pub lambda1: GridSet,
    /// Cells the hull can reach under the coding.
    pub hull_cells: GridSet,
    pub neighborhood: Option<NeighborhoodReport>,
}

impl Enclosure {
    pub fn contains_sequence(&self, s: &Sequence) -> bool {
        self.hull.as_ref().is_some_and(|h| h.allows(s))
    }
    pub fn contains_cell(&self, idx: usize) -> bool {
        self.lambda1.contains(idx) || self.hull_cells.contains(idx)
    }
    pub fn is_disjoint(&self) -> bool {
        self.hull_cells.is_disjoint(&self.lambda1)
    }
}

/// `hull(Λ0, n) ∪ Λ1`, failing with `Overlap` when the hull reaches a cell
/// of `Λ1`.
pub fn enclose<C: Coding>(lambda0: &SymbolicSet, lambda1: &GridSet, n: usize, coding: &C) -> Result<Enclosure> {
    let mut hull_cells = GridSet::empty(lambda1.dim(), lambda1.resolution())?;
    if lambda0.generators.is_empty() {
        return Ok(Enclosure { hull: None, lambda1: lambda1.clone(), hull_cells, neighborhood: None });
    }
    let h = hull(lambda0, n)?;
    let r = coding.radius();
    for w in h.words_of_length(2 * r + 1) {
        for c in coding.cells(lambda1, &w) {
            if lambda1.contains(c) {
                return Err(Error::Overlap(format!("cell {c} via window {}", word_string(&w))));
            }
            hull_cells.insert(c);
        }
    }
    let report = hull_neighborhood_check(lambda0, &h);
    Ok(Enclosure { hull: Some(h), lambda1: lambda1.clone(), hull_cells, neighborhood: Some(report) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(k: usize, g: Vec<Sequence>) -> SymbolicSet {
        SymbolicSet::new(k, g).unwrap()
    }

    #[test]
    fn fixed_sequence_hull() {
        let h = hull(&set(2, vec![Sequence::periodic(&[0])]), 3).unwrap();
        assert_eq!(h.words.len(), 1);
        assert!(h.words.contains(&vec![0, 0, 0]));
    }

    #[test]
    fn sequence_indexing() {
        let s = Sequence::heteroclinic(&[0], &[1]);
        assert_eq!(s.window(-3, 6), vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(s.shifted(-2).window(-3, 6), vec![0, 0, 0, 0, 0, 1]);
        let p = Sequence::periodic(&[0, 1, 2]);
        assert_eq!(p.window(-3, 6), vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn bracket_of_a_point_with_itself() {
        let h = SftHull::full(2, 3);
        let x = Sequence::periodic(&[0, 1, 1]);
        let z = symbolic_bracket(&h, &x, &x).unwrap();
        assert_eq!(z.window(-20, 40), x.window(-20, 40));
    }

    #[test]
    fn splice_takes_past_from_second_argument() {
        let h = SftHull::full(2, 2);
        let x = Sequence::periodic(&[1]);
        let y = Sequence::periodic(&[1, 0]);
        let z = symbolic_bracket(&h, &x, &y).unwrap();
        assert_eq!(z.window(-4, 8), vec![1, 0, 1, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn json_round_trip() {
        let s = set(2, vec![Sequence::heteroclinic(&[0], &[1]), Sequence::periodic(&[0, 1])]);
        assert_eq!(SymbolicSet::from_json(&s.to_json().unwrap()).unwrap(), s);
        let s = SymbolicSet::from_json(r#"{"k": 2, "generators": [{"pre": [1], "period": [0]}]}"#).unwrap();
        assert_eq!(s.generators[0].window(-2, 4), vec![0, 0, 1, 0]);
    }
}
