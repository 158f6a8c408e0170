//! Subgroups of ℤ³ in Hermite normal form.

use serde::Serialize;

pub type IVec = [i64; 3];

/// A subgroup of ℤ³ with its generators and row-style Hermite basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeSubgroup {
    pub generators: Vec<IVec>,
    pub hnf_basis: Vec<IVec>,
    pub rank: usize,
    /// Index in ℤ³; `None` when the rank is below 3.
    pub index: Option<i64>,
}

impl LatticeSubgroup {
    pub fn trivial() -> Self {
        Self::from_generators(Vec::new())
    }

    pub fn from_generators(generators: Vec<IVec>) -> Self {
        let hnf_basis = hnf(&generators);
        let rank = hnf_basis.len();
        let index = (rank == 3).then(|| hnf_basis.iter().enumerate().map(|(i, r)| r[i]).product());
        LatticeSubgroup { generators, hnf_basis, rank, index }
    }

    pub fn contains(&self, v: &IVec) -> bool {
        contains(&self.hnf_basis, v)
    }

    /// Adds a generator. Returns whether the subgroup grew.
    pub fn insert(&mut self, v: IVec) -> bool {
        if self.contains(&v) {
            return false;
        }
        self.generators.push(v);
        let mut rows = self.hnf_basis.clone();
        rows.push(v);
        self.hnf_basis = hnf(&rows);
        self.rank = self.hnf_basis.len();
        self.index = (self.rank == 3).then(|| self.hnf_basis.iter().enumerate().map(|(i, r)| r[i]).product());
        true
    }

    pub fn is_full(&self) -> bool {
        self.index == Some(1)
    }
}

/// Row-style Hermite normal form: rows are echelon with positive pivots and
/// entries above each pivot reduced into `[0, pivot)`.
pub fn hnf(rows: &[IVec]) -> Vec<IVec> {
    let mut m: Vec<[i128; 3]> = rows
        .iter()
        .filter(|r| r.iter().any(|&x| x != 0))
        .map(|r| [r[0] as i128, r[1] as i128, r[2] as i128])
        .collect();
    let mut r = 0;
    let mut pivots = Vec::new();
    for col in 0..3 {
        if r >= m.len() {
            break;
        }
        loop {
            let best = (r..m.len()).filter(|&i| m[i][col] != 0).min_by_key(|&i| m[i][col].abs());
            let Some(best) = best else { break };
            m.swap(r, best);
            let mut done = true;
            for j in r + 1..m.len() {
                if m[j][col] != 0 {
                    let q = m[j][col] / m[r][col];
                    for k in 0..3 {
                        m[j][k] -= q * m[r][k];
                    }
                    if m[j][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if m[r][col] == 0 {
            continue;
        }
        if m[r][col] < 0 {
            for k in 0..3 {
                m[r][k] = -m[r][k];
            }
        }
        pivots.push(col);
        r += 1;
    }
    m.truncate(r);
    for (i, &col) in pivots.iter().enumerate() {
        let p = m[i][col];
        for j in 0..i {
            let q = m[j][col].div_euclid(p);
            for k in 0..3 {
                m[j][k] -= q * m[i][k];
            }
        }
    }
    m.iter().map(|r| [r[0] as i64, r[1] as i64, r[2] as i64]).collect()
}

/// Membership test against a Hermite basis.
pub fn contains(basis: &[IVec], v: &IVec) -> bool {
    let mut w = [v[0] as i128, v[1] as i128, v[2] as i128];
    for row in basis {
        let Some(col) = (0..3).find(|&c| row[c] != 0) else { continue };
        let p = row[col] as i128;
        if w[col] % p != 0 {
            return false;
        }
        let q = w[col] / p;
        for k in 0..3 {
            w[k] -= q * row[k] as i128;
        }
    }
    w == [0, 0, 0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_generators() {
        let g = LatticeSubgroup::from_generators(vec![[1, 0, 0], [0, 2, 0], [0, 0, 3]]);
        assert_eq!(g.rank, 3);
        assert_eq!(g.index, Some(6));
    }

    #[test]
    fn coordinate_vectors_give_identity() {
        let g = LatticeSubgroup::from_generators(vec![[1, 1, 0], [0, 1, 1], [1, 0, 1], [0, 0, 1]]);
        assert_eq!(g.hnf_basis, vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
    }

    #[test]
    fn rank_deficient() {
        let g = LatticeSubgroup::from_generators(vec![[2, 4, 6], [1, 2, 3]]);
        assert_eq!(g.rank, 1);
        assert_eq!(g.hnf_basis, vec![[1, 2, 3]]);
        assert_eq!(g.index, None);
        assert!(g.contains(&[-3, -6, -9]));
        assert!(!g.contains(&[1, 2, 4]));
    }

    #[test]
    fn insert_grows() {
        let mut g = LatticeSubgroup::trivial();
        assert!(g.insert([0, 3, 0]));
        assert!(!g.insert([0, 6, 0]));
        assert!(g.insert([0, 2, 0]));
        assert_eq!(g.hnf_basis, vec![[0, 1, 0]]);
    }
}
