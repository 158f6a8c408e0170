//! Orbit bookkeeping that survives long backward iteration.
//!
//! A point is a dyadic base on the `2^−60` lattice, on which integer
//! matrices act exactly, plus offsets in eigencoordinates, which the linear
//! part simply rescales. Offsets along the most contracting direction are
//! kept at zero, so rounding never gets amplified by backward steps.

use crate::da::DaMap;
use crate::linalg::{IMatrix, Matrix, Vector};
use crate::torus::{frac, torus_dist, ToralAutomorphism};

pub const FRAC_BITS: u32 = 60;
const MASK: u64 = (1u64 << FRAC_BITS) - 1;
const SCALE: f64 = (1u64 << FRAC_BITS) as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactPoint {
    pub base: [u64; 3],
    /// Eigencoordinate offsets `(s, c, u)` added to the base.
    pub off: [f64; 3],
}

impl ExactPoint {
    /// Nearest lattice point to `x` (reduced mod 1), with zero offsets.
    pub fn from_point(x: &Vector<3>) -> Self {
        let f = frac(x);
        let base = std::array::from_fn(|i| ((f[i] * SCALE).round() as u64) & MASK);
        ExactPoint { base, off: [0.0; 3] }
    }

    pub fn with_offset(&self, d: &[f64; 3]) -> Self {
        ExactPoint { base: self.base, off: std::array::from_fn(|i| self.off[i] + d[i]) }
    }

    pub fn base_point(&self) -> Vector<3> {
        std::array::from_fn(|i| self.base[i] as f64 / SCALE)
    }

    /// The torus point in `[0, 1)³`.
    #[inline]
    pub fn point(&self, a: &ToralAutomorphism<3>) -> Vector<3> {
        let p = a.from_eigen(&self.off);
        frac(&std::array::from_fn(|i| self.base[i] as f64 / SCALE + p[i]))
    }
}

/// `m · b mod 2^60`, exact.
#[inline]
pub fn apply_base(m: &IMatrix<3>, b: &[u64; 3]) -> [u64; 3] {
    std::array::from_fn(|i| {
        let mut s = 0u64;
        for j in 0..3 {
            s = s.wrapping_add((m[i][j] as u64).wrapping_mul(b[j]));
        }
        s & MASK
    })
}

/// Maps of `T³` isotopic to a linear automorphism in the T³ class, with
/// exact forward and backward steps on [`ExactPoint`]s.
pub trait ExactDynamics {
    fn linear(&self) -> &ToralAutomorphism<3>;
    /// `G(x) − A x` in eigencoordinates.
    fn displacement(&self, x: &Vector<3>) -> Vector<3>;
    /// `DG(x)` in eigencoordinates.
    fn jacobian_eigen(&self, x: &Vector<3>) -> Matrix<3>;
    fn advance(&self, p: &mut ExactPoint);
    fn retreat(&self, p: &mut ExactPoint);
}

#[inline]
fn linear_advance(a: &ToralAutomorphism<3>, p: &mut ExactPoint) {
    p.base = apply_base(a.matrix(), &p.base);
    let l = a.eigenvalues();
    for i in 0..3 {
        p.off[i] *= l[i];
    }
}

#[inline]
fn linear_retreat(a: &ToralAutomorphism<3>, p: &mut ExactPoint) {
    p.base = apply_base(a.inverse_matrix(), &p.base);
    let l = a.eigenvalues();
    for i in 0..3 {
        p.off[i] /= l[i];
    }
}

fn diag(a: &ToralAutomorphism<3>) -> Matrix<3> {
    let l = a.eigenvalues();
    [[l[0], 0.0, 0.0], [0.0, l[1], 0.0], [0.0, 0.0, l[2]]]
}

impl ExactDynamics for ToralAutomorphism<3> {
    fn linear(&self) -> &ToralAutomorphism<3> {
        self
    }
    fn displacement(&self, _x: &Vector<3>) -> Vector<3> {
        [0.0; 3]
    }
    fn jacobian_eigen(&self, _x: &Vector<3>) -> Matrix<3> {
        diag(self)
    }
    fn advance(&self, p: &mut ExactPoint) {
        linear_advance(self, p);
    }
    fn retreat(&self, p: &mut ExactPoint) {
        linear_retreat(self, p);
    }
}

impl ExactDynamics for DaMap<3> {
    fn linear(&self) -> &ToralAutomorphism<3> {
        self.base()
    }
    #[inline]
    fn displacement(&self, x: &Vector<3>) -> Vector<3> {
        let mut d = [0.0; 3];
        d[self.axis()] = self.delta(x);
        d
    }
    fn jacobian_eigen(&self, x: &Vector<3>) -> Matrix<3> {
        DaMap::jacobian_eigen(self, x)
    }
    #[inline]
    fn advance(&self, p: &mut ExactPoint) {
        let k = self.delta(&p.point(self.base()));
        linear_advance(self.base(), p);
        p.off[self.axis()] += k;
    }
    #[inline]
    fn retreat(&self, p: &mut ExactPoint) {
        linear_retreat(self.base(), p);
        let z0 = p.point(self.base());
        p.off[self.axis()] += self.backward_shift(&z0);
    }
}

/// `G(x) = A x + v` on lifts: a translation composed with `A`.
#[derive(Debug, Clone)]
pub struct AffineShift {
    pub a: ToralAutomorphism<3>,
    v_eigen: Vector<3>,
}

impl AffineShift {
    pub fn new(a: ToralAutomorphism<3>, v: Vector<3>) -> Self {
        let v_eigen = a.to_eigen(&v);
        AffineShift { a, v_eigen }
    }

    // Folds large offsets back into the lattice base.
    fn fold(&self, p: &mut ExactPoint) {
        if p.off.iter().any(|o| o.abs() > 1.0) {
            *p = ExactPoint::from_point(&p.point(&self.a));
        }
    }
}

impl ExactDynamics for AffineShift {
    fn linear(&self) -> &ToralAutomorphism<3> {
        &self.a
    }
    fn displacement(&self, _x: &Vector<3>) -> Vector<3> {
        self.v_eigen
    }
    fn jacobian_eigen(&self, _x: &Vector<3>) -> Matrix<3> {
        diag(&self.a)
    }
    fn advance(&self, p: &mut ExactPoint) {
        linear_advance(&self.a, p);
        for i in 0..3 {
            p.off[i] += self.v_eigen[i];
        }
        self.fold(p);
    }
    fn retreat(&self, p: &mut ExactPoint) {
        for i in 0..3 {
            p.off[i] -= self.v_eigen[i];
        }
        linear_retreat(&self.a, p);
        self.fold(p);
    }
}

/// Largest distance between the orbits of `p` and `q` over `horizon`
/// steps in both directions.
pub fn expansivity_gap<G: ExactDynamics>(g: &G, p: &ExactPoint, q: &ExactPoint, horizon: usize) -> f64 {
    let a = g.linear();
    let mut gap = torus_dist(&p.point(a), &q.point(a));
    for forward in [true, false] {
        let (mut x, mut y) = (*p, *q);
        for _ in 0..horizon {
            if forward {
                g.advance(&mut x);
                g.advance(&mut y);
            } else {
                g.retreat(&mut x);
                g.retreat(&mut y);
            }
            gap = gap.max(torus_dist(&x.point(a), &y.point(a)));
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Dynamics;

    fn b() -> ToralAutomorphism<3> {
        ToralAutomorphism::classify_t3([[0, 0, 1], [1, 0, -38], [0, 1, 40]]).unwrap()
    }

    #[test]
    fn base_arithmetic_is_exact() {
        let a = b();
        let p = ExactPoint::from_point(&[0.3, 0.7, 0.123]);
        let mut q = p;
        for _ in 0..500 {
            a.advance(&mut q);
        }
        for _ in 0..500 {
            a.retreat(&mut q);
        }
        assert_eq!(p.base, q.base);
    }

    #[test]
    fn retreat_matches_float_backward_for_one_step() {
        let a = b();
        let f = DaMap::build(a.clone(), [0.5; 3], 0.2, 1.2, 0.03).unwrap();
        for x in [[0.51, 0.49, 0.5], [0.2, 0.3, 0.4], [0.5, 0.47, 0.5]] {
            let mut p = ExactPoint::from_point(&x);
            f.retreat(&mut p);
            let y = f.backward(&x);
            assert!(torus_dist(&p.point(&a), &frac(&y)) < 1e-12);
            f.advance(&mut p);
            assert!(torus_dist(&p.point(&a), &x) < 1e-12);
        }
    }
}
