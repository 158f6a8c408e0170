//! Integer toral automorphisms, their eigen-splitting and torus arithmetic.
//!
//! Eigenvalues are obtained by isolating the real roots of the exact integer
//! characteristic polynomial, never by a general eigensolver, so the class
//! checks are reproducible bit for bit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, IMatrix, Matrix, Vector};

/// Eigenvalues closer than this to the unit circle are rejected.
pub const HYPERBOLICITY_TOL: f64 = 1e-10;

/// Hyperbolic automorphism of the `D`-torus induced by an integer matrix.
#[derive(Debug, Clone)]
pub struct ToralAutomorphism<const D: usize> {
    matrix: IMatrix<D>,
    inverse: IMatrix<D>,
    det: i64,
    mat_f: Matrix<D>,
    inv_f: Matrix<D>,
    charpoly: Vec<i64>,
    eigenvalues: Vector<D>,
    /// `basis[k]` is the unit eigenvector of `eigenvalues[k]`.
    basis: [Vector<D>; D],
    /// Columns are the eigenvectors.
    basis_cols: Matrix<D>,
    /// Rows are the dual (left) eigenvectors.
    basis_inv: Matrix<D>,
    n_stable: usize,
    t3_class: bool,
}

/// Serializable snapshot of a classification.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub matrix: Vec<Vec<i64>>,
    pub det: i64,
    pub charpoly: Vec<i64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub stable_dim: usize,
    pub unstable_dim: usize,
    pub irreducible: bool,
    pub t3_class: bool,
    pub strong_unstable: bool,
}

impl<const D: usize> ToralAutomorphism<D> {
    /// Validates `matrix` and computes its hyperbolic splitting.
    pub fn classify(matrix: IMatrix<D>) -> Result<Self> {
        assert!(D == 2 || D == 3, "only dimensions 2 and 3 are supported");
        let det = linalg::idet(&matrix);
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(det));
        }
        let det = det as i64;
        let charpoly = charpoly(&matrix);
        // Exact test for eigenvalues ±1.
        for x in [1i128, -1] {
            if eval_exact(&charpoly, x) == 0 {
                return Err(Error::NotHyperbolic(x as f64));
            }
        }
        let roots = real_roots(&charpoly);
        if roots.len() < D {
            return Err(complex_rejection::<D>(&charpoly, &roots, det));
        }
        let mut eigenvalues = [0.0; D];
        let mut sorted = roots.clone();
        sorted.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        eigenvalues.copy_from_slice(&sorted[..D]);
        for &l in &eigenvalues {
            if (l.abs() - 1.0).abs() < HYPERBOLICITY_TOL {
                return Err(Error::NotHyperbolic(l));
            }
        }
        let mat_f = linalg::to_float(&matrix);
        let basis: [Vector<D>; D] = std::array::from_fn(|k| eigenvector(&mat_f, eigenvalues[k]));
        let basis_cols: Matrix<D> = std::array::from_fn(|i| std::array::from_fn(|k| basis[k][i]));
        let basis_inv = linalg::inverse(&basis_cols)
            .ok_or_else(|| Error::UnsupportedSpectrum("eigenbasis is singular".into()))?;
        let adj = linalg::iadjugate(&matrix);
        let inverse: IMatrix<D> = std::array::from_fn(|i| std::array::from_fn(|j| adj[i][j] * det));
        let inv_f = linalg::to_float(&inverse);
        let n_stable = eigenvalues.iter().filter(|l| l.abs() < 1.0).count();
        let t3_class = D == 3
            && n_stable == 2
            && eigenvalues.iter().all(|&l| l > 0.0)
            && eigenvalues.windows(2).all(|w| w[1] - w[0] > 1e-9);
        Ok(ToralAutomorphism {
            matrix,
            inverse,
            det,
            mat_f,
            inv_f,
            charpoly,
            eigenvalues,
            basis,
            basis_cols,
            basis_inv,
            n_stable,
            t3_class,
        })
    }

    /// Like [`classify`](Self::classify) but fails with `WrongClass` unless the
    /// matrix has real positive simple spectrum with exactly one expanding
    /// eigenvalue.
    pub fn classify_t3(matrix: IMatrix<D>) -> Result<Self> {
        let a = Self::classify(matrix)?;
        if !a.t3_class {
            return Err(Error::WrongClass(format!(
                "eigenvalues {:?} are not real, positive, simple with exactly one > 1",
                a.eigenvalues
            )));
        }
        Ok(a)
    }

    pub fn matrix(&self) -> &IMatrix<D> {
        &self.matrix
    }
    pub fn inverse_matrix(&self) -> &IMatrix<D> {
        &self.inverse
    }
    pub fn det(&self) -> i64 {
        self.det
    }
    pub fn charpoly(&self) -> &[i64] {
        &self.charpoly
    }
    pub fn eigenvalues(&self) -> &Vector<D> {
        &self.eigenvalues
    }
    pub fn eigenvector(&self, k: usize) -> &Vector<D> {
        &self.basis[k]
    }
    /// Eigenvectors as matrix columns.
    pub fn eigenbasis(&self) -> &Matrix<D> {
        &self.basis_cols
    }
    /// Inverse of the eigenbasis; row `k` extracts the `k`-th eigencoordinate.
    pub fn dual_basis(&self) -> &Matrix<D> {
        &self.basis_inv
    }
    pub fn float_matrix(&self) -> &Matrix<D> {
        &self.mat_f
    }
    pub fn float_inverse(&self) -> &Matrix<D> {
        &self.inv_f
    }
    /// Number of contracting directions; they occupy indices `0..n_stable`.
    pub fn stable_dim(&self) -> usize {
        self.n_stable
    }
    pub fn is_t3_class(&self) -> bool {
        self.t3_class
    }
    /// Largest eigenvalue modulus exceeds 3.
    pub fn strong_unstable(&self) -> bool {
        self.eigenvalues[D - 1].abs() > 3.0
    }
    /// For `D = 2, 3` any hyperbolic unimodular characteristic polynomial is
    /// irreducible: a factor would give a rational root, and the only
    /// candidates are ±1.
    pub fn irreducible(&self) -> bool {
        true
    }

    /// Shadowing constant `max(1/(1 − λ), 1/(μ − 1))` over contracting λ and
    /// expanding μ, valid in the eigencoordinate sup-norm.
    pub fn shadowing_constant(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| 1.0 / (1.0 - l.abs()).abs())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &Vector<D>) -> Vector<D> {
        linalg::mat_vec(&self.mat_f, x)
    }

    pub fn apply_inverse(&self, x: &Vector<D>) -> Vector<D> {
        linalg::mat_vec(&self.inv_f, x)
    }

    pub fn apply_torus(&self, x: &Vector<D>) -> Vector<D> {
        frac(&self.apply(x))
    }

    pub fn apply_inverse_torus(&self, x: &Vector<D>) -> Vector<D> {
        frac(&self.apply_inverse(x))
    }

    pub fn to_eigen(&self, x: &Vector<D>) -> Vector<D> {
        linalg::mat_vec(&self.basis_inv, x)
    }

    pub fn from_eigen(&self, e: &Vector<D>) -> Vector<D> {
        linalg::mat_vec(&self.basis_cols, e)
    }

    /// Coordinate along the expanding direction(s); the projection onto
    /// `E^u` along the contracting subspace.
    pub fn proj_onto_unstable(&self, x: &Vector<D>) -> f64 {
        let e = self.to_eigen(x);
        sup_of(&e[self.n_stable..])
    }

    /// Sup of the contracting eigencoordinates.
    pub fn proj_onto_stable(&self, x: &Vector<D>) -> f64 {
        let e = self.to_eigen(x);
        sup_of(&e[..self.n_stable])
    }

    /// The unique `z` with `z − x` contracting and `z − y` expanding.
    pub fn bracket(&self, x: &Vector<D>, y: &Vector<D>) -> Vector<D> {
        let ex = self.to_eigen(x);
        let ey = self.to_eigen(y);
        let ez: Vector<D> = std::array::from_fn(|k| if k < self.n_stable { ey[k] } else { ex[k] });
        self.from_eigen(&ez)
    }

    /// Sup-norm of the eigencoordinates.
    pub fn eigen_norm(&self, x: &Vector<D>) -> f64 {
        linalg::sup_norm(&self.to_eigen(x))
    }

    pub fn summary(&self) -> Classification {
        Classification {
            matrix: self.matrix.iter().map(|r| r.to_vec()).collect(),
            det: self.det,
            charpoly: self.charpoly.clone(),
            eigenvalues: self.eigenvalues.to_vec(),
            eigenvectors: self.basis.iter().map(|v| v.to_vec()).collect(),
            stable_dim: self.n_stable,
            unstable_dim: D - self.n_stable,
            irreducible: self.irreducible(),
            t3_class: self.t3_class,
            strong_unstable: self.strong_unstable(),
        }
    }
}

impl ToralAutomorphism<3> {
    /// Indices of the eigendirections in the T³ class.
    pub const S: usize = 0;
    pub const C: usize = 1;
    pub const U: usize = 2;

    pub fn lambda_s(&self) -> f64 {
        self.eigenvalues[0]
    }
    pub fn lambda_c(&self) -> f64 {
        self.eigenvalues[1]
    }
    pub fn lambda_u(&self) -> f64 {
        self.eigenvalues[2]
    }

    /// Fixed points of the induced torus map, `{x : (A − I)x ∈ ℤ³}`, listed
    /// as exact fractions `k / |det(A − I)|`.
    pub fn fixed_points(&self) -> Vec<Vector<3>> {
        let mut b = self.matrix;
        for (i, row) in b.iter_mut().enumerate() {
            row[i] -= 1;
        }
        let d = linalg::idet(&b) as i64;
        let adj = linalg::iadjugate(&b);
        let q = d.abs();
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        // (A − I)x = k  ⇔  x = adj·k / d; numerators modulo q enumerate all.
        for k0 in 0..q {
            for k1 in 0..q {
                for k2 in 0..q {
                    let k = [k0, k1, k2];
                    let num: [i64; 3] = std::array::from_fn(|i| {
                        let s: i64 = (0..3).map(|j| adj[i][j] * k[j]).sum();
                        (s * d.signum()).rem_euclid(q)
                    });
                    if seen.insert(num) {
                        out.push(std::array::from_fn(|i| num[i] as f64 / q as f64));
                    }
                }
            }
        }
        out
    }
}

fn sup_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.abs() > m.abs() { *x } else { m })
}

/// Coefficients of `det(xI − A)`, highest degree first.
pub fn charpoly<const D: usize>(m: &IMatrix<D>) -> Vec<i64> {
    let tr: i64 = (0..D).map(|i| m[i][i]).sum();
    let det = linalg::idet(m) as i64;
    match D {
        2 => vec![1, -tr, det],
        3 => {
            let c2 = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
                + m[1][1] * m[2][2]
                - m[1][2] * m[2][1];
            vec![1, -tr, c2, -det]
        }
        _ => panic!("charpoly supports dimensions 2 and 3"),
    }
}

fn eval_exact(p: &[i64], x: i128) -> i128 {
    p.iter().fold(0i128, |acc, &c| acc * x + c as i128)
}

fn eval(p: &[i64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c as f64)
}

/// All real roots of a monic integer polynomial of degree ≤ 3, ascending,
/// each isolated by bisection between consecutive critical points.
pub fn real_roots(p: &[i64]) -> Vec<f64> {
    let deg = p.len() - 1;
    let bound = 1.0 + p[1..].iter().map(|c| c.abs() as f64).fold(0.0, f64::max);
    let mut knots = vec![-bound];
    match deg {
        1 => {}
        2 => knots.push(-(p[1] as f64) / 2.0),
        3 => {
            // p' = 3x² + 2a x + b
            let (a, b) = (p[1] as f64, p[2] as f64);
            let disc = 4.0 * a * a - 12.0 * b;
            if disc > 0.0 {
                let s = disc.sqrt();
                let mut c = [(-2.0 * a - s) / 6.0, (-2.0 * a + s) / 6.0];
                c.sort_by(f64::total_cmp);
                // Polish the critical points against the exact derivative.
                let dp = [3, 2 * p[1], p[2]];
                for ci in c.iter_mut() {
                    for _ in 0..3 {
                        let d2 = 6.0 * *ci + 2.0 * a;
                        if d2 != 0.0 {
                            *ci -= eval(&dp, *ci) / d2;
                        }
                    }
                }
                knots.extend_from_slice(&c);
            }
        }
        _ => panic!("degree {deg} not supported"),
    }
    knots.push(bound);
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        if let Some(r) = bisect(p, w[0], w[1]) {
            roots.push(r);
        }
    }
    roots
}

fn bisect(p: &[i64], mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = eval(p, lo);
    let fhi = eval(p, hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Some(mid);
        }
        let fm = eval(p, mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
}

fn complex_rejection<const D: usize>(p: &[i64], roots: &[f64], det: i64) -> Error {
    // A complex pair has modulus² = det / (product of the real roots).
    let real_prod: f64 = roots.iter().product();
    let modulus = (det as f64 / real_prod).abs().sqrt();
    if (modulus - 1.0).abs() < HYPERBOLICITY_TOL {
        Error::NotHyperbolic(modulus)
    } else {
        Error::UnsupportedSpectrum(format!(
            "characteristic polynomial {p:?} has a complex pair of modulus {modulus}"
        ))
    }
}

/// Unit null vector of `A − λI`, first nonzero coordinate positive.
fn eigenvector<const D: usize>(a: &Matrix<D>, lambda: f64) -> Vector<D> {
    let mut m = *a;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let mut v = [0.0; D];
    match D {
        2 => {
            let c1 = [m[0][1], -m[0][0]];
            let c2 = [m[1][1], -m[1][0]];
            let c = if c1[0].hypot(c1[1]) >= c2[0].hypot(c2[1]) { c1 } else { c2 };
            v[0] = c[0];
            v[1] = c[1];
        }
        3 => {
            let r: [Vector<3>; 3] = std::array::from_fn(|i| [m[i][0], m[i][1], m[i][2]]);
            let cands = [linalg::cross(&r[0], &r[1]), linalg::cross(&r[0], &r[2]), linalg::cross(&r[1], &r[2])];
            let best = cands
                .iter()
                .max_by(|x, y| linalg::norm(x).total_cmp(&linalg::norm(y)))
                .copied()
                .unwrap_or([0.0; 3]);
            v[..3].copy_from_slice(&best);
        }
        _ => unreachable!(),
    }
    let n = linalg::norm(&v);
    let mut v = linalg::scale(&v, 1.0 / n);
    if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
        if *first < 0.0 {
            v = linalg::scale(&v, -1.0);
        }
    }
    v
}

/// Componentwise fractional part in `[0, 1)`.
#[inline]
pub fn frac<const D: usize>(x: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| {
        let f = x[i] - x[i].floor();
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    })
}

/// The lift of `x − y` with every coordinate in `[−1/2, 1/2)`.
#[inline]
pub fn wrap_diff<const D: usize>(x: &Vector<D>, y: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| {
        let d = x[i] - y[i];
        d - (d + 0.5).floor()
    })
}

/// Euclidean distance on the torus.
#[inline]
pub fn torus_dist<const D: usize>(x: &Vector<D>, y: &Vector<D>) -> f64 {
    linalg::norm(&wrap_diff(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_a() -> ToralAutomorphism<3> {
        ToralAutomorphism::classify_t3([[0, 0, 1], [1, 0, -5], [0, 1, 6]]).unwrap()
    }

    #[test]
    fn cat_map_eigenvalues() {
        let cat = ToralAutomorphism::<2>::classify([[2, 1], [1, 1]]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((cat.eigenvalues()[0] - (3.0 - s5) / 2.0).abs() < 1e-14);
        assert!((cat.eigenvalues()[1] - (3.0 + s5) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn cat_map_point() {
        let cat = ToralAutomorphism::<2>::classify([[2, 1], [1, 1]]).unwrap();
        assert_eq!(cat.apply_torus(&[0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(cat.apply_torus(&[0.5, 0.5]), [0.5, 0.0]);
    }

    #[test]
    fn shear_is_not_hyperbolic() {
        assert!(matches!(
            ToralAutomorphism::<2>::classify([[1, 1], [0, 1]]),
            Err(Error::NotHyperbolic(_))
        ));
    }

    #[test]
    fn non_unimodular_rejected() {
        assert_eq!(
            ToralAutomorphism::<2>::classify([[2, 0], [0, 1]]).unwrap_err(),
            Error::NotUnimodular(2)
        );
    }

    #[test]
    fn default_matrix_is_t3() {
        let a = default_a();
        let l = a.eigenvalues();
        assert!((l.iter().sum::<f64>() - 6.0).abs() < 1e-13);
        assert!((l.iter().product::<f64>() - 1.0).abs() < 1e-13);
        assert!(a.strong_unstable());
        assert_eq!(a.fixed_points().len(), 1);
    }

    #[test]
    fn eigenvectors_are_eigen() {
        let a = default_a();
        for k in 0..3 {
            let v = a.eigenvector(k);
            let av = a.apply(v);
            for i in 0..3 {
                assert!((av[i] - a.eigenvalues()[k] * v[i]).abs() < 1e-12);
            }
        }
        let eu = *a.eigenvector(2);
        let e = a.to_eigen(&eu);
        assert!((e[2] - 1.0).abs() < 1e-12 && e[0].abs() < 1e-12 && e[1].abs() < 1e-12);
    }

    #[test]
    fn bracket_of_basis_vectors() {
        let a = default_a();
        let es = *a.eigenvector(0);
        let eu = *a.eigenvector(2);
        let z = a.bracket(&eu, &es);
        let want = linalg::add(&es, &eu);
        for i in 0..3 {
            assert!((z[i] - want[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn two_fixed_points_for_det_two() {
        let b = ToralAutomorphism::classify_t3([[0, 0, 1], [1, 0, -38], [0, 1, 40]]).unwrap();
        let fp = b.fixed_points();
        assert_eq!(fp.len(), 2);
        assert!(fp.contains(&[0.5, 0.5, 0.5]));
    }
}
