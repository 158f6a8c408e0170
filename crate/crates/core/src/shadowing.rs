//! Pseudo-orbits and their shadowing orbits.
//!
//! Distances are measured as the sup-norm of eigencoordinates of the base
//! automorphism. In that norm the linear shadowing constant is exactly
//! `max(1/(1 − λ_c), 1/(λ_u − 1))`.

use rand::Rng;
use serde::Serialize;

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::torus::{frac, wrap_diff, ToralAutomorphism};

/// Finite sequence of lifted points together with its measured jump bound.
#[derive(Debug, Clone)]
pub struct PseudoOrbit<const D: usize> {
    pub points: Vec<Vector<D>>,
    /// `max_n d(F(x_n), x_{n+1})`, measured.
    pub alpha: f64,
    /// Jump from `F(x_N)` back to `x_0`.
    pub closing_jump: f64,
}

impl<const D: usize> PseudoOrbit<D> {
    /// Measures the jumps of `points` under `f`. Jumps are taken modulo ℤ^D.
    pub fn measure<F: Dynamics<D>>(f: &F, points: Vec<Vector<D>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::EmptyOrbit);
        }
        let a = f.base();
        let alpha = points
            .windows(2)
            .map(|w| a.eigen_norm(&wrap_diff(&w[1], &f.forward(&w[0]))))
            .fold(0.0, f64::max);
        let closing = a.eigen_norm(&wrap_diff(&points[0], &f.forward(points.last().unwrap())));
        Ok(PseudoOrbit { points, alpha, closing_jump: closing })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Random torus pseudo-orbit of `n + 1` points whose jumps are uniform in
    /// the eigen-box of half-width `alpha`.
    pub fn random<F: Dynamics<D>, R: Rng>(f: &F, n: usize, alpha: f64, rng: &mut R) -> Self {
        let a = f.base();
        let mut x: Vector<D> = std::array::from_fn(|_| rng.gen::<f64>());
        let mut pts = Vec::with_capacity(n + 1);
        pts.push(x);
        for _ in 0..n {
            let jump: Vector<D> = std::array::from_fn(|_| rng.gen_range(-alpha..alpha));
            x = frac(&linalg::add(&f.forward(&x), &a.from_eigen(&jump)));
            pts.push(x);
        }
        Self::measure(f, pts).expect("at least two points")
    }

    /// Random closed pseudo-orbit: the exact periodic orbit of a random point
    /// of the lattice `2^{-bits} ℤ^D`, with each point displaced by noise whose
    /// eigencoordinates are small enough that every jump, including the
    /// closing one, is at most `alpha`.
    pub fn random_closed<R: Rng>(a: &ToralAutomorphism<D>, bits: u32, alpha: f64, rng: &mut R) -> Self {
        let q = 1i64 << bits;
        let start: [i64; D] = std::array::from_fn(|_| rng.gen_range(0..q));
        let m = a.matrix();
        let mut p = start;
        let mut pts = Vec::new();
        loop {
            let d: Vector<D> = std::array::from_fn(|i| {
                let bound = alpha / (1.0 + a.eigenvalues()[i].abs());
                rng.gen_range(-bound..bound)
            });
            let base: Vector<D> = std::array::from_fn(|i| p[i] as f64 / q as f64);
            pts.push(frac(&linalg::add(&base, &a.from_eigen(&d))));
            p = std::array::from_fn(|i| (0..D).map(|j| m[i][j] * p[j]).sum::<i64>().rem_euclid(q));
            if p == start {
                break;
            }
        }
        if pts.len() < 2 {
            pts.push(pts[0]);
        }
        Self::measure(a, pts).expect("at least two points")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Zero stable correction at the start, zero unstable correction at the end.
    Free,
    /// The orbit is treated as cyclic, including the closing jump.
    Periodic,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShadowResult<const D: usize> {
    #[serde(skip)]
    pub orbit: Vec<Vector<D>>,
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
    #[serde(rename = "K_bound")]
    pub k_bound: f64,
    pub iterations: usize,
}

/// Exact shadowing for a linear automorphism, solved per eigencoordinate by
/// geometric series: contracting coordinates forward, expanding backward.
pub fn shadow_linear<const D: usize>(
    a: &ToralAutomorphism<D>,
    po: &PseudoOrbit<D>,
    boundary: Boundary,
) -> Result<ShadowResult<D>> {
    let x = &po.points;
    if x.is_empty() {
        return Err(Error::EmptyOrbit);
    }
    let n = x.len();
    let cyclic = boundary == Boundary::Periodic;
    let m = if cyclic { n } else { n - 1 };
    // Integer lift shifts and eigen-jumps e_j = x_{j+1} − A x_j − k_j.
    let mut shifts = Vec::with_capacity(m);
    let mut jumps = Vec::with_capacity(m);
    for j in 0..m {
        let next = &x[(j + 1) % n];
        let ax = a.apply(&x[j]);
        let raw = linalg::sub(next, &ax);
        let k: Vector<D> = std::array::from_fn(|i| raw[i].round());
        shifts.push(k);
        jumps.push(a.to_eigen(&linalg::sub(&raw, &k)));
    }
    let lam = *a.eigenvalues();
    let mut corr = vec![[0.0; D]; n];
    for i in 0..D {
        let l = lam[i];
        if l.abs() < 1.0 {
            // c_{j+1} = λ c_j − e_j
            let mut c0 = 0.0;
            if cyclic {
                let mut s = 0.0;
                for e in &jumps {
                    s = l * s - e[i];
                }
                c0 = s / (1.0 - l.powi(n as i32));
            }
            corr[0][i] = c0;
            for j in 0..n - 1 {
                corr[j + 1][i] = l * corr[j][i] - jumps[j][i];
            }
        } else {
            // c_j = (c_{j+1} + e_j) / λ
            let mut cn = 0.0;
            if cyclic {
                let mut s = 0.0;
                for e in jumps.iter().rev() {
                    s = (s + e[i]) / l;
                }
                cn = s / (1.0 - l.powi(-(n as i32)));
                // `cn` is the correction at index 0 ≡ n.
                corr[0][i] = cn;
                for j in (1..n).rev() {
                    let next = if j + 1 == n { cn } else { corr[j + 1][i] };
                    corr[j][i] = (next + jumps[j][i]) / l;
                }
                continue;
            }
            corr[n - 1][i] = cn;
            for j in (0..n - 1).rev() {
                corr[j][i] = (corr[j + 1][i] + jumps[j][i]) / l;
            }
        }
    }
    let orbit: Vec<Vector<D>> = x.iter().zip(&corr).map(|(p, c)| linalg::add(p, &a.from_eigen(c))).collect();
    let beta = corr.iter().map(linalg::sup_norm).fold(0.0, f64::max);
    let mut residual: f64 = 0.0;
    for j in 0..m {
        let r = linalg::sub(&linalg::add(&a.apply(&orbit[j]), &shifts[j]), &orbit[(j + 1) % n]);
        residual = residual.max(a.eigen_norm(&r));
    }
    Ok(ShadowResult {
        orbit,
        alpha: if cyclic { po.alpha.max(po.closing_jump) } else { po.alpha },
        beta,
        residual,
        k_bound: a.shadowing_constant(),
        iterations: 1,
    })
}

/// Newton shadowing for a nonlinear lift `F`.
///
/// Each step is the minimum-norm Gauss-Newton correction of the residuals
/// `F(y_n) + k_n − y_{n+1}`; the normal equations are block tridiagonal and
/// solved by block elimination. Steps that increase the residual are halved.
pub fn shadow_nonlinear<F: Dynamics<3>>(f: &F, po: &PseudoOrbit<3>, tol: f64) -> Result<ShadowResult<3>> {
    const MAX_ITERS: usize = 200;
    let x = &po.points;
    let n = x.len();
    if n < 2 {
        return Err(Error::EmptyOrbit);
    }
    let a = f.base();
    let shifts: Vec<Vector<3>> = (0..n - 1)
        .map(|j| {
            let raw = linalg::sub(&x[j + 1], &f.forward(&x[j]));
            std::array::from_fn(|i| raw[i].round())
        })
        .collect();
    let residuals = |y: &[Vector<3>]| -> Vec<Vector<3>> {
        (0..n - 1)
            .map(|j| linalg::sub(&linalg::add(&f.forward(&y[j]), &shifts[j]), &y[j + 1]))
            .collect()
    };
    let measure = |r: &[Vector<3>]| r.iter().map(|v| a.eigen_norm(v)).fold(0.0, f64::max);
    let mut y = x.clone();
    let mut r = residuals(&y);
    let mut res = measure(&r);
    let mut iterations = 0;
    while res >= tol {
        if iterations == MAX_ITERS {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
        iterations += 1;
        let jac: Vec<Matrix<3>> = y.iter().map(|p| f.jacobian(p)).collect();
        let delta = min_norm_step(&jac, &r);
        let mut t = 1.0;
        loop {
            let trial: Vec<Vector<3>> = y.iter().zip(&delta).map(|(p, d)| linalg::sub(p, &linalg::scale(d, t))).collect();
            let tr = residuals(&trial);
            let tres = measure(&tr);
            if tres < res {
                y = trial;
                r = tr;
                res = tres;
                break;
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(Error::NoConvergence { iterations, residual: res });
            }
        }
    }
    let beta = y
        .iter()
        .zip(x)
        .map(|(p, q)| a.eigen_norm(&linalg::sub(p, q)))
        .fold(0.0, f64::max);
    Ok(ShadowResult {
        orbit: y,
        alpha: po.alpha,
        beta,
        residual: res,
        k_bound: a.shadowing_constant(),
        iterations,
    })
}

/// `Jᵀ (J Jᵀ)⁻¹ r` for the bidiagonal Jacobian with blocks `(DF_j, −I)`.
fn min_norm_step(jac: &[Matrix<3>], r: &[Vector<3>]) -> Vec<Vector<3>> {
    let m = r.len();
    let n = m + 1;
    // Diagonal blocks DF_j DF_jᵀ + I, upper blocks −DF_{j+1}ᵀ.
    let mut dprime: Vec<Matrix<3>> = Vec::with_capacity(m);
    let mut rhs: Vec<Vector<3>> = Vec::with_capacity(m);
    let upper = |j: usize| -> Matrix<3> { neg(&linalg::transpose(&jac[j + 1])) };
    for j in 0..m {
        let dj = linalg::mat_mul(&jac[j], &linalg::transpose(&jac[j]));
        let mut dj = add_identity(&dj);
        let mut rj = r[j];
        if j > 0 {
            let lower = linalg::transpose(&upper(j - 1));
            let inv_prev = linalg::inverse(&dprime[j - 1]).expect("normal equations are positive definite");
            let l_inv = linalg::mat_mul(&lower, &inv_prev);
            let corr = linalg::mat_mul(&l_inv, &upper(j - 1));
            for a in 0..3 {
                for b in 0..3 {
                    dj[a][b] -= corr[a][b];
                }
            }
            rj = linalg::sub(&rj, &linalg::mat_vec(&l_inv, &rhs[j - 1]));
        }
        dprime.push(dj);
        rhs.push(rj);
    }
    let mut w = vec![[0.0; 3]; m];
    for j in (0..m).rev() {
        let mut b = rhs[j];
        if j + 1 < m {
            b = linalg::sub(&b, &linalg::mat_vec(&upper(j), &w[j + 1]));
        }
        w[j] = linalg::solve(&dprime[j], &b).expect("normal equations are positive definite");
    }
    (0..n)
        .map(|k| {
            let mut d = [0.0; 3];
            if k < m {
                d = linalg::mat_vec(&linalg::transpose(&jac[k]), &w[k]);
            }
            if k > 0 {
                d = linalg::sub(&d, &w[k - 1]);
            }
            d
        })
        .collect()
}

fn neg(m: &Matrix<3>) -> Matrix<3> {
    std::array::from_fn(|i| std::array::from_fn(|j| -m[i][j]))
}

fn add_identity(m: &Matrix<3>) -> Matrix<3> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] + if i == j { 1.0 } else { 0.0 }))
}

/// `max_{|n| ≤ horizon} d(F^n x, F^n y)` with the Euclidean torus distance.
pub fn expansivity_gap<const D: usize, F: Dynamics<D>>(f: &F, x: &Vector<D>, y: &Vector<D>, horizon: usize) -> f64 {
    let d0 = wrap_diff(x, y);
    let mut gap = linalg::norm(&d0);
    // Iterate `x` and a lift of `y` next to it, so the difference stays a lift difference.
    let y0 = linalg::sub(x, &d0);
    for dir in [true, false] {
        let (mut p, mut q) = (*x, y0);
        for _ in 0..horizon {
            if dir {
                p = f.forward(&p);
                q = f.forward(&q);
            } else {
                p = f.backward(&p);
                q = f.backward(&q);
            }
            gap = gap.max(linalg::norm(&wrap_diff(&p, &q)));
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_a() -> ToralAutomorphism<3> {
        ToralAutomorphism::classify_t3([[0, 0, 1], [1, 0, -5], [0, 1, 6]]).unwrap()
    }

    #[test]
    fn true_orbit_is_its_own_shadow() {
        let a = default_a();
        let mut p = vec![[0.1, 0.2, 0.3]];
        for _ in 0..20 {
            let next = a.apply_torus(p.last().unwrap());
            p.push(next);
        }
        let po = PseudoOrbit::measure(&a, p.clone()).unwrap();
        let s = shadow_linear(&a, &po, Boundary::Free).unwrap();
        assert!(s.beta < 1e-12, "beta {}", s.beta);
    }

    #[test]
    fn single_jump_matches_closed_form() {
        // Orbit of 0 is 0; jump v at step k. Oracle: stable part of v is
        // pushed forward as −λ^{j−k−1} v_s for j > k, unstable part pulled
        // back as λ^{−(k+1−j)} v_u for j ≤ k.
        let a = default_a();
        let k = 5;
        let n = 12;
        let v = a.from_eigen(&[1e-3, -2e-3, 5e-4]);
        let mut pts = vec![[0.0; 3]; n];
        for (j, p) in pts.iter_mut().enumerate().skip(k + 1) {
            *p = a.from_eigen(&std::array::from_fn(|i| {
                a.eigenvalues()[i].powi((j - k - 1) as i32) * a.to_eigen(&v)[i]
            }));
        }
        let po = PseudoOrbit::measure(&a, pts.clone()).unwrap();
        let s = shadow_linear(&a, &po, Boundary::Free).unwrap();
        let ev = a.to_eigen(&v);
        let l = a.eigenvalues();
        for j in 0..n {
            let c = a.to_eigen(&linalg::sub(&s.orbit[j], &pts[j]));
            for i in 0..2 {
                let want = if j > k { -l[i].powi((j - k - 1) as i32) * ev[i] } else { 0.0 };
                assert!((c[i] - want).abs() < 1e-13, "j={j} i={i} c={} want={want}", c[i]);
            }
            let want_u = if j <= k { l[2].powi(-((k + 1 - j) as i32)) * ev[2] } else { 0.0 };
            assert!((c[2] - want_u).abs() < 1e-13);
        }
    }

    #[test]
    fn random_pseudo_orbit_respects_constant() {
        let a = default_a();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let po = PseudoOrbit::random(&a, 500, 1e-3, &mut rng);
            let s = shadow_linear(&a, &po, Boundary::Free).unwrap();
            assert!(s.beta <= s.k_bound * po.alpha + 1e-12);
            assert!(s.residual < 1e-12);
        }
    }

    #[test]
    fn expansivity_gap_linear() {
        let a = default_a();
        let eps = 1e-9;
        let x = [0.3, 0.2, 0.1];
        let y = linalg::add(&x, &linalg::scale(a.eigenvector(2), eps));
        let g = expansivity_gap(&a, &x, &y, 5);
        let want = a.lambda_u().powi(5) * eps;
        assert!((g - want).abs() < 1e-12 * want.max(1.0) + 1e-15, "{g} vs {want}");
        assert_eq!(expansivity_gap(&a, &x, &x, 5), 0.0);
    }
}
