//! Derived-from-Anosov maps: a linear automorphism modified inside a small
//! ball by a one-dimensional bifurcation along an eigendirection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::torus::{frac, wrap_diff, ToralAutomorphism};

/// C² radial cutoff: 1 on `[0, inner]`, exactly 0 on `[outer, ∞)`, quintic
/// smoothstep in between.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        if r >= self.outer {
            0.0
        } else if r <= self.inner {
            1.0
        } else {
            let t = (r - self.inner) / (self.outer - self.inner);
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }

    #[inline]
    pub fn derivative(&self, r: f64) -> f64 {
        if r >= self.outer || r <= self.inner {
            0.0
        } else {
            let w = self.outer - self.inner;
            let t = (r - self.inner) / w;
            -30.0 * t * t * (1.0 - t) * (1.0 - t) / w
        }
    }

    /// Supremum of `|φ'|`.
    pub fn max_slope(&self) -> f64 {
        1.875 / (self.outer - self.inner)
    }
}

/// Displacement profile `k(c) = K0·tanh(c/ℓ)` along the bifurcating axis.
///
/// With eigenvalue λ along the axis, `c ↦ λc + k(c)` has derivative μ at 0
/// and fixed points at `±c*`, where its derivative lies in `(0, 1)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CenterProfile {
    pub k0: f64,
    pub ell: f64,
}

impl CenterProfile {
    pub fn solve(lambda: f64, mu: f64, cstar: f64) -> Result<Self> {
        if !(mu > 1.0 && mu > lambda) {
            return Err(Error::BadBifurcation(format!("mu = {mu} must exceed 1 and the eigenvalue {lambda}")));
        }
        if !(cstar > 0.0) || !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::BadBifurcation(format!("need cstar > 0 and 0 < lambda < 1 (lambda = {lambda})")));
        }
        // ℓ·tanh(c*/ℓ) increases from 0 to c* as ℓ grows.
        let target = (1.0 - lambda) * cstar / (mu - lambda);
        let g = |ell: f64| ell * (cstar / ell).tanh() - target;
        let (mut lo, mut hi) = (cstar * 1e-6, cstar * 1e6);
        if g(lo) >= 0.0 || g(hi) <= 0.0 {
            return Err(Error::BadBifurcation("profile equation has no root".into()));
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let ell = 0.5 * (lo + hi);
        Ok(CenterProfile { k0: (mu - lambda) * ell, ell })
    }

    #[inline]
    pub fn k(&self, c: f64) -> f64 {
        self.k0 * (c / self.ell).tanh()
    }

    #[inline]
    pub fn dk(&self, c: f64) -> f64 {
        let t = (c / self.ell).tanh();
        self.k0 / self.ell * (1.0 - t * t)
    }
}

/// `f(x) = A x + φ(|x − x1|)·k(c(x))·e`, where `e` is the eigenvector at
/// index `axis` and `c` the matching eigencoordinate of `x − x1`. In 3D the
/// axis is the center direction; in 2D it is the stable direction, turning
/// the fixed point into a source.
#[derive(Debug, Clone)]
pub struct DaMap<const D: usize> {
    base: ToralAutomorphism<D>,
    x1: Vector<D>,
    axis: usize,
    rho: f64,
    mu: f64,
    cstar: f64,
    cutoff: Cutoff,
    profile: CenterProfile,
    e: Vector<D>,
    dual: Vector<D>,
    lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DaSummary {
    pub x1: Vec<f64>,
    pub rho: f64,
    pub mu: f64,
    pub cstar: f64,
    pub k0: f64,
    pub ell: f64,
    pub fixed_points: Vec<Vec<f64>>,
    pub axis_derivatives: Vec<f64>,
}

impl<const D: usize> DaMap<D> {
    /// Builds the map without the bifurcation checks of [`DaMap::build`].
    pub fn unchecked(base: ToralAutomorphism<D>, x1: Vector<D>, axis: usize, rho: f64, mu: f64, cstar: f64) -> Result<Self> {
        let lambda = base.eigenvalues()[axis];
        let profile = CenterProfile::solve(lambda, mu, cstar)?;
        let e = *base.eigenvector(axis);
        let dual = base.dual_basis()[axis];
        Ok(DaMap {
            base,
            x1: frac(&x1),
            axis,
            rho,
            mu,
            cstar,
            cutoff: Cutoff { inner: rho / 4.0, outer: rho / 2.0 },
            profile,
            e,
            dual,
            lambda,
        })
    }

    pub fn base(&self) -> &ToralAutomorphism<D> {
        &self.base
    }
    pub fn x1(&self) -> &Vector<D> {
        &self.x1
    }
    pub fn axis(&self) -> usize {
        self.axis
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn cstar(&self) -> f64 {
        self.cstar
    }
    pub fn cutoff(&self) -> &Cutoff {
        &self.cutoff
    }
    pub fn profile(&self) -> &CenterProfile {
        &self.profile
    }
    /// Unit eigenvector along which points are displaced.
    pub fn axis_vector(&self) -> &Vector<D> {
        &self.e
    }
    pub fn axis_eigenvalue(&self) -> f64 {
        self.lambda
    }
    /// Bound on `|δ|`.
    pub fn max_displacement(&self) -> f64 {
        self.profile.k0
    }

    /// Displacement along the axis; exactly 0 outside `B_{ρ/2}(x1)`.
    #[inline]
    pub fn delta(&self, x: &Vector<D>) -> f64 {
        let d = wrap_diff(x, &self.x1);
        let r = linalg::norm(&d);
        if r >= self.cutoff.outer {
            return 0.0;
        }
        self.cutoff.value(r) * self.profile.k(linalg::dot(&self.dual, &d))
    }

    pub fn grad_delta(&self, x: &Vector<D>) -> Vector<D> {
        let d = wrap_diff(x, &self.x1);
        let r = linalg::norm(&d);
        if r >= self.cutoff.outer {
            return [0.0; D];
        }
        let c = linalg::dot(&self.dual, &d);
        let phi = self.cutoff.value(r);
        let dphi = self.cutoff.derivative(r);
        let k = self.profile.k(c);
        let dk = self.profile.dk(c);
        std::array::from_fn(|i| {
            let radial = if r > 0.0 { dphi * d[i] / r * k } else { 0.0 };
            radial + phi * dk * self.dual[i]
        })
    }

    /// The one-dimensional map on the axis line through `x1`.
    pub fn axis_map(&self, c: f64) -> f64 {
        let x: Vector<D> = std::array::from_fn(|i| self.x1[i] + c * self.e[i]);
        self.lambda * c + self.delta(&x)
    }

    pub fn axis_map_derivative(&self, c: f64) -> f64 {
        let x: Vector<D> = std::array::from_fn(|i| self.x1[i] + c * self.e[i]);
        self.lambda + linalg::dot(&self.grad_delta(&x), &self.e)
    }

    /// `[x1, x1 + c*·e, x1 − c*·e]`, lifted next to `x1`.
    pub fn bifurcation_points(&self) -> [Vector<D>; 3] {
        let shift = |s: f64| -> Vector<D> { std::array::from_fn(|i| self.x1[i] + s * self.cstar * self.e[i]) };
        [self.x1, shift(1.0), shift(-1.0)]
    }

    /// Jacobian in eigencoordinates: `diag(λ)` plus the gradient of δ,
    /// expressed in the eigenbasis, in the row of the axis.
    pub fn jacobian_eigen(&self, x: &Vector<D>) -> Matrix<D> {
        let g = self.grad_delta(x);
        let mut m = [[0.0; D]; D];
        for (k, row) in m.iter_mut().enumerate() {
            row[k] = self.base.eigenvalues()[k];
        }
        for j in 0..D {
            m[self.axis][j] += linalg::dot(&g, self.base.eigenvector(j));
        }
        m
    }

    /// The shift `τ` along the axis with `f(z0 + τe) = A z0`, i.e. the root
    /// of `λτ + δ(z0 + τe) = 0`; the left side is increasing in τ.
    pub fn backward_shift(&self, z0: &Vector<D>) -> f64 {
        let at = |t: f64| -> Vector<D> { std::array::from_fn(|i| z0[i] + t * self.e[i]) };
        let bound = self.profile.k0 / self.lambda * (1.0 + 1e-9);
        if linalg::norm(&wrap_diff(z0, &self.x1)) >= self.cutoff.outer + bound {
            return 0.0;
        }
        let g = |t: f64| self.lambda * t + self.delta(&at(t));
        let (mut lo, mut hi) = (-bound, bound);
        let mut t = 0.0;
        for _ in 0..200 {
            let v = g(t);
            if v == 0.0 {
                break;
            }
            if v < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let dv = self.lambda + linalg::dot(&self.grad_delta(&at(t)), &self.e);
            let mut next = t - v / dv;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-17 + 1e-16 * t.abs() {
                t = next;
                break;
            }
            t = next;
        }
        t
    }
}

impl DaMap<3> {
    /// Validated construction of the 3D map bifurcating the center direction
    /// at the fixed point `x1`.
    pub fn build(base: ToralAutomorphism<3>, x1: Vector<3>, rho: f64, mu: f64, cstar: f64) -> Result<Self> {
        if !base.is_t3_class() {
            return Err(Error::WrongClass("DA construction needs the T³ class".into()));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::BadBifurcation(format!("rho = {rho} must lie in (0, 1)")));
        }
        if !(cstar > 0.0 && cstar < rho / 4.0) {
            return Err(Error::BadBifurcation(format!("cstar = {cstar} must lie in (0, rho/4)")));
        }
        if !(mu > 1.0 && mu < base.lambda_u()) {
            return Err(Error::BadBifurcation(format!("mu = {mu} must lie in (1, lambda_u)")));
        }
        let ax = base.apply(&x1);
        if linalg::norm(&wrap_diff(&ax, &x1)) > 1e-12 {
            return Err(Error::BadBifurcation("x1 is not fixed by A".into()));
        }
        let f = Self::unchecked(base, x1, ToralAutomorphism::<3>::C, rho, mu, cstar)?;
        f.check_bifurcation()?;
        f.check_support()?;
        Ok(f)
    }

    fn check_bifurcation(&self) -> Result<()> {
        // Roots of the axis map minus identity, by sign changes on a fine grid.
        let half = self.rho / 4.0;
        let n = 20_000;
        let h = |c: f64| self.axis_map(c) - c;
        let mut roots = 0;
        let mut prev = h(-half);
        for i in 1..=n {
            let c = -half + 2.0 * half * i as f64 / n as f64;
            let v = h(c);
            if (prev > 0.0) != (v > 0.0) {
                roots += 1;
            }
            if self.axis_map_derivative(c) <= 0.0 {
                return Err(Error::BadBifurcation(format!("axis map not monotone at c = {c}")));
            }
            prev = v;
        }
        if roots != 3 {
            return Err(Error::BadBifurcation(format!("axis map has {roots} fixed points, expected 3")));
        }
        let d0 = self.axis_map_derivative(0.0);
        let d2 = self.axis_map_derivative(self.cstar);
        let d3 = self.axis_map_derivative(-self.cstar);
        if (d0 - self.mu).abs() > 1e-9 {
            return Err(Error::BadBifurcation(format!("derivative at x1 is {d0}, expected {}", self.mu)));
        }
        for d in [d2, d3] {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::BadBifurcation(format!("derivative {d} at a created fixed point is not in (0,1)")));
            }
        }
        for p in self.bifurcation_points() {
            let r = linalg::norm(&wrap_diff(&self.forward(&p), &p));
            if r > 1e-12 {
                return Err(Error::BadBifurcation(format!("bifurcation point moves by {r}")));
            }
        }
        Ok(())
    }

    fn check_support(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..1000 {
            let dir: Vector<3> = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n = linalg::norm(&dir).max(1e-12);
            let r = self.cutoff.outer * (1.0 + rng.gen_range(0.0..0.1));
            let x: Vector<3> = std::array::from_fn(|i| self.x1[i] + dir[i] / n * r);
            let v = self.delta(&x);
            if v != 0.0 {
                return Err(Error::SupportLeak(v));
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> DaSummary {
        let pts = self.bifurcation_points();
        DaSummary {
            x1: self.x1.to_vec(),
            rho: self.rho,
            mu: self.mu,
            cstar: self.cstar,
            k0: self.profile.k0,
            ell: self.profile.ell,
            fixed_points: pts.iter().map(|p| frac(p).to_vec()).collect(),
            axis_derivatives: [0.0, self.cstar, -self.cstar].iter().map(|&c| self.axis_map_derivative(c)).collect(),
        }
    }
}

impl DaMap<2> {
    /// Planar map turning the fixed point `x1` of a hyperbolic 2×2
    /// automorphism into a source, with two saddles at `±cstar` along the
    /// stable direction. The complement of the source's basin is a
    /// hyperbolic attractor.
    pub fn build_planar(base: ToralAutomorphism<2>, x1: Vector<2>, rho: f64, mu: f64, cstar: f64) -> Result<Self> {
        if base.stable_dim() != 1 || base.eigenvalues()[0] <= 0.0 {
            return Err(Error::WrongClass("planar DA needs a positive stable eigenvalue".into()));
        }
        if !(cstar > 0.0 && cstar < rho / 4.0) {
            return Err(Error::BadBifurcation(format!("cstar = {cstar} must lie in (0, rho/4)")));
        }
        Self::unchecked(base, x1, 0, rho, mu, cstar)
    }
}

impl<const D: usize> Dynamics<D> for DaMap<D> {
    fn base(&self) -> &ToralAutomorphism<D> {
        &self.base
    }

    #[inline]
    fn forward(&self, x: &Vector<D>) -> Vector<D> {
        let mut y = self.base.apply(x);
        let k = self.delta(x);
        if k != 0.0 {
            for i in 0..D {
                y[i] += k * self.e[i];
            }
        }
        y
    }

    fn backward(&self, x: &Vector<D>) -> Vector<D> {
        let z0 = self.base.apply_inverse(x);
        let t = self.backward_shift(&z0);
        if t == 0.0 {
            return z0;
        }
        std::array::from_fn(|i| z0[i] + t * self.e[i])
    }

    fn jacobian(&self, x: &Vector<D>) -> Matrix<D> {
        let g = self.grad_delta(x);
        let mut m = *self.base.float_matrix();
        for i in 0..D {
            for j in 0..D {
                m[i][j] += self.e[i] * g[j];
            }
        }
        m
    }
}

/// Outcome of a sampled cone-field check.
#[derive(Debug, Clone, Serialize)]
pub struct ConeReport {
    pub theta: f64,
    pub samples: usize,
    pub unstable_failures: usize,
    pub stable_failures: usize,
    /// Lower bound on `|Df v| / |v|` over the unstable cone.
    pub min_unstable_growth: f64,
    /// Lower bound on `|Df⁻¹ v| / |v|` over the stable cone.
    pub min_stable_growth: f64,
    /// Largest image aperture relative to `tan θ` (must stay below 1).
    pub worst_unstable_ratio: f64,
    pub worst_stable_ratio: f64,
    pub witnesses: Vec<Vec<f64>>,
}

impl ConeReport {
    pub fn passed(&self) -> bool {
        self.unstable_failures == 0 && self.stable_failures == 0
    }
}

/// Bounds on the cone images at one point, from the eigencoordinate
/// Jacobian `J` (diagonal except the center row `(a, λc + p, b)`).
/// Returns `(unstable aperture/t, unstable growth, stable aperture/t,
/// stable growth)`.
pub fn cone_bounds(j: &Matrix<3>, t: f64) -> (f64, f64, f64, f64) {
    let (ls, lu) = (j[0][0], j[2][2]);
    let (a, d, b) = (j[1][0], j[1][1], j[1][2]);
    let scale = (1.0 + t * t).sqrt();
    let u_ap = ((ls * t).powi(2) + (b.abs() + t * (a * a + d * d).sqrt()).powi(2)).sqrt() / lu;
    let u_growth = lu / scale;
    let s_ap = if d > 0.0 {
        (((ls * t + a.abs() + b.abs() * t * ls / lu) / d).powi(2) + (ls * t / lu).powi(2)).sqrt()
    } else {
        f64::INFINITY
    };
    let s_growth = 1.0 / (ls * scale);
    (u_ap / t, u_growth, s_ap / t, s_growth)
}

/// Samples points uniformly in the perturbation ball (plus one point
/// outside it, where the derivative is constant) and checks strict
/// invariance of the unstable cone under `Df` and of the stable cone under
/// `Df⁻¹`, both of half-angle θ about the eigendirections.
pub fn verify_cones(f: &DaMap<3>, theta: f64, n_samples: usize, seed: u64) -> ConeReport {
    let t = theta.tan();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ConeReport {
        theta,
        samples: 0,
        unstable_failures: 0,
        stable_failures: 0,
        min_unstable_growth: f64::INFINITY,
        min_stable_growth: f64::INFINITY,
        worst_unstable_ratio: 0.0,
        worst_stable_ratio: 0.0,
        witnesses: Vec::new(),
    };
    let outside: Vector<3> = std::array::from_fn(|i| f.x1()[i] + if i == 0 { 0.5 } else { 0.0 });
    let r = f.cutoff().outer;
    for k in 0..=n_samples {
        let x = if k == 0 {
            outside
        } else {
            loop {
                let d: Vector<3> = std::array::from_fn(|_| rng.gen_range(-r..r));
                if linalg::norm(&d) < r {
                    break std::array::from_fn(|i| f.x1()[i] + d[i]);
                }
            }
        };
        let j = f.jacobian_eigen(&x);
        let (ua, ug, sa, sg) = cone_bounds(&j, t);
        rep.samples += 1;
        rep.worst_unstable_ratio = rep.worst_unstable_ratio.max(ua);
        rep.worst_stable_ratio = rep.worst_stable_ratio.max(sa);
        rep.min_unstable_growth = rep.min_unstable_growth.min(ug);
        rep.min_stable_growth = rep.min_stable_growth.min(sg);
        let mut bad = false;
        if ua >= 1.0 {
            rep.unstable_failures += 1;
            bad = true;
        }
        if sa >= 1.0 {
            rep.stable_failures += 1;
            bad = true;
        }
        if bad && rep.witnesses.len() < 16 {
            rep.witnesses.push(frac(&x).to_vec());
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b() -> ToralAutomorphism<3> {
        ToralAutomorphism::classify_t3([[0, 0, 1], [1, 0, -38], [0, 1, 40]]).unwrap()
    }

    #[test]
    fn cutoff_is_c1_and_clamped() {
        let c = Cutoff { inner: 0.05, outer: 0.1 };
        assert_eq!(c.value(0.1), 0.0);
        assert_eq!(c.value(0.2), 0.0);
        assert_eq!(c.value(0.01), 1.0);
        let h = 1e-7;
        for r in [0.06, 0.075, 0.09] {
            let fd = (c.value(r + h) - c.value(r - h)) / (2.0 * h);
            assert!((fd - c.derivative(r)).abs() < 1e-5);
        }
    }

    #[test]
    fn profile_hits_targets() {
        let p = CenterProfile::solve(0.9459, 1.2, 0.03).unwrap();
        assert!((p.dk(0.0) - (1.2 - 0.9459)).abs() < 1e-12);
        assert!((0.9459 * 0.03 + p.k(0.03) - 0.03).abs() < 1e-12);
        assert!(CenterProfile::solve(0.9459, 0.9459, 0.03).is_err());
    }

    #[test]
    fn backward_inverts_forward() {
        let f = DaMap::build(b(), [0.5; 3], 0.2, 1.2, 0.03).unwrap();
        for p in [[0.5, 0.5, 0.5], [0.52, 0.49, 0.51], [0.1, 0.2, 0.3], [0.55, 0.45, 0.5]] {
            let y = f.forward(&p);
            let z = f.backward(&y);
            assert!(linalg::norm(&linalg::sub(&z, &p)) < 1e-12, "{p:?} -> {z:?}");
        }
    }

    #[test]
    fn degenerate_mu_rejected() {
        let a = b();
        let lc = a.lambda_c();
        assert!(matches!(DaMap::build(a, [0.5; 3], 0.2, lc, 0.03), Err(Error::BadBifurcation(_))));
    }
}
