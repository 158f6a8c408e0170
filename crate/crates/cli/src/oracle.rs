//! Reference computations that share no code with the library routines
//! they are compared against.

/// `x³ − t x² + m x − d` for an integer 3×3 matrix, from trace, principal
/// minors and determinant.
pub fn charpoly3(a: &[[i64; 3]; 3]) -> [i64; 4] {
    let t = a[0][0] + a[1][1] + a[2][2];
    let m = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0] + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    [1, -t, m, -det3i(a)]
}

pub fn det3i(a: &[[i64; 3]; 3]) -> i64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn horner(p: &[i64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c as f64)
}

fn horner_d(p: &[i64], x: f64) -> f64 {
    let n = p.len() - 1;
    p[..n].iter().enumerate().fold(0.0, |acc, (i, &c)| acc * x + (n - i) as f64 * c as f64)
}

/// Real roots of a monic integer polynomial, ascending: sign changes on a
/// fine scan of the Cauchy interval, bisection, then Newton polishing.
pub fn real_roots(p: &[i64]) -> Vec<f64> {
    let bound = 1.0 + p[1..].iter().map(|&c| c.unsigned_abs() as f64).fold(0.0, f64::max);
    let steps = 200_000;
    let mut roots = Vec::new();
    let mut x0 = -bound;
    let mut f0 = horner(p, x0);
    for k in 1..=steps {
        let x1 = -bound + 2.0 * bound * k as f64 / steps as f64;
        let f1 = horner(p, x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi) = (x0, x1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if horner(p, lo) * horner(p, mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut x = 0.5 * (lo + hi);
            for _ in 0..5 {
                let d = horner_d(p, x);
                if d == 0.0 {
                    break;
                }
                x -= horner(p, x) / d;
            }
            roots.push(x);
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

fn mat_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|x| x / n)
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Unit dominant eigenvector of `m` by power iteration.
pub fn dominant_eigenvector(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut v = normalize([1.0, 0.7, 0.3]);
    for _ in 0..200 {
        v = normalize(mat_vec(m, &v));
    }
    v
}

pub fn to_float(a: &[[i64; 3]; 3]) -> [[f64; 3]; 3] {
    a.map(|r| r.map(|x| x as f64))
}

pub fn transpose(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}

/// Expanding line and the normal of the complementary invariant plane.
#[derive(Debug, Clone, Copy)]
pub struct Splitting {
    pub unstable: [f64; 3],
    pub normal: [f64; 3],
}

impl Splitting {
    pub fn of(a: &[[i64; 3]; 3]) -> Self {
        let m = to_float(a);
        Splitting { unstable: dominant_eigenvector(&m), normal: dominant_eigenvector(&transpose(&m)) }
    }

    /// Signed length along the unstable line of the projection of `v`
    /// along the complementary plane.
    pub fn unstable_coordinate(&self, v: &[f64; 3]) -> f64 {
        dot(&self.normal, v) / dot(&self.normal, &self.unstable)
    }

    /// `(x + plane) ∩ (y + line)`.
    pub fn bracket(&self, x: &[f64; 3], y: &[f64; 3]) -> [f64; 3] {
        let d: [f64; 3] = std::array::from_fn(|i| x[i] - y[i]);
        let t = self.unstable_coordinate(&d);
        std::array::from_fn(|i| y[i] + t * self.unstable[i])
    }
}

/// Solves `m x = b` by Cramer's rule.
pub fn cramer(m: &[[f64; 3]; 3], b: &[f64; 3]) -> [f64; 3] {
    let det = |c: &[[f64; 3]; 3]| {
        c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
            + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0])
    };
    let d = det(m);
    std::array::from_fn(|k| {
        let mut c = *m;
        for i in 0..3 {
            c[i][k] = b[i];
        }
        det(&c) / d
    })
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Index in ℤ³ of the span of `gens`: the gcd of all 3×3 minors, 0 when
/// the rank is below 3.
pub fn lattice_index(gens: &[[i64; 3]]) -> i128 {
    let mut g = 0i128;
    let n = gens.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let m = [gens[i], gens[j], gens[k]].map(|r| r.map(i128::from));
                let d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
                g = gcd(g, d);
                if g == 1 {
                    return 1;
                }
            }
        }
    }
    g
}

fn mobius(mut n: usize) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Points of least period `p` in a shift whose fixed-point counts of `σ^d`
/// are `fix(d)`.
pub fn primitive_count(p: usize, fix: impl Fn(usize) -> i64) -> i64 {
    (1..=p).filter(|d| p % d == 0).map(|d| mobius(p / d) * fix(d)).sum()
}

/// Trace of the `d`-th power of a 0/1 square matrix.
pub fn trace_power(m: &[Vec<i64>], d: usize) -> i64 {
    let n = m.len();
    let mut acc: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..d {
        acc = (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| acc[i][k] * m[k][j]).sum()).collect()).collect();
    }
    (0..n).map(|i| acc[i][i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_known_cubic() {
        // (x − 1)(x − 2)(x − 3)
        let r = real_roots(&[1, -6, 11, -6]);
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-13);
        }
    }

    #[test]
    fn cramer_solves() {
        let m = [[2.0, 1.0, 0.0], [0.0, 3.0, 1.0], [1.0, 0.0, 1.0]];
        let x = cramer(&m, &[3.0, 4.0, 2.0]);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn index_of_sublattice() {
        assert_eq!(lattice_index(&[[2, 0, 0], [0, 1, 0], [0, 0, 1]]), 2);
        assert_eq!(lattice_index(&[[2, 0, 0], [3, 0, 0], [0, 1, 0], [0, 0, 1]]), 1);
        assert_eq!(lattice_index(&[[1, 0, 0], [0, 1, 0]]), 0);
    }

    #[test]
    fn necklace_counts() {
        // Binary necklaces of least period 6: 2^6 − 2^3 − 2^2 + 2 = 54.
        assert_eq!(primitive_count(6, |d| 1 << d), 54);
        let golden = vec![vec![1, 1], vec![1, 0]];
        assert_eq!(primitive_count(1, |d| trace_power(&golden, d)), 1);
        assert_eq!(primitive_count(2, |d| trace_power(&golden, d)), 2);
    }
}
