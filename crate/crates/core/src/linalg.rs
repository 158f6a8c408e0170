//! Small fixed-size linear algebra on plain arrays.

pub type Vector<const D: usize> = [f64; D];
pub type Matrix<const D: usize> = [[f64; D]; D];
pub type IMatrix<const D: usize> = [[i64; D]; D];

#[inline]
pub fn mat_vec<const D: usize>(m: &Matrix<D>, v: &Vector<D>) -> Vector<D> {
    let mut out = [0.0; D];
    for i in 0..D {
        let mut acc = 0.0;
        for j in 0..D {
            acc += m[i][j] * v[j];
        }
        out[i] = acc;
    }
    out
}

#[inline]
pub fn add<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| a[i] + b[i])
}

#[inline]
pub fn sub<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Vector<D> {
    std::array::from_fn(|i| a[i] - b[i])
}

#[inline]
pub fn scale<const D: usize>(a: &Vector<D>, s: f64) -> Vector<D> {
    std::array::from_fn(|i| a[i] * s)
}

#[inline]
pub fn dot<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> f64 {
    (0..D).map(|i| a[i] * b[i]).sum()
}

#[inline]
pub fn norm<const D: usize>(a: &Vector<D>) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sup_norm<const D: usize>(a: &Vector<D>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn cross(a: &Vector<3>, b: &Vector<3>) -> Vector<3> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn to_float<const D: usize>(m: &IMatrix<D>) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] as f64))
}

pub fn imat_mul<const D: usize>(a: &IMatrix<D>, b: &IMatrix<D>) -> IMatrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..D).map(|k| a[i][k] * b[k][j]).sum()))
}

/// Determinant of a 2×2 or 3×3 integer matrix, computed exactly.
pub fn idet<const D: usize>(m: &IMatrix<D>) -> i128 {
    let e = |i: usize, j: usize| m[i][j] as i128;
    match D {
        1 => e(0, 0),
        2 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
        3 => {
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
        }
        _ => panic!("idet supports dimensions 1 to 3"),
    }
}

/// Adjugate of a 2×2 or 3×3 integer matrix, so that `m · adj(m) = det(m) · I`.
pub fn iadjugate<const D: usize>(m: &IMatrix<D>) -> IMatrix<D> {
    let mut out = [[0i64; D]; D];
    match D {
        2 => {
            out[0][0] = m[1][1];
            out[0][1] = -m[0][1];
            out[1][0] = -m[1][0];
            out[1][1] = m[0][0];
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    let (r0, r1) = other_two(j);
                    let (c0, c1) = other_two(i);
                    let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
                    out[i][j] = if (i + j) % 2 == 0 { minor } else { -minor };
                }
            }
        }
        _ => panic!("iadjugate supports dimensions 2 and 3"),
    }
    out
}

fn other_two(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Gauss-Jordan inverse with partial pivoting. Returns `None` for singular input.
pub fn inverse<const D: usize>(m: &Matrix<D>) -> Option<Matrix<D>> {
    let mut a = *m;
    let mut inv: Matrix<D> = std::array::from_fn(|i| std::array::from_fn(|j| f64::from(u8::from(i == j))));
    for col in 0..D {
        let piv = (col..D).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..D {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..D {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..D {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Solves `m x = b`.
pub fn solve<const D: usize>(m: &Matrix<D>, b: &Vector<D>) -> Option<Vector<D>> {
    inverse(m).map(|inv| mat_vec(&inv, b))
}

pub fn transpose<const D: usize>(m: &Matrix<D>) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}

pub fn mat_mul<const D: usize>(a: &Matrix<D>, b: &Matrix<D>) -> Matrix<D> {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..D).map(|k| a[i][k] * b[k][j]).sum()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjugate_times_matrix_is_det_identity() {
        let m: IMatrix<3> = [[0, 0, 1], [1, 0, -5], [0, 1, 6]];
        let adj = iadjugate(&m);
        let p = imat_mul(&m, &adj);
        let d = idet(&m) as i64;
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p[i][j], if i == j { d } else { 0 });
            }
        }
    }

    #[test]
    fn float_inverse_round_trip() {
        let m = [[2.0, 1.0, 0.5], [0.0, 3.0, 1.0], [1.0, 0.0, 1.0]];
        let inv = inverse(&m).unwrap();
        let p = mat_mul(&m, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - want).abs() < 1e-14);
            }
        }
    }
}
