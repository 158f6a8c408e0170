use hyperdyn::da::DaMap;
use hyperdyn::dynamics::Dynamics;
use hyperdyn::exact::AffineShift;
use hyperdyn::linalg::{self, Vector};
use hyperdyn::semiconj::{modulus_of_continuity, solve_h, SolveOptions};
use hyperdyn::symbolic::{hull, Sequence, SftHull, SymbolicSet};
use hyperdyn::torus::torus_dist;
use hyperdyn::ToralAutomorphism;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: [[i64; 3]; 3] = [[0, 0, 1], [1, 0, -5], [0, 1, 6]];
const B: [[i64; 3]; 3] = [[0, 0, 1], [1, 0, -38], [0, 1, 40]];

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn shifted(m: &[[i64; 3]; 3], l: f64) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j] as f64 - if i == j { l } else { 0.0 }))
}

/// Roots of det(M − λ) located by sign changes of the determinant itself.
fn det_roots(m: &[[i64; 3]; 3]) -> Vec<f64> {
    let f = |l: f64| det3(&shifted(m, l));
    let mut out = Vec::new();
    let (lo, hi, steps) = (-60.0, 60.0, 120_000);
    for k in 0..steps {
        let (mut a, mut b) = (lo + (hi - lo) * k as f64 / steps as f64, lo + (hi - lo) * (k + 1) as f64 / steps as f64);
        if f(a) * f(b) < 0.0 {
            for _ in 0..100 {
                let c = 0.5 * (a + b);
                if f(a) * f(c) <= 0.0 { b = c } else { a = c }
            }
            out.push(0.5 * (a + b));
        }
    }
    out
}

#[test]
fn eigenvalues_match_determinant_roots() {
    for m in [A, B] {
        let t = ToralAutomorphism::classify_t3(m).unwrap();
        let mut ev = t.eigenvalues().to_vec();
        ev.sort_by(f64::total_cmp);
        let roots = det_roots(&m);
        assert_eq!(roots.len(), 3);
        for (x, y) in ev.iter().zip(&roots) {
            assert!((x - y).abs() < 1e-9 * y.abs().max(1.0), "{x} vs {y}");
        }
        for k in 0..3 {
            let v = t.eigenvector(k);
            let av = linalg::mat_vec(t.float_matrix(), v);
            let l = t.eigenvalues()[k];
            assert!(linalg::sup_norm(&linalg::sub(&av, &linalg::scale(v, l))) < 1e-9 * l.abs().max(1.0));
            assert!((linalg::norm(v) - 1.0).abs() < 1e-12);
        }
        assert!(t.is_t3_class());
    }
}

#[test]
fn fixed_point_count_is_det_a_minus_i() {
    for m in [A, B] {
        let t = ToralAutomorphism::classify_t3(m).unwrap();
        let d = det3(&shifted(&m, 1.0)).round().abs() as usize;
        let fp = t.fixed_points();
        assert_eq!(fp.len(), d);
        for p in &fp {
            assert!(torus_dist(&t.apply(p), p) < 1e-12);
        }
    }
}

#[test]
fn affine_shift_conjugacy_is_constant() {
    let b = ToralAutomorphism::classify_t3(B).unwrap();
    let v = [0.1, 0.2, 0.3];
    let g = AffineShift::new(b, v);
    let s = solve_h(&g, &SolveOptions { m: 8, test_resolution: 8, ..SolveOptions::default() }).unwrap();
    // (B − I) h = v by Gaussian elimination with partial pivoting.
    let mut m = shifted(&B, 1.0).map(|r| r.to_vec());
    let mut rhs = v.to_vec();
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        rhs.swap(c, p);
        for r in c + 1..3 {
            let f = m[r][c] / m[c][c];
            for k in c..3 {
                m[r][k] -= f * m[c][k];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut h = [0.0; 3];
    for c in (0..3).rev() {
        h[c] = (rhs[c] - (c + 1..3).map(|k| m[c][k] * h[k]).sum::<f64>()) / m[c][c];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..32 {
        let x: Vector<3> = std::array::from_fn(|_| rng.gen());
        assert!(linalg::sup_norm(&linalg::sub(&s.displacement(&g, &x), &h)) < 1e-9);
    }
}

#[test]
fn modulus_is_monotone_and_da_support_exact() {
    let b = ToralAutomorphism::classify_t3(B).unwrap();
    let f = DaMap::build(b.clone(), [0.5; 3], 0.2, 1.2, 0.03).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let x: Vector<3> = std::array::from_fn(|_| rng.gen());
        if torus_dist(&x, &[0.5; 3]) >= f.cutoff().outer {
            let (y, z) = (f.forward(&x), b.apply(&x));
            assert!((0..3).all(|i| y[i].to_bits() == z[i].to_bits()));
        }
    }
    let s = solve_h(&f, &SolveOptions { m: 16, test_resolution: 0, ..SolveOptions::default() }).unwrap();
    let rows = modulus_of_continuity(&s, &f, &[0.1, 0.001, 0.01, 0.0], 50, 3);
    let mut sorted: Vec<_> = rows.iter().map(|r| (r.radius, r.value)).collect();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
    assert_eq!(sorted[0], (0.0, 0.0));
    assert!(sorted.windows(2).all(|w| w[1].1 >= w[0].1));
}

/// Factor sets of a periodic point agree with a direct sliding window.
#[test]
fn hull_words_of_periodic_orbit() {
    let w = [0u8, 0, 1, 0, 1];
    let s = SymbolicSet::new(2, vec![Sequence::periodic(&w)]).unwrap();
    for n in 2..8 {
        let h = hull(&s, n).unwrap();
        let direct: std::collections::BTreeSet<Vec<u8>> =
            (0..w.len()).map(|i| (0..n).map(|t| w[(i + t) % w.len()]).collect()).collect();
        assert_eq!(h.words, direct);
        assert!(h.is_subshift_of(&SftHull::full(2, 2)));
    }
}
