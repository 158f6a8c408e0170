use proptest::prelude::*;

use hyperdyn::grid::GridSet;
use hyperdyn::lattice::{hnf, LatticeSubgroup};
use hyperdyn::linalg::{self, Vector};
use hyperdyn::product::{bracket_linear, bracket_saturate_with, make_chain, propagate_chain, Schedule};
use hyperdyn::shadowing::{shadow_linear, Boundary, PseudoOrbit};
use hyperdyn::symbolic::{bracket_closure, hull, Sequence, SftHull, SymbolicSet};
use hyperdyn::torus::{frac, torus_dist, wrap_diff};
use hyperdyn::ToralAutomorphism;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const A: [[i64; 3]; 3] = [[0, 0, 1], [1, 0, -5], [0, 1, 6]];

fn a() -> ToralAutomorphism<3> {
    ToralAutomorphism::classify_t3(A).unwrap()
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

fn minors_gcd(rows: &[[i64; 3]]) -> i128 {
    let mut g = 0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            for k in j + 1..rows.len() {
                let m = [rows[i], rows[j], rows[k]].map(|r| r.map(i128::from));
                let d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
                g = gcd(g, d);
            }
        }
    }
    g
}

fn unit() -> impl Strategy<Value = Vector<3>> {
    prop::array::uniform3(0.0f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hnf_is_idempotent(rows in prop::collection::vec(prop::array::uniform3(-9i64..10), 0..6)) {
        let h = hnf(&rows);
        prop_assert_eq!(hnf(&h), h.clone());
        let g = LatticeSubgroup::from_generators(rows.clone());
        for r in &rows {
            prop_assert!(g.contains(r));
        }
        if g.rank == 3 {
            prop_assert_eq!(g.index.unwrap() as i128, minors_gcd(&rows));
        }
    }

    #[test]
    fn chain_shortening_is_bracket(x0 in unit(), steps in prop::collection::vec(prop::array::uniform3(-0.02f64..0.02), 1..20)) {
        let a = a();
        let mut pts = vec![x0];
        for s in &steps {
            let last = *pts.last().unwrap();
            pts.push(linalg::add(&last, s));
        }
        let xn = *pts.last().unwrap();
        let c = make_chain(pts, &a).unwrap();
        let p = propagate_chain(&a, &c).unwrap();
        prop_assert!(linalg::sup_norm(&linalg::sub(&p, &bracket_linear(&a, &x0, &xn))) < 1e-10);
    }

    #[test]
    fn bracket_identities(x in unit(), y in unit(), z in unit()) {
        let a = a();
        let b = |p: &Vector<3>, q: &Vector<3>| bracket_linear(&a, p, q);
        prop_assert!(linalg::sup_norm(&linalg::sub(&b(&x, &x), &x)) < 1e-12);
        prop_assert!(linalg::sup_norm(&linalg::sub(&b(&b(&x, &y), &z), &b(&x, &z))) < 1e-12);
        prop_assert!(linalg::sup_norm(&linalg::sub(&b(&x, &b(&y, &z)), &b(&x, &z))) < 1e-12);
    }

    #[test]
    fn wrap_diff_is_short(x in prop::array::uniform3(-5.0f64..5.0), y in prop::array::uniform3(-5.0f64..5.0)) {
        let d = wrap_diff(&x, &y);
        prop_assert!(d.iter().all(|v| v.abs() <= 0.5 + 1e-12));
        prop_assert!((torus_dist(&x, &y) - linalg::norm(&d)).abs() < 1e-12);
        prop_assert!(frac(&x).iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn shadowing_bound(seed in any::<u64>(), alpha in 1e-6f64..1e-2) {
        let a = a();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let po = PseudoOrbit::random(&a, 200, alpha, &mut rng);
        let s = shadow_linear(&a, &po, Boundary::Free).unwrap();
        prop_assert!(s.beta <= a.shadowing_constant() * po.alpha + 1e-12);
        prop_assert!(s.residual < 1e-12);
    }

    #[test]
    fn coarsening_is_monotone(bits in prop::collection::vec(any::<bool>(), 512), extra in prop::collection::vec(any::<bool>(), 512)) {
        let mut small = GridSet::empty(3, 8).unwrap();
        let mut large = GridSet::empty(3, 8).unwrap();
        for i in 0..512 {
            if bits[i] {
                small.insert(i);
                large.insert(i);
            }
            if extra[i] {
                large.insert(i);
            }
        }
        let (cs, cl) = (small.coarsen().unwrap(), large.coarsen().unwrap());
        prop_assert!(cs.is_subset(&cl));
        prop_assert!(cs.coverage() >= small.coverage());
        for i in small.iter() {
            prop_assert!(cs.contains(cs.cell_of(&small.center(i))));
        }
    }

    #[test]
    fn hgs_round_trip(bits in prop::collection::vec(any::<bool>(), 216)) {
        let mut s = GridSet::empty(3, 6).unwrap();
        for (i, b) in bits.iter().enumerate() {
            if *b {
                s.insert(i);
            }
        }
        let mut buf = Vec::new();
        s.write_hgs(&mut buf).unwrap();
        let t = GridSet::read_hgs(buf.as_slice()).unwrap();
        prop_assert_eq!(s.iter().collect::<Vec<_>>(), t.iter().collect::<Vec<_>>());
    }

    #[test]
    fn hulls_nest_and_ignore_shifts(w in prop::collection::vec(0u8..2, 1..5), v in prop::collection::vec(0u8..2, 1..4), shift in -7i64..7) {
        let s = SymbolicSet::new(2, vec![Sequence::periodic(&w), Sequence::heteroclinic(&v, &w)]).unwrap();
        let shifted = SymbolicSet::new(2, s.generators.iter().map(|g| g.shifted(shift)).collect()).unwrap();
        let mut prev: Option<SftHull> = None;
        for n in 2..7 {
            let h = hull(&s, n).unwrap();
            prop_assert_eq!(&h, &hull(&shifted, n).unwrap());
            for g in &s.generators {
                prop_assert!(h.allows(g));
            }
            if let Some(p) = &prev {
                prop_assert!(h.is_subshift_of(p));
            }
            prev = Some(h);
        }
    }
}

#[test]
fn saturation_schedules_agree() {
    let a = a();
    let mut s = GridSet::empty(3, 16).unwrap();
    for i in [0, 17, 300, 1201, 2222, 4000] {
        s.insert(i);
    }
    let j1 = bracket_saturate_with(&a, &s, 3.0 / 16.0, 64, Schedule::Jacobi).unwrap();
    let j2 = bracket_saturate_with(&a, &s, 3.0 / 16.0, 64, Schedule::Jacobi).unwrap();
    let ip = bracket_saturate_with(&a, &s, 3.0 / 16.0, 64, Schedule::InPlace).unwrap();
    assert_eq!(j1.coverage, j2.coverage);
    assert_eq!(j1.set.iter().collect::<Vec<_>>(), j2.set.iter().collect::<Vec<_>>());
    assert!(j1.converged && ip.converged);
    assert_eq!(j1.set.iter().collect::<Vec<_>>(), ip.set.iter().collect::<Vec<_>>());
    assert!(j1.coverage.windows(2).all(|w| w[1] >= w[0]));
    assert!(s.is_subset(&j1.set));
}

#[test]
fn full_shifts_are_bracket_closed() {
    for k in 2..=3 {
        for n in 2..=4 {
            assert_eq!(bracket_closure(&SftHull::full(k, n), 5).failures, 0);
        }
    }
}
