use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use wlat::cayleymaps::{self, Classical};
use wlat::cohomology::{self, Guard};
use wlat::exactla::{self, AbelianInvariants, IntMat};
use wlat::fingroup::{self, FinGroup, SignedPerm};
use wlat::glattice;

fn matrix(max_r: usize, max_c: usize, bound: i64) -> impl Strategy<Value = IntMat> {
    (1..=max_r, 1..=max_c).prop_flat_map(move |(r, c)| {
        prop::collection::vec(-bound..=bound, r * c).prop_map(move |v| IntMat::from_flat(r, c, v))
    })
}

/// Unimodular `n x n` matrix as a product of elementary operations and sign changes.
fn unimodular(n: usize) -> impl Strategy<Value = IntMat> {
    prop::collection::vec((0..n, 0..n, -3i64..=3), 0..3 * n + 3).prop_map(move |ops| {
        let mut p = IntMat::identity(n);
        for (i, j, c) in ops {
            let mut el = IntMat::identity(n);
            if i == j {
                el.set_i64(i, i, -1);
            } else {
                el.set_i64(i, j, c);
            }
            p = p.mul(&el);
        }
        p
    })
}

fn is_diag_chain(f: &exactla::SmithForm, r: usize, c: usize, prod: &IntMat) -> bool {
    for i in 0..r {
        for j in 0..c {
            let x = prod.get(i, j);
            let want = if i == j && i < f.d.len() { f.d[i].clone() } else { BigInt::zero() };
            if x != want {
                return false;
            }
        }
    }
    f.d.iter().all(|x| x.is_positive()) && f.d.windows(2).all(|w| w[1].is_multiple_of(&w[0]))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn smith_form_is_a_divisor_chain(a in matrix(5, 5, 9)) {
        let f = exactla::smith_normal_form(&a);
        let prod = f.u.mul(&a).mul(&f.v);
        prop_assert!(is_diag_chain(&f, a.nrows(), a.ncols(), &prod));
        prop_assert!(exactla::determinant(&f.u).abs().is_one());
        prop_assert!(exactla::determinant(&f.v).abs().is_one());
        prop_assert_eq!(f.rank, exactla::rank(&a));
    }

    #[test]
    fn cokernel_ignores_unimodular_changes(a in square(4, 6), p in unimodular(4), q in unimodular(4)) {
        prop_assert_eq!(exactla::cokernel_invariants(&a), exactla::cokernel_invariants(&p.mul(&a).mul(&q)));
    }

    #[test]
    fn cokernel_order_matches_determinant(p in unimodular(4), d in prop::collection::vec(1i64..=12, 4)) {
        let mut diag = IntMat::zeros(4, 4);
        for (i, x) in d.iter().enumerate() {
            diag.set_i64(i, i, *x);
        }
        let a = p.mul(&diag);
        let inv = exactla::cokernel_invariants(&a);
        prop_assert_eq!(inv.order(), Some(exactla::determinant(&a).abs()));
        prop_assert_eq!(inv, AbelianInvariants::from_orders(&d));
    }

    #[test]
    fn kernel_is_saturated_and_complete(a in matrix(4, 6, 5)) {
        let k = exactla::kernel_basis(&a);
        prop_assert!(a.mul(&k).is_zero());
        prop_assert_eq!(k.ncols(), a.ncols() - exactla::rank(&a));
        if k.ncols() > 0 {
            let q = exactla::cokernel_invariants(&k);
            prop_assert!(q.torsion.is_empty());
        }
    }

    #[test]
    fn solve_recovers_a_consistent_system(a in matrix(4, 5, 7), x in prop::collection::vec(-9i64..=9, 5)) {
        let xs = IntMat::from_flat(a.ncols(), 1, x[..a.ncols()].to_vec());
        let b = a.mul(&xs);
        let y = exactla::solve_integer(&a, &b);
        prop_assert!(y.is_some());
        prop_assert_eq!(a.mul(&y.unwrap()), b);
    }

    #[test]
    fn unimodular_inverse_is_inverse(p in unimodular(5)) {
        let q = exactla::unimodular_inverse(&p).expect("unimodular");
        prop_assert!(p.mul(&q).is_identity());
        prop_assert!(q.mul(&p).is_identity());
    }

    #[test]
    fn same_span_survives_column_changes(a in square(4, 6), p in unimodular(4)) {
        prop_assert!(exactla::same_span(&a, &a.mul(&p)));
        prop_assert_eq!(exactla::column_span_basis(&a).ncols(), exactla::rank(&a));
        prop_assert!(exactla::same_span(&a, &exactla::column_span_basis(&a)));
    }
}

fn square(n: usize, bound: i64) -> impl Strategy<Value = IntMat> {
    prop::collection::vec(-bound..=bound, n * n).prop_map(move |v| IntMat::from_flat(n, n, v))
}

fn perm(n: usize) -> impl Strategy<Value = SignedPerm> {
    Just((1..=n).collect::<Vec<usize>>()).prop_shuffle().prop_map(move |v| {
        let imgs: Vec<usize> = v.into_iter().map(|x| x - 1).collect();
        SignedPerm::from_images_signs(&imgs, &vec![1; n]).expect("a permutation")
    })
}

fn signed_perm(n: usize) -> impl Strategy<Value = SignedPerm> {
    (perm(n), prop::collection::vec(prop::bool::ANY, n)).prop_map(move |(p, flips)| {
        let imgs: Vec<usize> = (0..n).map(|i| p.image(i)).collect();
        let signs: Vec<i32> = flips.iter().map(|&f| if f { -1 } else { 1 }).collect();
        SignedPerm::from_images_signs(&imgs, &signs).expect("a signed permutation")
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn signed_permutations_form_a_group(a in signed_perm(5), b in signed_perm(5), c in signed_perm(5)) {
        prop_assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
        prop_assert!(a.compose(&a.inverse()).is_identity());
        prop_assert!(a.inverse().compose(&a).is_identity());
    }

    #[test]
    fn cycle_notation_round_trips(a in perm(7)) {
        prop_assert_eq!(SignedPerm::parse_cycles(&a.to_string(), 7).unwrap(), a);
    }

    #[test]
    fn orbit_formula_on_random_subgroups(gens in prop::collection::vec(perm(5), 1..3)) {
        let l = glattice::za(5).unwrap();
        let h = FinGroup::lazy(5, gens.clone(), "H");
        let r = l.restrict_to(&h).unwrap();
        let s = r.group().whole();
        let g = fingroup::orbits_of_perms(5, &gens).iter().fold(0i64, |g, o| g.gcd(&(o.len() as i64)));
        let h1 = cohomology::tate(&r, &s, 1, Guard::default()).unwrap().invariants;
        prop_assert_eq!(&h1, &AbelianInvariants::from_orders(&[g]));
        prop_assert_eq!(h1, cohomology::h1_via_dual(&r, &s));
    }

    #[test]
    fn cohomology_is_invariant_under_base_change(p in unimodular(3), which in 0usize..3) {
        let l = match which {
            0 => glattice::za(4).unwrap(),
            1 => glattice::lambda(4).unwrap(),
            _ => glattice::q(4, 2).unwrap(),
        };
        let m = l.change_basis(&p);
        prop_assert!(m.verify_action());
        let s = l.group().whole();
        for k in -1..=1 {
            let a = cohomology::tate(&l, &s, k, Guard::default()).unwrap().invariants;
            let b = cohomology::tate(&m, &s, k, Guard::default()).unwrap().invariants;
            prop_assert_eq!(a, b, "degree {}", k);
        }
        prop_assert_eq!(cohomology::sha1_via_duality(&l, &s), cohomology::sha1_via_duality(&m, &s));
    }

    #[test]
    fn dual_is_an_involution(which in 0usize..4) {
        let l = glattice::catalog_from_descriptor(["ZA:4", "Q:6:2", "ZD:4", "G2"][which]).unwrap();
        let dd = glattice::dual(&glattice::dual(&l));
        prop_assert!(dd.verify_action());
        prop_assert_eq!(dd.generator_actions(), l.generator_actions());
    }

    #[test]
    fn cayley_maps_hold_for_any_seed(seed in any::<u64>()) {
        prop_assert!(cayleymaps::verify_classical(Classical::So(3), 4, seed).ok());
        prop_assert!(cayleymaps::verify_classical(Classical::Sp(1), 4, seed).ok());
        prop_assert!(cayleymaps::verify_pgl(2, 4, seed).ok());
        prop_assert!(cayleymaps::verify_unipotent(3, 4, seed).ok());
        prop_assert!(cayleymaps::verify_torus(&fingroup::weyl_d(3), 4, seed).ok());
    }
}
