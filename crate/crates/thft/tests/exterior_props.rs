mod common;

use common::sig;
use proptest::prelude::*;
use thft::exterior::{
    assemble_edge_case, Generator, MixedForm, PolyVectorField, SpaceSignature,
};
use thft::poly::{rat, ExactPoly, Var};
use thft::wheel::{vanishing_proof, VanishingMethod};

fn ambient() -> SpaceSignature {
    sig(2, 1, 3)
}

const VARS: [Var; 4] = [Var::Y { vertex: 1, coord: 1 }, Var::Y { vertex: 2, coord: 2 }, Var::Wb { vertex: 1, coord: 1 }, Var::W { vertex: 2, coord: 1 }];

fn coeff(c: i64, d: i64, var: usize) -> ExactPoly {
    ExactPoly::constant(rat(c, 1)).add(&ExactPoly::var(VARS[var]).scale(&rat(d, 2)))
}

fn build_form(terms: &[(u8, i64, i64, usize)]) -> MixedForm {
    let s = ambient();
    let gens = s.generators();
    let mut f = MixedForm::zero(s);
    for &(mask, c, d, var) in terms {
        let chosen: Vec<Generator> =
            gens.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, g)| *g).collect();
        f = f.add(&MixedForm::monomial(s, &chosen, coeff(c, d, var)).unwrap()).unwrap();
    }
    f
}

fn form_strategy() -> impl Strategy<Value = MixedForm> {
    prop::collection::vec((0u8..64, -3i64..=3, -2i64..=2, 0usize..4), 0..5).prop_map(|t| build_form(&t))
}

fn homogeneous_strategy() -> impl Strategy<Value = (usize, MixedForm)> {
    (0usize..=3, prop::collection::vec((0u8..64, -3i64..=3, -2i64..=2, 0usize..4), 0..5)).prop_map(|(deg, t)| {
        let t: Vec<_> = t.into_iter().filter(|x| x.0.count_ones() as usize == deg).collect();
        (deg, build_form(&t))
    })
}

fn field_strategy() -> impl Strategy<Value = PolyVectorField> {
    prop::collection::vec((-3i64..=3, -2i64..=2, 0usize..4), 6).prop_map(|cs| {
        let s = ambient();
        let mut x = PolyVectorField::zero(s);
        for (g, (c, d, var)) in s.generators().into_iter().zip(cs) {
            x = x.with(g, coeff(c, d, var)).unwrap();
        }
        x
    })
}

fn sign(e: usize) -> ExactPoly {
    ExactPoly::constant(rat(if e.is_multiple_of(2) { 1 } else { -1 }, 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wedge_is_associative(a in form_strategy(), b in form_strategy(), c in form_strategy()) {
        let left = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let right = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn wedge_is_graded_commutative((p, a) in homogeneous_strategy(), (q, b) in homogeneous_strategy()) {
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap().scale(&sign(p * q));
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn contraction_is_graded_derivation((p, a) in homogeneous_strategy(), b in form_strategy(), x in field_strategy()) {
        let lhs = a.wedge(&b).unwrap().contract(&x).unwrap();
        let rhs = a
            .contract(&x)
            .unwrap()
            .wedge(&b)
            .unwrap()
            .add(&a.wedge(&b.contract(&x).unwrap()).unwrap().scale(&sign(p)))
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn contraction_squares_to_zero(a in form_strategy(), x in field_strategy()) {
        prop_assert!(a.contract(&x).unwrap().contract(&x).unwrap().is_zero());
    }

    #[test]
    fn bidegree_partition_recombines(a in form_strategy()) {
        let parts = a.bidegree_partition();
        let mut total = MixedForm::zero(ambient());
        for (bd, part) in &parts {
            for (gens, _) in part.terms() {
                let mut count = (0, 0);
                for g in gens {
                    if g.kind == thft::exterior::GenKind::Dy { count.0 += 1 } else { count.1 += 1 }
                }
                prop_assert_eq!(count, (bd.de_rham, bd.dolbeault));
            }
            total = total.add(part).unwrap();
        }
        prop_assert_eq!(total, a);
    }
}

#[test]
fn edge_case_forms_are_exactly_zero() {
    for total in 1..=4 {
        for m in 0..=total {
            let s = sig(m, total - m, total);
            if total >= 2 {
                assert!(assemble_edge_case(&s).unwrap().is_zero(), "edge case ({m},{},{total})", total - m);
            }
            let r = vanishing_proof(&s).unwrap();
            assert!(r.vanishes && r.integrand_zero);
            assert_eq!(r.method, VanishingMethod::EdgeCase);
        }
    }
}

#[test]
fn repeated_generator_vanishes() {
    let s = ambient();
    let g = Generator::dy(1, 2);
    let f = MixedForm::generator(s, g).unwrap();
    assert!(f.wedge(&f).unwrap().is_zero());
    assert!(MixedForm::monomial(s, &[g, g], ExactPoly::one()).unwrap().is_zero());
}
