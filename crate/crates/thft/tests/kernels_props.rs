mod common;

use common::sig;
use num_complex::Complex;
use proptest::prelude::*;
use thft::exterior::{edge_form, edge_part_bidegree, EdgePart, GenKind};
use thft::kernels::{e_coefficients, gaussian_g, heat_kernel, propagator_derivative, KernelKind, KernelSplit};
use thft::quadrature::{integrate, integrate_box};
use thft::{Point, QuadOptions};

fn quad() -> QuadOptions {
    QuadOptions::default().with_rel_tol(1e-11).with_abs_tol(1e-15)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn semigroup_on_the_line(x in -2.0f64..2.0, y in -2.0f64..2.0, s in 0.1f64..2.0, t in 0.1f64..2.0) {
        let sg = sig(1, 0, 2);
        let (p, q) = (Point::new(vec![x], vec![]), Point::new(vec![y], vec![]));
        let conv = integrate(
            |r: f64| {
                let mid = Point::new(vec![r], vec![]);
                heat_kernel(&p, &mid, s, &sg).unwrap() * heat_kernel(&mid, &q, t, &sg).unwrap()
            },
            -30.0,
            30.0,
            quad(),
        );
        let direct = heat_kernel(&p, &q, s + t, &sg).unwrap();
        prop_assert!((conv.value - direct).abs() < 1e-6 * direct.max(1e-3), "{} vs {}", conv.value, direct);
    }

    #[test]
    fn semigroup_on_the_plane(
        a in (-1.5f64..1.5, -1.5f64..1.5),
        b in (-1.5f64..1.5, -1.5f64..1.5),
        s in 0.2f64..1.5,
        t in 0.2f64..1.5,
    ) {
        let sg = sig(0, 1, 2);
        let p = Point::new(vec![], vec![Complex::new(a.0, a.1)]);
        let q = Point::new(vec![], vec![Complex::new(b.0, b.1)]);
        let conv = integrate_box(
            &|r: &[f64]| {
                let mid = Point::new(vec![], vec![Complex::new(r[0], r[1])]);
                heat_kernel(&p, &mid, s, &sg).unwrap() * heat_kernel(&mid, &q, t, &sg).unwrap()
            },
            &[(-14.0, 14.0), (-14.0, 14.0)],
            QuadOptions::default().with_rel_tol(1e-9).with_abs_tol(1e-13),
        );
        let direct = heat_kernel(&p, &q, s + t, &sg).unwrap();
        prop_assert!((conv.value - direct).abs() < 1e-6 * direct.max(1e-3), "{} vs {}", conv.value, direct);
    }

    /// Each coefficient of E is the matching first derivative of G (`2∂_z` for a dropped
    /// `dz̄`), up to the position sign of the dropped generator.
    #[test]
    fn e_is_first_derivative_of_g(
        m in 0usize..=2,
        n in 0usize..=2,
        coords in prop::collection::vec(-1.5f64..1.5, 6),
        t in 0.2f64..2.0,
    ) {
        prop_assume!(m + n >= 1);
        let sg = sig(m, n, 2);
        let point = |c: &[f64]| {
            Point::new(c[..m].to_vec(), (0..n).map(|j| Complex::new(c[2 + 2 * j], c[3 + 2 * j])).collect())
        };
        let base = point(&coords);
        let h = 1e-5;
        let g = |c: &[f64]| gaussian_g(&point(c), t, &sg).unwrap();
        let shifted = |i: usize, dh: f64| {
            let mut c = coords.clone();
            c[i] += dh;
            c
        };
        let partial = |i: usize| (g(&shifted(i, h)) - g(&shifted(i, -h))) / (2.0 * h);
        for (pos, e) in e_coefficients(&base, t, &sg).unwrap().iter().enumerate() {
            let sign = if pos % 2 == 1 { -1.0 } else { 1.0 };
            let want = match e.dropped {
                (GenKind::Dy, c) => Complex::new(partial(c - 1), 0.0),
                // 2∂_z = ∂_x - i ∂_y
                (GenKind::Dwb, j) => Complex::new(partial(2 + 2 * (j - 1)), -partial(3 + 2 * (j - 1))),
            } * sign;
            prop_assert!((e.value - want).norm() < 1e-6 * (1.0 + want.norm()), "{:?} vs {}", e, want);
        }
    }

    #[test]
    fn holomorphic_derivative_matches_finite_difference(re in -1.2f64..1.2, im in -1.2f64..1.2, x in -1.0f64..1.0) {
        let sg = sig(1, 1, 2);
        let (eps, l) = (0.05, 1.0);
        let opts = QuadOptions::default().with_rel_tol(1e-12).with_abs_tol(1e-16);
        let at = |z: Complex<f64>| -> Vec<thft::ECoefficient> {
            propagator_derivative(&Point::new(vec![x], vec![z]), &[0], eps, l, &sg, opts).unwrap()
        };
        let z = Complex::new(re, im);
        let d = propagator_derivative(&Point::new(vec![x], vec![z]), &[1], eps, l, &sg, opts).unwrap();
        let h = 1e-5;
        let (px, mx) = (at(z + h), at(z - h));
        let (py, my) = (at(z + Complex::new(0.0, h)), at(z - Complex::new(0.0, h)));
        for c in 0..d.len() {
            // ∂_z = (∂_x - i ∂_y)/2
            let fd: Complex<f64> = ((px[c].value - mx[c].value) - Complex::<f64>::i() * (py[c].value - my[c].value)) / (4.0 * h);
            prop_assert!((d[c].value - fd).norm() < 1e-6 * (1.0 + fd.norm()), "{} vs {}", d[c].value, fd);
        }
    }
}

#[test]
fn kernel_bidegrees_hold_structurally() {
    for m in 0..=4 {
        for n in 0..=4 {
            let sg = sig(m, n, 2);
            for (kind, part) in [
                (KernelKind::EDeRham, Some(EdgePart::DeRham)),
                (KernelKind::EDolbeault, Some(EdgePart::Dolbeault)),
                (KernelKind::HeatKernel, Some(EdgePart::HeatKernel)),
                (KernelKind::Gaussian, None),
            ] {
                let declared = KernelSplit { which: kind, vertex_slot: 1 }.bidegree(&sg);
                let Some(part) = part else {
                    assert_eq!(declared.map(|b| (b.de_rham, b.dolbeault)), Some((0, 0)));
                    continue;
                };
                assert_eq!(declared, edge_part_bidegree(&sg, part));
                let form = edge_form(&sg, 1, part);
                match declared {
                    None => assert!(form.is_zero(), "({m},{n}) {kind:?}"),
                    Some(b) => {
                        let keys: Vec<_> = form.bidegree_partition().into_keys().collect();
                        assert_eq!(keys, vec![b], "({m},{n}) {kind:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn e_coefficient_parts_match_dropped_generator() {
    let sg = sig(2, 2, 2);
    let q = Point::new(vec![0.3, -0.4], vec![Complex::new(0.1, 0.2), Complex::new(-0.5, 0.7)]);
    let es = e_coefficients(&q, 0.7, &sg).unwrap();
    assert_eq!(es.len(), 4);
    for e in &es {
        assert_eq!(e.kept.len(), 3);
        let want = if e.dropped.0 == GenKind::Dy { EdgePart::DeRham } else { EdgePart::Dolbeault };
        assert_eq!(e.part, want);
    }
}
