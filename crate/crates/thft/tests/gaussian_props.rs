mod common;

use common::{rel_diff, sig};
use nalgebra::DMatrix;
use proptest::prelude::*;
use thft::gaussian::{
    eval_t_terms, gaussian_moment, monte_carlo_moment, quadrature_moment, sm_det_inverse, sm_inverse, t_dependence,
    t_terms_respect_constraints, tau_identity_check, tau_identity_numeric, zeta_identity_check, zeta_identity_numeric,
    MomentRequest, SlotPoint,
};
use thft::poly::rat;
use thft::TMatrix;

fn scales(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, k).prop_map(|v| v.into_iter().map(|x| 10f64.powf(x)).collect())
}

/// Every exponent pattern over `slots` slots and `m` directions with total degree at most `max`.
fn requests(slots: usize, m: usize, max: u32) -> Vec<MomentRequest> {
    let keys: Vec<(usize, usize)> = (1..=slots).flat_map(|a| (1..=m).map(move |i| (a, i))).collect();
    let mut out = vec![Vec::new()];
    for key in &keys {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<((usize, usize), u32)>| {
                let used: u32 = prefix.iter().map(|e| e.1).sum();
                (0..=max - used).map(move |e| {
                    let mut p = prefix.clone();
                    p.push((*key, e));
                    p
                })
            })
            .collect();
    }
    out.iter().map(|e| MomentRequest::new(e, true)).collect()
}

/// Largest entry of `|M·M⁻¹ - I|` divided by the matching entry of `|M|·|M⁻¹|`.
fn relative_identity_residual(m: &DMatrix<f64>, inv: &DMatrix<f64>) -> f64 {
    let resid = m * inv - DMatrix::identity(m.nrows(), m.ncols());
    let size = m.abs() * inv.abs();
    resid.zip_map(&size, |r, s| r.abs() / s).max()
}

proptest! {
    #[test]
    fn sherman_morrison_inverse_and_determinant(t in (2usize..=8).prop_flat_map(scales)) {
        let m = TMatrix::new(t.clone()).unwrap();
        let d = m.dim();
        let dense = DMatrix::from_fn(d, d, |a, b| m.dense()[a][b]);
        let inv = sm_inverse(&m);
        let inv = DMatrix::from_fn(d, d, |a, b| inv[a][b]);
        let resid = relative_identity_residual(&dense, &inv);
        prop_assert!(resid < 1e-12, "residual {resid:e} at {t:?}");
        let det = dense.determinant();
        prop_assert!(rel_diff(sm_det_inverse(&m), 1.0 / det) < 1e-10);
    }

    #[test]
    fn t_dependence_reproduces_moments(
        t in (2usize..=4).prop_flat_map(scales),
        exps in prop::collection::vec(0u32..=3, 6),
    ) {
        let k = t.len();
        let s = sig(2, 0, k);
        let entries: Vec<((usize, usize), u32)> = (1..k)
            .flat_map(|a| (1..=2).map(move |i| (a, i)))
            .zip(exps)
            .collect();
        let req = MomentRequest::new(&entries, true);
        prop_assume!(req.total_degree() <= 6);
        let exact = gaussian_moment(&req, &t, &s).unwrap();
        if req.total_degree() % 2 == 1 {
            prop_assert_eq!(exact, 0.0);
            return Ok(());
        }
        let terms = t_dependence(&req, k).unwrap();
        prop_assert!(t_terms_respect_constraints(&req, &terms));
        let via_terms = eval_t_terms(&terms, &t);
        prop_assert!((via_terms - exact).abs() <= 1e-12 * (1.0 + exact.abs()), "{via_terms} vs {exact}");
    }

    #[test]
    fn identity_residuals_vanish_numerically(
        t in (2usize..=4).prop_flat_map(scales),
        ys in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let k = t.len();
        let s = sig(2, 2, k);
        let slots = k - 1;
        let p = SlotPoint {
            y: (0..slots).map(|a| vec![ys[2 * a], ys[2 * a + 1]]).collect(),
            w: (0..slots).map(|a| vec![(ys[6 + 2 * a], ys[7 + 2 * a]), (ys[7 + 2 * a], -ys[6 + 2 * a])]).collect(),
        };
        let t: Vec<f64> = t.iter().map(|x| x.clamp(0.3, 3.0)).collect();
        for c in 1..=2 {
            prop_assert!(zeta_identity_numeric(c, &s, &t, &p, 1e-5).abs() < 1e-6);
            prop_assert!(tau_identity_numeric(c, &s, &t, &p, 1e-5).abs() < 1e-6);
        }
    }
}

#[test]
fn moments_match_direct_quadrature() {
    for (m, k) in [(1, 2), (1, 3), (2, 2)] {
        let s = sig(m, 0, k);
        let t: Vec<f64> = [0.7, 1.9, 0.4][..k].to_vec();
        for req in requests(k - 1, m, 4) {
            let exact = gaussian_moment(&req, &t, &s).unwrap();
            let quad = quadrature_moment(&req, &t, &s).unwrap();
            assert!((exact - quad).abs() <= 1e-6 * (1.0 + exact.abs()), "{req:?}: {exact} vs {quad}");
        }
    }
}

#[test]
fn moments_match_seeded_monte_carlo() {
    let s = sig(1, 0, 3);
    let t = [0.7, 1.9, 0.4];
    for req in requests(2, 1, 4).into_iter().filter(|r| r.total_degree() % 2 == 0 && r.total_degree() > 0) {
        let exact = gaussian_moment(&req, &t, &s).unwrap();
        let mc = monte_carlo_moment(&req, &t, &s, 200_000, 7).unwrap();
        assert!((mc.mean - exact).abs() <= 3.0 * mc.std_error, "{req:?}: {} ± {} vs {exact}", mc.mean, mc.std_error);
    }
}

#[test]
fn exact_identity_residuals_are_zero() {
    for k in 2..=4 {
        let t: Vec<_> = (0..k).map(|a| rat(2 * a as i64 + 1, 3)).collect();
        for m in 0..=2 {
            for n in 0..=2 {
                let s = sig(m, n, k);
                for i in 1..=n {
                    assert!(zeta_identity_check(i, &s, &t).unwrap().is_zero());
                }
                for j in 1..=m {
                    assert!(tau_identity_check(j, &s, &t).unwrap().is_zero());
                }
            }
        }
    }
}
