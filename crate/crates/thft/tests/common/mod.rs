#![allow(dead_code)]

use thft::exterior::{Generator, SpaceSignature};
use thft::integrand::{FormComponent, TestInput};
use thft::poly::{rat, ExactPoly, Var};

pub fn sig(m: usize, n: usize, k: usize) -> SpaceSignature {
    SpaceSignature::new(m, n, k).unwrap()
}

fn v(x: Var) -> ExactPoly {
    ExactPoly::var(x)
}

/// Dense polynomial of degree 2 (or 3) in `vars` with fixed, unpatterned rational coefficients.
pub fn generic_poly(vars: &[Var], cubic: bool) -> ExactPoly {
    let mut poly = ExactPoly::one();
    let mut c = 1i64;
    for a in vars {
        poly = poly.add(&v(*a).scale(&rat(c % 5 + 1, 3)));
        c += 1;
        for b in vars {
            poly = poly.add(&v(*a).mul(&v(*b)).scale(&rat(c % 7 - 3, 4)));
            c += 3;
            if cubic {
                for d in vars {
                    poly = poly.add(&v(*a).mul(&v(*b)).mul(&v(*d)).scale(&rat(c % 11 - 5, 4)));
                    c += 7;
                }
            }
        }
    }
    poly
}

/// `e^{-y²} dy` on the two-vertex line wheel.
pub fn line_input() -> TestInput {
    TestInput::gaussian(sig(1, 0, 2), vec![Generator::dy(1, 1)], 1.0).unwrap()
}

/// A non-symmetric polynomial one-form on `Y^(2)` for `R x C`; bare Gaussians give zero there.
pub fn mixed_input() -> TestInput {
    let s = sig(1, 1, 3);
    let vars = [Var::y(1, 1), Var::y(2, 1), Var::w(1, 1), Var::w(2, 1), Var::wb(1, 1), Var::wb(2, 1)];
    TestInput::new(
        s,
        vec![
            FormComponent { generators: vec![Generator::dy(1, 1)], poly: generic_poly(&vars, true) },
            FormComponent { generators: vec![Generator::dwb(2, 1)], poly: generic_poly(&vars, false) },
        ],
        &[vec![1.0, 0.6]],
        &[vec![0.8, 1.3]],
    )
    .unwrap()
}

/// `(w¹+w²) dy¹ + y¹w¹w² dw̄¹` on `Y^(2)` for `R x C`, optionally times `(1 + w¹ + w²/2)²` so
/// that holomorphic derivatives still pair with something.
pub fn mixed_wheel_input(extra_degree: bool) -> TestInput {
    let s = sig(1, 1, 3);
    let (w1, w2) = (ExactPoly::var(Var::w(1, 1)), ExactPoly::var(Var::w(2, 1)));
    let extra = if extra_degree {
        ExactPoly::one().add(&w1).add(&w2.scale(&rat(1, 2))).pow(2)
    } else {
        ExactPoly::one()
    };
    let first = w1.add(&w2).mul(&extra);
    let second = ExactPoly::var(Var::y(1, 1)).mul(&w1).mul(&w2).mul(&extra);
    TestInput::uniform(
        s,
        vec![
            FormComponent { generators: vec![Generator::dy(1, 1)], poly: first },
            FormComponent { generators: vec![Generator::dwb(1, 1)], poly: second },
        ],
        1.0,
    )
    .unwrap()
}

/// Degree-0 cubic on `Y^(2)` for `C^2`, used for the three-vertex pair factors.
pub fn plane_pair_input() -> TestInput {
    let s = sig(0, 2, 3);
    let vars = [Var::w(1, 1), Var::w(2, 1), Var::wb(1, 1), Var::wb(2, 1), Var::w(1, 2), Var::wb(2, 2)];
    TestInput::uniform(s, vec![FormComponent { generators: vec![], poly: generic_poly(&vars, true) }], 1.0).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// `(1 + y) e^{-y²}` as a function on `Y^(1)` for `R`, the anomaly input of the line wheel.
pub fn line_anomaly_input() -> TestInput {
    let poly = ExactPoly::one().add(&ExactPoly::var(Var::y(1, 1)));
    TestInput::uniform(sig(1, 0, 2), vec![FormComponent { generators: vec![], poly }], 1.0).unwrap()
}

/// Degree-0 cubic on `Y^(2)` for `R x C`, the anomaly input of the three-vertex wheel.
pub fn mixed_anomaly_input() -> TestInput {
    let vars = [Var::y(1, 1), Var::y(2, 1), Var::w(1, 1), Var::w(2, 1), Var::wb(1, 1), Var::wb(2, 1)];
    TestInput::new(
        sig(1, 1, 3),
        vec![FormComponent { generators: vec![], poly: generic_poly(&vars, true) }],
        &[vec![1.0, 0.6]],
        &[vec![0.8, 1.3]],
    )
    .unwrap()
}
