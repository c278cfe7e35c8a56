#![allow(dead_code)]

use num_complex::Complex64;
use perisolve::delay::{DelayKernel, DelaySpec, DiscreteDelay};
use perisolve::linalg::{CMatrix, CVector};
use perisolve::solver::uniqueness_probe;
use perisolve::symbol::{char_matrix, ProblemSpec};
use perisolve::TrigPolynomial;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn scalar(z: f64) -> CMatrix {
    CMatrix::from_element(1, 1, c(z, 0.0))
}

pub fn cos_t() -> TrigPolynomial {
    TrigPolynomial::scalar(&[(1, c(0.5, 0.0)), (-1, c(0.5, 0.0))])
}

/// `x′ = −x + f`.
pub fn damped() -> ProblemSpec {
    ProblemSpec::ode(1, scalar(-1.0)).unwrap()
}

/// `x′(t) = −x(t − π) + f`.
pub fn half_period_delay() -> ProblemSpec {
    ProblemSpec::new(1, scalar(0.0), DelaySpec::point(PI, scalar(-1.0)).unwrap()).unwrap()
}

/// Second-order, two-dimensional, real `A` and a single kernel term whose
/// 17 nodes fall on every grid that is a multiple of 16.
pub fn kernel_problem() -> ProblemSpec {
    let a = CMatrix::from_row_slice(
        2,
        2,
        &[c(-2.0, 0.0), c(0.5, 0.0), c(-0.25, 0.0), c(-1.5, 0.0)],
    );
    let kernel = DelayKernel::from_fn(1, 17, |th| {
        let w = (0.5 * th).cos();
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.2 * w, 0.0),
                c(0.05, 0.0),
                c(-0.05 * w, 0.0),
                c(0.1, 0.0),
            ],
        )
    })
    .unwrap();
    ProblemSpec::new(2, a, DelaySpec::zero(2).with_kernel(kernel).unwrap()).unwrap()
}

pub fn kernel_forcing() -> TrigPolynomial {
    TrigPolynomial::from_coeffs(
        2,
        [
            (1, CVector::from_vec(vec![c(0.5, 0.0), c(0.0, -0.25)])),
            (-1, CVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.25)])),
            (3, CVector::from_vec(vec![c(0.1, 0.2), c(-0.3, 0.0)])),
            (-3, CVector::from_vec(vec![c(0.1, -0.2), c(-0.3, 0.0)])),
        ],
    )
    .unwrap()
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, dim: usize, real: bool) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        let z = random_complex(rng);
        if real {
            c(z.re, 0.0)
        } else {
            z
        }
    })
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    CVector::from_fn(dim, |_, _| random_complex(rng))
}

/// Random coefficients on a random subset of `|k| <= kmax`.
pub fn random_poly(rng: &mut ChaCha8Rng, dim: usize, kmax: i64) -> TrigPolynomial {
    let count = rng.gen_range(1..=6);
    let coeffs: Vec<(i64, CVector)> = (0..count)
        .map(|_| (rng.gen_range(-kmax..=kmax), random_vector(rng, dim)))
        .collect();
    TrigPolynomial::from_coeffs(dim, coeffs).unwrap()
}

/// Real-valued random polynomial: `f̂(−k) = conj(f̂(k))`.
pub fn random_real_poly(rng: &mut ChaCha8Rng, dim: usize, kmax: i64) -> TrigPolynomial {
    let mut f = TrigPolynomial::zero(dim);
    for _ in 0..rng.gen_range(1..=5) {
        let k = rng.gen_range(0..=kmax);
        let v = random_vector(rng, dim);
        if k == 0 {
            f.add_coeff(0, v.map(|z| c(z.re, 0.0))).unwrap();
        } else {
            f.add_coeff(-k, v.map(|z| z.conj())).unwrap();
            f.add_coeff(k, v).unwrap();
        }
    }
    f
}

/// Random discrete-delay problem with `n <= 4`, `d <= 4`, redrawn until
/// every `|k| <= modes` is comfortably invertible.
pub fn random_problem(rng: &mut ChaCha8Rng, modes: u64, real: bool) -> ProblemSpec {
    loop {
        let n = rng.gen_range(1..=4);
        let d = rng.gen_range(1..=4);
        let a = random_matrix(rng, d, real) - CMatrix::identity(d, d) * c(1.5, 0.0);
        let discrete = (0..rng.gen_range(0..=2))
            .map(|_| DiscreteDelay {
                lag: rng.gen_range(0.0..2.0 * PI),
                matrix: random_matrix(rng, d, real) * c(0.3, 0.0),
            })
            .collect();
        let p = ProblemSpec::new(n, a, DelaySpec::new(d, 1, discrete, None).unwrap()).unwrap();
        let m = modes as i64;
        let worst_cond = (-m..=m)
            .map(|k| perisolve::linalg::Conditioning::of(&char_matrix(&p, k)).cond())
            .fold(0.0, f64::max);
        if uniqueness_probe(&p, modes) >= 1e-2 && worst_cond <= 1e8 {
            return p;
        }
    }
}

/// A random problem with its band-limited forcing, `|k| <= 16`.
pub fn random_suite(seed: u64, count: usize) -> Vec<(ProblemSpec, TrigPolynomial)> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = random_problem(&mut rng, 16, false);
            let f = random_poly(&mut rng, p.dim(), 16);
            (p, f)
        })
        .collect()
}
