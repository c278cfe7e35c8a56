//! The bounded delay functional `L`, its action on history segments and its
//! frequency symbol `L_k = L(e_k ·)`.
//!
//! `L` is a finite sum of point delays `B_m φ(−r_m)` plus an optional
//! matrix-valued kernel `∫_{−2πN}^{0} K(θ) φ(θ) dθ`. The kernel is known only at
//! uniform nodes and integrated with the trapezoid rule everywhere (in `apply`,
//! in `symbol` and in the finite-difference oracle), so the transfer identity
//! holds exactly at the discrete level. The gap between the trapezoid rule and
//! the exact integral of the piecewise-linear interpolant is reported separately
//! as the quadrature error.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{analyze, node, synthesize, SampledFunction, TrigPolynomial};
use crate::io::MatrixJson;
use crate::linalg::{cis, op_norm, vec_norm, zeros, CMatrix, CVector};

/// A point delay `B φ(−lag)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDelay {
    pub lag: f64,
    pub matrix: CMatrix,
}

/// Kernel values at `grid_count` uniform nodes spanning `[−2πN, 0]`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayKernel {
    values: Vec<CMatrix>,
}

impl DelayKernel {
    pub fn new(values: Vec<CMatrix>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a delay kernel needs at least two nodes"));
        }
        Ok(DelayKernel { values })
    }

    /// Samples `K(θ)` at the uniform nodes of `[−2πN, 0]`.
    pub fn from_fn(periods: u32, grid_count: usize, k: impl Fn(f64) -> CMatrix) -> Result<Self> {
        if grid_count < 2 {
            return Err(Error::invalid("a delay kernel needs at least two nodes"));
        }
        let horizon = 2.0 * PI * periods as f64;
        let step = horizon / (grid_count - 1) as f64;
        Self::new(
            (0..grid_count)
                .map(|q| k(-horizon + q as f64 * step))
                .collect(),
        )
    }

    pub fn grid_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }
}

/// Quadrature node `θ_q` with trapezoid weight `w_q` and kernel value `K(θ_q)`.
#[derive(Debug, Clone, Copy)]
pub struct KernelNode<'a> {
    pub theta: f64,
    pub weight: f64,
    pub value: &'a CMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DelaySpecJson", into = "DelaySpecJson")]
pub struct DelaySpec {
    dim: usize,
    periods: u32,
    discrete: Vec<DiscreteDelay>,
    kernel: Option<DelayKernel>,
}

impl DelaySpec {
    /// `L = 0`.
    pub fn zero(dim: usize) -> Self {
        DelaySpec {
            dim,
            periods: 1,
            discrete: Vec::new(),
            kernel: None,
        }
    }

    pub fn new(
        dim: usize,
        periods: u32,
        discrete: Vec<DiscreteDelay>,
        kernel: Option<DelayKernel>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("state dimension must be positive"));
        }
        if periods == 0 {
            return Err(Error::invalid("periods N must be positive"));
        }
        let horizon = 2.0 * PI * periods as f64;
        for term in &discrete {
            if !(term.lag >= 0.0 && term.lag <= horizon * (1.0 + 1e-14)) {
                return Err(Error::invalid(format!(
                    "delay lag {} outside [0, 2πN] = [0, {horizon}]",
                    term.lag
                )));
            }
            check_square(&term.matrix, dim)?;
        }
        if let Some(kernel) = &kernel {
            for m in kernel.values() {
                check_square(m, dim)?;
            }
        }
        Ok(DelaySpec {
            dim,
            periods,
            discrete,
            kernel,
        })
    }

    /// A single point delay `B φ(−lag)` on `[−2π, 0]`.
    pub fn point(lag: f64, matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        Self::new(dim, 1, vec![DiscreteDelay { lag, matrix }], None)
    }

    pub fn with_periods(mut self, periods: u32) -> Result<Self> {
        self.periods = periods;
        Self::new(self.dim, periods, self.discrete, self.kernel)
    }

    pub fn with_discrete(mut self, lag: f64, matrix: CMatrix) -> Result<Self> {
        self.discrete.push(DiscreteDelay { lag, matrix });
        Self::new(self.dim, self.periods, self.discrete, self.kernel)
    }

    pub fn with_kernel(self, kernel: DelayKernel) -> Result<Self> {
        Self::new(self.dim, self.periods, self.discrete, Some(kernel))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn periods(&self) -> u32 {
        self.periods
    }

    /// `r_{2π} = 2πN`.
    pub fn horizon(&self) -> f64 {
        2.0 * PI * self.periods as f64
    }

    pub fn discrete(&self) -> &[DiscreteDelay] {
        &self.discrete
    }

    pub fn kernel(&self) -> Option<&DelayKernel> {
        self.kernel.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.discrete.is_empty() && self.kernel.is_none()
    }

    pub fn has_kernel(&self) -> bool {
        self.kernel.is_some()
    }

    /// True when every matrix is real, so that `L` maps real histories to real vectors.
    pub fn is_real(&self) -> bool {
        self.discrete
            .iter()
            .all(|t| crate::linalg::is_real(&t.matrix))
            && self
                .kernel
                .iter()
                .flat_map(|k| k.values())
                .all(crate::linalg::is_real)
    }

    /// Trapezoid nodes of the kernel on `[−2πN, 0]`.
    pub fn kernel_nodes(&self) -> Vec<KernelNode<'_>> {
        let Some(kernel) = &self.kernel else {
            return Vec::new();
        };
        let count = kernel.grid_count();
        let horizon = self.horizon();
        let step = horizon / (count - 1) as f64;
        kernel
            .values()
            .iter()
            .enumerate()
            .map(|(q, value)| {
                let weight = if q == 0 || q == count - 1 {
                    0.5 * step
                } else {
                    step
                };
                KernelNode {
                    theta: -horizon + q as f64 * step,
                    weight,
                    value,
                }
            })
            .collect()
    }
}

fn check_square(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

/// The history window `x_t(θ) = x(t + θ)`, `θ ∈ [−2πN, 0]`, of a periodic function.
#[derive(Debug, Clone, Copy)]
pub struct HistorySegment<'a> {
    pub base: &'a TrigPolynomial,
    pub time: f64,
    pub periods: u32,
}

impl<'a> HistorySegment<'a> {
    pub fn new(base: &'a TrigPolynomial, time: f64, periods: u32) -> Self {
        HistorySegment {
            base,
            time,
            periods,
        }
    }

    pub fn eval(&self, theta: f64) -> CVector {
        synthesize(self.base, self.time + theta)
    }
}

/// `L(x_t)`.
pub fn apply(l: &DelaySpec, seg: &HistorySegment<'_>) -> Result<CVector> {
    if seg.base.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: seg.base.dim(),
        });
    }
    let mut acc = CVector::zeros(l.dim());
    for term in l.discrete() {
        acc += &term.matrix * seg.eval(-term.lag);
    }
    for node in l.kernel_nodes() {
        acc += node.value * seg.eval(node.theta) * Complex64::new(node.weight, 0.0);
    }
    Ok(acc)
}

/// `L_k = Σ_m e^{−ik r_m} B_m + Σ_q w_q e^{ikθ_q} K(θ_q)`.
pub fn symbol(l: &DelaySpec, k: i64) -> CMatrix {
    let mut acc = zeros(l.dim());
    for term in l.discrete() {
        acc += &term.matrix * cis(-(k as f64) * term.lag);
    }
    for node in l.kernel_nodes() {
        acc += node.value * (cis(k as f64 * node.theta) * node.weight);
    }
    acc
}

/// `‖L_k^{trapezoid} − L_k^{exact}‖`, where the exact value integrates the
/// piecewise-linear interpolant of the kernel against `e^{ikθ}` in closed form.
pub fn kernel_quadrature_error(l: &DelaySpec, k: i64) -> f64 {
    let Some(kernel) = l.kernel() else {
        return 0.0;
    };
    let nodes = l.kernel_nodes();
    let step = l.horizon() / (kernel.grid_count() - 1) as f64;
    let mut exact = zeros(l.dim());
    for pair in nodes.windows(2) {
        let (wa, wb) = linear_exp_weights(k, pair[0].theta, step);
        exact += pair[0].value * wa + pair[1].value * wb;
    }
    let trapezoid = nodes.iter().fold(zeros(l.dim()), |acc, n| {
        acc + n.value * (cis(k as f64 * n.theta) * n.weight)
    });
    op_norm(&(trapezoid - exact))
}

/// Weights `(w_a, w_b)` with `∫_a^{a+h} ℓ(θ) e^{ikθ} dθ = w_a ℓ(a) + w_b ℓ(a+h)` for linear `ℓ`.
fn linear_exp_weights(k: i64, a: f64, h: f64) -> (Complex64, Complex64) {
    if k == 0 {
        let half = Complex64::new(0.5 * h, 0.0);
        return (half, half);
    }
    let w = k as f64;
    let x = w * h;
    // ∫_0^h (1 − s/h) e^{iws} ds and ∫_0^h (s/h) e^{iws} ds, series near x = 0.
    let (g0, g1) = if x.abs() < 1e-3 {
        let ix = Complex64::new(0.0, x);
        let g1 = 0.5 + ix / 3.0 + ix * ix / 8.0 + ix * ix * ix / 30.0;
        let g_total = 1.0 + ix / 2.0 + ix * ix / 6.0 + ix * ix * ix / 24.0;
        (g_total - g1, g1)
    } else {
        let ix = Complex64::new(0.0, x);
        let e = cis(x);
        let g_total = (e - 1.0) / ix;
        let g1 = e / ix - (e - 1.0) / (ix * ix);
        (g_total - g1, g1)
    };
    let phase = cis(w * a) * h;
    (phase * g0, phase * g1)
}

/// Result of checking `(L(u_·))^(k) = L_k û(k)` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferReport {
    /// `max_{|k| <= kmax} ‖coefficient − L_k û(k)‖`.
    pub defect: f64,
    /// Kernel quadrature error carried by `û`, plus a rounding allowance.
    pub quadrature_bound: f64,
}

pub fn verify_transfer(
    l: &DelaySpec,
    u: &TrigPolynomial,
    kmax: u64,
    grid: usize,
) -> Result<TransferReport> {
    if u.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: u.dim(),
        });
    }
    let needed = kmax.max(u.max_frequency());
    if (grid as u64) <= 2 * needed {
        return Err(Error::NyquistViolation { grid, freq: needed });
    }
    let samples = (0..grid)
        .into_par_iter()
        .map(|m| apply(l, &HistorySegment::new(u, node(m, grid), l.periods())))
        .collect::<Result<Vec<_>>>()?;
    let transformed = analyze(&SampledFunction::new(l.dim(), samples)?, kmax)?;

    let mut defect = 0.0_f64;
    let mut quad = 0.0_f64;
    let mut scale = 0.0_f64;
    for k in -(kmax as i64)..=(kmax as i64) {
        let uk = u.coeff_or_zero(k);
        let lk = symbol(l, k);
        let predicted = &lk * &uk;
        defect = defect.max(vec_norm(&(transformed.coeff_or_zero(k) - predicted)));
        quad = quad.max(kernel_quadrature_error(l, k) * vec_norm(&uk));
        scale = scale.max(op_norm(&lk) * vec_norm(&uk));
    }
    Ok(TransferReport {
        defect,
        quadrature_bound: quad + 1e-12 * (1.0 + scale),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DiscreteJson {
    r: f64,
    #[serde(rename = "B")]
    b: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KernelJson {
    grid_count: usize,
    values: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DelaySpecJson {
    dim: usize,
    #[serde(default = "one")]
    periods: u32,
    #[serde(default)]
    discrete: Vec<DiscreteJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel: Option<KernelJson>,
}

fn one() -> u32 {
    1
}

impl TryFrom<DelaySpecJson> for DelaySpec {
    type Error = Error;

    fn try_from(json: DelaySpecJson) -> Result<Self> {
        let discrete = json
            .discrete
            .into_iter()
            .map(|d| {
                Ok(DiscreteDelay {
                    lag: d.r,
                    matrix: d.b.to_matrix()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let kernel = match json.kernel {
            Some(k) => {
                if k.values.len() != k.grid_count {
                    return Err(Error::invalid(format!(
                        "kernel grid_count {} but {} values",
                        k.grid_count,
                        k.values.len()
                    )));
                }
                let values = k
                    .values
                    .iter()
                    .map(MatrixJson::to_matrix)
                    .collect::<Result<Vec<_>>>()?;
                Some(DelayKernel::new(values)?)
            }
            None => None,
        };
        DelaySpec::new(json.dim, json.periods, discrete, kernel)
    }
}

impl From<DelaySpec> for DelaySpecJson {
    fn from(spec: DelaySpec) -> Self {
        DelaySpecJson {
            dim: spec.dim,
            periods: spec.periods,
            discrete: spec
                .discrete
                .iter()
                .map(|d| DiscreteJson {
                    r: d.lag,
                    b: MatrixJson::from_matrix(&d.matrix),
                })
                .collect(),
            kernel: spec.kernel.map(|k| KernelJson {
                grid_count: k.grid_count(),
                values: k.values().iter().map(MatrixJson::from_matrix).collect(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(z: f64) -> CMatrix {
        CMatrix::from_element(1, 1, c(z, 0.0))
    }

    fn unit_kernel(grid_count: usize) -> DelaySpec {
        DelaySpec::zero(1)
            .with_kernel(DelayKernel::from_fn(1, grid_count, |_| identity(1)).unwrap())
            .unwrap()
    }

    #[test]
    fn apply_examples() {
        let u = TrigPolynomial::scalar(&[(1, c(1.0, 0.0))]);
        let seg = HistorySegment::new(&u, 0.0, 1);
        assert_eq!(apply(&DelaySpec::zero(1), &seg).unwrap()[0], c(0.0, 0.0));

        let l = DelaySpec::point(PI, scalar(-1.0)).unwrap();
        assert!((apply(&l, &seg).unwrap()[0] - c(1.0, 0.0)).norm() < 1e-15);

        let x0 = c(0.5, -2.0);
        let konst = TrigPolynomial::scalar(&[(0, x0)]);
        let got = apply(&unit_kernel(33), &HistorySegment::new(&konst, 1.3, 1)).unwrap()[0];
        assert!((got - x0 * 2.0 * PI).norm() < 1e-13);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let u = TrigPolynomial::zero(2);
        let err = apply(&DelaySpec::zero(1), &HistorySegment::new(&u, 0.0, 1)).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 1,
                found: 2
            }
        );
    }

    #[test]
    fn symbol_examples() {
        let b =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]);
        let l = DelaySpec::point(PI, b.clone()).unwrap();
        for k in -4..=4 {
            let expected = if k % 2 == 0 { b.clone() } else { -b.clone() };
            assert!((symbol(&l, k) - expected).norm() < 1e-14);
        }

        let l = unit_kernel(256);
        assert!((symbol(&l, 0)[(0, 0)] - c(2.0 * PI, 0.0)).norm() < 1e-13);
        for k in [1, -1, 2, 7] {
            assert!(symbol(&l, k).norm() < 1e-13);
        }

        let zero = DelaySpec::zero(3);
        assert!(symbol(&zero, 5).norm() == 0.0);
    }

    #[test]
    fn symbol_is_linear_in_the_delay() {
        let a = DelaySpec::point(0.7, scalar(2.0)).unwrap();
        let b = DelaySpec::point(2.1, scalar(-0.5)).unwrap();
        let sum = a.clone().with_discrete(2.1, scalar(-0.5)).unwrap();
        for k in -5..=5 {
            assert!((symbol(&sum, k) - symbol(&a, k) - symbol(&b, k)).norm() < 1e-14);
        }
    }

    #[test]
    fn symbol_is_periodic_in_the_lag() {
        let base = DelaySpec::point(0.9, scalar(1.5))
            .unwrap()
            .with_periods(2)
            .unwrap();
        let shifted = DelaySpec::new(
            1,
            2,
            vec![DiscreteDelay {
                lag: 0.9 + 2.0 * PI,
                matrix: scalar(1.5),
            }],
            None,
        )
        .unwrap();
        for k in -6..=6 {
            assert!((symbol(&base, k) - symbol(&shifted, k)).norm() < 1e-12);
        }
    }

    #[test]
    fn lag_outside_horizon_is_rejected() {
        assert!(DelaySpec::point(2.0 * PI + 0.1, scalar(1.0)).is_err());
        assert!(DelaySpec::point(-0.1, scalar(1.0)).is_err());
        assert!(DelaySpec::point(3.0 * PI, scalar(1.0)).is_err());
        let two_periods = DelaySpec::new(
            1,
            2,
            vec![DiscreteDelay {
                lag: 3.0 * PI,
                matrix: scalar(1.0),
            }],
            None,
        );
        assert!(two_periods.is_ok());
        assert!(two_periods.unwrap().with_periods(1).is_err());
    }

    #[test]
    fn transfer_is_exact_for_point_delays() {
        assert_eq!(
            verify_transfer(
                &DelaySpec::zero(1),
                &TrigPolynomial::scalar(&[(3, c(1.0, 1.0))]),
                4,
                16
            )
            .unwrap()
            .defect,
            0.0
        );
        let l = DelaySpec::point(1.234, scalar(-0.8)).unwrap();
        let u = TrigPolynomial::scalar(&[(1, c(0.3, 0.7))]);
        assert!(verify_transfer(&l, &u, 4, 64).unwrap().defect <= 1e-12);
    }

    #[test]
    fn transfer_for_unit_kernel_against_analytic_integral() {
        let l = unit_kernel(256);
        let u = TrigPolynomial::scalar(&[(2, c(1.0, -0.5))]);
        let report = verify_transfer(&l, &u, 4, 32).unwrap();
        assert!(report.defect <= report.quadrature_bound);
        // ∫_{−2π}^0 e^{2iθ} dθ = 0, so L(u_t) vanishes identically.
        let value = apply(&l, &HistorySegment::new(&u, 0.4, 1)).unwrap()[0];
        assert!(value.norm() <= report.quadrature_bound);
    }

    #[test]
    fn quadrature_error_matches_closed_form_for_linear_kernel() {
        // K(θ) = θ is reproduced exactly by its interpolant; the trapezoid rule is not
        // exact against e^{iθ}. Exact: ∫_{−2π}^0 θ e^{iθ} dθ = −2πi.
        let l = DelaySpec::zero(1)
            .with_kernel(DelayKernel::from_fn(1, 65, scalar).unwrap())
            .unwrap();
        let trap = symbol(&l, 1)[(0, 0)];
        let err = kernel_quadrature_error(&l, 1);
        assert!(((trap - c(0.0, -2.0 * PI)).norm() - err).abs() < 1e-12);
        assert!(err > 0.0 && err < 1e-2);
    }

    #[test]
    fn linear_weights_series_branch_agrees() {
        for &(k, h) in &[(1, 1e-3), (3, 4e-4), (-2, 1e-4)] {
            let (a0, b0) = linear_exp_weights(k, -1.0, h);
            // Composite check via many tiny sub-intervals of the trapezoid rule.
            let n = 2000;
            let (mut a1, mut b1) = (c(0.0, 0.0), c(0.0, 0.0));
            for j in 0..=n {
                let s = h * j as f64 / n as f64;
                let w = if j == 0 || j == n { 0.5 } else { 1.0 } * h / n as f64;
                let e = cis(k as f64 * (-1.0 + s)) * w;
                a1 += e * (1.0 - s / h);
                b1 += e * (s / h);
            }
            assert!((a0 - a1).norm() < 1e-12 && (b0 - b1).norm() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"dim":1,"periods":1,"discrete":[{"r":3.141592653589793,"B":{"re":[[-1.0]],"im":[[0.0]]}}],
            "kernel":{"grid_count":2,"values":[{"re":[[1.0]]},{"re":[[1.0]]}]}}"#;
        let spec: DelaySpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.discrete().len(), 1);
        assert_eq!(spec.kernel().unwrap().grid_count(), 2);
        let back: DelaySpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);

        let mismatched =
            r#"{"dim":1,"kernel":{"grid_count":3,"values":[{"re":[[1.0]]},{"re":[[1.0]]}]}}"#;
        assert!(serde_json::from_str::<DelaySpec>(mismatched).is_err());
    }
}
