//! Trigonometric calculus for vector-valued 2π-periodic functions.
//!
//! Coefficients follow the normalization `f̂(k) = (1/2π) ∫₀^{2π} e^{-ikt} f(t) dt`,
//! so synthesis is the plain sum `Σ_k e^{ikt} f̂(k)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, ik_pow, vec_norm, CMatrix, CVector};

/// A 2π-periodic `C^d`-valued function with finitely many nonzero Fourier
/// coefficients. Absent frequencies are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrigPolynomialJson", into = "TrigPolynomialJson")]
pub struct TrigPolynomial {
    dim: usize,
    coeffs: BTreeMap<i64, CVector>,
}

impl TrigPolynomial {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "state dimension must be positive");
        TrigPolynomial {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    /// The monomial `e_k · x`.
    pub fn monomial(k: i64, x: CVector) -> Self {
        let mut f = Self::zero(x.len());
        f.coeffs.insert(k, x);
        f
    }

    /// Scalar (d = 1) polynomial from `(k, f̂(k))` pairs. Repeated frequencies add up.
    pub fn scalar(terms: &[(i64, Complex64)]) -> Self {
        let mut f = Self::zero(1);
        for &(k, c) in terms {
            f.add_coeff(k, CVector::from_element(1, c)).expect("dim 1");
        }
        f
    }

    pub fn from_coeffs(
        dim: usize,
        coeffs: impl IntoIterator<Item = (i64, CVector)>,
    ) -> Result<Self> {
        let mut f = Self::zero(dim);
        for (k, v) in coeffs {
            f.add_coeff(k, v)?;
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, k: i64) -> Option<&CVector> {
        self.coeffs.get(&k)
    }

    /// `f̂(k)`, with zero for absent frequencies.
    pub fn coeff_or_zero(&self, k: i64) -> CVector {
        self.coeffs
            .get(&k)
            .cloned()
            .unwrap_or_else(|| CVector::zeros(self.dim))
    }

    pub fn set_coeff(&mut self, k: i64, v: CVector) -> Result<()> {
        self.check_len(v.len())?;
        self.coeffs.insert(k, v);
        Ok(())
    }

    pub fn add_coeff(&mut self, k: i64, v: CVector) -> Result<()> {
        self.check_len(v.len())?;
        match self.coeffs.get_mut(&k) {
            Some(existing) => *existing += v,
            None => {
                self.coeffs.insert(k, v);
            }
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: len,
            });
        }
        Ok(())
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &CVector)> {
        self.coeffs.iter().map(|(k, v)| (*k, v))
    }

    /// Largest `|k|` among stored frequencies (0 for the empty polynomial).
    pub fn max_frequency(&self) -> u64 {
        self.coeffs
            .keys()
            .map(|k| k.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Number of stored frequencies.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// True when every stored coefficient has norm at most `tol`.
    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeffs.values().all(|v| vec_norm(v) <= tol)
    }

    /// Frequency-wise map `f̂(k) ↦ g(k, f̂(k))`.
    pub fn map_coeffs(&self, mut g: impl FnMut(i64, &CVector) -> CVector) -> Self {
        let coeffs: BTreeMap<i64, CVector> =
            self.coeffs.iter().map(|(&k, v)| (k, g(k, v))).collect();
        let dim = coeffs.values().next().map_or(self.dim, |v| v.len());
        TrigPolynomial { dim, coeffs }
    }

    /// Applies a constant matrix at every frequency.
    pub fn apply_matrix(&self, m: &CMatrix) -> Self {
        self.map_coeffs(|_, v| m * v)
    }

    /// Largest coefficient-wise distance `max_k ‖f̂(k) − ĝ(k)‖` over the union of frequencies.
    pub fn max_coeff_distance(&self, other: &TrigPolynomial) -> f64 {
        let keys: std::collections::BTreeSet<i64> =
            self.frequencies().chain(other.frequencies()).collect();
        keys.into_iter()
            .map(|k| vec_norm(&(self.coeff_or_zero(k) - other.coeff_or_zero(k))))
            .fold(0.0, f64::max)
    }

    /// `Σ_k ‖f̂(k)‖²`.
    pub fn coeff_energy(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm_squared()).sum()
    }

    /// `max_k ‖f̂(k) − conj(f̂(−k))‖`; zero exactly for real-valued functions.
    pub fn real_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(&k, v)| vec_norm(&(v - self.coeff_or_zero(-k).map(|z| z.conj()))))
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        self.map_coeffs(|_, v| v * alpha)
    }
}

impl Add for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn add(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in addition");
        let mut out = self.clone();
        for (k, v) in rhs.iter() {
            out.add_coeff(k, v.clone()).expect("dimensions checked");
        }
        out
    }
}

impl Sub for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn sub(self, rhs: &TrigPolynomial) -> TrigPolynomial {
        self + &rhs.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &TrigPolynomial {
    type Output = TrigPolynomial;

    fn mul(self, alpha: Complex64) -> TrigPolynomial {
        self.scale(alpha)
    }
}

/// Samples `g(t_m)` at the uniform nodes `t_m = 2πm/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    dim: usize,
    samples: Vec<CVector>,
}

impl SampledFunction {
    pub fn new(dim: usize, samples: Vec<CVector>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("state dimension must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::invalid("a sampled function needs at least one node"));
        }
        if let Some(bad) = samples.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Ok(SampledFunction { dim, samples })
    }

    pub fn from_fn(dim: usize, grid: usize, mut g: impl FnMut(f64) -> CVector) -> Result<Self> {
        let samples = (0..grid).map(|m| g(node(m, grid))).collect();
        Self::new(dim, samples)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[CVector] {
        &self.samples
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.grid();
        (0..m).map(move |i| node(i, m))
    }
}

/// `t_m = 2πm/M`.
pub fn node(m: usize, grid: usize) -> f64 {
    2.0 * PI * m as f64 / grid as f64
}

/// `e^{i 2π j / M}` with `j` reduced modulo `M` first.
pub(crate) fn root_of_unity(j: i128, grid: usize) -> Complex64 {
    let r = j.rem_euclid(grid as i128) as f64;
    cis(2.0 * PI * r / grid as f64)
}

pub(crate) fn check_nyquist(grid: usize, freq: u64) -> Result<()> {
    if (grid as u64) <= 2 * freq {
        return Err(Error::NyquistViolation { grid, freq });
    }
    Ok(())
}

/// Discrete Fourier coefficients `(1/M) Σ_m g(t_m) e^{−ik t_m}` for `|k| <= kmax`.
///
/// Exact for samples of a trigonometric polynomial of degree at most `kmax`.
pub fn analyze(g: &SampledFunction, kmax: u64) -> Result<TrigPolynomial> {
    let grid = g.grid();
    check_nyquist(grid, kmax)?;
    let kmax = kmax as i64;
    let scale = 1.0 / grid as f64;
    let mut out = TrigPolynomial::zero(g.dim());
    for k in -kmax..=kmax {
        let mut acc = CVector::zeros(g.dim());
        for (m, v) in g.samples().iter().enumerate() {
            acc += v * root_of_unity(-(k as i128) * m as i128, grid);
        }
        out.coeffs.insert(k, acc * Complex64::new(scale, 0.0));
    }
    Ok(out)
}

/// `Σ_k e^{ikt} f̂(k)`.
pub fn synthesize(f: &TrigPolynomial, t: f64) -> CVector {
    let mut acc = CVector::zeros(f.dim());
    for (k, v) in f.iter() {
        acc += v * cis(k as f64 * t);
    }
    acc
}

/// Samples on the uniform grid, with phases reduced exactly modulo `M`.
pub fn sample(f: &TrigPolynomial, grid: usize) -> SampledFunction {
    assert!(grid >= 1, "grid must be positive");
    let samples = (0..grid)
        .map(|m| {
            let mut acc = CVector::zeros(f.dim());
            for (k, v) in f.iter() {
                acc += v * root_of_unity(k as i128 * m as i128, grid);
            }
            acc
        })
        .collect();
    SampledFunction {
        dim: f.dim(),
        samples,
    }
}

/// `j`-th derivative: `f̂(k) ↦ (ik)^j f̂(k)`. The constant term drops out.
pub fn derivative(f: &TrigPolynomial, j: u32) -> TrigPolynomial {
    assert!(j >= 1, "derivative order must be positive");
    let mut out = TrigPolynomial::zero(f.dim());
    for (k, v) in f.iter() {
        if k != 0 {
            out.coeffs.insert(k, v * ik_pow(k, j as i64));
        }
    }
    out
}

/// `(∫₀^{2π} ‖f(t)‖^p dt)^{1/p}` by the rectangle rule on `M` nodes.
///
/// Exact for `p = 2` once `M > 2·max|k|`; for other `p` the rule converges
/// spectrally fast in `M` for these smooth periodic integrands.
pub fn lp_norm(f: &TrigPolynomial, p: f64, grid: usize) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!(
            "L^p exponent must lie in [1, ∞), got {p}"
        )));
    }
    check_nyquist(grid, f.max_frequency())?;
    if f.is_empty() {
        return Ok(0.0);
    }
    let h = 2.0 * PI / grid as f64;
    let sum: f64 = sample(f, grid)
        .samples()
        .iter()
        .map(|v| vec_norm(v).powf(p))
        .sum();
    Ok((h * sum).powf(1.0 / p))
}

/// `|Σ_k ‖f̂(k)‖² − (1/2π)‖f‖₂²|`.
pub fn parseval_defect(f: &TrigPolynomial, grid: usize) -> Result<f64> {
    let l2 = lp_norm(f, 2.0, grid)?;
    Ok((f.coeff_energy() - l2 * l2 / (2.0 * PI)).abs())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoeffJson {
    k: i64,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrigPolynomialJson {
    dim: usize,
    coeffs: Vec<CoeffJson>,
}

impl TryFrom<TrigPolynomialJson> for TrigPolynomial {
    type Error = Error;

    fn try_from(json: TrigPolynomialJson) -> Result<Self> {
        if json.dim == 0 {
            return Err(Error::invalid("\"dim\" must be positive"));
        }
        let mut f = TrigPolynomial::zero(json.dim);
        for c in json.coeffs {
            if c.re.len() != json.dim || c.im.len() != json.dim {
                return Err(Error::DimensionMismatch {
                    expected: json.dim,
                    found: c.re.len().max(c.im.len()),
                });
            }
            if f.coeffs.contains_key(&c.k) {
                return Err(Error::invalid(format!("frequency {} listed twice", c.k)));
            }
            let v = CVector::from_iterator(
                json.dim,
                c.re.iter()
                    .zip(&c.im)
                    .map(|(&re, &im)| Complex64::new(re, im)),
            );
            f.coeffs.insert(c.k, v);
        }
        Ok(f)
    }
}

impl From<TrigPolynomial> for TrigPolynomialJson {
    fn from(f: TrigPolynomial) -> Self {
        TrigPolynomialJson {
            dim: f.dim,
            coeffs: f
                .coeffs
                .into_iter()
                .map(|(k, v)| CoeffJson {
                    k,
                    re: v.iter().map(|z| z.re).collect(),
                    im: v.iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
    }
}
