//! Littlewood–Paley blocks and the periodic Besov norm
//! `‖f‖_{B^s_{p,q}} = (Σ_j 2^{sjq} ‖Σ_k e_k φ_j(k) f̂(k)‖_p^q)^{1/q}`.
//!
//! The partition is made of hats in `log₂|t|`:
//! `φ_0 = 1` on `|t| <= 1`, `1 − log₂|t|` on `1 < |t| <= 2`, zero beyond;
//! `φ_j(t) = max(0, 1 − |log₂|t| − j|)` for `j >= 1`. These are only
//! Lipschitz, which is harmless because they are evaluated at integers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{check_nyquist, derivative, lp_norm, TrigPolynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicPartition {
    jmax: u32,
}

impl DyadicPartition {
    pub fn new(jmax: u32) -> Self {
        DyadicPartition { jmax }
    }

    /// Shortest partition covering frequencies up to `max_freq`.
    pub fn covering(max_freq: u64) -> Self {
        let mut jmax = 0;
        while (1u64 << jmax) < max_freq {
            jmax += 1;
        }
        DyadicPartition { jmax }
    }

    pub fn jmax(&self) -> u32 {
        self.jmax
    }

    /// Largest `|t|` on which the blocks sum to one.
    pub fn reach(&self) -> f64 {
        2f64.powi(self.jmax as i32)
    }

    pub fn phi(&self, j: u32, t: f64) -> f64 {
        if j > self.jmax {
            return 0.0;
        }
        let a = t.abs();
        if j == 0 {
            return if a <= 1.0 {
                1.0
            } else if a <= 2.0 {
                1.0 - a.log2()
            } else {
                0.0
            };
        }
        if a == 0.0 {
            return 0.0;
        }
        (1.0 - (a.log2() - j as f64).abs()).max(0.0)
    }

    /// `Σ_j φ_j(t)`.
    pub fn sum(&self, t: f64) -> f64 {
        (0..=self.jmax).map(|j| self.phi(j, t)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::invalid("smoothness s must be finite"));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [1, ∞), got {v}"
                )));
            }
        }
        Ok(BesovParams { s, p, q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockNorm {
    pub j: u32,
    /// `2^{sj}`.
    pub weight: f64,
    /// `‖Σ_k e_k φ_j(k) f̂(k)‖_p`.
    pub lp_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesovBreakdown {
    pub norm: f64,
    pub blocks: Vec<BlockNorm>,
}

/// The `j`-th Littlewood–Paley block `Σ_k e_k φ_j(k) f̂(k)`.
pub fn block(f: &TrigPolynomial, part: &DyadicPartition, j: u32) -> TrigPolynomial {
    let coeffs = f.iter().filter_map(|(k, v)| {
        let w = part.phi(j, k as f64);
        (w != 0.0).then(|| (k, v * num_complex::Complex64::new(w, 0.0)))
    });
    TrigPolynomial::from_coeffs(f.dim(), coeffs).expect("dimension preserved")
}

pub fn besov_breakdown(
    f: &TrigPolynomial,
    params: BesovParams,
    part: &DyadicPartition,
    grid: usize,
) -> Result<BesovBreakdown> {
    let freq = f.max_frequency();
    if freq as f64 > part.reach() {
        return Err(Error::PartitionTooShort {
            jmax: part.jmax(),
            freq,
        });
    }
    let blocks = (0..=part.jmax())
        .map(|j| {
            Ok(BlockNorm {
                j,
                weight: 2f64.powf(params.s * j as f64),
                lp_norm: lp_norm(&block(f, part, j), params.p, grid)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let norm = blocks
        .iter()
        .map(|b| (b.weight * b.lp_norm).powf(params.q))
        .sum::<f64>()
        .powf(1.0 / params.q);
    Ok(BesovBreakdown { norm, blocks })
}

pub fn besov_norm(
    f: &TrigPolynomial,
    params: BesovParams,
    part: &DyadicPartition,
    grid: usize,
) -> Result<f64> {
    // Checked on f itself so an empty block never masks a bad grid.
    check_nyquist(grid, f.max_frequency())?;
    Ok(besov_breakdown(f, params, part, grid)?.norm)
}

/// `‖f′‖_{B^s} / ‖f‖_{B^{s+1}}`.
pub fn lifting_ratio(
    f: &TrigPolynomial,
    params: BesovParams,
    part: &DyadicPartition,
    grid: usize,
) -> Result<f64> {
    if f.is_zero(0.0) {
        return Err(Error::ZeroInput);
    }
    let lifted = BesovParams {
        s: params.s + 1.0,
        ..params
    };
    let denom = besov_norm(f, lifted, part, grid)?;
    if denom == 0.0 {
        return Err(Error::ZeroInput);
    }
    Ok(besov_norm(&derivative(f, 1), params, part, grid)? / denom)
}
