//! Frequency-wise solution of `Σ_{j=1}^n x^{(j)} = A x + L(x_t) + f`.
//!
//! For band-limited `f` the solution `û(k) = N_k f̂(k)` is exact: nothing is
//! truncated except what `f` itself leaves out.

use rayon::prelude::*;
use serde::Serialize;

use crate::audit::{multiplier_apply, OperatorSequence};
use crate::besov::{besov_norm, BesovParams, DyadicPartition};
use crate::delay::{apply, HistorySegment};
use crate::error::{Error, Result};
use crate::fourier::{derivative, node, synthesize, TrigPolynomial};
use crate::linalg::{vec_norm, CVector, Conditioning};
use crate::symbol::{
    char_matrix, priority_order, resolvent, ProblemSpec, Resolvent, DEFAULT_COND_LIMIT,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSolution {
    pub u: TrigPolynomial,
    /// Truncation `K`: every `|k| <= K` was checked for invertibility.
    pub modes: u64,
    pub residual_coeff: f64,
    /// `min_k σ_min(D_k) / σ_max(D_k)` over `|k| <= K`.
    pub resonance_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub coeff_defect: f64,
    pub grid_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyMargin {
    pub k: i64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub cond: f64,
}

/// `N_k` for every `|k| <= K`; the reported resonance is the one of highest priority.
pub fn resolvent_sequence(
    p: &ProblemSpec,
    modes: u64,
    cond_limit: f64,
) -> Result<(OperatorSequence, f64)> {
    let m = modes as i64;
    let ks = priority_order(-m..=m);
    let built: Vec<Result<Resolvent>> = ks
        .par_iter()
        .map(|&k| resolvent(p, k, cond_limit))
        .collect();
    let mut values = Vec::with_capacity(built.len());
    let mut margin = f64::INFINITY;
    for r in built {
        let r = r?;
        margin = margin.min(1.0 / r.cond());
        values.push((r.k, r.matrix));
    }
    Ok((OperatorSequence::from_values("N", values)?, margin))
}

pub fn solve(p: &ProblemSpec, f: &TrigPolynomial, modes: u64) -> Result<PeriodicSolution> {
    solve_with_limit(p, f, modes, DEFAULT_COND_LIMIT)
}

pub fn solve_with_limit(
    p: &ProblemSpec,
    f: &TrigPolynomial,
    modes: u64,
    cond_limit: f64,
) -> Result<PeriodicSolution> {
    if f.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: f.dim(),
        });
    }
    let freq = f.max_frequency();
    if freq > modes {
        return Err(Error::TruncationTooSmall { modes, freq });
    }
    let (resolvents, resonance_margin) = resolvent_sequence(p, modes, cond_limit)?;
    let u = multiplier_apply(&resolvents, f)?;
    let residual_coeff = coeff_defect(p, &u, f);
    Ok(PeriodicSolution {
        u,
        modes,
        residual_coeff,
        resonance_margin,
    })
}

fn coeff_defect(p: &ProblemSpec, u: &TrigPolynomial, f: &TrigPolynomial) -> f64 {
    let ks: std::collections::BTreeSet<i64> = u.frequencies().chain(f.frequencies()).collect();
    ks.into_iter()
        .map(|k| vec_norm(&(char_matrix(p, k) * u.coeff_or_zero(k) - f.coeff_or_zero(k))))
        .fold(0.0, f64::max)
}

/// Grid used for the time-domain residual.
pub fn residual_grid(u: &TrigPolynomial, f: &TrigPolynomial) -> usize {
    (4 * u.max_frequency().max(f.max_frequency()) as usize + 8).max(32)
}

/// Frequency-domain and time-domain defects of `u` as a solution for forcing `f`.
pub fn residual(p: &ProblemSpec, u: &TrigPolynomial, f: &TrigPolynomial) -> Result<Residual> {
    for g in [u, f] {
        if g.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                found: g.dim(),
            });
        }
    }
    let coeff_defect = coeff_defect(p, u, f);
    let derivs: Vec<TrigPolynomial> = (1..=p.order() as u32).map(|j| derivative(u, j)).collect();
    let grid = residual_grid(u, f);
    let defects = (0..grid)
        .into_par_iter()
        .map(|m| {
            let t = node(m, grid);
            let mut lhs = CVector::zeros(p.dim());
            for d in &derivs {
                lhs += synthesize(d, t);
            }
            let delayed = apply(p.delay(), &HistorySegment::new(u, t, p.delay().periods()))?;
            let rhs = p.a() * synthesize(u, t) + delayed + synthesize(f, t);
            Ok(vec_norm(&(lhs - rhs)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let grid_defect = defects.into_iter().fold(0.0, f64::max);
    Ok(Residual {
        coeff_defect,
        grid_defect,
    })
}

/// Singular values of `D_k` for `|k| <= K`, ascending in `k`.
pub fn margins(p: &ProblemSpec, modes: u64) -> Vec<FrequencyMargin> {
    let m = modes as i64;
    (-m..=m)
        .into_par_iter()
        .map(|k| {
            let c = Conditioning::of(&char_matrix(p, k));
            FrequencyMargin {
                k,
                sigma_min: c.sigma_min,
                sigma_max: c.sigma_max,
                cond: c.cond(),
            }
        })
        .collect()
}

/// `min_{|k| <= K} σ_min(D_k)`; positive means the homogeneous equation has
/// only the zero trigonometric-polynomial solution at this truncation.
pub fn uniqueness_probe(p: &ProblemSpec, modes: u64) -> f64 {
    margins(p, modes)
        .iter()
        .map(|m| m.sigma_min)
        .fold(f64::INFINITY, f64::min)
}

/// `‖u^{(j)}‖_{B^s_{p,q}}` for `j = 0..=n`.
pub fn besov_profile(u: &TrigPolynomial, order: usize, params: BesovParams) -> Result<Vec<f64>> {
    let part = DyadicPartition::covering(u.max_frequency());
    let grid = 4 * u.max_frequency() as usize + 8;
    let mut out = vec![besov_norm(u, params, &part, grid)?];
    for j in 1..=order as u32 {
        out.push(besov_norm(&derivative(u, j), params, &part, grid)?);
    }
    Ok(out)
}

/// `max_m ‖u(t_m) − g(t_m)‖` on the uniform grid.
pub fn sup_error_against(u: &TrigPolynomial, grid: usize, exact: impl Fn(f64) -> CVector) -> f64 {
    (0..grid)
        .map(|m| {
            let t = node(m, grid);
            vec_norm(&(synthesize(u, t) - exact(t)))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::DelaySpec;
    use crate::linalg::{zeros, CMatrix};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(z: f64) -> CMatrix {
        CMatrix::from_element(1, 1, c(z, 0.0))
    }

    fn cos_t() -> TrigPolynomial {
        TrigPolynomial::scalar(&[(1, c(0.5, 0.0)), (-1, c(0.5, 0.0))])
    }

    fn delayed() -> ProblemSpec {
        ProblemSpec::new(1, zeros(1), DelaySpec::point(PI, scalar(-1.0)).unwrap()).unwrap()
    }

    #[test]
    fn damped_cosine() {
        let p = ProblemSpec::ode(1, scalar(-1.0)).unwrap();
        let sol = solve(&p, &cos_t(), 4).unwrap();
        assert!((sol.u.coeff(1).unwrap()[0] - c(0.25, -0.25)).norm() < 1e-15);
        assert!((sol.u.coeff(-1).unwrap()[0] - c(0.25, 0.25)).norm() < 1e-15);
        let err = sup_error_against(&sol.u, 64, |t| {
            CVector::from_element(1, c(0.5 * (t.cos() + t.sin()), 0.0))
        });
        assert!(err < 1e-15);
        assert!(sol.residual_coeff < 1e-15);
    }

    #[test]
    fn point_delay_solution_satisfies_the_delay_equation() {
        let f = TrigPolynomial::scalar(&[(1, c(1.0, 0.0))]);
        let sol = solve(&delayed(), &f, 1).unwrap();
        let u1 = sol.u.coeff(1).unwrap()[0];
        assert!((u1 - c(-0.5, -0.5)).norm() < 1e-15);
        // u′(t) + u(t − π) = e^{it}
        for m in 0..16 {
            let t = node(m, 16);
            let lhs = c(0.0, 1.0) * u1 * crate::linalg::cis(t) + u1 * crate::linalg::cis(t - PI);
            assert!((lhs - crate::linalg::cis(t)).norm() < 1e-15);
        }
        let r = residual(&delayed(), &sol.u, &f).unwrap();
        assert!(r.grid_defect < 1e-14 && r.coeff_defect < 1e-15);
    }

    #[test]
    fn zero_forcing_gives_zero_solution() {
        let p = ProblemSpec::ode(2, scalar(-3.0)).unwrap();
        let sol = solve(&p, &TrigPolynomial::zero(1), 5).unwrap();
        assert!(sol.u.is_empty());
    }

    #[test]
    fn resonant_and_truncation_errors() {
        let flat = ProblemSpec::ode(1, scalar(0.0)).unwrap();
        assert!(matches!(
            solve(&flat, &cos_t(), 2),
            Err(Error::Resonance { k: 0, .. })
        ));
        let p = ProblemSpec::ode(1, scalar(-1.0)).unwrap();
        assert_eq!(
            solve(&p, &cos_t(), 0),
            Err(Error::TruncationTooSmall { modes: 0, freq: 1 })
        );
    }

    #[test]
    fn residual_examples() {
        let p = ProblemSpec::ode(1, scalar(-1.0)).unwrap();
        let r = residual(&p, &TrigPolynomial::zero(1), &cos_t()).unwrap();
        assert!((r.coeff_defect - 0.5).abs() < 1e-15);

        let sol = solve(&p, &cos_t(), 1).unwrap();
        let eps = 1e-3;
        let mut bumped = sol.u.clone();
        bumped
            .add_coeff(1, CVector::from_element(1, c(eps, 0.0)))
            .unwrap();
        let d1 = char_matrix(&p, 1)[(0, 0)].norm();
        let r = residual(&p, &bumped, &cos_t()).unwrap();
        assert!((r.coeff_defect - d1 * eps).abs() < 1e-12);
    }

    #[test]
    fn uniqueness_probe_examples() {
        assert!(
            (uniqueness_probe(&ProblemSpec::ode(1, scalar(-1.0)).unwrap(), 10) - 1.0).abs() < 1e-15
        );
        assert_eq!(
            uniqueness_probe(&ProblemSpec::ode(1, scalar(0.0)).unwrap(), 10),
            0.0
        );
        // |ik + e^{−ikπ}| = |ik + (−1)^k| ≥ 1
        let margin = uniqueness_probe(&delayed(), 50);
        assert!((margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn besov_profile_of_monomial() {
        let u = TrigPolynomial::scalar(&[(4, c(1.0, 0.0))]);
        let prof = besov_profile(&u, 2, BesovParams::new(1.0, 2.0, 2.0).unwrap()).unwrap();
        assert_eq!(prof.len(), 3);
        assert!((prof[1] / prof[0] - 4.0).abs() < 1e-12);
        assert!((prof[2] / prof[1] - 4.0).abs() < 1e-12);
    }
}
