//! Finite numerical audits of multiplier boundedness, Fourier-type ratios
//! and the resolvent estimates.
//!
//! A supremum over `k ∈ ℤ` is approximated on a ladder: every `|k| <= 64`,
//! then `±2^i` up to `K`, then `±K`. Each supremum is evaluated on the ladder
//! for `K` and again for `K/2`; the relative change between the two is the
//! stability score. An audit passes when the suprema are finite and the
//! stability score is below [`STABILITY_TOL`].

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{lp_norm, TrigPolynomial};
use crate::linalg::{op_norm, vec_norm, CMatrix, CVector};
use crate::sequences::{seq_b, seq_c, seq_kb};
use crate::symbol::{build_family_at, FamilyMember, ProblemSpec, DEFAULT_COND_LIMIT};

/// Largest relative change of a supremum between `K/2` and `K` that still counts as converged.
pub const STABILITY_TOL: f64 = 1e-3;

/// Relative tolerance for the claimed identity `c_k = (ik)^{2n} b_k`.
pub const STEP2_IDENTITY_TOL: f64 = 1e-9;

/// Exact-sweep radius of the audit ladder.
pub const LADDER_DENSE: u64 = 64;

/// A family `{M_k}` of `rows × cols` matrices indexed by frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSequence {
    label: String,
    rows: usize,
    cols: usize,
    values: BTreeMap<i64, CMatrix>,
}

impl OperatorSequence {
    pub fn from_values(
        label: impl Into<String>,
        values: impl IntoIterator<Item = (i64, CMatrix)>,
    ) -> Result<Self> {
        let values: BTreeMap<i64, CMatrix> = values.into_iter().collect();
        let (rows, cols) = values
            .values()
            .next()
            .map_or((0, 0), |m| (m.nrows(), m.ncols()));
        if let Some(m) = values
            .values()
            .find(|m| m.nrows() != rows || m.ncols() != cols)
        {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: m.nrows(),
            });
        }
        Ok(OperatorSequence {
            label: label.into(),
            rows,
            cols,
            values,
        })
    }

    pub fn from_fn(
        label: impl Into<String>,
        ks: impl IntoIterator<Item = i64>,
        f: impl Fn(i64) -> CMatrix,
    ) -> Result<Self> {
        Self::from_values(label, ks.into_iter().map(|k| (k, f(k))))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn get(&self, k: i64) -> Option<&CMatrix> {
        self.values.get(&k)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> + '_ {
        self.values.keys().copied()
    }

    pub fn scale(&self, lambda: f64) -> Self {
        OperatorSequence {
            label: self.label.clone(),
            rows: self.rows,
            cols: self.cols,
            values: self
                .values
                .iter()
                .map(|(&k, m)| (k, m * Complex64::new(lambda, 0.0)))
                .collect(),
        }
    }

    /// `{M²_k M¹_k}` over the common frequencies.
    pub fn compose(&self, after: &OperatorSequence) -> Result<Self> {
        if after.cols != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: after.cols,
            });
        }
        let values = self
            .values
            .iter()
            .filter_map(|(&k, m)| after.values.get(&k).map(|m2| (k, m2 * m)));
        Self::from_values(format!("{}∘{}", after.label, self.label), values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditRow {
    pub k: i64,
    pub value: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub label: String,
    pub sup_norm: f64,
    pub sup_diff: f64,
    pub stability: f64,
    pub rows: Vec<AuditRow>,
    pub pass: bool,
}

/// Symmetric audit ladder for range `K`, ascending.
pub fn audit_ladder(range: u64) -> Vec<i64> {
    let mut mags: BTreeSet<u64> = (0..=range.min(LADDER_DENSE)).collect();
    let mut p = 2 * LADDER_DENSE;
    while p <= range {
        mags.insert(p);
        p *= 2;
    }
    mags.insert(range);
    let mut ks: Vec<i64> = mags.iter().flat_map(|&m| [-(m as i64), m as i64]).collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// Every frequency an audit over range `K` touches: both ladders and their successors.
pub fn required_frequencies(range: u64) -> BTreeSet<i64> {
    audit_ladder(range)
        .into_iter()
        .chain(audit_ladder(range / 2))
        .flat_map(|k| [k, k + 1])
        .collect()
}

/// `|full − half| / half`, with `0/0 = 0`.
pub fn relative_change(full: f64, half: f64) -> f64 {
    if full == half {
        0.0
    } else if half == 0.0 || !half.is_finite() || !full.is_finite() {
        f64::INFINITY
    } else {
        (full - half).abs() / half.abs()
    }
}

fn ladder_rows(seq: &OperatorSequence, range: u64) -> Result<Vec<AuditRow>> {
    audit_ladder(range)
        .into_iter()
        .filter_map(|k| {
            let Some(mk) = seq.get(k) else {
                return if k == 0 {
                    None
                } else {
                    Some(Err(Error::MissingFrequency(k)))
                };
            };
            let diff = match seq.get(k + 1) {
                Some(next) => (k as f64).abs() * op_norm(&(next - mk)),
                None if k + 1 == 0 => 0.0,
                None => return Some(Err(Error::MissingFrequency(k + 1))),
            };
            Some(Ok(AuditRow {
                k,
                value: op_norm(mk),
                discrepancy: diff,
            }))
        })
        .collect()
}

fn sup<'a>(rows: impl IntoIterator<Item = &'a AuditRow>, f: impl Fn(&AuditRow) -> f64) -> f64 {
    rows.into_iter().map(f).fold(0.0, f64::max)
}

/// `sup_k ‖M_k‖` and `sup_k ‖k (M_{k+1} − M_k)‖` on the ladder, with stability under halving `K`.
pub fn m_bound_report(seq: &OperatorSequence, range: u64) -> Result<AuditReport> {
    if range < 4 {
        return Err(Error::RangeTooSmall(range));
    }
    let rows = ladder_rows(seq, range)?;
    let half_rows = ladder_rows(seq, range / 2)?;
    let sup_norm = sup(&rows, |r| r.value);
    let sup_diff = sup(&rows, |r| r.discrepancy);
    let stability = relative_change(sup_norm, sup(&half_rows, |r| r.value)).max(relative_change(
        sup_diff,
        sup(&half_rows, |r| r.discrepancy),
    ));
    Ok(AuditReport {
        label: seq.label.clone(),
        sup_norm,
        sup_diff,
        stability,
        pass: sup_norm.is_finite() && sup_diff.is_finite() && stability < STABILITY_TOL,
        rows,
    })
}

fn nonzero_ladder(range: u64) -> Vec<i64> {
    audit_ladder(range)
        .into_iter()
        .filter(|&k| k != 0)
        .collect()
}

/// Tabulates `|k b_k|` over `1 <= |k| <= K`; the supremum goes in `sup_norm`.
pub fn step1_audit(n: u64, range: u64) -> Result<AuditReport> {
    if range < 8 {
        return Err(Error::RangeTooSmall(range));
    }
    let row = |k: i64| {
        Ok(AuditRow {
            k,
            value: seq_kb(n, k)?.norm(),
            discrepancy: 0.0,
        })
    };
    let rows = nonzero_ladder(range)
        .into_iter()
        .map(row)
        .collect::<Result<Vec<_>>>()?;
    let half_rows = nonzero_ladder(range / 2)
        .into_iter()
        .map(row)
        .collect::<Result<Vec<_>>>()?;
    let sup_norm = sup(&rows, |r| r.value);
    let stability = relative_change(sup_norm, sup(&half_rows, |r| r.value));
    Ok(AuditReport {
        label: format!("step1 |k b_k| (n={n})"),
        sup_norm,
        sup_diff: 0.0,
        stability,
        pass: sup_norm.is_finite() && stability < STABILITY_TOL,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step2Row {
    pub k: i64,
    /// `c_k` as `[re, im]`.
    pub lhs: [f64; 2],
    /// `(ik)^{2n} b_k` as `[re, im]`.
    pub rhs: [f64; 2],
    /// `|lhs − rhs| / (1 + |lhs| + |rhs|)`.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step2Report {
    pub n: u64,
    pub table: Vec<Step2Row>,
    pub max_discrepancy: f64,
    /// Whether `c_k = (ik)^{2n} b_k` holds within [`STEP2_IDENTITY_TOL`] on every audited `k`.
    pub identity_holds: bool,
    pub report: AuditReport,
}

/// Evaluates both sides of `c_k = (ik)^{2n} b_k` independently and reports
/// the discrepancy; it never assumes the identity.
pub fn step2_audit(n: u64, range: u64) -> Result<Step2Report> {
    let row = |k: i64| {
        let lhs = seq_c(n, k)?;
        let rhs = crate::linalg::ik_pow(k, 2 * n as i64) * seq_b(n, k)?;
        let discrepancy = (lhs - rhs).norm() / (1.0 + lhs.norm() + rhs.norm());
        Ok(Step2Row {
            k,
            lhs: [lhs.re, lhs.im],
            rhs: [rhs.re, rhs.im],
            discrepancy,
        })
    };
    let table = nonzero_ladder(range.max(1))
        .into_iter()
        .map(row)
        .collect::<Result<Vec<_>>>()?;
    let max_discrepancy = table.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    let half_max = nonzero_ladder((range / 2).max(1))
        .into_iter()
        .map(|k| row(k).map(|r| r.discrepancy))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let identity_holds = max_discrepancy <= STEP2_IDENTITY_TOL;
    let rows = table
        .iter()
        .map(|r| {
            let diff = Complex64::new(r.lhs[0] - r.rhs[0], r.lhs[1] - r.rhs[1]).norm();
            AuditRow {
                k: r.k,
                value: diff,
                discrepancy: r.discrepancy,
            }
        })
        .collect();
    Ok(Step2Report {
        n,
        max_discrepancy,
        identity_holds,
        report: AuditReport {
            label: format!("step2 c_k = (ik)^2n b_k (n={n})"),
            sup_norm: max_discrepancy,
            sup_diff: 0.0,
            stability: relative_change(max_discrepancy, half_max),
            rows,
            pass: identity_holds,
        },
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step3Report {
    /// M-bound reports for `N`, `S`, `T`, `P` in that order.
    pub families: Vec<AuditReport>,
    /// `max_k ‖k(N_{k+1} − N_k) + k N_{k+1}(D_{k+1} − D_k) N_k‖`.
    pub resolvent_identity_defect: f64,
    pub resolvent_identity_pass: bool,
    /// `max_k ‖P_k − A N_k − T_k − I‖`.
    pub algebraic_identity_defect: f64,
    pub pass: bool,
}

pub fn step3_audit(p: &ProblemSpec, range: u64) -> Result<Step3Report> {
    if range < 4 {
        return Err(Error::RangeTooSmall(range));
    }
    let family = build_family_at(p, required_frequencies(range), DEFAULT_COND_LIMIT)?;
    let families = FamilyMember::ALL
        .iter()
        .map(|&m| m_bound_report(&family.sequence(m), range))
        .collect::<Result<Vec<_>>>()?;

    let ladder = audit_ladder(range);
    let checks: Vec<(f64, bool, f64)> = ladder
        .par_iter()
        .filter_map(|&k| {
            let (cur, next) = (family.get(k)?, family.get(k + 1)?);
            let kf = Complex64::new(k as f64, 0.0);
            let lhs = (&next.resolvent - &cur.resolvent) * kf;
            let rhs =
                -(&next.resolvent * (&next.characteristic - &cur.characteristic) * &cur.resolvent)
                    * kf;
            let defect = (&lhs - &rhs).norm();
            let cond = cur.cond.max(next.cond);
            let ok = defect <= 1e-9 * cond * cond * rhs.norm().max(1.0);
            Some((defect, ok, cur.identity_defect(p.a())))
        })
        .collect();
    let resolvent_identity_defect = checks.iter().map(|c| c.0).fold(0.0, f64::max);
    let resolvent_identity_pass = checks.iter().all(|c| c.1);
    let algebraic_identity_defect = checks.iter().map(|c| c.2).fold(0.0, f64::max);
    let pass = resolvent_identity_pass && families.iter().all(|r| r.pass);
    Ok(Step3Report {
        families,
        resolvent_identity_defect,
        resolvent_identity_pass,
        algebraic_identity_defect,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierTypeReport {
    pub r: f64,
    pub r_conj: f64,
    pub ratio: f64,
}

/// `‖f̂‖_{ℓ^{r'}} / ‖f‖_{L^r(dt/2π)}` with `1/r + 1/r' = 1`.
pub fn fourier_type_ratio(f: &TrigPolynomial, r: f64, grid: usize) -> Result<f64> {
    Ok(fourier_type_report(f, r, grid)?.ratio)
}

pub fn fourier_type_report(f: &TrigPolynomial, r: f64, grid: usize) -> Result<FourierTypeReport> {
    if !(r > 1.0 && r <= 2.0) {
        return Err(Error::InvalidExponent(r));
    }
    let r_conj = r / (r - 1.0);
    let lr = lp_norm(f, r, grid)? / (2.0 * PI).powf(1.0 / r);
    if lr == 0.0 {
        return Err(Error::ZeroInput);
    }
    let coeff_norm = f
        .iter()
        .map(|(_, v)| vec_norm(v).powf(r_conj))
        .sum::<f64>()
        .powf(1.0 / r_conj);
    Ok(FourierTypeReport {
        r,
        r_conj,
        ratio: coeff_norm / lr,
    })
}

/// `û(k) = M_k f̂(k)` at every frequency of `f`.
pub fn multiplier_apply(seq: &OperatorSequence, f: &TrigPolynomial) -> Result<TrigPolynomial> {
    if !f.is_empty() && seq.cols != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: seq.cols,
            found: f.dim(),
        });
    }
    let out_dim = if f.is_empty() || seq.rows == 0 {
        f.dim()
    } else {
        seq.rows
    };
    let coeffs = f
        .iter()
        .map(|(k, v)| {
            let m = seq.get(k).ok_or(Error::MissingFrequency(k))?;
            Ok((k, m * v))
        })
        .collect::<Result<Vec<(i64, CVector)>>>()?;
    TrigPolynomial::from_coeffs(out_dim, coeffs)
}
