//! Characteristic matrices `D_k = Σ_{j=1}^n (ik)^j I − A − L_k` and the
//! per-frequency families built from their inverses.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::audit::OperatorSequence;
use crate::delay::{symbol, DelaySpec};
use crate::error::{Error, Result};
use crate::io::MatrixJson;
use crate::linalg::{identity, ik_pow, inverse, is_real, CMatrix, Conditioning};

/// Largest admissible condition number of `D_k` before it counts as resonant.
pub const DEFAULT_COND_LIMIT: f64 = 1e12;

/// The left-hand side of `Σ_{j=1}^n x^{(j)} = A x + L(x_t) + f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    order: usize,
    a: CMatrix,
    delay: DelaySpec,
}

impl ProblemSpec {
    pub fn new(order: usize, a: CMatrix, delay: DelaySpec) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("differential order n must be at least 1"));
        }
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(Error::invalid(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if delay.dim() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: delay.dim(),
            });
        }
        Ok(ProblemSpec { order, a, delay })
    }

    /// Delay-free problem.
    pub fn ode(order: usize, a: CMatrix) -> Result<Self> {
        let dim = a.nrows();
        Self::new(order, a, DelaySpec::zero(dim))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn delay(&self) -> &DelaySpec {
        &self.delay
    }

    /// Real coefficients throughout, so real forcing gives a real solution.
    pub fn is_real(&self) -> bool {
        is_real(&self.a) && self.delay.is_real()
    }

    /// `Σ_{j=1}^n (ik)^j`.
    pub fn derivative_symbol(&self, k: i64) -> Complex64 {
        (1..=self.order as i64).map(|j| ik_pow(k, j)).sum()
    }
}

/// `D_k = Σ_{j=1}^n (ik)^j I − A − L_k`.
pub fn char_matrix(p: &ProblemSpec, k: i64) -> CMatrix {
    identity(p.dim()) * p.derivative_symbol(k) - &p.a - symbol(&p.delay, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolvent {
    pub k: i64,
    pub matrix: CMatrix,
    pub conditioning: Conditioning,
}

impl Resolvent {
    pub fn cond(&self) -> f64 {
        self.conditioning.cond()
    }
}

/// `N_k = D_k^{-1}`, refusing singular or over-conditioned `D_k`.
pub fn resolvent(p: &ProblemSpec, k: i64, cond_limit: f64) -> Result<Resolvent> {
    invert_char(k, &char_matrix(p, k), cond_limit)
}

fn invert_char(k: i64, d: &CMatrix, cond_limit: f64) -> Result<Resolvent> {
    let conditioning = Conditioning::of(d);
    let cond = conditioning.cond();
    if cond.is_nan() || cond > cond_limit {
        return Err(Error::Resonance { k, cond });
    }
    let matrix = inverse(d).ok_or(Error::Resonance {
        k,
        cond: f64::INFINITY,
    })?;
    Ok(Resolvent {
        k,
        matrix,
        conditioning,
    })
}

/// Matrices attached to one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolRecord {
    pub k: i64,
    /// `D_k`.
    pub characteristic: CMatrix,
    /// `L_k`.
    pub delay_symbol: CMatrix,
    /// `N_k = D_k^{-1}`.
    pub resolvent: CMatrix,
    /// `S_k = (ik)^n N_k`.
    pub scaled: CMatrix,
    /// `T_k = L_k N_k`.
    pub delay_part: CMatrix,
    /// `P_k = Σ_{j=1}^n (ik)^j N_k`.
    pub derivative_part: CMatrix,
    pub cond: f64,
}

impl SymbolRecord {
    fn build(p: &ProblemSpec, k: i64, cond_limit: f64) -> Result<Self> {
        let delay_symbol = symbol(&p.delay, k);
        let characteristic = identity(p.dim()) * p.derivative_symbol(k) - &p.a - &delay_symbol;
        let res = invert_char(k, &characteristic, cond_limit)?;
        let n = res.matrix;
        Ok(SymbolRecord {
            k,
            scaled: &n * ik_pow(k, p.order as i64),
            delay_part: &delay_symbol * &n,
            derivative_part: &n * p.derivative_symbol(k),
            characteristic,
            delay_symbol,
            resolvent: n,
            cond: res.conditioning.cond(),
        })
    }

    /// `‖P_k − A N_k − T_k − I‖`, the algebraic identity behind the solution formula.
    pub fn identity_defect(&self, a: &CMatrix) -> f64 {
        let dim = a.nrows();
        (&self.derivative_part - a * &self.resolvent - &self.delay_part - identity(dim)).norm()
    }

    /// `max(‖D_k N_k − I‖, ‖N_k D_k − I‖)`.
    pub fn inverse_defect(&self) -> f64 {
        let dim = self.resolvent.nrows();
        let left = (&self.characteristic * &self.resolvent - identity(dim)).norm();
        let right = (&self.resolvent * &self.characteristic - identity(dim)).norm();
        left.max(right)
    }
}

/// The families `D, N, S, T, P` over a set of frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFamily {
    order: usize,
    records: BTreeMap<i64, SymbolRecord>,
}

/// Which member of a [`SymbolFamily`] to extract as a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyMember {
    Resolvent,
    Scaled,
    DelayPart,
    DerivativePart,
}

impl FamilyMember {
    pub const ALL: [FamilyMember; 4] = [
        FamilyMember::Resolvent,
        FamilyMember::Scaled,
        FamilyMember::DelayPart,
        FamilyMember::DerivativePart,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FamilyMember::Resolvent => "N",
            FamilyMember::Scaled => "S",
            FamilyMember::DelayPart => "T",
            FamilyMember::DerivativePart => "P",
        }
    }
}

impl SymbolFamily {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, k: i64) -> Option<&SymbolRecord> {
        self.records.get(&k)
    }

    pub fn records(&self) -> impl Iterator<Item = &SymbolRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn sequence(&self, member: FamilyMember) -> OperatorSequence {
        let values = self.records.iter().map(|(&k, r)| {
            let m = match member {
                FamilyMember::Resolvent => &r.resolvent,
                FamilyMember::Scaled => &r.scaled,
                FamilyMember::DelayPart => &r.delay_part,
                FamilyMember::DerivativePart => &r.derivative_part,
            };
            (k, m.clone())
        });
        OperatorSequence::from_values(member.label(), values)
            .expect("family matrices share one dimension")
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct RecordJson {
            k: i64,
            cond: f64,
            #[serde(rename = "D")]
            d: MatrixJson,
            #[serde(rename = "N")]
            n: MatrixJson,
            #[serde(rename = "S")]
            s: MatrixJson,
            #[serde(rename = "T")]
            t: MatrixJson,
            #[serde(rename = "P")]
            p: MatrixJson,
        }
        let records: Vec<RecordJson> = self
            .records
            .values()
            .map(|r| RecordJson {
                k: r.k,
                cond: r.cond,
                d: MatrixJson::from_matrix(&r.characteristic),
                n: MatrixJson::from_matrix(&r.resolvent),
                s: MatrixJson::from_matrix(&r.scaled),
                t: MatrixJson::from_matrix(&r.delay_part),
                p: MatrixJson::from_matrix(&r.derivative_part),
            })
            .collect();
        serde_json::json!({ "order": self.order, "records": records })
    }
}

/// Frequencies in resonance-reporting priority: smallest `|k|` first, positive before negative.
pub fn priority_order(ks: impl IntoIterator<Item = i64>) -> Vec<i64> {
    let mut ks: Vec<i64> = ks.into_iter().collect();
    ks.sort_by_key(|&k| (k.unsigned_abs(), k < 0));
    ks.dedup();
    ks
}

/// Family over `|k| <= modes`.
pub fn build_family(p: &ProblemSpec, modes: u64) -> Result<SymbolFamily> {
    let m = modes as i64;
    build_family_at(p, -m..=m, DEFAULT_COND_LIMIT)
}

/// Family over an arbitrary frequency set. On resonance the error names the
/// offending frequency of highest priority (see [`priority_order`]).
pub fn build_family_at(
    p: &ProblemSpec,
    ks: impl IntoIterator<Item = i64>,
    cond_limit: f64,
) -> Result<SymbolFamily> {
    let ks = priority_order(ks);
    let built: Vec<Result<SymbolRecord>> = ks
        .par_iter()
        .map(|&k| SymbolRecord::build(p, k, cond_limit))
        .collect();
    let mut records = BTreeMap::new();
    for r in built {
        let r = r?;
        records.insert(r.k, r);
    }
    Ok(SymbolFamily {
        order: p.order,
        records,
    })
}
