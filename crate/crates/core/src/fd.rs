//! Periodic finite-difference discretization on `t_m = 2πm/M`.
//!
//! `x^{(j)}` becomes `C^j` with `(Cu)_m = (u_{m+1} − u_{m−1}) / 2h`, point
//! delays become shifts (linearly interpolated when `r/h` is fractional) and
//! the kernel integral becomes the same trapezoid sum used by the delay
//! symbol, with each node realized as an interpolated shift. The operator is
//! a stencil, hence block-circulant, and is solved mode by mode. A dense
//! assembly is kept for cross-checking on small grids.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{root_of_unity, sample, SampledFunction, TrigPolynomial};
use crate::linalg::{identity, vec_norm, CMatrix, CVector, Conditioning};
use crate::solver::PeriodicSolution;
use crate::symbol::ProblemSpec;

/// Smallest admissible `σ_min(mode) / σ_max(system)`.
pub const SINGULAR_TOL: f64 = 1e-13;

/// Fractional shifts closer than this to an integer are treated as exact.
const SHIFT_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    pub grid: usize,
    pub samples: SampledFunction,
    /// `σ_max / σ_min` of the assembled system.
    pub cond: f64,
}

/// `(Su)_m = Σ_o S_o u_{m+o}` with offsets reduced modulo `M`.
#[derive(Debug, Clone)]
pub struct Stencil {
    grid: usize,
    dim: usize,
    taps: BTreeMap<usize, CMatrix>,
}

impl Stencil {
    fn new(grid: usize, dim: usize) -> Self {
        Stencil {
            grid,
            dim,
            taps: BTreeMap::new(),
        }
    }

    fn add(&mut self, offset: i64, m: CMatrix) {
        let o = offset.rem_euclid(self.grid as i64) as usize;
        let dim = self.dim;
        *self
            .taps
            .entry(o)
            .or_insert_with(|| CMatrix::zeros(dim, dim)) += m;
    }

    /// Adds `m · u(t + s·h)`, interpolating linearly between neighboring nodes.
    fn add_shift(&mut self, s: f64, m: &CMatrix) {
        let nearest = s.round();
        if (s - nearest).abs() < SHIFT_SNAP {
            self.add(nearest as i64, m.clone());
            return;
        }
        let lo = s.floor();
        let alpha = s - lo;
        self.add(lo as i64, m * Complex64::new(1.0 - alpha, 0.0));
        self.add(lo as i64 + 1, m * Complex64::new(alpha, 0.0));
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn taps(&self) -> impl Iterator<Item = (usize, &CMatrix)> {
        self.taps.iter().map(|(o, m)| (*o, m))
    }

    /// Block `Σ_o S_o e^{ik o h}` acting on mode `k`.
    pub fn mode_block(&self, k: i64) -> CMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (o, m) in &self.taps {
            acc += m * root_of_unity(k as i128 * *o as i128, self.grid);
        }
        acc
    }

    pub fn apply(&self, u: &[CVector]) -> Vec<CVector> {
        let grid = self.grid;
        (0..grid)
            .map(|m| {
                let mut acc = CVector::zeros(self.dim);
                for (o, s) in &self.taps {
                    acc += s * &u[(m + o) % grid];
                }
                acc
            })
            .collect()
    }

    pub fn dense(&self) -> CMatrix {
        let (grid, d) = (self.grid, self.dim);
        let mut out = DMatrix::zeros(grid * d, grid * d);
        for m in 0..grid {
            for (o, s) in &self.taps {
                let col = (m + o) % grid;
                let mut view = out.view_mut((m * d, col * d), (d, d));
                view += s;
            }
        }
        out
    }
}

/// Coefficients of `C^j` as offsets `−j..=j`.
fn central_power(j: usize, h: f64) -> Vec<(i64, f64)> {
    let mut coeffs: BTreeMap<i64, f64> = BTreeMap::from([(0, 1.0)]);
    let c = 1.0 / (2.0 * h);
    for _ in 0..j {
        let mut next = BTreeMap::new();
        for (&o, &v) in &coeffs {
            *next.entry(o + 1).or_insert(0.0) += c * v;
            *next.entry(o - 1).or_insert(0.0) -= c * v;
        }
        coeffs = next;
    }
    coeffs.into_iter().filter(|(_, v)| *v != 0.0).collect()
}

/// `Σ_{j=1}^n C^j − A − L_h`.
pub fn assemble(p: &ProblemSpec, grid: usize) -> Stencil {
    let d = p.dim();
    let h = 2.0 * std::f64::consts::PI / grid as f64;
    let mut st = Stencil::new(grid, d);
    let eye = identity(d);
    for j in 1..=p.order() {
        for (o, v) in central_power(j, h) {
            st.add(o, &eye * Complex64::new(v, 0.0));
        }
    }
    st.add(0, -p.a().clone());
    for term in p.delay().discrete() {
        st.add_shift(-term.lag / h, &(-&term.matrix));
    }
    for node in p.delay().kernel_nodes() {
        st.add_shift(
            node.theta / h,
            &(node.value * Complex64::new(-node.weight, 0.0)),
        );
    }
    st
}

fn check_grid(f: &TrigPolynomial, p: &ProblemSpec, grid: usize) -> Result<()> {
    if grid < 8 || !grid.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "grid must be even and at least 8, got {grid}"
        )));
    }
    if f.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: f.dim(),
        });
    }
    if grid as u64 <= 2 * f.max_frequency() {
        return Err(Error::NyquistViolation {
            grid,
            freq: f.max_frequency(),
        });
    }
    Ok(())
}

/// Signed mode numbers `−M/2..M/2` in DFT order `0, 1, …`.
fn signed_mode(j: usize, grid: usize) -> i64 {
    if j < grid / 2 {
        j as i64
    } else {
        j as i64 - grid as i64
    }
}

struct ModeScan {
    blocks: Vec<CMatrix>,
    cond: f64,
}

fn scan_modes(st: &Stencil) -> Result<ModeScan> {
    let grid = st.grid();
    let scanned: Vec<(CMatrix, Conditioning)> = (0..grid)
        .into_par_iter()
        .map(|j| {
            let b = st.mode_block(signed_mode(j, grid));
            let c = Conditioning::of(&b);
            (b, c)
        })
        .collect();
    let sigma_max = scanned.iter().map(|(_, c)| c.sigma_max).fold(0.0, f64::max);
    let worst = (0..grid)
        .min_by(|&a, &b| {
            let (ka, kb) = (signed_mode(a, grid), signed_mode(b, grid));
            scanned[a]
                .1
                .sigma_min
                .total_cmp(&scanned[b].1.sigma_min)
                .then(ka.abs().cmp(&kb.abs()))
                .then(kb.cmp(&ka))
        })
        .expect("grid is nonempty");
    let sigma_min = scanned[worst].1.sigma_min;
    if sigma_min.is_nan() || sigma_min <= SINGULAR_TOL * sigma_max {
        return Err(Error::SingularSystem {
            mode: signed_mode(worst, grid),
        });
    }
    Ok(ModeScan {
        blocks: scanned.into_iter().map(|(b, _)| b).collect(),
        cond: sigma_max / sigma_min,
    })
}

/// Solves the discretized equation by diagonalizing the block-circulant system.
pub fn solve_fd(p: &ProblemSpec, f: &TrigPolynomial, grid: usize) -> Result<FdSolution> {
    check_grid(f, p, grid)?;
    let st = assemble(p, grid);
    let scan = scan_modes(&st)?;
    let rhs = sample(f, grid);
    let d = p.dim();
    let twiddle: Vec<Complex64> = (0..grid).map(|j| root_of_unity(j as i128, grid)).collect();
    let scale = Complex64::new(1.0 / grid as f64, 0.0);

    let modes: Vec<CVector> = (0..grid)
        .into_par_iter()
        .map(|j| {
            let mut fk = CVector::zeros(d);
            for (m, v) in rhs.samples().iter().enumerate() {
                fk += v * twiddle[(grid - (j * m) % grid) % grid];
            }
            fk *= scale;
            scan.blocks[j]
                .clone()
                .lu()
                .solve(&fk)
                .ok_or(Error::SingularSystem {
                    mode: signed_mode(j, grid),
                })
        })
        .collect::<Result<_>>()?;

    let samples: Vec<CVector> = (0..grid)
        .into_par_iter()
        .map(|m| {
            let mut acc = CVector::zeros(d);
            for (j, v) in modes.iter().enumerate() {
                acc += v * twiddle[(j * m) % grid];
            }
            acc
        })
        .collect();
    Ok(FdSolution {
        grid,
        samples: SampledFunction::new(d, samples)?,
        cond: scan.cond,
    })
}

/// Same discretization, solved as one dense `Md × Md` system.
pub fn solve_fd_dense(p: &ProblemSpec, f: &TrigPolynomial, grid: usize) -> Result<FdSolution> {
    check_grid(f, p, grid)?;
    let st = assemble(p, grid);
    let scan = scan_modes(&st)?;
    let d = p.dim();
    let rhs = sample(f, grid);
    let mut b = CVector::zeros(grid * d);
    for (m, v) in rhs.samples().iter().enumerate() {
        b.rows_mut(m * d, d).copy_from(v);
    }
    let x = st
        .dense()
        .lu()
        .solve(&b)
        .ok_or(Error::SingularSystem { mode: 0 })?;
    let samples = (0..grid).map(|m| x.rows(m * d, d).into_owned()).collect();
    Ok(FdSolution {
        grid,
        samples: SampledFunction::new(d, samples)?,
        cond: scan.cond,
    })
}

/// `max_m ‖fd_m − u(t_m)‖`.
pub fn compare(fd: &FdSolution, sol: &PeriodicSolution) -> f64 {
    sup_distance(fd.samples.samples(), sample(&sol.u, fd.grid).samples())
}

fn sup_distance(a: &[CVector], b: &[CVector]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| vec_norm(&(x - y)))
        .fold(0.0, f64::max)
}

/// `max_m ‖(S u)_m − f(t_m)‖` for the discrete operator `S` applied to samples of `u`.
pub fn consistency_residual(
    p: &ProblemSpec,
    u: &TrigPolynomial,
    f: &TrigPolynomial,
    grid: usize,
) -> Result<f64> {
    check_grid(f, p, grid)?;
    let st = assemble(p, grid);
    let lhs = st.apply(sample(u, grid).samples());
    Ok(sup_distance(&lhs, sample(f, grid).samples()))
}

/// `log₂(e_i / e_{i+1})` for consecutive errors on a doubling ladder.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub grid: usize,
    pub sup_error: f64,
}

pub fn convergence(
    p: &ProblemSpec,
    sol: &PeriodicSolution,
    f: &TrigPolynomial,
    grids: &[usize],
) -> Result<Vec<ConvergencePoint>> {
    grids
        .iter()
        .map(|&grid| {
            Ok(ConvergencePoint {
                grid,
                sup_error: compare(&solve_fd(p, f, grid)?, sol),
            })
        })
        .collect()
}
