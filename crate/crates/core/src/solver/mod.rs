//! Equilibrium-constrained least squares with optional Tikhonov
//! regularization:
//!
//! ```text
//! minimize ‖Kε − I‖² + α²‖Bε‖²   subject to   Cε = 0
//! ```
//!
//! The normal matrix is formed densely and factored once. In `kkt` mode the
//! constraint is enforced exactly through an augmented-Lagrangian factor and
//! conjugate gradients on the multipliers; in `penalty` mode `w²‖Cε‖²` is
//! added to the objective instead.

mod compare;
mod dense;
mod io;

pub use compare::{compare_fields, ComponentError, FieldComparison};
pub use io::{read_field_csv, write_field_csv, write_vtk, FIELD_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{assemble_stiffness, QuadMesh};
use crate::sparse::CsrMatrix;
use crate::strain::NodalStrainField;
use dense::{Cholesky, LowerDense};

/// Relative size of the diagonal shift added to the normal matrix.
pub const DIAGONAL_SHIFT: f64 = 1e-12;

/// Augmented-Lagrangian weight, relative to the ratio of the mean diagonals
/// of the normal matrix and of `CᵀC`.
const AUGMENTATION: f64 = 1e2;

/// Pivots below this fraction of the largest diagonal entry count towards
/// the rank-deficiency estimate.
const PIVOT_TOL: f64 = 1e-9;

/// How often a failed factorization is retried with a larger shift.
const SHIFT_ESCALATIONS: usize = 3;

/// Multiplier refinement rounds in kkt mode.
const MAX_OUTER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    Kkt,
    Penalty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    None,
    Identity,
    Stiffness,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub constraint_mode: ConstraintMode,
    /// `w` in penalty mode.
    pub penalty_weight: f64,
    pub alpha: f64,
    pub regularizer: RegularizerKind,
    /// Feasibility target for `‖Cε‖∞`, scaled by `max(1, ‖ε‖∞)`.
    pub constraint_tolerance: f64,
    /// Conjugate-gradient iteration cap per multiplier refinement round.
    pub max_iterations: usize,
    /// Fail with [`Error::SingularSystem`] instead of returning the
    /// shift-regularized solution when the system is rank deficient.
    pub reject_rank_deficient: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            constraint_mode: ConstraintMode::Kkt,
            penalty_weight: 1e4,
            alpha: 0.0,
            regularizer: RegularizerKind::None,
            constraint_tolerance: 1e-8,
            max_iterations: 1000,
            reject_rank_deficient: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha {} must be non-negative", self.alpha)));
        }
        if !(self.penalty_weight > 0.0) || !self.penalty_weight.is_finite() {
            return Err(Error::InvalidParameter(format!("penalty weight {} must be positive", self.penalty_weight)));
        }
        if !(self.constraint_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "constraint tolerance {} must be positive",
                self.constraint_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub unknowns: usize,
    pub measurements: usize,
    pub constraints: usize,
    /// Diagonal shift added to the normal matrix.
    pub diagonal_shift: f64,
    /// Weight of `CᵀC` in the factored matrix.
    pub constraint_weight: f64,
    pub cg_iterations: usize,
    pub refinement_rounds: usize,
    /// Number of tiny Cholesky pivots.
    pub rank_deficiency_estimate: usize,
}

#[derive(Clone, Debug)]
pub struct ReconResult {
    pub field: NodalStrainField,
    /// `‖Kε − I‖₂`
    pub data_residual: f64,
    /// `‖Cε‖∞`
    pub constraint_residual: f64,
    /// `‖Bε‖₂`, zero without a regularizer.
    pub reg_norm: f64,
    /// `μ` in `2Kᵀ(Kε − I) + 2α²BᵀBε + Cᵀμ = 0`.
    pub multipliers: Vec<f64>,
    pub stats: SolveStats,
}

/// The Tikhonov operator `B` for `kind` on `mesh`, `None` for no regularizer.
pub fn build_regularizer(kind: RegularizerKind, mesh: &QuadMesh) -> Option<CsrMatrix> {
    match kind {
        RegularizerKind::None => None,
        RegularizerKind::Identity => Some(CsrMatrix::identity(3 * mesh.node_count())),
        RegularizerKind::Stiffness => Some(assemble_stiffness(mesh).regularizer()),
    }
}

/// `min ‖Kε − I‖²` subject to the constraints (kkt) or with the penalty term.
/// `config.alpha` is ignored.
pub fn solve_constrained(k: &CsrMatrix, data: &[f64], c: &CsrMatrix, config: &SolverConfig) -> Result<ReconResult> {
    solve(k, data, c, None, config)
}

/// As [`solve_constrained`] with `α²‖Bε‖²` added. `alpha = 0` skips `B`
/// entirely and returns the unregularized solution.
pub fn solve_tikhonov(
    k: &CsrMatrix,
    data: &[f64],
    c: &CsrMatrix,
    b: &CsrMatrix,
    alpha: f64,
    config: &SolverConfig,
) -> Result<ReconResult> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha {alpha} must be non-negative")));
    }
    let n = k.ncols();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "regularizer is {}×{}, expected {n}×{n}",
            b.nrows(),
            b.ncols()
        )));
    }
    let result = solve(k, data, c, (alpha > 0.0).then_some((b, alpha)), config)?;
    Ok(ReconResult {
        reg_norm: norm2(&b.mul_vec(result.field.values())),
        ..result
    })
}

/// Solves at every alpha in `alphas`, in order.
pub fn alpha_sweep(
    k: &CsrMatrix,
    data: &[f64],
    c: &CsrMatrix,
    b: &CsrMatrix,
    alphas: &[f64],
    config: &SolverConfig,
) -> Result<Vec<(f64, ReconResult)>> {
    alphas.iter().map(|&a| Ok((a, solve_tikhonov(k, data, c, b, a, config)?))).collect()
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// The factored matrix `M = KᵀK + α²BᵀB + δI + ρCᵀC` with a sparse product
/// for residual refinement.
struct System<'a> {
    k: &'a CsrMatrix,
    reg: Option<(&'a CsrMatrix, f64)>,
    c: &'a CsrMatrix,
    shift: f64,
    rho: f64,
    factor: Cholesky,
}

impl System<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.k.mul_transpose_vec(&self.k.mul_vec(x));
        if let Some((b, alpha)) = self.reg {
            let bx = b.mul_transpose_vec(&b.mul_vec(x));
            y.iter_mut().zip(bx).for_each(|(y, v)| *y += alpha * alpha * v);
        }
        if self.rho > 0.0 && self.c.nrows() > 0 {
            let cx = self.c.mul_transpose_vec(&self.c.mul_vec(x));
            y.iter_mut().zip(cx).for_each(|(y, v)| *y += self.rho * v);
        }
        y.iter_mut().zip(x).for_each(|(y, v)| *y += self.shift * v);
        y
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.factor.solve_in_place(&mut x);
        x
    }

    /// Solve followed by up to two rounds of iterative refinement.
    fn solve_refined(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.solve(rhs);
        for _ in 0..2 {
            let ax = self.apply(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
            if norm_inf(&dx) <= 1e-15 * norm_inf(&x) {
                break;
            }
        }
        x
    }
}

fn solve(
    k: &CsrMatrix,
    data: &[f64],
    c: &CsrMatrix,
    reg: Option<(&CsrMatrix, f64)>,
    config: &SolverConfig,
) -> Result<ReconResult> {
    config.validate()?;
    let n = k.ncols();
    if k.nrows() == 0 {
        return Err(Error::DimensionMismatch("measurement operator has no rows".into()));
    }
    if data.len() != k.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements for {} operator rows",
            data.len(),
            k.nrows()
        )));
    }
    if c.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "constraint matrix has {} columns, operator has {n}",
            c.ncols()
        )));
    }
    let p = c.nrows();
    let (factor, shift, rho, deficiency) = factorize(k, reg, c, config)?;
    if config.reject_rank_deficient && deficiency > 0 {
        return Err(Error::SingularSystem { deficiency });
    }

    let system = System {
        k,
        reg,
        c,
        shift,
        rho,
        factor,
    };
    let g = k.mul_transpose_vec(data);
    let mut stats = SolveStats {
        unknowns: n,
        measurements: k.nrows(),
        constraints: p,
        diagonal_shift: shift,
        constraint_weight: rho,
        rank_deficiency_estimate: deficiency,
        ..Default::default()
    };

    let (eps, multipliers) = if p == 0 {
        (system.solve_refined(&g), Vec::new())
    } else if config.constraint_mode == ConstraintMode::Penalty {
        let eps = system.solve_refined(&g);
        let ce = c.mul_vec(&eps);
        let mu = ce.iter().map(|v| 2.0 * rho * v).collect();
        (eps, mu)
    } else {
        let (eps, lambda) = kkt_multipliers(&system, &g, config, &mut stats)?;
        // Mε = g − Cᵀλ, so the true multiplier of the unaugmented problem
        // is λ + ρCε; the factor 2 matches the gradient of ‖Kε − I‖².
        let ce = c.mul_vec(&eps);
        let mu = lambda.iter().zip(&ce).map(|(l, v)| 2.0 * (l + rho * v)).collect();
        (eps, mu)
    };

    let residual: Vec<f64> = k.mul_vec(&eps).iter().zip(data).map(|(a, b)| a - b).collect();
    let reg_norm = match reg {
        Some((b, _)) => norm2(&b.mul_vec(&eps)),
        None => 0.0,
    };
    let constraint_residual = if p == 0 { 0.0 } else { norm_inf(&c.mul_vec(&eps)) };
    Ok(ReconResult {
        data_residual: norm2(&residual),
        constraint_residual,
        reg_norm,
        multipliers,
        stats,
        field: NodalStrainField::new(eps)?,
    })
}

/// Assembles and factors `M = KᵀK + α²BᵀB + δI + ρCᵀC`. If rounding defeats
/// the shift on a rank-deficient system the shift is raised by ×100, at most
/// [`SHIFT_ESCALATIONS`] times. Returns the factor, `δ`, `ρ` and the number of
/// tiny pivots.
fn factorize(
    k: &CsrMatrix,
    reg: Option<(&CsrMatrix, f64)>,
    c: &CsrMatrix,
    config: &SolverConfig,
) -> Result<(Cholesky, f64, f64, usize)> {
    let n = k.ncols();
    let mut last_index = 0;
    for attempt in 0..=SHIFT_ESCALATIONS {
        let mut m = LowerDense::zeros(n);
        m.add_gram(k, 1.0);
        if let Some((b, alpha)) = reg {
            m.add_gram(b, alpha * alpha);
        }
        let trace = m.trace();
        if !(trace > 0.0) || !trace.is_finite() {
            return Err(Error::SingularSystem { deficiency: n });
        }
        let shift = DIAGONAL_SHIFT * 100f64.powi(attempt as i32) * trace / n as f64;
        m.add_diag(shift);
        let rho = if c.nrows() == 0 {
            0.0
        } else {
            match config.constraint_mode {
                ConstraintMode::Kkt => {
                    let c_fro2 = c.norm_fro().powi(2);
                    if c_fro2 > 0.0 {
                        AUGMENTATION * trace / c_fro2
                    } else {
                        0.0
                    }
                }
                ConstraintMode::Penalty => config.penalty_weight.powi(2),
            }
        };
        if rho > 0.0 {
            m.add_gram(c, rho);
        }
        let max_diag = (0..n).map(|i| m.diag(i)).fold(0.0, f64::max);
        match m.cholesky() {
            Ok(factor) => {
                let deficiency = factor.pivots().filter(|&d| d < PIVOT_TOL * max_diag).count();
                return Ok((factor, shift, rho, deficiency));
            }
            Err(index) => last_index = index,
        }
    }
    Err(Error::SingularSystem {
        deficiency: n - last_index,
    })
}

/// Finds `λ` with `C·M⁻¹(g − Cᵀλ) = 0` by rounds of conjugate gradients on
/// `S = C M⁻¹ Cᵀ`, each round correcting the constraint residual of the
/// refined primal solve.
fn kkt_multipliers(system: &System, g: &[f64], config: &SolverConfig, stats: &mut SolveStats) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = system.c;
    let p = c.nrows();
    // |C|·|ε| sets the rounding floor of Cε
    let row_abs: Vec<f64> = (0..p).map(|r| c.row(r).map(|(_, v)| v.abs()).sum()).collect();
    let row_scale = row_abs.iter().fold(0.0f64, |a, &v| a.max(v));

    let mut lambda = vec![0.0; p];
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for round in 0..MAX_OUTER {
        let rhs: Vec<f64> = g.iter().zip(c.mul_transpose_vec(&lambda)).map(|(g, v)| g - v).collect();
        let eps = system.solve_refined(&rhs);
        let r = c.mul_vec(&eps);
        let feas = norm_inf(&r);
        let eps_inf = norm_inf(&eps);
        let allowed = config.constraint_tolerance * eps_inf.max(1.0);
        let target = (1e-2 * allowed).min(1e-11 * row_scale * eps_inf).max(f64::MIN_POSITIVE);
        stats.refinement_rounds = round + 1;
        if best.as_ref().map_or(true, |(f, _, _)| feas < *f) {
            best = Some((feas, eps, lambda.clone()));
        }
        if feas <= target {
            break;
        }
        let (delta, iters) = cg(|v| c.mul_vec(&system.solve(&c.mul_transpose_vec(v))), &r, 1e-12, config.max_iterations);
        stats.cg_iterations += iters;
        lambda.iter_mut().zip(&delta).for_each(|(l, d)| *l += d);
    }
    let (feas, eps, lambda) = best.expect("at least one round");
    if feas > config.constraint_tolerance * norm_inf(&eps).max(1.0) {
        return Err(Error::NotConverged {
            iterations: stats.cg_iterations,
            residual: feas,
        });
    }
    Ok((eps, lambda))
}

/// Conjugate gradients for a symmetric positive semi-definite operator,
/// from a zero start, to relative residual `rtol`.
fn cg(apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], rtol: f64, max_iter: usize) -> (Vec<f64>, usize) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let stop = rtol * rtol * rr;
    let mut it = 0;
    while it < max_iter && rr > stop && rr > 0.0 {
        let ad = apply(&d);
        let dad = dot(&d, &ad);
        if !(dad > 0.0) {
            break;
        }
        let step = rr / dad;
        x.iter_mut().zip(&d).for_each(|(x, d)| *x += step * d);
        r.iter_mut().zip(&ad).for_each(|(r, a)| *r -= step * a);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        d.iter_mut().zip(&r).for_each(|(d, r)| *d = r + beta * *d);
        rr = rr_new;
        it += 1;
    }
    (x, it)
}
