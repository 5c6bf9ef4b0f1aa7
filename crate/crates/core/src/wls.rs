//! Gauss-Newton weighted least squares for the four-state pseudorange model.

use nalgebra::{Matrix4, MatrixXx4, RowVector4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    jacobian_row, pseudorange_residual, pseudorange_residual_at_offset, Epoch, PositionState,
    SolveResult, WeightVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Halt once the state update norm drops below this (meters).
    pub step_tolerance: f64,
    pub min_satellites: usize,
    pub condition_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            step_tolerance: 1e-4,
            min_satellites: 4,
            condition_limit: 1e12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::ConfigInvalid(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.step_tolerance > 0.0) || !(self.condition_limit > 0.0) {
            return Err(Error::ConfigInvalid(
                "solver tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One Gauss-Newton update together with the inverse normal matrix.
#[derive(Debug, Clone)]
pub struct NormalStep {
    pub delta: Vector4<f64>,
    pub a_inverse: Matrix4<f64>,
    pub condition: f64,
}

/// Eigenvalue ratio of a symmetric matrix; infinite when not positive definite.
pub fn condition_estimate(a: &Matrix4<f64>) -> f64 {
    let eig = SymmetricEigen::new(*a).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Cholesky factorization of `H^T W H` with a conditioning guard.
pub fn normal_matrix_inverse(
    h: &MatrixXx4<f64>,
    w: &WeightVector,
    condition_limit: f64,
) -> Result<(Matrix4<f64>, f64)> {
    let a = weighted_gram(h, w)?;
    let condition = condition_estimate(&a);
    if !(condition <= condition_limit) {
        return Err(Error::SingularNormalMatrix { condition });
    }
    let chol = a
        .cholesky()
        .ok_or(Error::SingularNormalMatrix { condition })?;
    Ok((chol.inverse(), condition))
}

fn weighted_gram(h: &MatrixXx4<f64>, w: &WeightVector) -> Result<Matrix4<f64>> {
    if h.nrows() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "geometry has {} rows, weights have {} entries",
            h.nrows(),
            w.len()
        )));
    }
    let mut a = Matrix4::zeros();
    for (row, &wk) in h.row_iter().zip(w.as_slice()) {
        a += row.transpose() * row * wk;
    }
    Ok(a)
}

/// Solves `(H^T W H) dy = H^T W r`.
pub fn normal_equation_step(
    h: &MatrixXx4<f64>,
    w: &WeightVector,
    r: &[f64],
    condition_limit: f64,
) -> Result<NormalStep> {
    if r.len() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "geometry has {} rows, residual has {} entries",
            h.nrows(),
            r.len()
        )));
    }
    let a = weighted_gram(h, w)?;
    let condition = condition_estimate(&a);
    if !(condition <= condition_limit) {
        return Err(Error::SingularNormalMatrix { condition });
    }
    let chol = a
        .cholesky()
        .ok_or(Error::SingularNormalMatrix { condition })?;

    let mut rhs = Vector4::zeros();
    for ((row, &wk), &rk) in h.row_iter().zip(w.as_slice()).zip(r) {
        rhs += row.transpose() * (wk * rk);
    }
    Ok(NormalStep {
        delta: chol.solve(&rhs),
        a_inverse: chol.inverse(),
        condition,
    })
}

/// Jacobian and residual vector at `state` for the corrected measurements.
pub fn linearize(
    epoch: &Epoch,
    corrected: &[f64],
    state: &PositionState,
) -> Result<(MatrixXx4<f64>, Vec<f64>)> {
    let n = epoch.len();
    let mut h = MatrixXx4::zeros(n);
    let mut r = Vec::with_capacity(n);
    for (k, obs) in epoch.observations.iter().enumerate() {
        h.set_row(k, &RowVector4::from(jacobian_row(state, obs)?));
        r.push(pseudorange_residual(corrected[k], state, obs)?);
    }
    Ok((h, r))
}

/// Like [`linearize`] at `anchor + offset`; residuals keep the precision of
/// the unrounded sum.
pub fn linearize_about(
    epoch: &Epoch,
    corrected: &[f64],
    anchor: &PositionState,
    offset: &Vector4<f64>,
) -> Result<(MatrixXx4<f64>, Vec<f64>)> {
    let state = PositionState::from_vector(&(anchor.to_vector() + offset));
    let off = [offset[0], offset[1], offset[2], offset[3]];
    let n = epoch.len();
    let mut h = MatrixXx4::zeros(n);
    let mut r = Vec::with_capacity(n);
    for (k, obs) in epoch.observations.iter().enumerate() {
        h.set_row(k, &RowVector4::from(jacobian_row(&state, obs)?));
        r.push(pseudorange_residual_at_offset(
            corrected[k],
            anchor,
            &off,
            obs,
        )?);
    }
    Ok((h, r))
}

/// Gauss-Newton WLS from `y0`. Iterates on an offset from `y0`, so the
/// reported `offset` resolves changes well below ECEF rounding. `corrections` are subtracted from the
/// pseudoranges before solving. Running out of iterations is reported via
/// `converged = false`, not as an error.
pub fn solve_wls(
    epoch: &Epoch,
    weights: &WeightVector,
    corrections: Option<&[f64]>,
    y0: PositionState,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    let n = epoch.len();
    if weights.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {n} observations",
            weights.len()
        )));
    }
    weights.validate()?;
    let active = weights.active_count();
    if active < cfg.min_satellites {
        return Err(Error::InsufficientSatellites {
            available: active,
            required: cfg.min_satellites,
        });
    }
    let corrected: Vec<f64> = match corrections {
        Some(b) if b.len() != n => {
            return Err(Error::DimensionMismatch(format!(
                "{} corrections for {n} observations",
                b.len()
            )));
        }
        Some(b) => epoch
            .observations
            .iter()
            .zip(b)
            .map(|(o, bk)| o.pseudorange - bk)
            .collect(),
        None => epoch.observations.iter().map(|o| o.pseudorange).collect(),
    };

    let mut offset = Vector4::zeros();
    let mut converged = false;
    let mut iterations = 0;
    let mut condition = f64::NAN;
    let mut last_step_norm = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        let (h, r) = linearize_about(epoch, &corrected, &y0, &offset)?;
        let step = normal_equation_step(&h, weights, &r, cfg.condition_limit)?;
        offset += step.delta;
        iterations += 1;
        condition = step.condition;
        last_step_norm = step.delta.norm();
        if last_step_norm < cfg.step_tolerance {
            converged = true;
            break;
        }
    }

    let state = PositionState::from_vector(&(y0.to_vector() + offset));
    let (geometry, residuals) = linearize_about(epoch, &corrected, &y0, &offset)?;
    let ranges = epoch
        .observations
        .iter()
        .map(|o| o.sat_pos.distance(state.position()))
        .collect();
    Ok(SolveResult {
        state,
        residuals,
        geometry,
        ranges,
        iterations,
        converged,
        condition_estimate: condition,
        last_step_norm,
        offset,
    })
}

/// Unit weights, no corrections, cold start at the origin.
pub fn solve_equal_weight(epoch: &Epoch, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_wls(
        epoch,
        &WeightVector::uniform(epoch.len()),
        None,
        PositionState::default(),
        cfg,
    )
}
