//! Sensitivities of the converged WLS solution and the position-loss chain rule.
//!
//! At a converged solution the normal equations `H(y)^T W r(y) = 0` hold.
//! Differentiating that condition implicitly gives
//!
//! * `dy/dz = (A - C)^-1 H^T W`
//! * `dy/dw_k = (A - C)^-1 h_k r_k`
//!
//! with `A = H^T W H`, `z` the corrected pseudorange vector, `h_k` the k-th
//! Jacobian row, `r_k` the k-th converged residual and
//! `C = sum_k w_k r_k (I - u_k u_k^T) / rho_k` the range curvature on the
//! position block (`u_k` line-of-sight unit vector, `rho_k` range).
//!
//! `C` is of order residual/range relative to `A`. Dropping it (the
//! frozen-geometry form, [`Curvature::Frozen`]) costs up to ~1e-4 relative
//! error on small gradient entries. Both forms satisfy `dy/dz * 1 = e_clock`
//! and `dy/dw * w = 0`, since `C` only touches the position block and
//! `H^T W r = 0`.

use nalgebra::{Matrix3, Matrix4, Matrix4xX, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::geodesy::EcefPosition;
use crate::model::{PositionState, SolveResult, WeightVector};
use crate::wls::normal_matrix_inverse;

#[derive(Debug, Clone)]
pub struct Sensitivities {
    /// 4 x n, column k is dy/dz_k.
    pub d_y_d_z: Matrix4xX<f64>,
    /// 4 x n, column k is dy/dw_k.
    pub d_y_d_w: Matrix4xX<f64>,
}

#[derive(Debug, Clone)]
pub struct GradientBundle {
    pub sensitivities: Sensitivities,
    /// m^2
    pub loss: f64,
    pub d_loss_d_y: Vector4<f64>,
    pub d_loss_d_z: Vec<f64>,
    pub d_loss_d_w: Vec<f64>,
}

/// Half squared 3D position error. The clock component of the gradient is
/// always zero.
pub fn position_loss(truth: EcefPosition, result: &SolveResult) -> Result<(f64, Vector4<f64>)> {
    if !result.converged {
        return Err(Error::NotConverged);
    }
    let e = result.state.position() - truth;
    let loss = 0.5 * (e.x * e.x + e.y * e.y + e.z * e.z);
    Ok((loss, Vector4::new(e.x, e.y, e.z, 0.0)))
}

/// Half squared error over all four state components, clock included.
pub fn full_state_loss(truth: &PositionState, result: &SolveResult) -> Result<(f64, Vector4<f64>)> {
    if !result.converged {
        return Err(Error::NotConverged);
    }
    let e = result.state.to_vector() - truth.to_vector();
    Ok((0.5 * e.norm_squared(), e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Curvature {
    /// Exact implicit derivative.
    #[default]
    Included,
    /// `H` and `r` held fixed at the solution.
    Frozen,
}

pub fn wls_sensitivities(
    result: &SolveResult,
    weights: &WeightVector,
    condition_limit: f64,
) -> Result<Sensitivities> {
    wls_sensitivities_with(result, weights, condition_limit, Curvature::Included)
}

pub fn wls_sensitivities_with(
    result: &SolveResult,
    weights: &WeightVector,
    condition_limit: f64,
    curvature: Curvature,
) -> Result<Sensitivities> {
    if !result.converged {
        return Err(Error::NotConverged);
    }
    let n = result.geometry.nrows();
    if weights.len() != n || result.residuals.len() != n || result.ranges.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} geometry rows, {} weights, {} residuals, {} ranges",
            weights.len(),
            result.residuals.len(),
            result.ranges.len()
        )));
    }
    let (a_inv, _) = normal_matrix_inverse(&result.geometry, weights, condition_limit)?;
    let j_inv = match curvature {
        Curvature::Frozen => a_inv,
        Curvature::Included => {
            let mut c = Matrix4::zeros();
            for (k, row) in result.geometry.row_iter().enumerate() {
                let u = Vector3::new(row[0], row[1], row[2]);
                let s = weights.0[k] * result.residuals[k] / result.ranges[k];
                let block = (Matrix3::identity() - u * u.transpose()) * s;
                let mut pos = c.fixed_view_mut::<3, 3>(0, 0);
                pos += block;
            }
            // (A - C)^-1 = (I - A^-1 C)^-1 A^-1
            let m = (Matrix4::identity() - a_inv * c).try_inverse().ok_or(
                Error::SingularNormalMatrix {
                    condition: f64::INFINITY,
                },
            )?;
            m * a_inv
        }
    };

    let mut d_y_d_z = Matrix4xX::zeros(n);
    let mut d_y_d_w = Matrix4xX::zeros(n);
    for (k, row) in result.geometry.row_iter().enumerate() {
        let projected = j_inv * row.transpose();
        d_y_d_z.set_column(k, &(projected * weights.0[k]));
        d_y_d_w.set_column(k, &(projected * result.residuals[k]));
    }
    Ok(Sensitivities { d_y_d_z, d_y_d_w })
}

impl Sensitivities {
    pub fn backprop_to_measurements(&self, d_loss_d_y: &Vector4<f64>) -> Vec<f64> {
        (self.d_y_d_z.transpose() * d_loss_d_y)
            .iter()
            .copied()
            .collect()
    }

    pub fn backprop_to_weights(&self, d_loss_d_y: &Vector4<f64>) -> Vec<f64> {
        (self.d_y_d_w.transpose() * d_loss_d_y)
            .iter()
            .copied()
            .collect()
    }
}

/// Gradient with respect to bias corrections `b`, given that the solver
/// consumes `z - b`.
pub fn bias_gradient(d_loss_d_z: &[f64]) -> Vec<f64> {
    d_loss_d_z.iter().map(|g| -g).collect()
}

pub fn gradient_bundle(
    truth: EcefPosition,
    result: &SolveResult,
    weights: &WeightVector,
    condition_limit: f64,
) -> Result<GradientBundle> {
    let (loss, d_loss_d_y) = position_loss(truth, result)?;
    let sensitivities = wls_sensitivities(result, weights, condition_limit)?;
    let d_loss_d_z = sensitivities.backprop_to_measurements(&d_loss_d_y);
    let d_loss_d_w = sensitivities.backprop_to_weights(&d_loss_d_y);
    Ok(GradientBundle {
        sensitivities,
        loss,
        d_loss_d_y,
        d_loss_d_z,
        d_loss_d_w,
    })
}
