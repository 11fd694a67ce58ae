//! Fixed-corotated hyperelasticity.
//!
//! `Psi(F) = mu * sum_i (sigma_i - 1)^2 + lambda / 2 * (J - 1)^2` with
//! `sigma_i` the singular values of `F` and `J = det F`. The first
//! Piola-Kirchhoff stress is `P = 2 mu (F - R) + lambda (J - 1) J F^-T`
//! where `F = R S` is the polar decomposition.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this are treated as a singular deformation gradient.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Singular-value window enforced after every deformation gradient update.
pub const GUARD_MIN_SINGULAR: f64 = 0.05;
pub const GUARD_MAX_SINGULAR: f64 = 20.0;

/// Elastic constants. `mu` and `lambda` are always derived from `young` and `poisson`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaterialConfig", into = "MaterialConfig")]
pub struct MaterialParams {
    pub young: f64,
    pub poisson: f64,
    pub mu: f64,
    pub lambda: f64,
    /// Rest density, shared by particle masses and the CFL wave speed.
    pub density: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialConfig {
    #[serde(default = "default_young")]
    young: f64,
    #[serde(default = "default_poisson")]
    poisson: f64,
    #[serde(default = "unit_density")]
    density: f64,
}

fn unit_density() -> f64 {
    1.0
}

fn default_young() -> f64 {
    3.0
}

fn default_poisson() -> f64 {
    0.25
}

impl TryFrom<MaterialConfig> for MaterialParams {
    type Error = Error;

    fn try_from(c: MaterialConfig) -> Result<Self> {
        MaterialParams::with_density(c.young, c.poisson, c.density)
    }
}

impl From<MaterialParams> for MaterialConfig {
    fn from(m: MaterialParams) -> Self {
        Self {
            young: m.young,
            poisson: m.poisson,
            density: m.density,
        }
    }
}

impl MaterialParams {
    pub fn new(young: f64, poisson: f64) -> Result<Self> {
        Self::with_density(young, poisson, 1.0)
    }

    pub fn with_density(young: f64, poisson: f64, density: f64) -> Result<Self> {
        let (mu, lambda) = lame_params(young, poisson)?;
        if !(density > 0.0 && density.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "density must be positive, got {density}"
            )));
        }
        Ok(Self {
            young,
            poisson,
            mu,
            lambda,
            density,
        })
    }

    /// Dilatational wave speed `sqrt((lambda + 2 mu) / rho)`.
    pub fn wave_speed(&self) -> f64 {
        ((self.lambda + 2.0 * self.mu) / self.density).sqrt()
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::new(default_young(), default_poisson()).expect("default material is valid")
    }
}

/// Lamé parameters `(mu, lambda)` from Young's modulus and Poisson ratio.
pub fn lame_params(young: f64, poisson: f64) -> Result<(f64, f64)> {
    if !(young > 0.0 && young.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Young's modulus must be positive, got {young}"
        )));
    }
    if !(poisson > 0.0 && poisson < 0.5) {
        return Err(Error::PoissonOutOfRange(poisson));
    }
    let mu = young / (2.0 * (1.0 + poisson));
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    Ok((mu, lambda))
}

/// Signed singular value decomposition `F = U diag(sigma) V^T` with
/// `det U = det V = +1`. When `det F < 0` the smallest singular value is negative.
#[derive(Debug, Clone, Copy)]
pub struct SignedSvd {
    pub u: Matrix3<f64>,
    pub sigma: Vector3<f64>,
    pub v: Matrix3<f64>,
}

pub fn signed_svd(f: &Matrix3<f64>) -> SignedSvd {
    let svd = f.svd(true, true);
    let mut u = svd.u.expect("requested U");
    let mut v = svd.v_t.expect("requested V^T").transpose();
    let mut sigma = svd.singular_values;
    let k = sigma.imin();
    if u.determinant() < 0.0 {
        u.column_mut(k).neg_mut();
        sigma[k] = -sigma[k];
    }
    if v.determinant() < 0.0 {
        v.column_mut(k).neg_mut();
        sigma[k] = -sigma[k];
    }
    SignedSvd { u, sigma, v }
}

/// Polar decomposition `F = R S`, `R` a proper rotation, `S` symmetric.
pub fn polar_decompose(f: &Matrix3<f64>) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let svd = signed_svd(f);
    let smallest = svd.sigma.abs().min();
    if !(smallest >= SINGULAR_EPS) {
        return Err(Error::Singular(smallest));
    }
    let r = svd.u * svd.v.transpose();
    let s = svd.v * Matrix3::from_diagonal(&svd.sigma) * svd.v.transpose();
    Ok((r, s))
}

pub fn strain_energy(f: &Matrix3<f64>, mat: &MaterialParams) -> f64 {
    let sigma = signed_svd(f).sigma;
    let j = f.determinant();
    mat.mu * sigma.map(|s| (s - 1.0).powi(2)).sum() + 0.5 * mat.lambda * (j - 1.0).powi(2)
}

/// Cofactor matrix `J F^-T`, valid for singular `F` too.
pub fn cofactor(f: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = f.column(1).cross(&f.column(2));
    let c1 = f.column(2).cross(&f.column(0));
    let c2 = f.column(0).cross(&f.column(1));
    Matrix3::from_columns(&[c0, c1, c2])
}

pub fn pk1_stress(f: &Matrix3<f64>, mat: &MaterialParams) -> Result<Matrix3<f64>> {
    let (r, _) = polar_decompose(f)?;
    let j = f.determinant();
    Ok(2.0 * mat.mu * (f - r) + mat.lambda * (j - 1.0) * cofactor(f))
}

/// Clamps the singular values of `F` into
/// `[GUARD_MIN_SINGULAR, GUARD_MAX_SINGULAR]`. Inverted gradients come back
/// with a positive determinant.
pub fn inversion_guard(f: &Matrix3<f64>) -> Matrix3<f64> {
    // sigma_max <= |F|_F and sigma_min >= 2 det / |F|_F^2, so most
    // gradients can skip the decomposition.
    let fro2 = f.norm_squared();
    let det = f.determinant();
    if det > 0.0
        && fro2 <= GUARD_MAX_SINGULAR * GUARD_MAX_SINGULAR
        && 2.0 * det >= GUARD_MIN_SINGULAR * fro2
    {
        return *f;
    }
    let svd = signed_svd(f);
    let clamped = svd
        .sigma
        .map(|s| s.clamp(GUARD_MIN_SINGULAR, GUARD_MAX_SINGULAR));
    svd.u * Matrix3::from_diagonal(&clamped) * svd.v.transpose()
}
