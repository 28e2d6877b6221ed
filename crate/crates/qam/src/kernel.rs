//! Stationary covariance kernels: the `Kernel` trait and a small library of
//! base models used as composition children and family margins.
//!
//! A kernel here is a stationary covariance function evaluated at a lag
//! vector; isotropic models depend on the lag only through its Euclidean
//! norm. The catalog is intentionally small — anything more exotic can be
//! passed in as a user closure via [`FnKernel`] or built by composition.

use crate::error::{QamError, Result};
use std::sync::Arc;

/// A stationary covariance function on lag vectors of a fixed dimension.
pub trait Kernel: Send + Sync {
    /// Covariance at the given lag; `lag.len()` must equal [`Kernel::dim`].
    fn eval(&self, lag: &[f64]) -> Result<f64>;

    /// Dimension of the lag argument.
    fn dim(&self) -> usize;
}

/// Euclidean norm of a lag vector.
pub(crate) fn norm(lag: &[f64]) -> f64 {
    lag.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_dim(expected: usize, lag: &[f64]) -> Result<()> {
    if lag.len() != expected {
        return Err(QamError::Dimension(format!(
            "kernel expects lag of dimension {expected}, got {}",
            lag.len()
        )));
    }
    Ok(())
}

/// Constant kernel C(h) = c ≥ 0 (the covariance of a random amplitude shared
/// by all locations).
#[derive(Debug, Clone)]
pub struct Constant {
    value: f64,
    dim: usize,
}

impl Constant {
    pub fn new(value: f64, dim: usize) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(QamError::Parameter(format!(
                "constant kernel requires a finite value ≥ 0, got {value}"
            )));
        }
        Ok(Constant { value, dim })
    }
}

impl Kernel for Constant {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        check_dim(self.dim, lag)?;
        Ok(self.value)
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

/// Exponential kernel C(h) = exp(-‖h‖ / a), a > 0.
#[derive(Debug, Clone)]
pub struct Exponential {
    scale: f64,
    dim: usize,
}

impl Exponential {
    pub fn new(scale: f64, dim: usize) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(QamError::Parameter(format!(
                "exponential kernel requires scale > 0, got {scale}"
            )));
        }
        Ok(Exponential { scale, dim })
    }
}

impl Kernel for Exponential {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        check_dim(self.dim, lag)?;
        Ok((-norm(lag) / self.scale).exp())
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

/// Stretched-exponential kernel C(h) = exp(-‖h‖^δ), δ ∈ (0, 2].
#[derive(Debug, Clone)]
pub struct StretchedExponential {
    delta: f64,
    dim: usize,
}

impl StretchedExponential {
    pub fn new(delta: f64, dim: usize) -> Result<Self> {
        if !(delta > 0.0 && delta <= 2.0) {
            return Err(QamError::Parameter(format!(
                "stretched-exponential kernel requires δ ∈ (0, 2], got {delta}"
            )));
        }
        Ok(StretchedExponential { delta, dim })
    }
}

impl Kernel for StretchedExponential {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        check_dim(self.dim, lag)?;
        Ok((-norm(lag).powf(self.delta)).exp())
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

/// Generalized Cauchy kernel C(h) = (1 + ‖h‖^δ)^{-ε}, δ ∈ (0, 2], ε > 0.
#[derive(Debug, Clone)]
pub struct GeneralizedCauchy {
    delta: f64,
    epsilon: f64,
    dim: usize,
}

impl GeneralizedCauchy {
    pub fn new(delta: f64, epsilon: f64, dim: usize) -> Result<Self> {
        if !(delta > 0.0 && delta <= 2.0) {
            return Err(QamError::Parameter(format!(
                "generalized Cauchy kernel requires δ ∈ (0, 2], got {delta}"
            )));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(QamError::Parameter(format!(
                "generalized Cauchy kernel requires ε > 0, got {epsilon}"
            )));
        }
        Ok(GeneralizedCauchy {
            delta,
            epsilon,
            dim,
        })
    }
}

impl Kernel for GeneralizedCauchy {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        check_dim(self.dim, lag)?;
        let t = norm(lag);
        Ok((-self.epsilon * t.powf(self.delta).ln_1p()).exp())
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

/// Margin kernel C(h) = 1 - (1 - e^{-‖h‖})^ρ, ρ ∈ (0, 1].
///
/// This is the shape a power-series family margin takes; it is positive
/// definite for ρ ≤ 1 and degenerates to the exponential kernel at ρ = 1.
#[derive(Debug, Clone)]
pub struct PowerSeriesMargin {
    rho: f64,
    dim: usize,
}

impl PowerSeriesMargin {
    pub fn new(rho: f64, dim: usize) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(QamError::Parameter(format!(
                "power-series margin kernel requires ρ ∈ (0, 1], got {rho}"
            )));
        }
        Ok(PowerSeriesMargin { rho, dim })
    }
}

impl Kernel for PowerSeriesMargin {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        check_dim(self.dim, lag)?;
        let t = norm(lag);
        // 1 - (1 - e^{-t})^ρ in ln_1p/exp_m1 form.
        Ok(-((-(-t).exp()).ln_1p() * self.rho).exp_m1())
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

/// Spherical kernel C(h) = (1 - 1.5 u + 0.5 u³)₊ with u = ‖h‖/a; compactly
/// supported, and positive definite only up to dimension 3.
#[derive(Debug, Clone)]
pub struct Spherical {
    range: f64,
    dim: usize,
}

impl Spherical {
    pub fn new(range: f64, dim: usize) -> Result<Self> {
        if !(range > 0.0) || !range.is_finite() {
            return Err(QamError::Parameter(format!(
                "spherical kernel requires range > 0, got {range}"
            )));
        }
        if dim > 3 {
            return Err(QamError::Parameter(format!(
                "spherical kernel is positive definite only for dimension ≤ 3, got {dim}"
            )));
        }
        Ok(Spherical { range, dim })
    }
}

impl Kernel for Spherical {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        check_dim(self.dim, lag)?;
        let u = norm(lag) / self.range;
        if u >= 1.0 {
            Ok(0.0)
        } else {
            Ok(1.0 - 1.5 * u + 0.5 * u * u * u)
        }
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

/// A kernel multiplied by a nonnegative variance factor.
#[derive(Clone)]
pub struct Scaled {
    factor: f64,
    inner: Arc<dyn Kernel>,
}

impl Scaled {
    pub fn new(factor: f64, inner: Arc<dyn Kernel>) -> Result<Self> {
        if !factor.is_finite() || factor < 0.0 {
            return Err(QamError::Parameter(format!(
                "scale factor must be finite and nonnegative, got {factor}"
            )));
        }
        Ok(Scaled { factor, inner })
    }
}

impl Kernel for Scaled {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        Ok(self.factor * self.inner.eval(lag)?)
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
}

impl std::fmt::Debug for Scaled {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scaled")
            .field("factor", &self.factor)
            .field("dim", &self.dim())
            .finish()
    }
}

/// Shared, thread-safe closure from a lag vector to a covariance value.
type SharedLagFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A kernel defined by an arbitrary user closure on lag vectors.
///
/// No structural properties are assumed: the closure is trusted to be
/// symmetric in ±lag, and permissibility must be established separately
/// through the checking machinery.
#[derive(Clone)]
pub struct FnKernel {
    f: SharedLagFn,
    dim: usize,
}

impl FnKernel {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        FnKernel { f: Arc::new(f), dim }
    }

    /// Convenience wrapper for isotropic closures of the lag norm.
    pub fn isotropic<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FnKernel {
            f: Arc::new(move |lag: &[f64]| f(norm(lag))),
            dim,
        }
    }
}

impl Kernel for FnKernel {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        check_dim(self.dim, lag)?;
        let v = (self.f)(lag);
        if v.is_nan() {
            return Err(QamError::NonFinite {
                at: norm(lag),
                value: v,
            });
        }
        Ok(v)
    }
    fn dim(&self) -> usize {
        self.dim
    }
}

impl std::fmt::Debug for FnKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnKernel").field("dim", &self.dim).finish()
    }
}

impl<K: Kernel + ?Sized> Kernel for Arc<K> {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        (**self).eval(lag)
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_kernels_are_one_at_zero_lag() {
        let zero2 = [0.0, 0.0];
        let kernels: Vec<Box<dyn Kernel>> = vec![
            Box::new(Exponential::new(1.0, 2).unwrap()),
            Box::new(StretchedExponential::new(0.5, 2).unwrap()),
            Box::new(GeneralizedCauchy::new(1.0, 2.0, 2).unwrap()),
            Box::new(PowerSeriesMargin::new(0.5, 2).unwrap()),
            Box::new(Spherical::new(2.0, 2).unwrap()),
        ];
        for k in &kernels {
            assert_eq!(k.eval(&zero2).unwrap(), 1.0);
        }
    }

    #[test]
    fn spot_values() {
        let e = Exponential::new(2.0, 1).unwrap();
        assert!((e.eval(&[2.0]).unwrap() - (-1.0_f64).exp()).abs() < 1e-16);

        let c = GeneralizedCauchy::new(1.0, 2.0, 1).unwrap();
        assert!((c.eval(&[1.0]).unwrap() - 0.25).abs() < 1e-15);

        let m = PowerSeriesMargin::new(0.5, 1).unwrap();
        let want = 1.0 - (1.0 - (-1.0_f64).exp()).sqrt();
        assert!((m.eval(&[1.0]).unwrap() - want).abs() < 1e-15);

        let s = Spherical::new(1.0, 1).unwrap();
        assert_eq!(s.eval(&[1.0]).unwrap(), 0.0);
        assert_eq!(s.eval(&[2.5]).unwrap(), 0.0);
        assert!((s.eval(&[0.5]).unwrap() - (1.0 - 0.75 + 0.0625)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let e = Exponential::new(1.0, 3).unwrap();
        assert!(matches!(
            e.eval(&[1.0, 2.0]),
            Err(QamError::Dimension(_))
        ));
    }

    #[test]
    fn constructor_bounds() {
        assert!(Exponential::new(0.0, 1).is_err());
        assert!(StretchedExponential::new(2.5, 1).is_err());
        assert!(GeneralizedCauchy::new(1.0, 0.0, 1).is_err());
        assert!(PowerSeriesMargin::new(1.2, 1).is_err());
        assert!(Spherical::new(1.0, 4).is_err());
        assert!(Constant::new(-1.0, 1).is_err());
    }

    #[test]
    fn fn_kernel_wraps_closures() {
        let k = FnKernel::isotropic(2, |t| (-t).exp());
        assert!((k.eval(&[3.0, 4.0]).unwrap() - (-5.0_f64).exp()).abs() < 1e-15);
        let bad = FnKernel::isotropic(1, |_| f64::NAN);
        assert!(bad.eval(&[1.0]).is_err());
    }
}
