//! Parametric space-time covariance families.
//!
//! Each family couples a spatial lag h ∈ ℝᵈ and a temporal lag u ∈ ℝ into
//! one covariance C(h, u). Four of them arise from quasi-arithmetic
//! composition of spatial and temporal margins under a named generator; the
//! fifth (`frank`) is a nonpositive covariance-like quantity with variogram
//! inputs, kept for its structural interest. A separable product and a
//! wrapper around an explicit composition round out the set.
//!
//! The coupled families constrain the generator parameter λ₁ against the
//! margin parameters λ₂ (space) and λ₃ (time): strict ordering
//! λ₁ < min(λ₂, λ₃) is the safe interior of the parameter set and is what
//! the plain constructors enforce. Boundary constructors accept equality,
//! where the construction degenerates gracefully (for instance equal
//! parameters in the `gumbel` family with λ = 1 give an exactly separable
//! model).

use crate::compose::CompositionSpec;
use crate::error::{QamError, Result};
use crate::generator::{make_generator, Generator, GeneratorKind};
use crate::kernel::{
    norm, Constant, GeneralizedCauchy, Kernel, PowerSeriesMargin, Scaled, StretchedExponential,
};
use std::sync::Arc;

/// A one-dimensional variogram shape used by the `frank` family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VariogramSpec {
    /// γ(t) = t.
    Linear,
    /// γ(t) = t^β with β ∈ (0, 2].
    Power { beta: f64 },
    /// γ(t) = nugget + t^β for t > 0, γ(0) = 0.
    NuggetPower { nugget: f64, beta: f64 },
}

impl VariogramSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VariogramSpec::Linear => Ok(()),
            VariogramSpec::Power { beta } | VariogramSpec::NuggetPower { beta, .. }
                if !(beta > 0.0 && beta <= 2.0) =>
            {
                Err(QamError::Parameter(format!(
                    "variogram exponent must lie in (0, 2], got {beta}"
                )))
            }
            VariogramSpec::NuggetPower { nugget, .. } if !(nugget >= 0.0 && nugget.is_finite()) => {
                Err(QamError::Parameter(format!(
                    "variogram nugget must be finite and nonnegative, got {nugget}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Evaluate at a nonnegative distance.
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            VariogramSpec::Linear => t,
            VariogramSpec::Power { beta } => t.powf(beta),
            VariogramSpec::NuggetPower { nugget, beta } => {
                if t > 0.0 {
                    nugget + t.powf(beta)
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone)]
enum Family {
    Clayton { sigma2: f64, l1: f64, l2: f64, l3: f64 },
    Gumbel { sigma2: f64, l1: f64, l2: f64, l3: f64 },
    PowerSeries { l1: f64, l2: f64, l3: f64 },
    Frank { lambda: f64, gamma_s: VariogramSpec, gamma_t: VariogramSpec },
    CauchyMargins { alpha: f64, delta: f64, epsilon: f64, rho: f64 },
    Separable { spatial: Arc<dyn Kernel>, temporal: Arc<dyn Kernel> },
    Composition(CompositionSpec),
}

/// A space-time covariance C(h, u) over ℝᵈ × ℝ.
#[derive(Clone)]
pub struct SpaceTimeCov {
    family: Family,
    d: usize,
}

impl std::fmt::Debug for SpaceTimeCov {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpaceTimeCov")
            .field("family", &self.family_name())
            .field("spatial_dim", &self.d)
            .finish()
    }
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(QamError::Parameter(format!(
            "{name} must be finite and positive, got {value}"
        )));
    }
    Ok(())
}

fn require_ordering(l1: f64, l2: f64, l3: f64, strict: bool) -> Result<()> {
    let ok = if strict {
        l1 < l2 && l1 < l3
    } else {
        l1 <= l2 && l1 <= l3
    };
    if !ok {
        let rel = if strict { "<" } else { "≤" };
        return Err(QamError::Parameter(format!(
            "coupled families require λ₁ {rel} min(λ₂, λ₃), got λ₁ = {l1}, λ₂ = {l2}, λ₃ = {l3}"
        )));
    }
    Ok(())
}

impl SpaceTimeCov {
    /// Inverse-power coupling
    /// C(h, u) = σ² [(1+‖h‖)^{λ₁/λ₂} + (1+|u|)^{λ₁/λ₃} - 1]^{-1/λ₁},
    /// with λ₁ < min(λ₂, λ₃).
    pub fn clayton(sigma2: f64, l1: f64, l2: f64, l3: f64, d: usize) -> Result<Self> {
        Self::clayton_impl(sigma2, l1, l2, l3, d, true)
    }

    /// Same family with the boundary λ₁ = λ₂ and/or λ₁ = λ₃ admitted.
    pub fn clayton_boundary(sigma2: f64, l1: f64, l2: f64, l3: f64, d: usize) -> Result<Self> {
        Self::clayton_impl(sigma2, l1, l2, l3, d, false)
    }

    fn clayton_impl(sigma2: f64, l1: f64, l2: f64, l3: f64, d: usize, strict: bool) -> Result<Self> {
        require_dim(d)?;
        require_positive("σ²", sigma2)?;
        require_positive("λ₁", l1)?;
        require_positive("λ₂", l2)?;
        require_positive("λ₃", l3)?;
        require_ordering(l1, l2, l3, strict)?;
        Ok(SpaceTimeCov {
            family: Family::Clayton { sigma2, l1, l2, l3 },
            d,
        })
    }

    /// Stretched-exponential coupling
    /// C(h, u) = σ² exp(-(‖h‖^{λ₁/λ₂} + |u|^{λ₁/λ₃})^{1/λ₁}),
    /// with 1 ≤ λ₁ < min(λ₂, λ₃).
    pub fn gumbel(sigma2: f64, l1: f64, l2: f64, l3: f64, d: usize) -> Result<Self> {
        Self::gumbel_impl(sigma2, l1, l2, l3, d, true)
    }

    /// Same family with equal parameters admitted; λ₁ = λ₂ = λ₃ = 1 gives an
    /// exactly separable exponential model.
    pub fn gumbel_boundary(sigma2: f64, l1: f64, l2: f64, l3: f64, d: usize) -> Result<Self> {
        Self::gumbel_impl(sigma2, l1, l2, l3, d, false)
    }

    fn gumbel_impl(sigma2: f64, l1: f64, l2: f64, l3: f64, d: usize, strict: bool) -> Result<Self> {
        require_dim(d)?;
        require_positive("σ²", sigma2)?;
        for (name, v) in [("λ₁", l1), ("λ₂", l2), ("λ₃", l3)] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(QamError::Parameter(format!(
                    "gumbel family requires {name} ≥ 1, got {v}"
                )));
            }
        }
        require_ordering(l1, l2, l3, strict)?;
        Ok(SpaceTimeCov {
            family: Family::Gumbel { sigma2, l1, l2, l3 },
            d,
        })
    }

    /// Product of power-series margins
    /// C(h, u) = [1-(1-e^{-‖h‖})^{λ₁/λ₂}] · [1-(1-e^{-|u|})^{λ₁/λ₃}],
    /// with 1 ≤ λ₁ < min(λ₂, λ₃). Separable by construction.
    pub fn power_series(l1: f64, l2: f64, l3: f64, d: usize) -> Result<Self> {
        Self::power_series_impl(l1, l2, l3, d, true)
    }

    /// Same family with equal parameters admitted.
    pub fn power_series_boundary(l1: f64, l2: f64, l3: f64, d: usize) -> Result<Self> {
        Self::power_series_impl(l1, l2, l3, d, false)
    }

    fn power_series_impl(l1: f64, l2: f64, l3: f64, d: usize, strict: bool) -> Result<Self> {
        require_dim(d)?;
        for (name, v) in [("λ₁", l1), ("λ₂", l2), ("λ₃", l3)] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(QamError::Parameter(format!(
                    "power-series family requires {name} ≥ 1, got {v}"
                )));
            }
        }
        require_ordering(l1, l2, l3, strict)?;
        Ok(SpaceTimeCov {
            family: Family::PowerSeries { l1, l2, l3 },
            d,
        })
    }

    /// Nonpositive coupling of two variograms:
    /// C(h, u) = -(1/λ) ln[1 + (1-e^{-λγ_s(‖h‖)})(1-e^{-λγ_t(|u|)})/(1-e^{-λ})].
    ///
    /// C(0, 0) = 0 and C ≤ 0 everywhere, so this is not a correlation-style
    /// covariance; it is excluded from positive-definiteness gating and the
    /// separability defect is undefined for it.
    pub fn frank(
        lambda: f64,
        gamma_s: VariogramSpec,
        gamma_t: VariogramSpec,
        d: usize,
    ) -> Result<Self> {
        require_dim(d)?;
        require_positive("λ", lambda)?;
        gamma_s.validate()?;
        gamma_t.validate()?;
        Ok(SpaceTimeCov {
            family: Family::Frank {
                lambda,
                gamma_s,
                gamma_t,
            },
            d,
        })
    }

    /// Inverse-power coupling with generalized Cauchy margins:
    /// C(h, u) = [(1+‖h‖^δ)^{ε/α} + |u|^{ρ/α}]^{-α},
    /// with δ ∈ (0, 2], α < min(ε, ρ) and ρ ≤ 2α (so the temporal roughness
    /// exponent ρ/α stays within (0, 2]).
    pub fn cauchy_margins(alpha: f64, delta: f64, epsilon: f64, rho: f64, d: usize) -> Result<Self> {
        require_dim(d)?;
        require_positive("α", alpha)?;
        require_positive("ε", epsilon)?;
        require_positive("ρ", rho)?;
        if !(delta > 0.0 && delta <= 2.0) {
            return Err(QamError::Parameter(format!(
                "cauchy-margins family requires δ ∈ (0, 2], got {delta}"
            )));
        }
        if !(alpha < epsilon && alpha < rho) {
            return Err(QamError::Parameter(format!(
                "cauchy-margins family requires α < min(ε, ρ), got α = {alpha}, ε = {epsilon}, ρ = {rho}"
            )));
        }
        if !(rho <= 2.0 * alpha) {
            return Err(QamError::Parameter(format!(
                "cauchy-margins family requires ρ ≤ 2α so the temporal exponent ρ/α stays in (0, 2], got ρ/α = {}",
                rho / alpha
            )));
        }
        Ok(SpaceTimeCov {
            family: Family::CauchyMargins {
                alpha,
                delta,
                epsilon,
                rho,
            },
            d,
        })
    }

    /// Separable product C(h, u) = C_s(h) · C_t(u).
    pub fn separable(spatial: Arc<dyn Kernel>, temporal: Arc<dyn Kernel>) -> Result<Self> {
        if temporal.dim() != 1 {
            return Err(QamError::Dimension(format!(
                "temporal kernel must be one-dimensional, got {}",
                temporal.dim()
            )));
        }
        let d = spatial.dim();
        require_dim(d)?;
        Ok(SpaceTimeCov {
            family: Family::Separable { spatial, temporal },
            d,
        })
    }

    /// Wrap an explicit two-child composition whose blocks are (space, time):
    /// the partition must be exactly [d, 1].
    pub fn from_composition(spec: CompositionSpec) -> Result<Self> {
        let partition = spec.partition();
        if partition.len() != 2 || partition[1] != 1 {
            return Err(QamError::Dimension(format!(
                "space-time wrapper needs a two-block composition partitioned [d, 1], got {partition:?}"
            )));
        }
        let d = partition[0];
        Ok(SpaceTimeCov {
            family: Family::Composition(spec),
            d,
        })
    }

    /// Spatial dimension d (the covariance itself lives on ℝᵈ × ℝ).
    pub fn spatial_dim(&self) -> usize {
        self.d
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            Family::Clayton { .. } => "clayton",
            Family::Gumbel { .. } => "gumbel",
            Family::PowerSeries { .. } => "power_series",
            Family::Frank { .. } => "frank",
            Family::CauchyMargins { .. } => "cauchy_margins",
            Family::Separable { .. } => "separable",
            Family::Composition(_) => "composition",
        }
    }

    /// Evaluate at spatial lag h (length d) and temporal lag u.
    pub fn eval(&self, h: &[f64], u: f64) -> Result<f64> {
        if h.len() != self.d {
            return Err(QamError::Dimension(format!(
                "spatial lag has dimension {}, expected {}",
                h.len(),
                self.d
            )));
        }
        if !u.is_finite() {
            return Err(QamError::NonFinite { at: u, value: u });
        }
        let a = norm(h);
        let b = u.abs();
        match &self.family {
            Family::Clayton { sigma2, l1, l2, l3 } => {
                let base = (1.0 + a).powf(l1 / l2) + (1.0 + b).powf(l1 / l3) - 1.0;
                Ok(sigma2 * base.powf(-1.0 / l1))
            }
            Family::Gumbel { sigma2, l1, l2, l3 } => {
                let s = a.powf(l1 / l2) + b.powf(l1 / l3);
                Ok(sigma2 * (-s.powf(1.0 / l1)).exp())
            }
            Family::PowerSeries { l1, l2, l3 } => {
                Ok(power_series_margin(a, l1 / l2) * power_series_margin(b, l1 / l3))
            }
            Family::Frank {
                lambda,
                gamma_s,
                gamma_t,
            } => {
                let w = -(-lambda).exp_m1(); // 1 - e^{-λ}
                let fs = -(-lambda * gamma_s.eval(a)).exp_m1();
                let ft = -(-lambda * gamma_t.eval(b)).exp_m1();
                Ok(-(fs * ft / w).ln_1p() / lambda)
            }
            Family::CauchyMargins {
                alpha,
                delta,
                epsilon,
                rho,
            } => {
                let base = (1.0 + a.powf(*delta)).powf(epsilon / alpha) + b.powf(rho / alpha);
                Ok(base.powf(-alpha))
            }
            Family::Separable { spatial, temporal } => {
                Ok(spatial.eval(h)? * temporal.eval(&[u])?)
            }
            Family::Composition(spec) => {
                let mut lag = h.to_vec();
                lag.push(u);
                spec.combine(&spec.child_values(&lag)?)
            }
        }
    }

    /// The purely spatial margin h ↦ C(h, 0) as a structured kernel on ℝᵈ.
    pub fn spatial_margin(&self) -> Result<Arc<dyn Kernel>> {
        match &self.family {
            Family::Clayton { sigma2, l2, .. } => Ok(Arc::new(Scaled::new(
                *sigma2,
                Arc::new(GeneralizedCauchy::new(1.0, 1.0 / l2, self.d)?),
            )?)),
            Family::Gumbel { sigma2, l2, .. } => Ok(Arc::new(Scaled::new(
                *sigma2,
                Arc::new(StretchedExponential::new(1.0 / l2, self.d)?),
            )?)),
            Family::PowerSeries { l1, l2, .. } => {
                Ok(Arc::new(PowerSeriesMargin::new(l1 / l2, self.d)?))
            }
            // The frank coupling vanishes identically on the axes.
            Family::Frank { .. } => Ok(Arc::new(Constant::new(0.0, self.d)?)),
            Family::CauchyMargins { delta, epsilon, .. } => {
                Ok(Arc::new(GeneralizedCauchy::new(*delta, *epsilon, self.d)?))
            }
            Family::Separable { spatial, .. } => Ok(spatial.clone()),
            Family::Composition(_) => {
                let me = self.clone();
                Ok(Arc::new(crate::kernel::FnKernel::new(self.d, move |h| {
                    me.eval(h, 0.0).unwrap_or(f64::NAN)
                })))
            }
        }
    }

    /// The purely temporal margin u ↦ C(0, u) as a structured kernel on ℝ.
    pub fn temporal_margin(&self) -> Result<Arc<dyn Kernel>> {
        match &self.family {
            Family::Clayton { sigma2, l3, .. } => Ok(Arc::new(Scaled::new(
                *sigma2,
                Arc::new(GeneralizedCauchy::new(1.0, 1.0 / l3, 1)?),
            )?)),
            Family::Gumbel { sigma2, l3, .. } => Ok(Arc::new(Scaled::new(
                *sigma2,
                Arc::new(StretchedExponential::new(1.0 / l3, 1)?),
            )?)),
            Family::PowerSeries { l1, l3, .. } => Ok(Arc::new(PowerSeriesMargin::new(l1 / l3, 1)?)),
            Family::Frank { .. } => Ok(Arc::new(Constant::new(0.0, 1)?)),
            Family::CauchyMargins { alpha, rho, .. } => {
                Ok(Arc::new(GeneralizedCauchy::new(rho / alpha, *alpha, 1)?))
            }
            Family::Separable { temporal, .. } => Ok(temporal.clone()),
            Family::Composition(_) => {
                let me = self.clone();
                let zero = vec![0.0; self.d];
                Ok(Arc::new(crate::kernel::FnKernel::new(1, move |u| {
                    me.eval(&zero, u[0]).unwrap_or(f64::NAN)
                })))
            }
        }
    }

    /// |C(h, u) - C(h, 0) C(0, u) / C(0, 0)|: zero exactly for separable
    /// models. Requires C(0, 0) > 0.
    pub fn separability_defect(&self, h: &[f64], u: f64) -> Result<f64> {
        let zero = vec![0.0; self.d];
        let c00 = self.eval(&zero, 0.0)?;
        if !(c00 > 0.0) {
            return Err(QamError::Degenerate(format!(
                "separability defect needs C(0,0) > 0, got {c00} for the {} family",
                self.family_name()
            )));
        }
        let c = self.eval(h, u)?;
        let cs = self.eval(h, 0.0)?;
        let ct = self.eval(&zero, u)?;
        Ok((c - cs * ct / c00).abs())
    }

    /// The exact quasi-arithmetic representation of the coupled families:
    /// generator + margins with unit weights. Only the `clayton` and
    /// `gumbel` families (unit variance) and explicit compositions have one.
    pub fn to_composition(&self) -> Result<CompositionSpec> {
        match &self.family {
            Family::Clayton { l1, l2, l3, .. } => CompositionSpec::archimedean(
                make_generator(GeneratorKind::Clayton, &[*l1])?,
                vec![
                    Arc::new(GeneralizedCauchy::new(1.0, 1.0 / l2, self.d)?),
                    Arc::new(GeneralizedCauchy::new(1.0, 1.0 / l3, 1)?),
                ],
                vec![self.d, 1],
            ),
            Family::Gumbel { l1, l2, l3, .. } => CompositionSpec::archimedean(
                make_generator(GeneratorKind::Gumbel, &[*l1])?,
                vec![
                    Arc::new(StretchedExponential::new(1.0 / l2, self.d)?),
                    Arc::new(StretchedExponential::new(1.0 / l3, 1)?),
                ],
                vec![self.d, 1],
            ),
            Family::Composition(spec) => Ok(spec.clone()),
            _ => Err(QamError::Precondition(format!(
                "the {} family has no exact quasi-arithmetic representation",
                self.family_name()
            ))),
        }
    }
}

impl Kernel for SpaceTimeCov {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        if lag.len() != self.d + 1 {
            return Err(QamError::Dimension(format!(
                "space-time lag has dimension {}, expected {}",
                lag.len(),
                self.d + 1
            )));
        }
        let (h, u) = lag.split_at(self.d);
        SpaceTimeCov::eval(self, h, u[0])
    }
    fn dim(&self) -> usize {
        self.d + 1
    }
}

/// 1 - (1 - e^{-t})^ρ, stable near t = 0.
fn power_series_margin(t: f64, rho: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    -(rho * (-(-t).exp_m1()).ln()).exp_m1()
}

fn require_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(QamError::Dimension(
            "spatial dimension must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Geometric anisotropy through a completely monotone generator:
/// C(h) = φ(Σᵢ θᵢ |hᵢ|) with all θᵢ > 0.
#[derive(Clone, Debug)]
pub struct AffineAnisotropy {
    gen: Generator,
    weights: Vec<f64>,
}

impl AffineAnisotropy {
    pub fn new(gen: Generator, weights: Vec<f64>) -> Result<Self> {
        if !gen.cm_flag() {
            return Err(QamError::Precondition(format!(
                "affine anisotropy requires a completely monotone generator; {} is not",
                gen.kind()
            )));
        }
        if !gen.phi(0.0).is_finite() {
            return Err(QamError::Precondition(format!(
                "affine anisotropy requires φ(0) finite; the {} generator is unbounded at zero lag",
                gen.kind()
            )));
        }
        if weights.is_empty() {
            return Err(QamError::Dimension("anisotropy weights are empty".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(QamError::Weights(format!(
                    "anisotropy weight {i} must be finite and positive, got {w}"
                )));
            }
        }
        Ok(AffineAnisotropy { gen, weights })
    }
}

impl Kernel for AffineAnisotropy {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        if lag.len() != self.weights.len() {
            return Err(QamError::Dimension(format!(
                "lag has dimension {}, expected {}",
                lag.len(),
                self.weights.len()
            )));
        }
        let s: f64 = lag
            .iter()
            .zip(&self.weights)
            .map(|(h, w)| w * h.abs())
            .sum();
        let v = self.gen.phi(s);
        if !v.is_finite() {
            return Err(QamError::NonFinite { at: s, value: v });
        }
        Ok(v)
    }
    fn dim(&self) -> usize {
        self.weights.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::Weights;
    use crate::kernel::Exponential;
    use approx::assert_relative_eq;

    #[test]
    fn clayton_family_reference_values() {
        let c = SpaceTimeCov::clayton(1.0, 0.5, 1.0, 2.0, 2).unwrap();
        assert_relative_eq!(
            c.eval(&[0.6, 0.8], 1.0).unwrap(),
            0.38896008845544276,
            max_relative = 1e-15
        );
        assert_relative_eq!(c.eval(&[1.0, 0.0], 0.0).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            c.eval(&[0.0, 0.0], 1.0).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-15
        );
        assert_eq!(c.eval(&[0.0, 0.0], 0.0).unwrap(), 1.0);
    }

    #[test]
    fn clayton_defect_is_material() {
        let c = SpaceTimeCov::clayton(1.0, 0.5, 1.0, 2.0, 1).unwrap();
        assert_relative_eq!(
            c.separability_defect(&[1.0], 1.0).unwrap(),
            0.035406697862168998,
            max_relative = 1e-13
        );
    }

    #[test]
    fn gumbel_family_reference_values() {
        let c = SpaceTimeCov::gumbel(1.0, 1.0, 2.0, 3.0, 3).unwrap();
        assert_relative_eq!(
            c.eval(&[1.0, 0.0, 0.0], 1.0).unwrap(),
            (-2.0_f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            c.eval(&[1.0, 0.0, 0.0], 0.0).unwrap(),
            (-1.0_f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn gumbel_boundary_with_unit_parameters_is_separable() {
        assert!(SpaceTimeCov::gumbel(1.0, 1.0, 1.0, 1.0, 2).is_err());
        let c = SpaceTimeCov::gumbel_boundary(2.5, 1.0, 1.0, 1.0, 2).unwrap();
        let defect = c.separability_defect(&[0.7, 0.2], 1.3).unwrap();
        assert!(defect <= 1e-12, "defect {defect}");
    }

    #[test]
    fn power_series_family_reference_value_and_separability() {
        let c = SpaceTimeCov::power_series(1.0, 2.0, 2.0, 1).unwrap();
        let l2 = 2.0_f64.ln();
        assert_relative_eq!(
            c.eval(&[l2], l2).unwrap(),
            0.085786437626904951,
            max_relative = 1e-14
        );
        // Product of margins: defect vanishes.
        assert!(c.separability_defect(&[0.4], 2.1).unwrap() <= 1e-16);
        assert_eq!(c.eval(&[0.0], 0.0).unwrap(), 1.0);
    }

    #[test]
    fn frank_family_reference_value_and_degeneracy() {
        let c = SpaceTimeCov::frank(1.0, VariogramSpec::Linear, VariogramSpec::Linear, 1).unwrap();
        assert_eq!(c.eval(&[0.0], 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            c.eval(&[1.0], 1.0).unwrap(),
            -0.48988012564474998,
            max_relative = 1e-14
        );
        // Margins vanish identically.
        assert_eq!(c.eval(&[5.0], 0.0).unwrap(), 0.0);
        assert!(matches!(
            c.separability_defect(&[1.0], 1.0),
            Err(QamError::Degenerate(_))
        ));
    }

    #[test]
    fn cauchy_margins_reference_values() {
        let c = SpaceTimeCov::cauchy_margins(0.5, 1.0, 1.0, 1.0, 2).unwrap();
        assert_relative_eq!(
            c.eval(&[1.0, 0.0], 1.0).unwrap(),
            0.44721359549995794,
            max_relative = 1e-15
        );
        assert_relative_eq!(c.eval(&[1.0, 0.0], 0.0).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            c.eval(&[0.0, 0.0], 1.0).unwrap(),
            0.5_f64.sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn margins_match_axis_restrictions() {
        let models = vec![
            SpaceTimeCov::clayton(1.7, 0.5, 1.0, 2.0, 2).unwrap(),
            SpaceTimeCov::gumbel(0.9, 1.0, 2.0, 3.0, 2).unwrap(),
            SpaceTimeCov::power_series(1.0, 2.0, 3.0, 2).unwrap(),
            SpaceTimeCov::cauchy_margins(0.5, 1.0, 1.0, 1.0, 2).unwrap(),
        ];
        for m in models {
            let spatial = m.spatial_margin().unwrap();
            let temporal = m.temporal_margin().unwrap();
            for t in [0.0, 0.3, 1.0, 4.7] {
                assert_relative_eq!(
                    spatial.eval(&[t, 0.0]).unwrap(),
                    m.eval(&[t, 0.0], 0.0).unwrap(),
                    max_relative = 1e-13
                );
                assert_relative_eq!(
                    temporal.eval(&[t]).unwrap(),
                    m.eval(&[0.0, 0.0], t).unwrap(),
                    max_relative = 1e-13
                );
            }
        }
    }

    #[test]
    fn kernel_impl_concatenates_lags() {
        let c = SpaceTimeCov::clayton(1.0, 0.5, 1.0, 2.0, 2).unwrap();
        assert_eq!(Kernel::dim(&c), 3);
        let direct = c.eval(&[0.3, 0.4], 0.9).unwrap();
        let as_kernel = Kernel::eval(&c, &[0.3, 0.4, 0.9]).unwrap();
        assert_eq!(direct, as_kernel);
        assert!(Kernel::eval(&c, &[0.3, 0.4]).is_err());
    }

    #[test]
    fn composition_wrapper_matches_family() {
        let fam = SpaceTimeCov::clayton(1.0, 0.5, 1.0, 2.0, 2).unwrap();
        let wrapped = SpaceTimeCov::from_composition(fam.to_composition().unwrap()).unwrap();
        for (h, u) in [([0.0, 0.0], 0.0), ([0.6, 0.8], 1.0), ([2.0, 0.0], 0.3)] {
            assert_relative_eq!(
                wrapped.eval(&h, u).unwrap(),
                fam.eval(&h, u).unwrap(),
                max_relative = 1e-14
            );
        }
        assert_eq!(wrapped.family_name(), "composition");
        assert_eq!(wrapped.spatial_dim(), 2);
    }

    #[test]
    fn gumbel_composition_matches_family() {
        let fam = SpaceTimeCov::gumbel(1.0, 1.0, 2.0, 3.0, 1).unwrap();
        let wrapped = SpaceTimeCov::from_composition(fam.to_composition().unwrap()).unwrap();
        for (h, u) in [([0.5], 0.2), ([1.0], 1.0), ([0.0], 2.0)] {
            assert_relative_eq!(
                wrapped.eval(&h, u).unwrap(),
                fam.eval(&h, u).unwrap(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn separable_product_has_zero_defect() {
        let c = SpaceTimeCov::separable(
            Arc::new(Exponential::new(1.0, 2).unwrap()),
            Arc::new(Exponential::new(2.0, 1).unwrap()),
        )
        .unwrap();
        assert_eq!(c.separability_defect(&[0.5, 0.5], 0.8).unwrap(), 0.0);
        assert_relative_eq!(
            c.eval(&[3.0, 4.0], 1.0).unwrap(),
            (-5.0_f64).exp() * (-0.5_f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn constructor_rejections() {
        // Strict ordering.
        assert!(SpaceTimeCov::clayton(1.0, 2.0, 1.0, 2.0, 1).is_err());
        assert!(SpaceTimeCov::clayton(1.0, 1.0, 1.0, 2.0, 1).is_err());
        assert!(SpaceTimeCov::clayton_boundary(1.0, 1.0, 1.0, 2.0, 1).is_ok());
        assert!(SpaceTimeCov::clayton_boundary(1.0, 1.5, 1.0, 2.0, 1).is_err());
        // Gumbel needs λ ≥ 1.
        assert!(SpaceTimeCov::gumbel(1.0, 0.5, 2.0, 3.0, 1).is_err());
        // Cauchy-margins constraints.
        assert!(SpaceTimeCov::cauchy_margins(1.5, 1.0, 1.0, 1.0, 1).is_err()); // α ≥ ε
        assert!(SpaceTimeCov::cauchy_margins(0.3, 1.0, 1.0, 1.0, 1).is_err()); // ρ > 2α
        assert!(SpaceTimeCov::cauchy_margins(0.5, 2.5, 1.0, 1.0, 1).is_err()); // δ > 2
        // Variogram validation.
        assert!(SpaceTimeCov::frank(
            1.0,
            VariogramSpec::Power { beta: 2.5 },
            VariogramSpec::Linear,
            1
        )
        .is_err());
        assert!(SpaceTimeCov::frank(
            1.0,
            VariogramSpec::NuggetPower {
                nugget: -0.1,
                beta: 1.0
            },
            VariogramSpec::Linear,
            1
        )
        .is_err());
        // Zero spatial dimension.
        assert!(SpaceTimeCov::clayton(1.0, 0.5, 1.0, 2.0, 0).is_err());
        // Composition wrapper wants [d, 1].
        let spec = CompositionSpec::new(
            make_generator(GeneratorKind::ExpNeg, &[]).unwrap(),
            vec![
                Arc::new(Exponential::new(1.0, 1).unwrap()) as Arc<dyn Kernel>,
                Arc::new(Exponential::new(1.0, 2).unwrap()),
            ],
            Weights::equal(2).unwrap(),
            vec![1, 2],
        )
        .unwrap();
        assert!(SpaceTimeCov::from_composition(spec).is_err());
    }

    #[test]
    fn affine_anisotropy_evaluates_weighted_exponents() {
        let k = AffineAnisotropy::new(
            make_generator(GeneratorKind::ExpNeg, &[]).unwrap(),
            vec![2.0, 3.0],
        )
        .unwrap();
        assert_eq!(k.dim(), 2);
        assert_relative_eq!(
            k.eval(&[0.5, -1.0]).unwrap(),
            (-4.0_f64).exp(),
            max_relative = 1e-15
        );
        assert_eq!(k.eval(&[0.0, 0.0]).unwrap(), 1.0);
        // Requires a completely monotone, bounded-at-zero generator and
        // positive weights.
        assert!(AffineAnisotropy::new(
            make_generator(GeneratorKind::NegLog, &[]).unwrap(),
            vec![1.0]
        )
        .is_err());
        assert!(AffineAnisotropy::new(
            make_generator(GeneratorKind::Reciprocal, &[]).unwrap(),
            vec![1.0]
        )
        .is_err());
        assert!(AffineAnisotropy::new(
            make_generator(GeneratorKind::ExpNeg, &[]).unwrap(),
            vec![1.0, 0.0]
        )
        .is_err());
    }

    #[test]
    fn variogram_spec_shapes() {
        assert_eq!(VariogramSpec::Linear.eval(2.5), 2.5);
        assert_relative_eq!(
            VariogramSpec::Power { beta: 0.5 }.eval(4.0),
            2.0,
            max_relative = 1e-15
        );
        let np = VariogramSpec::NuggetPower {
            nugget: 0.3,
            beta: 1.0,
        };
        assert_eq!(np.eval(0.0), 0.0);
        assert_relative_eq!(np.eval(1.0), 1.3, max_relative = 1e-15);
    }
}
