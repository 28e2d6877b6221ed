//! Product random fields with a shared random smoothing scale.
//!
//! The field multiplies d+1 independent one-dimensional Gaussian processes,
//! one per spatial coordinate and one in time, each evaluated with a random
//! roughness scale R drawn from a mixing distribution F:
//! conditionally on R = r, process i has covariance exp(-r νᵢ(|δ|)) for a
//! concave increasing exponent νᵢ with νᵢ(0) = 0. The product's covariance
//! is the Laplace-transform mixture
//!
//! ```text
//! C(h, u) = σ² ∫ exp(-[Σᵢ νᵢ(|hᵢ|) + ν_t(|u|)] r) dF(r) = σ² L_F(Σνᵢ + ν_t)
//! ```
//!
//! A gamma mixing distribution therefore reproduces exactly the
//! inverse-power quasi-arithmetic composition of the margins
//! ([`QarfSpec::clayton_composition`]), and a factorized mixing law (one
//! independent scale per process) gives a separable product.
//!
//! The module also carries the spectral side of the story for the component
//! processes: their 1-d spectral density and a mean-square differentiability
//! probe that decides whether ∫ ω^{2k} ĉ(ω) dω converges by watching dyadic
//! frequency bands.

use crate::compose::CompositionSpec;
use crate::error::{QamError, Result};
use crate::generator::{make_generator, GeneratorKind};
use crate::kernel::{FnKernel, Kernel};
use crate::permissibility::check_concave_increasing;
use crate::quad::{gk15, integrate_semi_infinite};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

/// A concave increasing exponent ν with ν(0) = 0.
#[derive(Debug, Clone, PartialEq)]
pub enum ExponentFn {
    /// ν(t) = coeff · t^exponent, exponent ∈ (0, 1].
    Power { coeff: f64, exponent: f64 },
    /// ν(t) = coeff · ln(1+t).
    Log1p { coeff: f64 },
}

impl ExponentFn {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ExponentFn::Power { coeff, exponent } => {
                if !(coeff > 0.0) || !coeff.is_finite() {
                    return Err(QamError::Parameter(format!(
                        "exponent function coefficient must be finite and positive, got {coeff}"
                    )));
                }
                if !(exponent > 0.0 && exponent <= 1.0) {
                    return Err(QamError::Parameter(format!(
                        "power exponent must lie in (0, 1] to stay concave, got {exponent}"
                    )));
                }
                Ok(())
            }
            ExponentFn::Log1p { coeff } => {
                if !(coeff > 0.0) || !coeff.is_finite() {
                    return Err(QamError::Parameter(format!(
                        "exponent function coefficient must be finite and positive, got {coeff}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// ν(t) for t ≥ 0.
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ExponentFn::Power { coeff, exponent } => coeff * t.powf(exponent),
            ExponentFn::Log1p { coeff } => coeff * t.ln_1p(),
        }
    }
}

/// The mixing distribution of the shared roughness scale R.
#[derive(Debug, Clone, PartialEq)]
pub enum MixingF {
    /// Gamma(shape, rate): Laplace transform (1 + x/rate)^{-shape}.
    Gamma { shape: f64, rate: f64 },
    /// Degenerate at `location`: Laplace transform e^{-location·x}.
    PointMass { location: f64 },
    /// Finite mixture of atoms (location, weight), weights summing to one.
    PointMassMixture { atoms: Vec<(f64, f64)> },
    /// One independent scalar law per process (length d+1, ordered spatial
    /// then temporal): the covariance factorizes into a separable product.
    ProductMeasure { components: Vec<MixingF> },
}

impl MixingF {
    fn validate(&self, nested: bool) -> Result<()> {
        match self {
            MixingF::Gamma { shape, rate } => {
                if !(shape > &0.0 && rate > &0.0) || !shape.is_finite() || !rate.is_finite() {
                    return Err(QamError::Parameter(format!(
                        "gamma mixing requires shape > 0 and rate > 0, got shape = {shape}, rate = {rate}"
                    )));
                }
                Ok(())
            }
            MixingF::PointMass { location } => {
                if !(location > &0.0) || !location.is_finite() {
                    return Err(QamError::Parameter(format!(
                        "point-mass mixing requires a positive location, got {location}"
                    )));
                }
                Ok(())
            }
            MixingF::PointMassMixture { atoms } => {
                if atoms.is_empty() {
                    return Err(QamError::Parameter("empty atom list".into()));
                }
                let mut total = 0.0;
                for &(loc, w) in atoms {
                    if !(loc > 0.0) || !loc.is_finite() || !(w > 0.0) || !w.is_finite() {
                        return Err(QamError::Parameter(format!(
                            "each atom needs a positive location and weight, got ({loc}, {w})"
                        )));
                    }
                    total += w;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(QamError::Parameter(format!(
                        "atom weights must sum to 1, got {total}"
                    )));
                }
                Ok(())
            }
            MixingF::ProductMeasure { components } => {
                if nested {
                    return Err(QamError::Parameter(
                        "product mixing laws cannot be nested".into(),
                    ));
                }
                for c in components {
                    c.validate(true)?;
                }
                Ok(())
            }
        }
    }

    /// E[e^{-xR}] for the scalar laws.
    fn laplace(&self, x: f64) -> f64 {
        match self {
            MixingF::Gamma { shape, rate } => (1.0 + x / rate).powf(-shape),
            MixingF::PointMass { location } => (-location * x).exp(),
            MixingF::PointMassMixture { atoms } => {
                atoms.iter().map(|&(loc, w)| w * (-loc * x).exp()).sum()
            }
            MixingF::ProductMeasure { .. } => f64::NAN, // handled by the caller
        }
    }

    /// Draw one scale value.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        match self {
            MixingF::Gamma { shape, rate } => {
                let dist = rand_distr::Gamma::new(*shape, 1.0 / rate)
                    .map_err(|e| QamError::Parameter(format!("gamma mixing: {e}")))?;
                Ok(rng.sample(dist))
            }
            MixingF::PointMass { location } => Ok(*location),
            MixingF::PointMassMixture { atoms } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(loc, w) in atoms {
                    acc += w;
                    if u <= acc {
                        return Ok(loc);
                    }
                }
                Ok(atoms.last().expect("validated nonempty").0)
            }
            MixingF::ProductMeasure { .. } => Err(QamError::Precondition(
                "product mixing laws are sampled per component".into(),
            )),
        }
    }
}

/// A complete product-field model on ℝᵈ × ℝ.
#[derive(Debug, Clone)]
pub struct QarfSpec {
    nu_s: Vec<ExponentFn>,
    nu_t: ExponentFn,
    f: MixingF,
    variance: f64,
}

impl QarfSpec {
    pub fn new(
        nu_s: Vec<ExponentFn>,
        nu_t: ExponentFn,
        f: MixingF,
        variance: f64,
    ) -> Result<Self> {
        if nu_s.is_empty() {
            return Err(QamError::Dimension(
                "at least one spatial exponent function is required".into(),
            ));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(QamError::Parameter(format!(
                "variance must be finite and positive, got {variance}"
            )));
        }
        let d = nu_s.len();
        if d + 2 > 256 {
            return Err(QamError::Dimension(
                "the simulator's stream layout supports at most 254 spatial dimensions".into(),
            ));
        }
        if let MixingF::ProductMeasure { components } = &f {
            if components.len() != d + 1 {
                return Err(QamError::Dimension(format!(
                    "a product mixing law needs one component per process (d+1 = {}), got {}",
                    d + 1,
                    components.len()
                )));
            }
        }
        f.validate(false)?;
        let grid = crate::permissibility::default_radial_grid();
        for (i, nu) in nu_s.iter().chain(std::iter::once(&nu_t)).enumerate() {
            nu.validate()?;
            let nu = nu.clone();
            let report = check_concave_increasing(move |t| nu.eval(t), &grid)?;
            if !report.passed {
                return Err(QamError::Parameter(format!(
                    "exponent function {i} is not concave increasing (worst margin {})",
                    report.worst_margin
                )));
            }
        }
        Ok(QarfSpec {
            nu_s,
            nu_t,
            f,
            variance,
        })
    }

    /// Spatial dimension d.
    pub fn spatial_dim(&self) -> usize {
        self.nu_s.len()
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// The exact covariance at spatial lag h (coordinate-wise) and temporal
    /// lag u.
    pub fn theoretical_cov(&self, h: &[f64], u: f64) -> Result<f64> {
        let d = self.nu_s.len();
        if h.len() != d {
            return Err(QamError::Dimension(format!(
                "spatial lag has dimension {}, expected {d}",
                h.len()
            )));
        }
        match &self.f {
            MixingF::ProductMeasure { components } => {
                let mut prod = 1.0;
                for ((nu, comp), &hi) in self.nu_s.iter().zip(components).zip(h) {
                    prod *= comp.laplace(nu.eval(hi.abs()));
                }
                prod *= components[d].laplace(self.nu_t.eval(u.abs()));
                Ok(self.variance * prod)
            }
            scalar => {
                let total: f64 = self
                    .nu_s
                    .iter()
                    .zip(h)
                    .map(|(nu, &hi)| nu.eval(hi.abs()))
                    .sum::<f64>()
                    + self.nu_t.eval(u.abs());
                Ok(self.variance * scalar.laplace(total))
            }
        }
    }

    /// The exact quasi-arithmetic representation under gamma mixing: an
    /// inverse-power composition with generator parameter 1/shape and
    /// one-dimensional children (1 + νᵢ(|·|)/rate)^{-shape}, all with unit
    /// weights. Unit-variance view; other mixing laws have no such form.
    pub fn clayton_composition(&self) -> Result<CompositionSpec> {
        let (shape, rate) = match self.f {
            MixingF::Gamma { shape, rate } => (shape, rate),
            _ => {
                return Err(QamError::Precondition(
                    "only gamma mixing admits the inverse-power composition form".into(),
                ))
            }
        };
        let mut children: Vec<Arc<dyn Kernel>> = Vec::with_capacity(self.nu_s.len() + 1);
        for nu in self.nu_s.iter().chain(std::iter::once(&self.nu_t)) {
            let nu = nu.clone();
            children.push(Arc::new(FnKernel::isotropic(1, move |t| {
                (1.0 + nu.eval(t) / rate).powf(-shape)
            })));
        }
        let n = children.len();
        CompositionSpec::archimedean(
            make_generator(GeneratorKind::Clayton, &[1.0 / shape])?,
            children,
            vec![1; n],
        )
    }

    /// Simulate the product field at space-time points (each of length d+1,
    /// time last), returning one row of field values per replicate.
    ///
    /// Fully deterministic given `seed`: replicate `rep` uses counter-mode
    /// streams rep·256+i for process i (0..d spatial, d temporal) and
    /// rep·256+d+1 for the mixing draw, so any subset of replicates can be
    /// reproduced independently.
    pub fn simulate(
        &self,
        points: &[Vec<f64>],
        replicates: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        let d = self.nu_s.len();
        if points.is_empty() {
            return Err(QamError::Precondition("no simulation points".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d + 1 {
                return Err(QamError::Dimension(format!(
                    "point {i} has dimension {}, expected {}",
                    p.len(),
                    d + 1
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(QamError::Precondition(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
        }

        // Per process: the distinct coordinate values and each point's index
        // into them. Gram factors are built on distinct values only.
        let mut coords: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
        let mut index: Vec<Vec<usize>> = Vec::with_capacity(d + 1);
        for proc_i in 0..=d {
            let mut uniq: Vec<f64> = Vec::new();
            let mut idx = Vec::with_capacity(points.len());
            for p in points {
                let c = p[proc_i];
                match uniq.iter().position(|&v| v == c) {
                    Some(k) => idx.push(k),
                    None => {
                        uniq.push(c);
                        idx.push(uniq.len() - 1);
                    }
                }
            }
            coords.push(uniq);
            index.push(idx);
        }

        let nu_of = |proc_i: usize| -> &ExponentFn {
            if proc_i < d {
                &self.nu_s[proc_i]
            } else {
                &self.nu_t
            }
        };

        // A fixed-location mixing law keeps the same Gram factors for every
        // replicate; factor once.
        let fixed_factors: Option<Vec<Cholesky<f64, nalgebra::Dyn>>> = match &self.f {
            MixingF::PointMass { location } => {
                let mut fs = Vec::with_capacity(d + 1);
                for (proc_i, proc_coords) in coords.iter().enumerate() {
                    fs.push(process_factor(nu_of(proc_i), *location, proc_coords)?);
                }
                Some(fs)
            }
            _ => None,
        };

        let sqrt_var = self.variance.sqrt();
        let mut out = Vec::with_capacity(replicates);
        for rep in 0..replicates {
            let base = rep as u64 * 256;
            let scales: Vec<f64> = match &self.f {
                MixingF::ProductMeasure { components } => {
                    let mut rng = stream_rng(seed, base + d as u64 + 1);
                    components
                        .iter()
                        .map(|c| c.sample(&mut rng))
                        .collect::<Result<_>>()?
                }
                scalar => {
                    let mut rng = stream_rng(seed, base + d as u64 + 1);
                    vec![scalar.sample(&mut rng)?; d + 1]
                }
            };
            let mut values = vec![sqrt_var; points.len()];
            for proc_i in 0..=d {
                let m = coords[proc_i].len();
                let mut rng = stream_rng(seed, base + proc_i as u64);
                let eps = DVector::from_iterator(
                    m,
                    (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)),
                );
                let z = match &fixed_factors {
                    Some(fs) => fs[proc_i].l() * eps,
                    None => {
                        process_factor(nu_of(proc_i), scales[proc_i], &coords[proc_i])?.l() * eps
                    }
                };
                for (j, v) in values.iter_mut().enumerate() {
                    *v *= z[index[proc_i][j]];
                }
            }
            out.push(values);
        }
        Ok(out)
    }
}

impl Kernel for QarfSpec {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        let d = self.nu_s.len();
        if lag.len() != d + 1 {
            return Err(QamError::Dimension(format!(
                "space-time lag has dimension {}, expected {}",
                lag.len(),
                d + 1
            )));
        }
        self.theoretical_cov(&lag[..d], lag[d])
    }
    fn dim(&self) -> usize {
        self.nu_s.len() + 1
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Cholesky factor of the conditional Gram exp(-r ν(|cᵢ-cⱼ|)) on distinct
/// coordinates, with one jittered retry for borderline rank deficiency.
fn process_factor(
    nu: &ExponentFn,
    r: f64,
    coords: &[f64],
) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let m = coords.len();
    let gram = DMatrix::from_fn(m, m, |i, j| (-r * nu.eval((coords[i] - coords[j]).abs())).exp());
    if let Some(ch) = Cholesky::new(gram.clone()) {
        return Ok(ch);
    }
    let jitter = 1e-12 * gram[(0, 0)];
    let bumped = gram + DMatrix::identity(m, m) * jitter;
    Cholesky::new(bumped).ok_or_else(|| {
        QamError::Numeric(format!(
            "conditional Gram factorization failed for {m} coordinates even after jitter"
        ))
    })
}

// ---------------------------------------------------------------------------
// Spectral analysis of the component processes.
// ---------------------------------------------------------------------------

/// The 1-d spectral density ĉ(ω) = (1/π)∫₀^∞ cos(ωh) e^{-rν(h)} dh of a
/// component process with covariance e^{-rν(|h|)}.
///
/// For ω > 0 the oscillatory integral is summed over half-period panels
/// until the increments are negligible; for ω = 0 it reduces to the plain
/// area of the covariance, which may genuinely diverge (a slowly decaying
/// exponent like ν = ln(1+t) with r ≤ 1) and then surfaces as a quadrature
/// error.
pub fn spectral_density_1d(nu: &ExponentFn, r: f64, omega: f64) -> Result<f64> {
    nu.validate()?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(QamError::Parameter(format!(
            "roughness scale must be finite and positive, got {r}"
        )));
    }
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(QamError::Parameter(format!(
            "frequency must be finite and nonnegative, got {omega}"
        )));
    }
    let f = |h: f64| (-r * nu.eval(h)).exp();
    if omega == 0.0 {
        return Ok(integrate_semi_infinite(&f, 1e-10)? / std::f64::consts::PI);
    }
    let half = std::f64::consts::PI / omega;
    const MAX_HALF_PERIODS: usize = 200_000;
    let mut total = 0.0;
    let mut prev_total;
    for k in 0..MAX_HALF_PERIODS {
        let a = k as f64 * half;
        let (panel, _) = gk15(&|h: f64| (omega * h).cos() * f(h), a, a + half)?;
        prev_total = total;
        total += panel;
        // Alternating panels: once an increment is negligible against the
        // running value the tail is bounded by it.
        if k > 2 && panel.abs() <= 1e-12 * total.abs().max(1e-300) {
            return Ok(total / std::f64::consts::PI);
        }
        // Averaged partial sums converge even when raw panels shrink slowly.
        if k > 8 && (total - prev_total).abs() < 1e-14 * total.abs().max(1e-300) {
            return Ok(total / std::f64::consts::PI);
        }
    }
    Err(QamError::QuadratureNonConvergence {
        residual: f64::NAN,
        target: 1e-12,
    })
}

/// Verdict of the mean-square differentiability probe.
#[derive(Debug, Clone, PartialEq)]
pub struct MsDiffReport {
    /// Derivative order probed.
    pub order: usize,
    /// Whether ∫ ω^{2k} ĉ(ω) dω was judged divergent.
    pub divergent: bool,
    /// The extrapolated moment 2∫₀^∞ ω^{2k} ĉ(ω) dω when convergent.
    pub moment: Option<f64>,
    /// The partial masses below each dyadic cutoff, lowest first.
    pub partial: Vec<f64>,
}

/// Decide k-fold mean-square differentiability of the process with
/// covariance e^{-rν(|h|)} by probing M(Ω) = 2∫₀^Ω ω^{2k} ĉ(ω) dω on dyadic
/// cutoffs Ω_j = 4·2^j.
///
/// Each probe swaps the order of integration: with
/// K(h, Ω) = ∫₀^Ω ω^{2k} cos(ωh) dω available in closed form,
/// M(Ω) = (2/π)∫₀^∞ e^{-rν(h)} K(h, Ω) dh, which is a well-behaved
/// one-dimensional integral. Divergence shows as band masses
/// M(Ω_{j+1})-M(Ω_j) that stop decaying; convergence is extrapolated from
/// the geometric tail of the bands.
pub fn ms_diff_order(nu: &ExponentFn, r: f64, k: usize) -> Result<MsDiffReport> {
    nu.validate()?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(QamError::Parameter(format!(
            "roughness scale must be finite and positive, got {r}"
        )));
    }
    if k > 4 {
        return Err(QamError::Parameter(format!(
            "differentiability probe supports orders up to 4, got {k}"
        )));
    }
    const J: usize = 9;
    let mut partial = Vec::with_capacity(J);
    for j in 0..J {
        let omega = 4.0 * 2f64.powi(j as i32);
        partial.push(band_mass(nu, r, k, omega)?);
    }
    let deltas: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = deltas
        .windows(2)
        .map(|w| if w[0].abs() > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let n = ratios.len();
    let divergent = ratios[n - 3..].iter().all(|&q| q >= 1.0 - 1e-3);
    if divergent {
        return Ok(MsDiffReport {
            order: k,
            divergent: true,
            moment: None,
            partial,
        });
    }
    // Geometric tail: remaining mass ≈ δ_last · q/(1-q).
    let q = ratios[n - 1].clamp(0.0, 0.99);
    let last = *partial.last().expect("J probes");
    let tail = deltas.last().expect("J-1 deltas") * q / (1.0 - q);
    Ok(MsDiffReport {
        order: k,
        divergent: false,
        moment: Some(last + tail),
        partial,
    })
}

/// M(Ω) = (2/π) ∫₀^∞ e^{-rν(h)} K_{2k}(h, Ω) dh over uniform panels of one
/// half-period.
///
/// The integration stops at the envelope cutoff A with
/// r ν(A) = 34 + ln(1 + Ω^{2k}) — beyond it the integrand is below ~e^{-34}
/// relative to the kernel envelope — or earlier once the near-alternating
/// half-period panels have become negligible against the running total,
/// whichever comes first. The early stop is what keeps slowly decaying
/// exponents (the logarithmic family) tractable, since their envelope
/// cutoff can sit astronomically far out.
fn band_mass(nu: &ExponentFn, r: f64, k: usize, omega: f64) -> Result<f64> {
    let target = 34.0 + (1.0 + omega.powi(2 * k as i32)).ln();
    let a_cut = solve_nu_level(nu, r, target)?;
    let panel_len = std::f64::consts::PI / omega;
    let f = |h: f64| (-r * nu.eval(h)).exp() * cos_moment(2 * k, h, omega);
    const MAX_PANELS: usize = 400_000;
    let mut total = 0.0;
    let mut quiet = 0_u32;
    for i in 0..MAX_PANELS {
        let a = i as f64 * panel_len;
        let b = (a + panel_len).min(a_cut);
        let (v, _) = gk15(&f, a, b)?;
        total += v;
        if b >= a_cut {
            return Ok(2.0 / std::f64::consts::PI * total);
        }
        if v.abs() <= 0.5e-9 * total.abs().max(1.0) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(2.0 / std::f64::consts::PI * total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(QamError::Numeric(format!(
        "frequency-band probe at cutoff {omega} did not settle within {MAX_PANELS} panels"
    )))
}

/// Solve r ν(A) = target for A by doubling then bisection (ν is increasing
/// and unbounded for both exponent forms).
fn solve_nu_level(nu: &ExponentFn, r: f64, target: f64) -> Result<f64> {
    let mut hi = 1.0;
    let mut guard = 0;
    while r * nu.eval(hi) < target {
        hi *= 2.0;
        guard += 1;
        if guard > 4000 {
            return Err(QamError::Numeric(
                "exponent function grows too slowly to locate the integration cutoff".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if r * nu.eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// K_m(h, Ω) = ∫₀^Ω ω^m cos(ωh) dω, exact via the interleaved recurrence
///   C_m = Ω^m sin(Ωh)/h - (m/h) S_{m-1},
///   S_m = -Ω^m cos(Ωh)/h + (m/h) C_{m-1},
/// switching to a Taylor expansion when Ωh is small enough that the
/// recurrence would cancel catastrophically.
fn cos_moment(m: usize, h: f64, omega: f64) -> f64 {
    let x = omega * h;
    if x < 0.01 {
        // C_m = Σ_{i=0..4} (-1)^i h^{2i}/(2i)! · Ω^{m+2i+1}/(m+2i+1); the
        // truncation error is below (Ωh)^{10}/10! relative.
        let mut sum = 0.0;
        let mut h2i = 1.0; // h^{2i}/(2i)!
        for i in 0..5 {
            let p = (m + 2 * i + 1) as f64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * h2i * omega.powf(p) / p;
            let den = ((2 * i + 1) * (2 * i + 2)) as f64;
            h2i *= h * h / den;
        }
        return sum;
    }
    let (sin_x, cos_x) = x.sin_cos();
    let mut c = sin_x / h;
    let mut s = (1.0 - cos_x) / h;
    let mut om_pow = 1.0; // Ω^m for the current m
    for mm in 1..=m {
        om_pow *= omega;
        let c_next = om_pow * sin_x / h - (mm as f64 / h) * s;
        let s_next = -om_pow * cos_x / h + (mm as f64 / h) * c;
        c = c_next;
        s = s_next;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear() -> ExponentFn {
        ExponentFn::Power {
            coeff: 1.0,
            exponent: 1.0,
        }
    }

    #[test]
    fn gamma_mixing_covariance_is_inverse_power() {
        let spec = QarfSpec::new(
            vec![linear(), linear()],
            ExponentFn::Log1p { coeff: 2.0 },
            MixingF::Gamma {
                shape: 2.0,
                rate: 1.0,
            },
            1.0,
        )
        .unwrap();
        let total = 0.5 + 1.5 + 2.0 * 3.0_f64.ln_1p();
        assert_relative_eq!(
            spec.theoretical_cov(&[0.5, -1.5], 3.0).unwrap(),
            (1.0 + total).powf(-2.0),
            max_relative = 1e-15
        );
        assert_eq!(spec.theoretical_cov(&[0.0, 0.0], 0.0).unwrap(), 1.0);
    }

    #[test]
    fn gamma_mixing_matches_its_composition_everywhere() {
        let spec = QarfSpec::new(
            vec![linear()],
            ExponentFn::Power {
                coeff: 0.7,
                exponent: 0.5,
            },
            MixingF::Gamma {
                shape: 2.0, // generator parameter 1/2
                rate: 1.3,
            },
            1.0,
        )
        .unwrap();
        let comp = spec.clayton_composition().unwrap();
        let composed = crate::compose::compose(comp);
        for lag in [[0.0, 0.0], [1.0, 0.0], [0.3, 2.0], [5.0, 0.7]] {
            let direct = spec.theoretical_cov(&lag[..1], lag[1]).unwrap();
            let via = composed.eval(&lag).unwrap();
            assert!(
                (direct - via).abs() <= 1e-12 * direct.abs().max(1.0),
                "lag {lag:?}: {direct} vs {via}"
            );
        }
    }

    #[test]
    fn point_mass_and_atom_mixtures() {
        let spec = QarfSpec::new(
            vec![linear()],
            linear(),
            MixingF::PointMass { location: 2.0 },
            1.5,
        )
        .unwrap();
        assert_relative_eq!(
            spec.theoretical_cov(&[1.0], 1.0).unwrap(),
            1.5 * (-4.0_f64).exp(),
            max_relative = 1e-15
        );

        let mix = QarfSpec::new(
            vec![linear()],
            linear(),
            MixingF::PointMassMixture {
                atoms: vec![(1.0, 0.25), (3.0, 0.75)],
            },
            1.0,
        )
        .unwrap();
        let x = 2.0_f64;
        assert_relative_eq!(
            mix.theoretical_cov(&[2.0], 0.0).unwrap(),
            0.25 * (-x).exp() + 0.75 * (-3.0 * x).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn product_measure_separates() {
        let spec = QarfSpec::new(
            vec![linear()],
            linear(),
            MixingF::ProductMeasure {
                components: vec![
                    MixingF::PointMass { location: 1.0 },
                    MixingF::Gamma {
                        shape: 1.0,
                        rate: 1.0,
                    },
                ],
            },
            1.0,
        )
        .unwrap();
        let c = |h: f64, u: f64| spec.theoretical_cov(&[h], u).unwrap();
        assert_relative_eq!(
            c(1.0, 2.0),
            c(1.0, 0.0) * c(0.0, 2.0),
            max_relative = 1e-14
        );
        assert_relative_eq!(c(1.0, 0.0), (-1.0_f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(c(0.0, 2.0), 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn kernel_view_concatenates() {
        let spec = QarfSpec::new(
            vec![linear(), linear()],
            linear(),
            MixingF::PointMass { location: 1.0 },
            1.0,
        )
        .unwrap();
        assert_eq!(Kernel::dim(&spec), 3);
        assert_eq!(
            Kernel::eval(&spec, &[0.5, 0.5, 1.0]).unwrap(),
            spec.theoretical_cov(&[0.5, 0.5], 1.0).unwrap()
        );
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        assert!(ExponentFn::Power {
            coeff: 1.0,
            exponent: 1.5
        }
        .validate()
        .is_err());
        assert!(ExponentFn::Log1p { coeff: 0.0 }.validate().is_err());
        assert!(QarfSpec::new(vec![], linear(), MixingF::PointMass { location: 1.0 }, 1.0).is_err());
        assert!(QarfSpec::new(
            vec![linear()],
            linear(),
            MixingF::PointMassMixture {
                atoms: vec![(1.0, 0.5), (2.0, 0.2)]
            },
            1.0
        )
        .is_err());
        // Product law must have d+1 components and no nesting.
        assert!(QarfSpec::new(
            vec![linear()],
            linear(),
            MixingF::ProductMeasure {
                components: vec![MixingF::PointMass { location: 1.0 }]
            },
            1.0
        )
        .is_err());
        assert!(MixingF::ProductMeasure {
            components: vec![MixingF::ProductMeasure { components: vec![] }]
        }
        .validate(false)
        .is_err());
    }

    #[test]
    fn simulation_is_deterministic_and_replicate_stable() {
        let spec = QarfSpec::new(
            vec![linear()],
            linear(),
            MixingF::Gamma {
                shape: 2.0,
                rate: 2.0,
            },
            1.0,
        )
        .unwrap();
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let a = spec.simulate(&pts, 4, 7).unwrap();
        let b = spec.simulate(&pts, 4, 7).unwrap();
        assert_eq!(a, b);
        let c = spec.simulate(&pts, 4, 8).unwrap();
        assert_ne!(a, c);
        // Streams are per replicate: simulating fewer replicates reproduces
        // the leading rows exactly.
        let head = spec.simulate(&pts, 2, 7).unwrap();
        assert_eq!(&a[..2], &head[..]);
        assert_eq!(a.len(), 4);
        assert_eq!(a[0].len(), 3);
    }

    #[test]
    fn simulation_matches_theory_in_mean() {
        // e^{-|h|-|u|} model; 20k replicates give ~0.7% standard error on
        // the lag-1 product moments.
        let spec = QarfSpec::new(
            vec![linear()],
            linear(),
            MixingF::PointMass { location: 1.0 },
            1.0,
        )
        .unwrap();
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let reps = 20_000;
        let sims = spec.simulate(&pts, reps, 20260816).unwrap();
        for (i, j, want) in [
            (0, 0, 1.0),
            (0, 1, (-1.0_f64).exp()),
            (0, 2, (-1.0_f64).exp()),
        ] {
            let products: Vec<f64> = sims.iter().map(|row| row[i] * row[j]).collect();
            let mean = products.iter().sum::<f64>() / reps as f64;
            let var = products
                .iter()
                .map(|p| (p - mean) * (p - mean))
                .sum::<f64>()
                / (reps as f64 - 1.0);
            let se = (var / reps as f64).sqrt();
            assert!(
                (mean - want).abs() <= 4.0 * se,
                "pair ({i},{j}): mean {mean} vs {want} (se {se})"
            );
        }
    }

    #[test]
    fn spectral_density_of_exponential_covariance() {
        // ν = t, r = 1: ĉ(ω) = (1/π)/(1+ω²).
        for omega in [0.0, 0.5, 2.0, 7.0] {
            let got = spectral_density_1d(&linear(), 1.0, omega).unwrap();
            let want = 1.0 / (std::f64::consts::PI * (1.0 + omega * omega));
            assert_relative_eq!(got, want, max_relative = 1e-8);
        }
        // Slowly decaying covariance (1+h)^{-r}: the zero-frequency value is
        // finite only for r > 1.
        let log_nu = ExponentFn::Log1p { coeff: 1.0 };
        assert!(spectral_density_1d(&log_nu, 1.0, 0.0).is_err());
        let c0 = spectral_density_1d(&log_nu, 3.0, 0.0).unwrap();
        assert_relative_eq!(c0, 0.5 / std::f64::consts::PI, max_relative = 1e-8);
    }

    #[test]
    fn ms_diff_probe_on_the_exponential_model() {
        // e^{-|h|} is continuous but not mean-square differentiable: the
        // zeroth moment recovers C(0) = 1, the first diverges.
        let r0 = ms_diff_order(&linear(), 1.0, 0).unwrap();
        assert!(!r0.divergent);
        assert_relative_eq!(r0.moment.unwrap(), 1.0, max_relative = 1e-6);
        let r1 = ms_diff_order(&linear(), 1.0, 1).unwrap();
        assert!(r1.divergent);
        assert_eq!(r1.moment, None);
        // Same verdict for a covariance with a kink at the origin from the
        // logarithmic exponent family.
        let r1b = ms_diff_order(&ExponentFn::Log1p { coeff: 3.0 }, 1.0, 1).unwrap();
        assert!(r1b.divergent);
    }

    #[test]
    fn cos_moment_matches_direct_quadrature() {
        for (m, h, omega) in [
            (0, 0.3, 4.0),
            (2, 0.7, 8.0),
            (2, 1e-4, 16.0),
            (4, 0.01, 32.0),
            (4, 2.5, 4.0),
        ] {
            let exact = cos_moment(m, h, omega);
            let quad = crate::quad::integrate_finite(
                &|w: f64| w.powi(m as i32) * (w * h).cos(),
                0.0,
                omega,
                1e-12,
            )
            .unwrap();
            assert_relative_eq!(exact, quad, max_relative = 1e-9);
        }
    }
}
