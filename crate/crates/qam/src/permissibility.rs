//! Numerical permissibility checks.
//!
//! Whether a composed function is a valid covariance comes down to positive
//! definiteness, and the sufficient conditions used here are sign patterns
//! of derivatives: complete monotonicity of the generator or of transformed
//! children, the Bernstein-class property (nonnegative with a completely
//! monotone derivative), concavity of exponents, and conditional negative
//! definiteness of variograms. All of these are probed numerically.
//!
//! Derivatives are estimated by central finite differences with one step of
//! Richardson extrapolation. Each estimate carries a roundoff-noise bound;
//! estimates smaller than a safety multiple of their noise bound are treated
//! as *inconclusive* (they contribute a zero margin) rather than as evidence
//! either way. This keeps high orders at small abscissae — where cancellation
//! destroys all signal — from producing random verdicts, while genuine sign
//! violations of well-scaled functions stand far above the noise floor.
//!
//! Margins are normalized by the function's scale on the grid; a check
//! passes when the worst normalized margin is above -1e-6.

use crate::compose::CompositionSpec;
use crate::error::{QamError, Result};
use crate::kernel::Kernel;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Normalized-margin tolerance shared by all derivative-sign checks.
const MARGIN_TOL: f64 = 1e-6;

/// Maximum finite-difference order supported (noise grows as h^{-k}).
const MAX_FD_ORDER: usize = 6;

/// Result of a sign-pattern or negative-definiteness check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    /// Whether every conclusive margin stayed above -1e-6.
    pub passed: bool,
    /// Highest derivative order actually probed.
    pub max_order_checked: usize,
    /// Most negative normalized margin encountered (0 when everything was
    /// inconclusive or exactly on the required side).
    pub worst_margin: f64,
    /// Location and offending raw value behind the worst margin, when the
    /// check failed.
    pub witness: Option<(f64, f64)>,
}

/// Result of a Gram-matrix eigenvalue test.
#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    /// Number of distinct points the matrix was built on.
    pub n: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// min ≥ -1e-8 · max(1, max_eigenvalue).
    pub psd: bool,
    /// Coincident input points removed before assembly.
    pub duplicates_removed: usize,
}

/// Sufficient-condition families for composition admissibility.
///
/// - `A`: each transformed child φ⁻¹∘Cᵢ is a conditionally negative definite
///   variogram on its block;
/// - `B`: each radial profile x ↦ φ⁻¹(Cᵢ(x)) is nonnegative with a
///   completely monotone derivative;
/// - `C`: the generator is the exponential one and each child is
///   exp(-γᵢ) with γᵢ = -ln Cᵢ concave increasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    A,
    B,
    C,
}

/// The default radial grid for derivative checks: 64 log-spaced abscissae
/// spanning [1e-3, 1e3].
pub fn default_radial_grid() -> Vec<f64> {
    let (a, b) = (1e-3_f64.ln(), 1e3_f64.ln());
    (0..64)
        .map(|i| (a + (b - a) * i as f64 / 63.0).exp())
        .collect()
}

/// Central finite-difference estimate of f^{(k)}(t) with one Richardson
/// refinement, together with a roundoff-noise bound for the estimate.
///
/// `lo` is the lower edge of f's domain; the stencil never reaches it.
fn derivative_estimate<F: Fn(f64) -> f64>(
    f: &F,
    t: f64,
    k: usize,
    lo: f64,
) -> Result<(f64, f64)> {
    debug_assert!((1..=MAX_FD_ORDER).contains(&k));
    // Step choice: proportional to t with an order-dependent floor, capped
    // so the widest stencil stays inside the domain.
    let floor = match k {
        1 | 2 => 1e-4,
        3 => 3e-3,
        _ => 2e-2,
    };
    let room = 1.5 * (t - lo) / k as f64;
    let h = (0.01 * t).max(floor).min(room);
    if !(h > 0.0) {
        return Err(QamError::Precondition(format!(
            "no room for an order-{k} stencil at t = {t}"
        )));
    }
    let raw = |h: f64| -> Result<(f64, f64)> {
        // Σ_j (-1)^j C(k,j) f(t + (k/2 - j) h) / h^k.
        let mut acc = 0.0;
        let mut fmax = 0.0_f64;
        let mut coeff = 1.0_f64; // C(k, 0)
        for j in 0..=k {
            let x = t + (k as f64 / 2.0 - j as f64) * h;
            let v = f(x);
            if !v.is_finite() {
                return Err(QamError::NonFinite { at: x, value: v });
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * coeff * v;
            fmax = fmax.max(v.abs());
            coeff = coeff * (k - j) as f64 / (j + 1) as f64;
        }
        let hk = h.powi(k as i32);
        // Roundoff bound: each term carries ~ε·|f|, amplified by 1/h^k.
        let noise = f64::EPSILON * 2f64.powi(k as i32) * fmax / hk;
        Ok((acc / hk, noise))
    };
    let (d_h, n_h) = raw(h)?;
    let (d_h2, n_h2) = raw(h / 2.0)?;
    // Central differences have error O(h²); one Richardson step cancels it.
    let estimate = (4.0 * d_h2 - d_h) / 3.0;
    let noise = (4.0 * n_h2 + n_h) / 3.0;
    Ok((estimate, noise))
}

/// Shared engine: verify sign(f^{(k)}) = required_sign[k] over a grid.
///
/// `orders` maps derivative order k (0 = the function itself) to the sign
/// (+1.0 / -1.0) the derivative is required to have.
fn check_sign_pattern<F: Fn(f64) -> f64>(
    f: &F,
    grid: &[f64],
    orders: &[(usize, f64)],
    lo: f64,
) -> Result<CheckReport> {
    if grid.is_empty() {
        return Err(QamError::Precondition("empty check grid".into()));
    }
    let max_order = orders.iter().map(|&(k, _)| k).max().unwrap_or(0);
    // Scale for normalization: the largest |f| on the grid.
    let mut scale = 0.0_f64;
    for &t in grid {
        let v = f(t);
        if !v.is_finite() {
            return Err(QamError::NonFinite { at: t, value: v });
        }
        scale = scale.max(v.abs());
    }
    let scale = scale.max(1e-300);
    let mut worst = 0.0_f64;
    let mut witness = None;
    for &t in grid {
        for &(k, sign) in orders {
            let (signed, conclusive, raw) = if k == 0 {
                let v = f(t);
                (sign * v, true, v)
            } else {
                let (d, noise) = derivative_estimate(f, t, k, lo)?;
                // Below 8× the noise bound the sign carries no information.
                (sign * d, d.abs() > 8.0 * noise, d)
            };
            if !conclusive {
                continue;
            }
            let margin = signed / scale;
            if margin < worst {
                worst = margin;
                witness = Some((t, raw));
            }
        }
    }
    let passed = worst >= -MARGIN_TOL;
    Ok(CheckReport {
        passed,
        max_order_checked: max_order,
        worst_margin: worst,
        witness: if passed { None } else { witness },
    })
}

/// Check complete monotonicity on a grid: (-1)^k f^{(k)} ≥ 0 for
/// k = 0, …, max_order (max_order ≤ 6).
pub fn check_completely_monotone<F: Fn(f64) -> f64>(
    f: F,
    grid: &[f64],
    max_order: usize,
) -> Result<CheckReport> {
    if max_order > MAX_FD_ORDER {
        return Err(QamError::Parameter(format!(
            "max_order is capped at {MAX_FD_ORDER}, got {max_order}"
        )));
    }
    let orders: Vec<(usize, f64)> = (0..=max_order)
        .map(|k| (k, if k % 2 == 0 { 1.0 } else { -1.0 }))
        .collect();
    check_sign_pattern(&f, grid, &orders, 0.0)
}

/// Check the Bernstein-class property: f ≥ 0 on the grid and f′ completely
/// monotone to depth `max_order`, i.e. (-1)^{k+1} f^{(k)} ≥ 0 for
/// k = 1, …, max_order + 1 (total derivative order capped at 6).
pub fn check_bernstein<F: Fn(f64) -> f64>(
    f: F,
    grid: &[f64],
    max_order: usize,
) -> Result<CheckReport> {
    let top = max_order + 1;
    if top > MAX_FD_ORDER {
        return Err(QamError::Parameter(format!(
            "max_order + 1 is capped at {MAX_FD_ORDER}, got {top}"
        )));
    }
    let mut orders: Vec<(usize, f64)> = vec![(0, 1.0)];
    orders.extend((1..=top).map(|k| (k, if k % 2 == 1 { 1.0 } else { -1.0 })));
    check_sign_pattern(&f, grid, &orders, 0.0)
}

/// Check that f is increasing and concave on the grid: f′ ≥ 0 and f″ ≤ 0.
pub fn check_concave_increasing<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> Result<CheckReport> {
    check_sign_pattern(&f, grid, &[(1, 1.0), (2, -1.0)], 0.0)
}

/// Check conditional negative definiteness of a variogram γ on lag vectors:
/// for random point sets and zero-sum weights a, the form Σᵢⱼ aᵢaⱼ γ(xᵢ-xⱼ)
/// must be nonpositive.
///
/// The probe is deterministic given `seed`. The witness, on failure, is
/// (draw index, offending form value).
pub fn check_variogram_cnd<G: Fn(&[f64]) -> f64>(
    gamma: G,
    dim: usize,
    point_draws: usize,
    points_per_draw: usize,
    seed: u64,
) -> Result<CheckReport> {
    if dim == 0 || point_draws == 0 || points_per_draw < 2 {
        return Err(QamError::Precondition(
            "CND probe needs dim ≥ 1, at least one draw and two points per draw".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut witness = None;
    for draw in 0..point_draws {
        let points: Vec<Vec<f64>> = (0..points_per_draw)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect())
            .collect();
        let mut a: Vec<f64> = (0..points_per_draw)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        for w in &mut a {
            *w -= mean; // zero-sum weights: constants in γ drop out
        }
        let mut form = 0.0;
        let mut gmax = 0.0_f64;
        for (i, xi) in points.iter().enumerate() {
            for (j, xj) in points.iter().enumerate() {
                let lag: Vec<f64> = xi.iter().zip(xj).map(|(p, q)| p - q).collect();
                let g = gamma(&lag);
                if !g.is_finite() {
                    return Err(QamError::NonFinite {
                        at: crate::kernel::norm(&lag),
                        value: g,
                    });
                }
                gmax = gmax.max(g.abs());
                form += a[i] * a[j] * g;
            }
        }
        let a2: f64 = a.iter().map(|w| w * w).sum();
        let margin = -form / (a2 * gmax).max(1e-300);
        if margin < worst {
            worst = margin;
            witness = Some((draw as f64, form));
        }
    }
    let passed = worst >= -MARGIN_TOL;
    Ok(CheckReport {
        passed,
        max_order_checked: 0,
        worst_margin: worst,
        witness: if passed { None } else { witness },
    })
}

/// Assemble the Gram matrix of a kernel on a point set and test positive
/// semidefiniteness by its extreme eigenvalues.
///
/// Coincident points are removed first (they would only duplicate rows);
/// the count removed is reported. Row assembly is parallelized; the
/// `QAM_THREADS` environment variable caps the worker count.
pub fn gram_psd(kernel: &dyn Kernel, points: &[Vec<f64>]) -> Result<GramReport> {
    let dim = kernel.dim();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(QamError::Dimension(format!(
                "point {i} has dimension {}, kernel expects {dim}",
                p.len()
            )));
        }
    }
    gram_psd_fn(
        |x: &[f64], y: &[f64]| {
            let lag: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            kernel.eval(&lag)
        },
        points,
    )
}

/// Gram positive-semidefiniteness test for a general bivariate covariance
/// C(x, y) — the form nonstationary models take, where no lag
/// representation exists. Shares the deduplication, parallel assembly and
/// eigenvalue rule of [`gram_psd`].
pub fn gram_psd_fn<C>(cov: C, points: &[Vec<f64>]) -> Result<GramReport>
where
    C: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    if points.is_empty() {
        return Err(QamError::Precondition("empty point set".into()));
    }
    let mut unique: Vec<&Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !unique.iter().any(|q| q.as_slice() == p.as_slice()) {
            unique.push(p);
        }
    }
    let duplicates_removed = points.len() - unique.len();
    let n = unique.len();

    let assemble = || -> Result<Vec<Vec<f64>>> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; n];
                for j in i..n {
                    row[j] = cov(unique[i], unique[j]).map_err(|e| QamError::GramEntry {
                        i,
                        j,
                        source: Box::new(e),
                    })?;
                }
                Ok(row)
            })
            .collect()
    };
    let upper = match configured_pool()? {
        Some(pool) => pool.install(assemble),
        None => assemble(),
    }?;

    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = upper[i][j];
            m[(j, i)] = upper[i][j];
        }
    }
    let eigen = m.symmetric_eigenvalues();
    let min_eigenvalue = eigen.iter().copied().fold(f64::INFINITY, f64::min);
    let max_eigenvalue = eigen.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GramReport {
        n,
        min_eigenvalue,
        max_eigenvalue,
        psd: min_eigenvalue >= -1e-8 * max_eigenvalue.max(1.0),
        duplicates_removed,
    })
}

/// Read the `QAM_THREADS` worker cap: `Ok(None)` when unset or 0 (rayon's
/// default global pool applies), `Ok(Some(n))` for an explicit cap, and a
/// configuration error for anything unparseable.
pub(crate) fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("QAM_THREADS") {
        Ok(s) => {
            let n: usize = s.trim().parse().map_err(|_| {
                QamError::Config(format!("QAM_THREADS must be a nonnegative integer, got {s:?}"))
            })?;
            Ok((n > 0).then_some(n))
        }
        Err(_) => Ok(None),
    }
}

/// Build a rayon pool honoring `QAM_THREADS` (unset or 0 = rayon's default
/// global pool).
pub(crate) fn configured_pool() -> Result<Option<rayon::ThreadPool>> {
    match thread_cap()? {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| QamError::Numeric(format!("thread pool: {e}")))?;
            Ok(Some(pool))
        }
        None => Ok(None),
    }
}

/// Check a composition against one of the sufficient admissibility cases.
///
/// The generator must be completely monotone (precondition). Each child is
/// examined through the generator's inverse: case A runs a conditional
/// negative-definiteness probe of φ⁻¹∘Cᵢ on the child's own block dimension;
/// case B checks the Bernstein-class property of the radial profile
/// x ↦ φ⁻¹(Cᵢ(x e₁)); case C checks that -ln Cᵢ is concave increasing
/// radially (and is meaningful for the plain-exponential generator, under
/// which the composition is exp(-Σθᵢγᵢ)).
pub fn admissibility(spec: &CompositionSpec, case: Case) -> Result<CheckReport> {
    if !spec.generator().cm_flag() {
        return Err(QamError::Precondition(format!(
            "admissibility cases require a completely monotone generator; {} is not",
            spec.generator().kind()
        )));
    }
    let gen = spec.generator().clone();
    let inv_domain = gen.inv_domain();
    let grid = default_radial_grid();
    let mut combined = CheckReport {
        passed: true,
        max_order_checked: 0,
        worst_margin: 0.0,
        witness: None,
    };
    for (index, child) in spec.children().iter().enumerate() {
        let d = child.dim();
        let report = match case {
            Case::A => {
                let gen = gen.clone();
                let child = child.clone();
                check_variogram_cnd(
                    move |lag: &[f64]| {
                        let c = child.eval(lag).unwrap_or(f64::NAN);
                        if !inv_domain.contains(c) {
                            return f64::NAN;
                        }
                        gen.phi_inv(c)
                    },
                    d,
                    40,
                    12,
                    0x5EED + index as u64,
                )
            }
            Case::B => {
                let profile = radial_profile(&gen, child.clone(), d, index)?;
                check_bernstein(profile, &grid, 2)
            }
            Case::C => {
                let child = child.clone();
                let f = move |t: f64| -> f64 {
                    let mut lag = vec![0.0; d];
                    lag[0] = t;
                    let c = child.eval(&lag).unwrap_or(f64::NAN);
                    // Clamp so a compactly supported child reports a wildly
                    // convex exponent instead of a non-finite evaluation.
                    -c.max(1e-280).ln()
                };
                check_concave_increasing(f, &grid)
            }
        }?;
        combined.max_order_checked = combined.max_order_checked.max(report.max_order_checked);
        if report.worst_margin < combined.worst_margin {
            combined.worst_margin = report.worst_margin;
            combined.witness = report.witness;
        }
        combined.passed &= report.passed;
    }
    combined.witness = if combined.passed {
        None
    } else {
        combined.witness
    };
    Ok(combined)
}

/// The radial transformed profile x ↦ φ⁻¹(C(x e₁)) as a checked closure.
fn radial_profile(
    gen: &crate::generator::Generator,
    child: std::sync::Arc<dyn Kernel>,
    dim: usize,
    index: usize,
) -> Result<impl Fn(f64) -> f64> {
    let inv_domain = gen.inv_domain();
    // Probe once at a representative abscissa so range escapes surface as a
    // child-range error rather than a non-finite evaluation mid-check.
    let mut lag = vec![0.0; dim];
    lag[0] = 1.0;
    let probe = child.eval(&lag)?;
    if !inv_domain.contains(probe) {
        return Err(QamError::ChildRange {
            index,
            value: probe,
        });
    }
    let gen = gen.clone();
    Ok(move |t: f64| -> f64 {
        let mut lag = vec![0.0; dim];
        lag[0] = t;
        match child.eval(&lag) {
            Ok(c) if inv_domain.contains(c) => gen.phi_inv(c),
            _ => f64::NAN,
        }
    })
}
