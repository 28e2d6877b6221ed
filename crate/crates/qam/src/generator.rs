//! The catalog of composition generators.
//!
//! A generator is a continuous, strictly monotone function φ with a proper
//! inverse φ⁻¹; composing n covariance values c₁, …, cₙ under weights θ means
//! evaluating φ(Σᵢ θᵢ φ⁻¹(cᵢ)). Each catalog entry carries, besides the pair
//! (φ, φ⁻¹):
//!
//! - its forward and inverse domains, including which infinite or boundary
//!   endpoints are reachable through extended-value conventions
//!   (e.g. 1/0 = ∞, exp(-∞) = 0, ln 0 = -∞, and the positive part (u)₊);
//! - the weight rule its composition imposes (weights summing to one,
//!   all-ones weights, or unconstrained positive weights);
//! - whether φ is completely monotone with φ(0) finite, the property that
//!   feeds the positive-definiteness machinery.
//!
//! Both directions are implemented with `exp_m1`/`ln_1p` forms where the
//! naive expressions would cancel, so that round trips φ(φ⁻¹(t)) stay within
//! a few ulp across the entire inverse domain — including far tails.

use crate::error::{QamError, Result};
use std::fmt;

/// Evaluation direction for [`evaluate`]: the generator itself or its
/// proper inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Rule a weight vector must satisfy under a given generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    /// Nonnegative weights summing to one (within 1e-12).
    SumToOne,
    /// Every weight exactly one (the "plain sum" composition mode).
    TrivialOnes,
    /// Any strictly positive weights.
    Unconstrained,
}

impl fmt::Display for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightRule::SumToOne => write!(f, "sum_to_one"),
            WeightRule::TrivialOnes => write!(f, "trivial_ones"),
            WeightRule::Unconstrained => write!(f, "unconstrained"),
        }
    }
}

/// A real interval with independently open/closed endpoints; infinite
/// endpoints may be closed, meaning the extended value is reachable by
/// convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    const fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Self {
        Interval {
            lo,
            hi,
            lo_open,
            hi_open,
        }
    }

    /// Whether `x` lies in the interval (NaN never does).
    pub fn contains(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_open { '(' } else { '[' };
        let r = if self.hi_open { ')' } else { ']' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// The generator kinds available in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    /// φ(x) = e^{-x}; composition is the weighted geometric mean.
    ExpNeg,
    /// φ(x) = 1/x; composition is the weighted harmonic mean.
    Reciprocal,
    /// φ(x) = M(1 - x/M)₊, self-inverse; composition is the weighted
    /// arithmetic mean of values in [0, M].
    TruncatedLinear,
    /// φ(x) = -ln x (decreasing but not positive; inverse is e^{-x}).
    NegLog,
    /// φ(x) = (1+x)^{-1/λ}, λ > 0.
    Clayton,
    /// φ(x) = e^{-x^{1/λ}}, λ ≥ 1.
    Gumbel,
    /// φ(x) = 1 - (1 - e^{-x})^{1/λ}, λ ≥ 1.
    PowerSeries,
    /// φ(x) = -(1/λ) ln(1 - (1-e^{-λ}) e^{-x}), λ > 0.
    Frank,
    /// φ(x) = x^{-α}, α > 0 (unbounded at 0; inverse domain excludes 0).
    PowerLaw,
}

impl GeneratorKind {
    /// All catalog kinds, in display order.
    pub const ALL: [GeneratorKind; 9] = [
        GeneratorKind::ExpNeg,
        GeneratorKind::Reciprocal,
        GeneratorKind::TruncatedLinear,
        GeneratorKind::NegLog,
        GeneratorKind::Clayton,
        GeneratorKind::Gumbel,
        GeneratorKind::PowerSeries,
        GeneratorKind::Frank,
        GeneratorKind::PowerLaw,
    ];

    /// Stable machine name, as used in config files and error messages.
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::ExpNeg => "exp_neg",
            GeneratorKind::Reciprocal => "reciprocal",
            GeneratorKind::TruncatedLinear => "truncated_linear",
            GeneratorKind::NegLog => "neg_log",
            GeneratorKind::Clayton => "clayton",
            GeneratorKind::Gumbel => "gumbel",
            GeneratorKind::PowerSeries => "power_series",
            GeneratorKind::Frank => "frank",
            GeneratorKind::PowerLaw => "power_law",
        }
    }

    /// Parse a machine name back into a kind.
    pub fn from_name(name: &str) -> Option<GeneratorKind> {
        GeneratorKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Comma-separated list of all valid kind names (for error messages).
    pub fn valid_names() -> String {
        GeneratorKind::ALL
            .iter()
            .map(|k| k.name())
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn arity(&self) -> usize {
        match self {
            GeneratorKind::ExpNeg | GeneratorKind::Reciprocal | GeneratorKind::NegLog => 0,
            _ => 1,
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated generator: a catalog kind together with its parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    kind: GeneratorKind,
    /// The single shape parameter for parametric kinds
    /// (λ for clayton/gumbel/power_series/frank, M for truncated_linear,
    /// α for power_law); 0 sentinel never read for parameter-free kinds.
    param: f64,
}

/// Construct a generator, validating parameter arity and bounds.
pub fn make_generator(kind: GeneratorKind, params: &[f64]) -> Result<Generator> {
    if params.len() != kind.arity() {
        return Err(QamError::Parameter(format!(
            "generator {kind} takes {} parameter(s), got {}",
            kind.arity(),
            params.len()
        )));
    }
    let param = params.first().copied().unwrap_or(0.0);
    if kind.arity() == 1 && !param.is_finite() {
        return Err(QamError::Parameter(format!(
            "generator {kind} requires a finite parameter, got {param}"
        )));
    }
    match kind {
        GeneratorKind::Clayton if param <= 0.0 => Err(QamError::Parameter(format!(
            "clayton requires λ > 0, got λ = {param}"
        ))),
        GeneratorKind::Gumbel if param < 1.0 => Err(QamError::Parameter(format!(
            "gumbel requires λ ≥ 1, got λ = {param}"
        ))),
        GeneratorKind::PowerSeries if param < 1.0 => Err(QamError::Parameter(format!(
            "power_series requires λ ≥ 1, got λ = {param}"
        ))),
        GeneratorKind::Frank if param <= 0.0 => Err(QamError::Parameter(format!(
            "frank requires λ > 0, got λ = {param}"
        ))),
        GeneratorKind::TruncatedLinear if param <= 0.0 => Err(QamError::Parameter(format!(
            "truncated_linear requires M > 0, got M = {param}"
        ))),
        GeneratorKind::PowerLaw if param <= 0.0 => Err(QamError::Parameter(format!(
            "power_law requires α > 0, got α = {param}"
        ))),
        _ => Ok(Generator { kind, param }),
    }
}

impl Generator {
    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// The shape parameter (λ, M or α); meaningless for parameter-free kinds.
    pub fn param(&self) -> f64 {
        self.param
    }

    /// φ(x), total over f64 with the extended-value conventions noted on the
    /// kind. Callers that need domain validation should use [`evaluate`].
    pub fn phi(&self, x: f64) -> f64 {
        let p = self.param;
        match self.kind {
            GeneratorKind::ExpNeg => (-x).exp(),
            GeneratorKind::Reciprocal => 1.0 / x,
            GeneratorKind::TruncatedLinear => (p - x).max(0.0),
            GeneratorKind::NegLog => -x.ln(),
            GeneratorKind::Clayton => (-x.ln_1p() / p).exp(),
            GeneratorKind::Gumbel => (-x.powf(1.0 / p)).exp(),
            GeneratorKind::PowerSeries => {
                // 1 - (1 - e^{-x})^{1/λ}, kept in ln_1p/exp_m1 form so the
                // value is accurate near both x = 0 and x = ∞.
                let ln_base = (-(-x).exp()).ln_1p(); // ln(1 - e^{-x})
                -(ln_base / p).exp_m1()
            }
            GeneratorKind::Frank => {
                let w = -(-p).exp_m1(); // 1 - e^{-λ} ∈ (0, 1)
                -(-w * (-x).exp()).ln_1p() / p
            }
            GeneratorKind::PowerLaw => x.powf(-p),
        }
    }

    /// φ⁻¹(t), total over f64 with the extended-value conventions noted on
    /// the kind. Callers that need domain validation should use [`evaluate`].
    pub fn phi_inv(&self, t: f64) -> f64 {
        let p = self.param;
        match self.kind {
            GeneratorKind::ExpNeg => -t.ln(),
            GeneratorKind::Reciprocal => 1.0 / t,
            GeneratorKind::TruncatedLinear => (p - t).max(0.0),
            GeneratorKind::NegLog => (-t).exp(),
            GeneratorKind::Clayton => (-p * t.ln()).exp_m1(),
            GeneratorKind::Gumbel => (-t.ln()).powf(p),
            GeneratorKind::PowerSeries => {
                // -ln(1 - (1-t)^λ) with the inner difference in exp_m1 form.
                let one_minus_pow = -(p * (-t).ln_1p()).exp_m1(); // 1 - (1-t)^λ
                -one_minus_pow.ln()
            }
            GeneratorKind::Frank => {
                let w = -(-p).exp_m1();
                let ratio = -(-p * t).exp_m1() / w; // (1 - e^{-λt}) / (1 - e^{-λ})
                -ratio.ln()
            }
            GeneratorKind::PowerLaw => t.powf(-1.0 / p),
        }
    }

    /// Domain of φ. Closed infinite endpoints indicate an extended-value
    /// convention (the limit is taken).
    pub fn phi_domain(&self) -> Interval {
        let inf = f64::INFINITY;
        match self.kind {
            GeneratorKind::ExpNeg => Interval::new(-inf, inf, false, false),
            GeneratorKind::Reciprocal => Interval::new(0.0, inf, false, false),
            GeneratorKind::TruncatedLinear => Interval::new(0.0, inf, false, false),
            GeneratorKind::NegLog => Interval::new(0.0, inf, false, false),
            GeneratorKind::Clayton => Interval::new(-1.0, inf, true, false),
            GeneratorKind::Gumbel => Interval::new(0.0, inf, false, false),
            GeneratorKind::PowerSeries => Interval::new(0.0, inf, false, false),
            GeneratorKind::Frank => {
                // 1 - (1-e^{-λ}) e^{-x} must stay positive: x > ln(1-e^{-λ}).
                let w = -(-self.param).exp_m1();
                Interval::new(w.ln(), f64::INFINITY, true, false)
            }
            GeneratorKind::PowerLaw => Interval::new(0.0, inf, false, false),
        }
    }

    /// Domain of φ⁻¹ (equivalently, the closure of the range of φ on which
    /// the inverse is proper). Composed children must take values here.
    pub fn inv_domain(&self) -> Interval {
        let inf = f64::INFINITY;
        match self.kind {
            GeneratorKind::ExpNeg => Interval::new(0.0, inf, false, false),
            GeneratorKind::Reciprocal => Interval::new(0.0, inf, false, false),
            GeneratorKind::TruncatedLinear => Interval::new(0.0, self.param, false, false),
            GeneratorKind::NegLog => Interval::new(-inf, inf, false, false),
            GeneratorKind::Clayton => Interval::new(0.0, inf, false, false),
            GeneratorKind::Gumbel => Interval::new(0.0, 1.0, false, false),
            GeneratorKind::PowerSeries => Interval::new(0.0, 1.0, false, false),
            GeneratorKind::Frank => Interval::new(0.0, inf, false, true),
            // t = 0 is excluded: x^{-α} never reaches 0 from a finite
            // argument, so the inverse has no proper value there.
            GeneratorKind::PowerLaw => Interval::new(0.0, inf, true, false),
        }
    }

    /// Weight rule the composition under this generator imposes.
    pub fn weight_rule(&self) -> WeightRule {
        match self.kind {
            GeneratorKind::ExpNeg
            | GeneratorKind::Reciprocal
            | GeneratorKind::TruncatedLinear => WeightRule::SumToOne,
            _ => WeightRule::Unconstrained,
        }
    }

    /// Whether φ is completely monotone on (0, ∞). This is the property that
    /// lets compositions inherit positive definiteness from their children.
    pub fn cm_flag(&self) -> bool {
        !matches!(
            self.kind,
            GeneratorKind::TruncatedLinear | GeneratorKind::NegLog
        )
    }
}

/// Evaluate a generator in the given direction with domain validation:
/// arguments outside the domain (and not covered by an extended-value
/// convention, which the domain's closed endpoints encode) are an error.
pub fn evaluate(g: &Generator, direction: Direction, x: f64) -> Result<f64> {
    let (domain, which) = match direction {
        Direction::Forward => (g.phi_domain(), "forward"),
        Direction::Inverse => (g.inv_domain(), "inverse"),
    };
    if !domain.contains(x) {
        return Err(QamError::GeneratorDomain {
            kind: g.kind().name(),
            which,
            value: x,
            lo: domain.lo,
            hi: domain.hi,
        });
    }
    Ok(match direction {
        Direction::Forward => g.phi(x),
        Direction::Inverse => g.phi_inv(x),
    })
}

/// One row of the generator catalog.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub kind: GeneratorKind,
    pub parameter: &'static str,
    pub weight_rule: WeightRule,
    pub completely_monotone: bool,
}

/// The full generator catalog with parameter descriptions.
pub fn catalog() -> Vec<CatalogEntry> {
    GeneratorKind::ALL
        .iter()
        .map(|&kind| {
            let parameter = match kind {
                GeneratorKind::ExpNeg | GeneratorKind::Reciprocal | GeneratorKind::NegLog => {
                    "none"
                }
                GeneratorKind::TruncatedLinear => "M > 0 (cap on child values)",
                GeneratorKind::Clayton => "λ > 0",
                GeneratorKind::Gumbel => "λ ≥ 1",
                GeneratorKind::PowerSeries => "λ ≥ 1",
                GeneratorKind::Frank => "λ > 0",
                GeneratorKind::PowerLaw => "α > 0",
            };
            // A representative instance suffices: rule and flag are
            // parameter-independent.
            let g = make_generator(
                kind,
                &vec![1.5; kind.arity()],
            )
            .expect("catalog parameters are in range");
            CatalogEntry {
                kind,
                parameter,
                weight_rule: g.weight_rule(),
                completely_monotone: g.cm_flag(),
            }
        })
        .collect()
}
