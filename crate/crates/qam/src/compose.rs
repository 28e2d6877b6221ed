//! Weighted composition of covariance kernels under a generator.
//!
//! Given a generator φ, children C₁, …, Cₙ on lag blocks of dimensions
//! d₁, …, dₙ and weights θ, the composed kernel evaluates
//!
//! ```text
//! Q(x) = φ( Σᵢ θᵢ · φ⁻¹( Cᵢ(xᵢ) ) ),     x = (x₁, …, xₙ)
//! ```
//!
//! Two weighting modes exist. In the default weighted mode the weight vector
//! must satisfy the generator's rule (for instance, the geometric, harmonic
//! and arithmetic compositions require Σθᵢ = 1, which is also exactly the
//! condition for idempotence: composing n copies of the same value returns
//! that value). In Archimedean mode every weight is fixed at one and the
//! inner sum is a plain sum — the mode under which the space-time families
//! are built.
//!
//! Extended values flow through composition naturally: a child value of 0
//! maps under the completely monotone generators to φ⁻¹(0) = +∞, the sum
//! becomes +∞, and φ(+∞) = 0 — a zero covariance stays zero. A weight of 0
//! removes its child entirely (the product 0 · ∞ is taken as 0).

use crate::error::{QamError, Result};
use crate::generator::{Generator, WeightRule};
use crate::kernel::Kernel;
use std::sync::Arc;

/// A validated weight vector: finite, nonnegative, not all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(QamError::Weights("weight vector is empty".into()));
        }
        for (i, &w) in values.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(QamError::Weights(format!(
                    "weight {i} must be finite and ≥ 0, got {w}"
                )));
            }
        }
        if values.iter().all(|&w| w == 0.0) {
            return Err(QamError::Weights("all weights are zero".into()));
        }
        Ok(Weights(values))
    }

    /// All-ones weights of length n (Archimedean mode).
    pub fn trivial(n: usize) -> Self {
        Weights(vec![1.0; n])
    }

    /// Equal weights 1/n (sum-to-one by construction).
    pub fn equal(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(QamError::Weights("weight vector is empty".into()));
        }
        Ok(Weights(vec![1.0 / n as f64; n]))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Check this vector against a generator's weight rule.
    pub fn validate(&self, rule: WeightRule) -> Result<()> {
        match rule {
            WeightRule::SumToOne => {
                let s: f64 = self.0.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(QamError::Weights(format!(
                        "rule sum_to_one requires Σθᵢ = 1 (within 1e-12), got Σθᵢ = {s}"
                    )));
                }
            }
            WeightRule::TrivialOnes => {
                if self.0.iter().any(|&w| w != 1.0) {
                    return Err(QamError::Weights(
                        "rule trivial_ones requires every θᵢ = 1".into(),
                    ));
                }
            }
            WeightRule::Unconstrained => {}
        }
        Ok(())
    }
}

/// Whether a composition carries rule-validated weights or the plain-sum
/// (all-ones) Archimedean form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionMode {
    Weighted,
    Archimedean,
}

/// A validated description of a composition: generator, children, weights
/// and the partition of the lag coordinates among the children.
#[derive(Clone)]
pub struct CompositionSpec {
    generator: Generator,
    children: Vec<Arc<dyn Kernel>>,
    weights: Weights,
    partition: Vec<usize>,
    mode: CompositionMode,
}

impl CompositionSpec {
    /// Weighted-mode composition; the weights must satisfy the generator's
    /// rule, the partition must match the children's dimensions, and at
    /// least two children are required.
    pub fn new(
        generator: Generator,
        children: Vec<Arc<dyn Kernel>>,
        weights: Weights,
        partition: Vec<usize>,
    ) -> Result<Self> {
        weights.validate(generator.weight_rule())?;
        Self::build(generator, children, weights, partition, CompositionMode::Weighted)
    }

    /// Archimedean-mode composition: every weight is one regardless of the
    /// generator's weighted-mode rule.
    pub fn archimedean(
        generator: Generator,
        children: Vec<Arc<dyn Kernel>>,
        partition: Vec<usize>,
    ) -> Result<Self> {
        let weights = Weights::trivial(children.len());
        Self::build(
            generator,
            children,
            weights,
            partition,
            CompositionMode::Archimedean,
        )
    }

    fn build(
        generator: Generator,
        children: Vec<Arc<dyn Kernel>>,
        weights: Weights,
        partition: Vec<usize>,
        mode: CompositionMode,
    ) -> Result<Self> {
        let n = children.len();
        if n < 2 {
            return Err(QamError::Dimension(format!(
                "a composition needs at least 2 children, got {n}"
            )));
        }
        if weights.len() != n {
            return Err(QamError::Dimension(format!(
                "got {n} children but {} weights",
                weights.len()
            )));
        }
        if partition.len() != n {
            return Err(QamError::Dimension(format!(
                "got {n} children but a partition of {} blocks",
                partition.len()
            )));
        }
        for (i, (&d, child)) in partition.iter().zip(&children).enumerate() {
            if d == 0 {
                return Err(QamError::Dimension(format!(
                    "partition block {i} is empty"
                )));
            }
            if d != child.dim() {
                return Err(QamError::Dimension(format!(
                    "partition block {i} has {d} coordinate(s) but child {i} expects {}",
                    child.dim()
                )));
            }
        }
        Ok(CompositionSpec {
            generator,
            children,
            weights,
            partition,
            mode,
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn children(&self) -> &[Arc<dyn Kernel>] {
        &self.children
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn mode(&self) -> CompositionMode {
        self.mode
    }

    /// Total lag dimension Σᵢ dᵢ.
    pub fn total_dim(&self) -> usize {
        self.partition.iter().sum()
    }

    /// The raw child values (C₁(x₁), …, Cₙ(xₙ)) at a full lag vector.
    pub fn child_values(&self, lag: &[f64]) -> Result<Vec<f64>> {
        if lag.len() != self.total_dim() {
            return Err(QamError::Dimension(format!(
                "composition expects lag of dimension {}, got {}",
                self.total_dim(),
                lag.len()
            )));
        }
        let mut values = Vec::with_capacity(self.children.len());
        let mut offset = 0;
        for (child, &d) in self.children.iter().zip(&self.partition) {
            values.push(child.eval(&lag[offset..offset + d])?);
            offset += d;
        }
        Ok(values)
    }

    /// Combine already-evaluated child values through φ(Σθᵢφ⁻¹(·)).
    pub fn combine(&self, child_values: &[f64]) -> Result<f64> {
        let inv_domain = self.generator.inv_domain();
        let mut acc = 0.0_f64;
        for (i, (&v, &w)) in child_values.iter().zip(self.weights.values()).enumerate() {
            if w == 0.0 {
                continue; // zero weight removes the child (0·∞ read as 0)
            }
            if !inv_domain.contains(v) {
                return Err(QamError::ChildRange { index: i, value: v });
            }
            acc += w * self.generator.phi_inv(v);
        }
        let out = self.generator.phi(acc);
        if out.is_nan() {
            return Err(QamError::NonFinite {
                at: acc,
                value: out,
            });
        }
        Ok(out)
    }
}

impl std::fmt::Debug for CompositionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositionSpec")
            .field("generator", &self.generator)
            .field("n", &self.children.len())
            .field("weights", &self.weights)
            .field("partition", &self.partition)
            .field("mode", &self.mode)
            .finish()
    }
}

/// The kernel a composition evaluates to.
#[derive(Clone)]
pub struct ComposedKernel {
    spec: CompositionSpec,
}

impl ComposedKernel {
    pub fn spec(&self) -> &CompositionSpec {
        &self.spec
    }
}

impl Kernel for ComposedKernel {
    fn eval(&self, lag: &[f64]) -> Result<f64> {
        let values = self.spec.child_values(lag)?;
        self.spec.combine(&values)
    }
    fn dim(&self) -> usize {
        self.spec.total_dim()
    }
}

/// Build the kernel a composition spec describes.
pub fn compose(spec: CompositionSpec) -> ComposedKernel {
    ComposedKernel { spec }
}

/// Nest an existing composition one level deeper:
/// Q_outer(Q_inner(C₁, …, Cₖ), E₁, …, E_m) with the given outer weights.
///
/// With no extra children the outer layer is the identity
/// φ(1 · φ⁻¹(inner)) = inner, so the inner spec itself is returned; in that
/// case the single outer weight must be 1.
pub fn nest(
    outer: Generator,
    inner: &CompositionSpec,
    extra_children: Vec<Arc<dyn Kernel>>,
    weights: Weights,
) -> Result<CompositionSpec> {
    if extra_children.is_empty() {
        if weights.values() != [1.0] {
            return Err(QamError::Weights(
                "nesting without extra children is the identity and requires the single weight 1"
                    .into(),
            ));
        }
        return Ok(inner.clone());
    }
    let mut partition = vec![inner.total_dim()];
    partition.extend(extra_children.iter().map(|c| c.dim()));
    let mut children: Vec<Arc<dyn Kernel>> = vec![Arc::new(compose(inner.clone()))];
    children.extend(extra_children);
    CompositionSpec::new(outer, children, weights, partition)
}

/// Result of a pairwise subadditivity probe of g = φ₁⁻¹ ∘ φ₂.
#[derive(Debug, Clone, PartialEq)]
pub struct SubadditivityReport {
    /// Whether g(a+b) ≤ g(a) + g(b) held for every probed pair.
    pub holds: bool,
    /// A violating pair (a, b), if any; the worst violation found.
    pub witness: Option<(f64, f64)>,
}

/// Probe whether g = φ₁⁻¹ ∘ φ₂ is subadditive on all pairs from `grid`
/// (a sufficient condition for the φ₁- and φ₂-compositions to be ordered).
///
/// The grid must contain positive abscissae; the pair is non-composable —
/// a precondition error — if φ₂'s values escape the domain of φ₁⁻¹.
pub fn check_subadditive(
    g1: &Generator,
    g2: &Generator,
    grid: &[f64],
) -> Result<SubadditivityReport> {
    if grid.is_empty() {
        return Err(QamError::Precondition(
            "subadditivity probe needs a non-empty grid".into(),
        ));
    }
    let inv1 = g1.inv_domain();
    let g = |x: f64| -> Result<f64> {
        let t = g2.phi(x);
        if !inv1.contains(t) {
            return Err(QamError::Precondition(format!(
                "generators are not composable: φ₂({x}) = {t} escapes the inverse domain {} of {}",
                inv1,
                g1.kind()
            )));
        }
        Ok(g1.phi_inv(t))
    };
    let mut worst: Option<(f64, f64, f64)> = None;
    for &a in grid {
        for &b in grid {
            let lhs = g(a + b)?;
            let (ga, gb) = (g(a)?, g(b)?);
            let slack = 1e-12 * (1.0 + ga.abs() + gb.abs());
            let excess = lhs - (ga + gb);
            if excess > slack && worst.is_none_or(|(_, _, e)| excess > e) {
                worst = Some((a, b, excess));
            }
        }
    }
    Ok(SubadditivityReport {
        holds: worst.is_none(),
        witness: worst.map(|(a, b, _)| (a, b)),
    })
}

/// Pairwise pointwise-ordering verdicts between composed kernels, plus an
/// envelope check of each composition against the product of its child
/// values (lower) and their θ-weighted arithmetic mean (upper).
#[derive(Debug, Clone)]
pub struct OrderingReport {
    /// `pointwise_le[i][j]`: spec i ≤ spec j at every probe point
    /// (within slack 1e-12); the diagonal is trivially true.
    pub pointwise_le: Vec<Vec<bool>>,
    /// For each false entry, the index of a violating probe point.
    pub witness: Vec<Vec<Option<usize>>>,
    /// Per spec: Πᵢ Cᵢ ≤ Q ≤ Σᵢ θᵢ Cᵢ at every probe point, evaluated only
    /// where all child values lie in (0, 1] (None where they do not).
    pub envelope_ok: Vec<Option<bool>>,
}

/// Evaluate each spec at each probe point and compare them pairwise, with
/// product/arithmetic envelope checks per spec.
pub fn ordering_report(
    specs: &[CompositionSpec],
    points: &[Vec<f64>],
) -> Result<OrderingReport> {
    if specs.is_empty() || points.is_empty() {
        return Err(QamError::Precondition(
            "ordering report needs at least one spec and one probe point".into(),
        ));
    }
    let n = specs.len();
    let mut values = vec![vec![0.0_f64; points.len()]; n];
    let mut envelope_ok: Vec<Option<bool>> = vec![None; n];
    for (k, spec) in specs.iter().enumerate() {
        let mut all_in_unit = true;
        let mut env_holds = true;
        for (p, point) in points.iter().enumerate() {
            let children = spec.child_values(point)?;
            let q = spec.combine(&children)?;
            values[k][p] = q;
            if children.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
                all_in_unit = false;
                continue;
            }
            let lower: f64 = children.iter().product();
            let upper: f64 = children
                .iter()
                .zip(spec.weights().values())
                .map(|(c, w)| c * w)
                .sum();
            let slack = 1e-12;
            if q < lower - slack || q > upper + slack {
                env_holds = false;
            }
        }
        if all_in_unit {
            envelope_ok[k] = Some(env_holds);
        }
    }
    let mut pointwise_le = vec![vec![true; n]; n];
    let mut witness = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            for (p, (vi, vj)) in values[i].iter().zip(&values[j]).enumerate() {
                if *vi > *vj + 1e-12 {
                    pointwise_le[i][j] = false;
                    witness[i][j] = Some(p);
                    break;
                }
            }
        }
    }
    Ok(OrderingReport {
        pointwise_le,
        witness,
        envelope_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{make_generator, GeneratorKind};
    use crate::kernel::{Constant, Exponential};

    fn gen(kind: GeneratorKind, params: &[f64]) -> Generator {
        make_generator(kind, params).unwrap()
    }

    fn consts(values: &[f64]) -> Vec<Arc<dyn Kernel>> {
        values
            .iter()
            .map(|&v| Arc::new(Constant::new(v, 1).unwrap()) as Arc<dyn Kernel>)
            .collect()
    }

    #[test]
    fn geometric_mean_of_exponentials_is_exact() {
        // Under φ = e^{-x}: Q(h₁, h₂) = exp(-θ₁|h₁| - θ₂|h₂|).
        let spec = CompositionSpec::new(
            gen(GeneratorKind::ExpNeg, &[]),
            vec![
                Arc::new(Exponential::new(1.0, 1).unwrap()),
                Arc::new(Exponential::new(1.0, 1).unwrap()),
            ],
            Weights::new(vec![0.3, 0.7]).unwrap(),
            vec![1, 1],
        )
        .unwrap();
        let k = compose(spec);
        let got = k.eval(&[2.0, 0.5]).unwrap();
        let want = (-0.3 * 2.0 - 0.7 * 0.5_f64).exp();
        assert!((got - want).abs() < 1e-15, "got {got}, want {want}");
    }

    #[test]
    fn harmonic_mean_of_constants() {
        // 1 / (0.5/0.2 + 0.5/0.8) = 0.32.
        let spec = CompositionSpec::new(
            gen(GeneratorKind::Reciprocal, &[]),
            consts(&[0.2, 0.8]),
            Weights::equal(2).unwrap(),
            vec![1, 1],
        )
        .unwrap();
        let got = compose(spec).eval(&[0.0, 0.0]).unwrap();
        assert!((got - 0.32).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn arithmetic_mean_via_truncated_linear() {
        let spec = CompositionSpec::new(
            gen(GeneratorKind::TruncatedLinear, &[10.0]),
            consts(&[4.0, 9.0]),
            Weights::new(vec![0.25, 0.75]).unwrap(),
            vec![1, 1],
        )
        .unwrap();
        let got = compose(spec).eval(&[0.0, 0.0]).unwrap();
        let want = 0.25 * 4.0 + 0.75 * 9.0;
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }

    #[test]
    fn idempotence_spot_check() {
        // Equal values compose to themselves under sum-to-one weights.
        for kind in GeneratorKind::ALL {
            let params: Vec<f64> = match kind {
                GeneratorKind::ExpNeg | GeneratorKind::Reciprocal | GeneratorKind::NegLog => {
                    vec![]
                }
                GeneratorKind::TruncatedLinear => vec![2.0],
                _ => vec![1.5],
            };
            let g = gen(kind, &params);
            let rule = g.weight_rule();
            let spec = CompositionSpec::new(
                g,
                consts(&[0.37, 0.37]),
                Weights::new(vec![0.5, 0.5]).unwrap(),
                vec![1, 1],
            )
            .unwrap();
            assert!(matches!(rule, WeightRule::SumToOne | WeightRule::Unconstrained));
            let got = compose(spec).eval(&[0.0, 0.0]).unwrap();
            assert!(
                (got - 0.37).abs() < 1e-13,
                "{kind}: Q(c, c) = {got}, want 0.37"
            );
        }
    }

    #[test]
    fn zero_child_value_composes_to_zero() {
        let spec = CompositionSpec::new(
            gen(GeneratorKind::Clayton, &[1.0]),
            consts(&[0.0, 0.5]),
            Weights::new(vec![1.0, 2.0]).unwrap(),
            vec![1, 1],
        )
        .unwrap();
        assert_eq!(compose(spec).eval(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn zero_weight_removes_child_even_at_zero_value() {
        // θ = 0 against φ⁻¹(0) = ∞ must not produce NaN.
        let spec = CompositionSpec::new(
            gen(GeneratorKind::Clayton, &[1.0]),
            consts(&[0.0, 0.5]),
            Weights::new(vec![0.0, 1.0]).unwrap(),
            vec![1, 1],
        )
        .unwrap();
        let got = compose(spec).eval(&[0.0, 0.0]).unwrap();
        assert!((got - 0.5).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn child_range_escape_names_the_child() {
        let spec = CompositionSpec::new(
            gen(GeneratorKind::Gumbel, &[2.0]),
            consts(&[0.5, 1.5]), // 1.5 escapes gumbel's inverse domain [0, 1]
            Weights::new(vec![1.0, 1.0]).unwrap(),
            vec![1, 1],
        )
        .unwrap();
        match compose(spec).eval(&[0.0, 0.0]) {
            Err(QamError::ChildRange { index, value }) => {
                assert_eq!(index, 1);
                assert_eq!(value, 1.5);
            }
            other => panic!("expected ChildRange, got {other:?}"),
        }
    }

    #[test]
    fn construction_validations() {
        let g = gen(GeneratorKind::ExpNeg, &[]);
        // Weight rule violation: geometric needs Σθ = 1.
        assert!(CompositionSpec::new(
            g.clone(),
            consts(&[0.5, 0.5]),
            Weights::new(vec![1.0, 1.0]).unwrap(),
            vec![1, 1],
        )
        .is_err());
        // Fewer than two children.
        assert!(CompositionSpec::new(
            g.clone(),
            consts(&[0.5]),
            Weights::new(vec![1.0]).unwrap(),
            vec![1],
        )
        .is_err());
        // Partition/children mismatch.
        assert!(CompositionSpec::new(
            g.clone(),
            consts(&[0.5, 0.5]),
            Weights::equal(2).unwrap(),
            vec![1, 2],
        )
        .is_err());
        // Archimedean mode bypasses the sum-to-one rule.
        let arch = CompositionSpec::archimedean(g, consts(&[0.5, 0.5]), vec![1, 1]).unwrap();
        assert_eq!(arch.mode(), CompositionMode::Archimedean);
        let got = compose(arch).eval(&[0.0, 0.0]).unwrap();
        assert!((got - 0.25).abs() < 1e-15); // e^{-(ln2 + ln2)} = 1/4
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::new(vec![]).is_err());
        assert!(Weights::new(vec![0.5, -0.1]).is_err());
        assert!(Weights::new(vec![0.0, 0.0]).is_err());
        assert!(Weights::new(vec![f64::INFINITY]).is_err());
        let w = Weights::new(vec![0.5, 0.5]).unwrap();
        assert!(w.validate(WeightRule::SumToOne).is_ok());
        assert!(w.validate(WeightRule::TrivialOnes).is_err());
        assert!(Weights::trivial(3).validate(WeightRule::TrivialOnes).is_ok());
    }

    #[test]
    fn nest_without_extras_is_identity() {
        let inner = CompositionSpec::new(
            gen(GeneratorKind::ExpNeg, &[]),
            consts(&[0.3, 0.6]),
            Weights::equal(2).unwrap(),
            vec![1, 1],
        )
        .unwrap();
        let inner_val = compose(inner.clone()).eval(&[0.0, 0.0]).unwrap();
        let nested = nest(
            gen(GeneratorKind::Clayton, &[1.0]),
            &inner,
            vec![],
            Weights::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        let nested_val = compose(nested).eval(&[0.0, 0.0]).unwrap();
        assert_eq!(inner_val, nested_val);
        // Wrong identity weight is rejected.
        assert!(nest(
            gen(GeneratorKind::Clayton, &[1.0]),
            &inner,
            vec![],
            Weights::new(vec![0.5]).unwrap(),
        )
        .is_err());
    }

    #[test]
    fn nest_with_extras_matches_manual_evaluation() {
        let inner = CompositionSpec::archimedean(
            gen(GeneratorKind::ExpNeg, &[]),
            consts(&[0.3, 0.6]),
            vec![1, 1],
        )
        .unwrap();
        let outer_gen = gen(GeneratorKind::Clayton, &[2.0]);
        let nested = nest(
            outer_gen.clone(),
            &inner,
            consts(&[0.8]),
            Weights::new(vec![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(nested.total_dim(), 3);
        let got = compose(nested).eval(&[0.0, 0.0, 0.0]).unwrap();
        let inner_val = 0.3 * 0.6_f64;
        let want = outer_gen.phi(outer_gen.phi_inv(inner_val) + outer_gen.phi_inv(0.8));
        assert!((got - want).abs() < 1e-15, "got {got}, want {want}");
    }

    #[test]
    fn subadditivity_probe_finds_known_verdicts() {
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.35).collect();
        // Same generator: g is the identity, additive, so subadditive.
        let e = gen(GeneratorKind::ExpNeg, &[]);
        assert!(check_subadditive(&e, &e, &grid).unwrap().holds);
        // φ₁ = gumbel(2), φ₂ = e^{-x}: g(t) = t², strictly superadditive.
        let g2 = gen(GeneratorKind::Gumbel, &[2.0]);
        let report = check_subadditive(&g2, &e, &grid).unwrap();
        assert!(!report.holds);
        assert!(report.witness.is_some());
        // The reverse direction: g(t) = √t, subadditive.
        assert!(check_subadditive(&e, &g2, &grid).unwrap().holds);
        // Non-composable: reciprocal values exceed gumbel's inverse domain.
        let r = gen(GeneratorKind::Reciprocal, &[]);
        assert!(matches!(
            check_subadditive(&g2, &r, &[0.25]),
            Err(QamError::Precondition(_))
        ));
    }

    #[test]
    fn ordering_of_harmonic_geometric_arithmetic() {
        let children = consts(&[0.2, 0.8]);
        let w = Weights::equal(2).unwrap();
        let harmonic = CompositionSpec::new(
            gen(GeneratorKind::Reciprocal, &[]),
            children.clone(),
            w.clone(),
            vec![1, 1],
        )
        .unwrap();
        let geometric = CompositionSpec::new(
            gen(GeneratorKind::ExpNeg, &[]),
            children.clone(),
            w.clone(),
            vec![1, 1],
        )
        .unwrap();
        let arithmetic = CompositionSpec::new(
            gen(GeneratorKind::TruncatedLinear, &[1.0]),
            children,
            w,
            vec![1, 1],
        )
        .unwrap();
        let report =
            ordering_report(&[harmonic, geometric, arithmetic], &[vec![0.0, 0.0]]).unwrap();
        // 0.32 ≤ 0.4 ≤ 0.5.
        assert!(report.pointwise_le[0][1]);
        assert!(report.pointwise_le[1][2]);
        assert!(report.pointwise_le[0][2]);
        assert!(!report.pointwise_le[2][0]);
        assert_eq!(report.witness[2][0], Some(0));
        for env in &report.envelope_ok {
            assert_eq!(*env, Some(true));
        }
    }
}
