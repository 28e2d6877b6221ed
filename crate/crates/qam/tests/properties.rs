//! Randomized invariants of the public API: generator algebra, composition
//! bounds, family symmetries, and text-format round trips.

use proptest::prelude::*;
use qam::compose::{CompositionSpec, Weights};
use qam::config::{parse_grid, read_matrix, write_matrix};
use qam::generator::{make_generator, Generator, GeneratorKind};
use qam::kernel::Exponential;
use qam::nonstationary::{AnisotropyField, CauchyMixture, ParamField};
use qam::qarf::{ExponentFn, MixingF, QarfSpec};
use qam::spacetime::SpaceTimeCov;
use std::sync::Arc;

fn default_generator(kind: GeneratorKind) -> Generator {
    let params: &[f64] = match kind {
        GeneratorKind::TruncatedLinear => &[2.0],
        GeneratorKind::Clayton => &[1.5],
        GeneratorKind::Gumbel => &[3.0],
        GeneratorKind::PowerSeries => &[2.5],
        GeneratorKind::Frank => &[1.0],
        GeneratorKind::PowerLaw => &[0.8],
        _ => &[],
    };
    make_generator(kind, params).expect("catalog parameters are in range")
}

fn any_kind() -> impl Strategy<Value = GeneratorKind> {
    prop::sample::select(GeneratorKind::ALL.to_vec())
}

fn cm_kind() -> impl Strategy<Value = GeneratorKind> {
    let kinds: Vec<GeneratorKind> = GeneratorKind::ALL
        .iter()
        .copied()
        .filter(|&k| default_generator(k).cm_flag())
        .collect();
    prop::sample::select(kinds)
}

/// Map x ∈ [0, 1] into a safe interior slice of the kind's inverse domain
/// (log-spaced where the domain spans decades).
fn inverse_domain_point(kind: GeneratorKind, x: f64) -> f64 {
    let log = |lo: f64, hi: f64| lo * (hi / lo).powf(x);
    let lin = |lo: f64, hi: f64| lo + (hi - lo) * x;
    match kind {
        GeneratorKind::ExpNeg => log(1e-6, 1e3),
        GeneratorKind::Reciprocal => log(1e-6, 1e6),
        GeneratorKind::TruncatedLinear => lin(0.0, 2.0),
        GeneratorKind::NegLog => lin(-4.0, 4.0),
        GeneratorKind::Clayton => log(1e-4, 15.0),
        GeneratorKind::Gumbel => log(1e-6, 1.0),
        GeneratorKind::PowerSeries => log(1e-6, 1.0),
        GeneratorKind::Frank => log(1e-4, 6.0),
        GeneratorKind::PowerLaw => log(1e-4, 1e4),
    }
}

fn two_exponential_children(
    kind: GeneratorKind,
    theta: f64,
) -> Result<CompositionSpec, qam::error::QamError> {
    CompositionSpec::new(
        default_generator(kind),
        vec![
            Arc::new(Exponential::new(1.0, 1)?),
            Arc::new(Exponential::new(1.0, 1)?),
        ],
        Weights::new(vec![theta, 1.0 - theta])?,
        vec![1, 1],
    )
}

fn finite_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e15..1e15f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(-0.0),
        Just(1.0),
        (-300.0..300.0f64).prop_map(f64::exp2),
    ]
}

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(finite_value(), c), r)
    })
}

proptest! {
    /// φ(φ⁻¹(t)) = t to 1e-12 anywhere inside the inverse domain, not just
    /// on the fixed audit grids.
    #[test]
    fn generator_round_trip(kind in any_kind(), x in 0.0..1.0f64) {
        let g = default_generator(kind);
        let t = inverse_domain_point(kind, x);
        let rt = g.phi(g.phi_inv(t));
        prop_assert!(
            (rt - t).abs() <= 1e-12 * t.abs().max(1.0),
            "{kind}: φ(φ⁻¹({t})) = {rt}"
        );
    }

    /// φ is strictly decreasing for every completely monotone kind.
    #[test]
    fn phi_strictly_decreasing(kind in cm_kind(), x1 in 1e-3..30.0f64, gap in 1e-3..5.0f64) {
        let g = default_generator(kind);
        let x2 = x1 + gap;
        prop_assert!(
            g.phi(x1) > g.phi(x2),
            "{kind}: φ({x1}) = {} vs φ({x2}) = {}",
            g.phi(x1),
            g.phi(x2)
        );
    }

    /// Q(f, f) = f for any sum-to-one weight split, any kind.
    #[test]
    fn idempotence_any_weights(
        kind in any_kind(),
        theta in 0.05..0.95f64,
        f in 1e-3..1.0f64,
    ) {
        let spec = two_exponential_children(kind, theta).unwrap();
        let q = spec.combine(&[f, f]).unwrap();
        prop_assert!(
            (q - f).abs() <= 1e-12,
            "{kind} θ = {theta}: Q({f}, {f}) = {q}"
        );
    }

    /// For completely monotone kinds the mean of two correlations stays
    /// between their plain product and their weighted arithmetic mean, for
    /// any sum-to-one weights (the nonnegativity of φ⁻¹ on (0, 1] makes the
    /// product a lower envelope for every split).
    #[test]
    fn sandwich_any_weights(
        kind in cm_kind(),
        theta in 0.05..0.95f64,
        l1 in 0.0..6.0f64,
        l2 in 0.0..6.0f64,
    ) {
        let spec = two_exponential_children(kind, theta).unwrap();
        let (c1, c2) = ((-l1).exp(), (-l2).exp());
        let q = spec.combine(&[c1, c2]).unwrap();
        let lower = c1 * c2;
        let upper = theta * c1 + (1.0 - theta) * c2;
        prop_assert!(
            q >= lower - 1e-10 && q <= upper + 1e-10,
            "{kind} θ = {theta}: Q = {q} outside [{lower}, {upper}]"
        );
    }

    /// Swapping children together with their weights leaves the mean
    /// unchanged.
    #[test]
    fn permutation_symmetry(
        kind in any_kind(),
        theta in 0.05..0.95f64,
        f1 in 1e-2..1.0f64,
        f2 in 1e-2..1.0f64,
    ) {
        let forward = two_exponential_children(kind, theta).unwrap();
        let swapped = two_exponential_children(kind, 1.0 - theta).unwrap();
        let a = forward.combine(&[f1, f2]).unwrap();
        let b = swapped.combine(&[f2, f1]).unwrap();
        prop_assert!(
            (a - b).abs() <= 1e-13 * a.abs().max(1.0),
            "{kind}: {a} vs {b}"
        );
    }

    /// Space-time families depend on the lag only through (‖h‖, |u|), so
    /// reflections change nothing, bit for bit.
    #[test]
    fn spacetime_reflection_symmetry(
        family in 0usize..4,
        sigma2 in 0.5..2.0f64,
        l1 in 0.0..1.0f64,
        l2 in 0.0..1.0f64,
        l3 in 0.0..1.0f64,
        h in prop::array::uniform3(-3.0..3.0f64),
        u in -3.0..3.0f64,
    ) {
        let cov = match family {
            0 => SpaceTimeCov::clayton(sigma2, 0.2 + 0.7 * l1, 1.05 + l2, 1.05 + l3, 3),
            1 => SpaceTimeCov::gumbel(sigma2, 1.0 + 0.5 * l1, 1.6 + l2, 1.6 + l3, 3),
            2 => SpaceTimeCov::power_series(1.0 + 0.8 * l1, 2.0 + l2, 2.0 + l3, 3),
            _ => {
                let alpha = 0.3 + 0.6 * l1;
                SpaceTimeCov::cauchy_margins(
                    alpha,
                    0.5 + 1.4 * l2,
                    alpha + 0.1 + l3,
                    alpha * (1.0 + 0.9 * l2.max(0.05)),
                    3,
                )
            }
        }
        .unwrap();
        let neg_h = [-h[0], -h[1], -h[2]];
        let base = cov.eval(&h, u).unwrap();
        prop_assert_eq!(base.to_bits(), cov.eval(&neg_h, u).unwrap().to_bits());
        prop_assert_eq!(base.to_bits(), cov.eval(&h, -u).unwrap().to_bits());
        // Bounds: positive, never above the origin value.
        let origin = cov.eval(&[0.0, 0.0, 0.0], 0.0).unwrap();
        prop_assert!(base > 0.0);
        prop_assert!(base <= origin + 1e-12, "C = {base} above C(0,0) = {origin}");
    }

    /// Mixed product fields: unit value at the origin, bounded by the
    /// variance, and symmetric under joint sign flips.
    #[test]
    fn qarf_origin_bound_symmetry(
        beta1 in 0.3..1.0f64,
        beta2 in 0.3..1.0f64,
        coeff in 0.3..2.0f64,
        shape in 0.6..3.0f64,
        rate in 0.5..2.0f64,
        variance in 0.5..3.0f64,
        h in prop::array::uniform2(-4.0..4.0f64),
        u in -4.0..4.0f64,
    ) {
        let spec = QarfSpec::new(
            vec![
                ExponentFn::Power { coeff, exponent: beta1 },
                ExponentFn::Power { coeff: 1.0, exponent: beta2 },
            ],
            ExponentFn::Power { coeff: 1.0, exponent: 1.0 },
            MixingF::Gamma { shape, rate },
            variance,
        )
        .unwrap();
        let origin = spec.theoretical_cov(&[0.0, 0.0], 0.0).unwrap();
        prop_assert_eq!(origin.to_bits(), variance.to_bits());
        let c = spec.theoretical_cov(&h, u).unwrap();
        prop_assert!(c > 0.0 && c <= variance);
        let flipped = spec.theoretical_cov(&[-h[0], -h[1]], -u).unwrap();
        prop_assert_eq!(c.to_bits(), flipped.to_bits());
    }

    /// Matrix CSV writes round-trip bit-exactly (shortest-representation
    /// float formatting).
    #[test]
    fn matrix_round_trip(m in matrix()) {
        let mut buf: Vec<u8> = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let back = read_matrix(&buf[..]).unwrap();
        prop_assert_eq!(back.len(), m.len());
        for (row_in, row_out) in m.iter().zip(&back) {
            prop_assert_eq!(row_in.len(), row_out.len());
            for (a, b) in row_in.iter().zip(row_out) {
                prop_assert_eq!(a.to_bits(), b.to_bits(), "{} re-read as {}", a, b);
            }
        }
    }

    /// Grid text expands to the full Cartesian product: row count is the
    /// product of axis counts, the first point sits at the starts, every
    /// axis ends at its stop, and the last axis varies fastest.
    #[test]
    fn grid_cartesian_product(
        axes in prop::collection::vec((-5.0..5.0f64, 0.5..4.0f64, 1usize..6), 1..4),
    ) {
        let text = axes
            .iter()
            .map(|(start, span, count)| format!("{start}:{}:{count}", start + span))
            .collect::<Vec<_>>()
            .join(";");
        let points = parse_grid(&text).unwrap();
        let expected: usize = axes.iter().map(|&(_, _, c)| c).product();
        prop_assert_eq!(points.len(), expected);
        for (axis, &(start, _, _)) in axes.iter().enumerate() {
            prop_assert_eq!(points[0][axis].to_bits(), start.to_bits());
        }
        let last = points.last().unwrap();
        for (axis, &(start, span, count)) in axes.iter().enumerate() {
            let stop = if count == 1 { start } else { start + span };
            prop_assert!(
                (last[axis] - stop).abs() <= 1e-9 * stop.abs().max(1.0),
                "axis {axis} ends at {} not {stop}",
                last[axis]
            );
        }
        let (_, _, last_count) = *axes.last().unwrap();
        if last_count > 1 {
            let k = axes.len();
            prop_assert_eq!(&points[1][..k - 1], &points[0][..k - 1]);
            prop_assert_ne!(points[1][k - 1], points[0][k - 1]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The location-mixture quadrature is symmetric in its two sites.
    #[test]
    fn nonstationary_quadrature_symmetry(
        a in 0.5..1.5f64,
        b in 0.0..0.5f64,
        s1 in prop::array::uniform2(0.0..1.0f64),
        s2 in prop::array::uniform2(0.0..1.0f64),
    ) {
        let field = AnisotropyField::scalar_quadratic(1.0, 0.1, 2).unwrap();
        let cov = CauchyMixture::new(
            field,
            0.5,
            ParamField::Quadratic { a, b: 0.25 * b },
            ParamField::Quadratic { a: 0.8 * a, b },
        )
        .unwrap();
        let forward = cov.eval_quadrature(&s1, &s2, 1e-7).unwrap();
        let reverse = cov.eval_quadrature(&s2, &s1, 1e-7).unwrap();
        prop_assert!(
            (forward - reverse).abs() <= 1e-12 * forward.abs().max(1.0),
            "{forward} vs {reverse}"
        );
    }
}
