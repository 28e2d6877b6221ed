//! JSON model specifications and tabular I/O for the batch front end.
//!
//! A spec file is a single JSON object whose top-level marker key selects
//! the model class:
//!
//! | marker      | model                                           |
//! |-------------|-------------------------------------------------|
//! | `kernel`    | plain stationary kernel                         |
//! | `generator` | quasi-arithmetic composition                    |
//! | `family`    | space-time covariance family                    |
//! | `nu_s`      | product random field (exponents + mixing law)   |
//! | `model`     | nonstationary mixture covariance                |
//!
//! Parsing is strict: unknown keys and unknown enum names are rejected with
//! messages that list the valid options, so a typo never silently falls
//! back to a default. Every accepted spec is fully validated through the
//! library constructors before any engine runs.

use crate::compose::{CompositionSpec, Weights};
use crate::error::{QamError, Result};
use crate::generator::{make_generator, Generator, GeneratorKind};
use crate::kernel::{
    Constant, Exponential, GeneralizedCauchy, Kernel, PowerSeriesMargin, Scaled, Spherical,
    StretchedExponential,
};
use crate::nonstationary::{
    stein_covariance, AnisotropyField, BesselMixture, CauchyMixture, GFactor, MixtureMeasure,
    MixtureSpec, ParamField,
};
use crate::qarf::{ExponentFn, MixingF, QarfSpec};
use crate::spacetime::{SpaceTimeCov, VariogramSpec};
use nalgebra::DMatrix;
use serde_json::{Map, Value};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

/// A parsed and validated model.
pub enum Model {
    Kernel(Arc<dyn Kernel>),
    Composition(CompositionSpec),
    SpaceTime(SpaceTimeCov),
    Qarf(QarfSpec),
    Mixture(MixtureModel),
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Kernel(_) => "Model::Kernel",
            Model::Composition(_) => "Model::Composition",
            Model::SpaceTime(_) => "Model::SpaceTime",
            Model::Qarf(_) => "Model::Qarf",
            Model::Mixture(_) => "Model::Mixture",
        })
    }
}

impl Model {
    /// A stationary view usable for lag evaluation and Gram assembly.
    /// Nonstationary mixtures have no such view.
    pub fn lag_kernel(&self) -> Result<Arc<dyn Kernel>> {
        match self {
            Model::Kernel(k) => Ok(Arc::clone(k)),
            Model::Composition(spec) => Ok(Arc::new(crate::compose::compose(spec.clone()))),
            Model::SpaceTime(cov) => Ok(Arc::new(cov.clone())),
            Model::Qarf(spec) => Ok(Arc::new(spec.clone())),
            Model::Mixture(_) => Err(QamError::Config(
                "a nonstationary mixture has no stationary lag view; use the nonstat subcommand"
                    .into(),
            )),
        }
    }
}

/// A nonstationary mixture model with its available engines.
#[derive(Debug, Clone)]
pub enum MixtureModel {
    Cauchy(CauchyMixture),
    Bessel(BesselMixture),
    Stein {
        anisotropy: AnisotropyField,
        shape: f64,
        rate: f64,
    },
    General(MixtureSpec),
}

impl MixtureModel {
    pub fn dim(&self) -> usize {
        match self {
            MixtureModel::Cauchy(m) => m.anisotropy().dim(),
            MixtureModel::Bessel(m) => m.anisotropy().dim(),
            MixtureModel::Stein { anisotropy, .. } => anisotropy.dim(),
            MixtureModel::General(m) => m.dim(),
        }
    }

    /// Evaluate by adaptive quadrature over the mixing variable.
    pub fn quadrature(&self, s1: &[f64], s2: &[f64], rel_tol: f64) -> Result<f64> {
        match self {
            MixtureModel::Cauchy(m) => m.eval_quadrature(s1, s2, rel_tol),
            MixtureModel::Bessel(m) => m.eval_quadrature(s1, s2, rel_tol),
            MixtureModel::Stein {
                anisotropy,
                shape,
                rate,
            } => MixtureSpec::new(
                anisotropy.clone(),
                make_generator(GeneratorKind::ExpNeg, &[])?,
                GFactor::One,
                MixtureMeasure::Gamma {
                    shape: *shape,
                    rate: *rate,
                },
            )?
            .eval_quadrature(s1, s2, rel_tol),
            MixtureModel::General(m) => m.eval_quadrature(s1, s2, rel_tol),
        }
    }

    /// Evaluate by the model's closed form, where one exists.
    pub fn closed_form(&self, s1: &[f64], s2: &[f64]) -> Result<f64> {
        match self {
            MixtureModel::Cauchy(m) => m.eval_closed(s1, s2),
            MixtureModel::Bessel(m) => m.eval_closed(s1, s2),
            MixtureModel::Stein {
                anisotropy,
                shape,
                rate,
            } => stein_covariance(anisotropy, *shape, *rate, s1, s2),
            MixtureModel::General(_) => Err(QamError::Config(
                "the general mixture model has no closed form; models with one: cauchy, bessel, stein"
                    .into(),
            )),
        }
    }
}

/// A validated model together with its canonical JSON source, so specs can
/// be rewritten verbatim ([`write_spec`]) and round-trip stably.
#[derive(Debug)]
pub struct LoadedSpec {
    pub model: Model,
    pub source: Value,
}

/// Read, parse, and fully validate a spec file.
pub fn load_spec(path: &Path) -> Result<LoadedSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        QamError::Config(format!("cannot read spec file {}: {e}", path.display()))
    })?;
    let source: Value = serde_json::from_str(&text).map_err(|e| {
        QamError::Config(format!(
            "{}: malformed JSON at line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    let model = parse_spec(&source)?;
    Ok(LoadedSpec { model, source })
}

/// Write a spec's canonical JSON; `load_spec` on the result yields an
/// equivalent model.
pub fn write_spec(path: &Path, spec: &LoadedSpec) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&spec.source)
        .map_err(|e| QamError::Config(format!("serializing spec: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Parse a spec object, dispatching on its top-level marker key.
pub fn parse_spec(v: &Value) -> Result<Model> {
    let obj = as_object(v, "spec")?;
    if obj.contains_key("kernel") {
        Ok(Model::Kernel(parse_kernel(v, "spec")?))
    } else if obj.contains_key("generator") {
        Ok(Model::Composition(parse_composition(obj)?))
    } else if obj.contains_key("family") {
        Ok(Model::SpaceTime(parse_family(obj)?))
    } else if obj.contains_key("nu_s") {
        Ok(Model::Qarf(parse_qarf(obj)?))
    } else if obj.contains_key("model") {
        Ok(Model::Mixture(parse_mixture(obj)?))
    } else {
        Err(QamError::Config(
            "spec object has no recognized marker key; expected one of: \
             'kernel' (plain kernel), 'generator' (quasi-arithmetic composition), \
             'family' (space-time family), 'nu_s' (product random field), \
             'model' (nonstationary mixture)"
                .into(),
        ))
    }
}

// -- plain kernels ----------------------------------------------------------

fn parse_kernel(v: &Value, ctx: &str) -> Result<Arc<dyn Kernel>> {
    let obj = as_object(v, ctx)?;
    let name = str_field(obj, ctx, "kernel")?;
    let k: Arc<dyn Kernel> = match name {
        "exponential" => {
            known_keys(obj, ctx, &["kernel", "scale", "dim"])?;
            Arc::new(Exponential::new(
                f64_field(obj, ctx, "scale")?,
                dim_or(obj, ctx, 1)?,
            )?)
        }
        "stretched_exponential" => {
            known_keys(obj, ctx, &["kernel", "delta", "dim"])?;
            Arc::new(StretchedExponential::new(
                f64_field(obj, ctx, "delta")?,
                dim_or(obj, ctx, 1)?,
            )?)
        }
        "generalized_cauchy" => {
            known_keys(obj, ctx, &["kernel", "delta", "epsilon", "dim"])?;
            Arc::new(GeneralizedCauchy::new(
                f64_field(obj, ctx, "delta")?,
                f64_field(obj, ctx, "epsilon")?,
                dim_or(obj, ctx, 1)?,
            )?)
        }
        "power_series_margin" => {
            known_keys(obj, ctx, &["kernel", "rho", "dim"])?;
            Arc::new(PowerSeriesMargin::new(
                f64_field(obj, ctx, "rho")?,
                dim_or(obj, ctx, 1)?,
            )?)
        }
        "spherical" => {
            known_keys(obj, ctx, &["kernel", "range", "dim"])?;
            Arc::new(Spherical::new(
                f64_field(obj, ctx, "range")?,
                dim_or(obj, ctx, 1)?,
            )?)
        }
        "constant" => {
            known_keys(obj, ctx, &["kernel", "value", "dim"])?;
            Arc::new(Constant::new(
                f64_field(obj, ctx, "value")?,
                dim_or(obj, ctx, 1)?,
            )?)
        }
        "scaled" => {
            known_keys(obj, ctx, &["kernel", "factor", "inner"])?;
            let inner_ctx = format!("{ctx}.inner");
            Arc::new(Scaled::new(
                f64_field(obj, ctx, "factor")?,
                parse_kernel(req(obj, ctx, "inner")?, &inner_ctx)?,
            )?)
        }
        other => {
            return Err(QamError::Config(format!(
                "{ctx}: unknown kernel '{other}'; valid kernels: exponential, \
                 stretched_exponential, generalized_cauchy, power_series_margin, \
                 spherical, constant, scaled"
            )))
        }
    };
    Ok(k)
}

// -- compositions -----------------------------------------------------------

fn parse_generator_obj(v: &Value, ctx: &str) -> Result<Generator> {
    let obj = as_object(v, ctx)?;
    known_keys(obj, ctx, &["kind", "params"])?;
    let kind_name = str_field(obj, ctx, "kind")?;
    let kind = GeneratorKind::from_name(kind_name).ok_or_else(|| {
        QamError::Config(format!(
            "{ctx}: unknown generator kind '{kind_name}'; valid kinds: {}",
            GeneratorKind::valid_names()
        ))
    })?;
    let params = match obj.get("params") {
        None => Vec::new(),
        Some(p) => f64_vec(p, &format!("{ctx}.params"))?,
    };
    make_generator(kind, &params)
}

fn parse_composition(obj: &Map<String, Value>) -> Result<CompositionSpec> {
    let ctx = "composition spec";
    known_keys(obj, ctx, &["generator", "children", "weights", "partition"])?;
    let generator = parse_generator_obj(req(obj, ctx, "generator")?, "composition generator")?;
    let children_v = arr_field(obj, ctx, "children")?;
    let mut children: Vec<Arc<dyn Kernel>> = Vec::with_capacity(children_v.len());
    for (i, c) in children_v.iter().enumerate() {
        children.push(parse_kernel(c, &format!("child {i}"))?);
    }
    let partition = match obj.get("partition") {
        Some(p) => usize_vec(p, "composition partition")?,
        None => children.iter().map(|c| c.dim()).collect(),
    };
    match obj.get("weights") {
        Some(w) => {
            let weights = Weights::new(f64_vec(w, "composition weights")?)?;
            CompositionSpec::new(generator, children, weights, partition)
        }
        None => CompositionSpec::archimedean(generator, children, partition),
    }
}

// -- space-time families ------------------------------------------------------

fn parse_family(obj: &Map<String, Value>) -> Result<SpaceTimeCov> {
    let ctx = "family spec";
    let name = str_field(obj, ctx, "family")?;
    match name {
        "clayton" | "gumbel" => {
            known_keys(
                obj,
                ctx,
                &[
                    "family", "sigma2", "lambda1", "lambda2", "lambda3", "dim", "boundary",
                ],
            )?;
            let sigma2 = opt_f64(obj, ctx, "sigma2")?.unwrap_or(1.0);
            let l1 = f64_field(obj, ctx, "lambda1")?;
            let l2 = f64_field(obj, ctx, "lambda2")?;
            let l3 = f64_field(obj, ctx, "lambda3")?;
            let d = dim_or(obj, ctx, 2)?;
            let boundary = bool_or(obj, ctx, "boundary", false)?;
            match (name, boundary) {
                ("clayton", false) => SpaceTimeCov::clayton(sigma2, l1, l2, l3, d),
                ("clayton", true) => SpaceTimeCov::clayton_boundary(sigma2, l1, l2, l3, d),
                ("gumbel", false) => SpaceTimeCov::gumbel(sigma2, l1, l2, l3, d),
                _ => SpaceTimeCov::gumbel_boundary(sigma2, l1, l2, l3, d),
            }
        }
        "power_series" => {
            known_keys(
                obj,
                ctx,
                &["family", "lambda1", "lambda2", "lambda3", "dim", "boundary"],
            )?;
            let l1 = f64_field(obj, ctx, "lambda1")?;
            let l2 = f64_field(obj, ctx, "lambda2")?;
            let l3 = f64_field(obj, ctx, "lambda3")?;
            let d = dim_or(obj, ctx, 2)?;
            if bool_or(obj, ctx, "boundary", false)? {
                SpaceTimeCov::power_series_boundary(l1, l2, l3, d)
            } else {
                SpaceTimeCov::power_series(l1, l2, l3, d)
            }
        }
        "frank" => {
            known_keys(obj, ctx, &["family", "lambda", "gamma_s", "gamma_t", "dim"])?;
            SpaceTimeCov::frank(
                f64_field(obj, ctx, "lambda")?,
                parse_variogram(req(obj, ctx, "gamma_s")?, "gamma_s")?,
                parse_variogram(req(obj, ctx, "gamma_t")?, "gamma_t")?,
                dim_or(obj, ctx, 2)?,
            )
        }
        "cauchy_margins" => {
            known_keys(
                obj,
                ctx,
                &["family", "alpha", "delta", "epsilon", "rho", "dim"],
            )?;
            SpaceTimeCov::cauchy_margins(
                f64_field(obj, ctx, "alpha")?,
                f64_field(obj, ctx, "delta")?,
                f64_field(obj, ctx, "epsilon")?,
                f64_field(obj, ctx, "rho")?,
                dim_or(obj, ctx, 2)?,
            )
        }
        "separable" => {
            known_keys(obj, ctx, &["family", "spatial", "temporal"])?;
            SpaceTimeCov::separable(
                parse_kernel(req(obj, ctx, "spatial")?, "spatial factor")?,
                parse_kernel(req(obj, ctx, "temporal")?, "temporal factor")?,
            )
        }
        other => Err(QamError::Config(format!(
            "{ctx}: unknown family '{other}'; valid families: clayton, gumbel, \
             power_series, frank, cauchy_margins, separable"
        ))),
    }
}

fn parse_variogram(v: &Value, ctx: &str) -> Result<VariogramSpec> {
    let obj = as_object(v, ctx)?;
    let kind = str_field(obj, ctx, "type")?;
    let spec = match kind {
        "linear" => {
            known_keys(obj, ctx, &["type"])?;
            VariogramSpec::Linear
        }
        "power" => {
            known_keys(obj, ctx, &["type", "beta"])?;
            VariogramSpec::Power {
                beta: f64_field(obj, ctx, "beta")?,
            }
        }
        "nugget_power" => {
            known_keys(obj, ctx, &["type", "nugget", "beta"])?;
            VariogramSpec::NuggetPower {
                nugget: f64_field(obj, ctx, "nugget")?,
                beta: f64_field(obj, ctx, "beta")?,
            }
        }
        other => {
            return Err(QamError::Config(format!(
                "{ctx}: unknown variogram type '{other}'; valid types: linear, power, nugget_power"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

// -- product random fields ----------------------------------------------------

fn parse_exponent(v: &Value, ctx: &str) -> Result<ExponentFn> {
    let obj = as_object(v, ctx)?;
    let form = str_field(obj, ctx, "form")?;
    match form {
        "power" => {
            known_keys(obj, ctx, &["form", "coeff", "exponent"])?;
            Ok(ExponentFn::Power {
                coeff: f64_field(obj, ctx, "coeff")?,
                exponent: f64_field(obj, ctx, "exponent")?,
            })
        }
        "log1p" => {
            known_keys(obj, ctx, &["form", "coeff"])?;
            Ok(ExponentFn::Log1p {
                coeff: f64_field(obj, ctx, "coeff")?,
            })
        }
        other => Err(QamError::Config(format!(
            "{ctx}: unknown exponent form '{other}'; valid forms: power, log1p"
        ))),
    }
}

fn parse_mixing(v: &Value, ctx: &str, allow_product: bool) -> Result<MixingF> {
    let obj = as_object(v, ctx)?;
    let law = str_field(obj, ctx, "law")?;
    match law {
        "gamma" => {
            known_keys(obj, ctx, &["law", "shape", "rate"])?;
            Ok(MixingF::Gamma {
                shape: f64_field(obj, ctx, "shape")?,
                rate: f64_field(obj, ctx, "rate")?,
            })
        }
        "point_mass" => {
            known_keys(obj, ctx, &["law", "location"])?;
            Ok(MixingF::PointMass {
                location: f64_field(obj, ctx, "location")?,
            })
        }
        "atoms" => {
            known_keys(obj, ctx, &["law", "atoms"])?;
            let rows = arr_field(obj, ctx, "atoms")?;
            let mut atoms = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let pair = f64_vec(row, &format!("{ctx}.atoms[{i}]"))?;
                if pair.len() != 2 {
                    return Err(QamError::Config(format!(
                        "{ctx}.atoms[{i}]: expected a [location, weight] pair, got {} entries",
                        pair.len()
                    )));
                }
                atoms.push((pair[0], pair[1]));
            }
            Ok(MixingF::PointMassMixture { atoms })
        }
        "product" => {
            if !allow_product {
                return Err(QamError::Config(format!(
                    "{ctx}: product mixing laws cannot be nested"
                )));
            }
            known_keys(obj, ctx, &["law", "components"])?;
            let comps = arr_field(obj, ctx, "components")?;
            let mut components = Vec::with_capacity(comps.len());
            for (i, c) in comps.iter().enumerate() {
                components.push(parse_mixing(c, &format!("{ctx}.components[{i}]"), false)?);
            }
            Ok(MixingF::ProductMeasure { components })
        }
        other => Err(QamError::Config(format!(
            "{ctx}: unknown mixing law '{other}'; valid laws: gamma, point_mass, atoms, product"
        ))),
    }
}

fn parse_qarf(obj: &Map<String, Value>) -> Result<QarfSpec> {
    let ctx = "product-field spec";
    known_keys(obj, ctx, &["nu_s", "nu_t", "mixing", "variance"])?;
    let nu_s_v = arr_field(obj, ctx, "nu_s")?;
    let mut nu_s = Vec::with_capacity(nu_s_v.len());
    for (i, v) in nu_s_v.iter().enumerate() {
        nu_s.push(parse_exponent(v, &format!("nu_s[{i}]"))?);
    }
    let nu_t = parse_exponent(req(obj, ctx, "nu_t")?, "nu_t")?;
    let mixing = parse_mixing(req(obj, ctx, "mixing")?, "mixing", true)?;
    let variance = opt_f64(obj, ctx, "variance")?.unwrap_or(1.0);
    QarfSpec::new(nu_s, nu_t, mixing, variance)
}

// -- nonstationary mixtures ---------------------------------------------------

fn parse_param_field(v: &Value, ctx: &str) -> Result<ParamField> {
    let obj = as_object(v, ctx)?;
    let form = str_field(obj, ctx, "form")?;
    match form {
        "const" => {
            known_keys(obj, ctx, &["form", "value"])?;
            Ok(ParamField::Const(f64_field(obj, ctx, "value")?))
        }
        "quadratic" => {
            known_keys(obj, ctx, &["form", "a", "b"])?;
            Ok(ParamField::Quadratic {
                a: f64_field(obj, ctx, "a")?,
                b: f64_field(obj, ctx, "b")?,
            })
        }
        other => Err(QamError::Config(format!(
            "{ctx}: unknown parameter-field form '{other}'; valid forms: const, quadratic"
        ))),
    }
}

fn parse_sigma_field(v: &Value, ctx: &str) -> Result<AnisotropyField> {
    let obj = as_object(v, ctx)?;
    let form = str_field(obj, ctx, "form")?;
    match form {
        "scalar_quadratic" => {
            known_keys(obj, ctx, &["form", "a", "b", "dim"])?;
            AnisotropyField::scalar_quadratic(
                f64_field(obj, ctx, "a")?,
                f64_field(obj, ctx, "b")?,
                usize_field(obj, ctx, "dim")?,
            )
        }
        "diagonal_quadratic" => {
            known_keys(obj, ctx, &["form", "a", "b"])?;
            AnisotropyField::diagonal_quadratic(
                f64_vec(req(obj, ctx, "a")?, &format!("{ctx}.a"))?,
                f64_vec(req(obj, ctx, "b")?, &format!("{ctx}.b"))?,
            )
        }
        "constant" => {
            known_keys(obj, ctx, &["form", "matrix"])?;
            let rows_v = arr_field(obj, ctx, "matrix")?;
            let n = rows_v.len();
            let mut rows = Vec::with_capacity(n);
            for (i, r) in rows_v.iter().enumerate() {
                let row = f64_vec(r, &format!("{ctx}.matrix[{i}]"))?;
                if row.len() != n {
                    return Err(QamError::Config(format!(
                        "{ctx}.matrix: row {i} has {} entries in a {n}-row matrix",
                        row.len()
                    )));
                }
                rows.push(row);
            }
            if n == 0 {
                return Err(QamError::Config(format!("{ctx}.matrix: empty matrix")));
            }
            AnisotropyField::constant(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        }
        other => Err(QamError::Config(format!(
            "{ctx}: unknown anisotropy form '{other}'; valid forms: scalar_quadratic, \
             diagonal_quadratic, constant"
        ))),
    }
}

fn parse_g_factor(v: &Value, ctx: &str) -> Result<GFactor> {
    let obj = as_object(v, ctx)?;
    let form = str_field(obj, ctx, "form")?;
    match form {
        "cauchy_like" => {
            known_keys(obj, ctx, &["form", "alpha", "nu"])?;
            Ok(GFactor::CauchyLike {
                alpha: parse_param_field(req(obj, ctx, "alpha")?, &format!("{ctx}.alpha"))?,
                nu: parse_param_field(req(obj, ctx, "nu")?, &format!("{ctx}.nu"))?,
            })
        }
        "exp_half" => {
            known_keys(obj, ctx, &["form", "alpha"])?;
            Ok(GFactor::ExpHalf {
                alpha: parse_param_field(req(obj, ctx, "alpha")?, &format!("{ctx}.alpha"))?,
            })
        }
        "one" => {
            known_keys(obj, ctx, &["form"])?;
            Ok(GFactor::One)
        }
        other => Err(QamError::Config(format!(
            "{ctx}: unknown mixing-factor form '{other}'; valid forms: cauchy_like, exp_half, one"
        ))),
    }
}

fn parse_measure(v: &Value, ctx: &str) -> Result<MixtureMeasure> {
    let obj = as_object(v, ctx)?;
    let law = str_field(obj, ctx, "law")?;
    match law {
        "lebesgue" => {
            known_keys(obj, ctx, &["law"])?;
            Ok(MixtureMeasure::Lebesgue)
        }
        "exp_weight" => {
            known_keys(obj, ctx, &["law", "beta"])?;
            Ok(MixtureMeasure::ExpWeight {
                beta: f64_field(obj, ctx, "beta")?,
            })
        }
        "gamma" => {
            known_keys(obj, ctx, &["law", "shape", "rate"])?;
            Ok(MixtureMeasure::Gamma {
                shape: f64_field(obj, ctx, "shape")?,
                rate: f64_field(obj, ctx, "rate")?,
            })
        }
        "point_mass" => {
            known_keys(obj, ctx, &["law", "location"])?;
            Ok(MixtureMeasure::PointMass {
                location: f64_field(obj, ctx, "location")?,
            })
        }
        other => Err(QamError::Config(format!(
            "{ctx}: unknown measure law '{other}'; valid laws: lebesgue, exp_weight, gamma, point_mass"
        ))),
    }
}

fn parse_mixture(obj: &Map<String, Value>) -> Result<MixtureModel> {
    let ctx = "mixture spec";
    let model = str_field(obj, ctx, "model")?;
    match model {
        "cauchy" => {
            known_keys(obj, ctx, &["model", "sigma_field", "lambda", "alpha", "nu"])?;
            Ok(MixtureModel::Cauchy(CauchyMixture::new(
                parse_sigma_field(req(obj, ctx, "sigma_field")?, "sigma_field")?,
                f64_field(obj, ctx, "lambda")?,
                parse_param_field(req(obj, ctx, "alpha")?, "alpha")?,
                parse_param_field(req(obj, ctx, "nu")?, "nu")?,
            )?))
        }
        "bessel" => {
            known_keys(obj, ctx, &["model", "sigma_field", "lambda", "alpha"])?;
            Ok(MixtureModel::Bessel(BesselMixture::new(
                parse_sigma_field(req(obj, ctx, "sigma_field")?, "sigma_field")?,
                f64_field(obj, ctx, "lambda")?,
                parse_param_field(req(obj, ctx, "alpha")?, "alpha")?,
            )?))
        }
        "stein" => {
            known_keys(obj, ctx, &["model", "sigma_field", "shape", "rate"])?;
            let shape = f64_field(obj, ctx, "shape")?;
            let rate = f64_field(obj, ctx, "rate")?;
            if !(shape > 0.0 && rate > 0.0) {
                return Err(QamError::Parameter(format!(
                    "gamma measure requires shape > 0 and rate > 0, got shape = {shape}, rate = {rate}"
                )));
            }
            Ok(MixtureModel::Stein {
                anisotropy: parse_sigma_field(req(obj, ctx, "sigma_field")?, "sigma_field")?,
                shape,
                rate,
            })
        }
        "mixture" => {
            known_keys(obj, ctx, &["model", "sigma_field", "measure", "phi1", "g"])?;
            Ok(MixtureModel::General(MixtureSpec::new(
                parse_sigma_field(req(obj, ctx, "sigma_field")?, "sigma_field")?,
                parse_generator_obj(req(obj, ctx, "phi1")?, "phi1")?,
                parse_g_factor(req(obj, ctx, "g")?, "g")?,
                parse_measure(req(obj, ctx, "measure")?, "measure")?,
            )?))
        }
        other => Err(QamError::Config(format!(
            "{ctx}: unknown model '{other}'; valid models: cauchy, bessel, stein, mixture"
        ))),
    }
}

// -- JSON helpers -------------------------------------------------------------

fn as_object<'a>(v: &'a Value, ctx: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| QamError::Config(format!("{ctx}: expected a JSON object")))
}

fn known_keys(obj: &Map<String, Value>, ctx: &str, allowed: &[&str]) -> Result<()> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(QamError::Config(format!(
                "{ctx}: unknown field '{key}'; valid fields: {}",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

fn req<'a>(obj: &'a Map<String, Value>, ctx: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| QamError::Config(format!("{ctx}: missing required field '{key}'")))
}

fn f64_of(v: &Value, ctx: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| QamError::Config(format!("{ctx}: expected a number")))
}

fn f64_field(obj: &Map<String, Value>, ctx: &str, key: &str) -> Result<f64> {
    f64_of(req(obj, ctx, key)?, &format!("{ctx}.{key}"))
}

fn opt_f64(obj: &Map<String, Value>, ctx: &str, key: &str) -> Result<Option<f64>> {
    obj.get(key)
        .map(|v| f64_of(v, &format!("{ctx}.{key}")))
        .transpose()
}

fn usize_of(v: &Value, ctx: &str) -> Result<usize> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| QamError::Config(format!("{ctx}: expected a nonnegative integer")))
}

fn usize_field(obj: &Map<String, Value>, ctx: &str, key: &str) -> Result<usize> {
    usize_of(req(obj, ctx, key)?, &format!("{ctx}.{key}"))
}

fn dim_or(obj: &Map<String, Value>, ctx: &str, default: usize) -> Result<usize> {
    obj.get("dim")
        .map(|v| usize_of(v, &format!("{ctx}.dim")))
        .transpose()
        .map(|o| o.unwrap_or(default))
}

fn bool_or(obj: &Map<String, Value>, ctx: &str, key: &str, default: bool) -> Result<bool> {
    match obj.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_bool()
            .ok_or_else(|| QamError::Config(format!("{ctx}.{key}: expected a boolean"))),
    }
}

fn str_field<'a>(obj: &'a Map<String, Value>, ctx: &str, key: &str) -> Result<&'a str> {
    req(obj, ctx, key)?
        .as_str()
        .ok_or_else(|| QamError::Config(format!("{ctx}.{key}: expected a string")))
}

fn arr_field<'a>(obj: &'a Map<String, Value>, ctx: &str, key: &str) -> Result<&'a Vec<Value>> {
    req(obj, ctx, key)?
        .as_array()
        .ok_or_else(|| QamError::Config(format!("{ctx}.{key}: expected an array")))
}

fn f64_vec(v: &Value, ctx: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| QamError::Config(format!("{ctx}: expected an array of numbers")))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| f64_of(x, &format!("{ctx}[{i}]")))
        .collect()
}

fn usize_vec(v: &Value, ctx: &str) -> Result<Vec<usize>> {
    let arr = v
        .as_array()
        .ok_or_else(|| QamError::Config(format!("{ctx}: expected an array of integers")))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| usize_of(x, &format!("{ctx}[{i}]")))
        .collect()
}

// -- point tables and matrices -------------------------------------------------

/// Read a point table: CSV with a header row, one point per row, all rows
/// the same width.
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path)
        .map_err(|e| QamError::Config(format!("cannot read points file {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let width = reader
        .headers()
        .map_err(|e| QamError::Config(format!("{}: {e}", path.display())))?
        .len();
    let mut points = Vec::new();
    for (row_i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| QamError::Config(format!("{}: {e}", path.display())))?;
        if record.len() != width {
            return Err(QamError::Config(format!(
                "{}: row {} has {} fields, header has {width}",
                path.display(),
                row_i + 1,
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(width);
        for (col, field) in record.iter().enumerate() {
            row.push(field.parse::<f64>().map_err(|_| {
                QamError::Config(format!(
                    "{}: row {} column {}: '{field}' is not a number",
                    path.display(),
                    row_i + 1,
                    col + 1
                ))
            })?);
        }
        points.push(row);
    }
    if points.is_empty() {
        return Err(QamError::Config(format!(
            "{}: no data rows after the header",
            path.display()
        )));
    }
    Ok(points)
}

/// Parse an inline grid: per-axis `start:stop:count` segments joined by
/// `;`, expanded to the full Cartesian product in row-major order (last
/// axis fastest).
pub fn parse_grid(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut axes: Vec<Vec<f64>> = Vec::new();
    for (i, seg) in text.split(';').enumerate() {
        let parts: Vec<&str> = seg.split(':').collect();
        if parts.len() != 3 {
            return Err(QamError::Config(format!(
                "grid axis {i}: expected start:stop:count, got '{seg}'"
            )));
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| {
            QamError::Config(format!("grid axis {i}: '{}' is not a number", parts[0]))
        })?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| {
            QamError::Config(format!("grid axis {i}: '{}' is not a number", parts[1]))
        })?;
        let count: usize = parts[2].trim().parse().map_err(|_| {
            QamError::Config(format!("grid axis {i}: '{}' is not a count", parts[2]))
        })?;
        if count == 0 {
            return Err(QamError::Config(format!(
                "grid axis {i}: count must be at least 1"
            )));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(QamError::Config(format!(
                "grid axis {i}: endpoints must be finite"
            )));
        }
        let axis = if count == 1 {
            vec![start]
        } else {
            let step = (stop - start) / (count - 1) as f64;
            (0..count).map(|k| start + k as f64 * step).collect()
        };
        axes.push(axis);
    }
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for p in &points {
            for &x in axis {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        points = next;
    }
    Ok(points)
}

/// Write a bare numeric matrix: comma-separated, newline-terminated rows,
/// no header, shortest round-trip decimal formatting.
pub fn write_matrix<W: Write + ?Sized>(w: &mut W, rows: &[Vec<f64>]) -> Result<()> {
    for row in rows {
        let mut first = true;
        for x in row {
            if first {
                first = false;
            } else {
                write!(w, ",")?;
            }
            write!(w, "{x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Write a point table: header row, then numeric rows in the same format
/// as [`write_matrix`].
pub fn write_table<W: Write + ?Sized>(w: &mut W, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    write_matrix(w, rows)
}

/// Read a bare numeric matrix written by [`write_matrix`].
pub fn read_matrix<R: BufRead>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            row.push(field.trim().parse::<f64>().map_err(|_| {
                QamError::Config(format!("matrix row {}: '{field}' is not a number", i + 1))
            })?);
        }
        rows.push(row);
    }
    Ok(rows)
}
