//! Python bindings for the covariance-modeling library: generator algebra,
//! JSON-spec models, Gram/PSD reports, admissibility checks, and product-
//! field simulation, importable as `pyqam`.

// The #[pymethods]/#[pyfunction] expansions insert PyErr conversions that
// clippy flags as useless; the lint points at generated code, not ours.
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use qam::compose::{CompositionSpec, Weights};
use qam::config;
use qam::error::QamError;
use qam::generator::{make_generator, Generator, GeneratorKind};
use qam::kernel::{Exponential, Kernel};
use qam::permissibility::{self, Case, CheckReport};
use std::path::PathBuf;
use std::sync::Arc;

fn err(e: QamError) -> PyErr {
    match e {
        QamError::Io(inner) => PyIOError::new_err(inner.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn kind_from_name(name: &str) -> PyResult<GeneratorKind> {
    GeneratorKind::from_name(name).ok_or_else(|| {
        PyValueError::new_err(format!(
            "unknown generator kind '{name}'; valid kinds: {}",
            GeneratorKind::valid_names()
        ))
    })
}

fn case_from_name(name: &str) -> PyResult<Case> {
    match name {
        "a" => Ok(Case::A),
        "b" => Ok(Case::B),
        "c" => Ok(Case::C),
        other => Err(PyValueError::new_err(format!(
            "unknown admissibility case '{other}'; valid cases: a, b, c"
        ))),
    }
}

/// A mean generator φ together with its inverse.
#[pyclass(name = "Generator", module = "pyqam")]
struct PyGenerator {
    inner: Generator,
}

#[pymethods]
impl PyGenerator {
    #[new]
    #[pyo3(signature = (kind, params = vec![]))]
    fn new(kind: &str, params: Vec<f64>) -> PyResult<Self> {
        let kind = kind_from_name(kind)?;
        Ok(Self {
            inner: make_generator(kind, &params).map_err(err)?,
        })
    }

    /// Names of every available generator kind.
    #[staticmethod]
    fn kinds() -> Vec<String> {
        GeneratorKind::ALL.iter().map(|k| k.to_string()).collect()
    }

    fn phi(&self, x: f64) -> f64 {
        self.inner.phi(x)
    }

    fn phi_inv(&self, t: f64) -> f64 {
        self.inner.phi_inv(t)
    }

    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    fn is_completely_monotone(&self) -> bool {
        self.inner.cm_flag()
    }

    fn __repr__(&self) -> String {
        format!("Generator({})", self.inner.kind())
    }
}

/// Combine child covariance values through the named generator:
/// φ(Σᵢ θᵢ φ⁻¹(vᵢ)), with trivial weights θᵢ = 1 when none are given.
#[pyfunction]
#[pyo3(signature = (kind, params, values, weights = None))]
fn quasi_arithmetic_mean(
    kind: &str,
    params: Vec<f64>,
    values: Vec<f64>,
    weights: Option<Vec<f64>>,
) -> PyResult<f64> {
    let generator = make_generator(kind_from_name(kind)?, &params).map_err(err)?;
    let children: Vec<Arc<dyn Kernel>> = (0..values.len())
        .map(|_| Exponential::new(1.0, 1).map(|k| Arc::new(k) as Arc<dyn Kernel>))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let partition = vec![1; values.len()];
    let spec = match weights {
        Some(w) => CompositionSpec::new(
            generator,
            children,
            Weights::new(w).map_err(err)?,
            partition,
        ),
        None => CompositionSpec::archimedean(generator, children, partition),
    }
    .map_err(err)?;
    spec.combine(&values).map_err(err)
}

fn check_report_dict<'py>(
    py: Python<'py>,
    check: &str,
    case: Option<&str>,
    report: &CheckReport,
) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new_bound(py);
    dict.set_item("check", check)?;
    if let Some(case) = case {
        dict.set_item("case", case)?;
    }
    dict.set_item("passed", report.passed)?;
    dict.set_item("worst_margin", report.worst_margin)?;
    dict.set_item("max_order_checked", report.max_order_checked)?;
    dict.set_item("witness", report.witness)?;
    Ok(dict)
}

/// A parsed model spec: plain kernel, composition, space-time family,
/// product field, or location mixture. Accepts the same JSON the command
/// line reads.
#[pyclass(name = "Model", module = "pyqam")]
struct PyModel {
    inner: config::Model,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            PyValueError::new_err(format!(
                "malformed JSON at line {} column {}",
                e.line(),
                e.column()
            ))
        })?;
        Ok(Self {
            inner: config::parse_spec(&value).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: config::load_spec(&path).map_err(err)?.model,
        })
    }

    /// Which model family the spec parsed into.
    fn describe(&self) -> &'static str {
        match &self.inner {
            config::Model::Kernel(_) => "kernel",
            config::Model::Composition(_) => "composition",
            config::Model::SpaceTime(_) => "space_time",
            config::Model::Qarf(_) => "product_field",
            config::Model::Mixture(_) => "mixture",
        }
    }

    /// Lag dimension (stationary models) or location dimension (mixtures).
    fn dim(&self) -> PyResult<usize> {
        match &self.inner {
            config::Model::Mixture(m) => Ok(m.dim()),
            _ => Ok(self.inner.lag_kernel().map_err(err)?.dim()),
        }
    }

    /// Covariance at one lag (stationary models only).
    fn eval(&self, lag: Vec<f64>) -> PyResult<f64> {
        self.inner.lag_kernel().map_err(err)?.eval(&lag).map_err(err)
    }

    /// Dense covariance matrix on a point set (stationary models).
    fn gram(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let kernel = self.inner.lag_kernel().map_err(err)?;
        let n = points.len();
        let mut matrix = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let lag: Vec<f64> = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| a - b)
                    .collect();
                let value = kernel.eval(&lag).map_err(err)?;
                matrix[i][j] = value;
                matrix[j][i] = value;
            }
        }
        Ok(matrix)
    }

    /// Eigenvalue-based positive-semidefiniteness report on a point set.
    fn gram_report<'py>(
        &self,
        py: Python<'py>,
        points: Vec<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let kernel = self.inner.lag_kernel().map_err(err)?;
        let report = permissibility::gram_psd(&*kernel, &points).map_err(err)?;
        let dict = PyDict::new_bound(py);
        dict.set_item("n", report.n)?;
        dict.set_item("min_eigenvalue", report.min_eigenvalue)?;
        dict.set_item("max_eigenvalue", report.max_eigenvalue)?;
        dict.set_item("psd", report.psd)?;
        dict.set_item("duplicates_removed", report.duplicates_removed)?;
        Ok(dict)
    }

    /// Admissibility (compositions, space-time families) or complete
    /// monotonicity (plain kernels), as a report dict.
    #[pyo3(signature = (case = "b", max_order = 4))]
    fn validate<'py>(
        &self,
        py: Python<'py>,
        case: &str,
        max_order: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        match &self.inner {
            config::Model::Kernel(kernel) => {
                let kernel = Arc::clone(kernel);
                let dim = kernel.dim();
                let profile = move |t: f64| {
                    let mut lag = vec![0.0; dim];
                    lag[0] = t;
                    kernel.eval(&lag).unwrap_or(f64::NAN)
                };
                let grid = permissibility::default_radial_grid();
                let report = permissibility::check_completely_monotone(profile, &grid, max_order)
                    .map_err(err)?;
                check_report_dict(py, "complete_monotonicity", None, &report)
            }
            config::Model::Composition(comp) => {
                let report =
                    permissibility::admissibility(comp, case_from_name(case)?).map_err(err)?;
                check_report_dict(py, "admissibility", Some(case), &report)
            }
            config::Model::SpaceTime(cov) => {
                let comp = cov.to_composition().map_err(err)?;
                let report =
                    permissibility::admissibility(&comp, case_from_name(case)?).map_err(err)?;
                check_report_dict(py, "admissibility", Some(case), &report)
            }
            _ => Err(PyValueError::new_err(
                "validate applies to kernel, composition, and space-time family specs; \
                 probe other models numerically with gram_report or mixture_cov",
            )),
        }
    }

    /// Replicate rows of the product field at the given points.
    #[pyo3(signature = (points, replicates, seed = 0))]
    fn simulate(
        &self,
        points: Vec<Vec<f64>>,
        replicates: usize,
        seed: u64,
    ) -> PyResult<Vec<Vec<f64>>> {
        match &self.inner {
            config::Model::Qarf(q) => q.simulate(&points, replicates, seed).map_err(err),
            _ => Err(PyValueError::new_err(
                "simulate requires a product-field spec (marker key 'nu_s')",
            )),
        }
    }

    /// Nonstationary covariance between two locations (mixture models).
    #[pyo3(signature = (s1, s2, rel_tol = 1e-8, closed = false))]
    fn mixture_cov(&self, s1: Vec<f64>, s2: Vec<f64>, rel_tol: f64, closed: bool) -> PyResult<f64> {
        match &self.inner {
            config::Model::Mixture(m) => if closed {
                m.closed_form(&s1, &s2)
            } else {
                m.quadrature(&s1, &s2, rel_tol)
            }
            .map_err(err),
            _ => Err(PyValueError::new_err(
                "mixture_cov requires a mixture spec (marker key 'model')",
            )),
        }
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.describe())
    }
}

#[pymodule]
fn pyqam(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(quasi_arithmetic_mean, m)?)?;
    Ok(())
}
