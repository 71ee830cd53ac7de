//! JSON model files.
//!
//! A model file names a tensor-product space, a channel count, scalar
//! parameters, a set of named operators given as expression trees or dense
//! matrices, the scaling roles `Y, A, B, F_i, G_i, W_ij` and the slow
//! projection `p0`:
//!
//! ```json
//! {
//!   "name": "example",
//!   "space": [2, "cutoff+1"],
//!   "channels": 1,
//!   "params": {"kappa": 2.0, "cutoff": 4},
//!   "operators": {
//!     "f": {"scale": [{"sqrt": "kappa"}, {"kron": [{"identity": 2}, {"creator": "cutoff+1"}]}]}
//!   },
//!   "roles": {"F": [{"ref": "f"}]},
//!   "p0": {"kron": [{"identity": 2}, {"basis_matrix": ["cutoff+1", 0, 0]}]}
//! }
//! ```
//!
//! Missing roles default to zero (`W` to the identity grid) and a missing
//! `p0` to the identity. Dimensions are integers or `"<param>"`,
//! `"<param>+N"`, `"<param>-N"` over integer parameters.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use qsde_core::model::ScaledFamily;
use qsde_core::models::fock_toolbox;
use qsde_core::models::{Fixture, ParamValue};
use qsde_core::operator::{hermitian_function, CMatrix, HilbertSpace, Operator, SubspacePair, C64, DEFAULT_TOL};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Model files shipped with the tool, by name.
pub const SHIPPED: [(&str, &str); 5] = [
    ("cavity", include_str!("../../../fixtures/cavity.json")),
    ("duan-kimble", include_str!("../../../fixtures/duan-kimble.json")),
    ("mirror", include_str!("../../../fixtures/mirror.json")),
    ("trivial", include_str!("../../../fixtures/trivial.json")),
    ("truncation-demo", include_str!("../../../fixtures/truncation-demo.json")),
];

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Dim {
    Fixed(usize),
    Param(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
    Param(String),
    Op(Box<ScalarOp>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarOp {
    Sqrt(Scalar),
    Neg(Scalar),
    Conj(Scalar),
    Inv(Scalar),
    Mul(Vec<Scalar>),
    Add(Vec<Scalar>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Expr {
    Identity(Dim),
    Zero(Dim),
    Annihilator(Dim),
    Creator(Dim),
    Number(Dim),
    BasisMatrix(Dim, usize, usize),
    Matrix(Vec<Vec<[f64; 2]>>),
    Ref(String),
    Kron(Vec<Expr>),
    Scale(Scalar, Box<Expr>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Adjoint(Box<Expr>),
    Funcalc(Funcalc),
}

/// A shipped rational function of a Hermitian operand.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Funcalc {
    pub name: String,
    pub operand: Box<Expr>,
    #[serde(default)]
    pub args: BTreeMap<String, Scalar>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roles {
    #[serde(rename = "Y")]
    pub y: Option<Expr>,
    #[serde(rename = "A")]
    pub a: Option<Expr>,
    #[serde(rename = "B")]
    pub b: Option<Expr>,
    #[serde(rename = "F")]
    pub f: Option<Vec<Expr>>,
    #[serde(rename = "G")]
    pub g: Option<Vec<Expr>>,
    #[serde(rename = "W")]
    pub w: Option<Vec<Vec<Expr>>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Projection {
    Basis {
        basis: Vec<usize>,
    },
    Operator(Expr),
}

/// Study defaults; command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub k: Option<Vec<f64>>,
    #[serde(rename = "T")]
    pub t_max: Option<f64>,
    pub grid: Option<usize>,
    pub alpha: Option<Vec<Scalar>>,
    pub beta: Option<Vec<Scalar>>,
    pub tol: Option<f64>,
    pub probe: Option<usize>,
    pub cutoffs: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub space: Vec<Dim>,
    pub channels: usize,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    pub operators: BTreeMap<String, Expr>,
    #[serde(default)]
    pub roles: Roles,
    #[serde(default)]
    pub p0: Option<Projection>,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Clone, Debug, Default)]
pub struct StudyDefaults {
    pub k: Option<Vec<f64>>,
    pub t_max: Option<f64>,
    pub grid: Option<usize>,
    pub alpha: Option<Vec<C64>>,
    pub beta: Option<Vec<C64>>,
    pub tol: Option<f64>,
    pub probe: Option<usize>,
    pub cutoffs: Option<Vec<usize>>,
}

/// A parsed model: the source document and its materialized fixture.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub file: ModelFile,
    pub fixture: Fixture,
    pub study: StudyDefaults,
}

impl LoadedModel {
    /// The same model rebuilt with its `cutoff` parameter replaced.
    pub fn with_cutoff(&self, cutoff: usize) -> CliResult<LoadedModel> {
        if !matches!(self.file.params.get("cutoff"), Some(ParamValue::Integer(_))) {
            return Err(CliError::usage(format!("model '{}' has no integer cutoff parameter", self.file.name)));
        }
        let mut params = self.file.params.clone();
        params.insert("cutoff".to_string(), ParamValue::Integer(cutoff));
        build(&self.file, &params)
    }
}

/// Finds a model by path, by path with `.json` appended, or by the name of
/// a shipped model (the file stem of `path`).
pub fn read_source(path: &str) -> CliResult<String> {
    let p = Path::new(path);
    let with_ext = format!("{path}.json");
    for candidate in [p, Path::new(&with_ext)] {
        if candidate.is_file() {
            return Ok(std::fs::read_to_string(candidate)?);
        }
    }
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or(path);
    SHIPPED
        .iter()
        .find(|(name, _)| *name == stem)
        .map(|(_, text)| text.to_string())
        .ok_or_else(|| CliError::usage(format!("no model file at '{path}' and no shipped model named '{stem}'")))
}

pub fn load(path: &str) -> CliResult<LoadedModel> {
    parse(&read_source(path)?)
}

pub fn parse(text: &str) -> CliResult<LoadedModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("model file does not parse: {e}")))?;
    let params = file.params.clone();
    build(&file, &params)
}

fn build(file: &ModelFile, params: &BTreeMap<String, ParamValue>) -> CliResult<LoadedModel> {
    if file.name.trim().is_empty() {
        return Err(CliError::usage("model name is empty"));
    }
    if file.operators.is_empty() {
        return Err(CliError::usage("operator section is empty"));
    }
    if file.channels == 0 {
        return Err(CliError::usage("at least one channel is required"));
    }
    let mut b = Builder { file, params, done: HashMap::new(), active: Vec::new() };

    let dims = file.space.iter().map(|d| b.dim(d)).collect::<CliResult<Vec<_>>>()?;
    let space = HilbertSpace::new(dims)?;
    for name in file.operators.keys() {
        b.named(name)?;
    }

    let n = file.channels;
    let zero = Operator::zeros(&space);
    let role = |b: &mut Builder, e: &Option<Expr>, what: &str| -> CliResult<Operator> {
        match e {
            Some(e) => b.fitted(e, &space, what),
            None => Ok(zero.clone()),
        }
    };
    let y = role(&mut b, &file.roles.y, "Y")?;
    let a = role(&mut b, &file.roles.a, "A")?;
    let bb = role(&mut b, &file.roles.b, "B")?;
    let list = |b: &mut Builder, e: &Option<Vec<Expr>>, what: &str| -> CliResult<Vec<Operator>> {
        match e {
            None => Ok(vec![zero.clone(); n]),
            Some(v) if v.len() != n => {
                Err(CliError::usage(format!("role {what} lists {} operators for {n} channels", v.len())))
            }
            Some(v) => v.iter().enumerate().map(|(i, e)| b.fitted(e, &space, &format!("{what}[{i}]"))).collect(),
        }
    };
    let f = list(&mut b, &file.roles.f, "F")?;
    let g = list(&mut b, &file.roles.g, "G")?;
    let w = match &file.roles.w {
        None => (0..n)
            .map(|i| (0..n).map(|j| if i == j { Operator::identity(&space) } else { zero.clone() }).collect())
            .collect(),
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::usage(format!("role W must be a {n}x{n} grid")));
            }
            rows.iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, e)| b.fitted(e, &space, &format!("W[{i}][{j}]")))
                        .collect::<CliResult<Vec<_>>>()
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let family = ScaledFamily::new(y, a, bb, f, g, w)?;

    let sub = match &file.p0 {
        None => SubspacePair::new(Operator::identity(&space), DEFAULT_TOL)?,
        Some(Projection::Basis { basis }) => SubspacePair::from_basis_indices(&space, basis)?,
        Some(Projection::Operator(e)) => SubspacePair::new(b.fitted(e, &space, "p0")?, DEFAULT_TOL)?,
    };

    let mut fixture = Fixture::new(file.name.clone(), family, sub)?;
    fixture.params = params.clone();
    fixture.cutoff = match params.get("cutoff") {
        Some(ParamValue::Integer(c)) => Some(*c),
        _ => None,
    };

    let st = &file.study;
    let amps = |b: &Builder, v: &Option<Vec<Scalar>>| -> CliResult<Option<Vec<C64>>> {
        v.as_ref().map(|v| v.iter().map(|s| b.scalar(s)).collect()).transpose()
    };
    let study = StudyDefaults {
        k: st.k.clone(),
        t_max: st.t_max,
        grid: st.grid,
        alpha: amps(&b, &st.alpha)?,
        beta: amps(&b, &st.beta)?,
        tol: st.tol,
        probe: st.probe,
        cutoffs: st.cutoffs.clone(),
    };
    Ok(LoadedModel { file: file.clone(), fixture, study })
}

struct Builder<'a> {
    file: &'a ModelFile,
    params: &'a BTreeMap<String, ParamValue>,
    done: HashMap<String, Operator>,
    active: Vec<String>,
}

fn param_scalar(v: &ParamValue) -> C64 {
    match v {
        ParamValue::Integer(i) => C64::new(*i as f64, 0.0),
        ParamValue::Real(x) => C64::new(*x, 0.0),
        ParamValue::Complex(z) => *z,
    }
}

impl Builder<'_> {
    fn dim(&self, d: &Dim) -> CliResult<usize> {
        let value = match d {
            Dim::Fixed(n) => *n as i64,
            Dim::Param(text) => {
                let t = text.replace(' ', "");
                let split = t[1..].find(['+', '-']).map(|i| i + 1);
                let (name, offset) = match split {
                    Some(i) => {
                        let off: i64 = t[i..]
                            .trim_start_matches('+')
                            .parse()
                            .map_err(|_| CliError::usage(format!("bad dimension offset in '{text}'")))?;
                        (&t[..i], off)
                    }
                    None => (t.as_str(), 0),
                };
                match self.params.get(name) {
                    Some(ParamValue::Integer(v)) => *v as i64 + offset,
                    Some(_) => return Err(CliError::usage(format!("parameter '{name}' is not an integer"))),
                    None => return Err(CliError::usage(format!("unknown parameter '{name}' in dimension '{text}'"))),
                }
            }
        };
        if value < 1 {
            return Err(CliError::usage(format!("dimension {d:?} evaluates to {value}")));
        }
        Ok(value as usize)
    }

    fn scalar(&self, s: &Scalar) -> CliResult<C64> {
        let z = match s {
            Scalar::Real(x) => C64::new(*x, 0.0),
            Scalar::Complex([re, im]) => C64::new(*re, *im),
            Scalar::Param(name) => self
                .params
                .get(name)
                .map(param_scalar)
                .ok_or_else(|| CliError::usage(format!("unknown parameter '{name}'")))?,
            Scalar::Op(op) => match op.as_ref() {
                ScalarOp::Sqrt(x) => self.scalar(x)?.sqrt(),
                ScalarOp::Neg(x) => -self.scalar(x)?,
                ScalarOp::Conj(x) => self.scalar(x)?.conj(),
                ScalarOp::Inv(x) => {
                    let v = self.scalar(x)?;
                    if v.norm() == 0.0 {
                        return Err(CliError::usage("inverse of zero"));
                    }
                    v.inv()
                }
                ScalarOp::Mul(xs) => {
                    xs.iter().try_fold(C64::new(1.0, 0.0), |acc, x| self.scalar(x).map(|v| acc * v))?
                }
                ScalarOp::Add(xs) => {
                    xs.iter().try_fold(C64::new(0.0, 0.0), |acc, x| self.scalar(x).map(|v| acc + v))?
                }
            },
        };
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(CliError::usage(format!("scalar {s:?} is not finite")));
        }
        Ok(z)
    }

    fn named(&mut self, name: &str) -> CliResult<Operator> {
        if let Some(op) = self.done.get(name) {
            return Ok(op.clone());
        }
        if self.active.iter().any(|a| a == name) {
            return Err(CliError::usage(format!("operator '{name}' refers to itself")));
        }
        let expr = self
            .file
            .operators
            .get(name)
            .ok_or_else(|| CliError::usage(format!("unknown operator '{name}'")))?;
        self.active.push(name.to_string());
        let op = self.op(expr).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("in operator '{name}': {m}")),
            other => other,
        });
        self.active.pop();
        let op = op?;
        self.done.insert(name.to_string(), op.clone());
        Ok(op)
    }

    fn fock(&self, d: &Dim) -> CliResult<qsde_core::models::fock::FockToolbox> {
        let n = self.dim(d)?;
        if n < 2 {
            return Err(CliError::usage("ladder operators need dimension at least 2"));
        }
        Ok(fock_toolbox(n - 1)?)
    }

    fn op(&mut self, e: &Expr) -> CliResult<Operator> {
        Ok(match e {
            Expr::Identity(d) => Operator::identity(&HilbertSpace::single(self.dim(d)?)?),
            Expr::Zero(d) => Operator::zeros(&HilbertSpace::single(self.dim(d)?)?),
            Expr::Annihilator(d) => self.fock(d)?.b,
            Expr::Creator(d) => self.fock(d)?.b_dag,
            Expr::Number(d) => self.fock(d)?.number,
            Expr::BasisMatrix(d, i, j) => {
                let n = self.dim(d)?;
                if *i >= n || *j >= n {
                    return Err(CliError::usage(format!("basis_matrix index ({i}, {j}) out of range for {n}")));
                }
                let mut m = CMatrix::zeros(n, n);
                m[(*i, *j)] = C64::new(1.0, 0.0);
                Operator::from_matrix(m)?
            }
            Expr::Matrix(rows) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::usage("matrix must be square and nonempty"));
                }
                Operator::from_matrix(CMatrix::from_fn(n, n, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))?
            }
            Expr::Ref(name) => self.named(name)?,
            Expr::Kron(parts) => {
                let mut it = parts.iter();
                let first = it.next().ok_or_else(|| CliError::usage("kron of nothing"))?;
                let mut acc = self.op(first)?;
                for p in it {
                    acc = acc.kron(&self.op(p)?);
                }
                acc
            }
            Expr::Scale(s, x) => self.op(x)?.scale(self.scalar(s)?),
            Expr::Add(parts) => self.fold(parts, "add", |a, b| a + b)?,
            Expr::Mul(parts) => self.fold(parts, "mul", |a, b| a * b)?,
            Expr::Adjoint(x) => self.op(x)?.adjoint(),
            Expr::Funcalc(fc) => self.funcalc(fc)?,
        })
    }

    fn fold(&mut self, parts: &[Expr], what: &str, f: impl Fn(&Operator, &Operator) -> Operator) -> CliResult<Operator> {
        let mut it = parts.iter();
        let first = it.next().ok_or_else(|| CliError::usage(format!("{what} of nothing")))?;
        let mut acc = self.op(first)?;
        for p in it {
            let next = same_space(self.op(p)?, acc.space(), what)?;
            acc = f(&acc, &next);
        }
        Ok(acc)
    }

    fn fitted(&mut self, e: &Expr, space: &HilbertSpace, what: &str) -> CliResult<Operator> {
        same_space(self.op(e)?, space, what)
    }

    fn funcalc(&mut self, fc: &Funcalc) -> CliResult<Operator> {
        let x = self.op(&fc.operand)?;
        let defect = (&x - &x.adjoint()).spectral_norm();
        if defect > 1e-12 * x.spectral_norm().max(1.0) {
            return Err(CliError::usage(format!("funcalc operand is not Hermitian (defect {defect:e})")));
        }
        let arg = |name: &str| -> CliResult<C64> {
            let s = fc
                .args
                .get(name)
                .ok_or_else(|| CliError::usage(format!("funcalc '{}' needs argument '{name}'", fc.name)))?;
            self.scalar(s)
        };
        match fc.name.as_str() {
            // (iθx + γ/2)(iθx − γ/2)⁻¹
            "mirror-scattering" => {
                let theta = arg("theta")?;
                let gamma = arg("gamma")?;
                if gamma.norm() == 0.0 {
                    return Err(CliError::usage("mirror-scattering needs gamma != 0"));
                }
                Ok(hermitian_function(&x, |v| {
                    let z = C64::new(0.0, 1.0) * theta * v;
                    (z + gamma / 2.0) / (z - gamma / 2.0)
                }))
            }
            other => Err(CliError::usage(format!("unknown funcalc '{other}' (available: mirror-scattering)"))),
        }
    }
}

fn same_space(op: Operator, space: &HilbertSpace, what: &str) -> CliResult<Operator> {
    if op.space() == space {
        Ok(op)
    } else if op.dim() == space.total_dim() {
        Ok(op.retag(space.clone())?)
    } else {
        Err(CliError::usage(format!("{what}: operator of dimension {} where {} is required", op.dim(), space.total_dim())))
    }
}
