//! Seeded problem generators and inline problem specs.
//!
//! All randomness comes from ChaCha8 seeded with a 64-bit value, so any
//! generated problem reproduces exactly from its name, parameters, and seed,
//! on any platform.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::io::matrix_market::{read_matrix_market, read_vector};
use crate::linalg::{Matrix, OrthonormalBasis, Vector};
use crate::problem::LinearProblem;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    let data: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Vector::new(data).expect("gaussian entries are finite")
}

/// Random orthogonal matrix from orthonormalized Gaussian columns.
fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut basis = OrthonormalBasis::new();
    while basis.len() < n {
        // A Gaussian vector is dependent on a proper subspace with
        // probability zero; retry on the measure-zero event.
        let v = gaussian_vector(n, rng);
        let _ = basis.push(&v, 1e-12).expect("finite input");
    }
    Matrix::from_columns(basis.vectors()).expect("square orthonormal set")
}

/// Cycle permutation problem: A maps e_i to e_{i+1 mod N}, b = e_k, x0 = 0.
pub fn cycle(n: usize, k: usize) -> Result<LinearProblem> {
    if n < 1 {
        return Err(Error::InvalidParameter("cycle needs N >= 1".into()));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!(
            "cycle basis index k={k} out of range for N={n}"
        )));
    }
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a.set((i + 1) % n, i, 1.0);
    }
    LinearProblem::new(a, Vector::basis(n, k), Vector::zeros(n))
}

/// Dense matrix with prescribed condition number from random orthogonal
/// factors and a log-spaced singular spectrum; b and x0 are Gaussian.
pub fn random_dense(n: usize, cond: f64, seed: u64) -> Result<LinearProblem> {
    if n < 1 {
        return Err(Error::InvalidParameter("random_dense needs N >= 1".into()));
    }
    if !cond.is_finite() || cond < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "condition target must be >= 1, got {cond}"
        )));
    }
    let mut rng = rng_for(seed);
    let u = random_orthogonal(n, &mut rng);
    let v = random_orthogonal(n, &mut rng);
    // Singular values from 1 down to 1/cond, log-spaced.
    let mut scaled = v.transpose();
    for i in 0..n {
        let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        let sigma = cond.powf(-t);
        for j in 0..n {
            scaled.set(i, j, sigma * scaled.get(i, j));
        }
    }
    let a = u.matmul(&scaled)?;
    let b = gaussian_vector(n, &mut rng);
    let x0 = gaussian_vector(n, &mut rng);
    LinearProblem::new(a, b, x0)
}

/// Symmetric matrix with eigenvalues spread linearly over [lmin, lmax];
/// the interval must not cross zero. b and x0 are Gaussian.
pub fn shifted_spd(n: usize, lmin: f64, lmax: f64, seed: u64) -> Result<LinearProblem> {
    if n < 1 {
        return Err(Error::InvalidParameter("shifted_spd needs N >= 1".into()));
    }
    if !(lmin.is_finite() && lmax.is_finite()) || lmin * lmax <= 0.0 || lmin > lmax {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue range [{lmin}, {lmax}] must be ordered and exclude zero"
        )));
    }
    let mut rng = rng_for(seed);
    let q = random_orthogonal(n, &mut rng);
    let mut scaled = q.transpose();
    for i in 0..n {
        let t = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
        let lambda = lmin + t * (lmax - lmin);
        for j in 0..n {
            scaled.set(i, j, lambda * scaled.get(i, j));
        }
    }
    let a = q.matmul(&scaled)?;
    let b = gaussian_vector(n, &mut rng);
    let x0 = gaussian_vector(n, &mut rng);
    LinearProblem::new(a, b, x0)
}

/// Diagonal problem with the given nonzero diagonal, b = ones, x0 = 0.
pub fn diag(values: &[f64]) -> Result<LinearProblem> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("diag needs at least one value".into()));
    }
    if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "diag values must be finite and nonzero".into(),
        ));
    }
    let n = values.len();
    let mut a = Matrix::zeros(n, n);
    for (i, v) in values.iter().enumerate() {
        a.set(i, i, *v);
    }
    let b = Vector::new(vec![1.0; n]).expect("nonempty");
    LinearProblem::new(a, b, Vector::zeros(n))
}

/// Problem whose GMRES run stalls at a chosen step.
///
/// In a random orthonormal basis v_0..v_{N-1}, A maps v_j to
/// v_{j+1} + d_j v_0 (and v_{N-1} back to v_0), with d_j nonzero except
/// d_eta = 0. With b = v_0 and x0 = 0 the minimizer gains nothing at step
/// eta+1, so the first repeated iterate is x_eta and the first dependent
/// iterate difference appears one step later.
pub fn stagnating(n: usize, eta: usize, seed: u64) -> Result<LinearProblem> {
    if n < 2 {
        return Err(Error::InvalidParameter("stagnating needs N >= 2".into()));
    }
    if eta + 2 > n {
        return Err(Error::InvalidParameter(format!(
            "stall step {eta} needs dimension at least {}",
            eta + 2
        )));
    }
    let mut rng = rng_for(seed);
    let v = random_orthogonal(n, &mut rng);
    let mut images = Vec::with_capacity(n);
    for j in 0..n {
        if j + 1 == n {
            images.push(v.column(0));
        } else {
            let d = if j == eta {
                0.0
            } else {
                let mag: f64 = rng.random_range(0.5..1.5);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            };
            let mut img = v.column(j + 1);
            img.add_scaled(d, &v.column(0));
            images.push(img);
        }
    }
    let img = Matrix::from_columns(&images)?;
    let a = img.matmul(&v.transpose())?;
    LinearProblem::new(a, v.column(0), Vector::zeros(n))
}

/// How the starting point of a spec is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum X0Spec {
    Zero,
    Random(Option<u64>),
    Literal(Vec<f64>),
}

/// Where the problem data of a spec comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Generator {
        name: String,
        params: BTreeMap<String, String>,
    },
    Files {
        a: PathBuf,
        b: BValue,
    },
}

/// Right-hand side for file-based specs: another file or an inline vector.
#[derive(Debug, Clone, PartialEq)]
pub enum BValue {
    File(PathBuf),
    Literal(Vec<f64>),
}

/// Parsed `--problem` argument: a generator call or file references, plus an
/// optional starting-point override.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub source: ProblemSource,
    pub x0: Option<X0Spec>,
    pub seed: u64,
}

const GENERATOR_NAMES: &[&str] = &["cycle", "random_dense", "shifted_spd", "diag"];

fn parse_literal_vector(s: &str) -> Result<Vec<f64>> {
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::InvalidParameter(format!("vector literal must be [v;v;...], got '{s}'")))?;
    inner
        .split(';')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("invalid number '{t}' in vector literal")))
        })
        .collect()
}

fn parse_x0(s: &str) -> Result<X0Spec> {
    if s == "zero" {
        return Ok(X0Spec::Zero);
    }
    if s == "random" {
        return Ok(X0Spec::Random(None));
    }
    if let Some(rest) = s.strip_prefix("random(") {
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::InvalidParameter(format!("unclosed random(...) in '{s}'")))?;
        let seed: u64 = inner
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("invalid seed '{inner}'")))?;
        return Ok(X0Spec::Random(Some(seed)));
    }
    Ok(X0Spec::Literal(parse_literal_vector(s)?))
}

/// Splits `k=v,k=v,...` into a map; values may contain semicolons and
/// brackets for vector literals.
pub fn parse_params(s: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    if s.is_empty() {
        return Ok(map);
    }
    for part in s.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got '{part}'")))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate parameter '{k}'")));
        }
    }
    Ok(map)
}

impl ProblemSpec {
    /// Parses an inline spec: `cycle:N=6,k=1`, `random_dense:N=8,cond=100`,
    /// `diag:values=[-1;-2;-3]`, or `file:A=a.mtx,b=b.mtx`. A `seed=` or
    /// `x0=` entry overrides the defaults; otherwise `default_seed` applies
    /// and the source decides the starting point.
    pub fn parse(s: &str, default_seed: u64) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), r),
            None => (s.trim(), ""),
        };
        let mut params = parse_params(rest)?;
        let seed = match params.remove("seed") {
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("invalid seed '{v}'")))?,
            None => default_seed,
        };
        let x0 = params.remove("x0").map(|v| parse_x0(&v)).transpose()?;

        if name == "file" {
            let a = params
                .remove("A")
                .or_else(|| params.remove("a"))
                .ok_or_else(|| Error::InvalidParameter("file spec needs A=<path>".into()))?;
            let b = params
                .remove("b")
                .ok_or_else(|| Error::InvalidParameter("file spec needs b=<path or [v;...]>".into()))?;
            if let Some(k) = params.keys().next() {
                return Err(Error::InvalidParameter(format!("unknown file parameter '{k}'")));
            }
            let b = if b.starts_with('[') {
                BValue::Literal(parse_literal_vector(&b)?)
            } else {
                BValue::File(PathBuf::from(b))
            };
            return Ok(ProblemSpec {
                source: ProblemSource::Files {
                    a: PathBuf::from(a),
                    b,
                },
                x0,
                seed,
            });
        }

        if !GENERATOR_NAMES.contains(&name) {
            return Err(Error::InvalidParameter(format!(
                "unknown problem source '{name}'; expected one of {GENERATOR_NAMES:?} or 'file'"
            )));
        }
        Ok(ProblemSpec {
            source: ProblemSource::Generator {
                name: name.to_string(),
                params,
            },
            x0,
            seed,
        })
    }

    /// Builds the problem: runs the generator or reads the files, then
    /// applies the starting-point override.
    pub fn build(&self) -> Result<LinearProblem> {
        let base = match &self.source {
            ProblemSource::Generator { name, params } => {
                generate_problem(name, params, self.seed)?
            }
            ProblemSource::Files { a, b } => {
                let a = read_matrix_market(a)?;
                let b = match b {
                    BValue::File(p) => read_vector(p)?,
                    BValue::Literal(vals) => Vector::new(vals.clone())?,
                };
                let x0 = Vector::zeros(a.rows());
                LinearProblem::new(a, b, x0)?
            }
        };
        let x0 = match &self.x0 {
            None => return Ok(base),
            Some(X0Spec::Zero) => Vector::zeros(base.dim()),
            Some(X0Spec::Random(seed)) => {
                let mut rng = rng_for(seed.unwrap_or(self.seed));
                gaussian_vector(base.dim(), &mut rng)
            }
            Some(X0Spec::Literal(vals)) => Vector::new(vals.clone())?,
        };
        LinearProblem::new(base.a, base.b, x0)
    }
}

fn get_param<T: std::str::FromStr>(
    params: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    match params.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("invalid value '{v}' for '{key}'"))),
    }
}

fn require_param<T: std::str::FromStr>(params: &BTreeMap<String, String>, key: &str) -> Result<T> {
    get_param(params, key)?
        .ok_or_else(|| Error::InvalidParameter(format!("missing parameter '{key}'")))
}

fn reject_unknown(params: &BTreeMap<String, String>, known: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !known.contains(&k.as_str()) {
            return Err(Error::InvalidParameter(format!("unknown parameter '{k}'")));
        }
    }
    Ok(())
}

/// Runs a registered generator by name with string parameters.
pub fn generate_problem(
    name: &str,
    params: &BTreeMap<String, String>,
    seed: u64,
) -> Result<LinearProblem> {
    match name {
        "cycle" => {
            reject_unknown(params, &["N", "k"])?;
            let n: usize = require_param(params, "N")?;
            let k: usize = get_param(params, "k")?.unwrap_or(0);
            cycle(n, k)
        }
        "random_dense" => {
            reject_unknown(params, &["N", "cond"])?;
            let n: usize = require_param(params, "N")?;
            let cond: f64 = require_param(params, "cond")?;
            random_dense(n, cond, seed)
        }
        "shifted_spd" => {
            reject_unknown(params, &["N", "lmin", "lmax"])?;
            let n: usize = require_param(params, "N")?;
            let lmin: f64 = require_param(params, "lmin")?;
            let lmax: f64 = require_param(params, "lmax")?;
            shifted_spd(n, lmin, lmax, seed)
        }
        "diag" => {
            reject_unknown(params, &["values"])?;
            let raw = params
                .get("values")
                .ok_or_else(|| Error::InvalidParameter("missing parameter 'values'".into()))?;
            let values = if raw.starts_with('[') {
                parse_literal_vector(raw)?
            } else {
                vec![raw
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("invalid value '{raw}'")))?]
            };
            diag(&values)
        }
        other => Err(Error::InvalidParameter(format!("unknown generator '{other}'"))),
    }
}
