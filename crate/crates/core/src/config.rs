//! TOML configuration for two-block problems and regularization runs.
//!
//! Operators are tagged by `kind`. Dense matrices are given inline in
//! row-major order or as a CSV file (one row per line, no header) resolved
//! relative to the config file. The gravity kernel is regenerated from its
//! parameters rather than stored.
//!
//! ```toml
//! [problem]
//! rho = 1.0
//! c = [1.0]
//! a = { kind = "identity", dim = 1 }
//! b = { kind = "identity", dim = 1 }
//! f = { kind = "quadratic", weight = 1.0, center = [0.0] }
//! g = { kind = "quadratic", weight = 1.0, center = [0.0] }
//!
//! [stop]
//! max_iter = 200
//! tol = 1e-10
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gravity::{build_kernel_matrix, grid_and_weights, plain_operator};
use crate::illposed::{InverseProblemSpec, Scheme, SourceCertificate};
use crate::operator::{LinearMap, PsdMap};
use crate::padmm::{PadmmState, SeparableProblem, StopRule};
use crate::prox::ProxFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapConfig {
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    DenseCsv {
        path: PathBuf,
    },
    Diagonal {
        values: Vec<f64>,
    },
    Identity {
        dim: usize,
    },
    ScaledIdentity {
        dim: usize,
        scale: f64,
    },
    Zero {
        rows: usize,
        cols: usize,
    },
    /// The trapezoid-discretized gravity kernel in plain coordinates.
    Gravity {
        n: usize,
        d: f64,
    },
}

impl MapConfig {
    pub fn build(&self, base: &Path) -> Result<LinearMap<f64>> {
        Ok(match self {
            MapConfig::Dense { rows, cols, data } => LinearMap::from_row_slice(*rows, *cols, data)?,
            MapConfig::DenseCsv { path } => LinearMap::dense(read_matrix_csv(&base.join(path))?),
            MapConfig::Diagonal { values } => {
                LinearMap::diagonal(DVector::from_vec(values.clone()))
            }
            MapConfig::Identity { dim } => LinearMap::identity(*dim),
            MapConfig::ScaledIdentity { dim, scale } => LinearMap::scaled_identity(*dim, *scale),
            MapConfig::Zero { rows, cols } => LinearMap::zero(*rows, *cols),
            MapConfig::Gravity { n, d } => {
                let (_, w) = grid_and_weights(*n)?;
                LinearMap::dense(plain_operator(&build_kernel_matrix(*n, *d)?, &w))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsdConfig {
    Zero {
        dim: usize,
    },
    Diagonal {
        values: Vec<f64>,
    },
    ScaledIdentity {
        dim: usize,
        scale: f64,
    },
    /// `M^T M`.
    Gram {
        map: MapConfig,
    },
}

impl PsdConfig {
    pub fn build(&self, base: &Path) -> Result<PsdMap<f64>> {
        match self {
            PsdConfig::Zero { dim } => Ok(PsdMap::zero(*dim)),
            PsdConfig::Diagonal { values } => PsdMap::diagonal(DVector::from_vec(values.clone())),
            PsdConfig::ScaledIdentity { dim, scale } => PsdMap::scaled_identity(*dim, *scale),
            PsdConfig::Gram { map } => Ok(PsdMap::gram(&map.build(base)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProxConfig {
    /// `(weight/2)||x - center||²`.
    Quadratic {
        weight: f64,
        center: Vec<f64>,
    },
    L1 {
        weight: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Nonnegative,
    Zero,
}

impl ProxConfig {
    pub fn build(&self) -> ProxFunction<f64> {
        match self {
            ProxConfig::Quadratic { weight, center } => ProxFunction::Quadratic {
                weight: *weight,
                center: DVector::from_vec(center.clone()),
            },
            ProxConfig::L1 { weight } => ProxFunction::L1 { weight: *weight },
            ProxConfig::Box { lower, upper } => ProxFunction::Box {
                lower: DVector::from_vec(lower.clone()),
                upper: DVector::from_vec(upper.clone()),
            },
            ProxConfig::Nonnegative => ProxFunction::NonNegative,
            ProxConfig::Zero => ProxFunction::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub rho: f64,
    pub c: Vec<f64>,
    pub a: MapConfig,
    pub b: MapConfig,
    pub f: ProxConfig,
    pub g: ProxConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PsdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<PsdConfig>,
    /// `τ` for the linearized x-step, `P = τI - ρA^T A`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linearize_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linearize_y: Option<f64>,
}

impl ProblemConfig {
    pub fn build(&self, base: &Path) -> Result<SeparableProblem<f64>> {
        let mut builder = SeparableProblem::builder(
            self.a.build(base)?,
            self.b.build(base)?,
            DVector::from_vec(self.c.clone()),
            self.f.build(),
            self.g.build(),
            self.rho,
        );
        if let Some(p) = &self.p {
            builder = builder.p(p.build(base)?);
        }
        if let Some(q) = &self.q {
            builder = builder.q(q.build(base)?);
        }
        if let Some(tau) = self.linearize_x {
            builder = builder.linearize_x(tau);
        }
        if let Some(tau) = self.linearize_y {
            builder = builder.linearize_y(tau);
        }
        builder.build()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            max_iter: 10_000,
            tol: 1e-10,
        }
    }
}

impl From<StopConfig> for StopRule<f64> {
    fn from(s: StopConfig) -> Self {
        StopRule {
            max_iter: s.max_iter,
            tol: s.tol,
        }
    }
}

/// Input of the `solve` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: ProblemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitConfig>,
    #[serde(default)]
    pub stop: StopConfig,
    /// Compute a KKT reference point for distance diagnostics.
    #[serde(default = "yes")]
    pub reference: bool,
}

fn yes() -> bool {
    true
}

impl SolveConfig {
    pub fn initial_state(&self, problem: &SeparableProblem<f64>) -> Result<PadmmState<f64>> {
        let Some(init) = &self.init else {
            return Ok(PadmmState::zeros(problem));
        };
        for (context, expected, got) in [
            ("init.x", problem.x_dim(), init.x.len()),
            ("init.y", problem.y_dim(), init.y.len()),
            ("init.lambda", problem.dual_dim(), init.lambda.len()),
        ] {
            if expected != got {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    got,
                });
            }
        }
        Ok(PadmmState::new(
            DVector::from_vec(init.x.clone()),
            DVector::from_vec(init.y.clone()),
            DVector::from_vec(init.lambda.clone()),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    #[default]
    General,
    Reduced,
}

impl From<SchemeConfig> for Scheme {
    fn from(s: SchemeConfig) -> Self {
        match s {
            SchemeConfig::General => Scheme::General,
            SchemeConfig::Reduced => Scheme::Reduced,
        }
    }
}

/// Input of the `regularize` command. `b` is the exact data; noise of the
/// requested level is added from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseConfig {
    pub a: MapConfig,
    pub l: MapConfig,
    pub c_set: ProxConfig,
    pub f: ProxConfig,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<PsdConfig>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_true: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateConfig>,
}

impl InverseConfig {
    /// The spec with exact data and `δ = 0`.
    pub fn build(&self, base: &Path) -> Result<InverseProblemSpec<f64>> {
        let a = self.a.build(base)?;
        let q = match &self.q {
            Some(q) => q.build(base)?,
            None => PsdMap::zero(a.cols()),
        };
        InverseProblemSpec::new(
            a,
            self.l.build(base)?,
            self.c_set.build(),
            self.f.build(),
            (self.rho1, self.rho2, self.rho3),
            q,
            DVector::from_vec(self.b.clone()),
            0.0,
        )
    }

    pub fn x_true(&self) -> Option<DVector<f64>> {
        self.x_true.as_ref().map(|v| DVector::from_vec(v.clone()))
    }

    /// Requires `x_true` alongside the multipliers.
    pub fn source_certificate(&self) -> Result<Option<SourceCertificate<f64>>> {
        let Some(c) = &self.certificate else {
            return Ok(None);
        };
        let x_true = self
            .x_true()
            .ok_or_else(|| Error::InvalidParameter("a certificate needs x_true".into()))?;
        Ok(Some(SourceCertificate {
            x_true,
            lambda: DVector::from_vec(c.lambda.clone()),
            mu: DVector::from_vec(c.mu.clone()),
            nu: DVector::from_vec(c.nu.clone()),
        }))
    }
}

pub fn from_toml<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))
}

/// Reads a config and returns it with the directory relative paths resolve
/// against.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, PathBuf)> {
    let text = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((from_toml(&text)?, base))
}

/// A headerless CSV of equal-length numeric rows.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: `{v}`: {e}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::Config(format!("{}: empty matrix", path.display())));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch {
            context: "matrix CSV row length",
            expected: cols,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// The scalar example `min ½x² + ½y²` s.t. `x + y = 1` with `ρ = 1`.
pub fn example_solve_config() -> SolveConfig {
    SolveConfig {
        problem: ProblemConfig {
            rho: 1.0,
            c: vec![1.0],
            a: MapConfig::Identity { dim: 1 },
            b: MapConfig::Identity { dim: 1 },
            f: ProxConfig::Quadratic {
                weight: 1.0,
                center: vec![0.0],
            },
            g: ProxConfig::Quadratic {
                weight: 1.0,
                center: vec![0.0],
            },
            p: None,
            q: None,
            linearize_x: None,
            linearize_y: None,
        },
        init: None,
        stop: StopConfig {
            max_iter: 200,
            tol: 1e-10,
        },
        reference: true,
    }
}

/// A two-unknown nonnegative least-norm problem with a known certificate:
/// `A = [1 1]`, `b = 2`, so `x† = (1, 1)`, `μ† = x†`, `ν† = 0`, `λ† = -1`.
pub fn example_inverse_config() -> InverseConfig {
    InverseConfig {
        a: MapConfig::Dense {
            rows: 1,
            cols: 2,
            data: vec![1.0, 1.0],
        },
        l: MapConfig::Identity { dim: 2 },
        c_set: ProxConfig::Nonnegative,
        f: ProxConfig::Quadratic {
            weight: 1.0,
            center: vec![0.0, 0.0],
        },
        rho1: 10.0,
        rho2: 1.0,
        rho3: 1.0,
        q: None,
        b: vec![2.0],
        seed: 0,
        scheme: SchemeConfig::Reduced,
        x_true: Some(vec![1.0, 1.0]),
        certificate: Some(CertificateConfig {
            lambda: vec![-1.0],
            mu: vec![1.0, 1.0],
            nu: vec![0.0, 0.0],
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples_round_trip_and_build() {
        let s = example_solve_config();
        let text = to_toml(&s).unwrap();
        assert_eq!(from_toml::<SolveConfig>(&text).unwrap(), s);
        let p = s.problem.build(Path::new(".")).unwrap();
        assert_eq!(p.x_dim(), 1);

        let inv = example_inverse_config();
        let text = to_toml(&inv).unwrap();
        assert_eq!(from_toml::<InverseConfig>(&text).unwrap(), inv);
        let spec = inv.build(Path::new(".")).unwrap();
        assert!(spec.supports_reduced());
        inv.source_certificate()
            .unwrap()
            .unwrap()
            .validate(&spec)
            .unwrap();
    }

    #[test]
    fn module_doc_example_parses() {
        let text = r#"
            [problem]
            rho = 1.0
            c = [1.0]
            a = { kind = "identity", dim = 1 }
            b = { kind = "identity", dim = 1 }
            f = { kind = "quadratic", weight = 1.0, center = [0.0] }
            g = { kind = "quadratic", weight = 1.0, center = [0.0] }

            [stop]
            max_iter = 200
            tol = 1e-10
        "#;
        assert_eq!(
            from_toml::<SolveConfig>(text).unwrap(),
            example_solve_config()
        );
    }

    #[test]
    fn rejects_bad_input() {
        let mut s = example_solve_config();
        s.problem.rho = -1.0;
        assert!(s.problem.build(Path::new(".")).is_err());
        assert!(matches!(
            from_toml::<SolveConfig>("[problem]\nrho = 1"),
            Err(Error::Config(_))
        ));
        let text = to_toml(&example_solve_config())
            .unwrap()
            .replace("[stop]", "[stop]\nbogus = 1");
        assert!(from_toml::<SolveConfig>(&text).is_err());
        let mut s = example_solve_config();
        s.init = Some(InitConfig {
            x: vec![0.0, 0.0],
            y: vec![0.0],
            lambda: vec![0.0],
        });
        let p = s.problem.build(Path::new(".")).unwrap();
        assert!(s.initial_state(&p).is_err());
    }

    #[test]
    fn matrix_csv_is_resolved_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "1, 2\n3, 4\n").unwrap();
        let m = MapConfig::DenseCsv {
            path: "a.csv".into(),
        }
        .build(dir.path())
        .unwrap();
        assert_eq!(
            m.to_dense(),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])
        );
        fs::write(dir.path().join("bad.csv"), "1, 2\n3\n").unwrap();
        assert!(MapConfig::DenseCsv {
            path: "bad.csv".into()
        }
        .build(dir.path())
        .is_err());
    }

    #[test]
    fn gravity_kernel_is_regenerated() {
        let m = MapConfig::Gravity { n: 5, d: 0.1 }
            .build(Path::new("."))
            .unwrap();
        let (_, w) = grid_and_weights(5).unwrap();
        assert_eq!(
            m.to_dense(),
            plain_operator(&build_kernel_matrix(5, 0.1).unwrap(), &w)
        );
    }

    fn map_strategy() -> impl Strategy<Value = MapConfig> {
        prop_oneof![
            (1usize..4, 1usize..4)
                .prop_flat_map(|(r, c)| (
                    Just(r),
                    Just(c),
                    prop::collection::vec(-1e3..1e3f64, r * c)
                ))
                .prop_map(|(rows, cols, data)| MapConfig::Dense { rows, cols, data }),
            prop::collection::vec(-1e3..1e3f64, 1..5)
                .prop_map(|values| MapConfig::Diagonal { values }),
            (1usize..9, -5.0..5.0f64)
                .prop_map(|(dim, scale)| MapConfig::ScaledIdentity { dim, scale }),
            (1usize..9, 1usize..9).prop_map(|(rows, cols)| MapConfig::Zero { rows, cols }),
        ]
    }

    proptest! {
        #[test]
        fn map_configs_round_trip(a in map_strategy(), b in map_strategy(), rho in 1e-3..1e3f64) {
            let mut s = example_solve_config();
            s.problem.a = a;
            s.problem.b = b;
            s.problem.rho = rho;
            s.problem.q = Some(PsdConfig::Diagonal { values: vec![rho] });
            let text = to_toml(&s).unwrap();
            prop_assert_eq!(from_toml::<SolveConfig>(&text).unwrap(), s);
        }
    }
}
