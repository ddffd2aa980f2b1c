//! Seeded problem generators: the four regularity scenarios under which the
//! iterates converge linearly, and random instance families for exercising
//! the convergence inequalities.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::illposed::InverseProblemSpec;
use crate::metric::Iterate;
use crate::operator::{LinearMap, PsdMap};
use crate::padmm::{PadmmState, SeparableProblem};
use crate::prox::ProxFunction;
use crate::reference::quadratic_kkt_point;

/// Smallest singular value guaranteed for every operator a fixture claims to
/// be coercive.
pub const COERCIVITY_MARGIN: f64 = 0.1;

/// Regularity hypotheses for linear convergence of the iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `g` strongly convex and smooth; `A` and `B^T` coercive.
    I,
    /// `f`, `g` strongly convex, `g` smooth; `B^T` coercive.
    II,
    /// `λ⁰ = 0`; `f`, `g` strongly convex and smooth; `M = [A B]` rank deficient.
    III,
    /// `λ⁰ = 0`; `g` strongly convex; `f`, `g` smooth; `A` coercive; `M` rank deficient.
    IV,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::I, Scenario::II, Scenario::III, Scenario::IV];

    pub fn id(self) -> &'static str {
        match self {
            Scenario::I => "i",
            Scenario::II => "ii",
            Scenario::III => "iii",
            Scenario::IV => "iv",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Scenario::I),
            "ii" | "2" => Ok(Scenario::II),
            "iii" | "3" => Ok(Scenario::III),
            "iv" | "4" => Ok(Scenario::IV),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario id `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioFixture {
    pub scenario: Scenario,
    pub seed: u64,
    pub problem: SeparableProblem<f64>,
    pub init: PadmmState<f64>,
    /// The limit point of the iterates, from the direct KKT solve. For the
    /// rank-deficient scenarios this carries the least-norm multiplier, which
    /// is the limit when `λ⁰ = 0`.
    pub limit: Iterate<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(lo..hi))
}

/// `U diag(s) V^T` with Haar-like orthogonal factors and singular values drawn
/// from `[lo, hi]`.
fn with_singular_values(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
) -> DMatrix<f64> {
    let u = gaussian(rng, rows, rows).qr().q();
    let v = gaussian(rng, cols, cols).qr().q();
    let k = rows.min(cols);
    let mut s = DMatrix::zeros(rows, cols);
    for i in 0..k {
        s[(i, i)] = rng.gen_range(lo..hi);
    }
    u * s * v.transpose()
}

/// `Σ w_i/2 (x_i - a_i)²` with per-coordinate weights.
pub fn diagonal_quadratic(weights: &DVector<f64>, centers: &DVector<f64>) -> ProxFunction<f64> {
    ProxFunction::Separable(
        weights
            .iter()
            .zip(centers.iter())
            .map(|(w, c)| {
                (
                    1,
                    ProxFunction::Quadratic {
                        weight: *w,
                        center: DVector::from_element(1, *c),
                    },
                )
            })
            .collect(),
    )
}

fn random_quadratic(rng: &mut ChaCha8Rng, n: usize) -> ProxFunction<f64> {
    let w = uniform_vec(rng, n, 0.5, 2.0);
    let c = gaussian_vec(rng, n);
    diagonal_quadratic(&w, &c)
}

fn check_coercive(name: &str, m: &LinearMap<f64>) -> Result<()> {
    let s = m.min_singular_value();
    if s >= COERCIVITY_MARGIN {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "generated {name} has smallest singular value {s:.3e} < {COERCIVITY_MARGIN}"
        )))
    }
}

/// Builds a problem satisfying the hypotheses of `scenario` with blocks of
/// size `n` (at most 50), together with the direct-solve limit point.
pub fn make_scenario_fixture(scenario: Scenario, n: usize, seed: u64) -> Result<ScenarioFixture> {
    if n == 0 || n > 50 {
        return Err(Error::InvalidParameter(format!(
            "block size {n} outside 1..=50"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce7_a210);
    let rho = 1.0;
    let (a, b, f, g, m) = match scenario {
        Scenario::I => {
            let a = LinearMap::dense(with_singular_values(&mut rng, n, n, 0.5, 1.5));
            check_coercive("A", &a)?;
            (
                a,
                LinearMap::identity(n),
                ProxFunction::Zero,
                random_quadratic(&mut rng, n),
                n,
            )
        }
        Scenario::II => {
            let a = LinearMap::dense(gaussian(&mut rng, n, n) / (n as f64).sqrt());
            let f = random_quadratic(&mut rng, n);
            let g = random_quadratic(&mut rng, n);
            (a, LinearMap::identity(n), f, g, n)
        }
        Scenario::III => {
            // B = A C puts the columns of B inside the range of A, so
            // rank [A B] = n < 2n while M^T restricted to its range stays coercive.
            let m = 2 * n + 2;
            let a = with_singular_values(&mut rng, m, n, 0.5, 1.5);
            let c = with_singular_values(&mut rng, n, n, 0.5, 1.5);
            let b = &a * c;
            let f = random_quadratic(&mut rng, n);
            let g = random_quadratic(&mut rng, n);
            (LinearMap::dense(a), LinearMap::dense(b), f, g, m)
        }
        Scenario::IV => {
            let m = 2 * n + 2;
            let a = with_singular_values(&mut rng, m, n, 0.5, 1.5);
            let c = with_singular_values(&mut rng, n, n, 0.5, 1.5);
            let b = &a * c;
            let a = LinearMap::dense(a);
            check_coercive("A", &a)?;
            (
                a,
                LinearMap::dense(b),
                ProxFunction::Zero,
                random_quadratic(&mut rng, n),
                m,
            )
        }
    };
    let x0 = gaussian_vec(&mut rng, n);
    let y0 = gaussian_vec(&mut rng, n);
    let c = a.apply(&x0)? + b.apply(&y0)?;
    let problem = SeparableProblem::builder(a, b, c, f, g, rho).build()?;
    let lambda0 = match scenario {
        Scenario::III | Scenario::IV => DVector::zeros(m),
        _ => gaussian_vec(&mut rng, m),
    };
    let init = PadmmState::new(
        gaussian_vec(&mut rng, n),
        gaussian_vec(&mut rng, n),
        lambda0,
    );
    let limit = quadratic_kkt_point(&problem)?;
    Ok(ScenarioFixture {
        scenario,
        seed,
        problem,
        init,
        limit,
    })
}

/// Random instance families used for checking the convergence inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Strongly convex quadratics, random proximal weights.
    Quadratic,
    /// `f = w||x||₁` with a linearized x-step, `g` a box indicator, `B = -I`.
    L1Box,
    /// Quadratic `f`, `g` the nonnegative-orthant indicator with a linearized y-step.
    NonnegMix,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Quadratic, Family::L1Box, Family::NonnegMix];
}

#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub family: Family,
    pub seed: u64,
    pub problem: SeparableProblem<f64>,
    pub init: PadmmState<f64>,
}

/// Random operator whose nonzero singular values lie in `[0.5, 1.5]`. Plain
/// Gaussian draws are often so ill-conditioned that a few hundred iterations
/// stay in the transient phase.
fn conditioned(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> LinearMap<f64> {
    LinearMap::dense(with_singular_values(rng, rows, cols, 0.5, 1.5))
}

fn random_weight(rng: &mut ChaCha8Rng, n: usize) -> Result<PsdMap<f64>> {
    Ok(match rng.gen_range(0..3) {
        0 => PsdMap::zero(n),
        1 => PsdMap::diagonal(uniform_vec(rng, n, 0.0, 1.0))?,
        _ => PsdMap::gram(&LinearMap::dense(gaussian(rng, n, n) / (n as f64).sqrt())),
    })
}

/// Draws one instance of `family`; dimensions are at most 10 per block and the
/// constraint is feasible by construction.
pub fn random_instance(family: Family, seed: u64) -> Result<RandomInstance> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ family as u64);
    let rho = rng.gen_range(0.5..2.0);
    let nx = rng.gen_range(1..=10);
    let ny = rng.gen_range(1..=10);
    let problem = match family {
        Family::Quadratic => {
            let m = rng.gen_range(1..=10);
            let a = conditioned(&mut rng, m, nx);
            let b = conditioned(&mut rng, m, ny);
            let c = a.apply(&gaussian_vec(&mut rng, nx))? + b.apply(&gaussian_vec(&mut rng, ny))?;
            let f = random_quadratic(&mut rng, nx);
            let g = random_quadratic(&mut rng, ny);
            let linearize = rng.gen_bool(0.25);
            let mut builder = SeparableProblem::builder(a.clone(), b, c, f, g, rho);
            builder = if linearize {
                let na = a.norm_exact();
                builder.linearize_x(1.01 * rho * na * na + 1e-12)
            } else {
                builder.p(random_weight(&mut rng, nx)?)
            };
            builder.q(random_weight(&mut rng, ny)?).build()?
        }
        Family::L1Box => {
            let m = ny;
            let a = conditioned(&mut rng, m, nx);
            let lower = uniform_vec(&mut rng, m, -2.0, -0.1);
            let upper = uniform_vec(&mut rng, m, 0.1, 2.0);
            let y0 = DVector::from_fn(m, |i, _| rng.gen_range(lower[i]..upper[i]));
            let c = a.apply(&gaussian_vec(&mut rng, nx))? - &y0;
            let na = a.norm_exact();
            SeparableProblem::builder(
                a,
                LinearMap::identity(m).scaled(-1.0),
                c,
                ProxFunction::L1 {
                    weight: rng.gen_range(0.1..1.0),
                },
                ProxFunction::Box { lower, upper },
                rho,
            )
            .linearize_x(1.01 * rho * na * na + 1e-12)
            .build()?
        }
        Family::NonnegMix => {
            let m = rng.gen_range(1..=10);
            let a = conditioned(&mut rng, m, nx);
            let b = conditioned(&mut rng, m, ny);
            let y0 = uniform_vec(&mut rng, ny, 0.0, 1.0);
            let c = a.apply(&gaussian_vec(&mut rng, nx))? + b.apply(&y0)?;
            let nb = b.norm_exact();
            let p = random_weight(&mut rng, nx)?;
            let f = random_quadratic(&mut rng, nx);
            SeparableProblem::builder(a, b, c, f, ProxFunction::NonNegative, rho)
                .p(p)
                .linearize_y(1.01 * rho * nb * nb + 1e-12)
                .build()?
        }
    };
    let init = PadmmState::new(
        gaussian_vec(&mut rng, problem.x_dim()),
        gaussian_vec(&mut rng, problem.y_dim()),
        gaussian_vec(&mut rng, problem.dual_dim()),
    );
    Ok(RandomInstance {
        family,
        seed,
        problem,
        init,
    })
}

/// A small inverse problem eligible for the reduced scheme: `L = I`,
/// `f = ½||·||²`, `C` the nonnegative orthant. The general splitting penalty
/// is fixed to 1 so both schemes generate the same `(z, x, λ, ν)` sequence.
pub fn random_inverse_instance(seed: u64) -> Result<InverseProblemSpec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a5e);
    let n = rng.gen_range(1..=10);
    let m = rng.gen_range(1..=10);
    let a = LinearMap::dense(gaussian(&mut rng, m, n) / (n as f64).sqrt());
    let rho1 = rng.gen_range(0.5..20.0);
    let rho3 = rng.gen_range(0.5..5.0);
    let q = random_weight(&mut rng, n)?;
    let b = gaussian_vec(&mut rng, m);
    let delta = rng.gen_range(0.0..0.1);
    InverseProblemSpec::new(
        a,
        LinearMap::identity(n),
        ProxFunction::NonNegative,
        ProxFunction::half_norm_sq(n),
        (rho1, 1.0, rho3),
        q,
        b,
        delta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_hypotheses_hold() {
        for s in Scenario::ALL {
            for seed in 0..3 {
                let fx = make_scenario_fixture(s, 6, seed).unwrap();
                let p = &fx.problem;
                assert!(p.g().modulus() > 0.0, "{s}: g must be strongly convex");
                match s {
                    Scenario::I => {
                        assert!(p.a().min_singular_value() >= COERCIVITY_MARGIN);
                        assert_eq!(p.b().as_scaled_identity(), Some(1.0));
                    }
                    Scenario::II => {
                        assert!(p.f().modulus() > 0.0);
                        assert_eq!(p.b().as_scaled_identity(), Some(1.0));
                    }
                    Scenario::III | Scenario::IV => {
                        assert_eq!(fx.init.lambda.amax(), 0.0);
                        let m = p.a().to_dense().columns(0, 6).into_owned();
                        let full = {
                            let mut mm = DMatrix::zeros(p.dual_dim(), 12);
                            mm.columns_mut(0, 6).copy_from(&m);
                            mm.columns_mut(6, 6).copy_from(&p.b().to_dense());
                            mm
                        };
                        assert_eq!(full.rank(1e-9), 6, "{s}: [A B] must be rank deficient");
                        // Smallest nonzero singular value of M bounds M^T on its range.
                        let sv = full.singular_values();
                        let smallest_nonzero = sv
                            .iter()
                            .copied()
                            .filter(|v| *v > 1e-9)
                            .fold(f64::INFINITY, f64::min);
                        assert!(smallest_nonzero >= COERCIVITY_MARGIN);
                        if s == Scenario::IV {
                            assert!(p.a().min_singular_value() >= COERCIVITY_MARGIN);
                        } else {
                            assert!(p.f().modulus() > 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn scenario_id_parsing() {
        assert_eq!("iii".parse::<Scenario>().unwrap(), Scenario::III);
        assert!("v".parse::<Scenario>().is_err());
        assert!(make_scenario_fixture(Scenario::I, 0, 0).is_err());
        assert!(make_scenario_fixture(Scenario::I, 51, 0).is_err());
    }

    #[test]
    fn random_instances_are_feasible_and_deterministic() {
        for fam in Family::ALL {
            for seed in 0..10 {
                let a = random_instance(fam, seed).unwrap();
                let b = random_instance(fam, seed).unwrap();
                assert_eq!(a.init, b.init);
                assert!(a.problem.x_dim() <= 10 && a.problem.y_dim() <= 10);
            }
        }
    }
}
