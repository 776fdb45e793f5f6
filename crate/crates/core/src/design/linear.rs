use std::sync::Arc;

use crate::linalg::{
    dot, is_hurwitz, solve_linear, solve_lyapunov, symmetric_eigenvalues, symmetric_extremal_eigs,
    LinalgError, Matrix, Tolerances, Vector,
};
use crate::plant::{Plant, ScalarMap};

use super::{ContinuousObserver, DesignError, EstimateMap, ObserverFlow, SamplingBound};

const BISECTION_STEPS: usize = 200;
const GOLDEN_STEPS: usize = 120;

/// Inputs of the linear design. Missing `mu`, `gamma` or `p` are computed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSpec {
    pub k: Vector,
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub p: Option<Matrix>,
}

#[derive(Debug, Clone)]
pub struct LinearDesign {
    pub observer: ContinuousObserver,
    pub gain: Vector,
    pub p: Matrix,
    pub mu: f64,
    pub gamma: f64,
    pub k1: f64,
    pub k2: f64,
    /// `|cᵀA|`.
    pub output_rate_norm: f64,
    pub mismatch: f64,
}

impl LinearDesign {
    pub fn max_sampling_period(&self) -> SamplingBound {
        SamplingBound::from_mismatch(self.mismatch)
    }

    /// `√(γ / (2μK₁))`.
    pub fn noise_gain(&self) -> f64 {
        (self.gamma / (2.0 * self.mu * self.k1)).sqrt()
    }
}

/// The symmetric matrix `[[P A_cl + A_clᵀ P + 2μP, Pk], [kᵀP, −γ]]`, with
/// `A_cl = A + k cᵀ`, whose negative semidefiniteness is equivalent to
/// `xᵀP A_cl x + xᵀA_clᵀP x + 2xᵀP k v ≤ −2μ xᵀP x + γ v²` for all `(x, v)`.
pub fn dissipation_matrix(
    p: &Matrix,
    a: &Matrix,
    k: &[f64],
    c: &[f64],
    mu: f64,
    gamma: f64,
) -> Result<Matrix, DesignError> {
    let n = p.rows();
    if !p.is_square() || a.rows() != n || !a.is_square() || k.len() != n || c.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "P {}x{}, A {}x{}, k {}, c {}",
            p.rows(),
            p.cols(),
            a.rows(),
            a.cols(),
            k.len(),
            c.len()
        ))
        .into());
    }
    let sym = Tolerances::default().symmetry;
    let asymmetry = p.asymmetry();
    if asymmetry > sym * p.max_abs().max(1.0) {
        return Err(LinalgError::NotSymmetric { asymmetry }.into());
    }
    let a_cl = a.add(&Matrix::outer(k, c));
    let top = p
        .matmul(&a_cl)
        .add(&a_cl.transpose().matmul(p))
        .add(&p.scale(2.0 * mu));
    let pk = p.mul_vec(k);
    let mut m = Matrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = top[(i, j)];
        }
        m[(i, n)] = pk[i];
        m[(n, i)] = pk[i];
    }
    m[(n, n)] = -gamma;
    Ok(m.symmetrized())
}

/// Whether the dissipation inequality holds, i.e. the matrix of
/// [`dissipation_matrix`] has no eigenvalue above `1e−9` (relative to its
/// largest entry when that exceeds one).
pub fn verify_dissipation(
    p: &Matrix,
    a: &Matrix,
    k: &[f64],
    c: &[f64],
    mu: f64,
    gamma: f64,
) -> Result<bool, DesignError> {
    Ok(dissipation_margin(p, a, k, c, mu, gamma)? <= Tolerances::default().eig)
}

fn dissipation_margin(
    p: &Matrix,
    a: &Matrix,
    k: &[f64],
    c: &[f64],
    mu: f64,
    gamma: f64,
) -> Result<f64, DesignError> {
    let m = dissipation_matrix(p, a, k, c, mu, gamma)?;
    let top = *symmetric_eigenvalues(&m)?
        .last()
        .expect("nonempty spectrum");
    Ok(top / m.max_abs().max(1.0))
}

fn top_eig(m: &Matrix) -> Result<f64, DesignError> {
    Ok(*symmetric_eigenvalues(&m.symmetrized())?
        .last()
        .expect("nonempty spectrum"))
}

/// Smallest γ passing the dissipation check for a fixed μ, from the Schur
/// complement `γ = bᵀ(−M)⁻¹b`, `M = P A_cl + A_clᵀP + 2μP`, `b = Pk`.
/// `None` when `M` is not negative definite.
fn min_gamma(m0: &Matrix, p: &Matrix, pk: &[f64], mu: f64) -> Option<f64> {
    let m = m0.add(&p.scale(2.0 * mu));
    if top_eig(&m).ok()? >= 0.0 {
        return None;
    }
    let x = solve_linear(&m.scale(-1.0), pk).ok()?;
    Some(dot(pk, &x))
}

/// Largest μ with `M0 + 2μP ⪯ 0`.
fn max_mu(m0: &Matrix, p: &Matrix) -> Result<f64, DesignError> {
    let feasible = |mu: f64| top_eig(&m0.add(&p.scale(2.0 * mu))).map(|e| e <= 0.0);
    if !feasible(0.0)? {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while feasible(hi)? {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(DesignError::InvalidParameter(
                "dissipation rate is unbounded".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn design_linear(plant: &Plant, spec: &LinearSpec) -> Result<LinearDesign, DesignError> {
    let (a, c) = plant
        .linear_pair()
        .ok_or(DesignError::WrongPlantKind { expected: "linear" })?;
    let (a, c) = (a.clone(), c.clone());
    let n = plant.dim();
    let k = spec.k.clone();
    if k.dim() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "k has {} entries, plant has {n}",
            k.dim()
        ))
        .into());
    }
    for (name, value) in [("mu", spec.mu), ("gamma", spec.gamma)] {
        if let Some(v) = value {
            if !(v > 0.0) || !v.is_finite() {
                return Err(DesignError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
    }
    let a_cl = a.add(&Matrix::outer(&k, &c));
    is_hurwitz(&a_cl, Tolerances::default().hurwitz_margin)?;

    let p = match &spec.p {
        Some(p) => {
            if p.rows() != n || !p.is_square() {
                return Err(LinalgError::DimensionMismatch(format!(
                    "P is {}x{}, plant has {n}",
                    p.rows(),
                    p.cols()
                ))
                .into());
            }
            p.clone()
        }
        None => solve_lyapunov(&a_cl, &Matrix::identity(n))?,
    };
    let (k1, k2) = symmetric_extremal_eigs(&p)?;
    if k1 <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite { min_eig: k1 }.into());
    }

    let m0 = p.matmul(&a_cl).add(&a_cl.transpose().matmul(&p));
    let pk = p.mul_vec(&k);
    let (mu, gamma) = match (spec.mu, spec.gamma) {
        (Some(mu), Some(gamma)) => (mu, gamma),
        (Some(mu), None) => {
            let gamma = min_gamma(&m0, &p, &pk, mu).ok_or(DesignError::DissipationFailed {
                mu,
                gamma: f64::INFINITY,
                max_eig: top_eig(&m0.add(&p.scale(2.0 * mu)))?,
            })?;
            (mu, nudge(gamma))
        }
        (None, Some(gamma)) => {
            let mu_max = max_mu(&m0, &p)?;
            let passes = |mu: f64| verify_dissipation(&p, &a, &k, &c, mu, gamma);
            if mu_max <= 0.0 || !passes(mu_max * 1e-9)? {
                return Err(DesignError::DissipationFailed {
                    mu: 0.0,
                    gamma,
                    max_eig: dissipation_margin(&p, &a, &k, &c, mu_max * 1e-9, gamma)?,
                });
            }
            let (mut lo, mut hi) = (mu_max * 1e-9, mu_max);
            if passes(hi)? {
                lo = hi;
            }
            for _ in 0..BISECTION_STEPS {
                if hi - lo <= 1e-12 * hi {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if passes(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (lo, gamma)
        }
        (None, None) => optimal_rates(&m0, &p, &pk)?,
    };

    let margin = dissipation_margin(&p, &a, &k, &c, mu, gamma)?;
    if margin > Tolerances::default().eig {
        return Err(DesignError::DissipationFailed {
            mu,
            gamma,
            max_eig: margin,
        });
    }

    let ca = a.left_mul_vec(&c);
    let output_rate_norm = crate::linalg::norm(&ca);
    let mismatch = output_rate_norm * (gamma / (2.0 * mu * k1)).sqrt();

    let (a_f, c_f, k_f) = (a.clone(), c.clone(), k.clone());
    let flow: ObserverFlow = Arc::new(move |z: &[f64], y: f64| {
        let innovation = dot(&c_f, z) - y;
        a_f.mul_vec(z)
            .iter()
            .zip(k_f.iter())
            .map(|(az, ki)| az + ki * innovation)
            .collect()
    });
    let psi: EstimateMap = Arc::new(|z: &[f64]| z.to_vec());
    let rate = plant.output_rate_map().clone();
    let predictor: ScalarMap = Arc::new(move |z: &[f64]| rate(z));
    let observer = ContinuousObserver::new(n, n, flow, psi, predictor)?;

    Ok(LinearDesign {
        observer,
        gain: k,
        p,
        mu,
        gamma,
        k1,
        k2,
        output_rate_norm,
        mismatch,
    })
}

/// Picks `(μ, γ)` minimizing `γ/μ`, which minimizes the mismatch constant.
/// `γ_min(μ)` is convex in μ, so `γ_min(μ)/μ` is quasiconvex and golden
/// section search over `(0, μ_max)` finds its minimum.
fn optimal_rates(m0: &Matrix, p: &Matrix, pk: &[f64]) -> Result<(f64, f64), DesignError> {
    let mu_max = max_mu(m0, p)?;
    if mu_max <= 0.0 {
        return Err(DesignError::DissipationFailed {
            mu: 0.0,
            gamma: f64::INFINITY,
            max_eig: top_eig(m0)?,
        });
    }
    let cost = |mu: f64| min_gamma(m0, p, pk, mu).map_or(f64::INFINITY, |g| g / mu);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (mu_max * 1e-9, mu_max * (1.0 - 1e-9));
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = cost(x2);
        }
    }
    let mu = 0.5 * (lo + hi);
    let gamma = min_gamma(m0, p, pk, mu).ok_or(DesignError::DissipationFailed {
        mu,
        gamma: f64::INFINITY,
        max_eig: f64::NAN,
    })?;
    Ok((mu, nudge(gamma)))
}

/// Moves γ off the singular boundary so the eigenvalue check is not decided
/// by rounding.
fn nudge(gamma: f64) -> f64 {
    gamma * (1.0 + 1e-9) + 1e-15
}
