//! Convex feasibility: find `x` in `X = ∩ X_xi`, posed as `f = 0`, `h(.; xi) = I_{X_xi}`.
//!
//! SSPG on this problem is randomized alternating projections.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_sspg, RunOptions, StoppingRule, Trace};
use crate::error::{ensure, Result, SspgError};
use crate::linalg::{dist, dot, norm, norm_sq, to_dvector};
use crate::oracle::{ProxOracle, SampleIndex, ZeroSmooth};
use crate::schedule::StepsizeSchedule;

/// Relative tolerance for set membership and active-constraint detection.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexSet {
    /// `{x : a^T x <= b}`
    Halfspace { a: Vec<f64>, b: f64 },
    /// `{x : a^T x = b}`
    Hyperplane { a: Vec<f64>, b: f64 },
    /// `{x : |x - center| <= radius}`
    Ball { center: Vec<f64>, radius: f64 },
}

impl ConvexSet {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Halfspace { a, .. } | ConvexSet::Hyperplane { a, .. } => a.len(),
            ConvexSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Halfspace { a, b } | ConvexSet::Hyperplane { a, b } => ensure(
                norm(a) > 0.0 && a.iter().all(|v| v.is_finite()) && b.is_finite(),
                || "halfspace/hyperplane normal must be nonzero and finite".into(),
            ),
            ConvexSet::Ball { center, radius } => ensure(
                *radius > 0.0 && center.iter().all(|v| v.is_finite()),
                || format!("ball radius must be positive, got {radius}"),
            ),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, ConvexSet::Hyperplane { .. })
    }

    fn scale(x: &[f64]) -> f64 {
        norm(x).max(1.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = MEMBERSHIP_TOL * Self::scale(x);
        match self {
            ConvexSet::Halfspace { a, b } => (dot(a, x) - b) / norm(a) <= tol,
            ConvexSet::Hyperplane { a, b } => ((dot(a, x) - b) / norm(a)).abs() <= tol,
            ConvexSet::Ball { center, radius } => dist(x, center) <= radius + tol,
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            ConvexSet::Halfspace { a, b } => ((dot(a, x) - b) / norm(a)).max(0.0),
            ConvexSet::Hyperplane { a, b } => ((dot(a, x) - b) / norm(a)).abs(),
            ConvexSet::Ball { center, radius } => (dist(x, center) - radius).max(0.0),
        }
    }

    /// Distance from `v` to the normal cone of the set at `z`.
    pub fn normal_cone_distance(&self, z: &[f64], v: &[f64]) -> f64 {
        let tol = MEMBERSHIP_TOL * Self::scale(z);
        let ray = |dir: &[f64], two_sided: bool| {
            let t = dot(v, dir) / norm_sq(dir);
            let t = if two_sided { t } else { t.max(0.0) };
            v.iter()
                .zip(dir)
                .map(|(vi, di)| (vi - t * di).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        match self {
            ConvexSet::Halfspace { a, b } => {
                if (dot(a, z) - b) / norm(a) >= -tol {
                    ray(a, false)
                } else {
                    norm(v)
                }
            }
            ConvexSet::Hyperplane { a, .. } => ray(a, true),
            ConvexSet::Ball { center, radius } => {
                let d: Vec<f64> = z.iter().zip(center).map(|(a, b)| a - b).collect();
                if norm(&d) >= radius - tol {
                    ray(&d, false)
                } else {
                    norm(v)
                }
            }
        }
    }
}

/// Exact Euclidean projection onto one set.
pub fn project_set(set: &ConvexSet, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    project_set_into(set, x, &mut out);
    out
}

pub fn project_set_into(set: &ConvexSet, x: &[f64], out: &mut [f64]) {
    match set {
        ConvexSet::Halfspace { a, b } => {
            let t = (dot(a, x) - b).max(0.0) / norm_sq(a);
            for ((o, xi), ai) in out.iter_mut().zip(x).zip(a) {
                *o = xi - t * ai;
            }
        }
        ConvexSet::Hyperplane { a, b } => {
            let t = (dot(a, x) - b) / norm_sq(a);
            for ((o, xi), ai) in out.iter_mut().zip(x).zip(a) {
                *o = xi - t * ai;
            }
        }
        ConvexSet::Ball { center, radius } => {
            let d = dist(x, center);
            let s = radius / d.max(*radius);
            for ((o, xi), ci) in out.iter_mut().zip(x).zip(center) {
                *o = ci + s * (xi - ci);
            }
        }
    }
}

/// Projector onto an intersection of hyperplanes, `x - A^+ (A x - b)`.
#[derive(Clone, Debug, PartialEq)]
struct AffineProjector {
    a: DMatrix<f64>,
    b: DVector<f64>,
    pinv: DMatrix<f64>,
}

impl AffineProjector {
    fn new(sets: &[ConvexSet]) -> Option<Self> {
        let n = sets.first()?.dim();
        let mut a = DMatrix::zeros(sets.len(), n);
        let mut b = DVector::zeros(sets.len());
        for (i, s) in sets.iter().enumerate() {
            let ConvexSet::Hyperplane { a: ai, b: bi } = s else {
                return None;
            };
            let scale = norm(ai);
            for j in 0..n {
                a[(i, j)] = ai[j] / scale;
            }
            b[i] = bi / scale;
        }
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let pinv = svd.pseudo_inverse(1e-12 * smax.max(1.0)).ok()?;
        Some(AffineProjector { a, b, pinv })
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        let xv = to_dvector(x);
        let r = &self.a * &xv - &self.b;
        let p = xv - &self.pinv * r;
        p.iter().copied().collect()
    }
}

/// Distance to `X`, with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceEstimate {
    pub distance: f64,
    /// Computed by a direct linear solve (all sets affine).
    pub exact: bool,
    /// `false` if the iterative projection hit its cap.
    pub converged: bool,
}

/// Cap on Dykstra sweeps.
pub const DYKSTRA_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct CfpProblem {
    sets: Vec<ConvexSet>,
    witness: Option<Vec<f64>>,
    dim: usize,
    affine: Option<AffineProjector>,
}

impl CfpProblem {
    pub fn new(sets: Vec<ConvexSet>, witness: Option<Vec<f64>>) -> Result<Self> {
        ensure(!sets.is_empty(), || {
            "a feasibility problem needs at least one set".into()
        })?;
        let dim = sets[0].dim();
        ensure(dim >= 1, || {
            "sets must live in a space of positive dimension".into()
        })?;
        for (i, s) in sets.iter().enumerate() {
            s.validate()?;
            ensure(s.dim() == dim, || {
                format!("set {i} has dimension {}, expected {dim}", s.dim())
            })?;
        }
        if let Some(w) = &witness {
            ensure(w.len() == dim, || "witness has the wrong dimension".into())?;
            for (i, s) in sets.iter().enumerate() {
                ensure(s.distance(w) <= 1e-10 * norm(w).max(1.0), || {
                    format!("witness is not in set {i}")
                })?;
            }
        }
        let affine = if sets.iter().all(ConvexSet::is_affine) {
            AffineProjector::new(&sets)
        } else {
            None
        };
        Ok(CfpProblem {
            sets,
            witness,
            dim,
            affine,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sets: Vec<ConvexSet> = serde_json::from_str(text)
            .map_err(|e| SspgError::Config(format!("bad CFP instance: {e}")))?;
        CfpProblem::new(sets, None)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.sets).expect("sets serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| SspgError::io(path, e))?;
        let sets: Vec<ConvexSet> =
            serde_json::from_str(&text).map_err(|e| SspgError::format(path, e.to_string()))?;
        CfpProblem::new(sets, None)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| SspgError::io(path, e))
    }

    pub fn sets(&self) -> &[ConvexSet] {
        &self.sets
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn witness(&self) -> Option<&[f64]> {
        self.witness.as_deref()
    }

    pub fn is_affine(&self) -> bool {
        self.affine.is_some()
    }

    pub fn zero_smooth(&self) -> ZeroSmooth {
        ZeroSmooth {
            dim: self.dim,
            samples: self.sets.len(),
        }
    }

    /// Projection onto `X`: direct for affine families, Dykstra's cyclic
    /// projections otherwise.
    pub fn project_intersection(&self, x: &[f64], tol: f64) -> (Vec<f64>, DistanceEstimate) {
        if let Some(aff) = &self.affine {
            let p = aff.project(x);
            let d = dist(x, &p);
            return (
                p,
                DistanceEstimate {
                    distance: d,
                    exact: true,
                    converged: true,
                },
            );
        }
        let q = self.sets.len();
        let mut cur = x.to_vec();
        let mut incr = vec![vec![0.0; self.dim]; q];
        let mut shifted = vec![0.0; self.dim];
        let mut next = vec![0.0; self.dim];
        let mut converged = false;
        for _ in 0..DYKSTRA_CAP {
            let mut change: f64 = 0.0;
            for (set, p) in self.sets.iter().zip(incr.iter_mut()) {
                for j in 0..self.dim {
                    shifted[j] = cur[j] + p[j];
                }
                project_set_into(set, &shifted, &mut next);
                for j in 0..self.dim {
                    p[j] = shifted[j] - next[j];
                }
                change = change.max(dist(&cur, &next));
                cur.copy_from_slice(&next);
            }
            let scale = norm(x).max(1.0);
            if change <= tol * scale && self.sets.iter().all(|s| s.distance(&cur) <= tol * scale) {
                converged = true;
                break;
            }
        }
        let d = dist(x, &cur);
        (
            cur,
            DistanceEstimate {
                distance: d,
                exact: false,
                converged,
            },
        )
    }

    /// `dist_X(x)`.
    pub fn cfp_distance(&self, x: &[f64], tol: f64) -> Result<DistanceEstimate> {
        ensure(x.len() == self.dim, || "x has the wrong dimension".into())?;
        ensure(tol > 0.0, || "tol must be positive".into())?;
        Ok(self.project_intersection(x, tol).1)
    }

    /// A point of `X`: the witness if known, else the projection of the origin.
    pub fn feasible_point(&self) -> Vec<f64> {
        self.witness
            .clone()
            .unwrap_or_else(|| self.project_intersection(&vec![0.0; self.dim], 1e-13).0)
    }

    /// `E_xi dist^2_{X_xi}(x)`
    pub fn mean_sq_set_distance(&self, x: &[f64]) -> f64 {
        self.sets.iter().map(|s| s.distance(x).powi(2)).sum::<f64>() / self.sets.len() as f64
    }

    /// Sampled linear-regularity constant on a ball of `radius` around a feasible point:
    /// `min_x E_xi dist^2_{X_xi}(x) / dist^2_X(x)`, clamped to `(0, 1]`.
    ///
    /// Points with `dist_X(x) < 1e-6 radius` are skipped.
    pub fn estimate_kappa(&self, samples: usize, radius: f64, seed: u64) -> Result<f64> {
        ensure(samples >= 100, || {
            format!("need at least 100 samples, got {samples}")
        })?;
        ensure(radius > 0.0, || "radius must be positive".into())?;
        let center = self.feasible_point();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Uniform::new(0.0f64, 1.0);
        let points: Vec<Vec<f64>> = (0..samples)
            .map(|_| {
                let dir: Vec<f64> = (0..self.dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let r = radius * unit.sample(&mut rng).powf(1.0 / self.dim as f64)
                    / norm(&dir).max(1e-300);
                center.iter().zip(&dir).map(|(c, d)| c + r * d).collect()
            })
            .collect();
        let floor = 1e-6 * radius;
        let ratios: Vec<Option<f64>> = points
            .par_iter()
            .map(|x| {
                let d = self.project_intersection(x, 1e-12).1.distance;
                (d >= floor).then(|| self.mean_sq_set_distance(x) / (d * d))
            })
            .collect();
        let kappa = ratios.into_iter().flatten().fold(f64::INFINITY, f64::min);
        if !kappa.is_finite() {
            return Err(SspgError::InvalidArgument(
                "every sample was near-feasible; use a larger radius".into(),
            ));
        }
        Ok(kappa.clamp(f64::MIN_POSITIVE, 1.0))
    }

    /// Randomized alternating projections for `k_max` steps from `x0`.
    pub fn run_rap(&self, seed: u64, k_max: u64, x0: &[f64]) -> Result<Trace> {
        ensure(k_max >= 1, || "K must be at least 1".into())?;
        let opts = RunOptions {
            x0: Some(x0.to_vec()),
            reference: None,
            record_objective: false,
            record_feasibility: true,
            record_wall_time: true,
        };
        run_sspg(
            &self.zero_smooth(),
            self,
            &StepsizeSchedule::constant(1.0),
            seed,
            &StoppingRule::MaxIter { cap: k_max },
            &opts,
        )
    }
}

impl ProxOracle for CfpProblem {
    fn num_samples(&self) -> usize {
        self.sets.len()
    }

    fn h_value(&self, x: &[f64], xi: SampleIndex) -> f64 {
        if self.sets[xi.0].contains(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox_into(&self, y: &[f64], xi: SampleIndex, _mu: f64, out: &mut [f64]) {
        project_set_into(&self.sets[xi.0], y, out);
    }

    fn subgrad(&self, x: &[f64], _xi: SampleIndex) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn subdiff_distance(&self, z: &[f64], xi: SampleIndex, v: &[f64]) -> f64 {
        self.sets[xi.0].normal_cone_distance(z, v)
    }

    fn full_prox(&self, y: &[f64], _mu: f64) -> Option<Vec<f64>> {
        Some(self.project_intersection(y, 1e-12).0)
    }

    fn dist_to_feasible(&self, x: &[f64]) -> Option<f64> {
        Some(self.project_intersection(x, 1e-12).1.distance)
    }
}

/// Two lines through the origin of the plane at angle `theta`, written as hyperplanes.
pub fn two_lines(theta: f64) -> CfpProblem {
    let sets = vec![
        ConvexSet::Hyperplane {
            a: vec![0.0, 1.0],
            b: 0.0,
        },
        ConvexSet::Hyperplane {
            a: vec![-theta.sin(), theta.cos()],
            b: 0.0,
        },
    ];
    CfpProblem::new(sets, Some(vec![0.0, 0.0])).expect("valid sets")
}
