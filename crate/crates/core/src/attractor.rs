//! Pullback clouds over one master path and their Hausdorff semi-distances.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::model::{Params, Role, StateTriple};
use crate::noise::{OuPath, PathChannels};
use crate::solver::{Cocycle, Stepper};

/// Initial cloud: explicit states or a seeded sampler in a ball of `H`.
#[derive(Debug, Clone)]
pub enum CloudSpec {
    States(Vec<StateTriple>),
    /// `members` states of norm at most `radius`, each a random combination of
    /// Neumann cosine modes `0..modes` per axis and component.
    Ball {
        members: usize,
        radius: f64,
        seed: u64,
        modes: usize,
    },
}

impl CloudSpec {
    pub fn ball(members: usize, radius: f64, seed: u64) -> Self {
        CloudSpec::Ball {
            members,
            radius,
            seed,
            modes: 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CloudSpec::States(s) => s.len(),
            CloudSpec::Ball { members, .. } => *members,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Materializes the cloud in original role.
    pub fn sample(&self, grid: &Arc<Grid>) -> Result<Vec<StateTriple>> {
        match self {
            CloudSpec::States(states) => {
                for s in states {
                    s.expect_role(Role::Original)?;
                    if !Arc::ptr_eq(s.grid(), grid) && **s.grid() != **grid {
                        return Err(Error::GridMismatch);
                    }
                }
                Ok(states.clone())
            }
            &CloudSpec::Ball {
                members,
                radius,
                seed,
                modes,
            } => {
                if !(radius.is_finite() && radius >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "radius",
                        reason: format!("must be nonnegative, got {radius}"),
                    });
                }
                if modes == 0 {
                    return Err(Error::InvalidParameter {
                        name: "modes",
                        reason: "at least one mode per axis".into(),
                    });
                }
                (0..members)
                    .map(|m| ball_member(grid, radius, seed, modes, m))
                    .collect()
            }
        }
    }
}

fn ball_member(
    grid: &Arc<Grid>,
    radius: f64,
    seed: u64,
    modes: usize,
    member: usize,
) -> Result<StateTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64 + 1);
    let ky_count = if grid.dimension() == 2 { modes } else { 1 };
    let ext = grid.extents();
    let (lx, ly) = (ext[0], ext.get(1).copied().unwrap_or(1.0));
    let mut coef = vec![[0.0f64; 3]; modes * ky_count];
    for c in coef.iter_mut().flatten() {
        *c = rng.sample(StandardNormal);
    }
    let fields: [ScalarField; 3] = std::array::from_fn(|comp| {
        ScalarField::from_fn(grid.clone(), |x, y| {
            let mut v = 0.0;
            for ky in 0..ky_count {
                let cy = if ky == 0 {
                    1.0
                } else {
                    (ky as f64 * PI * y / ly).cos()
                };
                for kx in 0..modes {
                    let cx = if kx == 0 {
                        1.0
                    } else {
                        (kx as f64 * PI * x / lx).cos()
                    };
                    v += coef[ky * modes + kx][comp] * cx * cy;
                }
            }
            v
        })
    });
    let raw = StateTriple::new(Role::Original, fields)?;
    let norm = raw.norm();
    let dof = (3 * modes * ky_count) as f64;
    let u: f64 = rng.random();
    let target = radius * u.powf(1.0 / dof);
    let scale = if norm > 0.0 { target / norm } else { 0.0 };
    StateTriple::new(
        Role::Original,
        std::array::from_fn(|i| raw.component(i).scale(scale)),
    )
}

#[derive(Debug, Clone)]
pub struct PullbackSpec {
    /// Increasing nonnegative horizons, each a multiple of the path's dt.
    pub horizons: Vec<f64>,
    pub cloud: CloudSpec,
    pub dt: f64,
    pub stepper: Stepper,
    /// Absorbing radius to flag clouds against, when known.
    pub absorbing_radius: Option<f64>,
}

impl PullbackSpec {
    pub fn new(horizons: Vec<f64>, cloud: CloudSpec, dt: f64) -> Self {
        Self {
            horizons,
            cloud,
            dt,
            stepper: Stepper::Imex1,
            absorbing_radius: None,
        }
    }

    pub fn with_absorbing_radius(mut self, r: f64) -> Self {
        self.absorbing_radius = Some(r);
        self
    }

    fn check(&self, path: &OuPath) -> Result<()> {
        if self.cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if self.horizons.is_empty() {
            return Err(Error::Invalid("no pullback horizons".into()));
        }
        let grid = path.time_grid();
        for w in self.horizons.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Invalid(format!(
                    "horizons must increase strictly, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &t in &self.horizons {
            if !(t >= 0.0) {
                return Err(Error::Invalid(format!(
                    "horizon must be nonnegative, got {t}"
                )));
            }
            grid.index_of(-t)?;
        }
        grid.index_of(0.0)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HorizonResult {
    pub horizon: f64,
    /// `Φ(t, θ_{-t}ω, g₀)` for each member, in member order.
    pub states: Vec<StateTriple>,
    pub member_norms: Vec<f64>,
    /// Largest member norm.
    pub radius: f64,
    /// Semi-distance to the cloud at the largest horizon.
    pub semi_distance: f64,
    /// `radius ≤ R_H(ω)` when an absorbing radius was supplied.
    pub absorbed: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct PullbackReport {
    pub results: Vec<HorizonResult>,
    pub absorbing_radius: Option<f64>,
}

impl PullbackReport {
    /// Smallest scanned horizon from which every cloud is absorbed.
    pub fn absorption_horizon(&self) -> Option<f64> {
        let mut first = None;
        for r in self.results.iter().rev() {
            match r.absorbed {
                Some(true) => first = Some(r.horizon),
                _ => break,
            }
        }
        first
    }
}

/// Pulls the cloud back from every horizon to time 0 under the same path.
///
/// Members and horizons run in parallel; results are ordered by horizon, then
/// member index.
pub fn pullback_cloud(
    spec: &PullbackSpec,
    params: &Params,
    grid: &Arc<Grid>,
    path: &OuPath,
) -> Result<PullbackReport> {
    spec.check(path)?;
    let cloud = spec.cloud.sample(grid)?;
    let cocycle = Cocycle::new(params, grid, path, spec.dt, spec.stepper)?;
    let m = cloud.len();
    let jobs: Vec<(usize, usize)> = (0..spec.horizons.len())
        .flat_map(|h| (0..m).map(move |k| (h, k)))
        .collect();
    let states: Vec<StateTriple> = jobs
        .par_iter()
        .map(|&(h, k)| cocycle.pullback(spec.horizons[h], &cloud[k]))
        .collect::<Result<_>>()?;
    let clouds: Vec<Vec<StateTriple>> = states.chunks(m).map(|c| c.to_vec()).collect();
    let reference = clouds.last().expect("at least one horizon");
    let mut results = Vec::with_capacity(clouds.len());
    for (states, &horizon) in clouds.iter().zip(&spec.horizons) {
        let member_norms: Vec<f64> = states.iter().map(|s| s.norm()).collect();
        let radius = member_norms.iter().cloned().fold(0.0, f64::max);
        results.push(HorizonResult {
            horizon,
            semi_distance: hausdorff_semidistance(states, reference)?,
            member_norms,
            radius,
            absorbed: spec.absorbing_radius.map(|r| radius <= r),
            states: states.clone(),
        });
    }
    Ok(PullbackReport {
        results,
        absorbing_radius: spec.absorbing_radius,
    })
}

/// `dist(A, B) = max_{a∈A} min_{b∈B} ‖a - b‖_H`.
pub fn hausdorff_semidistance(a: &[StateTriple], b: &[StateTriple]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut worst = 0.0f64;
    for x in a {
        let mut best = f64::INFINITY;
        for y in b {
            best = best.min(x.distance(y)?);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct AttractorEstimate {
    /// Cloud at the largest horizon.
    pub reference: Vec<StateTriple>,
    /// `(t, dist(cloud_t, reference))` for every horizon but the largest.
    pub table: Vec<(f64, f64)>,
    /// Last semi-distance in the table.
    pub resolution: f64,
    pub warnings: Vec<String>,
    pub report: PullbackReport,
}

/// Relative slack allowed before a growing semi-distance is reported.
pub const MONOTONE_SLACK: f64 = 0.1;

/// Approximates `𝒜(ω)` by the largest-horizon cloud.
///
/// Needs at least four horizons. Growth of the semi-distance beyond
/// `MONOTONE_SLACK` (plus `floor`) is reported as a warning.
pub fn attractor_estimate(
    spec: &PullbackSpec,
    params: &Params,
    grid: &Arc<Grid>,
    path: &OuPath,
    floor: f64,
) -> Result<AttractorEstimate> {
    if spec.horizons.len() < 4 {
        return Err(Error::Invalid(format!(
            "attractor estimate needs at least 4 horizons, got {}",
            spec.horizons.len()
        )));
    }
    let report = pullback_cloud(spec, params, grid, path)?;
    let n = report.results.len();
    let table: Vec<(f64, f64)> = report.results[..n - 1]
        .iter()
        .map(|r| (r.horizon, r.semi_distance))
        .collect();
    let mut warnings = Vec::new();
    for w in table.windows(2) {
        if w[1].1 > (1.0 + MONOTONE_SLACK) * w[0].1 + floor {
            warnings.push(format!(
                "semi-distance grew from {:.6e} at t={} to {:.6e} at t={}",
                w[0].1, w[0].0, w[1].1, w[1].0
            ));
        }
    }
    Ok(AttractorEstimate {
        reference: report.results[n - 1].states.clone(),
        resolution: table.last().map(|x| x.1).unwrap_or(0.0),
        table,
        warnings,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec, NoiseProfile};
    use crate::noise::{ou_from_wiener, sample_wiener, TimeGrid};
    use proptest::prelude::*;

    fn grid() -> Arc<Grid> {
        build_grid(&GridSpec::two_d(1.0, 1.0, 6, 6)).unwrap()
    }

    fn quiet(dim: usize) -> Params {
        let mut p = Params::demo(dim);
        p.profiles = std::array::from_fn(|_| NoiseProfile::uniform(dim, 0.0));
        p
    }

    #[test]
    fn ball_members_are_bounded_and_seeded() {
        let g = grid();
        let spec = CloudSpec::ball(10, 3.0, 9);
        let a = spec.sample(&g).unwrap();
        let b = spec.sample(&g).unwrap();
        assert_eq!(a.len(), 10);
        for (x, y) in a.iter().zip(&b) {
            assert!(x.norm() <= 3.0 + 1e-12);
            assert_eq!(x.distance(y).unwrap(), 0.0);
        }
        let other = CloudSpec::ball(10, 3.0, 10).sample(&g).unwrap();
        assert!(a[0].distance(&other[0]).unwrap() > 0.0);
    }

    #[test]
    fn horizon_zero_returns_initial_cloud() {
        let g = grid();
        let p = Params::demo(2);
        let path = ou_from_wiener(
            &sample_wiener(1, TimeGrid::new(-1.0, 0.0, 0.05).unwrap()),
            1.0,
        )
        .unwrap();
        let spec = PullbackSpec::new(vec![0.0, 0.5], CloudSpec::ball(3, 2.0, 4), 0.05);
        let rep = pullback_cloud(&spec, &p, &g, &path).unwrap();
        let init = spec.cloud.sample(&g).unwrap();
        for (x, y) in rep.results[0].states.iter().zip(&init) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let g = grid();
        let p = Params::demo(2);
        let path = OuPath::zeroed(TimeGrid::new(-1.0, 0.0, 0.05).unwrap(), 1.0).unwrap();
        let off = PullbackSpec::new(vec![0.5, 2.0], CloudSpec::ball(2, 1.0, 0), 0.05);
        assert!(pullback_cloud(&off, &p, &g, &path).is_err());
        let empty = PullbackSpec::new(vec![0.5], CloudSpec::States(vec![]), 0.05);
        assert!(matches!(
            pullback_cloud(&empty, &p, &g, &path),
            Err(Error::EmptyCloud)
        ));
        let unsorted = PullbackSpec::new(vec![0.5, 0.25], CloudSpec::ball(2, 1.0, 0), 0.05);
        assert!(pullback_cloud(&unsorted, &p, &g, &path).is_err());
        let few = PullbackSpec::new(vec![0.25, 0.5], CloudSpec::ball(2, 1.0, 0), 0.05);
        assert!(attractor_estimate(&few, &p, &g, &path, 0.0).is_err());
    }

    #[test]
    fn semidistance_basics() {
        let g = grid();
        let c = |v: f64| StateTriple::constant(g.clone(), Role::Original, [v, 0.0, 0.0]);
        let a = vec![c(0.0), c(1.0)];
        let b = vec![c(0.0)];
        assert_eq!(hausdorff_semidistance(&b, &a).unwrap(), 0.0);
        assert!((hausdorff_semidistance(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(
            hausdorff_semidistance(&[], &b),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn clouds_collapse_without_noise() {
        let g = grid();
        let mut p = quiet(2);
        // strongly damped regime: the homogeneous system has one stable equilibrium
        p.a = 0.1;
        p.beta = 0.1;
        p.j = 1e-3;
        p.r = 1.0;
        let path = OuPath::zeroed(TimeGrid::new(-16.0, 0.0, 0.05).unwrap(), 1.0).unwrap();
        let spec = PullbackSpec::new(vec![2.0, 4.0, 8.0, 16.0], CloudSpec::ball(6, 2.0, 3), 0.05);
        let est = attractor_estimate(&spec, &p, &g, &path, 1e-9).unwrap();
        assert!(est.resolution < 1e-3, "resolution {}", est.resolution);
        let spread = hausdorff_semidistance(&est.reference, &est.reference[..1]).unwrap();
        assert!(spread < 1e-6, "spread {spread}");
    }

    #[test]
    fn results_independent_of_thread_count() {
        let g = grid();
        let p = Params::demo(2);
        let path = ou_from_wiener(
            &sample_wiener(3, TimeGrid::new(-2.0, 0.0, 0.05).unwrap()),
            1.0,
        )
        .unwrap();
        let spec = PullbackSpec::new(vec![0.5, 1.0, 2.0], CloudSpec::ball(4, 2.0, 1), 0.05);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| pullback_cloud(&spec, &p, &g, &path).unwrap())
        };
        let (a, b) = (run(1), run(3));
        for (x, y) in a.results.iter().zip(&b.results) {
            assert_eq!(x.member_norms, y.member_norms);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn semidistance_triangle(vals in prop::collection::vec(-5.0f64..5.0, 9)) {
            let g = build_grid(&GridSpec::one_d(1.0, 4)).unwrap();
            let c = |v: f64| StateTriple::constant(g.clone(), Role::Original, [v, -v, 0.5 * v]);
            let a: Vec<_> = vals[0..3].iter().map(|&v| c(v)).collect();
            let b: Vec<_> = vals[3..6].iter().map(|&v| c(v)).collect();
            let d: Vec<_> = vals[6..9].iter().map(|&v| c(v)).collect();
            let ab = hausdorff_semidistance(&a, &b).unwrap();
            let bd = hausdorff_semidistance(&b, &d).unwrap();
            let ad = hausdorff_semidistance(&a, &d).unwrap();
            prop_assert!(ad <= ab + bd + 1e-12);
            prop_assert_eq!(hausdorff_semidistance(&a, &a).unwrap(), 0.0);
        }
    }
}
