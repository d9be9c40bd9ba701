//! Pathwise integration of the transformed random PDE and the cocycle `Φ`.
//!
//! The default stepper is first-order IMEX: diffusion implicit, reaction and
//! noise explicit at the left end of the step,
//!
//! ```text
//! (I - dt d_i Δ) G_i^{n+1} = G_i^n + dt E_i(G^n, Γ(t_n))
//! ```
//!
//! Each Helmholtz solve is direct, by cosine transforms that diagonalize the
//! discrete Neumann Laplacian. The cubic term is explicit, so a step whose size exceeds
//! `0.5 / (b max|u|²)` is split into sub-steps that respect that bound; `Γ`
//! stays frozen at the left end of its noise cell throughout.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{
    explicit_terms_into, to_original, to_transformed, LiftedNoise, Params, ProfileSet, Role,
    StateTriple,
};
use crate::noise::{OuPath, PathChannels};

pub const BLOW_UP_THRESHOLD: f64 = 1e8;
/// Explicit cubic bound: `dt · b · max|u|² ≤ REACTION_STEP_FACTOR`.
pub const REACTION_STEP_FACTOR: f64 = 0.5;
pub const MAX_SUBSTEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    /// Implicit diffusion, explicit reaction; first order.
    Imex1,
    /// Heun's method, fully explicit; reference only.
    ExplicitRk2,
}

impl std::str::FromStr for Stepper {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imex1" => Ok(Stepper::Imex1),
            "explicit-rk2" | "rk2" => Ok(Stepper::ExplicitRk2),
            other => Err(Error::Invalid(format!("unknown stepper `{other}`"))),
        }
    }
}

impl std::fmt::Display for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stepper::Imex1 => "imex1",
            Stepper::ExplicitRk2 => "explicit-rk2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub stepper: Stepper,
    pub snapshot_stride: usize,
}

impl SolveSpec {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Self {
        Self {
            t_start,
            t_end,
            dt,
            stepper: Stepper::Imex1,
            snapshot_stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }
}

/// Snapshots of the transformed state `G(t)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateTriple>,
    /// `Γ(θ_t ω)` used at each snapshot time.
    pub gammas: Vec<[f64; 3]>,
    pub params: Params,
    pub spec: SolveSpec,
    pub profiles: ProfileSet,
    /// Total number of (sub-)steps taken.
    pub substeps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn noise(&self, i: usize) -> LiftedNoise<'_> {
        self.profiles.sample(self.gammas[i])
    }

    /// Snapshot `i` mapped back to `(u, v, z)`.
    pub fn original(&self, i: usize) -> Result<StateTriple> {
        to_original(&self.states[i], &self.noise(i))
    }

    pub fn last(&self) -> &StateTriple {
        self.states
            .last()
            .expect("trajectory has at least one snapshot")
    }
}

struct Workspace {
    explicit: [Vec<f64>; 3],
    rhs: Vec<f64>,
    scratch: Vec<f64>,
    lap: Vec<f64>,
    stage: [Vec<f64>; 3],
    k1: [Vec<f64>; 3],
}

impl Workspace {
    fn new(n: usize) -> Self {
        let v = || vec![0.0; n];
        Self {
            explicit: [v(), v(), v()],
            rhs: v(),
            scratch: v(),
            lap: v(),
            stage: [v(), v(), v()],
            k1: [v(), v(), v()],
        }
    }
}

/// Stateful marcher shared by [`integrate`] and the cocycle.
struct Marcher<'a> {
    params: &'a Params,
    profiles: &'a ProfileSet,
    grid: Arc<Grid>,
    stepper: Stepper,
    ws: Workspace,
    substeps: usize,
}

impl<'a> Marcher<'a> {
    fn new(params: &'a Params, profiles: &'a ProfileSet, stepper: Stepper) -> Self {
        let grid = profiles.grid().clone();
        let n = grid.len();
        Self {
            params,
            profiles,
            grid,
            stepper,
            ws: Workspace::new(n),
            substeps: 0,
        }
    }

    /// Largest step the explicit cubic tolerates at the current state.
    fn reaction_limit(&self, state: &[Vec<f64>; 3], gamma: [f64; 3]) -> f64 {
        let h1 = self.profiles.h(0).values();
        let umax = state[0]
            .iter()
            .zip(h1)
            .fold(0.0f64, |m, (&u, &h)| m.max((u + h * gamma[0]).abs()));
        if umax == 0.0 {
            f64::INFINITY
        } else {
            REACTION_STEP_FACTOR / (self.params.b * umax * umax)
        }
    }

    /// Advances by `dt`, splitting into sub-steps when the cubic demands it.
    fn advance(&mut self, state: &mut [Vec<f64>; 3], gamma: [f64; 3], dt: f64) -> Result<()> {
        let mut remaining = dt;
        let mut count = 0usize;
        while remaining > 0.0 {
            let limit = self.reaction_limit(state, gamma);
            let h = if remaining <= limit {
                remaining
            } else if remaining < 2.0 * limit {
                0.5 * remaining
            } else {
                limit
            };
            self.single_step(state, gamma, h)?;
            remaining = if h == remaining { 0.0 } else { remaining - h };
            count += 1;
            if count > MAX_SUBSTEPS {
                return Err(Error::StepTooLarge {
                    dt,
                    bound: limit,
                    reason: "explicit cubic term needs more than MAX_SUBSTEPS sub-steps",
                });
            }
        }
        self.substeps += count;
        Ok(())
    }

    fn single_step(&mut self, state: &mut [Vec<f64>; 3], gamma: [f64; 3], dt: f64) -> Result<()> {
        match self.stepper {
            Stepper::Imex1 => self.imex_step(state, gamma, dt),
            Stepper::ExplicitRk2 => self.rk2_step(state, gamma, dt),
        }
    }

    fn imex_step(&mut self, state: &mut [Vec<f64>; 3], gamma: [f64; 3], dt: f64) -> Result<()> {
        let noise = self.profiles.sample(gamma);
        let ws = &mut self.ws;
        explicit_terms_into(
            self.params,
            [&state[0], &state[1], &state[2]],
            &noise,
            &mut ws.explicit,
        );
        for i in 0..3 {
            for k in 0..ws.rhs.len() {
                ws.rhs[k] = state[i][k] + dt * ws.explicit[i][k];
            }
            self.grid.solve_helmholtz(
                dt * self.params.d[i],
                &ws.rhs,
                &mut state[i],
                &mut ws.scratch,
            );
        }
        Ok(())
    }

    fn full_tendency(&mut self, input: [&[f64]; 3], noise: &LiftedNoise<'_>, out_is_k1: bool) {
        let ws = &mut self.ws;
        explicit_terms_into(self.params, input, noise, &mut ws.explicit);
        for i in 0..3 {
            self.grid.laplacian_into(input[i], &mut ws.lap);
            let d = self.params.d[i];
            if out_is_k1 {
                for ((t, &l), &e) in ws.k1[i].iter_mut().zip(&ws.lap).zip(&ws.explicit[i]) {
                    *t = d * l + e;
                }
            } else {
                for (t, &l) in ws.explicit[i].iter_mut().zip(&ws.lap) {
                    *t += d * l;
                }
            }
        }
    }

    fn rk2_step(&mut self, state: &mut [Vec<f64>; 3], gamma: [f64; 3], dt: f64) -> Result<()> {
        let d_max = self.params.d.iter().cloned().fold(0.0, f64::max);
        let bound = 2.0 / (d_max * self.grid.laplacian_spectral_radius());
        if dt > bound {
            return Err(Error::StepTooLarge {
                dt,
                bound,
                reason: "explicit diffusion is unstable",
            });
        }
        let noise = self.profiles.sample(gamma);
        self.full_tendency([&state[0], &state[1], &state[2]], &noise, true);
        let mut stage = std::mem::take(&mut self.ws.stage);
        for i in 0..3 {
            for k in 0..stage[i].len() {
                stage[i][k] = state[i][k] + dt * self.ws.k1[i][k];
            }
        }
        self.full_tendency([&stage[0], &stage[1], &stage[2]], &noise, false);
        self.ws.stage = stage;
        for i in 0..3 {
            for k in 0..state[i].len() {
                state[i][k] += 0.5 * dt * (self.ws.k1[i][k] + self.ws.explicit[i][k]);
            }
        }
        Ok(())
    }
}

fn check_blow_up(state: &[Vec<f64>; 3], step: usize, time: f64) -> Result<()> {
    for (i, comp) in state.iter().enumerate() {
        if let Some(v) = comp
            .iter()
            .find(|v| !v.is_finite() || v.abs() > BLOW_UP_THRESHOLD)
        {
            return Err(Error::BlowUp {
                step,
                time,
                detail: format!("component {} reached {v:e}; reduce dt or refine", i + 1),
            });
        }
    }
    Ok(())
}

/// Validated step layout of one integration.
struct Plan {
    k_start: usize,
    per_cell: usize,
    n_steps: usize,
}

fn plan(spec: &SolveSpec, path: &OuPath) -> Result<Plan> {
    if !(spec.dt.is_finite() && spec.dt > 0.0) {
        return Err(Error::Invalid(format!(
            "solver dt must be positive, got {}",
            spec.dt
        )));
    }
    if spec.snapshot_stride == 0 {
        return Err(Error::Invalid("snapshot stride must be at least 1".into()));
    }
    if spec.t_end < spec.t_start {
        return Err(Error::Invalid(format!(
            "end time {} precedes start time {}",
            spec.t_end, spec.t_start
        )));
    }
    let grid = path.time_grid();
    let ratio = grid.dt() / spec.dt;
    let per_cell = ratio.round();
    if per_cell < 1.0 || (ratio - per_cell).abs() > 1e-9 * ratio {
        return Err(Error::Invalid(format!(
            "noise dt {} is not an integer multiple of solver dt {}",
            grid.dt(),
            spec.dt
        )));
    }
    let k_start = grid.index_of(spec.t_start)?;
    let k_end = grid.index_of(spec.t_end)?;
    let per_cell = per_cell as usize;
    Ok(Plan {
        k_start,
        per_cell,
        n_steps: (k_end - k_start) * per_cell,
    })
}

fn check_initial(params: &Params, g0: &StateTriple) -> Result<()> {
    g0.expect_role(Role::Original)?;
    params.validate_for(g0.grid())?;
    if !g0.is_finite() {
        return Err(Error::Invalid("initial state is not finite".into()));
    }
    Ok(())
}

/// Marches from `spec.t_start` to `spec.t_end`, reporting every snapshot.
fn march(
    spec: &SolveSpec,
    params: &Params,
    profiles: &ProfileSet,
    path: &OuPath,
    g0: &StateTriple,
    mut on_snapshot: impl FnMut(f64, [f64; 3], &[Vec<f64>; 3]),
) -> Result<(StateTriple, usize)> {
    let plan = plan(spec, path)?;
    let grid = g0.grid().clone();
    let gamma_at = |step: usize| path.at_index(plan.k_start + step / plan.per_cell);
    let time_at = |step: usize| {
        if step % plan.per_cell == 0 {
            path.time_grid().time(plan.k_start + step / plan.per_cell)
        } else {
            spec.t_start + step as f64 * spec.dt
        }
    };
    let start = to_transformed(g0, &profiles.sample(gamma_at(0)))?;
    let mut state: [Vec<f64>; 3] = std::array::from_fn(|i| start.component(i).values().to_vec());
    on_snapshot(time_at(0), gamma_at(0), &state);
    let mut marcher = Marcher::new(params, profiles, spec.stepper);
    for step in 0..plan.n_steps {
        marcher.advance(&mut state, gamma_at(step), spec.dt)?;
        let done = step + 1;
        check_blow_up(&state, done, time_at(done))?;
        if done % spec.snapshot_stride == 0 || done == plan.n_steps {
            on_snapshot(time_at(done), gamma_at(done), &state);
        }
    }
    Ok((
        StateTriple::from_raw(&grid, Role::Transformed, state),
        marcher.substeps,
    ))
}

/// Integrates the transformed system from `g0` (an original-role state at
/// `spec.t_start`) to `spec.t_end` under `path`.
pub fn integrate(
    spec: &SolveSpec,
    params: &Params,
    path: &OuPath,
    g0: &StateTriple,
) -> Result<Trajectory> {
    check_initial(params, g0)?;
    let profiles = ProfileSet::new(params, g0.grid())?;
    let grid = g0.grid().clone();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut gammas = Vec::new();
    let (_, substeps) = march(spec, params, &profiles, path, g0, |t, gamma, s| {
        times.push(t);
        gammas.push(gamma);
        states.push(StateTriple::from_raw(&grid, Role::Transformed, s.clone()));
    })?;
    Ok(Trajectory {
        times,
        states,
        gammas,
        params: params.clone(),
        spec: spec.clone(),
        profiles,
        substeps,
    })
}

/// Final transformed state only; no snapshots are kept.
pub fn integrate_final(
    spec: &SolveSpec,
    params: &Params,
    profiles: &ProfileSet,
    path: &OuPath,
    g0: &StateTriple,
) -> Result<StateTriple> {
    check_initial(params, g0)?;
    march(spec, params, profiles, path, g0, |_, _, _| {}).map(|(s, _)| s)
}

/// One IMEX step of the transformed system with `Γ` held at `gamma`.
pub fn step_imex(
    params: &Params,
    profiles: &ProfileSet,
    big_g: &StateTriple,
    gamma: [f64; 3],
    dt: f64,
) -> Result<StateTriple> {
    big_g.expect_role(Role::Transformed)?;
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("dt must be positive, got {dt}")));
    }
    let mut state: [Vec<f64>; 3] = std::array::from_fn(|i| big_g.component(i).values().to_vec());
    let mut marcher = Marcher::new(params, profiles, Stepper::Imex1);
    marcher.advance(&mut state, gamma, dt)?;
    Ok(StateTriple::from_raw(
        big_g.grid(),
        Role::Transformed,
        state,
    ))
}

/// The stochastic Hindmarsh-Rose cocycle over one master OU path.
///
/// `Φ(t, ω, g₀) = G(t, ω; 0, g₀) + Γ^h(θ_t ω)`. Shifts of `ω` are views of
/// the master path, so every evaluation sees the same realization.
#[derive(Debug, Clone)]
pub struct Cocycle<'a> {
    params: &'a Params,
    path: &'a OuPath,
    profiles: ProfileSet,
    dt: f64,
    stepper: Stepper,
}

impl<'a> Cocycle<'a> {
    pub fn new(
        params: &'a Params,
        grid: &Arc<Grid>,
        path: &'a OuPath,
        dt: f64,
        stepper: Stepper,
    ) -> Result<Self> {
        params.validate_for(grid)?;
        Ok(Self {
            params,
            path,
            profiles: ProfileSet::new(params, grid)?,
            dt,
            stepper,
        })
    }

    pub fn profiles(&self) -> &ProfileSet {
        &self.profiles
    }

    pub fn path(&self) -> &OuPath {
        self.path
    }

    /// `Φ(t, θ_s ω, g₀)`.
    pub fn apply(&self, t: f64, s: f64, g0: &StateTriple) -> Result<StateTriple> {
        g0.expect_role(Role::Original)?;
        if t < 0.0 {
            return Err(Error::Invalid(format!(
                "cocycle time must be nonnegative, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(g0.clone());
        }
        let shifted = self.path.shift(s)?;
        let spec = SolveSpec::new(0.0, t, self.dt).with_stepper(self.stepper);
        let big_g = integrate_final(&spec, self.params, &self.profiles, &shifted, g0)?;
        let noise = self.profiles.sample(shifted.at_time(t)?);
        to_original(&big_g, &noise)
    }

    /// `Φ(t, θ_{-t} ω, g₀) = G(0, θ_{-t} ω; -t, g₀) + Γ^h(ω)`, integrating the
    /// master path directly over `[-t, 0]`.
    pub fn pullback(&self, t: f64, g0: &StateTriple) -> Result<StateTriple> {
        g0.expect_role(Role::Original)?;
        if t == 0.0 {
            return Ok(g0.clone());
        }
        let spec = SolveSpec::new(-t, 0.0, self.dt).with_stepper(self.stepper);
        let big_g = integrate_final(&spec, self.params, &self.profiles, self.path, g0)?;
        let noise = self.profiles.sample(self.path.at_time(0.0)?);
        to_original(&big_g, &noise)
    }
}
