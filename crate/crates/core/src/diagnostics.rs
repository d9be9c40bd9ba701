//! Energy functionals, the dissipation constants and absorbing radii.
//!
//! Along a transformed trajectory the energy
//! `E = c₁‖U‖² + ‖V‖² + ‖Z‖²` obeys
//!
//! ```text
//! dE/dt + σ E ≤ C(h) (|Γ|² + |Γ|⁴) + F |Ω|
//! ```
//!
//! with `c₁ = (2β² + 11/8) / b`, `σ = min{1, r}`, `F = 2N + c₁²/16` and
//!
//! ```text
//! N = 2(c₁a)⁴ + J²/2 + 3α² + 3q²c²/r + (4c₁² + 3c₁²/(2r) + 3q²/r)².
//! ```
//!
//! `C(h)` has no closed form; [`compute_constants`] assembles a value by
//! following the Young-inequality splits term by term (see `traced_c_bound`).

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{Params, ProfileSet};
use crate::noise::{OuPath, PathChannels};
use crate::solver::Trajectory;

/// Deterministic constants plus, once computed, the path-dependent radii.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsBundle {
    pub c1: f64,
    pub sigma: f64,
    pub n_const: f64,
    pub f_const: f64,
    /// Stand-in for `C(h)` obtained by tracing the inequality chain.
    pub c_bound: f64,
    /// `|Ω|`.
    pub domain_volume: f64,
    pub radii: Option<AbsorbingRadii>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingRadii {
    pub r0: f64,
    pub big_r0: f64,
    pub r_h: f64,
    /// `‖Γ^h(ω)‖²` at time 0.
    pub lifted_sq_at_zero: f64,
    /// `e^{-σ(horizon - 1)}`, the neglected share of the forcing integral.
    pub tail_weight: f64,
    pub horizon: f64,
}

impl ConstantsBundle {
    /// The majorant `C(h)(|Γ|² + |Γ|⁴) + F|Ω|`.
    pub fn forcing(&self, gamma_sq: f64) -> f64 {
        self.c_bound * (gamma_sq + gamma_sq * gamma_sq) + self.f_const * self.domain_volume
    }

    /// `F|Ω|/σ`, the noise-free asymptotic energy level.
    pub fn noise_free_level(&self) -> f64 {
        self.f_const * self.domain_volume / self.sigma
    }

    /// Flat `key=value` block with 17 significant digits.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: f64| out.push_str(&format!("{k}={v:.16e}\n"));
        kv("c1", self.c1);
        kv("sigma", self.sigma);
        kv("N", self.n_const);
        kv("F", self.f_const);
        kv("C_bound", self.c_bound);
        kv("domain_volume", self.domain_volume);
        if let Some(r) = &self.radii {
            kv("r0", r.r0);
            kv("R0", r.big_r0);
            kv("R_H", r.r_h);
            kv("lifted_sq_at_zero", r.lifted_sq_at_zero);
            kv("quadrature_tail_weight", r.tail_weight);
            kv("quadrature_horizon", r.horizon);
        }
        out
    }
}

fn check_params(params: &Params) -> Result<()> {
    if !(params.r > 0.0) {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: "must be positive".into(),
        });
    }
    if !(params.b > 0.0) {
        return Err(Error::InvalidParameter {
            name: "b",
            reason: "must be positive".into(),
        });
    }
    params.validate()
}

pub fn c1(params: &Params) -> f64 {
    (2.0 * params.beta * params.beta + 11.0 / 8.0) / params.b
}

pub fn sigma(params: &Params) -> f64 {
    params.r.min(1.0)
}

pub fn n_constant(params: &Params) -> f64 {
    let c1 = c1(params);
    let (a, r, q) = (params.a, params.r, params.q);
    let ca = c1 * a;
    let inner = 4.0 * c1 * c1 + 3.0 * c1 * c1 / (2.0 * r) + 3.0 * q * q / r;
    2.0 * ca.powi(4)
        + params.j * params.j / 2.0
        + 3.0 * params.alpha * params.alpha
        + 3.0 * q * q * params.c * params.c / r
        + inner * inner
}

/// Follows the Young splits that bound the noise terms of the energy identity.
///
/// * Linear noise terms: with `X₁ = d₁Δh₁Γ₁ + κh₁Γ₁ + h₂Γ₂ - h₃Γ₃`,
///   `X₂ = d₂Δh₂Γ₂ + (κ - 1)h₂Γ₂`, `X₃ = d₃Δh₃Γ₃ + qh₁Γ₁ + (κ - r)h₃Γ₃`,
///   `c₁⟨U,X₁⟩ ≤ c₁²/2‖U‖² + ½‖X₁‖²`, `⟨V,X₂⟩ ≤ 1/12‖V‖² + 3‖X₂‖²`,
///   `⟨Z,X₃⟩ ≤ r/6‖Z‖² + 3/(2r)‖X₃‖²`, and Cauchy-Schwarz gives
///   `‖Xᵢ‖² ≤ Aᵢ|Γ|²`. So `c(h) = A₁/2 + 3A₂ + 3A₃/(2r)`.
/// * Quadratic lifted terms: `2[2β² + 2(c₁a)² + 1/4] ‖Γ^h‖²` with
///   `‖Γ^h‖² ≤ maxᵢ‖hᵢ‖² |Γ|²`. (The cross term `2(c₁a)²(Γ₁^h)²` is kept
///   with its factor 2.)
/// * Quartic lifted term: `4(c₁b)⁴ ‖Γ^h‖⁴_{L⁴}` with
///   `‖Γ^h‖⁴_{L⁴} ≤ maxᵢ‖hᵢ‖⁴_{L⁴} |Γ|⁴`.
///
/// The quadratic and quartic coefficients are merged with a max so the
/// result multiplies `|Γ|² + |Γ|⁴`.
fn traced_c_bound(params: &Params, profiles: &ProfileSet) -> f64 {
    let hn: [f64; 3] = std::array::from_fn(|i| profiles.h(i).norm_l2());
    let ln: [f64; 3] = std::array::from_fn(|i| profiles.lap_h(i).norm_l2());
    let h4: [f64; 3] = std::array::from_fn(|i| profiles.h(i).l4_pow4());
    let [d1, d2, d3] = params.d;
    let (kappa, q, r) = (params.kappa, params.q, params.r);
    let a1 = (d1 * ln[0] + kappa * hn[0]).powi(2) + hn[1].powi(2) + hn[2].powi(2);
    let a2 = (d2 * ln[1] + (kappa - 1.0).abs() * hn[1]).powi(2);
    let a3 = q * q * hn[0].powi(2) + (d3 * ln[2] + (kappa - r).abs() * hn[2]).powi(2);
    let c_h = a1 / 2.0 + 3.0 * a2 + 3.0 * a3 / (2.0 * r);
    let c1 = c1(params);
    let max_h2 = hn.iter().map(|v| v * v).fold(0.0, f64::max);
    let max_h4 = h4.iter().cloned().fold(0.0, f64::max);
    let quad = 2.0 * c_h
        + 2.0 * (2.0 * params.beta * params.beta + 2.0 * (c1 * params.a).powi(2) + 0.25) * max_h2;
    let quart = 4.0 * (c1 * params.b).powi(4) * max_h4;
    quad.max(quart)
}

/// Evaluates `c₁, σ, N, F` and the traced `C(h)`.
pub fn compute_constants(
    params: &Params,
    profiles: &ProfileSet,
    grid: &Grid,
) -> Result<ConstantsBundle> {
    check_params(params)?;
    let c1 = c1(params);
    let n_const = n_constant(params);
    Ok(ConstantsBundle {
        c1,
        sigma: sigma(params),
        n_const,
        f_const: 2.0 * n_const + c1 * c1 / 16.0,
        c_bound: traced_c_bound(params, profiles),
        domain_volume: grid.domain_volume(),
        radii: None,
    })
}

/// `r₀(ω)`, `R₀(ω)` and `R_H(ω) = sqrt(R₀ + ‖Γ^h(ω)‖²)`.
///
/// The integral over `(-∞, -1]` is truncated at `-horizon`; trapezoid
/// quadrature on the path's time grid.
pub fn absorbing_radius(
    path: &OuPath,
    constants: &ConstantsBundle,
    params: &Params,
    profiles: &ProfileSet,
    horizon: f64,
) -> Result<AbsorbingRadii> {
    let sigma = constants.sigma;
    if !(horizon > 1.0) {
        return Err(Error::HorizonTooShort { horizon, tail: 1.0 });
    }
    let tail = (-sigma * (horizon - 1.0)).exp();
    if tail > 1e-6 {
        return Err(Error::HorizonTooShort { horizon, tail });
    }
    let grid = path.time_grid();
    let k_lo = grid.index_of(-horizon)?;
    let k_m1 = grid.index_of(-1.0)?;
    let k_0 = grid.index_of(0.0)?;
    let dt = grid.dt();
    let g = |k: usize| {
        let v = path.at_index(k);
        constants.forcing(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    };
    let weighted = |k: usize| (sigma * (1.0 + grid.time(k))).exp() * g(k);
    let trapezoid = |lo: usize, hi: usize, f: &dyn Fn(usize) -> f64| {
        let mut acc = 0.5 * (f(lo) + f(hi));
        for k in lo + 1..hi {
            acc += f(k);
        }
        acc * dt
    };
    let far = trapezoid(k_lo, k_m1, &weighted);
    let near = trapezoid(k_m1, k_0, &g);
    let c1 = constants.c1;
    let r0 = 1.0 + far / c1.min(1.0);
    let two_d = 2.0 * params.d_min();
    let big_r0 = (c1.max(1.0) * r0 + near) / (two_d.min(1.0) * c1.min(1.0));
    let noise = profiles.sample(path.at_index(k_0));
    let lifted = noise.lifted_norm_sq();
    Ok(AbsorbingRadii {
        r0,
        big_r0,
        r_h: (big_r0 + lifted).sqrt(),
        lifted_sq_at_zero: lifted,
        tail_weight: tail,
        horizon,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub time: f64,
    /// `c₁‖U‖² + ‖V‖² + ‖Z‖²`.
    pub energy: f64,
    /// `c₁‖∇U‖² + ‖∇V‖² + ‖∇Z‖²`.
    pub grad_energy: f64,
    pub u_l4_pow4: f64,
    pub gamma_sq: f64,
    pub gamma_pow4: f64,
    pub lifted_sq: f64,
    pub lifted_l4_pow4: f64,
    /// Finite-difference `dE/dt`.
    pub derivative: f64,
    /// `C(h)(|Γ|² + |Γ|⁴) + F|Ω|`.
    pub forcing: f64,
    /// `dE/dt + σE - forcing`; nonpositive when the inequality holds.
    pub residual: f64,
    /// Centered difference (false at the two ends).
    pub interior: bool,
}

impl EnergyReport {
    /// Magnitude of the terms entering the residual.
    pub fn scale(&self, sigma: f64) -> f64 {
        self.derivative.abs() + sigma * self.energy + self.forcing
    }
}

/// Energy, noise magnitudes and inequality residual at every snapshot.
pub fn energy_series(traj: &Trajectory, constants: &ConstantsBundle) -> Result<Vec<EnergyReport>> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::Invalid(format!(
            "energy series needs at least 3 snapshots, got {n}"
        )));
    }
    let c1 = constants.c1;
    let mut reports: Vec<EnergyReport> = (0..n)
        .map(|i| {
            let s = &traj.states[i];
            let comp = |k: usize| s.component(k);
            let energy = c1 * comp(0).norm_l2().powi(2)
                + comp(1).norm_l2().powi(2)
                + comp(2).norm_l2().powi(2);
            let grad_energy = c1 * comp(0).seminorm_h1().powi(2)
                + comp(1).seminorm_h1().powi(2)
                + comp(2).seminorm_h1().powi(2);
            let noise = traj.noise(i);
            let gamma_sq = noise.gamma_sq();
            EnergyReport {
                time: traj.times[i],
                energy,
                grad_energy,
                u_l4_pow4: comp(0).l4_pow4(),
                gamma_sq,
                gamma_pow4: gamma_sq * gamma_sq,
                lifted_sq: noise.lifted_norm_sq(),
                lifted_l4_pow4: noise.lifted_l4_pow4(),
                derivative: 0.0,
                forcing: constants.forcing(gamma_sq),
                residual: 0.0,
                interior: i > 0 && i + 1 < n,
            }
        })
        .collect();
    for i in 0..n {
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i + 1 == n {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let d = (reports[hi].energy - reports[lo].energy) / (reports[hi].time - reports[lo].time);
        let r = &mut reports[i];
        r.derivative = d;
        r.residual = d + constants.sigma * r.energy - r.forcing;
    }
    Ok(reports)
}

/// Right side of the integrated Gronwall bound at each snapshot,
/// `e^{-σ(t-τ)}E(τ) + ∫_τ^t e^{-σ(t-s)} forcing(s) ds`, by trapezoid.
pub fn gronwall_bound(reports: &[EnergyReport], sigma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(reports.len());
    let Some(first) = reports.first() else {
        return out;
    };
    let mut bound = first.energy;
    out.push(bound);
    for w in reports.windows(2) {
        let h = w[1].time - w[0].time;
        let decay = (-sigma * h).exp();
        bound = decay * bound + 0.5 * h * (decay * w[0].forcing + w[1].forcing);
        out.push(bound);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct H1Report {
    pub time: f64,
    /// `‖∇U‖² + ‖∇V‖² + ‖∇Z‖²`.
    pub grad_sq: f64,
    /// `‖ΔU‖², ‖ΔV‖², ‖ΔZ‖²` with the discrete Laplacian.
    pub lap_sq: [f64; 3],
}

pub fn h1_report(traj: &Trajectory) -> Vec<H1Report> {
    traj.states
        .iter()
        .zip(&traj.times)
        .map(|(s, &time)| H1Report {
            time,
            grad_sq: (0..3).map(|i| s.component(i).seminorm_h1().powi(2)).sum(),
            lap_sq: std::array::from_fn(|i| s.component(i).laplacian_neumann().norm_l2().powi(2)),
        })
        .collect()
}

/// Least-squares decay rate `-d ln(v)/dt`.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len().min(values.len()) as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let tm = times.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, l) in times.iter().zip(&logs) {
        sxy += (t - tm) * (l - lm);
        sxx += (t - tm) * (t - tm);
    }
    -sxy / sxx
}
