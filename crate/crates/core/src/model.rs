//! Hindmarsh-Rose right-hand sides and the additive OU transform.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{eval_profile, Grid, NoiseProfile, ScalarField};
use crate::noise::{OuPath, PathChannels};

/// Model constants. All of `d`, `a`, `b`, `alpha`, `beta`, `q`, `r`, `j` and
/// `kappa` must be positive; `c` is any real.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub d: [f64; 3],
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub r: f64,
    pub j: f64,
    pub c: f64,
    pub kappa: f64,
    pub profiles: [NoiseProfile; 3],
}

impl Params {
    /// Classical bursting constants with small cosine noise profiles.
    pub fn demo(dimension: usize) -> Self {
        Self {
            d: [0.1; 3],
            a: 3.0,
            b: 1.0,
            alpha: 1.0,
            beta: 5.0,
            q: 0.01,
            r: 0.006,
            j: 2.0,
            c: -1.6,
            kappa: 1.0,
            profiles: default_profiles(dimension, 0.5),
        }
    }

    /// Same constants with every profile amplitude set to zero.
    pub fn without_noise(&self) -> Self {
        let mut p = self.clone();
        for prof in &mut p.profiles {
            prof.amplitude = 0.0;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 11] = [
            ("d1", self.d[0]),
            ("d2", self.d[1]),
            ("d3", self.d[2]),
            ("a", self.a),
            ("b", self.b),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("q", self.q),
            ("r", self.r),
            ("J", self.j),
            ("kappa", self.kappa),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be a finite positive constant, got {v}"),
                });
            }
        }
        if !self.c.is_finite() {
            return Err(Error::InvalidParameter {
                name: "c",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    /// Parameter validation plus profile/grid compatibility.
    pub fn validate_for(&self, grid: &Grid) -> Result<()> {
        self.validate()?;
        for p in &self.profiles {
            p.check(grid)?;
        }
        Ok(())
    }

    /// `min{d1, d2, d3}`.
    pub fn d_min(&self) -> f64 {
        self.d.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn phi_at(&self, u: f64) -> f64 {
        let u2 = u * u;
        self.a * u2 - self.b * u2 * u
    }

    #[inline]
    pub fn psi_at(&self, u: f64) -> f64 {
        self.alpha - self.beta * u * u
    }

    /// Reaction part `f(u, v, z)` at one point.
    #[inline]
    pub fn reaction_at(&self, u: f64, v: f64, z: f64) -> [f64; 3] {
        [
            self.phi_at(u) + v - z + self.j,
            self.psi_at(u) - v,
            self.q * (u - self.c) - self.r * z,
        ]
    }
}

fn default_profiles(dimension: usize, amplitude: f64) -> [NoiseProfile; 3] {
    if dimension == 1 {
        [
            NoiseProfile::new(vec![1], amplitude),
            NoiseProfile::new(vec![0], amplitude),
            NoiseProfile::new(vec![2], amplitude),
        ]
    } else {
        [
            NoiseProfile::new(vec![1, 0], amplitude),
            NoiseProfile::new(vec![0, 1], amplitude),
            NoiseProfile::new(vec![1, 1], amplitude),
        ]
    }
}

/// `φ(u) = a u² - b u³` pointwise.
pub fn phi(params: &Params, u: &ScalarField) -> ScalarField {
    u.map(|x| params.phi_at(x))
}

/// `ψ(u) = α - β u²` pointwise.
pub fn psi(params: &Params, u: &ScalarField) -> ScalarField {
    u.map(|x| params.psi_at(x))
}

/// Whether a triple holds `(u, v, z)` or the transformed `(U, V, Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Original,
    Transformed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateTriple {
    role: Role,
    fields: [ScalarField; 3],
}

impl StateTriple {
    pub fn new(role: Role, fields: [ScalarField; 3]) -> Result<Self> {
        if !(fields[0].same_grid(&fields[1]) && fields[0].same_grid(&fields[2])) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { role, fields })
    }

    pub fn zeros(grid: Arc<Grid>, role: Role) -> Self {
        Self::constant(grid, role, [0.0; 3])
    }

    pub fn constant(grid: Arc<Grid>, role: Role, values: [f64; 3]) -> Self {
        Self {
            role,
            fields: values.map(|v| ScalarField::constant(grid.clone(), v)),
        }
    }

    pub(crate) fn from_raw(grid: &Arc<Grid>, role: Role, values: [Vec<f64>; 3]) -> Self {
        Self {
            role,
            fields: values.map(|v| {
                ScalarField::new(grid.clone(), v).expect("raw buffers are sized to the grid")
            }),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.fields[0].grid()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.fields[i]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.fields
    }

    pub fn expect_role(&self, expected: Role) -> Result<()> {
        if self.role == expected {
            Ok(())
        } else {
            Err(Error::RoleMismatch {
                expected,
                found: self.role,
            })
        }
    }

    /// Norm in `H = L²(Ω, ℝ³)`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.fields.iter().map(|f| f.norm_l2().powi(2)).sum()
    }

    /// `‖self - other‖_H`; roles must agree.
    pub fn distance(&self, other: &StateTriple) -> Result<f64> {
        other.expect_role(self.role)?;
        let mut total = 0.0;
        for (a, b) in self.fields.iter().zip(&other.fields) {
            let diff = a.zip_with(b, |x, y| x - y)?;
            total += diff.norm_l2().powi(2);
        }
        Ok(total.sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.fields.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.fields.iter().all(|f| f.is_finite())
    }
}

/// Noise profiles `h_i` and their analytic Laplacians on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    grid: Arc<Grid>,
    h: [ScalarField; 3],
    lap: [ScalarField; 3],
}

impl ProfileSet {
    pub fn new(params: &Params, grid: &Arc<Grid>) -> Result<Self> {
        let mut h = Vec::with_capacity(3);
        let mut lap = Vec::with_capacity(3);
        for p in &params.profiles {
            let (f, l) = eval_profile(p, grid)?;
            h.push(f);
            lap.push(l);
        }
        let h: [ScalarField; 3] = h.try_into().expect("three profiles");
        let lap: [ScalarField; 3] = lap.try_into().expect("three profiles");
        Ok(Self {
            grid: grid.clone(),
            h,
            lap,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn h(&self, i: usize) -> &ScalarField {
        &self.h[i]
    }

    pub fn lap_h(&self, i: usize) -> &ScalarField {
        &self.lap[i]
    }

    /// The noise data `Γ^h` and `Δh Γ` at a fixed `Γ` value.
    pub fn sample(&self, gamma: [f64; 3]) -> LiftedNoise<'_> {
        LiftedNoise {
            gamma,
            profiles: self,
        }
    }
}

/// `Γ(θ_t ω)` together with the profiles that lift it to fields.
#[derive(Debug, Clone, Copy)]
pub struct LiftedNoise<'a> {
    pub gamma: [f64; 3],
    pub profiles: &'a ProfileSet,
}

impl LiftedNoise<'_> {
    /// `Γ_i^h = h_i Γ_i`.
    pub fn field(&self, i: usize) -> ScalarField {
        self.profiles.h[i].scale(self.gamma[i])
    }

    /// `Δh_i Γ_i` from the closed-form profile Laplacian.
    pub fn lap_field(&self, i: usize) -> ScalarField {
        self.profiles.lap[i].scale(self.gamma[i])
    }

    /// `|Γ|²`.
    pub fn gamma_sq(&self) -> f64 {
        self.gamma.iter().map(|g| g * g).sum()
    }

    /// `‖Γ^h‖²` summed over the three channels.
    pub fn lifted_norm_sq(&self) -> f64 {
        (0..3).map(|i| self.field(i).norm_l2().powi(2)).sum()
    }

    /// `Σ_i ∫ (Γ_i^h)⁴`.
    pub fn lifted_l4_pow4(&self) -> f64 {
        (0..3).map(|i| self.field(i).l4_pow4()).sum()
    }
}

/// Time-indexed lift of an OU path through a profile set.
#[derive(Debug, Clone, Copy)]
pub struct OuLift<'a> {
    pub path: &'a OuPath,
    pub profiles: &'a ProfileSet,
}

/// Pairs `Γ` with the profiles; evaluate with [`OuLift::at_time`].
pub fn lift_ou<'a>(path: &'a OuPath, profiles: &'a ProfileSet) -> OuLift<'a> {
    OuLift { path, profiles }
}

impl<'a> OuLift<'a> {
    pub fn at_time(&self, t: f64) -> Result<LiftedNoise<'a>> {
        Ok(self.profiles.sample(self.path.at_time(t)?))
    }

    pub fn at_index(&self, k: usize) -> LiftedNoise<'a> {
        self.profiles.sample(self.path.at_index(k))
    }
}

fn check_noise_grid(state: &StateTriple, noise: &LiftedNoise<'_>) -> Result<()> {
    if state.component(0).same_grid(noise.profiles.h(0)) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `A g + f(g)` for an original-role state.
pub fn drift_original(params: &Params, g: &StateTriple) -> Result<StateTriple> {
    g.expect_role(Role::Original)?;
    let grid = g.grid().clone();
    let n = grid.len();
    let lap: [ScalarField; 3] = std::array::from_fn(|i| g.component(i).laplacian_neumann());
    let (u, v, z) = (
        g.component(0).values(),
        g.component(1).values(),
        g.component(2).values(),
    );
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
    for k in 0..n {
        let f = params.reaction_at(u[k], v[k], z[k]);
        for i in 0..3 {
            out[i][k] = params.d[i] * lap[i].values()[k] + f[i];
        }
    }
    Ok(StateTriple::from_raw(&grid, Role::Original, out))
}

/// Everything in the transformed tendency except `d_i Δ G_i`, written to `out`.
pub(crate) fn explicit_terms_into(
    params: &Params,
    state: [&[f64]; 3],
    noise: &LiftedNoise<'_>,
    out: &mut [Vec<f64>; 3],
) {
    let [g1, g2, g3] = noise.gamma;
    let p = noise.profiles;
    let (h1, h2, h3) = (p.h[0].values(), p.h[1].values(), p.h[2].values());
    let (l1, l2, l3) = (p.lap[0].values(), p.lap[1].values(), p.lap[2].values());
    let [d1, d2, d3] = params.d;
    let kappa = params.kappa;
    let n = state[0].len();
    for k in 0..n {
        let n1 = h1[k] * g1;
        let n2 = h2[k] * g2;
        let n3 = h3[k] * g3;
        let f = params.reaction_at(state[0][k] + n1, state[1][k] + n2, state[2][k] + n3);
        out[0][k] = d1 * l1[k] * g1 + f[0] + kappa * n1;
        out[1][k] = d2 * l2[k] * g2 + f[1] + kappa * n2;
        out[2][k] = d3 * l3[k] * g3 + f[2] + kappa * n3;
    }
}

/// Right-hand side of the transformed random PDE at one instant.
pub fn tendency_transformed(
    params: &Params,
    big_g: &StateTriple,
    noise: &LiftedNoise<'_>,
) -> Result<StateTriple> {
    big_g.expect_role(Role::Transformed)?;
    check_noise_grid(big_g, noise)?;
    let grid = big_g.grid().clone();
    let n = grid.len();
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; n]);
    let vals = [
        big_g.component(0).values(),
        big_g.component(1).values(),
        big_g.component(2).values(),
    ];
    explicit_terms_into(params, vals, noise, &mut out);
    let mut lap = vec![0.0; n];
    for i in 0..3 {
        grid.laplacian_into(vals[i], &mut lap);
        for k in 0..n {
            out[i][k] = params.d[i] * lap[k] + out[i][k];
        }
    }
    Ok(StateTriple::from_raw(&grid, Role::Transformed, out))
}

/// `G = g - Γ^h`.
pub fn to_transformed(g: &StateTriple, noise: &LiftedNoise<'_>) -> Result<StateTriple> {
    g.expect_role(Role::Original)?;
    shift_by_noise(g, noise, Role::Transformed, -1.0)
}

/// `g = G + Γ^h`.
pub fn to_original(big_g: &StateTriple, noise: &LiftedNoise<'_>) -> Result<StateTriple> {
    big_g.expect_role(Role::Transformed)?;
    shift_by_noise(big_g, noise, Role::Original, 1.0)
}

fn shift_by_noise(
    s: &StateTriple,
    noise: &LiftedNoise<'_>,
    role: Role,
    sign: f64,
) -> Result<StateTriple> {
    check_noise_grid(s, noise)?;
    let fields = std::array::from_fn(|i| {
        let h = noise.profiles.h(i).values();
        let g = sign * noise.gamma[i];
        let vals = s
            .component(i)
            .values()
            .iter()
            .zip(h)
            .map(|(&x, &hk)| x + hk * g)
            .collect();
        ScalarField::new(s.grid().clone(), vals).expect("same grid")
    });
    Ok(StateTriple { role, fields })
}
