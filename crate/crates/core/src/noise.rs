//! Two-sided Wiener paths, the shift `θ_s`, and stationary Ornstein-Uhlenbeck
//! processes `dΓ = -κ Γ dt + dW`.
//!
//! Every Gaussian draw is addressed by `(seed, purpose, absolute time cell)`
//! rather than by position in a sequential stream. A shifted or re-windowed
//! path therefore sees exactly the same `ω` as the master path it came from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Uniform two-sided time grid `t_k = (k - k₀) dt` with `t_{k₀} = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    before: usize,
    after: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTimeGrid(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !(t_min <= 0.0 && t_max >= 0.0) {
            return Err(Error::InvalidTimeGrid(format!(
                "window [{t_min}, {t_max}] must contain 0"
            )));
        }
        let before = steps_exact(-t_min, dt).ok_or_else(|| {
            Error::InvalidTimeGrid(format!("t_min = {t_min} is not a multiple of dt = {dt}"))
        })?;
        let after = steps_exact(t_max, dt).ok_or_else(|| {
            Error::InvalidTimeGrid(format!("t_max = {t_max} is not a multiple of dt = {dt}"))
        })?;
        Self::from_steps(dt, before, after)
    }

    pub fn from_steps(dt: f64, before: usize, after: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTimeGrid(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if before + after < 1 {
            return Err(Error::InvalidTimeGrid(
                "at least two time points are required".into(),
            ));
        }
        Ok(Self { dt, before, after })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.before + self.after + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `t = 0`.
    pub fn zero_index(&self) -> usize {
        self.before
    }

    pub fn t_min(&self) -> f64 {
        self.time(0)
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as i64 - self.before as i64) as f64 * self.dt
    }

    /// Signed step count of `t` from zero, if `t` is a grid multiple.
    pub fn steps_of(&self, t: f64) -> Result<i64> {
        let m = (t / self.dt).round();
        if !m.is_finite() || (t - m * self.dt).abs() > 1e-6 * self.dt {
            return Err(Error::OffGrid(t));
        }
        Ok(m as i64)
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = self.steps_of(t)? + self.before as i64;
        if k < 0 || k >= self.len() as i64 {
            return Err(Error::WindowExhausted(format!(
                "t = {t} outside [{}, {}]",
                self.t_min(),
                self.t_max()
            )));
        }
        Ok(k as usize)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.index_of(t).is_ok()
    }

    /// Same spacing, zero moved to the old index of `t = s`.
    fn relabel(&self, s: f64) -> Result<(Self, i64)> {
        let k = self.index_of(s)?;
        let m = k as i64 - self.before as i64;
        let grid = Self {
            dt: self.dt,
            before: k,
            after: self.len() - 1 - k,
        };
        Ok((grid, m))
    }
}

fn steps_exact(t: f64, dt: f64) -> Option<usize> {
    let m = (t / dt).round();
    if m.is_finite() && m >= 0.0 && (t - m * dt).abs() <= 1e-6 * dt {
        Some(m as usize)
    } else {
        None
    }
}

const WIENER_STREAM: u64 = 0;
const OU_AUX_STREAM: u64 = 3;
const OU_INIT_STREAM: u64 = 6;
const WORDS_PER_CELL: u128 = 64;

/// Random-access standard normals keyed by an absolute cell index.
struct CellNormals {
    rng: ChaCha8Rng,
}

impl CellNormals {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    fn at(&mut self, cell: i64) -> f64 {
        // zig-zag so negative and positive cells share one stream without overlap
        let pos = if cell >= 0 {
            2 * cell as u128
        } else {
            2 * (-(cell + 1)) as u128 + 1
        };
        self.rng.set_word_pos(pos * WORDS_PER_CELL);
        self.rng.sample(StandardNormal)
    }
}

/// Read access to three sampled channels on a time grid.
pub trait PathChannels {
    fn time_grid(&self) -> &TimeGrid;
    fn channel(&self, i: usize) -> &[f64];

    fn at_index(&self, k: usize) -> [f64; 3] {
        [self.channel(0)[k], self.channel(1)[k], self.channel(2)[k]]
    }

    fn at_time(&self, t: f64) -> Result<[f64; 3]> {
        let k = self.time_grid().index_of(t)?;
        Ok(self.at_index(k))
    }
}

/// Three independent two-sided Wiener channels with `ω(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    grid: TimeGrid,
    seed: u64,
    /// Absolute step offset of this path's `t = 0` relative to the master path.
    origin: i64,
    increments: [Vec<f64>; 3],
    values: [Vec<f64>; 3],
}

impl WienerPath {
    /// Builds values by summing increments outward from `t = 0`.
    pub fn from_increments(
        grid: TimeGrid,
        seed: u64,
        origin: i64,
        increments: [Vec<f64>; 3],
    ) -> Result<Self> {
        let n = grid.len();
        for inc in &increments {
            if inc.len() != n - 1 {
                return Err(Error::Format(format!(
                    "expected {} increments per channel, got {}",
                    n - 1,
                    inc.len()
                )));
            }
            if inc.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format("non-finite Wiener increment".into()));
            }
        }
        let z = grid.zero_index();
        let values = std::array::from_fn(|c| {
            let inc = &increments[c];
            let mut w = vec![0.0; n];
            for k in z..n - 1 {
                w[k + 1] = w[k] + inc[k];
            }
            for k in (0..z).rev() {
                w[k] = w[k + 1] - inc[k];
            }
            w
        });
        Ok(Self {
            grid,
            seed,
            origin,
            increments,
            values,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// Increment `ω(t_{k+1}) - ω(t_k)` per channel.
    pub fn increments(&self, channel: usize) -> &[f64] {
        &self.increments[channel]
    }

    /// `(θ_s ω)(τ) = ω(τ + s) - ω(s)` on the translated window.
    pub fn shift_path(&self, s: f64) -> Result<Self> {
        let (grid, m) = self.grid.relabel(s)?;
        let k = grid.zero_index();
        let values = std::array::from_fn(|c| {
            let base = self.values[c][k];
            self.values[c].iter().map(|&w| w - base).collect()
        });
        Ok(Self {
            grid,
            seed: self.seed,
            origin: self.origin + m,
            increments: self.increments.clone(),
            values,
        })
    }

    fn absolute_cell(&self, k: usize) -> i64 {
        self.origin + k as i64 - self.grid.zero_index() as i64
    }
}

impl PathChannels for WienerPath {
    fn time_grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn channel(&self, i: usize) -> &[f64] {
        &self.values[i]
    }
}

/// Samples the master path for `seed` on `grid`.
pub fn sample_wiener(seed: u64, grid: TimeGrid) -> WienerPath {
    let n = grid.len();
    let z = grid.zero_index() as i64;
    let sd = grid.dt().sqrt();
    let increments = std::array::from_fn(|c| {
        let mut normals = CellNormals::new(seed, WIENER_STREAM + c as u64);
        (0..n - 1)
            .map(|k| sd * normals.at(k as i64 - z))
            .collect::<Vec<_>>()
    });
    WienerPath::from_increments(grid, seed, 0, increments)
        .expect("sampled increments are finite and sized to the grid")
}

/// Stationary OU channels `Γ_i(θ_t ω)` sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OuPath {
    grid: TimeGrid,
    kappa: f64,
    origin: i64,
    /// `Γ(t_min)` before any relabelling of the window.
    initial: [f64; 3],
    /// Exact one-step innovations `∫ e^{-κ(t_{k+1}-s)} dW(s)`.
    increments: [Vec<f64>; 3],
    values: [Vec<f64>; 3],
}

impl OuPath {
    /// Runs `Γ_{k+1} = e^{-κ dt} Γ_k + I_k` from `Γ_0 = initial`.
    pub fn from_parts(
        grid: TimeGrid,
        kappa: f64,
        initial: [f64; 3],
        increments: [Vec<f64>; 3],
    ) -> Result<Self> {
        check_kappa(kappa)?;
        let n = grid.len();
        for inc in &increments {
            if inc.len() != n - 1 {
                return Err(Error::Format(format!(
                    "expected {} OU increments per channel, got {}",
                    n - 1,
                    inc.len()
                )));
            }
        }
        let decay = (-kappa * grid.dt()).exp();
        let values = std::array::from_fn(|c| {
            let mut g = Vec::with_capacity(n);
            let mut cur = initial[c];
            g.push(cur);
            for &inc in &increments[c] {
                cur = decay * cur + inc;
                g.push(cur);
            }
            g
        });
        let path = Self {
            grid,
            kappa,
            origin: 0,
            initial,
            increments,
            values,
        };
        if path.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite OU value".into()));
        }
        Ok(path)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn initial(&self) -> [f64; 3] {
        self.initial
    }

    pub fn increments(&self, channel: usize) -> &[f64] {
        &self.increments[channel]
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// `Γ(θ_s ω)(τ) = Γ(ω)(τ + s)`: same samples, zero moved to `s`.
    pub fn shift(&self, s: f64) -> Result<Self> {
        let (grid, m) = self.grid.relabel(s)?;
        Ok(Self {
            grid,
            origin: self.origin + m,
            ..self.clone()
        })
    }

    /// Largest deviation between stored values and a fresh run of the recursion.
    pub fn recursion_defect(&self) -> f64 {
        let decay = (-self.kappa * self.grid.dt()).exp();
        let mut worst = 0.0f64;
        for c in 0..3 {
            let mut cur = self.initial[c];
            worst = worst.max((cur - self.values[c][0]).abs());
            for (k, &inc) in self.increments[c].iter().enumerate() {
                cur = decay * cur + inc;
                worst = worst.max((cur - self.values[c][k + 1]).abs());
            }
        }
        worst
    }

    /// A copy with every channel forced to zero (noise-free runs).
    pub fn zeroed(grid: TimeGrid, kappa: f64) -> Result<Self> {
        let n = grid.len();
        Self::from_parts(
            grid,
            kappa,
            [0.0; 3],
            std::array::from_fn(|_| vec![0.0; n - 1]),
        )
    }
}

impl PathChannels for OuPath {
    fn time_grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn channel(&self, i: usize) -> &[f64] {
        &self.values[i]
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "kappa",
            reason: format!("must be positive, got {kappa}"),
        })
    }
}

/// Stationary OU process driven by `p`.
///
/// `Γ(t_min)` is drawn from the stationary law `N(0, 1/(2κ))`. Each step uses
/// the exact transition: the innovation `I_k` is Gaussian with variance
/// `(1 - e^{-2κ dt}) / (2κ)` and covariance `(1 - e^{-κ dt}) / κ` with the
/// driving increment `ΔW_k`, realized as `I = c ΔW + s ξ` with an independent
/// `ξ`.
pub fn ou_from_wiener(p: &WienerPath, kappa: f64) -> Result<OuPath> {
    check_kappa(kappa)?;
    let grid = p.grid;
    let dt = grid.dt();
    let var_innov = -(-2.0 * kappa * dt).exp_m1() / (2.0 * kappa);
    let cov = -(-kappa * dt).exp_m1() / kappa;
    let c = cov / dt;
    let s = (var_innov - c * cov).max(0.0).sqrt();
    let sd0 = (0.5 / kappa).sqrt();
    let start_cell = p.absolute_cell(0);
    let mut initial = [0.0; 3];
    let increments = std::array::from_fn(|ch| {
        let mut init = CellNormals::new(p.seed, OU_INIT_STREAM + ch as u64);
        initial[ch] = sd0 * init.at(start_cell);
        let mut aux = CellNormals::new(p.seed, OU_AUX_STREAM + ch as u64);
        p.increments[ch]
            .iter()
            .enumerate()
            .map(|(k, &dw)| c * dw + s * aux.at(p.absolute_cell(k)))
            .collect::<Vec<_>>()
    });
    let mut ou = OuPath::from_parts(grid, kappa, initial, increments)?;
    ou.origin = p.origin;
    Ok(ou)
}

/// Tail maxima of `e^{-ε|t|} |X(t)|^p` for one `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailEntry {
    pub epsilon: f64,
    /// Over `t ≤ t_min / 2`; zero when the path has no negative time.
    pub negative_tail_max: f64,
    /// Over `t ≥ t_max / 2`; zero when the path has no positive time.
    pub positive_tail_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperednessReport {
    pub power: f64,
    pub entries: Vec<TailEntry>,
    /// `|X(t_min)| / |t_min|` (0 if `t_min = 0`).
    pub growth_ratio_start: f64,
    /// `|X(t_max)| / |t_max|` (0 if `t_max = 0`).
    pub growth_ratio_end: f64,
    pub sup_norm: f64,
}

/// Diagnostic tail behaviour of a path; no pass/fail is attached.
pub fn temperedness_report(
    path: &impl PathChannels,
    epsilons: &[f64],
    power: f64,
) -> Result<TemperednessReport> {
    let grid = *path.time_grid();
    if grid.t_max() - grid.t_min() < 10.0 {
        return Err(Error::Invalid(format!(
            "path horizon {} shorter than 10 time units",
            grid.t_max() - grid.t_min()
        )));
    }
    let norm = |k: usize| {
        let v = path.at_index(k);
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    };
    let n = grid.len();
    let entries = epsilons
        .iter()
        .map(|&eps| {
            let mut neg = 0.0f64;
            let mut pos = 0.0f64;
            for k in 0..n {
                let t = grid.time(k);
                let w = (-eps * t.abs()).exp() * norm(k).powf(power);
                if t < 0.0 && t <= 0.5 * grid.t_min() {
                    neg = neg.max(w);
                }
                if t > 0.0 && t >= 0.5 * grid.t_max() {
                    pos = pos.max(w);
                }
            }
            TailEntry {
                epsilon: eps,
                negative_tail_max: neg,
                positive_tail_max: pos,
            }
        })
        .collect();
    let ratio = |k: usize| {
        let t = grid.time(k).abs();
        if t > 0.0 {
            norm(k) / t
        } else {
            0.0
        }
    };
    Ok(TemperednessReport {
        power,
        entries,
        growth_ratio_start: ratio(0),
        growth_ratio_end: ratio(n - 1),
        sup_norm: (0..n).map(norm).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t_min: f64, t_max: f64, dt: f64) -> TimeGrid {
        TimeGrid::new(t_min, t_max, dt).unwrap()
    }

    #[test]
    fn time_grid_contract() {
        let g = grid(-1.0, 2.0, 0.25);
        assert_eq!(g.len(), 13);
        assert_eq!(g.zero_index(), 4);
        assert_eq!(g.time(4), 0.0);
        assert_eq!(g.index_of(1.5).unwrap(), 10);
        assert!(matches!(g.index_of(0.1), Err(Error::OffGrid(_))));
        assert!(matches!(g.index_of(3.0), Err(Error::WindowExhausted(_))));
        assert!(TimeGrid::new(0.5, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(-0.33, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn wiener_anchored_and_deterministic() {
        let g = grid(-3.0, 2.0, 0.01);
        for seed in [0, 1, 99] {
            let p = sample_wiener(seed, g);
            assert_eq!(p.at_time(0.0).unwrap(), [0.0; 3]);
            assert_eq!(p, sample_wiener(seed, g));
        }
        assert_ne!(sample_wiener(1, g), sample_wiener(2, g));
    }

    #[test]
    fn wider_window_reproduces_inner_window() {
        let small = sample_wiener(5, grid(-1.0, 1.0, 0.1));
        let big = sample_wiener(5, grid(-2.0, 3.0, 0.1));
        for k in 0..small.time_grid().len() {
            let t = small.time_grid().time(k);
            let a = small.at_time(t).unwrap();
            let b = big.at_time(t).unwrap();
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn channels_are_distinct() {
        let p = sample_wiener(3, grid(0.0, 1.0, 0.1));
        assert_ne!(p.increments(0), p.increments(1));
        assert_ne!(p.increments(1), p.increments(2));
    }

    #[test]
    fn shift_identity_and_anchor() {
        let p = sample_wiener(11, grid(-2.0, 2.0, 0.05));
        assert_eq!(p.shift_path(0.0).unwrap(), p);
        for s in [-1.5, 0.35, 2.0] {
            let q = p.shift_path(s).unwrap();
            assert_eq!(q.at_time(0.0).unwrap(), [0.0; 3]);
            let tau = 0.0 - s.min(0.0) - 0.1;
            let a = q.at_time(tau).unwrap();
            let b = p.at_time(tau + s).unwrap();
            let base = p.at_time(s).unwrap();
            for c in 0..3 {
                assert!((a[c] - (b[c] - base[c])).abs() < 1e-14);
            }
        }
        assert!(matches!(p.shift_path(0.01), Err(Error::OffGrid(_))));
        assert!(matches!(p.shift_path(2.5), Err(Error::WindowExhausted(_))));
    }

    #[test]
    fn shift_composition() {
        let p = sample_wiener(4, grid(-5.0, 5.0, 0.01));
        let (s, t) = (1.3, -2.1);
        let lhs = p.shift_path(s).unwrap().shift_path(t).unwrap();
        let rhs = p.shift_path(s + t).unwrap();
        for k in 0..lhs.time_grid().len() {
            let tau = lhs.time_grid().time(k);
            let a = lhs.at_index(k);
            let b = rhs.at_time(tau).unwrap();
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kappa_must_be_positive() {
        let p = sample_wiener(0, grid(-1.0, 1.0, 0.1));
        assert!(ou_from_wiener(&p, 0.0).is_err());
        assert!(ou_from_wiener(&p, -1.0).is_err());
    }

    #[test]
    fn homogeneous_ou_solution() {
        let g = grid(-1.0, 4.0, 0.01);
        let kappa = 0.7;
        let n = g.len();
        let ou = OuPath::from_parts(
            g,
            kappa,
            [1.0; 3],
            std::array::from_fn(|_| vec![0.0; n - 1]),
        )
        .unwrap();
        for k in 0..n {
            let exact = (-kappa * (g.time(k) - g.t_min())).exp();
            assert!((ou.at_index(k)[0] - exact).abs() <= 1e-13 * exact.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn ou_recursion_and_shift_consistency() {
        let w = sample_wiener(21, grid(-4.0, 3.0, 0.01));
        let ou = ou_from_wiener(&w, 1.3).unwrap();
        assert!(ou.recursion_defect() <= 1e-12);
        let s = -1.7;
        let a = ou.shift(s).unwrap();
        let b = ou_from_wiener(&w.shift_path(s).unwrap(), 1.3).unwrap();
        for k in 0..a.time_grid().len() {
            for c in 0..3 {
                assert!((a.at_index(k)[c] - b.at_index(k)[c]).abs() <= 1e-12);
            }
        }
        assert_eq!(a.at_time(0.0).unwrap(), ou.at_time(s).unwrap());
    }

    #[test]
    fn ou_stationary_variance_on_long_path() {
        let kappa = 0.5;
        let w = sample_wiener(8, grid(-20000.0, 0.0, 0.1));
        let ou = ou_from_wiener(&w, kappa).unwrap();
        let xs = ou.channel(0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(
            (var - 1.0 / (2.0 * kappa)).abs() <= 0.1 / (2.0 * kappa),
            "var {var}"
        );
    }

    #[test]
    fn ou_lag_one_autocorrelation() {
        let (kappa, dt) = (100.0, 0.01);
        let w = sample_wiener(2, grid(-200.0, 0.0, dt));
        let ou = ou_from_wiener(&w, kappa).unwrap();
        let xs = ou.channel(1);
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        let cov = xs
            .windows(2)
            .map(|p| (p[0] - mean) * (p[1] - mean))
            .sum::<f64>();
        let rho = cov / var;
        assert!((rho - (-kappa * dt).exp()).abs() <= 0.05, "rho {rho}");
    }

    #[test]
    fn temperedness_of_zero_and_bounded_paths() {
        let g = grid(-10.0, 10.0, 0.1);
        let zero = OuPath::zeroed(g, 1.0).unwrap();
        let rep = temperedness_report(&zero, &[0.1, 1.0], 2.0).unwrap();
        assert!(rep
            .entries
            .iter()
            .all(|e| e.negative_tail_max == 0.0 && e.positive_tail_max == 0.0));

        let w = sample_wiener(1, g);
        let ou = ou_from_wiener(&w, 1.0).unwrap();
        let rep = temperedness_report(&ou, &[1.0], 1.0).unwrap();
        let bound = rep.sup_norm * (-1.0f64 * 5.0).exp();
        assert!(rep.entries[0].negative_tail_max <= bound * (1.0 + 1e-12));
        assert!(rep.entries[0].positive_tail_max <= bound * (1.0 + 1e-12));

        let short = OuPath::zeroed(grid(-1.0, 1.0, 0.1), 1.0).unwrap();
        assert!(temperedness_report(&short, &[1.0], 2.0).is_err());
    }
}
