//! Vertex-centred rectangular grids with a homogeneous Neumann Laplacian.
//!
//! Nodes sit at `x_i = i * L / (n - 1)`, boundary nodes included. The
//! Laplacian closes at the boundary with a mirrored ghost (`f_{-1} = f_1`),
//! which is exact for the Neumann cosine modes. Quadrature uses trapezoid
//! weights (half weight on boundary nodes): with these weights the stencil is
//! self-adjoint and summation by parts holds exactly,
//!
//! ```text
//! <-Δf, f> = Σ_edges w_edge ((f_b - f_a) / h)²  = |f|²_{H¹}
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Requested discretization of a rectangle `[0, L_x] (x [0, L_y])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub extents: Vec<f64>,
    pub points: Vec<usize>,
}

impl GridSpec {
    pub fn one_d(length: f64, points: usize) -> Self {
        Self {
            extents: vec![length],
            points: vec![points],
        }
    }

    pub fn two_d(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self {
            extents: vec![lx, ly],
            points: vec![nx, ny],
        }
    }

    pub fn dimension(&self) -> usize {
        self.points.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    extents: [f64; 2],
    points: [usize; 2],
    spacing: [f64; 2],
    inv_h2: [f64; 2],
    weights: [Vec<f64>; 2],
    bases: [AxisBasis; 2],
}

/// Cosine eigenvectors `φ_k(i) = cos(π k i / (n - 1))` of the 1D stencil.
///
/// They are orthogonal under the trapezoid weights, so the Helmholtz operator
/// `I - cΔ` diagonalizes exactly in the separable basis.
#[derive(Debug, Clone, PartialEq)]
struct AxisBasis {
    /// Row `k` holds `φ_k`.
    modes: Vec<f64>,
    /// Row `k` holds `w_i φ_k(i) / Σ_i w_i φ_k(i)²`.
    analysis: Vec<f64>,
    /// `-(4 / h²) sin²(π k / (2(n - 1)))`.
    eig: Vec<f64>,
}

impl AxisBasis {
    fn trivial() -> Self {
        Self {
            modes: vec![1.0],
            analysis: vec![1.0],
            eig: vec![0.0],
        }
    }

    fn new(n: usize, h: f64, weights: &[f64]) -> Self {
        let m = n - 1;
        let mut modes = vec![0.0; n * n];
        for k in 0..n {
            for i in 0..n {
                // reduce k·i mod 2m so the cosine argument stays small
                let arg = ((k * i) % (2 * m)) as f64 * PI / m as f64;
                modes[k * n + i] = arg.cos();
            }
        }
        let mut analysis = vec![0.0; n * n];
        for k in 0..n {
            let row = &modes[k * n..(k + 1) * n];
            let norm: f64 = row.iter().zip(weights).map(|(p, w)| w * p * p).sum();
            for i in 0..n {
                analysis[k * n + i] = weights[i] * row[i] / norm;
            }
        }
        let eig = (0..n)
            .map(|k| {
                let s = (PI * k as f64 / (2.0 * m as f64)).sin();
                -4.0 * s * s / (h * h)
            })
            .collect();
        Self {
            modes,
            analysis,
            eig,
        }
    }
}

/// Validates `spec` and returns a shareable grid.
pub fn build_grid(spec: &GridSpec) -> Result<Arc<Grid>> {
    Grid::new(spec).map(Arc::new)
}

impl Grid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        let dim = spec.dimension();
        if dim != 1 && dim != 2 {
            return Err(Error::Dimension(dim));
        }
        if spec.extents.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} extents given for a {dim}-dimensional grid",
                spec.extents.len()
            )));
        }
        let mut extents = [1.0; 2];
        let mut points = [1usize; 2];
        let mut spacing = [1.0; 2];
        let mut inv_h2 = [0.0; 2];
        let mut weights = [vec![1.0], vec![1.0]];
        let mut bases = [AxisBasis::trivial(), AxisBasis::trivial()];
        for axis in 0..dim {
            let (len, n) = (spec.extents[axis], spec.points[axis]);
            if n < 3 {
                return Err(Error::TooFewPoints { axis, points: n });
            }
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "extent of axis {axis} must be positive, got {len}"
                )));
            }
            let h = len / (n - 1) as f64;
            extents[axis] = len;
            points[axis] = n;
            spacing[axis] = h;
            inv_h2[axis] = 1.0 / (h * h);
            let mut w = vec![h; n];
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
            bases[axis] = AxisBasis::new(n, h, &w);
            weights[axis] = w;
        }
        Ok(Self {
            dim,
            extents,
            points,
            spacing,
            inv_h2,
            weights,
            bases,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.points[0] * self.points[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> &[usize] {
        &self.points[..self.dim]
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    /// Product of the per-axis spacings.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// `|Ω|`, the product of the extents.
    pub fn domain_volume(&self) -> f64 {
        self.extents().iter().product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing().iter().cloned().fold(0.0, f64::max)
    }

    /// Coordinates of node `idx` (x fastest). The second entry is 0 in 1D.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let i = idx % self.points[0];
        let j = idx / self.points[0];
        let x = i as f64 * self.spacing[0];
        let y = if self.dim == 2 {
            j as f64 * self.spacing[1]
        } else {
            0.0
        };
        [x, y]
    }

    /// Quadrature weight of node `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        let i = idx % self.points[0];
        let j = idx / self.points[0];
        self.weights[0][i] * self.weights[1][j]
    }

    /// Discrete Neumann Laplacian of `input`, written to `out`.
    pub fn laplacian_into(&self, input: &[f64], out: &mut [f64]) {
        let [nx, ny] = self.points;
        debug_assert_eq!(input.len(), nx * ny);
        debug_assert_eq!(out.len(), nx * ny);
        let [ax, ay] = self.inv_h2;
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx {
                let idx = row + i;
                let c = input[idx];
                let left = if i == 0 {
                    input[idx + 1]
                } else {
                    input[idx - 1]
                };
                let right = if i + 1 == nx {
                    input[idx - 1]
                } else {
                    input[idx + 1]
                };
                let mut lap = ((left - c) + (right - c)) * ax;
                if self.dim == 2 {
                    let down = if j == 0 {
                        input[idx + nx]
                    } else {
                        input[idx - nx]
                    };
                    let up = if j + 1 == ny {
                        input[idx - nx]
                    } else {
                        input[idx + nx]
                    };
                    lap += ((down - c) + (up - c)) * ay;
                }
                out[idx] = lap;
            }
        }
    }

    /// Solves `(I - coef Δ) x = b` exactly by separable cosine transforms.
    ///
    /// `scratch` must have the grid length. `coef ≥ 0` keeps the operator
    /// positive definite.
    pub fn solve_helmholtz(&self, coef: f64, b: &[f64], x: &mut [f64], scratch: &mut [f64]) {
        let [nx, ny] = self.points;
        let [bx, by] = &self.bases;
        debug_assert_eq!(b.len(), nx * ny);
        // analysis along x: b -> scratch
        for j in 0..ny {
            let src = &b[j * nx..(j + 1) * nx];
            for k in 0..nx {
                let a = &bx.analysis[k * nx..(k + 1) * nx];
                scratch[j * nx + k] = a.iter().zip(src).map(|(p, q)| p * q).sum();
            }
        }
        // analysis along y: scratch -> x
        x.fill(0.0);
        for l in 0..ny {
            for j in 0..ny {
                let a = by.analysis[l * ny + j];
                let (dst, src) = (l * nx, j * nx);
                for k in 0..nx {
                    x[dst + k] += a * scratch[src + k];
                }
            }
        }
        for l in 0..ny {
            for k in 0..nx {
                x[l * nx + k] /= 1.0 - coef * (bx.eig[k] + by.eig[l]);
            }
        }
        // synthesis along y: x -> scratch
        scratch.fill(0.0);
        for l in 0..ny {
            for j in 0..ny {
                let p = by.modes[l * ny + j];
                let (dst, src) = (j * nx, l * nx);
                for k in 0..nx {
                    scratch[dst + k] += p * x[src + k];
                }
            }
        }
        // synthesis along x: scratch -> x
        x.fill(0.0);
        for j in 0..ny {
            for k in 0..nx {
                let c = scratch[j * nx + k];
                let row = &bx.modes[k * nx..(k + 1) * nx];
                for (xi, p) in x[j * nx..(j + 1) * nx].iter_mut().zip(row) {
                    *xi += c * p;
                }
            }
        }
    }

    /// Weighted sum `Σ w_k a_k b_k`.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weighted_sum(|k| a[k] * b[k])
    }

    /// Weighted sum `Σ w_k f(k)`, accumulated row by row.
    pub fn weighted_sum(&self, f: impl Fn(usize) -> f64) -> f64 {
        let [nx, ny] = self.points;
        let (wx, wy) = (&self.weights[0], &self.weights[1]);
        let mut total = 0.0;
        for j in 0..ny {
            let row = j * nx;
            let mut acc = 0.0;
            for i in 0..nx {
                acc += wx[i] * f(row + i);
            }
            total += wy[j] * acc;
        }
        total
    }

    /// `|f|²_{H¹}` from one-sided edge differences, consistent with the stencil.
    pub fn h1_seminorm_sq(&self, f: &[f64]) -> f64 {
        let [nx, ny] = self.points;
        let (wx, wy) = (&self.weights[0], &self.weights[1]);
        let [hx, hy] = self.spacing;
        let mut total = 0.0;
        for j in 0..ny {
            let row = j * nx;
            let mut acc = 0.0;
            for i in 0..nx - 1 {
                let d = (f[row + i + 1] - f[row + i]) / hx;
                acc += d * d;
            }
            total += wy[j] * hx * acc;
        }
        if self.dim == 2 {
            for j in 0..ny - 1 {
                let row = j * nx;
                let mut acc = 0.0;
                for i in 0..nx {
                    let d = (f[row + nx + i] - f[row + i]) / hy;
                    acc += wx[i] * d * d;
                }
                total += hy * acc;
            }
        }
        total
    }

    /// Largest eigenvalue magnitude of the discrete Laplacian.
    pub fn laplacian_spectral_radius(&self) -> f64 {
        4.0 * self.inv_h2[..self.dim].iter().sum::<f64>()
    }
}

/// A real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite field value {bad}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, values }
    }

    /// Evaluates `f(x, y)` at every node (`y = 0` in 1D).
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.coords(k);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    fn check_grid(&self, other: &ScalarField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn laplacian_neumann(&self) -> Self {
        let mut out = vec![0.0; self.values.len()];
        self.grid.laplacian_into(&self.values, &mut out);
        Self {
            grid: self.grid.clone(),
            values: out,
        }
    }

    pub fn norm_l2(&self) -> f64 {
        self.grid.dot(&self.values, &self.values).sqrt()
    }

    /// `∫ f⁴`, the fourth power of the L⁴ norm.
    pub fn l4_pow4(&self) -> f64 {
        self.grid.weighted_sum(|k| {
            let s = self.values[k] * self.values[k];
            s * s
        })
    }

    pub fn norm_l4(&self) -> f64 {
        self.l4_pow4().sqrt().sqrt()
    }

    pub fn seminorm_h1(&self) -> f64 {
        self.grid.h1_seminorm_sq(&self.values).sqrt()
    }

    pub fn inner_l2(&self, other: &ScalarField) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.grid.dot(&self.values, &other.values))
    }
}

/// Free-function form of [`ScalarField::laplacian_neumann`].
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    f.laplacian_neumann()
}

/// Neumann cosine mode `amplitude · Π cos(k_i π x_i / L_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub modes: Vec<u32>,
    pub amplitude: f64,
}

impl NoiseProfile {
    pub fn new(modes: Vec<u32>, amplitude: f64) -> Self {
        Self { modes, amplitude }
    }

    /// Spatially constant profile.
    pub fn uniform(dimension: usize, amplitude: f64) -> Self {
        Self {
            modes: vec![0; dimension],
            amplitude,
        }
    }

    /// Eigenvalue `-Σ (k_i π / L_i)²` of the continuous Laplacian.
    pub fn laplacian_eigenvalue(&self, grid: &Grid) -> f64 {
        -self
            .modes
            .iter()
            .zip(grid.extents())
            .map(|(&k, &len)| {
                let w = k as f64 * PI / len;
                w * w
            })
            .sum::<f64>()
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        if self.modes.len() != grid.dimension() {
            return Err(Error::InvalidParameter {
                name: "profile.modes",
                reason: format!(
                    "{} mode indices for a {}-dimensional grid",
                    self.modes.len(),
                    grid.dimension()
                ),
            });
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter {
                name: "profile.amplitude",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Evaluates a profile and its closed-form Laplacian on the grid.
pub fn eval_profile(p: &NoiseProfile, grid: &Arc<Grid>) -> Result<(ScalarField, ScalarField)> {
    p.check(grid)?;
    let ext = grid.extents().to_vec();
    let modes = p.modes.clone();
    let amp = p.amplitude;
    let h = ScalarField::from_fn(grid.clone(), |x, y| {
        let mut v = amp * (modes[0] as f64 * PI * x / ext[0]).cos();
        if modes.len() == 2 {
            v *= (modes[1] as f64 * PI * y / ext[1]).cos();
        }
        v
    });
    let lambda = p.laplacian_eigenvalue(grid);
    let lap = h.scale(lambda);
    Ok((h, lap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid1(n: usize) -> Arc<Grid> {
        build_grid(&GridSpec::one_d(1.0, n)).unwrap()
    }

    fn grid2(nx: usize, ny: usize) -> Arc<Grid> {
        build_grid(&GridSpec::two_d(1.0, 1.0, nx, ny)).unwrap()
    }

    #[test]
    fn builds_1d_and_2d() {
        let g = grid1(5);
        assert_eq!(g.len(), 5);
        assert_relative_eq!(g.spacing()[0], 0.25);
        let g = grid2(4, 4);
        assert_eq!(g.len(), 16);
        assert_relative_eq!(g.spacing()[0], 1.0 / 3.0);
        assert_relative_eq!(g.cell_volume(), 1.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_specs() {
        let spec = GridSpec {
            extents: vec![1.0; 3],
            points: vec![4; 3],
        };
        assert!(matches!(Grid::new(&spec), Err(Error::Dimension(3))));
        assert!(matches!(
            Grid::new(&GridSpec::two_d(1.0, 1.0, 4, 2)),
            Err(Error::TooFewPoints { axis: 1, points: 2 })
        ));
        assert!(Grid::new(&GridSpec::one_d(-1.0, 4)).is_err());
    }

    #[test]
    fn laplacian_of_constant_is_exactly_zero() {
        for g in [grid1(7), grid2(5, 9)] {
            let f = ScalarField::constant(g, 3.7);
            assert!(f.laplacian_neumann().values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = grid2(4, 4);
        let z = ScalarField::zeros(g.clone());
        assert_eq!(z.norm_l2(), 0.0);
        assert_eq!(z.norm_l4(), 0.0);
        assert_eq!(z.seminorm_h1(), 0.0);
        let one = ScalarField::constant(g, 1.0);
        assert_relative_eq!(one.norm_l2(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(one.norm_l4(), 1.0, epsilon = 1e-14);
        assert_eq!(one.seminorm_h1(), 0.0);
    }

    #[test]
    fn l2_norm_of_cosine_matches_integral() {
        // ∫₀¹ cos²(πx) dx = 1/2; trapezoid on a cosine mode is exact up to rounding
        let g = grid1(201);
        let f = ScalarField::from_fn(g, |x, _| (PI * x).cos());
        assert_relative_eq!(f.norm_l2().powi(2), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = ScalarField::zeros(grid1(5));
        let b = ScalarField::zeros(grid1(6));
        assert!(matches!(a.inner_l2(&b), Err(Error::GridMismatch)));
    }

    fn max_err_cos_1d(n: usize) -> f64 {
        let g = grid1(n);
        let f = ScalarField::from_fn(g, |x, _| (PI * x).cos());
        let lap = f.laplacian_neumann();
        lap.values()
            .iter()
            .zip(f.values())
            .map(|(l, v)| (l + PI * PI * v).abs())
            .fold(0.0, f64::max)
    }

    fn max_err_cos_2d(n: usize) -> f64 {
        let g = grid2(n, n);
        let f = ScalarField::from_fn(g, |x, y| (PI * x).cos() * (2.0 * PI * y).cos());
        let lap = f.laplacian_neumann();
        lap.values()
            .iter()
            .zip(f.values())
            .map(|(l, v)| (l + 5.0 * PI * PI * v).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn laplacian_converges_at_second_order() {
        for err in [max_err_cos_1d as fn(usize) -> f64, max_err_cos_2d] {
            let e: Vec<f64> = [17, 33, 65].iter().map(|&n| err(n)).collect();
            for w in e.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!((1.8..=2.2).contains(&order), "order {order}");
            }
        }
    }

    #[test]
    fn profile_examples() {
        let g = grid1(11);
        let (h, lap) = eval_profile(&NoiseProfile::new(vec![0], 1.0), &g).unwrap();
        assert!(h.values().iter().all(|&v| v == 1.0));
        assert!(lap.values().iter().all(|&v| v == 0.0));
        let (h, lap) = eval_profile(&NoiseProfile::new(vec![1], 2.0), &g).unwrap();
        for k in 0..g.len() {
            let x = g.coords(k)[0];
            assert_relative_eq!(h.values()[k], 2.0 * (PI * x).cos(), epsilon = 1e-14);
            assert_relative_eq!(
                lap.values()[k],
                -2.0 * PI * PI * (PI * x).cos(),
                epsilon = 1e-12
            );
        }
        assert!(eval_profile(&NoiseProfile::new(vec![1, 1], 1.0), &g).is_err());
    }

    #[test]
    fn discrete_laplacian_of_profile_approaches_analytic() {
        let p = NoiseProfile::new(vec![2, 1], 0.7);
        let errs: Vec<f64> = [17, 33, 65]
            .iter()
            .map(|&n| {
                let g = grid2(n, n);
                let (h, lap) = eval_profile(&p, &g).unwrap();
                let d = h.laplacian_neumann();
                d.values()
                    .iter()
                    .zip(lap.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order}");
        }
    }

    fn field_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0..10.0f64, n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn laplacian_is_self_adjoint_and_nonpositive(
            f in field_strategy(7 * 6),
            g in field_strategy(7 * 6),
        ) {
            let grid = build_grid(&GridSpec::two_d(1.3, 0.8, 7, 6)).unwrap();
            let f = ScalarField::new(grid.clone(), f).unwrap();
            let g = ScalarField::new(grid, g).unwrap();
            let lf = f.laplacian_neumann();
            let lg = g.laplacian_neumann();
            let lhs = lf.inner_l2(&g).unwrap();
            let rhs = f.inner_l2(&lg).unwrap();
            let scale = f.norm_l2() * g.norm_l2() * f.grid().laplacian_spectral_radius();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
            prop_assert!(lf.inner_l2(&f).unwrap() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn summation_by_parts(f in field_strategy(9)) {
            let grid = build_grid(&GridSpec::one_d(2.0, 9)).unwrap();
            let f = ScalarField::new(grid, f).unwrap();
            let lhs = -f.laplacian_neumann().inner_l2(&f).unwrap();
            let rhs = f.seminorm_h1().powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
        }
    }
}
