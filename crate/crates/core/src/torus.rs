//! Scalar fields on the unit flat torus `[0,1)²` sampled on a uniform
//! periodic grid, with FFT-based spectral operators.
//!
//! Nodes are `(i/n, j/n)` and values are stored row-major with `i` running
//! along `x1`. Integrals use the periodic rectangle rule, which is the
//! spectrally accurate choice for smooth periodic integrands.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::degree::SingularProfile;
use crate::exact;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("grid needs at least 16 points per axis, got {0}")]
    GridTooSmall(usize),
    #[error("Green's function truncation must be at least 8, got {0}")]
    TruncationTooSmall(usize),
    #[error("field mean {mean:e} exceeds the mean-zero tolerance {tolerance:e}")]
    NotMeanZero { mean: f64, tolerance: f64 },
    #[error("ball radius {0} must lie in (0, 1/4)")]
    RadiusOutOfRange(f64),
    #[error("reference weight {index} is not strictly positive at every node")]
    NonPositiveWeight { index: usize },
    #[error("singular points {first} and {second} snap to the same grid node")]
    CoincidentNodes { first: usize, second: usize },
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Relative tolerance for the mean-zero class.
pub const MEAN_ZERO_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct TorusGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid").field("n", &self.n).finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self, FieldError> {
        if n < 16 {
            return Err(FieldError::GridTooSmall(n));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 / self.n as f64, j as f64 / self.n as f64]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Grid indices of the node closest to `p`.
    pub fn nearest_node(&self, p: [f64; 2]) -> (usize, usize) {
        let snap = |x: f64| {
            let k = (x.rem_euclid(1.0) * self.n as f64).round() as usize;
            k % self.n
        };
        (snap(p[0]), snap(p[1]))
    }

    /// Signed frequency of FFT bin `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        if i <= self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process(data);
        transpose(data, n);
        plan.process(data);
        transpose(data, n);
    }

    /// Unnormalized forward DFT of a real field.
    pub fn fft(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    /// Inverse DFT including the `1/n²` normalization; returns the real part.
    pub fn ifft_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut data, true);
        let scale = 1.0 / self.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }

    /// `4π²|κ|²` for bin `(a, b)`.
    pub fn symbol(&self, a: usize, b: usize) -> f64 {
        let k1 = self.wavenumber(a);
        let k2 = self.wavenumber(b);
        4.0 * PI * PI * (k1 * k1 + k2 * k2)
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Shortest distance between two points on the unit torus.
pub fn periodic_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = |x: f64, y: f64| {
        let t = (x - y).rem_euclid(1.0);
        t.min(1.0 - t)
    };
    d(a[0], b[0]).hypot(d(a[1], b[1]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
    mean_zero: bool,
}

impl ScalarField {
    pub fn from_values(grid: &TorusGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match the grid");
        Self {
            grid: grid.clone(),
            values,
            mean_zero: false,
        }
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                values.push(f(grid.node(i, j)));
            }
        }
        Self::from_values(grid, values)
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self::from_values(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        let mut f = Self::constant(grid, 0.0);
        f.mean_zero = true;
        f
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_values(&self.grid, values)
    }

    /// `self + c·other`, keeping the mean-zero flag when both carry it.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        let mut out = self.zip_with(other, |a, b| a + c * b);
        out.mean_zero = self.mean_zero && other.mean_zero;
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.map(|v| c * v);
        out.mean_zero = self.mean_zero;
        out
    }

    /// Subtracts the quadrature mean and marks the field mean-zero.
    pub fn project_mean_zero(&self) -> Self {
        let mean = quadrature(self);
        let mut out = self.map(|v| v - mean);
        out.mean_zero = true;
        out
    }

    fn mean_zero_tolerance(&self) -> f64 {
        MEAN_ZERO_TOL * self.max_norm().max(1.0)
    }

    /// Writes `x1,x2,value` rows in row-major order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x1,x2,value")?;
        let n = self.grid.n();
        for i in 0..n {
            for j in 0..n {
                let [x1, x2] = self.grid.node(i, j);
                writeln!(out, "{x1},{x2},{:.16e}", self.at(i, j))?;
            }
        }
        Ok(())
    }
}

/// `∫_M f` by the periodic rectangle rule.
pub fn quadrature(f: &ScalarField) -> f64 {
    f.values.iter().sum::<f64>() / f.grid.len() as f64
}

/// Rectangle-rule integral over the nodes at periodic distance `< radius`
/// from `center`.
pub fn ball_integral(f: &ScalarField, center: [f64; 2], radius: f64) -> Result<f64, FieldError> {
    if !(radius > 0.0 && radius < 0.25) {
        return Err(FieldError::RadiusOutOfRange(radius));
    }
    let grid = &f.grid;
    let n = grid.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if periodic_distance(grid.node(i, j), center) < radius {
                sum += f.at(i, j);
            }
        }
    }
    Ok(sum / grid.len() as f64)
}

/// Spectral `−Δf`.
pub fn neg_laplacian(f: &ScalarField) -> ScalarField {
    let grid = &f.grid;
    let n = grid.n();
    let mut hat = grid.fft(&f.values);
    for a in 0..n {
        for b in 0..n {
            hat[a * n + b] *= grid.symbol(a, b);
        }
    }
    let mut out = ScalarField::from_values(grid, grid.ifft_real(hat));
    out.mean_zero = true;
    out
}

/// The mean-zero `w` with `−Δw = f`, for mean-zero `f`.
pub fn inv_laplacian(f: &ScalarField) -> Result<ScalarField, FieldError> {
    let mean = quadrature(f);
    let tolerance = f.mean_zero_tolerance();
    if mean.abs() > tolerance {
        return Err(FieldError::NotMeanZero { mean, tolerance });
    }
    Ok(inv_laplacian_unchecked(f))
}

/// Like [`inv_laplacian`] but silently drops the constant mode.
pub(crate) fn inv_laplacian_unchecked(f: &ScalarField) -> ScalarField {
    let grid = &f.grid;
    let n = grid.n();
    let mut hat = grid.fft(&f.values);
    hat[0] = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            if a != 0 || b != 0 {
                hat[a * n + b] /= grid.symbol(a, b);
            }
        }
    }
    let mut out = ScalarField::from_values(grid, grid.ifft_real(hat));
    out.mean_zero = true;
    out
}

/// `∫_M ∇u·∇v` evaluated mode by mode.
pub fn dirichlet_form(u: &ScalarField, v: &ScalarField) -> f64 {
    assert_eq!(u.grid, v.grid, "fields live on different grids");
    let grid = &u.grid;
    let n = grid.n();
    let uh = grid.fft(&u.values);
    let vh = grid.fft(&v.values);
    let mut sum = 0.0;
    for a in 0..n {
        for b in 0..n {
            let idx = a * n + b;
            sum += grid.symbol(a, b) * (uh[idx] * vh[idx].conj()).re;
        }
    }
    sum / (grid.len() as f64).powi(2)
}

/// Green's function of `−Δ` with zero mean, sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenField {
    pub source: [f64; 2],
    pub truncation: usize,
    pub values: ScalarField,
}

/// Default Fourier truncation for a grid of size `n`.
pub fn default_truncation(n: usize) -> usize {
    2 * n
}

/// `G(x, q) = Σ_{0<|k|≤K} e^{2πik·(x−q)} / (4π²|k|²)` on the grid nodes.
///
/// Modes are folded onto the grid's frequency bins before one inverse FFT.
/// Modes that alias onto the constant bin are dropped so the grid mean is
/// zero.
pub fn green(grid: &TorusGrid, source: [f64; 2], truncation: usize) -> Result<GreenField, FieldError> {
    if truncation < 8 {
        return Err(FieldError::TruncationTooSmall(truncation));
    }
    let n = grid.n();
    let k_max = truncation as i64;
    let k_sq_max = k_max * k_max;
    let mut bins = vec![Complex64::new(0.0, 0.0); grid.len()];
    for k1 in -k_max..=k_max {
        let a = k1.rem_euclid(n as i64) as usize;
        for k2 in -k_max..=k_max {
            let k_sq = k1 * k1 + k2 * k2;
            if k_sq == 0 || k_sq > k_sq_max {
                continue;
            }
            let b = k2.rem_euclid(n as i64) as usize;
            let phase = -2.0 * PI * (k1 as f64 * source[0] + k2 as f64 * source[1]);
            let weight = 1.0 / (4.0 * PI * PI * k_sq as f64);
            bins[a * n + b] += Complex64::from_polar(weight, phase);
        }
    }
    bins[0] = Complex64::new(0.0, 0.0);
    // G(x) = Σ_bins c e^{+2πiκ·x} is an unnormalized inverse transform
    let scale = grid.len() as f64;
    let values: Vec<f64> = grid.ifft_real(bins).into_iter().map(|v| v * scale).collect();
    let mut values = ScalarField::from_values(grid, values);
    values.mean_zero = true;
    Ok(GreenField {
        source,
        truncation,
        values,
    })
}

/// Pointwise evaluation of the truncated Fourier sum.
pub fn green_at(x: [f64; 2], source: [f64; 2], truncation: usize) -> f64 {
    let d = [x[0] - source[0], x[1] - source[1]];
    let k_max = truncation as i64;
    let k_sq_max = k_max * k_max;
    let mut sum = 0.0;
    // half lattice (k1 > 0, or k1 = 0 and k2 > 0), doubled
    for k1 in 0..=k_max {
        let k2_start = if k1 == 0 { 1 } else { -k_max };
        for k2 in k2_start..=k_max {
            let k_sq = k1 * k1 + k2 * k2;
            if k_sq > k_sq_max {
                continue;
            }
            let arg = 2.0 * PI * (k1 as f64 * d[0] + k2 as f64 * d[1]);
            sum += arg.cos() / k_sq as f64;
        }
    }
    2.0 * sum / (4.0 * PI * PI)
}

/// `∫_{[−½,½]²} |y|^{2γ} dy`, the cell average of the local power law.
fn unit_cell_power_average(gamma: f64) -> f64 {
    // polar coordinates over one eighth of the square
    let p = 2.0 * gamma + 2.0;
    let f = |theta: f64| (0.5 / theta.cos()).powf(p) / p;
    let steps = 256;
    let h = (PI / 4.0) / steps as f64;
    let mut s = f(0.0) + f(PI / 4.0);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    8.0 * s * h / 3.0
}

/// `exp(−4π Σ γ_l G(·, p_l))` on the grid, with the singular nodes set to
/// their local limits.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularFactor {
    /// `4π Σ_l γ_l G(·, p_l)`.
    pub green_sum: ScalarField,
    pub factor: ScalarField,
    /// Grid node each singular point was snapped to.
    pub nodes: Vec<(usize, usize)>,
}

pub fn singular_factor(
    grid: &TorusGrid,
    profile: &SingularProfile,
    truncation: usize,
) -> Result<SingularFactor, FieldError> {
    let n = grid.n();
    let nodes: Vec<(usize, usize)> = profile
        .points()
        .iter()
        .map(|p| grid.nearest_node(p.position))
        .collect();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(FieldError::CoincidentNodes {
                    first: i + 1,
                    second: j + 1,
                });
            }
        }
    }
    let mut terms = Vec::with_capacity(nodes.len());
    for (p, &(i, j)) in profile.points().iter().zip(&nodes) {
        let gamma = exact::to_f64(&p.gamma);
        let g = green(grid, grid.node(i, j), truncation)?;
        terms.push((gamma, g.values));
    }
    let mut green_sum = ScalarField::zeros(grid);
    for (gamma, g) in &terms {
        green_sum = green_sum.axpy(4.0 * PI * gamma, g);
    }
    let mut factor = green_sum.map(|s| (-s).exp());

    let h = grid.spacing();
    for (l, &(i, j)) in nodes.iter().enumerate() {
        let (gamma, g) = &terms[l];
        let idx = grid.index(i, j);
        let others = green_sum.values[idx] - 4.0 * PI * gamma * g.values[idx];
        factor.values[idx] = if *gamma > 0.0 {
            0.0
        } else if *gamma == 0.0 {
            (-others).exp()
        } else {
            // G_l = −log|x|/2π + R_l near the source; R_l from the four
            // nearest neighbours, then the exact cell average of |x|^{2γ}
            let neighbours = [
                ((i + 1) % n, j),
                ((i + n - 1) % n, j),
                (i, (j + 1) % n),
                (i, (j + n - 1) % n),
            ];
            let regular = neighbours
                .iter()
                .map(|&(a, b)| g.at(a, b) + h.ln() / (2.0 * PI))
                .sum::<f64>()
                / 4.0;
            let local = h.powf(2.0 * gamma) * unit_cell_power_average(*gamma);
            (-others - 4.0 * PI * gamma * regular).exp() * local
        };
    }
    Ok(SingularFactor {
        green_sum,
        factor,
        nodes,
    })
}

/// Singular weights `h_i = h_i* · exp(−4π Σ γ_l G(·, p_l))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub h: [ScalarField; 2],
    pub singular: SingularFactor,
}

pub fn build_weights(
    hstar: [&ScalarField; 2],
    profile: &SingularProfile,
    grid: &TorusGrid,
    truncation: usize,
) -> Result<Weights, FieldError> {
    for (index, h) in hstar.iter().enumerate() {
        if h.grid() != grid {
            return Err(FieldError::GridMismatch);
        }
        if !h.values().iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(FieldError::NonPositiveWeight { index: index + 1 });
        }
    }
    let singular = singular_factor(grid, profile, truncation)?;
    let h = [
        hstar[0].zip_with(&singular.factor, |a, b| a * b),
        hstar[1].zip_with(&singular.factor, |a, b| a * b),
    ];
    Ok(Weights { h, singular })
}
