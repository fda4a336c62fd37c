//! Periodic grids, the FFT-diagonalised discrete Laplacian and the heat
//! propagator built on it.
//!
//! Fields are stored row-major: in two dimensions the node `(x_i, y_j) =
//! (i h, j h)` lives at flat index `i * N + j`. Discrete Fourier coefficients
//! use the analysis normalisation
//!
//! ```text
//! û_k = N^{-d} Σ_j u_j e^{-2πi j·k / N},     u_j = Σ_k û_k e^{2πi j·k / N}
//! ```
//!
//! with wavenumbers `-N/2 < k ≤ N/2` per axis. The Laplacian symbol is that
//! of the periodic second-order difference stencil,
//! `w_k = h^{-2} Σ_axes (2 cos(2π k / N) - 2)`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest imaginary residue (relative to Σ|c_k| of the spectrum) tolerated after an
/// inverse transform with a symmetric multiplier.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Uniform `N^d` mesh on the torus `[0, L]^d`, `d ∈ {1, 2}`.
pub struct PeriodicGrid {
    n: usize,
    length: f64,
    dim: usize,
    spacing: f64,
    symbol: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("dim", &self.dim)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.dim == other.dim && self.length == other.length
    }
}

/// Builds a grid with `n` points per axis on `[0, length]^dim`.
pub fn make_grid(n: usize, length: f64, dim: usize) -> Result<Arc<PeriodicGrid>> {
    PeriodicGrid::new(n, length, dim)
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64, dim: usize) -> Result<Arc<Self>> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 4, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        let spacing = length / n as f64;

        // 2 cos(2πk/N) - 2 = -4 sin²(πk/N); the sine form has no cancellation
        // at small k and is exactly even in k.
        let axis: Vec<f64> = (0..n)
            .map(|i| {
                let s = (std::f64::consts::PI * wavenumber(i, n) as f64 / n as f64).sin();
                -4.0 * s * s / (spacing * spacing)
            })
            .collect();
        let symbol = match dim {
            1 => axis,
            _ => {
                let mut table = Vec::with_capacity(n * n);
                for wi in &axis {
                    for wj in &axis {
                        table.push(wi + wj);
                    }
                }
                table
            }
        };

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        Ok(Arc::new(PeriodicGrid {
            n,
            length,
            dim,
            spacing,
            symbol,
            forward,
            inverse,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mesh width `h = L / N`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of nodes, `N^d`.
    pub fn len(&self) -> usize {
        self.symbol.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell measure `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Measure of the torus, `L^d`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Laplacian symbol `w_k`, indexed like the transform output.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Signed wavevector for a flat mode index.
    pub fn wavevector(&self, index: usize) -> [i64; 2] {
        match self.dim {
            1 => [wavenumber(index, self.n), 0],
            _ => [
                wavenumber(index / self.n, self.n),
                wavenumber(index % self.n, self.n),
            ],
        }
    }

    /// Flat index of the mode `-k` (with `-N/2` aliased to `N/2`).
    pub fn conjugate_index(&self, index: usize) -> usize {
        let n = self.n;
        let neg = |i: usize| (n - i) % n;
        match self.dim {
            1 => neg(index),
            _ => neg(index / n) * n + neg(index % n),
        }
    }

    /// Coordinates of a node.
    pub fn node(&self, index: usize) -> [f64; 2] {
        match self.dim {
            1 => [index as f64 * self.spacing, 0.0],
            _ => [
                (index / self.n) as f64 * self.spacing,
                (index % self.n) as f64 * self.spacing,
            ],
        }
    }

    /// Unnormalised forward transform `Σ_j u_j e^{-2πi j·k/N}`.
    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse transform including the `N^{-d}` factor; rejects spectra whose
    /// inverse is not real to within [`IMAG_RESIDUE_TOL`].
    fn inverse_real(&self, mut data: Vec<Complex64>) -> Result<Vec<f64>> {
        // Σ|c_k| bounds every output sample, so it sets the roundoff scale
        // even when the result is nearly zero.
        let magnitude: f64 = data.iter().map(|c| c.norm()).sum();
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        let mut max_im = 0.0_f64;
        let out: Vec<f64> = data
            .iter()
            .map(|c| {
                max_im = max_im.max(c.im.abs());
                c.re * scale
            })
            .collect();
        if max_im > IMAG_RESIDUE_TOL * magnitude {
            return Err(Error::ImaginaryResidue {
                residue: max_im / magnitude,
            });
        }
        Ok(out)
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // rows (contiguous), then columns through a transpose
        fft.process_with_scratch(data, &mut scratch);
        if self.dim == 2 {
            let mut t = transpose(data, n);
            fft.process_with_scratch(&mut t, &mut scratch);
            data.copy_from_slice(&transpose(&t, n));
        }
    }
}

fn wavenumber(index: usize, n: usize) -> i64 {
    if index <= n / 2 {
        index as i64
    } else {
        index as i64 - n as i64
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
    out
}

/// Real samples on a [`PeriodicGrid`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<PeriodicGrid>,
    values: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: Arc<PeriodicGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Arc<PeriodicGrid>, value: f64) -> Self {
        let values = vec![value; grid.len()];
        Field { grid, values }
    }

    /// Samples `f(x, y)` at every node (`y = 0` in one dimension).
    pub fn from_fn(grid: Arc<PeriodicGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| {
                let [x, y] = grid.node(i);
                f(x, y)
            })
            .collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Compensated (Neumaier) average.
    pub fn mean(&self) -> f64 {
        let (mut sum, mut carry) = (0.0_f64, 0.0_f64);
        for &v in &self.values {
            let t = sum + v;
            carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
            sum = t;
        }
        (sum + carry) / self.values.len() as f64
    }

    /// Pointwise map; the result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn try_map(&self, f: impl Fn(f64) -> Result<f64>) -> Result<Field> {
        let values = self.values.iter().map(|&v| f(v)).collect::<Result<Vec<_>>>()?;
        Field::new(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Field::new(self.grid.clone(), values)
    }

    /// Normalised DFT coefficients `û_k`.
    pub fn dft(&self) -> Vec<Complex64> {
        let scale = 1.0 / self.grid.len() as f64;
        let mut coeffs = self.grid.forward(&self.values);
        for c in &mut coeffs {
            *c *= scale;
        }
        coeffs
    }

    /// Discrete L² norm `sqrt(h^d Σ u_j²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Real per-mode multiplier, symmetric under `k -> -k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTable(Vec<f64>);

impl ModeTable {
    /// Validates length and `k -> -k` symmetry.
    pub fn new(grid: &PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ModeTableLength {
                got: values.len(),
                expected: grid.len(),
            });
        }
        for (index, &m) in values.iter().enumerate() {
            let partner = values[grid.conjugate_index(index)];
            if (m - partner).abs() > 1e-14 * m.abs().max(partner.abs()) {
                return Err(Error::AsymmetricMultiplier { index });
            }
        }
        Ok(ModeTable(values))
    }

    /// `m_k = f(w_k)`; symmetric because `w_k` is.
    pub fn from_symbol(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        ModeTable(grid.symbol().iter().map(|&w| f(w)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `e^{coeff · Δ_h}` with its multiplier table precomputed.
#[derive(Clone, Debug)]
pub struct HeatPropagator {
    grid: Arc<PeriodicGrid>,
    coeff: f64,
    multiplier: Vec<f64>,
}

impl HeatPropagator {
    pub fn new(grid: Arc<PeriodicGrid>, coeff: f64) -> Result<Self> {
        if !(coeff >= 0.0 && coeff.is_finite()) {
            return Err(Error::NegativeCoefficient(coeff));
        }
        let multiplier = grid.symbol().iter().map(|&w| (coeff * w).exp()).collect();
        Ok(HeatPropagator {
            grid,
            coeff,
            multiplier,
        })
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        if *u.grid != *self.grid {
            return Err(Error::GridMismatch);
        }
        if self.coeff == 0.0 {
            return Ok(u.clone());
        }
        let mut spectrum = self.grid.forward(&u.values);
        for (c, m) in spectrum.iter_mut().zip(&self.multiplier) {
            *c *= m;
        }
        Field::new(u.grid.clone(), self.grid.inverse_real(spectrum)?)
    }
}

/// Multiplies the DFT of `u` by `e^{coeff · w_k}`; `coeff` plays the role of
/// `ε² t`.
pub fn apply_heat_propagator(u: &Field, coeff: f64) -> Result<Field> {
    HeatPropagator::new(u.grid.clone(), coeff)?.apply(u)
}

/// Discrete inner product `h^d Σ_j u_j v_j`.
pub fn inner(u: &Field, v: &Field) -> Result<f64> {
    u.same_grid(v)?;
    let sum: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok(u.grid.cell_volume() * sum)
}

/// `h^d N^d Σ_k m_k |û_k|²`, evaluated in frequency space.
pub fn quadratic_form(u: &Field, multiplier: &ModeTable) -> Result<f64> {
    let grid = &u.grid;
    if multiplier.0.len() != grid.len() {
        return Err(Error::ModeTableLength {
            got: multiplier.0.len(),
            expected: grid.len(),
        });
    }
    // with unnormalised coefficients F = N^d û this is h^d N^{-d} Σ m |F|²
    let spectrum = grid.forward(&u.values);
    let sum: f64 = spectrum
        .iter()
        .zip(&multiplier.0)
        .map(|(c, m)| m * c.norm_sqr())
        .sum();
    Ok(grid.cell_volume() * sum / grid.len() as f64)
}
