//! Depth-separated wave equation solver for one horizontal wavenumber.
//!
//! Each layer's equation is discretized in Chebyshev spectral space as
//!
//! ```text
//! A_l = 4/(dh_l)^2 C_rho D C_{1/rho} D + C_{k^2} - kr^2 I
//! ```
//!
//! and the per-layer blocks are stacked into one global system. The last
//! two rows of every block are given up to boundary, interface-continuity
//! and source-jump conditions (the Tau closure); solving the system yields
//! the spectral coefficients of the depth-dependent Green function in every
//! layer at once.
//!
//! Solves for distinct wavenumbers are independent; [`DepthContext`] holds
//! the wavenumber-independent parts (operator templates, condition-row
//! skeletons) and is shared read-only across sweep workers.

use crate::environment::{
    complex_wavenumber, layer_profile_spectra, BottomCondition, EnvError, Environment, LayerSpectra,
};
use crate::spectral::{derivative_matrix, SpectralCoeffs, SpectralError, SpectralMatrix};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Right-hand value of the source jump condition: the derivative of the
/// Green function steps by -1/(2 pi) across the source depth.
pub const SOURCE_JUMP: f64 = -1.0 / (2.0 * PI);

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("matrix is singular at elimination step {step} (pivot {pivot:.3e}) for kr = {kr}")]
    Singular {
        step: usize,
        pivot: f64,
        kr: Complex64,
    },
    #[error("system dimensions do not match: matrix {rows}x{cols}, rhs {rhs}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        rhs: usize,
    },
    #[error("spectral order mismatch between operator ({0}) and spectra ({1})")]
    OrderMismatch(usize, usize),
    #[error("layer thickness must be positive (got {0})")]
    BadThickness(f64),
    #[error("receiver depth {0} outside the waveguide [0, {1}]")]
    ReceiverOutside(f64, f64),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Spectral-space operator of one layer at a fixed horizontal wavenumber.
#[derive(Debug, Clone)]
pub struct LayerOperator {
    pub matrix: SpectralMatrix,
    pub layer_index: usize,
}

/// One linear constraint over the stacked coefficient vector.
#[derive(Debug, Clone)]
pub struct ConditionRow {
    pub row: Vec<Complex64>,
    pub value: Complex64,
    pub kind: ConditionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    Surface,
    Bottom,
    /// Pressure continuity at interface `j` (between layers j and j+1).
    PressureContinuity(usize),
    /// Normal-velocity (derivative) continuity at interface `j`.
    VelocityContinuity(usize),
    /// Derivative jump at the source interface `j`.
    SourceJump(usize),
}

/// The assembled block system for one wavenumber.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub matrix: Array2<Complex64>,
    pub rhs: Vec<Complex64>,
    pub block_offsets: Vec<usize>,
}

/// Green-function spectral coefficients for every layer, with the layer
/// geometry needed to read the solution back in physical depth.
#[derive(Debug, Clone)]
pub struct DepthSolution {
    coeffs: Vec<SpectralCoeffs>,
    bounds: Vec<(f64, f64)>,
}

impl DepthSolution {
    pub fn layer_coeffs(&self) -> &[SpectralCoeffs] {
        &self.coeffs
    }

    fn locate(&self, z: f64) -> Option<usize> {
        self.bounds.iter().position(|&(_, bot)| z <= bot + 1e-12)
    }

    /// Green function at depth `z`; a receiver exactly on an interface
    /// reads the layer above.
    pub fn evaluate(&self, z: f64) -> Result<Complex64, SolveError> {
        let total = self.bounds.last().map(|b| b.1).unwrap_or(0.0);
        let idx = self
            .locate(z)
            .filter(|_| z >= -1e-12)
            .ok_or(SolveError::ReceiverOutside(z, total))?;
        let (top, bot) = self.bounds[idx];
        let t = ((top + bot - 2.0 * z) / (bot - top)).clamp(-1.0, 1.0);
        Ok(self.coeffs[idx].evaluate(t)?)
    }

    /// d(Green)/dz at an endpoint of layer `idx` (`top = true` for the upper
    /// endpoint), including the coordinate-map factor.
    pub fn endpoint_derivative(&self, idx: usize, top: bool) -> Result<Complex64, SolveError> {
        let (z_top, z_bot) = self.bounds[idx];
        let d = derivative_matrix(self.coeffs[idx].order())?;
        let dc = d.apply(&self.coeffs[idx])?;
        let t = if top { 1.0 } else { -1.0 };
        Ok(dc.evaluate(t)? * (2.0 / (z_top - z_bot)))
    }

    /// Green function value at an endpoint of layer `idx`.
    pub fn endpoint_value(&self, idx: usize, top: bool) -> Result<Complex64, SolveError> {
        let t = if top { 1.0 } else { -1.0 };
        Ok(self.coeffs[idx].evaluate(t)?)
    }

    /// Largest |Green| over all layers' spectral nodes, the natural scale
    /// for residual checks.
    pub fn magnitude_scale(&self) -> f64 {
        let mut best = 0.0f64;
        for (coeffs, &(_, _)) in self.coeffs.iter().zip(&self.bounds) {
            if let Ok(nodes) = crate::spectral::cgl_nodes(coeffs.order()) {
                for &t in &nodes {
                    if let Ok(v) = coeffs.evaluate(t) {
                        best = best.max(v.norm());
                    }
                }
            }
        }
        best
    }
}

/// Spectral-space operator of the depth equation on one layer, evaluated at
/// horizontal wavenumber `kr` (complex, contour-offset included).
pub fn layer_matrix(
    spectra: &LayerSpectra,
    kr: Complex64,
    thickness: f64,
) -> Result<LayerOperator, SolveError> {
    if thickness <= 0.0 || !thickness.is_finite() {
        return Err(SolveError::BadThickness(thickness));
    }
    let order = spectra.k2_hat.order();
    if spectra.rho_hat.order() != order || spectra.inv_rho_hat.order() != order {
        return Err(SolveError::OrderMismatch(spectra.rho_hat.order(), order));
    }
    let d = derivative_matrix(order)?;
    let c_rho = crate::spectral::product_matrix(&spectra.rho_hat);
    let c_inv_rho = crate::spectral::product_matrix(&spectra.inv_rho_hat);
    let c_k2 = crate::spectral::product_matrix(&spectra.k2_hat);

    // 4/dh^2 * C_rho D C_{1/rho} D + C_{k^2} - kr^2 I
    let stiff = c_rho.matmul(&d)?.matmul(&c_inv_rho)?.matmul(&d)?;
    let scale = Complex64::new(4.0 / (thickness * thickness), 0.0);
    let kr2 = kr * kr;
    let n = order + 1;
    let mut entries = Array2::from_elem((n, n), Complex64::ZERO);
    for i in 0..n {
        for j in 0..n {
            entries[[i, j]] = scale * stiff.entries()[[i, j]] + c_k2.entries()[[i, j]];
        }
        entries[[i, i]] -= kr2;
    }
    Ok(LayerOperator {
        matrix: SpectralMatrix::from_entries(entries)?,
        layer_index: 0,
    })
}

/// Endpoint evaluation rows: `T_i(+1) = 1` (layer top) and
/// `T_i(-1) = (-1)^i` (layer bottom).
fn endpoint_row(order: usize, top: bool) -> Vec<Complex64> {
    (0..=order)
        .map(|i| {
            if top || i % 2 == 0 {
                Complex64::ONE
            } else {
                -Complex64::ONE
            }
        })
        .collect()
}

/// Row vector computing the spectral-space endpoint derivative: the
/// endpoint row contracted with the differentiation matrix. The dt/dz
/// chain factor is applied by the callers.
fn endpoint_derivative_row(order: usize, top: bool) -> Result<Vec<Complex64>, SolveError> {
    let d = derivative_matrix(order)?;
    let e = endpoint_row(order, top);
    let n = order + 1;
    let mut row = vec![Complex64::ZERO; n];
    for (i, ei) in e.iter().enumerate() {
        for (j, out) in row.iter_mut().enumerate() {
            *out += ei * d.entries()[[i, j]];
        }
    }
    Ok(row)
}

/// Everything about one environment that does not depend on the horizontal
/// wavenumber: per-layer operator templates (the `kr = 0` operator),
/// condition-row skeletons and interface data. Build once, share across
/// sweep workers.
pub struct DepthContext {
    bounds: Vec<(f64, f64)>,
    orders: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
    /// Per-layer operator at kr = 0; the actual operator is this minus
    /// kr^2 on the diagonal.
    templates: Vec<Array2<Complex64>>,
    top_value_rows: Vec<Vec<Complex64>>,
    bot_value_rows: Vec<Vec<Complex64>>,
    top_deriv_rows: Vec<Vec<Complex64>>,
    bot_deriv_rows: Vec<Vec<Complex64>>,
    /// dt/dz per layer.
    chain: Vec<f64>,
    /// Density just above / below each interface.
    iface_rho: Vec<(f64, f64)>,
    source_interface: usize,
    bottom: BottomCondition,
    bottom_rho: f64,
    k_halfspace: Option<Complex64>,
}

impl DepthContext {
    /// Requires the source interface to be tagged
    /// (see [`crate::environment::insert_source_interface`]).
    pub fn new(env: &Environment) -> Result<Self, SolveError> {
        let source_interface = env.require_source_interface()?;
        let layers = env.layers();
        let f = env.source().frequency;

        let mut templates = Vec::with_capacity(layers.len());
        let mut bounds = Vec::with_capacity(layers.len());
        let mut orders = Vec::with_capacity(layers.len());
        let mut offsets = Vec::with_capacity(layers.len());
        let mut chain = Vec::with_capacity(layers.len());
        let mut top_value_rows = Vec::new();
        let mut bot_value_rows = Vec::new();
        let mut top_deriv_rows = Vec::new();
        let mut bot_deriv_rows = Vec::new();
        let mut dim = 0usize;
        for (idx, layer) in layers.iter().enumerate() {
            let spectra = layer_profile_spectra(layer, f)?;
            let mut op = layer_matrix(&spectra, Complex64::ZERO, layer.thickness())?;
            op.layer_index = idx;
            templates.push(op.matrix.entries().clone());
            bounds.push((layer.z_top, layer.z_bot));
            orders.push(layer.order);
            offsets.push(dim);
            dim += layer.order + 1;
            chain.push(layer.dt_dz());
            top_value_rows.push(endpoint_row(layer.order, true));
            bot_value_rows.push(endpoint_row(layer.order, false));
            top_deriv_rows.push(endpoint_derivative_row(layer.order, true)?);
            bot_deriv_rows.push(endpoint_derivative_row(layer.order, false)?);
        }

        let mut iface_rho = Vec::with_capacity(layers.len().saturating_sub(1));
        for w in layers.windows(2) {
            let z = w[0].z_bot;
            iface_rho.push((w[0].rho.eval(z)?, w[1].rho.eval(z)?));
        }

        let last = layers.last().expect("validated non-empty");
        let bottom_rho = last.rho.eval(last.z_bot)?;
        let k_halfspace = match env.bottom() {
            BottomCondition::Halfspace { c, rho: _, alpha } => {
                Some(complex_wavenumber(*c, *alpha, f)?)
            }
            _ => None,
        };

        Ok(Self {
            bounds,
            orders,
            offsets,
            dim,
            templates,
            top_value_rows,
            bot_value_rows,
            top_deriv_rows,
            bot_deriv_rows,
            chain,
            iface_rho,
            source_interface,
            bottom: env.bottom().clone(),
            bottom_rho,
            k_halfspace,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn block_offsets(&self) -> &[usize] {
        &self.offsets
    }

    fn blocks(&self) -> usize {
        self.orders.len()
    }

    /// Scatter a per-layer row into the global coefficient space.
    fn globalize(&self, block: usize, local: &[Complex64], scale: Complex64) -> Vec<Complex64> {
        let mut row = vec![Complex64::ZERO; self.dim];
        let off = self.offsets[block];
        for (j, v) in local.iter().enumerate() {
            row[off + j] = scale * v;
        }
        row
    }

    fn add_block(
        &self,
        row: &mut [Complex64],
        block: usize,
        local: &[Complex64],
        scale: Complex64,
    ) {
        let off = self.offsets[block];
        for (j, v) in local.iter().enumerate() {
            row[off + j] += scale * v;
        }
    }

    /// The 2(number of layers) boundary / interface / jump condition rows.
    pub fn condition_rows(&self, kr: Complex64) -> Vec<ConditionRow> {
        let blocks = self.blocks();
        let mut rows = Vec::with_capacity(2 * blocks);

        // Pressure-release sea surface: Green function vanishes at the top
        // of the first layer.
        rows.push(ConditionRow {
            row: self.globalize(0, &self.top_value_rows[0], Complex64::ONE),
            value: Complex64::ZERO,
            kind: ConditionKind::Surface,
        });

        for j in 0..blocks - 1 {
            let (rho_above, rho_below) = self.iface_rho[j];
            // rho^- Psi^- - rho^+ Psi^+ = 0 with the layer-above value read
            // at its bottom endpoint and the layer-below at its top.
            let mut row =
                self.globalize(j, &self.bot_value_rows[j], Complex64::new(rho_above, 0.0));
            self.add_block(
                &mut row,
                j + 1,
                &self.top_value_rows[j + 1],
                Complex64::new(-rho_below, 0.0),
            );
            rows.push(ConditionRow {
                row,
                value: Complex64::ZERO,
                kind: ConditionKind::PressureContinuity(j),
            });

            // d(Psi)/dz from below minus from above: zero at an ordinary
            // interface, the source jump at the tagged one.
            let mut row = self.globalize(
                j + 1,
                &self.top_deriv_rows[j + 1],
                Complex64::new(self.chain[j + 1], 0.0),
            );
            self.add_block(
                &mut row,
                j,
                &self.bot_deriv_rows[j],
                Complex64::new(-self.chain[j], 0.0),
            );
            if j == self.source_interface {
                rows.push(ConditionRow {
                    row,
                    value: Complex64::new(SOURCE_JUMP, 0.0),
                    kind: ConditionKind::SourceJump(j),
                });
            } else {
                rows.push(ConditionRow {
                    row,
                    value: Complex64::ZERO,
                    kind: ConditionKind::VelocityContinuity(j),
                });
            }
        }

        let last = blocks - 1;
        let bottom_row = match &self.bottom {
            BottomCondition::PressureRelease => ConditionRow {
                row: self.globalize(last, &self.bot_value_rows[last], Complex64::ONE),
                value: Complex64::ZERO,
                kind: ConditionKind::Bottom,
            },
            BottomCondition::Rigid => ConditionRow {
                row: self.globalize(
                    last,
                    &self.bot_deriv_rows[last],
                    Complex64::new(self.chain[last], 0.0),
                ),
                value: Complex64::ZERO,
                kind: ConditionKind::Bottom,
            },
            BottomCondition::Halfspace { rho: rho_inf, .. } => {
                let k_inf = self.k_halfspace.expect("halfspace wavenumber precomputed");
                let beta = halfspace_root(kr, k_inf);
                let mut row = self.globalize(
                    last,
                    &self.bot_deriv_rows[last],
                    Complex64::new(rho_inf * self.chain[last], 0.0),
                );
                self.add_block(
                    &mut row,
                    last,
                    &self.bot_value_rows[last],
                    beta * self.bottom_rho,
                );
                ConditionRow {
                    row,
                    value: Complex64::ZERO,
                    kind: ConditionKind::Bottom,
                }
            }
        };
        rows.push(bottom_row);
        rows
    }

    /// Assemble the full block system at one wavenumber: interior Tau rows
    /// from each layer operator, the last two rows of every block replaced
    /// by condition rows.
    pub fn assemble(&self, kr: Complex64) -> GlobalSystem {
        let blocks = self.blocks();
        let kr2 = kr * kr;
        let mut matrix = Array2::from_elem((self.dim, self.dim), Complex64::ZERO);
        let mut rhs = vec![Complex64::ZERO; self.dim];

        for b in 0..blocks {
            let off = self.offsets[b];
            let n = self.orders[b] + 1;
            let template = &self.templates[b];
            // Interior (weighted-residual) rows 0 .. N-2.
            for i in 0..n - 2 {
                for j in 0..n {
                    matrix[[off + i, off + j]] = template[[i, j]];
                }
                matrix[[off + i, off + i]] -= kr2;
            }
        }

        // Condition slots: in every block the penultimate row takes the
        // condition at the block's top (surface, or the derivative/jump row
        // of the interface above) and the final row the condition at its
        // bottom (pressure continuity below, or the seabed condition).
        let rows = self.condition_rows(kr);
        let mut slots: Vec<Vec<(&ConditionRow, usize)>> = vec![Vec::new(); blocks];
        for cr in &rows {
            let (block, slot) = match cr.kind {
                ConditionKind::Surface => (0, 0),
                ConditionKind::PressureContinuity(j) => (j, 1),
                ConditionKind::VelocityContinuity(j) | ConditionKind::SourceJump(j) => (j + 1, 0),
                ConditionKind::Bottom => (blocks - 1, 1),
            };
            slots[block].push((cr, slot));
        }
        for (b, assigned) in slots.iter().enumerate() {
            assert!(
                assigned.len() == 2,
                "condition slot allocation bug: block {b} received {} conditions",
                assigned.len()
            );
            for &(cr, slot) in assigned {
                let row_idx = self.offsets[b] + self.orders[b] - 1 + slot;
                for (j, v) in cr.row.iter().enumerate() {
                    matrix[[row_idx, j]] = *v;
                }
                rhs[row_idx] = cr.value;
            }
        }

        GlobalSystem {
            matrix,
            rhs,
            block_offsets: self.offsets.clone(),
        }
    }

    /// Assemble, row-equilibrate and solve at one wavenumber.
    pub fn solve(&self, kr: Complex64) -> Result<DepthSolution, SolveError> {
        let GlobalSystem {
            mut matrix,
            mut rhs,
            ..
        } = self.assemble(kr);

        // Row equilibration: Tau rows scale like N^3/dh^2 while condition
        // rows are O(1); scaling each row by its max magnitude keeps the
        // factorization well conditioned at large spectral orders.
        for (mut row, r) in matrix.rows_mut().into_iter().zip(rhs.iter_mut()) {
            let m = row.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            if m > 0.0 {
                let inv = 1.0 / m;
                row.iter_mut().for_each(|v| *v *= inv);
                *r *= inv;
            }
        }

        let x = solve_complex_linear_system(&matrix, &rhs).map_err(|e| match e {
            SolveError::Singular { step, pivot, .. } => SolveError::Singular { step, pivot, kr },
            other => other,
        })?;

        let mut coeffs = Vec::with_capacity(self.blocks());
        for b in 0..self.blocks() {
            let off = self.offsets[b];
            let n = self.orders[b] + 1;
            coeffs.push(SpectralCoeffs::new(x[off..off + n].to_vec())?);
        }
        Ok(DepthSolution {
            coeffs,
            bounds: self.bounds.clone(),
        })
    }
}

/// Vertical wavenumber root for the half-space tail, `sqrt(kr^2 - k_inf^2)`
/// on the branch with non-negative real part so the tail decays.
pub fn halfspace_root(kr: Complex64, k_inf: Complex64) -> Complex64 {
    let beta = (kr * kr - k_inf * k_inf).sqrt();
    if beta.re < 0.0 {
        -beta
    } else {
        beta
    }
}

/// Condition rows for a tagged environment at one wavenumber.
pub fn build_condition_rows(
    env: &Environment,
    kr: Complex64,
) -> Result<Vec<ConditionRow>, SolveError> {
    Ok(DepthContext::new(env)?.condition_rows(kr))
}

/// One-off assembly of the global system (tests and diagnostics; the sweep
/// reuses a [`DepthContext`]).
pub fn assemble_global(env: &Environment, kr: Complex64) -> Result<GlobalSystem, SolveError> {
    Ok(DepthContext::new(env)?.assemble(kr))
}

/// Solve the depth equation and read the Green function at the receiver
/// depths.
pub fn solve_depth(
    env: &Environment,
    kr: Complex64,
    receiver_depths: &[f64],
) -> Result<Vec<Complex64>, SolveError> {
    let h = env.total_depth();
    if let Some(&z) = receiver_depths.iter().find(|&&z| z < 0.0 || z > h) {
        return Err(SolveError::ReceiverOutside(z, h));
    }
    let solution = DepthContext::new(env)?.solve(kr)?;
    receiver_depths
        .iter()
        .map(|&z| solution.evaluate(z))
        .collect()
}

/// Dense LU with partial pivoting.
///
/// Backward stable on well-conditioned systems: the residual satisfies
/// ||Ax - b|| <~ machine-eps * ||A|| ||x||. A pivot below 1e-300 is
/// reported as singular.
pub fn solve_complex_linear_system(
    matrix: &Array2<Complex64>,
    rhs: &[Complex64],
) -> Result<Vec<Complex64>, SolveError> {
    let (rows, cols) = matrix.dim();
    if rows != cols || rhs.len() != rows {
        return Err(SolveError::ShapeMismatch {
            rows,
            cols,
            rhs: rhs.len(),
        });
    }
    let n = rows;
    let mut a: Vec<Complex64> = matrix.iter().copied().collect();
    let mut x = rhs.to_vec();

    for k in 0..n {
        // Partial pivot: largest magnitude in column k at or below the diagonal.
        let mut pivot_row = k;
        let mut pivot_mag = a[k * n + k].norm();
        for i in k + 1..n {
            let m = a[i * n + k].norm();
            if m > pivot_mag {
                pivot_mag = m;
                pivot_row = i;
            }
        }
        if pivot_mag < 1e-300 {
            return Err(SolveError::Singular {
                step: k,
                pivot: pivot_mag,
                kr: Complex64::ZERO,
            });
        }
        if pivot_row != k {
            for j in 0..n {
                a.swap(k * n + j, pivot_row * n + j);
            }
            x.swap(k, pivot_row);
        }
        let inv_pivot = 1.0 / a[k * n + k];
        for i in k + 1..n {
            let factor = a[i * n + k] * inv_pivot;
            if factor == Complex64::ZERO {
                continue;
            }
            let (head, tail) = a.split_at_mut((i) * n);
            let pivot_row_slice = &head[k * n + k + 1..k * n + n];
            let target = &mut tail[k + 1..n];
            for (t, p) in target.iter_mut().zip(pivot_row_slice) {
                *t -= factor * p;
            }
            a[i * n + k] = Complex64::ZERO;
            let xk = x[k];
            x[i] -= factor * xk;
        }
    }

    // Back substitution.
    for k in (0..n).rev() {
        let mut acc = x[k];
        for j in k + 1..n {
            acc -= a[k * n + j] * x[j];
        }
        x[k] = acc / a[k * n + k];
    }
    Ok(x)
}

/// The physical defect of one boundary / interface / jump condition,
/// recomputed from a solved coefficient set (not from the imposed rows).
#[derive(Debug, Clone)]
pub struct Residual {
    pub kind: ConditionKind,
    /// Raw defect of the condition equation.
    pub defect: Complex64,
    /// Magnitude the defect should be compared against.
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        self.defect.norm() / self.scale.max(1e-300)
    }
}

/// Evaluate every physical condition from the solution and report defects.
///
/// Value-type conditions are scaled by max |Green|; derivative-type ones by
/// the larger of the endpoint derivative magnitudes and the source jump.
pub fn condition_residuals(
    env: &Environment,
    kr: Complex64,
    solution: &DepthSolution,
) -> Result<Vec<Residual>, SolveError> {
    let source_interface = env.require_source_interface()?;
    let layers = env.layers();
    let blocks = layers.len();
    let f = env.source().frequency;
    let psi_scale = solution.magnitude_scale();
    let mut out = Vec::with_capacity(2 * blocks);

    out.push(Residual {
        kind: ConditionKind::Surface,
        defect: solution.endpoint_value(0, true)?,
        scale: psi_scale,
    });

    for j in 0..blocks - 1 {
        let z = layers[j].z_bot;
        let rho_above = layers[j].rho.eval(z)?;
        let rho_below = layers[j + 1].rho.eval(z)?;
        let p_above = solution.endpoint_value(j, false)? * rho_above;
        let p_below = solution.endpoint_value(j + 1, true)? * rho_below;
        out.push(Residual {
            kind: ConditionKind::PressureContinuity(j),
            defect: p_above - p_below,
            scale: psi_scale * rho_above.max(rho_below),
        });

        let d_above = solution.endpoint_derivative(j, false)?;
        let d_below = solution.endpoint_derivative(j + 1, true)?;
        let deriv_scale = d_above.norm().max(d_below.norm()).max(SOURCE_JUMP.abs());
        if j == source_interface {
            out.push(Residual {
                kind: ConditionKind::SourceJump(j),
                defect: d_below - d_above - Complex64::new(SOURCE_JUMP, 0.0),
                scale: SOURCE_JUMP.abs(),
            });
        } else {
            out.push(Residual {
                kind: ConditionKind::VelocityContinuity(j),
                defect: d_below - d_above,
                scale: deriv_scale,
            });
        }
    }

    let last = blocks - 1;
    let bottom_defect = match env.bottom() {
        BottomCondition::PressureRelease => Residual {
            kind: ConditionKind::Bottom,
            defect: solution.endpoint_value(last, false)?,
            scale: psi_scale,
        },
        BottomCondition::Rigid => {
            let d = solution.endpoint_derivative(last, false)?;
            Residual {
                kind: ConditionKind::Bottom,
                defect: d,
                scale: psi_scale * kr.norm().max(1e-3),
            }
        }
        BottomCondition::Halfspace { c, rho, alpha } => {
            let k_inf = complex_wavenumber(*c, *alpha, f)?;
            let beta = halfspace_root(kr, k_inf);
            let z = layers[last].z_bot;
            let rho_bot = layers[last].rho.eval(z)?;
            let d = solution.endpoint_derivative(last, false)?;
            let v = solution.endpoint_value(last, false)?;
            Residual {
                kind: ConditionKind::Bottom,
                defect: d * *rho + v * rho_bot * beta,
                scale: (d.norm() * rho)
                    .max(v.norm() * rho_bot * beta.norm())
                    .max(psi_scale * 1e-3),
            }
        }
    };
    out.push(bottom_defect);
    Ok(out)
}
