//! Gaussian measures built from a quantized field of Kalish eigenvectors.
//!
//! A measure `σ` is quantized to nodes `(λ_j, w_j)`; each node carries an
//! eigenvector `E_j` of `T` for the eigenvalue `e^{iλ_j}`. The factor matrix
//! `A` has columns `√w_j E_j`, so that `x = A g` with `g` a vector of
//! independent standard symmetric complex Gaussians is a sample from a
//! centered Gaussian law with covariance `R = A A*`. Because `T A ≈ A D`
//! with `D = diag(e^{iλ_j})` unitary, the law is (approximately) `T`
//! invariant.
//!
//! Adjoints are taken for the arc-length inner product of
//! [`CircleFunction`], so `R = h·A·Aᴴ` as a matrix with `h = 2π/M`. All
//! Monte-Carlo checks work with the coefficient draws `g` and `m × m` Gram
//! matrices rather than forming `M × M` sample covariances.
//!
//! Functionals `x*` are circle functions acting through the inner product,
//! `f(x) = ⟨x*, x⟩`. With `e_j = ⟨x*, E_j⟩` the matrix coefficient of `f` is
//! `c(n) = Σ_j w_j |e_j|² e^{inλ_j}`, which is the Fourier coefficient
//! `∫ λⁿ dμ` of the atomic measure `Σ_j w_j |e_j|² δ_{λ_j}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::kalish::{
    apply_t, apply_t_inverse, chi, corrected_eigenvector, eigen_residual_of, grid_angle,
    CircleFunction, GridOperator,
};
use crate::measure::{wrap_angle, CircleMeasure, MeasureDoc, ANGLE_TOL};
use crate::rng::rng_for;
use crate::schema;
use crate::TAU;

/// Orbit iteration aborts once `‖Tⁿx‖ > DRIFT_LIMIT · ‖x‖`.
pub const DRIFT_LIMIT: f64 = 1e3;

/// Default admissibility threshold on eigen-residuals.
pub const DEFAULT_RESIDUAL_THRESHOLD: f64 = 0.05;

const SAMPLE_LABEL: &str = "gauss-sample";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub angle: f64,
    pub weight: f64,
}

/// How node eigenvectors are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorKind {
    /// Arc indicators `χ_λ`, or the constant function for `λ = 0`.
    Indicator,
    /// Nodes snapped to the nearest grid eigenvalue and refined by one
    /// inverse-iteration step; exact eigenvectors of the discrete operator
    /// up to solver precision.
    Corrected,
}

/// Splits a probability measure into `m` weighted nodes.
///
/// Atoms become nodes verbatim. The density part is cut into `m - #atoms`
/// cells of equal mass, walking the circle from `-h/2` (the lower edge of
/// bin 0), and each cell contributes one node at its mass centroid.
pub fn quantize(sigma: &CircleMeasure, m: usize) -> Result<Vec<Node>> {
    sigma.require_probability()?;
    if m == 0 {
        return Err(LabError::InvalidArgument("node count must be >= 1".into()));
    }
    let atoms = sigma.atoms();
    if m < atoms.len() {
        return Err(LabError::InvalidArgument(format!(
            "node count {m} is smaller than the atom count {}",
            atoms.len()
        )));
    }
    let mut nodes: Vec<Node> = atoms
        .iter()
        .map(|a| Node {
            angle: a.angle,
            weight: a.mass,
        })
        .collect();
    let cells = m - atoms.len();
    if sigma.has_density() {
        if cells == 0 {
            return Err(LabError::InvalidArgument(format!(
                "node count {m} leaves no node for the density part"
            )));
        }
        nodes.extend(density_cells(sigma, cells));
    }
    nodes.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    for pair in nodes.windows(2) {
        if pair[1].angle - pair[0].angle <= ANGLE_TOL {
            return Err(LabError::Inadmissible(format!(
                "quantization produced coincident nodes at angle {}",
                pair[0].angle
            )));
        }
    }
    Ok(nodes)
}

fn density_cells(sigma: &CircleMeasure, cells: usize) -> Vec<Node> {
    let h = sigma.bin_width();
    let target = sigma.density_mass() / cells as f64;
    let mut out = Vec::with_capacity(cells);
    let (mut mass, mut moment) = (0.0, 0.0);
    for (j, &d) in sigma.density().iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let mut a = sigma.bin_center(j) - 0.5 * h;
        let mut left = h;
        while left > 0.0 {
            let avail = d * left;
            let need = target - mass;
            if out.len() + 1 == cells || avail <= need {
                mass += avail;
                moment += avail * (a + 0.5 * left);
                left = 0.0;
            } else {
                let len = (need / d).max(0.0);
                mass += need;
                moment += need * (a + 0.5 * len);
                out.push(Node {
                    angle: wrap_angle(moment / mass),
                    weight: mass,
                });
                a += len;
                left -= len;
                mass = 0.0;
                moment = 0.0;
            }
        }
    }
    if mass > 0.0 {
        out.push(Node {
            angle: wrap_angle(moment / mass),
            weight: mass,
        });
    }
    out
}

/// Indicator-style eigenvector for a node: `χ_λ`, or the constant function
/// (the full arc, fixed by `T` up to discretization) at `λ = 0`.
pub fn indicator_vector(angle: f64, grid: usize) -> Result<CircleFunction> {
    if wrap_angle(angle) == 0.0 {
        CircleFunction::constant(grid, Complex64::new(1.0, 0.0))
    } else {
        chi(angle, grid)
    }
}

#[derive(Debug, Clone)]
pub struct EigenField {
    nodes: Vec<Node>,
    vectors: Vec<CircleFunction>,
    residuals: Vec<f64>,
    source: CircleMeasure,
    grid: usize,
    kind: VectorKind,
    threshold: f64,
}

impl EigenField {
    /// Builds the field over explicit nodes. Corrected fields replace each
    /// node angle by the grid eigenvalue it was snapped to.
    pub fn new(
        source: CircleMeasure,
        nodes: Vec<Node>,
        grid: usize,
        kind: VectorKind,
        threshold: f64,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(LabError::Inadmissible("field has no nodes".into()));
        }
        if let Some(n) = nodes.iter().find(|n| !(n.weight > 0.0) || !n.angle.is_finite()) {
            return Err(LabError::Inadmissible(format!(
                "node ({}, {}) needs a finite angle and positive weight",
                n.angle, n.weight
            )));
        }
        let total: f64 = nodes.iter().map(|n| n.weight).sum();
        if (total - source.total_mass()).abs() > 1e-9 {
            return Err(LabError::Inadmissible(format!(
                "node weights sum to {total}, source mass is {}",
                source.total_mass()
            )));
        }
        let mut out_nodes = Vec::with_capacity(nodes.len());
        let mut vectors = Vec::with_capacity(nodes.len());
        for n in &nodes {
            match kind {
                VectorKind::Indicator => {
                    out_nodes.push(Node {
                        angle: wrap_angle(n.angle),
                        weight: n.weight,
                    });
                    vectors.push(indicator_vector(n.angle, grid)?);
                }
                VectorKind::Corrected => {
                    let (k, v) = corrected_eigenvector(n.angle, grid)?;
                    out_nodes.push(Node {
                        angle: grid_angle(k, grid),
                        weight: n.weight,
                    });
                    vectors.push(v);
                }
            }
        }
        let mut sorted: Vec<f64> = out_nodes.iter().map(|n| n.angle).collect();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|p| p[1] - p[0] <= ANGLE_TOL) {
            return Err(LabError::Inadmissible(format!(
                "two nodes share an eigenvalue at grid size {grid}"
            )));
        }
        let mut residuals = Vec::with_capacity(vectors.len());
        for (n, v) in out_nodes.iter().zip(&vectors) {
            if v.norm() == 0.0 {
                return Err(LabError::Inadmissible(format!(
                    "eigenvector at angle {} vanishes on the grid",
                    n.angle
                )));
            }
            let r = eigen_residual_of(v, n.angle)?;
            if r > threshold {
                return Err(LabError::Inadmissible(format!(
                    "eigen residual {r:e} at angle {} exceeds {threshold:e}",
                    n.angle
                )));
            }
            residuals.push(r);
        }
        Ok(Self {
            nodes: out_nodes,
            vectors,
            residuals,
            source,
            grid,
            kind,
            threshold,
        })
    }

    /// Quantizes `sigma` to `m` nodes and builds the field.
    pub fn from_measure(
        sigma: &CircleMeasure,
        m: usize,
        grid: usize,
        kind: VectorKind,
        threshold: f64,
    ) -> Result<Self> {
        let nodes = quantize(sigma, m)?;
        Self::new(sigma.clone(), nodes, grid, kind, threshold)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn vectors(&self) -> &[CircleFunction] {
        &self.vectors
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn source(&self) -> &CircleMeasure {
        &self.source
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn kind(&self) -> VectorKind {
        self.kind
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Coefficient law used for sampling. `Real` is a deliberately broken
/// sampler kept as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientLaw {
    ComplexSymmetric,
    Real,
}

#[derive(Debug, Clone)]
pub struct GaussModel {
    field: EigenField,
    factor: DMatrix<Complex64>,
    min_singular: f64,
}

/// Assembles `A` and caches its smallest singular value (as an operator
/// from `ℂ^m` into the grid space).
pub fn build_model(field: EigenField) -> Result<GaussModel> {
    let grid = field.grid;
    let m = field.nodes.len();
    let factor = DMatrix::from_fn(grid, m, |k, j| {
        field.vectors[j].values()[k] * field.nodes[j].weight.sqrt()
    });
    let sv = factor.clone().svd(false, false).singular_values;
    let min_singular = sv.iter().copied().fold(f64::INFINITY, f64::min) * (TAU / grid as f64).sqrt();
    Ok(GaussModel {
        field,
        factor,
        min_singular,
    })
}

impl GaussModel {
    pub fn field(&self) -> &EigenField {
        &self.field
    }

    pub fn factor(&self) -> &DMatrix<Complex64> {
        &self.factor
    }

    pub fn grid(&self) -> usize {
        self.field.grid
    }

    pub fn node_count(&self) -> usize {
        self.field.nodes.len()
    }

    pub fn min_singular_value(&self) -> f64 {
        self.min_singular
    }

    /// Diagonal of `D`.
    pub fn diag(&self) -> Vec<Complex64> {
        self.field
            .nodes
            .iter()
            .map(|n| Complex64::from_polar(1.0, n.angle))
            .collect()
    }

    fn step(&self) -> f64 {
        TAU / self.grid() as f64
    }

    /// Dense `R = h·A·Aᴴ`. Quadratic in the grid size; meant for checks.
    pub fn covariance_matrix(&self) -> DMatrix<Complex64> {
        (&self.factor * self.factor.adjoint()) * Complex64::new(self.step(), 0.0)
    }

    /// `trace R = Σ w_j ‖E_j‖²`.
    pub fn covariance_trace(&self) -> f64 {
        self.field
            .nodes
            .iter()
            .zip(&self.field.vectors)
            .map(|(n, v)| n.weight * v.norm().powi(2))
            .sum()
    }

    /// `⟨x, R y⟩`.
    pub fn covariance_form(&self, x: &CircleFunction, y: &CircleFunction) -> Result<Complex64> {
        let a = self.loadings(x)?;
        let b = self.loadings(y)?;
        Ok(a.iter().zip(&b).map(|(p, q)| p.conj() * q).sum())
    }

    /// `a_j = √w_j ⟨x*, E_j⟩`, so that `⟨x*, A g⟩ = Σ a_j g_j`.
    pub fn loadings(&self, functional: &CircleFunction) -> Result<Vec<Complex64>> {
        self.require_grid(functional.grid())?;
        self.field
            .nodes
            .iter()
            .zip(&self.field.vectors)
            .map(|(n, v)| Ok(functional.inner(v)? * n.weight.sqrt()))
            .collect()
    }

    fn require_grid(&self, grid: usize) -> Result<()> {
        if grid != self.grid() {
            return Err(LabError::DimensionMismatch {
                expected: self.grid(),
                found: grid,
            });
        }
        Ok(())
    }

    fn column(&self, j: usize) -> CircleFunction {
        CircleFunction::new(self.factor.column(j).iter().copied().collect())
            .expect("factor columns are finite")
    }

    pub fn to_json(&self, seed_policy: &str) -> Result<String> {
        Ok(serde_json::to_string(&ModelManifest::new(self, seed_policy))?)
    }
}

/// `‖T·A − A·D‖_F / ‖A‖_F`.
pub fn intertwine_residual(model: &GaussModel, op: &dyn GridOperator) -> Result<f64> {
    model.require_grid(op.grid())?;
    let diag = model.diag();
    let mut num = 0.0;
    for (j, d) in diag.iter().enumerate() {
        let col = model.column(j);
        let r = op.apply(&col)?.sub(&col.scale(*d))?;
        num += r.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    Ok((num / model.factor.norm_squared()).sqrt())
}

/// `m × S` coefficient matrix; column `s` drives sample `s`.
pub fn draw_coefficients(m: usize, count: usize, seed: u64, law: CoefficientLaw) -> DMatrix<Complex64> {
    let mut rng = rng_for(seed, SAMPLE_LABEL);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut g = DMatrix::zeros(m, count);
    for s in 0..count {
        for j in 0..m {
            g[(j, s)] = match law {
                CoefficientLaw::ComplexSymmetric => {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * half, im * half)
                }
                CoefficientLaw::Real => Complex64::new(rng.sample(StandardNormal), 0.0),
            };
        }
    }
    g
}

/// Draws `count` samples `x_s = A g_s`.
pub fn sample(model: &GaussModel, count: usize, seed: u64) -> Result<Vec<CircleFunction>> {
    sample_with_law(model, count, seed, CoefficientLaw::ComplexSymmetric)
}

pub fn sample_with_law(
    model: &GaussModel,
    count: usize,
    seed: u64,
    law: CoefficientLaw,
) -> Result<Vec<CircleFunction>> {
    if count == 0 {
        return Err(LabError::InvalidArgument("sample count must be >= 1".into()));
    }
    let g = draw_coefficients(model.node_count(), count, seed, law);
    let x = &model.factor * g;
    (0..count)
        .map(|s| CircleFunction::new(x.column(s).iter().copied().collect()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub samples: usize,
    pub law: CoefficientLaw,
    /// `⟨x*, R x*⟩`.
    pub expected_variance: f64,
    pub variance: f64,
    /// Empirical `E[ζ²]` as `[re, im]`.
    pub second_moment: [f64; 2],
    pub second_moment_se: f64,
    pub re_im_correlation: f64,
    pub correlation_bound: f64,
    pub second_moment_pass: bool,
    pub correlation_pass: bool,
    pub pass: bool,
}

/// Checks that `ζ = ⟨x*, x⟩` is a symmetric complex Gaussian: the
/// pseudo-moment `E[ζ²]` and the correlation of `Re ζ`, `Im ζ` must both sit
/// within three standard errors of zero.
pub fn symmetry_check(
    model: &GaussModel,
    functional: &CircleFunction,
    count: usize,
    seed: u64,
    law: CoefficientLaw,
) -> Result<SymmetryReport> {
    if count < 2 {
        return Err(LabError::InvalidArgument("symmetry check needs >= 2 samples".into()));
    }
    let a = model.loadings(functional)?;
    let expected_variance: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let scale = functional.norm().powi(2) * model.covariance_trace();
    if !(expected_variance > 1e-24 * scale) {
        return Err(LabError::DegenerateFunctional);
    }
    let g = draw_coefficients(model.node_count(), count, seed, law);
    let zeta: Vec<Complex64> = (0..count)
        .map(|s| a.iter().enumerate().map(|(j, aj)| aj * g[(j, s)]).sum())
        .collect();
    let sf = count as f64;
    let variance = zeta.iter().map(|z| z.norm_sqr()).sum::<f64>() / sf;
    let pm: Complex64 = zeta.iter().map(|z| z * z).sum::<Complex64>() / sf;
    let spread = zeta.iter().map(|z| (z * z - pm).norm_sqr()).sum::<f64>() / (sf - 1.0);
    let se = (spread / sf).sqrt();

    let (mr, mi) = (
        zeta.iter().map(|z| z.re).sum::<f64>() / sf,
        zeta.iter().map(|z| z.im).sum::<f64>() / sf,
    );
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for z in &zeta {
        let (dx, dy) = (z.re - mr, z.im - mi);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let corr = if sxx > 0.0 && syy > 0.0 {
        sxy / (sxx * syy).sqrt()
    } else {
        // one part is identically zero: maximally non-circular
        1.0
    };
    let bound = 3.0 / sf.sqrt();
    let second_moment_pass = pm.norm() <= 3.0 * se;
    let correlation_pass = corr.abs() <= bound;
    Ok(SymmetryReport {
        samples: count,
        law,
        expected_variance,
        variance,
        second_moment: [pm.re, pm.im],
        second_moment_se: se,
        re_im_correlation: corr,
        correlation_bound: bound,
        second_moment_pass,
        correlation_pass,
        pass: second_moment_pass && correlation_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub samples: usize,
    /// `‖Cov(T x) − R‖_F / ‖R‖_F`.
    pub cov_distance: f64,
    pub stat_tol: f64,
    pub intertwine_residual: f64,
    /// Allowance for the intertwining error, `(2ρκ + ρ²κ)` with `ρ` the
    /// intertwine residual and `κ = ‖A‖_F² / ‖A Aᴴ‖_F`.
    pub intertwine_budget: f64,
    pub pass: bool,
}

/// Compares the empirical covariance of `{T x_s}` with `R`.
pub fn invariance_check(
    model: &GaussModel,
    op: &dyn GridOperator,
    count: usize,
    seed: u64,
    stat_tol: f64,
) -> Result<InvarianceReport> {
    model.require_grid(op.grid())?;
    let m = model.node_count();
    let mut image = DMatrix::zeros(model.grid(), m);
    for j in 0..m {
        let col = op.apply(&model.column(j))?;
        image.set_column(j, &nalgebra::DVector::from_column_slice(col.values()));
    }
    let rho = intertwine_residual(model, op)?;
    factor_invariance(&model.factor, &image, rho, count, seed, stat_tol)
}

/// Negative control: replaces `T A` by `A·diag(modulus · e^{iλ_j})`. Any
/// modulus other than 1 inflates or deflates the covariance by `modulus²`.
pub fn invariance_negative_control(
    model: &GaussModel,
    modulus: f64,
    count: usize,
    seed: u64,
    stat_tol: f64,
) -> Result<InvarianceReport> {
    let mut image = model.factor.clone();
    for (j, d) in model.diag().iter().enumerate() {
        let mut col = image.column_mut(j);
        col *= d * modulus;
    }
    factor_invariance(&model.factor, &image, 0.0, count, seed, stat_tol)
}

/// Covariance comparison for any factor pair: the law of `A g` against the
/// law of `B g` (with `B` the image of `A` under the dynamics), given the
/// intertwining residual `rho` of `B ≈ A D`.
pub fn factor_invariance(
    factor: &DMatrix<Complex64>,
    image: &DMatrix<Complex64>,
    rho: f64,
    count: usize,
    seed: u64,
    stat_tol: f64,
) -> Result<InvarianceReport> {
    if count == 0 {
        return Err(LabError::InvalidArgument("sample count must be >= 1".into()));
    }
    if factor.shape() != image.shape() {
        return Err(LabError::DimensionMismatch {
            expected: factor.nrows(),
            found: image.nrows(),
        });
    }
    let a = factor;
    let g = draw_coefficients(a.ncols(), count, seed, CoefficientLaw::ComplexSymmetric);
    let gram = (&g * g.adjoint()) / Complex64::new(count as f64, 0.0);
    let kaa = a.adjoint() * a;
    let kbb = image.adjoint() * image;
    let kba = image.adjoint() * a;
    let kab = kba.adjoint();
    let t1 = (&gram * &kbb * &gram * &kbb).trace().re;
    let t2 = (&gram * &kba * &kab).trace().re;
    let t3 = (&kaa * &kaa).trace().re;
    let dist = ((t1 - 2.0 * t2 + t3).max(0.0) / t3).sqrt();
    let kappa = a.norm_squared() / t3.sqrt();
    let budget = 2.0 * rho * kappa + rho * rho * kappa;
    Ok(InvarianceReport {
        samples: count,
        cov_distance: dist,
        stat_tol,
        intertwine_residual: rho,
        intertwine_budget: budget,
        pass: dist <= stat_tol + budget,
    })
}

/// `c(n) = Σ_j w_j e^{inλ_j} |⟨x*, E_j⟩|²`.
pub fn matrix_coefficient_analytic(model: &GaussModel, functional: &CircleFunction, n: i64) -> Result<Complex64> {
    let a = model.loadings(functional)?;
    Ok(a
        .iter()
        .zip(&model.field.nodes)
        .map(|(aj, node)| aj.norm_sqr() * Complex64::from_polar(1.0, n as f64 * node.angle))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientEstimate {
    pub n: i64,
    pub samples: usize,
    pub value: [f64; 2],
    pub std_error: f64,
}

impl CoefficientEstimate {
    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.value[0], self.value[1])
    }
}

/// Monte-Carlo estimate of `E[f(Tⁿ x) conj f(x)]`. Negative `n` iterates
/// `T⁻¹`. Each column of `A` is pushed along its orbit with the drift
/// guard at [`DRIFT_LIMIT`].
pub fn matrix_coefficient_mc(
    model: &GaussModel,
    functional: &CircleFunction,
    n: i64,
    count: usize,
    seed: u64,
) -> Result<CoefficientEstimate> {
    matrix_coefficient_mc_guarded(model, functional, n, count, seed, DRIFT_LIMIT)
}

/// [`matrix_coefficient_mc`] with an explicit drift limit.
///
/// The discrete operator has `M` distinct unimodular eigenvalues, so
/// `T^M = I` and orbits are bounded by the condition number of its
/// eigenbasis (measured near `3.3·√M`). The default limit therefore only
/// trips on genuine numerical breakdown.
pub fn matrix_coefficient_mc_guarded(
    model: &GaussModel,
    functional: &CircleFunction,
    n: i64,
    count: usize,
    seed: u64,
    drift_limit: f64,
) -> Result<CoefficientEstimate> {
    if count < 2 {
        return Err(LabError::InvalidArgument("estimate needs >= 2 samples".into()));
    }
    let a = model.loadings(functional)?;
    let mut u = Vec::with_capacity(a.len());
    for j in 0..model.node_count() {
        let start = model.column(j);
        let base = start.norm();
        let mut x = start;
        for step in 1..=n.unsigned_abs() as usize {
            x = if n > 0 { apply_t(&x) } else { apply_t_inverse(&x)? };
            let ratio = x.norm() / base;
            if !(ratio <= drift_limit) {
                return Err(LabError::DriftGuard { step, ratio });
            }
        }
        u.push(functional.inner(&x)?);
    }
    let g = draw_coefficients(model.node_count(), count, seed, CoefficientLaw::ComplexSymmetric);
    let prods: Vec<Complex64> = (0..count)
        .map(|s| {
            let f_n: Complex64 = u.iter().enumerate().map(|(j, v)| v * g[(j, s)]).sum();
            let f_0: Complex64 = a.iter().enumerate().map(|(j, v)| v * g[(j, s)]).sum();
            f_n * f_0.conj()
        })
        .collect();
    let sf = count as f64;
    let mean: Complex64 = prods.iter().sum::<Complex64>() / sf;
    let var = prods.iter().map(|p| (p - mean).norm_sqr()).sum::<f64>() / (sf - 1.0);
    Ok(CoefficientEstimate {
        n,
        samples: count,
        value: [mean.re, mean.im],
        std_error: (var / sf).sqrt(),
    })
}

/// Atomic measure `Σ_j w_j |⟨x*, E_j⟩|² δ_{λ_j}` on the bins of the source
/// measure.
pub fn spectral_measure_of_functional(model: &GaussModel, functional: &CircleFunction) -> Result<CircleMeasure> {
    let a = model.loadings(functional)?;
    let atoms: Vec<(f64, f64)> = model
        .field
        .nodes
        .iter()
        .zip(&a)
        .map(|(node, aj)| (node.angle, aj.norm_sqr()))
        .collect();
    CircleMeasure::from_atoms(model.field.source.bins(), &atoms)
}

/// Serialized model: enough to rebuild the field, never the matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub schema: String,
    pub sigma: MeasureDoc,
    pub nodes: Vec<[f64; 2]>,
    pub grid: usize,
    pub vectors: VectorKind,
    pub residual_threshold: f64,
    pub seed_policy: String,
}

impl ModelManifest {
    pub fn new(model: &GaussModel, seed_policy: &str) -> Self {
        let field = &model.field;
        Self {
            schema: schema::GAUSS_MODEL.to_string(),
            sigma: MeasureDoc::from(&field.source),
            nodes: field.nodes.iter().map(|n| [n.angle, n.weight]).collect(),
            grid: field.grid,
            vectors: field.kind,
            residual_threshold: field.threshold,
            seed_policy: seed_policy.to_string(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        schema::check(schema::GAUSS_MODEL, &doc.schema)?;
        Ok(doc)
    }

    pub fn rebuild(&self) -> Result<GaussModel> {
        let sigma = CircleMeasure::try_from(self.sigma.clone())?;
        let nodes = self
            .nodes
            .iter()
            .map(|&[angle, weight]| Node { angle, weight })
            .collect();
        build_model(EigenField::new(sigma, nodes, self.grid, self.vectors, self.residual_threshold)?)
    }
}
