//! Grid discretization of the Kalish operator `T = M - J` on functions
//! over the circle.
//!
//! A [`CircleFunction`] samples a function at `t_j = 2πj/M`. The inner
//! product is the arc-length one, `⟨f, g⟩ = (2π/M) Σ conj(f_j) g_j`.
//!
//! * `M` multiplies pointwise by `ζ = e^{it}`.
//! * `J` integrates along the counterclockwise arc from `1` to `ζ` against
//!   the complex line element `dλ = i e^{it} dt`, discretized by the left
//!   endpoint rule: `(Jf)_k = Σ_{j<k} f_j · i e^{it_j} · 2π/M`.
//!
//! Because `J` is strictly lower triangular, `T` is lower triangular with the
//! grid points `ζ_k` on its diagonal: the discrete operator is invertible,
//! its eigenvalues are exactly the `M`-th roots of unity, and shifted solves
//! cost `O(M)` by forward substitution.
//!
//! # Arc indicators
//!
//! [`chi`] is the indicator of the counterclockwise arc from `λ` to `1`,
//! i.e. the angles `(θ, 2π)` when `λ = e^{iθ}`; with this orientation the
//! continuum identity `T χ_λ = λ χ_λ` holds. On the grid each sample
//! `j >= 1` holds the fraction of its cell `[t_j - h/2, t_j + h/2)` lying
//! inside the arc and the sample at `t_0 = 0`, where `J` starts integrating,
//! is 0. Plain 0/1 point sampling leaves a boundary error that depends on
//! where `θ` falls inside a cell, so the residual stalls between some grid
//! doublings; cell fractions give a clean first-order decay
//! (`eigen_residual` halves under every doubling).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure::wrap_angle;
use crate::schema;
use crate::TAU;

pub const MIN_GRID: usize = 8;

/// Largest grid for which [`KalishMatrix`] is built densely.
pub const DENSE_LIMIT: usize = 4096;

/// Shift offset used by [`corrected_eigenvector`].
const INVERSE_ITERATION_OFFSET: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CircleFunction {
    values: Vec<Complex64>,
}

impl CircleFunction {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < MIN_GRID {
            return Err(LabError::InvalidArgument(format!(
                "grid size {} is below {MIN_GRID}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(LabError::InvalidArgument(
                "circle function values must be finite".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn zeros(grid: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); grid])
    }

    pub fn constant(grid: usize, c: Complex64) -> Result<Self> {
        Self::new(vec![c; grid])
    }

    pub fn from_fn(grid: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new((0..grid).map(|j| f(grid_angle(j, grid))).collect())
    }

    pub fn grid(&self) -> usize {
        self.values.len()
    }

    pub fn step(&self) -> f64 {
        TAU / self.grid() as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    fn require_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid() != other.grid() {
            return Err(LabError::DimensionMismatch {
                expected: self.grid(),
                found: other.grid(),
            });
        }
        Ok(())
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.require_same_grid(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.step())
    }

    pub fn norm(&self) -> f64 {
        (self.step() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_grid(other)?;
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.require_same_grid(other)?;
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FunctionDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FunctionDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

pub fn grid_angle(j: usize, grid: usize) -> f64 {
    TAU * j as f64 / grid as f64
}

fn line_element(j: usize, grid: usize) -> Complex64 {
    Complex64::new(0.0, TAU / grid as f64) * Complex64::from_polar(1.0, grid_angle(j, grid))
}

/// `(Mf)(ζ) = ζ f(ζ)`.
pub fn apply_m(f: &CircleFunction) -> CircleFunction {
    let grid = f.grid();
    CircleFunction {
        values: f
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v * Complex64::from_polar(1.0, grid_angle(j, grid)))
            .collect(),
    }
}

/// Left-endpoint discretization of `(Jf)(ζ) = ∫_{(1,ζ)} f(λ) dλ`.
pub fn apply_j(f: &CircleFunction) -> CircleFunction {
    let grid = f.grid();
    let mut out = Vec::with_capacity(grid);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, v) in f.values.iter().enumerate() {
        out.push(acc);
        acc += v * line_element(j, grid);
    }
    CircleFunction { values: out }
}

/// `T f = M f - J f`.
pub fn apply_t(f: &CircleFunction) -> CircleFunction {
    let grid = f.grid();
    let mut out = Vec::with_capacity(grid);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, v) in f.values.iter().enumerate() {
        out.push(v * Complex64::from_polar(1.0, grid_angle(j, grid)) - acc);
        acc += v * line_element(j, grid);
    }
    CircleFunction { values: out }
}

/// Solves `(T - shift·I) x = b` by forward substitution.
pub fn solve_shifted(b: &CircleFunction, shift: Complex64) -> Result<CircleFunction> {
    let grid = b.grid();
    let mut out = Vec::with_capacity(grid);
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, v) in b.values.iter().enumerate() {
        let pivot = Complex64::from_polar(1.0, grid_angle(j, grid)) - shift;
        if pivot.norm() == 0.0 {
            return Err(LabError::InvalidArgument(format!(
                "shift coincides with the eigenvalue at grid index {j}"
            )));
        }
        let x = (v + acc) / pivot;
        acc += x * line_element(j, grid);
        out.push(x);
    }
    CircleFunction::new(out)
}

/// `T⁻¹ b`.
pub fn apply_t_inverse(b: &CircleFunction) -> Result<CircleFunction> {
    solve_shifted(b, Complex64::new(0.0, 0.0))
}

/// Arc indicator `χ_λ` of the counterclockwise arc from `λ = e^{iθ}` to 1,
/// sampled as cell fractions (see the module docs). `chi(0)` is the zero
/// function.
pub fn chi(lambda: f64, grid: usize) -> Result<CircleFunction> {
    if grid < MIN_GRID {
        return Err(LabError::InvalidArgument(format!(
            "grid size {grid} is below {MIN_GRID}"
        )));
    }
    let theta = wrap_angle(lambda);
    if theta == 0.0 {
        return CircleFunction::zeros(grid);
    }
    let h = TAU / grid as f64;
    let values = (0..grid)
        .map(|j| {
            if j == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let t = grid_angle(j, grid);
            let lo = (t - 0.5 * h).max(theta);
            let hi = (t + 0.5 * h).min(TAU);
            Complex64::new(((hi - lo) / h).clamp(0.0, 1.0), 0.0)
        })
        .collect();
    CircleFunction::new(values)
}

/// `‖T f - e^{iλ} f‖ / ‖f‖`.
pub fn eigen_residual_of(f: &CircleFunction, lambda: f64) -> Result<f64> {
    let norm = f.norm();
    if norm == 0.0 {
        return Err(LabError::InvalidArgument(
            "eigen residual of the zero function".into(),
        ));
    }
    let r = apply_t(f).sub(&f.scale(Complex64::from_polar(1.0, lambda)))?;
    Ok(r.norm() / norm)
}

/// Relative eigen-residual of the arc indicator `χ_λ`.
pub fn eigen_residual(lambda: f64, grid: usize) -> Result<f64> {
    if !(lambda > 0.0 && lambda < TAU) {
        return Err(LabError::InvalidArgument(format!(
            "eigen residual needs λ in (0, 2π), got {lambda}"
        )));
    }
    let f = chi(lambda, grid)?;
    if f.norm() == 0.0 {
        return Err(LabError::InvalidArgument(format!(
            "arc from λ = {lambda} to 1 is shorter than the grid resolution"
        )));
    }
    eigen_residual_of(&f, lambda)
}

/// Index of the grid eigenvalue nearest to angle `lambda`.
pub fn nearest_grid_index(lambda: f64, grid: usize) -> usize {
    let s = wrap_angle(lambda) / (TAU / grid as f64);
    (s.round() as usize) % grid
}

/// Refines the arc indicator at the grid eigenvalue nearest to `lambda` by
/// one step of inverse iteration on `T - (ζ_k + ε)I`.
///
/// Returns the grid index `k` and an eigenvector of the discrete operator for
/// `ζ_k`, phase-aligned with and scaled to the norm of the starting
/// indicator. For `k = 0` the start is the constant function (the full arc).
pub fn corrected_eigenvector(lambda: f64, grid: usize) -> Result<(usize, CircleFunction)> {
    let k = nearest_grid_index(lambda, grid);
    let start = if k == 0 {
        CircleFunction::constant(grid, Complex64::new(1.0, 0.0))?
    } else {
        chi(grid_angle(k, grid), grid)?
    };
    let shift = Complex64::from_polar(1.0, grid_angle(k, grid))
        + Complex64::new(INVERSE_ITERATION_OFFSET, 0.0);
    let x = solve_shifted(&start, shift)?;
    let overlap = x.inner(&start)?;
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let scale = start.norm() / x.norm();
    Ok((k, x.scale(phase * scale)))
}

/// A linear operator on circle functions of a fixed grid.
pub trait GridOperator {
    fn grid(&self) -> usize;
    fn apply(&self, f: &CircleFunction) -> Result<CircleFunction>;
}

/// Matrix-free `T` on a grid of size `grid`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KalishOperator {
    pub grid: usize,
}

impl GridOperator for KalishOperator {
    fn grid(&self) -> usize {
        self.grid
    }

    fn apply(&self, f: &CircleFunction) -> Result<CircleFunction> {
        if f.grid() != self.grid {
            return Err(LabError::DimensionMismatch {
                expected: self.grid,
                found: f.grid(),
            });
        }
        Ok(apply_t(f))
    }
}

/// Dense matrix of `T` in the grid basis.
#[derive(Debug, Clone)]
pub struct KalishMatrix {
    matrix: DMatrix<Complex64>,
}

impl KalishMatrix {
    pub fn new(grid: usize) -> Result<Self> {
        if grid > DENSE_LIMIT {
            return Err(LabError::GridTooLarge {
                grid,
                limit: DENSE_LIMIT,
            });
        }
        if grid < MIN_GRID {
            return Err(LabError::InvalidArgument(format!(
                "grid size {grid} is below {MIN_GRID}"
            )));
        }
        let matrix = DMatrix::from_fn(grid, grid, |k, j| {
            if k == j {
                Complex64::from_polar(1.0, grid_angle(j, grid))
            } else if j < k {
                -line_element(j, grid)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Solves `T x = b` by dense LU.
    pub fn solve(&self, b: &CircleFunction) -> Result<CircleFunction> {
        let rhs = nalgebra::DVector::from_column_slice(b.values());
        let x = self
            .matrix
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| LabError::InvalidArgument("Kalish matrix is singular".into()))?;
        CircleFunction::new(x.iter().copied().collect())
    }
}

impl GridOperator for KalishMatrix {
    fn grid(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, f: &CircleFunction) -> Result<CircleFunction> {
        if f.grid() != self.grid() {
            return Err(LabError::DimensionMismatch {
                expected: self.grid(),
                found: f.grid(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(f.values());
        CircleFunction::new((&self.matrix * v).iter().copied().collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    pub schema: String,
    pub grid: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CircleFunction> for FunctionDoc {
    fn from(f: &CircleFunction) -> Self {
        Self {
            schema: schema::CIRCLE_FUNCTION.to_string(),
            grid: f.grid(),
            re: f.values.iter().map(|v| v.re).collect(),
            im: f.values.iter().map(|v| v.im).collect(),
        }
    }
}

impl TryFrom<FunctionDoc> for CircleFunction {
    type Error = LabError;

    fn try_from(doc: FunctionDoc) -> Result<Self> {
        schema::check(schema::CIRCLE_FUNCTION, &doc.schema)?;
        if doc.re.len() != doc.grid || doc.im.len() != doc.grid {
            return Err(LabError::DimensionMismatch {
                expected: doc.grid,
                found: doc.re.len().min(doc.im.len()),
            });
        }
        CircleFunction::new(
            doc.re
                .into_iter()
                .zip(doc.im)
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn one(grid: usize) -> CircleFunction {
        CircleFunction::constant(grid, Complex64::new(1.0, 0.0)).unwrap()
    }

    fn random_fn(grid: usize, rng: &mut ChaCha8Rng) -> CircleFunction {
        CircleFunction::new(
            (0..grid)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn m_examples() {
        let f = apply_m(&one(64));
        for (j, v) in f.values().iter().enumerate() {
            assert!((v - Complex64::from_polar(1.0, grid_angle(j, 64))).norm() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_fn(128, &mut rng);
        assert!((apply_m(&g).norm() - g.norm()).abs() < 1e-13);
        let mm = apply_m(&apply_m(&g));
        for (j, (a, b)) in mm.values().iter().zip(g.values()).enumerate() {
            let expect = b * Complex64::from_polar(1.0, 2.0 * grid_angle(j, 128));
            assert!((a - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn j_of_one_is_first_order() {
        // closed form: ∫_{(1,ζ)} dλ = ζ - 1
        let err = |grid: usize| {
            let j = apply_j(&one(grid));
            j.values()
                .iter()
                .enumerate()
                .map(|(k, v)| (v - (Complex64::from_polar(1.0, grid_angle(k, grid)) - 1.0)).norm())
                .fold(0.0, f64::max)
        };
        let e1 = err(512);
        let e2 = err(1024);
        assert!(e1 <= 10.0 / 512.0);
        assert!((e2 / e1 - 0.5).abs() < 0.02, "ratio {}", e2 / e1);
        assert_eq!(apply_j(&CircleFunction::zeros(64).unwrap()).max_abs(), 0.0);
    }

    #[test]
    fn t_fixes_one() {
        for grid in [256, 1024, 4096] {
            let t1 = apply_t(&one(grid));
            let err = t1.sub(&one(grid)).unwrap().max_abs();
            assert!(err <= 50.0 / grid as f64, "grid {grid}: {err}");
        }
    }

    #[test]
    fn t_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_fn(64, &mut rng);
        let g = random_fn(64, &mut rng);
        let lhs = apply_t(&f.add(&g).unwrap());
        let rhs = apply_t(&f).add(&apply_t(&g)).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi(0.0, 64).unwrap().max_abs(), 0.0);
        for grid in [256, 1024] {
            let n2 = chi(PI, grid).unwrap().norm().powi(2);
            assert!((n2 - PI).abs() <= TAU / grid as f64, "{n2}");
        }
    }

    #[test]
    fn eigen_residual_rejects_zero() {
        assert!(eigen_residual(0.0, 256).is_err());
        assert!(eigen_residual(TAU, 256).is_err());
    }

    #[test]
    fn eigen_residual_converges() {
        for lambda in [TAU / 3.0, PI, TAU * 0.811] {
            let r = eigen_residual(lambda, 4096).unwrap();
            assert!(r <= 0.05, "{r}");
            let mut prev = eigen_residual(lambda, 1024).unwrap();
            for grid in [2048, 4096] {
                let cur = eigen_residual(lambda, grid).unwrap();
                assert!(cur <= 0.75 * prev, "λ = {lambda}, grid {grid}: {cur} vs {prev}");
                prev = cur;
            }
        }
    }

    #[test]
    fn eigen_residual_decays_on_test_set() {
        for k in 0..16 {
            let lambda = TAU * (k as f64 + 0.37) / 16.0;
            let mut prev = eigen_residual(lambda, 512).unwrap();
            for grid in [1024, 2048, 4096] {
                let cur = eigen_residual(lambda, grid).unwrap();
                assert!(cur <= 0.75 * prev, "λ = {lambda}, grid {grid}");
                prev = cur;
            }
        }
    }

    #[test]
    fn corrected_eigenvector_is_exact() {
        for lambda in [1.0, PI, 5.5, 1e-4] {
            let (k, e) = corrected_eigenvector(lambda, 512).unwrap();
            let r = eigen_residual_of(&e, grid_angle(k, 512)).unwrap();
            assert!(r < 1e-8, "λ = {lambda}: {r}");
        }
    }

    #[test]
    fn inverse_matches_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_fn(256, &mut rng);
        let back = apply_t_inverse(&apply_t(&f)).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn matrix_agrees_with_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = KalishMatrix::new(256).unwrap();
        for f in [one(256), random_fn(256, &mut rng)] {
            let a = m.apply(&f).unwrap();
            let b = apply_t(&f);
            assert!(a.sub(&b).unwrap().max_abs() < 1e-12);
        }
        // lower triangular: nothing above the diagonal
        let mat = m.matrix();
        for k in 0..256 {
            for j in k + 1..256 {
                assert_eq!(mat[(k, j)], Complex64::new(0.0, 0.0));
            }
            assert!((mat[(k, k)].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn matrix_solve_recovers() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = KalishMatrix::new(512).unwrap();
        let f = random_fn(512, &mut rng);
        let x = m.solve(&apply_t(&f)).unwrap();
        assert!(x.sub(&f).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn matrix_size_bound() {
        assert!(matches!(
            KalishMatrix::new(8192),
            Err(LabError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn operator_norm_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let f = random_fn(256, &mut rng);
            assert!(apply_t(&f).norm() <= (1.0 + TAU) * f.norm());
        }
    }

    #[test]
    fn json_round_trip() {
        let f = chi(2.0, 16).unwrap();
        let text = f.to_json().unwrap();
        assert!(text.contains("\"schema\":\"circle-function/1\""));
        assert_eq!(CircleFunction::from_json(&text).unwrap(), f);
    }
}
