//! Orbit simulation over a small zoo of systems, visit-time extraction and
//! the probes behind the classification harness.
//!
//! States are complex vectors. The Kalish system acts on grid samples with
//! the arc-length norm; shifts and torus rotations use the Euclidean norm.
//!
//! Backward shifts are simulated on a finite buffer: a state of length `L`
//! is a finitely supported vector, and one step moves every coordinate one
//! slot towards the front (scaled by its weight) and feeds a zero in at the
//! back. This is exact for as many steps as the buffer has coordinates
//! beyond the observed dimension.

mod classify;
mod probes;

pub use classify::{
    classification_run, implication_flags, ClassificationConfig, ClassificationReport, ClassificationRow,
    Grade, ProbeOutcome, ProbeSettings, SystemEntry, Verdict, standard_systems,
};
pub use probes::{
    birkhoff_probe, eigen_span_probe, gaussian_birkhoff_comparison, hitting_times, invariant_mixture_probe,
    kalish_model, periodic_density_probe, return_set_identity_check, return_set_identity_check_with,
    shift_gaussian_invariance, shift_seed_vector, syndetic_probe, three_open_sets_probe, transitive_start,
    visit_density_probe, BirkhoffComparison, BirkhoffReport, EigenSpanReport, MixtureReport, PeriodicReport,
    ReturnSetReport, SyndeticReport, TestFunction, ThreeSetsReport, VisitDensityReport,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::kalish::{apply_t, MIN_GRID};
use crate::TAU;

pub type State = Vec<Complex64>;

/// Norm-ratio guard for bounded systems.
pub const DRIFT_LIMIT: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Kalish {
        grid: usize,
    },
    /// Backward shift `(Bx)_i = w_{i+1} x_{i+1}`; the last listed weight
    /// repeats forever.
    WeightedShift {
        dim: usize,
        weights: Vec<f64>,
    },
    ScalarMultipleShift {
        lambda: f64,
        dim: usize,
    },
    TorusRotation {
        angles: Vec<f64>,
    },
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::InvalidArgument(m));
        match self {
            Self::Kalish { grid } if *grid < MIN_GRID => bad(format!("kalish grid {grid} is below {MIN_GRID}")),
            Self::WeightedShift { dim, weights } => {
                if *dim == 0 {
                    return bad("shift dimension must be >= 1".into());
                }
                if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return bad("shift weights must be a nonempty list of positive numbers".into());
                }
                Ok(())
            }
            Self::ScalarMultipleShift { lambda, dim } => {
                if *dim == 0 {
                    return bad("shift dimension must be >= 1".into());
                }
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return bad(format!("shift multiplier {lambda} must be positive"));
                }
                Ok(())
            }
            Self::TorusRotation { angles } => {
                if angles.is_empty() {
                    return bad("torus needs at least one angle".into());
                }
                if angles.iter().any(|a| !(*a >= 0.0 && *a < TAU)) {
                    return bad("rotation angles must lie in [0, 2π)".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Short label used in artifact names.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Kalish { .. } => "kalish",
            Self::WeightedShift { .. } => "weighted_shift",
            Self::ScalarMultipleShift { .. } => "scalar_multiple_shift",
            Self::TorusRotation { .. } => "torus_rotation",
        }
    }

    /// Linear systems fix 0; torus rotations act on the torus, not a vector
    /// space.
    pub fn is_linear(&self) -> bool {
        !matches!(self, Self::TorusRotation { .. })
    }

    pub fn is_shift(&self) -> bool {
        matches!(self, Self::WeightedShift { .. } | Self::ScalarMultipleShift { .. })
    }

    /// Observed dimension: grid size, shift window, or torus dimension.
    pub fn dim(&self) -> usize {
        match self {
            Self::Kalish { grid } => *grid,
            Self::WeightedShift { dim, .. } | Self::ScalarMultipleShift { dim, .. } => *dim,
            Self::TorusRotation { angles } => angles.len(),
        }
    }

    /// Weight `w_i` (1-based) of a shift.
    pub fn weight(&self, i: usize) -> f64 {
        match self {
            Self::WeightedShift { weights, .. } => weights[(i.max(1) - 1).min(weights.len() - 1)],
            Self::ScalarMultipleShift { lambda, .. } => *lambda,
            _ => 1.0,
        }
    }

    fn check_state(&self, x: &[Complex64]) -> Result<()> {
        let ok = match self {
            Self::Kalish { grid } => x.len() == *grid,
            Self::TorusRotation { angles } => x.len() == angles.len(),
            _ => x.len() >= self.dim(),
        };
        if !ok {
            return Err(LabError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn step(&self, x: &[Complex64]) -> State {
        match self {
            Self::Kalish { grid } => {
                let f = crate::kalish::CircleFunction::new(x.to_vec()).expect("finite state");
                debug_assert_eq!(f.grid(), *grid);
                apply_t(&f).into_values()
            }
            Self::TorusRotation { angles } => x
                .iter()
                .zip(angles)
                .map(|(z, a)| z * Complex64::from_polar(1.0, *a))
                .collect(),
            _ => {
                let n = x.len();
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for i in 0..n - 1 {
                    out[i] = x[i + 1] * self.weight(i + 1);
                }
                out
            }
        }
    }

    pub fn norm(&self, x: &[Complex64]) -> f64 {
        let s: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        match self {
            Self::Kalish { grid } => (s * TAU / *grid as f64).sqrt(),
            _ => s.sqrt(),
        }
    }

    /// `‖x − c‖`, with `c` padded by zeros when shorter than `x`.
    pub fn distance(&self, x: &[Complex64], center: &[Complex64]) -> f64 {
        let s: f64 = x
            .iter()
            .enumerate()
            .map(|(i, v)| (v - center.get(i).copied().unwrap_or_default()).norm_sqr())
            .sum();
        match self {
            Self::Kalish { grid } => (s * TAU / *grid as f64).sqrt(),
            _ => s.sqrt(),
        }
    }

    fn drift_limit(&self) -> f64 {
        if self.is_shift() {
            // hypercyclic orbits are unbounded by design; only finiteness
            // is guarded
            f64::INFINITY
        } else {
            DRIFT_LIMIT
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    spec: SystemSpec,
    states: Vec<State>,
}

impl Trajectory {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    /// Number of states, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// `[x0, T x0, …, Tⁿ x0]` with the norm-drift guard active.
pub fn orbit(spec: &SystemSpec, x0: &[Complex64], n_steps: usize) -> Result<Trajectory> {
    spec.validate()?;
    spec.check_state(x0)?;
    if x0.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LabError::InvalidArgument("initial state must be finite".into()));
    }
    if spec.is_shift() && n_steps + spec.dim() > x0.len() {
        return Err(LabError::InvalidArgument(format!(
            "shift buffer of length {} supports at most {} steps",
            x0.len(),
            x0.len() - spec.dim()
        )));
    }
    let base = spec.norm(x0);
    let limit = spec.drift_limit();
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(x0.to_vec());
    for step in 1..=n_steps {
        let next = spec.step(&states[step - 1]);
        let norm = spec.norm(&next);
        if !norm.is_finite() {
            return Err(LabError::DriftGuard {
                step,
                ratio: f64::INFINITY,
            });
        }
        if base > 0.0 && norm / base > limit {
            return Err(LabError::DriftGuard {
                step,
                ratio: norm / base,
            });
        }
        states.push(next);
    }
    Ok(Trajectory {
        spec: spec.clone(),
        states,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: State,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: State, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(LabError::InvalidArgument(format!("ball radius {radius} must be positive")));
        }
        Ok(Self { center, radius })
    }

    pub fn origin(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); dim], radius)
    }

    /// Ball on the unit circle whose trace is the open arc of length
    /// `length` centred at `angle`.
    pub fn arc(angle: f64, length: f64) -> Result<Self> {
        if !(length > 0.0 && length < TAU) {
            return Err(LabError::InvalidArgument(format!("arc length {length} must lie in (0, 2π)")));
        }
        Self::new(vec![Complex64::from_polar(1.0, angle)], 2.0 * (length / 4.0).sin())
    }

    pub fn contains(&self, spec: &SystemSpec, x: &[Complex64]) -> bool {
        spec.distance(x, &self.center) < self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(n: usize) -> State {
        vec![Complex64::new(0.0, 0.0); n]
    }

    #[test]
    fn zero_is_fixed_for_linear_systems() {
        for spec in [
            SystemSpec::Kalish { grid: 64 },
            SystemSpec::ScalarMultipleShift { lambda: 2.0, dim: 8 },
            SystemSpec::WeightedShift {
                dim: 4,
                weights: vec![3.0, 0.5],
            },
        ] {
            let n = if spec.is_shift() { 40 } else { spec.dim() };
            let t = orbit(&spec, &zeros(n), 20).unwrap();
            assert!(t.states().iter().all(|s| s.iter().all(|v| *v == Complex64::new(0.0, 0.0))));
        }
    }

    #[test]
    fn torus_is_an_isometry() {
        let spec = SystemSpec::TorusRotation {
            angles: vec![0.3, 1.7, 2.9],
        };
        let x0: State = [0.1, 2.0, 4.0].iter().map(|a| Complex64::from_polar(1.0, *a)).collect();
        let t = orbit(&spec, &x0, 1000).unwrap();
        let n0 = spec.norm(&x0);
        assert!(t.states().iter().all(|s| (spec.norm(s) - n0).abs() < 1e-12));
    }

    #[test]
    fn shift_moves_coordinates_forward() {
        let spec = SystemSpec::WeightedShift {
            dim: 2,
            weights: vec![2.0, 3.0],
        };
        let x: State = (1..=4).map(|v| Complex64::new(v as f64, 0.0)).collect();
        let y = spec.step(&x);
        // (Bx)_0 = w_1 x_1, (Bx)_i = w_2 x_{i+1} afterwards
        assert_eq!(y, vec![4.0, 9.0, 12.0, 0.0].into_iter().map(|v| Complex64::new(v, 0.0)).collect::<State>());
        assert!(orbit(&spec, &x, 3).is_err());
    }

    #[test]
    fn validation() {
        assert!(SystemSpec::Kalish { grid: 4 }.validate().is_err());
        assert!(SystemSpec::TorusRotation { angles: vec![7.0] }.validate().is_err());
        assert!(SystemSpec::WeightedShift { dim: 3, weights: vec![] }.validate().is_err());
        assert!(SystemSpec::ScalarMultipleShift { lambda: -1.0, dim: 3 }.validate().is_err());
        assert!(orbit(&SystemSpec::Kalish { grid: 64 }, &zeros(32), 1).is_err());
    }

    #[test]
    fn spec_serialization() {
        let s = SystemSpec::ScalarMultipleShift { lambda: 2.0, dim: 24 };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"kind":"scalar_multiple_shift","lambda":2.0,"dim":24}"#);
        assert_eq!(serde_json::from_str::<SystemSpec>(&j).unwrap(), s);
    }

    #[test]
    fn arc_ball() {
        let b = BallSpec::arc(0.0, 1.0).unwrap();
        let spec = SystemSpec::TorusRotation { angles: vec![0.1] };
        assert!(b.contains(&spec, &[Complex64::from_polar(1.0, 0.49)]));
        assert!(!b.contains(&spec, &[Complex64::from_polar(1.0, 0.51)]));
        assert!(BallSpec::new(vec![], 0.0).is_err());
    }
}
