//! Classification harness: runs the probe suite per system and checks the
//! rows against the implication order
//! chaotic ⇒ M ⇒ E ⇒ syndetic ⇒ weak-mixing-compatible, UFH ⇒ syndetic.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::probes::{
    eigen_span_probe, random_unit, invariant_mixture_probe, kalish_model, periodic_density_probe, shift_gaussian_invariance,
    syndetic_probe, three_open_sets_probe, transitive_start, visit_density_probe,
};
use super::{orbit, BallSpec, State, SystemSpec};
use crate::error::{LabError, Result};
use crate::gauss::invariance_check;
use crate::kalish::KalishOperator;
use crate::rng::{derive_seed, rng_for};
use crate::schema;
use crate::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    Exact,
    Statistical,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub verdict: Verdict,
    pub grade: Grade,
    /// Number of orbit states or samples the verdict rests on.
    pub window: usize,
    pub seed: u64,
    pub evidence: Value,
}

fn outcome<T: Serialize>(verdict: Verdict, grade: Grade, window: usize, seed: u64, report: &T) -> Result<ProbeOutcome> {
    Ok(ProbeOutcome {
        verdict,
        grade,
        window,
        seed,
        evidence: serde_json::to_value(report)?,
    })
}

/// Turns "no transitive-looking orbit" into an inconclusive outcome; every
/// other error propagates.
fn reported(r: Result<ProbeOutcome>, grade: Grade, window: usize, seed: u64) -> Result<ProbeOutcome> {
    match r {
        Err(LabError::NoTransitiveOrbit(msg)) => Ok(ProbeOutcome {
            verdict: Verdict::Inconclusive,
            grade,
            window,
            seed,
            evidence: serde_json::json!({ "error": format!("no transitive-looking orbit found: {msg}") }),
        }),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSettings {
    /// Gaussian nodes for the Kalish model.
    pub nodes: usize,
    pub eigen_count: usize,
    pub eigen_tolerance: f64,
    pub periodic_tolerance: f64,
    pub invariance_samples: usize,
    pub invariance_tolerance: f64,
    /// Allowed certified gap as a fraction of the window.
    pub gap_fraction: f64,
    pub density_threshold: f64,
    pub mixture_components: usize,
    pub mixture_steps: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            nodes: 8,
            eigen_count: 64,
            eigen_tolerance: 1e-8,
            periodic_tolerance: 1e-6,
            invariance_samples: 10_000,
            invariance_tolerance: 0.05,
            gap_fraction: 0.125,
            density_threshold: 0.002,
            mixture_components: 4,
            mixture_steps: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemEntry {
    pub name: String,
    pub spec: SystemSpec,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationConfig {
    pub seed: u64,
    #[serde(default)]
    pub settings: ProbeSettings,
    #[serde(default)]
    pub systems: Vec<SystemEntry>,
}

impl ClassificationConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        let bad = |m: &str| Err(LabError::Config(m.into()));
        if s.nodes == 0 || s.eigen_count == 0 || s.invariance_samples == 0 || s.mixture_components == 0 {
            return bad("probe counts must be >= 1");
        }
        if s.mixture_steps < 2 {
            return bad("mixture_steps must be >= 2");
        }
        for (name, v) in [
            ("eigen_tolerance", s.eigen_tolerance),
            ("periodic_tolerance", s.periodic_tolerance),
            ("invariance_tolerance", s.invariance_tolerance),
            ("gap_fraction", s.gap_fraction),
            ("density_threshold", s.density_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LabError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let mut names: Vec<&str> = self.systems.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("system names must be unique");
        }
        for e in &self.systems {
            if e.name.is_empty() {
                return bad("system names must be nonempty");
            }
            if e.steps < 16 {
                return Err(LabError::Config(format!("system {} needs at least 16 steps", e.name)));
            }
            e.spec.validate()?;
            if let SystemSpec::TorusRotation { angles } = &e.spec {
                if angles.iter().any(|a| !(0.0..crate::TAU).contains(a)) {
                    return Err(LabError::Config(format!("rotation angles of {} must lie in [0, 2π)", e.name)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationRow {
    pub name: String,
    pub system: SystemSpec,
    pub seed: u64,
    pub chaotic: ProbeOutcome,
    pub m: ProbeOutcome,
    pub e: ProbeOutcome,
    pub syndetic: ProbeOutcome,
    pub weak_mixing: ProbeOutcome,
    pub ufh: ProbeOutcome,
    pub lfh: ProbeOutcome,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub schema: String,
    pub seed: u64,
    pub settings: ProbeSettings,
    pub rows: Vec<ClassificationRow>,
    pub note: String,
}

impl ClassificationReport {
    pub fn flagged(&self) -> usize {
        self.rows.iter().map(|r| r.flags.len()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per system; each probe cell reads `verdict/grade`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,kind,chaotic,m,e,syndetic,weak_mixing,ufh,lfh,flags\n");
        for r in &self.rows {
            let cell = |o: &ProbeOutcome| {
                format!(
                    "{}/{}",
                    serde_json::to_value(o.verdict).unwrap().as_str().unwrap(),
                    serde_json::to_value(o.grade).unwrap().as_str().unwrap()
                )
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.name,
                r.system.label(),
                cell(&r.chaotic),
                cell(&r.m),
                cell(&r.e),
                cell(&r.syndetic),
                cell(&r.weak_mixing),
                cell(&r.ufh),
                cell(&r.lfh),
                r.flags.len()
            ));
        }
        out
    }
}

/// Implication violations within equal grades: a premise `yes` with a
/// conclusion `no`. The step syndetic ⇒ weak-mixing-compatible is a theorem
/// about linear systems only, so it is not checked for rotations.
pub fn implication_flags(row: &ClassificationRow) -> Vec<String> {
    let chain: [(&str, &ProbeOutcome); 5] = [
        ("chaotic", &row.chaotic),
        ("m", &row.m),
        ("e", &row.e),
        ("syndetic", &row.syndetic),
        ("weak_mixing", &row.weak_mixing),
    ];
    let linear = row.system.is_linear();
    let mut pairs = Vec::new();
    for i in 0..chain.len() {
        for j in i + 1..chain.len() {
            if chain[j].0 == "weak_mixing" && !linear {
                continue;
            }
            pairs.push((chain[i], chain[j]));
        }
    }
    pairs.push((("ufh", &row.ufh), ("syndetic", &row.syndetic)));
    if linear {
        pairs.push((("ufh", &row.ufh), ("weak_mixing", &row.weak_mixing)));
    }
    pairs
        .into_iter()
        .filter(|((_, a), (_, b))| a.grade == b.grade && a.verdict == Verdict::Yes && b.verdict == Verdict::No)
        .map(|((na, a), (nb, _))| {
            format!(
                "{na} => {nb} violated at grade {}: discretization anomaly",
                serde_json::to_value(a.grade).unwrap().as_str().unwrap()
            )
        })
        .collect()
}

/// Probe balls `(U, V, W₀)` for a system.
fn probe_balls(spec: &SystemSpec, steps: usize, nodes: usize, seed: u64) -> Result<(BallSpec, BallSpec, BallSpec)> {
    let mut rng = rng_for(seed, "probe-balls");
    match spec {
        SystemSpec::TorusRotation { angles } => {
            let k = angles.len();
            let r = 0.6 * (k as f64).sqrt();
            let mut point =
                || -> State { (0..k).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * crate::TAU)).collect() };
            let u = BallSpec::new(point(), r)?;
            let v = BallSpec::new(point(), r)?;
            Ok((u, v, BallSpec::origin(k, 0.5)?))
        }
        SystemSpec::Kalish { .. } => {
            // centres on the probed orbit itself, a third and two thirds in
            let x0 = transitive_start(spec, &[], steps, nodes, derive_seed(seed, "orbit"))?;
            let traj = orbit(spec, &x0, steps)?;
            let r = 0.5 * spec.norm(&x0);
            let u = BallSpec::new(traj.states()[steps / 3].clone(), r)?;
            let v = BallSpec::new(traj.states()[2 * steps / 3].clone(), r)?;
            Ok((u, v, BallSpec::origin(x0.len(), r)?))
        }
        _ => {
            let dim = spec.dim();
            let u = BallSpec::new(random_unit(dim, &mut rng), 0.25)?;
            let v = BallSpec::new(random_unit(dim, &mut rng), 0.25)?;
            Ok((u, v, BallSpec::origin(dim, 0.25)?))
        }
    }
}

fn classify_system(entry: &SystemEntry, settings: &ProbeSettings, seed: u64) -> Result<ClassificationRow> {
    let spec = &entry.spec;
    let steps = entry.steps;
    let s = settings;
    let (u, v, w0) = probe_balls(spec, steps, s.nodes, seed)?;

    let chaotic_seed = derive_seed(seed, "chaotic");
    let periodic = periodic_density_probe(spec, s.periodic_tolerance, chaotic_seed)?;
    let chaotic = outcome(periodic.verdict, Grade::Heuristic, periodic.period.unwrap_or(0), chaotic_seed, &periodic)?;

    let m_seed = derive_seed(seed, "eigen-span");
    let span = eigen_span_probe(spec, s.eigen_count, s.eigen_tolerance)?;
    let m = outcome(span.verdict, Grade::Heuristic, span.vectors, m_seed, &span)?;

    let e_seed = derive_seed(seed, "invariant-measure");
    let e = match spec {
        SystemSpec::TorusRotation { .. } => {
            let r = invariant_mixture_probe(spec, s.mixture_components, s.mixture_steps, e_seed)?;
            outcome(r.verdict, Grade::Heuristic, s.mixture_steps, e_seed, &r)?
        }
        SystemSpec::Kalish { grid } => {
            let model = kalish_model(*grid, s.nodes)?;
            let r = invariance_check(&model, &KalishOperator { grid: *grid }, s.invariance_samples, e_seed, s.invariance_tolerance)?;
            let verdict = if r.pass { Verdict::Yes } else { Verdict::No };
            outcome(verdict, Grade::Statistical, s.invariance_samples, e_seed, &r)?
        }
        _ => match shift_gaussian_invariance(spec, s.nodes, s.invariance_samples, e_seed, s.invariance_tolerance)? {
            Some(r) => {
                let verdict = if r.pass { Verdict::Yes } else { Verdict::No };
                outcome(verdict, Grade::Statistical, s.invariance_samples, e_seed, &r)?
            }
            None => outcome(
                Verdict::Inconclusive,
                Grade::Statistical,
                0,
                e_seed,
                &serde_json::json!({ "note": "no evidence: no unimodular eigenvectors to carry a Gaussian measure" }),
            )?,
        },
    };

    // one transitive-looking orbit shared by the visit-based probes
    let orbit_seed = derive_seed(seed, "orbit");
    let traj = transitive_start(spec, &[&u, &w0, &v, &w0], steps, s.nodes, orbit_seed)
        .and_then(|x0| orbit(spec, &x0, steps));
    let window = steps + 1;
    let (syndetic, ufh, lfh) = match traj {
        Ok(traj) => {
            let syn = syndetic_probe(&traj, &u, s.gap_fraction)?;
            let dens = visit_density_probe(&traj, &u, s.density_threshold)?;
            (
                outcome(syn.verdict, Grade::Heuristic, window, orbit_seed, &syn)?,
                outcome(dens.ufh, Grade::Heuristic, window, orbit_seed, &dens)?,
                outcome(dens.lfh, Grade::Heuristic, window, orbit_seed, &dens)?,
            )
        }
        Err(err @ LabError::NoTransitiveOrbit(_)) => {
            let o = reported(Err(err), Grade::Heuristic, window, orbit_seed)?;
            (o.clone(), o.clone(), o)
        }
        Err(err) => return Err(err),
    };

    let wm_seed = orbit_seed;
    let wm = reported(
        three_open_sets_probe(spec, &u, &v, &w0, steps, s.nodes, wm_seed)
            .and_then(|r| outcome(r.verdict, Grade::Heuristic, window, wm_seed, &r)),
        Grade::Heuristic,
        window,
        wm_seed,
    )?;

    let mut row = ClassificationRow {
        name: entry.name.clone(),
        system: spec.clone(),
        seed,
        chaotic,
        m,
        e,
        syndetic,
        weak_mixing: wm,
        ufh,
        lfh,
        flags: Vec::new(),
    };
    row.flags = implication_flags(&row);
    Ok(row)
}

/// The reference trio: an irrational torus rotation, `2B` and the Kalish
/// operator with its Gaussian model.
pub fn standard_systems() -> Vec<SystemEntry> {
    vec![
        SystemEntry {
            name: "torus".into(),
            spec: SystemSpec::TorusRotation {
                angles: vec![TAU * (2f64.sqrt() - 1.0), TAU * (3f64.sqrt() - 1.0)],
            },
            steps: 4000,
        },
        SystemEntry {
            name: "shift".into(),
            spec: SystemSpec::ScalarMultipleShift { lambda: 2.0, dim: 24 },
            steps: 960,
        },
        SystemEntry {
            name: "kalish".into(),
            spec: SystemSpec::Kalish { grid: 256 },
            steps: 2048,
        },
    ]
}

/// Runs every probe on every configured system.
pub fn classification_run(config: &ClassificationConfig) -> Result<ClassificationReport> {
    config.validate()?;
    let rows = config
        .systems
        .iter()
        .map(|e| classify_system(e, &config.settings, derive_seed(config.seed, &e.name)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassificationReport {
        schema: schema::CLASSIFICATION.into(),
        seed: config.seed,
        settings: config.settings.clone(),
        rows,
        note: "window evidence from finite orbits and finite test families; Birkhoff diagnostics are weaker than genericity".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TAU;

    fn outcome_of(v: Verdict, g: Grade) -> ProbeOutcome {
        ProbeOutcome {
            verdict: v,
            grade: g,
            window: 1,
            seed: 0,
            evidence: Value::Null,
        }
    }

    #[test]
    fn empty_config_gives_empty_report() {
        let r = classification_run(&ClassificationConfig {
            seed: 1,
            settings: ProbeSettings::default(),
            systems: vec![],
        })
        .unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.schema, "classification/1");
    }

    #[test]
    fn flags_compare_within_grades() {
        use Grade::*;
        use Verdict::*;
        let mut row = ClassificationRow {
            name: "x".into(),
            system: SystemSpec::Kalish { grid: 16 },
            seed: 0,
            chaotic: outcome_of(No, Heuristic),
            m: outcome_of(Yes, Heuristic),
            e: outcome_of(No, Statistical),
            syndetic: outcome_of(No, Heuristic),
            weak_mixing: outcome_of(Inconclusive, Heuristic),
            ufh: outcome_of(No, Heuristic),
            lfh: outcome_of(No, Heuristic),
            flags: vec![],
        };
        let f = implication_flags(&row);
        assert_eq!(f.len(), 1);
        assert!(f[0].starts_with("m => syndetic"));
        row.syndetic = outcome_of(Yes, Heuristic);
        row.weak_mixing = outcome_of(No, Heuristic);
        assert_eq!(implication_flags(&row).len(), 2);
        row.system = SystemSpec::TorusRotation { angles: vec![1.0] };
        assert!(implication_flags(&row).is_empty());
    }

    #[test]
    fn validation_rejects_duplicates_and_bad_angles() {
        let entry = |name: &str, spec| SystemEntry {
            name: name.into(),
            spec,
            steps: 100,
        };
        let mut c = ClassificationConfig {
            seed: 0,
            settings: ProbeSettings::default(),
            systems: vec![
                entry("a", SystemSpec::Kalish { grid: 16 }),
                entry("a", SystemSpec::Kalish { grid: 16 }),
            ],
        };
        assert!(c.validate().is_err());
        c.systems = vec![entry("a", SystemSpec::TorusRotation { angles: vec![TAU] })];
        assert!(c.validate().is_err());
    }
}
