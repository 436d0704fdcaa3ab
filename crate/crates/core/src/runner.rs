//! Executes an [`ExperimentConfig`] and writes its artifacts.
//!
//! Layout under the output directory:
//!
//! ```text
//! reports/<probe>-<subject>-<seed>.json   probe report documents
//! tables/<probe>-<subject>-<seed>.csv     tabular view of each report
//! plotdata/<probe>-<subject>-<seed>.dat   whitespace-delimited columns
//! reports/summary-run-<seed>.json         every check and the exit status
//! meta.json                               timestamp sidecar
//! ```
//!
//! Everything except `meta.json` is a pure function of the config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BallConfig, ExperimentConfig, ProbeConfig};
use crate::error::{LabError, Result};
use crate::gauss::{build_model, invariance_check, invariance_negative_control, intertwine_residual, EigenField, VectorKind};
use crate::hits::{difference_set, lower_density, max_gap, upper_banach_density, upper_density};
use crate::kalish::{eigen_residual, KalishOperator};
use crate::lab::{
    classification_run, hitting_times, orbit, return_set_identity_check_with, transitive_start, BallSpec,
    ClassificationConfig, Grade, SystemSpec,
};
use crate::measure::{dirichlet_probe, mild_mixing_probe, rajchman_probe, CircleMeasure};
use crate::rng::derive_seed;
use crate::schema;

/// One pass/fail statement inside a probe report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub grade: Grade,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, grade: Grade, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            grade,
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeArtifact {
    pub probe: String,
    pub subject: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub report: Value,
    pub table: String,
    pub plot: String,
}

impl ProbeArtifact {
    pub fn stem(&self) -> String {
        format!("{}-{}-{}", self.probe, sanitize(&self.subject), self.seed)
    }

    /// The `probe-report/1` document.
    pub fn document(&self) -> Result<String> {
        let doc = json!({
            "schema": schema::PROBE_REPORT,
            "probe": self.probe,
            "subject": self.subject,
            "seed": self.seed,
            "checks": self.checks,
            "report": self.report,
        });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema: String,
    pub seed: u64,
    pub probes: usize,
    pub checks: Vec<SummaryLine>,
    /// Failed exact-grade checks, as `probe/subject: check`.
    pub exact_failures: Vec<String>,
    pub exit_status: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryLine {
    pub probe: String,
    pub subject: String,
    pub check: String,
    pub grade: Grade,
    pub pass: bool,
}

impl RunSummary {
    fn new(seed: u64, artifacts: &[ProbeArtifact]) -> Self {
        let mut checks = Vec::new();
        let mut failures = Vec::new();
        for a in artifacts {
            for c in &a.checks {
                if c.grade == Grade::Exact && !c.pass {
                    failures.push(format!("{}/{}: {}", a.probe, a.subject, c.name));
                }
                checks.push(SummaryLine {
                    probe: a.probe.clone(),
                    subject: a.subject.clone(),
                    check: c.name.clone(),
                    grade: c.grade,
                    pass: c.pass,
                });
            }
        }
        let exit_status = i32::from(!failures.is_empty());
        Self {
            schema: schema::PROBE_REPORT.into(),
            seed,
            probes: artifacts.len(),
            checks,
            exact_failures: failures,
            exit_status,
        }
    }
}

fn complex_rows(coeffs: &[(i64, Complex64)]) -> (String, String) {
    let mut table = String::from("n,re,im,abs\n");
    let mut plot = String::from("# n re im abs\n");
    for (n, c) in coeffs {
        let _ = writeln!(table, "{n},{},{},{}", c.re, c.im, c.norm());
        let _ = writeln!(plot, "{n} {} {} {}", c.re, c.im, c.norm());
    }
    (table, plot)
}

/// Largest usable frequency for a measure: its band limit when it has a
/// density part.
fn usable_window(m: &CircleMeasure, window: i64) -> i64 {
    if m.has_density() {
        window.min(m.band_limit())
    } else {
        window
    }
}

fn ball(spec: &SystemSpec, b: &BallConfig) -> Result<BallSpec> {
    match b {
        BallConfig::Arc { angle, length } => match spec {
            SystemSpec::TorusRotation { angles } if angles.len() == 1 => BallSpec::arc(*angle, *length),
            _ => Err(LabError::Config("arc balls need a one-angle torus rotation".into())),
        },
        BallConfig::Origin { radius } => {
            let dim = match spec {
                SystemSpec::Kalish { grid } => *grid,
                _ => spec.dim(),
            };
            BallSpec::origin(dim, *radius)
        }
    }
}

fn run_probe(config: &ExperimentConfig, probe: &ProbeConfig, base: &Path) -> Result<ProbeArtifact> {
    let seed = config.seed;
    let mut art = ProbeArtifact {
        probe: probe.name().into(),
        subject: String::new(),
        seed,
        checks: Vec::new(),
        report: Value::Null,
        table: String::new(),
        plot: String::new(),
    };
    match probe {
        ProbeConfig::Convolve { a, b, window, tolerance } => {
            art.subject = format!("{a}+{b}");
            let (ma, mb) = (config.measure(a, base)?, config.measure(b, base)?);
            let conv = ma.convolve(&mb)?;
            let w = usable_window(&conv, *window).min(usable_window(&ma, *window)).min(usable_window(&mb, *window));
            let mut worst: f64 = 0.0;
            let mut rows = Vec::new();
            for n in -w..=w {
                let lhs = conv.fourier_coefficient(n)?;
                let rhs = ma.fourier_coefficient(n)? * mb.fourier_coefficient(n)?;
                worst = worst.max((lhs - rhs).norm());
                rows.push((n, lhs));
            }
            art.checks.push(Check::new(
                "fourier-duality",
                Grade::Exact,
                worst <= *tolerance,
                format!("max |(a*b)^(n) - a^(n) b^(n)| = {worst:e} over |n| <= {w}"),
            ));
            art.report = json!({ "window": w, "max_error": worst, "tolerance": tolerance,
                                 "mass": conv.total_mass(), "measure": serde_json::from_str::<Value>(&conv.to_json()?)? });
            (art.table, art.plot) = complex_rows(&rows);
        }
        ProbeConfig::Exp { measure, tail_tol, window, tolerance } => {
            art.subject = measure.clone();
            let m = config.measure(measure, base)?;
            let e = m.exp_measure(*tail_tol)?;
            let w = usable_window(&e, *window);
            let mut worst: f64 = 0.0;
            let mut rows = Vec::new();
            for n in -w..=w {
                let lhs = e.fourier_coefficient(n)?;
                worst = worst.max((lhs - m.fourier_coefficient(n)?.exp()).norm());
                rows.push((n, lhs));
            }
            art.checks.push(Check::new(
                "exp-identity",
                Grade::Exact,
                worst <= *tolerance,
                format!("max |(exp m)^(n) - e^(m^(n))| = {worst:e} over |n| <= {w}"),
            ));
            art.report = json!({ "window": w, "max_error": worst, "tolerance": tolerance, "tail_tol": tail_tol,
                                 "mass": e.total_mass() });
            (art.table, art.plot) = complex_rows(&rows);
        }
        ProbeConfig::Chaos { measure, tail_tol } => {
            art.subject = measure.clone();
            let m = config.measure(measure, base)?;
            let c = m.normalized_chaos(*tail_tol)?;
            let mass_err = (c.total_mass() - 1.0).abs();
            art.checks.push(Check::new(
                "probability",
                Grade::Exact,
                mass_err <= 1e-9,
                format!("|mass - 1| = {mass_err:e}"),
            ));
            art.report = serde_json::from_str(&c.to_json()?)?;
            art.table = String::from("bin,center,density\n");
            art.plot = String::from("# center density\n");
            for (j, d) in c.density().iter().enumerate() {
                let _ = writeln!(art.table, "{j},{},{d}", c.bin_center(j));
                let _ = writeln!(art.plot, "{} {d}", c.bin_center(j));
            }
        }
        ProbeConfig::Fourier { measure, window } => {
            art.subject = measure.clone();
            let m = config.measure(measure, base)?;
            let w = usable_window(&m, *window);
            let rows: Vec<(i64, Complex64)> =
                (-w..=w).map(|n| Ok((n, m.fourier_coefficient(n)?))).collect::<Result<_>>()?;
            art.report = json!({ "window": w, "coefficients": rows.iter().map(|(n, c)| json!([n, c.re, c.im])).collect::<Vec<_>>() });
            (art.table, art.plot) = complex_rows(&rows);
        }
        ProbeConfig::Mixing { measure, window, epsilon, family_size, delta } => {
            art.subject = measure.clone();
            let m = config.measure(measure, base)?;
            let raj = rajchman_probe(&m, *window, *epsilon)?;
            let dir = dirichlet_probe(&m, *window, *epsilon)?;
            let mild = mild_mixing_probe(&m, *family_size, *window, *delta, derive_seed(seed, "mixing"))?;
            art.table = format!(
                "probe,pass,value\nrajchman,{},{}\ndirichlet,{},{}\nmild_mixing,{},{}\n",
                raj.pass, raj.tail_sup, dir.pass, dir.best_value, mild.pass, mild.worst_limsup
            );
            art.plot = format!("# probe value\n0 {}\n1 {}\n2 {}\n", raj.tail_sup, dir.best_value, mild.worst_limsup);
            art.report = json!({ "rajchman": raj, "dirichlet": dir, "mild_mixing": mild });
        }
        ProbeConfig::KalishResidual { grid, lambdas, threshold } => {
            art.subject = format!("kalish{grid}");
            art.table = String::from("lambda,residual\n");
            art.plot = String::from("# lambda residual\n");
            let mut residuals = Vec::new();
            for l in lambdas {
                let r = eigen_residual(*l, *grid)?;
                let _ = writeln!(art.table, "{l},{r}");
                let _ = writeln!(art.plot, "{l} {r}");
                residuals.push(r);
            }
            let worst = residuals.iter().copied().fold(0.0, f64::max);
            art.checks.push(Check::new(
                "residual-threshold",
                Grade::Exact,
                worst <= *threshold,
                format!("max residual {worst:e} against {threshold:e}"),
            ));
            art.report = json!({ "grid": grid, "lambdas": lambdas, "residuals": residuals, "threshold": threshold });
        }
        ProbeConfig::GaussInvariance { measure, grid, nodes, samples, tolerance, residual_threshold, control_modulus } => {
            art.subject = measure.clone();
            let m = config.measure(measure, base)?;
            let field = EigenField::from_measure(&m, *nodes, *grid, VectorKind::Corrected, *residual_threshold)?;
            let model = build_model(field)?;
            let op = KalishOperator { grid: *grid };
            let rho = intertwine_residual(&model, &op)?;
            let inv = invariance_check(&model, &op, *samples, derive_seed(seed, "invariance"), *tolerance)?;
            art.checks.push(Check::new(
                "invariance",
                Grade::Statistical,
                inv.pass,
                format!("covariance distance {:e} against {:e}", inv.cov_distance, inv.stat_tol + inv.intertwine_budget),
            ));
            let mut control = Value::Null;
            if let Some(modulus) = control_modulus {
                let c = invariance_negative_control(&model, *modulus, *samples, derive_seed(seed, "invariance"), *tolerance)?;
                art.checks.push(Check::new(
                    "negative-control-rejected",
                    Grade::Statistical,
                    !c.pass,
                    format!("modulus {modulus}: covariance distance {:e}", c.cov_distance),
                ));
                control = serde_json::to_value(&c)?;
            }
            art.table = format!(
                "quantity,value\nintertwine_residual,{rho}\ncov_distance,{}\nmin_singular_value,{}\n",
                inv.cov_distance,
                model.min_singular_value()
            );
            art.plot = String::from("# node angle weight residual\n");
            for (j, (n, r)) in model.field().nodes().iter().zip(model.field().residuals()).enumerate() {
                let _ = writeln!(art.plot, "{j} {} {} {r}", n.angle, n.weight);
            }
            art.report = json!({ "intertwine_residual": rho, "invariance": inv, "negative_control": control,
                                 "min_singular_value": model.min_singular_value() });
        }
        ProbeConfig::ReturnSet { system, ball: visit, check_ball, min_len } => {
            art.subject = system.clone();
            let entry = config.systems.iter().find(|s| &s.name == system).expect("validated");
            let spec = &entry.spec;
            let visit_ball = ball(spec, visit)?;
            let check = match check_ball {
                Some(c) => ball(spec, c)?,
                None => visit_ball.clone(),
            };
            let x0 = match spec {
                // a fixed start keeps the orbit reproducible across seeds
                SystemSpec::TorusRotation { angles } => vec![Complex64::new(1.0, 0.0); angles.len()],
                _ => transitive_start(spec, &[&visit_ball], entry.steps, 8, derive_seed(seed, system))?,
            };
            let traj = orbit(spec, &x0, entry.steps)?;
            let visits = hitting_times(&traj, &visit_ball)?;
            let rs = return_set_identity_check_with(&traj, &visit_ball, &check)?;
            let ubd = upper_banach_density(&visits, (*min_len).min(visits.window()))?;
            let diff = difference_set(&visits)?;
            let name = if check_ball.is_some() { "return-set-negative-control" } else { "return-set-identity" };
            art.checks.push(Check::new(
                name,
                Grade::Exact,
                rs.pass,
                match rs.first_failure {
                    Some([l, k]) => format!("witness ({l}, {k}) misses the check ball"),
                    None => format!("{} witnesses verified on replay", rs.witnesses_checked),
                },
            ));
            art.table = format!(
                "quantity,value\nwindow,{}\nvisits,{}\nupper_density,{}\nlower_density,{}\nupper_banach_density,{}\ndifference_set_size,{}\nmax_gap_difference_set,{}\n",
                visits.window(),
                visits.len(),
                upper_density(&visits),
                lower_density(&visits),
                ubd,
                diff.len(),
                max_gap(&diff)
            );
            art.plot = visits.to_text();
            art.report = json!({ "visits": visits, "upper_banach_density": ubd, "min_len": min_len, "return_set": rs });
        }
        ProbeConfig::Classify { settings } => {
            art.subject = "systems".into();
            let report = classification_run(&ClassificationConfig {
                seed,
                settings: settings.clone(),
                systems: config.systems.clone(),
            })?;
            for row in &report.rows {
                art.checks.push(Check::new(
                    &format!("diagram-{}", row.name),
                    Grade::Heuristic,
                    row.flags.is_empty(),
                    if row.flags.is_empty() { "no implication violations".into() } else { row.flags.join("; ") },
                ));
            }
            art.table = report.to_csv();
            art.plot = String::from("# row flags\n");
            for (i, row) in report.rows.iter().enumerate() {
                let _ = writeln!(art.plot, "{i} {}", row.flags.len());
            }
            art.report = serde_json::to_value(&report)?;
        }
    }
    Ok(art)
}

/// Runs every probe. A probe that errors becomes a failed exact check
/// carrying the diagnostic, so one bad probe does not hide the others.
pub fn execute(config: &ExperimentConfig, base: &Path) -> Result<Vec<ProbeArtifact>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.probes.len());
    for (i, p) in config.probes.iter().enumerate() {
        match run_probe(config, p, base) {
            Ok(a) => out.push(a),
            Err(e) => out.push(ProbeArtifact {
                probe: p.name().into(),
                subject: format!("probe{i}"),
                seed: config.seed,
                checks: vec![Check::new("completed", Grade::Exact, false, e.to_string())],
                report: json!({ "error": e.to_string() }),
                table: String::new(),
                plot: String::new(),
            }),
        }
    }
    Ok(out)
}

/// [`execute`] plus artifact writes under `out_dir`. Returns the summary;
/// its `exit_status` is 0 iff every exact-grade check passed.
pub fn run(config: &ExperimentConfig, base: &Path, out_dir: &Path) -> Result<RunSummary> {
    let artifacts = execute(config, base)?;
    let mut written: Vec<PathBuf> = Vec::new();
    for sub in ["reports", "tables", "plotdata"] {
        std::fs::create_dir_all(out_dir.join(sub))?;
    }
    for a in &artifacts {
        let stem = a.stem();
        let files = [
            (out_dir.join("reports").join(format!("{stem}.json")), a.document()?),
            (out_dir.join("tables").join(format!("{stem}.csv")), a.table.clone()),
            (out_dir.join("plotdata").join(format!("{stem}.dat")), a.plot.clone()),
        ];
        for (path, text) in files {
            std::fs::write(&path, text)?;
            written.push(path);
        }
    }
    let summary = RunSummary::new(config.seed, &artifacts);
    let summary_path = out_dir.join("reports").join(format!("summary-run-{}.json", config.seed));
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    written.push(summary_path);
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "created_unix": created,
        "seed": config.seed,
        "files": written.iter().map(|p| p.strip_prefix(out_dir).unwrap_or(p).display().to_string()).collect::<Vec<_>>(),
    });
    std::fs::write(out_dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const MEASURES: &str = r#"
schema = "experiment/1"
seed = 11

[[measures]]
name = "u"
source = { kind = "uniform", bins = 256 }

[[measures]]
name = "d"
source = { kind = "dirac", bins = 256, angle = 1.0, mass = 1.0 }

[[probes]]
probe = "convolve"
a = "u"
b = "d"
tolerance = 1e-6

[[probes]]
probe = "exp"
measure = "d"

[[probes]]
probe = "chaos"
measure = "u"
"#;

    #[test]
    fn measure_only_run() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_config(MEASURES).unwrap();
        let s = run(&c, Path::new("."), dir.path()).unwrap();
        assert_eq!(s.exit_status, 0, "{s:?}");
        assert_eq!(s.probes, 3);
        let reports: Vec<_> = std::fs::read_dir(dir.path().join("reports")).unwrap().collect();
        assert_eq!(reports.len(), 4);
        assert!(dir.path().join("reports/convolve-u_d-11.json").exists());
        assert!(dir.path().join("plotdata/chaos-u-11.dat").exists());
    }

    #[test]
    fn negative_control_fails_the_run() {
        let text = r#"
schema = "experiment/1"
seed = 5

[[systems]]
name = "rot"
steps = 2000
spec = { kind = "torus_rotation", angles = [2.6026577908435840] }

[[probes]]
probe = "return_set"
system = "rot"
ball = { kind = "arc", angle = 0.0, length = 1.2566370614359172 }
check_ball = { kind = "arc", angle = 3.0, length = 1.2566370614359172 }
"#;
        let c = parse_config(text).unwrap();
        let a = execute(&c, Path::new(".")).unwrap();
        let s = RunSummary::new(c.seed, &a);
        assert_eq!(s.exit_status, 1);
        assert_eq!(s.exact_failures, vec!["return-set/rot: return-set-negative-control".to_string()]);
    }

    #[test]
    fn probe_errors_are_reported_not_fatal() {
        let text = MEASURES.replace("measure = \"d\"", "measure = \"d\"\ntail_tol = -1.0");
        let c = parse_config(&text).unwrap();
        let a = execute(&c, Path::new(".")).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a[2].checks[0].pass);
        let s = RunSummary::new(c.seed, &a);
        assert_eq!(s.exit_status, 1);
        assert_eq!(s.exact_failures, vec!["exp/probe1: completed".to_string()]);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let c = parse_config(MEASURES).unwrap();
        let a = execute(&c, Path::new(".")).unwrap();
        let b = execute(&c, Path::new(".")).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.document().unwrap(), y.document().unwrap());
            assert_eq!(x.table, y.table);
        }
    }
}
