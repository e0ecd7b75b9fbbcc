//! The `check`, `classify`, `verify` and `examples` commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use hamsym::classifier::{
    classify as run_classify, ClassificationLabel, ClassificationReport, ClassifyError,
    SymmetryCandidate,
};
use hamsym::hamiltonian::{HamiltonianSystem, Potential, SystemChecks};
use hamsym::verify::{check_conserved, integrate, DriftReport, Method, DRIFT_THRESHOLD};
use serde::Serialize;

use crate::sysfile::{parse_expr, Loaded, RunSpec, SystemFile};
use crate::{examples, Format, Globals, Outcome, EXIT_INPUT, EXIT_OK, EXIT_SEMANTIC, TOOL_VERSION};

#[derive(Serialize)]
struct SystemSummary {
    name: String,
    coordinates: Vec<String>,
    parameters: BTreeMap<String, f64>,
    symplectic: String,
    hamiltonian: String,
    hamiltonian_field: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain_note: Option<String>,
}

impl SystemSummary {
    fn new(l: &Loaded) -> SystemSummary {
        let s = &l.system;
        SystemSummary {
            name: l.file.name.clone(),
            coordinates: s.space().coords().to_vec(),
            parameters: s.space().params().clone(),
            symplectic: s.omega().form().to_string(),
            hamiltonian: s.h().to_string(),
            hamiltonian_field: s.x_h().components().iter().map(ToString::to_string).collect(),
            domain_note: s.space().domain_note().map(str::to_string),
        }
    }
}

#[derive(Serialize)]
struct Document<T: Serialize> {
    tool_version: &'static str,
    seed: u64,
    system: SystemSummary,
    #[serde(flatten)]
    body: T,
}

fn structured<T: Serialize>(l: &Loaded, g: &Globals, body: T) -> String {
    let doc = Document {
        tool_version: TOOL_VERSION,
        seed: g.seed,
        system: SystemSummary::new(l),
        body,
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("reports serialize");
    out.push('\n');
    out
}

fn load(path: &Path, g: &Globals) -> Result<Loaded> {
    SystemFile::read(path)?.load(&g.probe_config())
}

fn select<'a>(cands: &'a [SymmetryCandidate], name: Option<&str>) -> Result<Vec<&'a SymmetryCandidate>> {
    match name {
        None => Ok(cands.iter().collect()),
        Some(n) => match cands.iter().find(|c| c.name == n) {
            Some(c) => Ok(vec![c]),
            None => {
                let known: Vec<&str> = cands.iter().map(|c| c.name.as_str()).collect();
                bail!("unknown symmetry `{n}`; the file declares [{}]", known.join(", "))
            }
        },
    }
}

// ---------------------------------------------------------------- check

#[derive(Serialize)]
struct CheckBody {
    checks: SystemChecks,
    hamilton_equations: Vec<Equation>,
    candidates: Vec<String>,
}

#[derive(Serialize)]
struct Equation {
    lhs: String,
    rhs: String,
}

fn equations(sys: &HamiltonianSystem) -> Vec<Equation> {
    sys.hamilton_equations()
        .into_iter()
        .map(|(c, rhs)| Equation {
            lhs: format!("d{c}/dt"),
            rhs: rhs.to_string(),
        })
        .collect()
}

pub fn check(path: &Path, g: &Globals) -> Outcome {
    let l = match load(path, g) {
        Ok(l) => l,
        Err(e) => return Outcome::input_error(e),
    };
    let s = &l.system;
    let stdout = match g.format {
        Format::Structured => structured(
            &l,
            g,
            CheckBody {
                checks: s.checks().clone(),
                hamilton_equations: equations(s),
                candidates: l.candidates.iter().map(|c| c.name.clone()).collect(),
            },
        ),
        Format::Text => {
            let mut o = String::new();
            let _ = writeln!(o, "system: {}", l.file.name);
            let _ = writeln!(o, "coordinates: {}", s.space().coords().join(", "));
            if !s.space().params().is_empty() {
                let ps: Vec<String> = s.space().params().iter().map(|(k, v)| format!("{k} = {v}")).collect();
                let _ = writeln!(o, "parameters: {}", ps.join(", "));
            }
            let _ = writeln!(o, "symplectic form: {} (closed, nondegenerate at probes)", s.omega().form());
            let _ = writeln!(o, "h = {}", s.h());
            let _ = writeln!(o, "X_h = {}", s.x_h());
            let _ = writeln!(o, "Hamilton equations:");
            for eq in equations(s) {
                let _ = writeln!(o, "  {} = {}", eq.lhs, eq.rhs);
            }
            let _ = writeln!(o, "i(X_h)w = dh: {}", verdict_word(s.checks().hamilton_equation.is_numeric()));
            let _ = writeln!(o, "L(X_h)h = 0: {}", verdict_word(s.checks().energy.is_numeric()));
            let _ = writeln!(o, "candidates: {}", l.candidates.len());
            o
        }
    };
    Outcome {
        code: EXIT_OK,
        stdout,
        stderr: String::new(),
    }
}

fn verdict_word(numeric: bool) -> &'static str {
    if numeric {
        "holds at probes"
    } else {
        "holds symbolically"
    }
}

// ---------------------------------------------------------------- classify

#[derive(Serialize)]
#[serde(untagged)]
enum CandidateEntry {
    Report(Box<ClassificationReport>),
    Failed { candidate: String, error: String },
}

#[derive(Serialize)]
struct ClassifyBody {
    max_order: usize,
    probes: usize,
    tol: f64,
    candidates: Vec<CandidateEntry>,
}

/// Label with its parameters, for text output.
pub fn label_text(label: &ClassificationLabel) -> String {
    let list = |v: &[hamsym::symexpr::Expr]| {
        v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
    };
    let name = label.name();
    match label {
        ClassificationLabel::GeometricNonHamiltonian { value } => format!("{name} value={value}"),
        ClassificationLabel::ConformalSymplectic { c } => format!("{name} c={c}"),
        ClassificationLabel::HigherOrderNoether { n } => format!("{name} N={n}"),
        ClassificationLabel::FunctionCoefficients { f } => format!("{name} f=[{}]", list(f)),
        ClassificationLabel::ConstantCoefficientsC0Zero { c }
        | ClassificationLabel::ConstantCoefficientsC0Nonzero { c } => format!("{name} C=[{}]", list(c)),
        ClassificationLabel::OmegaEigenOrderN { n, c } => format!("{name} N={n} C={c}"),
        ClassificationLabel::Inconclusive { reason } => format!("{name} ({reason})"),
        _ => name.to_string(),
    }
}

fn report_text(o: &mut String, r: &ClassificationReport) {
    let cite = r.citation.map(|c| format!(" ({c})")).unwrap_or_default();
    let _ = write!(o, "{}: {}{}", r.candidate, label_text(&r.label), cite);
    if !r.conserved.is_empty() {
        let all_trivial = r.conserved.iter().all(|q| q.trivial);
        let items: Vec<String> = r
            .conserved
            .iter()
            .map(|q| {
                if q.trivial && !all_trivial {
                    format!("{} (trivial)", q.display())
                } else {
                    q.display()
                }
            })
            .collect();
        let tag = if all_trivial { "conserved (trivial)" } else { "conserved" };
        let _ = write!(o, "; {tag}: {}", items.join("; "));
    }
    let _ = writeln!(o);
    for q in &r.conserved {
        let _ = writeln!(o, "  {} = {}", q.name, q.value);
        if let (Some(scale), Some(reduced)) = (&q.scale, &q.reduced) {
            let _ = writeln!(o, "    = {scale} * ({reduced})");
        }
        for s in &q.derivation {
            match s.citation {
                Some(c) => {
                    let _ = writeln!(o, "    {}  [{c}]", s.rule);
                }
                None => {
                    let _ = writeln!(o, "    {}", s.rule);
                }
            }
        }
    }
    if let Some(p) = &r.bihamiltonian_pair {
        let _ = writeln!(
            o,
            "  bi-Hamiltonian pair: w2 = {}, a2 = {} ({})",
            p.omega2,
            p.alpha2,
            if p.valid { "valid" } else { "not valid" }
        );
    }
    for (j, h) in r.h_tower.iter().enumerate() {
        let _ = writeln!(o, "  L^{}(Y)h = {h}", j + 1);
    }
    for (j, w) in r.omega_tower.iter().enumerate() {
        let _ = writeln!(o, "  L^{}(Y)w = {w}", j + 1);
    }
    let numeric = r.certificates.iter().filter(|c| c.verdict.is_numeric()).count();
    let _ = writeln!(
        o,
        "  certificates: {} decisions, {numeric} by probing",
        r.certificates.len()
    );
}

pub fn classify(path: &Path, symmetry: Option<&str>, g: &Globals) -> Outcome {
    let l = match load(path, g) {
        Ok(l) => l,
        Err(e) => return Outcome::input_error(e),
    };
    let chosen = match select(&l.candidates, symmetry) {
        Ok(c) => c,
        Err(e) => return Outcome::input_error(e),
    };
    let cfg = g.classify_config();
    if cfg.max_order == 0 {
        return Outcome::input_error(anyhow!("--max-order must be at least 1"));
    }
    let mut code = EXIT_OK;
    let mut stderr = String::new();
    let mut entries = Vec::new();
    for c in chosen {
        match run_classify(c, &l.system, &cfg) {
            Ok(r) => entries.push(CandidateEntry::Report(Box::new(r))),
            Err(e) => {
                code = EXIT_SEMANTIC;
                let kind = if matches!(e, ClassifyError::Inconsistent { .. }) {
                    "internal inconsistency"
                } else {
                    "classification failed"
                };
                let _ = writeln!(stderr, "error: {}: {kind}: {e}", c.name);
                entries.push(CandidateEntry::Failed {
                    candidate: c.name.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    let stdout = match g.format {
        Format::Structured => structured(
            &l,
            g,
            ClassifyBody {
                max_order: cfg.max_order,
                probes: g.probes,
                tol: g.tol,
                candidates: entries,
            },
        ),
        Format::Text => {
            let mut o = format!("system: {}\n", l.file.name);
            for e in &entries {
                match e {
                    CandidateEntry::Report(r) => report_text(&mut o, r),
                    CandidateEntry::Failed { candidate, error } => {
                        let _ = writeln!(o, "{candidate}: error: {error}");
                    }
                }
            }
            o
        }
    };
    Outcome { code, stdout, stderr }
}

// ---------------------------------------------------------------- verify

/// Run parameters given on the command line; each overrides the file's verify block.
#[derive(Clone, Debug, Default)]
pub struct RunOverrides {
    pub x0: Option<Vec<f64>>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub method: Option<Method>,
}

fn run_spec(file: Option<&RunSpec>, o: &RunOverrides) -> Result<(Vec<f64>, f64, f64, Method)> {
    let missing = |what: &str| anyhow!("no {what}: give it on the command line or in the file's [verify] block");
    let x0 = o.x0.clone().or_else(|| file.map(|f| f.x0.clone())).ok_or_else(|| missing("x0"))?;
    let t = o.t_final.or(file.map(|f| f.t_final)).ok_or_else(|| missing("t_final"))?;
    let dt = o.dt.or(file.map(|f| f.dt)).ok_or_else(|| missing("dt"))?;
    let method = match (o.method, file) {
        (Some(m), _) => m,
        (None, Some(f)) => f.method()?,
        (None, None) => Method::Rk4,
    };
    Ok((x0, t, dt, method))
}

#[derive(Serialize)]
struct RunSummary {
    x0: Vec<f64>,
    t_final: f64,
    dt: f64,
    method: String,
    samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostic: Option<String>,
}

#[derive(Serialize)]
struct VerifyBody {
    run: RunSummary,
    threshold: f64,
    quantities: Vec<DriftEntry>,
    passed: bool,
}

#[derive(Serialize)]
struct DriftEntry {
    expression: String,
    passed: bool,
    #[serde(flatten)]
    report: DriftReport,
}

/// Quantities to track: user expressions, or `h` plus everything the classifier emits.
fn quantities(
    l: &Loaded,
    symmetry: Option<&str>,
    user: &[String],
    g: &Globals,
) -> Result<Vec<(String, Potential)>> {
    let space = l.system.space();
    if !user.is_empty() {
        return user
            .iter()
            .enumerate()
            .map(|(k, text)| {
                let e = parse_expr(text, space, &format!("--quantity #{}", k + 1))?;
                Ok((text.clone(), Potential::Symbolic(e)))
            })
            .collect();
    }
    let mut out = vec![("h".to_string(), Potential::Symbolic(l.system.h().clone()))];
    let cfg = g.classify_config();
    for c in select(&l.candidates, symmetry)? {
        let r = run_classify(c, &l.system, &cfg).map_err(|e| anyhow!("{}: {e}", c.name))?;
        for q in r.conserved {
            out.push((format!("{}:{}", c.name, q.name), q.value));
        }
    }
    Ok(out)
}

pub fn verify(
    path: &Path,
    symmetry: Option<&str>,
    user_quantities: &[String],
    overrides: &RunOverrides,
    trajectory: Option<&PathBuf>,
    g: &Globals,
) -> Outcome {
    let l = match load(path, g) {
        Ok(l) => l,
        Err(e) => return Outcome::input_error(e),
    };
    let (x0, t_final, dt, method) = match run_spec(l.file.verify.as_ref(), overrides) {
        Ok(r) => r,
        Err(e) => return Outcome::input_error(e),
    };
    let tracked = match quantities(&l, symmetry, user_quantities, g) {
        Ok(q) => q,
        Err(e) => return Outcome::input_error(e),
    };
    let traj = match integrate(&l.system, &x0, t_final, dt, method) {
        Ok(t) => t,
        Err(e @ hamsym::verify::VerifyError::NonConvergent { .. }) => {
            return Outcome {
                code: EXIT_SEMANTIC,
                stdout: String::new(),
                stderr: format!("error: integration failed: {e}\n"),
            }
        }
        Err(e) => return Outcome::input_error(anyhow!("integration: {e}")),
    };
    if let Some(p) = trajectory {
        let written = std::fs::File::create(p)
            .and_then(|f| traj.write_table(l.system.space(), std::io::BufWriter::new(f)));
        if let Err(e) = written {
            return Outcome::input_error(anyhow!("cannot write {}: {e}", p.display()));
        }
    }
    let space = l.system.space();
    let mut entries = Vec::new();
    let mut stderr = String::new();
    for (name, f) in &tracked {
        match check_conserved(name, f, space, &traj) {
            Ok(report) => entries.push(DriftEntry {
                expression: f.to_string(),
                passed: report.passes(DRIFT_THRESHOLD),
                report,
            }),
            Err(e) => {
                let _ = writeln!(stderr, "error: {name}: {e}");
                entries.push(DriftEntry {
                    expression: f.to_string(),
                    passed: false,
                    report: DriftReport {
                        quantity: name.clone(),
                        initial: f64::NAN,
                        max_abs_drift: f64::NAN,
                        max_rel_drift: f64::NAN,
                        final_drift: f64::NAN,
                        mean_abs_drift: f64::NAN,
                        samples: 0,
                        diagnostic: Some(e.to_string()),
                    },
                });
            }
        }
    }
    let passed = entries.iter().all(|e| e.passed);
    let run = RunSummary {
        x0,
        t_final,
        dt,
        method: method.to_string(),
        samples: traj.states.len(),
        diagnostic: traj.diagnostic.clone(),
    };
    let stdout = match g.format {
        Format::Structured => structured(
            &l,
            g,
            VerifyBody {
                run,
                threshold: DRIFT_THRESHOLD,
                quantities: entries,
                passed,
            },
        ),
        Format::Text => {
            let mut o = format!("system: {}\n", l.file.name);
            let _ = writeln!(
                o,
                "run: {} from {:?}, t = {}, dt = {}, {} samples",
                run.method, run.x0, run.t_final, run.dt, run.samples
            );
            if let Some(d) = &run.diagnostic {
                let _ = writeln!(o, "trajectory truncated: {d}");
            }
            for e in &entries {
                let r = &e.report;
                let _ = writeln!(
                    o,
                    "{}: {} = {:.6e}, max drift {:.3e} (relative {:.3e}) {}",
                    r.quantity,
                    e.expression,
                    r.initial,
                    r.max_abs_drift,
                    r.max_rel_drift,
                    if e.passed { "PASS" } else { "FAIL" }
                );
            }
            o
        }
    };
    Outcome {
        code: if passed { EXIT_OK } else { EXIT_SEMANTIC },
        stdout,
        stderr,
    }
}

// ---------------------------------------------------------------- examples

pub fn examples_cmd(install: Option<&Path>) -> Outcome {
    match install {
        None => Outcome {
            code: EXIT_OK,
            stdout: examples::BUNDLED.iter().map(|(n, _)| format!("{n}\n")).collect(),
            stderr: String::new(),
        },
        Some(dir) => match examples::install(dir) {
            Ok(paths) => Outcome {
                code: EXIT_OK,
                stdout: paths.iter().map(|p| format!("wrote {}\n", p.display())).collect(),
                stderr: String::new(),
            },
            Err(e) => Outcome {
                code: EXIT_INPUT,
                stdout: String::new(),
                stderr: format!("error: {e:#}\n"),
            },
        },
    }
}
