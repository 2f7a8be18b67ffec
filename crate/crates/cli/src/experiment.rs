use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use arcfem::diagnostics::{integral_psi, write_convergence_csv};
use arcfem::{
    assemble_system, compatibility_residual, condition_estimate, convergence_table,
    energy_norm_diff, field_grid, fit_edge_exponent, solve, ConvergenceRecord, Endpoint, Field,
    Method, ProblemSpec, Solution,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, FieldConfig};

/// Points per sampled solution profile.
pub const PROFILE_SAMPLES: usize = 1024;

/// Distance from each endpoint excluded from sampled profiles.
pub const PROFILE_CLIP: f64 = 1e-3;

/// Level used for exponent fits when the sweep reaches it.
pub const EXPONENT_LEVEL: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outputs {
    /// Convergence tables only.
    Tables,
    /// Tables, sampled solutions, diagnostics and the optional field.
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub compatibility_residual: f64,
    pub condition_estimate: f64,
    pub solve_residual: f64,
    pub integral_psi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Exponents {
    #[serde(rename = "N")]
    pub n: usize,
    pub psi_left: Option<f64>,
    pub psi_right: Option<f64>,
    pub u_left: Option<f64>,
    pub u_right: Option<f64>,
}

pub struct MethodRun {
    pub method: Method,
    pub records: Vec<ConvergenceRecord>,
    pub levels: Vec<LevelReport>,
    pub exponents: Exponents,
    pub finest: Solution,
}

pub struct ExperimentSummary {
    pub runs: Vec<MethodRun>,
    pub g_values: Value,
}

pub fn problem(config: &ExperimentConfig, method: Method, n: usize) -> Result<ProblemSpec> {
    Ok(ProblemSpec::example(&config.example, method, n)?
        .with_orders(config.orders())
        .with_density_boundary_hats(config.psi_endpoint_hats))
}

fn fit(sol: &Solution, end: Endpoint, field: Field) -> Option<f64> {
    fit_edge_exponent(sol, end, field, None).ok()
}

fn exponents(sol: &Solution) -> Exponents {
    Exponents {
        n: sol.elements(),
        psi_left: fit(sol, Endpoint::Left, Field::Psi),
        psi_right: fit(sol, Endpoint::Right, Field::Psi),
        u_left: fit(sol, Endpoint::Left, Field::U),
        u_right: fit(sol, Endpoint::Right, Field::U),
    }
}

/// Writes `bytes` through a temporary sibling so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))
}

pub fn profile_csv(sol: &Solution) -> Result<Vec<u8>> {
    let (a, b) = sol.domain();
    let (lo, hi) = (a + PROFILE_CLIP, b - PROFILE_CLIP);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "U", "psi"])?;
    for k in 0..PROFILE_SAMPLES {
        let s = lo + (hi - lo) * k as f64 / (PROFILE_SAMPLES - 1) as f64;
        w.serialize((s, sol.u(s)?, sol.psi(s)?))?;
    }
    Ok(w.into_inner()?)
}

pub fn method_dir(out: &Path, method: Method) -> PathBuf {
    out.join(method.as_str())
}

pub fn run_method(
    config: &ExperimentConfig,
    method: Method,
    outputs: Outputs,
    log: &mut dyn Write,
) -> Result<MethodRun> {
    let dir = method_dir(&config.out, method);
    if outputs == Outputs::Full {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut prev: Option<Solution> = None;
    let mut errors = Vec::new();
    let mut levels = Vec::new();
    let mut fit_source: Option<Solution> = None;
    for &n in &config.levels {
        let context = || format!("{} method, level N={n}", method.as_str());
        let spec = problem(config, method, n).with_context(context)?;
        if let Some(warning) = spec.compatibility_warning() {
            writeln!(log, "warning: {warning}")?;
        }
        let sys = assemble_system(&spec).with_context(context)?;
        let sol = solve(&sys).with_context(context)?;
        if let Some(coarse) = &prev {
            errors.push((
                n,
                energy_norm_diff(&sys, &sol, coarse).with_context(context)?,
            ));
        }
        if outputs == Outputs::Full {
            levels.push(LevelReport {
                n,
                compatibility_residual: compatibility_residual(&sol, &spec),
                condition_estimate: condition_estimate(&sys),
                solve_residual: sol.residual,
                integral_psi: integral_psi(&sol),
            });
            write_atomic(&dir.join(format!("solution_N{n}.csv")), &profile_csv(&sol)?)?;
            if config.dump_matrices {
                let dump = dir.join(format!("matrices_N{n}"));
                std::fs::create_dir_all(&dump)?;
                sys.write_dump(&dump).with_context(context)?;
            }
        }
        writeln!(
            log,
            "{} N={n}: solved (residual {:.1e})",
            method.as_str(),
            sol.residual
        )?;
        if n <= EXPONENT_LEVEL {
            fit_source = Some(sol.clone());
        }
        prev = Some(sol);
    }
    let finest = prev.expect("level list validated as nonempty");
    let exponents = exponents(fit_source.as_ref().unwrap_or(&finest));
    Ok(MethodRun {
        method,
        records: convergence_table(&errors),
        levels,
        exponents,
        finest,
    })
}

pub fn table_text(run: &MethodRun) -> String {
    let mut s = format!(
        "{} FEM\n{:>6}  {:>10}  {:>5}\n",
        run.method.as_str(),
        "N",
        "error",
        "order"
    );
    for r in &run.records {
        let order = r.order.map_or("---".to_string(), |o| format!("{o:.2}"));
        s.push_str(&format!("{:>6}  {:>10.2E}  {:>5}\n", r.n, r.error, order));
    }
    s
}

fn by_method<T>(runs: &[MethodRun], f: impl Fn(&MethodRun) -> T) -> BTreeMap<&'static str, T> {
    runs.iter().map(|r| (r.method.as_str(), f(r))).collect()
}

fn by_level(run: &MethodRun, f: impl Fn(&LevelReport) -> f64) -> BTreeMap<String, f64> {
    run.levels.iter().map(|l| (l.n.to_string(), f(l))).collect()
}

pub fn diagnostics_json(config: &ExperimentConfig, summary: &ExperimentSummary) -> Value {
    let runs = &summary.runs;
    json!({
        "example": config.example,
        "psi_endpoint_hats": config.psi_endpoint_hats,
        "seed": config.seed,
        "g_values": summary.g_values,
        "compatibility_residual": by_method(runs, |r| by_level(r, |l| l.compatibility_residual)),
        "condition_estimate": by_method(runs, |r| by_level(r, |l| l.condition_estimate)),
        "solve_residual": by_method(runs, |r| by_level(r, |l| l.solve_residual)),
        "exponent_level": by_method(runs, |r| r.exponents.n),
        "exponent_psi_left": by_method(runs, |r| r.exponents.psi_left),
        "exponent_psi_right": by_method(runs, |r| r.exponents.psi_right),
        "exponent_U_left": by_method(runs, |r| r.exponents.u_left),
        "exponent_U_right": by_method(runs, |r| r.exponents.u_right),
    })
}

fn g_values(config: &ExperimentConfig) -> Result<Value> {
    let spec = problem(config, Method::Standard, config.levels[0])?;
    Ok(json!({
        "left": spec.g_left(),
        "right": spec.g_right(),
        "integral_f": spec.integral_f(),
        "compatibility_defect": spec.compatibility_defect(),
    }))
}

pub fn write_field(sol: &Solution, field: &FieldConfig, path: &Path) -> Result<usize> {
    let grid = field_grid(sol, field.grid())?;
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)?;
    write_atomic(path, &buf)?;
    Ok(grid.evaluated().count())
}

pub fn run_experiment(
    config: &ExperimentConfig,
    outputs: Outputs,
    log: &mut dyn Write,
) -> Result<ExperimentSummary> {
    config.validate()?;
    std::fs::create_dir_all(&config.out)
        .with_context(|| format!("creating {}", config.out.display()))?;
    let mut runs = Vec::new();
    for method in config.method.methods() {
        let run = run_method(config, method, outputs, log)?;
        let mut buf = Vec::new();
        write_convergence_csv(&run.records, &mut buf)?;
        write_atomic(
            &config.out.join(format!("table_{}.csv", method.as_str())),
            &buf,
        )?;
        write!(log, "{}", table_text(&run))?;
        runs.push(run);
    }
    let summary = ExperimentSummary {
        runs,
        g_values: g_values(config)?,
    };
    if outputs == Outputs::Full {
        let text = serde_json::to_string_pretty(&diagnostics_json(config, &summary))?;
        write_atomic(&config.out.join("diagnostics.json"), text.as_bytes())?;
        if let Some(field) = &config.field {
            let source = &summary.runs.last().expect("at least one method").finest;
            let count = write_field(source, field, &config.out.join("field.csv"))?;
            writeln!(log, "field: {count} points evaluated")?;
        }
    }
    Ok(summary)
}
