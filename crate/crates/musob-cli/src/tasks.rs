//! One runner per subcommand. Each reads its parameter block from the
//! config, drives the library, and emits report lines, summary keys and CSV
//! tables. Runners report whether a strict-mode hard violation occurred.

use anyhow::{anyhow, bail, Result};
use serde::Deserialize;

use musob::conditions::{
    self, apq_check, arc_chord_constant, dyadic_cubes, embedding_holder_check,
    embedding_pstar_check, growth_check, poincare_constant, power_weight_exponent, Ball,
    ConditionReport, Cube, Witness,
};
use musob::gradient::{
    hajlasz_minimal_values, minimal_upper_gradient, verify_upper_gradient, GradientReport,
};
use musob::modulus::{modulus_p, ModulusValue};
use musob::path::{mu_length, parametrize};
use musob::sobolev::{dyadic_radii, lipschitz_truncation, newton_norm};

use crate::config::Experiment;
use crate::expr;
use crate::output::{format_f64, OutputWriter};

pub struct GlobalOpts {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub convention: conditions::AverageConvention,
}

#[derive(Default)]
pub struct TaskOutcome {
    /// Set when a checker found a hard violation (strict mode exits 4).
    pub hard_violation: bool,
}

fn grid_function_csv(out: &OutputWriter, name: &str, values: &[f64]) -> Result<()> {
    out.write_csv(
        name,
        "cell,value",
        values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), format_f64(*v)]),
    )
}

fn gradient_report_output(
    out: &mut OutputWriter,
    report: &GradientReport,
    csv_name: &str,
) -> Result<()> {
    out.kv_usize("checked", report.checked_count);
    out.kv_usize("violations", report.violations.len());
    out.kv_usize("unverifiable", report.unverifiable.len());
    out.kv_f64("max_relative_violation", report.max_relative_violation);
    out.write_csv(
        csv_name,
        "path,lhs,rhs,slack",
        report.violations.iter().map(|v| {
            vec![
                v.path.to_string(),
                format_f64(v.lhs),
                format_f64(v.rhs),
                format_f64(v.slack),
            ]
        }),
    )?;
    Ok(())
}

fn condition_report_output(
    out: &mut OutputWriter,
    report: &ConditionReport,
    csv_name: &str,
) -> Result<()> {
    out.kv_f64("best_constant", report.best_constant);
    out.kv_usize("samples_checked", report.samples_checked);
    out.kv_usize("hard_violations", report.hard_violations.len());
    out.kv_usize("flagged", report.flagged.len());
    out.kv_usize("skipped", report.skipped);
    for (k, v) in &report.parameters {
        out.kv_f64(k, *v);
    }
    out.line(format!("  witness: {}", witness_text(&report.witness)));
    out.line("  best constants are maxima over the sampled family (lower bounds)");
    out.write_csv(
        csv_name,
        "witness,ratio",
        report
            .samples
            .iter()
            .map(|(w, r)| vec![witness_text(w), format_f64(*r)]),
    )?;
    Ok(())
}

fn witness_text(w: &Witness) -> String {
    match w {
        Witness::Ball(b) => format!("ball c={:?} r={}", b.center, b.radius),
        Witness::Cube(c) => format!("cube c={:?} half={}", c.center, c.half),
        Witness::PathPiece { path, lo, hi } => format!("path {path} piece [{lo};{hi}]"),
        Witness::Pair { a, b } => format!("pair {a:?} {b:?}"),
        Witness::Global => "global".to_string(),
    }
    .replace(',', ";")
}

// -- modulus -------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModulusTask {
    family: String,
    p: f64,
}

pub fn run_modulus(exp: &Experiment, opts: &GlobalOpts, out: &mut OutputWriter) -> Result<TaskOutcome> {
    let task: ModulusTask = exp.task("modulus")?;
    let family = exp.family(&task.family)?;
    out.section("modulus");
    out.kv("family", &task.family);
    out.kv_f64("p", task.p);
    let result = modulus_p(family, &exp.grid, &exp.measure, task.p, opts.tol_feas, opts.tol_gap)?;
    match result.value {
        ModulusValue::Finite(v) => {
            out.kv_f64("value", v);
            out.kv("finite", "true");
        }
        ModulusValue::Infinite => {
            out.kv("finite", "false");
            if let Some(p) = result.offending_path {
                out.kv_usize("offending_path", p);
            }
        }
    }
    if let Some(sol) = &result.solution {
        out.kv_f64("duality_gap", sol.duality_gap);
        out.kv_f64("max_violation", sol.max_violation);
        out.kv_usize("iterations", sol.iterations);
    }
    grid_function_csv(out, "density.csv", &result.extremal_g)?;
    out.write_csv(
        "per_path.csv",
        "path,mass",
        result
            .per_path_mass
            .iter()
            .enumerate()
            .map(|(i, m)| vec![i.to_string(), format_f64(*m)]),
    )?;
    Ok(TaskOutcome::default())
}

// -- gradients -----------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MinGradientTask {
    f: String,
    family: String,
    p: f64,
}

pub fn run_min_gradient(
    exp: &Experiment,
    opts: &GlobalOpts,
    out: &mut OutputWriter,
) -> Result<TaskOutcome> {
    let task: MinGradientTask = exp.task("min_gradient")?;
    let f = exp.function(&task.f)?;
    let family = exp.family(&task.family)?;
    out.section("min-gradient");
    out.kv("f", &task.f);
    out.kv_f64("p", task.p);
    let sol = minimal_upper_gradient(
        &f.field,
        family,
        &exp.grid,
        &exp.measure,
        task.p,
        opts.tol_feas,
        opts.tol_gap,
    )?;
    out.kv_f64("value", sol.value);
    out.kv_f64("norm", sol.value.powf(1.0 / task.p));
    out.kv_f64("duality_gap", sol.duality_gap);
    out.kv_usize("iterations", sol.iterations);
    grid_function_csv(out, "density.csv", &sol.g)?;
    Ok(TaskOutcome::default())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyGradientTask {
    f: String,
    rho: String,
    family: String,
    #[serde(default = "default_tol_check")]
    tol_check: f64,
}

fn default_tol_check() -> f64 {
    1e-9
}

pub fn run_verify_gradient(
    exp: &Experiment,
    _opts: &GlobalOpts,
    out: &mut OutputWriter,
) -> Result<TaskOutcome> {
    let task: VerifyGradientTask = exp.task("verify_gradient")?;
    let f = exp.function(&task.f)?;
    let rho = exp.function(&task.rho)?;
    let family = exp.family(&task.family)?;
    out.section("verify-gradient");
    out.kv("f", &task.f);
    out.kv("rho", &task.rho);
    out.kv_f64("tol_check", task.tol_check);
    let report = verify_upper_gradient(&f.field, &rho.field, family, &exp.measure, task.tol_check);
    gradient_report_output(out, &report, "violations.csv")?;
    out.kv("passed", if report.passed() { "true" } else { "false" });
    Ok(TaskOutcome { hard_violation: !report.passed() })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewtonNormTask {
    f: String,
    family: String,
    p: f64,
}

pub fn run_newton_norm(
    exp: &Experiment,
    opts: &GlobalOpts,
    out: &mut OutputWriter,
) -> Result<TaskOutcome> {
    let task: NewtonNormTask = exp.task("newton_norm")?;
    let f = exp.function(&task.f)?;
    let family = exp.family(&task.family)?;
    out.section("newton-norm");
    out.kv("f", &task.f);
    out.kv_f64("p", task.p);
    let nn = newton_norm(
        &f.field,
        family,
        &exp.grid,
        &exp.measure,
        task.p,
        opts.tol_feas,
        opts.tol_gap,
    )?;
    out.kv_f64("lp_term", nn.lp_term);
    out.kv_f64("gradient_term", nn.gradient_term);
    out.kv_f64("value", nn.value);
    grid_function_csv(out, "density.csv", &nn.solution.g)?;
    Ok(TaskOutcome::default())
}

// -- truncation ------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncateTask {
    f: String,
    g: String,
    k_values: Vec<f64>,
    #[serde(default = "default_beta")]
    beta: f64,
    p: f64,
    #[serde(default = "default_radii_levels")]
    radii_levels: u32,
}

fn default_beta() -> f64 {
    1.0
}

fn default_radii_levels() -> u32 {
    8
}

pub fn run_truncate(exp: &Experiment, _opts: &GlobalOpts, out: &mut OutputWriter) -> Result<TaskOutcome> {
    let task: TruncateTask = exp.task("truncate")?;
    let f = exp.function(&task.f)?;
    let g = exp.function(&task.g)?;
    out.section("truncate");
    out.kv("f", &task.f);
    out.kv("g", &task.g);
    out.kv_f64("beta", task.beta);
    out.kv_f64("p", task.p);
    let radii = dyadic_radii(&exp.grid, task.radii_levels)?;
    let mut rows = Vec::new();
    for (i, &k) in task.k_values.iter().enumerate() {
        let report =
            lipschitz_truncation(&f.on_grid, &g.on_grid, k, task.beta, task.p, &exp.grid, &radii)?;
        out.kv_f64(&format!("k{i}"), k);
        out.kv_f64(&format!("lp_error_k{i}"), report.lp_error);
        out.kv_f64(&format!("holder_constant_k{i}"), report.holder_constant);
        out.kv_f64(&format!("measure_ek_k{i}"), report.measure_ek);
        grid_function_csv(out, &format!("fk_{i}.csv"), report.f_k.values())?;
        rows.push(vec![
            format_f64(k),
            format_f64(report.lp_error),
            format_f64(report.holder_constant),
            format_f64(report.measure_ek),
            report.e_cells.len().to_string(),
        ]);
    }
    out.write_csv("truncate.csv", "k,lp_error,holder_constant,measure_ek,exceptional_cells", rows)?;
    Ok(TaskOutcome::default())
}

// -- hajlasz ---------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HajlaszTask {
    f: String,
    #[serde(default = "default_beta")]
    beta: f64,
    p: f64,
}

pub fn run_hajlasz(exp: &Experiment, opts: &GlobalOpts, out: &mut OutputWriter) -> Result<TaskOutcome> {
    let task: HajlaszTask = exp.task("hajlasz")?;
    let f = exp.function(&task.f)?;
    out.section("hajlasz");
    out.kv("f", &task.f);
    out.kv_f64("beta", task.beta);
    out.kv_f64("p", task.p);
    // minimal pointwise gradient over the cell centers weighted by m
    let points: Vec<Vec<f64>> = exp.grid.cells().iter().map(|c| c.center.clone()).collect();
    let weights: Vec<f64> = exp.grid.measures();
    if weights.iter().any(|w| *w <= 0.0) {
        bail!("hajlasz needs strictly positive cell measures");
    }
    let values: Vec<f64> = f.on_grid.values().to_vec();
    let sol = hajlasz_minimal_values(
        &values,
        &points,
        task.beta,
        task.p,
        &weights,
        exp.grid.metric(),
        opts.tol_feas,
        opts.tol_gap,
    )?;
    out.kv_f64("value", sol.value);
    out.kv_f64("norm", sol.value.powf(1.0 / task.p));
    out.kv_usize("iterations", sol.iterations);
    grid_function_csv(out, "density.csv", &sol.g)?;
    Ok(TaskOutcome::default())
}

// -- conditions --------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PoincareTask {
    f: String,
    rho: String,
    #[serde(default = "default_beta")]
    beta: f64,
    #[serde(default = "default_lambda")]
    lambda: f64,
    p: f64,
    ball_radii: Vec<f64>,
    #[serde(default)]
    ball_centers: Option<Vec<Vec<f64>>>,
}

fn default_lambda() -> f64 {
    1.0
}

pub fn run_poincare(exp: &Experiment, opts: &GlobalOpts, out: &mut OutputWriter) -> Result<TaskOutcome> {
    let task: PoincareTask = exp.task("poincare")?;
    let f = exp.function(&task.f)?;
    let rho = exp.function(&task.rho)?;
    out.section("poincare");
    out.kv("f", &task.f);
    out.kv("rho", &task.rho);
    let centers: Vec<Vec<f64>> = match &task.ball_centers {
        Some(c) => c.clone(),
        None => {
            // deterministic stride keeping at most 64 centers
            let stride = exp.grid.len().div_ceil(64);
            exp.grid
                .cells()
                .iter()
                .step_by(stride.max(1))
                .map(|c| c.center.clone())
                .collect()
        }
    };
    let balls: Vec<Ball> = centers
        .iter()
        .flat_map(|c| {
            task.ball_radii
                .iter()
                .map(|r| Ball { center: c.clone(), radius: *r })
        })
        .collect();
    let report = poincare_constant(
        &f.on_grid,
        &rho.on_grid,
        &balls,
        task.beta,
        task.lambda,
        task.p,
        &exp.grid,
        opts.convention,
    )?;
    condition_report_output(out, &report, "balls.csv")?;
    Ok(TaskOutcome { hard_violation: !report.hard_violations.is_empty() })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcChordTask {
    family: String,
    #[serde(default = "default_beta")]
    beta: f64,
}

pub fn run_arc_chord(exp: &Experiment, _opts: &GlobalOpts, out: &mut OutputWriter) -> Result<TaskOutcome> {
    let task: ArcChordTask = exp.task("arc_chord")?;
    let family = exp.family(&task.family)?;
    out.section("arc-chord");
    out.kv("family", &task.family);
    let report = arc_chord_constant(family, &exp.measure, task.beta, exp.grid.metric())?;
    condition_report_output(out, &report, "pieces.csv")?;
    Ok(TaskOutcome::default())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsTask {
    omega: String,
    p: f64,
    n: usize,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    q: Option<f64>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    cube_center: Option<Vec<f64>>,
    #[serde(default = "default_j_min")]
    j_min: i32,
    #[serde(default = "default_j_max")]
    j_max: i32,
    #[serde(default)]
    extra_centers: Vec<Vec<f64>>,
}

fn default_j_min() -> i32 {
    -3
}

fn default_j_max() -> i32 {
    3
}

pub fn run_weights(exp: &Experiment, opts: &GlobalOpts, out: &mut OutputWriter) -> Result<TaskOutcome> {
    let task: WeightsTask = exp.task("weights")?;
    let omega = expr::parse_field(&task.omega)?;
    out.section("weights");
    out.kv("omega", &task.omega);
    out.kv_f64("p", task.p);
    out.kv_usize("n", task.n);
    let q = match (task.q, task.lambda) {
        (Some(q), _) => q,
        (None, Some(lambda)) => {
            let q = power_weight_exponent(task.n, task.p, lambda)?;
            out.kv_f64("lambda", lambda);
            q
        }
        (None, None) => bail!("tasks.weights: provide either `q` or `lambda`"),
    };
    out.kv_f64("q", q);
    let alpha = task.alpha.unwrap_or(1.0 / task.n as f64);
    out.kv_f64("alpha", alpha);

    let center = task.cube_center.clone().unwrap_or(vec![0.0; task.n]);
    let mut cubes: Vec<Cube> = dyadic_cubes(&center, task.j_min, task.j_max);
    for c in &task.extra_centers {
        cubes.extend(dyadic_cubes(c, task.j_min, 0.min(task.j_max)));
    }

    let growth = growth_check(&omega, task.p, q, task.n, &cubes)?;
    out.line("growth condition:");
    condition_report_output(out, &growth, "growth_cubes.csv")?;
    let ratios: Vec<f64> = growth.samples.iter().map(|(_, r)| *r).collect();
    if !ratios.is_empty() {
        let mut sorted = ratios.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        out.kv_f64("growth_median", median);
        out.kv_f64(
            "growth_max_over_median",
            ratios.iter().cloned().fold(0.0, f64::max) / median,
        );
    }

    let p = task.p;
    let omega_c = omega.clone();
    let w2 = musob::Field::from_fn("omega^p", move |x| omega_c.eval(x).powf(p));
    let apq = apq_check(
        &musob::Field::constant(1.0),
        &w2,
        task.p,
        q,
        alpha,
        &cubes,
        opts.convention,
    )?;
    out.line("two-weight condition for the pair (1, omega^p):");
    out.kv_f64("apq_best_constant", apq.best_constant);
    out.kv_usize("apq_flagged", apq.flagged.len());
    out.write_csv(
        "apq_cubes.csv",
        "witness,ratio",
        apq.samples
            .iter()
            .map(|(w, r)| vec![witness_text(w), format_f64(*r)]),
    )?;
    Ok(TaskOutcome::default())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingTask {
    mode: String,
    f: String,
    g: String,
    #[serde(default = "default_beta")]
    beta: f64,
    n_exp: f64,
    p: f64,
    #[serde(default)]
    q: Option<f64>,
}

pub fn run_embedding(exp: &Experiment, _opts: &GlobalOpts, out: &mut OutputWriter) -> Result<TaskOutcome> {
    let task: EmbeddingTask = exp.task("embedding")?;
    let f = exp.function(&task.f)?;
    let g = exp.function(&task.g)?;
    out.section("embedding");
    out.kv("mode", &task.mode);
    match task.mode.as_str() {
        "holder" => {
            let n = exp.grid.len();
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    pairs.push((i, j));
                }
                if pairs.len() > 200_000 {
                    break;
                }
            }
            let report = embedding_holder_check(
                &f.on_grid,
                &g.on_grid,
                task.beta,
                task.n_exp,
                task.p,
                &pairs,
                &exp.grid,
            )?;
            condition_report_output(out, &report, "pairs.csv")?;
        }
        "pstar" => {
            let q = task.q.ok_or_else(|| anyhow!("tasks.embedding: `q` required for pstar"))?;
            let report = embedding_pstar_check(
                &f.on_grid,
                &g.on_grid,
                q,
                task.p,
                task.n_exp,
                task.beta,
                &exp.grid,
            )?;
            condition_report_output(out, &report, "pairs.csv")?;
        }
        other => bail!("tasks.embedding.mode: unknown mode `{other}`"),
    }
    Ok(TaskOutcome::default())
}

// -- parametrize --------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParametrizeTask {
    family: String,
    #[serde(default = "default_samples")]
    samples: usize,
}

fn default_samples() -> usize {
    65
}

pub fn run_parametrize(exp: &Experiment, _opts: &GlobalOpts, out: &mut OutputWriter) -> Result<TaskOutcome> {
    let task: ParametrizeTask = exp.task("parametrize")?;
    let family = exp.family(&task.family)?;
    out.section("parametrize");
    out.kv("family", &task.family);
    out.kv_usize("paths", family.len());
    for (i, path) in family.iter().enumerate() {
        let pp = parametrize(path, &exp.measure)
            .map_err(|e| anyhow!("path {i} of family `{}`: {e}", task.family))?;
        out.kv_f64(&format!("h_{i}"), pp.h());
        let mass = mu_length(path, &exp.measure)?;
        debug_assert!((mass - pp.h()).abs() <= 1e-9 * (1.0 + mass));
        let rows: Result<Vec<Vec<String>>> = (0..task.samples)
            .map(|j| {
                let t = j as f64 / (task.samples - 1).max(1) as f64;
                let nu = pp.nu(t)?;
                Ok(vec![format_f64(t), format_f64(nu)])
            })
            .collect();
        out.write_csv(&format!("nu_{i}.csv"), "t,nu", rows?)?;
    }
    Ok(TaskOutcome::default())
}
