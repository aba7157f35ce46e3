//! Experiment runner: turns a validated config into artifact files.
//!
//! Every run writes into its own directory named after the experiment, the
//! system, the seed, and the first bytes of the config hash. The directory
//! holds the full config echo (`config.json`), one CSV per result table, a
//! `summary.csv` of headline numbers, and a `plot.py` that renders the CSVs
//! with matplotlib. Each CSV starts with comment lines carrying the canonical
//! config and its hash, so any file identifies the run it came from.
//!
//! Determinism contract: for a fixed config the artifact bytes are identical
//! across repeated runs and across worker-thread counts. All randomness flows
//! through indexed streams of the master seed, parallel reductions either
//! commute exactly (integer counts) or are merged in index order, and floats
//! are printed with the shortest round-trip representation. Experiment phases
//! draw from disjoint stream-index blocks so adding trials to one phase never
//! shifts another.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::chain::{scan_walk, BumpProfile, CompiledSystem};
use crate::config::{ConfigError, Experiment, ScenarioConfig, DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV};
use crate::derriennic::{build_chart, run_pipeline, PipelineConfig, PipelineReport};
use crate::geometry::{
    classify_structure, contraction_experiment, gap_trace, ContractionReport, NuDistance,
};
use crate::scenario::PROFILE_WIDEN_FRAC;
use crate::stationary::{
    bootstrap_residual_floor, build_stationary, krylov_bogolyubov, stationarity_residuals,
    uniqueness_cross_check, StationaryError, StationaryEstimate, StopConfig, TestFunction,
};
use crate::stream::StreamFactory;
use crate::walkgroup::{GeneratorSystem, RecurrenceInterval};

/// Disjoint stream-index blocks, one per experiment phase.
const STREAM_SPAN: u64 = 1 << 32;
const MAIN_BASE: u64 = 0;
const KB_BASE: u64 = STREAM_SPAN;
const BUILD_BASE: u64 = 2 * STREAM_SPAN;
const FLOOR_BASE: u64 = 3 * STREAM_SPAN;
const PIPELINE_BASE: u64 = 4 * STREAM_SPAN;
const CLASSIFY_BASE: u64 = 5 * STREAM_SPAN;
const TRACE_BASE: u64 = 6 * STREAM_SPAN;

/// Orbit words examined by the structure classifier in the full pipeline.
const CLASSIFIER_SAMPLES: usize = 2000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit code: 1 for config problems, 2 for anything that went
    /// wrong while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numeric(_) | RunError::Io(_) => 2,
        }
    }
}

fn stationary_err(e: StationaryError) -> RunError {
    let hint = matches!(
        e,
        StationaryError::Walk(crate::chain::WalkError::StoppingTimeCap { .. })
    );
    RunError::Numeric(if hint {
        format!("{e}; raise knobs.stop-cap or pick another seed")
    } else {
        e.to_string()
    })
}

/// Where a run landed and what it produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: Vec<(String, String)>,
}

struct Artifacts {
    files: Vec<(String, String)>,
    summary: Vec<(String, String)>,
}

struct Ctx<'a> {
    config: &'a ScenarioConfig,
    system: &'a GeneratorSystem,
    cs: &'a CompiledSystem,
    k: RecurrenceInterval,
    profile: BumpProfile,
    factory: StreamFactory,
}

impl Ctx<'_> {
    fn mid(&self) -> f64 {
        self.k.midpoint_f64()
    }

    fn stop_config(&self) -> StopConfig {
        StopConfig {
            cap: self.config.knobs.stop_cap,
            record_budget: self.config.knobs.record_budget,
        }
    }

    /// Coupled start points: explicit knobs, or the midpoint straddle.
    fn coupled_starts(&self) -> (f64, f64) {
        let knobs = &self.config.knobs;
        let half = knobs.initial_gap / 2.0;
        let x = knobs.start_x.unwrap_or(self.mid() - half);
        let y = knobs.start_y.unwrap_or(self.mid() + half);
        (x, y)
    }
}

/// Execute a run end to end: validate, compute, write artifacts.
///
/// `threads` = 0 uses the library default worker pool; any other value runs
/// the experiment inside a dedicated pool of that size. `out_override` wins
/// over the config's output directory, which wins over the environment
/// variable, which wins over the built-in default.
pub fn run(
    config: &ScenarioConfig,
    threads: usize,
    out_override: Option<&Path>,
) -> Result<RunOutcome, RunError> {
    config.validate()?;
    let system = config.build_system()?;
    let cs = CompiledSystem::new(&system);
    let k = system.recurrence_interval();
    let profile = BumpProfile::around(&k, PROFILE_WIDEN_FRAC);
    let ctx = Ctx {
        config,
        system: &system,
        cs: &cs,
        k,
        profile,
        factory: StreamFactory::new(config.seed),
    };

    let artifacts = if threads == 0 {
        dispatch(&ctx)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| RunError::Numeric(format!("worker pool: {e}")))?;
        pool.install(|| dispatch(&ctx))?
    };

    let root = resolve_output_root(config, out_override);
    let hash = config.content_hash();
    let short = &hash["sha256:".len().."sha256:".len() + 8];
    let dir = root.join(format!(
        "{}-{}-seed{}-{}",
        config.experiment.name(),
        config.system_label(),
        config.seed,
        short
    ));
    fs::create_dir_all(&dir)?;

    let mut files = Vec::new();
    let mut write = |name: &str, content: &str| -> Result<(), RunError> {
        fs::write(dir.join(name), content)?;
        files.push(name.to_string());
        Ok(())
    };
    write("config.json", &format!("{}\n", config.pretty_json()))?;
    for (name, content) in &artifacts.files {
        write(name, content)?;
    }
    write("summary.csv", &summary_csv(config, &artifacts.summary))?;
    write("plot.py", &plot_script(config))?;

    Ok(RunOutcome {
        dir,
        files,
        summary: artifacts.summary,
    })
}

fn resolve_output_root(config: &ScenarioConfig, out_override: Option<&Path>) -> PathBuf {
    if let Some(dir) = out_override {
        return dir.to_path_buf();
    }
    if let Some(dir) = &config.output_dir {
        return PathBuf::from(dir);
    }
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from(DEFAULT_OUTPUT_DIR)
}

fn dispatch(ctx: &Ctx) -> Result<Artifacts, RunError> {
    match ctx.config.experiment {
        Experiment::Recurrence => Ok(recurrence(ctx)),
        Experiment::Oscillation => Ok(oscillation(ctx)),
        Experiment::Stationary => stationary(ctx),
        Experiment::Uniqueness => Ok(uniqueness(ctx)),
        Experiment::Contraction => Ok(contraction(ctx)),
        Experiment::Derriennic => derriennic(ctx),
        Experiment::FullPipeline => full_pipeline(ctx),
    }
}

// ---------------------------------------------------------------- formatting

/// Shortest representation that parses back to the same float.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn artifact_header(config: &ScenarioConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# linewalk {} {}",
        env!("CARGO_PKG_VERSION"),
        config.experiment.name()
    );
    let _ = writeln!(s, "# config-hash: {}", config.content_hash());
    let _ = writeln!(s, "# config: {}", config.canonical_json());
    s
}

fn csv_file(config: &ScenarioConfig, columns: &str, rows: &[String]) -> String {
    let mut s = artifact_header(config);
    let _ = writeln!(s, "{columns}");
    for row in rows {
        let _ = writeln!(s, "{row}");
    }
    s
}

fn summary_csv(config: &ScenarioConfig, summary: &[(String, String)]) -> String {
    let rows: Vec<String> = summary
        .iter()
        .map(|(k, v)| format!("{k},{v}"))
        .collect();
    csv_file(config, "key,value", &rows)
}

fn kv(key: &str, value: impl Into<String>) -> (String, String) {
    (key.to_string(), value.into())
}

fn median_of(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values[(values.len() - 1) / 2])
}

// ---------------------------------------------------------------- recurrence

/// Visit counts to K at the half and full horizons, one walk per trial.
fn recurrence(ctx: &Ctx) -> Artifacts {
    let knobs = &ctx.config.knobs;
    let (half, horizon) = (knobs.steps, 2 * knobs.steps);
    let (lo, hi) = (ctx.k.a_f64(), ctx.k.b_f64());
    let x0 = ctx.mid();
    let per_trial: Vec<(usize, usize, f64)> = (0..knobs.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ctx.factory.stream(MAIN_BASE + t);
            let (mut v, mut v_half, mut last) = (0usize, 0usize, x0);
            scan_walk(ctx.cs, x0, horizon, &mut rng, |n, x| {
                if lo <= x && x <= hi {
                    v += 1;
                }
                if n == half {
                    v_half = v;
                }
                last = x;
            });
            (v_half, v, last)
        })
        .collect();

    let rows: Vec<String> = per_trial
        .iter()
        .enumerate()
        .map(|(t, (v1, v2, fin))| format!("{t},{v1},{v2},{}", num(*fin)))
        .collect();
    let med = |pick: fn(&(usize, usize, f64)) -> usize| {
        median_of(per_trial.iter().map(|r| pick(r) as f64).collect())
    };
    let increased = per_trial.iter().filter(|(v1, v2, _)| v2 > v1).count();

    Artifacts {
        files: vec![(
            "visits.csv".to_string(),
            csv_file(
                ctx.config,
                "trial,visits_half,visits_full,final_x",
                &rows,
            ),
        )],
        summary: vec![
            kv("steps_half", knobs.steps.to_string()),
            kv("steps_full", horizon.to_string()),
            kv("trials", knobs.trials.to_string()),
            kv("median_visits_half", opt_num(med(|r| r.0))),
            kv("median_visits_full", opt_num(med(|r| r.1))),
            kv(
                "fraction_strictly_increased",
                num(increased as f64 / knobs.trials as f64),
            ),
        ],
    }
}

// --------------------------------------------------------------- oscillation

/// Per-step fraction of trials at or above the start.
fn oscillation(ctx: &Ctx) -> Artifacts {
    let knobs = &ctx.config.knobs;
    let x0 = ctx.mid();
    let stats = crate::chain::oscillation_stats(
        ctx.cs,
        x0,
        knobs.steps,
        knobs.trials,
        x0 + 5.0,
        &ctx.factory,
        MAIN_BASE,
    );
    let rows: Vec<String> = stats
        .frac_stay_above_start
        .iter()
        .enumerate()
        .map(|(k, f)| format!("{k},{}", num(*f)))
        .collect();
    let min_frac = stats.frac_stay_above_start[1..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let sigma = (0.25 / knobs.trials as f64).sqrt();
    let floor = 0.5 - 3.0 * sigma;

    Artifacts {
        files: vec![(
            "oscillation.csv".to_string(),
            csv_file(ctx.config, "step,frac_at_or_above_start", &rows),
        )],
        summary: vec![
            kv("steps", knobs.steps.to_string()),
            kv("trials", knobs.trials.to_string()),
            kv("min_fraction", num(min_frac)),
            kv("binomial_sigma", num(sigma)),
            kv("half_minus_3_sigma", num(floor)),
            kv("min_fraction_ok", (min_frac >= floor).to_string()),
            kv("frac_reached_up_threshold", num(stats.frac_exceed_up)),
            kv("frac_reached_down_threshold", num(stats.frac_exceed_down)),
        ],
    }
}

// ---------------------------------------------------------------- stationary

/// Averaging pass then refinement pass; shared by three experiments.
fn build_nu(ctx: &Ctx) -> Result<StationaryEstimate, RunError> {
    let knobs = &ctx.config.knobs;
    let stop = ctx.stop_config();
    let nu0 = krylov_bogolyubov(
        ctx.cs,
        &ctx.profile,
        &ctx.k,
        knobs.kb_iterations,
        knobs.kb_batches,
        &stop,
        &ctx.factory,
        KB_BASE,
    )
    .map_err(stationary_err)?;
    build_stationary(
        ctx.cs,
        &nu0,
        &ctx.profile,
        &ctx.k,
        knobs.samples_per_start,
        &stop,
        &ctx.factory,
        BUILD_BASE,
    )
    .map_err(stationary_err)
}

/// Five plateau probes spread over and around K; the family every
/// stationarity run checks against.
pub fn default_probes(k: &RecurrenceInterval) -> Vec<(&'static str, TestFunction)> {
    let (a, b) = (k.a_f64(), k.b_f64());
    let w = b - a;
    vec![
        ("core", TestFunction::plateau(a, b, w / 4.0)),
        ("wide", TestFunction::plateau(a - w, b + w, w / 2.0)),
        (
            "inner",
            TestFunction::plateau(a + w / 4.0, b - w / 4.0, w / 8.0),
        ),
        (
            "left-edge",
            TestFunction::plateau(a - w / 2.0, a + w / 2.0, w / 4.0),
        ),
        (
            "right-edge",
            TestFunction::plateau(b - w / 2.0, b + w / 2.0, w / 4.0),
        ),
    ]
}

fn nu_csv(ctx: &Ctx, est: &StationaryEstimate) -> (String, String) {
    let rows: Vec<String> = est
        .nu
        .samples()
        .map(|(x, w)| format!("{},{}", num(x), num(w)))
        .collect();
    (
        "nu.csv".to_string(),
        csv_file(ctx.config, "position,weight", &rows),
    )
}

fn stationary_artifacts(
    ctx: &Ctx,
    est: &StationaryEstimate,
) -> Result<(Vec<(String, String)>, Vec<(String, String)>), RunError> {
    let knobs = &ctx.config.knobs;
    let probes = default_probes(&ctx.k);
    let fns: Vec<TestFunction> = probes.iter().map(|(_, p)| p.clone()).collect();
    let residuals = stationarity_residuals(ctx.system, &est.nu, &fns);
    let floors = if knobs.bootstrap_replicas > 0 {
        Some(
            bootstrap_residual_floor(
                ctx.system,
                &est.nu,
                &fns,
                knobs.bootstrap_replicas,
                &ctx.factory,
                FLOOR_BASE,
            )
            .map_err(|e| RunError::Numeric(e.to_string()))?,
        )
    } else {
        None
    };

    let rows: Vec<String> = probes
        .iter()
        .enumerate()
        .map(|(j, (name, _))| {
            let floor = floors.as_ref().map(|f| f[j]);
            let ratio = floor.map(|f| residuals[j] / f.max(f64::MIN_POSITIVE));
            format!(
                "{name},{},{},{}",
                num(residuals[j]),
                opt_num(floor),
                opt_num(ratio)
            )
        })
        .collect();

    let (hull_lo, hull_hi) = est.nu.hull().unwrap_or((f64::NAN, f64::NAN));
    let files = vec![
        nu_csv(ctx, est),
        (
            "residuals.csv".to_string(),
            csv_file(ctx.config, "probe,residual,noise_floor,ratio", &rows),
        ),
    ];
    let summary = vec![
        kv("excursions", est.runs.to_string()),
        kv("mean_excursion_steps", num(est.mean_duration)),
        kv("max_excursion_steps", est.max_duration.to_string()),
        kv("raw_k_mass", num(est.raw_k_mass)),
        kv("nu_atoms", est.nu.len().to_string()),
        kv("nu_hull_lo", num(hull_lo)),
        kv("nu_hull_hi", num(hull_hi)),
        kv(
            "max_residual",
            num(residuals.iter().copied().fold(0.0, f64::max)),
        ),
    ];
    Ok((files, summary))
}

fn stationary(ctx: &Ctx) -> Result<Artifacts, RunError> {
    let est = build_nu(ctx)?;
    let (files, summary) = stationary_artifacts(ctx, &est)?;
    Ok(Artifacts { files, summary })
}

// ---------------------------------------------------------------- uniqueness

/// Ratio-ergodic averages replicated from two starts.
fn uniqueness(ctx: &Ctx) -> Artifacts {
    let knobs = &ctx.config.knobs;
    let ramp = knobs.probe_ramp;
    let psi = TestFunction::plateau(0.0, 1.0, ramp);
    let phi = TestFunction::plateau(0.0, 2.0, ramp);
    let report = uniqueness_cross_check(
        ctx.cs,
        ctx.mid(),
        knobs.second_start,
        &psi,
        &phi,
        knobs.samples,
        knobs.cross_trials,
        None,
        &ctx.factory,
        MAIN_BASE,
    );
    let mut rows = Vec::new();
    for (i, v) in report.values_x1.iter().enumerate() {
        rows.push(format!("{i},first,{}", num(*v)));
    }
    for (i, v) in report.values_x2.iter().enumerate() {
        rows.push(format!("{i},second,{}", num(*v)));
    }
    let rel_gap = match (report.median_x1, report.median_x2) {
        (Some(m1), Some(m2)) => {
            let scale = m1.abs().max(m2.abs()).max(f64::MIN_POSITIVE);
            Some((m1 - m2).abs() / scale)
        }
        _ => None,
    };

    Artifacts {
        files: vec![(
            "ratios.csv".to_string(),
            csv_file(ctx.config, "trial,start,value", &rows),
        )],
        summary: vec![
            kv("samples", knobs.samples.to_string()),
            kv("trials_per_start", knobs.cross_trials.to_string()),
            kv("start_first", num(ctx.mid())),
            kv("start_second", num(knobs.second_start)),
            kv("median_first", opt_num(report.median_x1)),
            kv("median_second", opt_num(report.median_x2)),
            kv("relative_gap", opt_num(rel_gap)),
            kv("not_yet_recurrent", report.not_yet_recurrent.to_string()),
        ],
    }
}

// --------------------------------------------------------------- contraction

fn contraction_files(ctx: &Ctx, report: &ContractionReport) -> (String, String) {
    let rows: Vec<String> = report
        .checkpoints
        .iter()
        .map(|c| {
            format!(
                "{},{},{},{}",
                c.step,
                c.gated,
                opt_num(c.median_gap),
                opt_num(c.q90_gap)
            )
        })
        .collect();
    (
        "checkpoints.csv".to_string(),
        csv_file(ctx.config, "step,gated,median_gap,q90_gap", &rows),
    )
}

fn contraction_summary(report: &ContractionReport) -> Vec<(String, String)> {
    vec![
        kv("initial_gap", num(report.initial_gap)),
        kv("trials", report.trials.to_string()),
        kv("trials_gated", report.trials_gated.to_string()),
        kv("trials_contracted", report.trials_contracted.to_string()),
        kv("contraction_factor", num(report.contraction_factor)),
        kv("contracted_ci_low", num(report.contracted_ci.0)),
        kv("contracted_ci_high", num(report.contracted_ci.1)),
        kv("median_last_gated_gap", opt_num(report.median_last_gated)),
    ]
}

/// Coupled walks with the gate on K; gap quantiles at checkpoints.
fn contraction(ctx: &Ctx) -> Artifacts {
    let knobs = &ctx.config.knobs;
    let (x, y) = ctx.coupled_starts();
    let report = contraction_experiment(
        ctx.cs,
        x,
        y,
        ctx.k.a_f64(),
        ctx.k.b_f64(),
        knobs.steps,
        knobs.trials,
        knobs.contraction_factor,
        &ctx.factory,
        MAIN_BASE,
    );
    Artifacts {
        files: vec![contraction_files(ctx, &report)],
        summary: contraction_summary(&report),
    }
}

// ---------------------------------------------------------------- derriennic

fn derriennic_artifacts(
    ctx: &Ctx,
    est: &StationaryEstimate,
) -> Result<(Vec<(String, String)>, Vec<(String, String)>, PipelineReport), RunError> {
    let knobs = &ctx.config.knobs;
    let pcfg = PipelineConfig {
        grid_nodes: knobs.chart_grid,
        drift_grid_points: knobs.grid_points,
        tolerance: knobs.tolerance,
        bootstrap_replicas: (knobs.bootstrap_replicas > 0).then_some(knobs.bootstrap_replicas),
    };
    let hull_hint = |e: String| {
        RunError::Numeric(if e.contains("outside the sampled hull") {
            format!("{e}; raise knobs.samples-per-start or knobs.kb-iterations so excursions cover both sides of the stopping region")
        } else {
            e
        })
    };
    let report = run_pipeline(ctx.system, &est.nu, &pcfg, &ctx.factory, PIPELINE_BASE)
        .map_err(|e| hull_hint(e.to_string()))?;
    let chart = build_chart(&est.nu, ctx.mid()).map_err(|e| hull_hint(e.to_string()))?;

    let chart_rows: Vec<String> = chart
        .nodes()
        .map(|(x, y)| format!("{},{}", num(x), num(y)))
        .collect();

    let drift_rows: Vec<String> = (0..report.grid_x.len())
        .map(|i| {
            let sigma = report.drift_sigma.as_ref().map(|s| s[i]);
            format!(
                "{},{},{},{}",
                num(report.grid_x[i]),
                num(report.grid_y[i]),
                num(report.drift.points[i].1),
                opt_num(sigma)
            )
        })
        .collect();

    let mut verdict_rows = Vec::new();
    for v in &report.lipschitz {
        verdict_rows.push(format!(
            "lipschitz,{},{},{},{}",
            v.name,
            num(v.max_slope),
            num(v.bound),
            v.ok
        ));
    }
    for v in &report.displacement.verdicts {
        verdict_rows.push(format!(
            "displacement,{},{},{},{}",
            v.name,
            num(v.sup_displacement),
            num(v.bound),
            v.ok
        ));
    }
    verdict_rows.push(format!("pairing-gap,,{},,", num(report.pairing_gap)));
    verdict_rows.push(format!(
        "conjugated-validation,,,,{}",
        report.validation.ok()
    ));
    if let Some(ok) = report.drift_within_noise(3.0) {
        verdict_rows.push(format!(
            "drift-within-noise,,{},,{ok}",
            num(report.drift.max_abs)
        ));
    }

    let files = vec![
        (
            "chart.csv".to_string(),
            csv_file(ctx.config, "x,chart_x", &chart_rows),
        ),
        (
            "drift.csv".to_string(),
            csv_file(ctx.config, "grid_x,grid_y,drift,sigma", &drift_rows),
        ),
        (
            "verdicts.csv".to_string(),
            csv_file(ctx.config, "check,name,value,bound,ok", &verdict_rows),
        ),
    ];
    let summary = vec![
        kv("chart_nodes", report.chart_nodes.to_string()),
        kv("max_abs_drift", num(report.drift.max_abs)),
        kv(
            "drift_within_noise",
            report
                .drift_within_noise(3.0)
                .map(|b| b.to_string())
                .unwrap_or_default(),
        ),
        kv("all_lipschitz_ok", report.all_lipschitz_ok().to_string()),
        kv(
            "all_displacement_ok",
            report.all_displacement_ok().to_string(),
        ),
        kv("phi_bar", num(report.displacement.phi_bar)),
        kv("pairing_gap", num(report.pairing_gap)),
        kv(
            "conjugated_validation_ok",
            report.validation.ok().to_string(),
        ),
    ];
    Ok((files, summary, report))
}

/// Build the measure, change coordinates, check the conjugated system.
fn derriennic(ctx: &Ctx) -> Result<Artifacts, RunError> {
    let est = build_nu(ctx)?;
    let (mut files, summary, _) = derriennic_artifacts(ctx, &est)?;
    files.insert(0, nu_csv(ctx, &est));
    Ok(Artifacts { files, summary })
}

// ------------------------------------------------------------- full pipeline

/// Measure, residuals, coordinate change, verdicts, classifier, gap trace.
fn full_pipeline(ctx: &Ctx) -> Result<Artifacts, RunError> {
    let est = build_nu(ctx)?;
    let (mut files, mut summary) = stationary_artifacts(ctx, &est)?;
    let (more_files, more_summary, _) = derriennic_artifacts(ctx, &est)?;
    files.extend(more_files);
    summary.extend(more_summary);

    let verdict = classify_structure(ctx.system, CLASSIFIER_SAMPLES, &ctx.factory, CLASSIFY_BASE);
    summary.push(kv("structure_verdict", verdict.verdict.to_string()));

    let (x, y) = ctx.coupled_starts();
    let d = NuDistance::new(est.nu.clone());
    let mut rng = ctx.factory.stream(TRACE_BASE);
    let trace = gap_trace(
        ctx.cs,
        &d,
        x,
        y,
        ctx.k.a_f64(),
        ctx.k.b_f64(),
        ctx.config.knobs.steps,
        &mut rng,
    );
    let trace_rows: Vec<String> = trace
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{},{},{}",
                s.step,
                num(s.pos_x),
                num(s.pos_y),
                num(s.gap_euclid),
                num(s.gap_nu),
                s.gated
            )
        })
        .collect();
    files.push((
        "trace.csv".to_string(),
        csv_file(
            ctx.config,
            "step,pos_x,pos_y,gap_euclid,gap_nu,gated",
            &trace_rows,
        ),
    ));
    Ok(Artifacts { files, summary })
}

// ------------------------------------------------------------------ plotting

fn plot_script(config: &ScenarioConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "#!/usr/bin/env python3");
    let _ = writeln!(s, "# linewalk plot script");
    let _ = writeln!(s, "# config-hash: {}", config.content_hash());
    let _ = writeln!(s, "# config: {}", config.canonical_json());
    s.push_str(PLOT_BODY);
    s
}

const PLOT_BODY: &str = r##"
"""Render every CSV in this directory as a PNG next to it."""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read(name):
    path = HERE / name
    if not path.exists():
        return None
    with path.open() as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    return header, body


def col(body, i, cast=float):
    out = []
    for row in body:
        cell = row[i]
        out.append(cast(cell) if cell != "" else None)
    return out


def savefig(fig, name):
    fig.tight_layout()
    fig.savefig(HERE / name, dpi=120)
    plt.close(fig)
    print("wrote", name)


def plot_visits():
    data = read("visits.csv")
    if not data:
        return
    _, body = data
    half, full = col(body, 1), col(body, 2)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.hist(full, bins=30)
    ax1.set_xlabel("visits at full horizon")
    ax1.set_ylabel("trials")
    ax2.scatter(half, full, s=8, alpha=0.5)
    lim = max(full) if full else 1
    ax2.plot([0, lim], [0, lim], lw=1, color="gray")
    ax2.set_xlabel("visits at half horizon")
    ax2.set_ylabel("visits at full horizon")
    savefig(fig, "visits.png")


def plot_oscillation():
    data = read("oscillation.csv")
    if not data:
        return
    _, body = data
    steps, frac = col(body, 0), col(body, 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, frac, lw=0.8)
    ax.axhline(0.5, color="gray", lw=1, ls="--")
    ax.set_xlabel("step")
    ax.set_ylabel("fraction at or above start")
    savefig(fig, "oscillation.png")


def plot_nu():
    data = read("nu.csv")
    if not data:
        return
    _, body = data
    xs, ws = col(body, 0), col(body, 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.vlines(xs, 0, ws, lw=0.6)
    ax.set_xlabel("position")
    ax.set_ylabel("weight")
    ax.set_yscale("log")
    savefig(fig, "nu.png")


def plot_residuals():
    data = read("residuals.csv")
    if not data:
        return
    _, body = data
    names = [r[0] for r in body]
    res, floor = col(body, 1), col(body, 2)
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = range(len(names))
    ax.bar([x - 0.2 for x in xs], res, width=0.4, label="residual")
    if any(f is not None for f in floor):
        ax.bar(
            [x + 0.2 for x in xs],
            [f if f is not None else 0 for f in floor],
            width=0.4,
            label="noise floor",
        )
    ax.set_xticks(list(xs), names, rotation=20)
    ax.set_yscale("log")
    ax.legend()
    savefig(fig, "residuals.png")


def plot_ratios():
    data = read("ratios.csv")
    if not data:
        return
    _, body = data
    firsts = [float(r[2]) for r in body if r[1] == "first" and r[2]]
    seconds = [float(r[2]) for r in body if r[1] == "second" and r[2]]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot([firsts, seconds], tick_labels=["first start", "second start"])
    ax.set_ylabel("ratio-ergodic value")
    savefig(fig, "ratios.png")


def plot_checkpoints():
    data = read("checkpoints.csv")
    if not data:
        return
    _, body = data
    steps = col(body, 0)
    med, q90 = col(body, 2), col(body, 3)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, med, marker="o", label="median gated gap")
    ax.plot(steps, q90, marker="s", label="q90 gated gap")
    ax.set_xlabel("step")
    ax.set_ylabel("gap")
    ax.set_yscale("log")
    ax.legend()
    savefig(fig, "checkpoints.png")


def plot_chart():
    data = read("chart.csv")
    if not data:
        return
    _, body = data
    xs, ys = col(body, 0), col(body, 1)
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.plot(xs, ys, lw=1)
    ax.set_xlabel("x")
    ax.set_ylabel("chart(x)")
    savefig(fig, "chart.png")


def plot_drift():
    data = read("drift.csv")
    if not data:
        return
    _, body = data
    ys = col(body, 1)
    drift, sigma = col(body, 2), col(body, 3)
    fig, ax = plt.subplots(figsize=(7, 4))
    if any(s is not None for s in sigma):
        err = [3 * s if s is not None else 0 for s in sigma]
        ax.errorbar(ys, drift, yerr=err, marker="o", capsize=3, lw=1)
    else:
        ax.plot(ys, drift, marker="o", lw=1)
    ax.axhline(0.0, color="gray", lw=1, ls="--")
    ax.set_xlabel("chart coordinate")
    ax.set_ylabel("drift (3 sigma bars)")
    savefig(fig, "drift.png")


def plot_trace():
    data = read("trace.csv")
    if not data:
        return
    _, body = data
    steps = col(body, 0)
    euclid, nu = col(body, 3), col(body, 4)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, euclid, lw=0.8, label="euclidean gap")
    ax.plot(steps, nu, lw=0.8, label="measure gap")
    ax.set_xlabel("step")
    ax.set_ylabel("coupled gap")
    ax.set_yscale("log")
    ax.legend()
    savefig(fig, "trace.png")


def main():
    for fn in (
        plot_visits,
        plot_oscillation,
        plot_nu,
        plot_residuals,
        plot_ratios,
        plot_checkpoints,
        plot_chart,
        plot_drift,
        plot_trace,
    ):
        try:
            fn()
        except Exception as exc:  # keep going; one bad file should not stop the rest
            print(f"{fn.__name__}: {exc}", file=sys.stderr)


if __name__ == "__main__":
    main()
"##;

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_json_str(text).unwrap()
    }

    fn fast_knobs() -> &'static str {
        r#""knobs": {"steps": 200, "trials": 40, "samples": 2000, "cross-trials": 3,
            "kb-iterations": 60, "kb-batches": 6, "samples-per-start": 1,
            "chart-grid": 64, "bootstrap-replicas": 3}"#
    }

    fn run_into(cfg: &ScenarioConfig, threads: usize) -> (tempfile::TempDir, RunOutcome) {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run(cfg, threads, Some(dir.path())).unwrap();
        (dir, outcome)
    }

    #[test]
    fn recurrence_run_writes_expected_files() {
        let cfg = config(&format!(
            r#"{{"system": {{"preset": "translations-discrete"}},
                "experiment": "recurrence", "seed": 5, {}}}"#,
            fast_knobs()
        ));
        let (_tmp, outcome) = run_into(&cfg, 0);
        assert!(outcome.files.contains(&"visits.csv".to_string()));
        assert!(outcome.files.contains(&"config.json".to_string()));
        assert!(outcome.files.contains(&"summary.csv".to_string()));
        assert!(outcome.files.contains(&"plot.py".to_string()));
        let visits = std::fs::read_to_string(outcome.dir.join("visits.csv")).unwrap();
        assert!(visits.starts_with("# linewalk"));
        assert!(visits.contains(&cfg.content_hash()));
        let body: Vec<&str> = visits
            .lines()
            .filter(|l| !l.starts_with('#'))
            .collect();
        assert_eq!(body.len(), 1 + 40, "header row plus one row per trial");
    }

    #[test]
    fn reruns_are_byte_identical_across_thread_counts() {
        for experiment in ["recurrence", "contraction", "stationary"] {
            let cfg = config(&format!(
                r#"{{"system": {{"preset": "affine"}},
                    "experiment": "{experiment}", "seed": 11, {}}}"#,
                fast_knobs()
            ));
            let (_t1, first) = run_into(&cfg, 1);
            let (_t2, second) = run_into(&cfg, 4);
            assert_eq!(first.files, second.files);
            for name in &first.files {
                let a = std::fs::read(first.dir.join(name)).unwrap();
                let b = std::fs::read(second.dir.join(name)).unwrap();
                assert_eq!(a, b, "{experiment}/{name} differs across thread counts");
            }
        }
    }

    #[test]
    fn echoed_config_reproduces_the_run() {
        let cfg = config(&format!(
            r#"{{"system": {{"preset": "translations-minimal"}},
                "experiment": "oscillation", "seed": 3, {}}}"#,
            fast_knobs()
        ));
        let (_t1, first) = run_into(&cfg, 0);
        let echoed_text = std::fs::read_to_string(first.dir.join("config.json")).unwrap();
        let echoed = ScenarioConfig::from_json_str(&echoed_text).unwrap();
        assert_eq!(cfg, echoed);
        let (_t2, second) = run_into(&echoed, 0);
        let a = std::fs::read(first.dir.join("oscillation.csv")).unwrap();
        let b = std::fs::read(second.dir.join("oscillation.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cap_breach_is_a_numeric_failure_with_hint() {
        let cfg = config(
            r#"{"system": {"preset": "affine"}, "experiment": "stationary", "seed": 1,
                "knobs": {"kb-iterations": 40, "kb-batches": 4, "stop-cap": 50}}"#,
        );
        let dir = tempfile::tempdir().unwrap();
        let err = run(&cfg, 0, Some(dir.path())).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("stop-cap"), "{err}");
    }

    #[test]
    fn full_pipeline_writes_all_tables() {
        let cfg = config(&format!(
            r#"{{"system": {{"preset": "affine"}},
                "experiment": "full-pipeline", "seed": 2, {}}}"#,
            fast_knobs()
        ));
        let (_tmp, outcome) = run_into(&cfg, 0);
        for name in [
            "nu.csv",
            "residuals.csv",
            "chart.csv",
            "drift.csv",
            "verdicts.csv",
            "trace.csv",
            "summary.csv",
        ] {
            assert!(
                outcome.files.contains(&name.to_string()),
                "missing {name} in {:?}",
                outcome.files
            );
        }
        let summary: std::collections::HashMap<String, String> =
            outcome.summary.iter().cloned().collect();
        assert!(summary.contains_key("structure_verdict"));
        assert!(summary.contains_key("max_residual"));
        assert!(summary.contains_key("pairing_gap"));
    }

    #[test]
    fn derriennic_run_reports_verdicts() {
        let cfg = config(&format!(
            r#"{{"system": {{"preset": "translations-minimal"}},
                "experiment": "derriennic", "seed": 8, {}}}"#,
            fast_knobs()
        ));
        let (_tmp, outcome) = run_into(&cfg, 0);
        let verdicts = std::fs::read_to_string(outcome.dir.join("verdicts.csv")).unwrap();
        assert!(verdicts.contains("lipschitz,"));
        assert!(verdicts.contains("displacement,"));
        assert!(verdicts.contains("conjugated-validation"));
    }

    #[test]
    fn uniqueness_run_produces_ratio_rows() {
        let cfg = config(&format!(
            r#"{{"system": {{"preset": "translations-minimal"}},
                "experiment": "uniqueness", "seed": 6, {}}}"#,
            fast_knobs()
        ));
        let (_tmp, outcome) = run_into(&cfg, 0);
        let ratios = std::fs::read_to_string(outcome.dir.join("ratios.csv")).unwrap();
        assert!(ratios.contains(",first,"));
        assert!(ratios.contains(",second,"));
    }

    #[test]
    fn output_root_resolution_order() {
        let cfg_with_dir = config(
            r#"{"system": {"preset": "affine"}, "experiment": "recurrence",
                "output-dir": "from-config"}"#,
        );
        let over = Path::new("/override");
        assert_eq!(
            resolve_output_root(&cfg_with_dir, Some(over)),
            PathBuf::from("/override")
        );
        assert_eq!(
            resolve_output_root(&cfg_with_dir, None),
            PathBuf::from("from-config")
        );
    }
}
