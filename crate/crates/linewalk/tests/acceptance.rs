//! Acceptance gate: nine desk-scale checks, one test per criterion, fixed
//! master seeds throughout. The harness prints one pass/fail line for each.
//!
//! Every run below is deterministic: all randomness flows through indexed
//! streams of a fixed seed, so these are exact regression checks, not flaky
//! statistical ones. Tolerances are stated next to each assertion.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use linewalk::chain::{
    oscillation_stats, scan_coupled, visit_counts_at, BumpProfile, CompiledSystem,
};
use linewalk::cli::default_probes;
use linewalk::derriennic::{run_pipeline, PipelineConfig};
use linewalk::geometry::{contraction_experiment, martingale_check, NuDistance};
use linewalk::homeo::{rat, rat_int, rat_to_f64};
use linewalk::scenario::{preset, PRESET_NAMES, PROFILE_WIDEN_FRAC};
use linewalk::stationary::{
    bootstrap_residual_floor, build_stationary, krylov_bogolyubov, stationarity_residuals,
    uniqueness_cross_check, EmpiricalRadonMeasure, StationaryEstimate, StopConfig, TestFunction,
};
use linewalk::stream::StreamFactory;
use linewalk::walkgroup::GeneratorSystem;
use linewalk::{PLHomeo, Rat};

fn system_for(name: &str) -> GeneratorSystem {
    preset(name).expect("known preset").into_system()
}

/// Production-strength stationary estimate, built once per preset and shared
/// by the criteria that need it. Large stopping cap so no excursion is cut
/// short at these seeds.
fn production_nu(name: &str) -> &'static StationaryEstimate {
    static AFFINE: OnceLock<StationaryEstimate> = OnceLock::new();
    static MINIMAL: OnceLock<StationaryEstimate> = OnceLock::new();
    let (cell, seed) = match name {
        "affine" => (&AFFINE, 107),
        "translations-minimal" => (&MINIMAL, 105),
        other => panic!("no shared estimate for {other}"),
    };
    cell.get_or_init(|| {
        let system = system_for(name);
        let cs = CompiledSystem::new(&system);
        let k = system.recurrence_interval();
        let profile = BumpProfile::around(&k, PROFILE_WIDEN_FRAC);
        let factory = StreamFactory::new(seed);
        let stop = StopConfig {
            cap: 1_000_000_000,
            record_budget: 1 << 17,
        };
        let nu0 = krylov_bogolyubov(&cs, &profile, &k, 400, 8, &stop, &factory, 0)
            .expect("averaging pass at the pinned seed stays under the cap");
        build_stationary(&cs, &nu0, &profile, &k, 2, &stop, &factory, 1 << 40)
            .expect("refinement pass at the pinned seed stays under the cap")
    })
}

fn random_rat(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rat {
    rat(rng.gen_range(lo..=hi), rng.gen_range(1..=5))
}

fn random_pl(rng: &mut ChaCha8Rng) -> PLHomeo {
    let breaks = rng.gen_range(0..=3usize);
    if breaks == 0 {
        let slope = random_rat(rng, 1, 6);
        let offset = random_rat(rng, -8, 8);
        return PLHomeo::affine(slope, offset).expect("positive slope");
    }
    let mut xs = vec![random_rat(rng, -8, 8)];
    for _ in 1..breaks {
        let step = random_rat(rng, 1, 6);
        let next = xs.last().unwrap() + step;
        xs.push(next);
    }
    let slopes = (0..=breaks).map(|_| random_rat(rng, 1, 6)).collect();
    let anchor = random_rat(rng, -8, 8);
    PLHomeo::from_breakpoints(xs, slopes, anchor).expect("ascending breakpoints")
}

#[test]
fn criterion_1_exact_pl_algebra() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let zero = Rat::from_integer(0.into());
    for _ in 0..1000 {
        let f = random_pl(&mut rng);
        let g = random_pl(&mut rng);
        assert_eq!(f.compose(&f.invert()), PLHomeo::identity());
        assert_eq!(g.invert().compose(&g), PLHomeo::identity());
        let h = f.compose(&g);
        assert_eq!(h.invert(), g.invert().compose(&f.invert()));
        assert_eq!(h.invert().invert(), h);
        for _ in 0..3 {
            let x = random_rat(&mut rng, -20, 20);
            assert_eq!(h.invert().eval(&h.eval(&x)), x);
        }
        let a = random_rat(&mut rng, -10, 0);
        let b = &a + random_rat(&mut rng, 1, 10);
        assert_eq!(f.phi_increment_residual(&a, &b), zero);
        assert_eq!(h.phi_increment_residual(&a, &b), zero);
    }
    let elapsed = started.elapsed();
    println!("criterion 1: 1000 exact pairs in {elapsed:?}");
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10 s");
}

#[test]
fn criterion_2_oscillation_lower_bound() {
    let (steps, trials) = (10_000usize, 10_000usize);
    let sigma = (0.25 / trials as f64).sqrt();
    let floor = 0.5 - 3.0 * sigma;
    for (name, seed) in [("affine", 201u64), ("translations-minimal", 202)] {
        let system = system_for(name);
        let cs = CompiledSystem::new(&system);
        let x0 = system.recurrence_interval().midpoint_f64();
        let stats = oscillation_stats(
            &cs,
            x0,
            steps,
            trials,
            x0 + 5.0,
            &StreamFactory::new(seed),
            0,
        );
        let min_frac = stats.frac_stay_above_start[1..]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        println!("criterion 2 ({name}): min per-step fraction {min_frac}, floor {floor}");
        assert!(
            min_frac >= floor,
            "{name}: fraction {min_frac} fell below 0.5 - 3 sigma = {floor}"
        );
    }
}

#[test]
fn criterion_3_recurrence_visits() {
    let (n1, n2) = (100_000usize, 200_000usize);
    let (seeds, batch) = (100usize, 10usize);
    for name in PRESET_NAMES {
        let system = system_for(name);
        let cs = CompiledSystem::new(&system);
        let k = system.recurrence_interval();
        let (lo, hi, mid) = (k.a_f64(), k.b_f64(), k.midpoint_f64());
        let factory = StreamFactory::new(301);
        let mut first_hundred = Vec::new();
        let mut seeds_increased = 0usize;
        for seed in 0..seeds {
            let mut at_n1 = Vec::with_capacity(batch);
            let mut at_n2 = Vec::with_capacity(batch);
            for j in 0..batch {
                let mut rng = factory.stream((seed * batch + j) as u64);
                let counts = visit_counts_at(&cs, mid, lo, hi, &[n1, n2], &mut rng);
                at_n1.push(counts[0]);
                at_n2.push(counts[1]);
                if first_hundred.len() < 100 {
                    first_hundred.push(counts[0]);
                }
            }
            at_n1.sort_unstable();
            at_n2.sort_unstable();
            if at_n2[(batch - 1) / 2] > at_n1[(batch - 1) / 2] {
                seeds_increased += 1;
            }
        }
        first_hundred.sort_unstable();
        let median_visits = first_hundred[(first_hundred.len() - 1) / 2];
        println!(
            "criterion 3 ({name}): median visits {median_visits} at n={n1}, \
             median increased in {seeds_increased}/{seeds} seeds"
        );
        assert!(
            median_visits >= 50,
            "{name}: median visit count {median_visits} below 50"
        );
        assert!(
            seeds_increased >= 90,
            "{name}: visit medians rose in only {seeds_increased}/{seeds} seeds"
        );
    }
}

#[test]
fn criterion_4_stationarity_affine() {
    let system = system_for("affine");
    let est = production_nu("affine");
    let k = system.recurrence_interval();
    let probes = default_probes(&k);
    let fns: Vec<TestFunction> = probes.iter().map(|(_, p)| p.clone()).collect();
    let residuals = stationarity_residuals(&system, &est.nu, &fns);
    let floors = bootstrap_residual_floor(
        &system,
        &est.nu,
        &fns,
        12,
        &StreamFactory::new(401),
        0,
    )
    .unwrap();
    for (i, (name, _)) in probes.iter().enumerate() {
        println!(
            "criterion 4 ({name}): residual {} vs floor {}",
            residuals[i], floors[i]
        );
        assert!(
            residuals[i] <= 3.0 * floors[i],
            "{name}: residual {} above 3x bootstrap floor {}",
            residuals[i],
            floors[i]
        );
    }

    // Negative control: double the weight carried by a window under the core
    // probe's left ramp, where the probe's one-step curvature is nonzero; the
    // residual must now stand clear of the same noise floor.
    let (a, w) = (k.a_f64(), k.b_f64() - k.a_f64());
    let corrupted = EmpiricalRadonMeasure::from_weighted_samples(
        est.nu.samples().map(|(x, wt)| {
            if a - w / 4.0 <= x && x <= a {
                (x, 2.0 * wt)
            } else {
                (x, wt)
            }
        }),
        est.nu.anchor(),
    )
    .unwrap();
    let corrupted_residuals = stationarity_residuals(&system, &corrupted, &fns);
    let core = probes.iter().position(|(n, _)| *n == "core").unwrap();
    println!(
        "criterion 4 (corrupted core): residual {} vs floor {}",
        corrupted_residuals[core], floors[core]
    );
    assert!(
        corrupted_residuals[core] > 3.0 * floors[core],
        "corrupted measure slipped under the floor: {} vs {}",
        corrupted_residuals[core],
        floors[core]
    );
}

#[test]
fn criterion_5_uniqueness_ratio() {
    let system = system_for("translations-minimal");
    let cs = CompiledSystem::new(&system);
    let psi = TestFunction::plateau(0.0, 1.0, 0.05);
    let phi = TestFunction::plateau(0.0, 2.0, 0.05);
    let report = uniqueness_cross_check(
        &cs,
        0.0,
        7.3,
        &psi,
        &phi,
        1_000_000,
        9,
        None,
        &StreamFactory::new(501),
        0,
    );
    let m1 = report.median_x1.expect("trials returned");
    let m2 = report.median_x2.expect("trials returned");
    println!("criterion 5: medians {m1} (x=0) and {m2} (x=7.3), target 0.5");
    for m in [m1, m2] {
        assert!(
            (m - 0.5).abs() <= 0.05,
            "ratio median {m} more than 10% from 0.5"
        );
    }
    let gap = (m1 - m2).abs() / m1.abs().max(m2.abs());
    assert!(gap <= 0.10, "cross-start medians differ by {gap} > 10%");
}

#[test]
fn criterion_6_martingale_distance() {
    let system = system_for("affine");
    let cs = CompiledSystem::new(&system);
    let est = production_nu("affine");
    let mid = system.recurrence_interval().midpoint_f64();
    let d = NuDistance::new(est.nu.clone());
    let report = martingale_check(
        &cs,
        &d,
        mid - 0.25,
        mid + 0.25,
        200,
        10_000,
        &StreamFactory::new(601),
        0,
    );
    println!(
        "criterion 6: max |mean - initial| / sigma = {} over {} steps",
        report.max_abs_z,
        report.means.len()
    );
    assert!(
        report.max_abs_z <= 3.0,
        "distance mean drifted {} sigma from its start",
        report.max_abs_z
    );
}

#[test]
fn criterion_7_contraction_regimes() {
    // Contracting regime: the median last-gated gap after 1e5 steps sits
    // far below the initial separation.
    let system = system_for("affine");
    let cs = CompiledSystem::new(&system);
    let k = system.recurrence_interval();
    let mid = k.midpoint_f64();
    let report = contraction_experiment(
        &cs,
        mid - 0.25,
        mid + 0.25,
        k.a_f64(),
        k.b_f64(),
        100_000,
        200,
        0.5,
        &StreamFactory::new(701),
        0,
    );
    let median = report.median_last_gated.expect("gated trials");
    println!(
        "criterion 7 (affine): median gated gap {} vs initial {}",
        median, report.initial_gap
    );
    assert!(
        median <= 0.2 * report.initial_gap,
        "median gated gap {median} above 0.2x initial {}",
        report.initial_gap
    );

    // Rigid regime: integer translations move dyadic starts exactly, so the
    // coupled gap is the same floating-point number at every step.
    let system = system_for("translations-discrete");
    let cs = CompiledSystem::new(&system);
    let mut rng = StreamFactory::new(702).stream(0);
    let mut constant = true;
    scan_coupled(&cs, 0.25, 0.75, 20_000, &mut rng, |_, x, y| {
        constant &= (y - x).to_bits() == (0.5f64).to_bits();
    });
    println!("criterion 7 (translations-discrete): gap bitwise constant = {constant}");
    assert!(constant, "translation gap failed to stay exactly 0.5");

    // Mixed regime: contraction happens in a positive fraction of trials,
    // witnessed by a 95% interval bounded away from zero.
    let system = system_for("lifted-rotation");
    let cs = CompiledSystem::new(&system);
    let k = system.recurrence_interval();
    let mid = k.midpoint_f64();
    let report = contraction_experiment(
        &cs,
        mid - 0.25,
        mid + 0.25,
        k.a_f64(),
        k.b_f64(),
        100_000,
        200,
        0.5,
        &StreamFactory::new(703),
        0,
    );
    println!(
        "criterion 7 (lifted-rotation): contracted {}/{} gated, CI {:?}",
        report.trials_contracted, report.trials_gated, report.contracted_ci
    );
    assert!(
        report.contracted_ci.0 > 0.0,
        "contracting-fraction CI {:?} touches zero",
        report.contracted_ci
    );
}

#[test]
fn criterion_8_derriennic_pipeline() {
    for (name, base) in [("affine", 801u64), ("translations-minimal", 802)] {
        let system = system_for(name);
        let est = production_nu(name);
        let cfg = PipelineConfig {
            grid_nodes: 512,
            drift_grid_points: 11,
            tolerance: 0.1,
            bootstrap_replicas: Some(12),
        };
        let report = run_pipeline(
            &system,
            &est.nu,
            &cfg,
            &StreamFactory::new(base),
            0,
        )
        .unwrap();
        println!(
            "criterion 8 ({name}): max |drift| {} over {} grid points",
            report.drift.max_abs,
            report.grid_y.len()
        );
        assert_eq!(
            report.drift_within_noise(3.0),
            Some(true),
            "{name}: post-chart drift {} above 3x bootstrap sigma",
            report.drift.max_abs
        );
        let weight_of = |gname: &str| -> f64 {
            report
                .conjugated
                .generators
                .iter()
                .find(|g| g.name == gname)
                .map(|g| rat_to_f64(&g.weight))
                .expect("verdict names a generator")
        };
        for v in &report.lipschitz {
            let bound = 1.1 / weight_of(&v.name);
            assert!(
                v.max_slope <= bound,
                "{name}/{}: slope {} above 1.1/weight = {bound}",
                v.name,
                v.max_slope
            );
        }
        let phi_bar = report.displacement.phi_bar;
        for v in &report.displacement.verdicts {
            let bound = 1.1 * (2.0 * phi_bar).sqrt() / weight_of(&v.name);
            assert!(
                v.sup_displacement <= bound,
                "{name}/{}: displacement {} above 1.1 sqrt(2 phi)/weight = {bound}",
                v.name,
                v.sup_displacement
            );
        }
        assert!(report.all_lipschitz_ok(), "{name}: tool slope verdicts");
        assert!(report.all_displacement_ok(), "{name}: tool displacement verdicts");
    }

    // Negative control, exact: before any change of coordinates the affine
    // system pushes the point 8 right by one unit per step on average.
    let system = system_for("affine");
    let x = rat_int(8);
    let drift: Rat = system
        .generators
        .iter()
        .map(|g| &g.weight * (g.map.eval(&x) - &x))
        .sum();
    println!("criterion 8 (pre-chart control): drift at 8 = {drift}");
    assert_eq!(drift, rat_int(1), "raw affine drift at 8 must be exactly 1");
}

#[test]
fn criterion_9_thread_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"system": {"preset": "affine"}, "experiment": "full-pipeline", "seed": 31,
            "knobs": {"steps": 2000, "kb-iterations": 120, "kb-batches": 8,
                      "samples-per-start": 1, "chart-grid": 128,
                      "bootstrap-replicas": 6}}"#,
    )
    .unwrap();
    let mut dirs = Vec::new();
    for (label, threads) in [("t1", "1"), ("t4", "4")] {
        let out_root = tmp.path().join(label);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_linewalk"))
            .arg("run")
            .arg(&config)
            .arg("--threads")
            .arg(threads)
            .arg("--out")
            .arg(&out_root)
            .status()
            .unwrap();
        assert!(status.success(), "run with --threads {threads} failed");
        let mut entries: Vec<_> = std::fs::read_dir(&out_root)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        assert_eq!(entries.len(), 1);
        dirs.push(entries.pop().unwrap());
    }
    let mut names: Vec<String> = std::fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut compared = 0;
    for name in &names {
        let a = std::fs::read(dirs[0].join(name)).unwrap();
        let b = std::fs::read(dirs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between thread counts");
        compared += 1;
    }
    println!("criterion 9: {compared} files byte-identical across thread counts");
    assert!(names.iter().filter(|n| n.ends_with(".csv")).count() >= 5);
}
