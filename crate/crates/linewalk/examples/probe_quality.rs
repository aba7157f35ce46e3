use linewalk::chain::{BumpProfile, CompiledSystem};
use linewalk::cli::default_probes;
use linewalk::derriennic::{run_pipeline, PipelineConfig};
use linewalk::geometry::{martingale_check, NuDistance};
use linewalk::scenario::{preset, PROFILE_WIDEN_FRAC};
use linewalk::stationary::{
    bootstrap_residual_floor, build_stationary, krylov_bogolyubov, stationarity_residuals,
    StopConfig, TestFunction,
};
use linewalk::stream::StreamFactory;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = &args[1];
    let seed: u64 = args[2].parse().unwrap();
    let kb: usize = args[3].parse().unwrap();
    let sps: usize = args[4].parse().unwrap();
    let budget: usize = 1 << args[5].parse::<u32>().unwrap();
    let widen: f64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(PROFILE_WIDEN_FRAC);
    let cap: usize = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(1_000_000_000);
    let system = preset(name).unwrap().into_system();
    let cs = CompiledSystem::new(&system);
    let k = system.recurrence_interval();
    let profile = BumpProfile::around(&k, widen);
    let stop = StopConfig { cap, record_budget: budget };
    let t0 = Instant::now();
    let factory = StreamFactory::new(seed);
    let nu0 = krylov_bogolyubov(&cs, &profile, &k, kb, 8, &stop, &factory, 0).unwrap();
    let est = build_stationary(&cs, &nu0, &profile, &k, sps, &stop, &factory, 1 << 40).unwrap();
    println!("build: runs={} atoms={} in {:?}", est.runs, est.nu.len(), t0.elapsed());

    let probes = default_probes(&k);
    let fns: Vec<TestFunction> = probes.iter().map(|(_, p)| p.clone()).collect();
    let res = stationarity_residuals(&system, &est.nu, &fns);
    let floors =
        bootstrap_residual_floor(&system, &est.nu, &fns, 12, &StreamFactory::new(401), 0).unwrap();
    for (i, (pn, _)) in probes.iter().enumerate() {
        println!("  probe {pn}: res={:.6} floor={:.6} ratio={:.2}", res[i], floors[i], res[i] / floors[i]);
    }

    let t1 = Instant::now();
    let d = NuDistance::new(est.nu.clone());
    let mid = k.midpoint_f64();
    let mr = martingale_check(&cs, &d, mid - 0.25, mid + 0.25, 200, 10_000, &StreamFactory::new(601), 0);
    println!("martingale: max_abs_z={:.2} ({:?})", mr.max_abs_z, t1.elapsed());

    let t2 = Instant::now();
    let cfg = PipelineConfig { grid_nodes: 512, drift_grid_points: 11, tolerance: 0.1, bootstrap_replicas: Some(12) };
    let report = run_pipeline(&system, &est.nu, &cfg, &StreamFactory::new(801), 0).unwrap();
    let sig = report.drift_sigma.as_ref().unwrap();
    let worst = report
        .drift
        .points
        .iter()
        .zip(sig)
        .map(|((_, dft), s)| dft.abs() / s.max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    println!(
        "pipeline: max|drift|={:.6} worst z={:.2} within={:?} lips={} disp={} ({:?})",
        report.drift.max_abs, worst, report.drift_within_noise(3.0),
        report.all_lipschitz_ok(), report.all_displacement_ok(), t2.elapsed()
    );
}
