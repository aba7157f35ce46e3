use linewalk::chain::{stopped_walk_fold, BumpProfile, CompiledSystem, WalkError};
use linewalk::scenario::{preset, PROFILE_WIDEN_FRAC};
use linewalk::stream::StreamFactory;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = &args[1];
    let n: usize = args[2].parse().unwrap();
    let cap: usize = args[3].parse().unwrap();
    let widen: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(PROFILE_WIDEN_FRAC);
    let system = preset(name).unwrap().into_system();
    let cs = CompiledSystem::new(&system);
    let k = system.recurrence_interval();
    let profile = BumpProfile::around(&k, widen);
    let factory = StreamFactory::new(99);
    let x0 = k.midpoint_f64();
    let t0 = Instant::now();
    let mut durs: Vec<usize> = Vec::with_capacity(n);
    let mut breaches = 0usize;
    let mut total: u64 = 0;
    for i in 0..n as u64 {
        let mut rng = factory.stream(i);
        match stopped_walk_fold(&cs, &profile, x0, cap, &mut rng, |_| {}) {
            Ok((d, _)) => {
                durs.push(d);
                total += d as u64;
            }
            Err(WalkError::StoppingTimeCap { .. }) => {
                breaches += 1;
                total += cap as u64;
            }
        }
    }
    durs.sort_unstable();
    let q = |p: f64| durs.get(((durs.len() as f64 * p) as usize).min(durs.len().saturating_sub(1))).copied().unwrap_or(0);
    println!(
        "n={n} cap={cap} widen={widen} breaches={breaches} P(T>cap)={:.2e} mean={:.1} med={} p90={} p99={} p999={} max={} steps={:.2e} in {:?}",
        breaches as f64 / n as f64,
        total as f64 / n as f64,
        q(0.5), q(0.9), q(0.99), q(0.999),
        durs.last().copied().unwrap_or(0),
        total as f64,
        t0.elapsed()
    );
    // implied tail constant c in P(T>t) ~ c/sqrt(t), from several thresholds
    for t in [1_000usize, 10_000, 100_000, 1_000_000] {
        if t < cap {
            let frac = durs.iter().rev().take_while(|&&d| d > t).count() as f64 / n as f64
                + breaches as f64 / n as f64;
            println!("  P(T>{t}) = {:.4e}  implied c = {:.3}", frac, frac * (t as f64).sqrt());
        }
    }
}
