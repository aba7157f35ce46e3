use linewalk::chain::{stopped_walk_fold, BumpProfile, CompiledSystem, WalkError};
use linewalk::scenario::{preset, PROFILE_WIDEN_FRAC};
use linewalk::stream::StreamFactory;

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
    let mut rng = factory.stream(0);
    let mut x = k.midpoint_f64();
    let mut durs: Vec<usize> = Vec::with_capacity(n);
    let mut breaches = 0usize;
    let mut worst_start = f64::NAN;
    for _ in 0..n {
        match stopped_walk_fold(&cs, &profile, x, cap, &mut rng, |_| {}) {
            Ok((d, stop)) => {
                if d > 1_000_000 {
                    println!("  big T={d} from start {x:.6}");
                }
                durs.push(d);
                x = stop;
            }
            Err(WalkError::StoppingTimeCap { .. }) => {
                breaches += 1;
                println!("  BREACH from start {x:.6}");
                worst_start = x;
                // keep chaining from the same start with fresh randomness
            }
        }
    }
    durs.sort_unstable();
    println!(
        "chained n={n} cap={cap} widen={widen} breaches={breaches} worst_start={worst_start} max={}",
        durs.last().copied().unwrap_or(0)
    );
    for t in [1_000usize, 10_000, 100_000, 1_000_000] {
        if t < cap {
            let frac = durs.iter().rev().take_while(|&&d| d > t).count() as f64 / n as f64
                + breaches as f64 / n as f64;
            println!("  P(T>{t}) = {:.4e}  implied c = {:.3}", frac, frac * (t as f64).sqrt());
        }
    }
}
