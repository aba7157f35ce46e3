use linewalk::chain::{stopped_walk_fold, BumpProfile, CompiledSystem, WalkError};
use linewalk::scenario::preset;
use linewalk::stream::StreamFactory;
use std::cell::Cell;

fn main() {
    let system = preset("affine").unwrap().into_system();
    let cs = CompiledSystem::new(&system);
    let k = system.recurrence_interval();
    let profile = BumpProfile::around(&k, 0.5);
    let factory = StreamFactory::new(99);
    let mut rng = factory.stream(0);
    let mut x = k.midpoint_f64();
    let last = Cell::new(f64::NAN);
    let peak = Cell::new(0f64);
    let mut done = 0usize;
    for i in 0..12000 {
        last.set(f64::NAN);
        peak.set(0.0);
        match stopped_walk_fold(&cs, &profile, x, 100_000_000, &mut rng, |p| {
            last.set(p);
            if p.abs() > peak.get() {
                peak.set(p.abs());
            }
        }) {
            Ok((_, stop)) => {
                x = stop;
                done += 1;
            }
            Err(WalkError::StoppingTimeCap { .. }) => {
                println!(
                    "excursion {i}: CAP. last position = {:e}, peak |x| = {:e}, finite = {}",
                    last.get(),
                    peak.get(),
                    last.get().is_finite()
                );
            }
        }
    }
    println!("completed {done} of 12000");
}
