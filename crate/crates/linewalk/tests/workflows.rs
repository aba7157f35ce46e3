//! Cross-module workflows at moderate scale: building a measure and feeding
//! it to the uniqueness, coupling, and classification layers, the way the
//! full pipeline wires them together.

use linewalk::chain::{word_event_frequency, BumpProfile, CompiledSystem};
use linewalk::geometry::{classify_structure, gap_trace, NuDistance, StructureClass};
use linewalk::scenario::{preset, PROFILE_WIDEN_FRAC};
use linewalk::stationary::{
    build_stationary, krylov_bogolyubov, uniqueness_cross_check, StationaryEstimate, StopConfig,
    TestFunction,
};
use linewalk::stream::StreamFactory;
use linewalk::walkgroup::GeneratorSystem;

fn system_for(name: &str) -> GeneratorSystem {
    preset(name).unwrap().into_system()
}

fn moderate_nu(system: &GeneratorSystem, seed: u64, kb_iterations: usize) -> StationaryEstimate {
    let cs = CompiledSystem::new(system);
    let k = system.recurrence_interval();
    let profile = BumpProfile::around(&k, PROFILE_WIDEN_FRAC);
    let factory = StreamFactory::new(seed);
    let stop = StopConfig {
        cap: 100_000_000,
        record_budget: 1 << 17,
    };
    let nu0 =
        krylov_bogolyubov(&cs, &profile, &k, kb_iterations, 8, &stop, &factory, 0).unwrap();
    build_stationary(&cs, &nu0, &profile, &k, 2, &stop, &factory, 1 << 40).unwrap()
}

#[test]
fn sampled_ratios_match_the_measure_ratio() {
    let system = system_for("translations-minimal");
    let cs = CompiledSystem::new(&system);
    let est = moderate_nu(&system, 21, 400);
    let psi = TestFunction::plateau(0.0, 1.0, 0.05);
    let phi = TestFunction::plateau(0.0, 2.0, 0.05);
    let k = system.recurrence_interval();
    let report = uniqueness_cross_check(
        &cs,
        k.midpoint_f64(),
        7.3,
        &psi,
        &phi,
        200_000,
        5,
        Some(&est.nu),
        &StreamFactory::new(22),
        0,
    );
    // For dense translation orbits the invariant measure is a multiple of
    // length, so the plateau integrals have ratio (1 + ramp) / (2 + ramp)
    // exactly; the built measure reproduces it up to estimator noise.
    let exact = 1.05 / 2.05;
    let target = report.measure_ratio.expect("measure supplied");
    assert!(
        (target - exact).abs() < 0.06,
        "measure ratio {target} far from the length-measure value {exact}"
    );
    for median in [report.median_x1.unwrap(), report.median_x2.unwrap()] {
        let rel = (median - exact).abs() / exact;
        assert!(
            rel < 0.1,
            "sampled median {median} vs exact ratio {exact} (rel {rel})"
        );
    }
}

#[test]
fn euclid_gap_roams_while_nu_gap_settles() {
    let system = system_for("affine");
    let cs = CompiledSystem::new(&system);
    let k = system.recurrence_interval();
    let est = moderate_nu(&system, 5, 120);
    let d = NuDistance::new(est.nu.clone());
    let mid = k.midpoint_f64();
    let mut rng = StreamFactory::new(6).stream(0);
    let trace = gap_trace(
        &cs,
        &d,
        mid - 0.25,
        mid + 0.25,
        k.a_f64(),
        k.b_f64(),
        20_000,
        &mut rng,
    );
    let initial_euclid = trace[0].gap_euclid;
    let initial_nu = trace[0].gap_nu;
    let max_euclid = trace.iter().map(|s| s.gap_euclid).fold(0.0, f64::max);
    let final_nu = trace.last().unwrap().gap_nu;
    // The raw gap is blown up and squeezed by orders of magnitude along the
    // way; the measure-weighted gap is a bounded martingale and settles.
    assert!(
        max_euclid > 10.0 * initial_euclid,
        "euclidean gap never expanded: max {max_euclid} vs initial {initial_euclid}"
    );
    assert!(
        final_nu < 0.5 * initial_nu,
        "nu-gap did not settle: final {final_nu} vs initial {initial_nu}"
    );
}

#[test]
fn presets_classify_as_advertised() {
    let factory = StreamFactory::new(77);
    let cases = [
        ("translations-discrete", StructureClass::DiscreteOrbit),
        ("translations-minimal", StructureClass::TranslationLike),
        ("affine", StructureClass::StrongContractionLike),
        ("lifted-rotation", StructureClass::LiftLike),
    ];
    for (name, expected) in cases {
        let system = system_for(name);
        let report = classify_structure(&system, 2000, &factory, 0);
        assert_eq!(report.verdict, expected, "{name}: {:?}", report.notes);
    }
}

#[test]
fn contracting_word_appears_at_almost_every_long_walk() {
    let system = system_for("affine");
    let cs = CompiledSystem::new(&system);
    let k = system.recurrence_interval();
    let halve = system
        .generators
        .iter()
        .position(|g| g.name == "double_inv")
        .unwrap();
    let stats = word_event_frequency(
        &cs,
        k.midpoint_f64(),
        &k,
        &[halve, halve],
        200_000,
        100,
        &StreamFactory::new(30),
        0,
    );
    assert!(
        stats.hit_fraction >= 0.95,
        "hit fraction {} of walks inserted the contracting word",
        stats.hit_fraction
    );
    // Letters are drawn independently of position, so insertions happen at
    // exactly (1/4)^2 of eligible visits in expectation.
    let rate = stats.mean_hits / stats.mean_eligible_visits;
    let expected = 1.0 / 16.0;
    assert!(
        (rate - expected).abs() < 0.2 * expected,
        "insertion rate {rate} vs expected {expected}"
    );
    assert!(stats.mean_eligible_visits > 50.0);
}
