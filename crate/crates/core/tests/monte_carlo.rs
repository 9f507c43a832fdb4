use hdistill::enumerator::reference;
use hdistill::monte_carlo::*;
use hdistill::planner::{evaluate_sequence, resolve};
use hdistill::routines::RoutineModel;
use std::sync::OnceLock;

fn table() -> &'static VerdictTable {
    static T: OnceLock<VerdictTable> = OnceLock::new();
    T.get_or_init(|| VerdictTable::ten_to_two().unwrap())
}

fn models() -> &'static [RoutineModel] {
    static M: OnceLock<Vec<RoutineModel>> = OnceLock::new();
    M.get_or_init(|| vec![RoutineModel::ten_to_two().unwrap(), RoutineModel::fifteen_to_one()])
}

fn horner(c: &[i64], p: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * p + k as f64)
}

fn within(count: u64, n: u64, expected: f64) -> bool {
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    (count as f64 / n as f64 - expected).abs() <= 3.0 * sigma
}

fn stages(seq: &str) -> Vec<Stage<'static>> {
    resolve(seq, models())
        .unwrap()
        .into_iter()
        .map(|model| {
            let engine = if model.name() == "A" { Engine::Circuit(table()) } else { Engine::Model };
            Stage { model, engine }
        })
        .collect()
}

#[test]
fn noiseless_sampling_always_accepts() {
    let s = sample_routine(table(), 0.0, 10_000, 3).unwrap();
    assert_eq!((s.accepts, s.errors_out1, s.errors_out2, s.errors_both), (10_000, 0, 0, 0));
    assert!(sample_routine(table(), 0.1, 0, 3).is_err());
}

#[test]
fn sampled_rates_match_reference_polynomials() {
    let p = 0.05;
    let s = sample_routine(table(), p, 1_000_000, 20_26).unwrap();
    let a = horner(&reference::ACCEPTANCE, p);
    let u = horner(&reference::UNDETECTED, p);
    let u2 = horner(&reference::UNDETECTED_ANY, p);
    assert!(within(s.accepts, s.trials, a));
    assert!(within(s.errors_out1, s.accepts, u / a));
    assert!(within(s.errors_out2, s.accepts, u / a));
    assert!(within(s.errors_both, s.accepts, (2.0 * u - u2) / a));
    let report = sample_report(&s, p, &ten_to_two_polynomials().unwrap());
    assert!(report.pass, "{report:?}");
}

#[test]
fn sampling_is_schedule_independent() {
    let a = sample_routine(table(), 0.07, 50_000, 11).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| sample_routine(table(), 0.07, 50_000, 11).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, sample_routine(table(), 0.07, 50_000, 12).unwrap());
}

#[test]
fn pipeline_is_schedule_independent() {
    let a = run_blocked_pipeline(100_000, &stages("AA"), 0.05, 5, Grouping::Blocked).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| run_blocked_pipeline(100_000, &stages("AA"), 0.05, 5, Grouping::Blocked).unwrap());
    assert_eq!(a.rounds.iter().map(|r| &r.blocks).collect::<Vec<_>>(), b.rounds.iter().map(|r| &r.blocks).collect::<Vec<_>>());
}

#[test]
fn noiseless_round_fills_every_block() {
    let run = run_blocked_pipeline(1_000_003, &stages("A"), 0.0, 1, Grouping::Blocked).unwrap();
    let last = run.last();
    assert_eq!(last.block_sizes(), [100_000, 100_000]);
    assert_eq!(last.errors(), 0);
    let r = independence_check(last).unwrap();
    assert_eq!((r.correlation, r.lower, r.upper), (0.0, 0.0, 0.0));
}

#[test]
fn block_sizes_meet_the_acceptance_bound() {
    let run = run_blocked_pipeline(1_000_000, &stages("A"), 0.01, 8, Grouping::Blocked).unwrap();
    let check = block_size_check(&run, 1, &models()[0]).unwrap();
    assert_eq!(check.instances_per_block, 100_000);
    let a = horner(&reference::ACCEPTANCE, 0.01);
    assert!((check.expected - a * 100_000.0).abs() < 1e-6);
    assert!(check.within_sigma && check.meets_bound, "{check:?}");
}

#[test]
fn two_rounds_reach_the_composed_error() {
    let run = run_blocked_pipeline(10_000_000, &stages("AA"), 0.01, 21, Grouping::Blocked).unwrap();
    let e = |p: f64| horner(&reference::UNDETECTED, p) / horner(&reference::ACCEPTANCE, p);
    let last = run.last();
    assert_eq!(last.blocks.len(), 4);
    assert!(within(last.errors() as u64, last.states() as u64, e(e(0.01))), "{} / {}", last.errors(), last.states());
}

#[test]
fn pipelines_converge_to_planner_predictions() {
    for (seq, k0) in [("A", 2_000_000u64), ("AA", 4_000_000), ("B", 3_000_000), ("BA", 6_000_000)] {
        let run = run_blocked_pipeline(k0, &stages(seq), 0.05, 99, Grouping::Blocked).unwrap();
        let predicted = evaluate_sequence(&resolve(seq, models()).unwrap(), 0.05).final_error;
        let last = run.last();
        assert!(last.states() > 1000, "{seq}");
        assert!(
            within(last.errors() as u64, last.states() as u64, predicted),
            "{seq}: {} / {} vs {predicted}",
            last.errors(),
            last.states()
        );
    }
}

#[test]
fn blocked_grouping_is_uncorrelated_and_instance_pairs_are_not() {
    let blocked = run_blocked_pipeline(2_000_000, &stages("A"), 0.05, 4, Grouping::Blocked).unwrap();
    let r = independence_check(blocked.last()).unwrap();
    assert!(r.contains_zero, "{r:?}");
    let paired = run_blocked_pipeline(2_000_000, &stages("A"), 0.05, 4, Grouping::InstancePairs).unwrap();
    let q = independence_check(paired.last()).unwrap();
    assert!(!q.contains_zero && q.lower > 0.0, "{q:?}");
    // Expected correlation from (2u - u2)/a against (u/a)^2.
    let p = 0.05;
    let (a, u, u2) = (
        horner(&reference::ACCEPTANCE, p),
        horner(&reference::UNDETECTED, p),
        horner(&reference::UNDETECTED_ANY, p),
    );
    let (e, both) = (u / a, (2.0 * u - u2) / a);
    let rho = (both - e * e) / (e * (1.0 - e));
    assert!((q.correlation - rho).abs() < 3.0 / (q.pairs as f64).sqrt(), "{} vs {rho}", q.correlation);
}

#[test]
fn exhausted_blocks_are_reported() {
    let run = run_blocked_pipeline(15, &stages("AA"), 0.0, 1, Grouping::Blocked).unwrap();
    assert!(run.halted.is_some());
    assert_eq!(run.last().states(), 0);
    assert!(run_blocked_pipeline(5, &stages("A"), 0.0, 1, Grouping::Blocked).is_err());
}
