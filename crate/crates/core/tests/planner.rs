use hdistill::enumerator::reference;
use hdistill::planner::*;
use hdistill::poly::ExactPolynomial;
use hdistill::routines::RoutineModel;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use std::sync::OnceLock;

fn models() -> &'static [RoutineModel] {
    static MODELS: OnceLock<Vec<RoutineModel>> = OnceLock::new();
    MODELS.get_or_init(|| vec![RoutineModel::ten_to_two().unwrap(), RoutineModel::fifteen_to_one()])
}

fn plan(seq: &str, p0: f64) -> DistillationPlan {
    evaluate_sequence(&resolve(seq, models()).unwrap(), p0)
}

/// Exact recursion over the rationals, with A built from the reference
/// coefficients and B from its closed form in `x = 1 - 2p`.
fn exact_plan(seq: &str, p0: BigRational) -> (f64, f64) {
    let a_a = ExactPolynomial::from_integers(&reference::ACCEPTANCE);
    let u_a = ExactPolynomial::from_integers(&reference::UNDETECTED);
    let mut p = p0;
    let mut cost = BigRational::one();
    for ch in seq.chars() {
        let (a, u, m, n) = match ch {
            'A' => (a_a.evaluate(&p), u_a.evaluate(&p), 10, 2),
            _ => {
                let x: BigRational = BigRational::one() - BigRational::from_integer(2.into()) * &p;
                let x7 = (0..7).fold(BigRational::one(), |acc, _| acc * &x);
                let x8 = &x7 * &x;
                let x15 = &x8 * &x7;
                let fifteen = BigRational::from_integer(15.into());
                let a = (BigRational::one() + &fifteen * &x8) / BigRational::from_integer(16.into());
                let u = (BigRational::one() - &fifteen * &x7 + &fifteen * &x8 - x15) / BigRational::from_integer(32.into());
                (a, u, 15, 1)
            }
        };
        cost = cost * BigRational::new(m.into(), n.into()) / &a;
        p = u / a;
    }
    let log10 = |r: &BigRational| {
        let digits = |b: &num_bigint::BigInt| b.to_string().trim_start_matches('-').len() as i64;
        let shift = digits(r.numer()) - digits(r.denom());
        let scaled = r / BigRational::from_integer(num_bigint::BigInt::from(10).pow(shift.max(0) as u32))
            * BigRational::from_integer(num_bigint::BigInt::from(10).pow((-shift).max(0) as u32));
        scaled.to_f64().unwrap().log10() + shift as f64
    };
    (10f64.powf(log10(&p)), cost.to_f64().unwrap())
}

fn hundredth() -> BigRational {
    BigRational::new(1.into(), 100.into())
}

#[test]
fn recursion_matches_exact_rational_oracle() {
    for seq in TABLE_SEQUENCES {
        let got = plan(seq, 0.01);
        let (err, cost) = exact_plan(seq, hundredth());
        assert!((got.final_cost - cost).abs() < 1e-12 * cost, "{seq}: cost {} vs {cost}", got.final_cost);
        assert!((got.final_error - err).abs() < 1e-10 * err, "{seq}: error {} vs {err}", got.final_error);
    }
}

#[test]
fn table_costs_and_errors() {
    // Reference one-significant-figure errors and costs at p0 = 0.01.
    let rows: [(&str, f64, f64, f64); 10] = [
        ("A", 5.5, 9e-4, 3.2),
        ("B", 17.4, 4e-5, 1.0),
        ("AA", 27.9, 7e-6, 9.4),
        ("BA", 87.2, 1e-8, 3.0),
        ("AAA", 139.3, 5e-10, 1.9),
        ("BB", 261.7, 2e-12, 1.0),
        ("BAA", 436.2, 1e-15, 9.0),
        ("AAAA", 696.6, 2e-18, 5.6),
        ("BBA", 1308.7, 2e-23, 3.0),
        ("BAAA", 2180.8, 1e-29, 1.8),
    ];
    for (seq, cost, err, factor) in rows {
        let p = plan(seq, 0.01);
        let f = improvement_factor(&p, &models()[1]).unwrap();
        assert!((f - factor).abs() < 0.05 + 1e-9, "{seq}: factor {f}");
        assert!(!p.divergent);
        assert!((p.final_cost - cost).abs() < 0.1, "{seq}: cost {}", p.final_cost);
        let k = err.log10().floor();
        let digit = err / 10f64.powf(k);
        let got = p.final_error / 10f64.powf(k);
        assert!((got - digit).abs() < 1.0, "{seq}: error {}", p.final_error);
    }
}

#[test]
fn thresholds() {
    let ta = threshold(&models()[0]).unwrap();
    let tb = threshold(&models()[1]).unwrap();
    assert!((ta - 0.089).abs() < 1e-3, "{ta}");
    assert!((tb - 0.141).abs() < 1e-3, "{tb}");
    for t in [ta, tb] {
        let m = if t == ta { &models()[0] } else { &models()[1] };
        assert!((m.output_error(t) - t).abs() < 1e-12);
    }
}

#[test]
fn below_threshold_the_ten_to_two_routine_improves() {
    let a = &models()[0];
    for p in linear_grid(1e-5, 0.0885, 400) {
        assert!(a.output_error(p) < p, "p = {p}");
    }
    assert!(a.output_error(0.095) > 0.095);
}

#[test]
fn divergent_sequences_are_flagged() {
    assert!(plan("A", 0.1).divergent);
    assert!(!plan("B", 0.1).divergent);
    assert!(plan("B", 0.15).divergent);
}

#[test]
fn best_sequence_examples() {
    let pick = |e_g: f64| {
        let goal = PlannerGoal::new(0.01, e_g, DEFAULT_MAX_ROUNDS).unwrap();
        best_sequence(&goal, models()).unwrap().plan().unwrap().clone()
    };
    let a = pick(1e-3);
    assert_eq!(a.sequence, "A");
    assert!((a.final_cost - 5.5).abs() < 0.05);
    let aa = pick(1e-5);
    assert_eq!(aa.sequence, "AA");
    assert!((aa.final_cost - 27.9).abs() < 0.05);
    // Exhaustive search admits A-first orderings absent from the table.
    assert_eq!(pick(1e-7).sequence, "AB");
    assert_eq!(pick(1e-22).sequence, "BAB");
    let among = |e_g: f64| {
        let goal = PlannerGoal::new(0.01, e_g, DEFAULT_MAX_ROUNDS).unwrap();
        best_among(&goal, &TABLE_SEQUENCES, models()).unwrap().plan().unwrap().sequence.clone()
    };
    assert_eq!(among(1e-22), "BBA");
    assert_eq!(among(1e-23), "BAAA");
    assert_eq!(among(1e-5), "AA");
    let only_b = PlannerGoal::new(0.01, 1e-5, DEFAULT_MAX_ROUNDS).unwrap();
    let bb = best_sequence(&only_b, &models()[1..]).unwrap().plan().unwrap().clone();
    assert_eq!(bb.sequence, "BB");
    assert!((bb.final_cost - 261.7).abs() < 0.05);
}

#[test]
fn unreachable_goal_reports_best_error() {
    let goal = PlannerGoal::new(0.01, 1e-300, 2).unwrap();
    match best_sequence(&goal, models()).unwrap() {
        SearchOutcome::Unreachable { best } => assert_eq!(best.sequence, "BB"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn improvement_factors() {
    let b = &models()[1];
    for (seq, factor, tol) in [("AA", 9.4, 0.05), ("BA", 3.0, 0.05), ("B", 1.0, 1e-12), ("BAA", 9.0, 0.5)] {
        let f = improvement_factor(&plan(seq, 0.01), b).unwrap();
        assert!((f - factor).abs() < tol, "{seq}: {f}");
    }
}

fn permutations(s: &str) -> Vec<String> {
    if s.len() <= 1 {
        return vec![s.to_string()];
    }
    let mut out = Vec::new();
    for i in 0..s.len() {
        let rest = format!("{}{}", &s[..i], &s[i + 1..]);
        out.extend(permutations(&rest).into_iter().map(|r| format!("{}{r}", &s[i..=i])));
    }
    out
}

#[test]
fn fifteen_to_one_rounds_first_minimize_error() {
    for seq in TABLE_SEQUENCES.iter().filter(|s| s.contains('A') && s.contains('B')) {
        let err = plan(seq, 0.01).final_error;
        for other in permutations(seq) {
            assert!(err <= plan(&other, 0.01).final_error, "{seq} vs {other}");
        }
    }
}

#[test]
fn asymptotic_exponents() {
    let a = asymptotic_exponent(&models()[0]).unwrap();
    let b = asymptotic_exponent(&models()[1]).unwrap();
    assert_eq!((a.degree, a.kappa), (2, 9.0));
    assert!((a.exponent - 2f64.ln() / 5f64.ln()).abs() < 1e-15);
    assert!((a.exponent - 0.43).abs() < 0.005);
    assert!((b.exponent - 0.4).abs() < 0.01);
    let closed = (9.0f64 * 1e-3).powi(8) / 9.0;
    assert!((leading_order_iterate(&models()[0], 1e-3, 3).unwrap() - closed).abs() < 1e-12 * closed);
    // e(p) = 9p^2 (1 + 34p/9 + ...), so the relative gap is about
    // (34/9)(2^(l-1) p0 + 2^(l-2) p1 + ... + p_(l-1)).
    let mut p = 1e-3;
    let mut predicted = 0.0;
    for l in 1..=3u32 {
        predicted = 2.0 * predicted + 34.0 / 9.0 * p;
        p = models()[0].output_error(p);
        let direct = plan(&"A".repeat(l as usize), 1e-3).final_error;
        let gap = direct / leading_order_iterate(&models()[0], 1e-3, l).unwrap() - 1.0;
        assert!((gap - predicted).abs() < 0.05 * predicted, "l = {l}: {gap} vs {predicted}");
        if l <= 2 {
            assert!(gap < 0.01);
        }
    }
}

#[test]
fn curves_vanish_as_p_goes_to_zero() {
    let t = error_curves(&TABLE_SEQUENCES, models(), &[1e-9]).unwrap();
    for cell in &t.rows[0][1..] {
        match cell {
            Cell::Num(x) => assert!(*x < 1e-15),
            Cell::Text(_) => unreachable!(),
        }
    }
}

#[test]
fn step_plot_headline() {
    let t = step_plot(0.01, &[1e-5], models(), &models()[1], DEFAULT_MAX_ROUNDS).unwrap();
    match &t.rows[0][..] {
        [_, Cell::Num(best), Cell::Text(s), Cell::Num(base), Cell::Text(bs)] => {
            assert_eq!((s.as_str(), bs.as_str()), ("AA", "BB"));
            assert!((best - 27.9).abs() < 0.05 && (base - 261.7).abs() < 0.05);
        }
        r => panic!("{r:?}"),
    }
}

#[test]
fn region_boundaries_are_crossings() {
    let grid = log_grid(1e-4, 0.08, 200);
    let t = region_boundaries(&["B", "AA"], models(), &grid).unwrap();
    assert!(!t.rows.is_empty());
    for row in &t.rows {
        if let Cell::Num(p) = row[2] {
            let (eb, eaa) = (plan("B", p).final_error, plan("AA", p).final_error);
            assert!((eb / eaa - 1.0).abs() < 1e-6);
        }
    }
}

proptest! {
    #[test]
    fn composition_law(s1 in "[AB]{0,4}", s2 in "[AB]{0,4}", p0 in 1e-4f64..0.08) {
        let whole = plan(&format!("{s1}{s2}"), p0);
        let split = evaluate_from(&plan(&s1, p0), &resolve(&s2, models()).unwrap());
        prop_assert_eq!(whole, split);
    }
}
