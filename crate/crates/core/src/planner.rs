//! Multi-round cost/error recursion, thresholds, sequence search and
//! tabular exports.
//!
//! Round `l` maps `p_l = e_l(p_{l-1})` and `c_l = m_l / (n_l a_l(p_{l-1})) · c_{l-1}`
//! with `c_0 = 1`. Arithmetic is double-double throughout.

use rayon::prelude::*;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::routines::RoutineModel;

/// Search depth used when none is given.
pub const DEFAULT_MAX_ROUNDS: usize = 6;

/// Ratio `e_g · R` used when the goal is derived from a computation size.
pub const GOAL_FACTOR: f64 = 10.0;

/// Sequences listed in the comparison table, by increasing cost.
pub const TABLE_SEQUENCES: [&str; 10] = ["A", "B", "AA", "BA", "AAA", "BB", "BAA", "AAAA", "BBA", "BAAA"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundState {
    pub routine: String,
    /// Error after the round.
    pub p: f64,
    /// Cumulative cost after the round.
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistillationPlan {
    pub sequence: String,
    pub p0: f64,
    pub per_round: Vec<RoundState>,
    pub final_error: f64,
    pub final_cost: f64,
    /// Some round received inputs at or above its threshold.
    pub divergent: bool,
    #[serde(skip)]
    state: (TwoFloat, TwoFloat),
}

impl DistillationPlan {
    pub fn rounds(&self) -> usize {
        self.per_round.len()
    }

    pub fn final_error_dd(&self) -> TwoFloat {
        self.state.0
    }

    pub fn final_cost_dd(&self) -> TwoFloat {
        self.state.1
    }
}

/// Evaluates `seq` starting from error `p0` and cost 1.
pub fn evaluate_sequence(seq: &[&RoutineModel], p0: f64) -> DistillationPlan {
    let start = DistillationPlan {
        sequence: String::new(),
        p0,
        per_round: Vec::new(),
        final_error: p0,
        final_cost: 1.0,
        divergent: false,
        state: (TwoFloat::from(p0), TwoFloat::from(1.0)),
    };
    evaluate_from(&start, seq)
}

/// Continues `plan` with the rounds of `seq`.
pub fn evaluate_from(plan: &DistillationPlan, seq: &[&RoutineModel]) -> DistillationPlan {
    let mut out = plan.clone();
    let (mut p, mut c) = plan.state;
    for model in seq {
        if threshold(model).is_some_and(|t| p.hi() >= t) {
            out.divergent = true;
        }
        let a = model.acceptance_dd(p);
        c = c * TwoFloat::from(model.inputs() as f64) / (TwoFloat::from(model.outputs() as f64) * a);
        p = model.output_error_dd(p);
        out.sequence.push_str(model.name());
        out.per_round.push(RoundState { routine: model.name().to_string(), p: p.hi(), cost: c.hi() });
    }
    out.state = (p, c);
    out.final_error = p.hi();
    out.final_cost = c.hi();
    out
}

/// Looks up each letter of `seq` among `available`.
pub fn resolve<'a>(seq: &str, available: &'a [RoutineModel]) -> Result<Vec<&'a RoutineModel>> {
    seq.chars()
        .map(|ch| {
            available
                .iter()
                .find(|m| m.name().starts_with(ch))
                .ok_or_else(|| Error::Usage(format!("unknown routine {ch:?} in sequence {seq:?}")))
        })
        .collect()
}

const SCAN_LO: f64 = 1e-6;
const SCAN_HI: f64 = 0.25;
const SCAN_STEPS: usize = 2500;

/// Smallest `p` in the scan range with `e(p) = p`, or `None` when the curve
/// never crosses the diagonal there. Cached per model.
pub fn threshold(model: &RoutineModel) -> Option<f64> {
    model.cached_threshold(|| find_threshold(|p| model.output_error_dd(TwoFloat::from(p)).hi()))
}

/// Threshold search on an arbitrary error map.
pub fn find_threshold(e: impl Fn(f64) -> f64) -> Option<f64> {
    let f = |p: f64| e(p) - p;
    let step = (SCAN_HI - SCAN_LO) / SCAN_STEPS as f64;
    let mut lo = SCAN_LO;
    let below = f(lo) < 0.0;
    for k in 1..=SCAN_STEPS {
        let hi = SCAN_LO + k as f64 * step;
        if (f(hi) < 0.0) != below {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if (f(mid) < 0.0) == below {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Some(0.5 * (a + b));
        }
        lo = hi;
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlannerGoal {
    pub p0: f64,
    pub e_g: f64,
    /// Computation size the goal was derived from, if any.
    pub r: Option<f64>,
    pub max_rounds: usize,
}

impl PlannerGoal {
    pub fn new(p0: f64, e_g: f64, max_rounds: usize) -> Result<Self> {
        let goal = PlannerGoal { p0, e_g, r: None, max_rounds };
        goal.validate()?;
        Ok(goal)
    }

    /// Goal with `e_g = 1 / (GOAL_FACTOR · R)`.
    pub fn from_computation_size(p0: f64, r: f64, max_rounds: usize) -> Result<Self> {
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::Usage(format!("computation size must be at least 1, got {r}")));
        }
        let goal = PlannerGoal { p0, e_g: 1.0 / (GOAL_FACTOR * r), r: Some(r), max_rounds };
        goal.validate()?;
        Ok(goal)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0 && self.p0 < 0.5) {
            return Err(Error::Usage(format!("p0 must lie in (0, 1/2), got {}", self.p0)));
        }
        if !(self.e_g > 0.0 && self.e_g < self.p0) {
            return Err(Error::Usage(format!("goal error must lie in (0, p0), got {}", self.e_g)));
        }
        if self.max_rounds == 0 || self.max_rounds > 12 {
            return Err(Error::Usage(format!("max rounds must be in 1..=12, got {}", self.max_rounds)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SearchOutcome {
    Found { plan: DistillationPlan },
    /// No sequence met the goal; `best` has the lowest error reached.
    Unreachable { best: DistillationPlan },
}

impl SearchOutcome {
    pub fn plan(&self) -> Option<&DistillationPlan> {
        match self {
            SearchOutcome::Found { plan } => Some(plan),
            SearchOutcome::Unreachable { .. } => None,
        }
    }
}

/// All sequences over `names` of length `1..=max_rounds`, shorter first,
/// then in lexicographic order.
pub fn all_sequences(names: &[&str], max_rounds: usize) -> Vec<String> {
    let mut names: Vec<&str> = names.to_vec();
    names.sort_unstable();
    let mut out = Vec::new();
    let mut layer = vec![String::new()];
    for _ in 0..max_rounds {
        layer = layer.iter().flat_map(|s| names.iter().map(move |n| format!("{s}{n}"))).collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Cheapest convergent sequence meeting the goal, searched exhaustively.
pub fn best_sequence(goal: &PlannerGoal, available: &[RoutineModel]) -> Result<SearchOutcome> {
    let names: Vec<&str> = available.iter().map(|m| m.name()).collect();
    let candidates = all_sequences(&names, goal.max_rounds);
    best_among(goal, &candidates, available)
}

/// Cheapest convergent sequence among `candidates` meeting the goal. Ties
/// go to the earlier candidate.
pub fn best_among<S: AsRef<str>>(goal: &PlannerGoal, candidates: &[S], available: &[RoutineModel]) -> Result<SearchOutcome> {
    goal.validate()?;
    if available.is_empty() {
        return Err(Error::Usage("no routines available".into()));
    }
    let mut best: Option<DistillationPlan> = None;
    let mut closest: Option<DistillationPlan> = None;
    for seq in candidates {
        let plan = evaluate_sequence(&resolve(seq.as_ref(), available)?, goal.p0);
        if plan.divergent || plan.rounds() > goal.max_rounds {
            continue;
        }
        if plan.final_error <= goal.e_g {
            if best.as_ref().is_none_or(|b| plan.final_cost < b.final_cost * (1.0 - 1e-12)) {
                best = Some(plan);
            }
        } else if closest.as_ref().is_none_or(|c| plan.final_error < c.final_error) {
            closest = Some(plan);
        }
    }
    Ok(match (best, closest) {
        (Some(plan), _) => SearchOutcome::Found { plan },
        (None, Some(best)) => SearchOutcome::Unreachable { best },
        (None, None) => SearchOutcome::Unreachable { best: evaluate_sequence(&[], goal.p0) },
    })
}

/// Shortest repetition of `baseline` reaching `plan`'s error, at most
/// `max_rounds` long.
pub fn baseline_plan(plan: &DistillationPlan, baseline: &RoutineModel, max_rounds: usize) -> Option<DistillationPlan> {
    let mut current = evaluate_sequence(&[], plan.p0);
    for _ in 0..max_rounds {
        current = evaluate_from(&current, &[baseline]);
        if current.divergent {
            return None;
        }
        if current.final_error_dd() <= plan.final_error_dd() {
            return Some(current);
        }
    }
    None
}

/// Cost of the shortest baseline-only sequence that is at least as good as
/// `plan`, divided by the cost of `plan`.
pub fn improvement_factor(plan: &DistillationPlan, baseline: &RoutineModel) -> Option<f64> {
    baseline_plan(plan, baseline, 16).map(|b| b.final_cost / plan.final_cost)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub sequence: String,
    pub cost: f64,
    pub error: f64,
    pub improvement: Option<f64>,
}

/// The comparison table at input error `p0`.
pub fn comparison_table(p0: f64, available: &[RoutineModel], baseline: &RoutineModel) -> Result<Vec<TableRow>> {
    TABLE_SEQUENCES
        .iter()
        .map(|seq| {
            let plan = evaluate_sequence(&resolve(seq, available)?, p0);
            Ok(TableRow {
                sequence: seq.to_string(),
                cost: plan.final_cost,
                error: plan.final_error,
                improvement: improvement_factor(&plan, baseline),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Asymptotics {
    /// Lowest order `d` of the output error.
    pub degree: u32,
    /// Leading coefficient `κ` in `e(p) ≈ κ p^d`.
    pub kappa: f64,
    /// `ξ = ln d / ln(m/n)`, so the cost per output grows as `ln(1/ε)^{1/ξ}`.
    pub exponent: f64,
}

pub fn asymptotic_exponent(model: &RoutineModel) -> Option<Asymptotics> {
    let (d, kappa) = model.leading_error_term()?;
    if d <= 1 || model.inputs() == model.outputs() {
        return None;
    }
    let ratio = model.inputs() as f64 / model.outputs() as f64;
    Some(Asymptotics { degree: d, kappa, exponent: (d as f64).ln() / ratio.ln() })
}

/// Leading-order iterate `κ^{-1/(d-1)} (κ^{1/(d-1)} p)^{d^l}`.
pub fn leading_order_iterate(model: &RoutineModel, p: f64, rounds: u32) -> Option<f64> {
    let asym = asymptotic_exponent(model)?;
    let s = asym.kappa.powf(1.0 / (asym.degree as f64 - 1.0));
    let power = (asym.degree as f64).powi(rounds as i32);
    Some((power * (s * p).ln()).exp() / s)
}

/// A table cell for exports.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Rows `(p, error of each sequence)`.
pub fn error_curves(sequences: &[&str], available: &[RoutineModel], grid: &[f64]) -> Result<Table> {
    if let Some(p) = grid.iter().find(|p| !(**p > 0.0 && **p < 0.5)) {
        return Err(Error::Usage(format!("grid point {p} outside (0, 1/2)")));
    }
    let resolved = sequences.iter().map(|s| resolve(s, available)).collect::<Result<Vec<_>>>()?;
    let mut header = vec!["p".to_string()];
    header.extend(sequences.iter().map(|s| s.to_string()));
    let rows = grid
        .par_iter()
        .map(|&p| {
            let mut row = vec![Cell::Num(p)];
            row.extend(resolved.iter().map(|seq| Cell::Num(evaluate_sequence(seq, p).final_error)));
            row
        })
        .collect();
    Ok(Table { header, rows })
}

/// Rows `(e_g, best cost, best sequence, baseline-only cost, baseline-only sequence)`.
/// Unreachable goals give an empty sequence and a NaN cost.
pub fn step_plot(p0: f64, goals: &[f64], available: &[RoutineModel], baseline: &RoutineModel, max_rounds: usize) -> Result<Table> {
    let header = ["e_g", "best_cost", "best_sequence", "baseline_cost", "baseline_sequence"];
    let only = std::slice::from_ref(baseline);
    let rows = goals
        .par_iter()
        .map(|&e_g| {
            let goal = PlannerGoal::new(p0, e_g, max_rounds)?;
            let mut row = vec![Cell::Num(e_g)];
            for set in [available, only] {
                match best_sequence(&goal, set)?.plan() {
                    Some(plan) => row.extend([Cell::Num(plan.final_cost), Cell::Text(plan.sequence.clone())]),
                    None => row.extend([Cell::Num(f64::NAN), Cell::Text(String::new())]),
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { header: header.iter().map(|s| s.to_string()).collect(), rows })
}

/// Crossings between curves adjacent in `sequences`, located on `grid`
/// and refined by bisection in `ln p`. Rows `(lower, upper, p, error)`.
pub fn region_boundaries(sequences: &[&str], available: &[RoutineModel], grid: &[f64]) -> Result<Table> {
    let resolved = sequences.iter().map(|s| resolve(s, available)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (i, pair) in resolved.windows(2).enumerate() {
        let diff = |p: f64| {
            let a = evaluate_sequence(&pair[0], p).final_error_dd();
            let b = evaluate_sequence(&pair[1], p).final_error_dd();
            a.hi().ln() - b.hi().ln()
        };
        for w in grid.windows(2) {
            let (d0, d1) = (diff(w[0]), diff(w[1]));
            if d0 == 0.0 || (d0 < 0.0) == (d1 < 0.0) {
                continue;
            }
            let (mut lo, mut hi) = (w[0].ln(), w[1].ln());
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if (diff(mid.exp()) < 0.0) == (d0 < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let p = (0.5 * (lo + hi)).exp();
            rows.push(vec![
                Cell::Text(sequences[i].to_string()),
                Cell::Text(sequences[i + 1].to_string()),
                Cell::Num(p),
                Cell::Num(evaluate_sequence(&pair[0], p).final_error),
            ]);
        }
    }
    Ok(Table { header: ["lower", "upper", "p", "error"].iter().map(|s| s.to_string()).collect(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sequence_is_identity() {
        let plan = evaluate_sequence(&[], 0.01);
        assert_eq!(plan.final_error, 0.01);
        assert_eq!(plan.final_cost, 1.0);
        assert!(!plan.divergent);
    }

    #[test]
    fn halving_map_has_no_threshold() {
        assert_eq!(find_threshold(|p| p / 2.0), None);
        let t = find_threshold(|p| 8.0 * p * p).unwrap();
        assert!((t - 0.125).abs() < 1e-12);
    }

    #[test]
    fn sequences_are_enumerated_short_first() {
        let s = all_sequences(&["B", "A"], 2);
        assert_eq!(s, ["A", "B", "AA", "AB", "BA", "BB"]);
        assert_eq!(all_sequences(&["A", "B"], 6).len(), 126);
    }

    #[test]
    fn goal_validation() {
        assert!(PlannerGoal::new(0.01, 0.02, 6).is_err());
        assert!(PlannerGoal::new(0.6, 0.02, 6).is_err());
        assert!(PlannerGoal::new(0.01, 1e-5, 0).is_err());
        let g = PlannerGoal::from_computation_size(0.01, 1e6, 6).unwrap();
        assert!((g.e_g - 1e-7).abs() < 1e-20);
    }
}
