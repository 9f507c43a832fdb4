//! Seeded sampling of the 10-to-2 routine and the blocked multi-round
//! pipeline that keeps states within a block independent.
//!
//! Every instance draws from its own ChaCha stream keyed by
//! `(seed, round, block, instance)`, so tallies do not depend on how work is
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::NUM_LOCATIONS;
use crate::enumerator::{classify_all, polynomials_from_verdicts, FrameClassifier, PatternVerdict, PolynomialSet};
use crate::error::{Error, Result};
use crate::routines::RoutineModel;

const DOMAIN_SAMPLE: u8 = 1;
const DOMAIN_PIPELINE: u8 = 2;
const SIGMAS: f64 = 3.0;

fn stream(domain: u8, seed: u64, round: u32, block: u32, instance: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&round.to_le_bytes());
    key[12..16].copy_from_slice(&block.to_le_bytes());
    key[16] = domain;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(instance);
    rng
}

/// Per-pattern acceptance and conditional output-error distribution.
#[derive(Clone, Debug)]
pub struct VerdictTable {
    accept: Vec<f64>,
    /// Cumulative `(out1 only, out2 only, both)` given acceptance.
    cumulative: Vec<[f64; 3]>,
}

/// Outcome of one routine instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceOutcome {
    Rejected,
    Accepted { out1: bool, out2: bool },
}

impl VerdictTable {
    pub fn from_verdicts(verdicts: &[PatternVerdict]) -> Result<Self> {
        if verdicts.len() != 1 << NUM_LOCATIONS {
            return Err(Error::Dimension { expected: 1 << NUM_LOCATIONS, found: verdicts.len() });
        }
        let mut accept = vec![0.0; verdicts.len()];
        let mut cumulative = vec![[0.0; 3]; verdicts.len()];
        for v in verdicts {
            let i = v.pattern.0 as usize;
            accept[i] = num_traits::ToPrimitive::to_f64(&v.accept).unwrap_or(0.0);
            let (o1, o2, both) = v.conditional_errors();
            cumulative[i] = [o1, o1 + o2, o1 + o2 + both];
        }
        Ok(VerdictTable { accept, cumulative })
    }

    /// Table from the frame classifier.
    pub fn ten_to_two() -> Result<Self> {
        Self::from_verdicts(&classify_all(&FrameClassifier::new()?)?)
    }

    /// Samples an instance whose location `i` carries an error iff bit `i`
    /// of `pattern` is set.
    pub fn sample(&self, pattern: usize, rng: &mut impl Rng) -> InstanceOutcome {
        let a = self.accept[pattern];
        if a < 1.0 && rng.gen::<f64>() >= a {
            return InstanceOutcome::Rejected;
        }
        let c = self.cumulative[pattern];
        if c[2] == 0.0 {
            return InstanceOutcome::Accepted { out1: false, out2: false };
        }
        let r: f64 = rng.gen();
        let (out1, out2) = if r < c[0] {
            (true, false)
        } else if r < c[1] {
            (false, true)
        } else if r < c[2] {
            (true, true)
        } else {
            (false, false)
        };
        InstanceOutcome::Accepted { out1, out2 }
    }
}

fn draw_pattern(p: f64, rng: &mut impl Rng) -> usize {
    (0..NUM_LOCATIONS).fold(0, |acc, i| if rng.gen::<f64>() < p { acc | 1 << i } else { acc })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SampleStats {
    pub seed: u64,
    pub trials: u64,
    pub accepts: u64,
    pub errors_out1: u64,
    pub errors_out2: u64,
    pub errors_both: u64,
}

impl SampleStats {
    fn merge(mut self, o: SampleStats) -> SampleStats {
        self.trials += o.trials;
        self.accepts += o.accepts;
        self.errors_out1 += o.errors_out1;
        self.errors_out2 += o.errors_out2;
        self.errors_both += o.errors_both;
        self
    }
}

/// Samples `trials` instances of the 10-to-2 routine at input error `p`.
pub fn sample_routine(table: &VerdictTable, p: f64, trials: u64, seed: u64) -> Result<SampleStats> {
    if trials == 0 {
        return Err(Error::Usage("need at least one trial".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Usage(format!("probability {p} outside [0, 1]")));
    }
    let stats = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(DOMAIN_SAMPLE, seed, 0, 0, t);
            let pattern = draw_pattern(p, &mut rng);
            let mut s = SampleStats { trials: 1, ..Default::default() };
            if let InstanceOutcome::Accepted { out1, out2 } = table.sample(pattern, &mut rng) {
                s.accepts = 1;
                s.errors_out1 = out1 as u64;
                s.errors_out2 = out2 as u64;
                s.errors_both = (out1 && out2) as u64;
            }
            s
        })
        .reduce(SampleStats::default, SampleStats::merge);
    Ok(SampleStats { seed, ..stats })
}

/// A count compared against a binomial prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinomialCheck {
    pub count: u64,
    pub n: u64,
    pub estimate: f64,
    pub expected: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

impl BinomialCheck {
    pub fn new(count: u64, n: u64, expected: f64) -> Self {
        let nf = n.max(1) as f64;
        let sigma = (expected * (1.0 - expected) / nf).sqrt();
        let estimate = count as f64 / nf;
        let (lower, upper) = (expected - SIGMAS * sigma, expected + SIGMAS * sigma);
        let pass = if sigma == 0.0 { estimate == expected } else { (lower..=upper).contains(&estimate) };
        BinomialCheck { count, n, estimate, expected, sigma, lower, upper, pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub p: f64,
    pub stats: SampleStats,
    pub accept: BinomialCheck,
    pub error_out1: BinomialCheck,
    pub error_out2: BinomialCheck,
    pub error_both: BinomialCheck,
    pub pass: bool,
}

/// Compares sampled rates with `a`, `u/a`, `u_out2/a` and `(u + u_out2 - u2)/a`.
pub fn sample_report(stats: &SampleStats, p: f64, polys: &PolynomialSet) -> SampleReport {
    let a = polys.a.evaluate_f64(p);
    let cond = |x: f64| if a > 0.0 { x / a } else { 0.0 };
    let both = polys.u.evaluate_f64(p) + polys.u_out2.evaluate_f64(p) - polys.u2.evaluate_f64(p);
    let accept = BinomialCheck::new(stats.accepts, stats.trials, a);
    let error_out1 = BinomialCheck::new(stats.errors_out1, stats.accepts, cond(polys.u.evaluate_f64(p)));
    let error_out2 = BinomialCheck::new(stats.errors_out2, stats.accepts, cond(polys.u_out2.evaluate_f64(p)));
    let error_both = BinomialCheck::new(stats.errors_both, stats.accepts, cond(both));
    let pass = accept.pass && error_out1.pass && error_out2.pass && error_both.pass;
    SampleReport { p, stats: *stats, accept, error_out1, error_out2, error_both, pass }
}

/// Exact polynomials for the sampled routine, via the frame classifier.
pub fn ten_to_two_polynomials() -> Result<PolynomialSet> {
    Ok(polynomials_from_verdicts(classify_all(&FrameClassifier::new()?)?))
}

/// How outputs of a round are collected into blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Output `j` of every accepted instance goes to block `j`.
    Blocked,
    /// All outputs of an instance stay adjacent in one block.
    InstancePairs,
}

/// Error bits of the states in each block after a round.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockEnsemble {
    pub round_index: usize,
    pub routine: String,
    /// Error probability every state in a block nominally shares.
    pub nominal_p: f64,
    pub instances: u64,
    pub accepted: u64,
    #[serde(skip)]
    pub blocks: Vec<Vec<bool>>,
}

impl BlockEnsemble {
    pub fn states(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn errors(&self) -> usize {
        self.blocks.iter().flatten().filter(|&&e| e).count()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

/// How a routine is simulated inside the pipeline.
pub enum Engine<'a> {
    /// Input error bits form the fault pattern of the 10-to-2 circuit.
    Circuit(&'a VerdictTable),
    /// Accept with `a(p)` and flip each output with `e(p)`, `p` nominal.
    Model,
}

pub struct Stage<'a> {
    pub model: &'a RoutineModel,
    pub engine: Engine<'a>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineRun {
    pub k0: u64,
    pub p0: f64,
    pub seed: u64,
    pub grouping: Grouping,
    /// Round 0 holds the raw inputs.
    pub rounds: Vec<BlockEnsemble>,
    /// Set when some block was too small for another instance.
    pub halted: Option<String>,
}

impl PipelineRun {
    pub fn last(&self) -> &BlockEnsemble {
        self.rounds.last().expect("round 0 always present")
    }
}

fn run_instance(stage: &Stage, inputs: &[bool], nominal: f64, rng: &mut ChaCha8Rng) -> Option<Vec<bool>> {
    let n = stage.model.outputs() as usize;
    match stage.engine {
        Engine::Circuit(table) => {
            let pattern = inputs.iter().enumerate().fold(0, |acc, (i, &e)| if e { acc | 1 << i } else { acc });
            match table.sample(pattern, rng) {
                InstanceOutcome::Rejected => None,
                InstanceOutcome::Accepted { out1, out2 } => Some(vec![out1, out2]),
            }
        }
        Engine::Model => {
            if rng.gen::<f64>() >= stage.model.acceptance(nominal) {
                return None;
            }
            let e = stage.model.output_error(nominal);
            Some((0..n).map(|_| rng.gen::<f64>() < e).collect())
        }
    }
}

/// Runs the stages on `k0` fresh states with error `p0`. Each round splits
/// every block into `⌊K/m⌋` sets, discards the remainder, runs one instance
/// per set and regroups outputs per `grouping`.
pub fn run_blocked_pipeline(k0: u64, stages: &[Stage], p0: f64, seed: u64, grouping: Grouping) -> Result<PipelineRun> {
    if !(0.0..=0.5).contains(&p0) {
        return Err(Error::Usage(format!("p0 = {p0} outside [0, 1/2]")));
    }
    for s in stages {
        if let Engine::Circuit(_) = s.engine {
            if (s.model.inputs(), s.model.outputs()) != (NUM_LOCATIONS as u32, 2) {
                return Err(Error::Usage(format!("routine {} cannot run on the 10-to-2 circuit", s.model.name())));
            }
        }
    }
    if let Some(first) = stages.first() {
        if k0 < first.model.inputs() as u64 {
            return Err(Error::Usage(format!("need at least {} input states, got {k0}", first.model.inputs())));
        }
    }
    const CHUNK: u64 = 4096;
    let initial: Vec<bool> = (0..k0.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream(DOMAIN_PIPELINE, seed, 0, 0, c);
            let len = CHUNK.min(k0 - c * CHUNK);
            (0..len).map(move |_| rng.gen::<f64>() < p0).collect::<Vec<_>>()
        })
        .collect();
    let mut rounds = vec![BlockEnsemble {
        round_index: 0,
        routine: String::new(),
        nominal_p: p0,
        instances: 0,
        accepted: 0,
        blocks: vec![initial],
    }];
    let mut halted = None;
    for (r, stage) in stages.iter().enumerate() {
        let prev = rounds.last().expect("nonempty");
        let m = stage.model.inputs() as usize;
        let n = stage.model.outputs() as usize;
        let nominal = prev.nominal_p;
        let mut blocks = Vec::new();
        let (mut instances, mut accepted) = (0u64, 0u64);
        for (b, block) in prev.blocks.iter().enumerate() {
            let sets = block.len() / m;
            if sets == 0 && halted.is_none() {
                halted = Some(format!("round {}: block {b} has {} states, fewer than {m}", r + 1, block.len()));
            }
            let outputs: Vec<Option<Vec<bool>>> = block
                .par_chunks_exact(m)
                .enumerate()
                .map(|(i, set)| {
                    let mut rng = stream(DOMAIN_PIPELINE, seed, r as u32 + 1, b as u32, i as u64);
                    run_instance(stage, set, nominal, &mut rng)
                })
                .collect();
            instances += sets as u64;
            let ok: Vec<Vec<bool>> = outputs.into_iter().flatten().collect();
            accepted += ok.len() as u64;
            match grouping {
                Grouping::Blocked => {
                    for j in 0..n {
                        blocks.push(ok.iter().map(|o| o[j]).collect());
                    }
                }
                Grouping::InstancePairs => blocks.push(ok.into_iter().flatten().collect()),
            }
        }
        rounds.push(BlockEnsemble {
            round_index: r + 1,
            routine: stage.model.name().to_string(),
            nominal_p: stage.model.output_error(nominal),
            instances,
            accepted,
            blocks,
        });
    }
    Ok(PipelineRun { k0, p0, seed, grouping, rounds, halted })
}

/// Pearson correlation of adjacent pairs `(2i, 2i+1)` within blocks, with a
/// `±3/√N` interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub pairs: u64,
    pub correlation: f64,
    pub lower: f64,
    pub upper: f64,
    pub contains_zero: bool,
    pub warning: Option<String>,
}

pub fn independence_check(ensemble: &BlockEnsemble) -> Result<IndependenceReport> {
    let (mut n, mut sx, mut sy, mut sxy) = (0u64, 0u64, 0u64, 0u64);
    for block in &ensemble.blocks {
        for pair in block.chunks_exact(2) {
            let (x, y) = (pair[0] as u64, pair[1] as u64);
            n += 1;
            sx += x;
            sy += y;
            sxy += x * y;
        }
    }
    if n == 0 {
        return Err(Error::Usage("ensemble has no pairs".into()));
    }
    let nf = n as f64;
    let (mx, my) = (sx as f64 / nf, sy as f64 / nf);
    let cov = sxy as f64 / nf - mx * my;
    let var = (mx * (1.0 - mx) * my * (1.0 - my)).sqrt();
    let correlation = if var > 0.0 { cov / var } else { 0.0 };
    let half = if var > 0.0 { SIGMAS / nf.sqrt() } else { 0.0 };
    let (lower, upper) = (correlation - half, correlation + half);
    let warning = (var > 0.0 && (sx.min(sy) < 30)).then(|| format!("only {} error events; interval is wide", sx.min(sy)));
    Ok(IndependenceReport { pairs: n, correlation, lower, upper, contains_zero: lower <= 0.0 && 0.0 <= upper, warning })
}

/// Block sizes after a round against the acceptance prediction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockSizeCheck {
    pub instances_per_block: u64,
    pub mean_size: f64,
    pub expected: f64,
    pub sigma: f64,
    /// `a · (⟨K⟩/m - 1)`.
    pub lower_bound: f64,
    pub within_sigma: bool,
    pub meets_bound: bool,
}

/// Checks the block sizes produced by round `r` of a blocked run.
pub fn block_size_check(run: &PipelineRun, r: usize, model: &RoutineModel) -> Result<BlockSizeCheck> {
    if r == 0 || r >= run.rounds.len() {
        return Err(Error::Usage(format!("round {r} not in run")));
    }
    let prev = &run.rounds[r - 1];
    let cur = &run.rounds[r];
    let m = model.inputs() as f64;
    let k_mean = prev.states() as f64 / prev.blocks.len() as f64;
    let per_block = cur.instances / prev.blocks.len() as u64;
    let a = model.acceptance(prev.nominal_p);
    let expected = a * per_block as f64;
    let sigma = (per_block as f64 * a * (1.0 - a)).sqrt();
    let sizes = cur.block_sizes();
    let mean_size = sizes.iter().sum::<usize>() as f64 / sizes.len().max(1) as f64;
    let within_sigma = if sigma > 0.0 { (mean_size - expected).abs() <= SIGMAS * sigma } else { mean_size == expected };
    let lower_bound = a * (k_mean / m - 1.0);
    Ok(BlockSizeCheck {
        instances_per_block: per_block,
        mean_size,
        expected,
        sigma,
        lower_bound,
        within_sigma,
        meets_bound: mean_size + SIGMAS * sigma >= lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_by_key() {
        let a: u64 = stream(1, 7, 0, 0, 0).gen();
        let b: u64 = stream(1, 7, 0, 0, 1).gen();
        let c: u64 = stream(1, 7, 1, 0, 0).gen();
        let d: u64 = stream(1, 7, 0, 0, 0).gen();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, d);
    }

    #[test]
    fn binomial_check_degenerate() {
        assert!(BinomialCheck::new(0, 10, 0.0).pass);
        assert!(!BinomialCheck::new(1, 10, 0.0).pass);
        assert!(BinomialCheck::new(500, 1000, 0.5).pass);
    }
}
