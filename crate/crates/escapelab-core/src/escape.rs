//! Escape rates of open systems: transfer operators with a hole knocked
//! out, their leading eigenvalues, and survival probabilities.
//!
//! Opening a hole `U` (a union of equal-length cylinders) restricts the
//! transfer operator to trajectories that avoid `U`. The restricted
//! operator's leading eigenvalue `λ_U ≤ λ` gives the escape rate
//! `R = log λ − log λ_U`: the mass still alive after `k` steps decays like
//! `e^{−kR}`. As the hole shrinks onto a point, the ratio of escape rate to
//! hole measure converges to an explicit constant: 1 for a hole closing on
//! a non-recurrent point, and `1 − e^{S_pφ(ξ) − pP}` when the holes close
//! on the orbit of a period-`p` point `ξ`, which re-enters itself and slows
//! the leak. This module computes the finite-level quantities exactly, the
//! level-by-level ratio table, and its extrapolated limit, alongside exact
//! and Monte Carlo survival probabilities for cross-validation.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::holes::{Classification, HoleError, HoleLevel, HoleSequence};
use crate::linalg::{self, Csr};
use crate::symbolic::{Subshift, SymbolicError, Word};
use crate::thermo::{GibbsState, Potential, ThermoError};

const EIGEN_TOL: f64 = 1e-13;
const EIGEN_MAX_ITER: usize = 100_000;

/// Samples per deterministic RNG block: block `b` always draws the same
/// trajectories for a given seed, independent of how many blocks run.
const MC_BLOCK: u64 = 1 << 16;

/// Errors from opening a hole in a transfer operator.
#[derive(Debug, Clone, PartialEq)]
pub enum EscapeError {
    /// A spectral computation failed.
    Thermo(ThermoError),
    /// A combinatorial precondition failed.
    Symbolic(SymbolicError),
    /// A hole-sequence precondition failed.
    Hole(HoleError),
    /// The hole swallows every state: nothing can survive one step.
    EmptySurvivorSet,
    /// Hole words must share one length.
    MixedHoleLengths {
        /// Length of the first word.
        expected: usize,
        /// Offending length found.
        got: usize,
    },
    /// A hole word is empty.
    EmptyHoleWord,
    /// The weight potential lives on a different subshift.
    WeightMismatch,
}

impl fmt::Display for EscapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Thermo(e) => write!(f, "{e}"),
            Self::Symbolic(e) => write!(f, "{e}"),
            Self::Hole(e) => write!(f, "{e}"),
            Self::EmptySurvivorSet => {
                write!(f, "the hole covers every state; no survivor set remains")
            }
            Self::MixedHoleLengths { expected, got } => {
                write!(f, "hole words must share one length, found {expected} and {got}")
            }
            Self::EmptyHoleWord => write!(f, "hole words must be nonempty"),
            Self::WeightMismatch => {
                write!(f, "weight potential must live on the same subshift")
            }
        }
    }
}

impl core::error::Error for EscapeError {}

impl From<ThermoError> for EscapeError {
    fn from(e: ThermoError) -> Self {
        Self::Thermo(e)
    }
}

impl From<SymbolicError> for EscapeError {
    fn from(e: SymbolicError) -> Self {
        Self::Symbolic(e)
    }
}

impl From<HoleError> for EscapeError {
    fn from(e: HoleError) -> Self {
        Self::Hole(e)
    }
}

/// Sorted, deduplicated hole words with their common length (0 for an
/// empty hole).
pub(crate) fn prepare_hole(hole: &[Word]) -> Result<(Vec<Word>, usize), EscapeError> {
    let mut words = hole.to_vec();
    words.sort();
    words.dedup();
    let Some(first) = words.first() else {
        return Ok((words, 0));
    };
    if first.is_empty() {
        return Err(EscapeError::EmptyHoleWord);
    }
    let len = first.len();
    for w in &words {
        if w.len() != len {
            return Err(EscapeError::MixedHoleLengths { expected: len, got: w.len() });
        }
    }
    Ok((words, len))
}

/// Per-state hole membership at matrix depth `depth ≥ hole length`.
pub(crate) fn hole_membership(
    shift: &Subshift,
    words: &[Word],
    hole_len: usize,
    depth: usize,
) -> Result<Vec<bool>, EscapeError> {
    let index = shift.cylinder_index(depth)?;
    let mut in_hole = vec![false; index.len()];
    if words.is_empty() {
        return Ok(in_hole);
    }
    if hole_len == depth {
        for w in words {
            if let Some(r) = index.rank(w) {
                in_hole[r] = true;
            }
        }
    } else {
        for (r, w) in index.words().enumerate() {
            let p = w.prefix(hole_len);
            if words.binary_search(&p).is_ok() {
                in_hole[r] = true;
            }
        }
    }
    Ok(in_hole)
}

/// Largest Perron eigenvalue over the nontrivial strongly connected
/// components of a nonnegative matrix, or 0 when the pattern is acyclic.
/// Also returns the dominant component's nodes and eigenvectors when one
/// exists.
pub(crate) struct PatternPerron {
    pub(crate) lambda: f64,
    pub(crate) dominant: Option<(Vec<u32>, Vec<f64>, Vec<f64>)>,
}

pub(crate) fn pattern_perron(m: &Csr) -> Result<PatternPerron, EscapeError> {
    let mut best = PatternPerron { lambda: 0.0, dominant: None };
    for comp in m.sccs() {
        let nontrivial = comp.len() > 1 || m.has_self_loop(comp[0] as usize);
        if !nontrivial {
            continue;
        }
        let sub = m.submatrix(&comp);
        let mut max_entry = 0.0f64;
        for i in 0..sub.n() {
            for (_, v) in sub.row(i) {
                max_entry = max_entry.max(v);
            }
        }
        // A positive diagonal shift makes periodic components converge.
        let shift = 0.5 * max_entry;
        let eig = linalg::leading_eigen(&sub, EIGEN_TOL, EIGEN_MAX_ITER, shift)
            .map_err(ThermoError::from)?;
        if eig.lambda > best.lambda {
            best.lambda = eig.lambda;
            best.dominant = Some((comp, eig.left, eig.right));
        }
    }
    Ok(best)
}

/// Leading spectral data of one perturbed (hole-masked) transfer operator.
#[derive(Debug, Clone)]
pub struct PerturbedSpectrum {
    /// Leading eigenvalue `λ_U` of the restricted operator.
    pub lambda: f64,
    /// Escape rate `log λ − log λ_U` (infinite when the survivor graph is
    /// acyclic).
    pub rate: f64,
    /// Derivative `dλ_U/dε` for the potential family `φ + ε·weight`, when a
    /// weight was supplied and the survivor graph has a cycle.
    pub weighted_derivative: Option<f64>,
    /// Number of surviving states at the working depth.
    pub survivor_states: usize,
    /// Working matrix depth (hole length or potential depth, whichever is
    /// larger).
    pub depth: usize,
}

/// Spectral data of the transfer operator restricted to the complement of
/// the hole. `weight` adds the Perron derivative along `φ + ε·weight`,
/// computed from the dominant component's eigenvectors: row scaling by the
/// weight turns the derivative into the component's invariant average.
pub fn perturbed_spectrum(
    gibbs: &GibbsState,
    hole: &[Word],
    weight: Option<&Potential>,
) -> Result<PerturbedSpectrum, EscapeError> {
    let (words, hole_len) = prepare_hole(hole)?;
    let m = gibbs.potential().depth();
    let depth = m.max(hole_len);
    if let Some(w) = weight {
        let same = w.subshift() == gibbs.potential().subshift();
        if !same || w.depth() > depth {
            return Err(EscapeError::WeightMismatch);
        }
    }
    let extended = if depth > m {
        gibbs.potential().extend_depth(depth)?
    } else {
        gibbs.potential().clone()
    };
    let matrix = extended.transfer_matrix()?;
    let in_hole = hole_membership(gibbs.potential().subshift(), &words, hole_len, depth)?;
    let survivors: Vec<u32> = (0..in_hole.len())
        .filter(|&i| !in_hole[i])
        .map(|i| i as u32)
        .collect();
    if survivors.is_empty() {
        return Err(EscapeError::EmptySurvivorSet);
    }
    let sub = matrix.csr().submatrix(&survivors);
    let perron = pattern_perron(&sub)?;
    let scale = libm::exp(matrix.log_offset());
    let lambda = perron.lambda * scale;
    let rate = libm::log(gibbs.lambda()) - libm::log(lambda);
    let weighted_derivative = match (weight, &perron.dominant) {
        (Some(w), Some((comp, left, right))) => {
            let wext = w.extend_depth(depth)?;
            let values = wext.values();
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, &node) in comp.iter().enumerate() {
                let state = survivors[node as usize] as usize;
                let pair = left[i] * right[i];
                num += pair * values[state];
                den += pair;
            }
            // dλ/dε = λ · Σ l_i ℓ_i r_i / Σ l_i r_i: the entry derivative
            // scales rows by ℓ, and M r = λ r collapses the double sum.
            Some(lambda * num / den)
        }
        _ => None,
    };
    Ok(PerturbedSpectrum {
        lambda,
        rate,
        weighted_derivative,
        survivor_states: survivors.len(),
        depth,
    })
}

/// A transfer operator with a hole: the restriction of the normalized
/// operator to trajectories avoiding a union of equal-length cylinders,
/// with enough stored structure to evaluate survival probabilities.
#[derive(Debug, Clone)]
pub struct OpenSystem {
    gibbs: GibbsState,
    hole_words: Vec<Word>,
    hole_len: usize,
    depth: usize,
    in_hole: Vec<bool>,
    state_measures: Vec<f64>,
    /// Normalized transfer matrix with hole rows removed: entries
    /// `e^{φ(w) − P} ρ(w) / ρ(w′)` for surviving sources `w`.
    masked: Csr,
    /// `λ_U / λ`: Perron eigenvalue of the masked normalized matrix.
    lambda_ratio: f64,
}

impl OpenSystem {
    /// Opens the hole in the operator of `gibbs`. The hole may be empty
    /// (nothing escapes); it must not cover every state.
    pub fn new(gibbs: &GibbsState, hole: &[Word]) -> Result<Self, EscapeError> {
        let (words, hole_len) = prepare_hole(hole)?;
        let m = gibbs.potential().depth();
        let depth = m.max(hole_len.max(1));
        let shift = gibbs.potential().subshift().clone();
        let extended = if depth > m {
            gibbs.potential().extend_depth(depth)?
        } else {
            gibbs.potential().clone()
        };
        let matrix = extended.transfer_matrix()?;
        let in_hole = hole_membership(&shift, &words, hole_len, depth)?;
        if in_hole.iter().all(|&h| h) {
            return Err(EscapeError::EmptySurvivorSet);
        }
        let index = shift.cylinder_index(depth)?;
        let index_m = shift.cylinder_index(m)?;
        let states = index.len();
        let mut state_measures = vec![0.0; states];
        let mut rho = vec![0.0; states];
        for (r, w) in index.words().enumerate() {
            state_measures[r] = gibbs.cylinder_measure(&w)?;
            let pm = if depth == m {
                r
            } else {
                index_m.rank(&w.prefix(m)).expect("prefix of admissible word")
            };
            rho[r] = gibbs.eigenfunction()[pm];
        }
        let scale = libm::exp(matrix.log_offset());
        let lambda = gibbs.lambda();
        let csr = matrix.csr();
        let rows = (0..states).map(|i| {
            if in_hole[i] {
                return Vec::new();
            }
            csr.row(i)
                .map(|(j, v)| (j, v * scale * rho[i] / (lambda * rho[j as usize])))
                .collect()
        });
        let masked = Csr::from_rows(states, rows);
        let lambda_ratio = pattern_perron(&masked)?.lambda;
        Ok(Self {
            gibbs: gibbs.clone(),
            hole_words: words,
            hole_len,
            depth,
            in_hole,
            state_measures,
            masked,
            lambda_ratio,
        })
    }

    /// Opens the hole given by one level of a hole sequence.
    pub fn from_level(gibbs: &GibbsState, level: &HoleLevel) -> Result<Self, EscapeError> {
        Self::new(gibbs, level.words())
    }

    /// The closed reference state.
    pub fn gibbs(&self) -> &GibbsState {
        &self.gibbs
    }

    /// The hole cylinders, sorted.
    pub fn hole_words(&self) -> &[Word] {
        &self.hole_words
    }

    /// Common length of the hole cylinders (0 for an empty hole).
    pub fn hole_len(&self) -> usize {
        self.hole_len
    }

    /// Working matrix depth.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of surviving states.
    pub fn survivor_states(&self) -> usize {
        self.in_hole.iter().filter(|&&h| !h).count()
    }

    /// Leading eigenvalue `λ_U` of the restricted operator.
    pub fn lambda(&self) -> f64 {
        self.lambda_ratio * self.gibbs.lambda()
    }

    /// Escape rate `log λ − log λ_U`; infinite when every trajectory dies
    /// in bounded time.
    pub fn escape_rate(&self) -> f64 {
        -libm::log(self.lambda_ratio)
    }

    /// Probability that a μ-random trajectory stays out of the hole at
    /// steps `1..=k` (the time-0 window is unconstrained).
    pub fn survival_probability_exact(&self, k: usize) -> f64 {
        libm::exp(self.log_survival_exact(k))
    }

    /// Logarithm of the exact survival probability, stable for horizons
    /// far beyond floating-point underflow; `-inf` when survival is
    /// impossible.
    pub fn log_survival_exact(&self, k: usize) -> f64 {
        let n = self.masked.n();
        let mut y = vec![1.0f64; n];
        let mut tmp = vec![0.0f64; n];
        let mut log_scale = 0.0f64;
        for _ in 0..k {
            self.masked.tr_matvec(&y, &mut tmp);
            core::mem::swap(&mut y, &mut tmp);
            let peak = y.iter().cloned().fold(0.0f64, f64::max);
            if peak <= 0.0 {
                return f64::NEG_INFINITY;
            }
            if peak < 1e-150 || peak > 1e150 {
                for v in y.iter_mut() {
                    *v /= peak;
                }
                log_scale += libm::log(peak);
            }
        }
        let total: f64 = y.iter().zip(&self.state_measures).map(|(a, b)| a * b).sum();
        if total <= 0.0 {
            return f64::NEG_INFINITY;
        }
        log_scale + libm::log(total)
    }
}

/// A Monte Carlo survival estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSurvival {
    /// Fraction of sampled trajectories that survived.
    pub estimate: f64,
    /// Binomial standard error of the estimate.
    pub std_error: f64,
    /// Trajectories sampled.
    pub samples: u64,
    /// Deterministic RNG blocks used.
    pub blocks: u64,
}

/// Estimates the `k`-step survival probability by sampling trajectories of
/// the stationary chain. Sampling is split into fixed-size blocks, each on
/// its own RNG stream, so the result is a pure function of `(seed,
/// samples)` regardless of evaluation order.
pub fn monte_carlo_survival(
    open: &OpenSystem,
    k: usize,
    samples: u64,
    seed: u64,
) -> Result<McSurvival, EscapeError> {
    let shift = open.gibbs.potential().subshift().clone();
    let index = shift.cylinder_index(open.depth)?;
    let states = index.len();
    // Cumulative stationary distribution over depth-D windows.
    let mut cum_init = Vec::with_capacity(states);
    let mut acc = 0.0;
    for &mu in &open.state_measures {
        acc += mu;
        cum_init.push(acc);
    }
    let total = acc;
    // Per-state successor table with cumulative conditional probabilities.
    let mut transitions: Vec<Vec<(u32, f64)>> = Vec::with_capacity(states);
    for (r, w) in index.words().enumerate() {
        let mut row = Vec::new();
        let mut acc = 0.0;
        let tail = w.shift();
        let last = *w.letters().last().expect("depth is at least one");
        for e in shift.letters() {
            if !shift.admits(last, e) {
                continue;
            }
            let extended = shift.concat(&w, &Word::raw(vec![e]))?;
            let p = open.gibbs.cylinder_measure(&extended)? / open.state_measures[r];
            acc += p;
            let mut raw: Vec<u32> = tail.letters().iter().map(|l| l.0).collect();
            raw.push(e.0);
            let target = index
                .rank(&shift.word(&raw)?)
                .expect("admissible successor window");
            row.push((target as u32, acc));
        }
        // Guard the last slot against rounding so sampling cannot fall off.
        if let Some(lastp) = row.last_mut() {
            lastp.1 = f64::INFINITY;
        }
        transitions.push(row);
    }
    let blocks = samples.div_ceil(MC_BLOCK);
    let mut hits = 0u64;
    for b in 0..blocks {
        let block_samples = MC_BLOCK.min(samples - b * MC_BLOCK);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b);
        for _ in 0..block_samples {
            let u = uniform(&mut rng) * total;
            let mut state = cum_init.partition_point(|&c| c < u).min(states - 1);
            let mut alive = true;
            for _ in 0..k {
                let v = uniform(&mut rng);
                let row = &transitions[state];
                let mut next = row[row.len() - 1].0;
                for &(tgt, c) in row {
                    if v < c {
                        next = tgt;
                        break;
                    }
                }
                state = next as usize;
                if open.in_hole[state] {
                    alive = false;
                    break;
                }
            }
            if alive {
                hits += 1;
            }
        }
    }
    let estimate = hits as f64 / samples as f64;
    let std_error = libm::sqrt(estimate * (1.0 - estimate) / samples as f64);
    Ok(McSurvival { estimate, std_error, samples, blocks })
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// One row of the escape-rate asymptotics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeLevel {
    /// Hole level (cylinder length).
    pub n: usize,
    /// Hole measure `μ(Uₙ)`.
    pub mu: f64,
    /// Leading eigenvalue of the restricted operator.
    pub lambda_n: f64,
    /// Escape rate `Rₙ = log λ − log λₙ`.
    pub rate: f64,
    /// Ratio `Rₙ / μ(Uₙ)` whose limit the theory predicts.
    pub ratio: f64,
}

/// Level-by-level escape rates with the extrapolated and predicted limits
/// of the rate-to-measure ratio.
#[derive(Debug, Clone)]
pub struct EscapeAsymptotics {
    /// Per-level data, one row per stored hole level.
    pub levels: Vec<EscapeLevel>,
    /// Accelerated limit of the ratio column, when enough levels exist.
    pub extrapolated_ratio: Option<f64>,
    /// Fitted correction exponent `γ` in `ratioₙ ≈ L + c·μ(Uₙ)^γ`.
    pub fit_exponent: Option<f64>,
    /// Fitted correction coefficient `c`.
    pub fit_coefficient: Option<f64>,
    /// Whether the ratio residuals shrink monotonically over the fitted
    /// tail; a false value marks the extrapolation as untrustworthy.
    pub reliable: bool,
    /// Predicted limit from the center classification, when decidable.
    pub theoretical_ratio: Option<f64>,
}

/// Computes escape rates for every level of a hole sequence and
/// extrapolates the rate-to-measure ratio.
pub fn escape_asymptotics(
    gibbs: &GibbsState,
    seq: &HoleSequence,
) -> Result<EscapeAsymptotics, EscapeError> {
    let mut levels = Vec::with_capacity(seq.levels().len());
    for level in seq.levels() {
        let spec = perturbed_spectrum(gibbs, level.words(), None)?;
        let ratio = spec.rate / level.mu();
        levels.push(EscapeLevel {
            n: level.n(),
            mu: level.mu(),
            lambda_n: spec.lambda,
            rate: spec.rate,
            ratio,
        });
    }
    let theoretical_ratio = theoretical_escape_ratio(gibbs, seq.classification())?;
    let (extrapolated_ratio, fit_exponent, fit_coefficient, reliable) = extrapolate(&levels);
    Ok(EscapeAsymptotics {
        levels,
        extrapolated_ratio,
        fit_exponent,
        fit_coefficient,
        reliable,
        theoretical_ratio,
    })
}

/// Accelerated ratio limit: Aitken extrapolation of the last three usable
/// rows, then a power-law fit `|ratio − L| ≈ c·μ^γ` over the tail half.
fn extrapolate(levels: &[EscapeLevel]) -> (Option<f64>, Option<f64>, Option<f64>, bool) {
    let rows: Vec<(f64, f64)> = levels.iter().map(|l| (l.mu, l.ratio)).collect();
    linalg::accelerate_ratio_limit(&rows)
}

/// Predicted limit of `Rₙ / μ(Uₙ)` from the center classification: 1 for a
/// center off its own forward orbit, `1 − e^{S_pφ(ξ) − pP}` for a
/// period-`p` center, and undecided otherwise.
pub fn theoretical_escape_ratio(
    gibbs: &GibbsState,
    class: &Classification,
) -> Result<Option<f64>, EscapeError> {
    match class {
        Classification::NonPseudoPeriodic { .. } => Ok(Some(1.0)),
        Classification::UniquelyPeriodic { xi, period } => {
            let p = *period;
            let pot = gibbs.potential();
            let m = pot.depth();
            let shift = pot.subshift();
            let needed = p + m - 1;
            let reps = needed.div_ceil(p) + 1;
            let w = shift.power(xi, reps)?.prefix(needed.max(1));
            let s_p = pot.birkhoff(&w, p)?;
            Ok(Some(1.0 - libm::exp(s_p - p as f64 * gibbs.pressure())))
        }
        Classification::Unclassified => Ok(None),
    }
}
