//! Potentials, transfer operators, pressure, and Gibbs states.
//!
//! A potential here is locally constant of some depth `m`: its value at an
//! infinite sequence depends only on the first `m` letters, so it is a finite
//! table indexed by the admissible length-`m` words. On that cylinder basis
//! the transfer operator
//!
//! ```text
//! (L_φ g)(ω) = Σ_{e : eω admissible} g(eω) · exp(φ(eω))
//! ```
//!
//! is exactly a finite sparse matrix `M` with `M[w → w'] = exp(φ(w))` for
//! every one-step continuation `w'` of `w`. Its Perron eigenvalue is
//! `exp(P(φ))` with `P` the topological pressure; the eigenfunction and the
//! conformal measure are the left and right Perron vectors, and their
//! componentwise product is the shift-invariant Gibbs measure of the
//! cylinders. Everything downstream (escape rates, dimension drops, induced
//! pressures) is built from this eigendata, so the module keeps all weights
//! in the log domain and rescales during iteration to stay clear of
//! underflow.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{self, Csr, LinalgError, LogSum};
use crate::symbolic::{Letter, Primitivity, Subshift, SymbolicError, Word};

/// Cap on materialized value tables and enumeration-based sums.
const ENUMERATION_BUDGET: u64 = 1 << 24;

/// Depth budget for the construction-time Gibbs sandwich audit.
const AUDIT_WORD_BUDGET: usize = 1 << 14;

/// Default eigensolver tolerance: the Collatz-Wielandt bracket must pinch to
/// this relative width.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-13;

/// Default eigensolver iteration budget.
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Errors from potential construction and spectral computations.
#[derive(Debug, Clone, PartialEq)]
pub enum ThermoError {
    /// A combinatorial precondition failed.
    Symbolic(SymbolicError),
    /// Value table length does not match the number of admissible words.
    WrongValueCount {
        /// Expected number of values.
        expected: usize,
        /// Supplied number of values.
        got: usize,
    },
    /// A potential value is NaN or infinite.
    NonFiniteValue {
        /// Rank of the offending cylinder.
        index: usize,
    },
    /// A word-keyed value table addresses the same cylinder twice.
    DuplicateWord {
        /// Rank of the cylinder supplied twice.
        index: usize,
    },
    /// A word-keyed value table misses some cylinders.
    MissingWords {
        /// Number of cylinders without a value.
        missing: usize,
    },
    /// Depth may only grow.
    DepthDecrease {
        /// Current depth.
        from: usize,
        /// Requested depth.
        to: usize,
    },
    /// A word is too short to determine the requested quantity exactly.
    WordTooShort {
        /// Length needed.
        needed: usize,
        /// Length supplied.
        got: usize,
    },
    /// Two potentials live on different subshifts.
    SubshiftMismatch,
    /// The subshift is not finitely primitive (or could not be certified),
    /// so Perron theory does not apply.
    NotPrimitive {
        /// Outcome of the primitivity search.
        detail: Primitivity,
    },
    /// Power iteration did not certify the eigenvalue.
    Eigensolver {
        /// Last relative residual.
        residual: f64,
        /// Iterations spent.
        iterations: usize,
    },
    /// The operator has no nonzero entries.
    ZeroOperator,
    /// An enumeration-based computation would exceed the budget.
    EnumerationTooLarge {
        /// Number of words required.
        words: u64,
        /// Budget.
        budget: u64,
    },
}

impl fmt::Display for ThermoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Symbolic(e) => write!(f, "{e}"),
            Self::WrongValueCount { expected, got } => {
                write!(f, "potential needs {expected} cylinder values, got {got}")
            }
            Self::NonFiniteValue { index } => {
                write!(f, "potential value at cylinder rank {index} is not finite")
            }
            Self::DuplicateWord { index } => {
                write!(f, "cylinder rank {index} assigned twice")
            }
            Self::MissingWords { missing } => {
                write!(f, "{missing} cylinders have no potential value")
            }
            Self::DepthDecrease { from, to } => {
                write!(f, "cannot shrink potential depth from {from} to {to}")
            }
            Self::WordTooShort { needed, got } => {
                write!(f, "word of length {got} too short, need {needed} letters")
            }
            Self::SubshiftMismatch => write!(f, "potentials live on different subshifts"),
            Self::NotPrimitive { detail } => {
                write!(f, "subshift is not certified finitely primitive: {detail:?}")
            }
            Self::Eigensolver { residual, iterations } => write!(
                f,
                "eigensolver did not converge after {iterations} iterations \
                 (last relative residual {residual:.3e})"
            ),
            Self::ZeroOperator => write!(f, "transfer operator has no nonzero entries"),
            Self::EnumerationTooLarge { words, budget } => {
                write!(f, "enumeration needs {words} words, budget is {budget}")
            }
        }
    }
}

impl core::error::Error for ThermoError {}

impl From<SymbolicError> for ThermoError {
    fn from(e: SymbolicError) -> Self {
        Self::Symbolic(e)
    }
}

impl From<LinalgError> for ThermoError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NoConvergence { residual, iterations } => {
                Self::Eigensolver { residual, iterations }
            }
            LinalgError::ZeroMatrix => Self::ZeroOperator,
        }
    }
}

/// How to compute the topological pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureMethod {
    /// Log of the Perron eigenvalue of the transfer matrix; exact for
    /// locally constant potentials up to solver tolerance.
    Spectral,
    /// Partition sum `(1/n) log Σ_ω exp(sup φ_n over [ω])` over admissible
    /// length-`n` words; agrees with the spectral value up to `O(1/n)`.
    Partition {
        /// Birkhoff sum length.
        n: usize,
    },
}

/// A depth-`m` locally constant potential: one real value per admissible
/// length-`m` cylinder, stored in the log domain (the value IS the log of
/// the transfer weight).
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    shift: Arc<Subshift>,
    depth: usize,
    /// Values in cylinder-rank (lexicographic) order.
    values: Vec<f64>,
}

impl Potential {
    /// Builds a potential from values in lexicographic cylinder order.
    pub fn new(shift: Arc<Subshift>, depth: usize, values: Vec<f64>) -> Result<Self, ThermoError> {
        let index = shift.cylinder_index(depth)?;
        if values.len() != index.len() {
            return Err(ThermoError::WrongValueCount { expected: index.len(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ThermoError::NonFiniteValue { index });
        }
        drop(index);
        Ok(Self { shift, depth, values })
    }

    /// The constant potential of depth 1.
    pub fn constant(shift: Arc<Subshift>, value: f64) -> Result<Self, ThermoError> {
        let k = shift.alphabet_size();
        Self::new(shift, 1, alloc::vec![value; k])
    }

    /// Builds a potential by evaluating a function on every admissible
    /// length-`depth` word, in lexicographic order.
    pub fn from_fn(
        shift: Arc<Subshift>,
        depth: usize,
        mut f: impl FnMut(&Word) -> f64,
    ) -> Result<Self, ThermoError> {
        let index = shift.cylinder_index(depth)?;
        let values: Vec<f64> = index.words().map(|w| f(&w)).collect();
        drop(index);
        Self::new(shift, depth, values)
    }

    /// Builds a potential from `(word, value)` pairs; every admissible
    /// length-`depth` cylinder must be covered exactly once.
    pub fn from_word_values(
        shift: Arc<Subshift>,
        depth: usize,
        pairs: impl IntoIterator<Item = (Word, f64)>,
    ) -> Result<Self, ThermoError> {
        let index = shift.cylinder_index(depth)?;
        let n = index.len();
        let mut values = alloc::vec![f64::NAN; n];
        let mut seen = alloc::vec![false; n];
        for (word, value) in pairs {
            let rank = index.rank(&word).ok_or(SymbolicError::InadmissiblePair {
                position: 0,
                a: word.first().map_or(0, |l| l.0),
                b: word.last().map_or(0, |l| l.0),
            })?;
            if seen[rank] {
                return Err(ThermoError::DuplicateWord { index: rank });
            }
            seen[rank] = true;
            values[rank] = value;
        }
        let missing = seen.iter().filter(|&&s| !s).count();
        if missing > 0 {
            return Err(ThermoError::MissingWords { missing });
        }
        drop(index);
        Self::new(shift, depth, values)
    }

    /// The underlying subshift.
    pub fn subshift(&self) -> &Arc<Subshift> {
        &self.shift
    }

    /// Locality depth `m`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Values in lexicographic cylinder order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on the cylinder of `w`, which must have at least `m` letters
    /// (the value is determined by the first `m`).
    pub fn value(&self, w: &Word) -> Result<f64, ThermoError> {
        if w.len() < self.depth {
            return Err(ThermoError::WordTooShort { needed: self.depth, got: w.len() });
        }
        let index = self.shift.cylinder_index(self.depth)?;
        let rank = index
            .rank(&w.prefix(self.depth))
            .expect("prefix of admissible word is admissible");
        Ok(self.values[rank])
    }

    /// Birkhoff sum `φ_n(ω) = Σ_{j=0}^{n-1} φ(σ^j ω)`, exact on the cylinder
    /// of `w` when `w` has at least `n + m - 1` letters.
    pub fn birkhoff(&self, w: &Word, n: usize) -> Result<f64, ThermoError> {
        if n == 0 {
            return Ok(0.0);
        }
        let needed = n + self.depth - 1;
        if w.len() < needed {
            return Err(ThermoError::WordTooShort { needed, got: w.len() });
        }
        let index = self.shift.cylinder_index(self.depth)?;
        let letters = w.letters();
        let mut acc = 0.0;
        for j in 0..n {
            let window = Word::raw(letters[j..j + self.depth].to_vec());
            let rank = index.rank(&window).expect("window of admissible word is admissible");
            acc += self.values[rank];
        }
        Ok(acc)
    }

    /// Refines to a larger depth; the new potential agrees with this one as
    /// a function on sequences.
    pub fn extend_depth(&self, depth: usize) -> Result<Potential, ThermoError> {
        if depth < self.depth {
            return Err(ThermoError::DepthDecrease { from: self.depth, to: depth });
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        let coarse = self.shift.cylinder_index(self.depth)?;
        let fine = self.shift.cylinder_index(depth)?;
        if fine.len() as u64 > ENUMERATION_BUDGET {
            return Err(ThermoError::EnumerationTooLarge {
                words: fine.len() as u64,
                budget: ENUMERATION_BUDGET,
            });
        }
        let values: Vec<f64> = fine
            .words()
            .map(|w| {
                let rank = coarse.rank(&w.prefix(self.depth)).expect("prefix admissible");
                self.values[rank]
            })
            .collect();
        drop(fine);
        drop(coarse);
        Potential::new(self.shift.clone(), depth, values)
    }

    /// The potential `t · φ`.
    pub fn scale(&self, t: f64) -> Result<Potential, ThermoError> {
        Potential::new(self.shift.clone(), self.depth, self.values.iter().map(|v| t * v).collect())
    }

    /// The potential `a · φ + b · ψ`, aligned to the deeper of the two depths.
    pub fn linear_combination(
        a: f64,
        p: &Potential,
        b: f64,
        q: &Potential,
    ) -> Result<Potential, ThermoError> {
        if !same_subshift(&p.shift, &q.shift) {
            return Err(ThermoError::SubshiftMismatch);
        }
        let depth = p.depth.max(q.depth);
        let pe = p.extend_depth(depth)?;
        let qe = q.extend_depth(depth)?;
        let values = pe.values.iter().zip(&qe.values).map(|(x, y)| a * x + b * y).collect();
        Potential::new(p.shift.clone(), depth, values)
    }

    /// Whether two potentials agree as functions within `tol`, after
    /// refining both to a common depth.
    pub fn agrees_with(&self, other: &Potential, tol: f64) -> Result<bool, ThermoError> {
        if !same_subshift(&self.shift, &other.shift) {
            return Err(ThermoError::SubshiftMismatch);
        }
        let depth = self.depth.max(other.depth);
        let a = self.extend_depth(depth)?;
        let b = other.extend_depth(depth)?;
        Ok(a.values.iter().zip(&b.values).all(|(x, y)| (x - y).abs() <= tol))
    }

    /// Builds the exact transfer matrix of this potential on the depth-`m`
    /// cylinder basis.
    pub fn transfer_matrix(&self) -> Result<TransferMatrix, ThermoError> {
        TransferMatrix::build(self)
    }

    /// Topological pressure by the requested method.
    ///
    /// The spectral method returns `log λ` of the transfer matrix (exact for
    /// locally constant potentials up to solver tolerance); the partition
    /// method returns `(1/n) log Σ exp(sup φ_n)` over length-`n` cylinders.
    pub fn pressure(&self, method: PressureMethod) -> Result<f64, ThermoError> {
        match method {
            PressureMethod::Spectral => {
                let m = self.transfer_matrix()?;
                let eig = m.leading_eigendata(DEFAULT_EIGEN_TOL, DEFAULT_MAX_ITER)?;
                Ok(eig.log_lambda)
            }
            PressureMethod::Partition { n } => {
                if n == 0 {
                    return Err(SymbolicError::InvalidDepth.into());
                }
                Ok(self.log_partition_sum(n)? / n as f64)
            }
        }
    }

    /// `log Σ_{|ω| = n} exp(sup φ_n over [ω])`.
    ///
    /// With depth-`m` locality the Birkhoff sum `φ_n` is constant on
    /// length-`(n + m - 1)` cylinders, so the sup over `[ω]` is a maximum
    /// over the refinements of `ω` to that length; the lexicographic word
    /// stream visits each `[ω]` contiguously, so one pass suffices.
    fn log_partition_sum(&self, n: usize) -> Result<f64, ThermoError> {
        let deep = n + self.depth - 1;
        let index = self.shift.cylinder_index(deep)?;
        if index.len() as u64 > ENUMERATION_BUDGET {
            return Err(ThermoError::EnumerationTooLarge {
                words: index.len() as u64,
                budget: ENUMERATION_BUDGET,
            });
        }
        let coarse_index = self.shift.cylinder_index(self.depth)?;
        let mut acc = LogSum::new();
        let mut current_prefix: Option<Vec<Letter>> = None;
        let mut current_max = f64::NEG_INFINITY;
        for w in index.words() {
            let letters = w.letters();
            let prefix = &letters[..n];
            if current_prefix.as_deref() != Some(prefix) {
                if current_prefix.is_some() {
                    acc.add(current_max);
                }
                current_prefix = Some(prefix.to_vec());
                current_max = f64::NEG_INFINITY;
            }
            let mut sum = 0.0;
            for j in 0..n {
                let window = Word::raw(letters[j..j + self.depth].to_vec());
                let rank = coarse_index.rank(&window).expect("window admissible");
                sum += self.values[rank];
            }
            current_max = current_max.max(sum);
        }
        if current_prefix.is_some() {
            acc.add(current_max);
        }
        Ok(acc.log_value())
    }
}

fn same_subshift(a: &Arc<Subshift>, b: &Arc<Subshift>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// The transfer operator of a depth-`m` potential as an exact sparse matrix
/// on the admissible length-`m` words.
///
/// Row `w` has an entry `exp(φ(w))` in column `w'` for every one-step
/// continuation `w' = w_2 … w_m e`. Entries are stored rescaled by
/// `exp(-log_offset)` with `log_offset = max φ`, so the stored matrix never
/// overflows; all reported eigenvalues are on the true scale.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    shift: Arc<Subshift>,
    depth: usize,
    csr: Csr,
    log_offset: f64,
}

impl TransferMatrix {
    fn build(p: &Potential) -> Result<Self, ThermoError> {
        let index = p.shift.cylinder_index(p.depth)?;
        let n = index.len();
        let log_offset = p.values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        let values = &p.values;
        let shift_ref: &Subshift = &p.shift;
        let rows = index.words().enumerate().map(|(i, w)| {
            let weight = libm::exp(values[i] - log_offset);
            let tail = w.shift();
            let last = w.last().expect("depth >= 1");
            shift_ref
                .successors(last)
                .iter()
                .map(|&e| {
                    let mut succ = tail.clone();
                    succ.push(e);
                    let col = index.rank(&succ).expect("continuation admissible") as u32;
                    (col, weight)
                })
                .collect()
        });
        let csr = Csr::from_rows(n, rows);
        Ok(Self { shift: p.shift.clone(), depth: p.depth, csr, log_offset })
    }

    /// The underlying subshift.
    pub fn subshift(&self) -> &Arc<Subshift> {
        &self.shift
    }

    /// Cylinder depth of the state space.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of states (admissible depth-`m` words).
    pub fn states(&self) -> usize {
        self.csr.n()
    }

    /// True-scale entries of row `i`, column-sorted.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let off = self.log_offset;
        self.csr.row(i).map(move |(c, v)| (c as usize, v * libm::exp(off)))
    }

    pub(crate) fn csr(&self) -> &Csr {
        &self.csr
    }

    pub(crate) fn log_offset(&self) -> f64 {
        self.log_offset
    }

    /// Leading eigendata by power iteration from the all-ones vector, with
    /// the primitivity precondition checked on the letter graph (block
    /// presentations of a finitely primitive subshift stay primitive, so the
    /// letter-level certificate covers every depth).
    ///
    /// Returned vectors: `left` is normalized to sum 1, `right` so that the
    /// pairing `Σ left[w] · right[w]` is 1. The residual is the final
    /// relative Collatz-Wielandt bracket width; `gap_estimate` is the crude
    /// relative spectral gap from one deflated step.
    pub fn leading_eigendata(&self, tol: f64, max_iter: usize) -> Result<Eigendata, ThermoError> {
        let max_p = self.shift.alphabet_size() * self.shift.alphabet_size() + 2;
        match self.shift.is_finitely_primitive(max_p) {
            Primitivity::Primitive { .. } => {}
            other => return Err(ThermoError::NotPrimitive { detail: other }),
        }
        let res = linalg::leading_eigen(&self.csr, tol, max_iter, 0.0)?;
        let log_lambda = libm::log(res.lambda) + self.log_offset;
        let mut left = res.left;
        let mut right = res.right;
        let left_sum: f64 = left.iter().sum();
        for x in left.iter_mut() {
            *x /= left_sum;
        }
        let pairing: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
        for x in right.iter_mut() {
            *x /= pairing;
        }
        Ok(Eigendata {
            lambda: libm::exp(log_lambda),
            log_lambda,
            right,
            left,
            residual: res.residual,
            gap_estimate: res.gap_estimate,
            iterations: res.iterations,
        })
    }
}

/// Certified leading eigendata of a transfer matrix.
#[derive(Debug, Clone)]
pub struct Eigendata {
    /// Perron eigenvalue on the true scale.
    pub lambda: f64,
    /// Its logarithm (the pressure when the matrix is a transfer matrix).
    pub log_lambda: f64,
    /// Right eigenvector, paired to `left` (`Σ left·right = 1`).
    pub right: Vec<f64>,
    /// Left eigenvector, normalized to sum 1.
    pub left: Vec<f64>,
    /// Final relative residual of the iteration.
    pub residual: f64,
    /// Crude relative spectral gap `1 - |λ₂|/λ` (diagnostic only).
    pub gap_estimate: f64,
    /// Iterations used.
    pub iterations: usize,
}

/// Gibbs state of a potential: pressure, conformal measure, eigenfunction,
/// and the cylinder measures they induce.
///
/// On the depth-`m` basis the conformal measure is the right Perron vector
/// of the transfer matrix normalized to total mass 1, the eigenfunction is
/// the left Perron vector scaled so the product vector `μ[w] =
/// conformal[w] · eigenfunction[w]` is a probability vector; `μ` is the
/// shift-invariant Gibbs measure of the cylinders.
#[derive(Debug, Clone)]
pub struct GibbsState {
    potential: Potential,
    matrix: TransferMatrix,
    pressure: f64,
    lambda: f64,
    conformal: Vec<f64>,
    eigenfunction: Vec<f64>,
    residual: f64,
    gap_estimate: f64,
    gibbs_constant_bound: f64,
    audited_depth: usize,
}

impl GibbsState {
    /// Computes the Gibbs state of a potential.
    pub fn compute(p: &Potential, tol: f64) -> Result<Self, ThermoError> {
        let matrix = p.transfer_matrix()?;
        let eig = matrix.leading_eigendata(tol, DEFAULT_MAX_ITER)?;
        // Semantic assignment: the right eigenvector carries the conformal
        // cylinder masses (total mass 1), the left carries the eigenfunction.
        let mut conformal = eig.right;
        let sum: f64 = conformal.iter().sum();
        for x in conformal.iter_mut() {
            *x /= sum;
        }
        let mut eigenfunction = eig.left;
        let pairing: f64 = conformal.iter().zip(&eigenfunction).map(|(n, r)| n * r).sum();
        for x in eigenfunction.iter_mut() {
            *x /= pairing;
        }
        let mut state = Self {
            potential: p.clone(),
            matrix,
            pressure: eig.log_lambda,
            lambda: eig.lambda,
            conformal,
            eigenfunction,
            residual: eig.residual,
            gap_estimate: eig.gap_estimate,
            gibbs_constant_bound: 1.0,
            audited_depth: 0,
        };
        let (bound, audited) = state.audit_gibbs_constant(12, AUDIT_WORD_BUDGET)?;
        state.gibbs_constant_bound = bound;
        state.audited_depth = audited;
        Ok(state)
    }

    /// The potential this state belongs to.
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// The transfer matrix the eigendata came from.
    pub fn matrix(&self) -> &TransferMatrix {
        &self.matrix
    }

    /// Topological pressure `P(φ) = log λ`.
    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    /// Perron eigenvalue `λ = exp(P(φ))`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Conformal cylinder masses on the depth-`m` basis, total mass 1.
    pub fn conformal(&self) -> &[f64] {
        &self.conformal
    }

    /// Eigenfunction samples on the depth-`m` basis, scaled so the Gibbs
    /// cylinder masses sum to 1.
    pub fn eigenfunction(&self) -> &[f64] {
        &self.eigenfunction
    }

    /// Final relative residual of the eigensolver.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Crude relative spectral gap estimate.
    pub fn gap_estimate(&self) -> f64 {
        self.gap_estimate
    }

    /// Measured two-sided Gibbs constant over the audited cylinders.
    pub fn gibbs_constant_bound(&self) -> f64 {
        self.gibbs_constant_bound
    }

    /// Largest cylinder length covered by the construction-time audit.
    pub fn audited_depth(&self) -> usize {
        self.audited_depth
    }

    /// Depth of the cylinder basis.
    pub fn depth(&self) -> usize {
        self.potential.depth()
    }

    /// Gibbs measure of the cylinder `[w]` for a word of any length.
    ///
    /// Depth-`m` cylinders read the eigendata directly; longer words use the
    /// exact product formula `μ([w]) = λ^{-j} · ρ[w|_m] · exp(φ_j(w)) ·
    /// ν[last m letters]` for `|w| = m + j`; shorter words marginalize over
    /// their refinements. The empty word has measure 1.
    pub fn cylinder_measure(&self, w: &Word) -> Result<f64, ThermoError> {
        let m = self.depth();
        if !self.potential.subshift().is_admissible(w.letters()) {
            let letters = w.letters();
            let bad = letters
                .windows(2)
                .position(|p| !self.potential.subshift().admits(p[0], p[1]))
                .unwrap_or(0);
            return Err(SymbolicError::InadmissiblePair {
                position: bad,
                a: letters.get(bad).map_or(0, |l| l.0),
                b: letters.get(bad + 1).map_or(0, |l| l.0),
            }
            .into());
        }
        if w.is_empty() {
            return Ok(1.0);
        }
        let index = self.potential.subshift().cylinder_index(m)?;
        if w.len() >= m {
            let j = w.len() - m;
            let head = index.rank(&w.prefix(m)).expect("admissible");
            let tail_word = Word::raw(w.letters()[j..].to_vec());
            let tail = index.rank(&tail_word).expect("admissible");
            let birkhoff = self.potential.birkhoff(w, j)?;
            Ok(self.eigenfunction[head]
                * self.conformal[tail]
                * libm::exp(birkhoff - j as f64 * self.pressure))
        } else {
            // Marginalize: sum the depth-m refinements of [w].
            let mut total = 0.0;
            let mut stack: Vec<Word> = alloc::vec![w.clone()];
            while let Some(word) = stack.pop() {
                if word.len() == m {
                    let rank = index.rank(&word).expect("admissible");
                    total += self.eigenfunction[rank] * self.conformal[rank];
                    continue;
                }
                let last = word.last().expect("nonempty");
                for &e in self.potential.subshift().successors(last) {
                    let mut next = word.clone();
                    next.push(e);
                    stack.push(next);
                }
            }
            Ok(total)
        }
    }

    /// Measures the two-sided Gibbs constant: the largest of `r` and `1/r`
    /// over all audited cylinders, where `r = μ([ω|_n]) / exp(φ_n - P n)`
    /// and the Birkhoff value ranges over the finitely many it takes on the
    /// cylinder. Enumerates length-`(n + m - 1)` words for `n` up to
    /// `max_len`, stopping early at the word budget; returns the bound and
    /// the largest `n` fully audited.
    pub fn audit_gibbs_constant(
        &self,
        max_len: usize,
        word_budget: usize,
    ) -> Result<(f64, usize), ThermoError> {
        let m = self.depth();
        let mut bound = 1.0f64;
        let mut audited = 0usize;
        for n in 1..=max_len {
            let deep = n + m - 1;
            let index = self.potential.subshift().cylinder_index(deep)?;
            if index.len() > word_budget {
                break;
            }
            for v in index.words() {
                let mu = self.cylinder_measure(&v.prefix(n))?;
                let log_gibbs = self.potential.birkhoff(&v, n)? - n as f64 * self.pressure;
                let ratio = mu / libm::exp(log_gibbs);
                bound = bound.max(ratio).max(1.0 / ratio);
            }
            audited = n;
        }
        Ok((bound, audited))
    }

    /// The fully normalized potential `φ̃ = φ - P(φ) + log ρ - log ρ∘σ`.
    ///
    /// The result has pressure 0 and a row-stochastic transfer matrix (the
    /// operator fixes the constant function 1), and induces the same Gibbs
    /// measure. The eigenfunction factor looks one letter further ahead, so
    /// the depth grows by one.
    pub fn normalize(&self) -> Result<Potential, ThermoError> {
        let m = self.depth();
        let shift = self.potential.subshift().clone();
        let coarse = shift.cylinder_index(m)?;
        let fine = shift.cylinder_index(m + 1)?;
        if fine.len() as u64 > ENUMERATION_BUDGET {
            return Err(ThermoError::EnumerationTooLarge {
                words: fine.len() as u64,
                budget: ENUMERATION_BUDGET,
            });
        }
        let values: Vec<f64> = fine
            .words()
            .map(|v| {
                let head = coarse.rank(&v.prefix(m)).expect("admissible");
                let tail = coarse.rank(&Word::raw(v.letters()[1..].to_vec())).expect("admissible");
                self.potential.values()[head] - self.pressure
                    + libm::log(self.eigenfunction[head])
                    - libm::log(self.eigenfunction[tail])
            })
            .collect();
        drop(fine);
        drop(coarse);
        Potential::new(shift, m + 1, values)
    }

    /// Derivative of the Perron eigenvalue along a potential family whose
    /// t-derivative is the locally constant `ell`: `λ'(t) = ν(L(ℓ · ρ))`
    /// evaluated with the current eigendata. For geometric families this
    /// equals `-λ(t) · χ` with `χ` the Lyapunov exponent.
    pub fn pressure_derivative(&self, ell: &Potential) -> Result<f64, ThermoError> {
        if !same_subshift(self.potential.subshift(), ell.subshift()) {
            return Err(ThermoError::SubshiftMismatch);
        }
        let m = self.depth();
        if ell.depth() > m {
            return Err(ThermoError::DepthDecrease { from: ell.depth(), to: m });
        }
        let ell_m = ell.extend_depth(m)?;
        // L(ℓρ) in coordinates: the operator acts by left multiplication,
        // so apply the transposed matrix to the componentwise product.
        let f: Vec<f64> =
            ell_m.values().iter().zip(&self.eigenfunction).map(|(l, r)| l * r).collect();
        let mut y = alloc::vec![0.0; f.len()];
        self.matrix.csr().tr_matvec(&f, &mut y);
        let scale = libm::exp(self.matrix.log_offset());
        Ok(self.conformal.iter().zip(&y).map(|(n, v)| n * v).sum::<f64>() * scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;
    use alloc::vec;

    fn full2() -> Arc<Subshift> {
        Arc::new(Subshift::full(2).unwrap())
    }

    fn golden() -> Arc<Subshift> {
        Arc::new(Subshift::new(vec![vec![false, true], vec![true, true]]).unwrap())
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    const LOG2: f64 = core::f64::consts::LN_2;

    fn golden_ratio() -> f64 {
        0.5 * (1.0 + libm::sqrt(5.0))
    }

    #[test]
    fn constant_extend_depth_stays_constant() {
        let p = Potential::constant(full2(), -LOG2).unwrap();
        let e = p.extend_depth(3).unwrap();
        assert_eq!(e.values().len(), 8);
        assert!(e.values().iter().all(|&v| v == -LOG2));
    }

    #[test]
    fn bernoulli_birkhoff_is_a_product() {
        let shift = full2();
        let p = Potential::new(shift.clone(), 1, vec![libm::log(0.3), libm::log(0.7)]).unwrap();
        let w = shift.word(&[0, 1]).unwrap();
        let b = p.birkhoff(&w, 2).unwrap();
        assert!(close(b, libm::log(0.21), 1e-14));
    }

    #[test]
    fn golden_zero_potential_extends() {
        let p = Potential::constant(golden(), 0.0).unwrap();
        let e = p.extend_depth(2).unwrap();
        assert_eq!(e.values(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn doubling_transfer_matrix_rows() {
        let p = Potential::constant(full2(), -LOG2).unwrap();
        let m = p.transfer_matrix().unwrap();
        assert_eq!(m.states(), 2);
        for i in 0..2 {
            let row: Vec<(usize, f64)> = m.row(i).collect();
            assert_eq!(row.len(), 2);
            assert!(row.iter().all(|&(_, v)| close(v, 0.5, 1e-15)));
        }
    }

    #[test]
    fn golden_transfer_matrix_shape() {
        let p = Potential::constant(golden(), -LOG2).unwrap();
        let m = p.transfer_matrix().unwrap();
        let row0: Vec<(usize, f64)> = m.row(0).collect();
        let row1: Vec<(usize, f64)> = m.row(1).collect();
        assert_eq!(row0, vec![(1, 0.5)]);
        assert_eq!(row1.len(), 2);
        assert!(close(row1[0].1, 0.5, 1e-15));
    }

    #[test]
    fn bernoulli_column_pattern() {
        let shift = full2();
        let p = Potential::new(shift, 1, vec![libm::log(0.3), libm::log(0.7)]).unwrap();
        let m = p.transfer_matrix().unwrap();
        let row0: Vec<(usize, f64)> = m.row(0).collect();
        let row1: Vec<(usize, f64)> = m.row(1).collect();
        assert!(row0.iter().all(|&(_, v)| close(v, 0.3, 1e-15)));
        assert!(row1.iter().all(|&(_, v)| close(v, 0.7, 1e-15)));
    }

    #[test]
    fn eigendata_examples() {
        // Doubly stochastic doubling matrix.
        let p = Potential::constant(full2(), -LOG2).unwrap();
        let eig = p.transfer_matrix().unwrap().leading_eigendata(1e-13, 10_000).unwrap();
        assert!(close(eig.lambda, 1.0, 1e-12));
        assert!(close(eig.left[0], 0.5, 1e-10));
        assert!(close(eig.left[1], 0.5, 1e-10));
        assert!(close(eig.right[0], 1.0, 1e-10));
        assert!(close(eig.right[1], 1.0, 1e-10));

        // Golden-mean half-weight matrix.
        let p = Potential::constant(golden(), -LOG2).unwrap();
        let eig = p.transfer_matrix().unwrap().leading_eigendata(1e-13, 10_000).unwrap();
        assert!(close(eig.lambda, golden_ratio() / 2.0, 1e-12));

        // Unweighted full shift.
        let p = Potential::constant(full2(), 0.0).unwrap();
        let eig = p.transfer_matrix().unwrap().leading_eigendata(1e-13, 10_000).unwrap();
        assert!(close(eig.lambda, 2.0, 1e-12));
    }

    #[test]
    fn non_primitive_rejected() {
        let shift =
            Arc::new(Subshift::new(vec![vec![false, true], vec![true, false]]).unwrap());
        let p = Potential::constant(shift, 0.0).unwrap();
        let err = p.transfer_matrix().unwrap().leading_eigendata(1e-12, 100).unwrap_err();
        assert!(matches!(err, ThermoError::NotPrimitive { .. }));
    }

    #[test]
    fn pressure_examples() {
        let p = Potential::constant(full2(), -LOG2).unwrap();
        assert!(close(p.pressure(PressureMethod::Spectral).unwrap(), 0.0, 1e-12));
        assert!(close(p.pressure(PressureMethod::Partition { n: 6 }).unwrap(), 0.0, 1e-12));

        let p = Potential::constant(full2(), 0.0).unwrap();
        assert!(close(p.pressure(PressureMethod::Spectral).unwrap(), LOG2, 1e-12));

        let p = Potential::constant(golden(), 0.0).unwrap();
        let spectral = p.pressure(PressureMethod::Spectral).unwrap();
        assert!(close(spectral, libm::log(golden_ratio()), 1e-12));
        // Partition counts golden-mean words, off by O(1/n).
        let partition = p.pressure(PressureMethod::Partition { n: 10 }).unwrap();
        assert!((partition - spectral).abs() < 0.1);
    }

    #[test]
    fn bernoulli_gibbs_state() {
        let shift = full2();
        let p = Potential::new(shift.clone(), 1, vec![libm::log(0.3), libm::log(0.7)]).unwrap();
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        assert!(close(g.pressure(), 0.0, 1e-12));
        let w0 = shift.word(&[0]).unwrap();
        let w01 = shift.word(&[0, 1]).unwrap();
        assert!(close(g.cylinder_measure(&w0).unwrap(), 0.3, 1e-11));
        assert!(close(g.cylinder_measure(&w01).unwrap(), 0.21, 1e-11));
        // Product measure: the sandwich constant is exactly 1.
        assert!(g.gibbs_constant_bound() < 1.0 + 1e-9);
        // Conformal masses and eigenfunction separate correctly.
        assert!(close(g.conformal()[0], 0.3, 1e-11));
        assert!(close(g.eigenfunction()[0], 1.0, 1e-11));
    }

    #[test]
    fn doubling_cylinder_measures() {
        let shift = full2();
        let p = Potential::constant(shift.clone(), -LOG2).unwrap();
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        for raw in [&[0u32][..], &[1, 0], &[0, 1, 1], &[1, 1, 1, 1]] {
            let w = shift.word(raw).unwrap();
            let expected = libm::exp(-(raw.len() as f64) * LOG2);
            assert!(close(g.cylinder_measure(&w).unwrap(), expected, 1e-12));
        }
    }

    #[test]
    fn parry_measure_on_golden_mean() {
        let shift = golden();
        let p = Potential::constant(shift.clone(), 0.0).unwrap();
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        // Parry weights: mu([1]) = golden / sqrt(5).
        let expected = golden_ratio() / libm::sqrt(5.0);
        let w1 = shift.word(&[1]).unwrap();
        assert!(close(g.cylinder_measure(&w1).unwrap(), expected, 1e-11));
        let w0 = shift.word(&[0]).unwrap();
        assert!(close(
            g.cylinder_measure(&w0).unwrap() + g.cylinder_measure(&w1).unwrap(),
            1.0,
            1e-12
        ));
    }

    #[test]
    fn markov_consistency_of_cylinder_measures() {
        let shift = golden();
        let p = Potential::new(shift.clone(), 1, vec![-0.3, -1.1]).unwrap();
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        for letter in 0..2u32 {
            let u = shift.word(&[letter]).unwrap();
            let mu = g.cylinder_measure(&u).unwrap();
            let refine: f64 = shift
                .letters()
                .filter(|&e| shift.admits(Letter(letter), e))
                .map(|e| g.cylinder_measure(&shift.word(&[letter, e.0]).unwrap()).unwrap())
                .sum();
            let preimage: f64 = shift
                .letters()
                .filter(|&e| shift.admits(e, Letter(letter)))
                .map(|e| g.cylinder_measure(&shift.word(&[e.0, letter]).unwrap()).unwrap())
                .sum();
            assert!(close(mu, refine, 1e-12));
            assert!(close(mu, preimage, 1e-11));
        }
    }

    #[test]
    fn normalization_examples() {
        // Already normalized: stays the same function.
        let p = Potential::constant(full2(), -LOG2).unwrap();
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        let tilde = g.normalize().unwrap();
        assert!(tilde.agrees_with(&p, 1e-11).unwrap());

        // Zero potential normalizes to -log 2.
        let p = Potential::constant(full2(), 0.0).unwrap();
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        let tilde = g.normalize().unwrap();
        let target = Potential::constant(full2(), -LOG2).unwrap();
        assert!(tilde.agrees_with(&target, 1e-11).unwrap());

        // Golden mean zero potential: the normalized operator fixes the
        // constant function 1, so each state's incoming weights (the
        // operator's row in function coordinates) sum to 1 and match the
        // Parry transition weights.
        let p = Potential::constant(golden(), 0.0).unwrap();
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        let tilde = g.normalize().unwrap();
        let m = tilde.transfer_matrix().unwrap();
        let mut incoming = vec![Vec::new(); m.states()];
        for i in 0..m.states() {
            for (j, v) in m.row(i) {
                incoming[j].push(v);
            }
        }
        let gr = golden_ratio();
        for (j, weights) in incoming.iter().enumerate() {
            let sum: f64 = weights.iter().sum();
            assert!(close(sum, 1.0, 1e-11), "state {j} receives total weight {sum}");
        }
        // States in lexicographic order: [01], [10], [11]. Only [10] can be
        // entered from one predecessor; the other two split as 1/g², 1/g.
        assert!(close(incoming[0][0], 1.0, 1e-11));
        let mut pair = incoming[1].clone();
        pair.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(close(pair[0], 1.0 / (gr * gr), 1e-11));
        assert!(close(pair[1], 1.0 / gr, 1e-11));
        assert!(close(tilde.pressure(PressureMethod::Spectral).unwrap(), 0.0, 1e-11));
    }

    #[test]
    fn normalization_preserves_measure_and_is_idempotent() {
        let shift = golden();
        let p = Potential::new(shift.clone(), 1, vec![-0.2, -0.9]).unwrap();
        let g = GibbsState::compute(&p, 1e-13).unwrap();
        let tilde = g.normalize().unwrap();
        let g2 = GibbsState::compute(&tilde, 1e-13).unwrap();
        for raw in [&[0u32, 1][..], &[1, 0], &[1, 1], &[0, 1, 1]] {
            let w = shift.word(raw).unwrap();
            assert!(close(
                g.cylinder_measure(&w).unwrap(),
                g2.cylinder_measure(&w).unwrap(),
                1e-12
            ));
        }
        let tilde2 = g2.normalize().unwrap();
        assert!(tilde2.agrees_with(&tilde, 1e-10).unwrap());
    }

    #[test]
    fn pressure_derivative_matches_family() {
        // Family t · (-log 2) on the full 2-shift: λ(t) = 2^(1-t).
        let shift = full2();
        let ell = Potential::constant(shift.clone(), -LOG2).unwrap();
        let at_t1 = ell.scale(1.0).unwrap();
        let g = GibbsState::compute(&at_t1, 1e-13).unwrap();
        let deriv = g.pressure_derivative(&ell).unwrap();
        assert!(close(deriv, -LOG2, 1e-11), "derivative {deriv}");

        // Central finite difference cross-check.
        let h = 1e-5;
        let lam = |t: f64| {
            let p = ell.scale(t).unwrap();
            GibbsState::compute(&p, 1e-13).unwrap().lambda()
        };
        let fd = (lam(1.0 + h) - lam(1.0 - h)) / (2.0 * h);
        assert!((deriv - fd).abs() / fd.abs() < 1e-6);

        // Constant family: zero derivative.
        let zero = Potential::constant(shift, 0.0).unwrap();
        assert!(close(g.pressure_derivative(&zero).unwrap(), 0.0, 1e-14));
    }

    #[test]
    fn cantor_family_derivative_at_bowen_parameter() {
        // Two affine branches of slope 1/3: λ(t) = 2 · 3^(-t), zero at
        // b = log 2 / log 3, with λ'(b) = -log 3 there.
        let shift = full2();
        let log3 = libm::log(3.0);
        let ell = Potential::constant(shift, -log3).unwrap();
        let b = LOG2 / log3;
        let at_b = ell.scale(b).unwrap();
        let g = GibbsState::compute(&at_b, 1e-13).unwrap();
        assert!(close(g.lambda(), 1.0, 1e-12));
        let deriv = g.pressure_derivative(&ell).unwrap();
        assert!(close(deriv, -log3, 1e-11));
    }

    #[test]
    fn word_value_errors() {
        let shift = full2();
        let p = Potential::new(shift.clone(), 2, vec![0.0, -1.0, -2.0, -3.0]).unwrap();
        let w = shift.word(&[1]).unwrap();
        assert!(matches!(p.value(&w), Err(ThermoError::WordTooShort { needed: 2, got: 1 })));
        let w = shift.word(&[1, 0]).unwrap();
        assert_eq!(p.value(&w).unwrap(), -2.0);
        assert!(matches!(
            p.birkhoff(&w, 2),
            Err(ThermoError::WordTooShort { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn from_word_values_roundtrip_and_errors() {
        let shift = golden();
        let pairs = vec![
            (shift.word(&[1, 1]).unwrap(), -3.0),
            (shift.word(&[0, 1]).unwrap(), -1.0),
            (shift.word(&[1, 0]).unwrap(), -2.0),
        ];
        let p = Potential::from_word_values(shift.clone(), 2, pairs).unwrap();
        assert_eq!(p.values(), [-1.0, -2.0, -3.0]);

        let dup = vec![
            (shift.word(&[0, 1]).unwrap(), -1.0),
            (shift.word(&[0, 1]).unwrap(), -1.5),
        ];
        assert!(matches!(
            Potential::from_word_values(shift.clone(), 2, dup),
            Err(ThermoError::DuplicateWord { index: 0 })
        ));

        let short = vec![(shift.word(&[0, 1]).unwrap(), -1.0)];
        assert!(matches!(
            Potential::from_word_values(shift, 2, short),
            Err(ThermoError::MissingWords { missing: 2 })
        ));
    }

    #[test]
    fn linear_combination_aligns_depths() {
        let shift = full2();
        let p = Potential::constant(shift.clone(), 1.0).unwrap();
        let q = Potential::new(shift.clone(), 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let c = Potential::linear_combination(2.0, &p, -1.0, &q).unwrap();
        assert_eq!(c.depth(), 2);
        assert_eq!(c.values(), [2.0, 1.0, 0.0, -1.0]);
    }
}
