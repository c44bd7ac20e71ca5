//! Nested hole sequences and their admissibility hypotheses.
//!
//! An open system is a shift with a shrinking family of holes: at level `n`
//! the hole is a union of length-`n` cylinders, each level nested in the
//! previous one, with measure decaying geometrically. The escape and
//! dimension asymptotics depend on how the holes shrink onto their limit
//! point: a periodic center against an aperiodic one changes the limit
//! constant. This module builds the standard single-cylinder sequences
//! around a symbolic center, classifies centers (periodic with a primitive
//! cycle, certified aperiodic to a depth, or unresolved), sandwiches metric
//! balls between inner and outer cylinder unions at the measure-matched
//! length, and checks the hypotheses the limit theorems need, reporting
//! measured constants instead of assuming them.

use alloc::vec::Vec;
use core::fmt;

use crate::gdms::{Gdms, GdmsError, Interval};
use crate::symbolic::{SymbolicError, Word};
use crate::thermo::{GibbsState, ThermoError};

/// Hard cap on cylinder enumerations during ball bracketing.
const BALL_WORD_BUDGET: usize = 1 << 22;

/// Absolute tolerance for geometric membership tests.
const POINT_TOL: f64 = 1e-12;

/// Errors from hole construction and ball sandwiching.
#[derive(Debug, Clone, PartialEq)]
pub enum HoleError {
    /// A combinatorial precondition failed.
    Symbolic(SymbolicError),
    /// A spectral computation failed.
    Thermo(ThermoError),
    /// A geometric computation failed.
    Geometry(GdmsError),
    /// No levels supplied.
    EmptyLevels,
    /// A level's words have the wrong length.
    LengthMismatch {
        /// Level index `n`.
        level: usize,
        /// Required length (= n).
        expected: usize,
        /// Offending length found.
        got: usize,
    },
    /// A level-(n+1) cylinder is not inside the level-n hole.
    NotNested {
        /// The deeper level.
        level: usize,
    },
    /// A level lists the same cylinder twice.
    DuplicateWord {
        /// Level index.
        level: usize,
    },
    /// The symbolic tail is shorter than the deepest requested level.
    TailTooShort {
        /// Letters needed.
        needed: usize,
        /// Letters available.
        got: usize,
    },
    /// The periodic cycle cannot follow itself in the subshift.
    CycleInadmissible,
    /// The cylinder-count scale must be positive.
    BadKappa {
        /// Offending value.
        kappa: f64,
    },
    /// The ball radius is outside the workable range.
    RadiusOutOfRange {
        /// Offending radius.
        r: f64,
        /// Largest allowed radius.
        limit: f64,
    },
    /// The working depth cannot certify the ball bracket; retry deeper.
    ResolutionTooCoarse {
        /// Depth that failed.
        depth: usize,
        /// Suggested deeper resolution.
        suggested: usize,
    },
    /// An enumeration would exceed the word budget.
    Budget {
        /// Words required.
        words: usize,
        /// Budget.
        budget: usize,
    },
}

impl fmt::Display for HoleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Symbolic(e) => write!(f, "{e}"),
            Self::Thermo(e) => write!(f, "{e}"),
            Self::Geometry(e) => write!(f, "{e}"),
            Self::EmptyLevels => write!(f, "hole sequence needs at least one level"),
            Self::LengthMismatch { level, expected, got } => write!(
                f,
                "level {level} must consist of length-{expected} words, found length {got}"
            ),
            Self::NotNested { level } => {
                write!(f, "level {level} is not contained in the previous level")
            }
            Self::DuplicateWord { level } => {
                write!(f, "level {level} lists a cylinder twice")
            }
            Self::TailTooShort { needed, got } => {
                write!(f, "center tail has {got} letters, {needed} needed")
            }
            Self::CycleInadmissible => {
                write!(f, "the periodic cycle cannot follow itself in the subshift")
            }
            Self::BadKappa { kappa } => {
                write!(f, "cylinder-count scale must be positive, got {kappa}")
            }
            Self::RadiusOutOfRange { r, limit } => {
                write!(f, "ball radius {r} outside (0, {limit}]")
            }
            Self::ResolutionTooCoarse { depth, suggested } => write!(
                f,
                "depth {depth} cannot certify the ball bracket; retry at depth {suggested}"
            ),
            Self::Budget { words, budget } => {
                write!(f, "enumeration of {words} words exceeds budget {budget}")
            }
        }
    }
}

impl core::error::Error for HoleError {}

impl From<SymbolicError> for HoleError {
    fn from(e: SymbolicError) -> Self {
        Self::Symbolic(e)
    }
}

impl From<ThermoError> for HoleError {
    fn from(e: ThermoError) -> Self {
        Self::Thermo(e)
    }
}

impl From<GdmsError> for HoleError {
    fn from(e: GdmsError) -> Self {
        Self::Geometry(e)
    }
}

/// How the holes' limit point sits in the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    /// No contraction word fixes the center; certified up to the stated
    /// word length.
    NonPseudoPeriodic {
        /// Largest word length the certificate covers.
        checked_up_to: usize,
    },
    /// Exactly the powers of one primitive word fix the center.
    UniquelyPeriodic {
        /// The primitive fixing word.
        xi: Word,
        /// Its length (the prime period).
        period: usize,
    },
    /// Evidence is ambiguous or insufficient.
    Unclassified,
}

/// Outcome of one hypothesis check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    /// Verified on the stored data.
    Pass,
    /// Contradicted by the stored data.
    Fail,
    /// The stored data cannot decide it.
    NotApplicable,
}

impl fmt::Display for ConditionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Pass => write!(f, "pass"),
            Self::Fail => write!(f, "fail"),
            Self::NotApplicable => write!(f, "not-applicable"),
        }
    }
}

/// One level of a hole sequence: the union of disjoint length-`n`
/// cylinders with its measure.
#[derive(Debug, Clone)]
pub struct HoleLevel {
    n: usize,
    words: Vec<Word>,
    mu: f64,
}

impl HoleLevel {
    /// Level index (= common word length).
    pub fn n(&self) -> usize {
        self.n
    }

    /// The cylinders composing the hole, sorted.
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// Measure of the hole under the sequence's Gibbs state.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Whether a word of length ≥ n starts inside this hole.
    pub fn contains_prefix_of(&self, w: &Word) -> bool {
        debug_assert!(w.len() >= self.n);
        let p = w.prefix(self.n);
        self.words.binary_search(&p).is_ok()
    }
}

/// A nested sequence of holes with measured decay and a center
/// classification.
#[derive(Debug, Clone)]
pub struct HoleSequence {
    levels: Vec<HoleLevel>,
    classification: Classification,
    decay_rho: f64,
    center_tail: Option<Word>,
}

impl HoleSequence {
    /// Builds a sequence from explicit per-level cylinder sets (level `i`
    /// of the slice is level `n = i + 1`), measuring each level under the
    /// supplied Gibbs state and validating lengths, disjointness, and
    /// nesting. `center_tail`, when known, names the single limit point.
    pub fn from_levels(
        gibbs: &GibbsState,
        level_words: Vec<Vec<Word>>,
        classification: Classification,
        center_tail: Option<Word>,
    ) -> Result<Self, HoleError> {
        if level_words.is_empty() {
            return Err(HoleError::EmptyLevels);
        }
        let mut levels = Vec::with_capacity(level_words.len());
        for (i, mut words) in level_words.into_iter().enumerate() {
            let n = i + 1;
            for w in &words {
                if w.len() != n {
                    return Err(HoleError::LengthMismatch { level: n, expected: n, got: w.len() });
                }
            }
            words.sort();
            if words.windows(2).any(|p| p[0] == p[1]) {
                return Err(HoleError::DuplicateWord { level: n });
            }
            if i > 0 {
                let prev: &HoleLevel = &levels[i - 1];
                for w in &words {
                    if !prev.contains_prefix_of(w) {
                        return Err(HoleError::NotNested { level: n });
                    }
                }
            }
            let mut mu = 0.0;
            for w in &words {
                mu += gibbs.cylinder_measure(w)?;
            }
            levels.push(HoleLevel { n, words, mu });
        }
        let decay_rho = measured_rho(&levels);
        Ok(Self { levels, classification, decay_rho, center_tail })
    }

    /// Single-cylinder holes `[z|_n]` around a symbolic center given by a
    /// finite tail, classified from the tail's period structure.
    pub fn single_cylinder(
        gibbs: &GibbsState,
        tail: &Word,
        n_max: usize,
    ) -> Result<Self, HoleError> {
        if tail.len() < n_max || n_max == 0 {
            return Err(HoleError::TailTooShort { needed: n_max.max(1), got: tail.len() });
        }
        let classification = classify_tail(tail);
        let levels = (1..=n_max).map(|n| alloc::vec![tail.prefix(n)]).collect();
        Self::from_levels(gibbs, levels, classification, Some(tail.clone()))
    }

    /// Single-cylinder holes around the periodic point that repeats `xi`.
    /// The cycle must be able to follow itself; `xi` is reduced to its
    /// primitive root first.
    pub fn periodic_center(
        gibbs: &GibbsState,
        xi: &Word,
        n_max: usize,
    ) -> Result<Self, HoleError> {
        if xi.is_empty() || n_max == 0 {
            return Err(HoleError::TailTooShort { needed: 1, got: 0 });
        }
        let shift = gibbs.potential().subshift();
        let reps = n_max / xi.len() + 2;
        let full = shift.power(xi, reps).map_err(|_| HoleError::CycleInadmissible)?;
        let p = minimal_period(&full).unwrap_or(xi.len());
        let primitive = full.prefix(p);
        let tail = full.prefix(n_max.max(p));
        let classification =
            Classification::UniquelyPeriodic { xi: primitive, period: p };
        let levels = (1..=n_max).map(|n| alloc::vec![tail.prefix(n)]).collect();
        Self::from_levels(gibbs, levels, classification, Some(tail))
    }

    /// The stored levels, in order `n = 1, 2, …`.
    pub fn levels(&self) -> &[HoleLevel] {
        &self.levels
    }

    /// The level with index `n`, if stored.
    pub fn level(&self, n: usize) -> Option<&HoleLevel> {
        self.levels.get(n.checked_sub(1)?)
    }

    /// Deepest stored level.
    pub fn n_max(&self) -> usize {
        self.levels.len()
    }

    /// Center classification.
    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    /// Measured decay base: the smallest `ρ` with `μ(Uₙ) ≤ ρⁿ` on every
    /// stored level.
    pub fn decay_rho(&self) -> f64 {
        self.decay_rho
    }

    /// The symbolic tail of the limit point, when the sequence shrinks to
    /// a single known point.
    pub fn center_tail(&self) -> Option<&Word> {
        self.center_tail.as_ref()
    }

    /// Whether every level is one cylinder.
    pub fn is_single_cylinder(&self) -> bool {
        self.levels.iter().all(|l| l.words.len() == 1)
    }

    /// Default cylinder-count scale: half the measured decay rate.
    pub fn suggested_kappa(&self) -> f64 {
        0.5 * -libm::log(self.decay_rho.max(1e-300))
    }

    /// Checks the usability hypotheses on the stored data and reports each
    /// with its measured constants.
    pub fn check_conditions(&self, gibbs: &GibbsState) -> Result<HypothesisReport, HoleError> {
        let mut report = HypothesisReport {
            cylinders_valid: ConditionStatus::Pass,
            nested: ConditionStatus::Pass,
            measure_decay: ConditionStatus::Pass,
            measured_rho: self.decay_rho,
            finite_limit_set: if self.center_tail.is_some() {
                ConditionStatus::Pass
            } else {
                ConditionStatus::NotApplicable
            },
            limit_set_alignment: ConditionStatus::NotApplicable,
            potential_oscillation: 0.0,
            overlap_freedom: ConditionStatus::NotApplicable,
            overlap_witnesses: Vec::new(),
        };
        let shift = gibbs.potential().subshift();
        for (i, level) in self.levels.iter().enumerate() {
            let n = i + 1;
            let valid = level.n == n
                && level.words.iter().all(|w| w.len() == n && shift.is_admissible(w.letters()))
                && level.words.windows(2).all(|p| p[0] < p[1]);
            if !valid {
                report.cylinders_valid = ConditionStatus::Fail;
            }
            if i > 0 {
                let prev = &self.levels[i - 1];
                if !level.words.iter().all(|w| prev.contains_prefix_of(w)) {
                    report.nested = ConditionStatus::Fail;
                }
            }
        }
        if !(self.decay_rho < 1.0) {
            report.measure_decay = ConditionStatus::Fail;
        }
        match &self.classification {
            Classification::UniquelyPeriodic { xi, period } => {
                report.limit_set_alignment = self.check_periodic_alignment(gibbs, xi, &mut report)?;
                self.check_overlaps(*period, &mut report);
            }
            Classification::NonPseudoPeriodic { .. } => {
                report.limit_set_alignment = ConditionStatus::Pass;
                self.check_overlaps(0, &mut report);
            }
            Classification::Unclassified => {}
        }
        Ok(report)
    }

    /// Periodic-center coherence: prefixing hole words by the cycle stays
    /// inside the hole, and the potential oscillates to zero over the
    /// shrinking levels.
    fn check_periodic_alignment(
        &self,
        gibbs: &GibbsState,
        xi: &Word,
        report: &mut HypothesisReport,
    ) -> Result<ConditionStatus, HoleError> {
        let shift = gibbs.potential().subshift();
        let mut status = ConditionStatus::Pass;
        for level in &self.levels {
            for w in &level.words {
                match shift.concat(xi, w) {
                    Ok(extended) => {
                        if !level.contains_prefix_of(&extended) {
                            status = ConditionStatus::Fail;
                        }
                    }
                    // An inadmissible junction means the prefixed cylinder
                    // is empty, which is inside the hole vacuously.
                    Err(_) => {}
                }
            }
        }
        let m = gibbs.potential().depth();
        let deepest = self.levels.last().expect("validated nonempty");
        if deepest.n >= m {
            let p = xi.len();
            let reps = m / p + 2;
            let xi_inf = shift.power(xi, reps).map_err(|_| HoleError::CycleInadmissible)?;
            let phi_xi = gibbs.potential().value(&xi_inf.prefix(m))?;
            let mut osc = 0.0f64;
            for w in &deepest.words {
                let v = gibbs.potential().value(&w.prefix(m))?;
                osc = osc.max((v - phi_xi).abs());
            }
            report.potential_oscillation = osc;
            if osc > 1e-12 {
                status = ConditionStatus::Fail;
            }
        }
        Ok(status)
    }

    /// Shift-overlap audit at the deepest level: an offset `l` is a witness
    /// when shifting some hole word by `l` lands it back inside the hole.
    /// Aperiodic centers must show none with real evidence (window at least
    /// as long as the offset); periodic centers only the period-aligned
    /// ones, with at least one full period of window.
    fn check_overlaps(&self, period: usize, report: &mut HypothesisReport) {
        let deepest = self.levels.last().expect("validated nonempty");
        let n = deepest.n;
        let mut witnesses = Vec::new();
        for l in 1..n {
            let mut found = false;
            'outer: for w in &deepest.words {
                let shifted = &w.letters()[l..];
                for v in &deepest.words {
                    if v.letters()[..n - l] == *shifted {
                        found = true;
                        break 'outer;
                    }
                }
            }
            if found {
                witnesses.push(l);
            }
        }
        // Witnesses whose agreement window is shorter than one offset
        // (aperiodic) or one period (periodic) cannot be distinguished
        // from chance agreement and are not counted against the sequence.
        let ok = if period == 0 {
            witnesses.iter().all(|&l| n - l < l)
        } else {
            witnesses.iter().all(|&l| n - l < period || l % period == 0)
        };
        report.overlap_witnesses = witnesses;
        report.overlap_freedom =
            if ok { ConditionStatus::Pass } else { ConditionStatus::Fail };
    }

    /// Largest measure growth of the holes across a grid of geometric
    /// exponents: the uniform decay base `sup` over the grid of the
    /// per-state measured `ρ`.
    pub fn uniform_decay_over_family(
        &self,
        gdms: &Gdms,
        t_grid: &[f64],
    ) -> Result<f64, HoleError> {
        let mut worst = 0.0f64;
        for &t in t_grid {
            let state = gdms.gibbs_state(t, 1e-13)?;
            let mut levels = Vec::with_capacity(self.levels.len());
            for level in &self.levels {
                let mut mu = 0.0;
                for w in &level.words {
                    mu += state.cylinder_measure(w)?;
                }
                levels.push(HoleLevel { n: level.n, words: Vec::new(), mu });
            }
            worst = worst.max(measured_rho(&levels));
        }
        Ok(worst)
    }
}

fn measured_rho(levels: &[HoleLevel]) -> f64 {
    levels
        .iter()
        .map(|l| libm::pow(l.mu.max(0.0), 1.0 / l.n as f64))
        .fold(0.0f64, f64::max)
}

/// Per-hypothesis outcome of a hole-sequence audit, with the measured
/// constants behind each verdict.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    /// Levels are disjoint unions of admissible cylinders of their length.
    pub cylinders_valid: ConditionStatus,
    /// Each level sits inside the previous one.
    pub nested: ConditionStatus,
    /// Measures decay geometrically with base below one.
    pub measure_decay: ConditionStatus,
    /// The measured decay base.
    pub measured_rho: f64,
    /// The intersection of the holes is a (known) finite set.
    pub finite_limit_set: ConditionStatus,
    /// Aperiodic centers avoid their own forward orbit; periodic centers
    /// absorb cycle prefixing and flatten the potential.
    pub limit_set_alignment: ConditionStatus,
    /// Largest potential deviation from the periodic center at the deepest
    /// level (periodic case only).
    pub potential_oscillation: f64,
    /// Shift-overlap structure consistent with the classification.
    pub overlap_freedom: ConditionStatus,
    /// Offsets at which shifted hole words land back in the hole.
    pub overlap_witnesses: Vec<usize>,
}

impl HypothesisReport {
    /// Whether every decidable hypothesis passed.
    pub fn all_pass(&self) -> bool {
        [
            self.cylinders_valid,
            self.nested,
            self.measure_decay,
            self.finite_limit_set,
            self.limit_set_alignment,
            self.overlap_freedom,
        ]
        .iter()
        .all(|s| *s != ConditionStatus::Fail)
    }
}

/// Minimal `l ≥ 1` with `w[i] = w[i+l]` wherever both sides exist, or
/// `None` for words of length ≤ 1.
fn minimal_period(w: &Word) -> Option<usize> {
    let letters = w.letters();
    let n = letters.len();
    (1..n).find(|&l| (0..n - l).all(|i| letters[i] == letters[i + l]))
}

/// Classifies a symbolic tail: a period observed at least three times is
/// believed, absence of any period up to a third of the tail is certified,
/// anything else is left open.
pub fn classify_tail(tail: &Word) -> Classification {
    let n = tail.len();
    let cap = n / 3;
    if cap == 0 {
        return Classification::Unclassified;
    }
    match minimal_period(tail) {
        Some(p) if p <= cap => {
            Classification::UniquelyPeriodic { xi: tail.prefix(p), period: p }
        }
        _ => Classification::NonPseudoPeriodic { checked_up_to: cap },
    }
}

/// Classifies a geometric point of a system with explicit edge maps by
/// tracking its branch itineraries and geometrically verifying any periodic
/// candidate: the composed contraction must fix the point within 1e-12.
///
/// A candidate period is believed only when the itinerary shows at least
/// two full repetitions; with less evidence a numerically fixing word
/// cannot be told apart from a deep cylinder neighbour (every point sits
/// within the cylinder diameter of some periodic point), so such points
/// come back unclassified rather than wrongly periodic.
pub fn classify_center(g: &Gdms, z: f64, max_check: usize) -> Classification {
    let Some(maps) = g.maps() else {
        return Classification::Unclassified;
    };
    if max_check == 0 {
        return Classification::Unclassified;
    }
    let shift = g.subshift();
    let domain = g.domain();
    let images: Vec<Interval> = maps.iter().map(|m| m.image(&domain)).collect();
    // Track every consistent branch itinerary; boundary points carry two.
    let mut paths: Vec<(f64, Vec<crate::Letter>)> = alloc::vec![(z, Vec::new())];
    for _ in 0..max_check {
        let mut next = Vec::new();
        for (x, path) in &paths {
            if path.len() == max_check {
                next.push((*x, path.clone()));
                continue;
            }
            for e in shift.letters() {
                let admissible = match path.last() {
                    Some(&prev) => shift.admits(prev, e),
                    None => true,
                };
                let iv = &images[e.0 as usize];
                if admissible && iv.lo() - POINT_TOL <= *x && *x <= iv.hi() + POINT_TOL {
                    let m = &maps[e.0 as usize];
                    let pre = (*x - m.offset()) / m.slope();
                    let mut extended = path.clone();
                    extended.push(e);
                    next.push((pre, extended));
                }
            }
        }
        if next.is_empty() {
            // The point leaves every branch: nothing can fix it.
            return Classification::NonPseudoPeriodic { checked_up_to: max_check };
        }
        if next.len() > 8 {
            return Classification::Unclassified;
        }
        paths = next;
    }
    let mut primitives: Vec<Word> = Vec::new();
    let mut ambiguous = false;
    for (_, path) in &paths {
        if path.len() < max_check {
            continue;
        }
        for q in 1..=max_check {
            let periodic = (0..path.len() - q).all(|i| path[i] == path[i + q]);
            if !periodic {
                continue;
            }
            let candidate = Word::raw(path[..q].to_vec());
            if fixes_point(maps, &candidate, z) {
                if max_check - q >= q {
                    if !primitives.contains(&candidate) {
                        primitives.push(candidate);
                    }
                } else {
                    ambiguous = true;
                }
                break;
            }
        }
    }
    if ambiguous {
        return Classification::Unclassified;
    }
    match primitives.len() {
        0 => Classification::NonPseudoPeriodic { checked_up_to: max_check },
        1 => {
            let xi = primitives.remove(0);
            let period = xi.len();
            Classification::UniquelyPeriodic { xi, period }
        }
        _ => Classification::Unclassified,
    }
}

fn fixes_point(maps: &[crate::gdms::AffineMap], w: &Word, z: f64) -> bool {
    let mut x = z;
    for &letter in w.letters().iter().rev() {
        x = maps[letter.0 as usize].apply(x);
    }
    (x - z).abs() <= POINT_TOL
}

/// A metric ball squeezed between unions of equal-length cylinders.
///
/// The cylinder length is the measure-matched count `N`: the least integer
/// whose scale window `[e^{-κN}, e^{κ(1-N)}]` provably contains the ball
/// measure, certified against a bracket of the measure computed from
/// cylinder covers at a deeper working resolution.
#[derive(Debug, Clone)]
pub struct BallSandwich {
    center: f64,
    radius: f64,
    kappa: f64,
    n_kappa: usize,
    inner: Vec<Word>,
    outer: Vec<Word>,
    mass_lower: f64,
    mass_upper: f64,
    resolution_depth: usize,
}

impl BallSandwich {
    /// Builds the sandwich, deepening the working resolution until the
    /// count certificate holds (or the word budget runs out).
    pub fn build(
        g: &Gdms,
        gibbs: &GibbsState,
        z: f64,
        r: f64,
        kappa: f64,
    ) -> Result<Self, HoleError> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(HoleError::BadKappa { kappa });
        }
        let limit = 2.0 * g.domain().len();
        if !(r > 0.0) || r > limit {
            return Err(HoleError::RadiusOutOfRange { r, limit });
        }
        let mut depth = 8usize;
        let mut last_err = HoleError::ResolutionTooCoarse { depth, suggested: depth * 2 };
        for _ in 0..6 {
            match Self::build_with_depth(g, gibbs, z, r, kappa, depth) {
                Ok(s) => {
                    // Re-center the working depth on the measured count and
                    // accept once the depth is at least three counts deep.
                    let target = (3 * s.n_kappa).max(8);
                    if depth >= target {
                        return Ok(s);
                    }
                    depth = target;
                }
                Err(HoleError::ResolutionTooCoarse { suggested, .. }) => {
                    last_err = HoleError::ResolutionTooCoarse { depth, suggested };
                    depth = suggested;
                }
                Err(e) => return Err(e),
            }
        }
        Err(last_err)
    }

    /// Builds the sandwich at one fixed working resolution.
    pub fn build_with_depth(
        g: &Gdms,
        gibbs: &GibbsState,
        z: f64,
        r: f64,
        kappa: f64,
        depth: usize,
    ) -> Result<Self, HoleError> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(HoleError::BadKappa { kappa });
        }
        let shift = gibbs.potential().subshift();
        let index = shift.cylinder_index(depth)?;
        if index.len() > BALL_WORD_BUDGET {
            return Err(HoleError::Budget { words: index.len(), budget: BALL_WORD_BUDGET });
        }
        let slack = POINT_TOL * (1.0 + g.domain().len());
        let mut lower = 0.0f64;
        let mut boundary = 0.0f64;
        for w in index.words() {
            let iv = g.project(&w)?;
            let meets = iv.lo() < z + r - slack && iv.hi() > z - r + slack;
            if !meets {
                continue;
            }
            let inside = z - r - slack <= iv.lo() && iv.hi() <= z + r + slack;
            let mass = gibbs.cylinder_measure(&w)?;
            if inside {
                lower += mass;
            } else {
                boundary += mass;
            }
        }
        let upper = lower + boundary;
        if !(lower > 0.0) {
            return Err(HoleError::ResolutionTooCoarse { depth, suggested: depth * 2 });
        }
        let mid = 0.5 * (lower + upper);
        let base = libm::ceil(-libm::log(mid) / kappa);
        let mut n_kappa = None;
        for cand in [base - 1.0, base, base + 1.0] {
            if cand < 1.0 {
                continue;
            }
            let lo_ok = libm::exp(-kappa * cand) <= lower;
            let hi_ok = upper <= libm::exp(kappa * (1.0 - cand));
            if lo_ok && hi_ok {
                n_kappa = Some(cand as usize);
                break;
            }
        }
        let Some(n_kappa) = n_kappa else {
            return Err(HoleError::ResolutionTooCoarse { depth, suggested: depth * 2 });
        };
        if n_kappa > depth {
            return Err(HoleError::ResolutionTooCoarse { depth, suggested: 3 * n_kappa });
        }
        let level_index = shift.cylinder_index(n_kappa)?;
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        for w in level_index.words() {
            let iv = g.project(&w)?;
            let meets = iv.lo() < z + r - slack && iv.hi() > z - r + slack;
            if !meets {
                continue;
            }
            outer.push(w.clone());
            if z - r - slack <= iv.lo() && iv.hi() <= z + r + slack {
                inner.push(w);
            }
        }
        Ok(Self {
            center: z,
            radius: r,
            kappa,
            n_kappa,
            inner,
            outer,
            mass_lower: lower,
            mass_upper: upper,
            resolution_depth: depth,
        })
    }

    /// Ball center.
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Ball radius.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Cylinder-count scale.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Measure-matched cylinder length `N`.
    pub fn cylinder_count(&self) -> usize {
        self.n_kappa
    }

    /// Length-`N` cylinders entirely inside the ball.
    pub fn inner(&self) -> &[Word] {
        &self.inner
    }

    /// Length-`N` cylinders meeting the ball.
    pub fn outer(&self) -> &[Word] {
        &self.outer
    }

    /// Certified bracket of the ball measure.
    pub fn mass_bracket(&self) -> (f64, f64) {
        (self.mass_lower, self.mass_upper)
    }

    /// Midpoint estimate of the ball measure.
    pub fn mass(&self) -> f64 {
        0.5 * (self.mass_lower + self.mass_upper)
    }

    /// Working depth the bracket was computed at.
    pub fn resolution_depth(&self) -> usize {
        self.resolution_depth
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::Subshift;
    use crate::thermo::Potential;
    use alloc::sync::Arc;
    use alloc::vec;

    const LOG2: f64 = core::f64::consts::LN_2;

    fn doubling_state() -> GibbsState {
        let shift = Arc::new(Subshift::full(2).unwrap());
        let p = Potential::constant(shift, -LOG2).unwrap();
        GibbsState::compute(&p, 1e-14).unwrap()
    }

    fn bernoulli_state(p0: f64) -> GibbsState {
        let shift = Arc::new(Subshift::full(2).unwrap());
        let p =
            Potential::new(shift, 1, vec![libm::log(p0), libm::log(1.0 - p0)]).unwrap();
        GibbsState::compute(&p, 1e-14).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_cylinder_levels_and_measures() {
        let g = doubling_state();
        let shift = g.potential().subshift().clone();
        let tail = shift.word(&[0; 8]).unwrap();
        let h = HoleSequence::single_cylinder(&g, &tail, 3).unwrap();
        assert_eq!(h.n_max(), 3);
        let l3 = h.level(3).unwrap();
        assert_eq!(l3.words().len(), 1);
        assert_eq!(l3.words()[0], shift.word(&[0, 0, 0]).unwrap());
        assert!(close(l3.mu(), 0.125, 1e-12));
        assert!(close(h.decay_rho(), 0.5, 1e-12));
        assert!(h.is_single_cylinder());
    }

    #[test]
    fn alternating_center_level_four() {
        let g = doubling_state();
        let shift = g.potential().subshift().clone();
        let tail = shift.word(&[0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        let h = HoleSequence::single_cylinder(&g, &tail, 4).unwrap();
        let l4 = h.level(4).unwrap();
        assert_eq!(l4.words()[0], shift.word(&[0, 1, 0, 1]).unwrap());
        assert!(close(l4.mu(), 1.0 / 16.0, 1e-12));
        match h.classification() {
            Classification::UniquelyPeriodic { xi, period } => {
                assert_eq!(*period, 2);
                assert_eq!(*xi, shift.word(&[0, 1]).unwrap());
            }
            other => panic!("expected periodic, got {other:?}"),
        }
    }

    #[test]
    fn tail_classification_rules() {
        let shift = Subshift::full(2).unwrap();
        let periodic = shift.word(&[0, 0, 0, 0, 0, 0]).unwrap();
        assert!(matches!(
            classify_tail(&periodic),
            Classification::UniquelyPeriodic { period: 1, .. }
        ));
        let aperiodic = shift.word(&[0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1]).unwrap();
        assert!(matches!(
            classify_tail(&aperiodic),
            Classification::NonPseudoPeriodic { checked_up_to: 4 }
        ));
        let short = shift.word(&[0, 1]).unwrap();
        assert!(matches!(classify_tail(&short), Classification::Unclassified));
    }

    #[test]
    fn geometric_classification_of_points() {
        let g = Gdms::doubling_halves();
        match classify_center(&g, 0.0, 20) {
            Classification::UniquelyPeriodic { xi, period } => {
                assert_eq!(period, 1);
                assert_eq!(xi.letters()[0].0, 0);
            }
            other => panic!("origin should be periodic, got {other:?}"),
        }
        match classify_center(&g, 1.0 / 3.0, 20) {
            Classification::UniquelyPeriodic { xi, period } => {
                assert_eq!(period, 2);
                let raw: Vec<u32> = xi.letters().iter().map(|l| l.0).collect();
                assert_eq!(raw, vec![0, 1]);
            }
            other => panic!("one third should have a two-cycle, got {other:?}"),
        }
        let z = libm::sqrt(2.0) - 1.0;
        assert!(matches!(
            classify_center(&g, z, 30),
            Classification::NonPseudoPeriodic { checked_up_to: 30 }
        ));
        // A boundary point with two branch codings, neither periodic.
        assert!(matches!(
            classify_center(&g, 0.5, 20),
            Classification::NonPseudoPeriodic { .. }
        ));
    }

    #[test]
    fn ball_sandwich_on_doubling() {
        let g = Gdms::doubling_halves();
        let state = doubling_state();
        let s = BallSandwich::build(&g, &state, 0.5, 0.25, 0.5).unwrap();
        let (lo, hi) = s.mass_bracket();
        assert!(close(lo, 0.5, 1e-12) && close(hi, 0.5, 1e-12));
        // Count window: e^{-κN} ≤ 1/2 ≤ e^{κ(1-N)} forces N = 2 at κ = 1/2.
        assert_eq!(s.cylinder_count(), 2);
        let shift = state.potential().subshift().clone();
        let expect =
            vec![shift.word(&[0, 1]).unwrap(), shift.word(&[1, 0]).unwrap()];
        assert_eq!(s.inner(), &expect[..]);
        assert_eq!(s.outer(), &expect[..]);
    }

    #[test]
    fn ball_sandwich_on_cantor_dust() {
        let g = Gdms::cantor_thirds();
        let b = g.bowen_parameter(1e-12).unwrap().value;
        let state = g.gibbs_state(b, 1e-14).unwrap();
        let s = BallSandwich::build(&g, &state, 0.0, 1.0 / 3.0, 0.4).unwrap();
        let (lo, hi) = s.mass_bracket();
        assert!(close(lo, 0.5, 1e-9) && close(hi, 0.5, 1e-9));
        // Inner cylinders sit inside the ball, and inner ⊆ outer.
        for w in s.inner() {
            let iv = g.project(w).unwrap();
            assert!(iv.lo() >= -1.0 / 3.0 - 1e-9 && iv.hi() <= 1.0 / 3.0 + 1e-9);
            assert!(s.outer().contains(w));
        }
    }

    #[test]
    fn sandwich_membership_is_geometrically_correct() {
        let g = Gdms::half_quarter();
        let b = g.bowen_parameter(1e-12).unwrap().value;
        let state = g.gibbs_state(b, 1e-14).unwrap();
        for (z, r) in [(0.3, 0.2), (0.5, 0.125), (0.85, 0.1)] {
            let s = match BallSandwich::build(&g, &state, z, r, 0.4) {
                Ok(s) => s,
                Err(HoleError::ResolutionTooCoarse { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let n = s.cylinder_count();
            let index = state.potential().subshift().cylinder_index(n).unwrap();
            for w in index.words() {
                let iv = g.project(&w).unwrap();
                let meets = iv.lo() < z + r && iv.hi() > z - r;
                let inside = z - r <= iv.lo() && iv.hi() <= z + r;
                let in_outer = s.outer().contains(&w);
                let in_inner = s.inner().contains(&w);
                if inside {
                    assert!(in_inner, "missing inner cylinder {w}");
                }
                if in_inner {
                    assert!(in_outer);
                }
                if in_outer {
                    assert!(meets, "outer cylinder {w} misses the ball");
                }
            }
        }
    }

    #[test]
    fn hypothesis_report_for_periodic_center() {
        let state = doubling_state();
        let shift = state.potential().subshift().clone();
        let xi = shift.word(&[0]).unwrap();
        let h = HoleSequence::periodic_center(&state, &xi, 6).unwrap();
        let report = h.check_conditions(&state).unwrap();
        assert!(report.all_pass());
        assert!(close(report.measured_rho, 0.5, 1e-12));
        assert_eq!(report.limit_set_alignment, ConditionStatus::Pass);
        assert_eq!(report.overlap_freedom, ConditionStatus::Pass);
        assert!(close(report.potential_oscillation, 0.0, 1e-15));
        // Every shift of 0^6 lands back inside the hole.
        assert_eq!(report.overlap_witnesses, vec![1, 2, 3, 4, 5]);

        let state = bernoulli_state(0.3);
        let shift = state.potential().subshift().clone();
        let tail = shift.word(&[0; 8]).unwrap();
        let h = HoleSequence::single_cylinder(&state, &tail, 5).unwrap();
        let report = h.check_conditions(&state).unwrap();
        assert!(close(report.measured_rho, 0.3, 1e-12));
        assert!(report.all_pass());
    }

    #[test]
    fn hypothesis_report_for_aperiodic_center() {
        let state = doubling_state();
        let shift = state.potential().subshift().clone();
        let digits: Vec<u32> = binary_digits(libm::sqrt(2.0) - 1.0, 12);
        let tail = shift.word(&digits).unwrap();
        let h = HoleSequence::single_cylinder(&state, &tail, 12).unwrap();
        assert!(matches!(
            h.classification(),
            Classification::NonPseudoPeriodic { checked_up_to: 4 }
        ));
        let report = h.check_conditions(&state).unwrap();
        assert_eq!(report.limit_set_alignment, ConditionStatus::Pass);
        assert_eq!(report.overlap_freedom, ConditionStatus::Pass);
        // No witness with an agreement window reaching the offset length.
        assert!(report.overlap_witnesses.iter().all(|&l| 12 - l < l));
    }

    fn binary_digits(mut x: f64, count: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            x *= 2.0;
            if x >= 1.0 {
                out.push(1);
                x -= 1.0;
            } else {
                out.push(0);
            }
        }
        out
    }

    #[test]
    fn golden_mean_rejects_self_following_cycle() {
        let shift = Arc::new(
            Subshift::new(vec![vec![false, true], vec![true, true]]).unwrap(),
        );
        let p = Potential::constant(shift.clone(), 0.0).unwrap();
        let state = GibbsState::compute(&p, 1e-13).unwrap();
        let xi = shift.word(&[0]).unwrap();
        let err = HoleSequence::periodic_center(&state, &xi, 4).unwrap_err();
        assert!(matches!(err, HoleError::CycleInadmissible));
    }

    #[test]
    fn construction_errors() {
        let state = doubling_state();
        let shift = state.potential().subshift().clone();
        let tail = shift.word(&[0, 1]).unwrap();
        assert!(matches!(
            HoleSequence::single_cylinder(&state, &tail, 5),
            Err(HoleError::TailTooShort { needed: 5, got: 2 })
        ));
        let g = Gdms::doubling_halves();
        assert!(matches!(
            BallSandwich::build(&g, &state, 0.5, 0.25, 0.0),
            Err(HoleError::BadKappa { .. })
        ));
        assert!(matches!(
            BallSandwich::build(&g, &state, 0.5, 5.0, 0.5),
            Err(HoleError::RadiusOutOfRange { .. })
        ));
        // Levels that fail to nest are rejected.
        let w1 = shift.word(&[0]).unwrap();
        let w2 = shift.word(&[1, 1]).unwrap();
        let err = HoleSequence::from_levels(
            &state,
            vec![vec![w1], vec![w2]],
            Classification::Unclassified,
            None,
        )
        .unwrap_err();
        assert!(matches!(err, HoleError::NotNested { level: 2 }));
    }

    #[test]
    fn uniform_decay_over_exponent_grid() {
        let g = Gdms::cantor_thirds();
        let b = g.bowen_parameter(1e-12).unwrap().value;
        let state = g.gibbs_state(b, 1e-14).unwrap();
        let shift = state.potential().subshift().clone();
        let tail = shift.word(&[0; 6]).unwrap();
        let h = HoleSequence::single_cylinder(&state, &tail, 6).unwrap();
        // Equal branch slopes make every level-n cylinder mass 2^{-n} at any
        // exponent, so the uniform base equals the single-state base.
        let rho = h.uniform_decay_over_family(&g, &[0.5 * b, b, 1.5 * b]).unwrap();
        assert!(rho < 1.0);
        assert!((rho - h.decay_rho()).abs() <= 1e-10);
    }
}
