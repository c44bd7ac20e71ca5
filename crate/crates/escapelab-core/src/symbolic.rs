//! Finite-alphabet subshifts of finite type.
//!
//! A subshift is a finite alphabet `0..k` together with a 0/1 incidence
//! matrix `A`; a word is admissible when every consecutive letter pair
//! `(a, b)` has `A[a][b] = 1`. This module houses the combinatorial layer
//! everything else builds on: admissible word enumeration in lexicographic
//! order, dense cylinder indexing (rank and unrank without materializing the
//! word list), finite-primitivity certificates, higher-block presentations,
//! alphabet restriction, and certified truncations of countable alphabets.
//!
//! Letters are dense indices. Construction prunes letters that admit no
//! successor or no predecessor (iterating until stable) and renumbers the
//! survivors, because truncated alphabets naturally produce such dead
//! letters; the pre-pruning identity of each letter stays available through
//! labels and [`Subshift::original_letter`].

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Errors from subshift construction and word or cylinder operations.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolicError {
    /// The alphabet has no letters.
    EmptyAlphabet,
    /// An incidence row has the wrong length.
    RaggedIncidence {
        /// Row index.
        row: usize,
        /// Supplied length of that row.
        len: usize,
        /// Expected length (the number of rows).
        expected: usize,
    },
    /// Label list length differs from the alphabet size.
    LabelCountMismatch {
        /// Number of labels supplied.
        labels: usize,
        /// Number of letters.
        letters: usize,
    },
    /// Pruning letters without successors or predecessors emptied the alphabet.
    AllLettersDead,
    /// A letter index is outside the alphabet.
    LetterOutOfRange {
        /// The offending index.
        letter: u32,
        /// Current alphabet size.
        alphabet: usize,
    },
    /// Two consecutive letters are not admissible.
    InadmissiblePair {
        /// Position of the left letter in the word being built.
        position: usize,
        /// Left letter.
        a: u32,
        /// Right letter.
        b: u32,
    },
    /// A depth or length parameter must be at least 1.
    InvalidDepth,
    /// A word count overflowed the supported range.
    TooManyWords,
    /// A higher-block state space exceeds the dense-representation cap.
    BlockStateSpaceTooLarge {
        /// Number of states requested.
        states: u64,
        /// Maximum supported by the dense representation.
        cap: u64,
    },
    /// A restriction kept no letters.
    EmptyRestriction,
    /// A truncation certificate kept no letters.
    EmptyTruncation,
    /// A truncation tail mass bound is outside `[0, 1)`.
    InvalidTailMass {
        /// The offending bound.
        bound: f64,
    },
}

impl fmt::Display for SymbolicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyAlphabet => write!(f, "alphabet must have at least one letter"),
            Self::RaggedIncidence { row, len, expected } => write!(
                f,
                "incidence row {row} has length {len}, expected {expected} (matrix must be square)"
            ),
            Self::LabelCountMismatch { labels, letters } => {
                write!(f, "{labels} labels supplied for {letters} letters")
            }
            Self::AllLettersDead => write!(
                f,
                "every letter lacks a successor or predecessor; the subshift is empty"
            ),
            Self::LetterOutOfRange { letter, alphabet } => {
                write!(f, "letter {letter} out of range for alphabet of size {alphabet}")
            }
            Self::InadmissiblePair { position, a, b } => {
                write!(f, "letters {a}{b} at position {position} are not admissible")
            }
            Self::InvalidDepth => write!(f, "depth must be at least 1"),
            Self::TooManyWords => write!(f, "admissible word count exceeds supported range"),
            Self::BlockStateSpaceTooLarge { states, cap } => {
                write!(f, "higher-block presentation needs {states} states, cap is {cap}")
            }
            Self::EmptyRestriction => write!(f, "restriction keeps no letters"),
            Self::EmptyTruncation => write!(f, "truncation certificate keeps no letters"),
            Self::InvalidTailMass { bound } => {
                write!(f, "tail mass bound {bound} is outside [0, 1)")
            }
        }
    }
}

impl core::error::Error for SymbolicError {}

/// A letter: a dense index into the alphabet of a [`Subshift`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u32);

impl Letter {
    pub(crate) fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite word over a subshift alphabet.
///
/// Words handed out by [`Subshift`] methods are admissible: every consecutive
/// letter pair is allowed by the incidence matrix. The lexicographic order on
/// words is the derived `Ord`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    /// The empty word (admissible in every subshift).
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word without admissibility checks; crate-internal paths only
    /// call this where admissibility is already established.
    pub(crate) fn raw(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    /// Number of letters.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Whether the word is empty.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The letters as a slice.
    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// First letter, if any.
    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    /// Last letter, if any.
    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    /// The prefix consisting of the first `k` letters.
    ///
    /// Panics if `k` exceeds the length.
    pub fn prefix(&self, k: usize) -> Word {
        assert!(k <= self.len(), "prefix length {k} exceeds word length {}", self.len());
        Word(self.0[..k].to_vec())
    }

    /// The word with its first letter dropped: the shift map applied once.
    /// The empty word shifts to itself.
    pub fn shift(&self) -> Word {
        if self.0.is_empty() {
            Word::empty()
        } else {
            Word(self.0[1..].to_vec())
        }
    }

    pub(crate) fn push(&mut self, letter: Letter) {
        self.0.push(letter);
    }
}

impl fmt::Display for Word {
    /// Compact rendering: single digits concatenated when every letter is
    /// below 10, dash-separated indices otherwise, `ε` for the empty word.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        if self.0.iter().all(|l| l.0 < 10) {
            for l in &self.0 {
                write!(f, "{}", l.0)?;
            }
            Ok(())
        } else {
            for (i, l) in self.0.iter().enumerate() {
                if i > 0 {
                    write!(f, "-")?;
                }
                write!(f, "{}", l.0)?;
            }
            Ok(())
        }
    }
}

/// Outcome of a finite-primitivity search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Primitivity {
    /// The subshift is finitely primitive: for every letter pair `(i, j)`
    /// some word `ω` in the witness set makes `iωj` admissible. `p` is the
    /// least witness length found with `p ≥ 1`.
    Primitive {
        /// Common length of the witness words.
        p: usize,
        /// Witness set, sorted lexicographically.
        witness: Vec<Word>,
    },
    /// Provably not primitive for any `p`.
    NotPrimitive(ImprimitivityProof),
    /// No witness length up to the search bound, and no impossibility proof;
    /// distinct from a definitive negative.
    Inconclusive {
        /// Largest `p` that was checked.
        checked_up_to: usize,
    },
}

/// Structural obstruction that rules out finite primitivity outright.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImprimitivityProof {
    /// The letter graph is not strongly connected: some ordered pair of
    /// letters is joined by no admissible word of any length.
    NotStronglyConnected,
    /// The letter graph is periodic: every cycle length is a multiple of the
    /// period, so no power of the incidence matrix is entrywise positive.
    Periodic {
        /// The common divisor of all cycle lengths.
        period: usize,
    },
}

/// Certificate that a countable-alphabet model was truncated to a finite
/// letter set with a bounded loss of measure.
///
/// The engine only ever runs on finite alphabets; a countable system enters
/// by keeping finitely many letters and recording an upper bound for the
/// measure of everything thrown away. The letters here refer to the indexing
/// of the original countable model, not to any pruned renumbering.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationCertificate {
    kept_letters: Vec<Letter>,
    tail_mass_bound: f64,
    source: String,
}

impl TruncationCertificate {
    /// Validates and builds a certificate. The kept set must be nonempty and
    /// the tail mass bound must lie in `[0, 1)`.
    pub fn new(
        mut kept_letters: Vec<Letter>,
        tail_mass_bound: f64,
        source: &str,
    ) -> Result<Self, SymbolicError> {
        if kept_letters.is_empty() {
            return Err(SymbolicError::EmptyTruncation);
        }
        if !(tail_mass_bound >= 0.0 && tail_mass_bound < 1.0) {
            return Err(SymbolicError::InvalidTailMass { bound: tail_mass_bound });
        }
        kept_letters.sort_unstable();
        kept_letters.dedup();
        Ok(Self { kept_letters, tail_mass_bound, source: source.to_string() })
    }

    /// The kept letters, sorted ascending.
    pub fn kept_letters(&self) -> &[Letter] {
        &self.kept_letters
    }

    /// Upper bound for the measure of the discarded letters' cylinders.
    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    /// Description of the countable model that was truncated.
    pub fn source(&self) -> &str {
        &self.source
    }
}

/// Dense-incidence cap for [`Subshift::higher_block`].
const HIGHER_BLOCK_STATE_CAP: u64 = 4096;

/// Word-count cap for cylinder indexing; keeps ranks exactly representable
/// and state vectors addressable.
const WORD_COUNT_CAP: u64 = 1 << 52;

/// A subshift of finite type: finite alphabet plus 0/1 incidence matrix.
///
/// `A[a][b] = 1` means letter `b` may follow letter `a`. Instances are
/// immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Subshift {
    k: usize,
    /// Row-major `k × k`; `incidence[a * k + b]` is `A[a][b]`.
    incidence: Vec<bool>,
    /// Sorted successor lists, one per letter.
    successors: Vec<Vec<Letter>>,
    labels: Vec<String>,
    /// Current letter -> index in the matrix supplied at construction.
    original: Vec<u32>,
    /// Supplied indices dropped by dead-letter pruning, ascending.
    pruned: Vec<u32>,
}

impl Subshift {
    /// Builds a subshift from incidence rows, pruning dead letters.
    ///
    /// Letters default to decimal labels matching their supplied index.
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self, SymbolicError> {
        let labels = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::with_labels(rows, labels)
    }

    /// Builds a subshift with explicit letter labels.
    pub fn with_labels(rows: Vec<Vec<bool>>, labels: Vec<String>) -> Result<Self, SymbolicError> {
        let k = rows.len();
        if k == 0 {
            return Err(SymbolicError::EmptyAlphabet);
        }
        if labels.len() != k {
            return Err(SymbolicError::LabelCountMismatch { labels: labels.len(), letters: k });
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(SymbolicError::RaggedIncidence { row, len: r.len(), expected: k });
            }
        }
        let original: Vec<u32> = (0..k as u32).collect();
        Self::build(rows, labels, original)
    }

    /// The full shift on `k` letters: every transition admissible.
    pub fn full(k: usize) -> Result<Self, SymbolicError> {
        Self::new(vec![vec![true; k]; k])
    }

    /// Pruning core: drops letters without successors or predecessors until
    /// stable, renumbers, caches successor lists.
    fn build(
        rows: Vec<Vec<bool>>,
        labels: Vec<String>,
        original: Vec<u32>,
    ) -> Result<Self, SymbolicError> {
        let k0 = rows.len();
        let mut alive = vec![true; k0];
        loop {
            let mut changed = false;
            for i in 0..k0 {
                if !alive[i] {
                    continue;
                }
                let has_succ = (0..k0).any(|j| alive[j] && rows[i][j]);
                let has_pred = (0..k0).any(|j| alive[j] && rows[j][i]);
                if !(has_succ && has_pred) {
                    alive[i] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let kept: Vec<usize> = (0..k0).filter(|&i| alive[i]).collect();
        if kept.is_empty() {
            return Err(SymbolicError::AllLettersDead);
        }
        let k = kept.len();
        let mut incidence = vec![false; k * k];
        for (a, &i) in kept.iter().enumerate() {
            for (b, &j) in kept.iter().enumerate() {
                incidence[a * k + b] = rows[i][j];
            }
        }
        let successors = (0..k)
            .map(|a| {
                (0..k)
                    .filter(|&b| incidence[a * k + b])
                    .map(|b| Letter(b as u32))
                    .collect()
            })
            .collect();
        let pruned = (0..k0).filter(|&i| !alive[i]).map(|i| original[i]).collect();
        Ok(Self {
            k,
            incidence,
            successors,
            labels: kept.iter().map(|&i| labels[i].clone()).collect(),
            original: kept.iter().map(|&i| original[i]).collect(),
            pruned,
        })
    }

    /// Number of letters after pruning.
    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    /// Iterator over the current letters.
    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.k as u32).map(Letter)
    }

    /// Whether letter `b` may follow letter `a`.
    pub fn admits(&self, a: Letter, b: Letter) -> bool {
        self.incidence[a.idx() * self.k + b.idx()]
    }

    /// Sorted list of admissible successors of `a`.
    pub fn successors(&self, a: Letter) -> &[Letter] {
        &self.successors[a.idx()]
    }

    /// Label of a letter.
    pub fn label(&self, l: Letter) -> &str {
        &self.labels[l.idx()]
    }

    /// Index the letter had in the incidence matrix supplied at construction.
    pub fn original_letter(&self, l: Letter) -> u32 {
        self.original[l.idx()]
    }

    /// Supplied indices removed by dead-letter pruning, ascending.
    pub fn pruned_letters(&self) -> &[u32] {
        &self.pruned
    }

    fn check_range(&self, raw: u32) -> Result<Letter, SymbolicError> {
        if (raw as usize) < self.k {
            Ok(Letter(raw))
        } else {
            Err(SymbolicError::LetterOutOfRange { letter: raw, alphabet: self.k })
        }
    }

    /// Whether the letters are in range and every consecutive pair is
    /// admissible.
    pub fn is_admissible(&self, letters: &[Letter]) -> bool {
        letters.iter().all(|l| l.idx() < self.k)
            && letters.windows(2).all(|p| self.admits(p[0], p[1]))
    }

    /// Validates raw letter indices into an admissible [`Word`].
    pub fn word(&self, raw: &[u32]) -> Result<Word, SymbolicError> {
        let mut letters = Vec::with_capacity(raw.len());
        for &r in raw {
            letters.push(self.check_range(r)?);
        }
        for (i, pair) in letters.windows(2).enumerate() {
            if !self.admits(pair[0], pair[1]) {
                return Err(SymbolicError::InadmissiblePair {
                    position: i,
                    a: pair[0].0,
                    b: pair[1].0,
                });
            }
        }
        Ok(Word(letters))
    }

    /// Concatenates two admissible words, checking the junction.
    pub fn concat(&self, a: &Word, b: &Word) -> Result<Word, SymbolicError> {
        match (a.last(), b.first()) {
            (Some(x), Some(y)) if !self.admits(x, y) => Err(SymbolicError::InadmissiblePair {
                position: a.len() - 1,
                a: x.0,
                b: y.0,
            }),
            _ => {
                let mut letters = a.0.clone();
                letters.extend_from_slice(&b.0);
                Ok(Word(letters))
            }
        }
    }

    /// The `n`-fold concatenation `w^n`, checking the wrap junction once.
    pub fn power(&self, w: &Word, n: usize) -> Result<Word, SymbolicError> {
        if n == 0 || w.is_empty() {
            return Ok(Word::empty());
        }
        let (first, last) = (w.first().unwrap(), w.last().unwrap());
        if n > 1 && !self.admits(last, first) {
            return Err(SymbolicError::InadmissiblePair {
                position: w.len() - 1,
                a: last.0,
                b: first.0,
            });
        }
        let mut letters = Vec::with_capacity(w.len() * n);
        for _ in 0..n {
            letters.extend_from_slice(&w.0);
        }
        Ok(Word(letters))
    }

    /// All admissible words of length `n`, lexicographically ordered.
    /// `n = 0` yields exactly the empty word.
    pub fn admissible_words(&self, n: usize) -> Vec<Word> {
        if n == 0 {
            return vec![Word::empty()];
        }
        let mut out = Vec::new();
        let mut current: Vec<Letter> = Vec::with_capacity(n);
        self.enumerate_rec(n, &mut current, &mut out);
        out
    }

    fn enumerate_rec(&self, n: usize, current: &mut Vec<Letter>, out: &mut Vec<Word>) {
        if current.len() == n {
            out.push(Word(current.clone()));
            return;
        }
        let candidates: &[Letter] = match current.last() {
            None => &[],
            Some(&prev) => self.successors(prev),
        };
        if current.is_empty() {
            for l in self.letters() {
                current.push(l);
                self.enumerate_rec(n, current, out);
                current.pop();
            }
        } else {
            for &l in candidates {
                current.push(l);
                self.enumerate_rec(n, current, out);
                current.pop();
            }
        }
    }

    /// Searches for a finite-primitivity witness with word length `p` in
    /// `1..=max_p`.
    ///
    /// A positive answer returns the least such `p` together with a witness
    /// set Λ: for every ordered letter pair `(i, j)` some `ω ∈ Λ` makes
    /// `iωj` admissible. A structural obstruction (letter graph not strongly
    /// connected, or periodic) is a definitive negative for every `p` and is
    /// reported as such; running out of search budget is reported as
    /// inconclusive instead.
    pub fn is_finitely_primitive(&self, max_p: usize) -> Primitivity {
        if max_p == 0 {
            return Primitivity::Inconclusive { checked_up_to: 0 };
        }
        if !self.strongly_connected() {
            return Primitivity::NotPrimitive(ImprimitivityProof::NotStronglyConnected);
        }
        let period = self.graph_period();
        if period > 1 {
            return Primitivity::NotPrimitive(ImprimitivityProof::Periodic { period });
        }
        // Strongly connected and aperiodic: some power of A is entrywise
        // positive; find the least exponent within budget.
        let mut power = BitMatrix::from_incidence(self);
        for p in 1..=max_p {
            power = power.mul(&BitMatrix::from_incidence(self));
            // power now holds A^{p+1}; all-positive means every pair (i, j)
            // is joined by a word of length exactly p.
            if power.all_set() {
                let witness = self.primitivity_witness(p);
                return Primitivity::Primitive { p, witness };
            }
        }
        Primitivity::Inconclusive { checked_up_to: max_p }
    }

    /// Greedy witness set for length `p`, assuming `A^{p+1}` is positive.
    ///
    /// Coverage of a word depends only on its first and last letters, so
    /// candidates are pairs `(f, l)` joined by a length-p word; the greedy
    /// step picks the pair covering the most uncovered letter pairs, ties
    /// broken by least `(f, l)`; each chosen pair contributes its
    /// lexicographically least word.
    fn primitivity_witness(&self, p: usize) -> Vec<Word> {
        let k = self.k;
        // reach[f][l]: a length-p word starting at f and ending at l exists,
        // i.e. a path with p-1 edges.
        let mut reach = BitMatrix::identity(k);
        for _ in 0..p.saturating_sub(1) {
            reach = reach.mul(&BitMatrix::from_incidence(self));
        }
        let pre: Vec<Vec<usize>> = (0..k)
            .map(|f| (0..k).filter(|&i| self.incidence[i * k + f]).collect())
            .collect();
        let post: Vec<Vec<usize>> = (0..k)
            .map(|l| (0..k).filter(|&j| self.incidence[l * k + j]).collect())
            .collect();
        let mut uncovered = vec![true; k * k];
        let mut remaining = k * k;
        let mut chosen: Vec<(usize, usize)> = Vec::new();
        while remaining > 0 {
            let mut best: Option<(usize, (usize, usize))> = None;
            for f in 0..k {
                for l in 0..k {
                    if !reach.get(f, l) {
                        continue;
                    }
                    let gain = pre[f]
                        .iter()
                        .map(|&i| post[l].iter().filter(|&&j| uncovered[i * k + j]).count())
                        .sum::<usize>();
                    if gain > 0 && best.map_or(true, |(g, _)| gain > g) {
                        best = Some((gain, (f, l)));
                    }
                }
            }
            let (_, (f, l)) = best.expect("positive power guarantees coverage");
            for &i in &pre[f] {
                for &j in &post[l] {
                    if uncovered[i * k + j] {
                        uncovered[i * k + j] = false;
                        remaining -= 1;
                    }
                }
            }
            chosen.push((f, l));
        }
        let mut witness: Vec<Word> =
            chosen.iter().map(|&(f, l)| self.least_word_between(f, l, p)).collect();
        witness.sort();
        witness
    }

    /// Lexicographically least admissible word of length `p` starting at `f`
    /// and ending at `l`. Requires such a word to exist.
    fn least_word_between(&self, f: usize, l: usize, p: usize) -> Word {
        // ok[t] = letters that reach l in exactly t steps.
        let k = self.k;
        let mut ok: Vec<Vec<bool>> = Vec::with_capacity(p);
        let mut base = vec![false; k];
        base[l] = true;
        ok.push(base);
        for t in 1..p {
            let prev = &ok[t - 1];
            let step =
                (0..k).map(|c| (0..k).any(|d| self.incidence[c * k + d] && prev[d])).collect();
            ok.push(step);
        }
        let mut letters = Vec::with_capacity(p);
        let mut current = f;
        debug_assert!(ok[p - 1][f], "no length-{p} word joins {f} to {l}");
        letters.push(Letter(f as u32));
        for i in 1..p {
            let need = p - 1 - i;
            let next = (0..k)
                .find(|&c| self.incidence[current * k + c] && ok[need][c])
                .expect("reachability table admits a continuation");
            letters.push(Letter(next as u32));
            current = next;
        }
        Word(letters)
    }

    fn strongly_connected(&self) -> bool {
        let forward = self.reachable_from(0, false);
        let backward = self.reachable_from(0, true);
        forward.iter().all(|&b| b) && backward.iter().all(|&b| b)
    }

    fn reachable_from(&self, start: usize, reversed: bool) -> Vec<bool> {
        let k = self.k;
        let mut seen = vec![false; k];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..k {
                let edge = if reversed { self.incidence[v * k + u] } else { self.incidence[u * k + v] };
                if edge && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Period of the (strongly connected) letter graph: the gcd of all cycle
    /// lengths, computed from breadth-first levels.
    fn graph_period(&self) -> usize {
        let k = self.k;
        let mut dist = vec![usize::MAX; k];
        let mut queue = alloc::collections::VecDeque::new();
        dist[0] = 0;
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            for &Letter(v) in self.successors(Letter(u as u32)) {
                let v = v as usize;
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g: i64 = 0;
        for u in 0..k {
            for &Letter(v) in self.successors(Letter(u as u32)) {
                let diff = dist[u] as i64 + 1 - dist[v as usize] as i64;
                g = gcd(g, diff.abs());
            }
        }
        g.max(1) as usize
    }

    /// Dense lexicographic indexing of the admissible length-`m` words.
    pub fn cylinder_index(&self, m: usize) -> Result<CylinderIndex<'_>, SymbolicError> {
        CylinderIndex::new(self, m)
    }

    /// Restriction to a subset of letters, followed by dead-letter pruning.
    ///
    /// Labels and original indices carry through, so a letter keeps its
    /// identity across nested restrictions.
    pub fn restrict(&self, keep: &[Letter]) -> Result<Subshift, SymbolicError> {
        if keep.is_empty() {
            return Err(SymbolicError::EmptyRestriction);
        }
        let mut kept: Vec<Letter> = Vec::with_capacity(keep.len());
        for &l in keep {
            self.check_range(l.0)?;
            kept.push(l);
        }
        kept.sort_unstable();
        kept.dedup();
        let rows = kept
            .iter()
            .map(|&a| kept.iter().map(|&b| self.admits(a, b)).collect())
            .collect();
        let labels = kept.iter().map(|&l| self.labels[l.idx()].clone()).collect();
        let original = kept.iter().map(|&l| self.original[l.idx()]).collect();
        Self::build(rows, labels, original)
    }

    /// The depth-`m` higher-block presentation: a subshift whose letters are
    /// the admissible length-`m` words, with `w → w'` admissible when `w'`
    /// continues `w` by one step (the last `m − 1` letters of `w` are the
    /// first `m − 1` of `w'`).
    ///
    /// The incidence is stored densely, so the state count is capped; deep
    /// state spaces are served sparsely by the transfer-operator layer
    /// instead.
    pub fn higher_block(&self, m: usize) -> Result<HigherBlock, SymbolicError> {
        let index = self.cylinder_index(m)?;
        let states = index.len() as u64;
        if states > HIGHER_BLOCK_STATE_CAP {
            return Err(SymbolicError::BlockStateSpaceTooLarge {
                states,
                cap: HIGHER_BLOCK_STATE_CAP,
            });
        }
        let n = index.len();
        let words: Vec<Word> = self.admissible_words(m);
        let mut rows = vec![vec![false; n]; n];
        for (i, w) in words.iter().enumerate() {
            let tail = w.shift();
            for &e in self.successors(w.last().expect("m >= 1")) {
                let mut succ = tail.clone();
                succ.push(e);
                let j = index.rank(&succ).expect("overlap successor is admissible");
                rows[i][j] = true;
            }
        }
        let labels = words.iter().map(|w| w.to_string()).collect();
        let shift = Subshift::with_labels(rows, labels)?;
        // No dead states arise: every admissible word extends one step in
        // both directions because the base alphabet has no dead letters.
        debug_assert!(shift.pruned_letters().is_empty());
        Ok(HigherBlock { shift, states: words })
    }
}

/// Higher-block presentation of a subshift at a fixed depth.
#[derive(Debug, Clone)]
pub struct HigherBlock {
    /// The block subshift; letter `i` stands for `states[i]`.
    pub shift: Subshift,
    /// The admissible base words, in the block subshift's letter order.
    pub states: Vec<Word>,
}

/// Bijection between admissible length-`m` words and `0..len()`, in
/// lexicographic order, with rank and unrank in `O(m · alphabet)` and no
/// materialized word list.
#[derive(Debug, Clone)]
pub struct CylinderIndex<'a> {
    shift: &'a Subshift,
    depth: usize,
    /// `ext[l - 1][j]`: number of admissible length-`l` words starting at `j`.
    ext: Vec<Vec<u64>>,
    total: u64,
}

impl<'a> CylinderIndex<'a> {
    fn new(shift: &'a Subshift, m: usize) -> Result<Self, SymbolicError> {
        if m == 0 {
            return Err(SymbolicError::InvalidDepth);
        }
        let k = shift.alphabet_size();
        let mut ext: Vec<Vec<u64>> = Vec::with_capacity(m);
        ext.push(vec![1u64; k]);
        for l in 1..m {
            let prev = &ext[l - 1];
            let mut next = vec![0u64; k];
            for j in 0..k {
                let mut acc: u64 = 0;
                for &s in shift.successors(Letter(j as u32)) {
                    acc = acc.checked_add(prev[s.idx()]).ok_or(SymbolicError::TooManyWords)?;
                }
                next[j] = acc;
            }
            ext.push(next);
        }
        let mut total: u64 = 0;
        for j in 0..k {
            total = total.checked_add(ext[m - 1][j]).ok_or(SymbolicError::TooManyWords)?;
        }
        if total > WORD_COUNT_CAP {
            return Err(SymbolicError::TooManyWords);
        }
        Ok(Self { shift, depth: m, ext, total })
    }

    /// The word length this index is for.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of admissible words of the indexed length.
    pub fn len(&self) -> usize {
        self.total as usize
    }

    /// Whether there are no admissible words (cannot happen after pruning,
    /// kept for completeness).
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Lexicographic rank of an admissible word of the indexed length;
    /// `None` for wrong length or inadmissible content.
    pub fn rank(&self, w: &Word) -> Option<usize> {
        if w.len() != self.depth {
            return None;
        }
        let letters = w.letters();
        let k = self.shift.alphabet_size();
        let mut rank: u64 = 0;
        for (i, &l) in letters.iter().enumerate() {
            if l.idx() >= k {
                return None;
            }
            if i > 0 && !self.shift.admits(letters[i - 1], l) {
                return None;
            }
            let remaining = self.depth - i;
            let allowed: &[Letter] = if i == 0 {
                &[]
            } else {
                self.shift.successors(letters[i - 1])
            };
            if i == 0 {
                for c in 0..l.idx() {
                    rank += self.ext[remaining - 1][c];
                }
            } else {
                for &c in allowed {
                    if c >= l {
                        break;
                    }
                    rank += self.ext[remaining - 1][c.idx()];
                }
            }
        }
        Some(rank as usize)
    }

    /// The admissible word at a given rank; `None` when out of range.
    pub fn word_at(&self, index: usize) -> Option<Word> {
        if index as u64 >= self.total {
            return None;
        }
        let mut idx = index as u64;
        let mut letters: Vec<Letter> = Vec::with_capacity(self.depth);
        for i in 0..self.depth {
            let remaining = self.depth - i;
            let mut chosen: Option<Letter> = None;
            if i == 0 {
                for l in self.shift.letters() {
                    let block = self.ext[remaining - 1][l.idx()];
                    if idx < block {
                        chosen = Some(l);
                        break;
                    }
                    idx -= block;
                }
            } else {
                for &l in self.shift.successors(letters[i - 1]) {
                    let block = self.ext[remaining - 1][l.idx()];
                    if idx < block {
                        chosen = Some(l);
                        break;
                    }
                    idx -= block;
                }
            }
            letters.push(chosen.expect("index within total"));
        }
        Some(Word(letters))
    }

    /// Lazy lexicographic iterator over all indexed words.
    pub fn words(&self) -> Words<'_> {
        Words { index: self, state: None, exhausted: false }
    }
}

/// Lazy lexicographic enumeration of the words behind a [`CylinderIndex`].
#[derive(Debug)]
pub struct Words<'a> {
    index: &'a CylinderIndex<'a>,
    /// Current word as positions into the candidate lists (letter list at
    /// position 0, successor lists after).
    state: Option<(Vec<usize>, Vec<Letter>)>,
    exhausted: bool,
}

impl Iterator for Words<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.exhausted {
            return None;
        }
        let shift = self.index.shift;
        let m = self.index.depth;
        match &mut self.state {
            None => {
                if self.index.total == 0 {
                    self.exhausted = true;
                    return None;
                }
                // First word: least letter, then least successors all the way.
                let mut positions = Vec::with_capacity(m);
                let mut letters: Vec<Letter> = Vec::with_capacity(m);
                positions.push(0);
                letters.push(Letter(0));
                for i in 1..m {
                    let l = shift.successors(letters[i - 1])[0];
                    positions.push(0);
                    letters.push(l);
                }
                let first = Word(letters.clone());
                self.state = Some((positions, letters));
                Some(first)
            }
            Some((positions, letters)) => {
                // Odometer step: advance the rightmost position that still
                // has a candidate, refill everything after with least ones.
                let mut i = m;
                loop {
                    if i == 0 {
                        self.exhausted = true;
                        return None;
                    }
                    i -= 1;
                    let candidates = if i == 0 {
                        shift.alphabet_size()
                    } else {
                        shift.successors(letters[i - 1]).len()
                    };
                    if positions[i] + 1 < candidates {
                        positions[i] += 1;
                        letters[i] = if i == 0 {
                            Letter(positions[0] as u32)
                        } else {
                            shift.successors(letters[i - 1])[positions[i]]
                        };
                        for j in i + 1..m {
                            positions[j] = 0;
                            letters[j] = shift.successors(letters[j - 1])[0];
                        }
                        return Some(Word(letters.clone()));
                    }
                }
            }
        }
    }
}

/// Square boolean matrix packed into 64-bit rows, for incidence powers.
#[derive(Clone)]
struct BitMatrix {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn zero(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        Self { n, words_per_row, bits: vec![0; n * words_per_row] }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i);
        }
        m
    }

    fn from_incidence(s: &Subshift) -> Self {
        let mut m = Self::zero(s.alphabet_size());
        for a in 0..s.alphabet_size() {
            for &b in s.successors(Letter(a as u32)) {
                m.set(a, b.idx());
            }
        }
        m
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words_per_row + j / 64] |= 1 << (j % 64);
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words_per_row + j / 64] >> (j % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for i in 0..self.n {
            let mut acc = vec![0u64; self.words_per_row];
            for j in 0..self.n {
                if self.get(i, j) {
                    for (a, &r) in acc.iter_mut().zip(rhs.row(j)) {
                        *a |= r;
                    }
                }
            }
            out.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
                .copy_from_slice(&acc);
        }
        out
    }

    fn all_set(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j)))
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
