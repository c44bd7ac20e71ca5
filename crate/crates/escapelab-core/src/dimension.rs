//! Survivor-set Hausdorff dimension through the geometric potential family.
//!
//! For a conformal system, the eigenvalue curve `t ↦ λ(t)` of the transfer
//! operator at `t·ζ` (with `ζ` the log-contraction potential) crosses one
//! at the dimension of the limit set. Punching a hole restricts the
//! operator to surviving states and lowers the curve: its unit root `bₙ`
//! is the Hausdorff dimension of the set of points whose entire forward
//! orbit avoids the hole. As the holes shrink onto a point `z`, the drop
//! `b − bₙ` is asymptotically proportional to the hole's measure under the
//! dimension-critical Gibbs state, and the ratio converges to `1/χ` when
//! `z` is off its own forward orbit, or `(1 − |φ′_ξ(z)|^b)/χ` when `z` is
//! the fixed point of the cycle map along a periodic word `ξ`: the cycle
//! is weighted by the critical potential `b·ζ`, exactly as a cycle in the
//! escape asymptotics carries its Gibbs weight `exp(S_pφ − pP)`. Here `χ`
//! is the Lyapunov exponent of the critical Gibbs state.
//!
//! Everything in this module reduces to the restricted eigenvalue curve:
//! its values, its analytic `t`-derivative from the dominant component's
//! eigenvectors, its unit root by safeguarded Newton iteration, and second
//! divided differences as a curvature probe.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::escape::{hole_membership, pattern_perron, prepare_hole, EscapeError};
use crate::gdms::{Gdms, GdmsError};
use crate::holes::{Classification, HoleSequence};
use crate::linalg;
use crate::symbolic::{Letter, SymbolicError, Word};
use crate::thermo::{Potential, ThermoError};

/// Errors from dimension computations.
#[derive(Debug, Clone, PartialEq)]
pub enum DimensionError {
    /// A spectral computation failed.
    Thermo(ThermoError),
    /// A combinatorial precondition failed.
    Symbolic(SymbolicError),
    /// The underlying conformal system rejected a request.
    Geometry(GdmsError),
    /// Hole preparation failed.
    Escape(EscapeError),
    /// The family is only defined for nonnegative exponents.
    NegativeExponent {
        /// The offending exponent.
        t: f64,
    },
    /// A curvature probe needs at least three grid points.
    GridTooSmall {
        /// Number of points supplied.
        got: usize,
    },
    /// Probe grids must be strictly increasing.
    GridNotIncreasing {
        /// Index of the first out-of-order point.
        index: usize,
    },
    /// No exponent with a restricted eigenvalue at or below one was found.
    NoUnitRoot {
        /// Largest exponent tried.
        hi: f64,
        /// Restricted eigenvalue there.
        lambda_hi: f64,
    },
}

impl fmt::Display for DimensionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Thermo(e) => write!(f, "{e}"),
            Self::Symbolic(e) => write!(f, "{e}"),
            Self::Geometry(e) => write!(f, "{e}"),
            Self::Escape(e) => write!(f, "{e}"),
            Self::NegativeExponent { t } => {
                write!(f, "family exponent must be nonnegative, got {t}")
            }
            Self::GridTooSmall { got } => {
                write!(f, "curvature probe needs at least 3 grid points, got {got}")
            }
            Self::GridNotIncreasing { index } => {
                write!(f, "probe grid must be strictly increasing at index {index}")
            }
            Self::NoUnitRoot { hi, lambda_hi } => write!(
                f,
                "no unit root bracket: eigenvalue is still {lambda_hi} at exponent {hi}"
            ),
        }
    }
}

impl core::error::Error for DimensionError {}

impl From<ThermoError> for DimensionError {
    fn from(e: ThermoError) -> Self {
        Self::Thermo(e)
    }
}

impl From<SymbolicError> for DimensionError {
    fn from(e: SymbolicError) -> Self {
        Self::Symbolic(e)
    }
}

impl From<GdmsError> for DimensionError {
    fn from(e: GdmsError) -> Self {
        Self::Geometry(e)
    }
}

impl From<EscapeError> for DimensionError {
    fn from(e: EscapeError) -> Self {
        Self::Escape(e)
    }
}

/// The geometric family of one system restricted to the complement of one
/// hole, evaluated at any exponent `t ≥ 0`.
///
/// Holds the depth-extended log-contraction potential and the surviving
/// state set, so each evaluation only rescales, rebuilds the small
/// transfer matrix, and reads off its dominant component.
#[derive(Debug, Clone)]
pub struct RestrictedFamily {
    zeta: Potential,
    survivors: Vec<u32>,
    depth: usize,
    hole_len: usize,
}

impl RestrictedFamily {
    /// Restricts the geometric family of `g` to the complement of the
    /// given equal-length hole cylinders. An empty hole keeps everything;
    /// a hole covering every state leaves an empty family whose
    /// eigenvalue is identically zero.
    pub fn new(g: &Gdms, hole: &[Word]) -> Result<Self, DimensionError> {
        let (words, hole_len) = prepare_hole(hole)?;
        let base = g.log_derivative();
        let m = base.depth();
        let depth = m.max(hole_len).max(1);
        let zeta = if depth > m { base.extend_depth(depth)? } else { base.clone() };
        let in_hole = hole_membership(g.subshift(), &words, hole_len, depth)?;
        let survivors: Vec<u32> = (0..in_hole.len())
            .filter(|&i| !in_hole[i])
            .map(|i| i as u32)
            .collect();
        Ok(Self { zeta, survivors, depth, hole_len })
    }

    /// Working matrix depth.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Common length of the hole cylinders (0 for an empty hole).
    pub fn hole_len(&self) -> usize {
        self.hole_len
    }

    /// Number of surviving states at the working depth.
    pub fn survivor_states(&self) -> usize {
        self.survivors.len()
    }

    /// Leading eigenvalue `λₙ(t)` of the restricted operator at `t·ζ`:
    /// strictly decreasing in `t`, at most the closed eigenvalue, and zero
    /// when the survivor graph has no cycle.
    pub fn eigenvalue(&self, t: f64) -> Result<f64, DimensionError> {
        Ok(self.spectral(t)?.0)
    }

    /// The pair `(λₙ(t), λₙ′(t))`. The derivative is the dominant
    /// component's invariant average of `ζ` times the eigenvalue, always
    /// negative on a live family; both are zero when the survivor graph is
    /// acyclic.
    pub fn eigenvalue_and_derivative(&self, t: f64) -> Result<(f64, f64), DimensionError> {
        self.spectral(t)
    }

    fn spectral(&self, t: f64) -> Result<(f64, f64), DimensionError> {
        if !(t >= 0.0) {
            return Err(DimensionError::NegativeExponent { t });
        }
        if self.survivors.is_empty() {
            return Ok((0.0, 0.0));
        }
        let matrix = self.zeta.scale(t)?.transfer_matrix()?;
        let sub = matrix.csr().submatrix(&self.survivors);
        let perron = pattern_perron(&sub)?;
        let lambda = perron.lambda * libm::exp(matrix.log_offset());
        let Some((comp, left, right)) = perron.dominant else {
            return Ok((0.0, 0.0));
        };
        let weights = self.zeta.values();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &node) in comp.iter().enumerate() {
            let state = self.survivors[node as usize] as usize;
            let pair = left[i] * right[i];
            num += pair * weights[state];
            den += pair;
        }
        // dλ/dt = λ · Σ lᵢ ζᵢ rᵢ / Σ lᵢ rᵢ: the entry derivative scales
        // rows by ζ, and M r = λ r collapses the double sum.
        Ok((lambda, lambda * num / den))
    }

    /// The unit root `bₙ` of `λₙ(t) = 1`, which is the Hausdorff dimension
    /// of the survivor set.
    ///
    /// `b_upper` seeds the bracket (the closed system's dimension works,
    /// since `λₙ ≤ λ`); it is expanded if the eigensolver residual leaves
    /// `λₙ` marginally above one there. Bisection narrows the bracket to
    /// width 0.1 before Newton steps take over, because the curve can be
    /// nearly flat on sparse survivor sets. Iteration stops when
    /// `|λₙ(bₙ) − 1| ≤ tol`. A family with `λₙ(0) ≤ 1` carries no root to
    /// find: the result is 0 with the degenerate flag set.
    pub fn unit_root(&self, b_upper: f64, tol: f64) -> Result<SurvivorDimension, DimensionError> {
        let lam0 = self.eigenvalue(0.0)?;
        if lam0 <= 1.0 + 1e-12 {
            return Ok(SurvivorDimension {
                value: 0.0,
                residual: lam0 - 1.0,
                degenerate: true,
                iterations: 0,
            });
        }
        let mut lo = 0.0f64;
        let mut hi = b_upper.max(1e-6);
        let mut lam_hi = self.eigenvalue(hi)?;
        let mut expansions = 0;
        while lam_hi > 1.0 {
            hi *= 1.25;
            expansions += 1;
            if expansions > 64 {
                return Err(DimensionError::NoUnitRoot { hi, lambda_hi: lam_hi });
            }
            lam_hi = self.eigenvalue(hi)?;
        }
        let mut iterations = expansions;
        while hi - lo > 0.1 {
            let mid = 0.5 * (lo + hi);
            iterations += 1;
            if self.eigenvalue(mid)? > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut t = 0.5 * (lo + hi);
        let mut residual = f64::INFINITY;
        for _ in 0..60 {
            let (lam, dl) = self.eigenvalue_and_derivative(t)?;
            residual = lam - 1.0;
            iterations += 1;
            if residual.abs() <= tol {
                break;
            }
            if residual > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let mut next = if dl < 0.0 { t - residual / dl } else { 0.5 * (lo + hi) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            t = next;
        }
        Ok(SurvivorDimension { value: t, residual, degenerate: false, iterations })
    }
}

/// A survivor-set dimension with its root-finding quality data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivorDimension {
    /// The unit root `bₙ` (the survivor set's Hausdorff dimension), or 0
    /// when degenerate.
    pub value: f64,
    /// `λₙ(bₙ) − 1` at the returned root.
    pub residual: f64,
    /// Set when `λₙ(0) ≤ 1` left nothing to solve: the survivor set
    /// carries no cycle with entropy (at most a single periodic orbit).
    pub degenerate: bool,
    /// Eigenvalue evaluations spent.
    pub iterations: usize,
}

/// Hausdorff dimension of the set of points whose entire forward orbit
/// avoids the hole: the unit root of the restricted eigenvalue curve,
/// bracketed by the closed system's dimension.
pub fn survivor_dimension(
    g: &Gdms,
    hole: &[Word],
    tol: f64,
) -> Result<SurvivorDimension, DimensionError> {
    let family = RestrictedFamily::new(g, hole)?;
    let b = g.bowen_parameter(tol.min(1e-12))?;
    family.unit_root(b.value, tol)
}

/// The survivor system realized as its own conformal system: the
/// higher-block presentation at the working depth with hole states
/// deleted and dead states pruned. Its limit-set dimension equals the
/// unit root of the restricted family, computed through an entirely
/// separate pressure-equation path.
///
/// The result supports every spectral operation; interval projection is
/// not carried over. Fails when nothing recurrent survives.
pub fn survivor_subsystem(g: &Gdms, hole: &[Word]) -> Result<Gdms, DimensionError> {
    let (words, hole_len) = prepare_hole(hole)?;
    let base = g.log_derivative();
    let m = base.depth();
    let depth = m.max(hole_len).max(1);
    let zeta = if depth > m { base.extend_depth(depth)? } else { base.clone() };
    let in_hole = hole_membership(g.subshift(), &words, hole_len, depth)?;
    let block = g.subshift().higher_block(depth)?;
    let keep: Vec<Letter> = (0..block.states.len())
        .filter(|&i| !in_hole[i])
        .map(|i| Letter(i as u32))
        .collect();
    if keep.is_empty() {
        return Err(EscapeError::EmptySurvivorSet.into());
    }
    let sub = block.shift.restrict(&keep)?;
    let values = zeta.values();
    let canonical: Vec<f64> = sub
        .letters()
        .map(|l| values[sub.original_letter(l) as usize])
        .collect();
    Ok(Gdms::from_cylinder_derivatives(
        Arc::new(sub),
        1,
        canonical.clone(),
        canonical.clone(),
        canonical,
    )?)
}

/// Largest second-derivative magnitude of the restricted eigenvalue curve
/// over a strictly increasing grid, estimated by second divided
/// differences. The theory needs this curvature bounded uniformly over
/// the hole levels; the probe is the measured stand-in.
pub fn second_derivative_probe(
    g: &Gdms,
    hole: &[Word],
    t_grid: &[f64],
) -> Result<f64, DimensionError> {
    if t_grid.len() < 3 {
        return Err(DimensionError::GridTooSmall { got: t_grid.len() });
    }
    for (i, pair) in t_grid.windows(2).enumerate() {
        if !(pair[1] > pair[0]) {
            return Err(DimensionError::GridNotIncreasing { index: i + 1 });
        }
    }
    let family = RestrictedFamily::new(g, hole)?;
    let values: Vec<f64> = t_grid
        .iter()
        .map(|&t| family.eigenvalue(t))
        .collect::<Result<_, _>>()?;
    let mut probe = 0.0f64;
    for i in 0..values.len() - 2 {
        let (t0, t1, t2) = (t_grid[i], t_grid[i + 1], t_grid[i + 2]);
        let first = (values[i + 1] - values[i]) / (t1 - t0);
        let second = (values[i + 2] - values[i + 1]) / (t2 - t1);
        probe = probe.max((2.0 * (second - first) / (t2 - t0)).abs());
    }
    Ok(probe)
}

/// One row of the dimension-drop table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionLevel {
    /// Hole level (cylinder length).
    pub n: usize,
    /// Hole measure under the dimension-critical Gibbs state.
    pub mu_b: f64,
    /// Survivor-set dimension at this level.
    pub b_n: f64,
    /// Ratio `(b − bₙ) / μ_b(Uₙ)` whose limit the theory predicts.
    pub drop_ratio: f64,
    /// Whether this level's root was degenerate (`bₙ = 0` forced).
    pub degenerate: bool,
}

/// Level-by-level survivor dimensions with the extrapolated and predicted
/// limits of the drop-to-measure ratio.
#[derive(Debug, Clone)]
pub struct DimensionReport {
    /// The closed system's limit-set dimension.
    pub b: f64,
    /// Lyapunov exponent of the Gibbs state at the critical exponent.
    pub chi: f64,
    /// Per-level data, one row per stored hole level.
    pub levels: Vec<DimensionLevel>,
    /// Accelerated limit of the ratio column, when enough levels exist.
    pub extrapolated_limit: Option<f64>,
    /// Fitted correction exponent `γ` in `ratioₙ ≈ L + c·μ_b(Uₙ)^γ`.
    pub fit_exponent: Option<f64>,
    /// Fitted correction coefficient `c`.
    pub fit_coefficient: Option<f64>,
    /// Whether the ratio residuals shrink monotonically over the fitted
    /// tail; a false value marks the extrapolation as untrustworthy.
    pub reliable: bool,
    /// Predicted limit from the center classification, when decidable.
    pub theoretical_limit: Option<f64>,
}

/// Computes survivor dimensions for every level of a hole sequence and
/// extrapolates the drop-to-measure ratio. `tol` bounds `|λₙ(bₙ) − 1|` at
/// every level's root.
pub fn dimension_drop_asymptotics(
    g: &Gdms,
    h: &HoleSequence,
    tol: f64,
) -> Result<DimensionReport, DimensionError> {
    let bp = g.bowen_parameter(tol.min(1e-12))?;
    let b = bp.value;
    let gb = g.gibbs_state(b, 1e-14)?;
    let chi = -gb.pressure_derivative(g.log_derivative())? / gb.lambda();
    let mut levels = Vec::with_capacity(h.levels().len());
    for level in h.levels() {
        let family = RestrictedFamily::new(g, level.words())?;
        let root = family.unit_root(b, tol)?;
        let mut mu_b = 0.0;
        for w in level.words() {
            mu_b += gb.cylinder_measure(w)?;
        }
        levels.push(DimensionLevel {
            n: level.n(),
            mu_b,
            b_n: root.value,
            drop_ratio: (b - root.value) / mu_b,
            degenerate: root.degenerate,
        });
    }
    let rows: Vec<(f64, f64)> = levels.iter().map(|l| (l.mu_b, l.drop_ratio)).collect();
    let (extrapolated_limit, fit_exponent, fit_coefficient, reliable) =
        linalg::accelerate_ratio_limit(&rows);
    let theoretical_limit = theoretical_drop_ratio(g, h.classification(), b, chi)?;
    Ok(DimensionReport {
        b,
        chi,
        levels,
        extrapolated_limit,
        fit_exponent,
        fit_coefficient,
        reliable,
        theoretical_limit,
    })
}

/// Predicted limit of `(b − bₙ)/μ_b(Uₙ)` from the center classification:
/// `1/χ` for a center off its own forward orbit, `(1 − |φ′_ξ(z)|^b)/χ`
/// for the fixed point of the cycle map along a period-`p` word `ξ`, and
/// undecided otherwise. The cycle weight `|φ′_ξ(z)|^b = e^{S_p(bζ)(ξ^∞)}`
/// is its Gibbs weight under the dimension-critical potential, whose
/// pressure vanishes; the raw contraction `|φ′_ξ(z)|` only appears when
/// `b = 1`.
pub fn theoretical_drop_ratio(
    g: &Gdms,
    class: &Classification,
    b: f64,
    chi: f64,
) -> Result<Option<f64>, DimensionError> {
    match class {
        Classification::NonPseudoPeriodic { .. } => Ok(Some(1.0 / chi)),
        Classification::UniquelyPeriodic { xi, period } => {
            let p = *period;
            let zeta = g.log_derivative();
            let m = zeta.depth();
            let needed = (p + m - 1).max(1);
            let reps = needed.div_ceil(p) + 1;
            let w = g.subshift().power(xi, reps)?.prefix(needed);
            let weight = libm::exp(b * zeta.birkhoff(&w, p)?);
            Ok(Some((1.0 - weight) / chi))
        }
        Classification::Unclassified => Ok(None),
    }
}
