//! Conformal graph-directed systems on an interval: contraction data,
//! geometric potentials, pressure as a function of the exponent, and the
//! Bowen parameter locating the limit-set dimension.
//!
//! Every edge of the underlying subshift carries a contraction of a seed
//! interval. The geometric potential `ζ(w) = log |φ'_w|` turns metric
//! questions into spectral ones: `P(t)`, the pressure of `t·ζ`, is strictly
//! decreasing and convex, and its unique zero `b` is the Hausdorff dimension
//! of the limit set. Affine edge maps are represented exactly; systems known
//! only through per-cylinder derivative tables keep the full spectral
//! interface but cannot be projected to concrete intervals.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::symbolic::{Subshift, SymbolicError, Word};
use crate::thermo::{GibbsState, Potential, PressureMethod, ThermoError};

/// Relative slack for containment checks on interval endpoints.
const GEOMETRY_SLACK: f64 = 1e-12;

/// Errors from system construction and dimension computations.
#[derive(Debug, Clone, PartialEq)]
pub enum GdmsError {
    /// A combinatorial precondition failed.
    Symbolic(SymbolicError),
    /// A spectral computation failed.
    Thermo(ThermoError),
    /// One edge map per letter is required.
    MapCountMismatch {
        /// Alphabet size.
        expected: usize,
        /// Maps supplied.
        got: usize,
    },
    /// An edge map is not a contraction.
    NotContracting {
        /// Edge index.
        edge: usize,
        /// Absolute slope.
        ratio: f64,
    },
    /// An interval has nonpositive length or non-finite endpoints.
    BadInterval {
        /// Lower endpoint.
        lo: f64,
        /// Upper endpoint.
        hi: f64,
    },
    /// An edge image leaves the domain of a map that must follow it.
    ImageEscapesDomain {
        /// Earlier edge of the admissible pair.
        a: u32,
        /// Later edge of the admissible pair.
        b: u32,
    },
    /// Two edge images overlap in their interiors, breaking separation.
    OverlappingImages {
        /// First edge.
        a: u32,
        /// Second edge.
        b: u32,
    },
    /// A derivative table entry is out of order or not a contraction log.
    BadDerivativeTable {
        /// Cylinder rank.
        index: usize,
    },
    /// Geometric projection requires explicit edge maps.
    GeometryUnavailable,
    /// Exponents must be nonnegative.
    NegativeExponent {
        /// Offending exponent.
        t: f64,
    },
    /// The pressure bracket never produced a sign change.
    NoBracket {
        /// Largest exponent tried.
        t_max: f64,
    },
}

impl fmt::Display for GdmsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Symbolic(e) => write!(f, "{e}"),
            Self::Thermo(e) => write!(f, "{e}"),
            Self::MapCountMismatch { expected, got } => {
                write!(f, "need {expected} edge maps, got {got}")
            }
            Self::NotContracting { edge, ratio } => {
                write!(f, "edge {edge} has slope magnitude {ratio}, not in (0,1)")
            }
            Self::BadInterval { lo, hi } => write!(f, "invalid interval [{lo}, {hi}]"),
            Self::ImageEscapesDomain { a, b } => {
                write!(f, "image of edge {b} leaves the domain of edge {a}")
            }
            Self::OverlappingImages { a, b } => {
                write!(f, "edges {a} and {b} have overlapping image interiors")
            }
            Self::BadDerivativeTable { index } => {
                write!(f, "derivative table entry {index} is inconsistent")
            }
            Self::GeometryUnavailable => {
                write!(f, "system has no explicit edge maps to project with")
            }
            Self::NegativeExponent { t } => write!(f, "exponent {t} is negative"),
            Self::NoBracket { t_max } => {
                write!(f, "pressure kept its sign up to exponent {t_max}")
            }
        }
    }
}

impl core::error::Error for GdmsError {}

impl From<SymbolicError> for GdmsError {
    fn from(e: SymbolicError) -> Self {
        Self::Symbolic(e)
    }
}

impl From<ThermoError> for GdmsError {
    fn from(e: ThermoError) -> Self {
        Self::Thermo(e)
    }
}

/// A closed interval `[lo, hi]` with positive length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// Builds an interval, rejecting empty or non-finite ranges.
    pub fn new(lo: f64, hi: f64) -> Result<Self, GdmsError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(GdmsError::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// The unit interval.
    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    /// Lower endpoint.
    pub fn lo(&self) -> f64 {
        self.lo
    }

    /// Upper endpoint.
    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Length `hi - lo`.
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Midpoint.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Whether `x` lies in the closed interval.
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Whether `other` sits inside this interval, up to relative slack.
    pub fn encloses(&self, other: &Interval) -> bool {
        let slack = GEOMETRY_SLACK * (1.0 + self.len());
        self.lo - slack <= other.lo && other.hi <= self.hi + slack
    }

    /// Whether the open interiors intersect.
    pub fn interiors_overlap(&self, other: &Interval) -> bool {
        let slack = GEOMETRY_SLACK * (1.0 + self.len().max(other.len()));
        self.lo.max(other.lo) + slack < self.hi.min(other.hi)
    }

    /// Intersection with another interval, if it has positive length.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo < hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// An affine contraction `x ↦ slope·x + offset` with `0 < |slope| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    slope: f64,
    offset: f64,
}

impl AffineMap {
    /// Builds the map `x ↦ slope·x + offset`.
    pub fn new(slope: f64, offset: f64) -> Self {
        Self { slope, offset }
    }

    /// Slope of the map.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Offset of the map.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Image of a point.
    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.offset
    }

    /// Image of an interval.
    pub fn image(&self, iv: &Interval) -> Interval {
        let a = self.apply(iv.lo);
        let b = self.apply(iv.hi);
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }
}

/// A finite conformal graph-directed system on one seed interval.
///
/// The subshift's letters are the edges; an admissible word `w` composes to
/// the contraction `φ_w = φ_{w₁} ∘ … ∘ φ_{wₙ}`, and the limit set is the
/// union of the resulting nested intervals. The geometric potential stores
/// `log |φ'|` per depth-`m` cylinder; for affine edges it is exact at depth
/// one with distortion constant exactly 1.
#[derive(Debug, Clone)]
pub struct Gdms {
    shift: Arc<Subshift>,
    domain: Interval,
    maps: Option<Vec<AffineMap>>,
    zeta: Potential,
    contraction_bound: f64,
    bdp_constant: f64,
}

impl Gdms {
    /// Builds a system from affine edge maps on a common seed interval.
    ///
    /// Checks that every map is a contraction, that every image stays inside
    /// the domain of any map allowed to follow it, and that image interiors
    /// of distinct edges are pairwise disjoint (the separation the dimension
    /// theory needs, spot-checked at depth one).
    pub fn affine(
        shift: Arc<Subshift>,
        maps: Vec<AffineMap>,
        domain: Interval,
    ) -> Result<Self, GdmsError> {
        let k = shift.alphabet_size();
        if maps.len() != k {
            return Err(GdmsError::MapCountMismatch { expected: k, got: maps.len() });
        }
        for (i, m) in maps.iter().enumerate() {
            let r = m.slope.abs();
            if !(r.is_finite() && r > 0.0 && r < 1.0) || !m.offset.is_finite() {
                return Err(GdmsError::NotContracting { edge: i, ratio: r });
            }
        }
        let images: Vec<Interval> = maps.iter().map(|m| m.image(&domain)).collect();
        for a in 0..k {
            for b in 0..k {
                if shift.admits(crate::Letter(a as u32), crate::Letter(b as u32))
                    && !domain.encloses(&images[b])
                {
                    return Err(GdmsError::ImageEscapesDomain { a: a as u32, b: b as u32 });
                }
            }
        }
        for a in 0..k {
            for b in (a + 1)..k {
                if images[a].interiors_overlap(&images[b]) {
                    return Err(GdmsError::OverlappingImages { a: a as u32, b: b as u32 });
                }
            }
        }
        let zeta = Potential::from_fn(shift.clone(), 1, |w| {
            libm::log(maps[w.first().expect("depth 1").0 as usize].slope.abs())
        })?;
        let contraction_bound =
            maps.iter().map(|m| m.slope.abs()).fold(0.0f64, f64::max);
        Ok(Self { shift, domain, maps: Some(maps), zeta, contraction_bound, bdp_constant: 1.0 })
    }

    /// Builds a system from per-cylinder derivative logs at a working depth:
    /// a canonical value plus sup and inf bounds for each cylinder. The
    /// distortion constant is the largest sup/inf ratio. Spectral operations
    /// are fully available; interval projection is not.
    pub fn from_cylinder_derivatives(
        shift: Arc<Subshift>,
        depth: usize,
        canonical: Vec<f64>,
        sup: Vec<f64>,
        inf: Vec<f64>,
    ) -> Result<Self, GdmsError> {
        let n = shift.cylinder_index(depth)?.len();
        if canonical.len() != n || sup.len() != n || inf.len() != n {
            return Err(GdmsError::MapCountMismatch { expected: n, got: canonical.len() });
        }
        let mut log_distortion = 0.0f64;
        let mut contraction_bound = 0.0f64;
        for i in 0..n {
            let ordered = inf[i] <= canonical[i] && canonical[i] <= sup[i];
            if !ordered || !sup[i].is_finite() || !inf[i].is_finite() || sup[i] >= 0.0 {
                return Err(GdmsError::BadDerivativeTable { index: i });
            }
            log_distortion = log_distortion.max(sup[i] - inf[i]);
            contraction_bound = contraction_bound.max(libm::exp(sup[i]));
        }
        let zeta = Potential::new(shift.clone(), depth, canonical)?;
        Ok(Self {
            shift,
            domain: Interval::unit(),
            maps: None,
            zeta,
            contraction_bound,
            bdp_constant: libm::exp(log_distortion),
        })
    }

    /// Two branches contracting by one third to the ends of the unit
    /// interval; the limit set is the middle-thirds dust.
    pub fn cantor_thirds() -> Self {
        let shift = Arc::new(Subshift::full(2).expect("nonempty"));
        let third = 1.0 / 3.0;
        Self::affine(
            shift,
            alloc::vec![AffineMap::new(third, 0.0), AffineMap::new(third, 2.0 * third)],
            Interval::unit(),
        )
        .expect("valid by construction")
    }

    /// Two free branches with ratios one half and one quarter.
    pub fn half_quarter() -> Self {
        let shift = Arc::new(Subshift::full(2).expect("nonempty"));
        Self::affine(
            shift,
            alloc::vec![AffineMap::new(0.5, 0.0), AffineMap::new(0.25, 0.75)],
            Interval::unit(),
        )
        .expect("valid by construction")
    }

    /// Thirds contractions constrained so the left branch never follows
    /// itself.
    pub fn golden_mean_thirds() -> Self {
        let shift = Arc::new(
            Subshift::new(alloc::vec![
                alloc::vec![false, true],
                alloc::vec![true, true],
            ])
            .expect("nonempty"),
        );
        let third = 1.0 / 3.0;
        Self::affine(
            shift,
            alloc::vec![AffineMap::new(third, 0.0), AffineMap::new(third, 2.0 * third)],
            Interval::unit(),
        )
        .expect("valid by construction")
    }

    /// The two inverse branches of the circle-doubling map; the limit set is
    /// the whole interval.
    pub fn doubling_halves() -> Self {
        let shift = Arc::new(Subshift::full(2).expect("nonempty"));
        Self::affine(
            shift,
            alloc::vec![AffineMap::new(0.5, 0.0), AffineMap::new(0.5, 0.5)],
            Interval::unit(),
        )
        .expect("valid by construction")
    }

    /// A single contraction of the stated ratio; the limit set is one point.
    pub fn single_map(ratio: f64) -> Result<Self, GdmsError> {
        let shift = Arc::new(Subshift::full(1).expect("nonempty"));
        Self::affine(shift, alloc::vec![AffineMap::new(ratio, 0.0)], Interval::unit())
    }

    /// The underlying subshift.
    pub fn subshift(&self) -> &Arc<Subshift> {
        &self.shift
    }

    /// The seed interval.
    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// The affine edge maps, if the geometry is explicit.
    pub fn maps(&self) -> Option<&[AffineMap]> {
        self.maps.as_deref()
    }

    /// The geometric potential `log |φ'|` on its working depth.
    pub fn log_derivative(&self) -> &Potential {
        &self.zeta
    }

    /// Uniform contraction bound `s < 1`.
    pub fn contraction_bound(&self) -> f64 {
        self.contraction_bound
    }

    /// Bounded-distortion constant `K ≥ 1` (exactly 1 for affine systems).
    pub fn bdp_constant(&self) -> f64 {
        self.bdp_constant
    }

    /// Image interval `φ_w(X)` of the composed contraction along `w`.
    ///
    /// Nested in the word order: the image of an extension sits inside the
    /// image of its prefix, with length at most `s^|w|` times the seed.
    pub fn project(&self, w: &Word) -> Result<Interval, GdmsError> {
        let maps = self.maps.as_ref().ok_or(GdmsError::GeometryUnavailable)?;
        if !self.shift.is_admissible(w.letters()) {
            let letters = w.letters();
            let bad = letters
                .windows(2)
                .position(|p| !self.shift.admits(p[0], p[1]))
                .unwrap_or(0);
            return Err(SymbolicError::InadmissiblePair {
                position: bad,
                a: letters.get(bad).map_or(0, |l| l.0),
                b: letters.get(bad + 1).map_or(0, |l| l.0),
            }
            .into());
        }
        let mut iv = self.domain;
        for &letter in w.letters().iter().rev() {
            iv = maps[letter.0 as usize].image(&iv);
        }
        Ok(iv)
    }

    /// Pressure `P(t)` of the potential `t·ζ`.
    pub fn pressure(&self, t: f64) -> Result<f64, GdmsError> {
        if t < 0.0 {
            return Err(GdmsError::NegativeExponent { t });
        }
        Ok(self.zeta.scale(t)?.pressure(PressureMethod::Spectral)?)
    }

    /// Gibbs state of `t·ζ`.
    pub fn gibbs_state(&self, t: f64, tol: f64) -> Result<GibbsState, GdmsError> {
        if t < 0.0 {
            return Err(GdmsError::NegativeExponent { t });
        }
        Ok(GibbsState::compute(&self.zeta.scale(t)?, tol)?)
    }

    /// The unique zero of `P(t)`, which is the Hausdorff dimension of the
    /// limit set. Bracketing bisection followed by Newton steps using the
    /// analytic eigenvalue derivative; the residual pressure is reported.
    ///
    /// When `P(0) ≤ 0` there is nothing to solve (a single contracting
    /// branch, say): the result is 0 with the degenerate flag set.
    pub fn bowen_parameter(&self, tol: f64) -> Result<BowenParameter, GdmsError> {
        let p0 = self.pressure(0.0)?;
        if p0 <= tol.max(1e-15) {
            return Ok(BowenParameter { value: 0.0, pressure_residual: p0, degenerate: true });
        }
        // P(t) ≤ P(0) + t·log s with s < 1, so an upper bracket exists.
        let mut hi = 1.0;
        let mut p_hi = self.pressure(hi)?;
        let mut doublings = 0;
        while p_hi > 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 64 {
                return Err(GdmsError::NoBracket { t_max: hi });
            }
            p_hi = self.pressure(hi)?;
        }
        let mut lo = 0.0;
        for _ in 0..20 {
            let mid = 0.5 * (lo + hi);
            if self.pressure(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut t = 0.5 * (lo + hi);
        let mut residual = self.pressure(t)?;
        for _ in 0..60 {
            if residual.abs() <= tol {
                break;
            }
            let g = self.gibbs_state(t, 1e-14)?;
            let slope = g.pressure_derivative(&self.zeta)? / g.lambda();
            let mut next = t - residual / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let p_next = self.pressure(next)?;
            if p_next > 0.0 {
                lo = next;
            } else {
                hi = next;
            }
            t = next;
            residual = p_next;
        }
        Ok(BowenParameter { value: t, pressure_residual: residual, degenerate: false })
    }

    /// Lyapunov exponent of the Gibbs state at exponent `t`: the mean
    /// contraction rate `−λ'(t)/λ(t)`, always positive.
    pub fn lyapunov(&self, t: f64, tol: f64) -> Result<f64, GdmsError> {
        let g = self.gibbs_state(t, tol)?;
        Ok(-g.pressure_derivative(&self.zeta)? / g.lambda())
    }

    /// The one-parameter potential family `t ↦ t·ζ` of this system.
    pub fn geometric_family(self: &Arc<Self>) -> GeometricFamily {
        GeometricFamily { gdms: self.clone() }
    }
}

/// Root of the pressure equation with its quality data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowenParameter {
    /// The zero of `P(t)` (the limit-set dimension), or 0 when degenerate.
    pub value: f64,
    /// Pressure at the returned value.
    pub pressure_residual: f64,
    /// Set when `P(0) ≤ 0` leaves nothing to solve.
    pub degenerate: bool,
}

/// The linear potential family `t ↦ t·ζ` of a conformal system, with its
/// exact derivative data.
#[derive(Debug, Clone)]
pub struct GeometricFamily {
    gdms: Arc<Gdms>,
}

impl GeometricFamily {
    /// The underlying system.
    pub fn gdms(&self) -> &Arc<Gdms> {
        &self.gdms
    }

    /// The potential at exponent `t`.
    pub fn at(&self, t: f64) -> Result<Potential, ThermoError> {
        self.gdms.zeta.scale(t)
    }

    /// The t-derivative of the family, constant in `t`.
    pub fn derivative(&self) -> &Potential {
        &self.gdms.zeta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const LOG2: f64 = core::f64::consts::LN_2;

    fn log3() -> f64 {
        libm::log(3.0)
    }

    fn golden_ratio() -> f64 {
        0.5 * (1.0 + libm::sqrt(5.0))
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cantor_projection_examples() {
        let g = Gdms::cantor_thirds();
        let shift = g.subshift().clone();
        let i0 = g.project(&shift.word(&[0]).unwrap()).unwrap();
        assert!(close(i0.lo(), 0.0, 1e-15) && close(i0.hi(), 1.0 / 3.0, 1e-15));
        let i01 = g.project(&shift.word(&[0, 1]).unwrap()).unwrap();
        assert!(close(i01.lo(), 2.0 / 9.0, 1e-15) && close(i01.hi(), 3.0 / 9.0, 1e-15));
        let i10 = g.project(&shift.word(&[1, 0]).unwrap()).unwrap();
        assert!(close(i10.lo(), 6.0 / 9.0, 1e-15) && close(i10.hi(), 7.0 / 9.0, 1e-15));
    }

    #[test]
    fn projection_nests_and_contracts() {
        for g in [Gdms::cantor_thirds(), Gdms::half_quarter(), Gdms::golden_mean_thirds()] {
            let shift = g.subshift().clone();
            let index = shift.cylinder_index(5).unwrap();
            for w in index.words() {
                let iv = g.project(&w).unwrap();
                let parent = g.project(&w.prefix(4)).unwrap();
                assert!(parent.encloses(&iv));
                let bound = libm::pow(g.contraction_bound(), 5.0) * g.domain().len();
                assert!(iv.len() <= bound + 1e-13);
            }
        }
    }

    #[test]
    fn pressure_closed_forms() {
        let g = Gdms::cantor_thirds();
        for t in [0.0, 0.25, 0.5, 1.0, 1.5] {
            assert!(close(g.pressure(t).unwrap(), LOG2 - t * log3(), 1e-12));
        }
        let g = Gdms::half_quarter();
        assert!(close(g.pressure(1.0).unwrap(), libm::log(0.75), 1e-12));
        let g = Gdms::golden_mean_thirds();
        assert!(close(g.pressure(0.0).unwrap(), libm::log(golden_ratio()), 1e-12));
        assert!(matches!(g.pressure(-0.5), Err(GdmsError::NegativeExponent { .. })));
    }

    #[test]
    fn bowen_parameter_closed_forms() {
        let b = Gdms::cantor_thirds().bowen_parameter(1e-12).unwrap();
        assert!(!b.degenerate);
        assert!(close(b.value, LOG2 / log3(), 1e-11));
        assert!(b.pressure_residual.abs() <= 1e-12);

        let b = Gdms::half_quarter().bowen_parameter(1e-12).unwrap();
        let expected = libm::log(golden_ratio()) / LOG2;
        assert!(close(b.value, expected, 1e-11));

        let b = Gdms::doubling_halves().bowen_parameter(1e-12).unwrap();
        assert!(close(b.value, 1.0, 1e-11));

        let b = Gdms::single_map(0.5).unwrap().bowen_parameter(1e-12).unwrap();
        assert!(b.degenerate);
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn lyapunov_closed_forms() {
        let g = Gdms::cantor_thirds();
        for t in [0.0, 0.3, 0.6309297535714574] {
            assert!(close(g.lyapunov(t, 1e-14).unwrap(), log3(), 1e-11));
        }

        // Free pair with ratios 1/2 and 1/4 at the dimension: the Gibbs
        // weights are x and x² with x the positive root of x + x² = 1.
        let g = Gdms::half_quarter();
        let b = g.bowen_parameter(1e-13).unwrap().value;
        let x = 0.5 * (libm::sqrt(5.0) - 1.0);
        let expected = x * LOG2 + (1.0 - x) * libm::log(4.0);
        assert!(close(g.lyapunov(b, 1e-14).unwrap(), expected, 1e-10));

        let g = Gdms::single_map(0.25).unwrap();
        assert!(close(g.lyapunov(0.7, 1e-14).unwrap(), libm::log(4.0), 1e-11));

        let g = Gdms::doubling_halves();
        assert!(close(g.lyapunov(1.0, 1e-14).unwrap(), LOG2, 1e-11));
    }

    #[test]
    fn family_is_linear_in_t() {
        let g = Arc::new(Gdms::half_quarter());
        let fam = g.geometric_family();
        let p = fam.at(1.75).unwrap();
        for (a, b) in p.values().iter().zip(fam.derivative().values()) {
            assert!(close(*a, 1.75 * b, 1e-15));
        }
    }

    #[test]
    fn construction_rejections() {
        let shift = Arc::new(Subshift::full(2).unwrap());
        // Expanding branch.
        let err = Gdms::affine(
            shift.clone(),
            vec![AffineMap::new(1.5, 0.0), AffineMap::new(0.5, 0.5)],
            Interval::unit(),
        )
        .unwrap_err();
        assert!(matches!(err, GdmsError::NotContracting { edge: 0, .. }));

        // Overlapping image interiors.
        let err = Gdms::affine(
            shift.clone(),
            vec![AffineMap::new(0.6, 0.0), AffineMap::new(0.6, 0.4)],
            Interval::unit(),
        )
        .unwrap_err();
        assert!(matches!(err, GdmsError::OverlappingImages { a: 0, b: 1 }));

        // Image leaving the seed interval.
        let err = Gdms::affine(
            shift.clone(),
            vec![AffineMap::new(0.4, 0.0), AffineMap::new(0.4, 0.8)],
            Interval::unit(),
        )
        .unwrap_err();
        assert!(matches!(err, GdmsError::ImageEscapesDomain { .. }));

        // Wrong number of maps.
        let err =
            Gdms::affine(shift, vec![AffineMap::new(0.4, 0.0)], Interval::unit()).unwrap_err();
        assert!(matches!(err, GdmsError::MapCountMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn table_systems_have_spectra_but_no_geometry() {
        let shift = Arc::new(Subshift::full(2).unwrap());
        let v = -log3();
        let g = Gdms::from_cylinder_derivatives(
            shift.clone(),
            1,
            vec![v, v],
            vec![v + 0.01, v + 0.01],
            vec![v - 0.01, v - 0.01],
        )
        .unwrap();
        assert!(close(g.pressure(1.0).unwrap(), LOG2 - log3(), 1e-12));
        assert!(g.bdp_constant() > 1.0 && g.bdp_constant() < 1.03);
        let w = shift.word(&[0]).unwrap();
        assert!(matches!(g.project(&w), Err(GdmsError::GeometryUnavailable)));

        // Sup below inf is rejected; so is an expanding entry.
        let err = Gdms::from_cylinder_derivatives(
            shift.clone(),
            1,
            vec![v, v],
            vec![v - 1.0, v],
            vec![v, v],
        )
        .unwrap_err();
        assert!(matches!(err, GdmsError::BadDerivativeTable { index: 0 }));
        let err = Gdms::from_cylinder_derivatives(shift, 1, vec![0.1, v], vec![0.2, v], vec![
            0.0, v,
        ])
        .unwrap_err();
        assert!(matches!(err, GdmsError::BadDerivativeTable { index: 0 }));
    }

    #[test]
    fn inadmissible_projection_rejected() {
        let g = Gdms::golden_mean_thirds();
        let err = g.project(&Word::raw(vec![crate::Letter(0), crate::Letter(0)])).unwrap_err();
        assert!(matches!(err, GdmsError::Symbolic(SymbolicError::InadmissiblePair { .. })));
    }
}
