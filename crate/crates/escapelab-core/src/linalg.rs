//! Crate-internal sparse linear algebra: CSR matrices, Perron eigendata by
//! power iteration with Collatz-Wielandt certification, strongly connected
//! components, and a least-squares line fit.
//!
//! Everything here works on plain `f64` entries; callers that need log-domain
//! weights keep their own additive offset and feed scaled entries.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LinalgError {
    /// Power iteration did not certify the eigenvalue within the budget.
    NoConvergence { residual: f64, iterations: usize },
    /// The matrix has no nonzero entry; there is no Perron eigenvalue to find.
    ZeroMatrix,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoConvergence { residual, iterations } => write!(
                f,
                "eigensolver did not converge after {iterations} iterations \
                 (last relative residual {residual:.3e})"
            ),
            Self::ZeroMatrix => write!(f, "matrix has no nonzero entries"),
        }
    }
}

impl core::error::Error for LinalgError {}

/// Compressed sparse row matrix with nonnegative entries.
#[derive(Debug, Clone)]
pub(crate) struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    /// Builds from per-row `(column, value)` lists; entries with value 0 are
    /// dropped. Columns within a row must be strictly increasing.
    pub(crate) fn from_rows(n: usize, rows: impl Iterator<Item = Vec<(u32, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                debug_assert!((c as usize) < n && v >= 0.0);
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        assert_eq!(row_ptr.len(), n + 1, "row count mismatch");
        Self { n, row_ptr, cols, vals }
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// `y = M x`.
    pub(crate) fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[idx] * x[self.cols[idx] as usize];
            }
            y[i] = acc;
        }
    }

    /// `y = Mᵀ x`.
    pub(crate) fn tr_matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.fill(0.0);
        for i in 0..self.n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.cols[idx] as usize] += self.vals[idx] * xi;
            }
        }
    }

    /// Submatrix on `keep` (sorted node ids); returns it together with the
    /// kept ids so callers can map the small indexing back.
    pub(crate) fn submatrix(&self, keep: &[u32]) -> Csr {
        debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        let mut dense_of: Vec<u32> = vec![u32::MAX; self.n];
        for (small, &node) in keep.iter().enumerate() {
            dense_of[node as usize] = small as u32;
        }
        let rows = keep.iter().map(|&node| {
            self.row(node as usize)
                .filter_map(|(c, v)| {
                    let small = dense_of[c as usize];
                    (small != u32::MAX).then_some((small, v))
                })
                .collect()
        });
        Csr::from_rows(keep.len(), rows)
    }

    /// Strongly connected components of the nonzero pattern, emitted in
    /// reverse topological order of the condensation (sinks first). Each
    /// component's node list is sorted ascending.
    pub(crate) fn sccs(&self) -> Vec<Vec<u32>> {
        // Iterative Tarjan; the state graph can be ~2^20 nodes, so no
        // recursion.
        const UNVISITED: u32 = u32::MAX;
        let n = self.n;
        let mut index = vec![UNVISITED; n];
        let mut low = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<u32> = Vec::new();
        let mut next_index: u32 = 0;
        let mut comps: Vec<Vec<u32>> = Vec::new();
        // Work stack frames: (node, next edge offset within the row).
        let mut work: Vec<(u32, usize)> = Vec::new();
        for root in 0..n as u32 {
            if index[root as usize] != UNVISITED {
                continue;
            }
            work.push((root, 0));
            while let Some(&mut (v, ref mut edge)) = work.last_mut() {
                let vi = v as usize;
                if *edge == 0 {
                    index[vi] = next_index;
                    low[vi] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[vi] = true;
                }
                let row_start = self.row_ptr[vi];
                let row_end = self.row_ptr[vi + 1];
                let mut advanced = false;
                while row_start + *edge < row_end {
                    let w = self.cols[row_start + *edge] as usize;
                    *edge += 1;
                    if index[w] == UNVISITED {
                        work.push((w as u32, 0));
                        advanced = true;
                        break;
                    } else if on_stack[w] {
                        low[vi] = low[vi].min(index[w]);
                    }
                }
                if advanced {
                    continue;
                }
                // Row exhausted: close the frame.
                work.pop();
                if let Some(&mut (parent, _)) = work.last_mut() {
                    let pi = parent as usize;
                    low[pi] = low[pi].min(low[vi]);
                }
                if low[vi] == index[vi] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w as usize] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
        comps
    }

    /// Whether node `i` has an edge to itself.
    pub(crate) fn has_self_loop(&self, i: usize) -> bool {
        self.row(i).any(|(c, _)| c as usize == i)
    }
}

/// Perron eigendata certified by Collatz-Wielandt pinching.
#[derive(Debug, Clone)]
pub(crate) struct PowerResult {
    /// Leading eigenvalue (shift already removed).
    pub lambda: f64,
    /// Right eigenvector, sup-norm 1, entrywise nonnegative.
    pub right: Vec<f64>,
    /// Left eigenvector, sup-norm 1, entrywise nonnegative.
    pub left: Vec<f64>,
    /// Final relative sup-norm residual, max of the two iterations.
    pub residual: f64,
    /// Crude relative spectral gap `1 - |λ₂|/λ` from one deflated step.
    pub gap_estimate: f64,
    pub iterations: usize,
}

/// Leading eigendata of an irreducible nonnegative matrix by power iteration
/// from the all-ones vector.
///
/// `shift` adds `shift · I` during iteration (removed from the reported
/// eigenvalue); a positive shift makes periodic irreducible patterns
/// converge. Convergence is certified by the Collatz-Wielandt bounds: for a
/// positive vector `v`, the true eigenvalue lies between the smallest and
/// largest ratio `(Mv)_i / v_i`, so the iteration stops once the bracket is
/// relatively narrower than `tol`.
pub(crate) fn leading_eigen(
    m: &Csr,
    tol: f64,
    max_iter: usize,
    shift: f64,
) -> Result<PowerResult, LinalgError> {
    if m.nnz() == 0 {
        return Err(LinalgError::ZeroMatrix);
    }
    let (lambda_r, right, res_r, it_r) = one_sided(m, false, tol, max_iter, shift)?;
    let (lambda_l, left, res_l, it_l) = one_sided(m, true, tol, max_iter, shift)?;
    // Both sides bracket the same eigenvalue; keep the mean and fold the
    // disagreement into the reported residual.
    let lambda = 0.5 * (lambda_r + lambda_l);
    let residual = res_r.max(res_l).max((lambda_r - lambda_l).abs() / lambda.max(f64::MIN_POSITIVE));
    let gap_estimate = deflated_gap(m, lambda, &right, &left);
    Ok(PowerResult {
        lambda: lambda - shift,
        right,
        left,
        residual,
        gap_estimate,
        iterations: it_r.max(it_l),
    })
}

fn one_sided(
    m: &Csr,
    transpose: bool,
    tol: f64,
    max_iter: usize,
    shift: f64,
) -> Result<(f64, Vec<f64>, f64, usize), LinalgError> {
    let n = m.n();
    let mut v = vec![1.0f64; n];
    let mut w = vec![0.0f64; n];
    let mut last_residual = f64::INFINITY;
    for it in 1..=max_iter {
        if transpose {
            m.tr_matvec(&v, &mut w);
        } else {
            m.matvec(&v, &mut w);
        }
        if shift != 0.0 {
            for (wi, vi) in w.iter_mut().zip(v.iter()) {
                *wi += shift * vi;
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..n {
            if v[i] > 0.0 {
                let r = w[i] / v[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        if !(hi > 0.0) {
            return Err(LinalgError::ZeroMatrix);
        }
        let lambda = 0.5 * (lo + hi);
        let mut resid: f64 = 0.0;
        for i in 0..n {
            resid = resid.max((w[i] - lambda * v[i]).abs());
        }
        let norm = w.iter().fold(0.0f64, |a, &x| a.max(x));
        for x in w.iter_mut() {
            *x /= norm;
        }
        core::mem::swap(&mut v, &mut w);
        last_residual = resid / lambda;
        if lo.is_finite() && (hi - lo) <= tol * lambda {
            return Ok((lambda, v, last_residual, it));
        }
    }
    Err(LinalgError::NoConvergence { residual: last_residual, iterations: max_iter })
}

/// One deflated power step: removes the Perron component from a probe vector
/// using the left eigenvector, applies the matrix once, and reads off a
/// magnitude estimate for the second eigenvalue. Diagnostic only.
fn deflated_gap(m: &Csr, lambda: f64, right: &[f64], left: &[f64]) -> f64 {
    let n = m.n();
    let uv: f64 = left.iter().zip(right).map(|(u, v)| u * v).sum();
    if uv <= 0.0 || n < 2 {
        return 1.0;
    }
    // An alternating probe is rarely parallel to the (positive) Perron
    // vector; fall back to a basis vector if deflation still annihilates it.
    let probes = [true, false];
    for &alternating in &probes {
        let probe = |i: usize| -> f64 {
            if alternating {
                if i % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            } else if i == 0 {
                1.0
            } else {
                0.0
            }
        };
        let ux: f64 = left.iter().enumerate().map(|(i, &u)| u * probe(i)).sum();
        let c = ux / uv;
        let x: Vec<f64> = (0..n).map(|i| probe(i) - c * right[i]).collect();
        let norm_x = x.iter().fold(0.0f64, |a, &t| a.max(t.abs()));
        if norm_x < 1e-12 {
            continue;
        }
        let mut y = vec![0.0; n];
        m.matvec(&x, &mut y);
        let norm_y = y.iter().fold(0.0f64, |a, &t| a.max(t.abs()));
        let lambda2 = norm_y / norm_x;
        return (1.0 - lambda2 / lambda).clamp(0.0, 1.0);
    }
    1.0
}

/// Ordinary least squares for `y ≈ intercept + slope · x`; also returns the
/// residual sum of squares. Requires at least two distinct abscissae.
pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    Some((intercept, slope, rss))
}

/// Accelerated limit of a ratio sequence indexed by a shrinking scale.
///
/// `rows` pairs each level's scale (a hole measure, say) with the ratio
/// whose limit is wanted, ordered from coarse to fine. Aitken acceleration
/// of the last three usable rows gives the limit; a power-law fit of
/// `|ratio − limit|` against the scale over the finer half gives the
/// correction exponent and coefficient. Returns `(limit, exponent,
/// coefficient, reliable)`, where `reliable` means the residuals shrink
/// monotonically over the fitted tail. Fewer than three usable rows yield
/// the last ratio, no fit, and an unreliable flag.
pub(crate) fn accelerate_ratio_limit(
    rows: &[(f64, f64)],
) -> (Option<f64>, Option<f64>, Option<f64>, bool) {
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .copied()
        .filter(|&(scale, ratio)| scale > 0.0 && ratio.is_finite())
        .collect();
    if usable.len() < 3 {
        return (usable.last().map(|&(_, r)| r), None, None, false);
    }
    let r: Vec<f64> = usable.iter().map(|&(_, ratio)| ratio).collect();
    let k = r.len() - 1;
    let d1 = r[k - 1] - r[k - 2];
    let d2 = r[k] - r[k - 1];
    let denom = d2 - d1;
    let scale = r[k].abs().max(1.0);
    let limit = if denom.abs() <= 1e-14 * scale {
        r[k]
    } else {
        let aitken = r[k] - d2 * d2 / denom;
        if aitken.is_finite() { aitken } else { r[k] }
    };
    let tail = &usable[usable.len() / 2..];
    let errors: Vec<f64> = tail.iter().map(|&(_, ratio)| (ratio - limit).abs()).collect();
    let mut reliable = true;
    for pair in errors.windows(2) {
        if pair[1] > pair[0] * (1.0 + 1e-9) + 1e-14 {
            reliable = false;
        }
    }
    if errors.iter().any(|&e| e < 1e-13) {
        // Converged to rounding level: the power-law fit is meaningless.
        return (Some(limit), None, None, reliable);
    }
    let xs: Vec<f64> = tail.iter().map(|&(s, _)| libm::log(s)).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| libm::log(e)).collect();
    match fit_line(&xs, &ys) {
        Some((intercept, slope, _)) => {
            (Some(limit), Some(slope), Some(libm::exp(intercept)), reliable)
        }
        None => (Some(limit), None, None, reliable),
    }
}

/// Streaming log-sum-exp accumulator: folds terms given by their logarithm
/// and reports the log of the sum without overflow.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    pub(crate) fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    pub(crate) fn add(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.max {
            self.sum += libm::exp(log_term - self.max);
        } else {
            self.sum = self.sum * libm::exp(self.max - log_term) + 1.0;
            self.max = log_term;
        }
    }

    /// Log of the accumulated sum; negative infinity when nothing was added.
    pub(crate) fn log_value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + libm::log(self.sum)
        }
    }
}
