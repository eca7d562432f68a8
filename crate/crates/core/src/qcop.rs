//! Weights of the common descent vector.
//!
//! The weights solve `min ‖Σ αᵢ gᵢ‖²` over the unit simplex, i.e. they pick
//! the minimum-norm element of the convex hull of the objective gradients.
//! Two objectives have a closed form ([`alpha_two`]); more objectives go
//! through a Frank-Wolfe iteration on the Gram matrix ([`solve_qcop`]).
//! [`min_norm_oracle`] is a brute-force grid search kept for verification.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::descent::dot;
use crate::moo::AlphaVector;

/// Initial losses at or below this are treated as degenerate.
pub const DEGENERATE_LOSS: f64 = 1e-12;
/// `‖g₁ − g₂‖²` at or below this makes the two-objective problem degenerate.
pub const DEGENERATE_GAP: f64 = 1e-18;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 250;

/// Per-objective gradients of one shared parameter vector, plus the
/// empirical maximum losses used to normalize them.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    grads: Vec<Vec<f64>>,
    initial_losses: Vec<f64>,
}

impl GradientBundle {
    pub fn new(grads: Vec<Vec<f64>>, initial_losses: Vec<f64>) -> Result<Self> {
        if grads.is_empty() {
            return Err(Error::contract("gradient bundle needs at least one gradient"));
        }
        Error::check_len("gradient bundle losses", grads.len(), initial_losses.len())?;
        let dim = grads[0].len();
        if dim == 0 {
            return Err(Error::contract("gradients must have length >= 1"));
        }
        for g in &grads {
            Error::check_len("gradient bundle", dim, g.len())?;
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::contract("gradient contains non-finite entries"));
            }
        }
        if initial_losses.iter().any(|l| !l.is_finite()) {
            return Err(Error::contract("initial losses must be finite"));
        }
        Ok(Self {
            grads,
            initial_losses,
        })
    }

    /// Bundle whose initial losses are all 1, i.e. normalization is a no-op.
    pub fn unnormalized(grads: Vec<Vec<f64>>) -> Result<Self> {
        let n = grads.len();
        Self::new(grads, vec![1.0; n])
    }

    pub fn grads(&self) -> &[Vec<f64>] {
        &self.grads
    }

    pub fn initial_losses(&self) -> &[f64] {
        &self.initial_losses
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grads[0].len()
    }

    /// Entries flagged degenerate (initial loss ≤ [`DEGENERATE_LOSS`]).
    pub fn degenerate(&self) -> Vec<bool> {
        self.initial_losses
            .iter()
            .map(|&l| l <= DEGENERATE_LOSS)
            .collect()
    }

    /// Divides every gradient by its initial loss. The returned bundle has
    /// unit initial losses; the flags mark objectives passed through as-is.
    pub fn normalized(&self) -> Result<(GradientBundle, Vec<bool>)> {
        let mut flags = Vec::with_capacity(self.len());
        let mut grads = Vec::with_capacity(self.len());
        for (g, &l) in self.grads.iter().zip(&self.initial_losses) {
            let n = normalize_gradient(g, l)?;
            flags.push(n.degenerate);
            grads.push(n.grad);
        }
        Ok((GradientBundle::unnormalized(grads)?, flags))
    }

    /// Gram matrix `Gᵢⱼ = gᵢ·gⱼ`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.len();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(&self.grads[i], &self.grads[j]);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGradient {
    pub grad: Vec<f64>,
    /// The initial loss was ≤ [`DEGENERATE_LOSS`] and the gradient was
    /// passed through unchanged.
    pub degenerate: bool,
}

/// `g / l_init`, or `g` unchanged with the degenerate flag when `l_init` is
/// (numerically) zero.
pub fn normalize_gradient(g: &[f64], l_init: f64) -> Result<NormalizedGradient> {
    if g.iter().any(|x| !x.is_finite()) || !l_init.is_finite() {
        return Err(Error::contract("normalize_gradient: non-finite input"));
    }
    if l_init <= DEGENERATE_LOSS {
        warn!("initial loss {l_init:e} is degenerate; gradient left unnormalized");
        return Ok(NormalizedGradient {
            grad: g.to_vec(),
            degenerate: true,
        });
    }
    Ok(NormalizedGradient {
        grad: g.iter().map(|x| x / l_init).collect(),
        degenerate: false,
    })
}

/// Weight on the first vector of the min-norm point of segment `[u, v]`,
/// given `u·u`, `u·v`, `v·v`.
fn segment_weight(uu: f64, uv: f64, vv: f64) -> f64 {
    let denom = uu - 2.0 * uv + vv;
    if denom <= DEGENERATE_GAP {
        return 0.5;
    }
    ((vv - uv) / denom).clamp(0.0, 1.0)
}

/// Closed-form two-objective weights `(α, 1 − α)`, α clipped to `[0, 1]`.
pub fn alpha_two(g1: &[f64], g2: &[f64]) -> Result<AlphaVector> {
    Error::check_len("alpha_two", g1.len(), g2.len())?;
    if g1.iter().chain(g2).any(|x| !x.is_finite()) {
        return Err(Error::contract("alpha_two: non-finite gradient"));
    }
    let mut diff_sq = 0.0;
    let mut num = 0.0;
    for (&a, &b) in g1.iter().zip(g2) {
        let d = b - a;
        diff_sq += d * d;
        num += d * b;
    }
    let alpha = if diff_sq <= DEGENERATE_GAP {
        0.5
    } else {
        (num / diff_sq).clamp(0.0, 1.0)
    };
    Ok(AlphaVector::from_raw(vec![alpha, 1.0 - alpha]))
}

/// Solver output plus the diagnostics that go into the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcopSolution {
    pub alpha: AlphaVector,
    /// `‖Σ αᵢ gᵢ‖²` at the returned weights.
    pub norm_sq: f64,
    pub iterations: usize,
    /// Frank-Wolfe duality gap at the returned weights.
    pub gap: f64,
    pub converged: bool,
}

/// Minimum-norm point of the convex hull of the bundle's gradients.
///
/// The caller normalizes the gradients first when normalization is enabled;
/// the bundle's initial losses are not used here.
///
/// Starts from the best pairwise (two-vertex) solution, then runs
/// Frank-Wolfe: pick `t = argminᵢ gᵢ·v` for the current combination `v`,
/// and move along `[v, g_t]` with the exact closed-form line search. Stops
/// once the duality gap or the per-step decrease of `‖v‖²` falls below
/// `tol` relative to `‖v‖²`, or after `max_iters` steps. The iterate is then
/// polished by active-set steps on its support (exact affine min-norm
/// solves); the polished point is kept only if its norm is no larger.
pub fn solve_qcop(bundle: &GradientBundle, tol: f64, max_iters: usize) -> Result<QcopSolution> {
    let n = bundle.len();
    if n < 2 {
        return Err(Error::contract(format!(
            "solve_qcop needs at least two objectives, got {n}"
        )));
    }
    let gram = bundle.gram();
    let g = |i: usize, j: usize| gram[i * n + j];

    // Best pair.
    let mut alpha = vec![0.0; n];
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = segment_weight(g(i, i), g(i, j), g(j, j));
            let cost = a * a * g(i, i) + 2.0 * a * (1.0 - a) * g(i, j) + (1.0 - a) * (1.0 - a) * g(j, j);
            if cost < best {
                best = cost;
                alpha.iter_mut().for_each(|x| *x = 0.0);
                alpha[i] = a;
                alpha[j] = 1.0 - a;
            }
        }
    }

    let mut m_alpha = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut gap;
    loop {
        for (i, out) in m_alpha.iter_mut().enumerate() {
            *out = (0..n).map(|j| g(i, j) * alpha[j]).sum();
        }
        let vv: f64 = dot(&alpha, &m_alpha);
        let (t, vt) = m_alpha
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, x)| if x < acc.1 { (i, x) } else { acc });
        gap = (vv - vt).max(0.0);
        let scale = vv.max(f64::MIN_POSITIVE);
        if gap <= tol * scale {
            converged = true;
            break;
        }
        if iterations >= max_iters {
            break;
        }
        iterations += 1;

        let denom = vv - 2.0 * vt + g(t, t);
        if denom <= DEGENERATE_GAP {
            converged = true;
            break;
        }
        let step = ((vv - vt) / denom).clamp(0.0, 1.0);
        alpha.iter_mut().for_each(|x| *x *= 1.0 - step);
        alpha[t] += step;
        let new_vv = (1.0 - step) * (1.0 - step) * vv + 2.0 * step * (1.0 - step) * vt + step * step * g(t, t);
        if vv - new_vv < tol * scale {
            converged = true;
            // Recompute the gap at the final weights.
            for (i, out) in m_alpha.iter_mut().enumerate() {
                *out = (0..n).map(|j| g(i, j) * alpha[j]).sum();
            }
            let vv = dot(&alpha, &m_alpha);
            let vt = m_alpha.iter().copied().fold(f64::INFINITY, f64::min);
            gap = (vv - vt).max(0.0);
            break;
        }
    }

    // Frank-Wolfe only converges sublinearly; finish with exact active-set
    // steps on the support it found and keep whichever point is better.
    let fw_norm = quad_form(&gram, &alpha);
    if let Some(refined) = refine_on_support(&gram, n, &alpha, tol, max_iters.max(n)) {
        let r_norm = quad_form(&gram, &refined);
        if r_norm <= fw_norm {
            alpha = refined;
            let r_gap = duality_gap(&gram, n, &alpha);
            converged = converged || r_gap <= tol * r_norm.max(f64::MIN_POSITIVE);
            gap = r_gap;
        }
    }

    let alpha = AlphaVector::from_raw(alpha);
    let norm_sq = quad_form(&gram, alpha.as_slice());
    if !converged {
        warn!("frank-wolfe hit {max_iters} iterations with gap {gap:e}");
    }
    Ok(QcopSolution {
        alpha,
        norm_sq,
        iterations,
        gap,
        converged,
    })
}

fn duality_gap(gram: &[f64], n: usize, alpha: &[f64]) -> f64 {
    let m_alpha: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| gram[i * n + j] * alpha[j]).sum())
        .collect();
    let vv = dot(alpha, &m_alpha);
    let vt = m_alpha.iter().copied().fold(f64::INFINITY, f64::min);
    (vv - vt).max(0.0)
}

/// Wolfe-style active-set iterations started from a feasible `alpha`.
/// Returns `None` when an affine subproblem is singular.
fn refine_on_support(
    gram: &[f64],
    n: usize,
    alpha: &[f64],
    tol: f64,
    max_cycles: usize,
) -> Option<Vec<f64>> {
    let mut alpha = alpha.to_vec();
    let mut support: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0).collect();
    for _ in 0..max_cycles {
        // Minor cycles: move toward the affine minimizer of the support,
        // dropping vertices whose weight reaches zero.
        loop {
            let beta = affine_min_norm(gram, n, &support)?;
            if beta.iter().all(|&b| b > 0.0) {
                alpha.iter_mut().for_each(|a| *a = 0.0);
                for (&i, &b) in support.iter().zip(&beta) {
                    alpha[i] = b;
                }
                break;
            }
            let mut theta = 1.0;
            let mut drop = 0;
            for (k, (&i, &b)) in support.iter().zip(&beta).enumerate() {
                if b <= 0.0 {
                    let t = alpha[i] / (alpha[i] - b);
                    if t < theta {
                        theta = t;
                        drop = k;
                    }
                }
            }
            for (&i, &b) in support.iter().zip(&beta) {
                alpha[i] += theta * (b - alpha[i]);
            }
            alpha[support[drop]] = 0.0;
            support.retain(|&i| alpha[i] > 0.0);
            if support.is_empty() {
                return None;
            }
        }

        let m_alpha: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| gram[i * n + j] * alpha[j]).sum())
            .collect();
        let vv = dot(&alpha, &m_alpha);
        let (t, vt) = m_alpha
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, x)| if x < acc.1 { (i, x) } else { acc });
        if vv - vt <= tol * vv.max(f64::MIN_POSITIVE) || support.contains(&t) {
            return Some(alpha);
        }
        support.push(t);
    }
    Some(alpha)
}

/// Minimizer of `βᵀGβ` subject to `Σβ = 1` over the vertices in `support`,
/// from the bordered KKT system. `None` if the system is singular.
fn affine_min_norm(gram: &[f64], n: usize, support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    let size = k + 1;
    let mut a = vec![0.0; size * (size + 1)];
    let w = size + 1;
    let mut scale: f64 = 0.0;
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r * w + c] = gram[i * n + j];
            scale = scale.max(gram[i * n + j].abs());
        }
        a[r * w + k] = 1.0;
        a[k * w + r] = 1.0;
    }
    a[k * w + k + 1] = 1.0;
    let eps = 1e-13 * scale.max(1.0);

    for col in 0..size {
        let piv = (col..size)
            .max_by(|&x, &y| a[x * w + col].abs().total_cmp(&a[y * w + col].abs()))
            .unwrap();
        if a[piv * w + col].abs() <= eps {
            return None;
        }
        if piv != col {
            for c in 0..w {
                a.swap(piv * w + c, col * w + c);
            }
        }
        for r in 0..size {
            if r != col {
                let f = a[r * w + col] / a[col * w + col];
                if f != 0.0 {
                    for c in col..w {
                        a[r * w + c] -= f * a[col * w + c];
                    }
                }
            }
        }
    }
    Some((0..k).map(|r| a[r * w + size] / a[r * w + r]).collect())
}

fn quad_form(gram: &[f64], a: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i] * gram[i * n + j] * a[j];
        }
    }
    s.max(0.0)
}

/// Exhaustive search over the simplex grid with spacing `grid_step`.
/// Refuses more than five objectives.
pub fn min_norm_oracle(bundle: &GradientBundle, grid_step: f64) -> Result<AlphaVector> {
    let n = bundle.len();
    if n > 5 {
        return Err(Error::contract(format!(
            "min_norm_oracle refuses {n} objectives (max 5)"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::contract(format!(
            "grid_step must be in (0, 0.5], got {grid_step}"
        )));
    }
    let steps = (1.0 / grid_step).round() as usize;
    let gram = bundle.gram();

    let mut counts = vec![0usize; n];
    let mut best = (f64::INFINITY, vec![0usize; n]);
    enumerate_compositions(&mut counts, 0, steps, &mut |c| {
        let mut s = 0.0;
        for i in 0..n {
            if c[i] == 0 {
                continue;
            }
            let ci = c[i] as f64;
            for j in 0..n {
                s += ci * gram[i * n + j] * c[j] as f64;
            }
        }
        if s < best.0 {
            best = (s, c.to_vec());
        }
    });
    Ok(AlphaVector::from_raw(
        best.1.iter().map(|&c| c as f64 / steps as f64).collect(),
    ))
}

fn enumerate_compositions(
    counts: &mut [usize],
    pos: usize,
    remaining: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[pos] = c;
        enumerate_compositions(counts, pos + 1, remaining - c, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moo::combine_gradients;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bundle(g: &[&[f64]]) -> GradientBundle {
        GradientBundle::unnormalized(g.iter().map(|x| x.to_vec()).collect()).unwrap()
    }

    fn norm_sq(b: &GradientBundle, a: &AlphaVector) -> f64 {
        let v = combine_gradients(b.grads(), a).unwrap();
        dot(&v, &v)
    }

    fn random_bundle(rng: &mut ChaCha8Rng, n: usize, d: usize) -> GradientBundle {
        GradientBundle::unnormalized(
            (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_gradient(&[2.0, 4.0], 2.0).unwrap();
        assert_eq!(n.grad, vec![1.0, 2.0]);
        assert!(!n.degenerate);

        let n = normalize_gradient(&[2.0, 4.0], 0.0).unwrap();
        assert_eq!(n.grad, vec![2.0, 4.0]);
        assert!(n.degenerate);

        assert!(normalize_gradient(&[f64::NAN], 1.0).is_err());
        assert!(normalize_gradient(&[1.0], f64::INFINITY).is_err());
    }

    #[test]
    fn normalization_is_scale_invariant() {
        let g = [0.3, -1.7, 2.5];
        let base = normalize_gradient(&g, 0.8).unwrap().grad;
        for c in [1e-3, 0.5, 7.0, 1000.0] {
            let scaled: Vec<f64> = g.iter().map(|x| x * c).collect();
            let n = normalize_gradient(&scaled, 0.8 * c).unwrap().grad;
            for (a, b) in n.iter().zip(&base) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn alpha_two_examples() {
        assert_eq!(alpha_two(&[1.0, 0.0], &[0.0, 1.0]).unwrap().as_slice(), &[0.5, 0.5]);

        let a = alpha_two(&[2.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((a[0] - 0.2).abs() < 1e-15 && (a[1] - 0.8).abs() < 1e-15);

        // raw α = ((3−1)·3)/(2²) = 1.5, clipped
        let a = alpha_two(&[1.0, 0.0], &[3.0, 0.0]).unwrap();
        assert_eq!(a.as_slice(), &[1.0, 0.0]);

        assert_eq!(alpha_two(&[1.0, 1.0], &[1.0, 1.0]).unwrap().as_slice(), &[0.5, 0.5]);
        assert!(alpha_two(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn solve_qcop_examples() {
        let e = bundle(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let s = solve_qcop(&e, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        for &a in s.alpha.as_slice() {
            assert!((a - 1.0 / 3.0).abs() < 1e-4, "{:?}", s.alpha);
        }
        assert!((s.norm_sq - 1.0 / 3.0).abs() < 1e-6);

        let b = bundle(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let s = solve_qcop(&b, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert!((s.alpha[0] - 0.2).abs() < 1e-9);
        assert!(s.converged);

        // α is not unique here; only the combined vector is pinned.
        let b = bundle(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]);
        let s = solve_qcop(&b, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let v = combine_gradients(b.grads(), &s.alpha).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-6 && (v[1] - 0.5).abs() < 1e-6);
        assert!((s.norm_sq - 0.5).abs() < 1e-9);
        let oracle = min_norm_oracle(&b, 0.01).unwrap();
        assert!((norm_sq(&b, &oracle) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn solve_qcop_needs_two_objectives() {
        let b = bundle(&[&[1.0, 2.0]]);
        assert!(matches!(solve_qcop(&b, 1e-9, 10), Err(Error::Contract(_))));
    }

    #[test]
    fn non_convergence_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_bundle(&mut rng, 5, 50);
        let s = solve_qcop(&b, 0.0, 1).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 1);
        let full = solve_qcop(&b, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert!(full.norm_sq <= s.norm_sq + 1e-15);
    }

    #[test]
    fn oracle_examples() {
        let b = bundle(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let a = min_norm_oracle(&b, 0.01).unwrap();
        assert!((a[0] - 0.5).abs() < 1e-12);

        let b = bundle(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let a = min_norm_oracle(&b, 0.01).unwrap();
        assert!((a[0] - 0.2).abs() < 1e-12 && (a[1] - 0.8).abs() < 1e-12);

        let six = GradientBundle::unnormalized(vec![vec![1.0]; 6]).unwrap();
        assert!(min_norm_oracle(&six, 0.1).is_err());
        assert!(min_norm_oracle(&b, 0.0).is_err());
        assert!(min_norm_oracle(&b, 0.6).is_err());
    }

    #[test]
    fn solutions_are_on_the_simplex_and_beat_the_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &n in &[2, 3, 5] {
            for &d in &[5, 50] {
                for _ in 0..8 {
                    let b = random_bundle(&mut rng, n, d);
                    let s = solve_qcop(&b, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
                    let sum: f64 = s.alpha.as_slice().iter().sum();
                    assert!((sum - 1.0).abs() <= 1e-9);
                    assert!(s.alpha.as_slice().iter().all(|&a| a >= 0.0));
                    let grid = min_norm_oracle(&b, 0.05).unwrap();
                    assert!(norm_sq(&b, &s.alpha) <= norm_sq(&b, &grid) + 1e-6);
                }
            }
        }
    }

    #[test]
    fn min_norm_point_is_a_common_descent_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &n in &[2, 3, 4] {
            for _ in 0..20 {
                let b = random_bundle(&mut rng, n, 6);
                let s = solve_qcop(&b, 1e-12, 10_000).unwrap();
                let v = combine_gradients(b.grads(), &s.alpha).unwrap();
                let vv = dot(&v, &v);
                for g in b.grads() {
                    assert!(dot(g, &v) >= (1.0 - 1e-6) * vv - 1e-12);
                }
            }
        }
    }

    #[test]
    fn normalized_bundle_flags_degenerate_losses() {
        let b = GradientBundle::new(vec![vec![2.0, 4.0], vec![1.0, 1.0]], vec![2.0, 0.0]).unwrap();
        let (nb, flags) = b.normalized().unwrap();
        assert_eq!(flags, vec![false, true]);
        assert_eq!(nb.grads()[0], vec![1.0, 2.0]);
        assert_eq!(nb.grads()[1], vec![1.0, 1.0]);
        assert_eq!(b.degenerate(), vec![false, true]);
    }
}
