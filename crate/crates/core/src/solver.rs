//! Meta-strategy solver for the restricted two-player game.
//!
//! Both players run simultaneous entropic mirror *ascent* on their expected
//! payoff: `w ← w ⊙ exp(η ∇u)`, renormalized. The update is carried out on
//! log-weights so nothing overflows, and weights are floored at the smallest
//! positive normal value so no strategy ever receives exactly zero mass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::types::{Gid, UtilityMatrix, WeightDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterateSelection {
    /// Uniform average of the iterates.
    #[default]
    Average,
    /// Final iterate.
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SolverConfig<T> {
    pub eta: T,
    pub max_iters: usize,
    pub tolerance: T,
    pub smoothing_gamma: T,
    #[serde(default)]
    pub iterate: IterateSelection,
    /// Refine the mirror-ascent output by solving the indifference conditions
    /// on the supports it identifies, keeping the refinement only when it
    /// lowers exploitability.
    #[serde(default = "default_polish")]
    pub polish: bool,
}

fn default_polish() -> bool {
    true
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            eta: T::lit(0.1),
            max_iters: 10_000,
            tolerance: T::lit(1e-8),
            smoothing_gamma: T::lit(0.1),
            iterate: IterateSelection::Average,
            polish: true,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > T::zero()) {
            return Err(Error::invalid("eta must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > T::zero()) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        check_gamma(self.smoothing_gamma)
    }
}

fn check_gamma<T: Scalar>(gamma: T) -> Result<()> {
    if !(gamma >= T::zero() && gamma <= T::one()) {
        return Err(Error::invalid(format!("smoothing gamma {gamma} is outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "iterations")]
pub enum SolveStatus {
    Converged(usize),
    NotConverged(usize),
}

impl SolveStatus {
    pub fn converged(&self) -> bool {
        matches!(self, SolveStatus::Converged(_))
    }

    pub fn iterations(&self) -> usize {
        match *self {
            SolveStatus::Converged(n) | SolveStatus::NotConverged(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Equilibrium<T> {
    pub weights_a: WeightDistribution<T>,
    pub weights_b: WeightDistribution<T>,
    pub status: SolveStatus,
    pub exploitability: T,
}

struct Player<T> {
    logits: Vec<T>,
    weights: Vec<T>,
    sum: Vec<T>,
}

impl<T: Scalar> Player<T> {
    fn new(n: usize) -> Self {
        let w = T::one() / T::from_usize_lossy(n);
        Self {
            logits: vec![T::zero(); n],
            weights: vec![w; n],
            sum: vec![w; n],
        }
    }

    fn step(&mut self, eta: T, grad: &[T]) {
        for (l, &g) in self.logits.iter_mut().zip(grad) {
            *l = *l + eta * g;
        }
        let max = self
            .logits
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max);
        // keep logits bounded; softmax is shift invariant
        for l in self.logits.iter_mut() {
            *l = *l - max;
        }
        let floor = T::min_positive_value();
        let mut total = T::zero();
        for (w, &l) in self.weights.iter_mut().zip(&self.logits) {
            *w = l.exp().max(floor);
            total = total + *w;
        }
        for (w, s) in self.weights.iter_mut().zip(self.sum.iter_mut()) {
            *w = *w / total;
            *s = *s + *w;
        }
    }

    fn average(&self, count: usize) -> Vec<T> {
        let c = T::from_usize_lossy(count);
        let mut avg: Vec<T> = self.sum.iter().map(|&s| s / c).collect();
        let total: T = avg.iter().copied().sum();
        avg.iter_mut().for_each(|x| *x = *x / total);
        avg
    }
}

fn linf<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

/// Approximate Nash equilibrium of the bimatrix game by simultaneous entropic
/// mirror ascent from uniform strategies.
///
/// Stops once both selected iterates (averaged by default) move less than the
/// tolerance in L∞ between iterations, or after `max_iters`. Running out of
/// iterations is reported through [`SolveStatus::NotConverged`].
pub fn solve_equilibrium<T: Scalar>(
    m: &UtilityMatrix<T>,
    cfg: &SolverConfig<T>,
) -> Result<Equilibrium<T>> {
    solve_equilibrium_observed(m, cfg, |_, _, _| {})
}

/// Same as [`solve_equilibrium`], calling `observe(t, w_a, w_b)` with the raw
/// iterates after every step.
pub fn solve_equilibrium_observed<T: Scalar>(
    m: &UtilityMatrix<T>,
    cfg: &SolverConfig<T>,
    mut observe: impl FnMut(usize, &[T], &[T]),
) -> Result<Equilibrium<T>> {
    cfg.validate()?;
    m.validate()?;
    if m.is_empty() {
        return Err(Error::invalid("cannot solve an empty game"));
    }
    let (rows, cols) = m.shape();
    let mut a = Player::new(rows);
    let mut b = Player::new(cols);
    let mut prev_a = a.weights.clone();
    let mut prev_b = b.weights.clone();
    let mut status = SolveStatus::NotConverged(cfg.max_iters);
    for t in 1..=cfg.max_iters {
        let grad_a = m.row_values(&b.weights);
        let grad_b = m.col_values(&a.weights);
        a.step(cfg.eta, &grad_a);
        b.step(cfg.eta, &grad_b);
        observe(t, &a.weights, &b.weights);
        let (cur_a, cur_b) = match cfg.iterate {
            IterateSelection::Average => (a.average(t + 1), b.average(t + 1)),
            IterateSelection::Last => (a.weights.clone(), b.weights.clone()),
        };
        let done = linf(&cur_a, &prev_a) < cfg.tolerance && linf(&cur_b, &prev_b) < cfg.tolerance;
        prev_a = cur_a;
        prev_b = cur_b;
        if done {
            status = SolveStatus::Converged(t);
            break;
        }
    }
    let (mut best_a, mut best_b) = (prev_a, prev_b);
    if cfg.polish {
        let (ga, gb) = deviation_gains(m, &best_a, &best_b)?;
        let mut best_gap = ga + gb;
        let iterates = [
            (best_a.clone(), best_b.clone()),
            (a.weights.clone(), b.weights.clone()),
        ];
        for (x, y) in polish_candidates(m, &iterates) {
            let (ga, gb) = deviation_gains(m, &x, &y)?;
            if ga + gb < best_gap {
                best_gap = ga + gb;
                best_a = x;
                best_b = y;
            }
        }
        if best_gap > T::lit(T::SIMPLEX_TOL) {
            if let Some((x, y, gap)) = support_search(m, &iterates) {
                if gap < best_gap {
                    best_a = x;
                    best_b = y;
                }
            }
        }
    }
    let weights_a = WeightDistribution::from_parts(m.rows(), &best_a)?;
    let weights_b = WeightDistribution::from_parts(m.cols(), &best_b)?;
    let exploitability = exploitability(m, &weights_a, &weights_b)?;
    Ok(Equilibrium {
        weights_a,
        weights_b,
        status,
        exploitability,
    })
}

const SUPPORT_THRESHOLDS: [f64; 5] = [0.1, 0.05, 1e-2, 1e-3, 1e-4];

/// Candidate supports read off one iterate: threshold cuts plus every
/// prefix of the indices ranked by weight.
fn candidate_supports<T: Scalar>(w: &[T]) -> Vec<Vec<usize>> {
    let mut ranked: Vec<usize> = (0..w.len()).collect();
    ranked.sort_by(|&i, &j| w[j].partial_cmp(&w[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut push = |mut s: Vec<usize>| {
        s.sort_unstable();
        if !s.is_empty() && !out.contains(&s) {
            out.push(s);
        }
    };
    for &theta in &SUPPORT_THRESHOLDS {
        let theta = T::lit(theta);
        push((0..w.len()).filter(|&i| w[i] >= theta).collect());
    }
    for k in 1..=ranked.len() {
        push(ranked[..k].to_vec());
    }
    out
}

fn argmax<T: Scalar>(v: &[T]) -> usize {
    (0..v.len())
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if v[b] >= v[i] => Some(b),
            _ => Some(i),
        })
        .unwrap_or(0)
}

/// Exact solutions of the indifference conditions on supports suggested by
/// the given iterates, plus pure best-response pairs seeded by each
/// iterate's leading strategies. Infeasible solutions are dropped.
fn polish_candidates<T: Scalar>(
    m: &UtilityMatrix<T>,
    iterates: &[(Vec<T>, Vec<T>)],
) -> Vec<(Vec<T>, Vec<T>)> {
    let (rows, cols) = m.shape();
    let mut pairs: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut add = |pair: (Vec<usize>, Vec<usize>)| {
        if !pairs.contains(&pair) {
            pairs.push(pair);
        }
    };
    let pure = |n: usize, i: usize| {
        let mut v = vec![T::zero(); n];
        v[i] = T::one();
        v
    };
    for (x, y) in iterates {
        let sx = candidate_supports(x);
        let sy = candidate_supports(y);
        for a in &sx {
            for b in sy.iter().filter(|b| b.len() == a.len()) {
                add((a.clone(), b.clone()));
            }
        }
        let i = argmax(x);
        add((vec![i], vec![argmax(&m.col_values(&pure(rows, i)))]));
        let k = argmax(y);
        add((vec![argmax(&m.row_values(&pure(cols, k)))], vec![k]));
    }
    pairs.iter().filter_map(|(sa, sb)| solve_supports(m, sa, sb)).collect()
}

fn solve_supports<T: Scalar>(
    m: &UtilityMatrix<T>,
    sa: &[usize],
    sb: &[usize],
) -> Option<(Vec<T>, Vec<T>)> {
    let (rows, cols) = m.shape();
    let yb = indifference(sa, sb, |i, c| m.a(i, c))?;
    let xa = indifference(sb, sa, |c, i| m.b(i, c))?;
    Some((expand(rows, sa, &xa)?, expand(cols, sb, &yb)?))
}

/// Equal-size support pairs one step away: swap one index on either side,
/// or grow or shrink both supports by one.
fn support_neighbours(n_a: usize, n_b: usize, sa: &[usize], sb: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    fn swaps(n: usize, s: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![s.to_vec()];
        for pos in 0..s.len() {
            for j in (0..n).filter(|j| !s.contains(j)) {
                let mut t = s.to_vec();
                t[pos] = j;
                t.sort_unstable();
                out.push(t);
            }
        }
        out
    }
    fn grow(n: usize, s: &[usize]) -> Vec<Vec<usize>> {
        (0..n)
            .filter(|j| !s.contains(j))
            .map(|j| {
                let mut t = s.to_vec();
                t.push(j);
                t.sort_unstable();
                t
            })
            .collect()
    }
    fn shrink(s: &[usize]) -> Vec<Vec<usize>> {
        if s.len() < 2 {
            return Vec::new();
        }
        (0..s.len())
            .map(|pos| {
                let mut t = s.to_vec();
                t.remove(pos);
                t
            })
            .collect()
    }
    let mut out = Vec::new();
    let sw_b = swaps(n_b, sb);
    for a in swaps(n_a, sa) {
        for b in &sw_b {
            out.push((a.clone(), b.clone()));
        }
    }
    let gr_b = grow(n_b, sb);
    for a in grow(n_a, sa) {
        for b in &gr_b {
            out.push((a.clone(), b.clone()));
        }
    }
    let sh_b = shrink(sb);
    for a in shrink(sa) {
        for b in &sh_b {
            out.push((a.clone(), b.clone()));
        }
    }
    out
}

type Profile<T> = (Vec<T>, Vec<T>, T);

/// Greedy descent on exploitability over equal-size support pairs, seeded
/// with every ranked-prefix pair of the given iterates.
fn support_search<T: Scalar>(m: &UtilityMatrix<T>, iterates: &[(Vec<T>, Vec<T>)]) -> Option<Profile<T>> {
    let (rows, cols) = m.shape();
    let eval = |sa: &[usize], sb: &[usize]| -> Option<Profile<T>> {
        let (x, y) = solve_supports(m, sa, sb)?;
        let (ga, gb) = deviation_gains(m, &x, &y).ok()?;
        Some((x, y, ga + gb))
    };
    let ranked = |w: &[T]| {
        let mut r: Vec<usize> = (0..w.len()).collect();
        r.sort_by(|&i, &j| w[j].partial_cmp(&w[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
        r
    };
    let tol = T::lit(T::SIMPLEX_TOL);
    let mut best: Option<Profile<T>> = None;
    for (x, y) in iterates {
        let (rx, ry) = (ranked(x), ranked(y));
        for k in 1..=rows.min(cols) {
            let mut sa = rx[..k].to_vec();
            let mut sb = ry[..k].to_vec();
            sa.sort_unstable();
            sb.sort_unstable();
            let mut current: Option<Profile<T>> = eval(&sa, &sb);
            for _ in 0..rows + cols {
                let mut step: Option<(Vec<usize>, Vec<usize>, Profile<T>)> = None;
                for (na, nb) in support_neighbours(rows, cols, &sa, &sb) {
                    if let Some(p) = eval(&na, &nb) {
                        let better_than_step = step.as_ref().is_none_or(|s| p.2 < s.2 .2);
                        let better_than_current = current.as_ref().is_none_or(|c| p.2 < c.2);
                        if better_than_step && better_than_current {
                            step = Some((na, nb, p));
                        }
                    }
                }
                match step {
                    Some((na, nb, p)) => {
                        sa = na;
                        sb = nb;
                        current = Some(p);
                    }
                    None => break,
                }
            }
            if let Some(c) = current {
                if best.as_ref().is_none_or(|b| c.2 < b.2) {
                    let done = c.2 <= tol;
                    best = Some(c);
                    if done {
                        return best;
                    }
                }
            }
        }
    }
    best
}

/// `γ·Uniform + (1−γ)·w`.
pub fn smooth_weights<T: Scalar>(
    w: &WeightDistribution<T>,
    gamma: T,
) -> Result<WeightDistribution<T>> {
    check_gamma(gamma)?;
    w.validate()?;
    let u = T::one() / T::from_usize_lossy(w.len());
    let entries = w
        .entries()
        .iter()
        .map(|(g, x)| (g.clone(), gamma * u + (T::one() - gamma) * *x))
        .collect();
    WeightDistribution::new(entries)
}

/// Per-player deviation gains `(A, B)`; both are clamped at zero.
pub fn deviation_gains<T: Scalar>(m: &UtilityMatrix<T>, w_a: &[T], w_b: &[T]) -> Result<(T, T)> {
    let (rows, cols) = m.shape();
    if w_a.len() != rows || w_b.len() != cols {
        return Err(Error::invalid(format!(
            "weights of length ({}, {}) do not match a {rows}x{cols} game",
            w_a.len(),
            w_b.len()
        )));
    }
    let rv = m.row_values(w_b);
    let cv = m.col_values(w_a);
    let (ua, ub) = m.expected(w_a, w_b);
    let best_a = rv.iter().copied().fold(T::neg_infinity(), T::max);
    let best_b = cv.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(((best_a - ua).max(T::zero()), (best_b - ub).max(T::zero())))
}

/// Sum of both players' best unilateral gains; zero exactly at a Nash
/// equilibrium of the restricted game.
pub fn exploitability<T: Scalar>(
    m: &UtilityMatrix<T>,
    w_a: &WeightDistribution<T>,
    w_b: &WeightDistribution<T>,
) -> Result<T> {
    if !w_a.indexes(m.rows()) || !w_b.indexes(m.cols()) {
        return Err(Error::invalid("weights do not index the matrix rows and columns"));
    }
    let (ga, gb) = deviation_gains(m, &w_a.values(), &w_b.values())?;
    Ok(ga + gb)
}

pub const BRUTE_FORCE_MAX: usize = 4;

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Mixes over `support_mix` (the mixing player's support) so that the other
/// player is indifferent across `support_other`. `payoff(i, k)` is the other
/// player's payoff when they play `i` and the mixer plays `k`.
fn indifference<T: Scalar>(
    support_other: &[usize],
    support_mix: &[usize],
    payoff: impl Fn(usize, usize) -> T,
) -> Option<Vec<T>> {
    let s = support_mix.len();
    let mut mat = Vec::with_capacity(s + 1);
    let mut rhs = Vec::with_capacity(s + 1);
    for &i in support_other {
        let mut row: Vec<T> = support_mix.iter().map(|&k| payoff(i, k)).collect();
        row.push(-T::one());
        mat.push(row);
        rhs.push(T::zero());
    }
    let mut last = vec![T::one(); s];
    last.push(T::zero());
    mat.push(last);
    rhs.push(T::one());
    linalg::solve(mat, rhs).map(|mut x| {
        x.truncate(s);
        x
    })
}

fn expand<T: Scalar>(n: usize, support: &[usize], probs: &[T]) -> Option<Vec<T>> {
    let tol = T::lit(T::SIMPLEX_TOL);
    let mut out = vec![T::zero(); n];
    for (&i, &p) in support.iter().zip(probs) {
        if p < -tol {
            return None;
        }
        out[i] = p.max(T::zero());
    }
    let total: T = out.iter().copied().sum();
    if total <= T::zero() {
        return None;
    }
    out.iter_mut().for_each(|x| *x = *x / total);
    Some(out)
}

/// Every equilibrium found by equal-size support enumeration, in
/// lexicographic support order (by size, then row support, then column
/// support).
pub fn enumerate_equilibria<T: Scalar>(m: &UtilityMatrix<T>) -> Result<Vec<(Vec<T>, Vec<T>)>> {
    m.validate()?;
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return Err(Error::invalid("cannot solve an empty game"));
    }
    if rows > BRUTE_FORCE_MAX || cols > BRUTE_FORCE_MAX {
        return Err(Error::UnsupportedSize(format!(
            "support enumeration handles at most {BRUTE_FORCE_MAX}x{BRUTE_FORCE_MAX}, got {rows}x{cols}"
        )));
    }
    let tol = T::lit(T::SIMPLEX_TOL);
    let mut found = Vec::new();
    for k in 1..=rows.min(cols) {
        for sa in combinations(rows, k) {
            for sb in combinations(cols, k) {
                let Some(yb) = indifference(&sa, &sb, |i, c| m.a(i, c)) else {
                    continue;
                };
                let Some(xa) = indifference(&sb, &sa, |c, i| m.b(i, c)) else {
                    continue;
                };
                let (Some(x), Some(y)) = (expand(rows, &sa, &xa), expand(cols, &sb, &yb)) else {
                    continue;
                };
                let (ga, gb) = deviation_gains(m, &x, &y)?;
                if ga <= tol && gb <= tol {
                    found.push((x, y));
                }
            }
        }
    }
    Ok(found)
}

/// Exact equilibrium by support enumeration: the first one in lexicographic
/// support order. Games are limited to 4x4.
pub fn brute_force_equilibrium<T: Scalar>(
    m: &UtilityMatrix<T>,
) -> Result<(WeightDistribution<T>, WeightDistribution<T>)> {
    let all = enumerate_equilibria(m)?;
    let (x, y) = all.into_iter().next().ok_or_else(|| {
        Error::invalid("support enumeration found no equilibrium (degenerate game)")
    })?;
    Ok((
        WeightDistribution::from_parts(m.rows(), &x)?,
        WeightDistribution::from_parts(m.cols(), &y)?,
    ))
}

/// Uniform distribution helper used by callers that build weights by index.
pub fn uniform_over<T: Scalar>(gids: &[Gid]) -> Result<WeightDistribution<T>> {
    WeightDistribution::uniform(gids)
}
