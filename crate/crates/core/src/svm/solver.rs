//! Dual solver for the all-pairs multi-class SVM with per-class biases.
//!
//! Primal, for classes `m` and training points `(x_i, d_i)`:
//!
//! ```text
//! min ½ Σ_m |w_m|² + γ Σ_i Σ_{m≠d_i} p_i^m
//! s.t. (w_{d_i}·x_i - b_{d_i}) - (w_m·x_i - b_m) >= 1 - p_i^m,  p_i^m >= 0
//! ```
//!
//! Dual variables `α_i^m ∈ [0, γ]` (one per point and wrong class) define the
//! expansion coefficients `c_{i,d_i} = Σ_m α_i^m`, `c_{i,m} = -α_i^m`, and the
//! biases impose `Σ_i c_{i,m} = 0` for every class. Moving `α_i^r` up adds flow
//! along the class edge `r → d_i`, so a feasible step is a cycle in the class
//! graph. Each iteration picks the best variable for every class edge, takes
//! the simple cycle with the largest mean first-order gain and performs an
//! exact, box-clipped line search along it. The biases are recovered at the end
//! as node potentials of the same graph.

use crate::error::{Error, Result};

use super::kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the largest mean gain over all cycles is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Record the dual objective after every iteration.
    pub record_objective: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-5,
            max_iterations: 100_000,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// `alpha[i][m]`; the entry for the point's own class is unused and zero.
    pub alpha: Vec<Vec<f64>>,
    /// Expansion coefficients `c[i][m]`.
    pub coef: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest mean cycle gain at exit.
    pub violation: f64,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Move {
    point: usize,
    /// The wrong class `r` of variable `α_point^r`.
    other: usize,
    up: bool,
    gain: f64,
}

impl Move {
    fn same_variable(&self, o: &Move) -> bool {
        self.point == o.point && self.other == o.other
    }
}

/// Best and runner-up moves along one directed class edge.
#[derive(Debug, Clone, Copy, Default)]
struct EdgeBest {
    first: Option<Move>,
    second: Option<Move>,
}

impl EdgeBest {
    fn offer(&mut self, mv: Move) {
        match self.first {
            Some(f) if mv.gain <= f.gain => {
                if self.second.is_none_or(|s| mv.gain > s.gain) {
                    self.second = Some(mv);
                }
            }
            _ => {
                self.second = self.first;
                self.first = Some(mv);
            }
        }
    }
}

/// All simple directed cycles of the complete graph on `n` nodes, each listed
/// once starting from its smallest node.
pub(crate) fn simple_cycles(n: usize) -> Vec<Vec<usize>> {
    fn extend(path: &mut Vec<usize>, used: &mut [bool], n: usize, out: &mut Vec<Vec<usize>>) {
        if path.len() >= 2 {
            out.push(path.clone());
        }
        for next in path[0] + 1..n {
            if !used[next] {
                used[next] = true;
                path.push(next);
                extend(path, used, n, out);
                path.pop();
                used[next] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut used = vec![false; n];
    for start in 0..n {
        used[start] = true;
        extend(&mut vec![start], &mut used, n, &mut out);
        used[start] = false;
    }
    out
}

struct Problem<'a> {
    labels: &'a [usize],
    n_classes: usize,
    gamma: f64,
    gram: Vec<f64>,
}

impl Problem<'_> {
    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.labels.len() + j]
    }
}

struct State {
    alpha: Vec<Vec<f64>>,
    coef: Vec<Vec<f64>>,
    /// `f[i][m] = Σ_j c[j][m] K(j, i)`.
    f: Vec<Vec<f64>>,
}

impl State {
    fn objective(&self) -> f64 {
        let sum_alpha: f64 = self.alpha.iter().flatten().sum();
        let norm: f64 = self
            .coef
            .iter()
            .zip(&self.f)
            .map(|(c, f)| c.iter().zip(f).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        sum_alpha - 0.5 * norm
    }
}

fn best_edges(p: &Problem, st: &State) -> Vec<EdgeBest> {
    let l = p.n_classes;
    let mut edges = vec![EdgeBest::default(); l * l];
    for (i, &d) in p.labels.iter().enumerate() {
        for r in (0..l).filter(|&r| r != d) {
            let a = st.alpha[i][r];
            let grad = 1.0 - (st.f[i][d] - st.f[i][r]);
            if a < p.gamma {
                edges[r * l + d].offer(Move {
                    point: i,
                    other: r,
                    up: true,
                    gain: grad,
                });
            }
            if a > 0.0 {
                edges[d * l + r].offer(Move {
                    point: i,
                    other: r,
                    up: false,
                    gain: -grad,
                });
            }
        }
    }
    edges
}

/// Best move assignment for a cycle and its total gain.
fn cycle_moves(cycle: &[usize], edges: &[EdgeBest], l: usize) -> Option<(Vec<Move>, f64)> {
    let edge = |a: usize, b: usize| &edges[a * l + b];
    if cycle.len() == 2 {
        let (e1, e2) = (edge(cycle[0], cycle[1]), edge(cycle[1], cycle[0]));
        let (a1, b1) = (e1.first?, e2.first?);
        if !a1.same_variable(&b1) {
            return Some((vec![a1, b1], a1.gain + b1.gain));
        }
        let alt1 = e2.second.map(|b2| (a1, b2));
        let alt2 = e1.second.map(|a2| (a2, b1));
        let pick = match (alt1, alt2) {
            (Some(x), Some(y)) => {
                if y.0.gain + y.1.gain > x.0.gain + x.1.gain {
                    y
                } else {
                    x
                }
            }
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => return None,
        };
        return Some((vec![pick.0, pick.1], pick.0.gain + pick.1.gain));
    }
    let mut moves = Vec::with_capacity(cycle.len());
    let mut total = 0.0;
    for (j, &from) in cycle.iter().enumerate() {
        let to = cycle[(j + 1) % cycle.len()];
        let mv = edge(from, to).first?;
        total += mv.gain;
        moves.push(mv);
    }
    Some((moves, total))
}

/// The cycle with the largest mean gain, as (moves, mean gain).
fn most_violating(p: &Problem, cycles: &[Vec<usize>], edges: &[EdgeBest]) -> Option<(Vec<Move>, f64)> {
    let mut best: Option<(Vec<Move>, f64)> = None;
    for cycle in cycles {
        if let Some((moves, total)) = cycle_moves(cycle, edges, p.n_classes) {
            let mean = total / cycle.len() as f64;
            if best.as_ref().is_none_or(|(_, b)| mean > *b) {
                best = Some((moves, mean));
            }
        }
    }
    best
}

/// `±1` change of `c[point][class]` per unit step of a move.
fn coef_deltas(mv: &Move, labels: &[usize]) -> [(usize, f64); 2] {
    let s = if mv.up { 1.0 } else { -1.0 };
    [(labels[mv.point], s), (mv.other, -s)]
}

fn step(p: &Problem, st: &mut State, moves: &[Move]) {
    let gain: f64 = moves.iter().map(|m| m.gain).sum();
    let mut curvature = 0.0;
    for a in moves {
        for b in moves {
            let mut overlap = 0.0;
            for (ca, sa) in coef_deltas(a, p.labels) {
                for (cb, sb) in coef_deltas(b, p.labels) {
                    if ca == cb {
                        overlap += sa * sb;
                    }
                }
            }
            if overlap != 0.0 {
                curvature += overlap * p.k(a.point, b.point);
            }
        }
    }
    let room = |m: &Move| {
        let a = st.alpha[m.point][m.other];
        if m.up {
            p.gamma - a
        } else {
            a
        }
    };
    let rooms: Vec<f64> = moves.iter().map(room).collect();
    let max_step = rooms.iter().copied().fold(f64::INFINITY, f64::min);
    let t = if curvature > 1e-12 {
        (gain / curvature).min(max_step)
    } else {
        max_step
    };
    if !(t > 0.0) {
        return;
    }
    let n = p.labels.len();
    for (mv, r) in moves.iter().zip(rooms) {
        let at_bound = r <= t;
        let a = &mut st.alpha[mv.point][mv.other];
        *a = if at_bound {
            if mv.up {
                p.gamma
            } else {
                0.0
            }
        } else if mv.up {
            *a + t
        } else {
            *a - t
        };
        for (class, s) in coef_deltas(mv, p.labels) {
            let delta = s * t;
            st.coef[mv.point][class] += delta;
            for j in 0..n {
                st.f[j][class] += delta * p.k(mv.point, j);
            }
        }
    }
}

/// Node potentials `b` with `gain + b_q - b_p <= eps` on every move `p → q`;
/// the average of the largest and smallest such solutions anchored at class 0,
/// shifted to sum to zero.
fn potentials(edges: &[EdgeBest], l: usize, eps: f64) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; l * l];
    for p in 0..l {
        dist[p * l + p] = 0.0;
        for q in 0..l {
            if p != q {
                if let Some(mv) = edges[p * l + q].first {
                    dist[p * l + q] = eps - mv.gain;
                }
            }
        }
    }
    for via in 0..l {
        for p in 0..l {
            for q in 0..l {
                let through = dist[p * l + via] + dist[via * l + q];
                if through < dist[p * l + q] {
                    dist[p * l + q] = through;
                }
            }
        }
    }
    let mut b: Vec<f64> = (0..l)
        .map(|q| {
            let hi = dist[q]; // largest b_q - b_0
            let lo = -dist[q * l]; // smallest b_q - b_0
            match (hi.is_finite(), lo.is_finite()) {
                (true, true) => 0.5 * (hi + lo),
                (true, false) => hi,
                (false, true) => lo,
                (false, false) => 0.0,
            }
        })
        .collect();
    let shift = b.iter().sum::<f64>() / l as f64;
    b.iter_mut().for_each(|v| *v -= shift);
    b
}

/// Solves the dual for class indices `labels[i] ∈ 0..n_classes`.
pub fn solve(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    gamma: f64,
    kernel: &Kernel,
    options: &SolverOptions,
) -> Result<DualSolution> {
    let n = features.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    if n_classes < 2 || labels.iter().any(|&d| d >= n_classes) {
        return Err(Error::Precondition("labels must index at least two classes".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Precondition(format!("regularization must be positive, got {gamma}")));
    }
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.apply(&features[i], &features[j]);
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    let p = Problem {
        labels,
        n_classes,
        gamma,
        gram,
    };
    let mut st = State {
        alpha: vec![vec![0.0; n_classes]; n],
        coef: vec![vec![0.0; n_classes]; n],
        f: vec![vec![0.0; n_classes]; n],
    };
    let cycles = simple_cycles(n_classes);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut violation;
    loop {
        let edges = best_edges(&p, &st);
        let best = most_violating(&p, &cycles, &edges);
        violation = best.as_ref().map_or(0.0, |(_, v)| v.max(0.0));
        if violation <= options.tolerance {
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        let (moves, _) = best.expect("positive violation implies a cycle");
        step(&p, &mut st, &moves);
        iterations += 1;
        if options.record_objective {
            trace.push(st.objective());
        }
    }
    let edges = best_edges(&p, &st);
    let biases = potentials(&edges, n_classes, violation + 1e-12);
    let objective = st.objective();
    Ok(DualSolution {
        alpha: st.alpha,
        coef: st.coef,
        biases,
        iterations,
        converged,
        violation,
        objective,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_enumeration() {
        assert_eq!(simple_cycles(2), vec![vec![0, 1]]);
        let c3 = simple_cycles(3);
        assert_eq!(c3.len(), 5);
        assert!(c3.contains(&vec![0, 2, 1]));
        assert_eq!(simple_cycles(4).len(), 20);
    }

    #[test]
    fn two_points_hard_margin() {
        let x = vec![vec![-1.0], vec![1.0]];
        let sol = solve(&x, &[0, 1], 2, 1e3, &Kernel::Linear, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.alpha[0][1] - 0.25).abs() < 1e-9);
        assert!((sol.alpha[1][0] - 0.25).abs() < 1e-9);
        assert!(sol.biases.iter().all(|b| b.abs() < 1e-9));
        assert!((sol.objective - 0.25).abs() < 1e-12);
    }

    #[test]
    fn equality_constraints_hold() {
        let x: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![(i as f64 * 1.7).sin() * 3.0, (i as f64 * 0.9).cos() * 2.0])
            .collect();
        let y: Vec<usize> = (0..9).map(|i| i % 3).collect();
        let sol = solve(&x, &y, 3, 0.5, &Kernel::Linear, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        for m in 0..3 {
            let s: f64 = sol.coef.iter().map(|c| c[m]).sum();
            assert!(s.abs() < 1e-12);
        }
        for (i, c) in sol.coef.iter().enumerate() {
            assert!(c.iter().sum::<f64>().abs() < 1e-12);
            for m in 0..3 {
                assert!((0.0..=0.5).contains(&sol.alpha[i][m]));
            }
        }
    }
}
