//! Stationary vectors, distances, mixing times, traces, curvature.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::math;

use super::wasserstein::{self, MetricSpec};
use super::{DistVector, Grid, TransitionMatrix};

/// ½ Σ|μ_g − ν_g|.
pub fn tv_distance(mu: &DistVector, nu: &DistVector) -> Result<f64> {
    if mu.grid() != nu.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(tv_slices(mu.weights(), nu.weights()))
}

pub(crate) fn tv_slices(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| math::abs(x - y)).sum::<f64>()
}

/// Grid realization of the perturbation size δ: the worst row-wise TV
/// distance between the one-step laws.
pub fn kernel_delta(p: &TransitionMatrix, q: &TransitionMatrix) -> Result<f64> {
    if p.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    let mut worst: f64 = 0.0;
    for g in 0..p.cells() {
        worst = worst.max(tv_slices(p.row(g), q.row(g)));
    }
    Ok(worst)
}

/// Closed communicating classes of the positive-entry digraph.
///
/// A class is closed when no edge leaves it; two or more closed classes
/// mean the stationary distribution is not unique.
fn closed_classes(p: &Mat) -> Vec<Vec<usize>> {
    let n = p.n();
    // Tarjan SCC, iterative.
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp_of = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0usize;

    // explicit DFS stack: (node, next child to try)
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            let mut advanced = false;
            while *child < n {
                let w = *child;
                *child += 1;
                if p.get(v, w) <= 0.0 {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                    advanced = true;
                    break;
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            }
            if advanced {
                continue;
            }
            // finished v
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp_of[w] = comps.len();
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comps.push(comp);
            }
            call.pop();
            if let Some(&mut (u, _)) = call.last_mut() {
                low[u] = low[u].min(low[v]);
            }
        }
    }

    // a component is closed iff no positive edge leaves it
    let mut closed = Vec::new();
    for (ci, comp) in comps.iter().enumerate() {
        let mut is_closed = true;
        'outer: for &v in comp {
            for w in 0..n {
                if p.get(v, w) > 0.0 && comp_of[w] != ci {
                    is_closed = false;
                    break 'outer;
                }
            }
        }
        if is_closed {
            closed.push(comp.clone());
        }
    }
    closed
}

/// Stationary distribution `π` with `‖πP − π‖₁ ≤ 1e-10`.
///
/// Errors with the closed-class list when the matrix has more than one
/// closed class (the fixed point is not unique).
pub fn stationary(p: &TransitionMatrix) -> Result<DistVector> {
    let n = p.cells();
    let classes = closed_classes(p.mat());
    if classes.len() != 1 {
        let mut sorted: Vec<Vec<usize>> = classes
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        sorted.sort();
        return Err(Error::Reducible { closed_classes: sorted });
    }

    // Solve (Pᵀ − I)π = 0 with the last row replaced by the normalization.
    let mut a = p.mat().transpose();
    for i in 0..n {
        let v = a.get(i, i) - 1.0;
        a.set(i, i, v);
    }
    for j in 0..n {
        a.set(n - 1, j, 1.0);
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut pi = linalg::solve(&a, &rhs)?;

    // scrub solver noise, keeping the simplex constraints exact
    for v in pi.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-9 {
                return Err(Error::NotConverged { what: "stationary solve", residual: -*v });
            }
            *v = 0.0;
        }
    }
    let z: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= z;
    }

    let res: f64 = p
        .mat()
        .vec_mat(&pi)
        .iter()
        .zip(&pi)
        .map(|(a, b)| math::abs(a - b))
        .sum();
    if res > 1e-10 {
        return Err(Error::NotConverged { what: "stationary fixed point", residual: res });
    }
    DistVector::new(*p.grid(), pi)
}

pub const DEFAULT_T_MAX: u64 = 1_000_000;

/// Worst-start TV distance to stationarity after applying `powm`.
fn worst_distance(powm: &Mat, pi: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for g in 0..powm.n() {
        worst = worst.max(tv_slices(powm.row(g), pi));
    }
    worst
}

/// Smallest `t` with `max_g ‖P^t(g,·) − π‖_TV < 1/4`.
///
/// `d(t)` is non-increasing, so the search brackets by repeated squaring and
/// then walks the binary representation; only O(log τ) matrix multiplies.
pub fn mixing_time(p: &TransitionMatrix, t_max: u64) -> Result<u64> {
    let pi = stationary(p)?;
    mixing_time_with(p, pi.weights(), t_max)
}

/// `mixing_time` against a precomputed stationary vector.
pub fn mixing_time_with(p: &TransitionMatrix, pi: &[f64], t_max: u64) -> Result<u64> {
    let eye = Mat::identity(p.cells());
    if worst_distance(&eye, pi) < 0.25 {
        return Ok(0);
    }
    // squarings[k] = P^{2^k}
    let mut squarings = vec![p.mat().clone()];
    let mut t: u64 = 1;
    loop {
        let cur = squarings.last().unwrap();
        if worst_distance(cur, pi) < 0.25 {
            break;
        }
        if t >= t_max {
            return Err(Error::NotMixedWithinCap { t_max, distance_at_cap: worst_distance(cur, pi) });
        }
        let next = cur.matmul(cur);
        squarings.push(next);
        t *= 2;
    }
    let k = squarings.len() - 1;
    if k == 0 {
        return Ok(1); // d(1) < 1/4
    }
    // largest t with d(t) ≥ 1/4 lies in [2^{k-1}, 2^k)
    let mut below = squarings[k - 1].clone();
    let mut t_below = 1u64 << (k - 1);
    for j in (0..k - 1).rev() {
        let cand = below.matmul(&squarings[j]);
        if worst_distance(&cand, pi) >= 0.25 {
            below = cand;
            t_below += 1 << j;
        }
    }
    Ok(t_below + 1)
}

/// Trace (watched) chain on the cells of `keep`: closed-form absorption
/// algebra `P_S = P_SS + P_SC (I − P_CC)⁻¹ P_CS`.
pub fn trace_kernel(p: &TransitionMatrix, keep: &[bool]) -> Result<TransitionMatrix> {
    if keep.len() != p.cells() {
        return Err(Error::GridMismatch);
    }
    let s_idx: Vec<usize> = (0..p.cells()).filter(|&g| keep[g]).collect();
    let c_idx: Vec<usize> = (0..p.cells()).filter(|&g| !keep[g]).collect();
    if s_idx.is_empty() {
        return Err(Error::Parameter("trace set must be nonempty".into()));
    }
    if c_idx.is_empty() {
        return Ok(p.clone());
    }
    let ns = s_idx.len();
    let nc = c_idx.len();

    // (I - P_CC), factored once for the nc right-hand sides of P_CS
    let mut i_m_pcc = Mat::zeros(nc);
    for (a, &ga) in c_idx.iter().enumerate() {
        for (b, &gb) in c_idx.iter().enumerate() {
            let v = if a == b { 1.0 } else { 0.0 } - p.mat().get(ga, gb);
            i_m_pcc.set(a, b, v);
        }
    }
    let lu = linalg::Lu::new(&i_m_pcc).map_err(|_| {
        Error::Parameter("trace set is not reachable from its complement (absorbing escape)".into())
    })?;

    // columns of (I − P_CC)⁻¹ P_CS
    let mut absorbed = vec![vec![0.0; ns]; nc];
    for (sj, &gs) in s_idx.iter().enumerate() {
        let rhs: Vec<f64> = c_idx.iter().map(|&gc| p.mat().get(gc, gs)).collect();
        let col = lu.solve(&rhs);
        for (ci, v) in col.into_iter().enumerate() {
            absorbed[ci][sj] = v;
        }
    }

    let mut out = Mat::zeros(ns);
    for (si, &gs_from) in s_idx.iter().enumerate() {
        for (sj, &gs_to) in s_idx.iter().enumerate() {
            let mut v = p.mat().get(gs_from, gs_to);
            for (ci, &gc) in c_idx.iter().enumerate() {
                v += p.mat().get(gs_from, gc) * absorbed[ci][sj];
            }
            out.set(si, sj, v);
        }
    }
    // renormalize away the LU round-off, then validate
    for si in 0..ns {
        let row = out.row_mut(si);
        let sum: f64 = row.iter().sum();
        if math::abs(sum - 1.0) > 1e-8 {
            return Err(Error::NotConverged { what: "trace row normalization", residual: math::abs(sum - 1.0) });
        }
        for v in row.iter_mut() {
            *v = (*v / sum).max(0.0);
        }
    }
    // the traced chain lives on a relabeled grid of the kept cells; keep the
    // physical span for reporting but the cell count matches the kept set
    let sub_grid = Grid::new(
        p.grid().center(s_idx[0]) - 0.5 * p.grid().h(),
        p.grid().center(*s_idx.last().unwrap()) + 0.5 * p.grid().h(),
        ns,
    )?;
    TransitionMatrix::from_parts(out, sub_grid, p.inner())
}

/// Which state pairs the curvature minimizes over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairScope {
    /// Adjacent cells only. Exact for path-geodesic metrics (Euclidean on a
    /// 1-D grid); a cheap lower-resolution probe otherwise.
    Adjacent,
    /// Every pair.
    AllPairs,
}

/// Coarse Ricci curvature `κ = min_{x≠y} (1 − W(P(x,·), P(y,·))/d(x,y))`.
pub fn curvature(p: &TransitionMatrix, metric: MetricSpec, scope: PairScope) -> Result<f64> {
    let grid = *p.grid();
    let mut kappa = f64::INFINITY;
    let pairs: Vec<(usize, usize)> = match scope {
        PairScope::Adjacent => (1..p.cells()).map(|g| (g - 1, g)).collect(),
        PairScope::AllPairs => {
            let mut v = Vec::new();
            for a in 0..p.cells() {
                for b in a + 1..p.cells() {
                    v.push((a, b));
                }
            }
            v
        }
    };
    for (a, b) in pairs {
        let d = metric.dist(grid.center(a), grid.center(b));
        let w = wasserstein::wasserstein_slices(p.row(a), p.row(b), &grid, metric)?;
        kappa = kappa.min(1.0 - w / d);
    }
    Ok(kappa)
}

/// Eccentricity `E(x_g) = Σ_j d(x_g, x_j) π_j`.
pub fn eccentricity(pi: &DistVector, metric: MetricSpec, g: usize) -> f64 {
    let c = pi.grid().center(g);
    pi.weights()
        .iter()
        .enumerate()
        .map(|(j, &w)| w * metric.dist(c, pi.grid().center(j)))
        .sum()
}
