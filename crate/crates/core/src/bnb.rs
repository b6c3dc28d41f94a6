//! Depth-first branch-and-bound over the simplex relaxation.

use std::rc::Rc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{LinModel, Sense, VarId};
use crate::simplex::{LpStatus, SimplexConfig, SimplexError, Tableau};

/// Which child of a branching is explored first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChildOrder {
    FloorFirst,
    CeilFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpConfig {
    pub int_tol: f64,
    /// Pruning / optimality gap, applied as `max(gap_tol, gap_tol * |incumbent|)`.
    pub gap_tol: f64,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
    pub child_order: ChildOrder,
    /// Re-solve children from the parent's final tableau with the dual
    /// simplex instead of from scratch.
    pub warm_start: bool,
    pub simplex: SimplexConfig,
}

impl Default for MilpConfig {
    fn default() -> Self {
        Self {
            int_tol: 1e-6,
            gap_tol: 1e-6,
            node_limit: None,
            time_limit: None,
            child_order: ChildOrder::FloorFirst,
            warm_start: true,
            simplex: SimplexConfig::default(),
        }
    }
}

impl MilpConfig {
    /// Stable one-line rendering, used for config hashes in reports.
    pub fn describe(&self) -> String {
        format!(
            "int_tol={:e};gap_tol={:e};node_limit={:?};time_limit={:?};child_order={:?};warm_start={};feas_tol={:e};opt_tol={:e};pivot_tol={:e};bland_factor={}",
            self.int_tol,
            self.gap_tol,
            self.node_limit,
            self.time_limit.map(|d| d.as_millis()),
            self.child_order,
            self.warm_start,
            self.simplex.feas_tol,
            self.simplex.opt_tol,
            self.simplex.pivot_tol,
            self.simplex.bland_factor,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    /// The root relaxation is unbounded.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Incumbent values, one per model variable; empty if none was found.
    pub x: Vec<f64>,
    /// Incumbent objective in the model's sense; NaN if none.
    pub objective: f64,
    /// Best proven bound on the optimum, in the model's sense.
    pub bound: f64,
    /// `|bound - objective| / max(1, |objective|)`.
    pub gap: f64,
    pub nodes: usize,
    pub lp_solves: usize,
    pub simplex_iterations: usize,
    /// Nodes where the warm restart was unavailable and a cold solve ran.
    pub cold_restarts: usize,
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("node or time limit reached after {} nodes (incumbent {}, bound {})", .0.nodes, .0.objective, .0.bound)]
    LimitReached(Box<MilpResult>),
    #[error(transparent)]
    Numerical(#[from] SimplexError),
}

struct Node {
    /// Cumulative bound overrides `(var, lb, ub)` relative to the root model.
    bounds: Vec<(usize, f64, f64)>,
    /// Relaxation value of the parent, in maximisation form.
    parent_bound: f64,
    warm: Option<Rc<Tableau>>,
}

fn frac_dist(v: f64) -> f64 {
    let f = v - v.floor();
    f.min(1.0 - f)
}

/// Solves a mixed-integer model by branch-and-bound.
pub fn solve_milp(model: &LinModel, config: &MilpConfig) -> Result<MilpResult, MilpError> {
    // the clock is only read under a time limit (wasm32 has no `Instant`)
    let deadline = config.time_limit.map(|l| (Instant::now(), l));
    let sign = match model.objective().sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let integral: Vec<usize> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind.is_integral())
        .map(|(i, _)| i)
        .collect();

    let mut incumbent: Option<(Vec<f64>, f64)> = None; // (x, max-form value)
    let mut nodes = 0usize;
    let mut lp_solves = 0usize;
    let mut iterations = 0usize;
    let mut cold_restarts = 0usize;
    let mut stack = vec![Node {
        bounds: Vec::new(),
        parent_bound: f64::INFINITY,
        warm: None,
    }];

    let prune_tol = |inc: f64| config.gap_tol.max(config.gap_tol * inc.abs());

    let finish = |status: MilpStatus,
                  incumbent: Option<(Vec<f64>, f64)>,
                  bound_max: f64,
                  stats: (usize, usize, usize, usize)| {
        let (x, obj_max) = incumbent.unwrap_or((Vec::new(), f64::NAN));
        let objective = sign * obj_max;
        let bound = sign * bound_max;
        let gap = if obj_max.is_nan() {
            f64::INFINITY
        } else {
            (bound - objective).abs() / objective.abs().max(1.0)
        };
        MilpResult {
            status,
            x,
            objective,
            bound,
            gap,
            nodes: stats.0,
            lp_solves: stats.1,
            simplex_iterations: stats.2,
            cold_restarts: stats.3,
        }
    };

    while let Some(mut node) = stack.pop() {
        if let Some((_, inc)) = &incumbent {
            if node.parent_bound <= inc + prune_tol(*inc) {
                continue;
            }
        }
        let over_nodes = config.node_limit.is_some_and(|l| nodes >= l);
        let over_time = deadline.is_some_and(|(t0, l)| t0.elapsed() >= l);
        if over_nodes || over_time {
            let open = stack.iter().map(|n| n.parent_bound).fold(node.parent_bound, f64::max);
            let bound = incumbent.as_ref().map_or(open, |(_, v)| open.max(*v));
            let r = finish(
                MilpStatus::Optimal,
                incumbent,
                bound,
                (nodes, lp_solves, iterations, cold_restarts),
            );
            return Err(MilpError::LimitReached(Box::new(r)));
        }
        nodes += 1;

        let (status, tableau, iters) = solve_node(model, config, &node.bounds, node.warm.take(), &mut cold_restarts)?;
        lp_solves += 1;
        iterations += iters;
        match status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.bounds.is_empty() {
                    return Ok(finish(
                        MilpStatus::Unbounded,
                        None,
                        f64::INFINITY,
                        (nodes, lp_solves, iterations, cold_restarts),
                    ));
                }
                // a child of a bounded relaxation cannot be unbounded
                continue;
            }
            LpStatus::Optimal => {}
        }
        let x = tableau.primal();
        let value = sign * model.objective_value(&x);
        if let Some((_, inc)) = &incumbent {
            if value <= inc + prune_tol(*inc) {
                continue;
            }
        }

        // highest priority class first, most fractional within it, lowest index on ties
        let mut branch: Option<(usize, f64)> = None;
        let mut best = (i32::MIN, config.int_tol);
        for &j in &integral {
            let d = frac_dist(x[j]);
            let p = model.var(VarId(j)).priority;
            if d > config.int_tol && (p > best.0 || (p == best.0 && d > best.1)) {
                best = (p, d);
                branch = Some((j, x[j]));
            }
        }
        let Some((j, v)) = branch else {
            incumbent = Some((x, value));
            continue;
        };

        let (lb, ub) = node
            .bounds
            .iter()
            .rev()
            .find(|b| b.0 == j)
            .map_or((model.var(VarId(j)).lb, model.var(VarId(j)).ub), |b| (b.1, b.2));
        let warm = if config.warm_start {
            Some(Rc::new(tableau))
        } else {
            None
        };
        let mut floor_child = node.bounds.clone();
        floor_child.push((j, lb, v.floor()));
        let mut ceil_child = node.bounds;
        ceil_child.push((j, v.ceil(), ub));
        let floor_node = Node {
            bounds: floor_child,
            parent_bound: value,
            warm: warm.clone(),
        };
        let ceil_node = Node {
            bounds: ceil_child,
            parent_bound: value,
            warm,
        };
        // LIFO: push the child explored second first
        match config.child_order {
            ChildOrder::FloorFirst => {
                stack.push(ceil_node);
                stack.push(floor_node);
            }
            ChildOrder::CeilFirst => {
                stack.push(floor_node);
                stack.push(ceil_node);
            }
        }
    }

    let stats = (nodes, lp_solves, iterations, cold_restarts);
    Ok(match incumbent {
        Some((x, v)) => finish(MilpStatus::Optimal, Some((x, v)), v, stats),
        None => finish(MilpStatus::Infeasible, None, f64::NAN, stats),
    })
}

fn solve_node(
    model: &LinModel,
    config: &MilpConfig,
    bounds: &[(usize, f64, f64)],
    warm: Option<Rc<Tableau>>,
    cold_restarts: &mut usize,
) -> Result<(LpStatus, Tableau, usize), SimplexError> {
    if let (Some(parent), Some(&(j, lb, ub))) = (warm, bounds.last()) {
        let mut t = Rc::try_unwrap(parent).unwrap_or_else(|rc| (*rc).clone());
        let before = t.iterations();
        t.set_bounds(j, lb, ub);
        if let Some(status) = t.reoptimize()? {
            let iters = t.iterations() - before;
            return Ok((status, t, iters));
        }
        *cold_restarts += 1;
    }
    let mut m = model.clone();
    for &(j, lb, ub) in bounds {
        m.set_bounds(VarId(j), lb, ub).expect("branching keeps bounds ordered");
    }
    let mut t = Tableau::new(&m, config.simplex);
    let status = t.solve()?;
    let iters = t.iterations();
    Ok((status, t, iters))
}
