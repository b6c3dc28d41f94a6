//! Two-phase bounded-variable primal simplex on a sparse-row tableau.
//!
//! Every model row `a·x (rel) b` becomes `a·x + s = b` with a logical `s`
//! whose bounds encode the relation. Variable bounds are handled implicitly
//! (nonbasic columns sit at a bound), so branching only touches bounds.
//! Rows whose logical cannot absorb the initial residual get an artificial
//! column; phase 1 drives the artificials to zero.
//!
//! The tableau also supports a dual simplex re-solve after bound changes,
//! which branch-and-bound uses to warm-start child nodes.

use thiserror::Error;

use crate::model::{LinModel, Relation, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    /// Absolute primal feasibility tolerance.
    pub feas_tol: f64,
    /// Reduced-cost optimality tolerance.
    pub opt_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Dantzig pricing switches to Bland's rule after
    /// `bland_factor * (rows + cols)` iterations.
    pub bland_factor: usize,
    /// Hard cap as a multiple of `rows + cols`; exceeding it is a breakdown.
    pub max_iter_factor: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            opt_tol: 1e-9,
            pivot_tol: 1e-10,
            bland_factor: 5,
            max_iter_factor: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub status: LpStatus,
    /// One value per model variable; empty unless `Optimal`.
    pub x: Vec<f64>,
    /// Objective in the model's own sense, offset included; NaN unless `Optimal`.
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("simplex did not terminate after {iterations} iterations with Bland's rule engaged")]
    NumericalBreakdown { iterations: usize },
}

/// Solves `model` as a linear program. With `relax_integrality` false, the
/// integer markers are ignored anyway (a plain LP solve); the flag exists so
/// call sites state their intent.
pub fn solve_lp(model: &LinModel, relax_integrality: bool) -> Result<SimplexResult, SimplexError> {
    let _ = relax_integrality;
    solve_lp_with(model, &SimplexConfig::default())
}

pub fn solve_lp_with(model: &LinModel, cfg: &SimplexConfig) -> Result<SimplexResult, SimplexError> {
    let mut t = Tableau::new(model, *cfg);
    let status = t.solve()?;
    Ok(t.result(model, status))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column resting at zero.
    Free,
}

const DROP_TOL: f64 = 1e-12;

type SparseRow = Vec<(u32, f64)>;

fn row_get(row: &SparseRow, col: usize) -> f64 {
    match row.binary_search_by_key(&(col as u32), |e| e.0) {
        Ok(k) => row[k].1,
        Err(_) => 0.0,
    }
}

/// `dst -= f * src`, with column `skip` forced to zero.
fn row_axpy(dst: &SparseRow, f: f64, src: &SparseRow, skip: u32, out: &mut SparseRow) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < dst.len() || j < src.len() {
        let (c, v) = if j >= src.len() || (i < dst.len() && dst[i].0 < src[j].0) {
            let e = dst[i];
            i += 1;
            e
        } else if i >= dst.len() || src[j].0 < dst[i].0 {
            let e = (src[j].0, -f * src[j].1);
            j += 1;
            e
        } else {
            let e = (dst[i].0, dst[i].1 - f * src[j].1);
            i += 1;
            j += 1;
            e
        };
        if c != skip && v.abs() > DROP_TOL {
            out.push((c, v));
        }
    }
}

/// Working state of one LP. Cloneable so branch-and-bound can hand a
/// solved parent tableau to its children.
#[derive(Debug, Clone)]
pub struct Tableau {
    cfg: SimplexConfig,
    n_struct: usize,
    m: usize,
    lb: Vec<f64>,
    ub: Vec<f64>,
    /// Phase-2 costs in minimisation form.
    cost: Vec<f64>,
    rows: Vec<SparseRow>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    x: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
    scratch: SparseRow,
    phase_one_done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pricing {
    Dantzig,
    Bland,
}

enum Step {
    Optimal,
    Unbounded,
    Progress,
}

impl Tableau {
    pub fn new(model: &LinModel, cfg: SimplexConfig) -> Self {
        let n_struct = model.num_vars();
        let m = model.num_constraints();
        let mut lb: Vec<f64> = model.vars().iter().map(|v| v.lb).collect();
        let mut ub: Vec<f64> = model.vars().iter().map(|v| v.ub).collect();
        let mut cost = vec![0.0; n_struct + m];
        let flip = match model.objective().sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        for &(v, c) in &model.objective().terms {
            cost[v.0] = flip * c;
        }

        let mut state = Vec::with_capacity(n_struct + m);
        let mut x = Vec::with_capacity(n_struct + m);
        for j in 0..n_struct {
            let (s, v) = resting_state(lb[j], ub[j]);
            state.push(s);
            x.push(v);
        }

        for c in model.constraints() {
            let (l, u) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lb.push(l);
            ub.push(u);
        }

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut art_rows = Vec::new();
        for (i, c) in model.constraints().iter().enumerate() {
            let mut row: SparseRow = c.terms.iter().map(|&(v, a)| (v.0 as u32, a)).collect();
            row.sort_unstable_by_key(|e| e.0);
            let activity: f64 = c.terms.iter().map(|&(v, a)| a * x[v.0]).sum();
            let s_col = n_struct + i;
            let resid = c.rhs - activity;
            row.push((s_col as u32, 1.0));
            if resid >= lb[s_col] - cfg.feas_tol && resid <= ub[s_col] + cfg.feas_tol {
                state.push(ColState::Basic);
                x.push(resid);
                basis.push(s_col);
            } else {
                // logical rests at the bound nearest the residual
                let (st, val) = if resid > ub[s_col] {
                    (ColState::AtUpper, ub[s_col])
                } else {
                    (ColState::AtLower, lb[s_col])
                };
                state.push(st);
                x.push(val);
                basis.push(usize::MAX);
                art_rows.push((i, resid - val));
            }
            rows.push(row);
        }

        let n_art = art_rows.len();
        for (k, &(i, gap)) in art_rows.iter().enumerate() {
            let col = n_struct + m + k;
            let sign = gap.signum();
            // a·x + s + sign·art = b, scaled so the artificial has unit coefficient
            let row = &mut rows[i];
            for e in row.iter_mut() {
                e.1 *= sign;
            }
            row.push((col as u32, 1.0));
            basis[i] = col;
            lb.push(0.0);
            ub.push(f64::INFINITY);
            cost.push(0.0);
            state.push(ColState::Basic);
            x.push(gap.abs());
        }

        let ncols = n_struct + m + n_art;
        let mut t = Self {
            cfg,
            n_struct,
            m,
            lb,
            ub,
            cost,
            rows,
            basis,
            state,
            x,
            d: vec![0.0; ncols],
            iterations: 0,
            scratch: Vec::new(),
            phase_one_done: n_art == 0,
        };
        debug_assert_eq!(t.x.len(), ncols);
        if n_art > 0 {
            let c1: Vec<f64> = (0..ncols).map(|j| if j >= n_struct + m { 1.0 } else { 0.0 }).collect();
            t.compute_duals(&c1);
        } else {
            let c2 = t.cost.clone();
            t.compute_duals(&c2);
        }
        t
    }

    fn ncols(&self) -> usize {
        self.x.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn compute_duals(&mut self, c: &[f64]) {
        self.d.clear();
        self.d.extend_from_slice(c);
        for (r, row) in self.rows.iter().enumerate() {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                for &(j, a) in row {
                    self.d[j as usize] -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// Runs phase 1 (if needed) and phase 2 from the current basis.
    pub fn solve(&mut self) -> Result<LpStatus, SimplexError> {
        if !self.phase_one_done {
            let c1: Vec<f64> = (0..self.ncols())
                .map(|j| if j >= self.n_struct + self.m { 1.0 } else { 0.0 })
                .collect();
            self.compute_duals(&c1);
            if let Step::Unbounded = self.primal_loop()? {
                unreachable!("phase-1 objective is bounded below by zero");
            }
            let infeas: f64 = (self.n_struct + self.m..self.ncols()).map(|j| self.x[j]).sum();
            if infeas > self.cfg.feas_tol {
                return Ok(LpStatus::Infeasible);
            }
            self.retire_artificials();
            self.phase_one_done = true;
        }
        let c2 = self.cost.clone();
        self.compute_duals(&c2);
        Ok(match self.primal_loop()? {
            Step::Optimal => LpStatus::Optimal,
            Step::Unbounded => LpStatus::Unbounded,
            Step::Progress => unreachable!(),
        })
    }

    fn retire_artificials(&mut self) {
        for j in self.n_struct + self.m..self.ncols() {
            self.ub[j] = 0.0;
            if self.state[j] != ColState::Basic {
                self.state[j] = ColState::AtLower;
                self.x[j] = 0.0;
            }
        }
    }

    fn iteration_budget(&self) -> (usize, usize) {
        let size = self.m + self.ncols();
        (self.cfg.bland_factor * size, self.cfg.max_iter_factor * size + 10_000)
    }

    fn primal_loop(&mut self) -> Result<Step, SimplexError> {
        let start = self.iterations;
        let (bland_after, cap) = self.iteration_budget();
        loop {
            let done = self.iterations - start;
            if done > cap {
                return Err(SimplexError::NumericalBreakdown {
                    iterations: self.iterations,
                });
            }
            let pricing = if done >= bland_after {
                Pricing::Bland
            } else {
                Pricing::Dantzig
            };
            match self.primal_step(pricing) {
                Step::Progress => self.iterations += 1,
                other => return Ok(other),
            }
        }
    }

    /// Improving direction for nonbasic column `j`, if any.
    fn entering_dir(&self, j: usize) -> Option<f64> {
        let dj = self.d[j];
        let tol = self.cfg.opt_tol;
        match self.state[j] {
            ColState::Basic => None,
            _ if self.lb[j] == self.ub[j] => None,
            ColState::AtLower if dj < -tol => Some(1.0),
            ColState::AtUpper if dj > tol => Some(-1.0),
            ColState::Free if dj.abs() > tol => Some(-dj.signum()),
            _ => None,
        }
    }

    fn primal_step(&mut self, pricing: Pricing) -> Step {
        let mut enter: Option<(usize, f64)> = None;
        let mut best = 0.0;
        for j in 0..self.ncols() {
            if let Some(dir) = self.entering_dir(j) {
                match pricing {
                    Pricing::Bland => {
                        enter = Some((j, dir));
                        break;
                    }
                    Pricing::Dantzig => {
                        let score = self.d[j].abs();
                        if score > best {
                            best = score;
                            enter = Some((j, dir));
                        }
                    }
                }
            }
        }
        let Some((q, dir)) = enter else {
            return Step::Optimal;
        };

        // ratio test
        let mut step = if self.lb[q].is_finite() && self.ub[q].is_finite() {
            self.ub[q] - self.lb[q]
        } else {
            f64::INFINITY
        };
        let mut leave: Option<(usize, f64, bool)> = None; // (row, coef, to_upper)
        for r in 0..self.m {
            let a = row_get(&self.rows[r], q);
            if a.abs() <= self.cfg.pivot_tol {
                continue;
            }
            let b = self.basis[r];
            let rate = -dir * a;
            let (limit, to_upper) = if rate < 0.0 {
                if !self.lb[b].is_finite() {
                    continue;
                }
                (((self.x[b] - self.lb[b]) / -rate).max(0.0), false)
            } else {
                if !self.ub[b].is_finite() {
                    continue;
                }
                (((self.ub[b] - self.x[b]) / rate).max(0.0), true)
            };
            let take = if limit < step - 1e-12 {
                true
            } else if limit <= step + 1e-12 {
                match (leave, pricing) {
                    (None, _) => false,
                    (Some((_, la, _)), Pricing::Dantzig) => a.abs() > la.abs(),
                    (Some((lr, _, _)), Pricing::Bland) => b < self.basis[lr],
                }
            } else {
                false
            };
            if take {
                step = limit;
                leave = Some((r, a, to_upper));
            }
        }
        if step == f64::INFINITY {
            return Step::Unbounded;
        }

        self.move_nonbasic(q, dir * step);
        match leave {
            None => {
                // bound flip
                self.state[q] = if dir > 0.0 {
                    ColState::AtUpper
                } else {
                    ColState::AtLower
                };
                self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
            }
            Some((r, _, to_upper)) => {
                let b = self.basis[r];
                self.pivot(r, q);
                if to_upper {
                    self.state[b] = ColState::AtUpper;
                    self.x[b] = self.ub[b];
                } else {
                    self.state[b] = ColState::AtLower;
                    self.x[b] = self.lb[b];
                }
            }
        }
        Step::Progress
    }

    /// Shifts nonbasic column `q` by `delta` and updates basic values.
    fn move_nonbasic(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[q] += delta;
        for r in 0..self.m {
            let a = row_get(&self.rows[r], q);
            if a != 0.0 {
                let b = self.basis[r];
                self.x[b] -= a * delta;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let piv = row_get(&self.rows[r], q);
        let mut prow = std::mem::take(&mut self.rows[r]);
        for e in prow.iter_mut() {
            e.1 /= piv;
        }
        if let Ok(k) = prow.binary_search_by_key(&(q as u32), |e| e.0) {
            prow[k].1 = 1.0;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = row_get(&self.rows[i], q);
            if f == 0.0 {
                continue;
            }
            row_axpy(&self.rows[i], f, &prow, q as u32, &mut self.scratch);
            std::mem::swap(&mut self.rows[i], &mut self.scratch);
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for &(j, a) in &prow {
                self.d[j as usize] -= dq * a;
            }
        }
        self.d[q] = 0.0;
        self.rows[r] = prow;
        self.state[q] = ColState::Basic;
        self.basis[r] = q;
    }

    /// Changes the bounds of model variable `var`. Nonbasic columns move to
    /// the matching bound; the tableau must then be re-optimised with
    /// [`Tableau::reoptimize`].
    pub fn set_bounds(&mut self, var: usize, lb: f64, ub: f64) {
        self.lb[var] = lb;
        self.ub[var] = ub;
        if self.state[var] == ColState::Basic {
            return;
        }
        let (st, target) = match self.state[var] {
            ColState::AtUpper if ub.is_finite() => (ColState::AtUpper, ub),
            _ => resting_state(lb, ub),
        };
        let delta = target - self.x[var];
        self.move_nonbasic(var, delta);
        self.x[var] = target;
        self.state[var] = st;
    }

    fn dual_feasible(&self) -> bool {
        let tol = 1e-7;
        (0..self.ncols()).all(|j| match self.state[j] {
            ColState::Basic => true,
            _ if self.lb[j] == self.ub[j] => true,
            ColState::AtLower => self.d[j] >= -tol,
            ColState::AtUpper => self.d[j] <= tol,
            ColState::Free => self.d[j].abs() <= tol,
        })
    }

    /// Restores optimality after bound changes, using the dual simplex when
    /// the basis is still dual feasible. Returns `None` when a warm restart
    /// is not possible and the caller should solve from scratch.
    pub fn reoptimize(&mut self) -> Result<Option<LpStatus>, SimplexError> {
        if !self.phase_one_done || !self.dual_feasible() {
            return Ok(None);
        }
        let start = self.iterations;
        let (_, cap) = self.iteration_budget();
        loop {
            if self.iterations - start > cap {
                return Ok(None);
            }
            // most infeasible basic variable leaves
            let mut leave: Option<(usize, f64)> = None;
            let mut worst = self.cfg.feas_tol;
            for r in 0..self.m {
                let b = self.basis[r];
                let v = self.x[b];
                let (viol, target) = if v < self.lb[b] {
                    (self.lb[b] - v, self.lb[b])
                } else if v > self.ub[b] {
                    (v - self.ub[b], self.ub[b])
                } else {
                    continue;
                };
                if viol > worst {
                    worst = viol;
                    leave = Some((r, target));
                }
            }
            let Some((r, target)) = leave else {
                break;
            };
            let b = self.basis[r];
            let increase = target > self.x[b];
            let mut enter: Option<(usize, f64)> = None;
            let mut best_ratio = f64::INFINITY;
            for &(j, a) in &self.rows[r] {
                let j = j as usize;
                if j == b || a.abs() <= self.cfg.pivot_tol || self.lb[j] == self.ub[j] {
                    continue;
                }
                // basic moves by -a per unit increase of x_j
                let can_up = matches!(self.state[j], ColState::AtLower | ColState::Free);
                let can_down = matches!(self.state[j], ColState::AtUpper | ColState::Free);
                let ok = if increase {
                    (can_up && a < 0.0) || (can_down && a > 0.0)
                } else {
                    (can_up && a > 0.0) || (can_down && a < 0.0)
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                let better = match enter {
                    None => true,
                    Some((_, ea)) => ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && a.abs() > ea.abs()),
                };
                if better {
                    best_ratio = ratio.min(best_ratio);
                    enter = Some((j, a));
                }
            }
            let Some((q, a)) = enter else {
                return Ok(Some(LpStatus::Infeasible));
            };
            let delta = (self.x[b] - target) / a;
            self.move_nonbasic(q, delta);
            self.pivot(r, q);
            self.state[b] = if target == self.lb[b] {
                ColState::AtLower
            } else {
                ColState::AtUpper
            };
            self.x[b] = target;
            self.iterations += 1;
        }
        let c2 = self.cost.clone();
        self.compute_duals(&c2);
        Ok(Some(match self.primal_loop()? {
            Step::Optimal => LpStatus::Optimal,
            Step::Unbounded => LpStatus::Unbounded,
            Step::Progress => unreachable!(),
        }))
    }

    /// Structural values of the current basis.
    pub fn primal(&self) -> Vec<f64> {
        self.x[..self.n_struct].to_vec()
    }

    pub fn result(&self, model: &LinModel, status: LpStatus) -> SimplexResult {
        match status {
            LpStatus::Optimal => {
                let x = self.primal();
                SimplexResult {
                    status,
                    objective: model.objective_value(&x),
                    x,
                    iterations: self.iterations,
                }
            }
            _ => SimplexResult {
                status,
                x: Vec::new(),
                objective: f64::NAN,
                iterations: self.iterations,
            },
        }
    }
}

fn resting_state(lb: f64, ub: f64) -> (ColState, f64) {
    if lb.is_finite() {
        (ColState::AtLower, lb)
    } else if ub.is_finite() {
        (ColState::AtUpper, ub)
    } else {
        (ColState::Free, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{VarId, VarKind};

    const INF: f64 = f64::INFINITY;

    fn boxed(sense: Sense, n: usize) -> (LinModel, Vec<VarId>) {
        let mut m = LinModel::new(sense);
        let v = (0..n)
            .map(|i| m.add_var(format!("x{i}"), VarKind::Continuous, 0.0, INF).unwrap())
            .collect();
        (m, v)
    }

    #[test]
    fn box_lp() {
        let (mut m, v) = boxed(Sense::Maximize, 2);
        m.add_constraint("a", [(v[0], 1.0)], Relation::Le, 1.0).unwrap();
        m.add_constraint("b", [(v[1], 1.0)], Relation::Le, 1.0).unwrap();
        m.set_objective(Sense::Maximize, [(v[0], 1.0), (v[1], 1.0)], 0.0)
            .unwrap();
        let r = solve_lp(&m, true).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_lp() {
        let (mut m, v) = boxed(Sense::Minimize, 1);
        m.set_bounds(v[0], f64::NEG_INFINITY, INF).unwrap();
        m.add_constraint("lo", [(v[0], 1.0)], Relation::Ge, 1.0).unwrap();
        m.add_constraint("hi", [(v[0], 1.0)], Relation::Le, 0.0).unwrap();
        assert_eq!(solve_lp(&m, true).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_lp() {
        let (mut m, v) = boxed(Sense::Maximize, 1);
        m.add_constraint("nonneg", [(v[0], 1.0)], Relation::Ge, 0.0).unwrap();
        m.set_objective(Sense::Maximize, [(v[0], 1.0)], 0.0).unwrap();
        assert_eq!(solve_lp(&m, true).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_vars() {
        // min t  s.t. t = 2x - 3, 1 <= x <= 4, t free
        let mut m = LinModel::new(Sense::Minimize);
        let x = m.add_var("x", VarKind::Continuous, 1.0, 4.0).unwrap();
        let t = m.add_var("t", VarKind::Continuous, -INF, INF).unwrap();
        m.add_constraint("def", [(t, 1.0), (x, -2.0)], Relation::Eq, -3.0)
            .unwrap();
        m.set_objective(Sense::Minimize, [(t, 1.0)], 10.0).unwrap();
        let r = solve_lp(&m, true).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-12 && (r.x[1] + 1.0).abs() < 1e-12);
        assert!((r.objective - 9.0).abs() < 1e-12);
    }

    #[test]
    fn classic_two_var() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let (mut m, v) = boxed(Sense::Maximize, 2);
        m.add_constraint("a", [(v[0], 1.0)], Relation::Le, 4.0).unwrap();
        m.add_constraint("b", [(v[1], 2.0)], Relation::Le, 12.0).unwrap();
        m.add_constraint("c", [(v[0], 3.0), (v[1], 2.0)], Relation::Le, 18.0)
            .unwrap();
        m.set_objective(Sense::Maximize, [(v[0], 3.0), (v[1], 5.0)], 0.0)
            .unwrap();
        let r = solve_lp(&m, true).unwrap();
        assert!((r.objective - 36.0).abs() < 1e-9);
        assert!((r.x[0] - 2.0).abs() < 1e-9 && (r.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn ge_rows_need_phase_one() {
        // min x + y s.t. x + 2y >= 4, 3x + y >= 6 -> (1.6, 1.2), 2.8
        let (mut m, v) = boxed(Sense::Minimize, 2);
        m.add_constraint("a", [(v[0], 1.0), (v[1], 2.0)], Relation::Ge, 4.0)
            .unwrap();
        m.add_constraint("b", [(v[0], 3.0), (v[1], 1.0)], Relation::Ge, 6.0)
            .unwrap();
        m.set_objective(Sense::Minimize, [(v[0], 1.0), (v[1], 1.0)], 0.0)
            .unwrap();
        let r = solve_lp(&m, true).unwrap();
        assert!((r.objective - 2.8).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn upper_bounded_and_negative_lower() {
        // max x - y, -2 <= x <= 3, -5 <= y <= 1, x + y >= -4
        let mut m = LinModel::new(Sense::Maximize);
        let x = m.add_var("x", VarKind::Continuous, -2.0, 3.0).unwrap();
        let y = m.add_var("y", VarKind::Continuous, -5.0, 1.0).unwrap();
        m.add_constraint("c", [(x, 1.0), (y, 1.0)], Relation::Ge, -4.0).unwrap();
        m.set_objective(Sense::Maximize, [(x, 1.0), (y, -1.0)], 0.0).unwrap();
        let r = solve_lp(&m, true).unwrap();
        assert!((r.objective - 8.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn empty_row_is_vacuous() {
        let (mut m, v) = boxed(Sense::Maximize, 1);
        m.add_constraint("e", [], Relation::Le, 5.0).unwrap();
        m.set_bounds(v[0], 0.0, 2.0).unwrap();
        m.set_objective(Sense::Maximize, [(v[0], 1.0)], 0.0).unwrap();
        let r = solve_lp(&m, true).unwrap();
        assert!((r.objective - 2.0).abs() < 1e-12);
        let mut bad = m.clone();
        bad.add_constraint("e2", [], Relation::Ge, 1.0).unwrap();
        assert_eq!(solve_lp(&bad, true).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn dual_reoptimize_after_bound_change() {
        let (mut m, v) = boxed(Sense::Maximize, 2);
        m.add_constraint("a", [(v[0], 1.0)], Relation::Le, 4.0).unwrap();
        m.add_constraint("b", [(v[1], 2.0)], Relation::Le, 12.0).unwrap();
        m.add_constraint("c", [(v[0], 3.0), (v[1], 2.0)], Relation::Le, 18.0)
            .unwrap();
        m.set_objective(Sense::Maximize, [(v[0], 3.0), (v[1], 5.0)], 0.0)
            .unwrap();
        let mut t = Tableau::new(&m, SimplexConfig::default());
        assert_eq!(t.solve().unwrap(), LpStatus::Optimal);
        t.set_bounds(1, 0.0, 5.0);
        assert_eq!(t.reoptimize().unwrap(), Some(LpStatus::Optimal));
        let mut m2 = m.clone();
        m2.set_bounds(v[1], 0.0, 5.0).unwrap();
        let cold = solve_lp(&m2, true).unwrap();
        let warm = t.result(&m2, LpStatus::Optimal);
        assert!((warm.objective - cold.objective).abs() < 1e-9);
        t.set_bounds(0, 5.0, 6.0);
        assert_eq!(t.reoptimize().unwrap(), Some(LpStatus::Infeasible));
    }
}
