//! Solver-agnostic linear model representation and LP-format export.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Integer,
    /// Integer restricted to `[0, 1]`.
    Binary,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn lp_symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    /// Branching priority; higher classes are branched on first.
    pub priority: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse terms, one per variable, no exact zeros, in first-mention order.
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: Sense,
    pub terms: Vec<(VarId, f64)>,
    pub offset: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("variable name {0:?} already declared")]
    DuplicateName(String),
    #[error("invalid bounds for {name:?}: [{lb}, {ub}]")]
    InvalidBounds { name: String, lb: f64, ub: f64 },
    #[error("expression references undeclared variable #{0}")]
    UnknownVariable(usize),
    #[error("non-finite coefficient or right-hand side in {0:?}")]
    NonFinite(String),
}

/// Counts of variables by kind and of constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelStats {
    pub continuous: usize,
    pub integer: usize,
    pub binary: usize,
    pub constraints: usize,
}

impl ModelStats {
    pub fn variables(&self) -> usize {
        self.continuous + self.integer + self.binary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinModel {
    vars: Vec<Variable>,
    by_name: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    objective: Objective,
}

impl Default for LinModel {
    fn default() -> Self {
        Self::new(Sense::Minimize)
    }
}

/// Merges repeated variables and drops exact zeros, keeping first-mention order.
fn normalize_terms(terms: impl IntoIterator<Item = (VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut out: Vec<(VarId, f64)> = Vec::new();
    let mut pos: HashMap<VarId, usize> = HashMap::new();
    for (v, c) in terms {
        match pos.get(&v) {
            Some(&k) => out[k].1 += c,
            None => {
                pos.insert(v, out.len());
                out.push((v, c));
            }
        }
    }
    out.retain(|&(_, c)| c != 0.0);
    out
}

impl LinModel {
    pub fn new(sense: Sense) -> Self {
        Self {
            vars: Vec::new(),
            by_name: HashMap::new(),
            constraints: Vec::new(),
            objective: Objective {
                sense,
                terms: Vec::new(),
                offset: 0.0,
            },
        }
    }

    /// Declares a variable. Binary variables are clamped to `[0, 1]`
    /// intersected with the given bounds.
    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64) -> Result<VarId, ModelError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            _ => (lb, ub),
        };
        if lb.is_nan() || ub.is_nan() || lb > ub || lb == f64::INFINITY || ub == f64::NEG_INFINITY {
            return Err(ModelError::InvalidBounds { name, lb, ub });
        }
        let id = VarId(self.vars.len());
        self.by_name.insert(name.clone(), id);
        self.vars.push(Variable {
            name,
            kind,
            lb,
            ub,
            priority: 0,
        });
        Ok(id)
    }

    fn check_terms(&self, terms: &[(VarId, f64)], what: &str) -> Result<(), ModelError> {
        for &(v, c) in terms {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable(v.0));
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite(what.to_owned()));
            }
        }
        Ok(())
    }

    /// Appends `terms (relation) rhs`.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<ConId, ModelError> {
        let name = name.into();
        let raw: Vec<_> = terms.into_iter().collect();
        self.check_terms(&raw, &name)?;
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite(name));
        }
        let id = ConId(self.constraints.len());
        self.constraints.push(Constraint {
            name,
            terms: normalize_terms(raw),
            relation,
            rhs,
        });
        Ok(id)
    }

    pub fn set_objective(
        &mut self,
        sense: Sense,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        offset: f64,
    ) -> Result<(), ModelError> {
        let raw: Vec<_> = terms.into_iter().collect();
        self.check_terms(&raw, "objective")?;
        if !offset.is_finite() {
            return Err(ModelError::NonFinite("objective".into()));
        }
        self.objective = Objective {
            sense,
            terms: normalize_terms(raw),
            offset,
        };
        Ok(())
    }

    /// Replaces a variable's bounds (used to fix inputs and by branching).
    pub fn set_bounds(&mut self, v: VarId, lb: f64, ub: f64) -> Result<(), ModelError> {
        let var = self.vars.get_mut(v.0).ok_or(ModelError::UnknownVariable(v.0))?;
        if lb.is_nan() || ub.is_nan() || lb > ub {
            return Err(ModelError::InvalidBounds {
                name: var.name.clone(),
                lb,
                ub,
            });
        }
        var.lb = lb;
        var.ub = ub;
        Ok(())
    }

    pub fn set_priority(&mut self, v: VarId, priority: i32) -> Result<(), ModelError> {
        let var = self.vars.get_mut(v.0).ok_or(ModelError::UnknownVariable(v.0))?;
        var.priority = priority;
        Ok(())
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, c: ConId) -> &Constraint {
        &self.constraints[c.0]
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn stats(&self) -> ModelStats {
        let mut s = ModelStats {
            constraints: self.constraints.len(),
            ..ModelStats::default()
        };
        for v in &self.vars {
            match v.kind {
                VarKind::Continuous => s.continuous += 1,
                VarKind::Integer => s.integer += 1,
                VarKind::Binary => s.binary += 1,
            }
        }
        s
    }

    /// Objective value of a full primal vector, including the offset.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.offset + self.objective.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>()
    }

    /// Largest violation of any constraint or variable bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * x[v.0]).sum();
            let viol = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for (v, &xv) in self.vars.iter().zip(x) {
            worst = worst.max(v.lb - xv).max(xv - v.ub);
        }
        worst
    }

    /// Renders the model in CPLEX LP format. Output depends only on the model
    /// contents and insertion order.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ written by nnembed\n");
        out.push_str(match self.objective.sense {
            Sense::Maximize => "Maximize\n",
            Sense::Minimize => "Minimize\n",
        });
        let mut obj = String::from(" obj:");
        write_terms(&mut obj, &self.objective.terms, &self.vars);
        if self.objective.offset != 0.0 {
            write_coef(&mut obj, self.objective.offset, None);
        } else if self.objective.terms.is_empty() {
            obj.push_str(" 0");
        }
        wrap_into(&mut out, &obj);

        out.push_str("Subject To\n");
        for c in &self.constraints {
            let mut line = format!(" {}:", c.name);
            if c.terms.is_empty() {
                // LP readers reject an empty left-hand side
                line.push_str(" 0 ");
                line.push_str(&self.vars.first().map_or("__zero".into(), |v| v.name.clone()));
            } else {
                write_terms(&mut line, &c.terms, &self.vars);
            }
            let _ = write!(line, " {} {}", c.relation.lp_symbol(), fmt_num(c.rhs));
            wrap_into(&mut out, &line);
        }

        out.push_str("Bounds\n");
        for v in self.vars.iter().filter(|v| v.kind != VarKind::Binary) {
            let line = match (v.lb.is_finite(), v.ub.is_finite()) {
                (false, false) => format!(" {} free", v.name),
                (true, false) => format!(" {} >= {}", v.name, fmt_num(v.lb)),
                (false, true) => format!(" -inf <= {} <= {}", v.name, fmt_num(v.ub)),
                (true, true) if v.lb == v.ub => format!(" {} = {}", v.name, fmt_num(v.lb)),
                (true, true) => format!(" {} <= {} <= {}", fmt_num(v.lb), v.name, fmt_num(v.ub)),
            };
            out.push_str(&line);
            out.push('\n');
        }
        for v in self
            .vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary && (v.lb, v.ub) != (0.0, 1.0))
        {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lb), v.name, fmt_num(v.ub));
        }

        let generals: Vec<_> = self.vars.iter().filter(|v| v.kind == VarKind::Integer).collect();
        if !generals.is_empty() {
            out.push_str("General\n");
            for v in generals {
                let _ = writeln!(out, " {}", v.name);
            }
        }
        let binaries: Vec<_> = self.vars.iter().filter(|v| v.kind == VarKind::Binary).collect();
        if !binaries.is_empty() {
            out.push_str("Binary\n");
            for v in binaries {
                let _ = writeln!(out, " {}", v.name);
            }
        }
        out.push_str("End\n");
        out
    }
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

fn write_coef(buf: &mut String, c: f64, name: Option<&str>) {
    let sign = if c < 0.0 { '-' } else { '+' };
    let mag = c.abs();
    match name {
        Some(n) if mag == 1.0 => {
            let _ = write!(buf, " {sign} {n}");
        }
        Some(n) => {
            let _ = write!(buf, " {sign} {} {n}", fmt_num(mag));
        }
        None => {
            let _ = write!(buf, " {sign} {}", fmt_num(mag));
        }
    }
}

fn write_terms(buf: &mut String, terms: &[(VarId, f64)], vars: &[Variable]) {
    for &(v, c) in terms {
        write_coef(buf, c, Some(&vars[v.0].name));
    }
}

/// Appends `line` to `out`, breaking before a sign token whenever a physical
/// line would exceed 200 characters.
fn wrap_into(out: &mut String, line: &str) {
    const WIDTH: usize = 200;
    let mut cur = String::new();
    for tok in line.split_whitespace() {
        if (tok == "+" || tok == "-") && cur.len() > WIDTH {
            out.push_str(&cur);
            out.push('\n');
            cur = String::from("  ");
        }
        cur.push(' ');
        cur.push_str(tok);
    }
    out.push_str(&cur);
    out.push('\n');
}
