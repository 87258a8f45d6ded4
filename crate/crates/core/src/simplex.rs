//! Dense revised simplex with deterministic pivoting.
//!
//! The solver keeps an explicit basis inverse, prices with Dantzig's rule and
//! falls back to Bland's rule after a run of degenerate pivots so cycling
//! cannot occur. Pivot ties are broken by lowest index, which makes repeated
//! solves of the same program land on the same basis.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("constraint row {row} references variable {var}, but the program has {n_vars}")]
    VarOutOfRange { row: usize, var: usize, n_vars: usize },
    #[error("non-finite coefficient in row {0}")]
    NonFiniteCoefficient(usize),
    #[error("non-finite objective coefficient for variable {0}")]
    NonFiniteObjective(usize),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    LessEq,
    Equal,
}

/// One sparse constraint row.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization program over nonnegative variables.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    /// Optional per-variable upper bounds, handled as extra `<=` rows.
    pub upper_bounds: Vec<(usize, f64)>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            upper_bounds: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    fn validate(&self) -> Result<(), LpError> {
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::NonFiniteObjective(j));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFiniteCoefficient(i));
            }
            for &(j, c) in &row.coeffs {
                if j >= self.n_vars {
                    return Err(LpError::VarOutOfRange {
                        row: i,
                        var: j,
                        n_vars: self.n_vars,
                    });
                }
                if !c.is_finite() {
                    return Err(LpError::NonFiniteCoefficient(i));
                }
            }
        }
        Ok(())
    }

    /// Writes the program in LP text interchange format for cross-checking
    /// with external solvers.
    pub fn to_lp_format(&self, name: &str) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "\\ {name}").unwrap();
        writeln!(out, "Minimize").unwrap();
        let mut obj = String::from(" obj:");
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write!(obj, " {} {} x{}", if c < 0.0 { "-" } else { "+" }, c.abs(), j).unwrap();
            }
        }
        if !self.objective.iter().any(|&c| c != 0.0) {
            obj.push_str(" 0 x0");
        }
        writeln!(out, "{obj}").unwrap();
        writeln!(out, "Subject To").unwrap();
        for (i, row) in self.rows.iter().enumerate() {
            let mut line = format!(" c{i}:");
            for &(j, c) in &row.coeffs {
                write!(line, " {} {} x{}", if c < 0.0 { "-" } else { "+" }, c.abs(), j).unwrap();
            }
            let op = match row.sense {
                Sense::LessEq => "<=",
                Sense::Equal => "=",
            };
            writeln!(out, "{line} {op} {}", row.rhs).unwrap();
        }
        if !self.upper_bounds.is_empty() {
            writeln!(out, "Bounds").unwrap();
            for &(j, ub) in &self.upper_bounds {
                writeln!(out, " 0 <= x{j} <= {ub}").unwrap();
            }
        }
        writeln!(out, "End").unwrap();
        out
    }
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { primal: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// Pluggable solver surface, so an external LP engine can replace the
/// embedded simplex without touching program construction.
pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError>;
}

/// The embedded dense revised simplex.
#[derive(Debug, Clone)]
pub struct DenseSimplex {
    /// Reduced-cost / ratio pivot tolerance.
    pub eps: f64,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub bland_trigger: usize,
    /// Pivots between basis-inverse refactorizations.
    pub refactor_every: usize,
    pub max_iters: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex {
            eps: 1e-9,
            bland_trigger: 12,
            refactor_every: 60,
            max_iters: 50_000,
        }
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        lp.validate()?;
        let std = StandardForm::build(lp);
        let mut tab = Tableau::new(&std, self);

        // Phase 1: drive artificials to zero.
        if !tab.run_phase(Phase::One)? {
            return Err(LpError::Numerical("phase 1 did not terminate".into()));
        }
        if tab.objective_value(&std.phase1_costs) > 1e-7 * (1.0 + std.rhs_scale) {
            return Ok(LpOutcome::Infeasible);
        }
        tab.pivot_out_artificials(&std)?;

        // Phase 2: original objective.
        match tab.run_phase(Phase::Two)? {
            true => {}
            false => return Ok(LpOutcome::Unbounded),
        }

        // Sharpen the final basis inverse before reading the solution off:
        // product-form updates accumulate error over long pivot sequences.
        tab.refactorize()?;
        let x = tab.primal_solution(lp.n_vars);
        let objective = lp
            .objective
            .iter()
            .zip(&x)
            .map(|(c, v)| c * v)
            .sum::<f64>();
        // Feasibility residual check before reporting optimality.
        let resid = max_residual(lp, &x);
        if resid > 1e-7 * (1.0 + std.rhs_scale) {
            return Err(LpError::Numerical(format!(
                "primal residual {resid:.3e} exceeds tolerance"
            )));
        }
        Ok(LpOutcome::Optimal { primal: x, objective })
    }
}

/// Largest constraint violation of `x` (bounds and rows), unscaled.
pub fn max_residual(lp: &LinearProgram, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &v in x {
        worst = worst.max(-v);
    }
    for &(j, ub) in &lp.upper_bounds {
        worst = worst.max(x[j] - ub);
    }
    for row in &lp.rows {
        let lhs: f64 = row.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
        match row.sense {
            Sense::LessEq => worst = worst.max(lhs - row.rhs),
            Sense::Equal => worst = worst.max((lhs - row.rhs).abs()),
        }
    }
    worst
}

struct StandardForm {
    /// Dense columns of [structural | slack] variables, rows normalized to
    /// rhs >= 0.
    cols: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    costs: Vec<f64>,
    phase1_costs: Vec<f64>,
    n_total: usize,
    m: usize,
    rhs_scale: f64,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> StandardForm {
        let n = lp.n_vars;
        // Normalize every row to rhs >= 0; a flipped `<=` row keeps its slack
        // but with negative sign (surplus).
        let mut rows2: Vec<(Vec<(usize, f64)>, f64, Option<f64>)> =
            Vec::with_capacity(lp.rows.len() + lp.upper_bounds.len());
        for r in &lp.rows {
            let mut coeffs = r.coeffs.clone();
            let mut rhs = r.rhs;
            let mut slack_sign = match r.sense {
                Sense::LessEq => Some(1.0),
                Sense::Equal => None,
            };
            if rhs < 0.0 {
                for c in coeffs.iter_mut() {
                    c.1 = -c.1;
                }
                rhs = -rhs;
                slack_sign = slack_sign.map(|s| -s);
            }
            rows2.push((coeffs, rhs, slack_sign));
        }
        for &(j, ub) in &lp.upper_bounds {
            rows2.push((vec![(j, 1.0)], ub, Some(1.0)));
        }
        let m = rows2.len();
        let n_slack = rows2.iter().filter(|r| r.2.is_some()).count();
        let n_total = n + n_slack;

        let mut cols = vec![vec![0.0; m]; n_total];
        let mut rhs = vec![0.0; m];
        let mut slack_idx = n;
        for (i, (coeffs, b, slack_sign)) in rows2.iter().enumerate() {
            rhs[i] = *b;
            for &(j, c) in coeffs {
                cols[j][i] += c;
            }
            if let Some(sign) = slack_sign {
                cols[slack_idx][i] = *sign;
                slack_idx += 1;
            }
        }

        let mut costs = vec![0.0; n_total];
        costs[..n].copy_from_slice(&lp.objective);
        let phase1_costs = vec![0.0; n_total]; // artificial costs handled separately

        let rhs_scale = rhs.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        StandardForm {
            cols,
            rhs,
            costs,
            phase1_costs,
            n_total,
            m,
            rhs_scale,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

/// Revised simplex state: explicit basis inverse plus bookkeeping.
struct Tableau<'a> {
    std: &'a StandardForm,
    opts: &'a DenseSimplex,
    /// Basis columns; indices >= n_total are artificials (identity columns).
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>, // m x m row-major
    xb: Vec<f64>,
    phase: Phase,
}

impl<'a> Tableau<'a> {
    fn new(std: &'a StandardForm, opts: &'a DenseSimplex) -> Self {
        let m = std.m;
        // Start from an all-artificial basis; binv = I, xb = rhs.
        let basis: Vec<usize> = (0..m).map(|i| std.n_total + i).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Tableau {
            std,
            opts,
            basis,
            in_basis: vec![false; std.n_total],
            binv,
            xb: std.rhs.clone(),
            phase: Phase::One,
        }
    }

    fn column(&self, j: usize) -> ColRef<'_> {
        if j < self.std.n_total {
            ColRef::Dense(&self.std.cols[j])
        } else {
            ColRef::Unit(j - self.std.n_total)
        }
    }

    fn cost(&self, j: usize, phase: Phase) -> f64 {
        match phase {
            Phase::One => {
                if j >= self.std.n_total {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if j >= self.std.n_total {
                    0.0
                } else {
                    self.std.costs[j]
                }
            }
        }
    }

    fn objective_value(&self, _phase1_costs: &[f64]) -> f64 {
        // Called right after phase 1: artificial basics sum.
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j >= self.std.n_total)
            .map(|(_, &v)| v)
            .sum()
    }

    /// Simplex multipliers y = c_B * Binv for the given phase.
    fn multipliers(&self, phase: Phase) -> Vec<f64> {
        let m = self.std.m;
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let cb = self.cost(j, phase);
            if cb != 0.0 {
                for k in 0..m {
                    y[k] += cb * self.binv[r * m + k];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase: Phase) -> f64 {
        let direct = self.cost(j, phase);
        match self.column(j) {
            ColRef::Dense(col) => {
                let dot: f64 = col.iter().zip(y).map(|(a, b)| a * b).sum();
                direct - dot
            }
            ColRef::Unit(i) => direct - y[i],
        }
    }

    /// Binv * A_j.
    fn transformed_column(&self, j: usize) -> Vec<f64> {
        let m = self.std.m;
        let mut d = vec![0.0; m];
        match self.column(j) {
            ColRef::Dense(col) => {
                for r in 0..m {
                    let mut acc = 0.0;
                    for k in 0..m {
                        acc += self.binv[r * m + k] * col[k];
                    }
                    d[r] = acc;
                }
            }
            ColRef::Unit(i) => {
                for r in 0..m {
                    d[r] = self.binv[r * m + i];
                }
            }
        }
        d
    }

    /// Returns Ok(true) on optimality, Ok(false) on unboundedness.
    fn run_phase(&mut self, phase: Phase) -> Result<bool, LpError> {
        self.phase = phase;
        let m = self.std.m;
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        for _ in 0..self.opts.max_iters {
            let use_bland = degenerate_run >= self.opts.bland_trigger;
            let y = self.multipliers(phase);

            // Entering variable: Dantzig (most negative reduced cost, lowest
            // index on ties) or Bland (lowest index with negative cost).
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.std.n_total {
                if self.in_basis[j] {
                    continue;
                }
                let rc = self.reduced_cost(j, &y, phase);
                if rc < -self.opts.eps {
                    if use_bland {
                        entering = Some((j, rc));
                        break;
                    }
                    match entering {
                        Some((_, best)) if rc >= best => {}
                        _ => entering = Some((j, rc)),
                    }
                }
            }
            let Some((enter, _)) = entering else {
                return Ok(true);
            };

            let d = self.transformed_column(enter);
            // Ratio test: lowest ratio; ties by lowest basis variable index
            // (Bland-compatible, deterministic).
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                if d[r] > self.opts.eps {
                    let ratio = self.xb[r] / d[r];
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - self.opts.eps
                                || ((ratio - lratio).abs() <= self.opts.eps
                                    && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((leave_row, ratio)) = leave else {
                return Ok(false);
            };

            if ratio <= self.opts.eps {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            self.pivot(enter, leave_row, &d);
            since_refactor += 1;
            if since_refactor >= self.opts.refactor_every {
                self.refactorize()?;
                since_refactor = 0;
            }
        }
        Err(LpError::Numerical("iteration limit exceeded".into()))
    }

    fn pivot(&mut self, enter: usize, leave_row: usize, d: &[f64]) {
        let m = self.std.m;
        let pivot = d[leave_row];
        // Update Binv: row ops making column `enter` the unit vector e_r.
        for k in 0..m {
            self.binv[leave_row * m + k] /= pivot;
        }
        let theta = self.xb[leave_row] / pivot;
        self.xb[leave_row] = theta;
        for r in 0..m {
            if r != leave_row && d[r] != 0.0 {
                let factor = d[r];
                for k in 0..m {
                    self.binv[r * m + k] -= factor * self.binv[leave_row * m + k];
                }
                self.xb[r] -= factor * theta;
                if self.xb[r] < 0.0 && self.xb[r] > -1e-11 {
                    self.xb[r] = 0.0;
                }
            }
        }
        let old = self.basis[leave_row];
        if old < self.std.n_total {
            self.in_basis[old] = false;
        }
        self.basis[leave_row] = enter;
        if enter < self.std.n_total {
            self.in_basis[enter] = true;
        }
    }

    /// Rebuilds Binv from the basis columns by Gauss-Jordan elimination.
    fn refactorize(&mut self) -> Result<(), LpError> {
        let m = self.std.m;
        let mut aug = vec![0.0; m * 2 * m];
        for (c, &j) in self.basis.iter().enumerate() {
            match self.column(j) {
                ColRef::Dense(col) => {
                    for r in 0..m {
                        aug[r * 2 * m + c] = col[r];
                    }
                }
                ColRef::Unit(i) => aug[i * 2 * m + c] = 1.0,
            }
        }
        for r in 0..m {
            aug[r * 2 * m + m + r] = 1.0;
        }
        for c in 0..m {
            // Partial pivoting.
            let mut best = c;
            for r in c + 1..m {
                if aug[r * 2 * m + c].abs() > aug[best * 2 * m + c].abs() {
                    best = r;
                }
            }
            if aug[best * 2 * m + c].abs() < 1e-12 {
                return Err(LpError::Numerical("singular basis".into()));
            }
            if best != c {
                // Row swaps only reorder the elimination; the left block still
                // reduces to the identity, so basis order is untouched.
                for k in 0..2 * m {
                    aug.swap(c * 2 * m + k, best * 2 * m + k);
                }
            }
            let p = aug[c * 2 * m + c];
            for k in 0..2 * m {
                aug[c * 2 * m + k] /= p;
            }
            for r in 0..m {
                if r != c {
                    let f = aug[r * 2 * m + c];
                    if f != 0.0 {
                        for k in 0..2 * m {
                            aug[r * 2 * m + k] -= f * aug[c * 2 * m + k];
                        }
                    }
                }
            }
        }
        for r in 0..m {
            for k in 0..m {
                self.binv[r * m + k] = aug[r * 2 * m + m + k];
            }
        }
        // Recompute xb = Binv * b.
        for r in 0..m {
            let mut acc = 0.0;
            for k in 0..m {
                acc += self.binv[r * m + k] * self.std.rhs[k];
            }
            self.xb[r] = acc.max(0.0);
        }
        Ok(())
    }

    /// After phase 1: replace basic artificials at zero level with any
    /// structural column having a nonzero transformed entry, or leave the
    /// redundant row with its artificial pinned at zero.
    fn pivot_out_artificials(&mut self, std: &StandardForm) -> Result<(), LpError> {
        let m = std.m;
        for r in 0..m {
            if self.basis[r] >= std.n_total {
                let mut replaced = false;
                for j in 0..std.n_total {
                    if self.in_basis[j] {
                        continue;
                    }
                    let d = self.transformed_column(j);
                    if d[r].abs() > 1e-9 {
                        self.pivot(j, r, &d);
                        replaced = true;
                        break;
                    }
                }
                let _ = replaced; // redundant row: artificial stays basic at 0
            }
        }
        Ok(())
    }

    fn primal_solution(&self, n_vars: usize) -> Vec<f64> {
        let mut x = vec![0.0; n_vars];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < n_vars {
                x[j] = self.xb[r].max(0.0);
            }
        }
        x
    }
}

enum ColRef<'a> {
    Dense(&'a [f64]),
    Unit(usize),
}
