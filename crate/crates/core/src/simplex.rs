//! Exact rational revised simplex over sparse integer columns.
//!
//! The gluing systems this solves are equality-form programs `max c.x`
//! subject to `A x = b`, `x >= 0`, with integer data, a huge column count,
//! and few rows.  The solver keeps a dense basis inverse over `BigRational`,
//! prices columns with Bland's rule (smallest index, so the method cannot
//! cycle on the heavily degenerate balance rows), and runs the textbook two
//! phases with one artificial column per row.  Artificial columns never
//! re-enter; a basic artificial left at zero after phase one is kicked out by
//! a degenerate pivot the first time a direction touches its row, so primal
//! feasibility of the original program is an invariant of phase two.
//!
//! Pricing uses a floating-point screen: a column is skipped only when its
//! float reduced cost is below a per-column error bound that certifies the
//! exact value is negative.  Candidates that survive the screen are checked
//! in exact arithmetic, in index order, so the pivot sequence is identical to
//! pure rational Bland pricing.  No decision ever rests on floating point.

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("column {column} makes the program unbounded, which the degree row should prevent")]
    Unbounded { column: usize },
    #[error("column {column} touches row {row}, but the program has {n_rows} rows")]
    RowOutOfRange {
        column: usize,
        row: u32,
        n_rows: usize,
    },
}

/// Equality-form program `max c.x : A x = b, x >= 0` with integer data and
/// columns stored sparsely.
#[derive(Clone, Debug, Default)]
pub struct StandardLp {
    n_rows: usize,
    rhs: Vec<i64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    val: Vec<i64>,
    obj: Vec<i64>,
}

impl StandardLp {
    pub fn new(n_rows: usize, rhs: Vec<i64>) -> StandardLp {
        assert_eq!(rhs.len(), n_rows);
        StandardLp {
            n_rows,
            rhs,
            col_ptr: vec![0],
            row_idx: Vec::new(),
            val: Vec::new(),
            obj: Vec::new(),
        }
    }

    /// Append a column; entries must be sorted by row and free of duplicates.
    pub fn push_col(&mut self, obj: i64, entries: &[(u32, i64)]) {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        for &(row, v) in entries {
            if v != 0 {
                self.row_idx.push(row);
                self.val.push(v);
            }
        }
        self.col_ptr.push(self.row_idx.len());
        self.obj.push(obj);
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.obj.len()
    }

    pub fn objective(&self, j: usize) -> i64 {
        self.obj[j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (u32, i64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], self.val[k]))
    }

    pub fn rhs(&self) -> &[i64] {
        &self.rhs
    }

    fn validate(&self) -> Result<(), SimplexError> {
        for j in 0..self.n_cols() {
            for (row, _) in self.column(j) {
                if row as usize >= self.n_rows {
                    return Err(SimplexError::RowOutOfRange {
                        column: j,
                        row,
                        n_rows: self.n_rows,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum SimplexOutcome {
    Optimal(Optimum),
    Infeasible,
}

/// An optimal basic solution together with the exact dual vector that proves
/// its optimality.
#[derive(Clone, Debug)]
pub struct Optimum {
    pub value: BigRational,
    /// Nonzero coordinates of the optimal vertex, by column index.
    pub primal: BTreeMap<usize, BigRational>,
    /// One multiplier per row; reduced costs `c_j - y.A_j` are `<= 0` for
    /// every column and `0` on the support of the primal.
    pub dual: Vec<BigRational>,
    pub pivots: u64,
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct State<'a> {
    lp: &'a StandardLp,
    /// Row sign normalisation making the right-hand side nonnegative.
    sign: Vec<i64>,
    /// Basis variable per row; `n_cols + r` is the artificial for row `r`.
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Dense basis inverse, row major.
    binv: Vec<BigRational>,
    xb: Vec<BigRational>,
    pivots: u64,
}

impl<'a> State<'a> {
    fn new(lp: &'a StandardLp) -> State<'a> {
        let m = lp.n_rows;
        let n = lp.n_cols();
        let sign: Vec<i64> = lp.rhs.iter().map(|&b| if b < 0 { -1 } else { 1 }).collect();
        let mut binv = vec![BigRational::zero(); m * m];
        for i in 0..m {
            binv[i * m + i] = rat(1);
        }
        let xb = (0..m).map(|i| rat(lp.rhs[i] * sign[i])).collect();
        State {
            lp,
            sign,
            basis: (0..m).map(|r| n + r).collect(),
            in_basis: vec![false; n],
            binv,
            xb,
            pivots: 0,
        }
    }

    fn is_artificial(&self, var: usize) -> bool {
        var >= self.lp.n_cols()
    }

    fn cost(&self, var: usize, phase: Phase) -> i64 {
        match phase {
            Phase::One => {
                if self.is_artificial(var) {
                    -1
                } else {
                    0
                }
            }
            Phase::Two => {
                if self.is_artificial(var) {
                    0
                } else {
                    self.lp.obj[var]
                }
            }
        }
    }

    /// `y = c_B B^-1` for the phase costs.
    fn duals(&self, phase: Phase) -> Vec<BigRational> {
        let m = self.lp.n_rows;
        let mut y = vec![BigRational::zero(); m];
        for i in 0..m {
            let c = self.cost(self.basis[i], phase);
            if c == 0 {
                continue;
            }
            let c = rat(c);
            for k in 0..m {
                let term = &self.binv[i * m + k] * &c;
                y[k] += term;
            }
        }
        y
    }

    /// Exact reduced cost of a structural column under phase costs.
    fn reduced_cost(&self, j: usize, y: &[BigRational], phase: Phase) -> BigRational {
        let mut rc = rat(self.cost(j, phase));
        for (row, v) in self.lp.column(j) {
            let signed = v * self.sign[row as usize];
            if signed != 0 {
                rc -= &y[row as usize] * rat(signed);
            }
        }
        rc
    }

    /// Bland entering column: the smallest-index nonbasic structural column
    /// with positive exact reduced cost.  The float pass only skips columns
    /// whose reduced cost is provably negative under a worst-case rounding
    /// error bound.
    fn entering(&self, y: &[BigRational], phase: Phase) -> Option<usize> {
        let yf: Vec<f64> = y.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        for j in 0..self.lp.n_cols() {
            if self.in_basis[j] {
                continue;
            }
            let c = self.cost(j, phase) as f64;
            let mut acc = c;
            let mut scale = c.abs();
            let mut terms = 1usize;
            for (row, v) in self.lp.column(j) {
                let t = yf[row as usize] * (v * self.sign[row as usize]) as f64;
                acc -= t;
                scale += t.abs();
                terms += 1;
            }
            let bound = scale * (terms as f64 + 2.0) * 2f64.powi(-48);
            if acc <= -bound && acc.is_finite() && bound.is_finite() {
                continue;
            }
            if self.reduced_cost(j, y, phase).is_positive() {
                return Some(j);
            }
        }
        None
    }

    /// `u = B^-1 A_j`.
    fn direction(&self, j: usize) -> Vec<BigRational> {
        let m = self.lp.n_rows;
        let mut u = vec![BigRational::zero(); m];
        for (row, v) in self.lp.column(j) {
            let signed = v * self.sign[row as usize];
            if signed == 0 {
                continue;
            }
            let signed = rat(signed);
            for i in 0..m {
                let term = &self.binv[i * m + row as usize] * &signed;
                u[i] += term;
            }
        }
        u
    }

    /// Leaving row for the entering direction.  Basic artificials sit at zero
    /// in phase two and must not move, so any direction touching their row
    /// forces a degenerate pivot there; otherwise the usual minimum ratio
    /// with Bland's smallest-variable tie break.
    fn leaving(&self, u: &[BigRational], phase: Phase) -> Option<usize> {
        let m = self.lp.n_rows;
        if phase == Phase::Two {
            let kick = (0..m)
                .filter(|&i| self.is_artificial(self.basis[i]) && !u[i].is_zero())
                .min_by_key(|&i| self.basis[i]);
            if let Some(r) = kick {
                return Some(r);
            }
        }
        let mut best: Option<(BigRational, usize)> = None;
        for i in 0..m {
            if !u[i].is_positive() {
                continue;
            }
            let ratio = &self.xb[i] / &u[i];
            best = match best {
                None => Some((ratio, i)),
                Some((r, bi)) => {
                    if ratio < r || (ratio == r && self.basis[i] < self.basis[bi]) {
                        Some((ratio, i))
                    } else {
                        Some((r, bi))
                    }
                }
            };
        }
        best.map(|(_, i)| i)
    }

    fn pivot(&mut self, j: usize, r: usize, u: &[BigRational]) {
        let m = self.lp.n_rows;
        let theta = &self.xb[r] / &u[r];
        for i in 0..m {
            if i != r && !u[i].is_zero() {
                let delta = &theta * &u[i];
                self.xb[i] -= delta;
            }
        }
        self.xb[r] = theta;
        let inv = u[r].recip();
        for k in 0..m {
            let scaled = &self.binv[r * m + k] * &inv;
            self.binv[r * m + k] = scaled;
        }
        for i in 0..m {
            if i == r || u[i].is_zero() {
                continue;
            }
            for k in 0..m {
                let delta = &u[i] * &self.binv[r * m + k];
                self.binv[i * m + k] -= delta;
            }
        }
        let old = self.basis[r];
        if !self.is_artificial(old) {
            self.in_basis[old] = false;
        }
        self.basis[r] = j;
        self.in_basis[j] = true;
        self.pivots += 1;
    }

    /// Run one phase to optimality; returns the final duals.
    fn run(&mut self, phase: Phase) -> Result<Vec<BigRational>, SimplexError> {
        loop {
            let y = self.duals(phase);
            let Some(j) = self.entering(&y, phase) else {
                return Ok(y);
            };
            let u = self.direction(j);
            let Some(r) = self.leaving(&u, phase) else {
                return Err(SimplexError::Unbounded { column: j });
            };
            self.pivot(j, r, &u);
        }
    }

    fn objective_value(&self, phase: Phase) -> BigRational {
        let mut v = BigRational::zero();
        for i in 0..self.lp.n_rows {
            let c = self.cost(self.basis[i], phase);
            if c != 0 {
                v += rat(c) * &self.xb[i];
            }
        }
        v
    }
}

/// Solve to proven optimality or detect infeasibility.
pub fn solve(lp: &StandardLp) -> Result<SimplexOutcome, SimplexError> {
    lp.validate()?;
    let mut state = State::new(lp);
    if lp.n_rows > 0 {
        state.run(Phase::One)?;
        if !state.objective_value(Phase::One).is_zero() {
            return Ok(SimplexOutcome::Infeasible);
        }
    }
    let y = state.run(Phase::Two)?;
    let value = state.objective_value(Phase::Two);
    let mut primal = BTreeMap::new();
    for i in 0..lp.n_rows {
        let var = state.basis[i];
        if !state.is_artificial(var) && !state.xb[i].is_zero() {
            primal.insert(var, state.xb[i].clone());
        }
    }
    let dual = (0..lp.n_rows)
        .map(|i| {
            if state.sign[i] < 0 {
                -y[i].clone()
            } else {
                y[i].clone()
            }
        })
        .collect();
    Ok(SimplexOutcome::Optimal(Optimum {
        value,
        primal,
        dual,
        pivots: state.pivots,
    }))
}
