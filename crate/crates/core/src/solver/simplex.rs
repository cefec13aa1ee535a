use super::{LpInstance, OptimalSolution, SolveOptions, SolveOutcome, SolverError};
use crate::linalg::{dot, Lu, Vector};

const REFACTOR_EVERY: usize = 100;
const RESIDUAL_TOL: f64 = 1e-10;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Revised simplex on `min ⟨1,y⟩ s.t. Aᵀy = c, y ≥ 0` with an explicit
/// `n x n` basis inverse. Variables `0..m` are the rows of `A`; `m..m+n` are
/// artificials with columns `sign_k e_k`.
struct DualSimplex<'a> {
    inst: &'a LpInstance,
    opts: SolveOptions,
    m: usize,
    n: usize,
    signs: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    pivots: usize,
    max_pivots: usize,
    since_refactor: usize,
    degenerate: usize,
    bland: bool,
    // scratch
    ax: Vec<f64>,
    pi: Vec<f64>,
    w: Vec<f64>,
}

enum Step {
    Pivoted,
    Optimal,
}

/// Solves the LP exactly (to the configured tolerances) and returns a
/// certified primal/dual pair or an unbounded ray.
pub fn solve(inst: &LpInstance, opts: &SolveOptions) -> Result<SolveOutcome, SolverError> {
    let mut s = DualSimplex::new(inst, *opts);
    s.run()
}

impl<'a> DualSimplex<'a> {
    fn new(inst: &'a LpInstance, opts: SolveOptions) -> Self {
        let (m, n) = (inst.m(), inst.n());
        let signs: Vec<f64> = inst.c.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut binv = vec![0.0; n * n];
        for k in 0..n {
            binv[k * n + k] = signs[k];
        }
        Self {
            inst,
            opts,
            m,
            n,
            xb: inst.c.iter().map(|v| v.abs()).collect(),
            signs,
            basis: (m..m + n).collect(),
            is_basic: vec![false; m],
            binv,
            pivots: 0,
            max_pivots: opts.max_pivots.unwrap_or(50 * (m + n)),
            since_refactor: 0,
            degenerate: 0,
            bland: false,
            ax: vec![0.0; m],
            pi: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    fn is_artificial(&self, var: usize) -> bool {
        var >= self.m
    }

    fn column_into(&self, var: usize, out: &mut [f64]) {
        if var < self.m {
            out.copy_from_slice(self.inst.a.row(var));
        } else {
            out.fill(0.0);
            let k = var - self.m;
            out[k] = self.signs[k];
        }
    }

    fn cost(&self, var: usize, phase: Phase) -> f64 {
        match (phase, self.is_artificial(var)) {
            (Phase::One, true) | (Phase::Two, false) => 1.0,
            _ => 0.0,
        }
    }

    fn failure(&self, reason: impl Into<String>) -> SolverError {
        SolverError::NumericalFailure {
            pivots: self.pivots,
            reason: reason.into(),
        }
    }

    fn run(&mut self) -> Result<SolveOutcome, SolverError> {
        self.optimize(Phase::One)?;
        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&v, _)| self.is_artificial(v))
            .map(|(_, &x)| x.max(0.0))
            .sum();
        if infeasibility > self.opts.feas_tol {
            return self.unbounded_ray(infeasibility);
        }
        self.drive_out_artificials()?;
        self.optimize(Phase::Two)?;
        self.extract()
    }

    /// Iterates to optimality for `phase`, finishing on a fresh factorisation.
    fn optimize(&mut self, phase: Phase) -> Result<(), SolverError> {
        loop {
            while let Step::Pivoted = self.iterate(phase)? {}
            if self.since_refactor == 0 {
                return Ok(());
            }
            self.refactor()?;
            // re-price against the fresh factorisation
            if let Step::Optimal = self.iterate(phase)? {
                return Ok(());
            }
        }
    }

    fn compute_duals(&mut self, phase: Phase) {
        let n = self.n;
        self.pi.fill(0.0);
        for i in 0..n {
            let cb = self.cost(self.basis[i], phase);
            if cb != 0.0 {
                let row = &self.binv[i * n..(i + 1) * n];
                for (p, &b) in self.pi.iter_mut().zip(row) {
                    *p += cb * b;
                }
            }
        }
    }

    fn price(&mut self, phase: Phase) -> Option<usize> {
        self.compute_duals(phase);
        self.inst.a.matvec_into(&self.pi, &mut self.ax);
        let struct_cost = if phase == Phase::Two { 1.0 } else { 0.0 };
        let tol = self.opts.opt_tol;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.m {
            if self.is_basic[j] {
                continue;
            }
            let d = struct_cost - self.ax[j];
            if d < -tol {
                if self.bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn compute_direction(&mut self, var: usize) {
        let n = self.n;
        if var < self.m {
            let col = self.inst.a.row(var);
            for i in 0..n {
                self.w[i] = dot(&self.binv[i * n..(i + 1) * n], col);
            }
        } else {
            let k = var - self.m;
            for i in 0..n {
                self.w[i] = self.binv[i * n + k] * self.signs[k];
            }
        }
    }

    fn ratio_test(&self, phase: Phase) -> Option<usize> {
        let tol = self.opts.pivot_tol;
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.n {
            let wr = self.w[r];
            let var = self.basis[r];
            let ratio = if phase == Phase::Two && self.is_artificial(var) {
                // artificials left in the basis are pinned at zero
                if wr.abs() <= tol {
                    continue;
                }
                0.0
            } else {
                if wr <= tol {
                    continue;
                }
                self.xb[r].max(0.0) / wr
            };
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                    let better = if tie {
                        if self.bland {
                            var < self.basis[br]
                        } else {
                            wr.abs() > self.w[br].abs()
                        }
                    } else {
                        ratio < bratio
                    };
                    if better {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn iterate(&mut self, phase: Phase) -> Result<Step, SolverError> {
        let Some(q) = self.price(phase) else {
            return Ok(Step::Optimal);
        };
        if self.pivots >= self.max_pivots {
            return Err(self.failure(format!("pivot limit {} reached", self.max_pivots)));
        }
        self.compute_direction(q);
        let Some(r) = self.ratio_test(phase) else {
            // the dual objective is bounded below by zero, so no ray can exist
            return Err(self.failure("no leaving variable in the dual standard form"));
        };
        let theta = if phase == Phase::Two && self.is_artificial(self.basis[r]) {
            0.0
        } else {
            self.xb[r].max(0.0) / self.w[r]
        };
        self.pivot(q, r, theta)?;
        Ok(Step::Pivoted)
    }

    fn pivot(&mut self, q: usize, r: usize, theta: f64) -> Result<(), SolverError> {
        let n = self.n;
        let wr = self.w[r];
        for i in 0..n {
            if i != r {
                self.xb[i] -= theta * self.w[i];
            }
        }
        self.xb[r] = theta;

        let (before, rest) = self.binv.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        for v in prow.iter_mut() {
            *v /= wr;
        }
        for (i, row) in before.chunks_exact_mut(n).chain(after.chunks_exact_mut(n)).enumerate() {
            let wi = self.w[if i < r { i } else { i + 1 }];
            if wi != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= wi * p;
                }
            }
        }

        let leaving = self.basis[r];
        if leaving < self.m {
            self.is_basic[leaving] = false;
        }
        self.basis[r] = q;
        if q < self.m {
            self.is_basic[q] = true;
        }

        self.pivots += 1;
        self.since_refactor += 1;
        if theta <= DEGENERATE_STEP {
            self.degenerate += 1;
            if self.degenerate > 5 * (self.m + self.n) {
                self.bland = true;
            }
        }
        if self.since_refactor >= REFACTOR_EVERY || self.basis_residual() > RESIDUAL_TOL {
            self.refactor()?;
        }
        Ok(())
    }

    /// `‖B x_B - c‖∞`.
    fn basis_residual(&self) -> f64 {
        let mut r: Vec<f64> = self.inst.c.iter().map(|v| -v).collect();
        let mut col = vec![0.0; self.n];
        for (&var, &x) in self.basis.iter().zip(&self.xb) {
            if x != 0.0 {
                self.column_into(var, &mut col);
                for (ri, ci) in r.iter_mut().zip(&col) {
                    *ri += x * ci;
                }
            }
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        let n = self.n;
        let mut b = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for (i, &var) in self.basis.iter().enumerate() {
            self.column_into(var, &mut col);
            for r in 0..n {
                b[r * n + i] = col[r];
            }
        }
        let lu = Lu::factor(n, b, 1e-13).ok_or_else(|| self.failure("singular basis on refactorisation"))?;
        self.binv = lu.inverse();
        for i in 0..n {
            self.xb[i] = dot(&self.binv[i * n..(i + 1) * n], &self.inst.c);
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis where a structural
    /// column can replace them; rows where none can are redundant.
    fn drive_out_artificials(&mut self) -> Result<(), SolverError> {
        let n = self.n;
        for r in 0..n {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let row: Vec<f64> = self.binv[r * n..(r + 1) * n].to_vec();
            self.inst.a.matvec_into(&row, &mut self.ax);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.m {
                if !self.is_basic[j] && best.is_none_or(|(_, v)| self.ax[j].abs() > v) {
                    best = Some((j, self.ax[j].abs()));
                }
            }
            if let Some((j, v)) = best {
                if v > self.opts.pivot_tol.max(1e-7) {
                    self.compute_direction(j);
                    self.xb[r] = 0.0;
                    self.pivot(j, r, 0.0)?;
                }
            }
        }
        if self.since_refactor > 0 {
            self.refactor()?;
        }
        Ok(())
    }

    fn unbounded_ray(&mut self, infeasibility: f64) -> Result<SolveOutcome, SolverError> {
        self.compute_duals(Phase::One);
        let cpi = dot(&self.pi, &self.inst.c);
        if !(cpi > 0.0) {
            return Err(self.failure(format!(
                "phase-1 infeasibility {infeasibility:e} without a separating direction"
            )));
        }
        let ray: Vec<f64> = self.pi.iter().map(|p| p / cpi).collect();
        Ok(SolveOutcome::Unbounded {
            ray: Vector::new(ray)?,
            pivots: self.pivots,
        })
    }

    fn extract(&mut self) -> Result<SolveOutcome, SolverError> {
        let mut y = vec![0.0; self.m];
        for (&var, &x) in self.basis.iter().zip(&self.xb) {
            if var < self.m {
                if x < -self.opts.feas_tol {
                    return Err(self.failure(format!("basic dual value {x:e} below zero")));
                }
                y[var] = x.max(0.0);
            }
        }
        self.compute_duals(Phase::Two);
        let z_star = y.iter().sum();
        Ok(SolveOutcome::Optimal {
            solution: OptimalSolution {
                z_star,
                x_star: Vector::new(self.pi.clone())?,
                y_star: Vector::new(y)?,
            },
            pivots: self.pivots,
        })
    }
}
