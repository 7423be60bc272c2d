//! Sparse symmetric positive definite solves.
//!
//! Conjugate gradients with a Jacobi preconditioner, followed by iterative
//! refinement against a residual evaluated with error-free products and
//! compensated summation. The refinement matters for the larger hitting-time
//! systems: with diagonal entries around `1e4` and solutions of order one, a
//! plain floating-point residual cannot resolve `1e-10`.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from rows given as `(column, value)` lists. Duplicate
    /// columns within a row are summed.
    pub fn from_rows(n: usize, mut row: impl FnMut(usize, &mut Vec<(usize, f64)>)) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut buf = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            buf.clear();
            row(i, &mut buf);
            buf.sort_unstable_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in &buf {
                debug_assert!(c < n);
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c as u32);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .zip(&self.values[range])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(c, _)| c == i).map_or(0.0, |(_, v)| v))
            .collect()
    }

    /// True when every stored entry has a mirror entry equal within `rel_tol`.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(c, v)| {
                let mirror = self.row(c).find(|&(cc, _)| cc == i).map_or(0.0, |(_, m)| m);
                (v - mirror).abs() <= rel_tol * v.abs().max(mirror.abs())
            })
        })
    }

    /// `b - A x`, accumulated with exact products and compensated sums.
    pub fn residual_compensated(&self, x: &[f64], b: &[f64], r: &mut [f64]) {
        for (i, ri) in r.iter_mut().enumerate() {
            let mut acc = Neumaier::new(b[i]);
            for (c, v) in self.row(i) {
                let p = -v * x[c];
                let err = (-v).mul_add(x[c], -p);
                acc.add(p);
                acc.add(err);
            }
            *ri = acc.total();
        }
    }
}

struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn new(start: f64) -> Self {
        Self {
            sum: start,
            comp: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgSettings {
    /// Target for `max_i |b_i - (A x)_i| / max_i |b_i|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_refinements: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200_000,
            max_refinements: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative infinity-norm residual of the returned solution.
    pub residual: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG from `x = 0`, stopping when the recursive residual
/// satisfies `|r|_inf <= tol`. Returns the iterate and the iteration count.
fn pcg(
    a: &CsrMatrix,
    inv_diag: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize, bool) {
    let n = a.n();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    if inf_norm(&r) <= tol {
        return (x, 0, true);
    }
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return (x, it, false);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if inf_norm(&r) <= tol {
            return (x, it, true);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, max_iter, false)
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], settings: &CgSettings) -> Result<CgOutcome> {
    let n = a.n();
    assert_eq!(b.len(), n, "right-hand side length mismatch");
    let scale = inf_norm(b);
    if n == 0 || scale == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let target = settings.tolerance * scale;

    let (mut x, mut iterations, ok) = pcg(a, &inv_diag, b, target, settings.max_iterations);
    let mut r = vec![0.0; n];
    a.residual_compensated(&x, b, &mut r);
    let mut residual = inf_norm(&r);
    if !ok && residual > target {
        return Err(Error::SolverDiverged {
            iterations,
            residual: residual / scale,
        });
    }
    let mut refinements = 0;
    while residual > target && refinements < settings.max_refinements {
        let (dx, it, _) = pcg(a, &inv_diag, &r, 0.5 * target, settings.max_iterations);
        iterations += it;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        a.residual_compensated(&x, b, &mut r);
        residual = inf_norm(&r);
        refinements += 1;
    }
    if residual > target {
        return Err(Error::SolverDiverged {
            iterations,
            residual: residual / scale,
        });
    }
    Ok(CgOutcome {
        x,
        iterations,
        residual: residual / scale,
    })
}
