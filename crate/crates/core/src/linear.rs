//! Small dense linear-inequality systems: feasibility and optimization by
//! the simplex method, Fourier–Motzkin projection, redundancy removal and
//! vertex enumeration.
//!
//! Everything is generic over [`Scalar`], so the same code runs on `f64`
//! with a geometric tolerance and on exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Tolerance for sign tests on floating-point data.
pub const GEOM_TOL: f64 = 1e-9;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Sign with the type's tolerance applied.
    fn sign(&self) -> Ordering;
    fn abs_val(&self) -> Self;

    fn is_zero_tol(&self) -> bool {
        self.sign() == Ordering::Equal
    }
    fn is_pos(&self) -> bool {
        self.sign() == Ordering::Greater
    }
    fn is_neg(&self) -> bool {
        self.sign() == Ordering::Less
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sign(&self) -> Ordering {
        if *self > GEOM_TOL {
            Ordering::Greater
        } else if *self < -GEOM_TOL {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

impl Scalar for BigRational {
    /// Exact: every finite double is a dyadic rational.
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }
    fn to_f64(&self) -> f64 {
        self.numer().to_f64().unwrap_or(f64::NAN) / self.denom().to_f64().unwrap_or(f64::NAN)
    }
    fn sign(&self) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

/// The inequality `coeffs . x <= bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace<S> {
    pub coeffs: Vec<S>,
    pub bound: S,
}

impl<S: Scalar> Halfspace<S> {
    pub fn new(coeffs: Vec<S>, bound: S) -> Self {
        Self { coeffs, bound }
    }

    fn value(&self, x: &[S]) -> S {
        self.coeffs.iter().zip(x).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    pub fn satisfied_by(&self, x: &[S]) -> bool {
        !(self.value(x) - self.bound.clone()).is_pos()
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero_tol)
    }

    /// Scales so the largest coefficient magnitude is one.
    fn normalized(&self) -> Self {
        let m = self.coeffs.iter().map(Scalar::abs_val).fold(S::zero(), |a, b| if b > a { b } else { a });
        if m.is_zero_tol() {
            return self.clone();
        }
        Self { coeffs: self.coeffs.iter().map(|c| c.clone() / m.clone()).collect(), bound: self.bound.clone() / m }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { value: S, point: Vec<S> },
    Unbounded,
    Infeasible,
}

/// A polyhedron `{x : A x <= b}` over free variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem<S> {
    pub dim: usize,
    pub rows: Vec<Halfspace<S>>,
}

impl<S: Scalar> LinearSystem<S> {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: Vec::new() }
    }

    pub fn push(&mut self, coeffs: Vec<S>, bound: S) {
        assert_eq!(coeffs.len(), self.dim, "coefficient vector length");
        self.rows.push(Halfspace::new(coeffs, bound));
    }

    /// Adds `x_j >= 0` for every coordinate.
    pub fn with_nonnegativity(mut self) -> Self {
        for j in 0..self.dim {
            let mut c = vec![S::zero(); self.dim];
            c[j] = -S::one();
            self.push(c, S::zero());
        }
        self
    }

    pub fn contains(&self, x: &[S]) -> bool {
        self.rows.iter().all(|r| r.satisfied_by(x))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LinearSystem<T> {
        LinearSystem {
            dim: self.dim,
            rows: self.rows.iter().map(|r| Halfspace { coeffs: r.coeffs.iter().map(&f).collect(), bound: f(&r.bound) }).collect(),
        }
    }

    pub fn to_f64(&self) -> LinearSystem<f64> {
        self.map(Scalar::to_f64)
    }

    /// Maximizes `c . x` over the system.
    pub fn maximize(&self, c: &[S]) -> LpOutcome<S> {
        simplex(self, c)
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self.maximize(&vec![S::zero(); self.dim]), LpOutcome::Infeasible)
    }

    /// Drops duplicate and dominated parallel rows, then every row implied by
    /// the remaining ones. Rows with all-zero coefficients are kept only if
    /// they are infeasible.
    pub fn remove_redundant(&self) -> Self {
        let mut rows: Vec<Halfspace<S>> = Vec::new();
        for r in &self.rows {
            if r.is_trivial() {
                if r.bound.is_neg() {
                    rows.push(r.clone());
                }
                continue;
            }
            let n = r.normalized();
            match rows.iter_mut().find(|o| o.coeffs.iter().zip(&n.coeffs).all(|(a, b)| (a.clone() - b.clone()).is_zero_tol())) {
                Some(o) => {
                    if n.bound < o.bound {
                        o.bound = n.bound;
                    }
                }
                None => rows.push(n),
            }
        }
        if rows.iter().any(|r| r.is_trivial()) {
            return Self { dim: self.dim, rows };
        }
        let mut keep = vec![true; rows.len()];
        for i in 0..rows.len() {
            let others = Self {
                dim: self.dim,
                rows: rows.iter().enumerate().filter(|&(j, _)| j != i && keep[j]).map(|(_, r)| r.clone()).collect(),
            };
            match others.maximize(&rows[i].coeffs) {
                LpOutcome::Optimal { value, .. } => {
                    if !(value - rows[i].bound.clone()).is_pos() {
                        keep[i] = false;
                    }
                }
                LpOutcome::Infeasible => keep[i] = false,
                LpOutcome::Unbounded => {}
            }
        }
        Self { dim: self.dim, rows: rows.into_iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r).collect() }
    }

    /// Vertices of a bounded system, sorted lexicographically.
    pub fn vertices(&self) -> Vec<Vec<S>> {
        let d = self.dim;
        let mut out: Vec<Vec<S>> = Vec::new();
        if d == 0 {
            return if self.contains(&[]) { vec![vec![]] } else { vec![] };
        }
        for combo in combinations(self.rows.len(), d) {
            let a: Vec<Vec<S>> = combo.iter().map(|&i| self.rows[i].coeffs.clone()).collect();
            let b: Vec<S> = combo.iter().map(|&i| self.rows[i].bound.clone()).collect();
            let Some(x) = solve_square(a, b) else { continue };
            if self.contains(&x) && !out.iter().any(|v| same_point(v, &x)) {
                out.push(x);
            }
        }
        out.sort_by(|a, b| lex_cmp(a, b));
        out
    }
}

/// Projects `sys` onto the coordinates not listed in `eliminate`, keeping
/// their relative order. Redundant rows are removed after every step.
pub fn fourier_motzkin<S: Scalar>(sys: &LinearSystem<S>, eliminate: &[usize]) -> LinearSystem<S> {
    let mut cur = sys.remove_redundant();
    let mut order: Vec<usize> = eliminate.to_vec();
    order.sort_unstable();
    order.dedup();
    for &k in order.iter().rev() {
        let mut next = LinearSystem::new(cur.dim - 1);
        let drop_col = |c: &[S]| -> Vec<S> { c.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, v)| v.clone()).collect() };
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for r in &cur.rows {
            match r.coeffs[k].sign() {
                Ordering::Greater => pos.push(r),
                Ordering::Less => neg.push(r),
                Ordering::Equal => next.rows.push(Halfspace::new(drop_col(&r.coeffs), r.bound.clone())),
            }
        }
        for p in &pos {
            for n in &neg {
                let (wp, wn) = (-n.coeffs[k].clone(), p.coeffs[k].clone());
                let coeffs: Vec<S> = p.coeffs.iter().zip(&n.coeffs).map(|(a, b)| a.clone() * wp.clone() + b.clone() * wn.clone()).collect();
                let bound = p.bound.clone() * wp + n.bound.clone() * wn;
                next.rows.push(Halfspace::new(drop_col(&coeffs), bound));
            }
        }
        cur = next.remove_redundant();
    }
    cur
}

fn same_point<S: Scalar>(a: &[S], b: &[S]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x.clone() - y.clone()).is_zero_tol())
}

fn lex_cmp<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match (x.clone() - y.clone()).sign() {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_square<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Option<Vec<S>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs_val().partial_cmp(&a[j][col].abs_val()).unwrap_or(Ordering::Equal))?;
        if a[piv][col].is_zero_tol() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r == col || a[r][col].is_zero_tol() {
                continue;
            }
            let f = a[r][col].clone() / a[col][col].clone();
            for c in col..n {
                let v = a[col][c].clone() * f.clone();
                a[r][c] = a[r][c].clone() - v;
            }
            let v = b[col].clone() * f;
            b[r] = b[r].clone() - v;
        }
    }
    Some((0..n).map(|i| b[i].clone() / a[i][i].clone()).collect())
}

/// Two-phase tableau simplex with Bland's rule on `max c.x, A x <= b`, with
/// `x = x+ - x-` split into nonnegative parts.
fn simplex<S: Scalar>(sys: &LinearSystem<S>, c: &[S]) -> LpOutcome<S> {
    let d = sys.dim;
    let m = sys.rows.len();
    // Columns: x+ (d), x- (d), slack (m), artificial (m), rhs.
    let nv = 2 * d + 2 * m;
    let mut t: Vec<Vec<S>> = Vec::with_capacity(m + 1);
    let mut basis = vec![0usize; m];
    for (i, r) in sys.rows.iter().enumerate() {
        let flip = r.bound.is_neg();
        let s = |v: S| if flip { -v } else { v };
        let mut row = vec![S::zero(); nv + 1];
        for j in 0..d {
            row[j] = s(r.coeffs[j].clone());
            row[d + j] = s(-r.coeffs[j].clone());
        }
        row[2 * d + i] = s(S::one());
        row[2 * d + m + i] = S::one();
        row[nv] = s(r.bound.clone());
        t.push(row);
        basis[i] = 2 * d + m + i;
    }
    // Phase one: minimize the sum of artificials.
    let mut obj = vec![S::zero(); nv + 1];
    for row in &t {
        for j in 0..=nv {
            if j < 2 * d + m || j == nv {
                obj[j] = obj[j].clone() + row[j].clone();
            }
        }
    }
    t.push(obj);
    let allowed1 = |j: usize| j < 2 * d + m;
    if !pivot_loop(&mut t, &mut basis, nv, &allowed1) {
        return LpOutcome::Unbounded;
    }
    if t[m][nv].is_pos() {
        return LpOutcome::Infeasible;
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= 2 * d + m {
            if let Some(j) = (0..2 * d + m).find(|&j| !t[i][j].is_zero_tol()) {
                pivot(&mut t, &mut basis, i, j, nv);
            }
        }
    }
    // Phase two objective row: reduced costs of -c.
    let mut obj = vec![S::zero(); nv + 1];
    for j in 0..d {
        obj[j] = c[j].clone();
        obj[d + j] = -c[j].clone();
    }
    for i in 0..m {
        let cb = obj[basis[i]].clone();
        if cb.is_zero_tol() {
            continue;
        }
        for j in 0..=nv {
            obj[j] = obj[j].clone() - cb.clone() * t[i][j].clone();
        }
    }
    t[m] = obj;
    let allowed2 = |j: usize| j < 2 * d + m;
    if !pivot_loop(&mut t, &mut basis, nv, &allowed2) {
        return LpOutcome::Unbounded;
    }
    let mut point = vec![S::zero(); d];
    for i in 0..m {
        let b = basis[i];
        if b < d {
            point[b] = point[b].clone() + t[i][nv].clone();
        } else if b < 2 * d {
            point[b - d] = point[b - d].clone() - t[i][nv].clone();
        }
    }
    let value = c.iter().zip(&point).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
    LpOutcome::Optimal { value, point }
}

/// Pivots until no entering column improves the objective row (which holds
/// reduced costs to be maximized). Returns false when unbounded.
fn pivot_loop<S: Scalar>(t: &mut [Vec<S>], basis: &mut [usize], nv: usize, allowed: &dyn Fn(usize) -> bool) -> bool {
    let m = basis.len();
    loop {
        let Some(enter) = (0..nv).find(|&j| allowed(j) && t[m][j].is_pos()) else { return true };
        let mut leave: Option<(usize, S)> = None;
        for i in 0..m {
            if t[i][enter].is_pos() {
                let ratio = t[i][nv].clone() / t[i][enter].clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => match (ratio.clone() - lr.clone()).sign() {
                        Ordering::Less => true,
                        Ordering::Equal => basis[i] < basis[*li],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((row, _)) = leave else { return false };
        pivot(t, basis, row, enter, nv);
    }
}

fn pivot<S: Scalar>(t: &mut [Vec<S>], basis: &mut [usize], row: usize, col: usize, nv: usize) {
    let p = t[row][col].clone();
    for j in 0..=nv {
        t[row][j] = t[row][j].clone() / p.clone();
    }
    let pr = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row || r[col].is_zero_tol() {
            continue;
        }
        let f = r[col].clone();
        for j in 0..=nv {
            r[j] = r[j].clone() - f.clone() * pr[j].clone();
        }
    }
    basis[row] = col;
}
