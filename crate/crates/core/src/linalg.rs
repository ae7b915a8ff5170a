//! Matrices over Q_p: Smith normal form, absolute determinants, orthonormal
//! kernel bases and lattice-aware affine solves.
//!
//! Orthonormality is with respect to the standard lattice Z_p^N: a family of
//! columns is orthonormal when it extends to a Z_p-basis of Z_p^N, i.e. the
//! column matrix has every Smith divisor equal to a unit.

use crate::error::{Error, Result};
use crate::padic::{AbsValue, DigitStream, PadicContext, PadicScalar, Valuation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<PadicScalar>,
}

impl PadicMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        PadicMatrix { rows, cols, entries: vec![PadicScalar::zero(); rows * cols] }
    }

    pub fn identity(ctx: &PadicContext, n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, ctx.one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<PadicScalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(PadicMatrix { rows: r, cols: c, entries: rows.into_iter().flatten().collect() })
    }

    pub fn from_i64(ctx: &PadicContext, rows: &[&[i64]]) -> Self {
        let data = rows.iter().map(|row| row.iter().map(|&x| ctx.from_i64(x)).collect()).collect();
        Self::from_rows(data).expect("rectangular literal")
    }

    pub fn column_vector(entries: Vec<PadicScalar>) -> Self {
        PadicMatrix { rows: entries.len(), cols: 1, entries }
    }

    /// Matrix with entries drawn uniformly from Z_p, in row-major order.
    pub fn sample_uniform(ctx: &PadicContext, stream: &mut DigitStream, rows: usize, cols: usize) -> Self {
        PadicMatrix { rows, cols, entries: ctx.sample_uniform_vec(stream, rows * cols) }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &PadicScalar {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: PadicScalar) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[PadicScalar] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[PadicScalar] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<PadicScalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<PadicScalar>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Columns `range` as a new matrix.
    pub fn column_block(&self, start: usize, end: usize) -> Self {
        let mut out = Self::zeros(self.rows, end - start);
        for i in 0..self.rows {
            for j in start..end {
                out.set(i, j - start, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn mul(&self, ctx: &PadicContext, other: &PadicMatrix) -> Result<PadicMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let col = other.column(j);
                out.set(i, j, ctx.dot(self.row(i), &col)?);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, ctx: &PadicContext, x: &[PadicScalar]) -> Result<Vec<PadicScalar>> {
        if self.cols != x.len() {
            return Err(Error::DimensionMismatch(format!("{}x{} times {}", self.rows, self.cols, x.len())));
        }
        (0..self.rows).map(|i| ctx.dot(self.row(i), x)).collect()
    }

    pub fn min_valuation(&self) -> Valuation {
        self.entries.iter().map(PadicScalar::valuation).min().unwrap_or(Valuation::Infinite)
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(PadicScalar::is_integral)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

/// Records precision loss instead of failing; lost entries become zero.
struct Lossy<'a> {
    ctx: &'a PadicContext,
    flagged: bool,
}

impl Lossy<'_> {
    /// `a - c * b`
    fn axpy(&mut self, a: &PadicScalar, c: &PadicScalar, b: &PadicScalar) -> PadicScalar {
        let cb = self.ctx.mul(c, b);
        match self.ctx.sub(a, &cb) {
            Ok(v) => v,
            Err(_) => {
                self.flagged = true;
                PadicScalar::zero()
            }
        }
    }

    /// `a + c * b`
    fn apxy(&mut self, a: &PadicScalar, c: &PadicScalar, b: &PadicScalar) -> PadicScalar {
        let cb = self.ctx.mul(c, b);
        match self.ctx.add(a, &cb) {
            Ok(v) => v,
            Err(_) => {
                self.flagged = true;
                PadicScalar::zero()
            }
        }
    }
}

/// `M = U · D · V` with `U`, `V` in GL(Z_p) and `D = diag(p^{v_i})`.
///
/// Divisor valuations are listed in pivot order, which is nondecreasing;
/// the trailing entries are `Infinite` for rank-deficient input.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub u: PadicMatrix,
    pub u_inv: PadicMatrix,
    pub v: PadicMatrix,
    pub v_inv: PadicMatrix,
    pub divisor_valuations: Vec<Valuation>,
    pub rank: usize,
    /// Set when a rank decision or an elimination step ran out of precision.
    pub precision_flagged: bool,
}

impl SmithDecomposition {
    /// `D` as an `a x b` matrix.
    pub fn diagonal(&self, ctx: &PadicContext) -> PadicMatrix {
        let mut d = PadicMatrix::zeros(self.u.rows(), self.v.rows());
        for (i, v) in self.divisor_valuations.iter().enumerate() {
            if let Valuation::Finite(v) = v {
                d.set(i, i, ctx.uniformizer_power(*v));
            }
        }
        d
    }
}

/// Smith normal form by full pivoting on a minimal-valuation entry, first in
/// row-major order among ties.
pub fn smith_normal_form(ctx: &PadicContext, m: &PadicMatrix) -> Result<SmithDecomposition> {
    let (a, b) = (m.rows(), m.cols());
    let mut work = m.clone();
    let mut u = PadicMatrix::identity(ctx, a);
    let mut u_inv = PadicMatrix::identity(ctx, a);
    let mut v = PadicMatrix::identity(ctx, b);
    let mut v_inv = PadicMatrix::identity(ctx, b);
    let mut lossy = Lossy { ctx, flagged: false };
    let window = m.min_valuation().finite().map(|v0| v0 + ctx.precision() as i64);
    let steps = a.min(b);
    let mut divisors = Vec::with_capacity(steps);

    for k in 0..steps {
        let mut best: Option<(usize, usize, i64)> = None;
        for i in k..a {
            for j in k..b {
                if let Valuation::Finite(val) = work.get(i, j).valuation() {
                    if best.is_none_or(|(_, _, bv)| val < bv) {
                        best = Some((i, j, val));
                    }
                }
            }
        }
        let Some((pi, pj, pval)) = best else { break };
        if window.is_some_and(|w| pval >= w) {
            lossy.flagged = true;
            break;
        }

        work.swap_rows(k, pi);
        u_inv.swap_rows(k, pi);
        u.swap_cols(k, pi);
        work.swap_cols(k, pj);
        v_inv.swap_cols(k, pj);
        v.swap_rows(k, pj);

        // Scale the pivot to p^pval: row k of L divided by the unit.
        let pivot = work.get(k, k).clone();
        let unit = ctx.shift(&pivot, -pval);
        let unit_inv = ctx.inv(&unit)?;
        for j in 0..b {
            let e = ctx.mul(work.get(k, j), &unit_inv);
            work.set(k, j, e);
        }
        for j in 0..a {
            let e = ctx.mul(u_inv.get(k, j), &unit_inv);
            u_inv.set(k, j, e);
            let e = ctx.mul(u.get(j, k), &unit);
            u.set(j, k, e);
        }
        let pivot = work.get(k, k).clone();

        for i in k + 1..a {
            if work.get(i, k).is_zero() {
                continue;
            }
            let c = ctx.div(work.get(i, k), &pivot)?;
            for j in k + 1..b {
                let e = lossy.axpy(work.get(i, j), &c, work.get(k, j));
                work.set(i, j, e);
            }
            work.set(i, k, PadicScalar::zero());
            for j in 0..a {
                let e = lossy.axpy(u_inv.get(i, j), &c, u_inv.get(k, j));
                u_inv.set(i, j, e);
            }
            for r in 0..a {
                let e = lossy.apxy(u.get(r, k), &c, u.get(r, i));
                u.set(r, k, e);
            }
        }
        for j in k + 1..b {
            if work.get(k, j).is_zero() {
                continue;
            }
            let c = ctx.div(work.get(k, j), &pivot)?;
            work.set(k, j, PadicScalar::zero());
            for r in 0..b {
                let e = lossy.axpy(v_inv.get(r, j), &c, v_inv.get(r, k));
                v_inv.set(r, j, e);
            }
            for cidx in 0..b {
                let e = lossy.apxy(v.get(k, cidx), &c, v.get(j, cidx));
                v.set(k, cidx, e);
            }
        }
        divisors.push(Valuation::Finite(pval));
    }
    let rank = divisors.len();
    divisors.resize(steps, Valuation::Infinite);
    Ok(SmithDecomposition {
        u,
        u_inv,
        v,
        v_inv,
        divisor_valuations: divisors,
        rank,
        precision_flagged: lossy.flagged,
    })
}

/// Product of the absolute values of the elementary divisors,
/// `p^{-(v_1 + ... + v_min(a,b))}`; zero when any divisor vanishes.
pub fn absolute_det(ctx: &PadicContext, m: &PadicMatrix) -> Result<AbsValue> {
    let snf = smith_normal_form(ctx, m)?;
    absolute_det_of(ctx, &snf)
}

pub fn absolute_det_of(ctx: &PadicContext, snf: &SmithDecomposition) -> Result<AbsValue> {
    let mut total = 0i64;
    for v in &snf.divisor_valuations {
        match v {
            Valuation::Finite(v) => total += v,
            Valuation::Infinite if snf.precision_flagged => {
                return Err(Error::PrecisionExhausted {
                    absolute: ctx.precision() as i64,
                })
            }
            Valuation::Infinite => return Ok(AbsValue::zero(ctx.prime())),
        }
    }
    Ok(AbsValue { p: ctx.prime(), valuation: Valuation::Finite(total) })
}

/// Orthonormal basis of `ker M`, as the columns of an `N x m` matrix.
pub fn orthonormal_kernel_basis(ctx: &PadicContext, m: &PadicMatrix) -> Result<PadicMatrix> {
    let snf = smith_normal_form(ctx, m)?;
    if snf.precision_flagged {
        return Err(Error::PrecisionExhausted { absolute: ctx.precision() as i64 });
    }
    Ok(snf.v_inv.column_block(snf.rank, m.cols()))
}

/// Orthonormal basis of the kernel of the best rank-`rank` approximation of
/// `M`: the trailing columns of `V^{-1}` once `rank` pivots are taken.
pub fn kernel_basis_with_rank(ctx: &PadicContext, m: &PadicMatrix, rank: usize) -> Result<PadicMatrix> {
    let snf = smith_normal_form(ctx, m)?;
    if snf.rank < rank {
        return Err(Error::RankDeficient { rank: snf.rank, required: rank });
    }
    Ok(snf.v_inv.column_block(rank, m.cols()))
}

/// Inverse of a square matrix via its Smith form, `V^{-1} D^{-1} U^{-1}`.
pub fn inverse(ctx: &PadicContext, m: &PadicMatrix) -> Result<PadicMatrix> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
    }
    let n = m.rows();
    let snf = smith_normal_form(ctx, m)?;
    if snf.rank < n {
        if snf.precision_flagged {
            return Err(Error::PrecisionExhausted { absolute: ctx.precision() as i64 });
        }
        return Err(Error::RankDeficient { rank: snf.rank, required: n });
    }
    let mut scaled = snf.u_inv.clone();
    for (i, v) in snf.divisor_valuations.iter().enumerate() {
        let v = v.finite().expect("full rank");
        for j in 0..n {
            let e = ctx.shift(scaled.get(i, j), -v);
            scaled.set(i, j, e);
        }
    }
    snf.v_inv.mul(ctx, &scaled)
}

/// Solves `M x = y` for square invertible `M` by elimination with a
/// minimal-valuation pivot in each column.
pub fn solve_square(ctx: &PadicContext, m: &PadicMatrix, y: &[PadicScalar]) -> Result<Vec<PadicScalar>> {
    let n = m.rows();
    if m.cols() != n || y.len() != n {
        return Err(Error::DimensionMismatch(format!("{}x{} system with {} right-hand sides", n, m.cols(), y.len())));
    }
    let mut rows: Vec<Vec<PadicScalar>> = (0..n)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.push(y[i].clone());
            r
        })
        .collect();
    let mut lossy = Lossy { ctx, flagged: false };
    for k in 0..n {
        let piv = (k..n)
            .min_by_key(|&i| rows[i][k].valuation())
            .filter(|&i| !rows[i][k].is_zero());
        let Some(piv) = piv else {
            if lossy.flagged {
                return Err(Error::PrecisionExhausted { absolute: ctx.precision() as i64 });
            }
            return Err(Error::RankDeficient { rank: k, required: n });
        };
        rows.swap(k, piv);
        let inv = ctx.inv(&rows[k][k])?;
        for i in k + 1..n {
            if rows[i][k].is_zero() {
                continue;
            }
            let c = ctx.mul(&rows[i][k], &inv);
            for j in k + 1..=n {
                let e = lossy.axpy(&rows[i][j], &c, &rows[k][j]);
                rows[i][j] = e;
            }
            rows[i][k] = PadicScalar::zero();
        }
    }
    let mut x = vec![PadicScalar::zero(); n];
    for k in (0..n).rev() {
        let mut acc = rows[k][n].clone();
        for j in k + 1..n {
            acc = lossy.axpy(&acc, &rows[k][j], &x[j]);
        }
        x[k] = ctx.div(&acc, &rows[k][k])?;
    }
    Ok(x)
}

/// `U ∈ GL(N, Z_p)` with `U x = (0, ..., 0, p^{val(x)})`.
pub fn unimodular_transport(ctx: &PadicContext, x: &[PadicScalar]) -> Result<PadicMatrix> {
    let (val, _) = ctx.vec_val_norm(x);
    let Valuation::Finite(v) = val else {
        return Err(Error::ZeroVector);
    };
    let n = x.len();
    let y: Vec<PadicScalar> = x.iter().map(|xi| ctx.shift(xi, -v)).collect();
    let k = y
        .iter()
        .position(|yi| yi.valuation() == Valuation::Finite(0))
        .expect("normalized vector has a unit coordinate");
    // Rows e_j - (y_j / y_k) e_k for j != k, then e_k / y_k.
    let yk_inv = ctx.inv(&y[k])?;
    let mut u = PadicMatrix::zeros(n, n);
    let mut row = 0;
    for j in 0..n {
        if j == k {
            continue;
        }
        u.set(row, j, ctx.one());
        u.set(row, k, ctx.neg(&ctx.mul(&y[j], &yk_inv)));
        row += 1;
    }
    u.set(n - 1, k, yk_inv);
    Ok(u)
}

/// Parametrization of `L_{A,b} ∩ Z_p^N` as `u + W t`, `t ∈ Z_p^{N-n}`.
#[derive(Clone, Debug)]
pub enum AffineSolution {
    Lattice { point: Vec<PadicScalar>, directions: PadicMatrix },
    NoLatticeSolution,
}

pub fn solve_affine_in_o(ctx: &PadicContext, a: &PadicMatrix, b: &[PadicScalar]) -> Result<AffineSolution> {
    let (n, big_n) = (a.rows(), a.cols());
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!("A has {n} rows, b has {}", b.len())));
    }
    let snf = smith_normal_form(ctx, a)?;
    if snf.rank < n {
        if snf.precision_flagged {
            return Err(Error::PrecisionExhausted { absolute: ctx.precision() as i64 });
        }
        return Err(Error::RankDeficient { rank: snf.rank, required: n });
    }
    let c = snf.u_inv.mul_vec(ctx, b)?;
    let mut y = vec![PadicScalar::zero(); big_n];
    for i in 0..n {
        let vi = snf.divisor_valuations[i].finite().expect("full rank");
        if c[i].valuation() < Valuation::Finite(vi) {
            return Ok(AffineSolution::NoLatticeSolution);
        }
        y[i] = ctx.shift(&c[i], -vi);
    }
    let point = snf.v_inv.mul_vec(ctx, &y)?;
    Ok(AffineSolution::Lattice { point, directions: snf.v_inv.column_block(n, big_n) })
}
