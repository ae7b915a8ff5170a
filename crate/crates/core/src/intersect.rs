//! Zero-dimensional solving over Z_p and the slice intersections `X ∩ L`.
//!
//! Roots are found by enumerating residues mod p. A residue where some
//! square subsystem has an invertible Jacobian mod p is Newton-lifted; other
//! residues are refined by substituting `r + p s` and recursing.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::linalg::{orthonormal_kernel_basis, solve_affine_in_o, solve_square, AffineSolution, PadicMatrix};
use crate::padic::{PadicContext, PadicScalar, Valuation};
use crate::poly::{substitute_affine, ModPPoly, PadicPoly};
use crate::variety::{canonical_projective, Ambient, VarietySpec, VarietyPoint};

/// Largest residue space `p^m` enumerated in one solve.
pub const MAX_RESIDUES: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverOptions {
    /// Refinement levels before a singular residue is declared degenerate.
    pub max_depth: u32,
}

impl SolverOptions {
    pub fn for_context(ctx: &PadicContext) -> Self {
        SolverOptions { max_depth: ctx.check_level() as u32 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ZeroDimSolution {
    /// Roots in Z_p^m, sorted by residue.
    pub roots: Vec<Vec<PadicScalar>>,
    pub degenerate: bool,
    pub residue_candidates_tried: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SliceIntersection {
    pub points: Vec<VarietyPoint>,
    /// A singular residue could not be resolved, or precision ran out; the
    /// slice should be redrawn.
    pub degenerate: bool,
    pub residue_candidates_tried: u64,
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % p as u128) as u64;
        }
        b = (b as u128 * b as u128 % p as u128) as u64;
        e >>= 1;
    }
    r
}

fn det_mod_p_nonzero(mut m: Vec<Vec<u64>>, p: u64) -> bool {
    let n = m.len();
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| m[i][k] != 0) else { return false };
        m.swap(k, piv);
        let inv = pow_mod(m[k][k], p - 2, p);
        for i in k + 1..n {
            let f = (m[i][k] as u128 * inv as u128 % p as u128) as u64;
            if f == 0 {
                continue;
            }
            for j in k..n {
                let sub = (f as u128 * m[k][j] as u128 % p as u128) as u64;
                m[i][j] = (m[i][j] + p - sub) % p;
            }
        }
    }
    true
}

/// Size-m index subsets of `0..r` in lexicographic order.
fn combinations(r: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, r: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..r {
            cur.push(i);
            go(i + 1, r, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, r, m, &mut Vec::new(), &mut out);
    out
}

fn residue_vectors(p: u64, m: usize) -> impl Iterator<Item = Vec<u64>> {
    let total = p.pow(m as u32);
    (0..total).map(move |mut k| {
        let mut v = vec![0; m];
        for slot in v.iter_mut() {
            *slot = k % p;
            k /= p;
        }
        v
    })
}

/// Values that vanish below the available digits count as zero.
fn eval_or_zero(ctx: &PadicContext, g: &PadicPoly, x: &[PadicScalar]) -> Result<PadicScalar> {
    match g.eval(ctx, x) {
        Err(Error::PrecisionExhausted { .. }) => Ok(PadicScalar::zero()),
        other => other,
    }
}

fn residual_ok(ctx: &PadicContext, g: &PadicPoly, x: &[PadicScalar]) -> bool {
    match g.eval(ctx, x) {
        Ok(v) => v.valuation() >= Valuation::Finite(ctx.check_level()),
        Err(Error::PrecisionExhausted { absolute }) => absolute >= ctx.check_level(),
        Err(_) => false,
    }
}

/// Newton iteration on the square subsystem `subset`, starting at `start`.
fn newton(ctx: &PadicContext, polys: &[PadicPoly], subset: &[usize], start: Vec<PadicScalar>) -> Result<Vec<PadicScalar>> {
    let m = start.len();
    let derivs: Vec<Vec<PadicPoly>> = subset
        .iter()
        .map(|&i| (0..m).map(|j| polys[i].derivative(ctx, j)).collect())
        .collect();
    let mut x = start;
    let rounds = 2 * (32 - ctx.precision().leading_zeros()) + 4;
    for _ in 0..rounds {
        let g: Vec<PadicScalar> = subset.iter().map(|&i| eval_or_zero(ctx, &polys[i], &x)).collect::<Result<_>>()?;
        if g.iter().all(PadicScalar::is_zero) {
            break;
        }
        let rows = derivs
            .iter()
            .map(|row| row.iter().map(|d| eval_or_zero(ctx, d, &x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let j = PadicMatrix::from_rows(rows)?;
        let delta = solve_square(ctx, &j, &g)?;
        if delta.iter().all(|d| d.valuation() >= Valuation::Finite(ctx.precision() as i64)) {
            break;
        }
        x = x
            .iter()
            .zip(&delta)
            .map(|(xi, di)| match ctx.sub(xi, di) {
                Err(Error::PrecisionExhausted { .. }) => PadicScalar::zero(),
                other => other.expect("subtraction fails only by exhaustion"),
            })
            .collect();
    }
    Ok(x)
}

struct Search<'a> {
    ctx: &'a PadicContext,
    opts: SolverOptions,
    tried: u64,
    budget: u64,
    degenerate: bool,
}

impl Search<'_> {
    /// Roots of primitive integral `polys` in Z_p^m.
    fn solve(&mut self, polys: &[PadicPoly], m: usize, depth: u32) -> Result<Vec<Vec<PadicScalar>>> {
        let ctx = self.ctx;
        let p = ctx.prime();
        let mod_p: Vec<ModPPoly> = polys.iter().map(|g| g.to_mod_p(ctx)).collect::<Result<_>>()?;
        let jac_p: Vec<Vec<ModPPoly>> = mod_p.iter().map(|g| (0..m).map(|j| g.derivative(j)).collect()).collect();
        let subsets = combinations(polys.len(), m);
        let mut roots = Vec::new();
        for r in residue_vectors(p, m) {
            self.tried += 1;
            if self.tried > self.budget {
                self.degenerate = true;
                return Ok(roots);
            }
            if mod_p.iter().any(|g| g.eval(&r) != 0) {
                continue;
            }
            let regular = subsets.iter().find(|s| {
                let minor = s.iter().map(|&i| jac_p[i].iter().map(|d| d.eval(&r)).collect()).collect();
                det_mod_p_nonzero(minor, p)
            });
            let start: Vec<PadicScalar> = r.iter().map(|&ri| ctx.from_i64(ri as i64)).collect();
            if let Some(subset) = regular {
                roots.push(newton(ctx, polys, subset, start)?);
                continue;
            }
            if depth >= self.opts.max_depth {
                self.degenerate = true;
                continue;
            }
            let step = scaled_identity(ctx, m, 1);
            let mut refined = Vec::with_capacity(polys.len());
            for g in polys {
                let h = g.compose_linear(ctx, &start, &step)?;
                match normalize(ctx, h) {
                    Normalized::Poly(h) => refined.push(h),
                    Normalized::Vanishes => {}
                    Normalized::Unknown => {
                        self.degenerate = true;
                        refined.clear();
                        break;
                    }
                }
            }
            if refined.len() < m {
                self.degenerate = true;
                continue;
            }
            for s in self.solve(&refined, m, depth + 1)? {
                let t = start
                    .iter()
                    .zip(&s)
                    .map(|(ri, si)| ctx.add(ri, &ctx.shift(si, 1)))
                    .collect::<Result<Vec<_>>>()?;
                roots.push(t);
            }
        }
        Ok(roots)
    }
}

fn scaled_identity(ctx: &PadicContext, m: usize, k: i64) -> PadicMatrix {
    let mut w = PadicMatrix::zeros(m, m);
    for i in 0..m {
        w.set(i, i, ctx.uniformizer_power(k));
    }
    w
}

enum Normalized {
    Poly(PadicPoly),
    /// Identically zero: imposes no condition.
    Vanishes,
    /// Too few digits survive to decide anything.
    Unknown,
}

fn normalize(ctx: &PadicContext, g: PadicPoly) -> Normalized {
    if g.is_zero() {
        return match g.floor() {
            None => Normalized::Vanishes,
            Some(_) => Normalized::Unknown,
        };
    }
    let (h, _) = g.make_primitive(ctx);
    match h.floor() {
        Some(f) if f < ctx.check_level() => Normalized::Unknown,
        _ => Normalized::Poly(h),
    }
}

fn residue_key(ctx: &PadicContext, x: &[PadicScalar]) -> Vec<BigUint> {
    let level = ctx.check_level() as u32;
    x.iter().map(|xi| ctx.residue(xi, level).unwrap_or_default()).collect()
}

/// All roots in Z_p^m of the system, which needs at least m equations.
pub fn solve_zero_dim_in_o(ctx: &PadicContext, polys: &[PadicPoly], opts: SolverOptions) -> Result<ZeroDimSolution> {
    let Some(m) = polys.first().map(PadicPoly::num_vars) else {
        return Err(Error::DimensionMismatch("empty system".into()));
    };
    if polys.iter().any(|g| g.num_vars() != m) {
        return Err(Error::DimensionMismatch("equations over different variables".into()));
    }
    let space = (ctx.prime() as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if space > MAX_RESIDUES {
        return Err(Error::ResidueSpaceTooLarge(space));
    }
    let mut normalized = Vec::new();
    let mut unknown = false;
    for g in polys {
        if g.min_valuation() < Valuation::Finite(0) {
            return Err(Error::NegativeValuationCoefficient);
        }
        match normalize(ctx, g.clone()) {
            Normalized::Poly(h) => normalized.push(h),
            Normalized::Vanishes => {}
            Normalized::Unknown => unknown = true,
        }
    }
    if unknown || normalized.len() < m {
        return Ok(ZeroDimSolution { roots: Vec::new(), degenerate: true, residue_candidates_tried: 0 });
    }
    let mut search = Search { ctx, opts, tried: 0, budget: 64 * space as u64, degenerate: false };
    let found = search.solve(&normalized, m, 0)?;
    let mut roots: Vec<Vec<PadicScalar>> = found
        .into_iter()
        .filter(|t| normalized.iter().all(|g| residual_ok(ctx, g, t)))
        .collect();
    roots.sort_by_cached_key(|t| residue_key(ctx, t));
    Ok(ZeroDimSolution { roots, degenerate: search.degenerate, residue_candidates_tried: search.tried })
}

/// Hensel lift of a simple root `r0` of a univariate `g` modulo p.
pub fn lift_simple_root(ctx: &PadicContext, g: &PadicPoly, r0: u64) -> Result<PadicScalar> {
    if g.num_vars() != 1 {
        return Err(Error::DimensionMismatch("univariate polynomial expected".into()));
    }
    let gp = g.to_mod_p(ctx)?;
    if gp.eval(&[r0]) != 0 || gp.derivative(0).eval(&[r0]) == 0 {
        return Err(Error::DegenerateRoot);
    }
    let root = newton(ctx, std::slice::from_ref(g), &[0], vec![ctx.from_i64(r0 as i64)])?;
    Ok(root.into_iter().next().expect("one coordinate"))
}

/// All roots of a univariate polynomial in Z_p.
pub fn univariate_roots_in_o(ctx: &PadicContext, g: &PadicPoly) -> Result<Vec<PadicScalar>> {
    if g.num_vars() != 1 {
        return Err(Error::DimensionMismatch("univariate polynomial expected".into()));
    }
    if g.is_zero() {
        return Err(Error::DegenerateRoot);
    }
    let sol = solve_zero_dim_in_o(ctx, std::slice::from_ref(g), SolverOptions::for_context(ctx))?;
    if sol.degenerate {
        return Err(Error::DegenerateRoot);
    }
    Ok(sol.roots.into_iter().map(|mut r| r.remove(0)).collect())
}

fn sort_points(ctx: &PadicContext, points: &mut [VarietyPoint]) {
    points.sort_by_cached_key(|pt| residue_key(ctx, &pt.coords));
}

/// `X ∩ L_{A,b} ∩ Z_p^N` for an affine variety.
pub fn intersect_affine(ctx: &PadicContext, x: &VarietySpec, a: &PadicMatrix, b: &[PadicScalar]) -> Result<SliceIntersection> {
    if x.ambient() != Ambient::Affine {
        return Err(Error::InvalidVariety("affine slicing of a projective variety".into()));
    }
    if a.rows() != x.dim() || a.cols() != x.num_vars() {
        return Err(Error::DimensionMismatch(format!(
            "slice matrix is {}x{}, expected {}x{}",
            a.rows(),
            a.cols(),
            x.dim(),
            x.num_vars()
        )));
    }
    let (u, w) = match solve_affine_in_o(ctx, a, b)? {
        AffineSolution::NoLatticeSolution => return Ok(SliceIntersection::default()),
        AffineSolution::Lattice { point, directions } => (point, directions),
    };
    let polys = substitute_affine(ctx, x.system(), &u, &w)?;
    let sol = solve_zero_dim_in_o(ctx, &polys, SolverOptions::for_context(ctx))?;
    let mut out = SliceIntersection {
        points: Vec::with_capacity(sol.roots.len()),
        degenerate: sol.degenerate,
        residue_candidates_tried: sol.residue_candidates_tried,
    };
    for t in sol.roots {
        let wt = w.mul_vec(ctx, &t)?;
        let coords = u.iter().zip(&wt).map(|(ui, vi)| ctx.add(ui, vi)).collect::<Result<Vec<_>>>()?;
        let ok = x.on_variety(ctx, &coords);
        out.degenerate |= !ok;
        out.points.push(VarietyPoint { coords, residual_ok: ok });
    }
    sort_points(ctx, &mut out.points);
    Ok(out)
}

/// `X ∩ L_A` for a projective variety, as canonical representatives.
pub fn intersect_projective(ctx: &PadicContext, x: &VarietySpec, a: &PadicMatrix) -> Result<SliceIntersection> {
    if x.ambient() != Ambient::Projective {
        return Err(Error::InvalidVariety("projective slicing of an affine variety".into()));
    }
    let big_n = x.num_vars();
    if a.rows() != x.dim() || a.cols() != big_n {
        return Err(Error::DimensionMismatch(format!(
            "slice matrix is {}x{}, expected {}x{}",
            a.rows(),
            a.cols(),
            x.dim(),
            big_n
        )));
    }
    let kernel = orthonormal_kernel_basis(ctx, a)?;
    let k = big_n - x.dim();
    if kernel.cols() != k {
        return Err(Error::RankDeficient { rank: big_n - kernel.cols(), required: x.dim() });
    }
    let mut out = SliceIntersection::default();
    // Chart i: s_i = 1, s_j = p t_j for j < i, s_j = t_j for j > i.
    for i in 0..k {
        let mut chart = PadicMatrix::zeros(k, k - 1);
        let mut col = 0;
        for j in 0..k {
            if j == i {
                continue;
            }
            let entry = if j < i { ctx.uniformizer_power(1) } else { ctx.one() };
            chart.set(j, col, entry);
            col += 1;
        }
        let base = kernel.column(i);
        let directions = kernel.mul(ctx, &chart)?;
        let polys = substitute_affine(ctx, x.system(), &base, &directions)?;
        let sol = solve_zero_dim_in_o(ctx, &polys, SolverOptions::for_context(ctx))?;
        out.degenerate |= sol.degenerate;
        out.residue_candidates_tried += sol.residue_candidates_tried;
        for t in sol.roots {
            let dt = directions.mul_vec(ctx, &t)?;
            let raw = base.iter().zip(&dt).map(|(bi, di)| ctx.add(bi, di)).collect::<Result<Vec<_>>>()?;
            let coords = canonical_projective(ctx, &raw)?;
            let ok = x.on_variety(ctx, &coords);
            out.degenerate |= !ok;
            out.points.push(VarietyPoint { coords, residual_ok: ok });
        }
    }
    sort_points(ctx, &mut out.points);
    Ok(out)
}
