//! Variety specifications and the local invariants used by the samplers:
//! tangent spaces, `Nr(X, x)`, the weight `w_X(x)`, and the rescaling that
//! moves a `p^{-r}` ball of X into the unit lattice.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{absolute_det, smith_normal_form, unimodular_transport, PadicMatrix, SmithDecomposition};
use crate::padic::{AbsValue, PadicContext, PadicScalar, Valuation};
use crate::poly::{MultiPoly, PolySystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    /// Affine space `A^N`.
    Affine,
    /// Projective space `P^{N-1}` with `N` homogeneous coordinates.
    Projective,
}

#[derive(Clone, Debug)]
pub struct VarietySpec {
    name: String,
    ambient: Ambient,
    system: PolySystem,
    dim: usize,
    degree_bound: u64,
    jacobian: Vec<Vec<MultiPoly>>,
}

/// A point of a variety: affine coordinates, or the canonical representative
/// of a projective point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarietyPoint {
    pub coords: Vec<PadicScalar>,
    /// Every defining polynomial vanishes to the check level.
    pub residual_ok: bool,
}

impl VarietySpec {
    /// Validates and builds a spec; `degree_bound` defaults to the product of
    /// total degrees.
    pub fn new(
        name: impl Into<String>,
        ambient: Ambient,
        system: PolySystem,
        dim: usize,
        degree_bound: Option<u64>,
    ) -> Result<Self> {
        let big_n = system.num_vars();
        let max_dim = match ambient {
            Ambient::Affine => big_n.saturating_sub(1),
            Ambient::Projective => big_n.saturating_sub(2),
        };
        if dim < 1 || dim > max_dim {
            return Err(Error::InvalidVariety(format!(
                "dimension {dim} is outside 1..={max_dim} for {big_n} coordinates"
            )));
        }
        if ambient == Ambient::Projective && !system.is_homogeneous() {
            return Err(Error::NotHomogeneous);
        }
        let codim = match ambient {
            Ambient::Affine => big_n - dim,
            Ambient::Projective => big_n - 1 - dim,
        };
        if system.len() < codim {
            return Err(Error::InvalidVariety(format!(
                "{} equations cannot cut out codimension {codim}",
                system.len()
            )));
        }
        let degree_bound = degree_bound.unwrap_or_else(|| system.bezout_bound());
        if degree_bound == 0 {
            return Err(Error::InvalidVariety("degree bound must be positive".into()));
        }
        let jacobian = system.jacobian();
        Ok(VarietySpec { name: name.into(), ambient, system, dim, degree_bound, jacobian })
    }

    /// Parses polynomial strings over `vars` and validates.
    pub fn from_strings(
        name: &str,
        ambient: Ambient,
        vars: &[&str],
        polys: &[&str],
        dim: usize,
        degree_bound: Option<u64>,
    ) -> Result<Self> {
        let vars: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
        let system = PolySystem::parse(polys, &vars)?;
        VarietySpec::new(name, ambient, system, dim, degree_bound)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn system(&self) -> &PolySystem {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree_bound(&self) -> u64 {
        self.degree_bound
    }

    pub fn num_vars(&self) -> usize {
        self.system.num_vars()
    }

    /// Number of independent equations at a smooth point: `N - n` for an
    /// affine variety, `N - 1 - n` for the cone over a projective one.
    pub fn codim(&self) -> usize {
        match self.ambient {
            Ambient::Affine => self.num_vars() - self.dim,
            Ambient::Projective => self.num_vars() - 1 - self.dim,
        }
    }

    /// Jacobian of the defining system at `x`; entries that vanish below
    /// the available digits are taken as zero.
    pub fn jacobian_at(&self, ctx: &PadicContext, x: &[PadicScalar]) -> Result<PadicMatrix> {
        let rows = self
            .jacobian
            .iter()
            .map(|row| {
                row.iter()
                    .map(|d| match d.eval(ctx, x) {
                        Err(Error::PrecisionExhausted { .. }) => Ok(PadicScalar::zero()),
                        other => other,
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        PadicMatrix::from_rows(rows)
    }

    /// All `|p_i(x)| <= p^{-level}`.
    pub fn on_variety_at_level(&self, ctx: &PadicContext, x: &[PadicScalar], level: i64) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        self.system.polys().iter().all(|f| match f.eval(ctx, x) {
            Ok(v) => v.valuation() >= Valuation::Finite(level),
            Err(Error::PrecisionExhausted { absolute }) => absolute >= level,
            Err(_) => false,
        })
    }

    pub fn on_variety(&self, ctx: &PadicContext, x: &[PadicScalar]) -> bool {
        self.on_variety_at_level(ctx, x, ctx.check_level())
    }

    /// Some `codim x codim` minor of the Jacobian has valuation below the
    /// check level.
    pub fn is_smooth_point(&self, ctx: &PadicContext, x: &[PadicScalar]) -> bool {
        let Ok(j) = self.jacobian_at(ctx, x) else { return false };
        let Ok(snf) = smith_normal_form(ctx, &j) else { return false };
        self.smooth_from_snf(ctx, &snf)
    }

    fn smooth_from_snf(&self, ctx: &PadicContext, snf: &SmithDecomposition) -> bool {
        let c = self.codim();
        if snf.rank < c {
            return false;
        }
        let minor: i64 = snf.divisor_valuations[..c].iter().map(|v| v.finite().expect("within rank")).sum();
        minor < ctx.check_level()
    }

    fn check_point(&self, ctx: &PadicContext, x: &[PadicScalar]) -> Result<()> {
        if x.len() != self.num_vars() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for {} variables",
                x.len(),
                self.num_vars()
            )));
        }
        if !self.on_variety(ctx, x) {
            return Err(Error::NotOnVariety);
        }
        Ok(())
    }

    /// Orthonormal basis of `T_x X` (affine), or of a complement of the line
    /// `K x` inside the tangent space of the cone (projective); `N x n`.
    pub fn tangent_basis(&self, ctx: &PadicContext, x: &[PadicScalar]) -> Result<PadicMatrix> {
        self.check_point(ctx, x)?;
        let j = self.jacobian_at(ctx, x)?;
        let snf = smith_normal_form(ctx, &j)?;
        let c = self.codim();
        if !self.smooth_from_snf(ctx, &snf) {
            return Err(Error::SingularPoint);
        }
        let big_n = self.num_vars();
        let kernel = snf.v_inv.column_block(c, big_n);
        match self.ambient {
            Ambient::Affine => Ok(kernel),
            Ambient::Projective => {
                // x = kernel * coeffs, with coeffs read off in the V-basis.
                let vx = snf.v.mul_vec(ctx, x)?;
                let coeffs = &vx[c..];
                let uc = unimodular_transport(ctx, coeffs)?;
                let uc_inv = crate::linalg::inverse(ctx, &uc)?;
                let moved = kernel.mul(ctx, &uc_inv)?;
                Ok(moved.column_block(0, self.dim))
            }
        }
    }

    /// `Nr(X, x) = N(S_x U W)` for an affine variety.
    pub fn nr_at(&self, ctx: &PadicContext, x: &[PadicScalar]) -> Result<AbsValue> {
        if self.ambient != Ambient::Affine {
            return Err(Error::InvalidVariety("Nr is defined for affine varieties".into()));
        }
        let w = self.tangent_basis(ctx, x)?;
        let (val, _) = ctx.vec_val_norm(x);
        let Valuation::Finite(v) = val else {
            return absolute_det(ctx, &w);
        };
        let u = unimodular_transport(ctx, x)?;
        let mut uw = u.mul(ctx, &w)?;
        if v < 0 {
            let last = uw.rows() - 1;
            for j in 0..uw.cols() {
                let e = ctx.shift(uw.get(last, j), -v);
                uw.set(last, j, e);
            }
        }
        absolute_det(ctx, &uw)
    }

    /// `w_X(x) = C max(1, ||x||^n) / Nr(X, x)` as an exact rational.
    pub fn weight_at(&self, ctx: &PadicContext, x: &[PadicScalar]) -> Result<BigRational> {
        let nr = self.nr_at(ctx, x)?;
        let Valuation::Finite(nr_val) = nr.valuation else {
            return Err(Error::SingularPoint);
        };
        let (val, _) = ctx.vec_val_norm(x);
        let growth = match val {
            Valuation::Finite(v) if v < 0 => -v * self.dim as i64,
            _ => 0,
        };
        let scale = AbsValue { p: ctx.prime(), valuation: Valuation::Finite(-(growth + nr_val)) };
        Ok(lattice_weight(ctx.prime(), self.dim) * scale.to_rational())
    }
}

/// `(1 - q^{-(n+1)}) / (1 - q^{-1})`: the weight of every lattice point of an
/// n-dimensional affine variety, and the volume of `P^n`.
pub fn lattice_weight(q: u64, n: usize) -> BigRational {
    let q = BigInt::from(q);
    let qn: BigInt = Pow::pow(&q, n as u64);
    let num = &qn * &q - BigInt::one();
    let den = qn * (q - BigInt::one());
    BigRational::new(num, den)
}

/// Spec of `p^r X`: substitute `x -> p^{-r} x` and multiply each equation by
/// the least power `p^s`, `s >= 0`, that makes it integral.
pub fn rescale_variety(spec: &VarietySpec, r: u32, p: u64) -> Result<VarietySpec> {
    if spec.ambient != Ambient::Affine {
        return Err(Error::InvalidVariety("only affine varieties are rescaled".into()));
    }
    if r == 0 {
        return Ok(spec.clone());
    }
    let pb = BigInt::from(p);
    let val_p = |c: &BigInt| {
        let mut c = c.clone();
        let mut v = 0i64;
        while (&c % &pb) == BigInt::from(0) {
            c /= &pb;
            v += 1;
        }
        v
    };
    let polys = spec
        .system
        .polys()
        .iter()
        .map(|f| {
            let s = f
                .terms()
                .iter()
                .map(|(e, c)| r as i64 * e.iter().sum::<u32>() as i64 - val_p(c))
                .max()
                .unwrap_or(0)
                .max(0);
            let terms = f.terms().iter().map(|(e, c)| {
                let k = s - r as i64 * e.iter().sum::<u32>() as i64;
                let c = if k >= 0 {
                    c * Pow::pow(&pb, k as u64)
                } else {
                    c / Pow::pow(&pb, (-k) as u64)
                };
                (e.clone(), c)
            });
            MultiPoly::from_terms(f.variables().to_vec(), terms)
        })
        .collect();
    let system = PolySystem::new(spec.system.variables().to_vec(), polys)?;
    VarietySpec::new(spec.name.clone(), spec.ambient, system, spec.dim, Some(spec.degree_bound))
}

/// Representative with `||x|| = 1` whose first unit coordinate equals 1.
pub fn canonical_projective(ctx: &PadicContext, x: &[PadicScalar]) -> Result<Vec<PadicScalar>> {
    let (val, _) = ctx.vec_val_norm(x);
    let Valuation::Finite(v) = val else {
        return Err(Error::ZeroVector);
    };
    let y: Vec<PadicScalar> = x.iter().map(|xi| ctx.shift(xi, -v)).collect();
    let lead = y
        .iter()
        .find(|yi| yi.valuation() == Valuation::Finite(0))
        .expect("normalized vector has a unit coordinate")
        .clone();
    let inv = ctx.inv(&lead)?;
    Ok(y.iter().map(|yi| ctx.mul(yi, &inv)).collect())
}

/// `d(x, y) = max |x_i y_j - x_j y_i|` on unit representatives.
pub fn fubini_study_distance(ctx: &PadicContext, x: &[PadicScalar], y: &[PadicScalar]) -> AbsValue {
    let mut best = Valuation::Infinite;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let a = ctx.mul(&x[i], &y[j]);
            let b = ctx.mul(&x[j], &y[i]);
            if let Ok(m) = ctx.sub(&a, &b) {
                best = best.min(m.valuation());
            }
        }
    }
    AbsValue { p: ctx.prime(), valuation: best }
}
