use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use super::PolySystem;
use super::MultiPoly;
use crate::error::{Error, Result};
use crate::linalg::PadicMatrix;
use crate::padic::{PadicContext, PadicScalar, Valuation};

/// Polynomial with p-adic coefficients.
///
/// Coefficient sums that cancel below their known digits are dropped; `floor`
/// then records the absolute precision `k` such that every coefficient is
/// known modulo `p^k`. `None` means every coefficient is exact to its digits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, PadicScalar>,
    floor: Option<i64>,
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn add_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    Some(a? + b?)
}

/// Sums buckets of contributions, dropping exhausted cancellations.
fn collect(
    ctx: &PadicContext,
    nvars: usize,
    buckets: BTreeMap<Vec<u32>, Vec<PadicScalar>>,
    mut floor: Option<i64>,
) -> PadicPoly {
    let mut terms = BTreeMap::new();
    for (e, parts) in buckets {
        match ctx.sum(&parts) {
            Ok(s) if s.is_zero() => {}
            Ok(s) => {
                terms.insert(e, s);
            }
            Err(Error::PrecisionExhausted { absolute }) => floor = min_opt(floor, Some(absolute)),
            Err(other) => unreachable!("sum only fails by exhaustion: {other}"),
        }
    }
    PadicPoly { nvars, terms, floor }
}

impl PadicPoly {
    pub fn zero(nvars: usize) -> Self {
        PadicPoly { nvars, terms: BTreeMap::new(), floor: None }
    }

    pub fn constant(nvars: usize, c: PadicScalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; nvars], c);
        }
        PadicPoly { nvars, terms, floor: None }
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, PadicScalar)>) -> Self {
        let terms = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        PadicPoly { nvars, terms, floor: None }
    }

    pub fn from_multi(ctx: &PadicContext, f: &MultiPoly) -> Self {
        let terms = f.terms().iter().map(|(e, c)| (e.clone(), ctx.from_bigint(c)));
        PadicPoly::from_terms(f.num_vars(), terms)
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, PadicScalar> {
        &self.terms
    }

    pub fn floor(&self) -> Option<i64> {
        self.floor
    }

    /// No known nonzero coefficient. With a finite `floor` this only means
    /// the polynomial vanishes modulo `p^floor`.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn min_valuation(&self) -> Valuation {
        self.terms.values().map(PadicScalar::valuation).min().unwrap_or(Valuation::Infinite)
    }

    fn effective_min(&self) -> Option<i64> {
        min_opt(self.min_valuation().finite(), self.floor)
    }

    pub fn add(&self, ctx: &PadicContext, other: &PadicPoly) -> PadicPoly {
        let mut buckets: BTreeMap<Vec<u32>, Vec<PadicScalar>> = BTreeMap::new();
        for (e, c) in self.terms.iter().chain(&other.terms) {
            buckets.entry(e.clone()).or_default().push(c.clone());
        }
        collect(ctx, self.nvars, buckets, min_opt(self.floor, other.floor))
    }

    pub fn mul(&self, ctx: &PadicContext, other: &PadicPoly) -> PadicPoly {
        let mut buckets: BTreeMap<Vec<u32>, Vec<PadicScalar>> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                buckets.entry(e).or_default().push(ctx.mul(ca, cb));
            }
        }
        let floor = min_opt(
            add_opt(self.floor, other.effective_min()),
            add_opt(other.floor, self.effective_min()),
        );
        collect(ctx, self.nvars, buckets, floor)
    }

    pub fn scale(&self, ctx: &PadicContext, c: &PadicScalar) -> PadicPoly {
        if c.is_zero() {
            return PadicPoly::zero(self.nvars);
        }
        let v = c.valuation().finite().expect("nonzero");
        PadicPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, k)| (e.clone(), ctx.mul(k, c))).collect(),
            floor: self.floor.map(|f| f + v),
        }
    }

    /// Multiply every coefficient by `p^k`.
    pub fn shift(&self, ctx: &PadicContext, k: i64) -> PadicPoly {
        PadicPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), ctx.shift(c, k))).collect(),
            floor: self.floor.map(|f| f + k),
        }
    }

    /// Divides out the largest power of p dividing every known coefficient.
    /// Returns the exponent removed.
    pub fn make_primitive(&self, ctx: &PadicContext) -> (PadicPoly, i64) {
        match self.min_valuation() {
            Valuation::Finite(v) => (self.shift(ctx, -v), v),
            Valuation::Infinite => (self.clone(), 0),
        }
    }

    pub fn derivative(&self, ctx: &PadicContext, i: usize) -> PadicPoly {
        let terms = self.terms.iter().filter(|(e, _)| e[i] > 0).map(|(e, c)| {
            let mut e2 = e.clone();
            e2[i] -= 1;
            (e2, ctx.mul(c, &ctx.from_i64(e[i] as i64)))
        });
        let mut out = PadicPoly::from_terms(self.nvars, terms);
        out.floor = self.floor;
        out
    }

    pub fn eval(&self, ctx: &PadicContext, x: &[PadicScalar]) -> Result<PadicScalar> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch(format!("{} variables, {} coordinates", self.nvars, x.len())));
        }
        let monomials: Vec<PadicScalar> = self
            .terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(c.clone(), |acc, (&k, xi)| ctx.mul(&acc, &ctx.pow_u32(xi, k)))
            })
            .collect();
        let value = ctx.sum(&monomials)?;
        match self.floor {
            Some(f) if value.valuation() >= Valuation::Finite(f) => Err(Error::PrecisionExhausted { absolute: f }),
            _ => Ok(value),
        }
    }

    /// `f(u + W t)` in the `W.cols()` variables `t`.
    pub fn compose_linear(&self, ctx: &PadicContext, u: &[PadicScalar], w: &PadicMatrix) -> Result<PadicPoly> {
        if u.len() != self.nvars || w.rows() != self.nvars {
            return Err(Error::DimensionMismatch(format!(
                "substituting {} point and {}x{} directions into {} variables",
                u.len(),
                w.rows(),
                w.cols(),
                self.nvars
            )));
        }
        let m = w.cols();
        let linear: Vec<PadicPoly> = (0..self.nvars)
            .map(|i| {
                let mut terms = vec![(vec![0; m], u[i].clone())];
                for j in 0..m {
                    let mut e = vec![0; m];
                    e[j] = 1;
                    terms.push((e, w.get(i, j).clone()));
                }
                PadicPoly::from_terms(m, terms)
            })
            .collect();
        let powers: Vec<Vec<PadicPoly>> = linear
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let d = self.terms.keys().map(|e| e[i]).max().unwrap_or(0);
                let mut row = vec![PadicPoly::constant(m, ctx.one())];
                for k in 1..=d as usize {
                    let next = row[k - 1].mul(ctx, l);
                    row.push(next);
                }
                row
            })
            .collect();
        let mut buckets: BTreeMap<Vec<u32>, Vec<PadicScalar>> = BTreeMap::new();
        let mut floor = self.floor;
        for (e, c) in &self.terms {
            let mut prod = PadicPoly::constant(m, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    prod = prod.mul(ctx, &powers[i][k as usize]);
                }
            }
            floor = min_opt(floor, prod.floor);
            for (te, tc) in prod.terms {
                buckets.entry(te).or_default().push(tc);
            }
        }
        Ok(collect(ctx, m, buckets, floor))
    }

    /// Reduction modulo p. Requires integral coefficients known at least mod p.
    pub fn to_mod_p(&self, ctx: &PadicContext) -> Result<ModPPoly> {
        if let Some(f) = self.floor {
            if f < 1 {
                return Err(Error::PrecisionExhausted { absolute: f });
            }
        }
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            let r = ctx.residue_mod_p(c)?;
            if r != 0 {
                terms.push((e.clone(), r));
            }
        }
        Ok(ModPPoly { p: ctx.prime(), nvars: self.nvars, terms })
    }
}

/// `p_i(u + W t)` for every polynomial of the system.
pub fn substitute_affine(
    ctx: &PadicContext,
    sys: &PolySystem,
    u: &[PadicScalar],
    w: &PadicMatrix,
) -> Result<Vec<PadicPoly>> {
    sys.polys()
        .iter()
        .map(|f| PadicPoly::from_multi(ctx, f).compose_linear(ctx, u, w))
        .collect()
}

/// Polynomial over F_p with machine-word coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModPPoly {
    p: u64,
    nvars: usize,
    terms: Vec<(Vec<u32>, u64)>,
}

impl ModPPoly {
    pub fn new(p: u64, nvars: usize, terms: Vec<(Vec<u32>, u64)>) -> Self {
        let terms = terms.into_iter().map(|(e, c)| (e, c % p)).filter(|(_, c)| *c != 0).collect();
        ModPPoly { p, nvars, terms }
    }

    pub fn from_multi(p: u64, f: &MultiPoly) -> Self {
        let pb = num_bigint::BigInt::from(p);
        let terms = f
            .terms()
            .iter()
            .map(|(e, c)| {
                let r = num_integer::Integer::mod_floor(c, &pb);
                (e.clone(), r.to_u64().expect("reduced below p"))
            })
            .collect();
        ModPPoly::new(p, f.num_vars(), terms)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    pub fn eval(&self, x: &[u64]) -> u64 {
        let p = self.p as u128;
        let mut acc: u128 = 0;
        for (e, c) in &self.terms {
            let mut t = *c as u128;
            for (&k, &xi) in e.iter().zip(x) {
                for _ in 0..k {
                    t = t * xi as u128 % p;
                }
            }
            acc = (acc + t) % p;
        }
        acc as u64
    }

    pub fn derivative(&self, i: usize) -> ModPPoly {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] > 0)
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2[i] -= 1;
                (e2, ((*c as u128 * (e[i] as u128 % self.p as u128)) % self.p as u128) as u64)
            })
            .collect();
        ModPPoly::new(self.p, self.nvars, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;

    #[test]
    fn substitute_vertical_line() {
        let ctx = PadicContext::new(5, 32, 0).unwrap();
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        let f = MultiPoly::parse("y^2 - x^3 - 1", &vars).unwrap();
        let w = PadicMatrix::from_i64(&ctx, &[&[0], &[1]]);
        let g = PadicPoly::from_multi(&ctx, &f)
            .compose_linear(&ctx, &[ctx.zero(), ctx.one()], &w)
            .unwrap();
        let t = vec!["t".to_string()];
        let expected = PadicPoly::from_multi(&ctx, &MultiPoly::parse("t^2 + 2*t", &t).unwrap());
        assert_eq!(g, expected);
    }

    #[test]
    fn substitute_identity() {
        let ctx = PadicContext::new(5, 32, 0).unwrap();
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        let f = PadicPoly::from_multi(&ctx, &MultiPoly::parse("y^2 - x^3 - 1", &vars).unwrap());
        let g = f.compose_linear(&ctx, &[ctx.zero(), ctx.zero()], &PadicMatrix::identity(&ctx, 2)).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn mod_p_evaluation() {
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        let f = ModPPoly::from_multi(5, &MultiPoly::parse("y^2 - x^3 - 1", &vars).unwrap());
        assert_eq!(f.eval(&[2, 3]), 0);
        assert_eq!(f.eval(&[1, 1]), 4);
        assert_eq!(f.derivative(0).eval(&[1, 0]), 2);
    }
}
