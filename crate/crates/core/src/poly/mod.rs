//! Multivariate polynomials with exact integer coefficients, and their
//! p-adic images after substituting a linear parametrization.

mod padic_poly;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::padic::{PadicContext, PadicScalar};

pub use padic_poly::{substitute_affine, ModPPoly, PadicPoly};

/// Exponent vector to coefficient; no zero coefficients are stored.
pub type Terms = BTreeMap<Vec<u32>, BigInt>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly {
    vars: Vec<String>,
    terms: Terms,
}

impl MultiPoly {
    pub fn zero(vars: Vec<String>) -> Self {
        MultiPoly { vars, terms: Terms::new() }
    }

    pub fn constant(vars: Vec<String>, c: BigInt) -> Self {
        let mut terms = Terms::new();
        if !c.is_zero() {
            terms.insert(vec![0; vars.len()], c);
        }
        MultiPoly { vars, terms }
    }

    pub fn variable(vars: Vec<String>, index: usize) -> Self {
        let mut exps = vec![0; vars.len()];
        exps[index] = 1;
        let mut terms = Terms::new();
        terms.insert(exps, BigInt::one());
        MultiPoly { vars, terms }
    }

    /// Builds a polynomial from terms, dropping zero coefficients.
    pub fn from_terms(vars: Vec<String>, terms: impl IntoIterator<Item = (Vec<u32>, BigInt)>) -> Self {
        let mut out = MultiPoly::zero(vars);
        for (e, c) in terms {
            assert_eq!(e.len(), out.vars.len(), "exponent arity");
            out.add_term(e, c);
        }
        out
    }

    pub fn parse(text: &str, vars: &[String]) -> Result<Self> {
        parse::parse(text, vars)
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> &Terms {
        &self.terms
    }

    pub fn coefficient(&self, exps: &[u32]) -> BigInt {
        self.terms.get(exps).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, exps: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> MultiPoly {
        MultiPoly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero(self.vars.clone());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> MultiPoly {
        MultiPoly::from_terms(self.vars.clone(), self.terms.iter().map(|(e, k)| (e.clone(), k * c)))
    }

    pub fn pow(&self, mut e: u32) -> MultiPoly {
        let mut result = MultiPoly::constant(self.vars.clone(), BigInt::one());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Formal partial derivative in variable `i`; coefficients are never
    /// reduced modulo anything.
    pub fn derivative(&self, i: usize) -> MultiPoly {
        let terms = self.terms.iter().filter(|(e, _)| e[i] > 0).map(|(e, c)| {
            let mut e2 = e.clone();
            e2[i] -= 1;
            (e2, c * BigInt::from(e[i]))
        });
        MultiPoly::from_terms(self.vars.clone(), terms)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.terms.keys().map(|e| e.iter().sum::<u32>());
        match degrees.next() {
            None => true,
            Some(d) => degrees.all(|x| x == d),
        }
    }

    /// Standard homogenization with a fresh last variable.
    pub fn homogenize(&self, name: &str) -> MultiPoly {
        let d = self.total_degree();
        let mut vars = self.vars.clone();
        vars.push(name.to_string());
        let terms = self.terms.iter().map(|(e, c)| {
            let mut e2 = e.clone();
            e2.push(d - e.iter().sum::<u32>());
            (e2, c.clone())
        });
        MultiPoly::from_terms(vars, terms)
    }

    /// Sets variable `i` to 1 and removes it.
    pub fn dehomogenize(&self, i: usize) -> Result<MultiPoly> {
        if !self.is_homogeneous() {
            return Err(Error::NotHomogeneous);
        }
        if i >= self.vars.len() {
            return Err(Error::DimensionMismatch(format!("chart {i} out of {} variables", self.vars.len())));
        }
        let mut vars = self.vars.clone();
        vars.remove(i);
        let terms = self.terms.iter().map(|(e, c)| {
            let mut e2 = e.clone();
            e2.remove(i);
            (e2, c.clone())
        });
        Ok(MultiPoly::from_terms(vars, terms))
    }

    /// Coefficients reduced into `[0, modulus)`.
    pub fn reduce_mod(&self, modulus: &BigUint) -> MultiPoly {
        let m = BigInt::from(modulus.clone());
        MultiPoly::from_terms(self.vars.clone(), self.terms.iter().map(|(e, c)| (e.clone(), c.mod_floor(&m))))
    }

    /// Same polynomial over a different (equal-length) variable list.
    pub fn rename(&self, vars: Vec<String>) -> MultiPoly {
        assert_eq!(vars.len(), self.vars.len());
        MultiPoly { vars, terms: self.terms.clone() }
    }

    /// Evaluation at a point of Q_p^N; all terms are summed in one pass.
    pub fn eval(&self, ctx: &PadicContext, x: &[PadicScalar]) -> Result<PadicScalar> {
        if x.len() != self.vars.len() {
            return Err(Error::DimensionMismatch(format!("{} variables, {} coordinates", self.vars.len(), x.len())));
        }
        let max_deg: Vec<u32> = (0..x.len())
            .map(|i| self.terms.keys().map(|e| e[i]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<PadicScalar>> = x
            .iter()
            .zip(&max_deg)
            .map(|(xi, &d)| {
                let mut row = vec![ctx.one()];
                for k in 1..=d as usize {
                    let next = ctx.mul(&row[k - 1], xi);
                    row.push(next);
                }
                row
            })
            .collect();
        let monomials: Vec<PadicScalar> = self
            .terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .enumerate()
                    .fold(ctx.from_bigint(c), |acc, (i, &k)| ctx.mul(&acc, &powers[i][k as usize]))
            })
            .collect();
        ctx.sum(&monomials)
    }
}

impl fmt::Display for MultiPoly {
    /// Graded order, highest total degree first; e.g. `-x^3 + y^2 - 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut order: Vec<(&Vec<u32>, &BigInt)> = self.terms.iter().collect();
        order.sort_by(|(a, _), (b, _)| {
            let (da, db) = (a.iter().sum::<u32>(), b.iter().sum::<u32>());
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        for (k, (e, c)) in order.into_iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mag = c.abs();
            let factors: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { self.vars[i].clone() } else { format!("{}^{k}", self.vars[i]) })
                .collect();
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{mag}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Polynomials over a shared variable list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolySystem {
    vars: Vec<String>,
    polys: Vec<MultiPoly>,
    homogeneous: bool,
}

impl PolySystem {
    pub fn new(vars: Vec<String>, polys: Vec<MultiPoly>) -> Result<Self> {
        if let Some(bad) = polys.iter().find(|f| f.vars != vars) {
            return Err(Error::DimensionMismatch(format!(
                "polynomial over {:?} in a system over {:?}",
                bad.vars, vars
            )));
        }
        let homogeneous = polys.iter().all(MultiPoly::is_homogeneous);
        Ok(PolySystem { vars, polys, homogeneous })
    }

    pub fn parse(texts: &[impl AsRef<str>], vars: &[String]) -> Result<Self> {
        let polys = texts.iter().map(|t| MultiPoly::parse(t.as_ref(), vars)).collect::<Result<_>>()?;
        PolySystem::new(vars.to_vec(), polys)
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn polys(&self) -> &[MultiPoly] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// `J[i][j] = ∂p_i/∂x_j`.
    pub fn jacobian(&self) -> Vec<Vec<MultiPoly>> {
        self.polys
            .iter()
            .map(|f| (0..self.vars.len()).map(|j| f.derivative(j)).collect())
            .collect()
    }

    pub fn eval(&self, ctx: &PadicContext, x: &[PadicScalar]) -> Result<Vec<PadicScalar>> {
        self.polys.iter().map(|f| f.eval(ctx, x)).collect()
    }

    pub fn homogenize(&self, name: &str) -> PolySystem {
        let mut vars = self.vars.clone();
        vars.push(name.to_string());
        let polys = self.polys.iter().map(|f| f.homogenize(name)).collect();
        PolySystem { vars, polys, homogeneous: true }
    }

    pub fn dehomogenize(&self, i: usize) -> Result<PolySystem> {
        if !self.homogeneous {
            return Err(Error::NotHomogeneous);
        }
        let polys: Vec<MultiPoly> = self.polys.iter().map(|f| f.dehomogenize(i)).collect::<Result<_>>()?;
        let mut vars = self.vars.clone();
        vars.remove(i);
        PolySystem::new(vars, polys)
    }

    pub fn reduce_mod(&self, modulus: &BigUint) -> PolySystem {
        let polys = self.polys.iter().map(|f| f.reduce_mod(modulus)).collect();
        PolySystem::new(self.vars.clone(), polys).expect("same variables")
    }

    /// Product of total degrees.
    pub fn bezout_bound(&self) -> u64 {
        self.polys.iter().map(|f| f.total_degree().max(1) as u64).product()
    }
}

/// Variable names `t0, t1, ...`.
pub fn parameter_names(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("t{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    #[test]
    fn parse_elliptic() {
        let f = MultiPoly::parse("y^2 - x^3 - 1", &xy()).unwrap();
        let expected = MultiPoly::from_terms(
            xy(),
            [(vec![0, 2], 1.into()), (vec![3, 0], (-1).into()), (vec![0, 0], (-1).into())],
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parse_cancellations() {
        assert!(MultiPoly::parse("(x+1)^2 - x^2 - 2*x - 1", &xy()).unwrap().is_zero());
        assert!(MultiPoly::parse("x*y - y*x", &xy()).unwrap().is_zero());
    }

    #[test]
    fn print_parse_round_trip() {
        for text in ["y^2 - x^3 - 1", "-(x - 2*y)^3 + 7", "0", "x*y^4 - 12", "-x"] {
            let f = MultiPoly::parse(text, &xy()).unwrap();
            let g = MultiPoly::parse(&f.to_string(), &xy()).unwrap();
            assert_eq!(f, g, "{text} printed as {f}");
            assert_eq!(f.to_string(), g.to_string());
        }
        assert_eq!(MultiPoly::parse("y^2 - x^3 - 1", &xy()).unwrap().to_string(), "-x^3 + y^2 - 1");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(MultiPoly::parse("x + z", &xy()), Err(Error::UnknownVariable { pos: 4, .. })));
        assert!(matches!(MultiPoly::parse("x + * y", &xy()), Err(Error::Syntax { pos: 4, .. })));
        assert!(matches!(MultiPoly::parse("(x + y", &xy()), Err(Error::Syntax { .. })));
        assert!(matches!(MultiPoly::parse("x^y", &xy()), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(MultiPoly::parse("x y", &xy()), Err(Error::Syntax { pos: 2, .. })));
    }

    #[test]
    fn evaluations() {
        let ctx = PadicContext::new(5, 32, 0).unwrap();
        let f = MultiPoly::parse("y^2 - x^3 - 1", &xy()).unwrap();
        let at = |a: i64, b: i64| f.eval(&ctx, &[ctx.from_i64(a), ctx.from_i64(b)]).unwrap();
        assert!(at(0, 1).is_zero());
        assert!(at(2, 3).is_zero());
        assert_eq!(at(1, 1), ctx.from_i64(-1));
    }

    #[test]
    fn jacobians() {
        let sys = PolySystem::parse(&["y^2 - x^3 - 1", "3*x + 4*y"], &xy()).unwrap();
        let j = sys.jacobian();
        assert_eq!(j[0][0], MultiPoly::parse("-3*x^2", &xy()).unwrap());
        assert_eq!(j[0][1], MultiPoly::parse("2*y", &xy()).unwrap());
        assert_eq!(j[1][0], MultiPoly::parse("3", &xy()).unwrap());
        assert_eq!(j[1][1], MultiPoly::parse("4", &xy()).unwrap());
        let d = MultiPoly::parse("x^5", &xy()).unwrap().derivative(0);
        assert_eq!(d.coefficient(&[4, 0]), BigInt::from(5));
    }

    #[test]
    fn reductions() {
        let m5 = BigUint::from(5u32);
        let f = MultiPoly::parse("y^2 - x^3 - 1", &xy()).unwrap().reduce_mod(&m5);
        assert_eq!(f.coefficient(&[0, 2]), 1.into());
        assert_eq!(f.coefficient(&[3, 0]), 4.into());
        assert_eq!(f.coefficient(&[0, 0]), 4.into());
        let g = MultiPoly::parse("5*x + 1", &xy()).unwrap().reduce_mod(&m5);
        assert_eq!(g, MultiPoly::parse("1", &xy()).unwrap());
        assert!(MultiPoly::parse("25*x", &xy()).unwrap().reduce_mod(&BigUint::from(25u32)).is_zero());
    }

    #[test]
    fn homogenization() {
        let f = MultiPoly::parse("y^2 - x^3 - 1", &xy()).unwrap();
        let h = f.homogenize("z");
        let vars: Vec<String> = vec!["x".into(), "y".into(), "z".into()];
        assert_eq!(h, MultiPoly::parse("y^2*z - x^3 - z^3", &vars).unwrap());
        let g = MultiPoly::parse("x^2 + y*z", &vars).unwrap();
        assert_eq!(g.dehomogenize(2).unwrap(), MultiPoly::parse("x^2 + y", &xy()).unwrap());
        assert_eq!(f.dehomogenize(0), Err(Error::NotHomogeneous));
    }
}
