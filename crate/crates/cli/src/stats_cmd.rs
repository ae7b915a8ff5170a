use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use num_bigint::BigUint;
use padicslice::stats::{chi_square_uniform, ChiSquareReport};
use padicslice::PadicContext;

use crate::records::{Header, PointRecord};

/// Exponent `j` of a modulus written `p^j`, `P^j` or as a plain power of p.
pub fn parse_modulus(text: &str, p: u64) -> Result<u32> {
    let text = text.trim();
    if let Some((base, exp)) = text.split_once('^') {
        let exp: u32 = exp.trim().parse().with_context(|| format!("bad exponent in modulus `{text}`"))?;
        let base = base.trim();
        if base != "p" && base.parse::<u64>().ok() != Some(p) {
            bail!("modulus `{text}` is not a power of the sample prime {p}");
        }
        return Ok(exp);
    }
    let mut m: u64 = text.parse().with_context(|| format!("bad modulus `{text}`"))?;
    let mut j = 0;
    while m > 1 && m % p == 0 {
        m /= p;
        j += 1;
    }
    if m != 1 {
        bail!("modulus `{text}` is not a power of the sample prime {p}");
    }
    Ok(j)
}

pub struct Histogram {
    pub level: u32,
    pub counts: BTreeMap<Vec<BigUint>, u64>,
    pub report: ChiSquareReport,
}

/// Counts of `p^r x mod p^j` over the sample.
pub fn histogram(header: &Header, points: &[PointRecord], j: u32) -> Result<Histogram> {
    if j == 0 || j > header.precision {
        bail!("modulus exponent {j} must lie in 1..={} (the sample precision)", header.precision);
    }
    let ctx = PadicContext::new(header.prime, header.precision, header.seed)?;
    let mut counts: BTreeMap<Vec<BigUint>, u64> = BTreeMap::new();
    for (i, pt) in points.iter().enumerate() {
        let class = pt
            .coords
            .iter()
            .map(|rec| {
                let x = ctx.decode(rec)?;
                ctx.residue(&ctx.shift(&x, header.support_radius as i64), j)
            })
            .collect::<padicslice::Result<Vec<_>>>()
            .with_context(|| format!("point {i} cannot be reduced modulo p^{j}"))?;
        *counts.entry(class).or_default() += 1;
    }
    let values: Vec<u64> = counts.values().copied().collect();
    let report = chi_square_uniform(&values);
    Ok(Histogram { level: j, counts, report })
}

pub fn render(header: &Header, h: &Histogram) -> String {
    let mut s = String::new();
    let modulus = BigUint::from(header.prime).pow(h.level);
    let _ = writeln!(s, "modulus {}^{} = {}", header.prime, h.level, modulus);
    let _ = writeln!(s, "{:<32} count", format!("({})", header.variables.join(", ")));
    for (class, count) in &h.counts {
        let label: Vec<String> = class.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "{:<32} {count}", format!("({})", label.join(", ")));
    }
    let total: u64 = h.counts.values().sum();
    let _ = writeln!(s, "classes {} samples {total}", h.counts.len());
    let _ = writeln!(
        s,
        "chi-square {:.4} dof {} p-value {:.6}",
        h.report.statistic, h.report.dof, h.report.p_value
    );
    s
}
