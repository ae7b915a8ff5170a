//! Monte Carlo integration and exact-density sampling on varieties by
//! random linear slicing.
//!
//! A density supported in `p^{-r} Z_p^N` is handled on the rescaled variety
//! `p^r X`, whose relevant points lie in the unit lattice; integrals pick up
//! the factor `q^{rn}` and sampled points are scaled back by `p^{-r}`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intersect::{intersect_affine, intersect_projective};
use crate::linalg::PadicMatrix;
use crate::padic::{DigitStream, PadicContext, PadicScalar};
use crate::variety::{lattice_weight, rescale_variety, Ambient, VarietyPoint, VarietySpec};

/// Consecutive degenerate slices tolerated before giving up.
pub const MAX_CONSECUTIVE_RESAMPLES: u64 = 10_000;

type DensityFn = dyn Fn(&PadicContext, &[PadicScalar]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum DensityKind {
    /// Constant 1 on the support ball.
    Uniform,
    /// Step function of the residues mod `p^level` of the rescaled point
    /// `p^r x`; classes missing from the table take the value 0.
    ResidueStep { level: u32, table: HashMap<Vec<u64>, f64> },
    /// Arbitrary evaluator in original coordinates.
    Custom(Arc<DensityFn>),
}

impl fmt::Debug for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityKind::Uniform => write!(f, "Uniform"),
            DensityKind::ResidueStep { level, table } => {
                write!(f, "ResidueStep {{ level: {level}, classes: {} }}", table.len())
            }
            DensityKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A bounded density on `X ∩ p^{-r} Z_p^N`, possibly unnormalized.
#[derive(Clone, Debug)]
pub struct DensitySpec {
    kind: DensityKind,
    f_max: f64,
    support_radius: u32,
    normalized: bool,
}

impl DensitySpec {
    pub fn uniform() -> Self {
        Self::uniform_with_radius(0)
    }

    /// Indicator of `p^{-r} Z_p^N`.
    pub fn uniform_with_radius(r: u32) -> Self {
        DensitySpec { kind: DensityKind::Uniform, f_max: 1.0, support_radius: r, normalized: false }
    }

    pub fn residue_step(level: u32, entries: impl IntoIterator<Item = (Vec<u64>, f64)>, support_radius: u32) -> Result<Self> {
        let mut table = HashMap::new();
        let mut f_max: f64 = 0.0;
        for (class, w) in entries {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidDensity(format!("weight {w} is not a finite nonnegative number")));
            }
            f_max = f_max.max(w);
            table.insert(class, w);
        }
        Ok(DensitySpec {
            kind: DensityKind::ResidueStep { level, table },
            f_max,
            support_radius,
            normalized: false,
        })
    }

    pub fn custom(
        f: impl Fn(&PadicContext, &[PadicScalar]) -> f64 + Send + Sync + 'static,
        f_max: f64,
        support_radius: u32,
    ) -> Result<Self> {
        if !(f_max.is_finite() && f_max >= 0.0) {
            return Err(Error::InvalidDensity(format!("f_max {f_max} is not a finite nonnegative number")));
        }
        Ok(DensitySpec { kind: DensityKind::Custom(Arc::new(f)), f_max, support_radius, normalized: false })
    }

    /// Marks the density as integrating to 1.
    pub fn normalized(mut self, yes: bool) -> Self {
        self.normalized = yes;
        self
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn support_radius(&self) -> u32 {
        self.support_radius
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Value at the point whose rescaled coordinates are `y = p^r x`.
    fn eval_rescaled(&self, ctx: &PadicContext, y: &[PadicScalar]) -> Result<f64> {
        let value = match &self.kind {
            DensityKind::Uniform => 1.0,
            DensityKind::ResidueStep { level, table } => {
                let class = y
                    .iter()
                    .map(|yi| ctx.residue(yi, *level).map(|r| r.to_u64().unwrap_or(u64::MAX)))
                    .collect::<Result<Vec<u64>>>()?;
                table.get(&class).copied().unwrap_or(0.0)
            }
            DensityKind::Custom(f) => {
                let x: Vec<PadicScalar> = y.iter().map(|yi| ctx.shift(yi, -(self.support_radius as i64))).collect();
                f(ctx, &x)
            }
        };
        Ok(value)
    }
}

/// Uniformly drawn `(A, b) ∈ Z_p^{n×N} × Z_p^n`.
#[derive(Clone, Debug)]
pub struct AffineSlice {
    pub a: PadicMatrix,
    pub b: Vec<PadicScalar>,
}

impl AffineSlice {
    /// Draws `A` in row-major order, then `b`.
    pub fn sample(ctx: &PadicContext, stream: &mut DigitStream, n: usize, big_n: usize) -> Self {
        let a = PadicMatrix::sample_uniform(ctx, stream, n, big_n);
        let b = ctx.sample_uniform_vec(stream, n);
        AffineSlice { a, b }
    }
}

/// Uniformly drawn `A ∈ Z_p^{n×N}`.
#[derive(Clone, Debug)]
pub struct ProjectiveSlice {
    pub a: PadicMatrix,
}

impl ProjectiveSlice {
    pub fn sample(ctx: &PadicContext, stream: &mut DigitStream, n: usize, big_n: usize) -> Self {
        ProjectiveSlice { a: PadicMatrix::sample_uniform(ctx, stream, n, big_n) }
    }
}

/// `f̄` of one slice and the contributions of its points.
#[derive(Clone, Debug, Default)]
pub struct Fbar {
    pub total: f64,
    /// `(point, weight, weight * f(point))` in intersection order.
    pub terms: Vec<(VarietyPoint, f64, f64)>,
}

/// `f̄(A, b) = Σ w_X(x) f(x)` over `X ∩ L_{A,b}`; `x` in lattice coordinates of
/// the (already rescaled) variety.
pub fn fbar_affine(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec, slice: &AffineSlice) -> Result<Fbar> {
    let hit = intersect_affine(ctx, x, &slice.a, &slice.b)?;
    if hit.degenerate {
        return Err(Error::DegenerateSlice);
    }
    let mut out = Fbar::default();
    for pt in hit.points {
        let w = x.weight_at(ctx, &pt.coords)?.to_f64().expect("finite weight");
        let wf = w * f.eval_rescaled(ctx, &pt.coords)?;
        out.total += wf;
        out.terms.push((pt, w, wf));
    }
    Ok(out)
}

/// `f̄(A) = Σ f(x)` over `X ∩ L_A`.
pub fn fbar_projective(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec, slice: &ProjectiveSlice) -> Result<Fbar> {
    let hit = intersect_projective(ctx, x, &slice.a)?;
    if hit.degenerate {
        return Err(Error::DegenerateSlice);
    }
    let mut out = Fbar::default();
    for pt in hit.points {
        let v = f.eval_rescaled(ctx, &pt.coords)?;
        out.total += v;
        out.terms.push((pt, 1.0, v));
    }
    Ok(out)
}

/// `M = d q^{(n+1)r} C f_max` (affine) or `d f_max` (projective).
pub fn rejection_bound(x: &VarietySpec, f: &DensitySpec, q: u64) -> f64 {
    let d = x.degree_bound() as f64;
    match x.ambient() {
        Ambient::Affine => {
            let c = lattice_weight(q, x.dim()).to_f64().expect("finite");
            let growth = (q as f64).powi(((x.dim() + 1) as u32 * f.support_radius) as i32);
            d * growth * c * f.f_max
        }
        Ambient::Projective => d * f.f_max,
    }
}

/// Smallest `m` with `f_max² d² C² / (ε² m) <= δ`.
pub fn chebyshev_sample_size(f_max: f64, d: u64, n: usize, q: u64, eps: f64, delta: f64) -> u64 {
    let c = lattice_weight(q, n).to_f64().expect("finite");
    let raw = (f_max * d as f64 * c).powi(2) / (eps * eps * delta);
    // absorb floating error in an exact quotient before rounding up
    (raw * (1.0 - 1e-12)).ceil().max(1.0) as u64
}

/// Confidence level used for the reported Chebyshev half-width.
pub const CHEBYSHEV_DELTA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub samples: u64,
    pub std_error: f64,
    /// Half-width `ε` with `P(|estimate - integral| >= ε) <= 0.05`.
    pub chebyshev_bound: f64,
    pub resamples: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledPoint {
    pub coords: Vec<PadicScalar>,
    pub worker: u32,
    /// Index of the accepted slice within its worker's stream.
    pub slice: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub points: Vec<SampledPoint>,
    /// `w_X(x)` of every returned point (1 for projective varieties).
    pub weights_used: Vec<f64>,
    pub slices_tried: u64,
    pub slices_accepted: u64,
    pub resamples: u64,
    pub seed: u64,
    pub workers: u32,
    /// The bound `M` used for acceptance.
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: u32,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { workers: 1 }
    }
}

/// The variety actually sliced and the scale factor `q^{rn}` for integrals.
fn working_variety(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec) -> Result<(VarietySpec, f64)> {
    match x.ambient() {
        Ambient::Affine => {
            let r = f.support_radius;
            let scaled = rescale_variety(x, r, ctx.prime())?;
            let factor = (ctx.prime() as f64).powi((r as usize * x.dim()) as i32);
            Ok((scaled, factor))
        }
        Ambient::Projective => Ok((x.clone(), 1.0)),
    }
}

fn split(total: u64, workers: u32, k: u32) -> u64 {
    let w = workers as u128;
    let t = total as u128;
    ((t * (k as u128 + 1) / w) - (t * k as u128 / w)) as u64
}

/// Draws slices until one is not degenerate; returns its `f̄` and the
/// number of redraws.
fn next_fbar(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec, stream: &mut DigitStream) -> Result<(Fbar, u64)> {
    let mut redraws = 0u64;
    loop {
        let result = match x.ambient() {
            Ambient::Affine => {
                let slice = AffineSlice::sample(ctx, stream, x.dim(), x.num_vars());
                fbar_affine(ctx, x, f, &slice)
            }
            Ambient::Projective => {
                let slice = ProjectiveSlice::sample(ctx, stream, x.dim(), x.num_vars());
                fbar_projective(ctx, x, f, &slice)
            }
        };
        match result {
            Ok(fb) => return Ok((fb, redraws)),
            Err(e) if e.is_resample_event() => {
                redraws += 1;
                if redraws >= MAX_CONSECUTIVE_RESAMPLES {
                    return Err(Error::ResampleLimit(redraws));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

#[derive(Default)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
    resamples: u64,
}

/// Monte Carlo estimate of `∫_X f dμ_X` from `m` slices.
///
/// Affine: mean of `f̄(A, b)`. Projective: `μ(P^n)` times the mean of `f̄(A)`.
pub fn integrate(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec, m: u64, opts: RunOptions) -> Result<IntegralEstimate> {
    let workers = opts.workers.max(1);
    let (work, factor) = working_variety(ctx, x, f)?;
    let scale = match x.ambient() {
        Ambient::Affine => factor,
        Ambient::Projective => lattice_weight(ctx.prime(), x.dim()).to_f64().expect("finite"),
    };
    let half_width = |m: u64| {
        let range = match x.ambient() {
            Ambient::Affine => rejection_bound(&work, &DensitySpec { support_radius: 0, ..f.clone() }, ctx.prime()),
            Ambient::Projective => rejection_bound(&work, f, ctx.prime()),
        };
        scale * range / (CHEBYSHEV_DELTA * m as f64).sqrt()
    };
    if m == 0 || f.f_max == 0.0 {
        let cheb = if m == 0 { f64::INFINITY } else { half_width(m) };
        return Ok(IntegralEstimate { value: 0.0, samples: m, std_error: 0.0, chebyshev_bound: cheb, resamples: 0 });
    }
    let parts: Vec<Result<Moments>> = (0..workers)
        .into_par_iter()
        .map(|k| {
            let mut stream = ctx.split_stream(k);
            let mut acc = Moments::default();
            for _ in 0..split(m, workers, k) {
                let (fb, redraws) = next_fbar(ctx, &work, f, &mut stream)?;
                acc.count += 1;
                acc.sum += fb.total;
                acc.sum_sq += fb.total * fb.total;
                acc.resamples += redraws;
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments::default();
    for part in parts {
        let part = part?;
        total.count += part.count;
        total.sum += part.sum;
        total.sum_sq += part.sum_sq;
        total.resamples += part.resamples;
    }
    let n = total.count as f64;
    let mean = total.sum / n;
    let var = if total.count > 1 { ((total.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(IntegralEstimate {
        value: scale * mean,
        samples: total.count,
        std_error: scale * (var / n).sqrt(),
        chebyshev_bound: half_width(m),
        resamples: total.resamples,
    })
}

/// Affine Monte Carlo integration; see [`integrate`].
pub fn integrate_affine(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec, m: u64, opts: RunOptions) -> Result<IntegralEstimate> {
    if x.ambient() != Ambient::Affine {
        return Err(Error::InvalidVariety("affine integration of a projective variety".into()));
    }
    integrate(ctx, x, f, m, opts)
}

/// Projective Monte Carlo integration; see [`integrate`].
pub fn integrate_projective(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec, m: u64, opts: RunOptions) -> Result<IntegralEstimate> {
    if x.ambient() != Ambient::Projective {
        return Err(Error::InvalidVariety("projective integration of an affine variety".into()));
    }
    integrate(ctx, x, f, m, opts)
}

struct WorkerBatch {
    points: Vec<SampledPoint>,
    weights: Vec<f64>,
    tried: u64,
    accepted: u64,
    resamples: u64,
}

/// `count` points with density proportional to `f`, by rejection on slices.
pub fn sample(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec, count: u64, opts: RunOptions) -> Result<SampleBatch> {
    let workers = opts.workers.max(1);
    let (work, _) = working_variety(ctx, x, f)?;
    let bound = match x.ambient() {
        Ambient::Affine => rejection_bound(&work, &DensitySpec { support_radius: 0, ..f.clone() }, ctx.prime()),
        Ambient::Projective => rejection_bound(&work, f, ctx.prime()),
    };
    if count > 0 && f.f_max == 0.0 {
        return Err(Error::InvalidDensity("cannot sample from a density with f_max = 0".into()));
    }
    let r = match x.ambient() {
        Ambient::Affine => f.support_radius as i64,
        Ambient::Projective => 0,
    };
    let parts: Vec<Result<WorkerBatch>> = (0..workers)
        .into_par_iter()
        .map(|k| {
            let mut stream = ctx.split_stream(k);
            let want = split(count, workers, k);
            let mut out = WorkerBatch { points: Vec::new(), weights: Vec::new(), tried: 0, accepted: 0, resamples: 0 };
            while (out.points.len() as u64) < want {
                let (fb, redraws) = next_fbar(ctx, &work, f, &mut stream)?;
                out.resamples += redraws;
                let slice = out.tried;
                out.tried += 1;
                if fb.total > bound * (1.0 + 1e-9) {
                    return Err(Error::BoundViolation { fbar: fb.total, bound });
                }
                if stream.next_unit_f64() * bound >= fb.total {
                    continue;
                }
                out.accepted += 1;
                let mut u = stream.next_unit_f64() * fb.total;
                let mut pick = fb.terms.len() - 1;
                for (i, (_, _, wf)) in fb.terms.iter().enumerate() {
                    if u < *wf {
                        pick = i;
                        break;
                    }
                    u -= wf;
                }
                let (pt, w, _) = &fb.terms[pick];
                let coords = pt.coords.iter().map(|c| ctx.shift(c, -r)).collect();
                out.points.push(SampledPoint { coords, worker: k, slice });
                out.weights.push(*w);
            }
            Ok(out)
        })
        .collect();
    let mut batch = SampleBatch {
        points: Vec::with_capacity(count as usize),
        weights_used: Vec::with_capacity(count as usize),
        slices_tried: 0,
        slices_accepted: 0,
        resamples: 0,
        seed: ctx.seed(),
        workers,
        bound,
    };
    for part in parts {
        let part = part?;
        batch.points.extend(part.points);
        batch.weights_used.extend(part.weights);
        batch.slices_tried += part.tried;
        batch.slices_accepted += part.accepted;
        batch.resamples += part.resamples;
    }
    Ok(batch)
}

/// Affine rejection sampler; see [`sample`].
pub fn sample_affine(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec, count: u64, opts: RunOptions) -> Result<SampleBatch> {
    if x.ambient() != Ambient::Affine {
        return Err(Error::InvalidVariety("affine sampling of a projective variety".into()));
    }
    sample(ctx, x, f, count, opts)
}

/// Projective rejection sampler; see [`sample`].
pub fn sample_projective(ctx: &PadicContext, x: &VarietySpec, f: &DensitySpec, count: u64, opts: RunOptions) -> Result<SampleBatch> {
    if x.ambient() != Ambient::Projective {
        return Err(Error::InvalidVariety("projective sampling of an affine variety".into()));
    }
    sample(ctx, x, f, count, opts)
}
