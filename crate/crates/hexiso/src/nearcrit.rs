//! Near-critical diagnostics.
//!
//! Three instruments for watching the supercritical geometry approach
//! its critical limit: the correlation length L̂_ε(p) (smallest box
//! size at which closed left-right crossings become rare), directional
//! tables of L̂(p)·μ̂_p(e^{iθ}) whose common value ν̂ measures the
//! emerging isotropy, and roundness reports comparing the normalized
//! Wulff shape Ŵ_p against the unit-area disk 𝔻_{1/√π} as p decreases
//! toward 1/2.
//!
//! All trend assertions are CI-aware: a violation inside overlapping
//! confidence intervals is a [`Verdict::Warn`], outside them a
//! [`Verdict::Fail`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::boundary_norm::beta_estimate;
use crate::fpp::{closed_crossing_exists, mu_estimate};
use crate::lattice::{BoxSide, TiltedBox, Vec2};
use crate::percolation::{derive_seed, Configuration};
use crate::pool;
use crate::wulff::{hausdorff, phi_from_norm, DirectionalNorm, Shape};
use crate::{Error, Result};

use std::f64::consts::PI;

/// Default crossing-probability threshold ε₀ for L(p) := L_{ε₀}(p).
/// Any fixed ε ∈ (0, 1/2) yields a length of the same order.
pub const DEFAULT_EPS0: f64 = 0.25;

/// Smallest supported p for the near-critical grids: below this the
/// correlation length exceeds desk-scale windows.  Requests under the
/// floor are rejected, never silently clamped.
pub const P_FLOOR: f64 = 0.52;

/// Hard cap on the crossing-box size probed by the doubling search.
pub const MAX_CORR_WINDOW: u32 = 1024;

/// CI-aware trend check outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// The expected inequality holds for the point estimates.
    Pass,
    /// It fails for the point estimates but the intervals overlap.
    Warn,
    /// It fails beyond the intervals.
    Fail,
}

/// Verdict for "`next` should be smaller than `prev`", where each side
/// is (point estimate, interval half-width).
pub fn trend_verdict(prev: (f64, f64), next: (f64, f64)) -> Verdict {
    if next.0 < prev.0 {
        Verdict::Pass
    } else if next.0 - next.1 <= prev.0 + prev.1 {
        Verdict::Warn
    } else {
        Verdict::Fail
    }
}

// ---------------------------------------------------------------------------
// Correlation length
// ---------------------------------------------------------------------------

/// An estimated correlation length L̂_ε(p).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationLength {
    pub p: f64,
    pub eps: f64,
    /// Smallest n with estimated closed-crossing probability ≤ ε.
    pub value: u32,
    /// CI interval around `value`: degenerate when the probability at
    /// the boundary is more than two standard errors from ε, otherwise
    /// the n-range consistent with crossing probabilities ε ± 2·stderr.
    pub interval: (u32, u32),
    /// Estimated crossing probability at `value`, with its stderr.
    pub prob_at: f64,
    pub stderr_at: f64,
    pub reps: u32,
    pub seed: u64,
}

/// Monte Carlo estimate of P_p[∃ closed left-right crossing of
/// [0,n]²], with the binomial standard error.
pub fn closed_crossing_prob(p: f64, n: u32, reps: u32, seed: u64) -> Result<(f64, f64)> {
    let bx = TiltedBox::new(
        Vec2::new(0.0, n as f64 / 2.0),
        n as f64,
        n as f64 / 2.0,
        0.0,
    );
    let window = bx.bounding_rect(3.0);
    let hits: Vec<Result<bool>> = pool::parallel_map(reps, |r| {
        let c = Configuration::sample(window, p, derive_seed(seed, r as u64))?;
        closed_crossing_exists(&c, &bx, BoxSide::Left, BoxSide::Right)
    });
    let mut k = 0u32;
    for h in hits {
        if h? {
            k += 1;
        }
    }
    let ph = k as f64 / reps as f64;
    Ok((ph, (ph * (1.0 - ph) / reps as f64).sqrt()))
}

/// L̂_ε(p): doubling to bracket, then bisection for the smallest n at
/// which the estimated closed-crossing probability drops to ε.
///
/// The returned interval is CI-aware: when the estimate at the
/// boundary is within two standard errors of ε, the interval widens to
/// the n-range whose estimates are consistent with ε.
pub fn correlation_length(p: f64, eps: f64, reps: u32, seed: u64) -> Result<CorrelationLength> {
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::OutOfRange(format!("p = {p} (need 0.5 < p < 1)")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfRange(format!("eps = {eps} (need 0 < eps < 0.5)")));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let mut cache: HashMap<u32, (f64, f64)> = HashMap::new();
    let prob = |n: u32, cache: &mut HashMap<u32, (f64, f64)>| -> Result<(f64, f64)> {
        if let Some(&v) = cache.get(&n) {
            return Ok(v);
        }
        let v = closed_crossing_prob(p, n, reps, derive_seed(seed, n as u64))?;
        cache.insert(n, v);
        Ok(v)
    };
    // Smallest n satisfying `below(prob(n))`, by doubling then
    // bisection; `Ok(None)` when even MAX_CORR_WINDOW fails.
    let search = |below: &dyn Fn((f64, f64)) -> bool,
                      cache: &mut HashMap<u32, (f64, f64)>|
     -> Result<Option<u32>> {
        let mut hi = 1u32;
        while !below(prob(hi, cache)?) {
            if hi >= MAX_CORR_WINDOW {
                return Ok(None);
            }
            hi = (hi * 2).min(MAX_CORR_WINDOW);
        }
        let mut lo = hi / 2; // prob(lo) above threshold (or lo = 0)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if below(prob(mid, cache)?) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    };
    let value = search(&|(ph, _)| ph <= eps, &mut cache)?.ok_or_else(|| {
        Error::OutOfRange(format!(
            "L_eps({p}) exceeds the maximum window {MAX_CORR_WINDOW}"
        ))
    })?;
    let (prob_at, stderr_at) = prob(value, &mut cache)?;
    let interval = if (prob_at - eps).abs() <= 2.0 * stderr_at {
        // The boundary estimate is ambiguous; report the n-range
        // consistent with the threshold at the 2·stderr level.
        let lo = search(&|(ph, se)| ph <= eps + 2.0 * se, &mut cache)?.unwrap_or(value);
        let hi = search(&|(ph, se)| ph <= eps - 2.0 * se, &mut cache)?.unwrap_or(MAX_CORR_WINDOW);
        (lo.min(value), hi.max(value))
    } else {
        (value, value)
    };
    Ok(CorrelationLength {
        p,
        eps,
        value,
        interval,
        prob_at,
        stderr_at,
        reps,
        seed,
    })
}

// ---------------------------------------------------------------------------
// ν̂ tables
// ---------------------------------------------------------------------------

/// One direction cell of a ν̂ table: L̂(p)·μ̂_p(e^{iθ}).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuCell {
    pub theta: f64,
    /// L̂(p)·μ̂_p(e^{iθ}).
    pub l_mu: f64,
    /// L̂(p)·stderr(μ̂).
    pub stderr: f64,
}

/// One p-row of a ν̂ table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuRow {
    pub p: f64,
    pub l_hat: u32,
    pub cells: Vec<NuCell>,
    /// Directional spread (max − min)/mean of the cell values.
    pub spread: f64,
    /// Interval half-width for the spread (from the extreme cells'
    /// standard errors).
    pub spread_err: f64,
}

/// The near-critical isotropy table: L̂(p)·μ̂_p(e^{iθ}) over a p × θ
/// grid, the scaling constant ν̂, and CI-aware spread trends.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuEstimate {
    /// Rows in the order of the requested p grid.
    pub rows: Vec<NuRow>,
    /// Grand mean of the smallest-p row (the row closest to the
    /// scaling regime); measured, never a constant.
    pub nu_hat: f64,
    pub nu_stderr: f64,
    /// Verdicts for "spread decreases" between consecutive rows, in
    /// grid order (expected ordered with p decreasing toward 1/2).
    pub spread_verdicts: Vec<Verdict>,
}

fn row_spread(cells: &[NuCell]) -> (f64, f64) {
    let hi = cells
        .iter()
        .max_by(|a, b| a.l_mu.partial_cmp(&b.l_mu).unwrap())
        .unwrap();
    let lo = cells
        .iter()
        .min_by(|a, b| a.l_mu.partial_cmp(&b.l_mu).unwrap())
        .unwrap();
    let mean = cells.iter().map(|c| c.l_mu).sum::<f64>() / cells.len() as f64;
    ((hi.l_mu - lo.l_mu) / mean, (hi.stderr + lo.stderr) / mean)
}

fn validate_near_critical_p(p: f64) -> Result<()> {
    if !(p > 0.5 && p <= 0.7) {
        return Err(Error::InvalidArgument(format!(
            "p = {p}: the p grid must lie in (0.5, 0.7] — away from \
             that range the scaling regime is absent (at p = 1, L is O(1))"
        )));
    }
    if p < P_FLOOR {
        return Err(Error::OutOfRange(format!(
            "p = {p} is below the supported floor {P_FLOOR}: L(p) \
             exceeds desk-scale windows"
        )));
    }
    Ok(())
}

/// The L̂(p)·μ̂_p(e^{iθ}) table over `p_grid` × `theta_grid`.
///
/// Preconditions: every p in (0.5, 0.7] and ≥ [`P_FLOOR`]; `n_per_p`
/// at least 4·L̂(p) for every p, so each measurement happens above the
/// correlation scale.  ν̂ is taken from the smallest-p row.
pub fn nu_trend(
    p_grid: &[f64],
    theta_grid: &[f64],
    n_per_p: u32,
    reps: u32,
    seed: u64,
) -> Result<NuEstimate> {
    if p_grid.is_empty() || theta_grid.is_empty() {
        return Err(Error::InvalidArgument("empty p or theta grid".into()));
    }
    let mut rows = Vec::with_capacity(p_grid.len());
    for (i, &p) in p_grid.iter().enumerate() {
        validate_near_critical_p(p)?;
        let seed_p = derive_seed(seed, i as u64);
        let l = correlation_length(p, DEFAULT_EPS0, reps.max(100), derive_seed(seed_p, 0))?;
        if n_per_p < 4 * l.value {
            return Err(Error::InvalidArgument(format!(
                "n_per_p = {n_per_p} < 4·L̂({p}) = {}",
                4 * l.value
            )));
        }
        let mut cells = Vec::with_capacity(theta_grid.len());
        for (j, &theta) in theta_grid.iter().enumerate() {
            let s = mu_estimate(
                p,
                Vec2::unit(theta),
                n_per_p,
                reps,
                derive_seed(seed_p, 1 + j as u64),
            )?;
            cells.push(NuCell {
                theta,
                l_mu: l.value as f64 * s.mean,
                stderr: l.value as f64 * s.stderr,
            });
        }
        let (spread, spread_err) = row_spread(&cells);
        rows.push(NuRow {
            p,
            l_hat: l.value,
            cells,
            spread,
            spread_err,
        });
    }
    let last = rows.last().unwrap();
    let k = last.cells.len() as f64;
    let nu_hat = last.cells.iter().map(|c| c.l_mu).sum::<f64>() / k;
    let nu_stderr = last
        .cells
        .iter()
        .map(|c| c.stderr * c.stderr)
        .sum::<f64>()
        .sqrt()
        / k;
    let spread_verdicts = rows
        .windows(2)
        .map(|w| {
            trend_verdict(
                (w[0].spread, w[0].spread_err),
                (w[1].spread, w[1].spread_err),
            )
        })
        .collect();
    Ok(NuEstimate {
        rows,
        nu_hat,
        nu_stderr,
        spread_verdicts,
    })
}

// ---------------------------------------------------------------------------
// Roundness reports
// ---------------------------------------------------------------------------

/// A per-p directional boundary-norm table β̂_p on a uniform θ grid,
/// with the correlation length it was measured under.
#[derive(Debug, Clone)]
pub struct NormTable {
    pub p: f64,
    pub l_hat: u32,
    pub norm: DirectionalNorm,
    /// Largest per-direction standard error of the norm values
    /// (unscaled, i.e. on the β̂ scale).
    pub stderr: f64,
}

impl NormTable {
    /// Mean and directional spread of L̂·β̂ over the grid.
    pub fn scaled_stats(&self) -> (f64, f64) {
        let l = self.l_hat as f64;
        let vals: Vec<f64> = (0..self.norm.k()).map(|i| l * self.norm.value(i)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in vals {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (mean, (hi - lo) / mean)
    }
}

/// Measure a μ̂-based directional norm table at one p.
///
/// The time constant equals the boundary norm, but the constructive β̂
/// bracket needs its crossing events at scale √n to succeed, which
/// requires √n well above L(p) — out of reach close to p_c on desk
/// hardware.  μ̂ estimates the same norm by a plain geodesic search
/// with no crossing events, so it stays usable whenever n ≥ 4·L̂.
///
/// The norm inherits the full dihedral lattice symmetry (rotation by
/// π/3 and axis reflection), so only directions in the fundamental
/// sector [0, π/6] are measured; the k-grid is filled by folding.
/// `k` must be a positive multiple of 12 so that every grid direction
/// folds onto a measured representative.
pub fn mu_norm_table(p: f64, k: usize, n: u32, reps: u32, seed: u64) -> Result<NormTable> {
    validate_near_critical_p(p)?;
    if k == 0 || k % 12 != 0 {
        return Err(Error::InvalidArgument(format!(
            "k = {k}: need a positive multiple of 12 for sector folding"
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let l = correlation_length(p, DEFAULT_EPS0, reps.max(100), derive_seed(seed, 0))?;
    if n < 4 * l.value {
        return Err(Error::OutOfRange(format!(
            "n = {n} below 4·L̂ = {} at p = {p}",
            4 * l.value
        )));
    }
    let m = k / 12;
    let mut classes = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let theta = std::f64::consts::FRAC_PI_6 * j as f64 / m as f64;
        classes.push(mu_estimate(
            p,
            Vec2::unit(theta),
            n,
            reps,
            derive_seed(seed, 1 + j as u64),
        )?);
    }
    let fold = |i: usize| {
        let r = i % (k / 6);
        if r > m {
            k / 6 - r
        } else {
            r
        }
    };
    let values: Vec<f64> = (0..k).map(|i| classes[fold(i)].mean).collect();
    let stderr = classes.iter().map(|s| s.stderr).fold(0.0, f64::max);
    Ok(NormTable {
        p,
        l_hat: l.value,
        norm: DirectionalNorm::from_values(values)?,
        stderr,
    })
}

/// One p-row of a roundness report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundnessRow {
    pub p: f64,
    pub l_hat: u32,
    /// d_H(Ŵ_p, 𝔻_{1/√π}) (ℓ∞ Hausdorff, unit-area normalizations).
    pub dh_disk: f64,
    /// L̂(p)·φ̂_p.
    pub l_phi: f64,
    /// L̂(p)·φ̂_p / (2√π·ν̂).
    pub ratio: f64,
    /// Interval half-width used for the CI-aware trend checks, on the
    /// scale of |ratio − 1| (propagated from the norm and ν̂ errors).
    pub half_width: f64,
}

/// Roundness trends along p ↓ 1/2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundnessReport {
    pub nu_hat: f64,
    pub rows: Vec<RoundnessRow>,
    /// Verdicts for "d_H decreases" between consecutive rows.
    pub dh_verdicts: Vec<Verdict>,
    /// Verdicts for "|ratio − 1| decreases" between consecutive rows.
    pub ratio_verdicts: Vec<Verdict>,
}

/// Build a roundness report from per-p β̂ tables and a measured ν̂.
///
/// Per row: the normalized Wulff shape's ℓ∞ Hausdorff distance to the
/// unit-area disk, L̂·φ̂, and the isoperimetric ratio against 2√π·ν̂.
/// Trend verdicts compare consecutive rows in table order (expected
/// ordered with p decreasing).
pub fn roundness_from_norms(
    tables: &[NormTable],
    nu_hat: f64,
    nu_stderr: f64,
) -> Result<RoundnessReport> {
    if tables.is_empty() {
        return Err(Error::InvalidArgument("no norm tables".into()));
    }
    if !(nu_hat > 0.0) {
        return Err(Error::InvalidArgument(format!("nu_hat = {nu_hat}")));
    }
    let disk = Shape::Disk {
        center: Vec2::ZERO,
        r: 1.0 / PI.sqrt(),
    };
    let mut rows = Vec::with_capacity(tables.len());
    for t in tables {
        let (_, w_hat) = crate::wulff::wulff_construct(&t.norm)?;
        let dh_disk = hausdorff(&Shape::from(w_hat), &disk);
        let l_phi = t.l_hat as f64 * phi_from_norm(&t.norm)?;
        let ratio = l_phi / (2.0 * PI.sqrt() * nu_hat);
        // Relative error of the ratio: the norm cells' worst relative
        // stderr plus ν̂'s, both at 3 sigma.
        let (scaled_mean, _) = t.scaled_stats();
        let rel = 3.0 * (t.l_hat as f64 * t.stderr / scaled_mean + nu_stderr / nu_hat);
        rows.push(RoundnessRow {
            p: t.p,
            l_hat: t.l_hat,
            dh_disk,
            l_phi,
            ratio,
            half_width: ratio * rel,
        });
    }
    let dh_verdicts = rows
        .windows(2)
        .map(|w| {
            trend_verdict(
                (w[0].dh_disk, w[0].half_width),
                (w[1].dh_disk, w[1].half_width),
            )
        })
        .collect();
    let ratio_verdicts = rows
        .windows(2)
        .map(|w| {
            trend_verdict(
                ((w[0].ratio - 1.0).abs(), w[0].half_width),
                ((w[1].ratio - 1.0).abs(), w[1].half_width),
            )
        })
        .collect();
    Ok(RoundnessReport {
        nu_hat,
        rows,
        dh_verdicts,
        ratio_verdicts,
    })
}

/// Measure β̂_p tables over `p_grid` (each on a `k`-direction grid at
/// scale `n_per_p` with `reps` replicas per direction) and report the
/// roundness trends.  ν̂ is measured from the smallest-p table as the
/// grand mean of L̂·β̂ — consistent with the time-constant definition
/// since β̂ and μ̂ estimate the same norm.
pub fn roundness_report(
    p_grid: &[f64],
    k: usize,
    n_per_p: u32,
    reps: u32,
    seed: u64,
) -> Result<(RoundnessReport, Vec<NormTable>)> {
    if p_grid.is_empty() {
        return Err(Error::InvalidArgument("empty p grid".into()));
    }
    if k < 8 {
        return Err(Error::InvalidArgument(format!(
            "k = {k}: need at least 8 directions for a Wulff grid"
        )));
    }
    let mut tables = Vec::with_capacity(p_grid.len());
    for (i, &p) in p_grid.iter().enumerate() {
        validate_near_critical_p(p)?;
        let seed_p = derive_seed(seed.wrapping_add(0x9e37), i as u64);
        let l = correlation_length(p, DEFAULT_EPS0, reps.max(100), derive_seed(seed_p, 0))?;
        if n_per_p < 4 * l.value {
            return Err(Error::InvalidArgument(format!(
                "n_per_p = {n_per_p} < 4·L̂({p}) = {}",
                4 * l.value
            )));
        }
        let mut values = Vec::with_capacity(k);
        let mut stderr = 0f64;
        for j in 0..k {
            let theta = 2.0 * PI * j as f64 / k as f64;
            let s = beta_estimate(
                p,
                Vec2::unit(theta),
                n_per_p,
                reps,
                derive_seed(seed_p, 1 + j as u64),
            )?;
            values.push(s.sample.mean);
            stderr = stderr.max(s.sample.stderr);
        }
        tables.push(NormTable {
            p,
            l_hat: l.value,
            norm: DirectionalNorm::from_values(values)?,
            stderr,
        });
    }
    let last = tables.last().unwrap();
    let (nu_hat, _) = last.scaled_stats();
    let nu_stderr = last.l_hat as f64 * last.stderr / (tables.len() as f64).sqrt();
    let report = roundness_from_norms(&tables, nu_hat, nu_stderr)?;
    Ok((report, tables))
}
