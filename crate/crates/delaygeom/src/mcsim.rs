//! Independent Monte Carlo oracle: samples static Poisson network
//! realizations, resolves which stations interfere, and estimates every
//! delay metric empirically.
//!
//! Determinism contract: every random stream is derived solely from
//! (master_seed, realization index, purpose, resample attempt), realizations
//! are processed as independent work items, and reductions run in fixed
//! index order — so results are bitwise independent of the thread count.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, CoverageCriterion, NetworkParams, NetworkRealization};

/// How the non-serving stations' active/idle states are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivityMode {
    /// Keep each non-serving station with the closed-form active probability.
    IndependentThinning,
    /// Sample the terminal process too; a station is active iff it is the
    /// nearest station of at least one terminal (or serves the origin).
    Voronoi,
}

/// How fading enters the per-realization estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingMode {
    /// Use the exact conditional coverage probability given the geometry.
    SemiAnalytic,
    /// Draw fresh fading per slot and replay the transmission protocol.
    SlotLevel,
}

/// Monte Carlo run configuration.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    /// Sampling-disc radius (m).
    pub window_radius: f64,
    pub n_realizations: usize,
    /// Slot budget per realization: the censoring cap of a transmission, and
    /// the per-realization trial count of the slot-level estimators.
    pub n_slots: usize,
    pub master_seed: u64,
    pub activity_mode: ActivityMode,
    pub fading_mode: FadingMode,
}

impl SimConfig {
    /// Defaults: window sized for >= 500 expected stations, 5000 realizations
    /// and a 5000-slot budget.
    pub fn for_params(params: &NetworkParams) -> SimConfig {
        SimConfig {
            window_radius: (500.0 / (PI * params.lambda_bs)).sqrt(),
            n_realizations: 5000,
            n_slots: 5000,
            master_seed: 0x5eed_d31a,
            activity_mode: ActivityMode::IndependentThinning,
            fading_mode: FadingMode::SemiAnalytic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_radius > 0.0 && self.window_radius.is_finite()) {
            return Err(Error::Domain(format!(
                "window radius must be positive, got {}",
                self.window_radius
            )));
        }
        if self.n_realizations < 1 || self.n_slots < 1 {
            return Err(Error::Domain("realization and slot counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Point estimate with a 95% normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub value: f64,
    pub half_width_95: f64,
    pub n: usize,
}

fn mean_and_ci(values: &[f64]) -> EstimateWithCI {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    EstimateWithCI {
        value: mean,
        half_width_95: 1.96 * (var / n as f64).sqrt(),
        n,
    }
}

// Stream purposes; combined with the resample attempt into one substream key.
const PURPOSE_PLACEMENT: u64 = 1;
const PURPOSE_ACTIVITY: u64 = 2;
const PURPOSE_TERMINALS: u64 = 3;
const PURPOSE_FADING: u64 = 4;

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn substream(master: u64, index: u64, purpose: u64, attempt: u64) -> ChaCha8Rng {
    let mut s = mix64(master);
    s = mix64(s ^ index);
    s = mix64(s ^ ((purpose << 48) | attempt));
    ChaCha8Rng::seed_from_u64(s)
}

/// A sampled realization plus how many empty-window resamples it took.
#[derive(Debug, Clone)]
pub struct SampledRealization {
    pub realization: NetworkRealization,
    pub resamples: u32,
}

const MAX_RESAMPLES: u64 = 64;

/// Draw one static network realization for the typical user at the origin.
pub fn sample_realization(
    params: &NetworkParams,
    cfg: &SimConfig,
    index: usize,
) -> Result<SampledRealization> {
    cfg.validate()?;
    let radius = cfg.window_radius;
    let mean_bs = params.lambda_bs * PI * radius * radius;
    let bs_dist = Poisson::new(mean_bs)
        .map_err(|_| Error::Domain(format!("invalid station mean {mean_bs}")))?;
    let mut resamples = 0u32;
    'attempts: for attempt in 0..MAX_RESAMPLES {
        let mut rng = substream(cfg.master_seed, index as u64, PURPOSE_PLACEMENT, attempt);
        let n_bs = bs_dist.sample(&mut rng) as usize;
        if n_bs == 0 {
            resamples += 1;
            continue;
        }
        let mut xs = Vec::with_capacity(n_bs);
        let mut serving = 0usize;
        let mut r0 = f64::INFINITY;
        for i in 0..n_bs {
            let r = radius * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            xs.push((r * theta.cos(), r * theta.sin(), r));
            if r < r0 {
                r0 = r;
                serving = i;
            }
        }

        let mut active = vec![false; n_bs];
        match cfg.activity_mode {
            ActivityMode::IndependentThinning => {
                let l = params.active_probability();
                let mut act_rng =
                    substream(cfg.master_seed, index as u64, PURPOSE_ACTIVITY, attempt);
                for a in active.iter_mut() {
                    *a = act_rng.gen::<f64>() < l;
                }
            }
            ActivityMode::Voronoi => {
                let mut mt_rng =
                    substream(cfg.master_seed, index as u64, PURPOSE_TERMINALS, attempt);
                let mean_mt = params.lambda_mt * PI * radius * radius;
                let mt_dist = Poisson::new(mean_mt)
                    .map_err(|_| Error::Domain(format!("invalid terminal mean {mean_mt}")))?;
                let n_mt = mt_dist.sample(&mut mt_rng) as usize;
                for _ in 0..n_mt {
                    let r = radius * mt_rng.gen::<f64>().sqrt();
                    let theta = 2.0 * PI * mt_rng.gen::<f64>();
                    let (mx, my) = (r * theta.cos(), r * theta.sin());
                    let mut best = 0usize;
                    let mut best_d = f64::INFINITY;
                    for (i, (x, y, _)) in xs.iter().enumerate() {
                        let d = (x - mx) * (x - mx) + (y - my) * (y - my);
                        if d < best_d {
                            best_d = d;
                            best = i;
                        }
                    }
                    active[best] = true;
                }
            }
        }
        active[serving] = true;

        let mut interferers: Vec<f64> = xs
            .iter()
            .enumerate()
            .filter(|(i, (_, _, r))| *i != serving && active[*i] && *r > r0)
            .map(|(_, (_, _, r))| *r)
            .collect();
        interferers.sort_unstable_by(f64::total_cmp);
        // f64 radius collisions are measure-zero; treat one as a failed draw.
        if interferers.windows(2).any(|w| w[0] >= w[1]) {
            resamples += 1;
            continue 'attempts;
        }
        let realization = NetworkRealization::new(r0, interferers)?;
        return Ok(SampledRealization { realization, resamples });
    }
    Err(Error::Numerical(format!(
        "realization {index}: window stayed empty after {MAX_RESAMPLES} resamples"
    )))
}

/// Exact per-realization coverage probability (the semi-analytic fading path).
pub fn pcov_oracle(
    real: &NetworkRealization,
    criterion: &CoverageCriterion,
    params: &NetworkParams,
) -> f64 {
    model::conditional_coverage(real, criterion, params)
}

/// Outcome of replaying one packet transmission slot by slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOutcome {
    /// First successful slot (1-based).
    Delivered(u32),
    /// No success within the cap.
    Censored(u32),
}

fn slot_succeeds(
    real: &NetworkRealization,
    criterion: &CoverageCriterion,
    params: &NetworkParams,
    rng: &mut ChaCha8Rng,
) -> bool {
    let r0 = real.serving_distance();
    let h0: f64 = Exp1.sample(rng);
    let signal = params.p * h0 / (params.k * r0.powf(params.alpha));
    let mut interference = 0.0;
    for &ri in real.interferers() {
        let hi: f64 = Exp1.sample(rng);
        interference += params.p * hi / (params.k * ri.powf(params.alpha));
    }
    match criterion {
        CoverageCriterion::Sir { gamma } => signal > *gamma * interference,
        CoverageCriterion::Sinr { gamma } => signal > *gamma * (interference + params.w),
        CoverageCriterion::SirAsnr { gamma, .. } => signal > *gamma * interference,
    }
}

/// Replay the retransmission protocol with fresh fading each slot, from first
/// principles (signal and interference rebuilt per slot, not via the
/// conditional coverage formula).
pub fn simulate_delay_slots(
    real: &NetworkRealization,
    criterion: &CoverageCriterion,
    params: &NetworkParams,
    rng: &mut ChaCha8Rng,
    cap: u32,
) -> SlotOutcome {
    if let CoverageCriterion::SirAsnr { theta, .. } = criterion {
        // The detection gate is fading-free: beyond the detection radius no
        // slot can ever succeed.
        if params.w > 0.0 && real.serving_distance() > model::detection_radius(*theta, params) {
            return SlotOutcome::Censored(cap);
        }
    }
    for slot in 1..=cap {
        if slot_succeeds(real, criterion, params, rng) {
            return SlotOutcome::Delivered(slot);
        }
    }
    SlotOutcome::Censored(cap)
}

/// Map every realization to a value, in parallel, deterministically.
fn per_realization<T, F>(
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &NetworkRealization) -> T + Sync,
{
    criterion.validate()?;
    cfg.validate()?;
    let out: Vec<Result<T>> = (0..cfg.n_realizations)
        .into_par_iter()
        .map(|i| {
            let sampled = sample_realization(params, cfg, i)?;
            Ok(f(i, &sampled.realization))
        })
        .collect();
    out.into_iter().collect()
}

/// Empirical per-slot success probability over `n_slots` independent slots.
fn slot_level_pcov(
    index: usize,
    real: &NetworkRealization,
    criterion: &CoverageCriterion,
    params: &NetworkParams,
    cfg: &SimConfig,
) -> f64 {
    if let CoverageCriterion::SirAsnr { theta, .. } = criterion {
        if params.w > 0.0 && real.serving_distance() > model::detection_radius(*theta, params) {
            return 0.0;
        }
    }
    let mut rng = substream(cfg.master_seed, index as u64, PURPOSE_FADING, 0);
    let mut successes = 0usize;
    for _ in 0..cfg.n_slots {
        if slot_succeeds(real, criterion, params, &mut rng) {
            successes += 1;
        }
    }
    successes as f64 / cfg.n_slots as f64
}

/// Estimate F1(tau) = E[P(delay > tau)].
pub fn estimate_f1(
    tau: u32,
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
) -> Result<EstimateWithCI> {
    Ok(estimate_f1_grid(&[tau], params, criterion, cfg)?.remove(0))
}

/// F1 at several deadlines from one set of realizations.
pub fn estimate_f1_grid(
    taus: &[u32],
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
) -> Result<Vec<EstimateWithCI>> {
    match cfg.fading_mode {
        FadingMode::SemiAnalytic => {
            let pcovs = per_realization(params, criterion, cfg, |_, real| {
                pcov_oracle(real, criterion, params)
            })?;
            Ok(taus
                .iter()
                .map(|&tau| {
                    let vals: Vec<f64> =
                        pcovs.iter().map(|p| (1.0 - p).powi(tau as i32)).collect();
                    mean_and_ci(&vals)
                })
                .collect())
        }
        FadingMode::SlotLevel => {
            if let Some(&tau) = taus.iter().find(|&&t| t as usize >= cfg.n_slots) {
                return Err(Error::Domain(format!(
                    "slot-level F1 needs tau < n_slots (tau={tau}, n_slots={})",
                    cfg.n_slots
                )));
            }
            let slots = per_realization(params, criterion, cfg, |i, real| {
                let mut rng = substream(cfg.master_seed, i as u64, PURPOSE_FADING, 0);
                simulate_delay_slots(real, criterion, params, &mut rng, cfg.n_slots as u32)
            })?;
            Ok(taus
                .iter()
                .map(|&tau| {
                    let vals: Vec<f64> = slots
                        .iter()
                        .map(|o| match o {
                            SlotOutcome::Delivered(s) => (*s > tau) as u8 as f64,
                            SlotOutcome::Censored(_) => 1.0,
                        })
                        .collect();
                    mean_and_ci(&vals)
                })
                .collect())
        }
    }
}

fn conditional_pcovs(
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    match cfg.fading_mode {
        FadingMode::SemiAnalytic => per_realization(params, criterion, cfg, |_, real| {
            pcov_oracle(real, criterion, params)
        }),
        FadingMode::SlotLevel => per_realization(params, criterion, cfg, |i, real| {
            slot_level_pcov(i, real, criterion, params, cfg)
        }),
    }
}

/// Estimate F2(T) = P[conditional mean delay >= T].
pub fn estimate_f2(
    t_threshold: f64,
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
) -> Result<EstimateWithCI> {
    Ok(estimate_f2_grid(&[t_threshold], params, criterion, cfg)?.remove(0))
}

/// F2 at several thresholds from one set of realizations.
pub fn estimate_f2_grid(
    ts: &[f64],
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
) -> Result<Vec<EstimateWithCI>> {
    if let Some(&t) = ts.iter().find(|&&t| !(t >= 1.0)) {
        return Err(Error::Domain(format!("F2 threshold must be >= 1, got {t}")));
    }
    let pcovs = conditional_pcovs(params, criterion, cfg)?;
    Ok(ts
        .iter()
        .map(|&t| {
            let vals: Vec<f64> = pcovs.iter().map(|&p| (p <= 1.0 / t) as u8 as f64).collect();
            mean_and_ci(&vals)
        })
        .collect())
}

/// Estimate F3(x, tau) = P[(1 - pcov)^tau >= x].
pub fn estimate_f3(
    x: f64,
    tau: u32,
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
) -> Result<EstimateWithCI> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("F3 argument x={x} outside [0, 1]")));
    }
    let pcovs = conditional_pcovs(params, criterion, cfg)?;
    let vals: Vec<f64> = pcovs
        .iter()
        .map(|&p| ((1.0 - p).powi(tau as i32) >= x) as u8 as f64)
        .collect();
    Ok(mean_and_ci(&vals))
}

/// Local-delay estimate: sample mean of the conditional mean delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDelayEstimate {
    pub estimate: EstimateWithCI,
    /// False when the running mean is still drifting at the sample end — the
    /// signature of the infinite-mean regimes.
    pub stabilized: bool,
    /// Realizations with zero coverage (infinite delay), excluded from the
    /// mean; a bias note, not an error.
    pub excluded_infinite: usize,
}

pub fn estimate_local_delay(
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
) -> Result<LocalDelayEstimate> {
    let values: Vec<f64> = match cfg.fading_mode {
        FadingMode::SemiAnalytic => conditional_pcovs(params, criterion, cfg)?
            .into_iter()
            .map(|p| if p > 0.0 { 1.0 / p } else { f64::INFINITY })
            .collect(),
        FadingMode::SlotLevel => per_realization(params, criterion, cfg, |i, real| {
            let mut rng = substream(cfg.master_seed, i as u64, PURPOSE_FADING, 0);
            match simulate_delay_slots(real, criterion, params, &mut rng, cfg.n_slots as u32) {
                SlotOutcome::Delivered(s) => s as f64,
                SlotOutcome::Censored(_) => f64::INFINITY,
            }
        })?,
    };
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let excluded = values.len() - finite.len();
    if finite.is_empty() {
        return Err(Error::Numerical("every realization had zero coverage".into()));
    }
    let estimate = mean_and_ci(&finite);
    let half_mean = {
        let h = &finite[..(finite.len() / 2).max(1)];
        h.iter().sum::<f64>() / h.len() as f64
    };
    let stabilized = (estimate.value - half_mean).abs() <= 0.05 * estimate.value.abs();
    Ok(LocalDelayEstimate { estimate, stabilized, excluded_infinite: excluded })
}

/// Packet-loss estimate: fraction of realizations with zero coverage.
/// Fading plays no role, so both fading modes use the exact conditional
/// coverage.
pub fn estimate_ploss(
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
) -> Result<EstimateWithCI> {
    let pcovs = per_realization(params, criterion, cfg, |_, real| {
        pcov_oracle(real, criterion, params)
    })?;
    let vals: Vec<f64> = pcovs.iter().map(|&p| (p == 0.0) as u8 as f64).collect();
    Ok(mean_and_ci(&vals))
}

/// One per-realization audit record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationRecord {
    pub index: usize,
    pub r0: f64,
    pub n_interferers: usize,
    pub pcov: f64,
}

/// Per-realization dump for external auditing.
pub fn realization_records(
    params: &NetworkParams,
    criterion: &CoverageCriterion,
    cfg: &SimConfig,
) -> Result<Vec<RealizationRecord>> {
    per_realization(params, criterion, cfg, |i, real| RealizationRecord {
        index: i,
        r0: real.serving_distance(),
        n_interferers: real.interferers().len(),
        pcov: pcov_oracle(real, criterion, params),
    })
}
