//! Monte Carlo outage estimation and SNR sweeps.
//!
//! Trial `i` always draws its channel from [`trial_rng`]`(seed, i)`, and
//! workers only add integer counts, so every estimate is bit-identical for
//! any number of threads. A sweep reuses the same trials for every SNR point,
//! protocol, precoder mode and candidate power split.

use rayon::prelude::*;
use rayon::ThreadPool;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use crate::channel::{trial_rng, ChannelModel};
use crate::config::{IntervalMethod, PrecoderMode, RhoModeSetting, SerSetting, SimConfig};
use crate::error::{Error, Result};
use crate::mathcore::Matrix;
use crate::precoder::{
    delta_tilde, master_power_split, optimize_rho, Evaluation, PowerSplit, PrecoderPair, PrecoderScaling,
    PrecoderShape, RhoMode, RhoParams, StreamSplit,
};
use crate::protocol::{effective_gains, ser_from_sinr, LinkParams, Outage, PdfCase, ProtocolKind, SerModel, StreamGains};
use crate::scalar::Real;

/// Integer outcome counts of a batch of trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub case_count: [u64; 3],
    /// Outages per (case, stream).
    pub out_count: [[u64; 2]; 3],
    /// Trials with both streams in outage.
    pub both_out: u64,
    /// Trials with exactly one stream in outage.
    pub one_out: u64,
}

impl Tally {
    #[inline]
    pub fn record(&mut self, case: PdfCase, (o1, o2): Outage) {
        let k = case.index();
        self.trials += 1;
        self.case_count[k] += 1;
        self.out_count[k][0] += u64::from(o1);
        self.out_count[k][1] += u64::from(o2);
        match (o1, o2) {
            (true, true) => self.both_out += 1,
            (true, false) | (false, true) => self.one_out += 1,
            (false, false) => {}
        }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.both_out += other.both_out;
        self.one_out += other.one_out;
        for k in 0..3 {
            self.case_count[k] += other.case_count[k];
            self.out_count[k][0] += other.out_count[k][0];
            self.out_count[k][1] += other.out_count[k][1];
        }
        self
    }

    /// Stream outages summed over cases and streams.
    pub fn total_outages(&self) -> u64 {
        self.out_count.iter().flatten().sum()
    }
}

/// Empirical outage statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct OutageEstimate {
    /// Mean of the two per-stream outage rates.
    pub p_out_avg: f64,
    pub p_out_stream: [f64; 2],
    /// Relay decoding case frequencies (A1, A2, A3).
    pub case_prob: [f64; 3],
    /// Outage rate of each stream conditioned on each case (0 for empty cases).
    pub p_out_cond: [[f64; 2]; 3],
    pub trials: u64,
    /// Standard error of `p_out_avg`.
    pub std_err: f64,
    pub tally: Tally,
}

impl From<Tally> for OutageEstimate {
    fn from(t: Tally) -> Self {
        let n = t.trials as f64;
        let p_out_stream = [0, 1].map(|s| (0..3).map(|k| t.out_count[k][s]).sum::<u64>() as f64 / n);
        let mut case_prob = [0.0; 3];
        let mut p_out_cond = [[0.0; 2]; 3];
        for k in 0..3 {
            case_prob[k] = t.case_count[k] as f64 / n;
            for s in 0..2 {
                if t.case_count[k] > 0 {
                    p_out_cond[k][s] = t.out_count[k][s] as f64 / t.case_count[k] as f64;
                }
            }
        }
        let p_out_avg = t.total_outages() as f64 / (2.0 * n);
        // Per-trial value is 0, 1/2 or 1; the two streams are not independent.
        let sum_sq = t.both_out as f64 + 0.25 * t.one_out as f64;
        let std_err = if t.trials > 1 {
            ((sum_sq - n * p_out_avg * p_out_avg).max(0.0) / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Self { p_out_avg, p_out_stream, case_prob, p_out_cond, trials: t.trials, std_err, tally: t }
    }
}

impl OutageEstimate {
    /// `Σ_k ½ (p_cond[k][0] + p_cond[k][1]) · Pr(A_k)`.
    pub fn reconstructed_average(&self) -> f64 {
        (0..3)
            .map(|k| 0.5 * (self.p_out_cond[k][0] + self.p_out_cond[k][1]) * self.case_prob[k])
            .sum()
    }

    /// Share of `p_out_avg` contributed by trials where the relay decoded
    /// nothing.
    pub fn a3_share(&self) -> f64 {
        let a3 = 0.5 * (self.p_out_cond[2][0] + self.p_out_cond[2][1]) * self.case_prob[2];
        if self.p_out_avg > 0.0 { a3 / self.p_out_avg } else { 0.0 }
    }

    /// Two-sided interval for `p_out_avg` at confidence `level`.
    ///
    /// `Normal` uses the standard error; `ClopperPearson` treats the
    /// `2·trials` stream decisions as binomial, which is exact only when the
    /// streams are independent but stays sensible for rare outages.
    pub fn interval(&self, level: f64, method: IntervalMethod) -> (f64, f64) {
        let alpha = 1.0 - level;
        match method {
            IntervalMethod::Normal => {
                let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
                ((self.p_out_avg - z * self.std_err).max(0.0), (self.p_out_avg + z * self.std_err).min(1.0))
            }
            IntervalMethod::ClopperPearson => clopper_pearson(self.tally.total_outages(), 2 * self.trials, level),
        }
    }
}

/// Exact binomial interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    let alpha = 1.0 - level;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0).map(|b| b.inverse_cdf(alpha / 2.0)).unwrap_or(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf).map(|b| b.inverse_cdf(1.0 - alpha / 2.0)).unwrap_or(1.0)
    };
    (lo, hi)
}

/// Runs `f` on trials `0..trials` in `pool` (or the global pool) and sums
/// the counts.
fn run_trials<F>(trials: u64, pool: Option<&ThreadPool>, f: F) -> Result<Tally>
where
    F: Fn(u64) -> Result<(PdfCase, Outage)> + Sync,
{
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let job = || {
        (0..trials)
            .into_par_iter()
            .try_fold(Tally::default, |mut t, i| {
                let (case, out) = f(i)?;
                t.record(case, out);
                Ok::<_, Error>(t)
            })
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
    };
    match pool {
        Some(p) => p.install(job),
        None => job(),
    }
}

/// Builds a dedicated pool; `workers = 0` means one thread per core.
pub fn thread_pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))
}

/// Outage of a fixed precoder pair over `trials` channel draws.
#[allow(clippy::too_many_arguments)]
pub fn estimate_outage<T: Real>(
    model: &ChannelModel<T>,
    pp: &PrecoderPair<T>,
    n1: usize,
    protocol: ProtocolKind,
    link: &LinkParams<T>,
    trials: u64,
    seed: u64,
    pool: Option<&ThreadPool>,
) -> Result<OutageEstimate> {
    let tally = run_trials(trials, pool, |i| {
        let ch = model.sample_realization(&mut trial_rng(seed, i))?;
        let g = effective_gains(&ch, pp, n1)?;
        Ok(protocol.evaluate(&g, link))
    })?;
    Ok(tally.into())
}

/// Unit-power gains `‖H B‖²` of every trial for one [`PrecoderShape`], in the
/// order SR1, SR2, RD, SD1, SD2. Gains of any scaled design follow by
/// multiplying with the block powers.
#[derive(Clone, Debug)]
pub struct GainBank<T> {
    unit: Vec<[T; 5]>,
}

impl<T: Real> GainBank<T> {
    pub fn build(model: &ChannelModel<T>, shape: &PrecoderShape<T>, trials: u64, seed: u64, pool: Option<&ThreadPool>) -> Result<Self> {
        if trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        let norm = |h: &Matrix<T>, b: &Matrix<T>| h.try_mul(b).map(|m| m.frobenius_norm_sq());
        let job = || {
            (0..trials)
                .into_par_iter()
                .map(|i| {
                    let ch = model.sample_realization(&mut trial_rng(seed, i))?;
                    Ok([
                        norm(&ch.h_sr, &shape.source[0])?,
                        norm(&ch.h_sr, &shape.source[1])?,
                        norm(&ch.h_rd, &shape.relay)?,
                        norm(&ch.h_sd, &shape.source[0])?,
                        norm(&ch.h_sd, &shape.source[1])?,
                    ])
                })
                .collect::<Result<Vec<_>>>()
        };
        let unit = match pool {
            Some(p) => p.install(job)?,
            None => job()?,
        };
        Ok(Self { unit })
    }

    pub fn trials(&self) -> u64 {
        self.unit.len() as u64
    }

    #[inline]
    pub fn gains(&self, i: usize, s: &PrecoderScaling<T>) -> StreamGains<T> {
        let [sr1, sr2, rd, sd1, sd2] = self.unit[i];
        let p1 = s.split.alpha_s * s.stream_split.rho1;
        let p2 = s.split.alpha_s * s.stream_split.rho2;
        StreamGains {
            l_sr1: p1 * sr1,
            l_sr2: p2 * sr2,
            l_rd: s.split.alpha_r * rd,
            l_sd1: p1 * sd1,
            l_sd2: p2 * sd2,
        }
    }

    pub fn evaluate(&self, scaling: &PrecoderScaling<T>, protocol: ProtocolKind, link: &LinkParams<T>, pool: Option<&ThreadPool>) -> Result<OutageEstimate> {
        let tally = run_trials(self.trials(), pool, |i| Ok(protocol.evaluate(&self.gains(i as usize, scaling), link)))?;
        Ok(tally.into())
    }
}

/// One sweep result.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub snr_db: f64,
    pub protocol: ProtocolKind,
    pub mode: PrecoderMode,
    pub estimate: OutageEstimate,
    pub split: PowerSplit<f64>,
    pub stream_split: StreamSplit<f64>,
}

/// Precoder design and outage evaluation for one configuration, with the
/// channel statistics computed once and shared by every query.
pub struct Simulator<T> {
    config: SimConfig,
    model: ChannelModel<T>,
    trials: u64,
    seed: u64,
    statistical: PrecoderShape<T>,
    nonadaptive: PrecoderShape<T>,
    statistical_bank: Option<GainBank<T>>,
    nonadaptive_bank: Option<GainBank<T>>,
    pool: ThreadPool,
}

/// Stream id of the random precoders, kept apart from trial streams.
const NONADAPTIVE_STREAM: u64 = u64::MAX;

impl<T: Real> Simulator<T> {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate().map_err(|e| Error::invalid("config", e.to_string()))?;
        let c = &config.correlation;
        let model = ChannelModel::new(config.antennas.antennas(), &config.topology, c.sd, c.sr, c.rd)?;
        let n1 = config.antennas.n1;
        let statistical = PrecoderShape::statistical(&model.sr.xi_t(), &model.rd.xi_t(), n1)?;
        let mut rng = trial_rng(config.sweep.seed, NONADAPTIVE_STREAM);
        let nonadaptive = PrecoderShape::random_unitary(config.antennas.n_s, config.antennas.n_r, n1, &mut rng)?;
        Ok(Self {
            config: config.clone(),
            model,
            trials: config.sweep.trials,
            seed: config.sweep.seed,
            statistical,
            nonadaptive,
            statistical_bank: None,
            nonadaptive_bank: None,
            pool: thread_pool(config.sweep.workers)?,
        })
    }

    pub fn model(&self) -> &ChannelModel<T> {
        &self.model
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn pool(&self) -> &ThreadPool {
        &self.pool
    }

    pub fn shape(&self, mode: PrecoderMode) -> &PrecoderShape<T> {
        match mode {
            PrecoderMode::Nonadaptive => &self.nonadaptive,
            _ => &self.statistical,
        }
    }

    fn bank(&mut self, mode: PrecoderMode) -> Result<&GainBank<T>> {
        let (slot, shape) = match mode {
            PrecoderMode::Nonadaptive => (&mut self.nonadaptive_bank, &self.nonadaptive),
            _ => (&mut self.statistical_bank, &self.statistical),
        };
        if slot.is_none() {
            *slot = Some(GainBank::build(&self.model, shape, self.trials, self.seed, Some(&self.pool))?);
        }
        Ok(slot.as_ref().expect("bank just built"))
    }

    pub fn link_params(&self, snr_db: f64) -> Result<LinkParams<T>> {
        let modulation = self.config.link.modulation;
        let ser = match self.config.link.ser_mode {
            SerSetting::FromSinr => SerModel::from_sinr(modulation),
            SerSetting::Fixed => SerModel::fixed(modulation, T::lit(self.config.link.ser_fixed))?,
        };
        Ok(LinkParams {
            n0: T::lit(self.config.noise_power(snr_db)?),
            d_thresh: T::lit(self.config.d_thresh()),
            ser,
        })
    }

    /// Stream split minimising the relay's both-streams-lost bound for
    /// source budget `alpha_s`.
    pub fn design_stream_split(&self, alpha_s: T, link: &LinkParams<T>) -> Result<StreamSplit<T>> {
        if alpha_s <= T::zero() {
            return Ok(StreamSplit::even());
        }
        let a = &self.config.antennas;
        let [d1, d2] = delta_tilde(&self.model.sr.xi_t(), &self.model.sr.xi_r(), self.model.pl_sr, alpha_s, a.n1)?;
        let eps_r = ser_from_sinr(link.d_thresh, self.config.link.modulation).min(T::lit(0.5));
        let params = RhoParams {
            delta_tilde_1: d1,
            delta_tilde_2: d2,
            eps_r,
            d_thresh: link.d_thresh,
            n0: link.n0,
            w1: (a.n_r * a.n1) as u32,
            w2: (a.n_r * a.n2) as u32,
        };
        let mode = match self.config.precoder.rho_mode {
            RhoModeSetting::Integrated => RhoMode::Integrated,
            RhoModeSetting::PerK => RhoMode::PerK(T::lit(self.config.precoder.rho_k) * link.n0),
        };
        optimize_rho(&params, mode)
    }

    fn built_bank(&self, mode: PrecoderMode) -> &GainBank<T> {
        match mode {
            PrecoderMode::Nonadaptive => self.nonadaptive_bank.as_ref(),
            _ => self.statistical_bank.as_ref(),
        }
        .expect("bank built before use")
    }

    /// Precoder scaling of `mode` at this SNR and its outage. `Proposed` runs
    /// the master search against `protocol`'s outage.
    pub fn design(&mut self, snr_db: f64, protocol: ProtocolKind, mode: PrecoderMode) -> Result<(PrecoderScaling<T>, OutageEstimate)> {
        self.bank(mode)?;
        let this = &*self;
        let bank = this.built_bank(mode);
        let pool = Some(&this.pool);
        let link = this.link_params(snr_db)?;
        let p0 = T::lit(this.config.power.p0);
        let scaling = match mode {
            PrecoderMode::Proposed => {
                let result = master_power_split(p0, |split| {
                    let stream_split = this.design_stream_split(split.alpha_s, &link)?;
                    let est = bank.evaluate(&PrecoderScaling { split, stream_split }, protocol, &link, pool)?;
                    Ok(Evaluation { outage: T::lit(est.p_out_avg), std_err: T::lit(est.std_err) })
                })?;
                PrecoderScaling {
                    split: result.split,
                    stream_split: this.design_stream_split(result.split.alpha_s, &link)?,
                }
            }
            PrecoderMode::Disjoint => PrecoderScaling { split: PowerSplit::even(p0), stream_split: StreamSplit::even() },
            PrecoderMode::Nonadaptive => {
                let a = &this.config.antennas;
                PrecoderScaling {
                    split: PowerSplit::even(p0),
                    stream_split: StreamSplit::new(T::lit(a.n1 as f64 / a.n_s as f64))?,
                }
            }
            PrecoderMode::PerNode => {
                let b = this
                    .config
                    .power
                    .per_node
                    .ok_or_else(|| Error::invalid("power.per_node", "required by the per_node mode"))?;
                let split = PowerSplit::new(T::lit(b.source), T::lit(b.relay))?;
                PrecoderScaling { split, stream_split: this.design_stream_split(split.alpha_s, &link)? }
            }
        };
        let est = bank.evaluate(&scaling, protocol, &link, pool)?;
        Ok((scaling, est))
    }

    pub fn run_point(&mut self, snr_db: f64, protocol: ProtocolKind, mode: PrecoderMode) -> Result<SweepRow> {
        let (scaling, estimate) = self.design(snr_db, protocol, mode)?;
        Ok(SweepRow {
            snr_db,
            protocol,
            mode,
            estimate,
            split: PowerSplit {
                alpha_s: scaling.split.alpha_s.to_f64_lossy(),
                alpha_r: scaling.split.alpha_r.to_f64_lossy(),
            },
            stream_split: StreamSplit {
                rho1: scaling.stream_split.rho1.to_f64_lossy(),
                rho2: scaling.stream_split.rho2.to_f64_lossy(),
            },
        })
    }

    /// Rows in (SNR, protocol, mode) order.
    pub fn sweep(&mut self, snr_points: &[f64], protocols: &[ProtocolKind], modes: &[PrecoderMode]) -> Result<Vec<SweepRow>> {
        if snr_points.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("snr_db", "sweep points must be finite"));
        }
        let mut rows = Vec::with_capacity(snr_points.len() * protocols.len() * modes.len());
        for &snr in snr_points {
            for &protocol in protocols {
                for &mode in modes {
                    rows.push(self.run_point(snr, protocol, mode)?);
                }
            }
        }
        Ok(rows)
    }
}

/// Sweeps one protocol under one precoder mode; trials and seed override the
/// config.
pub fn sweep_snr<T: Real>(
    config: &SimConfig,
    snr_points_db: &[f64],
    protocol: ProtocolKind,
    mode: PrecoderMode,
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut cfg = config.clone();
    cfg.sweep.trials = trials;
    cfg.sweep.seed = seed;
    Simulator::<T>::new(&cfg)?.sweep(snr_points_db, &[protocol], &[mode])
}

/// Runs the sweep described by the config.
pub fn run_config<T: Real>(config: &SimConfig) -> Result<Vec<SweepRow>> {
    let s = &config.sweep;
    Simulator::<T>::new(config)?.sweep(&s.snr_db.points(), &s.protocols, &s.modes)
}
