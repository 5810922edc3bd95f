//! Per-realization protocol logic on effective stream gains.
//!
//! Decoding succeeds when the stream's SINR reaches `D = 2^{L/T} - 1`. A
//! stream decoded after an unreliably decoded stream sees `4ε` times that
//! stream's power as residual interference, where ε is the symbol error rate
//! of the first decision.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::precoder::PrecoderPair;
use crate::scalar::Real;

/// Lower and upper clamps of every SER value.
pub const SER_FLOOR: f64 = 1e-12;

/// Floor on denominators before division.
const DENOM_FLOOR: f64 = 1e-300;

/// Squared Frobenius norms of the precoded sub-channels.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StreamGains<T> {
    pub l_sr1: T,
    pub l_sr2: T,
    pub l_rd: T,
    pub l_sd1: T,
    pub l_sd2: T,
}

/// Computes the five stream gains of a realization under a precoder pair;
/// stream 1 uses the first `n1` source precoder columns.
pub fn effective_gains<T: Real>(ch: &ChannelRealization<T>, pp: &PrecoderPair<T>, n1: usize) -> Result<StreamGains<T>> {
    let n_s = pp.p_s.cols();
    if n1 > n_s {
        return Err(Error::Dimension(format!("n1 = {n1} exceeds {n_s} precoder columns")));
    }
    let b1 = pp.p_s.columns(0..n1);
    let b2 = pp.p_s.columns(n1..n_s);
    let g = |h: &crate::mathcore::Matrix<T>, p: &crate::mathcore::Matrix<T>| h.try_mul(p).map(|m| m.frobenius_norm_sq());
    Ok(StreamGains {
        l_sr1: g(&ch.h_sr, &b1)?,
        l_sr2: g(&ch.h_sr, &b2)?,
        l_rd: g(&ch.h_rd, &pp.p_r)?,
        l_sd1: g(&ch.h_sd, &b1)?,
        l_sd2: g(&ch.h_sd, &b2)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    Qam16,
}

/// SER source: the instantaneous SINR (default) or a fixed value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SerMode<T> {
    FromSinr,
    Fixed(T),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SerModel<T> {
    pub modulation: Modulation,
    pub mode: SerMode<T>,
}

impl<T: Real> SerModel<T> {
    pub fn from_sinr(modulation: Modulation) -> Self {
        Self { modulation, mode: SerMode::FromSinr }
    }

    pub fn fixed(modulation: Modulation, eps: T) -> Result<Self> {
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::invalid("ser", format!("fixed SER must lie in (0, 1), got {eps}")));
        }
        Ok(Self { modulation, mode: SerMode::Fixed(eps) })
    }

    /// SER for a decision taken at SINR `gamma`.
    #[inline]
    pub fn eval(&self, gamma: T) -> T {
        match self.mode {
            SerMode::FromSinr => ser_from_sinr(gamma, self.modulation),
            SerMode::Fixed(e) => e,
        }
    }
}

/// Symbol error rate of Gray-coded QPSK or rectangular 16-QAM on AWGN at
/// SINR `gamma`, clamped to `[1e-12, 1 - 1e-12]`.
pub fn ser_from_sinr<T: Real>(gamma: T, modulation: Modulation) -> T {
    let g = gamma.max(T::zero());
    let ser = match modulation {
        Modulation::Qpsk => {
            let e = (g * T::lit(0.5)).sqrt().erfc();
            e - e * e * T::lit(0.25)
        }
        Modulation::Qam16 => {
            // 1 - (1 - 1.5 Q(sqrt(γ/5)))^2 with Q(x) = erfc(x/√2)/2.
            let p = T::lit(0.75) * (g * T::lit(0.1)).sqrt().erfc();
            T::one() - (T::one() - p) * (T::one() - p)
        }
    };
    let lo = T::lit(SER_FLOOR);
    ser.max(lo).min(T::one() - lo)
}

#[inline]
fn div<T: Real>(num: T, den: T) -> T {
    num / den.max(T::lit(DENOM_FLOOR))
}

/// `log2(1 + γ)` guarded against negative inputs.
pub fn mutual_information<T: Real>(gamma: T) -> T {
    gamma.max(T::zero()).ln_1p() / T::LN_2()
}

/// SINR of stream 1 at the relay, decoded first with stream 2 as interference.
pub fn sinr_stream1_sr<T: Real>(g: &StreamGains<T>, n0: T) -> T {
    div(g.l_sr1, g.l_sr2 + n0)
}

/// SINR of stream 2 at the relay after cancelling stream 1, with residual
/// `4ε_R λ_SR1` when stream 1 was decoded in error.
pub fn sinr_stream2_sr<T: Real>(g: &StreamGains<T>, n0: T, eps_r: T, stream1_correct: bool) -> T {
    if stream1_correct {
        div(g.l_sr2, n0)
    } else {
        div(g.l_sr2, T::lit(4.0) * eps_r * g.l_sr1 + n0)
    }
}

pub fn mi_stream1_sr<T: Real>(g: &StreamGains<T>, n0: T) -> T {
    mutual_information(sinr_stream1_sr(g, n0))
}

pub fn mi_stream2_sr<T: Real>(g: &StreamGains<T>, n0: T, eps_r: T, stream1_correct: bool) -> T {
    mutual_information(sinr_stream2_sr(g, n0, eps_r, stream1_correct))
}

/// What the relay decoded under partial decode-and-forward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PdfCase {
    /// Stream 1 decoded; the relay forwards stream 1.
    A1,
    /// Stream 1 failed, stream 2 decoded; the relay forwards stream 2.
    A2,
    /// Nothing decoded; the relay stays silent.
    A3,
}

impl PdfCase {
    pub const ALL: [PdfCase; 3] = [PdfCase::A1, PdfCase::A2, PdfCase::A3];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Link-level constants shared by all indicators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkParams<T> {
    pub n0: T,
    pub d_thresh: T,
    pub ser: SerModel<T>,
}

/// `D = 2^{L/T} - 1`.
pub fn decoding_threshold<T: Real>(l_bits: u32, t_symbols: u32) -> T {
    T::lit((f64::from(l_bits) / f64::from(t_symbols)).exp2() - 1.0)
}

/// Classifies the relay's decoding outcome. Also returns the SER of the
/// relay's stream-1 decision, which enters the stream-2 test.
pub fn classify_pdf_case<T: Real>(g: &StreamGains<T>, n0: T, d_thresh: T, ser: &SerModel<T>) -> (PdfCase, T) {
    let gamma1 = sinr_stream1_sr(g, n0);
    let eps_r = ser.eval(gamma1);
    if gamma1 >= d_thresh {
        (PdfCase::A1, eps_r)
    } else if sinr_stream2_sr(g, n0, eps_r, false) >= d_thresh {
        (PdfCase::A2, eps_r)
    } else {
        (PdfCase::A3, eps_r)
    }
}

/// Per-stream outage flags `(stream 1, stream 2)`.
pub type Outage = (bool, bool);

/// Coherent combining of the direct branch `a` with a relayed branch `b`
/// against interference-plus-noise `den`; the destination falls back to the
/// direct-only SINR `direct` when that is better.
#[inline]
fn combine<T: Real>(a: T, b: T, den: T, direct: T) -> T {
    let s = a.sqrt() + b.sqrt();
    div(s * s, den).max(direct)
}

/// Direct link only: decode stream 1 against stream 2, cancel, decode stream 2.
fn direct_only<T: Real>(g: &StreamGains<T>, p: &LinkParams<T>) -> Outage {
    let gamma1 = div(g.l_sd1, g.l_sd2 + p.n0);
    let out1 = gamma1 < p.d_thresh;
    let gamma2 = if out1 {
        div(g.l_sd2, T::lit(4.0) * p.ser.eval(gamma1) * g.l_sd1 + p.n0)
    } else {
        div(g.l_sd2, p.n0)
    };
    (out1, gamma2 < p.d_thresh)
}

/// The destination decodes the cooperative stream (gains `coop`, `other` on
/// the direct link) first, combining the relay's copy, then the regular
/// payload stream from the direct link. `extra` is added interference on the
/// combined cooperative stream. Returns `(coop out, regular out)`.
fn cooperative<T: Real>(coop: T, other: T, l_rd: T, extra: T, p: &LinkParams<T>) -> Outage {
    let two = T::lit(2.0);
    let direct = div(coop, other + p.n0);
    let gamma_c = combine(coop, l_rd, other + extra + two * p.n0, direct);
    let coop_out = gamma_c < p.d_thresh;
    let gamma_r = if coop_out {
        div(other, T::lit(4.0) * p.ser.eval(gamma_c) * coop + p.n0)
    } else {
        div(other, p.n0)
    };
    (coop_out, gamma_r < p.d_thresh)
}

fn pdf_with_extra<T: Real>(case: PdfCase, g: &StreamGains<T>, p: &LinkParams<T>, extra_scale: T) -> Outage {
    match case {
        PdfCase::A1 => cooperative(g.l_sd1, g.l_sd2, g.l_rd, extra_scale * g.l_sd2, p),
        PdfCase::A2 => {
            let (o2, o1) = cooperative(g.l_sd2, g.l_sd1, g.l_rd, extra_scale * g.l_sd1, p);
            (o1, o2)
        }
        PdfCase::A3 => direct_only(g, p),
    }
}

/// Partial decode-and-forward: the relay forwards the single stream it
/// decoded (A1: stream 1, A2: stream 2) in the cooperative phase.
pub fn pdf_outage_indicators<T: Real>(case: PdfCase, g: &StreamGains<T>, p: &LinkParams<T>) -> Outage {
    pdf_with_extra(case, g, p, T::zero())
}

/// PDF where the source also repeats its transmission in the cooperative
/// phase, so the non-cooperative stream interferes with the combined stream
/// in both phases.
pub fn pdf_nonorthogonal_outage_indicators<T: Real>(g: &StreamGains<T>, p: &LinkParams<T>) -> Outage {
    let (case, _) = classify_pdf_case(g, p.n0, p.d_thresh, &p.ser);
    pdf_with_extra(case, g, p, T::one())
}

/// Whether a full decode-and-forward relay decodes both streams.
pub fn df_relay_decodes<T: Real>(g: &StreamGains<T>, p: &LinkParams<T>) -> bool {
    sinr_stream1_sr(g, p.n0) >= p.d_thresh && sinr_stream2_sr(g, p.n0, T::zero(), true) >= p.d_thresh
}

/// Decode-and-forward: the relay forwards both streams only if it decoded
/// both, splitting its power evenly between them; otherwise the destination
/// has the direct link alone.
pub fn df_outage_indicators<T: Real>(g: &StreamGains<T>, p: &LinkParams<T>) -> Outage {
    if !df_relay_decodes(g, p) {
        return direct_only(g, p);
    }
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let half_rd = g.l_rd / two;
    let direct1 = div(g.l_sd1, g.l_sd2 + p.n0);
    let gamma1 = combine(g.l_sd1, half_rd, g.l_sd2 + half_rd + two * p.n0, direct1);
    let out1 = gamma1 < p.d_thresh;
    let gamma2 = if out1 {
        let eps = p.ser.eval(gamma1);
        let direct2 = div(g.l_sd2, four * eps * g.l_sd1 + p.n0);
        combine(g.l_sd2, half_rd, four * eps * (g.l_sd1 + half_rd) + two * p.n0, direct2)
    } else {
        combine(g.l_sd2, half_rd, two * p.n0, div(g.l_sd2, p.n0))
    };
    (out1, gamma2 < p.d_thresh)
}

/// Amplify-and-forward end-to-end SNR of a two-hop cascade,
/// `γ_sr γ_rd / (γ_sr + γ_rd + 1)`.
pub fn af_cascade<T: Real>(gamma_sr: T, gamma_rd: T) -> T {
    if gamma_sr.is_infinite() {
        return gamma_rd;
    }
    if gamma_rd.is_infinite() {
        return gamma_sr;
    }
    div(gamma_sr * gamma_rd, gamma_sr + gamma_rd + T::one())
}

/// SNR of one stream on the relayed branch of an amplify-and-forward relay
/// that scales its whole received signal (both streams plus noise) to its
/// power budget. `residual` is the interference left on that stream after
/// the destination's cancellation.
fn af_branch<T: Real>(g: &StreamGains<T>, l_sig: T, residual: T, n0: T) -> T {
    let gamma_rd = div(g.l_rd, n0);
    let total = g.l_sr1 + g.l_sr2 + n0;
    if gamma_rd.is_infinite() {
        return div(l_sig, residual + n0);
    }
    div(gamma_rd * l_sig, gamma_rd * (residual + n0) + total)
}

/// Amplify-and-forward: the relay cannot separate the streams, so each
/// relayed branch carries the other stream as interference until the
/// destination cancels it. With no cancellation the branch SNR of stream 1
/// equals [`af_cascade`] of its relay SINR and the RD SNR.
pub fn af_outage_indicators<T: Real>(g: &StreamGains<T>, p: &LinkParams<T>) -> Outage {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let b1 = p.n0 * af_branch(g, g.l_sr1, g.l_sr2, p.n0);
    let direct1 = div(g.l_sd1, g.l_sd2 + p.n0);
    let gamma1 = combine(g.l_sd1, b1, g.l_sd2 + two * p.n0, direct1);
    let out1 = gamma1 < p.d_thresh;
    let eps = if out1 { p.ser.eval(gamma1) } else { T::zero() };
    let b2 = p.n0 * af_branch(g, g.l_sr2, four * eps * g.l_sr1, p.n0);
    let residual = four * eps * g.l_sd1;
    let gamma2 = combine(g.l_sd2, b2, residual + two * p.n0, div(g.l_sd2, residual + p.n0));
    (out1, gamma2 < p.d_thresh)
}

/// No relay: direct link only.
pub fn no_relay_outage_indicators<T: Real>(g: &StreamGains<T>, p: &LinkParams<T>) -> Outage {
    direct_only(g, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Pdf,
    Df,
    Af,
    NoRelay,
    PdfNonOrthogonal,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::Pdf,
        ProtocolKind::Df,
        ProtocolKind::Af,
        ProtocolKind::NoRelay,
        ProtocolKind::PdfNonOrthogonal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Pdf => "pdf",
            ProtocolKind::Df => "df",
            ProtocolKind::Af => "af",
            ProtocolKind::NoRelay => "no_relay",
            ProtocolKind::PdfNonOrthogonal => "pdf_non_orthogonal",
        }
    }

    /// Relay decoding case and destination outage flags for one realization.
    /// The case always describes the relay's PDF decoding state on the SR
    /// link, whichever protocol runs at the destination.
    #[inline]
    pub fn evaluate<T: Real>(self, g: &StreamGains<T>, p: &LinkParams<T>) -> (PdfCase, Outage) {
        let (case, _) = classify_pdf_case(g, p.n0, p.d_thresh, &p.ser);
        let out = match self {
            ProtocolKind::Pdf => pdf_outage_indicators(case, g, p),
            ProtocolKind::PdfNonOrthogonal => pdf_with_extra(case, g, p, T::one()),
            ProtocolKind::Df => df_outage_indicators(g, p),
            ProtocolKind::Af => af_outage_indicators(g, p),
            ProtocolKind::NoRelay => no_relay_outage_indicators(g, p),
        };
        (case, out)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ProtocolKind::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| Error::invalid("protocol", format!("unknown protocol `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{trial_rng, Antennas, ChannelModel, Topology};
    use crate::mathcore::Matrix;
    use crate::precoder::{PowerSplit, PrecoderScaling, PrecoderShape, StreamSplit};
    use rand::Rng;

    fn params(n0: f64) -> LinkParams<f64> {
        LinkParams {
            n0,
            d_thresh: 1.0,
            ser: SerModel::from_sinr(Modulation::Qpsk),
        }
    }

    fn gains(l_sr1: f64, l_sr2: f64, l_rd: f64, l_sd1: f64, l_sd2: f64) -> StreamGains<f64> {
        StreamGains { l_sr1, l_sr2, l_rd, l_sd1, l_sd2 }
    }

    fn random_gains(rng: &mut impl Rng) -> StreamGains<f64> {
        let mut e = || -rng.random::<f64>().ln() * 10f64.powf(rng.random_range(-1.0..1.5));
        gains(e(), e(), e(), e(), e())
    }

    fn default_pair() -> (ChannelModel<f64>, crate::precoder::PrecoderPair<f64>) {
        let model = ChannelModel::new(Antennas { n_s: 4, n_r: 2, n_d: 2 }, &Topology::default(), 0.5, 0.5, 0.5).unwrap();
        let shape = PrecoderShape::statistical(&model.sr.xi_t(), &model.rd.xi_t(), 2).unwrap();
        let pair = shape.assemble(PrecoderScaling {
            split: PowerSplit::new(0.6, 0.4).unwrap(),
            stream_split: StreamSplit::new(0.55).unwrap(),
        });
        (model, pair)
    }

    #[test]
    fn effective_gains_examples() {
        let (model, pair) = default_pair();
        let ch = model.sample_realization(&mut trial_rng(1, 0)).unwrap();

        let zero_src = crate::precoder::PrecoderPair { p_s: Matrix::zeros(4, 4), ..pair.clone() };
        let g = effective_gains(&ch, &zero_src, 2).unwrap();
        assert_eq!((g.l_sr1, g.l_sr2, g.l_sd1, g.l_sd2), (0.0, 0.0, 0.0, 0.0));

        let ident = ChannelRealization {
            h_sd: Matrix::identity(4),
            h_sr: Matrix::identity(4),
            h_rd: Matrix::identity(2),
        };
        let ip = crate::precoder::PrecoderPair { p_s: Matrix::identity(4), p_r: Matrix::identity(2), ..pair.clone() };
        let g = effective_gains(&ident, &ip, 1).unwrap();
        assert_eq!((g.l_sr1, g.l_sr2, g.l_rd, g.l_sd1, g.l_sd2), (1.0, 3.0, 2.0, 1.0, 3.0));

        // Independent recomputation entry by entry.
        let g = effective_gains(&ch, &pair, 2).unwrap();
        let norm = |h: &Matrix<f64>, p: &Matrix<f64>, cols: std::ops::Range<usize>| {
            let mut acc = 0.0;
            for i in 0..h.rows() {
                for j in cols.clone() {
                    let z: num_complex::Complex<f64> = (0..h.cols()).map(|k| h[(i, k)] * p[(k, j)]).sum();
                    acc += z.norm_sqr();
                }
            }
            acc
        };
        assert!((g.l_sr1 - norm(&ch.h_sr, &pair.p_s, 0..2)).abs() <= 1e-12 * g.l_sr1);
        assert!((g.l_sd2 - norm(&ch.h_sd, &pair.p_s, 2..4)).abs() <= 1e-12 * g.l_sd2);
        assert!((g.l_rd - norm(&ch.h_rd, &pair.p_r, 0..2)).abs() <= 1e-12 * g.l_rd);
        assert!(effective_gains(&ch, &pair, 5).is_err());
    }

    #[test]
    fn ser_examples() {
        assert!((ser_from_sinr(0.0, Modulation::Qpsk) - 0.75f64).abs() < 1e-15);
        assert_eq!(ser_from_sinr(1e6, Modulation::Qpsk), 1e-12);
        assert!((ser_from_sinr(0.0, Modulation::Qam16) - 0.9375f64).abs() < 1e-15);
        assert_eq!(ser_from_sinr(1e6, Modulation::Qam16), 1e-12);
    }

    /// Q(x) by Simpson's rule on the Gaussian density.
    fn q_numeric(x: f64) -> f64 {
        let upper = x + 40.0;
        let n = 200_000;
        let h = (upper - x) / n as f64;
        let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = phi(x) + phi(upper);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * phi(x + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn ser_matches_gaussian_tail_quadrature() {
        let q = q_numeric(2.0); // sqrt(γ) with γ = 4
        let qpsk = 2.0 * q - q * q;
        assert!((ser_from_sinr(4.0, Modulation::Qpsk) - qpsk).abs() < 1e-6);
        let q = q_numeric((10.0f64 / 5.0).sqrt());
        let qam = 1.0 - (1.0 - 1.5 * q).powi(2);
        assert!((ser_from_sinr(10.0, Modulation::Qam16) - qam).abs() < 1e-6);
    }

    #[test]
    fn ser_is_decreasing() {
        for m in [Modulation::Qpsk, Modulation::Qam16] {
            let mut prev = 1.0;
            for i in 0..200 {
                let s = ser_from_sinr(i as f64 * 0.25, m);
                assert!(s <= prev);
                prev = s;
            }
        }
    }

    #[test]
    fn mutual_information_examples() {
        assert_eq!(mi_stream1_sr(&gains(0.0, 1.0, 0.0, 0.0, 0.0), 1.0), 0.0);
        assert!((mi_stream1_sr(&gains(3.0, 0.0, 0.0, 0.0, 0.0), 1.0) - 2.0).abs() < 1e-15);
        let g = gains(1.0, 1.0, 0.0, 0.0, 0.0);
        assert!((mi_stream2_sr(&g, 1.0, 0.25, false) - 1.5f64.log2()).abs() < 1e-15);
        assert!((mi_stream2_sr(&g, 1.0, 0.25, true) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_matches_formula_on_random_gains() {
        let mut rng = trial_rng(12, 0);
        for _ in 0..1000 {
            let g = random_gains(&mut rng);
            let n0 = rng.random_range(0.01..5.0);
            let eps = rng.random_range(1e-6..0.75);
            assert!((mi_stream1_sr(&g, n0) - (1.0 + g.l_sr1 / (g.l_sr2 + n0)).log2()).abs() < 1e-12);
            let want = (1.0 + g.l_sr2 / (4.0 * eps * g.l_sr1 + n0)).log2();
            assert!((mi_stream2_sr(&g, n0, eps, false) - want).abs() < 1e-12);
            let all = [
                mi_stream1_sr(&g, n0),
                mi_stream2_sr(&g, n0, eps, false),
                mi_stream2_sr(&g, n0, eps, true),
            ];
            assert!(all.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn epsilon_limit_consistency() {
        let mut rng = trial_rng(13, 0);
        for _ in 0..1000 {
            let g = random_gains(&mut rng);
            let a = sinr_stream2_sr(&g, 0.5, 1e-12, false);
            let b = sinr_stream2_sr(&g, 0.5, 0.3, true);
            assert!((a - b).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn classify_examples() {
        let ser = SerModel::from_sinr(Modulation::Qpsk);
        assert_eq!(classify_pdf_case(&gains(3.0, 1.0, 0.0, 0.0, 0.0), 1.0, 1.0, &ser).0, PdfCase::A1);
        assert_eq!(classify_pdf_case(&gains(1.0, 10.0, 0.0, 0.0, 0.0), 1.0, 1.0, &ser).0, PdfCase::A2);
        assert_eq!(classify_pdf_case(&gains(0.0, 0.0, 0.0, 0.0, 0.0), 1.0, 1.0, &ser).0, PdfCase::A3);
        // The A1 boundary is exactly λ1 / (λ2 + N0) = D.
        assert_eq!(classify_pdf_case(&gains(2.0, 1.0, 0.0, 0.0, 0.0), 1.0, 1.0, &ser).0, PdfCase::A1);
    }

    #[test]
    fn a2_test_uses_relay_ser() {
        // γ1 = 0.5; ε_R = 0.1 (fixed) gives γ2 = 2 / 1.2, ε_R = 0.6 gives 2 / 3.4.
        let g = gains(1.0, 2.0, 0.0, 0.0, 0.0);
        let lo = SerModel::fixed(Modulation::Qpsk, 0.1).unwrap();
        let hi = SerModel::fixed(Modulation::Qpsk, 0.6).unwrap();
        assert_eq!(classify_pdf_case(&g, 1.0, 1.0, &lo), (PdfCase::A2, 0.1));
        assert_eq!(classify_pdf_case(&g, 1.0, 1.0, &hi), (PdfCase::A3, 0.6));
    }

    #[test]
    fn pdf_limits() {
        let p = params(1.0);
        let g = gains(5.0, 1.0, 1e12, 0.1, 0.1);
        assert!(!pdf_outage_indicators(PdfCase::A1, &g, &p).0);
        assert!(!pdf_outage_indicators(PdfCase::A2, &g, &p).1);
        let z = gains(1.0, 1.0, 1.0, 0.0, 0.0);
        assert_eq!(pdf_outage_indicators(PdfCase::A3, &z, &p), (true, true));
        let tiny_d = LinkParams { d_thresh: 1e-30, ..params(1.0) };
        let g = gains(1.0, 1.0, 1.0, 1.0, 1.0);
        for case in PdfCase::ALL {
            assert_eq!(pdf_outage_indicators(case, &g, &tiny_d), (false, false));
        }
    }

    #[test]
    fn pdf_case_formulas() {
        let p = params(1.0);
        // A1: (√2 + √2)^2 / (1 + 2) = 8/3 ≥ 1, then stream 2 sees 1/1.
        let g = gains(0.0, 0.0, 2.0, 2.0, 1.0);
        assert_eq!(pdf_outage_indicators(PdfCase::A1, &g, &p), (false, false));
        // A1 with stream 2 too weak after correct cancellation.
        let g = gains(0.0, 0.0, 2.0, 2.0, 0.5);
        assert_eq!(pdf_outage_indicators(PdfCase::A1, &g, &p), (false, true));
        // A3 direct: 0.5 / 1.5 < 1 so stream 1 fails; stream 2 1/(4ε·0.5+1) < 1.
        let g = gains(0.0, 0.0, 0.0, 0.5, 1.0);
        assert_eq!(pdf_outage_indicators(PdfCase::A3, &g, &p), (true, true));
    }

    #[test]
    fn combining_never_hurts() {
        let mut rng = trial_rng(21, 0);
        for _ in 0..20_000 {
            let g = random_gains(&mut rng);
            let p = params(rng.random_range(0.1..3.0));
            let (d1, _) = direct_only(&g, &p);
            let (c1, _) = pdf_outage_indicators(PdfCase::A1, &g, &p);
            let (_, c2) = pdf_outage_indicators(PdfCase::A2, &g, &p);
            let direct_coop2 = div(g.l_sd2, g.l_sd1 + p.n0) < p.d_thresh;
            if !d1 {
                assert!(!c1);
            }
            if !direct_coop2 {
                assert!(!c2);
            }
        }
    }

    #[test]
    fn no_relay_equals_case_a3() {
        let mut rng = trial_rng(22, 0);
        for _ in 0..1000 {
            let g = random_gains(&mut rng);
            let p = params(1.0);
            assert_eq!(no_relay_outage_indicators(&g, &p), pdf_outage_indicators(PdfCase::A3, &g, &p));
        }
    }

    #[test]
    fn rd_link_off_reduces_to_direct() {
        let mut rng = trial_rng(23, 0);
        for _ in 0..2000 {
            let mut g = random_gains(&mut rng);
            g.l_rd = 0.0;
            let p = params(1.0);
            assert_eq!(af_outage_indicators(&g, &p), direct_only(&g, &p));
            assert_eq!(df_outage_indicators(&g, &p).0, direct_only(&g, &p).0);
        }
    }

    #[test]
    fn af_cascade_properties() {
        assert_eq!(af_cascade(f64::INFINITY, 3.0), 3.0);
        assert!((af_cascade(1e15f64, 3.0) - 3.0).abs() < 1e-9);
        let mut rng = trial_rng(24, 0);
        for _ in 0..10_000 {
            let a = 10f64.powf(rng.random_range(-3.0..4.0));
            let b = 10f64.powf(rng.random_range(-3.0..4.0));
            assert!(af_cascade(a, b) <= a.min(b));
        }
    }

    #[test]
    fn af_branch_matches_cascade() {
        let mut rng = trial_rng(26, 0);
        for _ in 0..2000 {
            let g = random_gains(&mut rng);
            let n0 = 10f64.powf(rng.random_range(-2.0..1.0));
            let b1 = af_branch(&g, g.l_sr1, g.l_sr2, n0);
            let oracle = af_cascade(sinr_stream1_sr(&g, n0), g.l_rd / n0);
            assert!((b1 - oracle).abs() <= 1e-12 * oracle.max(1.0), "{b1} vs {oracle}");
            // Relay power spent on stream 1 is not available to stream 2.
            let b2 = af_branch(&g, g.l_sr2, 0.0, n0);
            assert!(b2 <= af_cascade(g.l_sr2 / n0, g.l_rd / n0) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn df_limits() {
        let p = params(1.0);
        // Stream 1 is decoded against stream-2 interference, so it must dominate.
        let g = gains(1000.0, 100.0, 1e12, 0.01, 0.01);
        assert!(df_relay_decodes(&g, &p));
        assert_eq!(df_outage_indicators(&g, &p), (false, false));
        let tiny_d = LinkParams { d_thresh: 1e-30, ..params(1.0) };
        assert_eq!(df_outage_indicators(&gains(1.0, 1.0, 1.0, 1.0, 1.0), &tiny_d), (false, false));
    }

    #[test]
    fn nonorthogonal_limits() {
        let p = params(1.0);
        let mut rng = trial_rng(25, 0);
        for _ in 0..2000 {
            let mut g = random_gains(&mut rng);
            let (case, _) = classify_pdf_case(&g, p.n0, p.d_thresh, &p.ser);
            match case {
                PdfCase::A1 => g.l_sd2 = 0.0,
                PdfCase::A2 => g.l_sd1 = 0.0,
                PdfCase::A3 => {}
            }
            assert_eq!(pdf_nonorthogonal_outage_indicators(&g, &p), pdf_outage_indicators(case, &g, &p));
        }
        let g = gains(5.0, 1.0, 1e12, 0.1, 0.1);
        assert!(!pdf_nonorthogonal_outage_indicators(&g, &p).0);
    }

    #[test]
    fn protocol_names_round_trip() {
        for p in ProtocolKind::ALL {
            assert_eq!(p.name().parse::<ProtocolKind>().unwrap(), p);
        }
        assert_eq!("NO-RELAY".parse::<ProtocolKind>().unwrap(), ProtocolKind::NoRelay);
        assert!("xyz".parse::<ProtocolKind>().is_err());
    }

    #[test]
    fn threshold_of_default_rate() {
        assert_eq!(decoding_threshold::<f64>(96, 96), 1.0);
        assert!((decoding_threshold::<f64>(192, 96) - 3.0).abs() < 1e-15);
    }
}
