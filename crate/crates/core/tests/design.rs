//! Power-split search, paired protocol comparisons and sweep behaviour on
//! the default topology.

use pdfrelay::config::{PrecoderMode, SimConfig};
use pdfrelay::outage::{GainBank, OutageEstimate, Simulator, Tally};
use pdfrelay::precoder::{master_power_split, Evaluation, PowerSplit, PrecoderScaling, StreamSplit};
use pdfrelay::protocol::{
    classify_pdf_case, df_outage_indicators, df_relay_decodes, pdf_nonorthogonal_outage_indicators, pdf_outage_indicators,
    LinkParams, PdfCase, ProtocolKind, StreamGains,
};

const TRIALS: u64 = 20_000;

fn simulator() -> Simulator<f64> {
    let mut cfg = SimConfig::default();
    cfg.sweep.trials = TRIALS;
    cfg.sweep.seed = 31;
    Simulator::new(&cfg).unwrap()
}

fn bank(sim: &Simulator<f64>) -> GainBank<f64> {
    GainBank::build(sim.model(), sim.shape(PrecoderMode::Proposed), TRIALS, 31, Some(sim.pool())).unwrap()
}

/// Outage of `protocol` over the bank, with every gain passed through `edit`.
fn outage_with(bank: &GainBank<f64>, s: &PrecoderScaling<f64>, link: &LinkParams<f64>, edit: impl Fn(&mut StreamGains<f64>)) -> OutageEstimate {
    let mut t = Tally::default();
    for i in 0..bank.trials() as usize {
        let mut g = bank.gains(i, s);
        edit(&mut g);
        let (case, out) = ProtocolKind::Pdf.evaluate(&g, link);
        t.record(case, out);
    }
    t.into()
}

/// Runs the master search for PDF at total power `p0` over a fixed link.
fn search(sim: &Simulator<f64>, bank: &GainBank<f64>, link: &LinkParams<f64>, p0: f64, relay_off: bool) -> (PowerSplit<f64>, OutageEstimate) {
    let scaling = |split: PowerSplit<f64>| PrecoderScaling { split, stream_split: sim.design_stream_split(split.alpha_s, link).unwrap() };
    let edit = |g: &mut StreamGains<f64>| {
        if relay_off {
            g.l_rd = 0.0;
        }
    };
    let result = master_power_split(p0, |split| {
        let e = outage_with(bank, &scaling(split), link, edit);
        Ok(Evaluation { outage: e.p_out_avg, std_err: e.std_err })
    })
    .unwrap();
    (result.split, outage_with(bank, &scaling(result.split), link, edit))
}

#[test]
fn disabled_relay_link_gets_no_power() {
    let sim = simulator();
    let bank = bank(&sim);
    let link = sim.link_params(10.0).unwrap();
    let (split, _) = search(&sim, &bank, &link, 1.0, true);
    assert!(split.alpha_r <= 2e-3, "alpha_r = {}", split.alpha_r);
}

#[test]
fn doubling_total_power_never_hurts() {
    let sim = simulator();
    let bank = bank(&sim);
    let link = sim.link_params(8.0).unwrap();
    let (_, one) = search(&sim, &bank, &link, 1.0, false);
    let (_, two) = search(&sim, &bank, &link, 2.0, false);
    assert!(two.p_out_avg <= one.p_out_avg + 2.0 * one.std_err.hypot(two.std_err), "{} vs {}", two.p_out_avg, one.p_out_avg);
}

#[test]
fn searched_split_beats_even_split() {
    let sim = simulator();
    let bank = bank(&sim);
    for snr in [6.0, 10.0, 14.0] {
        let link = sim.link_params(snr).unwrap();
        let (_, best) = search(&sim, &bank, &link, 1.0, false);
        let even = PowerSplit::even(1.0);
        let even_scaling = PrecoderScaling { split: even, stream_split: sim.design_stream_split(even.alpha_s, &link).unwrap() };
        let base = outage_with(&bank, &even_scaling, &link, |_| {});
        assert!(best.p_out_avg <= base.p_out_avg + 2.0 * best.std_err.hypot(base.std_err), "{snr} dB: {} vs {}", best.p_out_avg, base.p_out_avg);
    }
}

/// Paired per-realization gains at the disjoint design.
fn paired_gains(snr: f64) -> (Vec<StreamGains<f64>>, LinkParams<f64>) {
    let sim = simulator();
    let bank = bank(&sim);
    let link = sim.link_params(snr).unwrap();
    let s = PrecoderScaling { split: PowerSplit::even(1.0), stream_split: StreamSplit::even() };
    ((0..bank.trials() as usize).map(|i| bank.gains(i, &s)).collect(), link)
}

#[test]
fn partial_relaying_assists_more_often_than_full_relaying() {
    for snr in [4.0, 10.0, 16.0] {
        let (gains, link) = paired_gains(snr);
        let mut df_assists = 0;
        let mut pdf_assists = 0;
        let (mut df_out2, mut pdf_out2) = (0, 0);
        for g in &gains {
            let (case, _) = classify_pdf_case(g, link.n0, link.d_thresh, &link.ser);
            let df = df_relay_decodes(g, &link);
            // A full relay that decodes both streams is in case A1.
            assert!(!df || case == PdfCase::A1);
            df_assists += u64::from(df);
            pdf_assists += u64::from(case != PdfCase::A3);
            if case != PdfCase::A1 {
                df_out2 += u64::from(df_outage_indicators(g, &link).1);
                pdf_out2 += u64::from(pdf_outage_indicators(case, g, &link).1);
            }
        }
        assert!(df_assists < pdf_assists, "{snr} dB: {df_assists} vs {pdf_assists}");
        assert!(df_out2 >= pdf_out2, "{snr} dB: stream-2 outages {df_out2} vs {pdf_out2}");
    }
}

#[test]
fn non_orthogonal_relaying_is_worse_at_high_snr() {
    for snr in [16.0, 20.0, 24.0] {
        let (gains, link) = paired_gains(snr);
        let count = |o: (bool, bool)| u64::from(o.0) + u64::from(o.1);
        let (mut orth, mut non) = (0, 0);
        for g in &gains {
            let (case, _) = classify_pdf_case(g, link.n0, link.d_thresh, &link.ser);
            orth += count(pdf_outage_indicators(case, g, &link));
            non += count(pdf_nonorthogonal_outage_indicators(g, &link));
        }
        assert!(non >= orth, "{snr} dB: {non} vs {orth}");
    }
}

#[test]
fn outage_falls_with_snr() {
    let mut sim = simulator();
    let points: Vec<f64> = (0..=6).map(|i| 4.0 * i as f64).collect();
    let mut rows = sim.sweep(&points, &ProtocolKind::ALL, &[PrecoderMode::Proposed]).unwrap();
    rows.extend(sim.sweep(&points, &[ProtocolKind::Pdf], &[PrecoderMode::Disjoint, PrecoderMode::Nonadaptive]).unwrap());
    for p in ProtocolKind::ALL {
        for m in PrecoderMode::ALL {
            let curve: Vec<_> = rows.iter().filter(|r| r.protocol == p && r.mode == m).map(|r| &r.estimate).collect();
            for w in curve.windows(2) {
                let slack = 3.0 * w[0].std_err.hypot(w[1].std_err);
                assert!(w[1].p_out_avg <= w[0].p_out_avg + slack, "{p} {m}: {} then {}", w[0].p_out_avg, w[1].p_out_avg);
            }
        }
    }
}

#[test]
fn nonadaptive_design_splits_power_evenly() {
    let mut sim = simulator();
    let (scaling, _) = sim.design(10.0, ProtocolKind::Pdf, PrecoderMode::Nonadaptive).unwrap();
    let pair = sim.shape(PrecoderMode::Nonadaptive).assemble(scaling);
    assert!((pair.p_s.frobenius_norm_sq() - 0.5).abs() < 1e-12);
    assert!((pair.p_r.frobenius_norm_sq() - 0.5).abs() < 1e-12);
}

#[test]
fn relay_failure_dominates_outage_at_moderate_snr() {
    let mut sim = simulator();
    let mut shares = Vec::new();
    for snr in [14.0, 16.0] {
        let row = sim.run_point(snr, ProtocolKind::Pdf, PrecoderMode::Proposed).unwrap();
        shares.push((snr, row.estimate.a3_share()));
    }
    println!("share of PDF outage from trials where the relay decoded nothing: {shares:?}");
    assert!(shares.iter().all(|&(_, s)| s > 0.5), "{shares:?}");
}
