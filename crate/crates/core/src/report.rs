//! CSV output and SNR-gain extraction.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::{self, Write};

use crate::config::{IntervalMethod, PrecoderMode};
use crate::outage::SweepRow;
use crate::protocol::ProtocolKind;

pub const CSV_HEADER: &str = "snr_db,protocol,mode,p_out_avg,p_out_s1,p_out_s2,pr_a1,pr_a2,pr_a3,std_err,trials,seed";

/// Outage rates below this are clamped before taking logarithms.
const LOG_FLOOR: f64 = 1e-300;

/// Writes the header and one line per row. Floats use Rust's shortest
/// round-trip formatting, so output is byte-stable.
pub fn write_csv<W: Write>(mut w: W, rows: &[SweepRow], seed: u64) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let e = &r.estimate;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.snr_db,
            r.protocol,
            r.mode,
            e.p_out_avg,
            e.p_out_stream[0],
            e.p_out_stream[1],
            e.case_prob[0],
            e.case_prob[1],
            e.case_prob[2],
            e.std_err,
            e.trials,
            seed
        )?;
    }
    Ok(())
}

/// `(snr_db, p_out_avg)` points of one curve, in sweep order.
pub fn curve(rows: &[SweepRow], protocol: ProtocolKind, mode: PrecoderMode) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.protocol == protocol && r.mode == mode)
        .map(|r| (r.snr_db, r.estimate.p_out_avg))
        .collect()
}

/// SNR at which `curve` first falls to `target`, interpolating `log10(p)`
/// linearly between swept points. A curve already at or below the target
/// at its first point crosses there. `None` if it never gets there.
pub fn crossing_snr(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let first = curve.first()?;
    if first.1 <= target {
        return Some(first.0);
    }
    let lt = target.log10();
    curve.windows(2).find_map(|w| {
        let ((x0, p0), (x1, p1)) = (w[0], w[1]);
        if p0 > target && p1 <= target {
            let (l0, l1) = (p0.max(LOG_FLOOR).log10(), p1.max(LOG_FLOOR).log10());
            Some(x0 + (x1 - x0) * (l0 - lt) / (l0 - l1))
        } else {
            None
        }
    })
}

/// SNR advantage of a reference curve over a baseline at a target outage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gain {
    /// Both curves cross the target.
    Exact(f64),
    /// The baseline never reaches the target within the sweep: the gain is
    /// at least the distance from the reference crossing to the last swept
    /// SNR.
    AtLeast(f64),
    /// The reference never reaches the target.
    Unavailable,
}

impl Gain {
    /// Value used for threshold checks: the exact gain or its lower bound.
    pub fn lower_bound(self) -> Option<f64> {
        match self {
            Gain::Exact(g) | Gain::AtLeast(g) => Some(g),
            Gain::Unavailable => None,
        }
    }
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gain::Exact(g) => write!(f, "{g:.2} dB"),
            Gain::AtLeast(g) => write!(f, ">= {g:.2} dB"),
            Gain::Unavailable => f.write_str("n/a"),
        }
    }
}

pub fn snr_gain(reference: &[(f64, f64)], baseline: &[(f64, f64)], target: f64) -> Gain {
    let Some(x_ref) = crossing_snr(reference, target) else {
        return Gain::Unavailable;
    };
    match crossing_snr(baseline, target) {
        Some(x_base) => Gain::Exact(x_base - x_ref),
        None => match baseline.last() {
            Some(&(x_last, _)) => Gain::AtLeast(x_last - x_ref),
            None => Gain::Unavailable,
        },
    }
}

/// Human-readable summary: per-curve crossings and intervals, PDF's gain
/// over each other protocol (same mode), and the proposed design's gain
/// over each other mode (same protocol).
pub fn summary(rows: &[SweepRow], target: f64, level: f64, method: IntervalMethod) -> String {
    let mut curves: BTreeMap<(ProtocolKind, PrecoderMode), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        curves.entry((r.protocol, r.mode)).or_default().push(r);
    }
    let mut out = String::new();
    let _ = writeln!(out, "Outage curves ({:.0}% intervals)", level * 100.0);
    let _ = writeln!(out, "{:<20} {:<12} {:>8} {:>12} {:>26} {:>8} {:>7}", "protocol", "mode", "snr_db", "p_out_avg", "interval", "alpha_r", "rho1");
    for ((p, m), rs) in &curves {
        for r in rs {
            let (lo, hi) = r.estimate.interval(level, method);
            let _ = writeln!(
                out,
                "{:<20} {:<12} {:>8.2} {:>12.4e} {:>26} {:>8.4} {:>7.4}",
                p.name(),
                m.name(),
                r.snr_db,
                r.estimate.p_out_avg,
                format!("[{lo:.3e}, {hi:.3e}]"),
                r.split.alpha_r,
                r.stream_split.rho1
            );
        }
    }

    let _ = writeln!(out, "\nSNR gain at outage {target:e}");
    let modes: Vec<PrecoderMode> = curves.keys().map(|k| k.1).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let protocols: Vec<ProtocolKind> = curves.keys().map(|k| k.0).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for &m in &modes {
        if !curves.contains_key(&(ProtocolKind::Pdf, m)) {
            continue;
        }
        let reference = curve(rows, ProtocolKind::Pdf, m);
        for &p in protocols.iter().filter(|&&p| p != ProtocolKind::Pdf) {
            if curves.contains_key(&(p, m)) {
                let g = snr_gain(&reference, &curve(rows, p, m), target);
                let _ = writeln!(out, "  pdf vs {:<20} [{}]: {}", p.name(), m.name(), g);
            }
        }
    }
    for &p in &protocols {
        if !curves.contains_key(&(p, PrecoderMode::Proposed)) {
            continue;
        }
        let reference = curve(rows, p, PrecoderMode::Proposed);
        for &m in modes.iter().filter(|&&m| m != PrecoderMode::Proposed) {
            if curves.contains_key(&(p, m)) {
                let g = snr_gain(&reference, &curve(rows, p, m), target);
                let _ = writeln!(out, "  proposed vs {:<12} [{}]: {}", m.name(), p.name(), g);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outage::{OutageEstimate, Tally};
    use crate::precoder::{PowerSplit, StreamSplit};

    #[test]
    fn synthetic_gain_is_six_db() {
        let a = [(0.0, 1e-1), (10.0, 1e-3)];
        let b = [(6.0, 1e-1), (16.0, 1e-3)];
        assert_eq!(crossing_snr(&a, 1e-2), Some(5.0));
        match snr_gain(&a, &b, 1e-2) {
            Gain::Exact(g) => assert!((g - 6.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn crossing_edge_cases() {
        assert_eq!(crossing_snr(&[], 1e-2), None);
        assert_eq!(crossing_snr(&[(0.0, 1e-3), (2.0, 1e-4)], 1e-2), Some(0.0));
        assert_eq!(crossing_snr(&[(0.0, 0.5), (2.0, 0.2)], 1e-2), None);
        // A zero-outage point still gives a finite crossing inside the interval.
        let x = crossing_snr(&[(0.0, 0.5), (2.0, 0.0)], 1e-2).unwrap();
        assert!(x > 0.0 && x < 2.0);
    }

    #[test]
    fn gain_lower_bound_when_baseline_floors() {
        let pdf = [(0.0, 1e-1), (10.0, 1e-3), (20.0, 1e-4)];
        let base = [(0.0, 2e-1), (10.0, 5e-2), (20.0, 3e-2)];
        assert_eq!(snr_gain(&pdf, &base, 1e-2), Gain::AtLeast(15.0));
        assert_eq!(snr_gain(&base, &pdf, 1e-2), Gain::Unavailable);
    }

    fn row(snr: f64, protocol: ProtocolKind, outs: u64) -> SweepRow {
        let mut t = Tally::default();
        for i in 0..100 {
            let o = i < outs;
            t.record(crate::protocol::PdfCase::A1, (o, o));
        }
        SweepRow {
            snr_db: snr,
            protocol,
            mode: PrecoderMode::Proposed,
            estimate: OutageEstimate::from(t),
            split: PowerSplit { alpha_s: 0.5, alpha_r: 0.5 },
            stream_split: StreamSplit { rho1: 0.5, rho2: 0.5 },
        }
    }

    #[test]
    fn csv_layout() {
        let rows = vec![row(0.0, ProtocolKind::Pdf, 10), row(2.5, ProtocolKind::NoRelay, 3)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, 7).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[..9].join(","), "0,pdf,proposed,0.1,0.1,0.1,1,0,0");
        assert_eq!(fields[10..].join(","), "100,7");
        let se: f64 = fields[9].parse().unwrap();
        assert!((se - (0.09f64 / 99.0).sqrt()).abs() < 1e-16);
        assert!(lines[2].starts_with("2.5,no_relay,proposed,0.03,"));
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 12));
    }

    #[test]
    fn summary_lists_gains() {
        let rows = vec![
            row(0.0, ProtocolKind::Pdf, 10),
            row(0.0, ProtocolKind::NoRelay, 50),
            row(10.0, ProtocolKind::Pdf, 0),
            row(10.0, ProtocolKind::NoRelay, 20),
        ];
        let s = summary(&rows, 1e-2, 0.95, IntervalMethod::Normal);
        assert!(s.contains("pdf vs no_relay"), "{s}");
        assert!(s.contains(">="), "{s}");
    }
}
