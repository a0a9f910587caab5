//! Rendering run reports.

use std::fmt::Write;

use sdfw_core::simnet::MetricsReport;

/// Pretty JSON with a trailing newline. Every map in the report is ordered,
/// so equal reports render to equal bytes.
pub fn to_json(report: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports always serialise");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> serde_json::Result<MetricsReport> {
    serde_json::from_str(text)
}

/// Short human-readable run summary.
pub fn summary(r: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "scenario {} (seed {}, sdfw {})",
        r.scenario,
        r.seed,
        if r.sdfw_enabled { "on" } else { "off" }
    );
    let _ = writeln!(
        s,
        "pairs {}  goodput {}  latency {}",
        r.pairs.len(),
        gbps(r.mean_goodput_bps),
        ms(r.mean_latency_s)
    );
    match r.detection_time_s {
        Some(t) => {
            let _ = writeln!(s, "detection after {t:.3} s");
        }
        None => s.push_str("no detection\n"),
    }
    for d in &r.decisions {
        let _ = writeln!(s, "decision {d}");
    }
    for m in &r.mitigations {
        let _ = writeln!(s, "mitigation {}", m.flow_mod);
    }
    let c = &r.conservation;
    let _ = writeln!(
        s,
        "packets injected {} delivered {} rule-drop {} mitigated {} throttled {} to-controller {} overflow {} unroutable {} in-flight {}",
        c.injected,
        c.delivered,
        c.dropped_by_rule,
        c.dropped_by_mitigation,
        c.throttled_miss,
        c.to_controller,
        c.lost_to_queue_overflow,
        c.unroutable,
        c.in_flight_at_end
    );
    s
}

fn gbps(bps: f64) -> String {
    format!("{:.3} Gb/s", bps / 1e9)
}

fn ms(s: f64) -> String {
    format!("{:.3} ms", s * 1e3)
}

/// Goodput and latency of one fabric with and without the firewall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub hosts: usize,
    pub bw_off: f64,
    pub bw_on: f64,
    pub lat_off: f64,
    pub lat_on: f64,
}

impl ComparisonRow {
    pub fn from_runs(hosts: usize, off: &MetricsReport, on: &MetricsReport) -> Self {
        ComparisonRow {
            hosts,
            bw_off: off.mean_goodput_bps,
            bw_on: on.mean_goodput_bps,
            lat_off: off.mean_latency_s,
            lat_on: on.mean_latency_s,
        }
    }

    /// Relative goodput loss from enabling the firewall.
    pub fn goodput_degradation(&self) -> f64 {
        (self.bw_off - self.bw_on) / self.bw_off
    }

    /// Relative latency increase from enabling the firewall.
    pub fn latency_increase(&self) -> f64 {
        (self.lat_on - self.lat_off) / self.lat_off
    }
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let header = [
        "Hosts",
        "BW-No-SDFW",
        "BW-SDFW",
        "Latency-No-SDFW",
        "Latency-SDFW",
    ];
    let body: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.hosts.to_string(),
                gbps(r.bw_off),
                gbps(r.bw_on),
                ms(r.lat_off),
                ms(r.lat_on),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..5)
        .map(|i| {
            body.iter()
                .map(|r| r[i].len())
                .chain([header[i].len()])
                .max()
                .unwrap()
        })
        .collect();
    let line = |cells: [&str; 5]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        parts.join(" | ") + "\n"
    };
    let mut out = line(header);
    out.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("-|-"),
    );
    out.push('\n');
    for r in &body {
        out.push_str(&line([&r[0], &r[1], &r[2], &r[3], &r[4]]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let rows = [ComparisonRow {
            hosts: 100,
            bw_off: 2.5e8,
            bw_on: 2.0e8,
            lat_off: 0.008,
            lat_on: 0.0095,
        }];
        let t = comparison_table(&rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[0].split(" | ").map(str::trim).collect::<Vec<_>>(),
            [
                "Hosts",
                "BW-No-SDFW",
                "BW-SDFW",
                "Latency-No-SDFW",
                "Latency-SDFW"
            ]
        );
        assert!(lines[2].contains("0.250 Gb/s") && lines[2].contains("9.500 ms"));
        assert!((rows[0].goodput_degradation() - 0.2).abs() < 1e-12);
        assert!((rows[0].latency_increase() - 0.1875).abs() < 1e-12);
    }
}
