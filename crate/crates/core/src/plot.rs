//! Minimal SVG rendering of p_g against sweep time or τ on a log axis.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotAxis {
    TLz,
    Tau,
}

impl std::str::FromStr for PlotAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t_lz" => Ok(PlotAxis::TLz),
            "tau" => Ok(PlotAxis::Tau),
            _ => Err(Error::invalid(format!("unknown plot axis `{s}` (expected t_lz or tau)"))),
        }
    }
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COHERENT_SAMPLES: usize = 200;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

/// One polyline: a (method, operating point) series or a coherent-limit
/// reference curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub coherent_limit: bool,
}

fn x_of(axis: PlotAxis, r: &RunRecord) -> f64 {
    match axis {
        PlotAxis::TLz => r.t_lz,
        PlotAxis::Tau => r.tau,
    }
}

/// Groups records into series and adds the coherent-limit curves
/// 1 − exp(−πτ/2): one per operating point on the t_lz axis, a single
/// curve on the τ axis where all points share it.
pub fn build_series(records: &[RunRecord], axis: PlotAxis) -> Vec<Series> {
    let mut groups: BTreeMap<(String, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method.clone(), r.phi_x.to_bits())).or_default().push(r);
    }
    let mut out = Vec::new();
    // τ/t_lz is fixed per operating point for fixed endpoints.
    let mut tau_rate: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
    for ((method, phi_bits), rows) in &groups {
        let mut pts: Vec<(f64, f64)> = rows.iter().map(|r| (x_of(axis, r), r.p_g)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let phi_x = f64::from_bits(*phi_bits);
        out.push(Series { label: format!("{method} Φx={phi_x:.4}"), points: pts, coherent_limit: false });
        for r in rows {
            let entry = tau_rate.entry(*phi_bits).or_insert((r.tau / r.t_lz, f64::INFINITY, 0.0));
            entry.1 = entry.1.min(r.t_lz);
            entry.2 = entry.2.max(r.t_lz);
        }
    }
    let curve = |lo: f64, hi: f64, map: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> {
        let n = COHERENT_SAMPLES;
        (0..n)
            .map(|k| {
                let x = if hi > lo { lo * (hi / lo).powf(k as f64 / (n - 1) as f64) } else { lo };
                (x, 1.0 - (-PI * map(x) / 2.0).exp())
            })
            .collect()
    };
    match axis {
        PlotAxis::TLz => {
            for (phi_bits, (rate, lo, hi)) in &tau_rate {
                let phi_x = f64::from_bits(*phi_bits);
                out.push(Series {
                    label: format!("coherent limit Φx={phi_x:.4}"),
                    points: curve(*lo, *hi, &|t| rate * t),
                    coherent_limit: true,
                });
            }
        }
        PlotAxis::Tau => {
            let lo = records.iter().map(|r| r.tau).fold(f64::INFINITY, f64::min);
            let hi = records.iter().map(|r| r.tau).fold(0.0, f64::max);
            if lo > 0.0 && lo.is_finite() {
                out.push(Series {
                    label: "coherent limit".into(),
                    points: curve(lo, hi, &|tau| tau),
                    coherent_limit: true,
                });
            }
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series as a standalone SVG document.
pub fn render_svg(series: &[Series], axis: PlotAxis) -> Result<String> {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(|x| *x > 0.0);
    let (mut lo, mut hi) = xs.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !(lo.is_finite() && hi > 0.0) {
        return Err(Error::invalid("nothing to plot"));
    }
    if hi <= lo {
        lo /= 10.0;
        hi *= 10.0;
    }
    let (dlo, dhi) = (lo.log10().floor(), hi.log10().ceil());
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x.log10() - dlo) / (dhi - dlo) * pw;
    let py = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, LEFT + pw, TOP + ph, TOP);
    let _ = writeln!(s, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for d in dlo as i32..=dhi as i32 {
        let x = px(10f64.powi(d));
        let _ = writeln!(s, r#"<line class="tick" x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#, y0 + 20.0);
    }
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(s, r#"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#, x0 - 8.0, y + 4.0);
    }
    let xlabel = match axis {
        PlotAxis::TLz => "sweep time t_lz (ns)",
        PlotAxis::Tau => "dimensionless sweep time τ",
    };
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">ground-state probability p_g</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let mut color = 0;
    for (i, ser) in series.iter().enumerate() {
        let mut d = String::new();
        for (j, &(x, y)) in ser.points.iter().filter(|p| p.0 > 0.0).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if j == 0 { "M" } else { " L" }, px(x), py(y));
        }
        if d.is_empty() {
            continue;
        }
        let (class, stroke, dash) = if ser.coherent_limit {
            ("coherent", "#444444", r#" stroke-dasharray="6 4""#)
        } else {
            color += 1;
            ("series", PALETTE[(color - 1) % PALETTE.len()], "")
        };
        let _ = writeln!(
            s,
            r#"<path class="{class}" d="{d}" fill="none" stroke="{stroke}" stroke-width="1.5"{dash}><title>{}</title></path>"#,
            escape(&ser.label)
        );
        let ly = TOP + 14.0 * i as f64;
        if ly < HEIGHT - 10.0 {
            let lx = LEFT + pw + 15.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{stroke}" stroke-width="2"{dash}/>"#,
                lx + 20.0
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 25.0, ly + 4.0, escape(&ser.label));
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes an SVG panel of p_g against `axis`. An empty record set is
/// rejected before the file is created.
pub fn emit_plot(records: &[RunRecord], path: &Path, axis: PlotAxis) -> Result<()> {
    if records.is_empty() {
        return Err(Error::invalid("no records to plot"));
    }
    let svg = render_svg(&build_series(records, axis), axis)?;
    std::fs::write(path, svg)?;
    Ok(())
}
