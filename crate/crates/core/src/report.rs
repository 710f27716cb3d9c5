//! Run reports (JSON Lines) and plot side outputs (CSV + SVG).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::curvature::Erratum;
use crate::error::Result;
use crate::spacetime::ModelDescriptor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_bytes(name: impl Into<String>, bytes: &[u8]) -> Self {
        let hash = Sha256::digest(bytes);
        let mut hex = String::with_capacity(64);
        for b in hash {
            write!(hex, "{b:02x}").unwrap();
        }
        Self { name: name.into(), sha256: hex }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    InputError,
    Guard,
    CheckFailed,
    TheoremViolation,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::InputError => 1,
            Outcome::Guard | Outcome::CheckFailed => 2,
            Outcome::TheoremViolation => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Status {
    pub outcome: Outcome,
    pub exit_code: i32,
    pub guard: Option<String>,
    pub message: Option<String>,
}

impl Status {
    pub fn ok() -> Self {
        Self::new(Outcome::Ok, None, None)
    }

    pub fn new(outcome: Outcome, guard: Option<String>, message: Option<String>) -> Self {
        Self { outcome, exit_code: outcome.exit_code(), guard, message }
    }
}

/// One line of a report file. Everything except `timings` is a function of
/// the arguments and seed.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub arguments: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub model: Option<ModelDescriptor>,
    pub bandlimit: Option<usize>,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub results: serde_json::Value,
    pub errata: Vec<Erratum>,
    pub status: Status,
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, arguments: Vec<String>) -> Self {
        Self {
            command: command.into(),
            arguments,
            inputs: Vec::new(),
            model: None,
            bandlimit: None,
            seed: None,
            tolerances: BTreeMap::new(),
            results: serde_json::Value::Null,
            errata: Vec::new(),
            status: Status::ok(),
            timings: BTreeMap::new(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Appends the report as one line.
    pub fn append_to(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "{}", self.to_json_line())?;
        Ok(())
    }
}

/// Named `(x, y)` series.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points }
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub markers: bool,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            series: Vec::new(),
            markers: false,
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn markers(mut self) -> Self {
        self.markers = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    /// Long-format table: `series,x,y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,x,y\n");
        for s in &self.series {
            for (x, y) in &s.points {
                writeln!(out, "{},{x:e},{y:e}", s.name).unwrap();
            }
        }
        out
    }

    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 420.0;
        const ML: f64 = 80.0;
        const MR: f64 = 20.0;
        const MT: f64 = 40.0;
        const MB: f64 = 60.0;
        const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
        let ty = |y: f64| if self.log_y { y.abs().max(1e-300).log10() } else { y };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (x, ty(y))))
            .filter(|p| p.1.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 <= 0.0 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 <= 1e-12 * y0.abs().max(1.0) {
            let pad = 0.5 * y0.abs().max(1e-12);
            y0 -= pad;
            y1 += pad;
        }
        let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
        let sy = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);
        let mut svg = String::new();
        writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#)
            .unwrap();
        writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="24" font-size="16" text-anchor="middle">{}</text>"#,
            W / 2.0,
            esc(&self.title)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - ML - MR,
            H - MT - MB
        )
        .unwrap();
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let ylab = if self.log_y { format!("1e{fy:.1}") } else { format!("{fy:.3e}") };
            writeln!(
                svg,
                r#"<text x="{:.1}" y="{}" font-size="11" text-anchor="middle">{fx:.3}</text>"#,
                sx(fx),
                H - MB + 16.0
            )
            .unwrap();
            writeln!(
                svg,
                r#"<text x="{}" y="{:.1}" font-size="11" text-anchor="end">{ylab}</text>"#,
                ML - 6.0,
                sy(fy) + 4.0
            )
            .unwrap();
        }
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 18.0,
            esc(&self.x_label)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="18" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.y_label)
        )
        .unwrap();
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let coords: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| (x, ty(y)))
                .filter(|p| p.1.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            if self.markers {
                for c in &coords {
                    let (cx, cy) = c.split_once(',').unwrap();
                    writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#).unwrap();
                }
            } else {
                writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                )
                .unwrap();
            }
            writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#,
                ML + 10.0,
                MT + 16.0 + 14.0 * i as f64,
                esc(&s.name)
            )
            .unwrap();
        }
        svg.push_str("</svg>\n");
        svg
    }

    /// Writes `<stem>.csv` and `<stem>.svg` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        std::fs::write(dir.join(format!("{stem}.svg")), self.to_svg())?;
        Ok(())
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_sha256() {
        let d = InputDigest::of_bytes("x", b"abc");
        assert_eq!(d.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Outcome::Ok.exit_code(), 0);
        assert_eq!(Outcome::InputError.exit_code(), 1);
        assert_eq!(Outcome::Guard.exit_code(), 2);
        assert_eq!(Outcome::CheckFailed.exit_code(), 2);
        assert_eq!(Outcome::TheoremViolation.exit_code(), 3);
    }

    #[test]
    fn report_field_order_is_stable() {
        let mut r = RunReport::new("mobius", vec!["--a".into(), "1,0".into()]);
        r.timings.insert("total".into(), 0.5);
        let line = r.to_json_line();
        let keys = [
            "\"command\"",
            "\"arguments\"",
            "\"inputs\"",
            "\"tolerances\"",
            "\"results\"",
            "\"status\"",
            "\"timings\"",
        ];
        let pos: Vec<usize> = keys.iter().map(|k| line.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn plots_render() {
        let p = Plot::new("spectrum", "index", "sigma")
            .log_y()
            .markers()
            .with(Series::new("s", vec![(0.0, 1.0), (1.0, 1e-3), (2.0, 1e-14)]));
        let svg = p.to_svg();
        assert!(svg.starts_with("<svg") && svg.contains("<circle"));
        assert_eq!(p.to_csv().lines().count(), 4);
        let flat = Plot::new("c", "x", "y").with(Series::new("c", vec![(0.0, 2.0), (1.0, 2.0)]));
        assert!(flat.to_svg().contains("polyline"));
    }
}
