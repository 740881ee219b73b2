//! Minimal SVG line plots: markers per series, optional fitted lines, linear
//! or log10 axes.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw the points joined by a line rather than as markers.
    pub line: bool,
}

/// `y = c·x^slope` drawn across the x range of the plot.
pub struct FitLine {
    pub label: String,
    pub slope: f64,
    pub constant: f64,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub fits: Vec<FitLine>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, log_x: bool, log_y: bool) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x,
            log_y,
            series: Vec::new(),
            fits: Vec::new(),
        }
    }

    fn tx(&self, x: f64) -> f64 {
        if self.log_x {
            x.log10()
        } else {
            x
        }
    }

    fn ty(&self, y: f64) -> f64 {
        if self.log_y {
            y.log10()
        } else {
            y
        }
    }

    fn usable(&self, (x, y): (f64, f64)) -> bool {
        x.is_finite() && y.is_finite() && (!self.log_x || x > 0.0) && (!self.log_y || y > 0.0)
    }

    pub fn render(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|p| self.usable(*p))
            .map(|(x, y)| (self.tx(x), self.ty(y)))
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let (px, py) = (0.05 * (x1 - x0), 0.05 * (y1 - y0));
        let (x0, x1, y0, y1) = (x0 - px, x1 + px, y0 - py, y1 + py);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let xl = if self.log_x { format!("1e{xv:.2}") } else { format!("{xv:.3}") };
            let yl = if self.log_y { format!("1e{yv:.2}") } else { format!("{yv:.3e}") };
            let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/>"#, sx(xv), TOP + ph, TOP + ph + 5.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{xl}</text>"#, sx(xv), TOP + ph + 18.0);
            let _ = writeln!(s, r#"<line x1="{}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="black"/>"#, LEFT - 5.0, sy(yv), LEFT);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{yl}</text>"#, LEFT - 8.0, sy(yv) + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 10.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        let mut legend = 0usize;
        let mut add_legend = |s: &mut String, color: &str, label: &str, dashed: bool| {
            let y = TOP + 10.0 + 18.0 * legend as f64;
            let dash = if dashed { r#" stroke-dasharray="5,3""# } else { "" };
            let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#, W - RIGHT + 10.0, W - RIGHT + 30.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, W - RIGHT + 35.0, y + 4.0, escape(label));
            legend += 1;
        };

        for (i, ser) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let p: Vec<(f64, f64)> =
                ser.points.iter().copied().filter(|p| self.usable(*p)).map(|(x, y)| (sx(self.tx(x)), sy(self.ty(y)))).collect();
            if ser.line {
                let path: Vec<String> = p.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            } else {
                for (x, y) in &p {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                }
            }
            add_legend(&mut s, color, &ser.label, false);
        }
        for (i, fit) in self.fits.iter().enumerate() {
            let color = COLORS[(i + self.series.len()) % COLORS.len()];
            let n = 32;
            let path: Vec<String> = (0..=n)
                .filter_map(|k| {
                    let xt = x0 + (x1 - x0) * k as f64 / n as f64;
                    let x = if self.log_x { 10f64.powf(xt) } else { xt };
                    let y = fit.constant * x.powf(fit.slope);
                    self.usable((x, y)).then(|| (sx(xt), sy(self.ty(y))))
                })
                .filter(|(_, y)| *y >= TOP - 1.0 && *y <= TOP + ph + 1.0)
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="5,3" points="{}"/>"#, path.join(" "));
            add_legend(&mut s, color, &fit.label, true);
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let mut p = Plot::new("decay <test>", "tau", "|J|", true, true);
        p.series.push(Series { label: "data".into(), points: vec![(1.0, 1.0), (10.0, 0.1), (0.0, 1.0)], line: false });
        p.fits.push(FitLine { label: "fit".into(), slope: -1.0, constant: 1.0 });
        let s = p.render();
        assert!(s.starts_with("<svg "));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("decay &lt;test&gt;"));
        assert!(s.contains("stroke-dasharray"));
    }

    #[test]
    fn empty_plot_still_renders() {
        let s = Plot::new("empty", "x", "y", false, false).render();
        assert!(s.contains("</svg>"));
    }
}
