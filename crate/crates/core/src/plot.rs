//! SVG rendering of spectra and confusion matrices.

use std::fmt::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Spectrum;
use crate::metrics::ConfusionMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlotError {
    #[error("cannot plot an empty spectrum")]
    EmptySpectrum,
    #[error("overlay has {actual} points, spectrum has {expected}")]
    OverlayLength { expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Nyquist,
    Bode,
    #[default]
    Combined,
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

/// Linear map from a data box to a pixel box (y grows downwards).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Panel {
    fn new(x0: f64, y0: f64, xs: &[f64], ys: &[f64]) -> Self {
        let (xmin, xmax) = padded_range(xs);
        let (ymin, ymax) = padded_range(ys);
        Self {
            x0: x0 + MARGIN_L,
            y0: y0 + MARGIN_T,
            width: PANEL_W - MARGIN_L - MARGIN_R,
            height: PANEL_H - MARGIN_T - MARGIN_B,
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    pub fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let px = self.x0 + (x - self.xmin) / (self.xmax - self.xmin) * self.width;
        let py = self.y0 + self.height - (y - self.ymin) / (self.ymax - self.ymin) * self.height;
        (px, py)
    }

    fn frame(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, t, w, h) = (self.x0, self.y0, self.width, self.height);
        let _ = writeln!(
            out,
            r##"<rect x="{l:.2}" y="{t:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#444" stroke-width="1"/>"##
        );
        for k in 0..=4 {
            let fx = self.xmin + (self.xmax - self.xmin) * k as f64 / 4.0;
            let fy = self.ymin + (self.ymax - self.ymin) * k as f64 / 4.0;
            let (px, _) = self.project(fx, self.ymin);
            let (_, py) = self.project(self.xmin, fy);
            let _ = writeln!(
                out,
                r##"<text x="{px:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"##,
                t + h + 14.0,
                tick(fx)
            );
            let _ = writeln!(
                out,
                r##"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"##,
                l - 4.0,
                py + 3.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"##,
            l + w / 2.0,
            t - 10.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
            l + w / 2.0,
            t + h + 32.0,
            escape(xlabel)
        );
        let (yx, yy) = (l - 52.0, t + h / 2.0);
        let _ = writeln!(
            out,
            r##"<text x="{yx:.2}" y="{yy:.2}" font-size="11" text-anchor="middle" transform="rotate(-90 {yx:.2} {yy:.2})">{}</text>"##,
            escape(ylabel)
        );
    }

    fn markers(&self, out: &mut String, xs: &[f64], ys: &[f64]) {
        for (x, y) in xs.iter().zip(ys) {
            let (px, py) = self.project(*x, *y);
            let _ = writeln!(out, r##"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="#1f77b4"/>"##);
        }
    }

    fn line(&self, out: &mut String, xs: &[f64], ys: &[f64]) {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let (px, py) = self.project(*x, *y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.2"/>"##,
            pts.join(" ")
        );
    }
}

fn padded_range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    let pad = if span > 0.0 { 0.05 * span } else { lo.abs().max(1.0) * 0.5 };
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif">"##
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"##);
}

/// Nyquist panel (x = Re z, y = -Im z) placed with its top-left corner at
/// `(x0, y0)`. The data extent includes the overlay.
pub fn nyquist_panel(s: &Spectrum, overlay: Option<&[Complex<f64>]>, x0: f64, y0: f64) -> Panel {
    let mut xs = s.real();
    let mut ys: Vec<f64> = s.imag().iter().map(|v| -v).collect();
    if let Some(o) = overlay {
        xs.extend(o.iter().map(|z| z.re));
        ys.extend(o.iter().map(|z| -z.im));
    }
    Panel::new(x0, y0, &xs, &ys)
}

fn bode_series(freq: &[f64], z: &[Complex<f64>]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let lf = freq.iter().map(|f| f.log10()).collect();
    let mag = z.iter().map(|z| z.norm().log10()).collect();
    let phase = z.iter().map(|z| z.arg().to_degrees()).collect();
    (lf, mag, phase)
}

fn draw_nyquist(out: &mut String, s: &Spectrum, overlay: Option<&[Complex<f64>]>, x0: f64, y0: f64) {
    let p = nyquist_panel(s, overlay, x0, y0);
    p.frame(out, &title(s, "Nyquist"), "Re(Z) / Ohm", "-Im(Z) / Ohm");
    if let Some(o) = overlay {
        let xs: Vec<f64> = o.iter().map(|z| z.re).collect();
        let ys: Vec<f64> = o.iter().map(|z| -z.im).collect();
        p.line(out, &xs, &ys);
    }
    let ys: Vec<f64> = s.imag().iter().map(|v| -v).collect();
    p.markers(out, &s.real(), &ys);
}

fn draw_bode(out: &mut String, s: &Spectrum, overlay: Option<&[Complex<f64>]>, x0: f64, y0: f64) {
    let (lf, mag, phase) = bode_series(s.freq(), s.z());
    let over = overlay.map(|o| bode_series(s.freq(), o));
    let extend = |base: &[f64], extra: Option<&Vec<f64>>| {
        let mut v = base.to_vec();
        if let Some(e) = extra {
            v.extend(e);
        }
        v
    };
    let pm = Panel::new(x0, y0, &lf, &extend(&mag, over.as_ref().map(|o| &o.1)));
    pm.frame(out, &title(s, "Bode magnitude"), "log10(f / Hz)", "log10(|Z| / Ohm)");
    let pp = Panel::new(x0, y0 + PANEL_H, &lf, &extend(&phase, over.as_ref().map(|o| &o.2)));
    pp.frame(out, "Bode phase", "log10(f / Hz)", "phase / deg");
    if let Some((_, m, ph)) = &over {
        pm.line(out, &lf, m);
        pp.line(out, &lf, ph);
    }
    pm.markers(out, &lf, &mag);
    pp.markers(out, &lf, &phase);
}

fn title(s: &Spectrum, what: &str) -> String {
    match (&s.label, s.id.is_empty()) {
        (Some(l), false) => format!("{what}: {} ({l})", s.id),
        (Some(l), true) => format!("{what} ({l})"),
        (None, false) => format!("{what}: {}", s.id),
        (None, true) => what.to_string(),
    }
}

/// Standalone SVG of a spectrum, with an optional model curve evaluated at
/// the spectrum's own frequencies.
pub fn plot_spectrum(s: &Spectrum, kind: PlotKind, overlay: Option<&[Complex<f64>]>) -> Result<String, PlotError> {
    if s.is_empty() {
        return Err(PlotError::EmptySpectrum);
    }
    if let Some(o) = overlay {
        if o.len() != s.len() {
            return Err(PlotError::OverlayLength {
                expected: s.len(),
                actual: o.len(),
            });
        }
    }
    let mut out = String::new();
    match kind {
        PlotKind::Nyquist => {
            header(&mut out, PANEL_W, PANEL_H);
            draw_nyquist(&mut out, s, overlay, 0.0, 0.0);
        }
        PlotKind::Bode => {
            header(&mut out, PANEL_W, 2.0 * PANEL_H);
            draw_bode(&mut out, s, overlay, 0.0, 0.0);
        }
        PlotKind::Combined => {
            header(&mut out, 2.0 * PANEL_W, 2.0 * PANEL_H);
            draw_bode(&mut out, s, overlay, 0.0, 0.0);
            draw_nyquist(&mut out, s, overlay, PANEL_W, PANEL_H / 2.0);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Heatmap of row-normalized counts with the raw count in each cell.
pub fn plot_confusion(cm: &ConfusionMatrix) -> String {
    let k = cm.classes.len();
    let cell = 48.0;
    let left = 170.0;
    let top = 40.0;
    let w = left + cell * k as f64 + 20.0;
    let h = top + cell * k as f64 + 170.0;
    let mut out = String::new();
    header(&mut out, w, h);
    for (i, row) in cm.counts.iter().enumerate() {
        let total: u64 = row.iter().sum();
        for (j, &c) in row.iter().enumerate() {
            let frac = if total > 0 { c as f64 / total as f64 } else { 0.0 };
            let shade = (255.0 * (1.0 - frac)).round() as u8;
            let (x, y) = (left + cell * j as f64, top + cell * i as f64);
            let _ = writeln!(
                out,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb({shade},{shade},255)" stroke="#888" stroke-width="0.5"/>"##
            );
            let color = if frac > 0.5 { "white" } else { "black" };
            let _ = writeln!(
                out,
                r##"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle" fill="{color}">{c}</text>"##,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    for (i, name) in cm.classes.iter().enumerate() {
        let y = top + cell * i as f64 + cell / 2.0 + 4.0;
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{y:.2}" font-size="11" text-anchor="end">{}</text>"##,
            left - 6.0,
            escape(name)
        );
        let x = left + cell * i as f64 + cell / 2.0;
        let yb = top + cell * k as f64 + 8.0;
        let _ = writeln!(
            out,
            r##"<text x="{x:.2}" y="{yb:.2}" font-size="11" text-anchor="end" transform="rotate(-60 {x:.2} {yb:.2})">{}</text>"##,
            escape(name)
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="24" font-size="12" text-anchor="middle">true (rows) vs predicted (columns)</text>"##,
        left + cell * k as f64 / 2.0
    );
    out.push_str("</svg>\n");
    out
}
