//! SVG renderers. Each is a pure function of parsed CSV data, so figures can
//! be regenerated offline from the machine artifacts.

use std::f64::consts::PI;
use std::fmt::Write;

use hhg_core::gaussian::StateDump;

use crate::output::{ScanRow, WignerGrid};

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

/// Cyclic hue for an angle in `[0, π)`, as `#rrggbb`.
pub fn psi_color(psi: f64) -> String {
    let h = (psi.rem_euclid(PI) / PI) * 6.0;
    let (c, l) = (0.7, 0.45);
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let u = |v: f64| ((v + m).clamp(0.0, 1.0) * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", u(r), u(g), u(b))
}

/// Sequential map for `t ∈ [0, 1]` (dark blue through teal to yellow).
fn heat(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (255.0, 255.0, 255.0),
        (65.0, 68.0, 135.0),
        (42.0, 120.0, 142.0),
        (34.0, 168.0, 132.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |x: f64, y: f64| (x + f * (y - x)).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// "Nice" tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).abs().max(1e-300);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{x:.1e}")
    } else {
        let s = format!("{x:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + (self.y1 - y) / (self.y1 - self.y0) * self.height
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(s, "<rect x=\"{l}\" y=\"{t}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"black\"/>");
        for x in ticks(self.x0, self.x1, 8) {
            let p = self.px(x);
            let _ = writeln!(
                s,
                "<line x1=\"{p:.2}\" y1=\"{b:.2}\" x2=\"{p:.2}\" y2=\"{b2:.2}\" stroke=\"black\"/>\
                 <text x=\"{p:.2}\" y=\"{ty:.2}\" text-anchor=\"middle\">{}</text>",
                tick_label(x),
                b = t + h,
                b2 = t + h + 5.0,
                ty = t + h + 18.0
            );
        }
        for y in ticks(self.y0, self.y1, 6) {
            let p = self.py(y);
            let _ = writeln!(
                s,
                "<line x1=\"{a:.2}\" y1=\"{p:.2}\" x2=\"{l:.2}\" y2=\"{p:.2}\" stroke=\"black\"/>\
                 <text x=\"{tx:.2}\" y=\"{ty:.2}\" text-anchor=\"end\">{}</text>",
                tick_label(y),
                a = l - 5.0,
                tx = l - 8.0,
                ty = p + 4.0
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{xlabel}</text>",
            l + w / 2.0,
            t + h + 38.0
        );
        let _ = writeln!(
            s,
            "<text transform=\"translate({:.2},{:.2}) rotate(-90)\" text-anchor=\"middle\">{ylabel}</text>",
            l - 50.0,
            t + h / 2.0
        );
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = 0.5 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    }
}

/// Squeezing in dB against CEP, points colored by ψ.
pub fn scan_svg(rows: &[ScanRow]) -> String {
    let mut s = header(W, H);
    let fold = |f: fn(f64, f64) -> f64, init: f64, g: &dyn Fn(&ScanRow) -> f64| rows.iter().map(g).fold(init, f);
    let (x0, x1) = padded(fold(f64::min, f64::INFINITY, &|r| r.cep), fold(f64::max, f64::NEG_INFINITY, &|r| r.cep));
    let (y0, y1) = padded(fold(f64::min, f64::INFINITY, &|r| r.db), fold(f64::max, f64::NEG_INFINITY, &|r| r.db));
    let frame = Frame {
        x0,
        x1,
        y0: y0.min(0.0),
        y1,
        left: LEFT,
        top: TOP,
        width: W - LEFT - RIGHT,
        height: H - TOP - BOTTOM,
    };
    let backend = rows.first().map(|r| r.backend.as_str()).unwrap_or("");
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">Fundamental-mode squeezing vs CEP ({backend})</text>",
        LEFT + frame.width / 2.0
    );
    frame.axes(&mut s, "CEP φ (rad)", "squeezing (dB)");
    let mut sorted: Vec<&ScanRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.cep.total_cmp(&b.cep));
    let pts: Vec<String> = sorted
        .iter()
        .map(|r| format!("{:.2},{:.2}", frame.px(r.cep), frame.py(r.db)))
        .collect();
    let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"#888\" stroke-width=\"1.5\"/>", pts.join(" "));
    for r in &sorted {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{}\" stroke=\"black\" stroke-width=\"0.5\"><title>φ={:.4} ψ={:.4} dB={:.4}</title></circle>",
            frame.px(r.cep),
            frame.py(r.db),
            psi_color(r.psi),
            r.cep,
            r.psi,
            r.db
        );
    }
    // ψ color bar.
    let (bx, bw, bh) = (W - RIGHT + 30.0, 16.0, frame.height);
    let n = 36;
    for k in 0..n {
        let psi = PI * (k as f64 + 0.5) / n as f64;
        let y = TOP + bh * (1.0 - (k + 1) as f64 / n as f64);
        let _ = writeln!(
            s,
            "<rect x=\"{bx}\" y=\"{y:.2}\" width=\"{bw}\" height=\"{:.2}\" fill=\"{}\"/>",
            bh / n as f64 + 0.5,
            psi_color(psi)
        );
    }
    let _ = writeln!(s, "<rect x=\"{bx}\" y=\"{TOP}\" width=\"{bw}\" height=\"{bh}\" fill=\"none\" stroke=\"black\"/>");
    for (v, lab) in [(0.0, "0"), (0.5, "π/2"), (1.0, "π")] {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\">{lab}</text>",
            bx + bw + 4.0,
            TOP + bh * (1.0 - v) + 4.0
        );
    }
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\">ψ</text>", bx, TOP - 8.0);
    s.push_str("</svg>\n");
    s
}

/// Panel annotations.
#[derive(Clone, Debug)]
pub struct PanelLabels {
    pub cep: f64,
    pub psi: f64,
    pub r_eff: f64,
    pub frame: String,
}

/// 1σ contour of a single-mode state in the β plane: center, semi-axes and
/// major-axis angle.
pub fn beta_ellipse(dump: &StateDump) -> ([f64; 2], f64, f64, f64) {
    let s2 = std::f64::consts::SQRT_2;
    let (a, b, c) = (dump.cov[0][0], dump.cov[0][1], dump.cov[1][1]);
    let tr = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l1, l2) = (tr + disc, (tr - disc).max(0.0));
    let angle = (0.5 * (2.0 * b).atan2(a - c)).rem_euclid(PI);
    ([dump.mean[0] / s2, dump.mean[1] / s2], l1.sqrt() / s2, l2.sqrt() / s2, angle)
}

/// Wigner heatmap with the 1σ ellipse of the state overlaid.
pub fn wigner_svg(grid: &WignerGrid, dump: &StateDump, labels: &PanelLabels) -> String {
    let size = 420.0;
    let (left, top) = (LEFT, TOP + 20.0);
    let (w, h) = (left + size + 100.0, top + size + BOTTOM);
    let mut s = header(w, h);
    let (nr, ni) = (grid.re.len(), grid.im.len());
    let dr = (grid.re[nr - 1] - grid.re[0]) / (nr - 1).max(1) as f64;
    let di = (grid.im[ni - 1] - grid.im[0]) / (ni - 1).max(1) as f64;
    let frame = Frame {
        x0: grid.re[0] - 0.5 * dr,
        x1: grid.re[nr - 1] + 0.5 * dr,
        y0: grid.im[0] - 0.5 * di,
        y1: grid.im[ni - 1] + 0.5 * di,
        left,
        top,
        width: size,
        height: size,
    };
    let wmax = grid.w.iter().copied().fold(0.0, f64::max).max(1e-300);
    let levels = 48.0;
    let level = |v: f64| ((v / wmax).clamp(0.0, 1.0) * levels).round();
    let (cw, ch) = (size / nr as f64, size / ni as f64);
    for a in 0..ni {
        let y = frame.py(grid.im[a] + 0.5 * di);
        let mut b = 0;
        while b < nr {
            let lv = level(grid.at(a, b));
            let mut e = b + 1;
            while e < nr && level(grid.at(a, e)) == lv {
                e += 1;
            }
            if lv > 0.0 {
                let (r, g, bl) = heat(lv / levels);
                let _ = writeln!(
                    s,
                    "<rect x=\"{:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({r},{g},{bl})\"/>",
                    left + b as f64 * cw,
                    (e - b) as f64 * cw + 0.3,
                    ch + 0.3
                );
            }
            b = e;
        }
    }
    let (c, major, minor, angle) = beta_ellipse(dump);
    let pts: Vec<String> = (0..=120)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 120.0;
            let (u, v) = (major * t.cos(), minor * t.sin());
            let x = c[0] + u * angle.cos() - v * angle.sin();
            let y = c[1] + u * angle.sin() + v * angle.cos();
            format!("{:.2},{:.2}", frame.px(x), frame.py(y))
        })
        .collect();
    let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>", pts.join(" "));
    frame.axes(&mut s, "Re β", "Im β");
    let _ = writeln!(
        s,
        "<text x=\"{left}\" y=\"22\" font-size=\"14\">φ = {:.3} rad, ψ = {:.3} rad, r_eff = {:.4}</text>",
        labels.cep, labels.psi, labels.r_eff
    );
    let _ = writeln!(s, "<text x=\"{left}\" y=\"40\" fill=\"#555\">{}; red: 1σ contour</text>", labels.frame);
    // Color bar for W / max W.
    let bx = left + size + 30.0;
    let n = 24;
    for k in 0..n {
        let (r, g, b) = heat((k as f64 + 0.5) / n as f64);
        let y = top + size * (1.0 - (k + 1) as f64 / n as f64);
        let _ = writeln!(
            s,
            "<rect x=\"{bx}\" y=\"{y:.2}\" width=\"16\" height=\"{:.2}\" fill=\"rgb({r},{g},{b})\"/>",
            size / n as f64 + 0.5
        );
    }
    let _ = writeln!(s, "<rect x=\"{bx}\" y=\"{top}\" width=\"16\" height=\"{size}\" fill=\"none\" stroke=\"black\"/>");
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", bx + 20.0, top + 4.0, tick_label(wmax));
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\">0</text>", bx + 20.0, top + size + 4.0);
    let _ = writeln!(s, "<text x=\"{bx}\" y=\"{:.2}\">W</text>", top - 8.0);
    s.push_str("</svg>\n");
    s
}
