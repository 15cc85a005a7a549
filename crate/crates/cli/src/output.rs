//! CSV artifacts. Numbers carry 12 significant digits.

use hhg_core::scan::ScanResult;

use crate::error::{CliError, Result};

pub const SCAN_HEADER: &str = "cep_rad,B_au,psi_rad,r,squeezing_db,backend,g,n_at";
pub const WIGNER_HEADER: &str = "re_beta,im_beta,w";

/// One scan CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub cep: f64,
    pub b: f64,
    pub psi: f64,
    pub r: f64,
    pub db: f64,
    pub backend: String,
    pub g: f64,
    pub n_at: f64,
}

pub fn num(x: f64) -> String {
    // Avoid "-0.00000000000e0" so signs of exact zeros never differ between runs.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

pub fn scan_rows(res: &ScanResult) -> Vec<ScanRow> {
    res.points
        .iter()
        .map(|p| ScanRow {
            cep: p.record.cep,
            b: p.record.b,
            psi: p.record.psi,
            r: p.record.r,
            db: p.record.db,
            backend: res.backend.tag().into(),
            g: p.record.g,
            n_at: p.record.n_at,
        })
        .collect()
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from(SCAN_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            num(r.cep),
            num(r.b),
            num(r.psi),
            num(r.r),
            num(r.db),
            r.backend,
            num(r.g),
            num(r.n_at)
        ));
    }
    s
}

fn field(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("line {line}: {s:?} is not a number")))
}

fn body<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => Ok(lines.map(|(i, l)| (i + 1, l))),
        _ => Err(CliError::Config(format!("expected header {header:?}"))),
    }
}

pub fn parse_scan_csv(text: &str) -> Result<Vec<ScanRow>> {
    body(text, SCAN_HEADER)?
        .map(|(n, l)| {
            let c: Vec<&str> = l.split(',').collect();
            if c.len() != 8 {
                return Err(CliError::Config(format!("line {n}: expected 8 columns")));
            }
            Ok(ScanRow {
                cep: field(c[0], n)?,
                b: field(c[1], n)?,
                psi: field(c[2], n)?,
                r: field(c[3], n)?,
                db: field(c[4], n)?,
                backend: c[5].trim().to_string(),
                g: field(c[6], n)?,
                n_at: field(c[7], n)?,
            })
        })
        .collect()
}

/// Wigner values on a grid, row-major with `im_beta` outer.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub w: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, i_im: usize, i_re: usize) -> f64 {
        self.w[i_im * self.re.len() + i_re]
    }

    /// `∫ W dx dp` with `dx dp = 2 d²β` (trapezoid).
    pub fn integral(&self) -> f64 {
        let wr = trapezoid(&self.re);
        let wi = trapezoid(&self.im);
        let mut s = 0.0;
        for (a, ua) in wi.iter().enumerate() {
            for (b, ub) in wr.iter().enumerate() {
                s += ua * ub * self.at(a, b);
            }
        }
        2.0 * s
    }

    /// Mean, covariance `(xx, xy, yy)` of `(Re β, Im β)` under `W`, and the
    /// major-axis angle in `[0, π)`.
    pub fn moments(&self) -> ([f64; 2], [f64; 3], f64) {
        let wr = trapezoid(&self.re);
        let wi = trapezoid(&self.im);
        let (mut z, mut mx, mut my) = (0.0, 0.0, 0.0);
        for (a, ua) in wi.iter().enumerate() {
            for (b, ub) in wr.iter().enumerate() {
                let w = ua * ub * self.at(a, b);
                z += w;
                mx += w * self.re[b];
                my += w * self.im[a];
            }
        }
        let (mx, my) = (mx / z, my / z);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (a, ua) in wi.iter().enumerate() {
            for (b, ub) in wr.iter().enumerate() {
                let w = ua * ub * self.at(a, b);
                let (dx, dy) = (self.re[b] - mx, self.im[a] - my);
                sxx += w * dx * dx;
                sxy += w * dx * dy;
                syy += w * dy * dy;
            }
        }
        let (sxx, sxy, syy) = (sxx / z, sxy / z, syy / z);
        let angle = (0.5 * (2.0 * sxy).atan2(sxx - syy)).rem_euclid(std::f64::consts::PI);
        ([mx, my], [sxx, sxy, syy], angle)
    }
}

fn trapezoid(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let l = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect()
}

pub fn wigner_csv(g: &WignerGrid) -> String {
    let mut s = String::with_capacity(60 * g.w.len() + 32);
    s.push_str(WIGNER_HEADER);
    s.push('\n');
    for (a, &bi) in g.im.iter().enumerate() {
        for (b, &br) in g.re.iter().enumerate() {
            s.push_str(&num(br));
            s.push(',');
            s.push_str(&num(bi));
            s.push(',');
            s.push_str(&num(g.at(a, b)));
            s.push('\n');
        }
    }
    s
}

pub fn parse_wigner_csv(text: &str) -> Result<WignerGrid> {
    let mut re: Vec<f64> = Vec::new();
    let mut im: Vec<f64> = Vec::new();
    let mut w = Vec::new();
    for (n, l) in body(text, WIGNER_HEADER)? {
        let c: Vec<&str> = l.split(',').collect();
        if c.len() != 3 {
            return Err(CliError::Config(format!("line {n}: expected 3 columns")));
        }
        let (br, bi) = (field(c[0], n)?, field(c[1], n)?);
        if im.last() != Some(&bi) {
            im.push(bi);
        }
        if im.len() == 1 {
            re.push(br);
        }
        w.push(field(c[2], n)?);
    }
    if re.is_empty() || w.len() != re.len() * im.len() {
        return Err(CliError::Config("Wigner CSV is not a full rectangular grid".into()));
    }
    Ok(WignerGrid { re, im, w })
}

pub fn linspace(center: f64, half_width: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| center - half_width + 2.0 * half_width * k as f64 / (n - 1) as f64)
        .collect()
}
