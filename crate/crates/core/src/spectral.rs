//! Displacements χ_q, spectral moment matrices and squeezing numbers.
//!
//! With `D(ω) = ∫ e^{iωt} [d(t) - ⟨d(t)⟩] dt` on `[0, T]`:
//!
//! * `M_qp = ⟨D(ω_q) D(ω_p)⟩ = ∬ e^{iω_q t'} e^{iω_p t''} C(t', t'')`
//! * `N_qp = ⟨D†(ω_q) D(ω_p)⟩ = ∬ e^{-iω_q t'} e^{iω_p t''} C(t', t'')`
//!
//! The square is folded onto the computed triangle `t' >= t''` using
//! `C(t'', t') = conj C(t', t'')`; the inner integral runs over the probe grid
//! (trapezoid) and the outer one over the anchors.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationTable, DipoleRecord};
use crate::error::{Error, Result};
use crate::quad::{fourier_trapezoid, trapezoid_weights, uniform_step, weights, Rule};
use crate::C64;

/// Minimum number of anchors per optical cycle before a table is flagged.
pub const MIN_ANCHORS_PER_CYCLE: f64 = 8.0;

/// `ω_q = q ω` for `q = 1..=n_modes`.
pub fn harmonic_comb(omega: f64, n_modes: usize) -> Vec<f64> {
    (1..=n_modes).map(|q| q as f64 * omega).collect()
}

/// `χ_q = g √q ∫ ⟨d(t)⟩ e^{iω_q t} dt`, where `omegas[q-1] = ω_q`.
pub fn chi_displacements(d_mean: &DipoleRecord, omegas: &[f64], g: f64) -> Result<Vec<C64>> {
    omegas
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let q = (i + 1) as f64;
            Ok(g * q.sqrt() * fourier_trapezoid(&d_mean.d_mean, &d_mean.times, w)?)
        })
        .collect()
}

/// Moment matrices of the dipole fluctuations.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMoments {
    /// Symmetrized `M` (the two `D`s treated as commuting).
    pub m: DMatrix<C64>,
    /// `⟨D†(ω_q) D(ω_p)⟩`.
    pub n: DMatrix<C64>,
    /// Weyl-ordered `½⟨D†D + DD†⟩`, the kernel of the bilinear form.
    pub ns: DMatrix<C64>,
    /// Fewer than eight anchors per optical cycle.
    pub coarse: bool,
    /// `max(0, -λ_min(N)) / tr N`.
    pub psd_defect: f64,
}

pub fn d_correlation_matrix(table: &CorrelationTable, omegas: &[f64]) -> Result<CorrelationMoments> {
    d_correlation_matrix_with(table, omegas, Rule::default())
}

pub fn d_correlation_matrix_with(
    table: &CorrelationTable,
    omegas: &[f64],
    outer: Rule,
) -> Result<CorrelationMoments> {
    let h = uniform_step(&table.probe_times)?;
    let stride = match table.anchor_index.as_slice() {
        [a, b, ..] => b - a,
        _ => return Err(Error::InvalidGrid("at least two anchors required".into())),
    };
    if table.anchor_index[0] != 0
        || table.anchor_index.windows(2).any(|w| w[1] - w[0] != stride)
        || *table.anchor_index.last().unwrap() != table.n_probe() - 1
    {
        return Err(Error::InvalidGrid("anchors must be uniform and span the probe grid".into()));
    }
    let n_q = omegas.len();
    let n_t = table.n_probe();
    let n_a = table.n_anchor();

    let phase: Vec<Vec<C64>> = omegas
        .iter()
        .map(|&w| table.probe_times.iter().map(|&t| C64::from_polar(1.0, w * t)).collect())
        .collect();
    let outer_w = weights(outer, n_a, stride as f64 * h);

    // Inner sums per anchor: i1 = Σ w e^{iωu} C, i2 = Σ w e^{iωu} conj C.
    let mut m = DMatrix::<C64>::zeros(n_q, n_q);
    let mut n = DMatrix::<C64>::zeros(n_q, n_q);
    let mut nbar = DMatrix::<C64>::zeros(n_q, n_q);
    let mut i1 = vec![C64::new(0.0, 0.0); n_q];
    let mut i2 = vec![C64::new(0.0, 0.0); n_q];
    // The diagonal is visited by both triangles, so it carries half of its
    // probe weight each time; at unit stride the fold then equals the
    // product trapezoid rule on the square.
    let probe_w = trapezoid_weights(n_t, h);
    for (a, &ka) in table.anchor_index.iter().enumerate() {
        let mut w_inner = trapezoid_weights(n_t - ka, h);
        w_inner[0] = 0.5 * probe_w[ka];
        for q in 0..n_q {
            let (mut s1, mut s2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for (j, wj) in w_inner.iter().enumerate() {
                let c = table.get(ka + j, a);
                let e = phase[q][ka + j];
                s1 += *wj * e * c;
                s2 += *wj * e * c.conj();
            }
            i1[q] = s1;
            i2[q] = s2;
        }
        let wa = outer_w[a];
        for q in 0..n_q {
            let i3q = i2[q].conj();
            let i4q = i1[q].conj();
            for p in 0..n_q {
                let fp = phase[p][ka];
                let fq = phase[q][ka];
                m[(q, p)] += wa * (fp * i1[q] + fq * i2[p]);
                n[(q, p)] += wa * (fp * i3q + fq.conj() * i2[p]);
                nbar[(q, p)] += wa * (fp * i4q + fq.conj() * i1[p]);
            }
        }
    }
    let m = (&m + m.transpose()) * C64::new(0.5, 0.0);
    let ns = (&n + &nbar) * C64::new(0.5, 0.0);

    let cycle = std::f64::consts::TAU / omegas.first().copied().unwrap_or(1.0);
    let per_cycle = cycle / (stride as f64 * h);
    let coarse = per_cycle < MIN_ANCHORS_PER_CYCLE;
    if coarse {
        log::warn!("only {per_cycle:.1} anchors per optical cycle (< {MIN_ANCHORS_PER_CYCLE})");
    }
    let psd_defect = psd_defect(&n);
    Ok(CorrelationMoments {
        m,
        n,
        ns,
        coarse,
        psd_defect,
    })
}

/// `max(0, -λ_min) / tr` of a Hermitian matrix (0 for a zero matrix).
pub fn psd_defect(h: &DMatrix<C64>) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let trace: f64 = (0..herm.nrows()).map(|i| herm[(i, i)].re).sum();
    let eig = SymmetricEigen::new(herm);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if trace <= 0.0 {
        return if min < 0.0 { f64::INFINITY } else { 0.0 };
    }
    (-min).max(0.0) / trace
}

/// Everything the continuous-variable layer needs from one run.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMoments {
    pub omegas: Vec<f64>,
    pub m_matrix: DMatrix<C64>,
    pub n_matrix: DMatrix<C64>,
    pub ns_matrix: DMatrix<C64>,
    pub chi: Vec<C64>,
    pub coarse: bool,
    pub psd_defect: f64,
}

impl SpectralMoments {
    pub fn from_run(
        table: &CorrelationTable,
        record: &DipoleRecord,
        omegas: &[f64],
        g: f64,
        outer: Rule,
    ) -> Result<Self> {
        let c = d_correlation_matrix_with(table, omegas, outer)?;
        Ok(Self {
            omegas: omegas.to_vec(),
            m_matrix: c.m,
            n_matrix: c.n,
            ns_matrix: c.ns,
            chi: chi_displacements(record, omegas, g)?,
            coarse: c.coarse,
            psd_defect: c.psd_defect,
        })
    }

    /// Moments given directly; the Weyl-ordered kernel defaults to `N`.
    pub fn from_matrices(omegas: Vec<f64>, m: DMatrix<C64>, n: DMatrix<C64>) -> Result<Self> {
        let k = omegas.len();
        if m.shape() != (k, k) || n.shape() != (k, k) {
            return Err(Error::Domain(format!("moment matrices must be {k}×{k}")));
        }
        Ok(Self {
            chi: vec![C64::new(0.0, 0.0); k],
            psd_defect: psd_defect(&n),
            ns_matrix: n.clone(),
            omegas,
            m_matrix: m,
            n_matrix: n,
            coarse: false,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.omegas.len()
    }

    /// `max |M - Mᵀ|`.
    pub fn m_asymmetry(&self) -> f64 {
        (&self.m_matrix - self.m_matrix.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Fundamental-mode squeezing numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeRecord {
    pub cep: f64,
    pub b: f64,
    pub psi: f64,
    pub r: f64,
    pub db: f64,
    pub g: f64,
    pub n_at: f64,
    /// Squeezing of the normalized filter, `½ ln(1 + 2|r|)`.
    pub r_eff: f64,
}

/// `squeezing_db = 10 log10(e^{2 r²})`.
pub fn db_from_r(r: f64) -> f64 {
    10.0 * (2.0 * r * r) * std::f64::consts::LOG10_E
}

pub fn squeeze_record(m11: C64, g: f64, n_at: f64, cep: f64) -> Result<SqueezeRecord> {
    if !(g >= 0.0) || !(n_at >= 0.0) {
        return Err(Error::Domain(format!("g ({g}) and n_at ({n_at}) must be >= 0")));
    }
    let b = m11.norm();
    let mut psi = 0.5 * m11.arg();
    if psi < 0.0 {
        psi += std::f64::consts::PI;
    }
    if psi >= std::f64::consts::PI {
        psi -= std::f64::consts::PI;
    }
    let r = -(g * g * b * n_at);
    Ok(SqueezeRecord {
        cep,
        b,
        psi,
        r: if r == 0.0 { 0.0 } else { r },
        db: db_from_r(r),
        g,
        n_at,
        r_eff: 0.5 * (1.0 + 2.0 * r.abs()).ln(),
    })
}
