//! Two-time connected dipole correlation tables shared by both backends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::PulseParams;
use crate::C64;

/// Dipole expectation value `⟨d(t)⟩` on the backend's time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleRecord {
    pub times: Vec<f64>,
    pub d_mean: Vec<f64>,
    /// Norm removed by the absorbing boundary over the whole run.
    #[serde(default)]
    pub absorbed_norm: f64,
}

/// Provenance of a table. `key` hashes every numerically relevant input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub backend: String,
    pub key: String,
    /// Sign `s` in `d = s·x` for the electron dipole (always -1 here).
    pub dipole_sign: i8,
    pub pulse: PulseParams,
    pub anchor_stride: usize,
    pub dt: f64,
    /// Backend-specific grid description.
    pub grid: serde_json::Value,
    #[serde(default)]
    pub absorbed_norm: f64,
    /// Set when the absorbed norm exceeds 10 %.
    #[serde(default)]
    pub flagged: bool,
}

/// `C_c(t', t'') = ⟨d(t')d(t'')⟩ - ⟨d(t')⟩⟨d(t'')⟩` with `t'` on the probe grid
/// and `t''` on a subsampled anchor grid.
///
/// Entries with `t' >= t''` are computed by the backend. The rest are filled
/// from conjugate symmetry, interpolating linearly between anchors.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    pub probe_times: Vec<f64>,
    /// Probe index of every anchor, strictly increasing.
    pub anchor_index: Vec<usize>,
    /// Row-major `n_probe × n_anchor`.
    pub values: Vec<C64>,
    pub meta: TableMeta,
}

impl CorrelationTable {
    /// Builds a table from the computed lower parts: `columns[a][j]` holds
    /// `C(t_{k_a + j}, t_{k_a})` for `j = 0..n_probe - k_a`.
    pub fn from_lower(
        probe_times: Vec<f64>,
        anchor_index: Vec<usize>,
        columns: Vec<Vec<C64>>,
        meta: TableMeta,
    ) -> Result<Self> {
        let n_probe = probe_times.len();
        let n_anchor = anchor_index.len();
        if columns.len() != n_anchor {
            return Err(Error::Domain("one column per anchor required".into()));
        }
        if anchor_index.windows(2).any(|w| w[0] >= w[1])
            || anchor_index.last().is_some_and(|&k| k >= n_probe)
        {
            return Err(Error::Domain("anchor indices must increase within the probe grid".into()));
        }
        let mut values = vec![C64::new(0.0, 0.0); n_probe * n_anchor];
        for (a, (col, &k)) in columns.iter().zip(&anchor_index).enumerate() {
            if col.len() != n_probe - k {
                return Err(Error::Domain(format!(
                    "column {a} has {} entries, expected {}",
                    col.len(),
                    n_probe - k
                )));
            }
            for (j, v) in col.iter().enumerate() {
                values[(k + j) * n_anchor + a] = *v;
            }
        }
        let mut table = Self {
            probe_times,
            anchor_index,
            values,
            meta,
        };
        table.refill_upper();
        Ok(table)
    }

    pub fn n_probe(&self) -> usize {
        self.probe_times.len()
    }

    pub fn n_anchor(&self) -> usize {
        self.anchor_index.len()
    }

    pub fn anchor_times(&self) -> Vec<f64> {
        self.anchor_index.iter().map(|&k| self.probe_times[k]).collect()
    }

    pub fn get(&self, probe: usize, anchor: usize) -> C64 {
        self.values[probe * self.n_anchor() + anchor]
    }

    fn set(&mut self, probe: usize, anchor: usize, v: C64) {
        let n = self.n_anchor();
        self.values[probe * n + anchor] = v;
    }

    /// True when the entry was computed directly (`t' >= t''`).
    pub fn is_direct(&self, probe: usize, anchor: usize) -> bool {
        probe >= self.anchor_index[anchor]
    }

    /// Recomputes every `t' < t''` entry from the direct lower part.
    pub fn refill_upper(&mut self) {
        let n_anchor = self.n_anchor();
        for a in 0..n_anchor {
            let ka = self.anchor_index[a];
            for i in 0..ka {
                // Anchors bracketing probe i; the upper one is never past anchor a.
                let upper = self.anchor_index.partition_point(|&k| k <= i);
                let v = if upper == 0 {
                    self.get(ka, 0)
                } else {
                    let lower = upper - 1;
                    let (kl, ku) = (self.anchor_index[lower], self.anchor_index[upper]);
                    let w = (self.probe_times[i] - self.probe_times[kl])
                        / (self.probe_times[ku] - self.probe_times[kl]);
                    self.get(ka, lower) * (1.0 - w) + self.get(ka, upper) * w
                };
                self.set(i, a, v.conj());
            }
        }
    }

    /// Bilinear interpolation of `C(t', t'')` anywhere inside the table.
    pub fn eval(&self, t1: f64, t2: f64) -> C64 {
        let (i0, wi) = bracket(&self.probe_times, t1);
        let anchors = self.anchor_times();
        let (a0, wa) = bracket(&anchors, t2);
        let i1 = (i0 + 1).min(self.n_probe() - 1);
        let a1 = (a0 + 1).min(self.n_anchor() - 1);
        self.get(i0, a0) * ((1.0 - wi) * (1.0 - wa))
            + self.get(i1, a0) * (wi * (1.0 - wa))
            + self.get(i0, a1) * ((1.0 - wi) * wa)
            + self.get(i1, a1) * (wi * wa)
    }

    /// Largest violation of `C(t'', t') = conj C(t', t'')` over anchor pairs,
    /// and the most negative / most imaginary equal-time entry.
    pub fn invariant_defects(&self) -> InvariantDefects {
        let mut sym: f64 = 0.0;
        let mut diag_im: f64 = 0.0;
        let mut diag_neg: f64 = 0.0;
        for (a, &ka) in self.anchor_index.iter().enumerate() {
            let d = self.get(ka, a);
            diag_im = diag_im.max(d.im.abs());
            diag_neg = diag_neg.max(-d.re);
            for (b, &kb) in self.anchor_index.iter().enumerate() {
                sym = sym.max((self.get(ka, b) - self.get(kb, a).conj()).norm());
            }
        }
        InvariantDefects {
            conjugate_symmetry: sym,
            diagonal_imag: diag_im,
            diagonal_negative: diag_neg,
        }
    }

    /// Combines two tables computed on disjoint anchor subsets of the same run.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.meta.key != other.meta.key {
            return Err(Error::TableMismatch(format!(
                "key {} vs {}",
                self.meta.key, other.meta.key
            )));
        }
        if self.probe_times != other.probe_times {
            return Err(Error::TableMismatch("probe grids differ".into()));
        }
        let mut anchors: Vec<(usize, &Self, usize)> = self
            .anchor_index
            .iter()
            .enumerate()
            .map(|(a, &k)| (k, self, a))
            .chain(other.anchor_index.iter().enumerate().map(|(a, &k)| (k, other, a)))
            .collect();
        anchors.sort_by_key(|x| x.0);
        if anchors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::TableMismatch("anchor sets overlap".into()));
        }
        let columns = anchors
            .iter()
            .map(|&(k, t, a)| (k..t.n_probe()).map(|i| t.get(i, a)).collect())
            .collect();
        let mut meta = self.meta.clone();
        meta.absorbed_norm = self.meta.absorbed_norm.max(other.meta.absorbed_norm);
        meta.flagged = self.meta.flagged || other.meta.flagged;
        Self::from_lower(
            self.probe_times.clone(),
            anchors.iter().map(|x| x.0).collect(),
            columns,
            meta,
        )
    }

    /// Same table with every entry multiplied by `s` (used for scaling checks).
    pub fn scaled(&self, s: f64) -> Self {
        let mut t = self.clone();
        t.values.iter_mut().for_each(|v| *v *= s);
        t
    }
}

#[derive(Clone, Copy, Debug)]
pub struct InvariantDefects {
    pub conjugate_symmetry: f64,
    pub diagonal_imag: f64,
    pub diagonal_negative: f64,
}

impl InvariantDefects {
    pub fn within(&self, tol: f64) -> bool {
        self.conjugate_symmetry <= tol && self.diagonal_imag <= tol && self.diagonal_negative <= tol
    }
}

fn bracket(grid: &[f64], t: f64) -> (usize, f64) {
    if grid.len() < 2 || t <= grid[0] {
        return (0, 0.0);
    }
    let last = grid.len() - 1;
    if t >= grid[last] {
        return (last, 0.0);
    }
    let hi = grid.partition_point(|&g| g <= t);
    let lo = hi - 1;
    (lo, (t - grid[lo]) / (grid[hi] - grid[lo]))
}
