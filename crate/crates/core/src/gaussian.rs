//! Gaussian continuous-variable states.
//!
//! Conventions: `x = (a + a†)/√2`, `p = i(a† - a)/√2`, quadratures ordered
//! `(x₁, p₁, x₂, p₂, …)`, vacuum covariance `½·I`, and the rotated quadrature
//! `P_ψ = p cos ψ - x sin ψ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralMoments;
use crate::C64;

/// Slack allowed below ½ in the symplectic uncertainty check.
pub const UNCERTAINTY_TOL: f64 = 1e-9;

pub const CONVENTION: &str = "x=(a+a^dag)/sqrt2, p=i(a^dag-a)/sqrt2, vacuum cov=I/2, order x1,p1,x2,p2";

/// `Ω = ⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new((m + m.transpose()) * 0.5)
}

fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = sym_eigen(m);
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Symplectic eigenvalues (ascending, one per mode) of a covariance matrix.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let n = cov.nrows() / 2;
    let omega = symplectic_form(n);
    let s = sqrt_psd(cov);
    let m = &s * omega.transpose() * cov * &omega * &s;
    let mut ev: Vec<f64> = sym_eigen(&m).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    ev.sort_by(f64::total_cmp);
    // Eigenvalues come in degenerate pairs.
    ev.chunks(2).map(|c| 0.5 * (c[0] + c[c.len() - 1])).collect()
}

/// Phase-space rotation by `θ` (counter-clockwise in the (x, p) plane).
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    pub n_modes: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateDump {
    pub convention: String,
    pub n_modes: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// Principal axes of a single-mode covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    /// Standard deviation along the major axis.
    pub major: f64,
    pub minor: f64,
    /// Angle of the major axis from the x axis, in `[0, π)`.
    pub angle: f64,
}

impl GaussianState {
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        }
    }

    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 || cov.shape() != (dim, dim) {
            return Err(Error::Domain("mean must have even length 2n and cov be 2n×2n".into()));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::Domain(format!("covariance not symmetric (defect {asym:e})")));
        }
        let s = Self {
            n_modes: dim / 2,
            mean,
            cov: (&cov + cov.transpose()) * 0.5,
        };
        s.check_physical()?;
        Ok(s)
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.cov)
    }

    /// Uncertainty principle `cov + iΩ/2 ⪰ 0`.
    pub fn check_physical(&self) -> Result<()> {
        if sym_eigen(&self.cov).eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::Unphysical(0.0));
        }
        let nu = self.symplectic_eigenvalues()[0];
        if nu < 0.5 - UNCERTAINTY_TOL {
            return Err(Error::Unphysical(nu));
        }
        Ok(())
    }

    /// `det(2·cov)`, equal to one for pure states.
    pub fn purity_det(&self) -> f64 {
        (&self.cov * 2.0).determinant()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::Domain(format!("mode {mode} out of range (n = {})", self.n_modes)));
        }
        Ok(())
    }

    /// `D[α]` on one mode: mean shifts by `√2 (Re α, Im α)`.
    pub fn displace(&self, mode: usize, alpha: C64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += std::f64::consts::SQRT_2 * alpha.re;
        out.mean[2 * mode + 1] += std::f64::consts::SQRT_2 * alpha.im;
        Ok(out)
    }

    pub fn rotate(&self, mode: usize, theta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut r = DMatrix::identity(2 * self.n_modes, 2 * self.n_modes);
        r.view_mut((2 * mode, 2 * mode), (2, 2)).copy_from(&rotation(theta));
        Ok(self.transformed(&r))
    }

    /// `ξ → Sξ` for a real linear map `S`.
    pub fn transformed(&self, s: &DMatrix<f64>) -> Self {
        Self {
            n_modes: self.n_modes,
            mean: s * &self.mean,
            cov: s * &self.cov * s.transpose(),
        }
    }

    /// Reduced state of the listed modes.
    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        let idx: Vec<usize> = modes
            .iter()
            .map(|&m| self.check_mode(m).map(|_| [2 * m, 2 * m + 1]))
            .collect::<Result<Vec<_>>>()?
            .concat();
        let k = idx.len();
        Ok(Self {
            n_modes: modes.len(),
            mean: DVector::from_fn(k, |i, _| self.mean[idx[i]]),
            cov: DMatrix::from_fn(k, k, |i, j| self.cov[(idx[i], idx[j])]),
        })
    }

    /// Variance of `P_ψ` on one mode.
    pub fn var_p_psi(&self, mode: usize, psi: f64) -> f64 {
        let u = [-psi.sin(), psi.cos()];
        self.var_along(mode, u)
    }

    /// Variance of `X_ψ = x cos ψ + p sin ψ` on one mode.
    pub fn var_x_psi(&self, mode: usize, psi: f64) -> f64 {
        let u = [psi.cos(), psi.sin()];
        self.var_along(mode, u)
    }

    fn var_along(&self, mode: usize, u: [f64; 2]) -> f64 {
        let b = 2 * mode;
        let c = &self.cov;
        u[0] * u[0] * c[(b, b)] + 2.0 * u[0] * u[1] * c[(b, b + 1)] + u[1] * u[1] * c[(b + 1, b + 1)]
    }

    pub fn ellipse(&self, mode: usize) -> Result<Ellipse> {
        let r = self.reduced(&[mode])?;
        let e = sym_eigen(&r.cov);
        let (imax, imin) = if e.eigenvalues[0] >= e.eigenvalues[1] { (0, 1) } else { (1, 0) };
        let v = e.eigenvectors.column(imax);
        let mut angle = v[1].atan2(v[0]);
        angle = angle.rem_euclid(std::f64::consts::PI);
        if angle >= std::f64::consts::PI {
            angle = 0.0;
        }
        Ok(Ellipse {
            major: e.eigenvalues[imax].max(0.0).sqrt(),
            minor: e.eigenvalues[imin].max(0.0).sqrt(),
            angle,
        })
    }

    pub fn dump(&self) -> StateDump {
        StateDump {
            convention: CONVENTION.into(),
            n_modes: self.n_modes,
            mean: self.mean.iter().copied().collect(),
            cov: self.cov.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn from_dump(d: &StateDump) -> Result<Self> {
        let n = 2 * d.n_modes;
        if d.mean.len() != n || d.cov.len() != n || d.cov.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("state dump has inconsistent dimensions".into()));
        }
        Self::new(
            DVector::from_vec(d.mean.clone()),
            DMatrix::from_fn(n, n, |i, j| d.cov[i][j]),
        )
    }

    /// Wigner function of a single-mode state on a β grid, row-major
    /// `im × re`, normalized over the (x, p) plane.
    pub fn wigner(&self, re_beta: &[f64], im_beta: &[f64]) -> Result<Vec<f64>> {
        if self.n_modes != 1 {
            return Err(Error::Domain("Wigner function needs a single-mode state".into()));
        }
        let det = self.cov.determinant();
        let inv = self.cov.clone().try_inverse().ok_or(Error::SingularCovariance)?;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::SingularCovariance);
        }
        let norm = 1.0 / (std::f64::consts::TAU * det.sqrt());
        let s2 = std::f64::consts::SQRT_2;
        let mut out = Vec::with_capacity(re_beta.len() * im_beta.len());
        for &bi in im_beta {
            for &br in re_beta {
                let dx = s2 * br - self.mean[0];
                let dp = s2 * bi - self.mean[1];
                let q = inv[(0, 0)] * dx * dx + 2.0 * inv[(0, 1)] * dx * dp + inv[(1, 1)] * dp * dp;
                out.push(norm * (-0.5 * q).exp());
            }
        }
        Ok(out)
    }
}

/// Quadratic form `⟨Q²⟩ = ξᵀ A ξ` in the quadratures.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearForm {
    pub n_modes: usize,
    pub a_matrix: DMatrix<f64>,
}

/// Real symmetric part of `u wᵀ` for complex coefficient vectors.
fn sym_outer(u: &DVector<C64>, w: &DVector<C64>) -> DMatrix<C64> {
    (u * w.transpose() + w * u.transpose()) * C64::new(0.5, 0.0)
}

impl BilinearForm {
    /// Accepts a symmetric positive-semidefinite matrix.
    pub fn new(a_matrix: DMatrix<f64>) -> Result<Self> {
        let dim = a_matrix.nrows();
        if dim == 0 || dim % 2 != 0 || a_matrix.ncols() != dim {
            return Err(Error::Domain("form must be 2n×2n".into()));
        }
        let scale = a_matrix.amax().max(f64::MIN_POSITIVE);
        if (&a_matrix - a_matrix.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Domain("form matrix not symmetric".into()));
        }
        let a_matrix = (&a_matrix + a_matrix.transpose()) * 0.5;
        let min = sym_eigen(&a_matrix).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 * scale {
            return Err(Error::IndefiniteForm(min));
        }
        Ok(Self {
            n_modes: dim / 2,
            a_matrix,
        })
    }

    /// Translates `-g² Σ √(qp) [a†_q a†_p M_qp + a_q a_p M*_qp - (a†_q a_p + a_p a†_q) Ns_pq]`
    /// into the quadrature basis (mode `j` has harmonic order `j + 1`).
    pub fn from_moments(moments: &SpectralMoments, g: f64) -> Result<Self> {
        let k = moments.n_modes();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c: Vec<DVector<C64>> = (0..k)
            .map(|j| {
                let mut v = DVector::zeros(2 * k);
                v[2 * j] = C64::new(s, 0.0);
                v[2 * j + 1] = C64::new(0.0, s);
                v
            })
            .collect();
        let cbar: Vec<DVector<C64>> = c.iter().map(|v| v.conjugate()).collect();
        let mut acc = DMatrix::<C64>::zeros(2 * k, 2 * k);
        for q in 0..k {
            for p in 0..k {
                let w = ((q + 1) as f64 * (p + 1) as f64).sqrt();
                let m = moments.m_matrix[(q, p)];
                let ns = moments.ns_matrix[(p, q)];
                acc += (sym_outer(&cbar[q], &cbar[p]) * m
                    + sym_outer(&c[q], &c[p]) * m.conj()
                    - sym_outer(&cbar[q], &c[p]) * (ns * 2.0))
                    * C64::new(w, 0.0);
            }
        }
        Self::new(acc.map(|z| -g * g * z.re))
    }

    /// `A' = S A Sᵀ` for the form expressed in rotated coordinates `ξ' = Sξ`.
    pub fn transformed(&self, s: &DMatrix<f64>) -> Self {
        Self {
            n_modes: self.n_modes,
            a_matrix: s * &self.a_matrix * s.transpose(),
        }
    }

    pub fn rotated(&self, mode: usize, theta: f64) -> Self {
        let mut r = DMatrix::identity(2 * self.n_modes, 2 * self.n_modes);
        r.view_mut((2 * mode, 2 * mode), (2, 2)).copy_from(&rotation(theta));
        self.transformed(&r)
    }
}

/// Normalized action of `exp(-strength · ½ ξᵀAξ)` on a Gaussian state.
///
/// Along the filter path `s ∈ [0, 1]` the covariance obeys the Riccati flow
/// `Σ' = K - 2ΣGΣ` with `G = strength·A` and `K = ½ΩᵀGΩ`; the mean obeys
/// `μ' = -2ΣGμ`. Both are integrated exactly through the linearization
/// `[X; Y]' = [[0, K], [2G, 0]] [X; Y]`, `Σ = X Y⁻¹`, `μ = Y⁻ᵀ μ₀`.
pub fn apply_gaussian_filter(state: &GaussianState, form: &BilinearForm, strength: f64) -> Result<GaussianState> {
    if !(strength >= 0.0) || !strength.is_finite() {
        return Err(Error::Domain(format!("filter strength must be >= 0, got {strength}")));
    }
    if form.n_modes != state.n_modes {
        return Err(Error::Domain(format!(
            "form acts on {} modes, state has {}",
            form.n_modes, state.n_modes
        )));
    }
    if strength == 0.0 {
        return Ok(state.clone());
    }
    let d = 2 * state.n_modes;
    let g = &form.a_matrix * strength;
    let omega = symplectic_form(state.n_modes);
    let k = omega.transpose() * &g * &omega * 0.5;
    let mut h = DMatrix::zeros(2 * d, 2 * d);
    h.view_mut((0, d), (d, d)).copy_from(&k);
    h.view_mut((d, 0), (d, d)).copy_from(&(&g * 2.0));
    let e = h.exp();
    let x = e.view((0, 0), (d, d)) * &state.cov + e.view((0, d), (d, d));
    let y = e.view((d, 0), (d, d)) * &state.cov + e.view((d, d), (d, d));
    let y_inv = y.try_inverse().ok_or(Error::SingularCovariance)?;
    let cov = &x * &y_inv;
    let mean = y_inv.transpose() * &state.mean;
    GaussianState::new(mean, (&cov + cov.transpose()) * 0.5)
}

/// Logarithmic negativity (base 2) of a two-mode state for the partition
/// `{modes_a} | {modes_b}`.
pub fn log_negativity(state: &GaussianState, modes_a: &[usize], modes_b: &[usize]) -> Result<f64> {
    if state.n_modes != 2 || modes_a.len() != 1 || modes_b.len() != 1 || modes_a[0] == modes_b[0] {
        return Err(Error::Domain("log negativity is implemented for 1|1 partitions of two modes".into()));
    }
    state.check_physical()?;
    let b = modes_b[0];
    let mut flip = DMatrix::identity(4, 4);
    flip[(2 * b + 1, 2 * b + 1)] = -1.0;
    let pt = &flip * &state.cov * &flip;
    let nu = symplectic_eigenvalues(&pt)[0];
    Ok((-(2.0 * nu).log2()).max(0.0))
}

/// `Var(x_A - x_B) + Var(p_A + p_B)` and whether it violates the separable bound 2.
pub fn duan_criterion(state: &GaussianState, mode_a: usize, mode_b: usize) -> Result<(f64, bool)> {
    if state.n_modes != 2 || mode_a == mode_b || mode_a > 1 || mode_b > 1 {
        return Err(Error::Domain("Duan criterion needs two distinct modes of a two-mode state".into()));
    }
    let c = &state.cov;
    let (xa, pa, xb, pb) = (2 * mode_a, 2 * mode_a + 1, 2 * mode_b, 2 * mode_b + 1);
    let v = c[(xa, xa)] + c[(xb, xb)] - 2.0 * c[(xa, xb)] + c[(pa, pa)] + c[(pb, pb)] + 2.0 * c[(pa, pb)];
    Ok((v, v < 2.0 - 1e-12))
}
