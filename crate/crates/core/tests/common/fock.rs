//! Brute-force Fock-space reference for Gaussian operations on 1–2 modes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use hhg_core::C64;

pub struct FockSpace {
    pub n_modes: usize,
    pub dim: usize,
    /// `x1, p1, x2, p2, …` on the truncated product space.
    pub quads: Vec<DMatrix<C64>>,
}

fn annihilation(dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

impl FockSpace {
    pub fn new(n_modes: usize, dim: usize) -> Self {
        let a = annihilation(dim);
        let id = DMatrix::<C64>::identity(dim, dim);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = (&a + a.adjoint()) * C64::new(s, 0.0);
        let p = (a.adjoint() - &a) * C64::new(0.0, s);
        let embed = |op: &DMatrix<C64>, mode: usize| {
            (0..n_modes).fold(DMatrix::<C64>::identity(1, 1), |acc, m| {
                acc.kronecker(if m == mode { op } else { &id })
            })
        };
        let quads = (0..n_modes).flat_map(|m| [embed(&x, m), embed(&p, m)]).collect();
        Self { n_modes, dim, quads }
    }

    pub fn size(&self) -> usize {
        self.dim.pow(self.n_modes as u32)
    }

    pub fn vacuum(&self) -> DVector<C64> {
        let mut v = DVector::zeros(self.size());
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// Coherent state of one mode (`n_modes == 1`), amplitude `α`.
    pub fn coherent(&self, alpha: C64) -> DVector<C64> {
        assert_eq!(self.n_modes, 1);
        let mut v = DVector::zeros(self.dim);
        let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..self.dim {
            v[n] = c;
            c *= alpha / ((n + 1) as f64).sqrt();
        }
        v
    }

    /// `exp(-strength · ½ QᵀAQ) ψ`, renormalized.
    pub fn filter(&self, psi: &DVector<C64>, a: &DMatrix<f64>, strength: f64) -> DVector<C64> {
        let n = self.size();
        let mut h = DMatrix::<C64>::zeros(n, n);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    h += &self.quads[i] * &self.quads[j] * C64::new(0.5 * a[(i, j)], 0.0);
                }
            }
        }
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let u = &eig.eigenvectors;
        let mut coeff = u.adjoint() * psi;
        for (c, &l) in coeff.iter_mut().zip(eig.eigenvalues.iter()) {
            *c *= (-strength * l).exp();
        }
        let out = u * coeff;
        let norm = out.norm();
        out / C64::new(norm, 0.0)
    }

    /// Mean vector and symmetrized covariance of a pure state.
    pub fn moments(&self, psi: &DVector<C64>) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.quads.len();
        let qpsi: Vec<DVector<C64>> = self.quads.iter().map(|q| q * psi).collect();
        let mean = DVector::from_fn(k, |i, _| psi.dotc(&qpsi[i]).re);
        let cov = DMatrix::from_fn(k, k, |i, j| {
            // Re⟨Q_i Q_j⟩ = ½⟨{Q_i, Q_j}⟩ for Hermitian Q.
            qpsi[i].dotc(&qpsi[j]).re - mean[i] * mean[j]
        });
        (mean, cov)
    }

    /// Logarithmic negativity (base 2) of a pure two-mode state from the
    /// partial transpose of its density matrix.
    pub fn log_negativity(&self, psi: &DVector<C64>) -> f64 {
        assert_eq!(self.n_modes, 2);
        let d = self.dim;
        let n = d * d;
        let rho_pt = DMatrix::from_fn(n, n, |r, c| {
            let (i, l) = (r / d, r % d);
            let (k, j) = (c / d, c % d);
            // ρ^{T_B}_{(i,l),(k,j)} = ρ_{(i,j),(k,l)}
            psi[i * d + j] * psi[k * d + l].conj()
        });
        let eig = SymmetricEigen::new(rho_pt);
        let trace_norm: f64 = eig.eigenvalues.iter().map(|l| l.abs()).sum();
        trace_norm.log2()
    }
}
