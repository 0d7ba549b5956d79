//! Small dense helpers for Hermitian matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Orthonormal basis of the real vector space of `n × n` Hermitian matrices
/// under `⟨A, B⟩ = Re tr(A B)`.
///
/// The first `n` elements are `e_i e_iᵀ`. Each pair `i < j` then contributes
/// `(E_ij + E_ji)/√2` and `i (E_ij − E_ji)/√2`, so `coords(M)` stores
/// `√2 Re M_ij` and `√2 Im M_ij` for the off-diagonal entries.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    n: usize,
    elems: Vec<Vec<(usize, usize, Complex64)>>,
}

impl HermitianBasis {
    pub fn new(n: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut elems = Vec::with_capacity(n * n);
        for i in 0..n {
            elems.push(vec![(i, i, Complex64::new(1.0, 0.0))]);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                elems.push(vec![
                    (i, j, Complex64::new(s, 0.0)),
                    (j, i, Complex64::new(s, 0.0)),
                ]);
                elems.push(vec![
                    (i, j, Complex64::new(0.0, s)),
                    (j, i, Complex64::new(0.0, -s)),
                ]);
            }
        }
        Self { n, elems }
    }

    /// Matrix side length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Real dimension, `n²`.
    pub fn dim(&self) -> usize {
        self.elems.len()
    }

    /// Sparse entries `(row, col, value)` of basis element `k`.
    pub fn entries(&self, k: usize) -> &[(usize, usize, Complex64)] {
        &self.elems[k]
    }

    pub fn element(&self, k: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(a, b, c) in &self.elems[k] {
            m[(a, b)] += c;
        }
        m
    }

    /// `Σ x_k E_k`.
    pub fn to_matrix(&self, x: &DVector<f64>) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (k, e) in self.elems.iter().enumerate() {
            let xk = x[k];
            if xk != 0.0 {
                for &(a, b, c) in e {
                    m[(a, b)] += c * xk;
                }
            }
        }
        m
    }

    /// `⟨M, E_k⟩` for every `k`. Only the Hermitian part of `M` is seen.
    pub fn coords(&self, m: &DMatrix<Complex64>) -> DVector<f64> {
        DVector::from_iterator(
            self.elems.len(),
            self.elems
                .iter()
                .map(|e| e.iter().map(|&(a, b, c)| (c * m[(b, a)]).re).sum::<f64>()),
        )
    }

    /// Hessian of `−log det M` at `M = W⁻¹` in basis coordinates:
    /// `H_kl = tr(W E_k W E_l)`.
    pub fn logdet_hessian(&self, w: &DMatrix<Complex64>) -> DMatrix<f64> {
        let m = self.dim();
        let mut h = DMatrix::zeros(m, m);
        for k in 0..m {
            for l in k..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(a, b, c) in &self.elems[k] {
                    for &(a2, b2, c2) in &self.elems[l] {
                        acc += c * c2 * w[(b2, a)] * w[(b, a2)];
                    }
                }
                h[(k, l)] = acc.re;
                h[(l, k)] = acc.re;
            }
        }
        h
    }
}

/// `(M + Mᴴ)/2`.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// decreasing order.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn trace_re(m: &DMatrix<Complex64>) -> f64 {
    m.trace().re
}

/// `Re tr(A B)` for Hermitian `A`, `B`.
pub fn inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.transpose().iter())
        .map(|(x, y)| (x * y).re)
        .sum()
}

/// Rotates `v` so that its first entry with modulus above `tol · ‖v‖∞` is
/// real and non-negative.
pub fn fix_phase(v: &DVector<Complex64>, tol: f64) -> DVector<Complex64> {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() > tol * peak) {
        Some(z) => {
            let rot = z.conj() / z.norm();
            v * rot
        }
        None => v.clone(),
    }
}

/// Cholesky factor `L Lᴴ` of a Hermitian positive definite matrix.
///
/// Unlike a generic complex factorization this rejects any matrix with a
/// non-positive real pivot, so it doubles as a definiteness test.
#[derive(Debug, Clone)]
pub struct HermitianCholesky {
    l: DMatrix<Complex64>,
}

impl HermitianCholesky {
    pub fn new(m: &DMatrix<Complex64>) -> Option<Self> {
        let n = m.nrows();
        let mut l = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let ljj = d.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut acc = m[(i, j)];
                for k in 0..j {
                    acc -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = acc / ljj;
            }
        }
        Some(Self { l })
    }

    pub fn log_det(&self) -> f64 {
        self.l.diagonal().iter().map(|d| 2.0 * d.re.ln()).sum()
    }

    pub fn inverse(&self) -> DMatrix<Complex64> {
        let n = self.l.nrows();
        // L⁻¹ by forward substitution, then M⁻¹ = L⁻ᴴ L⁻¹.
        let mut li = DMatrix::<Complex64>::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut acc = if i == c {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for k in c..i {
                    acc -= self.l[(i, k)] * li[(k, c)];
                }
                li[(i, c)] = acc / self.l[(i, i)];
            }
        }
        hermitian_part(&(li.adjoint() * li))
    }
}
