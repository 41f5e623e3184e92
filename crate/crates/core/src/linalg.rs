//! Dense complex matrices and the Hermitian primitives used everywhere else:
//! Cholesky solves, cyclic-Jacobi eigenvalues, power-iteration spectral norm.
//!
//! Matrices here are small (dimension <= 48 in the experiments), so the
//! O(n^3)-with-a-constant algorithms below are deliberate; see the module
//! users for why no external linear algebra backend is pulled in.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::{Error, Result};

pub type C64 = Complex64;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Column vector from a slice.
    pub fn col_vector(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matrix product dims {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let lhs = &other.data[k * other.cols..(k + 1) * other.cols];
                let row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in row.iter_mut().zip(lhs) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `A v` for a vector slice.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum::<C64>()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(A + A^H)/2`; scrubs round-off asymmetry from a nominally Hermitian result.
    pub fn hermitized(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Hermitian matrix; entries satisfy `a[i][j] = conj(a[j][i])` exactly,
/// enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: ComplexMatrix,
}

impl HermitianMatrix {
    /// Hermitize an approximately Hermitian square matrix.
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            mat: m.hermitized(),
        }
    }

    /// Build from the generator of the upper triangle (diagonal forced real).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(f(i, i).re, 0.0);
            for j in i + 1..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        Self { mat: m }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(n),
        }
    }

    pub fn real_diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| {
            if i == j {
                C64::new(d[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// `A + shift I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.mat.clone();
        for i in 0..m.rows() {
            m[(i, i)] += C64::new(shift, 0.0);
        }
        Self { mat: m }
    }

    /// Real part of `x^H A x`; exactly real for Hermitian `A`, so the tiny
    /// imaginary round-off is discarded.
    pub fn quadratic_form(&self, x: &[C64]) -> f64 {
        assert_eq!(x.len(), self.dim());
        let ax = self.mat.matvec(x);
        x.iter()
            .zip(&ax)
            .map(|(xi, yi)| (xi.conj() * yi).re)
            .sum()
    }

    /// Eigenvalues by cyclic Jacobi rotations, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        jacobi_eigenvalues(&self.mat)
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.mat[idx]
    }
}

/// Solve `A X = B` for Hermitian positive-definite `A` by Cholesky.
pub fn hermitian_solve(a: &HermitianMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.dim();
    if b.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve: A is {n}x{n}, B is {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let l = cholesky(a)?;
    // L L^H X = B: forward then back substitution per column.
    let mut x = b.clone();
    let cols = x.cols();
    for j in 0..cols {
        // forward: L z = b
        for i in 0..n {
            let mut s = x[(i, j)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / l[(i, i)];
        }
        // back: L^H x = z
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, j)];
            }
            x[(i, j)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn hermitian_inverse(a: &HermitianMatrix) -> Result<ComplexMatrix> {
    hermitian_solve(a, &ComplexMatrix::identity(a.dim()))
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
fn cholesky(a: &HermitianMatrix) -> Result<ComplexMatrix> {
    let n = a.dim();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Largest singular value by power iteration on `A^H A`.
///
/// The start vector comes from a fixed-seed generator so repeated calls are
/// bit-identical. Returns 0 for the all-zero matrix.
pub fn spectral_norm(a: &ComplexMatrix, tol: f64) -> f64 {
    const MAX_ITERS: usize = 10_000;
    if a.data().iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    let ah = a.adjoint();
    let mut rng = ChaCha12Rng::seed_from_u64(0x5a17_c0de);
    let n = a.cols();
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    normalize(&mut v);
    let mut prev = 0.0f64;
    for _ in 0..MAX_ITERS {
        let mut w = ah.matvec(&a.matvec(&v)); // A^H A v
        let sigma_sq: f64 = v
            .iter()
            .zip(&w)
            .map(|(x, y)| (x.conj() * y).re)
            .sum();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return 0.0;
        }
        v = w;
        let sigma = sigma_sq.max(0.0).sqrt();
        if (sigma - prev).abs() <= tol * sigma.max(f64::MIN_POSITIVE) {
            return sigma;
        }
        prev = sigma;
    }
    prev
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

/// l2 condition number (ratio of extreme absolute eigenvalues).
/// Returns `f64::INFINITY` when the smallest magnitude sits below the
/// round-off floor of the largest.
pub fn condition_number_l2(a: &HermitianMatrix) -> f64 {
    let eig = a.eigenvalues();
    let max = eig.iter().map(|l| l.abs()).fold(0.0f64, f64::max);
    let min = eig.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
    let floor = max * f64::EPSILON * a.dim() as f64;
    if max == 0.0 || min < floor {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    assert_eq!(m.rows(), m.cols());
    let n = m.rows();
    if n == 0 {
        return Vec::new();
    }
    let mut a = m.clone();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    let tol = scale * 1e-15;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= tol * 1e-2 / n as f64 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / mag; // e^{i phi}
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * (t * c); // complex sine
                // A <- G^H A G with G = [[c, s], [-conj(s), c]] on (p, q).
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * s.conj();
                    a[(i, q)] = aip * s + aiq * c;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * s;
                    a[(q, j)] = apj * s.conj() + aqj * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}
