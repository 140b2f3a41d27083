//! Dense complex matrices, pivoted LU, determinants of `I + A`, and solves.

use std::ops::{Index, IndexMut};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::QuadratureGrid;
use super::NumericsError;
use crate::parallel;

/// Default condition-number threshold above which solves are refused.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;
/// Column panel width of the blocked LU.
const LU_PANEL: usize = 48;
const LU_ROW_BLOCK: usize = 32;
const LU_COL_TILE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Weighting {
    /// Entries are plain kernel values (or an abstract matrix).
    #[default]
    Plain,
    /// Entries carry `sqrt(w_i) K(x_i, x_j) sqrt(w_j)`.
    Symmetrized,
}

/// Dense row-major complex matrix, optionally tied to the quadrature grids
/// its rows and columns were sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
    row_grid: Option<Arc<QuadratureGrid>>,
    col_grid: Option<Arc<QuadratureGrid>>,
    weighting: Weighting,
}

impl OperatorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
            row_grid: None,
            col_grid: None,
            weighting: Weighting::Plain,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            data,
            ..Self::zeros(0, 0)
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self {
            rows,
            cols,
            data,
            ..Self::zeros(0, 0)
        }
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Weight-symmetrized Nyström matrix `sqrt(w_i) K(x_i, x_j) sqrt(w_j)`.
    ///
    /// Rows are filled in parallel when the `parallel` feature is on.
    pub fn nystrom(
        row_grid: Arc<QuadratureGrid>,
        col_grid: Arc<QuadratureGrid>,
        kernel: impl Fn(usize, usize) -> Complex64 + Sync,
    ) -> Self {
        let rows = row_grid.len();
        let cols = col_grid.len();
        let rw: Vec<f64> = row_grid.weights().iter().map(|w| w.sqrt()).collect();
        let cw: Vec<f64> = col_grid.weights().iter().map(|w| w.sqrt()).collect();
        let row_vals: Vec<Vec<Complex64>> = parallel::map_range(rows, |i| {
            (0..cols).map(|j| kernel(i, j) * (rw[i] * cw[j])).collect()
        });
        Self {
            rows,
            cols,
            data: row_vals.into_iter().flatten().collect(),
            row_grid: Some(row_grid),
            col_grid: Some(col_grid),
            weighting: Weighting::Symmetrized,
        }
    }

    pub fn with_grids(
        mut self,
        row_grid: Arc<QuadratureGrid>,
        col_grid: Arc<QuadratureGrid>,
        weighting: Weighting,
    ) -> Result<Self, NumericsError> {
        if row_grid.len() != self.rows || col_grid.len() != self.cols {
            return Err(NumericsError::Shape(format!(
                "{}x{} matrix cannot live on {}x{} grids",
                self.rows,
                self.cols,
                row_grid.len(),
                col_grid.len()
            )));
        }
        self.row_grid = Some(row_grid);
        self.col_grid = Some(col_grid);
        self.weighting = weighting;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn row_grid(&self) -> Option<&Arc<QuadratureGrid>> {
        self.row_grid.as_ref()
    }

    pub fn col_grid(&self) -> Option<&Arc<QuadratureGrid>> {
        self.col_grid.as_ref()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = OperatorMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        if x.len() != self.cols {
            return Err(NumericsError::Shape(format!(
                "vector of length {} for {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> OperatorMatrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix, NumericsError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumericsError::Shape("mismatched shapes in sum".into()));
        }
        let mut m = self.clone();
        m.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        Ok(m)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix, NumericsError> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// `I + self`.
    pub fn plus_identity(&self) -> OperatorMatrix {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] += 1.0;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)]);
        let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Number of singular values above `rel_tol` times the largest.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let s = self.singular_values();
        match s.first() {
            Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
            _ => 0,
        }
    }
}

impl Index<(usize, usize)> for OperatorMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for OperatorMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of a determinant evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Determinant {
    pub value: Complex64,
    /// Set when a pivot was exactly zero; `value` is then exactly zero.
    pub singular: bool,
}

/// LU factorization with partial pivoting, `P A = L U`, stored in place.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    swaps: usize,
    singular: bool,
}

impl Lu {
    pub fn new(a: &OperatorMatrix) -> Result<Self, NumericsError> {
        if !a.is_square() {
            return Err(NumericsError::Shape(format!(
                "LU of a non-square {}x{} matrix",
                a.rows, a.cols
            )));
        }
        Ok(Self::factor(a.rows, a.data.clone()))
    }

    /// Right-looking LU in column panels of width [`LU_PANEL`]: the panel is
    /// factored unblocked, then the trailing rows take all of its updates in
    /// one pass while the panel rows stay in cache.
    fn factor(n: usize, mut lu: Vec<Complex64>) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let mut singular = false;
        for k0 in (0..n).step_by(LU_PANEL) {
            let k1 = (k0 + LU_PANEL).min(n);
            for k in k0..k1 {
                let (p, pmax) = (k..n)
                    .map(|i| (i, lu[i * n + k].l1_norm()))
                    .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                if pmax == 0.0 {
                    singular = true;
                    continue;
                }
                if p != k {
                    for j in 0..n {
                        lu.swap(k * n + j, p * n + j);
                    }
                    perm.swap(k, p);
                    swaps += 1;
                }
                let (head, tail) = lu.split_at_mut((k + 1) * n);
                let pivot_row = &head[k * n..(k + 1) * n];
                let inv = 1.0 / pivot_row[k];
                parallel::for_each_chunk(tail, n, |row| {
                    let l = row[k] * inv;
                    row[k] = l;
                    if l.re != 0.0 || l.im != 0.0 {
                        axpy_neg(&mut row[k + 1..k1], l, &pivot_row[k + 1..k1]);
                    }
                });
            }
            if k1 == n {
                break;
            }
            // U12 = L11^{-1} A12
            for r in k0 + 1..k1 {
                let (head, tail) = lu.split_at_mut(r * n);
                let row = &mut tail[..n];
                for p in k0..r {
                    let l = row[p];
                    if l.re != 0.0 || l.im != 0.0 {
                        axpy_neg(&mut row[k1..], l, &head[p * n + k1..(p + 1) * n]);
                    }
                }
            }
            // A22 -= L21 U12
            let (head, tail) = lu.split_at_mut(k1 * n);
            let panel = &head[k0 * n..];
            // column tiles keep a panel tile cached across a block of rows
            parallel::for_each_chunk(tail, LU_ROW_BLOCK * n, |block| {
                for j0 in (k1..n).step_by(LU_COL_TILE) {
                    let j1 = (j0 + LU_COL_TILE).min(n);
                    for row in block.chunks_mut(n) {
                        for p in k0..k1 {
                            let l = row[p];
                            if l.re != 0.0 || l.im != 0.0 {
                                let off = (p - k0) * n;
                                axpy_neg(&mut row[j0..j1], l, &panel[off + j0..off + j1]);
                            }
                        }
                    }
                }
            });
        }
        Self {
            n,
            lu,
            perm,
            swaps,
            singular,
        }
    }

    pub fn determinant(&self) -> Determinant {
        if self.singular {
            return Determinant {
                value: Complex64::new(0.0, 0.0),
                singular: true,
            };
        }
        let mut d = Complex64::new(if self.swaps % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        for i in 0..self.n {
            d *= self.lu[i * self.n + i];
        }
        Determinant {
            value: d,
            singular: false,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        let n = self.n;
        if b.len() != n {
            return Err(NumericsError::Shape(format!(
                "rhs of length {} for n = {n}",
                b.len()
            )));
        }
        if self.singular {
            return Err(NumericsError::Singular);
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        Ok(x)
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
        let n = self.n;
        if self.singular {
            return Err(NumericsError::Singular);
        }
        // A = P^T L U, so A^H = U^H L^H P
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lu[k * n + i].conj() * y[k];
            }
            y[i] = s / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lu[k * n + i].conj() * y[k];
            }
            y[i] = s;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }

    /// Hager–Higham estimate of `||A^{-1}||_1`.
    pub fn inverse_norm_one_estimate(&self) -> Result<f64, NumericsError> {
        let n = self.n;
        if n == 0 {
            return Ok(0.0);
        }
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x)?;
            est = y.iter().map(|v| v.norm()).sum::<f64>();
            let xi: Vec<Complex64> = y
                .iter()
                .map(|v| {
                    let a = v.norm();
                    if a == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        v / a
                    }
                })
                .collect();
            let z = self.solve_adjoint(&xi)?;
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![Complex64::new(0.0, 0.0); n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        Ok(est)
    }
}

#[inline(always)]
fn axpy_neg_body(dst: &mut [Complex64], a: Complex64, src: &[Complex64]) {
    let (ar, ai) = (a.re, a.im);
    for (d, s) in dst.iter_mut().zip(src) {
        d.re -= ar * s.re - ai * s.im;
        d.im -= ar * s.im + ai * s.re;
    }
}

/// Two complex entries per 256-bit lane: `a s = ar s +- ai swap(s)`.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn axpy_neg_avx2(dst: &mut [Complex64], a: Complex64, src: &[Complex64]) {
    use std::arch::x86_64::*;
    let n = dst.len().min(src.len());
    let pairs = n / 2;
    let ar = _mm256_set1_pd(a.re);
    let ai = _mm256_set1_pd(a.im);
    // Complex64 is repr(C) { re, im }
    let d = dst.as_mut_ptr() as *mut f64;
    let s = src.as_ptr() as *const f64;
    for k in 0..pairs {
        let sv = _mm256_loadu_pd(s.add(4 * k));
        let swapped = _mm256_permute_pd(sv, 0b0101);
        let prod = _mm256_fmaddsub_pd(ar, sv, _mm256_mul_pd(ai, swapped));
        let dv = _mm256_loadu_pd(d.add(4 * k));
        _mm256_storeu_pd(d.add(4 * k), _mm256_sub_pd(dv, prod));
    }
    if n % 2 == 1 {
        axpy_neg_body(&mut dst[n - 1..n], a, &src[n - 1..n]);
    }
}

/// `dst -= a src`, the LU inner loop.
fn axpy_neg(dst: &mut [Complex64], a: Complex64, src: &[Complex64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
            // SAFETY: features detected at runtime; loads stay within the
            // first `min(len)` entries of both slices
            return unsafe { axpy_neg_avx2(dst, a, src) };
        }
    }
    axpy_neg_body(dst, a, src)
}

/// `det(I + A)` by pivoted LU.
pub fn det_i_plus(a: &OperatorMatrix) -> Result<Determinant, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::Shape(format!(
            "determinant of a non-square {}x{} matrix",
            a.rows, a.cols
        )));
    }
    Ok(Lu::factor(a.rows, a.plus_identity().data).determinant())
}

/// `det(A)` by pivoted LU.
pub fn det(a: &OperatorMatrix) -> Result<Determinant, NumericsError> {
    Ok(Lu::new(a)?.determinant())
}

/// Solves `(I + A) x = b`, refusing when the 1-norm condition estimate of
/// `I + A` exceeds `condition_limit`.
pub fn solve_i_plus_with_limit(
    a: &OperatorMatrix,
    b: &[Complex64],
    condition_limit: f64,
) -> Result<Vec<Complex64>, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::Shape(
            "solve with a non-square matrix".into(),
        ));
    }
    let m = a.plus_identity();
    let lu = Lu::new(&m)?;
    if lu.is_singular() {
        return Err(NumericsError::Singular);
    }
    let condition = m.norm_one() * lu.inverse_norm_one_estimate()?;
    if condition > condition_limit {
        return Err(NumericsError::NearSingular { condition });
    }
    lu.solve(b)
}

pub fn solve_i_plus(a: &OperatorMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
    solve_i_plus_with_limit(a, b, DEFAULT_CONDITION_LIMIT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> OperatorMatrix {
        OperatorMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
        })
    }

    // Laplace expansion along the first row; independent of the LU path.
    fn cofactor_det(m: &[Vec<Complex64>]) -> Complex64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut total = c(0.0, 0.0);
        for j in 0..n {
            let minor: Vec<Vec<Complex64>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, v)| *v)
                        .collect()
                })
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            total += m[0][j] * cofactor_det(&minor) * sign;
        }
        total
    }

    #[test]
    fn identity_case() {
        let d = det_i_plus(&OperatorMatrix::zeros(3, 3)).unwrap();
        assert_eq!(d.value, c(1.0, 0.0));
        assert!(!d.singular);
    }

    #[test]
    fn rank_one() {
        let x = [c(1.0, 2.0), c(-0.5, 0.1), c(0.3, -0.7), c(2.0, 0.0)];
        let y = [c(0.2, 0.0), c(1.0, -1.0), c(0.0, 0.4), c(-0.3, 0.3)];
        let k = c(0.7, -0.2);
        let a = OperatorMatrix::from_fn(4, 4, |i, j| k * x[i] * y[j]);
        let pairing: Complex64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        let d = det_i_plus(&a).unwrap();
        assert!((d.value - (1.0 + k * pairing)).norm() < 1e-14);
    }

    #[test]
    fn matches_cofactor_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 4, 1.0);
            let ipa = a.plus_identity();
            let rows: Vec<Vec<Complex64>> = (0..4).map(|i| ipa.row(i).to_vec()).collect();
            let oracle = cofactor_det(&rows);
            let d = det_i_plus(&a).unwrap().value;
            assert!(
                (d - oracle).norm() <= 1e-12 * oracle.norm(),
                "{d} vs {oracle}"
            );
        }
    }

    #[test]
    fn exact_zero_pivot_is_flagged() {
        // I + b = [[0, 1], [0, 0]] has an all-zero first column
        let b = OperatorMatrix::from_row_major(
            2,
            2,
            vec![c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        );
        let d = det_i_plus(&b).unwrap();
        assert!(d.singular);
        assert_eq!(d.value, c(0.0, 0.0));
    }

    #[test]
    fn solve_trivial_cases() {
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0)];
        assert_eq!(solve_i_plus(&OperatorMatrix::zeros(3, 3), &b).unwrap(), b);
        let a = OperatorMatrix::identity(2);
        let x = solve_i_plus(&a, &[c(2.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15 && (x[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    // textbook elimination, column by column over the whole trailing block
    fn reference_det(a: &OperatorMatrix) -> Complex64 {
        let n = a.rows();
        let mut m: Vec<Vec<Complex64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
        let mut d = c(1.0, 0.0);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm())).unwrap();
            if p != k {
                m.swap(k, p);
                d = -d;
            }
            d *= m[k][k];
            for i in k + 1..n {
                let l = m[i][k] / m[k][k];
                for j in k..n {
                    let u = m[k][j];
                    m[i][j] -= l * u;
                }
            }
        }
        d
    }

    #[test]
    fn blocked_lu_matches_reference_across_panels() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // odd sizes straddle panel, row-block and column-tile edges
        for n in [47, 49, 301, 333] {
            let a = random_matrix(&mut rng, n, 1.0 / (n as f64).sqrt());
            let got = det_i_plus(&a).unwrap().value;
            let want = reference_det(&a.plus_identity());
            assert!((got - want).norm() <= 1e-10 * want.norm(), "n={n}");
            let b: Vec<Complex64> = (0..n).map(|_| c(rng.gen(), rng.gen())).collect();
            let x = solve_i_plus(&a, &b).unwrap();
            let r = a.plus_identity().matvec(&x).unwrap();
            let res = r.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            assert!(res <= 1e-11, "n={n} residual {res}");
        }
    }

    #[test]
    fn solve_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 5, 0.5);
            let b: Vec<Complex64> = (0..5).map(|_| c(rng.gen(), rng.gen())).collect();
            let x = solve_i_plus(&a, &b).unwrap();
            let r = a.plus_identity().matvec(&x).unwrap();
            let res: f64 = r
                .iter()
                .zip(&b)
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let bn: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!(res <= 1e-12 * bn);
        }
    }

    #[test]
    fn adjoint_solve_and_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 6, 1.0).plus_identity();
        let lu = Lu::new(&a).unwrap();
        let b: Vec<Complex64> = (0..6).map(|i| c(i as f64, 1.0)).collect();
        let x = lu.solve_adjoint(&b).unwrap();
        let r = a.adjoint().matvec(&x).unwrap();
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).norm() < 1e-12);
        }
        // estimate never exceeds the true norm and is usually exact
        let cols: Vec<Vec<Complex64>> = (0..6)
            .map(|j| {
                let mut e = vec![c(0.0, 0.0); 6];
                e[j] = c(1.0, 0.0);
                lu.solve(&e).unwrap()
            })
            .collect();
        let exact = cols
            .iter()
            .map(|col| col.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let est = lu.inverse_norm_one_estimate().unwrap();
        assert!(est <= exact * (1.0 + 1e-12) && est >= 0.3 * exact);
    }

    #[test]
    fn near_singular_is_refused() {
        let eps = 1e-14;
        let a = OperatorMatrix::from_row_major(
            2,
            2,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(eps, 0.0)],
        );
        // I + a = [[1,1],[1,1+eps]]
        match solve_i_plus(&a, &[c(1.0, 0.0), c(1.0, 0.0)]) {
            Err(NumericsError::NearSingular { condition }) => assert!(condition > 1e12),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn multiplicative_on_diagonals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let da: Vec<Complex64> = (0..6)
                .map(|_| c(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)))
                .collect();
            let db: Vec<Complex64> = (0..6)
                .map(|_| c(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)))
                .collect();
            let a = OperatorMatrix::diagonal(&da);
            let b = OperatorMatrix::diagonal(&db);
            let ab = a.matmul(&b).unwrap();
            let lhs = det_i_plus(&a).unwrap().value * det_i_plus(&b).unwrap().value;
            let rhs = det_i_plus(&a.add(&b).unwrap().add(&ab).unwrap())
                .unwrap()
                .value;
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm());
        }
    }

    #[test]
    fn symmetrized_det_is_reordering_invariant() {
        use crate::numerics::quadrature::gauss_interval;
        let grid = Arc::new(gauss_interval(12, 0.0, 2.0).unwrap());
        let x = grid.abscissae();
        let kern = |a: f64, b: f64| c((-(a - b).powi(2)).exp(), 0.3 * (a * b).sin());
        let m = OperatorMatrix::nystrom(grid.clone(), grid.clone(), |i, j| kern(x[i], x[j]));
        let perm: Vec<usize> = (0..12).rev().collect();
        let pg = Arc::new(grid.permuted(&perm));
        let px = pg.abscissae();
        let pm = OperatorMatrix::nystrom(pg.clone(), pg, |i, j| kern(px[i], px[j]));
        let d1 = det_i_plus(&m).unwrap().value;
        let d2 = det_i_plus(&pm).unwrap().value;
        assert!((d1 - d2).norm() <= 1e-13 * d1.norm());
        assert_eq!(m.weighting(), Weighting::Symmetrized);
    }
}
