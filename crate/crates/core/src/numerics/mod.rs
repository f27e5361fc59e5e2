//! Statistical kernels: 2×2 chi-square test, Student-t tail probabilities and
//! dense least squares with classical standard errors.

pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Condition-number ceiling for the column-scaled Gram matrix.
pub const MAX_GRAM_CONDITION: f64 = 1e10;

/// Pivots of the scaled triangular factor below this fraction of the largest
/// pivot are treated as exact collinearity.
const PIVOT_RTOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("degenerate 2x2 table {0:?}: a row or column margin is zero")]
    DegenerateTable(ContingencyTable2x2),
    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(String),
    #[error("underdetermined system: {rows} rows for {cols} columns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Counts of a 2×2 contingency table.
///
/// Rows are the two corpora (event, baseline); columns are the term and
/// every other token: `a` = term in event, `b` = other in event,
/// `c` = term in baseline, `d` = other in baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    fn margins(&self) -> [u64; 4] {
        [
            self.a + self.b,
            self.c + self.d,
            self.a + self.c,
            self.b + self.d,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson chi-square test of independence on a 2×2 table (df = 1, no
/// continuity correction).
pub fn chi_square_2x2(table: ContingencyTable2x2) -> Result<ChiSquare, NumericsError> {
    let margins = table.margins();
    if margins.contains(&0) {
        return Err(NumericsError::DegenerateTable(table));
    }
    let n = table.total() as f64;
    let cross = table.a as i128 * table.d as i128 - table.b as i128 * table.c as i128;
    let cross = cross as f64;
    let denom = margins.iter().map(|&m| m as f64).product::<f64>();
    let statistic = n * cross * cross / denom;
    Ok(ChiSquare {
        statistic,
        p_value: chi_square_sf_df1(statistic),
    })
}

/// Survival function of the chi-square distribution with one degree of
/// freedom.
pub fn chi_square_sf_df1(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    special::erfc((x / 2.0).sqrt())
}

/// Two-sided tail probability `2·P(T_df > |t|)` of Student's t.
pub fn t_two_sided_p(t: f64, df: u64) -> f64 {
    assert!(df >= 1, "t distribution needs df >= 1");
    if t.is_nan() {
        return f64::NAN;
    }
    let df = df as f64;
    let t2 = t * t;
    if t2.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t2);
    special::beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Row-major dense matrix, just enough for regression designs.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Self {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, NumericsError> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(NumericsError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Copy with column `c` removed.
    pub fn without_column(&self, c: usize) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols - 1);
        for r in 0..self.rows {
            let mut k = 0;
            for j in 0..self.cols {
                if j != c {
                    out.set(r, k, self.get(r, j));
                    k += 1;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ · v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.row(r)) {
                *o += x * vr;
            }
        }
        out
    }
}

/// Ordinary least-squares problem `min ‖y − Xβ‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl LeastSquaresProblem {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self, NumericsError> {
        if x.rows() != y.len() {
            return Err(NumericsError::DimensionMismatch(format!(
                "{} design rows but {} responses",
                x.rows(),
                y.len()
            )));
        }
        Ok(Self { x, y })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    pub beta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `RSS / (n − k)`
    pub sigma2: f64,
    pub rss: f64,
    /// 1-norm condition estimate of the column-scaled Gram matrix.
    pub gram_condition: f64,
}

/// Householder-QR least squares with classical standard errors.
///
/// Columns are scaled to unit norm before factorization; the scaled Gram
/// matrix's 1-norm condition number is checked against
/// [`MAX_GRAM_CONDITION`].
pub fn least_squares_fit(problem: &LeastSquaresProblem) -> Result<LeastSquaresFit, NumericsError> {
    let x = &problem.x;
    let (n, k) = (x.rows(), x.cols());
    if problem.y.len() != n {
        return Err(NumericsError::DimensionMismatch(format!(
            "{n} design rows but {} responses",
            problem.y.len()
        )));
    }
    if k == 0 || n <= k {
        return Err(NumericsError::Underdetermined { rows: n, cols: k });
    }

    let norms: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| x.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    if let Some(j) = norms.iter().position(|&v| v == 0.0 || !v.is_finite()) {
        return Err(NumericsError::RankDeficient(format!(
            "column {j} is identically zero or non-finite"
        )));
    }

    // Column-major working copy of the scaled design.
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..n).map(|i| x.get(i, j) / norms[j]).collect())
        .collect();
    let mut qty = problem.y.clone();

    for j in 0..k {
        let col = &a[j];
        let alpha = col[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if alpha == 0.0 {
            return Err(NumericsError::RankDeficient(format!(
                "column {j} lies in the span of earlier columns"
            )));
        }
        let alpha = if col[j] > 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = col[j..].to_vec();
        v[0] -= alpha;
        let vnorm2 = v.iter().map(|t| t * t).sum::<f64>();
        if vnorm2 > 0.0 {
            for c in a.iter_mut().skip(j) {
                reflect(&v, vnorm2, &mut c[j..]);
            }
            reflect(&v, vnorm2, &mut qty[j..]);
        }
    }

    // r[i][j] for i <= j, read from the factored columns.
    let r = |i: usize, j: usize| a[j][i];
    let max_pivot = (0..k).map(|i| r(i, i).abs()).fold(0.0, f64::max);
    if let Some(j) = (0..k).find(|&j| r(j, j).abs() <= PIVOT_RTOL * max_pivot) {
        return Err(NumericsError::RankDeficient(format!(
            "column {j} is collinear with earlier columns"
        )));
    }

    // R⁻¹ by back substitution, column by column.
    let mut rinv = vec![vec![0.0; k]; k];
    for col in 0..k {
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for m in i + 1..=col {
                s -= r(i, m) * rinv[m][col];
            }
            rinv[i][col] = s / r(i, i);
        }
    }

    // Scaled Gram G = RᵀR and its inverse R⁻¹R⁻ᵀ.
    let mut gram = vec![vec![0.0; k]; k];
    let mut gram_inv = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = (0..=i.min(j)).map(|m| r(m, i) * r(m, j)).sum();
            gram_inv[i][j] = (i.max(j)..k).map(|m| rinv[i][m] * rinv[j][m]).sum();
        }
    }
    let gram_condition = one_norm(&gram) * one_norm(&gram_inv);
    if !(gram_condition <= MAX_GRAM_CONDITION) {
        return Err(NumericsError::RankDeficient(format!(
            "scaled Gram condition estimate {gram_condition:.3e} exceeds {MAX_GRAM_CONDITION:.0e}"
        )));
    }

    let mut beta_scaled = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for m in i + 1..k {
            s -= r(i, m) * beta_scaled[m];
        }
        beta_scaled[i] = s / r(i, i);
    }
    let beta: Vec<f64> = beta_scaled.iter().zip(&norms).map(|(b, s)| b / s).collect();

    let fitted = x.mul_vec(&beta);
    let residuals: Vec<f64> = problem.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = rss / (n - k) as f64;
    let std_errors = (0..k)
        .map(|j| (sigma2 * gram_inv[j][j]).sqrt() / norms[j])
        .collect();

    Ok(LeastSquaresFit {
        beta,
        std_errors,
        residuals,
        sigma2,
        rss,
        gram_condition,
    })
}

fn reflect(v: &[f64], vnorm2: f64, target: &mut [f64]) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= f * vi;
    }
}

fn one_norm(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    (0..k)
        .map(|j| (0..k).map(|i| m[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
