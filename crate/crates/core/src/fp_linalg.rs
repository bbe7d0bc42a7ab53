//! Dense matrices over the prime field F_p.

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    Shape { rows: usize, cols: usize, expected: usize, got: usize },
    #[error("entry {value} at ({row}, {col}) is not reduced mod {p}")]
    Unreduced { row: usize, col: usize, value: u32, p: u32 },
    #[error("{0} is not a prime modulus")]
    Modulus(u32),
    #[error("label count does not match the matrix shape")]
    Labels,
}

/// Row-major matrix with entries in `{0, …, p-1}`.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FpMatrix {
    #[serde_as(as = "DisplayFromStr")]
    p: u32,
    #[serde_as(as = "DisplayFromStr")]
    rows: usize,
    #[serde_as(as = "DisplayFromStr")]
    cols: usize,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    entries: Vec<u32>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

fn inv_mod(a: u32, p: u32) -> u32 {
    // Fermat inversion; p is prime and a ≠ 0.
    let mut base = a as u64;
    let mut exp = p as u64 - 2;
    let m = p as u64;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc as u32
}

impl FpMatrix {
    pub fn new(p: u32, rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self, MatrixError> {
        if p < 2 || !crate::arith::is_prime_u64(p as u64) {
            return Err(MatrixError::Modulus(p));
        }
        if entries.len() != rows * cols {
            return Err(MatrixError::Shape { rows, cols, expected: rows * cols, got: entries.len() });
        }
        if let Some(i) = entries.iter().position(|&e| e >= p) {
            return Err(MatrixError::Unreduced { row: i / cols, col: i % cols, value: entries[i], p });
        }
        Ok(Self {
            p,
            rows,
            cols,
            entries,
            row_labels: (0..rows).map(|i| format!("r{i}")).collect(),
            col_labels: (0..cols).map(|j| format!("c{j}")).collect(),
        })
    }

    pub fn from_rows(p: u32, rows: &[Vec<u32>]) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MatrixError::Shape {
                rows: rows.len(),
                cols,
                expected: rows.len() * cols,
                got: rows.iter().map(Vec::len).sum(),
            });
        }
        Self::new(p, rows.len(), cols, rows.concat())
    }

    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        Self::new(p, rows, cols, vec![0; rows * cols]).expect("zero matrix is well formed")
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1 % p;
        }
        m
    }

    pub fn with_labels(mut self, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self, MatrixError> {
        if row_labels.len() != self.rows || col_labels.len() != self.cols {
            return Err(MatrixError::Labels);
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.get(r, c));
            }
        }
        Self {
            p: self.p,
            rows: self.cols,
            cols: self.rows,
            entries,
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
        }
    }

    /// Stacks the rows of `other` under `self`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.p, other.p);
        assert_eq!(self.cols, other.cols);
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        let mut row_labels = self.row_labels.clone();
        row_labels.extend(other.row_labels.iter().cloned());
        Self {
            p: self.p,
            rows: self.rows + other.rows,
            cols: self.cols,
            entries,
            row_labels,
            col_labels: self.col_labels.clone(),
        }
    }

    pub fn mul_vec(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols);
        let p = self.p as u64;
        (0..self.rows)
            .map(|r| {
                let s = self.row(r).iter().zip(v).map(|(&a, &b)| a as u64 * b as u64 % p).sum::<u64>();
                (s % p) as u32
            })
            .collect()
    }

    /// Reduced row echelon form and the pivot columns.
    ///
    /// Pivot search takes the first nonzero entry in each column; zero rows
    /// collect at the bottom so the shape is preserved.
    pub fn rref(&self) -> (FpMatrix, Vec<usize>) {
        let p = self.p as u64;
        let cols = self.cols;
        let mut m = self.entries.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for c in 0..cols {
            if pivot_row == self.rows {
                break;
            }
            let Some(r) = (pivot_row..self.rows).find(|&r| m[r * cols + c] != 0) else {
                continue;
            };
            if r != pivot_row {
                for j in 0..cols {
                    m.swap(r * cols + j, pivot_row * cols + j);
                }
            }
            let inv = inv_mod(m[pivot_row * cols + c], self.p) as u64;
            for j in 0..cols {
                let e = &mut m[pivot_row * cols + j];
                *e = (*e as u64 * inv % p) as u32;
            }
            for r2 in 0..self.rows {
                if r2 == pivot_row {
                    continue;
                }
                let factor = m[r2 * cols + c] as u64;
                if factor == 0 {
                    continue;
                }
                for j in 0..cols {
                    let sub = factor * m[pivot_row * cols + j] as u64 % p;
                    let e = &mut m[r2 * cols + j];
                    *e = ((*e as u64 + p - sub) % p) as u32;
                }
            }
            pivots.push(c);
            pivot_row += 1;
        }
        let reduced = FpMatrix {
            p: self.p,
            rows: self.rows,
            cols,
            entries: m,
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
        };
        (reduced, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel `{v : M v = 0}`.
    ///
    /// One vector per free column, in increasing column order: the free
    /// variable is set to 1, the other free variables to 0, and the pivot
    /// variables are solved from the reduced form.
    pub fn kernel_basis(&self) -> Vec<Vec<u32>> {
        let (r, pivots) = self.rref();
        let p = self.p;
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![0u32; self.cols];
                v[f] = 1 % p;
                for (row, &pc) in pivots.iter().enumerate() {
                    let e = r.get(row, f);
                    v[pc] = (p - e) % p;
                }
                v
            })
            .collect()
    }

    pub fn kernel_dim(&self) -> usize {
        self.cols - self.rank()
    }
}
