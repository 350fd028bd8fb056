//! Dense matrix containers shared by the datapath model and the oracle.
//!
//! [`CMat`] is a row-major complex fixed-point matrix; [`FloatMat`] is its
//! double-precision counterpart used by the reference computations. Both are
//! deliberately thin: the interesting arithmetic lives in the modules that
//! model hardware units, not here.

use num_complex::Complex64;

use crate::fixedpoint::{CFix, FixFormat};

/// Row-major matrix of complex fixed-point values, all in one format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    fmt: FixFormat,
    data: Vec<CFix>,
}

impl CMat {
    /// Zero matrix of the given shape and format.
    pub fn zeros(rows: usize, cols: usize, fmt: FixFormat) -> Self {
        CMat {
            rows,
            cols,
            fmt,
            data: vec![CFix::zero(fmt); rows * cols],
        }
    }

    /// Identity matrix (ones on the diagonal).
    pub fn identity(n: usize, fmt: FixFormat) -> Self {
        let mut m = CMat::zeros(n, n, fmt);
        for i in 0..n {
            m.set(i, i, CFix::quantize(fmt, 1.0, 0.0));
        }
        m
    }

    /// Quantizes a double-precision matrix element-wise.
    pub fn quantize(src: &FloatMat, fmt: FixFormat) -> Self {
        let mut m = CMat::zeros(src.rows(), src.cols(), fmt);
        for i in 0..src.rows() {
            for j in 0..src.cols() {
                let z = src.get(i, j);
                m.set(i, j, CFix::quantize(fmt, z.re, z.im));
            }
        }
        m
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Shared element format.
    pub fn fmt(&self) -> FixFormat {
        self.fmt
    }

    /// Element at (row, col).
    pub fn get(&self, row: usize, col: usize) -> CFix {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col]
    }

    /// Overwrites the element at (row, col).
    pub fn set(&mut self, row: usize, col: usize, v: CFix) {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        assert!(v.fmt() == self.fmt, "format mismatch in matrix store");
        self.data[row * self.cols + col] = v;
    }

    /// One row as a slice.
    pub fn row(&self, row: usize) -> &[CFix] {
        assert!(row < self.rows, "row out of bounds");
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// All elements in row-major order.
    pub fn elements(&self) -> &[CFix] {
        &self.data
    }

    /// Count of elements whose sticky saturation flag is set.
    pub fn saturated_count(&self) -> u64 {
        self.data.iter().filter(|v| v.saturated()).count() as u64
    }

    /// Lifts to double precision.
    pub fn to_float(&self) -> FloatMat {
        let mut m = FloatMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let (re, im) = self.get(i, j).to_f64();
                m.set(i, j, Complex64::new(re, im));
            }
        }
        m
    }
}

/// Row-major double-precision complex matrix for oracle computations.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl FloatMat {
    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FloatMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = FloatMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds from a row-major closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = FloatMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Element at (row, col).
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col]
    }

    /// Overwrites the element at (row, col).
    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col] = v;
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &FloatMat) -> FloatMat {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in matmul");
        let mut out = FloatMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.set(i, j, out.get(i, j) + a * rhs.get(k, j));
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> FloatMat {
        FloatMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the off-diagonal part (square matrices).
    pub fn off_diagonal_norm(&self) -> f64 {
        assert_eq!(
            self.rows, self.cols,
            "off-diagonal norm needs a square matrix"
        );
        let mut sum = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    sum += self.get(i, j).norm_sqr();
                }
            }
        }
        sum.sqrt()
    }

    /// Largest absolute component (real or imaginary) of `self − rhs`.
    pub fn max_component_diff(&self, rhs: &FloatMat) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        let mut max = 0.0f64;
        for (a, b) in self.data.iter().zip(rhs.data.iter()) {
            max = max.max((a.re - b.re).abs()).max((a.im - b.im).abs());
        }
        max
    }

    /// Scales every element.
    pub fn scale(&self, s: f64) -> FloatMat {
        FloatMat::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * s)
    }
}
