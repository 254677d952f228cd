use num_complex::Complex64;

/// Dense complex matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from column-major data; panics if the length is wrong.
    pub fn from_columns(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.column(j));
        }
        Self { rows: self.rows, cols: cols.len(), data }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn scale_columns(&self, c: &[f64]) -> Self {
        assert_eq!(c.len(), self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * c[j])
    }

    /// `det(AᴴA)` from a Householder QR: the product of `|R_jj|²`.
    /// Zero when there are more columns than rows.
    pub fn gram_det(&self) -> f64 {
        if self.cols > self.rows {
            return 0.0;
        }
        let mut a = self.data.clone();
        let (m, n) = (self.rows, self.cols);
        let mut det = 1.0;
        for j in 0..n {
            let col = &a[j * m..(j + 1) * m];
            let norm2: f64 = col[j..].iter().map(|z| z.norm_sqr()).sum();
            det *= norm2;
            if norm2 == 0.0 {
                return 0.0;
            }
            let norm = norm2.sqrt();
            let x0 = col[j];
            let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
            // v = x + phase·‖x‖·e₁, reflect remaining columns with I − 2vvᴴ/‖v‖²
            let mut v: Vec<Complex64> = col[j..].to_vec();
            v[0] += phase * norm;
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            for c in (j + 1)..n {
                let cc = &mut a[c * m + j..(c + 1) * m];
                let dot: Complex64 = v.iter().zip(cc.iter()).map(|(vi, ci)| vi.conj() * ci).sum();
                let f = dot * (2.0 / vnorm2);
                for (ci, vi) in cc.iter_mut().zip(&v) {
                    *ci -= f * vi;
                }
            }
        }
        det
    }
}
