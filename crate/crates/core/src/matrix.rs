//! Small dense square matrices over f64.
//!
//! Linearized Poincare maps in this crate are 2x2 or 3x3, so a plain
//! row-major Vec<f64> with hand-written kernels beats pulling in a linear
//! algebra stack. Wedge traces (elementary symmetric functions of the
//! eigenvalues) come from Newton's identities on power traces, which avoids
//! any eigendecomposition; determinants use LU with partial pivoting so the
//! two routes are independent of each other.

#[derive(Clone, Debug, PartialEq)]
pub struct SqMatrix {
    n: usize,
    a: Vec<f64>,
}

impl SqMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), n * n, "need n*n entries for an n x n matrix");
        SqMatrix { n, a: entries }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SqMatrix { n, a: vec![0.0; n * n] };
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = SqMatrix { n, a: vec![0.0; n * n] };
        for i in 0..n {
            m.a[i * n + i] = entries[i];
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn mul(&self, rhs: &SqMatrix) -> SqMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix product");
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += aik * rhs.a[k * n + j];
                }
            }
        }
        SqMatrix { n, a: out }
    }

    pub fn pow(&self, mut e: u32) -> SqMatrix {
        let mut base = self.clone();
        let mut acc = SqMatrix::identity(self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn transpose(&self) -> SqMatrix {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.a[i * n + j];
            }
        }
        SqMatrix { n, a: out }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i * self.n + i]).sum()
    }

    /// I - self.
    pub fn sub_from_identity(&self) -> SqMatrix {
        let mut out = SqMatrix::identity(self.n);
        for i in 0..self.n * self.n {
            out.a[i] -= self.a[i];
        }
        out
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.a.clone();
        let mut sign = 1.0;
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                sign = -sign;
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
            }
        }
        let mut det = sign;
        for i in 0..n {
            det *= a[i * n + i];
        }
        det
    }

    /// Elementary symmetric functions e_0..e_n of the eigenvalues, computed
    /// as characteristic-polynomial coefficients: Faddeev-LeVerrier
    /// B_k = A(B_{k-1} - e_{k-1} I) for the intermediate coefficients (it
    /// avoids the catastrophic (p_1^2 - p_2)/2 cancellation of Newton's
    /// identities on strongly hyperbolic matrices), and the pivoted-LU
    /// determinant for the top one, where the recursion itself cancels at
    /// the square of the spectral radius. e_l equals the trace of the l-th
    /// exterior power of the matrix.
    pub fn elementary_symmetric(&self) -> Vec<f64> {
        let n = self.n;
        let mut e = vec![0.0; n + 1];
        e[0] = 1.0;
        if n == 0 {
            return e;
        }
        let mut b = self.clone();
        for k in 1..n {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            e[k] = sign * b.trace() / k as f64;
            // B <- A (B - sign * e_k I)
            let mut shifted = b;
            for i in 0..n {
                shifted.a[i * n + i] -= sign * e[k];
            }
            b = self.mul(&shifted);
        }
        e[n] = self.det();
        e
    }
}

/// Exact 2x2 integer matrix with checked arithmetic, used for toral
/// automorphisms where f64 would silently lose precision at large powers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IMat2 {
    pub a: [[i128; 2]; 2],
}

impl IMat2 {
    pub fn new(a: [[i128; 2]; 2]) -> Self {
        IMat2 { a }
    }

    pub fn identity() -> Self {
        IMat2 { a: [[1, 0], [0, 1]] }
    }

    pub fn checked_mul(&self, r: &IMat2) -> Option<IMat2> {
        let mut out = [[0i128; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc: i128 = 0;
                for k in 0..2 {
                    acc = acc.checked_add(self.a[i][k].checked_mul(r.a[k][j])?)?;
                }
                out[i][j] = acc;
            }
        }
        Some(IMat2 { a: out })
    }

    pub fn mul(&self, r: &IMat2) -> IMat2 {
        self.checked_mul(r).expect("integer matrix product overflowed i128")
    }

    pub fn checked_pow(&self, mut e: u32) -> Option<IMat2> {
        let mut base = *self;
        let mut acc = IMat2::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base)?;
            }
        }
        Some(acc)
    }

    pub fn pow(&self, e: u32) -> IMat2 {
        self.checked_pow(e).expect("integer matrix power overflowed i128")
    }

    pub fn trace(&self) -> i128 {
        self.a[0][0] + self.a[1][1]
    }

    pub fn det(&self) -> i128 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    /// self - I.
    pub fn sub_identity(&self) -> IMat2 {
        let mut m = *self;
        m.a[0][0] -= 1;
        m.a[1][1] -= 1;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat3(rows: [[f64; 3]; 3]) -> SqMatrix {
        SqMatrix::new(3, rows.concat())
    }

    #[test]
    fn elementary_symmetric_of_known_spectrum() {
        // diag(2, 3, 5): e = (1, 10, 31, 30)
        let m = SqMatrix::diag(&[2.0, 3.0, 5.0]);
        let e = m.elementary_symmetric();
        assert_eq!(e.len(), 4);
        for (got, want) in e.iter().zip([1.0, 10.0, 31.0, 30.0]) {
            assert!((got - want).abs() < 1e-12, "e mismatch: {got} vs {want}");
        }
    }

    #[test]
    fn charpoly_det_identity_on_dense_matrix() {
        let m = mat3([[1.0, 2.0, 0.5], [-0.25, 0.75, 1.0], [0.0, 3.0, -2.0]]);
        let e = m.elementary_symmetric();
        // det(I - A) = sum_l (-1)^l e_l
        let alt: f64 = e
            .iter()
            .enumerate()
            .map(|(l, v)| if l % 2 == 0 { *v } else { -*v })
            .sum();
        let lu = m.sub_from_identity().det();
        assert!(
            (alt - lu).abs() < 1e-12,
            "alternating wedge sum {alt} disagrees with LU det {lu}"
        );
        // e_n is the determinant itself
        assert!((e[3] - m.det()).abs() < 1e-12, "e_n equals det");
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let m = SqMatrix::new(2, vec![2.0, 1.0, 1.0, 1.0]);
        let mut by_mul = SqMatrix::identity(2);
        for _ in 0..7 {
            by_mul = by_mul.mul(&m);
        }
        assert_eq!(m.pow(7), by_mul);
        assert_eq!(m.pow(0), SqMatrix::identity(2));
    }

    #[test]
    fn lu_det_handles_pivoting_and_singularity() {
        let needs_pivot = SqMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]);
        assert!((needs_pivot.det() + 1.0).abs() < 1e-15, "swap matrix has det -1");
        let singular = mat3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]]);
        assert_eq!(singular.det(), 0.0, "rank-deficient matrix has det 0");
    }

    #[test]
    fn integer_cat_powers_match_fibonacci_like_recurrence() {
        let a = IMat2::new([[2, 1], [1, 1]]);
        // tr A^n satisfies t_{n+1} = 3 t_n - t_{n-1} (det A = 1), t_1 = 3, t_2 = 7.
        let mut prev = 3i128;
        let mut cur = 7i128;
        assert_eq!(a.pow(1).trace(), prev);
        assert_eq!(a.pow(2).trace(), cur);
        for n in 3..=20u32 {
            let next = 3 * cur - prev;
            assert_eq!(a.pow(n).trace(), next, "trace recurrence at n = {n}");
            prev = cur;
            cur = next;
        }
        assert_eq!(a.pow(12).det(), 1, "powers of a unimodular matrix stay unimodular");
    }
}
