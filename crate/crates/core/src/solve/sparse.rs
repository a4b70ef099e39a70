//! Compressed sparse rows, an incomplete Cholesky preconditioner and
//! preconditioned conjugate gradients.

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
    diag_pos: Vec<usize>,
}

impl Csr {
    /// Builds from per-row `(column, value)` lists; columns are sorted and
    /// every row must contain its diagonal.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col = Vec::with_capacity(nnz);
        let mut val = Vec::with_capacity(nnz);
        let mut diag_pos = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            let start = col.len();
            let d = row.iter().position(|e| e.0 == i).expect("row without diagonal");
            diag_pos.push(start + d);
            for (c, v) in row {
                col.push(c);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        Csr {
            n,
            row_ptr,
            col,
            val,
            diag_pos,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.val[self.diag_pos[i]]
    }

    #[inline]
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.val[k] * x[self.col[k]];
        }
        s
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row_dot(i, x);
        }
    }

    /// Principal submatrix on the (sorted) index set `keep`, with rows and
    /// columns renumbered in the order of `keep`.
    pub fn submatrix(&self, keep: &[usize]) -> Csr {
        let mut local = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            local[i] = k;
        }
        let rows = keep
            .iter()
            .map(|&i| {
                self.row(i)
                    .filter(|(c, _)| local[*c] != usize::MAX)
                    .map(|(c, v)| (local[c], v))
                    .collect()
            })
            .collect();
        Csr::from_rows(rows)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(j, v)| {
                let r = self.row_ptr[j]..self.row_ptr[j + 1];
                match self.col[r.clone()].binary_search(&i) {
                    Ok(pos) => self.val[r.start + pos] == v,
                    Err(_) => false,
                }
            })
        })
    }
}

/// Preconditioner `z = M^{-1} r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Jacobi(Vec<f64>);

impl Jacobi {
    pub fn new(a: &Csr) -> Self {
        Jacobi((0..a.n()).map(|i| 1.0 / a.diag(i)).collect())
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.0) {
            *zi = ri * di;
        }
    }
}

/// Incomplete Cholesky `L L^T` on the pattern of `A`, optionally with
/// dropped fill moved to the diagonal (modified factorization), which
/// keeps row sums of the factorization equal to those of `A`.
pub struct IncompleteCholesky {
    diag: Vec<f64>,
    /// Strictly lower part of `L` by columns: `(row, value)` sorted by row.
    cols: Vec<Vec<(usize, f64)>>,
}

impl IncompleteCholesky {
    /// `relax` in `[0, 1]` is the share of dropped fill moved to the
    /// diagonal. Returns `None` on a non-positive pivot.
    pub fn new(a: &Csr, relax: f64) -> Option<Self> {
        let n = a.n();
        let mut d: Vec<f64> = (0..n).map(|i| a.diag(i)).collect();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j < i {
                    cols[j].push((i, v));
                }
            }
        }
        for k in 0..n {
            if !(d[k] > 0.0) {
                return None;
            }
            let dk = d[k].sqrt();
            d[k] = dk;
            let (head, tail) = cols.split_at_mut(k + 1);
            let col_k = &mut head[k];
            for e in col_k.iter_mut() {
                e.1 /= dk;
            }
            for (a_idx, &(i, lik)) in col_k.iter().enumerate() {
                d[i] -= lik * lik;
                for &(j, ljk) in &col_k[..a_idx] {
                    // fill at (i, j) with j < i
                    let v = lik * ljk;
                    let col_j = &mut tail[j - k - 1];
                    match col_j.binary_search_by_key(&i, |e| e.0) {
                        Ok(pos) => col_j[pos].1 -= v,
                        Err(_) => {
                            d[i] -= relax * v;
                            d[j] -= relax * v;
                        }
                    }
                }
            }
        }
        Some(Self { diag: d, cols })
    }
}

impl Preconditioner for IncompleteCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        z.copy_from_slice(r);
        for k in 0..n {
            z[k] /= self.diag[k];
            let zk = z[k];
            for &(i, l) in &self.cols[k] {
                z[i] -= l * zk;
            }
        }
        for k in (0..n).rev() {
            let mut s = z[k];
            for &(i, l) in &self.cols[k] {
                s -= l * z[i];
            }
            z[k] = s / self.diag[k];
        }
    }
}

/// Best available preconditioner: modified incomplete Cholesky, then the
/// plain one, then Jacobi.
pub fn preconditioner(a: &Csr) -> Box<dyn Preconditioner + Send + Sync> {
    for relax in [0.95, 0.0] {
        if let Some(ic) = IncompleteCholesky::new(a, relax) {
            return Box::new(ic);
        }
    }
    Box::new(Jacobi::new(a))
}

#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for `A x = b`, warm-started from
/// `x`; stops when `||b - A x||_inf <= tol`.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], m: &dyn Preconditioner, tol: f64, max_iter: usize) -> CgOutcome {
    let n = a.n();
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let norm = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut res = norm(&r);
    if res <= tol {
        return CgOutcome {
            iterations: 0,
            residual: res,
            converged: true,
        };
    }
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return CgOutcome {
                iterations: it,
                residual: res,
                converged: false,
            };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r);
        if res <= tol {
            return CgOutcome {
                iterations: it,
                residual: res,
                converged: true,
            };
        }
        m.apply(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome {
        iterations: max_iter,
        residual: res,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Csr {
        Csr::from_rows(
            (0..n)
                .map(|i| {
                    let mut row = vec![(i, 2.0)];
                    if i > 0 {
                        row.push((i - 1, -1.0));
                    }
                    if i + 1 < n {
                        row.push((i + 1, -1.0));
                    }
                    row
                })
                .collect(),
        )
    }

    #[test]
    fn tridiagonal_factorization_is_exact() {
        // no fill for a tridiagonal matrix, so IC(0) is the Cholesky factor
        let a = laplace_1d(20);
        let ic = IncompleteCholesky::new(&a, 0.95).unwrap();
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let mut z = vec![0.0; 20];
        ic.apply(&b, &mut z);
        let mut az = vec![0.0; 20];
        a.mul(&z, &mut az);
        for (x, y) in az.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pcg_solves_spd_system() {
        let a = laplace_1d(50);
        assert!(a.is_symmetric());
        let exact: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut b = vec![0.0; 50];
        a.mul(&exact, &mut b);
        for m in [&Jacobi::new(&a) as &dyn Preconditioner, &IncompleteCholesky::new(&a, 0.0).unwrap()] {
            let mut x = vec![0.0; 50];
            let out = pcg(&a, &b, &mut x, m, 1e-12, 500);
            assert!(out.converged);
            for (u, v) in x.iter().zip(&exact) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }
}
