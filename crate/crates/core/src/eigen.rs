//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use crate::error::{Error, Result};

/// Sweep cap before the solver reports non-convergence.
pub const MAX_SWEEPS: usize = 50;

const SYMMETRY_TOL: f64 = 1e-9;
const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Dense row-major square matrix, expected to be symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix rows must all have length n".into()));
        }
        Ok(SymMatrix { n, data: rows.concat() })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = SymMatrix::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)].powi(2);
                }
            }
        }
        s.sqrt()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SymMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues with matching unit eigenvectors (`vectors[k]` pairs with
/// `values[k]`), sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

fn jacobi(s: &SymMatrix, want_vectors: bool) -> Result<Eigen> {
    let n = s.dim();
    let max_abs = s.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL * max_abs {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = s.clone();
    // Work on the exactly symmetric part.
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = if want_vectors { Some(SymMatrix::from_diagonal(&vec![1.0; n])) } else { None };
    let target = OFF_DIAGONAL_TOL * s.frobenius_norm();

    let mut sweeps = 0;
    while a.off_diagonal_norm() > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - sn * vkq;
                        v[(k, q)] = sn * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = match v {
        Some(v) => order.iter().map(|&i| (0..n).map(|k| v[(k, i)]).collect()).collect(),
        None => Vec::new(),
    };
    Ok(Eigen { values, vectors, sweeps })
}

/// Eigenvalues of a symmetric matrix in descending order.
pub fn symmetric_eigenvalues(s: &SymMatrix) -> Result<Vec<f64>> {
    jacobi(s, false).map(|e| e.values)
}

/// Eigenvalues and eigenvectors of a symmetric matrix, descending.
pub fn symmetric_eigen(s: &SymMatrix) -> Result<Eigen> {
    jacobi(s, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let e = symmetric_eigenvalues(&SymMatrix::from_diagonal(&[1.0, 2.0])).unwrap();
        assert_eq!(e, vec![2.0, 1.0]);
    }

    #[test]
    fn rank_one() {
        let m = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let e = symmetric_eigenvalues(&m).unwrap();
        assert!((e[0] - 2.0).abs() < 1e-14 && e[1].abs() < 1e-14, "{e:?}");
    }

    #[test]
    fn zero_matrix_needs_no_sweeps() {
        let e = symmetric_eigen(&SymMatrix::zeros(4)).unwrap();
        assert_eq!(e.values, vec![0.0; 4]);
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigenvalues(&m), Err(Error::NotSymmetric(_))));
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0]]).is_err());
    }

    #[test]
    fn eigenvectors_satisfy_definition() {
        let m = SymMatrix::from_rows(&[
            vec![4.0, 1.0, -2.0],
            vec![1.0, 3.0, 0.5],
            vec![-2.0, 0.5, 1.0],
        ])
        .unwrap();
        let e = symmetric_eigen(&m).unwrap();
        for (lam, v) in e.values.iter().zip(&e.vectors) {
            for i in 0..3 {
                let mv: f64 = (0..3).map(|k| m[(i, k)] * v[k]).sum();
                assert!((mv - lam * v[i]).abs() < 1e-12);
            }
        }
    }
}
