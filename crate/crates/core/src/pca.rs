//! Principal component analysis on z-scored song vectors.
//!
//! The covariance of the standardized data is diagonalized with the cyclic
//! Jacobi method, which is deterministic for a given input and accurate to
//! working precision on symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// `k` unit-length principal axes, each of length `d`.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues matching `components`, descending.
    pub explained_variance: Vec<f64>,
}

/// Eigen-decomposition of a symmetric `d × d` row-major matrix.
/// Returns eigenvalues descending and the matching unit eigenvectors.
pub fn symmetric_eigen(matrix: &[f64], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), d * d, "matrix is not {d}x{d}");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|p| (p + 1..d).map(move |q| (p, q)))
            .map(|(p, q)| a[p * d + q] * a[p * d + q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j * d + j].total_cmp(&a[i * d + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * d + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..d).map(|k| v[k * d + i]).collect())
        .collect();
    (values, vectors)
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

impl PcaModel {
    /// Fits `k` components to `rows` (`n × d`).
    pub fn fit(rows: &[Vec<f64>], k: usize) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::Config(format!("PCA needs at least 2 rows, got {n}")));
        }
        let d = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: r.len(),
            });
        }
        if k == 0 || k > (n - 1).min(d) {
            return Err(Error::Config(format!(
                "k = {k} outside 1..={}",
                (n - 1).min(d)
            )));
        }
        let nf = n as f64;
        let mean: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf)
            .collect();
        let scale: Vec<f64> = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (nf - 1.0);
                let sd = var.sqrt();
                if sd > 1e-12 * (1.0 + mean[j].abs()) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();

        let z: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| (0..d).map(|j| (r[j] - mean[j]) / scale[j]).collect())
            .collect();
        let mut cov = vec![0.0; d * d];
        for p in 0..d {
            for q in p..d {
                let c = z.iter().map(|r| r[p] * r[q]).sum::<f64>() / (nf - 1.0);
                cov[p * d + q] = c;
                cov[q * d + p] = c;
            }
        }
        let (values, vectors) = symmetric_eigen(&cov, d);
        let components: Vec<Vec<f64>> = vectors
            .into_iter()
            .take(k)
            .map(|mut v| {
                fix_sign(&mut v);
                v
            })
            .collect();
        Ok(Self {
            mean,
            scale,
            components,
            explained_variance: values.into_iter().take(k).map(|x| x.max(0.0)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    /// Scores of `x` on each component.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.standardize(x)?;
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Maps scores back to the original feature space.
    pub fn inverse_transform(&self, scores: &[f64]) -> Result<Vec<f64>> {
        if scores.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                actual: scores.len(),
            });
        }
        let mut out = self.mean.clone();
        for (j, o) in out.iter_mut().enumerate() {
            let z: f64 = self
                .components
                .iter()
                .zip(scores)
                .map(|(c, s)| c[j] * s)
                .sum();
            *o += z * self.scale[j];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        (0..n)
            .map(|_| {
                let g: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                (0..d)
                    .map(|j| (0..d).map(|i| g[i] * mix[i][j]).sum::<f64>() * (j + 1) as f64)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn collinear_data() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, i as f64]).collect();
        let m = PcaModel::fit(&rows, 2).unwrap();
        let h = 0.5f64.sqrt();
        assert!((m.components[0][0] - h).abs() < 1e-12);
        assert!((m.components[0][1] - h).abs() < 1e-12);
        assert!(m.explained_variance[1].abs() < 1e-12);
        assert!((m.explained_variance[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_data() {
        let rows = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let m = PcaModel::fit(&rows, 2).unwrap();
        assert!((m.explained_variance[0] - m.explained_variance[1]).abs() < 1e-12);
    }

    #[test]
    fn argument_errors() {
        let rows = random_rows(4, 3, 1);
        assert!(PcaModel::fit(&rows[..1], 1).is_err());
        assert!(PcaModel::fit(&rows, 0).is_err());
        assert!(PcaModel::fit(&rows, 4).is_err());
        let m = PcaModel::fit(&rows, 2).unwrap();
        assert!(m.transform(&[1.0]).is_err());
    }

    #[test]
    fn transform_examples() {
        let rows = random_rows(12, 5, 7);
        let m = PcaModel::fit(&rows, 5).unwrap();
        assert!(m.transform(&m.mean).unwrap().iter().all(|s| s.abs() < 1e-12));

        let x: Vec<f64> = (0..5)
            .map(|j| m.mean[j] + m.scale[j] * m.components[0][j])
            .collect();
        let s = m.transform(&x).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-9);
        assert!(s[1..].iter().all(|v| v.abs() < 1e-9));

        for r in &rows {
            let back = m.inverse_transform(&m.transform(r).unwrap()).unwrap();
            for (a, b) in back.iter().zip(r) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn orthonormal_and_sorted() {
        let rows = random_rows(30, 8, 11);
        let m = PcaModel::fit(&rows, 8).unwrap();
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
            let top = a.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
            assert!(top > 0.0);
        }
        assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        let total: f64 = m.explained_variance.iter().sum();
        assert!((total - 8.0).abs() < 1e-6);
    }

    #[test]
    fn constant_column_gets_unit_scale() {
        let mut rows = random_rows(10, 3, 5);
        rows.iter_mut().for_each(|r| r[1] = 4.2);
        let m = PcaModel::fit(&rows, 3).unwrap();
        assert_eq!(m.scale[1], 1.0);
        let total: f64 = m.explained_variance.iter().sum();
        assert!((total - 2.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic() {
        let rows = random_rows(20, 6, 3);
        assert_eq!(PcaModel::fit(&rows, 3).unwrap(), PcaModel::fit(&rows, 3).unwrap());
    }
}
