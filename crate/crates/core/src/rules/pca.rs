//! Two-component PCA over small dense embeddings.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{BcpError, Result};
use crate::scores::EmbeddingMatrix;

/// Relative eigenvalue threshold below which a component is treated as absent.
const RANK_TOLERANCE: f64 = 1e-12;

/// Top-two principal axes of an embedding set.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca2 {
    mean: Vec<f64>,
    components: [Vec<f64>; 2],
    eigenvalues: [f64; 2],
    degenerate: bool,
}

impl Pca2 {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unit loading vectors ordered by descending variance. A component with
    /// (numerically) zero variance is the zero vector.
    pub fn components(&self) -> &[Vec<f64>; 2] {
        &self.components
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        self.eigenvalues
    }

    /// True when at least one of the two components was zeroed out.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn project(&self, x: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = x
                .iter()
                .zip(&self.mean)
                .zip(c)
                .map(|((xi, mi), ci)| (xi - mi) * ci)
                .sum();
        }
        out
    }
}

/// Fits PCA on `embeddings` and returns the model with the projected points.
///
/// Uses the full symmetric eigendecomposition of the sample covariance
/// (divisor `n - 1`). Each eigenvector's largest-magnitude entry is made
/// positive.
pub fn pca_2d(embeddings: &EmbeddingMatrix) -> Result<(Pca2, Vec<[f64; 2]>)> {
    let n = embeddings.n();
    let d = embeddings.dim();
    if n < 2 {
        return Err(BcpError::TooFewPoints {
            required: 2,
            found: n,
        });
    }
    if d < 2 {
        return Err(BcpError::InvalidParameter(format!(
            "embedding dimension {d} is below 2"
        )));
    }

    let mut mean = vec![0.0; d];
    for row in embeddings.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for row in embeddings.rows() {
        for (c, (x, m)) in centered.iter_mut().zip(row.iter().zip(&mean)) {
            *c = x - m;
        }
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let trace = cov.trace();

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = [vec![0.0; d], vec![0.0; d]];
    let mut eigenvalues = [0.0; 2];
    let mut degenerate = false;
    for (slot, &idx) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if trace <= 0.0 || lambda <= RANK_TOLERANCE * trace {
            degenerate = true;
            continue;
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components[slot] = v;
        eigenvalues[slot] = lambda;
    }

    let model = Pca2 {
        mean,
        components,
        eigenvalues,
        degenerate,
    };
    let projected = embeddings.rows().map(|r| model.project(r)).collect();
    Ok((model, projected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_covariance_gives_coordinate_axes() {
        // centered, variances 4 and 1 along x and y
        let rows = [[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0], [2.0, 0.0], [-2.0, 0.0]];
        let emb = EmbeddingMatrix::from_rows(&rows).unwrap();
        let (pca, projected) = pca_2d(&emb).unwrap();
        assert!(!pca.is_degenerate());
        assert_abs_diff_eq!(pca.components()[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pca.components()[0][1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pca.components()[1][1], 1.0, epsilon = 1e-12);
        for (p, r) in projected.iter().zip(&rows) {
            assert_abs_diff_eq!(p[0], r[0], epsilon = 1e-12);
            assert_abs_diff_eq!(p[1], r[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn collinear_points_have_flat_second_axis() {
        let rows: Vec<[f64; 3]> = (0..6).map(|i| [i as f64; 3]).collect();
        let emb = EmbeddingMatrix::from_rows(&rows).unwrap();
        let (pca, projected) = pca_2d(&emb).unwrap();
        assert!(pca.is_degenerate());
        assert_eq!(pca.eigenvalues()[1], 0.0);
        let s = 1.0 / 3f64.sqrt();
        for c in &pca.components()[0] {
            assert_abs_diff_eq!(*c, s, epsilon = 1e-12);
        }
        assert!(projected.iter().all(|p| p[1] == 0.0));
    }

    #[test]
    fn identical_points_fully_degenerate() {
        let emb = EmbeddingMatrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        let (pca, projected) = pca_2d(&emb).unwrap();
        assert!(pca.is_degenerate());
        assert!(pca.components().iter().all(|c| c.iter().all(|&x| x == 0.0)));
        assert!(projected.iter().all(|p| *p == [0.0, 0.0]));
    }

    #[test]
    fn rejects_bad_shapes() {
        let one = EmbeddingMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(pca_2d(&one).is_err());
        let flat = EmbeddingMatrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(pca_2d(&flat).is_err());
    }

    #[test]
    fn translation_invariant() {
        let rows = [[0.3, 1.2, -0.5], [1.1, 0.2, 0.7], [-0.4, 0.9, 1.5], [2.0, -1.0, 0.1], [0.5, 0.5, 0.5]];
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x + 10.0).collect()).collect();
        let (a, pa) = pca_2d(&EmbeddingMatrix::from_rows(&rows).unwrap()).unwrap();
        let (b, pb) = pca_2d(&EmbeddingMatrix::from_rows(&shifted).unwrap()).unwrap();
        for c in 0..2 {
            for (x, y) in a.components()[c].iter().zip(&b.components()[c]) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
        for (x, y) in pa.iter().zip(&pb) {
            assert_abs_diff_eq!(x[0], y[0], epsilon = 1e-9);
            assert_abs_diff_eq!(x[1], y[1], epsilon = 1e-9);
        }
    }
}
