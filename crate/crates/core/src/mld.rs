//! Gaussian maximum-likelihood baseline: one multivariate normal per class,
//! decisions by the largest log-density (uniform priors).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dataset::LabeledDataset;
use crate::model::{ModelBlob, ModelKind};
use crate::modulation::ModulationScheme;
use crate::{argmax_first, Decision, Demodulator, Error, Result};

/// Ridge scale relative to the mean variance.
pub const RIDGE_SCALE: f64 = 1e-6;
/// Smallest ridge, used when a class has (numerically) zero spread.
pub const RIDGE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ClassGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl ClassGaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(cov.clone())
            .ok_or_else(|| Error::Degenerate("covariance is not positive definite".into()))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(ClassGaussian {
            mean,
            cov,
            chol,
            log_det,
        })
    }

    /// `ln N(x; μ, Σ)`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let n = self.mean.len();
        let diff = DVector::from_column_slice(x) - &self.mean;
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + self.log_det + z.norm_squared())
    }
}

impl PartialEq for ClassGaussian {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.cov == other.cov
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MldParams {
    scheme: ModulationScheme,
    classes: Vec<ClassGaussian>,
}

/// Sample mean and unbiased covariance plus `λI`,
/// `λ = max(10⁻⁶ · trace / N, floor)`.
pub fn class_moments(frames: &[&[f64]], n: usize) -> (DVector<f64>, DMatrix<f64>) {
    let count = frames.len() as f64;
    let mut mean = DVector::zeros(n);
    for f in frames {
        mean += DVector::from_column_slice(f);
    }
    mean /= count;
    let mut cov = DMatrix::zeros(n, n);
    for f in frames {
        let d = DVector::from_column_slice(f) - &mean;
        cov.ger(1.0, &d, &d, 1.0);
    }
    cov /= count - 1.0;
    let lambda = (RIDGE_SCALE * cov.trace() / n as f64).max(RIDGE_FLOOR);
    for i in 0..n {
        cov[(i, i)] += lambda;
    }
    (mean, cov)
}

impl MldParams {
    pub fn fit(train: &LabeledDataset) -> Result<Self> {
        let m = train.scheme().alphabet_size();
        let n = train.n();
        let mut by_class: Vec<Vec<&[f64]>> = vec![Vec::new(); m];
        for (frame, label) in train.iter() {
            by_class[usize::from(label) - 1].push(frame);
        }
        let classes = by_class
            .iter()
            .enumerate()
            .map(|(c, frames)| {
                if frames.len() < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "class {} has {} samples; need at least 2",
                        c + 1,
                        frames.len()
                    )));
                }
                let (mean, cov) = class_moments(frames, n);
                ClassGaussian::new(mean, cov)
            })
            .collect::<Result<_>>()?;
        Ok(MldParams {
            scheme: train.scheme(),
            classes,
        })
    }

    pub fn from_classes(scheme: ModulationScheme, classes: Vec<ClassGaussian>) -> Result<Self> {
        if classes.len() != scheme.alphabet_size() {
            return Err(Error::DimensionMismatch {
                expected: scheme.alphabet_size(),
                actual: classes.len(),
            });
        }
        Ok(MldParams { scheme, classes })
    }

    pub fn classes(&self) -> &[ClassGaussian] {
        &self.classes
    }

    pub fn n(&self) -> usize {
        self.classes[0].mean.len()
    }

    pub fn log_densities(&self, frame: &[f64]) -> Vec<f64> {
        self.classes.iter().map(|c| c.log_density(frame)).collect()
    }

    pub fn to_blob(&self) -> ModelBlob {
        let n = self.n();
        let m = self.classes.len();
        let mut blob = ModelBlob::new(ModelKind::Mld, self.scheme, n);
        blob.push_f64(
            "means",
            &[m, n],
            self.classes.iter().flat_map(|c| c.mean.iter().copied()).collect(),
        );
        // Column-major storage of a symmetric matrix is also row-major.
        blob.push_f64(
            "covariances",
            &[m, n, n],
            self.classes.iter().flat_map(|c| c.cov.iter().copied()).collect(),
        );
        blob
    }

    pub fn from_blob(blob: &ModelBlob) -> Result<Self> {
        let n = usize::from(blob.n);
        let m = blob.scheme.alphabet_size();
        let (md, means) = blob.f64("means")?;
        let (cd, covs) = blob.f64("covariances")?;
        if md != [m, n] || cd != [m, n, n] {
            return Err(Error::Parse {
                offset: 0,
                message: "MLD tensor shapes do not match the header".into(),
            });
        }
        let classes = means
            .chunks_exact(n)
            .zip(covs.chunks_exact(n * n))
            .map(|(mu, c)| ClassGaussian::new(DVector::from_column_slice(mu), DMatrix::from_column_slice(n, n, c)))
            .collect::<Result<_>>()?;
        Self::from_classes(blob.scheme, classes)
    }
}

impl Demodulator for MldParams {
    fn scheme(&self) -> ModulationScheme {
        self.scheme
    }

    fn classify(&self, frame: &[f64]) -> Result<Decision> {
        if frame.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: frame.len(),
            });
        }
        Ok(Decision::from_label(argmax_first(&self.log_densities(frame)) as u16 + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(frames: &[[f64; 2]], labels: &[u16]) -> LabeledDataset {
        LabeledDataset::from_parts(
            ModulationScheme::Ook,
            2,
            frames.iter().flatten().copied().collect(),
            labels.to_vec(),
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn mean_of_two_points() {
        let (mu, _) = class_moments(&[&[0.0, 0.0], &[1.0, 1.0]], 2);
        assert_eq!(mu.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn duplicated_samples_give_the_ridge_floor() {
        let (_, cov) = class_moments(&[&[0.3, 0.7], &[0.3, 0.7], &[0.3, 0.7]], 2);
        assert_eq!(cov, DMatrix::identity(2, 2) * RIDGE_FLOOR);
    }

    #[test]
    fn midpoint_ties_to_first_class() {
        let p = MldParams::fit(&ds(
            &[[0.0, 0.0], [0.25, 0.25], [0.75, 0.75], [1.0, 1.0]],
            &[1, 1, 2, 2],
        ))
        .unwrap();
        assert_eq!(p.classify(&[0.5, 0.5]).unwrap().label, 1);
        assert_eq!(p.classify(&[0.1, 0.1]).unwrap().label, 1);
        assert_eq!(p.classify(&[0.9, 0.9]).unwrap().label, 2);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let r = MldParams::fit(&ds(&[[0.0, 0.0], [0.2, 0.2], [0.8, 0.8]], &[1, 1, 2]));
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn blob_round_trip() {
        let p = MldParams::fit(&ds(
            &[[0.0, 0.1], [0.2, 0.25], [0.1, 0.0], [0.8, 0.7], [1.0, 0.9], [0.7, 1.0]],
            &[1, 1, 1, 2, 2, 2],
        ))
        .unwrap();
        let back = MldParams::from_blob(&ModelBlob::from_bytes(&p.to_blob().to_bytes()).unwrap()).unwrap();
        assert_eq!(back, p);
        for q in [[0.3, 0.3], [0.6, 0.5]] {
            assert_eq!(back.log_densities(&q), p.log_densities(&q));
        }
    }
}
