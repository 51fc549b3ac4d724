//! Gaussian-blob stand-in for frozen backbone features.

use rand_distr::{Distribution, StandardNormal};

use crate::cil::ClassId;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::rpl::seeded_rng;

/// Jitter added to duplicated feature dimensions.
pub const REDUNDANCY_JITTER: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub feature_dim: usize,
    /// Standard deviation of samples around their class mean.
    pub cluster_spread: f64,
    /// Standard deviation of the class means themselves.
    pub center_scale: f64,
    /// Mean drift per drift group along one seeded unit direction.
    pub domain_gap: f64,
    /// Classes are cut into this many consecutive groups; group `k` is shifted by `k·domain_gap`.
    pub drift_groups: usize,
    /// Trailing dimensions that copy leading ones (plus jitter).
    pub redundancy: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 10,
            train_per_class: 50,
            test_per_class: 20,
            feature_dim: 16,
            cluster_spread: 0.5,
            center_scale: 1.0,
            domain_gap: 0.0,
            drift_groups: 1,
            redundancy: 0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.classes,
            self.train_per_class,
            self.test_per_class,
            self.feature_dim,
            self.drift_groups,
        ];
        if counts.contains(&0) {
            return Err(Error::InvalidParameter("synthetic counts must all be >= 1".into()));
        }
        for (name, v) in [
            ("cluster_spread", self.cluster_spread),
            ("center_scale", self.center_scale),
            ("domain_gap", self.domain_gap),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.redundancy >= self.feature_dim {
            return Err(Error::InvalidParameter(format!(
                "redundancy ({}) must be < feature_dim ({})",
                self.redundancy, self.feature_dim
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub train_features: DenseMatrix,
    pub train_labels: Vec<ClassId>,
    pub test_features: DenseMatrix,
    pub test_labels: Vec<ClassId>,
    /// Class means before redundancy is applied, `classes × (d − redundancy)`.
    pub means: DenseMatrix,
}

/// Draws the dataset described by `spec`; a pure function of `spec`.
///
/// Draw order: class means, drift direction, then train and test samples
/// class by class, then redundancy jitter.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let base = spec.feature_dim - spec.redundancy;
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut means = DenseMatrix::from_fn(spec.classes, base, |_, _| 0.0);
    for v in means.as_mut_slice() {
        *v = spec.center_scale * normal();
    }
    let mut direction: Vec<f64> = (0..base).map(|_| normal()).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        direction.iter_mut().for_each(|v| *v /= norm);
    }
    for c in 0..spec.classes {
        let group = c * spec.drift_groups / spec.classes;
        let shift = spec.domain_gap * group as f64;
        for (m, dir) in means.row_mut(c).iter_mut().zip(&direction) {
            *m += shift * dir;
        }
    }

    let draw = |per_class: usize, normal: &mut dyn FnMut() -> f64| {
        let mut data = Vec::with_capacity(spec.classes * per_class * base);
        let mut labels = Vec::with_capacity(spec.classes * per_class);
        for c in 0..spec.classes {
            for _ in 0..per_class {
                for &m in means.row(c) {
                    data.push(m + spec.cluster_spread * normal());
                }
                labels.push(c as ClassId);
            }
        }
        (DenseMatrix::from_vec(labels.len(), base, data), labels)
    };
    let (train, train_labels) = draw(spec.train_per_class, &mut normal);
    let (test, test_labels) = draw(spec.test_per_class, &mut normal);
    let train_features = add_redundancy(&train?, spec.redundancy, &mut normal);
    let test_features = add_redundancy(&test?, spec.redundancy, &mut normal);

    Ok(SyntheticData {
        train_features,
        train_labels,
        test_features,
        test_labels,
        means,
    })
}

fn add_redundancy(x: &DenseMatrix, redundancy: usize, normal: &mut dyn FnMut() -> f64) -> DenseMatrix {
    if redundancy == 0 {
        return x.clone();
    }
    let base = x.cols();
    let mut out = DenseMatrix::zeros(x.rows(), base + redundancy);
    for i in 0..x.rows() {
        let src = x.row(i);
        let dst = out.row_mut(i);
        dst[..base].copy_from_slice(src);
        for k in 0..redundancy {
            dst[base + k] = src[k % base] + REDUNDANCY_JITTER * normal();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eigen_extremes;

    #[test]
    fn zero_spread_gives_class_means() {
        let spec = SyntheticSpec {
            cluster_spread: 0.0,
            classes: 3,
            train_per_class: 4,
            test_per_class: 2,
            feature_dim: 5,
            ..SyntheticSpec::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        for (i, &c) in data.train_labels.iter().enumerate() {
            assert_eq!(data.train_features.row(i), data.means.row(c as usize));
        }
        assert_eq!(data.test_features.rows(), 6);
    }

    #[test]
    fn redundancy_limits_covariance_rank() {
        let spec = SyntheticSpec {
            feature_dim: 12,
            redundancy: 5,
            train_per_class: 40,
            ..SyntheticSpec::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        let x = &data.train_features;
        let n = x.rows() as f64;
        let mean: Vec<f64> = (0..x.cols()).map(|j| x.column(j).iter().sum::<f64>() / n).collect();
        let centred = DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] - mean[j]);
        let cov = centred.gram().scale(1.0 / (n - 1.0));
        // Eigenvalues beyond rank d - r are of jitter size only.
        let full = nalgebra::DMatrix::from_row_slice(12, 12, cov.as_slice()).symmetric_eigenvalues();
        let mut eig: Vec<f64> = full.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(eig[6] > 1e-2);
        assert!(eig[7..].iter().all(|&v| v.abs() < 1e-10), "{eig:?}");
        assert!(eigen_extremes(&cov).unwrap().0 < 1e-10);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec {
            domain_gap: 2.0,
            drift_groups: 3,
            redundancy: 2,
            ..SyntheticSpec::default()
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 1, ..spec.clone() };
        assert_ne!(generate_synthetic(&spec).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn drift_shifts_later_groups() {
        let base = SyntheticSpec {
            classes: 4,
            drift_groups: 2,
            ..SyntheticSpec::default()
        };
        let drifted = SyntheticSpec { domain_gap: 3.0, ..base.clone() };
        let a = generate_synthetic(&base).unwrap().means;
        let b = generate_synthetic(&drifted).unwrap().means;
        assert_eq!(a.row(0), b.row(0));
        let shift: f64 = a.row(3).iter().zip(b.row(3)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!((shift - 3.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_synthetic(&SyntheticSpec { classes: 0, ..Default::default() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { redundancy: 16, ..Default::default() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { cluster_spread: -1.0, ..Default::default() }).is_err());
    }
}
