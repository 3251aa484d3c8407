//! Ground-truth covariance synthesis for Laplacian-structured Gaussians.
//!
//! Samples are drawn from the degenerate Gaussian `N(0, L†)` on `1⊥`, whose
//! precision on that subspace is the Laplacian `L`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymEig};

const NULL_TOL: f64 = 1e-9;

/// Eigendecomposition of a connected Laplacian with its null direction located.
fn laplacian_spectrum(l: &DMatrix<f64>) -> Result<SymEig> {
    let eig = sym_eig(l)?;
    let n = eig.values.len();
    if n == 0 {
        return Err(Error::Dimension("empty Laplacian".into()));
    }
    let lmax = eig.values[n - 1].abs().max(f64::MIN_POSITIVE);
    if eig.values[0].abs() >= NULL_TOL * lmax {
        return Err(Error::InvalidParameter(format!(
            "smallest eigenvalue {:.3e} is not a null eigenvalue; input is not a Laplacian",
            eig.values[0]
        )));
    }
    if n > 1 && eig.values[1] < NULL_TOL * lmax {
        return Err(Error::Disconnected(format!(
            "second eigenvalue {:.3e} vanishes",
            eig.values[1]
        )));
    }
    Ok(eig)
}

fn pinv_map(eig: &SymEig, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    // index 0 is the null eigenvalue
    let mut scaled = eig.vectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= if k == 0 { 0.0 } else { f(eig.values[k]) };
    }
    let m = scaled * eig.vectors.transpose();
    (&m + m.transpose()) * 0.5
}

/// Moore–Penrose pseudo-inverse `L†` of a connected graph Laplacian.
pub fn population_covariance(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = laplacian_spectrum(l)?;
    Ok(pinv_map(&eig, |v| 1.0 / v))
}

/// How the sample covariance is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Summation of `k` explicit draws `x_t = L†^{1/2} z_t`.
    Direct,
    /// `L†^{1/2} W L†^{1/2} / k` with `W ~ Wishart(I, k)` drawn by the Bartlett
    /// decomposition. Same distribution as `Direct`, `O(n³)` instead of `O(kn²)`.
    Bartlett,
    /// `Direct` for small `k·n²` (or `k < n`), otherwise `Bartlett`.
    Auto,
}

/// Sample covariance `S = (1/k) Σ x_t x_tᵀ` of `k` draws from `N(0, L†)`.
pub fn sample_covariance(l: &DMatrix<f64>, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    sample_covariance_with(l, k, seed, SamplingMethod::Auto)
}

pub fn sample_covariance_with(
    l: &DMatrix<f64>,
    k: usize,
    seed: u64,
    method: SamplingMethod,
) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "sample size must be positive".into(),
        ));
    }
    let eig = laplacian_spectrum(l)?;
    let root = pinv_map(&eig, |v| 1.0 / v.sqrt());
    let n = l.nrows();
    let method = match method {
        SamplingMethod::Auto if k < n || (k as f64) * (n * n) as f64 <= 2e7 => {
            SamplingMethod::Direct
        }
        SamplingMethod::Auto => SamplingMethod::Bartlett,
        m => m,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scatter = match method {
        SamplingMethod::Direct => {
            // Chunked so that the n×k draw matrix stays small.
            let mut acc = DMatrix::zeros(n, n);
            let chunk = 4096usize;
            let mut done = 0;
            while done < k {
                let m = chunk.min(k - done);
                let mut z = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
                for mut col in z.column_iter_mut() {
                    let mean = col.mean();
                    col.add_scalar_mut(-mean);
                }
                acc.gemm(1.0, &z, &z.transpose(), 1.0);
                done += m;
            }
            acc
        }
        SamplingMethod::Bartlett => {
            if k < n {
                return Err(Error::InvalidParameter(format!(
                    "Bartlett sampling needs k >= n (k = {k}, n = {n})"
                )));
            }
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                let chi = ChiSquared::new((k - i) as f64)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                a[(i, i)] = chi.sample(&mut rng).sqrt();
                for j in 0..i {
                    a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
                }
            }
            &a * a.transpose()
        }
        SamplingMethod::Auto => unreachable!(),
    };
    let s = &root * scatter * &root / k as f64;
    Ok((&s + s.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi, sample_weights, EdgeGraph};
    use nalgebra::DVector;

    fn random_laplacian(n: usize, seed: u64) -> DMatrix<f64> {
        let g = erdos_renyi(n, 0.7, seed).unwrap();
        assert!(g.is_connected());
        sample_weights(&g, 0.1, 3.0, seed)
            .unwrap()
            .laplacian()
            .unwrap()
    }

    #[test]
    fn pinv_annihilates_ones_and_is_generalized_inverse() {
        let l = random_laplacian(6, 1);
        let p = population_covariance(&l).unwrap();
        assert!((&p * DVector::from_element(6, 1.0)).norm() < 1e-12);
        assert!((&l * &p * &l - &l).norm() < 1e-10);
    }

    #[test]
    fn pinv_matches_shifted_inverse_identity() {
        // (L + J)⁻¹ − J = L† for connected L.
        let n = 6;
        let l = random_laplacian(n, 2);
        let j = DMatrix::from_element(n, n, 1.0 / n as f64);
        let via_shift = (&l + &j).try_inverse().unwrap() - &j;
        let p = population_covariance(&l).unwrap();
        assert!((via_shift - p).norm() < 1e-10);
    }

    #[test]
    fn pinv_two_node_path() {
        let l = EdgeGraph::with_weights(2, [(0, 1, 1.0)])
            .unwrap()
            .laplacian()
            .unwrap();
        let p = population_covariance(&l).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]);
        assert!((p - expected).norm() < 1e-14);
    }

    #[test]
    fn disconnected_rejected() {
        let l = EdgeGraph::with_weights(4, [(0, 1, 1.0), (2, 3, 1.0)])
            .unwrap()
            .laplacian()
            .unwrap();
        assert!(matches!(
            population_covariance(&l),
            Err(Error::Disconnected(_))
        ));
        assert!(sample_covariance(&l, 10, 1).is_err());
    }

    #[test]
    fn sample_covariance_psd_and_null() {
        let l = random_laplacian(8, 3);
        let s = sample_covariance(&l, 500, 4).unwrap();
        assert!((&s * DVector::from_element(8, 1.0)).norm() < 1e-10);
        let min_eig = s.symmetric_eigenvalues().min();
        assert!(min_eig > -1e-10);
        assert_eq!(s, sample_covariance(&l, 500, 4).unwrap());
        assert!(sample_covariance(&l, 0, 4).is_err());
    }

    #[test]
    fn sample_covariance_converges() {
        let l = random_laplacian(10, 5);
        let p = population_covariance(&l).unwrap();
        let rel = |k| {
            let s = sample_covariance_with(&l, k, 6, SamplingMethod::Direct).unwrap();
            (s - &p).norm() / p.norm()
        };
        assert!(rel(10_000) < rel(100));
    }

    #[test]
    fn bartlett_matches_direct_in_distribution() {
        // Averaged over replicates both estimators concentrate on L†.
        let l = random_laplacian(6, 7);
        let p = population_covariance(&l).unwrap();
        let k = 200;
        let reps = 200;
        let mut mean_d = DMatrix::zeros(6, 6);
        let mut mean_b = DMatrix::zeros(6, 6);
        for r in 0..reps {
            mean_d += sample_covariance_with(&l, k, r, SamplingMethod::Direct).unwrap();
            mean_b += sample_covariance_with(&l, k, 1000 + r, SamplingMethod::Bartlett).unwrap();
        }
        mean_d /= reps as f64;
        mean_b /= reps as f64;
        // relative standard error of the mean is ~ sqrt(2/(k·reps)) = 0.007
        assert!((&mean_d - &p).norm() / p.norm() < 0.04);
        assert!((&mean_b - &p).norm() / p.norm() < 0.04);
        let b = sample_covariance_with(&l, k, 3, SamplingMethod::Bartlett).unwrap();
        assert!((&b * DVector::from_element(6, 1.0)).norm() < 1e-10);
    }
}
