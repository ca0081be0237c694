//! Full-covariance Gaussian mixture with batch EM and stepwise online EM.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{invalid, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Running (normalised) sufficient statistics of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    pub s0: f64,
    pub s1: DVector<f64>,
    pub s2: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct Component {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl Component {
    pub fn new(weight: f64, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return invalid("covariance shape does not match mean");
        }
        let chol = match Cholesky::new(cov.clone()) {
            Some(c) => c,
            None => return invalid("covariance is not positive definite"),
        };
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let log_norm = -0.5 * (d as f64 * LN_2PI + log_det);
        Ok(Self {
            weight,
            mean,
            cov,
            chol,
            log_norm,
        })
    }

    /// Log of the normal density (without the mixture weight).
    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, m)| a - m));
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("cholesky factor is non-singular");
        self.log_norm - 0.5 * z.norm_squared()
    }
}

#[derive(Debug, Clone)]
pub struct Gmm {
    dim: usize,
    components: Vec<Component>,
    stats: Vec<SuffStats>,
    ridge: f64,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Gmm {
    /// Builds a mixture from explicit parameters. `ridge` is only used by
    /// later EM updates.
    pub fn from_params(weights: &[f64], means: &[Vec<f64>], covs: &[Vec<f64>], ridge: f64) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || means.len() != covs.len() {
            return invalid("mixture needs matching, non-empty weight/mean/cov lists");
        }
        let dim = means[0].len();
        if dim == 0 {
            return invalid("mixture dimension must be positive");
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !(*w > 0.0)) {
            return invalid("mixture weights must be positive");
        }
        let mut components = Vec::with_capacity(weights.len());
        for ((w, m), c) in weights.iter().zip(means).zip(covs) {
            if m.len() != dim || c.len() != dim * dim {
                return invalid("component dimension mismatch");
            }
            components.push(Component::new(
                w / total,
                DVector::from_column_slice(m),
                DMatrix::from_row_slice(dim, dim, c),
            )?);
        }
        let stats = components.iter().map(stats_from_component).collect();
        Ok(Self {
            dim,
            components,
            stats,
            ridge,
        })
    }

    /// k-means++ seeded means, shared isotropic covariance at the data's
    /// per-dimension variance, uniform weights.
    pub fn seeded<R: Rng>(data: &[Vec<f64>], k: usize, ridge_rel: f64, rng: &mut R) -> Result<Self> {
        if data.is_empty() || k == 0 {
            return invalid("seeding needs data and at least one component");
        }
        let dim = data[0].len();
        if dim == 0 || data.iter().any(|x| x.len() != dim) {
            return invalid("inconsistent data dimension");
        }
        let n = data.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|j| data.iter().map(|x| x[j]).sum::<f64>() / n).collect();
        let var = data
            .iter()
            .map(|x| x.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>())
            .sum::<f64>()
            / (n * dim as f64);
        let var = if var > 0.0 && var.is_finite() { var } else { 1.0 };
        let ridge = ridge_rel * var;

        let mut centres: Vec<&Vec<f64>> = vec![&data[rng.random_range(0..data.len())]];
        let mut d2: Vec<f64> = data.iter().map(|x| sq_dist(x, centres[0])).collect();
        while centres.len() < k {
            let total: f64 = d2.iter().sum();
            let pick = if total > 0.0 {
                let mut u = rng.random::<f64>() * total;
                let mut idx = data.len() - 1;
                for (i, w) in d2.iter().enumerate() {
                    if u < *w {
                        idx = i;
                        break;
                    }
                    u -= w;
                }
                idx
            } else {
                rng.random_range(0..data.len())
            };
            centres.push(&data[pick]);
            for (i, x) in data.iter().enumerate() {
                d2[i] = d2[i].min(sq_dist(x, &data[pick]));
            }
        }
        let cov = DMatrix::<f64>::identity(dim, dim) * (var + ridge);
        let components = centres
            .into_iter()
            .map(|c| Component::new(1.0 / k as f64, DVector::from_column_slice(c), cov.clone()))
            .collect::<Result<Vec<_>>>()?;
        let stats = components.iter().map(stats_from_component).collect();
        Ok(Self {
            dim,
            components,
            stats,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn stats(&self) -> &[SuffStats] {
        &self.stats
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return invalid(format!("point has dimension {}, mixture has {}", x.len(), self.dim));
        }
        Ok(self.log_density_unchecked(x))
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.log_density(x).map(f64::exp)
    }

    fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.log_pdf(x))
            .collect();
        log_sum_exp(&terms)
    }

    /// Posterior component probabilities and the point's log density.
    fn responsibilities(&self, x: &[f64], out: &mut [f64]) -> f64 {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.weight.ln() + c.log_pdf(x);
        }
        let lse = log_sum_exp(out);
        for o in out.iter_mut() {
            *o = (*o - lse).exp();
        }
        lse
    }

    pub fn log_likelihood(&self, data: &[Vec<f64>]) -> Result<f64> {
        data.iter().map(|x| self.log_density(x)).sum()
    }

    /// Batch-averaged sufficient statistics of `data` under the current parameters.
    fn batch_stats(&self, data: &[Vec<f64>]) -> (Vec<SuffStats>, f64) {
        let k = self.components.len();
        let d = self.dim;
        let mut acc: Vec<SuffStats> = (0..k)
            .map(|_| SuffStats {
                s0: 0.0,
                s1: DVector::zeros(d),
                s2: DMatrix::zeros(d, d),
            })
            .collect();
        let mut resp = vec![0.0; k];
        let mut ll = 0.0;
        for x in data {
            ll += self.responsibilities(x, &mut resp);
            let xv = DVector::from_column_slice(x);
            let outer = &xv * xv.transpose();
            for (a, &r) in acc.iter_mut().zip(&resp) {
                a.s0 += r;
                a.s1.axpy(r, &xv, 1.0);
                a.s2 += &outer * r;
            }
        }
        let n = data.len() as f64;
        for a in &mut acc {
            a.s0 /= n;
            a.s1 /= n;
            a.s2 /= n;
        }
        (acc, ll)
    }

    fn set_from_stats(&mut self) -> Result<()> {
        let total: f64 = self.stats.iter().map(|s| s.s0).sum();
        let d = self.dim;
        let mut comps = Vec::with_capacity(self.stats.len());
        for s in &self.stats {
            let s0 = s.s0.max(f64::MIN_POSITIVE);
            let mean = &s.s1 / s0;
            let mut cov = &s.s2 / s0 - &mean * mean.transpose();
            // symmetrise, then ridge
            cov = (&cov + cov.transpose()) * 0.5;
            for i in 0..d {
                cov[(i, i)] += self.ridge;
            }
            let weight = (s.s0 / total).max(f64::MIN_POSITIVE);
            let comp = match Component::new(weight, mean.clone(), cov) {
                Ok(c) => c,
                // numerically collapsed component: fall back to a ridge ball
                Err(_) => Component::new(weight, mean, DMatrix::identity(d, d) * self.ridge.max(1e-12))?,
            };
            comps.push(comp);
        }
        let wsum: f64 = comps.iter().map(|c| c.weight).sum();
        for c in &mut comps {
            c.weight /= wsum;
        }
        self.components = comps;
        Ok(())
    }

    /// One full-batch EM iteration. Returns the data log-likelihood under
    /// the parameters before the update.
    pub fn em_step(&mut self, data: &[Vec<f64>]) -> Result<f64> {
        if data.is_empty() {
            return invalid("EM needs data");
        }
        if data.iter().any(|x| x.len() != self.dim) {
            return invalid("data dimension mismatch");
        }
        let (stats, ll) = self.batch_stats(data);
        self.stats = stats;
        self.set_from_stats()?;
        Ok(ll)
    }

    /// Stepwise EM: blends the batch statistics into the running ones with
    /// step size `rho` and re-derives the parameters.
    pub fn online_step(&mut self, data: &[Vec<f64>], rho: f64) -> Result<()> {
        if data.is_empty() {
            return Ok(());
        }
        if data.iter().any(|x| x.len() != self.dim) {
            return invalid("data dimension mismatch");
        }
        let (batch, _) = self.batch_stats(data);
        for (s, b) in self.stats.iter_mut().zip(batch) {
            s.s0 = (1.0 - rho) * s.s0 + rho * b.s0;
            s.s1 = &s.s1 * (1.0 - rho) + b.s1 * rho;
            s.s2 = &s.s2 * (1.0 - rho) + b.s2 * rho;
        }
        self.set_from_stats()
    }

    /// Restores a mixture from checkpointed parameters and statistics.
    pub(crate) fn restore(components: Vec<Component>, stats: Vec<SuffStats>, ridge: f64) -> Result<Self> {
        let dim = components.first().map(|c| c.mean.len()).unwrap_or(0);
        if dim == 0 || components.len() != stats.len() {
            return invalid("malformed mixture checkpoint");
        }
        Ok(Self {
            dim,
            components,
            stats,
            ridge,
        })
    }
}

fn stats_from_component(c: &Component) -> SuffStats {
    SuffStats {
        s0: c.weight,
        s1: &c.mean * c.weight,
        s2: (&c.cov + &c.mean * c.mean.transpose()) * c.weight,
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal_pdf(x: f64, mu: f64, var: f64) -> f64 {
        (-(x - mu) * (x - mu) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    #[test]
    fn standard_normal_peak() {
        let g = Gmm::from_params(&[1.0], &[vec![0.0]], &[vec![1.0]], 0.0).unwrap();
        assert!((g.density(&[0.0]).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn duplicated_component_matches_single() {
        let one = Gmm::from_params(&[1.0], &[vec![0.3, -1.0]], &[vec![2.0, 0.5, 0.5, 1.0]], 0.0).unwrap();
        let two = Gmm::from_params(
            &[0.5, 0.5],
            &[vec![0.3, -1.0], vec![0.3, -1.0]],
            &[vec![2.0, 0.5, 0.5, 1.0], vec![2.0, 0.5, 0.5, 1.0]],
            0.0,
        )
        .unwrap();
        for x in [[0.0, 0.0], [1.0, -2.0], [3.0, 4.0]] {
            let a = one.density(&x).unwrap();
            let b = two.density(&x).unwrap();
            assert!((a - b).abs() <= 1e-14 * a.max(1e-300));
        }
    }

    #[test]
    fn two_component_closed_form() {
        let g = Gmm::from_params(&[0.3, 0.7], &[vec![0.0], vec![2.0]], &[vec![1.0], vec![1.0]], 0.0).unwrap();
        let expected = 0.3 * normal_pdf(1.0, 0.0, 1.0) + 0.7 * normal_pdf(1.0, 2.0, 1.0);
        assert!((g.density(&[1.0]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn correlated_bivariate_matches_closed_form() {
        // rho = 0.5, unit variances
        let g = Gmm::from_params(&[1.0], &[vec![0.0, 0.0]], &[vec![1.0, 0.5, 0.5, 1.0]], 0.0).unwrap();
        let (x, y, r) = (0.7f64, -0.2f64, 0.5f64);
        let q = (x * x - 2.0 * r * x * y + y * y) / (1.0 - r * r);
        let expected = (-q / 2.0).exp() / (2.0 * std::f64::consts::PI * (1.0 - r * r).sqrt());
        assert!((g.density(&[x, y]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = Gmm::from_params(&[1.0], &[vec![0.0]], &[vec![1.0]], 0.0).unwrap();
        assert!(g.density(&[0.0, 1.0]).is_err());
        assert!(Gmm::from_params(&[1.0], &[vec![0.0]], &[vec![-1.0]], 0.0).is_err());
    }
}
