//! The three objective functions: modified least squares with centering
//! (PMLS), ordinary least squares with an explicit intercept (POLS), and the
//! raw-scale additive baseline. All carry the same penalty machinery.
//!
//! The centering matrix I - 11'/n is never materialized; centering is
//! subtract-the-mean, O(n).

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec, Scale};
use crate::penalty::PenaltySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Penalized modified least squares on log-scale responses.
    Pmls,
    /// Penalized ordinary least squares with an unpenalized intercept,
    /// on log-scale responses.
    Pols,
    /// Penalized least squares directly on the raw response.
    Additive,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Pmls => "pmls",
            Method::Pols => "pols",
            Method::Additive => "additive",
        };
        f.write_str(s)
    }
}

impl Method {
    pub fn required_scale(&self) -> Scale {
        match self {
            Method::Pmls | Method::Pols => Scale::Log,
            Method::Additive => Scale::Raw,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Method::Pmls => "PMLS",
            Method::Pols => "POLS",
            Method::Additive => "Additive",
        }
    }

    /// True when the parameter vector carries a leading intercept beta_0.
    pub fn has_intercept(&self) -> bool {
        matches!(self, Method::Pols)
    }
}

/// An estimation method bound to a mean function and penalty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub method: Method,
    pub model: ModelSpec,
    pub penalty: PenaltySpec,
    /// Theta indices exempt from the penalty sum (the POLS intercept is
    /// structurally exempt and not listed here).
    #[serde(default)]
    pub penalty_exempt: Vec<usize>,
}

impl ObjectiveSpec {
    pub fn new(method: Method, model: ModelSpec, penalty: PenaltySpec) -> Self {
        Self { method, model, penalty, penalty_exempt: Vec::new() }
    }

    pub fn with_penalty_exempt(mut self, exempt: Vec<usize>) -> Self {
        self.penalty_exempt = exempt;
        self
    }

    /// Length of the parameter vector: p, plus one for the POLS intercept.
    pub fn params_len(&self) -> usize {
        self.model.dimension + usize::from(self.method.has_intercept())
    }

    /// Splits a parameter vector into (intercept, theta).
    pub fn split_params<'a>(&self, params: ArrayView1<'a, f64>) -> (f64, ArrayView1<'a, f64>) {
        if self.method.has_intercept() {
            (params[0], params.slice_move(ndarray::s![1..]))
        } else {
            (0.0, params)
        }
    }

    pub fn is_penalized(&self, theta_index: usize) -> bool {
        !self.penalty_exempt.contains(&theta_index)
    }

    pub fn check_scale(&self, data: &Dataset) -> Result<()> {
        let required = self.method.required_scale();
        if data.scale() != required {
            return Err(Error::ScaleMismatch {
                method: self.method.name(),
                found: data.scale(),
                required,
            });
        }
        Ok(())
    }

    /// Raw (and, for PMLS, centered) residuals at the given parameters.
    pub fn residuals(&self, data: &Dataset, params: ArrayView1<f64>) -> Result<Residuals> {
        self.check_scale(data)?;
        let (beta0, theta) = self.split_params(params);
        let g = self.model.evaluate(data, theta)?;
        let mut raw = data.response() - &g;
        if self.method.has_intercept() {
            raw -= beta0;
        }
        let centered = match self.method {
            Method::Pmls => Some(center(raw.view())),
            _ => None,
        };
        Ok(Residuals { raw, centered })
    }

    /// Sum over the penalized coordinates of p_lambda(|theta_j|); the
    /// objective scales this by n.
    pub fn penalty_sum(&self, theta: ArrayView1<f64>) -> Result<f64> {
        let mut total = 0.0;
        for (j, &t) in theta.iter().enumerate() {
            if self.is_penalized(j) {
                total += self.penalty.value(t.abs())?;
            }
        }
        Ok(total)
    }

    /// Q_n: smooth part plus n * penalty sum.
    pub fn objective_value(&self, data: &Dataset, params: ArrayView1<f64>) -> Result<f64> {
        let smooth = self.smooth_value(data, params)?;
        let (_, theta) = self.split_params(params);
        Ok(smooth + data.n() as f64 * self.penalty_sum(theta)?)
    }

    /// The un-penalized part: S_n for PMLS, plain sums of squares otherwise.
    pub fn smooth_value(&self, data: &Dataset, params: ArrayView1<f64>) -> Result<f64> {
        let residuals = self.residuals(data, params)?;
        Ok(smooth_from_residuals(self.method, &residuals))
    }

    /// Gradient of the smooth part with respect to the full parameter vector
    /// (POLS: intercept component first). The penalty part is nonsmooth and
    /// handled inside the solver, never here.
    pub fn objective_gradient(&self, data: &Dataset, params: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_scale(data)?;
        let (beta0, theta) = self.split_params(params);
        let g = self.model.evaluate(data, theta)?;
        let jac = self.model.gradient(data, theta)?;
        let mut r = data.response() - &g;
        if self.method.has_intercept() {
            r -= beta0;
        }
        match self.method {
            Method::Pmls => {
                let rc = center(r.view());
                Ok(-2.0 * jac.t().dot(&rc))
            }
            Method::Pols => {
                let mut grad = Array1::zeros(self.params_len());
                grad[0] = -2.0 * r.sum();
                let theta_grad = -2.0 * jac.t().dot(&r);
                grad.slice_mut(ndarray::s![1..]).assign(&theta_grad);
                Ok(grad)
            }
            Method::Additive => Ok(-2.0 * jac.t().dot(&r)),
        }
    }
}

/// Raw residuals and, for PMLS, their centered version.
#[derive(Debug, Clone)]
pub struct Residuals {
    pub raw: Array1<f64>,
    pub centered: Option<Array1<f64>>,
}

impl Residuals {
    /// The residuals the smooth part squares: centered when present.
    pub fn effective(&self) -> &Array1<f64> {
        self.centered.as_ref().unwrap_or(&self.raw)
    }
}

/// Subtract-the-mean centering map (the action of I - 11'/n).
pub fn center(v: ArrayView1<f64>) -> Array1<f64> {
    let mean = v.mean().unwrap_or(0.0);
    v.mapv(|x| x - mean)
}

pub(crate) fn smooth_from_residuals(method: Method, residuals: &Residuals) -> f64 {
    let _ = method;
    let r = residuals.effective();
    r.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;
    use crate::penalty::PenaltyFamily;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(covariates: Array2<f64>, response: Array1<f64>, scale: Scale) -> Dataset {
        let n = covariates.nrows();
        Dataset::new(Array2::zeros((n, 2)), covariates, response, scale).unwrap()
    }

    fn random_linear_instance(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Dataset, Array1<f64>) {
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0));
        (dataset(x, y, Scale::Log), Array1::from_shape_fn(p, |_| rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn centering_annihilates_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 12;
        let p = 3;
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
        let theta = array![0.4, -1.2, 2.0];
        let g = x.dot(&theta);
        for c in [-3.0, 0.5, 10.0] {
            let y = &g + c;
            let data = dataset(x.clone(), y, Scale::Log);
            let spec = ObjectiveSpec::new(
                Method::Pmls,
                ModelSpec::linear_additive(p),
                PenaltySpec::none(),
            );
            let val = spec.objective_value(&data, theta.view()).unwrap();
            assert!(val.abs() < 1e-18 * n as f64, "c = {c}: {val}");
        }
    }

    #[test]
    fn pure_penalty_term() {
        // Residuals vanish after centering, so Q_n is n * sum p_lambda = 4 * 1 * 2.
        let x = array![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]];
        let theta = array![2.0, 0.0];
        let y = x.dot(&theta) + 7.5;
        let data = dataset(x, y, Scale::Log);
        let spec = ObjectiveSpec::new(
            Method::Pmls,
            ModelSpec::linear_additive(2),
            PenaltySpec::lasso(1.0).unwrap(),
        );
        let val = spec.objective_value(&data, theta.view()).unwrap();
        assert!((val - 8.0).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_centering_matrix_oracle() {
        // Materialize Sigma_n = I - 11'/n once and compare.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (data, theta) = random_linear_instance(&mut rng, 6, 2);
        let spec = ObjectiveSpec::new(
            Method::Pmls,
            ModelSpec::linear_additive(2),
            PenaltySpec::none(),
        );
        let n = data.n();
        let g = spec.model.evaluate(&data, theta.view()).unwrap();
        let r = data.response() - &g;
        let mut sigma = Array2::from_elem((n, n), -1.0 / n as f64);
        for i in 0..n {
            sigma[[i, i]] += 1.0;
        }
        let dense = r.dot(&sigma.dot(&r));
        let fast = spec.objective_value(&data, theta.view()).unwrap();
        assert!((dense - fast).abs() < 1e-12, "dense {dense} vs fast {fast}");
    }

    #[test]
    fn pmls_gradient_zero_at_constant_residuals() {
        let x = array![[1.0, 2.0], [0.5, -1.0], [2.0, 0.3]];
        let theta = array![0.7, -0.2];
        let y = x.dot(&theta) + 3.14;
        let data = dataset(x, y, Scale::Log);
        let spec = ObjectiveSpec::new(
            Method::Pmls,
            ModelSpec::linear_additive(2),
            PenaltySpec::none(),
        );
        let grad = spec.objective_gradient(&data, theta.view()).unwrap();
        for gj in grad.iter() {
            assert!(gj.abs() < 1e-12);
        }
    }

    #[test]
    fn pols_intercept_gradient_zero_at_profiled_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (data, theta) = random_linear_instance(&mut rng, 9, 2);
        let spec = ObjectiveSpec::new(
            Method::Pols,
            ModelSpec::linear_additive(2),
            PenaltySpec::none(),
        );
        let g = spec.model.evaluate(&data, theta.view()).unwrap();
        let beta0 = (data.response() - &g).mean().unwrap();
        let mut params = Array1::zeros(3);
        params[0] = beta0;
        params.slice_mut(ndarray::s![1..]).assign(&theta);
        let grad = spec.objective_gradient(&data, params.view()).unwrap();
        assert!(grad[0].abs() < 1e-10);
    }

    #[test]
    fn smooth_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for method in [Method::Pmls, Method::Pols, Method::Additive] {
            for kind in [
                ModelKind::LinearAdditive,
                ModelKind::LogLinear,
                ModelKind::Logistic,
                ModelKind::PolynomialSurface2D,
            ] {
                let (model, dx) = match kind {
                    ModelKind::LogLinear => (ModelSpec::log_linear(3), 3),
                    ModelKind::Logistic => (ModelSpec::logistic(3), 2),
                    ModelKind::PolynomialSurface2D => (ModelSpec::polynomial_surface_2d(), 2),
                    ModelKind::LinearAdditive => (ModelSpec::linear_additive(3), 3),
                };
                let n = 8;
                let x = Array2::from_shape_fn((n, dx), |_| rng.random_range(0.1..1.4));
                let scale = method.required_scale();
                let y = Array1::from_shape_fn(n, |_| rng.random_range(0.5..2.0));
                let data = dataset(x, y, scale);
                let spec = ObjectiveSpec::new(method, model, PenaltySpec::none());
                let params = loop {
                    let mut cand =
                        Array1::from_shape_fn(spec.params_len(), |_| rng.random_range(0.2..1.0));
                    if method.has_intercept() {
                        cand[0] = rng.random_range(-0.5..0.5);
                    }
                    let (_, theta) = spec.split_params(cand.view());
                    if model.is_feasible(&data, theta) {
                        break cand;
                    }
                };
                let analytic = spec.objective_gradient(&data, params.view()).unwrap();
                for k in 0..params.len() {
                    let h = 1e-6 * (1.0 + params[k].abs());
                    let mut plus = params.clone();
                    plus[k] += h;
                    let mut minus = params.clone();
                    minus[k] -= h;
                    let fp = spec.smooth_value(&data, plus.view()).unwrap();
                    let fm = spec.smooth_value(&data, minus.view()).unwrap();
                    let fd = (fp - fm) / (2.0 * h);
                    let scale = 1.0_f64.max(analytic[k].abs());
                    assert!(
                        (fd - analytic[k]).abs() / scale <= 1e-5,
                        "{method:?}/{kind:?} coord {k}: fd {fd} vs analytic {}",
                        analytic[k]
                    );
                }
            }
        }
    }

    #[test]
    fn profiling_identity() {
        // min over beta0 of the POLS smooth part equals S_n(theta), with the
        // minimizer at the residual mean.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (data, theta) = random_linear_instance(&mut rng, 11, 2);
            let pmls = ObjectiveSpec::new(
                Method::Pmls,
                ModelSpec::linear_additive(2),
                PenaltySpec::none(),
            );
            let pols = ObjectiveSpec::new(
                Method::Pols,
                ModelSpec::linear_additive(2),
                PenaltySpec::none(),
            );
            let g = pmls.model.evaluate(&data, theta.view()).unwrap();
            let beta0_star = (data.response() - &g).mean().unwrap();
            let mut params = Array1::zeros(3);
            params[0] = beta0_star;
            params.slice_mut(ndarray::s![1..]).assign(&theta);
            let sn = pmls.smooth_value(&data, theta.view()).unwrap();
            let pols_at_star = pols.smooth_value(&data, params.view()).unwrap();
            assert!((sn - pols_at_star).abs() < 1e-10, "{sn} vs {pols_at_star}");
            // And beta0_star is the minimizer: nudges only increase it.
            for d in [-1e-3, 1e-3] {
                params[0] = beta0_star + d;
                assert!(pols.smooth_value(&data, params.view()).unwrap() >= pols_at_star);
            }
        }
    }

    #[test]
    fn centering_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let v = Array1::from_shape_fn(17, |_| rng.random_range(-5.0..5.0));
            let once = center(v.view());
            let twice = center(once.view());
            for (a, b) in once.iter().zip(twice.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!(once.sum().abs() <= 1e-10 * v.len() as f64);
        }
    }

    #[test]
    fn scale_mismatch_is_rejected() {
        let data = dataset(array![[1.0]], array![2.0], Scale::Raw);
        let spec = ObjectiveSpec::new(
            Method::Pmls,
            ModelSpec::linear_additive(1),
            PenaltySpec::none(),
        );
        assert!(matches!(
            spec.objective_value(&data, array![1.0].view()),
            Err(Error::ScaleMismatch { .. })
        ));
    }

    #[test]
    fn additive_intercept_penalized_by_default_with_exemption_mask() {
        let x = array![[0.0, 0.0], [1.0, 1.0]];
        let z = array![2.0, 3.0];
        let data = dataset(x, z, Scale::Raw);
        let model = ModelSpec::polynomial_surface_2d();
        let lasso = PenaltySpec::lasso(1.0).unwrap();
        let theta = array![2.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let default_spec = ObjectiveSpec::new(Method::Additive, model, lasso);
        let exempt_spec = ObjectiveSpec::new(Method::Additive, model, lasso)
            .with_penalty_exempt(vec![0]);
        let with_pen = default_spec.objective_value(&data, theta.view()).unwrap();
        let without = exempt_spec.objective_value(&data, theta.view()).unwrap();
        assert!((with_pen - without - 2.0 * 2.0).abs() < 1e-12);
    }
}
