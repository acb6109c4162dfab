use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams<T> {
    /// Box constraint `0 ≤ α_i ≤ C`.
    pub c: T,
    /// Stop once the maximal KKT violation drops below this value.
    pub tol: T,
    /// Cap on pair updates; hitting it marks the model as non-converged.
    pub max_updates: u64,
}

impl<T: Scalar> SvmParams<T> {
    pub fn new(c: T) -> Self {
        Self {
            c,
            tol: T::of(1e-3),
            max_updates: 10_000_000,
        }
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }
}

/// Solution of one binary dual problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel<T> {
    pub alphas: Vec<T>,
    pub bias: T,
    /// Training labels in `{-1, +1}`.
    pub labels: Vec<i8>,
    pub c: T,
    /// Dual objective `Σα − ½ Σ α_i α_j y_i y_j K_ij` (maximized).
    pub objective: T,
    pub iterations: u64,
    pub converged: bool,
}

impl<T: Scalar> SvmModel<T> {
    pub fn support_vectors(&self) -> Vec<usize> {
        let eps = T::of(1e-8);
        (0..self.alphas.len()).filter(|&i| self.alphas[i] > eps).collect()
    }

    /// `Σ α_i y_i`, zero at a feasible point.
    pub fn equality_residual(&self) -> T {
        self.alphas
            .iter()
            .zip(&self.labels)
            .map(|(&a, &y)| if y > 0 { a } else { -a })
            .sum()
    }

    /// `αᵀ diag(y) K diag(y) α` for a square Gram over the training set.
    pub fn quadratic_form(&self, gram: &GramMatrix<T>) -> T {
        let sv = self.support_vectors();
        let k = gram.values();
        let coef: Vec<T> = sv.iter().map(|&i| self.signed_alpha(i)).collect();
        let mut total = T::zero();
        for (a, &i) in sv.iter().enumerate() {
            let row = k.row(i);
            let inner: T = sv.iter().zip(&coef).map(|(&j, &c)| c * row[j]).sum();
            total = total + coef[a] * inner;
        }
        total
    }

    fn signed_alpha(&self, i: usize) -> T {
        if self.labels[i] > 0 {
            self.alphas[i]
        } else {
            -self.alphas[i]
        }
    }
}

fn validate<T: Scalar>(gram: &GramMatrix<T>, labels: &[i8], params: &SvmParams<T>) -> Result<()> {
    let n = labels.len();
    if !gram.is_square() || gram.nrows() != n {
        return Err(Error::Dimension(format!(
            "{}x{} Gram for {n} labels",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::Invalid(format!("label {bad} is not -1 or +1")));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::Invalid("binary SVM needs both classes present".into()));
    }
    if !(params.c > T::zero() && params.c.is_finite()) {
        return Err(Error::Invalid(format!("C must be positive, got {}", params.c)));
    }
    let scale = gram
        .values()
        .iter()
        .fold(T::one(), |m, &v| m.max(v.abs()));
    if gram.asymmetry() > T::of(1e-9) * scale {
        return Err(Error::Invalid("Gram matrix is not symmetric".into()));
    }
    Ok(())
}

/// Trains from `α = 0`. See [`train_binary_svm_warm`].
pub fn train_binary_svm<T: Scalar>(
    gram: &GramMatrix<T>,
    labels: &[i8],
    params: &SvmParams<T>,
) -> Result<SvmModel<T>> {
    train_binary_svm_warm(gram, labels, params, None)
}

/// Solves `max Σα − ½ αᵀ Y K Y α` s.t. `yᵀα = 0`, `0 ≤ α ≤ C` by two-variable
/// updates on the maximal violating pair (ties broken towards the lower
/// index). `warm` must be feasible for the same `C`; otherwise the solve
/// starts from zero.
pub fn train_binary_svm_warm<T: Scalar>(
    gram: &GramMatrix<T>,
    labels: &[i8],
    params: &SvmParams<T>,
    warm: Option<&[T]>,
) -> Result<SvmModel<T>> {
    validate(gram, labels, params)?;
    let n = labels.len();
    let c = params.c;
    let k = gram.values();
    let y: Vec<T> = labels.iter().map(|&l| T::of(l as f64)).collect();

    let mut alpha = vec![T::zero(); n];
    if let Some(w) = warm {
        let residual: T = w.iter().zip(&y).map(|(&a, &yi)| a * yi).sum();
        let feasible = w.len() == n
            && w.iter().all(|&a| a >= T::zero() && a <= c)
            && residual.abs() <= T::of(1e-8) * c * T::of_usize(n);
        if feasible {
            alpha.copy_from_slice(w);
        } else {
            log::debug!("warm start infeasible for C={c}; starting from zero");
        }
    }
    // Gradient of the minimization form: G = YKYα − 1.
    let mut grad = vec![-T::one(); n];
    for j in (0..n).filter(|&j| alpha[j] > T::zero()) {
        let coef = alpha[j] * y[j];
        for (i, g) in grad.iter_mut().enumerate() {
            *g = *g + y[i] * coef * k[[i, j]];
        }
    }

    let objective = |alpha: &[T], grad: &[T]| -> T {
        alpha
            .iter()
            .zip(grad)
            .map(|(&a, &g)| a * (T::one() - g))
            .sum::<T>()
            * T::of(0.5)
    };

    let tau = T::of(1e-12);
    let mut updates = 0u64;
    let mut converged = false;
    let mut last_check = objective(&alpha, &grad);
    loop {
        let mut up = (usize::MAX, T::neg_infinity());
        let mut low = (usize::MAX, T::infinity());
        for t in 0..n {
            let v = -y[t] * grad[t];
            let positive = labels[t] > 0;
            let in_up = if positive { alpha[t] < c } else { alpha[t] > T::zero() };
            let in_low = if positive { alpha[t] > T::zero() } else { alpha[t] < c };
            if in_up && v > up.1 {
                up = (t, v);
            }
            if in_low && v < low.1 {
                low = (t, v);
            }
        }
        if up.0 == usize::MAX || low.0 == usize::MAX || up.1 - low.1 < params.tol {
            converged = true;
            break;
        }
        if updates >= params.max_updates {
            log::warn!("SVM stopped at the {updates}-update cap (KKT gap {})", up.1 - low.1);
            break;
        }
        let (i, j) = (up.0, low.0);
        let slope = y[i] * grad[i] - y[j] * grad[j];
        let mut curvature = k[[i, i]] + k[[j, j]] - k[[i, j]] - k[[j, i]];
        if curvature <= T::zero() {
            curvature = tau;
        }
        let bound_i = if labels[i] > 0 { c - alpha[i] } else { alpha[i] };
        let bound_j = if labels[j] > 0 { alpha[j] } else { c - alpha[j] };
        let mut step = -slope / curvature;
        let mut hit_i = false;
        let mut hit_j = false;
        if step >= bound_i {
            step = bound_i;
            hit_i = true;
        }
        if step >= bound_j {
            step = bound_j;
            hit_j = true;
            hit_i = hit_i && bound_i == bound_j;
        }
        alpha[i] = if hit_i {
            if labels[i] > 0 { c } else { T::zero() }
        } else {
            alpha[i] + y[i] * step
        };
        alpha[j] = if hit_j {
            if labels[j] > 0 { T::zero() } else { c }
        } else {
            alpha[j] - y[j] * step
        };
        let (ki, kj) = (k.row(i), k.row(j));
        for (t, g) in grad.iter_mut().enumerate() {
            *g = *g + y[t] * step * (ki[t] - kj[t]);
        }
        updates += 1;
        if cfg!(debug_assertions) && updates.is_multiple_of(1000) {
            let now = objective(&alpha, &grad);
            debug_assert!(
                now >= last_check - T::of(1e-9) * (T::one() + last_check.abs()),
                "dual objective decreased from {last_check} to {now}"
            );
            last_check = now;
        }
    }

    let bias = bias_from_gradient(&alpha, &grad, labels, c);
    Ok(SvmModel {
        objective: objective(&alpha, &grad),
        alphas: alpha,
        bias,
        labels: labels.to_vec(),
        c,
        iterations: updates,
        converged,
    })
}

/// Average of `y_i − f0(x_i)` over free vectors; without free vectors, the
/// midpoint of the interval allowed by the bound vectors' KKT conditions.
fn bias_from_gradient<T: Scalar>(alpha: &[T], grad: &[T], labels: &[i8], c: T) -> T {
    let mut sum = T::zero();
    let mut free = 0usize;
    let mut lower = T::neg_infinity();
    let mut upper = T::infinity();
    for t in 0..alpha.len() {
        // y_t − f0(x_t) where f0 excludes the bias.
        let yg = if labels[t] > 0 { -grad[t] } else { grad[t] };
        let at_zero = alpha[t] <= T::zero();
        let at_c = alpha[t] >= c;
        if !at_zero && !at_c {
            sum = sum + yg;
            free += 1;
        } else if (at_zero && labels[t] > 0) || (at_c && labels[t] < 0) {
            lower = lower.max(yg);
        } else {
            upper = upper.min(yg);
        }
    }
    if free > 0 {
        return sum / T::of_usize(free);
    }
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => (lower + upper) * T::of(0.5),
        (true, false) => lower,
        (false, true) => upper,
        (false, false) => T::zero(),
    }
}

/// `b + Σ_i α_i y_i K(x, x_i)` for every row of an evaluation × training
/// kernel matrix.
pub fn decision_values<T: Scalar>(model: &SvmModel<T>, cross_gram: &GramMatrix<T>) -> Result<Vec<T>> {
    if cross_gram.ncols() != model.alphas.len() {
        return Err(Error::Dimension(format!(
            "cross Gram has {} columns, model was trained on {} samples",
            cross_gram.ncols(),
            model.alphas.len()
        )));
    }
    let sv = model.support_vectors();
    let coef: Vec<T> = sv.iter().map(|&i| model.signed_alpha(i)).collect();
    Ok(cross_gram
        .values()
        .rows()
        .into_iter()
        .map(|row| model.bias + sv.iter().zip(&coef).map(|(&i, &a)| a * row[i]).sum::<T>())
        .collect())
}

/// Signs of the decision values, with 0 mapped to +1.
pub fn predict_labels<T: Scalar>(model: &SvmModel<T>, cross_gram: &GramMatrix<T>) -> Result<Vec<i8>> {
    Ok(decision_values(model, cross_gram)?
        .into_iter()
        .map(|v| if v >= T::zero() { 1 } else { -1 })
        .collect())
}
