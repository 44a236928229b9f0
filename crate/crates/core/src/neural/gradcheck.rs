/// A model with a flat parameter vector, a scalar loss and its analytic gradient.
pub trait Differentiable {
    fn param_vector(&self) -> Vec<f64>;
    fn set_param_vector(&mut self, p: &[f64]);
    fn loss_and_gradient(&self, input: &[f64], target: &[f64]) -> (f64, Vec<f64>);

    fn loss(&self, input: &[f64], target: &[f64]) -> f64 {
        self.loss_and_gradient(input, target).0
    }
}

/// Largest relative discrepancy between the analytic gradient and a central
/// finite difference with step `eps`, over every parameter.
///
/// The relative error of one coordinate is `|a − n| / max(|a|, |n|, 1e-6)`;
/// the floor keeps coordinates with vanishing gradient from dividing
/// rounding noise by zero.
pub fn backprop_check<M: Differentiable + Clone>(
    model: &M,
    input: &[f64],
    target: &[f64],
    eps: f64,
) -> f64 {
    assert!((1e-6..=1e-3).contains(&eps), "eps must lie in [1e-6, 1e-3]");
    let (_, analytic) = model.loss_and_gradient(input, target);
    let base = model.param_vector();
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        params[i] = base[i] + eps;
        probe.set_param_vector(&params);
        let up = probe.loss(input, target);
        params[i] = base[i] - eps;
        probe.set_param_vector(&params);
        let down = probe.loss(input, target);
        params[i] = base[i];
        let numeric = (up - down) / (2.0 * eps);
        let denom = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}
