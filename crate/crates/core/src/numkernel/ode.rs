use super::{norm2, NumError};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OdeMethod {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub step: T,
    pub method: OdeMethod,
    /// Store every `sample_every`-th state; the initial and final states are
    /// always stored.
    pub sample_every: usize,
}

impl<T: Scalar> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            step: T::lit(1e-3),
            method: OdeMethod::Rk4,
            sample_every: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    /// `‖f(x(t_end))‖₂`.
    pub final_field_norm: T,
}

impl<T: Scalar> Trajectory<T> {
    pub fn final_state(&self) -> &[T] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Fixed-step integration of the autonomous system `ẋ = f(x)` on `[0, t_end]`.
/// The last step is shortened so the trajectory ends exactly at `t_end`.
pub fn integrate_ode<T: Scalar, F>(f: F, x0: &[T], t_end: T, opts: &OdeOptions<T>) -> Result<Trajectory<T>, NumError>
where
    F: Fn(&[T]) -> Vec<T>,
{
    if !(opts.step > T::zero()) {
        return Err(NumError::InvalidArgument("ODE step must be positive".into()));
    }
    if t_end < T::zero() {
        return Err(NumError::InvalidArgument("end time must be non-negative".into()));
    }
    let every = opts.sample_every.max(1);
    let n_steps = (t_end / opts.step).ceil().to_usize().unwrap_or(0);
    let mut x = x0.to_vec();
    let mut t = T::zero();
    let mut times = vec![t];
    let mut states = vec![x.clone()];
    let axpy = |x: &[T], k: &[T], s: T| -> Vec<T> { x.iter().zip(k).map(|(a, b)| *a + s * *b).collect() };
    for step in 1..=n_steps {
        let h = (t_end - t).min(opts.step);
        x = match opts.method {
            OdeMethod::Euler => axpy(&x, &f(&x), h),
            OdeMethod::Rk4 => {
                let k1 = f(&x);
                let k2 = f(&axpy(&x, &k1, h * T::half()));
                let k3 = f(&axpy(&x, &k2, h * T::half()));
                let k4 = f(&axpy(&x, &k3, h));
                let sixth = h / T::lit(6.0);
                (0..x.len())
                    .map(|i| x[i] + sixth * (k1[i] + T::two() * (k2[i] + k3[i]) + k4[i]))
                    .collect()
            }
        };
        t = if step == n_steps { t_end } else { t + h };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NumError::BlowUp { time: t.as_f64() });
        }
        if step % every == 0 || step == n_steps {
            times.push(t);
            states.push(x.clone());
        }
    }
    let final_field_norm = norm2(&f(&x));
    Ok(Trajectory {
        times,
        states,
        final_field_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay() {
        let tr = integrate_ode(|x: &[f64]| vec![-x[0]], &[1.0], 1.0, &OdeOptions::default()).unwrap();
        assert!((tr.final_state()[0] - (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(*tr.times.last().unwrap(), 1.0);
    }

    #[test]
    fn logistic_reaches_carrying_capacity() {
        let opts = OdeOptions { step: 1e-2, sample_every: 100, ..OdeOptions::default() };
        let tr = integrate_ode(|x: &[f64]| vec![x[0] * (1.0 - x[0])], &[0.5], 40.0, &opts).unwrap();
        assert!((tr.final_state()[0] - 1.0).abs() < 1e-6);
        assert!(tr.final_field_norm < 1e-6);
    }

    #[test]
    fn blow_up_is_detected() {
        let opts = OdeOptions { step: 1e-2, ..OdeOptions::default() };
        match integrate_ode(|x: &[f64]| vec![x[0] * x[0]], &[1.0], 5.0, &opts) {
            Err(NumError::BlowUp { time }) => assert!(time > 0.9 && time < 5.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_positive_step() {
        let opts = OdeOptions { step: 0.0, ..OdeOptions::default() };
        assert!(integrate_ode(|x: &[f64]| vec![-x[0]], &[1.0], 1.0, &opts).is_err());
    }
}
