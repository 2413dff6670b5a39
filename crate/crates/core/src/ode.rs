//! Classical fourth-order Runge–Kutta with step-doubling error control.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::C64;

/// A first-order system `y' = f(t, y)` on `ℂ^dim`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()>;

    /// Checked after every accepted step.
    fn admissible(&self, _t: f64, _y: &[C64]) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub h_init: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Steps below this raise [`Error::StepUnderflow`].
    pub h_min: f64,
    pub max_steps: usize,
    /// Take uniform steps of at most `h_init` without error control.
    pub fixed: bool,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { h_init: 1e-2, rel_tol: 1e-10, abs_tol: 1e-12, h_min: 1e-14, max_steps: 2_000_000, fixed: false }
    }
}

impl StepControl {
    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn fixed(h: f64) -> Self {
        Self { h_init: h, fixed: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.h_init, self.rel_tol, self.abs_tol, self.h_min].iter().all(|x| *x > 0.0 && x.is_finite());
        if !positive || self.max_steps == 0 {
            return Err(Error::InvalidSpec("step control needs positive tolerances and steps"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest accepted local error estimate, in units of the tolerance.
    pub max_error_estimate: f64,
}

struct Stepper<'a, S: OdeSystem> {
    sys: &'a S,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl<'a, S: OdeSystem> Stepper<'a, S> {
    fn new(sys: &'a S) -> Self {
        let n = sys.dim();
        Self {
            sys,
            k: [vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n]],
            tmp: vec![C64::default(); n],
        }
    }

    /// One RK4 step from `(t, y)` written into `out`.
    fn step(&mut self, t: f64, y: &[C64], h: f64, out: &mut [C64]) -> Result<()> {
        let [k1, k2, k3, k4] = &mut self.k;
        self.sys.rhs(t, y, k1)?;
        for ((s, y), k) in self.tmp.iter_mut().zip(y).zip(k1.iter()) {
            *s = y + k * (0.5 * h);
        }
        self.sys.rhs(t + 0.5 * h, &self.tmp, k2)?;
        for ((s, y), k) in self.tmp.iter_mut().zip(y).zip(k2.iter()) {
            *s = y + k * (0.5 * h);
        }
        self.sys.rhs(t + 0.5 * h, &self.tmp, k3)?;
        for ((s, y), k) in self.tmp.iter_mut().zip(y).zip(k3.iter()) {
            *s = y + k * h;
        }
        self.sys.rhs(t + h, &self.tmp, k4)?;
        for (i, o) in out.iter_mut().enumerate() {
            *o = y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        Ok(())
    }
}

fn site_of(err: &Error) -> Option<usize> {
    match err {
        Error::SingularDenominator { site } => Some(*site),
        _ => None,
    }
}

/// Integrates from `(t0, y0)` and returns the state at every output time.
///
/// Output times must be strictly increasing and later than `t0`; steps are
/// shortened to land on them exactly.
pub fn integrate<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[C64],
    outputs: &[f64],
    ctrl: &StepControl,
) -> Result<(Vec<Vec<C64>>, StepStats)> {
    ctrl.validate()?;
    if y0.len() != sys.dim() {
        return Err(Error::InvalidSpec("initial state has the wrong dimension"));
    }
    let mut prev = t0;
    for &t in outputs {
        if !(t > prev) || !t.is_finite() {
            return Err(Error::InvalidSpec("output times must be finite and strictly increasing"));
        }
        prev = t;
    }
    sys.admissible(t0, y0)?;
    let mut stepper = Stepper::new(sys);
    let n = sys.dim();
    let mut y = y0.to_vec();
    let mut full = vec![C64::default(); n];
    let mut half = vec![C64::default(); n];
    let mut two = vec![C64::default(); n];
    let mut t = t0;
    let mut h = ctrl.h_init;
    let mut stats = StepStats::default();
    let mut snapshots = Vec::with_capacity(outputs.len());
    let mut steps = 0usize;

    for &t_out in outputs {
        if ctrl.fixed {
            let count = ((t_out - t) / ctrl.h_init).ceil().max(1.0) as usize;
            let h_eff = (t_out - t) / count as f64;
            for i in 0..count {
                let t_i = t + i as f64 * h_eff;
                stepper.step(t_i, &y, h_eff, &mut full).map_err(|e| match site_of(&e) {
                    Some(site) => Error::BlowUp { site, t_lo: t_i, t_hi: t_i + h_eff },
                    None => e,
                })?;
                core::mem::swap(&mut y, &mut full);
                stats.accepted += 1;
                sys.admissible(t_i + h_eff, &y)?;
            }
            t = t_out;
            snapshots.push(y.clone());
            continue;
        }
        while t < t_out {
            steps += 1;
            if steps > ctrl.max_steps {
                return Err(Error::StepBudget { t });
            }
            let last = t + h >= t_out;
            let h_eff = if last { t_out - t } else { h };
            if h_eff < ctrl.h_min {
                if last {
                    // a sliver left by round-off
                    t = t_out;
                    break;
                }
                return Err(Error::StepUnderflow { t });
            }
            let attempt = stepper
                .step(t, &y, h_eff, &mut full)
                .and_then(|_| stepper.step(t, &y, 0.5 * h_eff, &mut half))
                .and_then(|_| stepper.step(t + 0.5 * h_eff, &half, 0.5 * h_eff, &mut two));
            if let Err(e) = attempt {
                let Some(site) = site_of(&e) else { return Err(e) };
                stats.rejected += 1;
                if h_eff * 0.25 < ctrl.h_min {
                    return Err(Error::BlowUp { site, t_lo: t, t_hi: t + h_eff });
                }
                h = h_eff * 0.25;
                continue;
            }
            let mut err = 0.0f64;
            for i in 0..n {
                let scale = ctrl.abs_tol + ctrl.rel_tol * y[i].norm().max(two[i].norm());
                err = err.max((two[i] - full[i]).norm() / (15.0 * scale));
            }
            if !err.is_finite() {
                err = f64::INFINITY;
            }
            let factor = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 4.0) };
            if err <= 1.0 {
                t = if last { t_out } else { t + h_eff };
                core::mem::swap(&mut y, &mut two);
                stats.accepted += 1;
                stats.max_error_estimate = stats.max_error_estimate.max(err);
                sys.admissible(t, &y)?;
                // keep the proposed step when the last one was shortened to hit t_out
                h = if last { h.max(h_eff * factor) } else { h_eff * factor };
            } else {
                stats.rejected += 1;
                h = h_eff * factor;
            }
        }
        snapshots.push(y.clone());
    }
    Ok((snapshots, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay(C64);

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
            dy[0] = self.0 * y[0];
            Ok(())
        }
    }

    struct Pole;

    impl OdeSystem for Pole {
        fn dim(&self) -> usize {
            1
        }
        // y' = y², y(0) = 1 blows up at t = 1
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
            if y[0].norm() > 1e12 {
                return Err(Error::SingularDenominator { site: 1 });
            }
            dy[0] = y[0] * y[0];
            Ok(())
        }
    }

    #[test]
    fn exponential_decay_hits_output_times() {
        let lambda = C64::new(-1.0, 2.0);
        let outputs = [0.3, 0.5, 1.0];
        let (ys, stats) =
            integrate(&Decay(lambda), 0.0, &[C64::new(1.0, 0.0)], &outputs, &StepControl::default()).unwrap();
        for (t, y) in outputs.iter().zip(&ys) {
            assert!((y[0] - (lambda * t).exp()).norm() < 1e-8);
        }
        assert!(stats.accepted > 0 && stats.max_error_estimate <= 1.0);
    }

    #[test]
    fn fixed_steps_converge_at_fourth_order() {
        let lambda = C64::new(-1.0, 3.0);
        let exact = lambda.exp();
        let err = |h: f64| {
            let (ys, _) =
                integrate(&Decay(lambda), 0.0, &[C64::new(1.0, 0.0)], &[1.0], &StepControl::fixed(h)).unwrap();
            (ys[0][0] - exact).norm()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn blow_up_is_detected() {
        let r = integrate(&Pole, 0.0, &[C64::new(1.0, 0.0)], &[2.0], &StepControl::default());
        match r {
            Err(Error::BlowUp { t_lo, t_hi, .. }) => assert!((t_lo - 1.0).abs() < 1e-6 && t_hi > t_lo),
            Err(Error::StepUnderflow { t }) => assert!((t - 1.0).abs() < 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_output_grid_is_refused() {
        let r = integrate(&Decay(C64::new(1.0, 0.0)), 0.0, &[C64::new(1.0, 0.0)], &[0.5, 0.5], &StepControl::default());
        assert!(matches!(r, Err(Error::InvalidSpec(_))));
    }
}
