//! Balance cost and the error signals handed to the learner.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Six-axis force/moment reading. Forces in N, moments in N·m.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl Wrench {
    pub fn force(&self) -> [f64; 3] {
        [self.fx, self.fy, self.fz]
    }

    pub fn moment(&self) -> [f64; 3] {
        [self.mx, self.my, self.mz]
    }

    pub fn from_parts(f: [f64; 3], m: [f64; 3]) -> Self {
        Wrench {
            fx: f[0],
            fy: f[1],
            fz: f[2],
            mx: m[0],
            my: m[1],
            mz: m[2],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.force().iter().chain(self.moment().iter()).all(|v| v.is_finite())
    }

    /// Force with the Y rest reading removed.
    pub fn offset_force(&self, cfg: &BalanceConfig) -> [f64; 3] {
        [self.fx, self.fy - cfg.fy_rest, self.fz]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceConfig {
    /// Y force read at rest (the supported weight), N.
    pub fy_rest: f64,
    /// Gain (and sign) applied to the offset-corrected forces.
    #[serde(default = "default_error_gain")]
    pub error_gain: f64,
}

fn default_error_gain() -> f64 {
    1.0
}

impl BalanceConfig {
    pub fn new(fy_rest: f64) -> Self {
        BalanceConfig {
            fy_rest,
            error_gain: 1.0,
        }
    }
}

/// Per-output error signal `(ε_x, ε_y, ε_z)` for the three position outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSignal(pub [f64; 3]);

impl ErrorSignal {
    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn to_scalars<T: Scalar>(&self) -> [T; 3] {
        self.0.map(T::from_f64_lossy)
    }
}

/// `Fx² + (Fy - Fy_rest)² + Fz²`. Moments are ignored.
pub fn cost(w: &Wrench, cfg: &BalanceConfig) -> f64 {
    w.offset_force(cfg).iter().map(|f| f * f).sum()
}

/// Offset-corrected forces scaled by the error gain.
pub fn balance_error_signals(w: &Wrench, cfg: &BalanceConfig) -> ErrorSignal {
    ErrorSignal(w.offset_force(cfg).map(|f| cfg.error_gain * f))
}

/// Quadratic supervised error: `e_j = ½ (y_j - d_j)²`, `ε_j = y_j - d_j`.
pub fn supervised_error_signals<T: Scalar>(y: &[T], d: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    if y.len() != d.len() {
        return Err(Error::shape("supervised targets", y.len(), d.len()));
    }
    let half = T::from_f64_lossy(0.5);
    Ok(y.iter()
        .zip(d)
        .map(|(&yj, &dj)| {
            let diff = yj - dj;
            (half * diff * diff, diff)
        })
        .unzip())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    const FY0: f64 = 13.0 * 9.81;

    fn cfg() -> BalanceConfig {
        BalanceConfig::new(FY0)
    }

    fn forces(fx: f64, fy: f64, fz: f64) -> Wrench {
        Wrench {
            fx,
            fy,
            fz,
            ..Wrench::default()
        }
    }

    #[test]
    fn cost_direct() {
        assert_eq!(cost(&forces(1.0, FY0 + 2.0, 3.0), &cfg()), 14.0);
    }

    #[test]
    fn cost_at_rest_is_zero() {
        assert_eq!(cost(&forces(0.0, FY0, 0.0), &cfg()), 0.0);
        assert!((FY0 - 127.53).abs() < 1e-12);
    }

    #[test]
    fn moments_do_not_enter() {
        let mut w = forces(0.0, FY0, 0.0);
        w.mx = 5.0;
        w.mz = -2.0;
        assert_eq!(cost(&w, &cfg()), 0.0);
        assert_eq!(balance_error_signals(&w, &cfg()).0, [0.0; 3]);
    }

    #[test]
    fn error_signals() {
        assert_eq!(balance_error_signals(&forces(0.0, FY0, 0.0), &cfg()).0, [0.0; 3]);
        assert_eq!(balance_error_signals(&forces(10.0, FY0, 0.0), &cfg()).0[0], 10.0);
        let mut c = cfg();
        c.error_gain = -2.0;
        assert_eq!(balance_error_signals(&forces(0.0, FY0 + 1.0, 3.0), &c).0, [0.0, -2.0, -6.0]);
    }

    #[test]
    fn supervised_examples() {
        let (e, eps) = supervised_error_signals(&[0.3_f64], &[0.3]).unwrap();
        assert_eq!((e[0], eps[0]), (0.0, 0.0));
        let (e, eps) = supervised_error_signals(&[0.5_f64], &[0.0]).unwrap();
        assert_eq!((e[0], eps[0]), (0.125, 0.5));
        assert!(supervised_error_signals(&[0.5_f64, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn supervised_signal_is_derivative_of_error() {
        let d = [0.2_f64, -0.7];
        for &y0 in &[-0.9, -0.1, 0.35, 0.8] {
            let h = 1e-6;
            let y = [y0, y0 * 0.5];
            let (_, eps) = supervised_error_signals(&y, &d).unwrap();
            for j in 0..2 {
                let mut yp = y;
                let mut ym = y;
                yp[j] += h;
                ym[j] -= h;
                let (ep, _) = supervised_error_signals(&yp, &d).unwrap();
                let (em, _) = supervised_error_signals(&ym, &d).unwrap();
                let fd = (ep[j] - em[j]) / (2.0 * h);
                assert!((fd - eps[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn window_integral_of_cost_equals_summed_errors() {
        // E with e_j the squared offset force components, summed with dt.
        let dt = 0.01;
        let trace: Vec<Wrench> = (0..50)
            .map(|k| {
                let t = k as f64 * dt;
                forces((7.0 * t).sin() * 20.0, FY0 + (3.0 * t).cos(), -4.0 * t)
            })
            .collect();
        let integral: f64 = trace.iter().map(|w| cost(w, &cfg()) * dt).sum();
        let e: f64 = trace
            .iter()
            .map(|w| w.offset_force(&cfg()).iter().map(|f| f * f * dt).sum::<f64>())
            .sum();
        assert!((integral - e).abs() <= 1e-12 * e.abs());
    }

    proptest! {
        #[test]
        fn cost_non_negative_and_zero_only_at_rest(fx in -100.0f64..100.0, dy in -100.0f64..100.0, fz in -100.0f64..100.0) {
            let c = cost(&forces(fx, FY0 + dy, fz), &cfg());
            prop_assert!(c >= 0.0);
            if fx != 0.0 || fz != 0.0 {
                prop_assert!(c > 0.0);
            }
        }

        #[test]
        fn error_signals_are_linear(fx in -100.0f64..100.0, dy in -100.0f64..100.0, fz in -100.0f64..100.0, c in -4.0f64..4.0) {
            let base = balance_error_signals(&forces(fx, FY0 + dy, fz), &cfg()).0;
            let scaled = balance_error_signals(&forces(c * fx, FY0 + c * dy, c * fz), &cfg()).0;
            for k in 0..3 {
                prop_assert!((scaled[k] - c * base[k]).abs() <= 1e-9 * (1.0 + base[k].abs()));
            }
        }
    }
}
