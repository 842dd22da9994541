//! Relative humidity from air and dew-point temperature (Magnus form).

use crate::error::{PipelineError, Result};

pub const MAGNUS_B: f64 = 17.625;
/// °C; temperatures at or below `-MAGNUS_C` are outside the formula's domain.
pub const MAGNUS_C: f64 = 243.04;

fn check(name: &str, t: f64) -> Result<()> {
    if !t.is_finite() || t <= -MAGNUS_C {
        return Err(PipelineError::Domain(format!("{name} = {t} °C is not above -{MAGNUS_C} °C")));
    }
    Ok(())
}

/// Relative humidity in percent.
pub fn rh_from_t_tdew(t: f64, t_dew: f64) -> Result<f64> {
    check("T", t)?;
    check("T_dew", t_dew)?;
    let e = |x: f64| (MAGNUS_B * x / (MAGNUS_C + x)).exp();
    Ok(100.0 * e(t_dew) / e(t))
}

/// ∂RH/∂T at fixed dew point, in percent per °C.
pub fn rh_dt(t: f64, t_dew: f64) -> Result<f64> {
    let rh = rh_from_t_tdew(t, t_dew)?;
    Ok(-rh * MAGNUS_B * MAGNUS_C / (MAGNUS_C + t).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_air_is_100_percent() {
        for t in [-30.0, 0.0, 12.5, 40.0] {
            assert!((rh_from_t_tdew(t, t).unwrap() - 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        for t in [-20.0, 0.0, 15.0, 40.0] {
            let h = 1e-5;
            let fd = (rh_from_t_tdew(t + h, 10.0).unwrap() - rh_from_t_tdew(t - h, 10.0).unwrap()) / (2.0 * h);
            assert!((rh_dt(t, 10.0).unwrap() - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn domain_boundary() {
        assert!(matches!(rh_from_t_tdew(-243.04, 0.0), Err(PipelineError::Domain(_))));
        assert!(matches!(rh_from_t_tdew(20.0, -300.0), Err(PipelineError::Domain(_))));
        assert!(rh_from_t_tdew(-243.0, -243.0).is_ok());
    }
}
