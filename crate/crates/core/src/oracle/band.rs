use crate::circuit::{CircuitParams, Termination};
use crate::error::{Error, Result};

/// `∫ G dω` over `[-ω_B/2, ω_B/2]` for the unmatched amplifier.
///
/// With `a = g_s (g_l + g_d)`, `b = g_s + g_l + g_d + g_m` and
/// `K = 4 g_s g_l` the gain splits as
/// `K/b² [1 + (b² g_m² - a²) / (a² + b² C² ω²)]`.
pub fn analytic_band_gain_integral(p: &CircuitParams, t: &Termination, omega_b: f64) -> Result<f64> {
    p.validate()?;
    t.validate()?;
    if t.matching.is_some() {
        return Err(Error::Unsupported("closed-form band integral needs an unmatched circuit".into()));
    }
    if !(omega_b.is_finite() && omega_b > 0.0) {
        return Err(Error::invalid("omega_B", "must be positive"));
    }
    let x = 0.5 * omega_b;
    let a = t.g_s * (t.g_l + p.g_d);
    let b = t.g_s + t.g_l + p.g_d + p.g_m;
    let k = 4.0 * t.g_s * t.g_l;
    let c = p.c_gd;
    let half = k / (b * b) * (x + (b * b * p.g_m * p.g_m - a * a) / (a * b * c) * (b * c * x / a).atan());
    Ok(2.0 * half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{power_gain, Placement};

    #[test]
    fn narrow_band_is_dc_gain() {
        let p = CircuitParams::normalized(0.1, 0.1).unwrap();
        let t = Termination::new(0.7, 0.3).unwrap();
        let wb = 1e-5;
        let v = analytic_band_gain_integral(&p, &t, wb).unwrap() / wb;
        let g0 = power_gain(&p, &t, 0.0).unwrap();
        assert!((v - g0).abs() <= 1e-8 * g0);
    }

    #[test]
    fn vanishing_capacitance_gives_flat_gain() {
        let p = CircuitParams::new(1.0, 1e-9, 0.1, 0.1, 1.0).unwrap();
        let t = Termination::new(0.7, 0.3).unwrap();
        let g = power_gain(&p, &t, 0.0).unwrap();
        let v = analytic_band_gain_integral(&p, &t, 2.0).unwrap();
        assert!((v - 2.0 * g).abs() <= 1e-8 * g);
    }

    #[test]
    fn matching_is_rejected() {
        let p = CircuitParams::normalized(0.1, 0.1).unwrap();
        let t = Termination::new(0.7, 0.3).unwrap().with_matching(1.0, Placement::ParallelToCgd).unwrap();
        assert!(matches!(analytic_band_gain_integral(&p, &t, 0.1), Err(Error::Unsupported(_))));
    }
}
