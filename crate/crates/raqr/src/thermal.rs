//! Thermal-ensemble machinery: most-probable velocities, the discretized
//! Maxwell-Boltzmann distribution, and the velocity grid shared by the
//! analytic and exact Doppler averages.

use crate::constants::BOLTZMANN;

/// Most probable (1D, 1/e) thermal velocity √(2k_B T/m) (m/s).
pub fn thermal_velocity(temperature: f64, mass: f64) -> f64 {
    (2.0 * BOLTZMANN * temperature / mass).sqrt()
}

/// Transit-time relaxation rate v_th/r₀ (rad/s) for atoms crossing a beam
/// of radius r₀.
pub fn transit_rate(temperature: f64, mass: f64, beam_radius: f64) -> f64 {
    thermal_velocity(temperature, mass) / beam_radius
}

/// Errors constructing a velocity grid.
#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("velocity grid needs an odd class count >= 3, got {0}")]
    BadClassCount(usize),
    #[error("thermal velocity must be positive, got {0}")]
    BadThermalVelocity(f64),
}

/// Uniform, symmetric grid of longitudinal velocity classes spanning
/// ±3 v_th. The class count is odd so the stationary class v = 0 is present.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    classes: Vec<f64>,
    step: f64,
    thermal_velocity: f64,
}

impl VelocityGrid {
    /// Grid width in units of v_th on each side.
    pub const HALF_SPAN: f64 = 3.0;

    /// Default class count; convergence is checked by doubling in tests.
    pub const DEFAULT_CLASSES: usize = 301;

    pub fn new(thermal_velocity: f64, class_count: usize) -> Result<Self, GridError> {
        if class_count < 3 || class_count % 2 == 0 {
            return Err(GridError::BadClassCount(class_count));
        }
        if !(thermal_velocity > 0.0) || !thermal_velocity.is_finite() {
            return Err(GridError::BadThermalVelocity(thermal_velocity));
        }
        let span = Self::HALF_SPAN * thermal_velocity;
        let step = 2.0 * span / (class_count - 1) as f64;
        let mid = (class_count / 2) as isize;
        let classes = (0..class_count)
            .map(|k| (k as isize - mid) as f64 * step)
            .collect();
        Ok(VelocityGrid {
            classes,
            step,
            thermal_velocity,
        })
    }

    /// Grid for a species at the given vapor temperature.
    pub fn for_temperature(temperature: f64, mass: f64, class_count: usize) -> Result<Self, GridError> {
        Self::new(thermal_velocity(temperature, mass), class_count)
    }

    pub fn classes(&self) -> &[f64] {
        &self.classes
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn thermal_velocity(&self) -> f64 {
        self.thermal_velocity
    }

    /// Maxwell-Boltzmann probability density at velocity v.
    pub fn density(&self, v: f64) -> f64 {
        let vt = self.thermal_velocity;
        (-(v / vt) * (v / vt)).exp() / (std::f64::consts::PI.sqrt() * vt)
    }

    /// Quadrature weight P(v_k)·Δv of one class.
    pub fn weight(&self, v: f64) -> f64 {
        self.density(v) * self.step
    }

    /// Sum of all quadrature weights; approaches erf(3) as the grid refines.
    pub fn weight_sum(&self) -> f64 {
        self.classes.iter().map(|&v| self.weight(v)).sum()
    }

    /// Expected weight sum for the ±3 v_th window.
    pub fn expected_weight_sum() -> f64 {
        libm::erf(Self::HALF_SPAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const CS_MASS: f64 = 2.206_946_9e-25;

    #[test]
    fn cesium_thermal_velocity_at_room_temperature() {
        assert_relative_eq!(thermal_velocity(290.0, CS_MASS), 190.4845, max_relative = 1e-5);
    }

    #[test]
    fn transit_rate_matches_direct_arithmetic() {
        assert_relative_eq!(
            transit_rate(290.0, CS_MASS, 0.38e-3),
            5.0127e5,
            max_relative = 1e-3
        );
    }

    #[test]
    fn grid_is_symmetric_and_contains_zero() {
        let grid = VelocityGrid::for_temperature(290.0, CS_MASS, 301).unwrap();
        let classes = grid.classes();
        assert_eq!(classes.len(), 301);
        assert_eq!(classes[150], 0.0);
        for k in 0..classes.len() {
            assert_relative_eq!(classes[k], -classes[classes.len() - 1 - k], epsilon = 1e-12);
        }
    }

    #[test]
    fn weight_sum_converges_to_erf3() {
        let grid = VelocityGrid::for_temperature(290.0, CS_MASS, 201).unwrap();
        let sum = grid.weight_sum();
        assert!((sum - VelocityGrid::expected_weight_sum()).abs() < 1e-3, "sum = {sum}");
        assert_relative_eq!(VelocityGrid::expected_weight_sum(), 0.999_977_909_5, max_relative = 1e-9);
    }

    #[test]
    fn rejects_even_and_tiny_grids() {
        assert!(VelocityGrid::new(100.0, 300).is_err());
        assert!(VelocityGrid::new(100.0, 1).is_err());
        assert!(VelocityGrid::new(-1.0, 301).is_err());
    }
}
