//! Exact SI defining constants.

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `h c / lambda`, joules.
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn photon_rate_at_710_nm() {
        let e = photon_energy(0.710e-6);
        assert!((e - 2.7978e-19).abs() < 1e-23);
        let rate = 0.1 * 1e-14 / e;
        assert!((rate - 3574.2).abs() < 0.1, "{rate}");
    }
}
