//! Fixed physical constants. Values are pinned here and never read from the
//! environment so that every run is bit-reproducible.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
/// Newtonian constant of gravitation, m³·kg⁻¹·s⁻².
pub const NEWTON_G: f64 = 6.674e-11;
/// Elementary charge, C (joules per electronvolt).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Named constant table, as echoed into run manifests.
pub fn table() -> Vec<(&'static str, f64)> {
    vec![
        ("hbar", HBAR),
        ("speed_of_light", SPEED_OF_LIGHT),
        ("newton_g", NEWTON_G),
        ("elementary_charge", ELEMENTARY_CHARGE),
        ("atomic_mass_unit", ATOMIC_MASS_UNIT),
    ]
}
