//! Unit conventions.
//!
//! All internal computation is carried out in Hartree atomic units
//! (`hbar = m = e^2/(4 pi eps0) = 1`); conversion to electronvolts is applied
//! only at output boundaries.

use serde::{Deserialize, Serialize};

/// One Hartree in electronvolts (CODATA).
pub const HARTREE_TO_EV: f64 = 27.211386;

/// Output unit system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    /// Hartree atomic units.
    Atomic,
    /// Electronvolts (energies only; lengths stay in Bohr).
    Electronvolt,
}

impl UnitSystem {
    /// Convert an energy in Hartree to this unit system.
    pub fn energy_from_au(self, e_hartree: f64) -> f64 {
        match self {
            UnitSystem::Atomic => e_hartree,
            UnitSystem::Electronvolt => e_hartree * HARTREE_TO_EV,
        }
    }

    pub fn energy_label(self) -> &'static str {
        match self {
            UnitSystem::Atomic => "Ha",
            UnitSystem::Electronvolt => "eV",
        }
    }
}

pub fn hartree_to_ev(e: f64) -> f64 {
    e * HARTREE_TO_EV
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_round_trip() {
        let e = -0.03125;
        let ev = hartree_to_ev(e);
        assert!((ev / HARTREE_TO_EV - e).abs() < 1e-15);
        assert!((UnitSystem::Electronvolt.energy_from_au(e) - ev).abs() == 0.0);
        assert!(UnitSystem::Atomic.energy_from_au(e) == e);
    }
}
