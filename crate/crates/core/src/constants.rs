//! Physical constants in the units used across the crate.
//!
//! Nuclear energies are in kHz, electron ones in MHz, lengths in Å.

/// Electron gyromagnetic ratio, MHz/G.
pub const GAMMA_E: f64 = 2.8025;

/// Proton gyromagnetic ratio, kHz/G.
pub const GAMMA_H: f64 = 4.2577;

/// (μ0/4π)·h expressed in kHz·Å³ per (kHz/G)².
///
/// μ0/4π = 1e-7 T·m/A, so (μ0/4π)·h·γ1·γ2/r³ with γ in Hz/T and r in m gives Hz.
/// Converting 1 kHz/G = 1e7 Hz/T and 1 Å = 1e-10 m leaves 1e-7·h·1e14·1e30 Hz = 6.62607 kHz.
pub const DIPOLAR_UNIT: f64 = 6.626_070_15;

/// Proton-proton dipolar prefactor, kHz·Å³.
pub const K_HH: f64 = 120.12;

/// Electron-proton dipolar prefactor, kHz·Å³.
pub fn k_eh(gamma_e_mhz: f64, gamma_n_khz: f64) -> f64 {
    DIPOLAR_UNIT * gamma_e_mhz * 1e3 * gamma_n_khz
}

/// Default surface lattice constant of 3C-SiC(001) and (111), Å.
pub const A_SURFACE: f64 = 3.08;

/// Bulk 3C-SiC cubic lattice constant, Å.
pub const A_BULK_3C: f64 = 4.3596;

/// Axial zero-field splitting from first principles, MHz.
pub const D_ZFS: f64 = 1425.0;

/// Measured axial zero-field splitting, MHz.
pub const D_ZFS_EXPERIMENT: f64 = 1328.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proton_prefactor_from_si() {
        let k = DIPOLAR_UNIT * GAMMA_H * GAMMA_H;
        assert!((k - K_HH).abs() < 1e-2, "{k}");
    }

    #[test]
    fn surface_constant_is_half_diagonal() {
        assert!((A_BULK_3C / 2f64.sqrt() - A_SURFACE).abs() < 5e-3);
    }

    #[test]
    fn electron_proton_prefactor() {
        let k = k_eh(GAMMA_E, GAMMA_H);
        assert!((k / K_HH - GAMMA_E * 1e3 / GAMMA_H).abs() / (k / K_HH) < 1e-3);
    }
}
