use serde::{Deserialize, Serialize};

use crate::lattice::Vec3;

/// External magnetic field in polar form. `b` in G, angles in rad, `theta` from the surface normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub b: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

impl FieldSpec {
    pub fn new(b: f64, theta: f64, phi: f64) -> Self {
        Self { b, theta, phi }
    }

    pub fn along_z(b: f64) -> Self {
        Self { b, theta: 0.0, phi: 0.0 }
    }

    /// Field with direction `dir` (need not be normalized).
    pub fn from_vector(b: f64, dir: Vec3) -> Self {
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        let theta = (dir[2] / n).clamp(-1.0, 1.0).acos();
        let mut phi = dir[1].atan2(dir[0]);
        if phi < 0.0 {
            phi += 2.0 * std::f64::consts::PI;
        }
        Self { b, theta, phi }
    }

    pub fn direction(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn vector(&self) -> Vec3 {
        let d = self.direction();
        [self.b * d[0], self.b * d[1], self.b * d[2]]
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(format!("field magnitude {} must be finite and >= 0", self.b));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.theta) {
            return Err(format!("theta {} outside [0, pi]", self.theta));
        }
        if !(0.0..2.0 * std::f64::consts::PI).contains(&self.phi) {
            return Err(format!("phi {} outside [0, 2pi)", self.phi));
        }
        Ok(())
    }
}
