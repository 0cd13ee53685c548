use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FabricationError;
use crate::mesh::Vector3;

/// Environment variable naming a JSON motor spec that replaces the built-in one.
pub const MOTOR_SPEC_ENV: &str = "FORGE_MOTOR_SPEC";

/// Rivet hole on the motor body; holes are bored along the body's local x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RivetHole {
    pub position: Vector3,
    pub diameter: f64,
}

/// Servo body in its own frame: x across the body, y along its length, z
/// along the output shaft. The origin is the body center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorSpec {
    pub id: String,
    /// Width, height and depth (x, y, z), mm.
    pub body: [f64; 3],
    /// Shaft center on the horn face.
    pub horn_offset: Vector3,
    pub horn_radius: f64,
    pub rivet_holes: Vec<RivetHole>,
}

impl MotorSpec {
    /// Dynamixel XL-320.
    pub fn xl320() -> MotorSpec {
        let hole = |x: f64, y: f64, z: f64| RivetHole {
            position: Vector3::new(x, y, z),
            diameter: 2.5,
        };
        MotorSpec {
            id: "XL-320".into(),
            body: [24.0, 36.0, 27.0],
            horn_offset: Vector3::new(0.0, 10.0, 13.5),
            horn_radius: 5.0,
            rivet_holes: vec![
                hole(0.0, -11.0, -8.0),
                hole(0.0, -11.0, 8.0),
                hole(0.0, 11.0, -8.0),
                hole(0.0, 11.0, 8.0),
            ],
        }
    }

    pub fn check(&self) -> Result<(), FabricationError> {
        let bad = |msg: String| Err(FabricationError::BadMotorSpec(msg));
        if self.id.trim().is_empty() {
            return bad("empty id".into());
        }
        if !self.body.iter().all(|d| *d > 0.0 && d.is_finite()) {
            return bad(format!("body dimensions {:?} must be positive", self.body));
        }
        if !(self.horn_radius > 0.0) {
            return bad(format!("horn radius {} must be positive", self.horn_radius));
        }
        if let Some(h) = self.rivet_holes.iter().find(|h| !(h.diameter > 0.0)) {
            return bad(format!("rivet hole diameter {} must be positive", h.diameter));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<MotorSpec, FabricationError> {
        let spec: MotorSpec =
            serde_json::from_str(text).map_err(|e| FabricationError::BadMotorSpec(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<MotorSpec, FabricationError> {
        MotorSpec::from_json(&std::fs::read_to_string(path)?)
    }

    /// The spec named by `FORGE_MOTOR_SPEC`, or the XL-320.
    pub fn from_env() -> Result<MotorSpec, FabricationError> {
        match std::env::var_os(MOTOR_SPEC_ENV) {
            Some(p) if !p.is_empty() => MotorSpec::load(Path::new(&p)),
            _ => Ok(MotorSpec::xl320()),
        }
    }

    pub fn volume(&self) -> f64 {
        self.body.iter().product()
    }
}

impl Default for MotorSpec {
    fn default() -> Self {
        MotorSpec::xl320()
    }
}
