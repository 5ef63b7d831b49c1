//! Named examples with their default initial states.

use std::fmt;

use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::lie_algebra::NormalizedContactData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// Circle bundle over a surface of curvature `K`.
    Pdq(f64),
    /// Prequantization-type bundle, `K ≠ 0`.
    Prequant(f64),
    Heisenberg,
    /// Rossi sphere, `t ∈ [0, 1)`.
    Rossi(f64),
    Su2,
    Sl2Hyperbolic,
}

pub const PRESET_NAMES: [&str; 6] = ["pdq", "prequant", "heisenberg", "rossi", "su2", "sl2_hyperbolic"];

impl Preset {
    /// Looks up a preset by name; `param` is `K` for pdq/prequant and `t` for rossi.
    pub fn parse(name: &str, param: Option<f64>) -> Result<Self> {
        let need = |label: &'static str| param.ok_or(Error::InvalidParameter { name: label, value: f64::NAN });
        let preset = match name.to_ascii_lowercase().as_str() {
            "pdq" => Preset::Pdq(need("K")?),
            "prequant" => Preset::Prequant(need("K")?),
            "heisenberg" => Preset::Heisenberg,
            "rossi" => Preset::Rossi(need("t")?),
            "su2" => Preset::Su2,
            "sl2_hyperbolic" | "sl2r_hyperbolic" => Preset::Sl2Hyperbolic,
            _ => return Err(Error::UnknownPreset(name.to_string())),
        };
        Ok(preset)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Pdq(_) => "pdq",
            Preset::Prequant(_) => "prequant",
            Preset::Heisenberg => "heisenberg",
            Preset::Rossi(_) => "rossi",
            Preset::Su2 => "su2",
            Preset::Sl2Hyperbolic => "sl2_hyperbolic",
        }
    }

    pub fn build(&self) -> Result<(NormalizedContactData, FlowState)> {
        let default = FlowState::new(0.0, 1.0, 1.0);
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidParameter { name, value: v })
            }
        };
        match *self {
            Preset::Pdq(k) => Ok((NormalizedContactData::new(-finite("K", k)?, 0.0, 1.0, 0.0)?, default)),
            Preset::Prequant(k) => {
                if k == 0.0 || !k.is_finite() {
                    return Err(Error::InvalidParameter { name: "K", value: k });
                }
                Ok((NormalizedContactData::new(-k, 0.0, 1.0 / k, 0.0)?, default))
            }
            Preset::Heisenberg => Ok((NormalizedContactData::heisenberg(), default)),
            Preset::Rossi(t) => {
                if !(0.0..1.0).contains(&t) {
                    return Err(Error::InvalidParameter { name: "t", value: t });
                }
                let nd = NormalizedContactData::new(-1.0, 0.0, 1.0, 0.0)?;
                Ok((nd, FlowState::new(0.0, (1.0 - t) / (1.0 + t), 0.5)))
            }
            Preset::Su2 => Ok((NormalizedContactData::new(-1.0, 0.0, 1.0, 0.0)?, default)),
            Preset::Sl2Hyperbolic => Ok((NormalizedContactData::new(1.0, 0.0, -1.0, 0.0)?, default)),
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Preset::Pdq(_) => "circle bundle over a surface of curvature K (param K)",
            Preset::Prequant(_) => "bundle with c^3_12 = 1/K (param K, nonzero)",
            Preset::Heisenberg => "Heisenberg group, torsion-free for every J",
            Preset::Rossi(_) => "Rossi sphere, su2 constants with c = (1-t)/(1+t), B = 1/2 (param t in [0,1))",
            Preset::Su2 => "SU(2), attracting",
            Preset::Sl2Hyperbolic => "SL(2,R) hyperbolic, repelling",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Pdq(k) | Preset::Prequant(k) => write!(f, "{}(K={k})", self.name()),
            Preset::Rossi(t) => write!(f, "rossi(t={t})"),
            _ => f.write_str(self.name()),
        }
    }
}

/// Convenience wrapper around [`Preset::parse`] and [`Preset::build`].
pub fn preset(name: &str, param: Option<f64>) -> Result<(NormalizedContactData, FlowState)> {
    Preset::parse(name, param)?.build()
}
