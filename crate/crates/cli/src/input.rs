//! Run specification assembled from a JSON document and command-line overrides.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use crflow::lie_algebra::{normalize_frame, validate};
use crflow::presets::Preset;
use crflow::{FlowKind, FlowState, NormalizedContactData};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure_constants: Option<Normalized>,
    /// `raw_constants[i][j][k] = c^{i+1}_{j+1,k+1}`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_constants: Option<[[[f64; 3]; 3]; 3]>,
    /// Contact form in the dual basis, used with `raw_constants`; defaults to ω¹.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSpec {
    pub name: String,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Normalized {
    pub c2_13: f64,
    pub c2_23: f64,
    pub c3_12: f64,
    pub c3_23: f64,
}

impl From<&NormalizedContactData> for Normalized {
    fn from(nd: &NormalizedContactData) -> Self {
        Self {
            c2_13: nd.c2_13(),
            c2_23: nd.c2_23(),
            c3_12: nd.c3_12(),
            c3_23: nd.c3_23(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl Initial {
    /// Fields of `other` win where present.
    pub fn merge(self, other: Initial) -> Initial {
        Initial {
            a: other.a.or(self.a),
            c: other.c.or(self.c),
            b: other.b.or(self.b),
            phi: other.phi.or(self.phi),
            tau: other.tau.or(self.tau),
        }
    }
}

impl From<&FlowState> for Initial {
    fn from(s: &FlowState) -> Self {
        Self {
            a: Some(s.a),
            c: Some(s.c),
            b: Some(s.b_sq),
            phi: s.phi,
            tau: s.tau,
        }
    }
}

/// Where the constants came from, for reports.
#[derive(Debug, Clone)]
pub enum Source {
    Preset(Preset),
    Normalized,
    Raw { unimodular: bool },
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub nd: NormalizedContactData,
    pub source: Source,
    /// Preset default overlaid with the document's `initial`.
    pub initial: Initial,
    pub kind: Option<FlowKind>,
    pub t_end: Option<f64>,
}

/// `NAME` or `NAME:X`, with `--K` as an alternative way to give the parameter.
pub fn parse_preset(arg: &str, k: Option<f64>) -> Result<Preset> {
    let (name, param) = match arg.split_once(':') {
        Some((name, x)) => {
            let x: f64 = x.parse().with_context(|| format!("bad preset parameter `{x}`"))?;
            (name, Some(x))
        }
        None => (arg, None),
    };
    if param.is_some() && k.is_some() {
        bail!("preset parameter given twice (`{arg}` and --K)");
    }
    Ok(Preset::parse(name, param.or(k))?)
}

pub fn read_doc(path: &Path) -> Result<InputDoc> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed input {}", path.display()))
}

fn from_preset(preset: Preset) -> Result<Problem> {
    let (nd, s) = preset.build()?;
    Ok(Problem {
        nd,
        source: Source::Preset(preset),
        initial: Initial::from(&s),
        kind: None,
        t_end: None,
    })
}

pub fn resolve_doc(doc: &InputDoc) -> Result<Problem> {
    let given = [doc.preset.is_some(), doc.structure_constants.is_some(), doc.raw_constants.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        bail!("input needs exactly one of \"preset\", \"structure_constants\", \"raw_constants\"");
    }
    if doc.theta.is_some() && doc.raw_constants.is_none() {
        bail!("\"theta\" is only used with \"raw_constants\"");
    }
    let mut problem = if let Some(p) = &doc.preset {
        if p.k.is_some() && p.t.is_some() {
            bail!("preset takes one parameter, got both K and t");
        }
        from_preset(Preset::parse(&p.name, p.k.or(p.t))?)?
    } else if let Some(n) = &doc.structure_constants {
        Problem {
            nd: NormalizedContactData::new(n.c2_13, n.c2_23, n.c3_12, n.c3_23)?,
            source: Source::Normalized,
            initial: Initial::from(&FlowState::new(0.0, 1.0, 1.0)),
            kind: None,
            t_end: None,
        }
    } else {
        let raw = doc.raw_constants.expect("checked above");
        let sc = validate(&raw)?;
        let (nd, _) = normalize_frame(&sc, &doc.theta.unwrap_or([1.0, 0.0, 0.0]))?;
        Problem {
            nd,
            source: Source::Raw {
                unimodular: crflow::lie_algebra::is_unimodular(&sc),
            },
            initial: Initial::from(&FlowState::new(0.0, 1.0, 1.0)),
            kind: None,
            t_end: None,
        }
    };
    if let Some(init) = doc.initial {
        problem.initial = problem.initial.merge(init);
    }
    problem.kind = doc.kind.as_deref().map(str::parse).transpose()?;
    problem.t_end = doc.t_end;
    Ok(problem)
}

/// Exactly one of an input file or a preset.
pub fn load(input: Option<&Path>, preset: Option<&str>, k: Option<f64>) -> Result<Problem> {
    match (input, preset) {
        (Some(path), None) => {
            if k.is_some() {
                bail!("--K only applies with --preset");
            }
            resolve_doc(&read_doc(path)?)
        }
        (None, Some(name)) => from_preset(parse_preset(name, k)?),
        (Some(_), Some(_)) => bail!("give either --input or --preset, not both"),
        (None, None) => bail!("no input: use --input FILE or --preset NAME"),
    }
}

impl Problem {
    /// Initial state for `kind`. A missing `tau` defaults to 1 and a missing
    /// `phi` is solved from the normalization constraint.
    pub fn start(&self, kind: FlowKind, overrides: Initial) -> Result<FlowState> {
        use crflow::entropy::{solve_phi, EntropyConfig, EntropyKind};
        let init = self.initial.merge(overrides);
        let mut s = FlowState::new(init.a.unwrap_or(0.0), init.c.unwrap_or(1.0), init.b.unwrap_or(1.0));
        if kind.needs_tau() {
            s = s.with_tau(init.tau.unwrap_or(1.0));
        } else if let Some(tau) = init.tau {
            s = s.with_tau(tau);
        }
        s.check()?;
        if kind.needs_phi() {
            let phi = match init.phi {
                Some(phi) => phi,
                None => {
                    let functional = EntropyKind::for_flow(kind).unwrap_or(EntropyKind::F);
                    solve_phi(functional, &s, &EntropyConfig::new(functional))?
                }
            };
            s = s.with_phi(phi);
        } else if let Some(phi) = init.phi {
            s = s.with_phi(phi);
        }
        Ok(s)
    }

    pub fn label(&self) -> String {
        match &self.source {
            Source::Preset(p) => p.to_string(),
            Source::Normalized => "structure_constants".to_string(),
            Source::Raw { .. } => "raw_constants".to_string(),
        }
    }
}
