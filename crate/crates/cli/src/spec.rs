//! Problem files.
//!
//! A problem is written in TOML (JSON is accepted too). Exact quantities
//! are strings: `"3/2"`, `"-1"`, `"0.25"`, and for ρ also π-multiples
//! such as `"2pi"`, `"3/2 pi"` or `"pi"`.
//!
//! ```toml
//! matrix = [["0", "2"], ["2", "0"]]
//! rho = ["2pi", "2pi"]
//!
//! [topology]
//! kind = "torus"
//!
//! [profile]
//! strengths = ["1"]
//! points = [[0.5, 0.5]]
//! ```

use serde::{Deserialize, Serialize};

use liouville_core::coupling::{CouplingMatrix, RhoUnit, RhoVector};
use liouville_core::degree::{SingularPoint, SingularProfile, Topology};
use liouville_core::exact::{self, Rational};
use liouville_core::solver::{ReferenceWeight, SolveConfig};

/// A field-level validation failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct SpecError {
    pub field: String,
    pub message: String,
    /// Machine-readable error kind, e.g. `"InvalidRho"`.
    pub kind: &'static str,
}

impl SpecError {
    fn new(field: impl Into<String>, message: impl ToString) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
            kind: "InvalidSpec",
        }
    }

    fn kind(mut self, kind: &'static str) -> Self {
        self.kind = kind;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub topology: TopologySpec,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[String; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[WeightSpec; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    #[default]
    Torus,
    Sphere,
    /// Closed surface of the given genus.
    Surface,
    /// Planar domain with the given number of holes.
    Planar,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genus: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holes: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default)]
    pub strengths: Vec<String>,
    /// Positions in `[0, 1)²`; optional for purely combinatorial commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
}

/// `{ constant = 1.0 }` or `{ cosine = { amplitude = 0.2, wavevector = [1, 0] } }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightSpec {
    Constant(f64),
    Cosine { amplitude: f64, wavevector: [i32; 2] },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub from: [String; 2],
    pub to: [String; 2],
    pub steps: usize,
    /// Whether the first step sits at `from` (t = 0) rather than one step in.
    #[serde(default = "default_true")]
    pub include_start: bool,
}

fn default_true() -> bool {
    true
}

impl ProblemSpec {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| SpecError::new("spec", e).kind("ParseError"))
        } else {
            toml::from_str(text).map_err(|e| SpecError::new("spec", e.message()).kind("ParseError"))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("specs serialize")
    }

    pub fn topology(&self) -> Result<Topology, SpecError> {
        let t = &self.topology;
        let unexpected = |name: &str| SpecError::new(format!("topology.{name}"), "not used by this kind");
        match t.kind {
            TopologyKind::Torus | TopologyKind::Sphere if t.genus.is_some() => Err(unexpected("genus")),
            TopologyKind::Torus | TopologyKind::Sphere | TopologyKind::Surface if t.holes.is_some() => {
                Err(unexpected("holes"))
            }
            TopologyKind::Planar if t.genus.is_some() => Err(unexpected("genus")),
            TopologyKind::Torus => Ok(Topology::torus()),
            TopologyKind::Sphere => Ok(Topology::sphere()),
            TopologyKind::Surface => t
                .genus
                .map(|genus| Topology::ClosedSurface { genus })
                .ok_or_else(|| SpecError::new("topology.genus", "missing")),
            TopologyKind::Planar => Ok(Topology::PlanarDomain {
                holes: t.holes.unwrap_or(0),
            }),
        }
    }

    pub fn profile(&self) -> Result<SingularProfile, SpecError> {
        let gammas = self
            .profile
            .strengths
            .iter()
            .enumerate()
            .map(|(i, s)| {
                exact::parse_rational(s)
                    .map_err(|e| SpecError::new(format!("profile.strengths[{i}]"), e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let profile = match &self.profile.points {
            None => SingularProfile::from_strengths(gammas),
            Some(points) => {
                if points.len() != gammas.len() {
                    return Err(SpecError::new(
                        "profile.points",
                        format!("{} points for {} strengths", points.len(), gammas.len()),
                    ));
                }
                SingularProfile::new(
                    points
                        .iter()
                        .zip(gammas)
                        .map(|(&position, gamma)| SingularPoint { position, gamma })
                        .collect(),
                )
            }
        };
        profile.map_err(|e| SpecError::new("profile", e).kind("InvalidProfile"))
    }

    pub fn matrix(&self) -> Result<CouplingMatrix, SpecError> {
        let m = self
            .matrix
            .as_ref()
            .ok_or_else(|| SpecError::new("matrix", "missing"))?;
        let mut entries = Vec::with_capacity(4);
        for (i, row) in m.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                entries.push(
                    exact::parse_rational(s)
                        .map_err(|e| SpecError::new(format!("matrix[{i}][{j}]"), e))?,
                );
            }
        }
        let [a11, a12, a21, a22]: [Rational; 4] = entries.try_into().expect("four entries");
        let a = CouplingMatrix::new(a11, a12, a21, a22);
        a.ensure_hypothesis()
            .map_err(|e| SpecError::new("matrix", e).kind("Hypothesis"))?;
        Ok(a)
    }

    pub fn rho(&self) -> Result<RhoVector, SpecError> {
        let rho = self
            .rho
            .as_ref()
            .ok_or_else(|| SpecError::new("rho", "missing"))?;
        parse_rho_pair(rho, "rho")
    }

    pub fn cutoff(&self, flag: Option<&str>) -> Result<Rational, SpecError> {
        let text = flag
            .or(self.cutoff.as_deref())
            .ok_or_else(|| SpecError::new("cutoff", "missing"))?;
        let q = exact::parse_rational(text).map_err(|e| SpecError::new("cutoff", e))?;
        if q <= exact::int(0) {
            return Err(SpecError::new("cutoff", "must be positive").kind("InvalidCutoff"));
        }
        Ok(q)
    }

    pub fn weights(&self) -> Result<[ReferenceWeight; 2], SpecError> {
        let Some(w) = &self.weights else {
            return Ok([ReferenceWeight::Constant(1.0), ReferenceWeight::Constant(1.0)]);
        };
        let mut out = Vec::with_capacity(2);
        for (i, spec) in w.iter().enumerate() {
            let field = format!("weights[{i}]");
            out.push(match *spec {
                WeightSpec::Constant(value) if value > 0.0 && value.is_finite() => {
                    ReferenceWeight::Constant(value)
                }
                WeightSpec::Constant(_) => {
                    return Err(SpecError::new(field, "must be positive and finite"))
                }
                WeightSpec::Cosine {
                    amplitude,
                    wavevector,
                } if amplitude.abs() < 1.0 => ReferenceWeight::Cosine {
                    amplitude,
                    wavevector,
                },
                WeightSpec::Cosine { .. } => {
                    return Err(SpecError::new(field, "cosine amplitude must lie in (-1, 1)"))
                }
            });
        }
        Ok(out.try_into().expect("two weights"))
    }

    pub fn solver_config(&self, grid: Option<usize>) -> Result<SolveConfig, SpecError> {
        let mut c = SolveConfig::default();
        if let Some(s) = &self.solver {
            c.grid = s.grid.unwrap_or(c.grid);
            c.damping = s.damping.unwrap_or(c.damping);
            c.max_iterations = s.max_iterations.unwrap_or(c.max_iterations);
            c.tolerance = s.tolerance.unwrap_or(c.tolerance);
            c.newton_threshold = s.newton_threshold.unwrap_or(c.newton_threshold);
            c.truncation = s.truncation.or(c.truncation);
            c.ball_radius = s.delta.unwrap_or(c.ball_radius);
        }
        if let Some(n) = grid {
            c.grid = n;
        }
        c.validate()
            .map_err(|e| SpecError::new("solver", e).kind("InvalidConfig"))?;
        Ok(c)
    }

    pub fn sweep_path(&self) -> Result<(RhoVector, RhoVector, &SweepSpec), SpecError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| SpecError::new("sweep", "missing"))?;
        if s.steps == 0 {
            return Err(SpecError::new("sweep.steps", "must be positive"));
        }
        let from = parse_rho_pair(&s.from, "sweep.from")?;
        let to = parse_rho_pair(&s.to, "sweep.to")?;
        if from.unit() != to.unit() {
            return Err(SpecError::new("sweep", "from and to mix plain and pi-multiple units")
                .kind("MixedUnits"));
        }
        Ok((from, to, s))
    }
}

/// Splits `"3/2pi"`, `"3/2 pi"`, `"3/2*pi"`, `"pi"` or `"-pi"` into a
/// coefficient and a flag telling whether π was present.
pub fn parse_rho_component(text: &str) -> Option<(Rational, bool)> {
    let s = text.trim();
    let stripped = s
        .strip_suffix("pi")
        .or_else(|| s.strip_suffix("π"))
        .map(|c| c.trim_end().trim_end_matches('*').trim_end());
    match stripped {
        Some(c) => {
            let coeff = match c {
                "" | "+" => exact::int(1),
                "-" => exact::int(-1),
                _ => exact::parse_rational(c).ok()?,
            };
            Some((coeff, true))
        }
        None => exact::parse_rational(s).ok().map(|q| (q, false)),
    }
}

fn parse_rho_pair(pair: &[String; 2], field: &str) -> Result<RhoVector, SpecError> {
    let mut coeffs = Vec::with_capacity(2);
    let mut units = Vec::with_capacity(2);
    for (i, s) in pair.iter().enumerate() {
        let (c, pi) = parse_rho_component(s).ok_or_else(|| {
            SpecError::new(format!("{field}[{i}]"), format!("cannot parse {s:?}"))
        })?;
        // zero carries no unit
        if c != exact::int(0) {
            units.push(pi);
        }
        coeffs.push(c);
    }
    if units.len() == 2 && units[0] != units[1] {
        return Err(
            SpecError::new(field, "components mix plain and pi-multiple units").kind("MixedUnits")
        );
    }
    let unit = if units.first().copied().unwrap_or(false) {
        RhoUnit::Pi
    } else {
        RhoUnit::One
    };
    let [c1, c2]: [Rational; 2] = coeffs.try_into().expect("two components");
    RhoVector::with_unit(c1, c2, unit).map_err(|e| SpecError::new(field, e).kind("InvalidRho"))
}
