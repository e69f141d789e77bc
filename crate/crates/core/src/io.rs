//! JSON documents for channels, operators, families and reports.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested arrays.
//! Every top-level document carries `schema_version`.

use serde::{Deserialize, Serialize};

use crate::channel::{is_cptp, random_unitary_channel, unitary_channel, KrausChannel, ProbVector};
use crate::deconvolution::ObservableFamily;
use crate::error::{Error, Result};
use crate::linalg::{c, ensure_dim, CMatrix, DEFAULT_TOL};
use crate::random_unitary::UnitaryErrorSet;
use crate::scenarios::ScenarioResult;

pub const SCHEMA_VERSION: u32 = 1;

/// Row-major matrix of `[re, im]` pairs.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(Error::Schema("matrix must be non-empty".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != m) {
        return Err(Error::Schema(format!(
            "ragged matrix: row of length {} in a {m}-column matrix",
            bad.len()
        )));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| {
        let [re, im] = rows[i][j];
        c(re, im)
    }))
}

fn square_from_json(rows: &JsonMatrix, dim: usize) -> Result<CMatrix> {
    let m = matrix_from_json(rows)?;
    ensure_dim(&m, dim)?;
    Ok(m)
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

/// Serialized channel description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    #[serde(flatten)]
    pub payload: ChannelPayload,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelPayload {
    Kraus {
        kraus: Vec<JsonMatrix>,
    },
    Unitary {
        unitary: JsonMatrix,
    },
    /// Probabilities default to uniform when omitted.
    RandomUnitary {
        unitaries: Vec<JsonMatrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probabilities: Option<Vec<f64>>,
    },
    ConvexCombination {
        weights: Vec<f64>,
        components: Vec<ChannelSpec>,
    },
}

impl ChannelSpec {
    pub fn from_kraus(name: impl Into<String>, ch: &KrausChannel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            dim: ch.dim(),
            payload: ChannelPayload::Kraus {
                kraus: ch.kraus().iter().map(matrix_to_json).collect(),
            },
        }
    }

    pub fn unitary(name: impl Into<String>, u: &CMatrix) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            dim: u.nrows(),
            payload: ChannelPayload::Unitary {
                unitary: matrix_to_json(u),
            },
        }
    }

    pub fn random_unitary(name: impl Into<String>, unitaries: &[CMatrix], probs: Option<&[f64]>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            dim: unitaries.first().map_or(0, |u| u.nrows()),
            payload: ChannelPayload::RandomUnitary {
                unitaries: unitaries.iter().map(matrix_to_json).collect(),
                probabilities: probs.map(<[f64]>::to_vec),
            },
        }
    }

    /// Builds the Kraus channel without the final CPTP check.
    fn build(&self, tol: f64) -> Result<KrausChannel> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.dim == 0 {
            return Err(Error::Schema("dim must be positive".into()));
        }
        match &self.payload {
            ChannelPayload::Kraus { kraus } => {
                if kraus.is_empty() {
                    return Err(Error::Schema("kraus list is empty".into()));
                }
                let ops = kraus
                    .iter()
                    .map(|k| square_from_json(k, self.dim))
                    .collect::<Result<Vec<_>>>()?;
                KrausChannel::new_unchecked(ops)
            }
            ChannelPayload::Unitary { unitary } => unitary_channel(&square_from_json(unitary, self.dim)?, tol),
            ChannelPayload::RandomUnitary {
                unitaries,
                probabilities,
            } => {
                let us = self.unitaries_of(unitaries)?;
                let probs = match probabilities {
                    Some(p) => ProbVector::new(p.clone(), tol)?,
                    None => ProbVector::uniform(us.len()),
                };
                random_unitary_channel(&probs, &us, tol)
            }
            ChannelPayload::ConvexCombination { weights, components } => {
                if components.is_empty() {
                    return Err(Error::Schema("convex combination has no components".into()));
                }
                let w = ProbVector::new(weights.clone(), tol)?;
                let parts = components
                    .iter()
                    .map(|s| {
                        if s.dim != self.dim {
                            return Err(Error::DimensionMismatch {
                                expected: self.dim,
                                found: s.dim,
                            });
                        }
                        s.build(tol)
                    })
                    .collect::<Result<Vec<_>>>()?;
                KrausChannel::convex_combination(&w, &parts)
            }
        }
    }

    fn unitaries_of(&self, unitaries: &[JsonMatrix]) -> Result<Vec<CMatrix>> {
        if unitaries.is_empty() {
            return Err(Error::Schema("unitary list is empty".into()));
        }
        unitaries.iter().map(|u| square_from_json(u, self.dim)).collect()
    }

    /// Kraus form after a full CPTP check at `tol`.
    pub fn to_channel(&self, tol: f64) -> Result<KrausChannel> {
        let ch = self.build(tol)?;
        let report = is_cptp(&ch, tol);
        if !report.trace_preserving {
            return Err(Error::NotTracePreserving {
                residual: report.trace_residual,
                tol,
            });
        }
        Ok(ch)
    }

    /// Error set of a `random_unitary` spec, with `guess_index` as the guess.
    pub fn to_error_set(&self, guess_index: usize, tol: f64) -> Result<UnitaryErrorSet> {
        match &self.payload {
            ChannelPayload::RandomUnitary { unitaries, .. } => {
                UnitaryErrorSet::new(self.unitaries_of(unitaries)?, guess_index, tol)
            }
            _ => Err(Error::Schema("expected a random_unitary channel spec".into())),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel spec serializes")
    }
}

fn classify(e: serde_json::Error) -> Error {
    match e.classify() {
        serde_json::error::Category::Data => Error::Schema(e.to_string()),
        _ => Error::Json(e),
    }
}

/// Parses a channel spec and checks that it describes a trace-preserving channel.
pub fn parse_channel_spec(text: &[u8]) -> Result<ChannelSpec> {
    parse_channel_spec_with_tol(text, DEFAULT_TOL)
}

pub fn parse_channel_spec_with_tol(text: &[u8], tol: f64) -> Result<ChannelSpec> {
    let spec: ChannelSpec = serde_json::from_slice(text).map_err(classify)?;
    spec.to_channel(tol)?;
    Ok(spec)
}

/// A single operator: an observable or a density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDoc {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub matrix: JsonMatrix,
}

impl OperatorDoc {
    pub fn new(name: impl Into<String>, m: &CMatrix) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            matrix: matrix_to_json(m),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let m = matrix_from_json(&self.matrix)?;
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(m)
    }
}

pub fn parse_operator(text: &[u8]) -> Result<CMatrix> {
    serde_json::from_slice::<OperatorDoc>(text)
        .map_err(classify)?
        .to_matrix()
}

/// Serialized observable family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyDoc {
    pub schema_version: u32,
    pub dim: usize,
    pub n_params: usize,
    pub basis: Vec<JsonMatrix>,
}

impl FamilyDoc {
    pub fn new(fam: &ObservableFamily) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            dim: fam.dim(),
            n_params: fam.n_params(),
            basis: fam.basis().iter().map(matrix_to_json).collect(),
        }
    }

    pub fn to_family(&self) -> Result<ObservableFamily> {
        let ops = self
            .basis
            .iter()
            .map(|b| square_from_json(b, self.dim))
            .collect::<Result<Vec<_>>>()?;
        let fam = ObservableFamily::from_operators(self.dim, &ops)?;
        if fam.n_params() != self.n_params {
            return Err(Error::Schema(format!(
                "n_params is {} but the basis spans {} dimensions",
                self.n_params,
                fam.n_params()
            )));
        }
        Ok(fam)
    }
}

pub fn parse_family(text: &[u8]) -> Result<ObservableFamily> {
    serde_json::from_slice::<FamilyDoc>(text).map_err(classify)?.to_family()
}

/// Output format of the command-line reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "table" => Ok(Format::Table),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

/// Renders a scenario result as JSON or as a human-readable table.
pub fn emit_report(result: &ScenarioResult, format: Format) -> String {
    match format {
        Format::Json => {
            let mut out = serde_json::to_string_pretty(result).expect("scenario result serializes");
            out.push('\n');
            out
        }
        Format::Table => {
            let mut out = String::new();
            let mut line = |k: &str, v: String| out.push_str(&format!("{k:<22}{v}\n"));
            line("scenario", result.scenario.clone());
            line("description", result.description.clone());
            line("seed", result.seed.to_string());
            let params: Vec<String> = result.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
            line("parameters", params.join(" "));
            if !result.probes.is_empty() {
                let probes: Vec<String> = result.probes.iter().map(|p| format!("{p:.6}")).collect();
                line("probes", probes.join(" "));
            }
            line(
                "family_dim",
                format!("{} (expected {})", result.family_dim, result.expected_family_dim),
            );
            line("max_delta_nd", format!("{:.3e}", result.max_delta_nd));
            out.push('\n');
            let width = result.checks.iter().map(|c| c.label.len()).max().unwrap_or(0);
            for c in &result.checks {
                out.push_str(&format!(
                    "{}  {:<width$}  residual {:.3e}  tol {:.1e}\n",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.label,
                    c.residual,
                    c.tolerance,
                ));
            }
            out.push_str(if result.passed {
                "\nresult: PASS\n"
            } else {
                "\nresult: FAIL\n"
            });
            out
        }
    }
}

pub fn parse_report(text: &[u8]) -> Result<ScenarioResult> {
    serde_json::from_slice(text).map_err(classify)
}
