//! JSON entity files and verification reports.
//!
//! Complex entries are `[re, im]` pairs (a bare number is read as a real
//! entry); matrices are row-major nested arrays. Outcome lists are arrays of
//! `{"label": .., "effect": ..}` or `{"label": .., "kraus": [..]}` records so
//! the outcome order survives a round trip.

use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::effects::{DensityState, Effect, StateKind};
use crate::error::Error;
use crate::instruments::{Channel, Instrument, QuantumOperation};
use crate::labels::OutcomeLabel;
use crate::linalg::{cplx, CMatrix, Tolerance};
use crate::models::MeasurementModel;
use crate::observables::Observable;
use crate::parts::Entity;
use crate::scalar::Real;

/// Rejection of an entity file, with a JSON path to the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{path}: missing field")]
    Missing { path: String },
    #[error("{path}: expected {expected}")]
    WrongType { path: String, expected: &'static str },
    #[error("{path}: unknown kind {kind:?}")]
    UnknownKind { path: String, kind: String },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: Error,
    },
}

impl SpecError {
    pub fn path(&self) -> Option<&str> {
        match self {
            SpecError::Syntax(_) => None,
            SpecError::Missing { path }
            | SpecError::WrongType { path, .. }
            | SpecError::UnknownKind { path, .. }
            | SpecError::Invalid { path, .. } => Some(path),
        }
    }
}

type SpecResult<T> = std::result::Result<T, SpecError>;

/// A parsed entity file.
#[derive(Debug, Clone, PartialEq)]
pub enum EntitySpec<T: Real> {
    Effect { dims: Vec<usize>, effect: Effect<T> },
    State { dims: Vec<usize>, state: DensityState<T> },
    Observable { dims: Vec<usize>, observable: Observable<T> },
    Instrument { dims: Vec<usize>, instrument: Instrument<T> },
    Model { dims: Vec<usize>, model: MeasurementModel<T> },
}

impl<T: Real> EntitySpec<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            EntitySpec::Effect { .. } => "effect",
            EntitySpec::State { .. } => "state",
            EntitySpec::Observable { .. } => "observable",
            EntitySpec::Instrument { .. } => "instrument",
            EntitySpec::Model { .. } => "mm",
        }
    }

    /// Factor dimensions of the base space.
    pub fn dims(&self) -> &[usize] {
        match self {
            EntitySpec::Effect { dims, .. }
            | EntitySpec::State { dims, .. }
            | EntitySpec::Observable { dims, .. }
            | EntitySpec::Instrument { dims, .. }
            | EntitySpec::Model { dims, .. } => dims,
        }
    }

    /// The outcome-bearing entity, if this spec is one.
    pub fn entity(&self) -> Option<Entity<T>> {
        match self {
            EntitySpec::Observable { observable, .. } => Some(Entity::Observable(observable.clone())),
            EntitySpec::Instrument { instrument, .. } => Some(Entity::Instrument(instrument.clone())),
            EntitySpec::Model { model, .. } => Some(Entity::Model(model.clone())),
            _ => None,
        }
    }

    pub fn from_observable(observable: Observable<T>) -> Self {
        EntitySpec::Observable { dims: vec![observable.dim()], observable }
    }

    pub fn from_instrument(instrument: Instrument<T>) -> Self {
        EntitySpec::Instrument { dims: vec![instrument.dim()], instrument }
    }

    pub fn from_entity(entity: Entity<T>) -> Self {
        let dims = vec![entity.dim()];
        match entity {
            Entity::Observable(observable) => EntitySpec::Observable { dims, observable },
            Entity::Instrument(instrument) => EntitySpec::Instrument { dims, instrument },
            Entity::Model(model) => EntitySpec::Model { dims, model },
        }
    }
}

/// Parses an entity file.
pub fn parse_spec<T: Real>(text: &str, tol: Tolerance<T>) -> SpecResult<EntitySpec<T>> {
    let value: Value = serde_json::from_str(text).map_err(|e| SpecError::Syntax(e.to_string()))?;
    spec_from_value(&value, tol)
}

pub fn spec_from_value<T: Real>(value: &Value, tol: Tolerance<T>) -> SpecResult<EntitySpec<T>> {
    let root = Node::root(value);
    let obj = root.object()?;
    let kind = obj.field("kind")?.string()?;
    let dims_node = obj.optional("dims");
    let spec = match kind {
        "effect" => {
            let node = obj.field("matrix")?;
            let m = node.matrix::<T>()?;
            let dims = dims_for(dims_node, m.nrows())?;
            let effect = Effect::new(m, tol).map_err(|e| node.invalid(e))?;
            EntitySpec::Effect { dims, effect }
        }
        "state" => {
            let node = obj.field("matrix")?;
            let m = node.matrix::<T>()?;
            let dims = dims_for(dims_node, m.nrows())?;
            let state_kind = match obj.optional("partial") {
                Some(p) if p.boolean()? => StateKind::Partial,
                _ => StateKind::Full,
            };
            let state = DensityState::new(m, state_kind, tol).map_err(|e| node.invalid(e))?;
            EntitySpec::State { dims, state }
        }
        "observable" => {
            let outcomes = obj.field("outcomes")?;
            let observable = observable_from(&outcomes, tol)?;
            let dims = dims_for(dims_node, observable.dim())?;
            EntitySpec::Observable { dims, observable }
        }
        "instrument" => {
            let outcomes = obj.field("outcomes")?;
            let instrument = instrument_from(&outcomes, tol)?;
            let dims = dims_for(dims_node, instrument.dim())?;
            EntitySpec::Instrument { dims, instrument }
        }
        "mm" => {
            let eta_node = obj.field("probe_state")?;
            let eta = DensityState::full(eta_node.matrix::<T>()?, tol).map_err(|e| eta_node.invalid(e))?;
            let nu_node = obj.field("interaction")?;
            let kraus = nu_node.array()?.iter().map(|k| k.matrix::<T>()).collect::<SpecResult<Vec<_>>>()?;
            let nu = Channel::from_kraus(kraus, tol).map_err(|e| nu_node.invalid(e))?;
            let f_node = obj.field("probe_observable")?;
            let f = observable_from(&f_node, tol)?;
            let k = eta.dim();
            if nu.dim_in() % k != 0 {
                return Err(nu_node.invalid(Error::DimensionMismatch {
                    context: "interaction channel input",
                    expected: k,
                    found: nu.dim_in(),
                }));
            }
            let n = nu.dim_in() / k;
            let dims = dims_for(dims_node, n)?;
            let model = MeasurementModel::new(n, eta, nu, f).map_err(|e| root.invalid(e))?;
            EntitySpec::Model { dims, model }
        }
        other => {
            return Err(SpecError::UnknownKind {
                path: obj.field("kind")?.path,
                kind: other.to_string(),
            })
        }
    };
    Ok(spec)
}

fn dims_for(node: Option<Node<'_>>, n: usize) -> SpecResult<Vec<usize>> {
    let Some(node) = node else {
        return Ok(vec![n]);
    };
    let dims = node.array()?.iter().map(|d| d.usize()).collect::<SpecResult<Vec<_>>>()?;
    let product: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || product != n {
        return Err(node.invalid(Error::DimensionMismatch {
            context: "dims product",
            expected: n,
            found: product,
        }));
    }
    Ok(dims)
}

fn observable_from<T: Real>(node: &Node<'_>, tol: Tolerance<T>) -> SpecResult<Observable<T>> {
    let mut outcomes = Vec::new();
    for item in node.array()? {
        let rec = item.object()?;
        let label = rec.field("label")?.label()?;
        let eff_node = rec.field("effect")?;
        let effect = Effect::new(eff_node.matrix::<T>()?, tol).map_err(|e| eff_node.invalid(e))?;
        outcomes.push((label, effect));
    }
    Observable::new(outcomes, tol).map_err(|e| node.invalid(e))
}

fn instrument_from<T: Real>(node: &Node<'_>, tol: Tolerance<T>) -> SpecResult<Instrument<T>> {
    let mut ops = Vec::new();
    for item in node.array()? {
        let rec = item.object()?;
        let label = rec.field("label")?.label()?;
        let k_node = rec.field("kraus")?;
        let kraus = k_node.array()?.iter().map(|k| k.matrix::<T>()).collect::<SpecResult<Vec<_>>>()?;
        let op = QuantumOperation::new(kraus, tol).map_err(|e| k_node.invalid(e))?;
        ops.push((label, op));
    }
    Instrument::new(ops, tol).map_err(|e| node.invalid(e))
}

/// A JSON value together with its path from the document root.
#[derive(Clone)]
struct Node<'a> {
    value: &'a Value,
    path: String,
}

struct ObjectNode<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Node<'a> {
    fn root(value: &'a Value) -> Self {
        Node { value, path: "$".into() }
    }

    fn wrong(&self, expected: &'static str) -> SpecError {
        SpecError::WrongType { path: self.path.clone(), expected }
    }

    fn invalid(&self, source: Error) -> SpecError {
        SpecError::Invalid { path: self.path.clone(), source }
    }

    fn object(&self) -> SpecResult<ObjectNode<'a>> {
        self.value
            .as_object()
            .map(|map| ObjectNode { map, path: self.path.clone() })
            .ok_or_else(|| self.wrong("object"))
    }

    fn array(&self) -> SpecResult<Vec<Node<'a>>> {
        let items = self.value.as_array().ok_or_else(|| self.wrong("array"))?;
        Ok(items
            .iter()
            .enumerate()
            .map(|(i, value)| Node { value, path: format!("{}[{i}]", self.path) })
            .collect())
    }

    fn string(&self) -> SpecResult<&'a str> {
        self.value.as_str().ok_or_else(|| self.wrong("string"))
    }

    fn boolean(&self) -> SpecResult<bool> {
        self.value.as_bool().ok_or_else(|| self.wrong("boolean"))
    }

    fn usize(&self) -> SpecResult<usize> {
        self.value
            .as_u64()
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| self.wrong("non-negative integer"))
    }

    fn number(&self) -> SpecResult<f64> {
        self.value.as_f64().ok_or_else(|| self.wrong("number"))
    }

    fn label(&self) -> SpecResult<OutcomeLabel> {
        match self.value {
            Value::String(s) => OutcomeLabel::parse(s).map_err(|e| self.invalid(e)),
            Value::Number(n) if n.is_u64() => Ok(OutcomeLabel::atom(n.to_string())),
            _ => Err(self.wrong("label string")),
        }
    }

    fn complex<T: Real>(&self) -> SpecResult<nalgebra::Complex<T>> {
        match self.value {
            Value::Number(_) => Ok(cplx(T::lit(self.number()?), T::zero())),
            Value::Array(_) => {
                let parts = self.array()?;
                if parts.len() != 2 {
                    return Err(self.wrong("[re, im] pair"));
                }
                Ok(cplx(T::lit(parts[0].number()?), T::lit(parts[1].number()?)))
            }
            _ => Err(self.wrong("[re, im] pair")),
        }
    }

    fn matrix<T: Real>(&self) -> SpecResult<CMatrix<T>> {
        let rows = self.array()?;
        if rows.is_empty() {
            return Err(self.wrong("non-empty matrix"));
        }
        let mut entries = Vec::new();
        let mut cols = None;
        for row in &rows {
            let cells = row.array()?;
            match cols {
                None => cols = Some(cells.len()),
                Some(c) if c != cells.len() => return Err(row.wrong("row of the same length as row 0")),
                _ => {}
            }
            for cell in &cells {
                entries.push(cell.complex::<T>()?);
            }
        }
        let cols = cols.unwrap_or(0);
        if cols == 0 {
            return Err(self.wrong("non-empty matrix"));
        }
        Ok(CMatrix::from_row_slice(rows.len(), cols, &entries))
    }
}

impl<'a> ObjectNode<'a> {
    fn optional(&self, key: &str) -> Option<Node<'a>> {
        self.map.get(key).map(|value| Node { value, path: format!("{}.{key}", self.path) })
    }

    fn field(&self, key: &str) -> SpecResult<Node<'a>> {
        self.optional(key).ok_or_else(|| SpecError::Missing { path: format!("{}.{key}", self.path) })
    }
}

pub fn matrix_to_value<T: Real>(m: &CMatrix<T>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| {
                            let z = m[(i, j)];
                            json!([z.re.as_f64(), z.im.as_f64()])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn observable_outcomes<T: Real>(a: &Observable<T>) -> Value {
    Value::Array(
        a.iter()
            .map(|(label, e)| json!({"label": label.to_string(), "effect": matrix_to_value(e.matrix())}))
            .collect(),
    )
}

fn instrument_outcomes<T: Real>(i: &Instrument<T>) -> Value {
    Value::Array(
        i.iter()
            .map(|(label, op)| {
                let kraus: Vec<Value> = op.kraus().iter().map(matrix_to_value).collect();
                json!({"label": label.to_string(), "kraus": kraus})
            })
            .collect(),
    )
}

pub fn spec_to_value<T: Real>(spec: &EntitySpec<T>) -> Value {
    let dims = spec.dims().to_vec();
    match spec {
        EntitySpec::Effect { effect, .. } => {
            json!({"kind": "effect", "dims": dims, "matrix": matrix_to_value(effect.matrix())})
        }
        EntitySpec::State { state, .. } => json!({
            "kind": "state",
            "dims": dims,
            "partial": state.kind() == StateKind::Partial,
            "matrix": matrix_to_value(state.matrix()),
        }),
        EntitySpec::Observable { observable, .. } => {
            json!({"kind": "observable", "dims": dims, "outcomes": observable_outcomes(observable)})
        }
        EntitySpec::Instrument { instrument, .. } => {
            json!({"kind": "instrument", "dims": dims, "outcomes": instrument_outcomes(instrument)})
        }
        EntitySpec::Model { model, .. } => {
            let kraus: Vec<Value> = model.interaction().op().kraus().iter().map(matrix_to_value).collect();
            json!({
                "kind": "mm",
                "dims": dims,
                "probe_state": matrix_to_value(model.probe_state().matrix()),
                "interaction": kraus,
                "probe_observable": observable_outcomes(model.probe_observable()),
            })
        }
    }
}

pub fn serialize_spec<T: Real>(spec: &EntitySpec<T>) -> String {
    serde_json::to_string_pretty(&spec_to_value(spec)).expect("JSON values always serialize")
}

/// Outcome of one report check. Flagged checks never fail a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Flagged,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Flagged => "flagged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: String,
    pub claim: String,
    pub status: Status,
    pub residual: f64,
    pub runtime_ms: Option<f64>,
}

impl Check {
    /// A pass/fail check: passes when `residual <= bound`.
    pub fn bounded(id: impl Into<String>, claim: impl Into<String>, residual: f64, bound: f64) -> Self {
        let status = if residual <= bound { Status::Pass } else { Status::Fail };
        Check { id: id.into(), claim: claim.into(), status, residual, runtime_ms: None }
    }

    pub fn with_status(id: impl Into<String>, claim: impl Into<String>, status: Status, residual: f64) -> Self {
        Check { id: id.into(), claim: claim.into(), status, residual, runtime_ms: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(seed: u64, tolerance: f64) -> Self {
        Report { seed, tolerance, checks: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

/// Scientific notation with six significant digits; non-finite values become
/// `null`.
pub fn format_residual(r: f64) -> String {
    if r.is_finite() {
        format!("{r:.5e}")
    } else {
        "null".into()
    }
}

fn push_json_string(out: &mut String, s: &str) {
    out.push_str(&Value::String(s.to_string()).to_string());
}

/// Renders a report with a fixed key order.
pub fn emit_report(report: &Report) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"seed\": {},", report.seed);
    let _ = writeln!(out, "  \"tolerance\": {},", format_residual(report.tolerance));
    if report.checks.is_empty() {
        out.push_str("  \"checks\": []\n}\n");
        return out;
    }
    out.push_str("  \"checks\": [\n");
    for (i, c) in report.checks.iter().enumerate() {
        out.push_str("    {\"id\": ");
        push_json_string(&mut out, &c.id);
        out.push_str(", \"claim\": ");
        push_json_string(&mut out, &c.claim);
        let _ = write!(out, ", \"status\": \"{}\", \"residual\": {}", c.status, format_residual(c.residual));
        match c.runtime_ms {
            Some(ms) => {
                let _ = write!(out, ", \"runtime_ms\": {ms:.3}}}");
            }
            None => out.push_str(", \"runtime_ms\": null}"),
        }
        out.push_str(if i + 1 < report.checks.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// Distribution rendered as an ordered `[{label, probability}]` list.
pub fn distribution_to_value<T: Real>(dist: &IndexMap<OutcomeLabel, T>) -> Value {
    Value::Array(
        dist.iter()
            .map(|(label, p)| json!({"label": label.to_string(), "probability": p.as_f64()}))
            .collect(),
    )
}
