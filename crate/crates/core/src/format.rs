//! JSON documents for instances, auctions and reports.
//!
//! Parsing walks a `serde_json::Value` by hand so every error carries a stable
//! code and the field path (or line and column for syntax errors) where it
//! arose. Emission writes every float with 17 significant digits, which
//! round-trips `f64` exactly.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::constraint::{CapacitySet, ConstraintSystem, SystemKind};
use crate::error::{ProbingError, Result};
use crate::instance::{Element, ProbingInstance};
use crate::set::ElementSet;
use crate::spm::AuctionSpec;

pub const SCHEMA_VERSION: u64 = 1;

pub mod codes {
    pub const SYNTAX: &str = "SYNTAX";
    pub const SCHEMA_VERSION: &str = "SCHEMA_VERSION";
    pub const MISSING_FIELD: &str = "MISSING_FIELD";
    pub const UNKNOWN_FIELD: &str = "UNKNOWN_FIELD";
    pub const TYPE: &str = "TYPE";
    pub const PROB_RANGE: &str = "PROB_RANGE";
    pub const WEIGHT_RANGE: &str = "WEIGHT_RANGE";
    pub const DEADLINE_RANGE: &str = "DEADLINE_RANGE";
    pub const ELEMENT_RANGE: &str = "ELEMENT_RANGE";
    pub const PART_OVERLAP: &str = "PART_OVERLAP";
    pub const LAMINAR_CROSS: &str = "LAMINAR_CROSS";
    pub const NOT_DOWNWARD_CLOSED: &str = "NOT_DOWNWARD_CLOSED";
    pub const UNKNOWN_VARIANT: &str = "UNKNOWN_VARIANT";
    pub const DISTRIBUTION: &str = "DISTRIBUTION";
    pub const CONTINUOUS: &str = "CONTINUOUS";
    pub const INVALID: &str = "INVALID";
}

fn parse_error(
    code: &'static str,
    location: impl Into<String>,
    message: impl Into<String>,
) -> ProbingError {
    ProbingError::Parse {
        code,
        location: location.into(),
        message: message.into(),
    }
}

/// Result of a parse, with warnings collected in lenient mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

struct Reader {
    strict: bool,
    warnings: Vec<String>,
}

fn join(path: &str, field: &str) -> String {
    if path.is_empty() {
        field.to_string()
    } else {
        format!("{path}.{field}")
    }
}

impl Reader {
    fn object<'v>(&self, v: &'v Value, path: &str) -> Result<&'v Map<String, Value>> {
        v.as_object()
            .ok_or_else(|| parse_error(codes::TYPE, path, "expected an object"))
    }

    fn fields(&mut self, obj: &Map<String, Value>, path: &str, known: &[&str]) -> Result<()> {
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                let at = join(path, key);
                if self.strict {
                    return Err(parse_error(
                        codes::UNKNOWN_FIELD,
                        at,
                        format!("unknown field '{key}'"),
                    ));
                }
                self.warnings
                    .push(format!("{at}: unknown field '{key}' ignored"));
            }
        }
        Ok(())
    }

    fn field<'v>(&self, obj: &'v Map<String, Value>, path: &str, key: &str) -> Result<&'v Value> {
        obj.get(key).ok_or_else(|| {
            parse_error(
                codes::MISSING_FIELD,
                join(path, key),
                format!("missing field '{key}'"),
            )
        })
    }

    fn number(&self, v: &Value, path: &str) -> Result<f64> {
        v.as_f64()
            .ok_or_else(|| parse_error(codes::TYPE, path, "expected a number"))
    }

    fn unsigned(&self, v: &Value, path: &str) -> Result<u64> {
        v.as_u64()
            .ok_or_else(|| parse_error(codes::TYPE, path, "expected a non-negative integer"))
    }

    fn array<'v>(&self, v: &'v Value, path: &str) -> Result<&'v Vec<Value>> {
        v.as_array()
            .ok_or_else(|| parse_error(codes::TYPE, path, "expected an array"))
    }

    fn version(&mut self, obj: &Map<String, Value>) -> Result<()> {
        let v = self.unsigned(self.field(obj, "", "schema_version")?, "schema_version")?;
        if v != SCHEMA_VERSION {
            return Err(parse_error(
                codes::SCHEMA_VERSION,
                "schema_version",
                format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"),
            ));
        }
        Ok(())
    }

    fn element_set(&self, v: &Value, path: &str, universe: usize) -> Result<ElementSet> {
        let mut set = ElementSet::empty();
        for (k, item) in self.array(v, path)?.iter().enumerate() {
            let at = format!("{path}[{k}]");
            let e = self.unsigned(item, &at)? as usize;
            if e >= universe {
                return Err(parse_error(
                    codes::ELEMENT_RANGE,
                    at,
                    format!("element {e} outside universe of size {universe}"),
                ));
            }
            set.insert(e);
        }
        Ok(set)
    }

    fn capacity_sets(
        &mut self,
        v: &Value,
        path: &str,
        universe: usize,
    ) -> Result<Vec<CapacitySet>> {
        let mut out = Vec::new();
        for (k, item) in self.array(v, path)?.iter().enumerate() {
            let at = format!("{path}[{k}]");
            let obj = self.object(item, &at)?;
            self.fields(obj, &at, &["members", "capacity"])?;
            let members_at = join(&at, "members");
            let members =
                self.element_set(self.field(obj, &at, "members")?, &members_at, universe)?;
            let capacity_at = join(&at, "capacity");
            let capacity = self.unsigned(self.field(obj, &at, "capacity")?, &capacity_at)? as usize;
            out.push(CapacitySet { members, capacity });
        }
        Ok(out)
    }

    fn system(&mut self, v: &Value, path: &str, universe: usize) -> Result<ConstraintSystem> {
        let obj = self.object(v, path)?;
        let kind_at = join(path, "type");
        let kind = self
            .field(obj, path, "type")?
            .as_str()
            .ok_or_else(|| parse_error(codes::TYPE, &kind_at, "expected a string"))?;
        let invalid = |e: ProbingError| parse_error(codes::INVALID, path, e.to_string());
        match kind {
            "free" => {
                self.fields(obj, path, &["type"])?;
                ConstraintSystem::free(universe).map_err(invalid)
            }
            "uniform" => {
                self.fields(obj, path, &["type", "rank"])?;
                let rank = self.unsigned(self.field(obj, path, "rank")?, &join(path, "rank"))?;
                ConstraintSystem::uniform(universe, rank as usize).map_err(invalid)
            }
            "partition" => {
                self.fields(obj, path, &["type", "parts"])?;
                let parts_at = join(path, "parts");
                let parts =
                    self.capacity_sets(self.field(obj, path, "parts")?, &parts_at, universe)?;
                for a in 0..parts.len() {
                    for b in a + 1..parts.len() {
                        if !parts[a].members.is_disjoint(&parts[b].members) {
                            return Err(parse_error(
                                codes::PART_OVERLAP,
                                format!("{parts_at}[{b}]"),
                                format!("part {b} overlaps part {a}"),
                            ));
                        }
                    }
                }
                ConstraintSystem::partition(universe, parts).map_err(invalid)
            }
            "laminar" => {
                self.fields(obj, path, &["type", "sets"])?;
                let sets_at = join(path, "sets");
                let sets =
                    self.capacity_sets(self.field(obj, path, "sets")?, &sets_at, universe)?;
                for a in 0..sets.len() {
                    for b in a + 1..sets.len() {
                        let (x, y) = (&sets[a].members, &sets[b].members);
                        if !(x.is_disjoint(y) || x.is_subset(y) || y.is_subset(x)) {
                            return Err(parse_error(
                                codes::LAMINAR_CROSS,
                                format!("{sets_at}[{b}]"),
                                format!("set {b} crosses set {a}"),
                            ));
                        }
                    }
                }
                ConstraintSystem::laminar(universe, sets).map_err(invalid)
            }
            "graphic" => {
                self.fields(obj, path, &["type", "vertices", "edges"])?;
                let vertices = self
                    .unsigned(self.field(obj, path, "vertices")?, &join(path, "vertices"))?
                    as usize;
                let edges_at = join(path, "edges");
                let raw = self.array(self.field(obj, path, "edges")?, &edges_at)?;
                if raw.len() != universe {
                    return Err(parse_error(
                        codes::ELEMENT_RANGE,
                        &edges_at,
                        format!("{} edges for {universe} elements", raw.len()),
                    ));
                }
                let mut edges = Vec::with_capacity(raw.len());
                for (k, item) in raw.iter().enumerate() {
                    let at = format!("{edges_at}[{k}]");
                    let pair = self.array(item, &at)?;
                    if pair.len() != 2 {
                        return Err(parse_error(
                            codes::TYPE,
                            at,
                            "an edge is a pair of vertices",
                        ));
                    }
                    let u = self.unsigned(&pair[0], &format!("{at}[0]"))? as usize;
                    let w = self.unsigned(&pair[1], &format!("{at}[1]"))? as usize;
                    if u >= vertices || w >= vertices {
                        return Err(parse_error(
                            codes::ELEMENT_RANGE,
                            at,
                            format!("edge ({u}, {w}) outside {vertices} vertices"),
                        ));
                    }
                    edges.push((u, w));
                }
                ConstraintSystem::graphic(vertices, edges).map_err(invalid)
            }
            "intersection" => {
                self.fields(obj, path, &["type", "members"])?;
                let members_at = join(path, "members");
                let raw = self.array(self.field(obj, path, "members")?, &members_at)?;
                let members = raw
                    .iter()
                    .enumerate()
                    .map(|(k, m)| self.system(m, &format!("{members_at}[{k}]"), universe))
                    .collect::<Result<Vec<_>>>()?;
                ConstraintSystem::intersection(members).map_err(invalid)
            }
            "explicit" => {
                self.fields(obj, path, &["type", "family"])?;
                let family_at = join(path, "family");
                let raw = self.array(self.field(obj, path, "family")?, &family_at)?;
                let family = raw
                    .iter()
                    .enumerate()
                    .map(|(k, s)| self.element_set(s, &format!("{family_at}[{k}]"), universe))
                    .collect::<Result<Vec<_>>>()?;
                ConstraintSystem::explicit(universe, family)
                    .map_err(|e| parse_error(codes::NOT_DOWNWARD_CLOSED, family_at, e.to_string()))
            }
            other => Err(parse_error(
                codes::UNKNOWN_VARIANT,
                kind_at,
                format!("unknown constraint type '{other}'"),
            )),
        }
    }

    fn elements(&mut self, v: &Value) -> Result<Vec<Element>> {
        let mut out = Vec::new();
        for (k, item) in self.array(v, "elements")?.iter().enumerate() {
            let at = format!("elements[{k}]");
            let obj = self.object(item, &at)?;
            self.fields(obj, &at, &["weight", "p", "deadline"])?;
            let weight = self.number(self.field(obj, &at, "weight")?, &join(&at, "weight"))?;
            if !(weight >= 0.0 && weight.is_finite()) {
                return Err(parse_error(
                    codes::WEIGHT_RANGE,
                    join(&at, "weight"),
                    format!("weight {weight} must be finite and >= 0"),
                ));
            }
            let p = self.number(self.field(obj, &at, "p")?, &join(&at, "p"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(parse_error(
                    codes::PROB_RANGE,
                    join(&at, "p"),
                    format!("probability {p} outside [0, 1]"),
                ));
            }
            let mut el = Element::new(weight, p);
            if let Some(d) = obj.get("deadline").filter(|d| !d.is_null()) {
                let d_at = join(&at, "deadline");
                let d = d
                    .as_u64()
                    .filter(|&d| d >= 1 && d <= u32::MAX as u64)
                    .ok_or_else(|| {
                        parse_error(
                            codes::DEADLINE_RANGE,
                            d_at,
                            "deadline must be an integer >= 1",
                        )
                    })?;
                el = el.with_deadline(d as u32);
            }
            out.push(el);
        }
        Ok(out)
    }
}

fn syntax(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        parse_error(
            codes::SYNTAX,
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })
}

/// Parses an instance document; `strict` rejects unknown fields, otherwise
/// they become warnings.
pub fn parse_instance(text: &str, strict: bool) -> Result<Parsed<ProbingInstance>> {
    let doc = syntax(text)?;
    let mut r = Reader {
        strict,
        warnings: Vec::new(),
    };
    let obj = r.object(&doc, "")?;
    r.fields(obj, "", &["schema_version", "elements", "inner", "outer"])?;
    r.version(obj)?;
    let elements = r.elements(r.field(obj, "", "elements")?)?;
    let n = elements.len();
    let inner = r.system(r.field(obj, "", "inner")?, "inner", n)?;
    let outer = r.system(r.field(obj, "", "outer")?, "outer", n)?;
    let value = ProbingInstance::new(elements, inner, outer)
        .map_err(|e| parse_error(codes::INVALID, "", e.to_string()))?;
    Ok(Parsed {
        value,
        warnings: r.warnings,
    })
}

/// Parses an auction document: per-agent valuation masses over `{0..B}` and
/// a feasibility system over agents.
pub fn parse_auction(text: &str, strict: bool) -> Result<Parsed<AuctionSpec>> {
    let doc = syntax(text)?;
    let mut r = Reader {
        strict,
        warnings: Vec::new(),
    };
    let obj = r.object(&doc, "")?;
    r.fields(obj, "", &["schema_version", "distributions", "feasibility"])?;
    r.version(obj)?;
    let raw = r.array(r.field(obj, "", "distributions")?, "distributions")?;
    let mut distributions = Vec::with_capacity(raw.len());
    for (i, d) in raw.iter().enumerate() {
        let at = format!("distributions[{i}]");
        if d.is_object() {
            return Err(parse_error(
                codes::CONTINUOUS,
                at,
                "continuous distributions are not supported; discretize valuations to {0..B} first",
            ));
        }
        let masses = r
            .array(d, &at)?
            .iter()
            .enumerate()
            .map(|(c, m)| r.number(m, &format!("{at}[{c}]")))
            .collect::<Result<Vec<f64>>>()?;
        distributions.push(masses);
    }
    let n = distributions.len();
    let feasibility = r.system(r.field(obj, "", "feasibility")?, "feasibility", n)?;
    let value = AuctionSpec::new(distributions, feasibility)
        .map_err(|e| parse_error(codes::DISTRIBUTION, "distributions", e.to_string()))?;
    Ok(Parsed {
        value,
        warnings: r.warnings,
    })
}

fn set_json(s: &ElementSet) -> Value {
    Value::from(s.to_vec())
}

fn capacity_json(sets: &[CapacitySet]) -> Value {
    Value::Array(
        sets.iter()
            .map(|c| serde_json::json!({ "members": set_json(&c.members), "capacity": c.capacity }))
            .collect(),
    )
}

/// Descriptor for a constraint system.
pub fn system_json(system: &ConstraintSystem) -> Value {
    match system.kind() {
        SystemKind::Uniform { rank } => serde_json::json!({ "type": "uniform", "rank": rank }),
        SystemKind::Partition { parts } if parts.is_empty() => {
            serde_json::json!({ "type": "free" })
        }
        SystemKind::Partition { parts } => {
            serde_json::json!({ "type": "partition", "parts": capacity_json(parts) })
        }
        SystemKind::Laminar { sets } => {
            serde_json::json!({ "type": "laminar", "sets": capacity_json(sets) })
        }
        SystemKind::Graphic { vertices, edges } => serde_json::json!({
            "type": "graphic",
            "vertices": vertices,
            "edges": edges.iter().map(|&(u, v)| vec![u, v]).collect::<Vec<_>>(),
        }),
        SystemKind::Intersection { members } => serde_json::json!({
            "type": "intersection",
            "members": members.iter().map(system_json).collect::<Vec<_>>(),
        }),
        SystemKind::Explicit { family } => serde_json::json!({
            "type": "explicit",
            "family": family.iter().map(set_json).collect::<Vec<_>>(),
        }),
    }
}

pub fn instance_json(instance: &ProbingInstance) -> Value {
    let elements: Vec<Value> = instance
        .elements
        .iter()
        .map(|el| {
            let mut m = Map::new();
            m.insert("weight".into(), Value::from(el.weight));
            m.insert("p".into(), Value::from(el.p));
            if let Some(d) = el.deadline {
                m.insert("deadline".into(), Value::from(d));
            }
            Value::Object(m)
        })
        .collect();
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "elements": elements,
        "inner": system_json(&instance.inner),
        "outer": system_json(&instance.outer),
    })
}

pub fn auction_json(spec: &AuctionSpec) -> Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "distributions": spec.distributions,
        "feasibility": system_json(&spec.feasibility),
    })
}

pub fn emit_instance(instance: &ProbingInstance) -> String {
    write_json(&instance_json(instance))
}

pub fn emit_auction(spec: &AuctionSpec) -> String {
    write_json(&auction_json(spec))
}

/// Serializes any value with 17-significant-digit floats.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)
        .map_err(|e| ProbingError::domain(format!("cannot serialize report: {e}")))?;
    Ok(write_json(&v))
}

/// Pretty-prints a JSON value; floats use 17 significant digits.
pub fn write_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn format_float(x: f64) -> String {
    if x == 0.0 {
        // keep the sign of negative zero out of reports
        return "0.0".to_string();
    }
    format!("{x:.16e}")
}

fn write_value(value: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match value {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&value.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = items.iter().all(|v| !v.is_array() && !v.is_object());
            if flat {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(item, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 1, out);
                if k + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}
