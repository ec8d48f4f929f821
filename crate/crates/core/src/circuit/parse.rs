use std::collections::BTreeMap;
use std::fmt;

use super::{CircuitError, ElementKind, ParamKind};

/// One series node of a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CircuitNode {
    Single(ElementKind),
    /// Two single elements connected in parallel.
    Parallel(ElementKind, ElementKind),
}

impl CircuitNode {
    pub fn param_count(&self) -> usize {
        match *self {
            CircuitNode::Single(k) => k.param_count(),
            CircuitNode::Parallel(a, b) => a.param_count() + b.param_count(),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = ElementKind> {
        let (a, b) = match *self {
            CircuitNode::Single(k) => (k, None),
            CircuitNode::Parallel(a, b) => (a, Some(b)),
        };
        std::iter::once(a).chain(b)
    }

    fn token(&self) -> String {
        match *self {
            CircuitNode::Single(k) => k.symbol().to_string(),
            CircuitNode::Parallel(a, b) => format!("{}{}", a.symbol(), b.symbol()),
        }
    }
}

impl fmt::Display for CircuitNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

/// A parsed series chain with its flattened parameter layout.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CircuitModel {
    canonical_name: String,
    nodes: Vec<CircuitNode>,
    param_names: Vec<String>,
    param_kinds: Vec<ParamKind>,
}

impl CircuitModel {
    pub fn canonical_name(&self) -> &str {
        &self.canonical_name
    }

    pub fn nodes(&self) -> &[CircuitNode] {
        &self.nodes
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn param_kinds(&self) -> &[ParamKind] {
        &self.param_kinds
    }

    pub fn param_count(&self) -> usize {
        self.param_names.len()
    }

    /// Index ranges of the parameters belonging to each node.
    pub fn node_param_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut offset = 0;
        self.nodes
            .iter()
            .map(|n| {
                let r = offset..offset + n.param_count();
                offset = r.end;
                r
            })
            .collect()
    }
}

impl fmt::Display for CircuitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_name)
    }
}

/// The nine predefined circuit classes, canonical spelling.
pub const NAMED_CIRCUITS: [&str; 9] = [
    "L-R-RCPE",
    "L-R-RCPE-RCPE",
    "L-R-RCPE-RCPE-RCPE",
    "RC-G-G",
    "RC-RC-RCPE-RCPE",
    "RCPE-RCPE",
    "RCPE-RCPE-RCPE",
    "RCPE-RCPE-RCPE-RCPE",
    "R-Ws",
];

const ALIASES: [(&str, &str); 8] = [
    ("L-R-2RCPE", "L-R-RCPE-RCPE"),
    ("L-R-3RCPE", "L-R-RCPE-RCPE-RCPE"),
    ("2RCPE", "RCPE-RCPE"),
    ("3RCPE", "RCPE-RCPE-RCPE"),
    ("4RCPE", "RCPE-RCPE-RCPE-RCPE"),
    ("Rs_Ws", "R-Ws"),
    ("Rs-Ws", "R-Ws"),
    ("L-RCPE", "L-R-RCPE"),
];

fn parse_token(token: &str) -> Result<CircuitNode, CircuitError> {
    if let Some(kind) = ElementKind::from_symbol(token) {
        return Ok(CircuitNode::Single(kind));
    }
    match token {
        "RC" => Ok(CircuitNode::Parallel(ElementKind::R, ElementKind::C)),
        "RCPE" => Ok(CircuitNode::Parallel(ElementKind::R, ElementKind::Cpe)),
        _ => Err(CircuitError::UnknownToken(token.to_string())),
    }
}

/// Parse a circuit label such as `L-R-RCPE` or an alias such as `Rs_Ws`.
///
/// Parameters are named by element kind, numbered left to right:
/// `L-R-RCPE` gives `[L1, R1, R2, CPE1_t, CPE1_C]`.
pub fn parse_circuit(label: &str) -> Result<CircuitModel, CircuitError> {
    let label = label.trim();
    if label.is_empty() {
        return Err(CircuitError::EmptyLabel);
    }
    let resolved = ALIASES
        .iter()
        .find(|(alias, _)| *alias == label)
        .map_or(label, |(_, name)| name);

    let nodes = resolved
        .split('-')
        .map(parse_token)
        .collect::<Result<Vec<_>, _>>()?;

    let mut counters: BTreeMap<ElementKind, usize> = BTreeMap::new();
    let mut param_names = Vec::new();
    let mut param_kinds = Vec::new();
    for kind in nodes.iter().flat_map(|n| n.elements()) {
        let k = counters.entry(kind).or_insert(0);
        *k += 1;
        let i = *k;
        match kind {
            ElementKind::L => param_names.push(format!("L{i}")),
            ElementKind::R => param_names.push(format!("R{i}")),
            ElementKind::C => param_names.push(format!("C{i}")),
            ElementKind::Cpe => {
                param_names.push(format!("CPE{i}_t"));
                param_names.push(format!("CPE{i}_C"));
            }
            ElementKind::G => {
                param_names.push(format!("R_g{i}"));
                param_names.push(format!("t_g{i}"));
            }
            ElementKind::Ws => {
                param_names.push(format!("W{i}_R"));
                param_names.push(format!("W{i}_T"));
                param_names.push(format!("W{i}_p"));
            }
        }
        param_kinds.extend_from_slice(kind.param_kinds());
    }

    let canonical_name = nodes
        .iter()
        .map(CircuitNode::token)
        .collect::<Vec<_>>()
        .join("-");
    Ok(CircuitModel {
        canonical_name,
        nodes,
        param_names,
        param_kinds,
    })
}
