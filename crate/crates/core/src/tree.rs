//! Rooted ordered vertex-labeled trees and their Euler strings.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label carried by every root. It lies outside the alphabet `1..=m`.
pub const ROOT_LABEL: u32 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree text: {0}")]
    Parse(String),
    #[error("root must carry label 0 and parent -1")]
    Root,
    #[error("vertex {vertex}: label {label} outside 1..={m}")]
    LabelOutOfRange { vertex: usize, label: u32, m: u32 },
    #[error("vertex {vertex}: parent must be an earlier vertex")]
    BadParent { vertex: usize },
    #[error("vertex order is not a depth-first order")]
    NotDfsOrder,
    #[error("alphabet size must be positive")]
    EmptyAlphabet,
}

/// First violated invariant of a candidate Euler string. Positions are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum EulerError {
    #[error("symbol {symbol} at position {position} outside 1..=2m")]
    BadSymbol { position: usize, symbol: u64 },
    #[error("unbalanced at position {position}")]
    Unbalanced { position: usize },
    #[error("outward symbol {found} at position {position} does not close {expected}")]
    MismatchedPair {
        position: usize,
        expected: u64,
        found: u64,
    },
}

impl EulerError {
    pub fn position(&self) -> usize {
        match *self {
            EulerError::BadSymbol { position, .. }
            | EulerError::Unbalanced { position }
            | EulerError::MismatchedPair { position, .. } => position,
        }
    }
}

/// Rooted ordered tree, vertices numbered in depth-first order (root = 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTree", into = "RawTree")]
pub struct LabeledTree {
    labels: Vec<u32>,
    parents: Vec<Option<usize>>,
    m: u32,
    children: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    labels: Vec<u32>,
    parents: Vec<Option<usize>>,
    m: u32,
}

impl TryFrom<RawTree> for LabeledTree {
    type Error = TreeError;
    fn try_from(raw: RawTree) -> Result<Self, TreeError> {
        LabeledTree::new(raw.labels, raw.parents, raw.m)
    }
}

impl From<LabeledTree> for RawTree {
    fn from(t: LabeledTree) -> Self {
        RawTree {
            labels: t.labels,
            parents: t.parents,
            m: t.m,
        }
    }
}

impl LabeledTree {
    /// `labels[0]` must be [`ROOT_LABEL`] and `parents[0]` `None`.
    pub fn new(labels: Vec<u32>, parents: Vec<Option<usize>>, m: u32) -> Result<Self, TreeError> {
        if m == 0 {
            return Err(TreeError::EmptyAlphabet);
        }
        if labels.is_empty() || labels.len() != parents.len() {
            return Err(TreeError::Parse(
                "labels and parents differ in length".into(),
            ));
        }
        if labels[0] != ROOT_LABEL || parents[0].is_some() {
            return Err(TreeError::Root);
        }
        let mut children = vec![Vec::new(); labels.len()];
        for v in 1..labels.len() {
            let label = labels[v];
            if label == 0 || label > m {
                return Err(TreeError::LabelOutOfRange {
                    vertex: v,
                    label,
                    m,
                });
            }
            match parents[v] {
                Some(p) if p < v => children[p].push(v),
                _ => return Err(TreeError::BadParent { vertex: v }),
            }
        }
        // preorder of the encoded structure must be 0, 1, 2, ...
        let mut next = 0;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            if v != next {
                return Err(TreeError::NotDfsOrder);
            }
            next += 1;
            stack.extend(children[v].iter().rev());
        }
        Ok(LabeledTree {
            labels,
            parents,
            m,
            children,
        })
    }

    /// Single root, no edges.
    pub fn root_only(m: u32) -> Self {
        LabeledTree::new(vec![ROOT_LABEL], vec![None], m).expect("root-only tree")
    }

    /// Vertex count `n + 1`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Edge count `n`.
    pub fn edges(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn alphabet(&self) -> u32 {
        self.m
    }

    pub fn label(&self, v: usize) -> u32 {
        self.labels[v]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parents[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Same shape and labels under a different alphabet size.
    pub fn with_alphabet(&self, m: u32) -> Result<Self, TreeError> {
        LabeledTree::new(self.labels.clone(), self.parents.clone(), m)
    }

    /// Parses the three-line text form: vertex count, labels, parents (`-1` for the root).
    pub fn parse_text(text: &str, m: Option<u32>) -> Result<Self, TreeError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let count: usize = lines
            .next()
            .ok_or_else(|| TreeError::Parse("missing vertex count".into()))?
            .parse()
            .map_err(|_| TreeError::Parse("vertex count is not an integer".into()))?;
        let labels: Vec<u32> = parse_ints(lines.next(), "labels")?;
        let raw_parents: Vec<i64> = parse_ints(lines.next(), "parents")?;
        if labels.len() != count || raw_parents.len() != count {
            return Err(TreeError::Parse(format!(
                "expected {count} labels and parents, found {} and {}",
                labels.len(),
                raw_parents.len()
            )));
        }
        let parents = raw_parents
            .iter()
            .enumerate()
            .map(|(v, &p)| match p {
                -1 => Ok(None),
                p if p >= 0 => Ok(Some(p as usize)),
                _ => Err(TreeError::BadParent { vertex: v }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let m = m.unwrap_or_else(|| labels.iter().copied().max().unwrap_or(0).max(1));
        LabeledTree::new(labels, parents, m)
    }

    pub fn to_text(&self) -> String {
        let labels: Vec<String> = self.labels.iter().map(u32::to_string).collect();
        let parents: Vec<String> = self
            .parents
            .iter()
            .map(|p| p.map_or("-1".to_string(), |p| p.to_string()))
            .collect();
        format!(
            "{}\n{}\n{}\n",
            self.len(),
            labels.join(" "),
            parents.join(" ")
        )
    }

    /// Depth-first string of edge labels: `b` entering a vertex labeled `b`, `b + m` leaving it.
    pub fn euler(&self) -> EulerString {
        let m = self.m as u64;
        let mut symbols = Vec::with_capacity(2 * self.edges());
        fn walk(t: &LabeledTree, v: usize, m: u64, out: &mut Vec<u64>) {
            for &c in &t.children[v] {
                out.push(t.labels[c] as u64);
                walk(t, c, m, out);
                out.push(t.labels[c] as u64 + m);
            }
        }
        walk(self, 0, m, &mut symbols);
        EulerString { symbols, m: self.m }
    }

    /// Nested form, convenient for structural edits.
    pub fn to_nodes(&self) -> Node {
        fn build(t: &LabeledTree, v: usize) -> Node {
            Node {
                label: t.labels[v],
                children: t.children[v].iter().map(|&c| build(t, c)).collect(),
            }
        }
        build(self, 0)
    }

    pub fn from_nodes(root: &Node, m: u32) -> Result<Self, TreeError> {
        let mut labels = Vec::new();
        let mut parents = Vec::new();
        fn flatten(
            node: &Node,
            parent: Option<usize>,
            labels: &mut Vec<u32>,
            parents: &mut Vec<Option<usize>>,
        ) {
            let me = labels.len();
            labels.push(node.label);
            parents.push(parent);
            for c in &node.children {
                flatten(c, Some(me), labels, parents);
            }
        }
        flatten(root, None, &mut labels, &mut parents);
        labels[0] = ROOT_LABEL;
        LabeledTree::new(labels, parents, m)
    }
}

fn parse_ints<T: std::str::FromStr>(line: Option<&str>, what: &str) -> Result<Vec<T>, TreeError> {
    let line = line.ok_or_else(|| TreeError::Parse(format!("missing {what} line")))?;
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| TreeError::Parse(format!("bad {what} entry {s:?}")))
        })
        .collect()
}

/// Owned recursive tree used by the reference editors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub label: u32,
    pub children: Vec<Node>,
}

/// Euler string of a tree over alphabet `1..=m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EulerString {
    symbols: Vec<u64>,
    m: u32,
}

impl EulerString {
    /// Checks every invariant; use [`EulerString::from_symbols_unchecked`] only for known-good data.
    pub fn new(symbols: Vec<u64>, m: u32) -> Result<Self, EulerError> {
        validate_euler(&symbols, m)?;
        Ok(EulerString { symbols, m })
    }

    pub fn from_symbols_unchecked(symbols: Vec<u64>, m: u32) -> Self {
        EulerString { symbols, m }
    }

    pub fn symbols(&self) -> &[u64] {
        &self.symbols
    }

    pub fn alphabet(&self) -> u32 {
        self.m
    }

    /// Edge count `n`.
    pub fn edges(&self) -> usize {
        self.symbols.len() / 2
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn decode(&self) -> LabeledTree {
        decode_euler(&self.symbols, self.m).expect("validated Euler string")
    }

    pub fn into_symbols(self) -> Vec<u64> {
        self.symbols
    }
}

impl fmt::Display for EulerString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join_symbols(&self.symbols, None))
    }
}

/// Comma-separated symbols; values equal to `sentinel` print as `B`.
pub fn join_symbols(symbols: &[u64], sentinel: Option<u64>) -> String {
    symbols
        .iter()
        .map(|&s| {
            if Some(s) == sentinel {
                "B".to_string()
            } else {
                s.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses `3,2,7` (spaces allowed); `B` maps to `sentinel` when given.
pub fn parse_symbols(text: &str, sentinel: Option<u64>) -> Result<Vec<u64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| match (s, sentinel) {
            ("B", Some(b)) => Ok(b),
            _ => s.parse().map_err(|_| format!("bad symbol {s:?}")),
        })
        .collect()
}

pub fn encode_euler(tree: &LabeledTree) -> EulerString {
    tree.euler()
}

/// First violated invariant, scanning left to right.
pub fn validate_euler(symbols: &[u64], m: u32) -> Result<(), EulerError> {
    let m = m as u64;
    let mut open: Vec<u64> = Vec::new();
    for (i, &s) in symbols.iter().enumerate() {
        let position = i + 1;
        if s == 0 || s > 2 * m {
            return Err(EulerError::BadSymbol {
                position,
                symbol: s,
            });
        }
        if s <= m {
            open.push(s);
        } else {
            match open.pop() {
                None => return Err(EulerError::Unbalanced { position }),
                Some(b) if b + m != s => {
                    return Err(EulerError::MismatchedPair {
                        position,
                        expected: b + m,
                        found: s,
                    })
                }
                Some(_) => {}
            }
        }
    }
    if !open.is_empty() {
        return Err(EulerError::Unbalanced {
            position: symbols.len(),
        });
    }
    Ok(())
}

pub fn decode_euler(symbols: &[u64], m: u32) -> Result<LabeledTree, EulerError> {
    validate_euler(symbols, m)?;
    let mut labels = vec![ROOT_LABEL];
    let mut parents = vec![None];
    let mut stack = vec![0usize];
    for &s in symbols {
        if s <= m as u64 {
            let v = labels.len();
            labels.push(s as u32);
            parents.push(Some(*stack.last().expect("root stays on the stack")));
            stack.push(v);
        } else {
            stack.pop();
        }
    }
    Ok(LabeledTree::new(labels, parents, m).expect("balanced string decodes to a tree"))
}

/// Removes the sentinel prefix and suffix. Sentinels between real symbols are an error.
pub fn strip_sentinels(symbols: &[u64], sentinel: u64) -> Result<Vec<u64>, usize> {
    let start = symbols
        .iter()
        .position(|&s| s != sentinel)
        .unwrap_or(symbols.len());
    let end = symbols
        .iter()
        .rposition(|&s| s != sentinel)
        .map_or(start, |p| p + 1);
    if let Some(p) = symbols[start..end].iter().position(|&s| s == sentinel) {
        return Err(start + p + 1);
    }
    Ok(symbols[start..end].to_vec())
}

/// Uniform random recursive tree with `n` edges: vertex `v` attaches below a random earlier vertex,
/// then vertices are renumbered depth-first.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, n: usize, m: u32) -> LabeledTree {
    let mut nodes: Vec<(u32, Vec<usize>)> = vec![(ROOT_LABEL, Vec::new())];
    for v in 1..=n {
        let p = rng.gen_range(0..v);
        let label = rng.gen_range(1..=m);
        nodes.push((label, Vec::new()));
        let siblings = &mut nodes[p].1;
        let at = rng.gen_range(0..=siblings.len());
        siblings.insert(at, v);
    }
    fn build(nodes: &[(u32, Vec<usize>)], v: usize) -> Node {
        Node {
            label: nodes[v].0,
            children: nodes[v].1.iter().map(|&c| build(nodes, c)).collect(),
        }
    }
    LabeledTree::from_nodes(&build(&nodes, 0), m).expect("random tree")
}
