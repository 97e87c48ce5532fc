//! Direct tree editors used as ground truth for the networks.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::tree::{LabeledTree, Node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("the root cannot be substituted")]
    RootSubstitution,
    #[error("the root cannot be deleted")]
    RootDeletion,
    #[error("vertex {0} does not exist")]
    VertexOutOfRange(usize),
    #[error("label {label} outside 1..={m}")]
    LabelOutOfRange { label: u32, m: u32 },
}

/// Relabels vertices; later entries for the same vertex win.
pub fn apply_subst_reference(
    tree: &LabeledTree,
    ops: &[(usize, u32)],
) -> Result<LabeledTree, EditError> {
    let m = tree.alphabet();
    let mut labels = tree.labels().to_vec();
    for &(v, label) in ops {
        if v == 0 {
            return Err(EditError::RootSubstitution);
        }
        if v >= tree.len() {
            return Err(EditError::VertexOutOfRange(v));
        }
        if label == 0 || label > m {
            return Err(EditError::LabelOutOfRange { label, m });
        }
        labels[v] = label;
    }
    Ok(LabeledTree::new(labels, tree.parents().to_vec(), m).expect("relabeling keeps the shape"))
}

/// Deletes a set of vertices at once; children take the deleted vertex's place in order.
pub fn apply_delete_reference(
    tree: &LabeledTree,
    vertices: &[usize],
) -> Result<LabeledTree, EditError> {
    let mut gone = BTreeSet::new();
    for &v in vertices {
        if v == 0 {
            return Err(EditError::RootDeletion);
        }
        if v >= tree.len() {
            return Err(EditError::VertexOutOfRange(v));
        }
        gone.insert(v);
    }
    fn kept(tree: &LabeledTree, v: usize, gone: &BTreeSet<usize>, out: &mut Vec<Node>) {
        for &c in tree.children(v) {
            if gone.contains(&c) {
                kept(tree, c, gone, out);
            } else {
                let mut children = Vec::new();
                kept(tree, c, gone, &mut children);
                out.push(Node {
                    label: tree.label(c),
                    children,
                });
            }
        }
    }
    let mut children = Vec::new();
    kept(tree, 0, &gone, &mut children);
    let root = Node {
        label: tree.label(0),
        children,
    };
    Ok(LabeledTree::from_nodes(&root, tree.alphabet()).expect("deletion keeps a valid tree"))
}
