//! Ground truth for the networks: Zhang–Shasha tree edit distance and edit balls.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit::{apply_delete_reference, apply_subst_reference, EditError};
use crate::tree::{LabeledTree, Node};

/// Unit-cost ordered tree edit distance. Roots always match.
pub fn ted(a: &LabeledTree, b: &LabeledTree) -> usize {
    let pa = Postorder::new(a);
    let pb = Postorder::new(b);
    let (na, nb) = (pa.labels.len(), pb.labels.len());
    let mut td = vec![vec![0usize; nb]; na];
    let mut fd = vec![vec![0usize; nb + 1]; na + 1];
    for &i in &pa.keyroots {
        for &j in &pb.keyroots {
            let (li, lj) = (pa.lml[i], pb.lml[j]);
            // fd[x][y] is the forest distance for a[li..li+x) against b[lj..lj+y)
            fd[0][0] = 0;
            for x in 1..=i - li + 1 {
                fd[x][0] = fd[x - 1][0] + 1;
            }
            for y in 1..=j - lj + 1 {
                fd[0][y] = fd[0][y - 1] + 1;
            }
            for x in 1..=i - li + 1 {
                let ii = li + x - 1;
                for y in 1..=j - lj + 1 {
                    let jj = lj + y - 1;
                    let del = fd[x - 1][y] + 1;
                    let ins = fd[x][y - 1] + 1;
                    if pa.lml[ii] == li && pb.lml[jj] == lj {
                        let rel = fd[x - 1][y - 1] + usize::from(!pa.same_label(ii, &pb, jj));
                        fd[x][y] = del.min(ins).min(rel);
                        td[ii][jj] = fd[x][y];
                    } else {
                        let (px, py) = (pa.lml[ii] - li, pb.lml[jj] - lj);
                        fd[x][y] = del.min(ins).min(fd[px][py] + td[ii][jj]);
                    }
                }
            }
        }
    }
    td[na - 1][nb - 1]
}

struct Postorder {
    labels: Vec<u32>,
    lml: Vec<usize>,
    keyroots: Vec<usize>,
    root: usize,
}

impl Postorder {
    fn new(t: &LabeledTree) -> Postorder {
        let mut labels = Vec::with_capacity(t.len());
        let mut lml = Vec::with_capacity(t.len());
        fn walk(t: &LabeledTree, v: usize, labels: &mut Vec<u32>, lml: &mut Vec<usize>) -> usize {
            let mut first = None;
            for &c in t.children(v) {
                let l = walk(t, c, labels, lml);
                first.get_or_insert(l);
            }
            let me = labels.len();
            labels.push(t.label(v));
            let l = first.unwrap_or(me);
            lml.push(l);
            l
        }
        walk(t, 0, &mut labels, &mut lml);
        let n = labels.len();
        let keyroots = (0..n)
            .filter(|&i| (i + 1..n).all(|k| lml[k] != lml[i]))
            .collect();
        Postorder {
            labels,
            lml,
            keyroots,
            root: n - 1,
        }
    }

    fn same_label(&self, i: usize, other: &Postorder, j: usize) -> bool {
        (i == self.root && j == other.root) || self.labels[i] == other.labels[j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallMode {
    AtMost,
    Exactly,
}

/// Which edits a ball may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpSet {
    pub sub: bool,
    pub del: bool,
    pub ins: bool,
}

impl OpSet {
    pub const ALL: OpSet = OpSet {
        sub: true,
        del: true,
        ins: true,
    };
    pub const SUB: OpSet = OpSet {
        sub: true,
        del: false,
        ins: false,
    };
    pub const DEL: OpSet = OpSet {
        sub: false,
        del: true,
        ins: false,
    };
    pub const INS: OpSet = OpSet {
        sub: false,
        del: false,
        ins: true,
    };
}

/// `Staged`: deletions on original vertices at once, then substitutions, then insertions under
/// vertices of that tree without nesting. `General`: any sequence of single edits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    Staged,
    General,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(
        "ball with d = {d} around a tree with n = {n} exceeds the guard (d ≤ {max_d}, n ≤ {max_n})"
    )]
    BudgetTooLarge {
        d: usize,
        n: usize,
        max_d: usize,
        max_n: usize,
    },
}

/// Parameters of [`edit_ball`]. The guard rejects `d > max_d` or `n > max_n` unless `force`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallSpec {
    pub d: usize,
    pub labels: Vec<u32>,
    pub mode: BallMode,
    pub ops: OpSet,
    pub semantics: Semantics,
    pub max_d: usize,
    pub max_n: usize,
    pub force: bool,
}

impl BallSpec {
    pub fn new(
        d: usize,
        labels: Vec<u32>,
        mode: BallMode,
        ops: OpSet,
        semantics: Semantics,
    ) -> BallSpec {
        BallSpec {
            d,
            labels,
            mode,
            ops,
            semantics,
            max_d: 3,
            max_n: 8,
            force: false,
        }
    }
}

/// Euler strings of every tree in the ball.
///
/// Staged counting treats each performed operation as one unit, identity substitutions
/// included; general `Exactly` keeps the members at distance exactly `d`.
pub fn edit_ball(t: &LabeledTree, spec: &BallSpec) -> Result<BTreeSet<Vec<u64>>, OracleError> {
    let n = t.edges();
    if !spec.force && (spec.d > spec.max_d || n > spec.max_n) {
        return Err(OracleError::BudgetTooLarge {
            d: spec.d,
            n,
            max_d: spec.max_d,
            max_n: spec.max_n,
        });
    }
    Ok(match spec.semantics {
        Semantics::Staged => staged(t, spec),
        Semantics::General => {
            let all = general(t, spec);
            match spec.mode {
                BallMode::AtMost => all,
                BallMode::Exactly => all
                    .into_iter()
                    .filter(|u| ted(t, &decode(u, t.alphabet())) == spec.d)
                    .collect(),
            }
        }
    })
}

fn decode(symbols: &[u64], m: u32) -> LabeledTree {
    crate::tree::decode_euler(symbols, m).expect("ball members are Euler strings")
}

fn staged(t: &LabeledTree, spec: &BallSpec) -> BTreeSet<Vec<u64>> {
    let d = spec.d;
    let m = t.alphabet();
    let ok = |used: usize| match spec.mode {
        BallMode::AtMost => used <= d,
        BallMode::Exactly => used == d,
    };
    let mut out = BTreeSet::new();
    let max_del = if spec.ops.del { d } else { 0 };
    for (t1, a) in deletions(t, max_del) {
        let max_sub = if spec.ops.sub { d - a } else { 0 };
        for (t2, b) in substitutions(&t1, max_sub, &spec.labels) {
            let room = d - a - b;
            if !spec.ops.ins {
                if ok(a + b) {
                    out.insert(t2.euler().into_symbols());
                }
                continue;
            }
            for i in 0..=room {
                if ok(a + b + i) {
                    for u in insertions(&t2, i, &spec.labels) {
                        out.insert(
                            LabeledTree::from_nodes(&u, m)
                                .expect("insertion keeps a tree")
                                .euler()
                                .into_symbols(),
                        );
                    }
                }
            }
        }
    }
    out
}

/// Every simultaneous deletion of at most `k` non-root vertices, with the count.
fn deletions(t: &LabeledTree, k: usize) -> Vec<(LabeledTree, usize)> {
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(
        t: &LabeledTree,
        next: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        out: &mut Vec<(LabeledTree, usize)>,
    ) {
        out.push((
            apply_delete_reference(t, chosen).expect("valid vertices"),
            chosen.len(),
        ));
        if chosen.len() == k {
            return;
        }
        for v in next..t.len() {
            chosen.push(v);
            rec(t, v + 1, k, chosen, out);
            chosen.pop();
        }
    }
    rec(t, 1, k, &mut chosen, &mut out);
    out
}

/// Every relabeling of at most `k` distinct non-root vertices with labels from `labels`.
fn substitutions(t: &LabeledTree, k: usize, labels: &[u32]) -> Vec<(LabeledTree, usize)> {
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(
        t: &LabeledTree,
        next: usize,
        k: usize,
        labels: &[u32],
        chosen: &mut Vec<(usize, u32)>,
        out: &mut Vec<(LabeledTree, usize)>,
    ) {
        out.push((
            apply_subst_reference(t, chosen).expect("valid relabeling"),
            chosen.len(),
        ));
        if chosen.len() == k {
            return;
        }
        for v in next..t.len() {
            for &l in labels {
                chosen.push((v, l));
                rec(t, v + 1, k, labels, chosen, out);
                chosen.pop();
            }
        }
    }
    rec(t, 1, k, labels, &mut chosen, &mut out);
    out
}

/// Tree whose vertices remember whether they were inserted in this stage.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Marked {
    label: u32,
    new: bool,
    children: Vec<Marked>,
}

impl Marked {
    fn from_node(n: &Node) -> Marked {
        Marked {
            label: n.label,
            new: false,
            children: n.children.iter().map(Marked::from_node).collect(),
        }
    }

    fn to_node(&self) -> Node {
        Node {
            label: self.label,
            children: self.children.iter().map(Marked::to_node).collect(),
        }
    }
}

/// Exactly `k` insertions under original vertices, each adopting a run of original children.
fn insertions(t: &LabeledTree, k: usize, labels: &[u32]) -> Vec<Node> {
    let mut level: BTreeSet<Marked> = BTreeSet::from([Marked::from_node(&t.to_nodes())]);
    for _ in 0..k {
        let mut next = BTreeSet::new();
        for tree in &level {
            each_insert(tree, labels, true, &mut |u| {
                next.insert(u);
            });
        }
        level = next;
    }
    level.iter().map(Marked::to_node).collect()
}

/// Calls `f` on every tree with one more vertex under some vertex. With `staged`, parents and
/// adopted children must be original vertices.
fn each_insert(tree: &Marked, labels: &[u32], staged: bool, f: &mut dyn FnMut(Marked)) {
    if !(staged && tree.new) {
        let k = tree.children.len();
        for lo in 0..=k {
            for hi in lo..=k {
                if staged && tree.children[lo..hi].iter().any(|c| c.new) {
                    continue;
                }
                for &label in labels {
                    let mut u = tree.clone();
                    let run: Vec<Marked> = u.children.drain(lo..hi).collect();
                    u.children.insert(
                        lo,
                        Marked {
                            label,
                            new: true,
                            children: run,
                        },
                    );
                    f(u);
                }
            }
        }
    }
    for (i, c) in tree.children.iter().enumerate() {
        each_insert(c, labels, staged, &mut |sub| {
            let mut u = tree.clone();
            u.children[i] = sub;
            f(u);
        });
    }
}

fn each_delete(tree: &Marked, f: &mut dyn FnMut(Marked)) {
    for (i, c) in tree.children.iter().enumerate() {
        let mut u = tree.clone();
        let grand = u.children.remove(i).children;
        u.children.splice(i..i, grand);
        f(u);
        each_delete(c, &mut |sub| {
            let mut u = tree.clone();
            u.children[i] = sub;
            f(u);
        });
    }
}

fn each_subst(tree: &Marked, labels: &[u32], f: &mut dyn FnMut(Marked)) {
    for (i, c) in tree.children.iter().enumerate() {
        for &l in labels {
            if l != c.label {
                let mut u = tree.clone();
                u.children[i].label = l;
                f(u);
            }
        }
        each_subst(c, labels, &mut |sub| {
            let mut u = tree.clone();
            u.children[i] = sub;
            f(u);
        });
    }
}

/// Trees reachable by at most `d` single edits in any order.
fn general(t: &LabeledTree, spec: &BallSpec) -> BTreeSet<Vec<u64>> {
    let m = t
        .alphabet()
        .max(spec.labels.iter().copied().max().unwrap_or(1));
    let start = Marked::from_node(&t.to_nodes());
    let mut seen: BTreeSet<Marked> = BTreeSet::from([start.clone()]);
    let mut frontier = vec![start];
    for _ in 0..spec.d {
        let mut next = Vec::new();
        for tree in &frontier {
            let mut push = |u: Marked| {
                let u = Marked { new: false, ..u };
                if seen.insert(u.clone()) {
                    next.push(u);
                }
            };
            if spec.ops.sub {
                each_subst(tree, &spec.labels, &mut push);
            }
            if spec.ops.del {
                each_delete(tree, &mut push);
            }
            if spec.ops.ins {
                each_insert(tree, &spec.labels, false, &mut push);
            }
        }
        frontier = next;
    }
    seen.iter()
        .map(|u| {
            LabeledTree::from_nodes(&u.to_node(), m)
                .expect("edits keep a tree")
                .euler()
                .into_symbols()
        })
        .collect()
}

/// Smallest number of single edits (labels `1..=m`) turning `a` into `b`, searched up to `limit`.
pub fn script_distance(a: &LabeledTree, b: &LabeledTree, limit: usize) -> Option<usize> {
    let m = a.alphabet().max(b.alphabet());
    let target = b.euler().into_symbols();
    let labels: Vec<u32> = (1..=m).collect();
    (0..=limit).find(|&k| {
        let mut spec = BallSpec::new(
            k,
            labels.clone(),
            BallMode::AtMost,
            OpSet::ALL,
            Semantics::General,
        );
        spec.force = true;
        let a = a.with_alphabet(m).expect("wider alphabet");
        edit_ball(&a, &spec).expect("forced").contains(&target)
    })
}

/// One unit-cost edit. Vertices are DFS indices at the time the edit is applied; an insertion
/// adopts the parent's children `lower..=upper` (1-based), or none when `lower > upper`, in
/// which case it goes before child `lower`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditOp {
    Substitute {
        vertex: usize,
        label: u32,
    },
    Delete {
        vertex: usize,
    },
    Insert {
        parent: usize,
        lower: usize,
        upper: usize,
        label: u32,
    },
}

/// Ordered edits; its length is its cost.
pub type EditScript = Vec<EditOp>;

/// Applies the edits in order.
pub fn apply_script(t: &LabeledTree, script: &[EditOp]) -> Result<LabeledTree, EditError> {
    let mut cur = t.clone();
    for op in script {
        cur = match *op {
            EditOp::Substitute { vertex, label } => {
                apply_subst_reference(&cur, &[(vertex, label)])?
            }
            EditOp::Delete { vertex } => apply_delete_reference(&cur, &[vertex])?,
            EditOp::Insert {
                parent,
                lower,
                upper,
                label,
            } => {
                if parent >= cur.len() {
                    return Err(EditError::VertexOutOfRange(parent));
                }
                let m = cur.alphabet();
                if label == 0 || label > m {
                    return Err(EditError::LabelOutOfRange { label, m });
                }
                let k = cur.children(parent).len();
                let lo = lower.clamp(1, k + 1) - 1;
                let hi = if lower > upper {
                    lo
                } else {
                    upper.min(k).max(lo)
                };
                let mut root = cur.to_nodes();
                let target = node_at(&mut root, &cur, parent);
                let run: Vec<Node> = target.children.drain(lo..hi).collect();
                target.children.insert(
                    lo,
                    Node {
                        label,
                        children: run,
                    },
                );
                LabeledTree::from_nodes(&root, m).expect("insertion keeps a tree")
            }
        };
    }
    Ok(cur)
}

fn node_at<'a>(root: &'a mut Node, t: &LabeledTree, v: usize) -> &'a mut Node {
    let mut path = Vec::new();
    let mut u = v;
    while let Some(p) = t.parent(u) {
        path.push(
            t.children(p)
                .iter()
                .position(|&c| c == u)
                .expect("child of its parent"),
        );
        u = p;
    }
    path.iter()
        .rev()
        .fold(root, |node, &i| &mut node.children[i])
}
