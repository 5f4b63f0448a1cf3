//! Concatenated codes.
//!
//! A [`CodeTree`] feeds input bits (leaves) into primitives whose output bits
//! feed further primitives, up to a root whose output is the single message
//! bit. Each internal node consumes one shared pair, identified by the node's
//! position in post-order (children before parents, left to right), which is
//! also the order in which Alice measures.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::bloch::{BlochVector, PairSource};
use crate::error::{Error, Result};
use crate::exactnum::ExactValue;
use crate::primitives::{self, PrimitiveKind};

/// Header line of the tree file format.
pub const TREE_FILE_HEADER: &str = "earac-tree v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CodeTree {
    Leaf(usize),
    Node {
        kind: PrimitiveKind,
        children: Vec<CodeTree>,
    },
}

impl CodeTree {
    /// Builds a node, checking that the number of children matches `kind`.
    pub fn node(kind: PrimitiveKind, children: Vec<CodeTree>) -> Result<Self> {
        if children.len() != kind.arity() {
            return Err(Error::Arity {
                kind: kind.name(),
                expected: kind.arity(),
                got: children.len(),
            });
        }
        Ok(CodeTree::Node { kind, children })
    }

    pub fn e2(a: CodeTree, b: CodeTree) -> Self {
        CodeTree::Node {
            kind: PrimitiveKind::E2,
            children: vec![a, b],
        }
    }

    pub fn e3(a: CodeTree, b: CodeTree, c: CodeTree) -> Self {
        CodeTree::Node {
            kind: PrimitiveKind::E3,
            children: vec![a, b, c],
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            CodeTree::Leaf(_) => 1,
            CodeTree::Node { children, .. } => children.iter().map(CodeTree::leaf_count).sum(),
        }
    }

    /// Number of internal nodes, i.e. shared pairs consumed per run.
    pub fn ebit_count(&self) -> usize {
        match self {
            CodeTree::Leaf(_) => 0,
            CodeTree::Node { children, .. } => {
                1 + children.iter().map(CodeTree::ebit_count).sum::<usize>()
            }
        }
    }

    /// Leaf labels in left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            CodeTree::Leaf(i) => out.push(*i),
            CodeTree::Node { children, .. } => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
        }
    }

    /// Checks node arities and that leaf labels are exactly `0..n`.
    pub fn validate(&self) -> Result<()> {
        self.check_arity()?;
        let mut seen = vec![false; self.leaf_count()];
        for leaf in self.leaves() {
            match seen.get_mut(leaf) {
                Some(slot) if !*slot => *slot = true,
                Some(_) => {
                    return Err(Error::InvalidSize(format!("leaf {leaf} appears twice")))
                }
                None => {
                    return Err(Error::InvalidSize(format!(
                        "leaf label {leaf} out of range for {} leaves",
                        seen.len()
                    )))
                }
            }
        }
        Ok(())
    }

    fn check_arity(&self) -> Result<()> {
        if let CodeTree::Node { kind, children } = self {
            if children.len() != kind.arity() {
                return Err(Error::Arity {
                    kind: kind.name(),
                    expected: kind.arity(),
                    got: children.len(),
                });
            }
            children.iter().try_for_each(CodeTree::check_arity)?;
        }
        Ok(())
    }

    /// Whether some primitive takes a raw input bit next to a subtree
    /// output, a shape never needed by the grouping rule but allowed by the
    /// optimizer.
    pub fn has_mixed_depth_inputs(&self) -> bool {
        match self {
            CodeTree::Leaf(_) => false,
            CodeTree::Node { children, .. } => {
                let leaves = children.iter().filter(|c| matches!(c, CodeTree::Leaf(_))).count();
                (leaves > 0 && leaves < children.len())
                    || children.iter().any(CodeTree::has_mixed_depth_inputs)
            }
        }
    }

    /// Relabels leaf `i` as `permutation[i]`.
    pub fn permute_leaves(&self, permutation: &[usize]) -> Result<CodeTree> {
        let n = self.leaf_count();
        if permutation.len() != n {
            return Err(Error::InvalidPermutation(format!(
                "expected {n} entries, got {}",
                permutation.len()
            )));
        }
        let mut seen = vec![false; n];
        for &p in permutation {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidPermutation(format!(
                    "{permutation:?} is not a bijection on 0..{n}"
                )));
            }
        }
        Ok(self.relabel(permutation))
    }

    fn relabel(&self, permutation: &[usize]) -> CodeTree {
        match self {
            CodeTree::Leaf(i) => CodeTree::Leaf(permutation[*i]),
            CodeTree::Node { kind, children } => CodeTree::Node {
                kind: *kind,
                children: children.iter().map(|c| c.relabel(permutation)).collect(),
            },
        }
    }

    /// Renders the tree file: header line and expression.
    pub fn to_file_string(&self) -> String {
        format!("{TREE_FILE_HEADER}\n{self}\n")
    }

    /// Parses the tree file format. The header line is mandatory.
    pub fn from_file_str(text: &str) -> Result<CodeTree> {
        let text = text.trim_start_matches('\u{feff}');
        let mut lines = text.splitn(2, '\n');
        let header = lines.next().unwrap_or_default().trim();
        if header != TREE_FILE_HEADER {
            return Err(Error::Parse(format!(
                "expected header {TREE_FILE_HEADER:?}, found {header:?}"
            )));
        }
        lines.next().unwrap_or_default().parse()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CodeTree> {
        CodeTree::from_file_str(&std::fs::read_to_string(path)?)
    }

    /// Flattened form used for execution.
    pub fn compile(&self) -> Result<CompiledTree> {
        self.validate()?;
        let mut nodes = Vec::new();
        let root = flatten(self, &mut nodes);
        let mut leaf_paths = vec![Vec::new(); self.leaf_count()];
        let mut stack = Vec::new();
        record_paths(&nodes, root, &mut stack, &mut leaf_paths);
        Ok(CompiledTree {
            nodes,
            root,
            leaf_paths,
        })
    }
}

impl fmt::Display for CodeTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeTree::Leaf(i) => write!(f, "L{i}"),
            CodeTree::Node { kind, children } => {
                write!(f, "{kind}(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for CodeTree {
    type Err = Error;

    /// Parses a bare expression such as `E2(E2(L0,L1),E3(L2,L3,L4))`.
    fn from_str(s: &str) -> Result<Self> {
        let compact: Vec<u8> = s.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        let mut parser = TreeParser {
            input: &compact,
            pos: 0,
        };
        let tree = parser.expr()?;
        if parser.pos != compact.len() {
            return Err(parser.error("trailing input"));
        }
        tree.validate()?;
        Ok(tree)
    }
}

struct TreeParser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl TreeParser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Parse(format!("tree expression: {what} at offset {}", self.pos))
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", byte as char)))
        }
    }

    fn number(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.input[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.error("expected a number"))
    }

    fn expr(&mut self) -> Result<CodeTree> {
        match self.peek() {
            Some(b'L') => {
                self.pos += 1;
                Ok(CodeTree::Leaf(self.number()?))
            }
            Some(b'E') => {
                self.pos += 1;
                let kind = match self.number()? {
                    2 => PrimitiveKind::E2,
                    3 => PrimitiveKind::E3,
                    other => return Err(self.error(&format!("unknown primitive E{other}"))),
                };
                self.expect(b'(')?;
                let mut children = vec![self.expr()?];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    children.push(self.expr()?);
                }
                self.expect(b')')?;
                CodeTree::node(kind, children)
            }
            _ => Err(self.error("expected 'L' or 'E'")),
        }
    }
}

/// Builds a tree with the grouping rule: `r = n mod 3`, `(2r) mod 3` pair
/// groups followed by triple groups for the rest, bits assigned left to
/// right, then the same rule applied to the group outputs until one bit
/// remains.
pub fn build_paper_tree(n: usize) -> Result<CodeTree> {
    if n == 0 {
        return Err(Error::InvalidSize("a code needs at least one bit".into()));
    }
    Ok(group_layer((0..n).map(CodeTree::Leaf).collect()))
}

fn group_layer(mut items: Vec<CodeTree>) -> CodeTree {
    match items.len() {
        1 => items.pop().expect("one item"),
        2 | 3 => {
            let kind = PrimitiveKind::from_arity(items.len()).expect("arity 2 or 3");
            CodeTree::Node {
                kind,
                children: items,
            }
        }
        n => {
            let pairs = (2 * (n % 3)) % 3;
            let mut rest = items.into_iter();
            let mut next = Vec::new();
            for _ in 0..pairs {
                next.push(CodeTree::e2(
                    rest.next().expect("pair"),
                    rest.next().expect("pair"),
                ));
            }
            let rest: Vec<_> = rest.collect();
            debug_assert_eq!(rest.len() % 3, 0);
            for chunk in rest.chunks(3) {
                next.push(CodeTree::Node {
                    kind: PrimitiveKind::E3,
                    children: chunk.to_vec(),
                });
            }
            group_layer(next)
        }
    }
}

/// Extends `bits` with zeros up to `leaf_count`, so a larger code can carry
/// a shorter input. The padding bits are never queried.
pub fn pad_inputs(bits: &[u8], leaf_count: usize) -> Result<Vec<u8>> {
    if bits.len() > leaf_count {
        return Err(Error::InvalidSize(format!(
            "{} bits do not fit into {leaf_count} leaves",
            bits.len()
        )));
    }
    let mut padded = bits.to_vec();
    padded.resize(leaf_count, 0);
    Ok(padded)
}

/// Numbers of `E2` (`k`) and `E3` (`j`) primitives between a leaf and the
/// root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PathProfile {
    pub k: u32,
    pub j: u32,
}

impl PathProfile {
    pub fn new(k: u32, j: u32) -> Self {
        PathProfile { k, j }
    }

    pub fn len(&self) -> u32 {
        self.k + self.j
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn advantage(&self) -> ExactValue {
        ExactValue::delta(self.k, self.j)
    }

    fn push(self, kind: PrimitiveKind) -> Self {
        match kind {
            PrimitiveKind::E2 => PathProfile::new(self.k + 1, self.j),
            PrimitiveKind::E3 => PathProfile::new(self.k, self.j + 1),
        }
    }
}

impl fmt::Display for PathProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(k={}, j={})", self.k, self.j)
    }
}

/// `½(1 + 2^(-k/2)·3^(-j/2))`.
pub fn exact_bit_probability(profile: PathProfile) -> ExactValue {
    profile.advantage().half_plus_half()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Probability that `uses` independent runs of `kind` make an even (or odd)
/// number of errors: `½(1 ± c^uses)` with `c = 1/√arity`.
pub fn error_parity_probability(kind: PrimitiveKind, uses: u32, parity: Parity) -> ExactValue {
    let power = match kind {
        PrimitiveKind::E2 => ExactValue::delta(uses, 0),
        PrimitiveKind::E3 => ExactValue::delta(0, uses),
    };
    match parity {
        Parity::Even => power.half_plus_half(),
        Parity::Odd => (-power).half_plus_half(),
    }
}

/// Path profile of every leaf, indexed by leaf label.
pub fn leaf_profiles(tree: &CodeTree) -> Vec<PathProfile> {
    let mut out = vec![PathProfile::default(); tree.leaf_count()];
    fill_profiles(tree, PathProfile::default(), &mut out);
    out
}

fn fill_profiles(tree: &CodeTree, acc: PathProfile, out: &mut [PathProfile]) {
    match tree {
        CodeTree::Leaf(i) => {
            if let Some(slot) = out.get_mut(*i) {
                *slot = acc;
            }
        }
        CodeTree::Node { kind, children } => {
            let acc = acc.push(*kind);
            children.iter().for_each(|c| fill_profiles(c, acc, out));
        }
    }
}

pub fn path_profile(tree: &CodeTree, leaf: usize) -> Result<PathProfile> {
    if !tree.leaves().contains(&leaf) {
        return Err(Error::UnknownLeaf(leaf));
    }
    Ok(leaf_profiles(tree)[leaf])
}

/// Success probability of every leaf, indexed by leaf label.
pub fn bit_probabilities(tree: &CodeTree) -> Vec<ExactValue> {
    leaf_profiles(tree).into_iter().map(exact_bit_probability).collect()
}

/// The code's guarantee without shared randomness: the worst bit.
pub fn min_probability(tree: &CodeTree) -> ExactValue {
    bit_probabilities(tree).into_iter().min().expect("at least one leaf")
}

/// The guarantee when shared randomness permutes the bit-to-leaf
/// assignment uniformly: the mean over leaves.
pub fn sr_average(tree: &CodeTree) -> ExactValue {
    let probs = bit_probabilities(tree);
    let n = probs.len() as i64;
    probs.into_iter().sum::<ExactValue>() * ExactValue::ratio(1, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Alice,
    Bob,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Alice => "alice",
            Role::Bob => "bob",
        })
    }
}

/// One measurement in a protocol run. For Alice `output` is the node's
/// output bit; for Bob it is the running guess (message XOR outcomes so far).
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptEntry {
    pub node: u32,
    pub role: Role,
    pub basis: BlochVector,
    pub outcome: u8,
    pub output: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn nodes(&self, role: Role) -> Vec<u32> {
        self.entries
            .iter()
            .filter(|e| e.role == role)
            .map(|e| e.node)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    Leaf(usize),
    Node(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatNode {
    pub kind: PrimitiveKind,
    pub children: Vec<Child>,
}

/// One step of a root-to-leaf walk: the node and which child is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub node: u32,
    pub kind: PrimitiveKind,
    pub child: usize,
}

/// A validated tree flattened into post-order with precomputed leaf paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledTree {
    nodes: Vec<FlatNode>,
    root: Child,
    leaf_paths: Vec<Vec<PathStep>>,
}

fn flatten(tree: &CodeTree, nodes: &mut Vec<FlatNode>) -> Child {
    match tree {
        CodeTree::Leaf(i) => Child::Leaf(*i),
        CodeTree::Node { kind, children } => {
            let children = children.iter().map(|c| flatten(c, nodes)).collect();
            nodes.push(FlatNode {
                kind: *kind,
                children,
            });
            Child::Node((nodes.len() - 1) as u32)
        }
    }
}

fn record_paths(
    nodes: &[FlatNode],
    at: Child,
    stack: &mut Vec<PathStep>,
    out: &mut [Vec<PathStep>],
) {
    match at {
        Child::Leaf(i) => out[i] = stack.clone(),
        Child::Node(id) => {
            let node = &nodes[id as usize];
            for (pos, child) in node.children.iter().enumerate() {
                stack.push(PathStep {
                    node: id,
                    kind: node.kind,
                    child: pos,
                });
                record_paths(nodes, *child, stack, out);
                stack.pop();
            }
        }
    }
}

impl CompiledTree {
    pub fn leaf_count(&self) -> usize {
        self.leaf_paths.len()
    }

    pub fn nodes(&self) -> &[FlatNode] {
        &self.nodes
    }

    pub fn root(&self) -> Child {
        self.root
    }

    /// Root-to-leaf steps for `leaf`.
    pub fn path(&self, leaf: usize) -> Result<&[PathStep]> {
        self.leaf_paths
            .get(leaf)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownLeaf(leaf))
    }

    fn check_bits(&self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.leaf_count() {
            return Err(Error::InvalidSize(format!(
                "tree has {} leaves but {} bits were given",
                self.leaf_count(),
                bits.len()
            )));
        }
        Ok(())
    }

    /// Alice's side: measure every pair bottom-up and return the message.
    pub fn encode(&self, bits: &[u8], source: &mut dyn PairSource) -> Result<(u8, Transcript)> {
        self.check_bits(bits)?;
        let mut transcript = Transcript::default();
        let message = self.encode_with(bits, source, |entry| transcript.entries.push(entry))?;
        Ok((message, transcript))
    }

    fn encode_with(
        &self,
        bits: &[u8],
        source: &mut dyn PairSource,
        mut record: impl FnMut(TranscriptEntry),
    ) -> Result<u8> {
        let mut outputs = Vec::with_capacity(self.nodes.len());
        let mut inputs = Vec::with_capacity(3);
        for (id, node) in self.nodes.iter().enumerate() {
            inputs.clear();
            inputs.extend(node.children.iter().map(|c| match *c {
                Child::Leaf(i) => bits[i] & 1,
                Child::Node(n) => outputs[n as usize],
            }));
            let basis = primitives::alice_basis(node.kind, &inputs)?;
            let outcome = source.measure(id as u32, &basis)?;
            let output = primitives::node_output(&inputs, outcome);
            outputs.push(output);
            record(TranscriptEntry {
                node: id as u32,
                role: Role::Alice,
                basis,
                outcome,
                output,
            });
        }
        Ok(match self.root {
            Child::Leaf(i) => bits[i] & 1,
            Child::Node(n) => outputs[n as usize],
        })
    }

    /// Bob's side: measure the pairs on the root-to-target path only.
    pub fn decode(
        &self,
        message: u8,
        target: usize,
        source: &mut dyn PairSource,
    ) -> Result<(u8, Transcript)> {
        let mut transcript = Transcript::default();
        let guess = self.decode_with(message, target, source, |e| transcript.entries.push(e))?;
        Ok((guess, transcript))
    }

    fn decode_with(
        &self,
        message: u8,
        target: usize,
        source: &mut dyn PairSource,
        mut record: impl FnMut(TranscriptEntry),
    ) -> Result<u8> {
        let mut guess = message & 1;
        for step in self.path(target)? {
            let basis = primitives::bob_basis(step.kind, step.child)?;
            let outcome = source.measure(step.node, &basis)?;
            guess = primitives::decode_guess(guess, &[outcome]);
            record(TranscriptEntry {
                node: step.node,
                role: Role::Bob,
                basis,
                outcome,
                output: guess,
            });
        }
        Ok(guess)
    }

    /// Encode then decode without keeping transcripts; returns Bob's guess.
    pub fn run(&self, bits: &[u8], target: usize, source: &mut dyn PairSource) -> Result<u8> {
        self.check_bits(bits)?;
        let message = self.encode_with(bits, source, |_| {})?;
        self.decode_with(message, target, source, |_| {})
    }
}

pub fn encode(
    tree: &CodeTree,
    bits: &[u8],
    source: &mut dyn PairSource,
) -> Result<(u8, Transcript)> {
    tree.compile()?.encode(bits, source)
}

pub fn decode(
    tree: &CodeTree,
    message: u8,
    target: usize,
    source: &mut dyn PairSource,
) -> Result<(u8, Transcript)> {
    tree.compile()?.decode(message, target, source)
}

/// A pair source that replays fixed outcomes in request order. Useful for
/// tracing the bit rules by hand.
#[derive(Debug, Clone, Default)]
pub struct ScriptedOutcomes {
    outcomes: std::collections::VecDeque<u8>,
}

impl ScriptedOutcomes {
    pub fn new(outcomes: impl IntoIterator<Item = u8>) -> Self {
        ScriptedOutcomes {
            outcomes: outcomes.into_iter().collect(),
        }
    }
}

impl PairSource for ScriptedOutcomes {
    fn measure(&mut self, _pair: u32, _axis: &BlochVector) -> Result<u8> {
        self.outcomes
            .pop_front()
            .ok_or_else(|| Error::Protocol("scripted outcomes exhausted".into()))
    }
}

/// Longest path the exhaustive oracle accepts.
pub const MAX_ORACLE_PATH: usize = 12;
const MAX_ORACLE_BITS: usize = 24;

/// Exact probability that decoding `target` returns `bits[target]`, by
/// enumerating every Alice outcome (weight ½ each) and every Bob outcome on
/// the path (weight `½(1 + (-1)^(A⊕B)·a·b)` given Alice's), with the
/// overlaps `a·b` taken exactly from the basis tables.
pub fn exhaustive_success_probability(
    tree: &CodeTree,
    bits: &[u8],
    target: usize,
) -> Result<ExactValue> {
    let compiled = tree.compile()?;
    compiled.check_bits(bits)?;
    let path = compiled.path(target)?.to_vec();
    if path.len() > MAX_ORACLE_PATH {
        return Err(Error::PathTooDeep(path.len()));
    }
    let alice_count = compiled.nodes.len();
    if alice_count + path.len() > MAX_ORACLE_BITS {
        return Err(Error::Unsupported(format!(
            "exhaustive enumeration over {} outcomes",
            alice_count + path.len()
        )));
    }
    let half = ExactValue::ratio(1, 2);
    let alice_weight = (0..alice_count).fold(ExactValue::one(), |acc, _| acc * &half);
    let mut total = ExactValue::zero();
    for alice_mask in 0u64..(1 << alice_count) {
        // node outputs and exact overlaps for this Alice assignment
        let mut outputs = Vec::with_capacity(alice_count);
        let mut node_inputs = Vec::with_capacity(alice_count);
        for (id, node) in compiled.nodes.iter().enumerate() {
            let inputs: Vec<u8> = node
                .children
                .iter()
                .map(|c| match *c {
                    Child::Leaf(i) => bits[i] & 1,
                    Child::Node(n) => outputs[n as usize],
                })
                .collect();
            let a = ((alice_mask >> id) & 1) as u8;
            outputs.push(primitives::node_output(&inputs, a));
            node_inputs.push(inputs);
        }
        let message = match compiled.root {
            Child::Leaf(i) => bits[i] & 1,
            Child::Node(n) => outputs[n as usize],
        };
        let overlaps: Vec<ExactValue> = path
            .iter()
            .map(|s| primitives::exact_dot(s.kind, &node_inputs[s.node as usize], s.child))
            .collect::<Result<_>>()?;
        for bob_mask in 0u64..(1 << path.len()) {
            let mut weight = alice_weight.clone();
            let mut outcomes = Vec::with_capacity(path.len());
            for (pos, step) in path.iter().enumerate() {
                let a = ((alice_mask >> step.node) & 1) as u8;
                let b = ((bob_mask >> pos) & 1) as u8;
                let signed = if a == b {
                    overlaps[pos].clone()
                } else {
                    -&overlaps[pos]
                };
                weight = weight * signed.half_plus_half();
                outcomes.push(b);
            }
            if primitives::decode_guess(message, &outcomes) == bits[target] & 1 {
                total += &weight;
            }
        }
    }
    Ok(total)
}
