//! Unrooted binary tree topologies over taxa `1..=n`, Jukes-Cantor likelihood
//! by pruning, sequence simulation and an exhaustive topology oracle.
//!
//! Nodes `0..n` are the leaves (node `i` is taxon `i + 1`); nodes `n..2n-2`
//! are internal and always have degree three.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Mutex;

use rand::Rng;

use crate::target::{log_sum_exp, LogDensity};
use crate::{Error, Result, RngStream};

pub const TREE_A_NEWICK: &str = "((((((1,2),3),4),5),6),(7,8))";
pub const TREE_B_NEWICK: &str = "((((((1,7),3),4),5),6),(2,8))";

/// Largest taxon count the enumeration oracle accepts.
pub const MAX_ENUMERATION_TAXA: usize = 8;

const NUCLEOTIDES: [u8; 4] = *b"ACGT";
const RESCALE_BELOW: f64 = 1e-280;
const NO_NODE: u16 = u16::MAX;

/// Internal edge between two internal nodes, identified by node ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InternalEdge(pub usize, pub usize);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeTopology {
    n_taxa: usize,
    // three slots per node, unused slots hold NO_NODE
    adj: Vec<[u16; 3]>,
}

impl TreeTopology {
    /// Parses a Newick string with integer leaf labels `1..=n`. Branch
    /// lengths, if present, are ignored. A bifurcating root is suppressed.
    pub fn from_newick(s: &str) -> Result<Self> {
        let mut p = NewickParser {
            bytes: s.as_bytes(),
            pos: 0,
            labels: Vec::new(),
            edges: Vec::new(),
        };
        let root = p.subtree()?;
        p.skip_ws();
        if p.peek() == Some(b';') {
            p.pos += 1;
        }
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(Error::Parse(format!("trailing input at byte {}", p.pos)));
        }
        Self::from_graph(p.labels, p.edges, Some(root))
    }

    /// Builds a topology from a labelled graph. `labels[v]` is the 1-based
    /// taxon of a leaf or `None` for an internal node. If `suppress` names a
    /// degree-2 node it is removed and its two neighbours joined.
    fn from_graph(
        labels: Vec<Option<usize>>,
        mut edges: Vec<(usize, usize)>,
        suppress: Option<usize>,
    ) -> Result<Self> {
        let mut deg = vec![0usize; labels.len()];
        for &(a, b) in &edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        let mut removed = None;
        if let Some(r) = suppress {
            if labels[r].is_none() && deg[r] == 2 {
                let nbrs: Vec<usize> = edges
                    .iter()
                    .filter_map(|&(a, b)| (a == r).then_some(b).or((b == r).then_some(a)))
                    .collect();
                edges.retain(|&(a, b)| a != r && b != r);
                edges.push((nbrs[0], nbrs[1]));
                removed = Some(r);
            }
        }
        let n = labels.iter().filter(|l| l.is_some()).count();
        if n < 3 {
            return Err(Error::Parse(format!("a tree needs at least 3 taxa, found {n}")));
        }
        let mut map = vec![usize::MAX; labels.len()];
        let mut seen = vec![false; n];
        let mut next_internal = n;
        for (v, l) in labels.iter().enumerate() {
            match l {
                Some(t) => {
                    if *t == 0 || *t > n {
                        return Err(Error::Parse(format!("taxon label {t} outside 1..={n}")));
                    }
                    if std::mem::replace(&mut seen[t - 1], true) {
                        return Err(Error::Parse(format!("taxon {t} appears twice")));
                    }
                    map[v] = t - 1;
                }
                None if Some(v) == removed => {}
                None => {
                    map[v] = next_internal;
                    next_internal += 1;
                }
            }
        }
        if next_internal >= NO_NODE as usize {
            return Err(Error::TooLarge {
                what: "tree node count",
                size: next_internal,
                cap: NO_NODE as usize - 1,
            });
        }
        let mut adj = vec![[NO_NODE; 3]; next_internal];
        for (a, b) in edges {
            for (x, y) in [(map[a], map[b]), (map[b], map[a])] {
                let slot = adj[x]
                    .iter_mut()
                    .find(|s| **s == NO_NODE)
                    .ok_or_else(|| Error::Parse("node with more than three neighbours".into()))?;
                *slot = y as u16;
            }
        }
        let t = Self { n_taxa: n, adj };
        t.validate()?;
        Ok(t)
    }

    pub fn n_taxa(&self) -> usize {
        self.n_taxa
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        v < self.n_taxa
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v]
            .iter()
            .take_while(|&&x| x != NO_NODE)
            .map(|&x| x as usize)
    }

    fn first_neighbor(&self, v: usize) -> usize {
        self.adj[v][0] as usize
    }

    /// All `2n - 3` edges as `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.n_taxa - 3);
        for a in 0..self.adj.len() {
            for b in self.neighbors(a) {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// The `n - 3` edges joining two internal nodes.
    pub fn internal_edges(&self) -> Vec<InternalEdge> {
        self.edges()
            .into_iter()
            .filter(|&(a, b)| !self.is_leaf(a) && !self.is_leaf(b))
            .map(|(a, b)| InternalEdge(a, b))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_taxa;
        let bad = |m: String| Err(Error::Parse(m));
        if n < 3 || self.adj.len() != 2 * n - 2 {
            return bad(format!("{} nodes for {n} taxa", self.adj.len()));
        }
        let mut n_edges = 0;
        for v in 0..self.adj.len() {
            let deg = self.neighbors(v).count();
            let want = if v < n { 1 } else { 3 };
            if deg != want || self.adj[v][deg..].iter().any(|&x| x != NO_NODE) {
                return bad(format!("node {v} has degree {deg}, expected {want}"));
            }
            for u in self.neighbors(v) {
                if u == v || u >= self.adj.len() || !self.neighbors(u).any(|w| w == v) {
                    return bad(format!("edge {v}-{u} is not symmetric"));
                }
            }
            n_edges += deg;
        }
        if n_edges / 2 != 2 * n - 3 {
            return bad(format!("{} edges, expected {}", n_edges / 2, 2 * n - 3));
        }
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in self.neighbors(v) {
                if !std::mem::replace(&mut seen[u], true) {
                    stack.push(u);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("tree is not connected".into());
        }
        Ok(())
    }

    /// Nearest-neighbour interchange across the internal edge `e`.
    ///
    /// Let `a0, a1` be the other neighbours of `e.0` (in adjacency order) and
    /// `c` the first other neighbour of `e.1`. The move swaps `a_which` with
    /// `c`. Adjacency slots are reused in place, so repeating the same move
    /// restores the original tree.
    ///
    /// # Panics
    /// If `e` is not an internal edge of this tree or `which > 1`.
    pub fn nni(&self, e: InternalEdge, which: usize) -> TreeTopology {
        let InternalEdge(u, v) = e;
        assert!(
            !self.is_leaf(u) && !self.is_leaf(v) && self.neighbors(u).any(|x| x == v),
            "{e:?} is not an internal edge"
        );
        assert!(which < 2, "NNI choice must be 0 or 1");
        let a = self.neighbors(u).filter(|&x| x != v).nth(which).unwrap();
        let c = self.neighbors(v).find(|&x| x != u).unwrap();
        let mut t = self.clone();
        replace(&mut t.adj[u], a, c);
        replace(&mut t.adj[v], c, a);
        replace(&mut t.adj[a], u, v);
        replace(&mut t.adj[c], v, u);
        t
    }

    /// All `2(n - 3)` trees one NNI away.
    pub fn nni_neighbors(&self) -> Vec<TreeTopology> {
        self.internal_edges()
            .into_iter()
            .flat_map(|e| [self.nni(e, 0), self.nni(e, 1)])
            .collect()
    }

    /// Deterministic encoding: the tree hung from the internal node next to
    /// taxon 1, subtrees ordered by their smallest taxon. Two topologies are
    /// equal iff their encodings are equal.
    pub fn canonical(&self) -> String {
        let root = self.first_neighbor(0);
        let mut subs: Vec<(usize, String)> = self
            .neighbors(root)
            .filter(|&c| c != 0)
            .map(|c| self.encode_from(c, root))
            .collect();
        subs.sort();
        format!("(1,{},{})", subs[0].1, subs[1].1)
    }

    fn encode_from(&self, v: usize, parent: usize) -> (usize, String) {
        if self.is_leaf(v) {
            return (v, (v + 1).to_string());
        }
        let mut subs: Vec<(usize, String)> = self
            .neighbors(v)
            .filter(|&c| c != parent)
            .map(|c| self.encode_from(c, v))
            .collect();
        subs.sort();
        (subs[0].0, format!("({},{})", subs[0].1, subs[1].1))
    }

    pub fn to_newick(&self) -> String {
        format!("{};", self.canonical())
    }

    /// The taxon bipartitions induced by the internal edges, each stored as
    /// the side not containing taxon 1, sorted.
    pub fn splits(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .internal_edges()
            .into_iter()
            .map(|InternalEdge(a, b)| {
                let mut side = Vec::new();
                self.collect_leaves(b, a, &mut side);
                if side.contains(&0) {
                    side.clear();
                    self.collect_leaves(a, b, &mut side);
                }
                side.sort_unstable();
                side.iter().map(|v| v + 1).collect()
            })
            .collect();
        out.sort();
        out
    }

    fn collect_leaves(&self, v: usize, parent: usize, out: &mut Vec<usize>) {
        if self.is_leaf(v) {
            out.push(v);
            return;
        }
        for c in self.neighbors(v) {
            if c != parent {
                self.collect_leaves(c, v, out);
            }
        }
    }

    /// Nodes in post-order when hanging the tree from `root`, each with its parent.
    fn postorder(&self, root: usize) -> Vec<(usize, usize)> {
        let mut order = Vec::with_capacity(self.adj.len());
        let mut stack = vec![(root, usize::MAX, false)];
        while let Some((v, parent, expanded)) = stack.pop() {
            if expanded {
                order.push((v, parent));
                continue;
            }
            stack.push((v, parent, true));
            let kids: Vec<usize> = self.neighbors(v).collect();
            for &c in kids.iter().rev() {
                if c != parent {
                    stack.push((c, v, false));
                }
            }
        }
        order
    }
}

impl fmt::Display for TreeTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

fn replace(slots: &mut [u16; 3], from: usize, to: usize) {
    let i = slots.iter().position(|&x| x as usize == from).expect("adjacent node");
    slots[i] = to as u16;
}

struct NewickParser<'a> {
    bytes: &'a [u8],
    pos: usize,
    labels: Vec<Option<usize>>,
    edges: Vec<(usize, usize)>,
}

impl NewickParser<'_> {
    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected '{}' at byte {}", b as char, self.pos)))
        }
    }

    fn subtree(&mut self) -> Result<usize> {
        self.skip_ws();
        let node = if self.peek() == Some(b'(') {
            self.pos += 1;
            let v = self.labels.len();
            self.labels.push(None);
            loop {
                let c = self.subtree()?;
                self.edges.push((v, c));
                self.skip_ws();
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    _ => break,
                }
            }
            self.expect(b')')?;
            // internal node names are allowed and ignored
            self.token();
            v
        } else {
            let tok = self.token();
            let label: usize = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad taxon label {tok:?} at byte {}", self.pos)))?;
            self.labels.push(Some(label));
            self.labels.len() - 1
        };
        self.skip_ws();
        if self.peek() == Some(b':') {
            self.pos += 1;
            self.token();
        }
        Ok(node)
    }

    fn token(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|b| !b"(),:;".contains(&b) && !b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned()
    }
}

fn double_factorial(mut k: usize) -> usize {
    let mut out = 1;
    while k > 1 {
        out *= k;
        k -= 2;
    }
    out
}

/// Number of unrooted binary topologies on `n >= 3` taxa: `(2n - 5)!!`.
pub fn topology_count(n: usize) -> usize {
    double_factorial(2 * n - 5)
}

/// Every unrooted binary topology on `n` taxa, built by stepwise addition.
pub fn enumerate_topologies(n: usize) -> Result<Vec<TreeTopology>> {
    if n < 4 {
        return Err(Error::config(format!("enumeration needs at least 4 taxa, got {n}")));
    }
    if n > MAX_ENUMERATION_TAXA {
        return Err(Error::TooLarge {
            what: "taxon count for enumeration",
            size: n,
            cap: MAX_ENUMERATION_TAXA,
        });
    }
    // graphs share labels: leaf for taxon k is node k-1, internal nodes follow
    let mut partial: Vec<Vec<(usize, usize)>> = vec![vec![(0, n), (1, n), (2, n)]];
    for k in 3..n {
        let new_internal = n + (k - 2);
        let mut next = Vec::with_capacity(partial.len() * (2 * k - 3));
        for edges in &partial {
            for i in 0..edges.len() {
                let (a, b) = edges[i];
                let mut e = edges.clone();
                e[i] = (a, new_internal);
                e.push((new_internal, b));
                e.push((new_internal, k));
                next.push(e);
            }
        }
        partial = next;
    }
    let labels: Vec<Option<usize>> = (0..2 * n - 2)
        .map(|v| (v < n).then_some(v + 1))
        .collect();
    let out: Vec<TreeTopology> = partial
        .into_iter()
        .map(|e| TreeTopology::from_graph(labels.clone(), e, None))
        .collect::<Result<_>>()?;
    debug_assert_eq!(out.len(), topology_count(n));
    Ok(out)
}

/// `(p_same, p_diff)` for a Jukes-Cantor branch of length `b`.
pub fn jc_transition(b: f64) -> Result<(f64, f64)> {
    if !(b >= 0.0) {
        return Err(Error::config(format!("branch length must be non-negative, got {b}")));
    }
    let e = (-4.0 * b / 3.0).exp();
    let p_diff = 0.25 - 0.25 * e;
    Ok((1.0 - 3.0 * p_diff, p_diff))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchLengths {
    pub inner: f64,
    pub tip: f64,
}

impl Default for BranchLengths {
    fn default() -> Self {
        Self { inner: 0.1, tip: 0.01 }
    }
}

/// Nucleotide alignment; row `i` belongs to taxon `i + 1`. States are `0..4`
/// for `A, C, G, T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceAlignment {
    names: Vec<String>,
    rows: Vec<Vec<u8>>,
}

impl SequenceAlignment {
    pub fn new(names: Vec<String>, rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.is_empty() || names.len() != rows.len() {
            return Err(Error::config("alignment needs one name per non-empty row set"));
        }
        let len = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != len {
                return Err(Error::config(format!(
                    "row {} has {} sites, expected {len}",
                    i + 1,
                    r.len()
                )));
            }
            if let Some(s) = r.iter().find(|&&s| s > 3) {
                return Err(Error::config(format!("state {s} outside 0..4 in row {}", i + 1)));
            }
        }
        Ok(Self { names, rows })
    }

    /// Taxa named `1..=n`.
    pub fn numbered(rows: Vec<Vec<u8>>) -> Result<Self> {
        let names = (1..=rows.len()).map(|i| i.to_string()).collect();
        Self::new(names, rows)
    }

    pub fn n_taxa(&self) -> usize {
        self.rows.len()
    }

    pub fn n_sites(&self) -> usize {
        self.rows[0].len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i]
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        self.rows.swap(i, j);
    }

    /// Appends the columns of `other` (same taxa, same order).
    pub fn concat(&self, other: &SequenceAlignment) -> Result<Self> {
        if other.n_taxa() != self.n_taxa() {
            return Err(Error::TaxaMismatch {
                tree: self.n_taxa(),
                alignment: other.n_taxa(),
            });
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Self::new(self.names.clone(), rows)
    }

    pub fn write_fasta<W: Write>(&self, mut w: W) -> Result<()> {
        for (name, row) in self.names.iter().zip(&self.rows) {
            writeln!(w, ">{name}")?;
            let seq: Vec<u8> = row.iter().map(|&s| NUCLEOTIDES[s as usize]).collect();
            for chunk in seq.chunks(80) {
                w.write_all(chunk)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    /// Relaxed FASTA: `>name` header lines, sequence possibly over several
    /// lines, case-insensitive `ACGT`, blank lines ignored.
    pub fn read_fasta<R: BufRead>(r: R) -> Result<Self> {
        let mut names = Vec::new();
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('>') {
                names.push(name.trim().to_string());
                rows.push(Vec::new());
                continue;
            }
            let row = rows
                .last_mut()
                .ok_or_else(|| Error::Parse(format!("line {}: sequence before header", lineno + 1)))?;
            for c in line.bytes() {
                let s = NUCLEOTIDES
                    .iter()
                    .position(|&n| n == c.to_ascii_uppercase())
                    .ok_or_else(|| {
                        Error::Parse(format!("line {}: unknown nucleotide {:?}", lineno + 1, c as char))
                    })?;
                row.push(s as u8);
            }
        }
        if rows.is_empty() {
            return Err(Error::Parse("no sequences".into()));
        }
        if rows[0].is_empty() {
            return Err(Error::Parse("empty sequence".into()));
        }
        Self::new(names, rows).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Distinct alignment columns with their multiplicities, in order of first
/// appearance.
#[derive(Clone, Debug)]
pub struct SitePatterns {
    n_taxa: usize,
    states: Vec<u8>,
    counts: Vec<f64>,
}

impl SitePatterns {
    pub fn from_alignment(aln: &SequenceAlignment) -> Self {
        let n = aln.n_taxa();
        let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut states = Vec::new();
        let mut counts = Vec::new();
        for site in 0..aln.n_sites() {
            let col: Vec<u8> = (0..n).map(|t| aln.rows[t][site]).collect();
            match index.get(&col) {
                Some(&k) => counts[k] += 1.0,
                None => {
                    index.insert(col.clone(), counts.len());
                    states.extend_from_slice(&col);
                    counts.push(1.0);
                }
            }
        }
        Self { n_taxa: n, states, counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn state(&self, pattern: usize, taxon: usize) -> u8 {
        self.states[pattern * self.n_taxa + taxon]
    }
}

/// Jukes-Cantor log-likelihood by pruning, with the tree hung from `root`
/// (any node). Partials that drop below `1e-280` are rescaled.
pub fn pruning_loglik_rooted(
    tree: &TreeTopology,
    patterns: &SitePatterns,
    lengths: BranchLengths,
    root: usize,
) -> Result<f64> {
    if tree.n_taxa() != patterns.n_taxa {
        return Err(Error::TaxaMismatch {
            tree: tree.n_taxa(),
            alignment: patterns.n_taxa,
        });
    }
    let np = patterns.len();
    if np == 0 {
        return Ok(0.0);
    }
    let mut partial = vec![[0.0f64; 4]; tree.n_nodes() * np];
    let mut log_scale = vec![0.0f64; np];
    let inner = jc_transition(lengths.inner)?;
    let tip = jc_transition(lengths.tip)?;
    for (v, parent) in tree.postorder(root) {
        if tree.is_leaf(v) && v != root {
            for p in 0..np {
                let mut x = [0.0; 4];
                x[patterns.state(p, v) as usize] = 1.0;
                partial[v * np + p] = x;
            }
            continue;
        }
        let children: Vec<(usize, (f64, f64))> = tree
            .neighbors(v)
            .filter(|&c| c != parent)
            .map(|c| (c, if tree.is_leaf(v) || tree.is_leaf(c) { tip } else { inner }))
            .collect();
        for p in 0..np {
            let mut acc = [1.0f64; 4];
            if tree.is_leaf(v) {
                // a leaf root carries its observation
                acc = [0.0; 4];
                acc[patterns.state(p, v) as usize] = 1.0;
            }
            for &(c, (same, diff)) in &children {
                let child = &partial[c * np + p];
                let sum: f64 = child.iter().sum();
                for x in 0..4 {
                    acc[x] *= (same - diff) * child[x] + diff * sum;
                }
            }
            let m = acc.iter().cloned().fold(0.0, f64::max);
            if m > 0.0 && m < RESCALE_BELOW {
                for a in &mut acc {
                    *a /= m;
                }
                log_scale[p] += m.ln();
            }
            partial[v * np + p] = acc;
        }
    }
    let mut total = 0.0;
    for p in 0..np {
        let site: f64 = 0.25 * partial[root * np + p].iter().sum::<f64>();
        total += patterns.counts[p] * (site.ln() + log_scale[p]);
    }
    if total.is_nan() {
        return Err(Error::Numerical("pruning produced NaN".into()));
    }
    Ok(total)
}

/// Pruning log-likelihood rooted at the internal node next to taxon 1.
pub fn pruning_loglik(tree: &TreeTopology, target: &PhyloTarget) -> Result<f64> {
    pruning_loglik_rooted(tree, &target.patterns, target.lengths, tree.first_neighbor(0))
}

/// Posterior over topologies under a uniform prior: the normalized
/// likelihood. Log-likelihoods are memoized by canonical encoding.
#[derive(Debug)]
pub struct PhyloTarget {
    n_taxa: usize,
    n_sites: usize,
    patterns: SitePatterns,
    lengths: BranchLengths,
    cache: Mutex<HashMap<String, f64>>,
}

impl Clone for PhyloTarget {
    fn clone(&self) -> Self {
        Self {
            n_taxa: self.n_taxa,
            n_sites: self.n_sites,
            patterns: self.patterns.clone(),
            lengths: self.lengths,
            cache: Mutex::new(self.cache.lock().expect("cache lock").clone()),
        }
    }
}

impl PhyloTarget {
    pub fn new(alignment: &SequenceAlignment) -> Self {
        Self::with_lengths(alignment, BranchLengths::default())
    }

    pub fn with_lengths(alignment: &SequenceAlignment, lengths: BranchLengths) -> Self {
        Self {
            n_taxa: alignment.n_taxa(),
            n_sites: alignment.n_sites(),
            patterns: SitePatterns::from_alignment(alignment),
            lengths,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Target with no data: every topology has log-likelihood zero.
    pub fn empty(n_taxa: usize) -> Self {
        Self {
            n_taxa,
            n_sites: 0,
            patterns: SitePatterns {
                n_taxa,
                states: Vec::new(),
                counts: Vec::new(),
            },
            lengths: BranchLengths::default(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn n_taxa(&self) -> usize {
        self.n_taxa
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_patterns(&self) -> usize {
        self.patterns.len()
    }

    pub fn lengths(&self) -> BranchLengths {
        self.lengths
    }

    pub fn loglik(&self, tree: &TreeTopology) -> Result<f64> {
        let key = tree.canonical();
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = pruning_loglik(tree, self)?;
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }
}

impl LogDensity<TreeTopology> for PhyloTarget {
    fn log_density(&self, x: &TreeTopology) -> f64 {
        self.loglik(x).unwrap_or(f64::NAN)
    }

    fn check_state(&self, x: &TreeTopology) -> Result<()> {
        if x.n_taxa() != self.n_taxa {
            return Err(Error::TaxaMismatch {
                tree: x.n_taxa(),
                alignment: self.n_taxa,
            });
        }
        Ok(())
    }
}

/// Simulates `n_sites` i.i.d. columns: uniform state at the node next to
/// taxon 1, then Jukes-Cantor substitutions along every edge.
pub fn simulate_alignment(
    tree: &TreeTopology,
    n_sites: usize,
    lengths: BranchLengths,
    rng: &mut RngStream,
) -> Result<SequenceAlignment> {
    if n_sites == 0 {
        return Err(Error::config("n_sites must be >= 1"));
    }
    let inner = jc_transition(lengths.inner)?;
    let tip = jc_transition(lengths.tip)?;
    let root = tree.first_neighbor(0);
    let mut order = tree.postorder(root);
    order.reverse();
    let mut rows = vec![vec![0u8; n_sites]; tree.n_taxa()];
    let mut state = vec![0u8; tree.n_nodes()];
    for site in 0..n_sites {
        for &(v, parent) in &order {
            state[v] = if parent == usize::MAX {
                rng.random_range(0..4)
            } else {
                let (same, _) = if tree.is_leaf(v) || tree.is_leaf(parent) { tip } else { inner };
                let s = state[parent];
                if rng.uniform() < same {
                    s
                } else {
                    (s + rng.random_range(1..4u8)) % 4
                }
            };
        }
        for (t, row) in rows.iter_mut().enumerate() {
            row[site] = state[t];
        }
    }
    SequenceAlignment::numbered(rows)
}

/// Simulates `n_sites` columns from `tree`, then appends a copy with the
/// rows of taxa `swap.0` and `swap.1` (1-based) exchanged. The result gives
/// `tree` and its image under the label swap identical likelihood.
pub fn build_swapped_alignment(
    tree: &TreeTopology,
    n_sites: usize,
    swap: (usize, usize),
    rng: &mut RngStream,
) -> Result<SequenceAlignment> {
    let n = tree.n_taxa();
    if swap.0 == 0 || swap.1 == 0 || swap.0 > n || swap.1 > n {
        return Err(Error::config(format!("swap taxa {swap:?} outside 1..={n}")));
    }
    let first = simulate_alignment(tree, n_sites, BranchLengths::default(), rng)?;
    let mut second = first.clone();
    second.swap_rows(swap.0 - 1, swap.1 - 1);
    first.concat(&second)
}

/// 1000 sites from tree A, concatenated with the copy in which the
/// sequences of taxa 2 and 7 are exchanged (2000 sites, 8 taxa).
pub fn build_default_alignment(rng: &mut RngStream) -> Result<SequenceAlignment> {
    let a = TreeTopology::from_newick(TREE_A_NEWICK)?;
    build_swapped_alignment(&a, 1000, (2, 7), rng)
}

/// Exact posterior over all topologies of a small instance.
#[derive(Clone, Debug)]
pub struct TopologyPosterior {
    pub topologies: Vec<TreeTopology>,
    pub log_likelihoods: Vec<f64>,
    pub probabilities: Vec<f64>,
    index: HashMap<String, usize>,
}

impl TopologyPosterior {
    pub fn index_of(&self, tree: &TreeTopology) -> Option<usize> {
        self.index.get(&tree.canonical()).copied()
    }

    pub fn probability_of(&self, tree: &TreeTopology) -> f64 {
        self.index_of(tree).map_or(0.0, |i| self.probabilities[i])
    }

    /// Total-variation distance from a table of canonical-encoding counts.
    pub fn tv_distance(&self, counts: &BTreeMap<String, u64>) -> f64 {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return 1.0;
        }
        let mut tv = 0.0;
        let mut matched = HashSet::new();
        for (i, t) in self.topologies.iter().enumerate() {
            let key = t.canonical();
            let c = counts.get(&key).copied().unwrap_or(0);
            matched.insert(key);
            tv += (c as f64 / total as f64 - self.probabilities[i]).abs();
        }
        for (k, c) in counts {
            if !matched.contains(k) {
                tv += *c as f64 / total as f64;
            }
        }
        0.5 * tv
    }
}

pub fn exact_topology_posterior(target: &PhyloTarget) -> Result<TopologyPosterior> {
    let topologies = enumerate_topologies(target.n_taxa())?;
    let log_likelihoods: Vec<f64> = topologies
        .iter()
        .map(|t| target.loglik(t))
        .collect::<Result<_>>()?;
    let z = log_sum_exp(&log_likelihoods);
    let probabilities = log_likelihoods.iter().map(|l| (l - z).exp()).collect();
    let index = topologies
        .iter()
        .enumerate()
        .map(|(i, t)| (t.canonical(), i))
        .collect();
    Ok(TopologyPosterior {
        topologies,
        log_likelihoods,
        probabilities,
        index,
    })
}
