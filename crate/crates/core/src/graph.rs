//! Glued binary trees.
//!
//! Two variants are supported:
//!
//! - the simple glued trees (SGT) graph `G_d`, where two depth-`d` binary
//!   trees share their leaf column, giving `2d + 1` columns and
//!   `3·2^d − 2` vertices;
//! - the modified glued trees (MGT) graph, where the two trees keep separate
//!   leaf columns `d` and `d + 1` that are joined by an alternating cycle,
//!   giving `2d + 2` columns and `2^{d+2} − 2` vertices.
//!
//! Vertices are stored column by column, so every column occupies a
//! contiguous range of 0-based ids. For the SGT this ordering coincides with
//! the 1-based `v` coordinate shifted by one.

use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ensemble;
use crate::error::{domain, Error, Result};

/// Leaf gluing of the modified graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "gluing")]
pub enum Gluing {
    /// `left_0 – right_0 – left_1 – right_1 – … – right_{m−1} – left_0`.
    Regular,
    /// A uniformly random alternating Hamiltonian cycle drawn from `seed`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Sgt,
    Mgt(Gluing),
}

/// Variant without the gluing details; enough to know the column layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    Sgt,
    Mgt,
}

/// Graph drawn for each realization of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Sgt,
    MgtRegular,
    /// A fresh random gluing per realization.
    MgtRandom,
}

impl Family {
    pub fn layout(self) -> Layout {
        match self {
            Family::Sgt => Layout::Sgt,
            Family::MgtRegular | Family::MgtRandom => Layout::Mgt,
        }
    }

    pub fn realize(self, d: usize, master: u64, index: u64) -> Result<Graph> {
        match self {
            Family::Sgt => Graph::sgt(d),
            Family::MgtRegular => Graph::mgt(d, Gluing::Regular),
            Family::MgtRandom => Graph::mgt(
                d,
                Gluing::Random {
                    seed: ensemble::derive_seed(master, ensemble::Stream::Gluing, index),
                },
            ),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Sgt => "sgt",
            Family::MgtRegular => "mgt-regular",
            Family::MgtRandom => "mgt-random",
        }
    }
}

impl Variant {
    pub fn layout(self) -> Layout {
        match self {
            Variant::Sgt => Layout::Sgt,
            Variant::Mgt(_) => Layout::Mgt,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Variant::Sgt => "sgt",
            Variant::Mgt(Gluing::Regular) => "mgt-regular",
            Variant::Mgt(Gluing::Random { .. }) => "mgt-random",
        }
    }

    fn seed(self) -> Option<u64> {
        match self {
            Variant::Mgt(Gluing::Random { seed }) => Some(seed),
            _ => None,
        }
    }
}

impl Layout {
    /// Index of the last column (the right root).
    pub fn last_column(self, d: usize) -> usize {
        match self {
            Layout::Sgt => 2 * d,
            Layout::Mgt => 2 * d + 1,
        }
    }

    pub fn num_columns(self, d: usize) -> usize {
        self.last_column(d) + 1
    }

    pub fn num_vertices(self, d: usize) -> usize {
        match self {
            Layout::Sgt => 3 * (1 << d) - 2,
            Layout::Mgt => (1 << (d + 2)) - 2,
        }
    }
}

/// Position `(j, n)`: column `j`, row `n` within the column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord {
    pub j: usize,
    pub n: usize,
}

/// Largest depth we build; `2^{d+2}` must stay well inside `u32` ids.
pub const MAX_DEPTH: usize = 24;

fn check_depth(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DEPTH {
        return Err(domain(format!("depth must be in 1..={MAX_DEPTH}, got {d}")));
    }
    Ok(())
}

/// Number of vertices in column `j` of the depth-`d` graph.
pub fn column_size(j: usize, d: usize, layout: Layout) -> Result<usize> {
    check_depth(d)?;
    let last = layout.last_column(d);
    if j > last {
        return Err(domain(format!("column {j} out of range 0..={last}")));
    }
    Ok(if j <= d { 1 << j } else { 1 << (last - j) })
}

/// The 1-based SGT coordinate `v`, ranging over `1..=3·2^d − 2`.
pub fn coord_to_vertex(c: Coord, d: usize) -> Result<usize> {
    let size = column_size(c.j, d, Layout::Sgt)?;
    if c.n >= size {
        return Err(domain(format!("row {} out of range for column {} (size {size})", c.n, c.j)));
    }
    Ok(if c.j <= d {
        (1 << c.j) + c.n
    } else {
        3 * (1 << d) - (1 << (2 * d + 1 - c.j)) + c.n
    })
}

/// Inverse of [`coord_to_vertex`].
pub fn vertex_to_coord(v: usize, d: usize) -> Result<Coord> {
    check_depth(d)?;
    let n_total = Layout::Sgt.num_vertices(d);
    if v == 0 || v > n_total {
        return Err(domain(format!("vertex {v} out of range 1..={n_total}")));
    }
    if v < (1 << (d + 1)) {
        let j = usize::BITS as usize - 1 - v.leading_zeros() as usize;
        return Ok(Coord { j, n: v - (1 << j) });
    }
    // Right half: column j starts at 3·2^d − 2^{2d+1−j}.
    for j in (d + 1)..=(2 * d) {
        let start = 3 * (1 << d) - (1 << (2 * d + 1 - j));
        let size = 1 << (2 * d - j);
        if v >= start && v < start + size {
            return Ok(Coord { j, n: v - start });
        }
    }
    unreachable!("vertex {v} not covered by any column of depth {d}")
}

/// Adjacency structure of a glued trees instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    depth: usize,
    variant: Variant,
    adjacency: Vec<Vec<u32>>,
    column_of: Vec<u32>,
    column_start: Vec<usize>,
}

impl Graph {
    pub fn build(d: usize, variant: Variant) -> Result<Self> {
        match variant {
            Variant::Sgt => Self::sgt(d),
            Variant::Mgt(gluing) => Self::mgt(d, gluing),
        }
    }

    pub fn sgt(d: usize) -> Result<Self> {
        check_depth(d)?;
        let mut g = Self::empty(d, Variant::Sgt);
        let last = 2 * d;
        for j in 0..d {
            for n in 0..(1usize << j) {
                // Left tree grows to the right, right tree grows to the left.
                for child in [2 * n, 2 * n + 1] {
                    g.add_edge(g.vertex(j, n), g.vertex(j + 1, child));
                    g.add_edge(g.vertex(last - j, n), g.vertex(last - j - 1, child));
                }
            }
        }
        g.finish();
        Ok(g)
    }

    pub fn mgt(d: usize, gluing: Gluing) -> Result<Self> {
        check_depth(d)?;
        let mut g = Self::empty(d, Variant::Mgt(gluing));
        let last = 2 * d + 1;
        for j in 0..d {
            for n in 0..(1usize << j) {
                for child in [2 * n, 2 * n + 1] {
                    g.add_edge(g.vertex(j, n), g.vertex(j + 1, child));
                    g.add_edge(g.vertex(last - j, n), g.vertex(last - j - 1, child));
                }
            }
        }
        let m = 1usize << d;
        let (left, right): (Vec<usize>, Vec<usize>) = match gluing {
            Gluing::Regular => ((0..m).collect(), (0..m).collect()),
            Gluing::Random { seed } => {
                let mut rng = ensemble::stream_rng(seed, ensemble::Stream::Gluing, 0);
                let mut left: Vec<usize> = (0..m).collect();
                let mut right: Vec<usize> = (0..m).collect();
                left.shuffle(&mut rng);
                right.shuffle(&mut rng);
                (left, right)
            }
        };
        for i in 0..m {
            let r = g.vertex(d + 1, right[i]);
            g.add_edge(g.vertex(d, left[i]), r);
            g.add_edge(r, g.vertex(d, left[(i + 1) % m]));
        }
        g.finish();
        Ok(g)
    }

    fn empty(d: usize, variant: Variant) -> Self {
        let layout = variant.layout();
        let ncols = layout.num_columns(d);
        let mut column_start = Vec::with_capacity(ncols + 1);
        let mut column_of = Vec::with_capacity(layout.num_vertices(d));
        let mut offset = 0;
        for j in 0..ncols {
            column_start.push(offset);
            let size = column_size(j, d, layout).expect("column in range");
            column_of.extend(std::iter::repeat(j as u32).take(size));
            offset += size;
        }
        column_start.push(offset);
        Graph {
            depth: d,
            variant,
            adjacency: vec![Vec::with_capacity(3); offset],
            column_of,
            column_start,
        }
    }

    fn vertex(&self, j: usize, n: usize) -> usize {
        debug_assert!(self.column_start[j] + n < self.column_start[j + 1]);
        self.column_start[j] + n
    }

    fn add_edge(&mut self, u: usize, v: usize) {
        self.adjacency[u].push(v as u32);
        self.adjacency[v].push(u as u32);
    }

    fn finish(&mut self) {
        for list in &mut self.adjacency {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn layout(&self) -> Layout {
        self.variant.layout()
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_columns(&self) -> usize {
        self.column_start.len() - 1
    }

    pub fn last_column(&self) -> usize {
        self.num_columns() - 1
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn column_of(&self, v: usize) -> usize {
        self.column_of[v] as usize
    }

    /// Vertex ids of column `j`.
    pub fn column(&self, j: usize) -> Range<usize> {
        self.column_start[j]..self.column_start[j + 1]
    }

    pub fn column_size(&self, j: usize) -> usize {
        self.column(j).len()
    }

    pub fn left_root(&self) -> usize {
        0
    }

    pub fn right_root(&self) -> usize {
        self.num_vertices() - 1
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Uniform superposition over column `j`.
    pub fn column_state(&self, j: usize) -> Result<ColumnVector> {
        if j >= self.num_columns() {
            return Err(domain(format!(
                "column {j} out of range 0..={}",
                self.last_column()
            )));
        }
        let range = self.column(j);
        let amp = 1.0 / (range.len() as f64).sqrt();
        let mut amplitudes = vec![0.0; self.num_vertices()];
        amplitudes[range].fill(amp);
        Ok(ColumnVector { column: j, amplitudes })
    }

    /// Removes the edge `(u, v)` and reattaches `u` to `w`. Used for fault
    /// injection in the self-check; the result usually violates the column
    /// structure on purpose.
    pub fn rewire(&mut self, u: usize, v: usize, w: usize) {
        self.adjacency[u].retain(|&x| x as usize != v);
        self.adjacency[v].retain(|&x| x as usize != u);
        self.add_edge(u, w);
        self.finish();
    }

    pub fn to_edge_list(&self) -> String {
        let header = EdgeListHeader {
            depth: self.depth,
            variant: self.variant.label().to_string(),
            seed: self.variant.seed(),
            vertices: self.num_vertices(),
        };
        let mut out = format!(
            "# {}\n",
            serde_json::to_string(&header).expect("header serializes")
        );
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").expect("writing to a String");
        }
        out
    }
}

/// Normalized uniform state on one column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnVector {
    pub column: usize,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeListHeader {
    pub depth: usize,
    pub variant: String,
    pub seed: Option<u64>,
    pub vertices: usize,
}

/// Parsed edge-list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub header: EdgeListHeader,
    pub edges: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Parses the text produced by [`Graph::to_edge_list`].
    ///
    /// The first non-empty line must be `# {json header}`; every further
    /// non-empty line is a pair of vertex ids below `vertices`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line_no, first) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty edge list".into(),
        })?;
        let json = first.strip_prefix('#').ok_or(Error::Parse {
            line: line_no,
            message: "missing `#` header line".into(),
        })?;
        let header: EdgeListHeader = serde_json::from_str(json.trim()).map_err(|e| Error::Parse {
            line: line_no,
            message: format!("bad header: {e}"),
        })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let err = |message: &str| Error::Parse {
                line,
                message: message.to_string(),
            };
            let mut parts = l.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `u v`"));
            };
            let u: usize = a.parse().map_err(|_| err("bad vertex id"))?;
            let v: usize = b.parse().map_err(|_| err("bad vertex id"))?;
            if u >= header.vertices || v >= header.vertices {
                return Err(err("vertex id exceeds header vertex count"));
            }
            if u == v {
                return Err(err("self-loop"));
            }
            edges.push((u.min(v), u.max(v)));
        }
        Ok(EdgeList { header, edges })
    }

    /// Whether this edge list describes exactly the edges of `g`.
    pub fn matches(&self, g: &Graph) -> bool {
        let mut mine = self.edges.clone();
        mine.sort_unstable();
        let theirs: Vec<_> = g.edges().collect();
        self.header.vertices == g.num_vertices() && mine == theirs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_sizes() {
        assert_eq!(column_size(0, 4, Layout::Sgt).unwrap(), 1);
        assert_eq!(column_size(4, 4, Layout::Sgt).unwrap(), 16);
        assert_eq!(column_size(5, 4, Layout::Sgt).unwrap(), 8);
        assert_eq!(column_size(5, 4, Layout::Mgt).unwrap(), 16);
        assert_eq!(column_size(9, 4, Layout::Mgt).unwrap(), 1);
        assert!(column_size(9, 4, Layout::Sgt).is_err());
        assert!(column_size(10, 4, Layout::Mgt).is_err());
    }

    #[test]
    fn mgt_leaf_column_matches_construction() {
        let g = Graph::mgt(4, Gluing::Regular).unwrap();
        assert_eq!(g.column_size(5), 16);
        assert_eq!(g.column_size(4), 16);
    }

    #[test]
    fn coordinates() {
        assert_eq!(coord_to_vertex(Coord { j: 0, n: 0 }, 4).unwrap(), 1);
        assert_eq!(coord_to_vertex(Coord { j: 8, n: 0 }, 4).unwrap(), 46);
        assert!(coord_to_vertex(Coord { j: 2, n: 4 }, 4).is_err());
        assert!(coord_to_vertex(Coord { j: 9, n: 0 }, 4).is_err());
        assert!(vertex_to_coord(0, 4).is_err());
        assert!(vertex_to_coord(47, 4).is_err());
    }

    #[test]
    fn coordinates_are_a_bijection_and_match_storage_order() {
        for d in 1..=6 {
            let g = Graph::sgt(d).unwrap();
            let mut seen = vec![false; g.num_vertices() + 1];
            for j in 0..=2 * d {
                for n in 0..column_size(j, d, Layout::Sgt).unwrap() {
                    let c = Coord { j, n };
                    let v = coord_to_vertex(c, d).unwrap();
                    assert!(!seen[v]);
                    seen[v] = true;
                    assert_eq!(vertex_to_coord(v, d).unwrap(), c);
                    assert_eq!(g.column(j).start + n, v - 1);
                }
            }
            assert!(seen[1..].iter().all(|&s| s));
        }
    }

    #[test]
    fn sgt_d1_is_a_four_cycle() {
        let g = Graph::sgt(1).unwrap();
        assert_eq!(g.num_vertices(), 4);
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn sgt_d4_counts() {
        let g = Graph::sgt(4).unwrap();
        assert_eq!(g.num_vertices(), 46);
        assert_eq!(g.num_edges(), 60);
        for v in 0..g.num_vertices() {
            let expected = if v == g.left_root() || v == g.right_root() || g.column_of(v) == 4 {
                2
            } else {
                3
            };
            assert_eq!(g.degree(v), expected, "vertex {v}");
        }
    }

    #[test]
    fn mgt_d1_regular() {
        let g = Graph::mgt(1, Gluing::Regular).unwrap();
        assert_eq!(g.num_vertices(), 6);
        let cross: Vec<_> = g
            .edges()
            .filter(|&(u, v)| g.column_of(u) == 1 && g.column_of(v) == 2)
            .collect();
        // Two left leaves, two right leaves, all four pairs joined: a 4-cycle.
        assert_eq!(cross, vec![(1, 3), (1, 4), (2, 3), (2, 4)]);
    }

    #[test]
    fn mgt_invariants_hold_for_random_gluing() {
        for seed in 0..20 {
            let d = 1 + (seed as usize % 6);
            let g = Graph::mgt(d, Gluing::Random { seed }).unwrap();
            assert_eq!(g.num_vertices(), (1 << (d + 2)) - 2);
            for v in 0..g.num_vertices() {
                let expected = if v == g.left_root() || v == g.right_root() { 2 } else { 3 };
                assert_eq!(g.degree(v), expected);
                for &w in g.neighbors(v) {
                    assert_ne!(w as usize, v);
                    assert_eq!(g.column_of(v).abs_diff(g.column_of(w as usize)), 1);
                }
            }
            for v in g.column(d) {
                let cross = g.neighbors(v).iter().filter(|&&w| g.column_of(w as usize) == d + 1).count();
                assert_eq!(cross, 2);
            }
        }
    }

    #[test]
    fn random_gluing_is_deterministic_and_seed_dependent() {
        let a = Graph::mgt(5, Gluing::Random { seed: 11 }).unwrap();
        let b = Graph::mgt(5, Gluing::Random { seed: 11 }).unwrap();
        let c = Graph::mgt(5, Gluing::Random { seed: 12 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.adjacency, c.adjacency);
    }

    #[test]
    fn column_states() {
        let g = Graph::sgt(2).unwrap();
        let root = g.column_state(0).unwrap();
        assert_eq!(root.amplitudes[0], 1.0);
        assert_eq!(root.amplitudes.iter().filter(|&&a| a != 0.0).count(), 1);
        let middle = g.column_state(2).unwrap();
        for v in g.column(2) {
            assert_eq!(middle.amplitudes[v], 0.5);
        }
        for j in 0..g.num_columns() {
            let s = g.column_state(j).unwrap();
            let norm: f64 = s.amplitudes.iter().map(|a| a * a).sum();
            assert!((norm - 1.0).abs() < 1e-15);
        }
        assert!(g.column_state(5).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::mgt(3, Gluing::Random { seed: 9 }).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("# {\"depth\":3,\"variant\":\"mgt-random\",\"seed\":9,\"vertices\":30}"));
        let parsed = EdgeList::parse(&text).unwrap();
        assert!(parsed.matches(&g));
        assert_eq!(parsed.header.seed, Some(9));
    }

    #[test]
    fn edge_list_rejects_bad_input() {
        assert!(EdgeList::parse("").is_err());
        assert!(EdgeList::parse("0 1\n").is_err());
        let h = "# {\"depth\":1,\"variant\":\"sgt\",\"seed\":null,\"vertices\":4}\n";
        assert!(EdgeList::parse(&format!("{h}0 4\n")).is_err());
        assert!(EdgeList::parse(&format!("{h}2 2\n")).is_err());
        assert!(EdgeList::parse(&format!("{h}0 1 2\n")).is_err());
        assert!(EdgeList::parse(&format!("{h}0 x\n")).is_err());
        assert!(EdgeList::parse(&format!("{h}0 1\n\n1 3\n")).is_ok());
    }
}
