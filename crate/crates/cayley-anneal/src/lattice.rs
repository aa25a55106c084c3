//! Cayley-tree graphs and their 2D/3D atom coordinates.
//!
//! Trees are built shell by shell with deterministic vertex ordering:
//! breadth-first, parents in index order, the +60° child before the −60°
//! child. The planar rule places first-shell vertices at azimuths 90°, 210°,
//! 330° and every deeper child bond at ±60° from the extension of its parent
//! bond, which makes sibling separations exactly √3·d. The `Rotated3D`
//! layout additionally rotates every last-shell sibling pair by 2π/5 about
//! its parent-bond axis, lifting the outer shell to z = ±(√3/2)·sin(72°)·d
//! ≈ 0.8236·d while preserving all edge lengths and the sibling √3·d
//! separation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Coordination number of all tree graphs in this crate.
pub const COORDINATION: usize = 3;

/// Out-of-plane rotation angle for last-shell branches (2π/5).
pub const BRANCH_ROTATION: f64 = 2.0 * std::f64::consts::PI / 5.0;

/// Tree family tag: a single-center regular tree or the dual-center tree.
///
/// `s` counts shells including the center shell, so `Regular { z: 3, s: 3 }`
/// is the 10-vertex tree and `DualCenter { z: 3, s: 3 }` the 14-vertex one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeKind {
    Regular { z: usize, s: usize },
    DualCenter { z: usize, s: usize },
}

/// Coordinate layout rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// All atoms in the z = 0 plane.
    Planar,
    /// Planar construction with every last-shell sibling pair rotated by
    /// 2π/5 about its parent-bond axis.
    Rotated3D,
}

/// A Cayley-tree graph: shells, parents and the edge set.
#[derive(Clone, Debug)]
pub struct TreeGraph {
    kind: TreeKind,
    shell_of: Vec<usize>,
    parent_of: Vec<Option<usize>>,
    edges: Vec<(usize, usize)>,
}

impl TreeGraph {
    /// Assembles a graph from raw parts, checking the tree property.
    pub fn from_parts(
        kind: TreeKind,
        shell_of: Vec<usize>,
        parent_of: Vec<Option<usize>>,
        mut edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = shell_of.len();
        if parent_of.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: parent_of.len() });
        }
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            if e.0 == e.1 || e.1 >= n {
                return Err(Error::InvalidParameter(format!("bad edge ({}, {})", e.0, e.1)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let g = TreeGraph { kind, shell_of, parent_of, edges };
        if g.n_edges() + 1 != n || !g.is_connected() {
            return Err(Error::InvalidParameter(
                "edge set does not form a spanning tree".into(),
            ));
        }
        Ok(g)
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn n_vertices(&self) -> usize {
        self.shell_of.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Unordered edge pairs, sorted, with `i < j` in each pair.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn shell_of(&self, v: usize) -> usize {
        self.shell_of[v]
    }

    pub fn shells(&self) -> &[usize] {
        &self.shell_of
    }

    pub fn parent_of(&self, v: usize) -> Option<usize> {
        self.parent_of[v]
    }

    /// Largest shell index (the valence shell).
    pub fn outer_shell(&self) -> usize {
        self.shell_of.iter().copied().max().unwrap_or(0)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(i, j)| i == v || j == v).count()
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        let e = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&e).is_ok()
    }

    /// Vertices on the outermost shell (the valence/leaf vertices).
    pub fn valence_vertices(&self) -> Vec<usize> {
        let outer = self.outer_shell();
        (0..self.n_vertices()).filter(|&v| self.shell_of[v] == outer).collect()
    }

    /// Number of vertices per shell, indexed by shell.
    pub fn shell_populations(&self) -> Vec<usize> {
        let mut pops = vec![0usize; self.outer_shell() + 1];
        for &s in &self.shell_of {
            pops[s] += 1;
        }
        pops
    }

    /// Signature string such as `(0s)(1s)^3(2s)^6`.
    pub fn signature(&self) -> String {
        let mut out = String::new();
        for (s, &count) in self.shell_populations().iter().enumerate() {
            if count == 1 {
                let _ = write!(out, "({s}s)");
            } else {
                let _ = write!(out, "({s}s)^{count}");
            }
        }
        out
    }

    /// The automorphism exchanging the two center-rooted halves of a
    /// dual-center tree, as a vertex permutation. `None` for regular trees.
    pub fn half_swap_permutation(&self) -> Option<Vec<usize>> {
        let TreeKind::DualCenter { .. } = self.kind else {
            return None;
        };
        let n = self.n_vertices();
        let roots: Vec<usize> =
            (0..n).filter(|&v| self.shell_of[v] == 0).collect();
        let [ra, rb] = roots[..] else { return None };
        let mut perm = vec![usize::MAX; n];
        perm[ra] = rb;
        perm[rb] = ra;
        // Pair the halves level by level; children listed in index order on
        // both sides, which matches the mirror construction.
        let mut frontier = vec![(ra, rb)];
        while let Some((a, b)) = frontier.pop() {
            let ca = self.children_of(a);
            let cb = self.children_of(b);
            debug_assert_eq!(ca.len(), cb.len());
            for (&x, &y) in ca.iter().zip(cb.iter()) {
                perm[x] = y;
                perm[y] = x;
                frontier.push((x, y));
            }
        }
        Some(perm)
    }

    /// Children of `v` in index order.
    pub fn children_of(&self, v: usize) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&c| self.parent_of[c] == Some(v)).collect()
    }

    fn is_connected(&self) -> bool {
        let n = self.n_vertices();
        if n == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }
}

/// Atom coordinates in µm together with the nominal edge length.
#[derive(Clone, Debug)]
pub struct Geometry {
    positions: Vec<[f64; 3]>,
    d: f64,
}

impl Geometry {
    pub fn new(positions: Vec<[f64; 3]>, d: f64) -> Self {
        Geometry { positions, d }
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> [f64; 3] {
        self.positions[v]
    }

    /// Nominal edge length in µm.
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let a = self.positions[i];
        let b = self.positions[j];
        let dx = a[0] - b[0];
        let dy = a[1] - b[1];
        let dz = a[2] - b[2];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Distance-constraint summary produced by [`validate_geometry`].
#[derive(Clone, Copy, Debug)]
pub struct ValidationReport {
    /// Largest relative deviation of an edge length from d.
    pub edge_dev_max: f64,
    /// (Minimum non-edge distance) / d; +∞ when there are no non-edge pairs.
    pub min_nonedge_ratio: f64,
    /// (d / minimum non-edge distance)^6, the worst parasitic coupling
    /// relative to the edge coupling; 0 when there are no non-edge pairs.
    pub max_nonedge_coupling_ratio: f64,
}

/// Checks edge lengths and the √3·d non-edge rule; report-only.
pub fn validate_geometry(g: &TreeGraph, geo: &Geometry) -> ValidationReport {
    let n = g.n_vertices();
    let d = geo.d();
    let mut edge_dev_max: f64 = 0.0;
    let mut min_nonedge = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = geo.distance(i, j);
            if g.is_edge(i, j) {
                edge_dev_max = edge_dev_max.max((r - d).abs() / d);
            } else {
                min_nonedge = min_nonedge.min(r);
            }
        }
    }
    let (min_nonedge_ratio, max_nonedge_coupling_ratio) = if min_nonedge.is_finite() {
        ((min_nonedge / d), (d / min_nonedge).powi(6))
    } else {
        (f64::INFINITY, 0.0)
    };
    ValidationReport { edge_dev_max, min_nonedge_ratio, max_nonedge_coupling_ratio }
}

fn rotate_about(axis: [f64; 3], angle: f64, v: [f64; 3]) -> [f64; 3] {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let u = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
    let (s, c) = angle.sin_cos();
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    [
        v[0] * c + cross[0] * s + u[0] * dot * (1.0 - c),
        v[1] * c + cross[1] * s + u[1] * dot * (1.0 - c),
        v[2] * c + cross[2] * s + u[2] * dot * (1.0 - c),
    ]
}

struct Builder {
    positions: Vec<[f64; 3]>,
    shell_of: Vec<usize>,
    parent_of: Vec<Option<usize>>,
    edges: Vec<(usize, usize)>,
    azimuth: Vec<f64>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            positions: Vec::new(),
            shell_of: Vec::new(),
            parent_of: Vec::new(),
            edges: Vec::new(),
            azimuth: Vec::new(),
        }
    }

    fn push_root(&mut self, pos: [f64; 3], azimuth: f64) -> usize {
        let v = self.positions.len();
        self.positions.push(pos);
        self.shell_of.push(0);
        self.parent_of.push(None);
        self.azimuth.push(azimuth);
        v
    }

    /// Adds a child of `p` whose bond points along the planar azimuth `az`.
    fn push_child(&mut self, p: usize, d: f64, az: f64) -> usize {
        let v = self.positions.len();
        let base = self.positions[p];
        self.positions.push([base[0] + d * az.cos(), base[1] + d * az.sin(), base[2]]);
        self.shell_of.push(self.shell_of[p] + 1);
        self.parent_of.push(Some(p));
        self.azimuth.push(az);
        self.edges.push((p, v));
        v
    }

    /// Rotates every vertex on `shell` by 2π/5 about its parent-bond axis.
    /// Siblings share the axis, so their √3·d separation is preserved.
    fn rotate_shell(&mut self, shell: usize, anchor_of: impl Fn(usize) -> [f64; 3]) {
        for v in 0..self.positions.len() {
            if self.shell_of[v] != shell {
                continue;
            }
            let p = self.parent_of[v].expect("rotated shell has parents");
            let pp = self.positions[p];
            let anchor = anchor_of(p);
            let axis = [pp[0] - anchor[0], pp[1] - anchor[1], pp[2] - anchor[2]];
            let off = [
                self.positions[v][0] - pp[0],
                self.positions[v][1] - pp[1],
                self.positions[v][2] - pp[2],
            ];
            let off = rotate_about(axis, BRANCH_ROTATION, off);
            self.positions[v] = [pp[0] + off[0], pp[1] + off[1], pp[2] + off[2]];
        }
    }

    fn finish(self, kind: TreeKind, d: f64) -> Result<(TreeGraph, Geometry)> {
        let g = TreeGraph::from_parts(kind, self.shell_of, self.parent_of, self.edges)?;
        Ok((g, Geometry::new(self.positions, d)))
    }
}

/// Builds a regular coordination-3 Cayley tree with `s` shells (center
/// included) and edge length `d` µm.
///
/// `Planar` keeps all atoms at z = 0 and is valid for s ∈ {2, 3}; four
/// shells cannot satisfy the √3·d non-edge rule in the plane (outer cousins
/// collide), so s = 4 requires `Rotated3D`.
pub fn build_regular_tree(
    z: usize,
    s: usize,
    d: f64,
    layout: Layout,
) -> Result<(TreeGraph, Geometry)> {
    if z != COORDINATION {
        return Err(Error::Unsupported(format!("branching z = {z}; only z = 3 trees")));
    }
    if !(2..=4).contains(&s) {
        return Err(Error::Unsupported(format!("shell count s = {s}; supported s ∈ {{2, 3, 4}}")));
    }
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::InvalidParameter(format!("edge length d = {d} µm")));
    }
    if layout == Layout::Planar && s == 4 {
        return Err(Error::PlanarInfeasible(
            "a four-shell tree violates the √3·d non-edge rule in the plane".into(),
        ));
    }
    if layout == Layout::Rotated3D && s == 2 {
        return Err(Error::Unsupported(
            "Rotated3D needs a parent bond for the rotation axis; s = 2 has none".into(),
        ));
    }

    let mut b = Builder::new();
    b.push_root([0.0, 0.0, 0.0], 0.0);
    let mut frontier = vec![0usize];
    for shell in 1..s {
        let mut next = Vec::new();
        for &p in &frontier {
            let azimuths: Vec<f64> = if shell == 1 {
                [90.0f64, 210.0, 330.0].iter().map(|a| a.to_radians()).collect()
            } else {
                let base = b.azimuth[p];
                vec![base + 60f64.to_radians(), base - 60f64.to_radians()]
            };
            for az in azimuths {
                next.push(b.push_child(p, d, az));
            }
        }
        frontier = next;
    }
    if layout == Layout::Rotated3D {
        let positions = b.positions.clone();
        let parent_of = b.parent_of.clone();
        b.rotate_shell(s - 1, |p| positions[parent_of[p].expect("inner parent")]);
    }
    b.finish(TreeKind::Regular { z, s }, d)
}

/// Builds the 14-vertex dual-center tree with edge length `d` µm.
///
/// Two centers sit on the x-axis a bond apart; each roots a two-shell half
/// built by the planar rule (treating the center–center bond as the parent
/// bond). All four last-shell sibling pairs are rotated by 2π/5 — in the
/// plane each half's inner cousins sit only 1·d from the other half's — and
/// the second half is the exact mirror x → d − x of the first, so the
/// half-swap symmetry holds to the last bit.
pub fn build_dual_center_tree(d: f64) -> Result<(TreeGraph, Geometry)> {
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::InvalidParameter(format!("edge length d = {d} µm")));
    }

    // Half A, rooted at the origin with its parent bond toward (d, 0, 0).
    let mut b = Builder::new();
    b.push_root([0.0, 0.0, 0.0], 180f64.to_radians());
    let mut shell1 = Vec::new();
    for az_deg in [120.0, 240.0] {
        shell1.push(b.push_child(0, d, (az_deg as f64).to_radians()));
    }
    for &p in &shell1 {
        let base = b.azimuth[p];
        b.push_child(p, d, base + 60f64.to_radians());
        b.push_child(p, d, base - 60f64.to_radians());
    }
    {
        let positions = b.positions.clone();
        let parent_of = b.parent_of.clone();
        b.rotate_shell(2, move |p| positions[parent_of[p].expect("shell-1 parent")]);
    }

    // Assemble the full tree: half A keeps its indices under the mapping
    // 0→0, 1→2, 2→3, 3→6, 4→7, 5→8, 6→9; half B mirrors A via x → d − x.
    let a_index = [0usize, 2, 3, 6, 7, 8, 9];
    let swap = [1usize, 0, 4, 5, 2, 3, 10, 11, 12, 13, 6, 7, 8, 9];
    let n = 14;
    let mut positions = vec![[0.0; 3]; n];
    let mut shell_of = vec![0usize; n];
    let mut parent_of = vec![None; n];
    for (ha, &v) in a_index.iter().enumerate() {
        positions[v] = b.positions[ha];
        shell_of[v] = b.shell_of[ha];
        parent_of[v] = b.parent_of[ha].map(|p| a_index[p]);
        let m = swap[v];
        let [x, y, z] = positions[v];
        positions[m] = [d - x, y, z];
        shell_of[m] = shell_of[v];
        parent_of[m] = parent_of[v].map(|p| swap[p]);
    }
    let mut edges = vec![(0usize, 1usize)];
    for v in 0..n {
        if let Some(p) = parent_of[v] {
            edges.push((p.min(v), p.max(v)));
        }
    }
    let g = TreeGraph::from_parts(TreeKind::DualCenter { z: 3, s: 3 }, shell_of, parent_of, edges)?;
    Ok((g, Geometry::new(positions, d)))
}

/// Writes a geometry file: `index shell x y z` lines (µm, 9 significant
/// digits) followed by `edge i j` lines.
pub fn write_geometry(path: &Path, g: &TreeGraph, geo: &Geometry) -> Result<()> {
    let mut out = String::new();
    for v in 0..g.n_vertices() {
        let [x, y, z] = geo.position(v);
        let _ = writeln!(out, "{v} {} {x:.8e} {y:.8e} {z:.8e}", g.shell_of(v));
    }
    for &(i, j) in g.edges() {
        let _ = writeln!(out, "edge {i} {j}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a geometry file written by [`write_geometry`].
///
/// The tree kind is inferred from the number of shell-0 vertices and the
/// edge length from the mean edge distance.
pub fn read_geometry(path: &Path) -> Result<(TreeGraph, Geometry)> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: BTreeMap<usize, (usize, [f64; 3])> = BTreeMap::new();
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| {
            Error::Parse(format!("geometry line {}: {what}: {line}", lineno + 1))
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "edge" {
            if fields.len() != 3 {
                return Err(bad("expected `edge i j`"));
            }
            let i: usize = fields[1].parse().map_err(|_| bad("bad vertex index"))?;
            let j: usize = fields[2].parse().map_err(|_| bad("bad vertex index"))?;
            edges.push((i, j));
        } else {
            if fields.len() != 5 {
                return Err(bad("expected `index shell x y z`"));
            }
            let v: usize = fields[0].parse().map_err(|_| bad("bad vertex index"))?;
            let s: usize = fields[1].parse().map_err(|_| bad("bad shell index"))?;
            let mut xyz = [0.0f64; 3];
            for (k, f) in fields[2..5].iter().enumerate() {
                xyz[k] = f.parse().map_err(|_| bad("bad coordinate"))?;
            }
            if rows.insert(v, (s, xyz)).is_some() {
                return Err(bad("duplicate vertex index"));
            }
        }
    }
    let n = rows.len();
    if n < 2 {
        return Err(Error::Parse("geometry file needs at least two vertices".into()));
    }
    if rows.keys().copied().ne(0..n) {
        return Err(Error::Parse("vertex indices must be 0..n without gaps".into()));
    }
    let shell_of: Vec<usize> = rows.values().map(|&(s, _)| s).collect();
    let positions: Vec<[f64; 3]> = rows.values().map(|&(_, p)| p).collect();

    // Parents: the unique neighbour one shell in; kind from the root count.
    let mut parent_of = vec![None; n];
    for &(i, j) in &edges {
        if i >= n || j >= n {
            return Err(Error::Parse(format!("edge ({i}, {j}) out of range")));
        }
        if shell_of[i] + 1 == shell_of[j] {
            parent_of[j] = Some(i);
        } else if shell_of[j] + 1 == shell_of[i] {
            parent_of[i] = Some(j);
        }
    }
    let n_roots = shell_of.iter().filter(|&&s| s == 0).count();
    let s = shell_of.iter().copied().max().unwrap_or(0) + 1;
    let kind = if n_roots == 2 {
        TreeKind::DualCenter { z: 3, s }
    } else {
        TreeKind::Regular { z: 3, s }
    };
    let g = TreeGraph::from_parts(kind, shell_of, parent_of, edges)?;
    let d = g
        .edges()
        .iter()
        .map(|&(i, j)| {
            let a = positions[i];
            let b = positions[j];
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        })
        .sum::<f64>()
        / g.n_edges() as f64;
    Ok((g, Geometry::new(positions, d)))
}
