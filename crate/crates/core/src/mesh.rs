//! Structured triangulations of a rectangle with tagged boundary parts.
//!
//! The rectangle `[0, width] x [0, height]` is split into square cells of side
//! `h`, each cut into two right triangles along the same diagonal. Nodes are
//! numbered column by column (`x` outer, `y` inner) which keeps the bandwidth
//! of assembled matrices proportional to the number of rows of nodes.
//!
//! Boundary parts follow the usual contact setting: the left side is clamped
//! (Dirichlet), the bottom side rests on the foundation (contact) and the rest
//! of the boundary carries prescribed tractions (Neumann).

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    Contact,
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
            BoundaryTag::Contact => "contact",
        })
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BoundaryTag::Dirichlet),
            "neumann" => Ok(BoundaryTag::Neumann),
            "contact" => Ok(BoundaryTag::Contact),
            other => Err(Error::parse("boundary tag", format!("unknown tag `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Nominal spatial step.
    pub h: f64,
}

fn cell_count(length: f64, h: f64, axis: &str) -> Result<usize> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::MeshDimensions(format!("{axis} must be positive, got {length}")));
    }
    let ratio = length / h;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n {
        return Err(Error::MeshDimensions(format!(
            "{axis} = {length} is not an integer multiple of h = {h} (ratio {ratio})"
        )));
    }
    Ok(n as usize)
}

/// Structured right-triangle mesh of `[0, width] x [0, height]`.
///
/// Every boundary edge is initially tagged Neumann; see [`tag_boundary`].
pub fn generate_rect_mesh(width: f64, height: f64, h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::MeshDimensions(format!("h must be positive, got {h}")));
    }
    let nx = cell_count(width, h, "width")?;
    let ny = cell_count(height, h, "height")?;
    let id = |i: usize, j: usize| i * (ny + 1) + j;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for i in 0..=nx {
        for j in 0..=ny {
            nodes.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    let mut mesh = Mesh {
        nodes,
        triangles,
        boundary_edges: Vec::new(),
        h,
    };
    mesh.boundary_edges = mesh
        .free_edges()
        .into_iter()
        .map(|nodes| BoundaryEdge {
            nodes,
            tag: BoundaryTag::Neumann,
        })
        .collect();
    Ok(mesh)
}

/// Tags the left side Dirichlet, the bottom side Contact and everything else
/// Neumann.
pub fn tag_boundary(mut mesh: Mesh) -> Mesh {
    let (lo, _) = mesh.bounding_box();
    let tol = 1e-12 * mesh.h.max(1.0);
    let on = |p: [f64; 2], axis: usize| (p[axis] - lo[axis]).abs() <= tol;
    let edges = mesh.free_edges();
    mesh.boundary_edges = edges
        .into_iter()
        .map(|nodes| {
            let (p, q) = (mesh.nodes[nodes[0]], mesh.nodes[nodes[1]]);
            let tag = if on(p, 0) && on(q, 0) {
                BoundaryTag::Dirichlet
            } else if on(p, 1) && on(q, 1) {
                BoundaryTag::Contact
            } else {
                BoundaryTag::Neumann
            };
            BoundaryEdge { nodes, tag }
        })
        .collect();
    mesh
}

/// Convenience: [`generate_rect_mesh`] followed by [`tag_boundary`].
pub fn rect_mesh(width: f64, height: f64, h: f64) -> Result<Mesh> {
    Ok(tag_boundary(generate_rect_mesh(width, height, h)?))
}

/// Lumped (trapezoid) quadrature weights on the contact boundary: each node
/// gets half the length of its adjacent contact edges.
pub fn contact_weights(mesh: &Mesh) -> BTreeMap<usize, f64> {
    let mut weights = BTreeMap::new();
    for edge in mesh.edges_tagged(BoundaryTag::Contact) {
        let len = mesh.edge_length(edge.nodes);
        for &n in &edge.nodes {
            *weights.entry(n).or_insert(0.0) += 0.5 * len;
        }
    }
    weights
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|n| self.nodes[n]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn edge_length(&self, [a, b]: [usize; 2]) -> f64 {
        let (p, q) = (self.nodes[a], self.nodes[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    /// Circumradius over inradius of triangle `t`.
    pub fn shape_ratio(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let la = self.edge_length([b, c]);
        let lb = self.edge_length([c, a]);
        let lc = self.edge_length([a, b]);
        let area = self.signed_area(t).abs();
        let circum = la * lb * lc / (4.0 * area);
        let inr = 2.0 * area / (la + lb + lc);
        circum / inr
    }

    pub fn edges_tagged(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    pub fn boundary_measure(&self, tag: BoundaryTag) -> f64 {
        self.edges_tagged(tag).map(|e| self.edge_length(e.nodes)).sum()
    }

    /// Sorted node indices touched by edges with the given tag.
    pub fn nodes_tagged(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut nodes: Vec<usize> = self.edges_tagged(tag).flat_map(|e| e.nodes).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Edges that belong to exactly one triangle, oriented as in that triangle
    /// and sorted by their smaller endpoint.
    fn free_edges(&self) -> Vec<[usize; 2]> {
        let mut count: HashMap<(usize, usize), ([usize; 2], usize)> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let e = [tri[k], tri[(k + 1) % 3]];
                let key = (e[0].min(e[1]), e[0].max(e[1]));
                count.entry(key).or_insert((e, 0)).1 += 1;
            }
        }
        let mut edges: Vec<((usize, usize), [usize; 2])> = count
            .into_iter()
            .filter(|(_, (_, c))| *c == 1)
            .map(|(k, (e, _))| (k, e))
            .collect();
        edges.sort_unstable_by_key(|(k, _)| *k);
        edges.into_iter().map(|(_, e)| e).collect()
    }

    /// Plain-text mesh file (`mesh 2d v1`).
    pub fn to_text(&self) -> String {
        let mut out = String::from("mesh 2d v1\n");
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(out, "{:e} {:e}", p[0], p[1]);
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(out, "edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let _ = writeln!(out, "{} {} {}", e.nodes[0], e.nodes[1], e.tag);
        }
        out
    }

    /// Parses the text produced by [`Mesh::to_text`]. The step `h` is not part
    /// of the format and is recovered as the shortest boundary edge.
    pub fn from_text(text: &str) -> Result<Mesh> {
        let err = |msg: String| Error::parse("mesh file", msg);
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("mesh 2d v1") {
            return Err(err("missing `mesh 2d v1` header".into()));
        }
        let n_nodes = section_count(lines.next(), "nodes").map_err(err)?;

        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let l = lines.next().ok_or_else(|| err("truncated node list".into()))?;
            let v = parse_floats(l, 2).map_err(err)?;
            nodes.push([v[0], v[1]]);
        }

        let n_tri = section_count(lines.next(), "triangles").map_err(err)?;
        let mut triangles = Vec::with_capacity(n_tri);
        for _ in 0..n_tri {
            let l = lines.next().ok_or_else(|| err("truncated triangle list".into()))?;
            let v = parse_indices(l, 3, n_nodes).map_err(err)?;
            triangles.push([v[0], v[1], v[2]]);
        }

        let n_edges = section_count(lines.next(), "edges").map_err(err)?;
        let mut boundary_edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let l = lines.next().ok_or_else(|| err("truncated edge list".into()))?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(err(format!("edge line `{l}` needs `i j tag`")));
            }
            let v = parse_indices(&parts[..2].join(" "), 2, n_nodes).map_err(err)?;
            boundary_edges.push(BoundaryEdge {
                nodes: [v[0], v[1]],
                tag: parts[2].parse()?,
            });
        }

        let mut mesh = Mesh {
            nodes,
            triangles,
            boundary_edges,
            h: 0.0,
        };
        mesh.h = mesh
            .boundary_edges
            .iter()
            .map(|e| mesh.edge_length(e.nodes))
            .fold(f64::INFINITY, f64::min);
        Ok(mesh)
    }
}

fn section_count(line: Option<&str>, name: &str) -> std::result::Result<usize, String> {
    let line = line.ok_or_else(|| format!("missing `{name}` section"))?;
    let mut it = line.split_whitespace();
    if it.next() != Some(name) {
        return Err(format!("expected `{name} N`, found `{line}`"));
    }
    it.next()
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| format!("bad count in `{line}`"))
}

fn parse_floats(line: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = line
        .split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} numbers in `{line}`"));
    }
    Ok(v)
}

fn parse_indices(line: &str, n: usize, bound: usize) -> std::result::Result<Vec<usize>, String> {
    let v: Vec<usize> = line
        .split_whitespace()
        .map(|s| s.parse::<usize>().map_err(|e| format!("`{s}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} indices in `{line}`"));
    }
    if let Some(bad) = v.iter().find(|&&i| i >= bound) {
        return Err(format!("index {bad} out of range (< {bound})"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_closed_form() {
        for (w, ht, h, nodes, tris) in [
            (1.0, 1.0, 1.0, 4, 2),
            (1.0, 1.0, 0.5, 9, 8),
            (2.0, 1.0, 0.5, 15, 16),
        ] {
            let m = generate_rect_mesh(w, ht, h).unwrap();
            assert_eq!(m.num_nodes(), nodes);
            assert_eq!(m.num_triangles(), tris);
            assert_eq!(m.h, h);
        }
    }

    #[test]
    fn non_divisible_axis_is_named() {
        let err = generate_rect_mesh(1.0, 0.7, 0.25).unwrap_err().to_string();
        assert!(err.contains("height"), "{err}");
        let err = generate_rect_mesh(1.1, 1.0, 0.25).unwrap_err().to_string();
        assert!(err.contains("width"), "{err}");
        assert!(generate_rect_mesh(1.0, 1.0, 0.0).is_err());
    }

    fn tag_counts(m: &Mesh) -> (usize, usize, usize) {
        let c = |t| m.edges_tagged(t).count();
        (
            c(BoundaryTag::Dirichlet),
            c(BoundaryTag::Contact),
            c(BoundaryTag::Neumann),
        )
    }

    #[test]
    fn tagging_unit_square() {
        let m = rect_mesh(1.0, 1.0, 0.5).unwrap();
        assert_eq!(tag_counts(&m), (2, 2, 4));
    }

    #[test]
    fn tagging_wide_rectangle() {
        let m = rect_mesh(2.0, 1.0, 1.0).unwrap();
        assert_eq!(tag_counts(&m), (1, 2, 3));
        assert_eq!(m.boundary_measure(BoundaryTag::Dirichlet), 1.0);
        assert_eq!(m.boundary_measure(BoundaryTag::Contact), 2.0);
    }

    #[test]
    fn contact_weights_are_lumped() {
        let h = 0.25;
        let m = rect_mesh(2.0, 1.0, h).unwrap();
        let w = contact_weights(&m);
        assert_eq!(w.len(), 9);
        assert!((w[&0] - h / 2.0).abs() < 1e-15);
        // second bottom node is interior to the contact zone
        assert!((w[&m.nodes_tagged(BoundaryTag::Contact)[1]] - h).abs() < 1e-15);
        let total: f64 = w.values().sum();
        assert!((total - 2.0).abs() < 1e-12 * 2.0);
    }

    #[test]
    fn shape_ratio_is_uniform() {
        let m = rect_mesh(2.0, 1.0, 0.125).unwrap();
        let r0 = m.shape_ratio(0);
        let expected = std::f64::consts::SQRT_2 / (2.0 - std::f64::consts::SQRT_2);
        assert!((r0 - expected).abs() < 1e-12);
        for t in 0..m.num_triangles() {
            assert!((m.shape_ratio(t) - r0).abs() < 1e-9);
            assert!(m.signed_area(t) > 0.0);
        }
    }

    #[test]
    fn text_round_trip() {
        let m = rect_mesh(2.0, 1.0, 0.5).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("mesh 2d v1\nnodes 15\n"));
        let back = Mesh::from_text(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_mesh_text_is_rejected() {
        assert!(Mesh::from_text("mesh 3d v1\n").is_err());
        assert!(Mesh::from_text("mesh 2d v1\nnodes 2\n0 0\n").is_err());
        let bad_tag = "mesh 2d v1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nedges 1\n0 1 glued\n";
        assert!(Mesh::from_text(bad_tag).is_err());
        let bad_idx = "mesh 2d v1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 7\nedges 0\n";
        assert!(Mesh::from_text(bad_idx).is_err());
    }
}
