//! Linear subspaces of symmetric matrices that define linear concentration
//! models (graphical, RCON, generic, explicit), plus the parameter pattern of
//! a directed structural equation model.
//!
//! All inner products are the trace inner product `<A, B> = tr(A B)`.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Digraph, EdgePartition, Graph, VertexPartition};
use crate::linalg::{self, Mat};
use crate::seed;

/// Threshold on the smallest eigenvalue for PD containment.
pub const PD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelKind {
    Graphical {
        graph: Graph,
    },
    Rcon {
        graph: Graph,
        vertex_parts: VertexPartition,
        edge_parts: EdgePartition,
    },
    Generic {
        m: usize,
        seed: u64,
    },
    Explicit,
}

/// A linear subspace `L` of `n x n` symmetric matrices. The model is
/// `L` intersected with the positive definite cone.
#[derive(Clone, Debug)]
pub struct LinearSubspaceModel {
    n: usize,
    basis: Vec<Mat>,
    kind: ModelKind,
    /// For structured subspaces: the upper-triangle support `(i, j)`, `i <= j`,
    /// of each 0/1 basis element. Supports are disjoint.
    pattern: Option<Vec<Vec<(usize, usize)>>>,
    orthonormal: Vec<Mat>,
    gram_inv: Mat,
}

impl LinearSubspaceModel {
    fn build(
        n: usize,
        basis: Vec<Mat>,
        kind: ModelKind,
        pattern: Option<Vec<Vec<(usize, usize)>>>,
    ) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Domain("subspace basis is empty".into()));
        }
        for (k, b) in basis.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::Domain(format!("basis element {k} is not {n} x {n}")));
            }
            let asym = (b - b.transpose()).norm();
            if asym > 1e-12 * b.norm().max(1.0) {
                return Err(Error::Domain(format!("basis element {k} is not symmetric")));
            }
        }
        let orthonormal = gram_schmidt(&basis).ok_or_else(|| {
            Error::Domain("basis elements are linearly dependent".into())
        })?;
        let m = basis.len();
        let gram = Mat::from_fn(m, m, |a, b| linalg::trace_inner(&basis[a], &basis[b]));
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::Domain("basis Gram matrix is singular".into()))?;
        Ok(LinearSubspaceModel {
            n,
            basis,
            kind,
            pattern,
            orthonormal,
            gram_inv,
        })
    }

    /// Subspace spanned by the given symmetric matrices.
    pub fn explicit(n: usize, basis: Vec<Mat>) -> Result<Self> {
        Self::build(n, basis, ModelKind::Explicit, None)
    }

    /// All of `S^n`.
    pub fn full(n: usize) -> Self {
        graphical_subspace(&Graph::complete(n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// The graph of a graphical model (RCON models report their graph too).
    pub fn graph(&self) -> Option<&Graph> {
        match &self.kind {
            ModelKind::Graphical { graph } | ModelKind::Rcon { graph, .. } => Some(graph),
            _ => None,
        }
    }

    pub fn is_graphical(&self) -> bool {
        matches!(self.kind, ModelKind::Graphical { .. })
    }

    /// `sum_k coords[k] * basis[k]`.
    pub fn from_coords(&self, coords: &[f64]) -> Mat {
        let mut out = Mat::zeros(self.n, self.n);
        for (c, b) in coords.iter().zip(&self.basis) {
            out += b * *c;
        }
        out
    }

    /// Basis coordinates of the projection of `m` onto the subspace.
    pub fn coords_of(&self, m: &Mat) -> Vec<f64> {
        let rhs = nalgebra::DVector::from_iterator(
            self.dim(),
            self.basis.iter().map(|b| linalg::trace_inner(b, m)),
        );
        (&self.gram_inv * rhs).iter().copied().collect()
    }

    /// `(<B_k, m>)_k` for every basis element.
    pub fn pair_with_basis(&self, m: &Mat) -> Vec<f64> {
        self.basis.iter().map(|b| linalg::trace_inner(b, m)).collect()
    }
}

fn gram_schmidt(basis: &[Mat]) -> Option<Vec<Mat>> {
    let mut out: Vec<Mat> = Vec::with_capacity(basis.len());
    for b in basis {
        let scale = b.norm();
        if scale == 0.0 {
            return None;
        }
        let mut v = b / scale;
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for q in &out {
                let c = linalg::trace_inner(q, &v);
                v -= q * c;
            }
        }
        let norm = v.norm();
        if norm < 1e-10 {
            return None;
        }
        out.push(v / norm);
    }
    Some(out)
}

fn unit_diag(n: usize, idx: &[usize]) -> Mat {
    let mut m = Mat::zeros(n, n);
    for &i in idx {
        m[(i, i)] = 1.0;
    }
    m
}

fn unit_offdiag(n: usize, pairs: &[(usize, usize)]) -> Mat {
    let mut m = Mat::zeros(n, n);
    for &(i, j) in pairs {
        m[(i, j)] = 1.0;
        m[(j, i)] = 1.0;
    }
    m
}

/// Matrices supported on the diagonal and the edges of `g`.
pub fn graphical_subspace(g: &Graph) -> LinearSubspaceModel {
    let n = g.n();
    let mut basis = Vec::with_capacity(n + g.num_edges());
    let mut pattern = Vec::with_capacity(n + g.num_edges());
    for i in 0..n {
        basis.push(unit_diag(n, &[i]));
        pattern.push(vec![(i, i)]);
    }
    for &(u, v) in g.edges() {
        basis.push(unit_offdiag(n, &[(u - 1, v - 1)]));
        pattern.push(vec![(u - 1, v - 1)]);
    }
    LinearSubspaceModel::build(
        n,
        basis,
        ModelKind::Graphical { graph: g.clone() },
        Some(pattern),
    )
    .expect("graphical basis is orthogonal")
}

/// RCON subspace: graphical pattern with equal diagonal entries inside each
/// vertex part and equal entries inside each edge part.
pub fn rcon_subspace(
    g: &Graph,
    vertex_parts: &VertexPartition,
    edge_parts: &EdgePartition,
) -> Result<LinearSubspaceModel> {
    let n = g.n();
    // Revalidate against this graph: the partitions may come from elsewhere.
    let vertex_parts = VertexPartition::new(n, vertex_parts.parts().to_vec())?;
    let edge_parts = EdgePartition::new(g, edge_parts.parts().to_vec())?;
    let mut basis = Vec::new();
    let mut pattern = Vec::new();
    for part in vertex_parts.parts() {
        let idx: Vec<usize> = part.iter().map(|v| v - 1).collect();
        basis.push(unit_diag(n, &idx));
        pattern.push(idx.iter().map(|&i| (i, i)).collect());
    }
    for part in edge_parts.parts() {
        let pairs: Vec<(usize, usize)> = part.iter().map(|&(u, v)| (u - 1, v - 1)).collect();
        basis.push(unit_offdiag(n, &pairs));
        pattern.push(pairs);
    }
    LinearSubspaceModel::build(
        n,
        basis,
        ModelKind::Rcon {
            graph: g.clone(),
            vertex_parts,
            edge_parts,
        },
        Some(pattern),
    )
}

/// Span of `m` random positive definite matrices `A^T A + n I`, with `A`
/// having independent standard normal entries.
pub fn generic_subspace(n: usize, m: usize, seed: u64) -> Result<LinearSubspaceModel> {
    let max = n * (n + 1) / 2;
    if n == 0 || m == 0 || m > max {
        return Err(Error::Domain(format!("m = {m} outside 1..={max} for n = {n}")));
    }
    let mut rng = seed::rng(seed);
    let basis: Vec<Mat> = (0..m)
        .map(|_| {
            let a = linalg::standard_normal_matrix(n, n, &mut rng);
            linalg::symmetrize(&(a.transpose() * &a)) + Mat::identity(n, n) * n as f64
        })
        .collect();
    LinearSubspaceModel::build(n, basis, ModelKind::Generic { m, seed }, None)
}

/// Orthogonal projection onto the subspace under the trace inner product.
/// Structured subspaces average entries over each pattern class; others use
/// the orthonormalized basis.
pub fn project_onto(model: &LinearSubspaceModel, m: &Mat) -> Mat {
    let n = model.n;
    match &model.pattern {
        Some(groups) => {
            let mut out = Mat::zeros(n, n);
            for group in groups {
                let mean = group
                    .iter()
                    .map(|&(i, j)| if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) })
                    .sum::<f64>()
                    / group.len() as f64;
                for &(i, j) in group {
                    out[(i, j)] = mean;
                    out[(j, i)] = mean;
                }
            }
            out
        }
        None => {
            let sym = linalg::symmetrize(m);
            let mut out = Mat::zeros(n, n);
            for q in &model.orthonormal {
                out += q * linalg::trace_inner(q, &sym);
            }
            out
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdStatus {
    Contains,
    Marginal,
    Absent,
}

#[derive(Clone, Debug)]
pub struct PdCheck {
    pub status: PdStatus,
    /// Best smallest eigenvalue found over unit-Frobenius members.
    pub margin: f64,
    pub witness: Mat,
}

impl PdCheck {
    pub fn contains(&self) -> bool {
        self.status == PdStatus::Contains
    }
}

const PD_RESTARTS: usize = 200;
const PD_ITERS: usize = 150;

/// Does the subspace meet the positive definite cone?
///
/// Maximizes the concave function `x -> lambda_min(sum_k x_k Q_k)` over the
/// unit ball of orthonormal coordinates by projected supergradient ascent
/// with random restarts. Graphical and RCON subspaces contain the identity;
/// generic subspaces contain their (PD) basis elements.
pub fn contains_pd(model: &LinearSubspaceModel) -> PdCheck {
    let n = model.n;
    let check = |w: Mat| {
        let w = &w / w.norm();
        let margin = linalg::min_eigen(&w);
        (margin, w)
    };
    let shortcut = match model.kind {
        ModelKind::Graphical { .. } | ModelKind::Rcon { .. } => Some(Mat::identity(n, n)),
        ModelKind::Generic { .. } => Some(model.basis[0].clone()),
        ModelKind::Explicit => None,
    };
    let mut best = match shortcut {
        Some(w) => check(w),
        None => {
            let p = project_onto(model, &Mat::identity(n, n));
            if p.norm() > 0.0 {
                check(p)
            } else {
                (f64::NEG_INFINITY, model.orthonormal[0].clone())
            }
        }
    };
    if best.0 <= PD_TOL {
        best = search_pd(model, best);
    }
    let status = if best.0 > PD_TOL {
        PdStatus::Contains
    } else if best.0 >= -PD_TOL {
        PdStatus::Marginal
    } else {
        PdStatus::Absent
    };
    PdCheck {
        status,
        margin: best.0,
        witness: best.1,
    }
}

/// Projected supergradient ascent of `lambda_min` over the unit coefficient
/// ball, restarted from random points; stops at the first PD member.
fn search_pd(model: &LinearSubspaceModel, mut best: (f64, Mat)) -> (f64, Mat) {
    let dim = model.dim();
    let mut rng = seed::rng(0x5eed_0bd5);
    'restarts: for _ in 0..PD_RESTARTS {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        normalize_to_ball(&mut x);
        for it in 0..PD_ITERS {
            let mat = combine(&model.orthonormal, &x);
            let norm = mat.norm();
            if norm > 0.0 {
                let lam = linalg::min_eigen(&mat) / norm;
                if lam > best.0 {
                    best = (lam, &mat / norm);
                    if lam > PD_TOL {
                        break 'restarts;
                    }
                }
            }
            // Supergradient of lambda_min at x: (v^T Q_k v)_k.
            let (_, v) = linalg::min_eigenpair(&mat);
            let vvt = &v * v.transpose();
            let step = 0.5 / (1.0 + it as f64).sqrt();
            for (xk, q) in x.iter_mut().zip(&model.orthonormal) {
                *xk += step * linalg::trace_inner(q, &vvt);
            }
            normalize_to_ball(&mut x);
        }
    }
    best
}

fn normalize_to_ball(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

fn combine(basis: &[Mat], x: &[f64]) -> Mat {
    let n = basis[0].nrows();
    let mut out = Mat::zeros(n, n);
    for (b, c) in basis.iter().zip(x) {
        out += b * *c;
    }
    out
}

/// Directed SEM pattern: `Lambda` supported on the arcs, `D` diagonal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemModel {
    pub digraph: Digraph,
}

impl SemModel {
    pub fn new(digraph: Digraph) -> Self {
        SemModel { digraph }
    }

    /// 0/1 mask of the free entries of `Lambda`: `(i - 1, j - 1)` for each arc `i -> j`.
    pub fn lambda_pattern(&self) -> Mat {
        let n = self.digraph.n();
        let mut m = Mat::zeros(n, n);
        for &(i, j) in self.digraph.arcs() {
            m[(i - 1, j - 1)] = 1.0;
        }
        m
    }
}

// ---------------------------------------------------------------------------
// File formats

/// Parsed RCON specification: the graph is the union of the edge parts and
/// the vertex count is the largest vertex in the vertex parts.
#[derive(Clone, Debug)]
pub struct RconSpec {
    pub graph: Graph,
    pub vertex_parts: VertexPartition,
    pub edge_parts: EdgePartition,
}

impl RconSpec {
    pub fn model(&self) -> Result<LinearSubspaceModel> {
        rcon_subspace(&self.graph, &self.vertex_parts, &self.edge_parts)
    }

    pub fn to_text(&self) -> String {
        let vparts: Vec<String> = self
            .vertex_parts
            .parts()
            .iter()
            .map(|p| {
                let items: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                format!("{{{}}}", items.join(","))
            })
            .collect();
        let eparts: Vec<String> = self
            .edge_parts
            .parts()
            .iter()
            .map(|p| {
                let items: Vec<String> = p.iter().map(|(u, v)| format!("{u}-{v}")).collect();
                format!("{{{}}}", items.join(","))
            })
            .collect();
        let mut out = String::from("rcon\n");
        let _ = writeln!(out, "vparts: {}", vparts.join("|"));
        let _ = writeln!(out, "eparts: {}", eparts.join("|"));
        out
    }
}

fn parse_braced_parts<T>(
    line_no: usize,
    body: &str,
    item: impl Fn(&str) -> Result<T>,
) -> Result<Vec<Vec<T>>> {
    let body = body.trim();
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('|')
        .map(|chunk| {
            let chunk = chunk.trim();
            let inner = chunk
                .strip_prefix('{')
                .and_then(|c| c.strip_suffix('}'))
                .ok_or_else(|| Error::parse(line_no, format!("expected {{...}}, got {chunk:?}")))?;
            inner
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(&item)
                .collect()
        })
        .collect()
}

pub fn parse_rcon(text: &str) -> Result<RconSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "rcon")) => {}
        Some((no, other)) => return Err(Error::parse(no, format!("expected header \"rcon\", got {other:?}"))),
        None => return Err(Error::parse(0, "empty RCON specification")),
    }
    let mut vparts = None;
    let mut eparts = None;
    for (no, line) in lines {
        let label = |t: &str| -> Result<usize> {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| Error::parse(no, format!("bad vertex label {t:?}")))
        };
        if let Some(rest) = line.strip_prefix("vparts:") {
            vparts = Some(parse_braced_parts(no, rest, &label)?);
        } else if let Some(rest) = line.strip_prefix("eparts:") {
            eparts = Some(parse_braced_parts(no, rest, |t| {
                let (a, b) = t
                    .split_once('-')
                    .ok_or_else(|| Error::parse(no, format!("bad edge {t:?}")))?;
                Ok((label(a)?, label(b)?))
            })?);
        } else {
            return Err(Error::parse(no, format!("unexpected line {line:?}")));
        }
    }
    let vparts = vparts.ok_or_else(|| Error::parse(0, "missing \"vparts:\" line"))?;
    let eparts = eparts.unwrap_or_default();
    let n = vparts.iter().flatten().copied().max().unwrap_or(0);
    if n == 0 {
        return Err(Error::parse(0, "vertex partition is empty"));
    }
    let graph = Graph::new(n, eparts.iter().flatten().copied())?;
    let vertex_parts = VertexPartition::new(n, vparts)?;
    let edge_parts = EdgePartition::new(&graph, eparts)?;
    Ok(RconSpec {
        graph,
        vertex_parts,
        edge_parts,
    })
}

/// Reads `m` stacked `n x n` symmetric matrices from CSV (n values per row,
/// `m * n` rows) and returns their span.
pub fn parse_explicit_subspace(text: &str) -> Result<LinearSubspaceModel> {
    let rows = crate::solver::parse_csv_rows(text)?;
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    if n == 0 || rows.len() % n != 0 {
        return Err(Error::parse(
            rows.len(),
            format!("{} rows of width {n} do not stack into square matrices", rows.len()),
        ));
    }
    let basis = rows
        .chunks(n)
        .map(|block| Mat::from_fn(n, n, |i, j| block[i][j]))
        .collect();
    LinearSubspaceModel::explicit(n, basis)
}
