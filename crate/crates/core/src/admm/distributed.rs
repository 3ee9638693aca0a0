//! Decentralized consensus ADMM over an undirected graph: every node keeps
//! `x_i` and `alpha_i` and only talks to its neighbors.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use super::LinearlyConstrainedProblem;
use crate::error::{invalid, Error, Result};
use crate::linalg::{LinearMap, Vector};
use crate::prox::ProxFunction;

/// Simple undirected graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return invalid(format!("edge ({u}, {v}) leaves the node range 0..{n}"));
            }
            if u == v {
                return invalid(format!("self loop at node {u}"));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return invalid(format!("duplicate edge ({u}, {v})"));
            }
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        Ok(Graph { n, edges, neighbors })
    }

    /// One `u v` pair per line, 0-indexed; blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)));
            match parts.as_slice() {
                [u, v] => edges.push((parse(u)?, parse(v)?)),
                _ => return Err(Error::Parse(format!("line {}: expected two node indices", ln + 1))),
            }
        }
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::new(n, edges)
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i)).collect()).expect("path graphs are simple")
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.neighbors[u].contains(&v)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// `min sum_i f_i(x)` with `f_i` held by node `i` of a connected graph.
#[derive(Clone, Debug)]
pub struct DistributedProblem {
    pub graph: Graph,
    pub locals: Vec<ProxFunction>,
    pub dim: usize,
}

impl DistributedProblem {
    pub fn new(graph: Graph, locals: Vec<ProxFunction>, dim: usize) -> Result<Self> {
        if graph.nodes() < 2 {
            return invalid("need at least two nodes");
        }
        if !graph.is_connected() {
            return invalid("graph is disconnected");
        }
        if locals.len() != graph.nodes() {
            return invalid("need one local function per node");
        }
        Ok(DistributedProblem { graph, locals, dim })
    }

    /// `sum_i f_i(x_i)`
    pub fn objective(&self, xs: &[Vector]) -> Result<f64> {
        self.locals.iter().zip(xs).map(|(f, x)| f.eval(x)).sum()
    }
}

/// A value sent from one node to another during a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Message {
    pub round: usize,
    pub from: usize,
    pub to: usize,
}

/// Rounds `k = 0..=iters`, node-major inside each round.
#[derive(Clone, Debug)]
pub struct DistributedTrace {
    pub gamma: f64,
    pub x: Vec<Vec<Vector>>,
    pub alpha: Vec<Vec<Vector>>,
    /// `sum_i f_i(x_i^k)` when every local can be evaluated.
    pub objective: Vec<Option<f64>>,
    /// For `k < iters`: `sum_{(i,j)} ||x_i^{k+1} - m_ij^k||^2 + ||x_j^{k+1} - m_ij^k||^2`
    /// with edge averages `m_ij^k = (x_i^k + x_j^k)/2`; the constraint residual of
    /// the edge formulation.
    pub consensus: Vec<f64>,
    pub messages: Vec<Message>,
}

impl DistributedTrace {
    /// Mean of the final local copies.
    pub fn consensus_value(&self) -> Vector {
        let last = self.x.last().expect("trace has round 0");
        let mut m = Vector::zeros(last[0].dim());
        for x in last {
            m.axpy(1.0 / last.len() as f64, x);
        }
        m
    }
}

/// Sum the neighbor values node `i` receives, logging every transfer.
fn gather(g: &Graph, values: &[Vector], i: usize, round: usize, log: &mut Vec<Message>) -> Vector {
    let mut s = Vector::zeros(values[i].dim());
    for &j in g.neighbors(i) {
        log.push(Message { round, from: j, to: i });
        s.axpy(1.0, &values[j]);
    }
    s
}

/// Synchronous rounds of
/// `x_i+ = argmin f_i(x) + <alpha_i, x> + gamma sum_{j in N_i} ||x - (x_i + x_j)/2||^2`,
/// `alpha_i+ = alpha_i + gamma (|N_i| x_i+ - sum_{j in N_i} x_j+)`, from `x = alpha = 0`.
/// Node updates inside a round only read round-start state.
pub fn run_distributed_admm(p: &DistributedProblem, gamma: f64, iters: usize) -> Result<DistributedTrace> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return invalid("penalty must be positive and finite");
    }
    let g = &p.graph;
    let n = g.nodes();
    let preps = (0..n)
        .map(|i| p.locals[i].prepare(1.0 / (2.0 * gamma * g.degree(i) as f64)))
        .collect::<Result<Vec<_>>>()?;
    let can_eval = p.locals.iter().all(|f| f.can_eval());
    let mut x = vec![Vector::zeros(p.dim); n];
    let mut alpha = vec![Vector::zeros(p.dim); n];
    let mut messages = Vec::new();
    let mut tr = DistributedTrace {
        gamma,
        x: Vec::with_capacity(iters + 1),
        alpha: Vec::with_capacity(iters + 1),
        objective: Vec::with_capacity(iters + 1),
        consensus: Vec::with_capacity(iters),
        messages: Vec::new(),
    };
    let record = |tr: &mut DistributedTrace, x: &[Vector], alpha: &[Vector]| -> Result<()> {
        tr.objective.push(if can_eval { Some(p.objective(x)?) } else { None });
        tr.x.push(x.to_vec());
        tr.alpha.push(alpha.to_vec());
        Ok(())
    };
    record(&mut tr, &x, &alpha)?;
    for k in 0..iters {
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let d = g.degree(i) as f64;
            let nb = gather(g, &x, i, k, &mut messages);
            let mut c = x[i].scale(d);
            c.axpy(1.0, &nb);
            c.axpy(-1.0 / gamma, &alpha[i]);
            next.push(preps[i].apply(&c.scale(1.0 / (2.0 * d)))?);
        }
        let mut disagreement = 0.0;
        for &(i, j) in g.edges() {
            let m = Vector::lincomb(0.5, &x[i], 0.5, &x[j]);
            disagreement += next[i].dist_sq(&m) + next[j].dist_sq(&m);
        }
        for i in 0..n {
            let nb = gather(g, &next, i, k, &mut messages);
            let mut step = next[i].scale(g.degree(i) as f64);
            step.axpy(-1.0, &nb);
            alpha[i].axpy(gamma, &step);
        }
        if next.iter().chain(&alpha).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: k + 1 });
        }
        x = next;
        tr.consensus.push(disagreement);
        record(&mut tr, &x, &alpha)?;
    }
    tr.messages = messages;
    Ok(tr)
}

/// The same problem in ADMM form: `f = sum_i f_i(x_i)`, `g = 0`, and for each
/// edge `e = (i, j)` the constraints `x_i - y_e = 0`, `x_j - y_e = 0`.
/// ADMM with penalty `2 gamma`, `lambda = 1/2` and `z0 = 0` yields at step `k`
/// the iterate the distributed recursion with penalty `gamma` yields at round `k + 1`.
pub fn edge_formulation(p: &DistributedProblem) -> Result<LinearlyConstrainedProblem> {
    let (d, n, edges) = (p.dim, p.graph.nodes(), p.graph.edges());
    let rows = 2 * edges.len() * d;
    let mut a = DMatrix::zeros(rows, n * d);
    let mut b = DMatrix::zeros(rows, edges.len() * d);
    for (e, &(i, j)) in edges.iter().enumerate() {
        for t in 0..d {
            a[((2 * e) * d + t, i * d + t)] = 1.0;
            a[((2 * e + 1) * d + t, j * d + t)] = 1.0;
            b[((2 * e) * d + t, e * d + t)] = -1.0;
            b[((2 * e + 1) * d + t, e * d + t)] = -1.0;
        }
    }
    let f = ProxFunction::block_separable(p.locals.clone(), vec![d; n])?;
    LinearlyConstrainedProblem::new(f, ProxFunction::Zero, LinearMap::from_matrix(a)?, LinearMap::from_matrix(b)?, Vector::zeros(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::run_relaxed_admm;
    use crate::km::RelaxationSchedule;
    use crate::prox::QuadraticForm;

    /// `a/2 (x - c)^2`
    fn centered(a: f64, c: f64) -> ProxFunction {
        ProxFunction::Quadratic(QuadraticForm::new(DMatrix::from_element(1, 1, a), Vector::scalar(-a * c), 0.5 * a * c * c).unwrap())
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::parse_edge_list("0 1\n# comment\n1 2\n\n2 3 # tail\n").unwrap();
        assert_eq!(g.nodes(), 4);
        assert_eq!(g, Graph::path(4));
        assert!(Graph::parse_edge_list("0 1 2\n").is_err());
        assert!(Graph::parse_edge_list("0 0\n").is_err());
        assert!(Graph::parse_edge_list("0 1\n1 0\n").is_err());
        assert!(Graph::parse_edge_list("0 x\n").is_err());
    }

    #[test]
    fn disconnected_graph_rejected() {
        let g = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let locals = vec![ProxFunction::Zero; 4];
        assert!(DistributedProblem::new(g, locals, 1).is_err());
    }

    #[test]
    fn two_nodes_meet_in_the_middle() {
        let p = DistributedProblem::new(Graph::path(2), vec![centered(1.0, 1.0), centered(1.0, -1.0)], 1).unwrap();
        let t = run_distributed_admm(&p, 1.0, 200).unwrap();
        for x in t.x.last().unwrap() {
            assert!(x[0].abs() < 1e-8);
        }
        assert!(t.messages.iter().all(|m| p.graph.has_edge(m.from, m.to)));
    }

    #[test]
    fn identical_locals_reach_common_minimizer() {
        let p = DistributedProblem::new(Graph::path(3), vec![centered(2.0, 0.7); 3], 1).unwrap();
        let t = run_distributed_admm(&p, 0.5, 300).unwrap();
        assert!((t.consensus_value()[0] - 0.7).abs() < 1e-9);
        let (a1, a2) = (&t.alpha[299], &t.alpha[300]);
        assert!(a1.iter().zip(a2).all(|(u, v)| u.dist(v) < 1e-9));
    }

    #[test]
    fn matches_edge_formulation_admm() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        let locals = vec![centered(1.0, 2.0), ProxFunction::l1(0.5).unwrap(), centered(3.0, -1.0), centered(0.5, 0.0)];
        let p = DistributedProblem::new(g, locals, 1).unwrap();
        let gamma = 0.7;
        let t = run_distributed_admm(&p, gamma, 40).unwrap();
        let ep = edge_formulation(&p).unwrap();
        let a = run_relaxed_admm(&ep, 2.0 * gamma, &RelaxationSchedule::Constant(0.5), &Vector::zeros(ep.constraint_dim()), 39).unwrap();
        for (k, r) in a.records.iter().enumerate() {
            let dist = Vector::concat(&t.x[k + 1]);
            assert!(dist.max_abs_diff(&r.x) < 1e-8, "round {}: {:?} vs {:?}", k + 1, dist, r.x);
            assert!((t.consensus[k] - r.residual.norm_sq()).abs() < 1e-8);
        }
    }
}
