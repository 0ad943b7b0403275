//! Directed (rooted) view of a forest-structured distribution, shared by
//! trees and conditional forests for evaluation, sum-product inference and
//! ancestral sampling.

use rand::Rng;

use crate::data::MISSING;
use crate::util::sample_categorical;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Parent {
    Root,
    Node(usize),
    /// Anchored on variable `u` of the conditioning (previous) slice.
    Prev(usize),
}

/// Every node is either a root with distribution `prior[v]`, a child of
/// another node with table `cpt[v][a][b] = P(x_v = b | x_parent = a)`, or
/// anchored on a conditioning variable with the same kind of table.
///
/// `prior[v]` holds the node marginal of every node; an anchored node falls
/// back to it when no conditioning slice is supplied. When the conditioning
/// value is missing the anchored node uses `soft[v]`, its conditional table
/// averaged over the anchor's own marginal.
#[derive(Debug, Clone)]
pub(crate) struct RootedForest {
    b: usize,
    order: Vec<usize>,
    parent: Vec<Parent>,
    children: Vec<Vec<usize>>,
    prior: Vec<f64>,
    soft: Vec<f64>,
    cpt: Vec<f64>,
    log_prior: Vec<f64>,
    log_cpt: Vec<f64>,
}

pub(crate) fn row_normalize(joint: &[f64], b: usize) -> Vec<f64> {
    let mut out = joint.to_vec();
    for row in out.chunks_exact_mut(b) {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        } else {
            row.iter_mut().for_each(|x| *x = 1.0 / b as f64);
        }
    }
    out
}

/// Orients an undirected forest. Each component is rooted at its anchor
/// when it has one, otherwise at its lowest-index node. Returns the
/// breadth-first order and the parent of each node (`None` for roots).
pub(crate) fn orient(
    num_nodes: usize,
    edges: &[(usize, usize)],
    is_anchor: impl Fn(usize) -> bool,
) -> (Vec<usize>, Vec<Option<usize>>) {
    let mut adj = vec![Vec::new(); num_nodes];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj.iter_mut().for_each(|a| a.sort_unstable());
    let mut seen = vec![false; num_nodes];
    let mut placed = vec![false; num_nodes];
    let mut order = Vec::with_capacity(num_nodes);
    let mut parent = vec![None; num_nodes];
    for start in 0..num_nodes {
        if seen[start] {
            continue;
        }
        // collect the component to find its root
        let mut comp = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < comp.len() {
            for &w in &adj[comp[i]] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            i += 1;
        }
        let root = comp.iter().copied().filter(|&v| is_anchor(v)).min().unwrap_or(start);
        let first = order.len();
        order.push(root);
        placed[root] = true;
        let mut k = first;
        while k < order.len() {
            let v = order[k];
            for &w in &adj[v] {
                if !placed[w] {
                    placed[w] = true;
                    parent[w] = Some(v);
                    order.push(w);
                }
            }
            k += 1;
        }
    }
    (order, parent)
}

impl RootedForest {
    pub(crate) fn new(
        b: usize,
        order: Vec<usize>,
        parent: Vec<Parent>,
        prior: Vec<f64>,
        soft: Vec<f64>,
        cpt: Vec<f64>,
    ) -> Self {
        let m = parent.len();
        let mut children = vec![Vec::new(); m];
        for &v in &order {
            if let Parent::Node(p) = parent[v] {
                children[p].push(v);
            }
        }
        let log_prior = prior.iter().map(|p| p.ln()).collect();
        let log_cpt = cpt.iter().map(|p| p.ln()).collect();
        RootedForest {
            b,
            order,
            parent,
            children,
            prior,
            soft,
            cpt,
            log_prior,
            log_cpt,
        }
    }

    pub(crate) fn num_nodes(&self) -> usize {
        self.parent.len()
    }

    #[inline]
    fn cpt_row(&self, v: usize, a: usize) -> &[f64] {
        let b = self.b;
        &self.cpt[(v * b + a) * b..(v * b + a + 1) * b]
    }

    pub(crate) fn prior(&self, v: usize) -> &[f64] {
        &self.prior[v * self.b..(v + 1) * self.b]
    }

    /// Distribution of a root or anchored node given the conditioning slice.
    fn root_distribution(&self, v: usize, prev: Option<&[u8]>) -> Vec<f64> {
        match (self.parent[v], prev) {
            (Parent::Prev(u), Some(prev)) => {
                let y = prev[u];
                if y != MISSING {
                    self.cpt_row(v, y as usize).to_vec()
                } else {
                    self.soft[v * self.b..(v + 1) * self.b].to_vec()
                }
            }
            _ => self.prior(v).to_vec(),
        }
    }

    /// Log-probability of a complete slice.
    pub(crate) fn log_prob_complete(&self, x: &[u8], prev: Option<&[u8]>) -> f64 {
        let b = self.b;
        let mut lp = 0.0;
        for (v, &xv) in x.iter().enumerate() {
            let xv = xv as usize;
            lp += match self.parent[v] {
                Parent::Root => self.log_prior[v * b + xv],
                Parent::Node(p) => self.log_cpt[(v * b + x[p] as usize) * b + xv],
                Parent::Prev(u) => match prev {
                    None => self.log_prior[v * b + xv],
                    Some(prev) if prev[u] != MISSING => self.log_cpt[(v * b + prev[u] as usize) * b + xv],
                    Some(_) => self.soft[v * b + xv].ln(),
                },
            };
        }
        lp
    }

    /// Upward sum-product pass. Returns the log-probability of the evidence,
    /// the evidence-times-children vectors `lambda[v]` and the normalized
    /// messages each child sends to its parent.
    fn upward(&self, evidence: &[u8], prev: Option<&[u8]>) -> (f64, Vec<f64>, Vec<f64>) {
        let b = self.b;
        let m = self.num_nodes();
        let mut lambda = vec![1.0; m * b];
        for (v, &e) in evidence.iter().enumerate() {
            if e != MISSING {
                for x in 0..b {
                    if x != e as usize {
                        lambda[v * b + x] = 0.0;
                    }
                }
            }
        }
        let mut msg = vec![0.0; m * b];
        let mut log_z = 0.0;
        for &v in self.order.iter().rev() {
            match self.parent[v] {
                Parent::Node(p) => {
                    let mut scale = 0.0f64;
                    for a in 0..b {
                        let row = self.cpt_row(v, a);
                        let s: f64 = row.iter().zip(&lambda[v * b..(v + 1) * b]).map(|(c, l)| c * l).sum();
                        msg[v * b + a] = s;
                        scale = scale.max(s);
                    }
                    if scale <= 0.0 {
                        return (f64::NEG_INFINITY, lambda, msg);
                    }
                    log_z += scale.ln();
                    for a in 0..b {
                        msg[v * b + a] /= scale;
                        lambda[p * b + a] *= msg[v * b + a];
                    }
                }
                Parent::Root | Parent::Prev(_) => {
                    let rd = self.root_distribution(v, prev);
                    let z: f64 = rd.iter().zip(&lambda[v * b..(v + 1) * b]).map(|(r, l)| r * l).sum();
                    log_z += z.ln();
                }
            }
        }
        (log_z, lambda, msg)
    }

    /// Log-probability of the observed cells of `evidence` (others marginalized).
    pub(crate) fn log_evidence(&self, evidence: &[u8], prev: Option<&[u8]>) -> f64 {
        if !evidence.contains(&MISSING) {
            return self.log_prob_complete(evidence, prev);
        }
        self.upward(evidence, prev).0
    }

    /// Posterior marginals of every node (row-major `M x B`) and the log
    /// evidence probability.
    pub(crate) fn posterior(&self, evidence: &[u8], prev: Option<&[u8]>) -> (f64, Vec<f64>) {
        let b = self.b;
        let m = self.num_nodes();
        let (log_z, lambda, msg) = self.upward(evidence, prev);
        let mut post = vec![0.0; m * b];
        if log_z == f64::NEG_INFINITY {
            return (log_z, post);
        }
        let mut down = vec![0.0; m * b];
        let ev = |v: usize, a: usize| evidence[v] == MISSING || evidence[v] as usize == a;
        let mut outside = vec![0.0; b];
        for &v in &self.order {
            if !matches!(self.parent[v], Parent::Node(_)) {
                down[v * b..(v + 1) * b].copy_from_slice(&self.root_distribution(v, prev));
            }
            let belief = &mut post[v * b..(v + 1) * b];
            for x in 0..b {
                belief[x] = down[v * b + x] * lambda[v * b + x];
            }
            crate::util::normalize_in_place(belief);
            for &c in &self.children[v] {
                for a in 0..b {
                    let mut o = if ev(v, a) { down[v * b + a] } else { 0.0 };
                    for &c2 in &self.children[v] {
                        if c2 != c {
                            o *= msg[c2 * b + a];
                        }
                    }
                    outside[a] = o;
                }
                let mut total = 0.0;
                for x in 0..b {
                    let s: f64 = (0..b).map(|a| outside[a] * self.cpt_row(c, a)[x]).sum();
                    down[c * b + x] = s;
                    total += s;
                }
                if total > 0.0 {
                    down[c * b..(c + 1) * b].iter_mut().for_each(|d| *d /= total);
                }
            }
        }
        (log_z, post)
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R, prev: Option<&[u8]>) -> Vec<u8> {
        let mut x = vec![0u8; self.num_nodes()];
        for &v in &self.order {
            let value = match self.parent[v] {
                Parent::Node(p) => sample_categorical(self.cpt_row(v, x[p] as usize), rng),
                _ => sample_categorical(&self.root_distribution(v, prev), rng),
            };
            x[v] = value as u8;
        }
        x
    }
}
