//! Stratification as difference constraints over integer levels.
//!
//! Every variable and every compound term gets a level node. Membership
//! `a in b` forces `level(b) = level(a) + 1`, equality forces equal levels, a
//! set literal or comprehension sits one level above its elements (or bound
//! variable), and relation/function arguments share a level. Bound variables
//! are renamed apart first, so `x` bound twice gives `x` and `x#1`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::ast::{Formula, Term};

/// Level of each variable, shifted so each connected group starts at 0.
pub type LevelAssignment = BTreeMap<String, i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stratification {
    Stratified(LevelAssignment),
    /// Constraint cycle whose level offsets do not sum to zero. The first
    /// node is repeated at the end.
    NotStratified { cycle: Vec<String> },
}

impl Stratification {
    pub fn is_stratified(&self) -> bool {
        matches!(self, Stratification::Stratified(_))
    }
}

struct Builder {
    labels: Vec<String>,
    var_node: Vec<bool>,
    // (neighbour, offset): level(neighbour) = level(self) + offset
    adj: Vec<Vec<(usize, i64)>>,
    free: BTreeMap<String, usize>,
    scopes: Vec<(String, usize)>,
    used: BTreeSet<String>,
}

impl Builder {
    fn new(free: BTreeSet<String>) -> Self {
        let mut b = Self {
            labels: Vec::new(),
            var_node: Vec::new(),
            adj: Vec::new(),
            free: BTreeMap::new(),
            scopes: Vec::new(),
            used: free.clone(),
        };
        for v in free {
            let n = b.node(v.clone(), true);
            b.free.insert(v, n);
        }
        b
    }

    fn node(&mut self, label: String, is_var: bool) -> usize {
        self.labels.push(label);
        self.var_node.push(is_var);
        self.adj.push(Vec::new());
        self.labels.len() - 1
    }

    /// `level(b) = level(a) + w`
    fn constrain(&mut self, a: usize, b: usize, w: i64) {
        self.adj[a].push((b, w));
        self.adj[b].push((a, -w));
    }

    fn lookup(&mut self, name: &str) -> usize {
        if let Some(&(_, n)) = self.scopes.iter().rev().find(|(v, _)| v == name) {
            return n;
        }
        if let Some(&n) = self.free.get(name) {
            return n;
        }
        // only reachable for terms built outside a formula walk
        let n = self.node(name.to_string(), true);
        self.free.insert(name.to_string(), n);
        self.used.insert(name.to_string());
        n
    }

    fn bind(&mut self, name: &str) -> usize {
        let label = if self.used.contains(name) {
            (1..)
                .map(|k| format!("{name}#{k}"))
                .find(|c| !self.used.contains(c))
                .expect("unbounded")
        } else {
            name.to_string()
        };
        self.used.insert(label.clone());
        let n = self.node(label, true);
        self.scopes.push((name.to_string(), n));
        n
    }

    fn unbind(&mut self) {
        self.scopes.pop();
    }

    fn term(&mut self, t: &Term) -> usize {
        match t {
            Term::Var(v) => self.lookup(v),
            Term::Num(n) => self.node(n.clone(), false),
            Term::SetLit(items) => {
                let s = self.node(t.to_string(), false);
                for item in items {
                    let i = self.term(item);
                    self.constrain(i, s, 1);
                }
                s
            }
            Term::Comprehension { var, body } => {
                let c = self.node(t.to_string(), false);
                let x = self.bind(var);
                self.formula(body);
                self.unbind();
                self.constrain(x, c, 1);
                c
            }
            Term::App { args, .. } => {
                let a = self.node(t.to_string(), false);
                for arg in args {
                    let i = self.term(arg);
                    self.constrain(i, a, 0);
                }
                a
            }
        }
    }

    fn formula(&mut self, f: &Formula) {
        match f {
            Formula::Member(a, b) => {
                let (a, b) = (self.term(a), self.term(b));
                self.constrain(a, b, 1);
            }
            Formula::Eq(a, b) => {
                let (a, b) = (self.term(a), self.term(b));
                self.constrain(a, b, 0);
            }
            Formula::St(t) => {
                self.term(t);
            }
            Formula::Rel { args, .. } => {
                let nodes: Vec<usize> = args.iter().map(|t| self.term(t)).collect();
                for w in nodes.windows(2) {
                    self.constrain(w[0], w[1], 0);
                }
            }
            Formula::Not(x) => self.formula(x),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                self.formula(a);
                self.formula(b);
            }
            Formula::Quant {
                var, range, body, ..
            } => {
                let r = range.as_ref().map(|r| self.term(r));
                let x = self.bind(var);
                if let Some(r) = r {
                    self.constrain(x, r, 1);
                }
                self.formula(body);
                self.unbind();
            }
        }
    }

    fn solve(&self) -> Stratification {
        let n = self.labels.len();
        let mut level: Vec<Option<i64>> = vec![None; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut out = LevelAssignment::new();
        for root in 0..n {
            if level[root].is_some() {
                continue;
            }
            level[root] = Some(0);
            let mut component = vec![root];
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                let lu = level[u].expect("queued nodes have levels");
                for &(v, w) in &self.adj[u] {
                    match level[v] {
                        None => {
                            level[v] = Some(lu + w);
                            parent[v] = Some(u);
                            depth[v] = depth[u] + 1;
                            component.push(v);
                            queue.push_back(v);
                        }
                        Some(lv) if lv != lu + w => {
                            return Stratification::NotStratified {
                                cycle: self.witness(u, v, &parent, &depth),
                            };
                        }
                        Some(_) => {}
                    }
                }
            }
            let base = component
                .iter()
                .filter(|&&i| self.var_node[i])
                .filter_map(|&i| level[i])
                .min()
                .unwrap_or(0);
            for &i in &component {
                if self.var_node[i] {
                    out.insert(self.labels[i].clone(), level[i].expect("solved") - base);
                }
            }
        }
        Stratification::Stratified(out)
    }

    /// Tree path from `v` up to the common ancestor, then down to `u`, closed
    /// by the offending edge `u -> v`.
    fn witness(&self, u: usize, v: usize, parent: &[Option<usize>], depth: &[usize]) -> Vec<String> {
        let (mut a, mut b) = (u, v);
        let mut up_u = vec![u];
        let mut up_v = vec![v];
        while depth[a] > depth[b] {
            a = parent[a].expect("deeper node has a parent");
            up_u.push(a);
        }
        while depth[b] > depth[a] {
            b = parent[b].expect("deeper node has a parent");
            up_v.push(b);
        }
        while a != b {
            a = parent[a].expect("distinct nodes below the root");
            b = parent[b].expect("distinct nodes below the root");
            up_u.push(a);
            up_v.push(b);
        }
        // up_v: v .. lca, up_u: u .. lca
        let mut cycle: Vec<usize> = up_v;
        up_u.pop();
        cycle.extend(up_u.into_iter().rev());
        cycle.push(v);
        cycle.into_iter().map(|i| self.labels[i].clone()).collect()
    }
}

pub fn stratify_formula(f: &Formula) -> Stratification {
    let mut b = Builder::new(f.free_vars());
    b.formula(f);
    b.solve()
}

/// Stratification of a term's own constraints (the term may be a
/// comprehension).
pub fn stratify_term(t: &Term) -> Stratification {
    let mut b = Builder::new(t.free_vars());
    b.term(t);
    b.solve()
}
