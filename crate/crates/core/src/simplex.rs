//! Primal network simplex for the dense transportation problem.
//!
//! Sources `0..n` ship to sinks `n..n+m` along uncapacitated arcs `i → j`
//! (arc id `i·m + j`). The spanning tree is kept in parent/thread form with
//! an artificial root, and entering arcs are chosen by block search.

const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const NONE: usize = usize::MAX;

pub(crate) struct Solution {
    /// Non-zero flows `(i, j, amount)`.
    pub flows: Vec<(usize, usize, f64)>,
    /// Row potentials; `min_i (c_ij − u_i)` completes a feasible dual.
    pub u: Vec<f64>,
    /// Flow left on artificial arcs; zero up to rounding when optimal.
    pub artificial: f64,
}

struct Simplex<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    art_source: Vec<usize>,
    art_target: Vec<usize>,
    art_cost: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<i8>,
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty: Vec<usize>,
    // Pivot state.
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
    next_arc: usize,
    block: usize,
    tolerance: f64,
}

impl<'a> Simplex<'a> {
    fn real_arcs(&self) -> usize {
        self.n * self.m
    }

    fn source(&self, e: usize) -> usize {
        if e < self.real_arcs() {
            e / self.m
        } else {
            self.art_source[e - self.real_arcs()]
        }
    }

    fn target(&self, e: usize) -> usize {
        if e < self.real_arcs() {
            self.n + e % self.m
        } else {
            self.art_target[e - self.real_arcs()]
        }
    }

    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.real_arcs() {
            self.cost[e]
        } else {
            self.art_cost[e - self.real_arcs()]
        }
    }

    fn new(supply: &[f64], n: usize, m: usize, cost: &'a [f64]) -> Self {
        let nodes = n + m;
        let root = nodes;
        let arcs = n * m;
        let max_cost = cost.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        let art = (max_cost + 1.0) * nodes as f64;
        let mut s = Self {
            n,
            m,
            cost,
            art_source: vec![0; nodes],
            art_target: vec![0; nodes],
            art_cost: vec![0.0; nodes],
            flow: vec![0.0; arcs + nodes],
            state: vec![STATE_LOWER; arcs + nodes],
            pi: vec![0.0; nodes + 1],
            parent: vec![NONE; nodes + 1],
            pred: vec![NONE; nodes + 1],
            pred_dir: vec![0; nodes + 1],
            thread: vec![0; nodes + 1],
            rev_thread: vec![0; nodes + 1],
            succ_num: vec![1; nodes + 1],
            last_succ: vec![0; nodes + 1],
            dirty: Vec::new(),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
            next_arc: 0,
            block: ((arcs as f64).sqrt() as usize).max(10),
            tolerance: 1e-13 * max_cost.max(f64::MIN_POSITIVE),
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = nodes + 1;
        s.last_succ[root] = root - 1;
        for u in 0..nodes {
            let e = arcs + u;
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            s.state[e] = STATE_TREE;
            if supply[u] >= 0.0 {
                s.pred_dir[u] = DIR_UP;
                s.art_source[u] = u;
                s.art_target[u] = root;
                s.flow[e] = supply[u];
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art;
                s.art_source[u] = root;
                s.art_target[u] = u;
                s.art_cost[u] = art;
                s.flow[e] = -supply[u];
            }
        }
        s.thread[nodes - 1] = root;
        s.rev_thread[root] = nodes - 1;
        s
    }

    fn reduced(&self, e: usize) -> f64 {
        self.state[e] as f64
            * (self.arc_cost(e) + self.pi[self.source(e)] - self.pi[self.target(e)])
    }

    /// Block search; `false` once no arc has negative reduced cost.
    fn find_entering_arc(&mut self) -> bool {
        let total = self.flow.len();
        let mut min = -self.tolerance;
        let mut cnt = self.block;
        let mut found = NONE;
        let mut e = self.next_arc;
        for _ in 0..total {
            if self.state[e] != STATE_TREE {
                let c = self.reduced(e);
                if c < min {
                    min = c;
                    found = e;
                }
            }
            e += 1;
            if e == total {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if found != NONE {
                    break;
                }
                cnt = self.block;
            }
        }
        if found == NONE {
            return false;
        }
        self.in_arc = found;
        self.next_arc = e;
        true
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Bottleneck of the cycle; all arcs are uncapacitated so only flows
    /// against the cycle direction limit it.
    fn find_leaving_arc(&mut self) -> bool {
        let (first, second) = if self.state[self.in_arc] == STATE_LOWER {
            (self.source(self.in_arc), self.target(self.in_arc))
        } else {
            (self.target(self.in_arc), self.source(self.in_arc))
        };
        self.delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[self.pred[u]];
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[self.pred[u]];
                if d <= self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        if self.delta > 0.0 {
            let val = self.state[self.in_arc] as f64 * self.delta;
            self.flow[self.in_arc] += val;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        self.flow[out] = 0.0;
        self.state[out] = STATE_LOWER;
    }

    fn update_tree(&mut self) {
        let (u_in, v_in, u_out, join, in_arc) =
            (self.u_in, self.v_in, self.u_out, self.join, self.in_arc);
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source(in_arc) {
                DIR_UP
            } else {
                DIR_DOWN
            };
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };
            // Re-hang the stem between u_in and u_out.
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty.clear();
            self.dirty.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for k in 0..self.dirty.len() {
                let u = self.dirty[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = if u_in == self.source(in_arc) {
                DIR_UP
            } else {
                DIR_DOWN
            };
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in {
            join
        } else {
            NONE
        };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in]
            - self.pi[self.u_in]
            - self.pred_dir[self.u_in] as f64 * self.arc_cost(self.in_arc);
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }
}

/// Optimal plan for supplies `a`, demands `b` and row-major costs. `None`
/// when the pivot budget runs out.
pub(crate) fn solve(a: &[f64], b: &[f64], cost: &[f64], max_pivots: usize) -> Option<Solution> {
    let (n, m) = (a.len(), b.len());
    let mut supply: Vec<f64> = a.iter().copied().chain(b.iter().map(|x| -x)).collect();
    // Put the rounding imbalance on the largest sink so supplies sum to zero.
    let imbalance: f64 = crate::sum::fsum(supply.iter().copied());
    let jmax = (0..m).max_by(|&x, &y| b[x].total_cmp(&b[y])).unwrap_or(0);
    supply[n + jmax] -= imbalance;
    let mut s = Simplex::new(&supply, n, m, cost);
    let mut pivots = 0;
    while s.find_entering_arc() {
        pivots += 1;
        if pivots > max_pivots {
            return None;
        }
        s.find_join_node();
        if !s.find_leaving_arc() {
            return None;
        }
        s.change_flow();
        s.update_tree();
        s.update_potential();
    }
    let arcs = n * m;
    let flows = (0..arcs)
        .filter(|&e| s.flow[e] > 0.0)
        .map(|e| (e / m, e % m, s.flow[e]))
        .collect();
    let artificial = s.flow[arcs..].iter().copied().fold(0.0, f64::max);
    Some(Solution {
        flows,
        u: (0..n).map(|i| -s.pi[i]).collect(),
        artificial,
    })
}
