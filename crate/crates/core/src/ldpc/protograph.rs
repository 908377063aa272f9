//! Base matrices and their circulant lifting.

use std::collections::VecDeque;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Base matrix paired with the CC and WM inner codes.
pub const B1: [[u32; 6]; 3] = [[1, 1, 0, 0, 0, 3], [0, 1, 1, 2, 1, 0], [1, 1, 1, 0, 1, 1]];

/// Base matrix paired with the TVC inner codes.
pub const B2: [[u32; 6]; 3] = [[0, 1, 1, 1, 1, 1], [1, 1, 1, 1, 1, 1], [1, 0, 1, 1, 0, 0]];

/// Protograph: entry `(i, j)` is the number of edges between check `i` and variable `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl BaseMatrix {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::Protograph("empty base matrix".into()));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Protograph("rows have different lengths".into()));
        }
        Ok(BaseMatrix {
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn b1() -> Self {
        Self::new(B1.iter().map(|r| r.to_vec()).collect()).expect("B1 is well formed")
    }

    pub fn b2() -> Self {
        Self::new(B2.iter().map(|r| r.to_vec()).collect()).expect("B2 is well formed")
    }

    /// `b1`, `b2`, or a path to a file of whitespace-separated integer rows.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "b1" => Ok(Self::b1()),
            "b2" => Ok(Self::b2()),
            _ => {
                let text = std::fs::read_to_string(name)
                    .map_err(|e| Error::Protograph(format!("cannot read `{name}`: {e}")))?;
                Self::parse(&text)
            }
        }
    }

    /// Dense integer rows; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| Error::Protograph(format!("line {}: `{t}` is not a count", no + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.entries[r * self.cols + c]
    }

    pub fn design_rate(&self) -> f64 {
        (self.cols as f64 - self.rows as f64) / self.cols as f64
    }

    pub fn column_sum(&self, c: usize) -> u32 {
        (0..self.rows).map(|r| self.get(r, c)).sum()
    }

    pub fn row_sum(&self, r: usize) -> u32 {
        (0..self.cols).map(|c| self.get(r, c)).sum()
    }

    pub fn max_entry(&self) -> u32 {
        self.entries.iter().copied().max().unwrap_or(0)
    }
}

/// How circulant shifts are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiftMethod {
    /// Progressive edge growth over circulant shifts; each shift maximizes the
    /// distance from the variable to the new check, ties broken by the smallest shift.
    #[default]
    Peg,
    /// Distinct shifts drawn uniformly from the seed.
    Random,
}

/// Binary parity-check structure of a lifted protograph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lifted {
    pub lift: usize,
    pub checks: usize,
    pub vars: usize,
    /// Variable indices of every check row, ascending.
    pub check_vars: Vec<Vec<usize>>,
    /// Circulant shifts per base entry, row-major.
    pub shifts: Vec<Vec<usize>>,
}

impl Lifted {
    /// Check rows of every variable, ascending.
    pub fn var_checks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vars];
        for (c, vars) in self.check_vars.iter().enumerate() {
            for &v in vars {
                out[v].push(c);
            }
        }
        out
    }

    /// Length of the shortest cycle in the Tanner graph, if any.
    pub fn girth(&self) -> Option<usize> {
        let var_checks = self.var_checks();
        let mut best: Option<usize> = None;
        for start in 0..self.vars {
            // BFS over the bipartite graph: node ids < vars are variables.
            let total = self.vars + self.checks;
            let mut dist = vec![usize::MAX; total];
            let mut parent = vec![usize::MAX; total];
            let mut queue = VecDeque::new();
            dist[start] = 0;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                let neighbours: Vec<usize> = if u < self.vars {
                    var_checks[u].iter().map(|&c| self.vars + c).collect()
                } else {
                    self.check_vars[u - self.vars].clone()
                };
                for v in neighbours {
                    if v == parent[u] {
                        continue;
                    }
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        parent[v] = u;
                        queue.push_back(v);
                    } else {
                        let cycle = dist[u] + dist[v] + 1;
                        best = Some(best.map_or(cycle, |b| b.min(cycle)));
                    }
                }
            }
        }
        best
    }
}

/// Replaces every entry `b` by a sum of `b` distinct `Q x Q` circulant
/// permutations and every zero by a zero block. Row `r Q + ((j + s) mod Q)` of
/// block `(r, c)` with shift `s` connects to variable `c Q + j`.
pub fn lift_protograph(base: &BaseMatrix, lift: usize, seed: u64, method: LiftMethod) -> Result<Lifted> {
    if lift == 0 {
        return Err(Error::Protograph("lifting factor must be positive".into()));
    }
    if base.max_entry() as usize > lift {
        return Err(Error::Protograph(format!(
            "entry {} exceeds the lifting factor {lift}",
            base.max_entry()
        )));
    }
    let (rows, cols) = (base.rows(), base.cols());
    let mut shifts = vec![Vec::new(); rows * cols];
    match method {
        LiftMethod::Random => {
            let mut rng = rng::stream_rng(seed, Stream::Lifting, 0);
            for r in 0..rows {
                for c in 0..cols {
                    let b = base.get(r, c) as usize;
                    let mut s: Vec<usize> = sample(&mut rng, lift, b).into_vec();
                    s.sort_unstable();
                    shifts[r * cols + c] = s;
                }
            }
        }
        LiftMethod::Peg => {
            let mut graph = Graph::new(rows * lift, cols * lift);
            let mut order: Vec<usize> = (0..cols).collect();
            order.sort_by_key(|&c| base.column_sum(c));
            for c in order {
                for r in 0..rows {
                    for _ in 0..base.get(r, c) {
                        let s = graph.best_shift(r, c, lift, &shifts[r * cols + c]);
                        graph.add_circulant(r, c, s, lift);
                        shifts[r * cols + c].push(s);
                    }
                }
            }
            shifts.iter_mut().for_each(|s| s.sort_unstable());
        }
    }
    let mut check_vars = vec![Vec::new(); rows * lift];
    for r in 0..rows {
        for c in 0..cols {
            for &s in &shifts[r * cols + c] {
                for j in 0..lift {
                    check_vars[r * lift + (j + s) % lift].push(c * lift + j);
                }
            }
        }
    }
    check_vars.iter_mut().for_each(|v| v.sort_unstable());
    Ok(Lifted {
        lift,
        checks: rows * lift,
        vars: cols * lift,
        check_vars,
        shifts,
    })
}

/// Tanner graph under construction.
struct Graph {
    check_adj: Vec<Vec<usize>>,
    var_adj: Vec<Vec<usize>>,
}

impl Graph {
    fn new(checks: usize, vars: usize) -> Self {
        Graph {
            check_adj: vec![Vec::new(); checks],
            var_adj: vec![Vec::new(); vars],
        }
    }

    fn add_circulant(&mut self, r: usize, c: usize, s: usize, lift: usize) {
        for j in 0..lift {
            let check = r * lift + (j + s) % lift;
            let var = c * lift + j;
            self.check_adj[check].push(var);
            self.var_adj[var].push(check);
        }
    }

    /// Shift whose check (seen from variable `c Q`) is farthest away; unreachable
    /// checks count as infinitely far. By the circulant symmetry every variable
    /// of the block sees the same distances.
    fn best_shift(&self, r: usize, c: usize, lift: usize, taken: &[usize]) -> usize {
        let start = c * lift;
        let mut check_dist = vec![usize::MAX; self.check_adj.len()];
        let mut var_seen = vec![false; self.var_adj.len()];
        let mut queue = VecDeque::new();
        var_seen[start] = true;
        queue.push_back((start, 0usize));
        while let Some((v, d)) = queue.pop_front() {
            for &ch in &self.var_adj[v] {
                if check_dist[ch] != usize::MAX {
                    continue;
                }
                check_dist[ch] = d + 1;
                for &u in &self.check_adj[ch] {
                    if !var_seen[u] {
                        var_seen[u] = true;
                        queue.push_back((u, d + 2));
                    }
                }
            }
        }
        let mut best = None;
        let mut best_dist = 0usize;
        for s in 0..lift {
            if taken.contains(&s) {
                continue;
            }
            let d = check_dist[r * lift + s % lift];
            if best.is_none() || d > best_dist {
                best = Some(s);
                best_dist = d;
            }
        }
        best.expect("entry does not exceed the lifting factor")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_base_matrices() {
        let b1 = BaseMatrix::b1();
        let b2 = BaseMatrix::b2();
        assert_eq!((b1.rows(), b1.cols()), (3, 6));
        assert_eq!(b1.design_rate(), 0.5);
        assert_eq!(b2.design_rate(), 0.5);
        let sums: Vec<u32> = (0..6).map(|c| b2.column_sum(c)).collect();
        assert_eq!(sums, vec![2, 2, 3, 3, 2, 2]);
        assert_eq!(BaseMatrix::parse("1 1 0 0 0 3\n0 1 1 2 1 0\n1 1 1 0 1 1\n").unwrap(), b1);
        assert!(BaseMatrix::parse("1 2\n3").is_err());
    }

    #[test]
    fn single_entry_lifts_to_a_permutation() {
        let base = BaseMatrix::new(vec![vec![1]]).unwrap();
        let l = lift_protograph(&base, 3, 0, LiftMethod::Peg).unwrap();
        assert_eq!(l.check_vars.len(), 3);
        let mut cols: Vec<usize> = l.check_vars.iter().flatten().copied().collect();
        cols.sort_unstable();
        assert_eq!(cols, vec![0, 1, 2]);
    }

    #[test]
    fn lifted_weights_follow_the_base_matrix() {
        for base in [BaseMatrix::b1(), BaseMatrix::b2()] {
            for method in [LiftMethod::Peg, LiftMethod::Random] {
                let q = 40;
                let l = lift_protograph(&base, q, 5, method).unwrap();
                assert_eq!(l.vars, 240);
                let var_checks = l.var_checks();
                for (v, checks) in var_checks.iter().enumerate() {
                    assert_eq!(checks.len() as u32, base.column_sum(v / q));
                    let mut dedup = checks.clone();
                    dedup.dedup();
                    assert_eq!(dedup.len(), checks.len(), "parallel edge at variable {v}");
                }
                for (c, vars) in l.check_vars.iter().enumerate() {
                    assert_eq!(vars.len() as u32, base.row_sum(c / q));
                    // weight of each block row equals the base entry
                    for b in 0..base.cols() {
                        let w = vars.iter().filter(|&&v| v / q == b).count() as u32;
                        assert_eq!(w, base.get(c / q, b));
                    }
                }
            }
        }
    }

    #[test]
    fn peg_avoids_four_cycles() {
        let l = lift_protograph(&BaseMatrix::b2(), 40, 0, LiftMethod::Peg).unwrap();
        assert!(l.girth().unwrap() >= 6);
        let again = lift_protograph(&BaseMatrix::b2(), 40, 0, LiftMethod::Peg).unwrap();
        assert_eq!(l, again);
    }

    #[test]
    fn oversized_entry_is_rejected() {
        assert!(lift_protograph(&BaseMatrix::b1(), 2, 0, LiftMethod::Peg).is_err());
    }
}
