//! Nonbinary parity-check codes with field labels, and their encoder.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::gf::Gf;
use super::protograph::{lift_protograph, BaseMatrix, LiftMethod, Lifted};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// One Tanner-graph edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub check: usize,
    pub var: usize,
    /// Nonzero field element `h` multiplying the variable in the check equation.
    pub label: u16,
}

/// Parameters that fully determine an outer code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpcParams {
    pub base: BaseMatrix,
    pub lift: usize,
    pub field_bits: usize,
    pub method: LiftMethod,
    pub seed: u64,
}

/// Lifted nonbinary LDPC code: checks `Σ_e h_e w_{v(e)} = 0` over GF(2^k).
#[derive(Debug, Clone)]
pub struct LdpcCode {
    pub(crate) gf: Gf,
    len: usize,
    checks: usize,
    /// Edges grouped by check (check-major, ascending variable).
    pub(crate) edges: Vec<Edge>,
    /// `edges[check_start[c]..check_start[c + 1]]` belong to check `c`.
    pub(crate) check_start: Vec<usize>,
    /// Edge indices of every variable.
    pub(crate) var_edges: Vec<Vec<usize>>,
    encoder: Encoder,
}

/// Reduced row echelon form of `H`: `w_pivot[i] = Σ_f coef[i][f] w_free[f]`.
#[derive(Debug, Clone)]
struct Encoder {
    pivots: Vec<usize>,
    free: Vec<usize>,
    coef: Vec<Vec<u16>>,
}

impl LdpcCode {
    /// Lifts `params.base`, labels every edge, and prepares the encoder.
    pub fn build(params: &LdpcParams) -> Result<Self> {
        let gf = Gf::new(params.field_bits)?;
        let lifted = lift_protograph(&params.base, params.lift, params.seed, params.method)?;
        Self::from_lifted(&lifted, gf, params.seed)
    }

    /// Assigns uniform nonzero labels (all ones over GF(2)) to a binary structure.
    pub fn from_lifted(lifted: &Lifted, gf: Gf, seed: u64) -> Result<Self> {
        let mut rng = rng::stream_rng(seed, Stream::Labels, 0);
        let q = gf.order() as u16;
        let mut rows = Vec::with_capacity(lifted.checks);
        for vars in &lifted.check_vars {
            let row: Vec<(usize, u16)> = vars.iter().map(|&v| (v, rng.gen_range(1..q))).collect();
            rows.push(row);
        }
        Self::from_rows(lifted.vars, &rows, gf)
    }

    /// Builds a code from explicit check rows of `(variable, label)` pairs.
    pub fn from_rows(len: usize, rows: &[Vec<(usize, u16)>], gf: Gf) -> Result<Self> {
        let mut edges = Vec::new();
        let mut check_start = vec![0];
        let mut var_edges = vec![Vec::new(); len];
        for (c, row) in rows.iter().enumerate() {
            for &(v, label) in row {
                if v >= len {
                    return Err(Error::Protograph(format!("check {c} refers to variable {v} >= {len}")));
                }
                if label == 0 || label as usize >= gf.order() {
                    return Err(Error::Protograph(format!("check {c} has invalid label {label}")));
                }
                var_edges[v].push(edges.len());
                edges.push(Edge { check: c, var: v, label });
            }
            check_start.push(edges.len());
        }
        let encoder = Encoder::new(len, rows, &gf);
        Ok(LdpcCode {
            gf,
            len,
            checks: rows.len(),
            edges,
            check_start,
            var_edges,
            encoder,
        })
    }

    /// Outer length `N_o`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_checks(&self) -> usize {
        self.checks
    }

    /// Dimension `K = N_o - rank(H)`.
    pub fn dimension(&self) -> usize {
        self.encoder.free.len()
    }

    pub fn rank(&self) -> usize {
        self.encoder.pivots.len()
    }

    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.len as f64
    }

    pub fn field(&self) -> &Gf {
        &self.gf
    }

    /// Field order `q_o`.
    pub fn order(&self) -> usize {
        self.gf.order()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Codeword positions carrying the message, ascending.
    pub fn message_positions(&self) -> &[usize] {
        &self.encoder.free
    }

    /// Codeword with `u` on the message positions.
    pub fn encode(&self, u: &[u16]) -> Result<Vec<u16>> {
        if u.len() != self.dimension() {
            return Err(Error::param(
                "u",
                format!("expected {} message symbols, got {}", self.dimension(), u.len()),
            ));
        }
        if let Some((position, &s)) = u.iter().enumerate().find(|(_, &s)| s as usize >= self.order()) {
            return Err(Error::SymbolOutOfRange {
                symbol: s as u32,
                position,
                alphabet: self.order(),
            });
        }
        let mut w = vec![0u16; self.len];
        for (&pos, &s) in self.encoder.free.iter().zip(u) {
            w[pos] = s;
        }
        for (i, &p) in self.encoder.pivots.iter().enumerate() {
            let mut acc = 0u16;
            for (f, &c) in self.encoder.coef[i].iter().enumerate() {
                acc ^= self.gf.mul(c, u[f]);
            }
            w[p] = acc;
        }
        Ok(w)
    }

    /// Message symbols of a codeword.
    pub fn extract_message(&self, w: &[u16]) -> Vec<u16> {
        self.encoder.free.iter().map(|&p| w[p]).collect()
    }

    /// `H w^T`, one field element per check.
    pub fn syndrome(&self, w: &[u16]) -> Vec<u16> {
        (0..self.checks)
            .map(|c| {
                self.edges[self.check_start[c]..self.check_start[c + 1]]
                    .iter()
                    .fold(0u16, |acc, e| acc ^ self.gf.mul(e.label, w[e.var]))
            })
            .collect()
    }

    pub fn is_codeword(&self, w: &[u16]) -> bool {
        w.len() == self.len && self.syndrome(w).iter().all(|&s| s == 0)
    }
}

impl Encoder {
    fn new(len: usize, rows: &[Vec<(usize, u16)>], gf: &Gf) -> Self {
        let mut h: Vec<Vec<u16>> = rows
            .iter()
            .map(|row| {
                let mut dense = vec![0u16; len];
                for &(v, label) in row {
                    dense[v] ^= label;
                }
                dense
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..len {
            let Some(p) = (rank..h.len()).find(|&r| h[r][col] != 0) else {
                continue;
            };
            h.swap(rank, p);
            let inv = gf.inv(h[rank][col]).expect("pivot is nonzero");
            for x in h[rank].iter_mut() {
                *x = gf.mul(*x, inv);
            }
            let pivot_row = h[rank].clone();
            for (r, row) in h.iter_mut().enumerate() {
                if r == rank || row[col] == 0 {
                    continue;
                }
                let f = row[col];
                for (x, &pv) in row.iter_mut().zip(&pivot_row) {
                    *x ^= gf.mul(f, pv);
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == h.len() {
                break;
            }
        }
        let free: Vec<usize> = (0..len).filter(|c| !pivots.contains(c)).collect();
        // w_p + Σ_f h[i][f] w_f = 0, and -x = x in characteristic two.
        let coef = (0..rank)
            .map(|i| free.iter().map(|&f| h[i][f]).collect())
            .collect();
        Encoder { pivots, free, coef }
    }
}
