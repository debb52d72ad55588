//! Topology matrix `T`, branch impedance diagonal `D_Z` and the driving matrix
//! `TRX = Tᵀ·D_Z·T`.
//!
//! Vectors are indexed by position `p = k - 1` for node `k`, which is also the
//! position of branch `k`. Entry `T[b][j]` is 1 when branch `b + 1` lies on the
//! path from the root to node `j + 1`.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::NetworkInput;
use crate::ordering::RadialOrdering;

/// Largest dimension for which `T` is stored as a dense matrix.
pub const DENSE_LIMIT: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyMatrix {
    /// Parent position of each node, `None` for children of the root.
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Row-major 0/1 entries when materialized.
    dense: Option<Vec<u8>>,
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

impl TopologyMatrix {
    fn implicit(ord: &RadialOrdering) -> Self {
        let n = ord.n();
        let parent: Vec<Option<usize>> = ord
            .parents()
            .iter()
            .map(|&k| if k == 0 { None } else { Some(k - 1) })
            .collect();
        let mut children = vec![Vec::new(); n];
        for (p, q) in parent.iter().enumerate() {
            if let Some(q) = *q {
                children[q].push(p);
            }
        }
        Self {
            parent,
            children,
            dense: None,
        }
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    fn ancestors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(Some(j), move |&p| self.parent[p])
    }

    /// `T[b][j]`.
    pub fn get(&self, b: usize, j: usize) -> bool {
        match &self.dense {
            Some(t) => t[b * self.n() + j] == 1,
            None => b <= j && self.ancestors(j).any(|p| p == b),
        }
    }

    /// Positions `j` with `T[b][j] = 1`, ascending.
    pub fn row_support(&self, b: usize) -> Vec<usize> {
        let n = self.n();
        match &self.dense {
            Some(t) => (b..n).filter(|&j| t[b * n + j] == 1).collect(),
            None => {
                let mut out = vec![b];
                let mut i = 0;
                while i < out.len() {
                    out.extend_from_slice(&self.children[out[i]]);
                    i += 1;
                }
                out.sort_unstable();
                out
            }
        }
    }

    /// `T·x`: for each branch, the sum of `x` over the nodes it feeds.
    pub fn mul(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n();
        check_len(n, x.len())?;
        match &self.dense {
            Some(t) => Ok((0..n)
                .map(|b| {
                    t[b * n..(b + 1) * n]
                        .iter()
                        .zip(x)
                        .filter(|(&e, _)| e == 1)
                        .map(|(_, v)| *v)
                        .sum()
                })
                .collect()),
            None => {
                let mut acc = x.to_vec();
                for p in (0..n).rev() {
                    if let Some(q) = self.parent[p] {
                        let v = acc[p];
                        acc[q] += v;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `Tᵀ·y`: for each node, the sum of `y` over the branches on its root path.
    pub fn mul_transpose(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n();
        check_len(n, y.len())?;
        match &self.dense {
            Some(t) => {
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for (b, yb) in y.iter().enumerate() {
                    for j in b..n {
                        if t[b * n + j] == 1 {
                            out[j] += yb;
                        }
                    }
                }
                Ok(out)
            }
            None => {
                let mut out = Vec::with_capacity(n);
                for (parent, yp) in self.parent.iter().zip(y) {
                    let up = parent.map_or(Complex64::new(0.0, 0.0), |q| out[q]);
                    out.push(up + yp);
                }
                Ok(out)
            }
        }
    }

    /// Solve `T·x = v` by back-substitution.
    pub fn solve(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n();
        check_len(n, v.len())?;
        match &self.dense {
            Some(t) => {
                let mut x = vec![Complex64::new(0.0, 0.0); n];
                for b in (0..n).rev() {
                    let mut acc = v[b];
                    for j in b + 1..n {
                        if t[b * n + j] == 1 {
                            acc -= x[j];
                        }
                    }
                    x[b] = acc;
                }
                Ok(x)
            }
            None => Ok((0..n)
                .map(|p| v[p] - self.children[p].iter().map(|&c| v[c]).sum::<Complex64>())
                .collect()),
        }
    }

    /// Plain-text 0/1 rows.
    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for b in 0..n {
            let row: Vec<&str> = (0..n)
                .map(|j| if self.get(b, j) { "1" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// Build `T`, dense up to [`DENSE_LIMIT`] nodes and implicit above.
pub fn build_t(ord: &RadialOrdering) -> TopologyMatrix {
    if ord.n() <= DENSE_LIMIT {
        build_t_dense(ord)
    } else {
        build_t_implicit(ord)
    }
}

/// Dense `T`, filled by walking parent links up from every node.
pub fn build_t_dense(ord: &RadialOrdering) -> TopologyMatrix {
    let mut t = TopologyMatrix::implicit(ord);
    let n = t.n();
    let mut dense = vec![0u8; n * n];
    for j in 0..n {
        for b in t.ancestors(j) {
            dense[b * n + j] = 1;
        }
    }
    t.dense = Some(dense);
    t
}

/// `T` represented by parent pointers only.
pub fn build_t_implicit(ord: &RadialOrdering) -> TopologyMatrix {
    TopologyMatrix::implicit(ord)
}

/// Branch series impedances in numbering order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceDiagonal {
    z: Vec<Complex64>,
}

impl ImpedanceDiagonal {
    pub fn new(z: Vec<Complex64>) -> Self {
        Self { z }
    }

    /// Pick impedances out of a per-unit network in the ordering's branch order.
    pub fn from_network(net: &NetworkInput, ord: &RadialOrdering) -> Self {
        Self {
            z: ord
                .branches()
                .iter()
                .map(|b| net.branches[b.input_index].impedance())
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.z
    }

    pub fn mul(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n(), x.len())?;
        Ok(self.z.iter().zip(x).map(|(z, v)| z * v).collect())
    }
}

/// Dense complex-symmetric `TRX`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DrivingMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn mul(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n, x.len())?;
        Ok(self
            .data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.data.chunks_exact(self.n) {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:.6}{:+.6}j", z.re, z.im))
                .collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

/// `TRX = Tᵀ·D_Z·T`, accumulated one branch (row of `T`) at a time.
pub fn build_trx(t: &TopologyMatrix, dz: &ImpedanceDiagonal) -> Result<DrivingMatrix> {
    let n = t.n();
    check_len(n, dz.n())?;
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for (b, &z) in dz.values().iter().enumerate() {
        let support = t.row_support(b);
        for &i in &support {
            for &j in &support {
                data[i * n + j] += z;
            }
        }
    }
    Ok(DrivingMatrix { n, data })
}
