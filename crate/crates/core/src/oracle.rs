//! Independent checks for sweep solutions.
//!
//! Nothing here touches the ordering, the topology matrix or the sweep
//! itself. Residuals are evaluated directly on the input branch list, and the
//! reference solver iterates on the nodal admittance equations.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{net_injection, to_per_unit, NetworkInput};
use crate::solver::SolveResult;

/// Relaxation applied to each reference-solver update.
pub const REFERENCE_DAMPING: f64 = 0.7;
pub const REFERENCE_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeResidual {
    pub id: String,
    pub kcl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchResidual {
    pub from: String,
    pub to: String,
    pub kvl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_kcl_residual: f64,
    pub max_kvl_residual: f64,
    pub power_mismatch: f64,
    pub per_node: Vec<NodeResidual>,
    pub per_branch: Vec<BranchResidual>,
}

impl ResidualReport {
    pub fn within(&self, tolerance: f64) -> bool {
        self.max_kcl_residual < tolerance
            && self.max_kvl_residual < tolerance
            && self.power_mismatch < tolerance
    }
}

fn unordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Kirchhoff residuals of a solution against the network it claims to solve.
///
/// * KCL at every non-root bus: current in from the feeding branch, minus
///   currents out on other branches, plus the injected current `S*/V*`.
/// * KVL on every branch: `V_from - V_to - Z·J`.
/// * Power balance: reported source power against load plus series losses.
pub fn check_residuals(net: &NetworkInput, result: &SolveResult) -> Result<ResidualReport> {
    let net = to_per_unit(net)?;
    if result.voltages.len() != net.buses.len() {
        return Err(Error::DimensionMismatch {
            expected: net.buses.len(),
            found: result.voltages.len(),
        });
    }
    if result.branches.len() != net.branches.len() {
        return Err(Error::DimensionMismatch {
            expected: net.branches.len(),
            found: result.branches.len(),
        });
    }

    let voltage: HashMap<&str, Complex64> = result
        .voltages
        .iter()
        .map(|v| (v.id.as_str(), v.voltage))
        .collect();
    let lookup = |id: &str, index: usize| {
        voltage.get(id).copied().ok_or_else(|| Error::UnknownBus {
            index,
            id: id.to_string(),
        })
    };
    let impedance: HashMap<(String, String), Complex64> = net
        .branches
        .iter()
        .map(|b| (unordered(&b.from_bus, &b.to_bus), b.impedance()))
        .collect();
    let root = net.root().ok_or(Error::NoRoot)?.id.clone();

    let mut net_current: HashMap<&str, Complex64> = HashMap::new();
    let mut per_branch = Vec::with_capacity(result.branches.len());
    let mut losses = Complex64::new(0.0, 0.0);
    let mut root_out = Complex64::new(0.0, 0.0);
    for (index, br) in result.branches.iter().enumerate() {
        let z = *impedance
            .get(&unordered(&br.from, &br.to))
            .ok_or_else(|| Error::UnknownBus {
                index,
                id: format!("{}-{}", br.from, br.to),
            })?;
        let drop = lookup(&br.from, index)? - lookup(&br.to, index)? - z * br.current;
        per_branch.push(BranchResidual {
            from: br.from.clone(),
            to: br.to.clone(),
            kvl: drop.norm(),
        });
        losses += z * br.current.norm_sqr();
        *net_current.entry(br.to.as_str()).or_default() += br.current;
        *net_current.entry(br.from.as_str()).or_default() -= br.current;
        if br.from == root {
            root_out += br.current;
        }
    }

    let mut per_node = Vec::with_capacity(net.buses.len().saturating_sub(1));
    let mut demand = Complex64::new(0.0, 0.0);
    for (index, bus) in net.buses.iter().enumerate() {
        if bus.is_root {
            continue;
        }
        let s = net_injection(bus);
        demand -= s;
        let v = lookup(&bus.id, index)?;
        let inflow = net_current
            .get(bus.id.as_str())
            .copied()
            .unwrap_or_default();
        per_node.push(NodeResidual {
            id: bus.id.clone(),
            kcl: (inflow + s.conj() / v.conj()).norm(),
        });
    }

    let source = lookup(&root, 0)? * root_out.conj();
    let power_mismatch = (result.source_power - (demand + losses))
        .norm()
        .max((source - result.source_power).norm());

    Ok(ResidualReport {
        max_kcl_residual: per_node.iter().map(|r| r.kcl).fold(0.0, f64::max),
        max_kvl_residual: per_branch.iter().map(|r| r.kvl).fold(0.0, f64::max),
        power_mismatch,
        per_node,
        per_branch,
    })
}

/// Voltages from the reference solver, in input bus order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub ids: Vec<String>,
    pub voltages: Vec<Complex64>,
    pub iterations: usize,
}

impl ReferenceSolution {
    pub fn voltage(&self, id: &str) -> Option<Complex64> {
        self.ids
            .iter()
            .position(|x| x == id)
            .map(|k| self.voltages[k])
    }

    /// Largest complex deviation from a sweep solution over shared bus ids.
    pub fn max_deviation(&self, result: &SolveResult) -> f64 {
        result
            .voltages
            .iter()
            .filter_map(|v| self.voltage(&v.id).map(|r| (r - v.voltage).norm()))
            .fold(0.0, f64::max)
    }
}

/// [`reference_solve_at`] with the root held at `1 + j0`.
pub fn reference_solve(net: &NetworkInput, tolerance: f64) -> Result<ReferenceSolution> {
    reference_solve_at(net, Complex64::new(1.0, 0.0), tolerance)
}

/// Damped implicit Z-bus Gauss iteration on `Y_bus·V = I(V)`.
///
/// The admittance matrix is assembled from branch admittances, reduced by the
/// root row and column, and factorized once. Rows of `Y_bus` sum to zero, so
/// `V = V_root + ΔV` with `Y_rr·ΔV = S*/V*`. Each step solves for the target
/// `G = V_root + ΔV` and relaxes `V ← V + 0.7·(G - V)`.
pub fn reference_solve_at(
    net: &NetworkInput,
    v_root: Complex64,
    tolerance: f64,
) -> Result<ReferenceSolution> {
    net.validate()?;
    let net = to_per_unit(net)?;
    let root = net
        .buses
        .iter()
        .position(|b| b.is_root)
        .ok_or(Error::NoRoot)?;

    // bus position -> reduced index
    let mut reduced = vec![usize::MAX; net.buses.len()];
    let mut others = Vec::with_capacity(net.buses.len() - 1);
    for (k, _) in net.buses.iter().enumerate().filter(|&(k, _)| k != root) {
        reduced[k] = others.len();
        others.push(k);
    }
    let position: HashMap<&str, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(k, b)| (b.id.as_str(), k))
        .collect();

    let m = others.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut y_rr = DMatrix::from_element(m, m, zero);
    for br in &net.branches {
        let y = br.impedance().inv();
        let a = position[br.from_bus.as_str()];
        let b = position[br.to_bus.as_str()];
        for (p, q) in [(a, b), (b, a)] {
            if p == root {
                continue;
            }
            let rp = reduced[p];
            y_rr[(rp, rp)] += y;
            if q != root {
                y_rr[(rp, reduced[q])] -= y;
            }
        }
    }

    let lu = y_rr.lu();
    let s: Vec<Complex64> = others
        .iter()
        .map(|&k| net_injection(&net.buses[k]))
        .collect();
    let mut v = DVector::from_element(m, v_root);

    for iteration in 1..=REFERENCE_MAX_ITERATIONS {
        let rhs =
            DVector::from_iterator(m, s.iter().zip(v.iter()).map(|(s, v)| s.conj() / v.conj()));
        let rise = lu.solve(&rhs).ok_or(Error::NoConvergence {
            iterations: iteration,
        })?;
        let step = rise.zip_map(&v, |dv, v| (v_root + dv - v) * REFERENCE_DAMPING);
        let delta = step.iter().map(|d| d.norm()).fold(0.0, f64::max);
        v += step;
        if !delta.is_finite() || v.iter().any(|x| x.norm() < 1e-6) {
            return Err(Error::NoConvergence {
                iterations: iteration,
            });
        }
        if delta < tolerance {
            let mut voltages = vec![v_root; net.buses.len()];
            for (r, &k) in others.iter().enumerate() {
                voltages[k] = v[r];
            }
            return Ok(ReferenceSolution {
                ids: net.buses.iter().map(|b| b.id.clone()).collect(),
                voltages,
                iterations: iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: REFERENCE_MAX_ITERATIONS,
    })
}

/// Exact voltage at the far end of a single branch `z` fed at `v0` with net
/// injection `s` at the receiving bus.
///
/// With `S_L = -s` the consumed power, `V = (|V|² + z̄·S_L) / v̄0` (after
/// conjugation) and `u = |V|²` solves
/// `u² + (2·Re(z·S_L*) - |v0|²)·u + |z|²·|S_L|² = 0`; the larger root is the
/// operating point. Returns `None` when the load exceeds the transfer limit.
pub fn two_node_closed_form(v0: Complex64, z: Complex64, s: Complex64) -> Option<Complex64> {
    let load = -s;
    let b = 2.0 * (z * load.conj()).re - v0.norm_sqr();
    let c = z.norm_sqr() * load.norm_sqr();
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        return None;
    }
    let u = (-b + disc.sqrt()) / 2.0;
    Some((Complex64::new(u, 0.0) + z.conj() * load) / v0.conj())
}
