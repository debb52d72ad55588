//! Backward/forward sweep iteration.
//!
//! Each iteration computes nodal currents from the present voltages
//! (`I = S* / V*`), aggregates them into branch currents (`J = -T·I`) and
//! updates voltages from the root outward (`V = V₀ - Tᵀ·D_Z·J`). The two
//! sweeps collapse into `V = V₀ + TRX·I`, which is offered as an alternative
//! mode. Iteration stops once the largest voltage change drops strictly below
//! the tolerance.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{net_injection, to_per_unit, NetworkInput};
use crate::ordering::{build_ordering, RadialOrdering};
use crate::topology::{build_t, build_trx, DrivingMatrix, ImpedanceDiagonal, TopologyMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Backward sweep then forward sweep.
    TwoStep,
    /// Single update through the driving matrix `TRX`.
    SingleEquationTrx,
}

/// How the per-iteration voltage change is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvergenceMeasure {
    /// `|V_new - V_old|` (complex modulus).
    ComplexDifference,
    /// `||V_new| - |V_old||`.
    MagnitudeDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub mode: SweepMode,
    pub v_ref: Complex64,
    /// Smallest voltage magnitude accepted when dividing by `V*`.
    pub v_min: f64,
    pub measure: ConvergenceMeasure,
    /// Starting voltages in internal node order (root excluded). Flat start when `None`.
    pub warm_start: Option<Vec<Complex64>>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iterations: 100,
            mode: SweepMode::TwoStep,
            v_ref: Complex64::new(1.0, 0.0),
            v_min: 0.2,
            measure: ConvergenceMeasure::ComplexDifference,
            warm_start: None,
        }
    }
}

impl SweepOptions {
    pub fn with_mode(mut self, mode: SweepMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidOption(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidOption(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.v_ref.re.is_finite() && self.v_ref.im.is_finite())
            || self.v_ref.norm() < self.v_min
        {
            return Err(Error::InvalidOption(format!(
                "unusable reference voltage {}",
                self.v_ref
            )));
        }
        if !(self.v_min >= 0.0 && self.v_min.is_finite()) {
            return Err(Error::InvalidOption(format!(
                "v_min must be non-negative, got {}",
                self.v_min
            )));
        }
        Ok(())
    }
}

/// Iterate after `k` completed iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepState {
    pub v: Vec<Complex64>,
    pub i: Vec<Complex64>,
    pub j: Vec<Complex64>,
    pub k: usize,
    pub delta: f64,
}

/// `I_k = S_k* / V_k*`.
pub fn nodal_currents(v: &[Complex64], s: &[Complex64], v_min: f64) -> Result<Vec<Complex64>> {
    if v.len() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            found: v.len(),
        });
    }
    v.iter()
        .zip(s)
        .enumerate()
        .map(|(p, (v, s))| {
            let magnitude = v.norm();
            if magnitude.is_nan() || magnitude < v_min {
                return Err(Error::VoltageCollapse {
                    node: p + 1,
                    magnitude,
                    limit: v_min,
                });
            }
            Ok(s.conj() / v.conj())
        })
        .collect()
}

/// `J = -T·I`.
pub fn backward_sweep(t: &TopologyMatrix, i: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(t.mul(i)?.into_iter().map(|x| -x).collect())
}

/// `V = V₀ - Tᵀ·D_Z·J`.
pub fn forward_sweep(
    v0: Complex64,
    t: &TopologyMatrix,
    dz: &ImpedanceDiagonal,
    j: &[Complex64],
) -> Result<Vec<Complex64>> {
    if t.n() != dz.n() {
        return Err(Error::DimensionMismatch {
            expected: t.n(),
            found: dz.n(),
        });
    }
    let drops = t.mul_transpose(&dz.mul(j)?)?;
    Ok(drops.into_iter().map(|d| v0 - d).collect())
}

/// `V = V₀ + TRX·I`.
pub fn sweep_step_trx(
    v0: Complex64,
    trx: &DrivingMatrix,
    i: &[Complex64],
) -> Result<Vec<Complex64>> {
    Ok(trx.mul(i)?.into_iter().map(|d| v0 + d).collect())
}

/// Largest per-node change between two voltage vectors.
pub fn max_delta(v_new: &[Complex64], v_old: &[Complex64], measure: ConvergenceMeasure) -> f64 {
    v_new
        .iter()
        .zip(v_old)
        .map(|(a, b)| match measure {
            ConvergenceMeasure::ComplexDifference => (a - b).norm(),
            ConvergenceMeasure::MagnitudeDifference => (a.norm() - b.norm()).abs(),
        })
        .fold(0.0, f64::max)
}

/// `max |V_new - V_old| < ε`.
pub fn converged(v_new: &[Complex64], v_old: &[Complex64], epsilon: f64) -> bool {
    max_delta(v_new, v_old, ConvergenceMeasure::ComplexDifference) < epsilon
}

/// A validated, per-unit network with its ordering and matrices.
#[derive(Debug)]
pub struct PreparedNetwork {
    network: NetworkInput,
    ordering: RadialOrdering,
    t: TopologyMatrix,
    dz: ImpedanceDiagonal,
    injections: Vec<Complex64>,
    trx: OnceLock<DrivingMatrix>,
}

impl PreparedNetwork {
    pub fn new(net: &NetworkInput) -> Result<Self> {
        net.validate()?;
        let network = to_per_unit(net)?;
        let ordering = build_ordering(&network)?;
        let t = build_t(&ordering);
        Ok(Self::assemble(network, ordering, t))
    }

    /// Same as [`PreparedNetwork::new`] with a caller-chosen `T` representation.
    pub fn with_topology(
        net: &NetworkInput,
        build: impl FnOnce(&RadialOrdering) -> TopologyMatrix,
    ) -> Result<Self> {
        net.validate()?;
        let network = to_per_unit(net)?;
        let ordering = build_ordering(&network)?;
        let t = build(&ordering);
        Ok(Self::assemble(network, ordering, t))
    }

    fn assemble(network: NetworkInput, ordering: RadialOrdering, t: TopologyMatrix) -> Self {
        let dz = ImpedanceDiagonal::from_network(&network, &ordering);
        let injections = (1..=ordering.n())
            .map(|k| net_injection(&network.buses[ordering.bus_input_index(k)]))
            .collect();
        Self {
            network,
            ordering,
            t,
            dz,
            injections,
            trx: OnceLock::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.ordering.n()
    }

    /// The network in per-unit.
    pub fn network(&self) -> &NetworkInput {
        &self.network
    }

    pub fn ordering(&self) -> &RadialOrdering {
        &self.ordering
    }

    pub fn topology(&self) -> &TopologyMatrix {
        &self.t
    }

    pub fn impedances(&self) -> &ImpedanceDiagonal {
        &self.dz
    }

    /// Net injections in internal order, root excluded.
    pub fn injections(&self) -> &[Complex64] {
        &self.injections
    }

    /// `TRX`, built on first use.
    pub fn trx(&self) -> &DrivingMatrix {
        self.trx.get_or_init(|| {
            build_trx(&self.t, &self.dz).expect("T and D_Z share the ordering dimension")
        })
    }

    /// Iterator over successive sweep states. It never ends on its own; errors
    /// end it after being yielded once.
    pub fn iterate<'a>(&'a self, opts: &'a SweepOptions) -> Result<SweepIter<'a>> {
        opts.validate()?;
        let v = match &opts.warm_start {
            Some(v) if v.len() != self.n() => {
                return Err(Error::DimensionMismatch {
                    expected: self.n(),
                    found: v.len(),
                })
            }
            Some(v) => v.clone(),
            None => vec![opts.v_ref; self.n()],
        };
        Ok(SweepIter {
            net: self,
            opts,
            v,
            k: 0,
            failed: false,
        })
    }

    pub fn solve(&self, opts: &SweepOptions) -> Result<SolveResult> {
        let mut history = Vec::new();
        let mut last = None;
        for state in self.iterate(opts)?.take(opts.max_iterations) {
            let state = state?;
            history.push(state.delta);
            let done = state.delta < opts.epsilon;
            last = Some(state);
            if done {
                return Ok(self.result(last.unwrap(), history, opts));
            }
        }
        Err(Error::MaxIterationsExceeded {
            last_state: Box::new(last.expect("max_iterations >= 1")),
            history,
        })
    }

    fn result(&self, state: SweepState, history: Vec<f64>, opts: &SweepOptions) -> SolveResult {
        let ord = &self.ordering;
        let mut voltages = Vec::with_capacity(self.n() + 1);
        voltages.push(NodeVoltage::new(ord.id(0), opts.v_ref));
        for (p, v) in state.v.iter().enumerate() {
            voltages.push(NodeVoltage::new(ord.id(p + 1), *v));
        }

        let mut branches = Vec::with_capacity(self.n());
        let mut total_loss = Complex64::new(0.0, 0.0);
        let mut root_current = Complex64::new(0.0, 0.0);
        for (b, br) in ord.branches().iter().enumerate() {
            let current = state.j[b];
            let z = self.dz.values()[b];
            let loss = z * current.norm_sqr();
            total_loss += loss;
            if br.from == 0 {
                root_current += current;
            }
            branches.push(BranchFlow {
                from: ord.id(br.from).to_string(),
                to: ord.id(br.to).to_string(),
                current,
                sending_power: voltages[br.from].voltage * current.conj(),
                loss,
            });
        }

        SolveResult {
            voltages,
            branches,
            total_loss,
            source_power: opts.v_ref * root_current.conj(),
            iterations: state.k,
            history,
        }
    }
}

pub struct SweepIter<'a> {
    net: &'a PreparedNetwork,
    opts: &'a SweepOptions,
    v: Vec<Complex64>,
    k: usize,
    failed: bool,
}

impl SweepIter<'_> {
    fn advance(&mut self) -> Result<SweepState> {
        let net = self.net;
        let i = nodal_currents(&self.v, &net.injections, self.opts.v_min)?;
        let j = backward_sweep(&net.t, &i)?;
        let v = match self.opts.mode {
            SweepMode::TwoStep => forward_sweep(self.opts.v_ref, &net.t, &net.dz, &j)?,
            SweepMode::SingleEquationTrx => sweep_step_trx(self.opts.v_ref, net.trx(), &i)?,
        };
        let delta = max_delta(&v, &self.v, self.opts.measure);
        self.k += 1;
        self.v.clone_from(&v);
        Ok(SweepState {
            v,
            i,
            j,
            k: self.k,
            delta,
        })
    }
}

impl Iterator for SweepIter<'_> {
    type Item = Result<SweepState>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let out = self.advance();
        self.failed = out.is_err();
        Some(out)
    }
}

/// Validate, order and solve in one call.
pub fn solve(net: &NetworkInput, opts: &SweepOptions) -> Result<SolveResult> {
    PreparedNetwork::new(net)?.solve(opts)
}

mod complex_object {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Rect {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        Rect { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let r = Rect::deserialize(d)?;
        Ok(Complex64::new(r.re, r.im))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeVoltage {
    pub id: String,
    #[serde(with = "complex_object")]
    pub voltage: Complex64,
    pub magnitude: f64,
    pub angle_deg: f64,
}

impl NodeVoltage {
    fn new(id: &str, voltage: Complex64) -> Self {
        Self {
            id: id.to_string(),
            voltage,
            magnitude: voltage.norm(),
            angle_deg: voltage.arg().to_degrees(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFlow {
    pub from: String,
    pub to: String,
    /// Current flowing from `from` to `to`.
    #[serde(with = "complex_object")]
    pub current: Complex64,
    /// `V_from · J*`.
    #[serde(with = "complex_object")]
    pub sending_power: Complex64,
    /// `|J|²·Z`.
    #[serde(with = "complex_object")]
    pub loss: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Root first, then internal numbering order.
    pub voltages: Vec<NodeVoltage>,
    /// In numbering order; entry `b` feeds `voltages[b + 1]`.
    pub branches: Vec<BranchFlow>,
    #[serde(with = "complex_object")]
    pub total_loss: Complex64,
    #[serde(with = "complex_object")]
    pub source_power: Complex64,
    pub iterations: usize,
    /// Maximum voltage change of every iteration.
    pub history: Vec<f64>,
}

impl SolveResult {
    pub fn voltage(&self, id: &str) -> Option<&NodeVoltage> {
        self.voltages.iter().find(|v| v.id == id)
    }

    /// Non-root voltages in internal order, usable as a warm start.
    pub fn voltage_vector(&self) -> Vec<Complex64> {
        self.voltages[1..].iter().map(|v| v.voltage).collect()
    }
}
