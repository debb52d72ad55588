//! Bus and branch records for a radial feeder, plus per-unit normalization.
//!
//! Bus powers are kept as separate generated and demanded components so that
//! distributed generation shows up in reports next to the load it offsets.
//! The net injection of a bus is `(P_gen - P_dem) + j(Q_gen - Q_dem)`.

use std::collections::HashSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRecord {
    pub id: String,
    pub p_gen: f64,
    pub q_gen: f64,
    pub p_dem: f64,
    pub q_dem: f64,
    pub is_root: bool,
}

impl BusRecord {
    /// A bus with only demand.
    pub fn load(id: impl Into<String>, p_dem: f64, q_dem: f64) -> Self {
        Self {
            id: id.into(),
            p_gen: 0.0,
            q_gen: 0.0,
            p_dem,
            q_dem,
            is_root: false,
        }
    }

    pub fn root(id: impl Into<String>) -> Self {
        Self {
            is_root: true,
            ..Self::load(id, 0.0, 0.0)
        }
    }

    pub fn with_generation(mut self, p_gen: f64, q_gen: f64) -> Self {
        self.p_gen = p_gen;
        self.q_gen = q_gen;
        self
    }
}

/// Series branch between two buses. Orientation in input data is not trusted;
/// the ordering pass re-orients every branch away from the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub from_bus: String,
    pub to_bus: String,
    pub r: f64,
    pub x: f64,
}

impl BranchRecord {
    pub fn new(from_bus: impl Into<String>, to_bus: impl Into<String>, r: f64, x: f64) -> Self {
        Self {
            from_bus: from_bus.into(),
            to_bus: to_bus.into(),
            r,
            x,
        }
    }

    pub fn impedance(&self) -> Complex64 {
        Complex64::new(self.r, self.x)
    }
}

/// System bases: apparent power in MVA and line voltage in kV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerUnitBases {
    pub s_base: f64,
    pub v_base: f64,
}

impl PerUnitBases {
    pub fn new(s_base: f64, v_base: f64) -> Result<Self> {
        let bases = Self { s_base, v_base };
        bases.check()?;
        Ok(bases)
    }

    fn check(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.s_base) && ok(self.v_base) {
            Ok(())
        } else {
            Err(Error::InvalidBases {
                s_base: self.s_base,
                v_base: self.v_base,
            })
        }
    }

    /// Impedance base in ohm: `v_base² / s_base`.
    pub fn z_base(&self) -> f64 {
        self.v_base * self.v_base / self.s_base
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    PerUnit,
    /// Powers in MW / MVAr, impedances in ohm.
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInput {
    pub buses: Vec<BusRecord>,
    pub branches: Vec<BranchRecord>,
    pub bases: Option<PerUnitBases>,
    pub units: Units,
}

impl NetworkInput {
    pub fn per_unit(buses: Vec<BusRecord>, branches: Vec<BranchRecord>) -> Self {
        Self {
            buses,
            branches,
            bases: None,
            units: Units::PerUnit,
        }
    }

    pub fn root(&self) -> Option<&BusRecord> {
        self.buses.iter().find(|b| b.is_root)
    }

    pub fn bus(&self, id: &str) -> Option<&BusRecord> {
        self.buses.iter().find(|b| b.id == id)
    }

    /// Structural checks that do not need the tree: ids, root flag, finite
    /// values, branch endpoints and impedances. Radiality is checked by
    /// [`crate::ordering::build_ordering`].
    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return Err(Error::NoBuses);
        }
        if let Some(bases) = &self.bases {
            bases.check()?;
        }
        if self.units == Units::Physical && self.bases.is_none() {
            return Err(Error::MissingBases);
        }

        let mut ids = HashSet::with_capacity(self.buses.len());
        for bus in &self.buses {
            if !ids.insert(bus.id.as_str()) {
                return Err(Error::DuplicateBusId(bus.id.clone()));
            }
            for (field, value) in [
                ("p_gen", bus.p_gen),
                ("q_gen", bus.q_gen),
                ("p_dem", bus.p_dem),
                ("q_dem", bus.q_dem),
            ] {
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        item: format!("bus `{}`", bus.id),
                        field,
                    });
                }
            }
        }

        let roots: Vec<String> = self
            .buses
            .iter()
            .filter(|b| b.is_root)
            .map(|b| b.id.clone())
            .collect();
        match roots.len() {
            0 => return Err(Error::NoRoot),
            1 => {}
            _ => return Err(Error::MultipleRoots(roots)),
        }

        // with more buses an empty branch list surfaces as NotConnected
        if self.branches.is_empty() && self.buses.len() == 1 {
            return Err(Error::NoBranches);
        }
        for (index, br) in self.branches.iter().enumerate() {
            for id in [&br.from_bus, &br.to_bus] {
                if !ids.contains(id.as_str()) {
                    return Err(Error::UnknownBus {
                        index,
                        id: id.clone(),
                    });
                }
            }
            if br.from_bus == br.to_bus {
                return Err(Error::SelfLoop {
                    index,
                    id: br.from_bus.clone(),
                });
            }
            for (field, value) in [("r", br.r), ("x", br.x)] {
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        item: format!("branch {index}"),
                        field,
                    });
                }
            }
            if br.r < 0.0 {
                return Err(Error::NegativeResistance { index, r: br.r });
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::ZeroImpedance { index });
            }
        }
        Ok(())
    }
}

/// Net complex power injected at a bus. Loads come out with a negative real part.
pub fn net_injection(bus: &BusRecord) -> Complex64 {
    Complex64::new(bus.p_gen - bus.p_dem, bus.q_gen - bus.q_dem)
}

/// Normalize a network to per-unit. Already per-unit input is returned as is.
pub fn to_per_unit(net: &NetworkInput) -> Result<NetworkInput> {
    match net.units {
        Units::PerUnit => Ok(net.clone()),
        Units::Physical => {
            let bases = net.bases.ok_or(Error::MissingBases)?;
            bases.check()?;
            Ok(scale(
                net,
                Units::PerUnit,
                1.0 / bases.s_base,
                1.0 / bases.z_base(),
            ))
        }
    }
}

/// Inverse of [`to_per_unit`]: express a per-unit network in MW, MVAr and ohm.
pub fn to_physical(net: &NetworkInput, bases: PerUnitBases) -> Result<NetworkInput> {
    bases.check()?;
    match net.units {
        Units::Physical => Ok(net.clone()),
        Units::PerUnit => {
            let mut out = scale(net, Units::Physical, bases.s_base, bases.z_base());
            out.bases = Some(bases);
            Ok(out)
        }
    }
}

fn scale(net: &NetworkInput, units: Units, power: f64, impedance: f64) -> NetworkInput {
    NetworkInput {
        buses: net
            .buses
            .iter()
            .map(|b| BusRecord {
                p_gen: b.p_gen * power,
                q_gen: b.q_gen * power,
                p_dem: b.p_dem * power,
                q_dem: b.q_dem * power,
                ..b.clone()
            })
            .collect(),
        branches: net
            .branches
            .iter()
            .map(|br| BranchRecord {
                r: br.r * impedance,
                x: br.x * impedance,
                ..br.clone()
            })
            .collect(),
        bases: net.bases,
        units,
    }
}
