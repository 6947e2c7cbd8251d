use std::fmt;

use serde::{Deserialize, Serialize};

use super::fleet::{mcr_threshold, roundtrip_efficiency, DieselFleet};
use super::PmsError;

/// Operating state, numbered from 1 in ladder order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PmsState(pub u8);

impl PmsState {
    pub const STORAGE_ONLY: PmsState = PmsState(1);

    pub fn number(self) -> u8 {
        self.0
    }

    fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for PmsState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMode {
    /// No diesel unit committed.
    StorageOnly,
    /// One unit run towards rating, surplus into storage.
    McrCharge,
    /// Committed units follow the deficit.
    Load,
    /// Every unit at its boosted rating; any remainder is shed.
    Overload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDef {
    pub mode: StateMode,
    /// Indices into the fleet.
    pub units: Vec<usize>,
    /// Largest deficit the state is meant to cover, kW.
    pub capability: f64,
}

/// Capability ladder of operating states over one fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTable {
    fleet: DieselFleet,
    states: Vec<StateDef>,
    threshold: f64,
}

impl StateTable {
    /// Ladder built from the fleet: storage only, MCR charging with the
    /// smallest unit, then every commitment set that strictly raises the
    /// capability (fewer units and lower indices first on ties), then overload.
    pub fn ladder(fleet: DieselFleet, eta_ch: f64, eta_dis: f64) -> Result<Self, PmsError> {
        fleet.validate()?;
        if fleet.units.is_empty() {
            return Self::from_sets(fleet, vec![(StateMode::StorageOnly, vec![])], 0.0);
        }
        let threshold = mcr_threshold(&fleet, roundtrip_efficiency(&fleet, eta_ch, eta_dis)?)?;
        let mut subsets = fleet.subsets();
        subsets.sort_by(|a, b| fleet.capability(a).total_cmp(&fleet.capability(b)).then(a.len().cmp(&b.len())).then(a.cmp(b)));
        let smallest = subsets[0].clone();
        let mut sets = vec![(StateMode::StorageOnly, vec![])];
        // When the crossing reaches the rating, the MCR state replaces the plain single-unit state.
        let mut top = threshold.min(fleet.capability(&smallest));
        sets.push((StateMode::McrCharge, smallest));
        for set in subsets {
            let cap = fleet.capability(&set);
            if cap > top {
                top = cap;
                sets.push((StateMode::Load, set));
            }
        }
        let all: Vec<usize> = (0..fleet.units.len()).collect();
        sets.push((StateMode::Overload, all));
        Self::from_sets(fleet, sets, threshold)
    }

    /// Explicit table; capabilities must increase strictly along the list.
    pub fn from_sets(fleet: DieselFleet, sets: Vec<(StateMode, Vec<usize>)>, threshold: f64) -> Result<Self, PmsError> {
        fleet.validate()?;
        if sets.is_empty() || sets.len() > u8::MAX as usize {
            return Err(PmsError::InvalidConfig("state table needs between 1 and 255 states".into()));
        }
        let mut states = Vec::with_capacity(sets.len());
        for (k, (mode, mut units)) in sets.into_iter().enumerate() {
            units.sort_unstable();
            units.dedup();
            if let Some(&bad) = units.iter().find(|&&i| i >= fleet.units.len()) {
                return Err(PmsError::InvalidConfig(format!("state {}: unit index {bad} is not in the fleet", k + 1)));
            }
            let empty_ok = mode == StateMode::StorageOnly;
            if empty_ok != units.is_empty() {
                return Err(PmsError::InvalidConfig(format!("state {}: only the storage-only state has no units", k + 1)));
            }
            let rating = fleet.capability(&units);
            let capability = match mode {
                StateMode::StorageOnly => 0.0,
                StateMode::McrCharge => threshold.min(rating),
                StateMode::Load => rating,
                StateMode::Overload => rating * (1.0 + fleet.boost_fraction),
            };
            states.push(StateDef { mode, units, capability });
        }
        if states[0].mode != StateMode::StorageOnly {
            return Err(PmsError::InvalidConfig("state 1 must be storage only".into()));
        }
        for k in 1..states.len() {
            if states[k].capability <= states[k - 1].capability {
                return Err(PmsError::InvalidConfig(format!(
                    "capability must increase strictly: state {} ({} kW) does not exceed state {} ({} kW)",
                    k + 1,
                    states[k].capability,
                    k,
                    states[k - 1].capability
                )));
            }
            if states[k].mode == StateMode::Overload && k + 1 != states.len() {
                return Err(PmsError::InvalidConfig("the overload state must be last".into()));
            }
        }
        Ok(Self { fleet, states, threshold })
    }

    pub fn fleet(&self) -> &DieselFleet {
        &self.fleet
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = (PmsState, &StateDef)> {
        self.states.iter().enumerate().map(|(k, d)| (PmsState(k as u8 + 1), d))
    }

    pub fn get(&self, state: PmsState) -> &StateDef {
        &self.states[state.index()]
    }

    pub fn contains(&self, state: PmsState) -> bool {
        state.0 >= 1 && state.index() < self.states.len()
    }

    pub fn last(&self) -> PmsState {
        PmsState(self.states.len() as u8)
    }

    /// Lowest state whose capability covers `p_kw`, or the last state.
    pub fn lowest_covering(&self, p_kw: f64) -> PmsState {
        let k = self.states.iter().position(|d| d.capability >= p_kw).unwrap_or(self.states.len() - 1);
        PmsState(k as u8 + 1)
    }

    /// Human-readable label such as `6 {G1,G3}`.
    pub fn label(&self, state: PmsState) -> String {
        let def = self.get(state);
        let ids: Vec<&str> = def.units.iter().map(|&i| self.fleet.units[i].id.as_str()).collect();
        let mode = match def.mode {
            StateMode::StorageOnly => "storage only".to_string(),
            StateMode::McrCharge => format!("MCR charge {{{}}}", ids.join(",")),
            StateMode::Load => format!("{{{}}}", ids.join(",")),
            StateMode::Overload => format!("overload {{{}}}", ids.join(",")),
        };
        format!("{state} {mode}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_ladder() {
        let table = StateTable::ladder(DieselFleet::reference(), 0.87, 0.86).unwrap();
        assert_eq!(table.len(), 8);
        let expected: [(&[usize], f64); 6] =
            [(&[0], 1500.0), (&[2], 2000.0), (&[0, 1], 3000.0), (&[0, 2], 3500.0), (&[0, 1, 2], 5000.0), (&[0, 1, 2], 6500.0)];
        for (k, (units, cap)) in expected.iter().enumerate() {
            let def = table.get(PmsState(k as u8 + 3));
            assert_eq!(def.units, *units);
            assert!((def.capability - cap).abs() < 1e-9, "state {}: {}", k + 3, def.capability);
        }
        assert_eq!(table.get(PmsState(2)).mode, StateMode::McrCharge);
        assert_eq!(table.get(PmsState(2)).units, vec![0]);
        assert_eq!(table.label(PmsState(6)), "6 {G1,G3}");
        assert!(table.states().zip(table.states().skip(1)).all(|((_, a), (_, b))| a.capability < b.capability));
    }

    #[test]
    fn lowest_covering_state() {
        let table = StateTable::ladder(DieselFleet::reference(), 0.87, 0.86).unwrap();
        assert_eq!(table.lowest_covering(0.0), PmsState(1));
        assert_eq!(table.lowest_covering(3300.0), PmsState(6));
        assert_eq!(table.lowest_covering(5000.0), PmsState(7));
        assert_eq!(table.lowest_covering(5001.0), PmsState(8));
        assert_eq!(table.lowest_covering(1e9), PmsState(8));
    }

    #[test]
    fn explicit_tables_are_checked() {
        let fleet = DieselFleet::reference();
        let bad = vec![(StateMode::StorageOnly, vec![]), (StateMode::Load, vec![2]), (StateMode::Load, vec![0])];
        assert!(StateTable::from_sets(fleet.clone(), bad, 400.0).is_err());
        let unknown = vec![(StateMode::StorageOnly, vec![]), (StateMode::Load, vec![7])];
        assert!(StateTable::from_sets(fleet.clone(), unknown, 400.0).is_err());
        let ok = vec![(StateMode::StorageOnly, vec![]), (StateMode::Load, vec![0, 1, 2])];
        assert_eq!(StateTable::from_sets(fleet, ok, 400.0).unwrap().len(), 2);
    }
}
