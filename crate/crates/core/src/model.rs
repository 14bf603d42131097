use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lattice::Lattice;

/// Which variables carry spins and which objects carry couplings.
///
/// * `Gauge`: one variable per link, one coupling term per plaquette.
/// * `Ising`: one variable per site, one coupling term per link (bond).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gauge,
    Ising,
}

impl Model {
    pub fn n_vars(self, lat: &Lattice) -> usize {
        match self {
            Model::Gauge => lat.n_links(),
            Model::Ising => lat.n_sites(),
        }
    }

    pub fn n_terms(self, lat: &Lattice) -> usize {
        match self {
            Model::Gauge => lat.n_plaquettes(),
            Model::Ising => lat.n_links(),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Model::Gauge => 0,
            Model::Ising => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Model::Gauge),
            1 => Some(Model::Ising),
            _ => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Gauge => "gauge",
            Model::Ising => "ising",
        })
    }
}
