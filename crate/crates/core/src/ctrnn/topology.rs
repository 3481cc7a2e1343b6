use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which connections exist between neurons. Input neurons never receive
/// connections regardless of the pattern.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    /// Every non-input neuron receives from every neuron, itself included.
    #[default]
    FullRecurrent,
    /// Inputs feed the hidden layer, hidden neurons are recurrent among
    /// themselves and feed the outputs, outputs are recurrent among themselves.
    /// With no hidden layer the inputs feed the outputs directly.
    Layered,
}

/// Neuron layout: inputs occupy `0..n_in`, hidden neurons follow, outputs are
/// the last `n_out` indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
    #[serde(default)]
    pub connectivity: Connectivity,
}

impl Topology {
    pub fn new(n_in: usize, n_hidden: usize, n_out: usize, connectivity: Connectivity) -> Result<Self> {
        let t = Topology {
            n_in,
            n_hidden,
            n_out,
            connectivity,
        };
        t.validate()?;
        Ok(t)
    }

    /// Build from the total neuron count; fails when `n_in + n_out > n`.
    pub fn with_total(n: usize, n_in: usize, n_out: usize, connectivity: Connectivity) -> Result<Self> {
        if n_in + n_out > n {
            return Err(Error::Config(format!(
                "n_in + n_out = {} exceeds neuron count {n}",
                n_in + n_out
            )));
        }
        Self::new(n_in, n - n_in - n_out, n_out, connectivity)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_out == 0 {
            return Err(Error::Config("network needs at least one output neuron".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n_in + self.n_hidden + self.n_out
    }

    pub fn is_input(&self, j: usize) -> bool {
        j < self.n_in
    }

    pub fn is_hidden(&self, j: usize) -> bool {
        j >= self.n_in && j < self.n_in + self.n_hidden
    }

    pub fn is_output(&self, j: usize) -> bool {
        j >= self.n_in + self.n_hidden && j < self.n()
    }

    /// Neuron index of output `k`.
    pub fn output_neuron(&self, k: usize) -> usize {
        self.n_in + self.n_hidden + k
    }

    pub fn output_range(&self) -> std::ops::Range<usize> {
        self.n_in + self.n_hidden..self.n()
    }

    /// Whether the connection `from -> to` exists.
    pub fn allows(&self, from: usize, to: usize) -> bool {
        if self.is_input(to) || from >= self.n() || to >= self.n() {
            return false;
        }
        match self.connectivity {
            Connectivity::FullRecurrent => true,
            Connectivity::Layered => {
                if self.n_hidden == 0 {
                    // inputs -> outputs, outputs recurrent
                    return true;
                }
                if self.is_hidden(to) {
                    self.is_input(from) || self.is_hidden(from)
                } else {
                    self.is_hidden(from) || self.is_output(from)
                }
            }
        }
    }

    /// Number of allowed connections.
    pub fn connection_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.allows(i, j))
            .count()
    }
}
