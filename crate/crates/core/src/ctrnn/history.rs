use std::collections::VecDeque;

use crate::{Error, Result, Scalar};

/// Network state between steps: outputs `y` at step `step`, and the weighted
/// sums `x` of the step that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct NetState<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub step: u64,
}

impl<T: Scalar> NetState<T> {
    /// All outputs zero at step 0.
    pub fn rest(n: usize) -> Self {
        NetState {
            x: vec![T::zero(); n],
            y: vec![T::zero(); n],
            step: 0,
        }
    }

    pub fn time(&self, dt: T) -> T {
        T::from_u64(self.step).unwrap_or_else(T::infinity) * dt
    }
}

/// One stored step: clamped outputs `y(τ)`, the weighted sums `x(τ)` computed
/// from them, the external inputs, and the error signals attached to the
/// output neurons at `τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Record<T> {
    pub step: u64,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub inputs: Vec<T>,
    /// One entry per output neuron.
    pub errors: Vec<T>,
}

impl<T: Scalar> Record<T> {
    pub fn with_errors(mut self, errors: &[T]) -> Result<Self> {
        if errors.len() != self.errors.len() {
            return Err(Error::shape("error signals", self.errors.len(), errors.len()));
        }
        self.errors.copy_from_slice(errors);
        Ok(self)
    }
}

/// Bounded window of the most recent records.
#[derive(Clone, Debug, PartialEq)]
pub struct StateHistory<T> {
    capacity: usize,
    records: VecDeque<Record<T>>,
}

impl<T: Scalar> StateHistory<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("history capacity must be at least 1".into()));
        }
        Ok(StateHistory {
            capacity,
            records: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends a record, evicting the oldest one when full. Records must come
    /// in consecutive steps.
    pub fn push(&mut self, record: Record<T>) -> Result<()> {
        if let Some(last) = self.records.back() {
            if record.step != last.step + 1 {
                return Err(Error::Config(format!(
                    "history gap: step {} follows step {}",
                    record.step, last.step
                )));
            }
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Record<T>> {
        self.records.iter()
    }

    pub fn latest(&self) -> Option<&Record<T>> {
        self.records.back()
    }

    pub fn latest_mut(&mut self) -> Option<&mut Record<T>> {
        self.records.back_mut()
    }

    pub(crate) fn to_vec(&self) -> Vec<Record<T>> {
        self.records.iter().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(step: u64) -> Record<f64> {
        Record {
            step,
            x: vec![0.0; 2],
            y: vec![0.0; 2],
            inputs: vec![],
            errors: vec![0.0],
        }
    }

    #[test]
    fn evicts_oldest() {
        let mut h = StateHistory::new(3).unwrap();
        for s in 0..5 {
            h.push(rec(s)).unwrap();
        }
        let steps: Vec<_> = h.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![2, 3, 4]);
    }

    #[test]
    fn rejects_gaps() {
        let mut h = StateHistory::new(3).unwrap();
        h.push(rec(0)).unwrap();
        assert!(h.push(rec(2)).is_err());
        assert_eq!(h.len(), 1);
    }

    #[test]
    fn zero_capacity_is_a_config_error() {
        assert!(StateHistory::<f64>::new(0).is_err());
    }
}
