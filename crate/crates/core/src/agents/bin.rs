//! Trash bins: loose waste plus eagerly packed transportable units.

use serde::{Deserialize, Serialize};

use crate::Milliliters;

/// A bin keeps loose waste until a transportable unit's worth accumulates,
/// then packs eagerly while packed slots remain. Waste is tracked in integer
/// milliliters so conservation identities stay exact.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TrashBin {
    /// Index into the scenario's bin sites.
    pub site: usize,
    pub capacity: Milliliters,
    pub loose: Milliliters,
    pub packed_units: u32,
    /// Transportable unit size (the carriable-waste parameter).
    pub unit_size: Milliliters,
}

impl TrashBin {
    pub fn new(site: usize, capacity: Milliliters, unit_size: Milliliters) -> Self {
        assert!(capacity > 0 && unit_size > 0);
        TrashBin { site, capacity, loose: 0, packed_units: 0, unit_size }
    }

    /// Maximum number of packed units the bin can hold.
    pub fn max_slots(&self) -> u32 {
        (self.capacity / self.unit_size) as u32
    }

    pub fn stored(&self) -> Milliliters {
        self.loose + self.packed_units as Milliliters * self.unit_size
    }

    pub fn remaining(&self) -> Milliliters {
        self.capacity - self.stored()
    }

    pub fn can_accept(&self, amount: Milliliters) -> bool {
        self.remaining() >= amount
    }

    /// Full means the bin cannot take another parcel of `lambda`.
    pub fn is_full(&self, lambda: Milliliters) -> bool {
        self.remaining() < lambda
    }

    /// Absorb a deposit and pack eagerly. Callers must check acceptance
    /// first; an over-capacity deposit is a precondition violation.
    pub fn absorb(&mut self, amount: Milliliters) {
        assert!(amount >= 0);
        assert!(self.can_accept(amount), "over-capacity deposit into bin {}", self.site);
        self.loose += amount;
        while self.loose >= self.unit_size && self.packed_units < self.max_slots() {
            self.loose -= self.unit_size;
            self.packed_units += 1;
        }
        debug_assert!(self.stored() <= self.capacity);
    }

    /// Withdraw one packed unit. Returns the total stored waste *before*
    /// withdrawal (the demand signal for pheromone marking) or `None` when no
    /// unit is packed.
    pub fn withdraw_unit(&mut self) -> Option<Milliliters> {
        if self.packed_units == 0 {
            return None;
        }
        let found = self.stored();
        self.packed_units -= 1;
        Some(found)
    }

    /// Empty the bin completely (truck service). Returns the removed volume.
    pub fn empty(&mut self) -> Milliliters {
        let out = self.stored();
        self.loose = 0;
        self.packed_units = 0;
        out
    }
}
