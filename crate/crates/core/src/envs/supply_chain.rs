//! Single-warehouse production / distribution problem with Poisson demand.
//!
//! Each period the agent picks how many units to produce at the factory and how
//! many to ship to the warehouse. Order of events within a period:
//!
//! 1. shipment leaves the factory, limited by factory stock, the transport limit
//!    and free warehouse space;
//! 2. production is added to the factory, limited by `max_production` and free
//!    factory space;
//! 3. demand is drawn and served from warehouse stock; unmet demand is lost;
//! 4. reward = `price·sales − production_cost·produced − storage_cost·(stock left
//!    at both sites) − transport_cost·shipped`.
//!
//! The process never terminates by itself; episodes end at the step limit.

use rand::RngCore;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{Environment, Step};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupplyChainSpec {
    pub price: f64,
    pub production_cost: f64,
    pub storage_cost: f64,
    pub transport_cost: f64,
    pub max_production: u32,
    pub factory_capacity: u32,
    pub warehouse_capacity: u32,
    pub transport_limit: u32,
    pub demand_rate: f64,
    /// Carried for completeness of the parameter set; has no effect with one warehouse.
    pub zeta: f64,
    /// `[factory, warehouse]` stock at reset.
    pub initial: [u32; 2],
}

impl Default for SupplyChainSpec {
    fn default() -> Self {
        Self {
            price: 0.5,
            production_cost: 0.1,
            storage_cost: 0.02,
            transport_cost: 0.1,
            max_production: 10,
            factory_capacity: 50,
            warehouse_capacity: 50,
            transport_limit: 10,
            demand_rate: 2.5,
            zeta: 5.0,
            initial: [10, 0],
        }
    }
}

/// Inventory levels `(factory, warehouse)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stock {
    pub factory: u32,
    pub warehouse: u32,
}

/// Quantities realised in one period after clipping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period {
    pub produced: u32,
    pub shipped: u32,
    pub sold: u32,
}

impl SupplyChainSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("price", self.price),
            ("production_cost", self.production_cost),
            ("storage_cost", self.storage_cost),
            ("transport_cost", self.transport_cost),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        if !(self.demand_rate.is_finite() && self.demand_rate > 0.0) {
            return Err(Error::invalid("demand_rate", "must be finite and > 0"));
        }
        if self.initial[0] > self.factory_capacity {
            return Err(Error::invalid("initial", "factory stock exceeds factory_capacity"));
        }
        if self.initial[1] > self.warehouse_capacity {
            return Err(Error::invalid("initial", "warehouse stock exceeds warehouse_capacity"));
        }
        Ok(())
    }

    /// `(produce, ship)` choices per dimension.
    fn choices(&self) -> (usize, usize) {
        (self.max_production as usize + 1, self.transport_limit as usize + 1)
    }

    pub fn num_actions(&self) -> usize {
        let (p, s) = self.choices();
        p * s
    }

    pub fn num_states(&self) -> usize {
        (self.factory_capacity as usize + 1) * (self.warehouse_capacity as usize + 1)
    }

    /// `action = produce · (transport_limit + 1) + ship`.
    pub fn decode_action(&self, action: usize) -> (u32, u32) {
        let (_, s) = self.choices();
        ((action / s) as u32, (action % s) as u32)
    }

    pub fn encode_action(&self, produce: u32, ship: u32) -> usize {
        produce as usize * self.choices().1 + ship as usize
    }

    pub fn encode_state(&self, stock: Stock) -> usize {
        stock.factory as usize * (self.warehouse_capacity as usize + 1) + stock.warehouse as usize
    }

    pub fn decode_state(&self, state: usize) -> Stock {
        let w = self.warehouse_capacity as usize + 1;
        Stock { factory: (state / w) as u32, warehouse: (state % w) as u32 }
    }

    /// Deterministic part of a period given the realised demand.
    pub fn transition(&self, stock: Stock, produce: u32, ship: u32, demand: u32) -> (Stock, Period, f64) {
        let shipped = ship
            .min(stock.factory)
            .min(self.transport_limit)
            .min(self.warehouse_capacity - stock.warehouse);
        let factory = stock.factory - shipped;
        let produced = produce.min(self.max_production).min(self.factory_capacity - factory);
        let factory = factory + produced;
        let warehouse = stock.warehouse + shipped;
        let sold = warehouse.min(demand);
        let warehouse = warehouse - sold;

        let reward = self.price * f64::from(sold)
            - self.production_cost * f64::from(produced)
            - self.storage_cost * f64::from(factory + warehouse)
            - self.transport_cost * f64::from(shipped);
        (Stock { factory, warehouse }, Period { produced, shipped, sold }, reward)
    }

    /// Conservative reward envelope.
    pub fn reward_bounds(&self) -> (f64, f64) {
        let lo = -(self.production_cost * f64::from(self.max_production)
            + self.storage_cost * f64::from(self.factory_capacity + self.warehouse_capacity)
            + self.transport_cost * f64::from(self.transport_limit));
        let hi = self.price * f64::from(self.warehouse_capacity + self.transport_limit);
        (lo, hi)
    }
}

/// Source of per-period demand.
#[derive(Debug, Clone, Copy)]
pub enum DemandModel {
    Poisson(Poisson<f64>),
    /// Always this many units; used to isolate the cost structure.
    Fixed(u32),
}

impl DemandModel {
    pub fn poisson(rate: f64) -> Result<Self> {
        Poisson::new(rate)
            .map(DemandModel::Poisson)
            .map_err(|e| Error::invalid("demand_rate", e.to_string()))
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> u32 {
        match self {
            DemandModel::Poisson(p) => p.sample(rng) as u32,
            DemandModel::Fixed(n) => *n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SupplyChain {
    spec: SupplyChainSpec,
    demand: DemandModel,
    stock: Stock,
}

impl SupplyChain {
    pub fn new(spec: SupplyChainSpec) -> Result<Self> {
        spec.validate()?;
        let demand = DemandModel::poisson(spec.demand_rate)?;
        let stock = Stock { factory: spec.initial[0], warehouse: spec.initial[1] };
        Ok(Self { spec, demand, stock })
    }

    pub fn with_demand(mut self, demand: DemandModel) -> Self {
        self.demand = demand;
        self
    }

    pub fn spec(&self) -> &SupplyChainSpec {
        &self.spec
    }

    pub fn stock(&self) -> Stock {
        self.stock
    }

    pub fn set_stock(&mut self, stock: Stock) -> Result<()> {
        if stock.factory > self.spec.factory_capacity || stock.warehouse > self.spec.warehouse_capacity {
            return Err(Error::invalid("stock", "exceeds capacity"));
        }
        self.stock = stock;
        Ok(())
    }
}

impl Environment for SupplyChain {
    fn num_states(&self) -> usize {
        self.spec.num_states()
    }

    fn num_actions(&self) -> usize {
        self.spec.num_actions()
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.stock = Stock { factory: self.spec.initial[0], warehouse: self.spec.initial[1] };
        self.spec.encode_state(self.stock)
    }

    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<Step> {
        if action >= self.spec.num_actions() {
            return Err(Error::OutOfRange { what: "action", index: action, limit: self.spec.num_actions() });
        }
        let (produce, ship) = self.spec.decode_action(action);
        let demand = self.demand.sample(rng);
        let (stock, _, reward) = self.spec.transition(self.stock, produce, ship, demand);
        self.stock = stock;
        Ok(Step { state: self.spec.encode_state(stock), reward, done: false })
    }

    fn reward_bounds(&self) -> (f64, f64) {
        self.spec.reward_bounds()
    }
}
