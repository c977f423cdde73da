//! Environments with non-replenishable resources.

mod gridworld;
mod mountain_car;

pub use gridworld::{CHAIN_CONSUME, CHAIN_LEFT, CHAIN_RIGHT, CHAIN_STAY, gridworld_step, GridStep, GridworldSpec};
pub use mountain_car::{
    electricity_cost, EnvConfig, MountainCar, MountainCarPhysics, Variant, DEFAULT_ELECTRICITY, DEFAULT_GOODS,
};
