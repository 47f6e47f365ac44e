#![no_std]
extern crate alloc;

pub mod adversary;
pub mod coherent;
pub mod error;
pub mod fidelity;
pub mod fock;
pub mod matching;
pub mod protocol;

pub use error::{Error, Result};
