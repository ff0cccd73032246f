#![allow(dead_code)]
pub mod fock;
pub mod rings;
