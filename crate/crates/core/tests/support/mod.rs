#![allow(dead_code)]
pub mod stoi_reference;
