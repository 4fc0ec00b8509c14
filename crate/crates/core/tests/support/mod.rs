#![allow(dead_code)]

pub mod adversarial;
pub mod fixtures;
pub mod oracle;
pub mod tables;
