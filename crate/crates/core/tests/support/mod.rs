#![allow(dead_code)]

pub mod oracles;
pub mod props;
pub mod scenarios;
pub mod suites;
