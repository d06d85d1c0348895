//! Reading and writing trees and results.

pub mod galileo;
pub mod results;
