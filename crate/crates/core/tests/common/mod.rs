#![allow(dead_code)]

pub mod brute;

use gwgames::analytic::{isolate_fixed_points, MapId};
use gwgames::OffspringDistribution;

/// Every root `x` of `composed(x) = x` has `inner(x)` among the roots of
/// `swapped`, the composition in the other order.
pub fn roots_paired(dist: &OffspringDistribution, composed: MapId, swapped: MapId, inner: MapId) -> Result<(), String> {
    let here = isolate_fixed_points(dist, composed, 10_000).map_err(|e| e.to_string())?;
    let there = isolate_fixed_points(dist, swapped, 10_000).map_err(|e| e.to_string())?;
    for &x in &here.all_fps {
        let y = inner.eval(dist, x);
        if !there.all_fps.iter().any(|&r| (r - y).abs() < 1e-6) {
            return Err(format!("{dist}: {composed} root {x} maps to {y}, not among {:?}", there.all_fps));
        }
    }
    Ok(())
}

/// The four pairings between the composed maps.
pub fn all_roots_paired(dist: &OffspringDistribution) -> Result<(), String> {
    roots_paired(dist, MapId::F2, MapId::F2, MapId::F)?;
    roots_paired(dist, MapId::H2, MapId::H2, MapId::H)?;
    roots_paired(dist, MapId::FH, MapId::HF, MapId::H)?;
    roots_paired(dist, MapId::HF, MapId::FH, MapId::F)
}
