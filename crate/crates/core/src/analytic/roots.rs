//! Root isolation for the composed maps.
//!
//! Each composed map has a fixed point that is known in advance: `x*` for
//! `F∘F` and `H∘H`, 0 for `F∘H` and 1 for `H∘F`. Dividing that root out of
//! `map(x) - x` leaves a residual whose sign changes mark the remaining
//! fixed points, so a root emerging from the known one shows up as a plain
//! sign change. Touching roots, where the residual has a local extremum at
//! zero, are caught by refining every grid extremum that could reach zero.

use serde::Serialize;

use super::MapId;
use crate::error::{Error, Result};
use crate::offspring::OffspringDistribution;

pub const DEFAULT_GRID_RESOLUTION: usize = 10_000;
/// Cells used when only the extremal roots are needed.
pub(crate) const OUTCOME_CELLS: usize = 512;
/// Refined extrema whose depth below zero is smaller than this are reported
/// as touching (double) roots.
const TANGENT_DEPTH: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Root {
    pub x: f64,
    pub tangential: bool,
}

/// Fractions of the scanned interval: a uniform grid plus geometric
/// clusters toward both ends, for maps with features of width `1e-9`.
fn unit_points(cells: usize) -> Vec<f64> {
    let mut u: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    for j in 9..=60 {
        let off = 10f64.powf(-(j as f64) / 4.0);
        u.push(off);
        u.push(1.0 - off);
    }
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

fn bisect(f: &dyn Fn(f64) -> f64, mut p: f64, mut q: f64) -> f64 {
    let p_positive = f(p) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (p + q);
        if mid == p || mid == q {
            break;
        }
        if (f(mid) > 0.0) == p_positive {
            p = mid;
        } else {
            q = mid;
        }
    }
    0.5 * (p + q)
}

/// Minimum of `g` on `[l, r]` by golden-section search.
fn golden_min(g: &dyn Fn(f64) -> f64, mut l: f64, mut r: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = r - INV_PHI * (r - l);
    let mut d = l + INV_PHI * (r - l);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc < gd {
            r = d;
            d = c;
            gd = gc;
            c = r - INV_PHI * (r - l);
            gc = g(c);
        } else {
            l = c;
            c = d;
            gc = gd;
            d = l + INV_PHI * (r - l);
            gd = g(d);
        }
        if r - l <= 1e-15 {
            break;
        }
    }
    if gc < gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Roots of `f` between `a` and `b`, in scanning order from `a` toward `b`.
pub(crate) fn scan_roots(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    cells: usize,
    first_only: bool,
) -> Vec<Root> {
    let mut roots = Vec::new();
    let at = |u: f64| if u == 1.0 { b } else { a + (b - a) * u };

    let refine = |l: f64, r: f64, s: f64, roots: &mut Vec<Root>| {
        let g = |x: f64| s * f(x);
        let (xm, gm) = golden_min(&g, l.min(r), l.max(r));
        if gm > 0.0 {
            return;
        }
        let tangential = gm > -TANGENT_DEPTH;
        if gm == 0.0 {
            roots.push(Root { x: xm, tangential });
            return;
        }
        roots.push(Root { x: bisect(f, l, xm), tangential });
        roots.push(Root { x: bisect(f, xm, r), tangential });
    };
    // A discrete extremum can only hide a crossing if it is within the
    // reach of the local curvature.
    let may_touch = |l: f64, m: f64, r: f64| {
        let s = m.signum();
        let (l, m, r) = (s * l, s * m, s * r);
        l > 0.0 && r > 0.0 && m < l && m <= r && m <= 2.0 * (l - m).max(r - m)
    };

    let points = unit_points(cells);
    let mut zs = Vec::with_capacity(points.len());
    let mut vs = Vec::with_capacity(points.len());
    for (i, &u) in points.iter().enumerate() {
        let z = at(u);
        let v = f(z);
        zs.push(z);
        vs.push(v);
        if v == 0.0 {
            roots.push(Root { x: z, tangential: false });
        } else if i > 0 && vs[i - 1] * v < 0.0 {
            roots.push(Root { x: bisect(f, zs[i - 1], z), tangential: false });
        }
        if i == 1 && vs[0] != 0.0 && may_touch(v, vs[0], v) {
            refine(zs[0], z, vs[0].signum(), &mut roots);
        }
        if i >= 2 && vs[i - 1] != 0.0 && may_touch(vs[i - 2], vs[i - 1], v) {
            refine(zs[i - 2], z, vs[i - 1].signum(), &mut roots);
        }
        if first_only && !roots.is_empty() {
            roots.truncate(1);
            return roots;
        }
    }
    let n = vs.len();
    if n >= 2 && vs[n - 1] != 0.0 && may_touch(vs[n - 2], vs[n - 1], vs[n - 2]) {
        refine(zs[n - 2], zs[n - 1], vs[n - 1].signum(), &mut roots);
    }
    if first_only {
        roots.truncate(1);
    }
    roots
}

/// Residual of `map(x) - x` after dividing out the known fixed point.
pub(crate) fn deflated_residual(dist: &OffspringDistribution, map: MapId) -> Box<dyn Fn(f64) -> f64 + '_> {
    match map {
        MapId::F2 => Box::new(move |x| 1.0 - dist.g_slope(x, dist.f_unchecked(x).clamp(0.0, 1.0))),
        MapId::H2 => Box::new(move |x| 1.0 - dist.g_slope(x, dist.h_unchecked(x).clamp(0.0, 1.0))),
        MapId::FH => Box::new(move |x| {
            dist.g_slope(dist.h_unchecked(x).clamp(0.0, 1.0), 1.0) * dist.g_slope(0.0, x) - 1.0
        }),
        MapId::HF => Box::new(move |x| {
            1.0 - dist.g_slope(0.0, dist.f_unchecked(x).clamp(0.0, 1.0)) * dist.g_slope(x, 1.0)
        }),
        MapId::F => Box::new(move |x| dist.f_unchecked(x) - x),
        MapId::H => Box::new(move |x| dist.h_unchecked(x) - x),
    }
}

/// Unique fixed point of a decreasing map of `[0, 1]` into itself.
pub(crate) fn decreasing_fixed_point(phi: &dyn Fn(f64) -> f64) -> f64 {
    let g = |x: f64| phi(x) - x;
    if g(0.0) <= 0.0 {
        return 0.0;
    }
    if g(1.0) >= 0.0 {
        return 1.0;
    }
    bisect(&g, 0.0, 1.0)
}

/// Fixed points of one composed map with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointSet {
    pub map_id: MapId,
    pub min_fp: f64,
    pub max_fp: f64,
    /// Isolated fixed points, sorted, deduplicated within `1e-9`.
    pub all_fps: Vec<f64>,
    /// Fixed points where the map only touches the diagonal; root counts
    /// near these are unresolved at this resolution.
    pub tangential: Vec<f64>,
    /// Fixed point of `F` (of `H` for `H2` and `H`).
    pub x_star: f64,
    /// Derivative of `F` (resp. `H`) at `x_star`.
    pub slope_at_x_star: f64,
    /// `|slope + 1| < 1e-8`: a triple root at `x_star` that root counting
    /// cannot see.
    pub critical_slope: bool,
    pub grid_resolution: usize,
}

pub fn isolate_fixed_points(
    dist: &OffspringDistribution,
    map: MapId,
    grid_resolution: usize,
) -> Result<FixedPointSet> {
    if grid_resolution < 2 {
        return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
    }
    let uses_h = matches!(map, MapId::H2 | MapId::H);
    let x_star = if uses_h {
        decreasing_fixed_point(&|x| dist.h_unchecked(x))
    } else {
        decreasing_fixed_point(&|x| dist.f_unchecked(x))
    };
    let slope_at_x_star = -dist.g_prime_unchecked(x_star);

    let mut found: Vec<Root> = match map {
        MapId::F | MapId::H => Vec::new(),
        _ => {
            let residual = deflated_residual(dist, map);
            scan_roots(&*residual, 0.0, 1.0, grid_resolution, false)
        }
    };
    let known = match map {
        MapId::FH => 0.0,
        MapId::HF => 1.0,
        _ => x_star,
    };
    found.push(Root { x: known, tangential: false });
    for (end, value) in [(0.0, map.eval(dist, 0.0)), (1.0, map.eval(dist, 1.0))] {
        if value == end {
            found.push(Root { x: end, tangential: false });
        }
    }
    found.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut all_fps: Vec<f64> = Vec::new();
    let mut tangential: Vec<f64> = Vec::new();
    for r in found {
        match all_fps.last() {
            Some(&last) if (r.x - last).abs() <= 1e-9 => {}
            _ => all_fps.push(r.x),
        }
        if r.tangential && tangential.last().is_none_or(|&t| (r.x - t).abs() > 1e-9) {
            tangential.push(r.x);
        }
    }
    Ok(FixedPointSet {
        map_id: map,
        min_fp: all_fps[0],
        max_fp: *all_fps.last().expect("known root present"),
        all_fps,
        tangential,
        x_star,
        slope_at_x_star,
        critical_slope: (slope_at_x_star + 1.0).abs() < 1e-8,
        grid_resolution,
    })
}

/// `(x, map(x) - x)` on `resolution + 1` evenly spaced points of `[0, 1]`.
pub fn curve_samples(
    dist: &OffspringDistribution,
    map: MapId,
    resolution: usize,
) -> Result<Vec<(f64, f64)>> {
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2".into()));
    }
    Ok((0..=resolution)
        .map(|i| {
            let x = i as f64 / resolution as f64;
            (x, map.eval(dist, x) - x)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::{Family, FamilyId};
    use approx::assert_abs_diff_eq;

    fn binary(t: f64) -> OffspringDistribution {
        OffspringDistribution::finite(&[1.0 - t, 0.0, t]).unwrap()
    }

    #[test]
    fn scan_finds_crossings_and_touches() {
        let f = |x: f64| (x - 0.3) * (x - 0.7);
        let r = scan_roots(&f, 0.0, 1.0, 64, false);
        assert_eq!(r.len(), 2);
        assert_abs_diff_eq!(r[0].x, 0.3, epsilon = 1e-14);
        let g = |x: f64| (x - 0.123_456_7).powi(2) + 1e-13;
        assert!(scan_roots(&g, 0.0, 1.0, 64, false).is_empty());
        let h = |x: f64| (x - 0.123_456_7).powi(2) - 1e-12;
        let r = scan_roots(&h, 0.0, 1.0, 64, false);
        assert_eq!(r.len(), 2);
        assert!(r[0].tangential);
        // narrow dip between grid points
        let k = |x: f64| 1.0 - 2.0 * (-((x - 0.5013) / 1e-3).powi(2)).exp();
        assert_eq!(scan_roots(&k, 0.0, 1.0, 100, false).len(), 2);
        // scanning downward returns the largest root first
        let r = scan_roots(&f, 1.0, 0.0, 64, true);
        assert_abs_diff_eq!(r[0].x, 0.7, epsilon = 1e-14);
    }

    #[test]
    fn binary_roots() {
        assert_eq!(isolate_fixed_points(&binary(0.85), MapId::F2, 10_000).unwrap().all_fps.len(), 1);
        let s = isolate_fixed_points(&binary(0.89), MapId::F2, 10_000).unwrap();
        assert_eq!(s.all_fps.len(), 3);
        assert!(s.all_fps[0] < s.x_star && s.x_star < s.all_fps[2]);
    }

    #[test]
    fn exotic1_has_five_roots() {
        let d = Family::new(FamilyId::Exotic1).at(0.985).unwrap();
        let s = isolate_fixed_points(&d, MapId::F2, 10_000).unwrap();
        assert_eq!(s.all_fps.len(), 5, "{:?}", s.all_fps);
    }

    #[test]
    fn exotic3_single_escape_root() {
        let d = Family::new(FamilyId::Exotic3).at(0.0).unwrap();
        let s = isolate_fixed_points(&d, MapId::FH, 10_000).unwrap();
        assert_eq!(s.all_fps.len(), 1);
        assert!(s.all_fps[0].abs() < 1e-9);
    }

    #[test]
    fn curve_rows() {
        let d = binary(0.85);
        let rows = curve_samples(&d, MapId::F2, 4).unwrap();
        assert_eq!(rows.len(), 5);
        let f = |x: f64| 0.85 * (1.0 - x * x);
        assert_abs_diff_eq!(rows[4].1, f(f(1.0)) - 1.0, epsilon = 1e-15);
        let rows = curve_samples(&d, MapId::FH, 10).unwrap();
        assert_abs_diff_eq!(rows[10].1, f(0.15) - 1.0, epsilon = 1e-15);
        assert!(curve_samples(&d, MapId::F2, 1).is_err());
    }
}
