//! Text snapshot of an occupancy map.
//!
//! ```text
//! stage-map 1
//! origin <ox> <oy> <oz>
//! dims <nx> <ny> <nz>
//! resolution <r>
//! <linear index> <F|O>
//! ...
//! ```
//!
//! Only known voxels are listed, in increasing linear index
//! (`x + nx * (y + ny * z)`). Unlisted voxels are Unknown. Frontier flags
//! are not stored.

use std::fmt::Write;

use super::{GridSpec, OccupancyMap, VoxelState};
use crate::error::{Error, Result};
use crate::geometry::Point;

const MAGIC: &str = "stage-map 1";

pub fn write_map_dump(map: &OccupancyMap) -> String {
    let g = map.grid();
    let o = g.origin();
    let d = g.dims();
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "origin {} {} {}", o.x, o.y, o.z).unwrap();
    writeln!(out, "dims {} {} {}", d[0], d[1], d[2]).unwrap();
    writeln!(out, "resolution {}", g.resolution()).unwrap();
    for (i, s) in map.cells().iter().enumerate() {
        match s {
            VoxelState::Unknown => {}
            VoxelState::Free => writeln!(out, "{i} F").unwrap(),
            VoxelState::Occupied => writeln!(out, "{i} O").unwrap(),
        }
    }
    out
}

pub fn parse_map_dump(text: &str) -> Result<OccupancyMap> {
    const SRC: &str = "map dump";
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut header = |key: &str| -> Result<(usize, Vec<String>)> {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::parse(SRC, 0, format!("missing `{key}` header")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::parse(SRC, n, format!("expected `{key}`")));
        }
        Ok((n, parts.map(str::to_string).collect()))
    };
    let (n, magic) = header("stage-map")?;
    if magic != ["1"] {
        return Err(Error::parse(SRC, n, "unsupported version"));
    }
    let (n, o) = header("origin")?;
    let origin = parse_floats::<3>(&o).ok_or_else(|| Error::parse(SRC, n, "bad origin"))?;
    let (n, d) = header("dims")?;
    let dims = parse_usizes::<3>(&d).ok_or_else(|| Error::parse(SRC, n, "bad dims"))?;
    let (n, r) = header("resolution")?;
    let res = parse_floats::<1>(&r).ok_or_else(|| Error::parse(SRC, n, "bad resolution"))?[0];
    let grid = GridSpec::new(Point::new(origin[0], origin[1], origin[2]), dims, res)
        .map_err(|e| Error::parse(SRC, n, e.to_string()))?;
    let mut map = OccupancyMap::new(grid);
    let mut last: Option<usize> = None;
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(idx), Some(state), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(SRC, n, "expected `<index> <F|O>`"));
        };
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::parse(SRC, n, "bad voxel index"))?;
        if idx >= grid.len() {
            return Err(Error::parse(SRC, n, "voxel index out of range"));
        }
        if last.is_some_and(|l| idx <= l) {
            return Err(Error::parse(SRC, n, "voxel indices must be increasing"));
        }
        last = Some(idx);
        let s = match state {
            "F" => VoxelState::Free,
            "O" => VoxelState::Occupied,
            _ => return Err(Error::parse(SRC, n, "state must be F or O")),
        };
        map.set_state(grid.coord_from_linear(idx), s)?;
    }
    Ok(map)
}

pub(crate) fn parse_floats<const N: usize>(parts: &[String]) -> Option<[f64; N]> {
    if parts.len() != N {
        return None;
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().ok().filter(|v: &f64| v.is_finite())?;
    }
    Some(out)
}

pub(crate) fn parse_usizes<const N: usize>(parts: &[String]) -> Option<[usize; N]> {
    if parts.len() != N {
        return None;
    }
    let mut out = [0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().ok()?;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel_map::VoxelCoord;

    #[test]
    fn dump_roundtrip_and_layout() {
        let grid = GridSpec::new(Point::new(-1.0, 0.5, 0.0), [3, 2, 2], 0.25).unwrap();
        let mut map = OccupancyMap::new(grid);
        map.set_state(VoxelCoord::new(1, 0, 0), VoxelState::Free)
            .unwrap();
        map.set_state(VoxelCoord::new(2, 1, 1), VoxelState::Occupied)
            .unwrap();
        let text = write_map_dump(&map);
        assert_eq!(
            text,
            "stage-map 1\norigin -1 0.5 0\ndims 3 2 2\nresolution 0.25\n1 F\n11 O\n"
        );
        let back = parse_map_dump(&text).unwrap();
        assert_eq!(back.cells(), map.cells());
        assert_eq!(write_map_dump(&back), text);
    }

    #[test]
    fn dump_rejects_garbage() {
        assert!(parse_map_dump("").is_err());
        assert!(parse_map_dump("stage-map 2\n").is_err());
        let base = "stage-map 1\norigin 0 0 0\ndims 2 2 2\nresolution 1\n";
        assert!(parse_map_dump(&format!("{base}9 F\n")).is_err());
        assert!(parse_map_dump(&format!("{base}1 X\n")).is_err());
        assert!(parse_map_dump(&format!("{base}3 F\n1 F\n")).is_err());
        match parse_map_dump(&format!("{base}1 F\nzz\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
