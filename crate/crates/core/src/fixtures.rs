//! Small bundled samples with the parameters used throughout the tests and
//! the `verify` suite.

use crate::error::{Error, Result};
use crate::io::parse_numeric_csv;
use crate::mapper::{interval_cover, FilterAssignment, IntervalCover};
use crate::metric::PointCloud;
use crate::multiscale::{Refinement, TowerConfig, TowerLevel};

pub const LINE3_CSV: &str = include_str!("../fixtures/line3.csv");
pub const TWO_BLOBS_CSV: &str = include_str!("../fixtures/two_blobs.csv");
pub const CIRCLE12_CSV: &str = include_str!("../fixtures/circle12.csv");
pub const GRID_CSV: &str = include_str!("../fixtures/grid.csv");

pub const NAMES: [&str; 4] = ["line3", "two_blobs", "circle12", "grid"];

/// Clustering scale for the circle mapper graph.
pub const CIRCLE12_EPS: f64 = 0.3;
pub const CIRCLE12_INTERVALS: usize = 3;
pub const CIRCLE12_OVERLAP: f64 = 0.25;

/// Clustering scale for the two-blob tower.
pub const TWO_BLOBS_EPS: f64 = 0.6;

fn parse(text: &str) -> PointCloud {
    PointCloud::from_points(parse_numeric_csv(text).expect("bundled csv")).expect("bundled points")
}

/// `{0, 1, 3}` on a line.
pub fn line3() -> PointCloud {
    parse(LINE3_CSV)
}

/// Two 3x3 grids, one above the other.
pub fn two_blobs() -> PointCloud {
    parse(TWO_BLOBS_CSV)
}

/// Twelve equally spaced points on the unit circle.
pub fn circle12() -> PointCloud {
    parse(CIRCLE12_CSV)
}

/// A 4x4 unit grid.
pub fn grid() -> PointCloud {
    parse(GRID_CSV)
}

pub fn by_name(name: &str) -> Result<PointCloud> {
    match name {
        "line3" => Ok(line3()),
        "two_blobs" => Ok(two_blobs()),
        "circle12" => Ok(circle12()),
        "grid" => Ok(grid()),
        other => Err(Error::InvalidParameter(format!("unknown fixture {other}"))),
    }
}

/// The `y` filter and three overlapping intervals on its range.
pub fn circle12_cover() -> (FilterAssignment, IntervalCover) {
    let cloud = circle12();
    let filter = FilterAssignment::y(&cloud).expect("planar");
    let (lo, hi) = filter.range().expect("nonempty");
    let cover = interval_cover(lo, hi, CIRCLE12_INTERVALS, CIRCLE12_OVERLAP).expect("valid cover");
    (filter, cover)
}

pub fn two_blobs_tower_config() -> TowerConfig {
    TowerConfig {
        levels: vec![
            TowerLevel {
                n_intervals: 1,
                overlap: 0.0,
            },
            TowerLevel {
                n_intervals: 2,
                overlap: 0.1,
            },
        ],
        strict_check: true,
    }
}

/// One interval refined into two on the `y` filter.
pub fn two_blobs_tower() -> (FilterAssignment, Refinement) {
    let filter = FilterAssignment::y(&two_blobs()).expect("planar");
    let tower = Refinement::from_interval_tower(&filter, &two_blobs_tower_config()).expect("strict tower");
    (filter, tower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapper::mapper_graph_intervals;
    use crate::multiscale::multiscale_thd;

    #[test]
    fn fixtures_load() {
        assert_eq!(line3().len(), 3);
        assert_eq!(two_blobs().len(), 18);
        assert_eq!(circle12().len(), 12);
        assert_eq!(grid().len(), 16);
    }

    #[test]
    fn circle_mapper_is_a_cycle() {
        let (filter, cover) = circle12_cover();
        let g = mapper_graph_intervals(&circle12(), &filter, &cover, CIRCLE12_EPS, 1).unwrap();
        assert_eq!((g.vertices.len(), g.edges.len()), (4, 4));
        assert_eq!(g.cycle_rank(), 1);
    }

    #[test]
    fn two_blobs_tower_splits() {
        let (_, tower) = two_blobs_tower();
        let thd = multiscale_thd(&two_blobs(), &tower, TWO_BLOBS_EPS).unwrap();
        let counts: Vec<usize> = thd.levels().iter().map(|l| l.1.len()).collect();
        assert_eq!(counts, vec![1, 2]);
    }
}
