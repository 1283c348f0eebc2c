//! Random instance generators shared by the `verify` suite and the tests.

use std::collections::BTreeMap;

use rand::Rng;

use crate::complex::{rips_nerve, Cover, Nerve};
use crate::cosheaf::{reeb_cosheaf, Precosheaf};
use crate::mapper::{interval_cover, FilterAssignment, IntervalCover};
use crate::metric::{within, PointCloud};
use crate::multiscale::{random_strict_tower, Refinement};
use crate::subset::SubsetId;
use crate::topology::FinitePoset;
use crate::union_find::DisjointSets;

/// Uniform points in the unit cube, with `1..=n_max` points in dimension
/// `1..=d_max`.
pub fn random_cloud<R: Rng>(rng: &mut R, n_max: usize, d_max: usize) -> PointCloud {
    let n = rng.gen_range(1..=n_max.max(1));
    let d = rng.gen_range(1..=d_max.max(1));
    let points = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    PointCloud::from_points(points).expect("finite coordinates")
}

/// A nonempty random subset of `0..n`.
pub fn random_nonempty_subset<R: Rng>(rng: &mut R, n: usize) -> SubsetId {
    let p = rng.gen_range(0.1..0.9);
    let s: SubsetId = (0..n).filter(|_| rng.gen_bool(p)).collect();
    if s.is_empty() {
        SubsetId::singleton(rng.gen_range(0..n))
    } else {
        s
    }
}

/// A random precosheaf. Each of a few atoms lives on a random down-set of
/// the base, and random gluing relations become active below a random
/// element; `F(↑p)` is the set of classes of atoms alive at `p`.
pub fn random_precosheaf<R: Rng>(rng: &mut R, base: &FinitePoset) -> Precosheaf {
    let n = base.len();
    let atoms = rng.gen_range(0..=4usize);
    let alive: Vec<SubsetId> = (0..atoms)
        .map(|_| {
            let tops: SubsetId = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
            (0..n)
                .filter(|&p| tops.iter().any(|t| base.leq(p, t)))
                .collect()
        })
        .collect();
    let relations: Vec<(usize, usize, usize)> = if atoms < 2 || n == 0 {
        Vec::new()
    } else {
        (0..rng.gen_range(0..=3))
            .map(|_| (rng.gen_range(0..atoms), rng.gen_range(0..atoms), rng.gen_range(0..n)))
            .collect()
    };
    // class of each living atom at each element
    let classes: Vec<BTreeMap<usize, usize>> = (0..n)
        .map(|p| {
            let mut ds = DisjointSets::new(atoms);
            for &(a, b, r) in &relations {
                if base.leq(p, r) {
                    ds.union(a, b);
                }
            }
            let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
            let mut out = BTreeMap::new();
            for a in (0..atoms).filter(|&a| alive[a].contains(p)) {
                let next = ids.len();
                let id = *ids.entry(ds.find(a)).or_insert(next);
                out.insert(a, id);
            }
            out
        })
        .collect();
    let costalks: Vec<Vec<String>> = classes
        .iter()
        .map(|c| {
            let k = c.values().copied().max().map_or(0, |m| m + 1);
            (0..k).map(|i| format!("c{i}")).collect()
        })
        .collect();
    let mut trans = BTreeMap::new();
    for (p, q) in base.strict_pairs() {
        let mut map = vec![0; costalks[q].len()];
        for (a, &cq) in &classes[q] {
            map[cq] = classes[p][a];
        }
        trans.insert((p, q), map);
    }
    Precosheaf::new(base.clone(), costalks, trans).expect("functorial by construction")
}

/// A base space with a cover, its nerve and a Reeb cosheaf, derived from a
/// point cloud.
#[derive(Debug, Clone)]
pub struct MapperInstance {
    pub cloud: PointCloud,
    pub base: FinitePoset,
    pub cosheaf: Precosheaf,
    pub cover: Cover,
    pub nerve: Nerve,
}

/// The base is the face poset of a Rips graph of the cloud. The cosheaf is
/// the Reeb cosheaf of two sheets mapping into it: a Rips graph at a
/// smaller radius, and another one on a random subset of the points. The
/// cover pulls back the Čech balls of the cloud: cover set `i` is the
/// up-closure of the vertices within `eps` of point `i`.
pub fn mapper_theorem_instance<R: Rng>(rng: &mut R, n_max: usize) -> MapperInstance {
    let n = rng.gen_range(2..=n_max.max(2));
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
        .collect();
    let cloud = PointCloud::from_points(points).expect("finite coordinates");
    let scale = 0.6 / (n as f64).sqrt();
    let outer = scale * rng.gen_range(0.5..1.0);
    let eps = scale * rng.gen_range(0.2..0.6);
    let (_, big) = rips_nerve(&cloud, outer, 1).expect("valid radius");
    let faces: Vec<Vec<usize>> = big.simplices().cloned().collect();
    let base = FinitePoset::from_subsets(&faces).expect("face poset");
    let kept: SubsetId = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
    let mut sheets: Vec<Vec<usize>> = Vec::new();
    let mut map = Vec::new();
    for sheet in 0..2 {
        let radius = outer * rng.gen_range(0.3..1.0);
        let (_, small) = rips_nerve(&cloud, radius, 1).expect("valid radius");
        for s in small.simplices() {
            if sheet == 1 && !s.iter().all(|&v| kept.contains(v)) {
                continue;
            }
            map.push(faces.iter().position(|t| t == s).expect("subcomplex"));
            sheets.push(s.iter().map(|&v| v + sheet * n).collect());
        }
    }
    let domain = FinitePoset::from_subsets(&sheets).expect("face poset");
    let cosheaf = reeb_cosheaf(&domain, &base, &map).expect("inclusion is monotone");
    let sets = (0..n)
        .map(|i| {
            let near: SubsetId = (0..faces.len())
                .filter(|&k| faces[k].len() == 1 && within(cloud.dist(i, faces[k][0]), eps))
                .collect();
            base.up_closure(&near)
        })
        .collect();
    let cover = Cover::new(base.len(), sets).expect("every vertex covers itself");
    let nerve = Nerve::witness(&cover, None);
    MapperInstance {
        cloud,
        base,
        cosheaf,
        cover,
        nerve,
    }
}

/// A planar clustered cloud with the `y` filter and a random interval cover.
#[derive(Debug, Clone)]
pub struct IntervalInstance {
    pub cloud: PointCloud,
    pub filter: FilterAssignment,
    pub intervals: IntervalCover,
    pub cover: Cover,
    pub eps: f64,
}

pub fn interval_instance<R: Rng>(rng: &mut R, n_max: usize) -> IntervalInstance {
    let n = rng.gen_range(4..=n_max.max(4));
    let clusters = rng.gen_range(1..=3);
    let cloud = crate::mapper::random_clustered_cloud(rng, n, clusters);
    let filter = FilterAssignment::y(&cloud).expect("planar");
    let (lo, hi) = filter.range().expect("nonempty");
    let intervals = interval_cover(lo, hi, rng.gen_range(1..=4), rng.gen_range(0.0..0.4)).expect("valid cover");
    let cover = intervals.realize(&filter).expect("interval cover is total");
    let eps = rng.gen_range(0.1..0.5);
    IntervalInstance {
        cloud,
        filter,
        intervals,
        cover,
        eps,
    }
}

/// A planar clustered cloud with a random strict tower on the `y` filter.
#[derive(Debug, Clone)]
pub struct TowerInstance {
    pub cloud: PointCloud,
    pub filter: FilterAssignment,
    pub refinement: Refinement,
    pub eps: f64,
}

pub fn tower_instance<R: Rng>(rng: &mut R, n_max: usize, depth: usize) -> TowerInstance {
    let n = rng.gen_range(4..=n_max.max(4));
    let clusters = rng.gen_range(1..=3);
    let cloud = crate::mapper::random_clustered_cloud(rng, n, clusters);
    let filter = FilterAssignment::y(&cloud).expect("planar");
    let refinement = random_strict_tower(rng, &filter, depth).expect("towers on intervals are strict");
    let eps = rng.gen_range(0.1..0.5);
    TowerInstance {
        cloud,
        filter,
        refinement,
        eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosheaf::{is_spatial, verify_mapper_theorem};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_precosheaves_are_functorial() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let base = crate::topology::random_poset(&mut rng, 5, 0.4);
            let f = random_precosheaf(&mut rng, &base);
            f.check_functor_laws().unwrap();
            assert!(is_spatial(&f));
        }
    }

    #[test]
    fn mapper_instances_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3 {
            let m = mapper_theorem_instance(&mut rng, 16);
            let r = verify_mapper_theorem(&m.cosheaf, &m.cover, &m.nerve, 5, 0, None).unwrap();
            assert!(r.passed, "{:?}", r.failures);
        }
    }
}
