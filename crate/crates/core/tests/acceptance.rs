//! Acceptance criteria 1 to 13. Prints one line per criterion and exits
//! nonzero when any of them fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use thdkit::complex::{cech_nerve, rips_nerve, Cover};
use thdkit::cosheaf::{
    check_cosheaf_axiom, is_spatial, verify_mapper_theorem, AxiomWitness, ConstantPrecosheaf, MapperFault, Precosheaf,
    ReebCosheaf,
};
use thdkit::fixtures;
use thdkit::hierarchy::{dbs_clustering, linkage_thd, LinkageMode};
use thdkit::instances::{interval_instance, mapper_theorem_instance, random_precosheaf, tower_instance, TowerInstance};
use thdkit::mapper::{display_hypothesis_holds, mapper_graph_intervals, verify_display_nerve_iso, DisplayFault};
use thdkit::metric::{complete_link_dist, hausdorff, offset_components, single_link_dist};
use thdkit::multiscale::{
    multiscale_thd, multiscale_thd_reference, tower_hypothesis_holds, verify_multi_iso, verify_thd_merge_tree,
    Refinement, TowerFault,
};
use thdkit::thd::{Level, ThdPoset};
use thdkit::topology::{poset_catalog, random_monotone_map, random_poset, FinitePoset};
use thdkit::{PointCloud, SubsetId};

/// Tolerance for distance thresholds in the oracles.
const TOL: f64 = 1e-12;
const SEED: u64 = 20240611;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn euclidean_cloud(r: &mut ChaCha8Rng, n_max: usize, d_max: usize) -> (Vec<Vec<f64>>, PointCloud) {
    let n = r.gen_range(1..=n_max);
    let d = r.gen_range(1..=d_max);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.gen_range(0.0..1.0)).collect()).collect();
    let cloud = PointCloud::from_points(pts.clone()).unwrap();
    (pts, cloud)
}

/// Components of the graph on `0..n` with an edge wherever `joined` holds.
fn graph_components(n: usize, joined: impl Fn(usize, usize) -> bool) -> Vec<BTreeSet<usize>> {
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut block = BTreeSet::new();
        let mut stack = vec![s];
        label[s] = out.len();
        while let Some(x) = stack.pop() {
            block.insert(x);
            for y in 0..n {
                if label[y] == usize::MAX && joined(x, y) {
                    label[y] = out.len();
                    stack.push(y);
                }
            }
        }
        out.push(block);
    }
    out.sort();
    out
}

fn as_sets(p: &[SubsetId]) -> Vec<BTreeSet<usize>> {
    let mut v: Vec<BTreeSet<usize>> = p.iter().map(|b| b.iter().collect()).collect();
    v.sort();
    v
}

fn clouds_1_2() -> Vec<(Vec<Vec<f64>>, PointCloud, f64)> {
    let mut r = rng(1);
    (0..200)
        .map(|_| {
            let (pts, cloud) = euclidean_cloud(&mut r, 64, 3);
            let eps = r.gen_range(0.01..0.35);
            (pts, cloud, eps)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let clouds = clouds_1_2();
    let results: Vec<Result<(), String>> = clouds
        .par_iter()
        .enumerate()
        .map(|(k, (pts, cloud, eps))| {
            let (_, nerve) = cech_nerve(cloud, *eps, 2).map_err(|e| e.to_string())?;
            let oracle = graph_components(pts.len(), |a, b| dist(&pts[a], &pts[b]) <= 2.0 * eps + TOL);
            let nerve_count = nerve.components().len();
            let offsets = offset_components(cloud, &cloud.all(), *eps).map_err(|e| e.to_string())?;
            ensure(nerve_count == offsets.len() && as_sets(&offsets) == oracle, || {
                format!("cloud {k}: nerve {nerve_count}, offsets {}, oracle {}", offsets.len(), oracle.len())
            })
        })
        .collect();
    results.into_iter().collect::<Result<(), _>>()?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(30), || format!("took {took:?}"))?;
    Ok(format!("200 clouds in {:.2}s", took.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let clouds = clouds_1_2();
    let results: Vec<Result<(), String>> = clouds
        .par_iter()
        .enumerate()
        .map(|(k, (pts, cloud, eps))| {
            let (_, cech) = cech_nerve(cloud, *eps, 2).map_err(|e| e.to_string())?;
            let (_, rips) = rips_nerve(cloud, *eps, 2).map_err(|e| e.to_string())?;
            let (_, cech2) = cech_nerve(cloud, 2.0 * eps, 2).map_err(|e| e.to_string())?;
            ensure(cech.is_subcomplex_of(&rips), || format!("cloud {k}: Čech not inside Rips"))?;
            ensure(rips.is_subcomplex_of(&cech2), || format!("cloud {k}: Rips not inside Čech(2eps)"))?;
            let n = pts.len();
            let close = |a: usize, b: usize| dist(&pts[a], &pts[b]) <= 2.0 * eps + TOL;
            let edges: BTreeSet<(usize, usize)> =
                (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).filter(|&(a, b)| close(a, b)).collect();
            let got: BTreeSet<(usize, usize)> = rips.edges().into_iter().collect();
            ensure(got == edges, || format!("cloud {k}: Rips edges differ from the pairwise rule"))
        })
        .collect();
    results.into_iter().collect::<Result<(), _>>()?;
    Ok("200 clouds".into())
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    for k in 0..1000 {
        let (pts, cloud) = euclidean_cloud(&mut r, 30, 3);
        let n = pts.len();
        let pick = |r: &mut ChaCha8Rng| -> Vec<usize> {
            let s: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.4)).collect();
            if s.is_empty() {
                vec![r.gen_range(0..n)]
            } else {
                s
            }
        };
        let (s, t) = (pick(&mut r), pick(&mut r));
        let (ss, ts) = (SubsetId::new(s.clone()), SubsetId::new(t.clone()));
        let single = single_link_dist(&cloud, &ss, &ts).unwrap();
        let haus = hausdorff(&cloud, &ss, &ts).unwrap();
        let complete = complete_link_dist(&cloud, &ss, &ts).unwrap();
        ensure(single <= haus && haus <= complete, || format!("pair {k}: {single} {haus} {complete}"))?;
        ensure(haus == hausdorff(&cloud, &ts, &ss).unwrap(), || format!("pair {k}: not symmetric"))?;
        ensure(hausdorff(&cloud, &ss, &ss).unwrap() == 0.0, || format!("pair {k}: nonzero on equal sets"))?;
        // direct formulas
        let d = |a: usize, b: usize| dist(&pts[a], &pts[b]);
        let directed = |x: &[usize], y: &[usize]| {
            x.iter()
                .map(|&a| y.iter().map(|&b| d(a, b)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        let oracle = directed(&s, &t).max(directed(&t, &s));
        ensure((haus - oracle).abs() <= TOL, || format!("pair {k}: hausdorff {haus} against {oracle}"))?;
    }
    Ok("1000 subset pairs".into())
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[x] = r;
        r
    }
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let clouds: Vec<PointCloud> = (0..100).map(|_| euclidean_cloud(&mut r, 128, 3).1).collect();
    let results: Vec<Result<(), String>> = clouds
        .par_iter()
        .enumerate()
        .map(|(k, cloud)| {
            let n = cloud.len();
            let mut edges: Vec<(f64, usize, usize)> = (0..n)
                .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
                .map(|(a, b)| (cloud.dist(a, b), a, b))
                .collect();
            edges.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut dsu = Dsu((0..n).collect());
            let mut weights = Vec::new();
            for (w, a, b) in edges {
                let (ra, rb) = (dsu.find(a), dsu.find(b));
                if ra != rb {
                    dsu.0[ra] = rb;
                    weights.push(w);
                }
            }
            weights.dedup_by(|a, b| (*a - *b).abs() <= TOL);
            let tree = linkage_thd(cloud, LinkageMode::Single).map_err(|e| e.to_string())?;
            ensure(tree.heights == weights, || format!("cloud {k}: heights differ from Kruskal"))?;
            for &h in &weights {
                let oracle = graph_components(n, |a, b| cloud.dist(a, b) <= h + TOL);
                ensure(as_sets(tree.partition_at(h)) == oracle, || format!("cloud {k}: partition at {h} differs"))?;
            }
            Ok(())
        })
        .collect();
    results.into_iter().collect::<Result<(), _>>()?;
    Ok("100 clouds".into())
}

fn dbs_oracle(cloud: &PointCloud, k: usize, delta: f64, eps: f64) -> (Vec<BTreeSet<usize>>, BTreeSet<usize>) {
    let n = cloud.len();
    // x ~ y when some core cover set has a component holding both
    let mut adjacent = vec![vec![false; n]; n];
    let mut reached = vec![false; n];
    for q in 0..n {
        let hood: Vec<usize> = (0..n).filter(|&p| cloud.dist(p, q) <= delta + TOL).collect();
        if hood.len() < k {
            continue;
        }
        let groups = graph_components(hood.len(), |a, b| cloud.dist(hood[a], hood[b]) <= 2.0 * eps + TOL);
        for g in groups {
            let block: Vec<usize> = (0..n)
                .filter(|&x| g.iter().any(|&c| cloud.dist(hood[c], x) <= eps + TOL))
                .collect();
            for &x in &block {
                reached[x] = true;
                for &y in &block {
                    adjacent[x][y] = true;
                }
            }
        }
    }
    let comps = graph_components(n, |a, b| adjacent[a][b]);
    let clusters = comps.into_iter().filter(|c| reached[*c.iter().next().unwrap()]).collect();
    let outliers = (0..n).filter(|&x| !reached[x]).collect();
    (clusters, outliers)
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let instances: Vec<(PointCloud, usize, f64, f64)> = (0..100)
        .map(|_| {
            let (_, cloud) = euclidean_cloud(&mut r, 200, 3);
            (cloud, r.gen_range(1..=8), r.gen_range(0.02..0.3), r.gen_range(0.02..0.3))
        })
        .collect();
    let results: Vec<Result<(), String>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, (cloud, k, delta, eps))| {
            let got = dbs_clustering(cloud, *k, *delta, *eps).map_err(|e| e.to_string())?;
            let (clusters, outliers) = dbs_oracle(cloud, *k, *delta, *eps);
            ensure(as_sets(&got.clusters) == clusters, || format!("instance {i}: clusters differ"))?;
            ensure(got.outliers.iter().collect::<BTreeSet<_>>() == outliers, || format!("instance {i}: outliers differ"))
        })
        .collect();
    results.into_iter().collect::<Result<(), _>>()?;
    Ok("100 instances".into())
}

/// Every cover of `u` by opens when there are few opens inside it, and
/// otherwise the trivial and basic covers, all covers by two opens and
/// random covers.
fn covers_of(base: &FinitePoset, opens: &[SubsetId], u: &SubsetId, r: &mut ChaCha8Rng) -> Vec<Vec<SubsetId>> {
    let inside: Vec<&SubsetId> = opens.iter().filter(|v| v.is_subset(u) && !v.is_empty()).collect();
    let union_is_u = |c: &[&SubsetId]| c.iter().fold(SubsetId::empty(), |a, b| a.union(b)) == *u;
    let mut out: Vec<Vec<SubsetId>> = Vec::new();
    if inside.len() <= 8 {
        for mask in 1u32..(1 << inside.len()) {
            let c: Vec<&SubsetId> = (0..inside.len()).filter(|k| mask >> k & 1 == 1).map(|k| inside[k]).collect();
            if union_is_u(&c) {
                out.push(c.into_iter().cloned().collect());
            }
        }
        if u.is_empty() {
            out.push(Vec::new());
        }
        return out;
    }
    out.push(vec![u.clone()]);
    out.push(u.iter().map(|p| base.up_set(p).unwrap().into_subset()).collect());
    for a in 0..inside.len() {
        for b in a..inside.len() {
            if union_is_u(&[inside[a], inside[b]]) {
                out.push(vec![inside[a].clone(), inside[b].clone()]);
            }
        }
    }
    for _ in 0..30 {
        let mut c: Vec<SubsetId> = inside.iter().filter(|_| r.gen_bool(0.3)).map(|v| (*v).clone()).collect();
        let covered = c.iter().fold(SubsetId::empty(), |a, b| a.union(b));
        for p in u.difference(&covered).iter() {
            c.push(base.up_set(p).unwrap().into_subset());
        }
        out.push(c);
    }
    out
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let bases: Vec<FinitePoset> = (1..=6).flat_map(poset_catalog).collect();
    let sizes: Vec<usize> = (1..=6).map(|n| poset_catalog(n).len()).collect();
    ensure(sizes == [1, 2, 5, 16, 63, 318], || format!("catalog sizes {sizes:?}"))?;
    let mut r = rng(6);
    let jobs: Vec<(usize, FinitePoset, Vec<usize>, u64)> = bases
        .iter()
        .enumerate()
        .flat_map(|(b, base)| {
            let mut jobs = vec![(b, base.clone(), (0..base.len()).collect(), r.gen())];
            for _ in 0..2 {
                let n = r.gen_range(1..=6);
                let density = r.gen_range(0.0..0.7);
                let domain = random_poset(&mut r, n, density);
                let map = random_monotone_map(&mut r, &domain, base);
                jobs.push((b, domain, map, r.gen()));
            }
            jobs
        })
        .collect();
    let checks: Vec<Result<usize, String>> = jobs
        .par_iter()
        .map(|(b, domain, map, s)| {
            let base = &bases[*b];
            let f = ReebCosheaf::new(domain.clone(), base.clone(), map.clone()).map_err(|e| e.to_string())?;
            let opens: Vec<SubsetId> = base.opens().into_iter().map(|u| u.into_subset()).collect();
            let mut r = ChaCha8Rng::seed_from_u64(*s);
            let mut count = 0;
            for u in &opens {
                let pre: Vec<usize> = (0..domain.len()).filter(|&x| u.contains(map[x])).collect();
                let comps = graph_components(pre.len(), |a, b| {
                    domain.leq(pre[a], pre[b]) || domain.leq(pre[b], pre[a])
                })
                .len();
                for cover in covers_of(base, &opens, u, &mut r) {
                    let c = check_cosheaf_axiom(&f, u, &cover).map_err(|e| e.to_string())?;
                    ensure(c.holds && c.colimit_size == comps && c.value_size == comps, || {
                        format!("Reeb cosheaf over a {}-element base fails on {u}: {c:?}", base.len())
                    })?;
                    count += 1;
                }
            }
            Ok(count)
        })
        .collect();
    let total: usize = checks.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().sum();
    let constant = ConstantPrecosheaf::new(FinitePoset::antichain(2), vec!["a".into(), "b".into()]);
    let c = check_cosheaf_axiom(&constant, &SubsetId::new(vec![0, 1]), &[SubsetId::singleton(0), SubsetId::singleton(1)])
        .map_err(|e| e.to_string())?;
    ensure(
        !c.holds && c.colimit_size == 4 && c.value_size == 2 && matches!(c.witness, Some(AxiomWitness::NotInjective { .. })),
        || format!("constant precosheaf gave {c:?}"),
    )?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(120), || format!("took {took:?}"))?;
    Ok(format!(
        "{} posets, {} Reeb cosheaves, {total} cover checks, 4-vs-2 witness, {:.2}s",
        bases.len(),
        jobs.len(),
        took.as_secs_f64()
    ))
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let instances: Vec<_> = (0..100).map(|_| (mapper_theorem_instance(&mut r, 32), r.gen::<u64>())).collect();
    let max_n = instances.iter().map(|(m, _)| m.cloud.len()).max().unwrap();
    ensure(max_n <= 32, || format!("cloud of {max_n} points"))?;
    let reports: Vec<Result<(), String>> = instances
        .par_iter()
        .enumerate()
        .map(|(k, (m, s))| {
            let rep = verify_mapper_theorem(&m.cosheaf, &m.cover, &m.nerve, 8, *s, None).map_err(|e| e.to_string())?;
            ensure(rep.passed, || format!("instance {k}: {:?}", rep.failures))
        })
        .collect();
    reports.into_iter().collect::<Result<(), _>>()?;
    let mut faults = 0;
    for (k, (m, s)) in instances.iter().enumerate() {
        let rep = verify_mapper_theorem(&m.cosheaf, &m.cover, &m.nerve, 4, *s, Some(MapperFault::RotateMapperTransition))
            .map_err(|e| e.to_string())?;
        if rep.notes.is_empty() {
            ensure(!rep.passed, || format!("fault on instance {k} went unnoticed"))?;
            faults += 1;
        }
        if faults == 10 {
            break;
        }
    }
    ensure(faults > 0, || "no instance with a transition to corrupt".into())?;
    let bases: usize = instances.iter().map(|(m, _)| m.base.len()).max().unwrap();
    Ok(format!("100 instances (largest base {bases}), {faults} faults caught"))
}

fn criterion_8() -> Outcome {
    let circle = fixtures::circle12();
    let (filter, intervals) = fixtures::circle12_cover();
    let g = mapper_graph_intervals(&circle, &filter, &intervals, fixtures::CIRCLE12_EPS, 1).map_err(|e| e.to_string())?;
    ensure(g.vertices.len() == 4 && g.edges.len() == 4, || {
        format!("circle12 mapper {} vertices {} edges", g.vertices.len(), g.edges.len())
    })?;
    let cover = intervals.realize(&filter).map_err(|e| e.to_string())?;
    let rep = verify_display_nerve_iso(&circle, &cover, fixtures::CIRCLE12_EPS, SEED, None).map_err(|e| e.to_string())?;
    ensure(rep.passed, || format!("circle12: {:?}", rep.failures))?;
    let bad = verify_display_nerve_iso(&circle, &cover, fixtures::CIRCLE12_EPS, SEED, Some(DisplayFault::SpuriousEdge))
        .map_err(|e| e.to_string())?;
    ensure(!bad.passed, || "spurious edge went unnoticed".into())?;
    let mut r = rng(8);
    let mut passed = 0;
    let mut skipped = 0;
    while passed < 50 {
        let inst = interval_instance(&mut r, 40);
        if !display_hypothesis_holds(&inst.cloud, &inst.cover, inst.eps) {
            skipped += 1;
            continue;
        }
        let rep = verify_display_nerve_iso(&inst.cloud, &inst.cover, inst.eps, SEED, None).map_err(|e| e.to_string())?;
        ensure(rep.passed, || format!("random instance {passed}: {:?}", rep.failures))?;
        passed += 1;
    }
    Ok(format!("circle12 plus 50 random covers ({skipped} skipped by hypothesis), fault caught"))
}

fn towers(stream: u64, count: usize) -> Vec<TowerInstance> {
    let mut r = rng(stream);
    (0..count)
        .map(|_| {
            let depth = r.gen_range(2..=3);
            tower_instance(&mut r, 24, depth)
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let ts = towers(9, 50);
    for (k, t) in ts.iter().enumerate() {
        ensure(t.refinement.is_strict() && t.cloud.len() <= 24, || format!("tower {k} is not a valid instance"))?;
        let rep = verify_multi_iso(&t.cloud, &t.refinement, t.eps, 20, SEED).map_err(|e| e.to_string())?;
        ensure(rep.passed, || format!("tower {k}: {:?}", rep.failures))?;
    }
    Ok("50 towers".into())
}

fn criterion_10() -> Outcome {
    let blobs = fixtures::two_blobs();
    let (_, tower) = fixtures::two_blobs_tower();
    let rep = verify_thd_merge_tree(&blobs, &tower, fixtures::TWO_BLOBS_EPS, SEED, None).map_err(|e| e.to_string())?;
    ensure(rep.passed, || format!("two_blobs: {:?}", rep.failures))?;
    let mut r = rng(10);
    let mut passed = 0;
    let mut skipped = 0;
    let mut faults = 0;
    while passed < 50 {
        let depth = r.gen_range(2..=3);
        let t = tower_instance(&mut r, 24, depth);
        if !tower_hypothesis_holds(&t.cloud, &t.refinement, t.eps) {
            skipped += 1;
            continue;
        }
        let rep = verify_thd_merge_tree(&t.cloud, &t.refinement, t.eps, SEED, None).map_err(|e| e.to_string())?;
        ensure(rep.passed, || format!("tower {passed}: {:?}", rep.failures))?;
        let bad = verify_thd_merge_tree(&t.cloud, &t.refinement, t.eps, SEED, Some(TowerFault::CorruptReindex))
            .map_err(|e| e.to_string())?;
        if bad.notes.is_empty() {
            ensure(!bad.passed, || format!("tower {passed}: corrupted reindex went unnoticed"))?;
            faults += 1;
        }
        passed += 1;
    }
    ensure(faults > 0, || "no tower could be corrupted".into())?;
    Ok(format!("two_blobs plus 50 towers ({skipped} skipped by hypothesis), {faults} faults caught"))
}

type Key = (usize, Vec<usize>, BTreeSet<usize>);

/// The THD straight from its description: every consistent family of
/// simplices is fixed by its finest member, and each cluster of the common
/// points lands in one cluster of every level.
fn thd_oracle(cloud: &PointCloud, refinement: &Refinement, eps: f64) -> (BTreeSet<Key>, BTreeSet<(Key, Key)>) {
    let (tower, _) = refinement.dedup();
    let depth = tower.len();
    let n = cloud.len();
    let trace = |cover: &Cover, s: &[usize]| -> Vec<usize> {
        (0..n).filter(|&x| s.iter().all(|&i| cover.realize(i).contains(x))).collect()
    };
    let clusters = |points: &[usize]| -> Vec<BTreeSet<usize>> {
        graph_components(points.len(), |a, b| cloud.dist(points[a], points[b]) <= 2.0 * eps + TOL)
            .into_iter()
            .map(|c| c.into_iter().map(|i| points[i]).collect())
            .collect()
    };
    let finest = tower.level(depth - 1);
    let m = finest.len();
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for mask in 1u64..(1u64 << m) {
        let sigma: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let common = trace(finest, &sigma);
        if common.is_empty() {
            continue;
        }
        let mut tuple = vec![sigma];
        for l in (0..depth - 1).rev() {
            let image: BTreeSet<usize> = tuple[0].iter().map(|&j| tower.reindex(l)[j]).collect();
            tuple.insert(0, image.into_iter().collect());
        }
        for alpha in clusters(&common) {
            let mut previous: Option<Key> = None;
            for (l, s) in tuple.iter().enumerate() {
                let block = clusters(&trace(tower.level(l), s))
                    .into_iter()
                    .find(|b| alpha.is_subset(b))
                    .expect("nested clusters");
                let key = (l, s.clone(), block);
                if let Some(p) = previous.take() {
                    edges.insert((key.clone(), p));
                }
                nodes.insert(key.clone());
                previous = Some(key);
            }
        }
    }
    (nodes, edges)
}

fn keys_of(thd: &ThdPoset) -> (BTreeSet<Key>, BTreeSet<(Key, Key)>) {
    let key = |i: usize| -> Key {
        let node = &thd.nodes[i];
        let Level::Index(l) = node.level else { panic!("index levels") };
        (l - 1, node.simplex.clone().unwrap(), node.block.as_ref().unwrap().iter().collect())
    };
    let nodes = (0..thd.len()).map(key).collect();
    let edges = thd.edges.iter().map(|&(c, p)| (key(c), key(p))).collect();
    (nodes, edges)
}

fn criterion_11() -> Outcome {
    let mut all = towers(9, 50);
    all.extend(towers(11, 100));
    let blobs = fixtures::two_blobs();
    let (filter, tower) = fixtures::two_blobs_tower();
    all.push(TowerInstance {
        cloud: blobs,
        filter,
        refinement: tower,
        eps: fixtures::TWO_BLOBS_EPS,
    });
    let results: Vec<Result<(), String>> = all
        .par_iter()
        .enumerate()
        .map(|(k, t)| {
            let fast = multiscale_thd(&t.cloud, &t.refinement, t.eps).map_err(|e| e.to_string())?;
            let slow = multiscale_thd_reference(&t.cloud, &t.refinement, t.eps).map_err(|e| e.to_string())?;
            ensure(fast == slow, || format!("tower {k}: level loop and enumeration differ"))?;
            ensure(keys_of(&fast) == thd_oracle(&t.cloud, &t.refinement, t.eps), || {
                format!("tower {k}: THD differs from the oracle set")
            })
        })
        .collect();
    results.into_iter().collect::<Result<(), _>>()?;
    Ok(format!("{} towers", all.len()))
}

/// Basic opens of the elements poset are nonempty and connected.
fn spatial_oracle(f: &Precosheaf) -> bool {
    let base = f.base();
    let elements: Vec<(usize, usize)> =
        (0..base.len()).flat_map(|p| (0..f.costalk(p).len()).map(move |b| (p, b))).collect();
    let below = |(p, b): (usize, usize), (q, c): (usize, usize)| -> bool {
        base.leq(p, q) && (if p == q { b == c } else { f.trans(p, q)[c] == b })
    };
    elements.iter().all(|&e| {
        let open: Vec<(usize, usize)> = elements.iter().copied().filter(|&x| below(e, x)).collect();
        !open.is_empty()
            && graph_components(open.len(), |a, b| below(open[a], open[b]) || below(open[b], open[a])).len() == 1
    })
}

fn criterion_12() -> Outcome {
    let mut r = rng(12);
    for k in 0..500 {
        let n = r.gen_range(1..=8);
        let density = r.gen_range(0.0..0.7);
        let base = random_poset(&mut r, n, density);
        let f = random_precosheaf(&mut r, &base);
        ensure(is_spatial(&f) && spatial_oracle(&f), || format!("precosheaf {k} is not spatial"))?;
    }
    Ok("500 precosheaves".into())
}

fn criterion_13() -> Outcome {
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_thdkit"))
            .args(["verify", "--seed", "7"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("verify exited with {}", out.status))?;
        Ok(out.stdout)
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, || "reports differ".into())?;
    Ok(format!("two runs, {} identical bytes", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("nerve components", criterion_1),
        ("Rips-Čech sandwich", criterion_2),
        ("Hausdorff chain", criterion_3),
        ("single linkage against Kruskal", criterion_4),
        ("DBS against brute force", criterion_5),
        ("cosheaf axiom", criterion_6),
        ("mapper is pixelization", criterion_7),
        ("display space and nerve", criterion_8),
        ("multiscale limit", criterion_9),
        ("THD is a merge tree", criterion_10),
        ("THD algorithm against enumeration", criterion_11),
        ("spatiality", criterion_12),
        ("deterministic verify", criterion_13),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2}: {name}", k + 1);
        if let Some(f) = &filter {
            if !label.contains(f.as_str()) {
                continue;
            }
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {label} ({detail}) [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {label}: {why} [{secs:.2}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
