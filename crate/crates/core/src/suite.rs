//! The one-shot verification suite behind `thdkit verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{cech_nerve, rips_nerve};
use crate::cosheaf::{
    check_cosheaf_axiom, is_spatial, verify_mapper_theorem, AxiomWitness, ConstantPrecosheaf, Cosections,
    MapperFault, ReebCosheaf,
};
use crate::error::Result;
use crate::fixtures;
use crate::hierarchy::{dbs_clustering, linkage_thd, LinkageMode};
use crate::instances::{
    interval_instance, mapper_theorem_instance, random_cloud, random_nonempty_subset, random_precosheaf,
    tower_instance,
};
use crate::mapper::{display_hypothesis_holds, mapper_graph_intervals, verify_display_nerve_iso, DisplayFault};
use crate::metric::{complete_link_dist, hausdorff, offset_components, single_link_dist, within, PointCloud};
use crate::multiscale::{
    check_hat_eta, multiscale_thd, multiscale_thd_reference, tower_hypothesis_holds, verify_multi_iso,
    verify_thd_merge_tree, TowerFault,
};
use crate::subset::{canonical_partition, Partition, SubsetId};
use crate::topology::{poset_catalog, random_monotone_map, random_poset, FinitePoset};
use crate::verify::Report;

/// Consolidated outcome of [`run_suite`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub reports: Vec<Report>,
}

fn stream(seed: u64, section: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(section);
    rng
}

/// Runs every verifier and invariant check. `trials` scales the number of
/// random instances; the output depends only on `seed` and `trials`.
pub fn run_suite(seed: u64, trials: usize) -> Result<SuiteReport> {
    let trials = trials.max(1);
    let sections: Vec<fn(u64, usize) -> Result<Report>> = vec![
        fixture_checks,
        nerve_components,
        rips_cech_sandwich,
        hausdorff_chain,
        single_linkage_kruskal,
        dbs_reference,
        cosheaf_axiom,
        mapper_theorem,
        display_nerve_iso,
        multi_iso,
        thd_merge_tree,
        multiscale_reference,
        hat_eta,
        spatiality,
    ];
    let reports = sections
        .iter()
        .enumerate()
        .map(|(k, run)| run(seed.wrapping_add(k as u64), trials))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        seed,
        trials,
        passed: reports.iter().all(|r| r.passed),
        reports,
    })
}

fn fixture_checks(seed: u64, _trials: usize) -> Result<Report> {
    let mut r = Report::new("fixtures", seed);
    let line = fixtures::line3();
    let single = linkage_thd(&line, LinkageMode::Single)?;
    r.check(single.heights == [1.0, 2.0], || format!("line3 single heights {:?}", single.heights));
    let newick = single.thd.to_newick(|i| i.to_string())?;
    r.check(newick == "((0:1,1:1):1,2:2);", || format!("line3 newick {newick}"));
    let complete = linkage_thd(&line, LinkageMode::Complete)?;
    r.check(complete.heights == [1.0, 3.0], || format!("line3 complete heights {:?}", complete.heights));

    let (filter, intervals) = fixtures::circle12_cover();
    let circle = fixtures::circle12();
    let g = mapper_graph_intervals(&circle, &filter, &intervals, fixtures::CIRCLE12_EPS, 1)?;
    r.check(g.vertices.len() == 4 && g.edges.len() == 4, || {
        format!("circle12 mapper has {} vertices and {} edges", g.vertices.len(), g.edges.len())
    });

    let blobs = fixtures::two_blobs();
    let (_, tower) = fixtures::two_blobs_tower();
    let thd = multiscale_thd(&blobs, &tower, fixtures::TWO_BLOBS_EPS)?;
    let counts: Vec<usize> = thd.levels().iter().map(|l| l.1.len()).collect();
    r.check(counts == [1, 2], || format!("two_blobs THD level sizes {counts:?}"));

    let grid = fixtures::grid();
    for (eps, expected) in [(0.5, 1), (0.49, 16)] {
        let (cover, nerve) = cech_nerve(&grid, eps, 2)?;
        let got = crate::complex::cover_clustering(&cover, &nerve).len();
        r.check(got == expected, || format!("grid at eps {eps} has {got} clusters"));
    }
    Ok(r)
}

/// Components of the graph joining points at distance at most `2 eps`.
fn bfs_components(cloud: &PointCloud, eps: f64) -> Partition {
    let n = cloud.len();
    let mut seen = vec![false; n];
    let mut blocks = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = vec![s];
        let mut block = Vec::new();
        while let Some(x) = queue.pop() {
            block.push(x);
            for y in 0..n {
                if !seen[y] && within(cloud.dist(x, y), 2.0 * eps) {
                    seen[y] = true;
                    queue.push(y);
                }
            }
        }
        blocks.push(SubsetId::new(block));
    }
    canonical_partition(blocks)
}

fn random_clouds(seed: u64, count: usize) -> Vec<(PointCloud, f64)> {
    let mut rng = stream(seed, 1);
    (0..count)
        .map(|_| {
            let cloud = random_cloud(&mut rng, 64, 3);
            let eps = rng.gen_range(0.01..0.3);
            (cloud, eps)
        })
        .collect()
}

fn merge_all(name: &str, seed: u64, parts: Vec<Report>) -> Report {
    let mut r = Report::new(name, seed);
    for p in parts {
        r.absorb(p);
    }
    r
}

fn nerve_components(seed: u64, trials: usize) -> Result<Report> {
    let parts = random_clouds(seed, trials)
        .par_iter()
        .enumerate()
        .map(|(k, (cloud, eps))| -> Result<Report> {
            let mut r = Report::new(format!("cloud {k}"), seed);
            let (_, nerve) = cech_nerve(cloud, *eps, 2)?;
            let expected = bfs_components(cloud, *eps);
            let direct = offset_components(cloud, &cloud.all(), *eps)?;
            let got = nerve.components().len();
            r.check(got == expected.len() && direct == expected, || {
                format!("{got} nerve components, {} offset components, {} expected", direct.len(), expected.len())
            });
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all("nerve_components", seed, parts))
}

fn rips_cech_sandwich(seed: u64, trials: usize) -> Result<Report> {
    let parts = random_clouds(seed, trials)
        .par_iter()
        .enumerate()
        .map(|(k, (cloud, eps))| -> Result<Report> {
            let mut r = Report::new(format!("cloud {k}"), seed);
            let (_, cech) = cech_nerve(cloud, *eps, 2)?;
            let (_, rips) = rips_nerve(cloud, *eps, 2)?;
            let (_, cech2) = cech_nerve(cloud, 2.0 * eps, 2)?;
            r.check(cech.is_subcomplex_of(&rips), || "Čech(eps) is not inside Rips(eps)".into());
            r.check(rips.is_subcomplex_of(&cech2), || "Rips(eps) is not inside Čech(2 eps)".into());
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all("rips_cech_sandwich", seed, parts))
}

fn hausdorff_chain(seed: u64, trials: usize) -> Result<Report> {
    let mut r = Report::new("hausdorff_chain", seed);
    let mut rng = stream(seed, 3);
    for _ in 0..trials * 10 {
        let cloud = random_cloud(&mut rng, 24, 3);
        let s = random_nonempty_subset(&mut rng, cloud.len());
        let t = random_nonempty_subset(&mut rng, cloud.len());
        let single = single_link_dist(&cloud, &s, &t)?;
        let haus = hausdorff(&cloud, &s, &t)?;
        let complete = complete_link_dist(&cloud, &s, &t)?;
        r.check(single <= haus && haus <= complete, || {
            format!("single {single}, hausdorff {haus}, complete {complete} on {s} and {t}")
        });
        r.check(haus == hausdorff(&cloud, &t, &s)?, || format!("hausdorff is not symmetric on {s} and {t}"));
        r.check(hausdorff(&cloud, &s, &s)? == 0.0, || format!("hausdorff of {s} with itself is not zero"));
    }
    Ok(r)
}

/// Distinct minimum spanning tree weights, by Kruskal's algorithm.
fn kruskal_heights(cloud: &PointCloud) -> Vec<f64> {
    let n = cloud.len();
    let mut edges: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .map(|(a, b)| (cloud.dist(a, b), a, b))
        .collect();
    edges.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut label: Vec<usize> = (0..n).collect();
    let mut weights: Vec<f64> = Vec::new();
    for (w, a, b) in edges {
        let (la, lb) = (label[a], label[b]);
        if la != lb {
            for l in label.iter_mut() {
                if *l == lb {
                    *l = la;
                }
            }
            if weights.last().map_or(true, |&last| !within(w, last)) {
                weights.push(w);
            }
        }
    }
    weights
}

fn single_linkage_kruskal(seed: u64, trials: usize) -> Result<Report> {
    let mut rng = stream(seed, 4);
    let clouds: Vec<PointCloud> = (0..trials).map(|_| random_cloud(&mut rng, 128, 3)).collect();
    let parts = clouds
        .par_iter()
        .enumerate()
        .map(|(k, cloud)| -> Result<Report> {
            let mut r = Report::new(format!("cloud {k}"), seed);
            let tree = linkage_thd(cloud, LinkageMode::Single)?;
            let expected = kruskal_heights(cloud);
            r.check(tree.heights == expected, || format!("heights {:?} against {expected:?}", tree.heights));
            for &h in &expected {
                let got = tree.partition_at(h);
                let oracle = bfs_components(cloud, h / 2.0);
                r.check(*got == oracle, || format!("partition at height {h} differs"));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all("single_linkage_kruskal", seed, parts))
}

/// Density-based clustering straight from the definition.
fn dbs_brute_force(cloud: &PointCloud, k: usize, delta: f64, eps: f64) -> (Partition, SubsetId) {
    let n = cloud.len();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for q in 0..n {
        let near: Vec<usize> = (0..n).filter(|&p| within(cloud.dist(p, q), delta)).collect();
        if near.len() < k {
            continue;
        }
        // components of the eps-offset of the neighbourhood
        let mut group = vec![usize::MAX; near.len()];
        for s in 0..near.len() {
            if group[s] != usize::MAX {
                continue;
            }
            group[s] = s;
            let mut queue = vec![s];
            while let Some(a) = queue.pop() {
                for b in 0..near.len() {
                    if group[b] == usize::MAX && within(cloud.dist(near[a], near[b]), 2.0 * eps) {
                        group[b] = s;
                        queue.push(b);
                    }
                }
            }
        }
        for g in 0..near.len() {
            let block: Vec<usize> = (0..n)
                .filter(|&x| (0..near.len()).any(|c| group[c] == g && within(cloud.dist(near[c], x), eps)))
                .collect();
            if block.is_empty() {
                continue;
            }
            let fresh = next;
            next += 1;
            let olds: Vec<usize> = block.iter().filter_map(|&x| label[x]).collect();
            for l in label.iter_mut() {
                if let Some(v) = l {
                    if olds.contains(v) {
                        *l = Some(fresh);
                    }
                }
            }
            for &x in &block {
                label[x] = Some(fresh);
            }
        }
    }
    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (x, l) in label.iter().enumerate() {
        if let Some(l) = l {
            blocks.entry(*l).or_default().push(x);
        }
    }
    let clusters = canonical_partition(blocks.into_values().map(SubsetId::new).collect());
    let outliers = (0..n).filter(|&x| label[x].is_none()).collect();
    (clusters, outliers)
}

fn dbs_reference(seed: u64, trials: usize) -> Result<Report> {
    let mut rng = stream(seed, 5);
    let instances: Vec<(PointCloud, usize, f64, f64)> = (0..trials)
        .map(|_| {
            let cloud = random_cloud(&mut rng, 200, 3);
            (cloud, rng.gen_range(1..=6), rng.gen_range(0.02..0.3), rng.gen_range(0.02..0.3))
        })
        .collect();
    let parts = instances
        .par_iter()
        .enumerate()
        .map(|(i, (cloud, k, delta, eps))| -> Result<Report> {
            let mut r = Report::new(format!("instance {i}"), seed);
            let got = dbs_clustering(cloud, *k, *delta, *eps)?;
            let (clusters, outliers) = dbs_brute_force(cloud, *k, *delta, *eps);
            r.check(got.clusters == clusters && got.outliers == outliers, || {
                format!("k={k} delta={delta} eps={eps}: clusters or outliers differ")
            });
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all("dbs_reference", seed, parts))
}

/// The basic cover, the trivial cover, every cover by two opens and a few
/// random covers of every open of the base.
pub fn cosheaf_axiom_sweep<R: Rng>(f: &dyn Cosections, rng: &mut R, report: &mut Report) -> Result<()> {
    let base = f.base();
    let opens: Vec<SubsetId> = base.opens().into_iter().map(|u| u.into_subset()).collect();
    for u in &opens {
        let inside: Vec<&SubsetId> = opens.iter().filter(|v| v.is_subset(u)).collect();
        let mut covers: Vec<Vec<SubsetId>> = vec![vec![u.clone()]];
        covers.push(u.iter().map(|p| base.up_set(p).map(|s| s.into_subset())).collect::<Result<_>>()?);
        for (a, v) in inside.iter().enumerate() {
            for w in &inside[a..] {
                if v.union(w) == *u {
                    covers.push(vec![(*v).clone(), (*w).clone()]);
                }
            }
        }
        for _ in 0..4 {
            let mut cover: Vec<SubsetId> = inside.iter().filter(|_| rng.gen_bool(0.3)).map(|v| (*v).clone()).collect();
            let union = cover.iter().fold(SubsetId::empty(), |a, b| a.union(b));
            for p in u.difference(&union).iter() {
                cover.push(base.up_set(p)?.into_subset());
            }
            covers.push(cover);
        }
        for cover in covers {
            let check = check_cosheaf_axiom(f, u, &cover)?;
            report.check(check.holds, || format!("axiom fails on {u} with witness {:?}", check.witness));
        }
    }
    Ok(())
}

fn cosheaf_axiom(seed: u64, trials: usize) -> Result<Report> {
    let mut bases: Vec<FinitePoset> = (1..=4).flat_map(poset_catalog).collect();
    let mut rng = stream(seed, 7);
    for _ in 0..trials / 10 {
        let n = rng.gen_range(5..=6);
        let density = rng.gen_range(0.1..0.6);
        bases.push(random_poset(&mut rng, n, density));
    }
    let jobs: Vec<(FinitePoset, FinitePoset, Vec<usize>, u64)> = bases
        .into_iter()
        .map(|base| {
            let n = rng.gen_range(1..=6);
            let density = rng.gen_range(0.0..0.7);
            let domain = random_poset(&mut rng, n, density);
            let map = random_monotone_map(&mut rng, &domain, &base);
            (base, domain, map, rng.gen())
        })
        .collect();
    let mut parts = jobs
        .par_iter()
        .map(|(base, domain, map, s)| -> Result<Report> {
            let mut r = Report::new("reeb", seed);
            let f = ReebCosheaf::new(domain.clone(), base.clone(), map.clone())?;
            cosheaf_axiom_sweep(&f, &mut ChaCha8Rng::seed_from_u64(*s), &mut r)?;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut witness = Report::new("constant", seed);
    let f = ConstantPrecosheaf::new(FinitePoset::antichain(2), vec!["a".into(), "b".into()]);
    let check = check_cosheaf_axiom(&f, &SubsetId::new(vec![0, 1]), &[SubsetId::singleton(0), SubsetId::singleton(1)])?;
    witness.check(
        !check.holds
            && check.colimit_size == 4
            && check.value_size == 2
            && matches!(check.witness, Some(AxiomWitness::NotInjective { .. })),
        || format!("constant precosheaf check gave {check:?}"),
    );
    parts.push(witness);
    Ok(merge_all("cosheaf_axiom", seed, parts))
}

fn mapper_theorem(seed: u64, trials: usize) -> Result<Report> {
    let mut rng = stream(seed, 8);
    let count = (trials / 4).max(2);
    let instances: Vec<_> = (0..count).map(|_| (mapper_theorem_instance(&mut rng, 32), rng.gen())).collect();
    let mut parts = instances
        .par_iter()
        .map(|(m, s)| verify_mapper_theorem(&m.cosheaf, &m.cover, &m.nerve, 8, *s, None))
        .collect::<Result<Vec<_>>>()?;
    let mut fault = Report::new("fault", seed);
    let mut corrupted = 0;
    for (m, s) in &instances {
        let r = verify_mapper_theorem(&m.cosheaf, &m.cover, &m.nerve, 4, *s, Some(MapperFault::RotateMapperTransition))?;
        if r.notes.is_empty() {
            fault.check(!r.passed, || "rotated mapper transition went unnoticed".into());
            corrupted += 1;
        }
        if corrupted == 3 {
            break;
        }
    }
    if corrupted == 0 {
        fault.note("no mapper transition to corrupt");
    }
    parts.push(fault);
    Ok(merge_all("mapper_theorem", seed, parts))
}

fn display_nerve_iso(seed: u64, trials: usize) -> Result<Report> {
    let mut rng = stream(seed, 9);
    let mut parts = Vec::new();
    let (filter, intervals) = fixtures::circle12_cover();
    let circle = fixtures::circle12();
    let cover = intervals.realize(&filter)?;
    parts.push(verify_display_nerve_iso(&circle, &cover, fixtures::CIRCLE12_EPS, seed, None)?);
    let mut instances = Vec::new();
    let mut skipped = 0;
    while instances.len() < (trials / 2).max(1) {
        let inst = interval_instance(&mut rng, 40);
        if display_hypothesis_holds(&inst.cloud, &inst.cover, inst.eps) {
            instances.push(inst);
        } else {
            skipped += 1;
        }
    }
    parts.extend(
        instances
            .par_iter()
            .map(|i| verify_display_nerve_iso(&i.cloud, &i.cover, i.eps, seed, None))
            .collect::<Result<Vec<_>>>()?,
    );
    let mut fault = Report::new("fault", seed);
    let bad = verify_display_nerve_iso(&circle, &cover, fixtures::CIRCLE12_EPS, seed, Some(DisplayFault::SpuriousEdge))?;
    fault.check(!bad.passed, || "spurious nerve edge went unnoticed".into());
    parts.push(fault);
    let mut r = merge_all("display_nerve_iso", seed, parts);
    r.note(format!("{skipped} random covers skipped for splitting a common intersection"));
    Ok(r)
}

fn towers(seed: u64, section: u64, count: usize) -> Vec<crate::instances::TowerInstance> {
    let mut rng = stream(seed, section);
    (0..count)
        .map(|_| {
            let depth = rng.gen_range(2..=3);
            tower_instance(&mut rng, 24, depth)
        })
        .collect()
}

fn multi_iso(seed: u64, trials: usize) -> Result<Report> {
    let parts = towers(seed, 10, (trials / 2).max(1))
        .par_iter()
        .map(|t| verify_multi_iso(&t.cloud, &t.refinement, t.eps, 10, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all("multi_iso", seed, parts))
}

fn thd_merge_tree(seed: u64, trials: usize) -> Result<Report> {
    let blobs = fixtures::two_blobs();
    let (_, tower) = fixtures::two_blobs_tower();
    let mut parts = vec![verify_thd_merge_tree(&blobs, &tower, fixtures::TWO_BLOBS_EPS, seed, None)?];
    let (instances, skipped): (Vec<_>, Vec<_>) = towers(seed, 11, (trials / 2).max(1))
        .into_iter()
        .partition(|t| tower_hypothesis_holds(&t.cloud, &t.refinement, t.eps));
    parts.extend(
        instances
            .par_iter()
            .map(|t| verify_thd_merge_tree(&t.cloud, &t.refinement, t.eps, seed, None))
            .collect::<Result<Vec<_>>>()?,
    );
    let mut fault = Report::new("fault", seed);
    let mut corrupted = 0;
    for t in &instances {
        let bad = verify_thd_merge_tree(&t.cloud, &t.refinement, t.eps, seed, Some(TowerFault::CorruptReindex))?;
        if bad.notes.is_empty() {
            fault.check(!bad.passed, || "corrupted reindexing went unnoticed".into());
            corrupted += 1;
        }
        if corrupted == 3 {
            break;
        }
    }
    if corrupted == 0 {
        fault.note("no tower had a reindex entry to corrupt");
    }
    parts.push(fault);
    let mut r = merge_all("thd_merge_tree", seed, parts);
    r.note(format!("{} random towers skipped for splitting a common intersection", skipped.len()));
    Ok(r)
}

fn multiscale_reference(seed: u64, trials: usize) -> Result<Report> {
    let parts = towers(seed, 12, trials.max(1))
        .par_iter()
        .enumerate()
        .map(|(k, t)| -> Result<Report> {
            let mut r = Report::new(format!("tower {k}"), seed);
            let fast = multiscale_thd(&t.cloud, &t.refinement, t.eps)?;
            let slow = multiscale_thd_reference(&t.cloud, &t.refinement, t.eps)?;
            r.check(fast == slow, || "level loop and enumeration disagree".into());
            r.check(fast.validate().is_ok(), || "THD fails validation".into());
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all("multiscale_reference", seed, parts))
}

fn hat_eta(seed: u64, trials: usize) -> Result<Report> {
    let parts = towers(seed, 13, (trials / 2).max(1))
        .par_iter()
        .map(|t| check_hat_eta(&t.refinement, 20, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_all("hat_eta", seed, parts))
}

fn spatiality(seed: u64, trials: usize) -> Result<Report> {
    let mut r = Report::new("spatiality", seed);
    let mut rng = stream(seed, 14);
    for _ in 0..trials * 5 {
        let n = rng.gen_range(1..=8);
        let density = rng.gen_range(0.0..0.6);
        let base = random_poset(&mut rng, n, density);
        let f = random_precosheaf(&mut rng, &base);
        r.check(is_spatial(&f), || format!("precosheaf {} is not spatial", f.to_json_value()));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let a = run_suite(7, 4).unwrap();
        for r in &a.reports {
            assert!(r.passed, "{}: {:?}", r.name, r.failures);
        }
        let b = run_suite(7, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn brute_force_dbs_matches_the_example() {
        let cloud = PointCloud::from_points([0.0, 0.1, 0.2, 5.0, 5.1, 5.2, 10.0].iter().map(|&x| vec![x]).collect()).unwrap();
        let (clusters, outliers) = dbs_brute_force(&cloud, 3, 0.25, 0.25);
        assert_eq!(clusters.len(), 2);
        assert_eq!(outliers, SubsetId::singleton(6));
    }

    #[test]
    fn kruskal_on_line3() {
        assert_eq!(kruskal_heights(&fixtures::line3()), vec![1.0, 2.0]);
    }
}
