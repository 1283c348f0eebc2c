//! Smallest enclosing balls of small Euclidean point sets (Welzl's
//! move-to-front recursion, exact up to floating point).

use crate::metric::euclidean;

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    fn contains(&self, p: &[f64]) -> bool {
        euclidean(&self.center, p) <= self.radius * (1.0 + 1e-12) + 1e-12
    }
}

/// Smallest ball containing every point of `points`. Panics on empty input.
pub fn minimum_enclosing_ball(points: &[&[f64]]) -> Ball {
    assert!(!points.is_empty(), "minimum enclosing ball of no points");
    let dim = points[0].len();
    let mut pts: Vec<&[f64]> = points.to_vec();
    let mut support = Vec::with_capacity(dim + 1);
    welzl(&mut pts, points.len(), &mut support, dim)
}

fn welzl<'a>(pts: &mut Vec<&'a [f64]>, n: usize, support: &mut Vec<&'a [f64]>, dim: usize) -> Ball {
    let mut ball = ball_on_boundary(support);
    if support.len() == dim + 1 {
        return ball;
    }
    for i in 0..n {
        let p = pts[i];
        if ball.radius >= 0.0 && ball.contains(p) {
            continue;
        }
        support.push(p);
        ball = welzl(pts, i, support, dim);
        support.pop();
        // move to front
        let moved = pts.remove(i);
        pts.insert(0, moved);
    }
    ball
}

/// Smallest ball with every point of `support` on its boundary. An empty
/// support gives radius -1 so that nothing is contained.
fn ball_on_boundary(support: &[&[f64]]) -> Ball {
    match support {
        [] => Ball {
            center: Vec::new(),
            radius: -1.0,
        },
        [p] => Ball {
            center: p.to_vec(),
            radius: 0.0,
        },
        [a, b] => Ball {
            center: a.iter().zip(b.iter()).map(|(x, y)| 0.5 * (x + y)).collect(),
            radius: euclidean(a, b) * 0.5,
        },
        _ => circumball(support).unwrap_or_else(|| widest_pair(support)),
    }
}

/// Circumscribed ball of affinely independent points, computed inside their
/// affine hull. Returns `None` when the points are affinely dependent.
pub fn circumball(support: &[&[f64]]) -> Option<Ball> {
    let origin = support[0];
    let k = support.len() - 1;
    let vs: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|p| p.iter().zip(origin).map(|(x, o)| x - o).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // 2 <v_j, v_l> lambda_l = <v_j, v_j>
    let mut a = vec![vec![0.0; k + 1]; k];
    for j in 0..k {
        for l in 0..k {
            a[j][l] = 2.0 * dot(&vs[j], &vs[l]);
        }
        a[j][k] = dot(&vs[j], &vs[j]);
    }
    let lambda = solve(a)?;
    let mut center = origin.to_vec();
    for (l, v) in vs.iter().enumerate() {
        for (c, x) in center.iter_mut().zip(v) {
            *c += lambda[l] * x;
        }
    }
    let radius = support
        .iter()
        .map(|p| euclidean(&center, p))
        .fold(0.0, f64::max);
    Some(Ball { center, radius })
}

fn widest_pair(support: &[&[f64]]) -> Ball {
    let mut best = (0, 1, -1.0);
    for i in 0..support.len() {
        for j in (i + 1)..support.len() {
            let d = euclidean(support[i], support[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    ball_on_boundary(&[support[best.0], support[best.1]])
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = a.len();
    let scale = a
        .iter()
        .flat_map(|r| r[..k].iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..k {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=k {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force: the smallest circumball over all subsets of at most
    /// `dim + 1` points that contains every point.
    fn brute_force_radius(points: &[&[f64]]) -> f64 {
        let n = points.len();
        let dim = points[0].len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << n) {
            let subset: Vec<&[f64]> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| points[i]).collect();
            if subset.len() > dim + 1 {
                continue;
            }
            let ball = match subset.len() {
                1 | 2 => ball_on_boundary(&subset),
                _ => match circumball(&subset) {
                    Some(b) => b,
                    None => continue,
                },
            };
            if points.iter().all(|p| euclidean(&ball.center, p) <= ball.radius + 1e-9) {
                best = best.min(ball.radius);
            }
        }
        best
    }

    #[test]
    fn equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let b = minimum_enclosing_ball(&refs);
        assert!((b.radius - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((brute_force_radius(&refs) - b.radius).abs() < 1e-12);
    }

    #[test]
    fn obtuse_triangle_uses_longest_edge() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 0.1]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert!((minimum_enclosing_ball(&refs).radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_points() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![3.0, 0.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert!((minimum_enclosing_ball(&refs).radius - 1.5).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..400 {
            let dim = 1 + trial % 3;
            let n = 1 + rng.gen_range(0..5);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
            let got = minimum_enclosing_ball(&refs);
            for p in &refs {
                assert!(euclidean(&got.center, p) <= got.radius + 1e-9);
            }
            assert!((got.radius - brute_force_radius(&refs)).abs() < 1e-9, "trial {trial}");
        }
    }
}
