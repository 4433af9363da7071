//! Exhaustive k-nearest-neighbour graph, the quality and timing baseline for
//! the scan-line graph.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::graph::Graph;

const BLOCK: usize = 1024;

/// The `k` nearest points to `query`, by squared distance then index.
fn nearest(xs: &[f64], ys: &[f64], zs: &[f64], query: usize, k: usize) -> Vec<u32> {
    let (qx, qy, qz) = (xs[query], ys[query], zs[query]);
    let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
    let mut worst = f64::INFINITY;
    let mut d2 = [0.0f64; BLOCK];
    for start in (0..xs.len()).step_by(BLOCK) {
        let end = (start + BLOCK).min(xs.len());
        let len = end - start;
        for (o, d) in d2[..len].iter_mut().enumerate() {
            let j = start + o;
            let (dx, dy, dz) = (xs[j] - qx, ys[j] - qy, zs[j] - qz);
            *d = dx * dx + dy * dy + dz * dz;
        }
        for (o, &d) in d2[..len].iter().enumerate() {
            // Later indices lose ties, so only a strictly smaller distance can enter.
            if d < worst {
                let j = start + o;
                if j == query {
                    continue;
                }
                let at = best.partition_point(|&(bd, _)| bd <= d);
                best.insert(at, (d, j as u32));
                if best.len() > k {
                    best.pop();
                }
                if best.len() == k {
                    worst = best[k - 1].0;
                }
            }
        }
    }
    best.into_iter().map(|(_, j)| j).collect()
}

/// Per-point neighbour lists before symmetrization.
pub fn knn_lists(pc: &PointCloud, k: usize) -> Result<Vec<Vec<u32>>> {
    let coords = pc.voxels()?.coords;
    let n = coords.len();
    if k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must be smaller than N = {n}")));
    }
    // Squared distances stay below 3 * 2^42, so f64 arithmetic is exact and
    // vectorizes where 64-bit integer multiplies do not.
    let xs: Vec<f64> = coords.iter().map(|c| f64::from(c[0])).collect();
    let ys: Vec<f64> = coords.iter().map(|c| f64::from(c[1])).collect();
    let zs: Vec<f64> = coords.iter().map(|c| f64::from(c[2])).collect();
    if k == 0 {
        return Ok(vec![Vec::new(); n]);
    }
    Ok((0..n).into_par_iter().map(|i| nearest(&xs, &ys, &zs, i, k)).collect())
}

/// Exact kNN graph, symmetrized by edge union. Unweighted.
pub fn build_knn_brute(pc: &PointCloud, k: usize) -> Result<Graph> {
    let lists = knn_lists(pc, k)?;
    let edges: Vec<(u32, u32)> = lists
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.iter().map(move |&j| (i as u32, j)))
        .collect();
    Graph::from_edges(lists.len(), &edges)
}
