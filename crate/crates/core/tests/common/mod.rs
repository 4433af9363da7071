//! Straightforward reference implementations used as oracles.
#![allow(dead_code)]

use fgbd_core::{Graph, PointCloud, Rgb};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random voxel cloud with `n` points in a `2^bits` cube.
pub fn random_cloud(r: &mut ChaCha8Rng, n: usize, bits: u32) -> PointCloud {
    let lim = 1u32 << bits;
    let coords = (0..n).map(|_| [0; 3].map(|_: u8| r.random_range(0..lim))).collect();
    let colors = (0..n).map(|_| [0; 3].map(|_: u8| r.random_range(0.0..255.0))).collect();
    PointCloud::from_voxels(coords, colors, bits).unwrap()
}

pub fn random_signal(r: &mut ChaCha8Rng, n: usize) -> Vec<Rgb> {
    (0..n).map(|_| [0; 3].map(|_: u8| r.random_range(0.0..255.0))).collect()
}

pub fn sq_dist(a: [u32; 3], b: [u32; 3]) -> u64 {
    a.iter().zip(&b).map(|(&x, &y)| (i64::from(x) - i64::from(y)).pow(2) as u64).sum()
}

/// Sorted unique undirected edges `(i, j)` with `i < j`.
pub fn edge_set(g: &Graph) -> Vec<(u32, u32)> {
    let mut e = Vec::new();
    for i in 0..g.num_vertices() {
        for &j in g.neighbors(i) {
            if (i as u32) < j {
                e.push((i as u32, j));
            }
        }
    }
    e.sort();
    e
}

/// Edges between rank-consecutive points of a lexicographic sort on the
/// given axis order (most significant first), ties by index.
pub fn scan_edges(coords: &[[u32; 3]], axes: [usize; 3]) -> Vec<(u32, u32)> {
    let mut idx: Vec<u32> = (0..coords.len() as u32).collect();
    idx.sort_by_key(|&i| {
        let g = coords[i as usize];
        (g[axes[0]], g[axes[1]], g[axes[2]], i)
    });
    idx.windows(2).filter(|w| w[0] != w[1]).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect()
}

/// Axis orders (z,y,x), (x,z,y), (y,x,z).
pub const SCAN_ORDERS: [[usize; 3]; 3] = [[2, 1, 0], [0, 2, 1], [1, 0, 2]];

/// Dense random-walk matrix with self-loops; isolated rows are identity.
pub fn dense_operator(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.num_vertices();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let d: f64 = g.weights(i).iter().sum();
        if d == 0.0 {
            p[i][i] = 1.0;
            continue;
        }
        p[i][i] = 0.5;
        for (&j, &w) in g.neighbors(i).iter().zip(g.weights(i)) {
            p[i][j as usize] += w / (2.0 * d);
        }
    }
    p
}

pub fn mat_vec(p: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    p.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

pub fn mat_pow(p: &[Vec<f64>], q: usize) -> Vec<Vec<f64>> {
    let n = p.len();
    let mut r: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..q {
        r = mat_mul(&r, p);
    }
    r
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

/// Union-find component count.
pub fn components(n: usize, edges: &[(u32, u32)]) -> usize {
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut x = x;
        while p[x] != r {
            let nx = p[x];
            p[x] = r;
            x = nx;
        }
        r
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut count = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a as usize), find(&mut parent, b as usize));
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}
