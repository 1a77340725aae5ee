//! Writes the `gen` category of small QAPLIB-format instances used by the
//! QAPLIB tests and acceptance run.
//!
//! Flows `A` are weighted random trees (the shape of the `chr` family) and
//! distances `B` are rounded Euclidean distances between random sites. The
//! `.sln` files hold the best permutation found by multi-start pairwise-swap
//! local search: feasible, not proven optimal.
//!
//! ```text
//! cargo run --release -p qapnet-core --example gen_qaplib_fixtures -- data/qaplib
//! ```

use std::path::PathBuf;

use qapnet::bench::{serialize_qaplib, serialize_qaplib_solution, QaplibInstance};
use qapnet::numerics::{Assignment, DenseMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIZES: [usize; 8] = [8, 9, 10, 12, 14, 16, 18, 20];
const RESTARTS: usize = 200;

fn instance(n: usize, rng: &mut ChaCha8Rng) -> (DenseMatrix<f64>, DenseMatrix<f64>) {
    let mut a = DenseMatrix::zeros(n, n);
    for v in 1..n {
        let parent = rng.random_range(0..v);
        let w = rng.random_range(1..100) as f64;
        a[(v, parent)] = w;
        a[(parent, v)] = w;
    }
    let sites: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)]).collect();
    let b = DenseMatrix::from_fn(n, n, |i, j| ((sites[i][0] - sites[j][0]).hypot(sites[i][1] - sites[j][1])).round());
    (a, b)
}

fn cost(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>, p: &[usize]) -> f64 {
    let n = p.len();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * b[(p[i], p[j])]).sum()
}

fn local_search(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = a.rows();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..RESTARTS {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        let mut c = cost(a, b, &p);
        loop {
            let mut improved = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    p.swap(i, j);
                    let c2 = cost(a, b, &p);
                    if c2 < c {
                        c = c2;
                        improved = true;
                    } else {
                        p.swap(i, j);
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            best = Some((c, p));
        }
    }
    best.expect("at least one restart").1
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/qaplib".into()));
    std::fs::create_dir_all(&dir).expect("output directory");
    let mut rng = ChaCha8Rng::seed_from_u64(20_200_806);
    for n in SIZES {
        let (a, b) = instance(n, &mut rng);
        let name = format!("gen{n:02}a");
        let q = QaplibInstance {
            name: name.clone(),
            n,
            a,
            b,
            known_feasible_bound: None,
        };
        let p = local_search(&q.a, &q.b, &mut rng);
        let x = Assignment::new(n, p).expect("permutation");
        let obj = q.objective(&x).expect("square instance");
        std::fs::write(dir.join(format!("{name}.dat")), serialize_qaplib(&q)).expect("write .dat");
        std::fs::write(dir.join(format!("{name}.sln")), serialize_qaplib_solution(obj, &x)).expect("write .sln");
        println!("{name}: n = {n}, best found {obj}");
    }
}
