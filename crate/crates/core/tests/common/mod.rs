//! Helpers shared by integration test targets.
#![allow(dead_code)]

use causal_kit::dag::Dag;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn backdoor_figure() -> Dag {
    Dag::parse(
        "Z2 -> X3\nX3 -> Y\nZ2 -> X2\nX2 -> Y\nX2 -> D\nD -> M\nM -> Y\nZ1 -> X2\nZ1 -> X1\nX1 -> D\n",
    )
    .unwrap()
}

/// Random DAG on `V0..V{k-1}`: edges follow a shuffled order, each kept
/// with probability `density`.
pub fn random_dag(rng: &mut ChaCha8Rng, k: usize, density: f64) -> Dag {
    let names: Vec<String> = (0..k).map(|i| format!("V{i}")).collect();
    let mut order: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if rng.random_bool(density) {
                edges.push((names[order[a]].clone(), names[order[b]].clone()));
            }
        }
    }
    Dag::new(&names, edges).unwrap()
}

pub fn subsets(items: &[String]) -> Vec<Vec<String>> {
    (0..1u32 << items.len())
        .map(|mask| {
            items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| s.clone()).collect()
        })
        .collect()
}

/// Residuals of `target` on `on` plus an intercept, by normal equations.
pub fn residualize(target: &[f64], on: &[&[f64]]) -> Vec<f64> {
    let n = target.len();
    let x = DMatrix::from_fn(n, on.len() + 1, |i, j| if j == 0 { 1.0 } else { on[j - 1][i] });
    let y = DVector::from_column_slice(target);
    let b = (x.transpose() * &x).lu().solve(&(x.transpose() * &y)).unwrap();
    (y - x * b).iter().copied().collect()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    sab / (saa * sbb).sqrt()
}
