//! How much pairwise geometry the memory space shares with the structural
//! feature space: correlation between the two lists of pairwise distances.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceCorrelation {
    pub pearson: f64,
    pub spearman: f64,
    pub num_pairs: usize,
}

pub fn correlate_distances<R: Rng + ?Sized>(
    memory: &[Vec<f64>],
    features: &[Vec<f64>],
    sample_pairs: usize,
    rng: &mut R,
) -> Result<DistanceCorrelation> {
    let n = memory.len();
    if features.len() != n {
        return Err(Error::Shape {
            layer: "correlate_distances".into(),
            expected: n,
            got: features.len(),
        });
    }
    if n < 3 {
        return Err(Error::Precondition(format!("need at least 3 nodes, got {n}")));
    }
    let total = n * (n - 1) / 2;
    let pairs: Vec<usize> = if sample_pairs >= total {
        (0..total).collect()
    } else {
        let mut p = index::sample(rng, total, sample_pairs).into_vec();
        p.sort_unstable();
        p
    };
    let mut dm = Vec::with_capacity(pairs.len());
    let mut df = Vec::with_capacity(pairs.len());
    for p in pairs {
        let (i, j) = unrank_pair(p, n);
        dm.push(euclidean(&memory[i], &memory[j]));
        df.push(euclidean(&features[i], &features[j]));
    }
    Ok(DistanceCorrelation {
        pearson: pearson(&dm, &df)?,
        spearman: spearman(&dm, &df)?,
        num_pairs: dm.len(),
    })
}

/// Map `0..n(n−1)/2` to pairs `(i, j)`, `i < j`, in lexicographic order.
fn unrank_pair(mut p: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if p < row {
            return (i, i + 1 + p);
        }
        p -= row;
        i += 1;
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::UndefinedCorrelation(
            "a distance list has zero variance".into(),
        ));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}
