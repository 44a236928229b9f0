#![allow(dead_code)]

//! Brute-force reference computations shared by the integration tests.

use vlc_demod::dbn::Rbm;

/// Every binary vector of length `len`, least significant unit first.
pub fn binary_states(len: usize) -> Vec<Vec<f64>> {
    (0..1usize << len)
        .map(|s| (0..len).map(|i| ((s >> i) & 1) as f64).collect())
        .collect()
}

/// `E(v, h) = −aᵀv − bᵀh − hᵀWv`.
pub fn energy(rbm: &Rbm, v: &[f64], h: &[f64]) -> f64 {
    let mut e = 0.0;
    for i in 0..rbm.visible {
        e -= rbm.a[i] * v[i];
    }
    for j in 0..rbm.hidden {
        e -= rbm.b[j] * h[j];
        for i in 0..rbm.visible {
            e -= h[j] * rbm.w[j * rbm.visible + i] * v[i];
        }
    }
    e
}

/// `p(h_j = 1 | v)` from the joint distribution, summing over all hidden states.
pub fn exact_hidden_conditional(rbm: &Rbm, v: &[f64]) -> Vec<f64> {
    let states = binary_states(rbm.hidden);
    let weights: Vec<f64> = states.iter().map(|h| (-energy(rbm, v, h)).exp()).collect();
    let z: f64 = weights.iter().sum();
    (0..rbm.hidden)
        .map(|j| states.iter().zip(&weights).map(|(h, w)| h[j] * w).sum::<f64>() / z)
        .collect()
}

/// `p(v_i = 1 | h)`, summing over all visible states.
pub fn exact_visible_conditional(rbm: &Rbm, h: &[f64]) -> Vec<f64> {
    let states = binary_states(rbm.visible);
    let weights: Vec<f64> = states.iter().map(|v| (-energy(rbm, v, h)).exp()).collect();
    let z: f64 = weights.iter().sum();
    (0..rbm.visible)
        .map(|i| states.iter().zip(&weights).map(|(v, w)| v[i] * w).sum::<f64>() / z)
        .collect()
}

/// `ln Z` over all joint states.
pub fn log_partition(rbm: &Rbm) -> f64 {
    let hs = binary_states(rbm.hidden);
    let vs = binary_states(rbm.visible);
    let energies: Vec<f64> = vs
        .iter()
        .flat_map(|v| hs.iter().map(move |h| -energy(rbm, v, h)))
        .collect();
    log_sum_exp(&energies)
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `Σ_v ln p(v)` over `batch`.
pub fn log_likelihood(rbm: &Rbm, batch: &[Vec<f64>]) -> f64 {
    let ln_z = log_partition(rbm);
    let hs = binary_states(rbm.hidden);
    batch
        .iter()
        .map(|v| {
            let e: Vec<f64> = hs.iter().map(|h| -energy(rbm, v, h)).collect();
            log_sum_exp(&e) - ln_z
        })
        .sum()
}

/// Exact mean gradient of `ln p(v)` over `batch` as `(dW, da, db)`: data
/// expectations under `p(h | v)` minus model expectations under `p(v, h)`,
/// both by enumeration.
pub fn exact_gradient(rbm: &Rbm, batch: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (m, n) = (rbm.visible, rbm.hidden);
    let hs = binary_states(n);
    let vs = binary_states(m);
    let mut dw = vec![0.0; n * m];
    let mut da = vec![0.0; m];
    let mut db = vec![0.0; n];
    let k = batch.len() as f64;
    for v in batch {
        let w: Vec<f64> = hs.iter().map(|h| (-energy(rbm, v, h)).exp()).collect();
        let z: f64 = w.iter().sum();
        for (h, wt) in hs.iter().zip(&w) {
            let p = wt / z / k;
            for j in 0..n {
                db[j] += p * h[j];
                for i in 0..m {
                    dw[j * m + i] += p * h[j] * v[i];
                }
            }
        }
        for i in 0..m {
            da[i] += v[i] / k;
        }
    }
    let joint: Vec<(usize, usize, f64)> = vs
        .iter()
        .enumerate()
        .flat_map(|(vi, v)| hs.iter().enumerate().map(move |(hi, h)| (vi, hi, -energy(rbm, v, h))))
        .collect();
    let ln_z = log_sum_exp(&joint.iter().map(|t| t.2).collect::<Vec<_>>());
    for (vi, hi, neg_e) in joint {
        let p = (neg_e - ln_z).exp();
        let (v, h) = (&vs[vi], &hs[hi]);
        for i in 0..m {
            da[i] -= p * v[i];
        }
        for j in 0..n {
            db[j] -= p * h[j];
            for i in 0..m {
                dw[j * m + i] -= p * h[j] * v[i];
            }
        }
    }
    (dw, da, db)
}

/// Multivariate normal log-density via explicit Gaussian elimination.
pub fn gaussian_log_density(x: &[f64], mean: &[f64], cov: &[Vec<f64>]) -> f64 {
    let n = x.len();
    let mut a: Vec<Vec<f64>> = cov.to_vec();
    let mut b: Vec<f64> = x.iter().zip(mean).map(|(x, m)| x - m).collect();
    let diff = b.clone();
    let mut log_det = 0.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        log_det += a[col][col].abs().ln();
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut sol = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * sol[c]).sum();
        sol[r] = (b[r] - s) / a[r][r];
    }
    let quad: f64 = diff.iter().zip(&sol).map(|(d, s)| d * s).sum();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
}
