mod common;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use vlc_demod::dataset::LabeledDataset;
use vlc_demod::mld::{class_moments, MldParams, RIDGE_FLOOR, RIDGE_SCALE};
use vlc_demod::{seed, Demodulator, ModulationScheme};

#[test]
fn moments_match_direct_sums() {
    let mut rng = seed::rng(41);
    for n in [1, 3, 7] {
        let count = 15;
        let rows: Vec<Vec<f64>> = (0..count).map(|_| (0..n).map(|_| rng.random()).collect()).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let (mu, cov) = class_moments(&refs, n);

        let mean: Vec<f64> = (0..n).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / count as f64).collect();
        let mut direct = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                direct[a][b] = rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (count - 1) as f64;
            }
        }
        let trace: f64 = (0..n).map(|i| direct[i][i]).sum();
        let lambda = (RIDGE_SCALE * trace / n as f64).max(RIDGE_FLOOR);
        for a in 0..n {
            assert!((mu[a] - mean[a]).abs() < 1e-14);
            for b in 0..n {
                let expect = direct[a][b] + if a == b { lambda } else { 0.0 };
                assert!((cov[(a, b)] - expect).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn decisions_match_density_grid() {
    // Four anisotropic 2-D classes.
    let mut rng = seed::rng(42);
    let centres = [(0.25, 0.25), (0.75, 0.3), (0.3, 0.75), (0.7, 0.7)];
    let spreads = [(0.05, 0.1), (0.1, 0.04), (0.08, 0.08), (0.12, 0.06)];
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (c, (&(mx, my), &(sx, sy))) in centres.iter().zip(&spreads).enumerate() {
        let (gx, gy) = (Normal::new(mx, sx).unwrap(), Normal::new(my, sy).unwrap());
        for _ in 0..40 {
            let x: f64 = gx.sample(&mut rng);
            let y: f64 = gy.sample(&mut rng);
            samples.push(x.clamp(0.0, 1.0));
            samples.push((0.6 * y + 0.4 * x).clamp(0.0, 1.0));
            labels.push(c as u16 + 1);
        }
    }
    let ds = LabeledDataset::from_parts(ModulationScheme::Qpsk, 2, samples, labels, 0.0, 1.0).unwrap();
    let mld = MldParams::fit(&ds).unwrap();

    for gx in 0..=40 {
        for gy in 0..=40 {
            let q = [gx as f64 / 40.0, gy as f64 / 40.0];
            let dens: Vec<f64> = mld
                .classes()
                .iter()
                .map(|c| {
                    let cov: Vec<Vec<f64>> = (0..2).map(|r| (0..2).map(|k| c.cov[(r, k)]).collect()).collect();
                    common::gaussian_log_density(&q, c.mean.as_slice(), &cov)
                })
                .collect();
            for (a, b) in mld.log_densities(&q).iter().zip(&dens) {
                assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
            }
            let mut best = 0;
            for c in 1..dens.len() {
                if dens[c] > dens[best] {
                    best = c;
                }
            }
            assert_eq!(mld.classify(&q).unwrap().label, best as u16 + 1, "at {q:?}");
        }
    }
}

#[test]
fn frame_at_a_class_mean_picks_that_class() {
    let samples = vec![0.0, 0.1, 0.2, 0.3, 0.6, 0.8, 1.0, 0.9];
    let ds = LabeledDataset::from_parts(ModulationScheme::Ook, 2, samples, vec![1, 1, 2, 2], 0.0, 1.0).unwrap();
    let mld = MldParams::fit(&ds).unwrap();
    for c in mld.classes().iter().enumerate() {
        let mean: Vec<f64> = c.1.mean.iter().copied().collect();
        assert_eq!(mld.classify(&mean).unwrap().label, c.0 as u16 + 1);
    }
}

#[test]
fn log_densities_are_finite_for_degenerate_classes() {
    let samples = vec![0.5; 4 * 3];
    let mut s = samples;
    s[6..].iter_mut().for_each(|x| *x = 0.75);
    let ds = LabeledDataset::from_parts(ModulationScheme::Ook, 3, s, vec![1, 1, 2, 2], 0.0, 1.0).unwrap();
    let mld = MldParams::fit(&ds).unwrap();
    for q in [[0.0; 3], [1.0; 3], [0.5; 3]] {
        assert!(mld.log_densities(&q).iter().all(|d| d.is_finite()));
    }
}
