//! Statistical checks of synthetic homodyne data against exact expectations.

use qbench_cli::records::{bin_and_estimate, BinnedMoments, QuadratureRecord};
use qbench_cli::sampler::{sample_homodyne, sample_phases};
use qbench_core::channels::Channel;
use qbench_core::fock::{coherent_state, noisy_coherent, rotated_quadrature, DensityMatrix};
use qbench_core::linalg::c64;

fn estimate(recs: &[QuadratureRecord], angle: f64) -> BinnedMoments {
    bin_and_estimate(recs, &[angle], recs.len(), 0.0).unwrap()[0]
}

fn exact(rho: &DensityMatrix, phase_deg: f64) -> (f64, f64) {
    let rho = rho.normalized();
    let x = rotated_quadrature(phase_deg.to_radians(), rho.dim()).unwrap();
    // second moment from the square at one level more, as for the
    // compressed quadrature operators
    let big = rho.resized(rho.dim() + 1);
    let xb = rotated_quadrature(phase_deg.to_radians(), rho.dim() + 1).unwrap();
    (rho.expect(&x), big.expect(&(&xb * &xb)))
}

#[test]
fn vacuum_bins_match_the_ground_state() {
    let vac = coherent_state(c64(0.0, 0.0), 8).unwrap();
    let recs = sample_homodyne(&vac, 0.0, 500, 3).unwrap();
    let b = bin_and_estimate(&recs, &[0.0], 500, 1.8).unwrap()[0];
    assert!(b.mean.abs() <= 3.0 * b.se_mean, "{b:?}");
    assert!((b.raw_second_moment - 0.5).abs() <= 3.0 * b.se_second, "{b:?}");
}

#[test]
fn vacuum_variance_is_isotropic() {
    let vac = coherent_state(c64(0.0, 0.0), 8).unwrap();
    for (i, phase) in [0.0, 37.0, 90.0, 211.5].into_iter().enumerate() {
        let recs = sample_homodyne(&vac, phase, 100_000, 10 + i as u64).unwrap();
        let b = estimate(&recs, phase);
        let var = b.raw_second_moment - b.mean * b.mean;
        assert!((var - 0.5).abs() <= 3.0 * b.se_second, "phase {phase}: {var} ± {}", b.se_second);
    }
}

#[test]
fn coherent_mean_is_displaced() {
    let rho = coherent_state(c64(0.5, 0.0), 16).unwrap();
    let recs = sample_homodyne(&rho, 0.0, 100_000, 5).unwrap();
    let b = estimate(&recs, 0.0);
    let expect = 2f64.sqrt() * 0.5;
    assert!((b.mean - expect).abs() <= 3.0 * b.se_mean, "{} vs {expect}", b.mean);
}

#[test]
fn phase_sweep_fits_a_sinusoid() {
    let alpha = c64(0.6, 0.35);
    let rho = coherent_state(alpha, 16).unwrap();
    let phases: Vec<f64> = (0..36).map(|i| 10.0 * i as f64).collect();
    let recs = sample_phases(&rho, &phases, 2000, 17).unwrap();
    // least squares for mean(φ) = a cos φ + b sin φ + c
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for &ph in &phases {
        let b = bin_and_estimate(&recs, &[ph], 2000, 0.0).unwrap()[0];
        let t = ph.to_radians();
        let row = nalgebra::Vector3::new(t.cos(), t.sin(), 1.0);
        ata += row * row.transpose();
        atb += row * b.mean;
    }
    let coef = ata.lu().solve(&atb).unwrap();
    let amplitude = coef[0].hypot(coef[1]);
    assert!((amplitude - 2f64.sqrt() * alpha.norm()).abs() < 0.02, "{amplitude}");
    assert!((coef[1].atan2(coef[0]) - alpha.arg()).abs() < 0.05);
    assert!(coef[2].abs() < 0.02);
}

// |error| ≤ 4·se in at least 95 of 100 seeded trials, for each sample size
#[test]
fn binned_moments_converge_at_the_standard_error_rate() {
    let memory = Channel::Sequence {
        channels: vec![Channel::PureLoss { loss: 0.15 }, Channel::AdditiveNoise { nbar: 0.02 }],
    };
    let states = [
        coherent_state(c64(0.5, 0.3), 16).unwrap(),
        memory.apply(&noisy_coherent(c64(0.0, -0.6f64.sqrt()), 0.07, 30).unwrap()).unwrap(),
    ];
    for (s, rho) in states.iter().enumerate() {
        for phase in [0.0, 90.0] {
            let (m1, m2) = exact(rho, phase);
            for n in [1_000, 10_000, 100_000] {
                let mut ok = [0usize; 2];
                for trial in 0..100u64 {
                    let recs = sample_homodyne(rho, phase, n, 1000 * s as u64 + trial).unwrap();
                    let b = estimate(&recs, phase);
                    ok[0] += usize::from((b.mean - m1).abs() <= 4.0 * b.se_mean);
                    ok[1] += usize::from((b.raw_second_moment - m2).abs() <= 4.0 * b.se_second);
                }
                assert!(ok[0] >= 95 && ok[1] >= 95, "state {s} phase {phase} n={n}: {ok:?}");
            }
        }
    }
}
