use cslr_core::baselines::{majorizer_gap, smoothed_schatten};
use cslr_core::dense::{hermitian_eigenvalues, singular_values_dense, DenseMatrix};
use cslr_core::giraf::{filter_update, EpsFloor, SolverConfig};
use cslr_core::grids::{circ_conv, dft, idft, linear_conv_valid, restrict, valid_set, zero_pad, ComplexGrid, IndexBox};
use cslr_core::lifting::{apply_lift, gram_surrogate, materialize_exact, materialize_surrogate, LiftingSpec};
use cslr_core::models::{gradient_weighting, random_mask, rng_from_seed};
use cslr_core::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn random_grid(seed: u64, domain: &IndexBox) -> ComplexGrid {
    let mut rng = rng_from_seed(seed);
    ComplexGrid::from_fn(domain.clone(), |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_matrix(seed: u64, rows: usize, cols: usize) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
    .unwrap()
}

/// A data box of 1 or 2 dimensions with a filter box that fits inside it.
fn boxes() -> impl Strategy<Value = (IndexBox, IndexBox)> {
    (1usize..=2)
        .prop_flat_map(|d| {
            (
                prop::collection::vec((-6i64..6, 4usize..12), d),
                prop::collection::vec((-3i64..3, 1usize..4), d),
            )
        })
        .prop_map(|(data, filt)| {
            let db = IndexBox::new(data.iter().map(|p| p.0).collect(), data.iter().map(|p| p.1).collect()).unwrap();
            let fb = IndexBox::new(filt.iter().map(|p| p.0).collect(), filt.iter().map(|p| p.1).collect()).unwrap();
            (db, fb)
        })
}

fn spec_for(data: &IndexBox, filt: &IndexBox, gradient: bool) -> LiftingSpec {
    if gradient && data.ndim() == 2 {
        LiftingSpec::new(data.clone(), filt.clone(), gradient_weighting(data).unwrap()).unwrap()
    } else {
        LiftingSpec::plain(data.clone(), filt.clone()).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dft_is_unitary((data, _) in boxes(), seed in any::<u64>()) {
        let x = random_grid(seed, &data);
        let y = dft(&x);
        prop_assert!((y.norm() - x.norm()).abs() <= 1e-12 * x.norm());
        prop_assert!(idft(&y).max_abs_diff(&x).unwrap() <= 1e-12 * x.norm().max(1.0));
    }

    #[test]
    fn zero_pad_and_restrict_are_adjoint((data, filt) in boxes(), seed in any::<u64>()) {
        let gamma = valid_set(&data, &filt).unwrap();
        let back: Vec<i64> = (0..data.ndim()).map(|a| 1 - filt.offset()[a] - filt.extent()[a] as i64).collect();
        let small = gamma.translate(&back).unwrap();
        prop_assert!(data.contains_box(&small));
        let u = random_grid(seed, &small);
        let v = random_grid(seed ^ 0xabc, &data);
        let lhs = zero_pad(&u, &data).unwrap().inner(&v).unwrap();
        let rhs = u.inner(&restrict(&v, &small).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
        prop_assert_eq!(restrict(&zero_pad(&u, &data).unwrap(), &small).unwrap(), u);
    }

    #[test]
    fn valid_convolution_is_restricted_circular((data, filt) in boxes(), seed in any::<u64>()) {
        let y = random_grid(seed, &data);
        let h = random_grid(seed.wrapping_add(1), &filt);
        let direct = linear_conv_valid(&y, &h).unwrap();
        let gamma = valid_set(&data, &filt).unwrap();
        // The circular embedding needs the filter support inside the data box.
        let centred = IndexBox::new(vec![0; data.ndim()], filt.extent().to_vec()).unwrap();
        let shifted = ComplexGrid::new(centred.clone(), h.values().to_vec()).unwrap();
        let base = IndexBox::new(vec![0; data.ndim()], data.extent().to_vec()).unwrap();
        let ybase = ComplexGrid::new(base.clone(), y.values().to_vec()).unwrap();
        let circ = circ_conv(&ybase, &shifted).unwrap();
        let gshift: Vec<i64> = (0..data.ndim()).map(|a| -data.offset()[a] - filt.offset()[a]).collect();
        let gbase = gamma.translate(&gshift).unwrap();
        let embedded = restrict(&circ, &gbase).unwrap();
        let diff = direct.values().iter().zip(embedded.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12 * (1.0 + direct.norm()));
    }

    #[test]
    fn lifting_matches_dense_oracle((data, filt) in boxes(), gradient in any::<bool>(), seed in any::<u64>()) {
        let spec = spec_for(&data, &filt, gradient);
        let x = random_grid(seed, &data);
        let h = random_grid(seed ^ 7, &filt);
        let blocks = apply_lift(&spec, &x, &h).unwrap();
        let dense = materialize_exact(&spec, &x).unwrap().mul_vec(h.values()).unwrap();
        let stacked: Vec<Complex64> = blocks.iter().flat_map(|b| b.values().to_vec()).collect();
        let err = stacked.iter().zip(&dense).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12 * (1.0 + x.norm() * h.norm()));
    }

    #[test]
    fn gram_is_hermitian_psd_and_dominates((data, filt) in boxes(), gradient in any::<bool>(), seed in any::<u64>()) {
        let spec = spec_for(&data, &filt, gradient);
        let x = random_grid(seed, &data);
        let g = gram_surrogate(&spec, &x).unwrap();
        prop_assert!(g.max_abs_diff(&g.adjoint()).unwrap() < 1e-12 * (1.0 + g.frobenius_norm()));
        let eig = hermitian_eigenvalues(&g).unwrap();
        let top = eig.last().copied().unwrap_or(0.0);
        prop_assert!(eig[0] > -1e-10 * top.max(1.0));
        let exact = singular_values_dense(&materialize_exact(&spec, &x).unwrap()).unwrap();
        let surrogate = singular_values_dense(&materialize_surrogate(&spec, &x).unwrap()).unwrap();
        for (a, b) in exact.iter().zip(&surrogate) {
            prop_assert!(*a <= b + 1e-10 * (1.0 + b));
        }
    }

    #[test]
    fn annihilation_weights_are_nonnegative((data, filt) in boxes(), p in 0.0f64..=1.0, seed in any::<u64>()) {
        let spec = spec_for(&data, &filt, true);
        let x = random_grid(seed, &data);
        let state = filter_update(&spec, &x, 0.1, p).unwrap();
        prop_assert!(state.d.iter().all(|&v| v >= 0.0 && v.is_finite()));
        prop_assert_eq!(state.eigvals.len(), spec.filter_len());
    }

    #[test]
    fn smoothing_schedule_descends_to_floor(eta in 1.01f64..3.0, outer in 1usize..80, rel in 1e-6f64..1.0) {
        let cfg = SolverConfig { eta, outer_iters: outer, eps_floor: EpsFloor::Relative(rel), ..SolverConfig::default() };
        let eps0 = 2.5;
        let mut last = f64::INFINITY;
        for n in 0..200 {
            let e = cfg.eps_at(eps0, n);
            prop_assert!(e <= last && e >= rel * eps0 * (1.0 - 1e-15));
            last = e;
        }
        prop_assert!((cfg.eps_at(eps0, 10_000) - rel * eps0).abs() <= 1e-12 * eps0);
    }

    #[test]
    fn majorizer_bounds_smoothed_penalty(
        rows in 2usize..8, cols in 1usize..6, p in prop::sample::select(vec![0.0, 0.25, 0.5, 1.0]),
        eps in 1e-3f64..2.0, seed in any::<u64>(), scale in 0.1f64..10.0,
    ) {
        let x = random_matrix(seed, rows, cols);
        let mut x0 = random_matrix(seed ^ 99, rows, cols);
        x0.scale(Complex64::new(scale, 0.0));
        let gap = majorizer_gap(&x, &x0, p, eps).unwrap();
        let size = smoothed_schatten(&x, p, eps).unwrap().abs() + smoothed_schatten(&x0, p, eps).unwrap().abs();
        prop_assert!(gap >= -1e-10 * (1.0 + size), "gap {}", gap);
        prop_assert!(majorizer_gap(&x0, &x0, p, eps).unwrap().abs() <= 1e-10 * (1.0 + size));
    }

    #[test]
    fn sampling_is_an_orthogonal_projection((data, _) in boxes(), usf in 0.05f64..=1.0, seed in any::<u64>()) {
        let mask = random_mask(&data, usf, seed, false).unwrap();
        prop_assert_eq!(mask.count(), (usf * data.len() as f64).ceil() as usize);
        let x = random_grid(seed, &data);
        let once = mask.project(&x).unwrap();
        prop_assert_eq!(mask.project(&once).unwrap(), once.clone());
        let b = mask.measure(&x).unwrap();
        prop_assert_eq!(mask.measure(&mask.adjoint(&b).unwrap()).unwrap(), b);
    }
}
