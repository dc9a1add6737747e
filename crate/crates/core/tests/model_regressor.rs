use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vttn::datagen::planted_tn_model;
use vttn::regressor::{build_full_u, build_uk, build_uk_pair, build_ut, simulate_series, supercore};
use vttn::tensor::{contract_mimo, kron_power, DenseTensor};
use vttn::{SystemShape, TimeSeriesDataset, VolterraModel};

fn random_inputs(p: usize, n: usize, rng: &mut ChaCha8Rng) -> TimeSeriesDataset {
    let inputs = (0..p).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    TimeSeriesDataset::inputs_only(inputs, None).unwrap()
}

fn full_tensor(model: &VolterraModel) -> DenseTensor {
    let s = model.shape();
    let mut dims = vec![s.l];
    dims.extend(std::iter::repeat_n(s.n(), s.degree));
    DenseTensor::new(dims, model.reconstruct_full().unwrap().as_slice().to_vec()).unwrap()
}

fn small_case() -> impl Strategy<Value = (usize, usize, usize, usize, usize, u64)> {
    // p, l, M, d, rank, seed
    (1..3usize, 1..3usize, 1..3usize, 1..4usize, 1..4usize, any::<u64>())
}

fn model_for(p: usize, l: usize, m: usize, d: usize, r: usize, seed: u64) -> VolterraModel {
    let shape = SystemShape::new(p, l, m, d).unwrap();
    let mut ranks = vec![l];
    ranks.extend(std::iter::repeat_n(r, d - 1));
    ranks.push(1);
    // Keep ranks structurally valid.
    let chain = shape.rank_chain(&ranks[1..d]).unwrap_or_else(|_| {
        let mut c = vec![l];
        c.extend(std::iter::repeat_n(1, d - 1));
        c.push(1);
        c
    });
    planted_tn_model(shape, &chain, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn simulation_matches_full_tensor((p, l, m, d, r, seed) in small_case()) {
        let model = model_for(p, l, m, d, r, seed);
        let full = full_tensor(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let data = random_inputs(p, 50, &mut rng);
        let y = simulate_series(&model, &data).unwrap();
        for t in 0..data.len() {
            let u = build_ut(&data, t, m).unwrap();
            let expect = contract_mimo(&full, &u).unwrap();
            let direct = model.simulate_sample(&u).unwrap();
            for i in 0..l {
                prop_assert!((y[(t, i)] - expect[i]).abs() <= 1e-10 * (1.0 + expect[i].abs()));
                prop_assert!((direct[i] - expect[i]).abs() <= 1e-10 * (1.0 + expect[i].abs()));
            }
        }
    }

    #[test]
    fn core_system_reproduces_simulation((p, l, m, d, r, seed) in small_case()) {
        let model = model_for(p, l, m, d, r, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let data = random_inputs(p, 30, &mut rng);
        let y = simulate_series(&model, &data).unwrap();
        let target: Vec<f64> = y.transpose().as_slice().to_vec();
        for k in 0..d {
            let uk = build_uk(&data, &model, k).unwrap();
            let x = nalgebra::DVector::from_column_slice(model.core(k).as_slice());
            let got = uk * x;
            for (a, b) in got.iter().zip(&target) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn pair_system_reproduces_simulation((p, l, m, d, r, seed) in small_case()) {
        prop_assume!(d >= 2);
        let model = model_for(p, l, m, d, r, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let data = random_inputs(p, 30, &mut rng);
        let y = simulate_series(&model, &data).unwrap();
        let target: Vec<f64> = y.transpose().as_slice().to_vec();
        for k in 0..d - 1 {
            let ukp = build_uk_pair(&data, &model, k).unwrap();
            let w = supercore(model.core(k), model.core(k + 1)).unwrap();
            let got = ukp * nalgebra::DVector::from_column_slice(w.data());
            for (a, b) in got.iter().zip(&target) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn reconstruct_then_contract_matches_sample(seed in any::<u64>()) {
        let model = model_for(1, 2, 2, 3, 2, seed);
        let v1 = model.reconstruct_full().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let kp = kron_power(&u, 3).unwrap();
            let out = model.simulate_sample(&u).unwrap();
            for (i, got) in out.iter().enumerate() {
                let expect: f64 = v1.row(i).iter().zip(&kp).map(|(a, b)| a * b).sum();
                prop_assert!((got - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
            }
        }
    }
}

#[test]
fn full_regression_matrix_rows_are_kron_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = random_inputs(2, 12, &mut rng);
    let u = build_full_u(&data, 1, 2).unwrap();
    assert_eq!(u.shape(), (12, 9));
    for t in 0..12 {
        let row = kron_power(&build_ut(&data, t, 1).unwrap(), 2).unwrap();
        for (j, v) in row.iter().enumerate() {
            assert_eq!(u[(t, j)], *v);
        }
    }
}

#[test]
fn parameter_count_matches_core_sizes() {
    let shape = SystemShape::new(1, 1, 7, 10).unwrap();
    let model = VolterraModel::zeros(shape, &[1, 8, 8, 8, 8, 8, 8, 8, 8, 8, 1]).unwrap();
    assert_eq!(model.parameter_count(), 2 * 8 * 8 + 8 * 8 * 8 * 8);
    assert_eq!(vttn::model::full_count(1, 7, 10), Some(8u128.pow(10)));
    assert_eq!(vttn::model::full_count(2, 2, 11), Some(5u128.pow(11)));
}
