mod common;

use common::*;
use ngcp::io::{read_tensor, write_tensor};
use ngcp::tensor::kernels::matricize_dense;
use ngcp::tensor::{gram_hadamard, khatri_rao, mttkrp};
use ngcp::{KruskalTensor, Shape, SparseTensor, Tensor};
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sparse_and_dense_mttkrp_agree(dims in dims_strategy(), rank in 1usize..4, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let s = random_sparse(&mut rng, &dims, 0.4);
        let d = Tensor::Dense(s.to_dense());
        let s = Tensor::Sparse(s);
        let k = random_ktensor(&mut rng, &dims, rank);
        for n in 0..dims.len() {
            let a = mttkrp(&s, k.factors(), n).unwrap();
            let b = mttkrp(&d, k.factors(), n).unwrap();
            prop_assert!(a.max_abs_diff(&b) <= 1e-12 * (1.0 + b.frobenius_norm()));
        }
    }

    #[test]
    fn mttkrp_is_unfolding_times_khatri_rao(dims in dims_strategy(), rank in 1usize..4, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let t = random_dense(&mut rng, &dims);
        let k = random_ktensor(&mut rng, &dims, rank);
        for n in 0..dims.len() {
            let others: Vec<_> = (0..dims.len()).filter(|&m| m != n).map(|m| k.factor(m)).collect();
            let expected = if others.is_empty() {
                let mut col = ngcp::Matrix::zeros(dims[n], rank);
                for i in 0..dims[n] {
                    for r in 0..rank {
                        col.set(i, r, t.values()[i]);
                    }
                }
                col
            } else {
                matricize_dense(&t, n).matmul(&khatri_rao(&others).unwrap()).unwrap()
            };
            let got = mttkrp(&Tensor::Dense(t.clone()), k.factors(), n).unwrap();
            prop_assert!(got.max_abs_diff(&expected) <= 1e-12 * (1.0 + expected.frobenius_norm()));
        }
    }

    #[test]
    fn full_entries_are_sums_of_products(dims in dims_strategy(), rank in 1usize..4, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let k = random_ktensor(&mut rng, &dims, rank);
        let full = k.full().unwrap();
        let shape = Shape::new(dims.clone()).unwrap();
        let mut idx = vec![0; dims.len()];
        for off in 0..shape.len() {
            shape.unravel(off, &mut idx);
            let v: f64 = (0..rank)
                .map(|r| idx.iter().enumerate().map(|(n, &i)| k.factor(n).get(i, r)).product::<f64>())
                .sum();
            prop_assert!((full.values()[off] - v).abs() <= 1e-13 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn gram_hadamard_is_positive_semidefinite(dims in dims_strategy(), rank in 1usize..5, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let k = random_ktensor(&mut rng, &dims, rank);
        let g = gram_hadamard(k.factors(), None).unwrap();
        for i in 0..rank {
            for j in 0..rank {
                prop_assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
        for _ in 0..8 {
            let x: Vec<f64> = (0..rank).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let q: f64 = (0..rank).flat_map(|i| (0..rank).map(move |j| (i, j))).map(|(i, j)| x[i] * g.get(i, j) * x[j]).sum();
            prop_assert!(q >= -1e-12 * (1.0 + g.frobenius_norm()));
        }
    }

    #[test]
    fn packing_round_trips(dims in dims_strategy(), rank in 1usize..4, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let k = random_ktensor(&mut rng, &dims, rank);
        let u = k.pack();
        prop_assert_eq!(u.len(), KruskalTensor::packed_len(k.shape(), rank));
        prop_assert_eq!(KruskalTensor::unpack(&u, k.shape(), rank).unwrap(), k);
    }

    #[test]
    fn normalization_preserves_the_model(dims in prop::collection::vec(1usize..5, 2..5), rank in 1usize..4, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let k = random_ktensor(&mut rng, &dims, rank);
        let n = k.normalize_and_reorder();
        let (a, b) = (k.full().unwrap(), n.full().unwrap());
        let scale = 1.0 + a.frobenius_norm();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
        let twice = n.normalize_and_reorder();
        for (x, y) in twice.factors().iter().zip(n.factors()) {
            prop_assert!(x.max_abs_diff(y) <= 1e-14 * (1.0 + y.frobenius_norm()));
        }
    }

    #[test]
    fn tensor_text_round_trips(dims in dims_strategy(), seed in any::<u64>(), sparse in any::<bool>()) {
        let mut rng = rng(seed);
        let t = if sparse {
            Tensor::Sparse(random_sparse(&mut rng, &dims, 0.3))
        } else {
            Tensor::Dense(random_dense(&mut rng, &dims))
        };
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t).unwrap();
        let back = read_tensor(buf.as_slice()).unwrap();
        prop_assert_eq!(back.to_dense(), t.to_dense());
    }

    #[test]
    fn sparse_entries_are_canonical(dims in dims_strategy(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let shape = Shape::new(dims.clone()).unwrap();
        let mut idx = vec![0; dims.len()];
        let entries: Vec<_> = (0..12)
            .map(|_| {
                shape.unravel(rand::Rng::gen_range(&mut rng, 0..shape.len()), &mut idx);
                (idx.clone(), rand::Rng::gen_range(&mut rng, -2i32..3) as f64)
            })
            .collect();
        let s = SparseTensor::from_entries(shape, entries).unwrap();
        let coords: Vec<Vec<usize>> = s.iter().map(|(c, _)| c.to_vec()).collect();
        prop_assert!(coords.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.values().iter().all(|&v| v != 0.0));
    }
}
