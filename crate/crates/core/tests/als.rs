mod common;

use common::*;
use ngcp::als::{als_sweep, sweep_in_place};
use ngcp::tensor::{gram_hadamard, mttkrp};
use ngcp::{objective, KruskalTensor, Tensor};

#[test]
fn sweeps_never_increase_the_objective() {
    let mut rng = rng(21);
    for case in 0..10 {
        let sparse = case % 2 == 1;
        let dims = [6, 5, 4];
        let t = random_tensor(&mut rng, &dims, sparse);
        let mut k = random_ktensor(&mut rng, &dims, 3);
        let mut f = objective(&t, &k).unwrap();
        for sweep in 0..50 {
            k = als_sweep(&t, &k).unwrap();
            let next = objective(&t, &k).unwrap();
            assert!(next <= f + 1e-12 * (1.0 + f.abs()), "case {case} sweep {sweep}: {f} -> {next}");
            f = next;
        }
    }
}

#[test]
fn each_block_update_zeroes_its_gradient_block() {
    let mut rng = rng(22);
    for sparse in [false, true] {
        let dims = [5, 4, 6, 3];
        let t = random_tensor(&mut rng, &dims, sparse);
        let mut factors = random_ktensor(&mut rng, &dims, 2).into_factors();
        sweep_in_place(&t, &mut factors, |n, fs| {
            let m = mttkrp(&t, fs, n).unwrap();
            let gamma = gram_hadamard(fs, Some(n)).unwrap();
            let ag = fs[n].matmul(&gamma).unwrap();
            let block: Vec<f64> = ag.as_slice().iter().zip(m.as_slice()).map(|(a, b)| a - b).collect();
            assert!(norm(&block) <= 1e-10 * (1.0 + m.frobenius_norm()), "mode {n}: {}", norm(&block));
        })
        .unwrap();
    }
}

#[test]
fn exact_model_is_a_fixed_point() {
    let mut rng = rng(23);
    let k = random_ktensor(&mut rng, &[5, 6, 4], 2).normalize_and_reorder();
    let t = Tensor::Dense(k.full().unwrap());
    let out = als_sweep(&t, &k).unwrap();
    for (a, b) in out.factors().iter().zip(k.factors()) {
        assert!(a.max_abs_diff(b) <= 1e-10);
    }
}

#[test]
fn sweep_output_is_canonical() {
    let mut rng = rng(24);
    let dims = [4, 4, 4];
    let t = random_tensor(&mut rng, &dims, false);
    let k = als_sweep(&t, &random_ktensor(&mut rng, &dims, 3)).unwrap();
    let again: KruskalTensor = k.normalize_and_reorder();
    for (a, b) in again.factors().iter().zip(k.factors()) {
        assert!(a.max_abs_diff(b) <= 1e-14);
    }
}
