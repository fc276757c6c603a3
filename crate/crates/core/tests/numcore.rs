use leo_core::numcore::{finite_diff_check, masked_softmax, Tape, Tensor};
use proptest::prelude::*;

#[test]
fn reusing_a_tensor_accumulates_its_gradient() {
    let w = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
    let mut t = Tape::new();
    let v = t.param(&w);
    let sq = t.mul(v, v).unwrap();
    let l = t.sum(sq);
    t.backward(l).unwrap();
    assert_eq!(t.grad(v), vec![2.0, -4.0, 1.0]);
}

#[test]
fn backward_is_bit_reproducible() {
    let w = Tensor::new(vec![2, 3], vec![0.3, -0.1, 0.7, 0.2, 0.9, -0.4]).unwrap();
    let run = || {
        let mut t = Tape::new();
        let v = t.param(&w);
        let x = t.constant_vec(vec![1.0, 2.0, -1.0]);
        let y = t.matvec(v, x).unwrap();
        let y = t.tanh(y);
        let s = t.log_softmax(y).unwrap();
        let l = t.pick(s, 1).unwrap();
        t.backward(l).unwrap();
        t.grad(v).iter().map(|g| g.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn finite_differences_are_exact_for_linear_maps() {
    let a = [0.5, -1.5, 2.0, 3.25];
    let f = |w: &[f64]| w.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>();
    let w = [0.1, 0.2, -0.3, 0.4];
    let r = finite_diff_check(|w: &[f64]| Ok(f(w)), &w, &a, 1e-5).unwrap();
    assert!(r.passes(1e-9), "{r:?}");
    let doubled: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
    let bad = finite_diff_check(|w: &[f64]| Ok(f(w)), &w, &doubled, 1e-5).unwrap();
    assert!(!bad.passes(1e-3));
}

proptest! {
    #[test]
    fn masked_softmax_normalizes_and_ignores_shifts(
        v in prop::collection::vec(-30.0f64..30.0, 1..12),
        mask_bits in any::<u16>(),
        shift in -100.0f64..100.0,
    ) {
        let mut masked: Vec<bool> = (0..v.len()).map(|i| mask_bits >> i & 1 == 1).collect();
        masked[0] = false;
        let p = masked_softmax(&v, &masked).unwrap();
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for (pi, &m) in p.iter().zip(&masked) {
            if m { prop_assert_eq!(*pi, 0.0); }
        }
        let shifted: Vec<f64> = v.iter().zip(&masked).map(|(x, &m)| if m { *x } else { x + shift }).collect();
        let q = masked_softmax(&shifted, &masked).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
