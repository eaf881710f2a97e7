use matrixlens_core::calctrace::{add_trace, det_trace, mul_trace, verify_trace, StepKind, TraceResult};
use matrixlens_core::MatrixValue;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Leibniz sum over permutations with inversion-count parity.
fn permutation_det(m: &MatrixValue) -> i128 {
    let n = m.rows();
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for k in 0..=p.len() {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }
    perms(n)
        .into_iter()
        .map(|p| {
            let inv = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            let prod: i128 = (0..n).map(|r| m.get(r, p[r]) as i128).product();
            if inv % 2 == 0 { prod } else { -prod }
        })
        .sum()
}

fn scalar(t: &TraceResult) -> i64 {
    match t {
        TraceResult::Scalar { value } => *value,
        other => panic!("expected scalar, got {other:?}"),
    }
}

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: i64, hi: i64) -> MatrixValue {
    MatrixValue::from_flat(r, c, (0..r * c).map(|_| rng.random_range(lo..=hi)).collect()).unwrap()
}

#[test]
fn exhaustive_two_by_two() {
    let range = -3i64..=3;
    for a in range.clone() {
        for b in range.clone() {
            for c in range.clone() {
                for d in range.clone() {
                    let m = MatrixValue::from_rows(vec![vec![a, b], vec![c, d]]).unwrap();
                    let t = det_trace(&m).unwrap();
                    assert_eq!(scalar(&t.result) as i128, permutation_det(&m));
                    assert!(verify_trace(&t).passed);
                }
            }
        }
    }
}

#[test]
fn random_three_by_three() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..10_000 {
        let m = random(&mut rng, 3, 3, -9, 9);
        let t = det_trace(&m).unwrap();
        assert_eq!(scalar(&t.result) as i128, permutation_det(&m), "{m}");
        let products = t.steps.iter().filter(|s| s.kind == StepKind::Multiply).count();
        assert_eq!(products, 6);
        assert!(verify_trace(&t).passed);
    }
}

#[test]
fn add_and_mul_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let (r, k, c) = (rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(1..=4));
        let a = random(&mut rng, r, k, -20, 20);
        let b = random(&mut rng, r, k, -20, 20);
        let t = add_trace(&a, &b).unwrap();
        let TraceResult::Matrix { matrix } = &t.result else { panic!() };
        for i in 0..r {
            for j in 0..k {
                assert_eq!(matrix.get(i, j), a.get(i, j) + b.get(i, j));
            }
        }
        assert!(verify_trace(&t).passed);

        let b = random(&mut rng, k, c, -20, 20);
        let t = mul_trace(&a, &b).unwrap();
        let TraceResult::Matrix { matrix } = &t.result else { panic!() };
        assert_eq!(matrix.shape(), (r, c));
        for i in 0..r {
            for j in 0..c {
                let mut v = 0;
                for x in 0..k {
                    v += a.get(i, x) * b.get(x, j);
                }
                assert_eq!(matrix.get(i, j), v);
            }
        }
        assert!(verify_trace(&t).passed);
    }
}

fn three_by_three() -> impl Strategy<Value = MatrixValue> {
    proptest::collection::vec(-50i64..=50, 9).prop_map(|v| MatrixValue::from_flat(3, 3, v).unwrap())
}

proptest! {
    #[test]
    fn equal_rows_give_zero(m in three_by_three(), src in 0usize..3, dst in 0usize..3) {
        prop_assume!(src != dst);
        let mut m = m;
        for c in 0..3 {
            let v = m.get(src, c);
            m.set(dst, c, v);
        }
        prop_assert_eq!(scalar(&det_trace(&m).unwrap().result), 0);
    }

    #[test]
    fn transpose_keeps_det(m in three_by_three()) {
        prop_assert_eq!(scalar(&det_trace(&m).unwrap().result), scalar(&det_trace(&m.transpose()).unwrap().result));
    }

    #[test]
    fn row_swap_negates(m in three_by_three(), i in 0usize..3, j in 0usize..3) {
        prop_assume!(i != j);
        let mut rows = m.to_rows();
        rows.swap(i, j);
        let s = MatrixValue::from_rows(rows).unwrap();
        prop_assert_eq!(scalar(&det_trace(&m).unwrap().result), -scalar(&det_trace(&s).unwrap().result));
    }

    #[test]
    fn det_is_multiplicative(a in three_by_three(), b in three_by_three()) {
        let ab = mul_trace(&a, &b).unwrap();
        let TraceResult::Matrix { matrix } = ab.result else { unreachable!() };
        let lhs = scalar(&det_trace(&matrix).unwrap().result) as i128;
        let rhs = scalar(&det_trace(&a).unwrap().result) as i128 * scalar(&det_trace(&b).unwrap().result) as i128;
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn trace_json_round_trip() {
    let m = MatrixValue::from_rows(vec![vec![1, 2, 3], vec![-4, -5, -6], vec![7, 8, 9]]).unwrap();
    let t = det_trace(&m).unwrap();
    let back: matrixlens_core::calctrace::CalcTrace = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(back, t);
    let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(v["op"], "det");
    assert_eq!(v["steps"][1]["kind"], "multiply");
    assert_eq!(v["result"]["kind"], "scalar");
}
