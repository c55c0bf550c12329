use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdp_tensor::check::grad_check;
use sdp_tensor::{ParamStore, Tape, Tensor, Var};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn store_with(rng: &mut ChaCha8Rng, shapes: &[(&str, &[usize])]) -> ParamStore {
    let mut store = ParamStore::new();
    for (name, shape) in shapes {
        store.add(*name, random(rng, shape)).unwrap();
    }
    store
}

fn p<'t>(tape: &'t Tape, s: &ParamStore, name: &str) -> Var<'t> {
    tape.param(s, s.id(name).unwrap())
}

#[test]
fn elementwise_and_reduction_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let store = store_with(&mut rng, &[("a", &[3, 4]), ("b", &[3, 4]), ("c", &[1, 4])]);
    let report = grad_check(&store, H, |t, s| {
        let (a, b, c) = (p(t, s, "a"), p(t, s, "b"), p(t, s, "c"));
        let x = a.mul(b)?.add(a.sigmoid())?.sub(b.tanh())?;
        let y = x.add_broadcast(c)?.relu().add(a.exp().scale(0.3))?;
        let z = b.square().add_broadcast(t.scalar(2.0))?.log();
        y.add(z)?.softmax().square().sum().add(x.mean())
    })
    .unwrap();
    assert!(report.passes(TOL), "{report:?}");
}

#[test]
fn structural_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let store = store_with(
        &mut rng,
        &[
            ("a", &[2, 3]),
            ("b", &[3, 5]),
            ("c", &[4, 3]),
            ("d", &[2, 1]),
            ("e", &[6, 3]),
        ],
    );
    let report = grad_check(&store, H, |t, s| {
        let (a, b, c, d, e) = (p(t, s, "a"), p(t, s, "b"), p(t, s, "c"), p(t, s, "d"), p(t, s, "e"));
        let ab = a.matmul(b)?; // 2×5
        let cat = Var::concat(&[ab, d, a])?; // 2×9
        let stacked = Var::vcat(&[a, c])?; // 6×3
        let tr = stacked.transpose()?.matmul(e)?; // 3×3
        let sliced = cat.slice_cols(2, 5)?; // 2×3
        let gathered = e.gather_rows(&[0, 5, 0])?; // 3×3
        let tiled = d.tile_rows(3)?.reshape(&[3, 2])?; // 3×2
        let colb = sliced.add_broadcast(d)?.sum();
        let total = tr.mul(gathered)?.sum().add(colb)?.add(tiled.square().sum())?;
        Ok(total)
    })
    .unwrap();
    assert!(report.passes(TOL), "{report:?}");
}

#[test]
fn fused_losses() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let store = store_with(&mut rng, &[("s", &[4, 5])]);
    let targets: Vec<f64> = (0..20).map(|i| (i % 3 == 0) as u8 as f64).collect();
    let weights: Vec<f64> = (0..20).map(|i| if i % 7 == 0 { 0.0 } else { 1.0 }).collect();
    let report = grad_check(&store, H, |t, s| {
        let x = p(t, s, "s").scale(3.0);
        let bce = x.bce_with_logits_sum(&targets, &weights)?;
        let ce = x.cross_entropy_rows_sum(&[0, 3, 3], &[1, 4, 0])?;
        let strided = x.cross_entropy_strided_sum(&[1, 2], 5, 4, &[2, 0])?;
        bce.add(ce)?.add(strided)
    })
    .unwrap();
    assert!(report.passes(TOL), "{report:?}");
}

#[test]
fn random_three_layer_mlp() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let store = store_with(
        &mut rng,
        &[
            ("w1", &[6, 8]),
            ("b1", &[1, 8]),
            ("w2", &[8, 8]),
            ("b2", &[1, 8]),
            ("w3", &[8, 1]),
            ("b3", &[1, 1]),
        ],
    );
    let input = random(&mut rng, &[5, 6]);
    let target = random(&mut rng, &[5, 1]);
    let report = grad_check(&store, H, |t, s| {
        let x = t.constant(input.clone());
        let h1 = x.matmul(p(t, s, "w1"))?.add_broadcast(p(t, s, "b1"))?.tanh();
        let h2 = h1.matmul(p(t, s, "w2"))?.add_broadcast(p(t, s, "b2"))?.relu();
        let y = h2.matmul(p(t, s, "w3"))?.add_broadcast(p(t, s, "b3"))?;
        Ok(y.sub(t.constant(target.clone()))?.square().mean())
    })
    .unwrap();
    assert!(report.passes(TOL), "{report:?}");
    assert_eq!(report.checked, 6 * 8 + 8 + 64 + 8 + 8 + 1);
}

#[test]
fn bce_of_sigmoid_matches_analytic_oracle() {
    // d/dx BCE(σ(x), y) = σ(x) − y
    for &(x, y) in &[(0.0, 1.0), (2.0, 0.0), (-1.5, 1.0), (30.0, 1.0)] {
        let tape = Tape::new();
        let v = tape.scalar(x);
        let loss = v.bce_with_logits_sum(&[y], &[1.0]).unwrap();
        let g = tape.backward(loss).unwrap();
        let sigma = 1.0 / (1.0 + f64::exp(-x));
        assert!((g.wrt(v).unwrap().item() - (sigma - y)).abs() < 1e-12);
    }
}

#[test]
fn same_seed_same_dropout_mask() {
    let run = |seed| {
        let tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = tape.constant(Tensor::full(&[10, 10], 1.0));
        x.dropout(0.33, true, &mut rng).unwrap().value().data().to_vec()
    };
    assert_eq!(run(9), run(9));
    assert_ne!(run(9), run(10));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matmul_gradient_is_bilinear(seed in 0u64..10_000, m in 1usize..5, k in 1usize..5, n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let store = store_with(&mut rng, &[("a", &[m, k]), ("b", &[k, n])]);
            let report = grad_check(&store, H, |t, s| {
                Ok(p(t, s, "a").matmul(p(t, s, "b"))?.square().sum())
            }).unwrap();
            prop_assert!(report.passes(TOL), "{:?}", report);
        }
    }
}
