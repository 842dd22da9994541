use csgi_nn::checkpoint;
use csgi_nn::{Graph, ParamSet, TcnBlock, TcnSpec, Tensor};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tcn_spec() -> impl Strategy<Value = TcnSpec> {
    (
        1usize..4,
        1usize..5,
        prop::collection::vec(1usize..9, 1..4),
        1usize..3,
        0.0f64..0.5,
    )
        .prop_map(|(nb_filters, kernel_size, dilations, nb_stacks, dropout_rate)| TcnSpec {
            nb_filters,
            kernel_size,
            dilations,
            nb_stacks,
            dropout_rate,
        })
}

fn run_tcn(tcn: &TcnBlock, ps: &ParamSet, x: &Tensor, training: bool, seed: u64) -> Vec<f64> {
    let mut g = Graph::new(seed);
    let xv = g.input(x.clone());
    let y = tcn.forward(&mut g, ps, xv, training).unwrap();
    g.value(y).data().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tcn_is_causal(spec in tcn_spec(), cin in 1usize..3, n in 4usize..24, cut in 0usize..24, seed in 0u64..1000) {
        let cut = cut % n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        let tcn = TcnBlock::new(&mut ps, "t", cin, spec.clone(), &mut rng).unwrap();
        let data: Vec<f64> = (0..n * cin).map(|i| ((i * 7919 + seed as usize) % 97) as f64 / 48.0 - 1.0).collect();
        let x = Tensor::new(vec![1, n, cin], data.clone()).unwrap();
        let mut zeroed = data;
        zeroed[(cut + 1) * cin..].iter_mut().for_each(|v| *v = 0.0);
        let xz = Tensor::new(vec![1, n, cin], zeroed).unwrap();
        let a = run_tcn(&tcn, &ps, &x, false, 0);
        let b = run_tcn(&tcn, &ps, &xz, false, 0);
        let f = spec.nb_filters;
        prop_assert_eq!(&a[..(cut + 1) * f], &b[..(cut + 1) * f]);
    }

    #[test]
    fn evaluation_mode_is_bitwise_deterministic(spec in tcn_spec(), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamSet::new();
        let tcn = TcnBlock::new(&mut ps, "t", 1, spec, &mut rng).unwrap();
        let x = Tensor::new(vec![2, 10, 1], (0..20).map(|i| (i as f64).sin()).collect()).unwrap();
        let a = run_tcn(&tcn, &ps, &x, false, 1);
        let b = run_tcn(&tcn, &ps, &x, false, 2);
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn pool_upsample_preserves_length(rate in 1usize..6, blocks in 1usize..8, c in 1usize..4) {
        let n = rate * blocks;
        let mut g = Graph::new(0);
        let x = g.input(Tensor::full(&[2, n, c], 0.5));
        let p = g.avg_pool1d(x, rate).unwrap();
        let u = g.upsample1d(p, rate).unwrap();
        prop_assert_eq!(g.value(u).shape(), &[2, n, c][..]);
        prop_assert_eq!(g.value(u).data(), g.value(x).data());
    }
}

#[test]
fn checkpoint_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ps = ParamSet::new();
    let spec = TcnSpec {
        nb_filters: 3,
        kernel_size: 2,
        dilations: vec![1, 2],
        nb_stacks: 1,
        dropout_rate: 0.1,
    };
    let tcn = TcnBlock::new(&mut ps, "t", 1, spec.clone(), &mut rng).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.bin");
    checkpoint::save(&ps, &path).unwrap();

    let mut fresh = ParamSet::new();
    let tcn2 = TcnBlock::new(&mut fresh, "t", 1, spec, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    assert_ne!(fresh, ps);
    checkpoint::load_into(&mut fresh, &path).unwrap();
    assert_eq!(fresh, ps);
    let x = Tensor::new(vec![1, 8, 1], (0..8).map(f64::from).collect()).unwrap();
    assert_eq!(run_tcn(&tcn, &ps, &x, false, 0), run_tcn(&tcn2, &fresh, &x, false, 0));
}
