use rand::Rng;

use csgi_core::metrics::r_squared;
use csgi_core::stats::seeded_rng;
use csgi_core::TimeSeries;
use csgi_taci::eval::predict_series;
use csgi_taci::train::train_network;
use csgi_taci::{evaluate_pair, load_model_set, predict_pair, save_model_set, train_pair, TaciConfig, TaciNet};

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

fn series(values: Vec<f64>, label: &str) -> TimeSeries {
    TimeSeries::new(values, 1.0, label).unwrap()
}

fn small(epochs: usize) -> TaciConfig {
    TaciConfig { epochs, window_len: 500, ..TaciConfig::desk() }
}

#[test]
fn learns_delayed_copy() {
    let cfg = small(50);
    let x = noise(20_000, 1);
    let mut y = vec![0.0; x.len()];
    y[cfg.lag..].copy_from_slice(&x[..x.len() - cfg.lag]);
    let mut net = TaciNet::new(&cfg, 3).unwrap();
    train_network(&mut net, &x, &y, 3, "copy").unwrap();
    let pred = predict_series(&net, &x, &y).unwrap();
    let first = cfg.seq_length - 1 + cfg.lag;
    let r2 = r_squared(&pred, &y[first..]).unwrap();
    assert!(r2 > 0.95, "R² {r2}");
}

#[test]
fn white_noise_is_unpredictable_and_checkpoints_round_trip() {
    let cfg = TaciConfig { train_stride: 1, ..small(8) };
    let (x, y) = (series(noise(6000, 10), "x"), series(noise(6000, 11), "y"));
    let models = train_pair(&x, &y, &cfg, 5).unwrap();

    let (hx, hy) = (series(noise(4000, 12), "x"), series(noise(4000, 13), "y"));
    let (xy, yx) = predict_pair(&models, &hx, &hy).unwrap();
    for (full, surr) in [xy.r_squared().unwrap(), yx.r_squared().unwrap()] {
        assert!(full.abs() < 0.1 && surr.abs() < 0.1, "R² {full} {surr}");
    }

    let a = evaluate_pair(&models, &hx, &hy, 500, 500, 20, 9).unwrap();
    let b = evaluate_pair(&models, &hx, &hy, 500, 500, 20, 9).unwrap();
    assert_eq!(a, b);

    let dir = tempfile::tempdir().unwrap();
    save_model_set(&models, dir.path()).unwrap();
    let loaded = load_model_set(dir.path()).unwrap();
    assert_eq!(predict_pair(&loaded, &hx, &hy).unwrap(), (xy, yx));
    assert_eq!(evaluate_pair(&loaded, &hx, &hy, 500, 500, 20, 9).unwrap(), a);
}

#[test]
fn fixed_seed_gives_identical_loss_curves() {
    let cfg = small(4);
    let (x, y) = (noise(3000, 20), noise(3000, 21));
    let run = || {
        let mut net = TaciNet::new(&cfg, 8).unwrap();
        let hist = train_network(&mut net, &x, &y, 8, "det").unwrap();
        (hist, predict_series(&net, &x, &y).unwrap())
    };
    let (h1, p1) = run();
    let (h2, p2) = run();
    assert_eq!(h1.train_loss.len(), 4);
    assert_eq!(h1, h2);
    assert_eq!(p1, p2);
}
