use csgi_core::ccm::ccm_pair;
use csgi_core::dynsys::{simulate_coupled_ar, simulate_two_species};
use csgi_core::metrics::csgi;
use csgi_core::slgc::{slgc_pair, SlgcConfig};
use csgi_core::stats::mean;
use csgi_core::te::{te_pair, TeConfig};
use csgi_core::TimeSeries;

fn pair(sim: &csgi_core::dynsys::SimOutput) -> (TimeSeries, TimeSeries) {
    (sim.get("x").unwrap().clone(), sim.get("y").unwrap().clone())
}

/// Population CSGI of an order-1 Granger model for the coupled AR pair,
/// from the stationary covariance of the VAR(1).
/// Returns `(x → y, y → x)`.
fn ar_oracle(c: f64, q: f64) -> (f64, f64) {
    let a = [[0.5, 0.2], [c, 0.7]];
    let mut s = [[0.0; 2]; 2];
    for _ in 0..5000 {
        let mut n = [[q, 0.0], [0.0, q]];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        n[i][j] += a[i][k] * s[k][l] * a[j][l];
                    }
                }
            }
        }
        s = n;
    }
    let chi = |t: usize| {
        let lag1 = a[t][0] * s[0][t] + a[t][1] * s[1][t];
        csgi(1.0 - q / s[t][t], (lag1 / s[t][t]).powi(2))
    };
    (chi(1), chi(0))
}

#[test]
fn slgc_matches_var_oracle() {
    for (i, c) in [0.0, 0.2, 0.4, 0.6].into_iter().enumerate() {
        let (x, y) = pair(&simulate_coupled_ar(c, 100_000, 1000, 0.1, 30 + i as u64).unwrap());
        let cfg = SlgcConfig { order: Some(1), n_bootstrap: 10, seed: 3, ..SlgcConfig::default() };
        let tc = slgc_pair(&x, &y, &cfg).unwrap().timecourse;
        let (oxy, oyx) = ar_oracle(c, 0.1);
        let (mxy, myx) = (mean(&tc.chi_xy), mean(&tc.chi_yx));
        assert!((mxy - oxy).abs() < 0.01, "C={c}: x→y {mxy} vs {oxy}");
        assert!((myx - oyx).abs() < 0.02, "C={c}: y→x {myx} vs {oyx}");
    }
}

#[test]
fn slgc_swap_swaps_directions() {
    let (x, y) = pair(&simulate_coupled_ar(0.3, 5000, 100, 0.1, 4).unwrap());
    let cfg = SlgcConfig { window_len: 500, stride: 500, n_bootstrap: 5, seed: 1, ..SlgcConfig::default() };
    let a = slgc_pair(&x, &y, &cfg).unwrap().timecourse;
    let b = slgc_pair(&y, &x, &cfg).unwrap().timecourse;
    assert_eq!(a.chi_xy, b.chi_yx);
    assert_eq!(a.chi_yx, b.chi_xy);
}

#[test]
fn te_follows_ground_truth_direction() {
    let cfg = TeConfig { n_shuffles: 5, seed: 2, ..TeConfig::default() };
    let (x, y) = pair(&simulate_coupled_ar(0.0, 300_000, 1000, 0.1, 5).unwrap());
    let (xy, yx) = te_pair(&x, &y, &cfg).unwrap();
    assert!(yx.value > 3.0 * xy.value, "{} vs {}", yx.value, xy.value);

    let (x, y) = pair(&simulate_two_species(0.3, 50_000, 1000, 6).unwrap());
    let (xy, yx) = te_pair(&x, &y, &cfg).unwrap();
    assert!(xy.value > yx.value, "{} vs {}", xy.value, yx.value);

    let (a, b) = te_pair(&x, &x, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ccm_swap_swaps_directions() {
    let (x, y) = pair(&simulate_two_species(0.1, 3000, 500, 7).unwrap());
    let libs = [50, 200, 800];
    let a = ccm_pair(&x, &y, 2, 1, &libs, 3, 9).unwrap();
    let b = ccm_pair(&y, &x, 2, 1, &libs, 3, 9).unwrap();
    assert_eq!(a.skill_xy, b.skill_yx);
    assert_eq!(a.skill_yx, b.skill_xy);
    assert!(a.skill_xy.iter().chain(&a.skill_yx).all(|s| s.is_finite() && *s <= 1.0));
}
