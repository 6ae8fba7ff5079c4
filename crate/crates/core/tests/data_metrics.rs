use hcl_core::data::{
    inject_noise, sample_batch, split, synth_gaussian_views, synth_multiview, BatchSpec, Count, Dataset,
};
use hcl_core::losses::NegativeSets;
use hcl_core::metrics::{auc, column_auc, f1_score, Decision};
use hcl_core::optimizer::{quadratic_probe, LarsConfig, OptimizerState};
use hcl_core::{Matrix, Rng};

#[test]
fn noise_fraction_matches_level() {
    let x = Rng::new(1).normal_matrix(100, 100, 1.0);
    let base = hcl_core::data::rescale_columns(&x);
    let out = inject_noise(&x, 0.75, &mut Rng::new(2)).unwrap();
    let changed = out.as_slice().iter().zip(base.as_slice()).filter(|(a, b)| a != b).count();
    let frac = changed as f64 / 10_000.0;
    assert!((frac - 0.75).abs() <= 0.01, "{frac}");
}

fn pooled(n: usize, labeled: usize, seed: u64) -> Dataset {
    let x = Rng::new(seed).normal_matrix(n, 2, 1.0);
    let y = Matrix::from_fn(n, 1, |i, _| f64::from(u8::from(i % 2 == 0)));
    split(&Dataset::new("pool", vec![x], y).unwrap(), labeled, &mut Rng::new(seed + 1)).unwrap()
}

#[test]
fn plans_exclude_the_anchor() {
    let ds = pooled(40, 10, 3);
    let mut rng = Rng::new(4);
    for t in 0..1000 {
        let spec = BatchSpec {
            labeled: Count::Exactly(1 + t % 10),
            unlabeled: Count::Exactly(t % 20),
            negatives: Count::Exactly(t % 5),
        };
        let plan = match sample_batch(&ds, &spec, &mut rng) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let n = plan.anchors.len();
        for i in 0..n {
            assert_eq!(plan.negatives.set_len(i), (t % 5).min(n - 1));
            plan.negatives.for_each(i, |k| assert!(k != i && k < n));
        }
        assert!(plan.labeled.iter().all(|&p| ds.labeled_mask()[plan.anchors[p]]));
    }
}

#[test]
fn full_complement_negative_set() {
    let ds = pooled(4200, 200, 5);
    let spec = BatchSpec {
        labeled: Count::Full,
        unlabeled: Count::Full,
        negatives: Count::Exactly(4199),
    };
    let plan = sample_batch(&ds, &spec, &mut Rng::new(6)).unwrap();
    assert_eq!(plan.anchors.len(), 4200);
    assert_eq!(plan.negatives, NegativeSets::full(4200));
    assert_eq!(plan.negative_size(), 4199);
}

#[test]
fn plans_are_reproducible() {
    let ds = pooled(30, 8, 7);
    let spec = BatchSpec {
        labeled: Count::Exactly(4),
        unlabeled: Count::Exactly(6),
        negatives: Count::Exactly(5),
    };
    let a = sample_batch(&ds, &spec, &mut Rng::new(8)).unwrap();
    let b = sample_batch(&ds, &spec, &mut Rng::new(8)).unwrap();
    assert_eq!(a, b);
}

/// Solves `a·x = b` for square `a` by Gaussian elimination with pivoting.
fn solve(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).iter().chain(b.row(i)).copied().collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                let pivot = m[c].clone();
                m[r].iter_mut().zip(&pivot).for_each(|(x, y)| *x -= f * y);
            }
        }
    }
    Matrix::from_fn(n, b.cols(), |i, j| m[i][n + j] / m[i][i])
}

#[test]
fn noiseless_views_share_a_linear_latent() {
    let s = synth_multiview(300, 3, 5, 4, 0.0, &mut Rng::new(9)).unwrap();
    for (v, map) in s.maps.iter().enumerate() {
        // least squares h = X·B through the normal equations
        let x = s.dataset.view(v);
        let xtx = x.transposed_matmul(x).unwrap();
        let xth = x.transposed_matmul(&s.latent).unwrap();
        let recovered = if v == 0 {
            x.matmul(&solve(&xtx, &xth)).unwrap()
        } else {
            // X2 = h·A with A wide: h = X2·Aᵀ(AAᵀ)⁻¹
            let aat = map.matmul_transposed(map).unwrap();
            let inv = solve(&aat, &Matrix::identity(3));
            x.matmul_transposed(map).unwrap().matmul(&inv).unwrap()
        };
        assert!(recovered.sub(&s.latent).unwrap().max_abs() < 1e-8);
    }
    for a in 0..4 {
        let pos = s.dataset.labels().column(a).iter().sum::<f64>();
        assert!(pos >= 1.0 && pos <= 299.0);
    }
    let again = synth_multiview(300, 3, 5, 4, 0.0, &mut Rng::new(9)).unwrap();
    assert_eq!(again.dataset.labels(), s.dataset.labels());
}

#[test]
fn gaussian_views_have_the_stated_correlation() {
    let g = synth_gaussian_views(20_000, 2, 1.0, &mut Rng::new(10)).unwrap();
    assert_eq!(g.rho, 0.5);
    // rotations preserve the cross-covariance trace: tr(X1ᵀX2 Q) is not
    // directly observable, so check total canonical strength via ‖X1ᵀX2‖_F² / n²
    let c = g.views[0].transposed_matmul(&g.views[1]).unwrap().scale(1.0 / 20_000.0);
    let strength = c.norm().powi(2);
    assert!((strength - 2.0 * 0.25 * 4.0).abs() < 0.1, "{strength}");
}

fn brute_f1(pred: &Matrix, y: &Matrix) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
    for i in 0..y.rows() {
        for j in 0..y.cols() {
            let (p, t) = (pred[(i, j)] == 1.0, y[(i, j)] == 1.0);
            if p && t {
                tp += 1.0;
            } else if p {
                fp += 1.0;
            } else if t {
                fneg += 1.0;
            }
        }
    }
    if tp + fp + fneg == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fneg)
    }
}

fn pairwise_auc(s: &[f64], y: &[f64]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..s.len() {
        for k in 0..s.len() {
            if y[i] == 1.0 && y[k] == 0.0 {
                pairs += 1.0;
                wins += if s[i] > s[k] {
                    1.0
                } else if s[i] == s[k] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

#[test]
fn f1_matches_counting_oracle() {
    let mut rng = Rng::new(11);
    for _ in 0..50 {
        let p = rng.uniform(50, 6, 0.0, 1.0).unwrap();
        let y = Matrix::from_fn(50, 6, |_, _| f64::from(u8::from(rng.next_f64() < 0.3)));
        let pred = p.map(|v| f64::from(u8::from(v >= 0.5)));
        assert_eq!(f1_score(&p, &y, Decision::Threshold(0.5)).unwrap(), brute_f1(&pred, &y));
    }
}

#[test]
fn auc_matches_pairwise_oracle_with_ties() {
    let mut rng = Rng::new(12);
    for _ in 0..50 {
        // coarse scores force ties
        let s = Matrix::from_fn(40, 3, |_, _| (rng.below(6) as f64) / 5.0);
        let y = Matrix::from_fn(40, 3, |_, _| f64::from(u8::from(rng.next_f64() < 0.4)));
        let r = auc(&s, &y).unwrap();
        for a in 0..3 {
            let oracle = pairwise_auc(&s.column(a), &y.column(a));
            match (r.per_label[a], oracle) {
                (Some(x), Some(o)) => assert!((x - o).abs() < 1e-12),
                (None, None) => {}
                other => panic!("{other:?}"),
            }
        }
    }
}

#[test]
fn auc_is_rank_based_and_flips() {
    let mut rng = Rng::new(13);
    let s: Vec<f64> = (0..30).map(|_| rng.next_f64()).collect();
    let y: Vec<f64> = (0..30).map(|i| f64::from(u8::from(i % 3 == 0))).collect();
    let a = column_auc(&s, &y).unwrap().unwrap();
    let warped: Vec<f64> = s.iter().map(|v| (5.0 * v).exp()).collect();
    assert!((column_auc(&warped, &y).unwrap().unwrap() - a).abs() < 1e-12);
    let flipped_y: Vec<f64> = y.iter().map(|v| 1.0 - v).collect();
    let flipped_s: Vec<f64> = s.iter().map(|v| 1.0 - v).collect();
    assert!((column_auc(&flipped_s, &y).unwrap().unwrap() - (1.0 - a)).abs() < 1e-12);
    assert!((column_auc(&flipped_s, &flipped_y).unwrap().unwrap() - a).abs() < 1e-12);
}

#[test]
fn probe_norms_stay_finite_under_momentum() {
    let w0 = Rng::new(14).uniform(3, 3, -1.0, 1.0).unwrap();
    let mut s = OptimizerState::new(LarsConfig {
        base_lr: 1.0,
        momentum: 0.9,
        eta: 0.05,
        weight_decay: 0.0,
    })
    .unwrap();
    let r = quadratic_probe(|w| Ok((0.5 * w.norm() * w.norm(), w.clone())), &w0, &mut s, 10_000).unwrap();
    assert!(r.diverged_at.is_none());
    assert!(r.final_params.is_finite());
    assert_eq!(r.trace.len(), 10_000);
}

proptest::proptest! {
    #[test]
    fn zero_wd_step_follows_negative_gradient(seed in 0u64..10_000) {
        let mut rng = Rng::new(seed);
        let mut w = rng.uniform(3, 4, -1.0, 1.0).unwrap();
        let g = rng.uniform(3, 4, -1.0, 1.0).unwrap();
        let before = w.clone();
        let mut s = OptimizerState::new(LarsConfig { momentum: 0.0, ..LarsConfig::default() }).unwrap();
        s.step_tensors(&mut [&mut w], &[&g], &[hcl_core::optimizer::ParamKind::Weight], &|_| String::new()).unwrap();
        let step = w.sub(&before).unwrap();
        for (d, gg) in step.as_slice().iter().zip(g.as_slice()) {
            proptest::prop_assert!(*gg == 0.0 || d.signum() == -gg.signum());
        }
    }

    #[test]
    fn noise_output_in_unit_interval(seed in 0u64..10_000, level in 0.0f64..=1.0) {
        let mut rng = Rng::new(seed);
        let x = rng.normal_matrix(20, 5, 4.0);
        let out = inject_noise(&x, level, &mut rng).unwrap();
        proptest::prop_assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
