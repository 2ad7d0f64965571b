mod common;

use common::oracle;
use dissolve_core::experiment::{
    self, build_features, fit_channel, run_selected, split, sweep, sweep_with, CombinationSpec,
    Grouping, ModelGrid, SplitSpec, SweepOptions,
};
use dissolve_core::mlp::MlpConfig;
use dissolve_core::synth::{self, GeneratorConfig};
use dissolve_core::{Dataset, MeasurementKind as K};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rows(m: &DMatrix<f64>) -> oracle::Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

fn small_split(ds: &Dataset) -> SplitSpec {
    SplitSpec {
        test_count: ds.n_samples() / 5,
        seed: 11,
        grouping: Grouping::SampleLevel,
    }
}

#[test]
fn linear_probe_separates_informative_channels() {
    let (ds, truth) = synth::generate_with_truth(&GeneratorConfig::full()).unwrap();
    let all: Vec<usize> = (0..ds.n_samples()).collect();
    let whole = experiment::Split {
        train: all.clone(),
        test: all,
    };
    for kind in K::ALL {
        let cf = fit_channel(&ds, kind, &whole, 0.99).unwrap();
        let r2 = oracle::linear_r2(&rows(&cf.train), &truth.tau);
        if [K::NirTransmission, K::CompressionForce].contains(&kind) {
            assert!(r2 >= 0.9, "{kind}: R² {r2}");
        } else {
            assert!(r2 <= 0.2, "{kind}: R² {r2}");
        }
    }
}

#[test]
fn test_outlier_leaves_train_statistics_untouched() {
    let ds = synth::generate(&GeneratorConfig::test()).unwrap();
    let spec = CombinationSpec::default().with_channels(&[K::NirTransmission, K::CompressionForce]);
    let s = split(&ds, &small_split(&ds)).unwrap();
    let before = build_features(&ds, &s, &spec).unwrap();

    let mut wild = ds.clone();
    let victim = s.test[0];
    for block in wild.blocks.values_mut() {
        block.values.row_mut(victim).fill(1e6);
    }
    let after = build_features(&wild, &s, &spec).unwrap();
    assert_eq!(bits(before.x_train.as_slice()), bits(after.x_train.as_slice()));
    assert_ne!(before.x_test, after.x_test);

    for kind in [K::NirTransmission, K::CompressionForce] {
        let a = fit_channel(&ds, kind, &s, 0.99).unwrap();
        let b = fit_channel(&wild, kind, &s, 0.99).unwrap();
        assert_eq!(bits(&a.scaler.means), bits(&b.scaler.means));
        assert_eq!(bits(&a.scaler.stds), bits(&b.scaler.stds));
        assert_eq!(a.pca.to_dump(), b.pca.to_dump());
    }
}

/// Replaces the compression block with `features` and drops every other channel.
fn with_single_block(ds: &Dataset, features: DMatrix<f64>, profiles: DMatrix<f64>) -> Dataset {
    let mut out = ds.clone();
    out.blocks.retain(|k, _| *k == K::CompressionForce);
    let block = out.blocks.get_mut(&K::CompressionForce).unwrap();
    block.axis = (0..features.ncols()).map(|j| j as f64).collect();
    block.values = features;
    out.profiles = profiles;
    out
}

fn release(t: f64, tau: f64) -> f64 {
    100.0 * (1.0 - (-t / tau).exp())
}

#[test]
fn exactly_learnable_map_scores_high() {
    let base = synth::generate(&GeneratorConfig::test()).unwrap();
    let n = base.n_samples();
    let grid = dissolve_core::model::time_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let latent: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    // two reference curves mixed linearly by the latents
    let slow: Vec<f64> = grid.as_slice().iter().map(|&t| release(t, 900.0)).collect();
    let fast: Vec<f64> = grid.as_slice().iter().map(|&t| release(t, 120.0)).collect();
    let profiles = DMatrix::from_fn(n, grid.len(), |i, c| {
        let [a, b] = latent[i];
        let w = 0.2 + 0.6 * a;
        (w * fast[c] + (1.0 - w) * slow[c]) * (0.8 + 0.2 * b)
    });
    let loadings = DMatrix::from_fn(2, 12, |_, _| rng.random_range(-1.0..1.0));
    let z = DMatrix::from_fn(n, 2, |i, j| latent[i][j]);
    let ds = with_single_block(&base, &z * loadings, profiles);

    let spec = CombinationSpec {
        mlp: MlpConfig {
            hidden_layers: vec![32],
            l2_alpha: 1e-4,
            max_iter: 2000,
            ..MlpConfig::default()
        },
        ..CombinationSpec::default()
    }
    .with_channels(&[K::CompressionForce]);
    let out = run_selected(&ds, &small_split(&ds), &spec, &ModelGrid::single(&spec.mlp)).unwrap();
    assert_eq!(out.row.retained, vec![2]);
    assert!(out.row.mean_f2 >= 90.0, "mean f2 {}", out.row.mean_f2);
}

#[test]
fn pure_noise_features_fall_below_the_band() {
    let base = synth::generate(&GeneratorConfig::test()).unwrap();
    let n = base.n_samples();
    let grid = dissolve_core::model::time_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let taus: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(1.5..3.5))).collect();
    let profiles = DMatrix::from_fn(n, grid.len(), |i, c| release(grid.as_slice()[c], taus[i]));
    let noise = DMatrix::from_fn(n, 12, |_, _| rng.random_range(-1.0..1.0));
    let ds = with_single_block(&base, noise, profiles);

    let spec = CombinationSpec::default().with_channels(&[K::CompressionForce]);
    let split_spec = small_split(&ds);
    let out = run_selected(&ds, &split_spec, &spec, &ModelGrid::default()).unwrap();

    // the conditional-mean predictor: train-set mean profile for every test row
    let s = split(&ds, &split_spec).unwrap();
    let mean: Vec<f64> = (0..grid.len())
        .map(|c| s.train.iter().map(|&i| ds.profiles[(i, c)]).sum::<f64>() / s.train.len() as f64)
        .collect();
    let floor: Vec<f64> = s
        .test
        .iter()
        .map(|&i| {
            let r: Vec<f64> = ds.profiles.row(i).iter().copied().collect();
            oracle::f2(&r, &mean)
        })
        .collect();
    let (floor_mean, _) = oracle::mean_std(&floor);
    assert!(floor_mean < 50.0, "noise floor {floor_mean}");
    assert!(out.row.mean_f2 < 50.0, "mean f2 {}", out.row.mean_f2);
}

#[test]
fn early_points_shrink_the_target() {
    let ds = synth::generate(&GeneratorConfig::test()).unwrap();
    let spec = CombinationSpec {
        target_offset: 10,
        ..CombinationSpec::default()
    }
    .with_channels(&[K::NirTransmission]);
    let out = run_selected(&ds, &small_split(&ds), &spec, &ModelGrid::single(&spec.mlp)).unwrap();
    assert_eq!(out.predicted.ncols(), 43);
    assert_eq!(out.actual.ncols(), 43);
    assert_eq!(out.model.out_dim(), 43);
}

#[test]
fn sweep_sizes_match_table_layout() {
    let ds = synth::generate(&GeneratorConfig::test()).unwrap();
    let opts = |max_size| SweepOptions {
        max_size,
        grid: ModelGrid::single(&MlpConfig {
            hidden_layers: vec![8],
            max_iter: 30,
            ..MlpConfig::default()
        }),
        repeats: 1,
    };
    for (size, expected) in [(1, 5), (2, 15), (3, 25)] {
        let r = sweep_with(&ds, &small_split(&ds), &CombinationSpec::default(), &opts(size)).unwrap();
        assert_eq!(r.rows.len(), expected);
        for w in r.rows.windows(2) {
            assert!(w[0].mean_f2 >= w[1].mean_f2);
        }
    }
    assert!(sweep(&ds, &small_split(&ds), &CombinationSpec::default(), 0).is_err());
    assert!(sweep(&ds, &small_split(&ds), &CombinationSpec::default(), 6).is_err());
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let ds = synth::generate(&GeneratorConfig::test()).unwrap();
    let opts = SweepOptions {
        max_size: 2,
        grid: ModelGrid::single(&MlpConfig {
            hidden_layers: vec![8],
            max_iter: 50,
            ..MlpConfig::default()
        }),
        repeats: 2,
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep_with(&ds, &small_split(&ds), &CombinationSpec::default(), &opts))
            .unwrap()
            .to_csv()
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn tablet_grouping_keeps_replicates_together() {
    let ds = synth::generate(&GeneratorConfig::test()).unwrap();
    let spec = SplitSpec {
        grouping: Grouping::TabletLevel,
        ..small_split(&ds)
    };
    let s = split(&ds, &spec).unwrap();
    let tablet = |i: usize| (ds.meta[i].setting_id, ds.meta[i].tablet_id);
    for &i in &s.test {
        assert!(s.train.iter().all(|&j| tablet(j) != tablet(i)));
    }
    assert_eq!(s.test.len() + s.train.len(), ds.n_samples());
}

/// Adding an informative channel to any combination costs at most noise-level f2.
#[test]
fn informative_channel_never_hurts_much() {
    let ds = synth::generate(&GeneratorConfig::small()).unwrap();
    let report = sweep_with(
        &ds,
        &SplitSpec::default(),
        &CombinationSpec::default(),
        &SweepOptions {
            max_size: 5,
            ..SweepOptions::default()
        },
    )
    .unwrap();
    let mut worst = f64::INFINITY;
    for row in &report.rows {
        for add in [K::NirTransmission, K::CompressionForce] {
            if row.channels.contains(&add) {
                continue;
            }
            let mut bigger = row.channels.clone();
            bigger.push(add);
            bigger.sort();
            let other = report.row_for(&bigger).unwrap();
            worst = worst.min(other.mean_f2 - row.mean_f2);
        }
    }
    assert!(worst >= -2.0, "largest loss {worst}");
}
