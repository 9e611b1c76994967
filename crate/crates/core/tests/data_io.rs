use std::io::Write;
use std::path::{Path, PathBuf};

use snn_iir::data::mnist::{parse_idx_images, parse_idx_labels};
use snn_iir::data::{
    load_checkpoint, load_csv_series, load_mnist_idx, read_spikes_csv, save_checkpoint, write_spikes_csv, Checkpoint,
    CsvSchema, Label, MinMax, SampleInput, SyntheticData, SyntheticSpec,
};
use snn_iir::encoders::NoiseModel;
use snn_iir::network::{LayerSpec, Matrix};
use snn_iir::training::{AdamConfig, AdamState};
use snn_iir::{Error, FilterCoeffs, NetworkSpec, NeuronParams, SpikeTensor};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden() -> Checkpoint {
    let layer = LayerSpec::new(
        Matrix::from_vec(1, 2, vec![0.25, -0.5]).unwrap(),
        vec![
            FilterCoeffs::new(vec![0.5], vec![1.0, 0.0], true).unwrap(),
            FilterCoeffs::new(vec![0.0], vec![0.0, 1.0], false).unwrap(),
        ],
        NeuronParams::new(0.0, 0.5, 1.0, 0.4).unwrap(),
    )
    .unwrap();
    Checkpoint {
        network: NetworkSpec::new(vec![layer]).unwrap(),
        optimizer: AdamState {
            config: AdamConfig {
                lr: 1e-3,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            step: 3,
            m: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            v: vec![1e-3, 2e-3, 3e-3, 4e-3, 5e-3],
        },
        seed: 42,
        epoch: 7,
    }
}

#[test]
fn golden_checkpoint_fixture() {
    let bytes = std::fs::read(fixture("golden_v1.ckpt")).unwrap();
    let loaded = load_checkpoint(fixture("golden_v1.ckpt")).unwrap();
    assert_eq!(loaded, golden());
    assert_eq!(golden().to_bytes(), bytes);
}

#[test]
fn checkpoint_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.bin");
    save_checkpoint(&golden(), &path).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), golden());
    assert!(!dir.path().join("c.tmp").exists());
    assert!(matches!(
        load_checkpoint(dir.path().join("missing.bin")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn idx_fixture_matches_byte_level_decode() {
    let raw = std::fs::read(fixture("t10k-10-images.idx3")).unwrap();
    let set = load_mnist_idx(fixture("t10k-10-images.idx3"), fixture("t10k-10-labels.idx1")).unwrap();
    assert_eq!(set.len(), 10);
    assert_eq!((set.rows(), set.cols()), (28, 28));
    let labels: Vec<usize> = (0..10).map(|i| set.label(i)).collect();
    assert_eq!(labels, vec![7, 2, 1, 0, 4, 1, 4, 9, 5, 9]);
    for i in 0..10 {
        for r in 0..28 {
            for c in 0..28 {
                let byte = raw[16 + i * 784 + r * 28 + c];
                assert_eq!(set.image(i)[r * 28 + c], byte);
                assert_eq!(set.normalized(i)[r * 28 + c], byte as f64 / 255.0);
            }
        }
    }
    let samples = set.samples();
    assert!(matches!(samples[0].label, Label::Class(7)));
    assert!(matches!(&samples[0].input, SampleInput::Analog(v) if v.len() == 784));
}

#[test]
fn idx_errors() {
    let raw = std::fs::read(fixture("t10k-10-images.idx3")).unwrap();
    match parse_idx_images(&raw[..raw.len() - 5], "images") {
        Err(Error::Parse { offset, .. }) => assert_eq!(offset, raw.len() as u64 - 5),
        other => panic!("{other:?}"),
    }
    let mut bad = raw.clone();
    bad[3] = 0x01;
    assert!(matches!(
        parse_idx_images(&bad, "images"),
        Err(Error::Parse { offset: 0, .. })
    ));
    let labels = std::fs::read(fixture("t10k-10-labels.idx1")).unwrap();
    assert!(parse_idx_labels(&labels[..6], "labels").is_err());
    assert!(parse_idx_labels(&raw, "labels").is_err());

    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("labels");
    let mut nine = labels[..17].to_vec();
    nine[7] = 9;
    std::fs::write(&short, nine).unwrap();
    assert!(load_mnist_idx(fixture("t10k-10-images.idx3"), &short).is_err());
}

#[test]
fn full_mnist_headers_when_available() {
    let dir = PathBuf::from(std::env::var("MNIST_DIR").unwrap_or_else(|_| "/root/data/mnist".into()));
    let (images, labels) = (dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"));
    if !images.exists() {
        eprintln!("skipping: no MNIST in {}", dir.display());
        return;
    }
    let set = load_mnist_idx(images, labels).unwrap();
    assert_eq!(set.len(), 60000);
    assert_eq!((set.rows(), set.cols()), (28, 28));
}

fn write_csv(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::File::create(&path)
        .unwrap()
        .write_all(body.as_bytes())
        .unwrap();
    path
}

#[test]
fn csv_series_shapes_and_normalisation() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("sample,label");
    for c in 0..20 {
        body += &format!(",f{c}");
    }
    body.push('\n');
    for s in 0..3 {
        for t in 0..90 {
            body += &format!("s{s},{}", s % 2);
            for c in 0..20 {
                body += &format!(",{}", (s * 1000 + t * 20 + c) as f64 * 0.5 - 7.0);
            }
            body.push('\n');
        }
    }
    let path = write_csv(dir.path(), "train.csv", &body);
    let mut samples = load_csv_series(&path, &CsvSchema::default()).unwrap();
    assert_eq!(samples.len(), 3);
    for (k, s) in samples.iter().enumerate() {
        let SampleInput::Series(tr) = &s.input else { panic!() };
        assert_eq!((tr.horizon(), tr.channels()), (90, 20));
        assert!(matches!(s.label, Label::Class(c) if c == k % 2));
    }
    let mm = MinMax::fit(&samples).unwrap();
    mm.apply_all(&mut samples);
    for c in 0..20 {
        let values: Vec<f64> = samples
            .iter()
            .flat_map(|s| {
                let SampleInput::Series(tr) = &s.input else { panic!() };
                (0..90).map(|t| tr.get(t, c)).collect::<Vec<_>>()
            })
            .collect();
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((min, max), (0.0, 1.0));
    }
}

#[test]
fn csv_series_errors() {
    let dir = tempfile::tempdir().unwrap();
    let schema = CsvSchema::default();
    let empty = write_csv(dir.path(), "empty.csv", "");
    assert!(load_csv_series(&empty, &schema).is_err());
    let ragged = write_csv(dir.path(), "ragged.csv", "sample,label,a,b\n0,1,0.5,0.2\n0,1,0.1\n");
    assert!(load_csv_series(&ragged, &schema).is_err());
    let text = write_csv(dir.path(), "text.csv", "sample,label,a\n0,1,abc\n");
    assert!(load_csv_series(&text, &schema).is_err());
    let no_label = write_csv(dir.path(), "nolabel.csv", "sample,a\n0,1.0\n");
    assert!(load_csv_series(&no_label, &schema).is_err());
    let relabel = write_csv(dir.path(), "relabel.csv", "sample,label,a\n0,1,1.0\n0,2,1.0\n");
    assert!(load_csv_series(&relabel, &schema).is_err());
}

#[test]
fn spike_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = SpikeTensor::from_events(10, 3, [(0, 1), (4, 2), (9, 0)]).unwrap();
    let path = dir.path().join("s.csv");
    write_spikes_csv(&path, &s).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,channel\n0,1\n4,2\n9,0\n");
    assert_eq!(read_spikes_csv(&path, 10, 3).unwrap(), s);
    assert!(read_spikes_csv(&path, 5, 3).is_err());
}

#[test]
fn synthetic_dataset_regenerates_from_recorded_seed() {
    let spec = SyntheticSpec {
        n_patterns: 10,
        channels: 12,
        horizon: 30,
        pattern_rate: 0.1,
        train_variants: 2,
        test_variants: 2,
        resample_noise: false,
        seed: 77,
        noise: NoiseModel::default(),
    };
    let dir = tempfile::tempdir().unwrap();
    let data = SyntheticData::generate(&spec).unwrap();
    data.write(dir.path()).unwrap();
    let clean: Vec<_> = std::fs::read_dir(dir.path().join("clean")).unwrap().collect();
    assert_eq!(clean.len(), 10);
    let back = SyntheticData::read(dir.path()).unwrap();
    assert_eq!(SyntheticData::generate(&back.spec).unwrap(), data);
    let k = FilterCoeffs::dual_exp(4.0, 1.0).unwrap();
    for (p, variants) in data.clean.iter().zip(&data.test) {
        for v in variants {
            assert!(snn_iir::training::van_rossum_distance(p, v, &k).unwrap() > 0.0);
        }
    }
}
