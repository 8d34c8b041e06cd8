use proptest::prelude::*;
use sgl::format::*;
use sgl_core::{generate_instance, DesignKind, DesignSpec, GroupMode, GroupPartition, Matrix, PriorSpec, Signal};

#[test]
fn matrix_round_trip_binary_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let x = Matrix::from_fn(3, 4, |i, j| (i as f64 + 0.5) * (j as f64 - 1.25));
    let bin = dir.path().join("x.mat");
    write_matrix(&bin, &x).unwrap();
    assert_eq!(read_matrix(&bin).unwrap(), x);

    let csv = dir.path().join("x.csv");
    let text: String = (0..3)
        .map(|i| (0..4).map(|j| x.get(i, j).to_string()).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    std::fs::write(&csv, text).unwrap();
    assert_eq!(read_matrix(&csv).unwrap(), x);
}

#[test]
fn vectors_accept_rows_or_columns() {
    let dir = tempfile::tempdir().unwrap();
    let v = vec![1.5, -2.0, 0.0];
    let bin = dir.path().join("v.vec");
    write_vector(&bin, &v).unwrap();
    assert_eq!(read_vector(&bin).unwrap(), v);
    let row = dir.path().join("row.csv");
    std::fs::write(&row, "1.5,-2,0\n").unwrap();
    assert_eq!(read_vector(&row).unwrap(), v);
    let col = dir.path().join("col.csv");
    std::fs::write(&col, "1.5\n-2\n0\n").unwrap();
    assert_eq!(read_vector(&col).unwrap(), v);
    let table = dir.path().join("t.csv");
    std::fs::write(&table, "1,2\n3,4\n").unwrap();
    assert!(read_vector(&table).is_err());
}

#[test]
fn bundle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let design = DesignSpec::new(DesignKind::GaussianIid, 20, 30).unwrap();
    let prior = PriorSpec::new(Signal::PointMassMixture { eps: 0.2, value: 3.0 }, 0.5).unwrap();
    let part = GroupPartition::contiguous(&[10, 15, 5]).unwrap();
    let inst = generate_instance(&design, &prior, &part, 0.7, 0.3, GroupMode::AsGiven, 4).unwrap();
    let meta = BundleMeta { lambda: 0.7, gamma: 0.3, sigma_w: 0.5, seed: 4 };
    save_instance(dir.path(), &inst, &meta).unwrap();
    for f in [DESIGN_FILE, RESPONSE_FILE, META_FILE, GROUPS_FILE, TRUTH_FILE] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let (back, meta_back) = load_instance(dir.path()).unwrap();
    assert_eq!(meta_back, meta);
    assert_eq!(back.design, inst.design);
    assert_eq!(back.response, inst.response);
    assert_eq!(back.partition, inst.partition);
    assert_eq!(back.truth.as_ref().unwrap().beta0, inst.truth.as_ref().unwrap().beta0);
    assert_eq!((back.lambda, back.gamma), (0.7, 0.3));
}

#[test]
fn bundle_meta_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(META_FILE), "lambda=1\ngamma=0.5\ncolour=red\n").unwrap();
    assert!(load_instance(dir.path()).is_err());
}

proptest! {
    #[test]
    fn binary_encoding_round_trips(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let data: Vec<f64> = (0..rows * cols)
            .map(|k| f64::from_bits(seed.wrapping_mul(k as u64 + 1) >> 2))
            .collect();
        let bytes = encode_matrix(rows, cols, &data);
        let (r, c, d) = decode_matrix(&bytes).unwrap().unwrap();
        prop_assert_eq!((r, c), (rows, cols));
        prop_assert_eq!(d.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), data.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
