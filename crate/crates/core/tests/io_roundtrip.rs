use proptest::prelude::*;
use timbre_latent::dataset::{LatentDataset, SampleLabel};
use timbre_latent::geometry::Matrix;
use timbre_latent::io::{load_dataset, save_dataset, Layout, LoadOptions};
use timbre_latent::schema::LabelSchema;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        Just(-0.0),
        Just(5e-324),
        Just(f64::MAX),
        -1.0..1.0f64,
    ]
}

fn dataset() -> impl Strategy<Value = LatentDataset> {
    (1usize..20, 1usize..6).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(finite(), n * d),
            prop::collection::vec((0usize..19, 0usize..4, 0usize..23), n),
        )
            .prop_map(move |(data, labels)| {
                let labels = labels.into_iter().map(|(a, b, c)| SampleLabel::new(a, b, c)).collect();
                LatentDataset::new(Matrix::from_flat(data, n, d), labels, LabelSchema::default(), "p").unwrap()
            })
    })
}

fn bits(ds: &LatentDataset) -> Vec<u64> {
    ds.embeddings().as_flat().iter().map(|x| x.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn both_layouts_round_trip_bit_exactly(ds in dataset()) {
        let dir = tempfile::tempdir().unwrap();
        for (layout, path) in [
            (Layout::CombinedCsv, dir.path().join("x.csv")),
            (Layout::Split, dir.path().join("x")),
        ] {
            save_dataset(&ds, &path, layout).unwrap();
            prop_assert_eq!(Layout::detect(&path), layout);
            let back = load_dataset(&path, layout, &LoadOptions::default()).unwrap();
            prop_assert_eq!(bits(&back), bits(&ds));
            prop_assert_eq!(back.labels(), ds.labels());
            prop_assert_eq!(back.dims(), ds.dims());
        }
    }
}

#[test]
fn split_layout_accepts_the_labels_file_and_explicit_dims() {
    let dir = tempfile::tempdir().unwrap();
    let ds = LatentDataset::new(
        Matrix::from_flat(vec![1.5, -2.0, 0.25, 8.0], 2, 2),
        vec![SampleLabel::new(0, 1, 2), SampleLabel::new(3, 2, 1)],
        LabelSchema::default(),
        "x",
    )
    .unwrap();
    let root = dir.path().join("model");
    save_dataset(&ds, &root, Layout::Split).unwrap();
    std::fs::remove_file(root.join("meta.json")).unwrap();
    let labels = root.join("labels.csv");
    assert_eq!(Layout::detect(&labels), Layout::Split);
    let opts = LoadOptions { dims: Some(2), ..LoadOptions::default() };
    let back = load_dataset(&labels, Layout::Split, &opts).unwrap();
    assert_eq!(back.model_name(), "model");
    assert_eq!(bits(&back), bits(&ds));
    assert!(load_dataset(&labels, Layout::Split, &LoadOptions::default()).is_err());
}
