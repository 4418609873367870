// End-to-end flows that cross module boundaries: file round-trips, dataset
// consumption, and signature comparisons on freshly generated shapes.

use hbs_core::datagen::{
    build_dataset, gen_monotone_circle_map, gen_polygon, grid_perturb, read_manifest,
    shape_from_welding, GenConfig, GenMethod,
};
use hbs_core::field::{read_field, write_field};
use hbs_core::geometry::GridGeometry;
use hbs_core::hbs::{compute_hbs, hbs_distance, HbsConfig};
use hbs_core::image::{read_image, write_image, GrayImage};
use hbs_core::shape::{rasterize, validate_shape, ShapeStatus};
use hbs_core::transform::loss_combined;

fn polygon_image(seed: u64, n: usize) -> GrayImage {
    let poly = gen_polygon(seed, n).unwrap();
    rasterize(&poly, &GridGeometry::image_default()).unwrap()
}

#[test]
fn field_file_roundtrip_preserves_signature_bits() {
    let image = polygon_image(1, 10);
    let result = compute_hbs(&image, &HbsConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shape.hbs");
    write_field(&result.hbs, &path).unwrap();
    let back = read_field(&path).unwrap();
    assert_eq!(back.geometry, result.hbs.geometry);
    assert_eq!(back.values(), result.hbs.values());
    assert_eq!(hbs_distance(&back, &result.hbs).unwrap(), 0.0);
}

#[test]
fn image_file_roundtrip_preserves_foreground() {
    let image = polygon_image(2, 7);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shape.png");
    write_image(&image, &path).unwrap();
    let back = read_image(&path).unwrap();
    assert_eq!(back.geometry.width, image.geometry.width);
    assert_eq!(back.geometry.height, image.geometry.height);
    for row in 0..image.geometry.height {
        for col in 0..image.geometry.width {
            assert_eq!(
                back.is_foreground(row, col),
                image.is_foreground(row, col),
                "foreground flipped at ({row}, {col})"
            );
        }
    }
}

#[test]
fn dataset_files_are_readable_and_consistent() {
    let config = GenConfig {
        method: GenMethod::Mixed,
        count: 4,
        seed: 9,
        perturb_magnitude: 1.0,
        ..GenConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let built = build_dataset(&config, dir.path()).unwrap();
    assert_eq!(built.entries.len(), 4);

    let reread = read_manifest(&built.path).unwrap();
    assert_eq!(reread.entries.len(), built.entries.len());
    for (i, entry) in reread.entries.iter().enumerate() {
        assert_eq!(entry.index, i);
        assert_eq!(entry.validation.status, ShapeStatus::SimplyConnected);
        let image = read_image(&dir.path().join(&entry.image_path)).unwrap();
        let field = read_field(&dir.path().join(&entry.hbs_path)).unwrap();
        assert!(image.foreground_count() > 0);
        // the stored signature and a fresh run of the pipeline must agree
        let fresh = compute_hbs(&image, &HbsConfig::default()).unwrap();
        assert_eq!(field.values(), fresh.hbs.values());
    }
    // mixed alternates generators per entry
    assert_eq!(reread.entries[0].provenance.method, "polygon");
    assert_eq!(reread.entries[1].provenance.method, "welding");
}

#[test]
fn small_perturbation_stays_closer_than_different_shape() {
    let geometry = GridGeometry::image_default();
    let base_poly = gen_polygon(1, 10).unwrap();
    let base = compute_hbs(&rasterize(&base_poly, &geometry).unwrap(), &HbsConfig::default())
        .unwrap();

    let nudged_poly = grid_perturb(&base_poly, 1.0, 33).unwrap();
    let nudged_img = rasterize(&nudged_poly, &geometry).unwrap();
    assert_eq!(validate_shape(&nudged_img).status, ShapeStatus::SimplyConnected);
    let nudged = compute_hbs(&nudged_img, &HbsConfig::default()).unwrap();

    let other = compute_hbs(&polygon_image(6, 5), &HbsConfig::default()).unwrap();

    let d_near = hbs_distance(&nudged.hbs, &base.hbs).unwrap();
    let d_far = hbs_distance(&other.hbs, &base.hbs).unwrap();
    assert!(
        d_near < d_far,
        "perturbed shape at {d_near:.3e} not closer than different shape at {d_far:.3e}"
    );
}

#[test]
fn combined_loss_adds_signature_term() {
    let config = HbsConfig::default();
    let reference = compute_hbs(&polygon_image(1, 10), &config).unwrap();
    let candidate = polygon_image(6, 5);

    let plain = loss_combined(0.25, &candidate, &reference.hbs, 0.0, &config).unwrap();
    assert_eq!(plain, 0.25);

    let with_term = loss_combined(0.25, &candidate, &reference.hbs, 2.0, &config).unwrap();
    assert!(with_term > 0.25);

    // the candidate equal to the reference shape contributes (near) zero
    let self_term = loss_combined(0.0, &polygon_image(1, 10), &reference.hbs, 2.0, &config)
        .unwrap();
    assert!(self_term < 1e-9, "self distance {self_term:.3e}");

    // a disconnected candidate is rejected, not silently scored
    let mut broken = polygon_image(6, 5);
    for col in 0..broken.geometry.width {
        for row in 0..broken.geometry.height {
            if (120..=130).contains(&col) {
                broken.set(row, col, 0.0);
            }
        }
    }
    assert!(loss_combined(0.0, &broken, &reference.hbs, 1.0, &config).is_err());
}

#[test]
fn welding_generated_shape_feeds_the_pipeline() {
    let g = gen_monotone_circle_map(4, 3).unwrap();
    let image = shape_from_welding(&g).unwrap();
    assert_eq!(validate_shape(&image).status, ShapeStatus::SimplyConnected);
    let result = compute_hbs(&image, &HbsConfig::default()).unwrap();
    assert!(result.hbs.sup_norm() < 1.0);
    assert!(result.clamp_warnings == 0 || result.hbs.sup_norm() <= 0.999);
}
