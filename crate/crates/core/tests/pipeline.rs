use std::collections::BTreeMap;

use stainbench_core::demo::{run_demo, DemoConfig};
use stainbench_core::filter::gaussian_blur;
use stainbench_core::harness::ItemStatus;
use stainbench_core::patch::{build_manifest, patchify, qc_flags, AlignmentConfig, PatchRecord, TissueConfig};
use stainbench_core::registration::{count_border_black, DeformableConfig};
use stainbench_core::synth::{synthetic_pair, StainTexture};
use stainbench_core::{
    evaluate_set, load_image, register_wsi_pair, save_image, validate_submission, Her2Level, ImageBuffer, PatchManifest,
    RegistrationConfig, Split, SsimMode, SsimParams, ValidationConfig,
};

#[test]
fn small_synthetic_pair_registers() {
    let pair = synthetic_pair(512, 11).unwrap();
    let cfg = RegistrationConfig { deformable: DeformableConfig { spacing: 32, ..Default::default() } };
    let reg = register_wsi_pair(&pair.he, &pair.ihc, &pair.landmarks, &cfg).unwrap();
    assert_eq!(reg.image.dims(), pair.ihc.dims());
    assert_eq!(count_border_black(&reg.image), 0);
    assert_eq!(reg.report.tiles.len(), 16);
    let (mut before, mut after) = (0.0, 0.0);
    for y in (64..512).step_by(128) {
        for x in (64..512).step_by(128) {
            let p = [x as f64, y as f64];
            let truth = pair.true_moving_point(p);
            let got = reg.map_fixed_to_moving(p).unwrap();
            before += (truth[0] - p[0]).hypot(truth[1] - p[1]);
            after += (truth[0] - got[0]).hypot(truth[1] - got[1]);
        }
    }
    assert!(after < 0.2 * before, "error {after} vs {before}");
}

#[test]
fn demo_is_deterministic_across_pools() {
    let cfg = DemoConfig { size: 256, patch_size: 128, ..Default::default() };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_demo(&cfg).unwrap());
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_demo(&cfg).unwrap());
    assert_eq!(
        stainbench_core::json::to_canonical_string(&one).unwrap(),
        stainbench_core::json::to_canonical_string(&four).unwrap()
    );
    assert_eq!(one.patch_count, 4);
}

fn blurred(img: &ImageBuffer<u8>, sigma: f64) -> ImageBuffer<u8> {
    let planes: Vec<_> = (0..img.channels()).map(|c| gaussian_blur(&img.channel_plane(c), sigma)).collect();
    ImageBuffer::from_fn(img.width(), img.height(), img.channels(), |x, y, c| {
        planes[c].at(x, y).round().clamp(0.0, 255.0) as u8
    })
    .unwrap()
}

fn tissue(size: usize, seed: u64) -> ImageBuffer<u8> {
    StainTexture::new(seed).render_u8(size, size, StainTexture::he_rgb, |x, y| [x, y])
}

#[test]
fn patches_manifest_and_submission() {
    let dir = tempfile::tempdir().unwrap();
    let he = tissue(256, 1);
    let ihc = StainTexture::new(1).render_u8(256, 256, StainTexture::ihc_rgb, |x, y| [x, y]);
    let pairs = patchify(&he, &ihc, 128, 128).unwrap();
    let flags = qc_flags(&pairs, &TissueConfig::default(), &AlignmentConfig::default()).unwrap();
    assert!(flags.iter().all(|f| f.alignment_pass));
    let records: Vec<PatchRecord> =
        pairs.iter().zip(&flags).map(|(p, &qc)| PatchRecord { wsi_id: "w".into(), origin: p.origin, qc }).collect();
    let manifest = build_manifest(
        &records,
        128,
        128,
        &BTreeMap::from([("w".to_string(), Her2Level::Three)]),
        &BTreeMap::from([("w".to_string(), Split::Test)]),
    )
    .unwrap();
    let back = PatchManifest::from_json(&manifest.to_json().unwrap()).unwrap();
    assert_eq!(back, manifest);
    assert_eq!(manifest.summary().test, 4);

    // Sharp predictions for three ids, a blurred one for the fourth.
    for (i, p) in pairs.iter().enumerate() {
        let id = &manifest.entries[i].patch_id;
        let img = if i == 3 { blurred(&p.ihc, 3.0) } else { p.ihc.clone() };
        save_image(&img, dir.path().join(format!("{id}.png"))).unwrap();
    }
    let strict = ValidationConfig { max_blur_fraction: 0.0, ..Default::default() };
    let v = validate_submission(dir.path(), &manifest, &strict).unwrap();
    assert!(!v.valid);
    assert_eq!(v.reasons, vec!["blur".to_string()]);
    assert_eq!(v.items.iter().filter(|i| i.status == ItemStatus::Blurry).count(), 1);
    let lenient = ValidationConfig { max_blur_fraction: 0.25, ..Default::default() };
    assert!(validate_submission(dir.path(), &manifest, &lenient).unwrap().valid);
}

#[test]
fn evaluate_flags_unmatched_files() {
    let dir = tempfile::tempdir().unwrap();
    let (pred, gt) = (dir.path().join("pred"), dir.path().join("gt"));
    std::fs::create_dir_all(&pred).unwrap();
    std::fs::create_dir_all(&gt).unwrap();
    let img = tissue(32, 4);
    save_image(&img, gt.join("a.png")).unwrap();
    save_image(&img, gt.join("b.til")).unwrap();
    save_image(&img, pred.join("a.png")).unwrap();
    save_image(&img, pred.join("extra.png")).unwrap();
    assert_eq!(load_image(gt.join("b.til")).unwrap(), img);
    let r = evaluate_set(&pred, &gt, SsimMode::Windowed, &SsimParams::default()).unwrap();
    assert_eq!(r.aggregate.count, 1);
    assert_eq!(r.per_image[0].ssim, 1.0);
    let flagged: Vec<&str> = r.flagged.iter().map(|f| f.id.as_str()).collect();
    assert_eq!(flagged, ["b.til", "extra.png"]);
}
