use std::fs;

use oovbench_core::ingest::{adapt_cocotext_style, adapt_quad_per_line, read_canonical, read_sizes, write_canonical, Corpus};
use oovbench_core::model::{Point2D, Split};
use oovbench_core::Error;

#[test]
fn quad_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("gt_img_1.txt"),
        "\u{feff}377,117,463,117,465,130,378,130,Genaxis Theatre\r\n493,115,519,115,519,131,493,131,[06]\r\n374,155,409,155,409,170,374,170,###\r\n",
    )
    .unwrap();
    fs::write(dir.path().join("gt_img_2.txt"), "10,10,50,10,50,30,10,30,a,b\n").unwrap();
    fs::write(dir.path().join("readme.md"), "ignored").unwrap();
    let sizes_path = dir.path().join("sizes.csv");
    fs::write(&sizes_path, "img_1,1280,720\n").unwrap();
    let sizes = read_sizes(&sizes_path).unwrap();

    let c = adapt_quad_per_line(dir.path(), "ic15", Split::Test, Some(&sizes)).unwrap();
    assert_eq!(c.len(), 2);
    let a = c.get("ic15/img_1").unwrap();
    assert_eq!((a.width, a.height), (1280, 720));
    assert_eq!(a.instances.len(), 3);
    assert_eq!(a.instances[0].transcription.as_deref(), Some("Genaxis Theatre"));
    assert_eq!(a.instances[1].transcription.as_deref(), Some("[06]"));
    assert!(a.instances[2].transcription.is_none());
    assert!(!a.instances[2].legible);
    assert_eq!(a.instances[0].polygon.vertices()[0], Point2D::new(377., 117.));

    let b = c.get("ic15/img_2").unwrap();
    assert_eq!(b.instances[0].transcription.as_deref(), Some("a,b"));
    // No size entry: the frame is inferred from the annotations.
    assert!(b.width >= 50 && b.height >= 30);
    assert_eq!(c.provenance()["ic15"], 2);
}

#[test]
fn quad_directory_reports_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("gt_x.txt"), "1,2,3,4,5,6,7,8,ok\n1,2,3,four,5,6,7,8,bad\n1,2,3\n").unwrap();
    let Err(Error::Schema { violations, .. }) = adapt_quad_per_line(dir.path(), "t", Split::Train, None) else { panic!() };
    let lines: Vec<usize> = violations.iter().map(|v| v.line).collect();
    assert_eq!(lines, [2, 3]);
}

const COCO: &str = r#"{
  "imgs": {
    "7": {"id": 7, "file_name": "COCO_train2014_000000000007.jpg", "width": 640, "height": 480, "set": "train"},
    "12": {"id": 12, "width": 320, "height": 240, "set": "val"}
  },
  "anns": {
    "101": {"image_id": 7, "bbox": [2, 3, 4, 5], "utf8_string": "STOP", "legibility": "legible"},
    "100": {"image_id": 7, "mask": [10, 10, 40, 10, 40, 20, 10, 20], "utf8_string": "", "legibility": "illegible"},
    "102": {"image_id": 12, "polygon": [[1, 1], [9, 1], [9, 6]], "utf8_string": "cafe", "legibility": "legible"}
  }
}"#;

#[test]
fn cocotext_style_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("coco.json");
    fs::write(&p, COCO).unwrap();
    let c = adapt_cocotext_style(&p, "coco").unwrap();
    assert_eq!(c.len(), 2);
    let a = c.get("coco/COCO_train2014_000000000007").unwrap();
    assert_eq!(a.split, Split::Train);
    assert_eq!(a.instances.len(), 2);
    // Annotations are ordered by numeric id.
    assert_eq!(a.instances[0].instance_id, "100");
    assert!(a.instances[0].transcription.is_none());
    assert!(!a.instances[0].legible);
    let boxed: Vec<_> = a.instances[1].polygon.vertices().iter().map(|p| (p.x, p.y)).collect();
    assert_eq!(boxed, [(2., 3.), (6., 3.), (6., 8.), (2., 8.)]);
    let b = c.get("coco/12").unwrap();
    assert_eq!(b.split, Split::Validation);
    assert_eq!(b.instances[0].transcription.as_deref(), Some("cafe"));
}

#[test]
fn cocotext_dangling_reference() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("coco.json");
    fs::write(&p, COCO.replace("\"image_id\": 12", "\"image_id\": 99")).unwrap();
    let Err(Error::Schema { violations, .. }) = adapt_cocotext_style(&p, "coco") else { panic!() };
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0].path, "anns.102.image_id");
}

#[test]
fn adapters_merge_and_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let quad = dir.path().join("quad");
    fs::create_dir(&quad).unwrap();
    fs::write(quad.join("gt_1.txt"), "0,0,10,0,10,5,0,5,x\n").unwrap();
    let coco = dir.path().join("coco.json");
    fs::write(&coco, COCO).unwrap();
    let merged = Corpus::merge([adapt_quad_per_line(&quad, "q", Split::Test, None).unwrap(), adapt_cocotext_style(&coco, "coco").unwrap()]).unwrap();
    assert_eq!(merged.len(), 3);
    let out = dir.path().join("corpus.jsonl");
    write_canonical(&merged, &out).unwrap();
    assert_eq!(read_canonical(&out).unwrap(), merged);
    assert!(matches!(read_canonical(&dir.path().join("missing.jsonl")), Err(Error::Io { .. })));
}
