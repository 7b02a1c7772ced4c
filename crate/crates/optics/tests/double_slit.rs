use chaintrial_optics::counts::cumulative_frames;
use chaintrial_optics::io::{write_counts_csv, write_field_dump, write_heatmap};
use chaintrial_optics::{run_double_slit, DoubleSlitConfig};

#[test]
fn reference_geometry_fringes_and_power() {
    let cfg = DoubleSlitConfig::default();
    let r = run_double_slit(&cfg).unwrap();
    let period = r.fringe_period.expect("fringes found");
    assert!((period - 71e-6).abs() <= cfg.detector.pixel_size, "{period}");
    assert!(r.propagation.propagating_power_defect() < 1e-10);
    assert!(r.transmitted_fraction > 0.0 && r.transmitted_fraction < 1.0);
    let frames = cumulative_frames(&r.rates, &[0.1, 0.2, 0.4], 1, 0).unwrap();
    assert!(frames.windows(2).all(|w| w[0].counts.iter().zip(&w[1].counts).all(|(a, b)| a <= b)));
}

#[test]
fn outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = DoubleSlitConfig::default();
    cfg.grid.nx = 512;
    cfg.grid.ny = 512;
    let r = run_double_slit(&cfg).unwrap();
    let (bin, json) = write_field_dump(dir.path(), "det", &r.detector_field).unwrap();
    assert_eq!(std::fs::metadata(bin).unwrap().len(), 512 * 512 * 8);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(side["nx"], 512);

    write_heatmap(dir.path(), "rates", &r.rates.values, 50, 50, None).unwrap();
    let img = image::open(dir.path().join("rates.png")).unwrap().into_luma16();
    assert_eq!(img.dimensions(), (50, 50));
    assert_eq!(img.pixels().map(|p| p.0[0]).max(), Some(65535));
    let pgm = std::fs::read(dir.path().join("rates.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n50 50\n65535\n"));
    assert_eq!(pgm.len(), 15 + 50 * 50 * 2);

    let frame = &cumulative_frames(&r.rates, &[0.4], 2, 0).unwrap()[0];
    let mut buf = Vec::new();
    write_counts_csv(&mut buf, frame).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("x_index,y_index,count\n0,0,"));
    assert_eq!(text.lines().count(), 2501);
}
