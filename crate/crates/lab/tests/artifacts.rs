use rmsmd_core::activation::ActivationCounts;
use rmsmd_core::averaging::average_oracle;
use rmsmd_core::lattice::build_lattice;
use rmsmd_core::localization::{synthesize_ffl, ErrorModel};

use rmsmd_lab::config::PlotConfig;
use rmsmd_lab::plot::{plot_svg, scatter_svg};
use rmsmd_lab::presets::preset;
use rmsmd_lab::runner::run_scenario;
use rmsmd_lab::table::{read_sweep_csv, sweep_csv_bytes};
use rmsmd_lab::LabError;

fn count(s: &str, needle: &str) -> usize {
    s.matches(needle).count()
}

#[test]
fn fig1f_plot_structure() {
    let mut cfg = preset("fig1f").unwrap();
    cfg.replicates = 2;
    let r = run_scenario(&cfg, None).unwrap();
    let svg = plot_svg(&r).unwrap();
    assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(count(&svg, "class=\"curve\""), 4);
    assert_eq!(count(&svg, "class=\"bound\""), 1);
    assert_eq!(count(&svg, "class=\"band\""), 2);
    assert_eq!(count(&svg, "stroke-dasharray=\"7,4\""), 4, "dashed closed forms, curve and legend");
    // two panels, two markers each
    assert_eq!(count(&svg, "class=\"marker\""), 4);
    assert!(!svg.contains("href"), "self-contained");
    assert_eq!(svg, plot_svg(&r).unwrap());
}

#[test]
fn default_plot_shows_voronoi_and_both_bounds() {
    let mut cfg = preset("fig2c").unwrap();
    cfg.replicates = 1;
    cfg.plot = PlotConfig::default();
    let r = run_scenario(&cfg, None).unwrap();
    let svg = plot_svg(&r).unwrap();
    assert_eq!(count(&svg, "class=\"curve\""), 5);
    assert_eq!(count(&svg, "class=\"bound\""), 2);
}

#[test]
fn empty_sweep_is_an_error() {
    let mut cfg = preset("fig3c").unwrap();
    cfg.replicates = 1;
    let mut r = run_scenario(&cfg, None).unwrap();
    r.rows.clear();
    assert!(matches!(plot_svg(&r), Err(LabError::EmptySweep)));
}

#[test]
fn csv_round_trip_of_a_real_sweep() {
    let mut cfg = preset("fig4c").unwrap();
    cfg.replicates = 2;
    let r = run_scenario(&cfg, None).unwrap();
    let bytes = sweep_csv_bytes(&r).unwrap();
    let back = read_sweep_csv(&bytes[..], "fig4c").unwrap();
    assert_eq!(back.rows, r.rows);
    assert_eq!(back.axis, r.axis);
    assert_eq!(sweep_csv_bytes(&back).unwrap(), bytes);
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 21 * 2 + 1);
}

#[test]
fn drift_sweep_is_periodic_in_the_pitch() {
    // d and d + a share sweep indices only across two scenarios, so run
    // both grids with one replicate and compare means of a larger set
    let mut cfg = preset("fig4c").unwrap();
    cfg.replicates = 4;
    let r = run_scenario(&cfg, None).unwrap();
    let s = r.summary();
    let at = |d: f64| s.iter().find(|p| p.value == d).unwrap().rmsmd_x.mean;
    for d in [-200.0, -160.0, -100.0, -40.0, 0.0] {
        let (a, b) = (at(d), at(d + 200.0));
        assert!((a - b).abs() / a < 0.03, "d = {d}: {a} vs {b}");
    }
}

#[test]
fn scatter_of_exact_image_sits_on_nodes() {
    let field = build_lattice(200.0, 3, 3).unwrap();
    let counts = ActivationCounts::from_counts(vec![2; 9], 2.0);
    let img = synthesize_ffl(&field, &counts, &ErrorModel::isotropic(0.0), 1).unwrap();
    let svg = scatter_svg(&img.points, &field, "exact").unwrap();
    assert_eq!(count(&svg, "class=\"loc\""), 18);
    assert_eq!(count(&svg, "class=\"emitter\""), 9);
    // node (i·a, j·a) at pixel 40 + (i·a + a/2)·s, s = 640/600
    for i in 0..3 {
        let x = 40.0 + (i as f64 * 200.0 + 100.0) * 640.0 / 600.0;
        assert!(svg.contains(&format!("cx=\"{x:.2}\"")), "{x}");
    }
    // dotted borders between the three rows and three columns
    assert_eq!(count(&svg, "<line "), 4);
}

#[test]
fn scatter_of_averaged_image_has_one_marker_per_kept_emitter() {
    let field = build_lattice(200.0, 4, 4).unwrap();
    let mut n = vec![3u64; 16];
    n[5] = 0;
    n[9] = 0;
    let counts = ActivationCounts::from_counts(n, 3.0);
    let img = synthesize_ffl(&field, &counts, &ErrorModel::isotropic(25.0), 4).unwrap();
    let avg = average_oracle(&img).unwrap();
    let svg = scatter_svg(&avg.points, &field, "averaged").unwrap();
    assert_eq!(count(&svg, "class=\"loc\""), avg.kept_emitters.len());
    assert_eq!(avg.kept_emitters.len(), 14);
}
