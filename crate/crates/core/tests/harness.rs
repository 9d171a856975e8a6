use std::path::Path;

use ebmc::harness::{
    aggregate, aggregate_field, expand_sweep, read_curve, read_records, records_csv, render_svg, run_experiment,
    write_curve, write_records, AggregateCurve, CurvePoint, ExperimentConfig, Field, MetricsRecord, PlotFrame,
};

mod common;

const SMALL: &str = r#"
name = "small"
episodes = 40
runs = 6
base_seed = 3
env.kind = "gridworld"
agent.gamma = 0.99
agent.learning_rate = { kind = "constant", value = 0.7 }
agent.q_init = { kind = "uniform", lo = 0.0, hi = 0.1 }
strategy = { kind = "bmc", alpha0 = 1.0, beta0 = 1.01 }
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL).unwrap()
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn parallel_runs_are_byte_identical() {
    let mut config = small();
    config.strategy = toml::from_str("kind = \"vdbe\"\nsigma = 0.1").unwrap();
    for c in [small(), config] {
        let one = records_csv(&run_experiment(&c, 1).unwrap()).unwrap();
        let eight = records_csv(&run_experiment(&c, 8).unwrap()).unwrap();
        assert_eq!(one, eight);
    }
}

#[test]
fn seed_changes_results() {
    let a = run_experiment(&small(), 1).unwrap();
    let mut other = small();
    other.base_seed = 4;
    assert_ne!(a, run_experiment(&other, 1).unwrap());
}

#[test]
fn one_episode_gives_one_record_per_run() {
    let mut config = small();
    config.episodes = 1;
    let records = run_experiment(&config, 2).unwrap();
    assert_eq!(records.len(), config.runs);
    for (i, r) in records.iter().enumerate() {
        assert_eq!((r.run, r.episode), (i, 0));
    }
}

#[test]
fn records_are_ordered_and_complete() {
    let config = small();
    let records = run_experiment(&config, 3).unwrap();
    assert_eq!(records.len(), config.runs * config.episodes);
    for (i, r) in records.iter().enumerate() {
        assert_eq!((r.run, r.episode), (i / config.episodes, i % config.episodes));
        assert!(r.train_steps >= 1 && r.train_steps <= 200);
        assert!(r.test_metric >= 16.0 && r.test_metric <= 200.0);
    }
}

#[test]
fn bmc_epsilon_column_never_rises() {
    let records = run_experiment(&small(), 1).unwrap();
    for w in records.windows(2).filter(|w| w[0].run == w[1].run) {
        assert!(w[1].epsilon <= w[0].epsilon + 1e-12, "{w:?}");
    }
}

#[test]
fn early_stop_truncates_runs() {
    let mut config = small();
    config.episodes = 300;
    config.early_stop = Some(toml::from_str("consecutive = 3\nthreshold = 16.0").unwrap());
    let records = run_experiment(&config, 1).unwrap();
    for run in 0..config.runs {
        let mine: Vec<_> = records.iter().filter(|r| r.run == run).collect();
        let tail = &mine[mine.len() - 3..];
        if mine.len() < 300 {
            assert!(tail.iter().all(|r| r.test_metric <= 16.0), "run {run}");
        }
    }
    assert!(records.len() < config.runs * 300);
    let curve = aggregate(&records);
    assert_eq!(curve.len(), records.iter().map(|r| r.episode).max().unwrap() + 1);
    assert!(curve.points.iter().all(|p| p.n == config.runs));
}

#[test]
fn aggregation_matches_two_pass_statistics() {
    let records = run_experiment(&small(), 1).unwrap();
    for field in [Field::TestMetric, Field::TrainReturn, Field::Epsilon] {
        let curve = aggregate_field(&records, field);
        for p in &curve.points {
            let xs: Vec<f64> = records
                .iter()
                .filter(|r| r.episode == p.episode)
                .map(|r| match field {
                    Field::TestMetric => r.test_metric,
                    Field::TrainReturn => r.train_return,
                    Field::Epsilon => r.epsilon,
                })
                .collect();
            let (mean, pop_var) = common::two_pass(&xs);
            let n = xs.len() as f64;
            let stderr = (pop_var * n / (n - 1.0)).sqrt() / n.sqrt();
            assert_eq!(p.n, xs.len());
            assert!((p.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
            assert!((p.stderr - stderr).abs() <= 1e-12 * stderr.max(1.0));
        }
    }
}

#[test]
fn single_run_has_zero_stderr() {
    let records = [MetricsRecord { run: 0, episode: 0, train_return: -1.0, train_steps: 10, test_metric: 20.0, epsilon: 0.5 }];
    let curve = aggregate(&records);
    assert_eq!(curve.points, vec![CurvePoint { episode: 0, mean: 20.0, stderr: 0.0, n: 1 }]);
    assert!(aggregate(&[]).is_empty());
}

fn golden_records() -> Vec<MetricsRecord> {
    vec![
        MetricsRecord { run: 0, episode: 0, train_return: -2.5, train_steps: 25, test_metric: 200.0, epsilon: 0.4975 },
        MetricsRecord { run: 0, episode: 1, train_return: -1.6, train_steps: 16, test_metric: 16.0, epsilon: 0.1 },
        MetricsRecord { run: 1, episode: 0, train_return: 0.3, train_steps: 3, test_metric: 1e-7, epsilon: 1.0 / 3.0 },
    ]
}

#[test]
fn records_csv_matches_golden_file() {
    let expected = std::fs::read(fixture("records_golden.csv")).unwrap();
    assert_eq!(records_csv(&golden_records()).unwrap(), expected);
}

#[test]
fn empty_records_csv_is_header_only() {
    assert_eq!(records_csv(&[]).unwrap(), b"run,episode,train_return,train_steps,test_metric,epsilon\n");
}

#[test]
fn csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_experiment(&small(), 1).unwrap();
    let path = dir.path().join("records.csv");
    write_records(&records, &path).unwrap();
    assert_eq!(read_records(&path).unwrap(), records);

    let curve = aggregate(&records);
    let path = dir.path().join("curve.csv");
    write_curve(&curve, &path).unwrap();
    assert_eq!(read_curve(&path).unwrap(), curve);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("episode,mean,stderr,n\n"));
}

fn synthetic_curve(n: usize, offset: f64) -> AggregateCurve {
    AggregateCurve {
        points: (0..n)
            .map(|i| CurvePoint { episode: i, mean: offset + (i as f64 * 0.3).sin() * 5.0, stderr: 0.5 + 0.01 * i as f64, n: 20 })
            .collect(),
    }
}

fn attr_values<'a>(svg: &'a str, tag: &str, attr: &str) -> Vec<&'a str> {
    svg.lines()
        .filter(|l| l.trim_start().starts_with(&format!("<{tag} ")))
        .filter_map(|l| {
            let key = format!("{attr}=\"");
            let start = l.find(&key)? + key.len();
            Some(&l[start..start + l[start..].find('"')?])
        })
        .collect()
}

fn parse_points(s: &str) -> Vec<(f64, f64)> {
    s.split_whitespace()
        .map(|pair| {
            let (x, y) = pair.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

#[test]
fn svg_single_curve_structure() {
    let curves = vec![("one".to_string(), synthetic_curve(50, 0.0))];
    let svg = render_svg(&curves, "steps").unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert_eq!(svg.matches("class=\"band\"").count(), 1);
    assert_eq!(svg, render_svg(&curves, "steps").unwrap());
}

#[test]
fn svg_band_vertices_map_back_to_mean_plus_minus_stderr() {
    let curves = vec![("a".to_string(), synthetic_curve(30, 0.0)), ("b".to_string(), synthetic_curve(30, 3.0))];
    let svg = render_svg(&curves, "return").unwrap();
    let frame = PlotFrame::for_curves(&curves);
    let bands = attr_values(&svg, "polygon", "points");
    let means = attr_values(&svg, "polyline", "points");
    assert_eq!((bands.len(), means.len()), (2, 2));
    // Coordinates are printed to 4 decimals; in data units that is well under 1e-3 here.
    let tol = 1e-3;
    for (i, (_, curve)) in curves.iter().enumerate() {
        let band = parse_points(bands[i]);
        let n = curve.len();
        assert_eq!(band.len(), 2 * n);
        for (k, p) in curve.points.iter().enumerate() {
            let (x_hi, y_hi) = frame.from_px(band[k].0, band[k].1);
            let (x_lo, y_lo) = frame.from_px(band[2 * n - 1 - k].0, band[2 * n - 1 - k].1);
            assert!((x_hi - p.episode as f64).abs() < tol && (x_lo - p.episode as f64).abs() < tol);
            assert!((y_hi - (p.mean + p.stderr)).abs() < tol, "{y_hi} vs {}", p.mean + p.stderr);
            assert!((y_lo - (p.mean - p.stderr)).abs() < tol);
        }
        for ((px, py), p) in parse_points(means[i]).into_iter().zip(&curve.points) {
            let (_, y) = frame.from_px(px, py);
            assert!((y - p.mean).abs() < tol);
        }
    }
}

#[test]
fn svg_rejects_mismatched_lengths() {
    let curves = vec![("a".to_string(), synthetic_curve(10, 0.0)), ("b".to_string(), synthetic_curve(9, 0.0))];
    let err = render_svg(&curves, "x").unwrap_err().to_string();
    assert!(err.contains("curves"), "{err}");
}

#[test]
fn svg_handles_flat_and_empty_curves() {
    let flat = AggregateCurve { points: (0..5).map(|i| CurvePoint { episode: i, mean: 2.0, stderr: 0.0, n: 1 }).collect() };
    let svg = render_svg(&[("flat".into(), flat)], "y").unwrap();
    assert!(!svg.contains("NaN") && !svg.contains("inf"));
    let svg = render_svg(&[], "y").unwrap();
    assert!(!svg.contains("NaN") && !svg.contains("<polyline"));
}

#[test]
fn sweep_expands_cartesian_product() {
    let text = format!("{SMALL}\n[sweep]\n\"strategy.alpha0\" = [0.5, 1.0]\n\"agent.gamma\" = [0.9, 0.95, 0.99]\n");
    let points = expand_sweep(&text).unwrap();
    assert_eq!(points.len(), 6);
    let mut labels: Vec<_> = points.iter().map(|p| p.label.clone()).collect();
    labels.sort();
    labels.dedup();
    assert_eq!(labels.len(), 6);
    for p in &points {
        assert!(p.label.contains("agent.gamma=") && p.label.contains("strategy.alpha0="));
    }
    assert_eq!(expand_sweep(SMALL).unwrap().len(), 1);
}

#[test]
fn invalid_configs_name_the_field() {
    let cases = [
        (SMALL.replace("agent.gamma = 0.99", "agent.gamma = 1.5"), "agent.gamma"),
        (SMALL.replace("runs = 6", "runs = 0"), "runs"),
        (SMALL.replace("alpha0 = 1.0", "alpha0 = -1.0"), "alpha0"),
        (format!("{SMALL}\nbogus = 1\n"), "bogus"),
        (SMALL.replace("\"gridworld\"", "\"maze\""), "maze"),
    ];
    for (text, field) in cases {
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains(field), "expected `{field}` in `{err}`");
    }
}

#[test]
fn every_shipped_config_parses() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for dir in [root.clone(), root.join("full")] {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                let text = std::fs::read_to_string(&path).unwrap();
                assert!(!expand_sweep(&text).unwrap().is_empty(), "{}", path.display());
                count += 1;
            }
        }
    }
    assert!(count >= 20);
}
