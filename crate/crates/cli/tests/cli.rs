//! End-to-end runs of the binary: simulate → setup-parking → detect → eval,
//! plus the calibration flow and the documented failure exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loadbay"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_exit(output: &Output, code: i32, context: &str) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "{context}: expected exit {code}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("loadbay_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

/// Coarse sensor settings keep the test scans small.
const FAST_SENSOR: &str = r#"{
    "scan_sector_deg": [45.0, 315.0],
    "beam_resolution_deg": 0.4,
    "platform_sweep_deg": [0.0, 180.0],
    "platform_resolution_deg": 0.4,
    "scan_frequency_hz": 25.0,
    "range_noise_sigma_m": 0.002,
    "mount_height_m": 3.3
}"#;

const TRUCK_SCENE: &str = r#"{
    "parking": {"corners": [[-7.5,-2.6],[7.5,-2.6],[7.5,1.4],[-7.5,1.4]]},
    "trucks": [{
        "id": "truck_0",
        "length": 9.0, "width": 2.4, "fence_height": 1.1,
        "position": [-5.0, -1.8], "yaw_deg": 1.0,
        "clutter": [{"center": [4.0, 1.2], "size": [0.8, 0.6, 0.7], "intensity": 0.5}]
    }]
}"#;

const PARKING_CONFIG: &str = r#"{
    "reflectors": [
        {"name": "corner_1", "seed_min": [-8.2, -3.3, -3.5], "seed_max": [-6.8, -1.9, -3.0],
         "intensity_threshold": 0.8, "expected_radius": 0.2},
        {"name": "corner_2", "seed_min": [6.8, -3.3, -3.5], "seed_max": [8.2, -1.9, -3.0],
         "intensity_threshold": 0.8, "expected_radius": 0.2},
        {"name": "corner_3", "seed_min": [6.8, 0.7, -3.5], "seed_max": [8.2, 2.1, -3.0],
         "intensity_threshold": 0.8, "expected_radius": 0.2},
        {"name": "corner_4", "seed_min": [-8.2, 0.7, -3.5], "seed_max": [-6.8, 2.1, -3.0],
         "intensity_threshold": 0.8, "expected_radius": 0.2}
    ],
    "crop": {"z_min": 0.3, "z_max": 3.0}
}"#;

#[test]
fn full_flow_simulate_setup_detect_eval() {
    let dir = workdir("full_flow");
    let scene = dir.join("scene.json");
    let sensor = dir.join("sensor.json");
    let parking = dir.join("parking.json");
    write(&scene, TRUCK_SCENE);
    write(&sensor, FAST_SENSOR);
    write(&parking, PARKING_CONFIG);

    let cloud = dir.join("scan.pcd");
    let truth = dir.join("truth.json");
    let out = run(&[
        "simulate",
        scene.to_str().unwrap(),
        "--sensor",
        sensor.to_str().unwrap(),
        "--out",
        cloud.to_str().unwrap(),
        "--truth-out",
        truth.to_str().unwrap(),
        "--seed",
        "7",
    ]);
    assert_exit(&out, 0, "simulate");

    // the one-time parking setup runs on the empty area at full resolution
    // (a parked truck occludes the far corner boards)
    let setup_scene = dir.join("setup_scene.json");
    write(
        &setup_scene,
        r#"{"parking": {"corners": [[-7.5,-2.6],[7.5,-2.6],[7.5,1.4],[-7.5,1.4]]}}"#,
    );
    let setup_cloud = dir.join("setup_scan.pcd");
    let out = run(&[
        "simulate",
        setup_scene.to_str().unwrap(),
        "--out",
        setup_cloud.to_str().unwrap(),
        "--seed",
        "8",
    ]);
    assert_exit(&out, 0, "simulate setup scan");
    let world = dir.join("world.json");
    let out = run(&[
        "setup-parking",
        setup_cloud.to_str().unwrap(),
        parking.to_str().unwrap(),
        "--out",
        world.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "setup-parking");

    let result = dir.join("results");
    std::fs::create_dir_all(&result).unwrap();
    let result_file = result.join("truck_0.json");
    let overlay = dir.join("overlay.ply");
    let dump = dir.join("debug");
    let out = run(&[
        "detect",
        cloud.to_str().unwrap(),
        world.to_str().unwrap(),
        "--out",
        result_file.to_str().unwrap(),
        "--overlay",
        overlay.to_str().unwrap(),
        "--id",
        "truck_0",
        "--debug-dump",
        dump.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "detect");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("stage timings"),
        "timings missing: {stdout}"
    );
    assert!(overlay.exists());
    assert!(dump.join("truck_0_regions.ply").exists());
    assert!(dump.join("truck_0_segments.json").exists());

    let report = dir.join("report.json");
    let out = run(&[
        "eval",
        result.to_str().unwrap(),
        truth.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "eval");
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("all"), "table missing: {table}");

    // the detection on this clean scene passes the 5% gate
    let report_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report_json["overall"]["pass_rate_5"], 1.0);
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = workdir("determinism");
    let scene = dir.join("scene.json");
    write(
        &scene,
        r#"{"primitives": [
            {"kind": "box", "label": "crate", "center": [2.0, -2.0, -2.0],
             "size": [1.0, 1.0, 1.0], "intensity": 0.5}
        ]}"#,
    );
    let sensor = dir.join("sensor.json");
    write(&sensor, FAST_SENSOR);
    let a = dir.join("a.pcd");
    let b = dir.join("b.pcd");
    let c = dir.join("c.pcd");
    for (path, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
        let out = run(&[
            "simulate",
            scene.to_str().unwrap(),
            "--sensor",
            sensor.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_exit(&out, 0, "simulate");
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap(), "same seed must match");
    assert_ne!(bytes_a, std::fs::read(&c).unwrap(), "seeds must differ");
}

#[test]
fn empty_scene_writes_empty_cloud() {
    let dir = workdir("empty_scene");
    let scene = dir.join("scene.json");
    write(&scene, r#"{"primitives": []}"#);
    let cloud = dir.join("empty.pcd");
    let out = run(&[
        "simulate",
        scene.to_str().unwrap(),
        "--out",
        cloud.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "simulate empty");
    let text = std::fs::read_to_string(&cloud).unwrap();
    assert!(text.contains("POINTS 0"));
}

#[test]
fn missing_or_malformed_inputs_exit_2() {
    let dir = workdir("bad_inputs");
    let out = run(&[
        "simulate",
        dir.join("nope.json").to_str().unwrap(),
        "--out",
        dir.join("x.pcd").to_str().unwrap(),
    ]);
    assert_exit(&out, 2, "missing scene");

    let scene = dir.join("broken.json");
    write(&scene, "{ not json");
    let out = run(&[
        "simulate",
        scene.to_str().unwrap(),
        "--out",
        dir.join("x.pcd").to_str().unwrap(),
    ]);
    assert_exit(&out, 2, "malformed scene");
}

#[test]
fn calibration_flow_recovers_injected_extrinsics() {
    let dir = workdir("calibration");
    let scene = dir.join("boards.json");
    write(&scene, r#"{"calibration_boards": 10}"#);
    let sensor = dir.join("sensor.json");
    // full turn, as the calibration procedure prescribes
    write(
        &sensor,
        r#"{
            "scan_sector_deg": [45.0, 315.0],
            "beam_resolution_deg": 0.25,
            "platform_sweep_deg": [0.0, 360.0],
            "platform_resolution_deg": 0.2,
            "scan_frequency_hz": 25.0,
            "range_noise_sigma_m": 0.002,
            "mount_height_m": 3.3
        }"#,
    );
    let truth = dir.join("true_extrinsics.json");
    write(
        &truth,
        r#"{"roll_deg": -1.5, "pitch_deg": 0.0, "yaw_deg": -0.5,
            "translation_mm": [15.0, 0.0, 120.0]}"#,
    );
    let samples = dir.join("planes.csv");
    let out = run(&[
        "simulate",
        scene.to_str().unwrap(),
        "--sensor",
        sensor.to_str().unwrap(),
        "--extrinsics",
        truth.to_str().unwrap(),
        "--out",
        dir.join("scan.pcd").to_str().unwrap(),
        "--samples-out",
        samples.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert_exit(&out, 0, "simulate boards");

    let result = dir.join("calibration.json");
    let out = run(&[
        "calibrate",
        samples.to_str().unwrap(),
        "--out",
        result.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "calibrate");
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    let roll = parsed["extrinsics"]["roll_deg"].as_f64().unwrap();
    let tz = parsed["extrinsics"]["translation_mm"][2].as_f64().unwrap();
    assert!((roll - -1.5).abs() < 0.1, "roll {roll}");
    assert!((tz - 120.0).abs() < 2.0, "tz {tz}");
}

#[test]
fn single_plane_calibration_exits_3() {
    let dir = workdir("degenerate_calibration");
    let samples = dir.join("one_plane.csv");
    let mut rows = String::from("plane_id,range,azimuth,platform\n");
    for i in 0..100 {
        rows.push_str(&format!(
            "p0,{},{},{}\n",
            2.0 + 0.001 * i as f64,
            1.0 + 0.01 * i as f64,
            0.3 + 0.01 * (i % 10) as f64
        ));
    }
    write(&samples, &rows);
    let out = run(&[
        "calibrate",
        samples.to_str().unwrap(),
        "--out",
        dir.join("never.json").to_str().unwrap(),
    ]);
    assert_exit(&out, 3, "single plane");
}

#[test]
fn missing_reflector_exits_4() {
    let dir = workdir("missing_reflector");
    let scene = dir.join("scene.json");
    // parking without a truck, but one reflector hidden behind intensity 0
    write(
        &scene,
        r#"{"parking": {"corners": [[-7.5,-2.6],[7.5,-2.6],[7.5,1.4],[-7.5,1.4]],
             "reflector_intensity": 0.1}}"#,
    );
    let sensor = dir.join("sensor.json");
    write(&sensor, FAST_SENSOR);
    let cloud = dir.join("scan.pcd");
    let out = run(&[
        "simulate",
        scene.to_str().unwrap(),
        "--sensor",
        sensor.to_str().unwrap(),
        "--out",
        cloud.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "simulate");
    let parking = dir.join("parking.json");
    write(&parking, PARKING_CONFIG);
    let out = run(&[
        "setup-parking",
        cloud.to_str().unwrap(),
        parking.to_str().unwrap(),
        "--out",
        dir.join("world.json").to_str().unwrap(),
    ]);
    assert_exit(&out, 4, "dim reflectors");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("corner_1"), "names the reflector: {stderr}");
}

#[test]
fn empty_parking_area_exits_5() {
    let dir = workdir("no_vehicle");
    let scene = dir.join("scene.json");
    write(
        &scene,
        r#"{"parking": {"corners": [[-7.5,-2.6],[7.5,-2.6],[7.5,1.4],[-7.5,1.4]]}}"#,
    );
    let sensor = dir.join("sensor.json");
    write(&sensor, FAST_SENSOR);
    let cloud = dir.join("scan.pcd");
    let out = run(&[
        "simulate",
        scene.to_str().unwrap(),
        "--sensor",
        sensor.to_str().unwrap(),
        "--out",
        cloud.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "simulate");
    // world frame written directly: identity rotation, origin at the corner
    let world = dir.join("world.json");
    write(
        &world,
        r#"{"schema_version": 1,
            "world_from_platform": [[1,0,0,7.5],[0,1,0,2.6],[0,0,1,3.298],[0,0,0,1]],
            "x_max": 15.0, "y_max": 4.0,
            "crop": {"z_min": 0.3, "z_max": 3.0},
            "corners_platform": [[-7.5,-2.6,-3.298],[7.5,-2.6,-3.298],
                                 [7.5,1.4,-3.298],[-7.5,1.4,-3.298]]}"#,
    );
    let out = run(&[
        "detect",
        cloud.to_str().unwrap(),
        world.to_str().unwrap(),
        "--out",
        dir.join("never.json").to_str().unwrap(),
    ]);
    assert_exit(&out, 5, "empty area");
}

#[test]
fn json_plane_samples_and_config_bundle() {
    let dir = workdir("json_planes");
    // bundled defaults: coarse sensor + a true extrinsics guess for init
    let bundle = dir.join("bundle.json");
    write(
        &bundle,
        r#"{
            "sensor": {
                "scan_sector_deg": [45.0, 315.0],
                "beam_resolution_deg": 0.25,
                "platform_sweep_deg": [0.0, 360.0],
                "platform_resolution_deg": 0.25,
                "scan_frequency_hz": 25.0,
                "range_noise_sigma_m": 0.0,
                "mount_height_m": 3.3
            },
            "extrinsics": {"roll_deg": -1.0, "pitch_deg": 0.0, "yaw_deg": 0.4,
                           "translation_mm": [10.0, 0.0, 100.0]}
        }"#,
    );
    let scene = dir.join("boards.json");
    write(&scene, r#"{"calibration_boards": 8}"#);
    let samples_csv = dir.join("planes.csv");
    let out = run(&[
        "simulate",
        scene.to_str().unwrap(),
        "--config",
        bundle.to_str().unwrap(),
        "--out",
        dir.join("scan.pcd").to_str().unwrap(),
        "--samples-out",
        samples_csv.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert_exit(&out, 0, "simulate with bundle");

    // convert the CSV rows into the JSON dataset schema
    let text = std::fs::read_to_string(&samples_csv).unwrap();
    let mut datasets: std::collections::BTreeMap<String, Vec<[f64; 3]>> = Default::default();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        datasets.entry(cols[0].to_string()).or_default().push([
            cols[1].parse().unwrap(),
            cols[2].parse().unwrap(),
            cols[3].parse().unwrap(),
        ]);
    }
    let json = serde_json::json!({
        "datasets": datasets
            .into_iter()
            .map(|(id, samples)| serde_json::json!({"id": id, "samples": samples}))
            .collect::<Vec<_>>()
    });
    let samples_json = dir.join("planes.json");
    write(&samples_json, &json.to_string());

    // calibrate from the JSON form; init comes from the bundle
    let result = dir.join("calibration.json");
    let out = run(&[
        "calibrate",
        samples_json.to_str().unwrap(),
        "--config",
        bundle.to_str().unwrap(),
        "--out",
        result.to_str().unwrap(),
    ]);
    assert_exit(&out, 0, "calibrate from json");
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    // noise-free recovery of the bundled (true) extrinsics is tight
    let roll = parsed["extrinsics"]["roll_deg"].as_f64().unwrap();
    assert!((roll - -1.0).abs() < 0.05, "roll {roll}");
}

#[test]
fn eval_without_overlap_exits_6() {
    let dir = workdir("no_overlap");
    let result = dir.join("result.json");
    write(
        &result,
        r#"{"schema_version": 1, "id": "mystery",
            "key_points": [[0,0,0],[1,0,0],[1,1,0],[0,1,0],
                           [0,0,1],[1,0,1],[1,1,1],[0,1,1]],
            "dims": [1,1,1], "extended_corners": [[false,false],[false,false],[false,false],[false,false]],
            "input_points": 1, "cropped_points": 1, "region_count": 1, "segment_count": 1,
            "timings": {"crop_s":0,"normals_s":0,"regions_s":0,"lines_s":0,"keypoints_s":0,"total_s":0}}"#,
    );
    let truth = dir.join("truth.json");
    write(
        &truth,
        r#"{"schema_version": 1, "annotations": [
            {"id": "someone_else", "key_points": [[0,0,0],[1,0,0],[1,1,0],[0,1,0],
             [0,0,1],[1,0,1],[1,1,1],[0,1,1]], "dims": [1,1,1], "size_class": "small"}
        ]}"#,
    );
    let out = run(&["eval", result.to_str().unwrap(), truth.to_str().unwrap()]);
    assert_exit(&out, 6, "no overlap");
}
