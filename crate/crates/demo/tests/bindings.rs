use serde_json::Value;
use subqubo_demo::{instance_json, pause_schedule_json, solve_json};

#[test]
fn schedule_curve_has_plateau() {
    let v: Value =
        serde_json::from_str(&pause_schedule_json(20.0, 10.0, 40.0, 100).unwrap()).unwrap();
    assert_eq!(v["sweeps"], 6000);
    assert_eq!(v["total_time"], 60.0);
    let curve = v["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 201);
    let at = |t: f64| {
        curve.iter().find(|p| p[0].as_f64() == Some(t)).unwrap()[1]
            .as_f64()
            .unwrap()
    };
    assert_eq!(at(30.0), 0.5);
    assert_eq!(at(60.0), 1.0);
    assert!(pause_schedule_json(20.0, 25.0, 10.0, 100).is_err());
}

#[test]
fn instance_matrix_is_upper_triangular() {
    let v: Value = serde_json::from_str(&instance_json(6, 50, 2).unwrap()).unwrap();
    let m = v["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 6);
    for (i, row) in m.iter().enumerate() {
        for (j, x) in row.as_array().unwrap().iter().enumerate() {
            let x = x.as_i64().unwrap();
            if j < i {
                assert_eq!(x, 0);
            } else if j == i {
                assert!(x < 0);
            }
        }
    }
    let counted: u64 = v["histogram"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b[1].as_u64().unwrap())
        .sum();
    assert_eq!(counted, 6);
    assert!(instance_json(1000, 10, 0).is_err());
}

#[test]
fn solve_returns_consistent_delta() {
    let text = solve_json(12, 100, 4, "tabu", 6, 1).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let d = v["delta"].as_u64().unwrap();
    assert_eq!(v["energy"].as_u64().unwrap(), d * d);
    assert_eq!(v["optimal_delta"], 0);
    let mut again: Value =
        serde_json::from_str(&solve_json(12, 100, 4, "tabu", 6, 1).unwrap()).unwrap();
    let mut first = v.clone();
    first.as_object_mut().unwrap().remove("wall_time");
    again.as_object_mut().unwrap().remove("wall_time");
    assert_eq!(first, again);
    assert!(solve_json(12, 100, 4, "quantum", 6, 1).is_err());
}
