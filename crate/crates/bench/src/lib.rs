//! Fixtures shared by the benchmarks.

use finsleroid::harness::Scenario;
use finsleroid::spray::Local;
use finsleroid::BackgroundGeometry;

pub struct Fixture {
    pub scenario: Scenario,
    pub geom: BackgroundGeometry,
    pub local: Local,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// A fixed, admissible line element of a builtin scenario.
pub fn fixture(name: &str, dim: usize) -> Fixture {
    let scenario = Scenario::builtin(name, dim).expect("builtin scenario");
    let geom = scenario.geometry().expect("valid geometry");
    let x: Vec<f64> = (0..dim).map(|i| 0.1 * (i as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let y: Vec<f64> = (0..dim).map(|i| 0.7 - 0.3 * i as f64).collect();
    let local = Local::at(&geom, &x).expect("point in the domain");
    Fixture { scenario, geom, local, x, y }
}
